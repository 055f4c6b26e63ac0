//! Dense symmetric linear algebra used by the spectral machinery.
//!
//! Everything here is deterministic: no randomized pivoting, no
//! parallel reductions, so repeated runs produce bit-identical output.
//! The eigensolver is the classic Householder tridiagonalization
//! followed by implicitly shifted QL (the EISPACK `tred2`/`tql2` pair),
//! written generically over the crate's [`Scalar`] trait.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigendecomposition of a real symmetric matrix.
///
/// `values` are ascending; column `j` of `vectors` is the unit eigenvector
/// for `values[j]`.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Array2<T>,
}

fn sign_like<T: Scalar>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Symmetric eigendecomposition via `tred2` + `tql2`.
///
/// The input is assumed symmetric; only its values are read (no symmetry
/// check is performed here — callers validate where the contract demands it).
pub fn sym_eigen<T: Scalar>(a: &Array2<T>) -> Result<SymEigen<T>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: Array2::zeros((0, 0)),
        });
    }
    let mut v = a.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;
    sort_eigen(&mut v, &mut d);
    Ok(SymEigen {
        values: d,
        vectors: v,
    })
}

// Householder reduction to tridiagonal form (EISPACK tred2, JAMA layout).
fn tred2<T: Scalar>(v: &mut Array2<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }

    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale = scale + d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = T::zero();
                v[[j, i]] = T::zero();
            }
        } else {
            // Generate the Householder vector.
            for k in 0..i {
                d[k] = d[k] / scale;
                h = h + d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = T::zero();
            }

            // Apply the similarity transformation to remaining columns.
            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in (j + 1)..i {
                    g = g + v[[k, j]] * d[k];
                    e[k] = e[k] + v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = v[[k, j]] - (f * e[k] + g * d[k]);
                    v[[k, j]] = upd;
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = T::zero();
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n.saturating_sub(1) {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g = g + v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    let upd = v[[k, j]] - g * d[k];
                    v[[k, j]] = upd;
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = T::zero();
    }
    v[[n - 1, n - 1]] = T::one();
    e[0] = T::zero();
}

// Tridiagonal QL with implicit shifts (EISPACK tql2, JAMA layout).
fn tql2<T: Scalar>(v: &mut Array2<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let two = T::one() + T::one();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                if iter > 80 {
                    return Err(Error::NoConvergence);
                }

                // Compute the implicit shift.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] = d[i] - h;
                }
                f = f + h;

                // Implicit QL transformation.
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v[[k, i + 1]];
                        v[[k, i + 1]] = s * v[[k, i]] + c * h;
                        v[[k, i]] = c * v[[k, i]] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }
    Ok(())
}

fn sort_eigen<T: Scalar>(v: &mut Array2<T>, d: &mut [T]) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("NaN eigenvalue"));
    let old_d = d.to_vec();
    let old_v = v.clone();
    for (new_col, &old_col) in order.iter().enumerate() {
        d[new_col] = old_d[old_col];
        for k in 0..n {
            v[[k, new_col]] = old_v[[k, old_col]];
        }
    }
}

/// A single Householder reflector `H = I - beta v v^T` chosen to map a
/// given nonzero vector `m` onto a multiple of the first coordinate axis.
///
/// Columns `1..n` of `H` then form an orthonormal basis of the hyperplane
/// `{u : m . u = 0}`; this realizes the constrained eigenproblems on the
/// measure-orthogonal subspace as ordinary symmetric problems of size `n-1`.
#[derive(Debug, Clone)]
pub struct Reflector<T> {
    v: Vec<T>,
    beta: T,
}

impl<T: Scalar> Reflector<T> {
    /// Build the reflector for the mass vector `m` (must be nonzero).
    pub fn for_mass_vector(m: &[T]) -> Result<Self> {
        let norm = m.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(Error::ZeroMassVector);
        }
        let mut v = m.to_vec();
        v[0] = v[0] + sign_like(norm, m[0]);
        let vtv = v.iter().map(|&x| x * x).sum::<T>();
        let beta = (T::one() + T::one()) / vtv;
        Ok(Reflector { v, beta })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Compress a symmetric `n x n` operator onto the complement:
    /// returns `(H A H)[1.., 1..]`, an `(n-1) x (n-1)` symmetric matrix.
    pub fn compress(&self, a: &Array2<T>) -> Array2<T> {
        let n = self.dim();
        assert_eq!(a.nrows(), n);
        assert_eq!(a.ncols(), n);
        // H A = A - beta v (v^T A)
        let mut vta = vec![T::zero(); n];
        for j in 0..n {
            let mut acc = T::zero();
            for i in 0..n {
                acc = acc + self.v[i] * a[[i, j]];
            }
            vta[j] = acc;
        }
        let mut ha = a.clone();
        for i in 0..n {
            let bvi = self.beta * self.v[i];
            for j in 0..n {
                ha[[i, j]] = ha[[i, j]] - bvi * vta[j];
            }
        }
        // (H A) H = HA - beta (HA v) v^T
        let mut hav = vec![T::zero(); n];
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc = acc + ha[[i, j]] * self.v[j];
            }
            hav[i] = acc;
        }
        let mut out = Array2::zeros((n - 1, n - 1));
        for i in 1..n {
            for j in 1..n {
                out[[i - 1, j - 1]] = ha[[i, j]] - self.beta * hav[i] * self.v[j];
            }
        }
        out
    }

    /// Lift a reduced vector `w` (length `n-1`) back to the full space:
    /// `u = H [0; w]`, which satisfies `m . u = 0`.
    pub fn lift(&self, w: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(w.len(), n - 1);
        let mut x = vec![T::zero(); n];
        x[1..].copy_from_slice(w);
        let vtx = self
            .v
            .iter()
            .zip(x.iter())
            .map(|(&a, &b)| a * b)
            .sum::<T>();
        for i in 0..n {
            x[i] = x[i] - self.beta * self.v[i] * vtx;
        }
        x
    }

    /// The explicit `n x (n-1)` orthonormal basis matrix (test hook).
    pub fn basis(&self) -> Array2<T> {
        let n = self.dim();
        let mut p = Array2::zeros((n, n - 1));
        for j in 1..n {
            let mut col = vec![T::zero(); n - 1];
            col[j - 1] = T::one();
            let lifted = self.lift(&col);
            for i in 0..n {
                p[[i, j - 1]] = lifted[i];
            }
        }
        p
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub struct SpdSolver<T> {
    lower: Array2<T>,
}

impl<T: Scalar> SpdSolver<T> {
    pub fn new(a: &Array2<T>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let mut l: Array2<T> = Array2::zeros((n, n));
        for j in 0..n {
            let mut diag = a[[j, j]];
            for k in 0..j {
                diag = diag - l[[j, k]] * l[[j, k]];
            }
            if diag <= T::zero() {
                return Err(Error::NotPositiveDefinite(j));
            }
            let dsqrt = diag.sqrt();
            l[[j, j]] = dsqrt;
            for i in (j + 1)..n {
                let mut acc = a[[i, j]];
                for k in 0..j {
                    acc = acc - l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = acc / dsqrt;
            }
        }
        Ok(SpdSolver { lower: l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lower.nrows();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc = acc - self.lower[[i, k]] * y[k];
            }
            y[i] = acc / self.lower[[i, i]];
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in (i + 1)..n {
                acc = acc - self.lower[[k, i]] * y[k];
            }
            y[i] = acc / self.lower[[i, i]];
        }
        y
    }
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix by eigendecomposition.
///
/// Eigenvalues with `|lambda| <= rel_cutoff * max|lambda|` are treated as zero.
pub fn pseudo_inverse_sym<T: Scalar>(a: &Array2<T>, rel_cutoff: T) -> Result<Array2<T>> {
    let eig = sym_eigen(a)?;
    let n = eig.values.len();
    let scale = eig
        .values
        .iter()
        .fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let cutoff = rel_cutoff * scale;
    let mut out = Array2::zeros((n, n));
    for (idx, &lam) in eig.values.iter().enumerate() {
        if lam.abs() <= cutoff {
            continue;
        }
        let inv = T::one() / lam;
        for i in 0..n {
            let vi = eig.vectors[[i, idx]];
            if vi == T::zero() {
                continue;
            }
            for j in 0..n {
                out[[i, j]] = out[[i, j]] + inv * vi * eig.vectors[[j, idx]];
            }
        }
    }
    Ok(out)
}

/// Singular values of a general square matrix, ascending, with the matching
/// right singular vectors as columns.
///
/// Computed through the eigendecomposition of `M^T M`; each singular value is
/// then re-evaluated as `|| M v ||`, which restores accuracy near zero (the
/// squared form alone floors at `sqrt(eps) * sigma_max`).
pub fn singular_values<T: Scalar>(m: &Array2<T>) -> Result<(Vec<T>, Array2<T>)> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut mtm = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let mut acc = T::zero();
            for k in 0..n {
                acc = acc + m[[k, i]] * m[[k, j]];
            }
            mtm[[i, j]] = acc;
            mtm[[j, i]] = acc;
        }
    }
    let eig = sym_eigen(&mtm)?;
    let mut sigmas = Vec::with_capacity(n);
    for idx in 0..n {
        let mut norm_sq = T::zero();
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc = acc + m[[i, j]] * eig.vectors[[j, idx]];
            }
            norm_sq = norm_sq + acc * acc;
        }
        sigmas.push(norm_sq.sqrt());
    }
    Ok((sigmas, eig.vectors))
}

/// Max-norm of `A x - lambda x`, a convenience for residual checks.
pub fn eigen_residual<T: Scalar>(a: &Array2<T>, x: &[T], lambda: T) -> T {
    let n = a.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        let mut acc = T::zero();
        for j in 0..n {
            acc = acc + a[[i, j]] * x[j];
        }
        worst = worst.max((acc - lambda * x[i]).abs());
    }
    worst
}

/// Dense symmetric matrix-vector product.
pub fn mat_vec<T: Scalar>(a: &Array2<T>, x: &[T]) -> Vec<T> {
    let n = a.nrows();
    let mut out = vec![T::zero(); n];
    for i in 0..n {
        let mut acc = T::zero();
        for j in 0..a.ncols() {
            acc = acc + a[[i, j]] * x[j];
        }
        out[i] = acc;
    }
    out
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Unweighted path-graph Laplacian, the hand oracle for the solver:
    /// eigenvalues 4 sin^2(pi k / 2n), k = 0..n-1.
    fn path_laplacian(n: usize) -> Array2<f64> {
        let mut a = Array2::zeros((n, n));
        for i in 0..n - 1 {
            a[[i, i]] += 1.0;
            a[[i + 1, i + 1]] += 1.0;
            a[[i, i + 1]] -= 1.0;
            a[[i + 1, i]] -= 1.0;
        }
        a
    }

    fn cycle_laplacian(n: usize) -> Array2<f64> {
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            let j = (i + 1) % n;
            a[[i, i]] += 1.0;
            a[[j, j]] += 1.0;
            a[[i, j]] -= 1.0;
            a[[j, i]] -= 1.0;
        }
        a
    }

    #[test]
    fn path_spectrum_matches_closed_form() {
        for n in [2usize, 3, 5, 8, 13] {
            let eig = sym_eigen(&path_laplacian(n)).unwrap();
            for k in 0..n {
                let expect = 4.0 * (std::f64::consts::PI * k as f64 / (2.0 * n as f64))
                    .sin()
                    .powi(2);
                assert_abs_diff_eq!(eig.values[k], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cycle_spectrum_has_double_eigenvalues() {
        let n = 8;
        let eig = sym_eigen(&cycle_laplacian(n)).unwrap();
        let expect = 2.0 * (1.0 - (2.0 * std::f64::consts::PI / n as f64).cos());
        assert_abs_diff_eq!(eig.values[1], expect, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.values[2], expect, epsilon = 1e-12);
        assert!(eig.values[3] > expect + 0.1);
    }

    #[test]
    fn one_by_one() {
        let a = Array2::from_elem((1, 1), 3.5);
        let eig = sym_eigen(&a).unwrap();
        assert_eq!(eig.values, vec![3.5]);
        assert_eq!(eig.vectors[[0, 0]], 1.0);
    }

    #[test]
    fn reflector_annihilates_mass_vector() {
        let m = [0.5, 0.25, 0.125, 0.125];
        let refl = Reflector::for_mass_vector(&m).unwrap();
        let p = refl.basis();
        // P^T m = 0 and P^T P = I.
        for j in 0..3 {
            let mut acc = 0.0;
            for i in 0..4 {
                acc += p[[i, j]] * m[i];
            }
            assert_abs_diff_eq!(acc, 0.0, epsilon = 1e-15);
        }
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = 0.0;
                for i in 0..4 {
                    acc += p[[i, a]] * p[[i, b]];
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(acc, expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn compress_agrees_with_explicit_basis() {
        let m = [0.4, 0.3, 0.2, 0.1];
        let refl = Reflector::for_mass_vector(&m).unwrap();
        let a = path_laplacian(4);
        let b = refl.compress(&a);
        let p = refl.basis();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for r in 0..4 {
                    for c in 0..4 {
                        acc += p[[r, i]] * a[[r, c]] * p[[c, j]];
                    }
                }
                assert_abs_diff_eq!(b[[i, j]], acc, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn spd_solver_roundtrip() {
        // Pinned path Laplacian (drop last row/col) is positive definite.
        let full = path_laplacian(4);
        let mut a = Array2::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                a[[i, j]] = full[[i, j]];
            }
        }
        let solver = SpdSolver::new(&a).unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let b = mat_vec(&a, &x_true);
        let x = solver.solve(&b);
        for i in 0..3 {
            assert_abs_diff_eq!(x[i], x_true[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn spd_solver_rejects_indefinite() {
        let a = Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(SpdSolver::new(&a).is_err());
    }

    #[test]
    fn pseudo_inverse_of_laplacian() {
        let q = path_laplacian(5);
        let lp = pseudo_inverse_sym(&q, 1e-12).unwrap();
        // Q L+ Q = Q
        let qlq = q.dot(&lp).dot(&q);
        for i in 0..5 {
            for j in 0..5 {
                assert_abs_diff_eq!(qlq[[i, j]], q[[i, j]], epsilon = 1e-10);
            }
        }
        // rows of L+ sum to zero (kernel alignment with constants)
        for i in 0..5 {
            let s: f64 = (0..5).map(|j| lp[[i, j]]).sum();
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        }
        // symmetry
        for i in 0..5 {
            for j in 0..5 {
                assert_abs_diff_eq!(lp[[i, j]], lp[[j, i]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn singular_values_detect_rank_deficiency() {
        // Rank-2 3x3 matrix: third row = row0 + row1.
        let m = Array2::from_shape_vec(
            (3, 3),
            vec![1.0, 2.0, 0.0, 0.5, -1.0, 3.0, 1.5, 1.0, 3.0],
        )
        .unwrap();
        let (sigmas, vecs) = singular_values(&m).unwrap();
        assert!(sigmas[0] < 1e-12 * sigmas[2], "{:?}", sigmas);
        assert!(sigmas[1] > 1e-3);
        // Null vector maps to ~0.
        let v: Vec<f64> = (0..3).map(|i| vecs[[i, 0]]).collect();
        let mv = mat_vec(&m, &v);
        assert!(norm2(&mv) < 1e-13);
    }

    proptest! {
        #[test]
        fn random_symmetric_eigen(entries in prop::collection::vec(-10.0f64..10.0, 1..=78)) {
            // Interpret the entries as the lower triangle of an n x n matrix.
            let mut n = 1;
            while (n + 1) * (n + 2) / 2 <= entries.len() { n += 1; }
            let mut a = Array2::zeros((n, n));
            let mut it = entries.into_iter();
            for i in 0..n {
                for j in 0..=i {
                    let x = it.next().unwrap_or(0.0);
                    a[[i, j]] = x;
                    a[[j, i]] = x;
                }
            }
            let eig = sym_eigen(&a).unwrap();
            let scale = eig.values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            // Residuals and orthonormality.
            for idx in 0..n {
                let col: Vec<f64> = (0..n).map(|i| eig.vectors[[i, idx]]).collect();
                prop_assert!(eigen_residual(&a, &col, eig.values[idx]) <= 1e-11 * scale);
                for jdx in 0..=idx {
                    let col2: Vec<f64> = (0..n).map(|i| eig.vectors[[i, jdx]]).collect();
                    let expect = if idx == jdx { 1.0 } else { 0.0 };
                    prop_assert!((dot(&col, &col2) - expect).abs() < 1e-12);
                }
            }
            // Trace equals eigenvalue sum.
            let trace: f64 = (0..n).map(|i| a[[i, i]]).sum();
            let sum: f64 = eig.values.iter().sum();
            prop_assert!((trace - sum).abs() <= 1e-10 * scale.max(1.0) * n as f64);
        }
    }
}
