//! The j-function, the measure kernel `g_nu`, and the discrete integral
//! operator that inverts the Kirchhoff matrix up to scale and a measure
//! correction.
//!
//! `j_z(x, y)` is the potential with vertex Laplacian `e_y - e_z` pinned to
//! zero at `z`. Averaging over `z` against a unit-mass measure `nu` and
//! subtracting the constant `C_nu` gives `g_nu`, which is `nu`-orthogonal in
//! each variable. Two independent routes compute `j`: a pinned SPD solve and
//! the four-point formula through the Laplacian pseudo-inverse; the tests
//! hold them against each other.

use std::fmt::Write as _;
use std::sync::Arc;

use ndarray::Array2;

use crate::cpa::CpaFunction;
use crate::error::{Error, Result};
use crate::laplacian::{Cluster, KirchhoffMatrix, SpectralResult, CLUSTER_REL_TOL};
use crate::linalg::{self, Reflector, SpdSolver};
use crate::measure::DiscreteMeasure;
use crate::model::{same_model, Model};
use crate::scalar::Scalar;

/// Relative eigenvalue cutoff identifying the Laplacian's zero mode.
pub const PSEUDOINVERSE_CUTOFF: f64 = 1e-12;

/// Solve `Q u = e_y - e_z` pinned by `u(z) = 0`: the j-function `j_z(., y)`
/// as a piecewise affine function of the first argument.
pub fn j_function<T: Scalar>(
    model: &Arc<Model<T>>,
    z: usize,
    y: usize,
) -> Result<CpaFunction<T>> {
    let n = model.n();
    if z >= n {
        return Err(Error::NotAVertex(format!("z = {z}")));
    }
    if y >= n {
        return Err(Error::NotAVertex(format!("y = {y}")));
    }
    if z == y {
        return CpaFunction::new(Arc::clone(model), vec![T::zero(); n]);
    }
    let q = crate::laplacian::kirchhoff_matrix(model);
    j_via_pinned_solve(&q, z, y)
}

fn j_via_pinned_solve<T: Scalar>(
    q: &KirchhoffMatrix<T>,
    z: usize,
    y: usize,
) -> Result<CpaFunction<T>> {
    let n = q.n();
    // Delete row/column z; the remaining principal submatrix is positive
    // definite on a connected model.
    let keep: Vec<usize> = (0..n).filter(|&i| i != z).collect();
    let mut pinned = Array2::zeros((n - 1, n - 1));
    for (ri, &i) in keep.iter().enumerate() {
        for (rj, &j) in keep.iter().enumerate() {
            pinned[[ri, rj]] = q.matrix[[i, j]];
        }
    }
    let solver = SpdSolver::new(&pinned)?;
    let mut rhs = vec![T::zero(); n - 1];
    let y_reduced = keep.iter().position(|&i| i == y).expect("y != z");
    rhs[y_reduced] = T::one();
    let sol = solver.solve(&rhs);
    let mut values = vec![T::zero(); n];
    for (ri, &i) in keep.iter().enumerate() {
        values[i] = sol[ri];
    }
    CpaFunction::new(Arc::clone(q.model()), values)
}

/// Moore-Penrose pseudo-inverse of the Kirchhoff matrix.
pub fn pseudoinverse_kernel<T: Scalar>(q: &KirchhoffMatrix<T>) -> Result<Array2<T>> {
    linalg::pseudo_inverse_sym(&q.matrix, T::of(PSEUDOINVERSE_CUTOFF))
}

/// The j-function evaluated through the pseudo-inverse four-point identity:
/// `j_z(x, y) = L+_{xy} - L+_{xz} - L+_{zy} + L+_{zz}`.
pub fn j_from_pseudoinverse<T: Scalar>(lplus: &Array2<T>, z: usize, x: usize, y: usize) -> T {
    lplus[[x, y]] - lplus[[x, z]] - lplus[[z, y]] + lplus[[z, z]]
}

/// The Green's kernel of a discrete measure, tabulated on vertex pairs.
#[derive(Debug, Clone)]
pub struct KernelTable<T> {
    model: Arc<Model<T>>,
    nu: DiscreteMeasure<T>,
    /// `g[i][j] = g_nu(q_i, q_j)`.
    pub table: Array2<T>,
    pub c_nu: T,
}

impl<T: Scalar> KernelTable<T> {
    pub fn model(&self) -> &Arc<Model<T>> {
        &self.model
    }

    pub fn nu(&self) -> &DiscreteMeasure<T> {
        &self.nu
    }

    /// CSV export: `C_nu` in the header comment, vertex ids as row/column
    /// labels.
    pub fn to_csv(&self) -> String {
        let n = self.model.n();
        let mut out = String::new();
        let _ = writeln!(out, "# green_kernel c_nu={}", self.c_nu.f64());
        let _ = write!(out, "vertex");
        for j in 0..n {
            let _ = write!(out, ",{j}");
        }
        let _ = writeln!(out);
        for i in 0..n {
            let _ = write!(out, "{i}");
            for j in 0..n {
                let _ = write!(out, ",{}", self.table[[i, j]].f64());
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// Assemble `g_nu` from the pseudo-inverse:
/// `j_nu(x, y) = L+_{xy} - a_x - a_y + c` with `a = L+ nu`,
/// `c = sum_z nu_z L+_{zz}`, and `C_nu = c - nu . a`.
///
/// The anchor-independence of `C_nu` is verified across all anchors.
pub fn kernel_table<T: Scalar>(
    model: &Arc<Model<T>>,
    nu: &DiscreteMeasure<T>,
) -> Result<KernelTable<T>> {
    if !same_model(model, nu.model()) {
        return Err(Error::ModelMismatch);
    }
    let total = nu.total_mass();
    if (total - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::MassNotOne(total.f64()));
    }
    let n = model.n();
    let q = crate::laplacian::kirchhoff_matrix(model);
    let lplus = pseudoinverse_kernel(&q)?;
    let a = linalg::mat_vec(&lplus, nu.masses());
    let c: T = (0..n).map(|z| nu.mass(z) * lplus[[z, z]]).sum();
    let nu_dot_a = linalg::dot(nu.masses(), &a);
    let c_nu = c - nu_dot_a;

    let mut table = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            // j_nu minus C_nu collapses to this four-term expression.
            table[[i, j]] = lplus[[i, j]] - a[i] - a[j] + nu_dot_a;
        }
    }

    // Anchor independence: C(y) = sum_i nu_i j_nu(i, y) must not vary with y.
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for y in 0..n {
        let mut acc = T::zero();
        for i in 0..n {
            acc = acc + nu.mass(i) * (lplus[[i, y]] - a[i] - a[y] + c);
        }
        lo = lo.min(acc);
        hi = hi.max(acc);
    }
    // Roundoff in the pseudo-inverse grows with the conditioning, so the
    // spread bound scales with it (still 1e-9 for f64 at desk sizes).
    let lplus_scale = (0..n).fold(T::zero(), |acc, i| {
        acc.max((0..n).map(|j| lplus[[i, j]].abs()).sum())
    });
    let n_t = T::from_usize(n).expect("count");
    let spread_tol = T::tol(1e-9).max(
        T::epsilon() * q.norm_inf() * lplus_scale * n_t * T::of(10.0),
    );
    if hi - lo > spread_tol {
        return Err(Error::Config(format!(
            "kernel constant varies with the anchor by {}",
            (hi - lo).f64()
        )));
    }

    Ok(KernelTable {
        model: Arc::clone(model),
        nu: nu.clone(),
        table,
        c_nu,
    })
}

/// The discrete integral operator: `phi(h)(q_i) = (1/N) sum_j g(q_i, q_j) h(q_j)`,
/// extended piecewise affine. Its image is orthogonal to `nu`.
pub fn phi_n<T: Scalar>(
    table: &KernelTable<T>,
    mu: &DiscreteMeasure<T>,
    h: &CpaFunction<T>,
) -> Result<CpaFunction<T>> {
    require_matching(table, mu)?;
    if !same_model(h.model(), &table.model) {
        return Err(Error::ModelMismatch);
    }
    let n = table.model.n();
    let n_t = T::from_usize(n).expect("count");
    let mut out = vec![T::zero(); n];
    for i in 0..n {
        let mut acc = T::zero();
        for j in 0..n {
            acc = acc + table.table[[i, j]] * h.value(j);
        }
        out[i] = acc / n_t;
    }
    CpaFunction::new(Arc::clone(&table.model), out)
}

fn require_matching<T: Scalar>(table: &KernelTable<T>, mu: &DiscreteMeasure<T>) -> Result<()> {
    if !same_model(&table.model, mu.model()) {
        return Err(Error::ModelMismatch);
    }
    let agrees = table
        .nu
        .masses()
        .iter()
        .zip(mu.masses())
        .all(|(&a, &b)| (a - b).abs() <= T::tol(1e-12));
    if !agrees {
        return Err(Error::ModelMismatch);
    }
    Ok(())
}

/// Max-norm residual of the inversion identity
/// `{Q phi(f)}(q) = f(q)/N - (int f dx_N) mu_N(q)`.
pub fn verify_laplacian_inverse<T: Scalar>(
    q: &KirchhoffMatrix<T>,
    table: &KernelTable<T>,
    mu: &DiscreteMeasure<T>,
    f: &CpaFunction<T>,
) -> Result<T> {
    require_matching(table, mu)?;
    if !same_model(q.model(), &table.model) || !same_model(f.model(), &table.model) {
        return Err(Error::ModelMismatch);
    }
    let n = q.n();
    let n_t = T::from_usize(n).expect("count");
    let phi_f = phi_n(table, mu, f)?;
    let q_phi = linalg::mat_vec(&q.matrix, phi_f.values());
    let mean = f.mean_dx_n();
    let mut worst = T::zero();
    for i in 0..n {
        let expect = f.value(i) / n_t - mean * mu.mass(i);
        worst = worst.max((q_phi[i] - expect).abs());
    }
    Ok(worst)
}

/// Spectrum of the integral operator: the `k` largest eigenvalues `alpha`
/// with eigenfunctions, compressed onto the measure-orthogonal subspace with
/// the same reflector as the Laplacian eigenproblem.
///
/// In the returned clusters `lambda` holds `alpha` and `scaled` holds
/// `1 / (N alpha)`, the scaled Laplacian eigenvalue it corresponds to under
/// reciprocity.
pub fn eigen_phi<T: Scalar>(
    table: &KernelTable<T>,
    mu: &DiscreteMeasure<T>,
    k: usize,
) -> Result<SpectralResult<T>> {
    require_matching(table, mu)?;
    let n = table.model.n();
    let dim = n - 1;
    if k > dim {
        return Err(Error::TooManyClusters {
            requested: k,
            available: dim,
        });
    }
    let n_t = T::from_usize(n).expect("count");
    let reflector = Reflector::for_mass_vector(mu.masses())?;
    let phi_matrix = table.table.mapv(|x| x / n_t);
    let reduced = reflector.compress(&phi_matrix);
    let eig = linalg::sym_eigen(&reduced)?;

    // Walk alphas from the top down, grouping relative clusters.
    let tol = T::tol(CLUSTER_REL_TOL);
    let mut clusters: Vec<Cluster<T>> = Vec::new();
    let mut idx = dim;
    while idx > 0 && clusters.len() < k {
        let top = eig.values[idx - 1];
        let mut members = Vec::new();
        while idx > 0 {
            let val = eig.values[idx - 1];
            if (top - val).abs() <= tol * top.abs().max(T::min_positive_value()) {
                members.push(idx - 1);
                idx -= 1;
            } else {
                break;
            }
        }
        let alpha = members.iter().map(|&i| eig.values[i]).sum::<T>()
            / T::from_usize(members.len()).expect("count");
        let mut functions = Vec::with_capacity(members.len());
        for &col in &members {
            let v: Vec<T> = (0..dim).map(|r| eig.vectors[[r, col]]).collect();
            let mut lifted = reflector.lift(&v);
            let norm = linalg::norm2(&lifted);
            let target = n_t.sqrt();
            for x in lifted.iter_mut() {
                *x = *x * target / norm;
            }
            orient(&mut lifted);
            functions.push(CpaFunction::new(Arc::clone(&table.model), lifted)?);
        }
        clusters.push(Cluster {
            lambda: alpha,
            scaled: T::one() / (n_t * alpha),
            multiplicity: members.len(),
            functions,
        });
    }

    Ok(SpectralResult::from_parts(
        Arc::clone(&table.model),
        n,
        clusters,
    ))
}

fn orient<T: Scalar>(values: &mut [T]) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.abs() > values[best].abs() {
            best = i;
        }
    }
    if values[best] < T::zero() {
        for v in values.iter_mut() {
            *v = -*v;
        }
    }
}
