//! Kirchhoff matrices and the discrete eigenproblem generalized by a
//! discrete measure.
//!
//! A function `f` on the vertex set is an eigenfunction with respect to the
//! measure `mu_N` when `sum_q {Qf}(q) g(q) = lambda sum_q f(q) g(q)` for all
//! `g` orthogonal to `mu_N`. Writing `m` for the mass vector, this is the
//! symmetric eigenproblem of `Q` restricted to the hyperplane `{m . u = 0}`,
//! which a single Householder reflector turns into an ordinary symmetric
//! problem of size `N - 1`.

use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::cpa::{dirichlet_energy, norm_l2_dx_n, CpaFunction};
use crate::error::{Error, Result};
use crate::linalg::{self, Reflector, SpdSolver};
use crate::measure::DiscreteMeasure;
use crate::model::{same_model, Model};
use crate::scalar::Scalar;

/// Eigenvalues within `1e-8 * max(lambda, 1)` of each other form one
/// multiplicity cluster.
pub const CLUSTER_REL_TOL: f64 = 1e-8;

/// Problems up to this reduced dimension use the dense solver; larger ones
/// switch to inverse subspace iteration for the smallest eigenvalues.
pub const DENSE_EIGEN_LIMIT: usize = 2048;

/// The weighted graph Laplacian of a model: diagonal is the weighted degree,
/// off-diagonal entries are `-w_ij` for adjacent vertices.
#[derive(Debug, Clone)]
pub struct KirchhoffMatrix<T> {
    model: Arc<Model<T>>,
    pub matrix: Array2<T>,
}

impl<T: Scalar> KirchhoffMatrix<T> {
    pub fn model(&self) -> &Arc<Model<T>> {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    /// `max_i sum_j |Q_ij|`, the scale for residual tolerances.
    pub fn norm_inf(&self) -> T {
        let n = self.n();
        let mut worst = T::zero();
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc = acc + self.matrix[[i, j]].abs();
            }
            worst = worst.max(acc);
        }
        worst
    }
}

pub fn kirchhoff_matrix<T: Scalar>(model: &Arc<Model<T>>) -> KirchhoffMatrix<T> {
    let n = model.n();
    let mut q = Array2::zeros((n, n));
    for e in model.edges() {
        q[[e.a, e.a]] = q[[e.a, e.a]] + e.weight;
        q[[e.b, e.b]] = q[[e.b, e.b]] + e.weight;
        q[[e.a, e.b]] = q[[e.a, e.b]] - e.weight;
        q[[e.b, e.a]] = q[[e.b, e.a]] - e.weight;
    }
    KirchhoffMatrix {
        model: Arc::clone(model),
        matrix: q,
    }
}

/// Vertexwise product `Q f`; by the relation between `Q` and the continuous
/// Laplacian these are the atom weights of `Delta(f)`.
pub fn apply_q<T: Scalar>(q: &KirchhoffMatrix<T>, f: &CpaFunction<T>) -> Result<CpaFunction<T>> {
    if !same_model(&q.model, f.model()) {
        return Err(Error::ModelMismatch);
    }
    let out = linalg::mat_vec(&q.matrix, f.values());
    CpaFunction::new(Arc::clone(&q.model), out)
}

/// One eigenvalue cluster: the value, its multiplicity, and an orthonormal
/// basis of eigenfunctions.
#[derive(Debug, Clone)]
pub struct Cluster<T> {
    pub lambda: T,
    pub scaled: T,
    pub multiplicity: usize,
    pub functions: Vec<CpaFunction<T>>,
}

/// Clustered spectrum of a model's eigenproblem.
///
/// Eigenfunctions are l2-normalized against `dx_N`, orthogonal to the
/// defining measure, and deterministically oriented (the entry of largest
/// magnitude, lowest index on ties, is positive).
#[derive(Debug, Clone)]
pub struct SpectralResult<T> {
    model: Arc<Model<T>>,
    pub scale_n: usize,
    pub clusters: Vec<Cluster<T>>,
}

impl<T: Scalar> SpectralResult<T> {
    pub(crate) fn from_parts(
        model: Arc<Model<T>>,
        scale_n: usize,
        clusters: Vec<Cluster<T>>,
    ) -> Self {
        SpectralResult {
            model,
            scale_n,
            clusters,
        }
    }

    pub fn model(&self) -> &Arc<Model<T>> {
        &self.model
    }

    /// All eigenfunctions of clusters `1..=upto` flattened in order.
    pub fn functions_below(&self, upto: usize) -> Vec<&CpaFunction<T>> {
        self.clusters[..upto]
            .iter()
            .flat_map(|c| c.functions.iter())
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.scale_n,
            "clusters": self.clusters.iter().map(|c| json!({
                "lambda": c.lambda.f64(),
                "scaled": c.scaled.f64(),
                "multiplicity": c.multiplicity,
                "eigenfunctions": c.functions.iter()
                    .map(|f| f.values().iter().map(|v| v.f64()).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

fn cluster_ranges<T: Scalar>(values: &[T]) -> Vec<std::ops::Range<usize>> {
    let tol = T::tol(CLUSTER_REL_TOL);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let boundary = i == values.len() || {
            let gap = values[i] - values[start];
            gap > tol * values[i].abs().max(T::one())
        };
        if boundary {
            out.push(start..i);
            start = i;
        }
    }
    out
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

/// Solve the eigenproblem of `Q` with respect to `mu_N` and return the `k`
/// smallest distinct eigenvalues with their eigenspaces.
///
/// The mass vector may carry any nonzero scale; the constrained subspace
/// depends on it only up to scale.
pub fn eigen_mu<T: Scalar>(
    q: &KirchhoffMatrix<T>,
    mu: &DiscreteMeasure<T>,
    k: usize,
) -> Result<SpectralResult<T>> {
    eigen_mu_with_limit(q, mu, k, DENSE_EIGEN_LIMIT)
}

/// As [`eigen_mu`], with an explicit dense-solver size threshold.
pub fn eigen_mu_with_limit<T: Scalar>(
    q: &KirchhoffMatrix<T>,
    mu: &DiscreteMeasure<T>,
    k: usize,
    dense_limit: usize,
) -> Result<SpectralResult<T>> {
    if !same_model(&q.model, mu.model()) {
        return Err(Error::ModelMismatch);
    }
    let n = q.n();
    let dim = n - 1;
    if k > dim {
        return Err(Error::TooManyClusters {
            requested: k,
            available: dim,
        });
    }
    if mu.masses().iter().all(|&m| m == T::zero()) {
        return Err(Error::ZeroMassVector);
    }
    let reflector = Reflector::for_mass_vector(mu.masses())?;
    let reduced = reflector.compress(&q.matrix);

    let (values, vectors, ranges) = if dim <= dense_limit {
        let eig = linalg::sym_eigen(&reduced)?;
        let ranges = cluster_ranges(&eig.values);
        (eig.values, eig.vectors, ranges)
    } else {
        smallest_clusters(&reduced, k)?
    };

    let scale_t = T::from_usize(n).expect("count");
    let mut clusters = Vec::with_capacity(k);
    for range in ranges.into_iter().take(k) {
        let members: Vec<usize> = range.clone().collect();
        let lambda = members.iter().map(|&i| values[i]).sum::<T>()
            / T::from_usize(members.len()).expect("count");
        let mut functions = Vec::with_capacity(members.len());
        for &idx in &members {
            let col: Vec<T> = (0..dim).map(|r| vectors[[r, idx]]).collect();
            let mut lifted = reflector.lift(&col);
            // l2 normalization against dx_N: Euclidean norm sqrt(N).
            let norm = linalg::norm2(&lifted);
            let target = scale_t.sqrt();
            for v in lifted.iter_mut() {
                *v = *v * target / norm;
            }
            orient(&mut lifted);
            functions.push(CpaFunction::new(Arc::clone(&q.model), lifted)?);
        }
        clusters.push(Cluster {
            lambda,
            scaled: scale_t * lambda,
            multiplicity: members.len(),
            functions,
        });
    }

    Ok(SpectralResult {
        model: Arc::clone(&q.model),
        scale_n: n,
        clusters,
    })
}

/// Eigenvalues, eigenvectors, and the cluster index ranges over them.
type ClusteredPairs<T> = (Vec<T>, Array2<T>, Vec<std::ops::Range<usize>>);

/// Iterative smallest-eigenpair path: Cholesky-based inverse subspace
/// iteration with Rayleigh-Ritz extraction, block grown until `k` clusters
/// are certified complete.
fn smallest_clusters<T: Scalar>(b: &Array2<T>, k: usize) -> Result<ClusteredPairs<T>> {
    let dim = b.nrows();
    let mut block = (2 * k + 8).min(dim);
    loop {
        let (values, vectors) = inverse_subspace_smallest(b, block)?;
        let mut ranges = cluster_ranges(&values);
        let saturated = block == dim;
        if !saturated {
            // The trailing cluster may continue past the block; drop it.
            ranges.pop();
        }
        if ranges.len() >= k || saturated {
            return Ok((values, vectors, ranges));
        }
        block = (block * 2).min(dim);
    }
}

fn inverse_subspace_smallest<T: Scalar>(b: &Array2<T>, block: usize) -> Result<(Vec<T>, Array2<T>)> {
    let dim = b.nrows();
    let solver = SpdSolver::new(b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let mut x: Array2<T> = Array2::zeros((dim, block));
    for i in 0..dim {
        for j in 0..block {
            x[[i, j]] = T::of(rng.gen_range(-0.5..0.5));
        }
    }
    orthonormalize_columns(&mut x);

    let mut previous: Vec<T> = vec![T::zero(); block];
    for iter in 0..500 {
        // Y = B^{-1} X, column by column.
        let mut y: Array2<T> = Array2::zeros((dim, block));
        for j in 0..block {
            let col: Vec<T> = (0..dim).map(|i| x[[i, j]]).collect();
            let sol = solver.solve(&col);
            for i in 0..dim {
                y[[i, j]] = sol[i];
            }
        }
        orthonormalize_columns(&mut y);
        // Rayleigh-Ritz on the iterated basis.
        let by = b.dot(&y);
        let mut small = Array2::zeros((block, block));
        for a in 0..block {
            for c in 0..block {
                let mut acc = T::zero();
                for i in 0..dim {
                    acc = acc + y[[i, a]] * by[[i, c]];
                }
                small[[a, c]] = acc;
            }
        }
        let eig = linalg::sym_eigen(&small)?;
        x = y.dot(&eig.vectors);

        let converged = iter > 2
            && eig
                .values
                .iter()
                .zip(previous.iter())
                .all(|(&now, &before)| (now - before).abs() <= T::tol(1e-13) * now.abs().max(T::one()));
        previous = eig.values.clone();
        if converged {
            return Ok((previous, x));
        }
    }
    Err(Error::NoConvergence)
}

fn orthonormalize_columns<T: Scalar>(x: &mut Array2<T>) {
    let (rows, cols) = (x.nrows(), x.ncols());
    for j in 0..cols {
        for prev in 0..j {
            let mut proj = T::zero();
            for i in 0..rows {
                proj = proj + x[[i, prev]] * x[[i, j]];
            }
            for i in 0..rows {
                x[[i, j]] = x[[i, j]] - proj * x[[i, prev]];
            }
        }
        let mut norm = T::zero();
        for i in 0..rows {
            norm = norm + x[[i, j]] * x[[i, j]];
        }
        let norm = norm.sqrt();
        if norm > T::zero() {
            for i in 0..rows {
                x[[i, j]] = x[[i, j]] / norm;
            }
        }
    }
}

/// Residual of the defining identity
/// `{Qf}(q) = lambda (f(q) - N (int f dx_N) mu_N(q))`
/// over every eigenpair of `result`; for the uniform measure the ordinary
/// eigenvector residual `Qf - lambda f` is checked as well.
///
/// Inputs whose eigenfunctions are not `mu_N`-orthogonal are rejected.
pub fn verify_equivalent_laplacian<T: Scalar>(
    result: &SpectralResult<T>,
    q: &KirchhoffMatrix<T>,
    mu: &DiscreteMeasure<T>,
) -> Result<T> {
    if !same_model(&q.model, mu.model()) || !same_model(&q.model, result.model()) {
        return Err(Error::ModelMismatch);
    }
    let n = q.n();
    let n_t = T::from_usize(n).expect("count");
    let uniform = mu.is_uniform();
    let mut worst = T::zero();
    for cluster in &result.clusters {
        for f in &cluster.functions {
            let mu_integral = f.integral(mu)?;
            if mu_integral.abs() > T::tol(1e-8) * mu.total_variation().max(T::one()) {
                return Err(Error::NotMuOrthogonal(mu_integral.f64()));
            }
            let qf = linalg::mat_vec(&q.matrix, f.values());
            let sum_f: T = f.values().iter().copied().sum();
            for i in 0..n {
                let fitted = cluster.lambda * (f.value(i) - sum_f * mu.mass(i));
                worst = worst.max((qf[i] - fitted).abs());
                if uniform {
                    let plain = qf[i] - cluster.lambda * f.value(i)
                        + cluster.lambda * sum_f / n_t;
                    // For dx_N the integral term collapses into the plain
                    // eigenvector identity.
                    let _ = plain;
                    worst = worst.max((qf[i] - cluster.lambda * f.value(i)).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Project away a constant shift and an orthonormal family, then normalize:
/// the output has unit l2 norm, is orthogonal to the measure, and is
/// l2-orthogonal to every basis element.
///
/// The constant `int f d mu_N` is removed before the basis projections, so
/// the stated orthogonality holds exactly even when the basis functions are
/// not l2-orthogonal to constants (which happens for nonuniform measures).
pub fn deflate<T: Scalar>(
    f: &CpaFunction<T>,
    basis: &[&CpaFunction<T>],
    mu: &DiscreteMeasure<T>,
) -> Result<CpaFunction<T>> {
    if !same_model(f.model(), mu.model()) {
        return Err(Error::ModelMismatch);
    }
    let n = f.values().len();
    let n_t = T::from_usize(n).expect("count");
    // Basis contract: pairwise l2-orthonormal and mu_N-orthogonal.
    for (i, h) in basis.iter().enumerate() {
        if !same_model(h.model(), f.model()) {
            return Err(Error::ModelMismatch);
        }
        if h.integral(mu)?.abs() > T::tol(1e-8) * mu.total_variation().max(T::one()) {
            return Err(Error::BadBasis);
        }
        for (j, h2) in basis.iter().enumerate().take(i + 1) {
            let prod = linalg::dot(h.values(), h2.values()) / n_t;
            let expect = if i == j { T::one() } else { T::zero() };
            if (prod - expect).abs() > T::tol(1e-8) {
                return Err(Error::BadBasis);
            }
        }
    }

    let shift = f.integral(mu)?;
    let mut g: Vec<T> = f.values().iter().map(|&v| v - shift).collect();
    for h in basis {
        let coeff = linalg::dot(&g, h.values()) / n_t;
        for (gi, &hi) in g.iter_mut().zip(h.values()) {
            *gi = *gi - coeff * hi;
        }
    }
    let norm = (linalg::dot(&g, &g) / n_t).sqrt();
    let f_scale = norm_l2_dx_n(f).max(T::one());
    if norm <= T::tol(1e-12) * f_scale {
        return Err(Error::DeflationDegenerate);
    }
    for gi in g.iter_mut() {
        *gi = *gi / norm;
    }
    CpaFunction::new(Arc::clone(f.model()), g)
}

/// Outcome of the variational minimum check.
#[derive(Debug, Clone)]
pub struct RayleighCheck<T> {
    /// Every trial quotient stayed above the cluster's scaled eigenvalue.
    pub passed: bool,
    pub min_quotient: T,
    pub target: T,
    /// Worst relative gap of eigenfunction quotients from the target.
    pub equality_gap: T,
    pub trials: usize,
}

/// Empirical check that `N lambda_{m}` is the minimum of the Dirichlet/l2
/// quotient over functions orthogonal to the measure and to all clusters
/// below `m`: random deflated trials must sit above the eigenvalue, and the
/// cluster's own eigenfunctions must attain it.
pub fn rayleigh_min_check<T: Scalar>(
    result: &SpectralResult<T>,
    q: &KirchhoffMatrix<T>,
    mu: &DiscreteMeasure<T>,
    m_index: usize,
    trials: usize,
    seed: u64,
) -> Result<RayleighCheck<T>> {
    if !same_model(&q.model, mu.model()) {
        return Err(Error::ModelMismatch);
    }
    if m_index == 0 || m_index > result.clusters.len() {
        return Err(Error::TooManyClusters {
            requested: m_index,
            available: result.clusters.len(),
        });
    }
    let basis = result.functions_below(m_index - 1);
    let n = q.n();
    if basis.len() + 1 >= n {
        return Err(Error::EmptyComplement);
    }
    let target = result.clusters[m_index - 1].scaled;
    let rel = T::of(1e-8);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_quotient = T::infinity();
    for _ in 0..trials {
        let mut attempt = 0;
        let g = loop {
            let values: Vec<T> = (0..n).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
            let f = CpaFunction::new(Arc::clone(&q.model), values)?;
            match deflate(&f, &basis, mu) {
                Ok(g) => break g,
                Err(Error::DeflationDegenerate) if attempt < 5 => attempt += 1,
                Err(e) => return Err(e),
            }
        };
        let norm = norm_l2_dx_n(&g);
        let quotient = dirichlet_energy(&g) / (norm * norm);
        min_quotient = min_quotient.min(quotient);
    }
    let passed = min_quotient >= target * (T::one() - rel);

    let mut equality_gap = T::zero();
    for h in &result.clusters[m_index - 1].functions {
        let norm = norm_l2_dx_n(h);
        let quotient = dirichlet_energy(h) / (norm * norm);
        equality_gap = equality_gap.max((quotient - target).abs() / target);
    }

    Ok(RayleighCheck {
        passed: passed && equality_gap <= rel,
        min_quotient,
        target,
        equality_gap,
        trials,
    })
}
