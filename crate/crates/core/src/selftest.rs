//! Randomized exact-identity suites over the built-in graph corpus.
//!
//! Each suite hammers one identity the theory makes exact: the kernel
//! inversion formula, eigenvalue reciprocity, kernel symmetry and
//! orthogonality, the Dirichlet/slope-product identity on CPA functions,
//! and the variational minimum at eigenfunctions. The CLI exposes these as
//! `selftest`; the acceptance suite runs them at the documented tolerances.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cpa::{dirichlet_inner, slope_product_integral, CpaFunction};
use crate::error::Result;
use crate::graph::MetrizedGraph;
use crate::kernel::{eigen_phi, kernel_table, verify_laplacian_inverse, KernelTable};
use crate::laplacian::{
    deflate, eigen_mu, kirchhoff_matrix, KirchhoffMatrix, SpectralResult,
};
use crate::measure::{dx_model_measure, voronoi_discretize, DiscreteMeasure, MeasureSpec, PolyPiece};
use crate::model::{build_model, Model};
use crate::scalar::Scalar;

pub const BUILTIN_GRAPHS: [&str; 4] = ["interval", "circle", "star3", "theta"];

#[derive(Debug, Clone)]
pub struct SelftestConfig {
    /// Random trials per suite, spread over the graph/measure contexts.
    pub trials: usize,
    /// Largest model size used by the contexts.
    pub max_n: usize,
    pub seed: u64,
    /// Replaces every suite tolerance when set.
    pub tolerance_override: Option<f64>,
    /// Test fixture: corrupt one Kirchhoff weight so the inversion identity
    /// fails.
    pub inject_weight_perturbation: bool,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            trials: 200,
            max_n: 200,
            seed: 0,
            tolerance_override: None,
            inject_weight_perturbation: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn all_passed(outcomes: &[SuiteOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

pub fn first_failure(outcomes: &[SuiteOutcome]) -> Option<&SuiteOutcome> {
    outcomes.iter().find(|o| !o.passed)
}

/// Render the pass/fail table printed by the CLI.
pub fn format_table(outcomes: &[SuiteOutcome]) -> String {
    let mut out = String::from(
        "suite                  trials   worst        tolerance    status\n",
    );
    for o in outcomes {
        out.push_str(&format!(
            "{:<22} {:>6}   {:<12.4e} {:<12.1e} {}\n",
            o.name,
            o.trials,
            o.worst,
            o.tolerance,
            if o.passed { "pass" } else { "FAIL" }
        ));
    }
    out
}

struct Context<T> {
    label: String,
    model: Arc<Model<T>>,
    q: KirchhoffMatrix<T>,
    mu: DiscreteMeasure<T>,
    table: KernelTable<T>,
    spectrum: SpectralResult<T>,
    phi_spectrum: SpectralResult<T>,
}

/// Atom of mass 1/4 at the first vertex plus constant density 3/4: the
/// nonuniform companion measure for every built-in graph (all have total
/// length 1).
fn nonuniform_measure<T: Scalar>(graph: &MetrizedGraph<T>) -> Result<MeasureSpec<T>> {
    MeasureSpec::new(
        graph,
        vec![(0, T::of(0.25))],
        graph
            .segments()
            .iter()
            .map(|s| {
                vec![PolyPiece {
                    from: T::zero(),
                    to: s.length,
                    coeffs: vec![T::of(0.75)],
                }]
            })
            .collect(),
    )
}

fn build_contexts<T: Scalar>(config: &SelftestConfig) -> Result<Vec<Context<T>>> {
    let mut contexts = Vec::new();
    let sizes = [60usize.min(config.max_n), config.max_n];
    for name in BUILTIN_GRAPHS {
        let graph = Arc::new(MetrizedGraph::<T>::builtin(name).expect("builtin"));
        for (kind, n) in [("dxN", sizes[0]), ("dxN", sizes[1]), ("voronoi", sizes[0])] {
            let model = Arc::new(build_model(&graph, n, &[])?);
            let mu = match kind {
                "dxN" => dx_model_measure(&model),
                _ => voronoi_discretize(&nonuniform_measure(graph.as_ref())?, &model)?,
            };
            let q = kirchhoff_matrix(&model);
            let table = kernel_table(&model, &mu)?;
            let spectrum = eigen_mu(&q, &mu, 3)?;
            let phi_spectrum = eigen_phi(&table, &mu, 3)?;
            contexts.push(Context {
                label: format!("{name}/{kind}/n{n}"),
                model,
                q,
                mu,
                table,
                spectrum,
                phi_spectrum,
            });
        }
    }
    Ok(contexts)
}

fn random_function<T: Scalar>(
    model: &Arc<Model<T>>,
    rng: &mut ChaCha8Rng,
) -> Result<CpaFunction<T>> {
    let values: Vec<T> = (0..model.n())
        .map(|_| T::of(rng.gen_range(-1.0..1.0)))
        .collect();
    CpaFunction::new(Arc::clone(model), values)
}

/// Run every identity suite and report the worst residual seen by each.
pub fn run_selftest<T: Scalar>(config: &SelftestConfig) -> Result<Vec<SuiteOutcome>> {
    let contexts = build_contexts::<T>(config)?;
    let per_context = config.trials.div_ceil(contexts.len()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tol = |default: f64| config.tolerance_override.unwrap_or(default);
    let mut outcomes = Vec::new();

    // Inversion identity: {Q phi(f)}(q) = f(q)/N - (mean f) mu(q).
    {
        let mut worst = 0.0f64;
        let mut trials = 0;
        for ctx in &contexts {
            let q = if config.inject_weight_perturbation {
                let mut broken = ctx.q.clone();
                let bump = T::of(1e-6) * broken.norm_inf();
                broken.matrix[[0, 1]] = broken.matrix[[0, 1]] + bump;
                broken.matrix[[1, 0]] = broken.matrix[[1, 0]] + bump;
                broken
            } else {
                ctx.q.clone()
            };
            for _ in 0..per_context {
                let f = random_function(&ctx.model, &mut rng)?;
                let r = verify_laplacian_inverse(&q, &ctx.table, &ctx.mu, &f)?.f64();
                if r > worst {
                    worst = r;
                }
                trials += 1;
            }
        }
        let tolerance = tol(1e-9);
        outcomes.push(SuiteOutcome {
            name: "laplacian_inverse",
            trials,
            worst,
            tolerance,
            passed: worst < tolerance,
        });
    }

    // Reciprocity: alpha * N lambda = 1, cluster by cluster.
    {
        let mut worst = 0.0f64;
        let mut trials = 0;
        for ctx in &contexts {
            for (cq, cp) in ctx
                .spectrum
                .clusters
                .iter()
                .zip(ctx.phi_spectrum.clusters.iter())
            {
                let gap = (cp.lambda * cq.scaled - T::one()).abs().f64();
                if gap > worst {
                    worst = gap;
                }
                trials += 1;
                debug_assert_eq!(cq.multiplicity, cp.multiplicity, "{}", ctx.label);
            }
        }
        let tolerance = tol(1e-8);
        outcomes.push(SuiteOutcome {
            name: "reciprocity",
            trials,
            worst,
            tolerance,
            passed: worst < tolerance,
        });
    }

    // Kernel symmetry on random vertex pairs.
    {
        let mut worst = 0.0f64;
        let mut trials = 0;
        for ctx in &contexts {
            for _ in 0..per_context {
                let i = rng.gen_range(0..ctx.model.n());
                let j = rng.gen_range(0..ctx.model.n());
                let gap = (ctx.table.table[[i, j]] - ctx.table.table[[j, i]])
                    .abs()
                    .f64();
                if gap > worst {
                    worst = gap;
                }
                trials += 1;
            }
        }
        let tolerance = tol(1e-9);
        outcomes.push(SuiteOutcome {
            name: "kernel_symmetry",
            trials,
            worst,
            tolerance,
            passed: worst < tolerance,
        });
    }

    // Kernel measure-orthogonality on random rows.
    {
        let mut worst = 0.0f64;
        let mut trials = 0;
        for ctx in &contexts {
            for _ in 0..per_context {
                let i = rng.gen_range(0..ctx.model.n());
                let mut acc = T::zero();
                for j in 0..ctx.model.n() {
                    acc = acc + ctx.table.table[[i, j]] * ctx.mu.mass(j);
                }
                let gap = acc.abs().f64();
                if gap > worst {
                    worst = gap;
                }
                trials += 1;
            }
        }
        let tolerance = tol(1e-9);
        outcomes.push(SuiteOutcome {
            name: "kernel_orthogonality",
            trials,
            worst,
            tolerance,
            passed: worst < tolerance,
        });
    }

    // Dirichlet inner product equals the slope-product integral on CPA pairs.
    {
        let mut worst = 0.0f64;
        let mut trials = 0;
        for ctx in &contexts {
            for _ in 0..per_context {
                let f = random_function(&ctx.model, &mut rng)?;
                let g = random_function(&ctx.model, &mut rng)?;
                let gap = (dirichlet_inner(&f, &g)? - slope_product_integral(&f, &g)?)
                    .abs()
                    .f64();
                if gap > worst {
                    worst = gap;
                }
                trials += 1;
            }
        }
        let tolerance = tol(1e-10);
        outcomes.push(SuiteOutcome {
            name: "dirichlet_slope_identity",
            trials,
            worst,
            tolerance,
            passed: worst < tolerance,
        });
    }

    // Rayleigh quotients of deflated random functions stay above the
    // second cluster's scaled eigenvalue; record the worst relative
    // shortfall (0 when the bound holds outright).
    {
        let mut worst = 0.0f64;
        let mut trials = 0;
        for ctx in &contexts {
            let basis = ctx.spectrum.functions_below(1);
            let target = ctx.spectrum.clusters[1].scaled;
            for _ in 0..per_context {
                let f = random_function(&ctx.model, &mut rng)?;
                let g = match deflate(&f, &basis, &ctx.mu) {
                    Ok(g) => g,
                    Err(crate::Error::DeflationDegenerate) => continue,
                    Err(e) => return Err(e),
                };
                let quotient = crate::cpa::dirichlet_energy(&g);
                let shortfall = ((target - quotient) / target).max(T::zero()).f64();
                if shortfall > worst {
                    worst = shortfall;
                }
                trials += 1;
            }
            // equality at the eigenfunctions themselves
            for h in &ctx.spectrum.clusters[1].functions {
                let gap = ((crate::cpa::dirichlet_energy(h) - target) / target)
                    .abs()
                    .f64();
                if gap > worst {
                    worst = gap;
                }
                trials += 1;
            }
        }
        let tolerance = tol(1e-8);
        outcomes.push(SuiteOutcome {
            name: "rayleigh_min",
            trials,
            worst,
            tolerance,
            passed: worst < tolerance,
        });
    }

    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_corpus_passes_every_suite() {
        let config = SelftestConfig {
            trials: 60,
            max_n: 80,
            ..Default::default()
        };
        let outcomes = run_selftest::<f64>(&config).unwrap();
        assert_eq!(outcomes.len(), 6);
        assert!(all_passed(&outcomes), "{}", format_table(&outcomes));
    }

    #[test]
    fn injected_perturbation_fails_the_inversion_suite_first() {
        let config = SelftestConfig {
            trials: 24,
            max_n: 60,
            inject_weight_perturbation: true,
            ..Default::default()
        };
        let outcomes = run_selftest::<f64>(&config).unwrap();
        assert!(!all_passed(&outcomes));
        assert_eq!(first_failure(&outcomes).unwrap().name, "laplacian_inverse");
    }

    #[test]
    fn unreachable_tolerance_fails() {
        let config = SelftestConfig {
            trials: 24,
            max_n: 60,
            tolerance_override: Some(1e-15),
            ..Default::default()
        };
        let outcomes = run_selftest::<f64>(&config).unwrap();
        assert!(!all_passed(&outcomes));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let config = SelftestConfig {
            trials: 24,
            max_n: 60,
            ..Default::default()
        };
        let a = run_selftest::<f64>(&config).unwrap();
        let b = run_selftest::<f64>(&config).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.worst.to_bits(), y.worst.to_bits());
        }
    }
}
