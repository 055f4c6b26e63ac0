//! The whole pipeline instantiates at `f32` as well as `f64`; tolerances
//! widen with the scalar's epsilon but the structure is identical.

use std::sync::Arc;

use metrograph::cpa::{dirichlet_energy, dirichlet_inner, slope_product_integral, CpaFunction};
use metrograph::kernel::{kernel_table, verify_laplacian_inverse};
use metrograph::laplacian::{eigen_mu, kirchhoff_matrix};
use metrograph::measure::{dx_model_measure, voronoi_discretize, MeasureSpec};
use metrograph::model::{build_model, interval_model};
use metrograph::scalar::Scalar;
use metrograph::MetrizedGraph;

fn first_scaled_eigenvalue<T: Scalar>(n: usize) -> T {
    let model = Arc::new(interval_model::<T>(n).unwrap());
    let q = kirchhoff_matrix(&model);
    let mu = dx_model_measure(&model);
    eigen_mu(&q, &mu, 1).unwrap().clusters[0].scaled
}

#[test]
fn interval_eigenvalue_in_both_widths() {
    let double: f64 = first_scaled_eigenvalue::<f64>(10).f64();
    let single: f64 = first_scaled_eigenvalue::<f32>(10).f64();
    assert!((double - 8.809827).abs() < 1e-5);
    assert!((single - double).abs() < 1e-4, "f32 {single} vs f64 {double}");
}

#[test]
fn f32_pipeline_round_trip() {
    let graph = Arc::new(MetrizedGraph::<f32>::star3());
    let model = Arc::new(build_model(&graph, 20, &[]).unwrap());
    let spec = MeasureSpec::lebesgue(&graph).unwrap();
    let mu = voronoi_discretize(&spec, &model).unwrap();
    let q = kirchhoff_matrix(&model);
    let table = kernel_table(&model, &mu).unwrap();

    let f = CpaFunction::new(
        Arc::clone(&model),
        (0..model.n()).map(|i| (i as f32 * 0.37).sin()).collect(),
    )
    .unwrap();
    // The identity is exact in exact arithmetic; in f32 the residual is
    // dominated by epsilon amplified through the pseudo-inverse.
    let residual = verify_laplacian_inverse(&q, &table, &mu, &f).unwrap();
    assert!(residual < 2e-2, "f32 inversion residual {residual}");

    let g = CpaFunction::constant(Arc::clone(&model), 1.5);
    assert!(dirichlet_energy(&g) == 0.0);
    let gap = (dirichlet_inner(&f, &f).unwrap() - slope_product_integral(&f, &f).unwrap()).abs();
    assert!(gap < 1e-3, "f32 slope identity gap {gap}");
}
