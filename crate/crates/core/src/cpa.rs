//! Continuous piecewise affine functions determined by values on a model's
//! vertex set, with the inner products the spectral theory runs on.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::GraphPoint;
use crate::measure::DiscreteMeasure;
use crate::model::{same_model, Model};
use crate::scalar::Scalar;

/// A function affine on every model edge, stored by its vertex values.
#[derive(Debug, Clone)]
pub struct CpaFunction<T> {
    model: Arc<Model<T>>,
    values: Vec<T>,
}

impl<T: Scalar> CpaFunction<T> {
    pub fn new(model: Arc<Model<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != model.n() {
            return Err(Error::ModelMismatch);
        }
        Ok(CpaFunction { model, values })
    }

    pub fn constant(model: Arc<Model<T>>, value: T) -> Self {
        let n = model.n();
        CpaFunction {
            model,
            values: vec![value; n],
        }
    }

    pub fn model(&self) -> &Arc<Model<T>> {
        &self.model
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, vertex: usize) -> T {
        self.values[vertex]
    }

    /// Affine interpolation between the two model vertices bracketing `x`.
    /// At a model vertex this returns the stored value exactly.
    pub fn eval(&self, x: &GraphPoint<T>) -> Result<T> {
        if let Some(id) = self.model.vertex_near(x) {
            return Ok(self.values[id]);
        }
        let (lo, hi, frac) = self.model.bracket(x)?;
        Ok(self.values[lo] + (self.values[hi] - self.values[lo]) * frac)
    }

    /// `int f d nu` for a discrete measure on the same model.
    pub fn integral(&self, nu: &DiscreteMeasure<T>) -> Result<T> {
        if !same_model(&self.model, nu.model()) {
            return Err(Error::ModelMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(nu.masses())
            .map(|(&f, &m)| f * m)
            .sum())
    }

    /// Mean against the vertex counting measure: `int f dx_N = (1/N) sum f`.
    pub fn mean_dx_n(&self) -> T {
        let n = T::from_usize(self.values.len()).expect("count");
        self.values.iter().copied().sum::<T>() / n
    }

    pub fn scaled(&self, factor: T) -> CpaFunction<T> {
        CpaFunction {
            model: Arc::clone(&self.model),
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }
}

/// Vertexwise inner product against a discrete measure:
/// `sum_q f(q) g(q) nu(q)`. With `nu = dx_N` this is the l2 product.
pub fn inner_l2<T: Scalar>(
    f: &CpaFunction<T>,
    g: &CpaFunction<T>,
    nu: &DiscreteMeasure<T>,
) -> Result<T> {
    if !same_model(f.model(), g.model()) || !same_model(f.model(), nu.model()) {
        return Err(Error::ModelMismatch);
    }
    Ok(f.values()
        .iter()
        .zip(g.values())
        .zip(nu.masses())
        .map(|((&a, &b), &m)| a * b * m)
        .sum())
}

/// l2 norm with respect to `dx_N`: `sqrt((1/N) sum f(q)^2)`.
pub fn norm_l2_dx_n<T: Scalar>(f: &CpaFunction<T>) -> T {
    let n = T::from_usize(f.values().len()).expect("count");
    (f.values().iter().map(|&v| v * v).sum::<T>() / n).sqrt()
}

/// Exact `int_Gamma f g dx`. On each edge the integrand is quadratic and
/// integrates to `(L/6) (2 f_a g_a + f_a g_b + f_b g_a + 2 f_b g_b)`.
pub fn inner_l2_exact<T: Scalar>(f: &CpaFunction<T>, g: &CpaFunction<T>) -> Result<T> {
    if !same_model(f.model(), g.model()) {
        return Err(Error::ModelMismatch);
    }
    let six = T::of(6.0);
    let two = T::of(2.0);
    let mut acc = T::zero();
    for e in f.model().edges() {
        let (fa, fb) = (f.value(e.a), f.value(e.b));
        let (ga, gb) = (g.value(e.a), g.value(e.b));
        acc = acc + e.length / six * (two * fa * ga + fa * gb + fb * ga + two * fb * gb);
    }
    Ok(acc)
}

/// Dirichlet energy: `sum_edges w_ij (f_i - f_j)^2`, each edge once.
pub fn dirichlet_energy<T: Scalar>(f: &CpaFunction<T>) -> T {
    f.model()
        .edges()
        .iter()
        .map(|e| {
            let d = f.value(e.a) - f.value(e.b);
            e.weight * d * d
        })
        .sum()
}

/// Dirichlet inner product: `sum_edges w_ij (f_i - f_j)(g_i - g_j)`.
pub fn dirichlet_inner<T: Scalar>(f: &CpaFunction<T>, g: &CpaFunction<T>) -> Result<T> {
    if !same_model(f.model(), g.model()) {
        return Err(Error::ModelMismatch);
    }
    Ok(f.model()
        .edges()
        .iter()
        .map(|e| {
            let df = f.value(e.a) - f.value(e.b);
            let dg = g.value(e.a) - g.value(e.b);
            e.weight * df * dg
        })
        .sum())
}

/// `int f' g' dx` computed edgewise from the interpolant slopes. For CPA
/// functions this equals [`dirichlet_inner`] identically; the two routes are
/// kept separate so they can check one another.
pub fn slope_product_integral<T: Scalar>(f: &CpaFunction<T>, g: &CpaFunction<T>) -> Result<T> {
    if !same_model(f.model(), g.model()) {
        return Err(Error::ModelMismatch);
    }
    Ok(f.model()
        .edges()
        .iter()
        .map(|e| {
            let sf = (f.value(e.b) - f.value(e.a)) / e.length;
            let sg = (g.value(e.b) - g.value(e.a)) / e.length;
            sf * sg * e.length
        })
        .sum())
}
