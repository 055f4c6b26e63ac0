//! Measures on the graph and their discretizations on models.
//!
//! A measure is `omega(x) dx + sum_j c_j delta_{p_j}` with `omega` piecewise
//! polynomial per segment (degree at most 6, so every integral below is an
//! exact closed form) and atoms sitting at branch vertices. Total mass is 1.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{GraphPoint, MetrizedGraph};
use crate::model::Model;
use crate::scalar::Scalar;

/// One polynomial density piece on a segment, in local arclength coordinates.
/// Coefficients are low degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyPiece<T> {
    pub from: T,
    pub to: T,
    pub coeffs: Vec<T>,
}

pub const MAX_DENSITY_DEGREE: usize = 6;

fn poly_eval<T: Scalar>(coeffs: &[T], t: T) -> T {
    let mut acc = T::zero();
    for &c in coeffs.iter().rev() {
        acc = acc * t + c;
    }
    acc
}

/// Exact integral of the polynomial over `[a, b]`.
fn poly_integral<T: Scalar>(coeffs: &[T], a: T, b: T) -> T {
    let mut acc = T::zero();
    for (k, &c) in coeffs.iter().enumerate() {
        let kp1 = T::from_usize(k + 1).expect("degree");
        acc = acc + c * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / kp1;
    }
    acc
}

/// A signed measure of total mass 1 on the metrized graph.
#[derive(Debug, Clone)]
pub struct MeasureSpec<T> {
    /// `(branch vertex, mass)` point masses.
    atoms: Vec<(usize, T)>,
    /// Density pieces per segment, sorted and non-overlapping; uncovered
    /// stretches carry zero density.
    density: Vec<Vec<PolyPiece<T>>>,
}

impl<T: Scalar> MeasureSpec<T> {
    pub fn new(
        graph: &MetrizedGraph<T>,
        atoms: Vec<(usize, T)>,
        mut density: Vec<Vec<PolyPiece<T>>>,
    ) -> Result<Self> {
        if density.len() < graph.segments().len() {
            density.resize(graph.segments().len(), Vec::new());
        }
        for (v, _) in &atoms {
            if *v >= graph.vertex_count() {
                return Err(Error::UnknownVertex(format!("#{v}")));
            }
        }
        let tol = T::of(1e-10);
        for (e, pieces) in density.iter_mut().enumerate() {
            let len = graph.segments()[e].length;
            pieces.sort_by(|p, q| p.from.partial_cmp(&q.from).expect("finite bounds"));
            let mut prev_to = T::zero() - tol;
            for p in pieces.iter() {
                if p.coeffs.len() > MAX_DENSITY_DEGREE + 1 {
                    return Err(Error::Parse(format!(
                        "density degree {} on segment {e} exceeds {}",
                        p.coeffs.len() - 1,
                        MAX_DENSITY_DEGREE
                    )));
                }
                if p.from < -tol || p.to > len + tol || p.from >= p.to {
                    return Err(Error::Parse(format!(
                        "density piece [{}, {}] outside segment {e} of length {}",
                        p.from.f64(),
                        p.to.f64(),
                        len.f64()
                    )));
                }
                if p.from < prev_to {
                    return Err(Error::Parse(format!(
                        "overlapping density pieces on segment {e}"
                    )));
                }
                prev_to = p.to;
            }
        }
        let spec = MeasureSpec { atoms, density };
        let total = spec.total_mass();
        if (total - T::one()).abs() > T::tol(1e-10) {
            return Err(Error::MassNotOne(total.f64()));
        }
        Ok(spec)
    }

    /// Lebesgue measure `dx` on a graph of total length 1.
    pub fn lebesgue(graph: &MetrizedGraph<T>) -> Result<Self> {
        let density = graph
            .segments()
            .iter()
            .map(|s| {
                vec![PolyPiece {
                    from: T::zero(),
                    to: s.length,
                    coeffs: vec![T::one()],
                }]
            })
            .collect();
        MeasureSpec::new(graph, Vec::new(), density)
    }

    pub fn atoms(&self) -> &[(usize, T)] {
        &self.atoms
    }

    pub fn density(&self) -> &[Vec<PolyPiece<T>>] {
        &self.density
    }

    pub fn is_lebesgue(&self, graph: &MetrizedGraph<T>) -> bool {
        self.atoms.is_empty()
            && self.density.iter().enumerate().all(|(e, pieces)| {
                pieces.len() == 1
                    && pieces[0].from == T::zero()
                    && pieces[0].to == graph.segments()[e].length
                    && pieces[0].coeffs == vec![T::one()]
            })
    }

    pub fn total_mass(&self) -> T {
        let density: T = self
            .density
            .iter()
            .flat_map(|pieces| pieces.iter())
            .map(|p| poly_integral(&p.coeffs, p.from, p.to))
            .sum();
        density + self.atoms.iter().map(|&(_, c)| c).sum()
    }

    /// Density value at a segment-local coordinate (zero off the pieces).
    pub fn density_at(&self, segment: usize, t: T) -> T {
        for p in &self.density[segment] {
            if t >= p.from && t <= p.to {
                return poly_eval(&p.coeffs, t);
            }
        }
        T::zero()
    }

    /// Exact `int_a^b omega dt` on a segment.
    pub fn integrate(&self, segment: usize, a: T, b: T) -> T {
        let mut acc = T::zero();
        for p in &self.density[segment] {
            let lo = a.max(p.from);
            let hi = b.min(p.to);
            if lo < hi {
                acc = acc + poly_integral(&p.coeffs, lo, hi);
            }
        }
        acc
    }

    /// Interior piece boundaries; models evaluating this measure must carry
    /// vertices there.
    pub fn breakpoints(&self, graph: &MetrizedGraph<T>) -> Vec<GraphPoint<T>> {
        let mut out: Vec<GraphPoint<T>> = Vec::new();
        for (e, pieces) in self.density.iter().enumerate() {
            let len = graph.segments()[e].length;
            let tol = T::of(1e-12) * len.max(T::one());
            for p in pieces {
                for t in [p.from, p.to] {
                    if t > tol && t < len - tol {
                        let candidate = GraphPoint {
                            segment: e,
                            offset: t,
                        };
                        if !out
                            .iter()
                            .any(|q| q.segment == e && (q.offset - t).abs() <= tol)
                        {
                            out.push(candidate);
                        }
                    }
                }
            }
        }
        out
    }
}

/// A discrete signed measure supported on a model's vertex set.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure<T> {
    model: Arc<Model<T>>,
    masses: Vec<T>,
}

impl<T: Scalar> DiscreteMeasure<T> {
    pub fn new(model: Arc<Model<T>>, masses: Vec<T>) -> Result<Self> {
        if masses.len() != model.n() {
            return Err(Error::ModelMismatch);
        }
        Ok(DiscreteMeasure { model, masses })
    }

    pub fn model(&self) -> &Arc<Model<T>> {
        &self.model
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn mass(&self, vertex: usize) -> T {
        self.masses[vertex]
    }

    pub fn total_mass(&self) -> T {
        self.masses.iter().copied().sum()
    }

    pub fn total_variation(&self) -> T {
        self.masses.iter().map(|m| m.abs()).sum()
    }

    /// True when every mass equals `1/n` to machine precision.
    pub fn is_uniform(&self) -> bool {
        let uniform = T::one() / T::from_usize(self.masses.len()).expect("count");
        self.masses
            .iter()
            .all(|&m| (m - uniform).abs() <= T::of(1e-14))
    }
}

/// The vertex counting measure `dx_N`: mass `1/N` at every model vertex.
pub fn dx_model_measure<T: Scalar>(model: &Arc<Model<T>>) -> DiscreteMeasure<T> {
    let n = model.n();
    let w = T::one() / T::from_usize(n).expect("count");
    DiscreteMeasure {
        model: Arc::clone(model),
        masses: vec![w; n],
    }
}

/// Voronoi discretization: each vertex receives the measure of its cell
/// (the set of points nearer to it than to any other vertex).
///
/// On a model the cell of a vertex is the union of its adjacent half-edges,
/// so each edge's density integral splits at the edge midpoint. Midpoints
/// themselves are a Lebesgue-null set and atoms sit at vertices, so the
/// split is exact.
pub fn voronoi_discretize<T: Scalar>(
    spec: &MeasureSpec<T>,
    model: &Arc<Model<T>>,
) -> Result<DiscreteMeasure<T>> {
    let graph = model.graph();
    // Preconditions: atoms and density breakpoints must be model vertices.
    for &(v, _) in spec.atoms() {
        if v >= graph.vertex_count() {
            return Err(Error::PointNotInModel(format!("atom at vertex #{v}")));
        }
    }
    for bp in spec.breakpoints(graph) {
        if model.vertex_near(&bp).is_none() {
            return Err(Error::PointNotInModel(format!(
                "density breakpoint at segment {} offset {}",
                bp.segment,
                bp.offset.f64()
            )));
        }
    }

    let half = T::of(0.5);
    let mut masses = vec![T::zero(); model.n()];
    for edge in model.edges() {
        let chain = &model.chains()[edge.segment];
        // Recover this edge's offsets from the chain.
        let pos = chain
            .vertex_ids
            .iter()
            .position(|&id| id == edge.a)
            .expect("edge endpoint on its chain");
        let lo = chain.offsets[pos];
        let hi = chain.offsets[pos + 1];
        let mid = (lo + hi) * half;
        masses[edge.a] = masses[edge.a] + spec.integrate(edge.segment, lo, mid);
        masses[edge.b] = masses[edge.b] + spec.integrate(edge.segment, mid, hi);
    }
    for &(v, c) in spec.atoms() {
        masses[v] = masses[v] + c;
    }

    let measure = DiscreteMeasure {
        model: Arc::clone(model),
        masses,
    };
    let total = measure.total_mass();
    if (total - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::MassNotOne(total.f64()));
    }
    Ok(measure)
}
