//! Models: finite weighted graphs induced by a vertex set on the metrized
//! graph. Edge weights are reciprocals of sub-segment lengths.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{GraphPoint, MetrizedGraph};
use crate::scalar::Scalar;

/// Where a model vertex sits on the underlying graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexSite<T> {
    /// A declared branch vertex of the metrized graph.
    Branch(usize),
    /// A subdivision point strictly inside a segment.
    Interior { segment: usize, offset: T },
}

/// One edge of the model; `weight == 1 / length` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEdge<T> {
    pub a: usize,
    pub b: usize,
    pub length: T,
    pub weight: T,
    pub segment: usize,
}

/// The subdivision of one segment: vertex ids and their offsets, endpoints
/// included, ordered from the segment's `u` end to its `v` end.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentChain<T> {
    pub vertex_ids: Vec<usize>,
    pub offsets: Vec<T>,
}

/// A vertex set `V_N` together with the induced weighted graph `G_N`.
///
/// Branch vertices come first in the ordering, then per-segment interior
/// points in increasing offset. The construction keeps the model simple:
/// loop segments receive at least two interior points and parallel segments
/// at least one, so no multiple or loop edges appear.
#[derive(Debug, Clone)]
pub struct Model<T> {
    graph: Arc<MetrizedGraph<T>>,
    sites: Vec<VertexSite<T>>,
    edges: Vec<ModelEdge<T>>,
    chains: Vec<SegmentChain<T>>,
}

/// Build a model with roughly `n_target` vertices.
///
/// Interior points are distributed over the segments proportionally to
/// length (so mesh size shrinks like `1/n_target` and the vertex counting
/// measures converge weakly to Lebesgue measure), subject to the simple-graph
/// minimums. Points in `must_include` are inserted exactly; each replaces the
/// nearest regular subdivision point so the vertex count is preserved.
pub fn build_model<T: Scalar>(
    graph: &Arc<MetrizedGraph<T>>,
    n_target: usize,
    must_include: &[GraphPoint<T>],
) -> Result<Model<T>> {
    let b = graph.vertex_count();
    let segs = graph.segments();
    let total = graph.total_length();

    // Forced interior offsets per segment (points at segment ends are
    // already branch vertices).
    let mut forced: Vec<Vec<T>> = vec![Vec::new(); segs.len()];
    for p in must_include {
        let p = graph.point(p.segment, p.offset)?;
        if graph.vertex_at(&p).is_some() {
            continue;
        }
        let list = &mut forced[p.segment];
        let tol = T::of(1e-12) * segs[p.segment].length.max(T::one());
        if !list.iter().any(|&t| (t - p.offset).abs() <= tol) {
            list.push(p.offset);
        }
    }
    for list in &mut forced {
        list.sort_by(|a, b| a.partial_cmp(b).expect("finite offsets"));
    }

    let minimum: Vec<usize> = (0..segs.len())
        .map(|e| {
            if graph.is_loop(e) {
                2
            } else if graph.has_parallel(e) {
                1
            } else {
                0
            }
        })
        .collect();
    let mandatory: usize = b
        + (0..segs.len())
            .map(|e| minimum[e].max(forced[e].len()))
            .sum::<usize>();
    if n_target < mandatory {
        return Err(Error::TargetTooSmall {
            given: n_target,
            needed: mandatory,
        });
    }

    let budget = n_target - b;
    let mut sites: Vec<VertexSite<T>> = (0..b).map(VertexSite::Branch).collect();
    let mut chains = Vec::with_capacity(segs.len());
    let mut edges = Vec::new();

    for (e, seg) in segs.iter().enumerate() {
        let share = (T::from_usize(budget).expect("count") * seg.length / total)
            .round()
            .to_usize()
            .unwrap_or(0);
        let k = share.max(minimum[e]).max(forced[e].len());

        // Regular cuts, then swap the nearest one for each forced point.
        let step = seg.length / T::from_usize(k + 1).expect("count");
        let mut cuts: Vec<(T, bool)> = (1..=k)
            .map(|j| (step * T::from_usize(j).expect("count"), false))
            .collect();
        let tol = T::of(1e-12) * seg.length.max(T::one());
        for &t in &forced[e] {
            if let Some(slot) = cuts
                .iter()
                .position(|&(c, pinned)| !pinned && (c - t).abs() <= tol)
            {
                cuts[slot] = (t, true);
                continue;
            }
            let nearest = cuts
                .iter()
                .enumerate()
                .filter(|(_, &(_, pinned))| !pinned)
                .min_by(|(_, &(c1, _)), (_, &(c2, _))| {
                    (c1 - t)
                        .abs()
                        .partial_cmp(&(c2 - t).abs())
                        .expect("finite offsets")
                })
                .map(|(i, _)| i);
            match nearest {
                Some(i) => cuts[i] = (t, true),
                None => cuts.push((t, true)),
            }
        }
        cuts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite offsets"));

        let mut ids = vec![seg.u];
        let mut offsets = vec![T::zero()];
        for &(t, _) in &cuts {
            ids.push(sites.len());
            offsets.push(t);
            sites.push(VertexSite::Interior {
                segment: e,
                offset: t,
            });
        }
        ids.push(seg.v);
        offsets.push(seg.length);

        for w in 0..ids.len() - 1 {
            let len = offsets[w + 1] - offsets[w];
            debug_assert!(len > T::zero(), "degenerate edge on segment {e}");
            edges.push(ModelEdge {
                a: ids[w],
                b: ids[w + 1],
                length: len,
                weight: T::one() / len,
                segment: e,
            });
        }
        chains.push(SegmentChain {
            vertex_ids: ids,
            offsets,
        });
    }

    Ok(Model {
        graph: Arc::clone(graph),
        sites,
        edges,
        chains,
    })
}

/// The dedicated interval generator: exactly `n` vertices on a single
/// segment, `n - 1` equal edges.
pub fn interval_model<T: Scalar>(n: usize) -> Result<Model<T>> {
    let graph = Arc::new(MetrizedGraph::interval());
    build_model(&graph, n, &[])
}

impl<T: Scalar> Model<T> {
    pub fn graph(&self) -> &Arc<MetrizedGraph<T>> {
        &self.graph
    }

    /// `|V_N|`.
    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[VertexSite<T>] {
        &self.sites
    }

    pub fn edges(&self) -> &[ModelEdge<T>] {
        &self.edges
    }

    pub fn chains(&self) -> &[SegmentChain<T>] {
        &self.chains
    }

    pub fn max_edge_length(&self) -> T {
        self.edges
            .iter()
            .fold(T::zero(), |acc, e| acc.max(e.length))
    }

    /// A representative location for a vertex. Branch vertices pick their
    /// first incident segment end; continuous functions take the same value
    /// on every representative.
    pub fn vertex_point(&self, id: usize) -> GraphPoint<T> {
        match self.sites[id] {
            VertexSite::Interior { segment, offset } => GraphPoint { segment, offset },
            VertexSite::Branch(b) => {
                for (e, seg) in self.graph.segments().iter().enumerate() {
                    if seg.u == b {
                        return GraphPoint {
                            segment: e,
                            offset: T::zero(),
                        };
                    }
                    if seg.v == b {
                        return GraphPoint {
                            segment: e,
                            offset: seg.length,
                        };
                    }
                }
                unreachable!("branch vertex {b} belongs to no segment");
            }
        }
    }

    /// The model vertex sitting at a graph point, if any.
    pub fn vertex_near(&self, point: &GraphPoint<T>) -> Option<usize> {
        if let Some(b) = self.graph.vertex_at(point) {
            return Some(b);
        }
        let chain = &self.chains[point.segment];
        let tol = T::of(1e-12) * self.graph.segments()[point.segment].length.max(T::one());
        chain
            .offsets
            .iter()
            .position(|&t| (t - point.offset).abs() <= tol)
            .map(|pos| chain.vertex_ids[pos])
    }

    /// Bracket a point between adjacent model vertices on its segment:
    /// returns `(id_left, id_right, fraction)` with `fraction` in `[0, 1]`.
    pub fn bracket(&self, point: &GraphPoint<T>) -> Result<(usize, usize, T)> {
        let seg_len = self
            .graph
            .segments()
            .get(point.segment)
            .ok_or_else(|| Error::Parse(format!("no segment {}", point.segment)))?
            .length;
        if point.offset < T::zero() || point.offset > seg_len {
            return Err(Error::InvalidPoint {
                segment: point.segment,
                offset: point.offset.f64(),
                length: seg_len.f64(),
            });
        }
        let chain = &self.chains[point.segment];
        // offsets are sorted; find the cell containing the point
        let hi = chain
            .offsets
            .partition_point(|&t| t < point.offset)
            .clamp(1, chain.offsets.len() - 1);
        let lo = hi - 1;
        let span = chain.offsets[hi] - chain.offsets[lo];
        let frac = (point.offset - chain.offsets[lo]) / span;
        Ok((chain.vertex_ids[lo], chain.vertex_ids[hi], frac))
    }

    /// Dense sample points: `per_edge + 1` evenly spaced points on every
    /// model edge (endpoints included).
    pub fn sample_points(&self, per_edge: usize) -> Vec<GraphPoint<T>> {
        let per_edge = per_edge.max(1);
        let mut out = Vec::new();
        for (segment, chain) in self.chains.iter().enumerate() {
            for w in 0..chain.offsets.len() - 1 {
                let a = chain.offsets[w];
                let b = chain.offsets[w + 1];
                for j in 0..=per_edge {
                    let frac = T::from_usize(j).expect("count")
                        / T::from_usize(per_edge).expect("count");
                    out.push(GraphPoint {
                        segment,
                        offset: a + (b - a) * frac,
                    });
                }
            }
        }
        out
    }

    /// Structural compatibility: same object or identical layout.
    pub fn same_as(&self, other: &Model<T>) -> bool {
        std::ptr::eq(self, other)
            || (self.n() == other.n() && self.edges == other.edges && self.sites == other.sites)
    }
}

/// Equality helper for `Arc<Model>` holders.
pub fn same_model<T: Scalar>(a: &Arc<Model<T>>, b: &Arc<Model<T>>) -> bool {
    Arc::ptr_eq(a, b) || a.same_as(b)
}
