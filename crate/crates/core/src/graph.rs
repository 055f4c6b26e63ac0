//! The continuous object: a metrized graph described by branch vertices and
//! segments with positive arclengths.
//!
//! A point of valence other than 2 must be a declared vertex; that holds by
//! construction here because interior points of segments always have valence 2.

use std::collections::VecDeque;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::measure::{MeasureSpec, PolyPiece};
use crate::scalar::Scalar;

/// One segment of the graph: endpoints are branch-vertex indices and the
/// length is measured in arclength units. Loops (`u == v`) are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<T> {
    pub u: usize,
    pub v: usize,
    pub length: T,
}

/// A point on the graph in segment-local arclength coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphPoint<T> {
    pub segment: usize,
    pub offset: T,
}

/// A compact connected metric graph with total length stored explicitly.
#[derive(Debug, Clone)]
pub struct MetrizedGraph<T> {
    name: Option<String>,
    vertex_labels: Vec<String>,
    segments: Vec<Segment<T>>,
    total_length: T,
    normalized: bool,
}

impl<T: Scalar> MetrizedGraph<T> {
    pub fn new(
        name: Option<String>,
        vertex_labels: Vec<String>,
        segments: Vec<Segment<T>>,
        normalize: bool,
    ) -> Result<Self> {
        if vertex_labels.is_empty() {
            return Err(Error::Parse("graph needs at least one vertex".into()));
        }
        for (idx, seg) in segments.iter().enumerate() {
            if seg.u >= vertex_labels.len() || seg.v >= vertex_labels.len() {
                return Err(Error::Parse(format!(
                    "segment {idx} references a vertex outside the vertex list"
                )));
            }
            if seg.length <= T::zero() || !seg.length.is_finite() {
                return Err(Error::NonpositiveLength {
                    segment: idx,
                    length: seg.length.f64(),
                });
            }
        }
        if segments.is_empty() {
            return Err(Error::Parse("graph needs at least one segment".into()));
        }

        // Connectivity over branch vertices.
        let n = vertex_labels.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(p) = queue.pop_front() {
            for seg in &segments {
                for (a, b) in [(seg.u, seg.v), (seg.v, seg.u)] {
                    if a == p && !seen[b] {
                        seen[b] = true;
                        queue.push_back(b);
                    }
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Disconnected(vertex_labels[missing].clone()));
        }

        let mut segments = segments;
        let mut total: T = segments.iter().map(|s| s.length).sum();
        if normalize {
            for seg in &mut segments {
                seg.length = seg.length / total;
            }
            total = segments.iter().map(|s| s.length).sum();
        }
        let normalized = (total - T::one()).abs() <= T::tol(1e-12);
        Ok(MetrizedGraph {
            name,
            vertex_labels,
            segments,
            total_length: total,
            normalized,
        })
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_labels.len()
    }

    pub fn vertex_label(&self, idx: usize) -> &str {
        &self.vertex_labels[idx]
    }

    pub fn vertex_index(&self, label: &str) -> Result<usize> {
        self.vertex_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn total_length(&self) -> T {
        self.total_length
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Number of segment-ends incident to a branch vertex (loops count twice).
    pub fn valence(&self, vertex: usize) -> usize {
        self.segments
            .iter()
            .map(|s| (s.u == vertex) as usize + (s.v == vertex) as usize)
            .sum()
    }

    pub fn is_loop(&self, segment: usize) -> bool {
        let s = &self.segments[segment];
        s.u == s.v
    }

    /// True when another segment joins the same unordered endpoint pair.
    pub fn has_parallel(&self, segment: usize) -> bool {
        let s = &self.segments[segment];
        self.segments.iter().enumerate().any(|(i, t)| {
            i != segment
                && ((t.u == s.u && t.v == s.v) || (t.u == s.v && t.v == s.u))
        })
    }

    /// Validate a point and clamp roundoff at the ends of its segment.
    pub fn point(&self, segment: usize, offset: T) -> Result<GraphPoint<T>> {
        let len = self
            .segments
            .get(segment)
            .ok_or_else(|| Error::Parse(format!("no segment {segment}")))?
            .length;
        if offset < -T::of(1e-12) || offset > len + T::of(1e-12) {
            return Err(Error::InvalidPoint {
                segment,
                offset: offset.f64(),
                length: len.f64(),
            });
        }
        let offset = offset.max(T::zero()).min(len);
        Ok(GraphPoint { segment, offset })
    }

    /// If a point sits at a segment end (within tolerance), the branch vertex there.
    pub fn vertex_at(&self, point: &GraphPoint<T>) -> Option<usize> {
        let seg = &self.segments[point.segment];
        let tol = T::of(1e-12) * seg.length.max(T::one());
        if point.offset.abs() <= tol {
            Some(seg.u)
        } else if (point.offset - seg.length).abs() <= tol {
            Some(seg.v)
        } else {
            None
        }
    }

    // Built-in shapes used across the experiments; all have total length 1.

    /// Unit interval: two vertices joined by one segment of length 1.
    pub fn interval() -> Self {
        MetrizedGraph::new(
            Some("interval".into()),
            vec!["a".into(), "b".into()],
            vec![Segment {
                u: 0,
                v: 1,
                length: T::one(),
            }],
            false,
        )
        .expect("builtin interval")
    }

    /// Circle of circumference 1: one vertex carrying a loop segment.
    pub fn circle() -> Self {
        MetrizedGraph::new(
            Some("circle".into()),
            vec!["o".into()],
            vec![Segment {
                u: 0,
                v: 0,
                length: T::one(),
            }],
            false,
        )
        .expect("builtin circle")
    }

    /// Three legs of length 1/3 joined at a center vertex.
    pub fn star3() -> Self {
        let third = T::one() / T::of(3.0);
        MetrizedGraph::new(
            Some("star3".into()),
            vec!["c".into(), "l1".into(), "l2".into(), "l3".into()],
            (1..=3)
                .map(|v| Segment {
                    u: 0,
                    v,
                    length: third,
                })
                .collect(),
            false,
        )
        .expect("builtin star3")
    }

    /// Two vertices joined by three parallel segments of length 1/3.
    pub fn theta() -> Self {
        let third = T::one() / T::of(3.0);
        MetrizedGraph::new(
            Some("theta".into()),
            vec!["a".into(), "b".into()],
            (0..3)
                .map(|_| Segment {
                    u: 0,
                    v: 1,
                    length: third,
                })
                .collect(),
            false,
        )
        .expect("builtin theta")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "interval" => Some(Self::interval()),
            "circle" => Some(Self::circle()),
            "star3" => Some(Self::star3()),
            "theta" => Some(Self::theta()),
            _ => None,
        }
    }
}

// JSON document schema.

#[derive(Debug, Deserialize)]
struct GraphDocument {
    #[serde(default)]
    normalize: bool,
    vertices: Vec<String>,
    segments: Vec<SegmentDoc>,
    #[serde(default)]
    measure: Option<MeasureDoc>,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Debug, Deserialize)]
struct SegmentDoc {
    u: String,
    v: String,
    length: f64,
}

#[derive(Debug, Deserialize)]
struct MeasureDoc {
    #[serde(default)]
    atoms: Vec<AtomDoc>,
    #[serde(default)]
    density: Vec<DensityDoc>,
}

#[derive(Debug, Deserialize)]
struct AtomDoc {
    at: String,
    mass: f64,
}

#[derive(Debug, Deserialize)]
struct DensityDoc {
    segment: usize,
    pieces: Vec<PieceDoc>,
}

#[derive(Debug, Deserialize)]
struct PieceDoc {
    from: f64,
    to: f64,
    /// Polynomial coefficients, low degree first.
    coeffs: Vec<f64>,
}

/// Parse a graph description document, returning the graph and, when the
/// document declares one, the measure living on it.
///
/// With `"normalize": true` all lengths are divided by the total length and
/// density pieces are rescaled so the described measure keeps its mass.
pub fn parse_document<T: Scalar>(
    text: &str,
) -> Result<(MetrizedGraph<T>, Option<MeasureSpec<T>>)> {
    let doc: GraphDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("graph document: {e}")))?;
    let mut labels = Vec::new();
    for v in &doc.vertices {
        if labels.contains(v) {
            return Err(Error::Parse(format!("duplicate vertex label {v:?}")));
        }
        labels.push(v.clone());
    }
    let index_of = |label: &str| -> Result<usize> {
        labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    };

    let mut segments = Vec::new();
    let mut raw_total = 0.0f64;
    for (idx, seg) in doc.segments.iter().enumerate() {
        if seg.length <= 0.0 || !seg.length.is_finite() {
            return Err(Error::NonpositiveLength {
                segment: idx,
                length: seg.length,
            });
        }
        raw_total += seg.length;
        segments.push(Segment {
            u: index_of(&seg.u)?,
            v: index_of(&seg.v)?,
            length: T::of(seg.length),
        });
    }

    let graph = MetrizedGraph::new(doc.name.clone(), labels, segments, doc.normalize)?;

    let measure = match doc.measure {
        None => None,
        Some(m) => {
            let scale = if doc.normalize { raw_total } else { 1.0 };
            let atoms = m
                .atoms
                .iter()
                .map(|a| Ok((graph.vertex_index(&a.at)?, T::of(a.mass))))
                .collect::<Result<Vec<_>>>()?;
            let mut density = vec![Vec::new(); graph.segments().len()];
            for d in &m.density {
                if d.segment >= graph.segments().len() {
                    return Err(Error::Parse(format!(
                        "density references segment {} beyond the segment list",
                        d.segment
                    )));
                }
                for p in &d.pieces {
                    // Rescaling t -> t/scale keeps each piece's integral: the
                    // coefficient of s^k picks up a factor scale^(k+1).
                    let coeffs: Vec<T> = p
                        .coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, &c)| T::of(c * scale.powi(k as i32 + 1)))
                        .collect();
                    density[d.segment].push(PolyPiece {
                        from: T::of(p.from / scale),
                        to: T::of(p.to / scale),
                        coeffs,
                    });
                }
            }
            Some(MeasureSpec::new(&graph, atoms, density)?)
        }
    };

    Ok((graph, measure))
}

/// Parse a document and keep only the graph.
pub fn load_graph<T: Scalar>(text: &str) -> Result<MetrizedGraph<T>> {
    parse_document(text).map(|(g, _)| g)
}

/// Parse a standalone measure document (the `measure` object of the graph
/// schema) against an existing graph.
pub fn parse_measure_document<T: Scalar>(
    text: &str,
    graph: &MetrizedGraph<T>,
) -> Result<MeasureSpec<T>> {
    let doc: MeasureDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("measure document: {e}")))?;
    let atoms = doc
        .atoms
        .iter()
        .map(|a| Ok((graph.vertex_index(&a.at)?, T::of(a.mass))))
        .collect::<Result<Vec<_>>>()?;
    let mut density = vec![Vec::new(); graph.segments().len()];
    for d in &doc.density {
        if d.segment >= graph.segments().len() {
            return Err(Error::Parse(format!(
                "density references segment {} beyond the segment list",
                d.segment
            )));
        }
        for p in &d.pieces {
            density[d.segment].push(PolyPiece {
                from: T::of(p.from),
                to: T::of(p.to),
                coeffs: p.coeffs.iter().map(|&c| T::of(c)).collect(),
            });
        }
    }
    MeasureSpec::new(graph, atoms, density)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_segment_is_the_interval() {
        let g: MetrizedGraph<f64> =
            load_graph(r#"{"vertices":["a","b"],"segments":[{"u":"a","v":"b","length":1.0}]}"#)
                .unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.total_length(), 1.0);
        assert!(g.is_normalized());
    }

    #[test]
    fn normalize_halves_two_unit_segments() {
        let g: MetrizedGraph<f64> = load_graph(
            r#"{"normalize":true,"vertices":["a","b"],
                "segments":[{"u":"a","v":"b","length":2.0},{"u":"a","v":"b","length":2.0}]}"#,
        )
        .unwrap();
        assert_eq!(g.segments()[0].length, 0.5);
        assert_eq!(g.segments()[1].length, 0.5);
        assert!(g.is_normalized());
    }

    #[test]
    fn zero_length_is_rejected_with_location() {
        let err = load_graph::<f64>(
            r#"{"vertices":["a","b"],"segments":[{"u":"a","v":"b","length":0.0}]}"#,
        )
        .unwrap_err();
        match err {
            Error::NonpositiveLength { segment: 0, .. } => {}
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let err = load_graph::<f64>(
            r#"{"vertices":["a","b","c","d"],
                "segments":[{"u":"a","v":"b","length":1.0},{"u":"c","v":"d","length":1.0}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Disconnected(_)));
    }

    #[test]
    fn builtin_shapes_are_normalized() {
        for name in ["interval", "circle", "star3", "theta"] {
            let g = MetrizedGraph::<f64>::builtin(name).unwrap();
            assert!(g.is_normalized(), "{name}");
            assert_eq!(g.name(), Some(name));
        }
        assert!(MetrizedGraph::<f64>::builtin("petersen").is_none());
    }

    #[test]
    fn valence_counts_loops_twice() {
        let circle = MetrizedGraph::<f64>::circle();
        assert_eq!(circle.valence(0), 2);
        let star = MetrizedGraph::<f64>::star3();
        assert_eq!(star.valence(0), 3);
        assert_eq!(star.valence(1), 1);
    }

    #[test]
    fn measure_survives_normalization() {
        let (_, measure) = parse_document::<f64>(
            r#"{"normalize":true,"vertices":["a","b"],
                "segments":[{"u":"a","v":"b","length":4.0}],
                "measure":{"atoms":[{"at":"a","mass":0.25}],
                           "density":[{"segment":0,"pieces":[{"from":0.0,"to":4.0,"coeffs":[0.1875]}]}]}}"#,
        )
        .unwrap();
        // 0.25 atom + 0.1875 * 4 = 1; after normalization the piece covers
        // [0,1] with constant 0.75.
        let m = measure.unwrap();
        let total = m.total_mass();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
