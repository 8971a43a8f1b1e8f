//! Edge pseudo-coordinates: extrinsic coordinate offsets and intrinsic
//! (geodesic distance, tangent-plane angle) pairs, min-max scaled to [0, 1].

use std::f64::consts::TAU;

use super::graph::SurfaceGraph;
use super::{dot, sub, TriangleMesh, Vec3, VertexFrame};
use crate::error::MeshError;

/// Affine map of one dimension onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisScaling {
    pub min: f64,
    pub max: f64,
}

impl AxisScaling {
    /// Degenerate ranges map to 0.5.
    #[inline]
    pub fn apply(&self, raw: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            ((raw - self.min) / span).clamp(0.0, 1.0)
        } else {
            0.5
        }
    }

    #[inline]
    pub fn invert(&self, scaled: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            self.min + scaled * span
        } else {
            self.min
        }
    }

    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if min.is_finite() {
            Self { min, max }
        } else {
            Self { min: 0.0, max: 0.0 }
        }
    }
}

/// Per-edge `dim`-vectors, stored edge-major, each component in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePseudoCoords {
    dim: usize,
    values: Vec<f64>,
    scaling: Vec<AxisScaling>,
}

impl EdgePseudoCoords {
    fn from_raw(dim: usize, raw: &[f64], scaling: Vec<AxisScaling>) -> Self {
        let values = raw
            .chunks_exact(dim)
            .flat_map(|r| r.iter().zip(&scaling).map(|(&v, s)| s.apply(v)))
            .collect();
        Self { dim, values, scaling }
    }

    /// Wraps already-scaled values. Used by tests and by callers that
    /// construct coordinates by hand.
    pub fn from_scaled(dim: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len() % dim.max(1), 0);
        Self { dim, values, scaling: vec![AxisScaling { min: 0.0, max: 1.0 }; dim] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.values.len() / self.dim
    }

    #[inline]
    pub fn edge(&self, e: usize) -> &[f64] {
        &self.values[e * self.dim..(e + 1) * self.dim]
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaling(&self) -> &[AxisScaling] {
        &self.scaling
    }

    /// Recovers raw (unscaled) values from the stored scaling record.
    pub fn unscaled(&self) -> Vec<f64> {
        self.values
            .chunks_exact(self.dim)
            .flat_map(|r| r.iter().zip(&self.scaling).map(|(&v, s)| s.invert(v)))
            .collect()
    }
}

/// Raw `u_E(i, j) = (x_i − x_j, y_i − y_j, z_i − z_j)`, then per-dimension min-max.
pub fn extrinsic_pseudo_coords(
    graph: &SurfaceGraph,
    positions: &[Vec3],
) -> Result<EdgePseudoCoords, MeshError> {
    if positions.len() != graph.vertex_count() {
        return Err(MeshError::Inconsistent(format!(
            "{} positions for {} graph vertices",
            positions.len(),
            graph.vertex_count()
        )));
    }
    let raw: Vec<f64> = graph
        .adjacency
        .edges()
        .flat_map(|(i, j)| sub(positions[i], positions[j]))
        .collect();
    let scaling = (0..3)
        .map(|d| AxisScaling::fit(raw.iter().skip(d).step_by(3).copied()))
        .collect();
    Ok(EdgePseudoCoords::from_raw(3, &raw, scaling))
}

/// Raw `(ρ, θ)` per edge: geodesic distance and the angle in the source
/// vertex's tangent plane measured from its maximal-curvature direction.
/// ρ is min-max scaled over the graph, θ divided by 2π.
pub fn intrinsic_pseudo_coords(
    graph: &SurfaceGraph,
    frames: &[VertexFrame],
    mesh: &TriangleMesh,
) -> Result<EdgePseudoCoords, MeshError> {
    if frames.len() != graph.vertex_count() || mesh.vertex_count() != graph.vertex_count() {
        return Err(MeshError::Inconsistent(format!(
            "graph has {} vertices, frames {}, mesh {}",
            graph.vertex_count(),
            frames.len(),
            mesh.vertex_count()
        )));
    }
    let positions = mesh.positions();
    let mut raw = Vec::with_capacity(graph.edge_count() * 2);
    for (e, (i, j)) in graph.adjacency.edges().enumerate() {
        raw.push(graph.rho[e]);
        raw.push(tangent_angle(&frames[i], sub(positions[j], positions[i]), i, j));
    }
    let scaling = vec![
        AxisScaling::fit(raw.iter().step_by(2).copied()),
        AxisScaling { min: 0.0, max: TAU },
    ];
    Ok(EdgePseudoCoords::from_raw(2, &raw, scaling))
}

/// Angle in [0, 2π) of the tangent projection of `d`, counter-clockwise about the normal.
fn tangent_angle(frame: &VertexFrame, d: Vec3, i: usize, j: usize) -> f64 {
    let reference = frame.curvature_dir;
    let ortho = super::cross(frame.normal, reference);
    let (x, y) = (dot(d, reference), dot(d, ortho));
    if x == 0.0 && y == 0.0 {
        log::warn!("edge ({i}, {j}) projects to zero length in the tangent plane; θ set to 0");
        return 0.0;
    }
    let t = y.atan2(x);
    let t = if t < 0.0 { t + TAU } else { t };
    // atan2 of a tiny negative y can round up to exactly 2π
    if t >= TAU { 0.0 } else { t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_surface_graph, estimate_vertex_frames, make_icosphere};
    use std::f64::consts::PI;

    fn single_edge_graph(p: &[Vec3]) -> SurfaceGraph {
        let adj = super::super::Adjacency::from_undirected_edges(p.len(), &[(0, 1)]);
        SurfaceGraph::from_positions(adj, p)
    }

    #[test]
    fn extrinsic_raw_is_source_minus_target() {
        let p = [[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]];
        let g = single_edge_graph(&p);
        let u = extrinsic_pseudo_coords(&g, &p).unwrap();
        let raw = u.unscaled();
        assert_eq!(&raw[0..3], &[-1.0, -2.0, -3.0]);
        assert_eq!(&raw[3..6], &[1.0, 2.0, 3.0]);
        assert_eq!(u.edge(0), &[0.0, 0.0, 0.0]);
        assert_eq!(u.edge(1), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn extrinsic_midpoint_and_degenerate_axis() {
        // x offsets span [-1, 1]; z offsets are all zero
        let p = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let adj = super::super::Adjacency::from_undirected_edges(3, &[(0, 1), (0, 2), (1, 2)]);
        let g = SurfaceGraph::from_positions(adj, &p);
        let u = extrinsic_pseudo_coords(&g, &p).unwrap();
        let e = g.adjacency.find_edge(0, 2).unwrap();
        assert_eq!(u.edge(e)[0], 0.5);
        assert!(u.values().chunks(3).all(|c| c[2] == 0.5));
    }

    #[test]
    fn extrinsic_scaled_pairs_sum_to_one() {
        let mesh = make_icosphere(2).unwrap();
        let g = build_surface_graph(&mesh, 1).unwrap();
        let u = extrinsic_pseudo_coords(&g, mesh.positions()).unwrap();
        for (e, (i, j)) in g.adjacency.edges().enumerate() {
            let r = g.adjacency.find_edge(j, i).unwrap();
            for d in 0..3 {
                assert!((u.edge(e)[d] + u.edge(r)[d] - 1.0).abs() < 1e-12);
            }
        }
        let back = u.unscaled();
        for (e, off) in g.offsets.iter().enumerate() {
            for d in 0..3 {
                assert!((back[3 * e + d] - off[d]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn intrinsic_angles_and_distances() {
        let mesh = make_icosphere(1).unwrap();
        let g = build_surface_graph(&mesh, 1).unwrap();
        let frames = estimate_vertex_frames(&mesh).unwrap();
        let u = intrinsic_pseudo_coords(&g, &frames, &mesh).unwrap();
        assert_eq!(u.dim(), 2);
        assert!(u.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let raw = u.unscaled();
        for (e, (i, j)) in g.adjacency.edges().enumerate() {
            let len = super::super::norm(sub(mesh.positions()[i], mesh.positions()[j]));
            assert!((raw[2 * e] - len).abs() < 1e-9);
            assert!((0.0..TAU).contains(&raw[2 * e + 1]));
        }
    }

    #[test]
    fn angle_reference_cases() {
        let frame = VertexFrame {
            normal: [0.0, 0.0, 1.0],
            tangent: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            curvature_dir: [1.0, 0.0, 0.0],
            principal_curvatures: [1.0, 0.0],
            umbilic: false,
        };
        assert_eq!(tangent_angle(&frame, [2.0, 0.0, 0.3], 0, 1), 0.0);
        assert!((tangent_angle(&frame, [-1.0, 0.0, 0.0], 0, 1) - PI).abs() < 1e-15);
        assert!((tangent_angle(&frame, [0.0, -1.0, 0.0], 0, 1) - 1.5 * PI).abs() < 1e-15);
        assert_eq!(tangent_angle(&frame, [0.0, 0.0, 5.0], 0, 1), 0.0);
        let s = AxisScaling { min: 0.0, max: TAU };
        assert_eq!(s.apply(PI), 0.5);
        assert_eq!(s.apply(0.0), 0.0);
    }
}
