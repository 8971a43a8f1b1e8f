//! Triangle meshes, surface graphs, geodesics, vertex frames and edge
//! pseudo-coordinates.

mod frames;
mod geodesic;
mod graph;
mod icosphere;
pub mod io;
mod pseudo;
mod synth;

pub use frames::{estimate_vertex_frames, VertexFrame};
pub use geodesic::{geodesic_distances, GeodesicBound};
pub use graph::{build_surface_graph, Adjacency, SurfaceGraph};
pub use icosphere::make_icosphere;
pub use pseudo::{extrinsic_pseudo_coords, intrinsic_pseudo_coords, AxisScaling, EdgePseudoCoords};
pub use synth::{class_centers, synth_labels_voronoi, SYNTH_NOISE_SIGMA};

use crate::error::MeshError;
use crate::tensor::Tensor2;

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    if n > 0.0 {
        scale(a, 1.0 / n)
    } else {
        a
    }
}

/// A triangle mesh with optional per-vertex features (N×M).
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    features: Option<Tensor2>,
}

impl TriangleMesh {
    /// Validates face indices and rejects degenerate faces. Connectivity is
    /// checked separately by [`TriangleMesh::check_connected`].
    pub fn new(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let n = positions.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(MeshError::FaceIndexOutOfRange { face: fi, index: v, vertices: n });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::DegenerateFace { face: fi });
            }
        }
        Ok(Self { positions, faces, features: None })
    }

    pub fn with_features(mut self, features: Tensor2) -> Result<Self, MeshError> {
        if features.rows() != self.positions.len() {
            return Err(MeshError::FeatureCount {
                expected: self.positions.len(),
                found: features.rows(),
            });
        }
        self.features = Some(features);
        Ok(self)
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    #[inline]
    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    #[inline]
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn features(&self) -> Option<&Tensor2> {
        self.features.as_ref()
    }

    /// Positions as an N×3 tensor.
    pub fn position_tensor(&self) -> Tensor2 {
        Tensor2::from_rows(&self.positions)
    }

    /// Face-adjacency one-ring of every vertex, neighbors sorted ascending.
    pub fn one_ring(&self) -> Adjacency {
        let mut lists = vec![Vec::new(); self.positions.len()];
        for f in &self.faces {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                lists[a].push(b);
                lists[b].push(a);
            }
        }
        Adjacency::from_lists(lists)
    }

    /// Number of connected components of the edge graph (isolated vertices count).
    pub fn component_count(&self) -> usize {
        self.one_ring().component_count()
    }

    pub fn check_connected(&self) -> Result<(), MeshError> {
        match self.component_count() {
            0 | 1 => Ok(()),
            components => Err(MeshError::Disconnected { components }),
        }
    }

    /// Renumbers vertices: new vertex `i` is old vertex `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> TriangleMesh {
        let mut inverse = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        TriangleMesh {
            positions: perm.iter().map(|&p| self.positions[p]).collect(),
            faces: self
                .faces
                .iter()
                .map(|f| [inverse[f[0]], inverse[f[1]], inverse[f[2]]])
                .collect(),
            features: self.features.as_ref().map(|f| f.gather_rows(perm)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_faces() {
        let p = vec![[0.0; 3]; 3];
        assert_eq!(
            TriangleMesh::new(p.clone(), vec![[0, 1, 3]]),
            Err(MeshError::FaceIndexOutOfRange { face: 0, index: 3, vertices: 3 })
        );
        assert_eq!(
            TriangleMesh::new(p, vec![[0, 1, 1]]),
            Err(MeshError::DegenerateFace { face: 0 })
        );
    }

    #[test]
    fn feature_rows_must_match() {
        let m = TriangleMesh::new(vec![[0.0; 3]; 3], vec![[0, 1, 2]]).unwrap();
        assert_eq!(
            m.with_features(Tensor2::zeros(4, 3)),
            Err(MeshError::FeatureCount { expected: 3, found: 4 })
        );
    }

    #[test]
    fn detects_disconnected_mesh() {
        let p = vec![[0.0; 3]; 6];
        let m = TriangleMesh::new(p, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        assert_eq!(m.check_connected(), Err(MeshError::Disconnected { components: 2 }));
    }
}
