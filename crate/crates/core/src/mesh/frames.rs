//! Per-vertex reference frames: normal, tangent basis and the direction of
//! maximal curvature from a least-squares quadric fit over the one-ring.

use nalgebra::{DMatrix, DVector};

use super::{cross, dot, norm, normalize, scale, sub, TriangleMesh, Vec3};
use crate::error::MeshError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexFrame {
    pub normal: Vec3,
    /// Orthonormal tangent basis; `tangent[0] × tangent[1] = normal`.
    pub tangent: [Vec3; 2],
    /// Unit vector in the tangent plane.
    pub curvature_dir: Vec3,
    /// Principal curvatures from the fit, larger magnitude first.
    pub principal_curvatures: [f64; 2],
    /// Set when the curvatures coincide and `curvature_dir` is the fallback axis.
    pub umbilic: bool,
}

/// Tangent basis derived from the normal and a fixed global reference axis.
fn tangent_basis(normal: Vec3) -> [Vec3; 2] {
    let reference = if normal[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = normalize(sub(reference, scale(normal, dot(reference, normal))));
    let e2 = cross(normal, e1);
    [e1, e2]
}

pub fn estimate_vertex_frames(mesh: &TriangleMesh) -> Result<Vec<VertexFrame>, MeshError> {
    let positions = mesh.positions();
    let ring = mesh.one_ring();

    let mut normals = vec![[0.0; 3]; mesh.vertex_count()];
    for f in mesh.faces() {
        // unnormalized cross product = 2·area·unit normal
        let n = cross(sub(positions[f[1]], positions[f[0]]), sub(positions[f[2]], positions[f[0]]));
        for &v in f {
            normals[v] = super::add(normals[v], n);
        }
    }

    let mut frames = Vec::with_capacity(mesh.vertex_count());
    for v in 0..mesh.vertex_count() {
        let neighbors = ring.neighbors(v);
        if neighbors.len() < 3 {
            return Err(MeshError::TooFewNeighbors { vertex: v, neighbors: neighbors.len() });
        }
        let normal = normalize(normals[v]);
        let tangent = tangent_basis(normal);

        let locals: Vec<Vec3> = neighbors
            .iter()
            .map(|&w| {
                let d = sub(positions[w], positions[v]);
                [dot(d, tangent[0]), dot(d, tangent[1]), dot(d, normal)]
            })
            .collect();
        let mean_len = neighbors
            .iter()
            .map(|&w| norm(sub(positions[w], positions[v])))
            .sum::<f64>()
            / neighbors.len() as f64;

        let (a, b, c) = fit_quadric(&locals);
        // shape operator of z = a x² + b xy + c y² at the origin
        let (k_hi, k_lo, dir2) = symmetric_eigen2(2.0 * a, b, 2.0 * c);
        let (k_max, k_other, dir2) = if k_hi.abs() >= k_lo.abs() {
            (k_hi, k_lo, dir2)
        } else {
            (k_lo, k_hi, [-dir2[1], dir2[0]])
        };
        let tol = 1e-6 * k_max.abs() + 1e-9 / mean_len.max(f64::MIN_POSITIVE);
        let umbilic = (k_max - k_other).abs() <= tol;
        let curvature_dir = if umbilic {
            tangent[0]
        } else {
            normalize(super::add(scale(tangent[0], dir2[0]), scale(tangent[1], dir2[1])))
        };
        frames.push(VertexFrame {
            normal,
            tangent,
            curvature_dir,
            principal_curvatures: [k_max, k_other],
            umbilic,
        });
    }
    Ok(frames)
}

/// Least-squares fit of `z = a x² + b xy + c y² (+ d x + e y)`; the linear
/// terms are included when there are at least five samples.
fn fit_quadric(locals: &[Vec3]) -> (f64, f64, f64) {
    let cols = if locals.len() >= 5 { 5 } else { 3 };
    let mut design = DMatrix::<f64>::zeros(locals.len(), cols);
    let mut rhs = DVector::<f64>::zeros(locals.len());
    for (r, p) in locals.iter().enumerate() {
        let (x, y) = (p[0], p[1]);
        design[(r, 0)] = x * x;
        design[(r, 1)] = x * y;
        design[(r, 2)] = y * y;
        if cols == 5 {
            design[(r, 3)] = x;
            design[(r, 4)] = y;
        }
        rhs[r] = p[2];
    }
    match design.svd(true, true).solve(&rhs, 1e-12) {
        Ok(sol) => (sol[0], sol[1], sol[2]),
        Err(_) => (0.0, 0.0, 0.0),
    }
}

/// Eigen-decomposition of `[[p, q], [q, r]]`: returns (λ_max, λ_min, unit eigenvector of λ_max).
fn symmetric_eigen2(p: f64, q: f64, r: f64) -> (f64, f64, [f64; 2]) {
    let mean = 0.5 * (p + r);
    let half_diff = 0.5 * (p - r);
    let rad = half_diff.hypot(q);
    let (hi, lo) = (mean + rad, mean - rad);
    let v = if rad == 0.0 {
        [1.0, 0.0]
    } else if half_diff >= 0.0 {
        [half_diff + rad, q]
    } else {
        [q, rad - half_diff]
    };
    let n = v[0].hypot(v[1]);
    (hi, lo, [v[0] / n, v[1] / n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_icosphere;

    fn hexagon_fan(z_of: impl Fn(f64, f64) -> f64) -> TriangleMesh {
        let mut p = vec![[0.0, 0.0, z_of(0.0, 0.0)]];
        for k in 0..6 {
            let t = k as f64 * std::f64::consts::PI / 3.0;
            let (x, y) = (t.cos(), t.sin());
            p.push([x, y, z_of(x, y)]);
        }
        let faces = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
        TriangleMesh::new(p, faces).unwrap()
    }

    fn assert_orthonormal(f: &VertexFrame) {
        let [e1, e2] = f.tangent;
        assert!(dot(e1, e2).abs() <= 1e-9);
        assert!(dot(e1, f.normal).abs() <= 1e-9);
        assert!((norm(e1) - 1.0).abs() <= 1e-9);
        assert!((norm(e2) - 1.0).abs() <= 1e-9);
        assert!((norm(f.normal) - 1.0).abs() <= 1e-9);
        assert!((norm(f.curvature_dir) - 1.0).abs() <= 1e-9);
        assert!(dot(f.curvature_dir, f.normal).abs() <= 1e-9);
    }

    #[test]
    fn planar_fan_is_flat() {
        let mesh = hexagon_fan(|_, _| 0.0);
        // the rim vertices only have 3 neighbors each, still enough
        let frames = estimate_vertex_frames(&mesh).unwrap();
        let c = frames[0];
        assert!((c.normal[2].abs() - 1.0).abs() < 1e-6);
        assert!(c.umbilic);
        assert_eq!(c.curvature_dir, c.tangent[0]);
        frames.iter().for_each(assert_orthonormal);
    }

    #[test]
    fn sphere_vertices_are_umbilic() {
        // sphere cap: a regular ring at equal polar angle around the pole
        let alpha: f64 = 0.2;
        let mut p = vec![[0.0, 0.0, 1.0]];
        for k in 0..6 {
            let t = k as f64 * std::f64::consts::PI / 3.0;
            p.push([alpha.sin() * t.cos(), alpha.sin() * t.sin(), alpha.cos()]);
        }
        let faces = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
        let mesh = TriangleMesh::new(p, faces).unwrap();
        let frames = estimate_vertex_frames(&mesh).unwrap();
        assert!(frames[0].umbilic, "{:?}", frames[0].principal_curvatures);
        assert!((frames[0].principal_curvatures[0].abs() - 1.0).abs() < 0.05);

        let ico = make_icosphere(0).unwrap();
        let frames = estimate_vertex_frames(&ico).unwrap();
        assert!(frames.iter().all(|f| f.umbilic));
        frames.iter().for_each(assert_orthonormal);
    }

    #[test]
    fn cylinder_curvature_is_circumferential() {
        // radius 1 cylinder along z, patch of 9 angular x 7 axial samples
        let (na, nz) = (9usize, 7usize);
        let mut p = Vec::new();
        for iz in 0..nz {
            for ia in 0..na {
                let phi = (ia as f64 - 4.0) * 0.15;
                p.push([phi.cos(), phi.sin(), (iz as f64 - 3.0) * 0.12]);
            }
        }
        let mut faces = Vec::new();
        for iz in 0..nz - 1 {
            for ia in 0..na - 1 {
                // alternating diagonals give every patch corner three neighbors
                let a = iz * na + ia;
                if (ia + iz) % 2 == 0 {
                    faces.push([a, a + 1, a + na + 1]);
                    faces.push([a, a + na + 1, a + na]);
                } else {
                    faces.push([a, a + 1, a + na]);
                    faces.push([a + 1, a + na + 1, a + na]);
                }
            }
        }
        let mesh = TriangleMesh::new(p, faces).unwrap();
        let frames = estimate_vertex_frames(&mesh).unwrap();
        for iz in 2..nz - 2 {
            for ia in 2..na - 2 {
                let v = iz * na + ia;
                let phi = (ia as f64 - 4.0) * 0.15;
                let circ = [-phi.sin(), phi.cos(), 0.0];
                let f = frames[v];
                assert!(!f.umbilic);
                let cos = dot(f.curvature_dir, circ).abs();
                assert!(cos >= 10f64.to_radians().cos(), "vertex {v}: cos {cos}");
                assert!((f.principal_curvatures[0].abs() - 1.0).abs() < 0.1);
                assert_orthonormal(&f);
            }
        }
    }

    #[test]
    fn too_few_neighbors_is_an_error() {
        let m = TriangleMesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]])
            .unwrap();
        assert_eq!(
            estimate_vertex_frames(&m),
            Err(MeshError::TooFewNeighbors { vertex: 0, neighbors: 2 })
        );
    }

    #[test]
    fn eigen2_matches_definition() {
        for &(p, q, r) in &[(2.0, 0.5, -1.0), (-1.0, 0.3, 2.0), (0.0, 1.0, 0.0), (1.0, 0.0, 3.0)] {
            let (hi, lo, v) = symmetric_eigen2(p, q, r);
            assert!(hi >= lo);
            let av = [p * v[0] + q * v[1], q * v[0] + r * v[1]];
            assert!((av[0] - hi * v[0]).abs() < 1e-12 && (av[1] - hi * v[1]).abs() < 1e-12);
        }
    }
}
