//! Browser bindings: B-spline basis curves, a synthetic parcellation of an
//! icosphere, and its two-round Graclus pooling.

use surfparc::mesh::{make_icosphere, synth_labels_voronoi, SurfaceGraph};
use surfparc::pool::pool_pair;
use surfparc::spline::BSplineBasis;
use surfparc::Tensor2;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Values of every 1-D basis function at `samples` evenly spaced points,
/// row-major as `size × samples`.
#[wasm_bindgen]
pub fn basis_curves(degree: usize, size: usize, samples: usize) -> Result<Vec<f64>, JsError> {
    let basis = BSplineBasis::new(degree, vec![size]).map_err(js_err)?;
    let samples = samples.max(2);
    let mut out = vec![0.0; size * samples];
    for s in 0..samples {
        let u = s as f64 / (samples - 1) as f64;
        for (p, v) in basis.eval(&[u]).map_err(js_err)? {
            out[p * samples + s] = v;
        }
    }
    Ok(out)
}

/// An icosphere with geodesic-Voronoi labels and its pooling clusters.
#[wasm_bindgen]
pub struct Parcellation {
    positions: Vec<f64>,
    faces: Vec<u32>,
    labels: Vec<u32>,
    pooled_once: Vec<u32>,
    pooled_twice: Vec<u32>,
    counts: Vec<u32>,
}

#[wasm_bindgen]
impl Parcellation {
    #[wasm_bindgen(constructor)]
    pub fn new(level: u32, regions: usize, seed: u64) -> Result<Parcellation, JsError> {
        let mesh = make_icosphere(level.min(4)).map_err(js_err)?;
        let (labels, _) = synth_labels_voronoi(&mesh, regions, seed).map_err(js_err)?;
        let graph = SurfaceGraph::from_positions(mesh.one_ring(), mesh.positions());
        let n = mesh.vertex_count();
        let (pair, _) = pool_pair(&graph, &Tensor2::zeros(n, 0), mesh.positions(), seed).map_err(js_err)?;
        let first = pair.levels[0].assignment().iter().map(|&c| c as u32).collect();
        let both = pair.assignment().into_iter().map(|c| c as u32).collect();
        Ok(Parcellation {
            positions: mesh.positions().iter().flatten().copied().collect(),
            faces: mesh.faces().iter().flatten().map(|&v| v as u32).collect(),
            labels: labels.into_iter().map(|l| l as u32).collect(),
            pooled_once: first,
            pooled_twice: both,
            counts: vec![n as u32, pair.levels[0].coarse_count() as u32, pair.coarse_count() as u32],
        })
    }

    /// `x y z` per vertex.
    pub fn positions(&self) -> Vec<f64> {
        self.positions.clone()
    }

    /// Three vertex indices per face.
    pub fn faces(&self) -> Vec<u32> {
        self.faces.clone()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.labels.clone()
    }

    /// Cluster id of each vertex after `rounds` (0, 1 or 2) pooling rounds.
    pub fn clusters(&self, rounds: u32) -> Vec<u32> {
        match rounds {
            0 => (0..self.labels.len() as u32).collect(),
            1 => self.pooled_once.clone(),
            _ => self.pooled_twice.clone(),
        }
    }

    /// Vertex counts before pooling, after one round and after two.
    pub fn counts(&self) -> Vec<u32> {
        self.counts.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_sum_to_one() {
        let (size, samples) = (6, 41);
        let c = basis_curves(2, size, samples).unwrap();
        for s in 0..samples {
            let sum: f64 = (0..size).map(|p| c[p * samples + s]).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parcellation_shapes() {
        let p = Parcellation::new(2, 5, 3).unwrap();
        let n = p.labels().len();
        assert_eq!(n, 162);
        assert_eq!(p.positions().len(), 3 * n);
        assert_eq!(p.faces().len(), 3 * 320);
        assert_eq!(p.counts()[0] as usize, n);
        let twice = p.clusters(2);
        assert!(twice.iter().all(|&c| c < p.counts()[2]));
        assert!(p.counts()[2] as usize >= n.div_ceil(4));
    }
}
