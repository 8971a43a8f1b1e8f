//! Synthetic ground truth: geodesic Voronoi regions with noisy class-coded features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::geodesic::multi_source;
use super::{norm, sub, TriangleMesh};
use crate::error::MeshError;
use crate::tensor::Tensor2;

/// Standard deviation of the Gaussian noise added to synthetic features.
pub const SYNTH_NOISE_SIGMA: f64 = 0.3;

const FEATURE_DIM: usize = 3;
const PROJECTION_SEED: u64 = 0x5eed_ce47;
const PROJECTION_DRAWS: usize = 256;
const SEED_CANDIDATES: usize = 8;

/// The fixed L×3 projection of one-hot labels into feature space.
///
/// Rows are Gaussian; among a fixed number of seeded draws the one with the
/// largest minimum row distance is kept, so class means stay apart.
pub fn class_centers(regions: usize) -> Tensor2 {
    let mut rng = ChaCha8Rng::seed_from_u64(PROJECTION_SEED ^ regions as u64);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut best = (f64::NEG_INFINITY, Tensor2::zeros(regions, FEATURE_DIM));
    for _ in 0..PROJECTION_DRAWS {
        let data: Vec<f64> = (0..regions * FEATURE_DIM).map(|_| normal.sample(&mut rng)).collect();
        let m = Tensor2::from_vec(regions, FEATURE_DIM, data).expect("sized buffer");
        let mut min_dist = f64::INFINITY;
        for a in 0..regions {
            for b in a + 1..regions {
                let d: f64 =
                    m.row(a).iter().zip(m.row(b)).map(|(x, y)| (x - y) * (x - y)).sum();
                min_dist = min_dist.min(d.sqrt());
            }
        }
        if min_dist > best.0 {
            best = (min_dist, m);
        }
    }
    best.1
}

/// Labels every vertex by its geodesically nearest of `regions` seed vertices
/// and draws features `center(label) + N(0, σ²)`.
pub fn synth_labels_voronoi(
    mesh: &TriangleMesh,
    regions: usize,
    seed: u64,
) -> Result<(Vec<usize>, Tensor2), MeshError> {
    let n = mesh.vertex_count();
    if regions == 0 || regions > n {
        return Err(MeshError::InvalidRegionCount { regions, vertices: n });
    }
    mesh.check_connected()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = mesh.positions();

    // best-candidate sampling spreads seeds without fixing their layout
    let mut seeds: Vec<usize> = Vec::with_capacity(regions);
    while seeds.len() < regions {
        let mut best: Option<(f64, usize)> = None;
        for _ in 0..SEED_CANDIDATES {
            let c = rng.gen_range(0..n);
            if seeds.contains(&c) {
                continue;
            }
            let score = seeds
                .iter()
                .map(|&s| norm(sub(positions[s], positions[c])))
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, c));
            }
        }
        if let Some((_, c)) = best {
            seeds.push(c);
        }
    }

    let (_, owner) = multi_source(&mesh.one_ring(), positions, &seeds, f64::INFINITY);
    let centers = class_centers(regions);
    let noise = Normal::new(0.0, SYNTH_NOISE_SIGMA).expect("positive sigma");
    let mut features = Tensor2::zeros(n, FEATURE_DIM);
    for v in 0..n {
        let c = centers.row(owner[v]);
        for (k, out) in features.row_mut(v).iter_mut().enumerate() {
            *out = c[k] + noise.sample(&mut rng);
        }
    }
    Ok((owner, features))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_icosphere;
    use std::collections::VecDeque;

    #[test]
    fn single_region_labels_everything_zero() {
        let m = make_icosphere(1).unwrap();
        let (labels, f) = synth_labels_voronoi(&m, 1, 9).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
        assert_eq!(f.shape(), (42, 3));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let m = make_icosphere(2).unwrap();
        let a = synth_labels_voronoi(&m, 5, 42).unwrap();
        let b = synth_labels_voronoi(&m, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = synth_labels_voronoi(&m, 5, 43).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn regions_nonempty_and_connected() {
        // BFS inside each label class must reach every vertex of that class
        let m = make_icosphere(3).unwrap();
        let ring = m.one_ring();
        for seed in 0..5 {
            let (labels, _) = synth_labels_voronoi(&m, 8, seed).unwrap();
            for l in 0..8 {
                let members: Vec<usize> = (0..labels.len()).filter(|&v| labels[v] == l).collect();
                assert!(!members.is_empty(), "seed {seed} label {l} empty");
                let mut seen = vec![false; labels.len()];
                seen[members[0]] = true;
                let mut q = VecDeque::from([members[0]]);
                let mut reached = 1;
                while let Some(v) = q.pop_front() {
                    for &w in ring.neighbors(v) {
                        if labels[w] == l && !seen[w] {
                            seen[w] = true;
                            reached += 1;
                            q.push_back(w);
                        }
                    }
                }
                assert_eq!(reached, members.len(), "seed {seed} label {l} disconnected");
            }
        }
    }

    #[test]
    fn invalid_region_counts() {
        let m = make_icosphere(0).unwrap();
        assert!(synth_labels_voronoi(&m, 0, 1).is_err());
        assert!(synth_labels_voronoi(&m, 13, 1).is_err());
    }

    #[test]
    fn centers_are_fixed_and_separated() {
        let a = class_centers(8);
        assert_eq!(a, class_centers(8));
        for i in 0..8 {
            for j in i + 1..8 {
                let d: f64 = a.row(i).iter().zip(a.row(j)).map(|(x, y)| (x - y).powi(2)).sum();
                assert!(d.sqrt() > 4.0 * SYNTH_NOISE_SIGMA);
            }
        }
    }
}
