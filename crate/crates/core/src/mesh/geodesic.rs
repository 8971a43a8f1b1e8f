//! Geodesic distance approximated by Dijkstra over mesh edge lengths.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use super::graph::Adjacency;
use super::{norm, sub, TriangleMesh, Vec3};
use crate::error::MeshError;

/// Which vertices a geodesic query reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeodesicBound {
    Unbounded,
    /// Vertices whose distance is at most this length.
    Radius(f64),
    /// Vertices at most this many edges away from the source.
    Hops(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    tag: usize,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.tag.cmp(&self.tag))
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path distances along mesh edges from `source`.
pub fn geodesic_distances(
    mesh: &TriangleMesh,
    source: usize,
    bound: GeodesicBound,
) -> Result<BTreeMap<usize, f64>, MeshError> {
    let n = mesh.vertex_count();
    if source >= n {
        return Err(MeshError::VertexOutOfRange { vertex: source, vertices: n });
    }
    let ring = mesh.one_ring();
    let positions = mesh.positions();
    let out = match bound {
        GeodesicBound::Unbounded => {
            let (dist, _) = multi_source(&ring, positions, &[source], f64::INFINITY);
            dist.into_iter()
                .enumerate()
                .filter(|(_, d)| d.is_finite())
                .collect()
        }
        GeodesicBound::Radius(r) => {
            let (dist, _) = multi_source(&ring, positions, &[source], r);
            dist.into_iter().enumerate().filter(|(_, d)| *d <= r).collect()
        }
        GeodesicBound::Hops(h) => {
            let targets = ring.within_hops(source, h);
            let dist = dijkstra_until_settled(&ring, positions, source, &targets);
            std::iter::once((source, 0.0)).chain(targets.into_iter().zip(dist)).collect()
        }
    };
    Ok(out)
}

/// Distances from `source` to each of `targets`, stopping once all are settled.
pub(crate) fn dijkstra_until_settled(
    adjacency: &Adjacency,
    positions: &[Vec3],
    source: usize,
    targets: &[usize],
) -> Vec<f64> {
    let n = adjacency.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut wanted = vec![false; n];
    let mut remaining = 0usize;
    for &t in targets {
        if !wanted[t] {
            wanted[t] = true;
            remaining += 1;
        }
    }
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([HeapEntry { dist: 0.0, tag: 0, vertex: source }]);
    while let Some(HeapEntry { dist: d, vertex: v, .. }) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        if wanted[v] {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        for &w in adjacency.neighbors(v) {
            let nd = d + norm(sub(positions[v], positions[w]));
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(HeapEntry { dist: nd, tag: 0, vertex: w });
            }
        }
    }
    targets.iter().map(|&t| dist[t]).collect()
}

/// Multi-source Dijkstra. Returns per-vertex distance and the index (into
/// `sources`) of the nearest source; ties go to the lower source index.
/// Vertices beyond `radius` keep distance ∞ and owner `usize::MAX`.
pub(crate) fn multi_source(
    adjacency: &Adjacency,
    positions: &[Vec3],
    sources: &[usize],
    radius: f64,
) -> (Vec<f64>, Vec<usize>) {
    let n = adjacency.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut owner = vec![usize::MAX; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    for (tag, &s) in sources.iter().enumerate() {
        if dist[s] > 0.0 {
            dist[s] = 0.0;
            owner[s] = tag;
            heap.push(HeapEntry { dist: 0.0, tag, vertex: s });
        }
    }
    while let Some(HeapEntry { dist: d, tag, vertex: v }) = heap.pop() {
        if settled[v] {
            continue;
        }
        if d > radius {
            break;
        }
        settled[v] = true;
        dist[v] = d;
        owner[v] = tag;
        for &w in adjacency.neighbors(v) {
            if settled[w] {
                continue;
            }
            let nd = d + norm(sub(positions[v], positions[w]));
            if nd < dist[w] || (nd == dist[w] && tag < owner[w]) {
                dist[w] = nd;
                owner[w] = tag;
                heap.push(HeapEntry { dist: nd, tag, vertex: w });
            }
        }
    }
    for v in 0..n {
        if !settled[v] {
            dist[v] = f64::INFINITY;
            owner[v] = usize::MAX;
        }
    }
    (dist, owner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_icosphere;
    use rand::{Rng, SeedableRng};

    fn unit_tetrahedron() -> TriangleMesh {
        let a = 0.5 / 2f64.sqrt();
        let p = vec![[0.5, 0.0, -a], [-0.5, 0.0, -a], [0.0, 0.5, a], [0.0, -0.5, a]];
        TriangleMesh::new(p, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]).unwrap()
    }

    #[test]
    fn tetrahedron_neighbors_at_unit_distance() {
        let m = unit_tetrahedron();
        let d = geodesic_distances(&m, 0, GeodesicBound::Unbounded).unwrap();
        assert_eq!(d[&0], 0.0);
        for v in 1..4 {
            assert!((d[&v] - 1.0).abs() < 1e-12, "{v}: {}", d[&v]);
        }
    }

    #[test]
    fn path_sums_edge_lengths() {
        // A-B-C along x with lengths 1 and 2; a far apex keeps faces non-degenerate
        let p = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0], [1.0, 100.0, 0.0]];
        let m = TriangleMesh::new(p, vec![[0, 1, 3], [1, 2, 3]]).unwrap();
        let d = geodesic_distances(&m, 0, GeodesicBound::Unbounded).unwrap();
        assert_eq!(d[&1], 1.0);
        assert_eq!(d[&2], 3.0);
        let r = geodesic_distances(&m, 0, GeodesicBound::Radius(1.5)).unwrap();
        assert_eq!(r.keys().copied().collect::<Vec<_>>(), vec![0, 1]);
        let h = geodesic_distances(&m, 0, GeodesicBound::Hops(1)).unwrap();
        assert_eq!(h.keys().copied().collect::<Vec<_>>(), vec![0, 1, 3]);
    }

    #[test]
    fn adjacent_icosphere_pairs_are_edge_length_apart() {
        let m = make_icosphere(2).unwrap();
        let ring = m.one_ring();
        for v in [0, 17, 100, 161] {
            let d = geodesic_distances(&m, v, GeodesicBound::Hops(1)).unwrap();
            for &w in ring.neighbors(v) {
                let len = norm(sub(m.positions()[v], m.positions()[w]));
                assert!((d[&w] - len).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_and_triangle_inequality() {
        let m = make_icosphere(2).unwrap();
        let n = m.vertex_count();
        let all: Vec<Vec<f64>> = (0..n)
            .map(|s| {
                let d = geodesic_distances(&m, s, GeodesicBound::Unbounded).unwrap();
                (0..n).map(|v| d[&v]).collect()
            })
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            assert!((all[a][b] - all[b][a]).abs() < 1e-9);
            assert!(all[a][c] <= all[a][b] + all[b][c] + 1e-12);
        }
    }

    #[test]
    fn out_of_range_source() {
        let m = make_icosphere(0).unwrap();
        assert!(geodesic_distances(&m, 12, GeodesicBound::Unbounded).is_err());
    }
}
