//! Greedy pairwise (Graclus-style) graph coarsening and the matching
//! copy-back up-sampling.
//!
//! Pooling sums member features and averages member positions; the coarse
//! edge set is the union of fine edges crossing clusters. Un-pooling hands
//! every fine vertex a copy of its cluster's row.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ShapeError;
use crate::mesh::{Adjacency, SurfaceGraph, Vec3};
use crate::tensor::Tensor2;

/// Order in which the greedy matcher visits vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisitOrder {
    Identity,
    Shuffled(u64),
}

impl VisitOrder {
    fn sequence(self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        if let VisitOrder::Shuffled(seed) = self {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        order
    }
}

/// One round of pairwise clustering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseningLevel {
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
    coarse_adjacency: Adjacency,
}

impl CoarseningLevel {
    /// Builds a level from a fine→coarse map whose coarse ids are `0..k`.
    pub fn from_assignment(fine: &Adjacency, assignment: Vec<usize>) -> Self {
        let k = assignment.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut members = vec![Vec::new(); k];
        for (v, &c) in assignment.iter().enumerate() {
            members[c].push(v);
        }
        let mut lists = vec![Vec::new(); k];
        for (i, j) in fine.edges() {
            let (a, b) = (assignment[i], assignment[j]);
            if a != b {
                lists[a].push(b);
            }
        }
        Self { assignment, members, coarse_adjacency: Adjacency::from_lists(lists) }
    }

    #[inline]
    pub fn fine_count(&self) -> usize {
        self.assignment.len()
    }

    #[inline]
    pub fn coarse_count(&self) -> usize {
        self.members.len()
    }

    /// Fine vertex → cluster.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Cluster → fine members, ascending.
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn coarse_adjacency(&self) -> &Adjacency {
        &self.coarse_adjacency
    }

    /// Cluster rows are sums of member rows.
    pub fn pool_features(&self, fine: &Tensor2) -> Result<Tensor2, ShapeError> {
        if fine.rows() != self.fine_count() {
            return Err(ShapeError::new(format!(
                "pool: {} rows for {} fine vertices",
                fine.rows(),
                self.fine_count()
            )));
        }
        let mut out = Tensor2::zeros(self.coarse_count(), fine.cols());
        for (v, &c) in self.assignment.iter().enumerate() {
            for (o, x) in out.row_mut(c).iter_mut().zip(fine.row(v)) {
                *o += x;
            }
        }
        Ok(out)
    }

    /// Every fine vertex receives its cluster's row.
    pub fn unpool_features(&self, coarse: &Tensor2) -> Result<Tensor2, ShapeError> {
        if coarse.rows() != self.coarse_count() {
            return Err(ShapeError::new(format!(
                "unpool: {} rows for {} clusters",
                coarse.rows(),
                self.coarse_count()
            )));
        }
        Ok(coarse.gather_rows(&self.assignment))
    }

    /// Cluster positions are member averages.
    pub fn pool_positions(&self, positions: &[Vec3]) -> Vec<Vec3> {
        self.members
            .iter()
            .map(|m| {
                let mut acc = [0.0; 3];
                for &v in m {
                    for k in 0..3 {
                        acc[k] += positions[v][k];
                    }
                }
                let s = 1.0 / m.len() as f64;
                [acc[0] * s, acc[1] * s, acc[2] * s]
            })
            .collect()
    }

    /// The same clustering after relabeling fine vertices: new vertex `i` is
    /// old vertex `perm[i]`. Cluster ids are kept.
    pub fn with_fine_permutation(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.fine_count(), "permutation length");
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let members = self
            .members
            .iter()
            .map(|m| {
                let mut m: Vec<usize> = m.iter().map(|&v| inv[v]).collect();
                m.sort_unstable();
                m
            })
            .collect();
        Self {
            assignment: perm.iter().map(|&old| self.assignment[old]).collect(),
            members,
            coarse_adjacency: self.coarse_adjacency.clone(),
        }
    }

    /// Debug dump: one cluster id per fine vertex, one per line.
    pub fn format_assignment(&self) -> String {
        let mut s = String::with_capacity(self.assignment.len() * 4);
        for c in &self.assignment {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }
}

/// Normalized-cut matching weight `w_ij (1/deg_i + 1/deg_j)` with unit base weights.
pub fn normalized_cut_weights(adjacency: &Adjacency) -> Vec<f64> {
    adjacency
        .edges()
        .map(|(i, j)| 1.0 / adjacency.degree(i) as f64 + 1.0 / adjacency.degree(j) as f64)
        .collect()
}

/// Greedy maximal matching: each unmarked vertex, in visit order, pairs with
/// its unmarked neighbor of largest weight (ties to the lower index).
/// Unmatched vertices become singletons. Cluster ids follow visit order.
pub fn graclus_match(adjacency: &Adjacency, weights: &[f64], order: VisitOrder) -> CoarseningLevel {
    assert_eq!(weights.len(), adjacency.edge_count(), "one weight per directed edge");
    let n = adjacency.vertex_count();
    let mut assignment = vec![usize::MAX; n];
    let mut next = 0;
    for v in order.sequence(n) {
        if assignment[v] != usize::MAX {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for e in adjacency.edge_range(v) {
            let w = adjacency.targets()[e];
            if w == v || assignment[w] != usize::MAX {
                continue;
            }
            if best.is_none_or(|(bw, _)| weights[e] > bw) {
                best = Some((weights[e], w));
            }
        }
        assignment[v] = next;
        if let Some((_, w)) = best {
            assignment[w] = next;
        }
        next += 1;
    }
    CoarseningLevel::from_assignment(adjacency, assignment)
}

/// Output of [`coarsen`]: pooled features, averaged positions and the coarse graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Coarsened {
    pub features: Tensor2,
    pub positions: Vec<Vec3>,
    pub graph: SurfaceGraph,
}

pub fn coarsen(
    level: &CoarseningLevel,
    features: &Tensor2,
    positions: &[Vec3],
) -> Result<Coarsened, ShapeError> {
    if positions.len() != level.fine_count() {
        return Err(ShapeError::new(format!(
            "coarsen: {} positions for {} fine vertices",
            positions.len(),
            level.fine_count()
        )));
    }
    let features = level.pool_features(features)?;
    let positions = level.pool_positions(positions);
    let graph = SurfaceGraph::from_positions(level.coarse_adjacency.clone(), &positions);
    Ok(Coarsened { features, positions, graph })
}

/// Two stacked rounds of matching; roughly quarters the vertex count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolPair {
    pub levels: [CoarseningLevel; 2],
}

impl PoolPair {
    pub fn fine_count(&self) -> usize {
        self.levels[0].fine_count()
    }

    pub fn coarse_count(&self) -> usize {
        self.levels[1].coarse_count()
    }

    pub fn pool_features(&self, fine: &Tensor2) -> Result<Tensor2, ShapeError> {
        self.levels[1].pool_features(&self.levels[0].pool_features(fine)?)
    }

    pub fn unpool_features(&self, coarse: &Tensor2) -> Result<Tensor2, ShapeError> {
        unpool(&self.levels, coarse)
    }

    pub fn pool_positions(&self, positions: &[Vec3]) -> Vec<Vec3> {
        self.levels[1].pool_positions(&self.levels[0].pool_positions(positions))
    }

    /// Final cluster of every fine vertex.
    pub fn assignment(&self) -> Vec<usize> {
        let second = self.levels[1].assignment();
        self.levels[0].assignment().iter().map(|&c| second[c]).collect()
    }

    pub fn coarse_adjacency(&self) -> &Adjacency {
        self.levels[1].coarse_adjacency()
    }
}

pub fn pool_pair(
    graph: &SurfaceGraph,
    features: &Tensor2,
    positions: &[Vec3],
    seed: u64,
) -> Result<(PoolPair, Coarsened), ShapeError> {
    let orders = [
        VisitOrder::Shuffled(seed),
        VisitOrder::Shuffled(seed ^ 0x9e37_79b9_7f4a_7c15),
    ];
    pool_pair_with_orders(graph, features, positions, orders)
}

pub fn pool_pair_with_orders(
    graph: &SurfaceGraph,
    features: &Tensor2,
    positions: &[Vec3],
    orders: [VisitOrder; 2],
) -> Result<(PoolPair, Coarsened), ShapeError> {
    let adj0 = &graph.adjacency;
    let first = graclus_match(adj0, &normalized_cut_weights(adj0), orders[0]);
    let mid = coarsen(&first, features, positions)?;
    let adj1 = &mid.graph.adjacency;
    let second = graclus_match(adj1, &normalized_cut_weights(adj1), orders[1]);
    let out = coarsen(&second, &mid.features, &mid.positions)?;
    Ok((PoolPair { levels: [first, second] }, out))
}

/// Copies coarse rows back through stacked levels (finest level first).
pub fn unpool(levels: &[CoarseningLevel], coarse: &Tensor2) -> Result<Tensor2, ShapeError> {
    levels.iter().rev().try_fold(coarse.clone(), |acc, level| level.unpool_features(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_surface_graph, make_icosphere};
    use proptest::prelude::*;

    fn path4() -> Adjacency {
        Adjacency::from_undirected_edges(4, &[(0, 1), (1, 2), (2, 3)])
    }

    /// 4×4 grid with wrap-around edges; every vertex has degree 4.
    pub(crate) fn torus4() -> SurfaceGraph {
        let mut edges = Vec::new();
        for r in 0..4 {
            for c in 0..4 {
                edges.push((r * 4 + c, r * 4 + (c + 1) % 4));
                edges.push((r * 4 + c, ((r + 1) % 4) * 4 + c));
            }
        }
        let positions: Vec<Vec3> =
            (0..16).map(|v| [(v % 4) as f64, (v / 4) as f64, 0.0]).collect();
        SurfaceGraph::from_positions(Adjacency::from_undirected_edges(16, &edges), &positions)
    }

    #[test]
    fn path_matching_in_identity_order() {
        let adj = path4();
        let level = graclus_match(&adj, &normalized_cut_weights(&adj), VisitOrder::Identity);
        assert_eq!(level.members(), &[vec![0, 1], vec![2, 3]]);
        let coarse = coarsen(
            &level,
            &Tensor2::from_rows(&[[1.0], [2.0], [3.0], [4.0]]),
            &[[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]],
        )
        .unwrap();
        assert_eq!(coarse.features.as_slice(), &[3.0, 7.0]);
        assert_eq!(coarse.graph.edge_count(), 2);
        assert_eq!(coarse.positions, vec![[0.5, 0.0, 0.0], [2.5, 0.0, 0.0]]);
        let fine = level.unpool_features(&Tensor2::from_rows(&[[10.0], [20.0]])).unwrap();
        assert_eq!(fine.as_slice(), &[10.0, 10.0, 20.0, 20.0]);
    }

    #[test]
    fn edgeless_and_single_edge_graphs() {
        let empty = Adjacency::from_lists(vec![Vec::new(); 5]);
        let level = graclus_match(&empty, &[], VisitOrder::Shuffled(1));
        assert_eq!(level.coarse_count(), 5);
        let g = SurfaceGraph::from_positions(empty, &[[0.0; 3]; 5]);
        let (pair, out) = pool_pair(&g, &Tensor2::filled(5, 2, 1.0), &[[0.0; 3]; 5], 3).unwrap();
        assert_eq!(pair.coarse_count(), 5);
        assert_eq!(out.features, Tensor2::filled(5, 2, 1.0));

        let one = Adjacency::from_undirected_edges(2, &[(0, 1)]);
        let level = graclus_match(&one, &normalized_cut_weights(&one), VisitOrder::Shuffled(9));
        assert_eq!(level.members(), &[vec![0, 1]]);
    }

    #[test]
    fn singletons_are_identity() {
        let adj = path4();
        let level = CoarseningLevel::from_assignment(&adj, vec![0, 1, 2, 3]);
        let f = Tensor2::from_rows(&[[1.0, 5.0], [2.0, 6.0], [3.0, 7.0], [4.0, 8.0]]);
        let p = [[0.0; 3], [1.0, 0.0, 0.0], [2.0, 1.0, 0.0], [3.0, 0.0, 2.0]];
        let c = coarsen(&level, &f, &p).unwrap();
        assert_eq!(c.features, f);
        assert_eq!(c.positions, p.to_vec());
        assert_eq!(c.graph.adjacency, adj);
        assert_eq!(level.unpool_features(&f).unwrap(), f);
    }

    #[test]
    fn torus_grid_quarters_exactly() {
        let g = torus4();
        let positions: Vec<Vec3> = (0..16).map(|v| [(v % 4) as f64, (v / 4) as f64, 0.0]).collect();
        let (pair, out) = pool_pair_with_orders(
            &g,
            &Tensor2::filled(16, 1, 1.0),
            &positions,
            [VisitOrder::Identity, VisitOrder::Identity],
        )
        .unwrap();
        assert_eq!(pair.levels[0].coarse_count(), 8);
        assert_eq!(pair.coarse_count(), 4);
        assert!(out.features.as_slice().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn sum_then_copy_scales_by_cluster_size() {
        let mesh = make_icosphere(2).unwrap();
        let g = build_surface_graph(&mesh, 1).unwrap();
        let c = 1.5;
        let (pair, _) = pool_pair(&g, &Tensor2::filled(162, 1, c), mesh.positions(), 11).unwrap();
        let back = pair.unpool_features(&pair.pool_features(&Tensor2::filled(162, 1, c)).unwrap()).unwrap();
        let assign = pair.assignment();
        let mut sizes = vec![0usize; pair.coarse_count()];
        assign.iter().for_each(|&a| sizes[a] += 1);
        for v in 0..162 {
            assert_eq!(back.get(v, 0), sizes[assign[v]] as f64 * c);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let level = CoarseningLevel::from_assignment(&path4(), vec![0, 0, 1, 1]);
        assert!(level.unpool_features(&Tensor2::zeros(3, 1)).is_err());
        assert!(level.pool_features(&Tensor2::zeros(5, 1)).is_err());
    }

    proptest! {
        #[test]
        fn pooling_invariants(level in 0u32..3, seed in any::<u64>()) {
            let mesh = make_icosphere(level).unwrap();
            let g = build_surface_graph(&mesh, 1).unwrap();
            let n = g.vertex_count();
            let f = crate::diff::glorot_uniform(n, 3, &mut ChaCha8Rng::seed_from_u64(seed));
            let (pair, out) = pool_pair(&g, &f, mesh.positions(), seed).unwrap();
            let (again, _) = pool_pair(&g, &f, mesh.positions(), seed).unwrap();
            prop_assert_eq!(&pair, &again);

            let mut fine_count = n;
            for lvl in &pair.levels {
                prop_assert_eq!(lvl.fine_count(), fine_count);
                let mut seen = vec![0usize; lvl.fine_count()];
                for (c, m) in lvl.members().iter().enumerate() {
                    prop_assert!(m.len() == 1 || m.len() == 2);
                    for &v in m {
                        seen[v] += 1;
                        prop_assert_eq!(lvl.assignment()[v], c);
                    }
                }
                prop_assert!(seen.iter().all(|&s| s == 1));
                prop_assert!(lvl.coarse_count() >= fine_count.div_ceil(2));
                prop_assert!(lvl.coarse_count() <= fine_count);
                prop_assert!(lvl.coarse_adjacency().is_symmetric());
                fine_count = lvl.coarse_count();
            }
            prop_assert!(pair.coarse_count() >= n.div_ceil(4));
            for (a, b) in f.column_sums().iter().zip(out.features.column_sums()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            // one-hot cluster indicators come back as membership
            let k = pair.coarse_count();
            let assign = pair.assignment();
            let back = pair.unpool_features(&Tensor2::identity(k)).unwrap();
            for v in 0..n {
                for c in 0..k {
                    prop_assert_eq!(back.get(v, c), if assign[v] == c { 1.0 } else { 0.0 });
                }
            }
        }
    }
}
