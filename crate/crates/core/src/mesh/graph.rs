use std::collections::VecDeque;

use super::geodesic::dijkstra_until_settled;
use super::{norm, sub, TriangleMesh, Vec3};
use crate::error::MeshError;

/// Compressed sparse-row adjacency. Directed edge `e` runs from the vertex
/// whose range contains `e` to `targets[e]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    /// Builds from per-vertex neighbor lists; lists are sorted and deduplicated.
    pub fn from_lists(mut lists: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }

    /// Symmetric adjacency from an undirected edge list; self-loops dropped.
    pub fn from_undirected_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut lists = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b {
                lists[a].push(b);
                lists[b].push(a);
            }
        }
        Self::from_lists(lists)
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of directed edges.
    #[inline]
    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn edge_range(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Iterates directed edges `(source, target)` in storage order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count())
            .flat_map(move |i| self.neighbors(i).iter().map(move |&j| (i, j)))
    }

    /// Index of the directed edge `(i, j)`, if present.
    pub fn find_edge(&self, i: usize, j: usize) -> Option<usize> {
        self.neighbors(i).binary_search(&j).ok().map(|k| self.offsets[i] + k)
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(i, j)| self.find_edge(j, i).is_some())
    }

    pub fn has_self_loops(&self) -> bool {
        self.edges().any(|(i, j)| i == j)
    }

    pub fn component_count(&self) -> usize {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    /// Number of connected pieces after dropping every edge whose endpoints
    /// carry different labels. Equals the label count for a clean parcellation.
    pub fn label_components(&self, labels: &[usize]) -> usize {
        assert_eq!(labels.len(), self.vertex_count(), "one label per vertex");
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if !seen[w] && labels[w] == labels[v] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    /// Vertices reachable from `source` in `1..=hops` steps, sorted, excluding `source`.
    pub fn within_hops(&self, source: usize, hops: usize) -> Vec<usize> {
        let mut depth = vec![usize::MAX; self.vertex_count()];
        depth[source] = 0;
        let mut queue = VecDeque::from([source]);
        let mut out = Vec::new();
        while let Some(v) = queue.pop_front() {
            if depth[v] == hops {
                continue;
            }
            for &w in self.neighbors(v) {
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    out.push(w);
                    queue.push_back(w);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Sparse symmetric edge set with per-edge raw geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGraph {
    pub adjacency: Adjacency,
    /// Per directed edge `(i, j)`: `x_i − x_j`.
    pub offsets: Vec<Vec3>,
    /// Per directed edge: geodesic (or, on coarsened graphs, Euclidean) distance.
    pub rho: Vec<f64>,
}

impl SurfaceGraph {
    /// Builds a graph whose distances are plain Euclidean lengths. Used for
    /// coarsened graphs, which carry no mesh.
    pub fn from_positions(adjacency: Adjacency, positions: &[Vec3]) -> Self {
        let mut offsets = Vec::with_capacity(adjacency.edge_count());
        let mut rho = Vec::with_capacity(adjacency.edge_count());
        for (i, j) in adjacency.edges() {
            let d = sub(positions[i], positions[j]);
            offsets.push(d);
            rho.push(norm(d));
        }
        Self { adjacency, offsets, rho }
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.adjacency.vertex_count()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.adjacency.edge_count()
    }
}

/// Connects every vertex to its neighbors within `hops` face-adjacency steps.
pub fn build_surface_graph(mesh: &TriangleMesh, hops: usize) -> Result<SurfaceGraph, MeshError> {
    if hops == 0 {
        return Err(MeshError::ZeroHops);
    }
    let ring = mesh.one_ring();
    match ring.component_count() {
        0 | 1 => {}
        components => return Err(MeshError::Disconnected { components }),
    }
    let positions = mesh.positions();
    let lists: Vec<Vec<usize>> = if hops == 1 {
        (0..mesh.vertex_count()).map(|v| ring.neighbors(v).to_vec()).collect()
    } else {
        (0..mesh.vertex_count()).map(|v| ring.within_hops(v, hops)).collect()
    };
    let adjacency = Adjacency::from_lists(lists);

    let mut offsets = Vec::with_capacity(adjacency.edge_count());
    let mut rho = Vec::with_capacity(adjacency.edge_count());
    for i in 0..adjacency.vertex_count() {
        let targets = adjacency.neighbors(i);
        let dist = dijkstra_until_settled(&ring, positions, i, targets);
        for (&j, d) in targets.iter().zip(dist) {
            offsets.push(sub(positions[i], positions[j]));
            rho.push(d);
        }
    }
    Ok(SurfaceGraph { adjacency, offsets, rho })
}
