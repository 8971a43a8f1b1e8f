use sha2::{Digest, Sha256};

use super::ModelConfig;
use crate::error::{MeshError, Result, ShapeError};
use crate::mesh::{
    build_surface_graph, estimate_vertex_frames, extrinsic_pseudo_coords, intrinsic_pseudo_coords,
    EdgePseudoCoords, SurfaceGraph, TriangleMesh, Vec3,
};
use crate::pool::{pool_pair, PoolPair};
use crate::spline::SplineSupport;
use crate::tensor::Tensor2;

/// Everything a forward pass needs about one subject, computed once.
///
/// Pooling depends only on the graph and the pooling seed, so the whole
/// extrinsic pyramid is built here rather than per forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSubject {
    id: String,
    features: Tensor2,
    xyz: Tensor2,
    labels: Option<Vec<usize>>,
    intrinsic: SplineSupport,
    /// Level 0 is the input graph; level `k + 1` follows `pools[k]`.
    extrinsic: Vec<SplineSupport>,
    pools: Vec<PoolPair>,
}

impl PreparedSubject {
    pub fn new(
        id: impl Into<String>,
        mesh: &TriangleMesh,
        features: Tensor2,
        labels: Option<Vec<usize>>,
        config: &ModelConfig,
        pool_seed: u64,
    ) -> Result<Self> {
        let graph = build_surface_graph(mesh, config.graph_hops)?;
        let frames = estimate_vertex_frames(mesh)?;
        let intrinsic = intrinsic_pseudo_coords(&graph, &frames, mesh)?;
        Self::from_graph(id, &graph, mesh.positions(), &intrinsic, features, labels, config, pool_seed)
    }

    /// Builds from an explicit graph and intrinsic coordinates; used for
    /// synthetic graphs that do not come from a triangle mesh.
    #[allow(clippy::too_many_arguments)]
    pub fn from_graph(
        id: impl Into<String>,
        graph: &SurfaceGraph,
        positions: &[Vec3],
        intrinsic: &EdgePseudoCoords,
        features: Tensor2,
        labels: Option<Vec<usize>>,
        config: &ModelConfig,
        pool_seed: u64,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        if features.rows() != n {
            return Err(MeshError::FeatureCount { expected: n, found: features.rows() }.into());
        }
        if features.cols() != config.input_features {
            return Err(ShapeError::new(format!(
                "{} feature columns, model expects {}",
                features.cols(),
                config.input_features
            ))
            .into());
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(MeshError::Inconsistent(format!("{} labels for {n} vertices", l.len())).into());
            }
            if let Some(v) = l.iter().position(|&x| x >= config.classes) {
                return Err(crate::error::LossError::LabelOutOfRange {
                    row: v,
                    label: l[v],
                    classes: config.classes,
                }
                .into());
            }
        }
        let ibasis = config.coarse.intrinsic_kernel.basis()?;
        let ebasis = config.coarse.extrinsic_kernel.basis()?;
        let intrinsic = SplineSupport::new(&graph.adjacency, intrinsic, &ibasis)?;

        let mut extrinsic = Vec::with_capacity(config.coarse.pool_depth() + 1);
        let mut pools = Vec::with_capacity(config.coarse.pool_depth());
        let mut level_graph = graph.clone();
        let mut level_pos = positions.to_vec();
        for k in 0..=config.coarse.pool_depth() {
            let coords = extrinsic_pseudo_coords(&level_graph, &level_pos)?;
            extrinsic.push(SplineSupport::new(&level_graph.adjacency, &coords, &ebasis)?);
            if k == config.coarse.pool_depth() {
                break;
            }
            let empty = Tensor2::zeros(level_graph.vertex_count(), 0);
            let seed = pool_seed.wrapping_add(k as u64).wrapping_mul(0x2545_f491_4f6c_dd1d);
            let (pair, coarse) = pool_pair(&level_graph, &empty, &level_pos, seed)?;
            pools.push(pair);
            level_graph = coarse.graph;
            level_pos = coarse.positions;
        }

        let xyz = Tensor2::from_rows(positions);
        Ok(Self { id: id.into(), features, xyz, labels, intrinsic, extrinsic, pools })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn vertex_count(&self) -> usize {
        self.features.rows()
    }

    pub fn features(&self) -> &Tensor2 {
        &self.features
    }

    pub fn xyz(&self) -> &Tensor2 {
        &self.xyz
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn intrinsic(&self) -> &SplineSupport {
        &self.intrinsic
    }

    pub fn extrinsic(&self) -> &[SplineSupport] {
        &self.extrinsic
    }

    pub fn pools(&self) -> &[PoolPair] {
        &self.pools
    }

    /// The same subject with vertices relabeled (new vertex `i` is old
    /// vertex `perm[i]`), carrying every precomputed structure along.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut pools = self.pools.clone();
        if let Some(first) = pools.first_mut() {
            first.levels[0] = first.levels[0].with_fine_permutation(perm);
        }
        let mut extrinsic = self.extrinsic.clone();
        extrinsic[0] = extrinsic[0].permuted(perm);
        Self {
            id: self.id.clone(),
            features: self.features.gather_rows(perm),
            xyz: self.xyz.gather_rows(perm),
            labels: self.labels.as_ref().map(|l| perm.iter().map(|&o| l[o]).collect()),
            intrinsic: self.intrinsic.permuted(perm),
            extrinsic,
            pools,
        }
    }

    /// Hash of the graph structure and precomputed kernel supports.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for support in std::iter::once(&self.intrinsic).chain(&self.extrinsic) {
            let adj = support.adjacency();
            h.update((adj.vertex_count() as u64).to_le_bytes());
            for &t in adj.targets() {
                h.update((t as u64).to_le_bytes());
            }
            for e in 0..adj.edge_count() {
                for (p, b) in support.edge_entries(e) {
                    h.update((p as u64).to_le_bytes());
                    h.update(b.to_le_bytes());
                }
            }
        }
        for pair in &self.pools {
            for &c in &pair.assignment() {
                h.update((c as u64).to_le_bytes());
            }
        }
        h.finalize().into()
    }
}
