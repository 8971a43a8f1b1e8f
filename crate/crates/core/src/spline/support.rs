use super::BSplineBasis;
use crate::error::SplineError;
use crate::mesh::{Adjacency, EdgePseudoCoords};

/// A graph's edges together with the nonzero basis products of each edge's
/// pseudo-coordinates. Built once per (graph, coordinates, basis) and reused
/// by every layer sharing that basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSupport {
    adjacency: Adjacency,
    basis: BSplineBasis,
    inv_degree: Vec<f64>,
    entry_offsets: Vec<usize>,
    entry_index: Vec<u32>,
    entry_value: Vec<f64>,
}

impl SplineSupport {
    pub fn new(
        adjacency: &Adjacency,
        coords: &EdgePseudoCoords,
        basis: &BSplineBasis,
    ) -> Result<Self, SplineError> {
        if coords.dim() != basis.dim() {
            return Err(SplineError::InvalidBasis(format!(
                "{}-dimensional pseudo-coordinates for a {}-dimensional basis",
                coords.dim(),
                basis.dim()
            )));
        }
        if coords.edge_count() != adjacency.edge_count() {
            return Err(SplineError::InvalidBasis(format!(
                "{} pseudo-coordinate rows for {} edges",
                coords.edge_count(),
                adjacency.edge_count()
            )));
        }
        let mut entry_offsets = Vec::with_capacity(adjacency.edge_count() + 1);
        let mut entry_index = Vec::new();
        let mut entry_value = Vec::new();
        let mut scratch = Vec::new();
        entry_offsets.push(0);
        for e in 0..adjacency.edge_count() {
            basis.eval_into(coords.edge(e), &mut scratch)?;
            for &(p, v) in &scratch {
                entry_index.push(p as u32);
                entry_value.push(v);
            }
            entry_offsets.push(entry_index.len());
        }
        let inv_degree = (0..adjacency.vertex_count())
            .map(|v| match adjacency.degree(v) {
                0 => 0.0,
                d => 1.0 / d as f64,
            })
            .collect();
        Ok(Self {
            adjacency: adjacency.clone(),
            basis: basis.clone(),
            inv_degree,
            entry_offsets,
            entry_index,
            entry_value,
        })
    }

    #[inline]
    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    #[inline]
    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.adjacency.vertex_count()
    }

    #[inline]
    pub(crate) fn inv_degree(&self, v: usize) -> f64 {
        self.inv_degree[v]
    }

    /// Nonzero `(p, B_p(u_e))` pairs of edge `e`.
    #[inline]
    pub fn edge_entries(&self, e: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.entry_offsets[e]..self.entry_offsets[e + 1];
        self.entry_index[r.clone()].iter().map(|&p| p as usize).zip(self.entry_value[r].iter().copied())
    }

    /// Kernel value `x(u_e) = Σ_p w_p B_p(u_e)` of every edge.
    pub fn kernel_values(&self, control: &[f64]) -> Vec<f64> {
        (0..self.adjacency.edge_count())
            .map(|e| self.edge_entries(e).map(|(p, b)| control[p] * b).sum())
            .collect()
    }

    /// The same support with vertices relabeled: new vertex `i` is old vertex `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.vertex_count();
        assert_eq!(perm.len(), n, "permutation length");
        let mut inv = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let lists = perm
            .iter()
            .map(|&old| self.adjacency.neighbors(old).iter().map(|&w| inv[w]).collect())
            .collect();
        let adjacency = Adjacency::from_lists(lists);
        let mut entry_offsets = vec![0];
        let mut entry_index = Vec::with_capacity(self.entry_index.len());
        let mut entry_value = Vec::with_capacity(self.entry_value.len());
        for (i, j) in adjacency.edges() {
            let e = self.adjacency.find_edge(perm[i], perm[j]).expect("edge survives relabeling");
            let r = self.entry_offsets[e]..self.entry_offsets[e + 1];
            entry_index.extend_from_slice(&self.entry_index[r.clone()]);
            entry_value.extend_from_slice(&self.entry_value[r]);
            entry_offsets.push(entry_index.len());
        }
        Self {
            inv_degree: perm.iter().map(|&old| self.inv_degree[old]).collect(),
            adjacency,
            basis: self.basis.clone(),
            entry_offsets,
            entry_index,
            entry_value,
        }
    }

    /// `grad_control[p] += Σ_e grad_kernel[e] · B_p(u_e)`.
    pub(crate) fn accumulate_control_grad(&self, grad_kernel: &[f64], grad_control: &mut [f64]) {
        for (e, &g) in grad_kernel.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (p, b) in self.edge_entries(e) {
                grad_control[p] += g * b;
            }
        }
    }
}
