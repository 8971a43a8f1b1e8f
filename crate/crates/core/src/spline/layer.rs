use rand::Rng;

use super::{BSplineBasis, SplineSupport};
use crate::diff::{glorot_uniform, Activation, ParamRef, Parameterized};
use crate::diff::params::{join, visit_tensor};
use crate::error::{ShapeError, SplineError};
use crate::tensor::{matmul_acc, matmul_nt_acc, matmul_tn_acc, Tensor2};

/// One B-spline graph convolution with a scalar kernel per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineConvLayer {
    pub basis: BSplineBasis,
    /// Control weights `w_p`, stored 1×D.
    pub control: Tensor2,
    /// Feature transform `W: M_in × M_out`.
    pub weight: Tensor2,
    /// Center-vertex transform; `None` runs the neighbor-only aggregation.
    pub root: Option<Tensor2>,
    pub activation: Activation,
    pub grad_control: Tensor2,
    pub grad_weight: Tensor2,
    pub grad_root: Option<Tensor2>,
}

/// Forward state needed by the backward pass.
#[derive(Debug, Clone)]
pub struct SplineCache {
    input: Tensor2,
    projected: Tensor2,
    kernel: Vec<f64>,
    output: Tensor2,
}

impl SplineCache {
    pub fn output(&self) -> &Tensor2 {
        &self.output
    }
}

impl SplineConvLayer {
    pub fn new<R: Rng>(
        basis: BSplineBasis,
        inputs: usize,
        outputs: usize,
        with_root: bool,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let d = basis.control_count();
        let control = (0..d).map(|_| 1.0 + rng.gen_range(-0.1..0.1)).collect();
        let control = Tensor2::from_vec(1, d, control).expect("sized buffer");
        let weight = glorot_uniform(inputs, outputs, rng);
        let root = with_root.then(|| glorot_uniform(inputs, outputs, rng));
        Self::from_parts(basis, control, weight, root, activation)
    }

    pub fn from_parts(
        basis: BSplineBasis,
        control: Tensor2,
        weight: Tensor2,
        root: Option<Tensor2>,
        activation: Activation,
    ) -> Self {
        assert_eq!(control.shape(), (1, basis.control_count()), "control weights must be 1×D");
        if let Some(r) = &root {
            assert_eq!(r.shape(), weight.shape(), "root transform must match W");
        }
        Self {
            grad_control: Tensor2::zeros(1, control.cols()),
            grad_weight: Tensor2::zeros(weight.rows(), weight.cols()),
            grad_root: root.as_ref().map(|r| Tensor2::zeros(r.rows(), r.cols())),
            basis,
            control,
            weight,
            root,
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.cols()
    }

    /// `x(u) = Σ_p w_p B_p(u)`.
    pub fn kernel_eval(&self, u: &[f64]) -> Result<f64, SplineError> {
        let c = self.control.row(0);
        Ok(self.basis.eval(u)?.into_iter().map(|(p, b)| c[p] * b).sum())
    }

    fn check(&self, support: &SplineSupport, rows: usize, cols: usize) -> Result<(), SplineError> {
        if support.basis() != &self.basis {
            return Err(SplineError::InvalidBasis("support was built for a different basis".into()));
        }
        if rows != support.vertex_count() || cols != self.inputs() {
            return Err(ShapeError::new(format!(
                "features {rows}x{cols} for a {}-vertex graph and {} input channels",
                support.vertex_count(),
                self.inputs()
            ))
            .into());
        }
        Ok(())
    }

    /// `δ( (1/|N(i)|) Σ_j x(u_ij) · f_j · W + f_i · W_root )` for every vertex.
    pub fn aggregate_forward(
        &self,
        support: &SplineSupport,
        input: &Tensor2,
    ) -> Result<(Tensor2, SplineCache), SplineError> {
        self.check(support, input.rows(), input.cols())?;
        let adjacency = support.adjacency();
        if self.root.is_none() {
            if let Some(v) = (0..adjacency.vertex_count()).find(|&v| adjacency.degree(v) == 0) {
                return Err(SplineError::IsolatedVertex(v));
            }
        }
        let projected = input.matmul(&self.weight)?;
        let kernel = support.kernel_values(self.control.row(0));
        let out_w = self.outputs();

        let mut z = Tensor2::zeros(input.rows(), out_w);
        for i in 0..adjacency.vertex_count() {
            let inv = support.inv_degree(i);
            let zi = z.row_mut(i);
            for e in adjacency.edge_range(i) {
                let j = adjacency.targets()[e];
                let x = kernel[e] * inv;
                for (o, h) in zi.iter_mut().zip(projected.row(j)) {
                    *o += x * h;
                }
            }
        }
        if let Some(root) = &self.root {
            matmul_acc(input, root, &mut z);
        }
        self.activation.apply_in_place(&mut z);
        let cache = SplineCache { input: input.clone(), projected, kernel, output: z.clone() };
        Ok((z, cache))
    }

    /// Accumulates `∂/∂w_p`, `∂/∂W`, `∂/∂W_root` into the gradient buffers and
    /// returns `∂/∂F`.
    pub fn aggregate_backward(
        &mut self,
        support: &SplineSupport,
        cache: &SplineCache,
        upstream: &Tensor2,
    ) -> Result<Tensor2, SplineError> {
        self.check(support, cache.input.rows(), cache.input.cols())?;
        if upstream.shape() != cache.output.shape() {
            return Err(ShapeError::new(format!(
                "upstream {:?} vs output {:?}",
                upstream.shape(),
                cache.output.shape()
            ))
            .into());
        }
        let mut dz = upstream.clone();
        self.activation.backward_in_place(&cache.output, &mut dz);

        let mut grad_in = Tensor2::zeros(cache.input.rows(), self.inputs());
        if let (Some(root), Some(grad_root)) = (&self.root, &mut self.grad_root) {
            matmul_tn_acc(&cache.input, &dz, grad_root);
            matmul_nt_acc(&dz, root, &mut grad_in);
        }

        let adjacency = support.adjacency();
        let mut d_projected = Tensor2::zeros(cache.projected.rows(), cache.projected.cols());
        let mut d_kernel = vec![0.0; adjacency.edge_count()];
        for i in 0..adjacency.vertex_count() {
            let inv = support.inv_degree(i);
            let dzi = dz.row(i);
            for e in adjacency.edge_range(i) {
                let j = adjacency.targets()[e];
                let hj = cache.projected.row(j);
                d_kernel[e] = inv * dzi.iter().zip(hj).map(|(a, b)| a * b).sum::<f64>();
                let x = cache.kernel[e] * inv;
                for (o, g) in d_projected.row_mut(j).iter_mut().zip(dzi) {
                    *o += x * g;
                }
            }
        }
        support.accumulate_control_grad(&d_kernel, self.grad_control.row_mut(0));
        matmul_tn_acc(&cache.input, &d_projected, &mut self.grad_weight);
        matmul_nt_acc(&d_projected, &self.weight, &mut grad_in);
        Ok(grad_in)
    }
}

impl Parameterized for SplineConvLayer {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
        visit_tensor(f, join(prefix, "control"), &mut self.control, &mut self.grad_control);
        visit_tensor(f, join(prefix, "weight"), &mut self.weight, &mut self.grad_weight);
        if let (Some(r), Some(g)) = (&mut self.root, &mut self.grad_root) {
            visit_tensor(f, join(prefix, "root"), r, g);
        }
    }
}
