use rand::Rng;

use super::params::{join, visit_tensor};
use super::{glorot_uniform, Activation, ParamRef, Parameterized};
use crate::error::ShapeError;
use crate::tensor::{matmul_nt_acc, matmul_tn_acc, Tensor2};

/// Affine map `y = x·W + b` with `W: in×out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor2,
    pub bias: Tensor2,
    pub grad_weight: Tensor2,
    pub grad_bias: Tensor2,
}

#[derive(Debug, Clone)]
pub struct LinearCache {
    input: Tensor2,
}

impl Linear {
    pub fn new<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Self::from_parts(glorot_uniform(inputs, outputs, rng), Tensor2::zeros(1, outputs))
    }

    pub fn from_parts(weight: Tensor2, bias: Tensor2) -> Self {
        assert_eq!(bias.shape(), (1, weight.cols()), "bias must be 1×out");
        Self {
            grad_weight: Tensor2::zeros(weight.rows(), weight.cols()),
            grad_bias: Tensor2::zeros(1, weight.cols()),
            weight,
            bias,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, input: &Tensor2) -> Result<(Tensor2, LinearCache), ShapeError> {
        let mut out = input.matmul(&self.weight)?;
        let b = self.bias.row(0);
        for i in 0..out.rows() {
            for (o, bv) in out.row_mut(i).iter_mut().zip(b) {
                *o += bv;
            }
        }
        Ok((out, LinearCache { input: input.clone() }))
    }

    /// Accumulates parameter gradients and returns the gradient wrt the input.
    pub fn backward(&mut self, cache: &LinearCache, upstream: &Tensor2) -> Result<Tensor2, ShapeError> {
        if upstream.shape() != (cache.input.rows(), self.outputs()) {
            return Err(ShapeError::new(format!(
                "linear backward: upstream {:?}, expected ({}, {})",
                upstream.shape(),
                cache.input.rows(),
                self.outputs()
            )));
        }
        matmul_tn_acc(&cache.input, upstream, &mut self.grad_weight);
        let gb = self.grad_bias.row_mut(0);
        for i in 0..upstream.rows() {
            for (g, u) in gb.iter_mut().zip(upstream.row(i)) {
                *g += u;
            }
        }
        let mut grad_in = Tensor2::zeros(cache.input.rows(), self.inputs());
        matmul_nt_acc(upstream, &self.weight, &mut grad_in);
        Ok(grad_in)
    }
}

impl Parameterized for Linear {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
        visit_tensor(f, join(prefix, "weight"), &mut self.weight, &mut self.grad_weight);
        visit_tensor(f, join(prefix, "bias"), &mut self.bias, &mut self.grad_bias);
    }
}

/// Linear layers with a shared hidden activation; the last layer emits logits.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpStack {
    pub layers: Vec<Linear>,
    pub hidden: Activation,
    /// Whether the logits are meant to be followed by a softmax.
    pub softmax: bool,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    linear: Vec<LinearCache>,
    /// Post-activation output of every hidden layer.
    hidden_out: Vec<Tensor2>,
}

impl MlpCache {
    /// Input of the final layer (the last hidden representation).
    pub fn penultimate(&self) -> &Tensor2 {
        &self.linear.last().expect("non-empty stack").input
    }
}

impl MlpStack {
    /// `widths = [in, h1, …, out]`.
    pub fn new<R: Rng>(widths: &[usize], hidden: Activation, rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "an MLP needs at least one layer");
        let layers = widths.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        Self { layers, hidden, softmax: true }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().expect("non-empty stack").outputs()
    }

    pub fn forward(&self, input: &Tensor2) -> Result<(Tensor2, MlpCache), ShapeError> {
        let mut linear = Vec::with_capacity(self.layers.len());
        let mut hidden_out = Vec::with_capacity(self.layers.len() - 1);
        let mut x = input.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            let (mut y, c) = layer.forward(&x)?;
            linear.push(c);
            if k + 1 < self.layers.len() {
                self.hidden.apply_in_place(&mut y);
                hidden_out.push(y.clone());
            }
            x = y;
        }
        Ok((x, MlpCache { linear, hidden_out }))
    }

    pub fn backward(&mut self, cache: &MlpCache, upstream: &Tensor2) -> Result<Tensor2, ShapeError> {
        self.backward_with_penultimate(cache, upstream, None)
    }

    /// Like [`MlpStack::backward`], adding `extra` to the gradient arriving at
    /// the penultimate representation (for consumers other than the last layer).
    pub fn backward_with_penultimate(
        &mut self,
        cache: &MlpCache,
        upstream: &Tensor2,
        extra: Option<&Tensor2>,
    ) -> Result<Tensor2, ShapeError> {
        let last = self.layers.len() - 1;
        let mut grad = upstream.clone();
        for k in (0..self.layers.len()).rev() {
            if k < last {
                self.hidden.backward_in_place(&cache.hidden_out[k], &mut grad);
            }
            grad = self.layers[k].backward(&cache.linear[k], &grad)?;
            if k == last {
                if let Some(e) = extra {
                    grad.add_assign(e)?;
                }
            }
        }
        Ok(grad)
    }
}

impl Parameterized for MlpStack {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
        for (k, layer) in self.layers.iter_mut().enumerate() {
            layer.visit_params(&join(prefix, &format!("layer{k}")), f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_layer_passes_input_through() {
        let l = Linear::from_parts(Tensor2::identity(3), Tensor2::zeros(1, 3));
        let x = Tensor2::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.0, 1.0]]);
        assert_eq!(l.forward(&x).unwrap().0, x);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut l = Linear::new(4, 3, &mut rng);
        let x = glorot_uniform(5, 4, &mut rng);
        let (_, c) = l.forward(&x).unwrap();
        let gi = l.backward(&c, &Tensor2::zeros(5, 3)).unwrap();
        assert!(gi.as_slice().iter().all(|&v| v == 0.0));
        assert!(l.grad_weight.as_slice().iter().all(|&v| v == 0.0));
        assert!(l.grad_bias.as_slice().iter().all(|&v| v == 0.0));
        assert!(l.backward(&c, &Tensor2::zeros(5, 2)).is_err());
    }

    #[test]
    fn mlp_penultimate_is_last_hidden_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mlp = MlpStack::new(&[3, 4, 2], Activation::Elu, &mut rng);
        let x = glorot_uniform(6, 3, &mut rng);
        let (_, cache) = mlp.forward(&x).unwrap();
        let (mut h, _) = mlp.layers[0].forward(&x).unwrap();
        Activation::Elu.apply_in_place(&mut h);
        assert_eq!(cache.penultimate(), &h);
    }
}
