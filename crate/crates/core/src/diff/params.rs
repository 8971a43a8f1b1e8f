use rand::Rng;

use crate::tensor::Tensor2;

/// Mutable view of one named parameter tensor and its gradient buffer.
pub struct ParamRef<'a> {
    pub name: String,
    pub shape: (usize, usize),
    pub value: &'a mut [f64],
    pub grad: &'a mut [f64],
}

/// Anything holding trainable tensors. Visiting order is fixed and defines
/// the checkpoint layout.
pub trait Parameterized {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>));

    fn zero_grad(&mut self) {
        self.visit_params("", &mut |p| p.grad.iter_mut().for_each(|g| *g = 0.0));
    }

    fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params("", &mut |p| n += p.value.len());
        n
    }

    fn params_finite(&mut self) -> bool {
        let mut ok = true;
        self.visit_params("", &mut |p| ok &= p.value.iter().all(|v| v.is_finite()));
        ok
    }
}

pub(crate) fn visit_tensor(
    f: &mut dyn FnMut(ParamRef<'_>),
    name: String,
    value: &mut Tensor2,
    grad: &mut Tensor2,
) {
    let shape = value.shape();
    f(ParamRef { name, shape, value: value.as_mut_slice(), grad: grad.as_mut_slice() });
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor2 {
    let limit = (6.0 / (rows + cols).max(1) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor2::from_vec(rows, cols, data).expect("sized buffer")
}
