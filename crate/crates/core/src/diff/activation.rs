use serde::{Deserialize, Serialize};

use crate::tensor::Tensor2;

/// Pointwise non-linearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    /// `x` for `x > 0`, `eˣ − 1` otherwise.
    #[default]
    Elu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Elu => {
                if y > 0.0 {
                    1.0
                } else {
                    y + 1.0
                }
            }
        }
    }

    pub fn apply_in_place(self, t: &mut Tensor2) {
        if self != Activation::Identity {
            t.as_mut_slice().iter_mut().for_each(|x| *x = self.apply(*x));
        }
    }

    /// Turns an upstream gradient wrt the output into one wrt the pre-activation.
    pub fn backward_in_place(self, output: &Tensor2, grad: &mut Tensor2) {
        if self != Activation::Identity {
            for (g, &y) in grad.as_mut_slice().iter_mut().zip(output.as_slice()) {
                *g *= self.derivative_from_output(y);
            }
        }
    }
}
