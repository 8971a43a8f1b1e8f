//! Dense layers, activations, losses and the optimizer, each with a
//! hand-written backward pass.

mod activation;
mod linear;
mod loss;
pub(crate) mod params;
mod sgd;

pub use activation::Activation;
pub use linear::{Linear, LinearCache, MlpCache, MlpStack};
pub use loss::{
    dice_score, dice_value_and_grad, one_hot, softmax_backward, softmax_nll, softmax_rows,
    DiceOutput, NllOutput, DICE_EPSILON,
};
pub use params::{glorot_uniform, ParamRef, Parameterized};
pub use sgd::{sgd_step, SgdState};
