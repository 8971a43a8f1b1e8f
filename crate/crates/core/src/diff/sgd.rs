use serde::{Deserialize, Serialize};

/// Plain SGD with a step-wise multiplicative learning-rate decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdState {
    pub rate: f64,
    /// Multiplier in (0, 1] applied every `decay_interval` steps.
    pub decay_factor: f64,
    /// Zero disables decay.
    pub decay_interval: u64,
    pub step: u64,
}

impl SgdState {
    pub fn new(rate: f64, decay_factor: f64, decay_interval: u64) -> Self {
        assert!(rate > 0.0, "learning rate must be positive");
        assert!(decay_factor > 0.0 && decay_factor <= 1.0, "decay factor must lie in (0, 1]");
        Self { rate, decay_factor, decay_interval, step: 0 }
    }

    /// `p ← p − r·g` without touching the schedule; call [`SgdState::advance`]
    /// once per optimizer step when updating several tensors.
    pub fn apply(&self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient length mismatch");
        for (p, g) in params.iter_mut().zip(grads) {
            *p -= self.rate * g;
        }
    }

    /// Advances the step counter, applying decay at interval boundaries.
    pub fn advance(&mut self) {
        self.step += 1;
        if self.decay_interval > 0 && self.step.is_multiple_of(self.decay_interval) {
            self.rate *= self.decay_factor;
        }
    }
}

/// `p ← p − r·g`, then advances the schedule.
pub fn sgd_step(params: &mut [f64], grads: &[f64], state: &mut SgdState) {
    state.apply(params, grads);
    state.advance();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = [1.0, -2.0];
        sgd_step(&mut p, &[0.0, 0.0], &mut SgdState::new(0.1, 1.0, 0));
        assert_eq!(p, [1.0, -2.0]);
    }

    #[test]
    fn single_step() {
        let mut p = [0.0];
        let mut s = SgdState::new(0.1, 1.0, 0);
        sgd_step(&mut p, &[1.0], &mut s);
        assert_eq!(p, [-0.1]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn decay_schedule() {
        let mut s = SgdState::new(0.8, 0.5, 10);
        for _ in 0..20 {
            s.advance();
        }
        assert_eq!(s.rate, 0.2);
        for _ in 0..9 {
            s.advance();
        }
        assert_eq!(s.rate, 0.2);
    }
}
