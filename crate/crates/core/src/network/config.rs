use serde::{Deserialize, Serialize};

use crate::diff::Activation;
use crate::error::ConfigError;
use crate::spline::BSplineBasis;

/// B-spline basis shared by every convolution of one branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub degree: usize,
    pub sizes: Vec<usize>,
}

impl KernelConfig {
    pub fn basis(&self) -> Result<BSplineBasis, ConfigError> {
        BSplineBasis::new(self.degree, self.sizes.clone())
            .map_err(|e| ConfigError::Invalid(format!("kernel: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoarseNetConfig {
    /// Output widths of the intrinsic convolutions.
    pub intrinsic_widths: Vec<usize>,
    /// Index of the intrinsic layer whose output is handed to refinement.
    pub mid_layer: usize,
    /// Encoder widths; one pooling pair follows each encoder level and the
    /// decoder mirrors them back.
    pub extrinsic_encoder: Vec<usize>,
    pub extrinsic_bottleneck: usize,
    /// Hidden MLP widths between the branch concatenation and the logits.
    pub mlp_hidden: Vec<usize>,
    pub intrinsic_kernel: KernelConfig,
    pub extrinsic_kernel: KernelConfig,
}

impl Default for CoarseNetConfig {
    fn default() -> Self {
        Self {
            intrinsic_widths: vec![32, 64, 64],
            mid_layer: 1,
            extrinsic_encoder: vec![32, 64],
            extrinsic_bottleneck: 128,
            mlp_hidden: vec![64, 32],
            intrinsic_kernel: KernelConfig { degree: 1, sizes: vec![5, 5] },
            extrinsic_kernel: KernelConfig { degree: 1, sizes: vec![5, 5, 5] },
        }
    }
}

impl CoarseNetConfig {
    pub fn branch_width(&self) -> usize {
        self.intrinsic_widths.last().copied().unwrap_or(0) + self.extrinsic_encoder.first().copied().unwrap_or(0)
    }

    pub fn mid_width(&self) -> usize {
        self.intrinsic_widths[self.mid_layer]
    }

    pub fn penultimate_width(&self, input: usize) -> usize {
        self.mlp_hidden.last().copied().unwrap_or(input)
    }

    pub fn pool_depth(&self) -> usize {
        self.extrinsic_encoder.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineNetConfig {
    /// Output widths of the three intrinsic convolutions.
    pub conv_widths: Vec<usize>,
    pub mlp_hidden: Vec<usize>,
    /// Weight of the Dice term in `NLL − λ·D`.
    pub lambda: f64,
}

impl Default for RefineNetConfig {
    fn default() -> Self {
        Self { conv_widths: vec![64, 64, 64], mlp_hidden: vec![64], lambda: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub classes: usize,
    pub input_features: usize,
    /// Neighborhood radius, in face-adjacency hops, of the surface graph.
    pub graph_hops: usize,
    /// Whether convolutions carry the center-vertex transform.
    pub root: bool,
    pub activation: Activation,
    pub coarse: CoarseNetConfig,
    pub refine: RefineNetConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            classes: 8,
            input_features: 3,
            graph_hops: 1,
            root: true,
            activation: Activation::Elu,
            coarse: CoarseNetConfig::default(),
            refine: RefineNetConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let c = &self.coarse;
        if self.classes < 2 {
            return bad(format!("classes must be at least 2, got {}", self.classes));
        }
        if self.input_features == 0 || self.graph_hops == 0 {
            return bad("input_features and graph_hops must be positive".into());
        }
        if c.intrinsic_widths.is_empty() || c.mid_layer >= c.intrinsic_widths.len() {
            return bad(format!(
                "mid_layer {} outside the {}-layer intrinsic stack",
                c.mid_layer,
                c.intrinsic_widths.len()
            ));
        }
        if c.extrinsic_encoder.is_empty() {
            return bad("extrinsic_encoder needs at least one level".into());
        }
        let widths = c
            .intrinsic_widths
            .iter()
            .chain(&c.extrinsic_encoder)
            .chain(std::iter::once(&c.extrinsic_bottleneck))
            .chain(&c.mlp_hidden)
            .chain(&self.refine.conv_widths)
            .chain(&self.refine.mlp_hidden);
        if widths.into_iter().any(|&w| w == 0) {
            return bad("channel widths must be positive".into());
        }
        if c.intrinsic_kernel.sizes.len() != 2 || c.extrinsic_kernel.sizes.len() != 3 {
            return bad("intrinsic kernels are 2-D and extrinsic kernels 3-D".into());
        }
        c.intrinsic_kernel.basis()?;
        c.extrinsic_kernel.basis()?;
        if self.refine.conv_widths.len() != 3 {
            return bad(format!(
                "refinement uses exactly 3 intrinsic convolutions, got {}",
                self.refine.conv_widths.len()
            ));
        }
        if !(self.refine.lambda >= 0.0 && self.refine.lambda.is_finite()) {
            return bad(format!("lambda must be finite and non-negative, got {}", self.refine.lambda));
        }
        Ok(())
    }
}

/// Optimization schedule for both stages. Decay is counted in epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub coarse_epochs: usize,
    pub refine_epochs: usize,
    pub coarse_rate: f64,
    /// Rate of the coarse parameters while the refinement stage trains.
    pub finetune_rate: f64,
    pub refine_rate: f64,
    pub decay_factor: f64,
    pub decay_interval: u64,
    /// Subjects whose gradients are averaged into one update.
    pub batch_size: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            coarse_epochs: 200,
            refine_epochs: 100,
            coarse_rate: 0.01,
            finetune_rate: 0.0001,
            refine_rate: 0.005,
            decay_factor: 0.5,
            decay_interval: 20,
            batch_size: 1,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let rates = [self.coarse_rate, self.finetune_rate, self.refine_rate];
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(ConfigError::Invalid(format!("learning rates must be positive, got {rates:?}")));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) || self.decay_interval == 0 {
            return Err(ConfigError::Invalid(format!(
                "decay needs a factor in (0, 1] and a positive interval, got {} every {}",
                self.decay_factor, self.decay_interval
            )));
        }
        if self.batch_size == 0 {
            return Err(ConfigError::Invalid("batch_size must be positive".into()));
        }
        Ok(())
    }
}
