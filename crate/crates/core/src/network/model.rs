use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, PreparedSubject};
use crate::diff::params::join;
use crate::diff::{
    dice_value_and_grad, one_hot, softmax_backward, softmax_nll, softmax_rows, MlpCache, MlpStack,
    ParamRef, Parameterized, SgdState,
};
use crate::error::{ConfigError, Error, Result, ShapeError};
use crate::spline::{SplineCache, SplineConvLayer};
use crate::tensor::Tensor2;

/// Which part of the model has been trained so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Coarse,
    Refine,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Coarse => "coarse",
            Stage::Refine => "refine",
        })
    }
}

/// Intrinsic stack, extrinsic U-shape and the classification MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseNet {
    pub intrinsic: Vec<SplineConvLayer>,
    pub encoder: Vec<SplineConvLayer>,
    pub bottleneck: SplineConvLayer,
    /// `decoder[k]` runs on pooling level `k + 1` and emits `encoder[k]`'s width.
    pub decoder: Vec<SplineConvLayer>,
    pub mlp: MlpStack,
}

/// Three intrinsic convolutions whose outputs are concatenated for the MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineNet {
    pub convs: Vec<SplineConvLayer>,
    pub mlp: MlpStack,
}

/// Learning-rate state of each parameter group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub coarse: Option<SgdState>,
    pub refine: Option<SgdState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParcellationModel {
    config: ModelConfig,
    seed: u64,
    pub stage: Stage,
    pub coarse: CoarseNet,
    pub refine: RefineNet,
    pub optimizer: OptimizerState,
}

#[derive(Debug, Clone)]
struct CoarseCache {
    intrinsic: Vec<SplineCache>,
    encoder: Vec<SplineCache>,
    bottleneck: SplineCache,
    decoder: Vec<SplineCache>,
    mlp: MlpCache,
}

#[derive(Debug, Clone)]
pub struct CoarseOutput {
    pub logits: Tensor2,
    /// Input of the last MLP layer.
    pub penultimate: Tensor2,
    /// Output of the configured middle intrinsic layer.
    pub mid: Tensor2,
    /// Final outputs of the two branches before concatenation.
    pub intrinsic: Tensor2,
    pub extrinsic: Tensor2,
    cache: CoarseCache,
}

#[derive(Debug, Clone)]
pub struct RefineOutput {
    pub logits: Tensor2,
    convs: Vec<SplineCache>,
    mlp: MlpCache,
}

/// Loss value and soft Dice of one forward/backward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub dice: f64,
}

/// Per-vertex labels with the probabilities they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    pub probs: Tensor2,
}

/// Row-wise argmax; ties go to the lowest index.
pub fn argmax_rows(probs: &Tensor2) -> Vec<usize> {
    (0..probs.rows())
        .map(|i| {
            let row = probs.row(i);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

impl ParcellationModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = &config.coarse;
        let (act, root) = (config.activation, config.root);
        let ib = c.intrinsic_kernel.basis()?;
        let eb = c.extrinsic_kernel.basis()?;

        let mut intrinsic = Vec::new();
        let mut width = config.input_features;
        for &w in &c.intrinsic_widths {
            intrinsic.push(SplineConvLayer::new(ib.clone(), width, w, root, act, &mut rng));
            width = w;
        }
        let mut encoder = Vec::new();
        let mut width = config.input_features;
        for &w in &c.extrinsic_encoder {
            encoder.push(SplineConvLayer::new(eb.clone(), width, w, root, act, &mut rng));
            width = w;
        }
        let bottleneck = SplineConvLayer::new(eb.clone(), width, c.extrinsic_bottleneck, root, act, &mut rng);
        let depth = c.extrinsic_encoder.len();
        let mut decoder: Vec<SplineConvLayer> = Vec::with_capacity(depth);
        for k in (0..depth).rev() {
            let input = if k + 1 == depth { c.extrinsic_bottleneck } else { c.extrinsic_encoder[k + 1] };
            decoder.push(SplineConvLayer::new(eb.clone(), input, c.extrinsic_encoder[k], root, act, &mut rng));
        }
        decoder.reverse();
        let mut widths = vec![c.branch_width()];
        widths.extend(&c.mlp_hidden);
        widths.push(config.classes);
        let mlp = MlpStack::new(&widths, act, &mut rng);
        let coarse = CoarseNet { intrinsic, encoder, bottleneck, decoder, mlp };

        let r = &config.refine;
        let mut width = c.penultimate_width(c.branch_width()) + c.mid_width() + 3;
        let mut convs = Vec::new();
        for &w in &r.conv_widths {
            convs.push(SplineConvLayer::new(ib.clone(), width, w, root, act, &mut rng));
            width = w;
        }
        let mut widths = vec![r.conv_widths.iter().sum()];
        widths.extend(&r.mlp_hidden);
        widths.push(config.classes);
        let mlp = MlpStack::new(&widths, act, &mut rng);
        let refine = RefineNet { convs, mlp };

        Ok(Self {
            config,
            seed,
            stage: Stage::Coarse,
            coarse,
            refine,
            optimizer: OptimizerState { coarse: None, refine: None },
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn classes(&self) -> usize {
        self.config.classes
    }

    fn check_subject(&self, subject: &PreparedSubject) -> Result<()> {
        if subject.features().cols() != self.config.input_features {
            return Err(ShapeError::new(format!(
                "subject {} has {} features, model expects {}",
                subject.id(),
                subject.features().cols(),
                self.config.input_features
            ))
            .into());
        }
        if subject.pools().len() != self.coarse.encoder.len() {
            return Err(ConfigError::Invalid(format!(
                "subject {} was prepared with {} pooling levels, model has {}",
                subject.id(),
                subject.pools().len(),
                self.coarse.encoder.len()
            ))
            .into());
        }
        Ok(())
    }

    pub fn coarse_forward(&self, subject: &PreparedSubject) -> Result<CoarseOutput> {
        self.check_subject(subject)?;
        let net = &self.coarse;
        let x = subject.features();

        let mut intrinsic = Vec::with_capacity(net.intrinsic.len());
        let mut h = x.clone();
        for layer in &net.intrinsic {
            let (out, cache) = layer.aggregate_forward(subject.intrinsic(), &h)?;
            intrinsic.push(cache);
            h = out;
        }
        let intrinsic_out = h;
        let mid = intrinsic[self.config.coarse.mid_layer].output().clone();

        let levels = subject.extrinsic();
        let pools = subject.pools();
        let mut encoder = Vec::with_capacity(net.encoder.len());
        let mut skips = Vec::with_capacity(net.encoder.len());
        let mut cur = x.clone();
        for (k, layer) in net.encoder.iter().enumerate() {
            let (out, cache) = layer.aggregate_forward(&levels[k], &cur)?;
            encoder.push(cache);
            cur = pools[k].pool_features(&out)?;
            skips.push(out);
        }
        let depth = net.encoder.len();
        let (mut cur, bottleneck) = net.bottleneck.aggregate_forward(&levels[depth], &cur)?;
        let mut decoder = Vec::with_capacity(depth);
        for k in (0..depth).rev() {
            let (out, cache) = net.decoder[k].aggregate_forward(&levels[k + 1], &cur)?;
            decoder.push(cache);
            cur = pools[k].unpool_features(&out)?;
            cur.add_assign(&skips[k])?;
        }
        decoder.reverse();

        let joined = Tensor2::hcat(&[&intrinsic_out, &cur])?;
        let (logits, mlp) = net.mlp.forward(&joined)?;
        let penultimate = mlp.penultimate().clone();
        Ok(CoarseOutput {
            logits,
            penultimate,
            mid,
            intrinsic: intrinsic_out,
            extrinsic: cur,
            cache: CoarseCache { intrinsic, encoder, bottleneck, decoder, mlp },
        })
    }

    /// Accumulates coarse parameter gradients from the logits gradient plus
    /// optional gradients arriving at the penultimate and mid outputs.
    pub fn coarse_backward(
        &mut self,
        subject: &PreparedSubject,
        out: &CoarseOutput,
        grad_logits: &Tensor2,
        grad_penultimate: Option<&Tensor2>,
        grad_mid: Option<&Tensor2>,
    ) -> Result<()> {
        let mid_layer = self.config.coarse.mid_layer;
        let net = &mut self.coarse;
        let cache = &out.cache;
        let g = net.mlp.backward_with_penultimate(&cache.mlp, grad_logits, grad_penultimate)?;
        let intrinsic_w = net.intrinsic.last().expect("non-empty").outputs();
        let mut parts = g.hsplit(&[intrinsic_w, g.cols() - intrinsic_w])?.into_iter();
        let (g_intrinsic, g_extrinsic) = (parts.next().expect("two parts"), parts.next().expect("two parts"));

        let mut g = g_intrinsic;
        for l in (0..net.intrinsic.len()).rev() {
            if l == mid_layer {
                if let Some(m) = grad_mid {
                    g.add_assign(m)?;
                }
            }
            g = net.intrinsic[l].aggregate_backward(subject.intrinsic(), &cache.intrinsic[l], &g)?;
        }

        let levels = subject.extrinsic();
        let pools = subject.pools();
        let depth = net.encoder.len();
        let mut g = g_extrinsic;
        let mut g_skips = Vec::with_capacity(depth);
        for k in 0..depth {
            g_skips.push(g.clone());
            // the adjoint of copy-back is a sum over cluster members
            let g_out = pools[k].pool_features(&g)?;
            g = net.decoder[k].aggregate_backward(&levels[k + 1], &cache.decoder[k], &g_out)?;
        }
        g = net.bottleneck.aggregate_backward(&levels[depth], &cache.bottleneck, &g)?;
        for k in (0..depth).rev() {
            let mut g_out = pools[k].unpool_features(&g)?;
            g_out.add_assign(&g_skips[k])?;
            g = net.encoder[k].aggregate_backward(&levels[k], &cache.encoder[k], &g_out)?;
        }
        Ok(())
    }

    pub fn refine_forward(
        &self,
        subject: &PreparedSubject,
        penultimate: &Tensor2,
        mid: &Tensor2,
    ) -> Result<RefineOutput> {
        let n = subject.vertex_count();
        if penultimate.rows() != n || mid.rows() != n {
            return Err(ShapeError::new(format!(
                "coarse outputs have {} and {} rows for {n} vertices",
                penultimate.rows(),
                mid.rows()
            ))
            .into());
        }
        let mut h = Tensor2::hcat(&[penultimate, mid, subject.xyz()])?;
        let mut convs = Vec::with_capacity(self.refine.convs.len());
        let mut outs = Vec::with_capacity(self.refine.convs.len());
        for layer in &self.refine.convs {
            let (out, cache) = layer.aggregate_forward(subject.intrinsic(), &h)?;
            convs.push(cache);
            outs.push(out.clone());
            h = out;
        }
        let joined = Tensor2::hcat(&outs.iter().collect::<Vec<_>>())?;
        let (logits, mlp) = self.refine.mlp.forward(&joined)?;
        Ok(RefineOutput { logits, convs, mlp })
    }

    /// Accumulates refinement gradients; returns the gradients with respect
    /// to the penultimate and mid inputs.
    pub fn refine_backward(
        &mut self,
        subject: &PreparedSubject,
        out: &RefineOutput,
        grad_logits: &Tensor2,
    ) -> Result<(Tensor2, Tensor2)> {
        let net = &mut self.refine;
        let g = net.mlp.backward(&out.mlp, grad_logits)?;
        let widths: Vec<usize> = net.convs.iter().map(|c| c.outputs()).collect();
        let parts = g.hsplit(&widths)?;
        let mut carry: Option<Tensor2> = None;
        for l in (0..net.convs.len()).rev() {
            let mut g_out = parts[l].clone();
            if let Some(c) = &carry {
                g_out.add_assign(c)?;
            }
            carry = Some(net.convs[l].aggregate_backward(subject.intrinsic(), &out.convs[l], &g_out)?);
        }
        let g_in = carry.expect("three convolutions");
        let pen_w = g_in.cols() - self.config.coarse.mid_width() - 3;
        let mut parts = g_in.hsplit(&[pen_w, self.config.coarse.mid_width(), 3])?.into_iter();
        Ok((parts.next().expect("split"), parts.next().expect("split")))
    }

    fn labels_of<'a>(&self, subject: &'a PreparedSubject) -> Result<&'a [usize]> {
        subject.labels().ok_or_else(|| {
            Error::Data(crate::error::DataError::Invalid(format!("subject {} has no labels", subject.id())))
        })
    }

    /// Stage-1 objective (NLL of the coarse logits); accumulates gradients.
    pub fn coarse_step(&mut self, subject: &PreparedSubject) -> Result<StepStats> {
        let labels = self.labels_of(subject)?;
        let out = self.coarse_forward(subject)?;
        let nll = softmax_nll(&out.logits, labels)?;
        let dice = dice_value_and_grad(&one_hot(labels, self.classes()), &nll.probs)?.value;
        self.coarse_backward(subject, &out, &nll.grad, None, None)?;
        Ok(StepStats { loss: nll.loss, dice })
    }

    /// Stage-2 objective `NLL − λ·D` of the refined logits; gradients reach
    /// both networks.
    pub fn refine_step(&mut self, subject: &PreparedSubject, lambda: f64) -> Result<StepStats> {
        let labels = self.labels_of(subject)?;
        let coarse = self.coarse_forward(subject)?;
        let refined = self.refine_forward(subject, &coarse.penultimate, &coarse.mid)?;
        let (loss, dice, grad) = refine_objective(&refined.logits, labels, self.classes(), lambda)?;
        let (g_pen, g_mid) = self.refine_backward(subject, &refined, &grad)?;
        let zero = Tensor2::zeros(coarse.logits.rows(), coarse.logits.cols());
        self.coarse_backward(subject, &coarse, &zero, Some(&g_pen), Some(&g_mid))?;
        Ok(StepStats { loss, dice })
    }

    /// Coarse and (if trained) refined predictions.
    pub fn predict_both(&self, subject: &PreparedSubject) -> Result<(Prediction, Option<Prediction>)> {
        let coarse = self.coarse_forward(subject)?;
        let cp = softmax_rows(&coarse.logits);
        let coarse_pred = Prediction { labels: argmax_rows(&cp), probs: cp };
        if self.stage == Stage::Coarse {
            return Ok((coarse_pred, None));
        }
        let refined = self.refine_forward(subject, &coarse.penultimate, &coarse.mid)?;
        let rp = softmax_rows(&refined.logits);
        Ok((coarse_pred, Some(Prediction { labels: argmax_rows(&rp), probs: rp })))
    }

    /// Refined prediction once refinement has been trained, coarse otherwise.
    pub fn predict(&self, subject: &PreparedSubject) -> Result<Prediction> {
        let (coarse, refined) = self.predict_both(subject)?;
        Ok(refined.unwrap_or(coarse))
    }

    pub fn visit_group(&mut self, stage: Stage, f: &mut dyn FnMut(ParamRef<'_>)) {
        match stage {
            Stage::Coarse => self.coarse.visit_params("coarse", f),
            Stage::Refine => self.refine.visit_params("refine", f),
        }
    }
}

/// `(loss, soft Dice, ∂loss/∂logits)` of `NLL − λ·D`.
pub fn refine_objective(
    logits: &Tensor2,
    labels: &[usize],
    classes: usize,
    lambda: f64,
) -> Result<(f64, f64, Tensor2)> {
    let nll = softmax_nll(logits, labels)?;
    let dice = dice_value_and_grad(&one_hot(labels, classes), &nll.probs)?;
    let mut grad = nll.grad;
    if lambda != 0.0 {
        let mut g_probs = dice.grad;
        g_probs.scale(-lambda);
        grad.add_assign(&softmax_backward(&nll.probs, &g_probs))?;
    }
    Ok((nll.loss - lambda * dice.value, dice.value, grad))
}

impl Parameterized for CoarseNet {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
        for (k, l) in self.intrinsic.iter_mut().enumerate() {
            l.visit_params(&join(prefix, &format!("intrinsic{k}")), f);
        }
        for (k, l) in self.encoder.iter_mut().enumerate() {
            l.visit_params(&join(prefix, &format!("encoder{k}")), f);
        }
        self.bottleneck.visit_params(&join(prefix, "bottleneck"), f);
        for (k, l) in self.decoder.iter_mut().enumerate() {
            l.visit_params(&join(prefix, &format!("decoder{k}")), f);
        }
        self.mlp.visit_params(&join(prefix, "mlp"), f);
    }
}

impl Parameterized for RefineNet {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
        for (k, l) in self.convs.iter_mut().enumerate() {
            l.visit_params(&join(prefix, &format!("conv{k}")), f);
        }
        self.mlp.visit_params(&join(prefix, "mlp"), f);
    }
}

impl Parameterized for ParcellationModel {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
        self.coarse.visit_params(&join(prefix, "coarse"), f);
        self.refine.visit_params(&join(prefix, "refine"), f);
    }
}
