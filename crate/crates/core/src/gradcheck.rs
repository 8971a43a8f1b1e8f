//! Central finite-difference checks of every hand-written backward pass.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diff::{
    dice_value_and_grad, one_hot, softmax_nll, softmax_rows, Activation, Linear,
    Parameterized,
};
use crate::error::Result;
use crate::mesh::{Adjacency, EdgePseudoCoords};
use crate::network::{refine_objective, ParcellationModel, PreparedSubject, Stage};
use crate::spline::{BSplineBasis, SplineConvLayer, SplineSupport};
use crate::tensor::Tensor2;

/// Outcome of checking one layer type over randomized instances.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckResult {
    pub name: &'static str,
    pub instances: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckResult {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

impl std::fmt::Display for GradCheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} instances={} max_rel_error={:.3e} tolerance={:.0e} {}",
            self.name,
            self.instances,
            self.max_rel_error,
            self.tolerance,
            if self.passed() { "ok" } else { "FAILED" }
        )
    }
}

pub const SPLINE_TOLERANCE: f64 = 1e-4;
pub const DICE_TOLERANCE: f64 = 1e-4;
pub const LINEAR_TOLERANCE: f64 = 1e-6;
pub const SOFTMAX_TOLERANCE: f64 = 1e-6;

/// `‖a − n‖ / max(‖a‖, ‖n‖)`, zero when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let l2 = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = l2(&mut analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = l2(&mut analytic.iter().copied()).max(l2(&mut numeric.iter().copied()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn weighted_sum(out: &Tensor2, weights: &Tensor2) -> f64 {
    out.as_slice().iter().zip(weights.as_slice()).map(|(a, b)| a * b).sum()
}

fn random_tensor(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor2 {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor2::from_vec(rows, cols, data).expect("sized buffer")
}

/// A random graph on `n ≥ 2` vertices where every vertex has a neighbor.
fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> Adjacency {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.4) {
                edges.push((i, j));
            }
        }
        // a ring keeps every vertex covered
        edges.push((i, (i + 1) % n));
    }
    edges.retain(|&(a, b)| a != b);
    Adjacency::from_undirected_edges(n, &edges)
}

/// Random spline layer instance: graph, pseudo-coordinates, layer and input.
pub fn random_spline_instance(
    rng: &mut ChaCha8Rng,
    max_vertices: usize,
) -> (SplineSupport, SplineConvLayer, Tensor2) {
    let n = rng.gen_range(2..=max_vertices.max(2));
    let adjacency = random_graph(n, rng);
    let degree = rng.gen_range(1..=3);
    let dim = rng.gen_range(1..=3);
    let sizes = (0..dim).map(|_| rng.gen_range(degree + 1..=degree + 4)).collect();
    let basis = BSplineBasis::new(degree, sizes).expect("valid basis");
    let coords: Vec<f64> = (0..adjacency.edge_count() * dim).map(|_| rng.gen_range(0.0..1.0)).collect();
    let coords = EdgePseudoCoords::from_scaled(dim, coords);
    let support = SplineSupport::new(&adjacency, &coords, &basis).expect("matching shapes");
    let (m_in, m_out) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
    let activation = if rng.gen_bool(0.5) { Activation::Elu } else { Activation::Identity };
    let mut layer = SplineConvLayer::new(basis, m_in, m_out, rng.gen_bool(0.5), activation, rng);
    layer.control = random_tensor(1, layer.control.cols(), rng);
    let input = random_tensor(n, m_in, rng);
    (support, layer, input)
}

pub fn check_spline(instances: usize, seed: u64) -> GradCheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (support, mut layer, input) = random_spline_instance(&mut rng, 8);
        let (out, cache) = layer.aggregate_forward(&support, &input).expect("valid instance");
        let upstream = random_tensor(out.rows(), out.cols(), &mut rng);
        layer.zero_grad();
        let d_input = layer.aggregate_backward(&support, &cache, &upstream).expect("valid instance");

        let loss_with = |l: &SplineConvLayer, x: &Tensor2| {
            weighted_sum(&l.aggregate_forward(&support, x).expect("valid instance").0, &upstream)
        };
        let numeric = central_difference(
            |v| loss_with(&layer, &Tensor2::from_vec(input.rows(), input.cols(), v.to_vec()).expect("sized")),
            input.as_slice(),
            h,
        );
        worst = worst.max(relative_error(d_input.as_slice(), &numeric));

        let mut probe = layer.clone();
        let mut analytic = Vec::new();
        layer.visit_params("", &mut |p| analytic.push((p.value.to_vec(), p.grad.to_vec())));
        for (t, (value, grad)) in analytic.iter().enumerate() {
            let numeric = central_difference(
                |v| {
                    let mut k = 0;
                    probe.visit_params("", &mut |p| {
                        if k == t {
                            p.value.copy_from_slice(v);
                        }
                        k += 1;
                    });
                    loss_with(&probe, &input)
                },
                value,
                h,
            );
            let mut k = 0;
            probe.visit_params("", &mut |p| {
                if k == t {
                    p.value.copy_from_slice(value);
                }
                k += 1;
            });
            worst = worst.max(relative_error(grad, &numeric));
        }
    }
    GradCheckResult { name: "spline", instances, max_rel_error: worst, tolerance: SPLINE_TOLERANCE }
}

pub fn check_linear(instances: usize, seed: u64) -> GradCheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (n, m_in, m_out) = (rng.gen_range(1..=6), rng.gen_range(1..=5), rng.gen_range(1..=5));
        let mut layer = Linear::from_parts(random_tensor(m_in, m_out, &mut rng), random_tensor(1, m_out, &mut rng));
        let input = random_tensor(n, m_in, &mut rng);
        let upstream = random_tensor(n, m_out, &mut rng);
        let (_, cache) = layer.forward(&input).expect("shapes");
        let d_input = layer.backward(&cache, &upstream).expect("shapes");
        let loss = |l: &Linear, x: &Tensor2| weighted_sum(&l.forward(x).expect("shapes").0, &upstream);

        let numeric = central_difference(
            |v| loss(&layer, &Tensor2::from_vec(n, m_in, v.to_vec()).expect("sized")),
            input.as_slice(),
            h,
        );
        worst = worst.max(relative_error(d_input.as_slice(), &numeric));
        let numeric = central_difference(
            |v| {
                let l = Linear::from_parts(Tensor2::from_vec(m_in, m_out, v.to_vec()).expect("sized"), layer.bias.clone());
                loss(&l, &input)
            },
            layer.weight.as_slice(),
            h,
        );
        worst = worst.max(relative_error(layer.grad_weight.as_slice(), &numeric));
        let numeric = central_difference(
            |v| {
                let l = Linear::from_parts(layer.weight.clone(), Tensor2::from_vec(1, m_out, v.to_vec()).expect("sized"));
                loss(&l, &input)
            },
            layer.bias.as_slice(),
            h,
        );
        worst = worst.max(relative_error(layer.grad_bias.as_slice(), &numeric));
    }
    GradCheckResult { name: "linear", instances, max_rel_error: worst, tolerance: LINEAR_TOLERANCE }
}

pub fn check_softmax_nll(instances: usize, seed: u64) -> GradCheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (n, l) = (rng.gen_range(1..=6), rng.gen_range(2..=6));
        let mut logits = random_tensor(n, l, &mut rng);
        logits.scale(3.0);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..l)).collect();
        let out = softmax_nll(&logits, &labels).expect("valid labels");
        let numeric = central_difference(
            |v| softmax_nll(&Tensor2::from_vec(n, l, v.to_vec()).expect("sized"), &labels).expect("valid").loss,
            logits.as_slice(),
            h,
        );
        worst = worst.max(relative_error(out.grad.as_slice(), &numeric));
    }
    GradCheckResult { name: "softmax_nll", instances, max_rel_error: worst, tolerance: SOFTMAX_TOLERANCE }
}

pub fn check_dice(instances: usize, seed: u64) -> GradCheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (n, l) = (rng.gen_range(2..=8), rng.gen_range(2..=5));
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..l)).collect();
        let truth = one_hot(&labels, l);
        let pred = softmax_rows(&random_tensor(n, l, &mut rng));
        let out = dice_value_and_grad(&truth, &pred).expect("shapes");
        let numeric = central_difference(
            |v| dice_value_and_grad(&truth, &Tensor2::from_vec(n, l, v.to_vec()).expect("sized")).expect("shapes").value,
            pred.as_slice(),
            h,
        );
        worst = worst.max(relative_error(out.grad.as_slice(), &numeric));
    }
    GradCheckResult { name: "dice", instances, max_rel_error: worst, tolerance: DICE_TOLERANCE }
}

/// All four layer checks with `instances` randomized cases each.
pub fn run_suite(instances: usize, seed: u64) -> Vec<GradCheckResult> {
    vec![
        check_spline(instances, seed),
        check_linear(instances, seed.wrapping_add(1)),
        check_softmax_nll(instances, seed.wrapping_add(2)),
        check_dice(instances, seed.wrapping_add(3)),
    ]
}

/// Training objective of `stage` without touching gradient buffers.
pub fn model_loss(model: &ParcellationModel, subject: &PreparedSubject, stage: Stage) -> Result<f64> {
    let labels = subject.labels().expect("labeled subject");
    let coarse = model.coarse_forward(subject)?;
    match stage {
        Stage::Coarse => Ok(softmax_nll(&coarse.logits, labels)?.loss),
        Stage::Refine => {
            let refined = model.refine_forward(subject, &coarse.penultimate, &coarse.mid)?;
            let lambda = model.config().refine.lambda;
            Ok(refine_objective(&refined.logits, labels, model.classes(), lambda)?.0)
        }
    }
}

/// Compares backprop against central differences on `count` randomly chosen
/// scalar parameters. Returns the largest per-parameter relative error,
/// with `|a − n| / max(|a|, |n|, floor)`.
pub fn check_model(
    model: &mut ParcellationModel,
    subject: &PreparedSubject,
    stage: Stage,
    count: usize,
    seed: u64,
) -> Result<f64> {
    let h = 1e-5;
    let floor = 1e-6;
    model.zero_grad();
    match stage {
        Stage::Coarse => model.coarse_step(subject)?,
        Stage::Refine => model.refine_step(subject, model.config().refine.lambda)?,
    };
    let mut analytic = Vec::new();
    let group_len = |m: &mut ParcellationModel, g: Stage| {
        let mut n = 0;
        m.visit_group(g, &mut |p| n += p.value.len());
        n
    };
    let total = match stage {
        Stage::Coarse => group_len(model, Stage::Coarse),
        Stage::Refine => group_len(model, Stage::Coarse) + group_len(model, Stage::Refine),
    };
    model.visit_params("", &mut |p| analytic.extend_from_slice(p.grad));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, total, count.min(total)).into_vec();

    let mut worst: f64 = 0.0;
    for idx in picks {
        let original = scalar_param(model, idx, None);
        scalar_param(model, idx, Some(original + h));
        let up = model_loss(model, subject, stage)?;
        scalar_param(model, idx, Some(original - h));
        let down = model_loss(model, subject, stage)?;
        scalar_param(model, idx, Some(original));
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[idx];
        worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(floor));
    }
    Ok(worst)
}

/// Reads (and optionally overwrites) the `index`-th scalar in visiting order.
fn scalar_param(model: &mut ParcellationModel, index: usize, set: Option<f64>) -> f64 {
    let mut offset = 0;
    let mut found = f64::NAN;
    model.visit_params("", &mut |p| {
        if (offset..offset + p.value.len()).contains(&index) {
            let slot = &mut p.value[index - offset];
            found = *slot;
            if let Some(v) = set {
                *slot = v;
            }
        }
        offset += p.value.len();
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_at_stated_tolerances() {
        for r in run_suite(20, 99) {
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn relative_error_edge_cases() {
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(relative_error(&[1.0], &[1.0]), 0.0);
        assert!((relative_error(&[1.0, 0.0], &[0.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn central_difference_of_a_quadratic() {
        let g = central_difference(|v| v[0] * v[0] + 3.0 * v[1], &[2.0, -1.0], 1e-3);
        assert!((g[0] - 4.0).abs() < 1e-9 && (g[1] - 3.0).abs() < 1e-9);
    }
}
