//! Predictors of the clean edge matrix from a corrupted one.
//!
//! Every denoiser returns both a rate matrix (expected `Δx_{t→0}` per edge,
//! consumed by the blackout losses and sampler) and a probability heatmap
//! (`P(x_0 = 1)`, consumed by the categorical sampler and by decoding).

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::blackout::{forward_sample, loss_weight, BlackoutConfig};
use crate::error::{invalid, Error, Result};
use crate::instance::{tour_to_edge_matrix, Tour, TspInstance};
use crate::matrix::{upper_pairs, EdgeMatrix, ProbHeatmap, RateMatrix};
use crate::rng::{derive_seed, seeded};
use crate::scalar::{sigmoid, Scalar};
use crate::schedule::Schedule;

/// Forward process the denoiser is serving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Pure death: active edges in `x_t` are known to be active in `x_0`.
    Blackout,
    /// Symmetric flips: `x_t` may contain edges absent from `x_0`.
    Categorical,
}

#[derive(Debug, Clone, Copy)]
pub struct DenoiserInput<'a, F> {
    pub x_t: &'a EdgeMatrix,
    pub t: F,
    pub instance: &'a TspInstance<F>,
    pub kind: NoiseKind,
    pub config: &'a BlackoutConfig<F>,
}

impl<F: Scalar> DenoiserInput<'_, F> {
    fn check(&self) -> Result<()> {
        if self.x_t.n() != self.instance.n() {
            return Err(Error::Config(format!(
                "state has {} nodes, instance has {}",
                self.x_t.n(),
                self.instance.n()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserOutput<F> {
    pub delta_rates: RateMatrix<F>,
    pub edge_probs: ProbHeatmap<F>,
}

impl<F: Scalar> DenoiserOutput<F> {
    /// Binary target for the bridge step: edges with probability at least 1/2.
    pub fn x0_hat(&self) -> EdgeMatrix {
        self.edge_probs.threshold(F::lit(0.5))
    }
}

pub trait Denoiser<F: Scalar>: Send + Sync {
    fn predict(&self, input: &DenoiserInput<'_, F>) -> Result<DenoiserOutput<F>>;

    /// Node count this denoiser is tied to, if any.
    fn expected_nodes(&self) -> Option<usize> {
        None
    }
}

/// Builds the output from raw edge probabilities, forcing blackout survivors to 1.
fn output_from_probs<F: Scalar>(
    input: &DenoiserInput<'_, F>,
    mut prob: impl FnMut(usize, usize) -> F,
) -> DenoiserOutput<F> {
    let n = input.x_t.n();
    let survivors = input.kind == NoiseKind::Blackout;
    let edge_probs = ProbHeatmap::from_fn(n, |i, j| {
        if survivors && input.x_t.get(i, j) {
            F::one()
        } else {
            prob(i, j)
        }
    });
    let delta_rates = RateMatrix::clamped(n, input.config.epsilon_rate, |i, j| {
        edge_probs.get(i, j) - if input.x_t.get(i, j) { F::one() } else { F::zero() }
    });
    DenoiserOutput { delta_rates, edge_probs }
}

/// Exact prediction from the known clean matrix.
pub fn oracle_predict<F: Scalar>(
    input: &DenoiserInput<'_, F>,
    x0_true: &EdgeMatrix,
) -> Result<DenoiserOutput<F>> {
    input.check()?;
    if x0_true.n() != input.x_t.n() {
        return Err(Error::Config("oracle matrix size differs from state".into()));
    }
    if input.kind == NoiseKind::Blackout {
        if let Some((i, j)) = input.x_t.first_excess(x0_true) {
            return Err(Error::InconsistentStates { i, j });
        }
    }
    Ok(output_from_probs(input, |i, j| if x0_true.get(i, j) { F::one() } else { F::zero() }))
}

/// Ground-truth denoiser, for testing the samplers and decoders end to end.
#[derive(Debug, Clone)]
pub struct OracleDenoiser {
    x0: EdgeMatrix,
}

impl OracleDenoiser {
    pub fn new(x0: EdgeMatrix) -> Self {
        Self { x0 }
    }

    pub fn from_tour(tour: &Tour) -> Self {
        Self { x0: tour_to_edge_matrix(tour) }
    }
}

impl<F: Scalar> Denoiser<F> for OracleDenoiser {
    fn predict(&self, input: &DenoiserInput<'_, F>) -> Result<DenoiserOutput<F>> {
        oracle_predict(input, &self.x0)
    }

    fn expected_nodes(&self) -> Option<usize> {
        Some(self.x0.n())
    }
}

/// Row-major `rank[i * n + j]`: how many edges at `i` are strictly shorter than `(i, j)`.
pub fn incident_ranks<F: Scalar>(instance: &TspInstance<F>) -> Vec<usize> {
    let n = instance.n();
    let d = instance.distance_matrix();
    let mut rank = vec![0; n * n];
    for i in 0..n {
        let row = &d[i * n..(i + 1) * n];
        for j in 0..n {
            if i != j {
                rank[i * n + j] = (0..n).filter(|&k| k != i && row[k] < row[j]).count();
            }
        }
    }
    rank
}

/// Untrained baseline: `σ(a − b · rank)` with the edge's best endpoint rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicDenoiser<F> {
    pub a: F,
    pub b: F,
}

impl<F: Scalar> Default for HeuristicDenoiser<F> {
    fn default() -> Self {
        Self { a: F::lit(2.0), b: F::lit(1.5) }
    }
}

pub fn heuristic_predict<F: Scalar>(
    heuristic: &HeuristicDenoiser<F>,
    input: &DenoiserInput<'_, F>,
) -> Result<DenoiserOutput<F>> {
    input.check()?;
    let n = input.x_t.n();
    let rank = incident_ranks(input.instance);
    Ok(output_from_probs(input, |i, j| {
        let r = rank[i * n + j].min(rank[j * n + i]);
        sigmoid(heuristic.a - heuristic.b * F::from_usize_lossy(r))
    }))
}

impl<F: Scalar> Denoiser<F> for HeuristicDenoiser<F> {
    fn predict(&self, input: &DenoiserInput<'_, F>) -> Result<DenoiserOutput<F>> {
        heuristic_predict(self, input)
    }
}

/// Sinusoidal embedding: `(sin(t/λ_j), cos(t/λ_j))` pairs with `λ_j`
/// geometric from `0.01·horizon` to `horizon`.
pub fn time_features<F: Scalar>(t: F, count: usize, horizon: F) -> Result<Vec<F>> {
    if count == 0 || !count.is_multiple_of(2) {
        return Err(invalid(format!("time feature count must be even and positive, got {count}")));
    }
    if !(t >= F::zero()) {
        return Err(invalid(format!("time must be nonnegative, got {t}")));
    }
    let pairs = count / 2;
    let lo = F::lit(1e-2) * horizon;
    let mut out = Vec::with_capacity(count);
    for j in 0..pairs {
        let scale = if pairs == 1 {
            horizon
        } else {
            let frac = F::from_usize_lossy(j) / F::from_usize_lossy(pairs - 1);
            lo * F::lit(100.0).powf(frac)
        };
        out.push((t / scale).sin());
        out.push((t / scale).cos());
    }
    Ok(out)
}

/// Default number of sinusoidal time features.
pub const DEFAULT_TIME_FEATURES: usize = 8;
const STATIC_FEATURES: usize = 3;

/// Per-instance features that do not depend on the corrupted state or time.
#[derive(Debug, Clone)]
pub struct EdgeGeometry<F> {
    n: usize,
    dist: Vec<F>,
    rank: Vec<F>,
}

impl<F: Scalar> EdgeGeometry<F> {
    pub fn new(instance: &TspInstance<F>) -> Self {
        let n = instance.n();
        let ranks = incident_ranks(instance);
        let norm = F::from_usize_lossy(2 * (n - 2).max(1));
        let mut rank = vec![F::zero(); n * n];
        for (i, j) in upper_pairs(n) {
            let r = F::from_usize_lossy(ranks[i * n + j] + ranks[j * n + i]) / norm;
            rank[i * n + j] = r;
            rank[j * n + i] = r;
        }
        Self { n, dist: instance.distance_matrix(), rank }
    }
}

/// Linear-logistic edge scorer over
/// `[length, mean endpoint rank, x_t(i, j), time features…]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEdgeModel<F> {
    weights: Vec<F>,
    bias: F,
    time_features: usize,
}

impl<F: Scalar> LinearEdgeModel<F> {
    /// All-zero model with `time_features` sinusoidal components.
    pub fn zeros(time_features: usize) -> Result<Self> {
        if time_features == 0 || !time_features.is_multiple_of(2) {
            return Err(invalid(format!(
                "time feature count must be even and positive, got {time_features}"
            )));
        }
        Ok(Self {
            weights: vec![F::zero(); STATIC_FEATURES + time_features],
            bias: F::zero(),
            time_features,
        })
    }

    pub fn new(weights: Vec<F>, bias: F, time_features: usize) -> Result<Self> {
        let mut m = Self::zeros(time_features)?;
        if weights.len() != m.weights.len() {
            return Err(invalid(format!(
                "expected {} weights, got {}",
                m.weights.len(),
                weights.len()
            )));
        }
        if !weights.iter().all(|w| w.is_finite()) || !bias.is_finite() {
            return Err(Error::Numeric("model parameters must be finite".into()));
        }
        m.weights = weights;
        m.bias = bias;
        Ok(m)
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn bias(&self) -> F {
        self.bias
    }

    pub fn time_feature_count(&self) -> usize {
        self.time_features
    }

    /// Weights followed by the bias.
    pub fn params(&self) -> Vec<F> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    pub fn with_params(&self, params: &[F]) -> Result<Self> {
        let (bias, weights) = params.split_last().ok_or_else(|| invalid("empty parameter vector"))?;
        Self::new(weights.to_vec(), *bias, self.time_features)
    }

    fn score(&self, geom: &EdgeGeometry<F>, active: bool, tf: &[F], i: usize, j: usize) -> F {
        let k = i * geom.n + j;
        let x = if active { F::one() } else { F::zero() };
        let mut z = self.bias + self.weights[0] * geom.dist[k] + self.weights[1] * geom.rank[k];
        z = z + self.weights[2] * x;
        for (w, f) in self.weights[STATIC_FEATURES..].iter().zip(tf) {
            z = z + *w * *f;
        }
        z
    }

    /// Feature vector of edge `(i, j)` as seen by the model.
    pub fn features(&self, input: &DenoiserInput<'_, F>, i: usize, j: usize) -> Result<Vec<F>> {
        let geom = EdgeGeometry::new(input.instance);
        let k = i * geom.n + j;
        let mut f = vec![
            geom.dist[k],
            geom.rank[k],
            if input.x_t.get(i, j) { F::one() } else { F::zero() },
        ];
        f.extend(time_features(input.t, self.time_features, input.config.horizon)?);
        Ok(f)
    }

    fn predict_with(&self, geom: &EdgeGeometry<F>, input: &DenoiserInput<'_, F>) -> Result<DenoiserOutput<F>> {
        input.check()?;
        let n = input.x_t.n();
        let tf = time_features(input.t, self.time_features, input.config.horizon)?;
        let mut probs = vec![F::zero(); n * n];
        for (i, j) in upper_pairs(n) {
            let z = self.score(geom, input.x_t.get(i, j), &tf, i, j);
            if !z.is_finite() {
                return Err(Error::Numeric(format!("non-finite score at ({i}, {j})")));
            }
            probs[i * n + j] = sigmoid(z);
        }
        let eps = input.config.epsilon_rate;
        let delta_rates = RateMatrix::clamped(n, eps, |i, j| probs[i * n + j]);
        let edge_probs = ProbHeatmap::from_fn(n, |i, j| {
            let p = probs[i * n + j];
            match input.kind {
                NoiseKind::Blackout if input.x_t.get(i, j) => F::one(),
                _ => p,
            }
        });
        Ok(DenoiserOutput { delta_rates, edge_probs })
    }
}

pub fn model_predict<F: Scalar>(
    model: &LinearEdgeModel<F>,
    input: &DenoiserInput<'_, F>,
) -> Result<DenoiserOutput<F>> {
    model.predict_with(&EdgeGeometry::new(input.instance), input)
}

impl<F: Scalar> Denoiser<F> for LinearEdgeModel<F> {
    fn predict(&self, input: &DenoiserInput<'_, F>) -> Result<DenoiserOutput<F>> {
        model_predict(self, input)
    }
}

/// Time-weighted rate loss of one corrupted sample and its gradient with
/// respect to [`LinearEdgeModel::params`].
pub fn sample_loss_and_grad<F: Scalar>(
    model: &LinearEdgeModel<F>,
    geom: &EdgeGeometry<F>,
    x0: &EdgeMatrix,
    x_t: &EdgeMatrix,
    t_k: F,
    t_km1: F,
    cfg: &BlackoutConfig<F>,
) -> Result<(F, Vec<F>)> {
    let w = loss_weight(t_k, t_km1)?;
    if let Some((i, j)) = x_t.first_excess(x0) {
        return Err(Error::InconsistentStates { i, j });
    }
    let tf = time_features(t_k, model.time_features, cfg.horizon)?;
    let n = x0.n();
    let mut loss = F::zero();
    let mut grad = vec![F::zero(); model.weights.len() + 1];
    let bias_slot = model.weights.len();
    for (i, j) in upper_pairs(n) {
        let active = x_t.get(i, j);
        let z = model.score(geom, active, &tf, i, j);
        if !z.is_finite() {
            return Err(Error::Numeric(format!("non-finite score at ({i}, {j})")));
        }
        let s = sigmoid(z);
        let d = if x0.get(i, j) && !active { F::one() } else { F::zero() };
        let y = s.max(cfg.epsilon_rate).min(F::one());
        loss = loss + w * (y - d * y.ln());
        // the clamp passes gradients only inside its bounds
        if s <= cfg.epsilon_rate {
            continue;
        }
        let dz = w * (F::one() - d / y) * s * (F::one() - s);
        let k = i * n + j;
        grad[0] = grad[0] + dz * geom.dist[k];
        grad[1] = grad[1] + dz * geom.rank[k];
        if active {
            grad[2] = grad[2] + dz;
        }
        for (g, f) in grad[STATIC_FEATURES..bias_slot].iter_mut().zip(&tf) {
            *g = *g + dz * *f;
        }
        grad[bias_slot] = grad[bias_slot] + dz;
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig<F> {
    pub epochs: usize,
    pub learning_rate: F,
    pub seed: u64,
}

impl<F: Scalar> Default for TrainConfig<F> {
    fn default() -> Self {
        Self { epochs: 300, learning_rate: F::lit(1.0), seed: 0 }
    }
}

/// Training pairs of an instance and its reference tour.
pub type Dataset<F> = [(TspInstance<F>, Tour)];

struct Prepared<F> {
    geom: EdgeGeometry<F>,
    x0: EdgeMatrix,
}

fn prepare<F: Scalar>(dataset: &Dataset<F>) -> Result<Vec<Prepared<F>>> {
    if dataset.is_empty() {
        return Err(invalid("training set is empty"));
    }
    dataset
        .iter()
        .map(|(inst, tour)| {
            if tour.len() != inst.n() {
                return Err(Error::InvalidTour("tour size differs from instance".into()));
            }
            Ok(Prepared { geom: EdgeGeometry::new(inst), x0: tour_to_edge_matrix(tour) })
        })
        .collect()
}

/// Mean loss and gradient over the dataset for one draw of `(k, x_t)` per
/// sample, reproducible from `seed`.
fn batch<F: Scalar>(
    model: &LinearEdgeModel<F>,
    data: &[Prepared<F>],
    schedule: &Schedule<F>,
    cfg: &BlackoutConfig<F>,
    seed: u64,
) -> Result<(F, Vec<F>)> {
    use rand::Rng as _;
    let times = schedule.times();
    let per_sample: Vec<(F, Vec<F>)> = data
        .par_iter()
        .enumerate()
        .map(|(idx, p)| {
            let mut rng = seeded(derive_seed(seed, idx as u64));
            let k = rng.gen_range(0..times.len());
            let t_k = times[k];
            let t_km1 = if k == 0 { F::zero() } else { times[k - 1] };
            let x_t = forward_sample(cfg, &p.x0, t_k, &mut rng)?;
            sample_loss_and_grad(model, &p.geom, &p.x0, &x_t, t_k, t_km1, cfg)
        })
        .collect::<Result<_>>()?;
    let scale = F::one() / F::from_usize_lossy(data.len());
    let mut loss = F::zero();
    let mut grad = vec![F::zero(); model.weights.len() + 1];
    for (l, g) in &per_sample {
        loss = loss + *l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc = *acc + *v;
        }
    }
    Ok((loss * scale, grad.into_iter().map(|g| g * scale).collect()))
}

/// Mean time-weighted rate loss under a fixed draw of timesteps and corruptions.
pub fn evaluate_loss<F: Scalar>(
    model: &LinearEdgeModel<F>,
    dataset: &Dataset<F>,
    schedule: &Schedule<F>,
    cfg: &BlackoutConfig<F>,
    seed: u64,
) -> Result<F> {
    schedule.validate()?;
    Ok(batch(model, &prepare(dataset)?, schedule, cfg, seed)?.0)
}

/// Full-batch gradient descent on the time-weighted rate loss. Each epoch
/// draws one schedule index uniformly per sample; returns the trained model
/// and the per-epoch mean loss measured before that epoch's update.
pub fn train<F: Scalar>(
    model: &LinearEdgeModel<F>,
    dataset: &Dataset<F>,
    schedule: &Schedule<F>,
    cfg: &BlackoutConfig<F>,
    train_cfg: &TrainConfig<F>,
) -> Result<(LinearEdgeModel<F>, Vec<F>)> {
    schedule.validate()?;
    let data = prepare(dataset)?;
    let mut params = model.params();
    let mut current = model.clone();
    let mut trace = Vec::with_capacity(train_cfg.epochs);
    for epoch in 0..train_cfg.epochs {
        let (loss, grad) = batch(&current, &data, schedule, cfg, derive_seed(train_cfg.seed, epoch as u64))?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("loss diverged at epoch {epoch}")));
        }
        trace.push(loss);
        for (p, g) in params.iter_mut().zip(&grad) {
            *p = *p - train_cfg.learning_rate * *g;
        }
        current = current.with_params(&params)?;
    }
    Ok((current, trace))
}

const MODEL_MAGIC: &str = "linear-edge-model v1";

pub fn format_model<F: Scalar>(model: &LinearEdgeModel<F>) -> String {
    let mut out = format!("{MODEL_MAGIC}\n{}\n", model.time_features);
    let _ = writeln!(out, "{:.16e}", model.bias.as_f64());
    for w in &model.weights {
        let _ = writeln!(out, "{:.16e}", w.as_f64());
    }
    out
}

pub fn parse_model<F: Scalar>(text: &str) -> Result<LinearEdgeModel<F>> {
    let lines: Vec<&str> = text.lines().collect();
    let err = |line: usize, msg: String| Error::Parse { line, msg };
    if lines.first().map(|l| l.trim()) != Some(MODEL_MAGIC) {
        return Err(err(1, format!("expected {MODEL_MAGIC:?}")));
    }
    let count: usize = lines
        .get(1)
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| err(2, "malformed time feature count".into()))?;
    let num = |k: usize| -> Result<F> {
        let v: f64 = lines
            .get(k)
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| err(k + 1, "malformed number".into()))?;
        Ok(F::lit(v))
    };
    let bias = num(2)?;
    let expected = STATIC_FEATURES + count;
    let body: Vec<&str> = lines[3.min(lines.len())..]
        .iter()
        .copied()
        .filter(|l| !l.trim().is_empty())
        .collect();
    if body.len() != expected {
        return Err(err(3 + body.len().min(expected) + 1, format!(
            "expected {expected} weights, found {}",
            body.len()
        )));
    }
    let weights = (0..expected).map(|k| num(3 + k)).collect::<Result<Vec<_>>>()?;
    LinearEdgeModel::new(weights, bias, count)
}

pub fn read_model<F: Scalar>(path: impl AsRef<Path>) -> Result<LinearEdgeModel<F>> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn write_model<F: Scalar>(model: &LinearEdgeModel<F>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_model(model))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_random;
    use crate::rng::seeded;

    fn square() -> TspInstance<f64> {
        TspInstance::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    fn input<'a>(
        x_t: &'a EdgeMatrix,
        t: f64,
        inst: &'a TspInstance<f64>,
        cfg: &'a BlackoutConfig<f64>,
    ) -> DenoiserInput<'a, f64> {
        DenoiserInput { x_t, t, instance: inst, kind: NoiseKind::Blackout, config: cfg }
    }

    #[test]
    fn time_feature_shape() {
        let f = time_features(0.0_f64, 8, 15.0).unwrap();
        assert_eq!(f.len(), 8);
        for pair in f.chunks(2) {
            assert_eq!(pair, &[0.0, 1.0]);
        }
        let f = time_features(7.3_f64, 6, 15.0).unwrap();
        assert!(f.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(time_features(1.0_f64, 7, 15.0).is_err());
    }

    #[test]
    fn oracle_rules() {
        let cfg = BlackoutConfig::default();
        let inst = generate_random::<f64>(6, 1).unwrap();
        let x0 = tour_to_edge_matrix(&Tour::identity(6).unwrap());
        let out = oracle_predict(&input(&x0, 1.0, &inst, &cfg), &x0).unwrap();
        assert!(out.delta_rates.entries().iter().all(|&v| v == cfg.epsilon_rate));
        assert_eq!(out.edge_probs, ProbHeatmap::from_edges(&x0));

        let zero = EdgeMatrix::zeros(6);
        let out = oracle_predict(&input(&zero, 1.0, &inst, &cfg), &x0).unwrap();
        for (i, j) in upper_pairs(6) {
            let want = if x0.get(i, j) { 1.0 } else { cfg.epsilon_rate };
            assert_eq!(out.delta_rates.get(i, j), want);
        }

        let stray = EdgeMatrix::from_fn(6, |i, j| i == 0 && j == 2);
        assert!(matches!(
            oracle_predict(&input(&stray, 1.0, &inst, &cfg), &x0),
            Err(Error::InconsistentStates { i: 0, j: 2 })
        ));
    }

    #[test]
    fn heuristic_prefers_short_edges() {
        let cfg = BlackoutConfig::default();
        let sq = square();
        let zero = EdgeMatrix::zeros(4);
        let out = heuristic_predict(&HeuristicDenoiser::default(), &input(&zero, 3.0, &sq, &cfg)).unwrap();
        let p = &out.edge_probs;
        for side in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            for diag in [(0, 2), (1, 3)] {
                assert!(p.get(side.0, side.1) > p.get(diag.0, diag.1));
            }
        }

        let inst = generate_random::<f64>(9, 4).unwrap();
        let zero = EdgeMatrix::zeros(9);
        let out = heuristic_predict(&HeuristicDenoiser::default(), &input(&zero, 3.0, &inst, &cfg)).unwrap();
        for i in 0..9 {
            let nearest = (0..9)
                .filter(|&j| j != i)
                .min_by(|&a, &b| inst.dist(i, a).partial_cmp(&inst.dist(i, b)).unwrap())
                .unwrap();
            for j in (0..9).filter(|&j| j != i) {
                assert!(out.edge_probs.get(i, nearest) >= out.edge_probs.get(i, j));
            }
        }

        let x_t = EdgeMatrix::from_fn(9, |i, j| i == 2 && j == 7);
        let out = heuristic_predict(&HeuristicDenoiser::default(), &input(&x_t, 3.0, &inst, &cfg)).unwrap();
        assert_eq!(out.edge_probs.get(2, 7), 1.0);
    }

    #[test]
    fn zero_model_is_one_half() {
        let cfg = BlackoutConfig::default();
        let inst = generate_random::<f64>(7, 3).unwrap();
        let x_t = EdgeMatrix::from_fn(7, |i, j| i == 1 && j == 4);
        let model = LinearEdgeModel::zeros(8).unwrap();
        let out = model_predict(&model, &input(&x_t, 2.0, &inst, &cfg)).unwrap();
        for (i, j) in upper_pairs(7) {
            let want = if x_t.get(i, j) { 1.0 } else { 0.5 };
            assert_eq!(out.edge_probs.get(i, j), want);
            assert_eq!(out.delta_rates.get(i, j), 0.5);
        }
    }

    #[test]
    fn negative_length_weight_ranks_long_edges_lower() {
        let cfg = BlackoutConfig::default();
        let inst = generate_random::<f64>(8, 5).unwrap();
        let zero = EdgeMatrix::zeros(8);
        let mut w = vec![0.0; 11];
        w[0] = -3.0;
        let model = LinearEdgeModel::new(w, 0.0, 8).unwrap();
        let out = model_predict(&model, &input(&zero, 2.0, &inst, &cfg)).unwrap();
        for (a, b) in upper_pairs(8) {
            for (c, d) in upper_pairs(8) {
                if inst.dist(a, b) < inst.dist(c, d) {
                    assert!(out.edge_probs.get(a, b) > out.edge_probs.get(c, d));
                }
            }
        }
    }

    #[test]
    fn model_file_round_trip() {
        let model = LinearEdgeModel::new((0..11).map(|k| k as f64 * 0.1 - 0.37).collect(), 0.25, 8).unwrap();
        let back: LinearEdgeModel<f64> = parse_model(&format_model(&model)).unwrap();
        assert_eq!(back, model);
        assert!(format_model(&model).starts_with("linear-edge-model v1\n8\n"));
        assert!(parse_model::<f64>("linear-edge-model v2\n8\n0\n").is_err());
        assert!(parse_model::<f64>("linear-edge-model v1\n8\n0\n1\n").is_err());
    }

    #[test]
    fn training_rejects_empty_dataset() {
        let cfg = BlackoutConfig::<f64>::default();
        let sched = crate::schedule::original_schedule(&cfg, 10).unwrap();
        let model = LinearEdgeModel::zeros(8).unwrap();
        let r = train(&model, &[], &sched, &cfg, &TrainConfig::default());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn loss_gradient_sign_for_survivors_only() {
        // with every edge still active the target change is zero, so every
        // score should be pushed down
        let cfg = BlackoutConfig::<f64>::default();
        let inst = generate_random::<f64>(6, 8).unwrap();
        let x0 = tour_to_edge_matrix(&Tour::identity(6).unwrap());
        let model = LinearEdgeModel::zeros(4).unwrap();
        let geom = EdgeGeometry::new(&inst);
        let (_, g) = sample_loss_and_grad(&model, &geom, &x0, &x0, 1.0, 0.5, &cfg).unwrap();
        assert!(*g.last().unwrap() > 0.0);
        let mut rng = seeded(0);
        let x_t = forward_sample(&cfg, &x0, 0.5, &mut rng).unwrap();
        assert!(sample_loss_and_grad(&model, &geom, &x_t, &x0, 1.0, 0.5, &cfg).is_err() || x_t == x0);
    }
}
