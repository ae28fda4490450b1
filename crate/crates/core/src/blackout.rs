//! Blackout diffusion on edge matrices: a pure-death forward process in
//! continuous time, binomial-bridge reverse transitions and the
//! rate-prediction losses.
//!
//! Every active edge dies independently at unit rate, so after time `t` it
//! survives with probability `e^{-t}`. Given the state `n` at time `t` and a
//! target count `o` at time 0, the state `m` at an earlier time `s` is
//!
//! ```text
//! P(m | n, o) = C(o - n, m - n) · r^(m - n) · (1 - r)^(o - m),
//! r = (e^{-s} - e^{-t}) / (1 - e^{-t}).
//! ```
//!
//! Edge states are binary, so `o - n` is 0 or 1 and the samplers below use
//! the Bernoulli case; [`bridge_pmf`] evaluates the general count formula.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::matrix::{upper_pairs, EdgeMatrix, ProbHeatmap, RateMatrix};
use crate::rng::bernoulli;
use crate::scalar::Scalar;
use crate::schedule::{std_of_t, Schedule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackoutConfig<F> {
    /// Final time `T`; the state is fully black well before it.
    pub horizon: F,
    /// Lower clamp applied to predicted rates before taking logs.
    pub epsilon_rate: F,
    /// Smallest observation time.
    pub epsilon_time: F,
}

impl<F: Scalar> Default for BlackoutConfig<F> {
    fn default() -> Self {
        Self { horizon: F::lit(15.0), epsilon_rate: F::lit(1e-9), epsilon_time: F::lit(1e-4) }
    }
}

impl<F: Scalar> BlackoutConfig<F> {
    pub fn new(horizon: F, epsilon_rate: F, epsilon_time: F) -> Result<Self> {
        let cfg = Self { horizon, epsilon_rate, epsilon_time };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > F::zero() && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.epsilon_rate > F::zero() && self.epsilon_rate < F::one()) {
            return Err(invalid(format!("epsilon_rate must lie in (0, 1), got {}", self.epsilon_rate)));
        }
        if !(self.epsilon_time > F::zero() && self.epsilon_time < self.horizon) {
            return Err(invalid(format!(
                "epsilon_time must lie in (0, horizon), got {}",
                self.epsilon_time
            )));
        }
        Ok(())
    }

    fn check_time(&self, t: F) -> Result<()> {
        if !(t >= F::zero() && t <= self.horizon) {
            return Err(invalid(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }
}

/// `e^{-t}`, the probability that an active edge is still active at time `t`.
pub fn survival_prob<F: Scalar>(t: F) -> Result<F> {
    if !(t >= F::zero()) {
        return Err(invalid(format!("time must be nonnegative, got {t}")));
    }
    Ok((-t).exp())
}

/// Corrupts `x0` to time `t`: each active undirected edge survives with probability `e^{-t}`.
pub fn forward_sample<F: Scalar, R: Rng + ?Sized>(
    cfg: &BlackoutConfig<F>,
    x0: &EdgeMatrix,
    t: F,
    rng: &mut R,
) -> Result<EdgeMatrix> {
    cfg.check_time(t)?;
    Ok(kill_edges(x0, survival_prob(t)?, rng))
}

fn kill_edges<F: Scalar, R: Rng + ?Sized>(x: &EdgeMatrix, survival: F, rng: &mut R) -> EdgeMatrix {
    let mut out = EdgeMatrix::zeros(x.n());
    for (i, j) in x.edges() {
        if bernoulli(rng, survival) {
            out.set(i, j, true);
        }
    }
    out
}

/// Per-edge probability of being active at time `t`: `x0(i, j) · e^{-t}`.
pub fn forward_marginal<F: Scalar>(
    cfg: &BlackoutConfig<F>,
    x0: &EdgeMatrix,
    t: F,
) -> Result<ProbHeatmap<F>> {
    cfg.check_time(t)?;
    let p = survival_prob(t)?;
    Ok(ProbHeatmap::from_fn(x0.n(), |i, j| if x0.get(i, j) { p } else { F::zero() }))
}

/// Birth probability for a dead edge when stepping back from `t` to `s`:
/// `r = (e^{-s} - e^{-t}) / (1 - e^{-t})`, clamped into `[0, 1]`.
pub fn bridge_param<F: Scalar>(s: F, t: F) -> Result<F> {
    if !(t > F::zero()) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    if !(s >= F::zero() && s <= t) {
        return Err(invalid(format!("need 0 <= s <= t, got s = {s}, t = {t}")));
    }
    // e^{-s}(1 - e^{-(t-s)}) / (1 - e^{-t}) keeps precision when s, t are small
    let r = (-s).exp() * (s - t).exp_m1() / (-t).exp_m1();
    Ok(r.max(F::zero()).min(F::one()))
}

/// General binomial-bridge probability `P(m | n, o)` for counts `n <= m <= o`.
pub fn bridge_pmf<F: Scalar>(o: u64, n: u64, m: u64, r: F) -> F {
    if n > o || m < n || m > o {
        return F::zero();
    }
    let trials = o - n;
    let births = m - n;
    let mut coeff = F::one();
    for k in 0..births {
        coeff = coeff * F::lit((trials - k) as f64) / F::lit((k + 1) as f64);
    }
    coeff * r.powi(births as i32) * (F::one() - r).powi((trials - births) as i32)
}

/// Element-wise `max(x0_hat, x_t)`: the smallest target consistent with the
/// known survivors in `x_t`.
pub fn repair_target(x_t: &EdgeMatrix, x0_hat: &EdgeMatrix) -> EdgeMatrix {
    x0_hat.union(x_t)
}

/// One reverse step from time `t` to time `s` towards the target `x0_hat`.
/// Dead edges with an active target are born with probability
/// [`bridge_param`]; every other edge keeps its state.
pub fn reverse_bridge_sample<F: Scalar, R: Rng + ?Sized>(
    x_t: &EdgeMatrix,
    x0_hat: &EdgeMatrix,
    s: F,
    t: F,
    rng: &mut R,
) -> Result<EdgeMatrix> {
    if x_t.n() != x0_hat.n() {
        return Err(invalid("state and target sizes differ"));
    }
    if let Some((i, j)) = x_t.first_excess(x0_hat) {
        return Err(Error::InconsistentStates { i, j });
    }
    let r = bridge_param(s, t)?;
    let mut out = x_t.clone();
    for (i, j) in x0_hat.edges() {
        if !x_t.get(i, j) && bernoulli(rng, r) {
            out.set(i, j, true);
        }
    }
    Ok(out)
}

/// `(t_k - t_{k-1}) · e^{-t_k}`.
pub fn loss_weight<F: Scalar>(t_k: F, t_km1: F) -> Result<F> {
    if !(t_km1 >= F::zero() && t_km1 < t_k) {
        return Err(invalid(format!("need 0 <= t_(k-1) < t_k, got {t_km1} and {t_k}")));
    }
    Ok((t_k - t_km1) * (-t_k).exp())
}

fn check_loss_inputs<F: Scalar>(y: &RateMatrix<F>, x0: &EdgeMatrix, x_tk: &EdgeMatrix) -> Result<()> {
    if y.n() != x0.n() || x0.n() != x_tk.n() {
        return Err(invalid("rate and state sizes differ"));
    }
    if let Some((i, j)) = x_tk.first_excess(x0) {
        return Err(Error::InconsistentStates { i, j });
    }
    Ok(())
}

/// `Σ_edges [y − d · ln y]` with `d = x0 − x_tk`, each undirected edge once.
pub fn loss_simplified<F: Scalar>(y: &RateMatrix<F>, x0: &EdgeMatrix, x_tk: &EdgeMatrix) -> Result<F> {
    check_loss_inputs(y, x0, x_tk)?;
    Ok(upper_pairs(x0.n())
        .map(|(i, j)| {
            let yi = y.get(i, j);
            if x0.get(i, j) && !x_tk.get(i, j) {
                yi - yi.ln()
            } else {
                yi
            }
        })
        .sum())
}

/// Time-weighted loss `(t_k − t_{k−1}) e^{−t_k} Σ_edges [y − d · ln y]`.
pub fn loss_full<F: Scalar>(
    y: &RateMatrix<F>,
    x0: &EdgeMatrix,
    x_tk: &EdgeMatrix,
    t_k: F,
    t_km1: F,
) -> Result<F> {
    let w = loss_weight(t_k, t_km1)?;
    Ok(w * loss_simplified(y, x0, x_tk)?)
}

/// Row-major `∂loss_full/∂y`: `w · (1 − d / y)` per undirected edge, mirrored; zero diagonal.
pub fn loss_gradient<F: Scalar>(
    y: &RateMatrix<F>,
    x0: &EdgeMatrix,
    x_tk: &EdgeMatrix,
    t_k: F,
    t_km1: F,
) -> Result<Vec<F>> {
    let w = loss_weight(t_k, t_km1)?;
    check_loss_inputs(y, x0, x_tk)?;
    let n = x0.n();
    let mut grad = vec![F::zero(); n * n];
    for (i, j) in upper_pairs(n) {
        let d = if x0.get(i, j) && !x_tk.get(i, j) { F::one() } else { F::zero() };
        let g = w * (F::one() - d / y.get(i, j));
        grad[i * n + j] = g;
        grad[j * n + i] = g;
    }
    Ok(grad)
}

/// Chained forward corruption along the schedule. Frame 0 is `x0` at `t = 0`;
/// frame `k` is obtained from frame `k - 1` with survival `e^{-(t_k - t_{k-1})}`.
pub fn forward_trajectory<F: Scalar, R: Rng + ?Sized>(
    x0: &EdgeMatrix,
    schedule: &Schedule<F>,
    rng: &mut R,
) -> Result<Vec<EdgeMatrix>> {
    schedule.validate()?;
    let mut frames = Vec::with_capacity(schedule.len() + 1);
    frames.push(x0.clone());
    let mut prev_t = F::zero();
    for &t in schedule.times() {
        let survival = survival_prob(t - prev_t)?;
        let next = kill_edges(frames.last().expect("nonempty"), survival, rng);
        frames.push(next);
        prev_t = t;
    }
    Ok(frames)
}

/// Plain PGM (P2) rendering, pixel value `255 · state`.
pub fn format_pgm(frame: &EdgeMatrix) -> String {
    let n = frame.n();
    let mut out = format!("P2\n{n} {n}\n255\n");
    for i in 0..n {
        let row: Vec<&str> = (0..n).map(|j| if frame.get(i, j) { "255" } else { "0" }).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_pgm(text: &str) -> Result<EdgeMatrix> {
    let mut tokens = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(str::split_whitespace);
    let bad = |msg: &str| Error::Parse { line: 0, msg: msg.to_string() };
    if tokens.next() != Some("P2") {
        return Err(bad("missing P2 magic"));
    }
    let mut num = || -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("malformed pgm field"))
    };
    let (w, h, max) = (num()?, num()?, num()?);
    if w != h || max == 0 {
        return Err(bad("expected a square graymap"));
    }
    let mut entries = Vec::with_capacity(w * w);
    for _ in 0..w * w {
        entries.push(u8::from(num()? * 2 > max));
    }
    EdgeMatrix::from_entries(w, entries)
}

/// Writes `frame_{k:04}.pgm` for every frame plus `index.csv` with
/// `k,t,std,active_edge_count`, where frame 0 sits at `t = 0`.
pub fn write_frames<F: Scalar>(
    dir: impl AsRef<Path>,
    frames: &[EdgeMatrix],
    schedule: &Schedule<F>,
) -> Result<()> {
    let dir = dir.as_ref();
    if frames.len() != schedule.len() + 1 {
        return Err(invalid("frame count must be schedule length + 1"));
    }
    std::fs::create_dir_all(dir)?;
    let mut index = String::from("k,t,std,active_edge_count\n");
    for (k, frame) in frames.iter().enumerate() {
        let t = if k == 0 { F::zero() } else { schedule.times()[k - 1] };
        std::fs::write(dir.join(format!("frame_{k:04}.pgm")), format_pgm(frame))?;
        let _ = writeln!(
            index,
            "{k},{},{},{}",
            t.as_f64(),
            std_of_t(t)?.as_f64(),
            frame.active_edges()
        );
    }
    std::fs::write(dir.join("index.csv"), index)?;
    Ok(())
}
