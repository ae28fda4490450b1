//! Discrete-time two-state (D3PM) diffusion over edge matrices.
//!
//! Each step flips an edge with probability `β_t`. Only `P(edge)` is stored;
//! the "no edge" probability is its complement.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::matrix::{upper_pairs, EdgeMatrix, ProbHeatmap};
use crate::rng::bernoulli;
use crate::scalar::Scalar;

/// One-step flip matrix `[[1 − β, β], [β, 1 − β]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix<F> {
    beta: F,
}

impl<F: Scalar> TransitionMatrix<F> {
    pub fn beta(&self) -> F {
        self.beta
    }

    pub fn entry(&self, from: usize, to: usize) -> F {
        if from == to {
            F::one() - self.beta
        } else {
            self.beta
        }
    }

    pub fn matrix(&self) -> [[F; 2]; 2] {
        [[self.entry(0, 0), self.entry(0, 1)], [self.entry(1, 0), self.entry(1, 1)]]
    }
}

pub fn make_qt<F: Scalar>(beta: F) -> Result<TransitionMatrix<F>> {
    if !(beta > F::zero() && beta < F::one()) {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok(TransitionMatrix { beta })
}

/// Row-stochastic product `Q_1 Q_2 ⋯ Q_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulativeTransition<F> {
    m: [[F; 2]; 2],
}

impl<F: Scalar> CumulativeTransition<F> {
    pub fn identity() -> Self {
        Self { m: [[F::one(), F::zero()], [F::zero(), F::one()]] }
    }

    pub fn matrix(&self) -> [[F; 2]; 2] {
        self.m
    }

    pub fn entry(&self, from: usize, to: usize) -> F {
        self.m[from][to]
    }

    /// Probability of a flip after all steps.
    pub fn off_diagonal(&self) -> F {
        self.m[0][1]
    }

    pub fn then(&self, q: &TransitionMatrix<F>) -> Self {
        let a = self.m;
        let b = q.matrix();
        let mut m = [[F::zero(); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { m }
    }
}

/// Product of the per-step flip matrices in order; the empty product is the identity.
pub fn cumulative<F: Scalar>(betas: &[F]) -> Result<CumulativeTransition<F>> {
    betas
        .iter()
        .try_fold(CumulativeTransition::identity(), |acc, &b| Ok(acc.then(&make_qt(b)?)))
}

/// `(1 − Π(1 − 2β_s)) / 2`, the flip probability of the cumulative product.
pub fn closed_form_off_diagonal<F: Scalar>(betas: &[F]) -> F {
    let two = F::lit(2.0);
    let prod = betas.iter().fold(F::one(), |acc, &b| acc * (F::one() - two * b));
    (F::one() - prod) / two
}

/// `steps` betas spaced linearly over `[start, end]`.
pub fn linear_betas<F: Scalar>(steps: usize, start: F, end: F) -> Result<Vec<F>> {
    if steps == 0 {
        return Err(invalid("beta schedule needs at least one step"));
    }
    let betas: Vec<F> = if steps == 1 {
        vec![start]
    } else {
        let last = F::from_usize_lossy(steps - 1);
        (0..steps)
            .map(|i| start + (end - start) * F::from_usize_lossy(i) / last)
            .collect()
    };
    for &b in &betas {
        make_qt(b)?;
    }
    Ok(betas)
}

/// Default baseline schedule: linear from 1e-4 to 0.2.
pub fn default_betas<F: Scalar>(steps: usize) -> Result<Vec<F>> {
    linear_betas(steps, F::lit(1e-4), F::lit(0.2))
}

/// Draws each undirected edge from row `x0(i, j)` of `qbar`.
pub fn forward_sample_cat<F: Scalar, R: Rng + ?Sized>(
    x0: &EdgeMatrix,
    qbar: &CumulativeTransition<F>,
    rng: &mut R,
) -> EdgeMatrix {
    EdgeMatrix::from_fn(x0.n(), |i, j| {
        let from = x0.value(i, j) as usize;
        bernoulli(rng, qbar.entry(from, 1))
    })
}

/// Uniform edge states, the stationary law of the symmetric flip chain.
pub fn stationary_sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> EdgeMatrix {
    EdgeMatrix::from_fn(n, |_, _| rng.gen::<bool>())
}

/// `P(x_{t−1} = 1 | x_t, x_0)` from `Q_t[·][x_t] ⊙ Q̄_{t−1}[x_0][·] / Q̄_t[x_0][x_t]`.
pub fn posterior<F: Scalar>(
    x_t: bool,
    x0: bool,
    q_t: &TransitionMatrix<F>,
    qbar_tm1: &CumulativeTransition<F>,
    qbar_t: &CumulativeTransition<F>,
) -> Result<F> {
    let (xt, x0) = (x_t as usize, x0 as usize);
    let denom = qbar_t.entry(x0, xt);
    if !(denom > F::zero()) {
        return Err(Error::DegeneratePosterior);
    }
    let num = q_t.entry(1, xt) * qbar_tm1.entry(x0, 1);
    Ok((num / denom).max(F::zero()).min(F::one()))
}

/// One reverse step `t → t − 1` (`t` is 1-based into `betas`): mixes the two
/// posteriors by the predicted `P(x_0 = 1)` and samples every edge.
pub fn reverse_step_cat<F: Scalar, R: Rng + ?Sized>(
    x_t: &EdgeMatrix,
    x0_probs: &ProbHeatmap<F>,
    t: usize,
    betas: &[F],
    rng: &mut R,
) -> Result<EdgeMatrix> {
    if t == 0 || t > betas.len() {
        return Err(invalid(format!("step {t} outside 1..={}", betas.len())));
    }
    if x_t.n() != x0_probs.n() {
        return Err(invalid("state and heatmap sizes differ"));
    }
    let q_t = make_qt(betas[t - 1])?;
    let qbar_tm1 = cumulative(&betas[..t - 1])?;
    let qbar_t = qbar_tm1.then(&q_t);
    // posterior[x_t][x0]
    let mut post = [[F::zero(); 2]; 2];
    for (xt, row) in post.iter_mut().enumerate() {
        for (x0, slot) in row.iter_mut().enumerate() {
            *slot = posterior(xt == 1, x0 == 1, &q_t, &qbar_tm1, &qbar_t)?;
        }
    }
    let mut out = EdgeMatrix::zeros(x_t.n());
    for (i, j) in upper_pairs(x_t.n()) {
        let p = x0_probs.get(i, j);
        let row = post[x_t.value(i, j) as usize];
        let p1 = p * row[1] + (F::one() - p) * row[0];
        if bernoulli(rng, p1) {
            out.set(i, j, true);
        }
    }
    Ok(out)
}

/// Binary cross-entropy over undirected edges, probabilities clamped to `[1e-12, 1 − 1e-12]`.
pub fn bce_loss<F: Scalar>(x0_probs: &ProbHeatmap<F>, x0: &EdgeMatrix) -> Result<F> {
    if x0_probs.n() != x0.n() {
        return Err(invalid("heatmap and state sizes differ"));
    }
    let lo = F::lit(1e-12);
    let hi = F::one() - lo;
    Ok(upper_pairs(x0.n())
        .map(|(i, j)| {
            let p = x0_probs.get(i, j).max(lo).min(hi);
            if x0.get(i, j) {
                -p.ln()
            } else {
                -(F::one() - p).ln()
            }
        })
        .sum())
}
