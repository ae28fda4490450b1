//! Reverse-process inference and heatmap decoding into tours.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::blackout::{repair_target, reverse_bridge_sample, BlackoutConfig};
use crate::categorical::{default_betas, reverse_step_cat, stationary_sample};
use crate::denoiser::{Denoiser, DenoiserInput, NoiseKind};
use crate::error::{invalid, Error, Result};
use crate::instance::{tour_length, Tour, TspInstance};
use crate::matrix::{upper_pairs, EdgeMatrix, ProbHeatmap};
use crate::rng::{derive_seed, seeded};
use crate::scalar::Scalar;
use crate::schedule::{
    improved_schedule, more_improved_schedule, original_schedule, Schedule, DEFAULT_ALPHA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    #[serde(rename = "blackout_original")]
    BlackoutOriginal,
    #[serde(rename = "blackout_improved")]
    BlackoutImproved,
    #[serde(rename = "blackout_more_improved")]
    BlackoutMoreImproved,
    #[serde(rename = "categorical")]
    Categorical,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::BlackoutOriginal,
        Variant::BlackoutImproved,
        Variant::BlackoutMoreImproved,
        Variant::Categorical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::BlackoutOriginal => "blackout_original",
            Variant::BlackoutImproved => "blackout_improved",
            Variant::BlackoutMoreImproved => "blackout_more_improved",
            Variant::Categorical => "categorical",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    /// Observation times for the blackout variants; `None` for categorical.
    pub fn schedule<F: Scalar>(
        self,
        cfg: &BlackoutConfig<F>,
        steps: usize,
        alpha: F,
    ) -> Result<Option<Schedule<F>>> {
        let sched = match self {
            Variant::BlackoutOriginal => original_schedule(cfg, steps),
            Variant::BlackoutImproved => improved_schedule(cfg, steps),
            Variant::BlackoutMoreImproved => more_improved_schedule(cfg, steps, alpha),
            Variant::Categorical => return Ok(None),
        };
        sched.map(Some).map_err(|e| Error::Config(format!("{} schedule: {e}", self.name())))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Post-processing pipelines, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pipeline {
    #[serde(rename = "GREEDY")]
    Greedy,
    #[serde(rename = "GREEDY+2OPT")]
    GreedyTwoOpt,
    #[serde(rename = "SAMPLE")]
    Sample,
    #[serde(rename = "SAMPLE+2OPT")]
    SampleTwoOpt,
}

impl Pipeline {
    pub const ALL: [Pipeline; 4] =
        [Pipeline::Greedy, Pipeline::GreedyTwoOpt, Pipeline::Sample, Pipeline::SampleTwoOpt];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Greedy => "GREEDY",
            Pipeline::GreedyTwoOpt => "GREEDY+2OPT",
            Pipeline::Sample => "SAMPLE",
            Pipeline::SampleTwoOpt => "SAMPLE+2OPT",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(name))
    }

    pub fn is_sampling(self) -> bool {
        matches!(self, Pipeline::Sample | Pipeline::SampleTwoOpt)
    }

    pub fn two_opt(self) -> bool {
        matches!(self, Pipeline::GreedyTwoOpt | Pipeline::SampleTwoOpt)
    }
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const GREEDY_STEPS: usize = 50;
pub const SAMPLING_STEPS: usize = 10;
pub const SAMPLING_CHAINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReverseRunConfig<F> {
    pub variant: Variant,
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
    pub two_opt: bool,
    /// Apply 2-opt to the selected sample only, instead of to every candidate.
    pub two_opt_after_selection: bool,
    pub alpha: F,
    pub blackout: BlackoutConfig<F>,
}

impl<F: Scalar> ReverseRunConfig<F> {
    /// Single chain with 50 steps.
    pub fn greedy(variant: Variant, seed: u64) -> Self {
        Self {
            variant,
            steps: GREEDY_STEPS,
            samples: 1,
            seed,
            two_opt: false,
            two_opt_after_selection: false,
            alpha: F::lit(DEFAULT_ALPHA),
            blackout: BlackoutConfig::default(),
        }
    }

    /// 16 chains with 10 steps each.
    pub fn sampling(variant: Variant, seed: u64) -> Self {
        Self { steps: SAMPLING_STEPS, samples: SAMPLING_CHAINS, ..Self::greedy(variant, seed) }
    }

    pub fn for_pipeline(variant: Variant, pipeline: Pipeline, seed: u64) -> Self {
        let base = if pipeline.is_sampling() {
            Self::sampling(variant, seed)
        } else {
            Self::greedy(variant, seed)
        };
        Self { two_opt: pipeline.two_opt(), ..base }
    }

    pub fn with_two_opt(self, two_opt: bool) -> Self {
        Self { two_opt, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::Config(format!("steps must be at least 2, got {}", self.steps)));
        }
        if self.samples < 1 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        self.blackout.validate()
    }
}

/// Seed of sampling chain `index`; chain 0 also drives the greedy pipeline.
pub fn chain_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReverseRun<F> {
    /// Edge probabilities predicted at the last reverse step.
    pub heatmap: ProbHeatmap<F>,
    /// Binary state reached at time 0.
    pub final_state: EdgeMatrix,
    pub variant: Variant,
    pub steps: usize,
    pub seed: u64,
}

/// Runs one reverse chain seeded with `config.seed` and returns the final heatmap.
pub fn run_reverse<F: Scalar>(
    instance: &TspInstance<F>,
    denoiser: &dyn Denoiser<F>,
    config: &ReverseRunConfig<F>,
) -> Result<ReverseRun<F>> {
    config.validate()?;
    let n = instance.n();
    if let Some(m) = denoiser.expected_nodes() {
        if m != n {
            return Err(Error::Config(format!("denoiser expects {m} nodes, instance has {n}")));
        }
    }
    let mut rng = seeded(config.seed);
    let cfg = &config.blackout;
    let (heatmap, final_state) = match config.variant.schedule(cfg, config.steps, config.alpha)? {
        Some(schedule) => {
            let times = schedule.times();
            let mut x = EdgeMatrix::zeros(n);
            let mut last = ProbHeatmap::zeros(n);
            for k in (0..times.len()).rev() {
                let t = times[k];
                let s = if k == 0 { F::zero() } else { times[k - 1] };
                let input = DenoiserInput { x_t: &x, t, instance, kind: NoiseKind::Blackout, config: cfg };
                let out = denoiser.predict(&input)?;
                let target = repair_target(&x, &out.x0_hat());
                x = reverse_bridge_sample(&x, &target, s, t, &mut rng)?;
                last = out.edge_probs;
            }
            (last, x)
        }
        None => {
            let betas: Vec<F> = default_betas(config.steps)?;
            let mut x = stationary_sample(n, &mut rng);
            let mut last = ProbHeatmap::zeros(n);
            let total = F::from_usize_lossy(config.steps);
            for t in (1..=config.steps).rev() {
                let time = cfg.horizon * F::from_usize_lossy(t) / total;
                let input =
                    DenoiserInput { x_t: &x, t: time, instance, kind: NoiseKind::Categorical, config: cfg };
                let out = denoiser.predict(&input)?;
                x = reverse_step_cat(&x, &out.edge_probs, t, &betas, &mut rng)?;
                last = out.edge_probs;
            }
            (last, x)
        }
    };
    Ok(ReverseRun { heatmap, final_state, variant: config.variant, steps: config.steps, seed: config.seed })
}

/// Row-major `(A_ij + A_ji) / ‖c_i − c_j‖`, zero on the diagonal.
pub fn score_matrix<F: Scalar>(heatmap: &ProbHeatmap<F>, instance: &TspInstance<F>) -> Result<Vec<F>> {
    let n = instance.n();
    if heatmap.n() != n {
        return Err(Error::Config("heatmap and instance sizes differ".into()));
    }
    let mut scores = vec![F::zero(); n * n];
    for (i, j) in upper_pairs(n) {
        let d = instance.dist(i, j);
        if !(d > F::zero()) {
            return Err(Error::DegenerateInstance { i, j });
        }
        let s = (heatmap.get(i, j) + heatmap.get(j, i)) / d;
        scores[i * n + j] = s;
        scores[j * n + i] = s;
    }
    Ok(scores)
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Walks a degree-2 adjacency list from node 0 towards its smaller neighbour.
fn cycle_from_adjacency(adj: &[Vec<usize>]) -> Option<Tour> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut prev = usize::MAX;
    let mut cur = 0;
    for _ in 0..n {
        order.push(cur);
        let &next = adj[cur]
            .iter()
            .filter(|&&v| v != prev)
            .min()
            .or_else(|| adj[cur].first())?;
        prev = cur;
        cur = next;
    }
    if cur != 0 {
        return None;
    }
    Tour::new(order).ok()
}

/// Greedy edge insertion: edges by descending score (ties by `(i, j)`),
/// accepted while both endpoints have degree < 2 and no premature cycle forms.
pub fn greedy_construct<F: Scalar>(scores: &[F], n: usize) -> Tour {
    assert!(n >= 3, "need at least 3 nodes");
    assert_eq!(scores.len(), n * n, "score matrix must be n × n");
    let mut edges: Vec<(usize, usize)> = upper_pairs(n).collect();
    // stable sort keeps the lexicographic order among equal scores
    edges.sort_by(|&(a, b), &(c, d)| scores[c * n + d].as_f64().total_cmp(&scores[a * n + b].as_f64()));

    let mut degree = vec![0u8; n];
    let mut sets = DisjointSet::new(n);
    let mut adj = vec![Vec::with_capacity(2); n];
    let mut accepted = 0;
    for (i, j) in edges {
        if accepted == n - 1 {
            break;
        }
        if degree[i] < 2 && degree[j] < 2 && sets.union(i, j) {
            degree[i] += 1;
            degree[j] += 1;
            adj[i].push(j);
            adj[j].push(i);
            accepted += 1;
        }
    }
    assert_eq!(accepted, n - 1, "greedy insertion left disconnected fragments");
    let ends: Vec<usize> = (0..n).filter(|&v| degree[v] < 2).collect();
    assert_eq!(ends.len(), 2, "hamiltonian path must have two endpoints");
    adj[ends[0]].push(ends[1]);
    adj[ends[1]].push(ends[0]);
    cycle_from_adjacency(&adj).expect("greedy insertion yields a hamiltonian cycle")
}

/// First-improvement 2-opt over segment reversals until no move shortens
/// the tour by more than 1e-12.
pub fn two_opt<F: Scalar>(tour: &Tour, instance: &TspInstance<F>) -> Result<Tour> {
    let n = instance.n();
    if tour.len() != n {
        return Err(Error::InvalidTour(format!("tour has {} nodes, instance has {n}", tour.len())));
    }
    let d = instance.distance_matrix();
    let dist = |a: usize, b: usize| d[a * n + b];
    let tol = F::lit(1e-12);
    let mut order = tour.order().to_vec();
    loop {
        let mut improved = false;
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (order[i], order[i + 1]);
                let (c, e) = (order[j], order[(j + 1) % n]);
                let delta = dist(a, c) + dist(b, e) - dist(a, b) - dist(c, e);
                if delta < -tol {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Tour::new(order)
}

/// Per-solve record, identical across runs with the same inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub variant: Variant,
    pub pipeline: Pipeline,
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
    pub length: f64,
    /// Decoded length of each chain before selection.
    pub chain_lengths: Vec<f64>,
    pub selected_chain: usize,
}

#[derive(Debug, Clone)]
pub struct Solution<F> {
    pub tour: Tour,
    pub length: F,
    pub heatmap: ProbHeatmap<F>,
    pub diagnostics: Diagnostics,
}

struct Candidate<F> {
    tour: Tour,
    length: F,
    raw_length: F,
    heatmap: ProbHeatmap<F>,
}

fn decode_chain<F: Scalar>(
    instance: &TspInstance<F>,
    denoiser: &dyn Denoiser<F>,
    config: &ReverseRunConfig<F>,
    index: usize,
    refine: bool,
) -> Result<Candidate<F>> {
    let chain = ReverseRunConfig { seed: chain_seed(config.seed, index), ..*config };
    let run = run_reverse(instance, denoiser, &chain)?;
    let scores = score_matrix(&run.heatmap, instance)?;
    let tour = greedy_construct(&scores, instance.n());
    let raw_length = tour_length(instance, &tour)?;
    let (tour, length) = if refine {
        let t = two_opt(&tour, instance)?;
        let l = tour_length(instance, &t)?;
        (t, l)
    } else {
        (tour, raw_length)
    };
    Ok(Candidate { tour, length, raw_length, heatmap: run.heatmap })
}

fn pipeline_of<F>(config: &ReverseRunConfig<F>, sampling: bool) -> Pipeline {
    match (sampling, config.two_opt) {
        (false, false) => Pipeline::Greedy,
        (false, true) => Pipeline::GreedyTwoOpt,
        (true, false) => Pipeline::Sample,
        (true, true) => Pipeline::SampleTwoOpt,
    }
}

/// One reverse chain, greedy decoding, optional 2-opt.
pub fn solve_greedy<F: Scalar>(
    instance: &TspInstance<F>,
    denoiser: &dyn Denoiser<F>,
    config: &ReverseRunConfig<F>,
) -> Result<Solution<F>> {
    config.validate()?;
    let c = decode_chain(instance, denoiser, config, 0, config.two_opt)?;
    Ok(Solution {
        diagnostics: Diagnostics {
            variant: config.variant,
            pipeline: pipeline_of(config, false),
            steps: config.steps,
            samples: 1,
            seed: config.seed,
            length: c.length.as_f64(),
            chain_lengths: vec![c.raw_length.as_f64()],
            selected_chain: 0,
        },
        tour: c.tour,
        length: c.length,
        heatmap: c.heatmap,
    })
}

/// `samples` independent chains decoded greedily; the shortest candidate
/// wins, ties going to the lowest chain index.
pub fn solve_sampling<F: Scalar>(
    instance: &TspInstance<F>,
    denoiser: &dyn Denoiser<F>,
    config: &ReverseRunConfig<F>,
) -> Result<Solution<F>> {
    config.validate()?;
    let per_candidate = config.two_opt && !config.two_opt_after_selection;
    let candidates: Vec<Candidate<F>> = (0..config.samples)
        .into_par_iter()
        .map(|k| decode_chain(instance, denoiser, config, k, per_candidate))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, c) in candidates.iter().enumerate() {
        if c.length < candidates[best].length {
            best = k;
        }
    }
    let chain_lengths = candidates.iter().map(|c| c.raw_length.as_f64()).collect();
    let winner = candidates.into_iter().nth(best).expect("at least one chain");
    let (tour, length) = if config.two_opt && config.two_opt_after_selection {
        let t = two_opt(&winner.tour, instance)?;
        let l = tour_length(instance, &t)?;
        (t, l)
    } else {
        (winner.tour, winner.length)
    };
    Ok(Solution {
        diagnostics: Diagnostics {
            variant: config.variant,
            pipeline: pipeline_of(config, true),
            steps: config.steps,
            samples: config.samples,
            seed: config.seed,
            length: length.as_f64(),
            chain_lengths,
            selected_chain: best,
        },
        tour,
        length,
        heatmap: winner.heatmap,
    })
}

/// Dispatches on the pipeline with its default step and sample counts.
pub fn solve_pipeline<F: Scalar>(
    instance: &TspInstance<F>,
    denoiser: &dyn Denoiser<F>,
    variant: Variant,
    pipeline: Pipeline,
    seed: u64,
) -> Result<Solution<F>> {
    let config = ReverseRunConfig::for_pipeline(variant, pipeline, seed);
    if pipeline.is_sampling() {
        solve_sampling(instance, denoiser, &config)
    } else {
        solve_greedy(instance, denoiser, &config)
    }
}

/// `n`, then `n` rows of comma-separated probabilities with 6 decimals.
pub fn format_heatmap<F: Scalar>(heatmap: &ProbHeatmap<F>) -> String {
    let n = heatmap.n();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:.6}", heatmap.get(i, j).as_f64())).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn parse_heatmap<F: Scalar>(text: &str) -> Result<ProbHeatmap<F>> {
    let mut lines = text.lines();
    let err = |line: usize, msg: String| Error::Parse { line, msg };
    let n: usize = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| err(1, "malformed size header".into()))?;
    let mut values = Vec::with_capacity(n * n);
    for r in 0..n {
        let line = lines.next().ok_or_else(|| err(r + 2, "missing row".into()))?;
        let row: Vec<F> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>().map(F::lit))
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(r + 2, "malformed probability".into()))?;
        if row.len() != n {
            return Err(err(r + 2, format!("expected {n} columns, got {}", row.len())));
        }
        values.extend(row);
    }
    ProbHeatmap::from_entries(n, values).map_err(|e| err(1, e.to_string()))
}

pub fn write_heatmap<F: Scalar>(heatmap: &ProbHeatmap<F>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_heatmap(heatmap))?;
    Ok(())
}

pub fn read_heatmap<F: Scalar>(path: impl AsRef<Path>) -> Result<ProbHeatmap<F>> {
    parse_heatmap(&std::fs::read_to_string(path)?)
}

/// Shorthand used by callers that only have a variant name.
pub fn parse_variant(name: &str) -> Result<Variant> {
    Variant::parse(name).ok_or_else(|| invalid(format!("unknown variant {name:?}")))
}
