use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use blackout_co::blackout::{forward_trajectory, write_frames};
use blackout_co::decode::{
    solve_greedy, solve_sampling, write_heatmap, Diagnostics, ReverseRunConfig, Variant,
};
use blackout_co::denoiser::{
    read_model, train, write_model, Denoiser, HeuristicDenoiser, LinearEdgeModel, OracleDenoiser,
    TrainConfig, DEFAULT_TIME_FEATURES,
};
use blackout_co::instance::{optimality_gap, tour_length, tour_to_edge_matrix, write_tour, Tour};
use blackout_co::rng::seeded;
use blackout_co::{Config, EdgeModel, Instance, ObservationSchedule};
use serde::Serialize;

use crate::data::{ensure_dir, load_instance, load_tour, read_manifest, tour_file, write_text};
use crate::error::{at_path, config, usage, CliResult};
use crate::{FramesArgs, SolveArgs, TrainArgs};

/// Parsed `--denoiser` value.
#[derive(Debug, Clone)]
pub enum DenoiserChoice {
    Oracle,
    Heuristic,
    Linear(PathBuf),
}

impl DenoiserChoice {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "heuristic" => Ok(Self::Heuristic),
            _ => match s.strip_prefix("linear:") {
                Some(path) if !path.is_empty() => Ok(Self::Linear(PathBuf::from(path))),
                _ => Err(usage(format!("unknown denoiser {s:?}; expected oracle, heuristic or linear:<path>"))),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Oracle => "oracle".into(),
            Self::Heuristic => "heuristic".into(),
            Self::Linear(p) => format!("linear:{}", p.display()),
        }
    }

    pub fn load_model(&self) -> CliResult<Option<EdgeModel>> {
        match self {
            Self::Linear(path) => Ok(Some(at_path(path, read_model(path))?)),
            _ => Ok(None),
        }
    }
}

/// Builds the denoiser for one instance; the oracle needs that instance's tour.
pub fn build_denoiser(
    choice: &DenoiserChoice,
    model: Option<&EdgeModel>,
    truth: Option<&Tour>,
    n: usize,
) -> CliResult<Box<dyn Denoiser<f64>>> {
    Ok(match choice {
        DenoiserChoice::Oracle => {
            let tour = truth.ok_or_else(|| usage("the oracle denoiser needs --opt-tour"))?;
            if tour.len() != n {
                return Err(config(format!("tour has {} nodes, instance has {n}", tour.len())));
            }
            Box::new(OracleDenoiser::from_tour(tour))
        }
        DenoiserChoice::Heuristic => Box::new(HeuristicDenoiser::default()),
        DenoiserChoice::Linear(_) => Box::new(model.expect("model loaded for linear denoiser").clone()),
    })
}

pub fn parse_variant(name: &str) -> CliResult<Variant> {
    Variant::parse(name).ok_or_else(|| {
        let known: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
        usage(format!("unknown variant {name:?}; expected one of {}", known.join(", ")))
    })
}

fn blackout_schedule(variant: Variant, steps: usize, what: &str) -> CliResult<ObservationSchedule> {
    let cfg = Config::default();
    variant
        .schedule(&cfg, steps, blackout_co::schedule::DEFAULT_ALPHA)?
        .ok_or_else(|| config(format!("{what} needs a blackout variant, got {variant}")))
}

#[derive(Debug, Serialize)]
struct SolveRecord<'a> {
    instance: String,
    denoiser: String,
    #[serde(flatten)]
    diagnostics: &'a Diagnostics,
    reference_length: Option<f64>,
    gap_percent: Option<f64>,
}

pub fn cmd_solve(args: &SolveArgs) -> CliResult<()> {
    let variant = parse_variant(&args.variant)?;
    let choice = DenoiserChoice::parse(&args.denoiser)?;
    if args.samples < 1 {
        return Err(usage("--samples must be at least 1"));
    }
    let inst = load_instance(&args.instance)?;
    let truth = args.opt_tour.as_deref().map(load_tour).transpose()?;
    if let Some(t) = &truth {
        if t.len() != inst.n() {
            return Err(config(format!("tour has {} nodes, instance has {}", t.len(), inst.n())));
        }
    }
    let model = choice.load_model()?;
    let denoiser = build_denoiser(&choice, model.as_ref(), truth.as_ref(), inst.n())?;

    let base = if args.samples > 1 {
        ReverseRunConfig::sampling(variant, args.seed)
    } else {
        ReverseRunConfig::greedy(variant, args.seed)
    };
    let run = ReverseRunConfig {
        steps: args.steps.unwrap_or(base.steps),
        samples: args.samples,
        two_opt: args.two_opt,
        two_opt_after_selection: args.two_opt_after_selection,
        ..base
    };
    let sol = if args.samples > 1 {
        solve_sampling(&inst, denoiser.as_ref(), &run)?
    } else {
        solve_greedy(&inst, denoiser.as_ref(), &run)?
    };

    let reference = truth.as_ref().map(|t| tour_length(&inst, t)).transpose()?;
    let record = SolveRecord {
        instance: args.instance.display().to_string(),
        denoiser: choice.label(),
        diagnostics: &sol.diagnostics,
        reference_length: reference,
        gap_percent: reference.map(|r| optimality_gap(sol.length, r)).transpose()?,
    };
    ensure_dir(&args.out)?;
    let tour_path = args.out.join("tour.tour");
    at_path(&tour_path, write_tour(&sol.tour, &tour_path))?;
    let heat_path = args.out.join("heatmap.csv");
    at_path(&heat_path, write_heatmap(&sol.heatmap, &heat_path))?;
    let line = serde_json::to_string(&record).map_err(|e| config(e.to_string()))?;
    write_text(&args.out.join("diagnostics.jsonl"), &format!("{line}\n"))?;
    println!("length {:.6}", sol.length);
    Ok(())
}

pub fn cmd_frames(args: &FramesArgs) -> CliResult<()> {
    let variant = parse_variant(&args.variant)?;
    let inst = load_instance(&args.instance)?;
    let tour = load_tour(&args.opt_tour)?;
    if tour.len() != inst.n() {
        return Err(config(format!("tour has {} nodes, instance has {}", tour.len(), inst.n())));
    }
    let schedule = blackout_schedule(variant, args.steps, "frames")?;
    let frames = forward_trajectory(&tour_to_edge_matrix(&tour), &schedule, &mut seeded(args.seed))?;
    at_path(&args.out, write_frames(&args.out, &frames, &schedule))
}

fn training_pairs(dir: &Path) -> CliResult<Vec<(Instance, Tour)>> {
    read_manifest(dir)?
        .into_iter()
        .map(|e| {
            let inst = load_instance(&e.path)?;
            let tour = load_tour(&dir.join(tour_file(e.id)))?;
            if tour.len() != inst.n() {
                return Err(config(format!("instance {} and its tour differ in size", e.id)));
            }
            Ok((inst, tour))
        })
        .collect()
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let variant = parse_variant(&args.variant)?;
    if args.epochs < 1 {
        return Err(usage("--epochs must be at least 1"));
    }
    if !(args.lr > 0.0 && args.lr.is_finite()) {
        return Err(usage(format!("--lr must be positive, got {}", args.lr)));
    }
    let schedule = blackout_schedule(variant, args.steps, "training")?;
    let data = training_pairs(&args.data)?;
    let start = LinearEdgeModel::zeros(DEFAULT_TIME_FEATURES)?;
    let tc = TrainConfig { epochs: args.epochs, learning_rate: args.lr, seed: args.seed };
    let (model, trace) = train(&start, &data, &schedule, &Config::default(), &tc)?;

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    at_path(&args.out, write_model(&model, &args.out))?;
    let loss_path = args.loss_out.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".loss.csv");
        PathBuf::from(p)
    });
    let mut csv = String::from("epoch,loss\n");
    for (epoch, loss) in trace.iter().enumerate() {
        let _ = writeln!(csv, "{epoch},{loss}");
    }
    write_text(&loss_path, &csv)?;
    println!("loss {:.6} -> {:.6}", trace[0], trace[trace.len() - 1]);
    Ok(())
}
