use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use blackout_co::decode::{solve_pipeline, Pipeline, Variant};
use blackout_co::instance::{optimality_gap, tour_length, EXACT_MAX_NODES};
use blackout_co::rng::derive_seed;
use rayon::prelude::*;

use crate::commands::{build_denoiser, parse_variant, DenoiserChoice};
use crate::data::{exact_reference, load_instance, load_tour, read_manifest, tour_file, write_text, Entry};
use crate::error::{usage, CliResult};
use crate::BenchArgs;

const EXACT: &str = "exact";
const HEURISTIC_REFERENCE: &str = "heuristic-reference";

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub id: usize,
    pub n: usize,
    pub variant: Variant,
    pub pipeline: Pipeline,
    pub solved_cost: f64,
    pub reference_cost: f64,
    pub gap_percent: f64,
    pub reference: &'static str,
    pub wall_time: f64,
    pub seed: u64,
}

fn parse_pipelines(names: &[String]) -> CliResult<Vec<Pipeline>> {
    let mut out: Vec<Pipeline> = names
        .iter()
        .map(|s| {
            Pipeline::parse(s.trim()).ok_or_else(|| {
                usage(format!("unknown pipeline {s:?}; expected GREEDY, GREEDY+2OPT, SAMPLE or SAMPLE+2OPT"))
            })
        })
        .collect::<CliResult<_>>()?;
    // reporting order is fixed regardless of how the list was given
    out.sort();
    out.dedup();
    Ok(out)
}

fn parse_variants(names: &[String]) -> CliResult<Vec<Variant>> {
    let mut out = Vec::new();
    for s in names {
        let v = parse_variant(s.trim())?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

fn bench_instance(
    dir: &Path,
    entry: &Entry,
    choice: &DenoiserChoice,
    model: Option<&blackout_co::EdgeModel>,
    variants: &[Variant],
    pipelines: &[Pipeline],
    master_seed: u64,
) -> CliResult<Vec<BenchRecord>> {
    let inst = load_instance(&entry.path)?;
    let n = inst.n();
    let tour_path = dir.join(tour_file(entry.id));
    let truth = if tour_path.exists() { Some(load_tour(&tour_path)?) } else { None };
    if matches!(choice, DenoiserChoice::Oracle) && truth.is_none() {
        return Err(usage(format!("the oracle denoiser needs {}; run exact first", tour_path.display())));
    }
    let denoiser = build_denoiser(choice, model, truth.as_ref(), n)?;
    let seed = derive_seed(master_seed, entry.id as u64);

    let mut records = Vec::with_capacity(variants.len() * pipelines.len());
    for &variant in variants {
        for &pipeline in pipelines {
            let start = Instant::now();
            let sol = solve_pipeline(&inst, denoiser.as_ref(), variant, pipeline, seed)?;
            records.push(BenchRecord {
                id: entry.id,
                n,
                variant,
                pipeline,
                solved_cost: sol.length,
                reference_cost: f64::NAN,
                gap_percent: f64::NAN,
                reference: EXACT,
                wall_time: start.elapsed().as_secs_f64(),
                seed,
            });
        }
    }

    let (reference_cost, reference) = if n <= EXACT_MAX_NODES {
        let tour = match truth {
            Some(t) => t,
            None => exact_reference(&inst, &entry.path)?,
        };
        (tour_length(&inst, &tour)?, EXACT)
    } else {
        let best = records.iter().map(|r| r.solved_cost).fold(f64::INFINITY, f64::min);
        (best, HEURISTIC_REFERENCE)
    };
    for r in &mut records {
        r.reference_cost = reference_cost;
        r.reference = reference;
        r.gap_percent = optimality_gap(r.solved_cost, reference_cost)?;
    }
    Ok(records)
}

struct AggregateRow {
    variant: Variant,
    pipeline: Pipeline,
    instances: usize,
    mean_length: f64,
    mean_gap: f64,
    heuristic_references: usize,
}

fn aggregate(records: &[BenchRecord], variants: &[Variant], pipelines: &[Pipeline]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for &variant in variants {
        for &pipeline in pipelines {
            let group: Vec<&BenchRecord> =
                records.iter().filter(|r| r.variant == variant && r.pipeline == pipeline).collect();
            let k = group.len().max(1) as f64;
            rows.push(AggregateRow {
                variant,
                pipeline,
                instances: group.len(),
                mean_length: group.iter().map(|r| r.solved_cost).sum::<f64>() / k,
                mean_gap: group.iter().map(|r| r.gap_percent).sum::<f64>() / k,
                heuristic_references: group.iter().filter(|r| r.reference == HEURISTIC_REFERENCE).count(),
            });
        }
    }
    rows
}

fn records_csv(records: &[BenchRecord]) -> String {
    let mut out =
        String::from("id,n,variant,pipeline,solved_cost,reference_cost,gap_percent,reference,wall_time,seed\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.6},{}",
            r.id, r.n, r.variant, r.pipeline, r.solved_cost, r.reference_cost, r.gap_percent, r.reference,
            r.wall_time, r.seed
        );
    }
    out
}

fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from("variant,pipeline,instances,mean_length,mean_gap_percent,heuristic_references\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.variant, r.pipeline, r.instances, r.mean_length, r.mean_gap, r.heuristic_references
        );
    }
    out
}

fn aggregate_table(rows: &[AggregateRow]) -> String {
    let header = ["variant", "pipeline", "instances", "length", "gap (%)", "reference"];
    let body: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.variant.to_string(),
                r.pipeline.to_string(),
                r.instances.to_string(),
                format!("{:.4}", r.mean_length),
                format!("{:.2}", r.mean_gap),
                if r.heuristic_references > 0 { HEURISTIC_REFERENCE.into() } else { EXACT.into() },
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            // names left-aligned, numbers right-aligned
            .map(|(c, (cell, w))| if c < 2 || c == 5 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header.map(String::from));
    line(&widths.map(|w| "-".repeat(w)));
    for row in &body {
        line(row);
    }
    out
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("bench");
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    let variants = parse_variants(&args.variants)?;
    let pipelines = parse_pipelines(&args.pipelines)?;
    if variants.is_empty() || pipelines.is_empty() {
        return Err(usage("need at least one variant and one pipeline"));
    }
    let choice = DenoiserChoice::parse(&args.denoiser)?;
    let model = choice.load_model()?;
    let mut entries = read_manifest(&args.dir)?;
    entries.sort_by_key(|e| e.id);

    let per_instance: Vec<Vec<BenchRecord>> = entries
        .par_iter()
        .map(|e| bench_instance(&args.dir, e, &choice, model.as_ref(), &variants, &pipelines, args.seed))
        .collect::<CliResult<_>>()?;
    let records: Vec<BenchRecord> = per_instance.into_iter().flatten().collect();
    let rows = aggregate(&records, &variants, &pipelines);

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        crate::data::ensure_dir(parent)?;
    }
    write_text(&args.out, &records_csv(&records))?;
    write_text(&sibling(&args.out, "_aggregate.csv"), &aggregate_csv(&rows))?;
    let table = aggregate_table(&rows);
    write_text(&sibling(&args.out, "_table.txt"), &table)?;
    print!("{table}");
    Ok(())
}
