//! Instance directories: generation, manifests, exact references.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use blackout_co::instance::{
    exact_solve, generate_random, read_instance, read_tour, tour_length, write_instance, write_tour,
    Tour, EXACT_MAX_NODES,
};
use blackout_co::rng::derive_seed;
use blackout_co::Instance;
use rayon::prelude::*;

use crate::error::{at_path, io_at, usage, CliError, CliResult};
use crate::{ExactArgs, GenArgs};

pub const MANIFEST: &str = "manifest.csv";
pub const LENGTHS: &str = "lengths.csv";

#[derive(Debug, Clone)]
pub struct Entry {
    pub id: usize,
    pub path: PathBuf,
}

pub fn instance_file(id: usize) -> String {
    format!("inst_{id:05}.txt")
}

pub fn tour_file(id: usize) -> String {
    format!("opt_{id:05}.tour")
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    io_at(path, std::fs::write(path, text))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    io_at(dir, std::fs::create_dir_all(dir))
}

pub fn load_instance(path: &Path) -> CliResult<Instance> {
    at_path(path, read_instance(path))
}

pub fn load_tour(path: &Path) -> CliResult<Tour> {
    at_path(path, read_tour(path))
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    if args.n < 3 {
        return Err(usage(format!("--n must be at least 3, got {}", args.n)));
    }
    if args.count < 1 {
        return Err(usage("--count must be at least 1"));
    }
    ensure_dir(&args.out)?;
    let mut manifest = String::from("id,file,n,seed\n");
    for k in 0..args.count {
        let seed = derive_seed(args.seed, k as u64);
        let inst = generate_random::<f64>(args.n, seed)?;
        let path = args.out.join(instance_file(k));
        at_path(&path, write_instance(&inst, &path))?;
        let _ = writeln!(manifest, "{k},{},{},{seed}", instance_file(k), args.n);
    }
    write_text(&args.out.join(MANIFEST), &manifest)
}

/// Entries listed in `dir/manifest.csv`, in manifest order.
pub fn read_manifest(dir: &Path) -> CliResult<Vec<Entry>> {
    let path = dir.join(MANIFEST);
    let text = io_at(&path, std::fs::read_to_string(&path))?;
    let mut entries = Vec::new();
    for (line_no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let parse_err = || {
            CliError::Core(blackout_co::Error::Parse {
                line: line_no + 1,
                msg: format!("{}: malformed manifest row", path.display()),
            })
        };
        let id: usize = cols.next().and_then(|c| c.trim().parse().ok()).ok_or_else(parse_err)?;
        let file = cols.next().map(str::trim).filter(|f| !f.is_empty()).ok_or_else(parse_err)?;
        entries.push(Entry { id, path: dir.join(file) });
    }
    if entries.is_empty() {
        return Err(usage(format!("no instances listed in {}", path.display())));
    }
    Ok(entries)
}

/// Held–Karp with a size check phrased for the command line.
pub fn exact_reference(inst: &Instance, what: &Path) -> CliResult<Tour> {
    if inst.n() > EXACT_MAX_NODES {
        return Err(usage(format!(
            "{}: n = {} exceeds the exact limit of {EXACT_MAX_NODES}; use bench, which falls back to a heuristic reference",
            what.display(),
            inst.n()
        )));
    }
    Ok(exact_solve(inst)?)
}

fn id_from_path(path: &Path) -> Option<usize> {
    path.file_stem()?.to_str()?.strip_prefix("inst_")?.parse().ok()
}

pub fn cmd_exact(args: &ExactArgs) -> CliResult<()> {
    let (entries, default_out) = match (&args.source.instance, &args.source.dir) {
        (Some(path), _) => {
            let id = id_from_path(path).unwrap_or(0);
            let parent = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (vec![Entry { id, path: path.clone() }], parent)
        }
        (None, Some(dir)) => (read_manifest(dir)?, dir.clone()),
        (None, None) => return Err(usage("pass --instance or --dir")),
    };
    let out = args.out.clone().unwrap_or(default_out);
    ensure_dir(&out)?;
    let solved: Vec<(usize, usize, f64)> = entries
        .par_iter()
        .map(|e| {
            let inst = load_instance(&e.path)?;
            let tour = exact_reference(&inst, &e.path)?;
            let path = out.join(tour_file(e.id));
            at_path(&path, write_tour(&tour, &path))?;
            Ok((e.id, inst.n(), tour_length(&inst, &tour)?))
        })
        .collect::<CliResult<_>>()?;
    let mut csv = String::from("id,n,length\n");
    for (id, n, len) in solved {
        let _ = writeln!(csv, "{id},{n},{len}");
    }
    write_text(&out.join(LENGTHS), &csv)
}
