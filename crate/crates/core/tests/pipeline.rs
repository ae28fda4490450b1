//! End-to-end solving, determinism and file round trips.

use blackout_co::blackout::{forward_trajectory, parse_pgm, write_frames, BlackoutConfig};
use blackout_co::decode::{
    read_heatmap, run_reverse, solve_greedy, solve_pipeline, solve_sampling, write_heatmap,
    Pipeline, ReverseRunConfig, Variant,
};
use blackout_co::denoiser::{
    read_model, train, write_model, HeuristicDenoiser, LinearEdgeModel, OracleDenoiser,
    TrainConfig, DEFAULT_TIME_FEATURES,
};
use blackout_co::instance::{
    exact_solve, generate_random, optimality_gap, tour_length, tour_to_edge_matrix, Tour,
};
use blackout_co::rng::seeded;
use blackout_co::schedule::original_schedule;
use blackout_co::{Error, Instance32};

#[test]
fn oracle_chain_recovers_the_clean_matrix() {
    for seed in 0..10u64 {
        let inst = generate_random::<f64>(9, seed).unwrap();
        let opt = exact_solve(&inst).unwrap();
        let oracle = OracleDenoiser::from_tour(&opt);
        for variant in Variant::ALL {
            let cfg = ReverseRunConfig::greedy(variant, seed);
            let run = run_reverse(&inst, &oracle, &cfg).unwrap();
            assert_eq!(run.final_state, tour_to_edge_matrix(&opt), "{variant}");
        }
    }
}

#[test]
fn fixed_seed_gives_identical_solutions() {
    let inst = generate_random::<f64>(15, 8).unwrap();
    let h = HeuristicDenoiser::default();
    for variant in Variant::ALL {
        for pipeline in Pipeline::ALL {
            let a = solve_pipeline(&inst, &h, variant, pipeline, 99).unwrap();
            let b = solve_pipeline(&inst, &h, variant, pipeline, 99).unwrap();
            assert_eq!(a.tour, b.tour);
            assert_eq!(a.diagnostics, b.diagnostics);
            assert_eq!(a.heatmap, b.heatmap);
        }
    }
}

#[test]
fn greedy_uses_chain_zero_of_sampling() {
    let inst = generate_random::<f64>(12, 2).unwrap();
    let h = HeuristicDenoiser::default();
    let greedy = ReverseRunConfig::greedy(Variant::BlackoutImproved, 5);
    let single = ReverseRunConfig { samples: 1, ..greedy };
    let a = solve_greedy(&inst, &h, &greedy).unwrap();
    let b = solve_sampling(&inst, &h, &single).unwrap();
    assert_eq!(a.tour, b.tour);
    assert_eq!(a.diagnostics.chain_lengths, b.diagnostics.chain_lengths);
}

#[test]
fn sampling_selects_the_shortest_chain() {
    let inst = generate_random::<f64>(20, 3).unwrap();
    let h = HeuristicDenoiser::default();
    let sol = solve_pipeline(&inst, &h, Variant::BlackoutOriginal, Pipeline::Sample, 4).unwrap();
    let d = &sol.diagnostics;
    assert_eq!(d.chain_lengths.len(), 16);
    let min = d.chain_lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(d.chain_lengths[d.selected_chain], min);
    assert!(d.chain_lengths[..d.selected_chain].iter().all(|&l| l > min));
    assert_eq!(sol.length, min);
    assert_eq!(tour_length(&inst, &sol.tour).unwrap(), sol.length);
}

#[test]
fn two_opt_order_flag_changes_only_refinement() {
    let inst = generate_random::<f64>(25, 6).unwrap();
    let h = HeuristicDenoiser::default();
    let base = ReverseRunConfig::sampling(Variant::BlackoutMoreImproved, 1);
    let raw = solve_sampling(&inst, &h, &base).unwrap();
    let after = ReverseRunConfig { two_opt: true, two_opt_after_selection: true, ..base };
    let each = ReverseRunConfig { two_opt: true, ..base };
    let a = solve_sampling(&inst, &h, &after).unwrap();
    let e = solve_sampling(&inst, &h, &each).unwrap();
    assert_eq!(a.diagnostics.selected_chain, raw.diagnostics.selected_chain);
    assert!(a.length <= raw.length);
    assert!(e.length <= raw.length);
}

#[test]
fn sampling_helps_the_heuristic_on_average() {
    let h = HeuristicDenoiser::default();
    let (mut greedy, mut sample) = (0.0, 0.0);
    for seed in 0..50u64 {
        let inst = generate_random::<f64>(10, 5000 + seed).unwrap();
        let opt = tour_length(&inst, &exact_solve(&inst).unwrap()).unwrap();
        let g = ReverseRunConfig { steps: 10, ..ReverseRunConfig::greedy(Variant::BlackoutOriginal, seed) };
        let s = ReverseRunConfig::sampling(Variant::BlackoutOriginal, seed);
        greedy += optimality_gap(solve_greedy(&inst, &h, &g).unwrap().length, opt).unwrap();
        sample += optimality_gap(solve_sampling(&inst, &h, &s).unwrap().length, opt).unwrap();
    }
    assert!(sample <= greedy, "sample {} greedy {}", sample / 50.0, greedy / 50.0);
}

#[test]
fn mismatched_oracle_is_rejected() {
    let inst = generate_random::<f64>(8, 0).unwrap();
    let oracle = OracleDenoiser::from_tour(&Tour::identity(9).unwrap());
    let err = solve_pipeline(&inst, &oracle, Variant::BlackoutOriginal, Pipeline::Greedy, 0);
    assert!(matches!(err, Err(Error::Config(_))));
    let bad = ReverseRunConfig { steps: 1, ..ReverseRunConfig::<f64>::greedy(Variant::Categorical, 0) };
    assert!(matches!(solve_greedy(&inst, &HeuristicDenoiser::default(), &bad), Err(Error::Config(_))));
}

#[test]
fn single_precision_pipeline_runs() {
    let inst: Instance32 = generate_random(10, 1).unwrap();
    let opt = exact_solve(&inst).unwrap();
    let oracle = OracleDenoiser::from_tour(&opt);
    let sol = solve_pipeline(&inst, &oracle, Variant::BlackoutImproved, Pipeline::Sample, 0).unwrap();
    assert_eq!(sol.tour.canonical(), opt.canonical());
}

#[test]
fn model_and_heatmap_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BlackoutConfig::<f64>::default();
    let data: Vec<_> = (0..10u64)
        .map(|k| {
            let inst = generate_random::<f64>(8, k).unwrap();
            let t = exact_solve(&inst).unwrap();
            (inst, t)
        })
        .collect();
    let sched = original_schedule(&cfg, 20).unwrap();
    let tc = TrainConfig { epochs: 20, ..TrainConfig::default() };
    let zero = LinearEdgeModel::zeros(DEFAULT_TIME_FEATURES).unwrap();
    let (model, trace) = train(&zero, &data, &sched, &cfg, &tc).unwrap();
    assert_eq!(trace.len(), 20);
    let path = dir.path().join("model.txt");
    write_model(&model, &path).unwrap();
    let back: LinearEdgeModel<f64> = read_model(&path).unwrap();
    assert_eq!(back, model);

    let sol = solve_pipeline(&data[0].0, &model, Variant::BlackoutOriginal, Pipeline::Greedy, 0).unwrap();
    let hpath = dir.path().join("heat.csv");
    write_heatmap(&sol.heatmap, &hpath).unwrap();
    let heat = read_heatmap::<f64>(&hpath).unwrap();
    for (a, b) in heat.entries().iter().zip(sol.heatmap.entries()) {
        assert!((a - b).abs() <= 5e-7);
    }
}

#[test]
fn frames_are_written_and_end_black() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BlackoutConfig::<f64>::default();
    let sched = original_schedule(&cfg, 12).unwrap();
    let x0 = tour_to_edge_matrix(&Tour::identity(10).unwrap());
    let frames = forward_trajectory(&x0, &sched, &mut seeded(0)).unwrap();
    write_frames(dir.path(), &frames, &sched).unwrap();
    let index = std::fs::read_to_string(dir.path().join("index.csv")).unwrap();
    let lines: Vec<&str> = index.lines().collect();
    assert_eq!(lines[0], "k,t,std,active_edge_count");
    assert_eq!(lines.len(), 14);
    assert!(lines[1].starts_with("0,0,0,10"));
    let first = parse_pgm(&std::fs::read_to_string(dir.path().join("frame_0000.pgm")).unwrap()).unwrap();
    assert_eq!(first, x0);
    let last = parse_pgm(&std::fs::read_to_string(dir.path().join("frame_0012.pgm")).unwrap()).unwrap();
    assert_eq!(last.active_edges(), 0);
}
