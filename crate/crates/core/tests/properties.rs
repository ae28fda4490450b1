//! Randomised invariants.

use blackout_co::blackout::{forward_sample, reverse_bridge_sample, BlackoutConfig};
use blackout_co::categorical::{default_betas, reverse_step_cat, stationary_sample};
use blackout_co::decode::{greedy_construct, score_matrix, two_opt};
use blackout_co::denoiser::{
    Denoiser, DenoiserInput, HeuristicDenoiser, LinearEdgeModel, NoiseKind, DEFAULT_TIME_FEATURES,
};
use blackout_co::instance::{
    format_instance, format_tour, parse_instance, parse_tour, tour_length, tour_to_edge_matrix,
    Tour, TspInstance,
};
use blackout_co::matrix::{upper_pairs, ProbHeatmap};
use blackout_co::rng::seeded;
use blackout_co::schedule::{invert_std, std_of_t, Branch};
use blackout_co::EdgeMatrix;
use proptest::prelude::*;

fn coords(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| [x, y]), n)
}

fn instance(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = TspInstance<f64>> {
    coords(n).prop_filter_map("coincident points", |c| TspInstance::new(c).ok())
}

fn tour(n: usize) -> impl Strategy<Value = Tour> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle().prop_map(|o| Tour::new(o).unwrap())
}

fn instance_and_tour() -> impl Strategy<Value = (TspInstance<f64>, Tour)> {
    instance(3..=30).prop_flat_map(|inst| {
        let n = inst.n();
        (Just(inst), tour(n))
    })
}

fn is_valid_edge_matrix(x: &EdgeMatrix) -> bool {
    let n = x.n();
    EdgeMatrix::from_entries(n, x.entries().to_vec()).is_ok() && (0..n).all(|i| !x.get(i, i))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tour_length_ignores_rotation_and_direction((inst, t) in instance_and_tour(), shift in 0usize..30) {
        let len = tour_length(&inst, &t).unwrap();
        let mut order = t.order().to_vec();
        let len_nodes = order.len();
        order.rotate_left(shift % len_nodes);
        let rotated = Tour::new(order).unwrap();
        prop_assert!((tour_length(&inst, &rotated).unwrap() - len).abs() < 1e-12);
        prop_assert!((tour_length(&inst, &t.reversed()).unwrap() - len).abs() < 1e-12);
        prop_assert_eq!(rotated.canonical(), t.canonical());
        prop_assert_eq!(t.reversed().canonical(), t.canonical());
    }

    #[test]
    fn tour_edge_matrix_is_two_regular(t in (3usize..40).prop_flat_map(tour)) {
        let x = tour_to_edge_matrix(&t);
        prop_assert!(is_valid_edge_matrix(&x));
        prop_assert_eq!(x.nnz(), 2 * t.len());
        prop_assert!((0..t.len()).all(|i| x.row_sum(i) == 2));
    }

    #[test]
    fn greedy_yields_hamiltonian_cycle(n in 3usize..40, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = seeded(seed);
        let mut scores = vec![0.0; n * n];
        for (i, j) in upper_pairs(n) {
            let v: f64 = rng.gen();
            scores[i * n + j] = v;
            scores[j * n + i] = v;
        }
        let t = greedy_construct(&scores, n);
        prop_assert!(Tour::new(t.order().to_vec()).is_ok());
        prop_assert_eq!(t.len(), n);
    }

    #[test]
    fn greedy_is_scale_invariant(inst in instance(3..=25), seed in any::<u64>(), lambda in 0.05..1.0f64) {
        use rand::Rng;
        let n = inst.n();
        let mut rng = seeded(seed);
        let probs: Vec<f64> = (0..n * n).map(|_| rng.gen()).collect();
        let heat = ProbHeatmap::from_fn(n, |i, j| probs[i.min(j) * n + i.max(j)]);
        let scaled = TspInstance::new(
            inst.coords().iter().map(|c| [c[0] * lambda, c[1] * lambda]).collect(),
        ).unwrap();
        let a = greedy_construct(&score_matrix(&heat, &inst).unwrap(), n);
        let b = greedy_construct(&score_matrix(&heat, &scaled).unwrap(), n);
        prop_assert_eq!(a.order(), b.order());
        let s = score_matrix(&heat, &inst).unwrap();
        let c = greedy_construct(&s.iter().map(|v| v * 3.0).collect::<Vec<_>>(), n);
        prop_assert_eq!(a.order(), c.order());
    }

    #[test]
    fn two_opt_never_lengthens((inst, t) in instance_and_tour()) {
        let improved = two_opt(&t, &inst).unwrap();
        prop_assert!(tour_length(&inst, &improved).unwrap() <= tour_length(&inst, &t).unwrap());
        let again = two_opt(&improved, &inst).unwrap();
        prop_assert_eq!(again.order(), improved.order());
    }

    #[test]
    fn invert_std_round_trips(u in 0.0..1.0f64, before in any::<bool>()) {
        let cfg = BlackoutConfig::<f64>::default();
        // below this floor one branch would need a time outside [epsilon_time, horizon]
        let s_min = std_of_t(cfg.horizon).unwrap().max(std_of_t(cfg.epsilon_time).unwrap());
        let s = s_min + (0.5 - s_min) * u;
        let branch = if before { Branch::BeforePeak } else { Branch::AfterPeak };
        let t = invert_std(&cfg, s, branch).unwrap();
        prop_assert!((std_of_t(t).unwrap() - s).abs() < 1e-10);
        prop_assert!(t >= cfg.epsilon_time && t <= cfg.horizon);
        if before {
            prop_assert!(t <= std::f64::consts::LN_2 + 1e-7);
        } else {
            prop_assert!(t >= std::f64::consts::LN_2 - 1e-7);
        }
    }

    #[test]
    fn samplers_keep_edge_matrices_valid(n in 2usize..20, seed in any::<u64>(), t in 0.01..15.0f64, frac in 0.0..1.0f64) {
        use rand::Rng;
        let cfg = BlackoutConfig::<f64>::default();
        let mut rng = seeded(seed);
        let x0 = EdgeMatrix::from_fn(n, |_, _| rng.gen_bool(0.5));
        let x_t = forward_sample(&cfg, &x0, t, &mut rng).unwrap();
        prop_assert!(is_valid_edge_matrix(&x_t) && x_t.is_subset_of(&x0));
        let s = t * frac;
        let x_s = reverse_bridge_sample(&x_t, &x0, s, t, &mut rng).unwrap();
        prop_assert!(is_valid_edge_matrix(&x_s));
        prop_assert!(x_t.is_subset_of(&x_s) && x_s.is_subset_of(&x0));

        let betas = default_betas::<f64>(10).unwrap();
        let probs = ProbHeatmap::from_fn(n, |_, _| rng.gen::<f64>());
        let start = stationary_sample(n, &mut rng);
        prop_assert!(is_valid_edge_matrix(&start));
        let next = reverse_step_cat(&start, &probs, 1 + (seed % 10) as usize, &betas, &mut rng).unwrap();
        prop_assert!(is_valid_edge_matrix(&next));
    }

    #[test]
    fn denoiser_outputs_are_well_formed(inst in instance(3..=15), seed in any::<u64>(), t in 0.0..15.0f64, categorical in any::<bool>()) {
        use rand::Rng;
        let cfg = BlackoutConfig::<f64>::default();
        let n = inst.n();
        let mut rng = seeded(seed);
        let x = EdgeMatrix::from_fn(n, |_, _| rng.gen_bool(0.3));
        let kind = if categorical { NoiseKind::Categorical } else { NoiseKind::Blackout };
        let params: Vec<f64> = (0..3 + DEFAULT_TIME_FEATURES + 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let model = LinearEdgeModel::zeros(DEFAULT_TIME_FEATURES).unwrap().with_params(&params).unwrap();
        let heuristic = HeuristicDenoiser::default();
        let denoisers: [&dyn Denoiser<f64>; 2] = [&model, &heuristic];
        for d in denoisers {
            let out = d.predict(&DenoiserInput { x_t: &x, t, instance: &inst, kind, config: &cfg }).unwrap();
            for i in 0..n {
                prop_assert_eq!(out.edge_probs.get(i, i), 0.0);
                for j in 0..n {
                    let p = out.edge_probs.get(i, j);
                    prop_assert!((0.0..=1.0).contains(&p));
                    prop_assert_eq!(p, out.edge_probs.get(j, i));
                    if i != j {
                        let y = out.delta_rates.get(i, j);
                        prop_assert!(y >= cfg.epsilon_rate && y <= 1.0);
                        prop_assert_eq!(y, out.delta_rates.get(j, i));
                    }
                    if !categorical && x.get(i, j) {
                        prop_assert_eq!(p, 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn instance_and_tour_text_round_trip((inst, t) in instance_and_tour()) {
        let back: TspInstance<f64> = parse_instance(&format_instance(&inst)).unwrap();
        prop_assert_eq!(back.coords(), inst.coords());
        prop_assert_eq!(parse_tour(&format_tour(&t)).unwrap(), t);
    }
}
