use fracrb::constants::AlphaVariant;
use fracrb::rbm::{
    build_affine_problem, gauss_legendre_grid, greedy_train, load_model, model_matches, rb_solve, save_model, true_error,
    AffineKind, GreedyMode, GreedyOptions,
};

fn scratch(tag: &str) -> std::path::PathBuf {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(tag);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn trained_model_survives_a_round_trip() {
    let problem = build_affine_problem(AffineKind::GreedyCase1, 1.5, 64, AlphaVariant::Alpha).unwrap();
    let training = gauss_legendre_grid(&problem.parameter_box, 3).unwrap();
    let (model, trace) = greedy_train(&problem, &training, GreedyOptions::new(GreedyMode::Weak, 1e-12, 8)).unwrap();
    assert_eq!(model.size(), 8);
    assert_eq!(trace.records.len(), 9);

    let dir = scratch("rb-round-trip");
    save_model(&model, &dir).unwrap();
    let loaded = load_model(&dir).unwrap();
    assert!(model_matches(&loaded, &problem));

    for mu in [vec![0.8, 1.2, 1.0, 0.1, 0.9], vec![1.3, 0.7, 0.75, 1.0, 0.0]] {
        let a = rb_solve(&model, &mu).unwrap();
        let b = rb_solve(&loaded, &mu).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        assert!((a.delta - b.delta).abs() <= 1e-10 * a.delta.max(1e-300));
        let err = true_error(&problem, &loaded, &mu, &b.coefficients).unwrap();
        assert!(err <= b.delta + 1e-8, "{err} > {}", b.delta);
    }
}

#[test]
fn constant_diffusion_decays_faster_for_larger_order() {
    let mut rates = Vec::new();
    for s in [1.8, 1.2] {
        let problem = build_affine_problem(AffineKind::ConstantDiffusion { mu_plus: 1.0 }, s, 64, AlphaVariant::Alpha).unwrap();
        let training = gauss_legendre_grid(&problem.parameter_box, 16).unwrap();
        let (_, trace) = greedy_train(&problem, &training, GreedyOptions::new(GreedyMode::Strong, 1e-11, 10)).unwrap();
        rates.push(trace.estimator_rate().unwrap());
    }
    assert!(rates[0] > rates[1], "{rates:?}");
}
