use slowsde::bounds::sin_weight;
use slowsde::dynamics::{solve_z, OdeCfg};
use slowsde::quadrature::QuadratureCfg;
use slowsde::verify::{bound_chain, ChainConfig};
use slowsde::Coefficients;

#[test]
fn chain_holds_for_three_matched_configurations() {
    let m = Coefficients::default_preset().unwrap();
    let p = *m.params();
    let cfg = OdeCfg::default();
    let diameter = solve_z(&m, 1.0, p.t_end, &cfg).unwrap() - solve_z(&m, -1.0, p.t_end, &cfg).unwrap();
    let configs = [(5.0, 0.375, 0.0, 0.375), (2.0, 0.5, 0.1, 0.6), (10.0, 0.25, 0.2, 0.45)];
    for (i, &(c, eps, a, b)) in configs.iter().enumerate() {
        let cc = ChainConfig {
            chirp_center: c,
            chirp_eps: eps,
            a,
            b,
            outer: 200,
            inner: 2_000,
            two_point_samples: 20_000,
        };
        let r = bound_chain(&m, &cc, 100 + i as u64).unwrap();
        for a in &r.assertions {
            assert!(a.passed, "config {i}: {} measured {} threshold {}", a.name, a.measured, a.threshold);
        }
        assert!(r.two_point.mean <= 0.5 * diameter);
        assert!(r.optimal.inner_bias().abs() < 5.0 * r.optimal.at_double_inner.std_error.max(1e-3));
    }
}

#[test]
fn zero_psi_gives_zero_estimates() {
    use slowsde::brownian::YPairSampler;
    use slowsde::dynamics::TerminalMap;
    use slowsde::predictor::{optimal_predictor_error, two_point_lower_estimate};
    use slowsde::PsiSpec;
    let m = Coefficients::default_preset().unwrap();
    let map = TerminalMap::with_defaults(&m).unwrap();
    let sampler = YPairSampler::new(&m, 0.0, 0.5, &QuadratureCfg::default()).unwrap();
    let zero = PsiSpec::zero();
    assert_eq!(two_point_lower_estimate(&map, &zero, &sampler, 1000, 3).unwrap().mean, 0.0);
    let opt = optimal_predictor_error(&map, &zero, &sampler, 10, 1000, 3).unwrap();
    assert_eq!(opt.at_double_inner.mean, 0.0);
}

#[test]
fn sin_weight_is_stable_under_refinement() {
    let base = sin_weight(1.5, &QuadratureCfg::default()).unwrap();
    let fine = QuadratureCfg { node_count: 128, ..QuadratureCfg::with_tol(1e-15) };
    assert!((sin_weight(1.5, &fine).unwrap() - base).abs() < 1e-10);
}
