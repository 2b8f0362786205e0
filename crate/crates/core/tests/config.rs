use hisp_core::config::{ExperimentConfig, ScenarioConfig, BENCHMARK_INITIAL_STATES};

#[test]
fn cases_carry_their_parameters() {
    let expect = [
        (1, 1e-6, 0.5, 1.34e-3, 6.2, 4.5e-3),
        (2, 5e-7, 0.8, 1.54e-2, 6.2, 4.5e-3),
        (3, 1e-6, 0.995, 7.67e-3, 4.87, 3.5e-3),
    ];
    for (id, p_b, p_d, p_fa, sr, st) in expect {
        let c = ScenarioConfig::case(id).unwrap();
        assert_eq!(
            (c.p_b, c.p_d, c.p_fa, c.sigma_r, c.sigma_theta),
            (p_b, p_d, p_fa, sr, st)
        );
        assert_eq!((c.dt, c.duration, c.q_var), (4.0, 300.0, 0.05));
        assert_eq!(c.initial_states, BENCHMARK_INITIAL_STATES.to_vec());
        assert_eq!(c.n_steps(), 75);
    }
    assert_eq!(BENCHMARK_INITIAL_STATES[0], [-400.0, -50.0, 1.0, 1.1]);
    assert_eq!(BENCHMARK_INITIAL_STATES[4], [200.0, 300.0, 0.25, -1.0]);
    assert!(ScenarioConfig::case(9).is_err());
    assert!(ExperimentConfig::for_case(0).is_err());
}

#[test]
fn toml_round_trip() {
    let mut cfg = ExperimentConfig::for_case(3).unwrap();
    cfg.runs = 4;
    cfg.filter.tau_c = 0.95;
    let text = cfg.to_toml_string().unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
}

#[test]
fn partial_files_fill_defaults_and_bad_ones_fail() {
    let cfg = ExperimentConfig::from_toml_str("runs = 3\n[scenario]\np_d = 0.9\n").unwrap();
    assert_eq!(cfg.runs, 3);
    assert_eq!(cfg.scenario.p_d, 0.9);
    assert_eq!(cfg.scenario.p_fa, 1.34e-3);
    assert!(ExperimentConfig::from_toml_str("runs = 0").is_err());
    assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
    assert!(ExperimentConfig::from_toml_str("[scenario]\np_d = 1.5").is_err());
    assert!(ExperimentConfig::from_toml_str("[ospa]\ncutoff = -1.0").is_err());
}
