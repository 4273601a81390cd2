use proptest::prelude::*;
use xbarsim::xbar::{BiasScheme, SolverKind};
use xbarsim_cli::ExperimentConfig;

fn scheme() -> impl Strategy<Value = BiasScheme> {
    prop_oneof![Just(BiasScheme::FullV), Just(BiasScheme::HalfV), Just(BiasScheme::ThirdV)]
}

fn solver() -> impl Strategy<Value = SolverKind> {
    prop_oneof![Just(SolverKind::Auto), Just(SolverKind::Dense), Just(SolverKind::Iterative)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parse_inverts_serialize(
        seed in 0u64..=i64::MAX as u64,
        noise in any::<bool>(),
        vset in -10.0f64..10.0,
        tiny in 1e-12f64..1e-3,
        n in 0usize..100_000,
        amps in prop::collection::vec(-3.0f64..3.0, 0..9),
        scheme in scheme(),
        solver in solver(),
        out in "[a-z/_.]{1,12}",
    ) {
        let mut c = ExperimentConfig { seed, noise, out, ..Default::default() };
        c.population.vset_mean_d2d = vset;
        c.population.pulse.a_pot = tiny;
        c.dc_cycle.n_cycles = n;
        c.pulse_train.depression = amps;
        c.array.scheme = scheme;
        c.array.solver = solver;
        c.write_verify.tol = tiny;
        let text = c.to_flat_string().unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
    }
}

#[test]
fn every_setting_is_one_dotted_line() {
    let text = ExperimentConfig::default().to_flat_string().unwrap();
    for line in text.lines() {
        let (key, _) = line.split_once(" = ").unwrap();
        assert!(!key.contains(' '), "{line}");
    }
    assert!(text.contains("vmm.task.n_features = 8"));
    assert!(text.contains("array.scheme = \"half-v\""));
}
