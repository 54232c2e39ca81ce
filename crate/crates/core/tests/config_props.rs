use proptest::prelude::*;
use roughloop::experiments::{registry, run_with_workers, to_csv, ExperimentConfig, CSV_HEADER};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_text_round_trips(idx in 0usize..10, seed in any::<u64>(), n in 1usize..5000) {
        let name = registry()[idx].name;
        let mut c = ExperimentConfig::parse(&format!("experiment = {name}\nseed = {seed}\n")).unwrap();
        c.set("n_seeds", &n.to_string()).unwrap();
        let back = ExperimentConfig::parse(&c.to_config_text()).unwrap();
        prop_assert_eq!(back.to_config_text(), c.to_config_text());
        prop_assert_eq!(back.provenance(), c.provenance());
        prop_assert_eq!(back.seed, seed);
    }
}

#[test]
fn every_registered_default_validates() {
    for s in registry() {
        let c = ExperimentConfig::parse(&format!("experiment = {}\nseed = 1\n", s.name)).unwrap();
        assert!(c.validate().is_empty(), "{}", s.name);
    }
}

#[test]
fn validation_collects_every_error() {
    let errs = ExperimentConfig::parse("experiment = small-ball\nlevel = 0\nbogus = 1\n[params]\nepsilon = -1\nwhat = 2\n")
        .unwrap_err();
    assert!(errs.iter().any(|e| e.contains("bogus")));
    assert!(errs.iter().any(|e| e.contains("what")));
    assert!(ExperimentConfig::parse("experiment = nope\n").unwrap_err()[0].contains("nope"));
}

#[test]
fn csv_has_the_fixed_header_and_is_worker_independent() {
    let c = ExperimentConfig::parse("experiment = stokes-audit\nseed = 3\nlevel = 4\nn_seeds = 2\n[params]\nn_surface = 1\n")
        .unwrap();
    let a = to_csv(&c, &run_with_workers(&c, 1).unwrap(), true).unwrap();
    let b = to_csv(&c, &run_with_workers(&c, 3).unwrap(), true).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with(&(CSV_HEADER.join(",") + "\r\n")));
}
