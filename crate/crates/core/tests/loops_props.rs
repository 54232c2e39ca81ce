use proptest::prelude::*;
use roughloop::experiments::random_h0;
use roughloop::geometry::{endpoint_distance, retract, TubeSpec};
use roughloop::lie::Group;
use roughloop::loops::{casimir_terms, koszul_defect, metric_defect, torsion_defect, H0Frame, LoopOneForm};
use roughloop::paths::SampledPath;
use roughloop::sampler::SeededStream;

fn h0(group: Group, seed: u64, i: u64) -> SampledPath {
    random_h0(group, 7, &mut SeededStream::new(seed, 31).rng(i))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn connection_is_torsion_free_and_metric(seed in 0u64..10_000) {
        let (h, k, l) = (h0(Group::So3, seed, 0), h0(Group::So3, seed, 1), h0(Group::So3, seed, 2));
        prop_assert!(torsion_defect(Group::So3, &h, &k).unwrap() < 1e-10);
        prop_assert!(metric_defect(Group::So3, &h, &k, &l).unwrap() < 1e-10);
        prop_assert!(koszul_defect(Group::So3, &h, &k, &l).unwrap() < 1e-10);
    }

    #[test]
    fn abelian_casimir_terms_vanish(seed in 0u64..10_000) {
        let a = LoopOneForm::new(Group::Torus, h0(Group::Torus, seed, 0)).unwrap();
        let (t2, t3) = casimir_terms(&a, &h0(Group::Torus, seed, 1)).unwrap();
        prop_assert!(t2.abs() < 1e-12 && t3.abs() < 1e-12);
    }

    #[test]
    fn retraction_pins_the_endpoint(seed in 0u64..10_000, scale in 0.05f64..0.3) {
        let mut rng = SeededStream::new(seed, 32).rng(0);
        let w = roughloop::sampler::brownian_from_rng(3, 8, &mut rng).scaled(scale);
        let tube = TubeSpec::new(0.9).unwrap();
        if endpoint_distance(Group::So3, &w).unwrap() < 0.9 {
            let r = retract(Group::So3, &tube, &w).unwrap();
            prop_assert!(endpoint_distance(Group::So3, &r).unwrap() < 1e-9);
        }
    }
}

#[test]
fn frame_is_orthonormal_up_to_rounding() {
    for m in [1, 5, 31] {
        assert!(H0Frame::new(Group::So3, m, 6).unwrap().orthonormality_defect() < 1e-12);
    }
    assert!(H0Frame::new(Group::So3, 64, 6).is_err());
}
