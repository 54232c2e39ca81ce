use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use roughloop::flows::{endpoint, left_translation_defect, solve_flow};
use roughloop::geometry::endpoint_distance;
use roughloop::lie::{dist, exp_alg, Group};
use roughloop::paths::SampledPath;
use roughloop::sampler::{sample_brownian, SeededStream};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flow_commutes_with_left_translation(seed in 0u64..10_000, x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        let w = sample_brownian(3, 8, &SeededStream::new(seed, 21));
        let a = exp_alg(&Vector3::new(x, y, z));
        prop_assert!(left_translation_defect(Group::So3, &a, &w, 64).unwrap() < 1e-12);
    }

    #[test]
    fn flow_stays_on_the_group(seed in 0u64..10_000) {
        let w = sample_brownian(3, 9, &SeededStream::new(seed, 22));
        let x = solve_flow(Group::So3, &Matrix3::identity(), &w).unwrap();
        prop_assert!(x.max_orthogonality_defect() < 1e-10);
        prop_assert!(dist(x.end(), &endpoint(Group::So3, &w).unwrap()) < 1e-12);
    }

    #[test]
    fn quaternion_endpoint_distance_matches_the_matrix_flow(seed in 0u64..10_000, scale in 0.1f64..1.5) {
        let w = sample_brownian(3, 8, &SeededStream::new(seed, 23)).scaled(scale);
        let e = endpoint(Group::So3, &w).unwrap();
        let want = dist(&e, &Matrix3::identity());
        prop_assume!(want < std::f64::consts::PI - 1e-6);
        prop_assert!((endpoint_distance(Group::So3, &w).unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn linear_driver_gives_the_exponential() {
    let v = [0.4, -0.3, 1.2];
    let w = SampledPath::linear(6, &v);
    let e = endpoint(Group::So3, &w).unwrap();
    assert!(dist(&e, &exp_alg(&Vector3::from_row_slice(&v))) < 1e-12);
}

#[test]
fn driver_dimension_is_checked() {
    let w = SampledPath::zeros(2, 4);
    assert!(solve_flow(Group::So3, &Matrix3::identity(), &w).is_err());
}
