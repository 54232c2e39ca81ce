use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use roughloop::lie::{dist, distance, exp_alg, hat, log_grp, orthogonality_defect, rotation_angle, Group};

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn log_inverts_exp_below_the_cut_locus(v in vec3(), r in 0.0f64..3.1) {
        let v = if v.norm() > 1e-9 { v * (r / v.norm()) } else { v };
        let g = exp_alg(&v);
        prop_assert!(orthogonality_defect(&g) < 1e-13);
        let back = log_grp(&g).unwrap();
        prop_assert!((back - v).norm() < 1e-9);
        prop_assert!((rotation_angle(&g) - v.norm()).abs() < 1e-9);
    }

    #[test]
    fn distance_is_a_left_invariant_metric(a in vec3(), b in vec3(), c in vec3()) {
        let (g, h, k) = (exp_alg(&a), exp_alg(&b), exp_alg(&c));
        prop_assert!((dist(&g, &h) - dist(&h, &g)).abs() < 1e-12);
        prop_assert!(dist(&g, &k) <= dist(&g, &h) + dist(&h, &k) + 1e-12);
        prop_assert!((dist(&(k * g), &(k * h)) - dist(&g, &h)).abs() < 1e-10);
    }

    #[test]
    fn bracket_is_the_cross_product_and_satisfies_jacobi(a in vec3(), b in vec3(), c in vec3()) {
        let g = Group::So3;
        prop_assert!((g.bracket(&a, &b) - a.cross(&b)).norm() < 1e-15);
        prop_assert!((hat(&a) * hat(&b) - hat(&b) * hat(&a) - hat(&a.cross(&b))).norm() < 1e-14);
        let j = g.bracket(&a, &g.bracket(&b, &c)) + g.bracket(&b, &g.bracket(&c, &a)) + g.bracket(&c, &g.bracket(&a, &b));
        prop_assert!(j.norm() < 1e-14);
        prop_assert_eq!(Group::Torus.bracket(&a, &b), Vector3::zeros());
    }

    #[test]
    fn adjoint_action_is_an_isometry(a in vec3(), v in vec3()) {
        let ad = Group::So3.ad_group(&exp_alg(&a));
        prop_assert!(((ad * v).norm() - v.norm()).abs() < 1e-13);
    }
}

#[test]
fn log_refuses_the_cut_locus() {
    let g = exp_alg(&Vector3::new(std::f64::consts::PI, 0.0, 0.0));
    assert!(log_grp(&g).is_err());
    // The distance falls back to the chordal value there and says so.
    let (d, chordal) = distance(&g, &Matrix3::identity());
    assert!(chordal);
    assert!((d - 2.0).abs() < 1e-12);
}
