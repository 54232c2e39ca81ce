use proptest::prelude::*;
use roughloop::paths::{cm_inner, cm_norm, dyadic_approx, dyadic_complement, SampledPath};
use roughloop::sampler::{sample_brownian, SeededStream};

fn path(dim: usize, level: u32, seed: u64) -> SampledPath {
    sample_brownian(dim, level, &SeededStream::new(seed, 7))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn upsample_then_restrict_is_identity(seed in 0u64..1000, level in 1u32..7, extra in 0u32..4) {
        let w = path(2, level, seed);
        let back = w.upsample(level + extra).unwrap().restrict(level).unwrap();
        prop_assert_eq!(back.values(), w.values());
    }

    #[test]
    fn complement_vanishes_on_the_coarse_grid(seed in 0u64..1000, n in 0u32..6) {
        let w = path(3, 7, seed);
        let perp = dyadic_complement(&w, n).unwrap();
        let stride = 1usize << (7 - n);
        for k in (0..=w.cells()).step_by(stride) {
            prop_assert!(perp.point(k).iter().all(|x| x.abs() < 1e-15));
        }
        let sum = dyadic_approx(&w, n).unwrap().add(&perp).unwrap();
        for (a, b) in sum.values().iter().zip(w.values()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn cm_inner_is_bilinear_and_matches_norm(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (x, y, z) = (path(2, 6, seed), path(2, 6, seed + 1), path(2, 6, seed + 2));
        let lhs = cm_inner(&x.lin_comb(a, &y, b).unwrap(), &z).unwrap();
        let rhs = a * cm_inner(&x, &z).unwrap() + b * cm_inner(&y, &z).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        let n2 = cm_inner(&x, &x).unwrap();
        prop_assert!((n2.sqrt() - cm_norm(&x)).abs() < 1e-10 * (1.0 + n2));
    }

    #[test]
    fn upsampling_keeps_the_cm_norm(seed in 0u64..1000, extra in 1u32..4) {
        let w = path(1, 5, seed);
        let up = w.upsample(5 + extra).unwrap();
        prop_assert!((cm_norm(&up) - cm_norm(&w)).abs() < 1e-10 * cm_norm(&w));
    }
}

#[test]
fn brownian_sampling_is_index_deterministic() {
    let s = SeededStream::new(42, 3);
    assert_eq!(sample_brownian(2, 8, &s).values(), sample_brownian(2, 8, &s).values());
    assert_ne!(sample_brownian(2, 8, &s).values(), sample_brownian(2, 8, &SeededStream::new(42, 4)).values());
}

#[test]
fn restrict_beyond_resolution_is_an_error() {
    assert!(path(1, 4, 0).restrict(5).is_err());
    assert!(path(1, 4, 0).upsample(3).is_err());
}
