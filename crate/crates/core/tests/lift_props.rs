use proptest::prelude::*;
use roughloop::lift::{chen_defect, ibp_defect, lift};
use roughloop::paths::SampledPath;
use roughloop::sampler::{sample_brownian, SeededStream};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chen_holds_on_random_triples(seed in 0u64..10_000, a in 0usize..=256, b in 0usize..=256, c in 0usize..=256) {
        let l = lift(&sample_brownian(3, 8, &SeededStream::new(seed, 11)));
        let mut t = [a, b, c];
        t.sort_unstable();
        let d = chen_defect(&l, t[0], t[1], t[2]).unwrap();
        prop_assert!(d.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn ibp_holds_for_any_dimension(seed in 0u64..10_000, dim in 1usize..5) {
        let l = lift(&sample_brownian(dim, 6, &SeededStream::new(seed, 12)));
        prop_assert!(ibp_defect(&l) < 1e-12);
    }
}

#[test]
fn unordered_triples_are_rejected() {
    let l = lift(&sample_brownian(2, 4, &SeededStream::new(0, 0)));
    assert!(chen_defect(&l, 3, 2, 5).is_err());
    assert!(chen_defect(&l, 0, 2, 17).is_err());
}

#[test]
fn straight_line_has_symmetric_area() {
    // For a linear path the level-2 term is v⊗v/2, so every defect vanishes
    // and the antisymmetric part is zero.
    let l = lift(&SampledPath::linear(5, &[1.0, -2.0]));
    assert!(ibp_defect(&l) < 1e-15);
}
