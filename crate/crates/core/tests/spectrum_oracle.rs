mod common;

use common::{binary_entropy_bits, brute_binary_spectrum, complement_sum};
use polar_source::source::JointSource;
use polar_source::spectrum::{
    build_high_entropy_set, exact_spectrum, montecarlo_spectrum, set_size, zbound_spectrum,
};
use polar_source::FieldSpec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn exact_spectrum_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut sources = vec![
        JointSource::bernoulli(0.11).unwrap(),
        JointSource::bec_pair(0.3).unwrap(),
        JointSource::bsc_pair(0.05).unwrap(),
    ];
    for ys in 1..=3 {
        sources.push(JointSource::random(FieldSpec::BINARY, ys, &mut rng));
    }
    for s in &sources {
        for len in [1usize, 2, 4] {
            let spec = exact_spectrum(s, len).unwrap();
            let (h, z) = brute_binary_spectrum(s, len);
            for i in 0..len {
                assert!(
                    (spec.h()[i] - h[i]).abs() < 1e-10,
                    "{s} N={len} h_{}",
                    i + 1
                );
                assert!(
                    (spec.z().unwrap()[i] - z[i]).abs() < 1e-10,
                    "{s} N={len} z_{}",
                    i + 1
                );
            }
        }
    }
}

#[test]
fn erasure_spectrum_closed_form() {
    // BEC recursion: e⁻ = 2e − e², e⁺ = e².
    let eps: f64 = 0.5;
    let m = 2.0 * eps - eps * eps;
    let p = eps * eps;
    // Index i reads the bits of i − 1 MSB-first, 0 = minus.
    let want = [2.0 * m - m * m, m * m, 2.0 * p - p * p, p * p];
    let spec = exact_spectrum(&JointSource::bec_pair(eps).unwrap(), 4).unwrap();
    for (a, b) in spec.h().iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(want, [0.9375, 0.5625, 0.4375, 0.0625]);
}

#[test]
fn zbound_dominates_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..30 {
        let s = JointSource::random(FieldSpec::BINARY, 2, &mut rng);
        for len in [2usize, 4, 8] {
            let exact = exact_spectrum(&s, len).unwrap();
            let bound = zbound_spectrum(&s, len).unwrap();
            for (e, b) in exact.z().unwrap().iter().zip(bound.z().unwrap()) {
                assert!(*e <= b + 1e-12);
            }
            for (e, b) in exact.h().iter().zip(bound.h()) {
                assert!(*e <= b + 1e-12);
            }
        }
    }
}

#[test]
fn montecarlo_agrees_with_exact_within_sampling_error() {
    let s = JointSource::bsc_pair(0.11).unwrap();
    let exact = exact_spectrum(&s, 8).unwrap();
    let mc = montecarlo_spectrum(&s, 8, 200_000, 5).unwrap();
    for (a, b) in exact.h().iter().zip(mc.h()) {
        assert!((a - b).abs() < 0.01, "{a} vs {b}");
    }
    let again = montecarlo_spectrum(&s, 8, 200_000, 5).unwrap();
    assert_eq!(mc.h(), again.h());
}

#[test]
fn zbound_bec_is_exact() {
    // For erasures the pair recursion is exact: h = z.
    let s = JointSource::bec_pair(0.4).unwrap();
    let exact = exact_spectrum(&s, 8).unwrap();
    let bound = zbound_spectrum(&s, 8).unwrap();
    for (e, b) in exact.z().unwrap().iter().zip(bound.z().unwrap()) {
        assert!((e - b).abs() < 1e-12);
    }
    for (h, z) in exact.h().iter().zip(exact.z().unwrap()) {
        assert!((h - z).abs() < 1e-12);
    }
}

#[test]
fn set_selection_minimizes_the_complement_sum() {
    let s = JointSource::bernoulli(0.2).unwrap();
    let spec = zbound_spectrum(&s, 64).unwrap();
    let z = spec.z().unwrap();
    for rate in [0.1, 0.5, 0.75, 0.9] {
        let set = build_high_entropy_set(&spec, rate).unwrap();
        assert_eq!(set.size(), set_size(64, rate));
        let mut sorted = z.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let best: f64 = sorted[set.size()..].iter().sum();
        assert!((complement_sum(&z, set.indices()) - best).abs() < 1e-12);
    }
}

#[test]
fn single_step_entropies_for_bernoulli() {
    // N = 2 without side information: h_2 = H(X_2 | X_1 ⊕ X_2).
    let p: f64 = 0.11;
    let spec = exact_spectrum(&JointSource::bernoulli(p).unwrap(), 2).unwrap();
    let q = 2.0 * p * (1.0 - p);
    let h1 = binary_entropy_bits(q);
    let h2 = 2.0 * binary_entropy_bits(p) - h1;
    assert!((spec.h()[0] - h1).abs() < 1e-12);
    assert!((spec.h()[1] - h2).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conservation_for_random_sources(seed in any::<u64>(), ys in 1usize..=4, n in 1u32..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = JointSource::random(FieldSpec::BINARY, ys, &mut rng);
        let len = 1usize << n;
        let total: f64 = exact_spectrum(&s, len).unwrap().h().iter().sum();
        prop_assert!((total - len as f64 * s.conditional_entropy()).abs() < 1e-9);
    }

    #[test]
    fn zbound_h_brackets(seed in any::<u64>(), n in 1u32..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = JointSource::random(FieldSpec::BINARY, 2, &mut rng);
        let spec = zbound_spectrum(&s, 1usize << n).unwrap();
        for (h, z) in spec.h().iter().zip(spec.z().unwrap()) {
            prop_assert!((0.0..=1.0).contains(&z));
            prop_assert!((h - (1.0 + z).log2()).abs() < 1e-12);
        }
    }
}
