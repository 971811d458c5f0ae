mod common;

use common::{index_bits, joint_prob, oracle_llr, successive_map_masses, BinaryTable};
use polar_source::scdec::{LikelihoodState, L_MAX};
use polar_source::source::JointSource;
use polar_source::FieldSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Agreement of a decoder llr with the oracle ratio: saturated values stand
/// for infinite ones, finite ones must agree to 1e-9.
fn llr_agrees(got: f64, want: f64) -> bool {
    if want.is_infinite() || want.abs() >= L_MAX {
        return got.abs() >= L_MAX && got.signum() == want.signum();
    }
    (got - want).abs() <= 1e-9 * want.abs().max(1.0)
}

/// Runs the decoder on `y` with the given genie bits (if any) and compares
/// every step with the exhaustive successive-MAP oracle.
fn check_against_oracle(s: &JointSource, table: &BinaryTable, y: &[u32], genie: Option<&[u8]>) {
    let mut st = LikelihoodState::new(s, y).unwrap();
    let mut prefix = Vec::new();
    for i in 0..table.len {
        let (p0, p1) = successive_map_masses(s, table, y, &prefix);
        assert!(p0 + p1 > 0.0, "prefix of zero probability");
        let want = oracle_llr(p0, p1);
        let d = st.decide_next(i + 1, genie.map(|g| g[i])).unwrap();
        assert!(
            llr_agrees(d.llr, want),
            "source {s} y={y:?} i={} llr {} vs oracle {}",
            i + 1,
            d.llr,
            want
        );
        if genie.is_none() {
            // Exact ties are below the oracle's own rounding; there the
            // decoder must apply its tie rule (0 on llr = 0).
            let map_bit = if want.abs() <= 1e-9 {
                (d.llr < 0.0) as u8
            } else if p0 >= p1 {
                0
            } else {
                1
            };
            assert_eq!(d.bit, map_bit, "source {s} y={y:?} i={}", i + 1);
        }
        prefix.push(d.bit);
    }
    assert!(st.finished());
}

fn all_y(len: usize, ys: usize) -> impl Iterator<Item = Vec<u32>> {
    (0..ys.pow(len as u32)).map(move |mut v| {
        let mut y = vec![0u32; len];
        for slot in y.iter_mut().rev() {
            *slot = (v % ys) as u32;
            v /= ys;
        }
        y
    })
}

fn small_sources(rng: &mut ChaCha8Rng) -> Vec<JointSource> {
    let mut out = vec![
        JointSource::bernoulli(0.11).unwrap(),
        JointSource::bernoulli(0.5).unwrap(),
        JointSource::bsc_pair(0.2).unwrap(),
        JointSource::correlated(0.3, 0.1).unwrap(),
    ];
    for ys in [1, 2] {
        for _ in 0..6 {
            out.push(JointSource::random(FieldSpec::BINARY, ys, rng));
        }
    }
    out
}

#[test]
fn map_decisions_match_oracle_for_every_observation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for len in [2usize, 4] {
        let table = BinaryTable::new(len);
        for s in small_sources(&mut rng) {
            for y in all_y(len, s.y_size()) {
                let py: f64 = (0..1usize << len)
                    .map(|xi| joint_prob(&s, &index_bits(xi, len), &y))
                    .sum();
                if py > 0.0 {
                    check_against_oracle(&s, &table, &y, None);
                }
            }
        }
    }
}

#[test]
fn random_configurations_at_length_eight() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let table = BinaryTable::new(8);
    for k in 0..200 {
        let s = JointSource::random(FieldSpec::BINARY, rng.gen_range(1..=2), &mut rng);
        let (x, y): (Vec<u8>, Vec<u32>) = (0..8).map(|_| s.sample(&mut rng)).unzip();
        if k % 2 == 0 {
            check_against_oracle(&s, &table, &y, None);
        } else {
            let mut u = x.clone();
            polar_source::transform::forward_in_place(FieldSpec::BINARY, &mut u).unwrap();
            check_against_oracle(&s, &table, &y, Some(&u));
        }
    }
}

#[test]
fn erasure_source_saturates_like_the_oracle() {
    let s = JointSource::bec_pair(0.5).unwrap();
    let table = BinaryTable::new(4);
    for y in all_y(4, 3) {
        let py: f64 = (0..16)
            .map(|xi| joint_prob(&s, &index_bits(xi, 4), &y))
            .sum();
        if py > 0.0 {
            check_against_oracle(&s, &table, &y, None);
        }
    }
}
