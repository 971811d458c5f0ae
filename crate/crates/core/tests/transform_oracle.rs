mod common;

use common::{dense_transform, generator_matrix, index_bits, superset_transform};
use polar_source::transform::{forward_in_place, inverse_in_place, polar_forward};
use polar_source::{FieldSpec, SymbolBlock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fields() -> Vec<FieldSpec> {
    vec![
        FieldSpec::BINARY,
        FieldSpec::prime(3).unwrap(),
        FieldSpec::prime(5).unwrap(),
        FieldSpec::Gf4,
    ]
}

fn digits(mut v: usize, q: usize, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut().rev() {
        *slot = (v % q) as u8;
        v /= q;
    }
    out
}

#[test]
fn generator_matches_small_closed_forms() {
    assert_eq!(generator_matrix(2), vec![vec![1, 0], vec![1, 1]]);
    assert_eq!(
        generator_matrix(4),
        vec![
            vec![1, 0, 0, 0],
            vec![1, 0, 1, 0],
            vec![1, 1, 0, 0],
            vec![1, 1, 1, 1],
        ]
    );
}

#[test]
fn butterfly_equals_dense_product_exhaustively() {
    for field in fields() {
        let q = field.size() as usize;
        for len in [1usize, 2, 4, 8] {
            if (q as f64).powi(len as i32) > 1e5 {
                continue;
            }
            let g = generator_matrix(len);
            for v in 0..q.pow(len as u32) {
                let x = digits(v, q, len);
                let want = dense_transform(field, &g, &x);
                let mut got = x.clone();
                forward_in_place(field, &mut got).unwrap();
                assert_eq!(got, want, "{field:?} N={len} x={x:?}");
            }
        }
    }
}

#[test]
fn superset_oracle_agrees_with_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for field in fields() {
        let q = field.size() as u8;
        for len in [2usize, 4, 8, 16, 32] {
            let g = generator_matrix(len);
            for _ in 0..20 {
                let x: Vec<u8> = (0..len).map(|_| rng.gen_range(0..q)).collect();
                assert_eq!(
                    superset_transform(field, &x),
                    dense_transform(field, &g, &x)
                );
            }
        }
    }
}

#[test]
fn butterfly_matches_oracle_on_random_inputs_up_to_4096() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for field in fields() {
        let q = field.size() as u8;
        for n in 4..=12u32 {
            let len = 1usize << n;
            let reps = if n >= 11 { 40 } else { 120 };
            for _ in 0..reps {
                let x: Vec<u8> = (0..len).map(|_| rng.gen_range(0..q)).collect();
                let mut got = x.clone();
                forward_in_place(field, &mut got).unwrap();
                assert_eq!(got, superset_transform(field, &x), "{field:?} N={len}");
                inverse_in_place(field, &mut got).unwrap();
                assert_eq!(got, x);
            }
        }
    }
}

#[test]
fn binary_transform_is_its_own_inverse() {
    for len in [2usize, 4, 8] {
        let g = generator_matrix(len);
        for v in 0..1usize << len {
            let x = index_bits(v, len);
            let u = dense_transform(FieldSpec::BINARY, &g, &x);
            assert_eq!(dense_transform(FieldSpec::BINARY, &g, &u), x);
        }
    }
}

#[test]
fn ternary_round_trip_on_random_blocks() {
    let f3 = FieldSpec::prime(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 0..=10u32 {
        let x: Vec<u8> = (0..1usize << n).map(|_| rng.gen_range(0..3)).collect();
        let b = SymbolBlock::new(f3, x.clone()).unwrap();
        let u = polar_forward(&b).unwrap();
        let back = polar_source::transform::polar_inverse(&u).unwrap();
        assert_eq!(back.as_slice(), &x[..]);
    }
}
