//! Brute-force reference implementations used by the integration tests.
//! Nothing here shares code with the library beyond the public types.
#![allow(dead_code)]

use polar_source::source::JointSource;
use polar_source::FieldSpec;

fn field_add(field: FieldSpec, a: u32, b: u32) -> u32 {
    match field {
        FieldSpec::Gf4 => a ^ b,
        FieldSpec::PrimeMod(q) => (a + b) % q as u32,
    }
}

fn reverse_bits(i: usize, n: u32) -> usize {
    let mut out = 0;
    for k in 0..n {
        if i >> k & 1 == 1 {
            out |= 1 << (n - 1 - k);
        }
    }
    out
}

/// `F^{⊗n} B_N` as an explicit 0/1 matrix.
pub fn generator_matrix(len: usize) -> Vec<Vec<u8>> {
    let n = len.trailing_zeros();
    let mut kron = vec![vec![1u8]];
    for _ in 0..n {
        let m = kron.len();
        let mut next = vec![vec![0u8; 2 * m]; 2 * m];
        // F = [[1, 0], [1, 1]]
        for (bi, bj, f) in [(0, 0, 1u8), (0, 1, 0), (1, 0, 1), (1, 1, 1)] {
            for i in 0..m {
                for j in 0..m {
                    next[bi * m + i][bj * m + j] = f * kron[i][j];
                }
            }
        }
        kron = next;
    }
    // Right-multiplying by B_N: column j of the product is column rev(j) of
    // the Kronecker power (B_N has a single 1 per column).
    let perm: Vec<usize> = (0..len).map(|j| reverse_bits(j, n)).collect();
    kron.iter()
        .map(|row| perm.iter().map(|&k| row[k]).collect())
        .collect()
}

/// `u = x · G` by explicit matrix multiplication over the field.
pub fn dense_transform(field: FieldSpec, g: &[Vec<u8>], x: &[u8]) -> Vec<u8> {
    let len = x.len();
    let mut u = vec![0u32; len];
    for (row, &xi) in g.iter().zip(x) {
        for (acc, &gij) in u.iter_mut().zip(row) {
            if gij == 1 {
                *acc = field_add(field, *acc, xi as u32);
            }
        }
    }
    u.into_iter().map(|v| v as u8).collect()
}

/// `u_j = Σ x_i` over all `i` whose bits contain those of `rev(j)`.
pub fn superset_transform(field: FieldSpec, x: &[u8]) -> Vec<u8> {
    let len = x.len();
    let n = len.trailing_zeros();
    let full = len - 1;
    (0..len)
        .map(|j| {
            let m = reverse_bits(j, n);
            let free = full & !m;
            let mut acc = 0u32;
            let mut s = free;
            loop {
                acc = field_add(field, acc, x[m | s] as u32);
                if s == 0 {
                    break;
                }
                s = (s - 1) & free;
            }
            acc as u8
        })
        .collect()
}

/// All binary `x^N` with their transforms, for exhaustive oracles.
pub struct BinaryTable {
    pub len: usize,
    pub u_of_x: Vec<Vec<u8>>,
}

impl BinaryTable {
    pub fn new(len: usize) -> Self {
        let g = generator_matrix(len);
        let u_of_x = (0..1usize << len)
            .map(|xi| dense_transform(FieldSpec::BINARY, &g, &index_bits(xi, len)))
            .collect();
        Self { len, u_of_x }
    }
}

/// Bits of `v` with position 0 as the most significant.
pub fn index_bits(v: usize, len: usize) -> Vec<u8> {
    (0..len).map(|k| (v >> (len - 1 - k) & 1) as u8).collect()
}

pub fn joint_prob(s: &JointSource, x: &[u8], y: &[u32]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| s.prob(a as usize, b as usize))
        .product()
}

/// `(P(U^{i-1} = prefix, U_i = 0, y), P(U^{i-1} = prefix, U_i = 1, y))`.
pub fn successive_map_masses(
    s: &JointSource,
    table: &BinaryTable,
    y: &[u32],
    prefix: &[u8],
) -> (f64, f64) {
    let i = prefix.len();
    let mut mass = [0.0f64; 2];
    for (xi, u) in table.u_of_x.iter().enumerate() {
        if u[..i] != *prefix {
            continue;
        }
        mass[u[i] as usize] += joint_prob(s, &index_bits(xi, table.len), y);
    }
    (mass[0], mass[1])
}

/// Natural-log ratio of the two masses (may be infinite).
pub fn oracle_llr(p0: f64, p1: f64) -> f64 {
    p0.ln() - p1.ln()
}

/// `H(U_i | Y^N, U^{i-1})` for every i, by grouping explicit
/// probabilities of `(y^N, u^i)` prefixes. Binary `X`, entropies in bits.
pub fn brute_binary_spectrum(s: &JointSource, len: usize) -> (Vec<f64>, Vec<f64>) {
    use std::collections::HashMap;
    let table = BinaryTable::new(len);
    let ys = s.y_size();
    let y_count = ys.pow(len as u32);
    // prefix_mass[i] maps (y index, u^i as integer) -> probability.
    let mut prefix_mass: Vec<HashMap<(usize, usize), f64>> = vec![HashMap::new(); len + 1];
    for yi in 0..y_count {
        let mut y = vec![0u32; len];
        let mut rest = yi;
        for slot in y.iter_mut().rev() {
            *slot = (rest % ys) as u32;
            rest /= ys;
        }
        for (xi, u) in table.u_of_x.iter().enumerate() {
            let p = joint_prob(s, &index_bits(xi, len), &y);
            if p == 0.0 {
                continue;
            }
            let mut key = 0usize;
            *prefix_mass[0].entry((yi, 0)).or_default() += p;
            for i in 0..len {
                key = key * 2 + u[i] as usize;
                *prefix_mass[i + 1].entry((yi, key)).or_default() += p;
            }
        }
    }
    let joint_h: Vec<f64> = prefix_mass
        .iter()
        .map(|m| {
            m.values()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.log2())
                .sum()
        })
        .collect();
    let h = (0..len).map(|i| joint_h[i + 1] - joint_h[i]).collect();
    let z = (0..len)
        .map(|i| {
            prefix_mass[i]
                .keys()
                .map(|&(yi, key)| {
                    let p0 = prefix_mass[i + 1]
                        .get(&(yi, key * 2))
                        .copied()
                        .unwrap_or(0.0);
                    let p1 = prefix_mass[i + 1]
                        .get(&(yi, key * 2 + 1))
                        .copied()
                        .unwrap_or(0.0);
                    2.0 * (p0 * p1).sqrt()
                })
                .sum()
        })
        .collect();
    (h, z)
}

pub fn binary_entropy_bits(p: f64) -> f64 {
    let t = |v: f64| if v <= 0.0 { 0.0 } else { -v * v.log2() };
    t(p) + t(1.0 - p)
}

/// Sum of `z` over the positions not in the 1-based index list.
pub fn complement_sum(z: &[f64], indices: &[usize]) -> f64 {
    let mut frozen = vec![false; z.len()];
    for &i in indices {
        frozen[i - 1] = true;
    }
    z.iter()
        .zip(&frozen)
        .filter(|(_, &f)| !f)
        .map(|(v, _)| v)
        .sum()
}

/// Upper one-sided slack of `k` binomial standard deviations.
pub fn binomial_slack(p: f64, trials: u64, k: f64) -> f64 {
    k * (p * (1.0 - p) / trials as f64).sqrt()
}
