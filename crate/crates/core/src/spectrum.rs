//! Polarization spectra `{H(U_i|Y^N,U^{i-1}), Z(U_i|Y^N,U^{i-1})}` and
//! high-entropy index sets.
//!
//! Three estimators are offered:
//!
//! * [`exact_spectrum`] enumerates the joint law of `(U^N, Y^N)`; hard-capped
//!   at [`ENUMERATION_BUDGET_LOG2`] states.
//! * [`zbound_spectrum`] propagates `z ↦ 2z − z²` / `z ↦ z²` down the
//!   transform; every value is a certified upper bound (exact for erasures).
//! * [`montecarlo_spectrum`] averages genie-aided decoder posteriors. These are
//!   estimates only and are refused wherever a certificate is needed.
//!
//! The `−/+` sequence for output index `i` (1-based) is read from the bits of
//! `i − 1`, most significant first, `0 ↦ −` and `1 ↦ +`.

use crate::error::{PolarError, Result};
use crate::scdec::{BaseLlrs, LikelihoodState, L_MAX};
use crate::source::JointSource;
use crate::transform::{forward_in_place, log2_exact};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

/// Exact enumeration is limited to `2^24` joint states `(x^N, y^N)`.
pub const ENUMERATION_BUDGET_LOG2: u32 = 24;

/// Monte-Carlo samples are reduced in fixed-size chunks, in chunk order.
const MC_CHUNK: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpectrumMethod {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "zbound")]
    ZBound,
    #[serde(rename = "mc")]
    MonteCarlo,
}

impl SpectrumMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumMethod::Exact => "exact",
            SpectrumMethod::ZBound => "zbound",
            SpectrumMethod::MonteCarlo => "mc",
        }
    }

    /// Whether the z values are certified upper bounds (or exact).
    pub fn is_certified(&self) -> bool {
        !matches!(self, SpectrumMethod::MonteCarlo)
    }
}

impl fmt::Display for SpectrumMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SpectrumMethod {
    type Err = PolarError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SpectrumMethod::Exact),
            "zbound" => Ok(SpectrumMethod::ZBound),
            "mc" | "montecarlo" => Ok(SpectrumMethod::MonteCarlo),
            _ => Err(PolarError::InvalidParameter(format!(
                "unknown spectrum method '{s}'"
            ))),
        }
    }
}

/// Per-index entropy (base `q`) and Bhattacharyya value.
///
/// In `ZBound` mode `z` is an upper bound and `h` is the derived upper bound
/// `log₂(1 + z)`. `z` is `None` for non-binary alphabets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexRecord {
    pub h: f64,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarSpectrum {
    source: JointSource,
    method: SpectrumMethod,
    seed: Option<u64>,
    samples: Option<u64>,
    records: Vec<IndexRecord>,
}

impl PolarSpectrum {
    /// Assembles a spectrum from precomputed records.
    pub fn from_records(
        source: JointSource,
        method: SpectrumMethod,
        records: Vec<IndexRecord>,
        seed: Option<u64>,
        samples: Option<u64>,
    ) -> Result<Self> {
        log2_exact(records.len())?;
        for r in &records {
            if let Some(z) = r.z {
                if !(0.0..=1.0).contains(&z) {
                    return Err(PolarError::InvalidParameter(format!(
                        "z value {z} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self {
            source,
            method,
            seed,
            samples,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn method(&self) -> SpectrumMethod {
        self.method
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn samples(&self) -> Option<u64> {
        self.samples
    }

    pub fn source(&self) -> &JointSource {
        &self.source
    }

    pub fn records(&self) -> &[IndexRecord] {
        &self.records
    }

    pub fn h(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.h).collect()
    }

    /// All z values, or `None` if the alphabet is not binary.
    pub fn z(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.z).collect()
    }

    /// CSV with header `index,h,z,method`; 1-based indices, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,h,z,method\n");
        for (i, r) in self.records.iter().enumerate() {
            let z = r.z.map(|z| format!("{z:.16e}")).unwrap_or_default();
            out.push_str(&format!("{},{:.16e},{},{}\n", i + 1, r.h, z, self.method));
        }
        out
    }
}

fn enumeration_log2(s: &JointSource, len: usize) -> f64 {
    len as f64 * ((s.q() as f64) * (s.y_size() as f64)).log2()
}

/// Exact spectrum by enumerating every `(x^N, y^N)`.
pub fn exact_spectrum(s: &JointSource, len: usize) -> Result<PolarSpectrum> {
    let per_y = exact_prefix_statistics(s, len)?;
    let base = s.base();
    let binary = s.field().is_binary();

    // j[i] = H(U^i, Y^N) accumulated over y in a fixed order.
    let mut j = vec![0.0f64; len + 1];
    let mut z = vec![0.0f64; len];
    for stats in &per_y {
        j[0] += base.plogp(stats.p_y);
        for i in 0..len {
            j[i + 1] += stats.joint_entropy[i];
            z[i] += stats.z[i];
        }
    }
    let records = (0..len)
        .map(|i| IndexRecord {
            h: (j[i + 1] - j[i]).max(0.0),
            z: binary.then(|| z[i].clamp(0.0, 1.0)),
        })
        .collect();
    PolarSpectrum::from_records(s.clone(), SpectrumMethod::Exact, records, None, None)
}

struct PrefixStats {
    p_y: f64,
    /// `-Σ P(y, u^i) log P(y, u^i)` for i = 1..N (index i-1).
    joint_entropy: Vec<f64>,
    /// `2 Σ_{u^{i-1}} sqrt(P(y,u^{i-1},0) P(y,u^{i-1},1))` (binary only).
    z: Vec<f64>,
}

fn check_budget(s: &JointSource, len: usize) -> Result<u32> {
    let n = log2_exact(len)?;
    let needed = enumeration_log2(s, len);
    if needed > ENUMERATION_BUDGET_LOG2 as f64 + 1e-9 {
        return Err(PolarError::BudgetExceeded {
            needed,
            budget: ENUMERATION_BUDGET_LOG2,
        });
    }
    Ok(n)
}

/// Law of `U^N` jointly with each `y^N`, indexed by `u` with `u_1` as the most
/// significant base-`q` digit. Calls `visit(y_index, p_y, law)`.
fn for_each_side_block<T, F>(s: &JointSource, len: usize, visit: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64, &[f64]) -> T + Sync,
{
    check_budget(s, len)?;
    let q = s.q() as usize;
    let ys = s.y_size();
    let field = s.field();
    let y_blocks = ys.pow(len as u32);
    let x_blocks = q.pow(len as u32);

    Ok((0..y_blocks)
        .into_par_iter()
        .map(|y_index| {
            let mut y = vec![0usize; len];
            let mut rest = y_index;
            for slot in y.iter_mut().rev() {
                *slot = rest % ys;
                rest /= ys;
            }
            let mut law = vec![0.0f64; x_blocks];
            let mut buf = vec![0u8; len];
            for x_index in 0..x_blocks {
                let mut rest = x_index;
                let mut p = 1.0;
                for pos in (0..len).rev() {
                    let x = rest % q;
                    rest /= q;
                    buf[pos] = x as u8;
                    p *= s.prob(x, y[pos]);
                }
                if p == 0.0 {
                    continue;
                }
                forward_in_place(field, &mut buf).expect("power-of-two length");
                let u_index = buf.iter().fold(0usize, |acc, &d| acc * q + d as usize);
                law[u_index] = p;
            }
            let p_y: f64 = law.iter().sum();
            visit(p_y, &law)
        })
        .collect())
}

fn exact_prefix_statistics(s: &JointSource, len: usize) -> Result<Vec<PrefixStats>> {
    let q = s.q() as usize;
    let base = s.base();
    let binary = s.field().is_binary();
    for_each_side_block(s, len, |p_y, law| {
        let mut joint_entropy = vec![0.0; len];
        let mut z = vec![0.0; len];
        let mut level = law.to_vec();
        for i in (0..len).rev() {
            joint_entropy[i] = level.iter().map(|&p| base.plogp(p)).sum();
            if binary {
                z[i] = level
                    .chunks_exact(2)
                    .map(|c| 2.0 * (c[0] * c[1]).sqrt())
                    .sum();
            }
            level = level.chunks_exact(q).map(|c| c.iter().sum()).collect();
        }
        PrefixStats {
            p_y,
            joint_entropy,
            z,
        }
    })
}

/// Exact law of `U^N` (side information marginalized), indexed with `u_1`
/// as the most significant base-`q` digit.
pub fn exact_block_distribution(s: &JointSource, len: usize) -> Result<Vec<f64>> {
    let laws = for_each_side_block(s, len, |_, law| law.to_vec())?;
    let mut total = vec![0.0; laws.first().map_or(0, Vec::len)];
    for law in &laws {
        for (t, p) in total.iter_mut().zip(law) {
            *t += p;
        }
    }
    Ok(total)
}

/// Certified upper bounds on `Z(U_i|Y^N,U^{i-1})`.
pub fn zbound_spectrum(s: &JointSource, len: usize) -> Result<PolarSpectrum> {
    let z0 = s.bhattacharyya()?;
    let n = log2_exact(len)?;
    // Track (z, 1 - z) so both ends of [0, 1] keep full relative precision:
    //   minus: z' = z(1 + w), w' = w²;  plus: z' = z², w' = w(1 + z).
    let mut level = vec![(z0, 1.0 - z0)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &(z, w) in &level {
            next.push(((z * (1.0 + w)).min(1.0), w * w));
            next.push((z * z, (w * (1.0 + z)).min(1.0)));
        }
        level = next;
    }
    let records = level
        .into_iter()
        .map(|(z, _)| IndexRecord {
            h: z.ln_1p() / std::f64::consts::LN_2,
            z: Some(z.clamp(0.0, 1.0)),
        })
        .collect();
    PolarSpectrum::from_records(s.clone(), SpectrumMethod::ZBound, records, None, None)
}

/// Genie-aided Monte-Carlo estimates. Deterministic given `seed`, independent
/// of the thread count.
pub fn montecarlo_spectrum(
    s: &JointSource,
    len: usize,
    samples: u64,
    seed: u64,
) -> Result<PolarSpectrum> {
    if samples == 0 {
        return Err(PolarError::InvalidParameter(
            "samples must be at least 1".into(),
        ));
    }
    if !s.field().is_binary() {
        return Err(PolarError::UnsupportedAlphabet(s.q()));
    }
    log2_exact(len)?;
    let table = BaseLlrs::new(s)?;
    let chunks = samples.div_ceil(MC_CHUNK);

    let partials: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut h = vec![0.0; len];
            let mut z = vec![0.0; len];
            let mut state = LikelihoodState::with_len(len)?;
            let mut x = vec![0u8; len];
            let mut y = vec![0u32; len];
            let end = ((c + 1) * MC_CHUNK).min(samples);
            for k in c * MC_CHUNK..end {
                let mut rng = sample_rng(seed, k);
                for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
                    (*xi, *yi) = s.sample(&mut rng);
                }
                let mut u = x.clone();
                forward_in_place(s.field(), &mut u)?;
                state.reset(&table, &y)?;
                for i in 0..len {
                    let d = state.decide_next(i + 1, Some(u[i]))?;
                    let signed = if u[i] == 0 { d.llr } else { -d.llr };
                    h[i] += softplus(-signed) / std::f64::consts::LN_2;
                    z[i] += if d.llr.abs() >= L_MAX {
                        0.0
                    } else {
                        1.0 / (0.5 * d.llr).cosh()
                    };
                }
            }
            Ok((h, z))
        })
        .collect();

    let mut h = vec![0.0; len];
    let mut z = vec![0.0; len];
    for part in partials {
        let (ph, pz) = part?;
        for i in 0..len {
            h[i] += ph[i];
            z[i] += pz[i];
        }
    }
    let scale = 1.0 / samples as f64;
    let records = h
        .into_iter()
        .zip(z)
        .map(|(h, z)| IndexRecord {
            h: h * scale,
            z: Some((z * scale).clamp(0.0, 1.0)),
        })
        .collect();
    PolarSpectrum::from_records(
        s.clone(),
        SpectrumMethod::MonteCarlo,
        records,
        Some(seed),
        Some(samples),
    )
}

/// Independent generator for sample/trial `k` of a seeded run.
pub fn sample_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

#[inline]
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Spectrum computed by the named method.
pub fn compute_spectrum(
    s: &JointSource,
    len: usize,
    method: SpectrumMethod,
    samples: u64,
    seed: u64,
) -> Result<PolarSpectrum> {
    match method {
        SpectrumMethod::Exact => exact_spectrum(s, len),
        SpectrumMethod::ZBound => zbound_spectrum(s, len),
        SpectrumMethod::MonteCarlo => montecarlo_spectrum(s, len, samples, seed),
    }
}

/// Fractions of indices with `h > 1 − δ` (high), `h < δ` (low), and neither.
/// For `δ > 1/2` an index in both ranges counts as high.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fractions {
    pub high: f64,
    pub low: f64,
    pub mid: f64,
}

pub fn polarization_fractions(spec: &PolarSpectrum, delta: f64) -> Result<Fractions> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PolarError::InvalidParameter(format!(
            "delta {delta} outside (0, 1)"
        )));
    }
    let (mut high, mut low) = (0usize, 0usize);
    for r in spec.records() {
        if r.h > 1.0 - delta {
            high += 1;
        } else if r.h < delta {
            low += 1;
        }
    }
    let n = spec.len() as f64;
    Ok(Fractions {
        high: high as f64 / n,
        low: low as f64 / n,
        mid: (spec.len() - high - low) as f64 / n,
    })
}

/// `⌈N·R⌉`, ignoring floating-point noise just above an integer.
pub fn set_size(len: usize, rate: f64) -> usize {
    let t = len as f64 * rate;
    ((t - 1e-9).ceil().max(1.0) as usize).min(len)
}

/// The `⌈NR⌉` indices of largest `z`, plus the provenance both ends of a
/// codec must agree on.
#[derive(Debug, Clone, PartialEq)]
pub struct HighEntropySet {
    len: usize,
    rate: f64,
    /// 1-based, increasing.
    indices: Vec<usize>,
    mask: Vec<bool>,
    fingerprint: [u8; 8],
    method: SpectrumMethod,
    seed: Option<u64>,
    samples: Option<u64>,
    source: JointSource,
    z_values: Vec<f64>,
}

pub fn build_high_entropy_set(spec: &PolarSpectrum, rate: f64) -> Result<HighEntropySet> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(PolarError::InvalidRate(rate));
    }
    let z = spec
        .z()
        .ok_or_else(|| PolarError::UnsupportedAlphabet(spec.source().q()))?;
    let len = spec.len();
    let k = set_size(len, rate);
    let mut order: Vec<usize> = (0..len).collect();
    // Largest z first; ties go to the smaller index.
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    let mut indices: Vec<usize> = order[..k].iter().map(|i| i + 1).collect();
    indices.sort_unstable();
    HighEntropySet::assemble(
        len,
        rate,
        indices,
        spec.method(),
        spec.seed(),
        spec.samples(),
        spec.source().clone(),
        z,
    )
}

#[derive(Serialize, Deserialize)]
struct SetManifest {
    #[serde(rename = "N")]
    len: usize,
    #[serde(rename = "R")]
    rate: f64,
    indices: Vec<usize>,
    fingerprint: String,
    method: SpectrumMethod,
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    source: JointSource,
}

impl HighEntropySet {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        len: usize,
        rate: f64,
        indices: Vec<usize>,
        method: SpectrumMethod,
        seed: Option<u64>,
        samples: Option<u64>,
        source: JointSource,
        z_values: Vec<f64>,
    ) -> Result<Self> {
        let mut mask = vec![false; len];
        for &i in &indices {
            mask[i - 1] = true;
        }
        let fingerprint = fingerprint(&source, len, rate, method, seed, samples);
        Ok(Self {
            len,
            rate,
            indices,
            mask,
            fingerprint,
            method,
            seed,
            samples,
            source,
            z_values,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// 1-based selected indices, increasing.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `mask()[i]` tells whether 0-based position `i` is selected.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Number of selected positions.
    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn fingerprint(&self) -> [u8; 8] {
        self.fingerprint
    }

    pub fn fingerprint_hex(&self) -> String {
        hex(&self.fingerprint)
    }

    pub fn method(&self) -> SpectrumMethod {
        self.method
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn source(&self) -> &JointSource {
        &self.source
    }

    /// The z values used for selection; empty when loaded from a manifest.
    pub fn z_values(&self) -> &[f64] {
        &self.z_values
    }

    /// 0-based positions not in the set, increasing.
    pub fn complement(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| !m)
            .map(|(i, _)| i)
    }

    pub fn to_manifest_json(&self) -> String {
        let m = SetManifest {
            len: self.len,
            rate: self.rate,
            indices: self.indices.clone(),
            fingerprint: self.fingerprint_hex(),
            method: self.method,
            seed: self.seed,
            samples: self.samples,
            source: self.source.clone(),
        };
        let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Loads and validates a manifest, including its fingerprint.
    pub fn from_manifest_json(text: &str) -> Result<Self> {
        let m: SetManifest = serde_json::from_str(text)
            .map_err(|e| PolarError::Malformed(format!("set manifest: {e}")))?;
        log2_exact(m.len)?;
        if !(m.rate > 0.0 && m.rate <= 1.0) {
            return Err(PolarError::InvalidRate(m.rate));
        }
        if m.indices.len() != set_size(m.len, m.rate) {
            return Err(PolarError::Malformed(format!(
                "manifest lists {} indices, rate requires {}",
                m.indices.len(),
                set_size(m.len, m.rate)
            )));
        }
        let increasing = m.indices.windows(2).all(|w| w[0] < w[1]);
        if !increasing || m.indices.iter().any(|&i| i == 0 || i > m.len) {
            return Err(PolarError::Malformed(
                "indices must be increasing within [1, N]".into(),
            ));
        }
        let set = Self::assemble(
            m.len,
            m.rate,
            m.indices,
            m.method,
            m.seed,
            m.samples,
            m.source,
            Vec::new(),
        )?;
        if set.fingerprint_hex() != m.fingerprint {
            return Err(PolarError::FingerprintMismatch {
                block: m.fingerprint,
                set: set.fingerprint_hex(),
            });
        }
        Ok(set)
    }
}

fn fingerprint(
    source: &JointSource,
    len: usize,
    rate: f64,
    method: SpectrumMethod,
    seed: Option<u64>,
    samples: Option<u64>,
) -> [u8; 8] {
    let text = format!(
        "{}|N={len}|R={rate:.16e}|method={method}|seed={seed:?}|samples={samples:?}",
        source.canonical()
    );
    let digest = Sha256::digest(text.as_bytes());
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    out
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
