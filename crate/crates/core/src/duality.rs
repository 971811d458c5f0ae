//! Channel coding for binary-input memoryless channels through the
//! source/channel duality.
//!
//! With a uniform input `X` the pair `(X, Y)` is a source with
//! `H(X|Y) = 1 − I(W)`. A high-entropy set of rate `1 − R` for that source is
//! frozen to a pattern known to both ends; data occupies the complement, and
//! the source decoder recovers it.

use crate::codec::{error_bound, SourceDecoder};
use crate::error::{PolarError, Result};
use crate::gf::FieldSpec;
use crate::source::JointSource;
use crate::spectrum::{
    build_high_entropy_set, compute_spectrum, sample_rng, set_size, zbound_spectrum,
    HighEntropySet, SpectrumMethod,
};
use crate::transform::{forward_in_place, log2_exact, SymbolBlock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const ROW_TOLERANCE: f64 = 1e-12;

/// A binary-input discrete memoryless channel `W(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelModel {
    /// Outputs `{0, 1}`.
    Bsc { p: f64 },
    /// Outputs `{0, 1, 2}`, 2 being the erasure.
    Bec { eps: f64 },
    /// `rows[x][y] = W(y|x)`.
    Dmc { rows: [Vec<f64>; 2] },
}

impl ChannelModel {
    pub fn bsc(p: f64) -> Result<Self> {
        let c = ChannelModel::Bsc { p };
        c.validate()?;
        Ok(c)
    }

    pub fn bec(eps: f64) -> Result<Self> {
        let c = ChannelModel::Bec { eps };
        c.validate()?;
        Ok(c)
    }

    pub fn dmc(rows: [Vec<f64>; 2]) -> Result<Self> {
        let c = ChannelModel::Dmc { rows };
        c.validate()?;
        Ok(c)
    }

    pub fn noiseless() -> Self {
        ChannelModel::Bsc { p: 0.0 }
    }

    /// Parses `bsc:p`, `bec:eps` or `noiseless`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "noiseless" {
            return Ok(Self::noiseless());
        }
        let bad = || PolarError::InvalidParameter(format!("unknown channel '{spec}'"));
        let (kind, arg) = spec.split_once(':').ok_or_else(bad)?;
        let v: f64 = arg.trim().parse().map_err(|_| bad())?;
        match kind {
            "bsc" => Self::bsc(v),
            "bec" => Self::bec(v),
            _ => Err(bad()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(PolarError::InvalidParameter(format!(
                    "channel parameter {p} outside [0, 1]"
                )))
            }
        };
        match self {
            ChannelModel::Bsc { p } => prob(*p),
            ChannelModel::Bec { eps } => prob(*eps),
            ChannelModel::Dmc { rows } => {
                if rows[0].len() != rows[1].len() || rows[0].is_empty() {
                    return Err(PolarError::InvalidParameter(
                        "channel rows must be non-empty and of equal length".into(),
                    ));
                }
                for row in rows {
                    for &p in row {
                        prob(p)?;
                    }
                    let total: f64 = row.iter().sum();
                    if (total - 1.0).abs() > ROW_TOLERANCE {
                        return Err(PolarError::InvalidParameter(format!(
                            "channel row sums to {total}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn output_size(&self) -> usize {
        match self {
            ChannelModel::Bsc { .. } => 2,
            ChannelModel::Bec { .. } => 3,
            ChannelModel::Dmc { rows } => rows[0].len(),
        }
    }

    /// `W(y|x)`.
    pub fn transition(&self, x: u8, y: usize) -> f64 {
        match *self {
            ChannelModel::Bsc { p } => {
                if y == x as usize {
                    1.0 - p
                } else {
                    p
                }
            }
            ChannelModel::Bec { eps } => {
                if y == 2 {
                    eps
                } else if y == x as usize {
                    1.0 - eps
                } else {
                    0.0
                }
            }
            ChannelModel::Dmc { ref rows } => rows[x as usize][y],
        }
    }

    /// Inverse-CDF draw of the output for input `x`.
    pub fn sample_output<R: Rng + ?Sized>(&self, x: u8, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let last = (0..self.output_size())
            .rev()
            .find(|&y| self.transition(x, y) > 0.0)
            .unwrap_or(0);
        for y in 0..last {
            acc += self.transition(x, y);
            if u < acc {
                return y as u32;
            }
        }
        last as u32
    }
}

/// `P(x, y) = W(y|x) / 2`.
pub fn induced_source(w: &ChannelModel) -> Result<JointSource> {
    w.validate()?;
    let ys = w.output_size();
    let probs = (0..2u8)
        .flat_map(|x| (0..ys).map(move |y| (x, y)))
        .map(|(x, y)| 0.5 * w.transition(x, y))
        .collect();
    JointSource::new(FieldSpec::BINARY, ys, probs)
}

/// `I(X; Y)` under uniform input, in bits.
pub fn symmetric_capacity(w: &ChannelModel) -> Result<f64> {
    Ok(1.0 - induced_source(w)?.conditional_entropy())
}

/// A polar code for rate `R`: the frozen set is a high-entropy set of rate
/// `1 − R` for the induced source.
#[derive(Debug, Clone)]
pub struct DualityCode {
    channel: ChannelModel,
    source: JointSource,
    rate: f64,
    frozen: HighEntropySet,
    pattern: Vec<u8>,
    pattern_seed: u64,
}

#[derive(Serialize, Deserialize)]
struct DualityManifest {
    #[serde(rename = "N")]
    len: usize,
    #[serde(rename = "R")]
    rate: f64,
    frozen_indices: Vec<usize>,
    pattern_seed: u64,
    channel: ChannelModel,
    #[serde(default = "default_method")]
    method: SpectrumMethod,
}

fn default_method() -> SpectrumMethod {
    SpectrumMethod::ZBound
}

impl DualityCode {
    /// Builds the frozen set from a spectrum of the induced source and draws
    /// the frozen pattern from `pattern_seed`.
    pub fn new(
        channel: &ChannelModel,
        len: usize,
        rate: f64,
        pattern_seed: u64,
        method: SpectrumMethod,
        samples: u64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(PolarError::InvalidRate(rate));
        }
        let source = induced_source(channel)?;
        let spec = compute_spectrum(&source, len, method, samples, seed)?;
        let frozen = build_high_entropy_set(&spec, 1.0 - rate)?;
        Ok(Self::with_set(
            channel.clone(),
            source,
            rate,
            frozen,
            pattern_seed,
        ))
    }

    fn with_set(
        channel: ChannelModel,
        source: JointSource,
        rate: f64,
        frozen: HighEntropySet,
        pattern_seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(pattern_seed);
        let pattern = (0..frozen.size()).map(|_| rng.gen_range(0..2u8)).collect();
        Self {
            channel,
            source,
            rate,
            frozen,
            pattern,
            pattern_seed,
        }
    }

    /// Replaces the frozen pattern (e.g. all zeros).
    pub fn with_pattern(mut self, pattern: Vec<u8>) -> Result<Self> {
        if pattern.len() != self.frozen.size() {
            return Err(PolarError::LengthMismatch {
                expected: self.frozen.size(),
                got: pattern.len(),
            });
        }
        if pattern.iter().any(|&b| b > 1) {
            return Err(PolarError::InvalidParameter(
                "frozen pattern must be bits".into(),
            ));
        }
        self.pattern = pattern;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn source(&self) -> &JointSource {
        &self.source
    }

    pub fn frozen(&self) -> &HighEntropySet {
        &self.frozen
    }

    pub fn pattern(&self) -> &[u8] {
        &self.pattern
    }

    /// Number of data bits per block, `N − |E|`.
    pub fn data_len(&self) -> usize {
        self.len() - self.frozen.size()
    }

    /// Eq. union bound for this code, from the Z-bound spectrum.
    pub fn bound(&self) -> Result<f64> {
        error_bound(&self.frozen, &zbound_spectrum(&self.source, self.len())?)
    }

    pub fn to_json(&self) -> String {
        let m = DualityManifest {
            len: self.len(),
            rate: self.rate,
            frozen_indices: self.frozen.indices().to_vec(),
            pattern_seed: self.pattern_seed,
            channel: self.channel.clone(),
            method: self.frozen.method(),
        };
        let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DualityManifest = serde_json::from_str(text)
            .map_err(|e| PolarError::Malformed(format!("duality manifest: {e}")))?;
        m.channel.validate()?;
        log2_exact(m.len)?;
        if !(0.0..1.0).contains(&m.rate) {
            return Err(PolarError::InvalidRate(m.rate));
        }
        let expected = set_size(m.len, 1.0 - m.rate);
        let increasing = m.frozen_indices.windows(2).all(|w| w[0] < w[1]);
        if m.frozen_indices.len() != expected
            || !increasing
            || m.frozen_indices.iter().any(|&i| i == 0 || i > m.len)
        {
            return Err(PolarError::Malformed(
                "frozen indices inconsistent with N and R".into(),
            ));
        }
        let source = induced_source(&m.channel)?;
        let frozen = HighEntropySet::assemble(
            m.len,
            1.0 - m.rate,
            m.frozen_indices,
            m.method,
            None,
            None,
            source.clone(),
            Vec::new(),
        )?;
        Ok(Self::with_set(
            m.channel,
            source,
            m.rate,
            frozen,
            m.pattern_seed,
        ))
    }
}

/// Places the frozen pattern on `E`, data on the complement, and returns
/// `x = u·G_N`.
pub fn channel_encode(data: &[u8], code: &DualityCode) -> Result<SymbolBlock> {
    if data.len() != code.data_len() {
        return Err(PolarError::LengthMismatch {
            expected: code.data_len(),
            got: data.len(),
        });
    }
    if data.iter().any(|&b| b > 1) {
        return Err(PolarError::InvalidParameter("data must be bits".into()));
    }
    let mut u = vec![0u8; code.len()];
    for (&i, &b) in code.frozen.indices().iter().zip(&code.pattern) {
        u[i - 1] = b;
    }
    for (i, &b) in code.frozen.complement().zip(data) {
        u[i] = b;
    }
    forward_in_place(FieldSpec::BINARY, &mut u)?;
    SymbolBlock::binary(u)
}

/// Estimates the data bits from a received block.
pub fn channel_decode(y: &[u32], code: &DualityCode) -> Result<Vec<u8>> {
    let mut dec = SourceDecoder::new(&code.frozen, &code.source)?;
    decode_with(&mut dec, y, code)
}

fn decode_with(dec: &mut SourceDecoder, y: &[u32], code: &DualityCode) -> Result<Vec<u8>> {
    if y.len() != code.len() {
        return Err(PolarError::LengthMismatch {
            expected: code.len(),
            got: y.len(),
        });
    }
    if let Some(&bad) = y
        .iter()
        .find(|&&s| s as usize >= code.channel.output_size())
    {
        return Err(PolarError::InvalidObservation(bad));
    }
    let u = dec.decode_u(&code.pattern, y)?;
    Ok(code.frozen.complement().map(|i| u[i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    #[serde(rename = "N")]
    pub len: usize,
    pub rate: f64,
    pub trials: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    pub bound: f64,
}

/// Seeded end-to-end trials: random data → encode → channel → decode.
pub fn simulate(w: &ChannelModel, code: &DualityCode, trials: u64, seed: u64) -> Result<SimReport> {
    if trials == 0 {
        return Err(PolarError::InvalidParameter(
            "trials must be at least 1".into(),
        ));
    }
    let bound = code.bound()?;
    let decoder = SourceDecoder::new(&code.frozen, &code.source)?;
    let k = code.data_len();
    let outcomes = (0..trials)
        .into_par_iter()
        .map_init(
            || decoder.clone(),
            |dec, t| -> Result<u64> {
                let mut rng = sample_rng(seed, t);
                let data: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2u8)).collect();
                let x = channel_encode(&data, code)?;
                let y: Vec<u32> = x
                    .as_slice()
                    .iter()
                    .map(|&b| w.sample_output(b, &mut rng))
                    .collect();
                let est = decode_with(dec, &y, code)?;
                Ok(est.iter().zip(&data).filter(|(a, b)| a != b).count() as u64)
            },
        )
        .collect::<Result<Vec<u64>>>()?;
    let frame_errors = outcomes.iter().filter(|&&e| e > 0).count() as u64;
    let bit_errors: u64 = outcomes.iter().sum();
    let ber = if k == 0 {
        0.0
    } else {
        bit_errors as f64 / (trials as f64 * k as f64)
    };
    Ok(SimReport {
        len: code.len(),
        rate: code.rate,
        trials,
        frame_errors,
        bit_errors,
        fer: frame_errors as f64 / trials as f64,
        ber,
        bound,
    })
}
