//! Polar source coding with side information, and the two-encoder
//! Slepian-Wolf scheme built from it.
//!
//! The encoder keeps `u_E` where `u = x·G_N` and `E` is a high-entropy set;
//! it never looks at the side information. The decoder rebuilds the rest of
//! `u` by successive decisions given `y` and inverts the transform.

use crate::error::{PolarError, Result};
use crate::gf::FieldSpec;
use crate::scdec::{BaseLlrs, LikelihoodState};
use crate::source::JointSource;
use crate::spectrum::{
    build_high_entropy_set, compute_spectrum, hex, sample_rng, zbound_spectrum, HighEntropySet,
    PolarSpectrum, SpectrumMethod,
};
use crate::transform::{forward_in_place, inverse_in_place, SymbolBlock};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 4] = b"PLSC";
pub const VERSION_PLAIN: u8 = 1;
/// Same layout as version 1, followed by a CRC-32 of the packed source block.
pub const VERSION_CHECKSUM: u8 = 2;
const HEADER_LEN: usize = 4 + 1 + 1 + 8 + 4;

/// Container trailer: magic followed by the number of zero bits padded onto
/// the last block.
pub const TRAILER_MAGIC: &[u8; 4] = b"PLSE";

/// Packs bits most-significant-bit first.
pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b != 0 {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

pub fn unpack_bits(bytes: &[u8], count: usize) -> Vec<u8> {
    (0..count)
        .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1)
        .collect()
}

/// One compressed block: header plus `u_E` in increasing index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBlock {
    pub version: u8,
    /// `n` with `N = 2^n`.
    pub log_len: u8,
    pub fingerprint: [u8; 8],
    payload: Vec<u8>,
    checksum: Option<u32>,
}

impl CompressedBlock {
    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn payload_mut(&mut self) -> &mut [u8] {
        &mut self.payload
    }

    pub fn checksum(&self) -> Option<u32> {
        self.checksum
    }

    pub fn block_len(&self) -> usize {
        1usize << self.log_len
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len().div_ceil(8) + 4);
        out.extend_from_slice(MAGIC);
        out.push(self.version);
        out.push(self.log_len);
        out.extend_from_slice(&self.fingerprint);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&pack_bits(&self.payload));
        if let Some(c) = self.checksum {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    /// Parses one block from the front of `bytes`; returns it and the number
    /// of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < HEADER_LEN {
            return Err(PolarError::Malformed("truncated block header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(PolarError::Malformed("bad block magic".into()));
        }
        let version = bytes[4];
        if version != VERSION_PLAIN && version != VERSION_CHECKSUM {
            return Err(PolarError::Malformed(format!(
                "unsupported version {version}"
            )));
        }
        let log_len = bytes[5];
        if log_len >= usize::BITS as u8 {
            return Err(PolarError::Malformed(format!(
                "block exponent {log_len} too large"
            )));
        }
        let mut fingerprint = [0u8; 8];
        fingerprint.copy_from_slice(&bytes[6..14]);
        let count = u32::from_le_bytes(bytes[14..18].try_into().expect("4 bytes")) as usize;
        if count > 1usize << log_len {
            return Err(PolarError::Malformed("payload longer than block".into()));
        }
        let body = count.div_ceil(8);
        let extra = if version == VERSION_CHECKSUM { 4 } else { 0 };
        let total = HEADER_LEN + body + extra;
        if bytes.len() < total {
            return Err(PolarError::Malformed("truncated block payload".into()));
        }
        let payload = unpack_bits(&bytes[HEADER_LEN..HEADER_LEN + body], count);
        let checksum = (version == VERSION_CHECKSUM)
            .then(|| u32::from_le_bytes(bytes[total - 4..total].try_into().expect("4 bytes")));
        Ok((
            Self {
                version,
                log_len,
                fingerprint,
                payload,
                checksum,
            },
            total,
        ))
    }
}

fn require_binary_block(x: &SymbolBlock, set: &HighEntropySet) -> Result<()> {
    if !x.field().is_binary() {
        return Err(PolarError::UnsupportedAlphabet(x.field().size()));
    }
    if x.len() != set.len() {
        return Err(PolarError::LengthMismatch {
            expected: set.len(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Keeps `u_E` of `u = x·G_N`.
pub fn compress(x: &SymbolBlock, set: &HighEntropySet) -> Result<CompressedBlock> {
    require_binary_block(x, set)?;
    let mut u = x.as_slice().to_vec();
    forward_in_place(FieldSpec::BINARY, &mut u)?;
    let payload = set.indices().iter().map(|&i| u[i - 1]).collect();
    Ok(CompressedBlock {
        version: VERSION_PLAIN,
        log_len: x.log_len() as u8,
        fingerprint: set.fingerprint(),
        payload,
        checksum: None,
    })
}

/// As [`compress`], with a CRC-32 of the source block so decoding failures
/// are detected.
pub fn compress_with_checksum(x: &SymbolBlock, set: &HighEntropySet) -> Result<CompressedBlock> {
    let mut c = compress(x, set)?;
    c.version = VERSION_CHECKSUM;
    c.checksum = Some(crc32fast::hash(&pack_bits(x.as_slice())));
    Ok(c)
}

/// Reusable decoding workspace for one `(set, source)` pair.
#[derive(Debug, Clone)]
pub struct SourceDecoder {
    set: HighEntropySet,
    table: BaseLlrs,
    state: LikelihoodState,
}

impl SourceDecoder {
    pub fn new(set: &HighEntropySet, s: &JointSource) -> Result<Self> {
        Ok(Self {
            set: set.clone(),
            table: BaseLlrs::new(s)?,
            state: LikelihoodState::with_len(set.len())?,
        })
    }

    pub fn set(&self) -> &HighEntropySet {
        &self.set
    }

    /// Combine operations spent on the last block.
    pub fn last_combines(&self) -> u64 {
        self.state.combines()
    }

    /// Decodes `û` from the payload (bits of `u_E`) and `y`, returning `x̂`.
    pub fn decode_bits(&mut self, payload: &[u8], y: &[u32]) -> Result<Vec<u8>> {
        let mut u = self.decode_u(payload, y)?;
        inverse_in_place(FieldSpec::BINARY, &mut u)?;
        Ok(u)
    }

    /// The sequential estimate `û` itself.
    pub fn decode_u(&mut self, payload: &[u8], y: &[u32]) -> Result<Vec<u8>> {
        if payload.len() != self.set.size() {
            return Err(PolarError::LengthMismatch {
                expected: self.set.size(),
                got: payload.len(),
            });
        }
        self.state.reset(&self.table, y)?;
        let mask = self.set.mask();
        let mut next_payload = payload.iter();
        let mut u = Vec::with_capacity(mask.len());
        for (i, &selected) in mask.iter().enumerate() {
            let known = if selected {
                next_payload.next().copied()
            } else {
                None
            };
            u.push(self.state.decide_next(i + 1, known)?.bit);
        }
        Ok(u)
    }

    pub fn decode(&mut self, c: &CompressedBlock, y: &[u32]) -> Result<SymbolBlock> {
        if c.fingerprint != self.set.fingerprint() {
            return Err(PolarError::FingerprintMismatch {
                block: hex(&c.fingerprint),
                set: self.set.fingerprint_hex(),
            });
        }
        if c.block_len() != self.set.len() {
            return Err(PolarError::Malformed(format!(
                "block length {} does not match set length {}",
                c.block_len(),
                self.set.len()
            )));
        }
        let x = self.decode_bits(&c.payload, y)?;
        if let Some(expected) = c.checksum {
            if crc32fast::hash(&pack_bits(&x)) != expected {
                return Err(PolarError::ChecksumMismatch);
            }
        }
        SymbolBlock::binary(x)
    }
}

pub fn decompress(
    c: &CompressedBlock,
    y: &[u32],
    set: &HighEntropySet,
    s: &JointSource,
) -> Result<SymbolBlock> {
    SourceDecoder::new(set, s)?.decode(c, y)
}

/// Union bound `Σ_{i ∉ E} z_i` on the block error probability, clamped to 1.
pub fn error_bound(set: &HighEntropySet, spec: &PolarSpectrum) -> Result<f64> {
    if !spec.method().is_certified() {
        return Err(PolarError::Uncertified(spec.method().to_string()));
    }
    if spec.len() != set.len() {
        return Err(PolarError::LengthMismatch {
            expected: set.len(),
            got: spec.len(),
        });
    }
    let z = spec
        .z()
        .ok_or_else(|| PolarError::UnsupportedAlphabet(spec.source().q()))?;
    let sum: f64 = set.complement().map(|i| z[i]).sum();
    Ok(sum.clamp(0.0, 1.0))
}

/// Empirical block error rate of a seeded Monte-Carlo run, with the
/// certified bound for the same configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSimReport {
    pub trials: u64,
    pub block_errors: u64,
    pub bound: f64,
}

impl BlockSimReport {
    pub fn rate(&self) -> f64 {
        self.block_errors as f64 / self.trials as f64
    }
}

/// Draws `(x^N, y^N)` for trial `t` of a seeded run.
pub fn draw_block(s: &JointSource, len: usize, seed: u64, t: u64) -> (Vec<u8>, Vec<u32>) {
    let mut rng = sample_rng(seed, t);
    (0..len).map(|_| s.sample(&mut rng)).unzip()
}

/// Compress/decompress `trials` seeded blocks and count failures. The bound
/// comes from the Z-bound spectrum.
pub fn simulate_source(
    s: &JointSource,
    set: &HighEntropySet,
    trials: u64,
    seed: u64,
) -> Result<BlockSimReport> {
    let bound = error_bound(set, &zbound_spectrum(s, set.len())?)?;
    let decoder = SourceDecoder::new(set, s)?;
    let errors = (0..trials)
        .into_par_iter()
        .map_init(
            || decoder.clone(),
            |dec, t| -> Result<u64> {
                let (x, y) = draw_block(s, set.len(), seed, t);
                let block = SymbolBlock::binary(x)?;
                let c = compress(&block, set)?;
                let x_hat = dec.decode_bits(c.payload(), &y)?;
                Ok((x_hat != block.as_slice()) as u64)
            },
        )
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(BlockSimReport {
        trials,
        block_errors: errors,
        bound,
    })
}

/// Slepian-Wolf configuration for the corner point `(H(X|Y), H(Y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwConfig {
    joint: JointSource,
    marginal_y: JointSource,
    set_x: HighEntropySet,
    set_y: HighEntropySet,
}

#[derive(Serialize, Deserialize)]
struct SwManifest {
    #[serde(rename = "N")]
    len: usize,
    #[serde(rename = "R_x")]
    rate_x: f64,
    #[serde(rename = "R_y")]
    rate_y: f64,
    joint: JointSource,
    set_x: serde_json::Value,
    set_y: serde_json::Value,
}

impl SwConfig {
    /// Builds both high-entropy sets from spectra of the given method.
    pub fn new(
        joint: &JointSource,
        len: usize,
        rate_x: f64,
        rate_y: f64,
        method: SpectrumMethod,
        samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let marginal_y = Self::check_joint(joint)?;
        let spec_x = compute_spectrum(joint, len, method, samples, seed)?;
        let spec_y = compute_spectrum(&marginal_y, len, method, samples, seed)?;
        let set_x = build_high_entropy_set(&spec_x, rate_x)?;
        let set_y = build_high_entropy_set(&spec_y, rate_y)?;
        Self::from_sets(joint, set_x, set_y)
    }

    /// Assembles a configuration from existing sets, checking that they were
    /// built for this source and that both rates are admissible.
    pub fn from_sets(
        joint: &JointSource,
        set_x: HighEntropySet,
        set_y: HighEntropySet,
    ) -> Result<Self> {
        let marginal_y = Self::check_joint(joint)?;
        if set_x.len() != set_y.len() {
            return Err(PolarError::LengthMismatch {
                expected: set_x.len(),
                got: set_y.len(),
            });
        }
        if set_x.source() != joint || set_y.source() != &marginal_y {
            return Err(PolarError::InvalidParameter(
                "high-entropy sets were built for a different source".into(),
            ));
        }
        let h_xy = joint.conditional_entropy();
        let h_y = marginal_y.conditional_entropy();
        if set_x.rate() < h_xy - 1e-12 {
            return Err(PolarError::InvalidParameter(format!(
                "R_x = {} is below H(X|Y) = {h_xy}",
                set_x.rate()
            )));
        }
        if set_y.rate() < h_y - 1e-12 {
            return Err(PolarError::InvalidParameter(format!(
                "R_y = {} is below H(Y) = {h_y}",
                set_y.rate()
            )));
        }
        Ok(Self {
            joint: joint.clone(),
            marginal_y,
            set_x,
            set_y,
        })
    }

    fn check_joint(joint: &JointSource) -> Result<JointSource> {
        if !joint.field().is_binary() {
            return Err(PolarError::UnsupportedAlphabet(joint.q()));
        }
        if joint.y_size() != 2 {
            return Err(PolarError::UnsupportedAlphabet(joint.y_size() as u32));
        }
        joint.side_marginal()
    }

    pub fn len(&self) -> usize {
        self.set_x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn joint(&self) -> &JointSource {
        &self.joint
    }

    pub fn marginal_y(&self) -> &JointSource {
        &self.marginal_y
    }

    pub fn set_x(&self) -> &HighEntropySet {
        &self.set_x
    }

    pub fn set_y(&self) -> &HighEntropySet {
        &self.set_y
    }

    /// Payload bits per source symbol emitted by each encoder.
    pub fn rate_pair(&self) -> (f64, f64) {
        let n = self.len() as f64;
        (self.set_x.size() as f64 / n, self.set_y.size() as f64 / n)
    }

    /// Certified bounds for the Y stage and the X stage.
    pub fn certificates(&self) -> Result<(f64, f64)> {
        let by = error_bound(&self.set_y, &zbound_spectrum(&self.marginal_y, self.len())?)?;
        let bx = error_bound(&self.set_x, &zbound_spectrum(&self.joint, self.len())?)?;
        Ok((by, bx))
    }

    pub fn to_json(&self) -> String {
        let m = SwManifest {
            len: self.len(),
            rate_x: self.set_x.rate(),
            rate_y: self.set_y.rate(),
            joint: self.joint.clone(),
            set_x: serde_json::from_str(&self.set_x.to_manifest_json()).expect("valid json"),
            set_y: serde_json::from_str(&self.set_y.to_manifest_json()).expect("valid json"),
        };
        let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: SwManifest = serde_json::from_str(text)
            .map_err(|e| PolarError::Malformed(format!("SW manifest: {e}")))?;
        let set_x = HighEntropySet::from_manifest_json(&m.set_x.to_string())?;
        let set_y = HighEntropySet::from_manifest_json(&m.set_y.to_string())?;
        if set_x.len() != m.len || set_x.rate() != m.rate_x || set_y.rate() != m.rate_y {
            return Err(PolarError::Malformed(
                "SW manifest header disagrees with its sets".into(),
            ));
        }
        Self::from_sets(&m.joint, set_x, set_y)
    }
}

pub fn sw_encode_x(x: &SymbolBlock, cfg: &SwConfig) -> Result<CompressedBlock> {
    compress(x, &cfg.set_x)
}

pub fn sw_encode_y(y: &SymbolBlock, cfg: &SwConfig) -> Result<CompressedBlock> {
    compress(y, &cfg.set_y)
}

/// Decodes `ŷ` without side information, then `x̂` using `ŷ` in place of `y`.
pub fn sw_decode(
    cx: &CompressedBlock,
    cy: &CompressedBlock,
    cfg: &SwConfig,
) -> Result<(SymbolBlock, SymbolBlock)> {
    let trivial = vec![0u32; cfg.len()];
    let y_hat = decompress(cy, &trivial, &cfg.set_y, &cfg.marginal_y)?;
    let side: Vec<u32> = y_hat.as_slice().iter().map(|&b| b as u32).collect();
    let x_hat = decompress(cx, &side, &cfg.set_x, &cfg.joint)?;
    Ok((x_hat, y_hat))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwSimReport {
    pub trials: u64,
    /// Blocks where `ŷ ≠ y`.
    pub y_errors: u64,
    /// Blocks where `x̂ ≠ x` or `ŷ ≠ y`.
    pub joint_errors: u64,
    pub bound_y: f64,
    pub bound_x: f64,
}

impl SwSimReport {
    pub fn joint_rate(&self) -> f64 {
        self.joint_errors as f64 / self.trials as f64
    }

    /// Sum of the two stage certificates, clamped to 1.
    pub fn bound(&self) -> f64 {
        (self.bound_y + self.bound_x).min(1.0)
    }
}

pub fn simulate_sw(cfg: &SwConfig, trials: u64, seed: u64) -> Result<SwSimReport> {
    let (bound_y, bound_x) = cfg.certificates()?;
    let len = cfg.len();
    let dec_y = SourceDecoder::new(&cfg.set_y, &cfg.marginal_y)?;
    let dec_x = SourceDecoder::new(&cfg.set_x, &cfg.joint)?;
    let trivial = vec![0u32; len];
    let outcomes = (0..trials)
        .into_par_iter()
        .map_init(
            || (dec_y.clone(), dec_x.clone()),
            |(dy, dx), t| -> Result<(u64, u64)> {
                let (x, y) = draw_block(&cfg.joint, len, seed, t);
                let y_bits: Vec<u8> = y.iter().map(|&v| v as u8).collect();
                let xb = SymbolBlock::binary(x)?;
                let yb = SymbolBlock::binary(y_bits)?;
                let cx = sw_encode_x(&xb, cfg)?;
                let cy = sw_encode_y(&yb, cfg)?;
                let y_hat = dy.decode_bits(cy.payload(), &trivial)?;
                let side: Vec<u32> = y_hat.iter().map(|&b| b as u32).collect();
                let x_hat = dx.decode_bits(cx.payload(), &side)?;
                let y_err = y_hat != yb.as_slice();
                let x_err = x_hat != xb.as_slice();
                Ok((y_err as u64, (y_err || x_err) as u64))
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let (y_errors, joint_errors) = outcomes
        .into_iter()
        .fold((0, 0), |(a, b), (y, j)| (a + y, b + j));
    Ok(SwSimReport {
        trials,
        y_errors,
        joint_errors,
        bound_y,
        bound_x,
    })
}

/// `P'(y, x) = P(x, y)`: the same pair with the roles of `X` and `Y` exchanged.
/// Both alphabets must be binary.
pub fn swap_roles(joint: &JointSource) -> Result<JointSource> {
    if !joint.field().is_binary() || joint.y_size() != 2 {
        return Err(PolarError::UnsupportedAlphabet(joint.y_size() as u32));
    }
    let t = joint.table();
    JointSource::new(FieldSpec::BINARY, 2, vec![t[0], t[2], t[1], t[3]])
}

/// Time-sharing between the corner `(H(X|Y), H(Y))` (decode `Y` first) and
/// the corner `(H(X), H(Y|X))` (decode `X` first): out of every
/// `period` blocks, the first `first_corner_blocks` use the first corner.
#[derive(Debug, Clone)]
pub struct TimeSharing {
    y_first: SwConfig,
    x_first: SwConfig,
    first_corner_blocks: usize,
    period: usize,
}

/// Per-block payloads of a time-shared session: `(from X encoder, from Y encoder)`.
pub type SessionBlocks = Vec<(CompressedBlock, CompressedBlock)>;

impl TimeSharing {
    /// `x_first` must be built on [`swap_roles`] of `y_first`'s joint source.
    pub fn new(
        y_first: SwConfig,
        x_first: SwConfig,
        first_corner_blocks: usize,
        period: usize,
    ) -> Result<Self> {
        if period == 0 || first_corner_blocks > period {
            return Err(PolarError::InvalidParameter(format!(
                "time-sharing fraction {first_corner_blocks}/{period} is invalid"
            )));
        }
        if x_first.joint() != &swap_roles(y_first.joint())? || x_first.len() != y_first.len() {
            return Err(PolarError::InvalidParameter(
                "corner configurations describe different sources".into(),
            ));
        }
        Ok(Self {
            y_first,
            x_first,
            first_corner_blocks,
            period,
        })
    }

    fn uses_first(&self, block: usize) -> bool {
        block % self.period < self.first_corner_blocks
    }

    pub fn encode(&self, xs: &[SymbolBlock], ys: &[SymbolBlock]) -> Result<SessionBlocks> {
        if xs.len() != ys.len() {
            return Err(PolarError::LengthMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        xs.iter()
            .zip(ys)
            .enumerate()
            .map(|(k, (x, y))| {
                if self.uses_first(k) {
                    Ok((
                        sw_encode_x(x, &self.y_first)?,
                        sw_encode_y(y, &self.y_first)?,
                    ))
                } else {
                    // In the swapped configuration X plays the side-information role.
                    Ok((
                        sw_encode_y(x, &self.x_first)?,
                        sw_encode_x(y, &self.x_first)?,
                    ))
                }
            })
            .collect()
    }

    pub fn decode(&self, blocks: &SessionBlocks) -> Result<Vec<(SymbolBlock, SymbolBlock)>> {
        blocks
            .iter()
            .enumerate()
            .map(|(k, (cx, cy))| {
                if self.uses_first(k) {
                    sw_decode(cx, cy, &self.y_first)
                } else {
                    let (y_hat, x_hat) = sw_decode(cy, cx, &self.x_first)?;
                    Ok((x_hat, y_hat))
                }
            })
            .collect()
    }

    /// Nominal rate pair `(R_x, R_y)` over one full period.
    pub fn rate_pair(&self) -> (f64, f64) {
        let (ax, ay) = self.y_first.rate_pair();
        let (by, bx) = self.x_first.rate_pair();
        let lambda = self.first_corner_blocks as f64 / self.period as f64;
        (
            lambda * ax + (1.0 - lambda) * bx,
            lambda * ay + (1.0 - lambda) * by,
        )
    }
}

/// Serializes blocks followed by the pad trailer.
pub fn write_container(blocks: &[CompressedBlock], pad_bits: u32) -> Vec<u8> {
    let mut out = Vec::new();
    for b in blocks {
        out.extend_from_slice(&b.to_bytes());
    }
    out.extend_from_slice(TRAILER_MAGIC);
    out.extend_from_slice(&pad_bits.to_le_bytes());
    out
}

pub fn read_container(bytes: &[u8]) -> Result<(Vec<CompressedBlock>, u32)> {
    let mut blocks = Vec::new();
    let mut pos = 0;
    loop {
        let rest = &bytes[pos..];
        if rest.starts_with(TRAILER_MAGIC) {
            if rest.len() != 8 {
                return Err(PolarError::Malformed("bad container trailer".into()));
            }
            let pad = u32::from_le_bytes(rest[4..8].try_into().expect("4 bytes"));
            return Ok((blocks, pad));
        }
        if rest.is_empty() {
            return Err(PolarError::Malformed(
                "container ends without trailer".into(),
            ));
        }
        let (b, used) = CompressedBlock::from_bytes(rest)?;
        blocks.push(b);
        pos += used;
    }
}
