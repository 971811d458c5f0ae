//! Memoryless sources `(X, Y) ~ P_{X,Y}` and their information measures.
//!
//! `X` lives in a field alphabet of size `q` and is the part being compressed;
//! `Y` is side information over `0..y_size`. `y_size == 1` means no side
//! information. Entropies of `X` are reported in base-`q` units so that every
//! conditional entropy lies in `[0, 1]` regardless of the alphabet.

use crate::error::{PolarError, Result};
use crate::gf::FieldSpec;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Tolerance on the total mass of a distribution before renormalization.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Logarithm base used for entropies of an alphabet of size `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntropyBase(pub u32);

impl EntropyBase {
    #[inline]
    pub fn log(&self, x: f64) -> f64 {
        x.ln() / (self.0 as f64).ln()
    }

    /// `-p log p` with `0 log 0 = 0`.
    #[inline]
    pub fn plogp(&self, p: f64) -> f64 {
        if p > 0.0 {
            -p * self.log(p)
        } else {
            0.0
        }
    }
}

/// On-disk form: `{"q": int, "y_size": int, "probs": row-major q × y_size}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SourceFile {
    q: u32,
    y_size: usize,
    probs: Vec<f64>,
}

/// A finite joint distribution of `(X, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SourceFile", into = "SourceFile")]
pub struct JointSource {
    field: FieldSpec,
    y_size: usize,
    /// `probs[x * y_size + y] = P(x, y)`.
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl TryFrom<SourceFile> for JointSource {
    type Error = PolarError;

    fn try_from(f: SourceFile) -> Result<Self> {
        JointSource::new(FieldSpec::from_size(f.q)?, f.y_size, f.probs)
    }
}

impl From<JointSource> for SourceFile {
    fn from(s: JointSource) -> Self {
        SourceFile {
            q: s.q(),
            y_size: s.y_size,
            probs: s.probs,
        }
    }
}

impl JointSource {
    /// Validates `probs` (row-major `q × y_size`) and renormalizes it.
    pub fn new(field: FieldSpec, y_size: usize, probs: Vec<f64>) -> Result<Self> {
        let q = field.size() as usize;
        if y_size == 0 {
            return Err(PolarError::InvalidDistribution(
                "y_size must be at least 1".into(),
            ));
        }
        if probs.len() != q * y_size {
            return Err(PolarError::InvalidDistribution(format!(
                "expected {} entries for a {q} x {y_size} table, got {}",
                q * y_size,
                probs.len()
            )));
        }
        let mut probs = validate_mass(probs)?;
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);

        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cdf.push(acc);
        }
        // Pin the last non-zero cell to 1 so that u ∈ [0, 1) always lands.
        if let Some(last) = probs.iter().rposition(|&p| p > 0.0) {
            for c in &mut cdf[last..] {
                *c = 1.0;
            }
        }
        Ok(Self {
            field,
            y_size,
            probs,
            cdf,
        })
    }

    /// Binary `X ~ Ber(p)`, no side information.
    pub fn bernoulli(p: f64) -> Result<Self> {
        check_probability(p)?;
        Self::new(FieldSpec::BINARY, 1, vec![1.0 - p, p])
    }

    /// `X ~ Ber(1/2)` observed through a BSC(p): `Y = X ⊕ Ber(p)`.
    pub fn bsc_pair(p: f64) -> Result<Self> {
        check_probability(p)?;
        Self::new(
            FieldSpec::BINARY,
            2,
            vec![0.5 * (1.0 - p), 0.5 * p, 0.5 * p, 0.5 * (1.0 - p)],
        )
    }

    /// `X ~ Ber(1/2)` observed through a BEC(eps); `Y = 2` is the erasure.
    pub fn bec_pair(eps: f64) -> Result<Self> {
        check_probability(eps)?;
        let keep = 0.5 * (1.0 - eps);
        let erase = 0.5 * eps;
        Self::new(
            FieldSpec::BINARY,
            3,
            vec![keep, 0.0, erase, 0.0, keep, erase],
        )
    }

    /// `Y ~ Ber(py)` and `X = Y ⊕ Ber(p)`.
    pub fn correlated(py: f64, p: f64) -> Result<Self> {
        check_probability(py)?;
        check_probability(p)?;
        Self::new(
            FieldSpec::BINARY,
            2,
            vec![
                (1.0 - py) * (1.0 - p),
                py * p,
                (1.0 - py) * p,
                py * (1.0 - p),
            ],
        )
    }

    /// Single-letter source with no side information over any supported alphabet.
    pub fn marginal(field: FieldSpec, dist: Vec<f64>) -> Result<Self> {
        Self::new(field, 1, dist)
    }

    /// The GF(4) source with `P(0) = P(2) = 1/2`.
    pub fn gf4_half() -> Self {
        Self::new(FieldSpec::Gf4, 1, vec![0.5, 0.0, 0.5, 0.0]).expect("valid table")
    }

    /// Parses `bernoulli(p)`, `bsc_pair(p)`, `bec_pair(eps)`, `correlated(py,p)`
    /// or `gf4_half`.
    pub fn from_preset(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "gf4_half" {
            return Ok(Self::gf4_half());
        }
        let bad = || PolarError::InvalidParameter(format!("unknown source preset '{spec}'"));
        let open = spec.find('(').ok_or_else(bad)?;
        if !spec.ends_with(')') {
            return Err(bad());
        }
        let name = &spec[..open];
        let args: Vec<f64> = spec[open + 1..spec.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (name, args.as_slice()) {
            ("bernoulli", [p]) => Self::bernoulli(*p),
            ("bsc_pair", [p]) => Self::bsc_pair(*p),
            ("bec_pair", [e]) => Self::bec_pair(*e),
            ("correlated", [py, p]) => Self::correlated(*py, *p),
            _ => Err(bad()),
        }
    }

    /// A random source with Dirichlet(1, …, 1) joint table.
    pub fn random<R: Rng + ?Sized>(field: FieldSpec, y_size: usize, rng: &mut R) -> Self {
        let cells = field.size() as usize * y_size;
        let probs: Vec<f64> = (0..cells).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let total: f64 = probs.iter().sum();
        Self::new(
            field,
            y_size,
            probs.into_iter().map(|p| p / total).collect(),
        )
        .expect("random table is valid")
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn q(&self) -> u32 {
        self.field.size()
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn has_side_information(&self) -> bool {
        self.y_size > 1
    }

    pub fn base(&self) -> EntropyBase {
        EntropyBase(self.q())
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.y_size + y]
    }

    /// Row-major `q × y_size` table.
    pub fn table(&self) -> &[f64] {
        &self.probs
    }

    pub fn p_y(&self, y: usize) -> f64 {
        (0..self.q() as usize).map(|x| self.prob(x, y)).sum()
    }

    pub fn p_x(&self) -> Vec<f64> {
        (0..self.q() as usize)
            .map(|x| (0..self.y_size).map(|y| self.prob(x, y)).sum())
            .collect()
    }

    /// `Y` as a source in its own right (no side information). Requires the
    /// `Y` alphabet to be a supported field size.
    pub fn side_marginal(&self) -> Result<JointSource> {
        let field = FieldSpec::from_size(self.y_size as u32)?;
        Self::new(field, 1, (0..self.y_size).map(|y| self.p_y(y)).collect())
    }

    /// `H(X|Y)` in base `q`.
    pub fn conditional_entropy(&self) -> f64 {
        let base = self.base();
        let mut h = 0.0;
        for y in 0..self.y_size {
            let py = self.p_y(y);
            if py <= 0.0 {
                continue;
            }
            for x in 0..self.q() as usize {
                let p = self.prob(x, y);
                if p > 0.0 {
                    h -= p * base.log(p / py);
                }
            }
        }
        h.max(0.0)
    }

    /// `H(Y)` in bits.
    pub fn side_entropy(&self) -> f64 {
        let py: Vec<f64> = (0..self.y_size).map(|y| self.p_y(y)).collect();
        shannon_entropy(&py)
    }

    /// `Z(X|Y) = 2 Σ_y P_Y(y) sqrt(P(0|y) P(1|y))`.
    pub fn bhattacharyya(&self) -> Result<f64> {
        if !self.field.is_binary() {
            return Err(PolarError::UnsupportedAlphabet(self.q()));
        }
        let z: f64 = (0..self.y_size)
            .map(|y| 2.0 * (self.prob(0, y) * self.prob(1, y)).sqrt())
            .sum();
        Ok(z.clamp(0.0, 1.0))
    }

    /// Draws one `(x, y)` pair by inverse CDF over the joint table.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u8, u32) {
        let u: f64 = rng.gen();
        let cell = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1);
        ((cell / self.y_size) as u8, (cell % self.y_size) as u32)
    }

    /// Canonical text form, stable across runs; used in fingerprints.
    pub fn canonical(&self) -> String {
        let probs: Vec<String> = self.probs.iter().map(|p| format!("{p:.16e}")).collect();
        format!("q={};y={};p=[{}]", self.q(), self.y_size, probs.join(","))
    }
}

impl fmt::Display for JointSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JointSource(q={}, y_size={})", self.q(), self.y_size)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(PolarError::InvalidParameter(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    Ok(())
}

fn validate_mass(probs: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(p) = probs
        .iter()
        .find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0)
    {
        return Err(PolarError::InvalidDistribution(format!(
            "entry {p} outside [0, 1]"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(PolarError::InvalidDistribution(format!(
            "total mass {total} differs from 1"
        )));
    }
    Ok(probs)
}

/// `ℋ(p) = -p log₂ p - (1-p) log₂(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_probability(p)?;
    let b = EntropyBase(2);
    Ok(b.plogp(p) + b.plogp(1.0 - p))
}

/// Shannon entropy in bits of an (assumed valid) distribution.
pub fn shannon_entropy(dist: &[f64]) -> f64 {
    let b = EntropyBase(2);
    dist.iter().map(|&p| b.plogp(p)).sum()
}

/// Rényi entropy of order `alpha` in bits.
pub fn renyi_entropy(dist: &[f64], alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 || alpha == 1.0 || !alpha.is_finite() {
        return Err(PolarError::InvalidParameter(format!(
            "Rényi order must be positive, finite and not 1, got {alpha}"
        )));
    }
    if dist.is_empty() {
        return Err(PolarError::InvalidDistribution("empty distribution".into()));
    }
    let dist = validate_mass(dist.to_vec())?;
    let s: f64 = dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p.powf(alpha))
        .sum();
    Ok(s.log2() / (1.0 - alpha))
}

/// The three quantities of `Z² ≤ H ≤ log₂(1 + Z)` for a binary source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZhReport {
    pub z_sq: f64,
    pub h: f64,
    pub log1pz: f64,
    /// Both inequalities hold within [`INEQUALITY_SLACK`].
    pub holds: bool,
    /// `X|Y` is deterministic for every `y`, or uniform for every `y`.
    pub tight: bool,
}

pub const INEQUALITY_SLACK: f64 = 1e-12;

pub fn check_z_h_inequalities(s: &JointSource) -> Result<ZhReport> {
    let z = s.bhattacharyya()?;
    let h = s.conditional_entropy();
    let z_sq = z * z;
    let log1pz = z.ln_1p() / std::f64::consts::LN_2;
    let holds = z_sq <= h + INEQUALITY_SLACK && h <= log1pz + INEQUALITY_SLACK;

    let support: Vec<usize> = (0..s.y_size()).filter(|&y| s.p_y(y) > 0.0).collect();
    let posterior0 = |y: usize| s.prob(0, y) / s.p_y(y);
    let all_deterministic = support.iter().all(|&y| {
        let p = posterior0(y);
        p <= INEQUALITY_SLACK || p >= 1.0 - INEQUALITY_SLACK
    });
    let all_uniform = support
        .iter()
        .all(|&y| (posterior0(y) - 0.5).abs() <= INEQUALITY_SLACK);
    Ok(ZhReport {
        z_sq,
        h,
        log1pz,
        holds,
        tight: all_deterministic || all_uniform,
    })
}
