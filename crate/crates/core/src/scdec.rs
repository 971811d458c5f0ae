//! Successive likelihood-ratio decoding of `u^N` given `y^N`.
//!
//! The recursion is the classical one: a size-`M` node splits `y` into its two
//! halves and `u` into odd/even positions; the first half sees
//! `u_odd ⊕ u_even`, the second half sees `u_even`. Each node is evaluated
//! lazily, caching the pair of child values between the odd and even step, so
//! a full pass costs exactly `N log₂ N` combine operations.
//!
//! All values are natural-log likelihood ratios `ln P(0|·)/P(1|·)`, clamped to
//! `±L_MAX`. A clamped value means "certain": it is treated as infinite by the
//! combine rules.

use crate::error::{PolarError, Result};
use crate::source::JointSource;

pub const L_MAX: f64 = 700.0;

#[inline]
pub fn saturate(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-L_MAX, L_MAX)
    }
}

#[inline]
fn certain(x: f64) -> bool {
    x.abs() >= L_MAX
}

/// `ln P(X=0|y) / P(X=1|y)` for a binary source.
pub fn base_llr(s: &JointSource, y: u32) -> Result<f64> {
    if !s.field().is_binary() {
        return Err(PolarError::UnsupportedAlphabet(s.q()));
    }
    let yi = y as usize;
    if yi >= s.y_size() {
        return Err(PolarError::InvalidObservation(y));
    }
    let (p0, p1) = (s.prob(0, yi), s.prob(1, yi));
    match (p0 > 0.0, p1 > 0.0) {
        (false, false) => Err(PolarError::InvalidObservation(y)),
        (true, false) => Ok(L_MAX),
        (false, true) => Ok(-L_MAX),
        (true, true) => Ok(saturate(p0.ln() - p1.ln())),
    }
}

/// `ln (e^{a+b} + 1) / (e^a + e^b)`, the odd-index step.
///
/// Uses `sign(a) sign(b) min(|a|,|b|) + ln(1+e^{-|a+b|}) - ln(1+e^{-|a-b|})`.
#[inline]
pub fn llr_combine_odd(a: f64, b: f64) -> f64 {
    if certain(a) {
        return saturate(a.signum() * b);
    }
    if certain(b) {
        return saturate(b.signum() * a);
    }
    let core = a.signum() * b.signum() * a.abs().min(b.abs());
    saturate(core + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p())
}

/// `b + a` if the preceding odd bit is 0, `b - a` if it is 1.
#[inline]
pub fn llr_combine_even(a: f64, b: f64, u_prev: u8) -> f64 {
    let a = if u_prev == 0 { a } else { -a };
    match (certain(a), certain(b)) {
        (true, false) => a,
        (false, true) => b,
        _ => saturate(a + b),
    }
}

/// Per-symbol base values of a binary source, indexed by side symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseLlrs {
    by_y: Vec<Option<f64>>,
}

impl BaseLlrs {
    pub fn new(s: &JointSource) -> Result<Self> {
        if !s.field().is_binary() {
            return Err(PolarError::UnsupportedAlphabet(s.q()));
        }
        let by_y = (0..s.y_size() as u32)
            .map(|y| base_llr(s, y).ok())
            .collect();
        Ok(Self { by_y })
    }

    pub fn get(&self, y: u32) -> Result<f64> {
        self.by_y
            .get(y as usize)
            .copied()
            .flatten()
            .ok_or(PolarError::InvalidObservation(y))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Node {
    step: u32,
    pending: u8,
    a: f64,
    b: f64,
}

/// One decision: the committed bit and the likelihood value it was made from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub bit: u8,
    pub llr: f64,
}

/// Workspace for decoding one block.
///
/// Nodes are stored heap-style: node 1 is the root, node `k` has children
/// `2k` and `2k+1`, and ids `N..2N` are the leaves (one per observation).
#[derive(Debug, Clone)]
pub struct LikelihoodState {
    len: usize,
    leaves: Vec<f64>,
    nodes: Vec<Node>,
    x_hat: Vec<u8>,
    next: usize,
    combines: u64,
}

impl LikelihoodState {
    pub fn new(s: &JointSource, y: &[u32]) -> Result<Self> {
        let table = BaseLlrs::new(s)?;
        let mut st = Self::with_len(y.len())?;
        st.reset(&table, y)?;
        Ok(st)
    }

    pub fn with_len(len: usize) -> Result<Self> {
        crate::transform::log2_exact(len)?;
        Ok(Self {
            len,
            leaves: vec![0.0; len],
            nodes: vec![Node::default(); len],
            x_hat: vec![0; len],
            next: 0,
            combines: 0,
        })
    }

    /// Loads a new observation block, clearing all decisions and counters.
    pub fn reset(&mut self, table: &BaseLlrs, y: &[u32]) -> Result<()> {
        if y.len() != self.len {
            return Err(PolarError::LengthMismatch {
                expected: self.len,
                got: y.len(),
            });
        }
        for (leaf, &sym) in self.leaves.iter_mut().zip(y) {
            *leaf = table.get(sym)?;
        }
        self.nodes.iter_mut().for_each(|n| *n = Node::default());
        self.next = 0;
        self.combines = 0;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of combine operations since the last reset.
    pub fn combines(&self) -> u64 {
        self.combines
    }

    /// Whether all `N` positions have been decided.
    pub fn finished(&self) -> bool {
        self.next == self.len
    }

    /// The re-encoded block at the leaves; equals `û · G_N` once finished.
    pub fn x_hat(&self) -> &[u8] {
        &self.x_hat
    }

    /// Decides `u_i` (1-based). `known` forces the bit; otherwise the bit is 0
    /// iff the log-likelihood ratio is `≥ 0`.
    pub fn decide_next(&mut self, i: usize, known: Option<u8>) -> Result<Decision> {
        if i != self.next + 1 || self.next >= self.len {
            return Err(PolarError::Protocol {
                expected: self.next + 1,
                got: i,
            });
        }
        if let Some(b) = known {
            if b > 1 {
                return Err(PolarError::SymbolOutOfRange {
                    symbol: b as u32,
                    q: 2,
                });
            }
        }
        let llr = self.node_llr(1);
        let bit = known.unwrap_or(if llr >= 0.0 { 0 } else { 1 });
        self.feed(1, bit);
        self.next += 1;
        Ok(Decision { bit, llr })
    }

    /// Runs a full pass. `known(i)` (0-based) supplies bits at fixed positions.
    pub fn decode_all<F>(&mut self, mut known: F) -> Result<Vec<u8>>
    where
        F: FnMut(usize) -> Option<u8>,
    {
        let mut u = Vec::with_capacity(self.len);
        for i in 0..self.len {
            u.push(self.decide_next(i + 1, known(i))?.bit);
        }
        Ok(u)
    }

    fn node_llr(&mut self, id: usize) -> f64 {
        if id >= self.len {
            return self.leaves[id - self.len];
        }
        let node = self.nodes[id];
        self.combines += 1;
        if node.step.is_multiple_of(2) {
            let a = self.node_llr(2 * id);
            let b = self.node_llr(2 * id + 1);
            let n = &mut self.nodes[id];
            n.a = a;
            n.b = b;
            llr_combine_odd(a, b)
        } else {
            llr_combine_even(node.a, node.b, node.pending)
        }
    }

    fn feed(&mut self, id: usize, bit: u8) {
        if id >= self.len {
            self.x_hat[id - self.len] = bit;
            return;
        }
        let node = self.nodes[id];
        if node.step.is_multiple_of(2) {
            self.nodes[id].pending = bit;
        } else {
            self.feed(2 * id, node.pending ^ bit);
            self.feed(2 * id + 1, bit);
        }
        self.nodes[id].step += 1;
    }
}
