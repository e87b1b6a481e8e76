//! The factorial block construction of a scrambled sequence and its
//! random-access indexer.
//!
//! The sequence starts with a fixed prefix `b` of length `k!`. Stage `m >= k`
//! occupies positions `[m!, (m+1)!)` and is laid out as
//!
//! ```text
//! A(gamma, m) = alpha[0 .. m!)                     (alpha copy,  m! bits)
//!               gamma_0^{(m-1)!} ... gamma_{m-1}^{(m-1)!}   (m! bits)
//!               (0 1)^{(m-2)!} (0011)^{(m-2)!} ... (0^{m-1} 1^{m-1})^{(m-2)!}   (m! bits)
//! Bhat(x_1, 4 m!, m-1) ... Bhat(x_{m-3}, 4 m! + (m-4) m!, m-1)   ((m-3) m! bits)
//! ```
//!
//! [`tau_bit`] resolves a position arithmetically through [`SegmentRef`];
//! [`tau_prefix`] concatenates the blocks in order and is the oracle it is
//! checked against.

use std::fmt;
use std::sync::Arc;

use crate::bitseq::{BitStream, Word};
use crate::error::{Error, Result};

/// Largest stage the indexer serves: `20!` still fits below `2^63`.
pub const MAX_STAGE: u32 = 19;
pub const DEFAULT_K: u32 = 5;
/// Materialisation guard for [`tau_prefix`].
pub const PREFIX_GUARD: usize = 10_000_000;
/// Materialisation guard for single blocks.
pub const BLOCK_GUARD: u64 = 1 << 26;

/// `n!` for `n <= 20`.
pub fn factorial(n: u32) -> Option<u64> {
    (1..=n as u64).try_fold(1u64, |acc, i| acc.checked_mul(i))
}

fn fact(n: u32) -> u64 {
    factorial(n).expect("factorial overflow")
}

/// Factorial table and stage boundaries of a construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauLayout {
    k: u32,
    max_stage: u32,
    fact: Vec<u64>,
}

impl TauLayout {
    pub fn new(k: u32, max_stage: u32) -> Result<Self> {
        if k < 5 {
            return Err(Error::Argument(format!("k must be at least 5, got {k}")));
        }
        if max_stage < k || max_stage > MAX_STAGE {
            return Err(Error::Argument(format!("max stage must lie in [{k}, {MAX_STAGE}], got {max_stage}")));
        }
        let fact = (0..=max_stage + 1).map(fact).collect();
        Ok(TauLayout { k, max_stage, fact })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn max_stage(&self) -> u32 {
        self.max_stage
    }

    pub fn factorial(&self, n: u32) -> u64 {
        self.fact[n as usize]
    }

    pub fn stage_start(&self, m: u32) -> u64 {
        self.fact[m as usize]
    }

    /// `m * m!`: the A block (3 m!) plus `m - 3` Bhat blocks of `m!` each.
    pub fn stage_len(&self, m: u32) -> u64 {
        m as u64 * self.fact[m as usize]
    }

    /// Length of everything up to and including stage `m`.
    pub fn cumulative_len(&self, m: u32) -> u64 {
        self.fact[self.k as usize] + (self.k..=m).map(|s| self.stage_len(s)).sum::<u64>()
    }

    /// One past the last index the indexer serves, `(M+1)!`.
    pub fn end(&self) -> u64 {
        self.fact[self.max_stage as usize + 1]
    }

    pub fn stage_of(&self, n: u64) -> Option<u32> {
        if n < self.stage_start(self.k) || n >= self.end() {
            return None;
        }
        (self.k..=self.max_stage).rev().find(|&m| self.stage_start(m) <= n)
    }

    /// The segment holding position `n`.
    pub fn locate(&self, n: u64) -> Result<SegmentRef> {
        if n < self.stage_start(self.k) {
            return Ok(SegmentRef::Prefix { index: n });
        }
        let m = self
            .stage_of(n)
            .ok_or_else(|| Error::Range(format!("position {n} lies beyond stage {} (limit {})", self.max_stage, self.end())))?;
        let f = self.factorial(m);
        let f1 = self.factorial(m - 1);
        let f2 = self.factorial(m - 2);
        let o = n - f;
        if o < f {
            return Ok(SegmentRef::AlphaCopy { m, index: o });
        }
        if o < 2 * f {
            return Ok(SegmentRef::GammaRepeat { m, s: ((o - f) / f1) as u32 });
        }
        if o < 3 * f {
            let u = o - 2 * f;
            // segment r starts at r (r - 1) (m-2)!
            let q = u / f2;
            let mut r = (((1.0 + 4.0 * q as f64).sqrt() + 1.0) / 2.0) as u64;
            while r * (r - 1) > q {
                r -= 1;
            }
            while (r + 1) * r <= q {
                r += 1;
            }
            let r = r.min(m as u64 - 1);
            return Ok(SegmentRef::PatternTail { m, r: r as u32, offset: u - r * (r - 1) * f2 });
        }
        let v = o - 3 * f;
        let i = (v / f) as u32 + 1;
        let w = v % f;
        let block_start = 4 * f + (i as u64 - 1) * f;
        let half = f / 2;
        // B(., ., m-1) consists of m blocks of (m-1)!/2 bits, each overlapping the previous source by one
        let h = f1 / 2;
        if w < half {
            let (rb, ww) = (w / h, w % h);
            Ok(SegmentRef::BhatFirstHalf { m, i, source: block_start + rb * (h - 1) + ww })
        } else {
            let w = w - half;
            let (rb, ww) = (w / h, w % h);
            Ok(SegmentRef::BhatSecondHalf { m, i, source: block_start + half + rb * (h - 1) + ww })
        }
    }
}

/// Parameters of the construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TauParams {
    prefix: Word,
    gamma: BitStream,
    family: Vec<BitStream>,
    alpha: BitStream,
    layout: TauLayout,
}

impl TauParams {
    /// `k`, `gamma`, all-zero prefix, Champernowne `alpha`, default family and
    /// max stage 19.
    pub fn new(k: u32, gamma: BitStream) -> Result<Self> {
        let layout = TauLayout::new(k, MAX_STAGE)?;
        let len = layout.factorial(k);
        if len > PREFIX_GUARD as u64 {
            return Err(Error::Range(format!("prefix length {k}! exceeds the materialisation guard")));
        }
        Ok(TauParams {
            prefix: Word::repeat(0, len as usize),
            gamma,
            family: Vec::new(),
            alpha: BitStream::Champernowne,
            layout,
        })
    }

    pub fn with_prefix(mut self, prefix: Word) -> Result<Self> {
        let want = self.layout.factorial(self.k());
        if prefix.len() as u64 != want {
            return Err(Error::Argument(format!("prefix must have length {}! = {want}, got {}", self.k(), prefix.len())));
        }
        self.prefix = prefix;
        Ok(self)
    }

    /// Explicit `x_1, x_2, ...`; later indices use the default rule.
    pub fn with_family(mut self, family: Vec<BitStream>) -> Self {
        self.family = family;
        self
    }

    pub fn with_alpha(mut self, alpha: BitStream) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_gamma(mut self, gamma: BitStream) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_max_stage(mut self, max_stage: u32) -> Result<Self> {
        self.layout = TauLayout::new(self.k(), max_stage)?;
        Ok(self)
    }

    pub fn k(&self) -> u32 {
        self.layout.k
    }

    pub fn max_stage(&self) -> u32 {
        self.layout.max_stage
    }

    pub fn layout(&self) -> &TauLayout {
        &self.layout
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn gamma(&self) -> &BitStream {
        &self.gamma
    }

    pub fn alpha(&self) -> &BitStream {
        &self.alpha
    }

    pub fn explicit_family(&self) -> &[BitStream] {
        &self.family
    }

    /// `x_i` for `i >= 1`: the explicit entry, else Champernowne shifted by `i`.
    pub fn family_member(&self, i: u32) -> BitStream {
        assert!(i >= 1, "family is 1-indexed");
        match self.family.get(i as usize - 1) {
            Some(x) => x.clone(),
            None => BitStream::Champernowne.shift(i as u64),
        }
    }

    /// True when `self` and `other` differ at most in `gamma`.
    pub fn same_except_gamma(&self, other: &TauParams) -> bool {
        self.layout == other.layout
            && self.prefix == other.prefix
            && self.alpha == other.alpha
            && self.family == other.family
    }

    pub fn stream(&self) -> BitStream {
        BitStream::Tau(Arc::new(self.clone()))
    }
}

/// Where a position of the sequence comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SegmentRef {
    Prefix { index: u64 },
    /// Bit `index` of `alpha`.
    AlphaCopy { m: u32, index: u64 },
    /// Bit `s` of `gamma`, repeated `(m-1)!` times.
    GammaRepeat { m: u32, s: u32 },
    /// Offset within the segment `(0^r 1^r)^{(m-2)!}`.
    PatternTail { m: u32, r: u32, offset: u64 },
    /// Bit `source` of `x_i`.
    BhatFirstHalf { m: u32, i: u32, source: u64 },
    /// Complement of bit `source` of `x_i`.
    BhatSecondHalf { m: u32, i: u32, source: u64 },
}

impl SegmentRef {
    pub fn resolve(&self, params: &TauParams) -> Result<u8> {
        match *self {
            SegmentRef::Prefix { index } => Ok(params.prefix.bit(index as usize)),
            SegmentRef::AlphaCopy { index, .. } => params.alpha.bit(index),
            SegmentRef::GammaRepeat { s, .. } => params.gamma.bit(s as u64),
            SegmentRef::PatternTail { r, offset, .. } => Ok(u8::from(offset % (2 * r as u64) >= r as u64)),
            SegmentRef::BhatFirstHalf { i, source, .. } => params.family_member(i).bit(source),
            SegmentRef::BhatSecondHalf { i, source, .. } => Ok(params.family_member(i).bit(source)? ^ 1),
        }
    }

    pub fn stage(&self) -> Option<u32> {
        match *self {
            SegmentRef::Prefix { .. } => None,
            SegmentRef::AlphaCopy { m, .. }
            | SegmentRef::GammaRepeat { m, .. }
            | SegmentRef::PatternTail { m, .. }
            | SegmentRef::BhatFirstHalf { m, .. }
            | SegmentRef::BhatSecondHalf { m, .. } => Some(m),
        }
    }
}

impl fmt::Display for SegmentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentRef::Prefix { index } => write!(f, "Prefix(index={index})"),
            SegmentRef::AlphaCopy { m, index } => write!(f, "AlphaCopy(m={m}, index={index})"),
            SegmentRef::GammaRepeat { m, s } => write!(f, "GammaRepeat(m={m}, s={s})"),
            SegmentRef::PatternTail { m, r, offset } => write!(f, "PatternTail(m={m}, r={r}, offset={offset})"),
            SegmentRef::BhatFirstHalf { m, i, source } => write!(f, "BhatFirstHalf(m={m}, i={i}, source={source})"),
            SegmentRef::BhatSecondHalf { m, i, source } => write!(f, "BhatSecondHalf(m={m}, i={i}, source={source})"),
        }
    }
}

pub fn tau_segment(params: &TauParams, n: u64) -> Result<SegmentRef> {
    params.layout.locate(n)
}

/// Bit `n` of the sequence, without materialising anything.
pub fn tau_bit(params: &TauParams, n: u64) -> Result<u8> {
    params.layout.locate(n)?.resolve(params)
}

fn check_block_len(len: u64) -> Result<usize> {
    if len > BLOCK_GUARD {
        return Err(Error::Range(format!("block of length {len} exceeds the materialisation guard")));
    }
    Ok(len as usize)
}

/// `g_i g_{i+1} ... g_j`.
pub fn block_c(g: &BitStream, i: u64, j: u64) -> Result<Word> {
    if i > j {
        return Err(Error::Argument(format!("C(g, {i}:{j}) needs i <= j")));
    }
    let len = check_block_len(j - i + 1)?;
    g.read_word(i, len)
}

/// `j + 1` blocks of `j!/2` bits of `g`; block `r` reads from
/// `i + r (j!/2 - 1)`, so consecutive blocks share one source index.
pub fn block_b(g: &BitStream, i: u64, j: u32) -> Result<Word> {
    if j < 2 {
        return Err(Error::Argument(format!("B(g, i, j) needs j >= 2, got {j}")));
    }
    let fj = factorial(j).ok_or_else(|| Error::Range(format!("{j}! overflows")))?;
    let h = fj / 2;
    let total = check_block_len((j as u64 + 1) * h)?;
    let mut out = Word::with_capacity(total);
    for r in 0..=j as u64 {
        out.append(&block_c(g, i + r * (h - 1), i + r * (h - 1) + h - 1)?);
    }
    Ok(out)
}

/// `B(g, i, j)` followed by the complement of `B(g, i + (j+1)!/2, j)`.
pub fn block_bhat(g: &BitStream, i: u64, j: u32) -> Result<Word> {
    let first = block_b(g, i, j)?;
    let second = block_b(g, i + first.len() as u64, j)?.complement();
    Ok(Word::concat([&first, &second]))
}

/// `A(g, m)`: `alpha[0..m!)`, then each `g_s` repeated `(m-1)!` times for
/// `s < m`, then `(0^r 1^r)^{(m-2)!}` for `r = 1 .. m-1`.
pub fn block_a(g: &BitStream, m: u32, alpha: &BitStream) -> Result<Word> {
    if m < 5 {
        return Err(Error::Argument(format!("A(g, m) needs m >= 5, got {m}")));
    }
    let f = factorial(m).ok_or_else(|| Error::Range(format!("{m}! overflows")))?;
    let total = check_block_len(3 * f)?;
    let f1 = fact(m - 1) as usize;
    let f2 = fact(m - 2) as usize;
    let mut out = Word::with_capacity(total);
    out.append(&alpha.read_word(0, f as usize)?);
    for s in 0..m as u64 {
        out.append(&Word::repeat(g.bit(s)?, f1));
    }
    for r in 1..m as usize {
        let mut pattern = Word::repeat(0, r);
        pattern.append(&Word::repeat(1, r));
        for _ in 0..f2 {
            out.append(&pattern);
        }
    }
    Ok(out)
}

/// The first `len` bits, built by concatenating the blocks in order.
pub fn tau_prefix(params: &TauParams, len: usize) -> Result<Word> {
    if len > PREFIX_GUARD {
        return Err(Error::Range(format!("prefix length {len} exceeds the guard {PREFIX_GUARD}")));
    }
    let mut out = params.prefix.clone();
    let mut m = params.k();
    while out.len() < len {
        if m > params.max_stage() {
            return Err(Error::Range(format!("prefix length {len} needs stages beyond {}", params.max_stage())));
        }
        let f = fact(m);
        out.append(&block_a(&params.gamma, m, &params.alpha)?);
        for i in 1..=m - 3 {
            if out.len() >= len {
                break;
            }
            let x = params.family_member(i);
            out.append(&block_bhat(&x, 4 * f + (i as u64 - 1) * f, m - 1)?);
        }
        m += 1;
    }
    out.truncate(len);
    Ok(out)
}
