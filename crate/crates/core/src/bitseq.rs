//! Points of the binary shift space as rule-backed infinite sequences,
//! finite words, the shift map and the exact truncated metric
//! `d(x, y) = sum |x_i - y_i| / 2^(i+1)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::{all_ones, pow2, pow2_rational};
use crate::tau::{self, TauParams};

/// Largest index any stream answers for.
pub const MAX_INDEX: u64 = (1u64 << 63) - 1;

/// Precision used when callers do not ask for one.
pub const DEFAULT_PRECISION: u32 = 64;

/// A finite string of 0s and 1s.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word {
    bits: Vec<u8>,
}

impl Word {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Argument(format!("symbol {} at position {pos} is not a bit", bits[pos])));
        }
        Ok(Word { bits })
    }

    pub fn empty() -> Self {
        Word::default()
    }

    pub fn repeat(bit: u8, len: usize) -> Self {
        debug_assert!(bit <= 1);
        Word { bits: vec![bit & 1; len] }
    }

    pub fn with_capacity(cap: usize) -> Self {
        Word { bits: Vec::with_capacity(cap) }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Panics when `i` is out of bounds.
    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn get(&self, i: usize) -> Option<u8> {
        self.bits.get(i).copied()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn push(&mut self, bit: u8) {
        self.bits.push(bit & 1);
    }

    pub fn append(&mut self, other: &Word) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn truncate(&mut self, len: usize) {
        self.bits.truncate(len);
    }

    pub fn slice(&self, start: usize, end: usize) -> Word {
        Word { bits: self.bits[start..end].to_vec() }
    }

    /// Every bit flipped.
    pub fn complement(&self) -> Word {
        Word { bits: self.bits.iter().map(|b| b ^ 1).collect() }
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Word>) -> Word {
        let mut out = Word::empty();
        for p in parts {
            out.append(p);
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::parse(i, format!("'{c}' is not a bit"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(|bits| Word { bits })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

pub fn word_complement(word: &Word) -> Word {
    word.complement()
}

pub fn word_concat(parts: &[Word]) -> Word {
    Word::concat(parts)
}

/// An infinite binary sequence given by a rule; bits are computed on demand.
#[derive(Clone, Debug, PartialEq)]
pub enum BitStream {
    Constant(u8),
    EventuallyPeriodic { preperiod: Word, period: Word },
    /// Every binary word in length-lexicographic order, concatenated.
    Champernowne,
    Tau(Arc<TauParams>),
    PrefixThen { prefix: Word, tail: Arc<BitStream> },
    Complemented(Arc<BitStream>),
    Shifted { inner: Arc<BitStream>, offset: u64 },
    /// The cylinder word, then alternating copy and complement blocks of
    /// `base` with lengths 1, 1, 2, 2, 4, 4, ...
    Witness { base: Arc<BitStream>, cylinder: Word },
}

/// Eventual behaviour of a decidable rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    Constant(u8),
    Mixed,
}

impl BitStream {
    pub fn constant(bit: u8) -> Self {
        BitStream::Constant(bit & 1)
    }

    pub fn zeros() -> Self {
        BitStream::Constant(0)
    }

    pub fn champernowne() -> Self {
        BitStream::Champernowne
    }

    pub fn eventually_periodic(preperiod: Word, period: Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Argument("eventually periodic stream needs a nonempty period".into()));
        }
        Ok(BitStream::EventuallyPeriodic { preperiod, period })
    }

    pub fn prefix_then(prefix: Word, tail: BitStream) -> Self {
        if prefix.is_empty() {
            return tail;
        }
        BitStream::PrefixThen { prefix, tail: Arc::new(tail) }
    }

    pub fn tau(params: TauParams) -> Self {
        BitStream::Tau(Arc::new(params))
    }

    /// Bit `n`, for `0 <= n <= MAX_INDEX`.
    pub fn bit(&self, n: u64) -> Result<u8> {
        if n > MAX_INDEX {
            return Err(Error::Range(format!("index {n} exceeds the supported range 2^63 - 1")));
        }
        match self {
            BitStream::Constant(b) => Ok(*b),
            BitStream::EventuallyPeriodic { preperiod, period } => {
                let pre = preperiod.len() as u64;
                if n < pre {
                    Ok(preperiod.bit(n as usize))
                } else {
                    Ok(period.bit(((n - pre) % period.len() as u64) as usize))
                }
            }
            BitStream::Champernowne => Ok(champernowne_bit(n)),
            BitStream::Tau(params) => tau::tau_bit(params, n),
            BitStream::PrefixThen { prefix, tail } => {
                let p = prefix.len() as u64;
                if n < p {
                    Ok(prefix.bit(n as usize))
                } else {
                    tail.bit(n - p)
                }
            }
            BitStream::Complemented(inner) => Ok(inner.bit(n)? ^ 1),
            BitStream::Shifted { inner, offset } => {
                let idx = n
                    .checked_add(*offset)
                    .filter(|&i| i <= MAX_INDEX)
                    .ok_or_else(|| Error::Range(format!("index {n} + shift {offset} exceeds 2^63 - 1")))?;
                inner.bit(idx)
            }
            BitStream::Witness { base, cylinder } => {
                let p = cylinder.len() as u64;
                if n < p {
                    return Ok(cylinder.bit(n as usize));
                }
                let b = base.bit(n)?;
                Ok(if witness_block(n - p).complement { b ^ 1 } else { b })
            }
        }
    }

    /// Bits `start .. start + len` as a word.
    pub fn read_word(&self, start: u64, len: usize) -> Result<Word> {
        if len == 0 {
            return Ok(Word::empty());
        }
        start
            .checked_add(len as u64 - 1)
            .filter(|&i| i <= MAX_INDEX)
            .ok_or_else(|| Error::Range(format!("bits {start}..+{len} exceed 2^63 - 1")))?;
        match self {
            BitStream::Constant(b) => Ok(Word::repeat(*b, len)),
            BitStream::Champernowne => Ok(Word { bits: ChampernowneIter::starting_at(start).take(len).collect() }),
            BitStream::Complemented(inner) => Ok(inner.read_word(start, len)?.complement()),
            BitStream::Shifted { inner, offset } => {
                let s = start
                    .checked_add(*offset)
                    .ok_or_else(|| Error::Range(format!("index {start} + shift {offset} exceeds 2^63 - 1")))?;
                inner.read_word(s, len)
            }
            _ => {
                let mut w = Word::with_capacity(len);
                for i in 0..len as u64 {
                    w.push(self.bit(start + i)?);
                }
                Ok(w)
            }
        }
    }

    /// The first `len` bits.
    pub fn prefix(&self, len: usize) -> Result<Word> {
        self.read_word(0, len)
    }

    /// The shift map applied `n` times.
    pub fn shift(&self, n: u64) -> BitStream {
        if n == 0 {
            return self.clone();
        }
        match self {
            BitStream::Constant(_) => self.clone(),
            BitStream::EventuallyPeriodic { preperiod, period } => {
                let pre = preperiod.len() as u64;
                if n <= pre {
                    BitStream::EventuallyPeriodic {
                        preperiod: preperiod.slice(n as usize, pre as usize),
                        period: period.clone(),
                    }
                } else {
                    let r = ((n - pre) % period.len() as u64) as usize;
                    let rotated = Word::concat([&period.slice(r, period.len()), &period.slice(0, r)]);
                    BitStream::EventuallyPeriodic { preperiod: Word::empty(), period: rotated }
                }
            }
            BitStream::Complemented(inner) => inner.shift(n).complement(),
            BitStream::Shifted { inner, offset } => match offset.checked_add(n) {
                Some(total) => BitStream::Shifted { inner: inner.clone(), offset: total },
                None => BitStream::Shifted { inner: Arc::new(self.clone()), offset: n },
            },
            _ => BitStream::Shifted { inner: Arc::new(self.clone()), offset: n },
        }
    }

    /// The bitwise complement.
    pub fn complement(&self) -> BitStream {
        match self {
            BitStream::Constant(b) => BitStream::Constant(b ^ 1),
            BitStream::EventuallyPeriodic { preperiod, period } => BitStream::EventuallyPeriodic {
                preperiod: preperiod.complement(),
                period: period.complement(),
            },
            BitStream::Complemented(inner) => (**inner).clone(),
            _ => BitStream::Complemented(Arc::new(self.clone())),
        }
    }

    /// Eventual behaviour, for rules where it is decidable.
    pub fn tail(&self) -> Result<Tail> {
        match self {
            BitStream::Constant(b) => Ok(Tail::Constant(*b)),
            BitStream::EventuallyPeriodic { period, .. } => {
                let ones = period.count_ones();
                Ok(if ones == 0 {
                    Tail::Constant(0)
                } else if ones == period.len() {
                    Tail::Constant(1)
                } else {
                    Tail::Mixed
                })
            }
            BitStream::PrefixThen { tail, .. } => tail.tail(),
            BitStream::Shifted { inner, .. } => inner.tail(),
            BitStream::Complemented(inner) => Ok(match inner.tail()? {
                Tail::Constant(b) => Tail::Constant(b ^ 1),
                Tail::Mixed => Tail::Mixed,
            }),
            // alternating copy/complement blocks of a constant tail mix both symbols
            BitStream::Witness { base, .. } => match base.tail()? {
                Tail::Constant(_) => Ok(Tail::Mixed),
                Tail::Mixed => Err(Error::Unsupported(format!("eventual behaviour of {self} is not decidable"))),
            },
            BitStream::Champernowne | BitStream::Tau(_) => {
                Err(Error::Unsupported(format!("eventual behaviour of {self} is not decidable")))
            }
        }
    }

    /// True iff the stream has finitely many 1s.
    pub fn is_eventually_zero(&self) -> Result<bool> {
        Ok(self.tail()? == Tail::Constant(0))
    }
}

impl fmt::Display for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitStream::Constant(b) => write!(f, "const{b}"),
            BitStream::EventuallyPeriodic { preperiod, period } => write!(f, "ep:{preperiod}:{period}"),
            BitStream::Champernowne => f.write_str("champ"),
            BitStream::Tau(p) => write!(f, "tau(k={},gamma={})", p.k(), p.gamma()),
            BitStream::PrefixThen { prefix, tail } => write!(f, "prefix({prefix},{tail})"),
            BitStream::Complemented(inner) => write!(f, "not({inner})"),
            BitStream::Shifted { inner, offset } => write!(f, "shift({inner},{offset})"),
            BitStream::Witness { base, cylinder } => write!(f, "witness({base},{cylinder})"),
        }
    }
}

impl FromStr for BitStream {
    type Err = Error;

    /// Grammar: `const0 | const1 | champ | ep:<bits>:<bits> | not(S) |
    /// shift(S,n) | prefix(<bits>,S) | witness(S,<bits>)`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parser = StreamParser { src: s, pos: 0 };
        let stream = parser.stream()?;
        parser.skip_ws();
        if parser.pos != s.len() {
            return Err(Error::parse(parser.pos, "trailing input after stream"));
        }
        Ok(stream)
    }
}

struct StreamParser<'a> {
    src: &'a str,
    pos: usize,
}

impl StreamParser<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(' ') {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(Error::parse(self.pos, format!("expected '{token}'")))
        }
    }

    fn bits(&mut self) -> Result<Word> {
        let len = self.rest().chars().take_while(|c| *c == '0' || *c == '1').count();
        let w: Word = self.rest()[..len].parse()?;
        self.pos += len;
        Ok(w)
    }

    fn number(&mut self) -> Result<u64> {
        self.skip_ws();
        let len = self.rest().chars().take_while(|c| c.is_ascii_digit()).count();
        let n = self.rest()[..len]
            .parse()
            .map_err(|_| Error::parse(self.pos, "expected a nonnegative integer"))?;
        self.pos += len;
        Ok(n)
    }

    fn stream(&mut self) -> Result<BitStream> {
        self.skip_ws();
        let start = self.pos;
        if self.eat("const0") {
            Ok(BitStream::Constant(0))
        } else if self.eat("const1") {
            Ok(BitStream::Constant(1))
        } else if self.eat("champ") {
            Ok(BitStream::Champernowne)
        } else if self.eat("ep:") {
            let pre = self.bits()?;
            self.expect(":")?;
            let per = self.bits()?;
            BitStream::eventually_periodic(pre, per).map_err(|e| Error::parse(start, e.to_string()))
        } else if self.eat("not(") {
            let inner = self.stream()?;
            self.expect(")")?;
            Ok(inner.complement())
        } else if self.eat("shift(") {
            let inner = self.stream()?;
            self.expect(",")?;
            let n = self.number()?;
            self.expect(")")?;
            Ok(inner.shift(n))
        } else if self.eat("prefix(") {
            let w = self.bits()?;
            self.expect(",")?;
            let tail = self.stream()?;
            self.expect(")")?;
            Ok(BitStream::prefix_then(w, tail))
        } else if self.eat("witness(") {
            let base = self.stream()?;
            self.expect(",")?;
            let w = self.bits()?;
            self.expect(")")?;
            Ok(BitStream::Witness { base: Arc::new(base), cylinder: w })
        } else {
            Err(Error::parse(start, "unknown stream rule (expected const0, const1, champ, ep:<pre>:<per>, ...)"))
        }
    }
}

/// Position `(len, word_index, bit_in_word)` of index `n` in the
/// length-lexicographic concatenation of all binary words.
fn champernowne_locate(n: u64) -> (u32, u128, u32) {
    let mut rest = n as u128;
    let mut len = 1u32;
    loop {
        let block = (len as u128) << len;
        if rest < block {
            return (len, rest / len as u128, (rest % len as u128) as u32);
        }
        rest -= block;
        len += 1;
    }
}

fn champernowne_bit(n: u64) -> u8 {
    let (len, word, pos) = champernowne_locate(n);
    ((word >> (len - 1 - pos)) & 1) as u8
}

/// Index where the all-zero word of length `len >= 1` starts.
pub fn champernowne_zero_word_start(len: u32) -> u128 {
    // sum_{l < len} l 2^l = (len - 2) 2^len + 2
    ((len as i128 - 2) * (1i128 << len) + 2) as u128
}

/// Sequential reader over the Champernowne sequence.
struct ChampernowneIter {
    len: u32,
    word: u128,
    pos: u32,
}

impl ChampernowneIter {
    fn starting_at(n: u64) -> Self {
        let (len, word, pos) = champernowne_locate(n);
        ChampernowneIter { len, word, pos }
    }
}

impl Iterator for ChampernowneIter {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        let bit = ((self.word >> (self.len - 1 - self.pos)) & 1) as u8;
        self.pos += 1;
        if self.pos == self.len {
            self.pos = 0;
            self.word += 1;
            if self.word == 1u128 << self.len {
                self.word = 0;
                self.len += 1;
            }
        }
        Some(bit)
    }
}

/// Location of an offset (past the cylinder word) inside the witness block
/// schedule: block `t` has a copy half and a complement half of length `2^t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WitnessBlock {
    pub t: u32,
    pub offset: u64,
    pub complement: bool,
}

pub fn witness_block(u: u64) -> WitnessBlock {
    let t = (u + 2).ilog2() - 1;
    let start = (1u64 << (t + 1)) - 2;
    let v = u - start;
    let half = 1u64 << t;
    if v < half {
        WitnessBlock { t, offset: v, complement: false }
    } else {
        WitnessBlock { t, offset: v - half, complement: true }
    }
}

/// Start offset (past the cylinder word) of the copy half of block `t`.
pub fn witness_copy_start(t: u32) -> u64 {
    (1u64 << (t + 1)) - 2
}

/// Start offset (past the cylinder word) of the complement half of block `t`.
pub fn witness_complement_start(t: u32) -> u64 {
    witness_copy_start(t) + (1u64 << t)
}

/// Exact value of the metric truncated to its first `precision` terms.
///
/// The value is `numerator / 2^precision`; the true distance lies in
/// `[value, value + 2^-precision]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicDistance {
    pub numerator: BigUint,
    pub precision: u32,
}

impl DyadicDistance {
    pub fn value(&self) -> BigRational {
        BigRational::new(BigInt::from(self.numerator.clone()), BigInt::from(pow2(self.precision)))
    }

    pub fn error_bound(&self) -> BigRational {
        pow2_rational(-(self.precision as i64))
    }

    pub fn upper(&self) -> BigRational {
        self.value() + self.error_bound()
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// True when all of the first `precision` bits differ.
    pub fn all_differ(&self) -> bool {
        self.numerator == all_ones(self.precision)
    }
}

/// `numerator = sum_{i < N} |x_i - y_i| 2^(N - 1 - i)`.
pub fn truncated_distance(x: &BitStream, y: &BitStream, precision: u32) -> Result<DyadicDistance> {
    if precision == 0 {
        return Err(Error::Argument("precision must be at least 1".into()));
    }
    let a = x.read_word(0, precision as usize)?;
    let b = y.read_word(0, precision as usize)?;
    let diff: Vec<u8> = a.bits().iter().zip(b.bits()).map(|(p, q)| p ^ q).collect();
    let numerator = BigUint::from_radix_be(&diff, 2).unwrap_or_default();
    Ok(DyadicDistance { numerator, precision })
}
