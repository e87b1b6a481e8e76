//! Exact interval-map dynamics: piecewise-linear maps with rational nodes,
//! the logistic family, itineraries and backward refinement.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bitseq::{BitStream, Word};
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, serde_ratio};

/// Default cap on the denominator size of logistic iterates, in bits.
pub const DENOMINATOR_GUARD_BITS: u64 = 1 << 20;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A closed interval `[lo, hi]` with exact endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalInterval {
    #[serde(with = "serde_ratio")]
    pub lo: BigRational,
    #[serde(with = "serde_ratio")]
    pub hi: BigRational,
}

impl RationalInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo > hi {
            return Err(Error::Argument(format!(
                "empty interval [{}, {}]",
                format_rational(&lo),
                format_rational(&hi)
            )));
        }
        Ok(RationalInterval { lo, hi })
    }

    pub fn point(x: BigRational) -> Self {
        RationalInterval { lo: x.clone(), hi: x }
    }

    pub fn unit() -> Self {
        RationalInterval { lo: BigRational::zero(), hi: BigRational::one() }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(2.into())
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Strict interior membership, the open interval `(lo, hi)`.
    pub fn interior_contains(&self, x: &BigRational) -> bool {
        &self.lo < x && x < &self.hi
    }

    pub fn contains_interval(&self, other: &RationalInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &RationalInterval) -> Option<RationalInterval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo <= hi).then_some(RationalInterval { lo, hi })
    }

    pub fn hull(&self, other: &RationalInterval) -> RationalInterval {
        RationalInterval {
            lo: (&self.lo).min(&other.lo).clone(),
            hi: (&self.hi).max(&other.hi).clone(),
        }
    }
}

impl fmt::Display for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", format_rational(&self.lo), format_rational(&self.hi))
    }
}

/// Parses `a,b` or `[a,b]`.
impl FromStr for RationalInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches(['[', '(']).trim_end_matches([']', ')']);
        let (a, b) = t
            .split_once(',')
            .ok_or_else(|| Error::parse(0, format!("expected 'lo,hi', got '{s}'")))?;
        RationalInterval::new(parse_rational(a)?, parse_rational(b)?)
    }
}

type Frac = (i64, i64);

/// Continuous piecewise-linear map given by its nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PwlMap {
    xs: Vec<BigRational>,
    ys: Vec<BigRational>,
    slopes: Vec<BigRational>,
}

impl PwlMap {
    pub fn new(nodes: Vec<(BigRational, BigRational)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Argument("a piecewise-linear map needs at least two nodes".into()));
        }
        if nodes.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Argument("node abscissae must be strictly increasing".into()));
        }
        let (xs, ys): (Vec<_>, Vec<_>) = nodes.into_iter().unzip();
        let slopes = (0..xs.len() - 1)
            .map(|k| (&ys[k + 1] - &ys[k]) / (&xs[k + 1] - &xs[k]))
            .collect();
        Ok(PwlMap { xs, ys, slopes })
    }

    /// Nodes as `((x_num, x_den), (y_num, y_den))`.
    fn from_ints(nodes: &[(Frac, Frac)]) -> Self {
        PwlMap::new(nodes.iter().map(|&((a, b), (c, d))| (rat(a, b), rat(c, d))).collect()).expect("valid built-in")
    }

    /// `T(x) = 1 - |2x - 1|` on `[0, 1]`.
    pub fn tent() -> Self {
        Self::from_ints(&[((0, 1), (0, 1)), ((1, 2), (1, 1)), ((1, 1), (0, 1))])
    }

    /// `2x + 2` on `[-1, -1/2]`, `-2x` on `[-1/2, 0]`, `-x` on `[0, 1]`.
    pub fn g() -> Self {
        Self::from_ints(&[((-1, 1), (0, 1)), ((-1, 2), (1, 1)), ((0, 1), (0, 1)), ((1, 1), (-1, 1))])
    }

    /// `-x` on `[-1/2, 0]`, the tent map on `[0, 1]`.
    pub fn h() -> Self {
        Self::from_ints(&[((-1, 2), (1, 2)), ((0, 1), (0, 1)), ((1, 2), (1, 1)), ((1, 1), (0, 1))])
    }

    pub fn identity(lo: BigRational, hi: BigRational) -> Result<Self> {
        PwlMap::new(vec![(lo.clone(), lo), (hi.clone(), hi)])
    }

    pub fn nodes(&self) -> Vec<(BigRational, BigRational)> {
        self.xs.iter().cloned().zip(self.ys.iter().cloned()).collect()
    }

    pub fn xs(&self) -> &[BigRational] {
        &self.xs
    }

    pub fn ys(&self) -> &[BigRational] {
        &self.ys
    }

    pub fn piece_count(&self) -> usize {
        self.slopes.len()
    }

    /// Endpoints, value at the left endpoint and slope of piece `k`.
    pub fn piece(&self, k: usize) -> (RationalInterval, &BigRational, &BigRational) {
        (
            RationalInterval { lo: self.xs[k].clone(), hi: self.xs[k + 1].clone() },
            &self.ys[k],
            &self.slopes[k],
        )
    }

    pub fn domain(&self) -> RationalInterval {
        RationalInterval { lo: self.xs[0].clone(), hi: self.xs[self.xs.len() - 1].clone() }
    }

    /// Hull of the node values, which is the image of the whole domain.
    pub fn range(&self) -> RationalInterval {
        let lo = self.ys.iter().min().expect("nonempty").clone();
        let hi = self.ys.iter().max().expect("nonempty").clone();
        RationalInterval { lo, hi }
    }

    pub fn maps_into_self(&self) -> bool {
        self.domain().contains_interval(&self.range())
    }

    /// Index of the piece holding `x`; the left piece at interior nodes.
    pub fn piece_of(&self, x: &BigRational) -> Option<usize> {
        if x < &self.xs[0] || x > &self.xs[self.xs.len() - 1] {
            return None;
        }
        let k = self.xs.partition_point(|t| t < x);
        Some(k.saturating_sub(1).min(self.slopes.len() - 1))
    }

    pub fn eval(&self, x: &BigRational) -> Result<BigRational> {
        let k = self
            .piece_of(x)
            .ok_or_else(|| Error::Domain(format!("{} lies outside {}", format_rational(x), self.domain())))?;
        if x == &self.xs[k] {
            return Ok(self.ys[k].clone());
        }
        Ok(&self.ys[k] + &self.slopes[k] * (x - &self.xs[k]))
    }

    /// `x, f(x), ..., f^n(x)`.
    pub fn iterate(&self, x: &BigRational, n: usize) -> Result<Vec<BigRational>> {
        if !self.domain().contains(x) {
            return Err(Error::Escape { index: 0 });
        }
        let mut orbit = Vec::with_capacity(n + 1);
        orbit.push(x.clone());
        for t in 1..=n {
            let next = self.eval(&orbit[t - 1]).map_err(|_| Error::Escape { index: t })?;
            if !self.domain().contains(&next) {
                return Err(Error::Escape { index: t });
            }
            orbit.push(next);
        }
        Ok(orbit)
    }

    /// Exact image of `j`: extremes over the endpoint values and interior nodes.
    pub fn image(&self, j: &RationalInterval) -> Result<RationalInterval> {
        let a = self.eval(&j.lo)?;
        let b = self.eval(&j.hi)?;
        let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
        for (x, y) in self.xs.iter().zip(&self.ys) {
            if j.interior_contains(x) {
                if y < &lo {
                    lo = y.clone();
                }
                if y > &hi {
                    hi = y.clone();
                }
            }
        }
        Ok(RationalInterval { lo, hi })
    }

    /// Drops interior nodes where the slope does not change.
    pub fn normalized(&self) -> PwlMap {
        let mut nodes = vec![(self.xs[0].clone(), self.ys[0].clone())];
        for k in 1..self.xs.len() - 1 {
            if self.slopes[k - 1] != self.slopes[k] {
                nodes.push((self.xs[k].clone(), self.ys[k].clone()));
            }
        }
        nodes.push((self.xs[self.xs.len() - 1].clone(), self.ys[self.ys.len() - 1].clone()));
        PwlMap::new(nodes).expect("subset of valid nodes")
    }

    /// `self ∘ self`.
    pub fn square(&self) -> Result<PwlMap> {
        pwl_compose(self, self)
    }
}

impl fmt::Display for PwlMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pwl:")?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            write!(f, " ({},{})", format_rational(x), format_rational(y))?;
        }
        Ok(())
    }
}

/// `a ∘ b`. Nodes are the nodes of `b` plus every preimage under `b` of a
/// node of `a`.
pub fn pwl_compose(a: &PwlMap, b: &PwlMap) -> Result<PwlMap> {
    if !a.domain().contains_interval(&b.range()) {
        return Err(Error::Domain(format!(
            "range {} of the inner map is not inside the domain {} of the outer map",
            b.range(),
            a.domain()
        )));
    }
    let mut xs: Vec<BigRational> = b.xs.clone();
    for k in 0..b.piece_count() {
        let (y0, y1) = (&b.ys[k], &b.ys[k + 1]);
        if y0 == y1 {
            continue;
        }
        let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
        for node in &a.xs {
            if lo < node && node < hi {
                xs.push(&b.xs[k] + (node - y0) / &b.slopes[k]);
            }
        }
    }
    xs.sort();
    xs.dedup();
    let nodes = xs
        .into_iter()
        .map(|x| {
            let y = a.eval(&b.eval(&x)?)?;
            Ok((x, y))
        })
        .collect::<Result<Vec<_>>>()?;
    PwlMap::new(nodes)
}

/// One step of the tent map on binary expansions: doubling is a shift and
/// reflection complements the shifted tail.
pub fn tent_step_stream(s: &BitStream) -> Result<BitStream> {
    let tail = s.shift(1);
    Ok(if s.bit(0)? == 0 { tail } else { tail.complement() })
}

/// `sum s_i 2^-(i+1)` over the first `precision` bits.
pub fn stream_value(s: &BitStream, precision: u32) -> Result<BigRational> {
    let word = s.read_word(0, precision as usize)?;
    let bits: Vec<u8> = word.bits().to_vec();
    let num = if bits.is_empty() { BigUint::zero() } else { BigUint::from_radix_be(&bits, 2).expect("binary digits") };
    Ok(BigRational::new(BigInt::from(num), BigInt::one() << precision as usize))
}

pub fn logistic(mu: &BigRational, x: &BigRational) -> BigRational {
    mu * x * (BigRational::one() - x)
}

/// Exact image of `F_mu(x) = mu x (1 - x)` over `j`.
pub fn logistic_step_interval(mu: &BigRational, j: &RationalInterval) -> Result<RationalInterval> {
    if !mu.is_positive() {
        return Err(Error::Argument(format!("mu must be positive, got {}", format_rational(mu))));
    }
    let mut vals = vec![logistic(mu, &j.lo), logistic(mu, &j.hi)];
    let half = rat(1, 2);
    if j.contains(&half) {
        vals.push(logistic(mu, &half));
    }
    let lo = vals.iter().min().expect("nonempty").clone();
    let hi = vals.iter().max().expect("nonempty").clone();
    Ok(RationalInterval { lo, hi })
}

fn denominator_bits(x: &BigRational) -> u64 {
    x.denom().bits()
}

/// True iff `F_mu^i(x)` lies in `[0, 1]` for every `0 <= i <= n`.
pub fn lambda_membership_depth(mu: &BigRational, x: &BigRational, n: usize) -> Result<bool> {
    lambda_membership_depth_with_guard(mu, x, n, DENOMINATOR_GUARD_BITS)
}

pub fn lambda_membership_depth_with_guard(mu: &BigRational, x: &BigRational, n: usize, guard_bits: u64) -> Result<bool> {
    if mu < &BigRational::from_integer(4.into()) {
        return Err(Error::Argument(format!("mu must be at least 4, got {}", format_rational(mu))));
    }
    let unit = RationalInterval::unit();
    let mut cur = x.clone();
    for i in 0..=n {
        if !unit.contains(&cur) {
            return Ok(false);
        }
        if i == n {
            break;
        }
        let next = logistic(mu, &cur);
        if denominator_bits(&next) > guard_bits {
            return Err(Error::Precision { last_verified_depth: i });
        }
        cur = next;
    }
    Ok(true)
}

/// Symbolic coding of an orbit against a two-cell partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Itinerary {
    pub word: Word,
    pub partition: Vec<RationalInterval>,
    /// Steps whose iterate lies in both cells.
    pub boundary_flags: Vec<usize>,
}

/// Cell index of each of the first `n` iterates; boundary points go to the
/// lower cell and are flagged.
pub fn itinerary(map: &PwlMap, x: &BigRational, n: usize, partition: &[RationalInterval]) -> Result<Itinerary> {
    if partition.len() != 2 {
        return Err(Error::Argument(format!("binary itineraries need two cells, got {}", partition.len())));
    }
    let orbit = if n == 0 { Vec::new() } else { map.iterate(x, n - 1)? };
    let mut word = Word::with_capacity(n);
    let mut flags = Vec::new();
    for (t, p) in orbit.iter().enumerate() {
        let hits: Vec<usize> = (0..2).filter(|&c| partition[c].contains(p)).collect();
        match hits.as_slice() {
            [] => return Err(Error::Escape { index: t }),
            [c] => word.push(*c as u8),
            [c, _] => {
                word.push(*c as u8);
                flags.push(t);
            }
            _ => unreachable!(),
        }
    }
    Ok(Itinerary { word, partition: partition.to_vec(), boundary_flags: flags })
}

/// The two inverse branches used by [`point_from_itinerary`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Branches {
    /// `y -> y/2` and `y -> 1 - y/2`.
    Tent,
    /// `y -> (1 -+ sqrt(1 - 4y/mu)) / 2`.
    Logistic(BigRational),
}

impl Branches {
    /// The set every branch is defined on.
    fn codomain(&self) -> RationalInterval {
        match self {
            Branches::Tent => RationalInterval::unit(),
            Branches::Logistic(mu) => {
                let top = (mu / BigRational::from_integer(4.into())).min(BigRational::one());
                RationalInterval { lo: BigRational::zero(), hi: top }
            }
        }
    }

    /// Enclosure of the image of `j` under branch `symbol`, with square roots
    /// bounded at `bits` binary places.
    fn apply(&self, symbol: u8, j: &RationalInterval, bits: u32) -> RationalInterval {
        let half = rat(1, 2);
        match self {
            Branches::Tent => {
                if symbol == 0 {
                    RationalInterval { lo: &j.lo * &half, hi: &j.hi * &half }
                } else {
                    let one = BigRational::one();
                    RationalInterval { lo: &one - &j.hi * &half, hi: &one - &j.lo * &half }
                }
            }
            Branches::Logistic(mu) => {
                // r(y) = 1 - 4y/mu decreases in y
                let four = BigRational::from_integer(4.into());
                let r_at = |y: &BigRational| BigRational::one() - &four * y / mu;
                let (r_small, r_large) = (r_at(&j.hi), r_at(&j.lo));
                let (s_lo, _) = sqrt_enclosure(&r_small, bits);
                let (_, s_hi) = sqrt_enclosure(&r_large, bits);
                let one = BigRational::one();
                if symbol == 0 {
                    RationalInterval { lo: (&one - s_hi) * &half, hi: (&one - s_lo) * &half }
                } else {
                    RationalInterval { lo: (&one + s_lo) * &half, hi: (&one + s_hi) * &half }
                }
            }
        }
    }
}

/// Dyadic bounds `lo <= sqrt(r) <= hi` with `hi - lo <= 2^-bits`, exact when
/// `r` is the square of a dyadic with at most `bits` places.
pub fn sqrt_enclosure(r: &BigRational, bits: u32) -> (BigRational, BigRational) {
    if !r.is_positive() {
        return (BigRational::zero(), BigRational::zero());
    }
    let scale = BigInt::one() << (2 * bits as usize);
    let scaled = (r * BigRational::from_integer(scale)).floor().to_integer();
    let s = scaled.sqrt();
    let den = BigInt::one() << bits as usize;
    let lo = BigRational::new(s.clone(), den.clone());
    let exact = &s * &s == scaled && (r * BigRational::from_integer(BigInt::one() << (2 * bits as usize))).is_integer();
    let hi = if exact { lo.clone() } else { BigRational::new(s + 1, den) };
    (lo, hi)
}

/// Nested-interval enclosure of the points whose itinerary starts with `w`.
pub fn point_from_itinerary(branches: &Branches, w: &Word, tol: &BigRational) -> Result<RationalInterval> {
    if !tol.is_positive() {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    // enough binary places that rounding stays far below the tolerance
    let tol_bits = (tol.denom().bits() as i64 - tol.numer().bits() as i64).max(0) as u32;
    let bits = tol_bits + 2 * w.len() as u32 + 16;
    let dom = branches.codomain();
    let unit = RationalInterval::unit();
    let mut j = unit.clone();
    for (k, &symbol) in w.bits().iter().enumerate().rev() {
        let clipped = j
            .intersect(&dom)
            .ok_or_else(|| Error::NoPoint(format!("no point follows symbol {symbol} at position {k}")))?;
        j = branches.apply(symbol, &clipped, bits).intersect(&unit).ok_or_else(|| {
            Error::NoPoint(format!("refinement became empty at position {k}"))
        })?;
    }
    Ok(j)
}

/// A map given on the command line or in a config file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MapSpec {
    Pwl(PwlMap),
    Logistic(BigRational),
}

impl MapSpec {
    pub fn as_pwl(&self) -> Result<&PwlMap> {
        match self {
            MapSpec::Pwl(m) => Ok(m),
            MapSpec::Logistic(_) => Err(Error::Unsupported("operation needs a piecewise-linear map".into())),
        }
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSpec::Pwl(m) => write!(f, "{m}"),
            MapSpec::Logistic(mu) => write!(f, "logistic:{}", format_rational(mu)),
        }
    }
}

/// `tent | g | h | logistic:<mu> | pwl: (x0,y0) (x1,y1) ...`
impl FromStr for MapSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let s = text.trim();
        match s {
            "tent" => return Ok(MapSpec::Pwl(PwlMap::tent())),
            "g" => return Ok(MapSpec::Pwl(PwlMap::g())),
            "h" => return Ok(MapSpec::Pwl(PwlMap::h())),
            _ => {}
        }
        if let Some(mu) = s.strip_prefix("logistic:") {
            let mu = parse_rational(mu).map_err(|e| match e {
                Error::Parse { position, message } => Error::Parse { position: position + 9, message },
                other => other,
            })?;
            if !mu.is_positive() {
                return Err(Error::parse(9, "mu must be positive"));
            }
            return Ok(MapSpec::Logistic(mu));
        }
        let Some(body) = s.strip_prefix("pwl:") else {
            return Err(Error::parse(0, format!("unknown map '{s}'; expected tent, g, h, logistic:<mu> or pwl: (x,y) ...")));
        };
        let base = s.len() - body.len();
        let mut nodes = Vec::new();
        let mut rest = body;
        loop {
            let trimmed = rest.trim_start();
            let pos = base + body.len() - trimmed.len();
            if trimmed.is_empty() {
                break;
            }
            let inner = trimmed
                .strip_prefix('(')
                .ok_or_else(|| Error::parse(pos, "expected '('"))?;
            let close = inner.find(')').ok_or_else(|| Error::parse(pos, "unclosed '('"))?;
            let (xs, ys) = inner[..close]
                .split_once(',')
                .ok_or_else(|| Error::parse(pos + 1, "expected 'x,y'"))?;
            let x = parse_rational(xs).map_err(|_| Error::parse(pos + 1, format!("bad rational '{}'", xs.trim())))?;
            let y = parse_rational(ys)
                .map_err(|_| Error::parse(pos + 2 + xs.len(), format!("bad rational '{}'", ys.trim())))?;
            nodes.push((x, y));
            rest = &inner[close + 1..];
        }
        PwlMap::new(nodes).map(MapSpec::Pwl).map_err(|e| Error::parse(base, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn iv(a: &str, b: &str) -> RationalInterval {
        RationalInterval::new(q(a), q(b)).unwrap()
    }

    #[test]
    fn builtin_maps() {
        let t = PwlMap::tent();
        assert_eq!(t.eval(&q("1/2")).unwrap(), q("1"));
        assert_eq!(t.eval(&q("2/7")).unwrap(), q("4/7"));
        let g = PwlMap::g();
        assert_eq!(g.eval(&q("-2/3")).unwrap(), q("2/3"));
        assert_eq!(g.eval(&q("2/3")).unwrap(), q("-2/3"));
        assert_eq!(g.eval(&q("0")).unwrap(), q("0"));
        let h = PwlMap::h();
        assert_eq!(h.eval(&q("-1/4")).unwrap(), q("1/4"));
        assert_eq!(h.eval(&q("3/4")).unwrap(), q("1/2"));
        assert!(matches!(t.eval(&q("3/2")), Err(Error::Domain(_))));
    }

    #[test]
    fn orbits() {
        let t = PwlMap::tent();
        assert_eq!(t.iterate(&q("2/7"), 3).unwrap(), vec![q("2/7"), q("4/7"), q("6/7"), q("2/7")]);
        assert_eq!(t.iterate(&q("1/2"), 2).unwrap(), vec![q("1/2"), q("1"), q("0")]);
        let g = PwlMap::g();
        assert_eq!(
            g.iterate(&q("-2/3"), 4).unwrap(),
            vec![q("-2/3"), q("2/3"), q("-2/3"), q("2/3"), q("-2/3")]
        );
        let doubling = PwlMap::new(vec![(q("0"), q("0")), (q("1"), q("2"))]).unwrap();
        assert_eq!(doubling.iterate(&q("1/3"), 5), Err(Error::Escape { index: 2 }));
    }

    #[test]
    fn composition() {
        let t = PwlMap::tent();
        let tt = pwl_compose(&t, &t).unwrap();
        assert_eq!(tt.xs(), &[q("0"), q("1/4"), q("1/2"), q("3/4"), q("1")]);
        assert_eq!(tt.ys(), &[q("0"), q("1"), q("0"), q("1"), q("0")]);
        let g = PwlMap::g();
        let gg = pwl_compose(&g, &g).unwrap();
        for (x, y) in [("0", "0"), ("1/2", "1"), ("1", "0")] {
            assert_eq!(gg.eval(&q(x)).unwrap(), q(y));
        }
        let id = PwlMap::identity(q("0"), q("1")).unwrap();
        assert_eq!(pwl_compose(&id, &t).unwrap().normalized(), t);
        let shifted = PwlMap::new(vec![(q("2"), q("2")), (q("3"), q("3"))]).unwrap();
        assert!(matches!(pwl_compose(&shifted, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn images() {
        assert_eq!(PwlMap::tent().image(&iv("0", "1/2")).unwrap(), iv("0", "1"));
        let h = PwlMap::h();
        assert_eq!(h.image(&iv("-1/2", "0")).unwrap(), iv("0", "1/2"));
        assert_eq!(h.image(&iv("0", "1")).unwrap(), iv("0", "1"));
        let g = PwlMap::g();
        assert_eq!(g.image(&iv("0", "1")).unwrap(), iv("-1", "0"));
        assert_eq!(g.image(&iv("-1", "0")).unwrap(), iv("0", "1"));
        let x = q("1/3");
        assert_eq!(g.image(&RationalInterval::point(x.clone())).unwrap(), RationalInterval::point(g.eval(&x).unwrap()));
    }

    #[test]
    fn tent_on_streams() {
        let z = BitStream::zeros();
        assert_eq!(tent_step_stream(&z).unwrap().prefix(32).unwrap(), Word::repeat(0, 32));
        let s: BitStream = "ep::010".parse().unwrap();
        let mut cur = s.clone();
        for _ in 0..3 {
            cur = tent_step_stream(&cur).unwrap();
        }
        assert_eq!(cur.prefix(60).unwrap(), s.prefix(60).unwrap());
        let one: BitStream = "prefix(1,champ)".parse().unwrap();
        let out = tent_step_stream(&one).unwrap();
        assert_eq!(out.bit(0).unwrap(), 1 - one.bit(1).unwrap());
    }

    #[test]
    fn logistic_images_and_depth() {
        let four = q("4");
        assert_eq!(logistic_step_interval(&four, &iv("1/2", "1/2")).unwrap(), iv("1", "1"));
        assert_eq!(logistic_step_interval(&four, &iv("0", "1")).unwrap(), iv("0", "1"));
        assert_eq!(logistic_step_interval(&q("5"), &iv("1/2", "1/2")).unwrap(), iv("5/4", "5/4"));
        assert!(logistic_step_interval(&q("0"), &iv("0", "1")).is_err());

        assert!(!lambda_membership_depth(&q("5"), &q("1/2"), 1).unwrap());
        assert!(lambda_membership_depth(&q("5"), &q("1/2"), 0).unwrap());
        assert!(lambda_membership_depth(&q("4"), &q("1/3"), 12).unwrap());
        assert!(lambda_membership_depth(&q("5"), &q("0"), 500).unwrap());
        assert!(lambda_membership_depth(&q("3"), &q("0"), 1).is_err());
        assert_eq!(
            lambda_membership_depth_with_guard(&q("4"), &q("1/3"), 40, 64),
            Err(Error::Precision { last_verified_depth: 5 })
        );
    }

    #[test]
    fn itineraries() {
        let t = PwlMap::tent();
        let cells = [iv("0", "1/2"), iv("1/2", "1")];
        let it = itinerary(&t, &q("2/7"), 6, &cells).unwrap();
        assert_eq!(it.word, "011011".parse().unwrap());
        assert!(it.boundary_flags.is_empty());
        let it = itinerary(&t, &q("1/2"), 3, &cells).unwrap();
        assert_eq!(it.boundary_flags, vec![0]);
        assert_eq!(it.word, "010".parse().unwrap());
        let it = itinerary(&t, &q("0"), 8, &cells).unwrap();
        assert_eq!(it.word, Word::repeat(0, 8));
        assert!(itinerary(&t, &q("0"), 4, &cells[..1]).is_err());
    }

    #[test]
    fn backward_refinement() {
        let tol = q("1/1000000");
        let w = Word::repeat(0, 10);
        let j = point_from_itinerary(&Branches::Tent, &w, &tol).unwrap();
        assert_eq!(j, iv("0", "1/1024"));
        let w: Word = "011011011".parse().unwrap();
        let j = point_from_itinerary(&Branches::Tent, &w, &tol).unwrap();
        assert!(j.contains(&q("2/7")));
        assert_eq!(j.width(), q("1/512"));

        let mu = Branches::Logistic(q("5"));
        let j = point_from_itinerary(&mu, &Word::repeat(0, 12), &tol).unwrap();
        assert_eq!(j.lo, q("0"));
        assert!(j.hi < q("1/1000"));
        let j = point_from_itinerary(&Branches::Logistic(q("3")), &"1".parse().unwrap(), &tol);
        assert!(j.is_ok());
        let j = point_from_itinerary(&Branches::Logistic(q("1")), &"01".parse().unwrap(), &tol);
        assert!(matches!(j, Err(Error::NoPoint(_))));
    }

    #[test]
    fn sqrt_bounds() {
        let (lo, hi) = sqrt_enclosure(&q("1/4"), 10);
        assert_eq!((lo, hi), (q("1/2"), q("1/2")));
        let (lo, hi) = sqrt_enclosure(&q("2"), 20);
        assert!(&lo * &lo <= q("2") && &hi * &hi >= q("2"));
        assert_eq!(hi - lo, q("1/1048576"));
    }

    #[test]
    fn map_spec_parsing() {
        assert_eq!("tent".parse::<MapSpec>().unwrap(), MapSpec::Pwl(PwlMap::tent()));
        assert_eq!("logistic:9/2".parse::<MapSpec>().unwrap(), MapSpec::Logistic(q("9/2")));
        let m: MapSpec = "pwl: (0,0) (1/2,1) (1,0)".parse().unwrap();
        assert_eq!(m, MapSpec::Pwl(PwlMap::tent()));
        assert_eq!(m.to_string().parse::<MapSpec>().unwrap(), m);
        match "pwl: (0,0) (1/2,x)".parse::<MapSpec>() {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 16),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!("pwl: (0,0) (0,1)".parse::<MapSpec>(), Err(Error::Parse { .. })));
        assert!(matches!("wat".parse::<MapSpec>(), Err(Error::Parse { position: 0, .. })));
        assert!(matches!("logistic:-1".parse::<MapSpec>(), Err(Error::Parse { .. })));
    }

    #[test]
    fn interval_parsing() {
        assert_eq!("3/10,2/5".parse::<RationalInterval>().unwrap(), iv("3/10", "2/5"));
        assert_eq!("[0, 1]".parse::<RationalInterval>().unwrap(), iv("0", "1"));
        assert!("1,0".parse::<RationalInterval>().is_err());
    }
}
