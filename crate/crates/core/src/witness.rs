//! Orbit-pair distance series, the scheduled-time checks on the factorial
//! construction, constructive witnesses and the chaos-witness search.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitseq::{champernowne_zero_word_start, truncated_distance, BitStream, DyadicDistance, Word, DEFAULT_PRECISION};
use crate::error::{Error, Result};
use crate::interval::{logistic, MapSpec, PwlMap, RationalInterval, DENOMINATOR_GUARD_BITS};
use crate::rational::{format_rational, parse_rational, pow2, pow2_rational, serde_biguint, serde_ratio, to_decimal};
use crate::tau::{factorial, TauParams};

/// What a system's states are.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Bitstream,
    Rational,
    RationalInterval,
}

/// A deterministic dynamical system with an exact distance.
pub trait DynSystem: Sync {
    type State: Clone + Send + Sync + fmt::Debug;

    fn kind(&self) -> StateKind;

    fn step(&self, s: &Self::State) -> Result<Self::State>;

    /// Distance between two states; bitstream systems truncate at `precision` bits.
    fn dist(&self, a: &Self::State, b: &Self::State, precision: u32) -> Result<BigRational>;

    fn describe(&self) -> String;

    /// True when [`DynSystem::dist`] is a dyadic truncation at the given precision.
    fn truncates(&self) -> bool {
        false
    }

    /// `x, f(x), ..., f^{n-1}(x)`.
    fn orbit(&self, x: &Self::State, n: u64) -> Result<Vec<Self::State>> {
        let mut out = Vec::with_capacity(n as usize);
        if n == 0 {
            return Ok(out);
        }
        out.push(x.clone());
        for _ in 1..n {
            let next = self.step(out.last().expect("nonempty"))?;
            out.push(next);
        }
        Ok(out)
    }
}

/// The full shift on binary sequences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ShiftSpace;

impl DynSystem for ShiftSpace {
    type State = BitStream;

    fn kind(&self) -> StateKind {
        StateKind::Bitstream
    }

    fn step(&self, s: &BitStream) -> Result<BitStream> {
        Ok(s.shift(1))
    }

    fn dist(&self, a: &BitStream, b: &BitStream, precision: u32) -> Result<BigRational> {
        Ok(truncated_distance(a, b, precision)?.value())
    }

    fn describe(&self) -> String {
        "shift".into()
    }

    fn truncates(&self) -> bool {
        true
    }

    /// Shifts by `n` directly instead of stepping.
    fn orbit(&self, x: &BitStream, n: u64) -> Result<Vec<BitStream>> {
        Ok((0..n).map(|k| x.shift(k)).collect())
    }
}

impl DynSystem for PwlMap {
    type State = BigRational;

    fn kind(&self) -> StateKind {
        StateKind::Rational
    }

    fn step(&self, s: &BigRational) -> Result<BigRational> {
        self.eval(s)
    }

    fn dist(&self, a: &BigRational, b: &BigRational, _precision: u32) -> Result<BigRational> {
        Ok((a - b).abs())
    }

    fn describe(&self) -> String {
        self.to_string()
    }

    fn orbit(&self, x: &BigRational, n: u64) -> Result<Vec<BigRational>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        self.iterate(x, n as usize - 1)
    }
}

/// `F_mu(x) = mu x (1 - x)` on exact rationals with a denominator guard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogisticSystem {
    pub mu: BigRational,
    pub guard_bits: u64,
}

impl LogisticSystem {
    pub fn new(mu: BigRational) -> Self {
        LogisticSystem { mu, guard_bits: DENOMINATOR_GUARD_BITS }
    }
}

impl DynSystem for LogisticSystem {
    type State = BigRational;

    fn kind(&self) -> StateKind {
        StateKind::Rational
    }

    fn step(&self, s: &BigRational) -> Result<BigRational> {
        let next = logistic(&self.mu, s);
        if next.denom().bits() > self.guard_bits {
            return Err(Error::Precision { last_verified_depth: 0 });
        }
        Ok(next)
    }

    fn dist(&self, a: &BigRational, b: &BigRational, _precision: u32) -> Result<BigRational> {
        Ok((a - b).abs())
    }

    fn describe(&self) -> String {
        format!("logistic:{}", format_rational(&self.mu))
    }

    fn orbit(&self, x: &BigRational, n: u64) -> Result<Vec<BigRational>> {
        let mut out: Vec<BigRational> = Vec::with_capacity(n as usize);
        if n == 0 {
            return Ok(out);
        }
        out.push(x.clone());
        for t in 1..n as usize {
            let next = logistic(&self.mu, &out[t - 1]);
            if next.denom().bits() > self.guard_bits {
                return Err(Error::Precision { last_verified_depth: t - 1 });
            }
            out.push(next);
        }
        Ok(out)
    }
}

/// Whether scans fan out over threads. Both modes give identical results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceEntry {
    pub n: u64,
    pub value: BigRational,
}

/// `d(f^n x, f^n y)` for `n = 0 .. n_iter`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceSeries {
    pub entries: Vec<DistanceEntry>,
    pub n_iter: u64,
    /// Truncation precision, `None` for exact distances.
    pub precision: Option<u32>,
}

impl DistanceSeries {
    /// Largest entry, earliest on ties.
    pub fn max(&self) -> Option<&DistanceEntry> {
        self.entries.iter().fold(None, |best: Option<&DistanceEntry>, e| match best {
            Some(b) if b.value >= e.value => Some(b),
            _ => Some(e),
        })
    }

    /// Smallest entry, earliest on ties.
    pub fn min(&self) -> Option<&DistanceEntry> {
        self.entries.iter().fold(None, |best: Option<&DistanceEntry>, e| match best {
            Some(b) if b.value <= e.value => Some(b),
            _ => Some(e),
        })
    }

    /// Numerator over `2^precision` for truncated series, `p/q` otherwise.
    pub fn numerator_text(&self, e: &DistanceEntry) -> String {
        match self.precision {
            Some(p) => (&e.value * BigRational::from_integer(BigInt::from(pow2(p)))).to_integer().to_string(),
            None => format_rational(&e.value),
        }
    }

    pub fn precision_text(&self) -> String {
        self.precision.map_or_else(|| "exact".to_string(), |p| p.to_string())
    }

    /// `n,numerator,precision,decimal` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,numerator,precision,decimal\n");
        let prec = self.precision_text();
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", e.n, self.numerator_text(e), prec, to_decimal(&e.value)));
        }
        out
    }
}

pub fn distance_series<S: DynSystem>(
    sys: &S,
    x: &S::State,
    y: &S::State,
    n_iter: u64,
    precision: u32,
    mode: ScanMode,
) -> Result<DistanceSeries> {
    if n_iter == 0 {
        return Err(Error::Argument("the number of iterations must be at least 1".into()));
    }
    if precision == 0 {
        return Err(Error::Argument("precision must be at least 1".into()));
    }
    let xs = sys.orbit(x, n_iter)?;
    let ys = sys.orbit(y, n_iter)?;
    let one = |k: usize| sys.dist(&xs[k], &ys[k], precision).map(|value| DistanceEntry { n: k as u64, value });
    let entries = match mode {
        ScanMode::Sequential => (0..xs.len()).map(one).collect::<Result<Vec<_>>>()?,
        ScanMode::Parallel => (0..xs.len()).into_par_iter().map(one).collect::<Result<Vec<_>>>()?,
    };
    Ok(DistanceSeries { entries, n_iter, precision: sys.truncates().then_some(precision) })
}

/// Extremes of a distance series against thresholds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairReport {
    pub system: String,
    #[serde(with = "serde_ratio")]
    pub max: BigRational,
    pub max_time: u64,
    pub max_decimal: String,
    #[serde(with = "serde_ratio")]
    pub min: BigRational,
    pub min_time: u64,
    pub min_decimal: String,
    #[serde(with = "serde_ratio")]
    pub delta: BigRational,
    #[serde(with = "serde_ratio")]
    pub epsilon: BigRational,
    pub n_iter: u64,
    pub precision: Option<u32>,
    /// `max >= delta`
    pub diverges: bool,
    /// `min <= epsilon`
    pub approaches: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn scrambled_pair_report<S: DynSystem>(
    sys: &S,
    x: &S::State,
    y: &S::State,
    delta: &BigRational,
    epsilon: &BigRational,
    n_iter: u64,
    precision: u32,
    mode: ScanMode,
) -> Result<PairReport> {
    let series = distance_series(sys, x, y, n_iter, precision, mode)?;
    let max = series.max().expect("nonempty series");
    let min = series.min().expect("nonempty series");
    Ok(PairReport {
        system: sys.describe(),
        max: max.value.clone(),
        max_time: max.n,
        max_decimal: to_decimal(&max.value),
        min: min.value.clone(),
        min_time: min.n,
        min_decimal: to_decimal(&min.value),
        delta: delta.clone(),
        epsilon: epsilon.clone(),
        n_iter,
        precision: series.precision,
        diverges: &max.value >= delta,
        approaches: &min.value <= epsilon,
    })
}

/// What a scheduled check expects of the compared bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    AllDiffer,
    AllAgree,
}

/// One exact comparison at a scheduled time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledCheck {
    pub check: String,
    pub m: u32,
    pub time: u64,
    pub precision: u32,
    #[serde(with = "serde_biguint")]
    pub numerator: BigUint,
    #[serde(with = "serde_ratio")]
    pub value: BigRational,
    pub value_decimal: String,
    pub expect: Expectation,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub related: Vec<ScheduledCheck>,
}

impl ScheduledCheck {
    fn new(check: &str, m: u32, time: u64, d: DyadicDistance, expect: Expectation) -> Self {
        let pass = match expect {
            Expectation::AllDiffer => d.all_differ(),
            Expectation::AllAgree => d.is_zero(),
        };
        let value = d.value();
        ScheduledCheck {
            check: check.into(),
            m,
            time,
            precision: d.precision,
            value_decimal: to_decimal(&value),
            numerator: d.numerator,
            value,
            expect,
            pass,
            related: Vec::new(),
        }
    }

    /// This check and every related one.
    pub fn all_pass(&self) -> bool {
        self.pass && self.related.iter().all(ScheduledCheck::all_pass)
    }

    pub fn distance(&self) -> DyadicDistance {
        DyadicDistance { numerator: self.numerator.clone(), precision: self.precision }
    }
}

fn effective_precision(precision: u32, available: u64) -> Result<u32> {
    if precision == 0 {
        return Err(Error::Argument("precision must be at least 1".into()));
    }
    Ok(precision.min(available.min(u32::MAX as u64) as u32))
}

fn compare_at(a: &BitStream, pos_a: u64, b: &BitStream, pos_b: u64, precision: u32) -> Result<DyadicDistance> {
    truncated_distance(&a.shift(pos_a), &b.shift(pos_b), precision)
}

fn check_stage(p: &TauParams, m: u32) -> Result<()> {
    if m < p.k() || m > p.max_stage() {
        return Err(Error::Argument(format!("stage {m} must lie in [{}, {}]", p.k(), p.max_stage())));
    }
    Ok(())
}

fn check_pair(p: &TauParams, q: &TauParams) -> Result<()> {
    if !p.same_except_gamma(q) {
        return Err(Error::Argument("the two parameter sets must differ only in gamma".into()));
    }
    Ok(())
}

fn fact(n: u32) -> u64 {
    factorial(n).expect("stage bounded by the layout")
}

/// At `n = 2 m! + s (m-1)!` both sequences sit at the start of the run
/// `(gamma_s)^{(m-1)!}`, so the first `min(N, (m-1)!)` bits all differ.
pub fn scheduled_divergence_check(p: &TauParams, q: &TauParams, s: u32, m: u32, precision: u32) -> Result<ScheduledCheck> {
    check_pair(p, q)?;
    check_stage(p, m)?;
    if s >= m {
        return Err(Error::Argument(format!("symbol index {s} must be below the stage {m}")));
    }
    if p.gamma().bit(s as u64)? == q.gamma().bit(s as u64)? {
        return Err(Error::Argument(format!("the gammas agree at index {s}")));
    }
    let n = 2 * fact(m) + s as u64 * fact(m - 1);
    let prec = effective_precision(precision, fact(m - 1))?;
    let d = compare_at(&p.stream(), n, &q.stream(), n, prec)?;
    Ok(ScheduledCheck::new("divergence", m, n, d, Expectation::AllDiffer))
}

/// Pattern-tail and alpha-copy alignment for the pair
/// `(sigma^i tau_q, sigma^j tau_p)`.
///
/// With `i == j` the pair reads the alpha copy at position `m!` in both, which
/// does not depend on gamma. With `i < j` and `d = j - i`, the pair is
/// compared at `t_m - i` where `t_m = 3 m! + d (d-1) (m-2)!` starts the
/// segment `(0^d 1^d)^{(m-2)!}`; offsetting by `d` flips the phase, so the
/// first `d (2 (m-2)! - 1)` bits differ. Two related checks look for the
/// agreement side: the zero run `0^{m-1}` opening the last pattern segment,
/// and the long zero run of the alpha copy when alpha is Champernowne.
pub fn scheduled_coincidence_check(
    p: &TauParams,
    q: &TauParams,
    i: u64,
    j: u64,
    m: u32,
    precision: u32,
) -> Result<ScheduledCheck> {
    check_pair(p, q)?;
    check_stage(p, m)?;
    if i > j {
        return Err(Error::Argument(format!("shifts must satisfy i <= j, got i = {i}, j = {j}")));
    }
    let d = j - i;
    if d > m as u64 - 1 {
        return Err(Error::Argument(format!("shift difference {d} exceeds m - 1 = {}; no pattern run at stage {m}", m - 1)));
    }
    let (tp, tq) = (p.stream(), q.stream());
    let f = fact(m);
    if d == 0 {
        if i > f {
            return Err(Error::Argument(format!("shift {i} exceeds {m}!")));
        }
        let prec = effective_precision(precision, f)?;
        let dist = compare_at(&tq, f, &tp, f, prec)?;
        return Ok(ScheduledCheck::new("coincidence", m, f - i, dist, Expectation::AllAgree));
    }

    let f2 = fact(m - 2);
    let t_m = 3 * f + d * (d - 1) * f2;
    if i > t_m {
        return Err(Error::Argument(format!("shift {i} exceeds the scheduled position {t_m}")));
    }
    let prec = effective_precision(precision, d * (2 * f2 - 1))?;
    let dist = compare_at(&tq, t_m, &tp, t_m + d, prec)?;
    let mut check = ScheduledCheck::new("coincidence-shifted", m, t_m - i, dist, Expectation::AllDiffer);

    // segment r = m-1 opens with 0^{m-1}
    let z = 3 * f + (m as u64 - 1) * (m as u64 - 2) * f2;
    let run = m as u64 - 1 - d;
    if run > 0 {
        let prec = effective_precision(precision, run)?;
        let dist = compare_at(&tq, z, &tp, z + d, prec)?;
        check.related.push(ScheduledCheck::new("pattern-zero-run", m, z - i, dist, Expectation::AllAgree));
    }

    if *p.alpha() == BitStream::Champernowne {
        // the word 0^l starts a zero run of length 2l - 1
        let mut best = None;
        let mut l = 1u32;
        while l < 120 {
            let c = champernowne_zero_word_start(l);
            if c + 2 * l as u128 - 1 > f as u128 {
                break;
            }
            if 2 * l as u64 - 1 > d {
                best = Some((l, c as u64));
            }
            l += 1;
        }
        if let Some((l, c)) = best {
            let prec = effective_precision(precision, 2 * l as u64 - 1 - d)?;
            let pos = f + c;
            let dist = compare_at(&tq, pos, &tp, pos + d, prec)?;
            check.related.push(ScheduledCheck::new("alpha-zero-run", m, pos - i, dist, Expectation::AllAgree));
        }
    }
    Ok(check)
}

/// Tracking of `x_i` by `sigma^j tau` inside the block
/// `Bhat(x_i, 4 m! + (i-1) m!, m-1)`, with the stage condition
/// `m > k + i + j + 3`.
pub fn scheduled_tracking_check(p: &TauParams, i: u32, j: u64, m: u32, precision: u32) -> Result<ScheduledCheck> {
    tracking_preconditions(p, i, j, m)?;
    if (m as u64) <= p.k() as u64 + i as u64 + j + 3 {
        return Err(Error::Argument(format!(
            "stage {m} must exceed k + i + j + 3 = {}",
            p.k() as u64 + i as u64 + j + 3
        )));
    }
    scheduled_tracking_check_unchecked(p, i, j, m, precision)
}

fn tracking_preconditions(p: &TauParams, i: u32, j: u64, m: u32) -> Result<()> {
    check_stage(p, m)?;
    let h = fact(m - 1) / 2;
    if j >= h {
        return Err(Error::Argument(format!("shift {j} must be below (m-1)!/2 = {h}")));
    }
    if i < 1 || i > m - 3 {
        return Err(Error::Argument(format!("family index {i} must lie in [1, {}]", m - 3)));
    }
    Ok(())
}

/// As [`scheduled_tracking_check`] without the stage condition; needs only
/// `j <= m - 1` so that block `j` of the B word exists.
pub fn scheduled_tracking_check_unchecked(p: &TauParams, i: u32, j: u64, m: u32, precision: u32) -> Result<ScheduledCheck> {
    tracking_preconditions(p, i, j, m)?;
    if j > m as u64 - 1 {
        return Err(Error::Argument(format!("shift {j} exceeds m - 1 = {}", m - 1)));
    }
    let f = fact(m);
    let h = fact(m - 1) / 2;
    let t = 4 * f + (i as u64 - 1) * f + j * h;
    let x = p.family_member(i);
    let tau = p.stream();
    let prec = effective_precision(precision, h - j)?;
    let near = compare_at(&x, t, &tau, t + j, prec)?;
    let mut check = ScheduledCheck::new("tracking", m, t, near, Expectation::AllAgree);
    let far = compare_at(&x, t + f / 2, &tau, t + f / 2 + j, prec)?;
    check.related.push(ScheduledCheck::new("tracking-complement", m, t + f / 2, far, Expectation::AllDiffer));
    Ok(check)
}

/// `w` followed by alternating copy and complement blocks of `x` with
/// lengths `1, 1, 2, 2, 4, 4, ...`, read at matching indices.
pub fn construct_witness(x: &BitStream, w: &Word) -> BitStream {
    BitStream::Witness { base: Arc::new(x.clone()), cylinder: w.clone() }
}

/// Where the partner point must lie.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetSet {
    /// Sequences starting with the word.
    Cylinder(Word),
    /// The open interval `(lo, hi)`.
    Open(RationalInterval),
}

impl fmt::Display for TargetSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSet::Cylinder(w) => write!(f, "cylinder({w})"),
            TargetSet::Open(v) => write!(f, "({}, {})", format_rational(&v.lo), format_rational(&v.hi)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessConfig {
    pub delta: BigRational,
    pub epsilon: BigRational,
    pub horizon: u64,
    pub precision: u32,
    pub seed: u64,
    pub random_candidates: usize,
    pub mode: ScanMode,
}

impl WitnessConfig {
    /// `delta = 1 - 2^-32`, `epsilon = 2^-32`, horizon `2^14`.
    pub fn shift_default() -> Self {
        WitnessConfig {
            delta: BigRational::one() - pow2_rational(-32),
            epsilon: pow2_rational(-32),
            horizon: 1 << 14,
            precision: DEFAULT_PRECISION,
            seed: 0,
            random_candidates: 16,
            mode: ScanMode::Parallel,
        }
    }

    /// `delta = 1/2 - 2^-20`, `epsilon = 2^-20`, horizon `10^5`.
    pub fn interval_default() -> Self {
        WitnessConfig {
            delta: BigRational::new(1.into(), 2.into()) - pow2_rational(-20),
            epsilon: pow2_rational(-20),
            horizon: 100_000,
            ..Self::shift_default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.delta.is_positive() || !self.epsilon.is_positive() {
            return Err(Error::Argument("delta and epsilon must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Argument("the horizon must be at least 1".into()));
        }
        if self.precision == 0 {
            return Err(Error::Argument("precision must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    WitnessFound,
    Inconclusive,
}

/// Outcome of a witness search. `inconclusive` is never a claim of non-chaos.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub system: String,
    pub x: String,
    pub target: String,
    pub y: String,
    #[serde(with = "serde_ratio")]
    pub sup_estimate: BigRational,
    pub sup_time: u64,
    #[serde(with = "serde_ratio")]
    pub inf_estimate: BigRational,
    pub inf_time: u64,
    #[serde(with = "serde_ratio")]
    pub delta: BigRational,
    #[serde(with = "serde_ratio")]
    pub epsilon: BigRational,
    pub horizon: u64,
    pub precision: Option<u32>,
    /// Start of the scanned window; later than 0 once both orbits are periodic.
    pub window_start: u64,
    pub window_len: u64,
    pub verdict: Verdict,
    pub round: String,
    pub candidates_evaluated: usize,
    /// Smallest distance over every candidate and every time in the horizon.
    #[serde(with = "serde_ratio")]
    pub min_distance_over_candidates: BigRational,
    pub seed: u64,
}

impl WitnessReport {
    pub fn found(&self) -> bool {
        self.verdict == Verdict::WitnessFound
    }
}

/// The partner is [`construct_witness`] of `x` and the cylinder word.
pub fn chaos_witness_search_shift(x: &BitStream, w: &Word, cfg: &WitnessConfig) -> Result<WitnessReport> {
    cfg.validate()?;
    let y = construct_witness(x, w);
    let series = distance_series(&ShiftSpace, x, &y, cfg.horizon, cfg.precision, cfg.mode)?;
    let sup = series.max().expect("nonempty");
    let inf = series.min().expect("nonempty");
    let found = sup.value >= cfg.delta && inf.value <= cfg.epsilon;
    Ok(WitnessReport {
        system: ShiftSpace.describe(),
        x: x.to_string(),
        target: TargetSet::Cylinder(w.clone()).to_string(),
        y: y.to_string(),
        sup_estimate: sup.value.clone(),
        sup_time: sup.n,
        inf_estimate: inf.value.clone(),
        inf_time: inf.n,
        delta: cfg.delta.clone(),
        epsilon: cfg.epsilon.clone(),
        horizon: cfg.horizon,
        precision: Some(cfg.precision),
        window_start: 0,
        window_len: cfg.horizon,
        verdict: if found { Verdict::WitnessFound } else { Verdict::Inconclusive },
        round: "cylinder-schedule".into(),
        candidates_evaluated: 1,
        min_distance_over_candidates: inf.value.clone(),
        seed: cfg.seed,
    })
}

/// An orbit over a horizon, with its cycle when it closes early.
#[derive(Clone, Debug)]
struct Orbit {
    values: Vec<BigRational>,
    /// `(mu, lambda)`: `values[mu + lambda]` would repeat `values[mu]`.
    cycle: Option<(usize, usize)>,
}

impl Orbit {
    fn compute(map: &PwlMap, x: &BigRational, horizon: u64) -> Result<Self> {
        let dom = map.domain();
        if !dom.contains(x) {
            return Err(Error::Escape { index: 0 });
        }
        let mut values = vec![x.clone()];
        let mut seen: HashMap<BigRational, usize> = HashMap::new();
        seen.insert(x.clone(), 0);
        for t in 1..horizon as usize {
            let next = map.eval(&values[t - 1]).map_err(|_| Error::Escape { index: t })?;
            if !dom.contains(&next) {
                return Err(Error::Escape { index: t });
            }
            if let Some(&s) = seen.get(&next) {
                return Ok(Orbit { values, cycle: Some((s, t - s)) });
            }
            seen.insert(next.clone(), t);
            values.push(next);
        }
        Ok(Orbit { values, cycle: None })
    }

    fn at(&self, t: u64) -> &BigRational {
        let t = t as usize;
        match self.cycle {
            Some((mu, lambda)) if t >= mu => &self.values[mu + (t - mu) % lambda],
            _ => &self.values[t],
        }
    }
}

#[derive(Clone, Debug)]
struct CandidateEval {
    y: BigRational,
    sup: BigRational,
    sup_time: u64,
    inf: BigRational,
    inf_time: u64,
    overall_min: BigRational,
    window_start: u64,
    window_len: u64,
}

/// Extremes over the joint cycle when both orbits close inside the horizon,
/// otherwise over the whole horizon. An orbit that merges into the orbit of
/// `x` therefore has supremum 0 over its cycle.
fn evaluate_candidate(map: &PwlMap, xo: &Orbit, y: &BigRational, horizon: u64) -> Option<CandidateEval> {
    let yo = Orbit::compute(map, y, horizon).ok()?;
    let (start, end) = match (xo.cycle, yo.cycle) {
        (Some((mx, lx)), Some((my, ly))) => {
            let t0 = mx.max(my) as u64;
            let l = (lx as u64).lcm(&(ly as u64));
            if t0 < horizon {
                (t0, (t0.saturating_add(l)).min(horizon))
            } else {
                (0, horizon)
            }
        }
        _ => (0, horizon),
    };
    let mut sup: Option<(BigRational, u64)> = None;
    let mut inf: Option<(BigRational, u64)> = None;
    let mut overall: Option<BigRational> = None;
    for t in 0..end {
        let d = (xo.at(t) - yo.at(t)).abs();
        if overall.as_ref().is_none_or(|m| &d < m) {
            overall = Some(d.clone());
        }
        if t < start {
            continue;
        }
        if sup.as_ref().is_none_or(|(s, _)| &d > s) {
            sup = Some((d.clone(), t));
        }
        if inf.as_ref().is_none_or(|(s, _)| &d < s) {
            inf = Some((d, t));
        }
    }
    let (sup, sup_time) = sup?;
    let (inf, inf_time) = inf?;
    Some(CandidateEval {
        y: y.clone(),
        sup,
        sup_time,
        inf,
        inf_time,
        overall_min: overall?,
        window_start: start,
        window_len: end - start,
    })
}

/// Open interval `v` clipped to the interior of the domain.
fn clip_target(map: &PwlMap, v: &RationalInterval) -> Result<RationalInterval> {
    let dom = map.domain();
    let lo = (&v.lo).max(&dom.lo).clone();
    let hi = (&v.hi).min(&dom.hi).clone();
    if lo >= hi {
        return Err(Error::Argument(format!("target set {} does not meet the domain {dom} in an open set", TargetSet::Open(v.clone()))));
    }
    Ok(RationalInterval { lo, hi })
}

/// Up to four numerators `p` with `p/q` strictly inside `v`.
fn grid_points(v: &RationalInterval, q: u64) -> Vec<BigRational> {
    let qb = BigRational::from_integer(BigInt::from(q));
    let p_min: BigInt = (&v.lo * &qb).floor().to_integer() + 1;
    let p_max: BigInt = (&v.hi * &qb).ceil().to_integer() - 1;
    if p_min > p_max {
        return Vec::new();
    }
    let count = (&p_max - &p_min + 1u32).to_u64().unwrap_or(u64::MAX);
    let picks: Vec<u64> = if count <= 4 { (0..count).collect() } else { (0..4).map(|k| (count - 1) * k / 3).collect() };
    picks
        .into_iter()
        .map(|k| BigRational::new(&p_min + BigInt::from(k), BigInt::from(q)))
        .collect()
}

fn grid_round(v: &RationalInterval) -> Vec<BigRational> {
    let small = (3..=31).step_by(2);
    let mersenne = (6..=16).map(|a| (1u64 << a) - 1);
    let mut out: Vec<BigRational> = Vec::new();
    for q in small.chain(mersenne) {
        for p in grid_points(v, q) {
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// Affine map `y -> a y + b`.
#[derive(Clone, Debug)]
struct Affine {
    a: BigRational,
    b: BigRational,
}

impl Affine {
    fn piece(map: &PwlMap, k: usize) -> Affine {
        let (iv, y0, slope) = map.piece(k);
        Affine { a: slope.clone(), b: y0 - slope * &iv.lo }
    }

    /// `other ∘ self`
    fn then(&self, other: &Affine) -> Affine {
        Affine { a: &other.a * &self.a, b: &other.a * &self.b + &other.b }
    }
}

/// The periodic point whose orbit follows the pieces of `word`, if there is one.
fn periodic_point(map: &PwlMap, word: &[usize]) -> Option<BigRational> {
    let mut comp = Affine { a: BigRational::one(), b: BigRational::zero() };
    for &k in word {
        comp = comp.then(&Affine::piece(map, k));
    }
    if comp.a.is_one() {
        return None;
    }
    let y = &comp.b / (BigRational::one() - &comp.a);
    let mut cur = y.clone();
    for &k in word {
        if !map.piece(k).0.contains(&cur) {
            return None;
        }
        cur = map.eval(&cur).ok()?;
    }
    (cur == y).then_some(y)
}

/// Preimages of `z` inside the open interval `v`, breadth first.
fn preimages_in(map: &PwlMap, z: &BigRational, v: &RationalInterval, want: usize) -> Vec<BigRational> {
    const MAX_DEPTH: usize = 24;
    const MAX_FRONTIER: usize = 256;
    let mut found = Vec::new();
    let mut frontier = vec![z.clone()];
    for _ in 0..=MAX_DEPTH {
        for p in &frontier {
            if v.interior_contains(p) && !found.contains(p) {
                found.push(p.clone());
                if found.len() >= want {
                    return found;
                }
            }
        }
        let mut next: Vec<BigRational> = Vec::new();
        'outer: for p in &frontier {
            for k in 0..map.piece_count() {
                let (iv, y0, slope) = map.piece(k);
                if slope.is_zero() {
                    continue;
                }
                let x = &iv.lo + (p - y0) / slope;
                if iv.contains(&x) && !next.contains(&x) {
                    next.push(x);
                    if next.len() >= MAX_FRONTIER {
                        break 'outer;
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    found
}

/// Piece words followed by the cycle of `x`, each with total slope above 1.
/// A cycle point on a node may follow either adjacent piece, so every choice
/// is listed, over one and two turns of the cycle.
fn shadow_words(map: &PwlMap, xo: &Orbit) -> Vec<Vec<usize>> {
    const MAX_WORDS: usize = 16;
    let Some((mu, lambda)) = xo.cycle else {
        return Vec::new();
    };
    let options: Vec<Vec<usize>> = (mu..mu + lambda)
        .map(|t| {
            (0..map.piece_count())
                .filter(|&k| {
                    let (iv, _, slope) = map.piece(k);
                    !slope.is_zero() && iv.contains(&xo.values[t])
                })
                .collect()
        })
        .collect();
    if options.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    for turns in 1..=2 {
        let len = lambda * turns;
        let mut words: Vec<Vec<usize>> = vec![Vec::new()];
        for t in 0..len {
            words = words
                .into_iter()
                .flat_map(|w| {
                    options[t % lambda].iter().map(move |&k| {
                        let mut w2 = w.clone();
                        w2.push(k);
                        w2
                    })
                })
                .take(MAX_WORDS)
                .collect();
        }
        for w in words {
            let gain: BigRational = w.iter().map(|&k| map.piece(k).2.abs()).product();
            if gain > BigRational::one() && !out.contains(&w) {
                out.push(w);
            }
        }
    }
    out
}

/// Short excursion words over the non-constant pieces, shortest first.
fn excursion_words(map: &PwlMap) -> Vec<Vec<usize>> {
    let pieces: Vec<usize> = (0..map.piece_count()).filter(|&k| !map.piece(k).2.is_zero()).collect();
    let mut out = Vec::new();
    for len in 1..=3u32 {
        for code in 0..pieces.len().pow(len) {
            let mut c = code;
            let mut u = Vec::with_capacity(len as usize);
            for _ in 0..len {
                u.push(pieces[c % pieces.len()]);
                c /= pieces.len();
            }
            u.reverse();
            out.push(u);
        }
    }
    out
}

/// One batch of the periodic-itinerary round: periodic orbits that follow
/// `kappa` long enough to come within `2^-bits` of the cycle of `x`, then make
/// a short excursion, pulled back into `v` along preimages.
fn itinerary_batch(map: &PwlMap, kappa: &[usize], bits: i64, v: &RationalInterval) -> Vec<BigRational> {
    let gain: BigRational = kappa.iter().map(|&k| map.piece(k).2.abs()).product();
    let target = pow2_rational(bits);
    let mut reps = 1usize;
    let mut acc = gain.clone();
    while acc < target && reps < 256 {
        acc *= &gain;
        reps += 1;
    }
    let mut out: Vec<BigRational> = Vec::new();
    let mut seen: Vec<BigRational> = Vec::new();
    for u in excursion_words(map) {
        let mut word: Vec<usize> = Vec::with_capacity(reps * kappa.len() + u.len());
        for _ in 0..reps {
            word.extend_from_slice(kappa);
        }
        word.extend_from_slice(&u);
        let Some(z) = periodic_point(map, &word) else {
            continue;
        };
        if seen.contains(&z) {
            continue;
        }
        for y in preimages_in(map, &z, v, 2) {
            if !out.contains(&y) {
                out.push(y);
            }
        }
        seen.push(z);
    }
    out
}

/// Seeded rationals `p/q` in `v` with odd `q` in `[2^17, 2^40)`.
fn random_round(v: &RationalInterval, count: usize, seed: u64) -> Vec<BigRational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 64 * count.max(1) {
        attempts += 1;
        let q = rng.random_range((1u64 << 16)..(1u64 << 39)) * 2 + 1;
        let qb = BigRational::from_integer(BigInt::from(q));
        let p_min: BigInt = (&v.lo * &qb).floor().to_integer() + 1;
        let p_max: BigInt = (&v.hi * &qb).ceil().to_integer() - 1;
        if p_min > p_max {
            continue;
        }
        let span = (&p_max - &p_min).to_u64().unwrap_or(u64::MAX);
        let off = rng.random_range(0..=span);
        let y = BigRational::new(p_min + BigInt::from(off), BigInt::from(q));
        if !out.contains(&y) {
            out.push(y);
        }
    }
    out
}

/// Lazily generated candidate list.
type Batch<'a> = Box<dyn Fn() -> Vec<BigRational> + Sync + 'a>;

/// Exact search for a partner of `x` in the open interval `v`. Candidates
/// come in rounds: a grid of odd denominators up to `2^16`, periodic orbits
/// shadowing the cycle of `x`, then seeded random rationals. The search stops
/// after the first round holding a witness; within a round the lowest index
/// wins.
pub fn chaos_witness_search_interval(
    map: &PwlMap,
    x: &BigRational,
    v: &RationalInterval,
    cfg: &WitnessConfig,
) -> Result<WitnessReport> {
    cfg.validate()?;
    if v.lo >= v.hi {
        return Err(Error::Argument(format!("target set {} is empty", TargetSet::Open(v.clone()))));
    }
    if !map.maps_into_self() {
        return Err(Error::Argument(format!("{map} does not map its domain into itself")));
    }
    let clipped = clip_target(map, v)?;
    let xo = Orbit::compute(map, x, cfg.horizon)?;

    let shadows = shadow_words(map, &xo);
    let rounds: Vec<(&str, Vec<Batch<'_>>)> = vec![
        ("grid", vec![Box::new(|| grid_round(&clipped))]),
        (
            "periodic-itinerary",
            shadows
                .iter()
                .flat_map(|kappa| {
                    let clipped = &clipped;
                    [24i64, 48].into_iter().map(move |bits| {
                        Box::new(move || itinerary_batch(map, kappa, bits, clipped)) as Box<dyn Fn() -> Vec<BigRational> + Sync>
                    })
                })
                .collect(),
        ),
        ("random", vec![Box::new(|| random_round(&clipped, cfg.random_candidates, cfg.seed))]),
    ];

    let mut evaluated = 0usize;
    let mut global_min: Option<BigRational> = None;
    let mut best: Option<(CandidateEval, &str)> = None;
    let mut winner: Option<(CandidateEval, &str)> = None;
    'rounds: for (name, batches) in &rounds {
        for make in batches {
            let cands = make();
            let eval = |y: &BigRational| evaluate_candidate(map, &xo, y, cfg.horizon);
            let evals: Vec<Option<CandidateEval>> = match cfg.mode {
                ScanMode::Sequential => cands.iter().map(eval).collect(),
                ScanMode::Parallel => cands.par_iter().map(eval).collect(),
            };
            for e in evals.into_iter().flatten() {
                evaluated += 1;
                if global_min.as_ref().is_none_or(|m| &e.overall_min < m) {
                    global_min = Some(e.overall_min.clone());
                }
                if winner.is_none() && e.sup >= cfg.delta && e.inf <= cfg.epsilon {
                    winner = Some((e.clone(), name));
                }
                let better = match &best {
                    None => true,
                    Some((b, _)) => e.sup > b.sup || (e.sup == b.sup && e.inf < b.inf),
                };
                if better {
                    best = Some((e, name));
                }
            }
            if winner.is_some() {
                break 'rounds;
            }
        }
    }
    let found = winner.is_some();
    let (e, round) = winner
        .or(best)
        .ok_or_else(|| Error::NoPoint(format!("no candidate in {} could be evaluated", TargetSet::Open(v.clone()))))?;
    Ok(WitnessReport {
        system: map.describe(),
        x: format_rational(x),
        target: TargetSet::Open(v.clone()).to_string(),
        y: format_rational(&e.y),
        sup_estimate: e.sup,
        sup_time: e.sup_time,
        inf_estimate: e.inf,
        inf_time: e.inf_time,
        delta: cfg.delta.clone(),
        epsilon: cfg.epsilon.clone(),
        horizon: cfg.horizon,
        precision: None,
        window_start: e.window_start,
        window_len: e.window_len,
        verdict: if found { Verdict::WitnessFound } else { Verdict::Inconclusive },
        round: round.to_string(),
        candidates_evaluated: evaluated,
        min_distance_over_candidates: global_min.expect("at least one evaluation"),
        seed: cfg.seed,
    })
}

/// Recomputes the recorded extremes of a report from scratch: the distances at
/// `sup_time` and `inf_time` must equal the recorded values and the verdict
/// must follow from the thresholds.
pub fn replay_witness_report(report: &WitnessReport) -> Result<bool> {
    let last = report.sup_time.max(report.inf_time) + 1;
    let (sup, inf) = if report.system == "shift" {
        let x: BitStream = report.x.parse()?;
        let y: BitStream = report.y.parse()?;
        let prec = report.precision.unwrap_or(DEFAULT_PRECISION);
        let s = distance_series(&ShiftSpace, &x, &y, last, prec, ScanMode::Sequential)?;
        (s.entries[report.sup_time as usize].value.clone(), s.entries[report.inf_time as usize].value.clone())
    } else {
        let map = match report.system.parse::<MapSpec>()? {
            MapSpec::Pwl(m) => m,
            MapSpec::Logistic(_) => return Err(Error::Unsupported("replay of logistic reports".into())),
        };
        let x = parse_rational(&report.x)?;
        let y = parse_rational(&report.y)?;
        let s = distance_series(&map, &x, &y, last, 1, ScanMode::Sequential)?;
        (s.entries[report.sup_time as usize].value.clone(), s.entries[report.inf_time as usize].value.clone())
    };
    let found = sup >= report.delta && inf <= report.epsilon;
    Ok(sup == report.sup_estimate
        && inf == report.inf_estimate
        && found == report.found()
        && report.sup_time < report.horizon
        && report.inf_time < report.horizon)
}
