//! Laps, fixed points and exact turbulence certificates for piecewise-linear
//! maps, and the fixed-point pipeline linking a chaos witness for `f` to a
//! turbulence certificate for `f ∘ f`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{PwlMap, RationalInterval};
use crate::rational::{format_rational, serde_ratio};
use crate::witness::{chaos_witness_search_interval, WitnessConfig, WitnessReport};

/// Breakpoint budget of the lap-union scan.
const MAX_UNION_BREAKPOINTS: usize = 33;
const MAX_SHRINK_STEPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Increasing,
    Decreasing,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lap {
    pub interval: RationalInterval,
    pub direction: Direction,
    pub image: RationalInterval,
    /// First and last node-piece indices covered.
    pub pieces: (usize, usize),
}

fn direction_of(slope: &BigRational) -> Direction {
    if slope.is_positive() {
        Direction::Increasing
    } else if slope.is_negative() {
        Direction::Decreasing
    } else {
        Direction::Constant
    }
}

/// Maximal pieces of constant direction.
pub fn laps(map: &PwlMap) -> Vec<Lap> {
    let mut out: Vec<Lap> = Vec::new();
    let mut start = 0;
    for k in 1..=map.piece_count() {
        let ends = k == map.piece_count() || direction_of(map.piece(k).2) != direction_of(map.piece(start).2);
        if ends {
            let interval = RationalInterval { lo: map.xs()[start].clone(), hi: map.xs()[k].clone() };
            let (a, b) = (map.ys()[start].clone(), map.ys()[k].clone());
            let image = if a <= b { RationalInterval { lo: a, hi: b } } else { RationalInterval { lo: b, hi: a } };
            out.push(Lap { interval, direction: direction_of(map.piece(start).2), image, pieces: (start, k - 1) });
            start = k;
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FixedPoints {
    /// Isolated fixed points, increasing.
    pub points: Vec<BigRational>,
    /// Intervals on which the map is the identity.
    pub segments: Vec<RationalInterval>,
}

impl FixedPoints {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.segments.is_empty()
    }

    /// The leftmost fixed point, isolated or a segment endpoint.
    pub fn first(&self) -> Option<BigRational> {
        let a = self.points.first();
        let b = self.segments.first().map(|s| &s.lo);
        match (a, b) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            (a, b) => a.or(b).cloned(),
        }
    }
}

/// Solves `f(x) = x` piece by piece.
pub fn fixed_points(map: &PwlMap) -> FixedPoints {
    let mut points: Vec<BigRational> = Vec::new();
    let mut segments: Vec<RationalInterval> = Vec::new();
    let one = BigRational::from_integer(1.into());
    for k in 0..map.piece_count() {
        let (iv, y0, slope) = map.piece(k);
        if *slope == one {
            if *y0 == iv.lo {
                match segments.last_mut() {
                    Some(last) if last.hi == iv.lo => last.hi = iv.hi.clone(),
                    _ => segments.push(iv),
                }
            }
            continue;
        }
        // y0 + s (x - x0) = x
        let x = (y0 - slope * &iv.lo) / (&one - slope);
        if iv.contains(&x) {
            points.push(x);
        }
    }
    points.sort();
    points.dedup();
    points.retain(|p| !segments.iter().any(|s| s.contains(p)));
    FixedPoints { points, segments }
}

/// `I0`, `I1` with at most one common point whose images both contain
/// `I0 ∪ I1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurbulenceCertificate {
    pub i0: RationalInterval,
    pub i1: RationalInterval,
    #[serde(with = "opt_ratio")]
    pub shared_point: Option<BigRational>,
    pub j0: RationalInterval,
    pub j1: RationalInterval,
}

mod opt_ratio {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_some(&format_rational(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<BigRational>, D::Error> {
        let text: Option<String> = Option::deserialize(d)?;
        text.map(|t| crate::rational::parse_rational(&t).map_err(serde::de::Error::custom)).transpose()
    }
}

impl TurbulenceCertificate {
    fn build(map: &PwlMap, i0: RationalInterval, i1: RationalInterval) -> Result<Self> {
        let j0 = map.image(&i0)?;
        let j1 = map.image(&i1)?;
        let shared_point = (i0.hi == i1.lo).then(|| i0.hi.clone());
        Ok(TurbulenceCertificate { i0, i1, shared_point, j0, j1 })
    }

    /// Recomputes both images and checks the covering and the overlap.
    pub fn verify(&self, map: &PwlMap) -> Result<bool> {
        if self.i0.is_degenerate() || self.i1.is_degenerate() || self.i0.hi > self.i1.lo {
            return Ok(false);
        }
        let shared = (self.i0.hi == self.i1.lo).then(|| self.i0.hi.clone());
        if shared != self.shared_point {
            return Ok(false);
        }
        let j0 = map.image(&self.i0)?;
        let j1 = map.image(&self.i1)?;
        let hull = self.i0.hull(&self.i1);
        Ok(j0 == self.j0 && j1 == self.j1 && j0.contains_interval(&hull) && j1.contains_interval(&hull))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TurbulenceOutcome {
    Certificate(Box<TurbulenceCertificate>),
    /// Nothing found among unions of laps and single-lap pairs; not a proof
    /// that the map is not turbulent.
    NoneFound { scope: String },
}

impl TurbulenceOutcome {
    pub fn certificate(&self) -> Option<&TurbulenceCertificate> {
        match self {
            TurbulenceOutcome::Certificate(c) => Some(c),
            TurbulenceOutcome::NoneFound { .. } => None,
        }
    }
}

/// `x` in the lap with `f(x) = c`, for `c` in the lap image.
fn solve_on_lap(map: &PwlMap, lap: &Lap, c: &BigRational) -> Option<BigRational> {
    for k in lap.pieces.0..=lap.pieces.1 {
        let (iv, y0, slope) = map.piece(k);
        let y1 = &map.ys()[k + 1];
        let (lo, hi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
        if lo <= c && c <= hi {
            return Some(&iv.lo + (c - y0) / slope);
        }
    }
    None
}

/// Smallest subinterval of a monotone lap mapped onto `target`.
fn lap_preimage(map: &PwlMap, lap: &Lap, target: &RationalInterval) -> Option<RationalInterval> {
    let a = solve_on_lap(map, lap, &target.lo)?;
    let b = solve_on_lap(map, lap, &target.hi)?;
    Some(if a <= b { RationalInterval { lo: a, hi: b } } else { RationalInterval { lo: b, hi: a } })
}

fn covers(map: &PwlMap, a: &RationalInterval, b: &RationalInterval) -> Result<bool> {
    let hull = a.hull(b);
    Ok(map.image(a)?.contains_interval(&hull) && map.image(b)?.contains_interval(&hull))
}

/// Pairs of lap unions `[b_a, b_b]`, `[b_c, b_d]` with `b <= c`, widest hull
/// first, then longest shorter side, then most balanced, then leftmost.
fn union_scan(map: &PwlMap, breaks: &[BigRational]) -> Result<Option<TurbulenceCertificate>> {
    let n = breaks.len();
    let mut pairs: Vec<(BigRational, BigRational, BigRational, [usize; 4])> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b..n {
                for d in c + 1..n {
                    let hull = &breaks[d] - &breaks[a];
                    let len_u = &breaks[b] - &breaks[a];
                    let len_w = &breaks[d] - &breaks[c];
                    let shorter = len_u.clone().min(len_w.clone());
                    pairs.push((hull, shorter, (len_u - len_w).abs(), [a, b, c, d]));
                }
            }
        }
    }
    pairs.sort_by(|x, y| {
        y.0.cmp(&x.0)
            .then_with(|| y.1.cmp(&x.1))
            .then_with(|| x.2.cmp(&y.2))
            .then_with(|| x.3.cmp(&y.3))
    });
    for (_, _, _, [a, b, c, d]) in pairs {
        let u = RationalInterval { lo: breaks[a].clone(), hi: breaks[b].clone() };
        let w = RationalInterval { lo: breaks[c].clone(), hi: breaks[d].clone() };
        if covers(map, &u, &w)? {
            return Ok(Some(TurbulenceCertificate::build(map, u, w)?));
        }
    }
    Ok(None)
}

/// Shrinks two monotone laps towards subintervals mapped onto the common
/// part of their images until that common part covers both.
fn shrink_pair(map: &PwlMap, l0: &Lap, l1: &Lap) -> Result<Option<TurbulenceCertificate>> {
    let (mut a, mut b) = (l0.interval.clone(), l1.interval.clone());
    for _ in 0..MAX_SHRINK_STEPS {
        if covers(map, &a, &b)? && a.hi <= b.lo && !a.is_degenerate() && !b.is_degenerate() {
            return Ok(Some(TurbulenceCertificate::build(map, a, b)?));
        }
        let Some(t) = map.image(&a)?.intersect(&map.image(&b)?) else {
            return Ok(None);
        };
        let (Some(a2), Some(b2)) = (lap_preimage(map, l0, &t), lap_preimage(map, l1, &t)) else {
            return Ok(None);
        };
        if a2 == a && b2 == b {
            return Ok(None);
        }
        a = a2;
        b = b2;
    }
    Ok(None)
}

/// Deterministic search for a turbulence certificate. Unions of whole laps
/// are tried first, then pairs of single laps with covering-driven shrinking.
pub fn turbulence_check(map: &PwlMap) -> Result<TurbulenceOutcome> {
    let lap_list = laps(map);
    let mut breaks: Vec<BigRational> = lap_list.iter().map(|l| l.interval.lo.clone()).collect();
    breaks.push(map.domain().hi);
    if breaks.len() <= MAX_UNION_BREAKPOINTS {
        if let Some(c) = union_scan(map, &breaks)? {
            return checked(map, c);
        }
    }
    for (i, l0) in lap_list.iter().enumerate() {
        if l0.direction == Direction::Constant {
            continue;
        }
        for l1 in lap_list.iter().skip(i + 1) {
            if l1.direction == Direction::Constant {
                continue;
            }
            if let Some(c) = shrink_pair(map, l0, l1)? {
                return checked(map, c);
            }
        }
    }
    Ok(TurbulenceOutcome::NoneFound {
        scope: "searched unions of whole laps and pairs of subintervals of single monotone laps; \
                other certificates may exist"
            .into(),
    })
}

fn checked(map: &PwlMap, c: TurbulenceCertificate) -> Result<TurbulenceOutcome> {
    if !c.verify(map)? {
        return Err(Error::Internal(format!("certificate {} / {} failed its own check", c.i0, c.i1)));
    }
    Ok(TurbulenceOutcome::Certificate(Box::new(c)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImplicationStatus {
    /// A witness was found and `f ∘ f` has a certificate.
    Holds,
    /// A witness was found but no certificate was.
    Violated,
    /// No witness was found, so the implication was not exercised.
    Untested,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub map: String,
    #[serde(with = "serde_ratio")]
    pub fixed_point: BigRational,
    pub target: RationalInterval,
    pub witness: WitnessReport,
    pub square: TurbulenceOutcome,
    pub status: ImplicationStatus,
}

/// Open set of one eighth of the domain at a seeded position.
pub fn sample_target(map: &PwlMap, seed: u64) -> RationalInterval {
    let dom = map.domain();
    let width = dom.width() / BigRational::from_integer(8.into());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = BigRational::new(BigInt::from(rng.random_range(0u32..=1 << 16)), BigInt::from(1u32 << 16));
    let lo = &dom.lo + r * (dom.width() - &width);
    RationalInterval { hi: &lo + width, lo }
}

/// Runs the witness search from the leftmost fixed point `z` of `map` into a
/// target set (sampled from the seed unless given) and, when a witness turns
/// up, checks `map ∘ map` for a certificate.
pub fn chaos_implies_turbulence(
    map: &PwlMap,
    cfg: &WitnessConfig,
    target: Option<RationalInterval>,
) -> Result<PipelineReport> {
    if !map.maps_into_self() {
        return Err(Error::Argument(format!("{map} does not map its domain into itself")));
    }
    let z = fixed_points(map)
        .first()
        .ok_or_else(|| Error::Internal(format!("no fixed point found for the self-map {map}")))?;
    let target = target.unwrap_or_else(|| sample_target(map, cfg.seed));
    let witness = chaos_witness_search_interval(map, &z, &target, cfg)?;
    let square = turbulence_check(&map.square()?)?;
    let status = match (witness.found(), square.certificate().is_some()) {
        (false, _) => ImplicationStatus::Untested,
        (true, true) => ImplicationStatus::Holds,
        (true, false) => ImplicationStatus::Violated,
    };
    Ok(PipelineReport { map: map.to_string(), fixed_point: z, target, witness, square, status })
}
