//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symchaos::bitseq::{truncated_distance, BitStream, Word};
use symchaos::cli::run_captured;
use symchaos::interval::{lambda_membership_depth, logistic, point_from_itinerary, Branches, PwlMap, RationalInterval};
use symchaos::rational::{parse_rational, pow2_rational};
use symchaos::tau::{block_a, block_b, block_bhat, tau_bit, tau_prefix, TauParams};
use symchaos::turbulence::{chaos_implies_turbulence, turbulence_check, ImplicationStatus};
use symchaos::witness::{
    chaos_witness_search_interval, chaos_witness_search_shift, distance_series, replay_witness_report,
    scheduled_coincidence_check, scheduled_divergence_check, scheduled_tracking_check,
    scheduled_tracking_check_unchecked, ScanMode, ShiftSpace, WitnessConfig,
};

use common::{all_ones, champernowne, dyadic_numerator, fact, g_step, source_len, Construction};

type Outcome = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn q(s: &str) -> BigRational {
    parse_rational(s).unwrap()
}

fn iv(lo: &str, hi: &str) -> RationalInterval {
    RationalInterval::new(q(lo), q(hi)).unwrap()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn layout_identities() -> Outcome {
    let g = BitStream::Champernowne;
    for m in 5..=10u32 {
        let a = block_a(&g, m, &BitStream::Champernowne).map_err(err)?;
        ensure!(a.len() as u64 == 3 * fact(m), "|A(g, {m})| = {}", a.len());
    }
    for j in 2..=7u32 {
        let b = block_b(&g, 11, j).map_err(err)?;
        let bh = block_bhat(&g, 11, j).map_err(err)?;
        ensure!(b.len() as u64 == fact(j + 1) / 2, "|B(g, 11, {j})| = {}", b.len());
        ensure!(bh.len() as u64 == fact(j + 1), "|Bhat(g, 11, {j})| = {}", bh.len());
    }
    let p = TauParams::new(5, BitStream::constant(1)).map_err(err)?;
    for m in 5..=9u32 {
        let through: u64 = fact(5) + (5..=m).map(|s| 3 * fact(s) + (s as u64 - 3) * fact(s)).sum::<u64>();
        ensure!(through == fact(m + 1), "stage sum through {m} is {through}");
        ensure!(p.layout().cumulative_len(m) == fact(m + 1), "layout through {m}");
    }
    let t = tau_prefix(&p, fact(10) as usize).map_err(err)?;
    ensure!(t.len() as u64 == fact(10), "materialized length");
    Ok(())
}

fn alternating(n: u64) -> u8 {
    (n % 2) as u8
}

fn indexer_oracle() -> Outcome {
    let len = fact(8) as usize;
    let champ = champernowne(source_len(len));
    let c = |n: u64| champ[n as usize];

    // default parameters
    let p1 = TauParams::new(5, BitStream::constant(1)).map_err(err)?;
    let gamma1 = |_: u64| 1u8;
    let fam1 = |i: u32, n: u64| champ[(n + i as u64) as usize];
    let o1 = Construction { k: 5, prefix: vec![0; 120], gamma: &gamma1, alpha: &c, family: &fam1 };

    // random prefix, shifted gamma, explicit x_1 and x_2
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let prefix: Vec<u8> = (0..120).map(|_| rng.random_range(0..2u8)).collect();
    let p2 = TauParams::new(5, BitStream::Champernowne.shift(3))
        .map_err(err)?
        .with_prefix(Word::new(prefix.clone()).map_err(err)?)
        .map_err(err)?
        .with_family(vec![
            BitStream::eventually_periodic(Word::empty(), "01".parse().map_err(err)?).map_err(err)?,
            BitStream::constant(1),
        ]);
    let gamma2 = |n: u64| champ[(n + 3) as usize];
    let fam2 = |i: u32, n: u64| match i {
        1 => alternating(n),
        2 => 1,
        _ => champ[(n + i as u64) as usize],
    };
    let o2 = Construction { k: 5, prefix, gamma: &gamma2, alpha: &c, family: &fam2 };

    for (name, p, o) in [("default", &p1, &o1), ("custom", &p2, &o2)] {
        let want = o.materialize(len);
        let lib = tau_prefix(p, len).map_err(err)?;
        ensure!(lib.bits() == &want[..], "{name}: block concatenation differs from the reference");
        for (n, &b) in want.iter().enumerate() {
            let got = tau_bit(p, n as u64).map_err(err)?;
            ensure!(got == b, "{name}: bit {n} is {got}, reference {b}");
        }
    }
    Ok(())
}

fn pair() -> (TauParams, TauParams) {
    let p = TauParams::new(5, BitStream::constant(1)).unwrap();
    let q = p.clone().with_gamma(BitStream::zeros());
    (p, q)
}

fn reference_pair(len: usize) -> (Vec<u8>, Vec<u8>) {
    let champ = champernowne(source_len(len));
    let c = |n: u64| champ[n as usize];
    let fam = |i: u32, n: u64| champ[(n + i as u64) as usize];
    let one = |_: u64| 1u8;
    let zero = |_: u64| 0u8;
    let a = Construction { k: 5, prefix: vec![0; 120], gamma: &one, alpha: &c, family: &fam }.materialize(len);
    let b = Construction { k: 5, prefix: vec![0; 120], gamma: &zero, alpha: &c, family: &fam }.materialize(len);
    (a, b)
}

fn divergence() -> Outcome {
    let (p, q) = pair();
    let (ra, rb) = reference_pair(2 * fact(8) as usize + 64);
    for m in 6..=8u32 {
        let c = scheduled_divergence_check(&p, &q, 0, m, 64).map_err(err)?;
        ensure!(c.time == 2 * fact(m), "time {}", c.time);
        ensure!(c.precision == 64 && c.numerator == all_ones(64), "m = {m}: numerator {}", c.numerator);
        let n = c.time as usize;
        ensure!(dyadic_numerator(&ra, n, &rb, n, 64) == all_ones(64), "m = {m}: reference disagrees");
        ensure!(c.pass, "m = {m}: not passing");
    }
    Ok(())
}

fn coincidence() -> Outcome {
    let (p, q) = pair();
    for m in 6..=8u32 {
        let c = scheduled_coincidence_check(&p, &q, 0, 0, m, 64).map_err(err)?;
        ensure!(c.time == fact(m) && c.precision == 64, "m = {m}: time {} precision {}", c.time, c.precision);
        ensure!(c.numerator.is_zero() && c.pass, "m = {m}: numerator {}", c.numerator);
    }
    let (ra, rb) = reference_pair(4 * fact(7) as usize);
    for m in 6..=7u32 {
        let c = scheduled_coincidence_check(&p, &q, 0, 1, m, 64).map_err(err)?;
        let want_prec = 64u64.min(2 * fact(m - 2) - 1) as u32;
        ensure!(c.precision == want_prec, "m = {m}: precision {} instead of {want_prec}", c.precision);
        ensure!(c.all_pass(), "m = {m}: shifted check failed: {c:?}");
        let t = (3 * fact(m)) as usize;
        let want = dyadic_numerator(&rb, t, &ra, t + 1, want_prec as usize);
        ensure!(c.numerator == want && want == all_ones(want_prec), "m = {m}: reference numerator {want}");
    }
    Ok(())
}

fn tracking() -> Outcome {
    let p = TauParams::new(5, BitStream::constant(1)).map_err(err)?;
    for m in 10..=11u32 {
        let c = scheduled_tracking_check(&p, 1, 0, m, 64).map_err(err)?;
        ensure!(c.time == 4 * fact(m), "m = {m}: time {}", c.time);
        ensure!(c.numerator.is_zero() && c.precision == 64, "m = {m}: near numerator {}", c.numerator);
        let far = &c.related[0];
        ensure!(far.time == c.time + fact(m) / 2, "m = {m}: far time {}", far.time);
        let want = BigRational::one() - pow2_rational(-64);
        ensure!(far.value == want && far.precision == 64, "m = {m}: far value {}", far.value);
        // direct bit reads through the indexer
        let x1 = p.family_member(1);
        for k in 0..64u64 {
            ensure!(tau_bit(&p, c.time + k).map_err(err)? == x1.bit(c.time + k).map_err(err)?, "m = {m}: bit {k}");
        }
    }
    let c = scheduled_tracking_check_unchecked(&p, 1, 0, 5, 12).map_err(err)?;
    ensure!(c.time == 480 && c.precision == 12 && c.all_pass(), "small stage: {c:?}");
    let len = 1000;
    let champ = champernowne(source_len(len));
    let cf = |n: u64| champ[n as usize];
    let fam = |i: u32, n: u64| champ[(n + i as u64) as usize];
    let one = |_: u64| 1u8;
    let r = Construction { k: 5, prefix: vec![0; 120], gamma: &one, alpha: &cf, family: &fam }.materialize(len);
    let x1: Vec<u8> = (0..len).map(|n| champ[n + 1]).collect();
    ensure!(dyadic_numerator(&x1, 480, &r, 480, 12).is_zero(), "reference near block");
    ensure!(dyadic_numerator(&x1, 540, &r, 540, 12) == all_ones(12), "reference far block");
    ensure!(c.related[0].numerator == all_ones(12), "small stage far numerator");
    Ok(())
}

fn g_negative_bound() -> Outcome {
    let g = PwlMap::g();
    let x = q("-2/3");
    let horizon = 10_000usize;
    let xs = g.iterate(&x, horizon).map_err(err)?;
    let mut candidates: Vec<(i64, i64)> = vec![(0, 1), (1, 1), (1, 2)];
    for den in [3i64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 1021, 65537] {
        candidates.push((1, den));
        candidates.push((den - 1, den));
        candidates.push((den / 3, den));
    }
    let mut seen = std::collections::HashSet::new();
    candidates.retain(|&(p, d)| seen.insert(BigRational::new(p.into(), d.into())));
    ensure!(candidates.len() >= 32, "only {} candidates", candidates.len());
    let bound = q("2/3");
    let mut min = BigRational::from_integer(10.into());
    for &(p0, den) in &candidates {
        let ys = g.iterate(&BigRational::new(p0.into(), den.into()), horizon).map_err(err)?;
        let (mut p, mut xp) = (p0 * 3, -2 * den);
        for n in 0..=horizon {
            let d = (&xs[n] - &ys[n]).abs();
            let reference = BigRational::new((xp - p).abs().into(), (3 * den).into());
            ensure!(d == reference, "y = {p0}/{den}, n = {n}: {d} vs reference {reference}");
            if d < min {
                min = d;
            }
            p = g_step(p, 3 * den);
            xp = g_step(xp, 3 * den);
        }
    }
    ensure!(min >= bound, "minimum distance {min} below 2/3");
    Ok(())
}

fn h_structure() -> Outcome {
    let h = PwlMap::h();
    ensure!(h.image(&iv("-1/2", "0")).map_err(err)? == iv("0", "1/2"), "h[-1/2, 0]");
    ensure!(h.image(&iv("0", "1")).map_err(err)? == iv("0", "1"), "h[0, 1]");
    witness_behaviour(&h, "1/3", iv("-1/2", "-1/4"))
}

fn witness_behaviour(map: &PwlMap, x: &str, v: RationalInterval) -> Outcome {
    let cfg = WitnessConfig::interval_default();
    ensure!(cfg.horizon == 100_000, "horizon {}", cfg.horizon);
    let r = chaos_witness_search_interval(map, &q(x), &v, &cfg).map_err(err)?;
    ensure!(r.found(), "inconclusive: {r:?}");
    let eps = pow2_rational(-20);
    ensure!(r.sup_estimate >= q("1/2") - &eps, "sup {}", r.sup_estimate);
    ensure!(r.inf_estimate <= eps, "inf {}", r.inf_estimate);
    let y = q(&r.y);
    ensure!(v.interior_contains(&y), "partner {y} outside the target");
    // independent replay of the two extreme times
    let (mut a, mut b) = (q(x), y);
    let last = r.sup_time.max(r.inf_time);
    for t in 0..=last {
        let d = (&a - &b).abs();
        if t == r.sup_time {
            ensure!(d == r.sup_estimate, "sup replay {d}");
        }
        if t == r.inf_time {
            ensure!(d == r.inf_estimate, "inf replay {d}");
        }
        a = map.eval(&a).map_err(err)?;
        b = map.eval(&b).map_err(err)?;
    }
    ensure!(replay_witness_report(&r).map_err(err)?, "report replay");
    Ok(())
}

fn tent_witness() -> Outcome {
    witness_behaviour(&PwlMap::tent(), "0", iv("3/10", "2/5"))
}

/// Image of a closed interval under a PWL map from its endpoints and the
/// nodes inside it.
fn reference_image(map: &PwlMap, j: &RationalInterval) -> RationalInterval {
    let mut pts = vec![j.lo.clone(), j.hi.clone()];
    pts.extend(map.xs().iter().filter(|x| j.contains(x)).cloned());
    let ys: Vec<BigRational> = pts.iter().map(|x| map.eval(x).unwrap()).collect();
    RationalInterval::new(ys.iter().min().unwrap().clone(), ys.iter().max().unwrap().clone()).unwrap()
}

fn turbulence_instances() -> Outcome {
    for (name, f) in [("tent", PwlMap::tent()), ("h", PwlMap::h())] {
        let start = Instant::now();
        let ff = f.square().map_err(err)?;
        let out = turbulence_check(&ff).map_err(err)?;
        let c = out.certificate().ok_or(format!("{name}: no certificate"))?;
        ensure!(c.verify(&ff).map_err(err)?, "{name}: certificate does not verify");
        let hull = c.i0.hull(&c.i1);
        for part in [&c.i0, &c.i1] {
            ensure!(reference_image(&ff, part).contains_interval(&hull), "{name}: {part} does not cover {hull}");
        }
        ensure!(c.i0.hi <= c.i1.lo && !c.i0.is_degenerate() && !c.i1.is_degenerate(), "{name}: overlap");
        let report = chaos_implies_turbulence(&f, &WitnessConfig::interval_default(), None).map_err(err)?;
        ensure!(report.status == ImplicationStatus::Holds, "{name}: pipeline {:?}", report.status);
        ensure!(start.elapsed() < Duration::from_secs(1), "{name}: took {:?}", start.elapsed());
    }
    Ok(())
}

fn logistic_desk_checks() -> Outcome {
    let mu = q("5");
    ensure!(!lambda_membership_depth(&mu, &q("1/2"), 1).map_err(err)?, "1/2 survives one step");
    let tol = pow2_rational(-40);
    for word in ["0000000000", "0101010101"] {
        let w: Word = word.parse().map_err(err)?;
        let e = point_from_itinerary(&Branches::Logistic(mu.clone()), &w, &tol).map_err(err)?;
        // |f'| >= sqrt(5) on the surviving cells, so ten inverse steps contract by 5^-5
        let bound = BigRational::new(1.into(), 3125.into()) + &tol;
        ensure!(e.width() <= bound, "{word}: enclosure {e} wider than the contraction bound");
        let half = q("1/2");
        for x0 in [e.lo.clone(), e.midpoint(), e.hi.clone()] {
            let mut x = x0;
            for (k, &s) in w.bits().iter().enumerate() {
                let slack = &tol * BigRational::from_integer(num_bigint::BigInt::from(5u32).pow(k as u32 + 1));
                let cell = if s == 0 { (BigRational::zero(), half.clone()) } else { (half.clone(), BigRational::one()) };
                ensure!(x >= &cell.0 - &slack && x <= &cell.1 + &slack, "{word}: step {k} left cell {s}");
                x = logistic(&mu, &x);
            }
        }
        ensure!(lambda_membership_depth(&mu, &e.midpoint(), 10).map_err(err)?, "{word}: midpoint escapes");
    }
    Ok(())
}

fn eventually_zero_streams() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let len = rng.random_range(0..200usize);
        let bits: Vec<u8> = (0..len).map(|_| rng.random_range(0..2u8)).collect();
        let pre = Word::new(bits).map_err(err)?;
        let s = if rng.random_bool(0.5) {
            BitStream::prefix_then(pre.clone(), BitStream::zeros())
        } else {
            BitStream::eventually_periodic(pre.clone(), "0".parse().map_err(err)?).map_err(err)?
        };
        ensure!(s.is_eventually_zero().map_err(err)?, "{s} not recognised");
        let tail = s.shift(len as u64);
        ensure!(tail.prefix(512).map_err(err)? == Word::repeat(0, 512), "{s}: tail not zero");
        ensure!(truncated_distance(&tail, &BitStream::zeros(), 64).map_err(err)?.is_zero(), "{s}: distance");
        let series = distance_series(&ShiftSpace, &s, &BitStream::zeros(), len as u64 + 5, 64, ScanMode::Sequential)
            .map_err(err)?;
        ensure!(series.entries[len..].iter().all(|e| e.value.is_zero()), "{s}: series not eventually 0");
    }
    Ok(())
}

fn reproducibility() -> Outcome {
    let commands: Vec<Vec<&str>> = vec![
        vec!["tau", "bit", "--n", "360"],
        vec!["tau", "dump", "--len", "720"],
        vec!["schedule", "divergence", "--m", "7"],
        vec!["schedule", "coincidence", "--i", "0", "--j", "1", "--m", "6"],
        vec!["schedule", "tracking", "--i", "1", "--j", "0", "--m", "10"],
        vec!["pairscan", "--map", "tent", "--x", "2/7", "--y", "4/7", "--n-iter", "6"],
        vec!["pairscan", "--x", "champ", "--y", "shift(champ,1)", "--n-iter", "50", "--format", "json"],
        vec!["witness", "--map", "shift", "--x", "champ", "--V", "0110"],
        vec!["witness", "--map", "tent", "--x", "0", "--V", "3/10,2/5"],
        vec!["turbulence", "--map", "h", "--square"],
        vec!["turbulence", "--map", "tent", "--pipeline", "--seed", "3"],
    ];
    for cmd in &commands {
        let first = run_captured(cmd.iter().copied());
        let second = run_captured(cmd.iter().copied());
        ensure!(first == second, "{cmd:?} differs between runs");
        ensure!(first.0 == 0, "{cmd:?} exited {}: {}", first.0, first.2);
    }
    let x: BitStream = "champ".parse().map_err(err)?;
    let y: BitStream = "witness(champ,0110)".parse().map_err(err)?;
    let seq = distance_series(&ShiftSpace, &x, &y, 4096, 64, ScanMode::Sequential).map_err(err)?;
    let par = distance_series(&ShiftSpace, &x, &y, 4096, 64, ScanMode::Parallel).map_err(err)?;
    ensure!(seq == par, "shift scans differ");
    let tent = PwlMap::tent();
    let seq = distance_series(&tent, &q("1/3"), &q("2/7"), 2000, 64, ScanMode::Sequential).map_err(err)?;
    let par = distance_series(&tent, &q("1/3"), &q("2/7"), 2000, 64, ScanMode::Parallel).map_err(err)?;
    ensure!(seq == par && seq.to_csv() == par.to_csv(), "tent scans differ");
    let mut cfg = WitnessConfig::shift_default();
    cfg.mode = ScanMode::Sequential;
    let a = chaos_witness_search_shift(&x, &"0110".parse().map_err(err)?, &cfg).map_err(err)?;
    cfg.mode = ScanMode::Parallel;
    let b = chaos_witness_search_shift(&x, &"0110".parse().map_err(err)?, &cfg).map_err(err)?;
    ensure!(a == b, "shift witness reports differ by scan mode");
    let mut cfg = WitnessConfig::interval_default();
    cfg.mode = ScanMode::Sequential;
    let a = chaos_witness_search_interval(&tent, &q("0"), &iv("3/10", "2/5"), &cfg).map_err(err)?;
    cfg.mode = ScanMode::Parallel;
    let b = chaos_witness_search_interval(&tent, &q("0"), &iv("3/10", "2/5"), &cfg).map_err(err)?;
    ensure!(a == b, "interval witness reports differ by scan mode");
    Ok(())
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "layout identities", budget: Some(secs(1)), run: layout_identities },
        Criterion { id: 2, name: "indexer agrees with materialization", budget: Some(secs(5)), run: indexer_oracle },
        Criterion { id: 3, name: "divergence at 2 m! + s (m-1)!", budget: Some(secs(1)), run: divergence },
        Criterion { id: 4, name: "coincidence and shifted pattern tail", budget: Some(secs(1)), run: coincidence },
        Criterion { id: 5, name: "tracking of x_1 in its Bhat block", budget: Some(secs(5)), run: tracking },
        Criterion { id: 6, name: "g keeps -2/3 at distance >= 2/3", budget: Some(secs(10)), run: g_negative_bound },
        Criterion { id: 7, name: "h images and witness into (-1/2, -1/4)", budget: None, run: h_structure },
        Criterion { id: 8, name: "tent witness into (3/10, 2/5)", budget: None, run: tent_witness },
        Criterion { id: 9, name: "turbulence of T.T and h.h, implication holds", budget: None, run: turbulence_instances },
        Criterion { id: 10, name: "logistic membership and itinerary enclosures", budget: None, run: logistic_desk_checks },
        Criterion { id: 11, name: "eventually-zero streams", budget: None, run: eventually_zero_streams },
        Criterion { id: 12, name: "reproducible output, scan modes agree", budget: None, run: reproducibility },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut result = (c.run)();
        let elapsed = start.elapsed();
        if let (Ok(()), Some(budget)) = (&result, c.budget) {
            if elapsed > budget {
                result = Err(format!("took {elapsed:.2?}, budget {budget:?}"));
            }
        }
        match result {
            Ok(()) => println!("criterion {:>2} PASS  {} ({elapsed:.2?})", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {} ({elapsed:.2?}): {msg}", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
