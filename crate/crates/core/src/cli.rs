//! The `symchaos` command line.
//!
//! Every command prints JSON (or CSV for `pairscan`) to stdout or to `--out`.
//! Exit codes: 0 success, 1 failed check / inconclusive search / guard
//! violation, 2 usage or parse error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Command, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bitseq::{BitStream, Word, DEFAULT_PRECISION};
use crate::error::{Error, Result};
use crate::interval::{MapSpec, PwlMap, RationalInterval};
use crate::rational::{parse_rational, to_decimal};
use crate::tau::{tau_bit, tau_prefix, tau_segment, TauParams, DEFAULT_K, MAX_STAGE};
use crate::turbulence::{chaos_implies_turbulence, turbulence_check, ImplicationStatus};
use crate::witness::{
    chaos_witness_search_interval, chaos_witness_search_shift, distance_series, scheduled_coincidence_check,
    scheduled_divergence_check, scheduled_tracking_check, scheduled_tracking_check_unchecked, DistanceSeries,
    LogisticSystem, ScanMode, ShiftSpace, WitnessConfig,
};

#[derive(Parser, Debug)]
#[command(name = "symchaos", version, about = "Exact symbolic dynamics: scrambled sets, chaos witnesses, turbulence")]
struct Cli {
    /// Flat key=value file; keys mirror the long flags of the chosen command.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Bits, segments and prefixes of the factorial construction.
    #[command(subcommand)]
    Tau(TauCmd),
    /// Exact checks at the scheduled times.
    #[command(subcommand)]
    Schedule(ScheduleCmd),
    /// Distance series of an orbit pair as CSV or JSON.
    Pairscan(PairscanArgs),
    /// Search for a chaos witness in a target set.
    Witness(WitnessArgs),
    /// Turbulence certificate of a piecewise-linear map.
    Turbulence(TurbulenceArgs),
}

#[derive(Args, Debug, Clone)]
struct TauArgs {
    #[arg(long, default_value_t = DEFAULT_K)]
    k: u32,
    /// Binary word of length k!; all zeros when omitted.
    #[arg(long)]
    prefix: Option<String>,
    #[arg(long, default_value = "const1")]
    gamma: String,
    /// Explicit x_1; x_2; ... separated by ';'.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value = "champ")]
    alpha: String,
    #[arg(long, default_value_t = MAX_STAGE)]
    max_stage: u32,
}

impl TauArgs {
    fn params_with_gamma(&self, gamma: &str) -> Result<TauParams> {
        let mut p = TauParams::new(self.k, gamma.parse()?)?.with_alpha(self.alpha.parse()?);
        if let Some(prefix) = &self.prefix {
            p = p.with_prefix(prefix.parse()?)?;
        }
        if let Some(family) = &self.family {
            let members = family
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse)
                .collect::<Result<Vec<BitStream>>>()?;
            p = p.with_family(members);
        }
        p.with_max_stage(self.max_stage)
    }

    fn params(&self) -> Result<TauParams> {
        self.params_with_gamma(&self.gamma)
    }
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum TauCmd {
    /// Bit n with the segment it comes from.
    Bit {
        #[command(flatten)]
        tau: TauArgs,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Segment holding position n.
    Segment {
        #[command(flatten)]
        tau: TauArgs,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        output: Output,
    },
    /// The first `len` bits as ASCII 0/1.
    Dump {
        #[command(flatten)]
        tau: TauArgs,
        #[arg(long)]
        len: usize,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand, Debug)]
enum ScheduleCmd {
    /// Runs of gamma_s against beta_s at time 2 m! + s (m-1)!.
    Divergence {
        #[command(flatten)]
        tau: TauArgs,
        /// Gamma of the second sequence.
        #[arg(long, default_value = "const0")]
        beta: String,
        #[arg(long, default_value_t = 0)]
        s: u32,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Alpha-copy agreement (i = j) or pattern-tail alignment (i < j).
    Coincidence {
        #[command(flatten)]
        tau: TauArgs,
        #[arg(long, default_value = "const0")]
        beta: String,
        #[arg(long, default_value_t = 0)]
        i: u64,
        #[arg(long, default_value_t = 0)]
        j: u64,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Tracking of x_i by the j-th shift inside its Bhat block.
    Tracking {
        #[command(flatten)]
        tau: TauArgs,
        #[arg(long, default_value_t = 1)]
        i: u32,
        #[arg(long, default_value_t = 0)]
        j: u64,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: u32,
        /// Drop the stage condition m > k + i + j + 3.
        #[arg(long)]
        relax_stage: bool,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sequential,
    Parallel,
}

impl From<Mode> for ScanMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Sequential => ScanMode::Sequential,
            Mode::Parallel => ScanMode::Parallel,
        }
    }
}

#[derive(Args, Debug)]
struct PairscanArgs {
    /// `shift`, `tent`, `g`, `h`, `logistic:<mu>` or `pwl: (x,y) ...`.
    #[arg(long, default_value = "shift")]
    map: String,
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    #[arg(long, allow_hyphen_values = true)]
    y: String,
    /// Number of iterates, rows n = 0 .. N-1.
    #[arg(long = "n-iter", alias = "N")]
    n_iter: u64,
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    precision: u32,
    #[arg(long, value_enum, default_value_t = Mode::Parallel)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct WitnessArgs {
    #[arg(long, default_value = "shift")]
    map: String,
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// Cylinder word for `shift`, open interval `lo,hi` otherwise.
    #[arg(long = "V", alias = "target", allow_hyphen_values = true)]
    v: Option<String>,
    /// Neighbourhood `(x - r, x + r)` of x as the target set.
    #[arg(long = "li-yorke", value_name = "R", conflicts_with = "v")]
    li_yorke: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    precision: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Parallel)]
    mode: Mode,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct TurbulenceArgs {
    #[arg(long)]
    map: String,
    /// Test `f ∘ f` instead of `f`.
    #[arg(long)]
    square: bool,
    /// Run the fixed-point witness search first and test `f ∘ f`.
    #[arg(long)]
    pipeline: bool,
    /// Target set for the pipeline; sampled from the seed when omitted.
    #[arg(long = "V", alias = "target", allow_hyphen_values = true)]
    v: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

/// Outcome of a command before it is written.
struct Outcome {
    text: String,
    ok: bool,
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Internal(e.to_string()))
}

fn parse_word(s: &str) -> Result<Word> {
    s.trim().parse()
}

#[derive(Serialize)]
struct BitReport {
    n: u64,
    bit: u8,
    segment: String,
}

fn cmd_tau(cmd: &TauCmd) -> Result<(Outcome, Option<PathBuf>)> {
    match cmd {
        TauCmd::Bit { tau, n, output } => {
            let p = tau.params()?;
            let segment = tau_segment(&p, *n)?;
            let bit = tau_bit(&p, *n)?;
            let text = json(&BitReport { n: *n, bit, segment: segment.to_string() })?;
            Ok((Outcome { text, ok: true }, output.out.clone()))
        }
        TauCmd::Segment { tau, n, output } => {
            let p = tau.params()?;
            let segment = tau_segment(&p, *n)?;
            let bit = segment.resolve(&p)?;
            let text = json(&BitReport { n: *n, bit, segment: segment.to_string() })?;
            Ok((Outcome { text, ok: true }, output.out.clone()))
        }
        TauCmd::Dump { tau, len, output } => {
            let p = tau.params()?;
            let word = tau_prefix(&p, *len)?;
            Ok((Outcome { text: format!("{word}\n"), ok: true }, output.out.clone()))
        }
    }
}

fn cmd_schedule(cmd: &ScheduleCmd) -> Result<(Outcome, Option<PathBuf>)> {
    let (check, out) = match cmd {
        ScheduleCmd::Divergence { tau, beta, s, m, precision, output } => {
            let p = tau.params()?;
            let q = tau.params_with_gamma(beta)?;
            (scheduled_divergence_check(&p, &q, *s, *m, *precision)?, output.out.clone())
        }
        ScheduleCmd::Coincidence { tau, beta, i, j, m, precision, output } => {
            let p = tau.params()?;
            let q = tau.params_with_gamma(beta)?;
            (scheduled_coincidence_check(&p, &q, *i, *j, *m, *precision)?, output.out.clone())
        }
        ScheduleCmd::Tracking { tau, i, j, m, precision, relax_stage, output } => {
            let p = tau.params()?;
            let c = if *relax_stage {
                scheduled_tracking_check_unchecked(&p, *i, *j, *m, *precision)?
            } else {
                scheduled_tracking_check(&p, *i, *j, *m, *precision)?
            };
            (c, output.out.clone())
        }
    };
    Ok((Outcome { text: json(&check)?, ok: check.all_pass() }, out))
}

#[derive(Serialize)]
struct SeriesRow {
    n: u64,
    numerator: String,
    precision: String,
    decimal: String,
}

fn series_output(series: &DistanceSeries, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(series.to_csv()),
        Format::Json => {
            let rows: Vec<SeriesRow> = series
                .entries
                .iter()
                .map(|e| SeriesRow {
                    n: e.n,
                    numerator: series.numerator_text(e),
                    precision: series.precision_text(),
                    decimal: to_decimal(&e.value),
                })
                .collect();
            json(&rows)
        }
    }
}

fn cmd_pairscan(a: &PairscanArgs) -> Result<(Outcome, Option<PathBuf>)> {
    let mode = a.mode.into();
    let series = if a.map.trim() == "shift" {
        let x: BitStream = a.x.parse()?;
        let y: BitStream = a.y.parse()?;
        distance_series(&ShiftSpace, &x, &y, a.n_iter, a.precision, mode)?
    } else {
        let (x, y) = (parse_rational(&a.x)?, parse_rational(&a.y)?);
        match a.map.parse::<MapSpec>()? {
            MapSpec::Pwl(m) => distance_series(&m, &x, &y, a.n_iter, a.precision, mode)?,
            MapSpec::Logistic(mu) => distance_series(&LogisticSystem::new(mu), &x, &y, a.n_iter, a.precision, mode)?,
        }
    };
    Ok((Outcome { text: series_output(&series, a.format)?, ok: true }, a.output.out.clone()))
}

fn parse_pwl(spec: &str) -> Result<PwlMap> {
    match spec.parse::<MapSpec>()? {
        MapSpec::Pwl(m) => Ok(m),
        MapSpec::Logistic(_) => Err(Error::Argument("this command needs a piecewise-linear map".into())),
    }
}

fn cmd_witness(a: &WitnessArgs) -> Result<(Outcome, Option<PathBuf>)> {
    let shift = a.map.trim() == "shift";
    let mut cfg = if shift { WitnessConfig::shift_default() } else { WitnessConfig::interval_default() };
    if let Some(d) = &a.delta {
        cfg.delta = parse_rational(d)?;
    }
    if let Some(e) = &a.epsilon {
        cfg.epsilon = parse_rational(e)?;
    }
    if let Some(h) = a.horizon {
        cfg.horizon = h;
    }
    cfg.precision = a.precision;
    cfg.seed = a.seed;
    cfg.mode = a.mode.into();
    let report = if shift {
        let x: BitStream = a.x.parse()?;
        let w = match (&a.v, &a.li_yorke) {
            (Some(v), _) => parse_word(v)?,
            (None, Some(r)) => {
                let r: usize = r.trim().parse().map_err(|_| Error::parse(0, "cylinder radius must be a bit count"))?;
                x.prefix(r)?
            }
            (None, None) => return Err(Error::Argument("a target set is required: --V or --li-yorke".into())),
        };
        chaos_witness_search_shift(&x, &w, &cfg)?
    } else {
        let map = parse_pwl(&a.map)?;
        let x = parse_rational(&a.x)?;
        let v = match (&a.v, &a.li_yorke) {
            (Some(v), _) => v.parse::<RationalInterval>()?,
            (None, Some(r)) => {
                let r = parse_rational(r)?;
                RationalInterval::new(&x - &r, &x + &r)?
            }
            (None, None) => return Err(Error::Argument("a target set is required: --V or --li-yorke".into())),
        };
        chaos_witness_search_interval(&map, &x, &v, &cfg)?
    };
    Ok((Outcome { text: json(&report)?, ok: report.found() }, a.output.out.clone()))
}

fn cmd_turbulence(a: &TurbulenceArgs) -> Result<(Outcome, Option<PathBuf>)> {
    let map = parse_pwl(&a.map)?;
    if a.pipeline {
        let mut cfg = WitnessConfig::interval_default();
        cfg.seed = a.seed;
        if let Some(h) = a.horizon {
            cfg.horizon = h;
        }
        let target = a.v.as_deref().map(str::parse::<RationalInterval>).transpose()?;
        let report = chaos_implies_turbulence(&map, &cfg, target)?;
        let ok = report.status == ImplicationStatus::Holds;
        return Ok((Outcome { text: json(&report)?, ok }, a.output.out.clone()));
    }
    let tested = if a.square { map.square()? } else { map };
    let outcome = turbulence_check(&tested)?;
    let ok = outcome.certificate().is_some();
    Ok((Outcome { text: json(&outcome)?, ok }, a.output.out.clone()))
}

/// Reads `key = value` lines into long flags. `true`/`false` values toggle
/// bare flags.
fn config_args(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(lineno + 1, format!("expected key=value on line {}", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::parse(lineno + 1, format!("empty key on line {}", lineno + 1)));
        }
        match v {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => out.push(format!("--{k}={v}")),
        }
    }
    Ok(out)
}

const NESTED: [&str; 2] = ["tau", "schedule"];

/// Moves `--config FILE` out of `args` and splices the file's flags in right
/// after the subcommand names, so flags given on the command line win.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    if let Some(prog) = it.next() {
        rest.push(prog);
    }
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().ok_or_else(|| Error::Argument("--config needs a file".into()))?);
        } else if let Some(path) = a.strip_prefix("--config=") {
            config = Some(path.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::Argument(format!("cannot read config {path}: {e}")))?;
    let extra = config_args(&text)?;
    let mut at = 1;
    if rest.get(1).is_some_and(|s| !s.starts_with('-')) {
        at = 2;
        if NESTED.contains(&rest[1].as_str()) && rest.get(2).is_some_and(|s| !s.starts_with('-')) {
            at = 3;
        }
    }
    let tail = rest.split_off(at);
    rest.extend(extra);
    rest.extend(tail);
    Ok(rest)
}

fn allow_repeats(cmd: Command) -> Command {
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let mut cmd = cmd.args_override_self(true);
    for n in names {
        cmd = cmd.mut_subcommand(n, allow_repeats);
    }
    cmd
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_) | Error::Parse { .. } => 2,
        _ => 1,
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let matches = match allow_repeats(Cli::command()).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return 2;
        }
    };
    let result = match &cli.command {
        Cmd::Tau(c) => cmd_tau(c),
        Cmd::Schedule(c) => cmd_schedule(c),
        Cmd::Pairscan(a) => cmd_pairscan(a),
        Cmd::Witness(a) => cmd_witness(a),
        Cmd::Turbulence(a) => cmd_turbulence(a),
    };
    match result {
        Ok((outcome, path)) => {
            let written = match path {
                Some(p) => fs::write(&p, outcome.text.as_bytes()).map_err(|e| format!("cannot write {}: {e}", p.display())),
                None => out.write_all(outcome.text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(msg) = written {
                let _ = writeln!(err, "error: {msg}");
                return 1;
            }
            if outcome.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Convenience for tests: runs and captures stdout, stderr and the exit code.
pub fn run_captured<I, S>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut argv = vec!["symchaos".to_string()];
    argv.extend(args.into_iter().map(Into::into));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}
