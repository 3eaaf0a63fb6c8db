//! Experiment runner: parses flat key-value configuration files, executes
//! solve/simulate sweeps over a worker pool and emits CSV for external
//! plotting.
//!
//! # Configuration format
//!
//! Plain text with `[section]` headers and `key = value` lines; `#` starts a
//! comment. Sections: `[system]`, `[channels]`, `[sweep]` (optional) and
//! `[output]`. Numbers accept a plain float or a fraction like `1/30`.
//!
//! ```text
//! [system]
//! e_max = 30
//! quant_levels = 15
//! carriers = 1
//! coding = variable            # constant | variable
//! csi = full                   # full | partial | statistical
//! slot_duration = 1.0
//! arrival = truncated_geometric  # deterministic | bernoulli | truncated_geometric
//! arrival_amount = 1             # deterministic / bernoulli quanta
//! arrival_p = 0.5                # bernoulli success probability
//! arrival_b_max = 6              # truncated geometric support cap
//! arrival_mean = 1.0             # truncated geometric target mean
//!
//! [channels]
//! legit = gamma m=1 mean=1.0
//! eave = discrete gains=1/30,3/30 probs=0.7,0.3
//! legit_2 = gamma m=5 mean=2.0   # per-carrier override, 1-based
//!
//! [sweep]
//! parameter = e_max              # e_max | carriers | eave_bad_prob | mean_ratio
//! values = 2,5,10,20,30
//! variants = FULL,PAR-CON,PAR-VAR,STAT
//! splitter = optimal             # optimal | uniform
//!
//! [output]
//! dir = out
//! ```
//!
//! Unset keys fall back to the defaults shown above. Sweeping `e_max` below
//! the arrival support lumps the excess arrival mass at the new capacity,
//! which leaves the battery dynamics untouched.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::mdp::{self, SolveOptions, SolveReport};
use crate::models::{ArrivalProcess, Coding, Csi, FadingModel, ModelError, SystemConfig};
use crate::powersplit::Splitter;
use crate::sim::{self, SimOptions};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Configuration parse error with position diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { line, field: field.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}, field '{}': {}", self.line, self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug)]
pub enum ExperimentError {
    Config(ConfigError),
    Model(ModelError),
    Io(io::Error),
    Unsupported { what: String },
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Model(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
            Self::Unsupported { what } => write!(f, "unsupported: {what}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<ConfigError> for ExperimentError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}
impl From<ModelError> for ExperimentError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}
impl From<io::Error> for ExperimentError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

// ---------------------------------------------------------------------------
// Experiment description
// ---------------------------------------------------------------------------

/// The four solvable scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Full,
    ParCon,
    ParVar,
    Stat,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::ParCon, Variant::ParVar, Variant::Stat];

    /// Rewrites the channel-knowledge and coding fields of a configuration.
    pub fn apply(&self, cfg: &mut SystemConfig) {
        match self {
            Variant::Full => cfg.csi = Csi::Full,
            Variant::ParCon => {
                cfg.csi = Csi::Partial;
                cfg.coding = Coding::Constant;
            }
            Variant::ParVar => {
                cfg.csi = Csi::Partial;
                cfg.coding = Coding::Variable;
            }
            Variant::Stat => {
                cfg.csi = Csi::Statistical;
                cfg.coding = Coding::Constant;
            }
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FULL" => Some(Self::Full),
            "PAR-CON" | "PARCON" => Some(Self::ParCon),
            "PAR-VAR" | "PARVAR" => Some(Self::ParVar),
            "STAT" => Some(Self::Stat),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => write!(f, "FULL"),
            Self::ParCon => write!(f, "PAR-CON"),
            Self::ParVar => write!(f, "PAR-VAR"),
            Self::Stat => write!(f, "STAT"),
        }
    }
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    EMax,
    Carriers,
    EaveBadProb,
    MeanRatio,
}

impl SweepParam {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "e_max" => Some(Self::EMax),
            "carriers" | "n" => Some(Self::Carriers),
            "eave_bad_prob" => Some(Self::EaveBadProb),
            "mean_ratio" => Some(Self::MeanRatio),
            _ => None,
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EMax => write!(f, "e_max"),
            Self::Carriers => write!(f, "carriers"),
            Self::EaveBadProb => write!(f, "eave_bad_prob"),
            Self::MeanRatio => write!(f, "mean_ratio"),
        }
    }
}

/// A parsed experiment: base configuration plus the run matrix.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub sweep: Option<(SweepParam, Vec<f64>)>,
    pub variants: Vec<Variant>,
    pub splitter: Splitter,
    pub out_dir: PathBuf,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Accepts a float literal or a fraction like `3/30`.
fn parse_number(line: usize, field: &str, raw: &str) -> Result<f64, ConfigError> {
    let raw = raw.trim();
    if let Some((num, den)) = raw.split_once('/') {
        let n: f64 = num.trim().parse().map_err(|_| {
            ConfigError::new(line, field, format!("bad fraction numerator '{num}'"))
        })?;
        let d: f64 = den.trim().parse().map_err(|_| {
            ConfigError::new(line, field, format!("bad fraction denominator '{den}'"))
        })?;
        if d == 0.0 {
            return Err(ConfigError::new(line, field, "fraction with zero denominator"));
        }
        return Ok(n / d);
    }
    raw.parse()
        .map_err(|_| ConfigError::new(line, field, format!("expected a number, got '{raw}'")))
}

fn parse_integer(line: usize, field: &str, raw: &str) -> Result<u64, ConfigError> {
    raw.trim()
        .parse()
        .map_err(|_| ConfigError::new(line, field, format!("expected an integer, got '{raw}'")))
}

fn parse_number_list(line: usize, field: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_number(line, field, s))
        .collect()
}

/// One `key = value` occurrence with its line number.
type Entry = (usize, String);

fn parse_fading_model(line: usize, field: &str, raw: &str) -> Result<FadingModel, ConfigError> {
    let mut tokens = raw.split_whitespace();
    let kind = tokens
        .next()
        .ok_or_else(|| ConfigError::new(line, field, "empty channel model"))?;
    let mut kv = HashMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line, field, format!("expected key=value, got '{tok}'")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    match kind.to_ascii_lowercase().as_str() {
        "gamma" => {
            let m = parse_number(line, field, kv.get("m").map(String::as_str).unwrap_or("1"))?;
            let mean = parse_number(line, field, kv.get("mean").map(String::as_str).unwrap_or("1"))?;
            FadingModel::gamma(m, mean)
                .map_err(|e| ConfigError::new(line, field, e.to_string()))
        }
        "discrete" => {
            let gains = kv
                .get("gains")
                .ok_or_else(|| ConfigError::new(line, field, "discrete model needs gains=..."))?;
            let probs = kv
                .get("probs")
                .ok_or_else(|| ConfigError::new(line, field, "discrete model needs probs=..."))?;
            let gains = parse_number_list(line, field, gains)?;
            let probs = parse_number_list(line, field, probs)?;
            FadingModel::discrete(gains, probs)
                .map_err(|e| ConfigError::new(line, field, e.to_string()))
        }
        other => Err(ConfigError::new(line, field, format!("unknown channel model '{other}'"))),
    }
}

/// Parses the full experiment description from configuration text.
pub fn parse_experiment(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let mut sections: HashMap<String, HashMap<String, Entry>> = HashMap::new();
    let mut current = String::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(line_no, line, "unterminated section header"))?
                .trim()
                .to_ascii_lowercase();
            if !matches!(name.as_str(), "system" | "channels" | "sweep" | "output") {
                return Err(ConfigError::new(line_no, name, "unknown section"));
            }
            current = name;
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line_no, line, "expected key = value"))?;
        if current.is_empty() {
            return Err(ConfigError::new(line_no, key.trim(), "key outside any [section]"));
        }
        sections
            .entry(current.clone())
            .or_default()
            .insert(key.trim().to_ascii_lowercase(), (line_no, value.trim().to_string()));
    }

    let empty = HashMap::new();
    let system = sections.get("system").unwrap_or(&empty);
    let channels = sections.get("channels").unwrap_or(&empty);
    let sweep_sec = sections.get("sweep").unwrap_or(&empty);
    let output = sections.get("output").unwrap_or(&empty);

    let get = |map: &HashMap<String, Entry>, key: &str| -> Option<Entry> { map.get(key).cloned() };

    let e_max = match get(system, "e_max") {
        Some((l, v)) => parse_integer(l, "e_max", &v)? as u32,
        None => 30,
    };
    let quant_levels = match get(system, "quant_levels") {
        Some((l, v)) => parse_integer(l, "quant_levels", &v)? as usize,
        None => 15,
    };
    let carriers = match get(system, "carriers") {
        Some((l, v)) => parse_integer(l, "carriers", &v)? as usize,
        None => 1,
    };
    let coding = match get(system, "coding") {
        Some((l, v)) => match v.to_ascii_lowercase().as_str() {
            "constant" => Coding::Constant,
            "variable" => Coding::Variable,
            other => return Err(ConfigError::new(l, "coding", format!("unknown coding '{other}'"))),
        },
        None => Coding::Variable,
    };
    let csi = match get(system, "csi") {
        Some((l, v)) => match v.to_ascii_lowercase().as_str() {
            "full" => Csi::Full,
            "partial" => Csi::Partial,
            "statistical" => Csi::Statistical,
            other => return Err(ConfigError::new(l, "csi", format!("unknown csi '{other}'"))),
        },
        None => Csi::Full,
    };
    let slot_duration = match get(system, "slot_duration") {
        Some((l, v)) => parse_number(l, "slot_duration", &v)?,
        None => 1.0,
    };
    let arrival_kind = get(system, "arrival").map(|(_, v)| v.to_ascii_lowercase());
    let arrivals = match arrival_kind.as_deref().unwrap_or("truncated_geometric") {
        "deterministic" => {
            let (l, v) = get(system, "arrival_amount")
                .unwrap_or((0, "1".into()));
            ArrivalProcess::deterministic(parse_integer(l, "arrival_amount", &v)? as u32)
        }
        "bernoulli" => {
            let (lp, p) = get(system, "arrival_p").unwrap_or((0, "0.5".into()));
            let (la, amount) = get(system, "arrival_amount").unwrap_or((0, "1".into()));
            ArrivalProcess::bernoulli(
                parse_number(lp, "arrival_p", &p)?,
                parse_integer(la, "arrival_amount", &amount)? as u32,
            )
            .map_err(|e| ConfigError::new(lp, "arrival_p", e.to_string()))?
        }
        "truncated_geometric" => {
            let (lb, b_max) = get(system, "arrival_b_max").unwrap_or((0, "6".into()));
            let (lm, mean) = get(system, "arrival_mean").unwrap_or((0, "1.0".into()));
            ArrivalProcess::truncated_geometric(
                parse_integer(lb, "arrival_b_max", &b_max)? as u32,
                parse_number(lm, "arrival_mean", &mean)?,
            )
            .map_err(|e| ConfigError::new(lm, "arrival_mean", e.to_string()))?
        }
        other => {
            let l = get(system, "arrival").map(|(l, _)| l).unwrap_or(0);
            return Err(ConfigError::new(l, "arrival", format!("unknown arrival process '{other}'")));
        }
    };

    let legit_default = match get(channels, "legit") {
        Some((l, v)) => parse_fading_model(l, "legit", &v)?,
        None => FadingModel::gamma(1.0, 1.0).expect("valid default"),
    };
    let eave_default = match get(channels, "eave") {
        Some((l, v)) => parse_fading_model(l, "eave", &v)?,
        None => FadingModel::gamma(1.0, 1.0).expect("valid default"),
    };
    let mut legit = vec![legit_default; carriers];
    let mut eave = vec![eave_default; carriers];
    for (key, (l, v)) in channels {
        if let Some(idx) = key.strip_prefix("legit_") {
            let idx: usize = idx.parse().map_err(|_| {
                ConfigError::new(*l, key.as_str(), "carrier index must be an integer")
            })?;
            if idx == 0 || idx > carriers {
                return Err(ConfigError::new(*l, key.as_str(), format!("carrier index out of 1..={carriers}")));
            }
            legit[idx - 1] = parse_fading_model(*l, key, v)?;
        } else if let Some(idx) = key.strip_prefix("eave_") {
            let idx: usize = idx.parse().map_err(|_| {
                ConfigError::new(*l, key.as_str(), "carrier index must be an integer")
            })?;
            if idx == 0 || idx > carriers {
                return Err(ConfigError::new(*l, key.as_str(), format!("carrier index out of 1..={carriers}")));
            }
            eave[idx - 1] = parse_fading_model(*l, key, v)?;
        } else if key != "legit" && key != "eave" {
            return Err(ConfigError::new(*l, key.as_str(), "unknown channel key"));
        }
    }

    let base = SystemConfig {
        e_max,
        arrivals,
        n_carriers: carriers,
        legit,
        eave,
        quant_levels,
        coding,
        csi,
        slot_duration,
    };
    base.validate().map_err(|e| ConfigError::new(0, "system", e.to_string()))?;

    let sweep = match get(sweep_sec, "parameter") {
        Some((l, v)) => {
            let param = SweepParam::parse(&v)
                .ok_or_else(|| ConfigError::new(l, "parameter", format!("unknown sweep parameter '{v}'")))?;
            let (lv, values) = get(sweep_sec, "values")
                .ok_or_else(|| ConfigError::new(l, "values", "sweep needs a values list"))?;
            let values = parse_number_list(lv, "values", &values)?;
            if values.is_empty() {
                return Err(ConfigError::new(lv, "values", "sweep values list is empty"));
            }
            for &v in &values {
                validate_sweep_value(lv, param, v)?;
            }
            Some((param, values))
        }
        None => None,
    };
    let variants = match get(sweep_sec, "variants") {
        Some((l, v)) => {
            let mut out = Vec::new();
            for tok in v.split(',') {
                if tok.trim().is_empty() {
                    continue;
                }
                out.push(Variant::parse(tok).ok_or_else(|| {
                    ConfigError::new(l, "variants", format!("unknown variant '{}'", tok.trim()))
                })?);
            }
            if out.is_empty() {
                return Err(ConfigError::new(l, "variants", "variant list is empty"));
            }
            out
        }
        None => vec![match (csi, coding) {
            (Csi::Full, _) => Variant::Full,
            (Csi::Partial, Coding::Constant) => Variant::ParCon,
            (Csi::Partial, Coding::Variable) => Variant::ParVar,
            (Csi::Statistical, _) => Variant::Stat,
        }],
    };
    let splitter = match get(sweep_sec, "splitter") {
        Some((l, v)) => match v.to_ascii_lowercase().as_str() {
            "optimal" => Splitter::Optimal,
            "uniform" => Splitter::Uniform,
            other => return Err(ConfigError::new(l, "splitter", format!("unknown splitter '{other}'"))),
        },
        None => Splitter::Optimal,
    };
    let out_dir = match get(output, "dir") {
        Some((_, v)) => PathBuf::from(v),
        None => PathBuf::from("out"),
    };

    Ok(ExperimentSpec { base, sweep, variants, splitter, out_dir })
}

fn validate_sweep_value(line: usize, param: SweepParam, v: f64) -> Result<(), ConfigError> {
    let ok = match param {
        SweepParam::EMax | SweepParam::Carriers => v >= 1.0 && v.fract() == 0.0,
        SweepParam::EaveBadProb => (0.0..=1.0).contains(&v),
        SweepParam::MeanRatio => v > 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(line, "values", format!("value {v} invalid for {param}")))
    }
}

/// Instantiates the base configuration at one sweep point.
pub fn apply_sweep(base: &SystemConfig, param: SweepParam, value: f64) -> Result<SystemConfig, ExperimentError> {
    let mut cfg = base.clone();
    match param {
        SweepParam::EMax => {
            let e_max = value as u32;
            cfg.e_max = e_max;
            cfg.arrivals = cfg.arrivals.lump_to_capacity(e_max);
        }
        SweepParam::Carriers => {
            let n = value as usize;
            cfg.n_carriers = n;
            cfg.legit = vec![base.legit[0].clone(); n];
            cfg.eave = vec![base.eave[0].clone(); n];
        }
        SweepParam::EaveBadProb => {
            for model in &mut cfg.eave {
                let FadingModel::Discrete { gains, .. } = model else {
                    return Err(ExperimentError::Unsupported {
                        what: "eave_bad_prob sweep needs two-point discrete eavesdropper models".into(),
                    });
                };
                if gains.len() != 2 {
                    return Err(ExperimentError::Unsupported {
                        what: "eave_bad_prob sweep needs two-point discrete eavesdropper models".into(),
                    });
                }
                *model = FadingModel::discrete(gains.clone(), vec![value, 1.0 - value])?;
            }
        }
        SweepParam::MeanRatio => {
            for (l, e) in cfg.legit.iter_mut().zip(&cfg.eave) {
                let FadingModel::Gamma { shape, .. } = l else {
                    return Err(ExperimentError::Unsupported {
                        what: "mean_ratio sweep needs gamma legitimate models".into(),
                    });
                };
                let eave_mean = e.mean();
                *l = FadingModel::gamma(*shape, value * eave_mean)?;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

/// Successful per-row payload.
#[derive(Debug)]
pub struct RowOutcome {
    pub config: SystemConfig,
    pub report: SolveReport,
    pub sim: Option<sim::SimResult>,
}

/// One row of an experiment run.
#[derive(Debug)]
pub struct RunRow {
    pub run_id: String,
    pub variant: Variant,
    pub splitter: Splitter,
    pub sweep_param: Option<SweepParam>,
    pub sweep_value: Option<f64>,
    pub wall_ms: u128,
    pub outcome: Result<RowOutcome, String>,
}

struct RowPlan {
    index: usize,
    variant: Variant,
    sweep_value: Option<f64>,
}

fn build_plans(spec: &ExperimentSpec, use_sweep: bool) -> Vec<RowPlan> {
    let points: Vec<Option<f64>> = match (&spec.sweep, use_sweep) {
        (Some((_, values)), true) => values.iter().copied().map(Some).collect(),
        _ => vec![None],
    };
    let mut plans = Vec::new();
    let mut index = 0;
    for point in points {
        for &variant in &spec.variants {
            plans.push(RowPlan { index, variant, sweep_value: point });
            index += 1;
        }
    }
    plans
}

fn instantiate(spec: &ExperimentSpec, plan: &RowPlan) -> Result<SystemConfig, ExperimentError> {
    let mut cfg = match (plan.sweep_value, &spec.sweep) {
        (Some(v), Some((param, _))) => apply_sweep(&spec.base, *param, v)?,
        _ => spec.base.clone(),
    };
    plan.variant.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// Solves every (sweep value, variant) pair of the experiment.
///
/// Rows run on the rayon pool; results come back in plan order regardless of
/// completion order. Per-row failures land in the row, not in the result.
pub fn run_solve(spec: &ExperimentSpec, opts: &SolveOptions, simulate: Option<&SimOptions>) -> Vec<RunRow> {
    let plans = build_plans(spec, true);
    plans
        .par_iter()
        .map(|plan| {
            let run_id = format!("{:03}-{}-{}", plan.index, plan.variant, spec.splitter);
            let start = Instant::now();
            let solve_opts = SolveOptions { splitter: spec.splitter, ..opts.clone() };
            let outcome = instantiate(spec, plan).and_then(|cfg| {
                let report = mdp::solve(&cfg, &solve_opts)
                    .map_err(|e| ExperimentError::Unsupported { what: e.to_string() })?;
                let sim = match simulate {
                    Some(base_opts) => {
                        let sim_opts = SimOptions {
                            seed: base_opts.seed.wrapping_add(plan.index as u64),
                            ..*base_opts
                        };
                        Some(
                            sim::simulate(&cfg, &report.policy, &sim_opts)
                                .map_err(|e| ExperimentError::Unsupported { what: e.to_string() })?,
                        )
                    }
                    None => None,
                };
                Ok(RowOutcome { config: cfg, report, sim })
            });
            RunRow {
                run_id,
                variant: plan.variant,
                splitter: spec.splitter,
                sweep_param: spec.sweep.as_ref().map(|(p, _)| *p),
                sweep_value: plan.sweep_value,
                wall_ms: start.elapsed().as_millis(),
                outcome: outcome.map_err(|e| e.to_string()),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV and report emission
// ---------------------------------------------------------------------------

fn fmt_opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the solve CSV; when simulations are attached their columns follow.
///
/// The header comment carries the schema tag and the hash of the base
/// configuration so an output file can always be traced back to its inputs.
/// Every column except `wall_ms` is deterministic for a fixed (spec, seed).
pub fn write_rows_csv(
    rows: &[RunRow],
    spec: &ExperimentSpec,
    with_sim: bool,
    out: &mut dyn Write,
) -> io::Result<()> {
    writeln!(out, "# osp-results-v1 config_hash={}", spec.base.content_hash())?;
    let mut header =
        "run_id,variant,splitter,sweep_param,sweep_value,gain_bits_per_slot,iterations,wall_ms"
            .to_string();
    if with_sim {
        header.push_str(",emp_rate,emp_std_err,sim_slots,sim_seed");
    }
    writeln!(out, "{header}")?;
    for row in rows {
        let (gain, iterations) = match &row.outcome {
            Ok(o) => (o.report.gain.to_string(), o.report.iterations.to_string()),
            Err(_) => (String::new(), String::new()),
        };
        let mut line = format!(
            "{},{},{},{},{},{},{},{}",
            row.run_id,
            row.variant,
            row.splitter,
            fmt_opt(&row.sweep_param),
            fmt_opt(&row.sweep_value),
            gain,
            iterations,
            row.wall_ms
        );
        if with_sim {
            match row.outcome.as_ref().ok().and_then(|o| o.sim.as_ref()) {
                Some(s) => {
                    line.push_str(&format!(",{},{},{},{}", s.rate, s.std_err, s.slots, s.seed));
                }
                None => line.push_str(",,,,"),
            }
        }
        writeln!(out, "{line}")?;
        if let Err(msg) = &row.outcome {
            writeln!(out, "# error run_id={} message=\"{}\"", row.run_id, msg.replace('"', "'"))?;
        }
    }
    Ok(())
}

/// Runs an experiment end to end and writes `solve.csv` (or `simulate.csv`)
/// plus one plain-text policy report per successful row into the output
/// directory.
pub fn execute(
    spec: &ExperimentSpec,
    opts: &SolveOptions,
    simulate: Option<&SimOptions>,
    out_dir: &Path,
) -> Result<Vec<RunRow>, ExperimentError> {
    fs::create_dir_all(out_dir)?;
    let rows = run_solve(spec, opts, simulate);
    let csv_name = if simulate.is_some() { "simulate.csv" } else { "solve.csv" };
    let mut file = fs::File::create(out_dir.join(csv_name))?;
    write_rows_csv(&rows, spec, simulate.is_some(), &mut file)?;
    for row in &rows {
        if let Ok(outcome) = &row.outcome {
            let mut report_file = fs::File::create(out_dir.join(format!("report_{}.txt", row.run_id)))?;
            outcome.report.write_text(&mut report_file)?;
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Heatmap export
// ---------------------------------------------------------------------------

/// Flattens a single-carrier full-knowledge policy into
/// (battery, legitimate centroid, eavesdropper centroid, total power) rows,
/// ordered by battery level, then legitimate gain, then eavesdropper gain.
pub fn emit_policy_heatmap_data(report: &SolveReport) -> Result<Vec<(u32, f64, f64, u32)>, ExperimentError> {
    if report.csi != Csi::Full {
        return Err(ExperimentError::Unsupported {
            what: "heatmap export needs a full-knowledge policy".into(),
        });
    }
    if report.channel_states.states.iter().any(|s| s.g.len() != 1) {
        return Err(ExperimentError::Unsupported {
            what: "heatmap export is defined for a single sub-carrier".into(),
        });
    }
    let mut rows = Vec::with_capacity((report.e_max as usize + 1) * report.channel_states.len());
    for e in 0..=report.e_max {
        for (c, state) in report.channel_states.states.iter().enumerate() {
            rows.push((e, state.g[0], state.h[0], report.policy.total.action(e, c)));
        }
    }
    Ok(rows)
}

/// Writes heatmap rows as CSV.
pub fn write_heatmap_csv(
    rows: &[(u32, f64, f64, u32)],
    spec: &ExperimentSpec,
    out: &mut dyn Write,
) -> io::Result<()> {
    writeln!(out, "# osp-heatmap-v1 config_hash={}", spec.base.content_hash())?;
    writeln!(out, "e,g_centroid,h_centroid,rho_tot")?;
    for (e, g, h, a) in rows {
        writeln!(out, "{e},{g},{h},{a}")?;
    }
    Ok(())
}
