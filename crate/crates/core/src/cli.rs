//! Command-line front end: `verify` runs the property suites, `experiment`
//! runs extremal searches and writes CSV/JSON reports, `eval` prints every
//! report for one instance file.

use crate::bellman::{bmax_certificate, bred_certificate, CertReport};
use crate::dyadic::{carleson_constant, l2_norm_scalar, normalize_carleson};
use crate::embedding::{a2_characteristic, bet_sum, redundant_constant, BetReport};
use crate::error::Error;
use crate::maximal::{max_poor_memory, max_usual, max_usual_norm_oracle};
use crate::search::{
    dim_growth_experiment, run_trials, GrowthTable, Instance, Objective, SearchResult,
    TrialOutcome,
};
use crate::verify::{run_suites, VerifyConfig};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

const EXIT_OK: i32 = 0;
const EXIT_VIOLATIONS: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_OBJECTIVE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "carleson-lab",
    about = "Matrix-weighted dyadic maximal operators, embedding sums, and Bellman certificates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every property suite over seeded random instances.
    Verify(Flags),
    /// Run an extremal search: badmax, redundant, bet, cet, or dimgrowth.
    Experiment {
        name: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Evaluate every report for one instance JSON file.
    Eval {
        instance: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args, Clone)]
struct Flags {
    /// Ambient dimension d.
    #[arg(long)]
    d: Option<usize>,
    /// Tree depth n (leaves 2^n).
    #[arg(long)]
    depth: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Instance count (verify) or search trial count (experiment).
    #[arg(long)]
    trials: Option<u64>,
    /// Hill-climb steps per trial.
    #[arg(long)]
    steps: Option<u64>,
    /// Dimensions for the growth experiment, e.g. 1,2,4,8.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Output path (verify/eval: JSON file; experiment: base path for
    /// <base>.csv and <base>.json). Defaults to stdout / experiment_<name>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; flag values override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override every suite tolerance with one value.
    #[arg(long)]
    tolerance: Option<f64>,
}

/// Resolved run parameters: defaults, overridden by the config file,
/// overridden by flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub d: usize,
    pub depth: usize,
    pub seed: u64,
    pub trials: u64,
    pub steps: u64,
    pub dims: Vec<usize>,
    pub spread: f64,
    pub samples: usize,
    pub tolerance: Option<f64>,
    pub k_max: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            d: 3,
            depth: 6,
            seed: 42,
            trials: 100,
            steps: 200,
            dims: vec![1, 2, 4, 8],
            spread: 1.0,
            samples: 10,
            tolerance: None,
            k_max: None,
        }
    }
}

impl Config {
    fn load(flags: &Flags) -> Result<Config, String> {
        let mut cfg = match &flags.config {
            None => Config::default(),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| format!("bad config {}: {e}", path.display()))?
            }
        };
        if let Some(d) = flags.d {
            cfg.d = d;
        }
        if let Some(depth) = flags.depth {
            cfg.depth = depth;
        }
        if let Some(seed) = flags.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = flags.trials {
            cfg.trials = trials;
        }
        if let Some(steps) = flags.steps {
            cfg.steps = steps;
        }
        if let Some(dims) = &flags.dims {
            cfg.dims = dims.clone();
        }
        if let Some(t) = flags.tolerance {
            cfg.tolerance = Some(t);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if self.d == 0 || self.d > 32 {
            return Err(format!("--d must be in 1..=32, got {}", self.d));
        }
        if self.depth == 0 || self.depth > 14 {
            return Err(format!("--depth must be in 1..=14, got {}", self.depth));
        }
        if self.trials == 0 {
            return Err("--trials must be at least 1".into());
        }
        if self.dims.is_empty() || self.dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err("--dims must be a nonempty strictly ascending list".into());
        }
        if let Some(&dmax) = self.dims.last() {
            if dmax > 32 {
                return Err(format!("--dims entries must be at most 32, got {dmax}"));
            }
        }
        if !(self.spread >= 0.0) {
            return Err("spread must be nonnegative".into());
        }
        if self.samples == 0 {
            return Err("samples must be at least 1".into());
        }
        Ok(())
    }
}

pub fn run() -> i32 {
    if let Ok(v) = std::env::var("CARLESON_LAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    run_from(std::env::args())
}

/// Entry point with explicit arguments, for tests.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match cli.command {
        Command::Verify(flags) => cmd_verify(&flags),
        Command::Experiment { name, flags } => cmd_experiment(&name, &flags),
        Command::Eval { instance, flags } => cmd_eval(&instance, &flags),
    }
}

fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    eprintln!("run with --help for usage");
    EXIT_USAGE
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        None => {
            println!("{text}");
            Ok(())
        }
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
    }
}

fn cmd_verify(flags: &Flags) -> i32 {
    let cfg = match Config::load(flags) {
        Ok(c) => c,
        Err(msg) => return usage_error(&msg),
    };
    let vcfg = VerifyConfig {
        d: cfg.d,
        depth: cfg.depth,
        seed: cfg.seed,
        trials: cfg.trials,
        spread: cfg.spread,
        samples: cfg.samples,
        tolerance: cfg.tolerance,
    };
    let report = match run_suites(&vcfg) {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(msg) = emit(&flags.out, &json) {
        return usage_error(&msg);
    }
    if report.passed() {
        EXIT_OK
    } else {
        eprintln!("verify: {} violation(s)", report.violations.len());
        EXIT_VIOLATIONS
    }
}

/// 17 significant digits: round-trip-exact doubles in text.
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn experiment_csv(name: &str, cfg: &Config, rows: &[TrialOutcome], ceiling: Option<f64>) -> String {
    let mut out = String::from("trial,d,depth,seed,objective,value,ceiling\n");
    let ceiling = ceiling.map(fmt_float).unwrap_or_default();
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.trial,
            cfg.d,
            cfg.depth,
            row.seed,
            name,
            fmt_float(row.value),
            ceiling
        ));
    }
    out
}

fn growth_csv(table: &GrowthTable) -> String {
    let mut out = String::from("d,best,reference\n");
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.d,
            fmt_float(row.best),
            fmt_float(row.reference)
        ));
    }
    out
}

#[derive(Serialize)]
struct ExperimentReport<'a> {
    command: String,
    config: &'a Config,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a SearchResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    growth: Option<&'a GrowthTable>,
}

fn write_experiment(
    base: &Path,
    csv: &str,
    report: &ExperimentReport<'_>,
) -> Result<(PathBuf, PathBuf), String> {
    let csv_path = base.with_extension("csv");
    let json_path = base.with_extension("json");
    fs::write(&csv_path, csv).map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(&json_path, format!("{json}\n"))
        .map_err(|e| format!("cannot write {}: {e}", json_path.display()))?;
    Ok((csv_path, json_path))
}

fn cmd_experiment(name: &str, flags: &Flags) -> i32 {
    let cfg = match Config::load(flags) {
        Ok(c) => c,
        Err(msg) => return usage_error(&msg),
    };
    let base = flags
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("experiment_{name}")));

    if name == "dimgrowth" {
        let table = match dim_growth_experiment(&cfg.dims, cfg.trials, cfg.depth, cfg.steps, cfg.seed)
        {
            Ok(t) => t,
            Err(e) => return objective_failure(&base, e),
        };
        let report = ExperimentReport {
            command: format!("experiment {name}"),
            config: &cfg,
            result: None,
            growth: Some(&table),
        };
        // plot-ready two-column files alongside the table
        let mut best_dat = String::new();
        let mut ref_dat = String::new();
        for row in &table.rows {
            best_dat.push_str(&format!("{} {}\n", row.d, fmt_float(row.best)));
            ref_dat.push_str(&format!("{} {}\n", row.d, fmt_float(row.reference)));
        }
        let dat_path = base.with_extension("dat");
        let ref_path = base.with_extension("reference.dat");
        if let Err(e) = fs::write(&dat_path, best_dat).and_then(|_| fs::write(&ref_path, ref_dat)) {
            return usage_error(&format!("cannot write data files: {e}"));
        }
        match write_experiment(&base, &growth_csv(&table), &report) {
            Ok((csv, json)) => {
                println!(
                    "wrote {}, {}, {} and {}",
                    csv.display(),
                    json.display(),
                    dat_path.display(),
                    ref_path.display()
                );
                EXIT_OK
            }
            Err(msg) => usage_error(&msg),
        }
    } else {
        let Some(objective) = Objective::parse(name) else {
            return usage_error(&format!(
                "unknown experiment '{name}' (expected badmax, redundant, bet, cet, or dimgrowth)"
            ));
        };
        let (rows, best) = match run_trials(
            &objective,
            cfg.d,
            cfg.depth,
            cfg.spread,
            cfg.trials,
            cfg.steps,
            cfg.seed,
        ) {
            Ok(r) => r,
            Err(e) => return objective_failure(&base, e),
        };
        if let Some(c) = objective.ceiling() {
            if best.max_evaluated > c + 1e-8 {
                eprintln!(
                    "WARNING: evaluated value {} exceeds the theorem ceiling {c}; \
                     this is a release-blocking bug (counterexample to the theorem \
                     or to the implementation)",
                    best.max_evaluated
                );
            }
        }
        let report = ExperimentReport {
            command: format!("experiment {name}"),
            config: &cfg,
            result: Some(&best),
            growth: None,
        };
        let csv = experiment_csv(name, &cfg, &rows, objective.ceiling());
        match write_experiment(&base, &csv, &report) {
            Ok((csv, json)) => {
                println!(
                    "best {} = {} over {} trials; wrote {} and {}",
                    name,
                    best.best_value,
                    cfg.trials,
                    csv.display(),
                    json.display()
                );
                EXIT_OK
            }
            Err(msg) => usage_error(&msg),
        }
    }
}

fn objective_failure(base: &Path, e: Error) -> i32 {
    if let Error::Objective(msg) = &e {
        // the message carries the offending instance; dump it for reproduction
        let dump = base.with_extension("error.json");
        if let Some(json_start) = msg.find("offending instance: ") {
            let json = &msg[json_start + "offending instance: ".len()..];
            let _ = fs::write(&dump, json);
            eprintln!("objective error: instance dumped to {}", dump.display());
        }
        eprintln!("error: {msg}");
        EXIT_OBJECTIVE
    } else {
        usage_error(&e.to_string())
    }
}

#[derive(Serialize)]
struct MaximalReport {
    usual_field: Vec<f64>,
    usual_norm: f64,
    usual_norm_oracle: f64,
    poor_memory_norms: Vec<f64>,
}

#[derive(Serialize)]
struct EvalReport<'a> {
    command: String,
    config: &'a Config,
    instance_seed: u64,
    d: usize,
    depth: usize,
    maximal: MaximalReport,
    bet: BetReport,
    a2_characteristic: f64,
    carleson_constant: f64,
    /// Computed on alpha normalized to constant 1 when needed.
    redundant_constant: Option<f64>,
    alpha_was_normalized: bool,
    bmax_certificate: CertReport,
    bred_certificate: Option<CertReport>,
}

fn cmd_eval(path: &Path, flags: &Flags) -> i32 {
    let cfg = match Config::load(flags) {
        Ok(c) => c,
        Err(msg) => return usage_error(&msg),
    };
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return usage_error(&format!("cannot read {}: {e}", path.display())),
    };
    let inst = match Instance::from_json(&text) {
        Ok(i) => i,
        Err(e) => return usage_error(&format!("{}: {e}", path.display())),
    };
    match eval_instance(&inst, &cfg) {
        Ok(report) => {
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            if let Err(msg) = emit(&flags.out, &json) {
                return usage_error(&msg);
            }
            EXIT_OK
        }
        Err(e) => usage_error(&format!("{}: {e}", path.display())),
    }
}

fn eval_instance<'a>(inst: &Instance, cfg: &'a Config) -> crate::error::Result<EvalReport<'a>> {
    let w = inst.weight()?;
    let k_max = cfg.k_max.unwrap_or(inst.depth).min(inst.depth);

    let (usual, sel) = max_usual(&w, &inst.f)?;
    let usual_norm = l2_norm_scalar(&usual, None)?;
    let oracle = max_usual_norm_oracle(&w, &inst.f, &sel)?;
    let (fields, mem) = max_poor_memory(&w, &inst.f, k_max)?;
    let mut poor_norms = Vec::with_capacity(fields.len());
    for field in &fields {
        poor_norms.push(l2_norm_scalar(field, None)?);
    }

    let bet = bet_sum(&w, &inst.f, &inst.g, &inst.alpha)?;
    let a2 = a2_characteristic(&w)?;
    let constant = carleson_constant(&inst.alpha);

    let (alpha_for_bounds, normalized) = if constant > 1.0 + 1e-9 {
        (Some(normalize_carleson(&inst.alpha, 1.0)?), true)
    } else if constant > 0.0 {
        (Some(inst.alpha.clone()), false)
    } else {
        (None, false)
    };
    let (redundant, bred) = match &alpha_for_bounds {
        Some(alpha) => (
            Some(redundant_constant(alpha, &w)?),
            Some(bred_certificate(&w, alpha, cfg.samples, cfg.seed)?),
        ),
        None => (None, None),
    };
    let bmax = bmax_certificate(&w, &inst.f, &mem, k_max)?;

    Ok(EvalReport {
        command: "eval".into(),
        config: cfg,
        instance_seed: inst.seed,
        d: inst.d,
        depth: inst.depth,
        maximal: MaximalReport {
            usual_field: usual.leaves().to_vec(),
            usual_norm,
            usual_norm_oracle: oracle,
            poor_memory_norms: poor_norms,
        },
        bet,
        a2_characteristic: a2,
        carleson_constant: constant,
        redundant_constant: redundant,
        alpha_was_normalized: normalized,
        bmax_certificate: bmax,
        bred_certificate: bred,
    })
}
