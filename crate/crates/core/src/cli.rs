//! Command-line front end: `monitor`, `falsify`, `synth` and `export`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::agim::{eta, eta_signal, QuadratureConfig, Verdict};
use crate::dynamics::ModelConfig;
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::optimize::{self, Goal, OptConfig, OptResult, Problem, Semantics, StopMode};
use crate::trace::{Bounds, ScoreSignal, Trace};
use crate::traditional::{rho, rho_exact_signal};

/// Exit code for errors (bad input, I/O, evaluation failures).
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stl-agim", version, about = "STL monitoring, falsification and synthesis with AGIM robustness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a recorded trace. Exit code 0 = satisfied, 1 = violated, 2 = inconclusive.
    Monitor(MonitorArgs),
    /// Search for inputs that violate the formula. Exit code 0 if one was found.
    Falsify(SearchArgs),
    /// Search for inputs that satisfy the formula. Exit code 0 if one was found.
    Synth(SearchArgs),
    /// Write the robustness of every subformula over time as CSV.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    Agim,
    Traditional,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Agim => Semantics::Agim,
            SemanticsArg::Traditional => Semantics::Traditional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopArg {
    FirstSign,
    ExhaustBudget,
}

impl From<StopArg> for StopMode {
    fn from(s: StopArg) -> Self {
        match s {
            StopArg::FirstSign => StopMode::FirstSign,
            StopArg::ExhaustBudget => StopMode::ExhaustBudget,
        }
    }
}

#[derive(Debug, Args)]
pub struct FormulaArgs {
    /// Formula text, or a path to a file containing it.
    #[arg(long)]
    pub formula: String,
    #[arg(long, value_enum, default_value = "agim")]
    pub semantics: SemanticsArg,
    /// Normalization bounds `name=lo:hi`; repeat or comma-separate.
    #[arg(long = "bounds", value_name = "NAME=LO:HI")]
    pub bounds: Vec<String>,
    /// AGIM quadrature step (defaults to the trace spacing / refine factor).
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub refine_factor: f64,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// CSV with a `time` column followed by one column per variable.
    #[arg(long)]
    pub trace: PathBuf,
    /// Keep only these comma-separated columns.
    #[arg(long, value_delimiter = ',')]
    pub select: Vec<String>,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[command(flatten)]
    pub formula: FormulaArgs,
    #[command(flatten)]
    pub trace: TraceArgs,
    /// Evaluation time.
    #[arg(long, default_value_t = 0.0)]
    pub time: f64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub formula: FormulaArgs,
    #[command(flatten)]
    pub trace: TraceArgs,
    /// Output CSV; defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub formula: FormulaArgs,
    /// JSON model configuration.
    #[arg(long)]
    pub model_config: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel restarts.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "first-sign")]
    pub stop: StopArg,
    /// Directory for trajectory.csv, controls.csv, evaluations.csv and summary.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

impl FormulaArgs {
    fn formula(&self) -> Result<Formula> {
        let path = Path::new(&self.formula);
        let text = if path.is_file() {
            std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
        } else {
            self.formula.clone()
        };
        text.trim().parse()
    }

    fn bounds(&self) -> Result<Bounds> {
        let mut bounds = Bounds::new();
        for entry in &self.bounds {
            for (name, range) in entry.parse::<Bounds>()?.iter() {
                bounds.insert(name, *range);
            }
        }
        Ok(bounds)
    }

    fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            step: self.grid_step,
            refine_factor: self.refine_factor,
            ..QuadratureConfig::default()
        }
    }
}

/// Loads the trace and normalizes it together with the formula thresholds.
/// Without bounds, AGIM requires the trace to be in `[-1, 1]` already;
/// traditional robustness then works on raw values.
fn prepare(fa: &FormulaArgs, ta: &TraceArgs) -> Result<(Formula, Trace)> {
    let formula = fa.formula()?;
    let mut trace = Trace::read_csv(&ta.trace)?;
    if !ta.select.is_empty() {
        let names: Vec<&str> = ta.select.iter().map(String::as_str).collect();
        trace = trace.select(&names)?;
    }
    let bounds = fa.bounds()?;
    if !bounds.is_empty() {
        Ok((formula.normalize_thresholds(&bounds)?, trace.normalize(&bounds)?))
    } else if Semantics::from(fa.semantics) == Semantics::Agim {
        Ok((formula, trace.assume_normalized()?))
    } else {
        Ok((formula, trace))
    }
}

fn score_at(f: &Formula, trace: &Trace, t: f64, semantics: Semantics, q: &QuadratureConfig) -> Result<f64> {
    match semantics {
        Semantics::Agim => Ok(eta(f, trace, t, q)?.value),
        Semantics::Traditional => Ok(rho(f, trace, t)?.value),
    }
}

/// Prints a JSON document to stdout; a closed pipe is not an error.
fn emit(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(value)?) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn monitor(args: &MonitorArgs) -> Result<i32> {
    let started = Instant::now();
    let (formula, trace) = prepare(&args.formula, &args.trace)?;
    let semantics = Semantics::from(args.formula.semantics);
    let q = args.formula.quadrature();
    let score = score_at(&formula, &trace, args.time, semantics, &q)?;
    let eval_ms = started.elapsed().as_secs_f64() * 1e3;
    let mut subformulae = Vec::new();
    for f in formula.subformulae() {
        subformulae.push(json!({
            "formula": f.to_string(),
            "score": score_at(f, &trace, args.time, semantics, &q)?,
        }));
    }
    let verdict = Verdict::from_score(score);
    let report = json!({
        "semantics": semantics,
        "time": args.time,
        "score": score,
        "verdict": verdict,
        "subformulae": subformulae,
        "timing_ms": { "evaluation": eval_ms, "total": started.elapsed().as_secs_f64() * 1e3 },
    });
    emit(&report)?;
    Ok(match verdict {
        Verdict::Satisfied => 0,
        Verdict::Violated => 1,
        Verdict::Inconclusive => 2,
    })
}

fn signal_of(f: &Formula, trace: &Trace, lo: f64, hi: f64, semantics: Semantics, q: &QuadratureConfig) -> Result<ScoreSignal> {
    match semantics {
        Semantics::Agim => eta_signal(f, trace, lo, hi, q),
        Semantics::Traditional => rho_exact_signal(f, trace, lo, hi),
    }
}

fn export(args: &ExportArgs) -> Result<i32> {
    let (formula, trace) = prepare(&args.formula, &args.trace)?;
    let semantics = Semantics::from(args.formula.semantics);
    let q = args.formula.quadrature();
    let (lo, hi) = (trace.start(), trace.end() - formula.horizon());
    if hi < lo {
        return Err(Error::OutOfDomain {
            time: lo,
            start: trace.start(),
            end: trace.end(),
        });
    }
    let subs = formula.subformulae();
    let signals = subs
        .iter()
        .map(|f| signal_of(f, &trace, lo, hi, semantics, &q))
        .collect::<Result<Vec<_>>>()?;
    let out: Box<dyn std::io::Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string()];
    header.extend(subs.iter().map(|f| f.to_string()));
    w.write_record(&header)?;
    for &t in signals[0].grid() {
        let mut row = vec![t.to_string()];
        for s in &signals {
            row.push(s.value_at(t).to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(0)
}

fn write_artifacts(dir: &Path, problem: &Problem<'_>, result: &OptResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let trace = problem.simulate(&result.best_controls)?;
    trace.write_csv(BufWriter::new(File::create(dir.join("trajectory.csv"))?))?;
    result
        .best_controls
        .write_csv(BufWriter::new(File::create(dir.join("controls.csv"))?), &problem.model().input_names())?;
    result.write_log(BufWriter::new(File::create(dir.join("evaluations.csv"))?))?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&result.summary())?)?;
    Ok(())
}

fn search(args: &SearchArgs, goal: Goal) -> Result<i32> {
    let formula = args.formula.formula()?;
    let mut config = ModelConfig::load(&args.model_config)?;
    config.bounds = config.bounds.merged(&args.formula.bounds()?);
    let model = config.build()?;
    let problem = Problem::from_config(model.as_ref(), &formula, &config)?;
    let opt = OptConfig {
        semantics: args.formula.semantics.into(),
        budget: args.budget,
        restarts: args.restarts,
        seed: args.seed,
        stop: args.stop.into(),
        quadrature: args.formula.quadrature(),
        jobs: args.jobs,
    };
    let result = optimize::optimize(&problem, &opt, goal)?;
    if let Some(dir) = &args.out_dir {
        write_artifacts(dir, &problem, &result)?;
    }
    emit(&result.summary())?;
    Ok(if result.goal_reached() { 0 } else { 1 })
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Monitor(a) => monitor(a),
        Command::Falsify(a) => search(a, Goal::Falsify),
        Command::Synth(a) => search(a, Goal::Synthesize),
        Command::Export(a) => export(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_monitor_flags() {
        let cli = Cli::try_parse_from([
            "stl-agim", "monitor", "--formula", "x >= 0", "--trace", "t.csv",
            "--bounds", "x=0:10,y=-1:1", "--bounds", "z=0:1", "--semantics", "traditional",
        ])
        .unwrap();
        let Command::Monitor(m) = cli.command else { panic!() };
        assert_eq!(m.formula.semantics, SemanticsArg::Traditional);
        let b = m.formula.bounds().unwrap();
        assert_eq!(b.iter().count(), 3);
        assert_eq!(b.get("x").unwrap().upper, 10.0);
    }

    #[test]
    fn parses_search_flags() {
        let cli = Cli::try_parse_from([
            "stl-agim", "falsify", "--formula", "G[0,30] (rpm <= 4000)", "--model-config", "m.json",
            "--budget", "50", "--restarts", "2", "--seed", "7", "--stop", "exhaust-budget",
        ])
        .unwrap();
        let Command::Falsify(s) = cli.command else { panic!() };
        assert_eq!((s.budget, s.restarts, s.seed), (50, 2, 7));
        assert_eq!(StopMode::from(s.stop), StopMode::ExhaustBudget);
    }

    #[test]
    fn rejects_unknown_semantics() {
        assert!(Cli::try_parse_from(["stl-agim", "monitor", "--formula", "true", "--trace", "t.csv", "--semantics", "fuzzy"]).is_err());
    }
}
