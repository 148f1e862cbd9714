//! Falsification and control synthesis by derivative-free search over
//! piecewise-constant inputs.
//!
//! The search space is the flattened control sequence. Each candidate is
//! simulated, normalized with saturation, and scored at `t = 0` with either
//! AGIM or traditional robustness. Falsification minimizes the score,
//! synthesis maximizes it. Restarts run as independent seeded lanes and
//! their logs are merged in `(restart, evaluation)` order, so results depend
//! only on the seed, never on thread scheduling.

mod nelder_mead;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agim::{eta, QuadratureConfig, Verdict};
use crate::dynamics::{simulate, ControlSequence, Model, ModelConfig};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::trace::{Bounds, Range, Trace};
use crate::traditional::rho;

/// Which robustness semantics scores a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Agim,
    Traditional,
}

impl Semantics {
    fn name(self) -> &'static str {
        match self {
            Semantics::Agim => "agim",
            Semantics::Traditional => "traditional",
        }
    }

    /// Score assigned to candidates whose simulation fails: the worst value
    /// for the goal (`+1`/`-1` for AGIM, `±2` for traditional robustness,
    /// whose range on normalized traces is `[-2, 2]`).
    fn worst(self, goal: Goal) -> f64 {
        let magnitude = match self {
            Semantics::Agim => 1.0,
            Semantics::Traditional => 2.0,
        };
        match goal {
            Goal::Falsify => magnitude,
            Goal::Synthesize => -magnitude,
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Semantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agim" => Ok(Semantics::Agim),
            "traditional" => Ok(Semantics::Traditional),
            _ => Err(Error::Config(format!("unknown semantics `{s}`"))),
        }
    }
}

/// Falsify (drive the score negative) or synthesize (drive it positive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Goal {
    Falsify,
    Synthesize,
}

impl Goal {
    fn reached(self, score: f64) -> bool {
        match self {
            Goal::Falsify => score < 0.0,
            Goal::Synthesize => score > 0.0,
        }
    }

    /// Multiplier turning a score into a cost to minimize.
    fn sign(self) -> f64 {
        match self {
            Goal::Falsify => 1.0,
            Goal::Synthesize => -1.0,
        }
    }

    fn better(self, a: f64, b: f64) -> bool {
        self.sign() * a < self.sign() * b
    }
}

/// When to stop searching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopMode {
    /// Stop as soon as a candidate reaches the goal's sign.
    FirstSign,
    /// Always spend the whole budget, keeping the best candidate.
    ExhaustBudget,
}

impl FromStr for StopMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-sign" => Ok(StopMode::FirstSign),
            "exhaust-budget" => Ok(StopMode::ExhaustBudget),
            _ => Err(Error::Config(format!("unknown stop mode `{s}`"))),
        }
    }
}

/// Why the search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    SignReached,
    BudgetExhausted,
}

/// Search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OptConfig {
    pub semantics: Semantics,
    /// Total number of objective evaluations across all restarts.
    pub budget: usize,
    /// Number of independent lanes; the budget is split evenly.
    pub restarts: usize,
    pub seed: u64,
    pub stop: StopMode,
    pub quadrature: QuadratureConfig,
    /// Worker threads; `None` uses rayon's global pool.
    pub jobs: Option<usize>,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            semantics: Semantics::Agim,
            budget: 200,
            restarts: 4,
            seed: 0,
            stop: StopMode::FirstSign,
            quadrature: QuadratureConfig::default(),
            jobs: None,
        }
    }
}

/// A model, a specification and the simulation settings that turn a control
/// sequence into a score.
pub struct Problem<'a> {
    model: &'a dyn Model,
    formula: Formula,
    bounds: Bounds,
    period: f64,
    samples: usize,
    step: f64,
}

impl<'a> Problem<'a> {
    /// `formula` uses raw thresholds; they are normalized with `bounds`.
    pub fn new(
        model: &'a dyn Model,
        formula: &Formula,
        bounds: Bounds,
        period: f64,
        samples: usize,
        step: f64,
    ) -> Result<Self> {
        if samples == 0 || !(period.is_finite() && period > 0.0) {
            return Err(Error::Config("need at least one positive control period".into()));
        }
        let horizon = period * samples as f64;
        if formula.horizon() > horizon + 1e-9 {
            return Err(Error::Config(format!(
                "formula horizon {} exceeds simulation horizon {horizon}",
                formula.horizon()
            )));
        }
        let outputs = model.output_names();
        if let Some(v) = formula.variables().into_iter().find(|v| !outputs.iter().any(|o| o == v)) {
            return Err(Error::UnknownVariable(v.to_string()));
        }
        Ok(Problem {
            model,
            formula: formula.normalize_thresholds(&bounds)?,
            bounds,
            period,
            samples,
            step,
        })
    }

    /// Builds the problem from a model configuration and the model it built.
    pub fn from_config(model: &'a dyn Model, formula: &Formula, config: &ModelConfig) -> Result<Self> {
        let bounds = config.normalization_bounds(model);
        Self::new(model, formula, bounds, config.period, config.samples()?, config.step)
    }

    pub fn model(&self) -> &dyn Model {
        self.model
    }

    /// The specification with normalized thresholds.
    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Per-coordinate bounds of the flattened search space.
    pub fn search_bounds(&self) -> Vec<Range> {
        let per_sample = self.model.input_bounds();
        (0..self.samples).flat_map(|_| per_sample.iter().copied()).collect()
    }

    pub fn controls(&self, flat: &[f64]) -> Result<ControlSequence> {
        ControlSequence::from_flat(self.period, flat, self.model.input_bounds())
    }

    /// Simulated trajectory in physical units.
    pub fn simulate(&self, controls: &ControlSequence) -> Result<Trace> {
        simulate(self.model, controls, self.step)
    }

    /// Score of an already simulated trajectory at `t = 0`.
    pub fn score_trace(&self, trace: &Trace, semantics: Semantics, q: &QuadratureConfig) -> Result<f64> {
        let normalized = trace.normalize_saturating(&self.bounds);
        Ok(match semantics {
            Semantics::Agim => eta(&self.formula, &normalized, 0.0, q)?.value,
            Semantics::Traditional => rho(&self.formula, &normalized, 0.0)?.value,
        })
    }

    /// Simulates `controls` and scores the result at `t = 0`.
    pub fn objective(&self, controls: &ControlSequence, semantics: Semantics, q: &QuadratureConfig) -> Result<f64> {
        let trace = self.simulate(controls)?;
        self.score_trace(&trace, semantics, q)
    }
}

/// One row of the evaluation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub eval_index: usize,
    pub restart: usize,
    pub score: f64,
    /// Best score among this and all earlier records.
    pub best: f64,
    pub wall_ms: f64,
}

/// Outcome of a falsification or synthesis run.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub goal: Goal,
    pub semantics: Semantics,
    pub best_controls: ControlSequence,
    pub best_score: f64,
    pub verdict: Verdict,
    pub evaluations: usize,
    pub iterations: usize,
    /// Position in the merged log of the first candidate with the goal's sign.
    pub first_sign_eval: Option<usize>,
    pub termination: Termination,
    pub wall_ms: f64,
    pub seed: u64,
    pub log: Vec<EvalRecord>,
}

impl OptResult {
    pub fn goal_reached(&self) -> bool {
        self.goal.reached(self.best_score)
    }

    /// Writes the evaluation log as CSV.
    pub fn write_log<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.log {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Machine-readable summary, without the per-evaluation log.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "goal": self.goal,
            "semantics": self.semantics,
            "best_score": self.best_score,
            "verdict": self.verdict,
            "goal_reached": self.goal_reached(),
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "first_sign_eval": self.first_sign_eval,
            "termination": self.termination,
            "wall_ms": self.wall_ms,
            "seed": self.seed,
            "period": self.best_controls.period(),
            "best_controls": self.best_controls.values(),
        })
    }
}

/// Searches for inputs whose trajectory violates the specification.
pub fn falsify(problem: &Problem<'_>, config: &OptConfig) -> Result<OptResult> {
    optimize(problem, config, Goal::Falsify)
}

/// Searches for inputs whose trajectory satisfies the specification.
pub fn synthesize(problem: &Problem<'_>, config: &OptConfig) -> Result<OptResult> {
    optimize(problem, config, Goal::Synthesize)
}

/// Runs the multi-start search for `goal`.
pub fn optimize(problem: &Problem<'_>, config: &OptConfig, goal: Goal) -> Result<OptResult> {
    if config.budget == 0 || config.restarts == 0 {
        return Err(Error::Config("budget and restarts must be positive".into()));
    }
    let restarts = config.restarts.min(config.budget);
    let bounds = problem.search_bounds();
    let started = Instant::now();

    // Probe once so structural errors (bad variables, coverage) surface as
    // errors instead of being scored as worst candidates.
    let probe = problem.controls(&nelder_mead::midpoint(&bounds))?;
    match problem.objective(&probe, config.semantics, &config.quadrature) {
        Ok(_) | Err(Error::NonFinite(_)) => {}
        Err(e) => return Err(e),
    }

    let worst = config.semantics.worst(goal);
    let cost = |x: &[f64]| -> f64 {
        let scored = problem
            .controls(x)
            .and_then(|cs| problem.objective(&cs, config.semantics, &config.quadrature));
        match scored {
            Ok(s) if s.is_finite() => s,
            Ok(s) => {
                log::warn!("non-finite score {s}; scoring as {worst}");
                worst
            }
            Err(e) => {
                log::warn!("candidate failed ({e}); scoring as {worst}");
                worst
            }
        }
    };

    let first_sign = config.stop == StopMode::FirstSign;
    let stop = |s: f64| first_sign && goal.reached(s);
    // Smallest lane index known to have reached the goal; lanes after it
    // cannot affect the merged result and may stop early.
    let winner = AtomicUsize::new(usize::MAX);
    let run_lane = |r: usize| {
        let share = config.budget / restarts + usize::from(r < config.budget % restarts);
        let start = (r == 0).then(|| nelder_mead::midpoint(&bounds));
        let cancelled = || winner.load(Ordering::Relaxed) < r;
        let lane = nelder_mead::lane(&cost, &bounds, share, goal.sign(), config.seed, r as u64, start, &stop, &cancelled);
        if lane.hit.is_some() {
            winner.fetch_min(r, Ordering::Relaxed);
        }
        lane
    };
    let lanes: Vec<_> = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(|| (0..restarts).into_par_iter().map(run_lane).collect()),
        None => (0..restarts).into_par_iter().map(run_lane).collect(),
    };

    let keep = match lanes.iter().position(|l| l.hit.is_some()) {
        Some(r) if first_sign => r + 1,
        _ => lanes.len(),
    };
    let mut log = Vec::new();
    let mut best: Option<(f64, &[f64])> = None;
    let mut first_sign_eval = None;
    let mut iterations = 0;
    for (r, lane) in lanes[..keep].iter().enumerate() {
        iterations += lane.iterations;
        for s in &lane.samples {
            if best.is_none_or(|(b, _)| goal.better(s.score, b)) {
                best = Some((s.score, &s.point));
            }
            if first_sign_eval.is_none() && goal.reached(s.score) {
                first_sign_eval = Some(log.len());
            }
            log.push(EvalRecord {
                eval_index: log.len(),
                restart: r,
                score: s.score,
                best: best.map_or(s.score, |(b, _)| b),
                wall_ms: s.wall_ms,
            });
        }
    }
    let (best_score, best_point) = best.ok_or_else(|| Error::Config("no evaluations were run".into()))?;
    let best_controls = problem.controls(best_point)?;
    let termination = if first_sign && first_sign_eval.is_some() {
        Termination::SignReached
    } else {
        Termination::BudgetExhausted
    };
    Ok(OptResult {
        goal,
        semantics: config.semantics,
        best_controls,
        best_score,
        verdict: Verdict::from_score(best_score),
        evaluations: log.len(),
        iterations,
        first_sign_eval,
        termination,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        seed: config.seed,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TransmissionModel;

    fn transmission() -> TransmissionModel {
        TransmissionModel::default()
    }

    fn problem<'a>(m: &'a TransmissionModel, text: &str) -> Problem<'a> {
        let f: Formula = text.parse().unwrap();
        Problem::new(m, &f, m.output_bounds(), 5.0, 6, 0.01).unwrap()
    }

    fn config(semantics: Semantics, budget: usize) -> OptConfig {
        OptConfig {
            semantics,
            budget,
            ..OptConfig::default()
        }
    }

    #[test]
    fn falsifies_speed_limit() {
        let m = transmission();
        let p = problem(&m, "G[0,30] (speed <= 100)");
        for sem in [Semantics::Agim, Semantics::Traditional] {
            let r = falsify(&p, &config(sem, 200)).unwrap();
            assert!(r.goal_reached(), "{sem}: best {}", r.best_score);
            assert_eq!(r.termination, Termination::SignReached);
            assert_eq!(r.verdict, Verdict::Violated);
            assert_eq!(r.first_sign_eval, Some(r.evaluations - 1));
            let again = p.objective(&r.best_controls, sem, &QuadratureConfig::default()).unwrap();
            assert_eq!(again, r.best_score);
        }
    }

    #[test]
    fn unfalsifiable_formula_exhausts_budget() {
        let m = transmission();
        let p = problem(&m, "true");
        let r = falsify(&p, &config(Semantics::Agim, 30)).unwrap();
        assert_eq!(r.termination, Termination::BudgetExhausted);
        assert_eq!(r.best_score, 1.0);
        assert_eq!(r.evaluations, 30);
        assert!(!r.goal_reached());
    }

    #[test]
    fn infeasible_synthesis_exhausts_budget() {
        let m = transmission();
        let p = problem(&m, "(speed >= 150) & (speed <= 10)");
        let r = synthesize(&p, &config(Semantics::Agim, 40)).unwrap();
        assert_eq!(r.termination, Termination::BudgetExhausted);
        assert_eq!(r.verdict, Verdict::Violated);
        assert_eq!(r.first_sign_eval, None);
        assert_eq!(r.evaluations, 40);
    }

    #[test]
    fn synthesis_of_a_satisfied_start_takes_one_evaluation() {
        let m = transmission();
        let p = problem(&m, "rpm <= 4000");
        let r = synthesize(&p, &config(Semantics::Agim, 50)).unwrap();
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.first_sign_eval, Some(0));
        assert_eq!(r.verdict, Verdict::Satisfied);
    }

    #[test]
    fn log_is_monotone_and_deterministic() {
        let m = transmission();
        let p = problem(&m, "G[0,30] (rpm <= 4000) & G[0,30] (speed <= 100)");
        let cfg = OptConfig {
            restarts: 3,
            stop: StopMode::ExhaustBudget,
            seed: 11,
            ..config(Semantics::Agim, 60)
        };
        let a = falsify(&p, &cfg).unwrap();
        let b = falsify(&p, &OptConfig { jobs: Some(1), ..cfg.clone() }).unwrap();
        assert_eq!(a.evaluations, 60);
        assert!(a.log.windows(2).all(|w| w[1].best <= w[0].best));
        assert!(a.log.windows(2).all(|w| w[0].restart <= w[1].restart));
        let scores = |r: &OptResult| r.log.iter().map(|e| (e.restart, e.score)).collect::<Vec<_>>();
        assert_eq!(scores(&a), scores(&b));
        assert_eq!(a.best_controls, b.best_controls);
        assert_eq!(a.log.last().unwrap().best, a.best_score);
    }

    #[test]
    fn rejects_bad_problems() {
        let m = transmission();
        let f: Formula = "G[0,40] (speed <= 100)".parse().unwrap();
        assert!(Problem::new(&m, &f, m.output_bounds(), 5.0, 6, 0.01).is_err());
        let f: Formula = "G[0,10] (torque <= 1)".parse().unwrap();
        assert!(matches!(
            Problem::new(&m, &f, m.output_bounds(), 5.0, 6, 0.01),
            Err(Error::UnknownVariable(_))
        ));
        let p = problem(&m, "speed <= 100");
        assert!(falsify(&p, &config(Semantics::Agim, 0)).is_err());
    }

    #[test]
    fn parses_modes() {
        assert_eq!("agim".parse::<Semantics>().unwrap(), Semantics::Agim);
        assert_eq!("exhaust-budget".parse::<StopMode>().unwrap(), StopMode::ExhaustBudget);
        assert!("fast".parse::<StopMode>().is_err());
    }
}
