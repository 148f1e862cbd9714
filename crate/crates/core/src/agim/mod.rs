//! Arithmetic-geometric integral mean (AGIM) robustness.
//!
//! Scores live in `[-1, 1]`. Conjunctions and always-windows whose inputs
//! are strictly positive everywhere combine them with a geometric mean of
//! `1 + η`; otherwise they average the negative parts only. Disjunctions and
//! eventually-windows are evaluated as the negated duals of those two, so De
//! Morgan identities hold bit for bit.
//!
//! Intermediate scores are piecewise linear on a refined grid. Every sign
//! change of an intermediate score happens at a grid point whose value is
//! exactly zero: predicate crossings are inserted explicitly, and the times at
//! which a window starts or stops touching a non-positive region are added to
//! the parent grid together with points `ε` on either side, so the jump
//! between the two branches is resolved instead of smeared over a grid cell.

mod quadrature;

pub use quadrature::{
    any, clipped_mean_integral, geometric_integral_mean, Condition, QuadratureConfig, Transform,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Direction, Formula, Interval};
use crate::trace::signal::build_grid;
use crate::trace::{ScoreSignal, Trace};
use quadrature::Window;

/// Three-valued outcome read off the sign of a robustness score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn from_score(score: f64) -> Verdict {
        if score > 0.0 {
            Verdict::Satisfied
        } else if score < 0.0 {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// AGIM robustness value with its verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eta {
    pub value: f64,
    pub verdict: Verdict,
}

impl Eta {
    fn new(value: f64) -> Eta {
        Eta {
            value,
            verdict: Verdict::from_score(value),
        }
    }
}

/// AGIM robustness of `formula` on a normalized `trace` at time `t`.
pub fn eta(formula: &Formula, trace: &Trace, t: f64, q: &QuadratureConfig) -> Result<Eta> {
    let ev = Evaluator::new(formula, trace, t, t, q)?;
    Ok(Eta::new(ev.signal(formula, t, t)?.values()[0]))
}

/// AGIM robustness as a piecewise-linear function of time over `[from, to]`.
pub fn eta_signal(
    formula: &Formula,
    trace: &Trace,
    from: f64,
    to: f64,
    q: &QuadratureConfig,
) -> Result<ScoreSignal> {
    if to < from {
        return Err(Error::Interval {
            lower: from,
            upper: to,
            reason: "evaluation window is reversed",
        });
    }
    Evaluator::new(formula, trace, from, to, q)?.signal(formula, from, to)
}

/// Combines child scores of a conjunction. The input is sorted in place so
/// the result does not depend on child order.
fn conjunction(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() as f64;
    let (first, last) = (values[0], values[values.len() - 1]);
    if first == last {
        first
    } else if first > 0.0 {
        (values.iter().map(|v| v.ln_1p()).sum::<f64>() / m).exp_m1()
    } else {
        values.iter().map(|v| v.min(0.0)).sum::<f64>() / m
    }
}

struct Evaluator<'a> {
    trace: &'a Trace,
    step: f64,
    eps: f64,
    tol: f64,
}

impl<'a> Evaluator<'a> {
    fn new(
        formula: &Formula,
        trace: &'a Trace,
        from: f64,
        to: f64,
        q: &QuadratureConfig,
    ) -> Result<Self> {
        if !trace.is_normalized() {
            return Err(Error::NotNormalized(
                "AGIM needs a trace normalized to [-1, 1]".into(),
            ));
        }
        for f in formula.subformulae() {
            match f {
                Formula::Until(..) => return Err(Error::UnsupportedOperator("U (until)")),
                Formula::Globally(iv, _) | Formula::Eventually(iv, _) if iv.is_degenerate() => {
                    return Err(Error::Interval {
                        lower: iv.lower,
                        upper: iv.upper,
                        reason: "AGIM needs a temporal interval of positive length",
                    })
                }
                Formula::Predicate { var, threshold, .. } => {
                    trace.index_of(var)?;
                    if !(-1.0..=1.0).contains(threshold) {
                        return Err(Error::NotNormalized(format!(
                            "threshold {threshold} of `{var}` outside [-1, 1]"
                        )));
                    }
                }
                _ => {}
            }
        }
        trace.check_covers(from, to + formula.horizon())?;
        let step = q.step_for(trace)?;
        let eps = (step * 1e-4).min(1e-6);
        Ok(Evaluator {
            trace,
            step,
            eps,
            tol: eps * 1e-2,
        })
    }

    fn grid(&self, lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
        build_grid(lo, hi, self.step, self.trace.times(), extra, self.tol)
    }

    fn signal(&self, f: &Formula, lo: f64, hi: f64) -> Result<ScoreSignal> {
        match f {
            Formula::True => Ok(ScoreSignal::constant(lo, hi, 1.0)),
            Formula::Predicate {
                var,
                direction,
                threshold,
            } => {
                let idx = self.trace.index_of(var)?;
                let grid = self.grid(lo, hi, &[]);
                let values = grid
                    .iter()
                    .map(|&t| {
                        let s = self.trace.value(idx, t);
                        match direction {
                            Direction::Geq => 0.5 * (s - threshold),
                            Direction::Leq => 0.5 * (threshold - s),
                        }
                    })
                    .collect();
                Ok(ScoreSignal::from_parts(grid, values).with_crossings())
            }
            Formula::Not(child) => Ok(self.signal(child, lo, hi)?.negated()),
            Formula::And(children) => self.combine(children, lo, hi, false),
            Formula::Or(children) => self.combine(children, lo, hi, true),
            Formula::Globally(iv, child) => {
                let c = self.signal(child, lo + iv.lower, hi + iv.upper)?;
                Ok(self.globally(&c, iv, lo, hi))
            }
            Formula::Eventually(iv, child) => {
                let c = self.signal(child, lo + iv.lower, hi + iv.upper)?.negated();
                Ok(self.globally(&c, iv, lo, hi).negated())
            }
            Formula::Until(..) => Err(Error::UnsupportedOperator("U (until)")),
        }
    }

    /// Conjunction, or disjunction as the negated conjunction of negated children.
    fn combine(&self, children: &[Formula], lo: f64, hi: f64, dual: bool) -> Result<ScoreSignal> {
        let sigs = children
            .iter()
            .map(|c| {
                let s = self.signal(c, lo, hi)?;
                Ok(if dual { s.negated() } else { s })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut extra = Vec::new();
        for s in &sigs {
            let (g, v) = (s.grid(), s.values());
            extra.extend_from_slice(g);
            for j in 0..g.len() {
                let nonzero_neighbour = (j > 0 && v[j - 1] != 0.0)
                    || (j + 1 < g.len() && v[j + 1] != 0.0);
                if v[j] == 0.0 && nonzero_neighbour {
                    extra.push(g[j] - self.eps);
                    extra.push(g[j] + self.eps);
                }
            }
        }
        let grid = self.grid(lo, hi, &extra);
        let mut scratch = vec![0.0; sigs.len()];
        let values = grid
            .iter()
            .map(|&t| {
                for (slot, s) in scratch.iter_mut().zip(&sigs) {
                    *slot = s.value_at(t);
                }
                let v = conjunction(&mut scratch);
                if dual {
                    -v
                } else {
                    v
                }
            })
            .collect();
        Ok(ScoreSignal::from_parts(grid, values))
    }

    /// Always-window over a child signal spanning `[lo + a, hi + b]`.
    fn globally(&self, child: &ScoreSignal, iv: &Interval, lo: f64, hi: f64) -> ScoreSignal {
        let (a, b) = (iv.lower, iv.upper);
        let length = b - a;
        let window = Window::new(child);

        let mut extra = Vec::new();
        let (g, v) = (child.grid(), child.values());
        let n = g.len();
        let mut j = 0;
        while j < n {
            if v[j] > 0.0 {
                j += 1;
                continue;
            }
            let start = j;
            while j + 1 < n && v[j + 1] <= 0.0 {
                j += 1;
            }
            let end = j;
            if start > 0 {
                let z0 = if v[start] == 0.0 {
                    g[start]
                } else {
                    crate::trace::signal::linear_root(g[start - 1], v[start - 1], g[start], v[start])
                };
                extra.extend([z0 - b - self.eps, z0 - b, z0 - b + self.eps]);
            }
            if end + 1 < n {
                let z1 = if v[end] == 0.0 {
                    g[end]
                } else {
                    crate::trace::signal::linear_root(g[end], v[end], g[end + 1], v[end + 1])
                };
                extra.extend([z1 - a - self.eps, z1 - a, z1 - a + self.eps]);
            }
            j += 1;
        }

        let grid = self.grid(lo, hi, &extra);
        let values = grid
            .iter()
            .map(|&t| window.globally(t + a, t + b, length))
            .collect();
        ScoreSignal::from_parts(grid, values)
    }
}
