//! Window integrals of piecewise-linear score signals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{ScoreSignal, Sign, Trace};
use crate::trace::signal::clipped_piece;

/// Numerical settings for AGIM evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Explicit refinement step; derived from the trace when `None`.
    pub step: Option<f64>,
    /// Divisor applied to the median trace spacing when `step` is `None`.
    pub refine_factor: f64,
    /// Safety margin below which a logarithm argument is treated as a branch bug.
    pub floor: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            step: None,
            refine_factor: 4.0,
            floor: 1e-12,
        }
    }
}

impl QuadratureConfig {
    pub fn with_step(step: f64) -> Self {
        QuadratureConfig {
            step: Some(step),
            ..Self::default()
        }
    }

    /// Refinement step used for `trace`.
    pub fn step_for(&self, trace: &Trace) -> Result<f64> {
        let h = match self.step {
            Some(h) => h,
            None => {
                if !(self.refine_factor.is_finite() && self.refine_factor > 0.0) {
                    return Err(Error::Config(format!(
                        "refine factor must be positive, got {}",
                        self.refine_factor
                    )));
                }
                trace.median_spacing() / self.refine_factor
            }
        };
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Config(format!("grid step must be positive, got {h}")));
        }
        Ok(h)
    }
}

/// Shift applied inside the logarithm of a geometric integral mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// `1 + x`, used for satisfied windows.
    OnePlus,
    /// `1 - x`, used for violated windows.
    OneMinus,
}

/// Pointwise condition tested by [`any`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `s <= 0`
    NonPositive,
    /// `s > 0`
    Positive,
}

/// Prefix sums over a score signal answering window queries in `O(log n)`.
pub(crate) struct Window<'a> {
    signal: &'a ScoreSignal,
    /// Exact integral of `[s]-` from the first grid point.
    negative: Vec<f64>,
    /// Trapezoid integral of `ln(1 + [s]+)` from the first grid point.
    log: Vec<f64>,
    /// First index `>= k` whose value is `<= 0`, or `n`.
    next_nonpositive: Vec<usize>,
    /// Last index `>= k` such that `values[k..=j]` are all equal.
    run_end: Vec<usize>,
}

impl<'a> Window<'a> {
    pub(crate) fn new(signal: &'a ScoreSignal) -> Self {
        let g = signal.grid();
        let v = signal.values();
        let n = g.len();
        let mut negative = vec![0.0; n];
        let mut log = vec![0.0; n];
        for k in 1..n {
            negative[k] =
                negative[k - 1] + clipped_piece(g[k - 1], v[k - 1], g[k], v[k], Sign::Negative);
            log[k] = log[k - 1] + trapezoid(g[k - 1], v[k - 1], g[k], v[k]);
        }
        let mut next_nonpositive = vec![n; n + 1];
        let mut run_end = vec![0; n];
        for k in (0..n).rev() {
            next_nonpositive[k] = if v[k] <= 0.0 {
                k
            } else {
                next_nonpositive[k + 1]
            };
            run_end[k] = if k + 1 < n && v[k + 1] == v[k] {
                run_end[k + 1]
            } else {
                k
            };
        }
        Window {
            signal,
            negative,
            log,
            next_nonpositive,
            run_end,
        }
    }

    /// Segment indices holding the window endpoints.
    fn segments(&self, x: f64, y: f64) -> (usize, usize) {
        (self.signal.segment(x), self.signal.segment(y))
    }

    /// The common value if the signal is constant on `[x, y]`.
    pub(crate) fn constant(&self, x: f64, y: f64) -> Option<f64> {
        let s = self.signal;
        let (cx, cy) = (s.value_at(x), s.value_at(y));
        if s.len() == 1 {
            return Some(cx);
        }
        if cx != cy {
            return None;
        }
        let (ks, ke) = self.segments(x, y);
        let v = s.values();
        if ks == ke || self.run_end[ks + 1] >= ke && v[ks + 1] == cx {
            Some(cx)
        } else {
            None
        }
    }

    /// Whether the signal is `<= 0` somewhere on `[x, y]`.
    pub(crate) fn any_nonpositive(&self, x: f64, y: f64) -> bool {
        let s = self.signal;
        if s.value_at(x) <= 0.0 || s.value_at(y) <= 0.0 {
            return true;
        }
        if s.len() == 1 {
            return false;
        }
        let (ks, ke) = self.segments(x, y);
        ks < ke && self.next_nonpositive[ks + 1] <= ke
    }

    /// Exact `∫ [s]-` over `[x, y]`.
    pub(crate) fn negative_integral(&self, x: f64, y: f64) -> f64 {
        self.integral(x, y, &self.negative, |x0, v0, x1, v1| {
            clipped_piece(x0, v0, x1, v1, Sign::Negative)
        })
    }

    /// Trapezoid `∫ ln(1 + [s]+)` over `[x, y]` with the window endpoints as nodes.
    pub(crate) fn log_integral(&self, x: f64, y: f64) -> f64 {
        self.integral(x, y, &self.log, trapezoid)
    }

    fn integral(
        &self,
        x: f64,
        y: f64,
        prefix: &[f64],
        piece: impl Fn(f64, f64, f64, f64) -> f64,
    ) -> f64 {
        let s = self.signal;
        if s.len() == 1 || y <= x {
            return piece(x, s.value_at(x), y, s.value_at(y));
        }
        let (g, v) = (s.grid(), s.values());
        let (ks, ke) = self.segments(x, y);
        let (cx, cy) = (s.value_at(x), s.value_at(y));
        if ks == ke {
            return piece(x, cx, y, cy);
        }
        piece(x, cx, g[ks + 1], v[ks + 1])
            + (prefix[ke] - prefix[ks + 1])
            + piece(g[ke], v[ke], y, cy)
    }

    /// AGIM value of an always-window over `[x, y]` normalized by `length`.
    pub(crate) fn globally(&self, x: f64, y: f64, length: f64) -> f64 {
        if let Some(c) = self.constant(x, y) {
            return c;
        }
        if self.any_nonpositive(x, y) {
            self.negative_integral(x, y) / length
        } else {
            (self.log_integral(x, y) / length).exp_m1()
        }
    }
}

fn trapezoid(x0: f64, v0: f64, x1: f64, v1: f64) -> f64 {
    0.5 * (v0.max(0.0).ln_1p() + v1.max(0.0).ln_1p()) * (x1 - x0)
}

fn check_window(s: &ScoreSignal, from: f64, to: f64) -> Result<()> {
    for t in [from, to] {
        if !(s.start() <= t && t <= s.end()) {
            return Err(Error::OutOfDomain {
                time: t,
                start: s.start(),
                end: s.end(),
            });
        }
    }
    if to <= from {
        return Err(Error::Interval {
            lower: from,
            upper: to,
            reason: "integration window must have positive length",
        });
    }
    Ok(())
}

/// `exp((1/(to-from)) ∫ ln(transform(s)))` by the trapezoid rule in the log domain.
///
/// Fails with [`Error::BranchViolation`] if the transformed integrand drops
/// below `1 - floor`, which means the caller picked the wrong branch.
pub fn geometric_integral_mean(
    s: &ScoreSignal,
    from: f64,
    to: f64,
    transform: Transform,
    floor: f64,
) -> Result<f64> {
    check_window(s, from, to)?;
    let oriented = match transform {
        Transform::OnePlus => s.clone(),
        Transform::OneMinus => s.negated(),
    };
    let mut probe = vec![from, to];
    let lo = oriented.grid().partition_point(|&g| g <= from);
    let hi = oriented.grid().partition_point(|&g| g < to);
    probe.extend_from_slice(&oriented.grid()[lo..hi.max(lo)]);
    for t in probe {
        let v = oriented.value_at(t);
        if 1.0 + v < 1.0 - floor {
            return Err(Error::BranchViolation { time: t, value: 1.0 + v });
        }
    }
    let window = Window::new(&oriented);
    Ok((window.log_integral(from, to) / (to - from)).exp())
}

/// `(1/(to-from)) ∫ [s]+` or `[s]-`, integrated exactly piece by piece.
pub fn clipped_mean_integral(s: &ScoreSignal, from: f64, to: f64, sign: Sign) -> Result<f64> {
    check_window(s, from, to)?;
    Ok(s.clipped_integral(from, to, sign) / (to - from))
}

/// Whether `s` meets `condition` anywhere on `[from, to]`, decided exactly
/// from the piecewise-linear structure.
pub fn any(s: &ScoreSignal, from: f64, to: f64, condition: Condition) -> Result<bool> {
    for t in [from, to] {
        if !(s.start() <= t && t <= s.end()) {
            return Err(Error::OutOfDomain {
                time: t,
                start: s.start(),
                end: s.end(),
            });
        }
    }
    Ok(match condition {
        Condition::NonPositive => s.min_on(from, to) <= 0.0,
        Condition::Positive => s.max_on(from, to) > 0.0,
    })
}
