//! Traditional (min/max) robustness over continuous time.
//!
//! Every intermediate score is kept as an exact piecewise-linear function:
//! predicates are linear between trace samples, pointwise min/max of linear
//! pieces only adds their intersections as breakpoints, and the sliding-window
//! minimum of a piecewise-linear function is again piecewise linear with
//! breakpoints at shifted child breakpoints and at intersections of the
//! window-endpoint lines with the interior minimum.

use std::collections::VecDeque;

use crate::agim::Verdict;
use crate::error::{Error, Result};
use crate::formula::{Direction, Formula, Interval};
use crate::trace::{ScoreSignal, Trace};

/// Traditional robustness value. `+inf` for `true`, `-inf` for its negation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rho {
    pub value: f64,
}

impl Rho {
    pub fn verdict(&self) -> Verdict {
        Verdict::from_score(self.value)
    }
}

/// Robustness of `formula` on `trace` at time `t`.
pub fn rho(formula: &Formula, trace: &Trace, t: f64) -> Result<Rho> {
    check(formula, trace, t, t)?;
    let value = Evaluator { trace }.signal(formula, t, t)?.values()[0];
    Ok(Rho { value })
}

/// Robustness evaluated at every point of `grid` (sorted ascending).
pub fn rho_signal(formula: &Formula, trace: &Trace, grid: &[f64]) -> Result<ScoreSignal> {
    let (Some(&lo), Some(&hi)) = (grid.first(), grid.last()) else {
        return Err(Error::InvalidTrace("empty evaluation grid".into()));
    };
    check(formula, trace, lo, hi)?;
    let exact = Evaluator { trace }.signal(formula, lo, hi)?;
    let values = grid.iter().map(|&t| exact.value_at(t)).collect();
    ScoreSignal::new(grid.to_vec(), values)
}

/// Exact piecewise-linear robustness signal over `[lo, hi]`.
pub fn rho_exact_signal(formula: &Formula, trace: &Trace, lo: f64, hi: f64) -> Result<ScoreSignal> {
    check(formula, trace, lo, hi)?;
    Evaluator { trace }.signal(formula, lo, hi)
}

fn check(formula: &Formula, trace: &Trace, lo: f64, hi: f64) -> Result<()> {
    if formula.contains_until() {
        return Err(Error::UnsupportedOperator("U (until)"));
    }
    for var in formula.variables() {
        trace.index_of(var)?;
    }
    trace.check_covers(lo, hi + formula.horizon())
}

struct Evaluator<'a> {
    trace: &'a Trace,
}

impl Evaluator<'_> {
    fn signal(&self, f: &Formula, lo: f64, hi: f64) -> Result<ScoreSignal> {
        match f {
            Formula::True => Ok(ScoreSignal::constant(lo, hi, f64::INFINITY)),
            Formula::Predicate {
                var,
                direction,
                threshold,
            } => {
                let idx = self.trace.index_of(var)?;
                let times = self.trace.times();
                let mut grid = vec![lo];
                let a = times.partition_point(|&t| t <= lo);
                let b = times.partition_point(|&t| t < hi);
                grid.extend(times[a..b.max(a)].iter().copied());
                if hi > lo {
                    grid.push(hi);
                }
                let values = grid
                    .iter()
                    .map(|&t| {
                        let s = self.trace.value(idx, t);
                        match direction {
                            Direction::Geq => s - threshold,
                            Direction::Leq => threshold - s,
                        }
                    })
                    .collect();
                Ok(ScoreSignal::from_parts(grid, values))
            }
            Formula::Not(child) => Ok(self.signal(child, lo, hi)?.negated()),
            Formula::And(children) => {
                let sigs = children
                    .iter()
                    .map(|c| self.signal(c, lo, hi))
                    .collect::<Result<Vec<_>>>()?;
                Ok(pointwise_min(&sigs))
            }
            Formula::Or(children) => {
                let sigs = children
                    .iter()
                    .map(|c| self.signal(c, lo, hi).map(|s| s.negated()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(pointwise_min(&sigs).negated())
            }
            Formula::Globally(interval, child) => {
                let c = self.signal(child, lo + interval.lower, hi + interval.upper)?;
                Ok(sliding_min(&c, interval, lo, hi))
            }
            Formula::Eventually(interval, child) => {
                let c = self
                    .signal(child, lo + interval.lower, hi + interval.upper)?
                    .negated();
                Ok(sliding_min(&c, interval, lo, hi).negated())
            }
            Formula::Until(..) => Err(Error::UnsupportedOperator("U (until)")),
        }
    }
}

fn merged_grid(sigs: &[ScoreSignal]) -> Vec<f64> {
    let mut grid: Vec<f64> = sigs.iter().flat_map(|s| s.grid().iter().copied()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Lower envelope of piecewise-linear signals sharing the same span.
fn pointwise_min(sigs: &[ScoreSignal]) -> ScoreSignal {
    let grid = merged_grid(sigs);
    if grid.len() == 1 {
        let v = sigs.iter().map(|s| s.value_at(grid[0])).fold(f64::INFINITY, f64::min);
        return ScoreSignal::from_parts(grid, vec![v]);
    }
    let mut out_t = vec![grid[0]];
    let mut out_v = vec![sigs.iter().map(|s| s.value_at(grid[0])).fold(f64::INFINITY, f64::min)];
    let mut cuts = Vec::new();
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let ends: Vec<(f64, f64)> = sigs.iter().map(|s| (s.value_at(t0), s.value_at(t1))).collect();
        cuts.clear();
        for i in 0..ends.len() {
            for j in i + 1..ends.len() {
                if let Some(x) = intersection(t0, t1, ends[i], ends[j]) {
                    cuts.push(x);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for &x in cuts.iter().chain(std::iter::once(&t1)) {
            if x <= *out_t.last().unwrap() {
                continue;
            }
            let v = ends
                .iter()
                .map(|&(v0, v1)| line_at(t0, t1, v0, v1, x))
                .fold(f64::INFINITY, f64::min);
            out_t.push(x);
            out_v.push(v);
        }
    }
    ScoreSignal::from_parts(out_t, out_v)
}

fn line_at(t0: f64, t1: f64, v0: f64, v1: f64, x: f64) -> f64 {
    if x <= t0 || v0 == v1 {
        v0
    } else if x >= t1 {
        v1
    } else {
        v0 + (v1 - v0) * ((x - t0) / (t1 - t0))
    }
}

/// Crossing point strictly inside `(t0, t1)` of two lines given by their end values.
fn intersection(t0: f64, t1: f64, p: (f64, f64), q: (f64, f64)) -> Option<f64> {
    if !(p.0.is_finite() && p.1.is_finite() && q.0.is_finite() && q.1.is_finite()) {
        return None;
    }
    let d0 = p.0 - q.0;
    let d1 = p.1 - q.1;
    if (d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0) {
        let x = t0 + (t1 - t0) * (d0 / (d0 - d1));
        (x > t0 && x < t1).then_some(x)
    } else {
        None
    }
}

/// `tau -> min over [tau + a, tau + b]` of `c`, for `tau` in `[lo, hi]`.
fn sliding_min(c: &ScoreSignal, interval: &Interval, lo: f64, hi: f64) -> ScoreSignal {
    let (a, b) = (interval.lower, interval.upper);
    if lo == hi {
        return ScoreSignal::from_parts(vec![lo], vec![c.min_on(lo + a, lo + b)]);
    }
    if a == b {
        let mut grid = vec![lo];
        grid.extend(c.grid().iter().map(|g| g - a).filter(|&t| t > lo && t < hi));
        grid.push(hi);
        grid.dedup();
        let values = grid.iter().map(|&t| c.value_at(t + a)).collect();
        return ScoreSignal::from_parts(grid, values);
    }

    let mut events: Vec<f64> = vec![lo, hi];
    for &g in c.grid() {
        for t in [g - a, g - b] {
            if t > lo && t < hi {
                events.push(t);
            }
        }
    }
    events.sort_by(f64::total_cmp);
    events.dedup();

    let grid = c.grid();
    let vals = c.values();
    // monotone deque of interior grid indices, values increasing
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next_in = 0usize;

    let mut out_t = Vec::with_capacity(events.len() * 2);
    let mut out_v = Vec::with_capacity(events.len() * 2);
    for w in events.windows(2) {
        let (e0, e1) = (w[0], w[1]);
        let mid = 0.5 * (e0 + e1);
        let first = grid.partition_point(|&g| g <= mid + a);
        let end = grid.partition_point(|&g| g < mid + b);
        while next_in < end {
            while deque.back().is_some_and(|&k| vals[k] >= vals[next_in]) {
                deque.pop_back();
            }
            deque.push_back(next_in);
            next_in += 1;
        }
        while deque.front().is_some_and(|&k| k < first) {
            deque.pop_front();
        }
        let interior = deque.front().map_or(f64::INFINITY, |&k| vals[k]);

        let left = (c.value_at(e0 + a), c.value_at(e1 + a));
        let right = (c.value_at(e0 + b), c.value_at(e1 + b));
        let flat = (interior, interior);
        let mut pts = vec![e0, e1];
        for (p, q) in [(left, right), (left, flat), (right, flat)] {
            if let Some(x) = intersection(e0, e1, p, q) {
                pts.push(x);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        for x in pts {
            if out_t.last().is_some_and(|&last| x <= last) {
                continue;
            }
            let v = line_at(e0, e1, left.0, left.1, x)
                .min(line_at(e0, e1, right.0, right.1, x))
                .min(interior);
            out_t.push(x);
            out_v.push(v);
        }
    }
    ScoreSignal::from_parts(out_t, out_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn single(times: Vec<f64>, values: Vec<f64>) -> Trace {
        Trace::from_columns(vec!["s".into()], times, vec![values]).unwrap()
    }

    /// Brute-force window minimum over a dense sampling.
    fn dense_min(c: &ScoreSignal, from: f64, to: f64, n: usize) -> f64 {
        (0..=n)
            .map(|k| c.value_at(from + (to - from) * k as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn true_has_infinite_robustness() {
        let tr = single(vec![0.0, 1.0], vec![0.0, 1.0]);
        assert_eq!(rho(&Formula::True, &tr, 0.0).unwrap().value, f64::INFINITY);
        assert_eq!(
            rho(&Formula::not(Formula::True), &tr, 0.0).unwrap().value,
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn ramp_window_extrema() {
        // child score tau - 0.5 on [0, 1]
        let tr = single(vec![0.0, 1.0], vec![-0.5, 0.5]);
        let g = parse("G[0,1] (s >= 0)").unwrap();
        let f = parse("F[0,1] (s >= 0)").unwrap();
        assert_eq!(rho(&g, &tr, 0.0).unwrap().value, -0.5);
        assert_eq!(rho(&f, &tr, 0.0).unwrap().value, 0.5);
    }

    #[test]
    fn overshoot_peak_determines_eventually() {
        let tr = single(vec![0.0, 0.2, 0.4, 1.0], vec![0.0, 1.5, 1.0, 1.0]);
        let f = parse("F[0,1] (s >= 1.2)").unwrap();
        assert!((rho(&f, &tr, 0.0).unwrap().value - 0.3).abs() < 1e-12);
    }

    #[test]
    fn until_is_refused() {
        let tr = single(vec![0.0, 1.0], vec![0.0, 1.0]);
        let f = parse("(s >= 0) U[0,1] (s >= 0.5)").unwrap();
        assert!(matches!(rho(&f, &tr, 0.0), Err(Error::UnsupportedOperator(_))));
    }

    #[test]
    fn short_trace_is_out_of_domain() {
        let tr = single(vec![0.0, 1.0], vec![0.0, 1.0]);
        let f = parse("G[0,2] (s >= 0)").unwrap();
        assert!(matches!(rho(&f, &tr, 0.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn degenerate_interval_is_point_evaluation() {
        let tr = single(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]);
        let f = parse("G[1,1] (s >= 0.25)").unwrap();
        assert_eq!(rho(&f, &tr, 0.0).unwrap().value, 0.75);
        assert!((rho(&f, &tr, 0.5).unwrap().value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rho_signal_is_pointwise_consistent() {
        let tr = single(
            (0..=20).map(|k| k as f64 * 0.25).collect(),
            (0..=20).map(|k| ((k as f64) * 0.9).sin()).collect(),
        );
        let f = parse("G[0,1] F[0.5,1.5] (s >= 0.1)").unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.25).collect();
        let sig = rho_signal(&f, &tr, &grid).unwrap();
        for (&t, &v) in sig.grid().iter().zip(sig.values()) {
            let pointwise = rho(&f, &tr, t).unwrap().value;
            assert!((pointwise - v).abs() < 1e-12, "t={t}: {pointwise} vs {v}");
        }
    }

    #[test]
    fn sliding_window_matches_dense_sampling() {
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| (3.0 * t).sin() * (0.5 + t)).collect();
        let c = ScoreSignal::new(times, values).unwrap();
        let interval = Interval::new(0.3, 1.1).unwrap();
        let m = sliding_min(&c, &interval, 0.0, 2.9);
        for k in 0..=290 {
            let tau = k as f64 * 0.01;
            let exact = m.value_at(tau);
            // every extremum is at a breakpoint, so 10^4 samples plus the
            // child grid points reproduce it
            let mut brute = dense_min(&c, tau + 0.3, tau + 1.1, 10_000);
            brute = brute.min(c.min_on(tau + 0.3, tau + 1.1));
            assert!((exact - brute).abs() < 1e-9, "tau={tau}: {exact} vs {brute}");
        }
    }

    #[test]
    fn conjunction_envelope_includes_intersections() {
        let p = ScoreSignal::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let q = ScoreSignal::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        let m = pointwise_min(&[p, q]);
        assert_eq!(m.grid(), &[0.0, 0.5, 1.0]);
        assert_eq!(m.values(), &[0.0, 0.5, 0.0]);
    }

    #[test]
    fn de_morgan_for_globally_is_exact() {
        let tr = single(
            (0..=30).map(|k| k as f64 * 0.2).collect(),
            (0..=30).map(|k| ((k as f64) * 0.7).cos() * 0.8).collect(),
        );
        let g = parse("G[0.5,2] (s >= 0.1)").unwrap();
        let nfn = parse("!F[0.5,2] !(s >= 0.1)").unwrap();
        for k in 0..20 {
            let t = k as f64 * 0.2;
            assert_eq!(
                rho(&g, &tr, t).unwrap().value,
                rho(&nfn, &tr, t).unwrap().value
            );
        }
    }
}
