//! Scalar score functions of time, linear between grid points.

use crate::error::{Error, Result};

/// Which clipped part of a signal to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `[s]+ = max(s, 0)`
    Positive,
    /// `[s]- = min(s, 0)`
    Negative,
}

/// A robustness-over-time function sampled on a strictly increasing grid and
/// interpreted as piecewise linear between grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSignal {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl ScoreSignal {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::InvalidTrace(format!(
                "score signal needs matching non-empty grid and values ({} vs {})",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTrace(
                "score signal grid must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidTrace("score signal contains NaN".into()));
        }
        Ok(ScoreSignal { grid, values })
    }

    pub(crate) fn from_parts(grid: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        debug_assert!(grid.windows(2).all(|w| w[1] > w[0]));
        ScoreSignal { grid, values }
    }

    pub fn constant(start: f64, end: f64, value: f64) -> Self {
        if start == end {
            ScoreSignal::from_parts(vec![start], vec![value])
        } else {
            ScoreSignal::from_parts(vec![start, end], vec![value, value])
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn negated(&self) -> ScoreSignal {
        ScoreSignal {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Index `k` of the segment `[grid[k], grid[k+1]]` containing `t`.
    /// Requires at least two grid points.
    pub(crate) fn segment(&self, t: f64) -> usize {
        let k = self.grid.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.grid.len() - 2)
    }

    /// Interpolated value at `t`; exact at grid points, clamped outside the span.
    pub fn value_at(&self, t: f64) -> f64 {
        if self.grid.len() == 1 {
            return self.values[0];
        }
        let k = self.segment(t);
        let (t0, t1) = (self.grid[k], self.grid[k + 1]);
        let (v0, v1) = (self.values[k], self.values[k + 1]);
        if t <= t0 {
            return v0;
        }
        if t >= t1 {
            return v1;
        }
        if v0 == v1 {
            return v0;
        }
        v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
    }

    /// Piecewise-linear pieces `(x0, v0, x1, v1)` covering `[from, to]`.
    pub(crate) fn pieces(&self, from: f64, to: f64) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::new();
        if self.grid.len() < 2 || to <= from {
            return out;
        }
        let first = self.segment(from);
        let mut x0 = from;
        let mut v0 = self.value_at(from);
        for k in first..self.grid.len() - 1 {
            let seg_end = self.grid[k + 1];
            if seg_end >= to {
                out.push((x0, v0, to, self.value_at(to)));
                break;
            }
            if seg_end > x0 {
                out.push((x0, v0, seg_end, self.values[k + 1]));
                x0 = seg_end;
                v0 = self.values[k + 1];
            }
        }
        out
    }

    /// Minimum over the window `[from, to]`, attained at a grid point or an endpoint.
    pub fn min_on(&self, from: f64, to: f64) -> f64 {
        self.extremum_on(from, to, f64::min)
    }

    /// Maximum over the window `[from, to]`.
    pub fn max_on(&self, from: f64, to: f64) -> f64 {
        self.extremum_on(from, to, f64::max)
    }

    fn extremum_on(&self, from: f64, to: f64, pick: fn(f64, f64) -> f64) -> f64 {
        let mut best = pick(self.value_at(from), self.value_at(to));
        let lo = self.grid.partition_point(|&x| x <= from);
        let hi = self.grid.partition_point(|&x| x < to);
        for &v in &self.values[lo..hi.max(lo)] {
            best = pick(best, v);
        }
        best
    }

    /// All times in `[from, to]` where the signal crosses or touches zero, sorted.
    pub fn zero_crossings(&self, from: f64, to: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        let mut push = |t: f64| {
            if out.last() != Some(&t) {
                out.push(t);
            }
        };
        if self.grid.len() == 1 || from == to {
            if self.value_at(from) == 0.0 {
                push(from);
            }
            return out;
        }
        for (x0, v0, x1, v1) in self.pieces(from, to) {
            if v0 == 0.0 {
                push(x0);
            }
            if (v0 < 0.0 && v1 > 0.0) || (v0 > 0.0 && v1 < 0.0) {
                push(linear_root(x0, v0, x1, v1));
            }
            if v1 == 0.0 {
                push(x1);
            }
        }
        out
    }

    /// Inserts every strict sign change as an explicit grid point with value 0.
    pub fn with_crossings(self) -> ScoreSignal {
        let n = self.grid.len();
        let needs = self
            .values
            .windows(2)
            .any(|w| (w[0] < 0.0 && w[1] > 0.0) || (w[0] > 0.0 && w[1] < 0.0));
        if !needs {
            return self;
        }
        let mut grid = Vec::with_capacity(n + 8);
        let mut values = Vec::with_capacity(n + 8);
        for k in 0..n {
            grid.push(self.grid[k]);
            values.push(self.values[k]);
            if k + 1 < n {
                let (v0, v1) = (self.values[k], self.values[k + 1]);
                if ((v0 < 0.0 && v1 > 0.0) || (v0 > 0.0 && v1 < 0.0))
                    && v0.is_finite()
                    && v1.is_finite()
                {
                    let r = linear_root(self.grid[k], v0, self.grid[k + 1], v1);
                    if r > self.grid[k] && r < self.grid[k + 1] {
                        grid.push(r);
                        values.push(0.0);
                    }
                }
            }
        }
        ScoreSignal { grid, values }
    }

    /// Exact integral of the clipped signal `[s]+` or `[s]-` over `[from, to]`.
    pub fn clipped_integral(&self, from: f64, to: f64, sign: Sign) -> f64 {
        self.pieces(from, to)
            .into_iter()
            .map(|(x0, v0, x1, v1)| clipped_piece(x0, v0, x1, v1, sign))
            .sum()
    }
}

/// Root of the line through `(x0, v0)` and `(x1, v1)`; `v0` and `v1` have opposite signs.
pub(crate) fn linear_root(x0: f64, v0: f64, x1: f64, v1: f64) -> f64 {
    let r = x0 + (x1 - x0) * (v0 / (v0 - v1));
    r.clamp(x0, x1)
}

/// Integral of the clipped linear piece between `(x0, v0)` and `(x1, v1)`.
pub(crate) fn clipped_piece(x0: f64, v0: f64, x1: f64, v1: f64, sign: Sign) -> f64 {
    let (v0, v1, flip) = match sign {
        Sign::Positive => (v0, v1, 1.0),
        Sign::Negative => (-v0, -v1, -1.0),
    };
    let dx = x1 - x0;
    let area = if v0 >= 0.0 && v1 >= 0.0 {
        0.5 * (v0 + v1) * dx
    } else if v0 <= 0.0 && v1 <= 0.0 {
        0.0
    } else if v0 > 0.0 {
        0.5 * v0 * dx * (v0 / (v0 - v1))
    } else {
        0.5 * v1 * dx * (v1 / (v1 - v0))
    };
    flip * area
}

/// Evaluation grid over `[lo, hi]`: both endpoints, the multiples of `step`,
/// the `anchors` and `extra` points strictly inside, merged when closer than `tol`.
pub(crate) fn build_grid(
    lo: f64,
    hi: f64,
    step: f64,
    anchors: &[f64],
    extra: &[f64],
    tol: f64,
) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let inside = |t: f64| t > lo + tol && t < hi - tol;
    let mut pts: Vec<f64> = Vec::new();
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    for k in first..=last {
        let t = k as f64 * step;
        if inside(t) {
            pts.push(t);
        }
    }
    let a0 = anchors.partition_point(|&t| t <= lo);
    let a1 = anchors.partition_point(|&t| t < hi);
    pts.extend(anchors[a0..a1.max(a0)].iter().copied().filter(|&t| inside(t)));
    pts.extend(extra.iter().copied().filter(|&t| inside(t)));
    pts.sort_by(f64::total_cmp);

    let mut grid = Vec::with_capacity(pts.len() + 2);
    grid.push(lo);
    for t in pts {
        if t - *grid.last().unwrap() > tol {
            grid.push(t);
        }
    }
    grid.push(hi);
    grid
}

/// Uniform refinement step plus merge tolerance used to build evaluation grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Uniform refinement step.
    pub step: f64,
    /// Minimum separation between distinct grid points.
    pub tolerance: f64,
}

impl Grid {
    /// Grid over `[lo, hi]` anchored at multiples of `step` plus the given
    /// anchor times (e.g. trace timestamps).
    pub fn points(&self, lo: f64, hi: f64, anchors: &[f64]) -> Vec<f64> {
        build_grid(lo, hi, self.step, anchors, &[], self.tolerance)
    }
}
