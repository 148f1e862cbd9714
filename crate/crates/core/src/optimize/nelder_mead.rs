//! Box-constrained Nelder–Mead with restarts on collapse.

use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trace::Range;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const INITIAL_STEP: f64 = 0.25;
/// Iterations per dimension without improvement before the simplex is
/// considered stuck and rebuilt elsewhere.
const STALL_PER_DIM: usize = 10;

/// One objective evaluation inside a lane.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Sample {
    pub point: Vec<f64>,
    pub score: f64,
    pub wall_ms: f64,
}

/// Everything one lane evaluated, in order.
#[derive(Debug, Clone, Default)]
pub(crate) struct Lane {
    pub samples: Vec<Sample>,
    pub iterations: usize,
    /// Local index of the first sample that met the stopping condition.
    pub hit: Option<usize>,
}

struct Search<'a, F: Fn(&[f64]) -> f64> {
    cost: F,
    bounds: &'a [Range],
    budget: usize,
    stop: &'a dyn Fn(f64) -> bool,
    cancelled: &'a dyn Fn() -> bool,
    lane: Lane,
    /// Sign turning scores into costs to minimize.
    sign: f64,
}

/// Signals that the lane must stop evaluating.
struct Halt;

impl<F: Fn(&[f64]) -> f64> Search<'_, F> {
    fn clamp(&self, x: &mut [f64]) {
        for (v, r) in x.iter_mut().zip(self.bounds) {
            *v = v.clamp(r.lower, r.upper);
        }
    }

    fn eval(&mut self, mut x: Vec<f64>) -> Result<f64, Halt> {
        if self.lane.samples.len() >= self.budget || self.lane.hit.is_some() || (self.cancelled)() {
            return Err(Halt);
        }
        self.clamp(&mut x);
        let start = Instant::now();
        let score = (self.cost)(&x);
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        if (self.stop)(score) {
            self.lane.hit = Some(self.lane.samples.len());
        }
        self.lane.samples.push(Sample {
            point: x,
            score,
            wall_ms,
        });
        Ok(self.sign * score)
    }

    fn simplex(&mut self, x0: Vec<f64>) -> Result<Vec<(Vec<f64>, f64)>, Halt> {
        let f0 = self.eval(x0.clone())?;
        self.simplex_around((x0, f0))
    }

    /// Axis-aligned simplex around an already evaluated vertex.
    fn simplex_around(&mut self, (x0, f0): (Vec<f64>, f64)) -> Result<Vec<(Vec<f64>, f64)>, Halt> {
        let mut simplex = vec![(x0.clone(), f0)];
        for i in 0..x0.len() {
            let r = self.bounds[i];
            let step = INITIAL_STEP * (r.upper - r.lower);
            let mut x = x0.clone();
            x[i] = if x0[i] + step <= r.upper { x0[i] + step } else { x0[i] - step };
            let f = self.eval(x.clone())?;
            simplex.push((x, f));
        }
        Ok(simplex)
    }

    fn converged(&self, simplex: &[(Vec<f64>, f64)]) -> bool {
        let (best, worst) = (simplex[0].1, simplex[simplex.len() - 1].1);
        let flat = (worst - best).abs() <= 1e-12 * (1.0 + best.abs());
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .zip(self.bounds)
                    .map(|((a, b), r)| (a - b).abs() / (r.upper - r.lower))
            })
            .fold(0.0, f64::max);
        flat || size <= 1e-6
    }

    fn run(&mut self, first: Vec<f64>, rng: &mut ChaCha8Rng) -> Result<(), Halt> {
        let mut simplex = self.simplex(first)?;
        let n = self.bounds.len();
        let (mut record, mut stall) = (f64::INFINITY, 0);
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if record.is_infinite() || simplex[0].1 < record - 1e-12 * (1.0 + record.abs()) {
                (record, stall) = (simplex[0].1, 0);
            } else {
                stall += 1;
            }
            if self.converged(&simplex) {
                let x0 = random_point(self.bounds, rng);
                simplex = self.simplex(x0)?;
                (record, stall) = (f64::INFINITY, 0);
                continue;
            }
            if stall > STALL_PER_DIM * (n + 1) {
                // A degenerate simplex stops improving long before it
                // shrinks; rebuild a full-size one around the best vertex.
                let best = simplex[0].clone();
                simplex = self.simplex_around(best)?;
                stall = 0;
                continue;
            }
            self.lane.iterations += 1;
            let worst = simplex[n].clone();
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / n as f64;
                }
            }
            let toward = |t: f64, p: &[f64]| -> Vec<f64> {
                centroid.iter().zip(p).map(|(c, v)| c + t * (v - c)).collect()
            };
            let xr = toward(-REFLECT, &worst.0);
            let fr = self.eval(xr.clone())?;
            if fr < simplex[0].1 {
                let xe = toward(-REFLECT * EXPAND, &worst.0);
                let fe = self.eval(xe.clone())?;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let xc = toward(-REFLECT * CONTRACT, &worst.0);
                let fc = self.eval(xc.clone())?;
                (xc, fc)
            } else {
                let xc = toward(CONTRACT, &worst.0);
                let fc = self.eval(xc.clone())?;
                (xc, fc)
            };
            if fc < fr.min(worst.1) {
                simplex[n] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for entry in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = best
                    .iter()
                    .zip(&entry.0)
                    .map(|(b, v)| b + SHRINK * (v - b))
                    .collect();
                let f = self.eval(x.clone())?;
                *entry = (x, f);
            }
        }
    }
}

pub(crate) fn random_point(bounds: &[Range], rng: &mut ChaCha8Rng) -> Vec<f64> {
    bounds
        .iter()
        .map(|r| rng.random_range(r.lower..=r.upper))
        .collect()
}

pub(crate) fn midpoint(bounds: &[Range]) -> Vec<f64> {
    bounds.iter().map(|r| 0.5 * (r.lower + r.upper)).collect()
}

/// Runs one lane: minimizes `sign * score` from `start` (random when `None`)
/// until `budget` evaluations, a score satisfying `stop`, or cancellation.
/// Random points come from stream `stream` of the ChaCha generator seeded
/// with `seed`, so lanes of one run never share random numbers.
pub(crate) fn lane<F: Fn(&[f64]) -> f64>(
    cost: F,
    bounds: &[Range],
    budget: usize,
    sign: f64,
    seed: u64,
    stream: u64,
    start: Option<Vec<f64>>,
    stop: &dyn Fn(f64) -> bool,
    cancelled: &dyn Fn() -> bool,
) -> Lane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let first = start.unwrap_or_else(|| random_point(bounds, &mut rng));
    let mut search = Search {
        cost,
        bounds,
        budget,
        stop,
        cancelled,
        lane: Lane::default(),
        sign,
    };
    let _ = search.run(first, &mut rng);
    search.lane
}
