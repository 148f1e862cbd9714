//! Fixed-step simulation of input-driven ODE models under piecewise-constant
//! inputs.

mod agents;
mod config;
mod transmission;

pub use agents::{
    consensus_input, formation_input, ConsensusModel, ConsensusParams, FormationModel,
    FormationParams,
};
pub use config::{ModelConfig, ModelKind};
pub use transmission::{TransmissionModel, TransmissionParams};

use std::io::Write;

use crate::error::{Error, Result};
use crate::trace::{Bounds, Range, Trace};

/// Piecewise-constant input: `values[k]` is held on `[k T_s, (k+1) T_s)`,
/// and the last value is also used at the closing instant `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    period: f64,
    values: Vec<Vec<f64>>,
    bounds: Vec<Range>,
}

impl ControlSequence {
    pub fn new(period: f64, values: Vec<Vec<f64>>, bounds: Vec<Range>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidControl(format!(
                "sample period must be positive, got {period}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidControl("at least one sample is required".into()));
        }
        for (k, u) in values.iter().enumerate() {
            if u.len() != bounds.len() {
                return Err(Error::InvalidControl(format!(
                    "sample {k} has {} components, expected {}",
                    u.len(),
                    bounds.len()
                )));
            }
            for (i, (x, r)) in u.iter().zip(&bounds).enumerate() {
                if !(x.is_finite() && r.contains(*x)) {
                    return Err(Error::InvalidControl(format!(
                        "sample {k} component {i} = {x} outside [{}, {}]",
                        r.lower, r.upper
                    )));
                }
            }
        }
        Ok(ControlSequence {
            period,
            values,
            bounds,
        })
    }

    /// The same value held for `samples` periods.
    pub fn constant(period: f64, samples: usize, value: Vec<f64>, bounds: Vec<Range>) -> Result<Self> {
        Self::new(period, vec![value; samples], bounds)
    }

    /// Rebuilds a sequence from sample-major flattened values.
    pub fn from_flat(period: f64, flat: &[f64], bounds: Vec<Range>) -> Result<Self> {
        let m = bounds.len();
        if m == 0 || flat.len() % m != 0 {
            return Err(Error::InvalidControl(format!(
                "{} values do not split into samples of width {m}",
                flat.len()
            )));
        }
        let values = flat.chunks(m).map(<[f64]>::to_vec).collect();
        Self::new(period, values, bounds)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn bounds(&self) -> &[Range] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total duration `len * T_s`.
    pub fn horizon(&self) -> f64 {
        self.values.len() as f64 * self.period
    }

    /// Index of the sample active at time `t`.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        let end = self.horizon();
        if !(0.0..=end).contains(&t) {
            return Err(Error::OutOfDomain {
                time: t,
                start: 0.0,
                end,
            });
        }
        Ok(((t / self.period).floor() as usize).min(self.values.len() - 1))
    }

    /// Input held at time `t`.
    pub fn hold(&self, t: f64) -> Result<&[f64]> {
        Ok(&self.values[self.index_at(t)?])
    }

    /// Writes `time,u1,...` with one row per sample start time.
    pub fn write_csv<W: Write>(&self, writer: W, names: &[String]) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["time".to_string()];
        header.extend(names.iter().cloned());
        wtr.write_record(&header)?;
        for (k, u) in self.values.iter().enumerate() {
            let mut row = vec![(k as f64 * self.period).to_string()];
            row.extend(u.iter().map(f64::to_string));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// An ODE `q' = f(q, u)` with named outputs.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    fn state_dim(&self) -> usize;

    fn initial_state(&self) -> Vec<f64>;

    /// Admissible range of each input component.
    fn input_bounds(&self) -> Vec<Range>;

    fn input_names(&self) -> Vec<String> {
        (1..=self.input_bounds().len()).map(|i| format!("u{i}")).collect()
    }

    fn output_names(&self) -> Vec<String>;

    fn outputs(&self, state: &[f64]) -> Vec<f64>;

    /// Discrete mode (e.g. a gear) latched at the start of each integration step.
    fn mode(&self, _state: &[f64]) -> usize {
        0
    }

    fn derivative(&self, state: &[f64], input: &[f64], mode: usize, out: &mut [f64]);

    /// Normalization ranges of the outputs used when scoring trajectories.
    fn output_bounds(&self) -> Bounds {
        Bounds::new()
    }
}

/// Integrates `model` under `controls` with classical RK4 at step `h` and
/// records the outputs at every step, including both endpoints.
pub fn simulate(model: &dyn Model, controls: &ControlSequence, h: f64) -> Result<Trace> {
    if controls.dim() != model.input_bounds().len() {
        return Err(Error::InvalidControl(format!(
            "model `{}` takes {} inputs, sequence has {}",
            model.name(),
            model.input_bounds().len(),
            controls.dim()
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Config(format!("integration step must be positive, got {h}")));
    }
    let period = controls.period();
    let per_sample = (period / h).round();
    if per_sample < 1.0 || ((per_sample * h - period) / period).abs() > 1e-9 {
        return Err(Error::Misaligned { step: h, period });
    }
    let per_sample = per_sample as usize;
    let h = period / per_sample as f64;

    let n = model.state_dim();
    let mut q = model.initial_state();
    let total = per_sample * controls.len();
    let mut times = Vec::with_capacity(total + 1);
    let mut rows = Vec::with_capacity(total + 1);
    times.push(0.0);
    rows.push(model.outputs(&q));

    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for (k, u) in controls.values().iter().enumerate() {
        for i in 0..per_sample {
            let mode = model.mode(&q);
            model.derivative(&q, u, mode, &mut k1);
            for j in 0..n {
                tmp[j] = q[j] + 0.5 * h * k1[j];
            }
            model.derivative(&tmp, u, mode, &mut k2);
            for j in 0..n {
                tmp[j] = q[j] + 0.5 * h * k2[j];
            }
            model.derivative(&tmp, u, mode, &mut k3);
            for j in 0..n {
                tmp[j] = q[j] + h * k3[j];
            }
            model.derivative(&tmp, u, mode, &mut k4);
            for j in 0..n {
                q[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            let t = k as f64 * period + (i + 1) as f64 * h;
            if q.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(t));
            }
            times.push(t);
            rows.push(model.outputs(&q));
        }
    }
    Trace::new(model.output_names(), times, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_bounds(m: usize) -> Vec<Range> {
        vec![Range::new(-1.0, 1.0).unwrap(); m]
    }

    fn integrator() -> FormationModel {
        FormationModel::new(
            FormationParams::new(1.0, vec![vec![0.0]], vec![[0.0, 0.0]]).unwrap(),
            vec![[0.0, 0.0]],
            Range::new(-1.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn hold_is_right_continuous() {
        let values: Vec<Vec<f64>> = (1..=6).map(|k| vec![k as f64 / 10.0]).collect();
        let cs = ControlSequence::new(5.0, values, unit_bounds(1)).unwrap();
        assert_eq!(cs.hold(7.0).unwrap(), &[0.2]);
        assert_eq!(cs.hold(0.0).unwrap(), &[0.1]);
        assert_eq!(cs.hold(5.0).unwrap(), &[0.2]);
        assert_eq!(cs.hold(30.0).unwrap(), &[0.6]);
        assert!(matches!(cs.hold(30.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(cs.hold(-0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn control_validation() {
        assert!(ControlSequence::new(1.0, vec![vec![2.0]], unit_bounds(1)).is_err());
        assert!(ControlSequence::new(0.0, vec![vec![0.0]], unit_bounds(1)).is_err());
        assert!(ControlSequence::new(1.0, vec![vec![0.0, 0.0]], unit_bounds(1)).is_err());
        let cs = ControlSequence::from_flat(1.0, &[0.1, 0.2, 0.3, 0.4], unit_bounds(2)).unwrap();
        assert_eq!(cs.values(), &[vec![0.1, 0.2], vec![0.3, 0.4]]);
        assert_eq!(cs.flatten(), vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn single_integrator_is_exact() {
        let m = integrator();
        let cs = ControlSequence::constant(1.0, 1, vec![1.0, 0.0], unit_bounds(2)).unwrap();
        let tr = simulate(&m, &cs, 0.01).unwrap();
        assert_eq!(tr.end(), 1.0);
        assert!((tr.sample(1.0).unwrap()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn misaligned_step_is_rejected() {
        let m = integrator();
        let cs = ControlSequence::constant(1.0, 2, vec![0.0, 0.0], unit_bounds(2)).unwrap();
        assert!(matches!(simulate(&m, &cs, 0.3), Err(Error::Misaligned { .. })));
    }

    #[test]
    fn input_switch_applies_from_the_step_at_the_boundary() {
        let m = integrator();
        let cs = ControlSequence::new(1.0, vec![vec![1.0, 0.0], vec![-1.0, 0.0]], unit_bounds(2)).unwrap();
        let tr = simulate(&m, &cs, 0.25).unwrap();
        assert!((tr.sample(1.0).unwrap()[0] - 1.0).abs() < 1e-12);
        assert!(tr.sample(2.0).unwrap()[0].abs() < 1e-12);
    }
}
