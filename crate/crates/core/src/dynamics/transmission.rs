//! Two-state automatic-transmission surrogate driven by throttle.
//!
//! Speed `v` (mph) and engine speed `rpm` evolve as
//!
//! ```text
//! v'   = α (u / u_max) r_g - β v² - c v
//! rpm' = (idle + k_v r_g v + k_u u - rpm) / τ
//! ```
//!
//! where the gear `g` is chosen from the speed at the start of each
//! integration step and `r_g` is its ratio.

use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};
use crate::trace::{Bounds, Range};

/// Coefficients of the surrogate. The defaults make full throttle exceed
/// 4000 rpm and 100 mph within 30 s while moderate throttle stays below both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransmissionParams {
    /// Upshift speeds (mph); gear `g` is used below `shift_speeds[g]`.
    pub shift_speeds: Vec<f64>,
    /// Drive ratio per gear, one more entry than `shift_speeds`.
    pub gear_ratios: Vec<f64>,
    pub thrust: f64,
    pub drag: f64,
    pub rolling: f64,
    pub idle_rpm: f64,
    pub rpm_per_speed: f64,
    pub rpm_per_throttle: f64,
    pub rpm_time_constant: f64,
    pub max_throttle: f64,
    pub initial_speed: f64,
    pub initial_rpm: f64,
}

impl Default for TransmissionParams {
    fn default() -> Self {
        TransmissionParams {
            shift_speeds: vec![15.0, 35.0, 60.0],
            gear_ratios: vec![3.5, 2.2, 1.4, 1.0],
            thrust: 5.0,
            drag: 2e-4,
            rolling: 0.01,
            idle_rpm: 800.0,
            rpm_per_speed: 30.0,
            rpm_per_throttle: 5.0,
            rpm_time_constant: 0.5,
            max_throttle: 80.0,
            initial_speed: 0.0,
            initial_rpm: 800.0,
        }
    }
}

/// The surrogate as a [`Model`] with outputs `speed` and `rpm`.
#[derive(Debug, Clone)]
pub struct TransmissionModel {
    params: TransmissionParams,
}

impl TransmissionModel {
    pub fn new(params: TransmissionParams) -> Result<Self> {
        let p = &params;
        if p.gear_ratios.len() != p.shift_speeds.len() + 1 {
            return Err(Error::Config(
                "gear_ratios needs exactly one more entry than shift_speeds".into(),
            ));
        }
        if p.shift_speeds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("shift_speeds must be increasing".into()));
        }
        let positive = [p.thrust, p.rpm_time_constant, p.max_throttle];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(
                "thrust, rpm_time_constant and max_throttle must be positive".into(),
            ));
        }
        Ok(TransmissionModel { params })
    }

    pub fn params(&self) -> &TransmissionParams {
        &self.params
    }

    /// Gear index (0-based) engaged at `speed`.
    pub fn gear(&self, speed: f64) -> usize {
        self.params.shift_speeds.partition_point(|&s| s <= speed)
    }
}

impl Default for TransmissionModel {
    fn default() -> Self {
        TransmissionModel {
            params: TransmissionParams::default(),
        }
    }
}

impl Model for TransmissionModel {
    fn name(&self) -> &str {
        "transmission"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![self.params.initial_speed, self.params.initial_rpm]
    }

    fn input_bounds(&self) -> Vec<Range> {
        vec![Range {
            lower: 0.0,
            upper: self.params.max_throttle,
        }]
    }

    fn input_names(&self) -> Vec<String> {
        vec!["throttle".into()]
    }

    fn output_names(&self) -> Vec<String> {
        vec!["speed".into(), "rpm".into()]
    }

    fn outputs(&self, state: &[f64]) -> Vec<f64> {
        state.to_vec()
    }

    fn mode(&self, state: &[f64]) -> usize {
        self.gear(state[0])
    }

    fn derivative(&self, state: &[f64], input: &[f64], mode: usize, out: &mut [f64]) {
        let p = &self.params;
        let (v, rpm, u) = (state[0], state[1], input[0]);
        let ratio = p.gear_ratios[mode];
        out[0] = p.thrust * (u / p.max_throttle) * ratio - p.drag * v * v - p.rolling * v;
        let target = p.idle_rpm + p.rpm_per_speed * ratio * v + p.rpm_per_throttle * u;
        out[1] = (target - rpm) / p.rpm_time_constant;
    }

    fn output_bounds(&self) -> Bounds {
        let mut b = Bounds::new();
        b.insert("speed", Range { lower: 0.0, upper: 160.0 });
        b.insert("rpm", Range { lower: 0.0, upper: 6000.0 });
        b
    }
}
