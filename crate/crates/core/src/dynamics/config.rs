//! JSON description of a model together with its simulation settings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    ConsensusModel, ConsensusParams, FormationModel, FormationParams, Model, TransmissionModel,
    TransmissionParams,
};
use crate::error::{Error, Result};
use crate::trace::{Bounds, Range};

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_step() -> f64 {
    0.01
}

/// Which model to build and its parameters, selected by the `model` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelKind {
    Transmission(TransmissionParams),
    Consensus {
        #[serde(default = "one")]
        gamma_p: f64,
        #[serde(default = "one")]
        gamma_v: f64,
        #[serde(default = "half")]
        gamma_d: f64,
        adjacency: Vec<Vec<f64>>,
        initial_positions: Vec<[f64; 2]>,
        #[serde(default)]
        initial_velocities: Option<Vec<[f64; 2]>>,
        input_range: Range,
    },
    Formation {
        #[serde(default = "one")]
        gamma_p: f64,
        adjacency: Vec<Vec<f64>>,
        /// Reference shape; `d_ij = shape_i - shape_j`.
        #[serde(default)]
        shape: Option<Vec<[f64; 2]>>,
        /// Explicit `d_ij` matrix, used instead of `shape` when present.
        #[serde(default)]
        offsets: Option<Vec<Vec<[f64; 2]>>>,
        initial_positions: Vec<[f64; 2]>,
        input_range: Range,
    },
}

/// A model plus horizon `T`, sample period `T_s`, integration step `h` and
/// the normalization bounds of its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub horizon: f64,
    pub period: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Overrides or extends the model's own output bounds.
    #[serde(default)]
    pub bounds: Bounds,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in [("horizon", self.horizon), ("period", self.period), ("step", self.step)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        self.samples()?;
        for (name, r) in self.bounds.iter() {
            Range::new(r.lower, r.upper)
                .map_err(|_| Error::Config(format!("bounds of `{name}` are invalid")))?;
        }
        Ok(())
    }

    /// Number of held input samples, `T / T_s`.
    pub fn samples(&self) -> Result<usize> {
        let n = (self.horizon / self.period).round();
        if n < 1.0 || (n * self.period - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(Error::Config(format!(
                "horizon {} is not a multiple of the period {}",
                self.horizon, self.period
            )));
        }
        Ok(n as usize)
    }

    pub fn build(&self) -> Result<Box<dyn Model>> {
        Ok(match &self.kind {
            ModelKind::Transmission(p) => Box::new(TransmissionModel::new(p.clone())?),
            ModelKind::Consensus {
                gamma_p,
                gamma_v,
                gamma_d,
                adjacency,
                initial_positions,
                initial_velocities,
                input_range,
            } => {
                let params = ConsensusParams::new(*gamma_p, *gamma_v, *gamma_d, adjacency.clone())?;
                let velocities = initial_velocities
                    .clone()
                    .unwrap_or_else(|| vec![[0.0; 2]; initial_positions.len()]);
                let range = Range::new(input_range.lower, input_range.upper)?;
                Box::new(ConsensusModel::new(params, initial_positions.clone(), velocities, range)?)
            }
            ModelKind::Formation {
                gamma_p,
                adjacency,
                shape,
                offsets,
                initial_positions,
                input_range,
            } => {
                let params = match (offsets, shape) {
                    (Some(d), _) => FormationParams::with_offsets(*gamma_p, adjacency.clone(), d.clone())?,
                    (None, Some(s)) => FormationParams::new(*gamma_p, adjacency.clone(), s.clone())?,
                    (None, None) => {
                        return Err(Error::Config("formation needs `shape` or `offsets`".into()))
                    }
                };
                let range = Range::new(input_range.lower, input_range.upper)?;
                Box::new(FormationModel::new(params, initial_positions.clone(), range)?)
            }
        })
    }

    /// Model output bounds with this config's overrides applied.
    pub fn normalization_bounds(&self, model: &dyn Model) -> Bounds {
        model.output_bounds().merged(&self.bounds)
    }
}
