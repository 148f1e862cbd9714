//! Continuous-time signal temporal logic with traditional and arithmetic-geometric
//! integral mean (AGIM) robustness, fixed-step simulation of the case-study
//! models, and derivative-free falsification and control synthesis.

pub mod agim;
pub mod cli;
pub mod error;
pub mod formula;
pub mod trace;
pub mod traditional;
pub mod dynamics;
pub mod optimize;

pub use agim::{eta, eta_signal, Eta, QuadratureConfig, Verdict};
pub use error::{Error, Result};
pub use formula::Formula;
pub use trace::{Bounds, Range, ScoreSignal, Trace};
pub use traditional::{rho, Rho};
