//! Thermodynamics of finite-dimensional Lindblad dynamics: heat currents,
//! entropy production, energy-basis coherence and the current-dissipation
//! trade-off bounds, plus the collective-decay models and heat-engine cycles
//! built on them.
//!
//! ```
//! use qthermo::coherence::coherence_report;
//! use qthermo::models::{build_2n_model, build_plus_state, PlusStateSpec, TwoNModelSpec};
//! use qthermo::thermo::{entropy_production_rate, heat_current};
//!
//! let spec = TwoNModelSpec::new(16, 1.0, 1.0, 1.0);
//! let (model, basis) = build_2n_model(&spec)?;
//! let rho = build_plus_state(&PlusStateSpec::for_model(&spec, 1.0 / 16.0))?;
//! let j = heat_current(&model, rho.matrix(), None)?;
//! let sigma = entropy_production_rate(&model, rho.matrix())?.value;
//! let report = coherence_report(&model, rho.matrix(), &basis)?;
//! assert!(j * j / sigma <= 0.5 * (report.a_cl + report.a_qm) + 1e-9);
//! # Ok::<(), qthermo::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod engine;
pub mod error;
pub mod lindblad;
pub mod matrix;
pub mod models;
pub mod sampling;
pub mod scenario;
pub mod thermo;
pub mod verify;

pub use error::{Error, Result};
