//! Stochastic calculus on time scales.
//!
//! A [`TimeScale`] is a closed subset of `[0, inf)` built from intervals and
//! isolated points. On top of it the crate provides Brownian paths sampled on
//! nested working partitions, Delta-integrals, the Ito formula with gap
//! corrections, the stochastic exponential, Girsanov reweighting and a
//! Monte-Carlo harness for refinement studies.
//!
//! ```
//! use std::sync::Arc;
//! use tscale::{ito_sides, sample_path, FunctionSpec, RngConfig, TimeScale};
//!
//! let ts = TimeScale::qscale(2.0, -10, 2, true).unwrap();
//! let p = Arc::new(ts.partition(0.0, 4.0, 0).unwrap());
//! let path = sample_path(p, RngConfig::new(1, 0));
//! let f = FunctionSpec::parse("x^2").unwrap();
//! let r = ito_sides(&f, &ts, &path, 0.0, 4.0).unwrap();
//! assert!(r.residual.abs() < 1e-9);
//! ```

pub mod cli;
pub mod delta;
pub mod error;
pub mod expr;
pub mod girsanov;
pub mod harness;
pub mod ito;
pub mod path;
pub mod report;
pub mod stoch_exp;
pub mod sum;
pub mod timescale;

pub use delta::{delta_derivative, delta_stochastic_integral, delta_time_integral, extend_value, sample_integrand};
pub use error::{Error, Result};
pub use expr::{Expr, FunctionSpec, ParseError, Var};
pub use girsanov::{girsanov_density, measure_change_test, novikov_value, MeasureChangeConfig, MeasureChangeReport};
pub use harness::{convergence_study, ConvergenceTable, StudyConfig, Target};
pub use ito::{euler_delta_sde, general_ito_sides, gap_correction, ito_sides, ItoReport, SdeSpec, Variant};
pub use path::{sample_path, PathSample, RngConfig};
pub use stoch_exp::{exponential_report, stoch_exp_closed, stoch_exp_recursive, Coefficient, ExponentialReport};
pub use timescale::{Class, GapInterval, Piece, ScaleSpec, TimeScale, WorkingPartition};
