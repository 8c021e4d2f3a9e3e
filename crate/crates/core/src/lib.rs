//! A smooth planar objective with a two-sided Polyak-Lojasiewicz
//! certificate whose gradient descent-ascent flow is periodic away from
//! the saddle: construction, evaluation, and empirical verification.
//!
//! The objective `f` is prescribed on two lines through the origin and
//! extended to the square by constancy along the flow lines of a cubic
//! vector field; near the origin it reduces to an exact quadratic saddle.
//! The crate provides:
//!
//! - [`params`]: the model constants, from one real cubic root;
//! - [`smooth`]: the plateau-to-linear transition function;
//! - [`field`]: the flow field, its Jacobian, and coordinate frames;
//! - [`flow`]: an adaptive embedded Runge-Kutta integrator with dense
//!   output and event localization;
//! - [`objective`]: evaluation of `f` by flow-line classification and its
//!   gradient by adjoint transport;
//! - [`verify`]: PL certification, the origin spectrum, and the identity
//!   suite;
//! - [`gda`]: the descent-ascent dynamics, the conserved quartic, and
//!   period measurement;
//! - [`figure`] / [`report`]: figure rendering and report serialization.

pub mod error;
pub mod field;
pub mod figure;
pub mod flow;
pub mod gda;
pub mod objective;
pub mod params;
pub mod report;
pub mod smooth;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Point, Quadrant, XBranch};
pub use flow::{Direction, IntegratorConfig, StopEvent, Trajectory};
pub use gda::{ConvergenceReport, PeriodReport};
pub use objective::{FlowClassification, GradMethod, GradientResult};
pub use params::ModelParams;
pub use report::{CheckResult, ReportEnvelope};
pub use verify::{IdentityReport, PL1DReport, PLReport, SpectrumReport};
