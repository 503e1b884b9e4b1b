//! Fisher-information limits for estimating the spectrum parameters of a
//! hidden stationary Gaussian process that modulates a quantum probe.
//!
//! The crate is organized bottom-up:
//!
//! * [`psdmodel`]: spectral-density families (Ornstein-Uhlenbeck and
//!   user-supplied) with parameter log-gradients.
//! * [`fisher`]: quantum variational bound, homodyne information and limit,
//!   spectral-photon-counting information, OU closed forms and asymptotics.
//! * [`synth`]: frequency-domain synthesis of hidden-process traces, homodyne
//!   records and paired photon-count records.
//! * [`estimator`]: periodograms, Whittle and Bose-Einstein likelihoods and
//!   their maximizers.
//! * [`harness`]: Monte Carlo error statistics, bound sweeps, calibration and
//!   trace I/O.
//! * [`cli`]: the `specfisher` command-line front end.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod fisher;
pub mod harness;
mod optim;
pub mod psdmodel;
mod quad;
pub mod synth;

pub use error::{Error, Result};
pub use estimator::{Band, Estimate, Periodogram};
pub use fisher::{BoundsReport, InfoKind, InfoMatrix};
pub use psdmodel::{FnPsd, OuPsd, ParamVector, PsdModel, SnrContext};
pub use synth::{PhotonRecord, TimeTrace};
