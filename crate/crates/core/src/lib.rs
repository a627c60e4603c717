//! Heavy-tail distribution classification and ruin-theory numerics.
//!
//! The crate turns limit statements about tail behaviour into windowed,
//! flagged estimates at desk scale:
//!
//! * [`dist`] — the distribution catalog (closed-form laws, step tails,
//!   combinators, grid-backed laws) behind a single survival-function
//!   abstraction;
//! * [`grid`] / [`conv`] — discretized tails and the Stieltjes convolution
//!   engine (n-fold tails by binary powering);
//! * [`ratio`] — windowed liminf/limsup estimation, divergence flags, weak
//!   tail-equivalence, the O-subexponentiality constant c_F;
//! * [`classify`] — one-big-jump statistics and verdicts for the eight
//!   comparison classes, with cross-class consistency repair;
//! * [`compound`] — random sums via the weighted convolution series with
//!   certified truncation;
//! * [`ruin`] — risk models: increment law, tail-integrated distribution,
//!   ladder-height simulation, compound-geometric supremum tail, direct
//!   ruin Monte Carlo, and the tail-equivalence report linking them;
//! * [`levy`] — finite-activity infinitely divisible laws as compound
//!   Poisson, compared in tail against their normalized jump law.

pub mod classify;
pub mod compound;
pub mod conv;
pub mod dist;
pub mod error;
pub mod grid;
pub mod jstat;
pub mod levy;
pub mod quad;
pub mod ratio;
pub mod rng;
pub mod ruin;

pub use classify::{classify, ClassId, ClassVerdict, ClassifyConfig, ClassifyReport, Verdict};
pub use compound::{compound_tail, Counter};
pub use conv::{convolve_tail, nfold_tail};
pub use dist::Dist;
pub use error::{Error, Result};
pub use grid::{discretize, GridSpec, TailGrid};
pub use ratio::{estimate_cf, weak_equiv, CfValue, RatioCurve, WindowParams};
pub use ruin::RiskModel;
