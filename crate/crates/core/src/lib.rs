//! Random walks on free products with relative word metrics.
//!
//! The crate has five areas:
//!
//! * [`group`]: exact normal-form arithmetic, relative word length, ball
//!   enumeration, and a breadth-first-search length oracle;
//! * [`walk`]: step distributions, admissibility checking, Monte Carlo
//!   walk sampling, and exact finite-time length distributions;
//! * [`ldp`]: empirical rate functions, exponentially tilted rare-event
//!   estimators, log moment generating functions, and convexity audits;
//! * [`convex`]: Legendre-Fenchel transforms on one-dimensional grids and
//!   duality checks;
//! * [`probe`]: constructive verification of the bounded-distortion
//!   property of the relative metric and of the connector-selection
//!   construction built on it.
//!
//! With the default `rayon` feature the sampling and scanning inner loops
//! run data-parallel; disabling it selects sequential fallbacks with
//! identical outputs.

pub mod convex;
pub mod error;
pub mod group;
pub mod ldp;
mod par;
pub mod probe;
mod util;
pub mod walk;

pub use error::{Error, Result};
pub use group::{FactorKind, FactorSpec, GroupElement, GroupSpec, Payload, Syllable};
