//! Simulation of cascaded channel estimation for a double-IRS single-user
//! SISO uplink.
//!
//! Three scalar channels are seen per subcarrier, one per reflection path
//! (via IRS-1, via IRS-2, via both). Each is the inner product of CSCG
//! vectors, estimated from QPSK pilots by an LMMSE estimator whose P x P
//! covariance inverse reduces to a scalar through a push-through identity.
//! The estimator's closed-form MSE is compared against Monte Carlo, the
//! classical CRLB, and a Bayesian CRLB whose prior Fisher information is
//! computed numerically from samples against a Rayleigh fit of the cascade
//! magnitude — the inner-product pdf itself has no usable closed form.
//!
//! Module map:
//! - [`rng`]: deterministic, splittable sampling (the reproducibility core)
//! - [`numerics`]: small dense complex linear algebra and the push-through
//!   identity check
//! - [`channel`]: channel draws, cascades, theoretical moments
//! - [`signal`]: pilot blocks, IRS schedule, the received-signal model
//! - [`estimation`]: LMMSE routes, closed-form and empirical MSE
//! - [`crlb`]: bounds, Rayleigh fitting, Fisher information, CF validation
//! - [`experiments`]: CSV dataset pipelines and the run summary
//! - [`validation`]: the named invariant suite behind `validate`
//! - [`cli`]: argument parsing and dispatch
//!
//! Every random draw descends from one seed through labelled streams, so
//! all emitted datasets are byte-identical across reruns and worker counts.

pub mod channel;
pub mod cli;
pub mod crlb;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod numerics;
pub mod rng;
pub mod signal;
pub mod validation;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Crate version, recorded in every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
