//! Controller synthesis and gust-disturbance simulation for a small hybrid
//! VTOL flying wing.
//!
//! The crate bundles everything needed to rebuild the attitude-control study
//! of a dual-system VTOL UAV around its two trim conditions:
//!
//! * [`linalg`] — dense solves, eigenvalue routines, matrix exponential;
//! * [`models`] — the built-in linearized level-flight and hover plants;
//! * [`synthesis`] — LQR and H2 state-feedback gains via an algebraic
//!   Riccati path, with LMI certificate checks;
//! * [`wind`] — reproducible Dryden turbulence realizations;
//! * [`sim`] — fixed-step closed-loop simulation and RMS metrics;
//! * [`aero`] — a miniature vortex-lattice solver for the wing planform;
//! * [`cli`] — the batch front end behind the `vtolctrl` binary.

pub mod aero;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod models;
pub mod plot;
pub mod sim;
pub mod synthesis;
pub mod wind;

pub use error::{Error, Result};
