//! Stochastic response of grandstands under jumping crowds.
//!
//! The crowd load is a periodic mean plus Gaussian noise shaped by a bank
//! of second-order filters. Stationary response statistics are computed by
//! three independent routes that check one another:
//!
//! * [`statespace`]: augment the structure with the filter states and solve
//!   the continuous Lyapunov equation (optionally after a partial modal
//!   reduction);
//! * [`freqdomain`]: propagate spectral densities through the frequency
//!   response function and integrate spectral moments;
//! * [`montecarlo`]: simulate load ensembles and integrate with Newmark's method.
//!
//! [`measures`] turns means and variances into up-crossing counts and RMS
//! values, and [`load`] holds the load model together with its
//! identification from recorded realizations.

pub mod cli;
pub mod error;
pub mod freqdomain;
pub mod io;
pub mod load;
pub mod measures;
pub mod model;
pub mod montecarlo;
pub mod statespace;

pub use error::{Error, Result};
