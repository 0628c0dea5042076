//! Secure analog network coding (amplify-and-forward) in layered Gaussian
//! relay networks with one eavesdropper.
//!
//! The crate evaluates destination and eavesdropper rates for any relay
//! scaling vector, computes globally optimal scaling in closed form for
//! symmetric diamond and ECGAL layered networks, bounds the high-SNR gap to
//! the cutset bound, and cross-checks every closed form against a
//! derivative-free global search.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diamond;
pub mod error;
pub mod highsnr;
pub mod layered;
pub mod network;
pub mod oracle;
pub mod propagation;
pub mod random;
pub mod scaling;
pub mod strategy;

pub use error::{AncError, Result};
pub use network::{EveGains, LayeredNetwork};
pub use propagation::{modified_gains, propagate, rates, PowerFlow, RateReport, SnoopSet};
pub use scaling::{beta_max_vector, ScalingVector};
