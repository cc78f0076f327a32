//! Analysis toolkit for stochastic reaction networks whose reactions complete
//! after phase-type distributed delays.
//!
//! The crate models delays as absorption times of transient Markov chains,
//! expands a delayed network into an equivalent delay-free one over an
//! enlarged species set, certifies exponential ergodicity through linear
//! programs on the first-moment drift matrices, simulates trajectories with
//! two interchangeable engines, integrates the closed first-moment dynamics,
//! and attaches antithetic integral controllers to first-order plants.

// Stability guards are written `!(x < bound)` on purpose: the negated form
// treats NaN as a failure instead of silently passing it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use nalgebra;

pub mod aic;
pub mod augment;
pub mod ergodicity;
pub mod moments;
pub mod netmodel;
mod numeric;
pub mod phasetype;
pub mod simulate;

pub use aic::{AicCertificate, AicSpec};
pub use augment::AugmentedNetwork;
pub use ergodicity::Certificate;
pub use netmodel::{Network, Reaction};
pub use phasetype::PhaseType;
pub use simulate::Trajectory;
