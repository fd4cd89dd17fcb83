//! Simultaneous Blackwell approachability and the omniprediction algorithms
//! built on it.
//!
//! Predictions live on a lattice ε-net of the simplex ([`simplex`]). The
//! [`approach`] driver couples online learners ([`learners`]) with mixture
//! linear optimization oracles ([`oracles`]); [`omni`] wires them into binary
//! and multiclass omnipredictors whose output is scored by [`eval`].

pub mod approach;
pub mod counterexamples;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod learners;
pub mod losses;
pub mod omni;
pub mod oracles;
pub mod rng;
pub mod simplex;

pub use error::{Error, Result};
pub use rng::Rng;
pub use simplex::{Mixture, SimplexNet, SimplexPoint};
