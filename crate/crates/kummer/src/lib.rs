//! Numerics for the Kummer gluing of Eguchi-Hanson metrics on T^4/Z_2.
//!
//! The crate builds the grafted Kahler forms and hyper-Kahler triples on the
//! resolved orbifold, the weight functions and weighted Holder norms used to
//! measure them, and the two perturbation solvers (the scalar Monge-Ampere
//! fixed point and the definite-triple elliptic system), all at desk scale:
//! closed-form potentials where they exist, finite differences and sampled
//! norms where they do not.

pub mod banach;
pub mod curvature;
pub mod cutoff;
pub mod eh;
pub mod error;
pub mod flat;
pub mod forms;
pub mod gluing;
pub mod grid;
pub mod hk;
pub mod holder;
pub mod io;
pub mod ma;
pub mod matf;
pub mod metric;
pub mod radial;
pub mod triple;
pub mod weights;

pub use error::{KummerError, Result};
