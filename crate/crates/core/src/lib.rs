//! Numerical toolkit for Denjoy-Wolff sets of finitely generated rational
//! semigroups.
//!
//! The crate enumerates semigroup elements, estimates the Denjoy-Wolff point
//! of each element by orbit iteration, clusters the points into an estimate of
//! the semigroup's Denjoy-Wolff set, and checks the known structural results
//! about that set on concrete instances. Julia sets are sampled by inverse
//! iteration.

pub mod analysis;
pub mod blaschke;
pub mod config;
pub mod error;
pub mod julia;
pub mod orbit;
pub mod poly;
pub mod rational;
pub mod roots;
pub mod semigroup;
pub mod sphere;

pub use analysis::{Classification, Verdict};
pub use config::{DwTolerances, IterationBudget, Tolerances};
pub use error::{DwError, Result};
pub use num_complex::Complex64;
pub use poly::Polynomial;
pub use rational::{FixedPointInfo, MultiplierClass, RationalMap};
pub use sphere::{chordal_distance, SpherePoint};
