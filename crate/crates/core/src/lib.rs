//! Exact jet-level normal forms for functions on a symplectic space with
//! boundary.
//!
//! The crate classifies triples `(ω, H = {h = 0}, f)` at the origin, computes
//! the scalar invariant κ, and builds verifiable coordinate changes bringing
//! non-singular and first-singular (S1) triples to their normal forms.

pub mod classify;
pub mod cli;
pub mod expr;
pub mod forms;
pub mod generate;
pub mod jets;
pub mod linalg;
pub mod rational;
pub mod reduce;
pub mod symplectic;

pub use forms::{Form, VectorField};
pub use jets::{JetError, Mono, PointMap, Series};
pub use rational::Rational;
