//! Numerical laboratory for continuum Glauber birth-and-death dynamics.
//!
//! States are represented by truncated correlation hierarchies on a periodic
//! one-dimensional grid. A hierarchy `k = (k⁽⁰⁾, …, k⁽ⁿᵐᵃˣ⁾)` encodes the
//! generating functional
//!
//! ```text
//! B(θ) = Σₙ (Δxⁿ / n!) Σ_{x₁..xₙ} k⁽ⁿ⁾(x₁..xₙ) θ(x₁)…θ(xₙ)
//! ```
//!
//! The crate provides the Glauber generator, its rescaled family and the
//! mean-field (Vlasov) limit acting on such hierarchies, a Taylor-series
//! solver with step-radius bookkeeping on a scale of norms, an integrator for
//! the kinetic equation `∂ₜρ = −ρ + z·exp(−φ*ρ)`, and the experiment harness
//! behind the `bgf` command-line tool.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod error;
pub mod glauber;
pub mod harness;
pub mod hierarchy;
pub mod lattice;
pub mod ovsjannikov;
mod tensor;
pub mod vlasov;

pub use error::{Error, Result};
pub use glauber::GeneratorKind;
pub use hierarchy::{CorrelationHierarchy, ScaleParams};
pub use lattice::{Grid, GridField, PairPotential};
