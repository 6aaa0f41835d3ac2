//! Exact analysis of Boolean functions under the q-transform.
//!
//! The q-transform of a Boolean function `f` with respect to a fixed
//! non-constant function `q` is the family of correlations
//! `W_q(f)(A) = Σ_a (−1)^(f(a)+q(aA))` indexed by the invertible matrices
//! `A ∈ GL_n(F2)`, together with the imbalance `I_f` as the coefficient at
//! the zero matrix. This crate computes these spectra exactly (integer
//! arithmetic throughout), decides q-bent / q-nearly-bent / q-plateaued
//! status, and runs the exhaustive and sampled searches behind the
//! published existence and non-existence results for q-nearly bent
//! functions.
//!
//! Modules:
//! - [`gf2`]: vectors and matrices over F2, enumeration and uniform
//!   sampling of GL_n(F2).
//! - [`boolfn`]: truth tables, ANF parsing and printing, Walsh–Hadamard
//!   spectra, bentness, composition with a change of basis.
//! - [`qtransform`]: q-transform coefficients and spectra, the ρ_q bound,
//!   classification predicates, exact second-moment identities,
//!   stabilizers and orbits.
//! - [`verify`]: theorem, table and conjecture verification by exhaustive
//!   or seeded-sampled search.
//! - [`cli`]: the `qbent` command-line front end.

pub mod boolfn;
pub mod cli;
pub mod error;
pub mod gf2;
pub mod qtransform;
pub mod verify;

pub use boolfn::{AnfExpr, BoolFunc};
pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitVec};
