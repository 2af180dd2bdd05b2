//! qecopt: compiling quantum-error-correction tasks into trapped-ion pulse
//! sequences, and verifying sequences against their QEC contracts up to
//! gauge.
//!
//! The crate is organized around the pipeline
//! `codes` → `objective` → `optimizer` → `verifier`:
//!
//! - [`tensor`] — dense complex linear algebra over multi-qubit spaces.
//! - [`gateset`] — the trapped-ion elementary operations and the pulse
//!   sequence data model.
//! - [`codes`] — QEC codes, their codewords, error bases and stabilizers,
//!   and compilation of target contracts into objectives.
//! - [`objective`] — gauge-aware performance functions with cached
//!   prefix/suffix evaluation, analytic derivatives and pulse importances.
//! - [`optimizer`] — sequential parabola updates with zero-displacement
//!   pruning, quantization pressure, annealing displacements, and the
//!   disturb-and-reoptimize protocol.
//! - [`verifier`] — full-sequence simulation with measurement branching and
//!   contract certification; hosts the regression corpus.
//! - [`cli`] — sequence/config file formats and the command-line entry
//!   points.

pub mod cli;
pub mod codes;
pub mod error;
pub mod gateset;
pub mod objective;
pub mod optimizer;
pub mod tensor;
pub mod verifier;

pub use error::{Error, Result};
