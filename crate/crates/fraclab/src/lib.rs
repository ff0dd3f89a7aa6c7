//! fraclab: a desk-scale numerical laboratory for fractional Laplacians on
//! radial model manifolds, the polynomially decaying weight field h(t,·) and
//! its functional φ(t), quadrature verification of the comparison/scaling
//! lemmas behind them, and a split-step fractional Schrödinger solver with
//! blow-up detection and a closed-form lifespan bound.
//!
//! Batch-parallel loops (resolvent quadrature, multi-field applies, parameter
//! sweeps) run on rayon by default; build with `--no-default-features` for
//! the sequential fallback. `benches/parallel.rs` compares both paths.

pub mod cli;
pub mod config;
pub mod error;
pub(crate) mod exec;
pub mod lemmas;
pub mod manifold;
pub mod operator;
pub mod report;
pub mod solver;
pub mod weight;

pub use error::{Error, Result};
