//! Spectral simulation of the Dirichlet problem `(-Δ)^γ u = ξ̇` on
//! hyperrectangles, driven by symmetric Lévy white noise.
//!
//! The crate is organised bottom-up:
//!
//! * [`levy`]: symmetric Lévy measures, characteristic exponents, jump samplers.
//! * [`spectral`]: Dirichlet eigenpairs of `-Δ` on boxes, Weyl counting, Fourier coefficients.
//! * [`func`]: function descriptors used as test functions and integrands.
//! * [`noise`]: Poisson random measure atoms, Gaussian coefficients, pairings `⟨ξ̇, f⟩`.
//! * [`integrability`]: integrability reports and existence verdicts.
//! * [`solver`]: Green kernels, mild solutions, Sobolev norms, torsion function.
//! * [`diagnostics`]: Monte Carlo and deterministic verification reports.
//! * [`cli`]: configuration-driven command line front end.
//!
//! Replicate loops and grid evaluations run on rayon when the `parallel`
//! feature is enabled (the default) and sequentially otherwise. Results are
//! identical either way.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::too_many_arguments,
    clippy::needless_range_loop
)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod func;
pub mod integrability;
pub mod io;
pub mod levy;
pub mod noise;
pub mod parallel;
pub mod quad;
pub mod rng;
pub mod solver;
pub mod spectral;
pub mod trig;

pub use error::{Error, Result};
pub use func::FnDesc;
pub use levy::{LevyMeasure, LevyTriplet};
pub use noise::{NoiseRealization, SmallJumpPolicy};
pub use solver::SpectralField;
pub use spectral::{Cutoff, EigenSystem, HyperBox, MultiIndex};
