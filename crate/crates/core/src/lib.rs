//! Exponential-type Riesz bases on trapezoids, multi-rectangles and
//! spherical trapezoids.
//!
//! The crate builds the basis families, transports them through the
//! isometries that relate the domains, and certifies them numerically:
//! truncated Gram matrices and their spectra, Kadec-type perturbation
//! checks with the associated Paley–Wiener constant, and least-squares
//! (dual-frame) reconstruction.
//!
//! Finite sections only ever provide evidence. A Gram matrix with
//! eigenvalues in `[A, B]` is consistent with a Riesz basis with those
//! bounds; it does not prove one.
//!
//! Heavy loops (Gram assembly, Monte Carlo trials, search restarts, grid
//! audits) run on rayon when the `parallel` feature is enabled, and can be
//! forced sequential at runtime through [`Execution`].

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bases;
pub mod config;
pub mod domains;
pub mod error;
pub mod expr;
pub mod gram;
pub mod linalg;
pub mod multirect;
pub mod par;
pub mod quadrature;
pub mod stability;

pub use bases::{
    BasisFamily, GFamily, IndexSet, IsometryMap, PhaseConvention, ShiftedFrequency, Weight,
    XFrequency, YFrequency,
};
pub use domains::{
    MultiInterval, ProfileFunction, SphericalTrapezoid, StepApproximation, StepProfile, Trapezoid,
};
pub use error::{Error, Result};
pub use gram::{Domain, GramOptions, GramReport, GramVerdict, ReconstructionReport, Target};
pub use multirect::{BasisSelection, MultirectBasis, SearchOptions};
pub use par::Execution;
pub use stability::{KadecReport, KadecVerdict, PwReport};

pub use num_complex::Complex64;
