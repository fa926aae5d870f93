//! Fock-space simulator and verifier for a trapped-ion probe of quantum-gravity
//! deformations of the canonical commutator.
//!
//! A single ion in a harmonic trap is driven by four short laser pulses per
//! vibrational period, arranged so the ground state traverses a closed loop in
//! motional phase space. Ordinary quantum mechanics leaves a known global phase
//! per loop; a minimal-length deformation of `[x, p]` (strength `beta0`) adds a
//! phase that grows quartically with the pulse area and linearly per pulse index.
//! Repeating the loop N times amplifies the deformation phase, which is read out
//! Ramsey-style from the population of an auxiliary level.
//!
//! The crate contains both the closed-form phase pipeline (extended-precision,
//! since the unwrapped standard phase reaches ~1e12 rad) and brute-force
//! truncated-Fock-space oracles that verify every closed form against direct
//! matrix propagation:
//!
//! - [`units`]: pinned constants, oscillator scales, extended-precision angle
//!   wrapping.
//! - [`fock`]: dense truncated ladder-operator algebra and unitary exponentials.
//! - [`gup`]: the deformation model and the first-order Heisenberg position
//!   operator with its numeric oracle.
//! - [`protocol`]: the four-pulse schedule, effective Hamiltonians, propagators,
//!   and N-cycle phase accumulation.
//! - [`zassenhaus`]: split-exponential correction terms and the leading-order
//!   dominance check.
//! - [`bounds`]: Ramsey readout, deformation-strength upper-bound solver, and
//!   the species catalog table.
//! - [`report`]: conventions metadata and deterministic JSON serialization.
//! - [`suite`]: the verification suites shared by the CLI and the acceptance
//!   tests.

pub mod bounds;
pub mod fock;
pub mod gup;
pub mod protocol;
pub mod report;
pub mod suite;
pub mod units;
pub mod zassenhaus;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("operands carry different oscillator scales")]
    ScaleMismatch,
    #[error("truncation dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative, got {value}")]
    NegativeValue { name: &'static str, value: f64 },
    #[error("operator not Hermitian: relative defect {defect:.3e}")]
    NotHermitian { defect: f64 },
    #[error("generator not skew-Hermitian: relative defect {defect:.3e}")]
    NotSkewHermitian { defect: f64 },
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error("detuning must be nonzero")]
    ZeroDetuning,
    #[error("pulse index {index} is inconsistent with the quarter-period schedule")]
    ScheduleMismatch { index: u64 },
    #[error("phase wrap error bound {bound:.3e} rad exceeds {limit:.1e} rad; raise precision")]
    PrecisionFailure { bound: f64, limit: f64 },
    #[error("non-finite angle")]
    NonFiniteAngle,
    #[error("truncation cap {cap} exceeded; last relative change {last_delta:.3e}")]
    TruncationCap { cap: usize, last_delta: f64 },
    #[error("measurement accuracy must lie in (0, 1), got {0}")]
    AccuracyOutOfRange(f64),
    #[error("unknown species {0:?}")]
    UnknownSpecies(String),
    #[error("species catalog: {0}")]
    Catalog(String),
    #[error("invalid laser configuration: {0}")]
    InvalidLaser(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("invalid decimal number {0:?}")]
    InvalidDecimal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
