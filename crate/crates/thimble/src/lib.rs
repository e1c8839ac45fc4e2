//! Complex classical mechanics of the one-dimensional double well, Lefschetz
//! thimble flows, and exact reference propagators.
//!
//! The crate is organized around the complexified saddle-point geometry of the
//! quantum-mechanical path integral with fixed endpoints:
//!
//! * [`elliptic`]: complete elliptic integrals, Jacobi and Weierstrass
//!   functions with explicit branch bookkeeping on the complex modulus plane.
//! * [`saddles`]: complex classical trajectories of the double well
//!   V(z) = (z^2 - 1)^2, labeled by winding pairs (n, m), their actions and
//!   thimble classification.
//! * [`flow`]: gradient (downward) flow of the action functional on
//!   discretized paths and the linearized spectrum at a saddle.
//! * [`kernels`]: closed-form propagators (free line, circle, harmonic
//!   oscillator, Wick family) and discrete Schwinger-Dyson checks.
//! * [`asymptotics`]: short-time, instanton, and sphaleron limits used to
//!   seed and validate the saddle solver.
//! * [`cli`]: the `thimble` command line front end.

pub mod asymptotics;
pub mod cli;
pub mod elliptic;
pub mod flow;
pub mod kernels;
pub mod num;
pub mod saddles;

pub use num::C;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// K(m) diverges logarithmically as m -> 1.
    #[error("complete elliptic integral diverges at m = 1")]
    EllipticDivergence,

    /// The requested value sits on a real branch cut where the function is
    /// two-valued; the caller must pick a side explicitly.
    #[error("argument {0} lies on a real branch cut; value is side-dependent")]
    CutAmbiguity(C),

    /// The argument is within `dist` of a pole; `residue_dir` is the unit
    /// direction of the residue at the nearby pole.
    #[error("argument within {dist:.3e} of a pole (residue direction {residue_dir})")]
    PoleProximity { residue_dir: C, dist: f64 },

    /// Newton or continuation failure; the string records the path taken.
    #[error("root search failed to converge: {0}")]
    NonConvergence(String),

    /// No root exists for this label with the given boundary data.
    #[error("no classical solution for label ({0},{1}) with these boundary data")]
    LabelExcluded(i64, i64),

    /// Label violates the admissibility constraint of the winding set.
    #[error("label ({0},{1}) is not admissible")]
    LabelNotInSigma(i64, i64),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// A degenerate (zero-area) period lattice was requested.
    #[error("degenerate period lattice: generators are real-collinear")]
    DegenerateLattice,

    /// The flow left the basin tracked by the integrator.
    #[error("flow diverged at u = {0}")]
    FlowDiverged(f64),

    /// Monotonicity of Re I failed beyond tolerance, indicating an unstable
    /// step size or a non-saddle configuration.
    #[error("flow instability at u = {u}: Re I increased by {dre:.3e}")]
    FlowUnstable { u: f64, dre: f64 },

    /// The harmonic propagator has a caustic at integer multiples of pi.
    #[error("caustic: T = {0} is within tolerance of a multiple of pi")]
    Caustic(f64),

    /// Invalid run configuration (CLI or library preconditions).
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
