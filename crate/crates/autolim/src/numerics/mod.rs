//! Dense numerical kernels: LU-based linear algebra, Lyapunov and Riccati
//! solvers, and a frequency-sweep H-infinity norm.
//!
//! Everything here is self-contained and deterministic. Stability questions
//! are settled by Lyapunov certificates (solve, then Cholesky), never by a
//! general eigensolver; the only spectra computed are closed-form ones.

pub mod hinf;
pub mod linalg;
pub mod lyapunov;
pub mod riccati;
pub mod roots;

use thiserror::Error;

pub use hinf::{hinf_norm, HinfResult};
pub use linalg::{dot, outer, Lu, Mat};
pub use lyapunov::{is_hurwitz, lyapunov_solve};
pub use riccati::{cheap_cost, min_energy_cost_matrix, riccati_solve, stabilizing_gain};
pub use roots::shifted_power_roots;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix dimensions incompatible: {context}")]
    Dimension { context: &'static str },
    #[error("coefficient spectrum is degenerate; the linear solve broke down")]
    SpectrumDegeneracy,
    #[error("residual {residual:.3e} exceeds the acceptance limit {limit:.3e}")]
    ResidualTooLarge { residual: f64, limit: f64 },
    #[error("no stabilizing solution: {reason}")]
    SynthesisFailure { reason: String },
    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("plant is unstable; the requested quantity is infinite")]
    UnstablePlant,
    #[error("search range exhausted: {context}")]
    RangeExhausted { context: String },
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },
    #[error("control channel is degenerate (|v^T b| = {magnitude:.3e})")]
    DegenerateControl { magnitude: f64 },
}
