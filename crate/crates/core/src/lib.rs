//! Joint source and relay precoding for amplify-and-forward MIMO two-way
//! relaying under the total mean-square-error criterion.
//!
//! Two sources with `N` antennas exchange data through a relay with `M`
//! antennas. The crate provides:
//!
//! - [`linalg`]: complex dense kernels (full SVD, GSVD via CS decomposition,
//!   Kronecker/vec helpers, Hermitian solves).
//! - [`model`]: the signal model, power constraints and MSE functionals.
//! - [`qcqp`]: a log-barrier interior point solver for the convex source
//!   precoder sub-problem, together with its real-valued embedding.
//! - [`iterative`]: alternating decoder / relay / source optimization.
//! - [`cp`]: channel-parallelization precoding with joint power allocation.
//! - [`sas`]: single-stream precoding by source antenna selection.
//! - [`sim`]: seeded, thread-count independent Monte Carlo sweeps with QPSK.
//!
//! All numerical code except [`sim`] is generic over the real scalar type
//! (see [`Real`]); the aliases at the crate root fix it to `f64`.

pub mod cp;
pub mod error;
pub mod iterative;
pub mod linalg;
pub mod model;
pub mod qcqp;
pub mod sas;
mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use nalgebra::Complex;
pub use scalar::Real;

/// Dense complex matrix with `f64` parts.
pub type CMatrix = linalg::ComplexMatrix<f64>;
/// Complex scalar with `f64` parts.
pub type C64 = Complex<f64>;
/// System configuration in double precision.
pub type SystemConfig = model::SystemConfig<f64>;
/// Channel realization in double precision.
pub type ChannelSet = model::ChannelSet<f64>;
/// Precoders and decoders in double precision.
pub type PrecoderSet = model::PrecoderSet<f64>;
/// Convex QCQP in double precision.
pub type RealQcqp = qcqp::RealQcqp<f64>;
/// Alternating-optimization trace in double precision.
pub type IterationTrace = iterative::IterationTrace<f64>;
/// Parallelized channel factors in double precision.
pub type ParallelizedChannels = cp::ParallelizedChannels<f64>;
/// Per-stream power allocation in double precision.
pub type PowerAllocation = cp::PowerAllocation<f64>;

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
