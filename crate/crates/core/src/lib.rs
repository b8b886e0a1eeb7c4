//! Gaussian wave packets in time-dependent harmonic potentials.
//!
//! The width dynamics are carried by the complex solution `λ = û + iẑ` of
//! `λ̈ + ω²(t)λ = 0`; everything else (the packet, its Wigner function, the
//! propagator kernels and the conserved quantities) is built from `λ` and the
//! classical trajectory `η`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod exec;
pub mod grid;
pub mod invariants;
pub mod kernels;
pub mod oracle;
pub mod packet;
pub mod scenario;
pub mod sweep;
pub mod system;
pub mod wigner;

pub use error::{Error, Result};
pub use evolution::{solve_lambda, ClassicalState, IntegratorOptions, LambdaState, Sample, Trajectory};
pub use exec::Execution;
pub use grid::{Axis, Checked, ComplexGrid, Warning};
pub use packet::{GaussianPacket, Moments};
pub use system::{Constants, FrequencyLaw, InitialPacket, SystemSpec};
