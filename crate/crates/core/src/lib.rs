//! redctl: verify and exercise controllability of reduced Poisson control systems.
//!
//! The crate models control-affine systems `x' = f(x) + sum_i g_i(x) u_i` whose
//! drift is Hamiltonian with respect to a (generally degenerate) Poisson
//! structure. On top of the dynamics it provides the numerical machinery needed
//! to check the standard sufficient conditions for controllability of such
//! systems:
//!
//! * structure diagnostics (antisymmetry, Jacobi identity, Casimir
//!   annihilation, bracket kernels) — [`poisson`],
//! * adaptive integration with first-integral drift reporting — [`integrate`],
//! * numerical Lie-bracket generation and rank evaluation — [`larc`],
//! * recurrence / nonwandering probes and properness scans — [`stability`],
//! * sampling-based steering between states with bounded controls — [`steer`].
//!
//! Three built-in systems live in [`systems`]: the reduced three-vortex
//! problem, the reduced resonant three-wave interaction, and two coupled
//! planar rigid bodies, together with the unreduced vortex and three-wave
//! systems and their momentum maps.

// Validations use negated comparisons (`!(x > 0.0)`) so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Boxed closure fields for observables and fields.
#![allow(clippy::type_complexity)]

pub mod control;
pub mod error;
pub mod integrate;
pub mod larc;
pub mod poisson;
pub mod sample;
pub mod stability;
pub mod steer;
pub mod systems;
pub mod word;

pub mod cli;

pub use control::{Bounds, ControlSignal, ControlSystem};
pub use error::{Error, Result};
pub use integrate::{IntegratorOptions, Trajectory};
pub use larc::{LarcScan, RankReport};
pub use poisson::{Observable, PoissonStructure, State, VectorField};
pub use stability::{NonwanderingEvidence, PropernessProfile, Recurrence};
pub use steer::{SteerOptions, SteerResult};
pub use word::BracketWord;
