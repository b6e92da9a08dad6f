//! Differentiable equilibrium computation for combinatorial congestion games.
//!
//! Strategy families are compiled into zero-suppressed decision diagrams
//! ([`zdd`]). Softmin marginals over a diagram ([`marginals`]) drive an
//! accelerated Frank–Wolfe solver ([`equilibrium`]) whose every step can be
//! recorded on a reverse-mode tape ([`tape`]), so the leader's social cost
//! can be differentiated through the whole solve ([`stackelberg`]).
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod congestion;
pub mod equilibrium;
pub mod marginals;
pub mod scalar;
pub mod stackelberg;
pub mod tape;
pub mod zdd;

pub use congestion::{CostKind, CostModel, ModelError};
pub use equilibrium::{EquilibriumError, SolverConfig, Variant};
pub use marginals::{softmin_marginal, MarginalError};
pub use scalar::{Scalar, LOG_ZERO};
pub use stackelberg::{StackelbergConfig, StackelbergError};
pub use tape::{Op, Tape, TapeError, Var};
pub use zdd::{Graph, StrategyClass, Zdd, ZddError};
