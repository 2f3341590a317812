//! Entanglement recovery for amplitude-damped repeater links.
//!
//! Weak measurement plus measurement reversal applied around a single
//! entanglement-swapping node, with brute-force oracles, closed forms,
//! optimal reversing strengths and a trajectory simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod mc;
pub mod measures;
pub mod nla;
pub mod optimize;
pub mod qmat;
pub mod swap;

pub use channels::{DampingStrength, ReversingStrength};
pub use measures::{concurrence, Concurrence, Fidelity};
pub use qmat::{CMatrix, DensityMatrix, C64};
pub use swap::{BsmOutcome, PairAmplitudes, RepeaterModel, SwapResult};
pub use optimize::{OutcomePolicy, RecoveryReport, Scenario};
