//! Simulator and analysis library for a three-party measure-resend
//! semi-quantum private comparison (SQPC) protocol.
//!
//! Two classical users, Bob and Charlie, compare the equality of their
//! secrets with the help of a quantum third party (TP) that prepares
//! two-particle product states and performs single-photon measurements.
//! This crate executes the full protocol over a simulated quantum channel,
//! injects the standard adversary models (intercept-resend, measure-resend,
//! entangle-measure, dishonest participant) and verifies both the output
//! correctness and every detection-probability figure, twice: by Monte
//! Carlo sampling and by an exact branch-enumeration oracle.
//!
//! Module layout:
//!
//! * [`qstate`] — minimal dense state-vector core: kets, tensor products,
//!   projective Z/X measurement, unitaries, reduced density matrices,
//!   trace distance.
//! * [`parties`] — per-round behavior of the three participants (CTRL/SIFT
//!   handling, TP case classification and measurement dispatch,
//!   consistency checks).
//! * [`adversary`] — attack strategies behind a common [`adversary::Attack`]
//!   trait, a name registry for runtime selection, the exact detection
//!   oracle and the probe-distinguishability checker.
//! * [`protocol`] — the full eight-step comparison protocol, producing a
//!   [`protocol::RunReport`].
//! * [`sqkd`] — the three-party circled semi-quantum key distribution
//!   subprotocol that establishes the users' shared key.
//! * [`rng`] — deterministic, schedule-independent randomness streams.

pub mod adversary;
pub mod error;
pub mod parties;
pub mod protocol;
pub mod qstate;
pub mod rng;
pub mod sqkd;

pub use error::{Error, Result};
