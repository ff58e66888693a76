//! Per-round behavior of the three participants: the classical users'
//! CTRL/SIFT handling, TP's case classification and measurement dispatch,
//! and the consistency checks TP applies to the outcomes.
//!
//! Case table (Bob's choice, Charlie's choice -> TP's bases on B, C):
//!
//! | case | Bob  | Charlie | TP measures B, C |
//! |------|------|---------|------------------|
//! | A    | CTRL | CTRL    | X, X             |
//! | B    | CTRL | SIFT    | X, Z             |
//! | C    | SIFT | CTRL    | Z, X             |
//! | D    | SIFT | SIFT    | Z, Z             |

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{BasisKind, Bit, StateVector};

/// What a classical user does with an incoming particle: reflect it back
/// undisturbed (CTRL) or measure it in Z and resend the observed state
/// (SIFT).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UserAction {
    Ctrl,
    Sift,
}

impl UserAction {
    /// Uniform coin, the default per-round behavior of both users.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<f64>() < 0.5 {
            UserAction::Ctrl
        } else {
            UserAction::Sift
        }
    }
}

/// The four rows of the operation table, determined solely by the pair of
/// user actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundCase {
    A,
    B,
    C,
    D,
}

pub const ALL_CASES: [RoundCase; 4] = [RoundCase::A, RoundCase::B, RoundCase::C, RoundCase::D];

impl RoundCase {
    pub fn index(self) -> usize {
        match self {
            RoundCase::A => 0,
            RoundCase::B => 1,
            RoundCase::C => 2,
            RoundCase::D => 3,
        }
    }

    /// The user actions defining this case, as `(bob, charlie)`.
    pub fn actions(self) -> (UserAction, UserAction) {
        match self {
            RoundCase::A => (UserAction::Ctrl, UserAction::Ctrl),
            RoundCase::B => (UserAction::Ctrl, UserAction::Sift),
            RoundCase::C => (UserAction::Sift, UserAction::Ctrl),
            RoundCase::D => (UserAction::Sift, UserAction::Sift),
        }
    }

    /// TP's measurement bases for particles B and C.
    pub fn tp_bases(self) -> (BasisKind, BasisKind) {
        match self {
            RoundCase::A => (BasisKind::X, BasisKind::X),
            RoundCase::B => (BasisKind::X, BasisKind::Z),
            RoundCase::C => (BasisKind::Z, BasisKind::X),
            RoundCase::D => (BasisKind::Z, BasisKind::Z),
        }
    }
}

/// Case classification from the published action announcements.
pub fn classify_case(bob: UserAction, charlie: UserAction) -> RoundCase {
    match (bob, charlie) {
        (UserAction::Ctrl, UserAction::Ctrl) => RoundCase::A,
        (UserAction::Ctrl, UserAction::Sift) => RoundCase::B,
        (UserAction::Sift, UserAction::Ctrl) => RoundCase::C,
        (UserAction::Sift, UserAction::Sift) => RoundCase::D,
    }
}

/// One of TP's two per-round measurement results, tagged with its basis.
/// For X-basis results bit 0 means `|+>` and bit 1 means `|->`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuredBit {
    pub basis: BasisKind,
    pub bit: Bit,
}

/// TP's measurement results on particles B and C for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TpMeasurement {
    pub b: MeasuredBit,
    pub c: MeasuredBit,
}

/// Everything recorded about one two-particle round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_id: usize,
    pub bob_action: UserAction,
    pub charlie_action: UserAction,
    pub case: RoundCase,
    /// Present iff `bob_action == Sift`.
    pub bob_sift_bit: Option<Bit>,
    /// Present iff `charlie_action == Sift`.
    pub charlie_sift_bit: Option<Bit>,
    pub tp_bits: TpMeasurement,
    /// Present iff `case != D`: whether TP's CTRL-line check failed.
    pub ctrl_error: Option<bool>,
}

/// A classical user's handling of a single incoming particle.
///
/// CTRL returns the particle untouched. SIFT measures it in Z and resends
/// a particle in the observed state (for a lone particle this is exactly
/// the renormalized post-measurement state).
pub fn user_handle<R: Rng + ?Sized>(
    particle: &StateVector,
    action: UserAction,
    rng: &mut R,
) -> Result<(StateVector, Option<Bit>)> {
    if particle.num_qubits() != 1 {
        return Err(Error::InvalidArgument(format!(
            "user_handle expects a single-qubit particle, got {} qubits",
            particle.num_qubits()
        )));
    }
    match action {
        UserAction::Ctrl => Ok((particle.clone(), None)),
        UserAction::Sift => {
            let (bit, post) = particle.measure(0, BasisKind::Z, rng)?;
            Ok((post, Some(bit)))
        }
    }
}

/// TP's measurement dispatch for one round: measures particles B and C
/// (qubits 0 and 1 of `pair`) in the bases the case prescribes. Returns
/// the outcomes together with the post-measurement state, which still
/// carries any extra (adversary-held) qubits.
pub fn tp_operate<R: Rng + ?Sized>(
    case: RoundCase,
    pair: &StateVector,
    rng: &mut R,
) -> Result<(TpMeasurement, StateVector)> {
    if pair.num_qubits() < 2 {
        return Err(Error::InvalidArgument(
            "tp_operate expects at least two qubits".into(),
        ));
    }
    let (basis_b, basis_c) = case.tp_bases();
    let (bit_b, state) = pair.measure(0, basis_b, rng)?;
    let (bit_c, state) = state.measure(1, basis_c, rng)?;
    Ok((
        TpMeasurement {
            b: MeasuredBit {
                basis: basis_b,
                bit: bit_b,
            },
            c: MeasuredBit {
                basis: basis_c,
                bit: bit_c,
            },
        },
        state,
    ))
}

/// TP's CTRL-line check for cases A, B and C: the round is an error iff
/// any X-measured particle came out `|->`. Case A checks both lines,
/// case B only particle B, case C only particle C.
pub fn ctrl_error(case: RoundCase, tp_bits: &TpMeasurement) -> Result<bool> {
    let minus = |m: &MeasuredBit| m.basis == BasisKind::X && m.bit == 1;
    match case {
        RoundCase::A => Ok(minus(&tp_bits.b) || minus(&tp_bits.c)),
        RoundCase::B => Ok(minus(&tp_bits.b)),
        RoundCase::C => Ok(minus(&tp_bits.c)),
        RoundCase::D => Err(Error::InvalidArgument(
            "ctrl_error is undefined for case D".into(),
        )),
    }
}

/// The SIFT-bit relation TP checks on TEST pairs: his pair of Z outcomes
/// must equal the users' published bits.
pub fn sift_consistent(tp_pair: (Bit, Bit), bob: Bit, charlie: Bit) -> bool {
    tp_pair == (bob, charlie)
}
