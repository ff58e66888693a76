//! Three-party circled SQKD: establishes the users' shared key `K_BC`
//! through TP without TP learning it.
//!
//! Each run, TP prepares a qubit in the X basis and sends it around the
//! loop TP -> Bob -> Charlie -> TP. Each user independently either passes
//! the qubit on undisturbed or measures it in Z and injects a fresh,
//! uniformly random Z ket. TP measures the returning qubit in a random
//! basis. After distribution everyone publishes their operations and the
//! rounds classify as:
//!
//! * `P0` — nobody measured: usable as a CTRL check when TP measured X
//!   (the qubit must come back as prepared);
//! * `P1` — exactly one user measured: usable as a CTRL check when TP
//!   measured Z (the outcome must equal the measurer's published fresh
//!   bit);
//! * `P2` — both measured: Charlie's measurement read Bob's fresh qubit,
//!   so the two share that bit as a SIFT bit. Charlie's own refresh is
//!   what TP sees coming back, which is why TP's back measurement carries
//!   no information about the SIFT bit.
//!
//! The simulation is noiseless and works with raw SIFT bits; any QBER at
//! all aborts.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::qstate::{ket, BasisKind, Bit, StateVector, UnitaryMatrix};

/// Fraction of SIFT bits sacrificed for the QBER estimate.
pub const DEFAULT_CHECK_FRACTION: f64 = 0.25;

/// Abort threshold for both QBER statistics.
pub const QBER_THRESHOLD: f64 = 0.0;

/// Extra SIFT bits collected beyond the exact check+key demand.
const SIFT_MARGIN: usize = 4;

/// The X-basis state TP prepares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum XKet {
    Plus,
    Minus,
}

impl XKet {
    fn state(self) -> StateVector {
        match self {
            XKet::Plus => ket("+").expect("fixed label"),
            XKet::Minus => ket("-").expect("fixed label"),
        }
    }

    /// The X-measurement bit this state yields deterministically.
    pub fn x_bit(self) -> Bit {
        match self {
            XKet::Plus => 0,
            XKet::Minus => 1,
        }
    }
}

/// A user's published operation for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UserOp {
    Pass,
    MeasureRefresh { measured: Bit, fresh: Bit },
}

impl UserOp {
    pub fn measured(self) -> bool {
        matches!(self, UserOp::MeasureRefresh { .. })
    }
}

/// Round class by how many users measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundClass {
    P0,
    P1,
    P2,
}

impl RoundClass {
    pub fn index(self) -> usize {
        match self {
            RoundClass::P0 => 0,
            RoundClass::P1 => 1,
            RoundClass::P2 => 2,
        }
    }
}

/// Everything published about one circulation of the travel qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqkdRound {
    pub round_id: usize,
    pub tp_prepared: XKet,
    pub bob_op: UserOp,
    pub charlie_op: UserOp,
    pub tp_back_basis: BasisKind,
    pub tp_back_outcome: Bit,
    pub class: RoundClass,
}

/// The three channel legs of the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    TpToBob,
    BobToCharlie,
    CharlieToTp,
}

/// Test hook: disturbance injected on one leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkTamper {
    None,
    /// Pauli X on the travel qubit.
    BitFlip(Link),
    /// Eavesdropper measures in the given basis and forwards the collapse.
    MeasureResend(Link, BasisKind),
}

impl LinkTamper {
    fn apply(&self, link: Link, state: StateVector, rng: &mut dyn RngCore) -> StateVector {
        match self {
            LinkTamper::BitFlip(l) if *l == link => state
                .apply_unitary(&UnitaryMatrix::pauli_x(), &[0])
                .expect("single qubit"),
            LinkTamper::MeasureResend(l, basis) if *l == link => {
                state.measure(0, *basis, rng).expect("single qubit").1
            }
            _ => state,
        }
    }
}

fn coin(rng: &mut dyn RngCore) -> Bit {
    Bit::from(rng.random::<f64>() >= 0.5)
}

fn user_step(state: StateVector, rng: &mut dyn RngCore) -> (StateVector, UserOp) {
    if rng.random::<f64>() < 0.5 {
        (state, UserOp::Pass)
    } else {
        let (measured, _) = state.measure(0, BasisKind::Z, rng).expect("single qubit");
        let fresh = coin(rng);
        let fresh_state = ket(if fresh == 0 { "0" } else { "1" }).expect("fixed label");
        (fresh_state, UserOp::MeasureRefresh { measured, fresh })
    }
}

/// One circulation of the travel qubit with a disturbance hook.
pub fn sqkd_round_with(round_id: usize, tamper: &LinkTamper, rng: &mut dyn RngCore) -> SqkdRound {
    let tp_prepared = if rng.random::<f64>() < 0.5 {
        XKet::Plus
    } else {
        XKet::Minus
    };
    let state = tp_prepared.state();

    let state = tamper.apply(Link::TpToBob, state, rng);
    let (state, bob_op) = user_step(state, rng);
    let state = tamper.apply(Link::BobToCharlie, state, rng);
    let (state, charlie_op) = user_step(state, rng);
    let state = tamper.apply(Link::CharlieToTp, state, rng);

    let tp_back_basis = if rng.random::<f64>() < 0.5 {
        BasisKind::Z
    } else {
        BasisKind::X
    };
    let (tp_back_outcome, _) = state.measure(0, tp_back_basis, rng).expect("single qubit");

    let class = match (bob_op.measured(), charlie_op.measured()) {
        (false, false) => RoundClass::P0,
        (true, true) => RoundClass::P2,
        _ => RoundClass::P1,
    };
    SqkdRound {
        round_id,
        tp_prepared,
        bob_op,
        charlie_op,
        tp_back_basis,
        tp_back_outcome,
        class,
    }
}

/// One circulation over the honest channel.
pub fn sqkd_round(round_id: usize, rng: &mut dyn RngCore) -> SqkdRound {
    sqkd_round_with(round_id, &LinkTamper::None, rng)
}

/// Post-distribution classification of one round: an optional CTRL check
/// result and an optional SIFT pair `(bob_bit, charlie_bit)`.
///
/// `P0` rounds check out only when TP measured X; `P1` rounds only when
/// TP measured Z (against the measurer's published fresh bit; the
/// measured bit itself stays private). `P2` rounds yield the SIFT pair
/// (Bob's fresh bit, Charlie's measured bit). Everything else is
/// discarded.
pub fn classify_and_check(round: &SqkdRound) -> (Option<bool>, Option<(Bit, Bit)>) {
    match round.class {
        RoundClass::P0 => {
            if round.tp_back_basis == BasisKind::X {
                let pass = round.tp_back_outcome == round.tp_prepared.x_bit();
                (Some(pass), None)
            } else {
                (None, None)
            }
        }
        RoundClass::P1 => {
            if round.tp_back_basis == BasisKind::Z {
                let fresh = match (round.bob_op, round.charlie_op) {
                    (UserOp::MeasureRefresh { fresh, .. }, UserOp::Pass) => fresh,
                    (UserOp::Pass, UserOp::MeasureRefresh { fresh, .. }) => fresh,
                    _ => unreachable!("P1 means exactly one user measured"),
                };
                (Some(round.tp_back_outcome == fresh), None)
            } else {
                (None, None)
            }
        }
        RoundClass::P2 => {
            let (UserOp::MeasureRefresh { fresh: bob_fresh, .. },
                 UserOp::MeasureRefresh { measured: charlie_measured, .. }) =
                (round.bob_op, round.charlie_op)
            else {
                unreachable!("P2 means both measured");
            };
            (None, Some((bob_fresh, charlie_measured)))
        }
    }
}

/// Key establishment outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqkdResult {
    pub key: Vec<Bit>,
    pub qber_ctrl: f64,
    pub qber_sift: f64,
    /// Rounds per class `(P0, P1, P2)`.
    pub class_counts: [usize; 3],
    pub rounds_used: usize,
}

/// Why key establishment failed.
#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum SqkdAbort {
    #[error("QBER {rate:.4} in {which} exceeds threshold {threshold}")]
    QberExceeded {
        which: String,
        rate: f64,
        threshold: f64,
    },
    #[error("round budget {budget} exhausted with {collected} of {needed} SIFT bits")]
    RoundBudgetExhausted {
        budget: usize,
        collected: usize,
        needed: usize,
    },
}

/// Runs rounds until enough SIFT bits accumulate, sacrifices
/// `check_fraction` of them for the SIFT QBER, and returns the first `l`
/// surviving bits as the key. Any CTRL failure or SIFT mismatch aborts.
pub fn establish_key(
    l: usize,
    check_fraction: f64,
    rng: &mut dyn RngCore,
) -> std::result::Result<SqkdResult, SqkdAbort> {
    establish_key_with_tamper(l, check_fraction, &LinkTamper::None, rng)
}

/// [`establish_key`] with a disturbance hook on one channel leg.
pub fn establish_key_with_tamper(
    l: usize,
    check_fraction: f64,
    tamper: &LinkTamper,
    rng: &mut dyn RngCore,
) -> std::result::Result<SqkdResult, SqkdAbort> {
    assert!(l >= 1, "key length must be at least 1");
    assert!(
        check_fraction > 0.0 && check_fraction < 1.0,
        "check fraction must lie strictly between 0 and 1"
    );
    let target_sift = (l as f64 / (1.0 - check_fraction)).ceil() as usize + SIFT_MARGIN;
    // Expected P2 yield is 1/4 per round; budget with a ~3x margin.
    let budget = (12.0 * l as f64 / (0.25 * (1.0 - check_fraction))).ceil() as usize;

    let mut class_counts = [0usize; 3];
    let mut ctrl_total = 0usize;
    let mut ctrl_failures = 0usize;
    let mut sift_pairs: Vec<(Bit, Bit)> = Vec::with_capacity(target_sift);
    let mut rounds_used = 0usize;

    for round_id in 0..budget {
        let round = sqkd_round_with(round_id, tamper, rng);
        rounds_used += 1;
        class_counts[round.class.index()] += 1;
        let (ctrl, sift) = classify_and_check(&round);
        if let Some(pass) = ctrl {
            ctrl_total += 1;
            ctrl_failures += usize::from(!pass);
        }
        if let Some(pair) = sift {
            sift_pairs.push(pair);
        }
        if sift_pairs.len() >= target_sift {
            break;
        }
    }
    if sift_pairs.len() < target_sift {
        return Err(SqkdAbort::RoundBudgetExhausted {
            budget,
            collected: sift_pairs.len(),
            needed: target_sift,
        });
    }

    let qber_ctrl = if ctrl_total == 0 {
        0.0
    } else {
        ctrl_failures as f64 / ctrl_total as f64
    };
    if qber_ctrl > QBER_THRESHOLD {
        return Err(SqkdAbort::QberExceeded {
            which: "CTRL".into(),
            rate: qber_ctrl,
            threshold: QBER_THRESHOLD,
        });
    }

    let total = sift_pairs.len();
    let check_count = (total as f64 * check_fraction).ceil() as usize;
    let mut check_positions: Vec<usize> =
        rand::seq::index::sample(rng, total, check_count).into_vec();
    check_positions.sort_unstable();
    let check_mismatches = check_positions
        .iter()
        .filter(|&&i| sift_pairs[i].0 != sift_pairs[i].1)
        .count();
    let qber_sift = if check_count == 0 {
        0.0
    } else {
        check_mismatches as f64 / check_count as f64
    };
    if qber_sift > QBER_THRESHOLD {
        return Err(SqkdAbort::QberExceeded {
            which: "SIFT".into(),
            rate: qber_sift,
            threshold: QBER_THRESHOLD,
        });
    }

    let key: Vec<Bit> = sift_pairs
        .iter()
        .enumerate()
        .filter(|(i, _)| !check_positions.contains(i))
        .map(|(_, &(bob, _))| bob)
        .take(l)
        .collect();
    debug_assert_eq!(key.len(), l);

    Ok(SqkdResult {
        key,
        qber_ctrl,
        qber_sift,
        class_counts,
        rounds_used,
    })
}

/// How often TP's back measurement, read as a guess, equals the SIFT bit
/// over the given `P2` rounds. Charlie's refresh decouples the returning
/// qubit from the SIFT bit, so the expected rate is 1/2 whichever basis
/// TP happened to use.
pub fn tp_secrecy_probe(rounds: &[SqkdRound]) -> Result<f64> {
    if rounds.is_empty() {
        return Err(Error::InvalidArgument(
            "tp_secrecy_probe needs at least one P2 round".into(),
        ));
    }
    let mut matches = 0usize;
    for round in rounds {
        let (_, sift) = classify_and_check(round);
        let Some((bob_bit, _)) = sift else {
            return Err(Error::InvalidArgument(format!(
                "round {} is not a P2 round",
                round.round_id
            )));
        };
        matches += usize::from(round.tp_back_outcome == bob_bit);
    }
    Ok(matches as f64 / rounds.len() as f64)
}
