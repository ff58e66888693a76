//! Adversary models and their detection statistics.
//!
//! Every attack is a channel interposer behind the common [`Attack`]
//! trait: it may transform the in-flight pair on the forward leg (TP to
//! the users) and on the backward leg (users back to TP), possibly
//! enlarging the register with private probe qubits. Attacks are
//! registered by name in [`registry`] and selected at runtime.
//!
//! Each strategy answers for itself twice: `forward`/`backward` sample one
//! stochastic branch for Monte Carlo execution, while `forward_branches`/
//! `backward_branches` enumerate all branches with exact probabilities for
//! the detection oracle. Both sides draw their probabilities from the same
//! [`crate::qstate`] computations.

mod attacks;
mod oracle;
mod probe;
mod registry;

pub use attacks::dishonest_bob_interpose;
pub use oracle::{
    detection_round_outcome, exact_detection, round_error, sampled_detection, AttackReport,
    CaseStat, DetectionMethod, SampledDetection,
};
pub use probe::{
    controlled_rotation_attack, decompose_probe, decompose_with_backward,
    probe_distinguishability, probe_distinguishability_given_charlie, theorem1_check,
    ProbeDecomposition, Theorem1Report, Theorem1Verdict,
};
pub use registry::{attack_usage, parse_attack, registry, RegistryEntry};

use rand::RngCore;

use crate::error::{Error, Result};
use crate::parties::{RoundCase, UserAction};
use crate::qstate::{ket, StateVector, UnitaryMatrix};

/// One of the four states a classical-looking particle can be prepared in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KetLabel {
    Zero,
    One,
    Plus,
    Minus,
}

pub const ALL_KETS: [KetLabel; 4] = [KetLabel::Zero, KetLabel::One, KetLabel::Plus, KetLabel::Minus];

impl KetLabel {
    pub fn as_char(self) -> char {
        match self {
            KetLabel::Zero => '0',
            KetLabel::One => '1',
            KetLabel::Plus => '+',
            KetLabel::Minus => '-',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        Ok(match c {
            '0' => KetLabel::Zero,
            '1' => KetLabel::One,
            '+' => KetLabel::Plus,
            '-' => KetLabel::Minus,
            other => return Err(Error::UnknownKetLabel(other.to_string())),
        })
    }

    pub fn state(self) -> StateVector {
        ket(&self.as_char().to_string()).expect("fixed label set")
    }
}

/// How an intercept-resend attacker prepares her fake particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FakeStatePolicy {
    /// The same (B, C) pair of fakes every round.
    FixedPair(KetLabel, KetLabel),
    /// Each particle drawn uniformly from the four labeled states,
    /// independently per particle per round.
    UniformRandomProduct,
}

/// Which basis a measure-resend attacker uses. The random policy draws a
/// basis independently per particle per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisPolicy {
    AlwaysZ,
    AlwaysX,
    UniformRandom,
}

/// The three particle-disturbance schemes available to a dishonest Bob
/// going after Charlie's SIFT bits. All act only on Charlie's link and
/// only in rounds where Bob himself SIFTs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DishonestScheme {
    /// Z-measure the forward particle, forward the collapsed state.
    I,
    /// Z-measure the backward particle, forward the collapsed state.
    II,
    /// Replace the forward particle with a fresh uniformly random Z ket.
    III,
}

/// Which leg of Charlie's link a dishonest-Bob interposition targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDirection {
    /// TP to Charlie.
    Forward,
    /// Charlie back to TP.
    Backward,
}

/// Full description of an adversary. `build` turns it into a runnable
/// strategy object.
#[derive(Debug, Clone)]
pub enum AttackSpec {
    None,
    InterceptResend(FakeStatePolicy),
    MeasureResend(BasisPolicy),
    EntangleMeasure {
        u_e: UnitaryMatrix,
        u_f: UnitaryMatrix,
        probe_qubits: usize,
        /// Display name carried into reports.
        label: String,
    },
    DishonestBob(DishonestScheme),
}

impl AttackSpec {
    /// Checked constructor for an entangle-measure attack: both unitaries
    /// must act on the B, C pair plus `probe_qubits` probe qubits.
    pub fn entangle_measure(
        u_e: UnitaryMatrix,
        u_f: UnitaryMatrix,
        probe_qubits: usize,
        label: impl Into<String>,
    ) -> Result<Self> {
        if probe_qubits == 0 {
            return Err(Error::InvalidArgument(
                "entangle-measure attacks need at least one probe qubit".into(),
            ));
        }
        let dim = 1usize << (2 + probe_qubits);
        for (name, u) in [("U_E", &u_e), ("U_F", &u_f)] {
            if u.dim() != dim {
                return Err(Error::InvalidArgument(format!(
                    "{name} has dimension {}, expected {dim} for {probe_qubits} probe qubits",
                    u.dim()
                )));
            }
        }
        Ok(AttackSpec::EntangleMeasure {
            u_e,
            u_f,
            probe_qubits,
            label: label.into(),
        })
    }

    /// The registry name this spec round-trips through.
    pub fn canonical_name(&self) -> String {
        match self {
            AttackSpec::None => "none".into(),
            AttackSpec::InterceptResend(FakeStatePolicy::FixedPair(b, c)) => {
                format!("intercept-resend:{}{}", b.as_char(), c.as_char())
            }
            AttackSpec::InterceptResend(FakeStatePolicy::UniformRandomProduct) => {
                "intercept-resend:random".into()
            }
            AttackSpec::MeasureResend(BasisPolicy::AlwaysZ) => "measure-resend-z".into(),
            AttackSpec::MeasureResend(BasisPolicy::AlwaysX) => "measure-resend-x".into(),
            AttackSpec::MeasureResend(BasisPolicy::UniformRandom) => "measure-resend-random".into(),
            AttackSpec::EntangleMeasure { label, .. } => label.clone(),
            AttackSpec::DishonestBob(DishonestScheme::I) => "dishonest-bob-i".into(),
            AttackSpec::DishonestBob(DishonestScheme::II) => "dishonest-bob-ii".into(),
            AttackSpec::DishonestBob(DishonestScheme::III) => "dishonest-bob-iii".into(),
        }
    }

    /// Number of probe qubits the attack appends to the in-flight pair.
    pub fn probe_qubits(&self) -> usize {
        match self {
            AttackSpec::EntangleMeasure { probe_qubits, .. } => *probe_qubits,
            _ => 0,
        }
    }

    /// Instantiates the strategy object.
    pub fn build(&self) -> Box<dyn Attack> {
        attacks::build(self)
    }
}

/// A channel interposer. Implementations must be pure given the attack
/// parameters, the incoming state and the randomness source.
///
/// `bob_action` is the attacker's own per-round choice when the attacker
/// is a participant (dishonest Bob attacks only in rounds where he
/// SIFTs); outside attacks ignore it.
pub trait Attack: Send + Sync {
    /// Registry name, used in reports.
    fn name(&self) -> String;

    /// Probe qubits appended after B and C while the pair is in flight.
    fn probe_qubits(&self) -> usize {
        0
    }

    /// The cases over which this attack's quoted average detection rate
    /// is taken: the cases in which the attack can act at all. Outside
    /// attacks act in every case; a dishonest Bob acts only when he
    /// SIFTs (cases C and D).
    fn active_cases(&self) -> [bool; 4] {
        [true; 4]
    }

    /// Transforms the pair on its way from TP to the users. May enlarge
    /// the register by `probe_qubits` qubits.
    fn forward(
        &self,
        state: StateVector,
        bob_action: UserAction,
        rng: &mut dyn RngCore,
    ) -> StateVector;

    /// Transforms the register on its way back from the users to TP.
    fn backward(
        &self,
        state: StateVector,
        bob_action: UserAction,
        rng: &mut dyn RngCore,
    ) -> StateVector;

    /// All stochastic branches of [`Attack::forward`] with their exact
    /// probabilities.
    fn forward_branches(&self, state: &StateVector, bob_action: UserAction)
        -> Vec<(f64, StateVector)>;

    /// All stochastic branches of [`Attack::backward`] with their exact
    /// probabilities.
    fn backward_branches(
        &self,
        state: &StateVector,
        bob_action: UserAction,
    ) -> Vec<(f64, StateVector)>;
}

/// Mean detection over the attack's active cases (uniform case weights,
/// matching the N/4 case split of an honest run).
pub(crate) fn average_over_active(per_case: &[f64; 4], active: &[bool; 4]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, &a) in per_case.iter().zip(active) {
        if a {
            sum += p;
            n += 1;
        }
    }
    sum / n as f64
}

/// Convenience used by tests and the harness: which cases an attack is
/// live in, as `RoundCase` values.
pub fn active_case_list(attack: &dyn Attack) -> Vec<RoundCase> {
    crate::parties::ALL_CASES
        .into_iter()
        .filter(|c| attack.active_cases()[c.index()])
        .collect()
}
