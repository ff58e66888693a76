//! The full comparison protocol.
//!
//! One run walks the whole exchange: Bob and Charlie split their secrets
//! into L one-bit groups and share a key `K_BC` (preliminary, via the
//! [`crate::sqkd`] subprotocol or an injected key); TP prepares
//! `N = ceil(8 L (1 + delta))` pairs in `|++>` and sends one particle of
//! each to each user (step 1); the users CTRL or SIFT each particle
//! (step 2) and publish their choices (step 3); TP measures every pair in
//! the bases the case prescribes (step 4); TP checks the CTRL-line error
//! rates of cases A-C (step 5) and a random sample of L case-D TEST pairs
//! (step 6) against thresholds; the users one-time-pad their group bits
//! with private case-D SIFT bits and `K_BC` (step 7); TP strips the pads
//! using his own case-D outcomes and compares (step 8).
//!
//! Bit-order convention: group `i` is the coefficient of `2^i` in the
//! secret's binary expansion, i.e. least significant bit first.
//!
//! Determinism: every stochastic step draws from its own stream derived
//! from `(seed, domain, index)` (see [`crate::rng`]), so identical
//! configurations reproduce identical reports and threshold changes
//! cannot perturb unrelated draws.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::adversary::{Attack, AttackSpec};
use crate::error::{Error, Result};
use crate::parties::{
    classify_case, ctrl_error, tp_operate, RoundCase, RoundRecord, UserAction, ALL_CASES,
};
use crate::qstate::{ket, BasisKind, Bit, StateVector};
use crate::rng::{domain, stream};
use crate::sqkd;

/// The state TP prepares every round: `|++>_BC`.
pub fn initial_pair() -> StateVector {
    let plus = ket("+").expect("fixed label");
    plus.tensor(&plus)
}

/// A secret split into L one-bit groups, least significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Secret {
    bits: Vec<Bit>,
    source_integer: Option<u64>,
}

impl Secret {
    pub fn from_bits(bits: Vec<Bit>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument(
                "secret must have at least one bit".into(),
            ));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("secret bits must be 0 or 1".into()));
        }
        Ok(Secret {
            bits,
            source_integer: None,
        })
    }

    pub fn bits(&self) -> &[Bit] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn source_integer(&self) -> Option<u64> {
        self.source_integer
    }
}

/// Splits `value` into `l` one-bit groups, bit `i` being the coefficient
/// of `2^i`.
pub fn to_groups(value: u64, l: usize) -> Result<Secret> {
    if l == 0 {
        return Err(Error::InvalidArgument("need at least one group".into()));
    }
    if l < 64 && value >> l != 0 {
        return Err(Error::InvalidArgument(format!(
            "value {value} does not fit in {l} bits"
        )));
    }
    let bits = (0..l)
        .map(|i| if i < 64 { ((value >> i) & 1) as Bit } else { 0 })
        .collect();
    Ok(Secret {
        bits,
        source_integer: Some(value),
    })
}

/// Per-case abort thresholds for the step 5 and step 6 error rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub case_a: f64,
    pub case_b: f64,
    pub case_c: f64,
    pub case_d: f64,
}

impl Thresholds {
    pub fn uniform(tau: f64) -> Self {
        Thresholds {
            case_a: tau,
            case_b: tau,
            case_c: tau,
            case_d: tau,
        }
    }

    pub fn for_case(&self, case: RoundCase) -> f64 {
        match case {
            RoundCase::A => self.case_a,
            RoundCase::B => self.case_b,
            RoundCase::C => self.case_c,
            RoundCase::D => self.case_d,
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::uniform(0.05)
    }
}

/// Where `K_BC` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KeySource {
    /// Injected key, for unit isolation and the CLI `fixed:` mode.
    Fixed(Vec<Bit>),
    /// Establish the key by running the circled SQKD subprotocol.
    Sqkd { check_fraction: f64 },
}

impl Default for KeySource {
    fn default() -> Self {
        KeySource::Sqkd {
            check_fraction: sqkd::DEFAULT_CHECK_FRACTION,
        }
    }
}

/// Full configuration of one protocol run.
#[derive(Debug, Clone)]
pub struct SqpcConfig {
    pub l: usize,
    pub delta: f64,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub key_source: KeySource,
    pub attack: AttackSpec,
}

impl SqpcConfig {
    /// Honest-channel configuration with the default parameters.
    pub fn new(l: usize, seed: u64) -> Self {
        SqpcConfig {
            l,
            delta: 1.0,
            thresholds: Thresholds::default(),
            seed,
            key_source: KeySource::default(),
            attack: AttackSpec::None,
        }
    }

    /// `N = ceil(8 L (1 + delta))` two-particle rounds.
    pub fn num_rounds(&self) -> usize {
        (8.0 * self.l as f64 * (1.0 + self.delta)).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidArgument("L must be at least 1".into()));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidArgument("delta must be positive".into()));
        }
        for case in ALL_CASES {
            let tau = self.thresholds.for_case(case);
            if !(0.0..=1.0).contains(&tau) {
                return Err(Error::InvalidArgument(format!(
                    "threshold for case {case:?} must lie in [0, 1], got {tau}"
                )));
            }
        }
        match &self.key_source {
            KeySource::Fixed(bits) => {
                if bits.len() != self.l {
                    return Err(Error::InvalidArgument(format!(
                        "fixed key has {} bits, need L = {}",
                        bits.len(),
                        self.l
                    )));
                }
                if bits.iter().any(|&b| b > 1) {
                    return Err(Error::InvalidArgument("key bits must be 0 or 1".into()));
                }
            }
            KeySource::Sqkd { check_fraction } => {
                if !(*check_fraction > 0.0 && *check_fraction < 1.0) {
                    return Err(Error::InvalidArgument(
                        "check fraction must lie strictly between 0 and 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The key bits in play for one completed run: the shared `K_BC`, both
/// users' one-time pads, and the case-D round ids the pads were read
/// from. Pad positions are disjoint from the TEST rounds; Bob's and
/// Charlie's lists may overlap each other (each contributes their own
/// bit at a shared position).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMaterial {
    pub k_bc: Vec<Bit>,
    pub m_b: Vec<Bit>,
    pub m_c: Vec<Bit>,
    pub m_b_positions: Vec<usize>,
    pub m_c_positions: Vec<usize>,
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AbortReason {
    /// The SQKD subprotocol failed to deliver a key.
    KeyEstablishment { detail: String },
    /// A step 5 or step 6 error rate exceeded its threshold.
    ThresholdExceeded {
        step: u8,
        case: RoundCase,
        rate: f64,
        threshold: f64,
    },
    /// Too few case-D SIFT bits to run step 6 or step 7.
    InsufficientBits {
        step: u8,
        needed: usize,
        available: usize,
    },
}

impl AbortReason {
    /// The protocol step that triggered the abort (0 for the preliminary
    /// key establishment).
    pub fn step(&self) -> u8 {
        match self {
            AbortReason::KeyEstablishment { .. } => 0,
            AbortReason::ThresholdExceeded { step, .. } => *step,
            AbortReason::InsufficientBits { step, .. } => *step,
        }
    }
}

/// The outcome of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Equal,
    NotEqual,
    Aborted(AbortReason),
}

impl Verdict {
    pub fn is_aborted(&self) -> bool {
        matches!(self, Verdict::Aborted(_))
    }
}

/// Everything a run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub case_counts: [usize; 4],
    /// Step 5 rates for cases A-C and the step 6 TEST rate for case D;
    /// `None` where no round existed or the run aborted before the rate
    /// was computed.
    pub error_rates: [Option<f64>; 4],
    pub verdict: Verdict,
    pub r_b: Vec<Bit>,
    pub r_c: Vec<Bit>,
    /// TP's per-group comparison bits `R^i`; all kept for diagnosis even
    /// though the verdict only needs the first nonzero one.
    pub r: Vec<Bit>,
    pub key_material: Option<KeyMaterial>,
    pub round_log: Vec<RoundRecord>,
}

/// One-time-pad encryption of a group bit: `G xor M xor K`.
pub fn encrypt(g: Bit, m: Bit, k: Bit) -> Bit {
    g ^ m ^ k
}

/// TP's step 8: `R^i = R_B^i xor R_C^i xor M_B^i xor M_C^i` for every
/// group, with the verdict the sequential scan would reach.
pub fn compare(r_b: &[Bit], r_c: &[Bit], m_b: &[Bit], m_c: &[Bit]) -> Result<(Vec<Bit>, Verdict)> {
    let l = r_b.len();
    if r_c.len() != l || m_b.len() != l || m_c.len() != l {
        return Err(Error::InvalidArgument(format!(
            "compare needs four length-{l} bit vectors, got {}, {}, {}",
            r_c.len(),
            m_b.len(),
            m_c.len()
        )));
    }
    let r: Vec<Bit> = (0..l).map(|i| r_b[i] ^ r_c[i] ^ m_b[i] ^ m_c[i]).collect();
    let verdict = if r.iter().all(|&bit| bit == 0) {
        Verdict::Equal
    } else {
        Verdict::NotEqual
    };
    Ok((r, verdict))
}

/// TP's step 6 selection: L distinct TEST positions into the case-D round
/// list, uniformly at random, returned sorted.
pub fn select_test_pairs(
    case_d_count: usize,
    l: usize,
    rng: &mut dyn RngCore,
) -> std::result::Result<Vec<usize>, AbortReason> {
    if case_d_count < l {
        return Err(AbortReason::InsufficientBits {
            step: 6,
            needed: l,
            available: case_d_count,
        });
    }
    let mut positions: Vec<usize> = rand::seq::index::sample(rng, case_d_count, l).into_vec();
    positions.sort_unstable();
    Ok(positions)
}

/// A user's step 7 selection: L distinct one-time-pad positions, returned
/// sorted as indices into the remaining (non-TEST) case-D list.
pub fn select_otp_key(
    remaining: &[usize],
    l: usize,
    rng: &mut dyn RngCore,
) -> std::result::Result<Vec<usize>, AbortReason> {
    if remaining.len() < l {
        return Err(AbortReason::InsufficientBits {
            step: 7,
            needed: l,
            available: remaining.len(),
        });
    }
    let mut picks: Vec<usize> = rand::seq::index::sample(rng, remaining.len(), l).into_vec();
    picks.sort_unstable();
    Ok(picks)
}

/// Executes one two-particle round: TP prepares `|++>`, the attack
/// interposes on the forward leg, both users act, the attack interposes
/// on the backward leg, and TP measures per the case table.
///
/// With `actions: None` both users flip fair coins (the first two draws
/// of the round's stream); tests pin the case by passing `Some`.
pub fn run_round(
    round_id: usize,
    attack: &dyn Attack,
    actions: Option<(UserAction, UserAction)>,
    rng: &mut dyn RngCore,
) -> RoundRecord {
    let (bob_action, charlie_action) = actions.unwrap_or_else(|| {
        let bob = UserAction::random(rng);
        let charlie = UserAction::random(rng);
        (bob, charlie)
    });
    let case = classify_case(bob_action, charlie_action);

    let mut state = attack.forward(initial_pair(), bob_action, rng);

    let mut bob_sift_bit = None;
    if bob_action == UserAction::Sift {
        let (bit, post) = state
            .measure(0, BasisKind::Z, rng)
            .expect("valid round state");
        bob_sift_bit = Some(bit);
        state = post;
    }
    let mut charlie_sift_bit = None;
    if charlie_action == UserAction::Sift {
        let (bit, post) = state
            .measure(1, BasisKind::Z, rng)
            .expect("valid round state");
        charlie_sift_bit = Some(bit);
        state = post;
    }

    let state = attack.backward(state, bob_action, rng);

    let (tp_bits, _) = tp_operate(case, &state, rng).expect("valid round state");
    let error = match case {
        RoundCase::D => None,
        _ => Some(ctrl_error(case, &tp_bits).expect("cases A-C")),
    };

    RoundRecord {
        round_id,
        bob_action,
        charlie_action,
        case,
        bob_sift_bit,
        charlie_sift_bit,
        tp_bits,
        ctrl_error: error,
    }
}

/// Runs the full protocol for secrets `x` (Bob's) and `y` (Charlie's).
///
/// Protocol aborts land in the report's verdict; `Err` is reserved for
/// invalid configuration.
pub fn run_protocol(config: &SqpcConfig, x: &Secret, y: &Secret) -> Result<RunReport> {
    config.validate()?;
    if x.len() != config.l || y.len() != config.l {
        return Err(Error::InvalidArgument(format!(
            "secrets must have L = {} groups, got {} and {}",
            config.l,
            x.len(),
            y.len()
        )));
    }

    let l = config.l;
    let attack = config.attack.build();

    // Preliminary: the users share K_BC.
    let k_bc = match &config.key_source {
        KeySource::Fixed(bits) => bits.clone(),
        KeySource::Sqkd { check_fraction } => {
            let mut rng = stream(config.seed, &[domain::SQKD]);
            match sqkd::establish_key(l, *check_fraction, &mut rng) {
                Ok(result) => result.key,
                Err(abort) => {
                    return Ok(aborted_report(
                        config.seed,
                        [0; 4],
                        [None; 4],
                        Vec::new(),
                        AbortReason::KeyEstablishment {
                            detail: abort.to_string(),
                        },
                    ));
                }
            }
        }
    };

    // Steps 1-4: N rounds over the (possibly attacked) channel.
    let n = config.num_rounds();
    let mut round_log = Vec::with_capacity(n);
    for round_id in 0..n {
        let mut rng = stream(config.seed, &[domain::ROUND, round_id as u64]);
        round_log.push(run_round(round_id, attack.as_ref(), None, &mut rng));
    }
    let mut case_counts = [0usize; 4];
    for record in &round_log {
        case_counts[record.case.index()] += 1;
    }

    // Step 5: CTRL-line error rates of cases A-C.
    let mut error_rates: [Option<f64>; 4] = [None; 4];
    for case in [RoundCase::A, RoundCase::B, RoundCase::C] {
        let idx = case.index();
        if case_counts[idx] == 0 {
            continue;
        }
        let errors = round_log
            .iter()
            .filter(|r| r.case == case && r.ctrl_error == Some(true))
            .count();
        let rate = errors as f64 / case_counts[idx] as f64;
        error_rates[idx] = Some(rate);
        let tau = config.thresholds.for_case(case);
        if rate > tau {
            return Ok(aborted_report(
                config.seed,
                case_counts,
                error_rates,
                round_log,
                AbortReason::ThresholdExceeded {
                    step: 5,
                    case,
                    rate,
                    threshold: tau,
                },
            ));
        }
    }

    // Step 6: TEST a random sample of L case-D SIFT-bit pairs.
    let case_d: Vec<usize> = round_log
        .iter()
        .filter(|r| r.case == RoundCase::D)
        .map(|r| r.round_id)
        .collect();
    let mut test_rng = stream(config.seed, &[domain::TEST_SELECT]);
    let test_positions = match select_test_pairs(case_d.len(), l, &mut test_rng) {
        Ok(p) => p,
        Err(reason) => {
            return Ok(aborted_report(
                config.seed,
                case_counts,
                error_rates,
                round_log,
                reason,
            ))
        }
    };
    let test_errors = test_positions
        .iter()
        .filter(|&&pos| {
            let record = &round_log[case_d[pos]];
            !crate::parties::sift_consistent(
                (record.tp_bits.b.bit, record.tp_bits.c.bit),
                record.bob_sift_bit.expect("case D"),
                record.charlie_sift_bit.expect("case D"),
            )
        })
        .count();
    let test_rate = test_errors as f64 / l as f64;
    error_rates[RoundCase::D.index()] = Some(test_rate);
    if test_rate > config.thresholds.case_d {
        return Ok(aborted_report(
            config.seed,
            case_counts,
            error_rates,
            round_log,
            AbortReason::ThresholdExceeded {
                step: 6,
                case: RoundCase::D,
                rate: test_rate,
                threshold: config.thresholds.case_d,
            },
        ));
    }

    // Step 7: one-time pads from the remaining case-D SIFT bits. The
    // users select independently; their position lists may overlap.
    let remaining: Vec<usize> = case_d
        .iter()
        .enumerate()
        .filter(|(pos, _)| !test_positions.contains(pos))
        .map(|(_, &round_id)| round_id)
        .collect();
    let mut bob_rng = stream(config.seed, &[domain::BOB_KEY]);
    let bob_picks = match select_otp_key(&remaining, l, &mut bob_rng) {
        Ok(p) => p,
        Err(reason) => {
            return Ok(aborted_report(
                config.seed,
                case_counts,
                error_rates,
                round_log,
                reason,
            ))
        }
    };
    let mut charlie_rng = stream(config.seed, &[domain::CHARLIE_KEY]);
    let charlie_picks = match select_otp_key(&remaining, l, &mut charlie_rng) {
        Ok(p) => p,
        Err(reason) => {
            return Ok(aborted_report(
                config.seed,
                case_counts,
                error_rates,
                round_log,
                reason,
            ))
        }
    };
    let m_b_positions: Vec<usize> = bob_picks.iter().map(|&p| remaining[p]).collect();
    let m_c_positions: Vec<usize> = charlie_picks.iter().map(|&p| remaining[p]).collect();

    let m_b: Vec<Bit> = m_b_positions
        .iter()
        .map(|&id| round_log[id].bob_sift_bit.expect("case D"))
        .collect();
    let m_c: Vec<Bit> = m_c_positions
        .iter()
        .map(|&id| round_log[id].charlie_sift_bit.expect("case D"))
        .collect();
    // TP reconstructs both pads from his own OPERATION 4 outcomes at the
    // published positions.
    let m_b_tp: Vec<Bit> = m_b_positions
        .iter()
        .map(|&id| round_log[id].tp_bits.b.bit)
        .collect();
    let m_c_tp: Vec<Bit> = m_c_positions
        .iter()
        .map(|&id| round_log[id].tp_bits.c.bit)
        .collect();

    let r_b: Vec<Bit> = (0..l)
        .map(|i| encrypt(x.bits()[i], m_b[i], k_bc[i]))
        .collect();
    let r_c: Vec<Bit> = (0..l)
        .map(|i| encrypt(y.bits()[i], m_c[i], k_bc[i]))
        .collect();

    // Step 8.
    let (r, verdict) = compare(&r_b, &r_c, &m_b_tp, &m_c_tp)?;

    Ok(RunReport {
        seed: config.seed,
        case_counts,
        error_rates,
        verdict,
        r_b,
        r_c,
        r,
        key_material: Some(KeyMaterial {
            k_bc,
            m_b,
            m_c,
            m_b_positions,
            m_c_positions,
        }),
        round_log,
    })
}

fn aborted_report(
    seed: u64,
    case_counts: [usize; 4],
    error_rates: [Option<f64>; 4],
    round_log: Vec<RoundRecord>,
    reason: AbortReason,
) -> RunReport {
    RunReport {
        seed,
        case_counts,
        error_rates,
        verdict: Verdict::Aborted(reason),
        r_b: Vec::new(),
        r_c: Vec::new(),
        r: Vec::new(),
        key_material: None,
        round_log,
    }
}
