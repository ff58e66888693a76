//! Probe analysis for entangle-measure attacks.
//!
//! An entangle-measure attacker couples a probe to the pair with `U_E` on
//! the forward leg and `U_F` on the backward leg. Writing
//! `U_E(|++>|0..0>) = sum_{x1 x2} |x1 x2>|E_{x1 x2}>` decomposes the
//! attack into four unnormalized probe branches. The security property
//! checked here: an attack whose average detection probability is zero
//! must leave the probe state independent of the users' SIFT outcomes,
//! i.e. with zero distinguishability between the conditional probe
//! states. The contrapositive is what the checker tests: detection below
//! tolerance together with distinguishability above tolerance is a
//! violation, which no unitary pair can produce.

use serde::{Deserialize, Serialize};

use super::registry::controlled_ry_label;
use super::AttackSpec;
use crate::error::{Error, Result};
use crate::protocol::initial_pair;
use crate::qstate::{
    controlled_ry, reduced_density, trace_distance, Amplitude, BasisKind, StateVector,
    UnitaryMatrix,
};

/// The four forward probe branches `|E_00>..|E_11>` (unnormalized), plus
/// the backward branches `|F_00>..|F_11>` when `U_F` preserves the users'
/// collapsed pair states so that they are defined at all.
#[derive(Debug, Clone)]
pub struct ProbeDecomposition {
    pub e_branches: [Vec<Amplitude>; 4],
    pub f_branches: Option<[Vec<Amplitude>; 4]>,
}

impl ProbeDecomposition {
    /// `sum_ij <E_ij|E_ij>`, which unitarity fixes to 1.
    pub fn total_e_weight(&self) -> f64 {
        self.e_branches
            .iter()
            .flat_map(|v| v.iter())
            .map(|a| a.norm_sqr())
            .sum()
    }
}

fn check_dims(u: &UnitaryMatrix, probe_qubits: usize, which: &str) -> Result<()> {
    if probe_qubits == 0 {
        return Err(Error::InvalidArgument("probe must have at least one qubit".into()));
    }
    let dim = 1usize << (2 + probe_qubits);
    if u.dim() != dim {
        return Err(Error::InvalidArgument(format!(
            "{which} has dimension {}, expected {dim} for {probe_qubits} probe qubits",
            u.dim()
        )));
    }
    Ok(())
}

fn attach_probe(probe_qubits: usize) -> StateVector {
    initial_pair().tensor(&StateVector::computational(probe_qubits, 0))
}

fn all_targets(probe_qubits: usize) -> Vec<usize> {
    (0..2 + probe_qubits).collect()
}

/// Extracts the probe branches of `U_E(|++>_BC |0..0>_E)` by projecting
/// onto the four computational pair states.
pub fn decompose_probe(u_e: &UnitaryMatrix, probe_qubits: usize) -> Result<ProbeDecomposition> {
    check_dims(u_e, probe_qubits, "U_E")?;
    let psi = attach_probe(probe_qubits).apply_unitary(u_e, &all_targets(probe_qubits))?;
    let probe_dim = 1usize << probe_qubits;
    let amps = psi.amplitudes();
    let e_branches: [Vec<Amplitude>; 4] = std::array::from_fn(|pair| {
        amps[pair * probe_dim..(pair + 1) * probe_dim].to_vec()
    });
    Ok(ProbeDecomposition {
        e_branches,
        f_branches: None,
    })
}

/// Completes a decomposition with the backward branches. Returns
/// `f_branches: Some(..)` iff `U_F` maps every occupied `|x1 x2>|E~>` back
/// into the same pair block (within tolerance), i.e. cannot change the
/// users' resent states.
pub fn decompose_with_backward(
    u_e: &UnitaryMatrix,
    u_f: &UnitaryMatrix,
    probe_qubits: usize,
) -> Result<ProbeDecomposition> {
    check_dims(u_f, probe_qubits, "U_F")?;
    let mut decomp = decompose_probe(u_e, probe_qubits)?;
    let probe_dim = 1usize << probe_qubits;
    let dim = 4 * probe_dim;
    const LEAK_TOL: f64 = 1e-9;

    let mut f_branches: [Vec<Amplitude>; 4] =
        std::array::from_fn(|_| vec![Amplitude::new(0.0, 0.0); probe_dim]);
    let mut defined = true;
    for pair in 0..4 {
        let weight: f64 = decomp.e_branches[pair].iter().map(|a| a.norm_sqr()).sum();
        if weight < 1e-12 {
            continue;
        }
        // Embed |x1 x2>|E_x1x2> (unnormalized) and push it through U_F.
        let mut vector = vec![Amplitude::new(0.0, 0.0); dim];
        vector[pair * probe_dim..(pair + 1) * probe_dim]
            .copy_from_slice(&decomp.e_branches[pair]);
        let out = apply_matrix(u_f, &vector);
        let leak: f64 = out
            .iter()
            .enumerate()
            .filter(|(i, _)| i / probe_dim != pair)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if leak > LEAK_TOL {
            defined = false;
            break;
        }
        f_branches[pair] = out[pair * probe_dim..(pair + 1) * probe_dim].to_vec();
    }
    decomp.f_branches = defined.then_some(f_branches);
    Ok(decomp)
}

fn apply_matrix(u: &UnitaryMatrix, v: &[Amplitude]) -> Vec<Amplitude> {
    let dim = u.dim();
    let mut out = vec![Amplitude::new(0.0, 0.0); dim];
    for (r, slot) in out.iter_mut().enumerate() {
        let mut acc = Amplitude::new(0.0, 0.0);
        for (c, x) in v.iter().enumerate() {
            acc += u.entry(r, c) * x;
        }
        *slot = acc;
    }
    out
}

/// Probe states conditioned on projecting the listed pair qubits onto Z
/// outcomes, after the full `U_E` / users / `U_F` evolution of a SIFT
/// round, with the conditioning probability of each.
fn conditional_probe_states(
    u_e: &UnitaryMatrix,
    u_f: &UnitaryMatrix,
    probe_qubits: usize,
    condition_qubits: &[usize],
) -> Result<Vec<(f64, crate::qstate::DensityMatrix)>> {
    check_dims(u_e, probe_qubits, "U_E")?;
    check_dims(u_f, probe_qubits, "U_F")?;
    let targets = all_targets(probe_qubits);
    let psi = attach_probe(probe_qubits).apply_unitary(u_e, &targets)?;
    let probe_indices: Vec<usize> = (2..2 + probe_qubits).collect();

    let mut out = Vec::new();
    let k = condition_qubits.len();
    for outcome in 0..1usize << k {
        let mut prob = 1.0;
        let mut state = psi.clone();
        let mut dead = false;
        for (j, &q) in condition_qubits.iter().enumerate() {
            let bit = (outcome >> (k - 1 - j) & 1) as u8;
            let probs = state.branch_probabilities(q, BasisKind::Z)?;
            if probs[bit as usize] < 1e-12 {
                dead = true;
                break;
            }
            let (p, post) = state.project(q, BasisKind::Z, bit)?;
            prob *= p;
            state = post;
        }
        if dead {
            continue;
        }
        let after = state.apply_unitary(u_f, &targets)?;
        out.push((prob, reduced_density(&after, &probe_indices)?));
    }
    Ok(out)
}

fn max_pairwise_distance(states: &[(f64, crate::qstate::DensityMatrix)]) -> Result<f64> {
    let mut max = 0.0_f64;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            max = max.max(trace_distance(&states[i].1, &states[j].1)?);
        }
    }
    Ok(max)
}

/// Maximum pairwise trace distance between the attacker's probe states
/// conditioned on the four case-D SIFT outcome pairs. Zero means the
/// probe carries no information about the users' bits.
pub fn probe_distinguishability(
    u_e: &UnitaryMatrix,
    u_f: &UnitaryMatrix,
    probe_qubits: usize,
) -> Result<f64> {
    let states = conditional_probe_states(u_e, u_f, probe_qubits, &[0, 1])?;
    max_pairwise_distance(&states)
}

/// The participant-attack variant: distinguishability of the probe
/// conditioned on Charlie's SIFT outcome alone (Bob, as the attacker,
/// already knows his own). Zero means the probe tells a dishonest Bob
/// nothing about Charlie's bit.
pub fn probe_distinguishability_given_charlie(
    u_e: &UnitaryMatrix,
    u_f: &UnitaryMatrix,
    probe_qubits: usize,
) -> Result<f64> {
    let states = conditional_probe_states(u_e, u_f, probe_qubits, &[1])?;
    max_pairwise_distance(&states)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem1Verdict {
    /// Either the attack is detectable or its probe is uninformative.
    Consistent,
    /// Undetectable yet informative — impossible for a unitary attack.
    Violated,
}

/// Result of the probe-independence check for one attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub attack: String,
    pub detection: super::AttackReport,
    pub distinguishability: f64,
    pub detection_eps: f64,
    pub distinguishability_eps: f64,
    pub verdict: Theorem1Verdict,
}

/// Checks the probe-independence property on one entangle-measure attack:
/// `Violated` iff average detection is at most `detection_eps` while the
/// probe distinguishability exceeds `distinguishability_eps`. The
/// expected verdict for every realizable attack is `Consistent`.
pub fn theorem1_check(
    spec: &AttackSpec,
    detection_eps: f64,
    distinguishability_eps: f64,
) -> Result<Theorem1Report> {
    let AttackSpec::EntangleMeasure {
        u_e,
        u_f,
        probe_qubits,
        ..
    } = spec
    else {
        return Err(Error::InvalidArgument(
            "theorem1_check applies to entangle-measure attacks".into(),
        ));
    };
    let detection = super::exact_detection(spec)?;
    let distinguishability = probe_distinguishability(u_e, u_f, *probe_qubits)?;
    let verdict = if detection.average_detection <= detection_eps
        && distinguishability > distinguishability_eps
    {
        Theorem1Verdict::Violated
    } else {
        Theorem1Verdict::Consistent
    };
    Ok(Theorem1Report {
        attack: spec.canonical_name(),
        detection,
        distinguishability,
        detection_eps,
        distinguishability_eps,
        verdict,
    })
}

/// The parametrized attack family used for sweeps: `U_E` applies a probe
/// rotation `R_y(theta_b)` controlled on particle B and `R_y(theta_c)`
/// controlled on particle C. With `compensated`, `U_F = U_E^dagger`
/// uncomputes the probe on the backward leg, which satisfies the
/// equal-backward-branch condition and makes the attack both undetectable
/// and uninformative; otherwise `U_F` is the identity.
pub fn controlled_rotation_attack(
    theta_b: f64,
    theta_c: f64,
    probe_qubits: usize,
    compensated: bool,
) -> Result<AttackSpec> {
    if probe_qubits == 0 {
        return Err(Error::InvalidArgument("probe must have at least one qubit".into()));
    }
    let n = 2 + probe_qubits;
    let target_b = 2;
    let target_c = if probe_qubits >= 2 { 3 } else { 2 };
    let u_e = controlled_ry(n, 0, target_b, theta_b)
        .compose(&controlled_ry(n, 1, target_c, theta_c))?;
    let u_f = if compensated {
        u_e.adjoint()
    } else {
        UnitaryMatrix::identity(1 << n)
    };
    let label = controlled_ry_label(theta_b, theta_c, compensated);
    AttackSpec::entangle_measure(u_e, u_f, probe_qubits, label)
}
