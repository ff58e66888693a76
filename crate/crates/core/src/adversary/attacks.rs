//! The concrete attack strategies.

use rand::{Rng, RngCore};

use super::{
    Attack, AttackSpec, BasisPolicy, DishonestScheme, FakeStatePolicy, KetLabel, LinkDirection,
    ALL_KETS,
};
use crate::parties::UserAction;
use crate::qstate::{measurement_branches, BasisKind, StateVector, UnitaryMatrix};

pub(super) fn build(spec: &AttackSpec) -> Box<dyn Attack> {
    match spec {
        AttackSpec::None => Box::new(NoAttack),
        AttackSpec::InterceptResend(policy) => Box::new(InterceptResend { policy: *policy }),
        AttackSpec::MeasureResend(policy) => Box::new(MeasureResend { policy: *policy }),
        AttackSpec::EntangleMeasure {
            u_e,
            u_f,
            probe_qubits,
            label,
        } => Box::new(EntangleMeasure {
            u_e: u_e.clone(),
            u_f: u_f.clone(),
            probe_qubits: *probe_qubits,
            label: label.clone(),
        }),
        AttackSpec::DishonestBob(scheme) => Box::new(DishonestBob { scheme: *scheme }),
    }
}

struct NoAttack;

impl Attack for NoAttack {
    fn name(&self) -> String {
        "none".into()
    }

    fn forward(&self, state: StateVector, _: UserAction, _: &mut dyn RngCore) -> StateVector {
        state
    }

    fn backward(&self, state: StateVector, _: UserAction, _: &mut dyn RngCore) -> StateVector {
        state
    }

    fn forward_branches(&self, state: &StateVector, _: UserAction) -> Vec<(f64, StateVector)> {
        vec![(1.0, state.clone())]
    }

    fn backward_branches(&self, state: &StateVector, _: UserAction) -> Vec<(f64, StateVector)> {
        vec![(1.0, state.clone())]
    }
}

/// Replaces the in-flight pair with freshly prepared fakes; the real
/// particles stay with the attacker and never reach anyone again.
struct InterceptResend {
    policy: FakeStatePolicy,
}

fn fake_pair(b: KetLabel, c: KetLabel) -> StateVector {
    b.state().tensor(&c.state())
}

impl Attack for InterceptResend {
    fn name(&self) -> String {
        AttackSpec::InterceptResend(self.policy).canonical_name()
    }

    fn forward(&self, _state: StateVector, _: UserAction, rng: &mut dyn RngCore) -> StateVector {
        match self.policy {
            FakeStatePolicy::FixedPair(b, c) => fake_pair(b, c),
            FakeStatePolicy::UniformRandomProduct => {
                let b = ALL_KETS[rng.random_range(0..4)];
                let c = ALL_KETS[rng.random_range(0..4)];
                fake_pair(b, c)
            }
        }
    }

    fn backward(&self, state: StateVector, _: UserAction, _: &mut dyn RngCore) -> StateVector {
        state
    }

    fn forward_branches(&self, _state: &StateVector, _: UserAction) -> Vec<(f64, StateVector)> {
        match self.policy {
            FakeStatePolicy::FixedPair(b, c) => vec![(1.0, fake_pair(b, c))],
            FakeStatePolicy::UniformRandomProduct => {
                let mut out = Vec::with_capacity(16);
                for b in ALL_KETS {
                    for c in ALL_KETS {
                        out.push((1.0 / 16.0, fake_pair(b, c)));
                    }
                }
                out
            }
        }
    }

    fn backward_branches(&self, state: &StateVector, _: UserAction) -> Vec<(f64, StateVector)> {
        vec![(1.0, state.clone())]
    }
}

/// Measures both in-flight particles and forwards the collapsed states.
struct MeasureResend {
    policy: BasisPolicy,
}

impl BasisPolicy {
    /// Per-particle basis choices with their probabilities.
    fn choices(self) -> Vec<(f64, BasisKind)> {
        match self {
            BasisPolicy::AlwaysZ => vec![(1.0, BasisKind::Z)],
            BasisPolicy::AlwaysX => vec![(1.0, BasisKind::X)],
            BasisPolicy::UniformRandom => vec![(0.5, BasisKind::Z), (0.5, BasisKind::X)],
        }
    }

    fn sample(self, rng: &mut dyn RngCore) -> BasisKind {
        match self {
            BasisPolicy::AlwaysZ => BasisKind::Z,
            BasisPolicy::AlwaysX => BasisKind::X,
            BasisPolicy::UniformRandom => {
                if rng.random::<f64>() < 0.5 {
                    BasisKind::Z
                } else {
                    BasisKind::X
                }
            }
        }
    }
}

impl Attack for MeasureResend {
    fn name(&self) -> String {
        AttackSpec::MeasureResend(self.policy).canonical_name()
    }

    fn forward(&self, state: StateVector, _: UserAction, rng: &mut dyn RngCore) -> StateVector {
        let basis_b = self.policy.sample(rng);
        let (_, state) = state.measure(0, basis_b, rng).expect("valid pair state");
        let basis_c = self.policy.sample(rng);
        let (_, state) = state.measure(1, basis_c, rng).expect("valid pair state");
        state
    }

    fn backward(&self, state: StateVector, _: UserAction, _: &mut dyn RngCore) -> StateVector {
        state
    }

    fn forward_branches(&self, state: &StateVector, _: UserAction) -> Vec<(f64, StateVector)> {
        let mut out = Vec::new();
        for (wb, basis_b) in self.policy.choices() {
            for (pb, _, after_b) in
                measurement_branches(state, 0, basis_b).expect("valid pair state")
            {
                for (wc, basis_c) in self.policy.choices() {
                    for (pc, _, after_c) in
                        measurement_branches(&after_b, 1, basis_c).expect("valid pair state")
                    {
                        out.push((wb * pb * wc * pc, after_c));
                    }
                }
            }
        }
        out
    }

    fn backward_branches(&self, state: &StateVector, _: UserAction) -> Vec<(f64, StateVector)> {
        vec![(1.0, state.clone())]
    }
}

/// Couples a private probe to the pair: `U_E` on the way out, `U_F` on
/// the way back, sharing the probe register.
struct EntangleMeasure {
    u_e: UnitaryMatrix,
    u_f: UnitaryMatrix,
    probe_qubits: usize,
    label: String,
}

impl EntangleMeasure {
    fn targets(&self) -> Vec<usize> {
        (0..2 + self.probe_qubits).collect()
    }

    fn attach_probe(&self, state: &StateVector) -> StateVector {
        let probe = StateVector::computational(self.probe_qubits, 0);
        state.tensor(&probe)
    }
}

impl Attack for EntangleMeasure {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn probe_qubits(&self) -> usize {
        self.probe_qubits
    }

    fn forward(&self, state: StateVector, _: UserAction, _: &mut dyn RngCore) -> StateVector {
        self.attach_probe(&state)
            .apply_unitary(&self.u_e, &self.targets())
            .expect("dimensions validated at construction")
    }

    fn backward(&self, state: StateVector, _: UserAction, _: &mut dyn RngCore) -> StateVector {
        state
            .apply_unitary(&self.u_f, &self.targets())
            .expect("dimensions validated at construction")
    }

    fn forward_branches(&self, state: &StateVector, bob: UserAction) -> Vec<(f64, StateVector)> {
        let mut throwaway = NullRng;
        vec![(1.0, self.forward(state.clone(), bob, &mut throwaway))]
    }

    fn backward_branches(&self, state: &StateVector, bob: UserAction) -> Vec<(f64, StateVector)> {
        let mut throwaway = NullRng;
        vec![(1.0, self.backward(state.clone(), bob, &mut throwaway))]
    }
}

/// Dishonest Bob's interposition on Charlie's link (particle C is qubit 1
/// of the register). Active only in rounds where Bob SIFTs; a clever Bob
/// leaves CTRL rounds untouched since they carry no SIFT bits.
pub fn dishonest_bob_interpose(
    scheme: DishonestScheme,
    link: LinkDirection,
    state: StateVector,
    bob_action: UserAction,
    rng: &mut dyn RngCore,
) -> StateVector {
    if bob_action == UserAction::Ctrl {
        return state;
    }
    match (scheme, link) {
        (DishonestScheme::I, LinkDirection::Forward)
        | (DishonestScheme::II, LinkDirection::Backward) => {
            let (_, post) = state.measure(1, BasisKind::Z, rng).expect("valid pair state");
            post
        }
        (DishonestScheme::III, LinkDirection::Forward) => {
            // Discard the original particle (measurement decouples it from
            // everything else) and substitute a fresh uniformly random Z ket.
            let (collapsed, post) = state.measure(1, BasisKind::Z, rng).expect("valid pair state");
            let fresh: u8 = if rng.random::<f64>() < 0.5 { 0 } else { 1 };
            set_qubit_one(post, collapsed, fresh)
        }
        _ => state,
    }
}

fn dishonest_branches(
    scheme: DishonestScheme,
    link: LinkDirection,
    state: &StateVector,
    bob_action: UserAction,
) -> Vec<(f64, StateVector)> {
    if bob_action == UserAction::Ctrl {
        return vec![(1.0, state.clone())];
    }
    match (scheme, link) {
        (DishonestScheme::I, LinkDirection::Forward)
        | (DishonestScheme::II, LinkDirection::Backward) => {
            measurement_branches(state, 1, BasisKind::Z)
                .expect("valid pair state")
                .into_iter()
                .map(|(p, _, post)| (p, post))
                .collect()
        }
        (DishonestScheme::III, LinkDirection::Forward) => {
            let mut out = Vec::with_capacity(4);
            for (p, collapsed, post) in
                measurement_branches(state, 1, BasisKind::Z).expect("valid pair state")
            {
                for fresh in 0..2u8 {
                    out.push((p * 0.5, set_qubit_one(post.clone(), collapsed, fresh)));
                }
            }
            out
        }
        _ => vec![(1.0, state.clone())],
    }
}

/// After qubit 1 collapsed to `current`, force it to `wanted` (the fresh
/// preparation of scheme III).
fn set_qubit_one(state: StateVector, current: u8, wanted: u8) -> StateVector {
    if current == wanted {
        state
    } else {
        state
            .apply_unitary(&UnitaryMatrix::pauli_x(), &[1])
            .expect("valid pair state")
    }
}

struct DishonestBob {
    scheme: DishonestScheme,
}

impl Attack for DishonestBob {
    fn name(&self) -> String {
        AttackSpec::DishonestBob(self.scheme).canonical_name()
    }

    fn active_cases(&self) -> [bool; 4] {
        // Bob attacks only when he SIFTs: cases C and D.
        [false, false, true, true]
    }

    fn forward(
        &self,
        state: StateVector,
        bob_action: UserAction,
        rng: &mut dyn RngCore,
    ) -> StateVector {
        dishonest_bob_interpose(self.scheme, LinkDirection::Forward, state, bob_action, rng)
    }

    fn backward(
        &self,
        state: StateVector,
        bob_action: UserAction,
        rng: &mut dyn RngCore,
    ) -> StateVector {
        dishonest_bob_interpose(self.scheme, LinkDirection::Backward, state, bob_action, rng)
    }

    fn forward_branches(&self, state: &StateVector, bob: UserAction) -> Vec<(f64, StateVector)> {
        dishonest_branches(self.scheme, LinkDirection::Forward, state, bob)
    }

    fn backward_branches(&self, state: &StateVector, bob: UserAction) -> Vec<(f64, StateVector)> {
        dishonest_branches(self.scheme, LinkDirection::Backward, state, bob)
    }
}

/// Placeholder randomness source for branches that are deterministic by
/// construction; any draw from it is a bug.
struct NullRng;

impl RngCore for NullRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("deterministic branch must not draw randomness")
    }

    fn next_u64(&mut self) -> u64 {
        unreachable!("deterministic branch must not draw randomness")
    }

    fn fill_bytes(&mut self, _dest: &mut [u8]) {
        unreachable!("deterministic branch must not draw randomness")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::ket;
    use crate::rng::stream;

    fn plus_plus() -> StateVector {
        ket("+").unwrap().tensor(&ket("+").unwrap())
    }

    #[test]
    fn none_is_identity() {
        let attack = AttackSpec::None.build();
        let mut rng = stream(11, &[0]);
        let s = plus_plus();
        assert_eq!(attack.forward(s.clone(), UserAction::Ctrl, &mut rng), s);
        assert_eq!(attack.backward(s.clone(), UserAction::Sift, &mut rng), s);
    }

    #[test]
    fn intercept_fixed_pair_forwards_the_fake() {
        let spec = AttackSpec::InterceptResend(FakeStatePolicy::FixedPair(
            KetLabel::Plus,
            KetLabel::Zero,
        ));
        let attack = spec.build();
        let mut rng = stream(11, &[1]);
        let out = attack.forward(plus_plus(), UserAction::Ctrl, &mut rng);
        let expected = ket("+").unwrap().tensor(&ket("0").unwrap());
        for (a, b) in out.amplitudes().iter().zip(expected.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn intercept_random_product_enumerates_sixteen_branches() {
        let spec = AttackSpec::InterceptResend(FakeStatePolicy::UniformRandomProduct);
        let attack = spec.build();
        let branches = attack.forward_branches(&plus_plus(), UserAction::Ctrl);
        assert_eq!(branches.len(), 16);
        let total: f64 = branches.iter().map(|(p, _)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measure_resend_z_collapses_uniformly() {
        let spec = AttackSpec::MeasureResend(BasisPolicy::AlwaysZ);
        let attack = spec.build();
        let branches = attack.forward_branches(&plus_plus(), UserAction::Ctrl);
        // |++> collapses into |00>, |01>, |10>, |11> each with probability 1/4.
        assert_eq!(branches.len(), 4);
        for (p, state) in &branches {
            assert!((p - 0.25).abs() < 1e-12);
            let ones: usize = state
                .amplitudes()
                .iter()
                .filter(|a| a.norm() > 0.5)
                .count();
            assert_eq!(ones, 1);
        }

        // Sampling visits all four branches.
        let mut rng = stream(11, &[2]);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..64 {
            let out = attack.forward(plus_plus(), UserAction::Ctrl, &mut rng);
            let idx = out
                .amplitudes()
                .iter()
                .position(|a| a.norm() > 0.5)
                .unwrap();
            seen.insert(idx);
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn measure_resend_x_leaves_plus_plus_unchanged() {
        let spec = AttackSpec::MeasureResend(BasisPolicy::AlwaysX);
        let attack = spec.build();
        let branches = attack.forward_branches(&plus_plus(), UserAction::Ctrl);
        assert_eq!(branches.len(), 1);
        let (p, state) = &branches[0];
        assert!((p - 1.0).abs() < 1e-12);
        for (a, b) in state.amplitudes().iter().zip(plus_plus().amplitudes()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn dishonest_bob_does_nothing_when_he_ctrls() {
        for scheme in [DishonestScheme::I, DishonestScheme::II, DishonestScheme::III] {
            let attack = AttackSpec::DishonestBob(scheme).build();
            let mut rng = stream(11, &[3]);
            let s = plus_plus();
            assert_eq!(attack.forward(s.clone(), UserAction::Ctrl, &mut rng), s);
            assert_eq!(attack.backward(s.clone(), UserAction::Ctrl, &mut rng), s);
        }
    }

    #[test]
    fn dishonest_scheme_i_collapses_charlies_particle() {
        let attack = AttackSpec::DishonestBob(DishonestScheme::I).build();
        let branches = attack.forward_branches(&plus_plus(), UserAction::Sift);
        assert_eq!(branches.len(), 2);
        for (p, state) in &branches {
            assert!((p - 0.5).abs() < 1e-12);
            // Qubit 1 must be a Z eigenstate afterwards.
            let probs = state.branch_probabilities(1, BasisKind::Z).unwrap();
            assert!(probs[0] < 1e-12 || probs[1] < 1e-12);
            // Qubit 0 is untouched (|+>).
            let probs = state.branch_probabilities(0, BasisKind::X).unwrap();
            assert!((probs[0] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dishonest_scheme_iii_is_uncorrelated_with_the_original() {
        let attack = AttackSpec::DishonestBob(DishonestScheme::III).build();
        let branches = attack.forward_branches(&plus_plus(), UserAction::Sift);
        // 2 collapse branches x 2 fresh preparations.
        assert_eq!(branches.len(), 4);
        let total: f64 = branches.iter().map(|(p, _)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entangle_measure_enlarges_the_register() {
        let spec = crate::adversary::controlled_rotation_attack(1.0, 0.5, 2, false).unwrap();
        let attack = spec.build();
        let mut rng = stream(11, &[4]);
        let out = attack.forward(plus_plus(), UserAction::Ctrl, &mut rng);
        assert_eq!(out.num_qubits(), 4);
        assert!((out.norm_sq() - 1.0).abs() < 1e-9);
    }
}
