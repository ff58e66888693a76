use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use super::{Amplitude, BasisKind, UnitaryMatrix, NORM_TOL};
use crate::error::{Error, Result};

/// A classical bit (value 0 or 1).
pub type Bit = u8;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Probability below which a measurement branch is treated as impossible.
const BRANCH_EPS: f64 = 1e-12;

/// A normalized pure state of `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Amplitude>,
}

/// Single-qubit ket for one of the four protocol labels `0`, `1`, `+`, `-`.
pub fn ket(label: &str) -> Result<StateVector> {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let amps = match label {
        "0" => vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        "1" => vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        "+" => vec![h, h],
        "-" => vec![h, -h],
        other => return Err(Error::UnknownKetLabel(other.to_string())),
    };
    Ok(StateVector {
        num_qubits: 1,
        amps,
    })
}

impl StateVector {
    /// Builds a state from raw amplitudes, validating finiteness and
    /// normalization.
    pub fn from_amplitudes(num_qubits: usize, amps: Vec<Amplitude>) -> Result<Self> {
        if num_qubits == 0 || amps.len() != 1 << num_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << num_qubits,
                actual: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFiniteAmplitude);
        }
        let state = StateVector { num_qubits, amps };
        let n2 = state.norm_sq();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq: n2 });
        }
        Ok(state)
    }

    /// The computational basis state with the given amplitude index.
    pub fn computational(num_qubits: usize, index: usize) -> Self {
        assert!(num_qubits >= 1 && index < (1 << num_qubits));
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Bit mask selecting `qubit` inside an amplitude index (qubit 0 is
    /// the most significant bit).
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Kronecker product with `self`'s qubits first (most significant).
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let db = other.amps.len();
        let mut amps = Vec::with_capacity(self.amps.len() * db);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector {
            num_qubits: self.num_qubits + other.num_qubits,
            amps,
        }
    }

    /// In-place Hadamard on one qubit. Used to reduce X-basis handling to
    /// the computational basis.
    fn hadamard(&mut self, qubit: usize) {
        let mask = self.mask(qubit);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | mask];
                self.amps[i] = (a0 + a1) * FRAC_1_SQRT_2;
                self.amps[i | mask] = (a0 - a1) * FRAC_1_SQRT_2;
            }
        }
    }

    /// Exact Born probabilities `[P(bit = 0), P(bit = 1)]` for measuring
    /// `qubit` in `basis`.
    pub fn branch_probabilities(&self, qubit: usize, basis: BasisKind) -> Result<[f64; 2]> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        let mut p = [0.0_f64; 2];
        match basis {
            BasisKind::Z => {
                for (i, a) in self.amps.iter().enumerate() {
                    p[usize::from(i & mask != 0)] += a.norm_sqr();
                }
            }
            BasisKind::X => {
                for i in 0..self.amps.len() {
                    if i & mask == 0 {
                        let a0 = self.amps[i];
                        let a1 = self.amps[i | mask];
                        p[0] += ((a0 + a1) * FRAC_1_SQRT_2).norm_sqr();
                        p[1] += ((a0 - a1) * FRAC_1_SQRT_2).norm_sqr();
                    }
                }
            }
        }
        Ok(p)
    }

    /// Projects `qubit` onto the `outcome` eigenstate of `basis` and
    /// renormalizes. Returns the branch probability with the post state.
    ///
    /// Selecting a (numerically) zero-probability branch is an internal
    /// error; the inverse-CDF sampler in [`StateVector::measure`] can
    /// never do so.
    pub fn project(&self, qubit: usize, basis: BasisKind, outcome: Bit) -> Result<(f64, Self)> {
        self.check_qubit(qubit)?;
        let mut work = self.clone();
        if basis == BasisKind::X {
            work.hadamard(qubit);
        }
        let mask = work.mask(qubit);
        let keep_set = outcome == 1;
        let mut prob = 0.0;
        for (i, a) in work.amps.iter_mut().enumerate() {
            if (i & mask != 0) == keep_set {
                prob += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        if prob < BRANCH_EPS {
            return Err(Error::Internal(format!(
                "zero-probability measurement branch selected (qubit {qubit}, outcome {outcome})"
            )));
        }
        let scale = 1.0 / prob.sqrt();
        for a in work.amps.iter_mut() {
            *a *= scale;
        }
        if basis == BasisKind::X {
            work.hadamard(qubit);
        }
        Ok((prob, work))
    }

    /// Projective measurement of one qubit. The bit is sampled by inverse
    /// CDF over [`StateVector::branch_probabilities`]; the returned state
    /// is the renormalized post-measurement state.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        basis: BasisKind,
        rng: &mut R,
    ) -> Result<(Bit, Self)> {
        let p = self.branch_probabilities(qubit, basis)?;
        let u: f64 = rng.random();
        let bit: Bit = if u < p[0] { 0 } else { 1 };
        let (_, post) = self.project(qubit, basis, bit)?;
        Ok((bit, post))
    }

    /// Exact joint outcome distribution for measuring `qubits[i]` in
    /// `bases[i]`. Keys are outcome tuples in the order of `qubits`.
    pub fn outcome_distribution(
        &self,
        qubits: &[usize],
        bases: &[BasisKind],
    ) -> Result<BTreeMap<Vec<Bit>, f64>> {
        if qubits.len() != bases.len() {
            return Err(Error::InvalidArgument(format!(
                "{} qubits but {} bases",
                qubits.len(),
                bases.len()
            )));
        }
        for (pos, &q) in qubits.iter().enumerate() {
            self.check_qubit(q)?;
            if qubits[..pos].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        let mut work = self.clone();
        for (&q, &b) in qubits.iter().zip(bases) {
            if b == BasisKind::X {
                work.hadamard(q);
            }
        }
        let masks: Vec<usize> = qubits.iter().map(|&q| work.mask(q)).collect();
        let mut dist: BTreeMap<Vec<Bit>, f64> = BTreeMap::new();
        for (i, a) in work.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let key: Vec<Bit> = masks.iter().map(|&m| Bit::from(i & m != 0)).collect();
            *dist.entry(key).or_insert(0.0) += p;
        }
        Ok(dist)
    }

    /// Applies a unitary to the listed target qubits. `targets[0]` is the
    /// most significant qubit of the unitary's own index space.
    pub fn apply_unitary(&self, u: &UnitaryMatrix, targets: &[usize]) -> Result<StateVector> {
        let k = targets.len();
        if u.dim() != 1 << k {
            return Err(Error::DimensionMismatch {
                expected: 1 << k,
                actual: u.dim(),
            });
        }
        for (pos, &q) in targets.iter().enumerate() {
            self.check_qubit(q)?;
            if targets[..pos].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        let masks: Vec<usize> = targets.iter().map(|&q| self.mask(q)).collect();
        let all_mask: usize = masks.iter().sum();
        let block = 1usize << k;
        let mut out = self.amps.clone();
        let mut gathered = vec![Complex64::new(0.0, 0.0); block];
        for base in 0..self.amps.len() {
            if base & all_mask != 0 {
                continue;
            }
            for (p, g) in gathered.iter_mut().enumerate() {
                *g = self.amps[base | spread(p, &masks)];
            }
            for r in 0..block {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, g) in gathered.iter().enumerate() {
                    acc += u.entry(r, c) * g;
                }
                out[base | spread(r, &masks)] = acc;
            }
        }
        let result = StateVector {
            num_qubits: self.num_qubits,
            amps: out,
        };
        debug_assert!((result.norm_sq() - 1.0).abs() < NORM_TOL);
        Ok(result)
    }
}

/// Scatters the bits of a local pattern onto the global index positions
/// given by `masks` (bit j of `pattern` drives `masks[j]`, counting from
/// the most significant local bit).
fn spread(pattern: usize, masks: &[usize]) -> usize {
    let k = masks.len();
    let mut idx = 0;
    for (j, &m) in masks.iter().enumerate() {
        if pattern >> (k - 1 - j) & 1 != 0 {
            idx |= m;
        }
    }
    idx
}

/// All possible outcomes of one projective measurement, with exact branch
/// probabilities and renormalized post states. Branches with (numerically)
/// zero probability are omitted.
pub fn measurement_branches(
    state: &StateVector,
    qubit: usize,
    basis: BasisKind,
) -> Result<Vec<(f64, Bit, StateVector)>> {
    let probs = state.branch_probabilities(qubit, basis)?;
    let mut out = Vec::with_capacity(2);
    for bit in 0..2u8 {
        let p = probs[bit as usize];
        if p >= BRANCH_EPS {
            let (_, post) = state.project(qubit, basis, bit)?;
            out.push((p, bit, post));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn amp_approx(a: Amplitude, b: Amplitude, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn assert_state(state: &StateVector, expected: &[(f64, f64)]) {
        assert_eq!(state.dim(), expected.len());
        for (a, &(re, im)) in state.amplitudes().iter().zip(expected) {
            assert!(
                amp_approx(*a, Complex64::new(re, im), 1e-12),
                "state {:?} != {:?}",
                state.amplitudes(),
                expected
            );
        }
    }

    #[test]
    fn ket_labels() {
        let h = FRAC_1_SQRT_2;
        assert_state(&ket("0").unwrap(), &[(1.0, 0.0), (0.0, 0.0)]);
        assert_state(&ket("1").unwrap(), &[(0.0, 0.0), (1.0, 0.0)]);
        assert_state(&ket("+").unwrap(), &[(h, 0.0), (h, 0.0)]);
        assert_state(&ket("-").unwrap(), &[(h, 0.0), (-h, 0.0)]);
        assert!(matches!(ket("2"), Err(Error::UnknownKetLabel(_))));
    }

    #[test]
    fn tensor_products() {
        let plus = ket("+").unwrap();
        let zero = ket("0").unwrap();
        let one = ket("1").unwrap();

        let pp = plus.tensor(&plus);
        assert_state(
            &pp,
            &[(0.5, 0.0), (0.5, 0.0), (0.5, 0.0), (0.5, 0.0)],
        );

        let zo = zero.tensor(&one);
        assert_state(&zo, &[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);

        // Hand Kronecker product oracle: (a0, a1) x (b0, b1).
        let a = plus.amplitudes();
        let b = zero.amplitudes();
        let mut kron = Vec::new();
        for &x in a {
            for &y in b {
                kron.push(x * y);
            }
        }
        let pz = plus.tensor(&zero);
        for (got, want) in pz.amplitudes().iter().zip(&kron) {
            assert!(amp_approx(*got, *want, 1e-15));
        }
        assert_state(
            &pz,
            &[(FRAC_1_SQRT_2, 0.0), (0.0, 0.0), (FRAC_1_SQRT_2, 0.0), (0.0, 0.0)],
        );
    }

    #[test]
    fn measure_z_eigenstate_is_deterministic() {
        let mut rng = stream(1, &[100]);
        for _ in 0..32 {
            let (bit, post) = ket("0").unwrap().measure(0, BasisKind::Z, &mut rng).unwrap();
            assert_eq!(bit, 0);
            assert_state(&post, &[(1.0, 0.0), (0.0, 0.0)]);
        }
    }

    #[test]
    fn measure_plus_in_z_is_unbiased() {
        let mut rng = stream(2, &[101]);
        let plus = ket("+").unwrap();
        let n = 20_000;
        let ones: u32 = (0..n)
            .map(|_| u32::from(plus.measure(0, BasisKind::Z, &mut rng).unwrap().0))
            .sum();
        // 4 sigma band around n/2 for a fair coin.
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((f64::from(ones) - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn measure_x_on_plus_zero_is_deterministic() {
        // Independent oracle: project |+0> onto |+><+| (x) I by hand and
        // check the branch has norm 1.
        let state = ket("+").unwrap().tensor(&ket("0").unwrap());
        let a = state.amplitudes();
        let mut norm = 0.0;
        for pair in 0..2 {
            // <+| acting on qubit 0: (a[0b00+pair] + a[0b10+pair])/sqrt(2)
            let amp = (a[pair] + a[2 + pair]) * FRAC_1_SQRT_2;
            norm += amp.norm_sqr();
        }
        assert!(approx(norm, 1.0, 1e-12));

        let mut rng = stream(3, &[102]);
        let (bit, post) = state.measure(0, BasisKind::X, &mut rng).unwrap();
        assert_eq!(bit, 0);
        for (x, y) in post.amplitudes().iter().zip(state.amplitudes()) {
            assert!(amp_approx(*x, *y, 1e-12));
        }
    }

    #[test]
    fn measurement_idempotence() {
        // Measuring the post state again in the same basis returns the
        // same bit with probability 1 (checked exactly, both bases).
        let mut rng = stream(4, &[103]);
        let bell = {
            let mut amps = vec![Complex64::new(0.0, 0.0); 4];
            amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            amps[3] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            StateVector::from_amplitudes(2, amps).unwrap()
        };
        for basis in [BasisKind::Z, BasisKind::X] {
            for qubit in 0..2 {
                let (bit, post) = bell.measure(qubit, basis, &mut rng).unwrap();
                let p = post.branch_probabilities(qubit, basis).unwrap();
                assert!(approx(p[bit as usize], 1.0, 1e-9));
            }
        }
    }

    #[test]
    fn outcome_distribution_plus_plus_x() {
        let pp = ket("+").unwrap().tensor(&ket("+").unwrap());
        let dist = pp
            .outcome_distribution(&[0, 1], &[BasisKind::X, BasisKind::X])
            .unwrap();
        assert_eq!(dist.len(), 1);
        assert!(approx(dist[&vec![0, 0]], 1.0, 1e-12));
    }

    #[test]
    fn outcome_distribution_zero_one_x_is_uniform() {
        let zo = ket("0").unwrap().tensor(&ket("1").unwrap());
        let dist = zo
            .outcome_distribution(&[0, 1], &[BasisKind::X, BasisKind::X])
            .unwrap();
        assert_eq!(dist.len(), 4);
        for p in dist.values() {
            assert!(approx(*p, 0.25, 1e-12));
        }
        let total: f64 = dist.values().sum();
        assert!(approx(total, 1.0, 1e-12));
    }

    #[test]
    fn outcome_distribution_mixed_bases() {
        // |+0>, qubit 0 in Z and qubit 1 in X. Expanding by hand:
        // |+> = (|0> + |1>)/sqrt(2) gives unbiased Z outcomes, and
        // |0> = (|+> + |->)/sqrt(2) gives unbiased X outcomes, so the
        // joint distribution is uniform over all four tuples.
        let pz = ket("+").unwrap().tensor(&ket("0").unwrap());
        let dist = pz
            .outcome_distribution(&[0, 1], &[BasisKind::Z, BasisKind::X])
            .unwrap();
        assert_eq!(dist.len(), 4);
        for p in dist.values() {
            assert!(approx(*p, 0.25, 1e-12));
        }

        // |+0> with qubit 0 in X and qubit 1 in Z is the deterministic
        // companion: both particles are eigenstates of their basis.
        let dist = pz
            .outcome_distribution(&[0, 1], &[BasisKind::X, BasisKind::Z])
            .unwrap();
        assert_eq!(dist.len(), 1);
        assert!(approx(dist[&vec![0, 0]], 1.0, 1e-12));
    }

    #[test]
    fn apply_unitary_identity_and_flip() {
        let id = UnitaryMatrix::identity(2);
        let plus = ket("+").unwrap();
        let same = plus.apply_unitary(&id, &[0]).unwrap();
        assert_state(&same, &[(FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, 0.0)]);

        let x = UnitaryMatrix::pauli_x();
        let one = ket("0").unwrap().apply_unitary(&x, &[0]).unwrap();
        assert_state(&one, &[(0.0, 0.0), (1.0, 0.0)]);
    }

    #[test]
    fn apply_unitary_cnot_makes_bell_pair() {
        // Independent oracle: explicit 4x4 matrix-vector product.
        let cnot = UnitaryMatrix::from_entries(
            4,
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
            ]
            .iter()
            .flatten()
            .map(|&x| Complex64::new(x, 0.0))
            .collect(),
        )
        .unwrap();
        let input = ket("+").unwrap().tensor(&ket("0").unwrap());
        let mut expected = vec![Complex64::new(0.0, 0.0); 4];
        for r in 0..4 {
            for c in 0..4 {
                expected[r] += cnot.entry(r, c) * input.amplitudes()[c];
            }
        }
        let bell = input.apply_unitary(&cnot, &[0, 1]).unwrap();
        for (got, want) in bell.amplitudes().iter().zip(&expected) {
            assert!(amp_approx(*got, *want, 1e-15));
        }
        assert_state(
            &bell,
            &[(FRAC_1_SQRT_2, 0.0), (0.0, 0.0), (0.0, 0.0), (FRAC_1_SQRT_2, 0.0)],
        );
    }

    #[test]
    fn apply_unitary_on_sub_register() {
        // CNOT with control qubit 0 (B) and target qubit 2 (probe) inside
        // a 3-qubit register: |+>|0>|0> -> (|000> + |101>)/sqrt(2).
        let cnot = UnitaryMatrix::from_entries(
            4,
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
            ]
            .iter()
            .flatten()
            .map(|&x| Complex64::new(x, 0.0))
            .collect(),
        )
        .unwrap();
        let input = ket("+")
            .unwrap()
            .tensor(&ket("0").unwrap())
            .tensor(&ket("0").unwrap());
        let out = input.apply_unitary(&cnot, &[0, 2]).unwrap();
        let mut expected = vec![(0.0, 0.0); 8];
        expected[0b000] = (FRAC_1_SQRT_2, 0.0);
        expected[0b101] = (FRAC_1_SQRT_2, 0.0);
        assert_state(&out, &expected);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let id4 = UnitaryMatrix::identity(4);
        let plus = ket("+").unwrap();
        assert!(matches!(
            plus.apply_unitary(&id4, &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn born_consistency_against_exact_distribution() {
        // Empirical frequencies from `measure` match `outcome_distribution`
        // within 4 binomial standard deviations.
        let state = ket("+").unwrap().tensor(&ket("0").unwrap());
        let qubits = [0usize, 1usize];
        let bases = [BasisKind::Z, BasisKind::X];
        let exact = state.outcome_distribution(&qubits, &bases).unwrap();

        let n = 100_000u32;
        let mut counts: BTreeMap<Vec<Bit>, u32> = BTreeMap::new();
        let mut rng = stream(5, &[104]);
        for _ in 0..n {
            let mut s = state.clone();
            let mut key = Vec::with_capacity(2);
            for (&q, &b) in qubits.iter().zip(&bases) {
                let (bit, post) = s.measure(q, b, &mut rng).unwrap();
                key.push(bit);
                s = post;
            }
            *counts.entry(key).or_insert(0) += 1;
        }
        for (key, &p) in &exact {
            let freq = f64::from(*counts.get(key).unwrap_or(&0)) / f64::from(n);
            let sigma = (p * (1.0 - p) / f64::from(n)).sqrt();
            assert!(
                (freq - p).abs() <= 4.0 * sigma.max(1e-12),
                "outcome {key:?}: freq {freq} vs exact {p}"
            );
        }
        let observed: u32 = counts.values().sum();
        assert_eq!(observed, n);
    }

    #[test]
    fn measurement_branches_cover_the_distribution() {
        let state = ket("+").unwrap().tensor(&ket("-").unwrap());
        let branches = measurement_branches(&state, 1, BasisKind::Z).unwrap();
        let total: f64 = branches.iter().map(|(p, _, _)| p).sum();
        assert!(approx(total, 1.0, 1e-12));
        for (_, _, post) in &branches {
            assert!(approx(post.norm_sq(), 1.0, 1e-12));
        }
    }
}
