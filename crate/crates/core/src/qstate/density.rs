use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Amplitude, StateVector, NORM_TOL, PSD_TOL};
use crate::error::{Error, Result};

/// A density matrix, stored row-major. The checked constructor enforces
/// hermiticity and unit trace within [`NORM_TOL`] and positive
/// semidefiniteness within [`PSD_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<Amplitude>,
}

impl DensityMatrix {
    pub fn from_entries(dim: usize, entries: Vec<Amplitude>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        if entries.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFiniteAmplitude);
        }
        let rho = DensityMatrix { dim, entries };
        for r in 0..dim {
            for c in 0..=r {
                let dev = (rho.entry(r, c) - rho.entry(c, r).conj()).norm();
                if dev > NORM_TOL {
                    return Err(Error::InvalidDensityMatrix(format!(
                        "not Hermitian at ({r},{c}): deviation {dev:.3e}"
                    )));
                }
            }
        }
        let trace: f64 = (0..dim).map(|i| rho.entry(i, i).re).sum();
        if (trace - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace} != 1")));
        }
        let min_eig = hermitian_eigenvalues(dim, &rho.entries)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(rho)
    }

    /// `|psi><psi|` for a pure state.
    pub fn from_pure(state: &StateVector) -> Self {
        let dim = state.dim();
        let amps = state.amplitudes();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push(amps[r] * amps[c].conj());
            }
        }
        DensityMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Amplitude] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i).re).sum()
    }

    /// Diagonal in the computational basis (the outcome probabilities of
    /// measuring every kept qubit in Z).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.entry(i, i).re).collect()
    }
}

/// Partial trace of a pure state down to the `keep` qubits, in the order
/// given (`keep[0]` becomes the most significant qubit of the result).
pub fn reduced_density(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("keep list is empty".into()));
    }
    let n = state.num_qubits();
    for (pos, &q) in keep.iter().enumerate() {
        if q >= n {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                num_qubits: n,
            });
        }
        if keep[..pos].contains(&q) {
            return Err(Error::DuplicateQubit(q));
        }
    }
    let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let keep_masks: Vec<usize> = keep.iter().map(|&q| 1 << (n - 1 - q)).collect();
    let rest_masks: Vec<usize> = rest.iter().map(|&q| 1 << (n - 1 - q)).collect();
    let dk = 1usize << keep.len();
    let dr = 1usize << rest.len();
    let amps = state.amplitudes();

    let index_of = |local: usize, masks: &[usize]| -> usize {
        let k = masks.len();
        let mut idx = 0;
        for (j, &m) in masks.iter().enumerate() {
            if local >> (k - 1 - j) & 1 != 0 {
                idx |= m;
            }
        }
        idx
    };

    let mut entries = vec![Complex64::new(0.0, 0.0); dk * dk];
    for r in 0..dk {
        let r_idx = index_of(r, &keep_masks);
        for c in 0..dk {
            let c_idx = index_of(c, &keep_masks);
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..dr {
                let e_idx = index_of(e, &rest_masks);
                acc += amps[r_idx | e_idx] * amps[c_idx | e_idx].conj();
            }
            entries[r * dk + c] = acc;
        }
    }
    let rho = DensityMatrix { dim: dk, entries };
    debug_assert!((rho.trace() - 1.0).abs() < NORM_TOL);
    Ok(rho)
}

/// Trace distance `1/2 * sum |eigenvalues(a - b)|`, in `[0, 1]` for valid
/// density matrices.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let dim = a.dim();
    let diff: Vec<Amplitude> = a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| x - y)
        .collect();
    let total: f64 = hermitian_eigenvalues(dim, &diff)
        .into_iter()
        .map(f64::abs)
        .sum();
    Ok(total / 2.0)
}

/// Eigenvalues of a Hermitian matrix given row-major.
fn hermitian_eigenvalues(dim: usize, entries: &[Amplitude]) -> Vec<f64> {
    let m = DMatrix::from_fn(dim, dim, |r, c| entries[r * dim + c]);
    m.symmetric_eigen().eigenvalues.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::ket;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn pure(label: &str) -> DensityMatrix {
        DensityMatrix::from_pure(&ket(label).unwrap())
    }

    #[test]
    fn reduced_density_of_product_state() {
        let state = ket("+").unwrap().tensor(&ket("0").unwrap());
        let rho = reduced_density(&state, &[0]).unwrap();
        let expected = pure("+");
        for r in 0..2 {
            for c in 0..2 {
                assert!((rho.entry(r, c) - expected.entry(r, c)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn reduced_density_of_bell_pair_is_maximally_mixed() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        amps[3] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let bell = StateVector::from_amplitudes(2, amps).unwrap();
        for qubit in 0..2 {
            let rho = reduced_density(&bell, &[qubit]).unwrap();
            assert!(approx(rho.entry(0, 0).re, 0.5, 1e-12));
            assert!(approx(rho.entry(1, 1).re, 0.5, 1e-12));
            assert!(rho.entry(0, 1).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_diagonal_matches_marginals() {
        use crate::qstate::BasisKind;
        // Diagonal of the reduced state in Z equals the Z marginals of the
        // joint outcome distribution.
        let state = ket("+")
            .unwrap()
            .tensor(&ket("-").unwrap())
            .tensor(&ket("0").unwrap());
        let keep = [1usize, 2usize];
        let rho = reduced_density(&state, &keep).unwrap();
        let dist = state
            .outcome_distribution(&[1, 2], &[BasisKind::Z, BasisKind::Z])
            .unwrap();
        for (key, p) in dist {
            let idx = key.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            assert!(approx(rho.entry(idx, idx).re, p, 1e-9));
        }
    }

    #[test]
    fn trace_distance_basics() {
        let z0 = pure("0");
        let z1 = pure("1");
        let plus = pure("+");
        assert!(approx(trace_distance(&z0, &z0).unwrap(), 0.0, 1e-12));
        assert!(approx(trace_distance(&z0, &z1).unwrap(), 1.0, 1e-12));
        // Hand oracle: diff = |0><0| - |+><+| has eigenvalues solving
        // det([[1/2 - l, -1/2], [-1/2, -1/2 - l]]) = 0 -> l = +-1/sqrt(2);
        // trace distance = 1/sqrt(2).
        assert!(approx(
            trace_distance(&z0, &plus).unwrap(),
            FRAC_1_SQRT_2,
            1e-12
        ));
        // Symmetry.
        assert!(approx(
            trace_distance(&plus, &z0).unwrap(),
            trace_distance(&z0, &plus).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn from_entries_validates() {
        // Not Hermitian.
        let bad = vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.5, 0.0),
        ];
        assert!(DensityMatrix::from_entries(2, bad).is_err());
        // Trace 2.
        let bad = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert!(DensityMatrix::from_entries(2, bad).is_err());
        // Hermitian, trace 1, but indefinite.
        let bad = vec![
            Complex64::new(1.5, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-0.5, 0.0),
        ];
        assert!(DensityMatrix::from_entries(2, bad).is_err());
        // A valid mixed state passes.
        let ok = vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5, 0.0),
        ];
        assert!(DensityMatrix::from_entries(2, ok).is_ok());
    }

    #[test]
    fn trace_distance_dimension_mismatch() {
        let a = pure("0");
        let b = DensityMatrix::from_pure(&ket("0").unwrap().tensor(&ket("0").unwrap()));
        assert!(trace_distance(&a, &b).is_err());
    }
}
