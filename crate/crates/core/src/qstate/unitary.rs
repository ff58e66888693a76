use num_complex::Complex64;

use super::{Amplitude, NORM_TOL};
use crate::error::{Error, Result};

/// A dense unitary on a power-of-two dimension, stored row-major.
/// Unitarity (`U^dagger U = I` within [`NORM_TOL`] per entry) is enforced
/// at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    entries: Vec<Amplitude>,
}

impl UnitaryMatrix {
    pub fn from_entries(dim: usize, entries: Vec<Amplitude>) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        if entries.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFiniteAmplitude);
        }
        let u = UnitaryMatrix { dim, entries };
        let mut deviation = 0.0_f64;
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += u.entry(k, r).conj() * u.entry(k, c);
                }
                let target = if r == c { 1.0 } else { 0.0 };
                deviation = deviation.max((acc - target).norm());
            }
        }
        if deviation > NORM_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim.is_power_of_two());
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        UnitaryMatrix { dim, entries }
    }

    /// The 2x2 bit flip.
    pub fn pauli_x() -> Self {
        let entries = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        UnitaryMatrix { dim: 2, entries }
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

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); self.dim * self.dim];
        for r in 0..self.dim {
            for c in 0..self.dim {
                entries[c * self.dim + r] = self.entry(r, c).conj();
            }
        }
        UnitaryMatrix {
            dim: self.dim,
            entries,
        }
    }

    /// Matrix product `self * rhs` (so `rhs` acts first on a state).
    pub fn compose(&self, rhs: &UnitaryMatrix) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: rhs.dim,
            });
        }
        let d = self.dim;
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.entry(r, k) * rhs.entry(k, c);
                }
                entries[r * d + c] = acc;
            }
        }
        Ok(UnitaryMatrix { dim: d, entries })
    }
}

/// Rotation of `target` by `R_y(theta)` controlled on `control`, as a
/// dense unitary on `num_qubits` qubits (qubit 0 most significant).
pub fn controlled_ry(num_qubits: usize, control: usize, target: usize, theta: f64) -> UnitaryMatrix {
    assert!(control < num_qubits && target < num_qubits && control != target);
    let dim = 1usize << num_qubits;
    let cmask = 1usize << (num_qubits - 1 - control);
    let tmask = 1usize << (num_qubits - 1 - target);
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new((theta / 2.0).sin(), 0.0);
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    // Column b holds U|b>.
    for b in 0..dim {
        if b & cmask == 0 {
            entries[b * dim + b] = Complex64::new(1.0, 0.0);
        } else if b & tmask == 0 {
            // R_y |0> = cos|0> + sin|1>
            entries[b * dim + b] = c;
            entries[(b | tmask) * dim + b] = s;
        } else {
            // R_y |1> = -sin|0> + cos|1>
            entries[(b & !tmask) * dim + b] = -s;
            entries[b * dim + b] = c;
        }
    }
    UnitaryMatrix { dim, entries }
}
