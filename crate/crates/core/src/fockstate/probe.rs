//! Eve's finite-dimensional probe: states and operators.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::linalg;
use crate::{QkdError, Result, Scalar};

/// Pure state of the probe, stored as amplitudes in the probe basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeState<T> {
    amps: Vec<Complex<T>>,
}

impl<T: Scalar> ProbeState<T> {
    /// Basis ket `|index>` of a `dim`-dimensional probe.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "probe index {index} outside dimension {dim}");
        ProbeState { amps: linalg::unit(dim, index) }
    }

    /// Builds a probe state from raw amplitudes, rejecting non-unit vectors.
    pub fn new(amps: Vec<Complex<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(QkdError::param("probe state must have dimension >= 1"));
        }
        let n = linalg::norm_sqr(&amps);
        if (n - T::one()).abs() > crate::tolerance::<T>(1e-12) {
            return Err(QkdError::param(format!("probe state norm^2 is {n}, expected 1")));
        }
        Ok(ProbeState { amps })
    }

    /// Builds from amplitudes and rescales to unit norm. A zero vector stays zero.
    pub fn normalized_from(amps: Vec<Complex<T>>) -> Self {
        let n = linalg::norm_sqr(&amps).sqrt();
        if n > T::zero() {
            ProbeState { amps: amps.into_iter().map(|a| a / n).collect() }
        } else {
            ProbeState { amps }
        }
    }

    /// `cos(angle)|i> + sin(angle)|j>`.
    pub fn planar(dim: usize, i: usize, j: usize, angle: T) -> Self {
        let mut amps = vec![Complex::zero(); dim];
        amps[i] = Complex::new(angle.cos(), T::zero());
        amps[j] = amps[j] + Complex::new(angle.sin(), T::zero());
        ProbeState { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        linalg::inner(&self.amps, &other.amps)
    }

    pub fn norm_sqr(&self) -> T {
        linalg::norm_sqr(&self.amps)
    }

    pub fn distance(&self, other: &Self) -> T {
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(T::zero(), |acc, (a, b)| acc + (a - b).norm_sqr())
            .sqrt()
    }
}

/// Dense operator on the probe space, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeOperator<T> {
    dim: usize,
    m: Vec<Complex<T>>,
}

impl<T: Scalar> ProbeOperator<T> {
    pub fn identity(dim: usize) -> Self {
        let mut m = vec![Complex::zero(); dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Complex::one();
        }
        ProbeOperator { dim, m }
    }

    /// Rotation by `angle` in the plane of basis vectors `i` and `j`:
    /// `|i> -> cos|i> + sin|j>`, `|j> -> -sin|i> + cos|j>`.
    pub fn planar_rotation(dim: usize, i: usize, j: usize, angle: T) -> Self {
        assert!(i < dim && j < dim && i != j, "invalid rotation plane");
        let mut op = Self::identity(dim);
        let (s, c) = angle.sin_cos();
        op.m[i * dim + i] = Complex::new(c, T::zero());
        op.m[j * dim + i] = Complex::new(s, T::zero());
        op.m[i * dim + j] = Complex::new(-s, T::zero());
        op.m[j * dim + j] = Complex::new(c, T::zero());
        op
    }

    /// Row-major construction; `rows` must be square.
    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(QkdError::param("probe operator must be a non-empty square matrix"));
        }
        Ok(ProbeOperator { dim, m: rows.into_iter().flatten().collect() })
    }

    /// Operator `sum_k |outputs_k><inputs_k|`.
    pub fn from_basis_map(inputs: &[Vec<Complex<T>>], outputs: &[Vec<Complex<T>>]) -> Self {
        let dim = inputs.len();
        let mut m = vec![Complex::zero(); dim * dim];
        for (inp, out) in inputs.iter().zip(outputs) {
            for r in 0..dim {
                for c in 0..dim {
                    m[r * dim + c] = m[r * dim + c] + out[r] * inp[c].conj();
                }
            }
        }
        ProbeOperator { dim, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.m[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut m = vec![Complex::zero(); d * d];
        for r in 0..d {
            for c in 0..d {
                m[c * d + r] = self.m[r * d + c].conj();
            }
        }
        ProbeOperator { dim: d, m }
    }

    /// Matrix product `self * rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "probe operator dimension mismatch");
        let d = self.dim;
        let mut m = vec![Complex::zero(); d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.m[r * d + k];
                if a.is_zero() {
                    continue;
                }
                for c in 0..d {
                    m[r * d + c] = m[r * d + c] + a * rhs.m[k * d + c];
                }
            }
        }
        ProbeOperator { dim: d, m }
    }

    pub(crate) fn apply_slice(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let d = self.dim;
        (0..d)
            .map(|r| (0..d).fold(Complex::zero(), |acc, c| acc + self.m[r * d + c] * v[c]))
            .collect()
    }

    pub fn apply(&self, state: &ProbeState<T>) -> ProbeState<T> {
        assert_eq!(self.dim, state.dim(), "probe operator dimension mismatch");
        ProbeState { amps: self.apply_slice(&state.amps) }
    }

    /// `<v|self|v>`.
    pub fn expectation(&self, v: &ProbeState<T>) -> Complex<T> {
        linalg::inner(v.amplitudes(), &self.apply_slice(v.amplitudes()))
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        let prod = self.adjoint().compose(self);
        let id = Self::identity(self.dim);
        prod.m.iter().zip(&id.m).all(|(a, b)| (a - b).norm() <= tol)
    }
}
