use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Zero;

use super::{Arm, BasisKet, SystemState, MAX_PHOTONS, MODES};
use crate::{QkdError, Result, Scalar};

/// Dense operator on (one arm's occupation sectors) x (probe).
///
/// Local basis index is `sector * probe_dim + probe`. Kets whose arm
/// occupation is not among `sectors` are left untouched.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmProbeOperator<T> {
    arm: Arm,
    probe_dim: usize,
    sectors: Vec<[u8; 2]>,
    /// Row-major, `dim x dim`.
    m: Vec<Complex<T>>,
}

impl<T: Scalar> ArmProbeOperator<T> {
    /// Operator `sum_k |outputs_k><inputs_k|` over the local basis.
    pub fn from_basis_map(
        arm: Arm,
        probe_dim: usize,
        sectors: Vec<[u8; 2]>,
        inputs: &[Vec<Complex<T>>],
        outputs: &[Vec<Complex<T>>],
    ) -> Result<Self> {
        let dim = sectors.len() * probe_dim;
        if inputs.len() != dim || outputs.len() != dim {
            return Err(QkdError::param("basis map must cover the whole local space"));
        }
        let mut m = vec![Complex::zero(); dim * dim];
        for (inp, out) in inputs.iter().zip(outputs) {
            for r in 0..dim {
                if out[r].is_zero() {
                    continue;
                }
                for c in 0..dim {
                    m[r * dim + c] = m[r * dim + c] + out[r] * inp[c].conj();
                }
            }
        }
        Ok(ArmProbeOperator { arm, probe_dim, sectors, m })
    }

    pub fn dim(&self) -> usize {
        self.sectors.len() * self.probe_dim
    }

    pub fn sectors(&self) -> &[[u8; 2]] {
        &self.sectors
    }

    pub fn index(&self, sector: [u8; 2], probe: usize) -> Option<usize> {
        self.sectors.iter().position(|s| *s == sector).map(|i| i * self.probe_dim + probe)
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim();
        let mut m = vec![Complex::zero(); d * d];
        for r in 0..d {
            for c in 0..d {
                m[c * d + r] = self.m[r * d + c].conj();
            }
        }
        ArmProbeOperator { arm: self.arm, probe_dim: self.probe_dim, sectors: self.sectors.clone(), m }
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            (0..d).all(|j| {
                let ip = (0..d).fold(Complex::<T>::zero(), |acc, k| acc + self.m[k * d + i].conj() * self.m[k * d + j]);
                let expected = if i == j { T::one() } else { T::zero() };
                (ip - Complex::new(expected, T::zero())).norm() <= tol
            })
        })
    }

    pub fn apply(&self, state: &SystemState<T>) -> Result<SystemState<T>> {
        if state.probe_dim() != self.probe_dim {
            return Err(QkdError::DimensionMismatch { left: self.probe_dim, right: state.probe_dim() });
        }
        let d = self.dim();
        let mut groups: BTreeMap<[u8; MODES], Vec<Complex<T>>> = BTreeMap::new();
        let mut out = SystemState::empty(self.probe_dim);
        for (ket, a) in state.terms() {
            match self.index(ket.arm(self.arm), ket.probe) {
                Some(i) => {
                    let rest = ket.with_arm(self.arm, [0, 0]).occ;
                    groups.entry(rest).or_insert_with(|| vec![Complex::zero(); d])[i] = *a;
                }
                None => out.accumulate(*ket, *a),
            }
        }
        let eps = T::lit(super::PRUNE_EPS);
        for (rest, v) in groups {
            for r in 0..d {
                let amp = (0..d).fold(Complex::zero(), |acc, c| acc + self.m[r * d + c] * v[c]);
                if amp.norm() < eps {
                    continue;
                }
                let sector = self.sectors[r / self.probe_dim];
                let ket = BasisKet { occ: rest, probe: r % self.probe_dim }.with_arm(self.arm, sector);
                if ket.photons() > MAX_PHOTONS {
                    return Err(QkdError::TruncationExceeded { max: MAX_PHOTONS });
                }
                out.accumulate(ket, amp);
            }
        }
        out.prune();
        Ok(out)
    }
}
