//! Passive linear-optics transforms on the four field modes.
//!
//! Mode slots are `[A_H, A_V, B_H, B_V]`. A transform maps each creation
//! operator to a linear combination of creation operators,
//! `c_i^dag -> sum_j m[j][i] c_j^dag`, and is applied to Fock kets by
//! expanding the normal-ordered monomial.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};

use super::{Arm, BeamsplitterParams};
use crate::Scalar;

pub const MODES: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ModeTransform<T> {
    /// `m[out][in]`.
    m: [[Complex<T>; MODES]; MODES],
}

impl<T: Scalar> ModeTransform<T> {
    pub fn identity() -> Self {
        let mut m = [[Complex::zero(); MODES]; MODES];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Complex::one();
        }
        ModeTransform { m }
    }

    pub fn from_matrix(m: [[Complex<T>; MODES]; MODES]) -> Self {
        ModeTransform { m }
    }

    /// Second pass through the beamsplitter. Output slots are reused as
    /// `[D1_H, D1_V, D2_H, D2_V]`:
    /// `a^dag -> i sqrt(R) d1^dag + sqrt(T) d2^dag`,
    /// `b^dag -> sqrt(T) d1^dag + i sqrt(R) d2^dag`, per polarization.
    pub fn recombiner(bs: &BeamsplitterParams<T>) -> Self {
        let t = Complex::new(bs.transmittance().sqrt(), T::zero());
        let ir = Complex::new(T::zero(), bs.reflectance().sqrt());
        let mut m = [[Complex::zero(); MODES]; MODES];
        for p in 0..2 {
            let (a, b, d1, d2) = (p, 2 + p, p, 2 + p);
            m[d1][a] = ir;
            m[d2][a] = t;
            m[d1][b] = t;
            m[d2][b] = ir;
        }
        ModeTransform { m }
    }

    /// Polarization frame change on one arm; `u[out][in]` acts on `(H, V)`.
    pub fn arm_frame(arm: Arm, u: [[Complex<T>; 2]; 2]) -> Self {
        let mut t = Self::identity();
        let [h, v] = arm.modes();
        let idx = [h, v];
        for o in 0..2 {
            for i in 0..2 {
                t.m[idx[o]][idx[i]] = u[o][i];
            }
        }
        t
    }

    pub fn entry(&self, out: usize, inp: usize) -> Complex<T> {
        self.m[out][inp]
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        (0..MODES).all(|i| {
            (0..MODES).all(|j| {
                let ip = (0..MODES).fold(Complex::<T>::zero(), |acc, k| acc + self.m[k][i].conj() * self.m[k][j]);
                let expected = if i == j { Complex::one() } else { Complex::zero() };
                (ip - expected).norm() <= tol
            })
        })
    }

    /// Image of the normalized Fock ket `occ` as a list of `(occupation, amplitude)`.
    pub fn expand(&self, occ: [u8; MODES]) -> Vec<([u8; MODES], Complex<T>)> {
        let mut poly: BTreeMap<[u8; MODES], Complex<T>> = BTreeMap::new();
        poly.insert([0; MODES], Complex::one());
        for (i, &n) in occ.iter().enumerate() {
            for _ in 0..n {
                let mut next = BTreeMap::new();
                for (mono, c) in &poly {
                    for j in 0..MODES {
                        let w = self.m[j][i];
                        if w.is_zero() {
                            continue;
                        }
                        let mut k = *mono;
                        k[j] += 1;
                        let e = next.entry(k).or_insert_with(Complex::zero);
                        *e = *e + c * w;
                    }
                }
                poly = next;
            }
        }
        let in_norm = occ.iter().fold(T::one(), |acc, &n| acc * factorial::<T>(n)).sqrt();
        poly.into_iter()
            .map(|(mono, c)| {
                let out_norm = mono.iter().fold(T::one(), |acc, &n| acc * factorial::<T>(n)).sqrt();
                (mono, c * (out_norm / in_norm))
            })
            .collect()
    }
}

fn factorial<T: Scalar>(n: u8) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::lit(k as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_splitter_bunches_two_photons() {
        // Hong-Ou-Mandel: one photon in each input port never exits one per port.
        let bs = BeamsplitterParams::<f64>::balanced();
        let t = ModeTransform::recombiner(&bs);
        let out = t.expand([1, 0, 1, 0]);
        let coincidence: f64 = out
            .iter()
            .filter(|(o, _)| *o == [1, 0, 1, 0])
            .map(|(_, c)| c.norm_sqr())
            .sum();
        assert!(coincidence < 1e-15);
        let total: f64 = out.iter().map(|(_, c)| c.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn recombiner_is_unitary_for_any_transmittance() {
        for t in [0.0, 0.25, 0.36, 0.5, 0.7, 1.0] {
            let bs = BeamsplitterParams::<f64>::from_transmittance(t).unwrap();
            assert!(ModeTransform::recombiner(&bs).is_unitary(1e-14));
        }
    }
}
