//! Small dense complex-vector helpers used by the probe and local-operator code.

use num_complex::Complex;
use num_traits::Zero;

use crate::{QkdError, Result, Scalar};

/// `<a|b>` with the first argument conjugated.
pub fn inner<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sqr<T: Scalar>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr())
}

pub fn unit<T: Scalar>(dim: usize, index: usize) -> Vec<Complex<T>> {
    let mut v = vec![Complex::zero(); dim];
    v[index] = Complex::new(T::one(), T::zero());
    v
}

/// Extends an orthonormal family to an orthonormal basis of the whole space.
///
/// Candidates are the standard basis vectors in index order, orthogonalized
/// with two passes of modified Gram-Schmidt. Fails if `given` is not
/// orthonormal within `tol`.
pub fn complete_basis<T: Scalar>(given: &[Vec<Complex<T>>], dim: usize, tol: T) -> Result<Vec<Vec<Complex<T>>>> {
    for (i, u) in given.iter().enumerate() {
        if u.len() != dim {
            return Err(QkdError::DimensionMismatch { left: u.len(), right: dim });
        }
        for (j, v) in given.iter().enumerate().take(i + 1) {
            let expected = if i == j { T::one() } else { T::zero() };
            let ip = inner(v, u);
            if (ip - Complex::new(expected, T::zero())).norm() > tol {
                return Err(QkdError::param(format!(
                    "vectors {j} and {i} are not orthonormal (inner product {ip})"
                )));
            }
        }
    }
    let mut basis: Vec<Vec<Complex<T>>> = given.to_vec();
    let accept = T::lit(0.5);
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut cand = unit::<T>(dim, k);
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &cand);
                for (x, y) in cand.iter_mut().zip(b) {
                    *x = *x - c * y;
                }
            }
        }
        let n = norm_sqr(&cand).sqrt();
        if n > accept {
            cand.iter_mut().for_each(|x| *x = *x / n);
            basis.push(cand);
        }
    }
    if basis.len() != dim {
        return Err(QkdError::Internal("basis completion fell short".into()));
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_is_orthonormal() {
        let s = 0.5f64.sqrt();
        let given = vec![vec![
            Complex::new(s, 0.0),
            Complex::new(0.0, s),
            Complex::zero(),
        ]];
        let basis = complete_basis(&given, 3, 1e-12).unwrap();
        assert_eq!(basis.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let ip = inner(&basis[i], &basis[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip.re - expected).abs() < 1e-12 && ip.im.abs() < 1e-12);
            }
        }
        assert_eq!(basis[0], given[0]);
    }

    #[test]
    fn rejects_non_orthogonal_family() {
        let given = vec![unit::<f64>(2, 0), unit::<f64>(2, 0)];
        assert!(complete_basis(&given, 2, 1e-12).is_err());
    }
}
