//! Closed-form security quantities for the number-preserving attack,
//! estimators over outcome counts, and the tolerable-error threshold.
//!
//! With `c = cos(theta)` the probe overlap:
//!
//! ```text
//! V   = c                      visibility of (F,F) interference
//! e   = (1 - c) / (2 - c)      error rate among D1 rounds
//! I_E = 1 - c                  Eve's information per sifted bit
//! K   = 1 - h(e) - I_E         key rate
//! ```
//!
//! All Bayesian combinations use the fair-coin prior of 1/4 per settings pair.

use serde::Serialize;

use crate::protocol::{Outcome, OutcomeCounts, Settings};
use crate::{tolerance, QkdError, Result, Scalar};

/// Binary entropy in bits. `h(0) = h(1) = 0`.
pub fn binary_entropy<T: Scalar>(e: T) -> Result<T> {
    if !(e >= T::zero() && e <= T::one()) {
        return Err(QkdError::param(format!("binary entropy argument {e} outside [0, 1]")));
    }
    let term = |p: T| if p > T::zero() { -p * p.log2() } else { T::zero() };
    Ok(term(e) + term(T::one() - e))
}

fn check_theta<T: Scalar>(theta: T) -> Result<()> {
    if theta >= T::zero() && theta <= T::FRAC_PI_2() + tolerance::<T>(1e-12) {
        Ok(())
    } else {
        Err(QkdError::param(format!("theta {theta} outside [0, pi/2]")))
    }
}

pub fn analytic_visibility<T: Scalar>(theta: T) -> T {
    theta.cos()
}

pub fn analytic_error<T: Scalar>(theta: T) -> T {
    let c = theta.cos();
    (T::one() - c) / (T::lit(2.0) - c)
}

/// `I_AE = I_BE = 1 - cos(theta)`.
pub fn eve_information<T: Scalar>(theta: T) -> T {
    T::one() - theta.cos()
}

/// Mutual information between Alice and Bob, `1 - h(e)`.
pub fn bob_information<T: Scalar>(e: T) -> Result<T> {
    Ok(T::one() - binary_entropy(e)?)
}

pub fn key_rate<T: Scalar>(e: T, eve_info: T) -> Result<T> {
    Ok(bob_information(e)? - eve_info)
}

/// Root of a function that changes sign on `[lo, hi]`, to within `tol`.
pub fn bisect<T: Scalar>(f: impl Fn(T) -> T, mut lo: T, mut hi: T, tol: T) -> Result<T> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return Err(QkdError::param("bisection interval does not bracket a root"));
    }
    while hi - lo > tol {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) / T::lit(2.0))
}

/// Largest tolerable attack strength and the matching error rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Threshold<T> {
    pub theta: T,
    pub error_rate: T,
}

/// Solves `h(e(theta)) = cos(theta)` on `[0, pi/2]`.
pub fn security_threshold<T: Scalar>() -> Threshold<T> {
    let g = |theta: T| {
        let h = binary_entropy(analytic_error(theta)).expect("analytic error lies in [0, 1/2]");
        h - theta.cos()
    };
    let tol = T::lit(1e-9).max(T::epsilon() * T::lit(8.0));
    let theta = bisect(g, T::zero(), T::FRAC_PI_2(), tol).expect("g(0) = -1 and g(pi/2) = 1");
    Threshold { theta, error_rate: analytic_error(theta) }
}

/// Conditional outcome probabilities `P(outcome | settings)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeTable<T> {
    p: [[T; 6]; 4],
}

impl<T: Scalar> OutcomeTable<T> {
    pub fn zeros() -> Self {
        OutcomeTable { p: [[T::zero(); 6]; 4] }
    }

    pub fn get(&self, settings: Settings, outcome: Outcome) -> T {
        self.p[settings.index()][outcome.index()]
    }

    pub fn set(&mut self, settings: Settings, outcome: Outcome, p: T) {
        self.p[settings.index()][outcome.index()] = p;
    }

    pub fn row_sum(&self, settings: Settings) -> T {
        self.p[settings.index()].iter().fold(T::zero(), |a, b| a + *b)
    }

    /// Largest absolute entry difference.
    pub fn max_deviation(&self, other: &Self) -> T {
        let mut m = T::zero();
        for (r, o) in self.p.iter().zip(&other.p) {
            for (a, b) in r.iter().zip(o) {
                m = m.max((*a - *b).abs());
            }
        }
        m
    }

    /// Visibility from the (F,F) row.
    pub fn visibility(&self) -> Result<T> {
        visibility(self.get(Settings::FF, Outcome::D1), self.get(Settings::FF, Outcome::D2))
    }

    /// Error rate under the uniform settings prior.
    pub fn error_rate(&self) -> Result<T> {
        let quarter = T::lit(0.25);
        error_rate(Settings::ALL.map(|s| quarter * self.get(s, Outcome::D1)))
    }
}

/// The honest interference pattern at transmittance `t`.
pub fn reference_outcome_table<T: Scalar>(t: T) -> OutcomeTable<T> {
    let r = T::one() - t;
    let mut tab = OutcomeTable::zeros();
    let d = t - r;
    tab.set(Settings::FF, Outcome::D1, d * d);
    tab.set(Settings::FF, Outcome::D2, T::lit(4.0) * r * t);
    tab.set(Settings::FA, Outcome::BobAbsorb, t);
    tab.set(Settings::FA, Outcome::D1, r * r);
    tab.set(Settings::FA, Outcome::D2, r * t);
    tab.set(Settings::AF, Outcome::AliceAbsorb, r);
    tab.set(Settings::AF, Outcome::D1, t * t);
    tab.set(Settings::AF, Outcome::D2, r * t);
    tab.set(Settings::AA, Outcome::Null, T::one());
    tab
}

/// Balanced-beamsplitter pattern with the (F,F) row disturbed by the
/// number-preserving attack.
pub fn attacked_outcome_table<T: Scalar>(theta: T) -> OutcomeTable<T> {
    let half = T::lit(0.5);
    let c = theta.cos();
    let mut tab = reference_outcome_table(half);
    tab.set(Settings::FF, Outcome::D1, half * (T::one() - c));
    tab.set(Settings::FF, Outcome::D2, half * (T::one() + c));
    tab
}

/// `(D2 - D1) / (D1 + D2)` over (F,F) rounds.
pub fn visibility<T: Scalar>(d1_ff: T, d2_ff: T) -> Result<T> {
    let total = d1_ff + d2_ff;
    if total <= T::zero() {
        return Err(QkdError::NoData("no (F,F) detections"));
    }
    Ok((d2_ff - d1_ff) / total)
}

/// `(D1 & FF + D1 & AA) / D1`, with D1 weights indexed by settings.
pub fn error_rate<T: Scalar>(d1: [T; 4]) -> Result<T> {
    let total = d1.iter().fold(T::zero(), |a, b| a + *b);
    if total <= T::zero() {
        return Err(QkdError::NoData("no D1 events"));
    }
    Ok((d1[Settings::FF.index()] + d1[Settings::AA.index()]) / total)
}

pub fn visibility_from_counts(counts: &OutcomeCounts) -> Result<f64> {
    visibility(
        counts.get(Settings::FF, Outcome::D1) as f64,
        counts.get(Settings::FF, Outcome::D2) as f64,
    )
}

pub fn error_rate_from_counts(counts: &OutcomeCounts) -> Result<f64> {
    error_rate(Settings::ALL.map(|s| counts.get(s, Outcome::D1) as f64))
}

/// All security quantities at one attack strength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecurityPoint<T> {
    pub theta: T,
    pub visibility: T,
    pub error_rate: T,
    pub eve_info: T,
    pub bob_info: T,
    pub key_rate: T,
}

impl<T: Scalar> SecurityPoint<T> {
    pub fn at(theta: T) -> Result<Self> {
        check_theta(theta)?;
        let error_rate = analytic_error(theta);
        let eve_info = eve_information(theta);
        let bob_info = bob_information(error_rate)?;
        Ok(SecurityPoint {
            theta,
            visibility: analytic_visibility(theta),
            error_rate,
            eve_info,
            bob_info,
            key_rate: bob_info - eve_info,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecurityCurve<T> {
    pub points: Vec<SecurityPoint<T>>,
}

impl<T: Scalar> SecurityCurve<T> {
    /// Grid intervals `(theta_i, theta_{i+1})` over which the key rate
    /// goes from positive to non-positive.
    pub fn key_rate_crossings(&self) -> Vec<(T, T)> {
        self.points
            .windows(2)
            .filter(|w| w[0].key_rate > T::zero() && w[1].key_rate <= T::zero())
            .map(|w| (w[0].theta, w[1].theta))
            .collect()
    }
}

/// Evaluates a [`SecurityPoint`] per grid value. The grid must lie in
/// `[0, pi/2]` and increase strictly.
pub fn sweep<T: Scalar>(grid: &[T]) -> Result<SecurityCurve<T>> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(QkdError::param("theta grid must be strictly increasing"));
    }
    let points = grid.iter().map(|t| SecurityPoint::at(*t)).collect::<Result<Vec<_>>>()?;
    Ok(SecurityCurve { points })
}

/// `steps` evenly spaced values from `start` to `end` inclusive.
pub fn theta_grid<T: Scalar>(start: T, end: T, steps: usize) -> Result<Vec<T>> {
    match steps {
        0 => Err(QkdError::param("sweep needs at least one step")),
        1 => Ok(vec![start]),
        _ => {
            let n = T::lit((steps - 1) as f64);
            Ok((0..steps)
                .map(|i| if i + 1 == steps { end } else { start + (end - start) * T::lit(i as f64) / n })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(close(binary_entropy(0.5).unwrap(), 1.0, 1e-15));
        // mpmath, 30 digits
        assert!(close(binary_entropy(0.209).unwrap(), 0.739566_9, 1e-7));
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn analytic_values() {
        assert_eq!(analytic_visibility(0.0), 1.0);
        assert!(close(analytic_visibility(FRAC_PI_2), 0.0, 1e-15));
        assert!(close(analytic_visibility(FRAC_PI_3), 0.5, 1e-15));
        assert_eq!(analytic_error(0.0), 0.0);
        assert!(close(analytic_error(FRAC_PI_2), 0.5, 1e-15));
        assert!(close(analytic_error(0.745), 0.209_431_2, 1e-7));
        assert!(close(analytic_error(0.745), 0.209, 1e-3));
        assert!(close(analytic_error(0.9), 0.274_515_9, 1e-7));
        assert_eq!(eve_information(0.0), 0.0);
        assert!(close(eve_information(FRAC_PI_2), 1.0, 1e-15));
        assert!(close(eve_information(FRAC_PI_3), 0.5, 1e-15));
    }

    #[test]
    fn key_rate_values() {
        assert_eq!(key_rate(0.0, 0.0).unwrap(), 1.0);
        assert!(close(key_rate(0.5, 1.0).unwrap(), -1.0, 1e-15));
    }

    #[test]
    fn threshold_matches_oracle() {
        let th = security_threshold::<f64>();
        // mpmath root of h((1-c)/(2-c)) - c
        assert!(close(th.theta, 0.741_442_3, 1e-7));
        assert!(close(th.error_rate, 0.207_923_8, 1e-7));
        assert!(close(th.theta, 0.745, 0.005));
        assert!(close(th.error_rate, 0.209, 0.002));
        let k = |t: f64| key_rate(analytic_error(t), eve_information(t)).unwrap();
        assert!(k(th.theta).abs() < 1e-6);
        assert!(k(th.theta - 0.01) > 0.0);
        assert!(k(th.theta + 0.01) < 0.0);
    }

    #[test]
    fn threshold_in_f32() {
        let th = security_threshold::<f32>();
        assert!((th.theta - 0.741_442_3).abs() < 1e-4);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        assert!(bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-9).is_err());
        assert!(close(bisect(|x: f64| x - 0.3, 0.0, 1.0, 1e-12).unwrap(), 0.3, 1e-11));
    }

    #[test]
    fn estimator_examples() {
        let mut c = OutcomeCounts::new();
        c.add(Settings::FF, Outcome::D2, 1000);
        assert_eq!(visibility_from_counts(&c).unwrap(), 1.0);
        c.add(Settings::FF, Outcome::D1, 1000);
        assert_eq!(visibility_from_counts(&c).unwrap(), 0.0);
        let mut c = OutcomeCounts::new();
        c.add(Settings::FF, Outcome::D2, 750);
        c.add(Settings::FF, Outcome::D1, 250);
        assert_eq!(visibility_from_counts(&c).unwrap(), 0.5);
        assert!(matches!(visibility_from_counts(&OutcomeCounts::new()), Err(QkdError::NoData(_))));

        let mut c = OutcomeCounts::new();
        c.add(Settings::FF, Outcome::D1, 50);
        c.add(Settings::FA, Outcome::D1, 100);
        c.add(Settings::AF, Outcome::D1, 100);
        assert!(close(error_rate_from_counts(&c).unwrap(), 0.2, 1e-15));
        let mut c = OutcomeCounts::new();
        c.add(Settings::FF, Outcome::D1, 7);
        assert_eq!(error_rate_from_counts(&c).unwrap(), 1.0);
        let mut c = OutcomeCounts::new();
        c.add(Settings::FA, Outcome::D1, 7);
        c.add(Settings::FF, Outcome::D2, 7);
        assert_eq!(error_rate_from_counts(&c).unwrap(), 0.0);
        assert!(matches!(error_rate_from_counts(&OutcomeCounts::new()), Err(QkdError::NoData(_))));
    }

    #[test]
    fn attacked_table_limits() {
        let honest = reference_outcome_table(0.5);
        assert_eq!(attacked_outcome_table(0.0).max_deviation(&honest), 0.0);
        let t = attacked_outcome_table(FRAC_PI_2);
        assert!(close(t.get(Settings::FF, Outcome::D1), 0.5, 1e-15));
        assert!(close(t.get(Settings::FF, Outcome::D2), 0.5, 1e-15));
        for s in Settings::ALL {
            assert!(close(t.row_sum(s), 1.0, 1e-15));
        }
    }

    #[test]
    fn table_estimators_reproduce_closed_forms() {
        for k in 0..=10 {
            let theta = 0.1 * k as f64 * FRAC_PI_2;
            let tab = attacked_outcome_table(theta);
            assert!(close(tab.error_rate().unwrap(), analytic_error(theta), 1e-12));
            assert!(close(tab.visibility().unwrap(), analytic_visibility(theta), 1e-12));
        }
    }

    #[test]
    fn sweep_examples() {
        let c = sweep(&[0.0]).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].visibility, 1.0);
        assert_eq!(c.points[0].key_rate, 1.0);
        let c = sweep(&[FRAC_PI_2]).unwrap();
        assert!(close(c.points[0].visibility, 0.0, 1e-15));
        assert!(close(c.points[0].key_rate, -1.0, 1e-12));

        let grid = theta_grid(0.0, FRAC_PI_2, 100).unwrap();
        let c = sweep(&grid).unwrap();
        let th = security_threshold::<f64>().theta;
        let crossings = c.key_rate_crossings();
        assert_eq!(crossings.len(), 1);
        let (lo, hi) = crossings[0];
        assert!(lo < th && th <= hi);
        assert!(c.points.windows(2).all(|w| w[1].key_rate < w[0].key_rate));

        assert!(sweep(&[0.2, 0.1]).is_err());
        assert!(sweep(&[0.1, 0.1]).is_err());
        assert!(sweep(&[2.0]).is_err());
        assert!(sweep(&[-0.1]).is_err());
    }

    #[test]
    fn grid_endpoints() {
        let g = theta_grid(0.0, 1.5, 100).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[99], 1.5);
        assert!(theta_grid(0.0, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn complementarity(theta in 0.0..=FRAC_PI_2) {
            prop_assert!((analytic_visibility(theta) + eve_information(theta) - 1.0).abs() <= 1e-15);
            let p = SecurityPoint::at(theta).unwrap();
            prop_assert!((p.visibility + p.eve_info - 1.0).abs() <= 1e-12);
            prop_assert!(p.error_rate >= 0.0 && p.error_rate <= 0.5);
            prop_assert!((p.key_rate - (p.bob_info - p.eve_info)).abs() <= 1e-15);
        }

        #[test]
        fn monotonicity(a in 0.0..=FRAC_PI_2, b in 0.0..=FRAC_PI_2) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(analytic_error(lo) <= analytic_error(hi));
            prop_assert!(eve_information(lo) <= eve_information(hi));
            prop_assert!(analytic_visibility(lo) >= analytic_visibility(hi));
        }

        #[test]
        fn entropy_is_symmetric_and_bounded(e in 0.0..=1.0f64) {
            let h = binary_entropy(e).unwrap();
            prop_assert!((0.0..=1.0 + 1e-15).contains(&h));
            prop_assert!((h - binary_entropy(1.0 - e).unwrap()).abs() <= 1e-12);
        }
    }
}
