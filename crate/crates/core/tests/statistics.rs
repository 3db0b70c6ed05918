//! Monte Carlo estimators against the analytic curve across attack strengths.
//!
//! Each estimator is a binomial proportion given its denominator, so the
//! tolerance is a multiple of `sqrt(p (1 - p) / m)`. With 33 checks at four
//! standard deviations the family-wise false-failure rate stays near 0.2%.

use std::f64::consts::FRAC_PI_2;

use scqkd::adversary::{AttackModel, NumberPreservingParams, ReturnLeg};
use scqkd::analysis::{analytic_error, analytic_visibility};
use scqkd::protocol::{run_session, Outcome, SessionConfig, Settings};

const ROUNDS: u64 = 1_000_000;
const SIGMAS: f64 = 4.0;

fn check(name: &str, theta: f64, got: f64, p: f64, m: u64) {
    let sd = (p * (1.0 - p) / m as f64).sqrt();
    let dev = (got - p).abs();
    if sd == 0.0 {
        assert!(dev < 1e-15, "{name} at theta {theta}: {got} vs exact {p}");
    } else {
        assert!(dev <= SIGMAS * sd, "{name} at theta {theta}: {got} vs {p}, {:.2} sd", dev / sd);
    }
}

#[test]
fn estimators_follow_the_analytic_curve() {
    for k in 0..=10u64 {
        let theta = k as f64 * 0.1 * FRAC_PI_2;
        let attack = AttackModel::NumberPreserving(NumberPreservingParams::new(theta, ReturnLeg::None).unwrap());
        let rep = run_session(&SessionConfig::new(ROUNDS, 500 + k).with_attack(attack)).unwrap();
        let s = &rep.stats;

        // Visibility is 1 - 2q with q the D1 share of (F,F) detections.
        let ff = s.counts.get(Settings::FF, Outcome::D1) + s.counts.get(Settings::FF, Outcome::D2);
        let q = (1.0 - analytic_visibility(theta)) / 2.0;
        check("V", theta, (1.0 - s.visibility.unwrap()) / 2.0, q, ff);

        let d1 = s.counts.outcome_total(Outcome::D1);
        check("e", theta, s.error_rate.unwrap(), analytic_error(theta), d1);

        let measured = rep.records.iter().filter(|r| r.sifted_bit.is_some() && r.eve.is_some()).count() as u64;
        check("Eve conclusive", theta, s.eve_conclusive_rate.unwrap(), 1.0 - theta.cos(), measured);
        if theta > 0.0 {
            assert_eq!(s.eve_guess_accuracy, Some(1.0), "theta {theta}");
        }
    }
}
