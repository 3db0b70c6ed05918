//! Acceptance checks, one line per criterion.
//!
//! Run with `cargo test --test acceptance`. Monte Carlo sessions use fixed
//! seeds; binomial tolerances are three standard deviations of the
//! per-settings count.

use std::f64::consts::FRAC_PI_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use scqkd::adversary::{
    apply_number_preserving, apply_return_leg, AttackModel, GeneralIncoherentParams, IncoherentReturn,
    NumberPreservingParams, PerpOne, ReturnLeg,
};
use scqkd::analysis::{
    analytic_error, analytic_visibility, attacked_outcome_table, eve_information, key_rate, reference_outcome_table,
    security_threshold, OutcomeTable,
};
use scqkd::fockstate::{initial_state, BeamsplitterParams, Polarization, DEFAULT_PROBE_DIM};
use scqkd::harness::{parse_config, run, Cli};
use scqkd::protocol::{
    round_kernel, run_session, KernelContext, KernelKey, Outcome, OutcomeCounts, SessionConfig, SessionReport,
    Settings,
};

const MC_ROUNDS: u64 = 1_000_000;

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn exact_table(bs: BeamsplitterParams<f64>, attack: AttackModel<f64>) -> OutcomeTable<f64> {
    let ctx = KernelContext::new(bs, attack).expect("valid attack");
    let mut tab = OutcomeTable::zeros();
    for s in Settings::ALL {
        let k = round_kernel(&ctx, KernelKey::honest(s)).expect("kernel");
        for o in Outcome::ALL {
            tab.set(s, o, k.probability(o));
        }
    }
    tab
}

/// Largest per-entry deviation in units of the binomial standard deviation.
/// Entries with probability 0 or 1 must match exactly.
fn worst_sigma(counts: &OutcomeCounts, table: &OutcomeTable<f64>) -> f64 {
    let mut worst = 0.0f64;
    for s in Settings::ALL {
        let n = counts.settings_total(s) as f64;
        for o in Outcome::ALL {
            let p = table.get(s, o);
            let obs = counts.get(s, o) as f64;
            let sd = (n * p * (1.0 - p)).sqrt();
            let dev = (obs - n * p).abs();
            let z = if sd > 0.0 {
                dev / sd
            } else if dev < 0.5 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
    }
    worst
}

fn np(theta: f64, leg: ReturnLeg<f64>) -> AttackModel<f64> {
    AttackModel::NumberPreserving(NumberPreservingParams::new(theta, leg).expect("theta in range"))
}

fn session(attack: AttackModel<f64>, seed: u64) -> SessionReport {
    run_session(&SessionConfig::new(MC_ROUNDS, seed).with_attack(attack)).expect("session runs")
}

fn table_reproduction() -> Line {
    let started = Instant::now();
    let exact = exact_table(BeamsplitterParams::balanced(), AttackModel::None);
    let dev = exact.max_deviation(&reference_outcome_table(0.5));
    let rep = session(AttackModel::None, 0);
    let z = worst_sigma(&rep.stats.counts, &reference_outcome_table(0.5));
    let elapsed = started.elapsed();
    Line {
        id: 1,
        name: "Honest outcome table",
        pass: dev <= 1e-12 && z <= 3.0 && elapsed < Duration::from_secs(60),
        detail: format!("exact max dev {dev:.1e}; MC n=1e6 worst |z| {z:.2}; {:.2}s", elapsed.as_secs_f64()),
    }
}

fn efficiency() -> Line {
    let rep = session(AttackModel::None, 2);
    let p = rep.stats.detection_rate;
    Line {
        id: 2,
        name: "Efficiency",
        pass: (p - 0.125).abs() <= 0.002,
        detail: format!("P(D1) = {p:.5} over n=1e6"),
    }
}

fn general_t() -> Line {
    let mut worst = 0.0f64;
    for t in [0.25, 0.36, 0.5, 0.7] {
        let r = 1.0 - t;
        let tab = exact_table(BeamsplitterParams::from_transmittance(t).unwrap(), AttackModel::None);
        let checks = [
            (tab.get(Settings::FF, Outcome::D1), (t - r) * (t - r)),
            (tab.get(Settings::FF, Outcome::D2), 4.0 * r * t),
            (tab.get(Settings::AF, Outcome::D1), t * t),
            (tab.get(Settings::FA, Outcome::D1), r * r),
            (tab.get(Settings::AF, Outcome::D2), r * t),
            (tab.get(Settings::FA, Outcome::D2), r * t),
            (tab.get(Settings::AF, Outcome::AliceAbsorb), r),
            (tab.get(Settings::FA, Outcome::BobAbsorb), t),
        ];
        for (got, want) in checks {
            worst = worst.max((got - want).abs());
        }
    }
    Line {
        id: 3,
        name: "General-T statistics",
        pass: worst <= 1e-12,
        detail: format!("T in {{0.25, 0.36, 0.5, 0.7}}, max dev {worst:.1e}"),
    }
}

const THETAS: [f64; 5] = [0.2, 0.5, 0.745, 1.0, FRAC_PI_2];

/// Monte Carlo sessions under the number-preserving attack without a
/// return-leg correction, one per tested angle.
fn attacked_sessions() -> Vec<(f64, SessionReport)> {
    THETAS.iter().enumerate().map(|(i, &t)| (t, session(np(t, ReturnLeg::None), 100 + i as u64))).collect()
}

fn attack_statistics(runs: &[(f64, SessionReport)], elapsed: Duration) -> Line {
    let mut exact_dev = 0.0f64;
    let mut worst_z = 0.0f64;
    for (theta, rep) in runs {
        let tab = exact_table(BeamsplitterParams::balanced(), np(*theta, ReturnLeg::None));
        exact_dev = exact_dev.max((tab.get(Settings::FF, Outcome::D2) - (1.0 + theta.cos()) / 2.0).abs());
        exact_dev = exact_dev.max(tab.max_deviation(&attacked_outcome_table(*theta)));
        worst_z = worst_z.max(worst_sigma(&rep.stats.counts, &attacked_outcome_table(*theta)));
    }
    Line {
        id: 4,
        name: "Attack statistics",
        pass: exact_dev <= 1e-12 && worst_z <= 3.0 && elapsed < Duration::from_secs(300),
        detail: format!(
            "exact max dev {exact_dev:.1e}; MC n=1e6 x {} angles worst |z| {worst_z:.2}; {:.2}s",
            runs.len(),
            elapsed.as_secs_f64()
        ),
    }
}

fn complementarity(runs: &[(f64, SessionReport)]) -> Line {
    let grid = (0..=1000).map(|k| FRAC_PI_2 * k as f64 / 1000.0);
    let analytic = grid.map(|t| (analytic_visibility(t) + eve_information(t) - 1.0).abs()).fold(0.0, f64::max);
    let mc = runs
        .iter()
        .map(|(_, rep)| {
            let s = &rep.stats;
            (s.visibility.unwrap() + s.eve_conclusive_rate.unwrap() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    Line {
        id: 5,
        name: "Complementarity identity",
        pass: analytic <= f64::EPSILON && mc <= 0.01,
        detail: format!("analytic max |V+I_E-1| {analytic:.1e}; MC max {mc:.4}"),
    }
}

fn discrimination(runs: &[(f64, SessionReport)]) -> Line {
    let mut worst = 0.0f64;
    let mut accurate = true;
    for (theta, rep) in runs {
        let s = &rep.stats;
        worst = worst.max((s.eve_conclusive_rate.unwrap() - (1.0 - theta.cos())).abs());
        accurate &= s.eve_guess_accuracy == Some(1.0);
    }
    Line {
        id: 6,
        name: "Unambiguous discrimination",
        pass: worst <= 0.01 && accurate,
        detail: format!("max |rate - (1 - cos)| {worst:.4}; every conclusive guess correct: {accurate}"),
    }
}

fn threshold() -> Line {
    let started = Instant::now();
    let th = security_threshold::<f64>();
    let elapsed = started.elapsed();
    let k = |t: f64| key_rate(analytic_error(t), eve_information(t)).unwrap();
    let sign_change = k(th.theta - 0.01) > 0.0 && k(th.theta + 0.01) < 0.0;
    Line {
        id: 7,
        name: "Security threshold",
        pass: (th.theta - 0.745).abs() <= 0.005
            && (th.error_rate - 0.209).abs() <= 0.002
            && sign_change
            && elapsed < Duration::from_secs(1),
        detail: format!(
            "theta* = {:.6} rad, e* = {:.6}, key rate changes sign: {sign_change}; {:.1e}s",
            th.theta,
            th.error_rate,
            elapsed.as_secs_f64()
        ),
    }
}

fn unattack() -> Line {
    let mut worst = 0.0f64;
    for theta in THETAS {
        let p = NumberPreservingParams::new(theta, ReturnLeg::Unattack).unwrap();
        let phi =
            initial_state(&BeamsplitterParams::balanced(), &Polarization::horizontal(), DEFAULT_PROBE_DIM).unwrap();
        // (F,F): both mirrors act as the identity between the two legs.
        let back = apply_return_leg(&apply_number_preserving(&phi, &p).unwrap(), &p).unwrap();
        worst = worst.max(back.distance(&phi));
    }
    Line {
        id: 8,
        name: "Unattack null-disturbance",
        pass: worst <= 1e-10,
        detail: format!("max ||state - phi|0>|| {worst:.1e}"),
    }
}

fn multi_count() -> Line {
    let rate = |a0p_sq: f64, seed: u64| {
        let p = GeneralIncoherentParams::standard(
            a0p_sq.sqrt(),
            0.0,
            0.5,
            IncoherentReturn::None,
            PerpOne::Vacuum,
            DEFAULT_PROBE_DIM,
        )
        .unwrap();
        let cfg = SessionConfig::new(200_000, seed).with_attack(AttackModel::GeneralIncoherent(p));
        run_session(&cfg).unwrap().stats.multi_count_rate
    };
    let zero = rate(0.0, 300);
    let rates: Vec<f64> = [0.1, 0.5, 1.0].iter().enumerate().map(|(i, a)| rate(*a, 301 + i as u64)).collect();
    let pass = zero == 0.0 && rates[0] > 0.0 && rates.windows(2).all(|w| w[1] > w[0]);
    Line {
        id: 9,
        name: "Multi-count detectability",
        pass,
        detail: format!("alpha0p^2 = 0, 0.1, 0.5, 1.0 -> r = {zero}, {:.4}, {:.4}, {:.4}", rates[0], rates[1], rates[2]),
    }
}

fn determinism() -> Line {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &std::path::Path, workers: &str| {
        vec![
            "scqkd".to_owned(),
            "--rounds".into(),
            "200000".into(),
            "--attack".into(),
            "number-preserving".into(),
            "--theta".into(),
            "0.6".into(),
            "--return-leg".into(),
            "none".into(),
            "--trojan".into(),
            "both".into(),
            "--seed".into(),
            "42".into(),
            "--sweep".into(),
            "0:1.5:100".into(),
            "--workers".into(),
            workers.into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    use clap::Parser;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, w) in [(&a, "1"), (&b, "4")] {
        run(&parse_config(Cli::try_parse_from(args(out, w)).unwrap()).unwrap()).unwrap();
    }
    let read = |p: &std::path::Path, f: &str| std::fs::read(p.join(f)).unwrap();
    let mut same = ["summary.json", "rounds.csv", "curve.csv"].iter().all(|f| read(&a, f) == read(&b, f));
    let manifest = |p: &std::path::Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&read(p, "manifest.json")).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    same &= manifest(&a) == manifest(&b);
    Line {
        id: 10,
        name: "Determinism",
        pass: same,
        detail: "1 vs 4 workers: summary, rounds, curve and manifest (minus wall time) byte-identical".to_owned(),
    }
}

fn main() -> ExitCode {
    let mut lines = vec![table_reproduction(), efficiency(), general_t()];
    let started = Instant::now();
    let runs = attacked_sessions();
    let elapsed = started.elapsed();
    lines.push(attack_statistics(&runs, elapsed));
    lines.push(complementarity(&runs));
    lines.push(discrimination(&runs));
    lines.push(threshold());
    lines.push(unattack());
    lines.push(multi_count());
    lines.push(determinism());

    let mut failed = 0;
    for l in &lines {
        println!("[{}] {:>2}. {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.name, l.detail);
        failed += usize::from(!l.pass);
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
