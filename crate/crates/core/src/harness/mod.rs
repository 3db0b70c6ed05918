//! Configuration, orchestration and output files for the `scqkd` tool.
//!
//! A run writes into its output directory:
//!
//! - `summary.json`: counts keyed `settings/outcome`, estimators, verdict
//! - `rounds.csv`: one row per round
//! - `curve.csv`: analytic security curve, for sweeps
//! - `manifest.json`: configuration echo, version, seed, generator, outputs
//!
//! Everything except the manifest's wall time is a pure function of the
//! configuration.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::analysis::{security_threshold, sweep, SecurityCurve, SecurityPoint, Threshold};
use crate::protocol::{run_session, trojan_polarization_check, trojan_timing_check, SessionReport, SessionStats};
use crate::rng::RNG_NAME;
use crate::{QkdError, Result};

pub use config::{parse_config, AttackKind, Cli, Invocation, Options, ReturnLegKind, RunConfig};
pub use output::{format_float, write_curve_csv, write_rounds_csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Accept,
    Abort,
}

/// Accept or abort on the test-set estimators.
pub fn verdict(stats: &SessionStats, visibility_min: f64, error_max: f64) -> (Verdict, Vec<String>) {
    let mut reasons = Vec::new();
    match stats.visibility {
        Some(v) if v >= visibility_min => {}
        Some(v) => reasons.push(format!("visibility {} below {}", format_float(v), format_float(visibility_min))),
        None => reasons.push("no (F,F) detections in the test set".to_owned()),
    }
    match stats.error_rate {
        Some(e) if e <= error_max => {}
        Some(e) => reasons.push(format!("error rate {} above {}", format_float(e), format_float(error_max))),
        None => reasons.push("no D1 events in the test set".to_owned()),
    }
    let v = if reasons.is_empty() { Verdict::Accept } else { Verdict::Abort };
    (v, reasons)
}

/// What a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub verdict: Option<Verdict>,
    pub reasons: Vec<String>,
    pub report: Option<SessionReport>,
    pub curve: Option<SecurityCurve<f64>>,
    pub manifest: PathBuf,
    pub outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Summary<'a> {
    verdict: Verdict,
    reasons: &'a [String],
    thresholds: serde_json::Value,
    session: &'a SessionStats,
    test_set: &'a SessionStats,
    key: serde_json::Value,
    table_check: &'a crate::protocol::TableCheck,
    trojan: serde_json::Value,
    analytic: Option<SecurityPoint<f64>>,
}

fn summary_value(cfg: &RunConfig, rep: &SessionReport, verdict: Verdict, reasons: &[String]) -> serde_json::Value {
    let Threshold { theta, error_rate } = security_threshold::<f64>();
    let trojan = json!({
        "timing_violations": cfg.trojan.timing().then(|| trojan_timing_check(&rep.records)),
        "polarization_mismatch": if cfg.trojan.polarization() { trojan_polarization_check(&rep.records).ok() } else { None },
    });
    let analytic = match cfg.attack {
        AttackKind::NumberPreserving => SecurityPoint::at(cfg.theta).ok(),
        _ => None,
    };
    let summary = Summary {
        verdict,
        reasons,
        thresholds: json!({
            "visibility_min": cfg.visibility_min,
            "error_max": cfg.error_max,
            "theta_star": theta,
            "e_star": error_rate,
        }),
        session: &rep.stats,
        test_set: &rep.sift.reconciled,
        key: json!({ "bits": rep.sift.key.len(), "mismatches": rep.sift.key.mismatches() }),
        table_check: &rep.table_check,
        trojan,
        analytic,
    };
    serde_json::to_value(summary).expect("summary serializes")
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Executes an invocation and writes its outputs.
pub fn run(inv: &Invocation) -> Result<RunOutcome> {
    let started = Instant::now();
    let cfg = &inv.config;
    std::fs::create_dir_all(&inv.out)?;
    let mut outputs = Vec::new();
    let mut verdict_out = None;
    let mut reasons = Vec::new();
    let mut report = None;

    if let Some(session) = cfg.session_config()? {
        let rep = match inv.workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| QkdError::Internal(e.to_string()))?
                .install(|| run_session(&session))?,
            None => run_session(&session)?,
        };
        let (v, r) = verdict(&rep.sift.reconciled, cfg.visibility_min, cfg.error_max);
        let summary = inv.out.join("summary.json");
        write_json(&summary, &output::round_floats(summary_value(cfg, &rep, v, &r)))?;
        let rounds = inv.out.join("rounds.csv");
        write_rounds_csv(&rounds, &rep.records)?;
        outputs.extend([summary, rounds]);
        verdict_out = Some(v);
        reasons = r;
        report = Some(rep);
    }

    let curve = match cfg.sweep_grid()? {
        Some(grid) => {
            let curve = sweep(&grid)?;
            let path = inv.out.join("curve.csv");
            write_curve_csv(&path, &curve)?;
            outputs.push(path);
            Some(curve)
        }
        None => None,
    };

    let manifest = inv.out.join("manifest.json");
    let names: Vec<String> =
        outputs.iter().map(|p| p.file_name().expect("file path").to_string_lossy().into_owned()).collect();
    // The config echo keeps full precision so that it parses back to the same run.
    let mut doc = output::round_floats(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "rng": RNG_NAME,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "outputs": names,
    }));
    doc["config"] = serde_json::to_value(cfg.echo())?;
    write_json(&manifest, &doc)?;
    Ok(RunOutcome { verdict: verdict_out, reasons, report, curve, manifest, outputs })
}

/// Reads a manifest back into the configuration it echoes.
pub fn config_from_manifest(path: &Path) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let echo = value.get("config").cloned().ok_or_else(|| QkdError::config("manifest has no config"))?;
    RunConfig::resolve(serde_json::from_value(echo)?)
}

/// Process exit code for a finished run: 0 accept (or sweep only), 2 abort.
pub fn exit_code(outcome: &RunOutcome) -> i32 {
    match outcome.verdict {
        Some(Verdict::Abort) => 2,
        _ => 0,
    }
}

/// Entry point shared by the binary and tests. Returns the exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match parse_config(cli).and_then(|inv| run(&inv)) {
        Ok(outcome) => {
            if let Some(rep) = &outcome.report {
                let s = &rep.sift.reconciled;
                let show = |x: Option<f64>| x.map(format_float).unwrap_or_else(|| "n/a".to_owned());
                println!(
                    "rounds {}  V {}  e {}  P(D1) {}  key bits {}",
                    rep.stats.rounds,
                    show(s.visibility),
                    show(s.error_rate),
                    format_float(rep.stats.detection_rate),
                    rep.stats.key_bits
                );
            }
            if let Some(c) = &outcome.curve {
                println!("curve: {} points", c.points.len());
            }
            if let Some(v) = outcome.verdict {
                let label = match v {
                    Verdict::Accept => "ACCEPT",
                    Verdict::Abort => "ABORT",
                };
                if outcome.reasons.is_empty() {
                    println!("verdict: {label}");
                } else {
                    println!("verdict: {label} ({})", outcome.reasons.join("; "));
                }
            }
            exit_code(&outcome)
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
