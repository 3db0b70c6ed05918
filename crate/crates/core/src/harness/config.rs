use std::path::{Path, PathBuf};

use clap::{Args, Parser};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    AttackModel, GeneralIncoherentParams, IncoherentReturn, NumberPreservingParams, PerpOne, ReturnLeg,
};
use crate::analysis::{security_threshold, theta_grid};
use crate::fockstate::{BeamsplitterParams, ProbeOperator, DEFAULT_PROBE_DIM};
use crate::protocol::{SessionConfig, TimingConfig, TrojanDefense};
use crate::{QkdError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    #[default]
    None,
    Incoherent,
    NumberPreserving,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReturnLegKind {
    None,
    #[default]
    Unattack,
    General,
}

fn kebab<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

/// Run options. Every field is optional so that a config file and the
/// command line can be layered; the same keys are used in both.
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Options {
    /// Number of protocol rounds (required unless --sweep is given)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u64>,
    /// Fraction of rounds revealed for parameter estimation [default: 0.25]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_fraction: Option<f64>,
    /// Beamsplitter transmittance T [default: 0.5]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transmittance: Option<f64>,
    /// none | incoherent | number-preserving [default: none]
    #[arg(long, value_parser = kebab::<AttackKind>)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackKind>,
    /// Probe angle theta in [0, pi/2], with cos(theta) the probe overlap [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Amplitude of the photon-creating branch of the incoherent attack [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0p: Option<f64>,
    /// Amplitude of the photon-removing branch of the incoherent attack [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1p: Option<f64>,
    /// none | unattack | general [default: unattack]
    #[arg(long, value_parser = kebab::<ReturnLegKind>)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub return_leg: Option<ReturnLegKind>,
    /// Rotation angle of the general return-leg probe operator [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub return_phi: Option<f64>,
    /// vacuum | two-photon: arm state after the photon-removing branch [default: vacuum]
    #[arg(long, value_parser = kebab::<PerpOne>)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perp_one: Option<PerpOne>,
    /// Per-leg photon loss probability in [0, 1) [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    /// Session seed [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// none | timing | polarization | both [default: none]
    #[arg(long, value_parser = kebab::<TrojanDefense>)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trojan: Option<TrojanDefense>,
    /// Send period in ticks [default: 100]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<u64>,
    /// Channel transit time tau in ticks [default: 10]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transit: Option<u64>,
    /// Send-time jitter window in ticks under the timing defense [default: 50]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter_window: Option<u64>,
    /// Analytic security sweep over theta, as START:END:STEPS
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
    /// Minimum estimated visibility for ACCEPT [default: 0.95]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility_min: Option<f64>,
    /// Maximum estimated error rate for ACCEPT [default: tolerable threshold e*]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_max: Option<f64>,
}

impl Options {
    /// Values set in `over` replace those in `self`.
    pub fn overlay(self, over: Options) -> Options {
        macro_rules! pick {
            ($($f:ident),*) => { Options { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            rounds,
            test_fraction,
            transmittance,
            attack,
            theta,
            alpha0p,
            alpha1p,
            return_leg,
            return_phi,
            perp_one,
            loss,
            seed,
            trojan,
            period,
            transit,
            jitter_window,
            sweep,
            visibility_min,
            error_max
        )
    }

    /// Reads a flat JSON (`.json`) or TOML document.
    pub fn from_file(path: &Path) -> Result<Options> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| QkdError::config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| QkdError::config(format!("{}: {e}", path.display())))
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub rounds: Option<u64>,
    pub test_fraction: f64,
    pub transmittance: f64,
    pub attack: AttackKind,
    pub theta: f64,
    pub alpha0p: f64,
    pub alpha1p: f64,
    pub return_leg: ReturnLegKind,
    pub return_phi: f64,
    pub perp_one: PerpOne,
    pub loss: f64,
    pub seed: u64,
    pub trojan: TrojanDefense,
    pub period: u64,
    pub transit: u64,
    pub jitter_window: u64,
    pub sweep: Option<String>,
    pub visibility_min: f64,
    pub error_max: f64,
}

impl RunConfig {
    pub fn resolve(o: Options) -> Result<RunConfig> {
        let timing = TimingConfig::default();
        let cfg = RunConfig {
            rounds: o.rounds,
            test_fraction: o.test_fraction.unwrap_or(0.25),
            transmittance: o.transmittance.unwrap_or(0.5),
            attack: o.attack.unwrap_or_default(),
            theta: o.theta.unwrap_or(0.0),
            alpha0p: o.alpha0p.unwrap_or(0.0),
            alpha1p: o.alpha1p.unwrap_or(0.0),
            return_leg: o.return_leg.unwrap_or_default(),
            return_phi: o.return_phi.unwrap_or(0.0),
            perp_one: o.perp_one.unwrap_or(PerpOne::Vacuum),
            loss: o.loss.unwrap_or(0.0),
            seed: o.seed.unwrap_or(0),
            trojan: o.trojan.unwrap_or_default(),
            period: o.period.unwrap_or(timing.period),
            transit: o.transit.unwrap_or(timing.transit),
            jitter_window: o.jitter_window.unwrap_or(timing.jitter_window),
            sweep: o.sweep,
            visibility_min: o.visibility_min.unwrap_or(0.95),
            error_max: o.error_max.unwrap_or_else(|| security_threshold::<f64>().error_rate),
        };
        if cfg.rounds.is_none() && cfg.sweep.is_none() {
            return Err(QkdError::config("--rounds is required unless --sweep is given"));
        }
        cfg.attack_model()?;
        cfg.sweep_grid()?;
        if let Some(s) = cfg.session_config()? {
            s.validate()?;
        }
        Ok(cfg)
    }

    /// Flat key/value echo, readable back by [`Options::from_file`].
    pub fn echo(&self) -> Options {
        serde_json::to_value(self).and_then(serde_json::from_value).expect("run config round-trips through options")
    }

    pub fn attack_model(&self) -> Result<AttackModel<f64>> {
        match self.attack {
            AttackKind::None => Ok(AttackModel::None),
            AttackKind::NumberPreserving => {
                let leg = match self.return_leg {
                    ReturnLegKind::None => ReturnLeg::None,
                    ReturnLegKind::Unattack => ReturnLeg::Unattack,
                    ReturnLegKind::General => ReturnLeg::General {
                        u0: ProbeOperator::identity(DEFAULT_PROBE_DIM),
                        u1: ProbeOperator::planar_rotation(DEFAULT_PROBE_DIM, 0, 1, self.return_phi),
                    },
                };
                Ok(AttackModel::NumberPreserving(NumberPreservingParams::new(self.theta, leg)?))
            }
            AttackKind::Incoherent => {
                let leg = match self.return_leg {
                    ReturnLegKind::None => IncoherentReturn::None,
                    ReturnLegKind::Unattack => IncoherentReturn::Unattack,
                    ReturnLegKind::General => {
                        return Err(QkdError::config("the incoherent attack supports return legs none and unattack"))
                    }
                };
                Ok(AttackModel::GeneralIncoherent(GeneralIncoherentParams::standard(
                    self.alpha0p,
                    self.alpha1p,
                    self.theta,
                    leg,
                    self.perp_one,
                    DEFAULT_PROBE_DIM,
                )?))
            }
        }
    }

    pub fn session_config(&self) -> Result<Option<SessionConfig<f64>>> {
        let Some(rounds) = self.rounds else { return Ok(None) };
        Ok(Some(SessionConfig {
            rounds,
            test_fraction: self.test_fraction,
            bs: BeamsplitterParams::from_transmittance(self.transmittance)?,
            attack: self.attack_model()?,
            loss: self.loss,
            seed: self.seed,
            trojan: self.trojan,
            timing: TimingConfig { period: self.period, transit: self.transit, jitter_window: self.jitter_window },
        }))
    }

    pub fn sweep_grid(&self) -> Result<Option<Vec<f64>>> {
        let Some(spec) = &self.sweep else { return Ok(None) };
        let bad = || QkdError::config(format!("--sweep expects START:END:STEPS, got {spec:?}"));
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, end, steps] = parts[..] else { return Err(bad()) };
        let start: f64 = start.trim().parse().map_err(|_| bad())?;
        let end: f64 = end.trim().parse().map_err(|_| bad())?;
        let steps: usize = steps.trim().parse().map_err(|_| bad())?;
        if steps > 1 && !(end > start) {
            return Err(QkdError::config("sweep END must exceed START"));
        }
        let grid = theta_grid(start, end, steps)?;
        crate::analysis::sweep(&grid)?;
        Ok(Some(grid))
    }
}

/// Command line of the `scqkd` tool.
#[derive(Clone, Debug, Parser)]
#[command(name = "scqkd", version, about = "Semi-counterfactual QKD simulator and security analyzer")]
pub struct Cli {
    #[command(flatten)]
    pub options: Options,
    /// Flat TOML or JSON file with the same keys as the flags; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, env = "SCQKD_OUT_DIR", default_value = "scqkd-out")]
    pub out: PathBuf,
    /// Worker threads for round execution [default: all cores]
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Parsed invocation: resolved configuration plus where and how to run it.
#[derive(Clone, Debug, PartialEq)]
pub struct Invocation {
    pub config: RunConfig,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

/// Layers defaults, the optional config file and the flags.
pub fn parse_config(cli: Cli) -> Result<Invocation> {
    let file = match &cli.config {
        Some(p) => Options::from_file(p)?,
        None => Options::default(),
    };
    let config = RunConfig::resolve(file.overlay(cli.options))?;
    if cli.workers == Some(0) {
        return Err(QkdError::config("--workers must be at least 1"));
    }
    Ok(Invocation { config, out: cli.out, workers: cli.workers })
}
