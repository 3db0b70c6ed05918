//! Protocol rounds, sessions, sifting and Trojan-horse checks.
//!
//! A round's random choices (switch settings, sent polarization, Bob's
//! readout basis, per-leg loss) select a [`KernelKey`]. The exact outcome
//! distribution for that key is computed once per session by
//! [`round_kernel`] and then sampled per round.

mod kernel;
mod sift;
mod trojan;
mod types;

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{eve_guess, outcome_from_uniform, AttackModel};
use crate::analysis::{binary_entropy, error_rate_from_counts, reference_outcome_table, visibility_from_counts};
use crate::fockstate::BeamsplitterParams;
use crate::rng::{stream, StreamDomain};
use crate::{QkdError, Result, Scalar};

pub use kernel::{party_branches, round_kernel, KernelContext, KernelKey, Leaf, PartyBranch, RoundKernel};
pub use sift::{compare_to_table, sift, KeySet, SiftResult, TableCheck, TableEntry};
pub use trojan::{inject_trojan_probes, trojan_polarization_check, trojan_timing_check, TrojanProbe};
pub use types::{Bb84State, Outcome, OutcomeCounts, PolBasis, RoundRecord, Settings, Switch};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrojanDefense {
    #[default]
    None,
    Timing,
    Polarization,
    Both,
}

impl TrojanDefense {
    pub fn timing(self) -> bool {
        matches!(self, TrojanDefense::Timing | TrojanDefense::Both)
    }

    pub fn polarization(self) -> bool {
        matches!(self, TrojanDefense::Polarization | TrojanDefense::Both)
    }
}

/// Integer-tick clock of the send schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub period: u64,
    /// Channel transit time `tau` from Alice's send to Bob's receipt.
    pub transit: u64,
    /// Send ticks are jittered uniformly in `[0, jitter_window)` when the
    /// timing defense is on.
    pub jitter_window: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig { period: 100, transit: 10, jitter_window: 50 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig<T> {
    pub rounds: u64,
    pub test_fraction: f64,
    pub bs: BeamsplitterParams<T>,
    pub attack: AttackModel<T>,
    /// Per-leg photon loss probability.
    pub loss: f64,
    pub seed: u64,
    pub trojan: TrojanDefense,
    pub timing: TimingConfig,
}

impl<T: Scalar> SessionConfig<T> {
    /// Honest session with the documented defaults.
    pub fn new(rounds: u64, seed: u64) -> Self {
        SessionConfig {
            rounds,
            test_fraction: 0.25,
            bs: BeamsplitterParams::balanced(),
            attack: AttackModel::None,
            loss: 0.0,
            seed,
            trojan: TrojanDefense::None,
            timing: TimingConfig::default(),
        }
    }

    pub fn with_attack(mut self, attack: AttackModel<T>) -> Self {
        self.attack = attack;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(QkdError::config("rounds must be at least 1"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(QkdError::config("test fraction must lie in (0, 1)"));
        }
        if self.test_fraction * (self.rounds as f64) < 1.0 {
            return Err(QkdError::config("test fraction times rounds must be at least 1"));
        }
        if !(self.loss >= 0.0 && self.loss < 1.0) {
            return Err(QkdError::config("loss must lie in [0, 1)"));
        }
        if self.timing.period == 0 {
            return Err(QkdError::config("timing period must be positive"));
        }
        if self.trojan.timing() && !(1..=self.timing.period).contains(&self.timing.jitter_window) {
            return Err(QkdError::config("jitter window must lie in [1, period]"));
        }
        BeamsplitterParams::new(self.bs.transmittance(), self.bs.reflectance())?;
        Ok(())
    }

    /// Every kernel key a round of this session can draw.
    pub fn reachable_keys(&self) -> Vec<KernelKey> {
        let pols: &[Bb84State] = if self.trojan.polarization() { &Bb84State::ALL } else { &[Bb84State::H] };
        let bases: &[Option<PolBasis>] = if self.trojan.polarization() {
            &[Some(PolBasis::Rectilinear), Some(PolBasis::Diagonal)]
        } else {
            &[None]
        };
        let losses: &[bool] = if self.loss > 0.0 { &[false, true] } else { &[false] };
        let mut keys = Vec::new();
        for settings in Settings::ALL {
            for &sent_pol in pols {
                for &bob_basis in bases {
                    for &lost_onward in losses {
                        for &lost_return in losses {
                            keys.push(KernelKey { settings, sent_pol, bob_basis, lost_onward, lost_return });
                        }
                    }
                }
            }
        }
        keys
    }
}

/// Random choices of one round, drawn in a fixed order from its stream.
struct RoundDraws {
    key: KernelKey,
    jitter: u64,
    outcome_u: f64,
    eve_u: f64,
}

fn draw_round<T: Scalar, R: Rng>(cfg: &SessionConfig<T>, rng: &mut R) -> RoundDraws {
    let alice = Switch::from_coin(rng.gen_bool(0.5));
    let bob = Switch::from_coin(rng.gen_bool(0.5));
    let (sent_pol, bob_basis) = if cfg.trojan.polarization() {
        let pol = Bb84State::from_index(rng.gen_range(0..4));
        (pol, Some(PolBasis::from_coin(rng.gen_bool(0.5))))
    } else {
        (Bb84State::H, None)
    };
    let jitter = if cfg.trojan.timing() { rng.gen_range(0..cfg.timing.jitter_window) } else { 0 };
    let (lost_onward, lost_return) =
        if cfg.loss > 0.0 { (rng.gen::<f64>() < cfg.loss, rng.gen::<f64>() < cfg.loss) } else { (false, false) };
    let outcome_u = rng.gen::<f64>();
    let eve_u = rng.gen::<f64>();
    RoundDraws {
        key: KernelKey { settings: Settings::new(alice, bob), sent_pol, bob_basis, lost_onward, lost_return },
        jitter,
        outcome_u,
        eve_u,
    }
}

fn play_round<T: Scalar>(
    cfg: &SessionConfig<T>,
    index: u64,
    leaf: impl FnOnce(KernelKey, f64) -> Result<SampledLeaf>,
) -> Result<RoundRecord> {
    let mut rng = stream(cfg.seed, StreamDomain::Round, index);
    let d = draw_round(cfg, &mut rng);
    let leaf = leaf(d.key, d.outcome_u)?;
    let send_tick = index * cfg.timing.period + d.jitter;
    let settings = d.key.settings;
    let sifted_bit = if leaf.outcome == Outcome::D1 { settings.secret_bit() } else { None };
    Ok(RoundRecord {
        index,
        alice: settings.alice,
        bob: settings.bob,
        sent_pol: d.key.sent_pol,
        send_tick,
        receive_tick: leaf.bob_clicked.then_some(send_tick + cfg.timing.transit),
        transit: cfg.timing.transit,
        outcome: leaf.outcome,
        bob_pol: d.key.bob_basis.zip(leaf.bob_result),
        sifted_bit,
        eve: leaf.eve.map(|p| outcome_from_uniform(p, d.eve_u)),
    })
}

/// Kernel leaves reduced to what sampling needs, in `f64`.
#[derive(Clone, Debug)]
struct RoundOutcome {
    leaves: Vec<SampledLeaf>,
}

#[derive(Clone, Copy, Debug)]
struct SampledLeaf {
    cumulative: f64,
    outcome: Outcome,
    bob_clicked: bool,
    bob_result: Option<Bb84State>,
    eve: Option<[f64; 3]>,
}

impl RoundOutcome {
    fn from_kernel<T: Scalar>(k: &RoundKernel<T>) -> Self {
        let mut acc = 0.0;
        let leaves = k
            .leaves
            .iter()
            .map(|l| {
                acc += l.probability.as_f64();
                SampledLeaf {
                    cumulative: acc,
                    outcome: l.outcome,
                    bob_clicked: l.bob_clicked,
                    bob_result: l.bob_result,
                    eve: l.eve.map(|e| e.map(|x| x.as_f64())),
                }
            })
            .collect();
        RoundOutcome { leaves }
    }

    fn pick(&self, u: f64) -> SampledLeaf {
        *self.leaves.iter().find(|l| u < l.cumulative).unwrap_or_else(|| self.leaves.last().expect("non-empty kernel"))
    }
}

/// Runs one round, computing its kernel from scratch.
pub fn run_round<T: Scalar>(cfg: &SessionConfig<T>, index: u64) -> Result<RoundRecord> {
    let ctx = KernelContext::new(cfg.bs, cfg.attack.clone())?;
    play_round(cfg, index, |key, u| Ok(RoundOutcome::from_kernel(&round_kernel(&ctx, key)?).pick(u)))
}

/// A session's configuration with every reachable round kernel precomputed.
pub struct Simulator<'a, T> {
    cfg: &'a SessionConfig<T>,
    kernels: HashMap<KernelKey, RoundOutcome>,
}

impl<'a, T: Scalar> Simulator<'a, T> {
    pub fn new(cfg: &'a SessionConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let ctx = KernelContext::new(cfg.bs, cfg.attack.clone())?;
        let kernels = cfg
            .reachable_keys()
            .into_iter()
            .map(|key| Ok((key, RoundOutcome::from_kernel(&round_kernel(&ctx, key)?))))
            .collect::<Result<_>>()?;
        Ok(Simulator { cfg, kernels })
    }

    pub fn round(&self, index: u64) -> Result<RoundRecord> {
        play_round(self.cfg, index, |key, u| {
            let k = self.kernels.get(&key).ok_or_else(|| QkdError::Internal(format!("no kernel for {key:?}")))?;
            Ok(k.pick(u))
        })
    }

    /// All rounds in index order; parallel over the current rayon pool.
    pub fn rounds(&self) -> Result<Vec<RoundRecord>> {
        (0..self.cfg.rounds).into_par_iter().map(|i| self.round(i)).collect()
    }
}

/// Estimators over a set of rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub rounds: u64,
    pub counts: OutcomeCounts,
    pub visibility: Option<f64>,
    pub error_rate: Option<f64>,
    pub multi_count_rate: f64,
    /// Rounds without any click among those where at least one party
    /// reflected.
    pub loss_rate: Option<f64>,
    pub detection_rate: f64,
    pub key_bits: u64,
    /// Conclusive fraction of Eve's measurements over sifted D1 rounds.
    pub eve_conclusive_rate: Option<f64>,
    /// Fraction of Eve's conclusive guesses that equal the sifted bit.
    pub eve_guess_accuracy: Option<f64>,
    /// `1 - h(e) - I_E`, with `I_E` the conclusive rate (0 when Eve does not measure).
    pub key_rate: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl SessionStats {
    pub fn from_records(records: &[RoundRecord]) -> Self {
        let counts = OutcomeCounts::from_records(records);
        let n = records.len() as u64;
        let non_aa: u64 = Settings::ALL.iter().filter(|s| **s != Settings::AA).map(|s| counts.settings_total(*s)).sum();
        let non_aa_null: u64 =
            Settings::ALL.iter().filter(|s| **s != Settings::AA).map(|s| counts.get(*s, Outcome::Null)).sum();
        let sifted: Vec<&RoundRecord> = records.iter().filter(|r| r.sifted_bit.is_some()).collect();
        let measured: Vec<&RoundRecord> = sifted.iter().copied().filter(|r| r.eve.is_some()).collect();
        let conclusive: Vec<&RoundRecord> =
            measured.iter().copied().filter(|r| r.eve.and_then(eve_guess).is_some()).collect();
        let correct = conclusive.iter().filter(|r| r.eve.and_then(eve_guess) == r.sifted_bit).count() as u64;
        let visibility = visibility_from_counts(&counts).ok();
        let error_rate = error_rate_from_counts(&counts).ok();
        let eve_conclusive_rate = ratio(conclusive.len() as u64, measured.len() as u64);
        let key_rate = error_rate.map(|e| {
            let h = binary_entropy(e).expect("error rate lies in [0, 1]");
            1.0 - h - eve_conclusive_rate.unwrap_or(0.0)
        });
        SessionStats {
            rounds: n,
            visibility,
            error_rate,
            multi_count_rate: ratio(counts.outcome_total(Outcome::MultiCount), n).unwrap_or(0.0),
            loss_rate: ratio(non_aa_null, non_aa),
            detection_rate: ratio(counts.outcome_total(Outcome::D1), n).unwrap_or(0.0),
            key_bits: sifted.len() as u64,
            eve_conclusive_rate,
            eve_guess_accuracy: ratio(correct, conclusive.len() as u64),
            key_rate,
            counts,
        }
    }
}

/// Result of a full session: every round, whole-session estimators, and the
/// sifting split.
#[derive(Clone, Debug)]
pub struct SessionReport {
    pub records: Vec<RoundRecord>,
    /// Estimators over all rounds; `key_bits` counts the key set.
    pub stats: SessionStats,
    pub sift: SiftResult,
    /// Test-set counts against the honest pattern at the session's transmittance.
    pub table_check: TableCheck,
}

pub fn run_session<T: Scalar>(cfg: &SessionConfig<T>) -> Result<SessionReport> {
    let records = Simulator::new(cfg)?.rounds()?;
    let mut rng = stream(cfg.seed, StreamDomain::Sift, 0);
    let sift = sift(&records, cfg.test_fraction, &mut rng)?;
    let mut stats = SessionStats::from_records(&records);
    stats.key_bits = sift.key.len() as u64;
    let reference = reference_outcome_table(cfg.bs.transmittance().as_f64());
    let table_check = compare_to_table(&sift.reconciled.counts, &reference);
    Ok(SessionReport { records, stats, sift, table_check })
}
