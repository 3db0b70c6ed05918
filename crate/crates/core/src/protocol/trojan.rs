use rand::Rng;

use crate::rng::{stream, StreamDomain};
use crate::{QkdError, Result};

use super::{Bb84State, PolBasis, RoundRecord, TimingConfig};

/// Bob-detection rounds whose receipt tick is not `t_s + tau`.
pub fn trojan_timing_check(records: &[RoundRecord]) -> u64 {
    records
        .iter()
        .filter(|r| r.receive_tick.is_some_and(|t| t.checked_sub(r.transit) != Some(r.send_tick)))
        .count() as u64
}

/// Fraction of Bob's matching-basis polarization readouts that differ from
/// what Alice sent.
pub fn trojan_polarization_check(records: &[RoundRecord]) -> Result<f64> {
    let (mut matched, mut wrong) = (0u64, 0u64);
    for r in records {
        if let Some((basis, result)) = r.bob_pol {
            if basis == r.sent_pol.basis() {
                matched += 1;
                wrong += (result != r.sent_pol) as u64;
            }
        }
    }
    if matched == 0 {
        return Err(QkdError::NoData("no matching-basis polarization readouts"));
    }
    Ok(wrong as f64 / matched as f64)
}

/// Light Eve injects toward Bob's absorber in place of Alice's photon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrojanProbe {
    /// A photon in a fixed polarization.
    FixedPolarization(Bb84State),
    /// Eve measures Alice's photon in a random BB84 basis and resends the result.
    InterceptResend,
}

fn readout<R: Rng>(photon: Bb84State, basis: PolBasis, rng: &mut R) -> Bb84State {
    if photon.basis() == basis {
        photon
    } else {
        basis.states()[rng.gen_range(0..2)]
    }
}

/// Replaces every Bob detection with a detection of Eve's probe.
///
/// Eve does not know the jittered send tick, so her probe arrives at the
/// nominal slot `index * period + tau` plus a uniform offset in
/// `[0, jitter_window)`. Polarization readouts are redrawn for the probe
/// photon. Randomness comes from the session's Trojan stream family.
pub fn inject_trojan_probes(
    records: &[RoundRecord],
    probe: TrojanProbe,
    timing: &TimingConfig,
    seed: u64,
) -> Vec<RoundRecord> {
    records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if r.receive_tick.is_none() {
                return r;
            }
            let mut rng = stream(seed, StreamDomain::Trojan, r.index);
            let offset = rng.gen_range(0..timing.jitter_window.max(1));
            r.receive_tick = Some(r.index * timing.period + r.transit + offset);
            if let Some((basis, _)) = r.bob_pol {
                let photon = match probe {
                    TrojanProbe::FixedPolarization(p) => p,
                    TrojanProbe::InterceptResend => {
                        let eve_basis = PolBasis::from_coin(rng.gen_bool(0.5));
                        readout(r.sent_pol, eve_basis, &mut rng)
                    }
                };
                r.bob_pol = Some((basis, readout(photon, basis, &mut rng)));
            }
            r
        })
        .collect()
}
