use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::analysis::OutcomeTable;
use crate::{QkdError, Result};

use super::{Outcome, OutcomeCounts, RoundRecord, SessionStats, Settings, Switch};

/// Raw key material from the D1 rounds not spent on testing.
///
/// Each party derives a bit from their own setting alone: Alice reads 0 if
/// she absorbed and 1 otherwise, Bob reads 1 if he absorbed and 0
/// otherwise. The two agree exactly on rounds with one absorber.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct KeySet {
    pub indices: Vec<u64>,
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
}

impl KeySet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn mismatches(&self) -> usize {
        self.alice.iter().zip(&self.bob).filter(|(a, b)| a != b).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiftResult {
    /// Sorted round indices revealed for parameter estimation.
    pub test_indices: Vec<u64>,
    pub key: KeySet,
    /// Estimators over the test set only.
    pub reconciled: SessionStats,
}

/// Splits `records` into a random test set of `round(f * n)` rounds and the
/// key set from the remaining D1 rounds.
pub fn sift<R: Rng + ?Sized>(records: &[RoundRecord], f: f64, rng: &mut R) -> Result<SiftResult> {
    if !(f > 0.0 && f < 1.0) {
        return Err(QkdError::config("test fraction must lie in (0, 1)"));
    }
    let n = records.len();
    let k = (f * n as f64).round() as usize;
    if k == 0 {
        return Err(QkdError::config("test set is empty"));
    }
    let mut picked: Vec<usize> = index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    let mut in_test = vec![false; n];
    for &i in &picked {
        in_test[i] = true;
    }
    let test: Vec<RoundRecord> = picked.iter().map(|&i| records[i].clone()).collect();
    let mut key = KeySet::default();
    for (r, _) in records.iter().zip(&in_test).filter(|(r, t)| !**t && r.outcome == Outcome::D1) {
        key.indices.push(r.index);
        key.alice.push(if r.alice == Switch::A { 0 } else { 1 });
        key.bob.push(if r.bob == Switch::A { 1 } else { 0 });
    }
    Ok(SiftResult {
        test_indices: test.iter().map(|r| r.index).collect(),
        key,
        reconciled: SessionStats::from_records(&test),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableEntry {
    pub settings: String,
    pub outcome: &'static str,
    pub observed: u64,
    pub trials: u64,
    pub expected: f64,
    /// Binomial z-score of the observed count.
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableCheck {
    pub entries: Vec<TableEntry>,
    pub max_abs_z: f64,
}

/// Compares per-settings outcome frequencies with a reference pattern.
/// Entries with a reference probability of 0 or 1 get `z = 0` on an exact
/// match and infinity otherwise.
pub fn compare_to_table(counts: &OutcomeCounts, reference: &OutcomeTable<f64>) -> TableCheck {
    let mut entries = Vec::new();
    for s in Settings::ALL {
        let trials = counts.settings_total(s);
        for o in Outcome::ALL {
            let observed = counts.get(s, o);
            let p = reference.get(s, o);
            let mean = p * trials as f64;
            let var = mean * (1.0 - p);
            let z = if var > 0.0 {
                (observed as f64 - mean) / var.sqrt()
            } else if (observed as f64 - mean).abs() < 0.5 {
                0.0
            } else {
                f64::INFINITY
            };
            entries.push(TableEntry { settings: s.label(), outcome: o.label(), observed, trials, expected: p, z });
        }
    }
    let max_abs_z = entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max);
    TableCheck { entries, max_abs_z }
}
