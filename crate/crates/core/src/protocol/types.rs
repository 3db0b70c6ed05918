use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize, Serializer};

use crate::adversary::PovmOutcome;
use crate::fockstate::Polarization;
use crate::Scalar;

/// A party's switch: reflect with the Faraday mirror, or absorb.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Switch {
    F,
    A,
}

impl Switch {
    pub fn from_coin(absorb: bool) -> Self {
        if absorb {
            Switch::A
        } else {
            Switch::F
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Switch::F => "F",
            Switch::A => "A",
        }
    }
}

/// `(Alice, Bob)` switch pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Settings {
    pub alice: Switch,
    pub bob: Switch,
}

impl Settings {
    pub const FF: Settings = Settings { alice: Switch::F, bob: Switch::F };
    pub const FA: Settings = Settings { alice: Switch::F, bob: Switch::A };
    pub const AF: Settings = Settings { alice: Switch::A, bob: Switch::F };
    pub const AA: Settings = Settings { alice: Switch::A, bob: Switch::A };
    pub const ALL: [Settings; 4] = [Self::FF, Self::FA, Self::AF, Self::AA];

    pub fn new(alice: Switch, bob: Switch) -> Self {
        Settings { alice, bob }
    }

    pub fn index(self) -> usize {
        (self.alice == Switch::A) as usize * 2 + (self.bob == Switch::A) as usize
    }

    pub fn label(self) -> String {
        format!("{}{}", self.alice.label(), self.bob.label())
    }

    /// Exactly one party absorbs: the rounds that carry a key bit.
    pub fn is_key_setting(self) -> bool {
        self.alice != self.bob
    }

    /// Bit 0 when Alice absorbs, bit 1 when Bob absorbs.
    pub fn secret_bit(self) -> Option<u8> {
        match (self.alice, self.bob) {
            (Switch::A, Switch::F) => Some(0),
            (Switch::F, Switch::A) => Some(1),
            _ => None,
        }
    }
}

impl fmt::Display for Settings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.alice.label(), self.bob.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    D1,
    D2,
    AliceAbsorb,
    BobAbsorb,
    /// No click anywhere, or only an absorber click in an `(A, A)` round.
    Null,
    /// Two or more photons registered in one round.
    MultiCount,
}

impl Outcome {
    pub const ALL: [Outcome; 6] = [
        Outcome::D1,
        Outcome::D2,
        Outcome::AliceAbsorb,
        Outcome::BobAbsorb,
        Outcome::Null,
        Outcome::MultiCount,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::D1 => "D1",
            Outcome::D2 => "D2",
            Outcome::AliceAbsorb => "AliceAbsorb",
            Outcome::BobAbsorb => "BobAbsorb",
            Outcome::Null => "Null",
            Outcome::MultiCount => "MultiCount",
        }
    }
}

/// The four BB84 polarization states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bb84State {
    H,
    V,
    D,
    A,
}

impl Bb84State {
    pub const ALL: [Bb84State; 4] = [Bb84State::H, Bb84State::V, Bb84State::D, Bb84State::A];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i % 4]
    }

    pub fn basis(self) -> PolBasis {
        match self {
            Bb84State::H | Bb84State::V => PolBasis::Rectilinear,
            Bb84State::D | Bb84State::A => PolBasis::Diagonal,
        }
    }

    pub fn polarization<T: Scalar>(self) -> Polarization<T> {
        match self {
            Bb84State::H => Polarization::horizontal(),
            Bb84State::V => Polarization::vertical(),
            Bb84State::D => Polarization::diagonal(T::one()),
            Bb84State::A => Polarization::diagonal(-T::one()),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bb84State::H => "H",
            Bb84State::V => "V",
            Bb84State::D => "D",
            Bb84State::A => "A",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolBasis {
    Rectilinear,
    Diagonal,
}

impl PolBasis {
    pub fn from_coin(diagonal: bool) -> Self {
        if diagonal {
            PolBasis::Diagonal
        } else {
            PolBasis::Rectilinear
        }
    }

    /// The two basis states, in readout order.
    pub fn states(self) -> [Bb84State; 2] {
        match self {
            PolBasis::Rectilinear => [Bb84State::H, Bb84State::V],
            PolBasis::Diagonal => [Bb84State::D, Bb84State::A],
        }
    }

    /// Frame change `u[out][in]` from `(H, V)` to this basis' two modes.
    pub fn frame<T: Scalar>(self) -> [[Complex<T>; 2]; 2] {
        self.states().map(|s| {
            let p = s.polarization::<T>();
            [p.alpha().conj(), p.beta().conj()]
        })
    }

    pub fn label(self) -> &'static str {
        match self {
            PolBasis::Rectilinear => "Z",
            PolBasis::Diagonal => "X",
        }
    }
}

/// One protocol round as seen by the simulator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: u64,
    pub alice: Switch,
    pub bob: Switch,
    pub sent_pol: Bb84State,
    pub send_tick: u64,
    /// Present only when Bob's absorber clicked.
    pub receive_tick: Option<u64>,
    pub transit: u64,
    pub outcome: Outcome,
    /// Bob's polarization readout on an absorber click, when the
    /// polarization defense is active.
    pub bob_pol: Option<(PolBasis, Bb84State)>,
    pub sifted_bit: Option<u8>,
    /// Eve's probe measurement in announced D1 rounds.
    pub eve: Option<PovmOutcome>,
}

impl RoundRecord {
    pub fn settings(&self) -> Settings {
        Settings::new(self.alice, self.bob)
    }
}

/// Round counts keyed by `(settings, outcome)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(from = "BTreeMap<String, u64>")]
pub struct OutcomeCounts {
    counts: [[u64; 6]; 4],
}

impl OutcomeCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a RoundRecord>) -> Self {
        let mut c = Self::new();
        for r in records {
            c.add(r.settings(), r.outcome, 1);
        }
        c
    }

    pub fn add(&mut self, settings: Settings, outcome: Outcome, n: u64) {
        self.counts[settings.index()][outcome.index()] += n;
    }

    pub fn get(&self, settings: Settings, outcome: Outcome) -> u64 {
        self.counts[settings.index()][outcome.index()]
    }

    pub fn merge(&mut self, other: &Self) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn settings_total(&self, settings: Settings) -> u64 {
        self.counts[settings.index()].iter().sum()
    }

    pub fn outcome_total(&self, outcome: Outcome) -> u64 {
        self.counts.iter().map(|row| row[outcome.index()]).sum()
    }

    pub fn key(settings: Settings, outcome: Outcome) -> String {
        format!("{}/{}", settings.label(), outcome.label())
    }
}

impl Serialize for OutcomeCounts {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<String, u64> = Settings::ALL
            .iter()
            .flat_map(|st| Outcome::ALL.iter().map(move |o| (Self::key(*st, *o), self.get(*st, *o))))
            .collect();
        map.serialize(s)
    }
}

impl From<BTreeMap<String, u64>> for OutcomeCounts {
    fn from(map: BTreeMap<String, u64>) -> Self {
        let mut c = OutcomeCounts::new();
        for st in Settings::ALL {
            for o in Outcome::ALL {
                if let Some(n) = map.get(&Self::key(st, o)) {
                    c.add(st, o, *n);
                }
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_indexing_and_bits() {
        for (i, s) in Settings::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
        assert_eq!(Settings::AF.secret_bit(), Some(0));
        assert_eq!(Settings::FA.secret_bit(), Some(1));
        assert_eq!(Settings::FF.secret_bit(), None);
        assert_eq!(Settings::AA.secret_bit(), None);
    }

    #[test]
    fn frames_are_unitary() {
        for b in [PolBasis::Rectilinear, PolBasis::Diagonal] {
            let u = b.frame::<f64>();
            for i in 0..2 {
                for j in 0..2 {
                    let ip = u[0][i].conj() * u[0][j] + u[1][i].conj() * u[1][j];
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((ip.re - e).abs() < 1e-15 && ip.im.abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn counts_serialize_by_key() {
        let mut c = OutcomeCounts::new();
        c.add(Settings::FA, Outcome::D1, 3);
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["FA/D1"], 3);
        assert_eq!(json.as_object().unwrap().len(), 24);
        let back: OutcomeCounts = serde_json::from_value(json).unwrap();
        assert_eq!(back, c);
    }
}
