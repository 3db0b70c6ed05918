//! Exact amplitude-level evolution of one round for fixed random choices.

use crate::adversary::{AttackModel, Povm};
use crate::fockstate::{
    initial_state, recombine, Arm, BeamsplitterParams, Detection, Polarization, ProbeState, SystemState,
};
use crate::{Result, Scalar};

use super::{Bb84State, Outcome, PolBasis, Settings, Switch};

/// Everything random about a round except the final outcome draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelKey {
    pub settings: Settings,
    pub sent_pol: Bb84State,
    /// Basis of Bob's polarization readout, when he reads one out.
    pub bob_basis: Option<PolBasis>,
    pub lost_onward: bool,
    pub lost_return: bool,
}

impl KernelKey {
    pub fn honest(settings: Settings) -> Self {
        KernelKey { settings, sent_pol: Bb84State::H, bob_basis: None, lost_onward: false, lost_return: false }
    }
}

/// One terminal branch of a round.
#[derive(Clone, Debug, PartialEq)]
pub struct Leaf<T> {
    pub outcome: Outcome,
    pub probability: T,
    pub bob_clicked: bool,
    /// Bob's single-photon readout in `KernelKey::bob_basis`.
    pub bob_result: Option<Bb84State>,
    /// Eve's residual probe state.
    pub probe: Option<ProbeState<T>>,
    /// Eve's POVM probabilities `[N, Y, inconclusive]` on D1 leaves.
    pub eve: Option<[T; 3]>,
}

/// The full outcome distribution of a round given its [`KernelKey`].
#[derive(Clone, Debug, PartialEq)]
pub struct RoundKernel<T> {
    pub key: KernelKey,
    pub leaves: Vec<Leaf<T>>,
}

/// Fixed per-session inputs to the round evolution.
#[derive(Clone, Debug)]
pub struct KernelContext<T> {
    pub bs: BeamsplitterParams<T>,
    pub attack: AttackModel<T>,
    pub povm: Option<Povm<T>>,
}

impl<T: Scalar> KernelContext<T> {
    pub fn new(bs: BeamsplitterParams<T>, attack: AttackModel<T>) -> Result<Self> {
        let povm = attack.eve_povm()?;
        Ok(KernelContext { bs, attack, povm })
    }

    fn probe_dim(&self) -> usize {
        self.attack.probe_dim()
    }
}

/// State after both parties acted, with who clicked.
#[derive(Clone, Debug, PartialEq)]
pub struct PartyBranch<T> {
    pub weight: T,
    pub state: SystemState<T>,
    pub alice_clicks: u8,
    pub bob_clicks: u8,
    pub bob_result: Option<Bb84State>,
}

fn discard_arm<T: Scalar>(branches: Vec<PartyBranch<T>>, arm: Arm) -> Vec<PartyBranch<T>> {
    branches
        .into_iter()
        .flat_map(|b| {
            b.state.measure_arm(arm, None).into_iter().map(move |r| PartyBranch {
                weight: b.weight * r.probability,
                state: r.state,
                ..b.clone()
            })
        })
        .filter(|b| b.weight > T::zero())
        .collect()
}

/// Evolves the round up to (and including) both parties' switch actions.
/// Eve's reference polarization is horizontal: she tunes her probe to the
/// fixed state the protocol sends by default.
pub fn party_branches<T: Scalar>(ctx: &KernelContext<T>, key: &KernelKey) -> Result<Vec<PartyBranch<T>>> {
    let reference = Polarization::horizontal();
    let pol = key.sent_pol.polarization::<T>();
    let start = initial_state(&ctx.bs, &pol, ctx.probe_dim())?;
    let mut branches =
        vec![PartyBranch { weight: T::one(), state: start, alice_clicks: 0, bob_clicks: 0, bob_result: None }];
    if key.lost_onward {
        branches = discard_arm(branches, Arm::B);
    }
    for b in &mut branches {
        b.state = ctx.attack.onward(&b.state, &reference)?;
    }
    if key.settings.alice == Switch::A {
        branches = branches
            .into_iter()
            .flat_map(|b| {
                b.state.measure_arm(Arm::A, None).into_iter().map(move |r| PartyBranch {
                    weight: b.weight * r.probability,
                    state: r.state,
                    alice_clicks: b.alice_clicks + r.occupation[0] + r.occupation[1],
                    ..b.clone()
                })
            })
            .filter(|b| b.weight > T::zero())
            .collect();
    }
    if key.settings.bob == Switch::A {
        let frame = key.bob_basis.map(|basis| basis.frame::<T>());
        branches = branches
            .into_iter()
            .flat_map(|b| {
                b.state.measure_arm(Arm::B, frame).into_iter().map(move |r| {
                    let n = r.occupation[0] + r.occupation[1];
                    let bob_result = match (key.bob_basis, r.occupation) {
                        (Some(basis), [1, 0]) => Some(basis.states()[0]),
                        (Some(basis), [0, 1]) => Some(basis.states()[1]),
                        _ => None,
                    };
                    PartyBranch {
                        weight: b.weight * r.probability,
                        state: r.state,
                        bob_clicks: b.bob_clicks + n,
                        bob_result,
                        ..b.clone()
                    }
                })
            })
            .filter(|b| b.weight > T::zero())
            .collect();
    }
    Ok(branches)
}

fn classify(settings: Settings, alice_clicks: u8, bob_clicks: u8, detection: Detection) -> Outcome {
    let det = match detection {
        Detection::NoPhoton => 0,
        Detection::D1 | Detection::D2 => 1,
        Detection::MultiCount => 2,
    };
    let total = alice_clicks + bob_clicks + det;
    if total >= 2 {
        return Outcome::MultiCount;
    }
    if settings == Settings::AA || total == 0 {
        return Outcome::Null;
    }
    match detection {
        Detection::D1 => Outcome::D1,
        Detection::D2 => Outcome::D2,
        _ if alice_clicks > 0 => Outcome::AliceAbsorb,
        _ => Outcome::BobAbsorb,
    }
}

/// Exact outcome distribution of a round.
pub fn round_kernel<T: Scalar>(ctx: &KernelContext<T>, key: KernelKey) -> Result<RoundKernel<T>> {
    let reference = Polarization::horizontal();
    let mut branches = party_branches(ctx, &key)?;
    for b in &mut branches {
        b.state = ctx.attack.return_leg(&b.state, &reference)?;
    }
    if key.lost_return {
        branches = discard_arm(branches, Arm::B);
    }
    let mut leaves = Vec::new();
    for b in branches {
        for d in recombine(&b.state, &ctx.bs).branches {
            let probability = b.weight * d.probability;
            if probability <= T::zero() {
                continue;
            }
            let outcome = classify(key.settings, b.alice_clicks, b.bob_clicks, d.detection);
            let eve = match (&ctx.povm, outcome) {
                (Some(povm), Outcome::D1) => Some(povm.probabilities(&d.probe)),
                _ => None,
            };
            leaves.push(Leaf {
                outcome,
                probability,
                bob_clicked: b.bob_clicks > 0,
                bob_result: b.bob_result,
                probe: Some(d.probe),
                eve,
            });
        }
    }
    Ok(RoundKernel { key, leaves })
}

impl<T: Scalar> RoundKernel<T> {
    pub fn probability(&self, outcome: Outcome) -> T {
        self.leaves.iter().filter(|l| l.outcome == outcome).fold(T::zero(), |a, l| a + l.probability)
    }

    pub fn total(&self) -> T {
        self.leaves.iter().fold(T::zero(), |a, l| a + l.probability)
    }

    /// Picks a leaf by inverse CDF on a uniform draw in `[0, 1)`.
    pub fn sample(&self, u: f64) -> &Leaf<T> {
        let mut acc = 0.0;
        for leaf in &self.leaves {
            acc += leaf.probability.as_f64();
            if u < acc {
                return leaf;
            }
        }
        self.leaves.last().expect("a round kernel always has at least one leaf")
    }
}
