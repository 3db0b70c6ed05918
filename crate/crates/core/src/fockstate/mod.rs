//! Exact state-vector engine for the interferometer.
//!
//! A [`SystemState`] is a sparse superposition of [`BasisKet`]s: photon
//! occupations of the H and V modes of arm A (Alice) and arm B (Bob), times a
//! basis index of Eve's probe. The Fock space is truncated at
//! [`MAX_PHOTONS`] photons in total.

mod linalg;
mod local;
mod modes;
mod probe;

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Zero;

pub use local::ArmProbeOperator;
pub use modes::{ModeTransform, MODES};
pub use probe::{ProbeOperator, ProbeState};

pub(crate) use linalg::complete_basis;

use crate::{tolerance, QkdError, Result, Scalar};

/// Photon-number truncation of the Fock space.
pub const MAX_PHOTONS: u8 = 2;

/// Probe dimension used unless configured otherwise.
pub const DEFAULT_PROBE_DIM: usize = 4;

/// Amplitudes with modulus below this are dropped after each operation.
pub const PRUNE_EPS: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    A,
    B,
}

impl Arm {
    /// Mode slots `[H, V]` of this arm.
    pub fn modes(self) -> [usize; 2] {
        match self {
            Arm::A => [0, 1],
            Arm::B => [2, 3],
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::A => Arm::B,
            Arm::B => Arm::A,
        }
    }
}

/// Single-photon polarization `alpha|H> + beta|V>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polarization<T> {
    alpha: Complex<T>,
    beta: Complex<T>,
}

impl<T: Scalar> Polarization<T> {
    pub fn new(alpha: Complex<T>, beta: Complex<T>) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - T::one()).abs() > tolerance::<T>(1e-12) {
            return Err(QkdError::param(format!("|alpha|^2 + |beta|^2 = {n}, expected 1")));
        }
        Ok(Polarization { alpha, beta })
    }

    pub fn horizontal() -> Self {
        Polarization { alpha: Complex::new(T::one(), T::zero()), beta: Complex::zero() }
    }

    pub fn vertical() -> Self {
        Polarization { alpha: Complex::zero(), beta: Complex::new(T::one(), T::zero()) }
    }

    /// `(|H> + sign |V>)/sqrt(2)`.
    pub fn diagonal(sign: T) -> Self {
        let s = T::FRAC_1_SQRT_2();
        Polarization { alpha: Complex::new(s, T::zero()), beta: Complex::new(sign * s, T::zero()) }
    }

    pub fn alpha(&self) -> Complex<T> {
        self.alpha
    }

    pub fn beta(&self) -> Complex<T> {
        self.beta
    }

    /// The orthogonal polarization `-beta*|H> + alpha*|V>`.
    pub fn orthogonal(&self) -> Self {
        Polarization { alpha: -self.beta.conj(), beta: self.alpha.conj() }
    }
}

/// Transmittance and reflectance of Alice's beamsplitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamsplitterParams<T> {
    transmittance: T,
    reflectance: T,
}

impl<T: Scalar> BeamsplitterParams<T> {
    pub fn new(transmittance: T, reflectance: T) -> Result<Self> {
        let in_unit = |x: T| x >= T::zero() && x <= T::one();
        if !in_unit(transmittance) || !in_unit(reflectance) {
            return Err(QkdError::param("T and R must lie in [0, 1]"));
        }
        if (transmittance + reflectance - T::one()).abs() > tolerance::<T>(1e-12) {
            return Err(QkdError::param(format!(
                "T + R = {}, expected 1",
                transmittance + reflectance
            )));
        }
        Ok(BeamsplitterParams { transmittance, reflectance })
    }

    pub fn from_transmittance(transmittance: T) -> Result<Self> {
        Self::new(transmittance, T::one() - transmittance)
    }

    pub fn balanced() -> Self {
        let half = T::lit(0.5);
        BeamsplitterParams { transmittance: half, reflectance: half }
    }

    pub fn transmittance(&self) -> T {
        self.transmittance
    }

    pub fn reflectance(&self) -> T {
        self.reflectance
    }
}

/// One term of the state: mode occupations `[A_H, A_V, B_H, B_V]` and probe index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisKet {
    pub occ: [u8; MODES],
    pub probe: usize,
}

impl BasisKet {
    pub fn new(occ_a: [u8; 2], occ_b: [u8; 2], probe: usize) -> Self {
        BasisKet { occ: [occ_a[0], occ_a[1], occ_b[0], occ_b[1]], probe }
    }

    pub fn vacuum() -> Self {
        BasisKet { occ: [0; MODES], probe: 0 }
    }

    pub fn photons(&self) -> u8 {
        self.occ.iter().sum()
    }

    pub fn arm(&self, arm: Arm) -> [u8; 2] {
        let [h, v] = arm.modes();
        [self.occ[h], self.occ[v]]
    }

    pub fn arm_photons(&self, arm: Arm) -> u8 {
        let [h, v] = self.arm(arm);
        h + v
    }

    pub fn with_arm(mut self, arm: Arm, occ: [u8; 2]) -> Self {
        let [h, v] = arm.modes();
        self.occ[h] = occ[0];
        self.occ[v] = occ[1];
        self
    }

    pub fn with_probe(mut self, probe: usize) -> Self {
        self.probe = probe;
        self
    }
}

/// Sparse pure state over truncated Fock kets tensored with the probe.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState<T> {
    amps: BTreeMap<BasisKet, Complex<T>>,
    probe_dim: usize,
}

impl<T: Scalar> SystemState<T> {
    /// All modes empty, probe in `|0>`.
    pub fn vacuum(probe_dim: usize) -> Result<Self> {
        Self::from_terms(probe_dim, [(BasisKet::vacuum(), Complex::new(T::one(), T::zero()))])
    }

    /// Builds a state from explicit terms. Repeated kets are summed. The
    /// result is not renormalized.
    pub fn from_terms(probe_dim: usize, terms: impl IntoIterator<Item = (BasisKet, Complex<T>)>) -> Result<Self> {
        if probe_dim == 0 {
            return Err(QkdError::param("probe dimension must be >= 1"));
        }
        let mut state = SystemState { amps: BTreeMap::new(), probe_dim };
        for (ket, a) in terms {
            if ket.probe >= probe_dim {
                return Err(QkdError::param(format!("probe index {} >= dimension {probe_dim}", ket.probe)));
            }
            if ket.photons() > MAX_PHOTONS {
                return Err(QkdError::TruncationExceeded { max: MAX_PHOTONS });
            }
            state.accumulate(ket, a);
        }
        state.prune();
        Ok(state)
    }

    pub(crate) fn empty(probe_dim: usize) -> Self {
        SystemState { amps: BTreeMap::new(), probe_dim }
    }

    pub(crate) fn accumulate(&mut self, ket: BasisKet, a: Complex<T>) {
        let e = self.amps.entry(ket).or_insert_with(Complex::zero);
        *e = *e + a;
    }

    pub(crate) fn prune(&mut self) {
        let eps = T::lit(PRUNE_EPS);
        self.amps.retain(|_, a| a.norm() >= eps);
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_dim
    }

    pub fn amplitude(&self, ket: &BasisKet) -> Complex<T> {
        self.amps.get(ket).copied().unwrap_or_else(Complex::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisKet, &Complex<T>)> {
        self.amps.iter()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.values().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// Total weight on kets satisfying `pred`.
    pub fn weight(&self, pred: impl Fn(&BasisKet) -> bool) -> T {
        self.amps.iter().filter(|(k, _)| pred(k)).fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr())
    }

    /// Rescales to unit norm and returns the prior squared norm with it. A
    /// zero state is returned unchanged.
    pub fn renormalized(mut self) -> (T, Self) {
        let n = self.norm_sqr();
        if n > T::zero() {
            let s = n.sqrt();
            self.amps.values_mut().for_each(|a| *a = *a / s);
        }
        (n, self)
    }

    /// Unnormalized projection onto the kets satisfying `pred`.
    pub fn project(&self, pred: impl Fn(&BasisKet) -> bool) -> Self {
        SystemState {
            amps: self.amps.iter().filter(|(k, _)| pred(k)).map(|(k, a)| (*k, *a)).collect(),
            probe_dim: self.probe_dim,
        }
    }

    /// `|| self - other ||`.
    pub fn distance(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for (k, a) in &self.amps {
            acc = acc + (a - other.amplitude(k)).norm_sqr();
        }
        for (k, b) in &other.amps {
            if !self.amps.contains_key(k) {
                acc = acc + b.norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Applies a passive mode transform to every ket.
    pub fn apply_modes(&self, t: &ModeTransform<T>) -> Self {
        let mut out = Self::empty(self.probe_dim);
        for (ket, a) in &self.amps {
            for (occ, c) in t.expand(ket.occ) {
                out.accumulate(BasisKet { occ, probe: ket.probe }, a * c);
            }
        }
        out.prune();
        out
    }

    /// Applies the probe operator selected by each ket's photon configuration.
    /// Kets for which `select` returns `None` are left untouched.
    pub fn apply_probe_conditional<'a>(
        &self,
        select: impl Fn(&BasisKet) -> Option<&'a ProbeOperator<T>>,
    ) -> Result<Self> {
        let mut groups: BTreeMap<[u8; MODES], Vec<Complex<T>>> = BTreeMap::new();
        for (ket, a) in &self.amps {
            let v = groups.entry(ket.occ).or_insert_with(|| vec![Complex::zero(); self.probe_dim]);
            v[ket.probe] = *a;
        }
        let mut out = Self::empty(self.probe_dim);
        for (occ, v) in groups {
            let key = BasisKet { occ, probe: 0 };
            let image = match select(&key) {
                Some(op) => {
                    if op.dim() != self.probe_dim {
                        return Err(QkdError::DimensionMismatch { left: op.dim(), right: self.probe_dim });
                    }
                    op.apply_slice(&v)
                }
                None => v,
            };
            for (p, a) in image.into_iter().enumerate() {
                out.accumulate(BasisKet { occ, probe: p }, a);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Reduced pure probe state when the photonic part is a single ket,
    /// `None` otherwise. The returned state is renormalized.
    pub fn probe_state(&self) -> Option<ProbeState<T>> {
        let mut occ = None;
        let mut v = vec![Complex::zero(); self.probe_dim];
        for (ket, a) in &self.amps {
            match occ {
                None => occ = Some(ket.occ),
                Some(o) if o != ket.occ => return None,
                _ => {}
            }
            v[ket.probe] = *a;
        }
        occ.map(|_| ProbeState::normalized_from(v))
    }

    /// Photon-number-resolving readout of one arm in a polarization frame.
    ///
    /// `frame[out][in]` maps `(H, V)` to the two measured modes; `None` reads
    /// out in `(H, V)` directly. Every branch has the arm emptied (the
    /// photons are consumed by the detector) and is renormalized; the
    /// zero-photon branch comes first when present.
    pub fn measure_arm(&self, arm: Arm, frame: Option<[[Complex<T>; 2]; 2]>) -> Vec<ArmReadout<T>> {
        let rotated = match frame {
            Some(u) => self.apply_modes(&ModeTransform::arm_frame(arm, u)),
            None => self.clone(),
        };
        let mut groups: BTreeMap<[u8; 2], SystemState<T>> = BTreeMap::new();
        for (ket, a) in &rotated.amps {
            let occ = ket.arm(arm);
            groups
                .entry(occ)
                .or_insert_with(|| Self::empty(self.probe_dim))
                .accumulate(ket.with_arm(arm, [0, 0]), *a);
        }
        groups
            .into_iter()
            .map(|(occupation, s)| {
                let (probability, state) = s.renormalized();
                ArmReadout { occupation, probability, state }
            })
            .collect()
    }
}

/// One outcome of a projective measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBranch<T> {
    pub probability: T,
    /// Post-measurement state, renormalized; empty when `probability` is 0.
    pub collapsed: SystemState<T>,
}

/// One outcome of [`SystemState::measure_arm`].
#[derive(Clone, Debug, PartialEq)]
pub struct ArmReadout<T> {
    /// Photon counts in the two measured polarization modes.
    pub occupation: [u8; 2],
    pub probability: T,
    /// Remaining state with the measured arm emptied.
    pub state: SystemState<T>,
}

/// Click pattern at Alice's output detectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Detection {
    D1,
    D2,
    NoPhoton,
    /// Two or more photons reached the detectors.
    MultiCount,
}

/// One photon-number-resolved detector readout after recombination.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionBranch<T> {
    pub detection: Detection,
    /// Photon counts `[D1_H, D1_V, D2_H, D2_V]`.
    pub counts: [u8; MODES],
    pub probability: T,
    /// Probe state conditioned on this readout.
    pub probe: ProbeState<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recombination<T> {
    pub branches: Vec<DetectionBranch<T>>,
}

impl<T: Scalar> Recombination<T> {
    pub fn probability(&self, detection: Detection) -> T {
        self.branches
            .iter()
            .filter(|b| b.detection == detection)
            .fold(T::zero(), |acc, b| acc + b.probability)
    }

    pub fn total(&self) -> T {
        self.branches.iter().fold(T::zero(), |acc, b| acc + b.probability)
    }
}

/// State right after Alice's beamsplitter:
/// `sqrt(T)|00>_A|psi>_B + i sqrt(R)|psi>_A|00>_B`, probe in `|0>`.
pub fn initial_state<T: Scalar>(
    bs: &BeamsplitterParams<T>,
    pol: &Polarization<T>,
    probe_dim: usize,
) -> Result<SystemState<T>> {
    let bs = BeamsplitterParams::new(bs.transmittance(), bs.reflectance())?;
    let t = Complex::new(bs.transmittance().sqrt(), T::zero());
    let ir = Complex::new(T::zero(), bs.reflectance().sqrt());
    SystemState::from_terms(
        probe_dim,
        [
            (BasisKet::new([0, 0], [1, 0], 0), t * pol.alpha()),
            (BasisKet::new([0, 0], [0, 1], 0), t * pol.beta()),
            (BasisKet::new([1, 0], [0, 0], 0), ir * pol.alpha()),
            (BasisKet::new([0, 1], [0, 0], 0), ir * pol.beta()),
        ],
    )
}

/// Absorber on `arm`: splits into "at least one photon in the arm" and
/// "arm empty". The absorbed branch keeps the photon in place, so callers can
/// read out its polarization before discarding it.
pub fn apply_absorber<T: Scalar>(
    state: &SystemState<T>,
    arm: Arm,
) -> (MeasurementBranch<T>, MeasurementBranch<T>) {
    let (pa, absorbed) = state.project(|k| k.arm_photons(arm) > 0).renormalized();
    let (pp, passed) = state.project(|k| k.arm_photons(arm) == 0).renormalized();
    (
        MeasurementBranch { probability: pa, collapsed: absorbed },
        MeasurementBranch { probability: pp, collapsed: passed },
    )
}

/// Faraday mirror on `arm`. Mirror and delay-line phases are common to both
/// arms' paths and are taken as the identity.
pub fn apply_mirror<T: Scalar>(state: &SystemState<T>, _arm: Arm) -> SystemState<T> {
    state.clone()
}

/// Sends both arms back through the beamsplitter and reads out D1/D2 with
/// photon-number resolution. Probabilities are absolute: a sub-normalized
/// input yields a sub-normalized distribution.
pub fn recombine<T: Scalar>(state: &SystemState<T>, bs: &BeamsplitterParams<T>) -> Recombination<T> {
    let out = state.apply_modes(&ModeTransform::recombiner(bs));
    let mut groups: BTreeMap<[u8; MODES], Vec<Complex<T>>> = BTreeMap::new();
    for (ket, a) in out.terms() {
        groups.entry(ket.occ).or_insert_with(|| vec![Complex::zero(); state.probe_dim()])[ket.probe] = *a;
    }
    let branches = groups
        .into_iter()
        .map(|(counts, v)| {
            let d1 = counts[0] + counts[1];
            let d2 = counts[2] + counts[3];
            let detection = match (d1, d2) {
                (0, 0) => Detection::NoPhoton,
                (1, 0) => Detection::D1,
                (0, 1) => Detection::D2,
                _ => Detection::MultiCount,
            };
            let probability = v.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr());
            DetectionBranch { detection, counts, probability, probe: ProbeState::normalized_from(v) }
        })
        .collect();
    Recombination { branches }
}

/// `<s1|s2>`.
pub fn overlap<T: Scalar>(s1: &SystemState<T>, s2: &SystemState<T>) -> Result<Complex<T>> {
    if s1.probe_dim() != s2.probe_dim() {
        return Err(QkdError::DimensionMismatch { left: s1.probe_dim(), right: s2.probe_dim() });
    }
    Ok(s1
        .terms()
        .fold(Complex::zero(), |acc, (k, a)| acc + a.conj() * s2.amplitude(k)))
}
