//! Eavesdropper models acting on the exposed arm B and Eve's probe.
//!
//! Two attack families are modeled:
//!
//! - a general incoherent attack that may create or remove photons in arm B
//!   while entangling the probe ([`GeneralIncoherentParams`]);
//! - a photon-number-preserving attack that only correlates the probe with
//!   photon presence in arm B ([`NumberPreservingParams`]).
//!
//! After Alice announces her D1 rounds, Eve reads her probe with the optimal
//! unambiguous-discrimination measurement ([`Povm`]).

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fockstate::{
    complete_basis, Arm, ArmProbeOperator, Polarization, ProbeOperator, ProbeState, SystemState,
};
use crate::{tolerance, QkdError, Result, Scalar};

/// Eve's action on the return leg of the number-preserving attack.
#[derive(Clone, Debug, PartialEq)]
pub enum ReturnLeg<T> {
    /// Leave the probe as it is after the onward leg.
    None,
    /// Apply the inverse of the onward unitary.
    Unattack,
    /// Apply `|00><00| (x) u0 + (photon present) (x) u1`.
    General { u0: ProbeOperator<T>, u1: ProbeOperator<T> },
}

/// Number-preserving attack: `|00><00|_B (x) U0 + (|01><01| + |10><10|)_B (x) U1`
/// with `<Y|N> = cos(theta)`, `|N> = U0|0>`, `|Y> = U1|0>`.
///
/// The concrete unitaries are `U0 = 1` and `U1` a rotation by `theta` in the
/// plane of probe basis vectors 0 and 1, so `|N> = |0>` and
/// `|Y> = cos(theta)|0> + sin(theta)|1>`.
#[derive(Clone, Debug, PartialEq)]
pub struct NumberPreservingParams<T> {
    theta: T,
    return_leg: ReturnLeg<T>,
    probe_dim: usize,
}

impl<T: Scalar> NumberPreservingParams<T> {
    pub fn new(theta: T, return_leg: ReturnLeg<T>) -> Result<Self> {
        Self::with_probe_dim(theta, return_leg, crate::fockstate::DEFAULT_PROBE_DIM)
    }

    pub fn with_probe_dim(theta: T, return_leg: ReturnLeg<T>, probe_dim: usize) -> Result<Self> {
        if !(theta >= T::zero() && theta <= T::FRAC_PI_2()) {
            return Err(QkdError::param(format!("theta = {theta} must lie in [0, pi/2]")));
        }
        if probe_dim < 2 {
            return Err(QkdError::param("number-preserving attack needs a probe of dimension >= 2"));
        }
        if let ReturnLeg::General { u0, u1 } = &return_leg {
            let tol = tolerance::<T>(1e-10);
            if u0.dim() != probe_dim || u1.dim() != probe_dim {
                return Err(QkdError::DimensionMismatch { left: u0.dim().max(u1.dim()), right: probe_dim });
            }
            if !u0.is_unitary(tol) || !u1.is_unitary(tol) {
                return Err(QkdError::param("return-leg probe operators must be unitary"));
            }
        }
        Ok(NumberPreservingParams { theta, return_leg, probe_dim })
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn return_leg(&self) -> &ReturnLeg<T> {
        &self.return_leg
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_dim
    }

    pub fn u0(&self) -> ProbeOperator<T> {
        ProbeOperator::identity(self.probe_dim)
    }

    pub fn u1(&self) -> ProbeOperator<T> {
        ProbeOperator::planar_rotation(self.probe_dim, 0, 1, self.theta)
    }

    /// `|N> = U0|0>`, the probe state correlated with an empty arm B.
    pub fn n_state(&self) -> ProbeState<T> {
        self.u0().apply(&ProbeState::basis(self.probe_dim, 0))
    }

    /// `|Y> = U1|0>`, the probe state correlated with a photon in arm B.
    pub fn y_state(&self) -> ProbeState<T> {
        self.u1().apply(&ProbeState::basis(self.probe_dim, 0))
    }

    /// Return-leg operators `(U0', U1')`.
    pub fn return_operators(&self) -> (ProbeOperator<T>, ProbeOperator<T>) {
        match &self.return_leg {
            ReturnLeg::None => (ProbeOperator::identity(self.probe_dim), ProbeOperator::identity(self.probe_dim)),
            ReturnLeg::Unattack => (self.u0().adjoint(), self.u1().adjoint()),
            ReturnLeg::General { u0, u1 } => (u0.clone(), u1.clone()),
        }
    }

    /// `(|N'>, |Y'>) = (U0'U0|0>, U1'U1|0>)`: the probe states Eve holds in
    /// the D1-eligible branches once both legs are done.
    pub fn final_states(&self) -> (ProbeState<T>, ProbeState<T>) {
        let (r0, r1) = self.return_operators();
        (r0.apply(&self.n_state()), r1.apply(&self.y_state()))
    }

    /// `U0'U1|0>`: the probe state after Bob absorbed a photon that was
    /// present on the onward leg.
    pub fn y_tilde(&self) -> ProbeState<T> {
        self.return_operators().0.apply(&self.y_state())
    }
}

fn photon_controlled<T: Scalar>(
    state: &SystemState<T>,
    vacuum_op: &ProbeOperator<T>,
    photon_op: &ProbeOperator<T>,
) -> Result<SystemState<T>> {
    state.apply_probe_conditional(|k| {
        if k.arm_photons(Arm::B) == 0 {
            Some(vacuum_op)
        } else {
            Some(photon_op)
        }
    })
}

/// Onward-leg number-preserving attack on arm B.
pub fn apply_number_preserving<T: Scalar>(
    state: &SystemState<T>,
    p: &NumberPreservingParams<T>,
) -> Result<SystemState<T>> {
    photon_controlled(state, &p.u0(), &p.u1())
}

/// Return-leg action of the number-preserving attack.
pub fn apply_return_leg<T: Scalar>(state: &SystemState<T>, p: &NumberPreservingParams<T>) -> Result<SystemState<T>> {
    let (r0, r1) = p.return_operators();
    photon_controlled(state, &r0, &r1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncoherentReturn {
    None,
    Unattack,
}

/// What `|1perp>` means in the incoherent attack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerpOne {
    /// `|1perp> = |0>`: Eve may remove the photon.
    Vacuum,
    /// `|1perp>` is two photons in the reference polarization.
    TwoPhoton,
}

/// General incoherent attack on arm B with a fixed reference polarization:
///
/// ```text
/// |0>_B|0>_E -> a00 |0>_B |e00> + a0p |0perp>_B |e0p>
/// |1>_B|0>_E -> a10 |1>_B |e10> + a1p |1perp>_B |e1p>
/// ```
///
/// `|0perp>` is one photon in the reference polarization. The map is
/// completed to a unitary on arm B (x) probe by orthonormal extension; a
/// photon in the polarization orthogonal to the reference passes untouched.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralIncoherentParams<T> {
    pub a00: Complex<T>,
    pub a0p: Complex<T>,
    pub a10: Complex<T>,
    pub a1p: Complex<T>,
    pub eps00: ProbeState<T>,
    pub eps0p: ProbeState<T>,
    pub eps10: ProbeState<T>,
    pub eps1p: ProbeState<T>,
    pub return_leg: IncoherentReturn,
    pub perp_one: PerpOne,
}

impl<T: Scalar> GeneralIncoherentParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a00: Complex<T>,
        a0p: Complex<T>,
        a10: Complex<T>,
        a1p: Complex<T>,
        eps: [ProbeState<T>; 4],
        return_leg: IncoherentReturn,
        perp_one: PerpOne,
    ) -> Result<Self> {
        let tol = tolerance::<T>(1e-12);
        if (a00.norm_sqr() + a0p.norm_sqr() - T::one()).abs() > tol {
            return Err(QkdError::param("|a00|^2 + |a0p|^2 must equal 1"));
        }
        if (a10.norm_sqr() + a1p.norm_sqr() - T::one()).abs() > tol {
            return Err(QkdError::param("|a10|^2 + |a1p|^2 must equal 1"));
        }
        let [eps00, eps0p, eps10, eps1p] = eps;
        let dim = eps00.dim();
        for e in [&eps0p, &eps10, &eps1p] {
            if e.dim() != dim {
                return Err(QkdError::DimensionMismatch { left: e.dim(), right: dim });
            }
        }
        for e in [&eps00, &eps0p, &eps10, &eps1p] {
            if (e.norm_sqr() - T::one()).abs() > tolerance::<T>(1e-10) {
                return Err(QkdError::param("probe states must be unit vectors"));
            }
        }
        let params = GeneralIncoherentParams { a00, a0p, a10, a1p, eps00, eps0p, eps10, eps1p, return_leg, perp_one };
        // Unitarity is a property of the amplitudes and probes alone.
        params.onward_operator(&Polarization::horizontal())?;
        Ok(params)
    }

    /// Real, non-negative amplitudes `a0p`, `a1p` with the standard probe
    /// layout `e00 = |0>`, `e0p = |2>`, `e10 = cos(theta)|0> + sin(theta)|1>`,
    /// `e1p = |3>`, so that `<e10|e00> = cos(theta)`.
    pub fn standard(
        alpha0p: T,
        alpha1p: T,
        theta: T,
        return_leg: IncoherentReturn,
        perp_one: PerpOne,
        probe_dim: usize,
    ) -> Result<Self> {
        if probe_dim < 4 {
            return Err(QkdError::param("incoherent attack needs a probe of dimension >= 4"));
        }
        for (name, a) in [("alpha0p", alpha0p), ("alpha1p", alpha1p)] {
            if !(a >= T::zero() && a <= T::one()) {
                return Err(QkdError::param(format!("{name} = {a} must lie in [0, 1]")));
            }
        }
        if !(theta >= T::zero() && theta <= T::FRAC_PI_2()) {
            return Err(QkdError::param(format!("theta = {theta} must lie in [0, pi/2]")));
        }
        let re = |x: T| Complex::new(x, T::zero());
        Self::new(
            re((T::one() - alpha0p * alpha0p).max(T::zero()).sqrt()),
            re(alpha0p),
            re((T::one() - alpha1p * alpha1p).max(T::zero()).sqrt()),
            re(alpha1p),
            [
                ProbeState::basis(probe_dim, 0),
                ProbeState::basis(probe_dim, 2),
                ProbeState::planar(probe_dim, 0, 1, theta),
                ProbeState::basis(probe_dim, 3),
            ],
            return_leg,
            perp_one,
        )
    }

    pub fn probe_dim(&self) -> usize {
        self.eps00.dim()
    }

    /// The completed onward unitary on arm B (x) probe for photons whose
    /// polarization Eve assumes to be `reference`.
    pub fn onward_operator(&self, reference: &Polarization<T>) -> Result<ArmProbeOperator<T>> {
        let d = self.probe_dim();
        let mut sectors = vec![[0u8, 0u8], [1, 0], [0, 1]];
        if self.perp_one == PerpOne::TwoPhoton {
            sectors.extend([[2, 0], [1, 1], [0, 2]]);
        }
        let dim = sectors.len() * d;
        let at = |sector: [u8; 2]| sectors.iter().position(|s| *s == sector).expect("sector present");
        let local = |terms: &[([u8; 2], Complex<T>)], probe: &ProbeState<T>| {
            let mut v = vec![Complex::zero(); dim];
            for (sector, a) in terms {
                for (p, e) in probe.amplitudes().iter().enumerate() {
                    v[at(*sector) * d + p] = v[at(*sector) * d + p] + a * e;
                }
            }
            v
        };
        let scale = |v: Vec<Complex<T>>, a: Complex<T>| v.into_iter().map(|x| x * a).collect::<Vec<_>>();
        let add = |u: Vec<Complex<T>>, w: Vec<Complex<T>>| u.into_iter().zip(w).map(|(x, y)| x + y).collect::<Vec<_>>();

        let (al, be) = (reference.alpha(), reference.beta());
        let perp = reference.orthogonal();
        let vac = [([0u8, 0u8], Complex::new(T::one(), T::zero()))];
        let one = [([1u8, 0u8], al), ([0, 1], be)];
        let one_perp = [([1u8, 0u8], perp.alpha()), ([0, 1], perp.beta())];
        let two = [([2u8, 0u8], al * al), ([1, 1], al * be * T::SQRT_2()), ([0, 2], be * be)];
        let e0 = ProbeState::basis(d, 0);

        let inputs = vec![local(&vac, &e0), local(&one, &e0), local(&one_perp, &e0)];
        let one_perp_image: &[([u8; 2], Complex<T>)] = match self.perp_one {
            PerpOne::Vacuum => &vac,
            PerpOne::TwoPhoton => &two,
        };
        let outputs = vec![
            add(scale(local(&vac, &self.eps00), self.a00), scale(local(&one, &self.eps0p), self.a0p)),
            add(scale(local(&one, &self.eps10), self.a10), scale(local(one_perp_image, &self.eps1p), self.a1p)),
            local(&one_perp, &e0),
        ];
        let tol = tolerance::<T>(1e-10);
        let inputs = complete_basis(&inputs, dim, tol)?;
        let outputs = complete_basis(&outputs, dim, tol).map_err(|e| match e {
            QkdError::InvalidParameter(msg) => {
                QkdError::param(format!("incoherent attack images are not orthonormal: {msg}"))
            }
            other => other,
        })?;
        ArmProbeOperator::from_basis_map(Arm::B, d, sectors, &inputs, &outputs)
    }
}

/// Onward-leg incoherent attack for a photon of polarization `reference`.
pub fn apply_general_incoherent<T: Scalar>(
    state: &SystemState<T>,
    p: &GeneralIncoherentParams<T>,
    reference: &Polarization<T>,
) -> Result<SystemState<T>> {
    p.onward_operator(reference)?.apply(state)
}

/// Eve's attack strategy for a session.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum AttackModel<T> {
    #[default]
    None,
    GeneralIncoherent(GeneralIncoherentParams<T>),
    NumberPreserving(NumberPreservingParams<T>),
}

impl<T: Scalar> AttackModel<T> {
    pub fn name(&self) -> &'static str {
        match self {
            AttackModel::None => "none",
            AttackModel::GeneralIncoherent(_) => "incoherent",
            AttackModel::NumberPreserving(_) => "number-preserving",
        }
    }

    /// Minimum probe dimension the model needs.
    pub fn probe_dim(&self) -> usize {
        match self {
            AttackModel::None => 1,
            AttackModel::GeneralIncoherent(p) => p.probe_dim(),
            AttackModel::NumberPreserving(p) => p.probe_dim(),
        }
    }

    /// Eve's interaction as the photon heads to Bob.
    pub fn onward(&self, state: &SystemState<T>, reference: &Polarization<T>) -> Result<SystemState<T>> {
        match self {
            AttackModel::None => Ok(state.clone()),
            AttackModel::GeneralIncoherent(p) => apply_general_incoherent(state, p, reference),
            AttackModel::NumberPreserving(p) => apply_number_preserving(state, p),
        }
    }

    /// Eve's interaction as arm B heads back to Alice.
    pub fn return_leg(&self, state: &SystemState<T>, reference: &Polarization<T>) -> Result<SystemState<T>> {
        match self {
            AttackModel::None => Ok(state.clone()),
            AttackModel::GeneralIncoherent(p) => match p.return_leg {
                IncoherentReturn::None => Ok(state.clone()),
                IncoherentReturn::Unattack => p.onward_operator(reference)?.adjoint().apply(state),
            },
            AttackModel::NumberPreserving(p) => apply_return_leg(state, p),
        }
    }

    /// The measurement Eve applies to her probe in announced D1 rounds, if
    /// she has a pair of states to discriminate.
    pub fn eve_povm(&self) -> Result<Option<Povm<T>>> {
        match self {
            AttackModel::None => Ok(None),
            AttackModel::GeneralIncoherent(p) => match p.return_leg {
                IncoherentReturn::None => Povm::unambiguous(&p.eps00, &p.eps10).map(Some),
                IncoherentReturn::Unattack => Ok(None),
            },
            AttackModel::NumberPreserving(p) => {
                let (n, y) = p.final_states();
                Povm::unambiguous(&n, &y).map(Some)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PovmOutcome {
    ConclusiveN,
    ConclusiveY,
    Inconclusive,
}

/// Optimal unambiguous discrimination of `|N>` and `|Y>`:
///
/// ```text
/// M_N = (1 - |Y><Y|) / (1 + |<N|Y>|)
/// M_Y = (1 - |N><N|) / (1 + |<N|Y>|)
/// M_inconcl = 1 - M_N - M_Y
/// ```
///
/// with `1` the projector onto `span{|N>, |Y>}`. Outside that span every
/// outcome is inconclusive.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm<T> {
    n: ProbeState<T>,
    y: ProbeState<T>,
    m_n: ProbeOperator<T>,
    m_y: ProbeOperator<T>,
    m_inconclusive: ProbeOperator<T>,
}

fn outer_sum<T: Scalar>(dim: usize, terms: &[(T, &[Complex<T>])]) -> ProbeOperator<T> {
    let rows = (0..dim)
        .map(|r| {
            (0..dim)
                .map(|c| terms.iter().fold(Complex::zero(), |acc, (w, v)| acc + v[r] * v[c].conj() * *w))
                .collect()
        })
        .collect();
    ProbeOperator::from_rows(rows).expect("square by construction")
}

impl<T: Scalar> Povm<T> {
    pub fn unambiguous(n: &ProbeState<T>, y: &ProbeState<T>) -> Result<Self> {
        if n.dim() != y.dim() {
            return Err(QkdError::DimensionMismatch { left: n.dim(), right: y.dim() });
        }
        let tol = tolerance::<T>(1e-10);
        for s in [n, y] {
            if (s.norm_sqr() - T::one()).abs() > tol {
                return Err(QkdError::param("POVM states must be unit vectors"));
            }
        }
        let dim = n.dim();
        let ny = n.inner(y);
        let c = ny.norm();
        let resid: Vec<Complex<T>> = y.amplitudes().iter().zip(n.amplitudes()).map(|(yv, nv)| yv - nv * ny).collect();
        let rn = resid.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr()).sqrt();
        let b1: Vec<Complex<T>> = resid.iter().map(|x| *x / rn).collect();
        let mut span: Vec<(T, &[Complex<T>])> = vec![(T::one(), n.amplitudes())];
        if rn > tol {
            span.push((T::one(), &b1));
        }
        let w = T::one() / (T::one() + c);
        let neg = -w;
        let mut terms_n = span.iter().map(|(_, v)| (w, *v)).collect::<Vec<_>>();
        terms_n.push((neg, y.amplitudes()));
        let mut terms_y = span.iter().map(|(_, v)| (w, *v)).collect::<Vec<_>>();
        terms_y.push((neg, n.amplitudes()));
        let m_n = outer_sum(dim, &terms_n);
        let m_y = outer_sum(dim, &terms_y);
        // M_inconcl restricted to the span: P - M_N - M_Y.
        let mut inc_terms: Vec<(T, &[Complex<T>])> = span.clone();
        inc_terms.extend(terms_n.iter().map(|(w, v)| (-*w, *v)));
        inc_terms.extend(terms_y.iter().map(|(w, v)| (-*w, *v)));
        let m_inconclusive = outer_sum(dim, &inc_terms);

        let povm = Povm { n: n.clone(), y: y.clone(), m_n, m_y, m_inconclusive };
        povm.check_positive(&span, tol)?;
        Ok(povm)
    }

    fn check_positive(&self, span: &[(T, &[Complex<T>])], tol: T) -> Result<()> {
        for op in [&self.m_n, &self.m_y, &self.m_inconclusive] {
            // Hermitian 2x2 (or 1x1) block in the span basis must be PSD.
            let vecs: Vec<ProbeState<T>> = span.iter().map(|(_, v)| ProbeState::normalized_from(v.to_vec())).collect();
            let g = |i: usize, j: usize| crate::fockstate::ProbeState::inner(&vecs[i], &op.apply(&vecs[j]));
            let (trace, det) = if vecs.len() == 1 {
                (g(0, 0).re, g(0, 0).re)
            } else {
                (g(0, 0).re + g(1, 1).re, (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)).re)
            };
            if trace < -tol || det < -tol {
                return Err(QkdError::Internal("POVM element is not positive semidefinite".into()));
            }
        }
        Ok(())
    }

    pub fn n_state(&self) -> &ProbeState<T> {
        &self.n
    }

    pub fn y_state(&self) -> &ProbeState<T> {
        &self.y
    }

    /// `(M_N, M_Y, M_inconcl)`; the last is restricted to the span of the two states.
    pub fn elements(&self) -> (&ProbeOperator<T>, &ProbeOperator<T>, &ProbeOperator<T>) {
        (&self.m_n, &self.m_y, &self.m_inconclusive)
    }

    /// Born probabilities `[P(N), P(Y), P(inconclusive)]` for a unit probe state.
    pub fn probabilities(&self, probe: &ProbeState<T>) -> [T; 3] {
        let pn = self.m_n.expectation(probe).re.max(T::zero());
        let py = self.m_y.expectation(probe).re.max(T::zero());
        let pi = (probe.norm_sqr() - pn - py).max(T::zero());
        [pn, py, pi]
    }

    /// Samples an outcome using one uniform draw `u` in `[0, 1)`.
    pub fn sample(&self, probe: &ProbeState<T>, u: f64) -> PovmOutcome {
        outcome_from_uniform(self.probabilities(probe).map(|p| p.as_f64()), u)
    }

    pub fn measure<R: Rng + ?Sized>(&self, probe: &ProbeState<T>, rng: &mut R) -> PovmOutcome {
        self.sample(probe, rng.gen::<f64>())
    }
}

pub(crate) fn outcome_from_uniform(p: [f64; 3], u: f64) -> PovmOutcome {
    if u < p[0] {
        PovmOutcome::ConclusiveN
    } else if u < p[0] + p[1] {
        PovmOutcome::ConclusiveY
    } else {
        PovmOutcome::Inconclusive
    }
}

/// Measures `probe` with the discrimination POVM for the canonical pair
/// `|N> = |0>`, `|Y> = cos(theta)|0> + sin(theta)|1>`.
pub fn povm_measure<T: Scalar, R: Rng + ?Sized>(probe: &ProbeState<T>, theta: T, rng: &mut R) -> Result<PovmOutcome> {
    let p = NumberPreservingParams::with_probe_dim(theta, ReturnLeg::None, probe.dim())?;
    Ok(Povm::unambiguous(&p.n_state(), &p.y_state())?.measure(probe, rng))
}

/// Probability of a conclusive read-out, `1 - cos(theta)`.
pub fn conclusive_probability<T: Scalar>(theta: T) -> T {
    T::one() - theta.cos()
}

/// Eve's bit guess. `|N>` marks an empty arm B on both legs, which happens
/// in D1 rounds only when Bob absorbed, i.e. bit 1.
pub fn eve_guess(outcome: PovmOutcome) -> Option<u8> {
    match outcome {
        PovmOutcome::ConclusiveN => Some(1),
        PovmOutcome::ConclusiveY => Some(0),
        PovmOutcome::Inconclusive => None,
    }
}
