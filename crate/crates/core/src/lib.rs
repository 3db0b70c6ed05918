//! Simulator and security analyzer for semi-counterfactual quantum key
//! distribution over a Michelson-type interferometer.
//!
//! The crate is organized bottom-up:
//!
//! - [`fockstate`]: truncated Fock-space states, optical elements and
//!   projective measurements on the two interferometer arms plus a probe.
//! - [`adversary`]: eavesdropper attack models and the unambiguous
//!   discrimination measurement on the probe.
//! - [`protocol`]: per-round execution, sessions, sifting and Trojan-horse
//!   checks.
//! - [`analysis`]: closed-form security quantities, count estimators and the
//!   tolerable-error threshold.
//! - [`harness`]: configuration, orchestration and machine-readable outputs
//!   for the `scqkd` command-line tool.
//!
//! The numerical core is generic over the real scalar type (`f32` or `f64`).
//! The aliases below fix it to `f64`, which is what the protocol harness uses.

pub mod adversary;
pub mod analysis;
pub mod error;
pub mod fockstate;
pub mod harness;
pub mod protocol;
pub mod rng;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst};

pub use error::{QkdError, Result};

/// Real scalar type the numerical core is written against.
pub trait Scalar: Float + FloatConst + Debug + Display + Default + Send + Sync + 'static {
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from(x).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl<T> Scalar for T where T: Float + FloatConst + Debug + Display + Default + Send + Sync + 'static {}

pub type Amplitude = num_complex::Complex<f64>;
pub type Polarization = fockstate::Polarization<f64>;
pub type BeamsplitterParams = fockstate::BeamsplitterParams<f64>;
pub type SystemState = fockstate::SystemState<f64>;
pub type ProbeState = fockstate::ProbeState<f64>;
pub type ProbeOperator = fockstate::ProbeOperator<f64>;
pub type MeasurementBranch = fockstate::MeasurementBranch<f64>;
pub type AttackModel = adversary::AttackModel<f64>;
pub type NumberPreservingParams = adversary::NumberPreservingParams<f64>;
pub type GeneralIncoherentParams = adversary::GeneralIncoherentParams<f64>;
pub type Povm = adversary::Povm<f64>;
pub type SessionConfig = protocol::SessionConfig<f64>;
pub type RoundKernel = protocol::RoundKernel<f64>;
pub type SecurityPoint = analysis::SecurityPoint<f64>;
pub type SecurityCurve = analysis::SecurityCurve<f64>;
pub type OutcomeTable = analysis::OutcomeTable<f64>;

/// `x` for `f64`; widened to a few ulps of the scalar type when that is coarser.
pub(crate) fn tolerance<T: Scalar>(x: f64) -> T {
    T::lit(x).max(T::epsilon() * T::lit(64.0))
}
