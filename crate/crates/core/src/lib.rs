//! Downlink performance of an IRS-assisted MISO link under oscillator phase
//! noise: channel model, pilot-based MMSE estimation, closed-form averaged
//! SNR and Monte Carlo validation.
//!
//! The numerical code is generic over the scalar ([`Real`] is implemented for
//! `f32` and `f64`); the aliases at the crate root fix it to `f64`.

pub mod channel;
pub mod closed_form;
pub mod config;
pub mod downlink;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod moments;
pub mod montecarlo;
pub mod phase_noise;
pub mod real;
pub mod rng;
pub mod stats;
pub mod uplink;

pub use config::{validate, SystemConfig};
pub use downlink::IrsMode;
pub use montecarlo::{Fidelity, McRunner};
pub use error::{ConfigError, Error, Result};
pub use real::Real;
pub use rng::StreamKey;

pub type Params = config::DerivedParams<f64>;
pub type Matrix = channel::CMatrix<f64>;
pub type Vector = channel::CVector<f64>;
pub type Trajectories = phase_noise::PhaseTrajectories<f64>;
pub type Schedule = uplink::PilotSchedule<f64>;
pub type Estimator = estimator::MmseEstimator<f64>;
pub type Estimate = estimator::ChannelEstimate<f64>;
