//! Closed-form averaged SNR and ergodic rate.
//!
//! Everything here is a pure function of the link parameters. The central
//! quantity is the estimate gain
//!
//! ```text
//! eta(t) = beta^2 / (N beta + sigma_u2) * sum_{i=1..N} exp(-(s_BS + s_UE) (t - i))
//! ```
//!
//! which equals `beta` for ideal oscillators and noiseless pilots.

use crate::config::DerivedParams;
use crate::downlink::IrsMode;
use crate::error::{Error, Result};
use crate::real::Real;

/// `eta(t)` together with the inputs it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaValue<T> {
    pub value: T,
    pub t: usize,
    pub elements: usize,
    pub beta_cas: T,
    pub sigma_u2: T,
    pub sigma_bs2: T,
    pub sigma_ue2: T,
}

fn require_after_pilots(t: usize, elements: usize) -> Result<()> {
    if t <= elements {
        return Err(Error::OutOfRange {
            what: "symbol index",
            detail: format!("t = {t} must exceed N = {elements} (downlink follows the pilot block)"),
        });
    }
    Ok(())
}

/// `sum_{i=1..n} exp(-s (t - i))` as a geometric series.
pub fn decay_sum<T: Real>(t: usize, n: usize, s: T) -> T {
    let nn = T::of(n as f64);
    if s == T::zero() {
        return nn;
    }
    let newest = (-s * T::of(t as f64 - n as f64)).exp();
    newest * (-s * nn).exp_m1() / (-s).exp_m1()
}

pub fn eta<T: Real>(t: usize, elements: usize, beta_cas: T, sigma_u2: T, sigma_bs2: T, sigma_ue2: T) -> Result<EtaValue<T>> {
    require_after_pilots(t, elements)?;
    let n = T::of(elements as f64);
    let sum = decay_sum(t, elements, sigma_bs2 + sigma_ue2);
    let value = if sigma_u2 == T::zero() {
        // keeps eta == beta exact for ideal hardware
        beta_cas * (sum / n)
    } else {
        beta_cas * beta_cas / (n * beta_cas + sigma_u2) * sum
    };
    Ok(EtaValue {
        value,
        t,
        elements,
        beta_cas,
        sigma_u2,
        sigma_bs2,
        sigma_ue2,
    })
}

/// `eta(t)` for the link described by `params`.
pub fn eta_at<T: Real>(params: &DerivedParams<T>, t: usize) -> Result<T> {
    eta(
        t,
        params.elements,
        params.beta_cas,
        params.sigma_u2,
        params.sigma_bs2,
        params.sigma_ue2,
    )
    .map(|e| e.value)
}

/// Large-`N` limit of `eta`: `(beta / N) sum_{i=1..N} exp(-(s_BS + s_UE)(t - i))`.
pub fn eta_asymptote<T: Real>(t: usize, elements: usize, beta_cas: T, sigma_bs2: T, sigma_ue2: T) -> Result<T> {
    require_after_pilots(t, elements)?;
    let sum = decay_sum(t, elements, sigma_bs2 + sigma_ue2);
    Ok(beta_cas * (sum / T::of(elements as f64)))
}

/// Increase of the noise-free estimate gain from `N - 1` to `N` elements.
///
/// Written as `beta / (N (N-1)) * e^{-s(t-N)} * sum_{k=1..N-1} (1 - e^{-s k})`,
/// which is the difference of the two normalized sums with the common
/// factor pulled out; every summand is non-negative.
pub fn eta_gap<T: Real>(elements: usize, t: usize, beta_cas: T, sigma_bs2: T, sigma_ue2: T) -> Result<T> {
    if elements < 2 {
        return Err(Error::InvalidArgument(format!("eta gap needs N >= 2, got {elements}")));
    }
    require_after_pilots(t, elements)?;
    let s = sigma_bs2 + sigma_ue2;
    if s == T::zero() {
        return Ok(T::zero());
    }
    let k = T::of((elements - 1) as f64);
    let n = T::of(elements as f64);
    let q = (-s).exp();
    // sum_{k=1..K} (1 - q^k) = K - q (1 - q^K) / (1 - q)
    let tail = k - q * (-s * k).exp_m1() / (-s).exp_m1();
    let newest = (-s * T::of(t as f64 - elements as f64)).exp();
    Ok(beta_cas / (n * k) * newest * tail)
}

/// `E[||H^ phi||^2]` as used for the precoder normalization:
/// `M N eta` (random) or `N^2 pi eta / 4 + (M - 1) N eta` (optimized).
pub fn precoder_norm_sq<T: Real>(mode: IrsMode, antennas: usize, elements: usize, eta: T) -> T {
    let (m, n) = (T::of(antennas as f64), T::of(elements as f64));
    match mode {
        IrsMode::Random => m * n * eta,
        IrsMode::Optimized | IrsMode::OptimizedSum => {
            n * n * T::PI() * eta / T::of(4.0) + (m - T::one()) * n * eta
        }
    }
}

/// `(P / sigma_d^2) ((M - 1) N eta + N beta)`.
pub fn avg_snr_random<T: Real>(snr_scale: T, antennas: usize, elements: usize, beta_cas: T, eta: T) -> T {
    let (m, n) = (T::of(antennas as f64), T::of(elements as f64));
    snr_scale * ((m - T::one()) * n * eta + n * beta_cas)
}

/// `(P / sigma_d^2) (((M - 1) + N pi / 4 - 1) N eta + N beta)`.
pub fn avg_snr_optimized<T: Real>(snr_scale: T, antennas: usize, elements: usize, beta_cas: T, eta: T) -> T {
    let (m, n) = (T::of(antennas as f64), T::of(elements as f64));
    let gain = (m - T::one()) + n * T::PI() / T::of(4.0) - T::one();
    snr_scale * (gain * n * eta + n * beta_cas)
}

pub fn avg_snr<T: Real>(mode: IrsMode, snr_scale: T, antennas: usize, elements: usize, beta_cas: T, eta: T) -> T {
    match mode {
        IrsMode::Random => avg_snr_random(snr_scale, antennas, elements, beta_cas, eta),
        IrsMode::Optimized | IrsMode::OptimizedSum => {
            avg_snr_optimized(snr_scale, antennas, elements, beta_cas, eta)
        }
    }
}

/// Averaged SNR at downlink symbol `t`.
pub fn avg_snr_at<T: Real>(params: &DerivedParams<T>, t: usize, mode: IrsMode) -> Result<T> {
    let eta = eta_at(params, t)?;
    Ok(avg_snr(
        mode,
        params.snr_scale(),
        params.antennas,
        params.elements,
        params.beta_cas,
        eta,
    ))
}

/// `R = (1/T) sum_{t in D} log2(1 + E[gamma_t])`; pilot symbols carry no
/// data, so `avg_snrs` has one entry per downlink symbol.
pub fn ergodic_rate<T: Real>(avg_snrs: &[T], coherence: usize) -> Result<T> {
    if avg_snrs.is_empty() {
        return Err(Error::InvalidArgument("downlink set is empty".into()));
    }
    if avg_snrs.len() > coherence {
        return Err(Error::InvalidArgument(format!(
            "{} downlink symbols exceed the block length {coherence}",
            avg_snrs.len()
        )));
    }
    let sum = avg_snrs.iter().fold(T::zero(), |acc, &g| acc + g.ln_1p());
    Ok(sum / T::LN_2() / T::of(coherence as f64))
}

/// Analytic ergodic rate over the whole downlink set.
pub fn analytic_rate<T: Real>(params: &DerivedParams<T>, mode: IrsMode) -> Result<T> {
    if params.pilots != params.elements {
        return Err(Error::InvalidArgument(format!(
            "closed-form rate assumes B = N, got B = {}, N = {}",
            params.pilots, params.elements
        )));
    }
    let snrs = params
        .downlink_times()
        .map(|t| avg_snr_at(params, t, mode))
        .collect::<Result<Vec<_>>>()?;
    ergodic_rate(&snrs, params.coherence)
}
