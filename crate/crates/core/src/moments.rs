//! Exact moments of the simplified estimate model.
//!
//! Under the simplified model the estimate entries are i.i.d. CN(0, eta) and
//! the estimation error is independent CN(0, beta - eta). The expressions
//! here are exact Gaussian/Rayleigh moment computations; they serve as the
//! reference against which Monte Carlo output and the closed forms in
//! [`crate::closed_form`] are compared.
//!
//! Notation: `s = H^ phi` (length `M`), `e = Delta_H phi`.
//! * random phases: `s` has i.i.d. CN(0, N eta) entries;
//! * optimized phases (row 0 aligned): `s_0 = sum_n |h^_0(n)|` is a sum of
//!   `N` Rayleigh variables and `s_1..s_{M-1}` are i.i.d. CN(0, N eta).

use crate::closed_form::precoder_norm_sq;
use crate::downlink::IrsMode;
use crate::real::Real;

/// `E[r^k]`, `k = 1..4`, for `r = |z|`, `z ~ CN(0, eta)`.
pub fn rayleigh_moments<T: Real>(eta: T) -> [T; 4] {
    let sqrt_pi = T::PI().sqrt();
    let root = eta.sqrt();
    [
        sqrt_pi * root / T::of(2.0),
        eta,
        T::of(3.0) * sqrt_pi * eta * root / T::of(4.0),
        T::of(2.0) * eta * eta,
    ]
}

/// `E[(sum_n |h(n)|)^2] = N eta + N (N - 1) pi eta / 4`.
pub fn aligned_second_moment<T: Real>(elements: usize, eta: T) -> T {
    let n = T::of(elements as f64);
    n * eta + n * (n - T::one()) * T::PI() * eta / T::of(4.0)
}

/// `N^2 pi eta / 4`, the value used by the closed-form optimized SNR.
pub fn aligned_second_moment_approx<T: Real>(elements: usize, eta: T) -> T {
    let n = T::of(elements as f64);
    n * n * T::PI() * eta / T::of(4.0)
}

/// `E[(sum_n |h(n)|)^4]` by multinomial expansion over i.i.d. Rayleigh terms.
pub fn aligned_fourth_moment<T: Real>(elements: usize, eta: T) -> T {
    let [m1, m2, m3, m4] = rayleigh_moments(eta);
    let n = T::of(elements as f64);
    let n1 = n - T::one();
    let n2 = n - T::of(2.0);
    let n3 = n - T::of(3.0);
    n * m4
        + T::of(4.0) * n * n1 * m3 * m1
        + T::of(3.0) * n * n1 * m2 * m2
        + T::of(6.0) * n * n1 * n2 * m2 * m1 * m1
        + n * n1 * n2 * n3 * m1 * m1 * m1 * m1
}

/// Exact `E[||H^ phi||^2]`. `None` for modes without a tractable moment.
pub fn exact_denominator<T: Real>(mode: IrsMode, antennas: usize, elements: usize, eta: T) -> Option<T> {
    let (m, n) = (T::of(antennas as f64), T::of(elements as f64));
    match mode {
        IrsMode::Random => Some(m * n * eta),
        IrsMode::Optimized => Some(aligned_second_moment(elements, eta) + (m - T::one()) * n * eta),
        IrsMode::OptimizedSum => None,
    }
}

/// Exact `E[||s||^4]`.
pub fn signal_fourth_moment<T: Real>(mode: IrsMode, antennas: usize, elements: usize, eta: T) -> Option<T> {
    let m = T::of(antennas as f64);
    let v = T::of(elements as f64) * eta;
    match mode {
        IrsMode::Random => Some(m * (m + T::one()) * v * v),
        IrsMode::Optimized => {
            let others = m - T::one();
            let q1 = others * v;
            let q2 = others * m * v * v;
            Some(aligned_fourth_moment(elements, eta) + T::of(2.0) * aligned_second_moment(elements, eta) * q1 + q2)
        }
        IrsMode::OptimizedSum => None,
    }
}

/// Exact `E[|(H~ phi)^T (H^ phi)^*|^2] = E||s||^4 + N (beta - eta) E||s||^2`.
pub fn exact_numerator<T: Real>(mode: IrsMode, antennas: usize, elements: usize, beta_cas: T, eta: T) -> Option<T> {
    let fourth = signal_fourth_moment(mode, antennas, elements, eta)?;
    let second = exact_denominator(mode, antennas, elements, eta)?;
    Some(fourth + T::of(elements as f64) * (beta_cas - eta) * second)
}

/// Numerator as stated alongside the closed-form SNR:
/// `(MN eta)^2 + M N^2 beta eta - M (N eta)^2` (random) and
/// `D^2 + N (beta - eta) D` with `D = N^2 pi eta / 4 + (M - 1) N eta` (optimized).
pub fn closed_form_numerator<T: Real>(mode: IrsMode, antennas: usize, elements: usize, beta_cas: T, eta: T) -> T {
    let (m, n) = (T::of(antennas as f64), T::of(elements as f64));
    match mode {
        IrsMode::Random => {
            let mn = m * n * eta;
            mn * mn + m * n * n * beta_cas * eta - m * (n * eta) * (n * eta)
        }
        IrsMode::Optimized | IrsMode::OptimizedSum => {
            let d = precoder_norm_sq(mode, antennas, elements, eta);
            d * d + n * (beta_cas - eta) * d
        }
    }
}

/// Expected simplified-model SNR when the precoder is normalized with the
/// closed-form `E[||H^ phi||^2]`: `scale * E[numerator] / norm_sq`.
pub fn expected_simplified_snr<T: Real>(
    mode: IrsMode,
    snr_scale: T,
    antennas: usize,
    elements: usize,
    beta_cas: T,
    eta: T,
) -> Option<T> {
    let num = exact_numerator(mode, antennas, elements, beta_cas, eta)?;
    Some(snr_scale * num / precoder_norm_sq(mode, antennas, elements, eta))
}
