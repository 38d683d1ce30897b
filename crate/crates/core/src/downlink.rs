//! Downlink chain: IRS phase configuration, MRT precoding and the received SNR.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{reshape, CMatrix, CVector};
use crate::error::{check_dim, Error, Result};
use crate::real::{cis, Real};

/// How the downlink IRS phases are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IrsMode {
    /// i.i.d. uniform phases.
    Random,
    /// Conjugate-align one row of the estimated cascaded matrix.
    Optimized,
    /// Conjugate-align the antenna sum of the true effective channel.
    OptimizedSum,
}

impl IrsMode {
    pub const ALL: [IrsMode; 3] = [IrsMode::Random, IrsMode::Optimized, IrsMode::OptimizedSum];

    pub fn as_str(self) -> &'static str {
        match self {
            IrsMode::Random => "random",
            IrsMode::Optimized => "optimized",
            IrsMode::OptimizedSum => "optimized-sum",
        }
    }
}

impl fmt::Display for IrsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IrsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IrsMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown IRS mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrsPhaseVector<T: Real> {
    pub phi: CVector<T>,
    pub mode: IrsMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precoder<T: Real> {
    pub w: CVector<T>,
    pub norm_const: T,
}

/// Uniform phases on `[0, 2 pi)`, one draw per element.
pub fn random_irs<T: Real, R: Rng + ?Sized>(elements: usize, rng: &mut R) -> IrsPhaseVector<T> {
    let phi = CVector::from_fn(elements, |_, _| cis(T::TAU() * T::unit_uniform(rng)));
    IrsPhaseVector {
        phi,
        mode: IrsMode::Random,
    }
}

/// `e^{-j angle(z)}`; zero maps to 1.
#[inline]
fn conj_phase<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.norm();
    if r > T::zero() {
        z.conj() / r
    } else {
        Complex::new(T::one(), T::zero())
    }
}

/// Phases that co-phase row `reference_row` of the estimate, so that
/// `sum_n h(n) phi_n = sum_n |h(n)|`.
pub fn optimize_irs<T: Real>(h_hat: &CMatrix<T>, reference_row: usize) -> Result<IrsPhaseVector<T>> {
    if reference_row >= h_hat.nrows() {
        return Err(Error::OutOfRange {
            what: "reference row",
            detail: format!("row {reference_row} with M = {}", h_hat.nrows()),
        });
    }
    let phi = CVector::from_iterator(
        h_hat.ncols(),
        h_hat.row(reference_row).iter().map(|&z| conj_phase(z)),
    );
    Ok(IrsPhaseVector {
        phi,
        mode: IrsMode::Optimized,
    })
}

/// `exp(j angle(H~^H 1))`: co-phases the per-element sum over antennas of
/// the (true) effective channel.
pub fn optimize_irs_sum<T: Real>(h_eff: &CMatrix<T>) -> IrsPhaseVector<T> {
    let phi = CVector::from_iterator(
        h_eff.ncols(),
        h_eff.column_iter().map(|col| conj_phase(col.sum())),
    );
    IrsPhaseVector {
        phi,
        mode: IrsMode::OptimizedSum,
    }
}

/// `w = (H^ phi)^* / norm_const`.
pub fn mrt_precoder<T: Real>(h_hat: &CMatrix<T>, phi: &IrsPhaseVector<T>, norm_const: T) -> Result<Precoder<T>> {
    if !(norm_const > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "precoder normalization must be positive, got {norm_const}"
        )));
    }
    check_dim("IRS phase vector", h_hat.ncols(), phi.phi.len())?;
    let w = (h_hat * &phi.phi).map(|z| z.conj() / norm_const);
    Ok(Precoder { w, norm_const })
}

/// `(P / sigma_d^2) |(H~ phi)^T w|^2` for an effective channel given as an
/// `M x N` matrix.
pub fn snr_from_matrix<T: Real>(h_eff: &CMatrix<T>, phi: &CVector<T>, w: &CVector<T>, snr_scale: T) -> T {
    let g = h_eff * phi;
    let gain = g.iter().zip(w.iter()).fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b);
    snr_scale * gain.norm_sqr()
}

/// Received SNR at one downlink symbol. `h_eff` is the vectorized effective
/// channel (phase drift already applied).
pub fn instantaneous_snr<T: Real>(
    h_eff: &CVector<T>,
    phi: &IrsPhaseVector<T>,
    w: &Precoder<T>,
    tx_power: T,
    sigma_d2: T,
) -> Result<T> {
    let antennas = w.w.len();
    let elements = phi.phi.len();
    let h = reshape(h_eff, antennas, elements)?;
    Ok(snr_from_matrix(&h, &phi.phi, &w.w, tx_power / sigma_d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn random_phases_are_unit_and_centered() {
        let root = StreamKey::from_seed(1);
        let p = random_irs::<f64, _>(64, &mut root.rng());
        assert!(p.phi.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert_eq!(p, random_irs::<f64, _>(64, &mut root.rng()));

        let draws = 1_000_000;
        let big = random_irs::<f64, _>(draws, &mut root.child(1).rng());
        let mean: Complex<f64> = big.phi.iter().sum::<Complex<f64>>() / draws as f64;
        // each component has variance 1/2
        assert!(mean.re.abs() < 3.0 * (0.5 / draws as f64).sqrt());
        assert!(mean.im.abs() < 3.0 * (0.5 / draws as f64).sqrt());
    }

    #[test]
    fn optimize_example() {
        let h = CMatrix::from_row_slice(1, 3, &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]);
        let p = optimize_irs(&h, 0).unwrap();
        let expect = [c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0)];
        for (a, b) in p.phi.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
        let aligned = (h * &p.phi)[0];
        assert!((aligned - c(3.0, 0.0)).norm() < 1e-15);
        assert!(optimize_irs(&CMatrix::<f64>::zeros(2, 3), 2).is_err());
    }

    #[test]
    fn zero_entry_gets_zero_phase() {
        let h = CMatrix::from_row_slice(1, 2, &[c(0.0, 0.0), c(0.0, 2.0)]);
        let p = optimize_irs(&h, 0).unwrap();
        assert_eq!(p.phi[0], c(1.0, 0.0));
        let single = optimize_irs(&CMatrix::from_row_slice(1, 1, &[c(0.0, -3.0)]), 0).unwrap();
        assert!((single.phi[0] - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn aligned_sum_equals_l1_norm() {
        let root = StreamKey::from_seed(2);
        for k in 0..50 {
            let ch = crate::channel::sample_cascaded(3, 17, 1.0f64, &mut root.child(k).rng());
            let row = (k % 3) as usize;
            let p = optimize_irs(&ch.h_cas, row).unwrap();
            let s = (&ch.h_cas * &p.phi)[row];
            let l1: f64 = ch.h_cas.row(row).iter().map(|z| z.norm()).sum();
            assert!((s - c(l1, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn sum_mode_cophases_column_sums() {
        let ch = crate::channel::sample_cascaded(4, 6, 1.0f64, &mut StreamKey::from_seed(3).rng());
        let p = optimize_irs_sum(&ch.h_cas);
        assert_eq!(p.mode, IrsMode::OptimizedSum);
        for n in 0..6 {
            let v = ch.h_cas.column(n).sum() * p.phi[n];
            assert!(v.im.abs() < 1e-12 && v.re > 0.0);
        }
    }

    #[test]
    fn precoder_examples() {
        let h = CMatrix::from_row_slice(2, 1, &[c(2.0, -1.0), c(0.0, 0.0)]);
        let phi = IrsPhaseVector {
            phi: CVector::from_vec(vec![c(1.0, 0.0)]),
            mode: IrsMode::Random,
        };
        let p = mrt_precoder(&h, &phi, 4.0).unwrap();
        assert_eq!(p.w[0], c(0.5, 0.25));
        assert_eq!(p.w[1], c(0.0, 0.0));
        assert!(mrt_precoder(&h, &phi, 0.0).is_err());
        assert!(mrt_precoder(&h, &phi, -1.0).is_err());

        let scaled = mrt_precoder(&h.map(|z| z * 3.0), &phi, 12.0).unwrap();
        assert!((scaled.w - p.w).norm() < 1e-15);
    }

    #[test]
    fn snr_examples() {
        let h = CVector::from_vec(vec![c(0.3, 0.4)]);
        let phi = IrsPhaseVector {
            phi: CVector::from_vec(vec![c(1.0, 0.0)]),
            mode: IrsMode::Random,
        };
        let w = Precoder {
            w: CVector::from_vec(vec![h[0].conj() / h[0].norm()]),
            norm_const: h[0].norm(),
        };
        let snr = instantaneous_snr(&h, &phi, &w, 2.0, 0.5).unwrap();
        assert!((snr - 4.0 * 0.25).abs() < 1e-15);

        // null steering: w orthogonal to conj(H phi)
        let h2 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let w_null = Precoder {
            w: CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]),
            norm_const: 1.0,
        };
        assert!(instantaneous_snr(&h2, &phi, &w_null, 1.0, 1.0).unwrap() < 1e-30);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in IrsMode::ALL {
            assert_eq!(m.as_str().parse::<IrsMode>().unwrap(), m);
        }
        assert!("best".parse::<IrsMode>().is_err());
    }

    proptest! {
        #[test]
        fn optimized_phases_beat_random(seed in 0u64..10_000) {
            let root = StreamKey::from_seed(seed);
            let ch = crate::channel::sample_cascaded(2, 8, 1.0f64, &mut root.rng());
            let best = optimize_irs(&ch.h_cas, 0).unwrap();
            let best_gain = (&ch.h_cas * &best.phi)[0].norm();
            let mut rng = root.child(1).rng();
            for _ in 0..1000 {
                let p = random_irs::<f64, _>(8, &mut rng);
                prop_assert!((&ch.h_cas * &p.phi)[0].norm() <= best_gain + 1e-12);
            }
        }

        #[test]
        fn snr_invariant_to_common_phase(seed in 0u64..10_000, rot in 0.0f64..6.283) {
            let root = StreamKey::from_seed(seed);
            let ch = crate::channel::sample_cascaded(3, 5, 1.0f64, &mut root.rng());
            let est = crate::channel::sample_cascaded(3, 5, 1.0f64, &mut root.child(1).rng());
            let phi = random_irs::<f64, _>(5, &mut root.child(2).rng());
            let w = mrt_precoder(&est.h_cas, &phi, 2.0).unwrap();
            let snr = snr_from_matrix(&ch.h_cas, &phi.phi, &w.w, 1.0);
            prop_assert!(snr >= 0.0);
            let rotated = phi.phi.map(|z| z * cis(rot));
            let snr2 = snr_from_matrix(&ch.h_cas, &rotated, &w.w, 1.0);
            prop_assert!((snr - snr2).abs() <= 1e-9 * (1.0 + snr));
        }
    }
}
