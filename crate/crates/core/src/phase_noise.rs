//! Wiener oscillator phase drift.
//!
//! Every BS antenna has its own free-running oscillator and the user has one
//! more. Each phase starts at zero and takes an independent Gaussian step per
//! symbol. The drift seen on antenna `m` at symbol `t` is
//! `theta_bs[t][m] + theta_ue[t]`.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::real::{cis, Real};

/// Sampled phase paths for `M` BS oscillators and the user over `1..=len`.
/// Index 0 holds the initial phase, which is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectories<T> {
    antennas: usize,
    len: usize,
    // time-major: bs[t * antennas + m]
    bs: Vec<T>,
    ue: Vec<T>,
}

impl<T: Real> PhaseTrajectories<T> {
    /// All-zero trajectories (ideal oscillators).
    pub fn zeros(antennas: usize, len: usize) -> Self {
        Self {
            antennas,
            len,
            bs: vec![T::zero(); antennas * (len + 1)],
            ue: vec![T::zero(); len + 1],
        }
    }

    /// Builds trajectories from explicit phases; `bs[t][m]` and `ue[t]` for
    /// `t` in `0..=len`.
    pub fn from_phases(bs: Vec<Vec<T>>, ue: Vec<T>) -> Result<Self> {
        let len = ue.len().checked_sub(1).ok_or_else(|| {
            Error::InvalidArgument("trajectories need at least the t = 0 sample".into())
        })?;
        crate::error::check_dim("BS phase rows", len + 1, bs.len())?;
        let antennas = bs.first().map_or(0, Vec::len);
        for row in &bs {
            crate::error::check_dim("BS phase row length", antennas, row.len())?;
        }
        Ok(Self {
            antennas,
            len,
            bs: bs.into_iter().flatten().collect(),
            ue,
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Last sampled symbol index.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bs_phase(&self, t: usize, m: usize) -> T {
        self.bs[t * self.antennas + m]
    }

    pub fn ue_phase(&self, t: usize) -> T {
        self.ue[t]
    }

    /// Combined drift `theta_bs[t][m] + theta_ue[t]`.
    pub fn total_phase(&self, t: usize, m: usize) -> T {
        self.bs_phase(t, m) + self.ue_phase(t)
    }
}

/// Diagonal of `D_t`: `e^{j (theta_bs[t][m] + theta_ue[t])}` per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDriftDiagonal<T> {
    pub entries: Vec<Complex<T>>,
}

/// Samples one Wiener path per BS antenna plus one for the user.
///
/// Draw order per step is antennas `0..M` followed by the user, so the
/// output is a pure function of the generator state.
pub fn sample_trajectories<T: Real, R: Rng + ?Sized>(
    antennas: usize,
    len: usize,
    sigma_bs2: T,
    sigma_ue2: T,
    rng: &mut R,
) -> PhaseTrajectories<T> {
    let sd_bs = sigma_bs2.max(T::zero()).sqrt();
    let sd_ue = sigma_ue2.max(T::zero()).sqrt();
    let mut traj = PhaseTrajectories::zeros(antennas, len);
    for t in 1..=len {
        let (prev, cur) = traj.bs.split_at_mut(t * antennas);
        let prev = &prev[(t - 1) * antennas..];
        for m in 0..antennas {
            cur[m] = prev[m] + sd_bs * T::standard_normal(rng);
        }
        traj.ue[t] = traj.ue[t - 1] + sd_ue * T::standard_normal(rng);
    }
    traj
}

/// `D_t` for symbol `t` in `1..=len`.
pub fn drift_matrix<T: Real>(traj: &PhaseTrajectories<T>, t: usize) -> Result<PhaseDriftDiagonal<T>> {
    if t == 0 || t > traj.len {
        return Err(Error::OutOfRange {
            what: "symbol index",
            detail: format!("t = {t} not in 1..={}", traj.len),
        });
    }
    Ok(PhaseDriftDiagonal {
        entries: (0..traj.antennas)
            .map(|m| cis(traj.total_phase(t, m)))
            .collect(),
    })
}

/// `E[e^{j(theta_{t1} - theta_{t2})}] = exp(-(sigma_BS^2 + sigma_UE^2) |lag| / 2)`.
pub fn phase_correlation<T: Real>(sigma_bs2: T, sigma_ue2: T, lag: i64) -> T {
    let lag = T::of(lag.unsigned_abs() as f64);
    (-(sigma_bs2 + sigma_ue2) * lag / T::of(2.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use crate::stats::Summary;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn noiseless_oscillators_stay_at_zero() {
        let mut rng = StreamKey::from_seed(1).rng();
        let traj = sample_trajectories(4, 50, 0.0f64, 0.0, &mut rng);
        for t in 0..=50 {
            for m in 0..4 {
                assert_eq!(traj.total_phase(t, m), 0.0);
            }
        }
        let d = drift_matrix(&traj, 17).unwrap();
        assert!(d.entries.iter().all(|z| *z == Complex::new(1.0, 0.0)));
    }

    #[test]
    fn increment_variance_matches() {
        let sigma2 = 2.5e-3;
        let mut rng = StreamKey::from_seed(2).rng();
        let traj = sample_trajectories(1, 1_000_000, sigma2, 0.0f64, &mut rng);
        let mut s = Summary::default();
        for t in 1..=traj.len() {
            s.push(traj.bs_phase(t, 0) - traj.bs_phase(t - 1, 0));
        }
        assert!((s.variance() / sigma2 - 1.0).abs() < 0.01, "{}", s.variance());
        // the user path gets nothing
        assert_eq!(traj.ue_phase(traj.len()), 0.0);
    }

    #[test]
    fn same_stream_same_paths() {
        let a = sample_trajectories(3, 100, 1e-3f64, 2e-3, &mut StreamKey::from_seed(5).rng());
        let b = sample_trajectories(3, 100, 1e-3f64, 2e-3, &mut StreamKey::from_seed(5).rng());
        assert_eq!(a, b);
        let c = sample_trajectories(3, 100, 1e-3f64, 2e-3, &mut StreamKey::from_seed(6).rng());
        assert_ne!(a, c);
    }

    #[test]
    fn drift_matrix_examples() {
        let traj = PhaseTrajectories::from_phases(vec![vec![0.0], vec![PI]], vec![0.0, 0.0]).unwrap();
        let d = drift_matrix(&traj, 1).unwrap();
        assert!((d.entries[0] - Complex::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(drift_matrix(&traj, 0).is_err());
        assert!(drift_matrix(&traj, 2).is_err());

        let mut rng = StreamKey::from_seed(8).rng();
        let traj = sample_trajectories(6, 40, 0.3f64, 0.7, &mut rng);
        for t in 1..=40 {
            for z in drift_matrix(&traj, t).unwrap().entries {
                assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn correlation_examples() {
        assert_eq!(phase_correlation(0.3f64, 0.1, 0), 1.0);
        let r = phase_correlation(0.01f64, 0.02, 7);
        let r2 = phase_correlation(0.02f64, 0.04, 7);
        assert!((r2 - r * r).abs() < 1e-15);
        assert_eq!(phase_correlation(0.01f64, 0.02, -7), r);
    }

    #[test]
    fn correlation_matches_sampled_paths() {
        let (s_bs, s_ue, lag) = (0.01f64, 0.005f64, 20usize);
        let paths = 1_000_000;
        let root = StreamKey::from_seed(11);
        let mut re = 0.0;
        let mut im = 0.0;
        for p in 0..paths {
            let mut rng = root.child(p as u64).rng();
            let traj = sample_trajectories(1, lag, s_bs, s_ue, &mut rng);
            let z = cis(traj.total_phase(lag, 0) - traj.total_phase(0, 0));
            re += z.re;
            im += z.im;
        }
        let expected = phase_correlation(s_bs, s_ue, lag as i64);
        let mean = re / paths as f64;
        assert!((mean / expected - 1.0).abs() < 0.01, "{mean} vs {expected}");
        assert!((im / paths as f64).abs() < 0.01);
    }

    #[test]
    fn wiener_lag_variance() {
        // theta_{t+tau} - theta_t has variance tau * sigma^2
        let (sigma2, tau, paths) = (0.02f64, 9usize, 20_000u64);
        let root = StreamKey::from_seed(12);
        let mut s = Summary::default();
        for p in 0..paths {
            let traj = sample_trajectories(1, 30, sigma2, 0.0, &mut root.child(p).rng());
            s.push(traj.bs_phase(21, 0) - traj.bs_phase(21 - tau, 0));
        }
        let expected = tau as f64 * sigma2;
        // sample variance of a Gaussian has sd ~ var * sqrt(2 / n)
        let band = 3.0 * expected * (2.0 / paths as f64).sqrt();
        assert!((s.variance() - expected).abs() < band, "{} vs {expected}", s.variance());
    }

    proptest! {
        #[test]
        fn correlation_is_monotone(a in 0.0f64..0.05, b in 0.0f64..0.05, lag in 0i64..1000, da in 1e-6f64..0.5) {
            let base = phase_correlation(a, b, lag);
            prop_assert!(base > 0.0 && base <= 1.0);
            prop_assert!(phase_correlation(a, b, lag + 1) <= base);
            prop_assert!(phase_correlation(a + da, b, lag) <= base);
            prop_assert!(phase_correlation(a, b + da, lag) <= base);
        }
    }
}
