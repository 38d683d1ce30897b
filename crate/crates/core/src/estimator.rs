//! Phase-noise-aware MMSE estimation of the effective channel.
//!
//! The target at downlink symbol `t` is the effective channel
//! `h~_t = (I_N (x) D_t) h`, i.e. the cascaded channel seen through the
//! oscillator drift at `t`. Pilots observed at `tau_i` are discounted by
//! their expected phase decorrelation `exp(-(s_BS + s_UE) |t - tau_i| / 2)`.
//!
//! With DFT pilots and unit-modulus pilot symbols the observation covariance
//! is `(N beta + sigma_u2) I`, so the estimator reduces to
//!
//! ```text
//! h^_t = beta / (N beta + sigma_u2) * ((Phi^H D~) (x) I_M) psi
//! ```
//!
//! and no `BM x BM` inverse is ever formed. Covariances are kept as their
//! `N x N` left Kronecker factor.

use num_complex::Complex;

use crate::channel::{vectorize, CMatrix, CVector};
use crate::error::{check_dim, Error, Result};
use crate::phase_noise::phase_correlation;
use crate::real::Real;
use crate::uplink::{PilotObservation, PilotSchedule};

pub(crate) fn conj_transpose<T: Real>(x: &CMatrix<T>) -> CMatrix<T> {
    x.transpose().map(|z| z.conj())
}

/// Diagonal of `D~` for target symbol `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayMatrix<T> {
    pub entries: Vec<Complex<T>>,
    pub t: usize,
}

pub fn decay_matrix<T: Real>(
    t: usize,
    pilot_times: &[usize],
    pilot_symbols: &[Complex<T>],
    sigma_bs2: T,
    sigma_ue2: T,
) -> Result<DecayMatrix<T>> {
    check_dim("pilot symbols", pilot_times.len(), pilot_symbols.len())?;
    let entries = pilot_times
        .iter()
        .zip(pilot_symbols)
        .map(|(&tau, x)| {
            let lag = t as i64 - tau as i64;
            x.conj() * phase_correlation(sigma_bs2, sigma_ue2, lag)
        })
        .collect();
    Ok(DecayMatrix { entries, t })
}

/// A covariance of the form `left (x) I_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerCovariance<T: Real> {
    pub left: CMatrix<T>,
    pub antennas: usize,
}

impl<T: Real> KroneckerCovariance<T> {
    pub fn dim(&self) -> usize {
        self.left.nrows() * self.antennas
    }

    pub fn trace(&self) -> T {
        let tr = (0..self.left.nrows()).fold(T::zero(), |acc, i| acc + self.left[(i, i)].re);
        tr * T::of(self.antennas as f64)
    }

    pub fn frobenius_norm(&self) -> T {
        let sq = self.left.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        (sq * T::of(self.antennas as f64)).sqrt()
    }

    /// Dense `MN x MN` matrix.
    pub fn expand(&self) -> CMatrix<T> {
        let m = self.antennas;
        let n = self.left.nrows();
        let mut out = CMatrix::zeros(n * m, n * m);
        for a in 0..n {
            for b in 0..n {
                let v = self.left[(a, b)];
                for k in 0..m {
                    out[(a * m + k, b * m + k)] = v;
                }
            }
        }
        out
    }
}

/// MMSE estimate for one target symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate<T: Real> {
    /// `h^_t`, length `MN`, column-major like `vec(H_cas)`.
    pub h_hat: CVector<T>,
    pub t: usize,
    /// `Psi_t = E[h^_t h^_t^H]`.
    pub psi: KroneckerCovariance<T>,
    /// `C_t = E[(h~_t - h^_t)(h~_t - h^_t)^H]`.
    pub c: KroneckerCovariance<T>,
}

impl<T: Real> ChannelEstimate<T> {
    /// `h^_t` as the `M x N` estimated cascaded matrix.
    pub fn matrix(&self) -> CMatrix<T> {
        let m = self.psi.antennas;
        CMatrix::from_column_slice(m, self.h_hat.len() / m, self.h_hat.as_slice())
    }
}

/// Precomputed linear map from `psi` to `H^_t` for one target symbol.
///
/// The map depends only on the schedule and `t`, so Monte Carlo code builds
/// it once and applies it to every trial's observation.
#[derive(Debug, Clone)]
pub struct MmseEstimator<T: Real> {
    // beta / (N beta + sigma_u2) * Phi^H D~, N x B
    combiner: CMatrix<T>,
    antennas: usize,
    t: usize,
}

fn check_structure<T: Real>(sched: &PilotSchedule<T>, dtilde: &DecayMatrix<T>, elements: usize) -> Result<()> {
    check_dim("IRS elements in schedule", elements, sched.elements())?;
    check_dim("decay matrix size", sched.pilots(), dtilde.entries.len())?;
    if sched.pilots() != elements {
        return Err(Error::InvalidArgument(format!(
            "the diagonal observation covariance needs B = N, got B = {}, N = {elements}",
            sched.pilots()
        )));
    }
    Ok(())
}

/// `Phi^H D~` (N x B).
fn weighted_adjoint<T: Real>(sched: &PilotSchedule<T>, dtilde: &DecayMatrix<T>) -> CMatrix<T> {
    let (b, n) = (sched.pilots(), sched.elements());
    CMatrix::from_fn(n, b, |row, i| sched.phi[(i, row)].conj() * dtilde.entries[i])
}

fn shrinkage<T: Real>(beta_cas: T, sigma_u2: T, elements: usize) -> T {
    beta_cas / (T::of(elements as f64) * beta_cas + sigma_u2)
}

impl<T: Real> MmseEstimator<T> {
    pub fn new(
        sched: &PilotSchedule<T>,
        dtilde: &DecayMatrix<T>,
        beta_cas: T,
        sigma_u2: T,
        antennas: usize,
    ) -> Result<Self> {
        let elements = sched.elements();
        check_structure(sched, dtilde, elements)?;
        let scale = Complex::new(shrinkage(beta_cas, sigma_u2, elements), T::zero());
        let combiner = weighted_adjoint(sched, dtilde).map(|z| z * scale);
        Ok(Self {
            combiner,
            antennas,
            t: dtilde.t,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `H^_t = Y (c Phi^H D~)^T` where `Y` is `psi` as an `M x B` matrix;
    /// equal to `((c Phi^H D~) (x) I_M) psi` reshaped.
    pub fn estimate_matrix(&self, obs: &PilotObservation<T>) -> Result<CMatrix<T>> {
        check_dim("observation length", self.combiner.ncols() * self.antennas, obs.psi.len())?;
        let y = obs.as_matrix(self.antennas)?;
        Ok(y * self.combiner.transpose())
    }

    pub fn estimate_vector(&self, obs: &PilotObservation<T>) -> Result<CVector<T>> {
        self.estimate_matrix(obs).map(|h| vectorize(&h))
    }
}

/// MMSE estimate of `h~_t` with its estimate and error covariances.
pub fn estimate<T: Real>(
    obs: &PilotObservation<T>,
    sched: &PilotSchedule<T>,
    dtilde: &DecayMatrix<T>,
    beta_cas: T,
    sigma_u2: T,
    antennas: usize,
    elements: usize,
) -> Result<ChannelEstimate<T>> {
    check_structure(sched, dtilde, elements)?;
    let est = MmseEstimator::new(sched, dtilde, beta_cas, sigma_u2, antennas)?;
    let h_hat = est.estimate_vector(obs)?;
    let psi = estimate_covariance(sched, dtilde, beta_cas, sigma_u2, antennas, elements)?;
    let c = complement(&psi, beta_cas);
    Ok(ChannelEstimate {
        h_hat,
        t: dtilde.t,
        psi,
        c,
    })
}

/// `Psi_t = beta^2 / (N beta + sigma_u2) (Phi^H D~ D~^H Phi) (x) I_M`.
pub fn estimate_covariance<T: Real>(
    sched: &PilotSchedule<T>,
    dtilde: &DecayMatrix<T>,
    beta_cas: T,
    sigma_u2: T,
    antennas: usize,
    elements: usize,
) -> Result<KroneckerCovariance<T>> {
    check_structure(sched, dtilde, elements)?;
    let a = weighted_adjoint(sched, dtilde);
    let scale = Complex::new(beta_cas * shrinkage(beta_cas, sigma_u2, elements), T::zero());
    let left = (&a * conj_transpose(&a)).map(|z| z * scale);
    Ok(KroneckerCovariance { left, antennas })
}

/// `C_t = beta I_MN - Psi_t`.
pub fn error_covariance<T: Real>(
    sched: &PilotSchedule<T>,
    dtilde: &DecayMatrix<T>,
    beta_cas: T,
    sigma_u2: T,
    antennas: usize,
    elements: usize,
) -> Result<KroneckerCovariance<T>> {
    estimate_covariance(sched, dtilde, beta_cas, sigma_u2, antennas, elements).map(|psi| complement(&psi, beta_cas))
}

fn complement<T: Real>(psi: &KroneckerCovariance<T>, beta_cas: T) -> KroneckerCovariance<T> {
    let n = psi.left.nrows();
    let left = CMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { beta_cas } else { T::zero() };
        Complex::new(diag, T::zero()) - psi.left[(i, j)]
    });
    KroneckerCovariance {
        left,
        antennas: psi.antennas,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_noise::PhaseTrajectories;
    use crate::uplink::dft_schedule;

    fn ones(b: usize) -> Vec<Complex<f64>> {
        vec![Complex::new(1.0, 0.0); b]
    }

    #[test]
    fn decay_examples() {
        let times = [1, 2, 3, 4];
        let d = decay_matrix(10, &times, &ones(4), 0.0, 0.0).unwrap();
        assert!(d.entries.iter().all(|z| *z == Complex::new(1.0, 0.0)));

        let d = decay_matrix(3, &times, &ones(4), 0.2, 0.1).unwrap();
        assert_eq!(d.entries[2].norm(), 1.0);
        assert!(d.entries.iter().all(|z| z.im == 0.0 && z.re > 0.0 && z.re <= 1.0));

        // lag L then 2L
        let d = decay_matrix(9, &[5, 1], &ones(2), 0.03, 0.01).unwrap();
        assert!((d.entries[1].norm() - d.entries[0].norm().powi(2)).abs() < 1e-15);

        let x = [Complex::new(0.0, 1.0)];
        let d = decay_matrix(4, &[4], &x, 0.5, 0.5).unwrap();
        assert_eq!(d.entries[0], Complex::new(0.0, -1.0));
        assert!(decay_matrix(4, &[1, 2], &x, 0.5, 0.5).is_err());
    }

    #[test]
    fn scalar_wiener_shrinkage() {
        let sched = dft_schedule::<f64>(1, 1, &[1]).unwrap();
        let d = decay_matrix(2, &[1], &ones(1), 0.0, 0.0).unwrap();
        let obs = PilotObservation {
            psi: CVector::from_vec(vec![Complex::new(0.4, -2.0)]),
        };
        let (beta, su2) = (2.0, 0.5);
        let est = estimate(&obs, &sched, &d, beta, su2, 1, 1).unwrap();
        let expect = obs.psi[0] * (beta / (beta + su2));
        assert!((est.h_hat[0] - expect).norm() < 1e-15);
    }

    #[test]
    fn infinite_noise_shrinks_to_zero() {
        let sched = dft_schedule::<f64>(3, 3, &[1, 2, 3]).unwrap();
        let d = decay_matrix(5, &[1, 2, 3], &ones(3), 1e-3, 1e-3).unwrap();
        let obs = PilotObservation {
            psi: CVector::from_element(6, Complex::new(1.0, 1.0)),
        };
        let est = estimate(&obs, &sched, &d, 1.0, 1e300, 2, 3).unwrap();
        assert!(est.h_hat.iter().all(|z| z.norm() < 1e-290));
    }

    #[test]
    fn perfect_conditions() {
        let n = 4;
        let sched = dft_schedule::<f64>(n, n, &[1, 2, 3, 4]).unwrap();
        let d = decay_matrix(7, &[1, 2, 3, 4], &ones(n), 0.0, 0.0).unwrap();
        let beta = 1e-7;
        let psi = estimate_covariance(&sched, &d, beta, 0.0, 3, n).unwrap();
        let c = error_covariance(&sched, &d, beta, 0.0, 3, n).unwrap();
        let dense = psi.expand();
        for i in 0..12 {
            for j in 0..12 {
                let e = if i == j { beta } else { 0.0 };
                assert!((dense[(i, j)] - Complex::new(e, 0.0)).norm() < 1e-20);
            }
        }
        assert!(c.frobenius_norm() < 1e-20);
    }

    #[test]
    fn noiseless_chain_recovers_channel() {
        let (m, n) = (3, 4);
        let sched = dft_schedule::<f64>(n, n, &[1, 2, 3, 4]).unwrap();
        let mut rng = crate::rng::StreamKey::from_seed(9).rng();
        let ch = crate::channel::sample_cascaded(m, n, 1.0, &mut rng);
        let traj = PhaseTrajectories::zeros(m, 10);
        let obs = crate::uplink::simulate_uplink(&ch.vectorized(), &traj, &sched, 0.0, &mut rng).unwrap();
        let d = decay_matrix(8, &sched.pilot_times, &sched.pilot_symbols, 0.0, 0.0).unwrap();
        let est = estimate(&obs, &sched, &d, 1.0, 0.0, m, n).unwrap();
        assert!((est.matrix() - ch.h_cas).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        let sched = dft_schedule::<f64>(2, 4, &[1, 2]).unwrap();
        let d = decay_matrix(5, &[1, 2], &ones(2), 0.0, 0.0).unwrap();
        assert!(MmseEstimator::new(&sched, &d, 1.0, 1.0, 2).is_err());
        let sched = dft_schedule::<f64>(2, 2, &[1, 2]).unwrap();
        let d3 = decay_matrix(5, &[1, 2, 3], &ones(3), 0.0, 0.0).unwrap();
        assert!(MmseEstimator::new(&sched, &d3, 1.0, 1.0, 2).is_err());
        let est = MmseEstimator::new(&sched, &d, 1.0, 1.0, 2).unwrap();
        let bad = PilotObservation {
            psi: CVector::zeros(5),
        };
        assert!(est.estimate_vector(&bad).is_err());
    }

    #[test]
    fn kronecker_storage() {
        let left = CMatrix::from_row_slice(2, 2, &[
            Complex::new(2.0f64, 0.0),
            Complex::new(0.5, 0.5),
            Complex::new(0.5, -0.5),
            Complex::new(1.0, 0.0),
        ]);
        let k = KroneckerCovariance { left: left.clone(), antennas: 3 };
        let dense = k.expand();
        assert_eq!(k.dim(), 6);
        let kron = left.kronecker(&CMatrix::identity(3, 3));
        assert_eq!(dense, kron);
        assert!((k.trace() - 9.0).abs() < 1e-15);
        assert!((k.frobenius_norm() - dense.norm()).abs() < 1e-14);
    }
}
