//! DFT pilot schedule and uplink pilot observations.
//!
//! During pilot symbol `tau_i` the IRS applies row `i` of a `B x N` DFT
//! matrix and the user sends `x_{tau_i} = 1`. The BS receives
//! `y_{tau_i} = D_{tau_i} H_cas phi_i x_i + n_i`; stacking the `B` blocks
//! gives the observation `psi` of length `B * M`.

use num_complex::Complex;
use rand::Rng;

use crate::channel::{CMatrix, CVector};
use crate::error::{check_dim, Error, Result};
use crate::phase_noise::PhaseTrajectories;
use crate::real::{cis, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct PilotSchedule<T: Real> {
    /// `B x N`; row `i` is the IRS configuration during pilot `i`.
    pub phi: CMatrix<T>,
    pub pilot_symbols: Vec<Complex<T>>,
    pub pilot_times: Vec<usize>,
}

impl<T: Real> PilotSchedule<T> {
    pub fn pilots(&self) -> usize {
        self.phi.nrows()
    }

    pub fn elements(&self) -> usize {
        self.phi.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation<T: Real> {
    /// `[y_{tau_1}; ...; y_{tau_B}]`.
    pub psi: CVector<T>,
}

impl<T: Real> PilotObservation<T> {
    /// `psi` viewed as the `M x B` matrix whose column `i` is `y_{tau_i}`.
    pub fn as_matrix(&self, antennas: usize) -> Result<CMatrix<T>> {
        if antennas == 0 || self.psi.len() % antennas != 0 {
            return Err(Error::InvalidArgument(format!(
                "observation length {} is not a multiple of M = {antennas}",
                self.psi.len()
            )));
        }
        Ok(CMatrix::from_column_slice(
            antennas,
            self.psi.len() / antennas,
            self.psi.as_slice(),
        ))
    }
}

/// `Phi[i][n] = exp(-j 2 pi i n / N)` for `i < B`, with all-ones pilots.
pub fn dft_schedule<T: Real>(pilots: usize, elements: usize, pilot_times: &[usize]) -> Result<PilotSchedule<T>> {
    if pilots == 0 || pilots > elements {
        return Err(Error::InvalidArgument(format!(
            "DFT pilot design needs 1 <= B <= N, got B = {pilots}, N = {elements}"
        )));
    }
    check_dim("pilot times", pilots, pilot_times.len())?;
    let two_pi = T::TAU();
    let phi = CMatrix::from_fn(pilots, elements, |i, n| {
        // reduce the exponent first so large N keeps full precision
        let k = (i * n) % elements;
        cis(-two_pi * T::of(k as f64) / T::of(elements as f64))
    });
    Ok(PilotSchedule {
        phi,
        pilot_symbols: vec![Complex::new(T::one(), T::zero()); pilots],
        pilot_times: pilot_times.to_vec(),
    })
}

/// Noise-free part of the pilot observation.
pub fn uplink_noiseless<T: Real>(
    h: &CVector<T>,
    traj: &PhaseTrajectories<T>,
    sched: &PilotSchedule<T>,
) -> Result<CVector<T>> {
    let antennas = traj.antennas();
    let (pilots, elements) = (sched.pilots(), sched.elements());
    check_dim("channel vector length", antennas * elements, h.len())?;
    if let Some(&last) = sched.pilot_times.iter().max() {
        if last > traj.len() {
            return Err(Error::OutOfRange {
                what: "pilot time",
                detail: format!("tau = {last} beyond sampled trajectory length {}", traj.len()),
            });
        }
    }
    let mut psi = CVector::zeros(pilots * antennas);
    for i in 0..pilots {
        let tau = sched.pilot_times[i];
        let x = sched.pilot_symbols[i];
        for m in 0..antennas {
            let mut acc = Complex::new(T::zero(), T::zero());
            for n in 0..elements {
                acc += h[n * antennas + m] * sched.phi[(i, n)];
            }
            psi[i * antennas + m] = cis(traj.total_phase(tau, m)) * acc * x;
        }
    }
    Ok(psi)
}

/// Pilot observation with fresh CN(0, sigma_u2) noise per pilot and antenna.
///
/// Noise is drawn pilot by pilot, antenna by antenna, after the noise-free
/// part is formed.
pub fn simulate_uplink<T: Real, R: Rng + ?Sized>(
    h: &CVector<T>,
    traj: &PhaseTrajectories<T>,
    sched: &PilotSchedule<T>,
    sigma_u2: T,
    rng: &mut R,
) -> Result<PilotObservation<T>> {
    let mut psi = uplink_noiseless(h, traj, sched)?;
    for y in psi.iter_mut() {
        *y += T::complex_gaussian(rng, sigma_u2);
    }
    Ok(PilotObservation { psi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    #[test]
    fn two_point_dft() {
        let s = dft_schedule::<f64>(2, 2, &[1, 2]).unwrap();
        let expect = [[1.0, 1.0], [1.0, -1.0]];
        for i in 0..2 {
            for n in 0..2 {
                assert!((s.phi[(i, n)] - Complex::new(expect[i][n], 0.0)).norm() < 1e-15);
            }
        }
        assert!(s.pilot_symbols.iter().all(|x| x.norm() == 1.0));
    }

    #[test]
    fn dft_orthogonality() {
        let s = dft_schedule::<f64>(4, 4, &[1, 2, 3, 4]).unwrap();
        let gram = s.phi.adjoint() * &s.phi;
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 4.0 } else { 0.0 };
                assert!((gram[(i, j)] - Complex::new(e, 0.0)).norm() < 1e-12);
            }
        }
        let s = dft_schedule::<f64>(3, 7, &[1, 2, 3]).unwrap();
        assert!(s.phi.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        // B < N rows are still mutually orthogonal
        let rows = &s.phi * s.phi.adjoint();
        assert!((rows - CMatrix::identity(3, 3).scale(7.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_infeasible_designs() {
        assert!(dft_schedule::<f64>(5, 4, &[1, 2, 3, 4, 5]).is_err());
        assert!(dft_schedule::<f64>(0, 4, &[]).is_err());
        assert!(dft_schedule::<f64>(2, 4, &[1]).is_err());
    }

    #[test]
    fn scalar_passthrough() {
        let s = dft_schedule::<f64>(1, 1, &[1]).unwrap();
        let h = CVector::from_vec(vec![Complex::new(0.3, -1.2)]);
        let traj = PhaseTrajectories::zeros(1, 1);
        let obs = simulate_uplink(&h, &traj, &s, 0.0, &mut StreamKey::from_seed(1).rng()).unwrap();
        assert_eq!(obs.psi[0], h[0]);
        assert_eq!(obs.psi.len(), 1);
    }

    #[test]
    fn noise_covariance() {
        let (m, n) = (3, 2);
        let s = dft_schedule::<f64>(n, n, &[1, 2]).unwrap();
        let h = CVector::zeros(m * n);
        let traj = PhaseTrajectories::zeros(m, n);
        let sigma_u2 = 0.7;
        let draws = 100_000;
        let dim = m * n;
        let mut cov = CMatrix::<f64>::zeros(dim, dim);
        let root = StreamKey::from_seed(4);
        for k in 0..draws {
            let obs = simulate_uplink(&h, &traj, &s, sigma_u2, &mut root.child(k).rng()).unwrap();
            cov += &obs.psi * obs.psi.adjoint();
        }
        cov /= Complex::new(draws as f64, 0.0);
        for i in 0..dim {
            assert!((cov[(i, i)].re / sigma_u2 - 1.0).abs() < 0.02, "{}", cov[(i, i)]);
            for j in 0..dim {
                if i != j {
                    assert!(cov[(i, j)].norm() / sigma_u2 < 0.02);
                }
            }
        }
    }

    #[test]
    fn block_energy() {
        // each entry of H phi sums N unit-modulus-weighted CN(0, beta) terms
        let (m, n, beta) = (2, 4, 3.0f64);
        let s = dft_schedule::<f64>(n, n, &[1, 2, 3, 4]).unwrap();
        let traj = PhaseTrajectories::zeros(m, n);
        let root = StreamKey::from_seed(5);
        let draws = 100_000;
        let mut energy = 0.0;
        for k in 0..draws {
            let mut rng = root.child(k).rng();
            let ch = crate::channel::sample_cascaded(m, n, beta, &mut rng);
            let obs = simulate_uplink(&ch.vectorized(), &traj, &s, 0.0, &mut rng).unwrap();
            energy += obs.psi.rows(0, m).norm_squared();
        }
        let mean = energy / draws as f64;
        let expected = (n * m) as f64 * beta;
        assert!((mean / expected - 1.0).abs() < 0.02, "{mean} vs {expected}");
    }

    #[test]
    fn observation_matrix_view() {
        let obs = PilotObservation {
            psi: CVector::from_fn(6, |i, _| Complex::new(i as f64, 0.0)),
        };
        let y = obs.as_matrix(3).unwrap();
        assert_eq!(y.shape(), (3, 2));
        assert_eq!(y[(2, 1)].re, 5.0);
        assert!(obs.as_matrix(4).is_err());
    }
}
