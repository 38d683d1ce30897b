//! Dense reference computations shared by the integration tests.
//!
//! Everything here is written against full `MN x MN` / `BM x BM` matrices
//! with a general inverse, without the Kronecker shortcuts the library
//! uses, so it can serve as an independent oracle on small systems.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C = Complex<f64>;

pub fn c(re: f64) -> C {
    Complex::new(re, 0.0)
}

pub fn rho(s: f64, lag: f64) -> f64 {
    (-s * lag.abs() / 2.0).exp()
}

/// `E[h~_t psi^H]` (MN x BM) built block by block.
pub fn cross_cov(
    m: usize,
    n: usize,
    phi: &DMatrix<C>,
    x: &[C],
    times: &[usize],
    t: usize,
    beta: f64,
    s: f64,
) -> DMatrix<C> {
    let b = phi.nrows();
    let mut out = DMatrix::zeros(m * n, b * m);
    for i in 0..b {
        let r = rho(s, t as f64 - times[i] as f64);
        for nn in 0..n {
            let v = phi[(i, nn)].conj() * x[i].conj() * c(beta * r);
            for k in 0..m {
                out[(nn * m + k, i * m + k)] = v;
            }
        }
    }
    out
}

/// `E[psi psi^H]` (BM x BM) for an arbitrary pilot matrix.
pub fn obs_cov(m: usize, phi: &DMatrix<C>, x: &[C], times: &[usize], beta: f64, s: f64, sigma_u2: f64) -> DMatrix<C> {
    let b = phi.nrows();
    let mut out = DMatrix::zeros(b * m, b * m);
    for i in 0..b {
        for j in 0..b {
            let inner: C = (0..phi.ncols()).map(|nn| phi[(i, nn)] * phi[(j, nn)].conj()).sum();
            let r = rho(s, times[i] as f64 - times[j] as f64);
            let mut v = inner * x[i] * x[j].conj() * c(beta * r);
            if i == j {
                v += c(sigma_u2);
            }
            for k in 0..m {
                out[(i * m + k, j * m + k)] = v;
            }
        }
    }
    out
}

/// Dense LMMSE estimate and its covariance.
pub struct DenseMmse {
    pub h_hat: DVector<C>,
    pub psi: DMatrix<C>,
}

pub fn dense_mmse(
    m: usize,
    n: usize,
    phi: &DMatrix<C>,
    x: &[C],
    times: &[usize],
    t: usize,
    beta: f64,
    s: f64,
    sigma_u2: f64,
    obs: &DVector<C>,
) -> DenseMmse {
    let cross = cross_cov(m, n, phi, x, times, t, beta, s);
    let inv = obs_cov(m, phi, x, times, beta, s, sigma_u2)
        .try_inverse()
        .expect("observation covariance is invertible");
    let gain = &cross * inv;
    DenseMmse {
        h_hat: &gain * obs,
        psi: &gain * cross.adjoint(),
    }
}

pub fn max_abs(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

/// Relative Frobenius distance `||a - b|| / ||b||`.
pub fn rel_frobenius(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).norm() / b.norm()
}
