//! Cascaded BS-IRS-user channel.
//!
//! Only the composite `M x N` matrix `H_cas = H_1 diag(h_2)` is generated;
//! its entries are i.i.d. CN(0, beta_cas). Vectorization is column-major so
//! that `h[n * M + m] = H_cas[(m, n)]`, which is what nalgebra stores.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;

use crate::error::{check_dim, Result};
use crate::real::Real;

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

#[derive(Debug, Clone, PartialEq)]
pub struct CascadedChannel<T: Real> {
    pub h_cas: CMatrix<T>,
}

impl<T: Real> CascadedChannel<T> {
    pub fn antennas(&self) -> usize {
        self.h_cas.nrows()
    }

    pub fn elements(&self) -> usize {
        self.h_cas.ncols()
    }

    /// `h = vec(H_cas)`.
    pub fn vectorized(&self) -> CVector<T> {
        vectorize(&self.h_cas)
    }
}

/// Draws `H_cas` with i.i.d. CN(0, beta_cas) entries, column by column.
pub fn sample_cascaded<T: Real, R: Rng + ?Sized>(
    antennas: usize,
    elements: usize,
    beta_cas: T,
    rng: &mut R,
) -> CascadedChannel<T> {
    let mut h_cas = CMatrix::zeros(antennas, elements);
    // column-major fill keeps the draw order equal to vec() order
    for z in h_cas.iter_mut() {
        *z = T::complex_gaussian(rng, beta_cas);
    }
    CascadedChannel { h_cas }
}

/// Column-major stacking.
pub fn vectorize<T: Real>(x: &CMatrix<T>) -> CVector<T> {
    CVector::from_column_slice(x.as_slice())
}

/// Inverse of [`vectorize`].
pub fn reshape<T: Real>(h: &CVector<T>, rows: usize, cols: usize) -> Result<CMatrix<T>> {
    check_dim("vectorized channel length", rows * cols, h.len())?;
    Ok(CMatrix::from_column_slice(rows, cols, h.as_slice()))
}
