//! Scaling-and-squaring matrix exponential with a Taylor kernel.
//!
//! Never diagonalizes: the Hamiltonian is defective at the exceptional point.
//! The mean of the diagonal is split off as a scalar first, and the squaring
//! phase renormalizes into a log-scale so decaying or growing results do not
//! under- or overflow.
//!
//! Accuracy is relative to the largest entry along the squaring chain, not of
//! the result. Strongly non-normal cases that decay far below that peak keep
//! only a few digits.

use crate::{CMatrix, Error, Result, C64};

/// Truncate the Taylor series once a term is this small relative to the sum.
pub const TAYLOR_TOLERANCE: f64 = 1e-14;
/// Scaled norm the Taylor kernel is evaluated at.
const KERNEL_NORM: f64 = 0.5;
/// Largest accepted `‖A − tr(A)/n‖₁`; beyond this the squaring count alone
/// exceeds 18 and accumulated rounding is no longer oracle-grade.
pub const NORM_BOUND: f64 = 1e5;

pub(crate) fn norm_one(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A) = e^{log_scale} · scaled`.
pub fn expm_scaled(a: &CMatrix) -> Result<(CMatrix, C64)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), C64::new(0.0, 0.0)));
    }
    let mu = a.trace() / n as f64;
    let b = a - CMatrix::identity(n, n) * mu;
    let norm = norm_one(&b);
    if !norm.is_finite() || norm > NORM_BOUND {
        return Err(Error::ExponentialOverflow {
            norm,
            bound: NORM_BOUND,
        });
    }
    let squarings = if norm > KERNEL_NORM {
        (norm / KERNEL_NORM).log2().ceil() as u32
    } else {
        0
    };
    let scaled = b / C64::new(2f64.powi(squarings as i32), 0.0);

    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=60 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
        if norm_one(&term) <= TAYLOR_TOLERANCE * norm_one(&sum) {
            break;
        }
    }

    let mut log_peak = 0.0;
    for _ in 0..squarings {
        sum = &sum * &sum;
        log_peak *= 2.0;
        let peak = crate::fock::max_abs(&sum);
        if peak > 1e100 || (peak < 1e-100 && peak > 0.0) {
            sum /= C64::new(peak, 0.0);
            log_peak += peak.ln();
        }
    }
    let log_scale = mu + log_peak;
    if sum.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ExponentialOverflow {
            norm,
            bound: NORM_BOUND,
        });
    }
    Ok((sum, log_scale))
}

/// Plain `exp(A)`; may underflow for strongly decaying arguments.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let (m, s) = expm_scaled(a)?;
    Ok(m * s.exp())
}
