//! Spectrum of the subspace Hamiltonian and certification of the
//! order-(N+1) exceptional point at `Γ = 2κ`.
//!
//! The analytic spectrum is equidistant:
//! `λ_r = (ω0 − iΓ/2)·N + r·Δλ`, `Δλ = √(4κ² − Γ²)`, `r = −N/2 … N/2`.
//! The numeric spectrum comes from a complex Schur decomposition and is kept
//! independent of that formula so the two can be compared.

use serde::Serialize;

use crate::exec::{self, Execution};
use crate::fock::{is_tridiagonal, BeamsplitterParams, HamiltonianMatrix};
use crate::{CMatrix, Error, Result, C64};

/// Relative half-width around Γc inside which the regime is labelled exceptional.
pub const REGIME_TOLERANCE: f64 = 1e-9;
/// `‖M^{N+1}‖_F / (‖M^N‖_F ‖M‖_F)` below this counts as zero.
pub const NILPOTENCY_TOLERANCE: f64 = 1e-8;
/// `‖M^N‖_F / (‖M^{N−1}‖_F ‖M‖_F)` must stay above this.
pub const NILPOTENCY_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Γ < 2κ: real spacing, all modes decay at the same rate.
    Unbroken,
    Exceptional,
    /// Γ > 2κ: imaginary spacing, slow and fast modes.
    Broken,
}

impl Regime {
    pub fn classify(gamma: f64, kappa: f64) -> Self {
        let gc = 2.0 * kappa;
        let rel = (gamma - gc) / gc;
        if rel.abs() < REGIME_TOLERANCE {
            Regime::Exceptional
        } else if rel < 0.0 {
            Regime::Unbroken
        } else {
            Regime::Broken
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// Ordered by `r = −N/2 … N/2`.
    pub eigenvalues: Vec<C64>,
    pub delta_lambda: C64,
    pub gamma_critical: f64,
    pub regime: Regime,
}

/// Principal branch of `√(4κ² − Γ²)`: real non-negative below threshold,
/// `+i·√(Γ² − 4κ²)` above.
pub fn delta_lambda(params: &BeamsplitterParams) -> C64 {
    let d2 = params.spacing_squared();
    if d2 >= 0.0 {
        C64::new(d2.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-d2).sqrt())
    }
}

pub fn analytic_spectrum(params: &BeamsplitterParams) -> Spectrum {
    let n = params.n_photons;
    let center = params.number_coefficient() * n as f64;
    let dl = delta_lambda(params);
    let s = params.spin();
    let eigenvalues = (0..=n).map(|k| center + dl * (k as f64 - s)).collect();
    Spectrum {
        eigenvalues,
        delta_lambda: dl,
        gamma_critical: params.gamma_critical(),
        regime: Regime::classify(params.gamma, params.kappa),
    }
}

/// Eigenvalues from a general complex Schur decomposition.
///
/// For tridiagonal input each eigenvalue is then polished by a few Newton
/// steps on the characteristic polynomial evaluated with the three-term
/// continuant recurrence. That recurrence only sees the diagonal and the
/// off-diagonal products, which keeps the PT-type non-normality from costing
/// accuracy away from the exceptional point. Near it the cluster is left as the
/// solver returned it.
///
/// Sorted by real part, then imaginary part; real parts within `1e−9` of each
/// other count as equal.
pub fn numeric_spectrum(h: &HamiltonianMatrix) -> Result<Vec<C64>> {
    let n = h.dim();
    let schur = h
        .matrix
        .clone()
        .try_schur(f64::EPSILON, 1000 * n)
        .ok_or(Error::EigensolverFailed)?;
    let raw = schur.eigenvalues().ok_or(Error::EigensolverFailed)?;
    let mut eig: Vec<C64> = raw.iter().copied().collect();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigensolverFailed);
    }
    if is_tridiagonal(&h.matrix) {
        polish_tridiagonal(&h.matrix, &mut eig);
    }
    sort_lexicographic(&mut eig);
    Ok(eig)
}

fn polish_tridiagonal(m: &CMatrix, eig: &mut [C64]) {
    let raw = eig.to_vec();
    for (i, lam) in eig.iter_mut().enumerate() {
        let gap = raw
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, z)| (z - raw[i]).norm())
            .fold(f64::INFINITY, f64::min);
        let start = *lam;
        let mut x = start;
        let mut best = continuant(m, x).0.norm();
        for _ in 0..8 {
            let (p, dp) = continuant(m, x);
            if dp.norm() == 0.0 {
                break;
            }
            let next = x - p / dp;
            let r = continuant(m, next).0.norm();
            if !(r < best) || (next - start).norm() > 0.25 * gap {
                break;
            }
            best = r;
            x = next;
        }
        *lam = x;
    }
}

/// `det(M − λ)` and its λ-derivative for tridiagonal `M`.
fn continuant(m: &CMatrix, lam: C64) -> (C64, C64) {
    let n = m.nrows();
    let (mut p_prev, mut p) = (C64::new(1.0, 0.0), m[(0, 0)] - lam);
    let (mut d_prev, mut d) = (C64::new(0.0, 0.0), C64::new(-1.0, 0.0));
    for i in 1..n {
        let bc = m[(i, i - 1)] * m[(i - 1, i)];
        let a = m[(i, i)] - lam;
        let p_next = a * p - bc * p_prev;
        let d_next = a * d - p - bc * d_prev;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

pub(crate) fn sort_lexicographic(v: &mut [C64]) {
    let scale = v.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    v.sort_by(|a, b| {
        if (a.re - b.re).abs() <= tol {
            a.im.total_cmp(&b.im)
        } else {
            a.re.total_cmp(&b.re)
        }
    });
}

/// Largest distance after pairing each reference value with its nearest
/// unused counterpart. Both slices must have the same length.
pub fn spectrum_deviation(reference: &[C64], other: &[C64]) -> f64 {
    assert_eq!(reference.len(), other.len(), "spectra of different size");
    let mut pool: Vec<C64> = other.to_vec();
    let mut worst: f64 = 0.0;
    for x in reference {
        let (k, d) = pool
            .iter()
            .enumerate()
            .map(|(k, y)| (k, (y - x).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("pool exhausted");
        worst = worst.max(d);
        pool.swap_remove(k);
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowRow {
    pub gamma: f64,
    /// Real parts ordered by r.
    pub re: Vec<f64>,
    /// Imaginary parts ordered by r.
    pub im: Vec<f64>,
}

/// Analytic eigenvalues along a Γ sweep; `base.gamma` is ignored.
pub fn eigenvalue_flow(
    base: &BeamsplitterParams,
    gamma_grid: &[f64],
    exec: Execution,
) -> Result<Vec<FlowRow>> {
    exec::try_map(exec, gamma_grid, |&g| {
        let p = base.with_gamma(g);
        p.validate()?;
        let s = analytic_spectrum(&p);
        Ok(FlowRow {
            gamma: g,
            re: s.eigenvalues.iter().map(|z| z.re).collect(),
            im: s.eigenvalues.iter().map(|z| z.im).collect(),
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpCertificate {
    pub order: usize,
    /// Γ of the matrix that was certified.
    pub gamma: f64,
    /// `(ω0 − iκ)·N`.
    pub shift: C64,
    /// `‖M^k‖_F / (‖M^{k−1}‖_F ‖M‖_F)` for `k = 1 … N+1`, `M = H − shift`.
    pub nilpotency_ratios: Vec<f64>,
    /// `‖M^k‖_F / ‖M‖_F^k` for `k = 1 … N+1`.
    pub normalized_norms: Vec<f64>,
    pub passed: bool,
}

/// Check that `H − (ω0 − iκ)N` is nilpotent of index exactly N+1.
pub fn certify_ep(h: &HamiltonianMatrix) -> EpCertificate {
    let p = &h.params;
    let n = p.n_photons;
    let dim = h.dim();
    let shift = C64::new(p.omega0, -p.kappa) * n as f64;
    let m = &h.matrix - CMatrix::identity(dim, dim) * shift;
    let m_norm = m.norm();

    let mut ratios = Vec::with_capacity(n + 1);
    let mut normalized = Vec::with_capacity(n + 1);
    let mut power = CMatrix::identity(dim, dim);
    let mut prev_norm = power.norm();
    for k in 1..=n + 1 {
        power = &power * &m;
        let norm = power.norm();
        let denom = prev_norm * m_norm;
        ratios.push(if denom > 0.0 { norm / denom } else { 0.0 });
        normalized.push(if m_norm > 0.0 { norm / m_norm.powi(k as i32) } else { 0.0 });
        prev_norm = norm;
    }
    let passed = m_norm > 0.0 && ratios[n] < NILPOTENCY_TOLERANCE && ratios[n - 1] > NILPOTENCY_FLOOR;
    EpCertificate {
        order: n + 1,
        gamma: p.gamma,
        shift,
        nilpotency_ratios: ratios,
        normalized_norms: normalized,
        passed,
    }
}
