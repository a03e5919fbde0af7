//! Closed-form coefficients of the factored evolution operator
//!
//! ```text
//! G(z) = e^{−i(ω0 − iΓ/2)Nz} · e^{−i f₊ J₊} · e^{−i f_z J_z} · e^{−i f₋ J₋}
//! ```
//!
//! Everything is evaluated through the real quantity `q = (zΔλ/2)²`:
//! `w = C(q) + (Γz/2)·S(q)` and `f± = κz·S(q)/w`, where `C = cos √q`,
//! `S = sin √q / √q` (hyperbolic for `q < 0`). Both are even in Δλ, so the
//! unbroken, exceptional and broken regimes share one branch-free formula and
//! nothing cancels as `Δλ → 0`. The `J_z` factor only ever needs integer powers
//! of `w`, so the logarithm in `f_z = −2i ln w` is never taken on a cut.

use serde::Serialize;

use crate::fock::{BeamsplitterParams, OperatorSet};
use crate::{CMatrix, Error, Result, C64};

/// `|w|` below this is a pole of the factorization.
pub const POLE_THRESHOLD: f64 = 1e-6;
/// `|zΔλ/2|` below this switches `C` and `S` to their Taylor series.
pub const SERIES_THRESHOLD: f64 = 5e-4;
/// Past this `|zΔλ/2|` the hyperbolic branch is evaluated in log space.
const HYPERBOLIC_LOG_SWITCH: f64 = 300.0;

/// Where a set of coefficients came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSource {
    ClosedForm,
    EpLimit,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeiNormanParams {
    pub z: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    pub f_z: C64,
    /// `−i(ω0 − iΓ/2)·N·z`.
    pub prefactor_exponent: C64,
    /// `cos(zΔλ/2) + (Γ/Δλ)·sin(zΔλ/2)`; real for physical parameters.
    pub w: C64,
    /// Continuous logarithm of `w` (equal to `i·f_z/2`).
    pub log_w: C64,
    pub source: ParamSource,
}

fn prefactor_exponent(params: &BeamsplitterParams, z: f64) -> C64 {
    let n = params.n_photons as f64;
    C64::new(0.0, -1.0) * params.number_coefficient() * (n * z)
}

/// `ln w` for real `w`, principal branch (`+iπ` for negative `w`).
fn real_log(w: f64) -> C64 {
    if w < 0.0 {
        C64::new((-w).ln(), std::f64::consts::PI)
    } else {
        C64::new(w.ln(), 0.0)
    }
}

/// `f_z = −2i ln w`.
fn f_z_from_log(log_w: C64) -> C64 {
    C64::new(0.0, -2.0) * log_w
}

/// Coefficients of the factored propagator at distance `z`.
///
/// Fails at poles of the factorization (`|w| < POLE_THRESHOLD`), which only
/// occur in the unbroken regime; callers wanting `G(z)` there should use
/// [`super::Propagator::at`], which splits the distance.
pub fn wei_norman_params(params: &BeamsplitterParams, z: f64) -> Result<WeiNormanParams> {
    params.validate()?;
    if !(z >= 0.0) {
        return Err(Error::NegativeDistance(z));
    }
    let kappa = params.kappa;
    let half_loss_z = params.gamma * z / 2.0;
    // q = (zΔλ/2)²
    let q = z * z * params.spacing_squared() / 4.0;

    let (f, w, log_w) = if q.abs() < SERIES_THRESHOLD * SERIES_THRESHOLD {
        let c = 1.0 - q / 2.0 + q * q / 24.0;
        let s = 1.0 - q / 6.0 + q * q / 120.0;
        let w = c + half_loss_z * s;
        (kappa * z * s / w, w, real_log(w))
    } else if q > 0.0 {
        let x = q.sqrt();
        let s = x.sin() / x;
        let w = x.cos() + half_loss_z * s;
        if w.abs() < POLE_THRESHOLD {
            return Err(Error::PoleProximity {
                z,
                w: w.abs(),
                threshold: POLE_THRESHOLD,
            });
        }
        (kappa * z * s / w, w, real_log(w))
    } else {
        let y = (-q).sqrt();
        // S/C = tanh(y)/y keeps f finite when cosh overflows.
        let ratio = y.tanh() / y;
        let f = kappa * z * ratio / (1.0 + half_loss_z * ratio);
        if y < HYPERBOLIC_LOG_SWITCH {
            let w = y.cosh() + half_loss_z * y.sinh() / y;
            (f, w, real_log(w))
        } else {
            let e = (-2.0 * y).exp();
            let lw = y - std::f64::consts::LN_2 + ((1.0 + e) + half_loss_z / y * (1.0 - e)).ln();
            (f, lw.exp(), C64::new(lw, 0.0))
        }
    };

    Ok(WeiNormanParams {
        z,
        f_plus: f,
        f_minus: f,
        f_z: f_z_from_log(log_w),
        prefactor_exponent: prefactor_exponent(params, z),
        w: C64::new(w, 0.0),
        log_w,
        source: ParamSource::ClosedForm,
    })
}

/// `|Δλ|·z` at which the exceptional-point formulas take over.
pub const EP_LIMIT_SWITCH: f64 = 1e-6;

/// Exact coefficients at `Γ = 2κ`: `f± = κz/(1+κz)`, `w = 1+κz`.
pub fn ep_limit_params(params: &BeamsplitterParams, z: f64) -> Result<WeiNormanParams> {
    params.validate()?;
    if !(z >= 0.0) {
        return Err(Error::NegativeDistance(z));
    }
    let dl_z = params.spacing_squared().abs().sqrt() * z;
    let exceptional =
        ((params.gamma - params.gamma_critical()) / params.gamma_critical()).abs() < crate::spectral::REGIME_TOLERANCE;
    if !(exceptional || dl_z < EP_LIMIT_SWITCH) {
        return Err(Error::NotAtExceptionalPoint(dl_z));
    }
    let kz = params.kappa * z;
    let w = 1.0 + kz;
    let log_w = C64::new(kz.ln_1p(), 0.0);
    Ok(WeiNormanParams {
        z,
        f_plus: kz / w,
        f_minus: kz / w,
        f_z: f_z_from_log(log_w),
        prefactor_exponent: prefactor_exponent(params, z),
        w: C64::new(w, 0.0),
        log_w,
        source: ParamSource::EpLimit,
    })
}

/// `exp(c·X)` for `X` with a single non-zero off-diagonal (a ladder operator).
///
/// Entry `(i, i ± k)` is `c^k / k!` times the product of the `k` couplings it spans.
pub(crate) fn ladder_exp(x: &CMatrix, c: C64) -> CMatrix {
    let dim = x.nrows();
    let lower = dim > 1 && (0..dim - 1).any(|i| x[(i + 1, i)] != C64::new(0.0, 0.0));
    let coupling = |i: usize| if lower { x[(i + 1, i)] } else { x[(i, i + 1)] };
    let mut out = CMatrix::identity(dim, dim);
    for i in 0..dim {
        let mut term = C64::new(1.0, 0.0);
        for k in 1..dim - i {
            term *= coupling(i + k - 1) * c / k as f64;
            if lower {
                out[(i + k, i)] = term;
            } else {
                out[(i, i + k)] = term;
            }
        }
    }
    out
}

/// The three non-scalar factors and the scalar log-prefactor of `G`.
pub(crate) struct Factors {
    pub lower: CMatrix,
    pub diag: Vec<C64>,
    pub upper: CMatrix,
    pub log_scale: C64,
}

pub(crate) fn factors(wn: &WeiNormanParams, ops: &OperatorSet) -> Factors {
    let n = ops.n_photons() as f64;
    let lower = ladder_exp(&ops.j_plus, C64::new(0.0, -wn.f_plus));
    let upper = ladder_exp(&ops.j_minus, C64::new(0.0, -wn.f_minus));
    // e^{−i f_z r} = w^{−2r} = w^N · w^{−2m}; w^N goes into the scalar.
    let diag = (0..ops.dim).map(|m| (wn.log_w * (-2.0 * m as f64)).exp()).collect();
    Factors {
        lower,
        diag,
        upper,
        log_scale: wn.prefactor_exponent + wn.log_w * n,
    }
}

/// `max (|L||D||R|) / max |LDR|`: how much the triple product cancels.
pub(crate) fn cancellation_ratio(f: &Factors, product: &CMatrix) -> f64 {
    let dim = product.nrows();
    let abs_l = f.lower.map(|z| z.norm());
    let abs_r = f.upper.map(|z| z.norm());
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for m in 0..dim {
                s += abs_l[(i, m)] * f.diag[m].norm() * abs_r[(m, j)];
            }
            worst = worst.max(s);
        }
    }
    let out = crate::fock::max_abs(product);
    if out > 0.0 {
        worst / out
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(gamma: f64) -> BeamsplitterParams {
        BeamsplitterParams::new(1.0, 1.0, gamma, 4).unwrap()
    }

    /// The tangent form of the closed-form solution, evaluated literally.
    fn tangent_form(kappa: f64, gamma: f64, z: f64) -> C64 {
        let dl = C64::new(4.0 * kappa * kappa - gamma * gamma, 0.0).sqrt();
        let g = C64::new(gamma, 0.0) / dl;
        let t = (z * dl / 2.0).tan();
        C64::new(gamma / (2.0 * kappa), 0.0) + dl / (2.0 * kappa) * ((t - g) / (1.0 + g * t))
    }

    #[test]
    fn ladder_exp_matches_series() {
        let ops = crate::fock::build_operators(7).unwrap();
        let c = C64::new(0.3, -1.7);
        for x in [&ops.j_plus, &ops.j_minus] {
            let mut series = CMatrix::identity(8, 8);
            let mut term = CMatrix::identity(8, 8);
            for k in 1..8 {
                term = &term * x * c / C64::new(k as f64, 0.0);
                series += &term;
            }
            let d = crate::fock::max_abs(&(ladder_exp(x, c) - series));
            assert!(d < 1e-12 * crate::fock::max_abs(&ladder_exp(x, c)), "{d}");
        }
    }

    #[test]
    fn identity_at_origin() {
        for g in [0.0, 1.0, 2.0, 3.0] {
            let wn = wei_norman_params(&p(g), 0.0).unwrap();
            assert_eq!(wn.f_plus, 0.0);
            assert_eq!(wn.f_minus, 0.0);
            assert_eq!(wn.f_z, C64::new(0.0, 0.0));
            assert_eq!(wn.w, C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn lossless_reduces_to_tangent() {
        let wn = wei_norman_params(&p(0.0), PI / 8.0).unwrap();
        assert!((wn.f_plus - (PI / 8.0).tan()).abs() < 1e-15);
    }

    #[test]
    fn lossless_half_period_is_a_pole() {
        assert!(matches!(
            wei_norman_params(&p(0.0), PI / 2.0),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn agrees_with_tangent_form() {
        for &(g, z) in &[(0.5, 0.7), (1.2, 1.1), (1.9, 2.0), (3.0, 2.0), (4.0, 0.3)] {
            let wn = wei_norman_params(&p(g), z).unwrap();
            let t = tangent_form(1.0, g, z);
            assert!((wn.f_plus - t.re).abs() < 1e-12, "g={g} z={z}");
            assert!(t.im.abs() < 1e-12);
        }
    }

    #[test]
    fn continuous_across_critical_loss() {
        let z = 1.7;
        let at = ep_limit_params(&p(2.0), z).unwrap();
        for eps in [1e-12, 1e-9, 1e-7, 1e-5] {
            for g in [2.0 - eps, 2.0 + eps] {
                let wn = wei_norman_params(&p(g), z).unwrap();
                assert!((wn.f_plus - at.f_plus).abs() < 10.0 * eps + 1e-15);
                assert!((wn.w - at.w).norm() < 10.0 * eps + 1e-15);
            }
        }
    }

    #[test]
    fn ep_limit_values() {
        let wn = ep_limit_params(&p(2.0), 1.0).unwrap();
        assert_eq!(wn.f_plus, 0.5);
        assert_eq!(wn.w, C64::new(2.0, 0.0));
        let far = ep_limit_params(&p(2.0), 1e3).unwrap();
        assert!((far.f_plus - 1000.0 / 1001.0).abs() < 1e-15);
        assert!(ep_limit_params(&p(1.0), 1.0).is_err());
        assert!(matches!(ep_limit_params(&p(2.0), -1.0), Err(Error::NegativeDistance(_))));
    }

    #[test]
    fn large_broken_distance_stays_finite() {
        let wn = wei_norman_params(&p(3.0), 2000.0).unwrap();
        assert!(wn.f_plus.is_finite());
        assert!(wn.log_w.re.is_finite());
        let lim = 2.0 / (3.0 + 5f64.sqrt());
        assert!((wn.f_plus - lim).abs() < 1e-12);
    }

    #[test]
    fn negative_w_gets_branch_offset() {
        // Past the first pole of the lossless chain, cos z < 0.
        let wn = wei_norman_params(&p(0.0), 2.0).unwrap();
        assert!(wn.w.re < 0.0);
        assert!((wn.f_z.re - 2.0 * PI).abs() < 1e-15);
        assert!((C64::new(0.0, 1.0) * wn.f_z / 2.0).exp().re < 0.0);
    }
}
