//! Adaptive integration of the coefficient equations
//!
//! ```text
//! f₊' = κ(1 + f₊²) − Γ f₊
//! f_z' = −iΓ + 2iκ f₊
//! f₋' = κ exp(−i f_z)
//! ```
//!
//! from `f±(0) = f_z(0) = 0`, with an embedded Dormand–Prince 5(4) pair. The
//! Riccati equation for `f₊` blows up at the poles of the factorization; the
//! integrator stops there and reports where.

use serde::Serialize;

use super::wei_norman::{ParamSource, WeiNormanParams};
use crate::fock::BeamsplitterParams;
use crate::{Error, Result, C64};

pub const RELATIVE_TOLERANCE: f64 = 1e-10;
pub const ABSOLUTE_TOLERANCE: f64 = 1e-12;
/// `|f₊|` beyond this is treated as a blow-up.
pub const BLOWUP_MAGNITUDE: f64 = 1e8;

type State = [C64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeSample {
    pub z: f64,
    pub f_plus: C64,
    pub f_z: C64,
    pub f_minus: C64,
}

impl OdeSample {
    /// View as propagator coefficients; `w = e^{i f_z / 2}`.
    pub fn to_params(&self, params: &BeamsplitterParams) -> WeiNormanParams {
        let log_w = C64::new(0.0, 0.5) * self.f_z;
        let n = params.n_photons as f64;
        WeiNormanParams {
            z: self.z,
            f_plus: self.f_plus.re,
            f_minus: self.f_minus.re,
            f_z: self.f_z,
            prefactor_exponent: C64::new(0.0, -1.0) * params.number_coefficient() * (n * self.z),
            w: log_w.exp(),
            log_w,
            source: ParamSource::Ode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeRun {
    /// One sample per reached grid point, in grid order.
    pub samples: Vec<OdeSample>,
    /// `(pole estimate, last z reached)` when integration hit a blow-up.
    pub blow_up: Option<(f64, f64)>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

fn rhs(kappa: f64, gamma: f64, y: &State) -> State {
    let i = C64::new(0.0, 1.0);
    let fp = y[0];
    [
        kappa * (1.0 + fp * fp) - gamma * fp,
        -i * gamma + 2.0 * i * kappa * fp,
        kappa * (-i * y[1]).exp(),
    ]
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for j in 0..3 {
            out[j] += k[j] * (h * c);
        }
    }
    out
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Step {
    y: State,
    k_last: State,
    err: f64,
}

fn dopri_step(kappa: f64, gamma: f64, y: &State, k1: &State, h: f64) -> Step {
    let f = |s: &State| rhs(kappa, gamma, s);
    let k2 = f(&axpy(y, h, &[(A21, k1)]));
    let k3 = f(&axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(&axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y5 = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(&y5);
    let e = axpy(
        &[C64::new(0.0, 0.0); 3],
        h,
        &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
    );
    let mut acc = 0.0;
    for j in 0..3 {
        let scale = ABSOLUTE_TOLERANCE + RELATIVE_TOLERANCE * y[j].norm().max(y5[j].norm());
        acc += (e[j].re / scale).powi(2) + (e[j].im / scale).powi(2);
    }
    Step {
        y: y5,
        k_last: k7,
        err: (acc / 6.0).sqrt(),
    }
}

/// Integrate along `z_grid` (must start at 0 and ascend), stopping early at a
/// Riccati blow-up.
pub fn integrate(params: &BeamsplitterParams, z_grid: &[f64]) -> Result<OdeRun> {
    params.validate()?;
    if z_grid.first() != Some(&0.0) || z_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid);
    }
    let (kappa, gamma) = (params.kappa, params.gamma);
    let zero = C64::new(0.0, 0.0);
    let mut y: State = [zero; 3];
    let mut z = 0.0;
    let mut k1 = rhs(kappa, gamma, &y);
    let mut h = 1e-3 / (kappa + gamma);
    let mut run = OdeRun {
        samples: vec![OdeSample {
            z: 0.0,
            f_plus: zero,
            f_z: zero,
            f_minus: zero,
        }],
        blow_up: None,
        steps_accepted: 0,
        steps_rejected: 0,
    };

    for &target in &z_grid[1..] {
        while z < target {
            let step = h.min(target - z);
            if step < 1e-13 * z.max(1.0) || y[0].norm() > BLOWUP_MAGNITUDE {
                let fp = y[0].re;
                let estimate = if fp > 0.0 { z + 1.0 / (kappa * fp) } else { z };
                run.blow_up = Some((estimate, z));
                return Ok(run);
            }
            let s = dopri_step(kappa, gamma, &y, &k1, step);
            let finite = s.y.iter().all(|c| c.re.is_finite() && c.im.is_finite());
            if finite && s.err <= 1.0 {
                z = if step == target - z { target } else { z + step };
                y = s.y;
                k1 = s.k_last;
                run.steps_accepted += 1;
                let clipped = step < h;
                let grow = if s.err == 0.0 { 5.0 } else { (0.9 * s.err.powf(-0.2)).min(5.0) };
                if !clipped {
                    h = step * grow;
                }
            } else {
                run.steps_rejected += 1;
                let shrink = if finite { (0.9 * s.err.powf(-0.2)).max(0.2) } else { 0.2 };
                h = step * shrink;
            }
        }
        run.samples.push(OdeSample {
            z: target,
            f_plus: y[0],
            f_z: y[1],
            f_minus: y[2],
        });
    }
    Ok(run)
}

/// Strict form of [`integrate`]: a blow-up before the end of the grid is an error.
pub fn ode_oracle(params: &BeamsplitterParams, z_grid: &[f64]) -> Result<Vec<WeiNormanParams>> {
    let run = integrate(params, z_grid)?;
    if let Some((z_estimate, z_reached)) = run.blow_up {
        return Err(Error::RiccatiBlowUp {
            z_estimate,
            z_reached,
        });
    }
    Ok(run.samples.iter().map(|s| s.to_params(params)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(gamma: f64) -> BeamsplitterParams {
        BeamsplitterParams::new(1.0, 1.0, gamma, 3).unwrap()
    }

    #[test]
    fn lossless_tangent() {
        let out = ode_oracle(&p(0.0), &[0.0, PI / 8.0]).unwrap();
        assert!((out[1].f_plus - (PI / 8.0).tan()).abs() < 1e-8);
    }

    #[test]
    fn critical_loss_half() {
        let out = ode_oracle(&p(2.0), &[0.0, 0.5, 1.0]).unwrap();
        assert!((out[2].f_plus - 0.5).abs() < 1e-8);
        assert!((out[2].w.re - 2.0).abs() < 1e-8);
    }

    #[test]
    fn blow_up_is_located() {
        let err = ode_oracle(&p(0.0), &[0.0, 1.0, 2.0]).unwrap_err();
        match err {
            Error::RiccatiBlowUp { z_estimate, .. } => assert!((z_estimate - PI / 2.0).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
        let run = integrate(&p(0.0), &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(run.samples.len(), 2);
    }

    #[test]
    fn rejects_bad_grid() {
        assert_eq!(integrate(&p(0.0), &[0.1, 1.0]), Err(Error::InvalidGrid));
        assert_eq!(integrate(&p(0.0), &[0.0, 1.0, 0.5]), Err(Error::InvalidGrid));
    }
}
