//! Period of the normalized occupations in the unbroken regime.
//!
//! A coarse period comes from the autocorrelation of the occupation rows
//! (pooled over `m`) with a quadratic fit through the peak. It is
//! then refined by root-finding `P(m*; z0 + τ) − P(m*; z0)` in `τ` with fresh
//! propagator evaluations, at the grid point and site where `P` changes fastest.

use serde::Serialize;

use super::{observe, EvolutionTrace, InputState};
use crate::fock::BeamsplitterParams;
use crate::propagator::Propagator;
use crate::spectral::{delta_lambda, Regime};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodCheck {
    pub period: f64,
    /// `2π/√(4κ² − Γ²)`.
    pub expected: f64,
    /// `|period − expected|`.
    pub deviation: f64,
    /// Autocorrelation estimate before refinement.
    pub coarse: f64,
}

/// Peaks within this of the highest one count as equally good; the
/// shortest lag among them wins.
const PEAK_SLACK: f64 = 1e-2;
const UNIFORM_TOLERANCE: f64 = 1e-9;

pub fn periodicity_check(trace: &EvolutionTrace) -> Result<PeriodCheck> {
    let p = &trace.params;
    if Regime::classify(p.gamma, p.kappa) != Regime::Unbroken {
        return Err(Error::Precondition(format!(
            "periodic dynamics need Γ < 2κ, got Γ = {} and κ = {}",
            p.gamma, p.kappa
        )));
    }
    let expected = 2.0 * std::f64::consts::PI / delta_lambda(p).re;
    let z = &trace.z_grid;
    let n = z.len();
    if n < 8 {
        return Err(Error::Precondition("grid too short for period detection".into()));
    }
    let h = (z[n - 1] - z[0]) / (n - 1) as f64;
    if z.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > UNIFORM_TOLERANCE * h.max(1.0)) {
        return Err(Error::Precondition("period detection needs a uniform grid".into()));
    }
    if z[n - 1] - z[0] < 2.0 * expected * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "grid spans {} but needs two periods ({})",
            z[n - 1] - z[0],
            2.0 * expected
        )));
    }

    let coarse = coarse_period(&trace.occupations, h).ok_or(Error::NoPeriodFound)?;
    let prop = Propagator::new(p)?;
    let period = refine(&prop, &trace.input, trace, coarse, h)?;
    Ok(PeriodCheck {
        period,
        expected,
        deviation: (period - expected).abs(),
        coarse,
    })
}

fn coarse_period(rows: &[Vec<f64>], h: f64) -> Option<f64> {
    let n = rows.len();
    let dim = rows[0].len();
    let max_lag = 2 * n / 3;
    // Correlation between the series and its shifted copy, pooled over m.
    let r: Vec<f64> = (0..n)
        .map(|lag| {
            if lag > max_lag {
                return 0.0;
            }
            let len = n - lag;
            let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
            for m in 0..dim {
                let a = rows[..len].iter().map(|r| r[m]);
                let b = rows[lag..].iter().map(|r| r[m]);
                let ma = a.clone().sum::<f64>() / len as f64;
                let mb = b.clone().sum::<f64>() / len as f64;
                for (x, y) in a.zip(b) {
                    cov += (x - ma) * (y - mb);
                    va += (x - ma).powi(2);
                    vb += (y - mb).powi(2);
                }
            }
            if va > 0.0 && vb > 0.0 {
                cov / (va * vb).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    // Skip the central lobe.
    let start = (1..max_lag).find(|&k| r[k] < 0.0)?;
    let peaks: Vec<usize> = (start.max(1)..max_lag.min(n - 1))
        .filter(|&k| r[k] >= r[k - 1] && r[k] > r[k + 1])
        .collect();
    let best = peaks.iter().map(|&k| r[k]).fold(f64::NEG_INFINITY, f64::max);
    let k = *peaks.iter().find(|&&k| r[k] >= best - PEAK_SLACK)?;
    let (a, b, c) = (r[k - 1], r[k], r[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some((k as f64 + shift.clamp(-0.5, 0.5)) * h)
}

fn refine(prop: &Propagator, input: &InputState, trace: &EvolutionTrace, coarse: f64, h: f64) -> Result<f64> {
    let z = &trace.z_grid;
    let rows = &trace.occupations;
    let reach = ((coarse / h).ceil() as usize).min(z.len() - 2).max(2);
    let mut anchor = (1, 0, 0.0);
    for k in 1..reach {
        for m in 0..rows[k].len() {
            let slope = (rows[k + 1][m] - rows[k - 1][m]).abs();
            if slope > anchor.2 {
                anchor = (k, m, slope);
            }
        }
    }
    let (k0, m, _) = anchor;
    let z0 = z[k0];
    let target = observe(prop, input, z0)?.1[m];
    let g = |tau: f64| -> Result<f64> { Ok(observe(prop, input, z0 + tau)?.1[m] - target) };

    for width in [h, 2.0 * h] {
        let (a, b) = ((coarse - width).max(h * 0.5), coarse + width);
        let (ga, gb) = (g(a)?, g(b)?);
        if ga == 0.0 {
            return Ok(a);
        }
        if ga.signum() != gb.signum() {
            return illinois(g, a, b, ga, gb);
        }
    }
    Err(Error::NoPeriodFound)
}

/// Regula falsi with the Illinois modification on a sign-changing bracket.
fn illinois<F>(f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        if (b - a).abs() <= 4.0 * f64::EPSILON * c.abs() {
            return Ok(c);
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= 1e-15 * c.abs().max(1.0) {
            return Ok(0.5 * (a + b));
        }
    }
    Ok(0.5 * (a + b))
}

/// `max |P(m; z + period) − P(m; z)|` over the given `z` and all `m`.
pub fn max_period_deviation(
    input: &InputState,
    params: &BeamsplitterParams,
    period: f64,
    z_samples: &[f64],
) -> Result<f64> {
    let prop = Propagator::new(params)?;
    let mut worst: f64 = 0.0;
    for &z in z_samples {
        let a = observe(&prop, input, z)?.1;
        let b = observe(&prop, input, z + period)?.1;
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}
