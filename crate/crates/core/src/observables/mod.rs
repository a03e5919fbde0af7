//! Post-selected observables: intensity, normalized occupations, input
//! states, exceptional-point order extraction, period detection and
//! steady-state onset.

mod period;
mod steady;

use serde::{Deserialize, Serialize};

pub use period::{max_period_deviation, periodicity_check, PeriodCheck};
pub use steady::{steady_onset, steady_step, SteadyOnset, STEADY_TOLERANCE};

use crate::exec::{self, Execution};
use crate::fock::BeamsplitterParams;
use crate::propagator::{Method, Propagator, ScaledState};
use crate::spectral::Regime;
use crate::{CVector, Error, Result, C64};

/// Relative tolerance on `‖ψ‖ = 1` for constructed inputs.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-12;
/// Squared norm of the renormalized evolved state below which occupations
/// are undefined.
pub const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// `|N⟩_a|0⟩_b`, i.e. `m = 0`.
    AllInA,
    /// `|0⟩_a|N⟩_b`, i.e. `m = N`.
    AllInB,
    /// `(|N,0⟩ + |0,N⟩)/√2`.
    Noon,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputState {
    pub amplitudes: CVector,
    pub kind: InputKind,
}

impl InputState {
    pub fn n_photons(&self) -> usize {
        self.amplitudes.len() - 1
    }
}

pub fn make_input(kind: InputKind, n_photons: usize, custom: Option<&[C64]>) -> Result<InputState> {
    if n_photons == 0 {
        return Err(Error::InvalidPhotonCount(0));
    }
    let dim = n_photons + 1;
    let one = C64::new(1.0, 0.0);
    let mut amplitudes = CVector::zeros(dim);
    match (kind, custom) {
        (InputKind::Custom, Some(v)) => {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            amplitudes = CVector::from_column_slice(v);
            let norm = amplitudes.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::ZeroState);
            }
            amplitudes /= C64::new(norm, 0.0);
        }
        (InputKind::Custom, None) => {
            return Err(Error::Precondition("custom input needs amplitudes".into()));
        }
        (_, Some(_)) => {
            return Err(Error::Precondition("amplitudes are only accepted for custom input".into()));
        }
        (InputKind::AllInA, None) => amplitudes[0] = one,
        (InputKind::AllInB, None) => amplitudes[n_photons] = one,
        (InputKind::Noon, None) => {
            let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            amplitudes[0] = h;
            amplitudes[n_photons] = h;
        }
    }
    Ok(InputState { amplitudes, kind })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intensity {
    /// May be 0 after underflow.
    pub value: f64,
    /// Always finite for a non-zero evolved state.
    pub log_value: f64,
}

impl Intensity {
    fn from_state(s: &ScaledState) -> Self {
        let log_value = s.log_norm_sqr();
        Intensity {
            value: log_value.exp(),
            log_value,
        }
    }
}

fn check_dims(state0: &InputState, params: &BeamsplitterParams) -> Result<()> {
    if state0.amplitudes.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            actual: state0.amplitudes.len(),
        });
    }
    Ok(())
}

/// Post-selection probability `I(z) = ‖G(z)ψ(0)‖²`.
pub fn intensity(state0: &InputState, params: &BeamsplitterParams, z: f64) -> Result<Intensity> {
    check_dims(state0, params)?;
    let prop = Propagator::new(params)?;
    Ok(Intensity::from_state(&prop.evolve(&state0.amplitudes, z)?))
}

fn normalized_occupations(s: &ScaledState, z: f64) -> Result<Vec<f64>> {
    let probs: Vec<f64> = s.scaled.iter().map(|a| a.norm_sqr()).collect();
    let total: f64 = probs.iter().sum();
    if !(total >= WEIGHT_FLOOR) || !total.is_finite() {
        return Err(Error::WeightUnderflow(z));
    }
    Ok(probs.into_iter().map(|p| p / total).collect())
}

/// Occupations `P(m; z) = |(m|ψ(z)⟩|² / ⟨ψ(z)|ψ(z)⟩` of the post-selected state.
pub fn occupations(state0: &InputState, params: &BeamsplitterParams, z: f64) -> Result<Vec<f64>> {
    check_dims(state0, params)?;
    let prop = Propagator::new(params)?;
    normalized_occupations(&prop.evolve(&state0.amplitudes, z)?, z)
}

/// Intensity and occupations at one point from an existing propagator.
pub(crate) fn observe(prop: &Propagator, state0: &InputState, z: f64) -> Result<(Intensity, Vec<f64>, Method)> {
    let g = prop.at(z)?;
    let s = crate::propagator::evolve_state_scaled(&state0.amplitudes, &g, true)?;
    Ok((Intensity::from_state(&s), normalized_occupations(&s, z)?, g.method))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionTrace {
    pub z_grid: Vec<f64>,
    pub intensity: Vec<f64>,
    pub log_intensity: Vec<f64>,
    /// One row per grid point, each summing to 1.
    pub occupations: Vec<Vec<f64>>,
    pub methods: Vec<Method>,
    pub params: BeamsplitterParams,
    pub input: InputState,
}

pub(crate) fn check_grid(z_grid: &[f64]) -> Result<()> {
    if z_grid.is_empty() {
        return Err(Error::Precondition("z grid is empty".into()));
    }
    if !(z_grid[0] >= 0.0) {
        return Err(Error::NegativeDistance(z_grid[0]));
    }
    if z_grid.windows(2).any(|w| !(w[1] > w[0])) || z_grid.iter().any(|z| !z.is_finite()) {
        return Err(Error::Precondition("z grid must be finite and strictly ascending".into()));
    }
    Ok(())
}

/// Evaluate intensity and occupations at every grid point.
pub fn trace_evolution(
    state0: &InputState,
    params: &BeamsplitterParams,
    z_grid: &[f64],
    exec: Execution,
) -> Result<EvolutionTrace> {
    check_grid(z_grid)?;
    check_dims(state0, params)?;
    let prop = Propagator::new(params)?;
    let rows = exec::try_map(exec, z_grid, |&z| observe(&prop, state0, z))?;
    let mut trace = EvolutionTrace {
        z_grid: z_grid.to_vec(),
        intensity: Vec::with_capacity(rows.len()),
        log_intensity: Vec::with_capacity(rows.len()),
        occupations: Vec::with_capacity(rows.len()),
        methods: Vec::with_capacity(rows.len()),
        params: *params,
        input: state0.clone(),
    };
    for (i, occ, method) in rows {
        trace.intensity.push(i.value);
        trace.log_intensity.push(i.log_value);
        trace.occupations.push(occ);
        trace.methods.push(method);
    }
    Ok(trace)
}

/// `κz` bounds and sample count of the order-fit window.
pub const ORDER_FIT_WINDOW: (f64, f64) = (10.0, 100.0);
pub const ORDER_FIT_POINTS: usize = 200;

/// Log-spaced grid covering the order-fit window for coupling `kappa`.
pub fn order_fit_grid(kappa: f64) -> Vec<f64> {
    log_space(ORDER_FIT_WINDOW.0 / kappa, ORDER_FIT_WINDOW.1 / kappa, ORDER_FIT_POINTS)
}

pub fn log_space(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let (a, b) = (start.ln(), stop.ln());
    match count {
        0 => vec![],
        1 => vec![start],
        _ => (0..count)
            .map(|k| {
                if k == 0 {
                    start
                } else if k + 1 == count {
                    stop
                } else {
                    (a + (b - a) * k as f64 / (count - 1) as f64).exp()
                }
            })
            .collect(),
    }
}

pub fn lin_space(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        _ => (0..count)
            .map(|k| {
                if k + 1 == count {
                    stop
                } else {
                    start + (stop - start) * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderFit {
    pub fitted_slope: f64,
    /// `2N`.
    pub expected_slope: f64,
    /// `(z_min, z_max)` of the points used.
    pub window: (f64, f64),
    /// RMS of the linear fit.
    pub residual: f64,
    pub points: usize,
}

/// Slope of `log I(z) + NΓz` against `log z` over `κz ∈ [10, 100]`.
pub fn fit_ep_order(trace: &EvolutionTrace) -> Result<OrderFit> {
    let p = &trace.params;
    if Regime::classify(p.gamma, p.kappa) != Regime::Exceptional {
        return Err(Error::Precondition(format!(
            "order fit needs Γ = 2κ, got Γ = {} and κ = {}",
            p.gamma, p.kappa
        )));
    }
    let (lo, hi) = (ORDER_FIT_WINDOW.0 / p.kappa, ORDER_FIT_WINDOW.1 / p.kappa);
    let z_max = trace.z_grid.last().copied().unwrap_or(0.0);
    if p.kappa * z_max < ORDER_FIT_WINDOW.1 * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("trace must reach κz ≥ 100, ends at κz = {}", p.kappa * z_max)));
    }
    let n = p.n_photons as f64;
    let inside: Vec<(f64, f64)> = trace
        .z_grid
        .iter()
        .zip(&trace.log_intensity)
        .filter(|(z, _)| **z >= lo * (1.0 - 1e-12) && **z <= hi * (1.0 + 1e-12))
        .map(|(z, li)| (*z, li + n * p.gamma * z))
        .collect();
    let xs: Vec<f64> = inside.iter().map(|(z, _)| z.ln()).collect();
    let ys: Vec<f64> = inside.iter().map(|(_, y)| *y).collect();
    if xs.len() < 3 || xs[xs.len() - 1] - xs[0] < std::f64::consts::LN_10 * (1.0 - 1e-9) {
        return Err(Error::Precondition("fit window spans less than one decade".into()));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(OrderFit {
        fitted_slope: slope,
        expected_slope: 2.0 * n,
        window: (inside[0].0, inside[inside.len() - 1].0),
        residual,
        points: xs.len(),
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
