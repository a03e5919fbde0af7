//! Onset of a steady occupation profile: the first `z` at which the
//! occupations move by less than [`STEADY_TOLERANCE`] over a distance `1/κ`.

use serde::Serialize;

use super::{check_grid, observe, InputState};
use crate::exec::{self, Execution};
use crate::fock::BeamsplitterParams;
use crate::propagator::Propagator;
use crate::Result;

pub const STEADY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyOnset {
    pub z: f64,
    /// Occupations at the onset.
    pub profile: Vec<f64>,
    pub argmax: usize,
    /// `max_m |P(m; z) − P(m; z + 1/κ)|` at the onset.
    pub change: f64,
}

/// `max_m |P(m; z) − P(m; z + 1/κ)|`.
pub fn steady_step(input: &InputState, params: &BeamsplitterParams, z: f64) -> Result<f64> {
    let prop = Propagator::new(params)?;
    Ok(step(&prop, input, z)?.0)
}

fn step(prop: &Propagator, input: &InputState, z: f64) -> Result<(f64, Vec<f64>)> {
    let delta = 1.0 / prop.params().kappa;
    let a = observe(prop, input, z)?.1;
    let b = observe(prop, input, z + delta)?.1;
    let change = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok((change, a))
}

/// First grid point meeting the steady criterion, or `None` if none does.
pub fn steady_onset(
    input: &InputState,
    params: &BeamsplitterParams,
    z_grid: &[f64],
    exec: Execution,
) -> Result<Option<SteadyOnset>> {
    check_grid(z_grid)?;
    let prop = Propagator::new(params)?;
    let steps = exec::try_map(exec, z_grid, |&z| step(&prop, input, z))?;
    Ok(z_grid.iter().zip(steps).find(|(_, (c, _))| *c < STEADY_TOLERANCE).map(|(&z, (change, profile))| {
        let argmax = profile
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (m, &p)| if p > best.1 { (m, p) } else { best })
            .0;
        SteadyOnset {
            z,
            profile,
            argmax,
            change,
        }
    }))
}
