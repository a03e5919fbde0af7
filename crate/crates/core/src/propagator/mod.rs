//! The decaying evolution operator `G(z) = exp(−i H_N z)`.
//!
//! Four routes produce a [`PropagatorMatrix`]:
//!
//! * the factored closed form ([`wei_norman_params`] + [`assemble_propagator`]),
//! * its exact exceptional-point limit ([`ep_limit_params`]),
//! * coefficients integrated from their ODEs ([`ode_oracle`]),
//! * a scaling-and-squaring exponential of the matrix ([`matrix_exp_oracle`]).
//!
//! All results carry a complex log-scale next to the matrix, so `G` is
//! `exp(log_scale) · scaled`. The scalar `e^{−NΓz/2}` underflows long before
//! anything interesting happens at large `NΓz`.
//!
//! [`Propagator::at`] picks the route: the exceptional-point formulas when
//! `|Δλ|·z` is tiny, otherwise the closed form. When the triple product of the
//! factored form would cancel badly (near its poles in the unbroken regime)
//! the distance is split into equal sub-steps that are each well conditioned
//! and the factors are multiplied back together.

mod expm;
mod ode;
mod wei_norman;

use serde::Serialize;

pub use expm::{expm, expm_scaled, NORM_BOUND, TAYLOR_TOLERANCE};
pub use ode::{integrate, ode_oracle, OdeRun, OdeSample, ABSOLUTE_TOLERANCE, BLOWUP_MAGNITUDE, RELATIVE_TOLERANCE};
pub use wei_norman::{
    ep_limit_params, wei_norman_params, ParamSource, WeiNormanParams, EP_LIMIT_SWITCH, POLE_THRESHOLD,
    SERIES_THRESHOLD,
};

use crate::fock::{build_hamiltonian, build_operators, max_abs, BeamsplitterParams, HamiltonianMatrix, OperatorSet};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Largest tolerated cancellation ratio of the factored product. Relative
/// rounding in the assembled matrix is about `ε` times this.
pub const MAX_CANCELLATION: f64 = 1e2;
const MAX_SUBSTEPS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    WeiNorman,
    EpLimit,
    MatrixExp,
    Ode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorMatrix {
    /// `G(z) / exp(log_scale)`.
    pub scaled: CMatrix,
    pub log_scale: C64,
    pub method: Method,
    /// Number of equal sub-steps multiplied together (1 = direct).
    pub substeps: usize,
}

impl PropagatorMatrix {
    pub fn dim(&self) -> usize {
        self.scaled.nrows()
    }

    /// `G(z)` as a plain matrix. Entries may underflow to zero.
    pub fn matrix(&self) -> CMatrix {
        &self.scaled * self.log_scale.exp()
    }

    /// Fold the largest entry of `scaled` into `log_scale`.
    fn renormalized(mut self) -> Self {
        let peak = max_abs(&self.scaled);
        if peak > 0.0 && peak.is_finite() {
            self.scaled /= C64::new(peak, 0.0);
            self.log_scale += peak.ln();
        }
        self
    }

    /// Product `self · other` (apply `other` first).
    pub fn compose(&self, other: &PropagatorMatrix) -> PropagatorMatrix {
        PropagatorMatrix {
            scaled: &self.scaled * &other.scaled,
            log_scale: self.log_scale + other.log_scale,
            method: self.method,
            substeps: self.substeps + other.substeps,
        }
        .renormalized()
    }

    fn power(&self, k: usize) -> PropagatorMatrix {
        debug_assert!(k >= 1);
        let mut base = self.clone();
        let mut acc: Option<PropagatorMatrix> = None;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.compose(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base);
            }
        }
        let mut out = acc.expect("k >= 1");
        out.substeps = k * self.substeps;
        out
    }
}

fn tag(source: ParamSource) -> Method {
    match source {
        ParamSource::ClosedForm => Method::WeiNorman,
        ParamSource::EpLimit => Method::EpLimit,
        ParamSource::Ode => Method::Ode,
    }
}

/// Multiply out the four factors. Each `e^{−i f J±}` is a terminating series.
pub fn assemble_propagator(wn: &WeiNormanParams, ops: &OperatorSet) -> Result<PropagatorMatrix> {
    assemble_with_ratio(wn, ops).map(|(g, _)| g)
}

fn assemble_with_ratio(wn: &WeiNormanParams, ops: &OperatorSet) -> Result<(PropagatorMatrix, f64)> {
    if ops.j_plus.nrows() != ops.dim || ops.j_z.nrows() != ops.dim {
        return Err(Error::DimensionMismatch {
            expected: ops.dim,
            actual: ops.j_plus.nrows(),
        });
    }
    let f = wei_norman::factors(wn, ops);
    let mut scaled = f.lower.clone();
    for (j, d) in f.diag.iter().enumerate() {
        for x in scaled.column_mut(j).iter_mut() {
            *x *= d;
        }
    }
    let scaled = &scaled * &f.upper;
    let ratio = wei_norman::cancellation_ratio(&f, &scaled);
    let g = PropagatorMatrix {
        scaled,
        log_scale: f.log_scale,
        method: tag(wn.source),
        substeps: 1,
    }
    .renormalized();
    Ok((g, ratio))
}

/// `exp(−i H z)` by scaling and squaring.
pub fn matrix_exp_oracle(h: &HamiltonianMatrix, z: f64) -> Result<PropagatorMatrix> {
    if !(z >= 0.0) {
        return Err(Error::NegativeDistance(z));
    }
    let a = &h.matrix * C64::new(0.0, -z);
    let (scaled, log_scale) = expm_scaled(&a)?;
    Ok(PropagatorMatrix {
        scaled,
        log_scale,
        method: Method::MatrixExp,
        substeps: 1,
    }
    .renormalized())
}

/// A propagated state kept as `exp(log_scale) · scaled`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledState {
    pub scaled: CVector,
    pub log_scale: C64,
}

impl ScaledState {
    /// `ln ‖ψ‖²`; finite whenever the scaled vector is non-zero.
    pub fn log_norm_sqr(&self) -> f64 {
        2.0 * (self.scaled.norm().ln() + self.log_scale.re)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.log_norm_sqr().exp()
    }

    pub fn amplitudes(&self) -> CVector {
        &self.scaled * self.log_scale.exp()
    }
}

/// Tolerance on `‖ψ(0)‖ − 1` when normalization is checked.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

fn check_input(state: &CVector, dim: usize, check_norm: bool) -> Result<()> {
    if state.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: state.len(),
        });
    }
    if check_norm {
        let n = state.norm();
        if (n - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized(n));
        }
    }
    Ok(())
}

/// `G(z)|ψ(0)⟩` in log-scaled form, not renormalized.
pub fn evolve_state_scaled(state: &CVector, g: &PropagatorMatrix, check_norm: bool) -> Result<ScaledState> {
    check_input(state, g.dim(), check_norm)?;
    Ok(ScaledState {
        scaled: &g.scaled * state,
        log_scale: g.log_scale,
    })
}

/// `G(z)|ψ(0)⟩`; its squared norm is the post-selection probability.
pub fn evolve_state(state: &CVector, g: &PropagatorMatrix, check_norm: bool) -> Result<CVector> {
    evolve_state_scaled(state, g, check_norm).map(|s| s.amplitudes())
}

/// Parameters, operators and Hamiltonian bundled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Propagator {
    params: BeamsplitterParams,
    ops: OperatorSet,
    hamiltonian: HamiltonianMatrix,
}

impl Propagator {
    pub fn new(params: &BeamsplitterParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params: *params,
            ops: build_operators(params.n_photons)?,
            hamiltonian: build_hamiltonian(params)?,
        })
    }

    pub fn params(&self) -> &BeamsplitterParams {
        &self.params
    }

    pub fn operators(&self) -> &OperatorSet {
        &self.ops
    }

    pub fn hamiltonian(&self) -> &HamiltonianMatrix {
        &self.hamiltonian
    }

    /// `|Δλ|·z` decides the exceptional-point switch.
    fn use_ep_limit(&self, z: f64) -> bool {
        self.params.spacing_squared().abs().sqrt() * z < EP_LIMIT_SWITCH
    }

    fn direct(&self, z: f64) -> Result<(PropagatorMatrix, f64)> {
        let wn = if self.use_ep_limit(z) {
            ep_limit_params(&self.params, z)?
        } else {
            wei_norman_params(&self.params, z)?
        };
        assemble_with_ratio(&wn, &self.ops)
    }

    /// `G(z)` through the factored form, switching as described in the
    /// module docs. In the unbroken regime `z` is first reduced modulo the
    /// period `2π/Δλ`. Falls back to the matrix exponential only if no sub-step
    /// count up to 2¹⁶ is well conditioned.
    pub fn at(&self, z: f64) -> Result<PropagatorMatrix> {
        if !(z >= 0.0) {
            return Err(Error::NegativeDistance(z));
        }
        let d2 = self.params.spacing_squared();
        if d2 > 0.0 {
            // Equidistant real spacing: G(z + T) = (−1)^N e^{−i c T} G(z).
            let period = 2.0 * std::f64::consts::PI / d2.sqrt();
            let turns = (z / period).floor();
            if turns >= 1.0 {
                let mut g = self.at_reduced(z - turns * period)?;
                let n = self.params.n_photons as f64;
                g.log_scale += C64::new(0.0, -1.0) * self.params.number_coefficient() * (n * turns * period)
                    + C64::new(0.0, std::f64::consts::PI * ((n * turns) % 2.0));
                return Ok(g);
            }
        }
        self.at_reduced(z)
    }

    fn at_reduced(&self, z: f64) -> Result<PropagatorMatrix> {
        match self.direct(z) {
            Ok((g, ratio)) if ratio <= MAX_CANCELLATION => return Ok(g),
            Ok(_) | Err(Error::PoleProximity { .. }) => {}
            Err(e) => return Err(e),
        }
        // In the unbroken regime a sub-step of phase ≤ π/4 keeps w ≥ cos(π/4).
        let phase = z * self.params.spacing_squared().max(0.0).sqrt() / 2.0;
        let mut steps = ((phase / std::f64::consts::FRAC_PI_4).ceil() as usize).max(2);
        while steps <= MAX_SUBSTEPS {
            if let Ok((g, ratio)) = self.direct(z / steps as f64) {
                if ratio <= MAX_CANCELLATION {
                    return Ok(g.power(steps));
                }
            }
            steps *= 2;
        }
        log::warn!("factored propagator ill-conditioned at z = {z}; using matrix exponential");
        self.matrix_exp(z)
    }

    /// Factored form evaluated directly, without sub-stepping.
    pub fn wei_norman(&self, z: f64) -> Result<PropagatorMatrix> {
        self.direct(z).map(|(g, _)| g)
    }

    pub fn matrix_exp(&self, z: f64) -> Result<PropagatorMatrix> {
        matrix_exp_oracle(&self.hamiltonian, z)
    }

    /// `G` assembled from integrated coefficients, one per grid point.
    pub fn ode(&self, z_grid: &[f64]) -> Result<Vec<PropagatorMatrix>> {
        ode_oracle(&self.params, z_grid)?
            .iter()
            .map(|wn| assemble_propagator(wn, &self.ops))
            .collect()
    }

    pub fn evolve(&self, state: &CVector, z: f64) -> Result<ScaledState> {
        let g = self.at(z)?;
        evolve_state_scaled(state, &g, true)
    }
}

/// Entrywise max distance between two propagators as plain matrices.
pub fn max_entry_deviation(a: &PropagatorMatrix, b: &PropagatorMatrix) -> f64 {
    max_abs(&(a.matrix() - b.matrix()))
}

/// Entrywise distance relative to the largest entry, computed in log-scaled
/// form so it stays meaningful when `G` itself underflows.
pub fn relative_deviation(a: &PropagatorMatrix, b: &PropagatorMatrix) -> f64 {
    let shift = a.log_scale.re.max(b.log_scale.re);
    let ma = &a.scaled * (a.log_scale - shift).exp();
    let mb = &b.scaled * (b.log_scale - shift).exp();
    let peak = max_abs(&ma).max(max_abs(&mb));
    if peak == 0.0 {
        return 0.0;
    }
    max_abs(&(ma - mb)) / peak
}
