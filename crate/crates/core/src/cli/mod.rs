//! Scenario runner behind the `epbs` binary.
//!
//! Every run writes its data files (CSV with a header row and 17 significant
//! digits, a pretty-printed JSON report, optional SVG plots) and then a
//! `run_manifest.json` listing each file with its SHA-256. Files are read back
//! and checked against the recorded digest before the run counts as done.
//!
//! CSV schemas:
//!
//! | scenario | file | columns |
//! |---|---|---|
//! | spectrum-flow | `spectrum_flow.csv` | gamma, r, re_lambda, im_lambda |
//! | ep-certify | `ep_certify.csv` | n_photons, k, nilpotency_ratio, normalized_norm |
//! | intensity-decay | `intensity.csv` | z, intensity, log_intensity, method |
//! | order-fit | `order_fit.csv` | z, log_intensity, rescaled_log_intensity |
//! | occupation-dynamics | `occupations.csv` | z, m, p |
//! | occupation-dynamics | `intensity.csv` | z, intensity, log_intensity, method |
//! | custom-evolve | `custom_evolve.csv` | z, m, re_psi, im_psi, p |
//! | custom-evolve | `intensity.csv` | z, intensity, log_intensity, method |

mod config;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{
    apply_overrides, validate, validate_value, ConfigError, GridSpec, InputSpec, OutputSpec, RunConfig, Scenario,
    Spacing, MAX_GRID, MAX_PHOTONS,
};

use crate::fock::{build_hamiltonian, BeamsplitterParams};
use crate::observables::{
    fit_ep_order, make_input, periodicity_check, steady_onset, trace_evolution, EvolutionTrace, InputState,
};
use crate::propagator::{evolve_state_scaled, Method, Propagator};
use crate::spectral::{analytic_spectrum, certify_ep, eigenvalue_flow, numeric_spectrum, spectrum_deviation};
use crate::{exec, Error};

pub const MANIFEST_NAME: &str = "run_manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{scenario}: {source}")]
    Computation {
        scenario: Scenario,
        #[source]
        source: Error,
    },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: Scenario,
    pub config: Value,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputRecord>,
}

/// Formatting shared by every CSV number: 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::WeiNorman => "wei_norman",
        Method::EpLimit => "ep_limit",
        Method::MatrixExp => "matrix_exp",
        Method::Ode => "ode",
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// In-memory outputs of one scenario, in write order.
struct Outputs(Vec<(String, Vec<u8>)>);

impl Outputs {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.0.push((name.to_string(), bytes));
    }
}

/// Run a validated configuration, write its outputs and manifest.
pub fn run(config: &RunConfig) -> Result<RunManifest, RunError> {
    let started = Instant::now();
    let outputs = compute(config).map_err(|source| RunError::Computation {
        scenario: config.scenario,
        source,
    })?;
    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let mut records = Vec::with_capacity(outputs.0.len());
    for (name, bytes) in &outputs.0 {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        records.push(OutputRecord {
            file: name.clone(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
    }
    verify(dir, &records)?;

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: config.scenario,
        config: config.to_json(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs: records,
    };
    let path = dir.join(MANIFEST_NAME);
    let bytes = json_bytes(&serde_json::to_value(&manifest).expect("manifest serializes"));
    fs::write(&path, &bytes).map_err(|e| io_err(&path, e))?;
    let back = fs::read(&path).map_err(|e| io_err(&path, e))?;
    if back != bytes {
        return Err(RunError::Io {
            path,
            message: "manifest read back differs from what was written".into(),
        });
    }
    log::info!("{}: wrote {} files to {}", config.scenario, manifest.outputs.len() + 1, dir.display());
    Ok(manifest)
}

/// Check every listed file against its recorded digest.
pub fn verify(dir: &Path, records: &[OutputRecord]) -> Result<(), RunError> {
    for r in records {
        let path = dir.join(&r.file);
        let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
        if bytes.len() != r.bytes || sha256_hex(&bytes) != r.sha256 {
            return Err(RunError::Io {
                path,
                message: "checksum mismatch after write".into(),
            });
        }
    }
    Ok(())
}

fn io_err(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn compute(config: &RunConfig) -> crate::Result<Outputs> {
    let mut out = Outputs(Vec::new());
    match config.scenario {
        Scenario::SpectrumFlow => spectrum_flow(config, &mut out)?,
        Scenario::EpCertify => ep_certify(config, &mut out)?,
        Scenario::IntensityDecay => {
            let trace = trace(config)?;
            intensity_outputs(config, &trace, &mut out);
            out.add(
                "report.json",
                json_bytes(&json!({
                    "scenario": config.scenario,
                    "points": trace.z_grid.len(),
                    "final_log_intensity": trace.log_intensity.last(),
                })),
            );
        }
        Scenario::OrderFit => order_fit(config, &mut out)?,
        Scenario::OccupationDynamics => occupation_dynamics(config, &mut out)?,
        Scenario::CustomEvolve => custom_evolve(config, &mut out)?,
    }
    Ok(out)
}

fn input_state(config: &RunConfig) -> crate::Result<InputState> {
    let kind = config
        .input_kind()
        .ok_or_else(|| Error::Precondition("scenario needs an input state".into()))?;
    let amps = config.input.as_ref().and_then(|i| i.amplitudes_c64());
    make_input(kind, config.params.n_photons, amps.as_deref())
}

fn trace(config: &RunConfig) -> crate::Result<EvolutionTrace> {
    trace_evolution(&input_state(config)?, &config.params, &config.z_points(), config.execution)
}

fn spectrum_flow(config: &RunConfig, out: &mut Outputs) -> crate::Result<()> {
    let grid = config.gamma_grid.expect("validated").points();
    let base = config.params;
    let rows = eigenvalue_flow(&base, &grid, config.execution)?;
    let s = base.spin();
    let csv_rows = rows.iter().flat_map(|row| {
        (0..row.re.len()).map(move |k| {
            vec![
                fmt_num(row.gamma),
                format!("{}", k as f64 - s),
                fmt_num(row.re[k]),
                fmt_num(row.im[k]),
            ]
        })
    });
    out.add("spectrum_flow.csv", csv_bytes(&["gamma", "r", "re_lambda", "im_lambda"], csv_rows));

    let deviations = exec::try_map(config.execution, &grid, |&g| -> crate::Result<f64> {
        let p: BeamsplitterParams = base.with_gamma(g);
        let numeric = numeric_spectrum(&build_hamiltonian(&p)?)?;
        Ok(spectrum_deviation(&analytic_spectrum(&p).eigenvalues, &numeric))
    })?;
    let gc = base.gamma_critical();
    let far = grid
        .iter()
        .zip(&deviations)
        .filter(|(g, _)| (*g - gc).abs() >= 1e-3)
        .map(|(_, d)| *d)
        .fold(0.0, f64::max);
    let near = grid
        .iter()
        .zip(&deviations)
        .filter(|(g, _)| (*g - gc).abs() < 1e-3)
        .map(|(_, d)| *d)
        .fold(0.0, f64::max);
    out.add(
        "report.json",
        json_bytes(&json!({
            "scenario": config.scenario,
            "n_photons": base.n_photons,
            "gamma_critical": gc,
            "points": grid.len(),
            "numeric_max_deviation": far,
            "numeric_max_deviation_near_critical": near,
        })),
    );
    if config.output.svg {
        let series = |part: fn(&crate::spectral::FlowRow, usize) -> f64| -> Vec<Vec<(f64, f64)>> {
            (0..=base.n_photons)
                .map(|k| rows.iter().map(|r| (r.gamma, part(r, k))).collect())
                .collect()
        };
        out.add(
            "spectrum_flow_re.svg",
            svg::line_plot("Re λ", "Γ", "Re λ", &series(|r, k| r.re[k])).into_bytes(),
        );
        out.add(
            "spectrum_flow_im.svg",
            svg::line_plot("Im λ", "Γ", "Im λ", &series(|r, k| r.im[k])).into_bytes(),
        );
    }
    Ok(())
}

fn ep_certify(config: &RunConfig, out: &mut Outputs) -> crate::Result<()> {
    let p = config.params;
    let orders: Vec<usize> = (1..=p.n_photons).collect();
    let certs = exec::try_map(config.execution, &orders, |&n| {
        let q = BeamsplitterParams::new(p.omega0, p.kappa, 2.0 * p.kappa, n)?;
        Ok::<_, Error>(certify_ep(&build_hamiltonian(&q)?))
    })?;
    let rows = certs.iter().flat_map(|c| {
        c.nilpotency_ratios
            .iter()
            .zip(&c.normalized_norms)
            .enumerate()
            .map(move |(k, (r, nn))| {
                vec![(c.order - 1).to_string(), (k + 1).to_string(), fmt_num(*r), fmt_num(*nn)]
            })
    });
    out.add(
        "ep_certify.csv",
        csv_bytes(&["n_photons", "k", "nilpotency_ratio", "normalized_norm"], rows),
    );
    let summary: Vec<Value> = certs
        .iter()
        .map(|c| {
            json!({
                "n_photons": c.order - 1,
                "ep_order": c.order,
                "passed": c.passed,
                "ratio_at_n_plus_1": c.nilpotency_ratios[c.order - 1],
                "ratio_at_n": c.nilpotency_ratios[c.order - 2],
            })
        })
        .collect();
    out.add(
        "report.json",
        json_bytes(&json!({
            "scenario": config.scenario,
            "all_passed": certs.iter().all(|c| c.passed),
            "certificates": summary,
        })),
    );
    Ok(())
}

fn intensity_outputs(config: &RunConfig, trace: &EvolutionTrace, out: &mut Outputs) {
    let rows = (0..trace.z_grid.len()).map(|k| {
        vec![
            fmt_num(trace.z_grid[k]),
            fmt_num(trace.intensity[k]),
            fmt_num(trace.log_intensity[k]),
            method_name(trace.methods[k]).to_string(),
        ]
    });
    out.add("intensity.csv", csv_bytes(&["z", "intensity", "log_intensity", "method"], rows));
    if config.output.svg && config.scenario == Scenario::IntensityDecay {
        let series = vec![trace.z_grid.iter().copied().zip(trace.log_intensity.iter().copied()).collect()];
        out.add(
            "intensity.svg",
            svg::line_plot("post-selection intensity", "z", "ln I", &series).into_bytes(),
        );
    }
}

fn order_fit(config: &RunConfig, out: &mut Outputs) -> crate::Result<()> {
    let trace = trace(config)?;
    let fit = fit_ep_order(&trace)?;
    let p = &trace.params;
    let shift = p.n_photons as f64 * p.gamma;
    let rescaled: Vec<f64> = trace
        .z_grid
        .iter()
        .zip(&trace.log_intensity)
        .map(|(z, li)| li + shift * z)
        .collect();
    let rows = (0..trace.z_grid.len()).map(|k| {
        vec![
            fmt_num(trace.z_grid[k]),
            fmt_num(trace.log_intensity[k]),
            fmt_num(rescaled[k]),
        ]
    });
    out.add(
        "order_fit.csv",
        csv_bytes(&["z", "log_intensity", "rescaled_log_intensity"], rows),
    );
    out.add(
        "report.json",
        json_bytes(&json!({
            "scenario": config.scenario,
            "n_photons": p.n_photons,
            "expected_slope": fit.expected_slope,
            "fitted_slope": fit.fitted_slope,
            "relative_error": (fit.fitted_slope - fit.expected_slope).abs() / fit.expected_slope,
            "window": [fit.window.0, fit.window.1],
            "points": fit.points,
            "residual": fit.residual,
        })),
    );
    if config.output.svg {
        let series = vec![trace.z_grid.iter().map(|z| z.ln()).zip(rescaled.iter().copied()).collect()];
        out.add(
            "order_fit.svg",
            svg::line_plot("ln I + NΓz", "ln z", "ln I + NΓz", &series).into_bytes(),
        );
    }
    Ok(())
}

fn occupation_rows(trace: &EvolutionTrace) -> impl Iterator<Item = Vec<String>> + '_ {
    trace.z_grid.iter().zip(&trace.occupations).flat_map(|(z, row)| {
        row.iter()
            .enumerate()
            .map(move |(m, p)| vec![fmt_num(*z), m.to_string(), fmt_num(*p)])
    })
}

fn occupation_dynamics(config: &RunConfig, out: &mut Outputs) -> crate::Result<()> {
    let trace = trace(config)?;
    out.add("occupations.csv", csv_bytes(&["z", "m", "p"], occupation_rows(&trace)));
    intensity_outputs(config, &trace, out);

    let period = match periodicity_check(&trace) {
        Ok(c) => json!(c),
        Err(Error::Precondition(why)) => json!({ "skipped": why }),
        Err(e) => return Err(e),
    };
    let steady = steady_onset(&trace.input, &trace.params, &trace.z_grid, config.execution)?;
    out.add(
        "report.json",
        json_bytes(&json!({
            "scenario": config.scenario,
            "n_photons": trace.params.n_photons,
            "input": trace.input.kind,
            "points": trace.z_grid.len(),
            "period": period,
            "steady_onset": steady,
        })),
    );
    if config.output.svg {
        out.add(
            "occupations.svg",
            svg::heatmap("P(m; z)", "z", "m", &trace.z_grid, &trace.occupations).into_bytes(),
        );
    }
    Ok(())
}

fn custom_evolve(config: &RunConfig, out: &mut Outputs) -> crate::Result<()> {
    let input = input_state(config)?;
    let grid = config.z_points();
    let prop = Propagator::new(&config.params)?;
    let states = exec::try_map(config.execution, &grid, |&z| {
        let g = prop.at(z)?;
        evolve_state_scaled(&input.amplitudes, &g, true).map(|s| (s, g.method))
    })?;
    let mut rows = Vec::new();
    for (z, (s, _)) in grid.iter().zip(&states) {
        let norm = s.scaled.norm();
        if !(norm > 0.0) {
            return Err(Error::WeightUnderflow(*z));
        }
        for (m, a) in s.scaled.iter().enumerate() {
            let psi = a / norm;
            rows.push(vec![
                fmt_num(*z),
                m.to_string(),
                fmt_num(psi.re),
                fmt_num(psi.im),
                fmt_num(psi.norm_sqr()),
            ]);
        }
    }
    out.add("custom_evolve.csv", csv_bytes(&["z", "m", "re_psi", "im_psi", "p"], rows));
    let irows = grid.iter().zip(&states).map(|(z, (s, m))| {
        let li = s.log_norm_sqr();
        vec![fmt_num(*z), fmt_num(li.exp()), fmt_num(li), method_name(*m).to_string()]
    });
    out.add("intensity.csv", csv_bytes(&["z", "intensity", "log_intensity", "method"], irows));
    out.add(
        "report.json",
        json_bytes(&json!({
            "scenario": config.scenario,
            "n_photons": config.params.n_photons,
            "points": grid.len(),
            "final_log_intensity": states.last().map(|(s, _)| s.log_norm_sqr()),
        })),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(raw: &str, dir: &Path) -> RunConfig {
        let mut v: Value = serde_json::from_str(raw).unwrap();
        v["output"] = json!({ "dir": dir.to_str().unwrap() });
        validate_value(&v).unwrap()
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn spectrum_flow_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(
            r#"{"scenario": "spectrum-flow",
                "params": {"omega0": 1, "kappa": 1, "gamma": 0, "n_photons": 4},
                "gamma_grid": {"start": 0, "stop": 4, "count": 11}}"#,
            tmp.path(),
        );
        let m = run(&cfg).unwrap();
        let csv = fs::read_to_string(tmp.path().join("spectrum_flow.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("gamma,r,re_lambda,im_lambda"));
        assert_eq!(csv.lines().count(), 1 + 11 * 5);
        assert!(m.outputs.iter().any(|o| o.file == "spectrum_flow_re.svg"));
        verify(tmp.path(), &m.outputs).unwrap();
        assert!(tmp.path().join(MANIFEST_NAME).exists());
    }

    #[test]
    fn order_fit_report() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(
            r#"{"scenario": "order-fit",
                "params": {"omega0": 1, "kappa": 1, "gamma": 2, "n_photons": 5}}"#,
            tmp.path(),
        );
        run(&cfg).unwrap();
        let report: Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(report["expected_slope"], json!(10.0));
        assert!((report["fitted_slope"].as_f64().unwrap() - 10.0).abs() < 0.2);
    }

    #[test]
    fn computation_errors_name_the_scenario() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(
            r#"{"scenario": "occupation-dynamics",
                "params": {"omega0": 1, "kappa": 1, "gamma": 0.5, "n_photons": 3},
                "z_grid": {"start": 0, "stop": 10, "count": 3}}"#,
            tmp.path(),
        );
        assert!(run(&cfg).is_ok());
        let mut bad = cfg.clone();
        bad.scenario = Scenario::CustomEvolve;
        let err = run(&bad).unwrap_err();
        assert!(err.to_string().starts_with("custom-evolve:"), "{err}");
    }
}
