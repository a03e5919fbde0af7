use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use epbs::cli::{apply_overrides, run, validate_value, RunError, Scenario};
use serde_json::Value;

const EXIT_VALIDATION: u8 = 1;
const EXIT_COMPUTATION: u8 = 2;
const EXIT_IO: u8 = 3;

/// Run one scenario of the lossy-beamsplitter simulation.
///
/// Log verbosity is read from `EPBS_LOG` (e.g. `EPBS_LOG=info`).
#[derive(Parser, Debug)]
#[command(name = "epbs", version)]
struct Args {
    /// spectrum-flow, ep-certify, intensity-decay, order-fit,
    /// occupation-dynamics or custom-evolve.
    scenario: String,
    /// JSON configuration file, or `-` for standard input.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config field, e.g. `--param gamma=2` or `--param z_grid.count=401`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

fn read_config(path: &PathBuf) -> std::io::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path)
    }
}

fn fail(code: u8, lines: impl IntoIterator<Item = String>) -> ExitCode {
    for l in lines {
        eprintln!("error: {l}");
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EPBS_LOG", "warn")).init();
    let args = Args::parse();

    let raw = match read_config(&args.config) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_IO, [format!("{}: {e}", args.config.display())]),
    };
    let mut value: Value = match serde_json::from_str(&raw) {
        Ok(v) => v,
        Err(e) => {
            return fail(
                EXIT_VALIDATION,
                [format!(
                    "{}: line {}, column {}: invalid JSON: {e}",
                    args.config.display(),
                    e.line(),
                    e.column()
                )],
            )
        }
    };

    let mut errors = Vec::new();
    if Scenario::parse(&args.scenario).is_none() {
        errors.push(format!("scenario: unknown scenario `{}`", args.scenario));
    }
    match value.get("scenario").and_then(Value::as_str) {
        Some(s) if s != args.scenario => errors.push(format!(
            "scenario: command line asks for `{}` but the config says `{s}`",
            args.scenario
        )),
        _ => {}
    }
    if let Some(obj) = value.as_object_mut() {
        obj.entry("scenario").or_insert_with(|| Value::String(args.scenario.clone()));
    }
    let mut overrides = Vec::new();
    for p in &args.params {
        match p.split_once('=') {
            Some((k, v)) if !k.is_empty() => overrides.push((k.to_string(), v.to_string())),
            _ => errors.push(format!("--param {p}: expected KEY=VALUE")),
        }
    }
    if let Some(dir) = &args.out {
        overrides.push(("output.dir".into(), Value::String(dir.display().to_string()).to_string()));
    }
    if let Err(es) = apply_overrides(&mut value, &overrides) {
        errors.extend(es.iter().map(|e| e.to_string()));
    }
    let config = match validate_value(&value) {
        Ok(c) if errors.is_empty() => c,
        Ok(_) => return fail(EXIT_VALIDATION, errors),
        Err(es) => return fail(EXIT_VALIDATION, errors.into_iter().chain(es.iter().map(|e| e.to_string()))),
    };

    match run(&config) {
        Ok(manifest) => {
            println!(
                "{}: {} outputs written to {}",
                config.scenario,
                manifest.outputs.len() + 1,
                config.output.dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e @ RunError::Computation { .. }) => fail(EXIT_COMPUTATION, [e.to_string()]),
        Err(e @ RunError::Io { .. }) => fail(EXIT_IO, [e.to_string()]),
    }
}
