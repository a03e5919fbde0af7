//! Run configuration: a single JSON document, validated in full before
//! anything is constructed.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::exec::Execution;
use crate::fock::BeamsplitterParams;
use crate::observables::{lin_space, log_space, order_fit_grid, InputKind};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SpectrumFlow,
    EpCertify,
    IntensityDecay,
    OrderFit,
    OccupationDynamics,
    CustomEvolve,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::SpectrumFlow,
        Scenario::EpCertify,
        Scenario::IntensityDecay,
        Scenario::OrderFit,
        Scenario::OccupationDynamics,
        Scenario::CustomEvolve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SpectrumFlow => "spectrum-flow",
            Scenario::EpCertify => "ep-certify",
            Scenario::IntensityDecay => "intensity-decay",
            Scenario::OrderFit => "order-fit",
            Scenario::OccupationDynamics => "occupation-dynamics",
            Scenario::CustomEvolve => "custom-evolve",
        }
    }

    pub fn parse(s: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|x| x.name() == s)
    }

    fn needs_z_grid(self) -> bool {
        matches!(
            self,
            Scenario::IntensityDecay | Scenario::OccupationDynamics | Scenario::CustomEvolve
        )
    }

    fn default_input(self) -> Option<InputKind> {
        match self {
            Scenario::IntensityDecay | Scenario::OrderFit => Some(InputKind::AllInA),
            Scenario::OccupationDynamics => Some(InputKind::Noon),
            _ => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => lin_space(self.start, self.stop, self.count),
            Spacing::Log => log_space(self.start, self.stop, self.count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSpec {
    pub kind: InputKind,
    /// `[re, im]` pairs, only for custom input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

impl InputSpec {
    pub fn amplitudes_c64(&self) -> Option<Vec<C64>> {
        self.amplitudes
            .as_ref()
            .map(|v| v.iter().map(|[re, im]| C64::new(*re, *im)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub params: BeamsplitterParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<GridSpec>,
    pub output: OutputSpec,
    #[serde(serialize_with = "ser_execution")]
    pub execution: Execution,
}

fn ser_execution<S: serde::Serializer>(e: &Execution, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match e {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    })
}

impl RunConfig {
    /// Grid for z-resolved scenarios, with the order-fit window as default.
    pub fn z_points(&self) -> Vec<f64> {
        match (&self.z_grid, self.scenario) {
            (Some(g), _) => g.points(),
            (None, Scenario::OrderFit) => order_fit_grid(self.params.kappa),
            (None, _) => vec![],
        }
    }

    pub fn input_kind(&self) -> Option<InputKind> {
        self.input.as_ref().map(|i| i.kind).or(self.scenario.default_input())
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// One validation failure, tied to a field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

struct Collector(Vec<ConfigError>);

impl Collector {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigError {
            field: field.into(),
            message: message.into(),
        });
    }

    fn unknown_keys(&mut self, path: &str, obj: &Map<String, Value>, allowed: &[&str]) {
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                let field = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                self.push(field, format!("unknown field `{key}`"));
            }
        }
    }

    fn object<'a>(&mut self, path: &str, v: &'a Value) -> Option<&'a Map<String, Value>> {
        let o = v.as_object();
        if o.is_none() {
            self.push(path, "must be a JSON object");
        }
        o
    }

    fn number(&mut self, path: &str, obj: &Map<String, Value>, key: &str) -> Option<f64> {
        let field = format!("{path}.{key}");
        match obj.get(key) {
            None => {
                self.push(field, format!("missing required field `{key}`"));
                None
            }
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.push(field, format!("{key} must be a finite number"));
                    None
                }
            },
        }
    }

    fn count(&mut self, path: &str, obj: &Map<String, Value>, key: &str) -> Option<usize> {
        let field = format!("{path}.{key}");
        match obj.get(key) {
            None => {
                self.push(field, format!("missing required field `{key}`"));
                None
            }
            Some(v) => match v.as_u64() {
                Some(x) => Some(x as usize),
                None => {
                    self.push(field, format!("{key} must be a non-negative integer"));
                    None
                }
            },
        }
    }

    fn flag(&mut self, path: &str, obj: &Map<String, Value>, key: &str, default: bool) -> bool {
        match obj.get(key) {
            None => default,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.push(format!("{path}.{key}"), format!("{key} must be true or false"));
                default
            }
        }
    }
}

/// Largest accepted photon number.
pub const MAX_PHOTONS: usize = 200;
/// Largest accepted grid size.
pub const MAX_GRID: usize = 1_000_000;

/// Parse and validate a JSON configuration, collecting every problem.
pub fn validate(raw: &str) -> Result<RunConfig, Vec<ConfigError>> {
    match serde_json::from_str::<Value>(raw) {
        Ok(v) => validate_value(&v),
        Err(e) => Err(vec![ConfigError {
            field: format!("line {}, column {}", e.line(), e.column()),
            message: format!("invalid JSON: {e}"),
        }]),
    }
}

pub fn validate_value(v: &Value) -> Result<RunConfig, Vec<ConfigError>> {
    let mut c = Collector(Vec::new());
    let Some(root) = c.object("config", v) else {
        return Err(c.0);
    };
    c.unknown_keys(
        "",
        root,
        &["scenario", "params", "input", "z_grid", "gamma_grid", "output", "execution"],
    );

    let scenario = match root.get("scenario") {
        None => {
            c.push("scenario", "missing required field `scenario`");
            None
        }
        Some(Value::String(s)) => {
            let sc = Scenario::parse(s);
            if sc.is_none() {
                let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                c.push("scenario", format!("unknown scenario `{s}`; expected one of {}", names.join(", ")));
            }
            sc
        }
        Some(_) => {
            c.push("scenario", "scenario must be a string");
            None
        }
    };

    let params = match root.get("params") {
        None => {
            c.push("params", "missing required field `params`");
            None
        }
        Some(p) => params(&mut c, p),
    };

    let input = root.get("input").and_then(|i| input(&mut c, i, params.map(|p| p.n_photons)));
    let z_grid = root.get("z_grid").and_then(|g| grid(&mut c, "z_grid", g, 0.0));
    let gamma_grid = root.get("gamma_grid").and_then(|g| grid(&mut c, "gamma_grid", g, 0.0));

    let output = match root.get("output") {
        None => Some(OutputSpec {
            dir: PathBuf::from("epbs-out"),
            svg: true,
        }),
        Some(o) => c.object("output", o).and_then(|o| {
            c.unknown_keys("output", o, &["dir", "svg"]);
            let dir = match o.get("dir") {
                None => Some(PathBuf::from("epbs-out")),
                Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
                Some(_) => {
                    c.push("output.dir", "dir must be a non-empty string");
                    None
                }
            };
            let svg = c.flag("output", o, "svg", true);
            dir.map(|dir| OutputSpec { dir, svg })
        }),
    };

    let execution = match root.get("execution") {
        None => Execution::Parallel,
        Some(Value::String(s)) if s == "parallel" => Execution::Parallel,
        Some(Value::String(s)) if s == "sequential" => Execution::Sequential,
        Some(_) => {
            c.push("execution", "execution must be \"parallel\" or \"sequential\"");
            Execution::Parallel
        }
    };

    if let Some(sc) = scenario {
        if sc.needs_z_grid() && !root.contains_key("z_grid") {
            c.push("z_grid", format!("missing required field `z_grid` for scenario {sc}"));
        }
        if sc == Scenario::SpectrumFlow && !root.contains_key("gamma_grid") {
            c.push("gamma_grid", format!("missing required field `gamma_grid` for scenario {sc}"));
        }
        if sc == Scenario::CustomEvolve && input.as_ref().map(|i| i.kind) != Some(InputKind::Custom) {
            if root.contains_key("input") && input.is_some() {
                c.push("input.kind", "scenario custom-evolve needs kind \"custom\"");
            } else if !root.contains_key("input") {
                c.push("input", "missing required field `input` for scenario custom-evolve");
            }
        }
        if sc == Scenario::OrderFit {
            if let Some(p) = params {
                if (p.gamma - 2.0 * p.kappa).abs() > 1e-9 * p.kappa {
                    c.push("params.gamma", "order-fit needs gamma = 2·kappa");
                }
            }
        }
    }

    if !c.0.is_empty() {
        return Err(c.0);
    }
    Ok(RunConfig {
        scenario: scenario.expect("checked"),
        params: params.expect("checked"),
        input,
        z_grid,
        gamma_grid,
        output: output.expect("checked"),
        execution,
    })
}

fn params(c: &mut Collector, v: &Value) -> Option<BeamsplitterParams> {
    let o = c.object("params", v)?;
    c.unknown_keys("params", o, &["omega0", "kappa", "gamma", "n_photons"]);
    let omega0 = c.number("params", o, "omega0");
    let kappa = c.number("params", o, "kappa");
    if let Some(k) = kappa {
        if !(k > 0.0) {
            c.push("params.kappa", "kappa must be positive");
        }
    }
    let gamma = c.number("params", o, "gamma");
    if let Some(g) = gamma {
        if g < 0.0 {
            c.push("params.gamma", "gamma must be non-negative");
        }
    }
    let n = c.count("params", o, "n_photons");
    if let Some(n) = n {
        if n == 0 || n > MAX_PHOTONS {
            c.push("params.n_photons", format!("n_photons must be between 1 and {MAX_PHOTONS}"));
        }
    }
    BeamsplitterParams::new(omega0?, kappa?, gamma?, n?).ok()
}

fn input(c: &mut Collector, v: &Value, n_photons: Option<usize>) -> Option<InputSpec> {
    let o = c.object("input", v)?;
    c.unknown_keys("input", o, &["kind", "amplitudes"]);
    let kind = match o.get("kind") {
        None => {
            c.push("input.kind", "missing required field `kind`");
            None
        }
        Some(k) => {
            let parsed = serde_json::from_value::<InputKind>(k.clone()).ok();
            if parsed.is_none() {
                c.push("input.kind", "kind must be one of all_in_a, all_in_b, noon, custom");
            }
            parsed
        }
    };
    let amplitudes = match o.get("amplitudes") {
        None => None,
        Some(a) => {
            let parsed = serde_json::from_value::<Vec<[f64; 2]>>(a.clone()).ok();
            match &parsed {
                None => c.push("input.amplitudes", "amplitudes must be a list of [re, im] pairs"),
                Some(list) => {
                    if let Some(n) = n_photons {
                        if list.len() != n + 1 {
                            c.push(
                                "input.amplitudes",
                                format!("expected {} amplitudes for n_photons = {n}, got {}", n + 1, list.len()),
                            );
                        }
                    }
                    if list.iter().all(|[re, im]| *re == 0.0 && *im == 0.0) {
                        c.push("input.amplitudes", "amplitudes must not all be zero");
                    }
                }
            }
            parsed
        }
    };
    match (kind?, amplitudes.is_some()) {
        (InputKind::Custom, false) => {
            if !o.contains_key("amplitudes") {
                c.push("input.amplitudes", "custom input needs `amplitudes`");
            }
            None
        }
        (InputKind::Custom, true) => Some(InputSpec {
            kind: InputKind::Custom,
            amplitudes,
        }),
        (_, true) => {
            c.push("input.amplitudes", "amplitudes are only allowed with kind \"custom\"");
            None
        }
        (kind, false) => Some(InputSpec {
            kind,
            amplitudes: None,
        }),
    }
}

fn grid(c: &mut Collector, path: &str, v: &Value, min_start: f64) -> Option<GridSpec> {
    let o = c.object(path, v)?;
    c.unknown_keys(path, o, &["start", "stop", "count", "spacing"]);
    let start = c.number(path, o, "start");
    let stop = c.number(path, o, "stop");
    let count = c.count(path, o, "count");
    let spacing = match o.get("spacing") {
        None => Some(Spacing::Linear),
        Some(Value::String(s)) if s == "linear" => Some(Spacing::Linear),
        Some(Value::String(s)) if s == "log" => Some(Spacing::Log),
        Some(_) => {
            c.push(format!("{path}.spacing"), "spacing must be \"linear\" or \"log\"");
            None
        }
    };
    let mut ok = true;
    if let Some(n) = count {
        if n == 0 || n > MAX_GRID {
            c.push(format!("{path}.count"), format!("count must be between 1 and {MAX_GRID}"));
            ok = false;
        }
    }
    if let Some(s) = start {
        if s < min_start {
            c.push(format!("{path}.start"), format!("start must be at least {min_start}"));
            ok = false;
        }
        if spacing == Some(Spacing::Log) && !(s > 0.0) {
            c.push(format!("{path}.start"), "log spacing needs a positive start");
            ok = false;
        }
    }
    if let (Some(a), Some(b), Some(n)) = (start, stop, count) {
        if (n > 1 && !(b > a)) || (n == 1 && b < a) {
            c.push(path, "grid must be ascending");
            ok = false;
        }
    }
    if !ok {
        return None;
    }
    Some(GridSpec {
        start: start?,
        stop: stop?,
        count: count?,
        spacing: spacing?,
    })
}

/// Apply `key=value` overrides. Bare parameter names address `params`;
/// other keys are dotted paths. Values are parsed as JSON, falling back to
/// plain strings.
pub fn apply_overrides(v: &mut Value, overrides: &[(String, String)]) -> Result<(), Vec<ConfigError>> {
    let mut errors = Vec::new();
    for (key, raw) in overrides {
        let path = match key.as_str() {
            "omega0" | "kappa" | "gamma" | "n_photons" => format!("params.{key}"),
            _ => key.clone(),
        };
        let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.clone()));
        let mut node = &mut *v;
        let parts: Vec<&str> = path.split('.').collect();
        let mut failed = false;
        for part in &parts[..parts.len() - 1] {
            if !node.is_object() {
                failed = true;
                break;
            }
            node = node
                .as_object_mut()
                .expect("checked")
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
        }
        match node.as_object_mut() {
            Some(obj) if !failed && !parts.iter().any(|p| p.is_empty()) => {
                obj.insert(parts[parts.len() - 1].to_string(), value);
            }
            _ => errors.push(ConfigError {
                field: key.clone(),
                message: "override path does not address an object field".into(),
            }),
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "scenario": "occupation-dynamics",
        "params": {"omega0": 1, "kappa": 1, "gamma": 0.5, "n_photons": 5},
        "input": {"kind": "noon"},
        "z_grid": {"start": 0, "stop": 10, "count": 101}
    }"#;

    fn errors(raw: &str) -> Vec<String> {
        validate(raw).unwrap_err().iter().map(|e| e.to_string()).collect()
    }

    #[test]
    fn accepts_good_config() {
        let cfg = validate(GOOD).unwrap();
        assert_eq!(cfg.scenario, Scenario::OccupationDynamics);
        assert_eq!(cfg.z_points().len(), 101);
        assert_eq!(cfg.output.dir, PathBuf::from("epbs-out"));
        assert_eq!(cfg.execution, Execution::Parallel);
    }

    #[test]
    fn negative_kappa() {
        let raw = GOOD.replace("\"kappa\": 1", "\"kappa\": -1");
        let e = errors(&raw);
        assert!(e.iter().any(|m| m.contains("kappa must be positive")), "{e:?}");
    }

    #[test]
    fn missing_scenario_is_named() {
        let raw = GOOD.replace("\"scenario\": \"occupation-dynamics\",", "");
        let e = errors(&raw);
        assert!(e.iter().any(|m| m.starts_with("scenario:")), "{e:?}");
    }

    #[test]
    fn descending_gamma_grid() {
        let raw = r#"{"scenario": "spectrum-flow",
            "params": {"omega0": 1, "kappa": 1, "gamma": 0, "n_photons": 4},
            "gamma_grid": {"start": 4, "stop": 0, "count": 100}}"#;
        let e = errors(raw);
        assert!(e.iter().any(|m| m == "gamma_grid: grid must be ascending"), "{e:?}");
    }

    #[test]
    fn collects_every_error() {
        let raw = r#"{"params": {"omega0": 1, "kappa": -1, "gamma": -2, "n_photons": 0},
            "z_grid": {"start": 0, "stop": 10, "count": 0}, "colour": "red"}"#;
        let e = errors(raw);
        assert!(e.len() >= 6, "{e:?}");
    }

    #[test]
    fn json_syntax_errors_carry_position() {
        let e = errors("{\n  \"scenario\": ,\n}");
        assert!(e[0].starts_with("line 2"), "{e:?}");
    }

    #[test]
    fn custom_input_rules() {
        let base = r#"{"scenario": "custom-evolve",
            "params": {"omega0": 1, "kappa": 1, "gamma": 1, "n_photons": 2},
            "z_grid": {"start": 0, "stop": 1, "count": 3}, "input": INPUT}"#;
        let ok = base.replace("INPUT", r#"{"kind": "custom", "amplitudes": [[1,0],[0,1],[0,0]]}"#);
        assert!(validate(&ok).is_ok());
        let short = base.replace("INPUT", r#"{"kind": "custom", "amplitudes": [[1,0]]}"#);
        assert!(errors(&short).iter().any(|m| m.contains("expected 3 amplitudes")));
        let wrong = base.replace("INPUT", r#"{"kind": "noon"}"#);
        assert!(errors(&wrong).iter().any(|m| m.starts_with("input.kind")));
    }

    #[test]
    fn echo_round_trips() {
        let cfg = validate(GOOD).unwrap();
        let again = validate_value(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn overrides() {
        let mut v: Value = serde_json::from_str(GOOD).unwrap();
        apply_overrides(
            &mut v,
            &[
                ("gamma".into(), "2".into()),
                ("z_grid.count".into(), "11".into()),
                ("input.kind".into(), "all_in_b".into()),
            ],
        )
        .unwrap();
        let cfg = validate_value(&v).unwrap();
        assert_eq!(cfg.params.gamma, 2.0);
        assert_eq!(cfg.z_points().len(), 11);
        assert_eq!(cfg.input_kind(), Some(InputKind::AllInB));
        assert!(apply_overrides(&mut v, &[("params.kappa.x".into(), "1".into())]).is_err());
    }
}
