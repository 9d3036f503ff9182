//! Experiment configs: a JSON document naming a scenario, its parameters
//! (scalars, lists, or `{from, to, step}` ranges) and an output path.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use crate::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;
/// Upper bound on the number of sweep points one spec may expand to.
pub const MAX_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    MonopolySweep,
    DuopolySweep,
    CriticalK,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Fig3,
        Scenario::Fig4,
        Scenario::Fig5,
        Scenario::Fig6,
        Scenario::Fig7,
        Scenario::Fig8,
        Scenario::MonopolySweep,
        Scenario::DuopolySweep,
        Scenario::CriticalK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Fig5 => "fig5",
            Scenario::Fig6 => "fig6",
            Scenario::Fig7 => "fig7",
            Scenario::Fig8 => "fig8",
            Scenario::MonopolySweep => "monopoly_sweep",
            Scenario::DuopolySweep => "duopoly_sweep",
            Scenario::CriticalK => "critical_k",
        }
    }

    /// Parameters the scenario understands, with defaults where one exists.
    pub fn params(self) -> &'static [ParamDef] {
        use Check::*;
        const GAMMA: ParamDef = ParamDef::fixed("gamma", 0.832, Positive);
        const Q: ParamDef = ParamDef::fixed("q", 12.0, Positive);
        const MONO_SCALE: ParamDef = ParamDef::fixed("scale", 1.0, Positive);
        const DUO_SCALE: ParamDef = ParamDef::fixed("scale", 10.0, Positive);
        const P_A: ParamDef = ParamDef::fixed("p_a", 10.0, Positive);
        const BETA: ParamDef = ParamDef::fixed("beta", 1.0, Positive);
        const K_LO: ParamDef = ParamDef::fixed("k_lo", 1.01, AboveOne);
        const K_HI: ParamDef = ParamDef::fixed("k_hi", 1000.0, AboveOne);
        match self {
            Scenario::Fig3 => {
                const P: &[ParamDef] = &[
                    ParamDef::swept("p", Some((0.0, 6.0, 0.25)), NonNegative),
                    Q,
                    GAMMA,
                    MONO_SCALE,
                ];
                P
            }
            Scenario::Fig4 => {
                const P: &[ParamDef] = &[
                    ParamDef::swept("n", Some((1.0, 20.0, 1.0)), Count),
                    Q,
                    GAMMA,
                    MONO_SCALE,
                ];
                P
            }
            Scenario::Fig5 => {
                const P: &[ParamDef] = &[
                    ParamDef::swept("ratio", Some((1.0, 1.975, 0.025)), AtLeastOne),
                    ParamDef::fixed("k", 6.0, AtLeastOne),
                    P_A,
                    BETA,
                    GAMMA,
                    DUO_SCALE,
                ];
                P
            }
            Scenario::Fig6 => {
                const P: &[ParamDef] = &[
                    ParamDef::swept("k", Some((1.1, 20.0, 0.1)), AtLeastOne),
                    P_A,
                    ParamDef::fixed("p_b", 11.0, Positive),
                    BETA,
                    GAMMA,
                    DUO_SCALE,
                ];
                P
            }
            Scenario::Fig7 => {
                const P: &[ParamDef] = &[
                    ParamDef::swept("ratio", Some((1.0, 1.8, 0.05)), AtLeastOne),
                    ParamDef::fixed("k", 6.0, AtLeastOne),
                    P_A,
                    BETA,
                    GAMMA,
                    DUO_SCALE,
                ];
                P
            }
            Scenario::Fig8 => {
                const P: &[ParamDef] = &[
                    ParamDef::swept("ratio", Some((1.05, 1.95, 0.05)), AtLeastOne),
                    P_A,
                    BETA,
                    K_LO,
                    K_HI,
                    GAMMA,
                    DUO_SCALE,
                ];
                P
            }
            Scenario::MonopolySweep => {
                const P: &[ParamDef] = &[
                    ParamDef::swept("p", None, NonNegative),
                    ParamDef::swept("q", Some((12.0, 12.0, 1.0)), Positive),
                    ParamDef::swept("gamma", Some((0.832, 0.832, 1.0)), Positive),
                    ParamDef::swept("scale", Some((1.0, 1.0, 1.0)), Positive),
                ];
                P
            }
            Scenario::DuopolySweep => {
                const P: &[ParamDef] = &[
                    ParamDef::swept("k", None, AtLeastOne),
                    ParamDef::swept("ratio", None, AtLeastOne),
                    ParamDef::swept("p_a", Some((10.0, 10.0, 1.0)), Positive),
                    ParamDef::swept("beta", Some((1.0, 1.0, 1.0)), Positive),
                    GAMMA,
                    DUO_SCALE,
                ];
                P
            }
            Scenario::CriticalK => {
                const P: &[ParamDef] = &[
                    ParamDef::swept("ratio", None, AtLeastOne),
                    ParamDef::swept("p_a", Some((10.0, 10.0, 1.0)), Positive),
                    ParamDef::swept("beta", Some((1.0, 1.0, 1.0)), Positive),
                    K_LO,
                    K_HI,
                    GAMMA,
                    DUO_SCALE,
                ];
                P
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Positive,
    NonNegative,
    AtLeastOne,
    AboveOne,
    /// Positive integer.
    Count,
}

impl Check {
    fn accepts(self, x: f64) -> bool {
        match self {
            Check::Positive => x > 0.0,
            Check::NonNegative => x >= 0.0,
            Check::AtLeastOne => x >= 1.0,
            Check::AboveOne => x > 1.0,
            Check::Count => x >= 1.0 && x.fract() == 0.0,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Check::Positive => "> 0",
            Check::NonNegative => ">= 0",
            Check::AtLeastOne => ">= 1",
            Check::AboveOne => "> 1",
            Check::Count => "a positive integer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDef {
    pub name: &'static str,
    /// Swept parameters may be ranges or lists and become table columns.
    pub sweepable: bool,
    /// `(from, to, step)`; a scalar default has `from == to`.
    pub default: Option<(f64, f64, f64)>,
    pub check: Check,
}

impl ParamDef {
    const fn fixed(name: &'static str, value: f64, check: Check) -> Self {
        Self {
            name,
            sweepable: false,
            default: Some((value, value, 1.0)),
            check,
        }
    }

    const fn swept(name: &'static str, default: Option<(f64, f64, f64)>, check: Check) -> Self {
        Self {
            name,
            sweepable: true,
            default,
            check,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
    Range { from: f64, to: f64, step: f64 },
}

impl ParamValue {
    /// The values in sweep order. Range points are `from + i * step`, so no
    /// error accumulates along long ranges.
    pub fn values(&self) -> Vec<f64> {
        match self {
            ParamValue::Scalar(x) => vec![*x],
            ParamValue::List(v) => v.clone(),
            ParamValue::Range { from, to, step } => {
                if !(step > &0.0) || to < from {
                    return Vec::new();
                }
                let n = ((to - from) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| from + i as f64 * step).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Adds a brute-force oracle column to monopoly sweeps.
    pub grid_resolution: Option<usize>,
    /// Bracket width used when locating regime switches.
    pub tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    schema_version: u32,
    scenario: Scenario,
    #[serde(default)]
    parameters: BTreeMap<String, Value>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    overrides: Overrides,
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    /// Every parameter the scenario uses, defaults filled in.
    pub parameters: BTreeMap<String, ParamValue>,
    pub output: Option<PathBuf>,
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn field(path: impl Into<String>, message: impl Into<String>) -> FieldError {
    FieldError {
        path: path.into(),
        message: message.into(),
    }
}

fn number(v: &Value, path: &str, errs: &mut Vec<FieldError>) -> Option<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Some(x),
        _ => {
            errs.push(field(path, format!("expected a finite number, got {v}")));
            None
        }
    }
}

fn parse_value(v: &Value, path: &str, errs: &mut Vec<FieldError>) -> Option<ParamValue> {
    match v {
        Value::Number(_) => number(v, path, errs).map(ParamValue::Scalar),
        Value::Array(items) => {
            let before = errs.len();
            let xs: Vec<f64> = items
                .iter()
                .enumerate()
                .filter_map(|(i, x)| number(x, &format!("{path}[{i}]"), errs))
                .collect();
            (errs.len() == before).then_some(ParamValue::List(xs))
        }
        Value::Object(obj) => {
            let before = errs.len();
            for key in obj.keys().filter(|k| !matches!(k.as_str(), "from" | "to" | "step")) {
                errs.push(field(format!("{path}.{key}"), "unknown range field"));
            }
            let mut get = |k: &str| match obj.get(k) {
                Some(x) => number(x, &format!("{path}.{k}"), errs),
                None => {
                    errs.push(field(format!("{path}.{k}"), "missing range field"));
                    None
                }
            };
            let (from, to, step) = (get("from"), get("to"), get("step"));
            if errs.len() != before {
                return None;
            }
            let (from, to, step) = (from?, to?, step?);
            if step <= 0.0 {
                errs.push(field(
                    format!("{path}.step"),
                    format!("step must be positive, got {step}"),
                ));
                return None;
            }
            Some(ParamValue::Range { from, to, step })
        }
        _ => {
            errs.push(field(
                path,
                format!("expected a number, list or {{from, to, step}} range, got {v}"),
            ));
            None
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let raw: RawSpec =
            serde_json::from_str(text).map_err(|e| HarnessError::Validation(vec![field("$", e.to_string())]))?;
        let mut errs = Vec::new();
        if raw.schema_version != SCHEMA_VERSION {
            errs.push(field(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.schema_version),
            ));
        }
        let defs = raw.scenario.params();
        for key in raw.parameters.keys() {
            if !defs.iter().any(|d| d.name == key) {
                let known: Vec<&str> = defs.iter().map(|d| d.name).collect();
                errs.push(field(
                    format!("parameters.{key}"),
                    format!(
                        "unknown parameter for {}; expected one of {}",
                        raw.scenario,
                        known.join(", ")
                    ),
                ));
            }
        }

        let mut parameters = BTreeMap::new();
        for def in defs {
            let path = format!("parameters.{}", def.name);
            let value = match (raw.parameters.get(def.name), def.default) {
                (Some(v), _) => match parse_value(v, &path, &mut errs) {
                    Some(pv) => pv,
                    None => continue,
                },
                (None, Some((from, to, _))) if from == to => ParamValue::Scalar(from),
                (None, Some((from, to, step))) => ParamValue::Range { from, to, step },
                (None, None) => {
                    errs.push(field(&path, format!("required by {}", raw.scenario)));
                    continue;
                }
            };
            let values = value.values();
            if values.is_empty() {
                errs.push(field(&path, "range is empty"));
                continue;
            }
            if !def.sweepable && values.len() > 1 {
                errs.push(field(&path, format!("cannot be swept in {}", raw.scenario)));
                continue;
            }
            if let Some(bad) = values.iter().find(|&&x| !def.check.accepts(x)) {
                errs.push(field(&path, format!("value {bad} must be {}", def.check.describe())));
                continue;
            }
            parameters.insert(def.name.to_string(), value);
        }

        if let Some(r) = raw.overrides.grid_resolution {
            if r < loyalty_core::oracle::MIN_RESOLUTION {
                errs.push(field(
                    "overrides.grid_resolution",
                    format!("must be at least {}", loyalty_core::oracle::MIN_RESOLUTION),
                ));
            }
        }
        if let Some(t) = raw.overrides.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                errs.push(field("overrides.tolerance", format!("must be positive, got {t}")));
            }
        }

        let spec = Self {
            scenario: raw.scenario,
            parameters,
            output: raw.output,
            overrides: raw.overrides,
        };
        if errs.is_empty() && spec.point_count() > MAX_POINTS {
            errs.push(field(
                "parameters",
                format!("sweep expands to more than {MAX_POINTS} points"),
            ));
        }
        if errs.is_empty() {
            Ok(spec)
        } else {
            Err(HarnessError::Validation(errs))
        }
    }

    pub fn from_path(path: &Path) -> Result<(Self, Vec<u8>), HarnessError> {
        let bytes = std::fs::read(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| HarnessError::Validation(vec![field("$", format!("spec is not UTF-8: {e}"))]))?;
        Ok((Self::from_json(text)?, bytes))
    }

    /// A spec for `scenario` with every default in place.
    pub fn defaults(scenario: Scenario) -> Result<Self, HarnessError> {
        Self::from_json(&format!(
            r#"{{"schema_version": {SCHEMA_VERSION}, "scenario": "{scenario}"}}"#
        ))
    }

    /// Names of the swept parameters, in column (lexicographic) order.
    pub fn swept(&self) -> Vec<&str> {
        self.scenario
            .params()
            .iter()
            .filter(|d| d.sweepable)
            .map(|d| d.name)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    fn point_count(&self) -> usize {
        self.swept()
            .iter()
            .map(|k| self.parameters[*k].values().len())
            .fold(1usize, |acc, n| acc.saturating_mul(n))
    }

    /// Cartesian product of the swept parameters, lexicographic in parameter
    /// name with the first name varying slowest.
    pub fn points(&self) -> Vec<Point> {
        let mut points = vec![self.fixed()];
        for name in self.swept() {
            let values = self.parameters[name].values();
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.0.insert(name.to_string(), v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    /// Point holding only the non-swept parameters.
    fn fixed(&self) -> Point {
        let swept = self.swept();
        Point(
            self.parameters
                .iter()
                .filter(|(k, _)| !swept.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.values()[0]))
                .collect(),
        )
    }

    pub fn scalar(&self, name: &str) -> f64 {
        self.parameters[name].values()[0]
    }
}

/// One assignment of every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub BTreeMap<String, f64>);

impl Point {
    pub fn get(&self, name: &str) -> f64 {
        match self.0.get(name) {
            Some(&v) => v,
            None => panic!("parameter {name} missing from validated point"),
        }
    }
}
