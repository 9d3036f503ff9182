//! Named-scalar assertions against a scenario run.

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;

use crate::run::RunOutput;
use crate::spec::FieldError;
use crate::table::format_sig;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub assertions: BTreeMap<String, Assertion>,
}

impl Expectations {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let e: Self = serde_json::from_str(text).map_err(|err| {
            HarnessError::Validation(vec![FieldError {
                path: "$".into(),
                message: err.to_string(),
            }])
        })?;
        let mut errs = Vec::new();
        for (name, a) in &e.assertions {
            let path = format!("assertions.{name}");
            match (a.value, a.tolerance) {
                (Some(_), Some(t)) if !(t >= 0.0) => errs.push(FieldError {
                    path: format!("{path}.tolerance"),
                    message: format!("must be non-negative, got {t}"),
                }),
                (Some(_), None) => errs.push(FieldError {
                    path: format!("{path}.tolerance"),
                    message: "required with value".into(),
                }),
                (None, Some(_)) => errs.push(FieldError {
                    path: format!("{path}.value"),
                    message: "required with tolerance".into(),
                }),
                (None, None) if a.min.is_none() && a.max.is_none() => errs.push(FieldError {
                    path,
                    message: "needs value/tolerance or a min/max bound".into(),
                }),
                _ => {}
            }
        }
        if errs.is_empty() {
            Ok(e)
        } else {
            Err(HarnessError::Validation(errs))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: String,
    pub status: Status,
    pub measured: Option<f64>,
    pub expected: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Missing => "MISSING",
        };
        match self.measured {
            Some(m) => write!(
                f,
                "{tag} {} measured={} expected {}",
                self.name,
                format_sig(m, 12),
                self.expected
            ),
            None => write!(
                f,
                "{tag} {} not produced by this scenario (expected {})",
                self.name, self.expected
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub outcomes: Vec<Outcome>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.status == Status::Pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            writeln!(f, "{o}")?;
        }
        let failed = self.outcomes.iter().filter(|o| o.status != Status::Pass).count();
        write!(f, "{} assertions, {failed} failed", self.outcomes.len())
    }
}

/// Compares every named expectation with the run's scalars. Value
/// tolerances are multiplied by `tolerance_scale`; min/max bounds are not.
pub fn check(out: &RunOutput, expect: &Expectations, tolerance_scale: f64) -> Report {
    let outcomes = expect
        .assertions
        .iter()
        .map(|(name, a)| {
            let mut expected = Vec::new();
            if let (Some(v), Some(t)) = (a.value, a.tolerance) {
                expected.push(format!(
                    "{} ± {}",
                    format_sig(v, 12),
                    format_sig(t * tolerance_scale, 12)
                ));
            }
            if let Some(lo) = a.min {
                expected.push(format!(">= {}", format_sig(lo, 12)));
            }
            if let Some(hi) = a.max {
                expected.push(format!("<= {}", format_sig(hi, 12)));
            }
            let measured = out.scalars.get(name).copied();
            let status = match measured {
                None => Status::Missing,
                Some(m) => {
                    let near = match (a.value, a.tolerance) {
                        (Some(v), Some(t)) => (m - v).abs() <= t * tolerance_scale,
                        _ => true,
                    };
                    let ok = near && a.min.map_or(true, |lo| m >= lo) && a.max.map_or(true, |hi| m <= hi);
                    if ok {
                        Status::Pass
                    } else {
                        Status::Fail
                    }
                }
            };
            Outcome {
                name: name.clone(),
                status,
                measured,
                expected: expected.join(", "),
            }
        })
        .collect();
    Report { outcomes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ResultTable;

    fn output(pairs: &[(&str, f64)]) -> RunOutput {
        RunOutput {
            table: ResultTable::new(vec![]),
            scalars: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            programs: None,
        }
    }

    #[test]
    fn value_tolerance_and_bounds() {
        let e = Expectations::from_json(
            r#"{"assertions":{"a":{"value":7.2,"tolerance":0.2},"b":{"min":1000},"c":{"value":1,"tolerance":0}}}"#,
        )
        .unwrap();
        let r = check(&output(&[("a", 7.3), ("b", f64::INFINITY), ("c", 1.0)]), &e, 1.0);
        assert!(r.passed(), "{r}");
        let r = check(&output(&[("a", 7.3), ("b", 999.0), ("c", 1.0)]), &e, 0.25);
        let status: Vec<Status> = r.outcomes.iter().map(|o| o.status).collect();
        assert_eq!(status, [Status::Fail, Status::Fail, Status::Pass]);
        assert!(r.outcomes[0].to_string().starts_with("FAIL a measured=7.3"));
    }

    #[test]
    fn missing_names_listed_individually() {
        let e = Expectations::from_json(r#"{"assertions":{"x":{"max":1},"y":{"max":1}}}"#).unwrap();
        let r = check(&output(&[]), &e, 1.0);
        assert!(r.outcomes.iter().all(|o| o.status == Status::Missing));
        assert_eq!(r.outcomes.len(), 2);
    }

    #[test]
    fn malformed_assertions() {
        let err = Expectations::from_json(r#"{"assertions":{"x":{"value":1},"y":{}}}"#).unwrap_err();
        match err {
            HarnessError::Validation(v) => {
                let paths: Vec<&str> = v.iter().map(|f| f.path.as_str()).collect();
                assert_eq!(paths, ["assertions.x.tolerance", "assertions.y"]);
            }
            other => panic!("{other:?}"),
        }
    }
}
