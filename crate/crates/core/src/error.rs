use thiserror::Error;

use crate::programs::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid utility: {0}")]
    InvalidUtility(String),

    #[error("owner classes are not strictly ordered by marginal utility: class {first} vs {second} at x = {x}")]
    ClassOrdering { first: usize, second: usize, x: f64 },

    #[error("invalid subsidy schedule: {}", join_violations(.0))]
    InvalidSchedule(Vec<Violation>),

    #[error("invalid platform config: {0}")]
    InvalidPlatform(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("hyperbolic bonus construction failed for owner {owner}: {reason}")]
    Construction { owner: usize, reason: String },

    #[error("competition is not viable: stronger platform pays {strong_pay} >= weaker platform charge {weak_charge}")]
    Viability { strong_pay: f64, weak_charge: f64 },

    #[error("unsupported strategy combination: {0}")]
    UnsupportedStrategies(String),

    #[error("squeeze-out could not be certified: {0}")]
    CertificationFailed(String),

    #[error("target indicator is not monotone in k over [{lo}, {hi}]")]
    NonMonotoneIndicator { lo: f64, hi: f64 },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub(crate) fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x,
            domain: "[0, 1]",
        })
    }
}
