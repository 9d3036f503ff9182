//! Owner self-usage utilities and the calculus primitives built on them.
//!
//! Every owner holds one unit of a divisible resource and keeps `x = 1 - s`
//! for personal use when sharing `s`. A [`SelfUseUtility`] is concave and
//! non-decreasing on `[0, 1]` with `f(0) = 0` and `f'(1) = 0`, so the
//! marginal `f'` is a strictly decreasing map onto `[0, f'(0))` and can be
//! inverted to turn a per-unit wage into a sharing level.

use crate::error::{check_unit, Error, Result};
use crate::numeric::bisect_decreasing;

/// Shape parameter of `f(x) = (x - x ln x) / gamma` fitted to ride-hailing data.
pub const CASE_STUDY_GAMMA: f64 = 0.832;

/// Lower end of the bracket used when inverting a tabulated marginal.
pub const INVERSE_BRACKET_LO: f64 = 1e-12;
/// Absolute tolerance in `x` for the tabulated inverse.
pub const INVERSE_TOL: f64 = 1e-10;
/// Iteration cap for the tabulated inverse.
pub const INVERSE_MAX_ITER: usize = 200;

/// Number of interior points used to check class ordering.
const ORDERING_GRID: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum SelfUseUtility {
    /// `f(x) = (scale / gamma) (x - x ln x)`, `f'(x) = -(scale / gamma) ln x`.
    ScaledLog { scale: f64, gamma: f64 },
    /// Marginal given by linear interpolation of decreasing samples.
    Tabulated(TabulatedMarginal),
}

impl SelfUseUtility {
    pub fn scaled_log(scale: f64, gamma: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidUtility(format!("scale must be positive, got {scale}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidUtility(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self::ScaledLog { scale, gamma })
    }

    /// `scale * f` for the fitted `gamma`.
    pub fn case_study(scale: f64) -> Result<Self> {
        Self::scaled_log(scale, CASE_STUDY_GAMMA)
    }

    pub fn tabulated(knots: Vec<f64>, marginals: Vec<f64>) -> Result<Self> {
        TabulatedMarginal::new(knots, marginals).map(Self::Tabulated)
    }

    /// The utility `k * f`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidUtility(format!(
                "scaling factor must be positive, got {k}"
            )));
        }
        match self {
            Self::ScaledLog { scale, gamma } => Self::scaled_log(scale * k, *gamma),
            Self::Tabulated(t) => Ok(Self::Tabulated(t.scaled(k))),
        }
    }

    /// Whether `f'(0)` is finite, in which case full sharing is a candidate plan.
    pub fn marginal_is_bounded(&self) -> bool {
        matches!(self, Self::Tabulated(_))
    }

    pub fn eval_f(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.value(x))
    }

    pub fn eval_marginal(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::Domain {
                what: "x",
                value: x,
                domain: "(0, 1]",
            });
        }
        Ok(self.marginal(x))
    }

    /// The self-usage level `x` with `f'(x) = y`. Never returns 0.
    pub fn inverse_marginal(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain {
                what: "y",
                value: y,
                domain: "[0, inf)",
            });
        }
        Ok(self.inverse(y))
    }

    /// Sharing level that equates the marginal self-usage benefit with wage `w`.
    /// A non-positive wage yields no sharing.
    pub fn sharing_at_wage(&self, w: f64) -> f64 {
        if w > 0.0 {
            1.0 - self.inverse(w)
        } else {
            0.0
        }
    }

    /// `\int_a^b f'(x) dx = f(b) - f(a)`.
    pub fn marginal_integral(&self, a: f64, b: f64) -> Result<f64> {
        check_unit("a", a)?;
        check_unit("b", b)?;
        if a > b {
            return Err(Error::Precondition(format!(
                "integral bounds reversed: a = {a} > b = {b}"
            )));
        }
        Ok(self.value(b) - self.value(a))
    }

    /// Self-usage benefit given up by sharing `s`: `\int_{1-s}^1 f'`.
    pub fn opportunity_cost(&self, s: f64) -> f64 {
        self.value(1.0) - self.value(1.0 - s)
    }

    /// `f(1 - s)`, the self-usage benefit left when sharing `s`.
    pub fn retained(&self, s: f64) -> f64 {
        self.value(1.0 - s)
    }

    pub(crate) fn value(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Self::ScaledLog { scale, gamma } => {
                if x == 0.0 {
                    0.0
                } else {
                    scale / gamma * (x - x * x.ln())
                }
            }
            Self::Tabulated(t) => t.integral_to(x),
        }
    }

    pub(crate) fn marginal(&self, x: f64) -> f64 {
        match self {
            Self::ScaledLog { scale, gamma } => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    -(scale / gamma) * x.ln()
                }
            }
            Self::Tabulated(t) => t.marginal(x),
        }
    }

    fn inverse(&self, y: f64) -> f64 {
        match self {
            Self::ScaledLog { scale, gamma } => (-gamma * y / scale).exp().max(f64::MIN_POSITIVE),
            Self::Tabulated(t) => bisect_decreasing(
                |x| t.marginal(x),
                y,
                INVERSE_BRACKET_LO,
                1.0,
                INVERSE_TOL,
                INVERSE_MAX_ITER,
            ),
        }
    }
}

/// Piecewise-linear marginal curve on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedMarginal {
    knots: Vec<f64>,
    marginals: Vec<f64>,
    // integral of the marginal from 0 up to each knot
    cumulative: Vec<f64>,
}

impl TabulatedMarginal {
    /// Knots must run from 0 to 1, strictly increasing; marginals must be
    /// strictly decreasing and end at 0.
    pub fn new(knots: Vec<f64>, marginals: Vec<f64>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidUtility(msg));
        if knots.len() < 2 || knots.len() != marginals.len() {
            return bad(format!(
                "need at least two samples with matching lengths, got {} knots and {} marginals",
                knots.len(),
                marginals.len()
            ));
        }
        if knots.iter().chain(&marginals).any(|v| !v.is_finite()) {
            return bad("samples must be finite".into());
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 {
            return bad("knots must start at 0 and end at 1".into());
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return bad("knots must be strictly increasing".into());
        }
        if marginals.windows(2).any(|w| w[1] >= w[0]) {
            return bad("marginal samples must be strictly decreasing".into());
        }
        if *marginals.last().unwrap() != 0.0 {
            return bad("marginal must vanish at x = 1".into());
        }
        let mut cumulative = Vec::with_capacity(knots.len());
        cumulative.push(0.0);
        for j in 1..knots.len() {
            let area = 0.5 * (marginals[j - 1] + marginals[j]) * (knots[j] - knots[j - 1]);
            cumulative.push(cumulative[j - 1] + area);
        }
        Ok(Self {
            knots,
            marginals,
            cumulative,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            knots: self.knots.clone(),
            marginals: self.marginals.iter().map(|m| m * k).collect(),
            cumulative: self.cumulative.iter().map(|c| c * k).collect(),
        }
    }

    fn segment(&self, x: f64) -> usize {
        let j = self.knots.partition_point(|&k| k <= x);
        j.clamp(1, self.knots.len() - 1) - 1
    }

    fn marginal(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let j = self.segment(x);
        let (x0, x1) = (self.knots[j], self.knots[j + 1]);
        let (y0, y1) = (self.marginals[j], self.marginals[j + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    fn integral_to(&self, x: f64) -> f64 {
        let j = self.segment(x);
        let x0 = self.knots[j];
        self.cumulative[j] + 0.5 * (self.marginals[j] + self.marginal(x)) * (x - x0)
    }
}

/// One class of owners; `id` is 1-based and classes are listed by
/// decreasing marginal self-usage utility.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnerClass {
    pub id: usize,
    pub utility: SelfUseUtility,
}

/// Builds owner classes in the given order, checking that marginals are
/// strictly decreasing across classes on an interior grid.
pub fn ordered_classes(utilities: Vec<SelfUseUtility>) -> Result<Vec<OwnerClass>> {
    let classes: Vec<OwnerClass> = utilities
        .into_iter()
        .enumerate()
        .map(|(i, utility)| OwnerClass { id: i + 1, utility })
        .collect();
    validate_ordering(&classes)?;
    Ok(classes)
}

pub fn validate_ordering(classes: &[OwnerClass]) -> Result<()> {
    for pair in classes.windows(2) {
        for j in 1..=ORDERING_GRID {
            let x = j as f64 / (ORDERING_GRID + 1) as f64;
            if pair[0].utility.marginal(x) <= pair[1].utility.marginal(x) {
                return Err(Error::ClassOrdering {
                    first: pair[0].id,
                    second: pair[1].id,
                    x,
                });
            }
        }
    }
    Ok(())
}

/// Classes `f_i = (n - i + 1) * base` for `i = 1..=n`.
pub fn stepped_classes(base: &SelfUseUtility, n: usize) -> Result<Vec<OwnerClass>> {
    let utilities = (1..=n)
        .map(|i| base.scaled((n - i + 1) as f64))
        .collect::<Result<Vec<_>>>()?;
    ordered_classes(utilities)
}
