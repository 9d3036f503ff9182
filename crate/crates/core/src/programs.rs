//! Subsidy schedules and platform prices.
//!
//! A [`SubsidySchedule`] pays base pay `p` per unit shared plus a marginal
//! bonus that is 0 below the first threshold and `B_k` on `[t_k, t_{k+1})`,
//! with `t_{m+1} = 1`. A single-threshold schedule is a linear loyalty
//! program and an empty one means no program at all.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rule broken by a candidate schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    LengthMismatch { thresholds: usize, bonuses: usize },
    NonFinite,
    NegativeBasePay(f64),
    ThresholdOutOfRange { index: usize, value: f64 },
    ThresholdsNotIncreasing { index: usize },
    BonusNotPositive { index: usize, value: f64 },
    BonusesNotIncreasing { index: usize },
    NegativeSignUp(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LengthMismatch { thresholds, bonuses } => {
                write!(f, "{thresholds} thresholds but {bonuses} bonuses")
            }
            Self::NonFinite => write!(f, "non-finite value"),
            Self::NegativeBasePay(p) => write!(f, "base pay {p} is negative"),
            Self::ThresholdOutOfRange { index, value } => {
                write!(f, "threshold {index} = {value} is outside (0, 1)")
            }
            Self::ThresholdsNotIncreasing { index } => {
                write!(f, "thresholds not increasing at index {index}")
            }
            Self::BonusNotPositive { index, value } => {
                write!(f, "bonus {index} = {value} is not positive")
            }
            Self::BonusesNotIncreasing { index } => {
                write!(f, "bonuses not strictly increasing at index {index}")
            }
            Self::NegativeSignUp(b) => write!(f, "sign-up bonus {b} is negative"),
        }
    }
}

/// Wire form of a schedule as it appears in experiment configs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub p: f64,
    pub thresholds: Vec<f64>,
    pub bonuses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signup: Option<f64>,
}

/// Checks a candidate schedule and returns every violation found.
pub fn validate(doc: &ScheduleDoc) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let values = std::iter::once(&doc.p)
        .chain(&doc.thresholds)
        .chain(&doc.bonuses)
        .chain(doc.signup.as_ref());
    if values.into_iter().any(|v| !v.is_finite()) {
        out.push(Violation::NonFinite);
    }
    if doc.thresholds.len() != doc.bonuses.len() {
        out.push(Violation::LengthMismatch {
            thresholds: doc.thresholds.len(),
            bonuses: doc.bonuses.len(),
        });
    }
    if doc.p < 0.0 {
        out.push(Violation::NegativeBasePay(doc.p));
    }
    for (index, &t) in doc.thresholds.iter().enumerate() {
        if !(t > 0.0 && t < 1.0) {
            out.push(Violation::ThresholdOutOfRange { index, value: t });
        }
    }
    for (index, w) in doc.thresholds.windows(2).enumerate() {
        if w[1] <= w[0] {
            out.push(Violation::ThresholdsNotIncreasing { index: index + 1 });
        }
    }
    for (index, &b) in doc.bonuses.iter().enumerate() {
        if !(b > 0.0) {
            out.push(Violation::BonusNotPositive { index, value: b });
        }
    }
    for (index, w) in doc.bonuses.windows(2).enumerate() {
        if w[1] <= w[0] {
            out.push(Violation::BonusesNotIncreasing { index: index + 1 });
        }
    }
    if let Some(b) = doc.signup {
        if b < 0.0 {
            out.push(Violation::NegativeSignUp(b));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsidySchedule {
    base_pay: f64,
    thresholds: Vec<f64>,
    bonuses: Vec<f64>,
}

impl SubsidySchedule {
    pub fn new(base_pay: f64, thresholds: Vec<f64>, bonuses: Vec<f64>) -> Result<Self> {
        let doc = ScheduleDoc {
            p: base_pay,
            thresholds,
            bonuses,
            signup: None,
        };
        validate(&doc).map_err(Error::InvalidSchedule)?;
        Ok(Self {
            base_pay: doc.p,
            thresholds: doc.thresholds,
            bonuses: doc.bonuses,
        })
    }

    /// Base pay only.
    pub fn none(base_pay: f64) -> Result<Self> {
        Self::new(base_pay, Vec::new(), Vec::new())
    }

    pub fn base_pay(&self) -> f64 {
        self.base_pay
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn bonuses(&self) -> &[f64] {
        &self.bonuses
    }

    pub fn levels(&self) -> usize {
        self.bonuses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonuses.is_empty()
    }

    /// Marginal bonus just above `s`.
    pub fn marginal_bonus(&self, s: f64) -> f64 {
        let k = self.thresholds.partition_point(|&t| t <= s);
        if k == 0 {
            0.0
        } else {
            self.bonuses[k - 1]
        }
    }

    /// `W(s)`: bonus accumulated for sharing `s`.
    pub fn cumulative_bonus(&self, s: f64) -> f64 {
        let mut total = 0.0;
        for (k, (&t, &b)) in self.thresholds.iter().zip(&self.bonuses).enumerate() {
            if s <= t {
                break;
            }
            let upper = self.thresholds.get(k + 1).copied().unwrap_or(f64::INFINITY);
            total += b * (s.min(upper) - t);
        }
        total
    }

    /// Everything the owner is paid for sharing `s`: `p s + W(s)`.
    pub fn total_pay(&self, s: f64) -> f64 {
        self.base_pay * s + self.cumulative_bonus(s)
    }

    /// Sharing intervals with their per-unit wage: `[lo, hi)` paid `p + B`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let first_hi = self.thresholds.first().copied().unwrap_or(1.0);
        let below = std::iter::once((0.0, first_hi, self.base_pay));
        let above = self.thresholds.iter().enumerate().map(move |(k, &t)| {
            let hi = self.thresholds.get(k + 1).copied().unwrap_or(1.0);
            (t, hi, self.base_pay + self.bonuses[k])
        });
        below.chain(above)
    }

    pub fn to_doc(&self) -> ScheduleDoc {
        ScheduleDoc {
            p: self.base_pay,
            thresholds: self.thresholds.clone(),
            bonuses: self.bonuses.clone(),
            signup: None,
        }
    }
}

impl TryFrom<ScheduleDoc> for SubsidySchedule {
    type Error = Error;

    fn try_from(doc: ScheduleDoc) -> Result<Self> {
        if doc.signup.is_some() {
            return Err(Error::Precondition(
                "a sign-up bonus is not part of a per-unit schedule".into(),
            ));
        }
        Self::new(doc.p, doc.thresholds, doc.bonuses)
    }
}

impl From<&SubsidySchedule> for ScheduleDoc {
    fn from(s: &SubsidySchedule) -> Self {
        s.to_doc()
    }
}

/// Linear loyalty program: base pay `p`, plus `bonus` per unit beyond `threshold`.
pub fn llp(p: f64, bonus: f64, threshold: f64) -> Result<SubsidySchedule> {
    SubsidySchedule::new(p, vec![threshold], vec![bonus])
}

/// One-time reward for owners sharing exclusively on the paying platform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignUpBonus(f64);

impl SignUpBonus {
    pub fn new(amount: f64) -> Result<Self> {
        if amount.is_finite() && amount >= 0.0 {
            Ok(Self(amount))
        } else {
            Err(Error::InvalidSchedule(vec![Violation::NegativeSignUp(amount)]))
        }
    }

    pub fn amount(self) -> f64 {
        self.0
    }
}

/// Prices a platform posts: pay `p` per unit to owners, charge `q` per unit to renters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformConfig {
    owner_pay: f64,
    renter_charge: f64,
}

impl PlatformConfig {
    pub fn new(owner_pay: f64, renter_charge: f64) -> Result<Self> {
        if !(owner_pay.is_finite() && owner_pay >= 0.0) {
            return Err(Error::InvalidPlatform(format!(
                "owner pay must be >= 0, got {owner_pay}"
            )));
        }
        if !(renter_charge.is_finite() && renter_charge > 0.0) {
            return Err(Error::InvalidPlatform(format!(
                "renter charge must be > 0, got {renter_charge}"
            )));
        }
        if renter_charge < owner_pay {
            return Err(Error::InvalidPlatform(format!(
                "renter charge {renter_charge} is below owner pay {owner_pay}"
            )));
        }
        Ok(Self {
            owner_pay,
            renter_charge,
        })
    }

    /// Prices with `q = (1 + beta) p`.
    pub fn with_commission(owner_pay: f64, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidPlatform(format!("commission must be >= 0, got {beta}")));
        }
        Self::new(owner_pay, (1.0 + beta) * owner_pay)
    }

    pub fn owner_pay(&self) -> f64 {
        self.owner_pay
    }

    pub fn renter_charge(&self) -> f64 {
        self.renter_charge
    }

    /// Per-unit margin `q - p`.
    pub fn margin(&self) -> f64 {
        self.renter_charge - self.owner_pay
    }

    /// `beta = q / p - 1`, defined only when `p > 0`.
    pub fn commission(&self) -> Option<f64> {
        (self.owner_pay > 0.0).then(|| self.renter_charge / self.owner_pay - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn doc(thresholds: Vec<f64>, bonuses: Vec<f64>) -> ScheduleDoc {
        ScheduleDoc {
            p: 0.0,
            thresholds,
            bonuses,
            signup: None,
        }
    }

    #[test]
    fn cumulative_bonus_examples() {
        let two = SubsidySchedule::new(0.0, vec![0.2, 0.5], vec![1.0, 3.0]).unwrap();
        let one = llp(0.0, 12.0, 0.9).unwrap();
        assert_eq!(two.cumulative_bonus(0.0), 0.0);
        assert_eq!(one.cumulative_bonus(0.0), 0.0);
        assert_abs_diff_eq!(one.cumulative_bonus(0.95), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(two.cumulative_bonus(0.7), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(two.cumulative_bonus(0.35), 0.15, epsilon = 1e-12);
        assert_eq!(SubsidySchedule::none(3.0).unwrap().cumulative_bonus(0.8), 0.0);
    }

    #[test]
    fn llp_examples() {
        let s = llp(0.0, 12.0, 0.9).unwrap();
        assert_eq!(s.cumulative_bonus(0.9), 0.0);
        assert_abs_diff_eq!(s.cumulative_bonus(1.0), 1.2, epsilon = 1e-12);
        assert!(matches!(llp(1.0, 0.0, 0.5), Err(Error::InvalidSchedule(_))));
        assert!(llp(1.0, -2.0, 0.5).is_err());
        assert!(llp(1.0, 2.0, 0.0).is_err());
        assert!(llp(1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn validate_examples() {
        let v = validate(&doc(vec![0.5, 0.3], vec![1.0, 2.0])).unwrap_err();
        assert_eq!(v, vec![Violation::ThresholdsNotIncreasing { index: 1 }]);
        assert_eq!(v[0].to_string(), "thresholds not increasing at index 1");
        let v = validate(&doc(vec![0.3, 0.5], vec![2.0, 2.0])).unwrap_err();
        assert_eq!(v, vec![Violation::BonusesNotIncreasing { index: 1 }]);
        assert!(v[0].to_string().starts_with("bonuses not strictly increasing"));
        assert!(validate(&doc(vec![0.2, 0.5], vec![1.0, 3.0])).is_ok());
    }

    #[test]
    fn validate_reports_everything() {
        let bad = ScheduleDoc {
            p: -1.0,
            thresholds: vec![0.5, 0.5, 1.2],
            bonuses: vec![0.0, 2.0],
            signup: Some(-3.0),
        };
        let v = validate(&bad).unwrap_err();
        assert!(v.contains(&Violation::NegativeBasePay(-1.0)));
        assert!(v.contains(&Violation::LengthMismatch {
            thresholds: 3,
            bonuses: 2
        }));
        assert!(v.contains(&Violation::ThresholdOutOfRange { index: 2, value: 1.2 }));
        assert!(v.contains(&Violation::ThresholdsNotIncreasing { index: 1 }));
        assert!(v.contains(&Violation::BonusNotPositive { index: 0, value: 0.0 }));
        assert!(v.contains(&Violation::NegativeSignUp(-3.0)));
        let nan = doc(vec![f64::NAN], vec![1.0]);
        assert!(validate(&nan).unwrap_err().contains(&Violation::NonFinite));
    }

    #[test]
    fn marginal_bonus_and_segments() {
        let s = SubsidySchedule::new(1.0, vec![0.2, 0.5], vec![1.0, 3.0]).unwrap();
        assert_eq!(s.marginal_bonus(0.1), 0.0);
        assert_eq!(s.marginal_bonus(0.2), 1.0);
        assert_eq!(s.marginal_bonus(0.49), 1.0);
        assert_eq!(s.marginal_bonus(0.5), 3.0);
        let segs: Vec<_> = s.segments().collect();
        assert_eq!(segs, vec![(0.0, 0.2, 1.0), (0.2, 0.5, 2.0), (0.5, 1.0, 4.0)]);
        let empty: Vec<_> = SubsidySchedule::none(2.0).unwrap().segments().collect();
        assert_eq!(empty, vec![(0.0, 1.0, 2.0)]);
    }

    #[test]
    fn json_keys_are_stable() {
        let s = SubsidySchedule::new(0.0, vec![0.2, 0.5], vec![1.0, 3.0]).unwrap();
        let json = serde_json::to_string(&s.to_doc()).unwrap();
        assert_eq!(json, r#"{"p":0.0,"thresholds":[0.2,0.5],"bonuses":[1.0,3.0]}"#);
        let back: ScheduleDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(SubsidySchedule::try_from(back).unwrap(), s);
        let with_signup: ScheduleDoc =
            serde_json::from_str(r#"{"p":10,"thresholds":[],"bonuses":[],"signup":4.5}"#).unwrap();
        assert_eq!(with_signup.signup, Some(4.5));
        assert!(validate(&with_signup).is_ok());
    }

    #[test]
    fn platform_config() {
        let c = PlatformConfig::with_commission(10.0, 1.0).unwrap();
        assert_eq!(c.renter_charge(), 20.0);
        assert_eq!(c.margin(), 10.0);
        assert_eq!(c.commission(), Some(1.0));
        assert_eq!(PlatformConfig::new(0.0, 12.0).unwrap().commission(), None);
        assert!(PlatformConfig::new(5.0, 4.0).is_err());
        assert!(PlatformConfig::new(-1.0, 4.0).is_err());
        assert!(PlatformConfig::new(0.0, 0.0).is_err());
        assert!(SignUpBonus::new(-0.1).is_err());
        assert_eq!(SignUpBonus::new(2.5).unwrap().amount(), 2.5);
    }
}
