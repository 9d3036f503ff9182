//! Multi-threshold programs for markets with several owner classes, and the
//! Hyperbolic Bonus construction.
//!
//! Owner classes are indexed from most self-use-hungry (class 1) to least.
//! A program with one level per class aims to place class `i` in band `i`,
//! i.e. sharing in `[t_i, t_{i+1})` at marginal bonus `B_i`.

use crate::error::{Error, Result};
use crate::monopoly::{self, MarketOutcome};
use crate::programs::SubsidySchedule;
use crate::utility::{validate_ordering, OwnerClass, SelfUseUtility};

/// Classes whose marginals differ by less than this where the construction
/// needs to separate them are rejected as indistinguishable.
pub const MIN_CLASS_SEPARATION: f64 = 1e-6;

/// Hyperbolic Bonus program: `B_i = q / (n - i + 1)`, with each threshold set
/// so class `i` is exactly indifferent between its own band and the
/// crossing point with the previous bonus level.
#[derive(Debug, Clone, PartialEq)]
pub struct HbProgram {
    pub schedule: SubsidySchedule,
    /// `s_i` with `f_i'(1 - s_i) = B_i`.
    pub targets: Vec<f64>,
    /// `s_{i,i-1}` with `f_i'(1 - s_{i,i-1}) = B_{i-1}`; zero for the first class.
    pub crossings: Vec<f64>,
}

fn bonus_between(u: &SelfUseUtility, s_lo: f64, s_hi: f64) -> f64 {
    // integral of f' over [1 - s_hi, 1 - s_lo]
    u.retained(s_lo) - u.retained(s_hi)
}

pub fn build_hb(owners: &[OwnerClass], q: f64) -> Result<HbProgram> {
    if owners.is_empty() {
        return Err(Error::Precondition("no owner classes".into()));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Precondition(format!("renter charge must be positive, got {q}")));
    }
    validate_ordering(owners)?;
    let n = owners.len();
    let bonuses: Vec<f64> = (1..=n).map(|i| q / (n - i + 1) as f64).collect();

    let mut targets = Vec::with_capacity(n);
    let mut crossings = Vec::with_capacity(n);
    let mut thresholds = Vec::with_capacity(n);
    for (i, class) in owners.iter().enumerate() {
        let u = &class.utility;
        let b = bonuses[i];
        let s = u.sharing_at_wage(b);
        let (b_prev, cross) = if i == 0 {
            (0.0, 0.0)
        } else {
            let b_prev = bonuses[i - 1];
            let cross = u.sharing_at_wage(b_prev);
            let sep = owners[i - 1].utility.marginal(1.0 - cross) - b_prev;
            if sep < MIN_CLASS_SEPARATION {
                return Err(Error::Construction {
                    owner: i + 1,
                    reason: format!("indistinguishable from the previous class (separation {sep:e})"),
                });
            }
            (b_prev, cross)
        };
        let t = (b * s - b_prev * cross - bonus_between(u, cross, s)) / (b - b_prev);
        if !(t > cross && t < s) {
            return Err(Error::Construction {
                owner: i + 1,
                reason: format!("threshold {t} outside ({cross}, {s})"),
            });
        }
        targets.push(s);
        crossings.push(cross);
        thresholds.push(t);
    }
    let schedule = SubsidySchedule::new(0.0, thresholds, bonuses).map_err(|e| Error::Construction {
        owner: 0,
        reason: e.to_string(),
    })?;
    Ok(HbProgram {
        schedule,
        targets,
        crossings,
    })
}

/// Same candidate-set maximizer as the single-class case; the utility being
/// maximized already accounts for every ladder level crossed.
pub fn mtlp_best_response(u: &SelfUseUtility, sch: &SubsidySchedule) -> f64 {
    monopoly::best_response(u, sch).sharing
}

/// Market revenue `q S - sum W(s_i)` under a program with no base pay.
pub fn mtlp_revenue(owners: &[OwnerClass], sch: &SubsidySchedule, q: f64) -> Result<MarketOutcome> {
    if sch.base_pay() != 0.0 {
        return Err(Error::Precondition(format!(
            "heterogeneous revenue assumes zero base pay, got {}",
            sch.base_pay()
        )));
    }
    Ok(monopoly::revenue(owners.iter().map(|c| &c.utility), sch, q))
}

/// Per class, how much the bonus earned between `s_{i,i-1}` and `s_i`
/// exceeds the self-usage given up over that stretch.
///
/// Requires one level per class; `s_i` is the class's stationary point in
/// its designated band. A negative value means the class cannot be kept in
/// its band.
pub fn necessary_condition_slack(owners: &[OwnerClass], sch: &SubsidySchedule) -> Result<Vec<f64>> {
    if sch.levels() != owners.len() {
        return Err(Error::Precondition(format!(
            "{} levels for {} owner classes",
            sch.levels(),
            owners.len()
        )));
    }
    let (t, b) = (sch.thresholds(), sch.bonuses());
    Ok(owners
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let u = &c.utility;
            let s = u.sharing_at_wage(b[i]);
            let (b_prev, cross) = if i == 0 {
                (0.0, 0.0)
            } else {
                (b[i - 1], u.sharing_at_wage(b[i - 1]))
            };
            b[i] * (s - t[i]) + b_prev * (t[i] - cross) - bonus_between(u, cross, s)
        })
        .collect())
}

/// Total subsidy paid beyond every class's self-usage opportunity cost.
pub fn oversubsidy_gap(owners: &[OwnerClass], sch: &SubsidySchedule) -> f64 {
    owners
        .iter()
        .map(|c| {
            let s = mtlp_best_response(&c.utility, sch);
            sch.cumulative_bonus(s) - c.utility.opportunity_cost(s)
        })
        .sum()
}

/// Revenue if every class were paid exactly its opportunity cost for the
/// given sharing levels.
pub fn revenue_upper_bound(owners: &[OwnerClass], q: f64, sharing: &[f64]) -> Result<f64> {
    if sharing.len() != owners.len() {
        return Err(Error::Precondition(format!(
            "{} sharing levels for {} owner classes",
            sharing.len(),
            owners.len()
        )));
    }
    let mut total = 0.0;
    for (c, &s) in owners.iter().zip(sharing) {
        crate::error::check_unit("s", s)?;
        total += q * s - c.utility.opportunity_cost(s);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monopoly::optimal_llp;
    use crate::programs::llp;
    use crate::utility::{ordered_classes, stepped_classes, CASE_STUDY_GAMMA};
    use approx::assert_abs_diff_eq;

    fn base() -> SelfUseUtility {
        SelfUseUtility::scaled_log(1.0, CASE_STUDY_GAMMA).unwrap()
    }

    fn expected_band(sch: &SubsidySchedule, i: usize, s: f64) -> bool {
        let t = sch.thresholds();
        s >= t[i] && t.get(i + 1).map_or(true, |&hi| s < hi)
    }

    #[test]
    fn single_class_matches_optimal_llp() {
        let classes = stepped_classes(&base(), 1).unwrap();
        let hb = build_hb(&classes, 12.0).unwrap();
        let o = optimal_llp(&base(), 0.0, 12.0).unwrap();
        assert_eq!(hb.schedule.bonuses(), &[12.0]);
        assert_abs_diff_eq!(hb.schedule.thresholds()[0], o.threshold, epsilon = 1e-12);
        let r = mtlp_revenue(&classes, &hb.schedule, 12.0).unwrap();
        assert_abs_diff_eq!(r.revenue, o.revenue, epsilon = 1e-9);
        assert_abs_diff_eq!(r.revenue, 10.80, epsilon = 5e-3);
        assert_abs_diff_eq!(oversubsidy_gap(&classes, &hb.schedule), 0.0, epsilon = 1e-9);
        let slack = necessary_condition_slack(&classes, &o.schedule.unwrap()).unwrap();
        assert_abs_diff_eq!(slack[0], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn two_class_closed_form() {
        let classes = stepped_classes(&base(), 2).unwrap();
        let hb = build_hb(&classes, 12.0).unwrap();
        assert_eq!(hb.schedule.bonuses(), &[6.0, 12.0]);
        let f1 = &classes[0].utility;
        let s1 = 1.0 - (-CASE_STUDY_GAMMA * 6.0 / 2.0).exp();
        assert_abs_diff_eq!(hb.targets[0], s1, epsilon = 1e-12);
        let t1 = s1 - (f1.eval_f(1.0).unwrap() - f1.eval_f(1.0 - s1).unwrap()) / 6.0;
        assert_abs_diff_eq!(hb.schedule.thresholds()[0], t1, epsilon = 1e-12);
        for slack in necessary_condition_slack(&classes, &hb.schedule).unwrap() {
            assert_abs_diff_eq!(slack, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn two_class_revenue_near_upper_bound() {
        let classes = stepped_classes(&base(), 2).unwrap();
        let hb = build_hb(&classes, 12.0).unwrap();
        let out = mtlp_revenue(&classes, &hb.schedule, 12.0).unwrap();
        let upper = revenue_upper_bound(&classes, 12.0, &out.sharing).unwrap();
        assert!(out.revenue <= upper + 1e-9 && out.revenue >= upper - 12.0);
    }

    #[test]
    fn owners_land_in_their_bands() {
        for n in [2, 3, 7] {
            let classes = stepped_classes(&base(), n).unwrap();
            let hb = build_hb(&classes, 12.0).unwrap();
            for (i, c) in classes.iter().enumerate() {
                let s = mtlp_best_response(&c.utility, &hb.schedule);
                assert!(expected_band(&hb.schedule, i, s), "n={n} class {i} s={s}");
                assert_abs_diff_eq!(s, hb.targets[i], epsilon = 1e-12);
            }
            let top = &classes[n - 1].utility;
            assert_abs_diff_eq!(
                mtlp_best_response(top, &hb.schedule),
                top.sharing_at_wage(12.0),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn tiny_bonuses_attract_nobody() {
        let sch = SubsidySchedule::new(0.0, vec![0.1, 0.2], vec![1e-9, 2e-9]).unwrap();
        // a bounded marginal that stays far above the bonuses
        let u = SelfUseUtility::tabulated(vec![0.0, 0.5, 1.0], vec![5.0, 3.0, 0.0]).unwrap();
        assert_eq!(mtlp_best_response(&u, &sch), 0.0);
    }

    #[test]
    fn inflated_threshold_breaks_condition() {
        let classes = stepped_classes(&base(), 3).unwrap();
        let hb = build_hb(&classes, 12.0).unwrap();
        let mut t = hb.schedule.thresholds().to_vec();
        t[1] += 0.01;
        let bumped = SubsidySchedule::new(0.0, t, hb.schedule.bonuses().to_vec()).unwrap();
        let slack = necessary_condition_slack(&classes, &bumped).unwrap();
        assert!(slack[1] < -1e-6);
        assert_abs_diff_eq!(slack[0], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn gap_bounded_by_charge() {
        for n in 1..=20 {
            let classes = stepped_classes(&base(), n).unwrap();
            let hb = build_hb(&classes, 12.0).unwrap();
            let gap = oversubsidy_gap(&classes, &hb.schedule);
            assert!((-1e-9..=12.0).contains(&gap), "n={n} gap={gap}");
        }
    }

    #[test]
    fn empty_schedule_trivia() {
        let classes = stepped_classes(&base(), 2).unwrap();
        let none = SubsidySchedule::none(0.0).unwrap();
        assert_eq!(mtlp_revenue(&classes, &none, 12.0).unwrap().revenue, 0.0);
        assert_eq!(oversubsidy_gap(&classes, &none), 0.0);
        assert_eq!(revenue_upper_bound(&classes, 12.0, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(revenue_upper_bound(&classes, 12.0, &[0.0]).is_err());
        assert!(mtlp_revenue(&classes, &SubsidySchedule::none(1.0).unwrap(), 12.0).is_err());
    }

    #[test]
    fn upper_bound_single_class_equals_llp() {
        let classes = stepped_classes(&base(), 1).unwrap();
        let s = base().sharing_at_wage(12.0);
        let upper = revenue_upper_bound(&classes, 12.0, &[s]).unwrap();
        let o = optimal_llp(&base(), 0.0, 12.0).unwrap();
        assert_abs_diff_eq!(upper, o.revenue, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let u = base();
        let twins = vec![
            OwnerClass {
                id: 1,
                utility: u.clone(),
            },
            OwnerClass {
                id: 2,
                utility: u.scaled(1.0 + 1e-9).unwrap(),
            },
        ];
        // ordering check fires first for an inverted pair
        assert!(build_hb(&twins, 12.0).is_err());
        let near = ordered_classes(vec![u.scaled(1.0 + 1e-9).unwrap(), u.clone()]).unwrap();
        assert!(matches!(
            build_hb(&near, 12.0),
            Err(Error::Construction { owner: 2, .. })
        ));
        assert!(build_hb(&[], 12.0).is_err());
        assert!(build_hb(&stepped_classes(&u, 2).unwrap(), 0.0).is_err());
        let schedule = llp(0.0, 12.0, 0.5).unwrap();
        assert!(necessary_condition_slack(&stepped_classes(&u, 2).unwrap(), &schedule).is_err());
    }
}
