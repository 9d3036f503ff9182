//! Single-platform problems: owner best responses, the revenue-optimal
//! linear loyalty program for given prices, and the optimal price-plus-program.

use crate::error::{Error, Result};
use crate::programs::{llp, SubsidySchedule};
use crate::utility::{OwnerClass, SelfUseUtility};

/// Utilities closer than this (relative to `1 + |U|`) count as a tie, and
/// ties go to the larger sharing level.
pub const INDIFFERENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub sharing: f64,
    pub utility: f64,
}

/// Keeps the best `(s, U)` seen so far under the larger-share tie rule.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ArgMax {
    best: Option<BestResponse>,
}

impl ArgMax {
    pub(crate) fn new() -> Self {
        Self { best: None }
    }

    pub(crate) fn offer(&mut self, sharing: f64, utility: f64) {
        let cand = BestResponse { sharing, utility };
        self.best = Some(match self.best {
            None => cand,
            Some(b) => {
                let tol = INDIFFERENCE_TOL * (1.0 + b.utility.abs());
                if utility > b.utility + tol || (utility >= b.utility - tol && sharing > b.sharing) {
                    cand
                } else {
                    b
                }
            }
        });
    }

    pub(crate) fn get(self) -> BestResponse {
        self.best.expect("at least one candidate")
    }
}

/// Owner utility `f(1 - s) + p s + W(s)`.
pub fn owner_utility(u: &SelfUseUtility, sch: &SubsidySchedule, s: f64) -> f64 {
    u.retained(s) + sch.total_pay(s)
}

/// Maximizes owner utility over `s in [0, 1]`.
///
/// Utility is continuous and concave on every segment of constant wage, so
/// the maximum sits at a segment end or at the point where `f'(1 - s)`
/// equals the segment wage. Only that finite candidate set is evaluated.
pub fn best_response(u: &SelfUseUtility, sch: &SubsidySchedule) -> BestResponse {
    let mut best = ArgMax::new();
    let mut offer = |s: f64| best.offer(s, owner_utility(u, sch, s));
    offer(0.0);
    for &t in sch.thresholds() {
        offer(t);
    }
    for (lo, hi, wage) in sch.segments() {
        offer(u.sharing_at_wage(wage).clamp(lo, hi));
    }
    if u.marginal_is_bounded() {
        offer(1.0);
    }
    best.get()
}

/// Revenue-optimal linear loyalty program at fixed prices.
#[derive(Debug, Clone, PartialEq)]
pub struct LlpOptimum {
    pub base_pay: f64,
    pub bonus: f64,
    pub threshold: f64,
    pub revenue: f64,
    /// Sharing under the program, `f'(1 - s) = q`.
    pub sharing: f64,
    /// Sharing without any program, `f'(1 - s_0) = p`.
    pub base_sharing: f64,
    /// `None` when `q = p` and there is nothing to rebate.
    pub schedule: Option<SubsidySchedule>,
}

impl LlpOptimum {
    pub fn is_degenerate(&self) -> bool {
        self.schedule.is_none()
    }
}

/// Bonus `q - p` and the highest threshold at which the owner still joins.
///
/// At that threshold the program exactly covers the self-usage the owner
/// gives up beyond the no-program level, so revenue is `(q - p) t`.
pub fn optimal_llp(u: &SelfUseUtility, p: f64, q: f64) -> Result<LlpOptimum> {
    if !(p >= 0.0 && q >= p && q.is_finite()) {
        return Err(Error::Precondition(format!("need q >= p >= 0, got p = {p}, q = {q}")));
    }
    if u.marginal(0.0) <= p {
        return Err(Error::Precondition(format!(
            "owner pay {p} is not below the marginal self-usage value at zero"
        )));
    }
    let base_sharing = if p == 0.0 { 0.0 } else { u.sharing_at_wage(p) };
    if q == p {
        return Ok(LlpOptimum {
            base_pay: p,
            bonus: 0.0,
            threshold: base_sharing,
            revenue: 0.0,
            sharing: base_sharing,
            base_sharing,
            schedule: None,
        });
    }
    let bonus = q - p;
    let sharing = u.sharing_at_wage(q);
    let uncovered = u.retained(base_sharing) - u.retained(sharing) - p * (sharing - base_sharing);
    let threshold = sharing - uncovered / bonus;
    Ok(LlpOptimum {
        base_pay: p,
        bonus,
        threshold,
        revenue: bonus * threshold,
        sharing,
        base_sharing,
        schedule: Some(llp(p, bonus, threshold)?),
    })
}

/// Globally optimal prices and program for a fixed renter charge: no base
/// pay, bonus `q`.
pub fn optimal_monopoly_program(u: &SelfUseUtility, q: f64) -> Result<LlpOptimum> {
    if !(q > 0.0) {
        return Err(Error::Precondition(format!("renter charge must be positive, got {q}")));
    }
    optimal_llp(u, 0.0, q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketOutcome {
    pub sharing: Vec<f64>,
    pub self_use: Vec<f64>,
    pub utility: Vec<f64>,
    /// `(q - p) S`.
    pub income: f64,
    /// `sum W(s_i)`.
    pub total_subsidy: f64,
    pub revenue: f64,
}

impl MarketOutcome {
    pub fn total_sharing(&self) -> f64 {
        self.sharing.iter().sum()
    }
}

/// Platform revenue `(q - p) S - sum W(s_i)` with every owner best-responding.
pub fn revenue<'a, I>(owners: I, sch: &SubsidySchedule, q: f64) -> MarketOutcome
where
    I: IntoIterator<Item = &'a SelfUseUtility>,
{
    let responses: Vec<BestResponse> = owners.into_iter().map(|u| best_response(u, sch)).collect();
    let sharing: Vec<f64> = responses.iter().map(|r| r.sharing).collect();
    let total: f64 = sharing.iter().sum();
    let income = (q - sch.base_pay()) * total;
    let total_subsidy: f64 = sharing.iter().map(|&s| sch.cumulative_bonus(s)).sum();
    MarketOutcome {
        self_use: sharing.iter().map(|s| 1.0 - s).collect(),
        utility: responses.iter().map(|r| r.utility).collect(),
        sharing,
        income,
        total_subsidy,
        revenue: income - total_subsidy,
    }
}

/// For each class, whether it shares more than it would at base pay alone.
pub fn participation_check(owners: &[OwnerClass], sch: &SubsidySchedule) -> Vec<bool> {
    owners
        .iter()
        .map(|c| {
            let s = best_response(&c.utility, sch).sharing;
            s > c.utility.sharing_at_wage(sch.base_pay()) + 1e-12
        })
        .collect()
}

/// Once a class participates, every later (lower-marginal) class does too.
pub fn is_monotone(flags: &[bool]) -> bool {
    flags.windows(2).all(|w| !w[0] || w[1])
}
