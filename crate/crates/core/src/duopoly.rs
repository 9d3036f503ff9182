//! Two platforms competing for two owner classes.
//!
//! Class 1 has the higher marginal self-usage utility. Platform `a` is the
//! weaker one (lower owner pay) whenever the two differ; it fights back with
//! a sign-up bonus or a linear loyalty program while `b` runs no program.

use crate::error::{Error, Result};
use crate::monopoly::{best_response, INDIFFERENCE_TOL};
use crate::numeric::{bisect_switch, golden_section_max};
use crate::programs::{llp, PlatformConfig};
use crate::utility::{validate_ordering, OwnerClass, SelfUseUtility};

/// Golden-section tolerance on the bonus when optimizing the both-class LLP.
pub const BONUS_SEARCH_TOL: f64 = 1e-8;
/// Bisection tolerance on `k` for the critical heterogeneity.
pub const CRITICAL_K_TOL: f64 = 1e-3;
/// Number of log-spaced probes used to check the switch indicator is monotone.
pub const CRITICAL_K_PROBES: usize = 257;
/// Competitor revenue at or below this counts as squeezed out.
pub const SQUEEZE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    NoProgram,
    /// One-time payment to owners who share exclusively on the platform.
    SignUp(f64),
    Llp {
        bonus: f64,
        threshold: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

/// Which owner classes a program is designed to win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    None,
    Owner1,
    Owner2,
    Both,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::None => "none",
            Target::Owner1 => "owner1",
            Target::Owner2 => "owner2",
            Target::Both => "both",
        }
    }

    fn from_won(won: [bool; 2]) -> Self {
        match won {
            [false, false] => Target::None,
            [true, false] => Target::Owner1,
            [false, true] => Target::Owner2,
            [true, true] => Target::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuopolyMarket {
    /// `[f_1, f_2]` with `f_1' > f_2'`.
    pub owners: [SelfUseUtility; 2],
    pub a: PlatformConfig,
    pub b: PlatformConfig,
}

impl DuopolyMarket {
    pub fn new(f1: SelfUseUtility, f2: SelfUseUtility, a: PlatformConfig, b: PlatformConfig) -> Result<Self> {
        let classes = [OwnerClass { id: 1, utility: f1 }, OwnerClass { id: 2, utility: f2 }];
        validate_ordering(&classes)?;
        if a.owner_pay() > 0.0 && b.owner_pay() > 0.0 {
            let (ra, rb) = (a.renter_charge() / a.owner_pay(), b.renter_charge() / b.owner_pay());
            if (ra - rb).abs() > 1e-9 * ra.max(rb) {
                return Err(Error::InvalidPlatform(format!(
                    "platforms must share one commission rate, got {} and {}",
                    ra - 1.0,
                    rb - 1.0
                )));
            }
        }
        let [c1, c2] = classes;
        Ok(Self {
            owners: [c1.utility, c2.utility],
            a,
            b,
        })
    }

    /// `f_2 = base`, `f_1 = k * base`, both platforms charging `(1 + beta) p`.
    pub fn scaled(base: &SelfUseUtility, k: f64, p_a: f64, p_b: f64, beta: f64) -> Result<Self> {
        Self::new(
            base.scaled(k)?,
            base.clone(),
            PlatformConfig::with_commission(p_a, beta)?,
            PlatformConfig::with_commission(p_b, beta)?,
        )
    }

    /// Requires `p_a <= p_b < q_a`.
    fn check_weaker_a(&self) -> Result<()> {
        let (pa, pb) = (self.a.owner_pay(), self.b.owner_pay());
        if pa > pb {
            return Err(Error::Precondition(format!(
                "platform a must be the weaker one, got p_a = {pa} > p_b = {pb}"
            )));
        }
        if pb >= self.a.renter_charge() {
            return Err(Error::Viability {
                strong_pay: pb,
                weak_charge: self.a.renter_charge(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OwnerPlan {
    pub s_a: f64,
    pub s_b: f64,
    pub utility: f64,
    /// Platform whose program the owner takes up, if any.
    pub joined: Option<Side>,
}

fn check_supported(sa: &Strategy, sb: &Strategy) -> Result<()> {
    match (sa, sb) {
        (Strategy::Llp { .. }, Strategy::Llp { .. }) => Err(Error::UnsupportedStrategies(
            "loyalty program against loyalty program".into(),
        )),
        (Strategy::SignUp(_), Strategy::SignUp(_)) => Err(Error::UnsupportedStrategies(
            "sign-up bonus against sign-up bonus".into(),
        )),
        _ => Ok(()),
    }
}

fn plain(u: &SelfUseUtility, pay: f64) -> (f64, f64) {
    let s = u.sharing_at_wage(pay);
    (s, u.retained(s) + pay * s)
}

/// Best `(s, U)` under a loyalty program. A zero threshold or zero bonus is
/// allowed here and reduces to plain sharing at the effective wage.
fn llp_plan(u: &SelfUseUtility, pay: f64, bonus: f64, threshold: f64) -> Result<(f64, f64)> {
    if bonus == 0.0 {
        return Ok(plain(u, pay));
    }
    if threshold == 0.0 {
        if !(bonus > 0.0) {
            return Err(Error::Precondition(format!("bonus must be positive, got {bonus}")));
        }
        return Ok(plain(u, pay + bonus));
    }
    let r = best_response(u, &llp(pay, bonus, threshold)?);
    Ok((r.sharing, r.utility))
}

/// The owner's utility-maximizing plan facing both platforms.
///
/// Plans are either plain sharing at one platform's base pay (split evenly
/// when the pays are equal) or taking up one platform's program
/// exclusively. Ties go to the program.
pub fn owner_choice(
    u: &SelfUseUtility,
    a: (&PlatformConfig, &Strategy),
    b: (&PlatformConfig, &Strategy),
) -> Result<OwnerPlan> {
    check_supported(a.1, b.1)?;
    let (pa, pb) = (a.0.owner_pay(), b.0.owner_pay());
    let mut cands: Vec<(OwnerPlan, bool)> = Vec::with_capacity(4);
    let place = |side: Side, s: f64| match side {
        Side::A => (s, 0.0),
        Side::B => (0.0, s),
    };

    if pa == pb {
        let (s, utility) = plain(u, pa);
        cands.push((
            OwnerPlan {
                s_a: 0.5 * s,
                s_b: 0.5 * s,
                utility,
                joined: None,
            },
            false,
        ));
    } else {
        for (side, pay) in [(Side::A, pa), (Side::B, pb)] {
            let (s, utility) = plain(u, pay);
            let (s_a, s_b) = place(side, s);
            cands.push((
                OwnerPlan {
                    s_a,
                    s_b,
                    utility,
                    joined: None,
                },
                false,
            ));
        }
    }

    for (side, cfg, strategy) in [(Side::A, a.0, a.1), (Side::B, b.0, b.1)] {
        let pay = cfg.owner_pay();
        let (s, utility) = match *strategy {
            Strategy::NoProgram => continue,
            Strategy::SignUp(bonus) => {
                if !(bonus >= 0.0) {
                    return Err(Error::Precondition(format!(
                        "sign-up bonus must be non-negative, got {bonus}"
                    )));
                }
                let (s, v) = plain(u, pay);
                (s, v + bonus)
            }
            Strategy::Llp { bonus, threshold } => {
                let (s, v) = llp_plan(u, pay, bonus, threshold)?;
                if s <= threshold || bonus == 0.0 {
                    // never earns a bonus: no better than plain sharing
                    continue;
                }
                (s, v)
            }
        };
        let (s_a, s_b) = place(side, s);
        cands.push((
            OwnerPlan {
                s_a,
                s_b,
                utility,
                joined: Some(side),
            },
            true,
        ));
    }

    let mut best = cands[0];
    for &(plan, program) in &cands[1..] {
        let tol = INDIFFERENCE_TOL * (1.0 + best.0.utility.abs());
        if plan.utility > best.0.utility + tol || (program && !best.1 && plan.utility >= best.0.utility - tol) {
            best = (plan, program);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuopolyOutcome {
    pub owners: [OwnerPlan; 2],
    pub sharing_a: f64,
    pub sharing_b: f64,
    pub subsidy_a: f64,
    pub subsidy_b: f64,
    pub revenue_a: f64,
    pub revenue_b: f64,
}

fn bonus_paid(strategy: &Strategy, side: Side, plan: &OwnerPlan) -> f64 {
    if plan.joined != Some(side) {
        return 0.0;
    }
    let s = match side {
        Side::A => plan.s_a,
        Side::B => plan.s_b,
    };
    match *strategy {
        Strategy::NoProgram => 0.0,
        Strategy::SignUp(bonus) => bonus,
        Strategy::Llp { bonus, threshold } => bonus * (s - threshold).max(0.0),
    }
}

/// Owner responses and platform revenues for fixed strategies.
pub fn evaluate(m: &DuopolyMarket, sa: &Strategy, sb: &Strategy) -> Result<DuopolyOutcome> {
    let plan = |u: &SelfUseUtility| owner_choice(u, (&m.a, sa), (&m.b, sb));
    let owners = [plan(&m.owners[0])?, plan(&m.owners[1])?];
    let sharing_a = owners[0].s_a + owners[1].s_a;
    let sharing_b = owners[0].s_b + owners[1].s_b;
    let subsidy_a: f64 = owners.iter().map(|o| bonus_paid(sa, Side::A, o)).sum();
    let subsidy_b: f64 = owners.iter().map(|o| bonus_paid(sb, Side::B, o)).sum();
    Ok(DuopolyOutcome {
        owners,
        sharing_a,
        sharing_b,
        subsidy_a,
        subsidy_b,
        revenue_a: m.a.margin() * sharing_a - subsidy_a,
        revenue_b: m.b.margin() * sharing_b - subsidy_b,
    })
}

/// Both platforms without programs: equal split at equal pay, otherwise the
/// higher-paying platform takes all supply.
pub fn no_program_equilibrium(m: &DuopolyMarket) -> Result<DuopolyOutcome> {
    evaluate(m, &Strategy::NoProgram, &Strategy::NoProgram)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignupOptimum {
    pub bonus: f64,
    pub target: Target,
    pub revenue: f64,
    /// Smallest bonus that moves class 1 from `b` to `a`.
    pub bound_owner1: f64,
    /// Smallest bonus that moves class 2 (and hence both classes).
    pub bound_both: f64,
    pub revenue_owner1: f64,
    pub revenue_both: f64,
    /// `s_{1a} / s_{1b}`.
    pub lambda: f64,
    /// `p_b < p_a (1 + lambda beta)`.
    pub condition_holds: bool,
}

/// Bonus that makes the owner indifferent between plain sharing on `b` and
/// exclusive sharing on `a`.
fn switching_cost(u: &SelfUseUtility, pa: f64, pb: f64) -> (f64, f64, f64) {
    let (sa, ua) = plain(u, pa);
    let (sb, ub) = plain(u, pb);
    (ub - ua, sa, sb)
}

/// Revenue-maximizing sign-up bonus for the weaker platform `a`.
pub fn optimal_signup(m: &DuopolyMarket) -> Result<SignupOptimum> {
    m.check_weaker_a()?;
    let (pa, pb) = (m.a.owner_pay(), m.b.owner_pay());
    let margin = m.a.margin();
    let (b1, s1a, s1b) = switching_cost(&m.owners[0], pa, pb);
    let (b2, s2a, _) = switching_cost(&m.owners[1], pa, pb);
    let revenue_owner1 = margin * s1a - b1;
    let revenue_both = margin * (s1a + s2a) - 2.0 * b2;
    let (bonus, target, revenue) = if revenue_owner1.max(revenue_both) <= 0.0 {
        (0.0, Target::None, 0.0)
    } else if revenue_owner1 > revenue_both {
        (b1, Target::Owner1, revenue_owner1)
    } else {
        (b2, Target::Both, revenue_both)
    };
    let lambda = if s1b > 0.0 { s1a / s1b } else { 1.0 };
    Ok(SignupOptimum {
        bonus,
        target,
        revenue,
        bound_owner1: b1,
        bound_both: b2,
        revenue_owner1,
        revenue_both,
        lambda,
        // (1 + lambda beta) p_a with beta p_a = q_a - p_a
        condition_holds: pb < pa + lambda * margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlpCandidate {
    pub bonus: f64,
    pub threshold: f64,
    pub revenue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlpDuopolyOptimum {
    pub bonus: f64,
    pub threshold: f64,
    pub target: Target,
    pub revenue: f64,
    pub owner2_only: LlpCandidate,
    pub both: LlpCandidate,
}

impl LlpDuopolyOptimum {
    pub fn strategy(&self) -> Strategy {
        Strategy::Llp {
            bonus: self.bonus,
            threshold: self.threshold,
        }
    }
}

/// `B t` at the threshold where an owner is indifferent between `a`'s
/// program at wage `p_a + B` and plain sharing on `b`.
fn binding_bonus_times_threshold(u: &SelfUseUtility, pa: f64, bonus: f64, pb: f64) -> f64 {
    let (_, ub) = plain(u, pb);
    let s = u.sharing_at_wage(pa + bonus);
    u.retained(s) + (pa + bonus) * s - ub
}

/// Revenue-maximizing linear loyalty program for the weaker platform `a`.
///
/// Winning only class 2 uses the full margin as bonus. Winning both binds on
/// class 1, whose switching constraint is tighter; that revenue is
/// maximized over the bonus numerically.
pub fn optimal_llp_duopoly(m: &DuopolyMarket) -> Result<LlpDuopolyOptimum> {
    m.check_weaker_a()?;
    let (pa, pb, qa) = (m.a.owner_pay(), m.b.owner_pay(), m.a.renter_charge());
    let margin = qa - pa;
    let [f1, f2] = &m.owners;

    let bt2 = binding_bonus_times_threshold(f2, pa, margin, pb);
    let owner2_only = LlpCandidate {
        bonus: margin,
        threshold: bt2 / margin,
        revenue: bt2,
    };

    let both_revenue = |bonus: f64| {
        let s1a = f1.sharing_at_wage(pa + bonus);
        let s2a = f2.sharing_at_wage(pa + bonus);
        (margin - bonus) * (s1a + s2a) + 2.0 * binding_bonus_times_threshold(f1, pa, bonus, pb)
    };
    let lo = (pb - pa).max(0.0);
    let (bonus, revenue) = golden_section_max(both_revenue, lo, margin, BONUS_SEARCH_TOL);
    let threshold = if bonus > 1e-12 {
        binding_bonus_times_threshold(f1, pa, bonus, pb) / bonus
    } else {
        f1.sharing_at_wage(pa)
    };
    let both = LlpCandidate {
        bonus,
        threshold,
        revenue,
    };

    let (pick, target) = if owner2_only.revenue > both.revenue {
        (owner2_only, Target::Owner2)
    } else {
        (both, Target::Both)
    };
    Ok(LlpDuopolyOptimum {
        bonus: pick.bonus,
        threshold: pick.threshold,
        target,
        revenue: pick.revenue,
        owner2_only,
        both,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignupCounter {
    pub bonus: f64,
    pub target: Target,
    pub revenue: f64,
    /// Per class, the smallest sign-up bonus that pulls it over to `b`.
    pub needed: [f64; 2],
}

/// Best sign-up response of `b` to a loyalty program run by `a`.
///
/// Ties between `a`'s program and `b`'s bonus are resolved in `b`'s favour,
/// which is the conservative choice when certifying a squeeze-out. Staying
/// out is preferred to operating at zero revenue.
pub fn signup_counter(m: &DuopolyMarket, bonus: f64, threshold: f64) -> Result<SignupCounter> {
    let pb = m.b.owner_pay();
    let mut needed = [0.0; 2];
    let mut shares = [0.0; 2];
    for (i, u) in m.owners.iter().enumerate() {
        let (sb, ub) = plain(u, pb);
        let ua = llp_plan(u, m.a.owner_pay(), bonus, threshold)?
            .1
            .max(plain(u, m.a.owner_pay()).1);
        needed[i] = (ua - ub).max(0.0);
        shares[i] = sb;
    }
    let mut best = SignupCounter {
        bonus: 0.0,
        target: Target::None,
        revenue: 0.0,
        needed,
    };
    for offer in needed {
        let won = [needed[0] <= offer, needed[1] <= offer];
        let count = won.iter().filter(|&&w| w).count() as f64;
        let shared: f64 = (0..2).filter(|&i| won[i]).map(|i| shares[i]).sum();
        let revenue = m.b.margin() * shared - offer * count;
        if revenue > best.revenue {
            best = SignupCounter {
                bonus: offer,
                target: Target::from_won(won),
                revenue,
                needed,
            };
        }
    }
    Ok(best)
}

/// Which worst-case sign-up bound a squeeze-out threshold was built against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqueezeBranch {
    /// `b` would try to win both classes.
    Both,
    /// `b` would try to win class 1 only.
    Owner1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeOut {
    pub bonus: f64,
    pub threshold: f64,
    pub branch: SqueezeBranch,
    /// `b`'s gain from winning both classes rather than class 1 alone,
    /// evaluated at the chosen threshold.
    pub psi: f64,
    /// Revenue of `a` once `b` stays out.
    pub revenue_a: f64,
    pub counter: SignupCounter,
    /// Zero margin: nothing to offer, nothing to earn.
    pub degenerate: bool,
}

impl SqueezeOut {
    pub fn strategy(&self) -> Strategy {
        if self.degenerate {
            Strategy::NoProgram
        } else {
            Strategy::Llp {
                bonus: self.bonus,
                threshold: self.threshold,
            }
        }
    }

    pub fn certified(&self) -> bool {
        !self.degenerate && self.revenue_a > 0.0 && self.counter.revenue <= SQUEEZE_TOL
    }
}

/// Loyalty program for `a` that leaves a sign-up competitor `b` with equal
/// prices no bonus level earning positive revenue.
///
/// Two thresholds are built, one against each worst-case bonus `b` could
/// offer. Each is consistent when the sign of `psi` at that threshold says
/// `b` would indeed go for that target; consistent candidates are tried
/// first, highest revenue first, and the first one whose counter-response
/// certifies is returned.
pub fn squeeze_out(m: &DuopolyMarket) -> Result<SqueezeOut> {
    let (p, q) = (m.a.owner_pay(), m.a.renter_charge());
    if p != m.b.owner_pay() || q != m.b.renter_charge() {
        return Err(Error::Precondition(
            "squeeze-out needs identical prices on both platforms".into(),
        ));
    }
    let bonus = q - p;
    if bonus == 0.0 {
        return Ok(SqueezeOut {
            bonus: 0.0,
            threshold: 0.0,
            branch: SqueezeBranch::Both,
            psi: 0.0,
            revenue_a: 0.0,
            counter: signup_counter(m, 0.0, 0.5)?,
            degenerate: true,
        });
    }
    let [f1, f2] = &m.owners;
    let (s1a, s1b) = (f1.sharing_at_wage(q), f1.sharing_at_wage(p));
    let (s2a, s2b) = (f2.sharing_at_wage(q), f2.sharing_at_wage(p));
    // self-usage lost beyond what base pay covers when moving to the program
    let j1 = f1.retained(s1b) - f1.retained(s1a) - p * (s1a - s1b);
    let j2 = f2.retained(s2b) - f2.retained(s2a) - p * (s2a - s2b);
    let psi = |t: f64| {
        let need1 = bonus * (s1a - t).max(0.0) - j1;
        let need2 = bonus * (s2a - t) - j2;
        bonus * s2b - 2.0 * need2 + need1
    };
    let t_both = (bonus * s2a - 0.5 * bonus * (s1b + s2b) - j2) / bonus;
    let t_one = (bonus * s1a - bonus * s1b - j1) / bonus;

    let mut cands = vec![
        (SqueezeBranch::Both, t_both, psi(t_both) >= 0.0),
        (SqueezeBranch::Owner1, t_one, psi(t_one) <= 0.0),
    ];
    // consistent first, then higher threshold (revenue is increasing in t)
    cands.sort_by(|x, y| y.2.cmp(&x.2).then(y.1.total_cmp(&x.1)));

    let mut tried = Vec::new();
    for (branch, threshold, _) in cands {
        if !(threshold > 0.0 && threshold <= 1.0) {
            tried.push(format!("{branch:?}: threshold {threshold} out of range"));
            continue;
        }
        let counter = signup_counter(m, bonus, threshold)?;
        let strategy = Strategy::Llp { bonus, threshold };
        let revenue_a = evaluate(m, &strategy, &Strategy::NoProgram)?.revenue_a;
        let out = SqueezeOut {
            bonus,
            threshold,
            branch,
            psi: psi(threshold),
            revenue_a,
            counter,
            degenerate: false,
        };
        if out.certified() {
            return Ok(out);
        }
        tried.push(format!(
            "{branch:?}: R_a = {revenue_a}, competitor revenue {}",
            counter.revenue
        ));
    }
    Err(Error::CertificationFailed(tried.join("; ")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramKind {
    SignUp,
    Llp,
}

/// The heterogeneity `k` at which the weaker platform's optimal program
/// stops targeting both classes.
///
/// Returns `lo` when it never targets both on the range and `+inf` when it
/// always does. The indicator is probed on a log grid first; more than one
/// flip is reported rather than bisected.
pub fn critical_k(
    base: &SelfUseUtility,
    p_a: f64,
    p_b: f64,
    beta: f64,
    program: ProgramKind,
    k_range: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = k_range;
    if !(lo > 1.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Precondition(format!(
            "k range must satisfy 1 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let single = |k: f64| -> Result<bool> {
        let m = DuopolyMarket::scaled(base, k, p_a, p_b, beta)?;
        Ok(match program {
            ProgramKind::SignUp => optimal_signup(&m)?.target != Target::Both,
            ProgramKind::Llp => optimal_llp_duopoly(&m)?.target != Target::Both,
        })
    };
    let n = CRITICAL_K_PROBES;
    let ks: Vec<f64> = (0..n)
        .map(|j| {
            if j + 1 == n {
                hi
            } else {
                lo * (hi / lo).powf(j as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let flags = ks.iter().map(|&k| single(k)).collect::<Result<Vec<_>>>()?;
    let flips: Vec<usize> = (1..n).filter(|&j| flags[j] != flags[j - 1]).collect();
    match flips.as_slice() {
        [] if flags[0] => Ok(lo),
        [] => Ok(f64::INFINITY),
        [j] if flags[*j] => {
            // bisect_switch needs an infallible predicate; market construction
            // already succeeded on both sides of this bracket
            let pred = |k: f64| single(k).unwrap_or(true);
            Ok(bisect_switch(pred, ks[j - 1], ks[*j], CRITICAL_K_TOL))
        }
        _ => Err(Error::NonMonotoneIndicator { lo, hi }),
    }
}
