//! Brute-force reference solvers. Slow on purpose: they search grids
//! exhaustively and share no maximization logic with the analytic solvers,
//! so agreement between the two is meaningful.

use crate::duopoly::Strategy;
use crate::error::{Error, Result};
use crate::programs::{PlatformConfig, SubsidySchedule};
use crate::utility::SelfUseUtility;

pub const MIN_RESOLUTION: usize = 100;
/// Points per unit of sharing used by the inner owner search in
/// [`grid_optimal_llp`].
pub const LLP_SHARING_POINTS: usize = 10_000;
/// Zoom levels applied around the best coarse grid points.
const ZOOM_LEVELS: usize = 4;
/// Coarse local maxima kept for zooming.
const ZOOM_SEEDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    resolution: usize,
}

impl GridSpec {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::Precondition(format!(
                "grid resolution must be at least {MIN_RESOLUTION}, got {resolution}"
            )));
        }
        Ok(Self { resolution })
    }

    /// Points per unit interval.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    fn step(&self) -> f64 {
        1.0 / self.resolution as f64
    }
}

fn better(u: f64, s: f64, best: (f64, f64)) -> bool {
    // ties to larger s
    u > best.1 || (u == best.1 && s > best.0)
}

/// Maximizes `f(1 - s) + reward(s)` over `s in [0, 1]`: a full grid pass,
/// then repeated local zooms around the best few grid maxima.
pub fn grid_best_response<R>(u: &SelfUseUtility, reward: R, grid: &GridSpec) -> (f64, f64)
where
    R: Fn(f64) -> f64,
{
    let n = grid.resolution;
    let obj = |s: f64| u.retained(s) + reward(s);
    let vals: Vec<f64> = (0..=n).map(|j| obj(j as f64 / n as f64)).collect();

    let mut best = (0.0, f64::NEG_INFINITY);
    for (j, &v) in vals.iter().enumerate() {
        let s = j as f64 / n as f64;
        if better(v, s, best) {
            best = (s, v);
        }
    }

    let mut seeds: Vec<usize> = (0..=n)
        .filter(|&j| (j == 0 || vals[j] >= vals[j - 1]) && (j == n || vals[j] >= vals[j + 1]))
        .collect();
    seeds.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
    for &j in seeds.iter().take(ZOOM_SEEDS) {
        let mut centre = j as f64 / n as f64;
        let mut half = grid.step();
        for _ in 0..ZOOM_LEVELS {
            let (lo, hi) = ((centre - half).max(0.0), (centre + half).min(1.0));
            // refinement only moves on a strict gain, so rounding noise on a
            // flat top cannot drift the answer
            let mut local = (centre, obj(centre));
            for i in 0..=n {
                let s = lo + (hi - lo) * i as f64 / n as f64;
                let v = obj(s);
                if v > local.1 {
                    local = (s, v);
                }
            }
            if local.1 > best.1 {
                best = local;
            }
            centre = local.0;
            half = 2.0 * (hi - lo) / n as f64;
        }
    }
    best
}

/// `p s + sum_k (B_k - B_{k-1}) (s - t_k)^+`; the cumulative bonus written as
/// a sum of hinges rather than a walk over segments.
pub fn step_reward(sch: &SubsidySchedule) -> impl Fn(f64) -> f64 + '_ {
    move |s| {
        let mut prev = 0.0;
        let mut total = sch.base_pay() * s;
        for (&t, &b) in sch.thresholds().iter().zip(sch.bonuses()) {
            total += (b - prev) * (s - t).max(0.0);
            prev = b;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLlp {
    pub bonus: f64,
    pub threshold: f64,
    pub revenue: f64,
}

/// Exhaustive search over `(B, t)` on a `resolution`-per-unit lattice in
/// `[0, q] x [0, 1]`, with each owner response found on a fine sharing grid.
///
/// For a fixed `B`, a prefix maximum of the no-bonus utility and a suffix
/// maximum of the with-bonus utility give the owner's choice at every `t`
/// in one pass.
pub fn grid_optimal_llp(u: &SelfUseUtility, p: f64, q: f64, grid: &GridSpec) -> Result<GridLlp> {
    if !(q >= p && p >= 0.0) {
        return Err(Error::Precondition(format!("need q >= p >= 0, got p = {p}, q = {q}")));
    }
    let m = LLP_SHARING_POINTS;
    let sg: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    let keep: Vec<f64> = sg.iter().map(|&s| u.retained(s)).collect();

    // prefix argmax of f(1 - s) + p s, ties to larger s
    let mut prefix = vec![0usize; m + 1];
    let mut arg = 0;
    for j in 0..=m {
        if keep[j] + p * sg[j] >= keep[arg] + p * sg[arg] {
            arg = j;
        }
        prefix[j] = arg;
    }

    let res = grid.resolution;
    let ts: Vec<f64> = (0..=res).map(|i| i as f64 / res as f64).collect();
    // first sharing index at or above each threshold
    let first: Vec<usize> = ts.iter().map(|&t| sg.partition_point(|&s| s < t - 1e-12)).collect();

    let b_steps = (q * res as f64).floor() as usize;
    let mut best = GridLlp {
        bonus: 0.0,
        threshold: 0.0,
        revenue: 0.0,
    };
    let mut suffix = vec![0usize; m + 1];
    for bi in 0..=b_steps {
        let bonus = bi as f64 / res as f64;
        let g = |j: usize| keep[j] + (p + bonus) * sg[j];
        let mut arg = m;
        for j in (0..=m).rev() {
            if g(j) > g(arg) {
                arg = j;
            }
            suffix[j] = arg;
        }
        for (&t, &j0) in ts.iter().zip(&first) {
            let above = (j0 <= m).then(|| (suffix[j0], g(suffix[j0]) - bonus * t));
            let below = (j0 > 0).then(|| {
                let j = prefix[j0 - 1];
                (j, keep[j] + p * sg[j])
            });
            let revenue = match (above, below) {
                (Some((ja, ua)), Some((_, ub))) if ua >= ub => (q - p) * sg[ja] - bonus * (sg[ja] - t),
                (Some((ja, _)), None) => (q - p) * sg[ja] - bonus * (sg[ja] - t),
                (_, Some((jb, _))) => (q - p) * sg[jb],
                (None, None) => unreachable!("threshold grid covers [0, 1]"),
            };
            if revenue > best.revenue {
                best = GridLlp {
                    bonus,
                    threshold: t,
                    revenue,
                };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPoint {
    pub s_a: f64,
    pub s_b: f64,
    pub utility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSearch {
    pub best: SplitPoint,
    /// Best point with strictly positive sharing on both platforms.
    pub best_interior: Option<SplitPoint>,
}

fn platform_reward(cfg: &PlatformConfig, strategy: &Strategy, s: f64, exclusive: bool) -> f64 {
    let pay = cfg.owner_pay() * s;
    match *strategy {
        Strategy::NoProgram => pay,
        Strategy::SignUp(bonus) => pay + if exclusive { bonus } else { 0.0 },
        Strategy::Llp { bonus, threshold } => pay + bonus * (s - threshold).max(0.0),
    }
}

/// Exhaustive search over `(s_a, s_b)` with `s_a + s_b <= 1` on a lattice of
/// `resolution` steps per unit.
pub fn grid_split_search(
    u: &SelfUseUtility,
    a: (&PlatformConfig, &Strategy),
    b: (&PlatformConfig, &Strategy),
    grid: &GridSpec,
) -> SplitSearch {
    let n = grid.resolution;
    let h = grid.step();
    let mut best: Option<SplitPoint> = None;
    let mut best_interior: Option<SplitPoint> = None;
    let improves = |cur: &Option<SplitPoint>, cand: &SplitPoint| {
        cur.map_or(true, |c| {
            cand.utility > c.utility || (cand.utility == c.utility && cand.s_a + cand.s_b > c.s_a + c.s_b)
        })
    };
    for i in 0..=n {
        for j in 0..=(n - i) {
            let (s_a, s_b) = (i as f64 * h, j as f64 * h);
            let utility =
                u.retained(s_a + s_b) + platform_reward(a.0, a.1, s_a, j == 0) + platform_reward(b.0, b.1, s_b, i == 0);
            let cand = SplitPoint { s_a, s_b, utility };
            if improves(&best, &cand) {
                best = Some(cand);
            }
            if i > 0 && j > 0 && improves(&best_interior, &cand) {
                best_interior = Some(cand);
            }
        }
    }
    SplitSearch {
        best: best.expect("grid is non-empty"),
        best_interior,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::programs::llp;
    use crate::utility::CASE_STUDY_GAMMA;
    use approx::assert_abs_diff_eq;

    fn base() -> SelfUseUtility {
        SelfUseUtility::scaled_log(1.0, CASE_STUDY_GAMMA).unwrap()
    }

    #[test]
    fn coarse_grids_rejected() {
        assert!(GridSpec::new(99).is_err());
        assert_eq!(GridSpec::new(100).unwrap().resolution(), 100);
    }

    #[test]
    fn zero_reward_keeps_everything() {
        let (s, v) = grid_best_response(&base(), |_| 0.0, &GridSpec::new(1000).unwrap());
        assert_eq!(s, 0.0);
        assert_abs_diff_eq!(v, 1.0 / CASE_STUDY_GAMMA, epsilon = 1e-15);
    }

    #[test]
    fn linear_reward_hits_stationary_point() {
        let (s, _) = grid_best_response(&base(), |s| 12.0 * s, &GridSpec::new(1000).unwrap());
        assert_abs_diff_eq!(s, 1.0 - (-CASE_STUDY_GAMMA * 12.0).exp(), epsilon = 1e-3);
    }

    #[test]
    fn llp_response_against_closed_form() {
        let sch = llp(0.0, 12.0, 0.8).unwrap();
        let (s, _) = grid_best_response(&base(), step_reward(&sch), &GridSpec::new(10_000).unwrap());
        assert_abs_diff_eq!(s, 1.0 - (-CASE_STUDY_GAMMA * 12.0).exp(), epsilon = 2e-4);
    }

    #[test]
    fn hinge_sum_equals_segment_sum() {
        let sch = SubsidySchedule::new(0.5, vec![0.2, 0.5, 0.7], vec![1.0, 3.0, 4.0]).unwrap();
        let r = step_reward(&sch);
        for j in 0..=20 {
            let s = j as f64 / 20.0;
            assert_abs_diff_eq!(r(s), sch.total_pay(s), epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_llp_trivial_cases() {
        let g = GridSpec::new(100).unwrap();
        let r = grid_optimal_llp(&base(), 4.0, 4.0, &g).unwrap();
        assert_eq!(r.revenue, 0.0);
        assert!(grid_optimal_llp(&base(), 5.0, 4.0, &g).is_err());
    }

    #[test]
    fn split_search_prefers_higher_pay() {
        let a = PlatformConfig::with_commission(10.0, 1.0).unwrap();
        let b = PlatformConfig::with_commission(11.0, 1.0).unwrap();
        let u = SelfUseUtility::case_study(10.0).unwrap();
        let g = GridSpec::new(200).unwrap();
        let r = grid_split_search(&u, (&a, &Strategy::NoProgram), (&b, &Strategy::NoProgram), &g);
        assert_eq!(r.best.s_a, 0.0);
        assert!(r.best.s_b > 0.0);
    }
}
