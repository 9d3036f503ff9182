//! Scenario runners. Each sweep point is solved independently, possibly on
//! several threads, and rows are assembled in point order.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use loyalty_core::duopoly::{
    critical_k, no_program_equilibrium, optimal_llp_duopoly, optimal_signup, DuopolyMarket, ProgramKind, Target,
};
use loyalty_core::monopoly::optimal_llp;
use loyalty_core::mtlp::{build_hb, mtlp_revenue, oversubsidy_gap, revenue_upper_bound};
use loyalty_core::numeric::bisect_switch;
use loyalty_core::oracle::{grid_optimal_llp, GridSpec};
use loyalty_core::utility::stepped_classes;
use loyalty_core::SelfUseUtility;

use crate::spec::{ExperimentSpec, Point, Scenario};
use crate::table::{format_sig, Cell, ResultTable};
use crate::HarnessError;

/// Default bracket width for regime-switch bisection.
pub const SWITCH_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: ResultTable,
    /// Named values that expectation files can assert on.
    pub scalars: BTreeMap<String, f64>,
    /// Constructed programs, for scenarios that build them.
    pub programs: Option<Value>,
}

type Row = Vec<Cell>;
type PointResult<T> = Result<T, loyalty_core::Error>;

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
}

impl Ctx<'_> {
    fn solver_err(&self, point: &Point, source: loyalty_core::Error) -> HarnessError {
        let at = point
            .0
            .iter()
            .map(|(k, v)| format!("{k}={}", format_sig(*v, 12)))
            .collect::<Vec<_>>()
            .join(", ");
        HarnessError::Solver {
            scenario: self.spec.scenario,
            point: at,
            source,
        }
    }

    /// Maps `f` over every sweep point in order; the first failing point
    /// (in sweep order, not completion order) is the one reported.
    fn map_points<T, F>(&self, f: F) -> Result<Vec<(Point, T)>, HarnessError>
    where
        T: Send,
        F: Fn(&Point) -> PointResult<T> + Sync,
    {
        let points = self.spec.points();
        let results: Vec<PointResult<T>> = points.par_iter().map(&f).collect();
        points
            .into_iter()
            .zip(results)
            .map(|(p, r)| match r {
                Ok(v) => Ok((p, v)),
                Err(e) => Err(self.solver_err(&p, e)),
            })
            .collect()
    }

    fn swept_cells(&self, p: &Point) -> Row {
        self.spec.swept().iter().map(|k| Cell::Num(p.get(k))).collect()
    }

    fn table(&self, extra: &[&'static str]) -> ResultTable {
        let mut cols: Vec<&'static str> = self
            .spec
            .scenario
            .params()
            .iter()
            .filter(|d| d.sweepable)
            .map(|d| d.name)
            .collect();
        cols.sort_unstable();
        cols.extend_from_slice(extra);
        ResultTable::new(cols)
    }
}

fn base(p: &Point) -> PointResult<SelfUseUtility> {
    SelfUseUtility::scaled_log(p.get("scale"), p.get("gamma"))
}

fn market(p: &Point, k: f64, p_b: f64) -> PointResult<DuopolyMarket> {
    DuopolyMarket::scaled(&base(p)?, k, p.get("p_a"), p_b, p.get("beta"))
}

fn tolerance(spec: &ExperimentSpec) -> f64 {
    spec.overrides.tolerance.unwrap_or(SWITCH_TOL)
}

/// Solves `spec` using `jobs` worker threads (all cores when `None`).
pub fn run(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<RunOutput, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Internal(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&Ctx { spec }))
}

fn dispatch(ctx: &Ctx) -> Result<RunOutput, HarnessError> {
    match ctx.spec.scenario {
        Scenario::Fig3 | Scenario::MonopolySweep => monopoly(ctx),
        Scenario::Fig4 => fig4(ctx),
        Scenario::Fig5 => fig5(ctx),
        Scenario::Fig6 => fig6(ctx),
        Scenario::Fig7 => fig7(ctx),
        Scenario::Fig8 | Scenario::CriticalK => critical(ctx),
        Scenario::DuopolySweep => duopoly(ctx),
    }
}

fn finish(table: ResultTable, scalars: BTreeMap<String, f64>) -> RunOutput {
    RunOutput {
        table,
        scalars,
        programs: None,
    }
}

fn monopoly(ctx: &Ctx) -> Result<RunOutput, HarnessError> {
    let grid = ctx
        .spec
        .overrides
        .grid_resolution
        .map(GridSpec::new)
        .transpose()
        .map_err(|e| HarnessError::Internal(format!("grid override passed validation but was rejected: {e}")))?;
    let mut cols = vec!["B", "t", "R", "s"];
    if grid.is_some() {
        cols.push("r_grid");
    }
    let rows = ctx.map_points(|pt| {
        let u = base(pt)?;
        let (p, q) = (pt.get("p"), pt.get("q"));
        let o = optimal_llp(&u, p, q)?;
        let mut row: Row = vec![o.bonus.into(), o.threshold.into(), o.revenue.into(), o.sharing.into()];
        if let Some(g) = &grid {
            row.push(grid_optimal_llp(&u, p, q, g)?.revenue.into());
        }
        Ok(row)
    })?;
    let mut table = ctx.table(&cols);
    let mut revenue = Vec::with_capacity(rows.len());
    for (pt, row) in rows {
        revenue.push(row[2].as_f64().unwrap_or(f64::NAN));
        let mut cells = ctx.swept_cells(&pt);
        cells.extend(row);
        table.push(cells)?;
    }
    let mut scalars = BTreeMap::new();
    if ctx.spec.scenario == Scenario::Fig3 {
        let decreasing = revenue.windows(2).all(|w| w[1] < w[0]);
        scalars.insert("strictly_decreasing".into(), if decreasing { 1.0 } else { 0.0 });
        scalars.insert("revenue_first".into(), revenue[0]);
        scalars.insert("revenue_last".into(), revenue[revenue.len() - 1]);
    }
    Ok(finish(table, scalars))
}

fn fig4(ctx: &Ctx) -> Result<RunOutput, HarnessError> {
    let rows = ctx.map_points(|pt| {
        let n = pt.get("n") as usize;
        let q = pt.get("q");
        let classes = stepped_classes(&base(pt)?, n)?;
        let hb = build_hb(&classes, q)?;
        let out = mtlp_revenue(&classes, &hb.schedule, q)?;
        let upper = revenue_upper_bound(&classes, q, &out.sharing)?;
        let gap = oversubsidy_gap(&classes, &hb.schedule);
        let doc = json!({
            "n": n,
            "schedule": hb.schedule.to_doc(),
            "anchors": { "s": hb.targets, "s_cross": hb.crossings },
        });
        Ok(([out.revenue, upper, out.total_subsidy, gap], doc))
    })?;
    let mut table = ctx.table(&["r_hb", "r_upper", "subsidy", "gap"]);
    let mut programs = Vec::with_capacity(rows.len());
    let (mut max_gap, mut min_gap, mut max_excess) = (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (pt, (vals, doc)) in rows {
        max_gap = max_gap.max(vals[3]);
        min_gap = min_gap.min(vals[3]);
        max_excess = max_excess.max(vals[1] - vals[0]);
        let mut cells = ctx.swept_cells(&pt);
        cells.extend(vals.map(Cell::Num));
        table.push(cells)?;
        programs.push(doc);
    }
    let scalars = BTreeMap::from([
        ("max_gap".to_string(), max_gap),
        ("min_gap".to_string(), min_gap),
        ("max_upper_minus_hb".to_string(), max_excess),
    ]);
    Ok(RunOutput {
        table,
        scalars,
        programs: Some(Value::Array(programs)),
    })
}

fn fig5(ctx: &Ctx) -> Result<RunOutput, HarnessError> {
    let signup_at = |pt: &Point, ratio: f64| {
        let m = market(pt, pt.get("k"), pt.get("p_a") * ratio)?;
        optimal_signup(&m)
    };
    let rows = ctx.map_points(|pt| signup_at(pt, pt.get("ratio")))?;
    let mut table = ctx.table(&["p_b", "B_a", "target", "R_a"]);
    for (pt, o) in &rows {
        let mut cells = ctx.swept_cells(pt);
        cells.extend([
            Cell::Num(pt.get("p_a") * pt.get("ratio")),
            o.bonus.into(),
            Cell::Text(o.target.as_str()),
            o.revenue.into(),
        ]);
        table.push(cells)?;
    }

    // refine each regime change seen on the sweep to a switch point
    let mut scalars = BTreeMap::new();
    let tol = tolerance(ctx.spec);
    let switches: [(&str, Target, fn(Target) -> bool); 2] = [
        ("switch_both_owner1", Target::Both, |t| t != Target::Both),
        ("switch_owner1_none", Target::Owner1, |t| t == Target::None),
    ];
    for (name, from, reached) in switches {
        let Some(w) = rows
            .windows(2)
            .find(|w| w[0].1.target == from && reached(w[1].1.target))
        else {
            continue;
        };
        let (pt, lo, hi) = (&w[0].0, w[0].0.get("ratio"), w[1].0.get("ratio"));
        // every ratio in the bracket lies between two points that solved
        let pred = |r: f64| signup_at(pt, r).map_or(true, |o| reached(o.target));
        scalars.insert(name.to_string(), bisect_switch(pred, lo, hi, tol));
    }
    Ok(finish(table, scalars))
}

fn fig6(ctx: &Ctx) -> Result<RunOutput, HarnessError> {
    let p_b = ctx.spec.scalar("p_b");
    let rows = ctx.map_points(|pt| optimal_llp_duopoly(&market(pt, pt.get("k"), p_b)?))?;
    let mut table = ctx.table(&["B_a", "t_a", "target", "R_a"]);
    for (pt, o) in &rows {
        let mut cells = ctx.swept_cells(pt);
        cells.extend([
            o.bonus.into(),
            o.threshold.into(),
            Cell::Text(o.target.as_str()),
            o.revenue.into(),
        ]);
        table.push(cells)?;
    }
    let ks = ctx.spec.parameters["k"].values();
    let (lo, hi) = ks
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &k| (a.min(k), b.max(k)));
    let mut scalars = BTreeMap::new();
    if lo > 1.0 && hi > lo {
        let first = &rows[0].0;
        let k = critical_k(
            &base(first).map_err(|e| ctx.solver_err(first, e))?,
            first.get("p_a"),
            p_b,
            first.get("beta"),
            ProgramKind::Llp,
            (lo, hi),
        )
        .map_err(|e| ctx.solver_err(first, e))?;
        scalars.insert("critical_k".to_string(), k);
    }
    Ok(finish(table, scalars))
}

fn fig7(ctx: &Ctx) -> Result<RunOutput, HarnessError> {
    let rows = ctx.map_points(|pt| {
        let m = market(pt, pt.get("k"), pt.get("p_a") * pt.get("ratio"))?;
        Ok((optimal_llp_duopoly(&m)?.revenue, optimal_signup(&m)?.revenue))
    })?;
    let mut table = ctx.table(&["r_llp", "r_signup", "advantage"]);
    let mut min_adv = f64::INFINITY;
    for (pt, (l, s)) in rows {
        min_adv = min_adv.min(l - s);
        let mut cells = ctx.swept_cells(&pt);
        cells.extend([l.into(), s.into(), (l - s).into()]);
        table.push(cells)?;
    }
    Ok(finish(table, BTreeMap::from([("min_advantage".to_string(), min_adv)])))
}

fn critical(ctx: &Ctx) -> Result<RunOutput, HarnessError> {
    let rows = ctx.map_points(|pt| {
        let (u, p_a) = (base(pt)?, pt.get("p_a"));
        let p_b = p_a * pt.get("ratio");
        let range = (pt.get("k_lo"), pt.get("k_hi"));
        let k = |kind| critical_k(&u, p_a, p_b, pt.get("beta"), kind, range);
        Ok([p_b, k(ProgramKind::Llp)?, k(ProgramKind::SignUp)?])
    })?;
    let mut table = ctx.table(&["p_b", "k_llp", "k_signup"]);
    let mut scalars = BTreeMap::new();
    let label_keys = ctx.spec.swept();
    for (pt, vals) in rows {
        // names are `k_llp@1.5` while only the ratio varies, full
        // coordinates (`k_llp@beta=1,p_a=10,ratio=1.5`) otherwise
        let varying: Vec<&&str> = label_keys
            .iter()
            .filter(|k| ctx.spec.parameters[**k].values().len() > 1)
            .collect();
        let label = if varying.iter().all(|k| ***k == *"ratio") {
            format_sig(pt.get("ratio"), 12)
        } else {
            label_keys
                .iter()
                .map(|k| format!("{k}={}", format_sig(pt.get(k), 12)))
                .collect::<Vec<_>>()
                .join(",")
        };
        scalars.insert(format!("k_llp@{label}"), vals[1]);
        scalars.insert(format!("k_signup@{label}"), vals[2]);
        let mut cells = ctx.swept_cells(&pt);
        cells.extend(vals.map(Cell::Num));
        table.push(cells)?;
    }
    Ok(finish(table, scalars))
}

fn duopoly(ctx: &Ctx) -> Result<RunOutput, HarnessError> {
    let rows = ctx.map_points(|pt| {
        let m = market(pt, pt.get("k"), pt.get("p_a") * pt.get("ratio"))?;
        let l = optimal_llp_duopoly(&m)?;
        let s = optimal_signup(&m)?;
        let plain = no_program_equilibrium(&m)?;
        Ok(vec![
            Cell::Num(m.b.owner_pay()),
            l.bonus.into(),
            l.threshold.into(),
            Cell::Text(l.target.as_str()),
            l.revenue.into(),
            s.bonus.into(),
            Cell::Text(s.target.as_str()),
            s.revenue.into(),
            plain.revenue_a.into(),
        ])
    })?;
    let mut table = ctx.table(&[
        "p_b",
        "llp_B",
        "llp_t",
        "llp_target",
        "llp_R",
        "signup_B",
        "signup_target",
        "signup_R",
        "plain_R_a",
    ]);
    for (pt, row) in rows {
        let mut cells = ctx.swept_cells(&pt);
        cells.extend(row);
        table.push(cells)?;
    }
    Ok(finish(table, BTreeMap::new()))
}
