use loyalty_core::duopoly::{
    evaluate, optimal_llp_duopoly, optimal_signup, DuopolyMarket, Side, Strategy as Play, Target,
};
use loyalty_core::monopoly::{best_response, is_monotone, optimal_llp, participation_check};
use loyalty_core::mtlp::{build_hb, mtlp_best_response, oversubsidy_gap};
use loyalty_core::utility::{ordered_classes, stepped_classes};
use loyalty_core::{llp, SelfUseUtility, SubsidySchedule, CASE_STUDY_GAMMA};
use proptest::prelude::*;

fn schedule() -> impl Strategy<Value = SubsidySchedule> {
    (0.0..4.0f64, prop::collection::vec((0.01..0.99f64, 0.1..5.0f64), 0..5)).prop_filter_map(
        "thresholds must be distinct",
        |(p, levels)| {
            let mut t: Vec<f64> = levels.iter().map(|l| l.0).collect();
            t.sort_by(f64::total_cmp);
            let b: Vec<f64> = levels
                .iter()
                .scan(0.0, |acc, l| {
                    *acc += l.1;
                    Some(*acc)
                })
                .collect();
            SubsidySchedule::new(p, t, b).ok()
        },
    )
}

fn utility() -> impl Strategy<Value = SelfUseUtility> {
    prop_oneof![
        (0.2..5.0f64, 0.3..2.0f64).prop_map(|(k, g)| SelfUseUtility::scaled_log(k, g).unwrap()),
        prop::collection::vec(0.05..3.0f64, 4).prop_map(|steps| {
            let mut m: Vec<f64> = steps
                .iter()
                .rev()
                .scan(0.0, |acc, d| {
                    *acc += d;
                    Some(*acc)
                })
                .collect();
            m.reverse();
            m.push(0.0);
            let knots = (0..=4).map(|j| j as f64 / 4.0).collect();
            SelfUseUtility::tabulated(knots, m).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cumulative_bonus_is_convex(sch in schedule(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (s1, s2) = if a < b { (a, b) } else { (b, a) };
        prop_assert_eq!(sch.cumulative_bonus(0.0), 0.0);
        let lhs = sch.cumulative_bonus(s2) - sch.cumulative_bonus(s1);
        prop_assert!(lhs >= sch.marginal_bonus(s1) * (s2 - s1) - 1e-12);
        prop_assert!(lhs >= -1e-15);
    }

    #[test]
    fn finite_differences_match_marginal(sch in schedule(), s in 0.001..0.998f64) {
        let h = 1e-6;
        prop_assume!(sch.thresholds().iter().all(|&t| (t - s).abs() > 2.0 * h));
        let fd = (sch.cumulative_bonus(s + h) - sch.cumulative_bonus(s)) / h;
        prop_assert!((fd - sch.marginal_bonus(s)).abs() <= 1e-4);
    }

    #[test]
    fn llp_equivalence(p in 0.0..5.0f64, b in 0.01..20.0f64, t in 0.001..0.999f64) {
        let sch = llp(p, b, t).unwrap();
        for j in 0..=1000 {
            let s = j as f64 / 1000.0;
            prop_assert_eq!(sch.cumulative_bonus(s), b * (s - t).max(0.0));
        }
    }

    #[test]
    fn inverse_marginal_round_trip(u in utility(), y in 0.01..5.0f64) {
        let x = u.inverse_marginal(y).unwrap();
        prop_assert!(x > 0.0 && x <= 1.0);
        if matches!(u, SelfUseUtility::ScaledLog { .. }) || y < u.eval_marginal(1e-12).unwrap() {
            prop_assert!((u.eval_marginal(x).unwrap() - y).abs() <= 1e-6 * (1.0 + y));
        }
    }

    #[test]
    fn best_response_beats_every_probe(u in utility(), sch in schedule()) {
        let r = best_response(&u, &sch);
        for j in 0..=200 {
            let s = j as f64 / 200.0;
            let v = u.retained(s) + sch.total_pay(s);
            prop_assert!(v <= r.utility + 1e-9, "s = {} gives {} > {}", s, v, r.utility);
        }
    }

    #[test]
    fn sharing_order_under_any_schedule(sch in schedule(), n in 2usize..6) {
        let base = SelfUseUtility::scaled_log(1.0, CASE_STUDY_GAMMA).unwrap();
        let classes = stepped_classes(&base, n).unwrap();
        let s: Vec<f64> = classes.iter().map(|c| mtlp_best_response(&c.utility, &sch)).collect();
        prop_assert!(s.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{:?}", s);
        prop_assert!(is_monotone(&participation_check(&classes, &sch)));
    }

    #[test]
    fn zero_base_pay_keeps_the_most(p in 0.1..8.0f64) {
        let u = SelfUseUtility::scaled_log(1.0, CASE_STUDY_GAMMA).unwrap();
        prop_assert!(optimal_llp(&u, 0.0, 12.0).unwrap().revenue > optimal_llp(&u, p, 12.0).unwrap().revenue);
    }
}

#[test]
fn hb_banding_up_to_twenty_classes() {
    let base = SelfUseUtility::scaled_log(1.0, CASE_STUDY_GAMMA).unwrap();
    let mut gaps = Vec::new();
    for n in 1..=20 {
        let classes = stepped_classes(&base, n).unwrap();
        let hb = build_hb(&classes, 12.0).unwrap();
        let t = hb.schedule.thresholds();
        for (i, c) in classes.iter().enumerate() {
            let s = mtlp_best_response(&c.utility, &hb.schedule);
            let upper = t.get(i + 1).copied().unwrap_or(f64::INFINITY);
            assert!(s >= t[i] && s < upper, "n={n} class {} sharing {s} outside band", i + 1);
        }
        assert!(participation_check(&classes, &hb.schedule).iter().all(|&f| f));
        gaps.push(oversubsidy_gap(&classes, &hb.schedule));
    }
    assert!(gaps.iter().all(|&g| (-1e-9..=12.0).contains(&g)), "{gaps:?}");
}

#[test]
fn hb_on_generic_ordered_classes() {
    // classes that are not multiples of one another
    let utilities = vec![
        SelfUseUtility::scaled_log(3.0, 0.6).unwrap(),
        SelfUseUtility::scaled_log(2.0, 0.7).unwrap(),
        SelfUseUtility::scaled_log(1.0, 0.832).unwrap(),
    ];
    let classes = ordered_classes(utilities).unwrap();
    let hb = build_hb(&classes, 12.0).unwrap();
    for (i, c) in classes.iter().enumerate() {
        let s = mtlp_best_response(&c.utility, &hb.schedule);
        assert!((s - hb.targets[i]).abs() < 1e-12);
    }
}

fn market(k: f64, pa: f64, pb: f64) -> DuopolyMarket {
    DuopolyMarket::scaled(&SelfUseUtility::case_study(10.0).unwrap(), k, pa, pb, 1.0).unwrap()
}

#[test]
fn llp_winning_class_one_also_wins_class_two() {
    for i in 0..20 {
        for j in 0..20 {
            let pb = 10.0 + 9.5 * (i as f64 + 0.5) / 20.0;
            let k = 1.1 + 19.0 * j as f64 / 19.0;
            let m = market(k, 10.0, pb);
            let o = optimal_llp_duopoly(&m).unwrap();
            assert!(o.revenue > 0.0, "p_b={pb} k={k}");
            let out = evaluate(&m, &o.strategy(), &Play::NoProgram).unwrap();
            if out.owners[0].joined == Some(Side::A) {
                assert_eq!(out.owners[1].joined, Some(Side::A), "p_b={pb} k={k}");
            }
        }
    }
}

#[test]
fn interior_both_class_bonus_stays_below_base_pay() {
    // with q_a = 2 p_a the margin equals p_a, so an optimum off the clamps
    // must sit strictly below p_a
    let mut interior = 0;
    for i in 0..10 {
        for k in [1.05, 1.2, 1.5, 2.0, 3.0, 5.0] {
            let pb = 10.0 + 0.1 + 0.9 * i as f64;
            let both = optimal_llp_duopoly(&market(k, 10.0, pb)).unwrap().both;
            if both.bonus > pb - 10.0 + 1e-6 {
                interior += 1;
                assert!(both.bonus < 10.0 - 1e-6, "p_b={pb} k={k} B={}", both.bonus);
            }
        }
    }
    assert!(interior > 0, "no interior optimum on the scan");
}

#[test]
fn signup_none_exactly_when_nothing_pays() {
    for j in 0..40 {
        let r = 1.0 + j as f64 * 0.025;
        let o = optimal_signup(&market(6.0, 10.0, 10.0 * r)).unwrap();
        let nothing_pays = o.revenue_owner1 <= 0.0 && o.revenue_both <= 0.0;
        assert_eq!(o.target == Target::None, nothing_pays, "ratio {r}");
    }
}

#[test]
fn llp_beats_signup_across_ratios() {
    for j in 0..=16 {
        let r = 1.0 + 0.05 * j as f64;
        let m = market(6.0, 10.0, 10.0 * r);
        let l = optimal_llp_duopoly(&m).unwrap().revenue;
        let s = optimal_signup(&m).unwrap().revenue;
        assert!(l >= s, "ratio {r}: llp {l} < signup {s}");
    }
}
