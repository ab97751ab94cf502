use kelly_opt::kelly_core::ks_growth_rate;
use kelly_opt::kelly_option::{
    feasibility_bounds, feasible_g_interval, ko_optimal_g_affine, ko_optimal_g_closed_form,
    replication_check,
};
use kelly_opt::{
    hedge_pivot, ko_growth_rate, ko_optimal_g, ks_optimal_fraction, KoParams, MarketParams,
};
use proptest::prelude::*;

/// Market and put with `d < R < u` and `dS0 < K0 < uS0`.
fn draw() -> impl Strategy<Value = KoParams> {
    (
        1.05f64..3.0,
        0.2f64..0.95,
        0.05f64..0.95,
        0.05f64..0.95,
        10.0f64..1000.0,
        0.02f64..0.98,
    )
        .prop_filter_map("valid market", |(u, d, rf, p, s0, kf)| {
            let r = d + rf * (u - d);
            let mkt = MarketParams::new(u, d, p, r).ok()?;
            KoParams::from_strike(&mkt, s0, d * s0 + kf * (u - d) * s0).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn optimal_ko_replicates_ks(ko in draw(), dc in -2.0f64..2.0) {
        let rep = replication_check(hedge_pivot(&ko) + dc, &ko);
        prop_assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn pivot_is_kelly_fraction(ko in draw()) {
        let f = ks_optimal_fraction(ko.market()).f_star;
        prop_assert!((hedge_pivot(&ko) - f).abs() <= 1e-10);
        prop_assert!(ko_optimal_g_closed_form(f, &ko).abs() <= 1e-9);
    }

    #[test]
    fn closed_form_is_affine(ko in draw(), c in -3.0f64..3.0) {
        let a = ko_optimal_g_closed_form(c, &ko);
        let b = ko_optimal_g_affine(c, &ko);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn optimal_growth_is_kelly_growth(ko in draw(), dc in -2.0f64..2.0) {
        let ks = ks_optimal_fraction(ko.market());
        let sol = ko_optimal_g(hedge_pivot(&ko) + dc, &ko).unwrap();
        prop_assert!((sol.growth - ks.growth).abs() <= 1e-12);
        prop_assert!((sol.f_replicating - ks.f_star).abs() <= 1e-10 * ks.f_star.abs().max(1.0));
    }

    #[test]
    fn no_feasible_g_beats_the_optimum(ko in draw(), c in -1.0f64..2.0, t in 0.001f64..0.999) {
        let (lo, hi) = feasible_g_interval(c, &ko);
        let g = lo + t * (hi - lo);
        let best = ko_optimal_g(c, &ko).unwrap().growth;
        let here = ko_growth_rate(g, c, &ko).unwrap();
        prop_assert!(here <= best + 1e-12);
    }

    #[test]
    fn ratio_identity_holds(ko in draw()) {
        let (lhs, rhs) = ko.ratio_identity();
        prop_assert!(lhs > 0.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn bounds_are_ordered_and_decreasing(ko in draw(), g1 in -5.0f64..5.0, dg in 0.01f64..5.0) {
        let (cu1, cd1) = feasibility_bounds(g1, &ko);
        let (cu2, cd2) = feasibility_bounds(g1 + dg, &ko);
        prop_assert!(cu1 < cd1 && cu2 < cd2);
        prop_assert!(cu1 > cu2 && cd1 > cd2);
    }

    #[test]
    fn feasibility_is_the_open_band(ko in draw(), g in -3.0f64..3.0, t in -0.5f64..1.5) {
        let (cu, cd) = feasibility_bounds(g, &ko);
        let c = cu + t * (cd - cu);
        let inside = t > 1e-9 && t < 1.0 - 1e-9;
        let outside = !(-1e-9..=1.0 + 1e-9).contains(&t);
        let feasible = ko_growth_rate(g, c, &ko).is_ok();
        if inside { prop_assert!(feasible); }
        if outside { prop_assert!(!feasible); }
    }

    #[test]
    fn leverage_and_shorting_need_hedge_limits(ko in draw(), g in 1.0001f64..10.0, t in 0.0f64..1.0) {
        let (_, cd_one) = feasibility_bounds(1.0, &ko);
        let (cu_zero, _) = feasibility_bounds(0.0, &ko);
        let (lo, hi) = feasibility_bounds(g, &ko);
        prop_assert!(lo + t * (hi - lo) < cd_one);
        let (lo, hi) = feasibility_bounds(-g, &ko);
        prop_assert!(lo + t * (hi - lo) > cu_zero);
    }

    #[test]
    fn optimum_independent_of_strike(ko in draw(), kf in 0.02f64..0.98, dc in -1.0f64..1.0) {
        let s0 = ko.contract().s0();
        let m = ko.market();
        let other = KoParams::from_strike(m, s0, m.d() * s0 + kf * (m.u() - m.d()) * s0).unwrap();
        let c = hedge_pivot(&ko) + dc;
        let a = ko_optimal_g(c, &ko).unwrap().growth;
        let b = ko_optimal_g(c, &other).unwrap().growth;
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!((a - ks_growth_rate(ks_optimal_fraction(m).f_star, m).unwrap()).abs() <= 1e-12);
    }
}
