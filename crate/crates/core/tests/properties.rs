use mzqkd::bb84::{detection_table, z_difference, Basis, Bit, TableOptions};
use mzqkd::compensation::{plan, CompensationPlan, Regime};
use mzqkd::config::RunConfig;
use mzqkd::design::{gate_window, max_rate, min_phase_sum, visibility_of_rho, DetectorTiming, RateMode};
use mzqkd::physics::PS_PER_KM_NM;
use mzqkd::spectra::{eval_analytic, CurveSamples, GridSpec};
use mzqkd::{derive, x_rho, KappaConvention, LinkParams, MzConfig, Pair, SPEED_OF_LIGHT};
use proptest::prelude::*;

fn convention() -> impl Strategy<Value = KappaConvention> {
    prop_oneof![Just(KappaConvention::FirstPrinciples), Just(KappaConvention::Calibrated)]
}

prop_compose! {
    fn link()(
        length_km in 0.0..500.0f64,
        dispersion in 0.5..30.0f64,
        linewidth_nm in 0.05..2.0f64,
        leg in 0.0..3.0f64,
        convention in convention(),
    ) -> LinkParams {
        LinkParams {
            fiber_length: length_km * 1e3,
            dispersion: dispersion * PS_PER_KM_NM,
            delta_lambda: linewidth_nm * 1e-9,
            leg_length: leg,
            kappa_convention: convention,
            ..LinkParams::default()
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #[test]
    fn rate_times_sum_is_speed_of_light(p in link(), rho in 0.2..4.0f64) {
        let sum = min_phase_sum(&p, rho, DetectorTiming::IDEAL, 1.0).unwrap();
        let rate = max_rate(&p, rho, RateMode::Linear).unwrap();
        prop_assert!(rel(rate * sum, SPEED_OF_LIGHT) < 1e-12);
    }

    #[test]
    fn sum_is_linear_in_rho(p in link(), rho in 0.2..2.0f64) {
        let a = min_phase_sum(&p, rho, DetectorTiming::IDEAL, 1.0).unwrap();
        let b = min_phase_sum(&p, 2.0 * rho, DetectorTiming::IDEAL, 1.0).unwrap();
        prop_assert!(rel(b, 2.0 * a) < 1e-12);
    }

    #[test]
    fn width_grows_with_length(p in link(), extra_km in 0.001..100.0f64) {
        let longer = p.with_fiber_length(p.fiber_length + extra_km * 1e3);
        let a = derive(&p, &MzConfig::default()).unwrap();
        let b = derive(&longer, &MzConfig::default()).unwrap();
        prop_assert!(a.sigma >= 1.0 / (2.0 * a.delta_k) * (1.0 - 1e-15));
        prop_assert!(b.sigma > a.sigma);
    }

    #[test]
    fn visibility_is_increasing(rho in 0.01..5.0f64, step in 1e-3..1.0f64) {
        prop_assert!(visibility_of_rho(rho + step).unwrap() >= visibility_of_rho(rho).unwrap());
    }

    #[test]
    fn gate_window_is_linear_in_excess(p in link(), excess in 1e-3..2.0f64) {
        let d = derive(&p, &MzConfig::default()).unwrap();
        let two_x = 2.0 * x_rho(&d, 3.0).unwrap();
        let a = gate_window(two_x + excess, &p, 3.0).unwrap();
        let b = gate_window(two_x + 2.0 * excess, &p, 3.0).unwrap();
        prop_assert!(rel(b, 2.0 * a) < 1e-9);
    }

    #[test]
    fn factored_phase_difference_is_exact(
        p in link(),
        base in 0.05..1.0f64,
        quarter_d in 0u8..4,
        quarter_m in 0u8..4,
        delta_c in 0.0..0.01f64,
        dx in -4.0..4.0f64,
    ) {
        let l = p.lambda0;
        let cfg = MzConfig {
            delta_c,
            ..MzConfig::with_shifters(base + f64::from(quarter_d) * l / 4.0, base + f64::from(quarter_m) * l / 4.0)
        };
        let sigma = derive(&p, &cfg).unwrap().sigma;
        for (a, b) in [(Pair::Cm, Pair::Dc), (Pair::Dm, Pair::Cc), (Pair::Cm, Pair::Cc)] {
            let z = z_difference(&p, &cfg, dx * sigma, a, b).unwrap();
            prop_assert!((z.exact - z.factored).abs() <= 1e-9 * z.exact.abs().max(1.0));
        }
    }

    #[test]
    fn csv_round_trips(rows in prop::collection::vec((0.0..1.0f64, 0.0..1e3f64, 0.0..1e3f64), 2..40)) {
        let mut x = 0.0;
        let mut s = CurveSamples { x: vec![], intensity_o: vec![], intensity_p: vec![] };
        for (dx, o, p) in rows {
            x += dx + 1e-9;
            s.x.push(x);
            s.intensity_o.push(o);
            s.intensity_p.push(p);
        }
        prop_assert_eq!(CurveSamples::from_csv(&s.to_csv()).unwrap(), s);
    }

    #[test]
    fn config_round_trips(
        length in 0.0..1000.0f64,
        rho in 0.1..5.0f64,
        convention in convention(),
        sum in proptest::option::of(0.0..5.0f64),
    ) {
        let mut cfg = RunConfig::default();
        cfg.link.length_km = length;
        cfg.link.kappa_convention = convention;
        cfg.design.rho = rho;
        cfg.design.sum_m = sum;
        prop_assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exits_sum_is_phase_independent(
        length_km in 0.0..100.0f64,
        convention in convention(),
        quarter_d in 0u8..4,
        quarter_m in 0u8..4,
    ) {
        let p = LinkParams::default().with_fiber_length(length_km * 1e3).with_convention(convention);
        let d = derive(&p, &MzConfig::default()).unwrap();
        let base = 4.0 * x_rho(&d, 3.0).unwrap();
        let grid = GridSpec::default().with_points(2048);
        let total = |qd: u8, qm: u8| {
            let l = p.lambda0;
            let cfg = MzConfig::with_shifters(base + f64::from(qd) * l / 4.0, base + f64::from(qm) * l / 4.0);
            let (o, q) = eval_analytic(&p, &cfg, &grid).unwrap().total_masses();
            o + q
        };
        prop_assert!((total(quarter_d, quarter_m) - total(0, 0)).abs() < 1e-6);
        prop_assert!(eval_analytic(&p, &MzConfig::with_shifters(base, base), &grid)
            .unwrap()
            .intensity_o
            .iter()
            .all(|v| *v >= 0.0));
    }

    #[test]
    fn shares_are_a_split(length_km in 1.0..100.0f64, baseline in 0.0..0.5f64) {
        let p = LinkParams::default()
            .with_fiber_length(length_km * 1e3)
            .with_convention(KappaConvention::Calibrated);
        let min = min_phase_sum(&p, 3.0, DetectorTiming::IDEAL, 1.0).unwrap() / 2.0;
        let options = TableOptions { grid: GridSpec::default().with_points(1024), ..TableOptions::default() };
        let table = detection_table(&p, min + baseline, &options).unwrap();
        for r in &table.rows {
            prop_assert!((r.share_o + r.share_p - 1.0).abs() < 1e-12);
        }
        let zero = table.row(Basis::X, Bit::Zero, Basis::X);
        let one = table.row(Basis::X, Bit::One, Basis::X);
        prop_assert!(zero.share_o > 0.999 && one.share_p > 0.999);
    }

    #[test]
    fn active_length_is_monotone_in_clock(
        km in 1.0..600.0f64,
        a_ghz in 0.01..20.0f64,
        b_ghz in 0.01..20.0f64,
        convention in convention(),
    ) {
        let p = LinkParams::default().with_fiber_length(km * 1e3).with_convention(convention);
        let (lo, hi) = if a_ghz <= b_ghz { (a_ghz, b_ghz) } else { (b_ghz, a_ghz) };
        let slow = plan(&p, lo * 1e9, 3.0, RateMode::Linear).unwrap();
        let fast = plan(&p, hi * 1e9, 3.0, RateMode::Linear).unwrap();
        prop_assert!(fast.active_length <= slow.active_length);
        prop_assert!(fast.dcf_equivalent_length >= slow.dcf_equivalent_length);
        for q in [&slow, &fast] {
            let rate = max_rate(&p.with_fiber_length(q.active_length), 3.0, RateMode::Linear).unwrap();
            prop_assert!(rate >= q.clock_rate);
            if q.regime == Regime::PartialDcf {
                prop_assert!(rel(rate, q.clock_rate) < 1e-3);
            }
            prop_assert_eq!(&CompensationPlan::from_json(&q.to_json()).unwrap(), q);
        }
    }
}
