//! Values frozen from a 50-digit evaluation of the closed forms
//! (λ₀ = 1550 nm, δλ = 0.31 nm, D = 17 ps/(km·nm), l = 1 m).

use mzqkd::bb84::{g_factor, g_term_analysis};
use mzqkd::design::{max_rate, min_phase_sum, DetectorTiming, RateMode};
use mzqkd::{derive, x_rho, KappaConvention, LinkParams, MzConfig};

struct Golden {
    length: f64,
    sigma: f64,
    x3: f64,
    sum: f64,
    rate: f64,
    g: f64,
}

const FIRST_PRINCIPLES_KAPPA: f64 = 9.743_683_233_306_740_7e-10;
const CALIBRATED_KAPPA: f64 = 3.072_263_355_922_037_1e-10;

const FIRST_PRINCIPLES: [Golden; 4] = [
    Golden { length: 0.0, sigma: 6.167_334_991_286_357_4e-4, x3: 2.616_578_636_512_596_2e-3, sum: 1.046_631_454_605_038_5e-2, rate: 2.864_355_515_792_624_7e10, g: -1.661_484_263_069_456_4e-3 },
    Golden { length: 1e3, sigma: 1.698_955_088_983_473_7e-3, x3: 7.208_055_986_109_651_2e-3, sum: 2.883_222_394_443_860_5e-2, rate: 1.039_782_635_490_476_7e10, g: -1.096_895_457_578_965_9e-1 },
    Golden { length: 50e3, sigma: 7.900_087_978_527_808_1e-2, x3: 3.351_723_468_952_402_4e-1, sum: 1.340_689_387_580_961, rate: 2.236_106_743_120_589_3e8, g: -2.531_540_233_564_030_6e-3 },
    Golden { length: 405e3, sigma: 6.398_654_897_559_547_8e-1, x3: 2.714_719_361_122_122, sum: 1.085_887_744_448_848_8e1, rate: 2.760_805_244_672_524_8e7, g: -3.125_655_474_532_185_8e-4 },
];

const CALIBRATED: [Golden; 4] = [
    Golden { length: 0.0, sigma: 6.167_262_092_497_975_4e-4, x3: 2.616_547_708_176_033e-3, sum: 1.046_619_083_270_413_2e-2, rate: 2.864_389_373_287_808_9e10, g: -5.238_920_200_954_538e-4 },
    Golden { length: 1e3, sigma: 7.934_133_061_125_687_4e-4, x3: 3.366_167_574_215_012_4e-3, sum: 1.346_467_029_686_004_9e-2, rate: 2.226_511_688_666_534_7e10, g: -1.585_861_881_515_982_4e-1 },
    Golden { length: 50e3, sigma: 2.491_650_091_993_714_7e-2, x3: 1.057_117_605_835_704_4e-1, sum: 4.228_470_423_342_817_5e-1, rate: 7.089_855_857_688_583_7e8, g: -8.024_350_074_704_079_3e-3 },
    Golden { length: 405e3, sigma: 2.017_556_935_238_104e-1, x3: 8.559_769_142_020_868_5e-1, sum: 3.423_907_656_808_347_4, rate: 8.755_856_992_926_513e7, g: -9.912_932_919_329_528_5e-4 },
];

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

fn check(convention: KappaConvention, table: &[Golden]) {
    for row in table {
        let params = LinkParams::default().with_fiber_length(row.length).with_convention(convention);
        let d = derive(&params, &MzConfig::default()).unwrap();
        let x3 = x_rho(&d, 3.0).unwrap();
        let sum = min_phase_sum(&params, 3.0, DetectorTiming::IDEAL, 1.0).unwrap();
        let rate = max_rate(&params, 3.0, RateMode::Linear).unwrap();
        let g = g_factor(&params).unwrap();
        let at = format!("{convention} L={}", row.length);
        assert!(close(d.sigma, row.sigma, 1e-12), "{at}: sigma {} vs {}", d.sigma, row.sigma);
        assert!(close(x3, row.x3, 1e-12), "{at}: X3 {x3} vs {}", row.x3);
        assert!(close(sum, row.sum, 1e-12), "{at}: sum {sum} vs {}", row.sum);
        assert!(close(rate, row.rate, 1e-12), "{at}: rate {rate} vs {}", row.rate);
        assert!(close(g, row.g, 1e-10), "{at}: G {g} vs {}", row.g);
    }
}

#[test]
fn first_principles_chain() {
    let p = LinkParams::default();
    assert!(close(p.kappa(), FIRST_PRINCIPLES_KAPPA, 1e-13));
    check(KappaConvention::FirstPrinciples, &FIRST_PRINCIPLES);
}

#[test]
fn calibrated_chain() {
    let p = LinkParams::default().with_convention(KappaConvention::Calibrated);
    assert!(close(p.kappa(), CALIBRATED_KAPPA, 1e-13));
    check(KappaConvention::Calibrated, &CALIBRATED);
}

#[test]
fn g_peak_location() {
    for (convention, want) in [
        (KappaConvention::FirstPrinciples, 388.355_695_505_598_88),
        (KappaConvention::Calibrated, 1_236.013_088_296_006_8),
    ] {
        let p = LinkParams::default().with_convention(convention);
        let sweep = g_term_analysis(&p, &[100.0], 0.0).unwrap();
        assert!(close(sweep.analytic_argmax, want, 1e-12), "{convention}: {}", sweep.analytic_argmax);
    }
}
