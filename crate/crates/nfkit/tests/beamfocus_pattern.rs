use nfkit::beamfocus::{
    alpha_3db, alpha_ula, beamdepth, ebrd, limits_from_ebrd, numerical_beamdepth, Variant,
};
use nfkit::beampattern::{
    beamwidth_3db, hamming_window, modified_window, pattern_cut, peak_sidelobe, AxisWindows,
    CutAxis,
};
use nfkit::steering::{nearfield_response, ResponseMode};
use nfkit::{ArrayConfig, PolarPoint};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn exact_gain(cfg: &ArrayConfig, focus: &PolarPoint, range: f64) -> f64 {
    let w = nearfield_response(cfg, focus, ResponseMode::Exact).unwrap();
    let b = nearfield_response(cfg, &focus.with_range(range), ResponseMode::Exact).unwrap();
    w.inner(&b).norm_sqr()
}

#[test]
fn ebrd_oracles() {
    let ula = ArrayConfig::new(256, 1, 28e9).derive();
    let e = ebrd(&ula, 0.0, FRAC_PI_2);
    assert!((e * 4.0 * alpha_ula() / ula.rayleigh - 1.0).abs() < 1e-12);
    assert!((e / (ula.rayleigh / 7.0) - 1.0).abs() < 0.01, "{e}");

    let sq = ArrayConfig::new(32, 32, 28e9).derive();
    let a = alpha_3db(1.0, 1.0, 1.0).unwrap().value;
    let e = ebrd(&sq, 0.0, FRAC_PI_2);
    assert!((e * 8.0 * a / sq.rayleigh - 1.0).abs() < 1e-12);
    assert!((e / (sq.rayleigh / 10.0) - 1.0).abs() < 0.01, "{e}");
}

#[test]
fn ula_limits_match_gain_scan() {
    let cfg = ArrayConfig::new(256, 1, 28e9);
    let geom = cfg.derive();
    let p = PolarPoint::boresight(10.0);
    let a = beamdepth(&geom, &p, Variant::Ula).unwrap();
    let n = numerical_beamdepth(&cfg, &p).unwrap();
    assert!((a.bd_m - n.bd_m).abs() / n.bd_m < 0.05, "{a:?} {n:?}");
    let want = 8.0 * alpha_ula() * 100.0 * geom.rayleigh
        / (geom.rayleigh.powi(2) - (4.0 * alpha_ula() * 10.0).powi(2));
    assert!((a.bd_m - want).abs() < 1e-9 * want);
}

#[test]
fn numerical_limits_sit_at_half_power() {
    for (n1, n2, az) in [(64usize, 8usize, 0.0), (32, 32, 0.3), (128, 4, -0.5)] {
        let cfg = ArrayConfig::new(n1, n2, 28e9);
        let geom = cfg.derive();
        let e = ebrd(&geom, az, FRAC_PI_2);
        let p = PolarPoint::new(az, FRAC_PI_2, 0.5 * e.max(geom.min_range));
        let r = numerical_beamdepth(&cfg, &p).unwrap();
        assert!(r.finite && r.r_min_m < p.range && p.range < r.r_max_m);
        for z in [r.r_min_m, r.r_max_m] {
            assert!((exact_gain(&cfg, &p, z) - 0.5).abs() <= 0.01);
        }
    }
}

#[test]
fn square_array_maximizes_beamdepth_and_minimizes_ebrd() {
    let shapes = [
        (32usize, 32usize),
        (64, 16),
        (128, 8),
        (256, 4),
        (16, 64),
        (8, 128),
    ];
    let r = 0.1;
    let rows: Vec<(f64, f64)> = shapes
        .iter()
        .map(|(a, b)| {
            let g = ArrayConfig::new(*a, *b, 30e9).derive();
            let e = ebrd(&g, 0.0, FRAC_PI_2);
            (e, limits_from_ebrd(r, e).bd_m)
        })
        .collect();
    for (e, bd) in &rows[1..] {
        assert!(rows[0].0 <= *e);
        assert!(rows[0].1 > *bd);
    }
}

fn square() -> impl Strategy<Value = (ArrayConfig, PolarPoint)> {
    (
        2usize..64,
        10e9f64..60e9,
        -1.2f64..1.2,
        0.5f64..2.6,
        0.0f64..1.0,
    )
        .prop_map(|(n, f, az, el, t)| {
            let cfg = ArrayConfig::new(n, n, f);
            let g = cfg.derive();
            let r = g.min_range * (1.0 + 50.0 * t);
            (cfg, PolarPoint::new(az, el, r))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ura_equals_usa_for_square((cfg, p) in square()) {
        let g = cfg.derive();
        let a = beamdepth(&g, &p, Variant::Ura).unwrap();
        let b = beamdepth(&g, &p, Variant::Usa).unwrap();
        prop_assert_eq!(a.finite, b.finite);
        if a.finite {
            prop_assert!((a.bd_m - b.bd_m).abs() <= 1e-12 * b.bd_m);
        }
    }

    #[test]
    fn beamdepth_increases_with_range(n1 in 2usize..200, n2 in 2usize..32, az in -1.0f64..1.0, s in 0.0f64..0.9, ds in 0.001f64..0.1) {
        let g = ArrayConfig::new(n1, n2, 28e9).derive();
        let e = ebrd(&g, az, FRAC_PI_2);
        prop_assume!(e > g.min_range * 1.01);
        let r1 = g.min_range + s * (e - g.min_range);
        let r2 = (r1 + ds * (e - g.min_range)).min(e * (1.0 - 1e-9));
        prop_assume!(r2 > r1);
        let a = beamdepth(&g, &PolarPoint::new(az, FRAC_PI_2, r1), Variant::Ura).unwrap();
        let b = beamdepth(&g, &PolarPoint::new(az, FRAC_PI_2, r2), Variant::Ura).unwrap();
        prop_assert!(b.bd_m > a.bd_m);
    }
}

fn ula_cut(w: &AxisWindows, axis: CutAxis) -> nfkit::beampattern::PatternCut {
    let cfg = ArrayConfig::new(256, 1, 28e9);
    let geom = cfg.derive();
    let focal = PolarPoint::boresight(geom.rayleigh / 40.0);
    let span = match axis {
        CutAxis::Axial => (geom.min_range, 20.0 * geom.rayleigh),
        _ => (-0.5, 0.5),
    };
    pattern_cut(&cfg, &focal, axis, w, span, 4001).unwrap()
}

#[test]
fn pattern_peak_is_zero_db() {
    let cfg = ArrayConfig::new(256, 1, 28e9);
    let ham = AxisWindows::both(&cfg, hamming_window).unwrap();
    for w in [AxisWindows::default(), ham] {
        for axis in [CutAxis::Axial, CutAxis::LateralAzimuth] {
            let c = ula_cut(&w, axis);
            let max = c.gain_db.iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(max, 0.0);
        }
    }
}

#[test]
fn hamming_trades_lateral_for_axial() {
    let cfg = ArrayConfig::new(256, 1, 28e9);
    let ham = AxisWindows::both(&cfg, hamming_window).unwrap();
    let lateral = peak_sidelobe(&ula_cut(&ham, CutAxis::LateralAzimuth))
        .unwrap()
        .0;
    let axial = peak_sidelobe(&ula_cut(&ham, CutAxis::Axial)).unwrap().0;
    assert!(lateral < -35.0, "{lateral}");
    assert!(axial > -8.7, "{axial}");
}

#[test]
fn modified_window_keeps_lateral_beamwidth() {
    let cfg = ArrayConfig::new(256, 1, 28e9);
    let modi = AxisWindows::both(&cfg, |n| hamming_window(n).map(|w| modified_window(&w))).unwrap();
    let base = ula_cut(&AxisWindows::default(), CutAxis::LateralAzimuth);
    let step = base.coords[1] - base.coords[0];
    let a = beamwidth_3db(&base);
    let b = beamwidth_3db(&ula_cut(&modi, CutAxis::LateralAzimuth));
    assert!(
        (a - b).abs() <= step,
        "uniform {a} vs modified {b} (grid step {step})"
    );
}
