//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. `--full` adds the long full-scale estimation run.

use nfkit::beamfocus::{
    alpha_3db, alpha_ula, beamdepth, ebrd, geometry_sweep, numerical_beamdepth, Variant,
};
use nfkit::beampattern::{
    hamming_window, modified_window, pattern_cut, peak_sidelobe, AxisWindows, CutAxis,
};
use nfkit::capacity::{multiuser_se_with, Placement, SeCodebook, SeScenario};
use nfkit::codebook::{build_codebook, column_coherence, same_angle_range_correlation, Scheme};
use nfkit::dof::{dft_grid, edof3, edof_report, nf_gain_fresnel, CountSettings};
use nfkit::estimation::{run_nmse_sweep, NmseRow, PilotScene, Sweep};
use nfkit::math::{gain, solve_crossing, Kernel, DEFAULT_TOL};
use nfkit::steering::{farfield_steering, nearfield_response, ResponseMode};
use nfkit::{ArrayConfig, PolarPoint};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Self {
            pass: true,
            detail: String::new(),
        }
    }

    fn expect(&mut self, ok: bool, msg: impl AsRef<str>) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(msg.as_ref());
        if !ok {
            self.detail.push_str(" [x]");
            self.pass = false;
        }
    }

    fn done(self) -> Outcome {
        Outcome {
            pass: self.pass,
            detail: self.detail,
        }
    }
}

type Res = nfkit::Result<Outcome>;

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn c1_fresnel_constants() -> Res {
    let mut c = Check::new();
    let g = db(gain(Kernel::Ula(2.28))?);
    c.expect((g + 8.7).abs() <= 0.3, format!("G(2.28) = {g:.3} dB"));
    let g = gain(Kernel::Ula(1.87))?;
    c.expect((g - 0.08).abs() <= 0.01, format!("G(1.87) = {g:.4}"));
    let gamma = solve_crossing(
        |x| gain(Kernel::Ula(x)).unwrap_or(f64::NAN),
        0.5,
        0.1,
        2.0,
        DEFAULT_TOL,
    )?;
    let a = gamma * gamma;
    c.expect((a - 1.75).abs() <= 0.02, format!("alpha ULA = {a:.4}"));
    c.expect(
        (alpha_ula() - a).abs() < 1e-8,
        format!("alpha_ula() = {:.4}", alpha_ula()),
    );
    let sq = alpha_3db(1.0, 1.0, 1.0)?.value;
    c.expect((sq - 1.25).abs() <= 0.02, format!("alpha square = {sq:.4}"));
    Ok(c.done())
}

fn c2_analytic_vs_numeric() -> Res {
    let cfg = ArrayConfig::new(256, 16, 30e9);
    let geom = cfg.derive();
    let e = ebrd(&geom, 0.0, FRAC_PI_2);
    let (lo, hi) = (geom.min_range, e / 1.5);
    let mut worst_near: f64 = 0.0;
    let mut worst_far: f64 = 0.0;
    for i in 0..20 {
        let r = lo + (hi - lo) * i as f64 / 19.0;
        let p = PolarPoint::boresight(r);
        let a = beamdepth(&geom, &p, Variant::Ura)?;
        let n = numerical_beamdepth(&cfg, &p)?;
        let rel = (a.bd_m - n.bd_m).abs() / n.bd_m;
        if r < 3.0 * geom.aperture {
            worst_near = worst_near.max(rel);
        } else {
            worst_far = worst_far.max(rel);
        }
    }
    let mut c = Check::new();
    c.expect(
        worst_far <= 0.05,
        format!("max rel err beyond 3D = {:.2}%", 100.0 * worst_far),
    );
    c.expect(
        worst_near <= 0.10,
        format!("max rel err below 3D = {:.2}%", 100.0 * worst_near),
    );
    Ok(c.done())
}

fn c3_ebrd_divergence() -> Res {
    let mut c = Check::new();
    let mut bad = Vec::new();
    for (n1, n2) in [(32usize, 32usize), (64, 16), (128, 8)] {
        let cfg = ArrayConfig::new(n1, n2, 30e9);
        let geom = cfg.derive();
        for k in 0..9 {
            let az = (-60.0 + 15.0 * k as f64).to_radians();
            let e = ebrd(&geom, az, FRAC_PI_2);
            let beyond = numerical_beamdepth(&cfg, &PolarPoint::new(az, FRAC_PI_2, 1.05 * e))?;
            let inside = numerical_beamdepth(&cfg, &PolarPoint::new(az, FRAC_PI_2, 0.95 * e))?;
            if beyond.finite || !inside.finite {
                bad.push(format!("{n1}x{n2}@{:.0}deg", az.to_degrees()));
            }
        }
    }
    c.expect(
        bad.is_empty(),
        format!(
            "27 cases, mismatches: {}",
            if bad.is_empty() {
                "none".into()
            } else {
                bad.join(",")
            }
        ),
    );
    Ok(c.done())
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    (max - min) / (v.iter().sum::<f64>() / v.len() as f64)
}

fn c4_geometry() -> Res {
    let rows = geometry_sweep(30e9, 0.1)?;
    let fixed_n: Vec<f64> = rows
        .iter()
        .filter(|r| r.constraint == "fixed_n")
        .map(|r| r.bd)
        .collect();
    let fixed_d: Vec<f64> = rows
        .iter()
        .filter(|r| r.constraint == "fixed_d")
        .map(|r| r.bd)
        .collect();
    let mut c = Check::new();
    c.expect(
        fixed_n[1..].iter().all(|b| fixed_n[0] > *b),
        format!("fixed N: BD(1) = {:.3e} vs {:?}", fixed_n[0], &fixed_n[1..]),
    );
    let (sn, sd) = (spread(&fixed_n), spread(&fixed_d));
    c.expect(
        sd < 0.25 * sn,
        format!("spread fixed D {sd:.3} vs fixed N {sn:.3}"),
    );
    Ok(c.done())
}

fn c5_psl() -> Res {
    let cfg = ArrayConfig::new(256, 1, 28e9);
    let geom = cfg.derive();
    let focal = PolarPoint::boresight(geom.rayleigh / 40.0);
    let axial = (geom.min_range, 20.0 * geom.rayleigh);
    let lateral = (-0.5, 0.5);
    let psl = |w: &AxisWindows, axis: CutAxis| -> nfkit::Result<f64> {
        let span = if axis == CutAxis::Axial {
            axial
        } else {
            lateral
        };
        Ok(peak_sidelobe(&pattern_cut(&cfg, &focal, axis, w, span, 4001)?)?.0)
    };
    let none = AxisWindows::default();
    let ham = AxisWindows::both(&cfg, hamming_window)?;
    let modi = AxisWindows::both(&cfg, |n| hamming_window(n).map(|w| modified_window(&w)))?;
    let mut c = Check::new();
    let v = psl(&none, CutAxis::LateralAzimuth)?;
    c.expect(
        (v + 13.46).abs() <= 0.5,
        format!("uniform lateral {v:.2} dB"),
    );
    let v = psl(&none, CutAxis::Axial)?;
    c.expect((v + 8.7).abs() <= 0.5, format!("uniform axial {v:.2} dB"));
    let v = psl(&modi, CutAxis::Axial)?;
    c.expect(v <= -12.5, format!("modified axial {v:.2} dB"));
    let v = psl(&ham, CutAxis::LateralAzimuth)?;
    c.expect(v <= -35.0, format!("hamming lateral {v:.2} dB"));
    let v = psl(&ham, CutAxis::Axial)?;
    c.expect(v > -8.7, format!("hamming axial {v:.2} dB"));
    Ok(c.done())
}

fn c6_edof_boundary() -> Res {
    let mut c = Check::new();
    let ula = ArrayConfig::new(256, 1, 28e9);
    let g = ula.derive();
    for phi in [0.0, FRAC_PI_6] {
        let r = g.rayleigh / 7.0 * phi.cos().powi(2);
        let e = edof3(
            &ula,
            &PolarPoint::new(phi, FRAC_PI_2, r),
            CountSettings::default(),
        )?;
        c.expect(
            e == 1.0,
            format!("ULA edof3(phi={:.0}deg) = {e}", phi.to_degrees()),
        );
    }
    let tx = ArrayConfig::new(64, 8, 28e9);
    let rx = ArrayConfig::new(32, 4, 28e9);
    let r1 = tx.derive().aperture * rx.derive().aperture / tx.wavelength();
    let at = edof_report(&tx, &rx, r1, CountSettings::default())?;
    let near = edof_report(&tx, &rx, r1 / 4.0, CountSettings::default())?;
    for (name, a, b) in [
        ("edof1", at.edof1, near.edof1),
        ("edof3", at.edof3, near.edof3),
        ("edof4", at.edof4, near.edof4),
    ] {
        c.expect(
            (a - 1.0).abs() <= 0.1 && b > 1.5,
            format!("MIMO {name}: {a:.3} at r1, {b:.3} at r1/4"),
        );
    }
    Ok(c.done())
}

fn c7_fresnel_fidelity() -> Res {
    let cfg = ArrayConfig::new(64, 1, 28e9);
    let geom = cfg.derive();
    let user = PolarPoint::boresight(4.0 * geom.aperture);
    let b = nearfield_response(&cfg, &user, ResponseMode::Exact)?;
    let grid = dft_grid(&cfg);
    let mut worst: f64 = 0.0;
    for (i, &uy) in grid.uy.iter().enumerate() {
        for (j, &uz) in grid.uz.iter().enumerate() {
            if !grid.is_visible(i, j) {
                continue;
            }
            let p = PolarPoint::from_cosines(uy, uz, 1.0);
            let a = farfield_steering(&cfg, p.azimuth, p.elevation);
            let exact = a.inner(&b).norm_sqr();
            let approx = nf_gain_fresnel(&cfg, (uy, uz), &user)?;
            worst = worst.max((exact - approx).abs());
        }
    }
    let mut c = Check::new();
    c.expect(worst <= 0.05, format!("max |f~ - exact| = {worst:.4}"));
    Ok(c.done())
}

fn c8_codebook() -> Res {
    let mut c = Check::new();
    let none = AxisWindows::default();
    let cfg = ArrayConfig::new(30, 18, 15e9);
    let coh = |s| -> nfkit::Result<f64> { column_coherence(&build_codebook(&cfg, s, &none)?) };
    let (bf, p, eb) = (coh(Scheme::Bf)?, coh(Scheme::P)?, coh(Scheme::Eb)?);
    c.expect(
        (bf - 0.26).abs() <= 0.05,
        format!("30x18 bf coherence {bf:.4}"),
    );
    c.expect(p >= 0.40, format!("p {p:.4}"));
    c.expect(eb >= 0.35, format!("eb {eb:.4}"));
    let ula = ArrayConfig::new(256, 1, 28e9);
    let adj = same_angle_range_correlation(&build_codebook(&ula, Scheme::Bf, &none)?, (0, 0))?;
    c.expect(
        (adj - 0.08).abs() <= 0.03,
        format!("adjacent same-angle bf correlation {adj:.4} (256-ULA boresight)"),
    );
    let big = ArrayConfig::new(64, 32, 15e9);
    let sb = build_codebook(&big, Scheme::Bf, &none)?.size();
    let sp = build_codebook(&big, Scheme::P, &none)?.size();
    c.expect(
        sb as f64 <= 0.6 * sp as f64,
        format!(
            "64x32 sizes bf {sb} / p {sp} = {:.3}",
            sb as f64 / sp as f64
        ),
    );
    let ref_cfg = ArrayConfig::new(8, 64, 15e9);
    let r = |s| -> nfkit::Result<f64> { column_coherence(&build_codebook(&ref_cfg, s, &none)?) };
    let _ = write!(
        c.detail,
        "; info 8x64: bf {:.3} p {:.3} eb {:.3}",
        r(Scheme::Bf)?,
        r(Scheme::P)?,
        r(Scheme::Eb)?
    );
    Ok(c.done())
}

const ALL: [Scheme; 4] = [Scheme::Bf, Scheme::P, Scheme::Eb, Scheme::Dft];

fn nmse_csv(rows: &[NmseRow]) -> String {
    rows.iter()
        .map(|r| {
            format!(
                "{},{},{},{}\n",
                r.scheme.name(),
                r.sweep_value,
                r.nmse_db,
                r.trials
            )
        })
        .collect()
}

fn desk_nmse() -> nfkit::Result<Vec<NmseRow>> {
    run_nmse_sweep(
        &PilotScene::desk(),
        &Sweep::Snr(vec![0.0, 10.0, 20.0]),
        &ALL,
        200,
    )
}

fn c9_nmse(full: bool) -> Res {
    let rows = desk_nmse()?;
    let mut c = Check::new();
    for snr in [0.0, 10.0, 20.0] {
        let at = |s: Scheme| {
            rows.iter()
                .find(|r| r.scheme == s && r.sweep_value == snr)
                .map(|r| r.nmse_db)
                .unwrap_or(f64::NAN)
        };
        let bf = at(Scheme::Bf);
        let ok = [Scheme::P, Scheme::Eb, Scheme::Dft]
            .iter()
            .all(|s| bf <= at(*s) + 1e-9);
        c.expect(
            ok,
            format!(
                "desk {snr} dB: bf {bf:.2} p {:.2} eb {:.2} dft {:.2}",
                at(Scheme::P),
                at(Scheme::Eb),
                at(Scheme::Dft)
            ),
        );
    }
    if full {
        let rows = run_nmse_sweep(&PilotScene::table1(), &Sweep::Snr(vec![20.0]), &ALL, 1000)?;
        let bf = rows
            .iter()
            .find(|r| r.scheme == Scheme::Bf)
            .map(|r| r.nmse_db)
            .unwrap_or(f64::NAN);
        let best = rows
            .iter()
            .filter(|r| r.scheme != Scheme::Bf)
            .map(|r| r.nmse_db)
            .fold(f64::INFINITY, f64::min);
        c.expect(
            best - bf >= 1.5,
            format!(
                "full 20 dB: bf {bf:.2} best baseline {best:.2} gap {:.2} dB",
                best - bf
            ),
        );
    } else {
        c.expect(true, "full-scale clause skipped (pass --full)");
    }
    Ok(c.done())
}

fn se(
    cfg: ArrayConfig,
    placement: Placement,
    codebook: SeCodebook,
    snr: &[f64],
) -> nfkit::Result<Vec<f64>> {
    let s = SeScenario {
        config: cfg,
        n_users: 5,
        placement,
        codebook,
        snr_db: snr.to_vec(),
        trials: 200,
        seed: 0,
    };
    multiuser_se_with(&s, &codebook.build(&cfg)?)
}

fn desk_se() -> nfkit::Result<Vec<(String, f64)>> {
    let cfg = ArrayConfig::new(32, 4, 28e9);
    let mut out = Vec::new();
    for pl in [
        Placement::EbrdRegion,
        Placement::BeyondEbrd,
        Placement::FarField,
    ] {
        for cb in [SeCodebook::Polar, SeCodebook::Dft] {
            let v = se(cfg, pl, cb, &[10.0])?[0];
            out.push((format!("{},{}", pl.name(), cb.name()), v));
        }
    }
    for (n1, n2) in [(16, 16), (32, 8), (64, 4)] {
        let v = se(
            ArrayConfig::new(n1, n2, 28e9),
            Placement::EbrdRegion,
            SeCodebook::Polar,
            &[10.0],
        )?[0];
        out.push((format!("eta{},polar", n1 / n2), v));
    }
    Ok(out)
}

fn se_csv(rows: &[(String, f64)]) -> String {
    rows.iter().map(|(k, v)| format!("{k},{v}\n")).collect()
}

fn c10_se() -> Res {
    let rows = desk_se()?;
    let get = |k: &str| {
        rows.iter()
            .find(|r| r.0 == k)
            .map(|r| r.1)
            .unwrap_or(f64::NAN)
    };
    let mut c = Check::new();
    let (p, d) = (get("ebrd_region,polar"), get("ebrd_region,dft"));
    c.expect(
        p >= 2.0 * d,
        format!(
            "EBRD region 10 dB: polar {p:.3} dft {d:.3} ratio {:.2}",
            p / d
        ),
    );
    for pl in ["beyond_ebrd", "far_field"] {
        let (p, d) = (get(&format!("{pl},polar")), get(&format!("{pl},dft")));
        c.expect(
            (p - d).abs() / d <= 0.15,
            format!("{pl}: polar {p:.3} dft {d:.3}"),
        );
    }
    let (e1, e4, e16) = (get("eta1,polar"), get("eta4,polar"), get("eta16,polar"));
    c.expect(
        e16 >= 0.95 * e4 && e4 >= 0.95 * e1,
        format!("fixed N=256 10 dB: eta1 {e1:.3} eta4 {e4:.3} eta16 {e16:.3}"),
    );
    Ok(c.done())
}

fn c11_determinism() -> Res {
    let mut c = Check::new();
    let a = nmse_csv(&desk_nmse()?);
    let b = nmse_csv(&desk_nmse()?);
    c.expect(
        a == b,
        format!("estimation sweep CSV identical ({} bytes)", a.len()),
    );
    let a = se_csv(&desk_se()?);
    let b = se_csv(&desk_se()?);
    c.expect(a == b, format!("SE CSV identical ({} bytes)", a.len()));
    let dirs = [
        tempfile::tempdir().expect("tempdir"),
        tempfile::tempdir().expect("tempdir"),
    ];
    for d in &dirs {
        let code = nfkit::cli::run([
            "nfkit",
            "reproduce",
            "fig9",
            "--seed",
            "7",
            "--out",
            d.path().to_str().expect("utf-8 temp path"),
        ]);
        c.expect(code == 0, format!("cli exit {code}"));
    }
    let read = |d: &tempfile::TempDir| {
        std::fs::read(d.path().join("reproduce_fig9_7.csv")).unwrap_or_default()
    };
    c.expect(
        !read(&dirs[0]).is_empty() && read(&dirs[0]) == read(&dirs[1]),
        "cli reproduce fig9 CSV byte-identical",
    );
    Ok(c.done())
}

fn main() {
    let full = std::env::args().any(|a| a == "--full");
    let criteria: Vec<(u32, &str, Box<dyn Fn() -> Res>)> = vec![
        (1, "Fresnel constants", Box::new(c1_fresnel_constants)),
        (
            2,
            "analytic vs numeric beamdepth",
            Box::new(c2_analytic_vs_numeric),
        ),
        (3, "EBRD divergence", Box::new(c3_ebrd_divergence)),
        (4, "geometry monotonicity", Box::new(c4_geometry)),
        (5, "PSL suite", Box::new(c5_psl)),
        (6, "EDoF boundary", Box::new(c6_edof_boundary)),
        (7, "Fresnel gain fidelity", Box::new(c7_fresnel_fidelity)),
        (8, "codebook metrics", Box::new(c8_codebook)),
        (9, "NMSE ordering", Box::new(move || c9_nmse(full))),
        (10, "SE experiments", Box::new(c10_se)),
        (11, "determinism", Box::new(c11_determinism)),
    ];
    let mut failed = 0;
    for (n, name, run) in &criteria {
        let t = Instant::now();
        let out = match run() {
            Ok(o) => o,
            Err(e) => Outcome {
                pass: false,
                detail: format!("error: {e}"),
            },
        };
        let el: Duration = t.elapsed();
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {:<30} {}  ({:.1}s) {}",
            name,
            if out.pass { "PASS" } else { "FAIL" },
            el.as_secs_f64(),
            out.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
