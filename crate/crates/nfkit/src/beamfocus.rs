//! Beamdepth, 3 dB focal limits, EBRD and lateral resolution.

use crate::error::{domain, Error, Result};
use crate::geometry::{beta_factors, ArrayConfig, DerivedGeometry, PolarPoint};
use crate::math::{gain_factor, solve_crossing, DEFAULT_TOL};
use crate::steering::{nearfield_response, ResponseMode};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamdepthResult {
    pub bd_m: f64,
    pub r_min_m: f64,
    pub r_max_m: f64,
    pub finite: bool,
}

impl BeamdepthResult {
    fn from_limits(r_min: f64, r_max: f64) -> Self {
        let finite = r_max.is_finite();
        Self {
            bd_m: if finite { r_max - r_min } else { f64::INFINITY },
            r_min_m: r_min,
            r_max_m: r_max,
            finite,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alpha3dB {
    pub value: f64,
    pub gamma_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Ura,
    Usa,
    Ula,
    ApproxBoresight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    Azimuth,
    Elevation,
}

/// γ₁γ₂ at which the product kernel falls to 0.5, with γ₁/γ₂ = η√(β₁/β₂).
pub fn alpha_3db(aspect_ratio: f64, beta1: f64, beta2: f64) -> Result<Alpha3dB> {
    alpha_at_level(aspect_ratio, beta1, beta2, 0.5)
}

pub fn alpha_at_level(aspect_ratio: f64, beta1: f64, beta2: f64, level: f64) -> Result<Alpha3dB> {
    if !(beta1 > 0.0 && beta2 > 0.0) {
        return Err(Error::Degenerate(format!(
            "beta factors ({beta1}, {beta2}) at endfire"
        )));
    }
    if !(aspect_ratio > 0.0) || !(0.0 < level && level < 1.0) {
        return Err(domain("aspect ratio must be > 0 and level in (0, 1)"));
    }
    let rho = aspect_ratio * (beta1 / beta2).sqrt();
    let hi = 3.0 / rho.max(1.0);
    let g2 = solve_crossing(
        |g| gain_factor(rho * g) * gain_factor(g),
        level,
        1e-9,
        hi,
        DEFAULT_TOL,
    )?;
    Ok(Alpha3dB {
        value: rho * g2 * g2,
        gamma_ratio: rho,
    })
}

/// Single-axis α: γ² at which (C²+S²)/γ² falls to `level`.
pub fn alpha_ula_at_level(level: f64) -> Result<f64> {
    if !(0.0 < level && level < 1.0) {
        return Err(domain("level must be in (0, 1)"));
    }
    let g = solve_crossing(gain_factor, level, 1e-9, 1.8, DEFAULT_TOL)?;
    Ok(g * g)
}

pub fn alpha_ula() -> f64 {
    alpha_ula_at_level(0.5).expect("bracket holds for 0.5")
}

/// β of the array axis for single-axis arrays.
fn ula_beta(config: &ArrayConfig, beta1: f64, beta2: f64) -> f64 {
    if config.n2 == 1 {
        beta1
    } else {
        beta2
    }
}

/// Effective beamfocusing Rayleigh distance; 0 at endfire.
pub fn ebrd(geom: &DerivedGeometry, azimuth: f64, elevation: f64) -> f64 {
    let (b1, b2) = beta_factors(azimuth, elevation);
    if geom.config.is_ula() {
        return geom.rayleigh * ula_beta(&geom.config, b1, b2) / (4.0 * alpha_ula());
    }
    match alpha_3db(geom.aspect_ratio, b1, b2) {
        Ok(a) => ebrd_closed(geom.rayleigh, geom.aspect_ratio, a.value, b1, b2),
        Err(_) => 0.0,
    }
}

fn ebrd_closed(rayleigh: f64, eta: f64, alpha: f64, b1: f64, b2: f64) -> f64 {
    eta * rayleigh * (b1 * b2).sqrt() / (4.0 * alpha * (1.0 + eta * eta))
}

/// 3 dB limits around `range` for a focusing limit `e`.
pub fn limits_from_ebrd(range: f64, e: f64) -> BeamdepthResult {
    let r_min = 1.0 / (1.0 / range + 1.0 / e);
    let inv = 1.0 / range - 1.0 / e;
    let r_max = if inv > 0.0 { 1.0 / inv } else { f64::INFINITY };
    BeamdepthResult::from_limits(r_min, r_max)
}

/// Closed-form beamdepth. `range` must lie in the radiative near field (≥ 2D).
pub fn beamdepth(
    geom: &DerivedGeometry,
    point: &PolarPoint,
    variant: Variant,
) -> Result<BeamdepthResult> {
    if !(point.range >= geom.min_range * (1.0 - 1e-12)) {
        return Err(domain(format!(
            "focal range {} below 2D = {}",
            point.range, geom.min_range
        )));
    }
    let (b1, b2) = beta_factors(point.azimuth, point.elevation);
    let cfg = &geom.config;
    let e = match variant {
        Variant::Ura => {
            if cfg.is_ula() {
                ula_ebrd(geom, b1, b2)?
            } else {
                let a = alpha_3db(geom.aspect_ratio, b1, b2)?;
                ebrd_closed(geom.rayleigh, geom.aspect_ratio, a.value, b1, b2)
            }
        }
        Variant::Usa => {
            if cfg.n1 != cfg.n2 || cfg.n1 < 2 {
                return Err(domain("usa variant needs a square array"));
            }
            let a = alpha_3db(1.0, b1, b2)?;
            geom.rayleigh * (b1 * b2).sqrt() / (8.0 * a.value)
        }
        Variant::Ula => {
            if !cfg.is_ula() {
                return Err(domain("ula variant needs a single-axis array"));
            }
            ula_ebrd(geom, b1, b2)?
        }
        Variant::ApproxBoresight => {
            let e0 = if cfg.is_ula() {
                geom.rayleigh / (4.0 * alpha_ula())
            } else {
                let a = alpha_3db(geom.aspect_ratio, 1.0, 1.0)?;
                ebrd_closed(geom.rayleigh, geom.aspect_ratio, a.value, 1.0, 1.0)
            };
            let bd = 2.0 * point.range * point.range / e0;
            return Ok(BeamdepthResult {
                bd_m: bd,
                r_min_m: point.range - 0.5 * bd,
                r_max_m: point.range + 0.5 * bd,
                finite: true,
            });
        }
    };
    Ok(limits_from_ebrd(point.range, e))
}

fn ula_ebrd(geom: &DerivedGeometry, b1: f64, b2: f64) -> Result<f64> {
    let b = ula_beta(&geom.config, b1, b2);
    if b <= 0.0 {
        return Err(Error::Degenerate("single-axis array at endfire".into()));
    }
    Ok(geom.rayleigh * b / (4.0 * alpha_ula()))
}

/// Settings for the exact-vector beamdepth scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub points: usize,
    /// Upper end of the scan in multiples of r_RD.
    pub ceiling: f64,
    pub level: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            points: 2048,
            ceiling: 20.0,
            level: 0.5,
        }
    }
}

pub fn numerical_beamdepth(config: &ArrayConfig, point: &PolarPoint) -> Result<BeamdepthResult> {
    numerical_beamdepth_with(config, point, ScanSettings::default())
}

/// Beamdepth from |w^H b(z)|² with exact responses on a log grid in z,
/// crossings refined by bisection.
pub fn numerical_beamdepth_with(
    config: &ArrayConfig,
    point: &PolarPoint,
    scan: ScanSettings,
) -> Result<BeamdepthResult> {
    let geom = config.derive();
    if !(point.range >= geom.min_range * (1.0 - 1e-12)) {
        return Err(domain(format!(
            "focal range {} below 2D = {}",
            point.range, geom.min_range
        )));
    }
    let w = nearfield_response(config, point, ResponseMode::Exact)?;
    let gain = |z: f64| -> f64 {
        let b =
            nearfield_response(config, &point.with_range(z), ResponseMode::Exact).expect("z > 0");
        w.inner(&b).norm_sqr()
    };
    let lo = geom.min_range.min(point.range) / 4.0;
    let hi = scan.ceiling * geom.rayleigh;
    let n = scan.points.max(16);
    let step = (hi / lo).ln() / (n - 1) as f64;
    let z_at = |i: usize| lo * (step * i as f64).exp();
    let focal = (((point.range / lo).ln() / step).round() as usize).min(n - 1);

    let refine = |mut inside: f64, mut outside: f64| -> f64 {
        while (inside - outside).abs() > 1e-7 * inside {
            let m = 0.5 * (inside + outside);
            if gain(m) >= scan.level {
                inside = m;
            } else {
                outside = m;
            }
        }
        0.5 * (inside + outside)
    };

    let mut r_min = None;
    let mut prev = point.range;
    for i in (0..focal).rev() {
        let z = z_at(i);
        if z >= point.range {
            continue;
        }
        if gain(z) < scan.level {
            r_min = Some(refine(prev, z));
            break;
        }
        prev = z;
    }
    let r_min =
        r_min.ok_or_else(|| Error::NotFound("lower 3 dB crossing below scan floor".into()))?;

    let mut r_max = f64::INFINITY;
    let mut prev = point.range;
    for i in focal..n {
        let z = z_at(i);
        if z <= point.range {
            continue;
        }
        if gain(z) < scan.level {
            r_max = refine(prev, z);
            break;
        }
        prev = z;
    }
    Ok(BeamdepthResult::from_limits(r_min, r_max))
}

/// r_F·λ / (D_plane·cos(angle)) with D_y = N₁d, D_z = N₂d.
pub fn lateral_resolution(geom: &DerivedGeometry, point: &PolarPoint, plane: Plane) -> Result<f64> {
    if !(point.range > 0.0) {
        return Err(domain("range must be > 0"));
    }
    let cfg = &geom.config;
    let (extent, cosine) = match plane {
        Plane::Azimuth => (cfg.n1 as f64 * cfg.spacing, point.azimuth.cos()),
        Plane::Elevation => (
            cfg.n2 as f64 * cfg.spacing,
            (PI / 2.0 - point.elevation).cos(),
        ),
    };
    if cosine.abs() < 1e-12 {
        return Err(Error::Degenerate("lateral resolution at endfire".into()));
    }
    Ok(point.range * geom.wavelength / (extent * cosine))
}

/// True when the lateral resolution in `plane` is finer than the axial one
/// (small-range beamdepth 2r²/EBRD).
pub fn resolution_condition(
    geom: &DerivedGeometry,
    point: &PolarPoint,
    plane: Plane,
) -> Result<bool> {
    let lateral = lateral_resolution(geom, point, plane)?;
    let e = ebrd(geom, point.azimuth, point.elevation);
    if e <= 0.0 {
        return Ok(true);
    }
    Ok(lateral < 2.0 * point.range * point.range / e)
}

/// One point of the array-geometry beamdepth study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryRow {
    pub constraint: &'static str,
    pub eta: f64,
    pub n1: usize,
    pub n2: usize,
    pub range: f64,
    pub bd: f64,
}

/// Boresight beamdepth at one common focal range for η ∈ {1, 4, 16, 64},
/// first with N = 1024 fixed, then with the aperture of the 256×4 array fixed
/// (large enough that the η = 64 member still has several rows).
/// The range is shared by every array, so it may sit below 2D for the larger
/// ones; the limits are evaluated from the EBRD directly.
pub fn geometry_sweep(carrier_hz: f64, range_m: f64) -> Result<Vec<GeometryRow>> {
    if !(range_m > 0.0) {
        return Err(domain("focal range must be > 0"));
    }
    let d_ref = ArrayConfig::new(256, 4, carrier_hz).derive().aperture;
    let spacing = ArrayConfig::new(1, 1, carrier_hz).spacing;
    let fixed_n = [(32usize, 32usize), (64, 16), (128, 8), (256, 4)];
    let fixed_d = [1usize, 4, 16, 64].map(|eta| {
        let n2 = (d_ref / (spacing * ((eta * eta + 1) as f64).sqrt()))
            .round()
            .max(1.0) as usize;
        (eta * n2, n2)
    });
    let rows = fixed_n
        .iter()
        .map(|s| ("fixed_n", *s))
        .chain(fixed_d.iter().map(|s| ("fixed_d", *s)))
        .map(|(constraint, (n1, n2))| {
            let geom = ArrayConfig::new(n1, n2, carrier_hz).derive();
            let e = ebrd(&geom, 0.0, PI / 2.0);
            GeometryRow {
                constraint,
                eta: geom.aspect_ratio,
                n1,
                n2,
                range: range_m,
                bd: limits_from_ebrd(range_m, e).bd_m,
            }
        })
        .collect();
    Ok(rows)
}
