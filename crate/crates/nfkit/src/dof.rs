//! Effective spatial degrees of freedom, the DFT spatial-frequency grid and
//! the Fresnel approximation of near-field DFT coefficients.

use crate::error::{domain, Error, Result};
use crate::geometry::{element_indices, ArrayConfig, PolarPoint};
use crate::math::shifted_bracket;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Spatial-frequency samples of a (possibly oversampled) DFT grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFrequencyGrid {
    pub uy: Vec<f64>,
    pub uz: Vec<f64>,
    /// Row-major over (uy, uz).
    pub visible_mask: Vec<bool>,
}

impl SpatialFrequencyGrid {
    pub fn is_visible(&self, i: usize, j: usize) -> bool {
        self.visible_mask[i * self.uz.len() + j]
    }

    pub fn visible_count(&self) -> usize {
        self.visible_mask.iter().filter(|v| **v).count()
    }

    pub fn visible_fraction(&self) -> f64 {
        self.visible_count() as f64 / self.visible_mask.len() as f64
    }
}

/// Samples u = −nλ/(M d) for n over the centred index range of M points.
fn axis_samples(m: usize, wavelength: f64, spacing: f64) -> Vec<f64> {
    element_indices(m)
        .map(|n| {
            if n == 0 {
                0.0
            } else {
                -(n as f64) * wavelength / (m as f64 * spacing)
            }
        })
        .collect()
}

/// Orthogonal DFT grid: u^(n) = −nλ/(N d), spacing 2/N at half-wavelength.
pub fn dft_grid(config: &ArrayConfig) -> SpatialFrequencyGrid {
    dft_grid_oversampled(config, 1)
}

/// DFT grid oversampled by `k` along every axis with more than one element.
pub fn dft_grid_oversampled(config: &ArrayConfig, k: usize) -> SpatialFrequencyGrid {
    let k = k.max(1);
    let lam = config.wavelength();
    let m1 = if config.n1 > 1 { k * config.n1 } else { 1 };
    let m2 = if config.n2 > 1 { k * config.n2 } else { 1 };
    let uy = axis_samples(m1, lam, config.spacing);
    let uz = axis_samples(m2, lam, config.spacing);
    let visible_mask = uy
        .iter()
        .flat_map(|a| uz.iter().map(move |b| a * a + b * b <= 1.0 + 1e-12))
        .collect();
    SpatialFrequencyGrid {
        uy,
        uz,
        visible_mask,
    }
}

/// Fresnel approximation of one axis' normalized DFT coefficient.
fn axis_gain(
    n: usize,
    spacing: f64,
    wavelength: f64,
    u_user: f64,
    u_grid: f64,
    range: f64,
) -> Result<f64> {
    if n <= 1 {
        return Ok(1.0);
    }
    let beta = 1.0 - u_user * u_user;
    if !(beta > 0.0) {
        return Err(Error::Degenerate(
            "user direction on the visible-region boundary".into(),
        ));
    }
    let half = 0.5 * n as f64 * spacing * (2.0 * beta / (wavelength * range)).sqrt();
    let off = (u_grid - u_user) * (2.0 * range / (wavelength * beta)).sqrt();
    Ok(shifted_bracket(off, half) / (4.0 * half * half))
}

/// Separable Fresnel approximation f̃ of |a(u_grid)^H b(user)|².
pub fn nf_gain_fresnel(
    config: &ArrayConfig,
    grid_point: (f64, f64),
    user: &PolarPoint,
) -> Result<f64> {
    if !(user.range > 0.0) {
        return Err(domain("user range must be > 0"));
    }
    let (_, uy, uz) = user.cosines();
    let lam = config.wavelength();
    let gy = axis_gain(config.n1, config.spacing, lam, uy, grid_point.0, user.range)?;
    let gz = axis_gain(config.n2, config.spacing, lam, uz, grid_point.1, user.range)?;
    Ok(gy * gz)
}

/// f̃ over a whole grid, row-major over (uy, uz); invisible points are 0.
pub fn fresnel_gain_map(
    config: &ArrayConfig,
    grid: &SpatialFrequencyGrid,
    user: &PolarPoint,
) -> Result<Vec<f64>> {
    let (_, uy, uz) = user.cosines();
    let lam = config.wavelength();
    let fy = grid
        .uy
        .iter()
        .map(|&u| axis_gain(config.n1, config.spacing, lam, uy, u, user.range))
        .collect::<Result<Vec<_>>>()?;
    let fz = grid
        .uz
        .iter()
        .map(|&u| axis_gain(config.n2, config.spacing, lam, uz, u, user.range))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(fy.len() * fz.len());
    for (i, a) in fy.iter().enumerate() {
        for (j, b) in fz.iter().enumerate() {
            out.push(if grid.is_visible(i, j) { a * b } else { 0.0 });
        }
    }
    Ok(out)
}

/// EDoF₁ = tr²(R)/‖R‖²_F with R = H^H H.
pub fn edof1(h: &DMatrix<Complex64>) -> Result<f64> {
    let s = nonzero_singular_values(h)?;
    let s2: f64 = s.iter().map(|x| x * x).sum();
    let s4: f64 = s.iter().map(|x| x.powi(4)).sum();
    Ok(s2 * s2 / s4)
}

/// EDoF₂ = D_t D_r / (λ r).
pub fn edof2(d_t: f64, d_r: f64, wavelength: f64, range: f64) -> Result<f64> {
    if !(d_t > 0.0 && d_r > 0.0 && wavelength > 0.0 && range > 0.0) {
        return Err(domain("edof2 inputs must be positive"));
    }
    Ok(d_t * d_r / (wavelength * range))
}

/// Settings for EDoF₃ counting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountSettings {
    pub oversample: usize,
    pub threshold: f64,
}

impl Default for CountSettings {
    fn default() -> Self {
        Self {
            oversample: 4,
            threshold: 0.5,
        }
    }
}

/// EDoF₃: visible grid points whose peak-normalized f̃ is at least the
/// threshold, divided by the oversampling per oversampled axis, rounded and
/// floored at one.
pub fn edof3(config: &ArrayConfig, user: &PolarPoint, settings: CountSettings) -> Result<f64> {
    let grid = dft_grid_oversampled(config, settings.oversample);
    let map = fresnel_gain_map(config, &grid, user)?;
    let peak = map.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(domain("Fresnel gain map is empty"));
    }
    let count = map
        .iter()
        .filter(|g| **g >= settings.threshold * peak)
        .count();
    let k = settings.oversample.max(1);
    let axes = (config.n1 > 1) as u32 + (config.n2 > 1) as u32;
    let norm = k.pow(axes) as f64;
    Ok((count as f64 / norm).round().max(1.0))
}

/// EDoF₄: number of singular values above half of the largest.
pub fn edof4(h: &DMatrix<Complex64>) -> Result<f64> {
    let s = nonzero_singular_values(h)?;
    let top = s.iter().cloned().fold(0.0, f64::max);
    Ok(s.iter().filter(|x| **x / top > 0.5).count() as f64)
}

/// EDoF₅ = exp(−Σ p log p), p = σ / Σσ.
pub fn edof5(h: &DMatrix<Complex64>) -> Result<f64> {
    let s = nonzero_singular_values(h)?;
    let total: f64 = s.iter().sum();
    let ent: f64 = s
        .iter()
        .map(|x| x / total)
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(ent.exp())
}

fn nonzero_singular_values(h: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    if h.is_empty() || h.iter().all(|x| x.norm_sqr() == 0.0) {
        return Err(domain("channel matrix is zero"));
    }
    let sv = h.clone().singular_values();
    Ok(sv.iter().cloned().collect())
}

/// Inputs for the EDoF dispatcher.
pub enum EdofInput<'a> {
    Channel(&'a DMatrix<Complex64>),
    Apertures {
        d_t: f64,
        d_r: f64,
        wavelength: f64,
        range: f64,
    },
    Grid {
        config: &'a ArrayConfig,
        user: &'a PolarPoint,
        settings: CountSettings,
    },
}

pub fn edof(method: u8, input: EdofInput) -> Result<f64> {
    match (method, input) {
        (1, EdofInput::Channel(h)) => edof1(h),
        (4, EdofInput::Channel(h)) => edof4(h),
        (5, EdofInput::Channel(h)) => edof5(h),
        (
            2,
            EdofInput::Apertures {
                d_t,
                d_r,
                wavelength,
                range,
            },
        ) => edof2(d_t, d_r, wavelength, range),
        (
            3,
            EdofInput::Grid {
                config,
                user,
                settings,
            },
        ) => edof3(config, user, settings),
        (m, _) => Err(domain(format!("method {m} does not accept these inputs"))),
    }
}

/// MIMO Rayleigh distances (r₁, r₂, r₃) = (D_tD_r/λ, 2(D_t+D_r)²/λ, 4D_tD_r/λ).
pub fn mimo_rayleigh(d_t: f64, d_r: f64, wavelength: f64) -> (f64, f64, f64) {
    (
        d_t * d_r / wavelength,
        2.0 * (d_t + d_r).powi(2) / wavelength,
        4.0 * d_t * d_r / wavelength,
    )
}

/// r̂ = D_tD_r / (λ·EDoF₃).
pub fn rescaled_distance(d_t: f64, d_r: f64, wavelength: f64, edof3: f64) -> Result<f64> {
    if !(edof3 >= 1.0) {
        return Err(domain("edof3 must be >= 1"));
    }
    Ok(d_t * d_r / (wavelength * edof3))
}

/// LoS channel between parallel broadside-facing arrays on a common axis,
/// entry (m, n) = exp(−jν·dist(rx_m, tx_n)) / √(N_t N_r).
pub fn los_mimo_channel(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    separation: f64,
) -> Result<DMatrix<Complex64>> {
    if !(separation > 0.0) {
        return Err(domain("arrays overlap: separation must be > 0"));
    }
    let nu = 2.0 * PI / tx.wavelength();
    let pt = tx.positions();
    let pr = rx.positions();
    let scale = 1.0 / ((pt.len() * pr.len()) as f64).sqrt();
    let common = Complex64::from_polar(1.0, -(nu * separation).rem_euclid(2.0 * PI));
    Ok(DMatrix::from_fn(pr.len(), pt.len(), |m, n| {
        let dy = pr[m].0 - pt[n].0;
        let dz = pr[m].1 - pt[n].1;
        let q = dy * dy + dz * dz;
        let excess = q / ((separation * separation + q).sqrt() + separation);
        common * Complex64::from_polar(scale, -nu * excess)
    }))
}

/// Transmit-side EDoF₃ mapped to a link distance through r̂: the value at
/// the smallest boresight range whose rescaled distance reaches `separation`.
pub fn mimo_edof3(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    separation: f64,
    settings: CountSettings,
) -> Result<f64> {
    let gt = tx.derive();
    let gr = rx.derive();
    let lam = gt.wavelength;
    let e_at = |r: f64| edof3(tx, &PolarPoint::boresight(r), settings);
    let r_hat = |e: f64| rescaled_distance(gt.aperture, gr.aperture, lam, e);
    let mut lo = gt.min_range;
    let e_lo = e_at(lo)?;
    if r_hat(e_lo)? >= separation {
        return Ok(e_lo);
    }
    let mut hi = 10.0 * gt.rayleigh;
    let mut e_hi = e_at(hi)?;
    if r_hat(e_hi)? < separation {
        return Ok(e_hi);
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        let e = e_at(mid)?;
        if r_hat(e)? >= separation {
            hi = mid;
            e_hi = e;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-9 {
            break;
        }
    }
    Ok(e_hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdofReport {
    pub distance_m: f64,
    pub edof1: f64,
    pub edof2: f64,
    pub edof3: f64,
    pub edof4: f64,
    pub edof5: f64,
    pub oversample: usize,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

pub fn edof_report(
    tx: &ArrayConfig,
    rx: &ArrayConfig,
    separation: f64,
    settings: CountSettings,
) -> Result<EdofReport> {
    let gt = tx.derive();
    let gr = rx.derive();
    let h = los_mimo_channel(tx, rx, separation)?;
    let (r1, r2, r3) = mimo_rayleigh(gt.aperture, gr.aperture, gt.wavelength);
    Ok(EdofReport {
        distance_m: separation,
        edof1: edof1(&h)?,
        edof2: edof2(gt.aperture, gr.aperture, gt.wavelength, separation)?,
        edof3: mimo_edof3(tx, rx, separation, settings)?,
        edof4: edof4(&h)?,
        edof5: edof5(&h)?,
        oversample: settings.oversample,
        r1,
        r2,
        r3,
    })
}

/// C ≈ EDoF·log₂(1 + ρ/EDoF²).
pub fn capacity_approx(edof: f64, rho: f64) -> Result<f64> {
    if !(edof >= 1.0) || !(rho >= 0.0) {
        return Err(domain("capacity needs edof >= 1 and rho >= 0"));
    }
    Ok(edof * (1.0 + rho / (edof * edof)).log2())
}
