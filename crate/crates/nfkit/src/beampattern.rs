//! Axial and lateral pattern cuts, tapering windows and sidelobe metrics.

use crate::error::{domain, Error, Result};
use crate::geometry::{element_indices, ArrayConfig, PolarPoint};
use crate::steering::{nearfield_response, ResponseMode};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Uniform,
    Hamming,
    Modified,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub weights: Vec<f64>,
    pub kind: WindowKind,
}

impl Window {
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0; n],
            kind: WindowKind::Uniform,
        }
    }

    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(domain("window weights must be finite and non-negative"));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(domain("window weights are all zero"));
        }
        Ok(Self {
            weights,
            kind: WindowKind::Custom,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// w[n] = 0.54 − 0.46 cos(2πn/(N−1)).
pub fn hamming_window(n_elems: usize) -> Result<Window> {
    if n_elems < 2 {
        return Err(domain("hamming window needs at least 2 elements"));
    }
    let m = (n_elems - 1) as f64;
    Ok(Window {
        weights: (0..n_elems)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / m).cos())
            .collect(),
        kind: WindowKind::Hamming,
    })
}

/// g(n) = |n|·f(n²) over the centred index range, with n² mapped affinely
/// onto f's index domain and linearly interpolated; peak renormalized to 1.
pub fn modified_window(f: &Window) -> Window {
    let n = f.len();
    let half = (n as f64 / 2.0).max(1.0);
    let top = (n.max(1) - 1) as f64;
    let sample = |t: f64| -> f64 {
        if n == 1 {
            return f.weights[0];
        }
        let t = t.clamp(0.0, top);
        let i = (t.floor() as usize).min(n - 2);
        let frac = t - i as f64;
        f.weights[i] * (1.0 - frac) + f.weights[i + 1] * frac
    };
    let mut g: Vec<f64> = element_indices(n)
        .map(|k| {
            let k = k as f64;
            k.abs() * sample(k * k / (half * half) * top)
        })
        .collect();
    let peak = g.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        g.iter_mut().for_each(|x| *x /= peak);
    }
    Window {
        weights: g,
        kind: WindowKind::Modified,
    }
}

/// Per-axis tapers for a URA; `None` means uniform.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AxisWindows {
    pub y: Option<Window>,
    pub z: Option<Window>,
}

impl AxisWindows {
    pub fn both(config: &ArrayConfig, make: impl Fn(usize) -> Result<Window>) -> Result<Self> {
        let axis = |n: usize| if n > 1 { make(n).map(Some) } else { Ok(None) };
        Ok(Self {
            y: axis(config.n1)?,
            z: axis(config.n2)?,
        })
    }

    /// Element weights, row-major over (n1, n2).
    pub fn element_weights(&self, config: &ArrayConfig) -> Result<Vec<f64>> {
        let wy = axis_weights(self.y.as_ref(), config.n1)?;
        let wz = axis_weights(self.z.as_ref(), config.n2)?;
        let w: Vec<f64> = wy
            .iter()
            .flat_map(|a| wz.iter().map(move |b| a * b))
            .collect();
        if w.iter().all(|x| *x == 0.0) {
            return Err(domain("window is all zeros"));
        }
        Ok(w)
    }

    pub fn is_uniform(&self) -> bool {
        self.y.is_none() && self.z.is_none()
    }
}

fn axis_weights(w: Option<&Window>, n: usize) -> Result<Vec<f64>> {
    match w {
        None => Ok(vec![1.0; n]),
        Some(w) if w.len() == n => Ok(w.weights.clone()),
        Some(w) => Err(domain(format!(
            "window length {} does not match axis size {n}",
            w.len()
        ))),
    }
}

/// Applies element weights to `v` and renormalizes to unit norm.
pub fn apply_weights(v: &mut DVector<Complex64>, weights: &[f64]) -> Result<()> {
    for (x, w) in v.iter_mut().zip(weights) {
        *x *= *w;
    }
    let n = v.norm();
    if n == 0.0 {
        return Err(domain("window zeroes the vector"));
    }
    *v /= Complex64::new(n, 0.0);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutAxis {
    Axial,
    LateralAzimuth,
    LateralElevation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternCut {
    pub axis: CutAxis,
    pub coords: Vec<f64>,
    pub gain_db: Vec<f64>,
    pub focal: PolarPoint,
}

/// Pattern of the windowed focusing beamformer along one cut. `span` is in
/// metres for axial cuts (log sampled) and radians for lateral cuts.
pub fn pattern_cut(
    config: &ArrayConfig,
    focal: &PolarPoint,
    axis: CutAxis,
    windows: &AxisWindows,
    span: (f64, f64),
    samples: usize,
) -> Result<PatternCut> {
    if samples < 16 {
        return Err(domain("pattern cut needs at least 16 samples"));
    }
    let (lo, hi) = span;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(domain("span must be an increasing finite interval"));
    }
    if axis == CutAxis::Axial && !(lo > 0.0) {
        return Err(domain("axial span must be positive"));
    }
    let mode = ResponseMode::SecondOrder;
    let mut w = nearfield_response(config, focal, mode)?.values;
    apply_weights(&mut w, &windows.element_weights(config)?)?;
    let coords: Vec<f64> = (0..samples)
        .map(|i| {
            let t = i as f64 / (samples - 1) as f64;
            match axis {
                CutAxis::Axial => lo * (hi / lo).powf(t),
                _ => lo + (hi - lo) * t,
            }
        })
        .collect();
    let mut gain = Vec::with_capacity(samples);
    for &c in &coords {
        let p = match axis {
            CutAxis::Axial => focal.with_range(c),
            CutAxis::LateralAzimuth => PolarPoint {
                azimuth: c,
                ..*focal
            },
            CutAxis::LateralElevation => PolarPoint {
                elevation: c,
                ..*focal
            },
        };
        let b = nearfield_response(config, &p, mode)?;
        gain.push(w.dotc(&b.values).norm_sqr());
    }
    let peak = gain.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(domain("pattern is identically zero"));
    }
    let gain_db = gain
        .iter()
        .map(|g| 10.0 * (g / peak).max(1e-30).log10())
        .collect();
    Ok(PatternCut {
        axis,
        coords,
        gain_db,
        focal: *focal,
    })
}

/// Highest sidelobe outside the mainlobe, (level dB, coordinate).
pub fn peak_sidelobe(cut: &PatternCut) -> Result<(f64, f64)> {
    peak_sidelobe_of(&cut.coords, &cut.gain_db)
}

/// The mainlobe spans from the peak down to the first local minimum on each
/// side. A side that descends monotonically to the edge of the cut and ends
/// in a flat tail (< 0.1 dB over its last 5 % of samples) contributes its edge
/// level as a floor sidelobe.
pub fn peak_sidelobe_of(coords: &[f64], gain_db: &[f64]) -> Result<(f64, f64)> {
    let n = gain_db.len();
    if n < 3 || coords.len() != n {
        return Err(Error::NotFound("cut too short for sidelobe search".into()));
    }
    let k = argmax(gain_db);
    let mut l = k;
    while l > 0 && gain_db[l - 1] < gain_db[l] {
        l -= 1;
    }
    let mut r = k;
    while r + 1 < n && gain_db[r + 1] < gain_db[r] {
        r += 1;
    }
    let mut best: Option<(f64, f64)> = None;
    let mut offer = |lvl: f64, c: f64| {
        if best.map_or(true, |(b, _)| lvl > b) {
            best = Some((lvl, c));
        }
    };
    for i in 1..n - 1 {
        if (i < l || i > r) && gain_db[i] > gain_db[i - 1] && gain_db[i] > gain_db[i + 1] {
            offer(gain_db[i], coords[i]);
        }
    }
    let tail = (n / 20).max(2);
    if l == 0 && k > tail && (gain_db[tail] - gain_db[0]).abs() < 0.1 {
        offer(gain_db[0], coords[0]);
    }
    if r == n - 1 && n - 1 - k > tail && (gain_db[n - 1 - tail] - gain_db[n - 1]).abs() < 0.1 {
        offer(gain_db[n - 1], coords[n - 1]);
    }
    best.ok_or_else(|| Error::NotFound("no sidelobe outside the mainlobe".into()))
}

/// Width of the contiguous region around the peak within 3 dB.
pub fn beamwidth_3db(cut: &PatternCut) -> f64 {
    let g = &cut.gain_db;
    let k = argmax(g);
    let mut l = k;
    while l > 0 && g[l - 1] >= -3.0 {
        l -= 1;
    }
    let mut r = k;
    while r + 1 < g.len() && g[r + 1] >= -3.0 {
        r += 1;
    }
    cut.coords[r] - cut.coords[l]
}

fn argmax(v: &[f64]) -> usize {
    let mut k = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[k] {
            k = i;
        }
    }
    k
}
