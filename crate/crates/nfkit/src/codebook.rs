//! Polar-domain codebooks: beamdepth-spaced (bf), uniform-inverse-range
//! baselines (p, eb) and far-field DFT, with coherence and size metrics.

use crate::beamfocus::ebrd;
use crate::beampattern::{apply_weights, AxisWindows, WindowKind};
use crate::dof::dft_grid;
use crate::error::{domain, Error, Result};
use crate::geometry::{beta_factors, element_indices, ArrayConfig, DerivedGeometry, PolarPoint};
use crate::steering::{farfield_from_cosines, nearfield_response, ResponseMode};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Bf,
    P,
    Eb,
    Dft,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Bf => "bf",
            Scheme::P => "p",
            Scheme::Eb => "eb",
            Scheme::Dft => "dft",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bf" => Ok(Scheme::Bf),
            "p" => Ok(Scheme::P),
            "eb" => Ok(Scheme::Eb),
            "dft" => Ok(Scheme::Dft),
            _ => Err(domain(format!("unknown scheme `{s}`"))),
        }
    }
}

/// One direction of the shared angular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSample {
    pub n1: i64,
    pub n2: i64,
    pub uy: f64,
    pub uz: f64,
}

impl AngleSample {
    pub fn point(&self, range: f64) -> PolarPoint {
        PolarPoint::from_cosines(self.uy, self.uz, range)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub matrix: DMatrix<Complex64>,
    /// Range is +inf for far-field codewords.
    pub columns_meta: Vec<PolarPoint>,
    pub angle_index: Vec<(i64, i64)>,
    pub scheme: Scheme,
    pub window: WindowKind,
}

impl Codebook {
    pub fn size(&self) -> usize {
        self.matrix.ncols()
    }

    /// Number of codewords per angle, in grid order.
    pub fn per_angle_counts(&self) -> Vec<((i64, i64), usize)> {
        let mut out: Vec<((i64, i64), usize)> = Vec::new();
        for a in &self.angle_index {
            match out.last_mut() {
                Some((b, c)) if b == a => *c += 1,
                _ => out.push((*a, 1)),
            }
        }
        out
    }

    /// Column-wise concatenation; metadata kept, scheme of `self`.
    pub fn concat(&self, other: &Codebook) -> Codebook {
        let (n, a, b) = (self.matrix.nrows(), self.size(), other.size());
        let mut m = DMatrix::zeros(n, a + b);
        m.columns_mut(0, a).copy_from(&self.matrix);
        m.columns_mut(a, b).copy_from(&other.matrix);
        let mut meta = self.columns_meta.clone();
        meta.extend_from_slice(&other.columns_meta);
        let mut idx = self.angle_index.clone();
        idx.extend_from_slice(&other.angle_index);
        Codebook {
            matrix: m,
            columns_meta: meta,
            angle_index: idx,
            scheme: self.scheme,
            window: self.window,
        }
    }
}

/// Directions of the orthogonal DFT grid inside the visible disk, row-major
/// over (n1, n2). `strict` drops points on the unit circle.
pub fn angle_grid(config: &ArrayConfig, strict: bool) -> Vec<AngleSample> {
    let grid = dft_grid(config);
    let i1: Vec<i64> = element_indices(grid.uy.len()).collect();
    let i2: Vec<i64> = element_indices(grid.uz.len()).collect();
    let mut out = Vec::new();
    for (i, &uy) in grid.uy.iter().enumerate() {
        for (j, &uz) in grid.uz.iter().enumerate() {
            let rho = uy * uy + uz * uz;
            let keep = if strict {
                rho < 1.0 - 1e-12
            } else {
                grid.is_visible(i, j)
            };
            if keep {
                out.push(AngleSample {
                    n1: i1[i],
                    n2: i2[j],
                    uy,
                    uz,
                });
            }
        }
    }
    out
}

fn endfire(geom: &DerivedGeometry, azimuth: f64, elevation: f64) -> bool {
    let (b1, b2) = beta_factors(azimuth, elevation);
    let cfg = &geom.config;
    if cfg.is_ula() {
        (if cfg.n2 == 1 { b1 } else { b2 }) <= 0.0
    } else {
        b1 * b2 <= 0.0
    }
}

/// Focal ranges whose 3 dB intervals abut: start at 2D, next 1/r ← 1/r − 2/EBRD,
/// while r ≤ EBRD. A single 2D sample when EBRD ≤ 2D; empty at endfire.
pub fn range_samples(geom: &DerivedGeometry, azimuth: f64, elevation: f64) -> Vec<f64> {
    if endfire(geom, azimuth, elevation) {
        return Vec::new();
    }
    let e = ebrd(geom, azimuth, elevation);
    let mut r = geom.min_range;
    if !(e > r) {
        return vec![r];
    }
    let mut out = Vec::new();
    while r <= e {
        out.push(r);
        let inv = 1.0 / r - 2.0 / e;
        if inv <= 0.0 {
            break;
        }
        r = 1.0 / inv;
    }
    out
}

/// Baseline ranges Z/(s + offset), s = 1, 2, … while ≥ 2D, Z = max(EBRD, 2D).
pub fn baseline_ranges(
    geom: &DerivedGeometry,
    azimuth: f64,
    elevation: f64,
    offset: f64,
) -> Vec<f64> {
    if endfire(geom, azimuth, elevation) {
        return Vec::new();
    }
    let z = ebrd(geom, azimuth, elevation).max(geom.min_range);
    let floor = geom.min_range * (1.0 - 1e-12);
    let mut out: Vec<f64> = (1..)
        .map(|s| z / (s as f64 + offset))
        .take_while(|r| *r >= floor)
        .collect();
    if out.is_empty() {
        out.push(z);
    }
    out
}

fn ranges_for(scheme: Scheme, geom: &DerivedGeometry, a: &AngleSample) -> Vec<f64> {
    let p = a.point(1.0);
    match scheme {
        Scheme::Bf => range_samples(geom, p.azimuth, p.elevation),
        Scheme::P => baseline_ranges(geom, p.azimuth, p.elevation, 0.0),
        Scheme::Eb => {
            let off = if (a.n1 + a.n2).rem_euclid(2) == 1 {
                0.5
            } else {
                0.0
            };
            baseline_ranges(geom, p.azimuth, p.elevation, off)
        }
        Scheme::Dft => vec![f64::INFINITY],
    }
}

/// Builds a codebook. Windows apply to near-field codewords only.
pub fn build_codebook(
    config: &ArrayConfig,
    scheme: Scheme,
    windows: &AxisWindows,
) -> Result<Codebook> {
    config.validate()?;
    let geom = config.derive();
    let weights = if windows.is_uniform() || scheme == Scheme::Dft {
        None
    } else {
        Some(windows.element_weights(config)?)
    };
    let window = match (&windows.y, &windows.z) {
        _ if weights.is_none() => WindowKind::Uniform,
        (Some(w), _) | (None, Some(w)) => w.kind,
        (None, None) => WindowKind::Uniform,
    };
    let angles = angle_grid(config, scheme != Scheme::Dft);
    let mut cols = Vec::new();
    let mut meta = Vec::new();
    let mut idx = Vec::new();
    for a in &angles {
        for r in ranges_for(scheme, &geom, a) {
            let p = a.point(r);
            let v = if r.is_infinite() {
                farfield_from_cosines(config, a.uy, a.uz, p).values
            } else {
                let mut v = nearfield_response(config, &p, ResponseMode::SecondOrder)?.values;
                if let Some(w) = &weights {
                    apply_weights(&mut v, w)?;
                }
                v
            };
            cols.push(v);
            meta.push(p);
            idx.push((a.n1, a.n2));
        }
    }
    if cols.is_empty() {
        return Err(domain("codebook has no codewords"));
    }
    Ok(Codebook {
        matrix: DMatrix::from_columns(&cols),
        columns_meta: meta,
        angle_index: idx,
        scheme,
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coherence {
    pub value: f64,
    pub pairs: u64,
    pub exhaustive: bool,
}

pub const EXHAUSTIVE_LIMIT: usize = 5000;

/// μ = max_{p≠q} |φ_p^H φ_q|².
pub fn column_coherence(cb: &Codebook) -> Result<f64> {
    column_coherence_detail(cb).map(|c| c.value)
}

pub fn column_coherence_detail(cb: &Codebook) -> Result<Coherence> {
    let s = cb.size();
    if s < 2 {
        return Err(domain("coherence needs at least two columns"));
    }
    let m = &cb.matrix;
    if s <= EXHAUSTIVE_LIMIT {
        let mut best = 0.0f64;
        let block = 256;
        let mut start = 0;
        while start < s {
            let w = block.min(s - start);
            let g = m.columns(start, w).adjoint() * m;
            for i in 0..w {
                for j in 0..s {
                    if j != start + i {
                        best = best.max(g[(i, j)].norm_sqr());
                    }
                }
            }
            start += w;
        }
        return Ok(Coherence {
            value: best,
            pairs: (s * (s - 1) / 2) as u64,
            exhaustive: true,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pairs = 2_000_000u64;
    let mut best = 0.0f64;
    for _ in 0..pairs {
        let p = rng.random_range(0..s);
        let mut q = rng.random_range(0..s - 1);
        if q >= p {
            q += 1;
        }
        best = best.max(m.column(p).dotc(&m.column(q)).norm_sqr());
    }
    Ok(Coherence {
        value: best,
        pairs,
        exhaustive: false,
    })
}

/// Largest squared correlation between codewords sharing one direction.
pub fn same_angle_range_correlation(cb: &Codebook, angle: (i64, i64)) -> Result<f64> {
    let cols: Vec<usize> = (0..cb.size())
        .filter(|&i| cb.angle_index[i] == angle)
        .collect();
    if cols.len() < 2 {
        return Err(Error::NotFound(format!(
            "fewer than two ranges at angle {angle:?}"
        )));
    }
    let mut best = 0.0f64;
    for (k, &p) in cols.iter().enumerate() {
        for &q in &cols[k + 1..] {
            best = best.max(cb.matrix.column(p).dotc(&cb.matrix.column(q)).norm_sqr());
        }
    }
    Ok(best)
}

/// Best squared correlation of `v` with any codeword.
pub fn best_match(cb: &Codebook, v: &nalgebra::DVector<Complex64>) -> (usize, f64) {
    let c = cb.matrix.adjoint() * v;
    let mut best = (0, -1.0);
    for (i, x) in c.iter().enumerate() {
        let g = x.norm_sqr();
        if g > best.1 {
            best = (i, g);
        }
    }
    best
}
