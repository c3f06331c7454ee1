//! Array description, derived constants and direction helpers.

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Uniform rectangular array in the y-z plane: `n1` elements along y, `n2` along z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub n1: usize,
    pub n2: usize,
    pub spacing: f64,
    pub carrier_hz: f64,
}

impl ArrayConfig {
    /// Half-wavelength spaced array.
    pub fn new(n1: usize, n2: usize, carrier_hz: f64) -> Self {
        Self {
            n1,
            n2,
            spacing: 0.5 * C0 / carrier_hz,
            carrier_hz,
        }
    }

    pub fn with_spacing(mut self, spacing: f64) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(domain("element counts must be >= 1"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(domain("spacing must be > 0"));
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(domain("carrier frequency must be > 0"));
        }
        Ok(())
    }

    pub fn n_elements(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn wavelength(&self) -> f64 {
        C0 / self.carrier_hz
    }

    pub fn is_ula(&self) -> bool {
        self.n1 == 1 || self.n2 == 1
    }

    pub fn derive(&self) -> DerivedGeometry {
        let wavelength = self.wavelength();
        // A single row or column spans N·d; the diagonal form would add a
        // phantom second axis of one element.
        let aperture = if self.is_ula() {
            self.spacing * self.n1.max(self.n2) as f64
        } else {
            self.spacing * ((self.n1 * self.n1 + self.n2 * self.n2) as f64).sqrt()
        };
        DerivedGeometry {
            config: *self,
            wavelength,
            wavenumber: 2.0 * PI / wavelength,
            aperture,
            aspect_ratio: self.n1 as f64 / self.n2 as f64,
            rayleigh: 2.0 * aperture * aperture / wavelength,
            min_range: 2.0 * aperture,
        }
    }

    /// Element positions (y, z) in metres, row-major over (n1, n2).
    pub fn positions(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.n_elements());
        for a in element_indices(self.n1) {
            for b in element_indices(self.n2) {
                out.push((a as f64 * self.spacing, b as f64 * self.spacing));
            }
        }
        out
    }
}

/// Element index range: -floor(N/2) ..= N - floor(N/2) - 1.
pub fn element_indices(n: usize) -> std::ops::RangeInclusive<i64> {
    let lo = -((n / 2) as i64);
    lo..=(n as i64 + lo - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedGeometry {
    pub config: ArrayConfig,
    pub wavelength: f64,
    pub wavenumber: f64,
    pub aperture: f64,
    pub aspect_ratio: f64,
    pub rayleigh: f64,
    pub min_range: f64,
}

/// Azimuth φ, elevation θ (radians) and range r (metres).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub azimuth: f64,
    pub elevation: f64,
    pub range: f64,
}

impl PolarPoint {
    pub fn new(azimuth: f64, elevation: f64, range: f64) -> Self {
        Self {
            azimuth,
            elevation,
            range,
        }
    }

    pub fn boresight(range: f64) -> Self {
        Self::new(0.0, PI / 2.0, range)
    }

    pub fn with_range(self, range: f64) -> Self {
        Self { range, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0) {
            return Err(domain(format!("range must be > 0, got {}", self.range)));
        }
        if !(self.azimuth.abs() <= PI / 2.0 + 1e-12)
            || !(-1e-12..=PI + 1e-12).contains(&self.elevation)
        {
            return Err(domain(
                "angles outside azimuth [-pi/2, pi/2] / elevation [0, pi]",
            ));
        }
        Ok(())
    }

    pub fn cosines(&self) -> (f64, f64, f64) {
        directional_cosines(self.azimuth, self.elevation)
    }

    /// Point from directional cosines (u_y, u_z) with u_x ≥ 0.
    pub fn from_cosines(uy: f64, uz: f64, range: f64) -> Self {
        let elevation = uz.clamp(-1.0, 1.0).acos();
        let s = elevation.sin();
        let azimuth = if s > 0.0 {
            (uy / s).clamp(-1.0, 1.0).asin()
        } else {
            0.0
        };
        Self::new(azimuth, elevation, range)
    }
}

pub fn directional_cosines(azimuth: f64, elevation: f64) -> (f64, f64, f64) {
    let (st, ct) = elevation.sin_cos();
    let (sp, cp) = azimuth.sin_cos();
    (st * cp, st * sp, ct)
}

/// (β₁, β₂) = (1 − u_y², 1 − u_z²).
pub fn beta_factors(azimuth: f64, elevation: f64) -> (f64, f64) {
    let (_, uy, uz) = directional_cosines(azimuth, elevation);
    (
        (1.0 - uy * uy).clamp(0.0, 1.0),
        (1.0 - uz * uz).clamp(0.0, 1.0),
    )
}
