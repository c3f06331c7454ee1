//! Near-field and far-field array response vectors and channel synthesis.

use crate::error::{domain, Result};
use crate::geometry::{element_indices, ArrayConfig, PolarPoint};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMode {
    Exact,
    #[default]
    SecondOrder,
    SecondOrderWithCross,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub values: DVector<Complex64>,
    pub meta: PolarPoint,
    /// `None` for far-field steering vectors.
    pub mode: Option<ResponseMode>,
}

impl SteeringVector {
    /// a^H b
    pub fn inner(&self, other: &SteeringVector) -> Complex64 {
        self.values.dotc(&other.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPath {
    pub gain: Complex64,
    pub point: PolarPoint,
    pub delay_s: f64,
}

/// r^(n1,n2) − r, computed without cancellation for large r.
fn path_difference(y: f64, z: f64, point: &PolarPoint, mode: ResponseMode) -> f64 {
    let r = point.range;
    let (_, uy, uz) = point.cosines();
    match mode {
        ResponseMode::Exact => {
            let num = y * y + z * z - 2.0 * r * (uy * y + uz * z);
            let dist = (r * r + num).max(0.0).sqrt();
            num / (dist + r)
        }
        ResponseMode::SecondOrder | ResponseMode::SecondOrderWithCross => {
            let mut d = -y * uy - z * uz
                + y * y * (1.0 - uy * uy) / (2.0 * r)
                + z * z * (1.0 - uz * uz) / (2.0 * r);
            if mode == ResponseMode::SecondOrderWithCross {
                d -= y * z * uy * uz / r;
            }
            d
        }
    }
}

pub fn element_distance(
    config: &ArrayConfig,
    n1: i64,
    n2: i64,
    point: &PolarPoint,
    mode: ResponseMode,
) -> Result<f64> {
    if !(point.range > 0.0) {
        return Err(domain(format!("range must be > 0, got {}", point.range)));
    }
    if !element_indices(config.n1).contains(&n1) || !element_indices(config.n2).contains(&n2) {
        return Err(domain(format!(
            "element index ({n1}, {n2}) outside the array"
        )));
    }
    let y = n1 as f64 * config.spacing;
    let z = n2 as f64 * config.spacing;
    Ok(point.range + path_difference(y, z, point, mode))
}

/// Entry (n1, n2) = exp(−jν(r^(n1,n2) − r)) / √N, row-major over (n1, n2).
pub fn nearfield_response(
    config: &ArrayConfig,
    point: &PolarPoint,
    mode: ResponseMode,
) -> Result<SteeringVector> {
    if !(point.range > 0.0) {
        return Err(domain(format!("range must be > 0, got {}", point.range)));
    }
    let nu = 2.0 * PI / config.wavelength();
    let scale = 1.0 / (config.n_elements() as f64).sqrt();
    let values = config
        .positions()
        .into_iter()
        .map(|(y, z)| Complex64::from_polar(scale, -nu * path_difference(y, z, point, mode)))
        .collect::<Vec<_>>();
    Ok(SteeringVector {
        values: DVector::from_vec(values),
        meta: *point,
        mode: Some(mode),
    })
}

/// Plane-wave steering vector; sign chosen to equal the large-range limit of
/// [`nearfield_response`].
pub fn farfield_steering(config: &ArrayConfig, azimuth: f64, elevation: f64) -> SteeringVector {
    let (_, uy, uz) = crate::geometry::directional_cosines(azimuth, elevation);
    farfield_from_cosines(
        config,
        uy,
        uz,
        PolarPoint::new(azimuth, elevation, f64::INFINITY),
    )
}

pub(crate) fn farfield_from_cosines(
    config: &ArrayConfig,
    uy: f64,
    uz: f64,
    meta: PolarPoint,
) -> SteeringVector {
    let nu = 2.0 * PI / config.wavelength();
    let scale = 1.0 / (config.n_elements() as f64).sqrt();
    let values = config
        .positions()
        .into_iter()
        .map(|(y, z)| Complex64::from_polar(scale, nu * (y * uy + z * uz)))
        .collect::<Vec<_>>();
    SteeringVector {
        values: DVector::from_vec(values),
        meta,
        mode: None,
    }
}

/// h = Σ_l g_l exp(−j2π f τ_l) b(point_l), second-order responses.
pub fn build_channel(
    config: &ArrayConfig,
    paths: &[ChannelPath],
    subcarrier_hz: f64,
) -> Result<DVector<Complex64>> {
    if paths.is_empty() {
        return Err(domain("channel needs at least one path"));
    }
    let mut h = DVector::zeros(config.n_elements());
    for p in paths {
        let b = nearfield_response(config, &p.point, ResponseMode::SecondOrder)?;
        let ramp = Complex64::from_polar(1.0, -2.0 * PI * subcarrier_hz * p.delay_s);
        h.axpy(p.gain * ramp, &b.values, Complex64::new(1.0, 0.0));
    }
    Ok(h)
}
