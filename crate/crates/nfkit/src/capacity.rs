//! Multiuser spectral efficiency with codebook analog precoding and
//! zero-forcing, and MIMO capacity versus distance.

use crate::beamfocus::ebrd;
use crate::beampattern::AxisWindows;
use crate::codebook::{best_match, build_codebook, Codebook, Scheme};
use crate::dof::{capacity_approx, edof5, los_mimo_channel};
use crate::error::{domain, Result};
use crate::geometry::{ArrayConfig, PolarPoint};
use crate::steering::{nearfield_response, ResponseMode};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Boresight users with range uniform in [2D, EBRD].
    EbrdRegion,
    /// [EBRD, r_RD].
    BeyondEbrd,
    /// [r_RD, 100·r_RD].
    FarField,
    Interval(f64, f64),
}

impl Placement {
    pub fn name(&self) -> String {
        match self {
            Placement::EbrdRegion => "ebrd_region".into(),
            Placement::BeyondEbrd => "beyond_ebrd".into(),
            Placement::FarField => "far_field".into(),
            Placement::Interval(a, b) => format!("interval_{a}_{b}"),
        }
    }

    pub fn bounds(&self, config: &ArrayConfig) -> (f64, f64) {
        let g = config.derive();
        let e = ebrd(&g, 0.0, std::f64::consts::FRAC_PI_2);
        match *self {
            Placement::EbrdRegion => (g.min_range, e.max(g.min_range)),
            Placement::BeyondEbrd => (e.max(g.min_range), g.rayleigh),
            Placement::FarField => (g.rayleigh, 100.0 * g.rayleigh),
            Placement::Interval(a, b) => (a, b),
        }
    }
}

/// Analog codebook used by the SE experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeCodebook {
    /// bf near-field codewords plus the far-field DFT ring.
    Polar,
    Dft,
}

impl SeCodebook {
    pub fn name(&self) -> &'static str {
        match self {
            SeCodebook::Polar => "polar",
            SeCodebook::Dft => "dft",
        }
    }

    pub fn build(&self, config: &ArrayConfig) -> Result<Codebook> {
        let w = AxisWindows::default();
        let dft = build_codebook(config, Scheme::Dft, &w)?;
        match self {
            SeCodebook::Dft => Ok(dft),
            SeCodebook::Polar => Ok(build_codebook(config, Scheme::Bf, &w)?.concat(&dft)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeScenario {
    pub config: ArrayConfig,
    pub n_users: usize,
    pub placement: Placement,
    pub codebook: SeCodebook,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// Per user, the codeword with the largest |h^H φ|². Second value flags duplicates.
pub fn analog_precoder(
    cb: &Codebook,
    users: &[DVector<Complex64>],
) -> Result<(DMatrix<Complex64>, bool)> {
    if cb.size() == 0 || users.is_empty() {
        return Err(domain("need a codebook and at least one user"));
    }
    let picks: Vec<usize> = users.iter().map(|h| best_match(cb, h).0).collect();
    let mut sorted = picks.clone();
    sorted.sort_unstable();
    sorted.dedup();
    let dup = sorted.len() != picks.len();
    let cols: Vec<_> = picks
        .iter()
        .map(|&i| cb.matrix.column(i).into_owned())
        .collect();
    Ok((DMatrix::from_columns(&cols), dup))
}

/// Zero-forcing on H_eff (rows h_m^H W), columns scaled so ‖W f_m‖ = 1.
/// Second value flags ridge regularization (condition number ≥ 1e6).
pub fn zf_precoder(
    h_eff: &DMatrix<Complex64>,
    w: &DMatrix<Complex64>,
) -> Result<(DMatrix<Complex64>, bool)> {
    let m = h_eff.nrows();
    if h_eff.ncols() != m || w.ncols() != m {
        return Err(domain("effective channel must be square and match W"));
    }
    let sv = h_eff.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let regularized = !(smin > 0.0 && smax / smin < 1e6);
    let mut f = if regularized {
        let eye = DMatrix::<Complex64>::identity(m, m);
        let g =
            h_eff * h_eff.adjoint() + eye * Complex64::new(1e-10 * smax * smax.max(1e-300), 0.0);
        let inv = g
            .try_inverse()
            .ok_or_else(|| domain("regularized inverse failed"))?;
        h_eff.adjoint() * inv
    } else {
        h_eff
            .clone()
            .try_inverse()
            .ok_or_else(|| domain("effective channel not invertible"))?
    };
    for j in 0..m {
        let n = (w * f.column(j)).norm();
        if n > 0.0 {
            f.column_mut(j).unscale_mut(n);
        }
    }
    Ok((f, regularized))
}

/// Σ_m log₂(1 + SINR_m) with equal power P/M and unit noise.
pub fn sum_se(
    users: &[DVector<Complex64>],
    w: &DMatrix<Complex64>,
    f: &DMatrix<Complex64>,
    snr_db: f64,
) -> f64 {
    let m = users.len();
    let p = 10f64.powf(snr_db / 10.0) / m as f64;
    let wf = w * f;
    let mut total = 0.0;
    for (i, h) in users.iter().enumerate() {
        let g: Vec<f64> = (0..m).map(|l| h.dotc(&wf.column(l)).norm_sqr()).collect();
        let sig = p * g[i];
        let int: f64 = p * (g.iter().sum::<f64>() - g[i]);
        total += (1.0 + sig / (1.0 + int)).log2();
    }
    total
}

/// SE of one user set for every SNR point.
pub fn se_for_users(
    cb: &Codebook,
    users: &[DVector<Complex64>],
    snr_db: &[f64],
) -> Result<Vec<f64>> {
    let (w, _) = analog_precoder(cb, users)?;
    let h_eff = DMatrix::from_fn(users.len(), w.ncols(), |i, j| users[i].dotc(&w.column(j)));
    let (f, _) = zf_precoder(&h_eff, &w)?;
    Ok(snr_db.iter().map(|s| sum_se(users, &w, &f, *s)).collect())
}

/// Boresight users, unit-norm exact responses, ranges uniform in the placement.
pub fn draw_users<R: Rng>(
    config: &ArrayConfig,
    placement: Placement,
    n: usize,
    rng: &mut R,
) -> Result<Vec<DVector<Complex64>>> {
    let (lo, hi) = placement.bounds(config);
    if !(lo > 0.0 && hi >= lo) {
        return Err(domain("placement interval is empty"));
    }
    (0..n)
        .map(|_| {
            let r = if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            };
            nearfield_response(config, &PolarPoint::boresight(r), ResponseMode::Exact)
                .map(|v| v.values)
        })
        .collect()
}

/// Monte Carlo mean sum-SE per SNR point.
pub fn multiuser_se(s: &SeScenario) -> Result<Vec<f64>> {
    let cb = s.codebook.build(&s.config)?;
    multiuser_se_with(s, &cb)
}

pub fn multiuser_se_with(s: &SeScenario, cb: &Codebook) -> Result<Vec<f64>> {
    if s.trials == 0 || s.n_users == 0 {
        return Err(domain("trials and users must be >= 1"));
    }
    let mut acc = vec![0.0; s.snr_db.len()];
    for t in 0..s.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        rng.set_stream(t as u64);
        let users = draw_users(&s.config, s.placement, s.n_users, &mut rng)?;
        for (a, v) in acc.iter_mut().zip(se_for_users(cb, &users, &s.snr_db)?) {
            *a += v;
        }
    }
    Ok(acc.into_iter().map(|a| a / s.trials as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityRow {
    pub eta: f64,
    pub distance_m: f64,
    pub capacity_bps_hz: f64,
    pub edof5: f64,
    pub r1: f64,
}

/// C ≈ EDoF₅·log₂(1 + ρ/EDoF₅²) with ρ = SNR·N_t·N_r.
pub fn mimo_capacity_curve(
    txs: &[ArrayConfig],
    rx: &ArrayConfig,
    distances: &[f64],
    snr_db: f64,
) -> Result<Vec<CapacityRow>> {
    let mut out = Vec::new();
    for tx in txs {
        let gt = tx.derive();
        let gr = rx.derive();
        let r1 = gt.aperture * gr.aperture / gt.wavelength;
        let rho = 10f64.powf(snr_db / 10.0) * (tx.n_elements() * rx.n_elements()) as f64;
        for &d in distances {
            let h = los_mimo_channel(tx, rx, d)?;
            let e = edof5(&h)?.max(1.0);
            out.push(CapacityRow {
                eta: gt.aspect_ratio,
                distance_m: d,
                capacity_bps_hz: capacity_approx(e, rho)?,
                edof5: e,
                r1,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zf_diagonal_and_scalar() {
        let w = DMatrix::<Complex64>::identity(3, 3);
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.5, 0.5),
        ]));
        let (f, reg) = zf_precoder(&h, &w).unwrap();
        assert!(!reg);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(f[(i, j)].norm() < 1e-15);
                }
            }
        }
        let h1 = DMatrix::from_element(1, 1, Complex64::new(0.0, 3.0));
        let w1 = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let (f1, _) = zf_precoder(&h1, &w1).unwrap();
        assert!(((h1 * f1)[(0, 0)].im).abs() < 1e-15);
    }

    #[test]
    fn single_user_se() {
        let c = ArrayConfig::new(16, 1, 28e9);
        let cb = SeCodebook::Dft.build(&c).unwrap();
        let u = vec![cb.matrix.column(3).into_owned()];
        let se = se_for_users(&cb, &u, &[10.0]).unwrap()[0];
        assert!((se - 11f64.log2()).abs() < 1e-9);
    }
}
