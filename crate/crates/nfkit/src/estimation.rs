//! Hybrid-combining pilot model, SOMP recovery over a codebook and NMSE sweeps.

use crate::beamfocus::ebrd;
use crate::beampattern::AxisWindows;
use crate::codebook::{build_codebook, Codebook, Scheme};
use crate::error::{domain, Result};
use crate::geometry::{ArrayConfig, PolarPoint, C0};
use crate::steering::{build_channel, ChannelPath};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotScene {
    pub config: ArrayConfig,
    pub n_rf: usize,
    pub pilot_len: usize,
    pub n_subcarriers: usize,
    pub bandwidth_hz: f64,
    pub n_users: usize,
    pub n_paths: usize,
    pub snr_db: f64,
    pub seed: u64,
}

impl PilotScene {
    /// 12×8 array, Q = 16, K = 8.
    pub fn desk() -> Self {
        Self {
            config: ArrayConfig::new(12, 8, 15e9),
            n_rf: 4,
            pilot_len: 16,
            n_subcarriers: 8,
            bandwidth_hz: 100e6,
            n_users: 4,
            n_paths: 3,
            snr_db: 10.0,
            seed: 0,
        }
    }

    /// 30×18 array at 15 GHz, Q = 64, K = 64, 100 MHz, 4 users, 3 paths.
    pub fn table1() -> Self {
        Self {
            config: ArrayConfig::new(30, 18, 15e9),
            pilot_len: 64,
            n_subcarriers: 64,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.n_rf == 0 || self.n_rf > self.config.n_elements() {
            return Err(domain("n_rf must be in 1..=N_BS"));
        }
        if self.pilot_len == 0 || self.n_subcarriers == 0 || self.n_users == 0 || self.n_paths == 0
        {
            return Err(domain(
                "pilot length, subcarriers, users and paths must be >= 1",
            ));
        }
        Ok(())
    }

    /// Baseband subcarrier offsets (k − K/2)·B/K.
    pub fn subcarriers(&self) -> Vec<f64> {
        let k = self.n_subcarriers as f64;
        (0..self.n_subcarriers)
            .map(|i| (i as f64 - 0.5 * k) * self.bandwidth_hz / k)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub h_hat: DMatrix<Complex64>,
    pub support: Vec<usize>,
    pub nmse_db: Option<f64>,
    /// Set when the least-squares step needed ridge regularization.
    pub regularized: bool,
    /// Residual Frobenius norm after each iteration.
    pub residual_norms: Vec<f64>,
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Stacked random-phase analog combiners A_q^H, (Q·N_RF)×N_BS.
pub fn random_sensing<R: Rng>(
    config: &ArrayConfig,
    n_rf: usize,
    pilot_len: usize,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let n = config.n_elements();
    let scale = 1.0 / (n as f64).sqrt();
    let mut s = DMatrix::zeros(pilot_len * n_rf, n);
    for row in 0..pilot_len * n_rf {
        for col in 0..n {
            let ph: f64 = rng.random_range(0.0..2.0 * PI);
            s[(row, col)] = Complex64::from_polar(scale, -ph);
        }
    }
    s
}

/// Observations Y = S·H + noise with per-entry noise variance equal to the
/// mean received signal power divided by 10^(snr/10). Infinite SNR is noiseless.
pub fn simulate_pilots(
    scene: &PilotScene,
    channel: &DMatrix<Complex64>,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    scene.validate()?;
    if channel.nrows() != scene.config.n_elements() {
        return Err(domain("channel rows must equal N_BS"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let sensing = random_sensing(&scene.config, scene.n_rf, scene.pilot_len, &mut rng);
    let noise = DMatrix::from_fn(sensing.nrows(), channel.ncols(), |_, _| {
        complex_normal(&mut rng)
    });
    Ok((observe(&sensing, channel, &noise, scene.snr_db), sensing))
}

fn observe(
    sensing: &DMatrix<Complex64>,
    channel: &DMatrix<Complex64>,
    unit_noise: &DMatrix<Complex64>,
    snr_db: f64,
) -> DMatrix<Complex64> {
    let clean = sensing * channel;
    if snr_db.is_infinite() && snr_db > 0.0 {
        return clean;
    }
    let power = clean.norm_squared() / clean.len() as f64;
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let rows = clean.nrows();
    let cols = clean.ncols();
    clean + unit_noise.view((0, 0), (rows, cols)) * Complex64::new(sigma, 0.0)
}

/// Simultaneous orthogonal matching pursuit over `dictionary`.
pub fn somp(
    observations: &DMatrix<Complex64>,
    sensing: &DMatrix<Complex64>,
    dictionary: &Codebook,
    sparsity: usize,
) -> Result<EstimateResult> {
    if sensing.nrows() != observations.nrows() || sensing.ncols() != dictionary.matrix.nrows() {
        return Err(domain(
            "observation, sensing and dictionary shapes do not conform",
        ));
    }
    if sparsity > dictionary.size() {
        return Err(domain("sparsity exceeds dictionary size"));
    }
    let n = dictionary.matrix.nrows();
    let k = observations.ncols();
    if sparsity == 0 {
        return Ok(EstimateResult {
            h_hat: DMatrix::zeros(n, k),
            support: Vec::new(),
            nmse_db: None,
            regularized: false,
            residual_norms: Vec::new(),
        });
    }
    let psi = sensing * &dictionary.matrix;
    let norms: Vec<f64> = psi.column_iter().map(|c| c.norm().max(1e-300)).collect();
    let mut residual = observations.clone();
    let mut support: Vec<usize> = Vec::new();
    let mut coeffs = DMatrix::zeros(0, k);
    let mut regularized = false;
    let mut residual_norms = Vec::with_capacity(sparsity);
    for _ in 0..sparsity {
        let corr = psi.adjoint() * &residual;
        let mut best = (usize::MAX, -1.0);
        for s in 0..psi.ncols() {
            if support.contains(&s) {
                continue;
            }
            let score: f64 = corr.row(s).iter().map(|c| c.norm()).sum::<f64>() / norms[s];
            if score > best.1 {
                best = (s, score);
            }
        }
        support.push(best.0);
        let a = DMatrix::from_columns(
            &support
                .iter()
                .map(|&s| psi.column(s).into_owned())
                .collect::<Vec<_>>(),
        );
        let (x, ridge) = least_squares(&a, observations);
        regularized |= ridge;
        residual = observations - &a * &x;
        residual_norms.push(residual.norm());
        coeffs = x;
    }
    let phi_s = DMatrix::from_columns(
        &support
            .iter()
            .map(|&s| dictionary.matrix.column(s).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok(EstimateResult {
        h_hat: phi_s * coeffs,
        support,
        nmse_db: None,
        regularized,
        residual_norms,
    })
}

fn least_squares(a: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> (DMatrix<Complex64>, bool) {
    let gram = a.adjoint() * a;
    let rhs = a.adjoint() * y;
    if let Some(ch) = gram.clone().cholesky() {
        let x = ch.solve(&rhs);
        if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            let cond_ok = {
                let d: Vec<f64> = gram.diagonal().iter().map(|v| v.re).collect();
                let mx = d.iter().cloned().fold(0.0, f64::max);
                let l = ch.l();
                let mn = l
                    .diagonal()
                    .iter()
                    .map(|v| v.norm_sqr())
                    .fold(f64::INFINITY, f64::min);
                mn > 1e-12 * mx
            };
            if cond_ok {
                return (x, false);
            }
        }
    }
    let m = gram.nrows();
    let scale = gram
        .diagonal()
        .iter()
        .map(|v| v.re)
        .fold(0.0, f64::max)
        .max(1e-300);
    let reg = gram + DMatrix::<Complex64>::identity(m, m) * Complex64::new(1e-10 * scale, 0.0);
    let x = reg
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .unwrap_or_else(|| DMatrix::zeros(m, y.ncols()));
    (x, true)
}

pub const NMSE_FLOOR_DB: f64 = -120.0;

/// 10·log₁₀(‖H − Ĥ‖²_F / ‖H‖²_F), floored at −120 dB.
pub fn nmse(h_true: &DMatrix<Complex64>, h_hat: &DMatrix<Complex64>) -> Result<f64> {
    if h_true.shape() != h_hat.shape() {
        return Err(domain("shape mismatch"));
    }
    let den = h_true.norm_squared();
    if den == 0.0 {
        return Err(domain("true channel is zero"));
    }
    Ok(to_db((h_true - h_hat).norm_squared() / den))
}

fn to_db(x: f64) -> f64 {
    (10.0 * x.log10()).max(NMSE_FLOOR_DB)
}

/// Scene user draw: each path independent with azimuth in
/// (−π/6, π/6), elevation in (π/3, 2π/3) and range in [2D, max(EBRD, 4D)].
pub fn draw_paths<R: Rng>(config: &ArrayConfig, n_paths: usize, rng: &mut R) -> Vec<ChannelPath> {
    let geom = config.derive();
    (0..n_paths)
        .map(|_| {
            let az = rng.random_range(-PI / 6.0..PI / 6.0);
            let el = rng.random_range(PI / 3.0..2.0 * PI / 3.0);
            let hi = ebrd(&geom, az, el).max(2.0 * geom.min_range);
            let r = rng.random_range(geom.min_range..hi);
            let loss = geom.wavelength / (4.0 * PI * r);
            ChannelPath {
                gain: complex_normal(rng) * loss,
                point: PolarPoint::new(az, el, r),
                delay_s: r / C0,
            }
        })
        .collect()
}

/// Channel matrix N_BS × K over the scene's subcarriers.
pub fn channel_matrix(scene: &PilotScene, paths: &[ChannelPath]) -> Result<DMatrix<Complex64>> {
    let cols = scene
        .subcarriers()
        .iter()
        .map(|f| build_channel(&scene.config, paths, *f))
        .collect::<Result<Vec<DVector<Complex64>>>>()?;
    Ok(DMatrix::from_columns(&cols))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Snr(Vec<f64>),
    Pilots(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseRow {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub nmse_db: f64,
    pub trials: usize,
}

/// Mean NMSE (dB of the mean linear ratio) per scheme and sweep point. All
/// schemes see the same users, combiners and unit noise in every trial; each
/// user is estimated independently.
pub fn run_nmse_sweep(
    template: &PilotScene,
    sweep: &Sweep,
    schemes: &[Scheme],
    trials: usize,
) -> Result<Vec<NmseRow>> {
    template.validate()?;
    if trials == 0 {
        return Err(domain("trials must be >= 1"));
    }
    let books = schemes
        .iter()
        .map(|s| build_codebook(&template.config, *s, &AxisWindows::default()))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, usize, f64)> = match sweep {
        Sweep::Snr(v) => v.iter().map(|s| (*s, template.pilot_len, *s)).collect(),
        Sweep::Pilots(v) => v.iter().map(|q| (*q as f64, *q, template.snr_db)).collect(),
    };
    let q_max = points
        .iter()
        .map(|p| p.1)
        .max()
        .unwrap_or(template.pilot_len);
    let mut sums = vec![vec![0.0f64; points.len()]; schemes.len()];
    let mut count = 0usize;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(template.seed);
        rng.set_stream(t as u64);
        for _ in 0..template.n_users {
            let paths = draw_paths(&template.config, template.n_paths, &mut rng);
            let h = channel_matrix(template, &paths)?;
            let sensing = random_sensing(&template.config, template.n_rf, q_max, &mut rng);
            let noise =
                DMatrix::from_fn(sensing.nrows(), h.ncols(), |_, _| complex_normal(&mut rng));
            for (pi, &(_, q, snr)) in points.iter().enumerate() {
                let rows = q * template.n_rf;
                let s_q = sensing.rows(0, rows).into_owned();
                let y = observe(&s_q, &h, &noise, snr);
                for (bi, book) in books.iter().enumerate() {
                    let est = somp(&y, &s_q, book, template.n_paths.min(book.size()))?;
                    let den = h.norm_squared();
                    sums[bi][pi] += (&h - &est.h_hat).norm_squared() / den;
                }
            }
            count += 1;
        }
    }
    let mut rows = Vec::new();
    for (bi, s) in schemes.iter().enumerate() {
        for (pi, p) in points.iter().enumerate() {
            rows.push(NmseRow {
                scheme: *s,
                sweep_value: p.0,
                nmse_db: to_db(sums[bi][pi] / count as f64),
                trials,
            });
        }
    }
    Ok(rows)
}
