//! Fresnel integrals, the gain kernels built on them, and bisection.

use crate::error::{domain, Error, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelPair {
    pub c: f64,
    pub s: f64,
}

/// Below this the integrals are evaluated by quadrature, above by the
/// asymptotic auxiliary-function expansion.
const SEAM: f64 = 6.0;

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(a: f64, b: f64) -> ((f64, f64), f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let f = |t: f64| {
        let p = 0.5 * PI * t * t;
        (p.cos(), p.sin())
    };
    let (fc, fs) = f(c);
    let mut kc = WGK[7] * fc;
    let mut ks = WGK[7] * fs;
    let mut gc = WG[3] * fc;
    let mut gs = WG[3] * fs;
    for i in 0..7 {
        let dx = h * XGK[i];
        let (c1, s1) = f(c - dx);
        let (c2, s2) = f(c + dx);
        kc += WGK[i] * (c1 + c2);
        ks += WGK[i] * (s1 + s2);
        if i % 2 == 1 {
            gc += WG[i / 2] * (c1 + c2);
            gs += WG[i / 2] * (s1 + s2);
        }
    }
    let err = ((kc - gc).abs() + (ks - gs).abs()) * h;
    ((kc * h, ks * h), err)
}

fn adaptive(a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let ((c, s), err) = gk15(a, b);
    if err <= tol || depth == 0 {
        return (c, s);
    }
    let m = 0.5 * (a + b);
    let (c1, s1) = adaptive(a, m, 0.5 * tol, depth - 1);
    let (c2, s2) = adaptive(m, b, 0.5 * tol, depth - 1);
    (c1 + c2, s1 + s2)
}

fn quadrature(x: f64) -> (f64, f64) {
    // unit panels keep the oscillation per panel bounded
    let panels = x.ceil().max(1.0) as usize;
    let h = x / panels as f64;
    let mut acc = (0.0, 0.0);
    for k in 0..panels {
        let (c, s) = adaptive(k as f64 * h, (k + 1) as f64 * h, 1e-14, 30);
        acc.0 += c;
        acc.1 += s;
    }
    acc
}

fn asymptotic(x: f64) -> (f64, f64) {
    let z = PI * x * x;
    let z2 = z * z;
    let mut f = 0.0;
    let mut g = 0.0;
    let mut tf: f64 = 1.0;
    let mut tg: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for n in 0..60 {
        let nf = n as f64;
        if tf.abs() > prev {
            break;
        }
        prev = tf.abs();
        f += tf;
        g += tg;
        tf *= -(4.0 * nf + 1.0) * (4.0 * nf + 3.0) / z2;
        tg *= -(4.0 * nf + 3.0) * (4.0 * nf + 5.0) / z2;
        if tf.abs() < 1e-18 {
            f += tf;
            g += tg;
            break;
        }
    }
    let f = f / (PI * x);
    let g = g / (PI * PI * x * x * x);
    let (sn, cs) = (0.5 * z).sin_cos();
    (0.5 + f * sn - g * cs, 0.5 - f * cs - g * sn)
}

/// Fresnel cosine and sine integrals C(x) = ∫₀ˣ cos(πt²/2) dt and S(x).
pub fn fresnel(x: f64) -> Result<FresnelPair> {
    if !x.is_finite() {
        return Err(domain(format!("fresnel argument {x} is not finite")));
    }
    Ok(fresnel_unchecked(x))
}

pub(crate) fn fresnel_unchecked(x: f64) -> FresnelPair {
    let ax = x.abs();
    let (c, s) = if ax == 0.0 {
        (0.0, 0.0)
    } else if ax <= SEAM {
        quadrature(ax)
    } else {
        asymptotic(ax)
    };
    let sign = x.signum();
    FresnelPair {
        c: sign * c,
        s: sign * s,
    }
}

/// Gain kernels in Fresnel form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// (C²(γ)+S²(γ))/γ², γ > 0.
    Ula(f64),
    /// Product of two `Ula` factors.
    Ura(f64, f64),
    /// [C(a+b)−C(a−b)]² + [S(a+b)−S(a−b)]² with no prefactor; b is the half-width.
    Shifted(f64, f64),
}

pub fn gain(kernel: Kernel) -> Result<f64> {
    match kernel {
        Kernel::Ula(g) => {
            check_positive(g)?;
            Ok(gain_factor(g))
        }
        Kernel::Ura(g1, g2) => {
            check_positive(g1)?;
            check_positive(g2)?;
            Ok(gain_factor(g1) * gain_factor(g2))
        }
        Kernel::Shifted(a, b) => {
            if !a.is_finite() || !(b > 0.0) || !b.is_finite() {
                return Err(domain(format!(
                    "shifted kernel needs finite offset and half-width > 0, got ({a}, {b})"
                )));
            }
            Ok(shifted_bracket(a, b))
        }
    }
}

fn check_positive(g: f64) -> Result<()> {
    if g > 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("gamma must be finite and > 0, got {g}")))
    }
}

/// (C²+S²)/γ², even in γ, with the γ → 0 limit of 1.
pub fn gain_factor(g: f64) -> f64 {
    let g = g.abs();
    if g < 1e-8 {
        return 1.0;
    }
    let p = fresnel_unchecked(g);
    (p.c * p.c + p.s * p.s) / (g * g)
}

pub(crate) fn shifted_bracket(a: f64, b: f64) -> f64 {
    let p = fresnel_unchecked(a + b);
    let m = fresnel_unchecked(a - b);
    let dc = p.c - m.c;
    let ds = p.s - m.s;
    dc * dc + ds * ds
}

pub const DEFAULT_TOL: f64 = 1e-10;

/// Bisection for f(x) = target on [lo, hi].
pub fn solve_crossing<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo) - target;
    let fhi = f(hi) - target;
    if flo.abs() <= tol {
        return Ok(lo);
    }
    if fhi.abs() <= tol {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..300 {
        mid = 0.5 * (lo + hi);
        let fm = f(mid) - target;
        if fm.abs() <= tol || hi - lo <= f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}
