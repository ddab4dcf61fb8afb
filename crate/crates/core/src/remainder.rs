//! The remainder `R(s, ξ)` of the profile equation
//!
//! ```text
//! ∂_s f̂ = -(i/2s) |ĝ|² f̂ + R,
//! R = (i/2s) |ĝ|² f̂ - i·F[e^{-is∂xx}(|e^{is∂xx}g|² e^{is∂xx}f)],
//! ```
//!
//! its split into a transform term and a pointwise term, and a brute-force
//! quadrature used to cross-check both.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, ScatterError};
use crate::fit::{fit_rate, RateFit};
use crate::propagator::apply_free_multiplier;
use crate::spectral::{
    fourier_forward, fourier_inverse, norm_hn0, norm_linf, ComplexField, Grid1D, Side, SQRT_2PI,
};

/// Coefficient of the resonant term: `∂_s f̂ ∋ -(i·c/s)|ĝ|² f̂`.
pub const PHASE_COEFFICIENT: f64 = 0.5;

/// Largest grid accepted by [`remainder_oracle`].
pub const ORACLE_MAX_POINTS: usize = 64;

/// Refinement factor of the oracle's physical quadrature grid.
pub const ORACLE_UPSAMPLING: usize = 8;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Arguments of `R(ĝ, ĝ, f̂)(s, ·)`.
#[derive(Debug, Clone)]
pub struct TrilinearInput {
    pub f_hat: ComplexField,
    pub g_hat: ComplexField,
    pub s: f64,
}

impl TrilinearInput {
    pub fn new(f_hat: ComplexField, g_hat: ComplexField, s: f64) -> Result<Self> {
        f_hat.expect_side(Side::Spectral)?;
        g_hat.check_compatible(&f_hat)?;
        if !(s >= 1.0) {
            return Err(ScatterError::InvalidArgument(format!(
                "remainder needs s >= 1, got {s}"
            )));
        }
        Ok(TrilinearInput { f_hat, g_hat, s })
    }

    pub fn grid(&self) -> &Grid1D {
        self.f_hat.grid()
    }
}

/// `(I, N)` with `R = I + N/s`: `N = i·c·|ĝ|² f̂` and
/// `I = -i·F[e^{-is∂xx}(|e^{is∂xx}g|² e^{is∂xx}f)]`.
pub fn remainder_split(input: &TrilinearInput) -> Result<(ComplexField, ComplexField)> {
    let grid = input.grid();
    let s = input.s;

    let mut f_hat = input.f_hat.clone();
    let mut g_hat = input.g_hat.clone();
    apply_free_multiplier(grid, f_hat.samples_mut(), s);
    apply_free_multiplier(grid, g_hat.samples_mut(), s);
    let f_s = fourier_inverse(&f_hat)?;
    let g_s = fourier_inverse(&g_hat)?;
    let product = f_s.zip_with(&g_s, |a, b| b.norm_sqr() * a)?;
    let mut transformed = fourier_forward(&product)?;
    apply_free_multiplier(grid, transformed.samples_mut(), -s);
    let i_term = transformed.scale(-I);

    let n_term = input.f_hat.zip_with(&input.g_hat, |f, g| {
        I * PHASE_COEFFICIENT * g.norm_sqr() * f
    })?;
    Ok((i_term, n_term))
}

/// `R(s, ·)` via four transforms and pointwise products.
pub fn remainder_physical(input: &TrilinearInput) -> Result<ComplexField> {
    let (i_term, n_term) = remainder_split(input)?;
    let inv_s = 1.0 / input.s;
    i_term.zip_with(&n_term, |a, b| a + b * inv_s)
}

// Band-limited interpolant of the spectral samples on `count` points
// `start + j·step`, by direct summation.
fn interpolate_physical(
    f_hat: &ComplexField,
    start: f64,
    step: f64,
    count: usize,
) -> Vec<Complex64> {
    let grid = f_hat.grid();
    let w = grid.dxi() / SQRT_2PI;
    let freqs = grid.freqs();
    (0..count)
        .map(|j| {
            let y = start + j as f64 * step;
            f_hat
                .samples()
                .iter()
                .zip(&freqs)
                .map(|(&z, &xi)| z * Complex64::from_polar(1.0, y * xi))
                .sum::<Complex64>()
                * w
        })
        .collect()
}

/// Direct quadrature of
///
/// ```text
/// R(s,ξ) = -(i/4πs) ∬ (e^{-iab/2s} - 1) F̌(a,b) da db,
/// F̌(a,b) = (2π)^{-1/2} e^{i(a+b)ξ} ∫ e^{-ixξ} g(x-b) ḡ(x) f(x-a) dx,
/// ```
///
/// with the profiles taken as zero outside the domain and sampled on a grid
/// refined by [`ORACLE_UPSAMPLING`]. Independent of the transform path; for
/// tests and reports only.
pub fn remainder_oracle(input: &TrilinearInput) -> Result<ComplexField> {
    let grid = input.grid();
    let n = grid.len();
    if n > ORACLE_MAX_POINTS {
        return Err(ScatterError::CostGuard {
            n,
            limit: ORACLE_MAX_POINTS,
        });
    }
    let s = input.s;
    let m = n * ORACLE_UPSAMPLING;
    let h = grid.dx() / ORACLE_UPSAMPLING as f64;
    let x0 = grid.node(0);
    let f = interpolate_physical(&input.f_hat, x0, h, m);
    let g = interpolate_physical(&input.g_hat, x0, h, m);
    let ys: Vec<f64> = (0..m).map(|j| x0 + j as f64 * h).collect();

    // b = x - y1 = d·h with d in (-m, m); stored at offset d + m - 1
    let offsets = 2 * m - 1;
    let b_of = |d: usize| (d as f64 - (m - 1) as f64) * h;
    // e^{-ixb/2s}, indexed [x][y1]
    let chirp_xb: Vec<Complex64> = (0..m * m)
        .map(|k| {
            let (ix, iy) = (k / m, k % m);
            let b = (ix as f64 - iy as f64) * h;
            Complex64::from_polar(1.0, -ys[ix] * b / (2.0 * s))
        })
        .collect();
    // e^{iy3·b/2s}, indexed [d][y3]
    let chirp_yb: Vec<Complex64> = (0..offsets * m)
        .map(|k| {
            let (d, iy) = (k / m, k % m);
            Complex64::from_polar(1.0, ys[iy] * b_of(d) / (2.0 * s))
        })
        .collect();
    // g(y1)·ḡ(x), indexed [x][y1]
    let pair: Vec<Complex64> = (0..m * m).map(|k| g[k % m] * g[k / m].conj()).collect();

    let pref = -I / (4.0 * PI * s * SQRT_2PI) * h.powi(3);
    let values: Vec<Complex64> = grid
        .freqs()
        .par_iter()
        .map(|&xi| {
            let fe: Vec<Complex64> = f
                .iter()
                .zip(&ys)
                .map(|(&v, &y)| v * Complex64::from_polar(1.0, -y * xi))
                .collect();
            let t0: Complex64 = fe.iter().sum();
            let t: Vec<Complex64> = (0..offsets)
                .map(|d| {
                    fe.iter()
                        .zip(&chirp_yb[d * m..(d + 1) * m])
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
            let eb: Vec<Complex64> = (0..offsets)
                .map(|d| Complex64::from_polar(1.0, b_of(d) * xi))
                .collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for ix in 0..m {
                let row = ix * m;
                for iy in 0..m {
                    let d = ix + m - 1 - iy;
                    acc += pair[row + iy] * eb[d] * (chirp_xb[row + iy] * t[d] - t0);
                }
            }
            acc * pref
        })
        .collect();
    ComplexField::spectral(grid, values)
}

/// Spectral profiles `(f̂, ĝ)` at one time.
#[derive(Debug, Clone)]
pub struct ProfileSample {
    pub t: f64,
    pub f_hat: ComplexField,
    pub g_hat: ComplexField,
}

/// Outcome of the remainder decay fit along a run.
#[derive(Debug, Clone)]
pub struct LemmaReport {
    /// `(s, sup_ξ |R(s, ξ)|)`.
    pub sup_remainder: Vec<(f64, f64)>,
    /// `(s, sup_ξ|R|·s^{1+δ} / (‖ĝ‖²_{H^{1,0}} ‖f̂‖_{H^{1,0}}))`.
    pub ratio: Vec<(f64, f64)>,
    /// `None` when the remainder vanishes identically (decoupled data).
    pub fit: Option<RateFit>,
    /// `max/median` of the ratio series.
    pub ratio_spread: Option<f64>,
}

impl LemmaReport {
    pub fn is_vacuous(&self) -> bool {
        self.fit.is_none()
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Evaluates `sup_ξ|R(s)|` at each profile sample in `[s_lo, s_hi]` and fits
/// its decay rate.
pub fn lemma_decay_check(
    samples: &[ProfileSample],
    delta: f64,
    s_lo: f64,
    s_hi: f64,
) -> Result<LemmaReport> {
    let window: Vec<&ProfileSample> = samples
        .iter()
        .filter(|p| p.t >= s_lo * (1.0 - 1e-12) && p.t <= s_hi * (1.0 + 1e-12))
        .collect();
    let rows: Vec<(f64, f64, f64)> = window
        .par_iter()
        .map(|p| {
            let input = TrilinearInput::new(p.f_hat.clone(), p.g_hat.clone(), p.t)?;
            let sup = norm_linf(&remainder_physical(&input)?);
            let rhs = norm_hn0(&p.g_hat, 1)?.powi(2) * norm_hn0(&p.f_hat, 1)?;
            let ratio = if rhs > 0.0 {
                sup * p.t.powf(1.0 + delta) / rhs
            } else {
                0.0
            };
            Ok((p.t, sup, ratio))
        })
        .collect::<Result<_>>()?;
    let sup_remainder: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    let ratio: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.2)).collect();
    if sup_remainder.iter().all(|p| p.1 == 0.0) {
        return Ok(LemmaReport {
            sup_remainder,
            ratio,
            fit: None,
            ratio_spread: None,
        });
    }
    let fit = fit_rate(&sup_remainder)?;
    let rvals: Vec<f64> = ratio.iter().map(|p| p.1).collect();
    let max = rvals.iter().copied().fold(0.0, f64::max);
    Ok(LemmaReport {
        sup_remainder,
        ratio,
        fit: Some(fit),
        ratio_spread: Some(max / median(&rvals)),
    })
}

/// Fits the growth of `‖f̂(t)‖_{H^{1,0}}` over `[t_lo, t_hi]`.
pub fn h10_growth_check(samples: &[ProfileSample], t_lo: f64, t_hi: f64) -> Result<RateFit> {
    let series: Vec<(f64, f64)> = samples
        .iter()
        .filter(|p| p.t >= t_lo * (1.0 - 1e-12) && p.t <= t_hi * (1.0 + 1e-12))
        .map(|p| Ok((p.t, norm_hn0(&p.f_hat, 1)?)))
        .collect::<Result<_>>()?;
    fit_rate(&series)
}

/// Constant in `|ξ|^{2n+1} ≤ C(|ξ-σ|^{2n+1} + |ξ-η|^{2n+1} + |ξ-σ-η|^{2n+1})`.
pub fn convexity_constant(n: u32) -> f64 {
    9f64.powi(n as i32)
}

/// `|ξ|^{2n+1} / (|ξ-σ|^{2n+1} + |ξ-η|^{2n+1} + |ξ-σ-η|^{2n+1})`, or zero
/// when both sides vanish.
pub fn convexity_ratio(n: u32, xi: f64, eta: f64, sigma: f64) -> f64 {
    let p = 2 * n as i32 + 1;
    let lhs = xi.abs().powi(p);
    let rhs =
        (xi - sigma).abs().powi(p) + (xi - eta).abs().powi(p) + (xi - sigma - eta).abs().powi(p);
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

pub fn convexity_split_check(n: u32, xi: f64, eta: f64, sigma: f64) -> bool {
    convexity_ratio(n, xi, eta, sigma) <= convexity_constant(n) * (1.0 + 1e-12)
}

/// Packet `a·e^{-(x-c)²/2w²}·e^{ikx}`, sampled on the spectral side from its
/// closed-form transform `a·w·e^{-(ξ-k)²w²/2}·e^{-i(ξ-k)c}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub amplitude: Complex64,
    pub center: f64,
    pub width: f64,
    pub carrier: f64,
}

impl Packet {
    pub fn spectral_value(&self, xi: f64) -> Complex64 {
        let d = xi - self.carrier;
        self.amplitude
            * self.width
            * (-0.5 * d * d * self.width * self.width).exp()
            * Complex64::from_polar(1.0, -d * self.center)
    }

    pub fn physical_value(&self, x: f64) -> Complex64 {
        let d = (x - self.center) / self.width;
        self.amplitude * (-0.5 * d * d).exp() * Complex64::from_polar(1.0, self.carrier * x)
    }
}

pub fn packet_sum(grid: &Grid1D, packets: &[Packet]) -> ComplexField {
    ComplexField::from_fn(grid, Side::Spectral, |xi| {
        packets.iter().map(|p| p.spectral_value(xi)).sum()
    })
}
