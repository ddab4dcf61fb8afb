//! Uniform periodic grids, the unitary Fourier transform and the norms used
//! throughout the analysis.
//!
//! The transform follows the symmetric convention
//! `φ̂(ξ) = (2π)^{-1/2} ∫ e^{-ixξ} φ(x) dx`, discretized on nodes
//! `x_j = -L/2 + j·dx` with the origin-shift phase folded in, so that spectral
//! samples are indexed by physical frequencies `ξ_k = 2πk/L`,
//! `k = -N/2, …, N/2-1`, in monotone order.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, ScatterError};

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

/// Relative edge amplitude above which weighted norms are flagged.
pub const EDGE_WARN_RATIO: f64 = 1e-8;

/// Which variable a field is sampled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Physical,
    Spectral,
}

struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid on `[-L/2, L/2)` standing in for the real line.
///
/// Cloning is cheap; the FFT plans are shared and safe to use from several
/// threads at once.
#[derive(Clone)]
pub struct Grid1D {
    length: f64,
    n: usize,
    plans: Arc<FftPair>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("length", &self.length)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(ScatterError::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(ScatterError::InvalidGrid(format!(
                "point count must be even and at least 8, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let plans = FftPair {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(Grid1D {
            length,
            n,
            plans: Arc::new(plans),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn node(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Frequency at monotone index `i`, i.e. `ξ_k` with `k = i - N/2`.
    pub fn freq(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.dxi()
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.freq(i)).collect()
    }

    /// Half-width of the frequency grid, `π/dx`.
    pub fn xi_nyquist(&self) -> f64 {
        PI / self.dx()
    }

    pub fn coordinates(&self, side: Side) -> Vec<f64> {
        match side {
            Side::Physical => self.nodes(),
            Side::Spectral => self.freqs(),
        }
    }

    pub fn weight(&self, side: Side) -> f64 {
        match side {
            Side::Physical => self.dx(),
            Side::Spectral => self.dxi(),
        }
    }

    /// Frequencies in raw FFT order (`k = 0, 1, …, N/2-1, -N/2, …, -1`).
    pub(crate) fn raw_freqs(&self) -> Vec<f64> {
        let n = self.n as isize;
        (0..n)
            .map(|m| {
                let k = if m < n / 2 { m } else { m - n };
                k as f64 * self.dxi()
            })
            .collect()
    }

    /// Unnormalized forward DFT in place.
    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.plans.forward.process(buf);
    }

    /// Unnormalized inverse DFT in place.
    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.plans.inverse.process(buf);
    }
}

/// Samples of one function on a grid, tagged with the variable they are in.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid1D,
    samples: Vec<Complex64>,
    side: Side,
}

impl ComplexField {
    pub fn new(grid: &Grid1D, samples: Vec<Complex64>, side: Side) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(ScatterError::LengthMismatch {
                expected: grid.len(),
                found: samples.len(),
            });
        }
        Ok(ComplexField {
            grid: grid.clone(),
            samples,
            side,
        })
    }

    pub fn physical(grid: &Grid1D, samples: Vec<Complex64>) -> Result<Self> {
        Self::new(grid, samples, Side::Physical)
    }

    pub fn spectral(grid: &Grid1D, samples: Vec<Complex64>) -> Result<Self> {
        Self::new(grid, samples, Side::Spectral)
    }

    pub fn zeros(grid: &Grid1D, side: Side) -> Self {
        ComplexField {
            grid: grid.clone(),
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
            side,
        }
    }

    /// Samples `f` at the coordinates of the given side.
    pub fn from_fn(grid: &Grid1D, side: Side, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = grid.coordinates(side).into_iter().map(f).collect();
        ComplexField {
            grid: grid.clone(),
            samples,
            side,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn coordinates(&self) -> Vec<f64> {
        self.grid.coordinates(self.side)
    }

    pub fn expect_side(&self, side: Side) -> Result<()> {
        if self.side != side {
            return Err(ScatterError::SideMismatch {
                expected: side,
                found: self.side,
            });
        }
        Ok(())
    }

    pub fn check_compatible(&self, other: &ComplexField) -> Result<()> {
        if self.grid != other.grid {
            return Err(ScatterError::GridMismatch);
        }
        if self.side != other.side {
            return Err(ScatterError::SideMismatch {
                expected: self.side,
                found: other.side,
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|&z| f(z)).collect(),
            side: self.side,
        }
    }

    pub fn scale(&self, c: Complex64) -> ComplexField {
        self.map(|z| z * c)
    }

    pub fn zip_with(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexField> {
        self.check_compatible(other)?;
        Ok(ComplexField {
            grid: self.grid.clone(),
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            side: self.side,
        })
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

/// Forward transform, physical side to spectral side.
pub fn fourier_forward(f: &ComplexField) -> Result<ComplexField> {
    f.expect_side(Side::Physical)?;
    let grid = f.grid();
    let mut buf = f.samples().to_vec();
    grid.fft_forward(&mut buf);
    Ok(ComplexField {
        grid: grid.clone(),
        samples: raw_to_spectral(grid, &buf),
        side: Side::Spectral,
    })
}

/// Inverse transform, spectral side to physical side.
pub fn fourier_inverse(f: &ComplexField) -> Result<ComplexField> {
    f.expect_side(Side::Spectral)?;
    let grid = f.grid();
    let mut buf = spectral_to_raw(grid, f.samples());
    grid.fft_inverse(&mut buf);
    let scale = SQRT_2PI / (grid.len() as f64 * grid.dx());
    for z in buf.iter_mut() {
        *z *= scale;
    }
    Ok(ComplexField {
        grid: grid.clone(),
        samples: buf,
        side: Side::Physical,
    })
}

/// Transform to the other side, whichever side the field is on.
pub fn to_dual(f: &ComplexField) -> Result<ComplexField> {
    match f.side() {
        Side::Physical => fourier_forward(f),
        Side::Spectral => fourier_inverse(f),
    }
}

// raw DFT index m carries frequency index k ≡ m (mod N); the origin shift
// contributes (-1)^k = (-1)^m since N is even.
fn raw_to_spectral(grid: &Grid1D, raw: &[Complex64]) -> Vec<Complex64> {
    let n = grid.len();
    let scale = grid.dx() / SQRT_2PI;
    (0..n)
        .map(|i| {
            let m = (i + n / 2) % n;
            let sign = if m.is_multiple_of(2) { scale } else { -scale };
            raw[m] * sign
        })
        .collect()
}

fn spectral_to_raw(grid: &Grid1D, spec: &[Complex64]) -> Vec<Complex64> {
    let n = grid.len();
    let mut raw = vec![Complex64::new(0.0, 0.0); n];
    for (i, &z) in spec.iter().enumerate() {
        let m = (i + n / 2) % n;
        raw[m] = if m.is_multiple_of(2) { z } else { -z };
    }
    raw
}

pub fn norm_l2(f: &ComplexField) -> f64 {
    let w = f.grid().weight(f.side());
    (f.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() * w).sqrt()
}

pub fn norm_linf(f: &ComplexField) -> f64 {
    f.samples().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn norm_l1(f: &ComplexField) -> f64 {
    let w = f.grid().weight(f.side());
    f.samples().iter().map(|z| z.norm()).sum::<f64>() * w
}

/// `‖c^p f‖_{L²}` with `c` the field's own coordinate.
pub fn weighted_l2(f: &ComplexField, power: u32) -> f64 {
    let w = f.grid().weight(f.side());
    let coords = f.coordinates();
    let sum: f64 = f
        .samples()
        .iter()
        .zip(&coords)
        .map(|(z, c)| c.abs().powi(power as i32 * 2) * z.norm_sqr())
        .sum();
    (sum * w).sqrt()
}

/// `Σ_{i≤n} ‖∂^i f‖_{L²}`, derivatives taken in the field's own variable.
///
/// Evaluated through Plancherel on the dual side. The dual coordinate at the
/// unpaired end mode (Nyquist frequency, or the node `-L/2`) gets zero weight
/// for every derivative order.
pub fn norm_hn0(f: &ComplexField, n: u32) -> Result<f64> {
    let mut total = norm_l2(f);
    if n == 0 {
        return Ok(total);
    }
    let dual = to_dual(f)?;
    let w = dual.grid().weight(dual.side());
    let coords = dual.coordinates();
    for order in 1..=n {
        let sum: f64 = dual
            .samples()
            .iter()
            .zip(&coords)
            .skip(1)
            .map(|(z, c)| c.abs().powi(2 * order as i32) * z.norm_sqr())
            .sum();
        total += (sum * w).sqrt();
    }
    Ok(total)
}

/// `Σ_{i≤n} ‖c^i f‖_{L²}` with `c` the field's own coordinate.
///
/// Logs a warning when the field has not decayed at the domain edge, where
/// polynomial weights stop describing a function on the line.
pub fn norm_h0n(f: &ComplexField, n: u32) -> f64 {
    let peak = norm_linf(f);
    let edge = edge_amplitude(f);
    if peak > 0.0 && edge > EDGE_WARN_RATIO * peak {
        log::warn!(
            "weighted norm of a field with edge amplitude {:e} ({:e} of peak)",
            edge,
            edge / peak
        );
    }
    (0..=n).map(|i| weighted_l2(f, i)).sum()
}

/// Largest modulus within the outermost 1% of samples on either end.
pub fn edge_amplitude(f: &ComplexField) -> f64 {
    let s = f.samples();
    let band = (s.len() / 100).max(1);
    s[..band]
        .iter()
        .chain(&s[s.len() - band..])
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Small exponents of the weighted-norm analysis and the data size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisParams {
    alpha: f64,
    delta: f64,
    beta: f64,
    nu: f64,
    n: u32,
    epsilon: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams::new(0.01, 0.24, 0.2, 1, 0.1).expect("default parameters are admissible")
    }
}

impl AnalysisParams {
    /// Requires `0 < 4α < δ < 1/4` and `0 < β < 1/4`; `ν = 1/4 - δ + 4α`.
    pub fn new(alpha: f64, delta: f64, beta: f64, n: u32, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0 && 4.0 * alpha < delta && delta < 0.25) {
            return Err(ScatterError::InvalidParams(format!(
                "need 0 < 4*alpha < delta < 1/4, got alpha = {alpha}, delta = {delta}"
            )));
        }
        if !(beta > 0.0 && beta < 0.25) {
            return Err(ScatterError::InvalidParams(format!(
                "need 0 < beta < 1/4, got {beta}"
            )));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(ScatterError::InvalidParams(format!(
                "epsilon must be nonnegative, got {epsilon}"
            )));
        }
        Ok(AnalysisParams {
            alpha,
            delta,
            beta,
            nu: 0.25 - delta + 4.0 * alpha,
            n,
            epsilon,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }
}

/// The three suprema that make up the bootstrap norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XtComponents {
    pub sup_linf: f64,
    pub sup_weighted_h10: f64,
    pub sup_weighted_h0m: f64,
}

impl XtComponents {
    pub fn total(&self) -> f64 {
        self.sup_linf + self.sup_weighted_h10 + self.sup_weighted_h0m
    }
}

/// `sup_t ‖·‖_{L^∞}`, `sup_t t^{-α}‖·‖_{H^{1,0}}`, `sup_t t^{-α}‖·‖_{H^{0,2n+1}}`
/// over the sampled times.
pub fn norm_xt_components(
    series: &[(f64, ComplexField)],
    params: &AnalysisParams,
) -> Result<XtComponents> {
    if series.is_empty() {
        return Err(ScatterError::EmptySeries);
    }
    check_times(series.iter().map(|(t, _)| *t))?;
    let mut out = XtComponents {
        sup_linf: 0.0,
        sup_weighted_h10: 0.0,
        sup_weighted_h0m: 0.0,
    };
    let m = 2 * params.n() + 1;
    for (t, f) in series {
        if *t < 1.0 {
            return Err(ScatterError::OutOfRange(format!(
                "bootstrap norm needs t >= 1, got {t}"
            )));
        }
        let weight = t.powf(-params.alpha());
        out.sup_linf = out.sup_linf.max(norm_linf(f));
        out.sup_weighted_h10 = out.sup_weighted_h10.max(weight * norm_hn0(f, 1)?);
        out.sup_weighted_h0m = out.sup_weighted_h0m.max(weight * norm_h0n(f, m));
    }
    Ok(out)
}

pub(crate) fn check_times(times: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for (i, t) in times.enumerate() {
        if !(t > prev) {
            return Err(ScatterError::NonMonotoneTimes(i));
        }
        prev = t;
    }
    Ok(())
}

/// Evaluates the band-limited interpolant of `f̂` at `count` uniformly spaced
/// frequencies `start + j·step`, given `f` on the physical side.
///
/// This is the trigonometric polynomial `(2π)^{-1/2} Σ_m f(x_m) e^{-i x_m ξ} dx`,
/// which reproduces the grid values of `f̂` exactly. The sum is computed as a
/// chirp-z transform (Bluestein convolution), `O((N + count) log(N + count))`.
pub fn evaluate_transform(
    f: &ComplexField,
    start: f64,
    step: f64,
    count: usize,
) -> Result<Vec<Complex64>> {
    f.expect_side(Side::Physical)?;
    if count == 0 {
        return Ok(Vec::new());
    }
    let grid = f.grid();
    let n = grid.len();
    let dx = grid.dx();
    let x0 = grid.node(0);
    let kappa = dx * step;

    let size = (n + count - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let mut a = vec![Complex64::new(0.0, 0.0); size];
    for (m, (slot, &z)) in a.iter_mut().zip(f.samples()).enumerate() {
        let mf = m as f64;
        *slot = z * Complex64::from_polar(1.0, -start * dx * mf - 0.5 * kappa * mf * mf);
    }
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    for (k, slot) in b.iter_mut().enumerate().take(count) {
        let kf = k as f64;
        *slot = Complex64::from_polar(1.0, 0.5 * kappa * kf * kf);
    }
    for k in 1..n {
        let kf = k as f64;
        b[size - k] = Complex64::from_polar(1.0, 0.5 * kappa * kf * kf);
    }
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);

    let scale = dx / SQRT_2PI / size as f64;
    Ok((0..count)
        .map(|j| {
            let jf = j as f64;
            let phase = -x0 * start - x0 * step * jf - 0.5 * kappa * jf * jf;
            a[j] * Complex64::from_polar(scale, phase)
        })
        .collect())
}
