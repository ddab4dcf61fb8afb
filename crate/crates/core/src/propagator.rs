//! The free Schrödinger group `e^{it∂xx}` and its large-time leading term.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, ScatterError};
use crate::spectral::{
    evaluate_transform, fourier_forward, fourier_inverse, ComplexField, Grid1D, Side,
};

/// Largest grid accepted by the `O(N²)` kernel quadrature.
pub const KERNEL_MAX_POINTS: usize = 512;

/// Applies the spectral multiplier `e^{-itξ²}` in place.
pub(crate) fn apply_free_multiplier(grid: &Grid1D, spectral: &mut [Complex64], t: f64) {
    for (z, xi) in spectral.iter_mut().zip(grid.freqs()) {
        *z *= Complex64::from_polar(1.0, -t * xi * xi);
    }
}

/// `e^{it∂xx}φ`, the solution of `i∂_t u + ∂_xx u = 0` after time `t`.
///
/// Works on either side; the result is on the same side as the input.
pub fn free_evolve(phi: &ComplexField, t: f64) -> ComplexField {
    match phi.side() {
        Side::Spectral => {
            let mut out = phi.clone();
            apply_free_multiplier(phi.grid(), out.samples_mut(), t);
            out
        }
        Side::Physical => {
            let mut spec = fourier_forward(phi).expect("physical side checked");
            apply_free_multiplier(phi.grid(), spec.samples_mut(), t);
            fourier_inverse(&spec).expect("spectral side by construction")
        }
    }
}

/// `(4iπt)^{-1/2}` on the principal branch.
fn kernel_prefactor(t: f64) -> Complex64 {
    Complex64::new(0.0, 4.0 * PI * t).sqrt().inv()
}

/// `(2it)^{-1/2}` on the principal branch.
pub(crate) fn leading_prefactor(t: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * t).sqrt().inv()
}

/// Direct trapezoid quadrature of `K_t ∗ φ` with
/// `K_t(x) = (4iπt)^{-1/2} e^{-x²/4it}`.
///
/// Independent of the FFT path and meant as a cross-check only: cost is
/// `O(N²)` and accuracy degrades once `|x|/2t` approaches the sampling rate.
pub fn kernel_evolve(phi: &ComplexField, t: f64) -> Result<ComplexField> {
    phi.expect_side(Side::Physical)?;
    if !(t > 0.0) {
        return Err(ScatterError::InvalidArgument(format!(
            "kernel evolution needs t > 0, got {t}"
        )));
    }
    let grid = phi.grid();
    if grid.len() > KERNEL_MAX_POINTS {
        return Err(ScatterError::CostGuard {
            n: grid.len(),
            limit: KERNEL_MAX_POINTS,
        });
    }
    let nodes = grid.nodes();
    let pre = kernel_prefactor(t) * grid.dx();
    let samples = nodes
        .iter()
        .map(|&x| {
            let acc: Complex64 = phi
                .samples()
                .iter()
                .zip(&nodes)
                .map(|(&p, &y)| {
                    let d = x - y;
                    p * Complex64::from_polar(1.0, d * d / (4.0 * t))
                })
                .sum();
            acc * pre
        })
        .collect();
    ComplexField::physical(grid, samples)
}

/// `e^{it∂xx}φ = leading + remainder`, with
/// `leading(x) = (2it)^{-1/2} e^{ix²/4t} φ̂(x/2t)`.
#[derive(Debug, Clone)]
pub struct LeadingSplit {
    pub leading: ComplexField,
    pub remainder: ComplexField,
    pub t: f64,
}

/// Checks that every `x/2t` lands inside the frequency grid.
pub(crate) fn check_ray_range(grid: &Grid1D, t: f64) -> Result<()> {
    let lo = grid.node(0) / (2.0 * t);
    let hi = grid.node(grid.len() - 1) / (2.0 * t);
    let xi_lo = grid.freq(0);
    let xi_hi = grid.freq(grid.len() - 1);
    if lo < xi_lo || hi > xi_hi {
        let need_n = (grid.length() * grid.length() / (4.0 * PI * t)).ceil() as usize;
        let need_n = need_n + need_n % 2;
        let need_t = grid.length() * grid.length() / (4.0 * PI * grid.len() as f64);
        return Err(ScatterError::OutOfRange(format!(
            "x/2t spans [{lo:.4}, {hi:.4}] but the frequency grid covers [{xi_lo:.4}, {xi_hi:.4}]; \
             enlarge N to at least {need_n} at L = {}, or use t >= {need_t:.4}",
            grid.length()
        )));
    }
    Ok(())
}

/// Builds `(2it)^{-1/2} e^{ix²/4t} Z(x/2t)` on the physical grid, where `Z`
/// is given by its spectral samples and evaluated by band-limited
/// interpolation.
pub(crate) fn ray_profile(z_hat: &ComplexField, t: f64) -> Result<ComplexField> {
    z_hat.expect_side(Side::Spectral)?;
    let grid = z_hat.grid();
    check_ray_range(grid, t)?;
    let z = fourier_inverse(z_hat)?;
    let start = grid.node(0) / (2.0 * t);
    let step = grid.dx() / (2.0 * t);
    let along_rays = evaluate_transform(&z, start, step, grid.len())?;
    let pre = leading_prefactor(t);
    let samples = along_rays
        .into_iter()
        .zip(grid.nodes())
        .map(|(w, x)| pre * w * Complex64::from_polar(1.0, x * x / (4.0 * t)))
        .collect();
    ComplexField::physical(grid, samples)
}

pub fn leading_split(phi: &ComplexField, t: f64) -> Result<LeadingSplit> {
    if !(t >= 1.0) {
        return Err(ScatterError::InvalidArgument(format!(
            "leading-term split is defined for t >= 1, got {t}"
        )));
    }
    let phi_hat = match phi.side() {
        Side::Spectral => phi.clone(),
        Side::Physical => fourier_forward(phi)?,
    };
    let leading = ray_profile(&phi_hat, t)?;
    let evolved = free_evolve(&phi_hat, t);
    let evolved = fourier_inverse(&evolved)?;
    let remainder = evolved.sub(&leading)?;
    Ok(LeadingSplit {
        leading,
        remainder,
        t,
    })
}

/// `|e^{ix} - 1| ≤ 2|x|^β` together with the trivial bound `|e^{ix} - 1| ≤ 2`.
pub fn fractional_bound_check(x: f64, beta: f64) -> bool {
    let lhs = 2.0 * (0.5 * x).sin().abs();
    let tol = 1e-15;
    let trivial = lhs <= 2.0 + tol;
    let fractional = lhs <= 2.0 * x.abs().powf(beta) + tol;
    trivial && fractional
}
