//! Profiles, phase corrections and scattering data of a trajectory.
//!
//! With profiles `f̂ = e^{itξ²}û`, `ĝ = e^{itξ²}v̂` and phase integrals
//! `Φ_g(t,ξ) = ∫₁ᵗ |ĝ(s,ξ)|² ds/s`, the corrected profiles
//! `ŵ_f = f̂·e^{i·c·Φ_g}` (and symmetrically `ŵ_g`) converge as `t → ∞`;
//! `c` is [`PHASE_COEFFICIENT`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, ScatterError};
use crate::fit::{fit_rate, RateFit, MIN_FIT_SAMPLES};
use crate::propagator::{apply_free_multiplier, free_evolve, ray_profile};
use crate::remainder::{remainder_physical, ProfileSample, TrilinearInput, PHASE_COEFFICIENT};
use crate::solver::{PairState, Trajectory};
use crate::spectral::{
    check_times, fourier_forward, norm_h0n, norm_l1, norm_l2, norm_linf, weighted_l2, ComplexField,
    Grid1D, Side,
};

/// `(f, g) = (e^{-it∂xx}u, e^{-it∂xx}v)` on the physical side.
pub fn profile(state: &PairState) -> Result<(ComplexField, ComplexField)> {
    if !(state.t >= 1.0) {
        return Err(ScatterError::InvalidArgument(format!(
            "profiles are defined for t >= 1, got {}",
            state.t
        )));
    }
    Ok((
        free_evolve(&state.u, -state.t),
        free_evolve(&state.v, -state.t),
    ))
}

/// `(f̂, ĝ)` on the spectral side.
pub fn profile_hat(state: &PairState) -> Result<(ComplexField, ComplexField)> {
    let mut f_hat = fourier_forward(&state.u)?;
    let mut g_hat = fourier_forward(&state.v)?;
    apply_free_multiplier(state.grid(), f_hat.samples_mut(), -state.t);
    apply_free_multiplier(state.grid(), g_hat.samples_mut(), -state.t);
    Ok((f_hat, g_hat))
}

/// Which component's spectral modulus an accumulator integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    U,
    V,
}

/// Running integrals `∫₁ᵗ |ĥ(s,ξ)|² ds/s` at every snapshot time, by the
/// trapezoid rule in `ln s`.
#[derive(Debug, Clone)]
pub struct PhaseAccumulator {
    pub grid: Grid1D,
    pub source: Source,
    pub times: Vec<f64>,
    /// `values[m][k]` is the integral up to `times[m]` at frequency `k`.
    pub values: Vec<Vec<f64>>,
    /// `(t, max_ξ |fine - coarse|/3)` at every second snapshot, comparing
    /// against the trapezoid rule on every other node.
    pub richardson: Vec<(f64, f64)>,
}

impl PhaseAccumulator {
    /// Builds the accumulator from squared moduli sampled at `times`.
    pub fn from_moduli(
        grid: &Grid1D,
        source: Source,
        times: &[f64],
        moduli_sq: &[Vec<f64>],
    ) -> Result<Self> {
        if times.len() < 2 {
            return Err(ScatterError::TooFewSamples {
                needed: 2,
                found: times.len(),
            });
        }
        if moduli_sq.len() != times.len() {
            return Err(ScatterError::LengthMismatch {
                expected: times.len(),
                found: moduli_sq.len(),
            });
        }
        if let Some(row) = moduli_sq.iter().find(|r| r.len() != grid.len()) {
            return Err(ScatterError::LengthMismatch {
                expected: grid.len(),
                found: row.len(),
            });
        }
        check_times(times.iter().copied())?;
        if times[0] != 1.0 {
            return Err(ScatterError::InvalidArgument(format!(
                "phase integrals start at t = 1, got {}",
                times[0]
            )));
        }
        let n = grid.len();
        let mut values = Vec::with_capacity(times.len());
        values.push(vec![0.0; n]);
        for m in 1..times.len() {
            let h = 0.5 * (times[m].ln() - times[m - 1].ln());
            let prev = &values[m - 1];
            let row: Vec<f64> = (0..n)
                .map(|k| prev[k] + h * (moduli_sq[m - 1][k] + moduli_sq[m][k]))
                .collect();
            values.push(row);
        }
        let mut richardson = Vec::new();
        let mut coarse = vec![0.0; n];
        for m in (2..times.len()).step_by(2) {
            let h = 0.5 * (times[m].ln() - times[m - 2].ln());
            let mut worst: f64 = 0.0;
            for k in 0..n {
                coarse[k] += h * (moduli_sq[m - 2][k] + moduli_sq[m][k]);
                worst = worst.max((values[m][k] - coarse[k]).abs() / 3.0);
            }
            richardson.push((times[m], worst));
        }
        Ok(PhaseAccumulator {
            grid: grid.clone(),
            source,
            times: times.to_vec(),
            values,
            richardson,
        })
    }

    pub fn phase(&self, m: usize) -> &[f64] {
        &self.values[m]
    }

    /// The unimodular factor `e^{i·c·Φ}` at snapshot `m`.
    pub fn factor(&self, m: usize) -> ComplexField {
        let samples = self.values[m]
            .iter()
            .map(|&p| Complex64::from_polar(1.0, PHASE_COEFFICIENT * p))
            .collect();
        ComplexField::spectral(&self.grid, samples).expect("grid length by construction")
    }

    pub fn quadrature_error(&self) -> f64 {
        self.richardson.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

fn spectra(traj: &Trajectory) -> Result<Vec<(ComplexField, ComplexField)>> {
    traj.snapshots
        .par_iter()
        .map(|s| Ok((fourier_forward(&s.u)?, fourier_forward(&s.v)?)))
        .collect()
}

fn accumulators_from(
    traj: &Trajectory,
    spectra: &[(ComplexField, ComplexField)],
) -> Result<(PhaseAccumulator, PhaseAccumulator)> {
    let times = traj.times();
    let sq = |f: &ComplexField| {
        f.samples()
            .iter()
            .map(|z| z.norm_sqr())
            .collect::<Vec<f64>>()
    };
    let u_sq: Vec<Vec<f64>> = spectra.iter().map(|p| sq(&p.0)).collect();
    let v_sq: Vec<Vec<f64>> = spectra.iter().map(|p| sq(&p.1)).collect();
    Ok((
        PhaseAccumulator::from_moduli(&traj.grid, Source::U, &times, &u_sq)?,
        PhaseAccumulator::from_moduli(&traj.grid, Source::V, &times, &v_sq)?,
    ))
}

/// Phase integrals `(Φ_f, Φ_g)` of `|f̂|² = |û|²` and `|ĝ|² = |v̂|²`, the
/// exponents of `B_f` and `B_g`.
pub fn accumulate_phase(traj: &Trajectory) -> Result<(PhaseAccumulator, PhaseAccumulator)> {
    accumulators_from(traj, &spectra(traj)?)
}

/// `f̂·e^{i·c·Φ}` for a phase integral sampled on the spectral grid.
pub fn apply_phase(f_hat: &ComplexField, phase: &[f64]) -> Result<ComplexField> {
    f_hat.expect_side(Side::Spectral)?;
    if phase.len() != f_hat.samples().len() {
        return Err(ScatterError::LengthMismatch {
            expected: f_hat.samples().len(),
            found: phase.len(),
        });
    }
    let samples = f_hat
        .samples()
        .iter()
        .zip(phase)
        .map(|(&z, &p)| z * Complex64::from_polar(1.0, PHASE_COEFFICIENT * p))
        .collect();
    ComplexField::spectral(f_hat.grid(), samples)
}

/// `ŵ = f̂·B` with `B` taken from `acc` at snapshot `m`.
pub fn w_hat(f_hat: &ComplexField, acc: &PhaseAccumulator, m: usize) -> Result<ComplexField> {
    if f_hat.grid() != &acc.grid {
        return Err(ScatterError::GridMismatch);
    }
    let phase = acc
        .values
        .get(m)
        .ok_or_else(|| ScatterError::InvalidArgument(format!("snapshot index {m} out of range")))?;
    apply_phase(f_hat, phase)
}

/// Profiles, phase integrals and corrected profiles of every snapshot.
#[derive(Debug, Clone)]
pub struct TrajectoryAnalysis {
    pub times: Vec<f64>,
    pub u_hat: Vec<ComplexField>,
    pub f_hat: Vec<ComplexField>,
    pub g_hat: Vec<ComplexField>,
    /// Phase integral of `|f̂|²`, the exponent of `B_f`.
    pub phase_f: PhaseAccumulator,
    /// Phase integral of `|ĝ|²`, the exponent of `B_g`.
    pub phase_g: PhaseAccumulator,
    /// `ŵ_f = f̂·B_g`.
    pub w_f: Vec<ComplexField>,
    /// `ŵ_g = ĝ·B_f`.
    pub w_g: Vec<ComplexField>,
}

impl TrajectoryAnalysis {
    pub fn new(traj: &Trajectory) -> Result<Self> {
        let spectra = spectra(traj)?;
        let (phase_f, phase_g) = accumulators_from(traj, &spectra)?;
        let times = traj.times();
        let grid = &traj.grid;
        let profiles: Vec<(ComplexField, ComplexField)> = spectra
            .par_iter()
            .zip(&times)
            .map(|((u, v), &t)| {
                let mut f = u.clone();
                let mut g = v.clone();
                apply_free_multiplier(grid, f.samples_mut(), -t);
                apply_free_multiplier(grid, g.samples_mut(), -t);
                (f, g)
            })
            .collect();
        let w: Vec<(ComplexField, ComplexField)> = profiles
            .par_iter()
            .enumerate()
            .map(|(m, (f, g))| Ok((w_hat(f, &phase_g, m)?, w_hat(g, &phase_f, m)?)))
            .collect::<Result<_>>()?;
        let (f_hat, g_hat) = profiles.into_iter().unzip();
        let (w_f, w_g) = w.into_iter().unzip();
        Ok(TrajectoryAnalysis {
            times,
            u_hat: spectra.into_iter().map(|p| p.0).collect(),
            f_hat,
            g_hat,
            phase_f,
            phase_g,
            w_f,
            w_g,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn w_f_series(&self) -> Vec<(f64, ComplexField)> {
        self.times
            .iter()
            .copied()
            .zip(self.w_f.iter().cloned())
            .collect()
    }

    pub fn w_g_series(&self) -> Vec<(f64, ComplexField)> {
        self.times
            .iter()
            .copied()
            .zip(self.w_g.iter().cloned())
            .collect()
    }

    pub fn profile_samples(&self) -> Vec<ProfileSample> {
        (0..self.len())
            .map(|m| ProfileSample {
                t: self.times[m],
                f_hat: self.f_hat[m].clone(),
                g_hat: self.g_hat[m].clone(),
            })
            .collect()
    }

    /// `max_m ‖|ŵ_f(t_m)| - |û(t_m)|‖_{L^∞}`.
    pub fn modulus_defect(&self) -> f64 {
        self.w_f
            .iter()
            .zip(&self.u_hat)
            .flat_map(|(w, u)| {
                w.samples()
                    .iter()
                    .zip(u.samples())
                    .map(|(a, b)| (a.norm() - b.norm()).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `‖∂_t ŵ_f - B_g·R‖_{L²}` at snapshot `m`, with the derivative taken by
    /// the second-order three-point formula on the neighbouring snapshots.
    pub fn reduced_ode_residual(&self, m: usize) -> Result<f64> {
        if m == 0 || m + 1 >= self.len() {
            return Err(ScatterError::InvalidArgument(format!(
                "reduced ODE residual needs an interior snapshot, got index {m} of {}",
                self.len()
            )));
        }
        let (t0, t1, t2) = (self.times[m - 1], self.times[m], self.times[m + 1]);
        let (h0, h1) = (t1 - t0, t2 - t1);
        let c0 = -h1 / (h0 * (h0 + h1));
        let c1 = (h1 - h0) / (h0 * h1);
        let c2 = h0 / (h1 * (h0 + h1));
        let input = TrilinearInput::new(self.f_hat[m].clone(), self.g_hat[m].clone(), t1)?;
        let r = remainder_physical(&input)?;
        let b = self.phase_g.factor(m);
        let w = &self.w_f;
        let samples = (0..r.samples().len())
            .map(|k| {
                let dw = c0 * w[m - 1].samples()[k]
                    + c1 * w[m].samples()[k]
                    + c2 * w[m + 1].samples()[k];
                dw - b.samples()[k] * r.samples()[k]
            })
            .collect();
        Ok(norm_l2(&ComplexField::spectral(
            &r.grid().clone(),
            samples,
        )?))
    }
}

pub fn reduced_ode_residual(traj: &Trajectory, m: usize) -> Result<f64> {
    TrajectoryAnalysis::new(traj)?.reduced_ode_residual(m)
}

/// Scattering data of one component, anchored at the last snapshot.
#[derive(Debug, Clone)]
pub struct ScatteringEstimate {
    /// `W = ŵ(t_max)`.
    pub w: ComplexField,
    /// `Γ = γ(t_max)` per frequency.
    pub gamma_limit: Vec<f64>,
    /// `(t, ‖ŵ(t) - W‖_{L^∞})` for every snapshot before the anchor.
    pub linf_distance: Vec<(f64, f64)>,
    /// `(t, ‖ŵ(t) - W‖_{H^{0,n}})` for every snapshot before the anchor.
    pub h0n_distance: Vec<(f64, f64)>,
    /// `(t, ‖ŵ(2t) - ŵ(t)‖_{L^∞})` wherever the schedule contains `2t`.
    pub cauchy: Vec<(f64, f64)>,
    pub linf_fit: Option<RateFit>,
    pub h0n_fit: Option<RateFit>,
    /// Time window covered by the series.
    pub window: (f64, f64),
    /// Window used by the fits.
    pub fit_window: (f64, f64),
}

/// `γ(t_m) = ∫₁^{t_m} (|ŵ(τ)|² - |ŵ(t_m)|²) dτ/τ` for every snapshot, by
/// direct trapezoid quadrature in `ln τ`; the last row is `Γ`.
pub fn gamma(series: &[(f64, ComplexField)]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if series.is_empty() {
        return Err(ScatterError::EmptySeries);
    }
    check_times(series.iter().map(|p| p.0))?;
    let sq: Vec<Vec<f64>> = series
        .iter()
        .map(|p| p.1.samples().iter().map(|z| z.norm_sqr()).collect())
        .collect();
    let n = sq[0].len();
    let rows: Vec<Vec<f64>> = (0..series.len())
        .into_par_iter()
        .map(|m| {
            let current = &sq[m];
            let mut row = vec![0.0; n];
            for j in 1..=m {
                let h = 0.5 * (series[j].0.ln() - series[j - 1].0.ln());
                for k in 0..n {
                    row[k] += h * ((sq[j - 1][k] - current[k]) + (sq[j][k] - current[k]));
                }
            }
            row
        })
        .collect();
    let limit = rows.last().expect("nonempty").clone();
    Ok((rows, limit))
}

fn positive_fit(series: &[(f64, f64)]) -> Option<RateFit> {
    let pos: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.1 > 0.0).collect();
    if pos.len() < MIN_FIT_SAMPLES || pos.len() < series.len() {
        return None;
    }
    fit_rate(&pos).ok()
}

/// Relative size below which `ŵ` counts as constant in time.
pub const STATIONARY_TOLERANCE: f64 = 1e-12;

/// Anchors `W = ŵ(t_max)` and measures the approach to it.
///
/// Fits use snapshots with `fit_from ≤ t ≤ t_max/4`, away from the anchor's
/// artificial zero. Fits are `None` when every distance is below
/// `STATIONARY_TOLERANCE` relative to `‖W‖_∞`, as for decoupled data.
pub fn estimate_limit(
    series: &[(f64, ComplexField)],
    n: u32,
    fit_from: f64,
) -> Result<ScatteringEstimate> {
    if series.len() < MIN_FIT_SAMPLES {
        return Err(ScatterError::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            found: series.len(),
        });
    }
    check_times(series.iter().map(|p| p.0))?;
    let t_lo = series[0].0;
    let t_hi = series[series.len() - 1].0;
    if t_hi < 10.0 * t_lo {
        return Err(ScatterError::WindowTooShort {
            t_lo,
            t_hi,
            decades: 1.0,
        });
    }
    let w = series[series.len() - 1].1.clone();
    let before = &series[..series.len() - 1];
    let differences: Vec<(f64, ComplexField)> = before
        .par_iter()
        .map(|(t, wt)| Ok((*t, wt.sub(&w)?)))
        .collect::<Result<_>>()?;
    let scale = norm_linf(&w);
    let stationary = differences
        .iter()
        .all(|(_, d)| norm_linf(d) <= STATIONARY_TOLERANCE * scale);
    let distances: Vec<(f64, f64, f64)> = differences
        .par_iter()
        .map(|(t, d)| {
            let h0n = if stationary {
                (0..=n).map(|i| weighted_l2(d, i)).sum()
            } else {
                norm_h0n(d, n)
            };
            (*t, norm_linf(d), h0n)
        })
        .collect();
    let linf_distance: Vec<(f64, f64)> = distances.iter().map(|d| (d.0, d.1)).collect();
    let h0n_distance: Vec<(f64, f64)> = distances.iter().map(|d| (d.0, d.2)).collect();

    let mut cauchy = Vec::new();
    for (m, (t, wt)) in series.iter().enumerate() {
        let target = 2.0 * t;
        if let Some((_, w2)) = series[m + 1..]
            .iter()
            .find(|p| (p.0 - target).abs() <= 1e-9 * target)
        {
            cauchy.push((*t, norm_linf(&w2.sub(wt)?)));
        }
    }

    let fit_hi = t_hi / 4.0;
    let in_window = |s: &[(f64, f64)]| -> Vec<(f64, f64)> {
        s.iter()
            .copied()
            .filter(|p| p.0 >= fit_from * (1.0 - 1e-12) && p.0 <= fit_hi * (1.0 + 1e-12))
            .collect()
    };
    let (_, gamma_limit) = gamma(series)?;
    Ok(ScatteringEstimate {
        w,
        gamma_limit,
        linf_fit: if stationary {
            None
        } else {
            positive_fit(&in_window(&linf_distance))
        },
        h0n_fit: if stationary {
            None
        } else {
            positive_fit(&in_window(&h0n_distance))
        },
        linf_distance,
        h0n_distance,
        cauchy,
        window: (t_lo, t_hi),
        fit_window: (fit_from, fit_hi),
    })
}

/// `(2it)^{-1/2} W(x/2t) exp(ix²/4t - i·c·(|W_o|²(x/2t)·ln t + Γ_o(x/2t)))`
/// where `o` is the other component.
pub fn asymptotic_profile(
    own: &ScatteringEstimate,
    other: &ScatteringEstimate,
    t: f64,
) -> Result<ComplexField> {
    own.w.check_compatible(&other.w)?;
    let ln_t = t.ln();
    let samples = own
        .w
        .samples()
        .iter()
        .zip(other.w.samples())
        .zip(&other.gamma_limit)
        .map(|((&w, &wo), &g)| {
            w * Complex64::from_polar(1.0, -PHASE_COEFFICIENT * (wo.norm_sqr() * ln_t + g))
        })
        .collect();
    let z_hat = ComplexField::spectral(own.w.grid(), samples)?;
    ray_profile(&z_hat, t)
}

/// `(‖u(t) - u_asym(t)‖_{L^∞}, ‖v(t) - v_asym(t)‖_{L^∞})`.
pub fn asymptotic_residual(
    state: &PairState,
    est_f: &ScatteringEstimate,
    est_g: &ScatteringEstimate,
) -> Result<(f64, f64)> {
    let u_asym = asymptotic_profile(est_f, est_g, state.t)?;
    let v_asym = asymptotic_profile(est_g, est_f, state.t)?;
    Ok((
        norm_linf(&state.u.sub(&u_asym)?),
        norm_linf(&state.v.sub(&v_asym)?),
    ))
}

/// One side of an interpolation inequality, with the constant folded into
/// `rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
}

impl InequalityCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }
}

fn power_weighted(f: &ComplexField, power: u32) -> ComplexField {
    let coords = f.coordinates();
    let samples = f
        .samples()
        .iter()
        .zip(&coords)
        .map(|(z, c)| z * c.abs().powi(power as i32))
        .collect();
    ComplexField::new(f.grid(), samples, f.side()).expect("same grid")
}

/// Constant of `‖f‖_{L¹} ≤ C‖f‖^{1/2}_{L²}‖ξf‖^{1/2}_{L²}` obtained by
/// splitting at `|ξ| = M` and applying Cauchy-Schwarz on each piece. The sharp
/// constant is `√(2π)`; a Gaussian already needs more than 2.
pub const L1_EMBEDDING_CONSTANT: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Evaluates, in the field's own variable `ξ`:
///
/// * `‖f‖_{L¹} ≤ C‖f‖^{1/2}_{L²}‖ξf‖^{1/2}_{L²}` with [`L1_EMBEDDING_CONSTANT`];
/// * the chain bounding `‖ξⁿf‖_{L²}` by `‖f‖^{1/2}_{L^∞}‖f‖^{1/2}_{H^{0,2n+1}}`:
///   `‖ξⁿf‖²_{L²} ≤ ‖f‖_{L^∞}‖ξ^{2n}f‖_{L¹}`, then the first inequality
///   applied to `ξ^{2n}f`, then `‖ξ^{2n}f‖^{1/2}‖ξ^{2n+1}f‖^{1/2} ≤ ‖f‖_{H^{0,2n+1}}`,
///   which combine to the constant `C^{1/2}`.
pub fn interpolation_inequalities_check(f: &ComplexField, n: u32) -> Vec<InequalityCheck> {
    let l1 = norm_l1(f);
    let l2 = norm_l2(f);
    let first = weighted_l2(f, 1);
    let mut checks = vec![InequalityCheck {
        name: "l1",
        lhs: l1,
        rhs: L1_EMBEDDING_CONSTANT * (l2 * first).sqrt(),
        constant: L1_EMBEDDING_CONSTANT,
    }];
    let linf = norm_linf(f);
    let heavy = power_weighted(f, 2 * n);
    let heavy_l1 = norm_l1(&heavy);
    let w2n = weighted_l2(f, 2 * n);
    let w2n1 = weighted_l2(f, 2 * n + 1);
    let h0 = norm_h0n(f, 2 * n + 1);
    let target = weighted_l2(f, n);
    checks.push(InequalityCheck {
        name: "moment",
        lhs: target * target,
        rhs: linf * heavy_l1,
        constant: 1.0,
    });
    checks.push(InequalityCheck {
        name: "l1-weighted",
        lhs: heavy_l1,
        rhs: L1_EMBEDDING_CONSTANT * (w2n * w2n1).sqrt(),
        constant: L1_EMBEDDING_CONSTANT,
    });
    checks.push(InequalityCheck {
        name: "mean",
        lhs: (w2n * w2n1).sqrt(),
        rhs: h0,
        constant: 1.0,
    });
    checks.push(InequalityCheck {
        name: "weighted-l2",
        lhs: target,
        rhs: L1_EMBEDDING_CONSTANT.sqrt() * (linf * h0).sqrt(),
        constant: L1_EMBEDDING_CONSTANT.sqrt(),
    });
    checks
}

/// One CSV row per snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotRow {
    pub t: f64,
    pub u_linf: f64,
    pub v_linf: f64,
    pub wf_linf: f64,
    pub wg_linf: f64,
    pub wf_h0n: f64,
    pub wg_h0n: f64,
    /// `None` where `x/2t` leaves the frequency grid.
    pub u_asymptotic: Option<f64>,
    pub v_asymptotic: Option<f64>,
    pub mass_u: f64,
    pub mass_v: f64,
}

pub const SNAPSHOT_COLUMNS: [&str; 11] = [
    "t",
    "u_linf",
    "v_linf",
    "wf_minus_Wf_linf",
    "wg_minus_Wg_linf",
    "wf_minus_Wf_h0n",
    "wg_minus_Wg_h0n",
    "u_asymptotic_residual",
    "v_asymptotic_residual",
    "mass_u",
    "mass_v",
];

pub fn snapshot_rows(
    traj: &Trajectory,
    analysis: &TrajectoryAnalysis,
    est_f: &ScatteringEstimate,
    est_g: &ScatteringEstimate,
    n: u32,
) -> Result<Vec<SnapshotRow>> {
    traj.snapshots
        .par_iter()
        .enumerate()
        .map(|(m, s)| {
            let df = analysis.w_f[m].sub(&est_f.w)?;
            let dg = analysis.w_g[m].sub(&est_g.w)?;
            let (u_asymptotic, v_asymptotic) = match asymptotic_residual(s, est_f, est_g) {
                Ok((a, b)) => (Some(a), Some(b)),
                Err(ScatterError::OutOfRange(_)) => (None, None),
                Err(e) => return Err(e),
            };
            let (mass_u, mass_v) = s.masses();
            Ok(SnapshotRow {
                t: s.t,
                u_linf: norm_linf(&s.u),
                v_linf: norm_linf(&s.v),
                wf_linf: norm_linf(&df),
                wg_linf: norm_linf(&dg),
                wf_h0n: norm_h0n(&df, n),
                wg_h0n: norm_h0n(&dg, n),
                u_asymptotic,
                v_asymptotic,
                mass_u,
                mass_v,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::leading_split;
    use crate::solver::{evolve, initial_state, InitialData};
    use crate::spectral::AnalysisParams;

    fn coupled(eps: f64, t_end: f64, sched: &[f64]) -> Trajectory {
        let g = Grid1D::new(160.0, 1024).unwrap();
        let s = initial_state(
            &g,
            &InitialData::gaussian(eps, 2.0),
            &InitialData::modulated(eps, 2.5, 0.3),
        );
        evolve(&s, AnalysisParams::default(), t_end, 0.01, sched).unwrap()
    }

    fn linear(t_end: f64, sched: &[f64]) -> Trajectory {
        let g = Grid1D::new(600.0, 4096).unwrap();
        let s = initial_state(
            &g,
            &InitialData::gaussian(0.3, 2.0),
            &InitialData::gaussian(0.0, 2.0),
        );
        evolve(&s, AnalysisParams::default(), t_end, 0.05, sched).unwrap()
    }

    #[test]
    fn profile_round_trip() {
        let traj = coupled(0.2, 2.0, &[]);
        let s = traj.snapshots.last().unwrap();
        let (f, g) = profile(s).unwrap();
        assert!(norm_linf(&free_evolve(&f, s.t).sub(&s.u).unwrap()) < 1e-12);
        assert!(norm_linf(&free_evolve(&g, s.t).sub(&s.v).unwrap()) < 1e-12);
        let (f_hat, _) = profile_hat(s).unwrap();
        assert!(norm_linf(&fourier_forward(&f).unwrap().sub(&f_hat).unwrap()) < 1e-12);
    }

    #[test]
    fn linear_profile_is_static() {
        let traj = linear(4.0, &[2.0]);
        let a = TrajectoryAnalysis::new(&traj).unwrap();
        for m in 1..a.len() {
            assert!(norm_linf(&a.f_hat[m].sub(&a.f_hat[0]).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn constant_modulus_integrates_to_log() {
        let g = Grid1D::new(10.0, 8).unwrap();
        let times: Vec<f64> = (0..9).map(|k| 2f64.powf(k as f64 / 2.0)).collect();
        let sq = vec![vec![0.7; 8]; times.len()];
        let acc = PhaseAccumulator::from_moduli(&g, Source::V, &times, &sq).unwrap();
        for (m, &t) in times.iter().enumerate() {
            assert!((acc.phase(m)[3] - 0.7 * t.ln()).abs() < 1e-14);
        }
        assert!(acc.quadrature_error() < 1e-14);
    }

    #[test]
    fn richardson_tracks_trapezoid_error() {
        // ∫₁ᵗ s^{-1}·s^{-1/2} ds = 2(1 - t^{-1/2})
        let g = Grid1D::new(10.0, 8).unwrap();
        let errs: Vec<f64> = [4, 8]
            .iter()
            .map(|&per_octave| {
                let times: Vec<f64> = (0..=4 * per_octave)
                    .map(|k| 2f64.powf(k as f64 / per_octave as f64))
                    .collect();
                let sq: Vec<Vec<f64>> = times.iter().map(|t| vec![t.powf(-0.5); 8]).collect();
                let acc = PhaseAccumulator::from_moduli(&g, Source::U, &times, &sq).unwrap();
                let t = *times.last().unwrap();
                let exact = 2.0 * (1.0 - t.powf(-0.5));
                let err = (acc.phase(times.len() - 1)[0] - exact).abs();
                let est = acc.richardson.last().unwrap().1;
                assert!((est - err).abs() < 0.05 * err, "{est} vs {err}");
                err
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn accumulator_validation() {
        let g = Grid1D::new(10.0, 8).unwrap();
        let sq = vec![vec![1.0; 8]; 3];
        assert!(PhaseAccumulator::from_moduli(&g, Source::U, &[1.0, 3.0, 2.0], &sq).is_err());
        assert!(PhaseAccumulator::from_moduli(&g, Source::U, &[1.0], &sq[..1]).is_err());
        assert!(PhaseAccumulator::from_moduli(&g, Source::U, &[2.0, 3.0, 4.0], &sq).is_err());
    }

    #[test]
    fn zero_trajectory_has_trivial_phase() {
        let traj = coupled(0.0, 2.0, &[1.5]);
        let (af, ag) = accumulate_phase(&traj).unwrap();
        for acc in [&af, &ag] {
            assert!(acc.values.iter().flatten().all(|&p| p == 0.0));
            assert!(acc
                .factor(2)
                .samples()
                .iter()
                .all(|z| *z == Complex64::new(1.0, 0.0)));
        }
    }

    #[test]
    fn phase_is_monotone() {
        let traj = coupled(0.3, 3.0, &[1.25, 1.5, 2.0, 2.5]);
        let (af, ag) = accumulate_phase(&traj).unwrap();
        for acc in [af, ag] {
            for w in acc.values.windows(2) {
                assert!(w[0].iter().zip(&w[1]).all(|(a, b)| b >= a));
            }
        }
    }

    #[test]
    fn explicit_phase_flips_sign() {
        let g = Grid1D::new(10.0, 8).unwrap();
        let f = ComplexField::from_fn(&g, Side::Spectral, |xi| Complex64::new(1.0 + xi, 0.5));
        let mut phase = vec![0.0; 8];
        phase[2] = std::f64::consts::PI / PHASE_COEFFICIENT;
        let w = apply_phase(&f, &phase).unwrap();
        assert!((w.samples()[2] + f.samples()[2]).norm() < 1e-14);
        assert_eq!(w.samples()[3], f.samples()[3]);
        assert_eq!(apply_phase(&f, &[0.0; 8]).unwrap(), f);
    }

    #[test]
    fn corrected_profile_keeps_modulus() {
        let traj = coupled(0.3, 3.0, &[1.5, 2.0]);
        let a = TrajectoryAnalysis::new(&traj).unwrap();
        assert!(a.modulus_defect() < 1e-12);
    }

    #[test]
    fn reduced_ode_linear_case() {
        let traj = linear(3.0, &[1.5, 2.0, 2.5]);
        let a = TrajectoryAnalysis::new(&traj).unwrap();
        assert!(a.reduced_ode_residual(2).unwrap() < 1e-12);
        assert!(a.reduced_ode_residual(0).is_err());
        assert!(a.reduced_ode_residual(a.len() - 1).is_err());
    }

    #[test]
    fn reduced_ode_second_order() {
        let t = 2.0;
        let res: Vec<f64> = [0.2, 0.1]
            .iter()
            .map(|&h| {
                let traj = coupled(0.3, 2.5, &[t - h, t, t + h]);
                let m = traj.index_near(t).unwrap();
                reduced_ode_residual(&traj, m).unwrap()
            })
            .collect();
        let ratio = res[0] / res[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio} from {res:?}");
    }

    fn synthetic_series(f: impl Fn(f64) -> f64) -> Vec<(f64, ComplexField)> {
        let g = Grid1D::new(10.0, 8).unwrap();
        (0..=40)
            .map(|k| {
                let t = 2f64.powf(k as f64 / 8.0);
                let v = f(t).sqrt();
                (
                    t,
                    ComplexField::from_fn(&g, Side::Spectral, |_| Complex64::new(0.0, v)),
                )
            })
            .collect()
    }

    #[test]
    fn gamma_vanishes_for_constant_modulus() {
        let (rows, limit) = gamma(&synthetic_series(|_| 2.0)).unwrap();
        assert!(rows.iter().flatten().all(|g| g.abs() < 1e-14));
        assert!(limit.iter().all(|g| g.abs() < 1e-14));
    }

    #[test]
    fn gamma_matches_antiderivative() {
        let (c, b) = (0.4, 0.3);
        let series = synthetic_series(|t| c + b / t);
        let (rows, _) = gamma(&series).unwrap();
        for (m, (t, _)) in series.iter().enumerate() {
            let exact = b * (1.0 - 1.0 / t) - b * t.ln() / t;
            assert!((rows[m][0] - exact).abs() < 2e-3 * b, "t = {t}");
        }
    }

    #[test]
    fn gamma_identity_with_phase() {
        let traj = coupled(0.3, 3.0, &[1.25, 1.5, 2.0, 2.5]);
        let a = TrajectoryAnalysis::new(&traj).unwrap();
        let (rows, _) = gamma(&a.w_g_series()).unwrap();
        for (m, &t) in a.times.iter().enumerate() {
            for (k, z) in a.w_g[m].samples().iter().enumerate() {
                let lhs = rows[m][k] + z.norm_sqr() * t.ln();
                assert!((lhs - a.phase_g.phase(m)[k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn estimate_requires_a_decade() {
        let series = synthetic_series(|_| 1.0);
        assert!(matches!(
            estimate_limit(&series[..20], 1, 1.0),
            Err(ScatterError::WindowTooShort { .. })
        ));
        let est = estimate_limit(&series, 1, 1.0).unwrap();
        assert!(est.linf_distance.iter().all(|d| d.1 == 0.0));
        assert!(est.cauchy.iter().all(|d| d.1 == 0.0));
        assert!(est.linf_fit.is_none());
        assert_eq!(est.cauchy.len(), 33);
    }

    #[test]
    fn linear_limit_and_asymptotics() {
        let sched: Vec<f64> = (0..=20).map(|k| 2f64.powf(k as f64 / 4.0)).collect();
        let traj = linear(32.0, &sched);
        let a = TrajectoryAnalysis::new(&traj).unwrap();
        let est_f = estimate_limit(&a.w_f_series(), 1, 1.0).unwrap();
        let est_g = estimate_limit(&a.w_g_series(), 1, 1.0).unwrap();
        let expected = free_evolve(&a.u_hat[0], -1.0);
        assert!(norm_linf(&est_f.w.sub(&expected).unwrap()) < 1e-12);
        let s = traj.snapshots.last().unwrap();
        let (ru, rv) = asymptotic_residual(s, &est_f, &est_g).unwrap();
        assert_eq!(rv, 0.0);
        // u(t) = e^{i(t-1)∂xx}u₁ = e^{it∂xx}f, and the formula is its leading term
        let (f, _) = profile(s).unwrap();
        let lead = leading_split(&f, s.t).unwrap();
        assert!((ru - norm_linf(&lead.remainder)).abs() < 1e-12);
    }

    #[test]
    fn inequalities_on_gaussian() {
        let g = Grid1D::new(40.0, 512).unwrap();
        let f = ComplexField::from_fn(&g, Side::Spectral, |x| {
            Complex64::new((-x * x / 2.0).exp(), 0.0)
        });
        for n in 0..3 {
            for c in interpolation_inequalities_check(&f, n) {
                assert!(c.holds(), "{c:?}");
            }
        }
        let l1 = &interpolation_inequalities_check(&f, 0)[0];
        assert!((l1.lhs - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
        // ‖f‖_{L¹} / (‖f‖_{L²}‖ξf‖_{L²})^{1/2} = 2^{3/4}·π^{1/4} for this Gaussian
        let ratio = l1.lhs * l1.constant / l1.rhs;
        assert!((ratio - 2f64.powf(0.75) * std::f64::consts::PI.powf(0.25)).abs() < 1e-8);
    }

    #[test]
    fn inequalities_scale_with_amplitude() {
        let g = Grid1D::new(16.0, 64).unwrap();
        let mut f = ComplexField::zeros(&g, Side::Spectral);
        f.samples_mut()[40] = Complex64::new(1.0, 0.0);
        let base = interpolation_inequalities_check(&f, 1);
        let big = interpolation_inequalities_check(&f.scale(Complex64::new(5.0, 0.0)), 1);
        assert!(((big[0].lhs / base[0].lhs) - 5.0).abs() < 1e-12);
        assert!(((big[0].rhs / base[0].rhs) - 5.0).abs() < 1e-12);
        assert!(base.iter().all(InequalityCheck::holds));
    }
}
