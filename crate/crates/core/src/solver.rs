//! Strang-split time integration of
//!
//! ```text
//! i∂_t u + ∂_xx u = |v|² u,
//! i∂_t v + ∂_xx v = |u|² v,      u(1) = u₁, v(1) = v₁.
//! ```

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Result, ScatterError};
use crate::propagator::free_evolve;
use crate::spectral::{
    edge_amplitude, fourier_forward, norm_l2, norm_linf, AnalysisParams, ComplexField, Grid1D, Side,
};

/// Boundary amplitude, relative to the peak, at which a run is aborted.
pub const WRAP_LIMIT: f64 = 1e-6;
/// Largest relative mass drift tolerated over a run.
pub const MASS_DRIFT_LIMIT: f64 = 1e-10;
/// Spectral and spatial cutoff used by the domain sizing rule.
pub const SIZING_CUTOFF: f64 = 1e-12;
/// Target for `dt · max(‖u₁‖²_∞, ‖v₁‖²_∞)`.
pub const PHASE_PER_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    pub u: ComplexField,
    pub v: ComplexField,
    pub t: f64,
}

impl PairState {
    pub fn new(u: ComplexField, v: ComplexField, t: f64) -> Result<Self> {
        u.expect_side(Side::Physical)?;
        v.check_compatible(&u)?;
        Ok(PairState { u, v, t })
    }

    pub fn grid(&self) -> &Grid1D {
        self.u.grid()
    }

    /// `(‖u‖²_{L²}, ‖v‖²_{L²})`.
    pub fn masses(&self) -> (f64, f64) {
        (norm_l2(&self.u).powi(2), norm_l2(&self.v).powi(2))
    }

    /// The same state with the roles of `u` and `v` exchanged.
    pub fn swapped(&self) -> PairState {
        PairState {
            u: self.v.clone(),
            v: self.u.clone(),
            t: self.t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverMeta {
    pub dt: f64,
    pub order: u32,
}

/// Snapshots of one run, the first at `t = 1`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub params: AnalysisParams,
    pub snapshots: Vec<PairState>,
    pub meta: SolverMeta,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        self.snapshots.last().map_or(1.0, |s| s.t)
    }

    /// Index of the snapshot closest to `t`.
    pub fn index_near(&self, t: f64) -> Option<usize> {
        self.snapshots
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1.t - t)
                    .abs()
                    .partial_cmp(&(b.1.t - t).abs())
                    .expect("finite times")
            })
            .map(|(i, _)| i)
    }

    /// The trajectory with `u` and `v` exchanged in every snapshot.
    pub fn swapped(&self) -> Trajectory {
        Trajectory {
            grid: self.grid.clone(),
            params: self.params,
            snapshots: self.snapshots.iter().map(PairState::swapped).collect(),
            meta: self.meta,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.snapshots
            .iter()
            .all(|s| s.u.is_zero() && s.v.is_zero())
    }
}

/// Exact flow of the potential part over `dt`: each component is rotated by
/// the other's modulus, frozen at entry.
pub fn nonlinear_substep(state: &PairState, dt: f64) -> PairState {
    let mut u = state.u.clone();
    let mut v = state.v.clone();
    rotate_pair(u.samples_mut(), v.samples_mut(), dt);
    PairState { u, v, t: state.t }
}

fn rotate_pair(u: &mut [Complex64], v: &mut [Complex64], dt: f64) {
    for (a, b) in u.iter_mut().zip(v.iter_mut()) {
        let ua = a.norm_sqr();
        let vb = b.norm_sqr();
        *a *= Complex64::from_polar(1.0, -vb * dt);
        *b *= Complex64::from_polar(1.0, -ua * dt);
    }
}

/// One Strang step: half linear, full nonlinear, half linear.
pub fn strang_step(state: &PairState, dt: f64) -> PairState {
    let half = PairState {
        u: free_evolve(&state.u, 0.5 * dt),
        v: free_evolve(&state.v, 0.5 * dt),
        t: state.t,
    };
    let rotated = nonlinear_substep(&half, dt);
    PairState {
        u: free_evolve(&rotated.u, 0.5 * dt),
        v: free_evolve(&rotated.v, 0.5 * dt),
        t: state.t + dt,
    }
}

/// Geometric times `t0·ratio^m` inside `[1, t_end]`, plus `1` and `t_end`.
pub fn geometric_schedule(t0: f64, ratio: f64, t_end: f64) -> Result<Vec<f64>> {
    if !(ratio > 1.0 && t0 >= 1.0 && t_end >= 1.0) {
        return Err(ScatterError::InvalidArgument(format!(
            "schedule needs ratio > 1, t0 >= 1, t_end >= 1 (got {ratio}, {t0}, {t_end})"
        )));
    }
    let mut times = vec![1.0];
    let mut m = 0;
    loop {
        let t = t0 * ratio.powi(m);
        if t > t_end * (1.0 + 1e-12) {
            break;
        }
        times.push(t);
        m += 1;
    }
    times.push(t_end);
    Ok(normalize_schedule(times))
}

fn normalize_schedule(mut times: Vec<f64>) -> Vec<f64> {
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        match out.last() {
            Some(&last) if (t - last).abs() <= 1e-12 * t.abs().max(1.0) => {}
            _ => out.push(t),
        }
    }
    out
}

/// Result of the domain sizing rule `L ≥ 4·ξ_max·t_end + L_data`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSizing {
    pub xi_max: f64,
    pub data_extent: f64,
    pub required_length: f64,
}

fn spectral_cutoff(field: &ComplexField) -> Result<Option<f64>> {
    let spec = fourier_forward(field)?;
    let peak = norm_linf(&spec);
    if peak == 0.0 {
        return Ok(None);
    }
    let grid = field.grid();
    let xi = spec
        .samples()
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() >= SIZING_CUTOFF * peak)
        .map(|(i, _)| grid.freq(i).abs())
        .fold(0.0, f64::max);
    Ok(Some(xi + grid.dxi()))
}

fn spatial_extent(field: &ComplexField) -> Option<(f64, f64)> {
    let peak = norm_linf(field);
    if peak == 0.0 {
        return None;
    }
    let grid = field.grid();
    let mut idx = field
        .samples()
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() >= SIZING_CUTOFF * peak)
        .map(|(j, _)| j);
    let first = idx.next()?;
    let last = idx.next_back().unwrap_or(first);
    Some((grid.node(first), grid.node(last)))
}

pub fn domain_sizing(u1: &ComplexField, v1: &ComplexField, t_end: f64) -> Result<DomainSizing> {
    let mut xi_max: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for f in [u1, v1] {
        if let Some(xi) = spectral_cutoff(f)? {
            xi_max = xi_max.max(xi);
        }
        if let Some((a, b)) = spatial_extent(f) {
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    let data_extent = if hi >= lo { hi - lo } else { 0.0 };
    Ok(DomainSizing {
        xi_max,
        data_extent,
        required_length: 4.0 * xi_max * t_end + data_extent,
    })
}

/// Step size from the rule `dt · max(‖u₁‖²_∞, ‖v₁‖²_∞) ≤ 10⁻³`, capped at `cap`.
pub fn recommended_dt(u1: &ComplexField, v1: &ComplexField, cap: f64) -> f64 {
    let peak = norm_linf(u1).max(norm_linf(v1));
    if peak == 0.0 {
        cap
    } else {
        cap.min(PHASE_PER_STEP / (peak * peak))
    }
}

fn check_edges(state: &PairState) -> Result<()> {
    for f in [&state.u, &state.v] {
        let peak = norm_linf(f);
        if peak == 0.0 {
            continue;
        }
        let edge = edge_amplitude(f);
        if edge > WRAP_LIMIT * peak {
            return Err(ScatterError::WrapAround {
                t: state.t,
                edge,
                limit: WRAP_LIMIT * peak,
            });
        }
        if edge > crate::spectral::EDGE_WARN_RATIO * peak {
            log::warn!("edge amplitude {:e} at t = {}", edge / peak, state.t);
        }
    }
    Ok(())
}

fn relative_drift(now: f64, start: f64) -> f64 {
    if start == 0.0 {
        now
    } else {
        (now - start).abs() / start
    }
}

/// Split-step integrator working on raw FFT buffers; adjacent linear half
/// steps are fused.
struct Stepper {
    grid: Grid1D,
    raw_xi2: Vec<f64>,
    cache: HashMap<u64, Vec<Complex64>>,
}

impl Stepper {
    fn new(grid: &Grid1D) -> Self {
        Stepper {
            grid: grid.clone(),
            raw_xi2: grid.raw_freqs().iter().map(|x| x * x).collect(),
            cache: HashMap::new(),
        }
    }

    fn multiplier(&mut self, tau: f64) -> &[Complex64] {
        let n = self.grid.len() as f64;
        let raw_xi2 = &self.raw_xi2;
        self.cache.entry(tau.to_bits()).or_insert_with(|| {
            raw_xi2
                .iter()
                .map(|&k2| Complex64::from_polar(1.0 / n, -tau * k2))
                .collect()
        })
    }

    // `buf` holds an unnormalized spectrum; the 1/N of the inverse transform
    // is folded into the multiplier, so each linear stage is paired with
    // exactly one inverse transform.
    fn linear(&mut self, buf: &mut [Complex64], tau: f64) {
        let m = self.multiplier(tau);
        for (z, w) in buf.iter_mut().zip(m) {
            *z *= w;
        }
    }

    /// Advances `(u, v)` through the given steps.
    fn advance(&mut self, u: &mut [Complex64], v: &mut [Complex64], steps: &[f64]) {
        let Some((&first, _)) = steps.split_first() else {
            return;
        };
        self.grid.fft_forward(u);
        self.grid.fft_forward(v);
        let mut tau = 0.5 * first;
        for (i, &h) in steps.iter().enumerate() {
            self.linear(u, tau);
            self.linear(v, tau);
            self.grid.fft_inverse(u);
            self.grid.fft_inverse(v);
            rotate_pair(u, v, h);
            self.grid.fft_forward(u);
            self.grid.fft_forward(v);
            tau = match steps.get(i + 1) {
                Some(&next) => 0.5 * (h + next),
                None => 0.5 * h,
            };
        }
        // closing half step; the multiplier's 1/N pairs with this inverse
        self.linear(u, tau);
        self.linear(v, tau);
        self.grid.fft_inverse(u);
        self.grid.fft_inverse(v);
    }
}

// Splits [t_a, t_b] into steps of `dt`, shortening the last one.
fn segment_steps(t_a: f64, t_b: f64, dt: f64) -> Vec<f64> {
    let span = t_b - t_a;
    if span <= 0.0 {
        return Vec::new();
    }
    let full = (span / dt * (1.0 - 1e-12)).floor() as usize;
    let mut steps = vec![dt; full];
    let rest = span - full as f64 * dt;
    if rest > 1e-12 * dt {
        steps.push(rest);
    } else if let Some(last) = steps.last_mut() {
        *last += rest;
    }
    steps
}

/// Integrates from `initial` (at `t = 1`) to `t_end`, recording snapshots at
/// the scheduled times. `t = 1` and `t_end` are always recorded.
pub fn evolve(
    initial: &PairState,
    params: AnalysisParams,
    t_end: f64,
    dt: f64,
    schedule: &[f64],
) -> Result<Trajectory> {
    if initial.t != 1.0 {
        return Err(ScatterError::InvalidArgument(format!(
            "initial data must be given at t = 1, got {}",
            initial.t
        )));
    }
    if !(t_end > 1.0) || !(dt > 0.0) {
        return Err(ScatterError::InvalidArgument(format!(
            "need t_end > 1 and dt > 0 (got {t_end}, {dt})"
        )));
    }
    if let Some(&bad) = schedule.iter().find(|&&t| !(1.0..=t_end).contains(&t)) {
        return Err(ScatterError::InvalidArgument(format!(
            "snapshot time {bad} outside [1, {t_end}]"
        )));
    }
    let grid = initial.grid().clone();
    let sizing = domain_sizing(&initial.u, &initial.v, t_end)?;
    if sizing.required_length > grid.length() {
        return Err(ScatterError::DomainTooSmall {
            length: grid.length(),
            t_end,
            required: sizing.required_length,
        });
    }

    let mut times = schedule.to_vec();
    times.push(1.0);
    times.push(t_end);
    let times = normalize_schedule(times);

    let (mass_u0, mass_v0) = initial.masses();
    let mut stepper = Stepper::new(&grid);
    let mut u = initial.u.samples().to_vec();
    let mut v = initial.v.samples().to_vec();
    let mut snapshots = vec![initial.clone()];
    check_edges(initial)?;

    for pair in times.windows(2) {
        let steps = segment_steps(pair[0], pair[1], dt);
        stepper.advance(&mut u, &mut v, &steps);
        let state = PairState {
            u: ComplexField::physical(&grid, u.clone())?,
            v: ComplexField::physical(&grid, v.clone())?,
            t: pair[1],
        };
        check_edges(&state)?;
        let (mu, mv) = state.masses();
        let drift = relative_drift(mu, mass_u0).max(relative_drift(mv, mass_v0));
        if drift > MASS_DRIFT_LIMIT {
            return Err(ScatterError::MassDrift {
                t: state.t,
                drift,
                limit: MASS_DRIFT_LIMIT,
            });
        }
        snapshots.push(state);
    }

    Ok(Trajectory {
        grid,
        params,
        snapshots,
        meta: SolverMeta { dt, order: 2 },
    })
}

/// Shapes available for initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataShape {
    Gaussian,
    Sech,
    Modulated,
}

impl std::str::FromStr for DataShape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(DataShape::Gaussian),
            "sech" => Ok(DataShape::Sech),
            "modulated" => Ok(DataShape::Modulated),
            other => Err(format!("unknown data shape '{other}'")),
        }
    }
}

impl DataShape {
    pub fn name(&self) -> &'static str {
        match self {
            DataShape::Gaussian => "gaussian",
            DataShape::Sech => "sech",
            DataShape::Modulated => "modulated",
        }
    }
}

/// One component of the initial data; `epsilon` is the peak amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialData {
    pub shape: DataShape,
    pub epsilon: f64,
    pub width: f64,
    pub carrier: f64,
}

impl InitialData {
    pub fn gaussian(epsilon: f64, width: f64) -> Self {
        InitialData {
            shape: DataShape::Gaussian,
            epsilon,
            width,
            carrier: 0.0,
        }
    }

    pub fn sech(epsilon: f64, width: f64) -> Self {
        InitialData {
            shape: DataShape::Sech,
            epsilon,
            width,
            carrier: 0.0,
        }
    }

    pub fn modulated(epsilon: f64, width: f64, carrier: f64) -> Self {
        InitialData {
            shape: DataShape::Modulated,
            epsilon,
            width,
            carrier,
        }
    }

    pub fn value(&self, x: f64) -> Complex64 {
        let s = x / self.width;
        match self.shape {
            DataShape::Gaussian => Complex64::new(self.epsilon * (-0.5 * s * s).exp(), 0.0),
            DataShape::Sech => Complex64::new(self.epsilon / s.cosh(), 0.0),
            DataShape::Modulated => {
                Complex64::from_polar(self.epsilon * (-0.5 * s * s).exp(), self.carrier * x)
            }
        }
    }

    pub fn sample(&self, grid: &Grid1D) -> ComplexField {
        ComplexField::from_fn(grid, Side::Physical, |x| self.value(x))
    }
}

pub fn initial_state(grid: &Grid1D, u1: &InitialData, v1: &InitialData) -> PairState {
    PairState {
        u: u1.sample(grid),
        v: v1.sample(grid),
        t: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_state(eps: f64) -> PairState {
        let g = Grid1D::new(120.0, 512).unwrap();
        initial_state(
            &g,
            &InitialData::gaussian(eps, 2.0),
            &InitialData::modulated(eps, 2.5, 0.4),
        )
    }

    #[test]
    fn substep_without_potential_is_identity() {
        let mut s = small_state(0.3);
        s.v = ComplexField::zeros(s.grid(), Side::Physical);
        let out = nonlinear_substep(&s, 0.7);
        assert_eq!(out.u, s.u);
    }

    #[test]
    fn substep_scalar_rotation() {
        let g = Grid1D::new(8.0, 8).unwrap();
        let mut u = ComplexField::zeros(&g, Side::Physical);
        let mut v = ComplexField::zeros(&g, Side::Physical);
        u.samples_mut()[3] = Complex64::new(1.0, 0.0);
        v.samples_mut()[3] = Complex64::new(1.0, 0.0);
        let s = PairState::new(u, v, 1.0).unwrap();
        let out = nonlinear_substep(&s, std::f64::consts::PI);
        assert!((out.u.samples()[3] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn substep_preserves_moduli() {
        let g = Grid1D::new(8.0, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rand_field = || {
            let s = (0..64)
                .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect();
            ComplexField::physical(&g, s).unwrap()
        };
        let s = PairState::new(rand_field(), rand_field(), 1.0).unwrap();
        let out = nonlinear_substep(&s, 0.37);
        for (a, b) in out.u.samples().iter().zip(s.u.samples()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * b.norm().max(1.0));
        }
        for (a, b) in out.v.samples().iter().zip(s.v.samples()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * b.norm().max(1.0));
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let s = small_state(0.0);
        let out = strang_step(&s, 0.1);
        assert!(out.u.is_zero() && out.v.is_zero());
        assert_eq!(out.t, 1.1);
    }

    #[test]
    fn strang_step_is_free_flow_without_potential() {
        let mut s = small_state(0.3);
        s.v = ComplexField::zeros(s.grid(), Side::Physical);
        let out = strang_step(&s, 0.25);
        let direct = free_evolve(&s.u, 0.25);
        assert!(norm_linf(&out.u.sub(&direct).unwrap()) < 1e-12);
    }

    #[test]
    fn strang_step_conserves_mass() {
        let s = small_state(0.3);
        let (mu, mv) = s.masses();
        let out = strang_step(&s, 0.05);
        let (nu, nv) = out.masses();
        assert!(relative_drift(nu, mu) < 1e-12);
        assert!(relative_drift(nv, mv) < 1e-12);
    }

    #[test]
    fn fused_stepper_matches_plain_strang() {
        let s = small_state(0.3);
        let traj = evolve(&s, AnalysisParams::default(), 1.5, 0.05, &[]).unwrap();
        let mut plain = s.clone();
        for _ in 0..10 {
            plain = strang_step(&plain, 0.05);
        }
        let last = traj.snapshots.last().unwrap();
        assert!((last.t - 1.5).abs() < 1e-15);
        assert!(norm_linf(&last.u.sub(&plain.u).unwrap()) < 1e-12);
        assert!(norm_linf(&last.v.sub(&plain.v).unwrap()) < 1e-12);
    }

    #[test]
    fn lands_on_snapshot_times() {
        let s = small_state(0.2);
        let sched = [1.33, 1.5, 2.0];
        let traj = evolve(&s, AnalysisParams::default(), 2.2, 0.1, &sched).unwrap();
        assert_eq!(traj.times(), vec![1.0, 1.33, 1.5, 2.0, 2.2]);
        // a run straight to 1.33 must agree with the snapshot
        let direct = evolve(&s, AnalysisParams::default(), 1.33, 0.1, &[]).unwrap();
        let a = &traj.snapshots[1];
        let b = direct.snapshots.last().unwrap();
        assert!(norm_linf(&a.u.sub(&b.u).unwrap()) < 1e-13);
    }

    #[test]
    fn evolve_validates_inputs() {
        let mut s = small_state(0.2);
        let p = AnalysisParams::default();
        assert!(evolve(&s, p, 0.5, 0.1, &[]).is_err());
        assert!(evolve(&s, p, 2.0, 0.1, &[3.0]).is_err());
        s.t = 2.0;
        assert!(evolve(&s, p, 3.0, 0.1, &[]).is_err());
    }

    #[test]
    fn evolve_rejects_small_domain() {
        let s = small_state(0.2);
        let err = evolve(&s, AnalysisParams::default(), 100.0, 0.1, &[]).unwrap_err();
        assert!(matches!(err, ScatterError::DomainTooSmall { .. }));
    }

    #[test]
    fn schedule_is_geometric_and_bounded() {
        let s = geometric_schedule(1.0, 2f64.powf(0.25), 200.0).unwrap();
        assert_eq!(s[0], 1.0);
        assert_eq!(*s.last().unwrap(), 200.0);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert!((s[4] - 2.0).abs() < 1e-12);
        assert!(geometric_schedule(1.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn segments_cover_interval() {
        let st = segment_steps(1.0, 1.33, 0.1);
        assert_eq!(st.len(), 4);
        assert!((st.iter().sum::<f64>() - 0.33).abs() < 1e-15);
        let st = segment_steps(1.0, 2.0, 0.25);
        assert_eq!(st, vec![0.25; 4]);
    }

    #[test]
    fn sizing_rule() {
        let g = Grid1D::new(400.0, 4096).unwrap();
        let s = initial_state(
            &g,
            &InitialData::gaussian(0.1, 4.0),
            &InitialData::gaussian(0.1, 4.0),
        );
        let sz = domain_sizing(&s.u, &s.v, 10.0).unwrap();
        // |û| = ε w e^{-ξ²w²/2} drops to 1e-12 of peak at ξ w = √(24 ln 10)
        let xi_exact = (24.0 * 10f64.ln()).sqrt() / 4.0;
        assert!((sz.xi_max - xi_exact).abs() < 2.0 * g.dxi());
        assert!((sz.data_extent - 2.0 * 4.0 * xi_exact * 4.0).abs() < 2.0 * g.dx());
    }

    #[test]
    fn shapes_parse() {
        assert_eq!("sech".parse::<DataShape>().unwrap(), DataShape::Sech);
        assert!("square".parse::<DataShape>().is_err());
        let d = InitialData::sech(0.5, 2.0);
        assert!((d.value(0.0).re - 0.5).abs() < 1e-15);
        let m = InitialData::modulated(1.0, 1.0, 2.0);
        assert!((m.value(1.0).arg() - 2.0).abs() < 1e-12);
    }
}
