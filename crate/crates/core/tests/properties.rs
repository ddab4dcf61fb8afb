use num_complex::Complex64;
use proptest::prelude::*;
use scatterlab::fit::fit_rate;
use scatterlab::propagator::{free_evolve, leading_split};
use scatterlab::remainder::{
    convexity_constant, convexity_ratio, packet_sum, remainder_physical, remainder_split, Packet,
    TrilinearInput,
};
use scatterlab::scattering::{PhaseAccumulator, Source};
use scatterlab::solver::{nonlinear_substep, strang_step, PairState};
use scatterlab::spectral::{
    fourier_forward, fourier_inverse, norm_h0n, norm_l2, norm_linf, ComplexField, Grid1D, Side,
};

fn packet() -> impl Strategy<Value = Packet> {
    (
        -1.0..1.0f64,
        -1.0..1.0f64,
        -4.0..4.0f64,
        0.8..2.5f64,
        -1.5..1.5f64,
    )
        .prop_map(|(re, im, center, width, carrier)| Packet {
            amplitude: Complex64::new(re, im),
            center,
            width,
            carrier,
        })
}

fn packets() -> impl Strategy<Value = Vec<Packet>> {
    prop::collection::vec(packet(), 1..4)
}

fn grid() -> Grid1D {
    Grid1D::new(40.0, 256).unwrap()
}

fn physical(packets: &[Packet]) -> ComplexField {
    fourier_inverse(&packet_sum(&grid(), packets)).unwrap()
}

fn rel(a: &ComplexField, b: &ComplexField) -> f64 {
    norm_l2(&a.sub(b).unwrap()) / norm_l2(b).max(f64::MIN_POSITIVE)
}

/// Spectral-side fields for the trilinear remainder, smooth on the 64-point grid.
fn smooth_spectral() -> impl Strategy<Value = ComplexField> {
    prop::collection::vec(
        (
            -1.0..1.0f64,
            -1.0..1.0f64,
            -2.0..2.0f64,
            3.2..3.8f64,
            -0.15..0.15f64,
        ),
        1..3,
    )
    .prop_map(|raw| {
        let packets: Vec<Packet> = raw
            .into_iter()
            .map(|(re, im, center, width, carrier)| Packet {
                amplitude: Complex64::new(re, im),
                center,
                width,
                carrier,
            })
            .collect();
        packet_sum(&Grid1D::new(64.0, 64).unwrap(), &packets)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plancherel(p in packets()) {
        let f = physical(&p);
        let f_hat = fourier_forward(&f).unwrap();
        prop_assert!((norm_l2(&f) - norm_l2(&f_hat)).abs() <= 1e-12 * norm_l2(&f));
    }

    #[test]
    fn transform_round_trip(p in packets()) {
        let f = physical(&p);
        let back = fourier_inverse(&fourier_forward(&f).unwrap()).unwrap();
        prop_assert!(rel(&back, &f) < 1e-13);
    }

    #[test]
    fn weighted_norms_grow_with_order(p in packets(), n in 0u32..7) {
        let f = physical(&p);
        prop_assert!(norm_h0n(&f, n) <= norm_h0n(&f, n + 1));
    }

    #[test]
    fn free_flow_is_unitary(p in packets(), t in -5.0..5.0f64) {
        let f = physical(&p);
        let out = free_evolve(&f, t);
        prop_assert!((norm_l2(&out) - norm_l2(&f)).abs() <= 1e-12 * norm_l2(&f));
    }

    #[test]
    fn free_flow_is_a_group(p in packets(), s in -3.0..3.0f64, t in -3.0..3.0f64) {
        let f = physical(&p);
        let two = free_evolve(&free_evolve(&f, s), t);
        prop_assert!(rel(&two, &free_evolve(&f, s + t)) < 1e-12);
    }

    #[test]
    fn free_flow_commutes_with_derivative(p in packets(), t in -3.0..3.0f64) {
        let derivative = |f: &ComplexField| {
            let spec = fourier_forward(f).unwrap();
            let d = ComplexField::spectral(
                f.grid(),
                spec.samples()
                    .iter()
                    .zip(spec.coordinates())
                    .map(|(z, xi)| z * Complex64::new(0.0, xi))
                    .collect(),
            )
            .unwrap();
            fourier_inverse(&d).unwrap()
        };
        let f = physical(&p);
        let a = derivative(&free_evolve(&f, t));
        let b = free_evolve(&derivative(&f), t);
        prop_assert!(rel(&a, &b) < 1e-12);
    }

    #[test]
    fn leading_split_recomposes(p in packets(), t in 1.0..4.0f64) {
        let f = physical(&p);
        let split = leading_split(&f, t).unwrap();
        let sum = split.leading.add(&split.remainder).unwrap();
        prop_assert!(rel(&sum, &free_evolve(&f, t)) < 1e-12);
    }

    #[test]
    fn substep_preserves_moduli(pu in packets(), pv in packets(), dt in -2.0..2.0f64) {
        let state = PairState::new(physical(&pu), physical(&pv), 1.0).unwrap();
        let out = nonlinear_substep(&state, dt);
        for (a, b) in out.u.samples().iter().zip(state.u.samples()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-14);
        }
        for (a, b) in out.v.samples().iter().zip(state.v.samples()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-14);
        }
    }

    #[test]
    fn substep_commutes_with_exchange(pu in packets(), pv in packets(), dt in -2.0..2.0f64) {
        let state = PairState::new(physical(&pu), physical(&pv), 1.0).unwrap();
        let a = nonlinear_substep(&state.swapped(), dt);
        let b = nonlinear_substep(&state, dt).swapped();
        prop_assert_eq!(a.u.samples(), b.u.samples());
        prop_assert_eq!(a.v.samples(), b.v.samples());
    }

    #[test]
    fn substep_is_phase_covariant(
        pu in packets(),
        pv in packets(),
        dt in -2.0..2.0f64,
        theta in 0.0..6.3f64,
    ) {
        let rot = Complex64::from_polar(1.0, theta);
        let state = PairState::new(physical(&pu), physical(&pv), 1.0).unwrap();
        let turned = PairState::new(state.u.scale(rot), state.v.clone(), 1.0).unwrap();
        let a = nonlinear_substep(&turned, dt);
        let b = nonlinear_substep(&state, dt);
        prop_assert!(rel(&a.u, &b.u.scale(rot)) < 1e-14);
        prop_assert!(rel(&a.v, &b.v) < 1e-14);
    }

    #[test]
    fn strang_step_conserves_masses(pu in packets(), pv in packets(), dt in 0.01..0.5f64) {
        let state = PairState::new(physical(&pu), physical(&pv), 1.0).unwrap();
        let out = strang_step(&state, dt);
        let (mu, mv) = state.masses();
        let (nu, nv) = out.masses();
        prop_assert!((mu - nu).abs() <= 1e-12 * mu);
        prop_assert!((mv - nv).abs() <= 1e-12 * mv);
    }

    #[test]
    fn convexity_constant_bounds_ratio(
        n in 1u32..4,
        xi in -10.0..10.0f64,
        eta in -10.0..10.0f64,
        sigma in -10.0..10.0f64,
    ) {
        prop_assert!(convexity_ratio(n, xi, eta, sigma) <= convexity_constant(n) * (1.0 + 1e-12));
    }

    #[test]
    fn power_law_exponent_recovered(
        c in 0.01..100.0f64,
        p in -3.0..1.0f64,
        ratio in 1.1..2.0f64,
    ) {
        let series: Vec<(f64, f64)> = (0..12)
            .map(|k| {
                let t = ratio.powi(k);
                (t, c * t.powf(p))
            })
            .collect();
        let fit = fit_rate(&series).unwrap();
        prop_assert!((fit.exponent - p).abs() < 1e-9);
    }

    #[test]
    fn phase_is_monotone(
        moduli in prop::collection::vec(prop::collection::vec(0.0..2.0f64, 8), 2..12),
    ) {
        let g = Grid1D::new(10.0, 8).unwrap();
        let times: Vec<f64> = (0..moduli.len()).map(|k| 1.0 + 0.5 * k as f64).collect();
        let acc = PhaseAccumulator::from_moduli(&g, Source::V, &times, &moduli).unwrap();
        for m in 1..times.len() {
            for (a, b) in acc.phase(m - 1).iter().zip(acc.phase(m)) {
                prop_assert!(b >= a);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn remainder_is_trilinear(
        f in smooth_spectral(),
        g in smooth_spectral(),
        s in 1.0..10.0f64,
        lambda_re in -2.0..2.0f64,
        lambda_im in -2.0..2.0f64,
        mu in 0.1..2.0f64,
    ) {
        let lambda = Complex64::new(lambda_re, lambda_im);
        let mu = Complex64::from_polar(mu, 0.7);
        let base = remainder_physical(&TrilinearInput::new(f.clone(), g.clone(), s).unwrap()).unwrap();
        let scaled = remainder_physical(
            &TrilinearInput::new(f.scale(lambda), g.scale(mu), s).unwrap(),
        )
        .unwrap();
        let expected = base.scale(lambda * mu.norm_sqr());
        let err = norm_linf(&scaled.sub(&expected).unwrap());
        prop_assert!(err <= 1e-12 * norm_linf(&expected).max(1e-300));
    }

    #[test]
    fn split_recomposes_remainder(f in smooth_spectral(), g in smooth_spectral(), s in 1.0..50.0f64) {
        let input = TrilinearInput::new(f, g, s).unwrap();
        let (i_term, n_term) = remainder_split(&input).unwrap();
        let r = remainder_physical(&input).unwrap();
        let inv = 1.0 / s;
        let sum = i_term.zip_with(&n_term, |a, b| a + b * inv).unwrap();
        prop_assert!(norm_linf(&sum.sub(&r).unwrap()) <= 1e-12 * norm_linf(&r).max(1e-300));
    }

    #[test]
    fn spectral_side_is_required(f in smooth_spectral(), g in smooth_spectral()) {
        let phys = fourier_inverse(&f).unwrap();
        prop_assert!(TrilinearInput::new(phys, g.clone(), 1.0).is_err());
        prop_assert!(TrilinearInput::new(f.clone(), g, 0.5).is_err());
        prop_assert_eq!(f.side(), Side::Spectral);
    }
}
