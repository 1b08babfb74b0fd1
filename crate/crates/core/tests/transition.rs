use preimpact_core::dynamics::integrate_step;
use preimpact_core::*;
use proptest::prelude::*;

fn rk4_free_response(sigma: f64, nu: f64, omega: f64, dt: f64, t_end: f64) -> Vec<(f64, f64)> {
    let mut s = vec![sigma, nu];
    let steps = (t_end / dt).round() as usize;
    let mut out = vec![(0.0, s[0])];
    for k in 0..steps {
        s = integrate_step(
            Method::Rk4,
            |_, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -2.0 * omega * y[1] - omega * omega * y[0];
            },
            k as f64 * dt,
            &s,
            dt,
        )
        .unwrap();
        out.push(((k + 1) as f64 * dt, s[0]));
    }
    out
}

#[test]
fn closed_form_matches_fine_rk4() {
    for &(sigma, nu, omega) in &[(0.05, 0.3, 10.0), (-0.02, 0.1, 3.0), (0.001, -0.4, 18.0)] {
        let adm = CriticalAdmittance::from_omega(omega).unwrap();
        let c = ContactState::new(sigma, nu, omega);
        let err = rk4_free_response(sigma, nu, omega, 1e-5, 10.0 / omega)
            .into_iter()
            .map(|(t, y)| (closed_form_y(t, &c, &adm).unwrap().0 - y).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "({sigma}, {nu}, {omega}): {err:e}");
    }
}

#[test]
fn closed_form_derivatives_are_consistent() {
    let adm = CriticalAdmittance::from_omega(7.0).unwrap();
    let c = ContactState::new(0.03, 0.2, 7.0);
    let h = 1e-6;
    for t in [0.01, 0.1, 0.5, 1.0] {
        let (y0, dy0, _) = closed_form_y(t - h, &c, &adm).unwrap();
        let (y1, dy1, _) = closed_form_y(t + h, &c, &adm).unwrap();
        let (y, dy, ddy) = closed_form_y(t, &c, &adm).unwrap();
        assert!(((y1 - y0) / (2.0 * h) - dy).abs() < 1e-8);
        assert!(((dy1 - dy0) / (2.0 * h) - ddy).abs() < 1e-6);
        // The free oscillator equation holds.
        assert!((ddy + 14.0 * dy + 49.0 * y).abs() < 1e-12);
    }
}

/// With the feedforward removed, the transition term is the impedance
/// part's reaction to the decaying offset of the virtual object.
#[test]
fn f_tra_is_impedance_reaction_to_free_response() {
    let omega_a = 10.0;
    let adm = CriticalAdmittance::from_omega(omega_a).unwrap();
    let imp = SecondOrderParams::from_natural(0.5, 15.0, 1.0).unwrap();
    let c = ContactState::new(0.05, 0.3, omega_a);
    for k in 0..200 {
        let t = k as f64 * 5e-3;
        let (y, dy, _) = closed_form_y(t, &c, &adm).unwrap();
        let expected = -imp.damping() * dy - imp.stiffness() * y;
        let got = f_tra(t, &c, &imp, omega_a);
        assert!((got - expected).abs() < 1e-10 * (1.0 + expected.abs()), "t = {t}");
    }
}

#[test]
fn initial_transition_force_is_damping_plus_stiffness_term() {
    let c = ContactState::new(0.05, 0.3, 10.0);
    for omega_i in [5.0, 15.0, 25.0, 35.0] {
        let imp = SecondOrderParams::from_natural(1.0, omega_i, 1.0).unwrap();
        let f0 = f_tra(0.0, &c, &imp, 10.0);
        assert!(f0 < 0.0);
        assert_eq!(f0, -imp.damping() * 0.3 - imp.stiffness() * 0.05);
    }
}

#[test]
fn sweep_example_classifications() {
    // omega_a = 10, zeta_i = 1: 2 zeta_i omega_a = 20.
    let c = ContactState::new(0.05, 0.3, 10.0);
    let class = |w: f64| t_extremum(&c, &SecondOrderParams::from_natural(1.0, w, 1.0).unwrap(), 10.0).unwrap();
    assert!(matches!(class(5.0), TransitionClass::LocalMaximum { t_ex } if t_ex > 0.0));
    assert!(matches!(class(15.0), TransitionClass::LocalMaximum { .. }));
    assert!(matches!(
        class(25.0),
        TransitionClass::NoExtremumSmooth { .. } | TransitionClass::LocalMinimumPossible { .. }
    ));
}

#[test]
fn design_range_members_satisfy_condition() {
    let imp = SecondOrderParams::from_natural(0.5, 15.0, 1.0).unwrap();
    let (lo, hi) = design_omega_a_range(&imp);
    for k in 0..100 {
        let w = lo + (hi - lo) * k as f64 / 100.0;
        assert_eq!(check_smooth_condition(&imp, w), SmoothCondition::Satisfied, "omega_a = {w}");
    }
    assert_ne!(check_smooth_condition(&imp, hi), SmoothCondition::Satisfied);
}

/// Brute-force extremum search on a dense grid.
fn sampled_extrema(c: &ContactState, imp: &SecondOrderParams, omega_a: f64, horizon: f64) -> (Vec<f64>, Vec<f64>) {
    let grid = 1e-5;
    let n = (horizon / grid) as usize;
    let f: Vec<f64> = (0..=n).map(|k| f_tra(k as f64 * grid, c, imp, omega_a)).collect();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for k in 1..n {
        if f[k] > f[k - 1] && f[k] >= f[k + 1] {
            maxima.push(k as f64 * grid);
        }
        if f[k] < f[k - 1] && f[k] <= f[k + 1] {
            minima.push(k as f64 * grid);
        }
    }
    (maxima, minima)
}

#[test]
fn classification_agrees_with_sampling() {
    let omega_a = 10.0;
    let c = ContactState::new(0.05, 0.3, omega_a);
    for (omega_i, zeta_i) in [(5.0, 1.0), (12.0, 0.8), (25.0, 1.0), (30.0, 1.2), (8.0, 2.0)] {
        let imp = SecondOrderParams::from_natural(1.0, omega_i, zeta_i).unwrap();
        let class = t_extremum(&c, &imp, omega_a).unwrap();
        let horizon = (10.0 / omega_a).max(class.t_ex().unwrap_or(0.0) + 10.0 / omega_a);
        let (maxima, minima) = sampled_extrema(&c, &imp, omega_a, horizon);
        match class {
            TransitionClass::LocalMaximum { t_ex } => {
                assert_eq!(maxima.len(), 1);
                assert!((maxima[0] - t_ex).abs() <= 1e-5);
            }
            TransitionClass::NoExtremumSmooth { .. } => assert!(maxima.is_empty() && minima.is_empty()),
            TransitionClass::LocalMinimumPossible { t_ex } => {
                assert!(maxima.is_empty());
                assert!(minima.iter().all(|m| (m - t_ex).abs() <= 1e-5));
            }
            TransitionClass::TrivialTexInfinite => unreachable!(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn eta_identity(sigma in -0.1..0.1f64, nu in -1.0..1.0f64, w in 0.5..30.0f64) {
        let c = ContactState::new(sigma, nu, w);
        prop_assert_eq!(c.eta, nu + w * sigma);
    }

    /// For sigma, nu > 0 the transition term starts negative.
    #[test]
    fn initial_transition_force_is_negative(
        sigma in 1e-6..0.1f64, nu in 1e-6..1.0f64, w_a in 1.0..20.0f64,
        w_i in 1.0..80.0f64, zeta in 0.2..3.0f64,
    ) {
        let imp = SecondOrderParams::from_natural(1.0, w_i, zeta).unwrap();
        prop_assert!(f_tra(0.0, &ContactState::new(sigma, nu, w_a), &imp, w_a) < 0.0);
    }

    /// Under the smooth-transition condition no local maximum exists after
    /// contact; a local maximum implies the condition is violated.
    #[test]
    fn smooth_condition_excludes_local_maximum(
        sigma in 1e-6..0.1f64, nu in 1e-6..1.0f64, w_a in 1.0..20.0f64,
        zeta in 0.2..3.0f64, ratio in 0.1..6.0f64,
    ) {
        let imp = SecondOrderParams::from_natural(1.0, ratio * zeta * w_a, zeta).unwrap();
        let c = ContactState::new(sigma, nu, w_a);
        let class = t_extremum(&c, &imp, w_a).unwrap();
        if check_smooth_condition(&imp, w_a) == SmoothCondition::Satisfied {
            prop_assert!(matches!(class, TransitionClass::NoExtremumSmooth { .. }), "{:?}", class);
        }
        if matches!(class, TransitionClass::LocalMaximum { .. }) {
            prop_assert_eq!(check_smooth_condition(&imp, w_a), SmoothCondition::ViolatedLow);
        }
    }

    /// Mirrored contact situations classify identically.
    #[test]
    fn mirror_symmetry(
        sigma in 1e-6..0.1f64, nu in 1e-6..1.0f64, w_a in 1.0..20.0f64,
        w_i in 1.0..80.0f64, zeta in 0.2..3.0f64,
    ) {
        let imp = SecondOrderParams::from_natural(1.0, w_i, zeta).unwrap();
        let c = ContactState::new(sigma, nu, w_a);
        prop_assert_eq!(t_extremum(&c, &imp, w_a).unwrap(), t_extremum(&c.mirrored(), &imp, w_a).unwrap());
        let t = 0.3 / w_a;
        prop_assert!((f_tra(t, &c, &imp, w_a) + f_tra(t, &c.mirrored(), &imp, w_a)).abs() < 1e-9);
    }
}
