use std::f64::consts::PI;

use num_complex::Complex64;
use preimpact_core::controllers::{pd_tracking_input, AdmittanceStage};
use preimpact_core::dynamics::integrate_step;
use preimpact_core::*;

fn params(m: f64, omega: f64, zeta: f64) -> SecondOrderParams {
    SecondOrderParams::from_natural(m, omega, zeta).unwrap()
}

fn pacic(law: ImpedanceLawKind, adm: SecondOrderParams, imp: SecondOrderParams) -> ControllerKind {
    ControllerKind::Pacic(PacicConfig { law, admittance: adm, impedance: imp })
}

fn run(ctrl: &ControllerKind, m: f64, t_end: f64, f_p: &dyn Fn(f64) -> f64, f_c: &dyn Fn(f64) -> f64) -> SimTrace {
    simulate_open_loop(&OpenLoopInputs {
        controller: ctrl,
        plant_mass: m,
        trajectory: Trajectory::Hold { position: 0.0 },
        integrator: IntegratorConfig { t_end, ..Default::default() },
        f_p,
        f_c,
    })
    .unwrap()
}

#[test]
fn admittance_settles_at_force_over_stiffness() {
    let adm = params(1.0, 5.0, 1.0);
    let ctrl = pacic(ImpedanceLawKind::FullFeedforward, adm, params(0.5, 15.0, 1.0));
    let f = 0.7;
    let tr = run(&ctrl, 0.5, 12.0, &|_| f, &|_| 0.0);
    let offset = tr.stages[0].last().unwrap().x;
    let expected = f / adm.stiffness();
    assert!((offset - expected).abs() < 1e-6 * expected, "{offset} vs {expected}");
}

/// Independent integration of the admittance part and the target impedance
/// `M_i (x'' - x_v'') + D_i (x' - x_v') + K_i (x - x_v) = f_c`.
#[test]
fn full_feedforward_realises_target_impedance() {
    let adm = params(1.0, 5.0, 1.0);
    let imp = params(1.2, 15.0, 0.8);
    let m = 0.5;
    let f_p = |t: f64| 0.4 * (3.0 * t).sin();
    let f_c = |t: f64| if t > 0.5 { 2.0 * (1.0 - (-(t - 0.5) * 20.0).exp()) } else { 0.0 };
    let tr = run(&pacic(ImpedanceLawKind::FullFeedforward, adm, imp), m, 2.0, &f_p, &f_c);

    let dt = 1e-4;
    let mut s = vec![0.0; 4];
    let mut worst: f64 = 0.0;
    for k in 0..tr.len() - 1 {
        s = integrate_step(
            Method::Rk4,
            |t, y: &[f64], dy: &mut [f64]| {
                let a_v = (f_p(t) - adm.damping() * y[1] - adm.stiffness() * y[0]) / adm.mass();
                let a = a_v + (f_c(t) - imp.damping() * (y[3] - y[1]) - imp.stiffness() * (y[2] - y[0])) / imp.mass();
                dy.copy_from_slice(&[y[1], a_v, y[3], a]);
            },
            k as f64 * dt,
            &s,
            dt,
        )
        .unwrap();
        worst = worst.max((tr.plant[k + 1].x - s[2]).abs());
    }
    assert!(worst < 1e-6, "{worst:e}");
}

/// Plant driven by the computed-torque PD towards a fixed target, with an
/// optional constant disturbance.
fn pd_final_error(kp: f64, disturbance: f64) -> f64 {
    let m = 0.5;
    let gains = PdGains::critical(kp, m);
    let target = VirtualObjectState { x: 0.01, v: 0.0, a: 0.0 };
    let dt = 1e-4;
    let mut s = vec![0.0, 0.0];
    for k in 0..50_000 {
        s = integrate_step(
            Method::Rk4,
            |_, y: &[f64], dy: &mut [f64]| {
                let u = pd_tracking_input(&gains, &PlantState { x: y[0], v: y[1], a: 0.0 }, &target, m);
                dy[0] = y[1];
                dy[1] = (u + disturbance) / m;
            },
            k as f64 * dt,
            &s,
            dt,
        )
        .unwrap();
    }
    target.x - s[0]
}

#[test]
fn pd_step_converges() {
    for kp in [100.0, 1e3, 1e4] {
        assert!(pd_final_error(kp, 0.0).abs() < 1e-12, "kp = {kp}");
    }
}

#[test]
fn pd_disturbance_error_scales_with_inverse_gain() {
    for kp in [100.0, 1e3, 1e4] {
        let e = pd_final_error(kp, 2.0);
        assert!((e * kp + 2.0).abs() < 1e-9, "kp = {kp}: {e}");
    }
}

#[test]
fn pacac_approaches_pacic_with_stiff_tracking() {
    let adm = params(1.0, 5.0, 1.0);
    let contact = params(0.5, 15.0, 1.0);
    let m = 0.5;
    let f_p = |t: f64| 0.5 * (4.0 * t).sin();
    let f_c = |t: f64| if t > 0.3 { -3.0 } else { 0.0 };
    let reference = run(&pacic(ImpedanceLawKind::FullFeedforward, adm, contact), m, 1.0, &f_p, &f_c);
    let mut previous = f64::INFINITY;
    for kp in [1e3, 1e4, 1e5, 1e6] {
        let ctrl = ControllerKind::Pacac(PacacConfig {
            proximity_admittance: adm,
            contact_admittance: contact,
            pd: PdGains::critical(kp, m),
        });
        let tr = run(&ctrl, m, 1.0, &f_p, &f_c);
        let err = (0..tr.len()).map(|k| (tr.plant[k].x - reference.plant[k].x).abs()).fold(0.0, f64::max);
        assert!(err < previous, "kp = {kp}: {err:e} not below {previous:e}");
        previous = err;
    }
    assert!(previous < 1e-5, "{previous:e}");
}

fn second_order_response(p: &SecondOrderParams, w: f64) -> Complex64 {
    let jw = Complex64::new(0.0, w);
    1.0 / (p.mass() * jw * jw + p.damping() * jw + p.stiffness())
}

/// A single contact-driven admittance stage in front of an impedance part:
/// both parts see the contact force, so their responses add.
#[test]
fn contact_driven_chain_frequency_response() {
    let stage = params(1.0, 8.0, 1.0);
    let imp = params(0.5, 15.0, 1.0);
    let ctrl = ControllerKind::Chain(ChainConfig {
        stages: vec![AdmittanceStage { source: ForceSource::Contact, params: stage }],
        terminal: Terminal::Impedance { law: ImpedanceLawKind::FullFeedforward, params: imp },
    });
    for w in [2.0, 8.0, 20.0, 60.0] {
        let periods = (w * 8.0 / (2.0 * PI)).ceil().max(4.0);
        let settle = 3.0;
        let window = periods * 2.0 * PI / w;
        let t_end = ((settle + window) * 1e4).ceil() / 1e4;
        let tr = run(&ctrl, 0.5, t_end, &|_| 0.0, &|t| (w * t).sin());
        // Project the settled output onto sin and cos.
        let (mut s, mut c, mut n) = (0.0, 0.0, 0);
        for k in 0..tr.len() {
            let t = tr.t[k];
            if t >= settle && t < settle + window {
                s += tr.plant[k].x * (w * t).sin();
                c += tr.plant[k].x * (w * t).cos();
                n += 1;
            }
        }
        let measured = Complex64::new(2.0 * s / n as f64, 2.0 * c / n as f64);
        let expected = second_order_response(&stage, w) + second_order_response(&imp, w);
        let rel = (measured - expected).norm() / expected.norm();
        assert!(rel < 2e-3, "w = {w}: {measured} vs {expected} ({rel:e})");
    }
}

#[test]
fn open_loop_superposition_with_sinusoidal_virtual_force() {
    let adm = params(1.0, 5.0, 1.0);
    let imp = params(0.5, 15.0, 1.0);
    let ctrl = pacic(ImpedanceLawKind::FullFeedforward, adm, imp);
    let tr = run(&ctrl, 0.5, 2.0, &|t| 0.8 * (6.0 * t).sin(), &|_| 0.0);
    let residual = superposition_check(&tr, &adm, &imp).unwrap();
    assert!(residual < 1e-8, "{residual:e}");

    let both = run(&ctrl, 0.5, 2.0, &|t| 0.8 * (6.0 * t).sin(), &|t| -(11.0 * t).cos());
    assert!(superposition_check(&both, &adm, &imp).unwrap() < 1e-8);

    // Without the stage log the inputs are interpolated from the samples.
    let mut sampled = tr.clone();
    sampled.stage_forces = None;
    assert!(superposition_check(&sampled, &adm, &imp).unwrap() < 1e-8);
}

#[test]
fn superposition_of_quiet_run_is_zero() {
    let adm = params(1.0, 5.0, 1.0);
    let imp = params(0.5, 15.0, 1.0);
    let tr = run(&pacic(ImpedanceLawKind::FullFeedforward, adm, imp), 0.5, 0.2, &|_| 0.0, &|_| 0.0);
    assert_eq!(superposition_check(&tr, &adm, &imp).unwrap(), 0.0);
}

#[test]
fn superposition_rejects_mismatched_grids() {
    let adm = params(1.0, 5.0, 1.0);
    let imp = params(0.5, 15.0, 1.0);
    let mut tr = run(&pacic(ImpedanceLawKind::FullFeedforward, adm, imp), 0.5, 0.2, &|_| 0.0, &|_| 0.0);
    tr.u.pop();
    assert!(matches!(superposition_check(&tr, &adm, &imp), Err(Error::Input(_))));
}
