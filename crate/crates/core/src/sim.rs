//! Closed-loop and open-loop simulation drivers.
//!
//! The state vector is `[x, v, (x_v, v_v) per admittance stage, x_obs, v_obs]`.
//! Accelerations are recomputed from the equations of motion, never
//! integrated as state.
//!
//! Per control update the pipeline is: sensor, noise, filter, backward
//! difference, virtual force. The virtual force is then held over the update
//! interval. In continuous mode (the default) the control law and the contact
//! force it sees are re-evaluated at every integrator stage; with
//! `control_rate_hz` set, the control force and the contact force fed to the
//! controller are sampled at each update and held.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::controllers::{ControlSignals, ControllerKind, DesiredState, VirtualObjectState};
use crate::dynamics::{Integrator, IntegratorConfig, ObstacleSample, PlantState, SimTrace, StageForceLog};
use crate::environment::{contact_force, obstacle_accel, ObstacleLaw, ObstaclePhase, Trajectory};
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;
use crate::sensing::{sensor_output, virtual_viscous_force, SensorFilter, XiRate};

/// Values held constant between two control updates.
#[derive(Debug, Clone, Copy, Default)]
struct Held {
    /// Virtual force magnitude (trace convention).
    f_p: f64,
    /// Sampled control force and contact force, in sampled mode only.
    sampled: Option<(f64, f64)>,
}

/// Everything computed by one evaluation of the equations of motion.
#[derive(Debug, Clone, Copy, Default)]
struct Eval {
    desired: DesiredState,
    u: f64,
    /// Contact force magnitude.
    f_c: f64,
    a: f64,
    a_obs: f64,
}

struct Model<'a> {
    cfg: &'a ScenarioConfig,
    normal: f64,
    phase: ObstaclePhase,
}

impl Model<'_> {
    fn stage_range(&self, n_stages: usize) -> std::ops::Range<usize> {
        2..2 + 2 * n_stages
    }

    /// Evaluates the closed loop at state `s`. Stage accelerations are left
    /// in `stages`.
    fn eval(&self, t: f64, s: &[f64], held: &Held, stages: &mut [VirtualObjectState]) -> Eval {
        let cfg = self.cfg;
        let m = cfg.plant.mass;
        let n = stages.len();
        for (i, st) in stages.iter_mut().enumerate() {
            st.x = s[2 + 2 * i];
            st.v = s[3 + 2 * i];
        }
        let (x, v) = (s[0], s[1]);
        let (xo, vo) = (s[2 + 2 * n], s[3 + 2 * n]);
        let desired = cfg.trajectory.sample(t);
        let gap = self.normal * (xo - x);
        let gap_rate = self.normal * (vo - v);
        let f_c = contact_force(gap, gap_rate, &cfg.contact);
        let on_plant = -self.normal * f_c;

        let seen_fc = held.sampled.map_or(on_plant, |(_, fc)| fc);
        let signals = ControlSignals {
            desired,
            plant: PlantState { x, v, a: 0.0 },
            f_p: -self.normal * held.f_p,
            f_c: seen_fc,
        };
        let u_law = cfg.controller.step(m, &signals, stages);
        let u = held.sampled.map_or(u_law, |(u, _)| u);
        let a = (u + on_plant) / m;
        let a_obs = obstacle_accel(&cfg.obstacle, self.phase, vo, self.normal * f_c);
        Eval { desired, u, f_c, a, a_obs }
    }
}

/// Sensing pipeline state for one run.
struct Sensing<'a> {
    cfg: &'a ScenarioConfig,
    filter: SensorFilter,
    rate: XiRate,
    noise: Option<(ChaCha8Rng, Normal<f64>)>,
    update_dt: f64,
    lost: usize,
}

impl<'a> Sensing<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        let update_hz = cfg.integrator.control_sample_hz();
        let noise = if cfg.sensor.noise_std > 0.0 {
            let dist = Normal::new(0.0, cfg.sensor.noise_std)
                .map_err(|e| Error::field("sensor.noise_std", e.to_string()))?;
            Some((ChaCha8Rng::seed_from_u64(cfg.seed), dist))
        } else {
            None
        };
        Ok(Sensing {
            cfg,
            filter: SensorFilter::from_config(&cfg.filter, update_hz)?,
            rate: XiRate::default(),
            noise,
            update_dt: 1.0 / update_hz,
            lost: 0,
        })
    }

    /// Returns the filtered sensor output and the virtual force magnitude.
    fn update(&mut self, gap: f64) -> Result<(f64, f64)> {
        let mut xi = sensor_output(gap.max(0.0), &self.cfg.sensor)?;
        if let Some((rng, dist)) = self.noise.as_mut() {
            xi += dist.sample(rng);
        }
        let xi = self.filter.filter_step(xi);
        let xi_dot = self.rate.update(xi, self.update_dt);
        let f_p = match virtual_viscous_force(xi, xi_dot, &self.cfg.virtual_force) {
            Ok(f) => f,
            Err(Error::SignalLost(_)) => {
                self.lost += 1;
                0.0
            }
            Err(e) => return Err(e),
        };
        Ok((xi, f_p))
    }
}

fn empty_trace(dt: f64, normal: f64, rows: usize, n_stages: usize) -> SimTrace {
    SimTrace {
        dt,
        normal,
        t: Vec::with_capacity(rows),
        desired: Vec::with_capacity(rows),
        stages: vec![Vec::with_capacity(rows); n_stages],
        plant: Vec::with_capacity(rows),
        obstacle: Vec::with_capacity(rows),
        gap: Vec::with_capacity(rows),
        xi: Vec::with_capacity(rows),
        f_p: Vec::with_capacity(rows),
        f_c: Vec::with_capacity(rows),
        u: Vec::with_capacity(rows),
        stage_forces: None,
        signal_lost: 0,
    }
}

/// Runs the closed-loop scenario and returns the full trace on the grid
/// `t_k = k * dt`, `k = 0..=t_end/dt`.
///
/// Deterministic: identical configurations give bit-identical traces.
pub fn simulate(cfg: &ScenarioConfig) -> Result<SimTrace> {
    cfg.validate()?;
    let integ = &cfg.integrator;
    let dt = integ.dt;
    let steps = integ.steps();
    let hold = integ.hold_steps();
    let normal = cfg.normal();
    let n_stages = cfg.controller.stage_count();
    let dim = 4 + 2 * n_stages;

    let start = cfg.trajectory.sample(0.0);
    let (xo0, vo0) = cfg.obstacle.initial();
    let mut state = vec![0.0; dim];
    state[0] = start.x;
    state[1] = start.v;
    for i in 0..n_stages {
        state[2 + 2 * i] = start.x;
        state[3 + 2 * i] = start.v;
    }
    state[dim - 2] = xo0;
    state[dim - 1] = vo0;

    let mut model = Model { cfg, normal, phase: ObstaclePhase::Approach };
    let mut sensing = Sensing::new(cfg)?;
    let mut integrator = Integrator::new(integ.method, dim);
    let mut stages = vec![VirtualObjectState::default(); n_stages];
    let mut held = Held::default();
    let mut xi = 0.0;

    let mut trace = empty_trace(dt, normal, steps + 1, n_stages);
    let mut log = StageForceLog {
        method: integ.method,
        f_p: Vec::with_capacity(steps),
        f_c: Vec::with_capacity(steps),
    };

    for k in 0..=steps {
        let t = k as f64 * dt;
        let gap = normal * (state[dim - 2] - state[0]);
        if k % hold == 0 {
            let (xi_k, f_p) = sensing.update(gap)?;
            xi = xi_k;
            held = Held { f_p, sampled: None };
            if integ.control_rate_hz.is_some() {
                let e = model.eval(t, &state, &held, &mut stages);
                held.sampled = Some((e.u, -normal * e.f_c));
            }
        }

        let e = model.eval(t, &state, &held, &mut stages);
        if !(e.u.is_finite() && e.a.is_finite()) {
            return Err(Error::IntegrationFault { step: k, detail: "non-finite control force".into() });
        }
        trace.t.push(t);
        trace.desired.push(e.desired);
        for (series, st) in trace.stages.iter_mut().zip(&stages) {
            series.push(*st);
        }
        trace.plant.push(PlantState { x: state[0], v: state[1], a: e.a });
        trace.obstacle.push(ObstacleSample { x: state[dim - 2], v: state[dim - 1] });
        trace.gap.push(gap);
        trace.xi.push(xi);
        trace.f_p.push(held.f_p);
        trace.f_c.push(e.f_c);
        trace.u.push(e.u);

        if k == steps {
            break;
        }

        let mut fc_stages = [0.0; 4];
        let mut call = 0;
        let range = model.stage_range(n_stages);
        let vo_before = state[dim - 1];
        integrator.step(t, &mut state, dt, k, |tt, s, ds| {
            let e = model.eval(tt, s, &held, &mut stages);
            if call < 4 {
                fc_stages[call] = e.f_c;
            }
            call += 1;
            ds[0] = s[1];
            ds[1] = e.a;
            for (i, st) in stages.iter().enumerate() {
                ds[range.start + 2 * i] = s[range.start + 2 * i + 1];
                ds[range.start + 2 * i + 1] = st.a;
            }
            ds[dim - 2] = s[dim - 1];
            ds[dim - 1] = e.a_obs;
        })?;
        log.f_p.push([held.f_p; 4]);
        log.f_c.push(fc_stages);

        match (cfg.obstacle, model.phase) {
            (ObstacleLaw::ApproachConstantVelocity { .. }, ObstaclePhase::Approach) => {
                if normal * (state[dim - 2] - state[0]) <= 0.0 {
                    model.phase = ObstaclePhase::Free;
                }
            }
            (ObstacleLaw::ApproachConstantVelocity { friction, .. }, ObstaclePhase::Free) if friction > 0.0 => {
                // Coulomb friction stops the obstacle rather than reversing it.
                let vo = state[dim - 1];
                if vo_before != 0.0 && vo * vo_before < 0.0 {
                    let push = normal * contact_force(normal * (state[dim - 2] - state[0]), normal * (vo - state[1]), &cfg.contact);
                    if push.abs() <= friction {
                        state[dim - 1] = 0.0;
                    }
                }
            }
            _ => {}
        }
    }
    trace.signal_lost = sensing.lost;
    trace.stage_forces = Some(log);
    Ok(trace)
}

/// Prescribed signed force signals for an open-loop run.
pub struct OpenLoopInputs<'a> {
    pub controller: &'a ControllerKind,
    pub plant_mass: f64,
    pub trajectory: Trajectory,
    pub integrator: IntegratorConfig,
    /// Virtual force acting on the proximity-driven stages.
    pub f_p: &'a dyn Fn(f64) -> f64,
    /// External force acting on the plant; also the controller's contact
    /// force measurement.
    pub f_c: &'a dyn Fn(f64) -> f64,
}

/// Simulates the controlled plant with injected force signals and no
/// obstacle. The trace uses `normal = -1`, so its `f_p` and `f_c` columns hold
/// the signed applied forces, and the obstacle columns are zero.
pub fn simulate_open_loop(inputs: &OpenLoopInputs<'_>) -> Result<SimTrace> {
    inputs.integrator.validate()?;
    inputs.controller.validate(inputs.plant_mass)?;
    if inputs.integrator.control_rate_hz.is_some() {
        return Err(Error::Config("open-loop runs evaluate the controller continuously".into()));
    }
    let m = inputs.plant_mass;
    let dt = inputs.integrator.dt;
    let steps = inputs.integrator.steps();
    let n_stages = inputs.controller.stage_count();
    let dim = 2 + 2 * n_stages;

    let start = inputs.trajectory.sample(0.0);
    let mut state = vec![0.0; dim];
    for pair in state.chunks_mut(2) {
        pair[0] = start.x;
        pair[1] = start.v;
    }
    let mut stages = vec![VirtualObjectState::default(); n_stages];
    let eval = |t: f64, s: &[f64], stages: &mut [VirtualObjectState]| {
        for (i, st) in stages.iter_mut().enumerate() {
            st.x = s[2 + 2 * i];
            st.v = s[3 + 2 * i];
        }
        let desired = inputs.trajectory.sample(t);
        let (f_p, f_c) = ((inputs.f_p)(t), (inputs.f_c)(t));
        let signals = ControlSignals {
            desired,
            plant: PlantState { x: s[0], v: s[1], a: 0.0 },
            f_p,
            f_c,
        };
        let u = inputs.controller.step(m, &signals, stages);
        (desired, u, f_p, f_c, (u + f_c) / m)
    };

    let mut integrator = Integrator::new(inputs.integrator.method, dim);
    let mut trace = empty_trace(dt, -1.0, steps + 1, n_stages);
    let mut log = StageForceLog {
        method: inputs.integrator.method,
        f_p: Vec::with_capacity(steps),
        f_c: Vec::with_capacity(steps),
    };
    for k in 0..=steps {
        let t = k as f64 * dt;
        let (desired, u, f_p, f_c, a) = eval(t, &state, &mut stages);
        trace.t.push(t);
        trace.desired.push(desired);
        for (series, st) in trace.stages.iter_mut().zip(&stages) {
            series.push(*st);
        }
        trace.plant.push(PlantState { x: state[0], v: state[1], a });
        trace.obstacle.push(ObstacleSample::default());
        trace.gap.push(0.0);
        trace.xi.push(0.0);
        trace.f_p.push(f_p);
        trace.f_c.push(f_c);
        trace.u.push(u);
        if k == steps {
            break;
        }
        let mut fp_stages = [0.0; 4];
        let mut fc_stages = [0.0; 4];
        let mut call = 0;
        integrator.step(t, &mut state, dt, k, |tt, s, ds| {
            let (_, _, f_p, f_c, a) = eval(tt, s, &mut stages);
            if call < 4 {
                fp_stages[call] = f_p;
                fc_stages[call] = f_c;
            }
            call += 1;
            ds[0] = s[1];
            ds[1] = a;
            for (i, st) in stages.iter().enumerate() {
                ds[2 + 2 * i] = s[3 + 2 * i];
                ds[3 + 2 * i] = st.a;
            }
        })?;
        log.f_p.push(fp_stages);
        log.f_c.push(fc_stages);
    }
    trace.stage_forces = Some(log);
    Ok(trace)
}
