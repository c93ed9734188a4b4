//! Fixed-step closed-loop simulation of the linear plants under state
//! feedback or PID control, with gust disturbance and RMS comparison
//! metrics.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{invert, rank, Matrix, Tolerances};
use crate::models::LinearModel;
use crate::wind::{disturbance_channel, generate, DrydenParams};

/// State norm beyond which a run is declared diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Scalar PID gain set with a first-order derivative filter and an
/// anti-windup clamp on the integral state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Derivative filter time constant, s.
    #[serde(default = "default_tau_d")]
    pub tau_d: f64,
    /// Clamp on the integral state magnitude.
    #[serde(default = "default_windup")]
    pub windup_limit: f64,
}

fn default_tau_d() -> f64 {
    0.01
}

fn default_windup() -> f64 {
    10.0
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Self {
        PidGains {
            kp,
            ki,
            kd,
            tau_d: default_tau_d(),
            windup_limit: default_windup(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.kp, "kp"),
            (self.ki, "ki"),
            (self.kd, "kd"),
            (self.tau_d, "tau_d"),
            (self.windup_limit, "windup_limit"),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig {
                    field: format!("pid.{name}"),
                    message: "must be finite".into(),
                });
            }
        }
        if self.tau_d <= 0.0 {
            return Err(Error::InvalidConfig {
                field: "pid.tau_d".into(),
                message: "derivative filter time constant must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Running state of one scalar PID loop.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidState {
    pub integral: f64,
    /// Derivative filter state (tracks the error).
    pub filter: f64,
    pub prev_error: f64,
}

/// One PID step: proportional term, trapezoidal integral with anti-windup
/// clamp, and a filtered derivative. Returns `(output, next_state)`.
pub fn pid_step(gains: &PidGains, state: &PidState, error: f64, dt: f64) -> (f64, PidState) {
    assert!(dt > 0.0, "pid_step requires dt > 0");
    let mut integral = state.integral + 0.5 * dt * (error + state.prev_error);
    integral = integral.clamp(-gains.windup_limit, gains.windup_limit);

    let alpha = (-dt / gains.tau_d).exp();
    let filter = alpha * state.filter + (1.0 - alpha) * error;
    let derivative = (error - filter) / gains.tau_d;

    let output = gains.kp * error + gains.ki * integral + gains.kd * derivative;
    (
        output,
        PidState {
            integral,
            filter,
            prev_error: error,
        },
    )
}

/// PID control structure: either a single loop on one measured state, or the
/// attitude cascade (angle P feeding per-axis rate PIDs whose torque demands
/// go through the motor mixer).
#[derive(Debug, Clone)]
pub enum PidCascade {
    /// PID on `x[state_index]` driving the single input.
    SingleAxis { state_index: usize, gains: PidGains },
    /// Angle error * `angle_p` sets the rate setpoint for each of the three
    /// axes; rate PIDs produce torques; `mixer` allocates them to motors.
    AttitudeCascade {
        angle_p: f64,
        rate_gains: PidGains,
        mixer: Matrix,
    },
}

#[derive(Debug, Clone)]
pub enum PolicyKind {
    StateFeedback(Matrix),
    PidCascade(PidCascade),
}

/// A controller plus optional per-input saturation limits `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct ControllerPolicy {
    pub kind: PolicyKind,
    pub saturation: Option<Vec<[f64; 2]>>,
}

impl ControllerPolicy {
    pub fn state_feedback(k: Matrix) -> Self {
        ControllerPolicy {
            kind: PolicyKind::StateFeedback(k),
            saturation: None,
        }
    }

    pub fn pid(cascade: PidCascade) -> Self {
        ControllerPolicy {
            kind: PolicyKind::PidCascade(cascade),
            saturation: None,
        }
    }

    fn check_model(&self, model: &LinearModel) -> Result<()> {
        let n = model.n_states();
        let m = model.n_inputs();
        match &self.kind {
            PolicyKind::StateFeedback(k) => k.check_dims(m, n, "policy.K")?,
            PolicyKind::PidCascade(PidCascade::SingleAxis { state_index, gains }) => {
                gains.validate()?;
                if *state_index >= n || m != 1 {
                    return Err(Error::InvalidConfig {
                        field: "policy.pid".into(),
                        message: format!(
                            "single-axis PID needs state_index < {n} and one input, got index {state_index}, {m} inputs"
                        ),
                    });
                }
            }
            PolicyKind::PidCascade(PidCascade::AttitudeCascade {
                rate_gains, mixer, ..
            }) => {
                rate_gains.validate()?;
                if n != 6 {
                    return Err(Error::InvalidConfig {
                        field: "policy.pid".into(),
                        message: "attitude cascade expects the 6-state hover model".into(),
                    });
                }
                mixer.check_dims(m, 3, "policy.mixer")?;
            }
        }
        if let Some(sat) = &self.saturation {
            if sat.len() != m {
                return Err(Error::InvalidConfig {
                    field: "policy.saturation".into(),
                    message: format!("{} limits for {m} inputs", sat.len()),
                });
            }
        }
        Ok(())
    }

    /// Autonomous closed-loop matrix for stability diagnostics. PID loops are
    /// linear (trapezoidal integral and first-order derivative filter), so the
    /// closed loop is the plant augmented with integrator and filter states.
    pub fn closed_loop_matrix(&self, model: &LinearModel) -> Result<Matrix> {
        self.check_model(model)?;
        let n = model.n_states();
        let a = &model.a;
        let bu = &model.bu;
        match &self.kind {
            PolicyKind::StateFeedback(k) => Ok(a + &(bu * k)),
            PolicyKind::PidCascade(PidCascade::SingleAxis { state_index, gains }) => {
                // states [x; integral; filter], e = -x[si]
                let si = *state_index;
                let mut aug = Matrix::zeros(n + 2, n + 2);
                let kp_eff = gains.kp + gains.kd / gains.tau_d;
                for i in 0..n {
                    for j in 0..n {
                        aug[(i, j)] = a[(i, j)];
                    }
                    aug[(i, si)] -= bu[(i, 0)] * kp_eff;
                    aug[(i, n)] = bu[(i, 0)] * gains.ki;
                    aug[(i, n + 1)] = -bu[(i, 0)] * gains.kd / gains.tau_d;
                }
                aug[(n, si)] = -1.0;
                aug[(n + 1, si)] = -1.0 / gains.tau_d;
                aug[(n + 1, n + 1)] = -1.0 / gains.tau_d;
                Ok(aug)
            }
            PolicyKind::PidCascade(PidCascade::AttitudeCascade {
                angle_p,
                rate_gains: g,
                mixer,
            }) => {
                // states [x(6); integral(3); filter(3)], e_i = -p_ang*x_i - x_{3+i}
                let m_in = model.n_inputs();
                let mut aug = Matrix::zeros(12, 12);
                // e = E x with E = [-p_ang I3 | -I3]
                let mut e_sel = Matrix::zeros(3, 6);
                for i in 0..3 {
                    e_sel[(i, i)] = -angle_p;
                    e_sel[(i, 3 + i)] = -1.0;
                }
                // u = mixer (kp E x + ki xi + kd/tau (E x - xd))
                let bm = bu * mixer; // 6x3
                let kp_eff = g.kp + g.kd / g.tau_d;
                let plant = a + &(&bm.scale(kp_eff) * &e_sel);
                aug.set_block(0, 0, &plant);
                aug.set_block(0, 6, &bm.scale(g.ki));
                aug.set_block(0, 9, &bm.scale(-g.kd / g.tau_d));
                aug.set_block(6, 0, &e_sel);
                aug.set_block(9, 0, &e_sel.scale(1.0 / g.tau_d));
                aug.set_block(9, 9, &Matrix::identity(3).scale(-1.0 / g.tau_d));
                let _ = m_in;
                Ok(aug)
            }
        }
    }
}

/// Runtime controller memory (PID integrators and filters).
#[derive(Debug, Clone)]
enum ControllerState {
    Stateless,
    Single(PidState),
    Cascade([PidState; 3]),
}

/// Motor allocation for the hover model: the right pseudo-inverse of the
/// lower 3x4 block of `Bu`, so that `Bu_lower * M = I3`.
pub fn hover_mixer(model: &LinearModel) -> Result<Matrix> {
    let lower = model.bu.block(3, 0, 3, model.n_inputs());
    let r = rank(&lower);
    if r != 3 {
        return Err(Error::RankDeficient { rank: r, needed: 3 });
    }
    let gram = (&lower * &lower.transpose()).symmetrized();
    let gram_inv = invert(&gram, &Tolerances::default())
        .map_err(|_| Error::RankDeficient { rank: r, needed: 3 })?;
    Ok(&lower.transpose() * &gram_inv)
}

/// Simulation configuration. `dryden: None` disables the disturbance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integration step, s.
    pub dt: f64,
    /// Horizon, s.
    pub t_final: f64,
    /// Initial state deviation.
    pub x0: Vec<f64>,
    /// Constant regulation setpoint; zero for the built-in cases.
    pub reference: Vec<f64>,
    pub dryden: Option<DrydenParams>,
}

impl SimConfig {
    pub fn regulation(x0: Vec<f64>, dryden: Option<DrydenParams>) -> Self {
        let n = x0.len();
        SimConfig {
            dt: 0.002,
            t_final: 10.0,
            x0,
            reference: vec![0.0; n],
            dryden,
        }
    }
}

/// Time-indexed record of one closed-loop run; all columns share a length.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub times: Vec<f64>,
    /// `states[k]` is the state vector at sample k.
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub disturbance: Vec<f64>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Per-state comparison metrics over a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    /// RMS of the error per state, same units as the state.
    pub rms: Vec<f64>,
    /// Peak absolute error per state.
    pub peak: Vec<f64>,
    /// Time to stay inside the 5% band of the initial error; `None` when the
    /// state never settles within the horizon.
    pub settling_time: Vec<Option<f64>>,
}

/// Classical 4-stage Runge-Kutta step of `x' = A x + Bu u + Bw w` with `u`
/// and `w` held constant over the step.
pub fn rk4_step(model: &LinearModel, x: &[f64], u: &[f64], w: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = model.n_states();
    debug_assert_eq!(x.len(), n);
    let deriv = |x: &[f64]| -> Vec<f64> {
        let mut dx = model.a.matvec(x);
        let bu_u = model.bu.matvec(u);
        let bw_w = model.bw.matvec(w);
        for i in 0..n {
            dx[i] += bu_u[i] + bw_w[i];
        }
        dx
    };
    let k1 = deriv(x);
    let mid1: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k1[i]).collect();
    let k2 = deriv(&mid1);
    let mid2: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k2[i]).collect();
    let k3 = deriv(&mid2);
    let end: Vec<f64> = (0..n).map(|i| x[i] + dt * k3[i]).collect();
    let k4 = deriv(&end);
    let next: Vec<f64> = (0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "rk4_step",
        });
    }
    Ok(next)
}

fn control_output(
    policy: &ControllerPolicy,
    state: &mut ControllerState,
    x: &[f64],
    reference: &[f64],
    dt: f64,
) -> Vec<f64> {
    let mut u = match (&policy.kind, state) {
        (PolicyKind::StateFeedback(k), _) => k.matvec(x),
        (
            PolicyKind::PidCascade(PidCascade::SingleAxis { state_index, gains }),
            ControllerState::Single(pid),
        ) => {
            let e = reference[*state_index] - x[*state_index];
            let (out, next) = pid_step(gains, pid, e, dt);
            *pid = next;
            vec![out]
        }
        (
            PolicyKind::PidCascade(PidCascade::AttitudeCascade {
                angle_p,
                rate_gains,
                mixer,
            }),
            ControllerState::Cascade(pids),
        ) => {
            let mut torque = [0.0; 3];
            for axis in 0..3 {
                let rate_sp = angle_p * (reference[axis] - x[axis]);
                let e_rate = rate_sp - x[3 + axis];
                let (out, next) = pid_step(rate_gains, &pids[axis], e_rate, dt);
                pids[axis] = next;
                torque[axis] = out;
            }
            mixer.matvec(&torque)
        }
        _ => unreachable!("controller state built to match the policy"),
    };
    if let Some(sat) = &policy.saturation {
        for (ui, lim) in u.iter_mut().zip(sat) {
            *ui = ui.clamp(lim[0], lim[1]);
        }
    }
    u
}

/// Runs the closed loop. Deterministic for a fixed config (the gust seed
/// lives in `config.dryden`).
pub fn simulate(
    model: &LinearModel,
    policy: &ControllerPolicy,
    config: &SimConfig,
) -> Result<SimTrace> {
    model.validate()?;
    policy.check_model(model)?;
    let n = model.n_states();
    if config.x0.len() != n || config.reference.len() != n {
        return Err(Error::DimensionMismatch {
            what: "sim.x0/reference".into(),
            expected: (n, 1),
            got: (config.x0.len(), 1),
        });
    }
    if model.n_disturbances() != 1 {
        return Err(Error::DimensionMismatch {
            what: "Bw".into(),
            expected: (n, 1),
            got: (model.bw.rows(), model.bw.cols()),
        });
    }

    let n_steps = (config.t_final / config.dt).round() as usize;
    let w_series: Vec<f64> = match &config.dryden {
        Some(params) => {
            let mut p = params.clone();
            p.dt = config.dt;
            let gusts = generate(&p, config.t_final)?;
            disturbance_channel(&gusts, model)
        }
        None => vec![0.0; n_steps + 1],
    };

    let mut controller_state = match &policy.kind {
        PolicyKind::StateFeedback(_) => ControllerState::Stateless,
        PolicyKind::PidCascade(PidCascade::SingleAxis { .. }) => {
            ControllerState::Single(PidState::default())
        }
        PolicyKind::PidCascade(PidCascade::AttitudeCascade { .. }) => {
            ControllerState::Cascade([PidState::default(); 3])
        }
    };

    let mut trace = SimTrace {
        times: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        inputs: Vec::with_capacity(n_steps + 1),
        disturbance: Vec::with_capacity(n_steps + 1),
    };

    let mut x = config.x0.clone();
    for (k, &w) in w_series.iter().enumerate() {
        let t = k as f64 * config.dt;
        let u = control_output(
            policy,
            &mut controller_state,
            &x,
            &config.reference,
            config.dt,
        );
        trace.times.push(t);
        trace.states.push(x.clone());
        trace.inputs.push(u.clone());
        trace.disturbance.push(w);

        let norm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if norm > DIVERGENCE_LIMIT {
            return Err(Error::Diverged {
                t,
                limit: DIVERGENCE_LIMIT,
            });
        }
        if k < n_steps {
            x = rk4_step(model, &x, &u, &[w], config.dt)?;
        }
    }
    Ok(trace)
}

/// RMS / peak / settling metrics of a trace against a constant reference.
pub fn metrics(trace: &SimTrace, reference: &[f64]) -> Result<Metrics> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let n = trace.states[0].len();
    assert_eq!(reference.len(), n, "reference dimension mismatch");
    let samples = trace.len() as f64;

    let mut rms = vec![0.0; n];
    let mut peak = vec![0.0f64; n];
    for xs in &trace.states {
        for i in 0..n {
            let e = xs[i] - reference[i];
            rms[i] += e * e;
            peak[i] = peak[i].max(e.abs());
        }
    }
    for v in rms.iter_mut() {
        *v = (*v / samples).sqrt();
    }

    let mut settling_time = vec![None; n];
    for i in 0..n {
        let initial = (trace.states[0][i] - reference[i]).abs();
        let band = 0.05 * if initial > 0.0 { initial } else { peak[i] };
        if band == 0.0 {
            settling_time[i] = Some(0.0);
            continue;
        }
        let mut settled_at = None;
        for (k, xs) in trace.states.iter().enumerate() {
            let e = (xs[i] - reference[i]).abs();
            if e <= band {
                if settled_at.is_none() {
                    settled_at = Some(trace.times[k]);
                }
            } else {
                settled_at = None;
            }
        }
        settling_time[i] = settled_at;
    }

    Ok(Metrics {
        rms,
        peak,
        settling_time,
    })
}

/// Aggregated multi-seed comparison for one policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicySummary {
    pub name: String,
    /// Mean RMS per state across the non-diverged seeds.
    pub mean_rms: Vec<f64>,
    pub seeds_used: usize,
    pub diverged_seeds: Vec<u64>,
}

/// Runs every policy over `n_seeds` consecutive gust seeds starting at
/// `seed_base` and reports per-policy mean RMS. Diverged runs are excluded
/// from the means and reported.
pub fn compare(
    model: &LinearModel,
    policies: &[(String, ControllerPolicy)],
    config: &SimConfig,
    n_seeds: usize,
    seed_base: u64,
) -> Result<Vec<PolicySummary>> {
    let n = model.n_states();
    let mut out = Vec::with_capacity(policies.len());
    for (name, policy) in policies {
        let mut acc = vec![0.0; n];
        let mut used = 0usize;
        let mut diverged = Vec::new();
        for s in 0..n_seeds {
            let seed = seed_base + s as u64;
            let mut cfg = config.clone();
            if let Some(d) = cfg.dryden.as_mut() {
                d.seed = seed;
            }
            match simulate(model, policy, &cfg) {
                Ok(trace) => {
                    let m = metrics(&trace, &config.reference)?;
                    for (a, v) in acc.iter_mut().zip(&m.rms) {
                        *a += v;
                    }
                    used += 1;
                }
                Err(Error::Diverged { .. }) => diverged.push(seed),
                Err(e) => return Err(e),
            }
        }
        if used > 0 {
            for v in acc.iter_mut() {
                *v /= used as f64;
            }
        }
        out.push(PolicySummary {
            name: name.clone(),
            mean_rms: acc,
            seeds_used: used,
            diverged_seeds: diverged,
        });
    }
    Ok(out)
}

/// Writes a trace CSV with header `t,<state names>,<input names>,w`.
pub fn write_trace_csv(trace: &SimTrace, model: &LinearModel, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = String::from("t");
    for s in &model.states {
        header.push(',');
        header.push_str(s);
    }
    for s in &model.inputs {
        header.push(',');
        header.push_str(s);
    }
    header.push_str(",w");
    writeln!(f, "{header}")?;
    for k in 0..trace.len() {
        let mut line = format!("{}", trace.times[k]);
        for v in &trace.states[k] {
            line.push_str(&format!(",{v}"));
        }
        for v in &trace.inputs[k] {
            line.push_str(&format!(",{v}"));
        }
        line.push_str(&format!(",{}", trace.disturbance[k]));
        writeln!(f, "{line}")?;
    }
    Ok(())
}
