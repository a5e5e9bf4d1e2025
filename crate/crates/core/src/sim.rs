//! Closed-loop simulation of the two- and three-car scenarios with the ego
//! under the safety filter and scripted, IDM or adversarial humans.

use serde::{Deserialize, Serialize};

use crate::dynamics::{constraint_margin, flow2, flow4, ActuationBounds, ConstraintBox, RelativeState};
use crate::error::{Error, Result};
use crate::grid::ValueField;
use crate::hamiltonian::{optimal_d1, optimal_d2_baseline, reaction_time_policy, ReactionRule};
use crate::idm::{idm_accel, IdmParams};
use crate::safe_set::{gradient_at_state, nominal_control, safety_filter, value_at_state, SafetyFilterConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LeaderBehavior {
    ConstantAccel { accel: f64 },
    /// Zero acceleration until `t_start`, then `accel`.
    ScriptedBrake { t_start: f64, accel: f64 },
    /// Value-gradient adversary (`d1*`).
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FollowerBehavior {
    IdmFixedT { t: f64 },
    /// IDM follower whose reaction time is chosen adversarially from the value gradient.
    AdversarialReaction,
    /// Extreme-action adversary (`d2*` of the baseline model).
    AdversarialExtreme,
    ConstantAccel { accel: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentBehavior {
    pub leader: LeaderBehavior,
    pub follower: FollowerBehavior,
}

impl Default for AgentBehavior {
    fn default() -> Self {
        Self { leader: LeaderBehavior::Adversarial, follower: FollowerBehavior::AdversarialReaction }
    }
}

impl AgentBehavior {
    pub fn validate(&self, bounds: &ActuationBounds, idm: &IdmParams) -> Result<()> {
        let in_dist = |a: f64| a >= bounds.dist_lo() && a <= bounds.dist_hi();
        match self.leader {
            LeaderBehavior::ConstantAccel { accel } | LeaderBehavior::ScriptedBrake { accel, .. } if !in_dist(accel) => {
                return Err(Error::invalid("simulation.behaviors.leader.accel", "must lie within the disturbance bounds"))
            }
            LeaderBehavior::ScriptedBrake { t_start, .. } if !(t_start >= 0.0 && t_start.is_finite()) => {
                return Err(Error::invalid("simulation.behaviors.leader.t_start", "must be finite and >= 0"))
            }
            _ => {}
        }
        match self.follower {
            FollowerBehavior::ConstantAccel { accel } if !in_dist(accel) => {
                Err(Error::invalid("simulation.behaviors.follower.accel", "must lie within the disturbance bounds"))
            }
            FollowerBehavior::IdmFixedT { t } if !(t >= idm.t_min && t <= idm.t_max) => {
                Err(Error::invalid("simulation.behaviors.follower.t", "must lie within [t_min, t_max]"))
            }
            _ => Ok(()),
        }
    }
}

/// Everything a simulation step needs besides the state.
#[derive(Debug, Clone, Copy)]
pub struct SimContext<'a> {
    pub dim: usize,
    /// Solved field; `None` runs the ego open loop on its nominal policy.
    pub field: Option<&'a ValueField>,
    pub filter: SafetyFilterConfig,
    pub bounds: ActuationBounds,
    pub idm: IdmParams,
    pub rule: ReactionRule,
    pub constraint: ConstraintBox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inputs {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub state: RelativeState,
    /// Inputs held over `[t, t + dt)`; absent on the final sample.
    pub inputs: Option<Inputs>,
    pub value: Option<f64>,
    pub margin: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub dim: usize,
    pub dt: f64,
    pub samples: Vec<TraceSample>,
    pub first_violation: Option<f64>,
    pub left_domain: bool,
}

impl Trace {
    pub fn steps(&self) -> usize {
        self.samples.iter().filter(|s| s.inputs.is_some()).count()
    }

    pub fn violated(&self) -> bool {
        self.first_violation.is_some()
    }
}

fn in_domain(ctx: &SimContext<'_>, z: &RelativeState) -> bool {
    ctx.field.is_some_and(|f| f.grid.contains(&z.to_array()[..ctx.dim]))
}

fn leader_accel(z: &RelativeState, t: f64, b: &LeaderBehavior, ctx: &SimContext<'_>) -> f64 {
    match *b {
        LeaderBehavior::ConstantAccel { accel } => accel,
        LeaderBehavior::ScriptedBrake { t_start, accel } => {
            if t >= t_start {
                accel
            } else {
                0.0
            }
        }
        LeaderBehavior::Adversarial => match ctx.field.map(|f| gradient_at_state(f, z)) {
            Some(Ok(p)) => optimal_d1(&p, &ctx.bounds),
            _ => ctx.bounds.dist_lo(),
        },
    }
}

fn follower_accel(z: &RelativeState, b: &FollowerBehavior, ctx: &SimContext<'_>) -> f64 {
    let gradient = || ctx.field.map(|f| gradient_at_state(f, z));
    match *b {
        FollowerBehavior::ConstantAccel { accel } => accel,
        FollowerBehavior::IdmFixedT { t } => idm_accel(z, t, &ctx.idm, &ctx.bounds),
        FollowerBehavior::AdversarialExtreme => match gradient() {
            Some(Ok(p)) => optimal_d2_baseline(&p, &ctx.bounds),
            _ => ctx.bounds.dist_hi(),
        },
        FollowerBehavior::AdversarialReaction => {
            let t = match gradient() {
                Some(Ok(p)) => reaction_time_policy(z, &p, &ctx.idm, ctx.rule),
                _ => ctx.idm.t_min,
            };
            idm_accel(z, t, &ctx.idm, &ctx.bounds)
        }
    }
}

fn ego_accel(z: &RelativeState, ctx: &SimContext<'_>) -> f64 {
    let nominal = nominal_control(z, &ctx.filter.nominal_policy, &ctx.idm, &ctx.bounds);
    match ctx.field {
        Some(f) if in_domain(ctx, z) => {
            safety_filter(f, &z.to_array()[..ctx.dim], nominal, &ctx.filter, &ctx.bounds).unwrap_or(nominal)
        }
        _ => nominal,
    }
}

fn derivative(z: &[f64; 4], dim: usize, u: &Inputs) -> [f64; 4] {
    if dim == 2 {
        let d = flow2(z[0], z[1], u.u1, u.u2);
        [d[0], d[1], 0.0, 0.0]
    } else {
        flow4(&RelativeState::from_array(*z), u.u1, u.u2, u.u3)
    }
}

/// Classical fourth-order Runge–Kutta step with inputs held constant.
fn integrate(z: &RelativeState, dim: usize, u: &Inputs, dt: f64) -> RelativeState {
    let y = z.to_array();
    let add = |a: &[f64; 4], k: &[f64; 4], h: f64| -> [f64; 4] { std::array::from_fn(|i| a[i] + h * k[i]) };
    let k1 = derivative(&y, dim, u);
    let k2 = derivative(&add(&y, &k1, 0.5 * dt), dim, u);
    let k3 = derivative(&add(&y, &k2, 0.5 * dt), dim, u);
    let k4 = derivative(&add(&y, &k3, dt), dim, u);
    RelativeState::from_array(std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

/// Resolves all inputs at `(z, t)` and advances the state by `dt`.
/// Adversarial humans fall back to extreme inputs when no gradient is
/// available; the ego falls back to its nominal policy.
pub fn step_sim(
    z: &RelativeState,
    t: f64,
    behaviors: &AgentBehavior,
    ctx: &SimContext<'_>,
    dt: f64,
) -> Result<(RelativeState, Inputs)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("simulation.dt", "must be positive"));
    }
    let u1 = leader_accel(z, t, &behaviors.leader, ctx);
    let u2 = ego_accel(z, ctx);
    let u3 = if ctx.dim == 4 { follower_accel(z, &behaviors.follower, ctx) } else { 0.0 };
    let inputs = Inputs { u1, u2, u3 };
    let next = integrate(z, ctx.dim, &inputs, dt);
    if !next.is_finite() {
        return Err(Error::Instability { node: 0, state: z.to_array()[..ctx.dim].to_vec(), iteration: 0, value: f64::NAN });
    }
    Ok((next, inputs))
}

fn is_violation(z: &RelativeState, margin: f64, dim: usize) -> bool {
    let gap = if dim == 4 { z.x_g1.min(z.x_g2) } else { z.x_g1 };
    gap <= 0.0 || margin < 0.0
}

/// Simulates `ceil(horizon / dt)` steps. Stops early once a field is given
/// and the state leaves its grid.
pub fn run(
    z0: &RelativeState,
    behaviors: &AgentBehavior,
    ctx: &SimContext<'_>,
    dt: f64,
    horizon: f64,
) -> Result<Trace> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("simulation.horizon", "must be positive"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("simulation.dt", "must be positive"));
    }
    let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let mut trace = Trace { dim: ctx.dim, dt, ..Trace::default() };
    let mut z = *z0;
    let sample = |z: &RelativeState, t: f64, trace: &mut Trace, inputs: Option<Inputs>| {
        let margin = constraint_margin(z, &ctx.constraint, ctx.dim);
        let value = ctx.field.and_then(|f| value_at_state(f, z).ok());
        let violated = is_violation(z, margin, ctx.dim);
        if violated && trace.first_violation.is_none() {
            trace.first_violation = Some(t);
        }
        trace.samples.push(TraceSample { t, state: *z, inputs, value, margin, violated });
    };
    for k in 0..steps {
        let t = k as f64 * dt;
        let (next, inputs) = step_sim(&z, t, behaviors, ctx, dt)?;
        sample(&z, t, &mut trace, Some(inputs));
        z = next;
        if ctx.field.is_some() && !in_domain(ctx, &z) {
            trace.left_domain = true;
            sample(&z, (k + 1) as f64 * dt, &mut trace, None);
            return Ok(trace);
        }
    }
    sample(&z, steps as f64 * dt, &mut trace, None);
    Ok(trace)
}

/// Lowest constraint margin along the trace.
pub fn trajectory_payoff(trace: &Trace, k: &ConstraintBox) -> Result<f64> {
    if trace.samples.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(trace.samples.iter().map(|s| constraint_margin(&s.state, k, trace.dim)).fold(f64::INFINITY, f64::min))
}
