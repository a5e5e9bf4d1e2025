//! Level-set solver for the minimum-payoff (invariance) game.
//!
//! The value function evolves in backward time `τ` under
//! `∂V/∂τ = min(0, H(z, ∇V))` starting from `V = l`. Space is discretised
//! with first-order one-sided differences and a Godunov-type numerical
//! Hamiltonian (Lax–Friedrichs variants are selectable), time with forward
//! Euler (or two-stage SSP Runge–Kutta). The time step always comes from the
//! global Lax–Friedrichs bounds.
//! Each sweep reads the previous values and writes a separate buffer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{constraint_margin, ActuationBounds, ConstraintBox, RelativeState};
use crate::error::{Error, Result};
use crate::grid::{Grid, ValueField, MAX_DIM};
use crate::hamiltonian::{
    dissipation_bounds, godunov_hamiltonian, hamiltonian, hamiltonian_with, local_dissipation, optimal_control, optimal_d1,
    optimal_follower_accel, Costate, DisturbanceModel,
};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Ghost node `2·V[edge] - V[edge - 1]`.
    #[default]
    LinearExtrapolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Euler,
    /// Two-stage strong-stability-preserving Runge–Kutta.
    Rk2,
}

/// Numerical Hamiltonian used by the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Nested extrema over the costate box, see [`godunov_hamiltonian`].
    #[default]
    Godunov,
    /// Lax–Friedrichs with coefficients bounded per node over the costate
    /// box spanned by the one-sided differences.
    LocalLaxFriedrichs,
    /// Lax–Friedrichs with one coefficient per dimension over the whole grid.
    LaxFriedrichs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub cfl: f64,
    /// Convergence threshold on `max |ΔV| / Δt`.
    pub eps_conv: f64,
    /// Horizon cap (s).
    pub tau_max: f64,
    pub boundary_mode: BoundaryMode,
    pub integrator: Integrator,
    pub scheme: Scheme,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            cfl: 0.9,
            eps_conv: 1e-4,
            tau_max: 20.0,
            boundary_mode: BoundaryMode::LinearExtrapolation,
            integrator: Integrator::Euler,
            scheme: Scheme::Godunov,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::invalid("solver.cfl", format!("must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.eps_conv > 0.0 && self.eps_conv.is_finite()) {
            return Err(Error::invalid("solver.eps_conv", "must be positive"));
        }
        if !(self.tau_max > 0.0 && self.tau_max.is_finite()) {
            return Err(Error::invalid("solver.tau_max", "must be positive"));
        }
        Ok(())
    }
}

/// `V(node) = l(node)` on every node, `τ = 0`.
pub fn initialize(grid: &Grid, k: &ConstraintBox) -> ValueField {
    let dim = grid.dim();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .with_min_len(CHUNK)
        .map(|n| constraint_margin(&RelativeState::from_array(grid.node_coords(n)), k, dim))
        .collect();
    ValueField { grid: grid.clone(), values, tau: 0.0, iterations: 0 }
}

/// Backward and forward differences per dimension at `flat`. Boundary
/// ghosts are linear extrapolations, so at an edge both differences equal
/// the interior one-sided difference.
#[inline]
pub fn one_sided_gradients(grid: &Grid, values: &[f64], flat: usize) -> ([f64; MAX_DIM], [f64; MAX_DIM]) {
    let idx = grid.multi_index(flat);
    let strides = grid.strides();
    let mut minus = [0.0; MAX_DIM];
    let mut plus = [0.0; MAX_DIM];
    let v = values[flat];
    for d in 0..grid.dim() {
        let s = strides[d];
        let dx = grid.spacing(d);
        let last = grid.counts[d] - 1;
        let (left, right) = if idx[d] == 0 {
            let r = values[flat + s];
            (2.0 * v - r, r)
        } else if idx[d] == last {
            let l = values[flat - s];
            (l, 2.0 * v - l)
        } else {
            (values[flat - s], values[flat + s])
        };
        minus[d] = (v - left) / dx;
        plus[d] = (right - v) / dx;
    }
    (minus, plus)
}

/// Lax–Friedrichs numerical Hamiltonian for the update `V += Δt·min(0, Ĥ)`:
/// `Ĥ = H(z, (p⁻ + p⁺)/2) + Σ α_i (p⁺_i - p⁻_i) / 2`.
///
/// The dissipation enters with a plus sign because the value evolves as
/// `∂V/∂τ = +H`; with this sign the scheme is monotone under the CFL limit.
#[inline]
pub fn lf_numerical_hamiltonian(
    z: &RelativeState,
    p_minus: &[f64],
    p_plus: &[f64],
    alphas: &[f64],
    model: &DisturbanceModel,
    bounds: &ActuationBounds,
) -> f64 {
    let mut mean = [0.0; MAX_DIM];
    let mut dissipation = 0.0;
    for d in 0..alphas.len() {
        mean[d] = 0.5 * (p_minus[d] + p_plus[d]);
        dissipation += 0.5 * alphas[d] * (p_plus[d] - p_minus[d]);
    }
    hamiltonian(z, &Costate::from_array(mean), model, bounds) + dissipation
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub iteration: usize,
    pub tau: f64,
    pub dt: f64,
    pub max_change: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub field: ValueField,
    pub converged: bool,
    pub last_report: Option<StepReport>,
}

/// Explicit stepper bound to one problem instance.
pub struct LevelSetSolver {
    grid: Grid,
    model: DisturbanceModel,
    bounds: ActuationBounds,
    settings: SolverSettings,
    alphas: Vec<f64>,
    dt: f64,
    initial: Vec<f64>,
    floor: f64,
    // u3* per node for p4 > 0 and p4 <= 0; depends on the state only
    follower: Option<(Vec<f64>, Vec<f64>)>,
    scratch: Vec<f64>,
    stage: Vec<f64>,
}

impl LevelSetSolver {
    pub fn new(
        grid: &Grid,
        k: &ConstraintBox,
        model: DisturbanceModel,
        bounds: ActuationBounds,
        settings: SolverSettings,
    ) -> Result<(Self, ValueField)> {
        grid.validate()?;
        k.validate()?;
        bounds.validate()?;
        settings.validate()?;
        if let DisturbanceModel::ReactionTime { idm, .. } = &model {
            idm.validate()?;
        }
        let alphas = dissipation_bounds(&grid.lo, &grid.hi, &model, &bounds);
        let rate: f64 = alphas.iter().zip(grid.spacings()).map(|(a, dx)| a / dx).sum();
        if !(rate > 0.0) {
            return Err(Error::invalid("grid", "dissipation bounds vanish; no time step can be derived"));
        }
        let dt = settings.cfl / rate;
        let field = initialize(grid, k);
        let floor = field.min_value();
        let follower = match (&model, grid.dim()) {
            (DisturbanceModel::ReactionTime { .. }, 4) => {
                let up = Costate::new(0.0, 0.0, 0.0, 1.0);
                let down = Costate::new(0.0, 0.0, 0.0, -1.0);
                let eval = |p: Costate| -> Vec<f64> {
                    (0..grid.len())
                        .into_par_iter()
                        .with_min_len(CHUNK)
                        .map(|n| {
                            optimal_follower_accel(&RelativeState::from_array(grid.node_coords(n)), &p, &model, &bounds)
                        })
                        .collect()
                };
                Some((eval(up), eval(down)))
            }
            _ => None,
        };
        let solver = Self {
            grid: grid.clone(),
            model,
            bounds,
            settings,
            alphas,
            dt,
            initial: field.values.clone(),
            floor,
            follower,
            scratch: vec![0.0; grid.len()],
            stage: Vec::new(),
        };
        Ok((solver, field))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> &DisturbanceModel {
        &self.model
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// The initial margin field `l` on the grid.
    pub fn initial_values(&self) -> &[f64] {
        &self.initial
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    /// Values from before the most recent [`step`](Self::step).
    pub fn previous_values(&self) -> &[f64] {
        &self.scratch
    }

    /// `min(0, Ĥ)` at one node.
    #[inline]
    fn rate_at(&self, values: &[f64], flat: usize) -> f64 {
        let dim = self.grid.dim();
        let (pm, pp) = one_sided_gradients(&self.grid, values, flat);
        let z = RelativeState::from_array(self.grid.node_coords(flat));
        let (u3_up, u3_down) = match &self.follower {
            Some((up, down)) => (up[flat], down[flat]),
            None => (self.bounds.dist_hi(), self.bounds.dist_lo()),
        };
        let alphas = match self.settings.scheme {
            Scheme::Godunov => {
                return godunov_hamiltonian(&z, &pm[..dim], &pp[..dim], &self.bounds, u3_up, u3_down).min(0.0);
            }
            Scheme::LocalLaxFriedrichs => {
                local_dissipation(&z, &pm[..dim], &pp[..dim], &self.bounds, u3_up, u3_down)
            }
            Scheme::LaxFriedrichs => {
                let mut a = [0.0; MAX_DIM];
                a[..dim].copy_from_slice(&self.alphas);
                a
            }
        };
        let mut mean = [0.0; MAX_DIM];
        let mut dissipation = 0.0;
        for d in 0..dim {
            mean[d] = 0.5 * (pm[d] + pp[d]);
            dissipation += 0.5 * alphas[d] * (pp[d] - pm[d]);
        }
        let p = Costate::from_array(mean);
        // u3 only enters through p4, which is zero in the planar scenario
        let u3 = if p.p4 > 0.0 { u3_up } else { u3_down };
        let h = hamiltonian_with(&z, &p, optimal_d1(&p, &self.bounds), optimal_control(&p, &self.bounds), u3);
        (h + dissipation).min(0.0)
    }

    fn euler_into(&self, src: &[f64], dst: &mut [f64], dt: f64) {
        dst.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
            let base = c * CHUNK;
            for (j, o) in out.iter_mut().enumerate() {
                let n = base + j;
                *o = src[n] + dt * self.rate_at(src, n);
            }
        });
    }

    /// Advances `field` by one time step (shortened to land on `tau_max`).
    pub fn step(&mut self, field: &mut ValueField) -> Result<StepReport> {
        if field.grid != self.grid {
            return Err(Error::invalid("field", "grid does not match the solver grid"));
        }
        let dt = self.dt.min(self.settings.tau_max - field.tau).max(0.0);
        let dt = if dt > 0.0 { dt } else { self.dt };
        let mut next = std::mem::take(&mut self.scratch);
        match self.settings.integrator {
            Integrator::Euler => self.euler_into(&field.values, &mut next, dt),
            Integrator::Rk2 => {
                let mut stage = std::mem::take(&mut self.stage);
                stage.resize(self.grid.len(), 0.0);
                self.euler_into(&field.values, &mut stage, dt);
                self.euler_into(&stage, &mut next, dt);
                next.par_iter_mut().zip(field.values.par_iter()).for_each(|(n, v)| *n = 0.5 * (*v + *n));
                self.stage = stage;
            }
        }
        let floor = self.floor;
        // never below min l, never above the previous value
        let max_change = next
            .par_iter_mut()
            .zip(field.values.par_iter())
            .with_min_len(CHUNK)
            .map(|(n, &v)| {
                *n = n.max(floor).min(v);
                if n.is_finite() {
                    (v - *n).abs()
                } else {
                    f64::NAN
                }
            })
            .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) });
        if max_change.is_nan() {
            let node = next.iter().position(|v| !v.is_finite()).unwrap_or(0);
            let value = next[node];
            self.scratch = next;
            return Err(Error::Instability {
                node,
                state: self.grid.node_coords(node)[..self.grid.dim()].to_vec(),
                iteration: field.iterations + 1,
                value,
            });
        }
        std::mem::swap(&mut field.values, &mut next);
        self.scratch = next;
        field.tau += dt;
        field.iterations += 1;
        Ok(StepReport { iteration: field.iterations, tau: field.tau, dt, max_change })
    }

    /// Steps until `max |ΔV| / Δt < eps_conv` or `τ >= tau_max`. The observer
    /// sees every report together with the new field and the previous values.
    pub fn run(
        &mut self,
        mut field: ValueField,
        observer: &mut dyn FnMut(&StepReport, &ValueField, &[f64]),
    ) -> Result<SolveOutcome> {
        let mut last = None;
        let mut converged = false;
        while field.tau < self.settings.tau_max {
            let report = self.step(&mut field)?;
            observer(&report, &field, &self.scratch);
            last = Some(report);
            if report.max_change / report.dt < self.settings.eps_conv {
                converged = true;
                break;
            }
        }
        Ok(SolveOutcome { field, converged, last_report: last })
    }
}

/// Solves the invariance game from `V = l` to convergence or the horizon cap.
pub fn solve(
    grid: &Grid,
    k: &ConstraintBox,
    model: DisturbanceModel,
    bounds: ActuationBounds,
    settings: SolverSettings,
) -> Result<SolveOutcome> {
    solve_with_observer(grid, k, model, bounds, settings, &mut |_, _, _| {})
}

pub fn solve_with_observer(
    grid: &Grid,
    k: &ConstraintBox,
    model: DisturbanceModel,
    bounds: ActuationBounds,
    settings: SolverSettings,
    observer: &mut dyn FnMut(&StepReport, &ValueField, &[f64]),
) -> Result<SolveOutcome> {
    let (mut solver, field) = LevelSetSolver::new(grid, k, model, bounds, settings)?;
    solver.run(field, observer)
}
