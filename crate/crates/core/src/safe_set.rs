//! Queries on a solved value field: interpolation, membership, the
//! least-restrictive safety filter and 2D slices.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ActuationBounds, RelativeState, STATE_NAMES};
use crate::error::{Error, Result};
use crate::grid::{ValueField, MAX_DIM};
use crate::hamiltonian::{optimal_control, Costate};
use crate::idm::IdmParams;

/// Ego behaviour while the filter is inactive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NominalPolicy {
    Constant { accel: f64 },
    /// IDM car following toward the leader with a fixed time headway.
    IdmTowardLeader { time_headway: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyFilterConfig {
    pub activation_margin: f64,
    pub nominal_policy: NominalPolicy,
}

impl Default for SafetyFilterConfig {
    fn default() -> Self {
        Self { activation_margin: 0.0, nominal_policy: NominalPolicy::Constant { accel: 0.0 } }
    }
}

impl SafetyFilterConfig {
    pub fn validate(&self, bounds: &ActuationBounds) -> Result<()> {
        if !(self.activation_margin >= 0.0 && self.activation_margin.is_finite()) {
            return Err(Error::invalid("filter.activation_margin", "must be finite and >= 0"));
        }
        match self.nominal_policy {
            NominalPolicy::Constant { accel } => {
                if !(accel >= bounds.control_lo() && accel <= bounds.control_hi()) {
                    return Err(Error::invalid("filter.nominal_policy.accel", "must lie within the control bounds"));
                }
            }
            NominalPolicy::IdmTowardLeader { time_headway } => {
                if !(time_headway >= 0.0 && time_headway.is_finite()) {
                    return Err(Error::invalid("filter.nominal_policy.time_headway", "must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// Nominal ego acceleration, clamped into the control bounds.
pub fn nominal_control(z: &RelativeState, policy: &NominalPolicy, idm: &IdmParams, bounds: &ActuationBounds) -> f64 {
    let raw = match *policy {
        NominalPolicy::Constant { accel } => accel,
        NominalPolicy::IdmTowardLeader { time_headway } => {
            if z.x_g1 <= 0.0 {
                bounds.control_lo()
            } else {
                let v = idm.v_ego_nominal;
                let s = idm.s0 + (v * time_headway + v * (-z.v_g1) / idm.interaction_scale()).max(0.0);
                let r = s / z.x_g1;
                idm.a * (1.0 - (v / idm.v0).powf(idm.delta) - r * r)
            }
        }
    };
    raw.clamp(bounds.control_lo(), bounds.control_hi())
}

/// Multilinear interpolation of the field at `z` (2 or 4 coordinates).
/// Exact at nodes; no extrapolation outside the grid.
pub fn value_at(field: &ValueField, z: &[f64]) -> Result<f64> {
    let grid = &field.grid;
    let (cell, frac) = grid.locate(z)?;
    let dim = grid.dim();
    let strides = grid.strides();
    let base: usize = (0..dim).map(|d| cell[d] * strides[d]).sum();
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut offset = 0;
        for d in 0..dim {
            if corner & (1 << d) != 0 {
                w *= frac[d];
                offset += strides[d];
            } else {
                w *= 1.0 - frac[d];
            }
        }
        if w != 0.0 {
            acc += w * field.values[base + offset];
        }
    }
    Ok(acc)
}

pub fn value_at_state(field: &ValueField, z: &RelativeState) -> Result<f64> {
    value_at(field, &z.to_array()[..field.dim()])
}

/// Costate from central differences of the interpolant with half-cell steps.
/// The query must be at least one cell away from every grid face.
pub fn gradient_at(field: &ValueField, z: &[f64]) -> Result<Costate> {
    let grid = &field.grid;
    let dim = grid.dim();
    if z.len() != dim {
        return Err(Error::invalid("state", format!("expected {dim} coordinates, got {}", z.len())));
    }
    let mut p = [0.0; MAX_DIM];
    for d in 0..dim {
        let dx = grid.spacing(d);
        if !(z[d] >= grid.lo[d] + dx && z[d] <= grid.hi[d] - dx) {
            return Err(Error::OutOfDomain {
                state: z.to_vec(),
                reason: format!("{} = {} is within one cell of the grid boundary", STATE_NAMES[d], z[d]),
            });
        }
        let h = 0.5 * dx;
        let mut fwd = z.to_vec();
        let mut bwd = z.to_vec();
        fwd[d] += h;
        bwd[d] -= h;
        p[d] = (value_at(field, &fwd)? - value_at(field, &bwd)?) / (2.0 * h);
    }
    Ok(Costate::from_array(p))
}

pub fn gradient_at_state(field: &ValueField, z: &RelativeState) -> Result<Costate> {
    gradient_at(field, &z.to_array()[..field.dim()])
}

/// `value_at(z) > margin`; the zero level set itself counts as unsafe.
pub fn is_safe(field: &ValueField, z: &[f64], margin: f64) -> Result<bool> {
    Ok(value_at(field, z)? > margin)
}

/// Least-restrictive filter: pass `u_nominal` through while the value is
/// above the activation margin, otherwise apply the game-optimal control.
pub fn safety_filter(
    field: &ValueField,
    z: &[f64],
    u_nominal: f64,
    cfg: &SafetyFilterConfig,
    bounds: &ActuationBounds,
) -> Result<f64> {
    if value_at(field, z)? > cfg.activation_margin {
        Ok(u_nominal)
    } else {
        Ok(optimal_control(&gradient_at(field, z)?, bounds))
    }
}

/// Fraction of nodes whose value exceeds `margin`.
pub fn safe_volume_fraction(field: &ValueField, margin: f64) -> f64 {
    let safe = field.values.iter().filter(|&&v| v > margin).count();
    safe as f64 / field.values.len() as f64
}

/// Two-dimensional cut through a field.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    /// Free dimensions (column axis, row axis).
    pub free: [usize; 2],
    pub fixed: Vec<(usize, f64)>,
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    /// `values[row][col]` at `(x_axis[col], y_axis[row])`.
    pub values: Vec<Vec<f64>>,
}

impl Slice {
    pub fn axis_names(&self) -> [&'static str; 2] {
        [STATE_NAMES[self.free[0]], STATE_NAMES[self.free[1]]]
    }
}

pub fn dimension_index(name: &str, dim: usize) -> Result<usize> {
    STATE_NAMES[..dim]
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| Error::invalid("fix", format!("unknown dimension '{name}' (known: {})", STATE_NAMES[..dim].join(", "))))
}

/// Samples the field over two free dimensions at native resolution with
/// the remaining dimensions pinned to `fixed`.
pub fn extract_slice(field: &ValueField, fixed: &[(usize, f64)], free: [usize; 2]) -> Result<Slice> {
    let grid = &field.grid;
    let dim = grid.dim();
    if free[0] == free[1] || free.iter().any(|&d| d >= dim) {
        return Err(Error::invalid("slice", "need two distinct free dimensions"));
    }
    let mut z = vec![0.0; dim];
    let mut pinned = vec![false; dim];
    for &(d, v) in fixed {
        if d >= dim || pinned[d] || free.contains(&d) {
            return Err(Error::invalid("fix", format!("dimension {d} cannot be fixed")));
        }
        if !(v >= grid.lo[d] && v <= grid.hi[d]) {
            return Err(Error::OutOfDomain {
                state: vec![v],
                reason: format!("fixed {} = {v} not in [{}, {}]", STATE_NAMES[d], grid.lo[d], grid.hi[d]),
            });
        }
        pinned[d] = true;
        z[d] = v;
    }
    if let Some(d) = (0..dim).find(|&d| !pinned[d] && !free.contains(&d)) {
        return Err(Error::invalid("fix", format!("dimension {} is neither fixed nor free", STATE_NAMES[d])));
    }
    let x_axis = grid.axis(free[0]);
    let y_axis = grid.axis(free[1]);
    let mut values = Vec::with_capacity(y_axis.len());
    for &y in &y_axis {
        let mut row = Vec::with_capacity(x_axis.len());
        for &x in &x_axis {
            z[free[0]] = x;
            z[free[1]] = y;
            row.push(value_at(field, &z)?);
        }
        values.push(row);
    }
    Ok(Slice { free, fixed: fixed.to_vec(), x_axis, y_axis, values })
}
