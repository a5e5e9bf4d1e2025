//! Relative-state platoon dynamics, actuation bounds and the box constraint set.
//!
//! The ego car drives between a human leader and a human follower. The state
//! is expressed relative to the ego:
//!
//! * `x_g1`: gap from the ego to the leader,
//! * `v_g1`: leader speed minus ego speed (negative means closing on the leader),
//! * `x_g2`: gap from the follower to the ego,
//! * `v_g2`: ego speed minus follower speed (negative means the follower is closing).
//!
//! The two-car scenario only carries the leader pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names of the state coordinates in storage order.
pub const STATE_NAMES: [&str; 4] = ["x_g1", "v_g1", "x_g2", "v_g2"];

/// Two-car (leader pair only) or three-car scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    TwoCar,
    ThreeCar,
}

impl Scenario {
    pub fn dim(self) -> usize {
        match self {
            Scenario::TwoCar => 2,
            Scenario::ThreeCar => 4,
        }
    }

    pub fn from_dim(dim: usize) -> Option<Self> {
        match dim {
            2 => Some(Scenario::TwoCar),
            4 => Some(Scenario::ThreeCar),
            _ => None,
        }
    }
}

/// Relative platoon state. Gaps are not required to be positive: violating
/// states must be representable by the solver and the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RelativeState {
    pub x_g1: f64,
    pub v_g1: f64,
    pub x_g2: f64,
    pub v_g2: f64,
}

impl RelativeState {
    pub fn new(x_g1: f64, v_g1: f64, x_g2: f64, v_g2: f64) -> Self {
        Self { x_g1, v_g1, x_g2, v_g2 }
    }

    /// Two-car state; the follower pair is zeroed.
    pub fn planar(x_g1: f64, v_g1: f64) -> Self {
        Self { x_g1, v_g1, x_g2: 0.0, v_g2: 0.0 }
    }

    /// Builds a state from 2 or 4 coordinates in storage order.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        let state = match *coords {
            [x, v] => Self::planar(x, v),
            [x1, v1, x2, v2] => Self::new(x1, v1, x2, v2),
            _ => {
                return Err(Error::invalid(
                    "state",
                    format!("expected 2 or 4 coordinates, got {}", coords.len()),
                ))
            }
        };
        if !state.is_finite() {
            return Err(Error::invalid("state", "coordinates must be finite"));
        }
        Ok(state)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x_g1, self.v_g1, self.x_g2, self.v_g2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }
}

/// Acceleration bounds of the ego (control) and of the human drivers
/// (disturbance). The disturbance interval also clamps the follower's IDM
/// acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuationBounds {
    pub control: [f64; 2],
    pub disturbance: [f64; 2],
}

impl Default for ActuationBounds {
    fn default() -> Self {
        Self { control: [-2.0, 2.0], disturbance: [-1.5, 1.5] }
    }
}

impl ActuationBounds {
    pub fn new(control_lo: f64, control_hi: f64, dist_lo: f64, dist_hi: f64) -> Result<Self> {
        let bounds = Self { control: [control_lo, control_hi], disturbance: [dist_lo, dist_hi] };
        bounds.validate()?;
        Ok(bounds)
    }

    pub fn validate(&self) -> Result<()> {
        let [clo, chi] = self.control;
        let [dlo, dhi] = self.disturbance;
        if !(clo.is_finite() && chi.is_finite() && clo < 0.0 && 0.0 < chi) {
            return Err(Error::invalid("bounds.control", format!("need lo < 0 < hi, got [{clo}, {chi}]")));
        }
        if !(dlo.is_finite() && dhi.is_finite() && dlo < 0.0 && 0.0 < dhi) {
            return Err(Error::invalid("bounds.disturbance", format!("need lo < 0 < hi, got [{dlo}, {dhi}]")));
        }
        Ok(())
    }

    #[inline]
    pub fn control_lo(&self) -> f64 {
        self.control[0]
    }
    #[inline]
    pub fn control_hi(&self) -> f64 {
        self.control[1]
    }
    #[inline]
    pub fn dist_lo(&self) -> f64 {
        self.disturbance[0]
    }
    #[inline]
    pub fn dist_hi(&self) -> f64 {
        self.disturbance[1]
    }

    pub fn clamp_disturbance(&self, a: f64) -> f64 {
        a.clamp(self.dist_lo(), self.dist_hi())
    }
}

/// Box constraint set applied to each (gap, relative speed) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintBox {
    pub gap: [f64; 2],
    pub rel_speed: [f64; 2],
}

impl Default for ConstraintBox {
    fn default() -> Self {
        Self { gap: [0.0, 40.0], rel_speed: [-10.0, 10.0] }
    }
}

impl ConstraintBox {
    pub fn new(x_lo: f64, x_hi: f64, v_lo: f64, v_hi: f64) -> Result<Self> {
        let k = Self { gap: [x_lo, x_hi], rel_speed: [v_lo, v_hi] };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let [xlo, xhi] = self.gap;
        let [vlo, vhi] = self.rel_speed;
        if !(xlo.is_finite() && xhi.is_finite() && xlo >= 0.0 && xlo < xhi) {
            return Err(Error::invalid("constraint_box.gap", format!("need 0 <= lo < hi, got [{xlo}, {xhi}]")));
        }
        if !(vlo.is_finite() && vhi.is_finite() && vlo < vhi) {
            return Err(Error::invalid("constraint_box.rel_speed", format!("need lo < hi, got [{vlo}, {vhi}]")));
        }
        Ok(())
    }

    #[inline]
    fn pair_margin(&self, x: f64, v: f64) -> f64 {
        (x - self.gap[0])
            .min(self.gap[1] - x)
            .min(v - self.rel_speed[0])
            .min(self.rel_speed[1] - v)
    }
}

/// Time derivative of the three-car relative state for leader acceleration
/// `u1`, ego acceleration `u2` and follower acceleration `u3`.
#[inline]
pub fn flow4(z: &RelativeState, u1: f64, u2: f64, u3: f64) -> [f64; 4] {
    [z.v_g1, u1 - u2, z.v_g2, u2 - u3]
}

/// Two-car restriction of [`flow4`].
#[inline]
pub fn flow2(x_g1: f64, v_g1: f64, u1: f64, u2: f64) -> [f64; 2] {
    let _ = x_g1;
    [v_g1, u1 - u2]
}

/// Min-of-faces margin `l(z)`: positive inside `K`, zero on its faces,
/// negative outside. `dim` selects whether the follower pair participates.
#[inline]
pub fn constraint_margin(z: &RelativeState, k: &ConstraintBox, dim: usize) -> f64 {
    let lead = k.pair_margin(z.x_g1, z.v_g1);
    if dim >= 4 {
        lead.min(k.pair_margin(z.x_g2, z.v_g2))
    } else {
        lead
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flow4_hand_substitution() {
        let z = RelativeState::new(10.0, -2.0, 8.0, 1.0);
        let d = flow4(&z, 0.5, -1.0, 0.2);
        assert_eq!(d[0], -2.0);
        assert_eq!(d[1], 1.5);
        assert_eq!(d[2], 1.0);
        assert!((d[3] - -1.2).abs() < 1e-15);
    }

    #[test]
    fn flow4_equilibrium_and_equal_inputs() {
        assert_eq!(flow4(&RelativeState::new(5.0, 0.0, 5.0, 0.0), 0.0, 0.0, 0.0), [0.0; 4]);
        let z = RelativeState::new(3.0, 0.7, 3.0, 0.7);
        assert_eq!(flow4(&z, 1.1, 1.1, 1.1), [0.7, 0.0, 0.7, 0.0]);
    }

    #[test]
    fn flow2_examples() {
        assert_eq!(flow2(4.0, -1.5, -1.5, -2.0), [-1.5, 0.5]);
        assert_eq!(flow2(4.0, 0.0, 0.0, 0.0), [0.0, 0.0]);
        assert_eq!(flow2(9.0, 2.5, 0.3, 0.3), [2.5, 0.0]);
    }

    #[test]
    fn margin_examples() {
        let k = ConstraintBox::default();
        assert_eq!(constraint_margin(&RelativeState::planar(20.0, 0.0), &k, 2), 10.0);
        assert_eq!(constraint_margin(&RelativeState::planar(0.0, 3.0), &k, 2), 0.0);
        assert_eq!(constraint_margin(&RelativeState::planar(-1.0, 0.0), &k, 2), -1.0);
        // follower pair only counts in 4D
        let z = RelativeState::new(20.0, 0.0, -3.0, 0.0);
        assert_eq!(constraint_margin(&z, &k, 2), 10.0);
        assert_eq!(constraint_margin(&z, &k, 4), -3.0);
    }

    #[test]
    fn invalid_bounds_and_boxes_are_rejected() {
        assert!(ActuationBounds::new(2.0, -2.0, -1.5, 1.5).is_err());
        assert!(ActuationBounds::new(-2.0, 2.0, 0.0, 1.5).is_err());
        assert!(ConstraintBox::new(-1.0, 40.0, -10.0, 10.0).is_err());
        assert!(ConstraintBox::new(0.0, 40.0, 10.0, 10.0).is_err());
        assert!(RelativeState::from_coords(&[1.0, 2.0, 3.0]).is_err());
        assert!(RelativeState::from_coords(&[1.0, f64::NAN]).is_err());
    }

    fn state() -> impl Strategy<Value = RelativeState> {
        (-50.0..50.0, -20.0..20.0, -50.0..50.0, -20.0..20.0f64)
            .prop_map(|(a, b, c, d)| RelativeState::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn flow_is_affine_in_inputs(z in state(), u in prop::array::uniform3(-3.0..3.0f64),
                                    w in prop::array::uniform3(-3.0..3.0f64), s in -2.0..2.0f64) {
            let base = flow4(&z, 0.0, 0.0, 0.0);
            let lin = |u: [f64; 3]| {
                let f = flow4(&z, u[0], u[1], u[2]);
                [f[0] - base[0], f[1] - base[1], f[2] - base[2], f[3] - base[3]]
            };
            let combo = [u[0] + s * w[0], u[1] + s * w[1], u[2] + s * w[2]];
            let (a, b, c) = (lin(u), lin(w), lin(combo));
            for i in 0..4 {
                prop_assert!((c[i] - (a[i] + s * b[i])).abs() < 1e-12);
            }
        }

        #[test]
        fn margin_is_lipschitz_and_implies_positive_gaps(z in state(), dz in prop::array::uniform4(-1.0..1.0f64)) {
            let k = ConstraintBox::default();
            let a = z.to_array();
            let moved = RelativeState::from_array([a[0] + dz[0], a[1] + dz[1], a[2] + dz[2], a[3] + dz[3]]);
            let step = dz.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let diff = (constraint_margin(&z, &k, 4) - constraint_margin(&moved, &k, 4)).abs();
            prop_assert!(diff <= step + 1e-12);
            if constraint_margin(&z, &k, 4) > 0.0 {
                prop_assert!(z.x_g1 > 0.0 && z.x_g2 > 0.0);
            }
        }
    }
}
