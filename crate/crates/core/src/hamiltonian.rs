//! Pointwise saddle policies and the game Hamiltonian
//! `H(z, p) = max_u2 min_{d1, d2} p · f(z, u1, u2, u3)`.
//!
//! The inputs enter the dynamics through disjoint costate coefficients
//! (`u1` through `p2`, `u3` through `p4`, `u2` through `p4 - p2`), so the
//! max-min is attained by optimising each player independently.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ActuationBounds, RelativeState};
use crate::idm::{idm_accel, IdmParams};

/// Spatial gradient of the value function. The two-car scenario uses
/// `p3 = p4 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Costate {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl Costate {
    pub fn new(p1: f64, p2: f64, p3: f64, p4: f64) -> Self {
        Self { p1, p2, p3, p4 }
    }

    pub fn planar(p1: f64, p2: f64) -> Self {
        Self { p1, p2, p3: 0.0, p4: 0.0 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }

    pub fn scaled(self, c: f64) -> Self {
        Self::new(c * self.p1, c * self.p2, c * self.p3, c * self.p4)
    }
}

/// How the reaction-time adversary picks `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionRule {
    /// Minimises the follower acceleration when `p4 <= 0` (`T = T_max`) and
    /// maximises it otherwise (`T = clamp(v_g2 / 2√(ab))`, which zeroes the
    /// interaction term of the desired gap whenever that is reachable).
    #[default]
    Corrected,
    /// The closed form exactly as published, see [`optimal_d2_reaction`].
    Published,
}

/// Behaviour model of the follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisturbanceModel {
    /// `u3` ranges over the raw disturbance bounds.
    ExtremeAction,
    /// `u3 = g(z, T)` from the IDM with the reaction time `T` as disturbance.
    ReactionTime { idm: IdmParams, rule: ReactionRule },
}

impl DisturbanceModel {
    pub fn tag(&self) -> &'static str {
        match self {
            DisturbanceModel::ExtremeAction => "extreme",
            DisturbanceModel::ReactionTime { .. } => "reaction_time",
        }
    }
}

/// Ego acceleration maximising the Hamiltonian. Ties go to `control_lo`.
#[inline]
pub fn optimal_control(p: &Costate, bounds: &ActuationBounds) -> f64 {
    if p.p4 - p.p2 > 0.0 {
        bounds.control_hi()
    } else {
        bounds.control_lo()
    }
}

/// Leader acceleration minimising the Hamiltonian.
#[inline]
pub fn optimal_d1(p: &Costate, bounds: &ActuationBounds) -> f64 {
    if p.p2 < 0.0 {
        bounds.dist_hi()
    } else {
        bounds.dist_lo()
    }
}

/// Follower acceleration of the extreme-action adversary.
#[inline]
pub fn optimal_d2_baseline(p: &Costate, bounds: &ActuationBounds) -> f64 {
    if p.p4 > 0.0 {
        bounds.dist_hi()
    } else {
        bounds.dist_lo()
    }
}

/// Reaction time chosen by the follower adversary, literal form:
///
/// * `p4 > 0`: `min(T_max, max(T_min, -v_g2 / 2√(ab)))`,
/// * otherwise the endpoint of `[T_min, T_max]` maximising `|2√(ab)·T + v_g2|`,
///   ties to `T_max`.
///
/// This rule is not a minimiser of the Hamiltonian for the desired gap as
/// implemented in [`crate::idm::desired_gap`]; see [`ReactionRule`].
pub fn optimal_d2_reaction(z: &RelativeState, p: &Costate, params: &IdmParams) -> f64 {
    let scale = params.interaction_scale();
    if p.p4 > 0.0 {
        (-z.v_g2 / scale).max(params.t_min).min(params.t_max)
    } else {
        let at_min = (scale * params.t_min + z.v_g2).abs();
        let at_max = (scale * params.t_max + z.v_g2).abs();
        if at_min > at_max {
            params.t_min
        } else {
            params.t_max
        }
    }
}

/// Reaction time that minimises the Hamiltonian. Because `s*(z, T)` is
/// non-decreasing in `T`, the follower acceleration is non-increasing in `T`.
pub fn optimal_d2_reaction_corrected(z: &RelativeState, p: &Costate, params: &IdmParams) -> f64 {
    if p.p4 > 0.0 {
        (z.v_g2 / params.interaction_scale()).max(params.t_min).min(params.t_max)
    } else {
        params.t_max
    }
}

pub fn reaction_time_policy(z: &RelativeState, p: &Costate, params: &IdmParams, rule: ReactionRule) -> f64 {
    match rule {
        ReactionRule::Corrected => optimal_d2_reaction_corrected(z, p, params),
        ReactionRule::Published => optimal_d2_reaction(z, p, params),
    }
}

/// Follower acceleration `u3*` under the given model.
#[inline]
pub fn optimal_follower_accel(
    z: &RelativeState,
    p: &Costate,
    model: &DisturbanceModel,
    bounds: &ActuationBounds,
) -> f64 {
    match model {
        DisturbanceModel::ExtremeAction => optimal_d2_baseline(p, bounds),
        DisturbanceModel::ReactionTime { idm, rule } => {
            let t = reaction_time_policy(z, p, idm, *rule);
            idm_accel(z, t, idm, bounds)
        }
    }
}

/// The three saddle inputs at `(z, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleInputs {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

pub fn saddle_inputs(
    z: &RelativeState,
    p: &Costate,
    model: &DisturbanceModel,
    bounds: &ActuationBounds,
) -> SaddleInputs {
    SaddleInputs {
        u1: optimal_d1(p, bounds),
        u2: optimal_control(p, bounds),
        u3: optimal_follower_accel(z, p, model, bounds),
    }
}

/// `p · f(z, u1, u2, u3)` for explicit inputs.
#[inline]
pub fn hamiltonian_with(z: &RelativeState, p: &Costate, u1: f64, u2: f64, u3: f64) -> f64 {
    p.p1 * z.v_g1 + p.p2 * (u1 - u2) + p.p3 * z.v_g2 + p.p4 * (u2 - u3)
}

/// Optimal Hamiltonian `H*(z, p)`.
#[inline]
pub fn hamiltonian(z: &RelativeState, p: &Costate, model: &DisturbanceModel, bounds: &ActuationBounds) -> f64 {
    let u1 = optimal_d1(p, bounds);
    let u2 = optimal_control(p, bounds);
    // u3 has no influence when p4 vanishes (always the case in 2D)
    let u3 = if p.p4 == 0.0 { 0.0 } else { optimal_follower_accel(z, p, model, bounds) };
    hamiltonian_with(z, p, u1, u2, u3)
}

/// Bounds on `|∂H/∂p_i|` over the costate box spanned by `p_minus` and
/// `p_plus` at one node. `u3_up` and `u3_down` are the follower responses
/// for `p4 > 0` and `p4 <= 0`. The slices have length 2 or 4; in 2D `p4` is
/// identically zero.
///
/// The Hamiltonian is piecewise linear in `p` with pieces cut by the signs
/// of `p2`, `p4 - p2` and `p4`; every piece meeting the box contributes its
/// input combination. Pieces are tested on closed half-planes, which can
/// only over-estimate the bound.
pub fn local_dissipation(
    z: &RelativeState,
    p_minus: &[f64],
    p_plus: &[f64],
    bounds: &ActuationBounds,
    u3_up: f64,
    u3_down: f64,
) -> [f64; 4] {
    let span = |d: usize| (p_minus[d].min(p_plus[d]), p_minus[d].max(p_plus[d]));
    let (p2_lo, p2_hi) = span(1);
    let (p4_lo, p4_hi) = if p_minus.len() == 4 { span(3) } else { (0.0, 0.0) };
    // (interval of the piece, input) for each sign branch
    let leader = [((f64::NEG_INFINITY, 0.0), bounds.dist_hi()), ((0.0, f64::INFINITY), bounds.dist_lo())];
    let ego = [((0.0, f64::INFINITY), bounds.control_hi()), ((f64::NEG_INFINITY, 0.0), bounds.control_lo())];
    let follower = [((0.0, f64::INFINITY), u3_up), ((f64::NEG_INFINITY, 0.0), u3_down)];
    let clip = |(lo, hi): (f64, f64), (a, b): (f64, f64)| {
        let (l, h) = (lo.max(a), hi.min(b));
        (l <= h).then_some((l, h))
    };
    let mut a2: f64 = 0.0;
    let mut a4: f64 = 0.0;
    for &(s2, u1) in &leader {
        let Some((l2, h2)) = clip((p2_lo, p2_hi), s2) else { continue };
        for &(s4, u3) in &follower {
            let Some((l4, h4)) = clip((p4_lo, p4_hi), s4) else { continue };
            for &(sq, u2) in &ego {
                if clip((l4 - h2, h4 - l2), sq).is_none() {
                    continue;
                }
                a2 = a2.max((u1 - u2).abs());
                a4 = a4.max((u2 - u3).abs());
            }
        }
    }
    if p_minus.len() == 2 {
        [z.v_g1.abs(), a2, 0.0, 0.0]
    } else {
        [z.v_g1.abs(), a2, z.v_g2.abs(), a4]
    }
}

/// Godunov-type numerical Hamiltonian built from nested extrema over the
/// costate box: per dimension, the maximum over `[p_minus, p_plus]` when
/// `p_minus <= p_plus` and the minimum over `[p_plus, p_minus]` otherwise,
/// taken innermost in `p4`, then `p2`. The `p1` and `p3` terms are linear and
/// separable, so they reduce to upwinding.
///
/// `H` restricted to `(p2, p4)` is piecewise linear with kinks on `p2 = 0`,
/// `p4 = 0` and `p4 = p2`, so every extremum sits on a finite candidate set
/// and the result is exact.
pub fn godunov_hamiltonian(
    z: &RelativeState,
    p_minus: &[f64],
    p_plus: &[f64],
    bounds: &ActuationBounds,
    u3_up: f64,
    u3_down: f64,
) -> f64 {
    let four = p_minus.len() == 4;
    let linear = |d: usize, speed: f64| ext_endpoints(p_minus[d], p_plus[d], |p| p * speed);
    let mut h = linear(0, z.v_g1);
    if four {
        h += linear(2, z.v_g2);
    }
    let h2 = |p2: f64, p4: f64| {
        let p = Costate::new(0.0, p2, 0.0, p4);
        let u3 = if p4 > 0.0 { u3_up } else { u3_down };
        hamiltonian_with(z, &p, optimal_d1(&p, bounds), optimal_control(&p, bounds), u3)
    };
    let (m4, q4) = if four { (p_minus[3], p_plus[3]) } else { (0.0, 0.0) };
    let (l4, u4) = (m4.min(q4), m4.max(q4));
    let inner = |p2: f64| {
        let mut best = h2(p2, m4);
        for c in [q4, 0.0, p2] {
            if (l4..=u4).contains(&c) {
                best = if m4 <= q4 { best.max(h2(p2, c)) } else { best.min(h2(p2, c)) };
            }
        }
        best
    };
    let (m2, q2) = (p_minus[1], p_plus[1]);
    let (l2, u2) = (m2.min(q2), m2.max(q2));
    // breakpoints of the candidate functions of p2
    let mut cuts = [l2, u2, 0.0, 0.0, 0.0];
    let mut n_cuts = 2;
    for c in [0.0, l4, u4] {
        if c > l2 && c < u2 {
            cuts[n_cuts] = c;
            n_cuts += 1;
        }
    }
    let cuts = &mut cuts[..n_cuts];
    cuts.sort_by(f64::total_cmp);
    // at most 4 segments with 6 crossings each
    let mut points = [0.0; 5 + 24];
    points[..n_cuts].copy_from_slice(cuts);
    let mut n_points = n_cuts;
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 <= s0 {
            continue;
        }
        // each candidate is linear on [s0, s1]; their crossings may be extrema
        let mut lines = [(0.0, 0.0); 4];
        let mut n_lines = 0;
        for which in 0..4 {
            let at = |p2: f64| {
                let c = match which {
                    0 => m4,
                    1 => q4,
                    2 => 0.0,
                    _ => p2,
                };
                (l4..=u4).contains(&c).then(|| h2(p2, c))
            };
            if let (Some(a), Some(b)) = (at(s0), at(s1)) {
                lines[n_lines] = (a, b);
                n_lines += 1;
            }
        }
        for i in 0..n_lines {
            for j in i + 1..n_lines {
                let d0 = lines[i].0 - lines[j].0;
                let d1 = lines[i].1 - lines[j].1;
                if d0 * d1 < 0.0 {
                    points[n_points] = s0 + (s1 - s0) * d0 / (d0 - d1);
                    n_points += 1;
                }
            }
        }
    }
    let mut best = inner(m2);
    for &p2 in &points[..n_points] {
        best = if m2 <= q2 { best.max(inner(p2)) } else { best.min(inner(p2)) };
    }
    h + best
}

fn ext_endpoints(pm: f64, pp: f64, f: impl Fn(f64) -> f64) -> f64 {
    if pm <= pp {
        f(pm).max(f(pp))
    } else {
        f(pm).min(f(pp))
    }
}

/// Per-dimension upper bounds on `|∂H/∂p_i|` over the grid box `[lo, hi]`,
/// used as Lax–Friedrichs dissipation coefficients. Valid for both models
/// since the IDM follower is clamped into the disturbance bounds.
pub fn dissipation_bounds(lo: &[f64], hi: &[f64], _model: &DisturbanceModel, bounds: &ActuationBounds) -> Vec<f64> {
    let speed = |i: usize| lo[i].abs().max(hi[i].abs());
    let relative_accel = (bounds.dist_hi() - bounds.control_lo()).max(bounds.control_hi() - bounds.dist_lo());
    let mut alphas = vec![speed(1), relative_accel];
    if lo.len() >= 4 {
        alphas.push(speed(3));
        alphas.push(relative_accel);
    }
    alphas
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt(rule: ReactionRule) -> DisturbanceModel {
        DisturbanceModel::ReactionTime { idm: IdmParams::default(), rule }
    }

    #[test]
    fn control_policy_examples() {
        let b = ActuationBounds::default();
        assert_eq!(optimal_control(&Costate::new(0.0, 0.3, 0.0, 0.1), &b), -2.0);
        assert_eq!(optimal_control(&Costate::new(0.0, -1.0, 0.0, 0.0), &b), 2.0);
        assert_eq!(optimal_control(&Costate::new(0.0, 0.4, 0.0, 0.4), &b), -2.0);
        // 2D: same rule with p4 = 0
        assert_eq!(optimal_control(&Costate::planar(0.0, -0.2), &b), 2.0);
    }

    #[test]
    fn disturbance_policy_examples() {
        let b = ActuationBounds::default();
        assert_eq!(optimal_d1(&Costate::planar(0.0, -0.5), &b), 1.5);
        assert_eq!(optimal_d1(&Costate::planar(0.0, 0.5), &b), -1.5);
        assert_eq!(optimal_d1(&Costate::planar(0.0, 0.0), &b), -1.5);
        assert_eq!(optimal_d2_baseline(&Costate::new(0.0, 0.0, 0.0, 0.2), &b), 1.5);
        assert_eq!(optimal_d2_baseline(&Costate::new(0.0, 0.0, 0.0, -0.2), &b), -1.5);
        assert_eq!(optimal_d2_baseline(&Costate::new(0.0, 0.0, 0.0, 0.0), &b), -1.5);
    }

    #[test]
    fn published_reaction_rule_examples() {
        let p = IdmParams::default();
        assert_eq!(p.interaction_scale(), 3.0);
        let z = RelativeState::new(10.0, 0.0, 10.0, -3.0);
        assert_eq!(optimal_d2_reaction(&z, &Costate::new(0.0, 0.0, 0.0, 1.0), &p), 1.0);
        let z = RelativeState::new(10.0, 0.0, 10.0, -2.0);
        assert_eq!(optimal_d2_reaction(&z, &Costate::new(0.0, 0.0, 0.0, -1.0), &p), 2.0);
        let z = RelativeState::new(10.0, 0.0, 10.0, -3.0);
        assert_eq!(optimal_d2_reaction(&z, &Costate::new(0.0, 0.0, 0.0, -1.0), &p), 2.0);
        // |v_g2| beyond the midpoint selects T_min
        let z = RelativeState::new(10.0, 0.0, 10.0, -5.0);
        assert_eq!(optimal_d2_reaction(&z, &Costate::new(0.0, 0.0, 0.0, -1.0), &p), 0.0);
    }

    #[test]
    fn corrected_reaction_rule() {
        let p = IdmParams::default();
        let up = Costate::new(0.0, 0.0, 0.0, 1.0);
        let down = Costate::new(0.0, 0.0, 0.0, -1.0);
        assert_eq!(optimal_d2_reaction_corrected(&RelativeState::new(1.0, 0.0, 1.0, -3.0), &up, &p), 0.0);
        assert_eq!(optimal_d2_reaction_corrected(&RelativeState::new(1.0, 0.0, 1.0, 3.0), &up, &p), 1.0);
        assert_eq!(optimal_d2_reaction_corrected(&RelativeState::new(1.0, 0.0, 1.0, 9.0), &up, &p), 2.0);
        assert_eq!(optimal_d2_reaction_corrected(&RelativeState::new(1.0, 0.0, 1.0, -5.0), &down, &p), 2.0);
    }

    #[test]
    fn hamiltonian_examples() {
        let b = ActuationBounds::default();
        let z = RelativeState::new(10.0, -2.0, 8.0, 1.0);
        for m in [DisturbanceModel::ExtremeAction, rt(ReactionRule::Corrected), rt(ReactionRule::Published)] {
            assert_eq!(hamiltonian(&z, &Costate::default(), &m, &b), 0.0);
            assert_eq!(hamiltonian(&z, &Costate::new(1.0, 0.0, 1.0, 0.0), &m, &b), -1.0);
        }
        let z2 = RelativeState::planar(4.0, -1.5);
        let h = hamiltonian(&z2, &Costate::planar(0.0, 1.0), &DisturbanceModel::ExtremeAction, &b);
        assert_eq!(h, 0.5);
    }

    #[test]
    fn dissipation_examples() {
        let b = ActuationBounds::default();
        let m = DisturbanceModel::ExtremeAction;
        let a = dissipation_bounds(&[0.0, -10.0, 0.0, -10.0], &[40.0, 10.0, 40.0, 10.0], &m, &b);
        assert_eq!(a, vec![10.0, 3.5, 10.0, 3.5]);
        let a = dissipation_bounds(&[0.0, 0.0, 0.0, 0.0], &[40.0, 0.0, 40.0, 0.0], &m, &b);
        assert_eq!((a[0], a[2]), (0.0, 0.0));
        let sym = ActuationBounds::new(-3.0, 3.0, -0.5, 0.5).unwrap();
        let a = dissipation_bounds(&[0.0, -1.0], &[1.0, 1.0], &m, &sym);
        assert_eq!(a, vec![1.0, 3.5]);
    }

    #[test]
    fn homogeneity_and_policy_scale_invariance() {
        let b = ActuationBounds::default();
        let z = RelativeState::new(12.0, -1.0, 9.0, -2.5);
        let p = Costate::new(0.3, -0.7, 0.2, 0.9);
        let h = hamiltonian(&z, &p, &DisturbanceModel::ExtremeAction, &b);
        for c in [0.1, 2.0, 17.0] {
            let hc = hamiltonian(&z, &p.scaled(c), &DisturbanceModel::ExtremeAction, &b);
            assert!((hc - c * h).abs() < 1e-12 * (1.0 + hc.abs()));
            for rule in [ReactionRule::Corrected, ReactionRule::Published] {
                let idm = IdmParams::default();
                assert_eq!(reaction_time_policy(&z, &p, &idm, rule), reaction_time_policy(&z, &p.scaled(c), &idm, rule));
            }
        }
    }

    fn godunov4(z: &RelativeState, pm: [f64; 4], pp: [f64; 4]) -> f64 {
        let b = ActuationBounds::default();
        godunov_hamiltonian(z, &pm, &pp, &b, b.dist_hi(), b.dist_lo())
    }

    /// Nested extremum by dense sampling of the `(p2, p4)` box.
    fn sampled_godunov(z: &RelativeState, pm: [f64; 4], pp: [f64; 4]) -> f64 {
        let b = ActuationBounds::default();
        let m = DisturbanceModel::ExtremeAction;
        let ext = |lo_first: bool, vals: &mut dyn Iterator<Item = f64>| {
            if lo_first {
                vals.fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.fold(f64::INFINITY, f64::min)
            }
        };
        let lin = |d: usize, s: f64| if pm[d] <= pp[d] { (pm[d] * s).max(pp[d] * s) } else { (pm[d] * s).min(pp[d] * s) };
        let n = 400;
        let at = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / n as f64;
        let outer = ext(pm[1] <= pp[1], &mut (0..=n).map(|i| {
            let p2 = at(pm[1], pp[1], i);
            ext(pm[3] <= pp[3], &mut (0..=n).map(|j| {
                let p4 = at(pm[3], pp[3], j);
                hamiltonian(z, &Costate::new(0.0, p2, 0.0, p4), &m, &b)
            }))
        }));
        lin(0, z.v_g1) + lin(2, z.v_g2) + outer
    }

    #[test]
    fn godunov_keeps_a_stationary_ridge() {
        let b = ActuationBounds::default();
        let z = RelativeState::new(20.0, 0.0, 0.0, 0.0);
        // V peaks in v_g1: slope +1 on the left, -1 on the right
        let h = godunov_hamiltonian(&z, &[0.0, 1.0], &[0.0, -1.0], &b, b.dist_hi(), b.dist_lo());
        assert_eq!(h, 0.0);
        // the same kink under Lax-Friedrichs with the local bound erodes
        let a = local_dissipation(&z, &[0.0, 1.0], &[0.0, -1.0], &b, b.dist_hi(), b.dist_lo());
        assert!(0.5 + 0.5 * a[1] * -2.0 < 0.0);
        // a valley is filled at the fastest available rate
        let h = godunov_hamiltonian(&z, &[0.0, -1.0], &[0.0, 1.0], &b, b.dist_hi(), b.dist_lo());
        assert_eq!(h, 0.5);
    }

    #[test]
    fn godunov_upwinds_transport() {
        let z = RelativeState::new(10.0, 3.0, 10.0, -2.0);
        // only x-derivatives: V_tau = v * dV/dx taken from the downstream side
        let h = godunov4(&z, [1.0, 0.0, 5.0, 0.0], [-1.0, 0.0, 4.0, 0.0]);
        assert_eq!(h, 3.0 * -1.0 + -2.0 * 5.0);
    }

    proptest::proptest! {
        #[test]
        fn godunov_is_consistent(v1 in -10.0..10.0f64, v2 in -10.0..10.0f64,
                                 p in proptest::array::uniform4(-3.0..3.0f64)) {
            let z = RelativeState::new(15.0, v1, 12.0, v2);
            let b = ActuationBounds::default();
            let want = hamiltonian(&z, &Costate::from_array(p), &DisturbanceModel::ExtremeAction, &b);
            let got = godunov4(&z, p, p);
            proptest::prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
        }

        #[test]
        fn godunov_is_monotone(v1 in -10.0..10.0f64, pm in proptest::array::uniform4(-3.0..3.0f64),
                               pp in proptest::array::uniform4(-3.0..3.0f64), d in 0usize..4, bump in 0.0..1.0f64) {
            let z = RelativeState::new(15.0, v1, 12.0, -v1 / 2.0);
            let base = godunov4(&z, pm, pp);
            let mut up = pp;
            up[d] += bump;
            proptest::prop_assert!(godunov4(&z, pm, up) >= base - 1e-12);
            let mut up = pm;
            up[d] += bump;
            proptest::prop_assert!(godunov4(&z, up, pp) <= base + 1e-12);
        }

        #[test]
        fn godunov_matches_dense_sampling(v1 in -10.0..10.0f64, pm in proptest::array::uniform4(-2.0..2.0f64),
                                          pp in proptest::array::uniform4(-2.0..2.0f64)) {
            let z = RelativeState::new(15.0, v1, 12.0, 1.0);
            let exact = godunov4(&z, pm, pp);
            let sampled = sampled_godunov(&z, pm, pp);
            // sampling can only miss an interior extremum by a step times the slope bound
            proptest::prop_assert!((exact - sampled).abs() < 4.0 * 3.5 * 4.0 / 400.0, "{} vs {}", exact, sampled);
        }
    }
}
