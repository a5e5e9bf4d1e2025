//! JSON scenario configuration.
//!
//! Only `scenario` is required. Everything else is filled from the
//! per-scenario defaults; nested objects are merged key by key, except
//! tagged objects (those carrying `kind`), which replace the default whole.
//! Unknown keys are rejected with their path.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::dynamics::{ActuationBounds, ConstraintBox, RelativeState, Scenario};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hamiltonian::{DisturbanceModel, ReactionRule};
use crate::idm::IdmParams;
use crate::safe_set::SafetyFilterConfig;
use crate::sim::{AgentBehavior, FollowerBehavior, LeaderBehavior};
use crate::solver::SolverSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Extreme,
    ReactionTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub dt: f64,
    pub horizon: f64,
    pub behaviors: AgentBehavior,
    pub initial_states: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub disturbance_model: ModelKind,
    pub reaction_rule: ReactionRule,
    pub bounds: ActuationBounds,
    pub constraint_box: ConstraintBox,
    pub grid: Grid,
    pub solver: SolverSettings,
    pub idm: IdmParams,
    pub filter: SafetyFilterConfig,
    pub simulation: SimulationConfig,
}

/// The subset of the configuration that determines a solved field.
#[derive(Serialize)]
struct SolveIdentity<'a> {
    scenario: Scenario,
    disturbance_model: ModelKind,
    reaction_rule: ReactionRule,
    bounds: &'a ActuationBounds,
    constraint_box: &'a ConstraintBox,
    grid: &'a Grid,
    solver: &'a SolverSettings,
    idm: &'a IdmParams,
}

impl ScenarioConfig {
    /// Complete defaults for a scenario.
    pub fn defaults(scenario: Scenario) -> Self {
        let (grid, idm, initial, follower) = match scenario {
            Scenario::TwoCar => (
                Grid { counts: vec![161, 161], lo: vec![-5.0, -12.5], hi: vec![45.0, 12.5] },
                IdmParams::default(),
                vec![20.0, 0.0],
                FollowerBehavior::AdversarialExtreme,
            ),
            Scenario::ThreeCar => (
                Grid { counts: vec![41; 4], lo: vec![-5.0, -12.5, -5.0, -12.5], hi: vec![45.0, 12.5, 45.0, 12.5] },
                IdmParams::three_car(),
                vec![20.0, 0.0, 20.0, 0.0],
                FollowerBehavior::AdversarialReaction,
            ),
        };
        Self {
            scenario,
            disturbance_model: match scenario {
                Scenario::TwoCar => ModelKind::Extreme,
                Scenario::ThreeCar => ModelKind::ReactionTime,
            },
            reaction_rule: ReactionRule::default(),
            bounds: ActuationBounds::default(),
            constraint_box: ConstraintBox::default(),
            grid,
            solver: SolverSettings::default(),
            idm,
            // one simulation step at these speeds moves the value by up to
            // about this much near the boundary
            filter: SafetyFilterConfig { activation_margin: 1.0, ..SafetyFilterConfig::default() },
            simulation: SimulationConfig {
                dt: 0.05,
                horizon: 10.0,
                behaviors: AgentBehavior { leader: LeaderBehavior::Adversarial, follower },
                initial_states: vec![initial],
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.scenario.dim()
    }

    pub fn model(&self) -> DisturbanceModel {
        match self.disturbance_model {
            ModelKind::Extreme => DisturbanceModel::ExtremeAction,
            ModelKind::ReactionTime => DisturbanceModel::ReactionTime { idm: self.idm, rule: self.reaction_rule },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        self.constraint_box.validate()?;
        self.grid.validate()?;
        if self.grid.dim() != self.dim() {
            return Err(Error::invalid(
                "grid.counts",
                format!("{:?} needs a {}D grid, got {}D", self.scenario, self.dim(), self.grid.dim()),
            ));
        }
        self.solver.validate()?;
        self.idm.validate()?;
        self.filter.validate(&self.bounds)?;
        let sim = &self.simulation;
        if !(sim.dt > 0.0 && sim.dt.is_finite()) {
            return Err(Error::invalid("simulation.dt", "must be positive"));
        }
        if !(sim.horizon > 0.0 && sim.horizon.is_finite()) {
            return Err(Error::invalid("simulation.horizon", "must be positive"));
        }
        sim.behaviors.validate(&self.bounds, &self.idm)?;
        for (i, z) in sim.initial_states.iter().enumerate() {
            if z.len() != self.dim() {
                return Err(Error::invalid(
                    format!("simulation.initial_states[{i}]"),
                    format!("expected {} coordinates, got {}", self.dim(), z.len()),
                ));
            }
            RelativeState::from_coords(z).map_err(|_| {
                Error::invalid(format!("simulation.initial_states[{i}]"), "coordinates must be finite")
            })?;
        }
        Ok(())
    }

    /// Hex SHA-256 over the solve-relevant part of the configuration.
    pub fn scenario_hash(&self) -> String {
        let identity = SolveIdentity {
            scenario: self.scenario,
            disturbance_model: self.disturbance_model,
            reaction_rule: self.reaction_rule,
            bounds: &self.bounds,
            constraint_box: &self.constraint_box,
            grid: &self.grid,
            solver: &self.solver,
            idm: &self.idm,
        };
        let bytes = serde_json::to_vec(&identity).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Normalised echo with every default spelled out.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (key, value) in o {
                match b.get_mut(&key) {
                    Some(slot) if value.get("kind").is_none() && slot.is_object() && value.is_object() => merge(slot, value),
                    _ => {
                        b.insert(key, value);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Parses and validates a configuration, filling omitted fields.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let user: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
    let obj = user.as_object().ok_or_else(|| Error::Config("top level must be a JSON object".into()))?;
    let scenario_value = obj.get("scenario").ok_or_else(|| Error::Config("scenario: missing required key".into()))?;
    let scenario: Scenario = serde_json::from_value(scenario_value.clone())
        .map_err(|e| Error::Config(format!("scenario: {e}")))?;
    let mut merged = serde_json::to_value(ScenarioConfig::defaults(scenario)).expect("defaults serialise");
    merge(&mut merged, user);
    let config: ScenarioConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("{path}: {}", e.into_inner()))
    })?;
    config.validate().map_err(|e| match e {
        Error::Invalid { field, reason } => Error::Config(format!("{field}: {reason}")),
        other => other,
    })?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::safe_set::NominalPolicy;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(r#"{"scenario": "two_car"}"#).unwrap();
        assert_eq!(c, ScenarioConfig::defaults(Scenario::TwoCar));
        assert_eq!(c.bounds.control, [-2.0, 2.0]);
        assert_eq!(c.grid.counts, vec![161, 161]);
        assert_eq!(c.solver.eps_conv, 1e-4);
    }

    #[test]
    fn reaction_time_without_idm_block_uses_default_table() {
        let c = parse_config(r#"{"scenario": "three_car", "disturbance_model": "reaction_time"}"#).unwrap();
        assert_eq!(c.idm, IdmParams::three_car());
        let echo = c.to_json_pretty();
        assert!(echo.contains("\"v_ego_nominal\": 20.0"));
        assert!(echo.contains("\"t_min\": 0.5"));
        assert!(echo.contains("\"delta\": 4.0"));
    }

    #[test]
    fn reversed_control_bounds_name_the_field() {
        let err = parse_config(r#"{"scenario": "two_car", "bounds": {"control": [2, -2]}}"#).unwrap_err();
        assert!(err.to_string().contains("bounds.control"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_syntax_are_rejected() {
        let err = parse_config(r#"{"scenario": "two_car", "solver": {"cfl": 0.5, "clf": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("solver"), "{err}");
        assert!(err.to_string().contains("clf"), "{err}");
        assert!(parse_config(r#"{"scenario": "two_car", "extra": 1}"#).is_err());
        assert!(parse_config(r#"{"scenario": "two_car""#).is_err());
        assert!(parse_config(r#"{"disturbance_model": "extreme"}"#).is_err());
        assert!(parse_config(r#"{"scenario": "five_car"}"#).is_err());
    }

    #[test]
    fn partial_nested_objects_merge_and_tagged_objects_replace() {
        let c = parse_config(
            r#"{"scenario": "two_car", "idm": {"t_max": 1.5},
                "filter": {"nominal_policy": {"kind": "idm_toward_leader", "time_headway": 1.2}}}"#,
        )
        .unwrap();
        assert_eq!(c.idm.t_max, 1.5);
        assert_eq!(c.idm.a, 1.5);
        assert_eq!(c.filter.nominal_policy, NominalPolicy::IdmTowardLeader { time_headway: 1.2 });
    }

    #[test]
    fn grid_dimension_must_match_scenario() {
        let err = parse_config(r#"{"scenario": "three_car", "grid": {"counts": [11, 11], "lo": [0, 0], "hi": [1, 1]}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("grid.counts"), "{err}");
    }

    #[test]
    fn serialise_parse_round_trip_and_hash() {
        for s in [Scenario::TwoCar, Scenario::ThreeCar] {
            let mut c = ScenarioConfig::defaults(s);
            c.solver.tau_max = 7.25;
            c.filter.activation_margin = 0.1;
            let again = parse_config(&c.to_json_pretty()).unwrap();
            assert_eq!(again, c);
            assert_eq!(again.scenario_hash(), c.scenario_hash());
        }
        let a = ScenarioConfig::defaults(Scenario::TwoCar);
        let mut b = a.clone();
        b.simulation.horizon = 3.0;
        assert_eq!(a.scenario_hash(), b.scenario_hash());
        b.grid.counts = vec![81, 81];
        assert_ne!(a.scenario_hash(), b.scenario_hash());
    }
}
