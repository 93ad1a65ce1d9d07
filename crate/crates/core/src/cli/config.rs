//! Run configuration: one JSON document, unknown fields rejected.
//!
//! ```json
//! {
//!   "angles": { "coplanar": { "theta_ab": 0.5235987755982988, "theta_bc": 0.5235987755982988 } },
//!   "times": [1.0, 2.0, 3.0],
//!   "world": "quantum",
//!   "n_trials": 1000000,
//!   "master_seed": 42
//! }
//! ```
//!
//! Optional fields and their defaults: `geometry` (preparation at the
//! origin, choice at `x = 1`), `initial_state` (`{"fixed": 0.0}`),
//! `significance` (3), `epsilon` (0.01), `checkpoint_stride` (1000),
//! `override_foc` (false).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{DEFAULT_CHECKPOINT_STRIDE, DEFAULT_SIGNIFICANCE};
use crate::error::{LgError, Result};
use crate::experiment::{Geometry, InitialStatePolicy, SlotBinding, WorldModel};
use crate::hv_models::{
    conspiracy_from_quantum, LoopholeNarrative, RotorModel, Strategy, TableModel,
};
use crate::quantum::{Direction, Outcome};

use super::DEFAULT_EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AnglesConfig {
    /// Absolute polarizer angles of `a`, `b`, `c` in radians.
    Directions([f64; 3]),
    /// `a = 0`, `b = θ_ab`, `c = θ_ab + θ_bc`.
    Coplanar { theta_ab: f64, theta_bc: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    /// `[weight, s1, s2, s3]` per row.
    pub rows: Vec<(f64, i64, i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConspiracyConfig {
    #[serde(default = "full_strength")]
    pub strength: f64,
    #[serde(default)]
    pub narrative: LoopholeNarrative,
}

fn full_strength() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WorldConfig {
    Quantum,
    Table(TableConfig),
    Rotor,
    Conspiracy(ConspiracyConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateConfig {
    Fixed(f64),
    FreshUniform,
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        InitialStateConfig::Fixed(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub angles: AnglesConfig,
    pub times: [f64; 3],
    pub world: WorldConfig,
    pub n_trials: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub initial_state: InitialStateConfig,
    #[serde(default = "default_significance")]
    pub significance: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_stride")]
    pub checkpoint_stride: u64,
    #[serde(default)]
    pub override_foc: bool,
}

fn default_significance() -> f64 {
    DEFAULT_SIGNIFICANCE
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_stride() -> u64 {
    DEFAULT_CHECKPOINT_STRIDE
}

fn field_error(field: &str, reason: impl std::fmt::Display) -> LgError {
    LgError::Config(format!("field `{field}`: {reason}"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." || path.is_empty() {
                LgError::Config(e.inner().to_string())
            } else {
                field_error(&path, e.inner())
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LgError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(field_error(field, format!("must be finite, got {v}")))
            }
        };
        match &self.angles {
            AnglesConfig::Directions(d) => {
                for (i, v) in d.iter().enumerate() {
                    finite(&format!("angles.directions[{i}]"), *v)?;
                }
            }
            AnglesConfig::Coplanar { theta_ab, theta_bc } => {
                finite("angles.coplanar.theta_ab", *theta_ab)?;
                finite("angles.coplanar.theta_bc", *theta_bc)?;
            }
        }
        self.binding()?;
        self.world_model()?;
        if self.n_trials == 0 {
            return Err(field_error("n_trials", "must be at least 1"));
        }
        self.geometry
            .validate()
            .map_err(|e| LgError::Config(e.to_string()))?;
        if let InitialStateConfig::Fixed(a) = self.initial_state {
            finite("initial_state.fixed", a)?;
        }
        finite("significance", self.significance)?;
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(field_error(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if self.checkpoint_stride == 0 {
            return Err(field_error("checkpoint_stride", "must be at least 1"));
        }
        Ok(())
    }

    pub fn directions(&self) -> [Direction; 3] {
        match self.angles {
            AnglesConfig::Directions(d) => d.map(Direction::new),
            AnglesConfig::Coplanar { theta_ab, theta_bc } => {
                [0.0, theta_ab, theta_ab + theta_bc].map(Direction::new)
            }
        }
    }

    pub fn binding(&self) -> Result<SlotBinding> {
        SlotBinding::new(self.times, self.directions()).map_err(|e| match e {
            LgError::InvalidParameter { reason, .. } => field_error("times", reason),
            other => other,
        })
    }

    pub fn initial_state_policy(&self) -> InitialStatePolicy {
        match self.initial_state {
            InitialStateConfig::Fixed(a) => InitialStatePolicy::Fixed(Direction::new(a)),
            InitialStateConfig::FreshUniform => InitialStatePolicy::FreshUniform,
        }
    }

    pub fn world_model(&self) -> Result<WorldModel> {
        let [a, b, c] = self.directions();
        Ok(match &self.world {
            WorldConfig::Quantum => WorldModel::Quantum(self.initial_state_policy()),
            WorldConfig::Rotor => WorldModel::Rotor(RotorModel::new([a, b, c])),
            WorldConfig::Table(t) => {
                let mut rows = Vec::with_capacity(t.rows.len());
                for (i, &(w, s1, s2, s3)) in t.rows.iter().enumerate() {
                    let mut triple = [Outcome::Plus; 3];
                    for (k, s) in [s1, s2, s3].into_iter().enumerate() {
                        triple[k] = Outcome::from_value(s).ok_or_else(|| {
                            field_error(
                                &format!("world.table.rows[{i}][{}]", k + 1),
                                format!("response must be 1 or -1, got {s}"),
                            )
                        })?;
                    }
                    rows.push((w, Strategy(triple)));
                }
                WorldModel::Table(TableModel::new(rows).map_err(|e| match e {
                    LgError::InvalidParameter { name, reason } => {
                        field_error(&format!("world.table.{name}"), reason)
                    }
                    other => other,
                })?)
            }
            WorldConfig::Conspiracy(cfg) => WorldModel::Conspiracy(
                conspiracy_from_quantum(a, b, c)
                    .with_strength(cfg.strength)
                    .map_err(|e| match e {
                        LgError::InvalidParameter { reason, .. } => {
                            field_error("world.conspiracy.strength", reason)
                        }
                        other => other,
                    })?
                    .with_narrative(cfg.narrative),
            ),
        })
    }
}
