use serde::{Deserialize, Serialize};

use crate::error::{LgError, Result};

/// An event in flat spacetime, in units where light speed is 1
/// (seconds and light-seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacetimeEvent {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpacetimeEvent {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let e = Self { t, x, y, z };
        e.validate("event")?;
        Ok(e)
    }

    pub const ORIGIN: SpacetimeEvent = SpacetimeEvent {
        t: 0.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub(crate) fn validate(&self, name: &str) -> Result<()> {
        for (axis, v) in [("t", self.t), ("x", self.x), ("y", self.y), ("z", self.z)] {
            if !v.is_finite() {
                return Err(LgError::invalid(
                    format!("{name}.{axis}"),
                    format!("coordinate must be finite, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// `Δx² + Δy² + Δz² - Δt²`; positive for space-like separation.
pub fn interval(e1: &SpacetimeEvent, e2: &SpacetimeEvent) -> f64 {
    let (dt, dx, dy, dz) = (e2.t - e1.t, e2.x - e1.x, e2.y - e1.y, e2.z - e1.z);
    dx * dx + dy * dy + dz * dz - dt * dt
}

/// Strictly space-like. Light-like (null) separation is not.
pub fn spacelike_separated(e1: &SpacetimeEvent, e2: &SpacetimeEvent) -> bool {
    interval(e1, e2) > 0.0
}

/// Photon preparation and pair-selection events of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub preparation: SpacetimeEvent,
    pub choice: SpacetimeEvent,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            preparation: SpacetimeEvent::ORIGIN,
            choice: SpacetimeEvent {
                x: 1.0,
                ..SpacetimeEvent::ORIGIN
            },
        }
    }
}

impl Geometry {
    pub fn is_spacelike(&self) -> bool {
        spacelike_separated(&self.preparation, &self.choice)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        self.preparation.validate("geometry.preparation")?;
        self.choice.validate("geometry.choice")
    }
}
