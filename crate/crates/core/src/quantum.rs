//! Quantum world-model: linear photon polarization, projective measurement
//! along a polarizer direction, and collapse onto the measured eigenstate.
//!
//! The state is static between measurements; the only change it ever sees
//! is the collapse at each measurement.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::random::UniformSource;

/// A polarizer direction in the polarization plane.
///
/// Stored as an angle reduced into `[0, π)`; directions `θ` and `θ + π`
/// are the same polarizer.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Direction(f64);

impl Direction {
    pub fn new(radians: f64) -> Self {
        let mut a = radians.rem_euclid(PI);
        // rem_euclid can round up to exactly π for tiny negative inputs
        if a >= PI {
            a = 0.0;
        }
        Direction(a)
    }

    pub fn angle(self) -> f64 {
        self.0
    }

    /// The orthogonal polarizer direction.
    pub fn orthogonal(self) -> Self {
        Direction::new(self.0 + FRAC_PI_2)
    }

    /// Signed angle `self - other`, not reduced.
    pub fn angle_from(self, other: Direction) -> f64 {
        self.0 - other.0
    }
}

impl From<f64> for Direction {
    fn from(radians: f64) -> Self {
        Direction::new(radians)
    }
}

impl From<Direction> for f64 {
    fn from(d: Direction) -> Self {
        d.0
    }
}

/// Pure linear polarization of a single photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationState {
    pub direction: Direction,
}

impl PolarizationState {
    pub fn new(radians: f64) -> Self {
        Self {
            direction: Direction::new(radians),
        }
    }

    pub fn along(direction: Direction) -> Self {
        Self { direction }
    }

    pub fn angle(&self) -> f64 {
        self.direction.angle()
    }
}

/// A dichotomic measurement result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    /// Product of two outcomes, as ±1.
    pub fn product(self, other: Outcome) -> i8 {
        self.value() * other.value()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Probability of `+1` when measuring `state` along `dir`: `cos²(Δ)`.
pub fn plus_probability(state: PolarizationState, dir: Direction) -> f64 {
    let c = state.direction.angle_from(dir).cos();
    c * c
}

/// Projective polarization measurement with collapse.
///
/// Consumes exactly one draw. The outcome is `+1` iff the draw is strictly
/// below `cos²(state - dir)`; the returned state is `dir` on `+1` and the
/// orthogonal direction on `-1`.
pub fn measure_polarization<R: UniformSource + ?Sized>(
    state: PolarizationState,
    dir: Direction,
    rand: &mut R,
) -> (Outcome, PolarizationState) {
    let p_plus = plus_probability(state, dir);
    if rand.next_unit() < p_plus {
        (Outcome::Plus, PolarizationState::along(dir))
    } else {
        (Outcome::Minus, PolarizationState::along(dir.orthogonal()))
    }
}

/// Exact expectation of the product of two consecutive outcomes measured
/// along `d1` then `d2`: `cos 2(d1 - d2)`, whatever the prior state.
pub fn sequential_correlation_exact(d1: Direction, d2: Direction) -> f64 {
    (2.0 * d1.angle_from(d2)).cos()
}

/// Two successive measurements on the same photon. Consumes two draws.
pub fn run_quantum_trial<R: UniformSource + ?Sized>(
    initial: PolarizationState,
    first: Direction,
    second: Direction,
    rand: &mut R,
) -> (Outcome, Outcome) {
    let (s1, collapsed) = measure_polarization(initial, first, rand);
    let (s2, _) = measure_polarization(collapsed, second, rand);
    (s1, s2)
}
