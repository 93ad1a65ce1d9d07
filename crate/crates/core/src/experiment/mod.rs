//! The measurement protocol.
//!
//! Three times `t1 < t2 < t3` are bound once to three polarizer directions
//! `a, b, c`. For each photon a seeded device picks one of the pairs
//! `(t1,t2)`, `(t1,t3)`, `(t2,t3)`, and the world-model produces the two
//! outcomes, earlier slot first. Every trial draws from its own generator
//! derived from `(master_seed, index)`, so the log does not depend on how
//! trials are scheduled.

mod spacetime;
mod trial_log;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use spacetime::{interval, spacelike_separated, Geometry, SpacetimeEvent};
pub use trial_log::{read_trial_log, trial_log_string, write_trial_log, TRIAL_LOG_HEADER};

use crate::error::{LgError, Result};
use crate::hv_models::{
    sample_trial, ConspiracyModel, HiddenVariable, RotorModel, TableModel, TimeSlot,
};
use crate::quantum::{run_quantum_trial, Direction, Outcome, PolarizationState};
use crate::random::UniformSource;

pub use crate::random::{derive_trial_generator, SeededGenerator};

/// Pair selection gives up after this many rejected draws.
pub const MAX_PAIR_ATTEMPTS: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairChoice {
    P12,
    P13,
    P23,
}

impl PairChoice {
    pub const ALL: [PairChoice; 3] = [PairChoice::P12, PairChoice::P13, PairChoice::P23];

    pub fn slots(self) -> (TimeSlot, TimeSlot) {
        match self {
            PairChoice::P12 => (TimeSlot::T1, TimeSlot::T2),
            PairChoice::P13 => (TimeSlot::T1, TimeSlot::T3),
            PairChoice::P23 => (TimeSlot::T2, TimeSlot::T3),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            PairChoice::P12 => "12",
            PairChoice::P13 => "13",
            PairChoice::P23 => "23",
        }
    }
}

impl fmt::Display for PairChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for PairChoice {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "12" => Ok(PairChoice::P12),
            "13" => Ok(PairChoice::P13),
            "23" => Ok(PairChoice::P23),
            _ => Err(()),
        }
    }
}

impl Serialize for PairChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

/// The device that picks the pair of times: top two bits of successive
/// generator steps, rejecting `3`.
pub fn select_pair(gen: &mut SeededGenerator) -> Result<PairChoice> {
    for _ in 0..MAX_PAIR_ATTEMPTS {
        match gen.next_top2() {
            0 => return Ok(PairChoice::P12),
            1 => return Ok(PairChoice::P13),
            2 => return Ok(PairChoice::P23),
            _ => {}
        }
    }
    Err(LgError::PairSelectionExhausted(MAX_PAIR_ATTEMPTS))
}

/// Fixed correspondence `{t1 -> a, t2 -> b, t3 -> c}`.
///
/// The times are carried for reporting; nothing evolves between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotBinding {
    times: [f64; 3],
    directions: [Direction; 3],
}

impl SlotBinding {
    pub fn new(times: [f64; 3], directions: [Direction; 3]) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(LgError::invalid("times", "times must be finite"));
        }
        if !(times[0] < times[1] && times[1] < times[2]) {
            return Err(LgError::invalid(
                "times",
                format!(
                    "need t1 < t2 < t3, got {}, {}, {}",
                    times[0], times[1], times[2]
                ),
            ));
        }
        Ok(Self { times, directions })
    }

    /// Directions `a = 0`, `b = θ_ab`, `c = θ_ab + θ_bc` (coplanar convention).
    pub fn coplanar(times: [f64; 3], theta_ab: f64, theta_bc: f64) -> Result<Self> {
        Self::new(
            times,
            [0.0, theta_ab, theta_ab + theta_bc].map(Direction::new),
        )
    }

    pub fn times(&self) -> [f64; 3] {
        self.times
    }

    pub fn directions(&self) -> [Direction; 3] {
        self.directions
    }

    pub fn direction(&self, slot: TimeSlot) -> Direction {
        self.directions[slot.index()]
    }
}

/// How the photon is prepared before its first measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialStatePolicy {
    Fixed(Direction),
    FreshUniform,
}

impl Default for InitialStatePolicy {
    fn default() -> Self {
        InitialStatePolicy::Fixed(Direction::new(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WorldModel {
    Quantum(InitialStatePolicy),
    Table(TableModel),
    Rotor(RotorModel),
    Conspiracy(ConspiracyModel),
}

impl WorldModel {
    pub fn tag(&self) -> ModelTag {
        match self {
            WorldModel::Quantum(_) => ModelTag::Quantum,
            WorldModel::Table(_) => ModelTag::Table,
            WorldModel::Rotor(_) => ModelTag::Rotor,
            WorldModel::Conspiracy(_) => ModelTag::Conspiracy,
        }
    }

    fn execute(
        &self,
        binding: &SlotBinding,
        pair: PairChoice,
        gen: &mut SeededGenerator,
    ) -> Result<(Outcome, Outcome, Option<HiddenVariable>)> {
        let (first, second) = pair.slots();
        Ok(match self {
            WorldModel::Quantum(policy) => {
                let initial = match policy {
                    InitialStatePolicy::Fixed(d) => PolarizationState::along(*d),
                    InitialStatePolicy::FreshUniform => {
                        PolarizationState::new(PI * gen.next_unit())
                    }
                };
                let (s1, s2) = run_quantum_trial(
                    initial,
                    binding.direction(first),
                    binding.direction(second),
                    gen,
                );
                (s1, s2, None)
            }
            WorldModel::Table(m) => {
                let (s1, s2, l) = sample_trial(m, first, second, gen)?;
                (s1, s2, Some(l))
            }
            WorldModel::Rotor(m) => {
                let (s1, s2, l) = sample_trial(m, first, second, gen)?;
                (s1, s2, Some(l))
            }
            WorldModel::Conspiracy(m) => {
                let (s1, s2, l) = m.sample_trial(first, second, gen)?;
                (s1, s2, Some(l))
            }
        })
    }
}

/// Which world-model produced a trial. Logs from elsewhere may carry any
/// other comma-free tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ModelTag {
    Quantum,
    Table,
    Rotor,
    Conspiracy,
    Other(String),
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Quantum => "quantum",
            ModelTag::Table => "table",
            ModelTag::Rotor => "rotor",
            ModelTag::Conspiracy => "conspiracy",
            ModelTag::Other(s) => s,
        })
    }
}

impl FromStr for ModelTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "quantum" => ModelTag::Quantum,
            "table" => ModelTag::Table,
            "rotor" => ModelTag::Rotor,
            "conspiracy" => ModelTag::Conspiracy,
            "" => return Err("empty model_tag".into()),
            other if other.contains([',', '\n', '\r']) || other.trim() != other => {
                return Err(format!("bad model_tag `{other}`"))
            }
            other => ModelTag::Other(other.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: u64,
    pub pair: PairChoice,
    pub s_first: Outcome,
    pub s_second: Outcome,
    pub lambda_id: Option<HiddenVariable>,
    pub model_tag: ModelTag,
}

impl TrialRecord {
    pub fn product(&self) -> i8 {
        self.s_first.product(self.s_second)
    }
}

/// Runs trial `index` in isolation.
pub fn run_trial(
    binding: &SlotBinding,
    world: &WorldModel,
    master_seed: u64,
    index: u64,
) -> Result<TrialRecord> {
    let mut gen = derive_trial_generator(master_seed, index);
    let pair = select_pair(&mut gen)?;
    let (s_first, s_second, lambda_id) = world.execute(binding, pair, &mut gen)?;
    Ok(TrialRecord {
        index,
        pair,
        s_first,
        s_second,
        lambda_id,
        model_tag: world.tag(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// Trial `i` goes to worker `i mod n`.
    Sharded(usize),
    /// One shard per available core.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Run even when preparation and choice are not space-like separated.
    pub override_foc: bool,
    pub execution: Execution,
}

pub fn run_experiment(
    binding: &SlotBinding,
    world: &WorldModel,
    n_trials: u64,
    master_seed: u64,
    geometry: &Geometry,
    options: RunOptions,
) -> Result<Vec<TrialRecord>> {
    if n_trials == 0 {
        return Err(LgError::invalid("n_trials", "must be at least 1"));
    }
    geometry.validate()?;
    if !geometry.is_spacelike() && !options.override_foc {
        return Err(LgError::FreedomOfChoice {
            interval: interval(&geometry.preparation, &geometry.choice),
        });
    }
    let shards = match options.execution {
        Execution::Serial => 1,
        Execution::Sharded(n) => n.max(1),
        Execution::Parallel => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let shards = shards.min(n_trials as usize);
    if shards == 1 {
        return (0..n_trials)
            .map(|i| run_trial(binding, world, master_seed, i))
            .collect();
    }

    let mut records = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..shards as u64)
            .map(|k| {
                scope.spawn(move || {
                    (k..n_trials)
                        .step_by(shards)
                        .map(|i| run_trial(binding, world, master_seed, i))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        workers
            .into_iter()
            .map(|w| w.join().expect("trial worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect::<Vec<_>>();
    records.sort_unstable_by_key(|r| r.index);
    Ok(records)
}

/// Per-pair trial counts, in `PairChoice::ALL` order.
pub fn pair_counts(records: &[TrialRecord]) -> [u64; 3] {
    let mut counts = [0u64; 3];
    for r in records {
        counts[r.pair.index()] += 1;
    }
    counts
}
