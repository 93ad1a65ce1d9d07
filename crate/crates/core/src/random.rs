//! Pinned pseudorandom machinery.
//!
//! Every random decision in a run is drawn from a [`SeededGenerator`], a
//! 64-bit linear congruential generator with fully specified constants so
//! that trial logs are reproducible bit for bit on any platform.

/// A source of uniform draws on `[0, 1)`.
pub trait UniformSource {
    fn next_unit(&mut self) -> f64;
}

impl<U: UniformSource + ?Sized> UniformSource for &mut U {
    fn next_unit(&mut self) -> f64 {
        (**self).next_unit()
    }
}

const LCG_MULTIPLIER: u64 = 6_364_136_223_846_793_005;
const LCG_INCREMENT: u64 = 1_442_695_040_888_963_407;
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Knuth MMIX linear congruential generator.
///
/// `state' = 6364136223846793005 * state + 1442695040888963407 (mod 2^64)`.
/// Unit draws take the top 53 bits of the advanced state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededGenerator {
    state: u64,
}

impl SeededGenerator {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    /// Advances one step and returns the new state.
    pub fn step(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        self.state
    }

    /// Advances one step and returns its top two bits (0..=3).
    pub fn next_top2(&mut self) -> u8 {
        (self.step() >> 62) as u8
    }
}

impl UniformSource for SeededGenerator {
    fn next_unit(&mut self) -> f64 {
        (self.step() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// splitmix64 finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

/// Generator for one trial, derived only from `(master_seed, trial_index)`.
///
/// The derivation does not depend on any other trial, so trials can be run
/// in any order or on any number of workers and still produce the same log.
pub fn derive_trial_generator(master_seed: u64, trial_index: u64) -> SeededGenerator {
    SeededGenerator::new(mix64(
        master_seed.wrapping_add(trial_index.wrapping_mul(GOLDEN_GAMMA)),
    ))
}

/// Replays a fixed list of draws, panicking when exhausted. Test helper for
/// pinning exact outcomes and counting consumption.
#[derive(Debug, Clone)]
pub struct ScriptedSource {
    draws: Vec<f64>,
    position: usize,
}

impl ScriptedSource {
    pub fn new(draws: impl Into<Vec<f64>>) -> Self {
        Self {
            draws: draws.into(),
            position: 0,
        }
    }

    /// Number of draws consumed so far.
    pub fn consumed(&self) -> usize {
        self.position
    }
}

impl UniformSource for ScriptedSource {
    fn next_unit(&mut self) -> f64 {
        let v = *self
            .draws
            .get(self.position)
            .expect("scripted source exhausted");
        self.position += 1;
        v
    }
}
