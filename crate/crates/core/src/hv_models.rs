//! Deterministic hidden-variable world-models.
//!
//! A model fixes, for each value `λ` of its hidden variable, the outcome
//! at each of the three measurement times. Outcomes depend on nothing but
//! `(λ, slot)`; all randomness lives in the draw of `λ` from `ρ(λ)`.
//!
//! [`TableModel`] realizes `ρ` as a finite weighted table and supports
//! exact evaluation of the pair expectations. [`RotorModel`] is a
//! continuous model (uniform angle) that is only sampled.
//! [`ConspiracyModel`] lets `ρ` depend on which pair of times was selected,
//! which is the statistical signature shared by the superdeterminism and
//! supercorrelation loopholes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LgError, Result};
use crate::quantum::{sequential_correlation_exact, Direction, Outcome};
use crate::random::UniformSource;

/// Tolerance on the total weight of a [`TableModel`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimeSlot {
    T1,
    T2,
    T3,
}

impl TimeSlot {
    pub const ALL: [TimeSlot; 3] = [TimeSlot::T1, TimeSlot::T2, TimeSlot::T3];

    pub fn index(self) -> usize {
        match self {
            TimeSlot::T1 => 0,
            TimeSlot::T2 => 1,
            TimeSlot::T3 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeSlot::T1 => "t1",
            TimeSlot::T2 => "t2",
            TimeSlot::T3 => "t3",
        }
    }
}

fn check_distinct(a: TimeSlot, b: TimeSlot) -> Result<()> {
    if a == b {
        Err(LgError::DegeneratePair(a.name()))
    } else {
        Ok(())
    }
}

/// A deterministic response triple `(S(t1), S(t2), S(t3))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Strategy(pub [Outcome; 3]);

impl Strategy {
    pub fn respond(&self, slot: TimeSlot) -> Outcome {
        self.0[slot.index()]
    }

    /// `|s1 s2 - s1 s3| + s2 s3` for this single strategy.
    pub fn lg_value(&self) -> i32 {
        let [s1, s2, s3] = self.0.map(|o| o.value() as i32);
        (s1 * s2 - s1 * s3).abs() + s2 * s3
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in self.0 {
            f.write_str(if o == Outcome::Plus { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// All eight deterministic response triples, `+++` first.
pub fn all_strategies() -> [Strategy; 8] {
    std::array::from_fn(|bits| {
        Strategy(std::array::from_fn(|k| {
            Outcome::from_sign(bits & (4 >> k) == 0)
        }))
    })
}

/// Loggable identifier of a sampled hidden variable.
///
/// Text form: `i<index>` for table rows, `a<angle>` for continuous angles,
/// `s<+/-><+/-><+/->` for an explicit response triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HiddenVariable {
    Index(usize),
    Angle(f64),
    Strategy(Strategy),
}

impl fmt::Display for HiddenVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HiddenVariable::Index(i) => write!(f, "i{i}"),
            HiddenVariable::Angle(a) => write!(f, "a{a:e}"),
            HiddenVariable::Strategy(s) => write!(f, "s{s}"),
        }
    }
}

impl FromStr for HiddenVariable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("malformed hidden variable `{s}`");
        let (tag, body) = s.split_at_checked(1).ok_or_else(bad)?;
        match tag {
            "i" => body.parse().map(HiddenVariable::Index).map_err(|_| bad()),
            "a" => body
                .parse::<f64>()
                .ok()
                .filter(|a| a.is_finite())
                .map(HiddenVariable::Angle)
                .ok_or_else(bad),
            "s" => {
                let chars: Vec<char> = body.chars().collect();
                if chars.len() != 3 {
                    return Err(bad());
                }
                let mut triple = [Outcome::Plus; 3];
                for (slot, c) in triple.iter_mut().zip(chars) {
                    *slot = match c {
                        '+' => Outcome::Plus,
                        '-' => Outcome::Minus,
                        _ => return Err(bad()),
                    };
                }
                Ok(HiddenVariable::Strategy(Strategy(triple)))
            }
            _ => Err(bad()),
        }
    }
}

/// A response family `S(λ, t_i)` together with its distribution `ρ(λ)`.
///
/// `respond` must be a pure function of its arguments.
pub trait ResponseModel {
    type Lambda: Copy;

    fn sample_lambda<R: UniformSource + ?Sized>(&self, rand: &mut R) -> Self::Lambda;

    fn respond(&self, lambda: Self::Lambda, slot: TimeSlot) -> Outcome;

    fn identify(&self, lambda: Self::Lambda) -> HiddenVariable;
}

/// Draws one `λ` and reads both requested slots from it.
pub fn sample_trial<M, R>(
    model: &M,
    first: TimeSlot,
    second: TimeSlot,
    rand: &mut R,
) -> Result<(Outcome, Outcome, HiddenVariable)>
where
    M: ResponseModel + ?Sized,
    R: UniformSource + ?Sized,
{
    check_distinct(first, second)?;
    let lambda = model.sample_lambda(rand);
    Ok((
        model.respond(lambda, first),
        model.respond(lambda, second),
        model.identify(lambda),
    ))
}

/// Discrete `ρ(λ)`: each row is a weight and a response triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    rows: Vec<(f64, Strategy)>,
    cumulative: Vec<f64>,
}

impl TableModel {
    pub fn new(rows: Vec<(f64, Strategy)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(LgError::invalid(
                "rows",
                "table model needs at least one row",
            ));
        }
        for (i, (w, _)) in rows.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(LgError::invalid(
                    format!("rows[{i}].weight"),
                    format!("weight must be finite and positive, got {w}"),
                ));
            }
        }
        let total: f64 = rows.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(LgError::invalid(
                "rows",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        let cumulative = rows
            .iter()
            .scan(0.0, |acc, (w, _)| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self { rows, cumulative })
    }

    /// A single deterministic strategy with weight 1.
    pub fn pure(strategy: Strategy) -> Self {
        Self::new(vec![(1.0, strategy)]).expect("unit weight is valid")
    }

    /// Equal weight on each given strategy.
    pub fn uniform(strategies: &[Strategy]) -> Result<Self> {
        let w = 1.0 / strategies.len() as f64;
        let rows: Vec<_> = strategies.iter().map(|s| (w, *s)).collect();
        // 1/n summed n times can miss 1 by a few ulps; renormalize the last row
        Self::new(renormalized(rows))
    }

    /// Random mixture over all eight strategies with Dirichlet(1) weights.
    pub fn random_mixture<R: UniformSource + ?Sized>(rand: &mut R) -> Self {
        let raw: Vec<f64> = (0..8)
            .map(|_| -(1.0 - rand.next_unit()).ln())
            .map(|e| e.max(f64::MIN_POSITIVE))
            .collect();
        let total: f64 = raw.iter().sum();
        let rows = raw
            .iter()
            .zip(all_strategies())
            .map(|(w, s)| (w / total, s))
            .collect();
        Self::new(renormalized(rows)).expect("normalized weights")
    }

    pub fn rows(&self) -> &[(f64, Strategy)] {
        &self.rows
    }
}

fn renormalized(mut rows: Vec<(f64, Strategy)>) -> Vec<(f64, Strategy)> {
    let total: f64 = rows.iter().map(|(w, _)| w).sum();
    for (w, _) in rows.iter_mut() {
        *w /= total;
    }
    rows
}

impl ResponseModel for TableModel {
    type Lambda = usize;

    fn sample_lambda<R: UniformSource + ?Sized>(&self, rand: &mut R) -> usize {
        let u = rand.next_unit();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.rows.len() - 1)
    }

    fn respond(&self, lambda: usize, slot: TimeSlot) -> Outcome {
        self.rows[lambda].1.respond(slot)
    }

    fn identify(&self, lambda: usize) -> HiddenVariable {
        HiddenVariable::Index(lambda)
    }
}

/// `Σ_λ w(λ) S(λ, a) S(λ, b)` over a table model.
pub fn expectation_exact(model: &TableModel, slot_a: TimeSlot, slot_b: TimeSlot) -> Result<f64> {
    check_distinct(slot_a, slot_b)?;
    Ok(model
        .rows
        .iter()
        .map(|(w, s)| w * s.respond(slot_a).product(s.respond(slot_b)) as f64)
        .sum())
}

/// Exact `|E(t1,t2) - E(t1,t3)| + E(t2,t3)` of a table model.
pub fn lg_lhs_exact(model: &TableModel) -> f64 {
    use TimeSlot::*;
    let e = |a, b| expectation_exact(model, a, b).expect("distinct slots");
    (e(T1, T2) - e(T1, T3)).abs() + e(T2, T3)
}

/// Classical sign-of-cosine responder over a uniform angle `λ ∈ [0, π)`.
///
/// `S(λ, t) = sign(cos 2(λ - θ_t))`, with `+1` on the zero set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorModel {
    pub directions: [Direction; 3],
}

impl RotorModel {
    pub fn new(directions: [Direction; 3]) -> Self {
        Self { directions }
    }
}

impl ResponseModel for RotorModel {
    type Lambda = f64;

    fn sample_lambda<R: UniformSource + ?Sized>(&self, rand: &mut R) -> f64 {
        PI * rand.next_unit()
    }

    fn respond(&self, lambda: f64, slot: TimeSlot) -> Outcome {
        let theta = self.directions[slot.index()].angle();
        Outcome::from_sign((2.0 * (lambda - theta)).cos() >= 0.0)
    }

    fn identify(&self, lambda: f64) -> HiddenVariable {
        HiddenVariable::Angle(lambda)
    }
}

/// Which loophole story a conspiracy run is told under. Both share one
/// mechanism; the label only travels into reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopholeNarrative {
    #[default]
    Superdeterminism,
    Supercorrelation,
}

/// Index of an unordered slot pair in `[(t1,t2), (t1,t3), (t2,t3)]`.
pub(crate) fn pair_index(a: TimeSlot, b: TimeSlot) -> Result<usize> {
    check_distinct(a, b)?;
    Ok(match (a.min(b), a.max(b)) {
        (TimeSlot::T1, TimeSlot::T2) => 0,
        (TimeSlot::T1, TimeSlot::T3) => 1,
        _ => 2,
    })
}

/// Hidden variable of a [`ConspiracyModel`]: a response triple drawn from
/// the pair-conditioned distribution, or a rotor angle drawn from the
/// unconditioned one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConspiracyLambda {
    Conditioned(Strategy),
    Free(f64),
}

/// Setting-conditioned hidden-variable model.
///
/// For pair `(X, Y)`, with probability `strength` the model draws a
/// response triple from `ρ_XY`: `S(X)` is a fair coin, `S(Y)` agrees with
/// it with probability `(1 + target_XY) / 2`, and the third slot is a fair
/// coin. Otherwise it falls back to the pair-independent rotor model. Each
/// `λ` still answers deterministically; only its distribution knows the
/// settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ConspiracyModel {
    targets: [f64; 3],
    strength: f64,
    fallback: RotorModel,
    narrative: LoopholeNarrative,
}

impl ConspiracyModel {
    pub fn new(targets: [f64; 3], fallback: RotorModel, strength: f64) -> Result<Self> {
        for (i, t) in targets.iter().enumerate() {
            if !(-1.0..=1.0).contains(t) {
                return Err(LgError::invalid(
                    format!("targets[{i}]"),
                    format!("target mean {t} outside [-1, 1]"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&strength) {
            return Err(LgError::invalid(
                "strength",
                format!("mixing strength {strength} outside [0, 1]"),
            ));
        }
        Ok(Self {
            targets,
            strength,
            fallback,
            narrative: LoopholeNarrative::default(),
        })
    }

    pub fn with_narrative(mut self, narrative: LoopholeNarrative) -> Self {
        self.narrative = narrative;
        self
    }

    pub fn with_strength(self, strength: f64) -> Result<Self> {
        Self::new(self.targets, self.fallback, strength).map(|m| m.with_narrative(self.narrative))
    }

    pub fn targets(&self) -> [f64; 3] {
        self.targets
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn narrative(&self) -> LoopholeNarrative {
        self.narrative
    }

    /// Draws `λ` from the distribution conditioned on the selected pair.
    /// Consumes four draws on the conditioned branch and two otherwise.
    pub fn sample_lambda_given<R: UniformSource + ?Sized>(
        &self,
        first: TimeSlot,
        second: TimeSlot,
        rand: &mut R,
    ) -> Result<ConspiracyLambda> {
        let target = self.targets[pair_index(first, second)?];
        if rand.next_unit() >= self.strength {
            return Ok(ConspiracyLambda::Free(self.fallback.sample_lambda(rand)));
        }
        let s_first = Outcome::from_sign(rand.next_unit() < 0.5);
        let agree = rand.next_unit() < 0.5 * (1.0 + target);
        let s_second = if agree { s_first } else { s_first.flipped() };
        let s_other = Outcome::from_sign(rand.next_unit() < 0.5);
        let mut triple = [s_other; 3];
        triple[first.index()] = s_first;
        triple[second.index()] = s_second;
        Ok(ConspiracyLambda::Conditioned(Strategy(triple)))
    }

    pub fn respond(&self, lambda: ConspiracyLambda, slot: TimeSlot) -> Outcome {
        match lambda {
            ConspiracyLambda::Conditioned(s) => s.respond(slot),
            ConspiracyLambda::Free(angle) => self.fallback.respond(angle, slot),
        }
    }

    pub fn identify(&self, lambda: ConspiracyLambda) -> HiddenVariable {
        match lambda {
            ConspiracyLambda::Conditioned(s) => HiddenVariable::Strategy(s),
            ConspiracyLambda::Free(angle) => HiddenVariable::Angle(angle),
        }
    }

    pub fn sample_trial<R: UniformSource + ?Sized>(
        &self,
        first: TimeSlot,
        second: TimeSlot,
        rand: &mut R,
    ) -> Result<(Outcome, Outcome, HiddenVariable)> {
        let lambda = self.sample_lambda_given(first, second, rand)?;
        Ok((
            self.respond(lambda, first),
            self.respond(lambda, second),
            self.identify(lambda),
        ))
    }
}

/// Fully conditioned model whose pair means are the quantum `cos 2θ`.
pub fn conspiracy_from_quantum(a: Direction, b: Direction, c: Direction) -> ConspiracyModel {
    let targets = [
        sequential_correlation_exact(a, b),
        sequential_correlation_exact(a, c),
        sequential_correlation_exact(b, c),
    ]
    .map(|t| t.clamp(-1.0, 1.0));
    ConspiracyModel::new(targets, RotorModel::new([a, b, c]), 1.0).expect("cosines lie in [-1, 1]")
}

/// Largest single-strategy value of `|s1 s2 - s1 s3| + s2 s3`.
pub fn brute_force_bound() -> f64 {
    all_strategies()
        .iter()
        .map(Strategy::lg_value)
        .max()
        .expect("eight strategies") as f64
}

/// Largest exact left-hand side over `trials` random strategy mixtures.
pub fn mixture_bound_check<R: UniformSource + ?Sized>(trials: u64, rand: &mut R) -> Result<f64> {
    if trials == 0 {
        return Err(LgError::invalid("trials", "need at least one mixture"));
    }
    Ok((0..trials)
        .map(|_| lg_lhs_exact(&TableModel::random_mixture(rand)))
        .fold(f64::NEG_INFINITY, f64::max))
}
