//! Estimation and inference on trial logs.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{LgError, Result};
use crate::experiment::{PairChoice, TrialRecord};
use crate::random::mix64;

/// Right-hand side bound of the inequality in the form `lhs <= 1`.
pub const LG_BOUND: f64 = 1.0;
/// Default one-sided z threshold for declaring a violation.
pub const DEFAULT_SIGNIFICANCE: f64 = 3.0;
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;
pub const DEFAULT_CHECKPOINT_STRIDE: u64 = 1000;
/// Minimum trials per pair for an estimate.
pub const MIN_PAIR_SAMPLES: u64 = 2;

/// Mean of `s_first * s_second` over the trials of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairEstimate {
    pub pair: PairChoice,
    pub n: u64,
    pub mean: f64,
    pub std_error: f64,
}

impl PairEstimate {
    /// From the number of trials and the sum of their ±1 products.
    pub fn from_sum(pair: PairChoice, n: u64, sum: i64) -> Self {
        assert!(n > 0 && sum.unsigned_abs() <= n, "sum of n ±1 values");
        let mean = sum as f64 / n as f64;
        Self {
            pair,
            n,
            mean,
            std_error: dichotomic_std_error(mean, n),
        }
    }

    /// Number of `+1` products.
    pub fn plus_count(&self) -> u64 {
        (self.n as f64 * (1.0 + self.mean) / 2.0).round() as u64
    }
}

/// `sqrt((1 - mean²) / n)`, clamped at zero.
pub fn dichotomic_std_error(mean: f64, n: u64) -> f64 {
    ((1.0 - mean * mean).max(0.0) / n as f64).sqrt()
}

pub fn estimate_pairs(trials: &[TrialRecord]) -> Result<[PairEstimate; 3]> {
    let mut n = [0u64; 3];
    let mut sum = [0i64; 3];
    for t in trials {
        n[t.pair.index()] += 1;
        sum[t.pair.index()] += t.product() as i64;
    }
    for pair in PairChoice::ALL {
        if n[pair.index()] < MIN_PAIR_SAMPLES {
            return Err(LgError::UndersampledPair {
                pair,
                n: n[pair.index()],
                min: MIN_PAIR_SAMPLES,
            });
        }
    }
    Ok(PairChoice::ALL.map(|p| PairEstimate::from_sum(p, n[p.index()], sum[p.index()])))
}

/// `|P(a,b) - P(a,c)| + P(b,c)`.
pub fn lg_lhs(p_ab: f64, p_ac: f64, p_bc: f64) -> f64 {
    (p_ab - p_ac).abs() + p_bc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMethod {
    Propagation,
    /// Used when the estimated difference sits within one standard error of
    /// the kink of the absolute value.
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LgReport {
    pub estimates: [PairEstimate; 3],
    pub lhs: f64,
    pub lhs_std_error: f64,
    pub error_method: ErrorMethod,
    pub bound: f64,
    pub z_score: f64,
    pub significance: f64,
    pub violated: bool,
}

impl LgReport {
    pub fn estimate(&self, pair: PairChoice) -> &PairEstimate {
        &self.estimates[pair.index()]
    }

    /// Left-hand side recomputed from the stored estimates.
    pub fn recomputed_lhs(&self) -> f64 {
        let [ab, ac, bc] = self.estimates.map(|e| e.mean);
        lg_lhs(ab, ac, bc)
    }
}

pub fn evaluate_lg(estimates: &[PairEstimate], significance: f64) -> Result<LgReport> {
    if !significance.is_finite() {
        return Err(LgError::invalid("significance", "must be finite"));
    }
    let mut slots: [Option<PairEstimate>; 3] = [None; 3];
    for e in estimates {
        if slots[e.pair.index()].replace(*e).is_some() {
            return Err(LgError::invalid(
                "estimates",
                format!("pair {} given twice", e.pair),
            ));
        }
    }
    let mut ordered = Vec::with_capacity(3);
    for pair in PairChoice::ALL {
        ordered.push(slots[pair.index()].ok_or(LgError::MissingPair(pair))?);
    }
    let estimates: [PairEstimate; 3] = ordered.try_into().expect("three pairs");
    let [ab, ac, bc] = estimates;

    let lhs = lg_lhs(ab.mean, ac.mean, bc.mean);
    let near_kink = (ab.mean - ac.mean).abs() < ab.std_error.max(ac.std_error);
    let (lhs_std_error, error_method) = if near_kink {
        (
            bootstrap_lhs_std_error(&estimates, BOOTSTRAP_RESAMPLES),
            ErrorMethod::Bootstrap,
        )
    } else {
        // d|x|/dx = ±1, so the sign drops out of the variance
        (
            (ab.std_error.powi(2) + ac.std_error.powi(2) + bc.std_error.powi(2)).sqrt(),
            ErrorMethod::Propagation,
        )
    };
    let z_score = if lhs_std_error > 0.0 {
        (lhs - LG_BOUND) / lhs_std_error
    } else if lhs > LG_BOUND {
        f64::INFINITY
    } else if lhs < LG_BOUND {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    Ok(LgReport {
        estimates,
        lhs,
        lhs_std_error,
        error_method,
        bound: LG_BOUND,
        z_score,
        significance,
        violated: z_score > significance,
    })
}

/// Bootstrap standard error of the left-hand side.
///
/// Resampling `n` products with replacement from a pair's ±1 sample is a
/// binomial draw of the `+1` count, so the estimates alone determine the
/// bootstrap distribution. The generator is seeded from the counts, which
/// keeps the result reproducible from the data.
pub fn bootstrap_lhs_std_error(estimates: &[PairEstimate; 3], resamples: usize) -> f64 {
    let seed = estimates.iter().fold(0x5EED_u64, |acc, e| {
        mix64(acc ^ mix64(e.n.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ e.plus_count()))
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samplers: Vec<(Binomial, f64)> = estimates
        .iter()
        .map(|e| {
            let p = (e.plus_count() as f64 / e.n as f64).clamp(0.0, 1.0);
            (Binomial::new(e.n, p).expect("valid binomial"), e.n as f64)
        })
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..resamples {
        let means: Vec<f64> = samplers
            .iter()
            .map(|(b, n)| 2.0 * b.sample(&mut rng) as f64 / n - 1.0)
            .collect();
        let v = lg_lhs(means[0], means[1], means[2]);
        sum += v;
        sum_sq += v * v;
    }
    let k = resamples as f64;
    let var = (sum_sq - sum * sum / k) / (k - 1.0);
    var.max(0.0).sqrt()
}

/// Quantum left-hand side for coplanar directions with `θ_ac = θ_ab + θ_bc`.
pub fn quantum_lhs(theta_ab: f64, theta_bc: f64) -> f64 {
    lg_lhs(
        (2.0 * theta_ab).cos(),
        (2.0 * (theta_ab + theta_bc)).cos(),
        (2.0 * theta_bc).cos(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationMax {
    pub theta_ab: f64,
    pub theta_bc: f64,
    pub lhs: f64,
}

/// Largest admissible coarse grid spacing.
pub const MAX_GRID_STEP: f64 = PI / 64.0;
pub const DEFAULT_GRID_STEP: f64 = PI / 128.0;
pub const DEFAULT_REFINE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub grid_step: f64,
    /// `None` stops after the grid pass.
    pub refine_tolerance: Option<f64>,
    /// Pins `θ_bc` and searches `θ_ab` only.
    pub fixed_theta_bc: Option<f64>,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            grid_step: DEFAULT_GRID_STEP,
            refine_tolerance: Some(DEFAULT_REFINE_TOLERANCE),
            fixed_theta_bc: None,
        }
    }
}

pub fn maximize_violation(grid_step: f64, refine_tolerance: f64) -> Result<ViolationMax> {
    maximize_violation_with(&SearchSettings {
        grid_step,
        refine_tolerance: Some(refine_tolerance),
        fixed_theta_bc: None,
    })
}

/// Grid search over `[0, π)²` followed by compass-style coordinate descent:
/// try `±h` along each free angle, keep any improvement, halve `h` when
/// none helps, stop once `h` drops below the tolerance.
pub fn maximize_violation_with(settings: &SearchSettings) -> Result<ViolationMax> {
    let step = settings.grid_step;
    if !(step.is_finite() && step > 0.0 && step <= MAX_GRID_STEP) {
        return Err(LgError::invalid(
            "grid_step",
            format!("must lie in (0, π/64], got {step}"),
        ));
    }
    if let Some(tol) = settings.refine_tolerance {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(LgError::invalid(
                "tolerance",
                format!("must be positive, got {tol}"),
            ));
        }
    }
    if let Some(bc) = settings.fixed_theta_bc {
        if !bc.is_finite() {
            return Err(LgError::invalid("theta_bc", "must be finite"));
        }
    }

    let wrap = |x: f64| x.rem_euclid(PI);
    let points = (PI / step).ceil() as usize;
    let axis = |i: usize| i as f64 * step;
    let bc_values: Vec<f64> = match settings.fixed_theta_bc {
        Some(bc) => vec![wrap(bc)],
        None => (0..points).map(axis).filter(|&x| x < PI).collect(),
    };

    let mut best = ViolationMax {
        theta_ab: 0.0,
        theta_bc: bc_values[0],
        lhs: f64::NEG_INFINITY,
    };
    for ab in (0..points).map(axis).filter(|&x| x < PI) {
        for &bc in &bc_values {
            let v = quantum_lhs(ab, bc);
            if v > best.lhs {
                best = ViolationMax {
                    theta_ab: ab,
                    theta_bc: bc,
                    lhs: v,
                };
            }
        }
    }

    let Some(tol) = settings.refine_tolerance else {
        return Ok(best);
    };
    let free_bc = settings.fixed_theta_bc.is_none();
    let mut h = step;
    while h >= tol {
        let mut improved = false;
        for delta in [h, -h] {
            let ab = wrap(best.theta_ab + delta);
            let v = quantum_lhs(ab, best.theta_bc);
            if v > best.lhs {
                best = ViolationMax {
                    theta_ab: ab,
                    theta_bc: best.theta_bc,
                    lhs: v,
                };
                improved = true;
            }
            if free_bc {
                let bc = wrap(best.theta_bc + delta);
                let v = quantum_lhs(best.theta_ab, bc);
                if v > best.lhs {
                    best = ViolationMax {
                        theta_ab: best.theta_ab,
                        theta_bc: bc,
                        lhs: v,
                    };
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairStabilization {
    pub pair: PairChoice,
    pub n: u64,
    pub final_mean: Option<f64>,
    /// `(samples so far, running mean)` every `checkpoint_stride` samples,
    /// plus the final sample count.
    pub checkpoints: Vec<(u64, f64)>,
    /// Smallest checkpoint after which every running mean stays within
    /// `epsilon` of the final mean. Absent when not stabilized.
    pub n_star: Option<u64>,
    pub stabilized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationReport {
    pub epsilon: f64,
    pub checkpoint_stride: u64,
    pub pairs: [PairStabilization; 3],
}

impl StabilizationReport {
    pub fn all_stabilized_by(&self, n: u64) -> bool {
        self.pairs.iter().all(|p| p.n_star.is_some_and(|s| s <= n))
    }
}

/// Running-mean stabilization per pair.
///
/// A pair is stabilized when some checkpoint before the last sample
/// already keeps every later running mean within `epsilon` of the final
/// one.
pub fn stabilization(
    trials: &[TrialRecord],
    epsilon: f64,
    checkpoint_stride: u64,
) -> Result<StabilizationReport> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(LgError::invalid(
            "epsilon",
            format!("must be positive, got {epsilon}"),
        ));
    }
    if checkpoint_stride == 0 {
        return Err(LgError::invalid("checkpoint_stride", "must be at least 1"));
    }
    let mut n = [0u64; 3];
    let mut sum = [0i64; 3];
    let mut checkpoints: [Vec<(u64, f64)>; 3] = Default::default();
    for t in trials {
        let k = t.pair.index();
        n[k] += 1;
        sum[k] += t.product() as i64;
        if n[k] % checkpoint_stride == 0 {
            checkpoints[k].push((n[k], sum[k] as f64 / n[k] as f64));
        }
    }
    let pairs = PairChoice::ALL.map(|pair| {
        let k = pair.index();
        let mut cps = std::mem::take(&mut checkpoints[k]);
        if n[k] == 0 {
            return PairStabilization {
                pair,
                n: 0,
                final_mean: None,
                checkpoints: cps,
                n_star: None,
                stabilized: false,
            };
        }
        if n[k] % checkpoint_stride != 0 {
            cps.push((n[k], sum[k] as f64 / n[k] as f64));
        }
        let final_mean = sum[k] as f64 / n[k] as f64;
        let settled = cps
            .iter()
            .rev()
            .take_while(|(_, m)| (m - final_mean).abs() <= epsilon)
            .count();
        let first_settled = cps[cps.len() - settled].0;
        let stabilized = first_settled < n[k];
        PairStabilization {
            pair,
            n: n[k],
            final_mean: Some(final_mean),
            checkpoints: cps,
            n_star: stabilized.then_some(first_settled),
            stabilized,
        }
    });
    Ok(StabilizationReport {
        epsilon,
        checkpoint_stride,
        pairs,
    })
}
