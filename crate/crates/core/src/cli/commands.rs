use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::{
    estimate_pairs, evaluate_lg, maximize_violation, quantum_lhs, stabilization, LgReport,
    StabilizationReport, DEFAULT_CHECKPOINT_STRIDE, DEFAULT_SIGNIFICANCE, LG_BOUND,
};
use crate::error::{LgError, Result};
use crate::experiment::{
    interval, read_trial_log, run_experiment, write_trial_log, RunOptions, TrialRecord, WorldModel,
};
use crate::hv_models::{all_strategies, brute_force_bound, mixture_bound_check, LoopholeNarrative};
use crate::json::to_json_string;
use crate::random::SeededGenerator;

use super::config::RunConfig;
use super::DEFAULT_EPSILON;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreedomOfChoice {
    pub spacelike: bool,
    /// `Δx² + Δy² + Δz² - Δt²` between preparation and choice.
    pub interval: f64,
    pub override_foc: bool,
    /// True when the run went ahead only because of the override.
    pub override_applied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freedom_of_choice: Option<FreedomOfChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loophole: Option<LoopholeNarrative>,
    pub trials: u64,
    pub lg: LgReport,
    pub stabilization: StabilizationReport,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

/// Analysis stage shared by `run` and `analyze`.
pub fn analyze_report(
    records: &[TrialRecord],
    significance: f64,
    epsilon: f64,
    checkpoint_stride: u64,
    config: Option<&RunConfig>,
) -> Result<RunReport> {
    let estimates = estimate_pairs(records)?;
    let lg = evaluate_lg(&estimates, significance)?;
    let stab = stabilization(records, epsilon, checkpoint_stride)?;
    let freedom_of_choice = config.map(|c| {
        let spacelike = c.geometry.is_spacelike();
        FreedomOfChoice {
            spacelike,
            interval: interval(&c.geometry.preparation, &c.geometry.choice),
            override_foc: c.override_foc,
            override_applied: c.override_foc && !spacelike,
        }
    });
    let loophole = config
        .and_then(|c| c.world_model().ok())
        .and_then(|w| match w {
            WorldModel::Conspiracy(m) => Some(m.narrative()),
            _ => None,
        });
    Ok(RunReport {
        schema: SCHEMA_VERSION,
        config: config.cloned(),
        freedom_of_choice,
        loophole,
        trials: records.len() as u64,
        lg,
        stabilization: stab,
    })
}

pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    pub report: RunReport,
}

/// Simulates and analyzes a validated config in memory.
pub fn execute_run(config: &RunConfig, options: RunOptions) -> Result<RunOutput> {
    let binding = config.binding()?;
    let world = config.world_model()?;
    let options = RunOptions {
        override_foc: config.override_foc,
        ..options
    };
    let records = run_experiment(
        &binding,
        &world,
        config.n_trials,
        config.master_seed,
        &config.geometry,
        options,
    )?;
    let report = analyze_report(
        &records,
        config.significance,
        config.epsilon,
        config.checkpoint_stride,
        Some(config),
    )?;
    Ok(RunOutput { records, report })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        LgError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn cmd_run(config_path: &Path, report_path: &Path, trials_path: &Path) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let output = execute_run(&config, RunOptions::default())?;
    write_trial_log(&output.records, create(trials_path)?)?;
    let mut w = create(report_path)?;
    w.write_all(output.report.to_json().as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn cmd_analyze(
    trials_path: &Path,
    significance: Option<f64>,
    epsilon: Option<f64>,
    stride: Option<u64>,
    config_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let config = config_path.map(RunConfig::load).transpose()?;
    let file = File::open(trials_path).map_err(|e| {
        LgError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", trials_path.display()),
        ))
    })?;
    let records = read_trial_log(BufReader::new(file))?;
    let report = analyze_report(
        &records,
        significance.unwrap_or(
            config
                .as_ref()
                .map_or(DEFAULT_SIGNIFICANCE, |c| c.significance),
        ),
        epsilon.unwrap_or(config.as_ref().map_or(DEFAULT_EPSILON, |c| c.epsilon)),
        stride.unwrap_or(
            config
                .as_ref()
                .map_or(DEFAULT_CHECKPOINT_STRIDE, |c| c.checkpoint_stride),
        ),
        config.as_ref(),
    )?;
    out.write_all(report.to_json().as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    pub schema: u32,
    pub theta_ab: f64,
    pub theta_bc: f64,
    pub theta_ac: f64,
    pub p_ab: f64,
    pub p_ac: f64,
    pub p_bc: f64,
    pub lhs: f64,
    pub bound: f64,
    pub violated: bool,
}

pub fn exact_report(theta_ab: f64, theta_bc: f64) -> Result<ExactReport> {
    for (name, v) in [("theta_ab", theta_ab), ("theta_bc", theta_bc)] {
        if !(0.0..std::f64::consts::PI).contains(&v) {
            return Err(LgError::invalid(
                name,
                format!("must lie in [0, π), got {v}"),
            ));
        }
    }
    let theta_ac = theta_ab + theta_bc;
    let lhs = quantum_lhs(theta_ab, theta_bc);
    Ok(ExactReport {
        schema: SCHEMA_VERSION,
        theta_ab,
        theta_bc,
        theta_ac,
        p_ab: (2.0 * theta_ab).cos(),
        p_ac: (2.0 * theta_ac).cos(),
        p_bc: (2.0 * theta_bc).cos(),
        lhs,
        bound: LG_BOUND,
        violated: lhs > LG_BOUND,
    })
}

pub fn cmd_exact(theta_ab: f64, theta_bc: f64, out: &mut dyn Write) -> Result<()> {
    out.write_all(to_json_string(&exact_report(theta_ab, theta_bc)?).as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyRow {
    pub responses: [i8; 3],
    pub value: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureCheck {
    pub mixtures: u64,
    pub seed: u64,
    pub max_lhs: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub schema: u32,
    pub bound: f64,
    pub strategies: Vec<StrategyRow>,
    pub mixture_check: MixtureCheck,
}

/// Slack allowed on the exact mixture left-hand side.
pub const MIXTURE_BOUND_SLACK: f64 = 1e-12;

pub fn bound_report(seed: u64, mixtures: u64) -> Result<BoundReport> {
    let strategies = all_strategies()
        .iter()
        .map(|s| StrategyRow {
            responses: s.0.map(|o| o.value()),
            value: s.lg_value(),
        })
        .collect();
    let max_lhs = mixture_bound_check(mixtures, &mut SeededGenerator::new(seed))?;
    Ok(BoundReport {
        schema: SCHEMA_VERSION,
        bound: brute_force_bound(),
        strategies,
        mixture_check: MixtureCheck {
            mixtures,
            seed,
            max_lhs,
            within_bound: max_lhs <= LG_BOUND + MIXTURE_BOUND_SLACK,
        },
    })
}

pub fn cmd_bound(seed: u64, mixtures: u64, out: &mut dyn Write) -> Result<()> {
    out.write_all(to_json_string(&bound_report(seed, mixtures)?).as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub schema: u32,
    pub grid_step: f64,
    pub tolerance: f64,
    pub theta_ab: f64,
    pub theta_bc: f64,
    pub theta_ac: f64,
    pub lhs: f64,
}

pub fn optimize_report(grid_step: f64, tolerance: f64) -> Result<OptimizeReport> {
    let best = maximize_violation(grid_step, tolerance)?;
    Ok(OptimizeReport {
        schema: SCHEMA_VERSION,
        grid_step,
        tolerance,
        theta_ab: best.theta_ab,
        theta_bc: best.theta_bc,
        theta_ac: best.theta_ab + best.theta_bc,
        lhs: best.lhs,
    })
}

pub fn cmd_optimize(grid_step: f64, tolerance: f64, out: &mut dyn Write) -> Result<()> {
    out.write_all(to_json_string(&optimize_report(grid_step, tolerance)?).as_bytes())?;
    Ok(())
}
