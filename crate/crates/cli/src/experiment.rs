//! The active-sampling loop: solve, score candidate lines, acquire the best
//! batch, re-solve.

use std::time::Instant;

use anyhow::{Context, Result};
use kspace_core::sampling::Acquisition;
use kspace_core::sim::{acquire, enumerate_fiber_patterns, evaluate, init_cartesian_mask, synth_ground_truth};
use kspace_core::solver::{init_state, solve_from, SolverState};
use kspace_core::{par, Error};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::report::MetricsRow;

/// Runs one trial of one method: rounds `0..=num_batches`, or fewer if the
/// candidate lines run out or a solve diverges. A diverged round is recorded
/// with NaN metrics and ends the run.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize, method: Acquisition) -> Result<Vec<MetricsRow>> {
    let seed = cfg.trial_seed(trial);
    let mut phantom = cfg.phantom.clone();
    phantom.seed = seed;
    let (_, truth) = synth_ground_truth(&phantom)?;
    let mut mask = cfg.mask.clone();
    mask.seed = seed;
    let mut omega = init_cartesian_mask(&mask, &truth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let numel = truth.shape().numel();

    let mut rows = Vec::with_capacity(cfg.num_batches + 1);
    let mut previous: Option<SolverState> = None;
    for round in 0..=cfg.num_batches {
        let start = Instant::now();
        if let Some(state) = previous.take() {
            let p = cfg.solver.problem(omega.clone());
            let ma = kspace_core::solver::mode_approximations(&state, &p)?;
            let patterns = enumerate_fiber_patterns(truth.shape(), mask.readout_mode, &omega)?;
            if patterns.is_empty() {
                break;
            }
            let count = cfg.batch_size.min(patterns.len());
            let selected = method.select(&state, &p, &ma, &patterns, count, rng.next_u64())?;
            omega = acquire(&truth, &omega, &selected)?;
            previous = Some(state);
        }
        let p = cfg.solver.problem(omega.clone());
        let state = match previous.take() {
            Some(s) if cfg.solver.warm_start => s.warm_start(&p)?,
            _ => init_state(&p)?,
        };
        let solved = solve_from(state, &p);
        let wall_ms = start.elapsed().as_millis() as u64;
        let mut row = MetricsRow {
            trial,
            round,
            method: method.name().to_string(),
            observed_count: omega.len(),
            sampling_ratio: omega.len() as f64 / numel as f64,
            k_test: f64::NAN,
            ser_db: f64::NAN,
            psnr_db: f64::NAN,
            wall_ms,
        };
        match solved {
            Ok((state, _)) => {
                let m = evaluate(&state.m, &truth)?;
                (row.k_test, row.ser_db, row.psnr_db) = (m.k_test, m.ser_db, m.psnr_db);
                rows.push(row);
                previous = Some(state);
            }
            Err(Error::NonFinite(what)) => {
                eprintln!(
                    "warning: trial {trial} method {} diverged in round {round} ({what} not finite); trial aborted",
                    method.name()
                );
                rows.push(row);
                break;
            }
            Err(e) => return Err(e).with_context(|| format!("trial {trial} round {round}")),
        }
    }
    Ok(rows)
}

/// Runs every (trial, method) pair, possibly concurrently, and hands each
/// run's rows to `sink` in trial order, then method order.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    mut sink: impl FnMut(&[MetricsRow]) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    let methods = cfg.methods.len();
    let runs = par::map_indexed(cfg.trials * methods, |k| run_trial(cfg, k / methods, cfg.methods[k % methods]));
    for rows in runs {
        sink(&rows?)?;
    }
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    let mut all = Vec::new();
    run_experiment_with(cfg, |rows| {
        all.extend_from_slice(rows);
        Ok(())
    })?;
    Ok(all)
}
