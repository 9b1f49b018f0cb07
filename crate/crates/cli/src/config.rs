//! Flat `key=value` experiment configuration with dotted keys and `#`
//! comments.
//!
//! ```text
//! # phantom
//! phantom.shape=24,24,6
//! phantom.ranks=3,3,3
//! mask.readout_mode=1
//! experiment.method=var,random
//! ```
//!
//! `mask.readout_mode` is 1-based. Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use kspace_core::sampling::Acquisition;
use kspace_core::sim::{MaskSpec, PhantomSpec};
use kspace_core::solver::{ProblemSpec, SolverKind};
use kspace_core::{ObservationSet, Shape};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("{key}: cannot parse {value:?}")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

/// Solver settings that do not depend on the observation set.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub kind: SolverKind,
    /// `None` means uniform `1/n`.
    pub alpha: Option<Vec<f64>>,
    /// `None` means all ones.
    pub lambda_modes: Option<Vec<f64>>,
    pub rho: f64,
    pub lambda_sparse: f64,
    pub max_sweeps: usize,
    pub tol: f64,
    /// Re-solve each round from the previous round's state.
    pub warm_start: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            kind: SolverKind::Admm,
            alpha: None,
            lambda_modes: None,
            rho: 1.0,
            lambda_sparse: 0.0,
            max_sweeps: 200,
            tol: 1e-6,
            warm_start: true,
        }
    }
}

impl SolverParams {
    pub fn problem(&self, omega: ObservationSet) -> ProblemSpec {
        let mut p = ProblemSpec::new(omega, self.kind);
        if let Some(a) = &self.alpha {
            p.alpha = a.clone();
        }
        if let Some(l) = &self.lambda_modes {
            p.lambda_modes = l.clone();
        }
        p.rho = self.rho;
        p.lambda_sparse = self.lambda_sparse;
        p.max_sweeps = self.max_sweeps;
        p.tol = self.tol;
        p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// The phantom seed is replaced by `seed + trial` for each trial.
    pub phantom: PhantomSpec,
    /// The mask seed is replaced by `seed + trial` for each trial.
    pub mask: MaskSpec,
    pub solver: SolverParams,
    /// Strategies compared on identical phantoms and initial masks.
    pub methods: Vec<Acquisition>,
    pub batch_size: usize,
    pub num_batches: usize,
    pub trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let shape = Shape::new(vec![24, 24, 6]).expect("valid default shape");
        Self {
            phantom: PhantomSpec::low_rank(shape.clone(), vec![3, 3, 3], 0),
            mask: MaskSpec { shape, readout_mode: 0, center_fraction: 0.1, random_line_fraction: 0.1, seed: 0 },
            solver: SolverParams::default(),
            methods: vec![Acquisition::VarTimesLev],
            batch_size: 4,
            num_batches: 8,
            trials: 1,
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: value.into() })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value.split(',').map(|v| parse_one(key, v)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ConfigError::BadValue { key: key.into(), value: value.into() }),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut shape: Option<Vec<usize>> = None;
        let mut readout_mode = 1usize;
        let mut seen = BTreeSet::new();

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, text: raw.to_string() })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey { line, key: key.into() });
            }
            match key {
                "phantom.shape" => shape = Some(parse_list(key, value)?),
                "phantom.ranks" => cfg.phantom.tucker_ranks = parse_list(key, value)?,
                "phantom.sparse_fraction" => cfg.phantom.sparse_fraction = parse_one(key, value)?,
                "phantom.noise_sigma" => cfg.phantom.noise_sigma = parse_one(key, value)?,
                "mask.readout_mode" => readout_mode = parse_one(key, value)?,
                "mask.center_fraction" => cfg.mask.center_fraction = parse_one(key, value)?,
                "mask.random_line_fraction" => cfg.mask.random_line_fraction = parse_one(key, value)?,
                "solver.kind" => {
                    cfg.solver.kind = match value.to_ascii_lowercase().as_str() {
                        "admm" => SolverKind::Admm,
                        "bcd" => SolverKind::Bcd,
                        _ => return Err(ConfigError::BadValue { key: key.into(), value: value.into() }),
                    }
                }
                "solver.alpha" => cfg.solver.alpha = Some(parse_list(key, value)?),
                "solver.lambda_i" => cfg.solver.lambda_modes = Some(parse_list(key, value)?),
                "solver.rho" => cfg.solver.rho = parse_one(key, value)?,
                "solver.lambda_s" => cfg.solver.lambda_sparse = parse_one(key, value)?,
                "solver.max_sweeps" => cfg.solver.max_sweeps = parse_one(key, value)?,
                "solver.tol" => cfg.solver.tol = parse_one(key, value)?,
                "solver.warm_start" => cfg.solver.warm_start = parse_bool(key, value)?,
                "experiment.method" => {
                    cfg.methods = value
                        .split(',')
                        .map(|m| {
                            Acquisition::parse(m)
                                .ok_or_else(|| ConfigError::BadValue { key: key.into(), value: m.trim().into() })
                        })
                        .collect::<Result<_, _>>()?
                }
                "experiment.batch_size" => cfg.batch_size = parse_one(key, value)?,
                "experiment.num_batches" => cfg.num_batches = parse_one(key, value)?,
                "experiment.trials" => cfg.trials = parse_one(key, value)?,
                "experiment.seed" => cfg.seed = parse_one(key, value)?,
                "experiment.output_dir" => cfg.output_dir = PathBuf::from(value),
                _ => return Err(ConfigError::UnknownKey { line, key: key.into() }),
            }
        }

        if let Some(dims) = shape {
            let shape = Shape::new(dims).map_err(|e| ConfigError::Invalid(format!("phantom.shape: {e}")))?;
            cfg.phantom.shape = shape.clone();
            cfg.mask.shape = shape;
        }
        if readout_mode == 0 {
            return Err(ConfigError::Invalid("mask.readout_mode is 1-based".into()));
        }
        cfg.mask.readout_mode = readout_mode - 1;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: kspace_core::Error| ConfigError::Invalid(e.to_string());
        self.phantom.validate().map_err(invalid)?;
        self.mask.validate().map_err(invalid)?;
        if self.phantom.shape != self.mask.shape {
            return Err(ConfigError::Invalid("phantom and mask shapes differ".into()));
        }
        self.solver.problem(ObservationSet::new(self.phantom.shape.clone())).validate().map_err(invalid)?;
        if self.batch_size == 0 {
            return Err(ConfigError::Invalid("experiment.batch_size must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(ConfigError::Invalid("experiment.trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::Invalid("experiment.method is empty".into()));
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_key() {
        let text = "
# comment line
phantom.shape = 8,8,4   # trailing comment
phantom.ranks=2,2,1
phantom.sparse_fraction=0.05
phantom.noise_sigma=0.01
mask.readout_mode=3
mask.center_fraction=0.25
mask.random_line_fraction=0.25
solver.kind=bcd
solver.alpha=0.5,0.25,0.25
solver.lambda_i=1,2,3
solver.rho=0.5
solver.lambda_s=0.1
solver.max_sweeps=50
solver.tol=1e-5
solver.warm_start=false
experiment.method=var, random ,method4
experiment.batch_size=3
experiment.num_batches=2
experiment.trials=5
experiment.seed=7
experiment.output_dir=results
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.phantom.shape.dims(), &[8, 8, 4]);
        assert_eq!(cfg.mask.shape, cfg.phantom.shape);
        assert_eq!(cfg.phantom.tucker_ranks, vec![2, 2, 1]);
        assert_eq!(cfg.mask.readout_mode, 2);
        assert_eq!(cfg.solver.kind, SolverKind::Bcd);
        assert_eq!(cfg.solver.alpha, Some(vec![0.5, 0.25, 0.25]));
        assert_eq!(cfg.solver.lambda_modes, Some(vec![1.0, 2.0, 3.0]));
        assert!(!cfg.solver.warm_start);
        assert_eq!(cfg.methods, vec![Acquisition::Var, Acquisition::Random, Acquisition::VarTimesLev]);
        assert_eq!((cfg.batch_size, cfg.num_batches, cfg.trials, cfg.seed), (3, 2, 5, 7));
        assert_eq!(cfg.output_dir, PathBuf::from("results"));
        assert_eq!(cfg.trial_seed(2), 9);
    }

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::parse("nonsense"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("x.y=1"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(
            ExperimentConfig::parse("solver.rho=1\nsolver.rho=2"),
            Err(ConfigError::DuplicateKey { line: 2, .. })
        ));
        assert!(matches!(ExperimentConfig::parse("solver.rho=abc"), Err(ConfigError::BadValue { .. })));
        assert!(ExperimentConfig::parse("mask.readout_mode=0").is_err());
        assert!(ExperimentConfig::parse("mask.readout_mode=4").is_err());
        assert!(ExperimentConfig::parse("experiment.batch_size=0").is_err());
        assert!(ExperimentConfig::parse("solver.alpha=0.5,0.5").is_err());
        assert!(ExperimentConfig::parse("phantom.ranks=30,3,3").is_err());
        assert!(ExperimentConfig::parse("experiment.method=best").is_err());
    }
}
