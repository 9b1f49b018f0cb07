//! Block coordinate descent: exact minimisation over `{L_i}`, then `S`, then `M`.

use crate::error::Result;
use crate::tensor::DenseTensor;

use super::{finish_sweep, threshold_modes, ProblemSpec, SolverKind, SolverState};

/// `L_i <- SVT_{alpha_i / lambda_i}(M_(i) - S_(i))` for every mode.
pub fn update_low_rank(state: &mut SolverState, p: &ProblemSpec) -> Result<()> {
    let base = &state.m - &state.s;
    let bases = vec![base; p.ndim()];
    let taus: Vec<f64> = p.alpha.iter().zip(&p.lambda_modes).map(|(a, l)| a / l).collect();
    threshold_modes(state, &bases, &taus)
}

/// `sum_i lambda_i Fold_i(L_i) / sum_i lambda_i`.
pub fn weighted_low_rank_mean(state: &SolverState, p: &ProblemSpec) -> Result<DenseTensor> {
    let folded = state.fold_low_rank(p.shape())?;
    let total: f64 = p.lambda_modes.iter().sum();
    let mut mean = DenseTensor::zeros(p.shape().clone());
    for (f, &l) in folded.iter().zip(&p.lambda_modes) {
        mean.axpy(l / total, f)?;
    }
    Ok(mean)
}

/// Exact `S` block: shrinkage of the residual `M - mean` in the transformed
/// image domain at level `lambda / sum(lambda_i)`. With `lambda = 0` the
/// sparse component is pinned to zero.
pub fn update_sparse(state: &mut SolverState, p: &ProblemSpec) -> Result<()> {
    if p.lambda_sparse == 0.0 {
        state.s = DenseTensor::zeros(p.shape().clone());
        return Ok(());
    }
    let mean = weighted_low_rank_mean(state, p)?;
    let resid = &state.m - &mean;
    let total: f64 = p.lambda_modes.iter().sum();
    state.s = p.sparse_prox(&resid, p.lambda_sparse / total);
    Ok(())
}

/// `M <- mean + S` off Ω, `M_Ω <- T_Ω`.
pub fn update_data(state: &mut SolverState, p: &ProblemSpec) -> Result<()> {
    let mut m = weighted_low_rank_mean(state, p)?;
    m.axpy(1.0, &state.s)?;
    m.scatter_observed_in_place(&p.omega)?;
    state.m = m;
    Ok(())
}

pub fn sweep(state: &mut SolverState, p: &ProblemSpec) -> Result<()> {
    debug_assert_eq!(p.kind, SolverKind::Bcd);
    update_low_rank(state, p)?;
    update_sparse(state, p)?;
    update_data(state, p)?;
    finish_sweep(state, p)
}
