//! Consensus ADMM on the augmented Lagrangian with one dual tensor per mode.

use crate::error::Result;
use crate::tensor::DenseTensor;

use super::{finish_sweep, threshold_modes, ProblemSpec, SolverKind, SolverState};

/// `L_i <- SVT_{alpha_i / rho}(M_(i) - S_(i) + Y_i(i) / rho)`.
pub fn update_low_rank(state: &mut SolverState, p: &ProblemSpec) -> Result<()> {
    let base = &state.m - &state.s;
    let bases = state
        .duals
        .iter()
        .map(|y| {
            let mut b = base.clone();
            b.axpy(1.0 / p.rho, y)?;
            Ok(b)
        })
        .collect::<Result<Vec<_>>>()?;
    let taus: Vec<f64> = p.alpha.iter().map(|a| a / p.rho).collect();
    threshold_modes(state, &bases, &taus)
}

/// Shrinks `M - sum_i (Fold_i(L_i)/n - Y_i/(n rho))` at level `lambda / (n rho)`;
/// pinned to zero when `lambda = 0`.
pub fn update_sparse(state: &mut SolverState, p: &ProblemSpec, folded: &[DenseTensor]) -> Result<()> {
    if p.lambda_sparse == 0.0 {
        state.s = DenseTensor::zeros(p.shape().clone());
        return Ok(());
    }
    let n = p.ndim() as f64;
    let mut arg = state.m.clone();
    for (f, y) in folded.iter().zip(&state.duals) {
        arg.axpy(-1.0 / n, f)?;
        arg.axpy(1.0 / (n * p.rho), y)?;
    }
    state.s = p.sparse_prox(&arg, p.lambda_sparse / (n * p.rho));
    Ok(())
}

/// `M <- (1/n) sum_i (Fold_i(L_i) + S - Y_i / rho)` off Ω, `M_Ω <- T_Ω`.
pub fn update_data(state: &mut SolverState, p: &ProblemSpec, folded: &[DenseTensor]) -> Result<()> {
    let n = p.ndim() as f64;
    let mut m = state.s.clone();
    for (f, y) in folded.iter().zip(&state.duals) {
        m.axpy(1.0 / n, f)?;
        m.axpy(-1.0 / (n * p.rho), y)?;
    }
    m.scatter_observed_in_place(&p.omega)?;
    state.m = m;
    Ok(())
}

/// `Y_i <- Y_i - rho (Fold_i(L_i) + S - M)`.
pub fn update_duals(state: &mut SolverState, p: &ProblemSpec, folded: &[DenseTensor]) -> Result<()> {
    for (y, f) in state.duals.iter_mut().zip(folded) {
        y.axpy(-p.rho, f)?;
        y.axpy(-p.rho, &state.s)?;
        y.axpy(p.rho, &state.m)?;
    }
    Ok(())
}

/// Primal residual tensors `Fold_i(L_i) + S - M`.
pub fn residuals(state: &SolverState, p: &ProblemSpec) -> Result<Vec<DenseTensor>> {
    state
        .fold_low_rank(p.shape())?
        .into_iter()
        .map(|mut r| {
            r.axpy(1.0, &state.s)?;
            r.axpy(-1.0, &state.m)?;
            Ok(r)
        })
        .collect()
}

/// `max_i ||Fold_i(L_i) + S - M||_F`.
pub fn primal_residual(state: &SolverState, p: &ProblemSpec) -> Result<f64> {
    Ok(residuals(state, p)?.iter().map(|r| r.frobenius_norm()).fold(0.0, f64::max))
}

pub fn sweep(state: &mut SolverState, p: &ProblemSpec) -> Result<()> {
    debug_assert_eq!(p.kind, SolverKind::Admm);
    update_low_rank(state, p)?;
    let folded = state.fold_low_rank(p.shape())?;
    update_sparse(state, p, &folded)?;
    update_data(state, p, &folded)?;
    update_duals(state, p, &folded)?;
    finish_sweep(state, p)
}
