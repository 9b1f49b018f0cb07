//! Overlapped-nuclear-norm tensor completion with an optional sparse
//! component, solved by block coordinate descent or ADMM.
//!
//! Both solvers keep one low-rank matrix `L_i` per mode unfolding, a sparse
//! k-space tensor `S` (sparse after an image-domain transform) and the
//! completed tensor `M`, which always agrees with the observations on Ω.
//! ADMM additionally carries one dual tensor `Y_i` per mode.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fft::{fft_forward, fft_inverse};
use crate::linalg::{self, SvdFactors};
use crate::tensor::{DenseTensor, Matrix, ObservationSet, Shape};

pub mod admm;
pub mod bcd;

/// Floor on the denominator of the relative-change stopping rule.
pub const RELATIVE_CHANGE_FLOOR: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Bcd,
    Admm,
}

/// A unitary map from image space into the domain where `S` is sparse.
pub trait SparsifyingTransform: Send + Sync {
    fn forward(&self, image: &DenseTensor) -> DenseTensor;
    fn inverse(&self, coeffs: &DenseTensor) -> DenseTensor;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityTransform;

impl SparsifyingTransform for IdentityTransform {
    fn forward(&self, image: &DenseTensor) -> DenseTensor {
        image.clone()
    }
    fn inverse(&self, coeffs: &DenseTensor) -> DenseTensor {
        coeffs.clone()
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    /// Observed entries of the ground-truth k-space tensor.
    pub omega: ObservationSet,
    /// Nuclear-norm weight per mode; positive, summing to one.
    pub alpha: Vec<f64>,
    /// BCD coupling weight per mode.
    pub lambda_modes: Vec<f64>,
    /// ADMM penalty.
    pub rho: f64,
    /// Sparsity weight; zero removes the sparse component.
    pub lambda_sparse: f64,
    pub transform: Arc<dyn SparsifyingTransform>,
    pub kind: SolverKind,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dims", &self.shape().dims())
            .field("observed", &self.omega.len())
            .field("alpha", &self.alpha)
            .field("lambda_modes", &self.lambda_modes)
            .field("rho", &self.rho)
            .field("lambda_sparse", &self.lambda_sparse)
            .field("kind", &self.kind)
            .field("max_sweeps", &self.max_sweeps)
            .field("tol", &self.tol)
            .finish()
    }
}

impl ProblemSpec {
    /// Defaults: `alpha_i = 1/n`, `lambda_i = 1`, `rho = 1`, no sparse term,
    /// identity transform, 200 sweeps, `tol = 1e-6`.
    pub fn new(omega: ObservationSet, kind: SolverKind) -> Self {
        let n = omega.shape().ndim();
        Self {
            omega,
            alpha: vec![1.0 / n as f64; n],
            lambda_modes: vec![1.0; n],
            rho: 1.0,
            lambda_sparse: 0.0,
            transform: Arc::new(IdentityTransform),
            kind,
            max_sweeps: 200,
            tol: 1e-6,
        }
    }

    pub fn shape(&self) -> &Shape {
        self.omega.shape()
    }

    pub fn ndim(&self) -> usize {
        self.shape().ndim()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ndim();
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.alpha.len() != n || self.lambda_modes.len() != n {
            return bad(format!("alpha and lambda_modes need {n} entries"));
        }
        if self.alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return bad(format!("alpha must be positive, got {:?}", self.alpha));
        }
        let sum: f64 = self.alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("alpha must sum to 1, sums to {sum}"));
        }
        if self.lambda_modes.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return bad(format!("lambda_modes must be positive, got {:?}", self.lambda_modes));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.lambda_sparse >= 0.0) || !self.lambda_sparse.is_finite() {
            return bad(format!("lambda_sparse must be >= 0, got {}", self.lambda_sparse));
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        Ok(())
    }

    /// Committee weights: `1/n` for ADMM, `lambda_i / sum(lambda)` for BCD.
    pub fn mode_weights(&self) -> Vec<f64> {
        let n = self.ndim();
        match self.kind {
            SolverKind::Admm => vec![1.0 / n as f64; n],
            SolverKind::Bcd => {
                let total: f64 = self.lambda_modes.iter().sum();
                self.lambda_modes.iter().map(|l| l / total).collect()
            }
        }
    }

    /// Proximal step of `lambda * ||T F^{-1} S||_1` at `level`, applied to a
    /// k-space tensor. Exact because `T` and `F` are unitary.
    pub fn sparse_prox(&self, kspace: &DenseTensor, level: f64) -> DenseTensor {
        let coeffs = self.transform.forward(&fft_inverse(kspace));
        let shrunk = linalg::soft_threshold(&coeffs, level);
        fft_forward(&self.transform.inverse(&shrunk))
    }

    /// `||T F^{-1} S||_1`.
    pub fn sparse_penalty(&self, s: &DenseTensor) -> f64 {
        self.transform.forward(&fft_inverse(s)).data().iter().map(|z| z.norm()).sum()
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub m: DenseTensor,
    pub s: DenseTensor,
    /// One matrix per mode, shaped like the mode-i unfolding of `m`.
    pub low_rank: Vec<Matrix>,
    /// ADMM duals; stay zero under BCD.
    pub duals: Vec<DenseTensor>,
    pub sweep: usize,
    pub objective_history: Vec<f64>,
    /// SVD of each `L_i` from its last thresholding step. Must describe the
    /// current `low_rank`; cleared by [`SolverState::invalidate_cache`].
    pub svd_cache: Vec<Option<SvdFactors>>,
}

impl SolverState {
    pub fn invalidate_cache(&mut self) {
        self.svd_cache.iter_mut().for_each(|c| *c = None);
    }

    pub fn ndim(&self) -> usize {
        self.low_rank.len()
    }

    /// Prepares a state from a previous round for a larger observation set:
    /// the new measurements are written into `m`, everything else is kept.
    pub fn warm_start(mut self, p: &ProblemSpec) -> Result<Self> {
        self.m.scatter_observed_in_place(&p.omega)?;
        Ok(self)
    }

    pub(crate) fn fold_low_rank(&self, shape: &Shape) -> Result<Vec<DenseTensor>> {
        let n = self.ndim();
        crate::par::map_indexed(n, |i| DenseTensor::fold(&self.low_rank[i], i, shape))
            .into_iter()
            .collect()
    }

    fn check_finite(&self) -> Result<()> {
        if !self.m.is_finite() {
            return Err(Error::NonFinite("completed tensor M"));
        }
        if !self.s.is_finite() {
            return Err(Error::NonFinite("sparse component S"));
        }
        if self.duals.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("dual variables"));
        }
        if self.low_rank.iter().any(|l| l.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::NonFinite("low-rank factors"));
        }
        Ok(())
    }
}

/// Per-mode completions `Fold_i(L_i)` with observed entries restored, plus
/// their committee weights.
#[derive(Clone, Debug)]
pub struct ModeApproximations {
    pub approx: Vec<DenseTensor>,
    pub weights: Vec<f64>,
}

impl ModeApproximations {
    pub fn shape(&self) -> &Shape {
        self.approx[0].shape()
    }

    /// Weighted committee mean `E[M~] = sum w_i M~_i`.
    pub fn mean(&self) -> DenseTensor {
        let mut mean = DenseTensor::zeros(self.shape().clone());
        for (a, &w) in self.approx.iter().zip(&self.weights) {
            mean.axpy(w, a).expect("committee members share a shape");
        }
        mean
    }
}

pub fn init_state(p: &ProblemSpec) -> Result<SolverState> {
    p.validate()?;
    let shape = p.shape().clone();
    let m = DenseTensor::zeros(shape.clone()).scatter_observed(&p.omega)?;
    let low_rank = (0..shape.ndim()).map(|i| m.unfold(i)).collect::<Result<Vec<_>>>()?;
    Ok(SolverState {
        s: DenseTensor::zeros(shape.clone()),
        duals: vec![DenseTensor::zeros(shape.clone()); shape.ndim()],
        svd_cache: vec![None; shape.ndim()],
        low_rank,
        m,
        sweep: 0,
        objective_history: Vec::new(),
    })
}

fn check_state(state: &SolverState, p: &ProblemSpec) -> Result<()> {
    if state.m.shape() != p.shape() {
        return Err(Error::ShapeMismatch {
            expected: p.shape().dims().to_vec(),
            found: state.m.dims().to_vec(),
        });
    }
    if state.low_rank.len() != p.ndim() || state.duals.len() != p.ndim() {
        return Err(Error::InvalidParameter("state has the wrong number of modes".into()));
    }
    Ok(())
}

/// One sweep of whichever solver `p.kind` selects.
pub fn sweep(state: &mut SolverState, p: &ProblemSpec) -> Result<()> {
    match p.kind {
        SolverKind::Bcd => bcd::sweep(state, p),
        SolverKind::Admm => admm::sweep(state, p),
    }
}

/// Nuclear norm of `L_i`, from the cache when present.
fn low_rank_nuclear(state: &SolverState, i: usize) -> Result<f64> {
    match &state.svd_cache[i] {
        Some(f) => Ok(f.nuclear_norm()),
        None => linalg::nuclear_norm(&state.low_rank[i]),
    }
}

/// Real inner product `Re <a, b>` of two complex tensors.
fn real_inner(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// BCD: `sum alpha_i ||L_i||_* + sum lambda_i/2 ||L_i + S_(i) - M_(i)||^2 + lambda ||T F^-1 S||_1`.
/// ADMM: the augmented Lagrangian, with `rho/2` penalties and the dual terms
/// `Re <M - Fold_i(L_i) - S, Y_i>`.
pub fn objective(state: &SolverState, p: &ProblemSpec) -> Result<f64> {
    check_state(state, p)?;
    let shape = p.shape();
    let n = p.ndim();
    let terms = crate::par::map_indexed(n, |i| -> Result<f64> {
        let folded = DenseTensor::fold(&state.low_rank[i], i, shape)?;
        // Fold_i(L_i) + S - M
        let mut resid = folded;
        resid.axpy(1.0, &state.s)?;
        resid.axpy(-1.0, &state.m)?;
        let nuclear = p.alpha[i] * low_rank_nuclear(state, i)?;
        Ok(match p.kind {
            SolverKind::Bcd => nuclear + 0.5 * p.lambda_modes[i] * resid.squared_norm(),
            SolverKind::Admm => {
                nuclear + 0.5 * p.rho * resid.squared_norm() - real_inner(&resid, &state.duals[i])
            }
        })
    });
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    if p.lambda_sparse > 0.0 {
        total += p.lambda_sparse * p.sparse_penalty(&state.s);
    }
    Ok(total)
}

/// Runs sweeps from `state` until the relative change of `M` drops below
/// `p.tol` or `p.max_sweeps` sweeps have been made.
pub fn solve_from(mut state: SolverState, p: &ProblemSpec) -> Result<(SolverState, ModeApproximations)> {
    p.validate()?;
    check_state(&state, p)?;
    for _ in 0..p.max_sweeps {
        let previous = state.m.clone();
        sweep(&mut state, p)?;
        let change = (&state.m - &previous).frobenius_norm()
            / previous.frobenius_norm().max(RELATIVE_CHANGE_FLOOR);
        if change < p.tol && consensus_reached(&state, p)? {
            break;
        }
    }
    let ma = mode_approximations(&state, p)?;
    Ok((state, ma))
}

/// ADMM can leave `M` unchanged for a sweep while the mode copies are still
/// far from it (e.g. every `L_i` thresholded to zero on the first sweep), so
/// it also needs the primal residual relative to `M` below `tol`.
fn consensus_reached(state: &SolverState, p: &ProblemSpec) -> Result<bool> {
    match p.kind {
        SolverKind::Bcd => Ok(true),
        SolverKind::Admm => {
            let scale = state.m.frobenius_norm().max(RELATIVE_CHANGE_FLOOR);
            Ok(admm::primal_residual(state, p)? / scale < p.tol)
        }
    }
}

pub fn solve(p: &ProblemSpec) -> Result<(SolverState, ModeApproximations)> {
    solve_from(init_state(p)?, p)
}

pub fn mode_approximations(state: &SolverState, p: &ProblemSpec) -> Result<ModeApproximations> {
    check_state(state, p)?;
    let approx = state
        .fold_low_rank(p.shape())?
        .into_iter()
        .map(|t| t.scatter_observed(&p.omega))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeApproximations { approx, weights: p.mode_weights() })
}

/// Shared tail of both sweeps: finite check and objective bookkeeping.
pub(crate) fn finish_sweep(state: &mut SolverState, p: &ProblemSpec) -> Result<()> {
    state.check_finite()?;
    state.sweep += 1;
    let obj = objective(state, p)?;
    state.objective_history.push(obj);
    Ok(())
}

/// Thresholds each `unfold_i(base_i)` at `tau_i`, storing `L_i` and the
/// factors of `L_i` in the cache. Modes are processed in parallel.
pub(crate) fn threshold_modes(
    state: &mut SolverState,
    bases: &[DenseTensor],
    taus: &[f64],
) -> Result<()> {
    let n = state.ndim();
    let results = crate::par::map_indexed(n, |i| -> Result<(Matrix, SvdFactors)> {
        let (l, factors) = linalg::svt(&bases[i].unfold(i)?, taus[i])?;
        Ok((l, factors.shrink(taus[i])))
    });
    for (i, r) in results.into_iter().enumerate() {
        let (l, f) = r?;
        state.low_rank[i] = l;
        state.svd_cache[i] = Some(f);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn tiny_problem(kind: SolverKind) -> ProblemSpec {
        let shape = Shape::new(vec![2, 3]).unwrap();
        let truth = DenseTensor::from_fn(shape, |i| Complex64::new(i as f64, 1.0));
        ProblemSpec::new(ObservationSet::from_offsets(&truth, [0, 4]).unwrap(), kind)
    }

    #[test]
    fn validation_catches_bad_weights() {
        let mut p = tiny_problem(SolverKind::Bcd);
        assert!(p.validate().is_ok());
        p.alpha = vec![0.7, 0.7];
        assert!(p.validate().is_err());
        p.alpha = vec![1.0, 0.0];
        assert!(p.validate().is_err());
        p = tiny_problem(SolverKind::Admm);
        p.rho = 0.0;
        assert!(p.validate().is_err());
        p = tiny_problem(SolverKind::Admm);
        p.max_sweeps = 0;
        assert!(p.validate().is_err());
        p = tiny_problem(SolverKind::Admm);
        p.lambda_sparse = -1.0;
        assert!(init_state(&p).is_err());
    }

    #[test]
    fn mode_weights_follow_solver() {
        let mut p = tiny_problem(SolverKind::Bcd);
        p.lambda_modes = vec![1.0, 3.0];
        assert_eq!(p.mode_weights(), vec![0.25, 0.75]);
        p.kind = SolverKind::Admm;
        assert_eq!(p.mode_weights(), vec![0.5, 0.5]);
    }

    #[test]
    fn objective_of_zero_and_unit_states() {
        let shape = Shape::new(vec![2, 2, 2]).unwrap();
        let omega = ObservationSet::new(shape.clone());
        let p = ProblemSpec::new(omega, SolverKind::Bcd);
        let mut st = init_state(&p).unwrap();
        assert_eq!(objective(&st, &p).unwrap(), 0.0);
        st.m.data_mut()[3] = Complex64::new(1.0, 0.0);
        assert!((objective(&st, &p).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn sparse_prox_with_identity_is_kspace_shrinkage_of_image() {
        let p = tiny_problem(SolverKind::Bcd);
        let k = DenseTensor::from_fn(p.shape().clone(), |i| Complex64::new(i as f64 - 2.0, 0.5));
        let out = p.sparse_prox(&k, 0.0);
        assert!((&out - &k).frobenius_norm() < 1e-12);
        let huge = p.sparse_prox(&k, 1e6);
        assert_eq!(huge.frobenius_norm(), 0.0);
    }
}
