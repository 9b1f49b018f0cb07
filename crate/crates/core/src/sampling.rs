//! Query-by-Committee utilities and pattern-constrained batch selection.
//!
//! The committee is the set of per-mode completions produced by the solver.
//! Disagreement among them (predictive variance), the coherence of their
//! low-rank factors (leverage) or a combination of both scores every element.
//! Element scores are summed over acquisition patterns (whole k-space lines)
//! and the top patterns are acquired next.

use std::cmp::Ordering;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::solver::{ModeApproximations, ProblemSpec, SolverState};
use crate::tensor::{DenseTensor, Matrix, MultiIndex, Shape};
use crate::Complex64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatternKind {
    Element,
    /// Every element along `mode`, all other coordinates fixed to `fixed`
    /// (whose entry at `mode` is zero).
    Fiber { mode: usize, fixed: MultiIndex },
}

/// A group of elements that is acquired as a unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub id: usize,
    /// Element offsets in tensor storage order.
    pub elements: Vec<usize>,
    pub kind: PatternKind,
}

impl Pattern {
    pub fn element(id: usize, shape: &Shape, index: &MultiIndex) -> Result<Self> {
        Ok(Self { id, elements: vec![shape.offset(index)?], kind: PatternKind::Element })
    }

    /// The fiber along `mode` through `through` (its `mode` coordinate is ignored).
    pub fn fiber(id: usize, shape: &Shape, mode: usize, through: &MultiIndex) -> Result<Self> {
        shape.check_mode(mode)?;
        let mut fixed = through.clone();
        if fixed.0.len() != shape.ndim() {
            return Err(Error::IndexOutOfRange { index: fixed.0, dims: shape.dims().to_vec() });
        }
        fixed.0[mode] = 0;
        let start = shape.offset(&fixed)?;
        let stride = shape.strides()[mode];
        let elements = (0..shape.dims()[mode]).map(|j| start + j * stride).collect();
        Ok(Self { id, elements, kind: PatternKind::Fiber { mode, fixed } })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn indices(&self, shape: &Shape) -> Result<Vec<MultiIndex>> {
        self.elements.iter().map(|&o| shape.index_of(o)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UtilityKind {
    Var,
    Lev,
    VarPlusLev,
    VarTimesLev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    Sum,
    Product,
}

/// Nonnegative real score for every tensor element.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityField {
    shape: Shape,
    values: Vec<f64>,
    pub kind: UtilityKind,
}

impl UtilityField {
    pub fn new(shape: Shape, values: Vec<f64>, kind: UtilityKind) -> Result<Self> {
        if values.len() != shape.numel() {
            return Err(Error::InvalidParameter(format!(
                "utility field has {} values for {} elements",
                values.len(),
                shape.numel()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("utility values must be finite and >= 0".into()));
        }
        Ok(Self { shape, values, kind })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::new(self.shape.clone(), self.values.iter().map(|v| v * c).collect(), self.kind)
    }

    /// Divides by the largest entry; an all-zero field stays zero.
    pub fn max_normalized(&self) -> Self {
        let max = self.max();
        let values = if max > 0.0 {
            self.values.iter().map(|v| v / max).collect()
        } else {
            self.values.clone()
        };
        Self { shape: self.shape.clone(), values, kind: self.kind }
    }

    pub fn to_tensor(&self) -> DenseTensor {
        DenseTensor::from_fn(self.shape.clone(), |i| Complex64::new(self.values[i], 0.0))
    }
}

/// `V = sum_i w_i |M~_i - E[M~]|^2`. Elements where every committee member
/// agrees bitwise (in particular every observed element) score exactly zero.
pub fn variance_utility(ma: &ModeApproximations) -> Result<UtilityField> {
    check_committee(ma)?;
    let shape = ma.shape().clone();
    let mean = ma.mean();
    let first = &ma.approx[0];
    let values = (0..shape.numel())
        .map(|e| {
            let x0 = first.data()[e];
            if ma.approx.iter().all(|a| a.data()[e] == x0) {
                return 0.0;
            }
            let mu = mean.data()[e];
            ma.approx.iter().zip(&ma.weights).map(|(a, &w)| w * (a.data()[e] - mu).norm_sqr()).sum()
        })
        .collect();
    UtilityField::new(shape, values, UtilityKind::Var)
}

fn check_committee(ma: &ModeApproximations) -> Result<()> {
    if ma.approx.len() < 2 || ma.weights.len() != ma.approx.len() {
        return Err(Error::InvalidParameter(format!(
            "committee needs at least two members with one weight each, got {} and {}",
            ma.approx.len(),
            ma.weights.len()
        )));
    }
    let shape = ma.approx[0].shape();
    for a in &ma.approx[1..] {
        if a.shape() != shape {
            return Err(Error::ShapeMismatch { expected: shape.dims().to_vec(), found: a.dims().to_vec() });
        }
    }
    let sum: f64 = ma.weights.iter().sum();
    if ma.weights.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("committee weights {:?} are not a distribution", ma.weights)));
    }
    Ok(())
}

/// `sum_k w_k Fold_k(l_k r_k^T)` from the cached SVD of each `L_k`.
/// Modes with zero weight are skipped.
pub fn leverage_field(state: &SolverState, shape: &Shape, weights: &[f64], rank_tol: f64) -> Result<UtilityField> {
    if weights.len() != state.ndim() {
        return Err(Error::InvalidParameter("one weight per mode is required".into()));
    }
    let per_mode = crate::par::map_indexed(state.ndim(), |k| -> Result<Option<Vec<f64>>> {
        if weights[k] == 0.0 {
            return Ok(None);
        }
        let factors = state.svd_cache[k].as_ref().ok_or(Error::MissingSvdCache(k))?;
        let lp = linalg::leverage_scores(factors, rank_tol);
        let outer = Matrix::from_fn(lp.left.len(), lp.right.len(), |i, j| {
            Complex64::new(lp.left[i] * lp.right[j], 0.0)
        });
        let folded = DenseTensor::fold(&outer, k, shape)?;
        Ok(Some(folded.data().iter().map(|z| z.re).collect()))
    });
    let mut values = vec![0.0; shape.numel()];
    for (k, term) in per_mode.into_iter().enumerate() {
        if let Some(term) = term? {
            for (v, t) in values.iter_mut().zip(term) {
                *v += weights[k] * t;
            }
        }
    }
    UtilityField::new(shape.clone(), values, UtilityKind::Lev)
}

/// Mode-averaged element leverage with the solver's committee weights.
pub fn leverage_utility(state: &SolverState, p: &ProblemSpec) -> Result<UtilityField> {
    leverage_field(state, p.shape(), &p.mode_weights(), DEFAULT_RANK_TOL)
}

/// Max-normalises both fields and adds or multiplies them elementwise.
pub fn combine_utilities(v: &UtilityField, l: &UtilityField, mode: Combine) -> Result<UtilityField> {
    if v.shape != l.shape {
        return Err(Error::ShapeMismatch { expected: v.shape.dims().to_vec(), found: l.shape.dims().to_vec() });
    }
    let (nv, nl) = (v.max_normalized(), l.max_normalized());
    let (values, kind) = match mode {
        Combine::Sum => (nv.values.iter().zip(&nl.values).map(|(a, b)| a + b).collect(), UtilityKind::VarPlusLev),
        Combine::Product => (nv.values.iter().zip(&nl.values).map(|(a, b)| a * b).collect(), UtilityKind::VarTimesLev),
    };
    UtilityField::new(v.shape.clone(), values, kind)
}

pub fn pattern_utility(u: &UtilityField, pattern: &Pattern) -> Result<f64> {
    let len = u.values.len();
    pattern.elements.iter().try_fold(0.0, |acc, &o| {
        u.values.get(o).map(|v| acc + v).ok_or(Error::OffsetOutOfRange { offset: o, len })
    })
}

/// Pattern sums within this relative distance of each other count as tied.
/// Rounding in the sums would otherwise let a rescaled field break exact
/// ties differently.
pub const TIE_RELATIVE_TOL: f64 = 1e-12;

/// The `count` patterns with the largest summed utility, ties broken by the
/// smaller pattern id.
///
/// After sorting by decreasing sum, a run of sums that all lie within
/// [`TIE_RELATIVE_TOL`] of the run's largest one is treated as one tie group
/// and ordered by id.
pub fn select_batch(u: &UtilityField, patterns: &[Pattern], count: usize) -> Result<Vec<Pattern>> {
    if count > patterns.len() {
        return Err(Error::NotEnoughCandidates { requested: count, available: patterns.len() });
    }
    let mut scored = patterns
        .iter()
        .map(|p| Ok((pattern_utility(u, p)?, p)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|(ua, pa), (ub, pb)| match ub.total_cmp(ua) {
        Ordering::Equal => pa.id.cmp(&pb.id),
        other => other,
    });
    let mut start = 0;
    while start < scored.len() && start < count {
        let head = scored[start].0;
        let end = start
            + scored[start..].iter().take_while(|(v, _)| head - v <= TIE_RELATIVE_TOL * head).count();
        scored[start..end].sort_by_key(|(_, p)| p.id);
        start = end;
    }
    Ok(scored.into_iter().take(count).map(|(_, p)| p.clone()).collect())
}

/// Uniform draw of `count` patterns without replacement.
pub fn random_baseline(patterns: &[Pattern], count: usize, seed: u64) -> Result<Vec<Pattern>> {
    if count > patterns.len() {
        return Err(Error::NotEnoughCandidates { requested: count, available: patterns.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, patterns.len(), count).into_iter().map(|i| patterns[i].clone()).collect())
}

/// Single-matricization coherence baseline: selection driven by the mode-1
/// leverage field alone.
pub fn coherence_baseline(state: &SolverState, p: &ProblemSpec, patterns: &[Pattern], count: usize) -> Result<Vec<Pattern>> {
    let mut weights = vec![0.0; state.ndim()];
    weights[0] = 1.0;
    let field = leverage_field(state, p.shape(), &weights, DEFAULT_RANK_TOL)?;
    select_batch(&field, patterns, count)
}

/// Strategy used to pick the next batch of patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Acquisition {
    Var,
    Lev,
    VarPlusLev,
    VarTimesLev,
    Random,
    Coherence,
}

impl Acquisition {
    pub const ALL: [Acquisition; 6] = [
        Acquisition::Var,
        Acquisition::Lev,
        Acquisition::VarPlusLev,
        Acquisition::VarTimesLev,
        Acquisition::Random,
        Acquisition::Coherence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Acquisition::Var => "var",
            Acquisition::Lev => "lev",
            Acquisition::VarPlusLev => "var+lev",
            Acquisition::VarTimesLev => "varxlev",
            Acquisition::Random => "random",
            Acquisition::Coherence => "coherence",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|a| a.name() == s).or(match s.as_str() {
            "var_plus_lev" | "varpluslev" | "method3" => Some(Acquisition::VarPlusLev),
            "var_times_lev" | "vartimeslev" | "var*lev" | "method4" => Some(Acquisition::VarTimesLev),
            "method1" => Some(Acquisition::Var),
            "method2" => Some(Acquisition::Lev),
            _ => None,
        })
    }

    /// The element utility this strategy ranks by, if any.
    pub fn utility(self, state: &SolverState, p: &ProblemSpec, ma: &ModeApproximations) -> Result<Option<UtilityField>> {
        Ok(match self {
            Acquisition::Var => Some(variance_utility(ma)?),
            Acquisition::Lev => Some(leverage_utility(state, p)?),
            Acquisition::VarPlusLev => {
                Some(combine_utilities(&variance_utility(ma)?, &leverage_utility(state, p)?, Combine::Sum)?)
            }
            Acquisition::VarTimesLev => {
                Some(combine_utilities(&variance_utility(ma)?, &leverage_utility(state, p)?, Combine::Product)?)
            }
            Acquisition::Random | Acquisition::Coherence => None,
        })
    }

    pub fn select(
        self,
        state: &SolverState,
        p: &ProblemSpec,
        ma: &ModeApproximations,
        patterns: &[Pattern],
        count: usize,
        seed: u64,
    ) -> Result<Vec<Pattern>> {
        match self {
            Acquisition::Random => random_baseline(patterns, count, seed),
            Acquisition::Coherence => coherence_baseline(state, p, patterns, count),
            _ => {
                let u = self.utility(state, p, ma)?.expect("utility-driven strategy");
                select_batch(&u, patterns, count)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    pub mu_tot: f64,
    pub mu_i: Vec<f64>,
    pub mu: f64,
    /// `|mu_tot - (sum w_i mu_i - mu)|`
    pub residual: f64,
}

/// Splits the committee-mean error into per-mode errors minus the committee
/// disagreement: `mu_tot = sum w_i mu_i - mu`.
pub fn lemma_decomposition(ma: &ModeApproximations, truth: &DenseTensor) -> Result<LemmaReport> {
    check_committee(ma)?;
    truth.ensure_same_shape(&ma.approx[0])?;
    let mu = variance_utility(ma)?.values.iter().sum::<f64>();
    let mu_i: Vec<f64> = ma.approx.iter().map(|a| (truth - a).squared_norm()).collect();
    let mu_tot = (truth - &ma.mean()).squared_norm();
    let weighted: f64 = mu_i.iter().zip(&ma.weights).map(|(m, w)| m * w).sum();
    Ok(LemmaReport { residual: (mu_tot - (weighted - mu)).abs(), mu_tot, mu_i, mu })
}
