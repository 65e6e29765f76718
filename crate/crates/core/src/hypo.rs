//! Algebraic Hörmander checks.
//!
//! * Langevin forcing: the smallest subspace containing `range(sigma)` and closed under the
//!   symmetric Arnold form `q` must be the whole algebra.
//! * Constrained diffusion on an invariant manifold `Z`: the p-hull of `Z` (smallest
//!   subalgebra containing `Z - Z` and invariant under `ad z0`) must be the whole algebra.
//!
//! Every routine is generic over [`Scalar`]: with [`Rational`] inputs all rank decisions are
//! exact.

use serde_json::{json, Value};

use crate::algebra::{AlgebraVector, LieAlgebraSpec};
use crate::arnold::{arnold_form, ArnoldForm};
use crate::chart::ZChart;
use crate::error::{Error, Result};
use crate::linalg::{NEAR_THRESHOLD_FACTOR, RANK_TOLERANCE};
use crate::scalar::{Rational, Scalar};

/// A basis of a subspace of the algebra.
#[derive(Debug, Clone)]
pub struct SubspaceBasis<T = f64> {
    dim: usize,
    vectors: Vec<AlgebraVector<T>>,
    near_threshold: bool,
}

impl<T: Scalar> SubspaceBasis<T> {
    /// Reduce `vectors` to a basis of their span.
    pub fn span(dim: usize, vectors: &[AlgebraVector<T>]) -> Self {
        let rows: Vec<Vec<T>> = vectors.iter().map(|v| v.0.clone()).collect();
        let reduced = T::reduce_span(&rows);
        SubspaceBasis {
            dim,
            vectors: reduced.basis.into_iter().map(AlgebraVector).collect(),
            near_threshold: reduced.near_threshold,
        }
    }

    pub fn zero(dim: usize) -> Self {
        SubspaceBasis { dim, vectors: Vec::new(), near_threshold: false }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[AlgebraVector<T>] {
        &self.vectors
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.dim
    }

    /// Some rank decision leading to this basis was close to the float cutoff.
    pub fn near_threshold(&self) -> bool {
        self.near_threshold
    }

    pub fn contains(&self, v: &AlgebraVector<T>) -> bool {
        let rows: Vec<Vec<T>> = self.vectors.iter().map(|b| b.0.clone()).collect();
        T::in_span(&rows, &v.0)
    }

    /// Same subspace, regardless of the chosen basis.
    pub fn same_span(&self, other: &SubspaceBasis<T>) -> bool {
        self.rank() == other.rank() && other.vectors.iter().all(|v| self.contains(v))
    }

    fn extended(&self, extra: Vec<AlgebraVector<T>>) -> Self {
        let mut all = self.vectors.clone();
        all.extend(extra);
        let mut next = SubspaceBasis::span(self.dim, &all);
        next.near_threshold |= self.near_threshold;
        next
    }

    pub fn to_f64(&self) -> SubspaceBasis<f64> {
        SubspaceBasis {
            dim: self.dim,
            vectors: self.vectors.iter().map(|v| v.to_f64()).collect(),
            near_threshold: self.near_threshold,
        }
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.vectors.iter().map(|v| Value::Array(v.0.iter().map(|x| x.to_json()).collect())).collect())
    }
}

/// Columns of `sigma` are the forcing directions.
#[derive(Debug, Clone)]
pub struct ForcingSpec<T = f64> {
    dim: usize,
    columns: Vec<AlgebraVector<T>>,
}

impl<T: Scalar> ForcingSpec<T> {
    pub fn from_columns(dim: usize, columns: Vec<AlgebraVector<T>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyInput("forcing columns"));
        }
        for c in &columns {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: c.dim() });
            }
            if c.is_zero() {
                return Err(Error::InvalidConfig("forcing column is zero".into()));
            }
        }
        Ok(ForcingSpec { dim, columns })
    }

    /// Forcing along the listed basis vectors.
    pub fn basis_subset(dim: usize, indices: &[usize]) -> Result<Self> {
        Self::from_columns(dim, indices.iter().map(|&i| AlgebraVector::basis(dim, i)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        ForcingSpec { dim, columns: (0..dim).map(|i| AlgebraVector::basis(dim, i)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn columns(&self) -> &[AlgebraVector<T>] {
        &self.columns
    }

    /// `sigma` as `n x r` rows.
    pub fn sigma(&self) -> Vec<Vec<T>> {
        (0..self.dim).map(|i| self.columns.iter().map(|c| c.0[i].clone()).collect()).collect()
    }

    /// `h = sigma sigma^T`.
    pub fn diffusion_matrix(&self) -> Vec<Vec<T>> {
        let n = self.dim;
        let mut h = vec![vec![T::zero(); n]; n];
        for c in &self.columns {
            for i in 0..n {
                for j in 0..n {
                    h[i][j] = h[i][j].clone() + c.0[i].clone() * c.0[j].clone();
                }
            }
        }
        h
    }

    pub fn to_f64(&self) -> ForcingSpec<f64> {
        ForcingSpec { dim: self.dim, columns: self.columns.iter().map(|c| c.to_f64()).collect() }
    }
}

impl ForcingSpec<f64> {
    pub fn to_exact(&self) -> Option<ForcingSpec<Rational>> {
        Some(ForcingSpec { dim: self.dim, columns: self.columns.iter().map(|c| c.to_exact()).collect::<Option<_>>()? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Exact,
    Float,
    /// Float decision was near the cutoff and has been recomputed exactly.
    FloatRecheckedExact,
}

impl CheckMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckMode::Exact => "exact",
            CheckMode::Float => "float",
            CheckMode::FloatRecheckedExact => "float-rechecked-exact",
        }
    }
}

/// Outcome of a Hörmander check. The witness is the closure itself when the verdict is false.
#[derive(Debug, Clone)]
pub struct HullReport {
    pub check: &'static str,
    pub verdict: bool,
    /// Decision could not be certified (rank near the float cutoff without an exact fallback,
    /// or sampling did not stabilize).
    pub inconclusive: bool,
    pub dim: usize,
    pub closure: SubspaceBasis<f64>,
    /// Exact closure basis (reduced row echelon form) when computed in exact arithmetic.
    pub closure_exact: Option<SubspaceBasis<Rational>>,
    pub iterations: usize,
    pub mode: CheckMode,
    /// Closure re-verified by direct substitution.
    pub certificate_verified: bool,
    pub samples_used: Option<usize>,
    pub notes: Vec<String>,
}

impl HullReport {
    pub fn rank(&self) -> usize {
        self.closure.rank()
    }

    pub fn witness(&self) -> Option<&SubspaceBasis<f64>> {
        (!self.verdict).then_some(&self.closure)
    }

    pub fn to_json(&self) -> Value {
        let basis = match &self.closure_exact {
            Some(b) => b.to_json(),
            None => self.closure.to_json(),
        };
        json!({
            "check": self.check,
            "verdict": self.verdict,
            "inconclusive": self.inconclusive,
            "dim": self.dim,
            "rank": self.rank(),
            "closure_basis": basis,
            "witness": if self.verdict { Value::Null } else { basis.clone() },
            "iterations": self.iterations,
            "mode": self.mode.as_str(),
            "tolerance": if self.mode == CheckMode::Float { json!(RANK_TOLERANCE) } else { Value::Null },
            "certificate_verified": self.certificate_verified,
            "samples_used": self.samples_used,
            "notes": self.notes,
        })
    }
}

/// Result of a closure iteration.
#[derive(Debug, Clone)]
pub struct Closure<T = f64> {
    pub basis: SubspaceBasis<T>,
    /// Number of enlargement rounds, including the final one that found nothing new.
    pub iterations: usize,
    /// Rank after each round; non-decreasing.
    pub ranks: Vec<usize>,
}

fn close_under<T: Scalar>(
    start: SubspaceBasis<T>,
    mut products: impl FnMut(&[AlgebraVector<T>]) -> Vec<AlgebraVector<T>>,
) -> Closure<T> {
    let mut basis = start;
    let mut ranks = vec![basis.rank()];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let extra = products(basis.vectors());
        let next = basis.extended(extra);
        let grew = next.rank() > basis.rank();
        basis = next;
        ranks.push(basis.rank());
        if !grew || basis.is_full() {
            break;
        }
    }
    Closure { basis, iterations, ranks }
}

fn pairwise<T: Scalar>(vs: &[AlgebraVector<T>], op: impl Fn(&AlgebraVector<T>, &AlgebraVector<T>) -> AlgebraVector<T>, symmetric: bool) -> Vec<AlgebraVector<T>> {
    let mut out = Vec::new();
    for i in 0..vs.len() {
        let start = if symmetric { i } else { i + 1 };
        for j in start..vs.len() {
            let v = op(&vs[i], &vs[j]);
            if !v.is_zero() {
                out.push(v);
            }
        }
    }
    out
}

/// Smallest subspace containing `seed` and closed under `q(u, v)`.
pub fn q_invariant_closure<T: Scalar>(seed: &SubspaceBasis<T>, form: &ArnoldForm<T>) -> Closure<T> {
    close_under(seed.clone(), |vs| pairwise(vs, |u, v| form.q(u, v), true))
}

/// Smallest subalgebra containing `s`.
pub fn lie_generated_subalgebra<T: Scalar>(s: &SubspaceBasis<T>, alg: &LieAlgebraSpec<T>) -> Closure<T> {
    close_under(s.clone(), |vs| pairwise(vs, |u, v| alg.bracket_unchecked(u, v), false))
}

/// Smallest subalgebra containing all `s_i - s_0` and invariant under `ad s_0`.
pub fn p_hull<T: Scalar>(samples: &[AlgebraVector<T>], alg: &LieAlgebraSpec<T>) -> Result<Closure<T>> {
    let z0 = samples.first().ok_or(Error::EmptyInput("p-hull samples"))?;
    for s in samples {
        if s.dim() != alg.dim() {
            return Err(Error::DimensionMismatch { expected: alg.dim(), got: s.dim() });
        }
    }
    let diffs: Vec<AlgebraVector<T>> = samples[1..].iter().map(|s| s.sub(z0)).collect();
    let start = SubspaceBasis::span(alg.dim(), &diffs);
    Ok(close_under(start, |vs| {
        let mut out = pairwise(vs, |u, v| alg.bracket_unchecked(u, v), false);
        out.extend(vs.iter().map(|v| alg.bracket_unchecked(z0, v)).filter(|v| !v.is_zero()));
        out
    }))
}

/// Every `q(u, v)` with `u, v` in the basis lies in the span.
pub fn is_q_invariant<T: Scalar>(basis: &SubspaceBasis<T>, form: &ArnoldForm<T>) -> bool {
    pairwise(basis.vectors(), |u, v| form.q(u, v), true).iter().all(|w| basis.contains(w))
}

/// Closed under brackets and under `ad z0`.
pub fn is_ad_invariant_subalgebra<T: Scalar>(basis: &SubspaceBasis<T>, alg: &LieAlgebraSpec<T>, z0: Option<&AlgebraVector<T>>) -> bool {
    let vs = basis.vectors();
    pairwise(vs, |u, v| alg.bracket_unchecked(u, v), false).iter().all(|w| basis.contains(w))
        && z0.is_none_or(|z| vs.iter().all(|v| basis.contains(&alg.bracket_unchecked(z, v))))
}

/// Langevin Hörmander check in the arithmetic of `T`.
pub fn check_langevin_hormander<T: Scalar>(
    alg: &LieAlgebraSpec<T>,
    form: &ArnoldForm<T>,
    forcing: &ForcingSpec<T>,
) -> Result<HullReport> {
    if forcing.dim() != alg.dim() || form.dim() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: forcing.dim() });
    }
    let seed = SubspaceBasis::span(alg.dim(), forcing.columns());
    let closure = q_invariant_closure(&seed, form);
    let certificate_verified = is_q_invariant(&closure.basis, form) && seed.vectors().iter().all(|v| closure.basis.contains(v));
    Ok(report("langevin", closure, certificate_verified, None))
}

fn report<T: Scalar>(check: &'static str, closure: Closure<T>, certificate_verified: bool, samples_used: Option<usize>) -> HullReport {
    let basis = closure.basis;
    let near = !T::EXACT && basis.near_threshold();
    let mut notes = Vec::new();
    if near {
        notes.push(format!(
            "a singular value fell within {NEAR_THRESHOLD_FACTOR}x of the rank cutoff; float verdict not certified"
        ));
    }
    HullReport {
        check,
        verdict: basis.is_full(),
        inconclusive: near,
        dim: basis.ambient_dim(),
        closure: basis.to_f64(),
        closure_exact: exact_copy(&basis),
        iterations: closure.iterations,
        mode: if T::EXACT { CheckMode::Exact } else { CheckMode::Float },
        certificate_verified,
        samples_used,
        notes,
    }
}

fn exact_copy<T: Scalar>(basis: &SubspaceBasis<T>) -> Option<SubspaceBasis<Rational>> {
    if !T::EXACT {
        return None;
    }
    let vectors = basis
        .vectors()
        .iter()
        .map(|v| v.0.iter().map(Scalar::to_rational).collect::<Option<Vec<_>>>().map(AlgebraVector))
        .collect::<Option<Vec<_>>>()?;
    Some(SubspaceBasis { dim: basis.ambient_dim(), vectors, near_threshold: false })
}

/// Float check with an exact recomputation when any rank decision is near the cutoff.
///
/// `exact` supplies rational inputs for the fallback; without it a fragile decision is
/// reported as inconclusive.
pub fn check_langevin_auto(
    alg: &LieAlgebraSpec<f64>,
    forcing: &ForcingSpec<f64>,
    exact: Option<(&LieAlgebraSpec<Rational>, &ForcingSpec<Rational>)>,
    force_exact: bool,
) -> Result<HullReport> {
    let float_report = if force_exact {
        None
    } else {
        let form = arnold_form(alg)?;
        let r = check_langevin_hormander(alg, &form, forcing)?;
        if !r.inconclusive {
            return Ok(r);
        }
        Some(r)
    };
    match exact {
        Some((ealg, eforcing)) => {
            let form = arnold_form(ealg)?;
            let mut r = check_langevin_hormander(ealg, &form, eforcing)?;
            if float_report.is_some() {
                r.mode = CheckMode::FloatRecheckedExact;
                r.notes.push("float rank decision was near the cutoff; recomputed exactly".into());
            }
            Ok(r)
        }
        None => float_report.map_or_else(|| Err(Error::InvalidConfig("exact mode requires rational inputs".into())), Ok),
    }
}

/// Options for [`check_constrained_hormander`].
#[derive(Debug, Clone)]
pub struct SamplingOptions {
    pub initial_samples: usize,
    pub max_samples: usize,
    pub exact: bool,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions { initial_samples: 8, max_samples: 4096, exact: false }
    }
}

/// Constrained-diffusion Hörmander check on a chart of `Z`.
///
/// Samples come from a Halton sequence in the chart's unit cube. The sample count doubles
/// until the p-hull rank is unchanged over two consecutive doublings (or is full); past
/// `max_samples` the report is inconclusive.
pub fn check_constrained_hormander<C: ZChart + ?Sized>(
    chart: &C,
    alg: &LieAlgebraSpec<f64>,
    opts: &SamplingOptions,
) -> Result<HullReport> {
    if chart.ambient_dim() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: chart.ambient_dim() });
    }
    if opts.initial_samples == 0 {
        return Err(Error::EmptyInput("initial sample count"));
    }
    if !opts.exact {
        let sampler = |u: &[f64]| Some(AlgebraVector(chart.eval(&chart.sample_unit(u))));
        let r = sampled_hull(chart.param_dim(), alg, sampler, opts)?;
        if !r.closure.near_threshold() {
            return Ok(r);
        }
    }
    let ealg = alg.to_exact().ok_or_else(|| Error::InvalidConfig("algebra has non-finite entries".into()))?;
    let sampler = |u: &[f64]| chart.exact_point(u).map(AlgebraVector);
    if sampler(&vec![0.5; chart.param_dim()]).is_none() {
        return Err(Error::InvalidConfig(format!("chart {} has no exact points", chart.name())));
    }
    let mut r = sampled_hull(chart.param_dim(), &ealg, sampler, opts)?;
    if !opts.exact {
        r.mode = CheckMode::FloatRecheckedExact;
        r.notes.push("float rank decision was near the cutoff; recomputed exactly".into());
    }
    Ok(r)
}

fn sampled_hull<T: Scalar>(
    param_dim: usize,
    alg: &LieAlgebraSpec<T>,
    sampler: impl Fn(&[f64]) -> Option<AlgebraVector<T>>,
    opts: &SamplingOptions,
) -> Result<HullReport> {
    let mut halton = Halton::new(param_dim);
    let mut samples = Vec::new();
    let mut target = opts.initial_samples;
    let mut last_rank = None;
    let mut stable_rounds = 0;
    loop {
        while samples.len() < target {
            let u = halton.next_point();
            samples.push(sampler(&u).ok_or_else(|| Error::InvalidConfig("chart sample unavailable".into()))?);
        }
        let closure = p_hull(&samples, alg)?;
        let rank = closure.basis.rank();
        if last_rank == Some(rank) {
            stable_rounds += 1;
        } else {
            stable_rounds = 0;
        }
        last_rank = Some(rank);
        let done = closure.basis.is_full() || stable_rounds >= 2;
        if done || target * 2 > opts.max_samples {
            let verified = is_ad_invariant_subalgebra(&closure.basis, alg, samples.first())
                && samples.iter().all(|s| closure.basis.contains(&s.sub(&samples[0])));
            let mut r = report("constrained", closure, verified, Some(samples.len()));
            r.notes.push("chart assumed analytic; p-hull from finitely many samples (rank stable over two doublings)".into());
            if !done {
                r.inconclusive = true;
                r.notes.push(format!("rank did not stabilize within {} samples", opts.max_samples));
            }
            return Ok(r);
        }
        target *= 2;
    }
}

/// Halton low-discrepancy sequence in the unit cube, skipping the origin.
#[derive(Debug, Clone)]
pub struct Halton {
    bases: Vec<u64>,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
        Halton { bases: PRIMES[..dim.clamp(1, PRIMES.len())].to_vec(), index: 0 }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        self.bases.iter().map(|&b| radical_inverse(self.index, b)).collect()
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
