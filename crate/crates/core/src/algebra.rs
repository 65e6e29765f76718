//! Finite-dimensional Lie algebras given by structure constants and a metric.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::Representation;
use crate::scalar::{rational_from_f64, Rational, Scalar};

/// Contravariant coordinates `z^k` of an algebra element in the frame `e_1..e_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AlgebraVector<T = f64>(pub Vec<T>);

impl<T: Scalar> AlgebraVector<T> {
    pub fn zeros(dim: usize) -> Self {
        AlgebraVector(vec![T::zero(); dim])
    }

    /// The basis vector `e_{index+1}` (indices are zero-based in code).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = T::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        AlgebraVector(self.0.iter().zip(&other.0).map(|(a, b)| a.clone() + b.clone()).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        AlgebraVector(self.0.iter().zip(&other.0).map(|(a, b)| a.clone() - b.clone()).collect())
    }

    pub fn scale(&self, s: &T) -> Self {
        AlgebraVector(self.0.iter().map(|a| a.clone() * s.clone()).collect())
    }

    pub fn to_f64(&self) -> AlgebraVector<f64> {
        AlgebraVector(self.0.iter().map(|x| x.to_f64()).collect())
    }
}

impl AlgebraVector<f64> {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn to_exact(&self) -> Option<AlgebraVector<Rational>> {
        self.0.iter().map(|x| rational_from_f64(*x)).collect::<Option<Vec<_>>>().map(AlgebraVector)
    }
}

impl<T> From<Vec<T>> for AlgebraVector<T> {
    fn from(v: Vec<T>) -> Self {
        AlgebraVector(v)
    }
}

/// A Lie algebra `[e_i, e_j] = c^k_ij e_k` with a left-invariant metric `g_ij`.
#[derive(Debug, Clone)]
pub struct LieAlgebraSpec<T = f64> {
    name: String,
    dim: usize,
    /// Dense `c[k][i][j]`, flattened as `k*n*n + i*n + j`.
    constants: Vec<T>,
    /// Nonzero `(k, i, j, c^k_ij)` entries.
    nonzero: Vec<(usize, usize, usize, T)>,
    metric: Vec<Vec<T>>,
    representation: Option<Arc<Representation>>,
}

impl<T: Scalar> LieAlgebraSpec<T> {
    /// Build and validate: antisymmetry, Jacobi identity, symmetric positive-definite metric.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        brackets: &[(usize, usize, usize, T)],
        metric: Vec<Vec<T>>,
    ) -> Result<Self> {
        let alg = Self::raw(name, dim, brackets, metric)?;
        alg.validate()?;
        Ok(alg)
    }

    /// Build without checking the Lie algebra axioms.
    ///
    /// `brackets` lists `(i, j, k, c^k_ij)` with zero-based indices; the antisymmetric
    /// partner `c^k_ji = -c^k_ij` is filled in unless given explicitly.
    pub fn raw(
        name: impl Into<String>,
        dim: usize,
        brackets: &[(usize, usize, usize, T)],
        metric: Vec<Vec<T>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidAlgebra("dimension must be positive".into()));
        }
        if metric.len() != dim || metric.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidAlgebra(format!("metric must be {dim}x{dim}")));
        }
        let mut constants = vec![T::zero(); dim * dim * dim];
        let mut explicit = vec![false; dim * dim * dim];
        let idx = |k: usize, i: usize, j: usize| k * dim * dim + i * dim + j;
        for (i, j, k, v) in brackets {
            let (i, j, k) = (*i, *j, *k);
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::InvalidAlgebra(format!(
                    "bracket index ({}, {}, {}) out of range for dimension {dim}",
                    i + 1,
                    j + 1,
                    k + 1
                )));
            }
            constants[idx(k, i, j)] = v.clone();
            explicit[idx(k, i, j)] = true;
            if !explicit[idx(k, j, i)] {
                constants[idx(k, j, i)] = -v.clone();
            }
        }
        Ok(Self::from_dense(name.into(), dim, constants, metric))
    }

    fn from_dense(name: String, dim: usize, constants: Vec<T>, metric: Vec<Vec<T>>) -> Self {
        let mut nonzero = Vec::new();
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    let c = &constants[k * dim * dim + i * dim + j];
                    if !c.is_zero() {
                        nonzero.push((k, i, j, c.clone()));
                    }
                }
            }
        }
        LieAlgebraSpec { name, dim, constants, nonzero, metric, representation: None }
    }

    pub fn with_representation(mut self, rep: Representation) -> Result<Self> {
        rep.check_against(&self.to_f64())?;
        self.representation = Some(Arc::new(rep));
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        let tol = if T::EXACT { 0.0 } else { 1e-14 };
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let s = self.c(k, i, j).clone() + self.c(k, j, i).clone();
                    if s.magnitude() > tol {
                        return Err(Error::InvalidAlgebra(format!(
                            "structure constants not antisymmetric at c^{}_{}{}",
                            k + 1,
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        let jac = self.jacobi_residual();
        let jac_tol = if T::EXACT { 0.0 } else { 1e-12 };
        if jac > jac_tol {
            return Err(Error::InvalidAlgebra(format!("Jacobi identity fails (residual {jac:.3e})")));
        }
        for i in 0..n {
            for j in 0..i {
                let d = self.metric[i][j].clone() - self.metric[j][i].clone();
                if d.magnitude() > tol {
                    return Err(Error::InvalidAlgebra("metric is not symmetric".into()));
                }
            }
        }
        if !positive_definite(&self.metric) {
            return Err(Error::SingularMetric);
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Structure constant `c^k_ij` (zero-based).
    pub fn c(&self, k: usize, i: usize, j: usize) -> &T {
        &self.constants[k * self.dim * self.dim + i * self.dim + j]
    }

    pub fn nonzero_constants(&self) -> &[(usize, usize, usize, T)] {
        &self.nonzero
    }

    pub fn metric(&self) -> &[Vec<T>] {
        &self.metric
    }

    pub fn representation(&self) -> Option<&Representation> {
        self.representation.as_deref()
    }

    pub fn is_abelian(&self) -> bool {
        self.nonzero.is_empty()
    }

    fn check_dim(&self, v: &AlgebraVector<T>) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.dim() });
        }
        Ok(())
    }

    /// `[x, y]^k = c^k_ij x^i y^j`.
    pub fn bracket(&self, x: &AlgebraVector<T>, y: &AlgebraVector<T>) -> Result<AlgebraVector<T>> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(self.bracket_unchecked(x, y))
    }

    pub(crate) fn bracket_unchecked(&self, x: &AlgebraVector<T>, y: &AlgebraVector<T>) -> AlgebraVector<T> {
        let mut out = vec![T::zero(); self.dim];
        for (k, i, j, c) in &self.nonzero {
            if x.0[*i].is_zero() || y.0[*j].is_zero() {
                continue;
            }
            out[*k] = out[*k].clone() + c.clone() * x.0[*i].clone() * y.0[*j].clone();
        }
        AlgebraVector(out)
    }

    /// Largest component of the cyclic sum `[[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j]`.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let e = |i| AlgebraVector::<T>::basis(n, i);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let eij = self.bracket_unchecked(&e(i), &e(j));
                for k in 0..n {
                    let ejk = self.bracket_unchecked(&e(j), &e(k));
                    let eki = self.bracket_unchecked(&e(k), &e(i));
                    let s = self
                        .bracket_unchecked(&eij, &e(k))
                        .add(&self.bracket_unchecked(&ejk, &e(i)))
                        .add(&self.bracket_unchecked(&eki, &e(j)));
                    for v in &s.0 {
                        worst = worst.max(v.magnitude());
                    }
                }
            }
        }
        worst
    }

    /// Matrix of `y -> [x, y]`, as rows: `A[k][j] = c^k_ij x^i`.
    pub fn ad_matrix(&self, x: &AlgebraVector<T>) -> Result<Vec<Vec<T>>> {
        self.check_dim(x)?;
        let n = self.dim;
        let mut a = vec![vec![T::zero(); n]; n];
        for (k, i, j, c) in &self.nonzero {
            a[*k][*j] = a[*k][*j].clone() + c.clone() * x.0[*i].clone();
        }
        Ok(a)
    }

    /// `true` iff every `ad e_j` is trace-free, i.e. `c^k_kj = 0` summed over `k`.
    pub fn unimodularity_check(&self) -> bool {
        let n = self.dim;
        (0..n).all(|j| {
            let tr = (0..n).fold(T::zero(), |acc, k| acc + self.c(k, k, j).clone());
            if T::EXACT {
                tr.is_zero()
            } else {
                tr.magnitude() <= 1e-12
            }
        })
    }

    /// Lowered index `y_k = g_kl z^l`.
    pub fn lower(&self, z: &AlgebraVector<T>) -> AlgebraVector<T> {
        AlgebraVector(
            self.metric
                .iter()
                .map(|row| row.iter().zip(&z.0).fold(T::zero(), |acc, (g, x)| acc + g.clone() * x.clone()))
                .collect(),
        )
    }

    /// `<x, y>_g`.
    pub fn inner(&self, x: &AlgebraVector<T>, y: &AlgebraVector<T>) -> T {
        self.lower(x).0.iter().zip(&y.0).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    /// Kinetic energy `1/2 g_ij z^i z^j`.
    pub fn energy(&self, z: &AlgebraVector<T>) -> Result<T> {
        self.check_dim(z)?;
        Ok(self.inner(z, z) * T::from_ratio(1, 2))
    }

    pub fn to_f64(&self) -> LieAlgebraSpec<f64> {
        LieAlgebraSpec {
            name: self.name.clone(),
            dim: self.dim,
            constants: self.constants.iter().map(|x| x.to_f64()).collect(),
            nonzero: self.nonzero.iter().map(|(k, i, j, c)| (*k, *i, *j, c.to_f64())).collect(),
            metric: self.metric.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect(),
            representation: self.representation.clone(),
        }
    }
}

impl LieAlgebraSpec<f64> {
    /// Exact twin holding the binary values of the float data.
    pub fn to_exact(&self) -> Option<LieAlgebraSpec<Rational>> {
        let conv = |x: &f64| rational_from_f64(*x);
        let constants = self.constants.iter().map(conv).collect::<Option<Vec<_>>>()?;
        let metric = self
            .metric
            .iter()
            .map(|r| r.iter().map(conv).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()?;
        let mut alg = LieAlgebraSpec::from_dense(self.name.clone(), self.dim, constants, metric);
        alg.representation = self.representation.clone();
        Some(alg)
    }

    pub fn metric_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| self.metric[i][j])
    }
}

/// Positive definiteness by symmetric elimination: all pivots must be positive.
fn positive_definite<T: Scalar>(m: &[Vec<T>]) -> bool {
    let n = m.len();
    let scale = m.iter().flat_map(|r| r.iter().map(|x| x.magnitude())).fold(0.0, f64::max);
    let mut a = m.to_vec();
    for p in 0..n {
        let pivot = a[p][p].clone();
        let ok = if T::EXACT {
            pivot > T::zero()
        } else {
            pivot.to_f64() > 1e-14 * scale
        };
        if !ok {
            return false;
        }
        for r in p + 1..n {
            let f = a[r][p].clone() / pivot.clone();
            for c in p..n {
                a[r][c] = a[r][c].clone() - f.clone() * a[p][c].clone();
            }
        }
    }
    true
}
