//! Matrix groups realizing the presets: exponential map, Ad-action and the moment map.

use nalgebra::{DMatrix, Matrix3};
use serde::Serialize;

use crate::algebra::{AlgebraVector, LieAlgebraSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepKind {
    /// Abelian group `R^n` acting by translation.
    Translation,
    /// SO(3) in the hat-map basis.
    So3,
    /// SO(3) x SO(3) as block-diagonal 6x6 matrices.
    So3Pair,
    /// Nilpotent matrices: the exponential series terminates.
    Nilpotent,
    General,
}

/// A faithful matrix representation `e_i -> E_i`.
#[derive(Debug, Clone)]
pub struct Representation {
    kind: RepKind,
    size: usize,
    generators: Vec<DMatrix<f64>>,
    /// Maps a row-major flattened matrix to algebra coordinates (pseudo-inverse).
    decomposer: DMatrix<f64>,
}

impl Representation {
    pub fn translation(dim: usize) -> Self {
        Representation {
            kind: RepKind::Translation,
            size: dim,
            generators: Vec::new(),
            decomposer: DMatrix::identity(dim, dim),
        }
    }

    pub fn matrices(kind: RepKind, generators: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::InvalidAlgebra("representation needs at least one generator".into()));
        };
        let size = first.nrows();
        if generators.iter().any(|g| g.nrows() != size || g.ncols() != size) {
            return Err(Error::InvalidAlgebra("generators must be square and of equal size".into()));
        }
        let n = generators.len();
        let flat = DMatrix::from_fn(size * size, n, |r, c| generators[c][(r / size, r % size)]);
        let svd = flat.clone().svd(true, true);
        let rank = svd.rank(1e-12 * svd.singular_values.max());
        if rank < n {
            return Err(Error::InvalidAlgebra("representation is not faithful".into()));
        }
        let decomposer = svd
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::InvalidAlgebra(e.to_string()))?;
        Ok(Representation { kind, size, generators, decomposer })
    }

    pub fn kind(&self) -> RepKind {
        self.kind
    }

    /// Matrix size `d`, or `n` for translations.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    /// Verify `[E_i, E_j] = c^k_ij E_k`.
    pub(crate) fn check_against(&self, alg: &LieAlgebraSpec<f64>) -> Result<()> {
        if self.kind == RepKind::Translation {
            if !alg.is_abelian() || self.size != alg.dim() {
                return Err(Error::InvalidAlgebra("translation representation needs an abelian algebra".into()));
            }
            return Ok(());
        }
        let n = alg.dim();
        if self.generators.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.generators.len() });
        }
        for i in 0..n {
            for j in 0..n {
                let comm = &self.generators[i] * &self.generators[j] - &self.generators[j] * &self.generators[i];
                let mut expected = DMatrix::zeros(self.size, self.size);
                for k in 0..n {
                    expected += &self.generators[k] * *alg.c(k, i, j);
                }
                if (comm - expected).amax() > 1e-12 {
                    return Err(Error::InvalidAlgebra(format!(
                        "representation does not respect [e{}, e{}]",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// `sum_i x^i E_i`.
    pub fn matrix_of(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (g, xi) in self.generators.iter().zip(x) {
            if *xi != 0.0 {
                m += g * *xi;
            }
        }
        m
    }

    /// Algebra coordinates of a matrix in the span of the generators.
    pub fn coords_of(&self, m: &DMatrix<f64>) -> Vec<f64> {
        let flat = DMatrix::from_fn(self.size * self.size, 1, |r, _| m[(r / self.size, r % self.size)]);
        (&self.decomposer * flat).iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Translation(Vec<f64>),
    Matrix(DMatrix<f64>),
}

impl GroupElement {
    pub fn identity(rep: &Representation) -> Self {
        match rep.kind {
            RepKind::Translation => GroupElement::Translation(vec![0.0; rep.size]),
            _ => GroupElement::Matrix(DMatrix::identity(rep.size, rep.size)),
        }
    }

    /// Group coordinates: translation vector, or row-major matrix entries.
    pub fn flatten(&self) -> Vec<f64> {
        match self {
            GroupElement::Translation(v) => v.clone(),
            GroupElement::Matrix(m) => {
                let d = m.nrows();
                (0..d * d).map(|r| m[(r / d, r % d)]).collect()
            }
        }
    }

    pub fn from_flat(rep: &Representation, flat: &[f64]) -> Self {
        match rep.kind {
            RepKind::Translation => GroupElement::Translation(flat.to_vec()),
            _ => GroupElement::Matrix(DMatrix::from_row_slice(rep.size, rep.size, flat)),
        }
    }

    /// `self * other`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        match (self, other) {
            (GroupElement::Translation(a), GroupElement::Translation(b)) => {
                GroupElement::Translation(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupElement::Matrix(a), GroupElement::Matrix(b)) => GroupElement::Matrix(a * b),
            _ => panic!("cannot compose elements of different groups"),
        }
    }

    /// Largest entry of `a^T a - I` over the orthogonal blocks (zero for other kinds).
    pub fn orthogonality_residual(&self, rep: &Representation) -> f64 {
        match (self, rep.kind) {
            (GroupElement::Matrix(m), RepKind::So3 | RepKind::So3Pair) => {
                let d = m.nrows();
                (m.transpose() * m - DMatrix::<f64>::identity(d, d)).amax()
            }
            _ => 0.0,
        }
    }

    /// Project orthogonal blocks back onto the group (polar factor).
    pub fn reproject(&mut self, rep: &Representation) {
        if let GroupElement::Matrix(m) = self {
            match rep.kind {
                RepKind::So3 => {
                    let mut r = Matrix3::from_fn(|i, j| m[(i, j)]);
                    project_so3(&mut r);
                    m.copy_from(&r);
                }
                RepKind::So3Pair => {
                    for off in [0, 3] {
                        let mut r = Matrix3::from_fn(|i, j| m[(off + i, off + j)]);
                        project_so3(&mut r);
                        m.view_mut((off, off), (3, 3)).copy_from(&r);
                    }
                }
                _ => {}
            }
        }
    }
}

/// Exponential of `x` in the representation of `alg` (translation by `x` when abelian).
pub fn group_exp(x: &AlgebraVector<f64>, alg: &LieAlgebraSpec<f64>) -> Result<GroupElement> {
    let rep = alg.representation().ok_or_else(|| Error::NoRepresentation(alg.name().to_string()))?;
    if x.dim() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: x.dim() });
    }
    Ok(exp_in(rep, &x.0))
}

pub(crate) fn exp_in(rep: &Representation, x: &[f64]) -> GroupElement {
    match rep.kind {
        RepKind::Translation => GroupElement::Translation(x.to_vec()),
        RepKind::So3 => {
            let r = rodrigues([x[0], x[1], x[2]]);
            GroupElement::Matrix(DMatrix::from_fn(3, 3, |i, j| r[(i, j)]))
        }
        RepKind::So3Pair => {
            let mut m = DMatrix::zeros(6, 6);
            let a = rodrigues([x[0], x[1], x[2]]);
            let b = rodrigues([x[3], x[4], x[5]]);
            m.view_mut((0, 0), (3, 3)).copy_from(&a);
            m.view_mut((3, 3), (3, 3)).copy_from(&b);
            GroupElement::Matrix(m)
        }
        RepKind::Nilpotent => {
            let xm = rep.matrix_of(x);
            let d = rep.size;
            let mut term = DMatrix::identity(d, d);
            let mut sum = term.clone();
            for k in 1..=d {
                term = &term * &xm / k as f64;
                if term.amax() == 0.0 {
                    break;
                }
                sum += &term;
            }
            GroupElement::Matrix(sum)
        }
        RepKind::General => GroupElement::Matrix(rep.matrix_of(x).exp()),
    }
}

/// Rotation `exp(hat(w))` by the Rodrigues formula.
pub fn rodrigues(w: [f64; 3]) -> Matrix3<f64> {
    let theta2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let k = hat(w);
    let (a, b) = if theta2 < 1e-8 {
        // Taylor coefficients of sin(t)/t and (1 - cos t)/t^2
        (1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0, 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * a + k * k * b
}

pub fn hat(w: [f64; 3]) -> Matrix3<f64> {
    Matrix3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0)
}

/// Newton iteration `R <- (R + R^{-T}) / 2` for the orthogonal polar factor.
pub fn project_so3(r: &mut Matrix3<f64>) {
    for _ in 0..3 {
        let Some(inv) = r.try_inverse() else { return };
        let next = (*r + inv.transpose()) * 0.5;
        let delta = (next - *r).amax();
        *r = next;
        if delta < 1e-15 {
            break;
        }
    }
}

/// Moment map `M(a, y) = (Ad a^{-1})^* y` with `y = g z`, in dual coordinates.
///
/// `M_k = y_j [a^{-1} E_k a]^j`.
pub fn momentum(a: &GroupElement, z: &AlgebraVector<f64>, alg: &LieAlgebraSpec<f64>) -> Result<AlgebraVector<f64>> {
    let rep = alg.representation().ok_or_else(|| Error::NoRepresentation(alg.name().to_string()))?;
    if z.dim() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: z.dim() });
    }
    let y = alg.lower(z);
    Ok(AlgebraVector(momentum_in(rep, a, &y.0)))
}

pub(crate) fn momentum_in(rep: &Representation, a: &GroupElement, y: &[f64]) -> Vec<f64> {
    match a {
        GroupElement::Translation(_) => y.to_vec(),
        GroupElement::Matrix(m) => {
            if matches!(rep.kind, RepKind::So3) {
                // a^{-1} hat(e_k) a = hat(a^T e_k), so M = a y
                let r = Matrix3::from_fn(|i, j| m[(i, j)]);
                let v = r * nalgebra::Vector3::new(y[0], y[1], y[2]);
                return vec![v[0], v[1], v[2]];
            }
            let inv = m.clone().try_inverse().expect("group elements are invertible");
            rep.generators
                .iter()
                .map(|e| {
                    let c = rep.coords_of(&(&inv * e * m));
                    c.iter().zip(y).map(|(a, b)| a * b).sum()
                })
                .collect()
        }
    }
}
