//! Span reduction and small dense solves over [`Scalar`] fields.

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::scalar::{Rational, Scalar};

/// Relative singular-value cutoff used for float-mode rank decisions.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A singular value within this factor of the cutoff marks the decision as fragile.
pub const NEAR_THRESHOLD_FACTOR: f64 = 10.0;

/// Result of reducing a family of vectors to a basis of their span.
#[derive(Debug, Clone)]
pub struct SpanReduction<T> {
    /// Float mode: orthonormal rows. Exact mode: reduced row echelon rows.
    pub basis: Vec<Vec<T>>,
    /// Some singular value fell within [`NEAR_THRESHOLD_FACTOR`] of the cutoff.
    pub near_threshold: bool,
}

pub(crate) fn float_span(rows: &[Vec<f64>]) -> SpanReduction<f64> {
    let rows: Vec<&Vec<f64>> = rows.iter().filter(|r| r.iter().any(|x| *x != 0.0)).collect();
    let Some(first) = rows.first() else {
        return SpanReduction { basis: Vec::new(), near_threshold: false };
    };
    let n = first.len();
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return SpanReduction { basis: Vec::new(), near_threshold: false };
    }
    let cutoff = RANK_TOLERANCE * smax;
    let mut basis = Vec::new();
    let mut near_threshold = false;
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > cutoff / NEAR_THRESHOLD_FACTOR && *s < cutoff * NEAR_THRESHOLD_FACTOR {
            near_threshold = true;
        }
        if *s > cutoff {
            basis.push(v_t.row(k).iter().cloned().collect());
        }
    }
    SpanReduction { basis, near_threshold }
}

pub(crate) fn float_in_span(basis: &[Vec<f64>], v: &[f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut residual = v.to_vec();
    for b in basis {
        let c: f64 = b.iter().zip(v).map(|(x, y)| x * y).sum();
        for (r, x) in residual.iter_mut().zip(b) {
            *r -= c * x;
        }
    }
    let rnorm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
    rnorm <= 1e-9 * norm.max(1.0)
}

/// Reduced row echelon form of the given rows, zero rows dropped.
pub(crate) fn exact_span(rows: &[Vec<Rational>]) -> SpanReduction<Rational> {
    SpanReduction { basis: rref(rows.to_vec()), near_threshold: false }
}

fn rref(mut rows: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    let Some(n) = rows.first().map(|r| r.len()) else {
        return rows;
    };
    let mut pivot_row = 0;
    for col in 0..n {
        if pivot_row == rows.len() {
            break;
        }
        let Some(p) = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, p);
        let inv = Rational::from_i64(1) / rows[pivot_row][col].clone();
        for x in rows[pivot_row].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        let pivot = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == pivot_row || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot) {
                if !p.is_zero() {
                    *x = x.clone() - factor.clone() * p.clone();
                }
            }
        }
        pivot_row += 1;
    }
    rows.truncate(pivot_row);
    rows
}

pub(crate) fn exact_in_span(basis: &[Vec<Rational>], v: &[Rational]) -> bool {
    // `basis` is in reduced row echelon form: eliminate along its pivots.
    let mut residual = v.to_vec();
    for row in basis {
        let Some(col) = row.iter().position(|x| !x.is_zero()) else {
            continue;
        };
        if residual[col].is_zero() {
            continue;
        }
        let factor = residual[col].clone() / row[col].clone();
        for (r, x) in residual.iter_mut().zip(row) {
            *r = r.clone() - factor.clone() * x.clone();
        }
    }
    residual.iter().all(|x| x.is_zero())
}

/// Inverse of a square matrix by Gauss-Jordan elimination with magnitude pivoting.
///
/// Returns `None` when the matrix is singular (exactly, or below `1e-13` relative in float mode).
pub fn invert<T: Scalar>(m: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = m.len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter().map(|x| x.magnitude()))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut inv: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| {
            a[x][col].magnitude().total_cmp(&a[y][col].magnitude())
        })?;
        let singular = if T::EXACT {
            a[p][col].is_zero()
        } else {
            a[p][col].magnitude() <= 1e-13 * scale
        };
        if singular {
            return None;
        }
        a.swap(col, p);
        inv.swap(col, p);
        let pivot = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].clone() / pivot.clone();
            inv[col][j] = inv[col][j].clone() / pivot.clone();
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].clone() - f.clone() * a[col][j].clone();
                inv[r][j] = inv[r][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Some(inv)
}
