//! The Arnold form `q~` and its symmetrization `q`, which drive the Euler-Arnold equation
//! `dz/dt = q(z, z)`.
//!
//! `q~` is fixed by `<[x, y], z>_g = <q~(z, x), y>_g` for all `x, y, z`. Raising the free
//! index with `g^{-1}` gives
//!
//! ```text
//! q~^k_{pi} = g^{km} c^l_{im} g_{lp}        q~(z, x)^k = q~^k_{pi} z^p x^i
//! ```


use crate::algebra::{AlgebraVector, LieAlgebraSpec};
use crate::error::{Error, Result};
use crate::linalg::invert;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct ArnoldForm<T = f64> {
    dim: usize,
    /// `q~[k][p][i]`, flattened `k*n*n + p*n + i`.
    qtilde: Vec<T>,
    /// `q[k][i][j] = (q~[k][i][j] + q~[k][j][i]) / 2`.
    qsym: Vec<T>,
    qsym_nonzero: Vec<(usize, usize, usize, T)>,
}

/// Compute the Arnold form of `alg`. Fails if the metric is singular.
pub fn arnold_form<T: Scalar>(alg: &LieAlgebraSpec<T>) -> Result<ArnoldForm<T>> {
    let n = alg.dim();
    let ginv = invert(alg.metric()).ok_or(Error::SingularMetric)?;
    let g = alg.metric();
    // t[m][i][p] = c^l_{im} g_{lp}
    let mut t = vec![T::zero(); n * n * n];
    for (l, i, m, c) in alg.nonzero_constants() {
        for p in 0..n {
            if g[*l][p].is_zero() {
                continue;
            }
            let idx = m * n * n + i * n + p;
            t[idx] = t[idx].clone() + c.clone() * g[*l][p].clone();
        }
    }
    let mut qtilde = vec![T::zero(); n * n * n];
    for k in 0..n {
        for m in 0..n {
            if ginv[k][m].is_zero() {
                continue;
            }
            for i in 0..n {
                for p in 0..n {
                    let tv = &t[m * n * n + i * n + p];
                    if tv.is_zero() {
                        continue;
                    }
                    let idx = k * n * n + p * n + i;
                    qtilde[idx] = qtilde[idx].clone() + ginv[k][m].clone() * tv.clone();
                }
            }
        }
    }
    let half = T::from_ratio(1, 2);
    let mut qsym = vec![T::zero(); n * n * n];
    let mut qsym_nonzero = Vec::new();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let v = (qtilde[k * n * n + i * n + j].clone() + qtilde[k * n * n + j * n + i].clone())
                    * half.clone();
                if !v.is_zero() {
                    qsym_nonzero.push((k, i, j, v.clone()));
                }
                qsym[k * n * n + i * n + j] = v;
            }
        }
    }
    Ok(ArnoldForm { dim: n, qtilde, qsym, qsym_nonzero })
}

impl<T: Scalar> ArnoldForm<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `q~^k_{pi}`: coefficient of `z^p x^i` in `q~(z, x)^k`.
    pub fn qtilde_coeff(&self, k: usize, p: usize, i: usize) -> &T {
        &self.qtilde[k * self.dim * self.dim + p * self.dim + i]
    }

    pub fn qsym_coeff(&self, k: usize, i: usize, j: usize) -> &T {
        &self.qsym[k * self.dim * self.dim + i * self.dim + j]
    }

    /// `q` vanishes identically (abelian algebras, bi-invariant metrics).
    pub fn is_zero(&self) -> bool {
        self.qsym_nonzero.is_empty()
    }

    pub fn qtilde(&self, z: &AlgebraVector<T>, x: &AlgebraVector<T>) -> AlgebraVector<T> {
        let n = self.dim;
        let mut out = vec![T::zero(); n];
        for (k, o) in out.iter_mut().enumerate() {
            for p in 0..n {
                if z.0[p].is_zero() {
                    continue;
                }
                for i in 0..n {
                    let c = self.qtilde_coeff(k, p, i);
                    if !c.is_zero() && !x.0[i].is_zero() {
                        *o = o.clone() + c.clone() * z.0[p].clone() * x.0[i].clone();
                    }
                }
            }
        }
        AlgebraVector(out)
    }

    /// Symmetric form `q(x, y)`.
    pub fn q(&self, x: &AlgebraVector<T>, y: &AlgebraVector<T>) -> AlgebraVector<T> {
        let mut out = vec![T::zero(); self.dim];
        for (k, i, j, c) in &self.qsym_nonzero {
            if x.0[*i].is_zero() || y.0[*j].is_zero() {
                continue;
            }
            out[*k] = out[*k].clone() + c.clone() * x.0[*i].clone() * y.0[*j].clone();
        }
        AlgebraVector(out)
    }

    /// Largest violation of `<[x,y],z>_g = <q~(z,x),y>_g` over basis triples.
    pub fn defining_relation_residual(&self, alg: &LieAlgebraSpec<T>) -> f64 {
        let n = self.dim;
        let e = |i| AlgebraVector::<T>::basis(n, i);
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                let xy = alg.bracket_unchecked(&e(x), &e(y));
                for z in 0..n {
                    let lhs = alg.inner(&xy, &e(z));
                    let rhs = alg.inner(&self.qtilde(&e(z), &e(x)), &e(y));
                    worst = worst.max((lhs - rhs).magnitude());
                }
            }
        }
        worst
    }

    pub fn to_f64(&self) -> ArnoldForm<f64> {
        ArnoldForm {
            dim: self.dim,
            qtilde: self.qtilde.iter().map(|x| x.to_f64()).collect(),
            qsym: self.qsym.iter().map(|x| x.to_f64()).collect(),
            qsym_nonzero: self.qsym_nonzero.iter().map(|(k, i, j, c)| (*k, *i, *j, c.to_f64())).collect(),
        }
    }
}

/// Right-hand side of the Euler-Arnold equation, `q(z, z)`.
pub fn euler_arnold_rhs<T: Scalar>(z: &AlgebraVector<T>, form: &ArnoldForm<T>) -> Result<AlgebraVector<T>> {
    if z.dim() != form.dim {
        return Err(Error::DimensionMismatch { expected: form.dim, got: z.dim() });
    }
    Ok(form.q(z, z))
}

impl ArnoldForm<f64> {
    /// Allocation-free `out = q(z, z)` for the integrators.
    pub fn rhs_into(&self, z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, i, j, c) in &self.qsym_nonzero {
            out[*k] += c * z[*i] * z[*j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;
    use crate::scalar::Rational;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }

    #[test]
    fn so3_euclid_qtilde_is_cross_product() {
        let alg = Preset::So3Euclid.float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let z = AlgebraVector(vec![0.3, -1.2, 2.0]);
        let x = AlgebraVector(vec![1.5, 0.7, -0.4]);
        let y = AlgebraVector(vec![-0.2, 0.9, 1.1]);
        let qt = form.qtilde(&z, &x);
        let expected = cross(&z.0, &x.0);
        for k in 0..3 {
            assert!((qt.0[k] - expected[k]).abs() < 1e-15);
        }
        // triple product identity (x × y)·z = (z × x)·y
        let lhs: f64 = cross(&x.0, &y.0).iter().zip(&z.0).map(|(a, b)| a * b).sum();
        let rhs: f64 = expected.iter().zip(&y.0).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-14);
        assert!(form.is_zero());
    }

    #[test]
    fn rigid_body_matches_euler_top() {
        let inertia = [1.0, 2.0, 3.0];
        let alg = Preset::rigid(inertia).float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let [i1, i2, i3] = inertia;
        let a = [(i2 - i3) / i1, (i3 - i1) / i2, (i1 - i2) / i3];
        let z = [0.4, -1.3, 0.8];
        let got = euler_arnold_rhs(&AlgebraVector(z.to_vec()), &form).unwrap();
        let top = [a[0] * z[1] * z[2], a[1] * z[2] * z[0], a[2] * z[0] * z[1]];
        for k in 0..3 {
            assert!((got.0[k] - top[k]).abs() < 1e-14, "{got:?} vs {top:?}");
        }
    }

    #[test]
    fn rigid_body_rhs_example() {
        let alg = Preset::rigid([1.0, 2.0, 3.0]).exact().unwrap();
        let form = arnold_form(&alg).unwrap();
        let z = AlgebraVector(vec![Rational::from_i64(0), Rational::from_i64(1), Rational::from_i64(1)]);
        let rhs = euler_arnold_rhs(&z, &form).unwrap();
        assert_eq!(rhs, AlgebraVector(vec![Rational::from_i64(-1), Rational::zero(), Rational::zero()]));
    }

    #[test]
    fn abelian_form_vanishes() {
        let form = arnold_form(&Preset::Abelian(4).exact().unwrap()).unwrap();
        assert!(form.is_zero());
        assert!(euler_arnold_rhs(&AlgebraVector(vec![Rational::from_i64(3); 4]), &form).unwrap().is_zero());
    }

    #[test]
    fn defining_relation_holds_for_every_preset() {
        for preset in Preset::catalog() {
            let alg = preset.float().unwrap();
            let form = arnold_form(&alg).unwrap();
            assert!(form.defining_relation_residual(&alg) <= 1e-12, "{}", alg.name());
            let exact = preset.exact().unwrap();
            let eform = arnold_form(&exact).unwrap();
            assert_eq!(eform.defining_relation_residual(&exact), 0.0, "{}", exact.name());
            for k in 0..alg.dim() {
                for i in 0..alg.dim() {
                    for j in 0..alg.dim() {
                        assert_eq!(eform.qsym_coeff(k, i, j), eform.qsym_coeff(k, j, i));
                    }
                }
            }
        }
    }

    #[test]
    fn energy_orthogonality_on_random_vectors() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for preset in Preset::catalog() {
            let alg = preset.float().unwrap();
            let form = arnold_form(&alg).unwrap();
            for _ in 0..1000 {
                let z = AlgebraVector((0..alg.dim()).map(|_| rng.random_range(-1.0..1.0)).collect());
                let r = alg.inner(&form.q(&z, &z), &z);
                assert!(r.abs() <= 1e-12, "{}: {r}", alg.name());
            }
        }
    }

    #[test]
    fn singular_metric_is_rejected() {
        let alg = LieAlgebraSpec::<f64>::raw("degenerate", 2, &[], vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(arnold_form(&alg), Err(Error::SingularMetric)));
    }

    proptest! {
        #[test]
        fn q_is_bilinear_and_symmetric(
            a in prop::collection::vec(-3.0f64..3.0, 3),
            b in prop::collection::vec(-3.0f64..3.0, 3),
            s in -2.0f64..2.0,
        ) {
            let alg = Preset::rigid([1.0, 2.5, 4.0]).float().unwrap();
            let form = arnold_form(&alg).unwrap();
            let x = AlgebraVector(a);
            let y = AlgebraVector(b);
            let qxy = form.q(&x, &y);
            let qyx = form.q(&y, &x);
            let q_sx = form.q(&x.scale(&s), &y);
            for k in 0..3 {
                prop_assert!((qxy.0[k] - qyx.0[k]).abs() < 1e-12);
                prop_assert!((q_sx.0[k] - s * qxy.0[k]).abs() < 1e-11);
            }
        }
    }
}
