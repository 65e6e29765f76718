//! Named algebras with exact structure constants and faithful matrix representations.

use std::fmt;

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::algebra::LieAlgebraSpec;
use crate::error::{Error, Result};
use crate::group::{hat, RepKind, Representation};
use crate::scalar::{format_rational, parse_rational, rational_from_f64, Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `R^n` with the Euclidean metric.
    Abelian(usize),
    /// `[e1, e2] = e3`, identity metric.
    Heisenberg3,
    /// so(3) with `g = I`.
    So3Euclid,
    /// so(3) with `g = diag(I1, I2, I3)`: the free rigid body.
    So3Rigid([Rational; 3]),
    /// `[e1, e2] = e2`, identity metric. Not unimodular.
    Affine2,
    /// so(3) + so(3) with `g = diag(I1, I2, I3, J1, J2, J3)`.
    So3PlusSo3([Rational; 6]),
}

impl Preset {
    pub fn rigid(inertia: [f64; 3]) -> Preset {
        Preset::So3Rigid(inertia.map(|x| rational_from_f64(x).expect("finite inertia")))
    }

    pub fn so3_pair(inertia: [f64; 6]) -> Preset {
        Preset::So3PlusSo3(inertia.map(|x| rational_from_f64(x).expect("finite inertia")))
    }

    /// `so3_plus_so3` with both summands carrying the rigid-body metric diag(1, 2, 3).
    pub fn so3_pair_default() -> Preset {
        Preset::so3_pair([1.0, 2.0, 3.0, 1.0, 2.0, 3.0])
    }

    /// One instance of every preset family, all of dimension at most 6.
    pub fn catalog() -> Vec<Preset> {
        vec![
            Preset::Abelian(1),
            Preset::Abelian(2),
            Preset::Abelian(3),
            Preset::Abelian(4),
            Preset::Heisenberg3,
            Preset::So3Euclid,
            Preset::rigid([1.0, 2.0, 3.0]),
            Preset::Affine2,
            Preset::so3_pair_default(),
        ]
    }

    /// Parse names such as `abelian(3)`, `so3_rigid(1, 2, 3)` or `so3_plus_so3`.
    pub fn parse(text: &str) -> Result<Preset> {
        let unknown = || Error::UnknownPreset(text.to_string());
        let text = text.trim();
        let (name, args) = match text.split_once('(') {
            Some((name, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(unknown)?;
                let args: Vec<&str> = inner.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
                (name.trim().to_ascii_lowercase(), args)
            }
            None => (text.to_ascii_lowercase(), Vec::new()),
        };
        let rationals = |expected: usize| -> Result<Vec<Rational>> {
            if args.len() != expected {
                return Err(unknown());
            }
            let vals = args.iter().map(|a| parse_rational(a)).collect::<Option<Vec<_>>>().ok_or_else(unknown)?;
            if vals.iter().any(|v| *v <= Rational::zero()) {
                return Err(Error::InvalidAlgebra(format!("{text}: moments of inertia must be positive")));
            }
            Ok(vals)
        };
        match (name.as_str(), args.len()) {
            ("abelian", 1) => {
                let n: usize = args[0].parse().map_err(|_| unknown())?;
                if n == 0 {
                    return Err(unknown());
                }
                Ok(Preset::Abelian(n))
            }
            ("heisenberg3", 0) => Ok(Preset::Heisenberg3),
            ("so3_euclid", 0) => Ok(Preset::So3Euclid),
            ("so3_rigid", _) => {
                let v = rationals(3)?;
                Ok(Preset::So3Rigid([v[0].clone(), v[1].clone(), v[2].clone()]))
            }
            ("affine2", 0) => Ok(Preset::Affine2),
            ("so3_plus_so3", 0) => Ok(Preset::so3_pair_default()),
            ("so3_plus_so3", _) => {
                let v = rationals(6)?;
                Ok(Preset::So3PlusSo3(std::array::from_fn(|i| v[i].clone())))
            }
            _ => Err(unknown()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Preset::Abelian(n) => *n,
            Preset::Affine2 => 2,
            Preset::So3PlusSo3(_) => 6,
            _ => 3,
        }
    }

    pub fn exact(&self) -> Result<LieAlgebraSpec<Rational>> {
        let one = || Rational::from_i64(1);
        let n = self.dim();
        let so3_brackets = |off: usize| {
            vec![(off, off + 1, off + 2, one()), (off + 1, off + 2, off, one()), (off + 2, off, off + 1, one())]
        };
        let (brackets, metric_diag, rep) = match self {
            Preset::Abelian(n) => (Vec::new(), vec![one(); *n], Representation::translation(*n)),
            Preset::Heisenberg3 => {
                let gens = vec![unit(3, 0, 1), unit(3, 1, 2), unit(3, 0, 2)];
                (vec![(0, 1, 2, one())], vec![one(); 3], Representation::matrices(RepKind::Nilpotent, gens)?)
            }
            Preset::So3Euclid => (so3_brackets(0), vec![one(); 3], so3_rep()?),
            Preset::So3Rigid(inertia) => (so3_brackets(0), inertia.to_vec(), so3_rep()?),
            Preset::Affine2 => {
                let gens = vec![unit(2, 0, 0), unit(2, 0, 1)];
                (vec![(0, 1, 1, one())], vec![one(); 2], Representation::matrices(RepKind::General, gens)?)
            }
            Preset::So3PlusSo3(inertia) => {
                let mut b = so3_brackets(0);
                b.extend(so3_brackets(3));
                let gens = (0..6)
                    .map(|i| {
                        let mut m = DMatrix::zeros(6, 6);
                        let off = if i < 3 { 0 } else { 3 };
                        let mut w = [0.0; 3];
                        w[i % 3] = 1.0;
                        m.view_mut((off, off), (3, 3)).copy_from(&hat(w));
                        m
                    })
                    .collect();
                (b, inertia.to_vec(), Representation::matrices(RepKind::So3Pair, gens)?)
            }
        };
        let metric = (0..n)
            .map(|i| (0..n).map(|j| if i == j { metric_diag[i].clone() } else { Rational::zero() }).collect())
            .collect();
        LieAlgebraSpec::new(self.to_string(), n, &brackets, metric)?.with_representation(rep)
    }

    pub fn float(&self) -> Result<LieAlgebraSpec<f64>> {
        Ok(self.exact()?.to_f64())
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Rational]| v.iter().map(format_rational).collect::<Vec<_>>().join(",");
        match self {
            Preset::Abelian(n) => write!(f, "abelian({n})"),
            Preset::Heisenberg3 => write!(f, "heisenberg3"),
            Preset::So3Euclid => write!(f, "so3_euclid"),
            Preset::So3Rigid(i) => write!(f, "so3_rigid({})", join(i)),
            Preset::Affine2 => write!(f, "affine2"),
            Preset::So3PlusSo3(i) => write!(f, "so3_plus_so3({})", join(i)),
        }
    }
}

fn unit(d: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    m[(i, j)] = 1.0;
    m
}

fn so3_rep() -> Result<Representation> {
    let gens = (0..3)
        .map(|i| {
            let mut w = [0.0; 3];
            w[i] = 1.0;
            let h = hat(w);
            DMatrix::from_fn(3, 3, |r, c| h[(r, c)])
        })
        .collect();
    Representation::matrices(RepKind::So3, gens)
}
