//! Diffeomorphisms of a single factor used to pull symbols back.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Injective smooth map `R^d -> R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum Reparam {
    Identity,
    /// `t_i -> scale_i * t_i + shift_i`, all scales nonzero.
    Affine { scale: Vec<f64>, shift: Vec<f64> },
    /// `t_i -> t_i + coef_i * t_i^3` with `coef_i >= 0`.
    Cubic { coef: Vec<f64> },
    /// `t -> matrix * t + shift` for an invertible matrix.
    Linear { matrix: DMatrix<f64>, shift: Vec<f64> },
    /// Applied left to right.
    Compose(Vec<Reparam>),
}

impl Reparam {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let check_len = |len: usize| {
            if len != dim {
                Err(Error::DimensionMismatch {
                    expected: dim,
                    got: len,
                })
            } else {
                Ok(())
            }
        };
        match self {
            Reparam::Identity => Ok(()),
            Reparam::Affine { scale, shift } => {
                check_len(scale.len())?;
                check_len(shift.len())?;
                if scale.iter().any(|s| *s == 0.0 || !s.is_finite()) {
                    return Err(Error::InvalidArgument("affine scale must be nonzero".into()));
                }
                Ok(())
            }
            Reparam::Cubic { coef } => {
                check_len(coef.len())?;
                if coef.iter().any(|c| *c < 0.0 || !c.is_finite()) {
                    return Err(Error::InvalidArgument("cubic coefficients must be >= 0".into()));
                }
                Ok(())
            }
            Reparam::Linear { matrix, shift } => {
                check_len(matrix.nrows())?;
                check_len(matrix.ncols())?;
                check_len(shift.len())?;
                if matrix.determinant().abs() < 1e-12 {
                    return Err(Error::InvalidArgument("linear map is singular".into()));
                }
                Ok(())
            }
            Reparam::Compose(maps) => maps.iter().try_for_each(|m| m.validate(dim)),
        }
    }

    pub fn apply(&self, t: &[f64]) -> Vec<f64> {
        match self {
            Reparam::Identity => t.to_vec(),
            Reparam::Affine { scale, shift } => t
                .iter()
                .zip(scale.iter().zip(shift))
                .map(|(v, (s, b))| s * v + b)
                .collect(),
            Reparam::Cubic { coef } => t.iter().zip(coef).map(|(v, c)| v + c * v * v * v).collect(),
            Reparam::Linear { matrix, shift } => {
                let out = matrix * DVector::from_column_slice(t);
                out.iter().zip(shift).map(|(v, b)| v + b).collect()
            }
            Reparam::Compose(maps) => maps.iter().fold(t.to_vec(), |acc, m| m.apply(&acc)),
        }
    }

    /// Jacobian `d(apply)/dt` at `t`.
    pub fn jacobian(&self, t: &[f64]) -> DMatrix<f64> {
        let d = t.len();
        match self {
            Reparam::Identity => DMatrix::identity(d, d),
            Reparam::Affine { scale, .. } => DMatrix::from_diagonal(&DVector::from_column_slice(scale)),
            Reparam::Cubic { coef } => DMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    1.0 + 3.0 * coef[i] * t[i] * t[i]
                } else {
                    0.0
                }
            }),
            Reparam::Linear { matrix, .. } => matrix.clone(),
            Reparam::Compose(maps) => {
                let mut point = t.to_vec();
                let mut jac = DMatrix::identity(d, d);
                for m in maps {
                    jac = m.jacobian(&point) * jac;
                    point = m.apply(&point);
                }
                jac
            }
        }
    }

    pub fn inverse(&self, s: &[f64]) -> Result<Vec<f64>> {
        match self {
            Reparam::Identity => Ok(s.to_vec()),
            Reparam::Affine { scale, shift } => Ok(s
                .iter()
                .zip(scale.iter().zip(shift))
                .map(|(v, (a, b))| (v - b) / a)
                .collect()),
            Reparam::Cubic { coef } => s
                .iter()
                .zip(coef)
                .map(|(&v, &c)| invert_cubic(v, c))
                .collect(),
            Reparam::Linear { matrix, shift } => {
                let rhs = DVector::from_iterator(s.len(), s.iter().zip(shift).map(|(v, b)| v - b));
                let lu = matrix.clone().lu();
                lu.solve(&rhs)
                    .map(|v| v.iter().copied().collect())
                    .ok_or_else(|| Error::InvalidArgument("linear map is singular".into()))
            }
            Reparam::Compose(maps) => maps
                .iter()
                .rev()
                .try_fold(s.to_vec(), |acc, m| m.inverse(&acc)),
        }
    }
}

/// Solve `t + c t^3 = v` (strictly increasing for `c >= 0`).
fn invert_cubic(v: f64, c: f64) -> Result<f64> {
    if c == 0.0 {
        return Ok(v);
    }
    // Start from the dominant term and polish with Newton.
    let mut t = if v.abs() > 1.0 { (v / c).cbrt() } else { v };
    for _ in 0..100 {
        let f = t + c * t * t * t - v;
        let df = 1.0 + 3.0 * c * t * t;
        let step = f / df;
        t -= step;
        if step.abs() <= 1e-15 * (1.0 + t.abs()) {
            return Ok(t);
        }
    }
    let residual = (t + c * t * t * t - v).abs();
    if residual <= 1e-12 * (1.0 + v.abs()) {
        Ok(t)
    } else {
        Err(Error::NoConvergence {
            iterations: 100,
            residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trips() {
        let maps = [
            Reparam::Identity,
            Reparam::Affine {
                scale: vec![2.0, -0.5],
                shift: vec![0.1, 0.3],
            },
            Reparam::Cubic { coef: vec![1.0, 0.25] },
            Reparam::Linear {
                matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.2, 2.0]),
                shift: vec![0.0, 1.0],
            },
            Reparam::Compose(vec![
                Reparam::Cubic { coef: vec![1.0, 1.0] },
                Reparam::Affine {
                    scale: vec![1.5, 0.7],
                    shift: vec![-0.2, 0.2],
                },
            ]),
        ];
        let t = [0.37, -1.8];
        for m in &maps {
            m.validate(2).unwrap();
            let back = m.inverse(&m.apply(&t)).unwrap();
            for (a, b) in back.iter().zip(&t) {
                assert!((a - b).abs() < 1e-12, "{m:?}");
            }
        }
    }

    #[test]
    fn jacobian_matches_differences() {
        let m = Reparam::Compose(vec![
            Reparam::Cubic { coef: vec![0.8, 0.1] },
            Reparam::Linear {
                matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.2]),
                shift: vec![0.0, 0.0],
            },
        ]);
        let t = [0.4, -0.6];
        let jac = m.jacobian(&t);
        let h = 1e-6;
        for j in 0..2 {
            let mut tp = t;
            let mut tm = t;
            tp[j] += h;
            tm[j] -= h;
            let (fp, fm) = (m.apply(&tp), m.apply(&tm));
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - jac[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn invalid_maps_are_rejected() {
        assert!(Reparam::Cubic { coef: vec![-1.0] }.validate(1).is_err());
        assert!(Reparam::Affine {
            scale: vec![0.0],
            shift: vec![0.0]
        }
        .validate(1)
        .is_err());
        assert!(matches!(
            Reparam::Cubic { coef: vec![1.0] }.validate(2),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
