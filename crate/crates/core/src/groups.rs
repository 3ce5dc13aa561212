//! Low-dimensional Lie groups, their half-space symbols, the pointwise
//! Cotlar identity, the codimension-one subalgebra criterion and
//! Fourier/Schur transference on `Z_N`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::orthogonal_complement;
use crate::matcore::{check_exponent, conjugate_exponent, lp_norm, DenseMatrix, MultiplierEstimator, C64};
use crate::multiplier::circulant;
use crate::par;
use crate::rng;
use crate::symbols::Expr;

pub const GROUP_TOL: f64 = 1e-10;
pub const SUBALGEBRA_TOL: f64 = 1e-9;
pub const BOUNDARY_VERDICT_TOL: f64 = 1e-7;
pub const COTLAR_BAND: f64 = 1e-9;
pub const MAX_CYCLIC_ORDER: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupId {
    Real,
    AffinePlus,
    #[serde(rename = "sl2r")]
    SL2R,
    #[serde(rename = "so3")]
    SO3,
    Heisenberg3,
    Cyclic(usize),
}

impl GroupId {
    pub fn name(&self) -> String {
        match self {
            GroupId::Real => "real".into(),
            GroupId::AffinePlus => "affine_plus".into(),
            GroupId::SL2R => "sl2r".into(),
            GroupId::SO3 => "so3".into(),
            GroupId::Heisenberg3 => "heisenberg3".into(),
            GroupId::Cyclic(n) => format!("cyclic{n}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "real" | "r" => GroupId::Real,
            "affine_plus" | "affine" | "aff" => GroupId::AffinePlus,
            "sl2r" | "sl2" => GroupId::SL2R,
            "so3" => GroupId::SO3,
            "heisenberg3" | "heisenberg" | "h3" => GroupId::Heisenberg3,
            other => match other.strip_prefix("cyclic").and_then(|n| n.parse().ok()) {
                Some(n) if n > 0 => GroupId::Cyclic(n),
                _ => return Err(Error::InvalidArgument(format!("unknown group '{s}'"))),
            },
        })
    }

    /// Lie algebra dimension (0 for finite groups).
    pub fn algebra_dim(&self) -> usize {
        match self {
            GroupId::Real => 1,
            GroupId::AffinePlus => 2,
            GroupId::SL2R | GroupId::SO3 | GroupId::Heisenberg3 => 3,
            GroupId::Cyclic(_) => 0,
        }
    }

    /// Basis of the Lie algebra as matrices of the defining representation.
    pub fn algebra_matrices(&self) -> Vec<DMatrix<f64>> {
        let m = |n: usize, entries: &[(usize, usize, f64)]| {
            let mut a = DMatrix::zeros(n, n);
            for &(i, j, v) in entries {
                a[(i, j)] = v;
            }
            a
        };
        match self {
            GroupId::Real => vec![m(2, &[(0, 1, 1.0)])],
            GroupId::AffinePlus => vec![m(2, &[(0, 0, 1.0)]), m(2, &[(0, 1, 1.0)])],
            GroupId::SL2R => vec![
                m(2, &[(0, 0, 1.0), (1, 1, -1.0)]),
                m(2, &[(0, 1, 1.0)]),
                m(2, &[(1, 0, 1.0)]),
            ],
            GroupId::SO3 => vec![
                m(3, &[(1, 2, -1.0), (2, 1, 1.0)]),
                m(3, &[(0, 2, 1.0), (2, 0, -1.0)]),
                m(3, &[(0, 1, -1.0), (1, 0, 1.0)]),
            ],
            GroupId::Heisenberg3 => vec![m(3, &[(0, 1, 1.0)]), m(3, &[(1, 2, 1.0)]), m(3, &[(0, 2, 1.0)])],
            GroupId::Cyclic(_) => Vec::new(),
        }
    }
}

/// Element of one of the built-in groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "group", rename_all = "snake_case")]
pub enum GroupElement {
    Real { t: f64 },
    AffinePlus { a: f64, b: f64 },
    #[serde(rename = "sl2r")]
    SL2R { m: [[f64; 2]; 2] },
    #[serde(rename = "so3")]
    SO3 { m: [[f64; 3]; 3] },
    /// `[[1, x, z], [0, 1, y], [0, 0, 1]]`.
    Heisenberg3 { x: f64, y: f64, z: f64 },
    Cyclic { n: usize, k: usize },
}

impl GroupElement {
    pub fn group_id(&self) -> GroupId {
        match self {
            GroupElement::Real { .. } => GroupId::Real,
            GroupElement::AffinePlus { .. } => GroupId::AffinePlus,
            GroupElement::SL2R { .. } => GroupId::SL2R,
            GroupElement::SO3 { .. } => GroupId::SO3,
            GroupElement::Heisenberg3 { .. } => GroupId::Heisenberg3,
            GroupElement::Cyclic { n, .. } => GroupId::Cyclic(*n),
        }
    }

    pub fn identity(id: GroupId) -> Self {
        match id {
            GroupId::Real => GroupElement::Real { t: 0.0 },
            GroupId::AffinePlus => GroupElement::AffinePlus { a: 1.0, b: 0.0 },
            GroupId::SL2R => GroupElement::SL2R {
                m: [[1.0, 0.0], [0.0, 1.0]],
            },
            GroupId::SO3 => GroupElement::SO3 {
                m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            },
            GroupId::Heisenberg3 => GroupElement::Heisenberg3 { x: 0.0, y: 0.0, z: 0.0 },
            GroupId::Cyclic(n) => GroupElement::Cyclic { n, k: 0 },
        }
    }

    pub fn sl2(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let g = GroupElement::SL2R { m: [[a, b], [c, d]] };
        g.validate()?;
        Ok(g)
    }

    /// Check the defining constraints within `1e-10`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.coordinates().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        match self {
            GroupElement::AffinePlus { a, .. } if *a <= 0.0 => bad(format!("affine scale {a} must be > 0")),
            GroupElement::SL2R { m } => {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if (det - 1.0).abs() > GROUP_TOL {
                    return bad(format!("SL2 determinant {det}"));
                }
                Ok(())
            }
            GroupElement::SO3 { m } => {
                let mut err: f64 = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                        err = err.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
                    }
                }
                let det = self.to_matrix().map(|a| a.determinant()).unwrap_or(0.0);
                if err > GROUP_TOL || (det - 1.0).abs() > GROUP_TOL {
                    return bad(format!("not a rotation (orthogonality error {err:e}, det {det})"));
                }
                Ok(())
            }
            GroupElement::Cyclic { n, k } if *n == 0 || k >= n => bad(format!("{k} is not in Z_{n}")),
            _ => Ok(()),
        }
    }

    /// Flat coordinates: `[t]`, `[a, b]`, `[a, b, c, d]`, nine rotation
    /// entries, `[x, y, z]` or `[k]`.
    pub fn coordinates(&self) -> Vec<f64> {
        match *self {
            GroupElement::Real { t } => vec![t],
            GroupElement::AffinePlus { a, b } => vec![a, b],
            GroupElement::SL2R { m } => vec![m[0][0], m[0][1], m[1][0], m[1][1]],
            GroupElement::SO3 { m } => m.iter().flatten().copied().collect(),
            GroupElement::Heisenberg3 { x, y, z } => vec![x, y, z],
            GroupElement::Cyclic { k, .. } => vec![k as f64],
        }
    }

    /// Defining matrix representation (none for cyclic groups).
    pub fn to_matrix(&self) -> Option<DMatrix<f64>> {
        Some(match *self {
            GroupElement::Real { t } => DMatrix::from_row_slice(2, 2, &[1.0, t, 0.0, 1.0]),
            GroupElement::AffinePlus { a, b } => DMatrix::from_row_slice(2, 2, &[a, b, 0.0, 1.0]),
            GroupElement::SL2R { m } => DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]),
            GroupElement::SO3 { m } => DMatrix::from_row_slice(3, 3, &m.iter().flatten().copied().collect::<Vec<_>>()),
            GroupElement::Heisenberg3 { x, y, z } => {
                DMatrix::from_row_slice(3, 3, &[1.0, x, z, 0.0, 1.0, y, 0.0, 0.0, 1.0])
            }
            GroupElement::Cyclic { .. } => return None,
        })
    }

    /// Inverse of [`to_matrix`](Self::to_matrix); entries outside the
    /// group's pattern are ignored.
    pub fn from_matrix(id: GroupId, a: &DMatrix<f64>) -> Result<Self> {
        let need = match id {
            GroupId::Real | GroupId::AffinePlus | GroupId::SL2R => 2,
            GroupId::SO3 | GroupId::Heisenberg3 => 3,
            GroupId::Cyclic(_) => return Err(Error::InvalidArgument("cyclic groups have no matrix chart".into())),
        };
        if a.shape() != (need, need) {
            return Err(Error::ShapeMismatch {
                left: (need, need),
                right: a.shape(),
            });
        }
        let g = match id {
            GroupId::Real => GroupElement::Real { t: a[(0, 1)] },
            GroupId::AffinePlus => GroupElement::AffinePlus {
                a: a[(0, 0)],
                b: a[(0, 1)],
            },
            GroupId::SL2R => GroupElement::SL2R {
                m: [[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]],
            },
            GroupId::SO3 => {
                let mut m = [[0.0; 3]; 3];
                for (i, row) in m.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = a[(i, j)];
                    }
                }
                GroupElement::SO3 { m }
            }
            GroupId::Heisenberg3 => GroupElement::Heisenberg3 {
                x: a[(0, 1)],
                y: a[(1, 2)],
                z: a[(0, 2)],
            },
            GroupId::Cyclic(_) => unreachable!(),
        };
        g.validate()?;
        Ok(g)
    }
}

fn mismatch(g: &GroupElement, h: &GroupElement) -> Error {
    Error::GroupMismatch(g.group_id().name(), h.group_id().name())
}

pub fn group_op(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    use GroupElement as G;
    Ok(match (*g, *h) {
        (G::Real { t: s }, G::Real { t }) => G::Real { t: s + t },
        (G::AffinePlus { a: a1, b: b1 }, G::AffinePlus { a: a2, b: b2 }) => G::AffinePlus {
            a: a1 * a2,
            b: a1 * b2 + b1,
        },
        (G::SL2R { m: p }, G::SL2R { m: q }) => G::SL2R {
            m: [
                [p[0][0] * q[0][0] + p[0][1] * q[1][0], p[0][0] * q[0][1] + p[0][1] * q[1][1]],
                [p[1][0] * q[0][0] + p[1][1] * q[1][0], p[1][0] * q[0][1] + p[1][1] * q[1][1]],
            ],
        },
        (G::SO3 { m: p }, G::SO3 { m: q }) => {
            let mut m = [[0.0; 3]; 3];
            for (i, row) in m.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = (0..3).map(|k| p[i][k] * q[k][j]).sum();
                }
            }
            G::SO3 { m }
        }
        (G::Heisenberg3 { x: x1, y: y1, z: z1 }, G::Heisenberg3 { x: x2, y: y2, z: z2 }) => G::Heisenberg3 {
            x: x1 + x2,
            y: y1 + y2,
            z: z1 + z2 + x1 * y2,
        },
        (G::Cyclic { n, k: a }, G::Cyclic { n: n2, k: b }) if n == n2 => G::Cyclic { n, k: (a + b) % n },
        _ => return Err(mismatch(g, h)),
    })
}

pub fn group_inv(g: &GroupElement) -> GroupElement {
    use GroupElement as G;
    match *g {
        G::Real { t } => G::Real { t: -t },
        G::AffinePlus { a, b } => G::AffinePlus { a: 1.0 / a, b: -b / a },
        G::SL2R { m } => G::SL2R {
            m: [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]],
        },
        G::SO3 { m } => {
            let mut t = [[0.0; 3]; 3];
            for (i, row) in t.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = m[j][i];
                }
            }
            G::SO3 { m: t }
        }
        G::Heisenberg3 { x, y, z } => G::Heisenberg3 {
            x: -x,
            y: -y,
            z: x * y - z,
        },
        G::Cyclic { n, k } => G::Cyclic { n, k: (n - k) % n },
    }
}

/// Pole margin of the fractional-linear chart.
const POLE_MARGIN: f64 = 1e-12;

/// Line action: translation, `t -> a t + b`, or `t -> (a t + b) / (c t + d)`.
pub fn act_on_line(g: &GroupElement, t: f64) -> Result<f64> {
    match *g {
        GroupElement::Real { t: s } => Ok(t + s),
        GroupElement::AffinePlus { a, b } => Ok(a * t + b),
        GroupElement::SL2R { m } => {
            let den = m[1][0] * t + m[1][1];
            if den.abs() < POLE_MARGIN {
                return Err(Error::ChartOverflow);
            }
            Ok((m[0][0] * t + m[0][1]) / den)
        }
        _ => Err(Error::InvalidArgument(format!(
            "{} has no action on the line",
            g.group_id().name()
        ))),
    }
}

/// `exp(sum_k s_k X_k)` in the group's matrix chart.
pub fn exp_coords(id: GroupId, s: &[f64]) -> Result<GroupElement> {
    let basis = id.algebra_matrices();
    if basis.is_empty() {
        return Err(Error::InvalidArgument(format!("{} is not a Lie group", id.name())));
    }
    if s.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: s.len(),
        });
    }
    let x = basis
        .iter()
        .zip(s)
        .fold(DMatrix::zeros(basis[0].nrows(), basis[0].ncols()), |acc, (b, c)| acc + b * *c);
    let e = x.exp();
    // Re-impose exact constraints lost to rounding where cheap.
    let mut g = GroupElement::from_matrix(id, &e)?;
    if let GroupElement::SL2R { m } = &mut g {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let r = det.sqrt();
        for v in m.iter_mut().flatten() {
            *v /= r;
        }
    }
    Ok(g)
}

/// Scalar field whose positivity set is `Omega`; the symbol is
/// `1/2 (1 + sgn F)`.
#[derive(Clone)]
pub enum GroupField {
    One,
    /// `F(g) = g . 0` for a group acting on the line.
    HalfLine,
    /// SL2: `F = ac + bd`.
    M0,
    /// SL2: `F = c`.
    SgnC,
    /// SO3: `F = g_11`.
    So3G11,
    /// Expression in the coordinates `x1, x2, ...`.
    Expr(Arc<Expr>, String),
}

impl std::fmt::Debug for GroupField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GroupField({})", self.name())
    }
}

impl GroupField {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "one" | "1" => GroupField::One,
            "half_line" | "halfline" => GroupField::HalfLine,
            "m0" => GroupField::M0,
            "sgn_c" => GroupField::SgnC,
            "g11" | "so3_g11" => GroupField::So3G11,
            src => GroupField::Expr(Arc::new(Expr::parse(src)?), src.to_string()),
        })
    }

    pub fn name(&self) -> String {
        match self {
            GroupField::One => "one".into(),
            GroupField::HalfLine => "half_line".into(),
            GroupField::M0 => "m0".into(),
            GroupField::SgnC => "sgn_c".into(),
            GroupField::So3G11 => "g11".into(),
            GroupField::Expr(_, src) => src.clone(),
        }
    }

    pub fn field(&self, g: &GroupElement) -> Result<f64> {
        let wrong = || {
            Err(Error::InvalidArgument(format!(
                "symbol {} is not defined on {}",
                self.name(),
                g.group_id().name()
            )))
        };
        match (self, g) {
            (GroupField::One, _) => Ok(1.0),
            (GroupField::HalfLine, _) => act_on_line(g, 0.0),
            (GroupField::M0, GroupElement::SL2R { m }) => Ok(m[0][0] * m[1][0] + m[0][1] * m[1][1]),
            (GroupField::SgnC, GroupElement::SL2R { m }) => Ok(m[1][0]),
            (GroupField::So3G11, GroupElement::SO3 { m }) => Ok(m[0][0]),
            (GroupField::Expr(e, _), _) => {
                let coords = g.coordinates();
                let (ax, ay) = e.arity();
                if ax > coords.len() || ay > 0 {
                    return Err(Error::InvalidArgument(format!(
                        "expression uses {ax} coordinates; {} has {}",
                        g.group_id().name(),
                        coords.len()
                    )));
                }
                Ok(e.eval(&coords, &[]))
            }
            _ => wrong(),
        }
    }

    /// `1/2 (1 + sgn F(g))`.
    pub fn symbol(&self, g: &GroupElement) -> Result<f64> {
        let f = self.field(g)?;
        Ok(if f > 0.0 {
            1.0
        } else if f < 0.0 {
            0.0
        } else {
            0.5
        })
    }
}

/// `M[i][j] = m(g_i g_j^{-1})`.
pub fn herz_schur_matrix(m: impl Fn(&GroupElement) -> Result<f64>, grid: &[GroupElement]) -> Result<DenseMatrix> {
    for g in grid {
        g.validate()?;
    }
    let inverses: Vec<GroupElement> = grid.iter().map(group_inv).collect();
    let mut data = Vec::with_capacity(grid.len() * grid.len());
    for g in grid {
        for hi in &inverses {
            data.push(C64::new(m(&group_op(g, hi)?)?, 0.0));
        }
    }
    DenseMatrix::new(grid.len(), grid.len(), data)
}

/// `[a < 0 and a < b] = [a < 0 < b] + [a < b < 0]`, the scalar form of the
/// Cotlar identity for half-line symbols.
pub fn cotlar_scalar(alpha: f64, beta: f64) -> bool {
    let ind = |b: bool| u8::from(b);
    ind(alpha < 0.0 && alpha < beta) == ind(alpha < 0.0 && 0.0 < beta) + ind(alpha < beta && beta < 0.0)
}

/// Random element for the Cotlar sampler. SL2 elements stay near the
/// identity so that the fractional-linear chart is single-valued on the
/// points involved.
pub fn sample_element(id: GroupId, rng: &mut rng::Rng) -> Result<GroupElement> {
    Ok(match id {
        GroupId::Real => GroupElement::Real {
            t: rng.random_range(-10.0..10.0),
        },
        GroupId::AffinePlus => GroupElement::AffinePlus {
            a: rng.random_range(-2.0f64..2.0).exp(),
            b: rng.random_range(-5.0..5.0),
        },
        GroupId::SL2R => {
            let a = 1.0 + rng.random_range(-0.3..0.3);
            let b = rng.random_range(-0.3..0.3);
            let c = rng.random_range(-0.3..0.3);
            GroupElement::SL2R {
                m: [[a, b], [c, (1.0 + b * c) / a]],
            }
        }
        GroupId::SO3 | GroupId::Heisenberg3 => {
            let s: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            exp_coords(id, &s)?
        }
        GroupId::Cyclic(n) => GroupElement::Cyclic {
            n,
            k: rng.random_range(0..n),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotlarReport {
    pub samples: usize,
    pub failures: usize,
    pub rejected: usize,
}

/// Check `m(g^-1) m(g^-1 h) = m(h) m(g^-1) + m(h^-1) m(g^-1 h)` for
/// `m = [g . 0 > 0]` on seeded pairs, evaluating every group element
/// through the action. Pairs within `1e-9` of the degenerate sets are
/// redrawn.
pub fn cotlar_pointwise_check(id: GroupId, samples: usize, seed: u64) -> Result<CotlarReport> {
    if !matches!(id, GroupId::Real | GroupId::AffinePlus | GroupId::SL2R) {
        return Err(Error::InvalidArgument(format!("{} has no line action", id.name())));
    }
    let outcomes: Vec<Result<(bool, usize)>> = par::map_indexed(samples, |i| {
        let mut rng = rng::rng_for(seed, i as u64);
        let mut rejected = 0;
        loop {
            let g = sample_element(id, &mut rng)?;
            let h = sample_element(id, &mut rng)?;
            match cotlar_pair(&g, &h) {
                Some(ok) => return Ok((ok, rejected)),
                None => rejected += 1,
            }
            if rejected > 1000 {
                return Err(Error::InvalidArgument("sampler keeps hitting degenerate pairs".into()));
            }
        }
    });
    let mut report = CotlarReport {
        samples,
        failures: 0,
        rejected: 0,
    };
    for o in outcomes {
        let (ok, rej) = o?;
        report.failures += usize::from(!ok);
        report.rejected += rej;
    }
    Ok(report)
}

/// `Some(identity holds)`, or `None` for pairs in the rejection band.
fn cotlar_pair(g: &GroupElement, h: &GroupElement) -> Option<bool> {
    let gi = group_inv(g);
    let gih = group_op(&gi, h).ok()?;
    let hi = group_inv(h);
    let alpha = act_on_line(g, 0.0).ok()?;
    let beta = act_on_line(h, 0.0).ok()?;
    let vals = [
        act_on_line(&gi, 0.0).ok()?,
        act_on_line(&gih, 0.0).ok()?,
        act_on_line(h, 0.0).ok()?,
        act_on_line(&hi, 0.0).ok()?,
    ];
    if alpha.abs() < COTLAR_BAND
        || beta.abs() < COTLAR_BAND
        || (alpha - beta).abs() < COTLAR_BAND
        || vals.iter().any(|v| v.abs() < COTLAR_BAND)
    {
        return None;
    }
    // Keep SL2 pairs on one branch: no pole between the points involved.
    if let (GroupElement::SL2R { .. }, Ok(x)) = (g, act_on_line(&gi, beta)) {
        if (x - vals[1]).abs() > 1e-9 * (1.0 + x.abs()) {
            return None;
        }
    }
    let m = |v: f64| u8::from(v > 0.0);
    let (m_gi, m_gih, m_h, m_hi) = (m(vals[0]), m(vals[1]), m(vals[2]), m(vals[3]));
    Some(m_gi * m_gih == m_h * m_gi + m_hi * m_gih)
}

/// Structure constants `[X_i, X_j] = sum_k c[i][j][k] X_k` and a candidate
/// subspace given by coordinate vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieAlgebraBasis {
    pub name: String,
    pub dim: usize,
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    pub candidate_subspace: Vec<Vec<f64>>,
}

impl LieAlgebraBasis {
    fn from_brackets(name: &str, dim: usize, brackets: &[(usize, usize, usize, f64)]) -> Self {
        let mut c = vec![vec![vec![0.0; dim]; dim]; dim];
        for &(i, j, k, v) in brackets {
            c[i][j][k] += v;
            c[j][i][k] -= v;
        }
        Self {
            name: name.into(),
            dim,
            structure_constants: c,
            candidate_subspace: Vec::new(),
        }
    }

    /// `H, E, F` with `[H,E] = 2E`, `[H,F] = -2F`, `[E,F] = H`.
    pub fn sl2() -> Self {
        Self::from_brackets("sl2", 3, &[(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)])
    }

    /// `L_x, L_y, L_z` with `[L_x, L_y] = L_z` and cyclic.
    pub fn so3() -> Self {
        Self::from_brackets("so3", 3, &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)])
    }

    /// `X, Y, Z` with `[X, Y] = Z` central.
    pub fn heisenberg3() -> Self {
        Self::from_brackets("heisenberg3", 3, &[(0, 1, 2, 1.0)])
    }

    pub fn abelian(n: usize) -> Self {
        Self::from_brackets(&format!("abelian{n}"), n, &[])
    }

    /// `X = diag(1, 0)`, `Y = E_12` with `[X, Y] = Y`.
    pub fn aff() -> Self {
        Self::from_brackets("aff", 2, &[(0, 1, 1, 1.0)])
    }

    pub fn builtin(name: &str) -> Result<Self> {
        Ok(match name {
            "sl2" | "sl2r" => Self::sl2(),
            "so3" => Self::so3(),
            "heisenberg3" | "h3" => Self::heisenberg3(),
            "aff" | "affine_plus" => Self::aff(),
            "real" => Self::abelian(1),
            other => match other.strip_prefix("abelian").and_then(|n| n.parse().ok()) {
                Some(n) if n > 0 => Self::abelian(n),
                _ => return Err(Error::InvalidArgument(format!("unknown Lie algebra '{name}'"))),
            },
        })
    }

    /// Algebra of a built-in group, in the basis of
    /// [`GroupId::algebra_matrices`].
    pub fn for_group(id: GroupId) -> Result<Self> {
        Ok(match id {
            GroupId::Real => Self::abelian(1),
            GroupId::AffinePlus => Self::aff(),
            GroupId::SL2R => Self::sl2(),
            GroupId::SO3 => Self::so3(),
            GroupId::Heisenberg3 => Self::heisenberg3(),
            GroupId::Cyclic(_) => return Err(Error::InvalidArgument("finite groups have no Lie algebra".into())),
        })
    }

    /// Structure constants of a linearly independent family of matrices
    /// closed under commutators, by least squares.
    pub fn from_matrices(name: &str, mats: &[DMatrix<f64>]) -> Result<Self> {
        let d = mats.len();
        let Some(first) = mats.first() else {
            return Ok(Self::abelian(0));
        };
        let len = first.len();
        let b = DMatrix::from_fn(len, d, |r, k| mats[k].as_slice()[r]);
        let svd = b.clone().svd(true, true);
        if svd.singular_values.iter().any(|s| *s < 1e-12) {
            return Err(Error::DegenerateBasis);
        }
        let mut c = vec![vec![vec![0.0; d]; d]; d];
        for i in 0..d {
            for j in 0..d {
                let br = &mats[i] * &mats[j] - &mats[j] * &mats[i];
                let rhs = DVector::from_column_slice(br.as_slice());
                let sol = svd.solve(&rhs, 1e-14).map_err(|_| Error::DegenerateBasis)?;
                c[i][j] = sol.iter().copied().collect();
            }
        }
        Ok(Self {
            name: name.into(),
            dim: d,
            structure_constants: c,
            candidate_subspace: Vec::new(),
        })
    }

    pub fn with_candidate(mut self, vectors: Vec<Vec<f64>>) -> Self {
        self.candidate_subspace = vectors;
        self
    }

    pub fn bracket(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (ui, ci) in u.iter().zip(&self.structure_constants) {
            for (vj, cij) in v.iter().zip(ci) {
                let w = ui * vj;
                if w == 0.0 {
                    continue;
                }
                for (o, c) in out.iter_mut().zip(cij) {
                    *o += w * c;
                }
            }
        }
        out
    }

    /// Largest antisymmetry or Jacobi violation over basis triples.
    pub fn jacobi_defect(&self) -> f64 {
        let e = |i: usize| {
            let mut v = vec![0.0; self.dim];
            v[i] = 1.0;
            v
        };
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    worst = worst.max((self.structure_constants[i][j][k] + self.structure_constants[j][i][k]).abs());
                    let (a, b, c) = (e(i), e(j), e(k));
                    let t1 = self.bracket(&a, &self.bracket(&b, &c));
                    let t2 = self.bracket(&b, &self.bracket(&c, &a));
                    let t3 = self.bracket(&c, &self.bracket(&a, &b));
                    for r in 0..self.dim {
                        worst = worst.max((t1[r] + t2[r] + t3[r]).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let shape_ok = self.structure_constants.len() == self.dim
            && self
                .structure_constants
                .iter()
                .all(|r| r.len() == self.dim && r.iter().all(|c| c.len() == self.dim));
        if !shape_ok || self.candidate_subspace.iter().any(|v| v.len() != self.dim) {
            return Err(Error::ShapeInvalid(format!("structure constants must be {0}x{0}x{0}", self.dim)));
        }
        let defect = self.jacobi_defect();
        if defect > GROUP_TOL {
            return Err(Error::InvalidArgument(format!("Jacobi identity fails by {defect:e}")));
        }
        Ok(())
    }
}

/// Orthonormal basis of the span, or `DegenerateBasis`.
fn orthonormalize(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
        }
        let n = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(n > 1e-10 * scale) || scale == 0.0 {
            return Err(Error::DegenerateBasis);
        }
        out.push(w.into_iter().map(|a| a / n).collect());
    }
    Ok(out)
}

fn residual_outside(q: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in q {
            let d: f64 = w.iter().zip(b).map(|(a, c)| a * c).sum();
            w.iter_mut().zip(b).for_each(|(a, c)| *a -= d * c);
        }
    }
    w.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Largest norm of the component of `[h_i, h_j]` orthogonal to the
/// candidate subspace, over an orthonormal basis of it.
pub fn subalgebra_residual(basis: &LieAlgebraBasis) -> Result<f64> {
    let q = orthonormalize(&basis.candidate_subspace)?;
    let mut worst: f64 = 0.0;
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            worst = worst.max(residual_outside(&q, &basis.bracket(&q[i], &q[j])));
        }
    }
    Ok(worst)
}

pub fn subalgebra_check(basis: &LieAlgebraBasis, tol: f64) -> Result<bool> {
    Ok(subalgebra_residual(basis)? <= tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubalgebraVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdWitness {
    /// Coordinates `s` of the boundary point `x = exp(s)` of `g0^{-1} Omega`.
    pub point: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVerdict {
    pub verdict: SubalgebraVerdict,
    pub group: String,
    /// Left-translated gradient `d/ds F(g0 exp(s X_k))`.
    pub gradient: Vec<f64>,
    /// Orthonormal basis of the candidate `h = ker(gradient)`.
    pub subalgebra: Vec<Vec<f64>>,
    pub bracket_residual: f64,
    pub ad_residual: f64,
    pub ad_points: usize,
    pub tolerance: f64,
    pub witnesses: Vec<AdWitness>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictOptions {
    pub tol: f64,
    pub ad_points: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            tol: BOUNDARY_VERDICT_TOL,
            ad_points: 32,
            radius: 0.1,
            seed: 0,
        }
    }
}

/// Richardson-extrapolated central difference of `f` at 0.
fn richardson(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    let h = 1e-3;
    Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
}

fn translated(g0: &GroupElement, s: &[f64]) -> Result<GroupElement> {
    group_op(g0, &exp_coords(g0.group_id(), s)?)
}

/// Codimension-one subalgebra test at a boundary point `g0` of
/// `Omega = {F > 0}`: the tangent space of `g0^{-1} dOmega` at the
/// identity must be a subalgebra `h`, and `Ad_x h = h` at boundary points
/// `x` of `g0^{-1} Omega` near the identity.
pub fn boundary_subalgebra_verdict(
    field: &GroupField,
    g0: &GroupElement,
    opts: &VerdictOptions,
) -> Result<BoundaryVerdict> {
    let id = g0.group_id();
    g0.validate()?;
    let basis = id.algebra_matrices();
    let d = basis.len();
    if d == 0 {
        return Err(Error::InvalidArgument(format!("{} is not a Lie group", id.name())));
    }
    let algebra = LieAlgebraBasis::for_group(id)?;
    let f_at = |s: &[f64]| -> Result<f64> { field.field(&translated(g0, s)?) };
    let value = f_at(&vec![0.0; d])?;
    let gradient_at = |s0: &[f64]| -> Result<Vec<f64>> {
        (0..d)
            .map(|k| {
                richardson(|h| {
                    let mut s = s0.to_vec();
                    s[k] += h;
                    f_at(&s)
                })
            })
            .collect()
    };
    let gradient = gradient_at(&vec![0.0; d])?;
    let gnorm = gradient.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(gnorm >= 1e-12) {
        return Err(Error::DegenerateGradient(gnorm));
    }
    if value.abs() > 1e-8 * (1.0 + gnorm) {
        return Err(Error::InvalidArgument(format!("F(g0) = {value:e} is not on the boundary")));
    }
    let normal: Vec<f64> = gradient.iter().map(|v| v / gnorm).collect();
    let comp = orthogonal_complement(&normal);
    let h: Vec<Vec<f64>> = (0..comp.ncols()).map(|j| comp.column(j).iter().copied().collect()).collect();
    let bracket_residual = if h.len() >= 2 {
        subalgebra_residual(&algebra.clone().with_candidate(h.clone()))?
    } else {
        0.0
    };

    // Ad-invariance at boundary points x = exp(s) of g0^{-1} Omega.
    let h_mats: Vec<DMatrix<f64>> = h
        .iter()
        .map(|v| {
            basis
                .iter()
                .zip(v)
                .fold(DMatrix::zeros(basis[0].nrows(), basis[0].ncols()), |acc, (b, c)| acc + b * *c)
        })
        .collect();
    let b_flat = DMatrix::from_fn(basis[0].len(), d, |r, k| basis[k].as_slice()[r]);
    let coords_svd = b_flat.svd(true, true);
    let samples: Vec<Option<AdWitness>> = par::map_indexed(opts.ad_points, |i| {
        let mut rng = rng::rng_for(opts.seed, i as u64);
        let s0 = crate::geometry::random_in_ball(&mut rng, d, opts.radius);
        let s = project_along(&f_at, &s0, &normal)?;
        let x = exp_coords(id, &s).ok()?.to_matrix()?;
        let x_inv = x.clone().try_inverse()?;
        let mut worst: f64 = 0.0;
        for hm in &h_mats {
            let ad = &x * hm * &x_inv;
            let coords = coords_svd
                .solve(&DVector::from_column_slice(ad.as_slice()), 1e-14)
                .ok()?;
            let out: f64 = coords.iter().zip(&normal).map(|(a, b)| a * b).sum();
            let scale = coords.norm().max(1.0);
            worst = worst.max(out.abs() / scale);
        }
        Some(AdWitness { point: s, residual: worst })
    });
    let points: Vec<AdWitness> = samples.into_iter().flatten().collect();
    let ad_residual = points.iter().map(|w| w.residual).fold(0.0, f64::max);
    let mut witnesses: Vec<AdWitness> = points.iter().filter(|w| w.residual > opts.tol).cloned().collect();
    witnesses.sort_by(|a, b| b.residual.total_cmp(&a.residual));
    witnesses.truncate(8);
    let pass = bracket_residual <= opts.tol && ad_residual <= opts.tol;
    Ok(BoundaryVerdict {
        verdict: if pass {
            SubalgebraVerdict::Pass
        } else {
            SubalgebraVerdict::Fail
        },
        group: id.name(),
        gradient,
        subalgebra: h,
        bracket_residual,
        ad_residual,
        ad_points: points.len(),
        tolerance: opts.tol,
        witnesses,
    })
}

/// Solve `f(s0 + t u) = 0` for `t` by the secant method.
fn project_along(f: &impl Fn(&[f64]) -> Result<f64>, s0: &[f64], u: &[f64]) -> Option<Vec<f64>> {
    let at = |t: f64| -> Option<f64> {
        let s: Vec<f64> = s0.iter().zip(u).map(|(a, b)| a + t * b).collect();
        f(&s).ok()
    };
    let (mut t0, mut t1) = (0.0, 1e-3);
    let (mut f0, mut f1) = (at(t0)?, at(t1)?);
    for _ in 0..100 {
        if f1.abs() <= 1e-13 {
            break;
        }
        if f1 == f0 {
            return None;
        }
        let t2 = t1 - f1 * (t1 - t0) / (f1 - f0);
        (t0, f0) = (t1, f1);
        t1 = t2;
        f1 = at(t1)?;
    }
    if f1.abs() > 1e-10 || t1.abs() > 1.0 {
        return None;
    }
    Some(s0.iter().zip(u).map(|(a, b)| a + t1 * b).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclicTransference {
    pub n: usize,
    #[serde(with = "crate::multiplier::exponent_serde")]
    pub p: f64,
    pub fourier_lb: f64,
    pub schur_lb: f64,
    /// Shift coefficients of the best circulant found on the Fourier side.
    #[serde(skip)]
    pub witness: Vec<C64>,
}

/// Ratio `|lambda(m c)|_p / |lambda(c)|_p` maximized over circulants, where
/// `lambda` is the eigenvalue list (the DFT of the coefficients). Each
/// start is refined by a power ascent on the convolution operator.
fn cyclic_fourier_ascent(m: &[C64], p: f64, budget: usize, seed: u64, steps: usize) -> (f64, Vec<C64>) {
    let n = m.len();
    let q = conjugate_exponent(p);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    // K = F diag(m) F^-1 on eigenvalue vectors; its adjoint uses conj(m).
    let apply = |lam: &[C64], sym: &dyn Fn(usize) -> C64| -> Vec<C64> {
        let mut c = lam.to_vec();
        inv.process(&mut c);
        let scale = 1.0 / n as f64;
        for (k, z) in c.iter_mut().enumerate() {
            *z *= sym(k) * scale;
        }
        fwd.process(&mut c);
        c
    };
    let norm = |v: &[C64], r: f64| lp_norm(&v.iter().map(|z| z.norm()).collect::<Vec<_>>(), r);
    let dual = |v: &[C64], r: f64| -> Option<Vec<C64>> {
        let abs: Vec<f64> = v.iter().map(|z| z.norm()).collect();
        let top = abs.iter().copied().fold(0.0, f64::max);
        if top <= f64::MIN_POSITIVE {
            return None;
        }
        let nv = lp_norm(&abs, r);
        Some(
            v.iter()
                .zip(&abs)
                .map(|(z, a)| {
                    if *a == 0.0 {
                        return C64::new(0.0, 0.0);
                    }
                    let w = if r.is_infinite() {
                        if *a >= top * (1.0 - 1e-12) {
                            1.0
                        } else {
                            0.0
                        }
                    } else if r == 1.0 {
                        1.0
                    } else {
                        (a / nv).powf(r - 1.0)
                    };
                    z / a * w
                })
                .collect(),
        )
    };
    let fwd_sym = |k: usize| m[k];
    let adj_sym = |k: usize| m[k].conj();
    let starts: Vec<Vec<C64>> = (0..budget.max(1))
        .map(|t| {
            if t == 0 {
                vec![C64::new(1.0, 0.0); n]
            } else {
                let mut rng = rng::rng_for(seed, t as u64);
                (0..n).map(|_| crate::matcore::gaussian_c64(&mut rng)).collect()
            }
        })
        .collect();
    let results: Vec<(f64, Vec<C64>)> = par::map_slice(&starts, |start| {
        let mut lam = start.clone();
        let mut y = apply(&lam, &fwd_sym);
        let mut best = norm(&y, p) / norm(&lam, p);
        let mut best_lam = lam.clone();
        for _ in 0..steps {
            let Some(z) = dual(&y, p) else { break };
            let w = apply(&z, &adj_sym);
            let Some(next) = dual(&w, q) else { break };
            lam = next;
            y = apply(&lam, &fwd_sym);
            let r = norm(&y, p) / norm(&lam, p);
            if r > best * (1.0 + 1e-13) {
                best = r;
                best_lam = lam.clone();
            } else {
                break;
            }
        }
        (best, best_lam)
    });
    let (best, lam) = results
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, r| if r.0 > acc.0 { r } else { acc });
    // Coefficients of the circulant with eigenvalues `lam`.
    let mut c = lam;
    inv.process(&mut c);
    let scale = 1.0 / n as f64;
    c.iter_mut().for_each(|z| *z *= scale);
    (best, c)
}

/// Lower bounds for `T_m` on circulants (Fourier side) and for the
/// Herz-Schur multiplier `M[i][j] = m(i - j mod N)` (Schur side). The
/// Schur estimate is warm-started at the best circulant, so
/// `fourier_lb <= schur_lb` up to rounding.
pub fn fourier_multiplier_norm_finite_cyclic(m: &[C64], p: f64, budget: usize, seed: u64) -> Result<CyclicTransference> {
    check_exponent(p)?;
    let n = m.len();
    if n == 0 || n > MAX_CYCLIC_ORDER {
        return Err(Error::InvalidArgument(format!("need 1 <= N <= {MAX_CYCLIC_ORDER}, got {n}")));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (fourier_lb, coeffs) = cyclic_fourier_ascent(m, p, budget, rng::derive(seed, 0), 50);
    let warm = circulant(&coeffs);
    let schur = circulant(m);
    let est = MultiplierEstimator::default().estimate(&schur, p, budget.max(1), rng::derive(seed, 1), &[warm])?;
    Ok(CyclicTransference {
        n,
        p,
        fourier_lb,
        schur_lb: est.value,
        witness: coeffs,
    })
}
