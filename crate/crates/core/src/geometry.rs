//! Boundary points, transversality, zero-curvature checks (first-order
//! tangent comparison and mixed-Hessian form), normal-form charts,
//! triangular-model verification and the combined classification.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::rng::{self, Rng};
use crate::symbols::{BoundaryPoint, DomainBox, SymbolSpec, DEGENERATE_GRADIENT};

pub const BOUNDARY_TOL: f64 = 1e-9;
pub const TRANSVERSE_TOL: f64 = 1e-6;
pub const ANGLE_TOL: f64 = 1e-4;
pub const C2_TOL: f64 = 1e-6;
pub const DEGENERATE_NORMAL_TOL: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 64;
pub const MAX_PROJECTION_ITERS: usize = 100;

/// Newton iteration for `f = 0` along the gradient, with step halving.
fn newton_project(
    f: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    start: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let mut z = start.to_vec();
    let mut fz = f(&z);
    for _ in 0..MAX_PROJECTION_ITERS {
        if !fz.is_finite() {
            break;
        }
        if fz.abs() <= tol {
            return Ok(z);
        }
        let g = grad(&z);
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        if !(gn2.sqrt() >= DEGENERATE_GRADIENT) {
            return Err(Error::DegenerateGradient(gn2.sqrt()));
        }
        let scale = -fz / gn2;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a + t * scale * b).collect();
            let fc = f(&cand);
            if fc.is_finite() && fc.abs() < fz.abs() {
                z = cand;
                fz = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if fz.abs() <= tol {
        return Ok(z);
    }
    Err(Error::NoConvergence {
        iterations: MAX_PROJECTION_ITERS,
        residual: fz.abs(),
    })
}

/// Move `y` along `d_y F` until `|F(x, y)| <= 1e-9`; `x` is kept fixed.
pub fn boundary_project(spec: &SymbolSpec, x: &[f64], y_init: &[f64]) -> Result<BoundaryPoint> {
    check_dims(spec, x, y_init)?;
    let y = newton_project(
        |y| spec.value(x, y),
        |y| spec.raw_gradient(x, y).1,
        y_init,
        BOUNDARY_TOL,
    )?;
    BoundaryPoint::at(spec, x.to_vec(), y)
}

/// Move `x` along `d_x F` with `y` fixed, landing on the section through `y`.
pub fn section_project(spec: &SymbolSpec, x_init: &[f64], y: &[f64]) -> Result<BoundaryPoint> {
    check_dims(spec, x_init, y)?;
    let x = newton_project(
        |x| spec.value(x, y),
        |x| spec.raw_gradient(x, y).0,
        x_init,
        BOUNDARY_TOL,
    )?;
    BoundaryPoint::at(spec, x, y.to_vec())
}

/// Move `(x, y)` jointly along the full gradient.
pub fn joint_project(spec: &SymbolSpec, x_init: &[f64], y_init: &[f64]) -> Result<BoundaryPoint> {
    check_dims(spec, x_init, y_init)?;
    let m = spec.m_dim();
    let start: Vec<f64> = x_init.iter().chain(y_init).copied().collect();
    let z = newton_project(
        |z| spec.value(&z[..m], &z[m..]),
        |z| {
            let (gx, gy) = spec.raw_gradient(&z[..m], &z[m..]);
            gx.into_iter().chain(gy).collect()
        },
        &start,
        BOUNDARY_TOL,
    )?;
    BoundaryPoint::at(spec, z[..m].to_vec(), z[m..].to_vec())
}

fn check_dims(spec: &SymbolSpec, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != spec.m_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.m_dim(),
            got: x.len(),
        });
    }
    if y.len() != spec.n_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_dim(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Both normal components carry at least a `tol` fraction of the normal.
pub fn transversality_check(pt: &BoundaryPoint, tol: f64) -> bool {
    let total = (pt.n1_norm().powi(2) + pt.n2_norm().powi(2)).sqrt();
    pt.n1_norm() >= tol * total && pt.n2_norm() >= tol * total
}

/// Angle between the lines spanned by two vectors, in `[0, pi/2]`.
pub fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let s = if d >= 0.0 { 1.0 } else { -1.0 };
    let chord = a
        .iter()
        .zip(b)
        .map(|(p, q)| (p / na - s * q / nb).powi(2))
        .sum::<f64>()
        .sqrt();
    2.0 * (0.5 * chord).min(1.0).asin()
}

/// Two boundary points and the angle between their section normals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub a: BoundaryPoint,
    pub b: BoundaryPoint,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureC1 {
    pub holds: bool,
    pub max_deviation: f64,
    pub witness: Option<Witness>,
    pub points: Vec<BoundaryPoint>,
}

/// Largest pairwise angle between the `n2` lines of points sharing `y`.
fn max_pairwise_deviation(points: &[BoundaryPoint]) -> (f64, Option<(usize, usize)>) {
    let mut best = (0.0, None);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = line_angle(&points[i].n2, &points[j].n2);
            if d > best.0 || best.1.is_none() {
                best = (d, Some((i, j)));
            }
        }
    }
    best
}

/// Compare `T_y(dSigma_{x_i})` for sections through a common `y`.
///
/// Each `x_i` is first moved onto the section `{x : F(x, y) = 0}`. Since
/// that tangent space is `ker d_y F(x_i, .)`, equal tangent spaces are the
/// same as parallel `n2` vectors.
pub fn zero_curvature_check_c1(
    spec: &SymbolSpec,
    y: &[f64],
    x_samples: &[Vec<f64>],
    tol_angle: f64,
) -> Result<CurvatureC1> {
    let mut points = Vec::with_capacity(x_samples.len());
    for (i, x) in x_samples.iter().enumerate() {
        let pt = section_project(spec, x, y)?;
        if !transversality_check(&pt, TRANSVERSE_TOL) {
            return Err(Error::NonTransverseSample(i));
        }
        points.push(pt);
    }
    let (max_deviation, pair) = max_pairwise_deviation(&points);
    let witness = pair.map(|(i, j)| Witness {
        a: points[i].clone(),
        b: points[j].clone(),
        deviation: max_deviation,
    });
    Ok(CurvatureC1 {
        holds: max_deviation <= tol_angle,
        max_deviation,
        witness,
        points,
    })
}

/// Orthonormal basis of the complement of `v` (columns), empty if `dim = 1`.
pub fn orthogonal_complement(v: &[f64]) -> DMatrix<f64> {
    let d = v.len();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if d == 1 {
        return DMatrix::zeros(1, 0);
    }
    let u: Vec<f64> = v.iter().map(|a| a / norm).collect();
    // Householder reflection sending e_1 to a multiple of u.
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = DVector::from_column_slice(&u);
    w[0] += sign;
    let wn2 = w.norm_squared();
    let h = DMatrix::identity(d, d) - (&w * w.transpose()) * (2.0 / wn2);
    h.columns(1, d - 1).into_owned()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureC2 {
    pub holds: bool,
    /// `max |u^T H v| / |H|` over the points (0 where `H = 0`).
    pub max_violation: f64,
    pub violations: Vec<f64>,
}

/// Relative size of `H_xy` on `ker d_x F x ker d_y F` at one point.
pub fn restricted_mixed_violation(spec: &SymbolSpec, pt: &BoundaryPoint) -> Result<f64> {
    let h = spec.raw_mixed_hessian(&pt.x, &pt.y)?;
    let hn = h.norm();
    if hn == 0.0 {
        return Ok(0.0);
    }
    let ku = orthogonal_complement(&pt.n1);
    let kv = orthogonal_complement(&pt.n2);
    if ku.ncols() == 0 || kv.ncols() == 0 {
        return Ok(0.0);
    }
    let r = ku.transpose() * &h * kv;
    Ok(r.iter().fold(0.0f64, |a, v| a.max(v.abs())) / hn)
}

/// Mixed-Hessian form of the zero-curvature condition.
pub fn mixed_hessian_check(spec: &SymbolSpec, pts: &[BoundaryPoint], tol: f64) -> Result<CurvatureC2> {
    if !spec.has_second_derivatives() {
        return Err(Error::RequiresC2);
    }
    let violations = pts
        .iter()
        .map(|p| restricted_mixed_violation(spec, p))
        .collect::<Result<Vec<f64>>>()?;
    let max_violation = violations.iter().copied().fold(0.0, f64::max);
    Ok(CurvatureC2 {
        holds: max_violation <= tol,
        max_violation,
        violations,
    })
}

/// Local chart `(phi, psi)` around a transverse boundary point in which the
/// boundary reads `x_1 = g(x_2..x_m, y)` with `g(0, y) = y_1`.
///
/// `phi` is a rotation placing `n1` on the first axis. `psi(y)` has
/// `h(0, y)` as first coordinate (with `h` the implicit graph function in
/// the rotated `x` chart) and the components of `y` orthogonal to `n2` as
/// the rest. All maps are evaluated by one-dimensional Newton solves.
#[derive(Debug, Clone)]
pub struct NormalFormChart {
    spec: SymbolSpec,
    x0: Vec<f64>,
    y0: Vec<f64>,
    basis_x: DMatrix<f64>,
    basis_y: DMatrix<f64>,
}

/// Orthonormal basis with `v / |v|` as first column.
fn adapted_basis(v: &[f64]) -> DMatrix<f64> {
    let d = v.len();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut b = DMatrix::zeros(d, d);
    for i in 0..d {
        b[(i, 0)] = v[i] / norm;
    }
    let comp = orthogonal_complement(v);
    for j in 0..comp.ncols() {
        b.set_column(j + 1, &comp.column(j));
    }
    b
}

fn solve_scalar(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, start: f64, tol: f64) -> Result<f64> {
    let mut t = start;
    let mut ft = f(t);
    for _ in 0..MAX_PROJECTION_ITERS {
        if ft.abs() <= tol {
            return Ok(t);
        }
        let d = df(t);
        if !(d.abs() >= DEGENERATE_GRADIENT) {
            return Err(Error::DegenerateGradient(d.abs()));
        }
        let step = ft / d;
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = t - s * step;
            let fc = f(cand);
            if fc.is_finite() && fc.abs() < ft.abs() {
                t = cand;
                ft = fc;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if ft.abs() <= tol {
        Ok(t)
    } else {
        Err(Error::NoConvergence {
            iterations: MAX_PROJECTION_ITERS,
            residual: ft.abs(),
        })
    }
}

const CHART_TOL: f64 = 1e-12;

impl NormalFormChart {
    pub fn phi(&self, x: &[f64]) -> Vec<f64> {
        let d = DVector::from_iterator(x.len(), x.iter().zip(&self.x0).map(|(a, b)| a - b));
        (self.basis_x.transpose() * d).iter().copied().collect()
    }

    pub fn phi_inv(&self, xi: &[f64]) -> Vec<f64> {
        let v = &self.basis_x * DVector::from_column_slice(xi);
        v.iter().zip(&self.x0).map(|(a, b)| a + b).collect()
    }

    fn x_of(&self, s: f64, rest: &[f64]) -> Vec<f64> {
        let xi: Vec<f64> = std::iter::once(s).chain(rest.iter().copied()).collect();
        self.phi_inv(&xi)
    }

    fn dx_along_first(&self, x: &[f64], y: &[f64]) -> f64 {
        let (gx, _) = self.spec.raw_gradient(x, y);
        gx.iter().zip(self.basis_x.column(0).iter()).map(|(a, b)| a * b).sum()
    }

    /// Implicit graph `x_1 = h(x_2..x_m, y)` in the rotated `x` chart.
    pub fn h(&self, rest: &[f64], y: &[f64]) -> Result<f64> {
        solve_scalar(
            |s| self.spec.value(&self.x_of(s, rest), y),
            |s| self.dx_along_first(&self.x_of(s, rest), y),
            0.0,
            CHART_TOL,
        )
    }

    fn y_of(&self, t: f64, eta: &[f64]) -> Vec<f64> {
        let coords: Vec<f64> = std::iter::once(t).chain(eta[1..].iter().copied()).collect();
        let v = &self.basis_y * DVector::from_vec(coords);
        v.iter().zip(&self.y0).map(|(a, b)| a + b).collect()
    }

    pub fn psi(&self, y: &[f64]) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.x0.len() - 1];
        let first = self.h(&zero, y)?;
        let d = DVector::from_iterator(y.len(), y.iter().zip(&self.y0).map(|(a, b)| a - b));
        let rot = self.basis_y.transpose() * d;
        Ok(std::iter::once(first).chain(rot.iter().skip(1).copied()).collect())
    }

    pub fn psi_inv(&self, eta: &[f64]) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.x0.len() - 1];
        let target = eta[0];
        let first_col: Vec<f64> = self.basis_y.column(0).iter().copied().collect();
        let t = solve_scalar(
            |t| self.h(&zero, &self.y_of(t, eta)).map_or(f64::NAN, |v| v - target),
            |t| {
                let y = self.y_of(t, eta);
                let Ok(s) = self.h(&zero, &y) else {
                    return f64::NAN;
                };
                let x = self.x_of(s, &zero);
                let (_, gy) = self.spec.raw_gradient(&x, &y);
                let dy: f64 = gy.iter().zip(&first_col).map(|(a, b)| a * b).sum();
                -dy / self.dx_along_first(&x, &y)
            },
            0.0,
            CHART_TOL,
        )?;
        Ok(self.y_of(t, eta))
    }

    /// `g(x_2..x_m, eta) = h(x_2..x_m, psi^{-1}(eta))`.
    pub fn g(&self, rest: &[f64], eta: &[f64]) -> Result<f64> {
        let y = self.psi_inv(eta)?;
        self.h(rest, &y)
    }

    /// Sample the chart on a neighbourhood of radius `radius` and report the
    /// largest boundary residual and the largest `|g(0, eta) - eta_1|`.
    pub fn verify(&self, samples: usize, radius: f64, seed: u64) -> Result<NormalFormReport> {
        let m = self.x0.len();
        let n = self.y0.len();
        let results: Vec<Result<(f64, f64)>> = par::map_indexed(samples, |i| {
            let mut rng = rng::rng_for(seed, i as u64);
            let rest = random_in_ball(&mut rng, m - 1, radius);
            let eta = random_in_ball(&mut rng, n, radius);
            let g = self.g(&rest, &eta)?;
            let x = self.x_of(g, &rest);
            let y = self.psi_inv(&eta)?;
            let resid = self.spec.value(&x, &y).abs();
            let zero = vec![0.0; m - 1];
            let g0 = (self.g(&zero, &eta)? - eta[0]).abs();
            Ok((resid, g0))
        });
        let mut report = NormalFormReport {
            samples,
            max_residual: 0.0,
            max_g0_error: 0.0,
        };
        for r in results {
            let (a, b) = r?;
            report.max_residual = report.max_residual.max(a);
            report.max_g0_error = report.max_g0_error.max(b);
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormReport {
    pub samples: usize,
    pub max_residual: f64,
    pub max_g0_error: f64,
}

pub fn normal_form_chart(spec: &SymbolSpec, z0: &BoundaryPoint) -> Result<NormalFormChart> {
    if !transversality_check(z0, TRANSVERSE_TOL) {
        return Err(Error::NonTransverse);
    }
    Ok(NormalFormChart {
        spec: spec.clone(),
        x0: z0.x.clone(),
        y0: z0.y.clone(),
        basis_x: adapted_basis(&z0.n1),
        basis_y: adapted_basis(&z0.n2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularCheck {
    pub holds: bool,
    pub tested: usize,
    pub skipped: usize,
    pub mismatches: usize,
}

/// Compare `chi_Sigma(x, y)` with `[f1(x) > f2(y)]` on uniform samples of
/// `region`, skipping a `1e-9` band around both zero sets.
pub fn triangular_factorization_check(
    spec: &SymbolSpec,
    f1: impl Fn(&[f64]) -> f64 + Sync,
    f2: impl Fn(&[f64]) -> f64 + Sync,
    region: &DomainBox,
    samples: usize,
    seed: u64,
) -> TriangularCheck {
    const BAND: f64 = 1e-9;
    let outcomes: Vec<Option<bool>> = par::map_indexed(samples, |i| {
        let mut rng = rng::rng_for(seed, i as u64);
        let x: Vec<f64> = region.x.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect();
        let y: Vec<f64> = region.y.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect();
        let f = spec.value(&x, &y);
        let t = f1(&x) - f2(&y);
        if f.abs() < BAND || t.abs() < BAND {
            return None;
        }
        Some((f > 0.0) == (t > 0.0))
    });
    let skipped = outcomes.iter().filter(|o| o.is_none()).count();
    let mismatches = outcomes.iter().filter(|o| **o == Some(false)).count();
    TriangularCheck {
        holds: mismatches == 0,
        tested: samples - skipped,
        skipped,
        mismatches,
    }
}

pub(crate) fn random_in_ball(rng: &mut Rng, d: usize, radius: f64) -> Vec<f64> {
    if d == 0 {
        return Vec::new();
    }
    let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    g.into_iter().map(|v| v * r / n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    TriangularModel,
    CurvatureFail,
    NonTransverse,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub boundary: f64,
    pub transverse: f64,
    pub angle: f64,
    pub c2: f64,
    pub degenerate_normal: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub requested: usize,
    pub boundary_points: usize,
    pub transverse_points: usize,
    pub section_points: usize,
    pub c2_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub base_point: Option<BoundaryPoint>,
    pub c1_holds: Option<bool>,
    pub c2_holds: Option<bool>,
    pub max_angle_deviation: f64,
    pub max_c2_violation: f64,
    pub note: String,
}

/// Outcome of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub tolerances: Tolerances,
    pub samples: SampleCounts,
    pub seed: u64,
    pub symbol_id: String,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Neighbourhood radius; defaults to `0.05 *` the box scale.
    pub radius: Option<f64>,
    pub angle_tol: f64,
    pub transverse_tol: f64,
    pub c2_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: 0,
            radius: None,
            angle_tol: ANGLE_TOL,
            transverse_tol: TRANSVERSE_TOL,
            c2_tol: C2_TOL,
        }
    }
}

impl ClassifyOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Project `(x, y)` to the boundary: `y` first, then jointly.
pub fn project_point(spec: &SymbolSpec, x: &[f64], y: &[f64]) -> Result<BoundaryPoint> {
    match boundary_project(spec, x, y) {
        Ok(p) if spec.contains(&p.x, &p.y) => Ok(p),
        Ok(_) | Err(_) => joint_project(spec, x, y),
    }
}

/// Boundary points near `z` from random perturbations projected along the
/// full gradient; points leaving the box or the `2 * radius` neighbourhood
/// are redrawn.
pub fn sample_boundary_near(
    spec: &SymbolSpec,
    z: &BoundaryPoint,
    radius: f64,
    count: usize,
    seed: u64,
) -> Vec<BoundaryPoint> {
    let (m, n) = (spec.m_dim(), spec.n_dim());
    let drawn: Vec<Option<BoundaryPoint>> = par::map_indexed(count, |i| {
        let mut rng = rng::rng_for(seed, i as u64);
        for _ in 0..16 {
            let dx = random_in_ball(&mut rng, m, radius);
            let dy = random_in_ball(&mut rng, n, radius);
            let x: Vec<f64> = z.x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let y: Vec<f64> = z.y.iter().zip(&dy).map(|(a, b)| a + b).collect();
            let Ok(p) = joint_project(spec, &x, &y) else {
                continue;
            };
            let dist = p
                .x
                .iter()
                .chain(&p.y)
                .zip(z.x.iter().chain(&z.y))
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if spec.contains(&p.x, &p.y) && dist <= 2.0 * radius {
                return Some(p);
            }
        }
        None
    });
    drawn.into_iter().flatten().collect()
}

/// Decide which local model applies at the boundary point nearest `(x0, y0)`.
///
/// Non-transverse base points are reported as `NON_TRANSVERSE` unless one
/// normal component vanishes on every sample, in which case the symbol is
/// locally `{y in Omega}` (or `{x in Omega}`) and `TRIANGULAR_MODEL` is
/// returned. At transverse points the first-order section test and, when
/// second derivatives exist, the mixed-Hessian test are run on the same
/// neighbourhood; agreement gives the verdict, disagreement
/// `INCONCLUSIVE`.
pub fn classify(spec: &SymbolSpec, x0: &[f64], y0: &[f64], opts: &ClassifyOptions) -> Result<ClassificationReport> {
    if !spec.contains(x0, y0) {
        return Err(Error::OutOfDomain);
    }
    let radius = opts.radius.unwrap_or(0.05 * spec.domain().scale());
    let tolerances = Tolerances {
        boundary: BOUNDARY_TOL,
        transverse: opts.transverse_tol,
        angle: opts.angle_tol,
        c2: opts.c2_tol,
        degenerate_normal: DEGENERATE_NORMAL_TOL,
        radius,
    };
    let mut counts = SampleCounts {
        requested: opts.samples,
        boundary_points: 0,
        transverse_points: 0,
        section_points: 0,
        c2_points: 0,
    };
    let z = project_point(spec, x0, y0)?;
    let pts = sample_boundary_near(spec, &z, radius, opts.samples, rng::derive(opts.seed, 1));
    counts.boundary_points = pts.len();
    let mut report = ClassificationReport {
        verdict: Verdict::Inconclusive,
        witnesses: Vec::new(),
        tolerances,
        samples: counts,
        seed: opts.seed,
        symbol_id: spec.id().to_string(),
        diagnostics: Diagnostics {
            base_point: Some(z.clone()),
            c1_holds: None,
            c2_holds: None,
            max_angle_deviation: 0.0,
            max_c2_violation: 0.0,
            note: String::new(),
        },
    };

    if !transversality_check(&z, opts.transverse_tol) {
        let all = || std::iter::once(&z).chain(pts.iter());
        let n1_zero = all().all(|p| p.n1_norm() < DEGENERATE_NORMAL_TOL);
        let n2_zero = all().all(|p| p.n2_norm() < DEGENERATE_NORMAL_TOL);
        if !pts.is_empty() && (n1_zero || n2_zero) {
            report.verdict = Verdict::TriangularModel;
            report.diagnostics.note = format!(
                "degenerate boundary: {} vanishes at all {} samples",
                if n1_zero { "n1" } else { "n2" },
                pts.len() + 1
            );
        } else {
            report.verdict = Verdict::NonTransverse;
            report.diagnostics.note = "base point is not transverse".into();
        }
        report.samples.transverse_points = pts
            .iter()
            .filter(|p| transversality_check(p, opts.transverse_tol))
            .count();
        return Ok(report);
    }

    let transverse: Vec<BoundaryPoint> = std::iter::once(z.clone())
        .chain(pts)
        .filter(|p| transversality_check(p, opts.transverse_tol))
        .collect();
    report.samples.transverse_points = transverse.len();

    // First-order test: groups of sections through shared y's.
    let groups = 8.min(transverse.len()).max(1);
    let per_group = opts.samples.div_ceil(groups).max(2);
    let section_seed = rng::derive(opts.seed, 2);
    let group_results: Vec<Vec<BoundaryPoint>> = par::map_indexed(groups, |gi| {
        let anchor = &transverse[gi * transverse.len() / groups];
        let mut rng = rng::rng_for(section_seed, gi as u64);
        let mut out = vec![anchor.clone()];
        let mut attempts = 0;
        while out.len() < per_group && attempts < 8 * per_group {
            attempts += 1;
            let dx = random_in_ball(&mut rng, spec.m_dim(), radius);
            let x: Vec<f64> = anchor.x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let Ok(p) = section_project(spec, &x, &anchor.y) else {
                continue;
            };
            if spec.contains(&p.x, &p.y) && transversality_check(&p, opts.transverse_tol) {
                out.push(p);
            }
        }
        out
    });
    let mut max_dev = 0.0f64;
    let mut section_points = 0;
    let mut witnesses = Vec::new();
    for group in &group_results {
        section_points += group.len();
        let (dev, pair) = max_pairwise_deviation(group);
        max_dev = max_dev.max(dev);
        if let Some((i, j)) = pair {
            if dev > opts.angle_tol {
                witnesses.push(Witness {
                    a: group[i].clone(),
                    b: group[j].clone(),
                    deviation: dev,
                });
            }
        }
    }
    witnesses.sort_by(|a, b| b.deviation.total_cmp(&a.deviation));
    report.samples.section_points = section_points;
    let c1 = max_dev <= opts.angle_tol;
    report.diagnostics.c1_holds = Some(c1);
    report.diagnostics.max_angle_deviation = max_dev;
    report.witnesses = witnesses;

    let c2 = if spec.has_second_derivatives() {
        let check = mixed_hessian_check(spec, &transverse, opts.c2_tol)?;
        report.samples.c2_points = transverse.len();
        report.diagnostics.max_c2_violation = check.max_violation;
        report.diagnostics.c2_holds = Some(check.holds);
        Some(check.holds)
    } else {
        None
    };

    report.verdict = match (c1, c2) {
        (true, None | Some(true)) => Verdict::TriangularModel,
        (false, None | Some(false)) => Verdict::CurvatureFail,
        _ => {
            report.diagnostics.note = "first-order and mixed-Hessian tests disagree".into();
            Verdict::Inconclusive
        }
    };
    Ok(report)
}
