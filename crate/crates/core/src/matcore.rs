//! Dense complex matrices, singular values, Schatten norms, Schur products
//! and randomized lower bounds for Schur-multiplier norms on `S_p`.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::par;
use crate::rng::{self, Rng};

pub type C64 = Complex64;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| {
                    if z.im == 0.0 {
                        format!("{:.4}", z.re)
                    } else {
                        format!("{:.4}{:+.4}i", z.re, z.im)
                    }
                })
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ShapeInvalid(format!("{rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeInvalid(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Build from nested rows of reals. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_real(r, c, &flat)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| C64::new(0.0, 0.0))
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| C64::new(1.0, 0.0))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
    }

    /// Matrix unit `E_ij`.
    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(i, j)] = C64::new(1.0, 0.0);
        m
    }

    pub fn diag(values: &[C64]) -> Self {
        Self::from_fn(values.len(), values.len(), |i, j| {
            if i == j {
                values[i]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        check_same_shape(self, other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        let product = self.to_faer() * other.to_faer();
        Ok(Self::from_faer(product.as_ref()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `sup |M(i,j)|`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Real inner product `Re Tr(B* A)`.
    pub fn real_inner(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Top-left `rows x cols` block.
    pub fn submatrix(&self, rows: usize, cols: usize) -> Self {
        assert!(rows <= self.rows && cols <= self.cols);
        Self::from_fn(rows, cols, |i, j| self[(i, j)])
    }

    /// Zero-pad into a larger `rows x cols` matrix, keeping this one in the
    /// top-left corner.
    pub fn embed(&self, rows: usize, cols: usize) -> Self {
        assert!(rows >= self.rows && cols >= self.cols);
        Self::from_fn(rows, cols, |i, j| {
            if i < self.rows && j < self.cols {
                self[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    fn to_faer(&self) -> faer::Mat<C64> {
        faer::Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j])
    }

    fn from_faer(m: faer::MatRef<'_, C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

fn check_same_shape(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

/// Nonincreasing list of singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `(sum s_i^p)^(1/p)`, or `max s_i` for `p = inf`.
    pub fn schatten(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        Ok(lp_norm(&self.values, p))
    }
}

/// Full SVD `A = U diag(s) V*` with singular values sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v_adjoint: DenseMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> DenseMatrix {
        let k = self.singular_values.len();
        let us = DenseMatrix::from_fn(self.u.rows(), k, |i, j| {
            self.u[(i, j)] * self.singular_values[j]
        });
        us.matmul(&self.v_adjoint).expect("conforming SVD factors")
    }
}

/// Thin SVD, sorted with a stable descending order.
pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let decomposition = a
        .to_faer()
        .thin_svd()
        .map_err(|_| Error::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        })?;
    let (u, v) = (decomposition.U(), decomposition.V());
    let s: Vec<f64> = decomposition
        .S()
        .column_vector()
        .iter()
        .map(|z| z.re.max(0.0))
        .collect();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let k = order.len();
    let u_sorted = DenseMatrix::from_fn(a.rows(), k, |i, j| u[(i, order[j])]);
    let vt_sorted = DenseMatrix::from_fn(k, a.cols(), |i, j| v[(j, order[i])].conj());
    Ok(Svd {
        u: u_sorted,
        singular_values: order.iter().map(|&i| s[i]).collect(),
        v_adjoint: vt_sorted,
    })
}

pub fn singular_spectrum(a: &DenseMatrix) -> Result<SingularSpectrum> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut values: Vec<f64> = a
        .to_faer()
        .singular_values()
        .map_err(|_| Error::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        })?
        .into_iter()
        .map(|s| s.max(0.0))
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(SingularSpectrum { values })
}

pub fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// Conjugate exponent `q` with `1/p + 1/q = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Scaled l_p norm of a nonnegative list.
pub(crate) fn lp_norm(values: &[f64], p: f64) -> f64 {
    let top = values.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return top;
    }
    let s: f64 = values.iter().map(|v| (v / top).powf(p)).sum();
    top * s.powf(1.0 / p)
}

/// Schatten p-norm. `p = 2` is computed from the entries directly.
pub fn schatten_norm(a: &DenseMatrix, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if p == 2.0 {
        return Ok(a.frobenius_norm());
    }
    singular_spectrum(a)?.schatten(p)
}

/// Entrywise product `S_M(A) = (M_jk A_jk)`.
pub fn schur_product(m: &DenseMatrix, a: &DenseMatrix) -> Result<DenseMatrix> {
    m.zip_with(a, |x, y| x * y)
}

/// Element `Y` of the unit sphere of `S_{p'}` with `Re<X, Y> = |X|_p`.
///
/// Returns `None` for the zero matrix.
pub fn norming_element(x: &DenseMatrix, p: f64) -> Result<Option<DenseMatrix>> {
    check_exponent(p)?;
    Ok(norming_from_svd(&svd(x)?, p).map(|(y, _)| y))
}

/// Norming element built from a precomputed SVD, with the singular values
/// of the result.
fn norming_from_svd(svd: &Svd, p: f64) -> Option<(DenseMatrix, Vec<f64>)> {
    let top = svd.singular_values.first().copied().unwrap_or(0.0);
    if top <= f64::MIN_POSITIVE {
        return None;
    }
    let weights: Vec<f64> = if p.is_infinite() {
        svd.singular_values
            .iter()
            .enumerate()
            .map(|(i, _)| if i == 0 { 1.0 } else { 0.0 })
            .collect()
    } else if p == 1.0 {
        let cut = top * 1e-12 * (svd.u.rows().max(svd.v_adjoint.cols()) as f64);
        svd.singular_values
            .iter()
            .map(|&s| if s > cut { 1.0 } else { 0.0 })
            .collect()
    } else {
        let norm = lp_norm(&svd.singular_values, p);
        svd.singular_values
            .iter()
            .map(|&s| (s / norm).powf(p - 1.0))
            .collect()
    };
    // Only columns with nonzero weight contribute.
    let keep: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] != 0.0).collect();
    let uw = DenseMatrix::from_fn(svd.u.rows(), keep.len(), |i, j| svd.u[(i, keep[j])] * weights[keep[j]]);
    let vk = DenseMatrix::from_fn(keep.len(), svd.v_adjoint.cols(), |i, j| svd.v_adjoint[(keep[i], j)]);
    let y = uw.matmul(&vk).expect("conforming SVD factors");
    Some((y, weights))
}

/// Settings for [`MultiplierEstimator`].
#[derive(Debug, Clone, Copy)]
pub struct EstimatorConfig {
    /// Ascent steps per start.
    pub ascent_steps: usize,
    /// Relative improvement below which an ascent stops early.
    pub stall_tol: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            ascent_steps: 50,
            stall_tol: 1e-12,
        }
    }
}

/// Best lower bound found and the test matrix attaining it.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub value: f64,
    pub witness: DenseMatrix,
    /// Index of the winning start; warm starts come after the random trials.
    pub start: usize,
}

/// Randomized lower bounds of `|S_M|_{S_p -> S_p}`.
///
/// Each trial draws a start (matrix unit at the largest `|M|` entry for
/// trial 0, then alternating complex Gaussian and rank-one Gaussian
/// matrices) and refines it by a generalized power ascent: with `D` the
/// norming functional of `M o A` in `S_q`, the next iterate is the
/// `S_p`-norming element of `conj(M) o D`. Every step keeps
/// `|M o A|_p / |A|_p` nondecreasing.
#[derive(Debug, Clone, Copy, Default)]
pub struct MultiplierEstimator {
    pub config: EstimatorConfig,
}

impl MultiplierEstimator {
    pub fn new(config: EstimatorConfig) -> Self {
        Self { config }
    }

    pub fn estimate(
        &self,
        m: &DenseMatrix,
        p: f64,
        budget: usize,
        seed: u64,
        warm_starts: &[DenseMatrix],
    ) -> Result<Estimate> {
        check_exponent(p)?;
        if budget == 0 {
            return Err(Error::InvalidArgument("budget must be at least 1".into()));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        for w in warm_starts {
            check_same_shape(m, w)?;
        }
        let total = budget + warm_starts.len();
        let results: Vec<Result<(f64, DenseMatrix)>> = par::map_indexed(total, |t| {
            let start = if t < budget {
                self.random_start(m, t, seed)
            } else {
                warm_starts[t - budget].clone()
            };
            self.ascend(m, p, start)
        });
        let mut best: Option<Estimate> = None;
        for (t, r) in results.into_iter().enumerate() {
            let (value, witness) = r?;
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(Estimate {
                    value,
                    witness,
                    start: t,
                });
            }
        }
        Ok(best.expect("at least one start"))
    }

    fn random_start(&self, m: &DenseMatrix, trial: usize, seed: u64) -> DenseMatrix {
        let (rows, cols) = m.shape();
        if trial == 0 {
            let (mut bi, mut bj, mut bv) = (0, 0, -1.0);
            for i in 0..rows {
                for j in 0..cols {
                    let v = m[(i, j)].norm();
                    if v > bv {
                        (bi, bj, bv) = (i, j, v);
                    }
                }
            }
            return DenseMatrix::unit(rows, cols, bi, bj);
        }
        let mut rng = rng::rng_for(seed, trial as u64);
        if trial % 2 == 1 {
            DenseMatrix::from_fn(rows, cols, |_, _| gaussian_c64(&mut rng))
        } else {
            let u: Vec<C64> = (0..rows).map(|_| gaussian_c64(&mut rng)).collect();
            let v: Vec<C64> = (0..cols).map(|_| gaussian_c64(&mut rng)).collect();
            DenseMatrix::from_fn(rows, cols, |i, j| u[i] * v[j].conj())
        }
    }

    /// Ratio `|M o A|_p / |A|_p` and the best iterate reached from `start`.
    pub fn ascend(&self, m: &DenseMatrix, p: f64, start: DenseMatrix) -> Result<(f64, DenseMatrix)> {
        let q = conjugate_exponent(p);
        let m_conj = m.conj();
        let mut a_norm = schatten_norm(&start, p)?;
        if a_norm == 0.0 {
            return Ok((0.0, start));
        }
        let mut a = start;
        let mut b = schur_product(m, &a)?;
        let mut b_svd = svd(&b)?;
        let mut best = spectrum_norm(&b, &b_svd, p) / a_norm;
        let mut best_a = a.clone();
        for _ in 0..self.config.ascent_steps {
            let Some((d, _)) = norming_from_svd(&b_svd, p) else {
                break;
            };
            let c = schur_product(&m_conj, &d)?;
            let Some((next, weights)) = norming_from_svd(&svd(&c)?, q) else {
                break;
            };
            a = next;
            a_norm = if p == 2.0 { a.frobenius_norm() } else { lp_norm(&weights, p) };
            b = schur_product(m, &a)?;
            b_svd = svd(&b)?;
            let r = spectrum_norm(&b, &b_svd, p) / a_norm;
            if r > best {
                let gain = r - best;
                best = r;
                best_a = a.clone();
                if gain <= self.config.stall_tol * best {
                    break;
                }
            } else {
                break;
            }
        }
        Ok((best, best_a))
    }
}

/// Same convention as [`schatten_norm`]: `p = 2` comes from the entries.
fn spectrum_norm(x: &DenseMatrix, svd: &Svd, p: f64) -> f64 {
    if p == 2.0 {
        x.frobenius_norm()
    } else {
        lp_norm(&svd.singular_values, p)
    }
}

pub(crate) fn gaussian_c64(rng: &mut Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// `max_A |M o A|_p / |A|_p` over `budget` seeded trials with default
/// ascent settings.
pub fn multiplier_norm_lower_bound(m: &DenseMatrix, p: f64, budget: usize, seed: u64) -> Result<f64> {
    Ok(MultiplierEstimator::default()
        .estimate(m, p, budget, seed, &[])?
        .value)
}

/// Lower-triangular 0/1 pattern `chi_{j >= k}`.
pub fn lower_triangular_ones(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| C64::new(if i >= j { 1.0 } else { 0.0 }, 0.0))
}

/// Haar-like random unitary from the QR factorization of a complex Gaussian.
pub fn random_unitary(n: usize, rng: &mut Rng) -> DenseMatrix {
    let g = DenseMatrix::from_fn(n, n, |_, _| gaussian_c64(rng)).to_nalgebra();
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // Fix column phases so the distribution does not depend on QR sign choices.
    let q = DMatrix::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        q[(i, j)] * phase
    });
    DenseMatrix::from_nalgebra(&q)
}
