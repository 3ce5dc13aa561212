//! Discretized symbols, norm-growth sweeps over nested grids, pullbacks and
//! the finite compression `J_p` on cyclic groups.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{schur_product, DenseMatrix, EstimatorConfig, MultiplierEstimator, C64};
use crate::rng;
use crate::symbols::{evaluate_symbol, DomainBox, Reparam, SymbolSpec};

pub const CSV_HEADER: &str = "symbol_id,p,N,lower_bound,trials,seed,wall_ms";
pub const DEFAULT_SLOPE_THRESHOLD: f64 = 0.05;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in base `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    r
}

/// First `count` Halton points (indices `1..=count`) mapped onto `bounds`,
/// using the primes starting at position `offset`.
pub fn halton_points(count: usize, bounds: &[(f64, f64)], offset: usize) -> Result<Vec<Vec<f64>>> {
    if offset + bounds.len() > PRIMES.len() {
        return Err(Error::InvalidArgument(format!(
            "Halton grids support at most {} coordinates",
            PRIMES.len()
        )));
    }
    Ok((1..=count as u64)
        .map(|i| {
            bounds
                .iter()
                .enumerate()
                .map(|(k, (lo, hi))| lo + (hi - lo) * radical_inverse(i, PRIMES[offset + k]))
                .collect()
        })
        .collect())
}

/// Points of one factor.
pub type Grid = Vec<Vec<f64>>;

/// Paired `x` and `y` grids of size `n` on the symbol's box. The `x`
/// coordinates use the first `m` Halton bases and `y` the next `n_dim`, so
/// every grid is a prefix of the next larger one.
pub fn halton_grids(domain: &DomainBox, n: usize) -> Result<(Grid, Grid)> {
    let gx = halton_points(n, &domain.x, 0)?;
    let gy = halton_points(n, &domain.y, domain.x.len())?;
    Ok((gx, gy))
}

/// `M[i][j] = chi_Sigma(gx[i], gy[j])`.
pub fn discretize_symbol(spec: &SymbolSpec, gx: &[Vec<f64>], gy: &[Vec<f64>]) -> Result<DenseMatrix> {
    let mut data = Vec::with_capacity(gx.len() * gy.len());
    for x in gx {
        for y in gy {
            data.push(C64::new(evaluate_symbol(spec, x, y)? as f64, 0.0));
        }
    }
    DenseMatrix::new(gx.len(), gy.len(), data)
}

/// `F' = F o (rx x ry)`; see [`SymbolSpec::pullback`].
pub fn pullback_symbol(spec: &SymbolSpec, rx: Reparam, ry: Reparam) -> Result<SymbolSpec> {
    spec.pullback(rx, ry)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormGrowthRecord {
    pub symbol_id: String,
    #[serde(with = "exponent_serde")]
    pub p: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub lower_bound: f64,
    pub trials: usize,
    pub seed: u64,
    pub wall_ms: u64,
}

impl NormGrowthRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            csv_field(&self.symbol_id),
            format_exponent(self.p),
            self.n,
            self.lower_bound,
            self.trials,
            self.seed,
            self.wall_ms
        )
    }
}

pub fn format_exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        p.to_string()
    }
}

/// Exponents as JSON numbers, with `"inf"` for infinity.
pub mod exponent_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Raw::Text(t) => Err(de::Error::custom(format!("bad exponent '{t}'"))),
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn records_to_csv(records: &[NormGrowthRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Random starts per grid size, on top of the warm start.
    pub trials: usize,
    pub ascent_steps: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            trials: 8,
            ascent_steps: EstimatorConfig::default().ascent_steps,
        }
    }
}

/// Lower bounds of `|S_M|_{S_p}` for the discretizations on nested grids of
/// the given sizes. The best test matrix for one size, zero-padded, seeds
/// the next, so the sequence never decreases.
pub fn norm_growth_experiment(
    spec: &SymbolSpec,
    p: f64,
    sizes: &[usize],
    sampler: &SamplerConfig,
    seed: u64,
) -> Result<Vec<NormGrowthRecord>> {
    if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("sizes must be positive and strictly increasing".into()));
    }
    let estimator = MultiplierEstimator::new(EstimatorConfig {
        ascent_steps: sampler.ascent_steps,
        ..EstimatorConfig::default()
    });
    let largest = *sizes.last().expect("nonempty");
    let (gx, gy) = halton_grids(spec.domain(), largest)?;
    let full = discretize_symbol(spec, &gx, &gy)?;
    let mut records = Vec::with_capacity(sizes.len());
    let mut warm: Option<DenseMatrix> = None;
    for &n in sizes {
        let start = Instant::now();
        let m = full.submatrix(n, n);
        let warm_starts: Vec<DenseMatrix> = warm.iter().map(|w| w.embed(n, n)).collect();
        let est = estimator.estimate(&m, p, sampler.trials.max(1), rng::derive(seed, n as u64), &warm_starts)?;
        warm = Some(est.witness);
        records.push(NormGrowthRecord {
            symbol_id: spec.id().to_string(),
            p,
            n,
            lower_bound: est.value,
            trials: sampler.trials.max(1),
            seed,
            wall_ms: start.elapsed().as_millis() as u64,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Growth,
    Plateau,
}

/// Slope of `lower_bound` against `log2 N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthSummary {
    /// Least-squares slope over all records, per doubling of `N`.
    pub slope_per_doubling: f64,
    /// Slope between the last two records, per doubling.
    pub final_slope: f64,
    pub threshold: f64,
    /// Decided from the final slope; says nothing about `N -> infinity`.
    pub trend: Trend,
}

pub fn growth_summary(records: &[NormGrowthRecord], threshold: f64) -> Option<GrowthSummary> {
    if records.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = records.iter().map(|r| ((r.n as f64).log2(), r.lower_bound)).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let (a, b) = (pts[pts.len() - 2], pts[pts.len() - 1]);
    let final_slope = (b.1 - a.1) / (b.0 - a.0);
    Some(GrowthSummary {
        slope_per_doubling: sxy / sxx,
        final_slope,
        threshold,
        trend: if final_slope > threshold {
            Trend::Growth
        } else {
            Trend::Plateau
        },
    })
}

/// Circulant matrix with `x[i][j] = c[(i - j) mod N]`.
pub fn circulant(c: &[C64]) -> DenseMatrix {
    let n = c.len();
    DenseMatrix::from_fn(n, n, |i, j| c[(i + n - j) % n])
}

/// Left-regular image of `delta_g` in `Z_N`: `e_j -> e_{j+g}`.
pub fn shift_matrix(n: usize, g: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == (j + g) % n {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// First column of a circulant, i.e. its coefficients on the shifts.
pub fn circulant_coefficients(x: &DenseMatrix) -> Result<Vec<C64>> {
    let n = x.rows();
    if x.cols() != n {
        return Err(Error::ShapeInvalid(format!("circulant must be square, got {}x{}", n, x.cols())));
    }
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

/// `T_m` on `Z_N`: multiply the shift coefficients of `x` by `m`.
pub fn cyclic_fourier_multiplier(m: &[C64], x: &DenseMatrix) -> Result<DenseMatrix> {
    let c = circulant_coefficients(x)?;
    if m.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            got: m.len(),
        });
    }
    Ok(circulant(&c.iter().zip(m).map(|(a, b)| a * b).collect::<Vec<_>>()))
}

/// Herz-Schur matrix `M[i][j] = m((i - j) mod N)`.
pub fn cyclic_herz_schur(m: &[C64]) -> DenseMatrix {
    circulant(m)
}

/// `J_p(x) = diag(phi^{1/p}) x diag(psi^{1/p})`; `p = inf` gives the
/// support projections of the weights.
pub fn compression_jp(x: &DenseMatrix, phi: &[f64], psi: &[f64], p: f64) -> Result<DenseMatrix> {
    crate::matcore::check_exponent(p)?;
    if phi.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: phi.len(),
        });
    }
    if psi.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            got: psi.len(),
        });
    }
    if let Some(i) = phi.iter().chain(psi).position(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::NegativeWeight(i));
    }
    let root = |w: f64| {
        if p.is_infinite() {
            if w > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            w.powf(1.0 / p)
        }
    };
    let a: Vec<f64> = phi.iter().map(|w| root(*w)).collect();
    let b: Vec<f64> = psi.iter().map(|w| root(*w)).collect();
    Ok(DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] * (a[i] * b[j])))
}

/// `|J_p(T_m x) - S_M(J_p x)|_F` with `M` the Herz-Schur matrix of `m`.
pub fn intertwining_defect(x: &DenseMatrix, m: &[C64], phi: &[f64], psi: &[f64], p: f64) -> Result<f64> {
    let left = compression_jp(&cyclic_fourier_multiplier(m, x)?, phi, psi, p)?;
    let right = schur_product(&cyclic_herz_schur(m), &compression_jp(x, phi, psi, p)?)?;
    Ok(left.sub(&right)?.frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{multiplier_norm_lower_bound, schatten_norm};
    use rand::Rng as _;

    fn real(m: &DenseMatrix) -> Vec<Vec<u8>> {
        (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].re as u8).collect()).collect()
    }

    #[test]
    fn halton_is_nested_and_inside() {
        let b = DomainBox::cube(2, 1, -1.0, 2.0);
        let (gx, gy) = halton_grids(&b, 64).unwrap();
        let (sx, sy) = halton_grids(&b, 16).unwrap();
        assert_eq!(&gx[..16], &sx[..]);
        assert_eq!(&gy[..16], &sy[..]);
        assert!(gx.iter().zip(&gy).all(|(x, y)| b.contains(x, y)));
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn triangular_pattern() {
        let t = SymbolSpec::triangular(10.0).unwrap();
        let gx: Vec<Vec<f64>> = (1..=5).map(|j| vec![j as f64]).collect();
        let gy: Vec<Vec<f64>> = (1..=5).map(|k| vec![k as f64 - 0.5]).collect();
        let m = discretize_symbol(&t, &gx, &gy).unwrap();
        for (j, row) in real(&m).iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                assert_eq!(*v, u8::from(j >= k));
            }
        }
        let out = vec![vec![11.0]];
        assert_eq!(discretize_symbol(&t, &out, &gy).unwrap_err(), Error::OutOfDomain);
    }

    #[test]
    fn ball_and_halfspace_patterns() {
        let b = SymbolSpec::ball(1, 1.0).unwrap();
        let g: Vec<Vec<f64>> = (0..9).map(|i| vec![-1.2 + 0.3 * i as f64]).collect();
        let m = real(&discretize_symbol(&b, &g, &g).unwrap());
        let transposed: Vec<Vec<u8>> = (0..9).map(|j| m.iter().map(|row| row[j]).collect()).collect();
        assert_eq!(m, transposed);

        let h = SymbolSpec::halfspace(vec![1.0], vec![1.0], 0.0).unwrap();
        let gx: Vec<Vec<f64>> = (0..6).map(|i| vec![-0.9 + 0.3 * i as f64]).collect();
        let gy: Vec<Vec<f64>> = (0..6).map(|i| vec![-0.8 + 0.3 * i as f64]).collect();
        let m = real(&discretize_symbol(&h, &gx, &gy).unwrap());
        for row in m.windows(2) {
            assert!(row[0].iter().zip(&row[1]).all(|(a, b)| a <= b));
        }
        for row in &m {
            assert!(row.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn pullback_transports_grids() {
        let b = SymbolSpec::ball(1, 1.0).unwrap();
        let twice = Reparam::Affine {
            scale: vec![2.0],
            shift: vec![0.0],
        };
        let p = pullback_symbol(&b, twice.clone(), twice.clone()).unwrap();
        let (gx, gy) = halton_grids(b.domain(), 24).unwrap();
        let px: Vec<Vec<f64>> = gx.iter().map(|x| twice.inverse(x).unwrap()).collect();
        let py: Vec<Vec<f64>> = gy.iter().map(|y| twice.inverse(y).unwrap()).collect();
        let m0 = discretize_symbol(&b, &gx, &gy).unwrap();
        let m1 = discretize_symbol(&p, &px, &py).unwrap();
        assert_eq!(m0, m1);
        let a = multiplier_norm_lower_bound(&m0, 4.0, 4, 9).unwrap();
        let c = multiplier_norm_lower_bound(&m1, 4.0, 4, 9).unwrap();
        assert_eq!(a, c);

        let id = pullback_symbol(&b, Reparam::Identity, Reparam::Identity).unwrap();
        assert_eq!(discretize_symbol(&id, &gx, &gy).unwrap(), m0);

        let t = SymbolSpec::triangular(4.0).unwrap();
        let cubic = Reparam::Cubic { coef: vec![0.5] };
        let tp = pullback_symbol(&t, cubic.clone(), cubic).unwrap();
        let g: Vec<Vec<f64>> = (0..8).map(|i| vec![0.1 + 0.15 * i as f64]).collect();
        let m = real(&discretize_symbol(&tp, &g, &g).unwrap());
        for (j, row) in m.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                assert_eq!(*v, u8::from(j > k));
            }
        }
    }

    #[test]
    fn p2_growth_is_flat_at_one() {
        let s = SymbolSpec::sphere_delta(2, 0.3).unwrap();
        let recs = norm_growth_experiment(&s, 2.0, &[4, 8, 16], &SamplerConfig::default(), 3).unwrap();
        for r in &recs {
            let (gx, gy) = halton_grids(s.domain(), r.n).unwrap();
            let sup = discretize_symbol(&s, &gx, &gy).unwrap().max_abs();
            assert_eq!(r.lower_bound, sup);
        }
        assert_eq!(recs.last().unwrap().lower_bound, 1.0);
    }

    #[test]
    fn growth_is_monotone_and_csv_is_exact() {
        let t = SymbolSpec::triangular(1.0).unwrap();
        let cfg = SamplerConfig {
            trials: 3,
            ascent_steps: 20,
        };
        let recs = norm_growth_experiment(&t, 4.0, &[4, 8, 16], &cfg, 5).unwrap();
        assert!(recs.windows(2).all(|w| w[1].lower_bound >= w[0].lower_bound));
        let csv = records_to_csv(&recs);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("triangular:L=1,4,4,"));
        let s = growth_summary(&recs, DEFAULT_SLOPE_THRESHOLD).unwrap();
        assert!(s.slope_per_doubling >= 0.0);
        assert_eq!(format_exponent(f64::INFINITY), "inf");

        assert!(norm_growth_experiment(&t, 4.0, &[8, 8], &cfg, 5).is_err());
    }

    #[test]
    fn transpose_duality() {
        let t = SymbolSpec::triangular(1.0).unwrap();
        let (gx, gy) = halton_grids(t.domain(), 12).unwrap();
        let m = discretize_symbol(&t, &gx, &gy).unwrap();
        let a = multiplier_norm_lower_bound(&m, 4.0, 6, 1).unwrap();
        let b = multiplier_norm_lower_bound(&m.transpose(), 4.0 / 3.0, 6, 1).unwrap();
        assert!((a - b).abs() / a < 0.02, "{a} vs {b}");
    }

    #[test]
    fn schur_idempotence() {
        let s = SymbolSpec::ball(2, 1.0).unwrap();
        let (gx, gy) = halton_grids(s.domain(), 10).unwrap();
        let m = discretize_symbol(&s, &gx, &gy).unwrap();
        let mut rng = rng::rng_for(4, 0);
        let a = DenseMatrix::from_fn(10, 10, |_, _| C64::new(rng.random(), rng.random()));
        let once = schur_product(&m, &a).unwrap();
        assert_eq!(schur_product(&m, &once).unwrap(), once);
    }

    #[test]
    fn compression_examples() {
        let mut rng = rng::rng_for(8, 0);
        let c: Vec<C64> = (0..8).map(|_| C64::new(rng.random(), rng.random())).collect();
        let x = circulant(&c);
        let ones = vec![1.0; 8];
        assert_eq!(compression_jp(&x, &ones, &ones, 4.0).unwrap(), x);

        let m: Vec<C64> = (0..8).map(|_| C64::new(rng.random(), 0.0)).collect();
        let phi: Vec<f64> = (0..8).map(|_| rng.random()).collect();
        let psi: Vec<f64> = (0..8).map(|_| rng.random()).collect();
        for g in 0..8 {
            let s = shift_matrix(8, g);
            let lhs = compression_jp(&cyclic_fourier_multiplier(&m, &s).unwrap(), &phi, &psi, 4.0).unwrap();
            let rhs = compression_jp(&s, &phi, &psi, 4.0).unwrap().scale(m[g].re);
            assert!(lhs.sub(&rhs).unwrap().frobenius_norm() <= 1e-15);
        }
        assert!(intertwining_defect(&x, &m, &phi, &psi, 4.0).unwrap() <= 1e-12);

        let mut bad = phi.clone();
        bad[3] = -0.1;
        assert_eq!(compression_jp(&x, &bad, &psi, 4.0).unwrap_err(), Error::NegativeWeight(3));
    }

    #[test]
    fn shift_matrices_are_unitary_circulants() {
        let s = shift_matrix(5, 2);
        assert_eq!(circulant_coefficients(&s).unwrap()[2], C64::new(1.0, 0.0));
        assert!((schatten_norm(&s, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
    }
}
