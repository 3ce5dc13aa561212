//! Idempotent symbols `chi_Sigma` with `Sigma = {F > 0}` on a product chart
//! `R^m x R^n`, their derivatives, and the JSON symbol schema.

pub mod expr;
pub mod reparam;

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::matcore::{DenseMatrix, C64};

pub use expr::Expr;
pub use reparam::Reparam;

/// Relative step for central-difference gradients.
pub const FD_GRADIENT_STEP: f64 = 1e-5;
/// Relative step for the four-point mixed-derivative stencil.
pub const FD_HESSIAN_STEP: f64 = 1e-4;
/// Gradients below this norm are treated as vanishing.
pub const DEGENERATE_GRADIENT: f64 = 1e-12;

/// Axis-aligned bounding box of the chart, one interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub x: Vec<(f64, f64)>,
    pub y: Vec<(f64, f64)>,
}

impl DomainBox {
    pub fn cube(m: usize, n: usize, lo: f64, hi: f64) -> Self {
        Self {
            x: vec![(lo, hi); m],
            y: vec![(lo, hi); n],
        }
    }

    pub fn contains_x(&self, x: &[f64]) -> bool {
        x.len() == self.x.len() && x.iter().zip(&self.x).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn contains_y(&self, y: &[f64]) -> bool {
        y.len() == self.y.len() && y.iter().zip(&self.y).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn contains(&self, x: &[f64], y: &[f64]) -> bool {
        self.contains_x(x) && self.contains_y(y)
    }

    /// Largest side length.
    pub fn scale(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }

    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        for (lo, hi) in self.x.iter().chain(&self.y) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidSymbol(format!("empty box interval [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Orthographic chart of `S^n` around `sign * e_axis` in `R^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereChart {
    pub axis: usize,
    pub sign: f64,
}

impl SphereChart {
    /// Point of `S^n` for chart coordinates `u` (|u| < 1).
    pub fn embed(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let s = (1.0 - u.iter().map(|v| v * v).sum::<f64>()).max(0.0).sqrt();
        let mut out = Vec::with_capacity(n + 1);
        let mut it = u.iter();
        for k in 0..=n {
            if k == self.axis {
                out.push(self.sign * s);
            } else {
                out.push(*it.next().expect("n coordinates"));
            }
        }
        out
    }

    /// Columns are `d embed / d u_i`.
    pub fn differential(&self, u: &[f64]) -> DMatrix<f64> {
        let n = u.len();
        let s = (1.0 - u.iter().map(|v| v * v).sum::<f64>()).max(1e-300).sqrt();
        DMatrix::from_fn(n + 1, n, |k, i| {
            if k == self.axis {
                -self.sign * u[i] / s
            } else {
                let slot = if k < self.axis { k } else { k - 1 };
                if slot == i {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }
}

/// The built-in symbol families.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    /// `<X(x), Y(y)> > delta` for points of `S^n` in orthographic charts.
    SphereDelta {
        n: usize,
        delta: f64,
        chart_x: SphereChart,
        chart_y: SphereChart,
    },
    /// `|x|^2 + |y|^2 < R^2`.
    Ball { n: usize, radius: f64 },
    /// `<a, x> + c > <b, y>`.
    Halfspace { a: Vec<f64>, b: Vec<f64>, c: f64 },
    /// `|x - y|^2 < R^2`.
    ToeplitzBall { n: usize, radius: f64 },
    /// `x > y` on the line.
    Triangular { length: f64 },
}

impl Builtin {
    pub fn sphere_delta(n: usize, delta: f64) -> Self {
        Builtin::SphereDelta {
            n,
            delta,
            chart_x: SphereChart { axis: n, sign: 1.0 },
            chart_y: SphereChart { axis: 0, sign: 1.0 },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::SphereDelta { .. } => "sphere_delta",
            Builtin::Ball { .. } => "ball",
            Builtin::Halfspace { .. } => "halfspace",
            Builtin::ToeplitzBall { .. } => "toeplitz_ball",
            Builtin::Triangular { .. } => "triangular",
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Builtin::SphereDelta { n, .. } | Builtin::Ball { n, .. } | Builtin::ToeplitzBall { n, .. } => {
                (*n, *n)
            }
            Builtin::Halfspace { a, b, .. } => (a.len(), b.len()),
            Builtin::Triangular { .. } => (1, 1),
        }
    }

    fn id(&self) -> String {
        match self {
            Builtin::SphereDelta { n, delta, .. } => format!("sphere_delta:n={n}:delta={delta}"),
            Builtin::Ball { n, radius } => format!("ball:n={n}:R={radius}"),
            Builtin::Halfspace { a, b, c } => format!("halfspace:a={a:?}:b={b:?}:c={c}").replace(", ", ";"),
            Builtin::ToeplitzBall { n, radius } => format!("toeplitz_ball:n={n}:R={radius}"),
            Builtin::Triangular { length } => format!("triangular:L={length}"),
        }
    }

    fn default_box(&self) -> DomainBox {
        let (m, n) = self.dims();
        match self {
            Builtin::SphereDelta { n, .. } => {
                let r = 0.9 / (*n as f64).sqrt();
                DomainBox::cube(*n, *n, -r, r)
            }
            Builtin::Ball { radius, .. } => DomainBox::cube(m, n, -1.5 * radius, 1.5 * radius),
            Builtin::ToeplitzBall { radius, .. } => DomainBox::cube(m, n, -2.0 * radius, 2.0 * radius),
            Builtin::Halfspace { .. } => DomainBox::cube(m, n, -1.0, 1.0),
            Builtin::Triangular { length } => DomainBox::cube(1, 1, 0.0, *length),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSymbol(msg.to_string()));
        match self {
            Builtin::SphereDelta {
                n,
                delta,
                chart_x,
                chart_y,
            } => {
                if *n == 0 {
                    return bad("sphere_delta needs n >= 1");
                }
                if !(*delta > -1.0 && *delta < 1.0) {
                    return bad("sphere_delta needs delta in (-1, 1)");
                }
                if chart_x.axis > *n || chart_y.axis > *n {
                    return bad("chart axis out of range");
                }
                if chart_x.sign.abs() != 1.0 || chart_y.sign.abs() != 1.0 {
                    return bad("chart sign must be +1 or -1");
                }
            }
            Builtin::Ball { n, radius } | Builtin::ToeplitzBall { n, radius } => {
                if *n == 0 || !(*radius > 0.0 && radius.is_finite()) {
                    return bad("ball needs n >= 1 and R > 0");
                }
            }
            Builtin::Halfspace { a, b, c } => {
                if a.is_empty() || b.is_empty() || !c.is_finite() {
                    return bad("halfspace needs nonempty a, b");
                }
                if a.iter().all(|v| *v == 0.0) || b.iter().all(|v| *v == 0.0) {
                    return bad("halfspace coefficients must be nonzero");
                }
            }
            Builtin::Triangular { length } => {
                if !(*length > 0.0 && length.is_finite()) {
                    return bad("triangular needs length > 0");
                }
            }
        }
        Ok(())
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Builtin::SphereDelta {
                delta,
                chart_x,
                chart_y,
                ..
            } => dot(&chart_x.embed(x), &chart_y.embed(y)) - delta,
            Builtin::Ball { radius, .. } => radius * radius - dot(x, x) - dot(y, y),
            Builtin::Halfspace { a, b, c } => dot(a, x) + c - dot(b, y),
            Builtin::ToeplitzBall { radius, .. } => {
                radius * radius - x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()
            }
            Builtin::Triangular { .. } => x[0] - y[0],
        }
    }

    fn gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            Builtin::SphereDelta { chart_x, chart_y, .. } => {
                let (ex, ey) = (chart_x.embed(x), chart_y.embed(y));
                let gx = chart_x.differential(x).transpose() * nalgebra::DVector::from_vec(ey);
                let gy = chart_y.differential(y).transpose() * nalgebra::DVector::from_vec(ex);
                (gx.iter().copied().collect(), gy.iter().copied().collect())
            }
            Builtin::Ball { .. } => (
                x.iter().map(|v| -2.0 * v).collect(),
                y.iter().map(|v| -2.0 * v).collect(),
            ),
            Builtin::Halfspace { a, b, .. } => (a.clone(), b.iter().map(|v| -v).collect()),
            Builtin::ToeplitzBall { .. } => {
                let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
                (
                    d.iter().map(|v| -2.0 * v).collect(),
                    d.iter().map(|v| 2.0 * v).collect(),
                )
            }
            Builtin::Triangular { .. } => (vec![1.0], vec![-1.0]),
        }
    }

    fn mixed_hessian(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let (m, n) = (x.len(), y.len());
        match self {
            Builtin::SphereDelta { chart_x, chart_y, .. } => {
                chart_x.differential(x).transpose() * chart_y.differential(y)
            }
            Builtin::ToeplitzBall { .. } => DMatrix::identity(m, n) * 2.0,
            Builtin::Ball { .. } | Builtin::Halfspace { .. } | Builtin::Triangular { .. } => {
                DMatrix::zeros(m, n)
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Which derivatives a symbol provides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// Exact first and mixed second derivatives.
    #[default]
    Analytic,
    /// Central differences for both.
    FiniteDifference,
    /// Only a (finite-difference) gradient; no second derivatives.
    C1,
}

#[derive(Debug, Clone)]
struct ExprField {
    source: String,
    f: Expr,
    grad_x: Vec<Expr>,
    grad_y: Vec<Expr>,
    mixed: Vec<Vec<Expr>>,
}

#[derive(Debug, Clone)]
enum Field {
    Builtin(Builtin),
    Expr(Box<ExprField>),
    Pullback {
        base: Arc<SymbolSpec>,
        rx: Reparam,
        ry: Reparam,
    },
    Swapped(Arc<SymbolSpec>),
}

/// An idempotent symbol given by a scalar field on a product chart.
#[derive(Debug, Clone)]
pub struct SymbolSpec {
    id: String,
    m_dim: usize,
    n_dim: usize,
    field: Field,
    domain: DomainBox,
    smoothness: Smoothness,
}

impl SymbolSpec {
    pub fn builtin(b: Builtin) -> Result<Self> {
        b.validate()?;
        let (m_dim, n_dim) = b.dims();
        Ok(Self {
            id: b.id(),
            m_dim,
            n_dim,
            domain: b.default_box(),
            field: Field::Builtin(b),
            smoothness: Smoothness::Analytic,
        })
    }

    pub fn sphere_delta(n: usize, delta: f64) -> Result<Self> {
        Self::builtin(Builtin::sphere_delta(n, delta))
    }

    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        Self::builtin(Builtin::Ball { n, radius })
    }

    pub fn toeplitz_ball(n: usize, radius: f64) -> Result<Self> {
        Self::builtin(Builtin::ToeplitzBall { n, radius })
    }

    /// `f1(x) = <a,x> + c`, `f2(y) = <b,y>`.
    pub fn halfspace(a: Vec<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        Self::builtin(Builtin::Halfspace { a, b, c })
    }

    pub fn triangular(length: f64) -> Result<Self> {
        Self::builtin(Builtin::Triangular { length })
    }

    /// User field from an expression in `x1..xm, y1..yn`.
    pub fn from_expr(source: &str, m_dim: usize, n_dim: usize, domain: DomainBox) -> Result<Self> {
        if m_dim == 0 || n_dim == 0 {
            return Err(Error::InvalidSymbol("dimensions must be >= 1".into()));
        }
        let f = Expr::parse(source)?;
        let (am, an) = f.arity();
        if am > m_dim || an > n_dim {
            return Err(Error::InvalidSymbol(format!(
                "expression uses x{am}/y{an} beyond dimensions ({m_dim}, {n_dim})"
            )));
        }
        if domain.x.len() != m_dim || domain.y.len() != n_dim {
            return Err(Error::InvalidSymbol("box does not match dimensions".into()));
        }
        domain.validate()?;
        let grad_x: Vec<Expr> = (0..m_dim).map(|i| f.derivative(expr::Var::X(i))).collect();
        let grad_y: Vec<Expr> = (0..n_dim).map(|k| f.derivative(expr::Var::Y(k))).collect();
        let mixed = grad_x
            .iter()
            .map(|gx| (0..n_dim).map(|k| gx.derivative(expr::Var::Y(k))).collect())
            .collect();
        Ok(Self {
            id: format!("expr:{source}").replace(',', ";"),
            m_dim,
            n_dim,
            field: Field::Expr(Box::new(ExprField {
                source: source.to_string(),
                f,
                grad_x,
                grad_y,
                mixed,
            })),
            domain,
            smoothness: Smoothness::Analytic,
        })
    }

    /// `F'(x, y) = F(rx(x), ry(y))` on the preimage of the domain box.
    pub fn pullback(&self, rx: Reparam, ry: Reparam) -> Result<Self> {
        rx.validate(self.m_dim)?;
        ry.validate(self.n_dim)?;
        let domain = DomainBox {
            x: preimage_box(&rx, &self.domain.x)?,
            y: preimage_box(&ry, &self.domain.y)?,
        };
        Ok(Self {
            id: format!("pullback({})", self.id),
            m_dim: self.m_dim,
            n_dim: self.n_dim,
            field: Field::Pullback {
                base: Arc::new(self.clone()),
                rx,
                ry,
            },
            domain,
            smoothness: self.smoothness,
        })
    }

    /// The transposed symbol `(x, y) -> chi(y, x)`.
    pub fn swapped(&self) -> Self {
        Self {
            id: format!("swap({})", self.id),
            m_dim: self.n_dim,
            n_dim: self.m_dim,
            field: Field::Swapped(Arc::new(self.clone())),
            domain: self.domain.swapped(),
            smoothness: self.smoothness,
        }
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Result<Self> {
        if domain.x.len() != self.m_dim || domain.y.len() != self.n_dim {
            return Err(Error::InvalidSymbol("box does not match dimensions".into()));
        }
        domain.validate()?;
        self.domain = domain;
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn m_dim(&self) -> usize {
        self.m_dim
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn builtin_kind(&self) -> Option<&Builtin> {
        match &self.field {
            Field::Builtin(b) => Some(b),
            _ => None,
        }
    }

    pub fn has_second_derivatives(&self) -> bool {
        self.smoothness != Smoothness::C1
    }

    pub fn contains(&self, x: &[f64], y: &[f64]) -> bool {
        self.domain.contains(x, y)
    }

    fn check_point(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.m_dim {
            return Err(Error::DimensionMismatch {
                expected: self.m_dim,
                got: x.len(),
            });
        }
        if y.len() != self.n_dim {
            return Err(Error::DimensionMismatch {
                expected: self.n_dim,
                got: y.len(),
            });
        }
        if !self.domain.contains(x, y) {
            return Err(Error::OutOfDomain);
        }
        Ok(())
    }

    /// `F(x, y)` without a domain check.
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.field {
            Field::Builtin(b) => b.value(x, y),
            Field::Expr(e) => e.f.eval(x, y),
            Field::Pullback { base, rx, ry } => base.value(&rx.apply(x), &ry.apply(y)),
            Field::Swapped(base) => base.value(y, x),
        }
    }

    /// `(d_x F, d_y F)` without domain or degeneracy checks.
    pub fn raw_gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        if self.smoothness != Smoothness::Analytic {
            return self.fd_gradient(x, y);
        }
        self.analytic_gradient(x, y)
    }

    fn analytic_gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match &self.field {
            Field::Builtin(b) => b.gradient(x, y),
            Field::Expr(e) => (
                e.grad_x.iter().map(|g| g.eval(x, y)).collect(),
                e.grad_y.iter().map(|g| g.eval(x, y)).collect(),
            ),
            Field::Pullback { base, rx, ry } => {
                let (gx, gy) = base.raw_gradient(&rx.apply(x), &ry.apply(y));
                let jx = rx.jacobian(x);
                let jy = ry.jacobian(y);
                let gx = jx.transpose() * nalgebra::DVector::from_vec(gx);
                let gy = jy.transpose() * nalgebra::DVector::from_vec(gy);
                (gx.iter().copied().collect(), gy.iter().copied().collect())
            }
            Field::Swapped(base) => {
                let (gx, gy) = base.raw_gradient(y, x);
                (gy, gx)
            }
        }
    }

    /// Central differences with step `1e-5 * (1 + |(x, y)|)`.
    pub fn fd_gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = FD_GRADIENT_STEP * (1.0 + (dot(x, x) + dot(y, y)).sqrt());
        let mut gx = Vec::with_capacity(x.len());
        let mut xs = x.to_vec();
        for i in 0..x.len() {
            xs[i] = x[i] + h;
            let fp = self.value(&xs, y);
            xs[i] = x[i] - h;
            let fm = self.value(&xs, y);
            xs[i] = x[i];
            gx.push((fp - fm) / (2.0 * h));
        }
        let mut gy = Vec::with_capacity(y.len());
        let mut ys = y.to_vec();
        for k in 0..y.len() {
            ys[k] = y[k] + h;
            let fp = self.value(x, &ys);
            ys[k] = y[k] - h;
            let fm = self.value(x, &ys);
            ys[k] = y[k];
            gy.push((fp - fm) / (2.0 * h));
        }
        (gx, gy)
    }

    /// `(d_{x_j} d_{y_k} F)` without a domain check.
    pub fn raw_mixed_hessian(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        match self.smoothness {
            Smoothness::C1 => Err(Error::RequiresC2),
            Smoothness::FiniteDifference => Ok(self.fd_mixed_hessian(x, y)),
            Smoothness::Analytic => Ok(match &self.field {
                Field::Builtin(b) => b.mixed_hessian(x, y),
                Field::Expr(e) => DMatrix::from_fn(self.m_dim, self.n_dim, |j, k| e.mixed[j][k].eval(x, y)),
                Field::Pullback { base, rx, ry } => {
                    let h = base.raw_mixed_hessian(&rx.apply(x), &ry.apply(y))?;
                    rx.jacobian(x).transpose() * h * ry.jacobian(y)
                }
                Field::Swapped(base) => base.raw_mixed_hessian(y, x)?.transpose(),
            }),
        }
    }

    /// Four-point stencil with step `1e-4 * (1 + |(x, y)|)`.
    pub fn fd_mixed_hessian(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let h = FD_HESSIAN_STEP * (1.0 + (dot(x, x) + dot(y, y)).sqrt());
        mixed_stencil(|a, b| self.value(a, b), x, y, h)
    }
}

/// `(F(x+h e_j, y+h e_k) - F(x+h e_j, y-h e_k) - F(x-h e_j, y+h e_k) + F(x-h e_j, y-h e_k)) / 4h^2`.
pub fn mixed_stencil(f: impl Fn(&[f64], &[f64]) -> f64, x: &[f64], y: &[f64], h: f64) -> DMatrix<f64> {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    DMatrix::from_fn(x.len(), y.len(), |j, k| {
        let mut acc = 0.0;
        for (sx, sy, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
            xs[j] = x[j] + sx * h;
            ys[k] = y[k] + sy * h;
            acc += w * f(&xs, &ys);
        }
        xs[j] = x[j];
        ys[k] = y[k];
        acc / (4.0 * h * h)
    })
}

fn preimage_box(map: &Reparam, bounds: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let d = bounds.len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for corner in 0..(1usize << d) {
        let c: Vec<f64> = (0..d)
            .map(|i| if corner >> i & 1 == 0 { bounds[i].0 } else { bounds[i].1 })
            .collect();
        let pre = map.inverse(&c)?;
        for i in 0..d {
            lo[i] = lo[i].min(pre[i]);
            hi[i] = hi[i].max(pre[i]);
        }
    }
    Ok(lo.into_iter().zip(hi).collect())
}

/// `1` iff `F(x, y) > 0`.
pub fn evaluate_symbol(spec: &SymbolSpec, x: &[f64], y: &[f64]) -> Result<u8> {
    spec.check_point(x, y)?;
    Ok(u8::from(spec.value(x, y) > 0.0))
}

/// `(d_x F, d_y F)` at a point of the domain.
pub fn gradient(spec: &SymbolSpec, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.check_point(x, y)?;
    let (gx, gy) = spec.raw_gradient(x, y);
    let norm = (dot(&gx, &gx) + dot(&gy, &gy)).sqrt();
    if !(norm >= DEGENERATE_GRADIENT) {
        return Err(Error::DegenerateGradient(norm));
    }
    Ok((gx, gy))
}

/// `m x n` matrix of mixed second derivatives.
pub fn mixed_hessian(spec: &SymbolSpec, x: &[f64], y: &[f64]) -> Result<DenseMatrix> {
    spec.check_point(x, y)?;
    let h = spec.raw_mixed_hessian(x, y)?;
    Ok(DenseMatrix::from_fn(h.nrows(), h.ncols(), |i, j| C64::new(h[(i, j)], 0.0)))
}

/// A point of `{F = 0}` with the unit normal split `(n1, n2)` pointing into
/// `Sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n1: Vec<f64>,
    pub n2: Vec<f64>,
    pub residual: f64,
}

impl BoundaryPoint {
    /// Attach the normalized gradient at `(x, y)`; no projection is done.
    pub fn at(spec: &SymbolSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let (gx, gy) = spec.raw_gradient(&x, &y);
        let norm = (dot(&gx, &gx) + dot(&gy, &gy)).sqrt();
        if !(norm >= DEGENERATE_GRADIENT) {
            return Err(Error::DegenerateGradient(norm));
        }
        let residual = spec.value(&x, &y).abs();
        Ok(Self {
            n1: gx.iter().map(|v| v / norm).collect(),
            n2: gy.iter().map(|v| v / norm).collect(),
            x,
            y,
            residual,
        })
    }

    pub fn n1_norm(&self) -> f64 {
        dot(&self.n1, &self.n1).sqrt()
    }

    pub fn n2_norm(&self) -> f64 {
        dot(&self.n2, &self.n2).sqrt()
    }
}

/// JSON form of a symbol:
/// `{"m_dim", "n_dim", "builtin", "params", "expr", "box"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolJson {
    pub m_dim: usize,
    pub n_dim: usize,
    pub builtin: Option<String>,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub expr: Option<String>,
    #[serde(rename = "box")]
    pub domain: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivatives: Option<Smoothness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

fn param_f64(params: &Map<String, Value>, keys: &[&str], default: f64) -> Result<f64> {
    for k in keys {
        if let Some(v) = params.get(*k) {
            return v
                .as_f64()
                .ok_or_else(|| Error::InvalidSymbol(format!("param '{k}' must be a number")));
        }
    }
    Ok(default)
}

fn param_usize(params: &Map<String, Value>, key: &str, default: usize) -> Result<usize> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .map(|u| u as usize)
            .ok_or_else(|| Error::InvalidSymbol(format!("param '{key}' must be a nonnegative integer"))),
    }
}

fn param_vec(params: &Map<String, Value>, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
    match params.get(key) {
        None => Ok(default),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| Error::InvalidSymbol(format!("param '{key}' must hold numbers")))
            })
            .collect(),
        Some(_) => Err(Error::InvalidSymbol(format!("param '{key}' must be an array"))),
    }
}

fn unit(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    v
}

impl SymbolJson {
    pub fn into_spec(self) -> Result<SymbolSpec> {
        if self.m_dim == 0 || self.n_dim == 0 {
            return Err(Error::InvalidSymbol("m_dim and n_dim must be >= 1".into()));
        }
        let domain = match &self.domain {
            None => None,
            Some(b) => {
                if b.len() != self.m_dim + self.n_dim {
                    return Err(Error::InvalidSymbol(format!(
                        "box has {} intervals, expected {}",
                        b.len(),
                        self.m_dim + self.n_dim
                    )));
                }
                Some(DomainBox {
                    x: b[..self.m_dim].iter().map(|r| (r[0], r[1])).collect(),
                    y: b[self.m_dim..].iter().map(|r| (r[0], r[1])).collect(),
                })
            }
        };
        let spec = match (&self.builtin, &self.expr) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidSymbol("give either builtin or expr, not both".into()))
            }
            (None, None) => return Err(Error::InvalidSymbol("missing builtin or expr".into())),
            (None, Some(src)) => {
                let domain = domain
                    .clone()
                    .ok_or_else(|| Error::InvalidSymbol("expression symbols need a box".into()))?;
                SymbolSpec::from_expr(src, self.m_dim, self.n_dim, domain)?
            }
            (Some(name), None) => {
                let p = &self.params;
                let chart = |prefix: &str, default_axis: usize| -> Result<SphereChart> {
                    let axis = param_usize(p, &format!("axis_{prefix}"), default_axis)?;
                    let sign = param_f64(p, &[&format!("sign_{prefix}")], 1.0)?;
                    Ok(SphereChart { axis, sign })
                };
                let b = match name.as_str() {
                    "sphere_delta" => {
                        let n = param_usize(p, "n", self.m_dim)?;
                        Builtin::SphereDelta {
                            n,
                            delta: param_f64(p, &["delta"], 0.0)?,
                            chart_x: chart("x", n)?,
                            chart_y: chart("y", 0)?,
                        }
                    }
                    "ball" => Builtin::Ball {
                        n: param_usize(p, "n", self.m_dim)?,
                        radius: param_f64(p, &["R", "radius"], 1.0)?,
                    },
                    "toeplitz_ball" => Builtin::ToeplitzBall {
                        n: param_usize(p, "n", self.m_dim)?,
                        radius: param_f64(p, &["R", "radius"], 1.0)?,
                    },
                    "halfspace" => Builtin::Halfspace {
                        a: param_vec(p, "a", unit(self.m_dim))?,
                        b: param_vec(p, "b", unit(self.n_dim))?,
                        c: param_f64(p, &["c"], 0.0)?,
                    },
                    "triangular" => Builtin::Triangular {
                        length: param_f64(p, &["length"], 1.0)?,
                    },
                    other => return Err(Error::InvalidSymbol(format!("unknown builtin '{other}'"))),
                };
                if b.dims() != (self.m_dim, self.n_dim) {
                    return Err(Error::InvalidSymbol(format!(
                        "builtin '{name}' has dimensions {:?}, config says ({}, {})",
                        b.dims(),
                        self.m_dim,
                        self.n_dim
                    )));
                }
                let spec = SymbolSpec::builtin(b)?;
                match domain {
                    Some(d) => spec.with_domain(d)?,
                    None => spec,
                }
            }
        };
        let spec = spec.with_smoothness(self.derivatives.unwrap_or_default());
        Ok(match self.id {
            Some(id) => spec.with_id(id),
            None => spec,
        })
    }
}

impl SymbolSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let j: SymbolJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidSymbol(e.to_string()))?;
        j.into_spec()
    }

    /// JSON form; pullbacks and swapped symbols have none.
    pub fn to_json(&self) -> Option<SymbolJson> {
        let mut params = Map::new();
        let (builtin, expr) = match &self.field {
            Field::Builtin(b) => {
                match b {
                    Builtin::SphereDelta {
                        n,
                        delta,
                        chart_x,
                        chart_y,
                    } => {
                        params.insert("n".into(), (*n).into());
                        params.insert("delta".into(), (*delta).into());
                        params.insert("axis_x".into(), chart_x.axis.into());
                        params.insert("sign_x".into(), chart_x.sign.into());
                        params.insert("axis_y".into(), chart_y.axis.into());
                        params.insert("sign_y".into(), chart_y.sign.into());
                    }
                    Builtin::Ball { n, radius } | Builtin::ToeplitzBall { n, radius } => {
                        params.insert("n".into(), (*n).into());
                        params.insert("R".into(), (*radius).into());
                    }
                    Builtin::Halfspace { a, b, c } => {
                        params.insert("a".into(), a.clone().into());
                        params.insert("b".into(), b.clone().into());
                        params.insert("c".into(), (*c).into());
                    }
                    Builtin::Triangular { length } => {
                        params.insert("length".into(), (*length).into());
                    }
                }
                (Some(b.name().to_string()), None)
            }
            Field::Expr(e) => (None, Some(e.source.clone())),
            _ => return None,
        };
        Some(SymbolJson {
            m_dim: self.m_dim,
            n_dim: self.n_dim,
            builtin,
            params,
            expr,
            domain: Some(
                self.domain
                    .x
                    .iter()
                    .chain(&self.domain.y)
                    .map(|(lo, hi)| [*lo, *hi])
                    .collect(),
            ),
            derivatives: Some(self.smoothness),
            id: Some(self.id.clone()),
        })
    }
}
