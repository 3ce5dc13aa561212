//! Small expression language for user-supplied fields `F(x, y)`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := sum (('<' | '>' | '<=' | '>=') sum)?
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'pi' | 'e' | var | func '(' expr (',' expr)? ')' | '(' expr ')'
//! var     := 'x' | 'y' | 'x' digits | 'y' digits        (x = x1, y = y1; 1-based)
//! func    := sin cos tan exp ln log sqrt abs tanh sinh cosh atan | atan2 (two args)
//! ```
//!
//! Comparisons evaluate to 1.0 or 0.0 and have zero derivative.
//! Derivatives are taken symbolically.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Y(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Tanh,
    Sinh,
    Cosh,
    Atan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Gt,
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    Atan2(Box<Expr>, Box<Expr>),
    Cmp(Cmp, Box<Expr>, Box<Expr>),
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "tanh" => Func::Tanh,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Atan => "atan",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Tanh => v.tanh(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Atan => v.atan(),
        }
    }
}

// Constructors with light constant folding so derivative trees stay small.
fn c(v: f64) -> Expr {
    Expr::Const(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => c(x + y),
        (Expr::Const(z), _) if *z == 0.0 => b,
        (_, Expr::Const(z)) if *z == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => c(x - y),
        (_, Expr::Const(z)) if *z == 0.0 => a,
        (Expr::Const(z), _) if *z == 0.0 => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => c(x * y),
        (Expr::Const(z), _) | (_, Expr::Const(z)) if *z == 0.0 => c(0.0),
        (Expr::Const(o), _) if *o == 1.0 => b,
        (_, Expr::Const(o)) if *o == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(z), _) if *z == 0.0 => c(0.0),
        (_, Expr::Const(o)) if *o == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => c(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Const(o)) if *o == 1.0 => a,
        (_, Expr::Const(z)) if *z == 0.0 => c(1.0),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.comparison()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(Var::X(i)) => x[*i],
            Expr::Var(Var::Y(i)) => y[*i],
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => {
                let base = a.eval(x, y);
                match **b {
                    Expr::Const(k) if k.fract() == 0.0 && k.abs() < 64.0 => base.powi(k as i32),
                    _ => base.powf(b.eval(x, y)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(x, y)),
            Expr::Atan2(a, b) => a.eval(x, y).atan2(b.eval(x, y)),
            Expr::Cmp(op, a, b) => {
                let (l, r) = (a.eval(x, y), b.eval(x, y));
                let t = match op {
                    Cmp::Lt => l < r,
                    Cmp::Gt => l > r,
                    Cmp::Le => l <= r,
                    Cmp::Ge => l >= r,
                };
                if t {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest variable index per factor, plus one.
    pub fn arity(&self) -> (usize, usize) {
        let mut acc = (0, 0);
        self.visit_vars(&mut |v| match v {
            Var::X(i) => acc.0 = acc.0.max(i + 1),
            Var::Y(i) => acc.1 = acc.1.max(i + 1),
        });
        acc
    }

    fn visit_vars(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.visit_vars(f),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Atan2(a, b)
            | Expr::Cmp(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Symbolic partial derivative.
    pub fn derivative(&self, v: Var) -> Expr {
        match self {
            Expr::Const(_) | Expr::Cmp(..) => c(0.0),
            Expr::Var(w) => c(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(v)),
            Expr::Add(a, b) => add(a.derivative(v), b.derivative(v)),
            Expr::Sub(a, b) => sub(a.derivative(v), b.derivative(v)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(v), (**b).clone()),
                mul((**a).clone(), b.derivative(v)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(v), (**b).clone()),
                    mul((**a).clone(), b.derivative(v)),
                ),
                pow((**b).clone(), c(2.0)),
            ),
            Expr::Pow(a, b) => {
                let da = a.derivative(v);
                let db = b.derivative(v);
                if let Expr::Const(k) = **b {
                    mul(mul(c(k), pow((**a).clone(), c(k - 1.0))), da)
                } else {
                    // d(u^w) = u^w (w' ln u + w u'/u)
                    mul(
                        self.clone(),
                        add(
                            mul(db, call(Func::Ln, (**a).clone())),
                            div(mul((**b).clone(), da), (**a).clone()),
                        ),
                    )
                }
            }
            Expr::Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Tan => div(c(1.0), pow(call(Func::Cos, inner), c(2.0))),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Ln => div(c(1.0), inner),
                    Func::Sqrt => div(c(0.5), call(Func::Sqrt, inner)),
                    Func::Abs => div(inner.clone(), call(Func::Abs, inner)),
                    Func::Tanh => sub(c(1.0), pow(call(Func::Tanh, inner), c(2.0))),
                    Func::Sinh => call(Func::Cosh, inner),
                    Func::Cosh => call(Func::Sinh, inner),
                    Func::Atan => div(c(1.0), add(c(1.0), pow(inner, c(2.0)))),
                };
                mul(outer, a.derivative(v))
            }
            Expr::Atan2(a, b) => {
                // d atan2(u, w) = (w u' - u w') / (u^2 + w^2)
                let (u, w) = ((**a).clone(), (**b).clone());
                div(
                    sub(mul(w.clone(), a.derivative(v)), mul(u.clone(), b.derivative(v))),
                    add(pow(u, c(2.0)), pow(w, c(2.0))),
                )
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(Var::X(i)) => write!(f, "x{}", i + 1),
            Expr::Var(Var::Y(i)) => write!(f, "y{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(g, a) => write!(f, "{}({a})", g.name()),
            Expr::Atan2(a, b) => write!(f, "atan2({a}, {b})"),
            Expr::Cmp(op, a, b) => {
                let s = match op {
                    Cmp::Lt => "<",
                    Cmp::Gt => ">",
                    Cmp::Le => "<=",
                    Cmp::Ge => ">=",
                };
                write!(f, "({a} {s} {b})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(&'static str),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_digit() || ch == '.' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                pos: start,
                msg: format!("bad number '{text}'"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            let two = src.get(i..i + 2);
            let op: &'static str = match (ch, two) {
                (_, Some("<=")) => "<=",
                (_, Some(">=")) => ">=",
                (_, Some("**")) => "^",
                ('+', _) => "+",
                ('-', _) => "-",
                ('*', _) => "*",
                ('/', _) => "/",
                ('^', _) => "^",
                ('(', _) => "(",
                (')', _) => ")",
                (',', _) => ",",
                ('<', _) => "<",
                ('>', _) => ">",
                _ => {
                    return Err(Error::Parse {
                        pos: i,
                        msg: format!("unexpected character '{ch}'"),
                    })
                }
            };
            i += if matches!(op, "<=" | ">=") || two == Some("**") { 2 } else { 1 };
            out.push((start, Tok::Op(op)));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn error(&self, msg: &str) -> Error {
        let pos = self.tokens.get(self.pos).map_or(usize::MAX, |t| t.0);
        Error::Parse {
            pos,
            msg: msg.to_string(),
        }
    }

    fn peek_op(&self) -> Option<&'static str> {
        match self.tokens.get(self.pos) {
            Some((_, Tok::Op(o))) => Some(o),
            _ => None,
        }
    }

    fn expect(&mut self, op: &str) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{op}'")))
        }
    }

    fn comparison(&mut self) -> Result<Expr> {
        let lhs = self.sum()?;
        let op = match self.peek_op() {
            Some("<") => Cmp::Lt,
            Some(">") => Cmp::Gt,
            Some("<=") => Cmp::Le,
            Some(">=") => Cmp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.sum()?;
        Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs)))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut e = self.product()?;
        while let Some(op @ ("+" | "-")) = self.peek_op() {
            self.pos += 1;
            let r = self.product()?;
            e = if op == "+" {
                Expr::Add(Box::new(e), Box::new(r))
            } else {
                Expr::Sub(Box::new(e), Box::new(r))
            };
        }
        Ok(e)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        while let Some(op @ ("*" | "/")) = self.peek_op() {
            self.pos += 1;
            let r = self.unary()?;
            e = if op == "*" {
                Expr::Mul(Box::new(e), Box::new(r))
            } else {
                Expr::Div(Box::new(e), Box::new(r))
            };
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some("-") {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.peek_op() == Some("+") {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some("^") {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some((_, tok)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error("unexpected end of input"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Op("(") => {
                let e = self.comparison()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Op(_) => {
                self.pos -= 1;
                Err(self.error("unexpected operator"))
            }
            Tok::Ident(name) => self.ident(&name),
        }
    }

    fn ident(&mut self, name: &str) -> Result<Expr> {
        match name {
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            "e" => return Ok(Expr::Const(std::f64::consts::E)),
            "x" => return Ok(Expr::Var(Var::X(0))),
            "y" => return Ok(Expr::Var(Var::Y(0))),
            _ => {}
        }
        if let Some(rest) = name.strip_prefix('x').or_else(|| name.strip_prefix('y')) {
            if let Ok(k) = rest.parse::<usize>() {
                if k == 0 {
                    self.pos -= 1;
                    return Err(self.error("variables are 1-based"));
                }
                return Ok(Expr::Var(if name.starts_with('x') {
                    Var::X(k - 1)
                } else {
                    Var::Y(k - 1)
                }));
            }
        }
        if name == "atan2" {
            self.expect("(")?;
            let a = self.comparison()?;
            self.expect(",")?;
            let b = self.comparison()?;
            self.expect(")")?;
            return Ok(Expr::Atan2(Box::new(a), Box::new(b)));
        }
        if let Some(f) = Func::from_name(name) {
            self.expect("(")?;
            let a = self.comparison()?;
            self.expect(")")?;
            return Ok(Expr::Call(f, Box::new(a)));
        }
        self.pos -= 1;
        Err(self.error(&format!("unknown identifier '{name}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 - 2 - 3").unwrap();
        assert_eq!(e.eval(&[], &[]), -4.0);
        let e = Expr::parse("2 ^ 3 ^ 2").unwrap();
        assert_eq!(e.eval(&[], &[]), 512.0);
        let e = Expr::parse("-x1^2 + 3*y2").unwrap();
        assert_eq!(e.eval(&[2.0], &[0.0, 1.0]), -1.0);
        assert_eq!(e.arity(), (1, 2));
        let e = Expr::parse("x > y").unwrap();
        assert_eq!(e.eval(&[0.3], &[0.2]), 1.0);
        assert_eq!(Expr::parse("1e-3 * 2").unwrap().eval(&[], &[]), 2e-3);
    }

    #[test]
    fn parse_errors_report_position() {
        assert!(matches!(Expr::parse("1 +"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("foo(1)"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("x0"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("(1"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("1 $ 2"), Err(Error::Parse { pos: 2, .. })));
    }

    #[test]
    fn derivatives_match_central_differences() {
        let srcs = [
            "sin(x1) * exp(y1) - x2^3",
            "sqrt(1 + x1^2 + y1^2) / (2 + cos(x2*y1))",
            "atan2(y1, 1 + x1) + tanh(x2 - y1) + abs(x1 - 3)",
            "x1 ^ y1 + ln(2 + x2) + sinh(x1) * cosh(y1) + atan(x2)",
        ];
        let x = [0.4, -0.3];
        let y = [0.7];
        for src in srcs {
            let e = Expr::parse(src).unwrap();
            for v in [Var::X(0), Var::X(1), Var::Y(0)] {
                let d = e.derivative(v).eval(&x, &y);
                let h = 1e-6;
                let (mut xp, mut xm, mut yp, mut ym) = (x, x, y, y);
                match v {
                    Var::X(i) => {
                        xp[i] += h;
                        xm[i] -= h;
                    }
                    Var::Y(i) => {
                        yp[i] += h;
                        ym[i] -= h;
                    }
                }
                let fd = (e.eval(&xp, &yp) - e.eval(&xm, &ym)) / (2.0 * h);
                assert!((d - fd).abs() < 1e-7 * (1.0 + d.abs()), "{src} {v:?}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("x1*(y2 - 1)^2 / sqrt(x2) >= 0.5").unwrap();
        let again = Expr::parse(&e.to_string()).unwrap();
        assert_eq!(e.eval(&[1.5, 2.0], &[0.1, 3.0]), again.eval(&[1.5, 2.0], &[0.1, 3.0]));
    }
}
