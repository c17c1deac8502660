use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{ExprError, Result};

pub type C64 = Complex64;

/// Unary functions closed under differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sec,
    Exp,
    Ln,
    Sqrt,
    Conj,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sec => "sec",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Conj => "conj",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sec" => Func::Sec,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "conj" => Func::Conj,
            _ => return None,
        })
    }
}

#[derive(Debug)]
pub enum Node {
    Num(f64),
    I,
    Pi,
    /// Index into the owning chart's environment (coords, then params, then defs).
    Var(u32),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Div(Expr, Expr),
    /// Power with a constant real exponent.
    Pow(Expr, f64),
    Fun(Func, Expr),
}

/// Immutable expression handle; clones are cheap and share structure.
#[derive(Clone, Debug)]
pub struct Expr(pub(crate) Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn key(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub fn num(v: f64) -> Expr {
        Expr(Arc::new(Node::Num(v)))
    }

    pub fn int(v: i64) -> Expr {
        Expr::num(v as f64)
    }

    pub fn i() -> Expr {
        Expr(Arc::new(Node::I))
    }

    pub fn pi() -> Expr {
        Expr(Arc::new(Node::Pi))
    }

    pub fn zero() -> Expr {
        Expr::num(0.0)
    }

    pub fn one() -> Expr {
        Expr::num(1.0)
    }

    pub(crate) fn var(idx: u32) -> Expr {
        Expr(Arc::new(Node::Var(idx)))
    }

    pub fn as_num(&self) -> Option<f64> {
        match self.node() {
            Node::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self.node(), Node::Num(v) if *v == 0.0)
    }

    fn is_one_literal(&self) -> bool {
        matches!(self.node(), Node::Num(v) if *v == 1.0)
    }

    /// n-ary sum with flattening, literal folding and zero elimination.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat: Vec<Expr> = Vec::with_capacity(terms.len());
        let mut c = 0.0f64;
        let mut stack: Vec<Expr> = terms;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t.node() {
                Node::Sum(inner) => {
                    for x in inner.iter().rev() {
                        stack.push(x.clone());
                    }
                }
                Node::Num(v) => c += v,
                _ => flat.push(t),
            }
        }
        if c != 0.0 || flat.is_empty() {
            flat.insert(0, Expr::num(c));
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr(Arc::new(Node::Sum(flat)))
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::sum(vec![a, b])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::sum(vec![a, Expr::neg(b)])
    }

    /// n-ary product with flattening, literal folding (including powers of i)
    /// and annihilation by literal zero.
    pub fn prod(factors: Vec<Expr>) -> Expr {
        let mut flat: Vec<Expr> = Vec::with_capacity(factors.len());
        let mut c = 1.0f64;
        let mut i_count: u32 = 0;
        let mut stack: Vec<Expr> = factors;
        stack.reverse();
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::Prod(inner) => {
                    for x in inner.iter().rev() {
                        stack.push(x.clone());
                    }
                }
                Node::Num(v) => {
                    if *v == 0.0 {
                        return Expr::zero();
                    }
                    c *= v;
                }
                Node::I => i_count = (i_count + 1) % 4,
                _ => flat.push(f),
            }
        }
        match i_count {
            1 => flat.insert(0, Expr::i()),
            2 => c = -c,
            3 => {
                c = -c;
                flat.insert(0, Expr::i());
            }
            _ => {}
        }
        if c != 1.0 || flat.is_empty() {
            flat.insert(0, Expr::num(c));
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr(Arc::new(Node::Prod(flat)))
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::prod(vec![a, b])
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::mul(Expr::num(-1.0), e)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if a.is_zero_literal() {
            return Expr::zero();
        }
        if b.is_one_literal() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
            if y.abs() > 1e-300 {
                return Expr::num(x / y);
            }
        }
        Expr(Arc::new(Node::Div(a, b)))
    }

    /// Power with a constant real exponent; folds trivial and literal cases.
    pub fn pow(base: Expr, exp: f64) -> Expr {
        if exp == 0.0 {
            return Expr::one();
        }
        if exp == 1.0 {
            return base;
        }
        if let Some(v) = base.as_num() {
            let is_int = exp.fract() == 0.0 && exp.abs() < 1e15;
            if v >= 0.0 || is_int {
                let r = v.powf(exp);
                if r.is_finite() {
                    return Expr::num(r);
                }
            }
        }
        Expr(Arc::new(Node::Pow(base, exp)))
    }

    pub fn fun(f: Func, e: Expr) -> Expr {
        if f == Func::Conj {
            return Expr::conj(e);
        }
        if let Some(v) = e.as_num() {
            let r = match f {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Tan => v.tan(),
                Func::Sec => 1.0 / v.cos(),
                Func::Exp => v.exp(),
                Func::Ln if v > 0.0 => v.ln(),
                Func::Sqrt if v >= 0.0 => v.sqrt(),
                _ => f64::NAN,
            };
            if r.is_finite() {
                return Expr::num(r);
            }
        }
        Expr(Arc::new(Node::Fun(f, e)))
    }

    pub fn sin(e: Expr) -> Expr {
        Expr::fun(Func::Sin, e)
    }
    pub fn cos(e: Expr) -> Expr {
        Expr::fun(Func::Cos, e)
    }
    pub fn tan(e: Expr) -> Expr {
        Expr::fun(Func::Tan, e)
    }
    pub fn sec(e: Expr) -> Expr {
        Expr::fun(Func::Sec, e)
    }
    pub fn exp(e: Expr) -> Expr {
        Expr::fun(Func::Exp, e)
    }
    pub fn ln(e: Expr) -> Expr {
        Expr::fun(Func::Ln, e)
    }
    pub fn sqrt(e: Expr) -> Expr {
        Expr::fun(Func::Sqrt, e)
    }

    /// Complex conjugation; involutive, and a literal on real atoms.
    pub fn conj(e: Expr) -> Expr {
        match e.node() {
            Node::Num(_) | Node::Pi => e,
            Node::I => Expr::neg(Expr::i()),
            Node::Fun(Func::Conj, inner) => inner.clone(),
            _ => Expr(Arc::new(Node::Fun(Func::Conj, e))),
        }
    }
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self.clone(), rhs.clone())
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self.clone(), rhs.clone())
    }
}

impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self.clone(), rhs.clone())
    }
}

impl std::ops::Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        Expr::div(self.clone(), rhs.clone())
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}

/// Evaluator over a fixed environment with structure-sharing memoisation.
///
/// The memo is keyed by node address; all inputs must outlive the context,
/// which the borrow on `env` and the callers' expression ownership guarantee.
pub struct EvalCtx<'a> {
    env: &'a [C64],
    memo: HashMap<*const Node, C64>,
}

impl<'a> EvalCtx<'a> {
    pub fn new(env: &'a [C64]) -> Self {
        EvalCtx {
            env,
            memo: HashMap::new(),
        }
    }

    pub fn eval(&mut self, e: &Expr) -> Result<C64> {
        if let Some(v) = self.memo.get(&e.key()) {
            return Ok(*v);
        }
        let v = self.eval_uncached(e)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(ExprError::Domain("non-finite value".into()));
        }
        self.memo.insert(e.key(), v);
        Ok(v)
    }

    fn eval_uncached(&mut self, e: &Expr) -> Result<C64> {
        Ok(match e.node() {
            Node::Num(v) => C64::new(*v, 0.0),
            Node::I => C64::new(0.0, 1.0),
            Node::Pi => C64::new(std::f64::consts::PI, 0.0),
            Node::Var(idx) => *self
                .env
                .get(*idx as usize)
                .ok_or(ExprError::EnvMismatch(*idx))?,
            Node::Sum(ts) => {
                let mut acc = C64::new(0.0, 0.0);
                for t in ts {
                    acc += self.eval(t)?;
                }
                acc
            }
            Node::Prod(fs) => {
                let mut acc = C64::new(1.0, 0.0);
                for f in fs {
                    acc *= self.eval(f)?;
                }
                acc
            }
            Node::Div(a, b) => {
                let num = self.eval(a)?;
                let den = self.eval(b)?;
                if den.norm() <= 1e-14 * (1.0 + num.norm()) {
                    return Err(ExprError::DivisionNearZero);
                }
                num / den
            }
            Node::Pow(b, r) => {
                let base = self.eval(b)?;
                if r.fract() == 0.0 && r.abs() < 1e9 {
                    let n = *r as i32;
                    if n < 0 && base.norm() <= 1e-300 {
                        return Err(ExprError::DivisionNearZero);
                    }
                    base.powi(n)
                } else {
                    if base.norm() <= 1e-300 {
                        if *r > 0.0 {
                            C64::new(0.0, 0.0)
                        } else {
                            return Err(ExprError::Domain(
                                "fractional power at branch point".into(),
                            ));
                        }
                    } else {
                        base.powf(*r)
                    }
                }
            }
            Node::Fun(f, x) => {
                let v = self.eval(x)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => {
                        let c = v.cos();
                        if c.norm() <= 1e-14 * (1.0 + v.sin().norm()) {
                            return Err(ExprError::Domain("tan at pole".into()));
                        }
                        v.sin() / c
                    }
                    Func::Sec => {
                        let c = v.cos();
                        if c.norm() <= 1e-14 {
                            return Err(ExprError::Domain("sec at pole".into()));
                        }
                        c.finv()
                    }
                    Func::Exp => v.exp(),
                    Func::Ln => {
                        if v.norm() <= 1e-300 {
                            return Err(ExprError::Domain("ln at branch point".into()));
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v.norm() <= 1e-300 {
                            C64::new(0.0, 0.0)
                        } else {
                            v.sqrt()
                        }
                    }
                    Func::Conj => v.conj(),
                }
            }
        })
    }
}

/// Exact differentiation with respect to chart coordinates.
///
/// Derivatives of chart definitions are expanded through their bodies via the
/// chain rule; results are memoised per (node, coordinate) so repeated
/// subtrees stay shared.
pub struct DiffCtx<'a> {
    defs: &'a [(String, Expr)],
    n_coords: u32,
    n_params: u32,
    memo: HashMap<(*const Node, u32), Expr>,
}

impl<'a> DiffCtx<'a> {
    pub fn new(defs: &'a [(String, Expr)], n_coords: usize, n_params: usize) -> Self {
        DiffCtx {
            defs,
            n_coords: n_coords as u32,
            n_params: n_params as u32,
            memo: HashMap::new(),
        }
    }

    /// d(e)/d(coord); `coord` indexes the chart coordinates.
    pub fn diff(&mut self, e: &Expr, coord: u32) -> Expr {
        debug_assert!(coord < self.n_coords);
        if let Some(d) = self.memo.get(&(e.key(), coord)) {
            return d.clone();
        }
        let d = self.diff_uncached(e, coord);
        self.memo.insert((e.key(), coord), d.clone());
        d
    }

    fn diff_uncached(&mut self, e: &Expr, coord: u32) -> Expr {
        match e.node() {
            Node::Num(_) | Node::I | Node::Pi => Expr::zero(),
            Node::Var(idx) => {
                if *idx == coord {
                    Expr::one()
                } else if *idx < self.n_coords + self.n_params {
                    Expr::zero()
                } else {
                    let def_idx = (*idx - self.n_coords - self.n_params) as usize;
                    let body = self.defs[def_idx].1.clone();
                    self.diff(&body, coord)
                }
            }
            Node::Sum(ts) => Expr::sum(ts.iter().map(|t| self.diff(t, coord)).collect()),
            Node::Prod(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for (i, fi) in fs.iter().enumerate() {
                    let dfi = self.diff(fi, coord);
                    if dfi.is_zero_literal() {
                        continue;
                    }
                    let mut fac: Vec<Expr> = Vec::with_capacity(fs.len());
                    fac.push(dfi);
                    for (j, fj) in fs.iter().enumerate() {
                        if j != i {
                            fac.push(fj.clone());
                        }
                    }
                    terms.push(Expr::prod(fac));
                }
                Expr::sum(terms)
            }
            Node::Div(a, b) => {
                let da = self.diff(a, coord);
                let db = self.diff(b, coord);
                Expr::div(
                    Expr::sub(
                        Expr::mul(da, b.clone()),
                        Expr::mul(a.clone(), db),
                    ),
                    Expr::pow(b.clone(), 2.0),
                )
            }
            Node::Pow(b, r) => {
                let db = self.diff(b, coord);
                Expr::prod(vec![Expr::num(*r), Expr::pow(b.clone(), r - 1.0), db])
            }
            Node::Fun(f, x) => {
                let dx = self.diff(x, coord);
                if dx.is_zero_literal() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => Expr::cos(x.clone()),
                    Func::Cos => Expr::neg(Expr::sin(x.clone())),
                    Func::Tan => Expr::pow(Expr::sec(x.clone()), 2.0),
                    Func::Sec => Expr::mul(Expr::sec(x.clone()), Expr::tan(x.clone())),
                    Func::Exp => Expr::exp(x.clone()),
                    Func::Ln => return Expr::div(dx, x.clone()),
                    Func::Sqrt => {
                        return Expr::div(
                            dx,
                            Expr::mul(Expr::num(2.0), Expr::sqrt(x.clone())),
                        )
                    }
                    Func::Conj => return Expr::conj(dx),
                };
                Expr::mul(outer, dx)
            }
        }
    }
}

/// Precedence-aware rendering; `names` maps variable indices to identifiers.
pub(crate) fn format_expr(e: &Expr, names: &[String], out: &mut String) {
    fmt_prec(e, names, 0, out);
}

// Precedence levels: 0 sum, 1 product, 2 unary, 3 power, 4 atom.
fn fmt_prec(e: &Expr, names: &[String], min_prec: u8, out: &mut String) {
    let prec = match e.node() {
        Node::Sum(_) => 0,
        Node::Prod(_) | Node::Div(_, _) => 1,
        Node::Num(v) if *v < 0.0 => 2,
        Node::Pow(_, _) => 3,
        _ => 4,
    };
    let paren = prec < min_prec;
    if paren {
        out.push('(');
    }
    match e.node() {
        Node::Num(v) => {
            out.push_str(&format!("{v}"));
        }
        Node::I => out.push('i'),
        Node::Pi => out.push_str("pi"),
        Node::Var(idx) => out.push_str(&names[*idx as usize]),
        Node::Sum(ts) => {
            for (k, t) in ts.iter().enumerate() {
                let mut s = String::new();
                fmt_prec(t, names, 1, &mut s);
                if k == 0 {
                    out.push_str(&s);
                } else if let Some(rest) = s.strip_prefix('-') {
                    out.push_str(" - ");
                    out.push_str(rest);
                } else {
                    out.push_str(" + ");
                    out.push_str(&s);
                }
            }
        }
        Node::Prod(fs) => {
            let mut rest: &[Expr] = fs;
            if let Some(v) = fs[0].as_num() {
                if v == -1.0 && fs.len() > 1 {
                    out.push('-');
                    rest = &fs[1..];
                }
            }
            for (k, f) in rest.iter().enumerate() {
                if k > 0 {
                    out.push('*');
                }
                fmt_prec(f, names, 2, out);
            }
        }
        Node::Div(a, b) => {
            fmt_prec(a, names, 1, out);
            out.push('/');
            fmt_prec(b, names, 2, out);
        }
        Node::Pow(b, r) => {
            fmt_prec(b, names, 4, out);
            out.push('^');
            if *r >= 0.0 {
                out.push_str(&format!("{r}"));
            } else {
                out.push_str(&format!("({r})"));
            }
        }
        Node::Fun(f, x) => {
            out.push_str(f.name());
            out.push('(');
            fmt_prec(x, names, 0, out);
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}
