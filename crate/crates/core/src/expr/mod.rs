//! Closed-form scalar expressions in `t`, `x`, `ω`, `u` and user parameters.
//!
//! Trees are immutable and share subtrees through `Arc`, so cloning is cheap
//! and derivatives of large expressions reuse the structure of their inputs.
//! The smart constructors ([`Expr::add`], [`Expr::mul`], ...) fold constants
//! and drop neutral elements; nothing else is rewritten.

mod diff;
mod eval;
mod integrate;
mod parse;
mod print;
mod zero;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

pub use eval::{Bindings, Env, EvalError, Tape};
pub use integrate::{gauss_kronrod, Antiderivative, QuadratureError};
pub use parse::ParseError;
pub use zero::{
    default_eps_zero, linspace, set_default_eps_zero, Domain, DomainError, ZeroTestError, ZERO_TEST_POINTS,
};

/// Canonical spelling of the similarity variable.
pub const OMEGA: &str = "ω";

/// Elementary functions understood by the parser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tanh,
    Arctan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Arctan => "arctan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "arctan" | "atan" => Func::Arctan,
            _ => return None,
        })
    }

    /// Applies the function, returning `None` outside its real domain.
    pub fn apply(self, v: f64) -> Option<f64> {
        match self {
            Func::Exp => Some(v.exp()),
            Func::Ln => (v > 0.0).then(|| v.ln()),
            Func::Sqrt => (v >= 0.0).then(|| v.sqrt()),
            Func::Sin => Some(v.sin()),
            Func::Cos => Some(v.cos()),
            Func::Tanh => Some(v.tanh()),
            Func::Arctan => Some(v.atan()),
        }
    }
}

/// A scalar function of one real argument that has no closed form in the DSL,
/// such as a quadrature-defined integral or a numerically inverted time map.
pub trait NumericFn: Send + Sync + fmt::Debug {
    /// Name used when printing `name(arg)`.
    fn name(&self) -> &str;
    fn eval(&self, s: f64) -> Result<f64, String>;
    /// The derivative `f'(arg)` as an expression. `applied` is the node
    /// `f(arg)` itself, which inverse maps need.
    fn derivative(&self, applied: &Expr, arg: &Expr) -> Expr;
}

/// Node of an expression tree.
#[derive(Clone, Debug)]
pub enum Node {
    Const(f64),
    Var(Arc<str>),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Expr),
    Func(Func, Expr),
    Apply(Arc<dyn NumericFn>, Expr),
}

/// Shared handle to an immutable expression tree.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Neg(a), Node::Neg(b)) => a == b,
            (Node::Add(a, b), Node::Add(c, d))
            | (Node::Sub(a, b), Node::Sub(c, d))
            | (Node::Mul(a, b), Node::Mul(c, d))
            | (Node::Div(a, b), Node::Div(c, d))
            | (Node::Pow(a, b), Node::Pow(c, d)) => a == c && b == d,
            (Node::Func(f, a), Node::Func(g, b)) => f == g && a == b,
            (Node::Apply(f, a), Node::Apply(g, b)) => {
                std::ptr::addr_eq(Arc::as_ptr(f), Arc::as_ptr(g)) && a == b
            }
            _ => false,
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::constant(v)
    }
}

impl Expr {
    fn wrap(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn key(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    /// A real constant. Non-finite values are a programming error.
    pub fn constant(v: f64) -> Expr {
        assert!(v.is_finite(), "expression constants must be finite, got {v}");
        Expr::wrap(Node::Const(v))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(name: &str) -> Expr {
        let name = if name == "omega" { OMEGA } else { name };
        Expr::wrap(Node::Var(Arc::from(name)))
    }

    pub fn t() -> Expr {
        Expr::var("t")
    }

    pub fn x() -> Expr {
        Expr::var("x")
    }

    pub fn u() -> Expr {
        Expr::var("u")
    }

    pub fn omega() -> Expr {
        Expr::var(OMEGA)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_const(&self, v: f64) -> bool {
        self.as_const() == Some(v)
    }

    pub fn neg(a: Expr) -> Expr {
        match a.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::wrap(Node::Neg(a)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::wrap(Node::Add(a, b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::wrap(Node::Sub(a, b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 0.0 => Expr::zero(),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::wrap(Node::Mul(a, b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::constant(x / y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::wrap(Node::Div(a, b)),
        }
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        match (base.as_const(), exponent.as_const()) {
            (_, Some(e)) if e == 0.0 => Expr::one(),
            (_, Some(e)) if e == 1.0 => base,
            (Some(b), Some(e)) => {
                let v = b.powf(e);
                if v.is_finite() {
                    Expr::constant(v)
                } else {
                    Expr::wrap(Node::Pow(base, exponent))
                }
            }
            _ => Expr::wrap(Node::Pow(base, exponent)),
        }
    }

    pub fn powf(base: Expr, exponent: f64) -> Expr {
        Expr::pow(base, Expr::constant(exponent))
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        if let Some(v) = arg.as_const().and_then(|c| f.apply(c)) {
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        Expr::wrap(Node::Func(f, arg))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::func(Func::Exp, a)
    }

    pub fn ln(a: Expr) -> Expr {
        Expr::func(Func::Ln, a)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::func(Func::Sqrt, a)
    }

    pub fn tanh(a: Expr) -> Expr {
        Expr::func(Func::Tanh, a)
    }

    pub fn arctan(a: Expr) -> Expr {
        Expr::func(Func::Arctan, a)
    }

    pub fn apply(f: Arc<dyn NumericFn>, arg: Expr) -> Expr {
        Expr::wrap(Node::Apply(f, arg))
    }

    /// Sum of a list of terms; the empty sum is zero.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// Raw constructors that bypass simplification; used by the parser so
    /// that printing and re-parsing round-trips structurally.
    pub(crate) fn raw(node: Node) -> Expr {
        Expr::wrap(node)
    }

    /// Free variables (including parameters), sorted.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.key()) {
                continue;
            }
            match e.node() {
                Node::Const(_) => {}
                Node::Var(v) => {
                    out.insert(v.to_string());
                }
                Node::Neg(a) | Node::Func(_, a) | Node::Apply(_, a) => stack.push(a.clone()),
                Node::Add(a, b)
                | Node::Sub(a, b)
                | Node::Mul(a, b)
                | Node::Div(a, b)
                | Node::Pow(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        out
    }

    pub fn depends_on(&self, var: &str) -> bool {
        self.free_vars().contains(var)
    }

    /// Simultaneous substitution of variables by expressions. Replacements
    /// are not themselves substituted into.
    pub fn subst(&self, map: &[(&str, Expr)]) -> Expr {
        let mut memo: HashMap<*const Node, Expr> = HashMap::new();
        self.subst_inner(map, &mut memo)
    }

    pub fn subst_one(&self, var: &str, by: &Expr) -> Expr {
        self.subst(&[(var, by.clone())])
    }

    /// Substitutes numeric values for variables and folds the result.
    pub fn bind(&self, values: &[(&str, f64)]) -> Expr {
        let map: Vec<(&str, Expr)> = values.iter().map(|(k, v)| (*k, Expr::constant(*v))).collect();
        self.subst(&map)
    }

    fn subst_inner(&self, map: &[(&str, Expr)], memo: &mut HashMap<*const Node, Expr>) -> Expr {
        if let Some(done) = memo.get(&self.key()) {
            return done.clone();
        }
        let out = match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => map
                .iter()
                .find(|(k, _)| *k == &**v)
                .map(|(_, e)| e.clone())
                .unwrap_or_else(|| self.clone()),
            Node::Neg(a) => Expr::neg(a.subst_inner(map, memo)),
            Node::Add(a, b) => Expr::add(a.subst_inner(map, memo), b.subst_inner(map, memo)),
            Node::Sub(a, b) => Expr::sub(a.subst_inner(map, memo), b.subst_inner(map, memo)),
            Node::Mul(a, b) => Expr::mul(a.subst_inner(map, memo), b.subst_inner(map, memo)),
            Node::Div(a, b) => Expr::div(a.subst_inner(map, memo), b.subst_inner(map, memo)),
            Node::Pow(a, b) => Expr::pow(a.subst_inner(map, memo), b.subst_inner(map, memo)),
            Node::Func(f, a) => Expr::func(*f, a.subst_inner(map, memo)),
            Node::Apply(f, a) => Expr::apply(f.clone(), a.subst_inner(map, memo)),
        };
        memo.insert(self.key(), out.clone());
        out
    }

    /// Number of distinct nodes (shared subtrees counted once).
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.key()) {
                continue;
            }
            match e.node() {
                Node::Const(_) | Node::Var(_) => {}
                Node::Neg(a) | Node::Func(_, a) | Node::Apply(_, a) => stack.push(a.clone()),
                Node::Add(a, b)
                | Node::Sub(a, b)
                | Node::Mul(a, b)
                | Node::Div(a, b)
                | Node::Pow(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        seen.len()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $ctor:ident) => {
        impl std::ops::$tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::$ctor(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr {
                Expr::$ctor(self, Expr::constant(rhs))
            }
        }
        impl std::ops::$tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::$ctor(Expr::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
