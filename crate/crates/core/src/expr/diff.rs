//! Exact symbolic differentiation.

use std::collections::HashMap;

use super::{Expr, Func, Node};

struct Differ<'a> {
    var: &'a str,
    memo: HashMap<*const Node, Expr>,
    free: HashMap<*const Node, bool>,
}

impl Differ<'_> {
    fn depends(&mut self, e: &Expr) -> bool {
        if let Some(d) = self.free.get(&e.key()) {
            return *d;
        }
        let d = match e.node() {
            Node::Const(_) => false,
            Node::Var(v) => &**v == self.var,
            Node::Neg(a) | Node::Func(_, a) | Node::Apply(_, a) => self.depends(a),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => self.depends(a) || self.depends(b),
        };
        self.free.insert(e.key(), d);
        d
    }

    fn d(&mut self, e: &Expr) -> Expr {
        if let Some(done) = self.memo.get(&e.key()) {
            return done.clone();
        }
        let out = if !self.depends(e) {
            Expr::zero()
        } else {
            match e.node() {
                Node::Const(_) => Expr::zero(),
                Node::Var(_) => Expr::one(),
                Node::Neg(a) => Expr::neg(self.d(a)),
                Node::Add(a, b) => Expr::add(self.d(a), self.d(b)),
                Node::Sub(a, b) => Expr::sub(self.d(a), self.d(b)),
                Node::Mul(a, b) => {
                    let (da, db) = (self.d(a), self.d(b));
                    Expr::add(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db))
                }
                Node::Div(a, b) => {
                    let (da, db) = (self.d(a), self.d(b));
                    if db.is_const(0.0) {
                        Expr::div(da, b.clone())
                    } else {
                        let num = Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db));
                        Expr::div(num, Expr::pow(b.clone(), Expr::constant(2.0)))
                    }
                }
                Node::Pow(b, x) => {
                    if !self.depends(x) {
                        let db = self.d(b);
                        let lowered = Expr::pow(b.clone(), Expr::sub(x.clone(), Expr::one()));
                        Expr::mul(Expr::mul(x.clone(), lowered), db)
                    } else if !self.depends(b) {
                        let dx = self.d(x);
                        Expr::mul(Expr::mul(e.clone(), Expr::ln(b.clone())), dx)
                    } else {
                        let (db, dx) = (self.d(b), self.d(x));
                        let inner = Expr::add(
                            Expr::mul(dx, Expr::ln(b.clone())),
                            Expr::div(Expr::mul(x.clone(), db), b.clone()),
                        );
                        Expr::mul(e.clone(), inner)
                    }
                }
                Node::Func(f, a) => {
                    let da = self.d(a);
                    let outer = match f {
                        Func::Exp => e.clone(),
                        Func::Ln => Expr::div(Expr::one(), a.clone()),
                        Func::Sqrt => Expr::div(Expr::constant(0.5), e.clone()),
                        Func::Sin => Expr::func(Func::Cos, a.clone()),
                        Func::Cos => Expr::neg(Expr::func(Func::Sin, a.clone())),
                        Func::Tanh => Expr::sub(Expr::one(), Expr::pow(e.clone(), Expr::constant(2.0))),
                        Func::Arctan => Expr::div(
                            Expr::one(),
                            Expr::add(Expr::one(), Expr::pow(a.clone(), Expr::constant(2.0))),
                        ),
                    };
                    Expr::mul(outer, da)
                }
                Node::Apply(f, a) => {
                    let da = self.d(a);
                    Expr::mul(f.derivative(e, a), da)
                }
            }
        };
        self.memo.insert(e.key(), out.clone());
        out
    }
}

impl Expr {
    /// First derivative with respect to `var`; other variables are constants.
    pub fn diff(&self, var: &str) -> Expr {
        let var = if var == "omega" { super::OMEGA } else { var };
        Differ { var, memo: HashMap::new(), free: HashMap::new() }.d(self)
    }

    /// Derivative of the given order (`order = 0` returns the expression).
    pub fn diff_n(&self, var: &str, order: usize) -> Expr {
        (0..order).fold(self.clone(), |e, _| e.diff(var))
    }
}
