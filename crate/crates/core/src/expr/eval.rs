//! Numeric evaluation. Expressions are flattened into a [`Tape`] whose slots
//! correspond to distinct shared subtrees, so large derivative DAGs are
//! evaluated once per node rather than once per path.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use super::{Expr, Func, Node, NumericFn};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
}

/// Source of variable values.
pub trait Bindings {
    fn get(&self, name: &str) -> Option<f64>;
}

impl Bindings for HashMap<String, f64> {
    fn get(&self, name: &str) -> Option<f64> {
        HashMap::get(self, name).copied()
    }
}

impl Bindings for BTreeMap<String, f64> {
    fn get(&self, name: &str) -> Option<f64> {
        BTreeMap::get(self, name).copied()
    }
}

impl Bindings for [(&str, f64)] {
    fn get(&self, name: &str) -> Option<f64> {
        self.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Bindings for [(&str, f64); N] {
    fn get(&self, name: &str) -> Option<f64> {
        Bindings::get(self.as_slice(), name)
    }
}

/// Small ordered variable environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    vars: Vec<(String, f64)>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        match self.vars.iter_mut().find(|(k, _)| k == name) {
            Some(slot) => slot.1 = value,
            None => self.vars.push((name.to_string(), value)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl Bindings for Env {
    fn get(&self, name: &str) -> Option<f64> {
        self.vars.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, usize),
    Func(Func, usize),
    Apply(Arc<dyn NumericFn>, usize),
}

/// A compiled expression: one slot per distinct subtree, in evaluation order.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    sources: Vec<Expr>,
    var_names: Vec<String>,
}

impl Tape {
    pub fn new(e: &Expr) -> Tape {
        let mut tape = Tape { ops: Vec::new(), sources: Vec::new(), var_names: Vec::new() };
        let mut slots: HashMap<*const Node, usize> = HashMap::new();
        tape.emit(e, &mut slots);
        tape
    }

    fn emit(&mut self, root: &Expr, slots: &mut HashMap<*const Node, usize>) -> usize {
        // Iterative post-order walk: deep derivative trees would overflow the stack.
        let mut stack: Vec<(Expr, bool)> = vec![(root.clone(), false)];
        while let Some((e, expanded)) = stack.pop() {
            if slots.contains_key(&e.key()) {
                continue;
            }
            let children: Vec<&Expr> = match e.node() {
                Node::Const(_) | Node::Var(_) => vec![],
                Node::Neg(a) | Node::Func(_, a) | Node::Apply(_, a) => vec![a],
                Node::Add(a, b)
                | Node::Sub(a, b)
                | Node::Mul(a, b)
                | Node::Div(a, b)
                | Node::Pow(a, b) => vec![a, b],
            };
            if !expanded && children.iter().any(|c| !slots.contains_key(&c.key())) {
                let pending: Vec<Expr> = children.iter().map(|c| (*c).clone()).collect();
                stack.push((e, true));
                for c in pending.into_iter().rev() {
                    stack.push((c, false));
                }
                continue;
            }
            let s = |x: &Expr| slots[&x.key()];
            let op = match e.node() {
                Node::Const(c) => Op::Const(*c),
                Node::Var(v) => {
                    let idx = match self.var_names.iter().position(|n| n == &**v) {
                        Some(i) => i,
                        None => {
                            self.var_names.push(v.to_string());
                            self.var_names.len() - 1
                        }
                    };
                    Op::Var(idx)
                }
                Node::Neg(a) => Op::Neg(s(a)),
                Node::Add(a, b) => Op::Add(s(a), s(b)),
                Node::Sub(a, b) => Op::Sub(s(a), s(b)),
                Node::Mul(a, b) => Op::Mul(s(a), s(b)),
                Node::Div(a, b) => Op::Div(s(a), s(b)),
                Node::Pow(a, b) => Op::Pow(s(a), s(b)),
                Node::Func(f, a) => Op::Func(*f, s(a)),
                Node::Apply(f, a) => Op::Apply(f.clone(), s(a)),
            };
            self.ops.push(op);
            self.sources.push(e.clone());
            slots.insert(e.key(), self.ops.len() - 1);
        }
        slots[&root.key()]
    }

    /// Variables referenced by the expression.
    pub fn vars(&self) -> &[String] {
        &self.var_names
    }

    pub fn eval(&self, b: &(impl Bindings + ?Sized)) -> Result<f64, EvalError> {
        self.eval_with_max(b).map(|(v, _)| v)
    }

    /// Evaluates and also returns the largest magnitude of any subterm.
    pub fn eval_with_max(&self, b: &(impl Bindings + ?Sized)) -> Result<(f64, f64), EvalError> {
        let vals: Vec<f64> = self
            .var_names
            .iter()
            .map(|n| b.get(n).ok_or_else(|| EvalError::Unbound(n.clone())))
            .collect::<Result<_, _>>()?;
        self.run(&vals)
    }

    /// Evaluates with variable values given in the order of [`Tape::vars`].
    pub fn eval_slice(&self, vals: &[f64]) -> Result<f64, EvalError> {
        self.run(vals).map(|(v, _)| v)
    }

    fn run(&self, vals: &[f64]) -> Result<(f64, f64), EvalError> {
        let mut slot = vec![0.0; self.ops.len()];
        let mut max_abs: f64 = 0.0;
        for (i, op) in self.ops.iter().enumerate() {
            let domain = |reason: &str| EvalError::Domain {
                subexpr: self.sources[i].to_string(),
                reason: reason.to_string(),
            };
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(k) => vals[*k],
                Op::Neg(a) => -slot[*a],
                Op::Add(a, b) => slot[*a] + slot[*b],
                Op::Sub(a, b) => slot[*a] - slot[*b],
                Op::Mul(a, b) => slot[*a] * slot[*b],
                Op::Div(a, b) => {
                    if slot[*b] == 0.0 {
                        return Err(domain("division by zero"));
                    }
                    slot[*a] / slot[*b]
                }
                Op::Pow(a, b) => power(slot[*a], slot[*b]).map_err(|r| domain(r))?,
                Op::Func(f, a) => f
                    .apply(slot[*a])
                    .ok_or_else(|| domain(&format!("{} outside its real domain", f.name())))?,
                Op::Apply(f, a) => f.eval(slot[*a]).map_err(|r| domain(&r))?,
            };
            if !v.is_finite() {
                return Err(domain("non-finite value"));
            }
            max_abs = max_abs.max(v.abs());
            slot[i] = v;
        }
        Ok((*slot.last().expect("tape is never empty"), max_abs))
    }
}

fn power(base: f64, exponent: f64) -> Result<f64, &'static str> {
    let integral = exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64;
    if base == 0.0 && exponent < 0.0 {
        return Err("zero raised to a negative power");
    }
    if integral {
        return Ok(base.powi(exponent as i32));
    }
    if base < 0.0 {
        return Err("negative base with non-integer exponent");
    }
    Ok(base.powf(exponent))
}

impl Expr {
    /// One-shot evaluation. Compile a [`Tape`] when evaluating repeatedly.
    pub fn eval(&self, b: &(impl Bindings + ?Sized)) -> Result<f64, EvalError> {
        Tape::new(self).eval(b)
    }

    pub fn compile(&self) -> Tape {
        Tape::new(self)
    }
}
