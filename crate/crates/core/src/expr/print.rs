//! Infix printer whose output re-parses to a structurally equal tree.

use std::fmt;

use super::{Expr, Node};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => SUM,
        Node::Mul(..) | Node::Div(..) => PRODUCT,
        Node::Neg(_) => UNARY,
        Node::Const(c) if c.is_sign_negative() => UNARY,
        Node::Pow(..) => POWER,
        _ => ATOM,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if *c == 0.0 {
                    // `-0` would print as a negated literal; zero has no sign here.
                    write!(f, "0")
                } else {
                    write!(f, "{c}")
                }
            }
            Node::Var(v) => write!(f, "{v}"),
            Node::Neg(a) => {
                // `-2` parses as a literal, so a negated literal needs parentheses.
                let parens = precedence(a) < UNARY || matches!(a.node(), Node::Const(_));
                write!(f, "-")?;
                write_child(f, a, parens)
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let (op, p) = match self.node() {
                    Node::Add(..) => ("+", SUM),
                    Node::Sub(..) => ("-", SUM),
                    Node::Mul(..) => ("*", PRODUCT),
                    _ => ("/", PRODUCT),
                };
                write_child(f, a, precedence(a) < p)?;
                write!(f, "{op}")?;
                write_child(f, b, precedence(b) <= p)
            }
            Node::Pow(a, b) => {
                write_child(f, a, precedence(a) <= POWER)?;
                write!(f, "^")?;
                write_child(f, b, precedence(b) < UNARY)
            }
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
            Node::Apply(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
