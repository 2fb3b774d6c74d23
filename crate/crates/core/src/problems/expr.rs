//! Expression trees for user-defined objective and constraint functions.
//!
//! An [`Expr`] is evaluated exactly as parsed: no constant folding and no
//! re-association, so a given tree produces the same bit pattern on every
//! run on one platform.

use std::fmt;

use thiserror::Error;

/// Error raised when an expression cannot be evaluated to a finite real.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("{op} produced a non-finite value at x = {x}")]
    NonFinite { op: &'static str, x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// One branch of a piecewise expression: used when `x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceBranch {
    pub upper: f64,
    pub expr: Expr,
}

/// Abstract syntax tree over the single variable `x`.
///
/// `Piecewise` only appears as the root of a function loaded from a problem
/// file; the inline grammar has no piecewise syntax.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Pi,
    Var,
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Piecewise {
        branches: Vec<PieceBranch>,
        otherwise: Box<Expr>,
    },
}

impl Expr {
    pub fn unary(op: UnaryOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Builds a piecewise expression, checking that thresholds strictly increase.
    pub fn piecewise(branches: Vec<PieceBranch>, otherwise: Expr) -> Result<Expr, String> {
        for w in branches.windows(2) {
            if w[0].upper >= w[1].upper {
                return Err(format!(
                    "piecewise thresholds must strictly increase: {} then {}",
                    w[0].upper, w[1].upper
                ));
            }
        }
        for b in &branches {
            if !b.upper.is_finite() {
                return Err(format!("piecewise threshold {} is not finite", b.upper));
            }
        }
        Ok(Expr::Piecewise {
            branches,
            otherwise: Box::new(otherwise),
        })
    }

    /// Evaluates the tree at `x`. Branch selection is closed on the left
    /// boundary: the first branch with `x <= upper` is taken.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Var => Ok(x),
            Expr::Unary(op, e) => {
                let v = e.eval(x)?;
                let out = match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Abs => v.abs(),
                    UnaryOp::Sin => v.sin(),
                    UnaryOp::Cos => v.cos(),
                };
                check_finite(out, op_name_unary(*op), x)
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval(x)?;
                let b = rhs.eval(x)?;
                let out = match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero { x });
                        }
                        a / b
                    }
                    BinaryOp::Pow => a.powf(b),
                };
                check_finite(out, op_name_binary(*op), x)
            }
            Expr::Piecewise {
                branches,
                otherwise,
            } => {
                for b in branches {
                    if x <= b.upper {
                        return b.expr.eval(x);
                    }
                }
                otherwise.eval(x)
            }
        }
    }
}

fn check_finite(v: f64, op: &'static str, x: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite { op, x })
    }
}

fn op_name_unary(op: UnaryOp) -> &'static str {
    match op {
        UnaryOp::Neg => "neg",
        UnaryOp::Abs => "abs",
        UnaryOp::Sin => "sin",
        UnaryOp::Cos => "cos",
    }
}

fn op_name_binary(op: BinaryOp) -> &'static str {
    match op {
        BinaryOp::Add => "add",
        BinaryOp::Sub => "sub",
        BinaryOp::Mul => "mul",
        BinaryOp::Div => "div",
        BinaryOp::Pow => "pow",
    }
}

// Precedence levels used when rendering back to the inline grammar.
// Higher binds tighter. Must agree with the parser in `parse`.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(_) | Expr::Pi | Expr::Var => 4,
        Expr::Unary(UnaryOp::Neg, _) => 2,
        Expr::Unary(_, _) => 4, // named calls are self-delimiting
        Expr::Binary(BinaryOp::Pow, _, _) => 3,
        Expr::Binary(BinaryOp::Mul, _, _) | Expr::Binary(BinaryOp::Div, _, _) => 1,
        Expr::Binary(BinaryOp::Add, _, _) | Expr::Binary(BinaryOp::Sub, _, _) => 0,
        Expr::Piecewise { .. } => 0,
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(child) < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    /// Renders to a string that re-parses to the identical tree (piecewise
    /// roots are rendered by the problem-file emitter instead).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var => write!(f, "x"),
            Expr::Unary(UnaryOp::Neg, e) => {
                write!(f, "-")?;
                // The operand of unary minus must bind at least as tightly as
                // the minus itself, and `-` before `^` needs the parens kept.
                fmt_child(f, e, 3)
            }
            Expr::Unary(op, e) => {
                let name = match op {
                    UnaryOp::Abs => "abs",
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({e})")
            }
            Expr::Binary(op, lhs, rhs) => match op {
                BinaryOp::Add => {
                    fmt_child(f, lhs, 0)?;
                    write!(f, " + ")?;
                    fmt_child(f, rhs, 1)
                }
                BinaryOp::Sub => {
                    fmt_child(f, lhs, 0)?;
                    write!(f, " - ")?;
                    fmt_child(f, rhs, 1)
                }
                BinaryOp::Mul => {
                    fmt_child(f, lhs, 1)?;
                    write!(f, " * ")?;
                    fmt_child(f, rhs, 2)
                }
                BinaryOp::Div => {
                    fmt_child(f, lhs, 1)?;
                    write!(f, " / ")?;
                    fmt_child(f, rhs, 2)
                }
                BinaryOp::Pow => {
                    // Right-associative; the base must be an atom.
                    fmt_child(f, lhs, 4)?;
                    write!(f, "^")?;
                    fmt_child(f, rhs, 2)
                }
            },
            Expr::Piecewise {
                branches,
                otherwise,
            } => {
                // Debug rendering only; not part of the inline grammar.
                write!(f, "piecewise(")?;
                for b in branches {
                    write!(f, "x <= {} -> {}; ", b.upper, b.expr)?;
                }
                write!(f, "else -> {otherwise})")
            }
        }
    }
}
