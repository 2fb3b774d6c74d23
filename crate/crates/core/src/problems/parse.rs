//! Recursive-descent parser for the inline expression grammar.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term  (('+' | '-') term)*          left-associative
//! term   := unary (('*' | '/') unary)*         left-associative
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?                  right-associative, binds
//!                                              tighter than unary minus
//! atom   := number | 'pi' | 'x'
//!         | ('abs' | 'sin' | 'cos') '(' expr ')'
//!         | '(' expr ')'
//! ```
//!
//! Numbers are unsigned decimal literals with optional fraction and
//! exponent; negative values are written with unary minus.

use thiserror::Error;

use super::expr::{BinaryOp, Expr, UnaryOp};

/// Parse failure with the byte offset into the input where it occurred.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at offset {pos}")]
    UnknownIdentifier { pos: usize, name: String },
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        input: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.input.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.input.get(self.pos) {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Expr::binary(BinaryOp::Add, lhs, rhs);
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expr::binary(BinaryOp::Sub, lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                lhs = Expr::binary(BinaryOp::Mul, lhs, rhs);
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                lhs = Expr::binary(BinaryOp::Div, lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            Ok(Expr::unary(UnaryOp::Neg, inner))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            Ok(Expr::binary(BinaryOp::Pow, base, exp))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            _ => Err(self.err("expected a number, `pi`, `x`, a function call, or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            if !self.peek().is_some_and(|c| c.is_ascii_digit()) {
                return Err(self.err("expected digits after decimal point"));
            }
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all (e.g. `2e` would be ill-formed
                // anyway, but `2` followed by an identifier is a clearer error
                // at the identifier position).
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.input[start..self.pos]).expect("ascii digits");
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            pos: start,
            message: format!("invalid number `{text}`"),
        })?;
        if !value.is_finite() {
            return Err(ParseError::Syntax {
                pos: start,
                message: format!("number `{text}` overflows"),
            });
        }
        self.skip_ws();
        Ok(Expr::Const(value))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.input[start..self.pos])
            .expect("ascii identifier")
            .to_string();
        self.skip_ws();
        match name.as_str() {
            "pi" => Ok(Expr::Pi),
            "x" => Ok(Expr::Var),
            "abs" | "sin" | "cos" => {
                let op = match name.as_str() {
                    "abs" => UnaryOp::Abs,
                    "sin" => UnaryOp::Sin,
                    _ => UnaryOp::Cos,
                };
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::unary(op, arg))
            }
            _ => Err(ParseError::UnknownIdentifier { pos: start, name }),
        }
    }
}
