//! Expression mini-language for closed-form families.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' ['-'] INTEGER)?
//! atom   := NUMBER | 't' | 'i' | 'pi' | 'e'
//!         | ('sin' | 'cos' | 'exp') '(' expr ')' | '(' expr ')'
//! ```
//!
//! Expressions are evaluated over [`Jet`]s so derivatives up to order 3
//! come out exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval_jet(&self, t: &Jet) -> Jet {
        match self {
            Expr::Const(c) => Jet::constant(*c),
            Expr::Var => *t,
            Expr::Neg(a) => -a.eval_jet(t),
            Expr::Add(a, b) => a.eval_jet(t) + b.eval_jet(t),
            Expr::Sub(a, b) => a.eval_jet(t) - b.eval_jet(t),
            Expr::Mul(a, b) => a.eval_jet(t) * b.eval_jet(t),
            Expr::Div(a, b) => a.eval_jet(t) / b.eval_jet(t),
            Expr::Pow(a, n) => a.eval_jet(t).powi(*n),
            Expr::Sin(a) => a.eval_jet(t).sin_cos().0,
            Expr::Cos(a) => a.eval_jet(t).sin_cos().1,
            Expr::Exp(a) => a.eval_jet(t).exp(),
        }
    }

    /// Jet of the expression at parameter value `t`.
    pub fn jet_at(&self, t: f64) -> Jet {
        self.eval_jet(&Jet::variable(t))
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, ch: u8) -> bool {
        if self.peek() == Some(ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let negative = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("exponent must be an integer literal"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let n: i32 = digits
            .parse()
            .map_err(|_| self.error("exponent out of range"))?;
        Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => self.number(),
            Some(ch) if ch.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match ident {
                    "t" => Ok(Expr::Var),
                    "i" => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
                    "pi" => Ok(Expr::Const(Complex64::new(std::f64::consts::PI, 0.0))),
                    "e" => Ok(Expr::Const(Complex64::new(std::f64::consts::E, 0.0))),
                    "sin" | "cos" | "exp" => {
                        if !self.eat(b'(') {
                            return Err(self.error("expected '(' after function name"));
                        }
                        let arg = Box::new(self.expr()?);
                        if !self.eat(b')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(match ident {
                            "sin" => Expr::Sin(arg),
                            "cos" => Expr::Cos(arg),
                            _ => Expr::Exp(arg),
                        })
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(&format!("unknown identifier '{ident}'")))
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src;
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            // Only an exponent if digits follow; otherwise `e` is left for the caller.
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&bytes[start..i]).unwrap();
        let v: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
        self.pos = i;
        Ok(Expr::Const(Complex64::new(v, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn precedence_and_unary() {
        let e = Expr::parse("1 + 2*t^2 - -t/4").unwrap();
        let v = e.jet_at(2.0).value();
        assert!(close(v, Complex64::new(1.0 + 8.0 + 0.5, 0.0)));
        let e = Expr::parse("-t^2").unwrap();
        assert!(close(e.jet_at(3.0).value(), Complex64::new(-9.0, 0.0)));
    }

    #[test]
    fn complex_exponential_derivatives() {
        // c(t) = 2 e^{it} at t = 0: c = 2, c' = 2i, c'' = -2, c''' = -2i
        let e = Expr::parse("2*exp(i*t)").unwrap();
        let d = e.jet_at(0.0).derivatives();
        assert!(close(d[0], Complex64::new(2.0, 0.0)));
        assert!(close(d[1], Complex64::new(0.0, 2.0)));
        assert!(close(d[2], Complex64::new(-2.0, 0.0)));
        assert!(close(d[3], Complex64::new(0.0, -2.0)));
    }

    #[test]
    fn scientific_literals_and_constants() {
        let e = Expr::parse("1.5e-1 + pi*0 + e^0").unwrap();
        assert!(close(e.jet_at(0.0).value(), Complex64::new(1.15, 0.0)));
        let e = Expr::parse("2e").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "t +", "sin t", "foo(t)", "t^x", "(t", "t)"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
    }
}
