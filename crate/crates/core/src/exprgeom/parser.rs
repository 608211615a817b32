//! Recursive-descent parser for the catalog expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' '-'? integer)?
//! base   := number | ident | func '(' expr ')' | '(' expr ')'
//! func   := exp | log | sin | cos | sinh | cosh | sqrt
//! ```
//!
//! Identifiers `x0..x3` are the chart coordinates; anything else must be a
//! declared parameter.

use std::collections::BTreeMap;

use super::expr::{Expr, Func};
use crate::error::{Error, Result};

/// Named parameters visible to the parser.
pub type Params = BTreeMap<String, f64>;

pub fn parse_expr(source: &str) -> Result<Expr> {
    parse_expr_with(source, &Params::new())
}

pub fn parse_expr_with(source: &str, params: &Params) -> Result<Expr> {
    let mut p = Parser { src: source.as_bytes(), pos: 0, params };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    params: &'a Params,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Syntax { offset: self.pos, message: msg.to_string() }
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = Expr::Add(acc.into(), self.term()?.into());
            } else if self.eat(b'-') {
                acc = Expr::Sub(acc.into(), self.term()?.into());
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = Expr::Mul(acc.into(), self.factor()?.into());
            } else if self.eat(b'/') {
                acc = Expr::Div(acc.into(), self.factor()?.into());
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(self.factor()?.into()));
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("expected integer exponent"));
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let n: i32 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: "exponent out of range".into(),
            })?;
            return Ok(Expr::Pow(base.into(), if neg { -n } else { n }));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
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
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            digits(self);
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if exp_start == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::Syntax { offset: start, message: format!("bad number `{text}`") })
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(func) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.error("expected '(' after function name"));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(Expr::Func(func, arg.into()));
        }
        if let Some(i) = name.strip_prefix('x').and_then(|d| d.parse::<u8>().ok()) {
            if i < 4 && name.len() == 2 {
                return Ok(Expr::Var(i));
            }
        }
        match self.params.get(name) {
            Some(v) => Ok(Expr::param(name, *v)),
            None => Err(Error::UnknownIdentifier { offset: start, name: name.to_string() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_quadratic_form() {
        let e = parse_expr("x1*x1 - x0*x0").unwrap();
        assert_eq!(e.eval_f64(&[1.0, 2.0, 0.0, 0.0]).unwrap(), 3.0);
    }

    #[test]
    fn differentiates_exponential() {
        let e = parse_expr("exp(2*x0)").unwrap();
        assert_eq!(e.diff(0).eval_f64(&[0.0; 4]).unwrap(), 2.0);
    }

    #[test]
    fn parameters_resolve() {
        let params = Params::from([("H".to_string(), 1.0)]);
        let e = parse_expr_with("1/(H*x0)^2", &params).unwrap();
        assert_eq!(e.eval_f64(&[2.0, 0.0, 0.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn error_offsets() {
        match parse_expr("x0 + foo") {
            Err(Error::UnknownIdentifier { offset, name }) => {
                assert_eq!(offset, 5);
                assert_eq!(name, "foo");
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_expr("x0 + (x1") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_expr("x4"), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse_expr("sin x0"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn exponent_forms() {
        let e = parse_expr("x0^-2 + 1.5e-1 - -x1").unwrap();
        let v = e.eval_f64(&[2.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((v - (0.25 + 0.15 + 1.0)).abs() < 1e-15);
    }
}
