use crate::error::{ExprError, Result};
use crate::expr::{Expr, Func};

/// Parses an expression over the identifiers resolved by `resolve`.
///
/// Grammar: `+ - * /` with usual precedence, unary minus, right-associative
/// `^` restricted to numeric literal exponents (integer, decimal or `(p/q)`),
/// function calls `f(x)`, parentheses, and the reserved constants `i`, `pi`.
pub fn parse_expr(src: &str, resolve: &dyn Fn(&str) -> Option<u32>) -> Result<Expr> {
    let mut p = Parser {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        resolve,
    };
    p.skip_ws();
    let e = p.parse_sum()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    resolve: &'a dyn Fn(&str) -> Option<u32>,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_sum(&mut self) -> Result<Expr> {
        let mut terms = vec![self.parse_term()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    terms.push(self.parse_term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    terms.push(Expr::neg(self.parse_term()?));
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut acc = self.parse_unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = Expr::mul(acc, self.parse_unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = Expr::div(acc, self.parse_unary()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        self.skip_ws();
        if self.eat(b'-') {
            return Ok(Expr::neg(self.parse_unary()?));
        }
        if self.eat(b'+') {
            return self.parse_unary();
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr> {
        let base = self.parse_atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            let exp = self.parse_exponent()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    /// Exponent: numeric literal, optionally signed, optionally a
    /// parenthesised rational `(p/q)`. Symbolic exponents are rejected.
    fn parse_exponent(&mut self) -> Result<f64> {
        self.skip_ws();
        if self.eat(b'(') {
            self.skip_ws();
            let neg = self.eat(b'-');
            self.skip_ws();
            let p = self.parse_number_literal()?;
            self.skip_ws();
            let mut val = p;
            if self.eat(b'/') {
                self.skip_ws();
                let q = self.parse_number_literal()?;
                if q == 0.0 {
                    return Err(self.err("zero denominator in exponent"));
                }
                val = p / q;
            }
            self.skip_ws();
            if !self.eat(b')') {
                return Err(self.err("expected `)` closing exponent"));
            }
            Ok(if neg { -val } else { val })
        } else {
            let neg = self.eat(b'-');
            let v = self.parse_number_literal()?;
            Ok(if neg { -v } else { v })
        }
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.parse_sum()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                Ok(Expr::num(self.parse_number_literal()?))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.parse_ident(),
            Some(_) => Err(self.err("expected expression")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn parse_number_literal(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.pos == start || (self.pos == start + 1 && self.bytes[start] == b'.') {
            self.pos = start;
            return Err(self.err("expected number"));
        }
        // Exponent part: `e`/`E` followed by optionally signed digits. Only
        // consumed when digits follow, so `2*exp(x)` stays unambiguous.
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            let _ = self.eat(b'+') || self.eat(b'-');
            let dstart = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == dstart {
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map_err(|_| self.err("malformed number"))
    }

    fn parse_ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        self.skip_ws();
        if self.peek() == Some(b'(') {
            let f = Func::from_name(name).ok_or_else(|| ExprError::Parse {
                pos: start,
                msg: format!("unknown function `{name}`"),
            })?;
            self.pos += 1;
            let arg = self.parse_sum()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(self.err("expected `)` closing call"));
            }
            return Ok(Expr::fun(f, arg));
        }
        match name {
            "i" => Ok(Expr::i()),
            "pi" => Ok(Expr::pi()),
            _ => match (self.resolve)(name) {
                Some(idx) => Ok(Expr::var(idx)),
                None => Err(ExprError::Undeclared {
                    pos: start,
                    name: name.to_string(),
                }),
            },
        }
    }
}
