//! Infix grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?        exponent must fold to a constant
//! primary := number | x<i> | y<i> | func '(' expr ')' | '(' expr ')'
//! func    := sqrt | exp | log | sin | cos
//! ```

use std::fmt;

use super::{Expr, Var, MAX_DIM};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Byte offset into the source where the problem was detected.
    pub offset: usize,
    pub expected: String,
    pub excerpt: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: expected {} near `{}`", self.offset, self.expected, self.excerpt)
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    dim: usize,
}

/// Parses `text` as an expression over `x1..x{dim}` and `y1..y{dim}`.
pub fn parse(text: &str, dim: usize) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text, bytes: text.as_bytes(), pos: 0, dim };
    if dim == 0 || dim > MAX_DIM {
        return Err(p.error(0, format!("dimension between 1 and {MAX_DIM}")));
    }
    p.skip_ws();
    if p.pos == p.bytes.len() {
        return Err(p.error(p.pos, "an expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error(p.pos, "operator or end of input"));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn error(&self, offset: usize, expected: impl Into<String>) -> ParseError {
        let mut start = offset.saturating_sub(8);
        while !self.src.is_char_boundary(start) {
            start -= 1;
        }
        let mut end = (offset + 8).min(self.src.len());
        while !self.src.is_char_boundary(end) {
            end += 1;
        }
        ParseError { offset, expected: expected.into(), excerpt: self.src[start..end].to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
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

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat(b'/') {
                acc = acc.div(&self.unary()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(self.unary()?.neg())
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let at = {
                self.skip_ws();
                self.pos
            };
            let exponent = self.unary()?;
            match exponent.as_const() {
                Some(c) => Ok(base.powf(c)),
                None => Err(self.error(at, "a constant exponent")),
            }
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = match self.peek() {
            Some(_) => self.pos,
            None => return Err(self.error(self.pos, "an operand")),
        };
        let c = self.bytes[start];
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error(self.pos, "`)`"));
            }
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let mut end = start;
            while end < self.bytes.len() && self.bytes[end].is_ascii_alphanumeric() {
                end += 1;
            }
            let word = &self.src[start..end];
            self.pos = end;
            let func: Option<fn(&Expr) -> Expr> = match word {
                "sqrt" => Some(Expr::sqrt),
                "exp" => Some(Expr::exp),
                "log" => Some(Expr::ln),
                "sin" => Some(Expr::sin),
                "cos" => Some(Expr::cos),
                _ => None,
            };
            if let Some(func) = func {
                if !self.eat(b'(') {
                    return Err(self.error(self.pos, format!("`(` after `{word}`")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error(self.pos, "`)`"));
                }
                return Ok(func(&arg));
            }
            return self.variable(word, start);
        }
        Err(self.error(start, "a number, variable, function or `(`"))
    }

    fn variable(&self, word: &str, start: usize) -> Result<Expr, ParseError> {
        let (head, digits) = word.split_at(1);
        let index: Option<usize> =
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) { digits.parse().ok() } else { None };
        match (head, index) {
            (_, Some(i)) if i == 0 || i > self.dim => {
                Err(self.error(start, format!("variable index between 1 and {}", self.dim)))
            }
            ("x", Some(i)) => Ok(Expr::var(Var::x(i - 1))),
            ("y", Some(i)) => Ok(Expr::var(Var::y(i - 1))),
            _ => Err(self.error(start, format!("a variable x1..x{0}, y1..y{0} or a known function", self.dim))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let b = self.bytes;
        let mut end = start;
        while end < b.len() && (b[end].is_ascii_digit() || b[end] == b'.') {
            end += 1;
        }
        if end < b.len() && (b[end] == b'e' || b[end] == b'E') {
            let mut k = end + 1;
            if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                k += 1;
            }
            if k < b.len() && b[k].is_ascii_digit() {
                while k < b.len() && b[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = end;
                Ok(Expr::constant(v))
            }
            _ => Err(self.error(start, "a finite number")),
        }
    }
}
