use thiserror::Error;

use super::{Expr, Func};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("exponent at offset {offset} must be an integer literal")]
    NonIntegerExponent { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::NonIntegerExponent { offset } => *offset,
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text, bytes: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.syntax(format!("unexpected '{}'", p.peek_char())));
    }
    Ok(e)
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn peek_char(&self) -> char {
        self.src[self.pos..].chars().next().unwrap_or(' ')
    }

    fn syntax(&self, message: String) -> ParseError {
        ParseError::Syntax { offset: self.pos, message }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else if self.pos >= self.bytes.len() {
            Err(self.syntax(format!("expected '{}' before end of input", c as char)))
        } else {
            Err(self.syntax(format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' { Expr::add(lhs, rhs) } else { Expr::sub(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = if c == b'*' { Expr::mul(lhs, rhs) } else { Expr::div(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.integer()?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut end = start;
        if self.bytes.get(end) == Some(&b'-') {
            end += 1;
        }
        let digits = end;
        while end < self.bytes.len() && self.bytes[end].is_ascii_digit() {
            end += 1;
        }
        if end == digits {
            return Err(if start >= self.bytes.len() {
                self.syntax("expected an integer exponent before end of input".into())
            } else {
                ParseError::NonIntegerExponent { offset: start }
            });
        }
        if matches!(self.bytes.get(end), Some(b'.' | b'e' | b'E')) {
            return Err(ParseError::NonIntegerExponent { offset: start });
        }
        let n = self.src[start..end].parse().map_err(|_| ParseError::NonIntegerExponent { offset: start })?;
        self.pos = end;
        Ok(n)
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let b = self.bytes;
        let mut end = start;
        while end < b.len() && b[end].is_ascii_digit() {
            end += 1;
        }
        if end < b.len() && b[end] == b'.' {
            end += 1;
            while end < b.len() && b[end].is_ascii_digit() {
                end += 1;
            }
        }
        if end < b.len() && (b[end] == b'e' || b[end] == b'E') {
            let mut e = end + 1;
            if e < b.len() && (b[e] == b'+' || b[e] == b'-') {
                e += 1;
            }
            if e < b.len() && b[e].is_ascii_digit() {
                while e < b.len() && b[e].is_ascii_digit() {
                    e += 1;
                }
                end = e;
            }
        }
        let text = &self.src[start..end];
        let v: f64 = text.parse().map_err(|_| self.syntax(format!("malformed number '{text}'")))?;
        self.pos = end;
        Ok(Expr::Num(v))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(c) = self.peek() else {
            return Err(self.syntax("unexpected end of input".into()));
        };
        match c {
            b'-' => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.atom()?)))
            }
            b'(' => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            b'0'..=b'9' | b'.' => self.number(),
            c if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let mut end = start;
                while end < self.bytes.len() && (self.bytes[end].is_ascii_alphanumeric() || self.bytes[end] == b'_') {
                    end += 1;
                }
                let name = &self.src[start..end];
                self.pos = end;
                if let Some(func) = Func::from_name(name) {
                    self.expect(b'(')?;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if let Some(idx) = name.strip_prefix('x') {
                    if !idx.is_empty() && idx.bytes().all(|d| d.is_ascii_digit()) && !idx.starts_with('0') {
                        if let Ok(i) = idx.parse::<usize>() {
                            return Ok(Expr::Var(i - 1));
                        }
                    }
                }
                Err(ParseError::UnknownIdentifier { offset: start, name: name.to_string() })
            }
            _ => Err(self.syntax(format!("unexpected '{}'", self.peek_char()))),
        }
    }
}
