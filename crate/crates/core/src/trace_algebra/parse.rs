//! Text syntax for trace polynomials.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | factor
//! factor := number | 'tr' '(' word ')' ('^' int)? | '(' expr ')'
//! word   := atom+
//! atom   := 'X' int '*'?
//! number := real 'i'? | 'i'
//! ```
//!
//! Whitespace is ignored. The printer emits the same syntax with monomials in
//! canonical order, so `parse(&p.to_string())` reproduces `p`.

use std::fmt;

use num_complex::Complex64;

use super::{IndexSet, Letter, Monomial, TracePoly, Word};
use crate::error::{Error, Result};

/// Parses `text`, rejecting indices outside `j`.
pub fn parse(text: &str, j: &IndexSet) -> Result<TracePoly> {
    Parser::new(text, Some(j)).run()
}

/// Parses `text` accepting any positive index.
pub fn parse_any(text: &str) -> Result<TracePoly> {
    Parser::new(text, None).run()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    indices: Option<&'a IndexSet>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, indices: Option<&'a IndexSet>) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            indices,
        }
    }

    fn run(mut self) -> Result<TracePoly> {
        let p = self.expr()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(p)
    }

    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            position: self.pos,
            message: message.to_string(),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<TracePoly> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc += &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<TracePoly> {
        let mut acc = self.unary()?;
        while self.eat(b'*') {
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<TracePoly> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<TracePoly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b't') => self.trace_factor(),
            Some(c) if c.is_ascii_digit() || c == b'.' || c == b'i' => self.number(),
            Some(_) => Err(self.error("expected a number, 'tr(' or '('")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn trace_factor(&mut self) -> Result<TracePoly> {
        if !self.src[self.pos..].starts_with(b"tr") {
            return Err(self.error("expected 'tr'"));
        }
        self.pos += 2;
        self.expect(b'(')?;
        let mut letters = Vec::new();
        while self.peek() == Some(b'X') {
            self.pos += 1;
            let at = self.pos;
            let index = self.integer()?;
            let index = u16::try_from(index).map_err(|_| Error::Syntax {
                position: at,
                message: "index too large".into(),
            })?;
            match self.indices {
                Some(j) if !j.contains(index) => return Err(Error::UnknownIndex { index }),
                None if index == 0 => return Err(Error::UnknownIndex { index }),
                _ => {}
            }
            let star = self.eat(b'*');
            letters.push(Letter::new(index, star));
        }
        if letters.is_empty() {
            return Err(self.error("expected at least one letter 'X<j>'"));
        }
        self.expect(b')')?;
        let mut p = TracePoly::var(Word::canonical(letters));
        if self.eat(b'^') {
            let at = self.pos;
            let k = self.integer()?;
            if k == 0 {
                return Err(Error::Syntax {
                    position: at,
                    message: "exponent must be positive".into(),
                });
            }
            let k = u32::try_from(k).map_err(|_| Error::Syntax {
                position: at,
                message: "exponent too large".into(),
            })?;
            p = p.pow(k);
        }
        Ok(p)
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Syntax {
                position: start,
                message: "integer out of range".into(),
            })
    }

    fn number(&mut self) -> Result<TracePoly> {
        self.skip_ws();
        if self.src[self.pos] == b'i' {
            self.pos += 1;
            return Ok(TracePoly::constant(Complex64::new(0.0, 1.0)));
        }
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(Error::Syntax {
                position: start,
                message: "malformed number".into(),
            });
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let x: f64 = text.parse().map_err(|_| Error::Syntax {
            position: start,
            message: format!("malformed number '{text}'"),
        })?;
        if self.pos < self.src.len() && self.src[self.pos] == b'i' {
            self.pos += 1;
            return Ok(TracePoly::constant(Complex64::new(0.0, x)));
        }
        Ok(TracePoly::constant(Complex64::new(x, 0.0)))
    }
}

fn fmt_monomial(m: &Monomial, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let words = m.words();
    let mut k = 0;
    let mut first = true;
    while k < words.len() {
        let mut run = 1;
        while k + run < words.len() && words[k + run] == words[k] {
            run += 1;
        }
        if !first {
            f.write_str("*")?;
        }
        first = false;
        write!(f, "tr({})", words[k])?;
        if run > 1 {
            write!(f, "^{run}")?;
        }
        k += run;
    }
    Ok(())
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        fmt_monomial(self, f)
    }
}

impl fmt::Display for TracePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms().enumerate() {
            let real = c.im == 0.0;
            let negative = real && c.re < 0.0;
            match (k, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mag = if negative { -c.re } else { c.re };
            if m.is_one() {
                if real {
                    write!(f, "{mag}")?;
                } else {
                    write!(
                        f,
                        "({}{}{}i)",
                        c.re,
                        if c.im < 0.0 { "-" } else { "+" },
                        c.im.abs()
                    )?;
                }
                continue;
            }
            if !real {
                write!(
                    f,
                    "({}{}{}i)*",
                    c.re,
                    if c.im < 0.0 { "-" } else { "+" },
                    c.im.abs()
                )?;
            } else if mag != 1.0 {
                write!(f, "{mag}*")?;
            }
            fmt_monomial(m, f)?;
        }
        Ok(())
    }
}
