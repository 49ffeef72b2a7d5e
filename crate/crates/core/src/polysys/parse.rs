use super::{Monomial, PolySystem, Polynomial};
use crate::error::{Error, Result};

type RawTerm = (f64, Vec<(usize, u32)>);

struct Line<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Line<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.pos - start
    }

    fn integer(&mut self, what: &str) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        if self.digits() == 0 {
            return self.err(format!("expected {what}"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        match s.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.err(format!("{what} out of range"))
            }
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let int = self.digits();
        let mut frac = 0;
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            frac = self.digits();
        }
        if int + frac == 0 {
            self.pos = start;
            return self.err("expected a number");
        }
        if matches!(self.chars.get(self.pos), Some('e') | Some('E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+') | Some('-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                self.pos = mark;
                return self.err("malformed exponent");
            }
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        let v: f64 = s.parse().map_err(|_| Error::Parse {
            line: self.line,
            column: start + 1,
            message: format!("invalid number `{s}`"),
        })?;
        if !v.is_finite() {
            self.pos = start;
            return self.err("coefficient is not finite");
        }
        Ok(v)
    }

    fn factor(&mut self) -> Result<(usize, u32)> {
        self.skip_ws();
        if self.chars.get(self.pos) != Some(&'x') {
            return self.err("expected a variable `x<i>`");
        }
        self.pos += 1;
        if !self.chars.get(self.pos).is_some_and(char::is_ascii_digit) {
            return self.err("expected a variable index after `x`");
        }
        let at = self.pos;
        let idx = self.integer("variable index")?;
        if idx == 0 {
            self.pos = at;
            return self.err("variables are numbered from 1");
        }
        let mut exp = 1u32;
        if self.peek() == Some('^') {
            self.pos += 1;
            let e = self.integer("exponent")?;
            exp = u32::try_from(e).map_err(|_| Error::Parse {
                line: self.line,
                column: self.pos,
                message: "exponent out of range".into(),
            })?;
        }
        Ok((idx as usize, exp))
    }

    fn term(&mut self) -> Result<RawTerm> {
        let mut coef = 1.0;
        let mut factors = Vec::new();
        let c = self.peek();
        if c.is_some_and(|c| c.is_ascii_digit() || c == '.') {
            coef = self.number()?;
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    factors.push(self.factor()?);
                }
                Some('x') => factors.push(self.factor()?),
                _ => return Ok((coef, factors)),
            }
        } else {
            factors.push(self.factor()?);
        }
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    factors.push(self.factor()?);
                }
                Some('x') => factors.push(self.factor()?),
                _ => break,
            }
        }
        Ok((coef, factors))
    }

    fn polynomial(&mut self) -> Result<Vec<RawTerm>> {
        let mut out = Vec::new();
        let mut sign = 1.0;
        match self.peek() {
            Some('-') => {
                sign = -1.0;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            _ => {}
        }
        loop {
            let (c, f) = self.term()?;
            out.push((sign * c, f));
            match self.peek() {
                None => break,
                Some('+') => sign = 1.0,
                Some('-') => sign = -1.0,
                Some(ch) => return self.err(format!("unexpected character `{ch}`")),
            }
            self.pos += 1;
        }
        Ok(out)
    }
}

/// Parses one polynomial per line. An optional `vars: <n>` header fixes the
/// number of variables, otherwise it is the largest index used. `#` starts a
/// comment.
pub fn parse_system(text: &str) -> Result<PolySystem> {
    let mut declared: Option<usize> = None;
    let mut raw: Vec<Vec<RawTerm>> = Vec::new();
    let mut max_idx = 0usize;
    for (lineno, full) in text.lines().enumerate() {
        let body = full.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let mut cur = Line {
            chars: body.chars().collect(),
            pos: 0,
            line: lineno + 1,
            _src: full,
        };
        let trimmed = body.trim_start();
        if let Some(rest) = trimmed.strip_prefix("vars") {
            if rest.trim_start().starts_with(':') {
                cur.pos = body.len() - trimmed.len() + 4;
                cur.skip_ws();
                cur.pos += 1;
                if declared.is_some() || !raw.is_empty() {
                    return cur.err("the `vars:` header must come first and only once");
                }
                let n = cur.integer("variable count")? as usize;
                if n == 0 {
                    return cur.err("variable count must be positive");
                }
                if let Some(ch) = cur.peek() {
                    return cur.err(format!("unexpected character `{ch}`"));
                }
                declared = Some(n);
                continue;
            }
        }
        let terms = cur.polynomial()?;
        for (_, f) in &terms {
            for &(i, _) in f {
                if let Some(n) = declared {
                    if i > n {
                        return Err(Error::Parse {
                            line: lineno + 1,
                            column: 1,
                            message: format!("variable x{i} exceeds the declared count {n}"),
                        });
                    }
                }
                max_idx = max_idx.max(i);
            }
        }
        raw.push(terms);
    }
    let n = declared.unwrap_or(max_idx.max(1));
    let polys = raw
        .into_iter()
        .map(|terms| {
            let mut p = Polynomial::zero(n);
            for (c, f) in terms {
                let mut e = vec![0u32; n];
                for (i, a) in f {
                    e[i - 1] += a;
                }
                p.add_term(Monomial::new(e), c);
            }
            p
        })
        .collect();
    PolySystem::new(n, polys)
}
