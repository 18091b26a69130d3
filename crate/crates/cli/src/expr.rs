//! Arithmetic on the symbols `tm`, `pi`, `M`, `P` and `N`, and grids built
//! from such expressions.
//!
//! `2.2tm`, `pi/P`, `384*pi` and `(M-P)^2` all parse. A grid is either a
//! comma-separated list or `start:stop:count`, with `count` points including
//! both ends.

use anyhow::{anyhow, bail, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct Symbols {
    pub tm: Option<f64>,
    pub m: Option<f64>,
    pub p: Option<f64>,
    pub n: Option<f64>,
}

impl Symbols {
    fn lookup(&self, name: &str) -> Result<f64> {
        let slot = match name {
            "pi" => return Ok(std::f64::consts::PI),
            "tm" => self.tm,
            "M" => self.m,
            "P" => self.p,
            "N" => self.n,
            other => bail!("unknown symbol '{other}' (known: tm, pi, M, P, N)"),
        };
        slot.ok_or_else(|| anyhow!("symbol '{name}' has no value in this command"))
    }
}

pub fn eval(src: &str, sym: &Symbols) -> Result<f64> {
    let mut p = Parser {
        s: src.as_bytes(),
        i: 0,
        sym,
    };
    let v = p.sum()?;
    p.skip_ws();
    if p.i != p.s.len() {
        bail!("unexpected '{}' in expression '{src}'", &src[p.i..]);
    }
    if !v.is_finite() {
        bail!("expression '{src}' is not finite");
    }
    Ok(v)
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    sym: &'a Symbols,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.i).copied()
    }

    fn sum(&mut self) -> Result<f64> {
        let mut acc = self.product()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            let rhs = self.product()?;
            acc = if c == b'+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<f64> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.i += 1;
                    acc *= self.unary()?;
                }
                Some(b'/') => {
                    self.i += 1;
                    acc /= self.unary()?;
                }
                // Juxtaposition: `2tm`, `3pi`, `2(M-P)`.
                Some(c) if c.is_ascii_alphabetic() || c == b'(' => acc *= self.power()?,
                _ => return Ok(acc),
            }
        }
    }

    /// `^` binds tighter than a leading sign: `-x^2 = -(x^2)`.
    fn power(&mut self) -> Result<f64> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            return Ok(base.powf(self.unary()?));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<f64> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn atom(&mut self) -> Result<f64> {
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let v = self.sum()?;
                if self.peek() != Some(b')') {
                    bail!("missing ')'");
                }
                self.i += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.i;
                while self.i < self.s.len()
                    && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.')
                {
                    self.i += 1;
                }
                // Exponent only when followed by a digit, so `2e` is not eaten.
                if self.i + 1 < self.s.len()
                    && matches!(self.s[self.i], b'e' | b'E')
                    && (self.s[self.i + 1].is_ascii_digit()
                        || (matches!(self.s[self.i + 1], b'+' | b'-')
                            && self.s.get(self.i + 2).is_some_and(u8::is_ascii_digit)))
                {
                    self.i += 2;
                    while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                        self.i += 1;
                    }
                }
                let text = std::str::from_utf8(&self.s[start..self.i]).expect("ascii");
                text.parse().map_err(|_| anyhow!("bad number '{text}'"))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.i;
                while self.i < self.s.len() && self.s[self.i].is_ascii_alphanumeric() {
                    self.i += 1;
                }
                self.sym
                    .lookup(std::str::from_utf8(&self.s[start..self.i]).expect("ascii"))
            }
            Some(c) => bail!("unexpected '{}'", c as char),
            None => bail!("expression ends early"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// Parses `a:b:count` or `x1,x2,...` (a single value is a one-point list).
pub fn grid(src: &str, sym: &Symbols, spacing: Spacing) -> Result<Vec<f64>> {
    let parts: Vec<&str> = src.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(|x| eval(x.trim(), sym)).collect(),
        [a, b, count] => {
            let (a, b) = (eval(a, sym)?, eval(b, sym)?);
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| anyhow!("grid count must be a whole number, got '{count}'"))?;
            if count == 0 {
                bail!("grid '{src}' has zero points");
            }
            if count == 1 {
                return Ok(vec![a]);
            }
            let last = (count - 1) as f64;
            Ok(match spacing {
                Spacing::Linear => (0..count)
                    .map(|k| {
                        if k + 1 == count {
                            b
                        } else {
                            a + (b - a) * k as f64 / last
                        }
                    })
                    .collect(),
                Spacing::Log => plaquette::bands::log_grid(a, b, count)?,
            })
        }
        _ => bail!("grid '{src}' must be 'start:stop:count' or a comma-separated list"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sym() -> Symbols {
        Symbols {
            tm: Some(384.0 * PI),
            m: Some(15.0),
            p: Some(10.0),
            n: Some(25.0),
        }
    }

    #[test]
    fn symbols_and_juxtaposition() {
        let s = sym();
        assert_eq!(eval("tm", &s).unwrap(), 384.0 * PI);
        assert_eq!(eval("2.2tm", &s).unwrap(), 2.2 * 384.0 * PI);
        assert_eq!(eval("pi/P", &s).unwrap(), PI / 10.0);
        assert_eq!(eval("-(M-P)^2 + 1", &s).unwrap(), -24.0);
        assert_eq!(eval("2^-1", &s).unwrap(), 0.5);
        assert_eq!(eval("1e-3/P", &s).unwrap(), 1e-4);
        assert_eq!(eval("2 pi", &s).unwrap(), 2.0 * PI);
        assert!(eval("tm", &Symbols::default()).is_err());
        assert!(eval("foo", &s).is_err());
        assert!(eval("1/0", &s).is_err());
        assert!(eval("2)", &s).is_err());
    }

    #[test]
    fn grids() {
        let s = sym();
        let g = grid("0:pi/P:50", &s, Spacing::Linear).unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[49], PI / 10.0);
        assert_eq!(grid("0", &s, Spacing::Linear).unwrap(), vec![0.0]);
        assert_eq!(grid("0, tm", &s, Spacing::Linear).unwrap().len(), 2);
        let l = grid("0.1:20:60", &s, Spacing::Log).unwrap();
        assert_eq!((l[0], l[59]), (0.1, 20.0));
        assert!(grid("0:1", &s, Spacing::Linear).is_err());
        assert!(grid("0:1:0", &s, Spacing::Linear).is_err());
    }
}
