//! Arithmetic for amplitude arguments such as `sqrt(2/3)`, `-1/sqrt(2)` or
//! `0.6i`.
//!
//! Grammar: `expr := term (('+' | '-') term)*`,
//! `term := unary (('*' | '/') unary)*`, `unary := '-' unary | atom 'i'?`,
//! `atom := number | 'i' | 'pi' | f '(' expr ')' | '(' expr ')'` with
//! `f` one of `sqrt`, `cos`, `sin`, `exp`. `sqrt` takes non-negative reals
//! only; the others accept complex arguments, so `exp(i*pi/4)` is a phase.

use envlab::C64;

pub fn parse_amplitude(text: &str) -> Result<C64, String> {
    let mut p = Parser { s: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.at_end() {
        return Err("empty amplitude".into());
    }
    let v = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(format!("unexpected {:?} at offset {} in {text:?}", p.rest(), p.pos));
    }
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(format!("{text:?} is not finite"));
    }
    Ok(v)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn rest(&self) -> String {
        String::from_utf8_lossy(&self.s[self.pos..]).into_owned()
    }

    fn skip_ws(&mut self) {
        while self.s.get(self.pos).is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<C64, String> {
        let mut v = self.term()?;
        loop {
            if self.eat("+") {
                v += self.term()?;
            } else if self.eat("-") {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<C64, String> {
        let mut v = self.unary()?;
        loop {
            if self.eat("*") {
                v *= self.unary()?;
            } else if self.eat("/") {
                let d = self.unary()?;
                if d.norm() == 0.0 {
                    return Err("division by zero".into());
                }
                v /= d;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<C64, String> {
        if self.eat("-") {
            return Ok(-self.unary()?);
        }
        let v = self.atom()?;
        // imaginary suffix, as in `0.6i` or `sqrt(2)i`
        if self.s.get(self.pos) == Some(&b'i') {
            self.pos += 1;
            return Ok(v * C64::i());
        }
        Ok(v)
    }

    fn atom(&mut self) -> Result<C64, String> {
        if self.eat("sqrt(") {
            let v = self.expr()?;
            if !self.eat(")") {
                return Err("missing ')' after sqrt argument".into());
            }
            if v.im != 0.0 || v.re < 0.0 {
                return Err(format!("sqrt of {v} is not a non-negative real"));
            }
            return Ok(C64::new(v.re.sqrt(), 0.0));
        }
        for (name, f) in [("cos(", C64::cos as fn(C64) -> C64), ("sin(", C64::sin), ("exp(", C64::exp)] {
            if self.eat(name) {
                let v = self.expr()?;
                if !self.eat(")") {
                    return Err(format!("missing ')' after {name}"));
                }
                return Ok(f(v));
            }
        }
        if self.eat("(") {
            let v = self.expr()?;
            if !self.eat(")") {
                return Err("missing ')'".into());
            }
            return Ok(v);
        }
        if self.eat("pi") {
            return Ok(C64::new(std::f64::consts::PI, 0.0));
        }
        if self.eat("i") {
            return Ok(C64::i());
        }
        self.number()
    }

    fn number(&mut self) -> Result<C64, String> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.s.get(self.pos) {
            let exponent_sign = (*c == b'+' || *c == b'-') && matches!(self.s.get(self.pos.wrapping_sub(1)), Some(b'e' | b'E'));
            if c.is_ascii_digit() || *c == b'.' || *c == b'e' || *c == b'E' || exponent_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let token = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or_default();
        if token.is_empty() {
            return Err(format!("expected a number at {:?}", self.rest()));
        }
        token.parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|_| format!("bad number {token:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(s: &str) -> f64 {
        let v = parse_amplitude(s).unwrap();
        assert_eq!(v.im, 0.0, "{s}");
        v.re
    }

    #[test]
    fn arithmetic() {
        assert_eq!(re("0.6"), 0.6);
        assert_eq!(re("-0.8"), -0.8);
        assert_eq!(re("1/4"), 0.25);
        assert_eq!(re("sqrt(2/3)"), (2.0f64 / 3.0).sqrt());
        assert_eq!(re("-1/sqrt(2)"), -1.0 / 2f64.sqrt());
        assert_eq!(re(" 1e-1 + 2.5E+0 "), 2.6);
        assert_eq!(re("2*(1-0.75)"), 0.5);
    }

    #[test]
    fn imaginary() {
        assert_eq!(parse_amplitude("0.6i").unwrap(), C64::new(0.0, 0.6));
        assert_eq!(parse_amplitude("sqrt(1/4)i").unwrap(), C64::new(0.0, 0.5));
        assert_eq!(parse_amplitude("0.6 - 0.2i").unwrap(), C64::new(0.6, -0.2));
        assert_eq!(parse_amplitude("-i/2").unwrap(), C64::new(0.0, -0.5));
        let phase = parse_amplitude("exp(i*pi/4)/sqrt(2)").unwrap();
        assert!((phase - C64::new(0.5, 0.5)).norm() < 1e-15);
        assert_eq!(re("cos(1)"), 1f64.cos());
        assert_eq!(re("sin(1)"), 1f64.sin());
    }

    #[test]
    fn rejects() {
        for bad in ["", "abc", "sqrt(-1)", "1/0", "(1", "0.5 0.5", "sqrt(i)", "1e999"] {
            assert!(parse_amplitude(bad).is_err(), "{bad}");
        }
    }
}
