use num_traits::One;

use super::laurent::LaurentPoly;
use super::rational::{parse_rat, GaussRat};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let b: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && i + 1 < b.len() && b[i + 1].is_ascii_digit()) {
            let s = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == '.') {
                i += 1;
            }
            out.push((s, Tok::Num(b[s..i].iter().collect())));
        } else if c.is_alphabetic() || c == '_' {
            let s = i;
            while i < b.len() && (b[i].is_alphanumeric() || b[i] == '_') {
                i += 1;
            }
            out.push((s, Tok::Ident(b[s..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Parse { pos: i, msg: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    k: usize,
    vars: &'a [String],
    end: usize,
}

impl<'a> Parser<'a> {
    fn pos(&self) -> usize {
        self.toks.get(self.k).map_or(self.end, |t| t.0)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.k).map(|t| &t.1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn expr(&mut self) -> Result<LaurentPoly> {
        let mut acc = if self.peek() == Some(&Tok::Op('-')) {
            self.k += 1;
            self.term()?.scale(&GaussRat::from_int(-1))
        } else {
            if self.peek() == Some(&Tok::Op('+')) {
                self.k += 1;
            }
            self.term()?
        };
        loop {
            match self.peek() {
                Some(Tok::Op('+')) => {
                    self.k += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Op('-')) => {
                    self.k += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<LaurentPoly> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.k += 1;
                    acc = acc.mul(&self.power()?);
                }
                Some(Tok::Op('/')) => {
                    self.k += 1;
                    let at = self.pos();
                    let d = self.power()?;
                    let inv = d.monomial_inverse().ok_or(Error::Parse {
                        pos: at,
                        msg: "division is only defined by a single nonzero term".into(),
                    })?;
                    acc = acc.mul(&inv);
                }
                // juxtaposition such as 3z or 2(x+y)
                Some(Tok::Ident(_)) | Some(Tok::Num(_)) | Some(Tok::Op('(')) => {
                    acc = acc.mul(&self.power()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<LaurentPoly> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Op('^')) {
            return Ok(base);
        }
        self.k += 1;
        let at = self.pos();
        let e = self.int_exponent()?;
        if e >= 0 {
            Ok(base.pow(e as u32))
        } else {
            let inv = base.monomial_inverse().ok_or(Error::Parse {
                pos: at,
                msg: "negative powers are only defined for a single nonzero term".into(),
            })?;
            Ok(inv.pow((-e) as u32))
        }
    }

    fn int_exponent(&mut self) -> Result<i32> {
        let mut neg = false;
        let paren = self.peek() == Some(&Tok::Op('('));
        if paren {
            self.k += 1;
        }
        if self.peek() == Some(&Tok::Op('-')) {
            neg = true;
            self.k += 1;
        }
        let v = match self.peek() {
            Some(Tok::Num(s)) if !s.contains('.') => {
                let v: i32 = match s.parse() {
                    Ok(v) => v,
                    Err(_) => return self.err("exponent out of range"),
                };
                self.k += 1;
                v
            }
            _ => return self.err("expected an integer exponent"),
        };
        if paren {
            if self.peek() != Some(&Tok::Op(')')) {
                return self.err("expected ')'");
            }
            self.k += 1;
        }
        Ok(if neg { -v } else { v })
    }

    fn atom(&mut self) -> Result<LaurentPoly> {
        let n = self.vars.len();
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                let r = parse_rat(&s).map_err(|_| Error::Parse { pos: self.pos(), msg: format!("bad number {s:?}") })?;
                self.k += 1;
                Ok(LaurentPoly::constant(self.vars, GaussRat::real(r)))
            }
            Some(Tok::Ident(name)) => {
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    self.k += 1;
                    let mut e = vec![0; n];
                    e[i] = 1;
                    Ok(LaurentPoly::monomial(self.vars, e, GaussRat::one()))
                } else if name == "i" || name == "I" {
                    self.k += 1;
                    Ok(LaurentPoly::constant(self.vars, GaussRat::i()))
                } else {
                    Err(Error::UnknownVariable(name))
                }
            }
            Some(Tok::Op('(')) => {
                self.k += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::Op(')')) {
                    return self.err("expected ')'");
                }
                self.k += 1;
                Ok(e)
            }
            Some(Tok::Op('-')) => {
                self.k += 1;
                Ok(self.power()?.scale(&GaussRat::from_int(-1)))
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parse a sum of coefficient·monomial terms over Q(i).
pub fn parse_polynomial(text: &str, vars: &[String]) -> Result<LaurentPoly> {
    let toks = lex(text)?;
    let mut p = Parser { toks, k: 0, vars, end: text.len() };
    if p.toks.is_empty() {
        return p.err("empty expression");
    }
    let r = p.expr()?;
    if p.k != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cubic_terms() {
        let f = parse_polynomial("z^3/3 - z", &v(&["z"])).unwrap();
        assert_eq!(f.num_terms(), 2);
        assert_eq!(f.coeff(&[3]), GaussRat::from_frac(1, 3));
        assert_eq!(f.coeff(&[1]), GaussRat::from_int(-1));
    }

    #[test]
    fn laurent_triangle() {
        let f = parse_polynomial("z1 + z2 + 1/(z1*z2)", &v(&["z1", "z2"])).unwrap();
        assert_eq!(f.num_terms(), 3);
        assert_eq!(f.coeff(&[1, 0]), GaussRat::from_int(1));
        assert_eq!(f.coeff(&[0, 1]), GaussRat::from_int(1));
        assert_eq!(f.coeff(&[-1, -1]), GaussRat::from_int(1));
    }

    #[test]
    fn zero_polynomial() {
        assert!(parse_polynomial("0", &v(&["z"])).unwrap().is_zero());
        assert!(parse_polynomial("z - z", &v(&["z"])).unwrap().is_zero());
    }

    #[test]
    fn gaussian_coefficients_and_powers() {
        let f = parse_polynomial("(1/2 + 3*i/4)*x^2*y^-1 - 2i", &v(&["x", "y"])).unwrap();
        let c = f.coeff(&[2, -1]);
        assert_eq!(c.re, GaussRat::from_frac(1, 2).re);
        assert_eq!(c.im, GaussRat::from_frac(3, 4).re);
        assert_eq!(f.coeff(&[0, 0]), GaussRat::i().pow(1).scale_int(-2));
        assert!(f.coeff(&[1, 1]).is_zero());
    }

    #[test]
    fn errors_carry_position() {
        match parse_polynomial("z + w", &v(&["z"])) {
            Err(Error::UnknownVariable(s)) => assert_eq!(s, "w"),
            other => panic!("unexpected {other:?}"),
        }
        match parse_polynomial("z + * 2", &v(&["z"])) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_polynomial("1/(z+1)", &v(&["z"])).is_err());
        assert!(parse_polynomial("z $ 2", &v(&["z"])).is_err());
    }

    trait ScaleInt {
        fn scale_int(&self, k: i64) -> GaussRat;
    }
    impl ScaleInt for GaussRat {
        fn scale_int(&self, k: i64) -> GaussRat {
            self * &GaussRat::from_int(k)
        }
    }
}
