use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Error;

/// Exact element of Q(i). Always stored in reduced form.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        GaussRat { re, im: BigRational::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_frac(p: i64, q: i64) -> Self {
        Self::real(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn i() -> Self {
        GaussRat { re: BigRational::zero(), im: BigRational::one() }
    }

    /// Exact conversion: every finite double is a dyadic rational.
    pub fn from_c64(z: Complex64) -> Result<Self, Error> {
        let re = BigRational::from_float(z.re)
            .ok_or_else(|| Error::Domain(format!("non-finite real part {}", z.re)))?;
        let im = BigRational::from_float(z.im)
            .ok_or_else(|| Error::Domain(format!("non-finite imaginary part {}", z.im)))?;
        Ok(GaussRat { re, im })
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm_sqr();
        Some(GaussRat { re: &self.re / &n, im: -(&self.im / &n) })
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = GaussRat::one();
        let mut base = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    match r.to_f64() {
        Some(v) => v,
        None => {
            // fall back on a scaled quotient for huge numerators/denominators
            let n = r.numer().to_f64().unwrap_or(f64::NAN);
            let d = r.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Canonical text form "p/q" or "p" for a rational.
pub fn rat_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rat(s: &str) -> Result<BigRational, Error> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| Error::Parse { pos: 0, msg: format!("bad numerator in {s:?}") })?;
        let q = BigInt::from_str(q.trim()).map_err(|_| Error::Parse { pos: 0, msg: format!("bad denominator in {s:?}") })?;
        if q.is_zero() {
            return Err(Error::Parse { pos: 0, msg: format!("zero denominator in {s:?}") });
        }
        Ok(BigRational::new(p, q))
    } else if let Some((ip, fp)) = s.split_once('.') {
        // decimal literal, kept exact
        let neg = ip.trim_start().starts_with('-');
        let digits: String = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
            .map_err(|_| Error::Parse { pos: 0, msg: format!("bad decimal {s:?}") })?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let r = BigRational::new(n, d);
        Ok(if neg { -r } else { r })
    } else {
        let p = BigInt::from_str(s).map_err(|_| Error::Parse { pos: 0, msg: format!("bad integer {s:?}") })?;
        Ok(BigRational::from_integer(p))
    }
}

impl Zero for GaussRat {
    fn zero() -> Self {
        GaussRat { re: BigRational::zero(), im: BigRational::zero() }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussRat {
    fn one() -> Self {
        GaussRat { re: BigRational::one(), im: BigRational::zero() }
    }
}

impl<'a> Add<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> Sub<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn sub(self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        GaussRat {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl<'a> Div<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn div(self, o: &GaussRat) -> GaussRat {
        self * &o.inv().expect("division by zero in Q(i)")
    }
}

impl Add for GaussRat {
    type Output = GaussRat;
    fn add(self, o: GaussRat) -> GaussRat {
        &self + &o
    }
}

impl Sub for GaussRat {
    type Output = GaussRat;
    fn sub(self, o: GaussRat) -> GaussRat {
        &self - &o
    }
}

impl Mul for GaussRat {
    type Output = GaussRat;
    fn mul(self, o: GaussRat) -> GaussRat {
        &self * &o
    }
}

impl Div for GaussRat {
    type Output = GaussRat;
    fn div(self, o: GaussRat) -> GaussRat {
        &self / &o
    }
}

impl AddAssign<&GaussRat> for GaussRat {
    fn add_assign(&mut self, o: &GaussRat) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl SubAssign<&GaussRat> for GaussRat {
    fn sub_assign(&mut self, o: &GaussRat) {
        self.re -= &o.re;
        self.im -= &o.im;
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat { re: -self.re, im: -self.im }
    }
}

impl Neg for &GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", rat_to_string(&self.re)),
            (true, false) => write!(f, "({})*i", rat_to_string(&self.im)),
            (false, false) => {
                let sign = if self.im.is_negative() { "-" } else { "+" };
                write!(f, "({} {} {}*i)", rat_to_string(&self.re), sign, rat_to_string(&self.im.abs()))
            }
        }
    }
}

impl fmt::Debug for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_operations() {
        let a = GaussRat::new(BigRational::new(1.into(), 3.into()), BigRational::from_integer(2.into()));
        let b = a.inv().unwrap();
        assert_eq!(&a * &b, GaussRat::one());
        assert_eq!((&a - &a), GaussRat::zero());
        assert_eq!(GaussRat::i().pow(2), GaussRat::from_int(-1));
    }

    #[test]
    fn rational_text() {
        assert_eq!(rat_to_string(&parse_rat("-6/4").unwrap()), "-3/2");
        assert_eq!(rat_to_string(&parse_rat("0.25").unwrap()), "1/4");
        assert_eq!(rat_to_string(&parse_rat("-1.5").unwrap()), "-3/2");
        assert!(parse_rat("1/0").is_err());
    }

    #[test]
    fn exact_double_conversion() {
        let z = Complex64::new(0.1, -3.75);
        let g = GaussRat::from_c64(z).unwrap();
        assert_eq!(g.to_c64(), z);
    }
}
