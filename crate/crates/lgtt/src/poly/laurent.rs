use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use super::rational::{rat_to_string, GaussRat};
use crate::{Error, Result};

pub type Exponent = Vec<i32>;

/// Sparse Laurent polynomial over Q(i) in a fixed, ordered list of variables.
#[derive(Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    vars: Vec<String>,
    terms: BTreeMap<Exponent, GaussRat>,
}

impl LaurentPoly {
    pub fn zero(vars: &[String]) -> Self {
        LaurentPoly { vars: vars.to_vec(), terms: BTreeMap::new() }
    }

    pub fn constant(vars: &[String], c: GaussRat) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars.len()], c);
        p
    }

    pub fn monomial(vars: &[String], exp: Exponent, c: GaussRat) -> Self {
        assert_eq!(exp.len(), vars.len(), "exponent length must match variable count");
        let mut p = Self::zero(vars);
        p.add_term(exp, c);
        p
    }

    pub fn variable(vars: &[String], i: usize) -> Self {
        let mut e = vec![0; vars.len()];
        e[i] = 1;
        Self::monomial(vars, e, GaussRat::one())
    }

    pub fn from_terms(vars: &[String], terms: impl IntoIterator<Item = (Exponent, GaussRat)>) -> Self {
        let mut p = Self::zero(vars);
        for (e, c) in terms {
            assert_eq!(e.len(), vars.len(), "exponent length must match variable count");
            p.add_term(e, c);
        }
        p
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, GaussRat> {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[i32]) -> GaussRat {
        self.terms.get(e).cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn add_term(&mut self, e: Exponent, c: GaussRat) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(GaussRat::zero);
        *slot += &c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    /// True when every exponent is non-negative.
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&a| a >= 0))
    }

    pub fn total_degree(&self) -> Option<i32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn degree_in(&self, i: usize) -> Option<i32> {
        self.terms.keys().map(|e| e[i]).max()
    }

    fn check_compat(&self, o: &Self) {
        assert_eq!(self.vars, o.vars, "polynomials live in different variable lists");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check_compat(o);
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&GaussRat::from_int(-1)))
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check_compat(o);
        let mut r = Self::zero(&self.vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                r.add_term(e, c1 * c2);
            }
        }
        r
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        let mut r = Self::zero(&self.vars);
        if c.is_zero() {
            return r;
        }
        for (e, a) in &self.terms {
            r.terms.insert(e.clone(), a * c);
        }
        r
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(&self.vars, GaussRat::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Inverse of a single nonzero term; None for anything else.
    pub fn monomial_inverse(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms.iter().next()?;
        let ne: Exponent = e.iter().map(|a| -a).collect();
        Some(Self::monomial(&self.vars, ne, c.inv()?))
    }

    /// Ordinary partial derivative, or z_i d/dz_i when `logarithmic`.
    pub fn partial_derivative(&self, i: usize, logarithmic: bool) -> Result<Self> {
        if i >= self.nvars() {
            return Err(Error::IndexOutOfRange { index: i, len: self.nvars() });
        }
        let mut r = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut ne = e.clone();
            if !logarithmic {
                ne[i] -= 1;
            }
            r.add_term(ne, c * &GaussRat::from_int(e[i] as i64));
        }
        Ok(r)
    }

    /// Set the listed variables to zero. Terms with a negative power of such a
    /// variable are rejected.
    pub fn restrict_zero(&self, zeroed: &[usize]) -> Result<Self> {
        let mut r = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            if zeroed.iter().any(|&i| e[i] < 0) {
                return Err(Error::Domain("cannot set a variable with negative power to zero".into()));
            }
            if zeroed.iter().all(|&i| e[i] == 0) {
                r.add_term(e.clone(), c.clone());
            }
        }
        Ok(r)
    }

    /// Substitute exact values for some variables, keeping the variable list.
    pub fn substitute(&self, values: &[(usize, GaussRat)]) -> Result<Self> {
        let mut r = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            let mut cc = c.clone();
            for (i, v) in values {
                let k = e[*i];
                if k != 0 {
                    let p = if k > 0 {
                        v.pow(k as u32)
                    } else {
                        v.inv().ok_or_else(|| Error::Domain("negative power of zero".into()))?.pow((-k) as u32)
                    };
                    cc = &cc * &p;
                }
                ne[*i] = 0;
            }
            r.add_term(ne, cc);
        }
        Ok(r)
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| c.to_c64() * e.iter().zip(z).map(|(&a, &zi)| zi.powi(a)).product::<Complex64>())
            .sum()
    }

    pub fn eval_exact(&self, z: &[GaussRat]) -> Result<GaussRat> {
        let mut acc = GaussRat::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (&a, zi) in e.iter().zip(z) {
                let p = if a >= 0 {
                    zi.pow(a as u32)
                } else {
                    zi.inv().ok_or_else(|| Error::Domain("negative power of zero".into()))?.pow((-a) as u32)
                };
                t = &t * &p;
            }
            acc += &t;
        }
        Ok(acc)
    }

    /// Read-only double precision view.
    pub fn to_numeric(&self) -> NumPoly {
        NumPoly {
            nvars: self.nvars(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.to_c64())).collect(),
        }
    }

    /// Dense ascending coefficients of a one-variable polynomial.
    pub fn to_univariate(&self) -> Result<UPoly> {
        if self.nvars() != 1 || !self.is_polynomial() {
            return Err(Error::Domain("expected a one-variable polynomial".into()));
        }
        let deg = self.degree_in(0).unwrap_or(0).max(0) as usize;
        let mut c = vec![Complex64::new(0.0, 0.0); deg + 1];
        for (e, a) in &self.terms {
            c[e[0] as usize] = a.to_c64();
        }
        Ok(UPoly::new(c))
    }

    pub fn with_vars(&self, vars: &[String]) -> Self {
        assert_eq!(vars.len(), self.nvars());
        LaurentPoly { vars: vars.to_vec(), terms: self.terms.clone() }
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // highest total degree first reads more naturally
        let mut items: Vec<_> = self.terms.iter().collect();
        items.sort_by(|a, b| {
            let da: i32 = a.0.iter().sum();
            let db: i32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (e, c) in items {
            let mono: Vec<String> = e
                .iter()
                .zip(&self.vars)
                .filter(|(a, _)| **a != 0)
                .map(|(a, v)| if *a == 1 { v.clone() } else { format!("{v}^{a}") })
                .collect();
            let neg = c.is_real() && c.re.is_negative();
            let mag = if neg { -c } else { c.clone() };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else if mag.is_real() && mag.re.denom().is_one() {
                write!(f, "{}*{}", rat_to_string(&mag.re), mono.join("*"))?;
            } else if mag.is_real() && mag.re.numer().is_one() {
                write!(f, "{}/{}", mono.join("*"), mag.re.denom())?;
            } else {
                write!(f, "{mag}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Sparse multivariate polynomial with double coefficients.
#[derive(Clone, Debug)]
pub struct NumPoly {
    pub nvars: usize,
    pub terms: Vec<(Exponent, Complex64)>,
}

impl NumPoly {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(z).map(|(&a, &zi)| zi.powi(a)).product::<Complex64>())
            .sum()
    }

    pub fn gradient(&self, z: &[Complex64]) -> Vec<Complex64> {
        (0..self.nvars)
            .map(|i| {
                self.terms
                    .iter()
                    .filter(|(e, _)| e[i] != 0)
                    .map(|(e, c)| {
                        let mut t = c * e[i] as f64;
                        for (j, (&a, &zj)) in e.iter().zip(z).enumerate() {
                            t *= zj.powi(if j == i { a - 1 } else { a });
                        }
                        t
                    })
                    .sum()
            })
            .collect()
    }

    pub fn hessian(&self, z: &[Complex64]) -> Vec<Vec<Complex64>> {
        let n = self.nvars;
        let mut h = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (e, c) in &self.terms {
            for i in 0..n {
                for j in 0..n {
                    let mut ee = e.clone();
                    let mut t = *c;
                    t *= ee[i] as f64;
                    ee[i] -= 1;
                    t *= ee[j] as f64;
                    ee[j] -= 1;
                    if t == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (&a, &zk) in ee.iter().zip(z) {
                        t *= zk.powi(a);
                    }
                    h[i][j] += t;
                }
            }
        }
        h
    }
}

/// Dense one-variable polynomial, ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct UPoly {
    pub c: Vec<Complex64>,
}

impl UPoly {
    pub fn new(mut c: Vec<Complex64>) -> Self {
        while c.len() > 1 && c.last().map_or(false, |x| *x == Complex64::new(0.0, 0.0)) {
            c.pop();
        }
        if c.is_empty() {
            c.push(Complex64::new(0.0, 0.0));
        }
        UPoly { c }
    }

    pub fn from_real(c: &[f64]) -> Self {
        Self::new(c.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn leading(&self) -> Complex64 {
        *self.c.last().unwrap()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }

    pub fn derivative(&self) -> UPoly {
        if self.c.len() <= 1 {
            return UPoly::new(vec![Complex64::new(0.0, 0.0)]);
        }
        UPoly::new(self.c.iter().enumerate().skip(1).map(|(k, &a)| a * k as f64).collect())
    }

    pub fn scale(&self, s: Complex64) -> UPoly {
        UPoly::new(self.c.iter().map(|&a| a * s).collect())
    }

    pub fn add(&self, o: &UPoly) -> UPoly {
        let n = self.c.len().max(o.c.len());
        UPoly::new(
            (0..n)
                .map(|k| self.c.get(k).copied().unwrap_or_default() + o.c.get(k).copied().unwrap_or_default())
                .collect(),
        )
    }

    pub fn mul(&self, o: &UPoly) -> UPoly {
        let mut r = vec![Complex64::new(0.0, 0.0); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                r[i + j] += a * b;
            }
        }
        UPoly::new(r)
    }

    /// All complex roots with multiplicity: companion eigenvalues polished by Newton.
    pub fn roots(&self) -> Vec<Complex64> {
        let d = self.degree();
        if d == 0 {
            return vec![];
        }
        let lead = self.leading();
        let comp = nalgebra::DMatrix::from_fn(d, d, |i, j| {
            if j == d - 1 {
                -self.c[i] / lead
            } else if i == j + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let dp = self.derivative();
        let mut r = crate::linalg::eigenvalues(&comp);
        for z in r.iter_mut() {
            for _ in 0..8 {
                let q = dp.eval(*z);
                if q.norm() == 0.0 {
                    break;
                }
                let step = self.eval(*z) / q;
                if !step.is_finite() || step.norm() > 1e-2 * (1.0 + z.norm()) {
                    break;
                }
                *z -= step;
                if step.norm() <= 1e-16 * (1.0 + z.norm()) {
                    break;
                }
            }
        }
        r.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        r
    }

    /// Quotient and remainder by a polynomial with nonzero leading coefficient.
    pub fn div_rem(&self, d: &UPoly) -> (UPoly, UPoly) {
        let dd = d.degree();
        if self.degree() < dd {
            return (UPoly::new(vec![Complex64::new(0.0, 0.0)]), self.clone());
        }
        let mut r = self.c.clone();
        let lead = d.leading();
        let mut q = vec![Complex64::new(0.0, 0.0); self.degree() - dd + 1];
        for k in (0..q.len()).rev() {
            let coef = r[k + dd] / lead;
            q[k] = coef;
            for (j, &b) in d.c.iter().enumerate() {
                r[k + j] -= coef * b;
            }
        }
        r.truncate(dd.max(1));
        (UPoly::new(q), UPoly::new(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn derivative_examples() {
        let z = v(&["z"]);
        let f = parse_polynomial("z^3/3 - z", &z).unwrap();
        assert_eq!(f.partial_derivative(0, false).unwrap(), parse_polynomial("z^2 - 1", &z).unwrap());
        let g = parse_polynomial("z + 1/z", &z).unwrap();
        assert_eq!(g.partial_derivative(0, true).unwrap(), parse_polynomial("z - 1/z", &z).unwrap());
        let vs = v(&["z1", "z2"]);
        let h = parse_polynomial("z1 + z2 + 1/(z1*z2)", &vs).unwrap();
        assert_eq!(h.partial_derivative(0, false).unwrap(), parse_polynomial("1 - 1/(z1^2*z2)", &vs).unwrap());
        assert!(h.partial_derivative(2, false).is_err());
    }

    #[test]
    fn numeric_view_matches_exact() {
        let vs = v(&["x", "y"]);
        let f = parse_polynomial("x^3 + x*y^3 - 2*i*y", &vs).unwrap();
        let z = [Complex64::new(0.3, -0.2), Complex64::new(-1.1, 0.4)];
        let n = f.to_numeric();
        assert!((n.eval(&z) - f.eval(&z)).norm() < 1e-14);
        let g = n.gradient(&z);
        let fx = f.partial_derivative(0, false).unwrap().eval(&z);
        let fy = f.partial_derivative(1, false).unwrap().eval(&z);
        assert!((g[0] - fx).norm() < 1e-13 && (g[1] - fy).norm() < 1e-13);
        let h = n.hessian(&z);
        let fxy = f.partial_derivative(0, false).unwrap().partial_derivative(1, false).unwrap().eval(&z);
        assert!((h[0][1] - fxy).norm() < 1e-13 && (h[1][0] - fxy).norm() < 1e-13);
    }

    #[test]
    fn univariate_division() {
        let f = UPoly::from_real(&[0.0, 1.0, 0.0, 1.0 / 3.0]);
        let d = f.derivative();
        let (q, r) = f.div_rem(&d);
        let back = q.mul(&d).add(&r);
        for (a, b) in back.c.iter().zip(&f.c) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(r.degree(), 1);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn upoly() -> impl Strategy<Value = UPoly> {
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..6).prop_map(|c| UPoly::new(c.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()))
    }

    proptest! {
        #[test]
        fn product_evaluates_pointwise(a in upoly(), b in upoly(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let z = Complex64::new(x, y);
            let lhs = a.mul(&b).eval(z);
            let rhs = a.eval(z) * b.eval(z);
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }

        #[test]
        fn division_recombines(a in upoly(), b in upoly()) {
            prop_assume!(b.leading().norm() > 0.1);
            let (q, r) = a.div_rem(&b);
            prop_assert!(r.degree() < b.degree().max(1));
            let back = q.mul(&b).add(&r);
            for k in 0..4 {
                let z = Complex64::from_polar(1.3, k as f64);
                prop_assert!((back.eval(z) - a.eval(z)).norm() <= 1e-8 * (1.0 + a.eval(z).norm()));
            }
        }
    }
}
