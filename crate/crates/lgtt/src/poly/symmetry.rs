use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::laurent::LaurentPoly;
use super::weights::{exponent_matrix, quasi_weights};
use crate::linalg::smith_normal_form;
use crate::{Error, Result};

/// Reduce a rational phase into [0, 1).
pub fn frac(x: &BigRational) -> BigRational {
    x - x.floor()
}

/// Finite group G_W of diagonal phases θ ∈ (Q/Z)^n with A·θ ≡ 0 mod 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryGroup {
    /// Generators with orders `orders[i]`; G ≅ ⊕ Z/orders[i].
    pub generators: Vec<Vec<BigRational>>,
    pub orders: Vec<i64>,
    pub order: BigInt,
    /// Exponential grading element J_W = q mod 1.
    pub j_w: Vec<BigRational>,
    exponents: Vec<Vec<i64>>,
}

impl SymmetryGroup {
    pub fn contains(&self, theta: &[BigRational]) -> bool {
        is_symmetry(&self.exponents, theta)
    }

    /// All elements, in lexicographic generator-power order. Intended for small groups.
    pub fn elements(&self) -> Vec<Vec<BigRational>> {
        let n = self.j_w.len();
        let mut out = vec![vec![BigRational::zero(); n]];
        for (g, &k) in self.generators.iter().zip(&self.orders) {
            let mut next = Vec::with_capacity(out.len() * k as usize);
            for e in &out {
                for p in 0..k {
                    let s = BigRational::from_integer(p.into());
                    next.push(e.iter().zip(g).map(|(a, b)| frac(&(a + &s * b))).collect());
                }
            }
            out = next;
        }
        out
    }
}

fn is_symmetry(a: &[Vec<i64>], theta: &[BigRational]) -> bool {
    a.iter().all(|row| {
        let s: BigRational = row.iter().zip(theta).map(|(&k, t)| t * BigRational::from_integer(k.into())).sum();
        s.is_integer()
    })
}

/// Diagonal symmetry group via the Smith form of the exponent matrix.
pub fn diagonal_symmetries(p: &LaurentPoly) -> Result<SymmetryGroup> {
    let w = quasi_weights(p).ok_or_else(|| Error::Domain("polynomial is not quasi-homogeneous".into()))?;
    let a = exponent_matrix(p);
    let n = p.nvars();
    let (_, s, v) = smith_normal_form(&a);
    let diag: Vec<i64> = (0..n).map(|i| if i < s.len() { s[i][i] } else { 0 }).collect();
    let rank = diag.iter().filter(|&&d| d != 0).count();
    if rank < n {
        return Err(Error::InfiniteGroup { rank, n });
    }
    let mut generators = Vec::new();
    let mut orders = Vec::new();
    let mut order = BigInt::one();
    for (i, &d) in diag.iter().enumerate() {
        order *= BigInt::from(d);
        if d > 1 {
            let g: Vec<BigRational> = (0..n).map(|r| frac(&BigRational::new(v[r][i].into(), d.into()))).collect();
            generators.push(g);
            orders.push(d);
        }
    }
    let j_w = w.q.iter().map(frac).collect();
    Ok(SymmetryGroup { generators, orders, order, j_w, exponents: a })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistedSector {
    /// Fixed variables, 0-based positions in the declared order.
    pub fixed: Vec<usize>,
    pub restricted: LaurentPoly,
    pub n_gamma: usize,
}

/// Fixed locus of γ and the restriction W_γ with the moved variables set to 0.
pub fn twisted_sector(p: &LaurentPoly, gamma: &[BigRational]) -> Result<TwistedSector> {
    if gamma.len() != p.nvars() {
        return Err(Error::NotASymmetry(format!("phase vector has length {}, expected {}", gamma.len(), p.nvars())));
    }
    if !is_symmetry(&exponent_matrix(p), gamma) {
        return Err(Error::NotASymmetry(format!("{gamma:?}")));
    }
    let fixed: Vec<usize> = (0..p.nvars()).filter(|&i| frac(&gamma[i]).is_zero()).collect();
    let moved: Vec<usize> = (0..p.nvars()).filter(|i| !fixed.contains(i)).collect();
    let restricted = p.restrict_zero(&moved)?;
    Ok(TwistedSector { n_gamma: fixed.len(), fixed, restricted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn fermat_pair() {
        let p = parse_polynomial("x^3 + y^3", &v(&["x", "y"])).unwrap();
        let g = diagonal_symmetries(&p).unwrap();
        assert_eq!(g.order, BigInt::from(9));
        assert_eq!(g.j_w, vec![r(1, 3), r(1, 3)]);
        assert!(g.contains(&g.j_w));
        assert_eq!(g.elements().len(), 9);
    }

    #[test]
    fn quadric_and_e7() {
        let g = diagonal_symmetries(&parse_polynomial("z^2", &v(&["z"])).unwrap()).unwrap();
        assert_eq!(g.order, BigInt::from(2));
        assert_eq!(g.j_w, vec![r(1, 2)]);
        let p = parse_polynomial("x^3 + x*y^3", &v(&["x", "y"])).unwrap();
        let g = diagonal_symmetries(&p).unwrap();
        assert_eq!(g.order, BigInt::from(9));
        assert_eq!(g.orders, vec![9]);
        // J_W = (1/3, 2/9) has order 9, so it generates the cyclic group
        let els = g.elements();
        assert!(els.contains(&vec![r(1, 3), r(2, 9)]));
    }

    #[test]
    fn infinite_group_rejected() {
        let p = parse_polynomial("x*y", &v(&["x", "y"])).unwrap();
        assert!(diagonal_symmetries(&p).is_err());
    }

    #[test]
    fn sectors() {
        let vs = v(&["x", "y"]);
        let p = parse_polynomial("x^3 + y^3", &vs).unwrap();
        let s = twisted_sector(&p, &[r(1, 3), r(0, 1)]).unwrap();
        assert_eq!(s.fixed, vec![1]);
        assert_eq!(s.restricted, parse_polynomial("y^3", &vs).unwrap());
        assert_eq!(s.n_gamma, 1);
        let s = twisted_sector(&p, &[r(0, 1), r(0, 1)]).unwrap();
        assert_eq!(s.restricted, p);
        assert_eq!(s.n_gamma, 2);
        let s = twisted_sector(&p, &[r(1, 3), r(2, 3)]).unwrap();
        assert!(s.restricted.is_zero());
        assert_eq!(s.n_gamma, 0);
        assert!(twisted_sector(&p, &[r(1, 2), r(0, 1)]).is_err());
    }
}
