//! Buchberger's algorithm over Q(i) in graded reverse lexicographic order.

use std::cmp::Ordering;

use num_traits::{One, Zero};

use crate::poly::GaussRat;

pub type Mono = Vec<u32>;

/// grevlex: higher total degree first; ties broken by the smaller last
/// differing exponent being larger.
pub fn grevlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    if da != db {
        return da.cmp(&db);
    }
    for k in (0..a.len()).rev() {
        if a[k] != b[k] {
            return b[k].cmp(&a[k]);
        }
    }
    Ordering::Equal
}

pub fn divides(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn lcm(a: &[u32], b: &[u32]) -> Mono {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

fn sub(a: &[u32], b: &[u32]) -> Mono {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Terms sorted strictly decreasing in grevlex; no zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub terms: Vec<(Mono, GaussRat)>,
}

impl Poly {
    pub fn new(mut terms: Vec<(Mono, GaussRat)>) -> Self {
        terms.sort_by(|a, b| grevlex(&b.0, &a.0));
        let mut out: Vec<(Mono, GaussRat)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            match out.last_mut() {
                Some((lm, lc)) if *lm == m => *lc += &c,
                _ => out.push((m, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        Poly { terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lm(&self) -> &Mono {
        &self.terms[0].0
    }

    pub fn lc(&self) -> &GaussRat {
        &self.terms[0].1
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let inv = self.lc().inv().unwrap();
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * &inv)).collect() }
    }

    /// self − c·x^m·other, merging in order.
    fn sub_scaled(&self, c: &GaussRat, m: &[u32], other: &Poly) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let shifted: Vec<(Mono, GaussRat)> =
            other.terms.iter().map(|(mm, cc)| (mm.iter().zip(m).map(|(a, b)| a + b).collect(), cc * c)).collect();
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < shifted.len() {
            let ord = match (self.terms.get(i), shifted.get(j)) {
                (Some(a), Some(b)) => grevlex(&a.0, &b.0),
                (Some(_), None) => Ordering::Greater,
                _ => Ordering::Less,
            };
            match ord {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push((shifted[j].0.clone(), -&shifted[j].1));
                    j += 1;
                }
                Ordering::Equal => {
                    let v = &self.terms[i].1 - &shifted[j].1;
                    if !v.is_zero() {
                        out.push((self.terms[i].0.clone(), v));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Poly { terms: out }
    }
}

/// Full reduction of p modulo the list g (monic elements).
pub fn reduce(p: &Poly, g: &[Poly]) -> Poly {
    let mut rem: Vec<(Mono, GaussRat)> = Vec::new();
    let mut cur = p.clone();
    while !cur.is_zero() {
        let (m, c) = cur.terms[0].clone();
        match g.iter().find(|gi| divides(gi.lm(), &m)) {
            Some(gi) => {
                let q = &c / gi.lc();
                cur = cur.sub_scaled(&q, &sub(&m, gi.lm()), gi);
            }
            None => {
                rem.push((m, c));
                cur.terms.remove(0);
            }
        }
    }
    Poly { terms: rem }
}

fn s_poly(a: &Poly, b: &Poly) -> Poly {
    let l = lcm(a.lm(), b.lm());
    let ma = sub(&l, a.lm());
    let mb = sub(&l, b.lm());
    let pa = Poly { terms: a.terms.iter().map(|(m, c)| (m.iter().zip(&ma).map(|(x, y)| x + y).collect(), c / a.lc())).collect() };
    pa.sub_scaled(&b.lc().inv().unwrap(), &mb, b)
}

/// Reduced Gröbner basis of the ideal generated by `gens`.
pub fn groebner_basis(gens: &[Poly]) -> Vec<Poly> {
    let mut g: Vec<Poly> = Vec::new();
    for p in gens {
        let r = reduce(p, &g);
        if !r.is_zero() {
            g.push(r.monic());
        }
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 0..g.len() {
        for i in 0..j {
            pairs.push((i, j));
        }
    }
    while !pairs.is_empty() {
        // normal selection strategy: smallest lcm first
        let k = (0..pairs.len())
            .min_by(|&x, &y| {
                let lx = lcm(g[pairs[x].0].lm(), g[pairs[x].1].lm());
                let ly = lcm(g[pairs[y].0].lm(), g[pairs[y].1].lm());
                grevlex(&lx, &ly)
            })
            .unwrap();
        let (i, j) = pairs.swap_remove(k);
        let (a, b) = (&g[i], &g[j]);
        let l = lcm(a.lm(), b.lm());
        // coprime leading monomials reduce to zero
        if l.iter().zip(a.lm()).zip(b.lm()).all(|((x, y), z)| *x == y + z) {
            continue;
        }
        // chain criterion
        if (0..g.len()).any(|m| {
            m != i
                && m != j
                && divides(g[m].lm(), &l)
                && !pairs.contains(&(i.min(m), i.max(m)))
                && !pairs.contains(&(j.min(m), j.max(m)))
        }) {
            continue;
        }
        let r = reduce(&s_poly(a, b), &g);
        if !r.is_zero() {
            let r = r.monic();
            if r.terms.len() == 1 && r.lm().iter().all(|&e| e == 0) {
                return vec![r];
            }
            let n = g.len();
            g.push(r);
            for i in 0..n {
                pairs.push((i, n));
            }
        }
    }
    // minimize then inter-reduce
    let mut keep: Vec<Poly> = Vec::new();
    for (i, p) in g.iter().enumerate() {
        let redundant = g.iter().enumerate().any(|(j, q)| {
            j != i && divides(q.lm(), p.lm()) && (q.lm() != p.lm() || j < i)
        });
        if !redundant {
            keep.push(p.clone());
        }
    }
    let mut out = Vec::with_capacity(keep.len());
    for i in 0..keep.len() {
        let others: Vec<Poly> = keep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()).collect();
        let head = Poly { terms: vec![keep[i].terms[0].clone()] };
        let tail = Poly { terms: keep[i].terms[1..].to_vec() };
        let r = reduce(&tail, &others);
        let mut t = head.terms;
        t.extend(r.terms);
        out.push(Poly { terms: t }.monic());
    }
    out.sort_by(|a, b| grevlex(a.lm(), b.lm()));
    out
}

/// Standard monomials of a zero-dimensional ideal, or None when the quotient
/// is infinite-dimensional. Sorted ascending in grevlex.
pub fn standard_monomials(g: &[Poly], nvars: usize) -> Option<Vec<Mono>> {
    if g.iter().any(|p| p.lm().iter().all(|&e| e == 0)) {
        return Some(vec![]);
    }
    for v in 0..nvars {
        let pure = g.iter().any(|p| p.lm().iter().enumerate().all(|(k, &e)| (k == v) == (e > 0)));
        if !pure {
            return None;
        }
    }
    let mut out: Vec<Mono> = Vec::new();
    let mut stack: Vec<Mono> = vec![vec![0; nvars]];
    while let Some(m) = stack.pop() {
        if out.contains(&m) || g.iter().any(|p| divides(p.lm(), &m)) {
            continue;
        }
        for v in 0..nvars {
            let mut nm = m.clone();
            nm[v] += 1;
            stack.push(nm);
        }
        out.push(m);
    }
    out.sort_by(|a, b| grevlex(a, b));
    Some(out)
}

/// Approximate points of a zero-dimensional variety from the eigenvectors of
/// the coordinate multiplication maps on the standard monomials. Repeated
/// points appear with their multiplicity. None when not zero-dimensional.
pub fn variety_points(g: &[Poly], nvars: usize) -> Option<Vec<Vec<crate::C64>>> {
    use crate::linalg::{eigenvalues, eigenvector};
    use crate::C64;
    use nalgebra::DMatrix;
    let basis = standard_monomials(g, nvars)?;
    let mu = basis.len();
    if mu == 0 {
        return Some(vec![]);
    }
    let mats: Vec<DMatrix<C64>> = (0..nvars)
        .map(|v| {
            let mut m = DMatrix::<C64>::zeros(mu, mu);
            for (a, b) in basis.iter().enumerate() {
                let mut xb = b.clone();
                xb[v] += 1;
                let r = reduce(&Poly::new(vec![(xb, GaussRat::one())]), g);
                for (mm, c) in r.terms {
                    let k = basis.iter().position(|x| *x == mm).unwrap();
                    m[(k, a)] = c.to_c64();
                }
            }
            m
        })
        .collect();
    let mut comb = DMatrix::<C64>::zeros(mu, mu);
    for (i, m) in mats.iter().enumerate() {
        comb += m * C64::new(1.0 + 0.37 * i as f64, 0.21 * (i as f64 + 1.0));
    }
    let ct = comb.transpose();
    let mut pts = Vec::with_capacity(mu);
    for lam in eigenvalues(&comb) {
        let v = eigenvector(&ct, lam);
        let k = (0..mu).max_by(|&a, &b| v[a].norm().partial_cmp(&v[b].norm()).unwrap()).unwrap();
        pts.push(mats.iter().map(|m| (m.transpose() * &v)[k] / v[k]).collect());
    }
    Some(pts)
}

pub fn constant(nvars: usize, c: GaussRat) -> Poly {
    Poly::new(vec![(vec![0; nvars], c)])
}

pub fn one(nvars: usize) -> Poly {
    constant(nvars, GaussRat::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(terms: &[(&[u32], i64)]) -> Poly {
        Poly::new(terms.iter().map(|(m, c)| (m.to_vec(), GaussRat::from_int(*c))).collect())
    }

    #[test]
    fn grevlex_order() {
        assert_eq!(grevlex(&[1, 1], &[2, 0]), Ordering::Less);
        assert_eq!(grevlex(&[0, 3], &[2, 0]), Ordering::Greater);
        // xz < y^2 in grevlex
        assert_eq!(grevlex(&[1, 0, 1], &[0, 2, 0]), Ordering::Less);
    }

    #[test]
    fn e6_jacobian() {
        // (3x^2, 4y^3)
        let g = groebner_basis(&[p(&[(&[2, 0], 3)]), p(&[(&[0, 3], 4)])]);
        assert_eq!(g.len(), 2);
        let std = standard_monomials(&g, 2).unwrap();
        assert_eq!(std.len(), 6);
    }

    #[test]
    fn infinite_and_unit() {
        let g = groebner_basis(&[p(&[(&[1, 1], 1)])]);
        assert!(standard_monomials(&g, 2).is_none());
        let g = groebner_basis(&[p(&[(&[1], 1), (&[0], -1)]), p(&[(&[1], 1), (&[0], 1)])]);
        assert_eq!(g, vec![one(1)]);
        assert_eq!(standard_monomials(&g, 1).unwrap().len(), 0);
    }

    #[test]
    fn reduction_is_canonical() {
        // ideal (x^2 - y, y^2 - 1)
        let g = groebner_basis(&[p(&[(&[2, 0], 1), (&[0, 1], -1)]), p(&[(&[0, 2], 1), (&[0, 0], -1)])]);
        let a = reduce(&p(&[(&[4, 0], 1)]), &g);
        assert_eq!(a, p(&[(&[0, 0], 1)]));
    }
}
