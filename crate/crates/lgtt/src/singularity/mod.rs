//! Milnor algebras, residue pairings, disk Milnor numbers and moduli counts.

pub mod groebner;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::{eigenvalues, eigenvector, gauss_matrix_to_c64};
use crate::poly::{rat_to_string, DeformationFamily, Exponent, GaussRat, LaurentPoly, NumPoly, UPoly};
use crate::{Error, Result, C64};
use groebner::{groebner_basis, reduce, standard_monomials, Mono, Poly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mu {
    Finite(usize),
    Infinite,
}

impl Mu {
    pub fn finite(self) -> Option<usize> {
        match self {
            Mu::Finite(m) => Some(m),
            Mu::Infinite => None,
        }
    }
}

/// Quotient O/J_f with a standard-monomial basis. For Laurent f the Jacobi
/// ideal is generated by z_i ∂_i f and each variable z_i gets a partner w_i
/// with z_i w_i = 1; basis exponents are reported as Laurent exponents.
#[derive(Clone, Debug)]
pub struct MilnorAlgebra {
    pub source: LaurentPoly,
    pub laurent: bool,
    pub groebner_basis: Vec<Poly>,
    pub monomial_basis: Vec<Exponent>,
    pub mu: Mu,
    ring_basis: Vec<Mono>,
}

fn ring_nvars(n: usize, laurent: bool) -> usize {
    if laurent {
        2 * n
    } else {
        n
    }
}

fn to_ring(p: &LaurentPoly, laurent: bool) -> Result<Poly> {
    let n = p.nvars();
    let mut terms = Vec::with_capacity(p.num_terms());
    for (e, c) in p.terms() {
        let mut m = vec![0u32; ring_nvars(n, laurent)];
        for (i, &a) in e.iter().enumerate() {
            if a >= 0 {
                m[i] = a as u32;
            } else if laurent {
                m[n + i] = (-a) as u32;
            } else {
                return Err(Error::Domain("negative exponent in a polynomial ring".into()));
            }
        }
        terms.push((m, c.clone()));
    }
    Ok(Poly::new(terms))
}

fn ring_to_exponent(m: &[u32], n: usize, laurent: bool) -> Exponent {
    (0..n).map(|i| m[i] as i32 - if laurent { m[n + i] as i32 } else { 0 }).collect()
}

/// Reduced Gröbner basis, standard monomials and μ of the Jacobi ideal.
pub fn milnor_algebra(f: &LaurentPoly) -> Result<MilnorAlgebra> {
    let n = f.nvars();
    let laurent = !f.is_polynomial();
    let mut gens = Vec::new();
    for i in 0..n {
        let d = f.partial_derivative(i, laurent)?;
        // clear denominators by a monomial, which is a unit on the torus
        let d = if laurent {
            let mut shift = vec![0i32; n];
            for e in d.terms().keys() {
                for k in 0..n {
                    shift[k] = shift[k].max(-e[k]);
                }
            }
            d.mul(&LaurentPoly::monomial(f.vars(), shift, GaussRat::one()))
        } else {
            d
        };
        gens.push(to_ring(&d, laurent)?);
    }
    if laurent {
        for i in 0..n {
            let mut zw = vec![0u32; 2 * n];
            zw[i] = 1;
            zw[n + i] = 1;
            gens.push(Poly::new(vec![(zw, GaussRat::one()), (vec![0; 2 * n], -GaussRat::one())]));
        }
    }
    let g = groebner_basis(&gens);
    let (mu, ring_basis) = match standard_monomials(&g, ring_nvars(n, laurent)) {
        Some(b) => (Mu::Finite(b.len()), b),
        None => (Mu::Infinite, vec![]),
    };
    let monomial_basis = ring_basis.iter().map(|m| ring_to_exponent(m, n, laurent)).collect();
    Ok(MilnorAlgebra { source: f.clone(), laurent, groebner_basis: g, monomial_basis, mu, ring_basis })
}

impl MilnorAlgebra {
    pub fn nvars(&self) -> usize {
        self.source.nvars()
    }

    fn require_finite(&self) -> Result<usize> {
        self.mu.finite().ok_or(Error::InfiniteMilnor)
    }

    /// Coordinates of the class of g in the monomial basis.
    pub fn normal_form(&self, g: &LaurentPoly) -> Result<Vec<GaussRat>> {
        let mu = self.require_finite()?;
        if g.vars() != self.source.vars() {
            return Err(Error::Domain("class and algebra live in different variables".into()));
        }
        if !self.laurent && !g.is_polynomial() {
            return Err(Error::Domain("Laurent class in a polynomial Milnor algebra".into()));
        }
        let r = reduce(&to_ring(g, self.laurent)?, &self.groebner_basis);
        let mut out = vec![GaussRat::zero(); mu];
        for (m, c) in r.terms {
            let k = self.ring_basis.iter().position(|b| *b == m).expect("remainder outside the standard basis");
            out[k] = c;
        }
        Ok(out)
    }

    pub fn basis_polynomial(&self, a: usize) -> LaurentPoly {
        LaurentPoly::monomial(self.source.vars(), self.monomial_basis[a].clone(), GaussRat::one())
    }

    /// Column a holds the normal form of g·basis_a.
    pub fn multiplication_matrix(&self, g: &LaurentPoly) -> Result<Vec<Vec<GaussRat>>> {
        let mu = self.require_finite()?;
        let mut m = vec![vec![GaussRat::zero(); mu]; mu];
        for a in 0..mu {
            let col = self.normal_form(&g.mul(&self.basis_polynomial(a)))?;
            for (b, c) in col.into_iter().enumerate() {
                m[b][a] = c;
            }
        }
        Ok(m)
    }

    pub fn multiplication_matrix_c64(&self, g: &LaurentPoly) -> Result<DMatrix<C64>> {
        Ok(gauss_matrix_to_c64(&self.multiplication_matrix(g)?))
    }

    /// Human-readable basis labels such as "1", "x", "x*y^2", "z^-1".
    pub fn basis_labels(&self) -> Vec<String> {
        self.monomial_basis
            .iter()
            .map(|e| {
                let parts: Vec<String> = e
                    .iter()
                    .zip(self.source.vars())
                    .filter(|(a, _)| **a != 0)
                    .map(|(a, v)| if *a == 1 { v.clone() } else { format!("{v}^{a}") })
                    .collect();
                if parts.is_empty() {
                    "1".into()
                } else {
                    parts.join("*")
                }
            })
            .collect()
    }

    /// Critical points on the torus (Laurent) or in C^n, from the joint
    /// eigenvectors of the coordinate multiplication maps, Newton-polished.
    pub fn critical_points(&self) -> Result<Vec<Vec<C64>>> {
        let mu = self.require_finite()?;
        let n = self.nvars();
        if mu == 0 {
            return Ok(vec![]);
        }
        let mz: Vec<DMatrix<C64>> =
            (0..n).map(|i| self.multiplication_matrix_c64(&LaurentPoly::variable(self.source.vars(), i))).collect::<Result<_>>()?;
        // generic combination separates the points
        let mut comb = DMatrix::<C64>::zeros(mu, mu);
        for (i, m) in mz.iter().enumerate() {
            comb += m * C64::new(1.0 + 0.37 * i as f64, 0.21 * (i as f64 + 1.0));
        }
        let ct = comb.transpose();
        let f = self.source.to_numeric();
        let mut pts = Vec::with_capacity(mu);
        for lam in eigenvalues(&comb) {
            let v = eigenvector(&ct, lam);
            let k = (0..mu).max_by(|&a, &b| v[a].norm().partial_cmp(&v[b].norm()).unwrap()).unwrap();
            let p: Vec<C64> = mz.iter().map(|m| (m.transpose() * &v)[k] / v[k]).collect();
            pts.push(newton_polish(&f, p));
        }
        Ok(pts)
    }
}

/// Newton iteration on ∇f = 0.
pub fn newton_polish(f: &NumPoly, mut p: Vec<C64>) -> Vec<C64> {
    let n = p.len();
    for _ in 0..30 {
        let g = f.gradient(&p);
        let h = f.hessian(&p);
        let hm = DMatrix::from_fn(n, n, |i, j| h[i][j]);
        let Some(step) = hm.lu().solve(&DVector::from_vec(g)) else { break };
        let mut small = true;
        for i in 0..n {
            p[i] -= step[i];
            if step[i].norm() > 1e-15 * (1.0 + p[i].norm()) {
                small = false;
            }
        }
        if small {
            break;
        }
    }
    p
}

/// Residue pairing η(g,h) = Σ_a g(p_a)h(p_a)/det Hess f(p_a) on the monomial
/// basis of Q_{f_t}. The Laurent case uses the Hessian in logarithmic
/// coordinates (volume form dz/z).
#[derive(Clone, Debug)]
pub struct ResiduePairing {
    pub eta: DMatrix<C64>,
    pub labels: Vec<String>,
    pub critical_points: Vec<Vec<C64>>,
    /// Set when the value was obtained as a limit along a path.
    pub from_limit: bool,
}

pub fn residue_pairing(family: &DeformationFamily) -> Result<ResiduePairing> {
    let f = family.member_exact()?;
    let alg = milnor_algebra(&f)?;
    let mu = alg.require_finite()?;
    let pts = alg.critical_points()?;
    let num = f.to_numeric();
    let scale = num.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max).max(1e-300);
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[..i] {
            let d: f64 = p.iter().zip(q).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if d < 1e-6 {
                return Err(Error::NotMorse(format!("critical points collide near {p:?}")));
            }
        }
    }
    let dets: Vec<C64> = pts
        .iter()
        .map(|p| {
            let h = num.hessian(p);
            let n = p.len();
            let m = DMatrix::from_fn(n, n, |i, j| h[i][j]);
            let d = m.determinant();
            if alg.laurent {
                let pz: C64 = p.iter().product();
                d * pz * pz
            } else {
                d
            }
        })
        .collect();
    for (p, d) in pts.iter().zip(&dets) {
        if d.norm() < 1e-10 * scale {
            return Err(Error::NotMorse(format!("degenerate Hessian at {p:?}")));
        }
    }
    let evals: Vec<Vec<C64>> = pts
        .iter()
        .map(|p| alg.monomial_basis.iter().map(|e| e.iter().zip(p).map(|(&a, &z)| z.powi(a)).product()).collect())
        .collect();
    let eta = DMatrix::from_fn(mu, mu, |a, b| (0..pts.len()).map(|k| evals[k][a] * evals[k][b] / dets[k]).sum());
    Ok(ResiduePairing { eta, labels: alg.basis_labels(), critical_points: pts, from_limit: false })
}

/// η at a possibly non-Morse parameter as the limit of residue_pairing along
/// t + s·direction, s → 0, by Richardson extrapolation over s = ε, ε/2.
pub fn residue_pairing_limit(family: &DeformationFamily, direction: &[C64], eps: f64) -> Result<ResiduePairing> {
    if let Ok(r) = residue_pairing(family) {
        return Ok(r);
    }
    let at = |s: f64| {
        let t: Vec<C64> = family.t.iter().zip(direction).map(|(a, d)| a + d * s).collect();
        residue_pairing(&family.at(&t, family.tau)?)
    };
    let a = at(eps)?;
    let b = at(eps / 2.0)?;
    if a.labels != b.labels {
        return Err(Error::NotMorse("basis changed along the limit path".into()));
    }
    let eta = &b.eta * C64::new(2.0, 0.0) - &a.eta;
    Ok(ResiduePairing { eta, labels: b.labels, critical_points: b.critical_points, from_limit: true })
}

/// Winding number of f' around the circle |z − center| = radius.
pub fn milnor_number_disk(f: &UPoly, center: C64, radius: f64) -> Result<i64> {
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::Domain("radius must be positive".into()));
    }
    let d = f.derivative();
    if d.c.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::BoundaryProximity(0.0));
    }
    let scale: f64 = d.c.iter().enumerate().map(|(k, c)| c.norm() * (center.norm() + radius).powi(k as i32)).sum();
    let mut n = 256usize;
    loop {
        let mut total = 0.0;
        let mut min_abs = f64::INFINITY;
        let mut max_jump: f64 = 0.0;
        let mut prev = d.eval(center + C64::from_polar(radius, 0.0));
        for k in 1..=n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let cur = d.eval(center + C64::from_polar(radius, th));
            min_abs = min_abs.min(cur.norm());
            let step = (cur / prev).arg();
            max_jump = max_jump.max(step.abs());
            total += step;
            prev = cur;
        }
        if min_abs < 1e-9 * scale {
            return Err(Error::BoundaryProximity(min_abs));
        }
        if max_jump < 0.5 {
            return Ok((total / (2.0 * std::f64::consts::PI)).round() as i64);
        }
        if n > 1 << 22 {
            return Err(Error::BoundaryProximity(min_abs));
        }
        n *= 4;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuliCount {
    pub n: u32,
    pub d: u32,
    pub moduli_dim: i64,
    pub marginal_count: i64,
    /// Set for (n, d) = (4, 4): quartic K3 surfaces have 20 moduli while the
    /// marginal deformation count is 19.
    pub exceptional: bool,
}

fn binom(n: u64, k: u64) -> i64 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as i64
}

/// binom(n−1+d, d) − n², with the (4,4) exception reporting h¹(Θ) = 20.
pub fn moduli_dimension(n: u32, d: u32) -> i64 {
    if (n, d) == (4, 4) {
        return 20;
    }
    binom((n - 1 + d) as u64, d as u64) - (n as i64) * (n as i64)
}

/// Degree-d monomials minus the GL(n) action: binom(n−1+d, n−1) − n − n(n−1).
pub fn marginal_count(n: u32, d: u32) -> i64 {
    let n64 = n as i64;
    binom((n - 1 + d) as u64, (n - 1) as u64) - n64 - n64 * (n64 - 1)
}

pub fn moduli_count(n: u32, d: u32) -> Result<ModuliCount> {
    if n < 2 || d < 2 {
        return Err(Error::Domain(format!("moduli count needs n >= 2 and d >= 2, got ({n}, {d})")));
    }
    let moduli_dim = moduli_dimension(n, d);
    let marginal_count = marginal_count(n, d);
    Ok(ModuliCount { n, d, moduli_dim, marginal_count, exceptional: moduli_dim != marginal_count })
}

/// Structured export of a Milnor algebra.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MilnorDoc {
    pub vars: Vec<String>,
    pub mu: Option<usize>,
    pub laurent: bool,
    pub basis: Vec<Vec<i32>>,
    pub labels: Vec<String>,
    /// Gröbner basis elements as (ring exponent, "re", "im") triples; ring
    /// variables are the declared ones followed by the inverse partners.
    pub groebner: Vec<Vec<(Vec<u32>, String, String)>>,
    /// reduction[i][a] = normal form of z_i·basis_a as (re, im) strings.
    pub reduction: Vec<Vec<Vec<(String, String)>>>,
}

impl MilnorAlgebra {
    pub fn to_doc(&self) -> Result<MilnorDoc> {
        let groebner = self
            .groebner_basis
            .iter()
            .map(|p| p.terms.iter().map(|(m, c)| (m.clone(), rat_to_string(&c.re), rat_to_string(&c.im))).collect())
            .collect();
        let mut reduction = Vec::new();
        if self.mu.finite().is_some() {
            for i in 0..self.nvars() {
                let m = self.multiplication_matrix(&LaurentPoly::variable(self.source.vars(), i))?;
                let cols: Vec<Vec<(String, String)>> = (0..m.len())
                    .map(|a| m.iter().map(|row| (rat_to_string(&row[a].re), rat_to_string(&row[a].im))).collect())
                    .collect();
                reduction.push(cols);
            }
        }
        Ok(MilnorDoc {
            vars: self.source.vars().to_vec(),
            mu: self.mu.finite(),
            laurent: self.laurent,
            basis: self.monomial_basis.clone(),
            labels: self.basis_labels(),
            groebner,
            reduction,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_polynomial, var_names};

    fn alg(s: &str, vars: &[&str]) -> MilnorAlgebra {
        milnor_algebra(&parse_polynomial(s, &var_names(vars)).unwrap()).unwrap()
    }

    #[test]
    fn e6_basis() {
        let a = alg("x^3 + y^4", &["x", "y"]);
        assert_eq!(a.mu, Mu::Finite(6));
        let mut b = a.monomial_basis.clone();
        b.sort();
        let mut want = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![0, 2], vec![1, 1], vec![1, 2]];
        want.sort();
        assert_eq!(b, want);
    }

    #[test]
    fn a_series() {
        assert_eq!(alg("z^2", &["z"]).mu, Mu::Finite(1));
        for n in 1..6 {
            let a = alg(&format!("z^{}", n + 1), &["z"]);
            assert_eq!(a.monomial_basis, (0..n).map(|k| vec![k as i32]).collect::<Vec<_>>());
        }
        assert_eq!(alg("x*y", &["x", "y"]).mu, Mu::Finite(1));
        assert_eq!(alg("x^2", &["x", "y"]).mu, Mu::Infinite);
    }

    #[test]
    fn laurent_triangle_mu() {
        // mirror of P^2 has three critical points
        let a = alg("z1 + z2 + 1/(z1*z2)", &["z1", "z2"]);
        assert_eq!(a.mu, Mu::Finite(3));
        let pts = a.critical_points().unwrap();
        for p in pts {
            // critical points satisfy z1 = z2 and z1^3 = 1
            assert!((p[0] - p[1]).norm() < 1e-10);
            assert!((p[0].powi(3) - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn a2_multiplication() {
        let z = var_names(&["z"]);
        let t2 = GaussRat::from_frac(-3, 7);
        let f = parse_polynomial("z^3/3 + 5/2", &z).unwrap().add(&parse_polynomial("z", &z).unwrap().scale(&t2));
        let a = milnor_algebra(&f).unwrap();
        let m = a.multiplication_matrix(&parse_polynomial("z", &z).unwrap()).unwrap();
        assert_eq!(m, vec![vec![GaussRat::zero(), -t2.clone()], vec![GaussRat::one(), GaussRat::zero()]]);
        let id = a.multiplication_matrix(&parse_polynomial("1", &z).unwrap()).unwrap();
        assert_eq!(id, vec![vec![GaussRat::one(), GaussRat::zero()], vec![GaussRat::zero(), GaussRat::one()]]);
        // f·1 ≡ t1 + (2 t2/3) z
        let nf = a.normal_form(&f).unwrap();
        assert_eq!(nf, vec![GaussRat::from_frac(5, 2), &t2 * &GaussRat::from_frac(2, 3)]);
    }

    fn family(base: &str, defs: &[&str], t: &[C64]) -> DeformationFamily {
        let z = var_names(&["z"]);
        DeformationFamily::new(
            parse_polynomial(base, &z).unwrap(),
            defs.iter().map(|d| parse_polynomial(d, &z).unwrap()).collect(),
            t.to_vec(),
            C64::new(1.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn residue_examples() {
        for t2 in [C64::new(-1.0, 0.0), C64::new(0.4, 0.9), C64::new(-2.5, -0.1)] {
            let r = residue_pairing(&family("z^3/3", &["z"], &[t2])).unwrap();
            assert!((r.eta[(0, 0)]).norm() < 1e-12);
            assert!((r.eta[(0, 1)] - 1.0).norm() < 1e-12 && (r.eta[(1, 0)] - 1.0).norm() < 1e-12);
            assert!((r.eta[(1, 1)]).norm() < 1e-12);
        }
        let r = residue_pairing(&family("z^2/2", &[], &[])).unwrap();
        assert!((r.eta[(0, 0)] - 1.0).norm() < 1e-14);
        let r = residue_pairing(&family("z^4/4", &["z^2/2"], &[C64::new(0.7, -0.2)])).unwrap();
        let e = |a: usize, b: usize| r.eta[(a, b)];
        assert!((e(0, 2) - 1.0).norm() < 1e-10 && (e(1, 1) - 1.0).norm() < 1e-10);
        assert!(e(0, 0).norm() < 1e-10 && e(0, 1).norm() < 1e-10);
    }

    #[test]
    fn non_morse_rejected_and_limit() {
        let fam = family("z^3/3", &["z"], &[C64::zero()]);
        assert!(residue_pairing(&fam).is_err());
        let r = residue_pairing_limit(&fam, &[C64::new(1.0, 0.0)], 1e-3).unwrap();
        assert!(r.from_limit);
        assert!((r.eta[(0, 1)] - 1.0).norm() < 1e-6);
    }

    #[test]
    fn disk_counts() {
        let z3 = UPoly::from_real(&[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(milnor_number_disk(&z3, C64::zero(), 1.0).unwrap(), 2);
        let lin = UPoly::from_real(&[0.0, 1.0]);
        assert_eq!(milnor_number_disk(&lin, C64::new(0.3, -2.0), 5.0).unwrap(), 0);
        let a2 = UPoly::from_real(&[0.0, -1.0, 0.0, 1.0 / 3.0]);
        assert_eq!(milnor_number_disk(&a2, C64::zero(), 2.0).unwrap(), 2);
        assert_eq!(milnor_number_disk(&a2, C64::new(1.0, 0.0), 0.5).unwrap(), 1);
        assert!(matches!(milnor_number_disk(&a2, C64::zero(), 1.0), Err(Error::BoundaryProximity(_))));
    }

    #[test]
    fn moduli_examples() {
        assert_eq!(moduli_dimension(5, 5), 101);
        assert_eq!(moduli_dimension(3, 3), 1);
        let c = moduli_count(4, 4).unwrap();
        assert_eq!((c.moduli_dim, c.marginal_count, c.exceptional), (20, 19, true));
        assert!(!moduli_count(5, 5).unwrap().exceptional);
    }

    #[test]
    fn export_has_reduction_table() {
        let a = alg("x^3 + y^4", &["x", "y"]);
        let d = a.to_doc().unwrap();
        assert_eq!(d.mu, Some(6));
        assert_eq!(d.reduction.len(), 2);
        assert_eq!(d.reduction[0].len(), 6);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::poly::{parse_polynomial, var_names};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fermat_milnor_number_is_a_product(a in 2u32..6, b in 2u32..6) {
            let v = var_names(&["x", "y"]);
            let f = parse_polynomial(&format!("x^{a} + y^{b}"), &v).unwrap();
            prop_assert_eq!(milnor_algebra(&f).unwrap().mu, Mu::Finite(((a - 1) * (b - 1)) as usize));
        }
    }
}
