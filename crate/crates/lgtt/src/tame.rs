//! Tameness certificates, growth exponents, deformation classes and radial probes.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::newton::{is_convenient, is_nondegenerate_laurent, newton_polytope, NondegeneracyCertificate};
use crate::poly::{quasi_weights, DeformationFamily, LaurentPoly, WeightSystem};
use crate::singularity::{milnor_algebra, Mu};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TameRule {
    /// Quasi-homogeneous isolated singularity, all q_i ≤ 1/2, deformers of weight ≤ 1.
    QuasiHomogeneous,
    /// Convenient, nondegenerate Laurent polynomial with interior deformers.
    ConvenientLaurent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TameVerdict {
    StronglyTame(TameRule),
    NotStronglyTame(String),
    Evidence(ProbeTable),
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TamenessCertificate {
    pub verdict: TameVerdict,
    /// Human-readable statement of the rule or of why none applied.
    pub rule: String,
    pub probe: Option<ProbeTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub c: f64,
    pub radii: Vec<f64>,
    pub samples_per_sphere: usize,
    pub seed: u64,
}

fn deformers_within_weight(w: &WeightSystem, family: &DeformationFamily) -> bool {
    family.deformers.iter().all(|g| g.terms().keys().all(|e| e.iter().all(|&a| a >= 0) && w.weight_of(e) <= BigRational::one()))
}

fn deformers_interior(f: &LaurentPoly, family: &DeformationFamily) -> Result<bool> {
    let np = newton_polytope(f)?;
    Ok(family.deformers.iter().all(|g| g.terms().keys().all(|e| np.interior_points.contains(e))))
}

/// Decide strong tameness by a proved sufficient rule, otherwise fall back
/// to advisory evidence (when a probe is requested) or Unknown.
pub fn tameness_certificate(family: &DeformationFamily, probe: Option<&ProbeSpec>) -> Result<TamenessCertificate> {
    let f = &family.base;
    let fallback = |why: String| -> Result<TamenessCertificate> {
        match probe {
            Some(p) => {
                let table = radial_probe(family, p.c, &p.radii, p.samples_per_sphere, p.seed);
                Ok(TamenessCertificate { verdict: TameVerdict::Evidence(table.clone()), rule: why, probe: Some(table) })
            }
            None => Ok(TamenessCertificate { verdict: TameVerdict::Unknown, rule: why, probe: None }),
        }
    };

    if f.is_polynomial() && f.total_degree().unwrap_or(0) <= 1 {
        return Ok(TamenessCertificate {
            verdict: TameVerdict::NotStronglyTame("gradient is constant and the Hessian vanishes".into()),
            rule: "affine potential".into(),
            probe: None,
        });
    }

    if let Some(i) = (0..f.nvars()).find(|&i| f.terms().keys().all(|e| e[i] == 0)) {
        return Ok(TamenessCertificate {
            verdict: TameVerdict::NotStronglyTame(format!(
                "f does not depend on {}, so the test quantity is constant along that direction",
                f.vars()[i]
            )),
            rule: "missing variable".into(),
            probe: None,
        });
    }

    if f.is_polynomial() && milnor_algebra(f)?.mu == Mu::Infinite {
        return Ok(TamenessCertificate {
            verdict: TameVerdict::NotStronglyTame(
                "the critical locus is a positive-dimensional affine variety, hence unbounded".into(),
            ),
            rule: "polynomial with infinite Milnor number".into(),
            probe: None,
        });
    }

    if let Some(w) = quasi_weights(f) {
        let half = BigRational::new(1.into(), 2.into());
        if w.q.iter().all(|q| *q <= half) && deformers_within_weight(&w, family) {
            return Ok(TamenessCertificate {
                verdict: TameVerdict::StronglyTame(TameRule::QuasiHomogeneous),
                rule: "quasi-homogeneous nondegenerate, all weights q_i <= 1/2, deformers of weight <= 1".into(),
                probe: None,
            });
        }
        let why = if w.q.iter().any(|q| *q > half) {
            "quasi-homogeneous but some weight exceeds 1/2".to_string()
        } else {
            "quasi-homogeneous but a deformer has weight > 1 (irrelevant direction)".to_string()
        };
        return fallback(why);
    }

    if f.nvars() <= 3 && is_convenient(f) {
        let nd = is_nondegenerate_laurent(f, 0x5eed)?;
        match nd {
            NondegeneracyCertificate::ExactYes => {
                if deformers_interior(f, family)? {
                    return Ok(TamenessCertificate {
                        verdict: TameVerdict::StronglyTame(TameRule::ConvenientLaurent),
                        rule: "convenient and nondegenerate Laurent polynomial with subdiagram deformers".into(),
                        probe: None,
                    });
                }
                return fallback("convenient and nondegenerate, but a deformer leaves the interior".into());
            }
            other => return fallback(format!("convenient, nondegeneracy not proved: {other:?}")),
        }
    }
    fallback("no sufficient rule applies".into())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthExponents {
    pub delta: Vec<BigRational>,
    pub all_at_most_one: bool,
    pub all_below_one: bool,
}

/// δ_i = q_i / min_j(1 − q_j).
pub fn growth_exponents(q: &[BigRational]) -> Result<GrowthExponents> {
    if q.is_empty() || q.iter().any(|x| !x.is_positive() || *x >= BigRational::one()) {
        return Err(Error::Domain("weights must satisfy 0 < q_i < 1".into()));
    }
    let m = q.iter().map(|x| BigRational::one() - x).min().unwrap();
    let delta: Vec<BigRational> = q.iter().map(|x| x / &m).collect();
    let one = BigRational::one();
    Ok(GrowthExponents {
        all_at_most_one: delta.iter().all(|d| *d <= one),
        all_below_one: delta.iter().all(|d| *d < one),
        delta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeformationClass {
    Relevant,
    Marginal,
    Irrelevant,
}

/// Coupling weight 1 − ⟨exp(g), q⟩ and its sign class.
pub fn classify_deformation_monomial(w: &LaurentPoly, g: &LaurentPoly) -> Result<(DeformationClass, BigRational)> {
    let q = quasi_weights(w).ok_or_else(|| Error::Domain("W is not quasi-homogeneous".into()))?;
    if g.num_terms() != 1 {
        return Err(Error::Domain("deformation must be a single monomial".into()));
    }
    let e = g.terms().keys().next().unwrap();
    let c = BigRational::one() - q.weight_of(e);
    let cls = if c.is_positive() {
        DeformationClass::Relevant
    } else if c.is_zero() {
        DeformationClass::Marginal
    } else {
        DeformationClass::Irrelevant
    };
    Ok((cls, c))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub radius: f64,
    pub min_value: f64,
    pub argmin: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub c: f64,
    pub rows: Vec<ProbeRow>,
    /// Strictly increasing minima over the radii in the given order.
    pub increasing: bool,
}

impl ProbeTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,min_value,argmin\n");
        for r in &self.rows {
            let pt: Vec<String> = r.argmin.iter().map(|z| format!("{:e}{:+e}i", z.re, z.im)).collect();
            s.push_str(&format!("{},{:e},{}\n", r.radius, r.min_value, pt.join(" ")));
        }
        s
    }
}

/// min over |z| = r of |∇(τf_t)|² − C·‖∇²(τf_t)‖_F on seeded sphere samples.
pub fn radial_probe(family: &DeformationFamily, c: f64, radii: &[f64], samples_per_sphere: usize, seed: u64) -> ProbeTable {
    let f = family.member_numeric();
    let tau = family.tau;
    let n = family.nvars();
    let rows: Vec<ProbeRow> = radii
        .par_iter()
        .enumerate()
        .map(|(k, &r)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let mut best = ProbeRow { radius: r, min_value: f64::INFINITY, argmin: vec![] };
            for s in 0..samples_per_sphere.max(1) {
                let z: Vec<C64> = if n == 1 {
                    let th = phase + std::f64::consts::TAU * s as f64 / samples_per_sphere.max(1) as f64;
                    vec![C64::from_polar(r, th)]
                } else {
                    let g: Vec<f64> = (0..2 * n).map(|_| gaussian(&mut rng)).collect();
                    let nrm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    (0..n).map(|i| C64::new(g[2 * i], g[2 * i + 1]) * (r / nrm)).collect()
                };
                let grad: f64 = f.gradient(&z).iter().map(|d| (d * tau).norm_sqr()).sum();
                let hess: f64 = f.hessian(&z).iter().flatten().map(|h| (h * tau).norm_sqr()).sum::<f64>().sqrt();
                let v = grad - c * hess;
                if v < best.min_value {
                    best.min_value = v;
                    best.argmin = z;
                }
            }
            best
        })
        .collect();
    let increasing = rows.windows(2).all(|w| w[1].min_value > w[0].min_value);
    ProbeTable { c, rows, increasing }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_polynomial, var_names};

    fn fam(base: &str, defs: &[&str], vars: &[&str]) -> DeformationFamily {
        let v = var_names(vars);
        let d: Vec<LaurentPoly> = defs.iter().map(|s| parse_polynomial(s, &v).unwrap()).collect();
        let t = vec![C64::new(0.1, 0.0); d.len()];
        DeformationFamily::new(parse_polynomial(base, &v).unwrap(), d, t, C64::new(1.0, 0.0)).unwrap()
    }

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn certificate_examples() {
        let c = tameness_certificate(&fam("x^3 + y^3 + z^3", &["x*y*z"], &["x", "y", "z"]), None).unwrap();
        assert_eq!(c.verdict, TameVerdict::StronglyTame(TameRule::QuasiHomogeneous));
        let c = tameness_certificate(&fam("x^3 + y^7", &["x*y^5"], &["x", "y"]), None).unwrap();
        assert_eq!(c.verdict, TameVerdict::Unknown);
        let c = tameness_certificate(&fam("z + 1/z", &[], &["z"]), None).unwrap();
        assert_eq!(c.verdict, TameVerdict::StronglyTame(TameRule::ConvenientLaurent));
        let c = tameness_certificate(&fam("z1 + z2 + 1/(z1*z2)", &["1"], &["z1", "z2"]), None).unwrap();
        assert_eq!(c.verdict, TameVerdict::StronglyTame(TameRule::ConvenientLaurent));
        let c = tameness_certificate(&fam("z", &[], &["z"]), None).unwrap();
        assert!(matches!(c.verdict, TameVerdict::NotStronglyTame(_)));
        let c = tameness_certificate(&fam("x^2", &[], &["x", "y"]), None).unwrap();
        assert!(matches!(c.verdict, TameVerdict::NotStronglyTame(_)));
        let c = tameness_certificate(&fam("x^2*y^2", &[], &["x", "y"]), None).unwrap();
        assert!(matches!(c.verdict, TameVerdict::NotStronglyTame(_)));
    }

    #[test]
    fn evidence_never_upgrades() {
        let spec = ProbeSpec { c: 1.0, radii: vec![2.0, 4.0, 8.0], samples_per_sphere: 64, seed: 3 };
        let c = tameness_certificate(&fam("x^3 + y^7", &["x*y^5"], &["x", "y"]), Some(&spec)).unwrap();
        assert!(matches!(c.verdict, TameVerdict::Evidence(_)));
        assert!(c.probe.is_some());
    }

    #[test]
    fn growth_examples() {
        let g = growth_exponents(&[r(1, 3), r(1, 4)]).unwrap();
        assert_eq!(g.delta, vec![r(1, 2), r(3, 8)]);
        let g = growth_exponents(&[r(1, 2)]).unwrap();
        assert_eq!(g.delta, vec![r(1, 1)]);
        assert!(g.all_at_most_one && !g.all_below_one);
        let g = growth_exponents(&[r(1, 3), r(1, 3), r(1, 3)]).unwrap();
        assert_eq!(g.delta, vec![r(1, 2); 3]);
        assert!(growth_exponents(&[r(1, 1)]).is_err());
    }

    #[test]
    fn deformation_classes() {
        let v = var_names(&["x", "y", "z"]);
        let w = parse_polynomial("x^3 + y^3 + z^3", &v).unwrap();
        let (c, _) = classify_deformation_monomial(&w, &parse_polynomial("x*y*z", &v).unwrap()).unwrap();
        assert_eq!(c, DeformationClass::Marginal);
        let z = var_names(&["z"]);
        let (c, wt) = classify_deformation_monomial(&parse_polynomial("z^3", &z).unwrap(), &parse_polynomial("z", &z).unwrap()).unwrap();
        assert_eq!((c, wt), (DeformationClass::Relevant, r(2, 3)));
        let xy = var_names(&["x", "y"]);
        let (c, wt) =
            classify_deformation_monomial(&parse_polynomial("x^3 + y^7", &xy).unwrap(), &parse_polynomial("x*y^5", &xy).unwrap()).unwrap();
        assert_eq!((c, wt), (DeformationClass::Irrelevant, r(-1, 21)));
    }

    #[test]
    fn probe_closed_forms() {
        let t = radial_probe(&fam("z^2", &[], &["z"]), 1.0, &[1.0, 2.0, 3.0], 16, 1);
        for row in &t.rows {
            assert!((row.min_value - (4.0 * row.radius * row.radius - 2.0)).abs() < 1e-12);
        }
        assert!(t.increasing);
        let t = radial_probe(&fam("z", &[], &["z"]), 5.0, &[1.0, 2.0, 4.0], 16, 1);
        assert!(t.rows.iter().all(|row| (row.min_value - 1.0).abs() < 1e-14));
        assert!(!t.increasing);
        assert_eq!(t, radial_probe(&fam("z", &[], &["z"]), 5.0, &[1.0, 2.0, 4.0], 16, 1));
    }
}
