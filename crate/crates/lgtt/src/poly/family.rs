use num_traits::Zero;

use super::laurent::{LaurentPoly, NumPoly, UPoly};
use super::rational::GaussRat;
use crate::{Error, Result, C64};

/// f_{τ,t} = τ(f + Σ t_i g_i).
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationFamily {
    pub base: LaurentPoly,
    pub deformers: Vec<LaurentPoly>,
    pub t: Vec<C64>,
    pub tau: C64,
}

impl DeformationFamily {
    pub fn new(base: LaurentPoly, deformers: Vec<LaurentPoly>, t: Vec<C64>, tau: C64) -> Result<Self> {
        if deformers.iter().any(|g| g.vars() != base.vars()) {
            return Err(Error::Domain("deformers must share the base variables".into()));
        }
        if t.len() != deformers.len() {
            return Err(Error::Domain(format!("{} parameters for {} deformers", t.len(), deformers.len())));
        }
        if tau.is_zero() || !tau.is_finite() {
            return Err(Error::Domain("coupling tau must be finite and nonzero".into()));
        }
        Ok(DeformationFamily { base, deformers, t, tau })
    }

    /// Family without deformers.
    pub fn fixed(base: LaurentPoly, tau: C64) -> Result<Self> {
        Self::new(base, vec![], vec![], tau)
    }

    pub fn at(&self, t: &[C64], tau: C64) -> Result<Self> {
        Self::new(self.base.clone(), self.deformers.clone(), t.to_vec(), tau)
    }

    pub fn nvars(&self) -> usize {
        self.base.nvars()
    }

    /// f_t with the parameters converted exactly to dyadic rationals.
    pub fn member_exact(&self) -> Result<LaurentPoly> {
        let mut p = self.base.clone();
        for (g, &ti) in self.deformers.iter().zip(&self.t) {
            p = p.add(&g.scale(&GaussRat::from_c64(ti)?));
        }
        Ok(p)
    }

    /// f_t in double precision (without τ).
    pub fn member_numeric(&self) -> NumPoly {
        let mut terms: Vec<_> = self.base.to_numeric().terms;
        for (g, &ti) in self.deformers.iter().zip(&self.t) {
            for (e, c) in g.to_numeric().terms {
                match terms.iter_mut().find(|(f, _)| *f == e) {
                    Some(slot) => slot.1 += c * ti,
                    None => terms.push((e, c * ti)),
                }
            }
        }
        NumPoly { nvars: self.nvars(), terms }
    }

    /// f_t as a dense univariate polynomial (one-variable polynomial families).
    pub fn member_univariate(&self) -> Result<UPoly> {
        if self.nvars() != 1 || !self.base.is_polynomial() || self.deformers.iter().any(|g| !g.is_polynomial()) {
            return Err(Error::Domain("expected a one-variable polynomial family".into()));
        }
        let mut f = self.base.to_univariate()?;
        for (g, &ti) in self.deformers.iter().zip(&self.t) {
            f = f.add(&g.to_univariate()?.scale(ti));
        }
        Ok(f)
    }

    /// τ f_t(z).
    pub fn eval(&self, z: &[C64]) -> C64 {
        self.tau * self.member_numeric().eval(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    #[test]
    fn member_views_agree() {
        let z = vec!["z".to_string()];
        let f = parse_polynomial("z^3/3", &z).unwrap();
        let g = vec![parse_polynomial("1", &z).unwrap(), parse_polynomial("z", &z).unwrap()];
        let fam = DeformationFamily::new(f, g, vec![C64::new(0.5, 0.0), C64::new(-1.0, 0.3)], C64::new(2.0, -1.0)).unwrap();
        let p = C64::new(0.7, -0.4);
        let exact = fam.member_exact().unwrap().eval(&[p]);
        let num = fam.member_numeric().eval(&[p]);
        let uni = fam.member_univariate().unwrap().eval(p);
        assert!((exact - num).norm() < 1e-14 && (exact - uni).norm() < 1e-14);
        assert!((fam.eval(&[p]) - fam.tau * exact).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        let z = vec!["z".to_string()];
        let f = parse_polynomial("z^2", &z).unwrap();
        assert!(DeformationFamily::fixed(f.clone(), C64::zero()).is_err());
        assert!(DeformationFamily::new(f.clone(), vec![f.clone()], vec![], C64::new(1.0, 0.0)).is_err());
        let w = vec!["w".to_string()];
        let g = parse_polynomial("w", &w).unwrap();
        assert!(DeformationFamily::new(f, vec![g], vec![C64::zero()], C64::new(1.0, 0.0)).is_err());
    }
}
