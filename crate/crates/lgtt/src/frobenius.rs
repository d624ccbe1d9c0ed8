//! Higgs fields, flat coordinates, connection and tt* residuals, Frobenius
//! tensor and WDVV checks.

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{commutator, gauss_matrix_to_c64, gauss_rank};
use crate::poly::{DeformationFamily, GaussRat, LaurentPoly, UPoly};
use crate::singularity::{milnor_algebra, residue_pairing, MilnorAlgebra};
use crate::spectral::{harmonic_frame, EigenOptions, SpectralGrid};
use crate::thimble::{period_matrix, raw_integral, Mode, PeriodMatrix, PeriodOptions};
use crate::{Error, Result, C64};

type QMat = Vec<Vec<GaussRat>>;

fn qmul(a: &QMat, b: &QMat) -> QMat {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|r| {
            (0..n)
                .map(|j| r.iter().zip(b).fold(GaussRat::zero(), |acc, (x, row)| acc + x * &row[j]))
                .collect()
        })
        .collect()
}

fn qtranspose(a: &QMat) -> QMat {
    let n = a.first().map_or(0, |r| r.len());
    (0..n).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

fn qmatvec(a: &QMat, v: &[GaussRat]) -> Vec<GaussRat> {
    a.iter().map(|r| r.iter().zip(v).fold(GaussRat::zero(), |acc, (x, y)| acc + x * y)).collect()
}

fn qdot(a: &[GaussRat], b: &[GaussRat]) -> GaussRat {
    a.iter().zip(b).fold(GaussRat::zero(), |acc, (x, y)| acc + x * y)
}

/// Multiplication maps of the deformers on Q_{f_t}.
#[derive(Clone, Debug)]
pub struct HiggsField {
    pub labels: Vec<String>,
    pub tau: C64,
    pub t: Vec<C64>,
    /// Exact multiplication matrices of g_i (without τ); column a is g_i·basis_a.
    pub exact: Vec<QMat>,
    /// B_i = τ·exact_i.
    pub b: Vec<DMatrix<C64>>,
    /// Coordinates of the deformer classes in the monomial basis, one per deformer.
    pub classes: Vec<Vec<GaussRat>>,
    pub algebra: MilnorAlgebra,
}

impl HiggsField {
    pub fn mu(&self) -> usize {
        self.labels.len()
    }

    /// [B_i, B_j] = 0 checked in exact arithmetic.
    pub fn commute_exactly(&self) -> bool {
        for i in 0..self.exact.len() {
            for j in 0..i {
                if qmul(&self.exact[i], &self.exact[j]) != qmul(&self.exact[j], &self.exact[i]) {
                    return false;
                }
            }
        }
        true
    }

    /// Matrix whose columns are the deformer classes.
    pub fn class_matrix(&self) -> DMatrix<C64> {
        let mu = self.mu();
        DMatrix::from_fn(mu, self.classes.len(), |a, c| self.classes[c][a].to_c64())
    }

    /// B_i rewritten in the frame of deformer classes (needs as many deformers as μ).
    pub fn in_deformer_frame(&self, m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let v = self.class_matrix();
        if v.nrows() != v.ncols() {
            return Err(Error::Dimension(v.ncols()));
        }
        let inv = v.clone().try_inverse().ok_or(Error::DependentDeformers)?;
        Ok(inv * m * v)
    }
}

pub fn higgs_field(family: &DeformationFamily) -> Result<HiggsField> {
    let f = family.member_exact()?;
    let algebra = milnor_algebra(&f)?;
    let mu = algebra.mu.finite().ok_or(Error::InfiniteMilnor)?;
    let classes: Vec<Vec<GaussRat>> = family.deformers.iter().map(|g| algebra.normal_form(g)).collect::<Result<_>>()?;
    if gauss_rank(&classes) < classes.len() {
        return Err(Error::DependentDeformers);
    }
    let exact: Vec<QMat> = family.deformers.iter().map(|g| algebra.multiplication_matrix(g)).collect::<Result<_>>()?;
    let b = exact.iter().map(|m| gauss_matrix_to_c64(m) * family.tau).collect();
    let labels = algebra.basis_labels();
    debug_assert_eq!(labels.len(), mu);
    Ok(HiggsField { labels, tau: family.tau, t: family.t.clone(), exact, b, classes, algebra })
}

/// τ times the multiplication by f_t on Q_{f_t}.
pub fn u_matrix(family: &DeformationFamily) -> Result<DMatrix<C64>> {
    let f = family.member_exact()?;
    let alg = milnor_algebra(&f)?;
    Ok(alg.multiplication_matrix_c64(&f)? * family.tau)
}

/// Residue pairing of a one-variable polynomial member in exact arithmetic:
/// η(g, h) = [z^{μ−1}](g·h mod f') / lc(f').
pub fn exact_residue_pairing(family: &DeformationFamily) -> Result<QMat> {
    let f = family.member_exact()?;
    if f.nvars() != 1 || !f.is_polynomial() {
        return Err(Error::Domain("exact residues are implemented for one-variable polynomials".into()));
    }
    let alg = milnor_algebra(&f)?;
    let mu = alg.mu.finite().ok_or(Error::InfiniteMilnor)?;
    let deg = f.total_degree().unwrap_or(0);
    let lc_fp = f.coeff(&[deg]) * GaussRat::from_int(deg as i64);
    let top = alg.monomial_basis.iter().position(|e| e[0] == mu as i32 - 1).ok_or_else(|| Error::Domain("unexpected basis".into()))?;
    let mut eta = vec![vec![GaussRat::zero(); mu]; mu];
    for a in 0..mu {
        for b in 0..mu {
            let prod = alg.basis_polynomial(a).mul(&alg.basis_polynomial(b));
            eta[a][b] = &alg.normal_form(&prod)?[top] / &lc_fp;
        }
    }
    Ok(eta)
}

#[derive(Clone, Debug)]
pub struct FrobeniusData {
    pub labels: Vec<String>,
    pub eta: DMatrix<C64>,
    /// Present for one-variable polynomial members.
    pub eta_exact: Option<QMat>,
    pub b: Vec<DMatrix<C64>>,
    pub u: DMatrix<C64>,
    pub tau: C64,
    pub t: Vec<C64>,
    pub higgs: HiggsField,
}

impl FrobeniusData {
    /// max_i ‖ηB_i − (ηB_i)ᵀ‖ / ‖ηB_i‖.
    pub fn eta_symmetry_defect(&self) -> f64 {
        self.b
            .iter()
            .chain(std::iter::once(&self.u))
            .map(|m| {
                let e = &self.eta * m;
                (&e - e.transpose()).norm() / e.norm().max(1e-300)
            })
            .fold(0.0, f64::max)
    }

    /// η·exact_i symmetric in exact arithmetic.
    pub fn eta_symmetric_exactly(&self) -> Option<bool> {
        let eta = self.eta_exact.as_ref()?;
        Some(self.higgs.exact.iter().all(|m| {
            let e = qmul(eta, m);
            e == qtranspose(&e)
        }))
    }
}

pub fn frobenius_data(family: &DeformationFamily) -> Result<FrobeniusData> {
    let higgs = higgs_field(family)?;
    let eta = residue_pairing(family)?.eta;
    let eta_exact = exact_residue_pairing(family).ok();
    Ok(FrobeniusData {
        labels: higgs.labels.clone(),
        eta,
        eta_exact,
        b: higgs.b.clone(),
        u: u_matrix(family)?,
        tau: family.tau,
        t: family.t.clone(),
        higgs,
    })
}

/// A_{ijk} = τ·η(g_i g_j g_k) in exact arithmetic, without the factor τ.
pub fn frobenius_tensor_exact(family: &DeformationFamily) -> Result<Vec<Vec<Vec<GaussRat>>>> {
    let higgs = higgs_field(family)?;
    let eta = exact_residue_pairing(family)?;
    let m = higgs.classes.len();
    let mut a = vec![vec![vec![GaussRat::zero(); m]; m]; m];
    for i in 0..m {
        let eb = qmul(&eta, &higgs.exact[i]);
        for j in 0..m {
            let left = qmatvec(&qtranspose(&eb), &higgs.classes[j]);
            for k in 0..m {
                a[i][j][k] = qdot(&left, &higgs.classes[k]);
            }
        }
    }
    Ok(a)
}

pub fn is_totally_symmetric<T: PartialEq>(a: &[Vec<Vec<T>>]) -> bool {
    let m = a.len();
    (0..m).all(|i| (0..m).all(|j| (0..m).all(|k| a[i][j][k] == a[j][i][k] && a[i][j][k] == a[i][k][j])))
}

/// Power series (1 + e)^α truncated after u^order, for e without constant term.
fn series_pow(e: &[C64], alpha: f64, order: usize) -> Vec<C64> {
    let a = |k: usize| if k == 0 { C64::new(1.0, 0.0) } else { e.get(k).copied().unwrap_or_default() };
    let mut p = vec![C64::new(1.0, 0.0)];
    for m in 1..=order {
        let mut s = C64::new(0.0, 0.0);
        for k in 1..=m {
            s += a(k) * p[m - k] * ((alpha + 1.0) * k as f64 - m as f64);
        }
        p.push(s / m as f64);
    }
    p
}

/// Flat coordinates of c·z^{n+1} + Σ t_i z^{j_i} (distinct j_i < n):
/// x_k = (1/k)·Res_{z=∞}(f/c)^{k/(n+1)}, paired with the deformer z^{n−k}.
#[derive(Clone, Debug)]
pub struct FlatChart {
    pub n: usize,
    pub lead: C64,
    /// Exponent of each deformer.
    pub powers: Vec<usize>,
}

impl FlatChart {
    pub fn for_family(family: &DeformationFamily) -> Result<Self> {
        let base = family.base.to_univariate()?;
        let d = base.degree();
        if d < 2 || base.c[..d].iter().any(|c| c.norm() != 0.0) || family.nvars() != 1 {
            return Err(Error::Domain("flat chart needs a base c·z^(n+1)".into()));
        }
        let n = d - 1;
        let mut powers = vec![];
        for g in &family.deformers {
            let u = g.to_univariate()?;
            let nz: Vec<usize> = (0..u.c.len()).filter(|&k| u.c[k].norm() != 0.0).collect();
            if nz.len() != 1 || u.c[nz[0]] != C64::new(1.0, 0.0) || nz[0] >= n || powers.contains(&nz[0]) {
                return Err(Error::Domain("flat chart needs distinct monic monomial deformers z^j, j < n".into()));
            }
            powers.push(nz[0]);
        }
        Ok(FlatChart { n, lead: base.leading(), powers })
    }

    fn eps(&self, t: &[C64]) -> Vec<C64> {
        let mut e = vec![C64::new(0.0, 0.0); self.n + 2];
        let s = 1.0 / self.lead;
        for (&j, &tj) in self.powers.iter().zip(t) {
            e[self.n + 1 - j] += tj * s;
        }
        e
    }

    fn k_of(&self, i: usize) -> usize {
        self.n - self.powers[i]
    }

    pub fn flat(&self, t: &[C64]) -> Vec<C64> {
        let e = self.eps(t);
        (0..self.powers.len())
            .map(|i| {
                let k = self.k_of(i);
                series_pow(&e, k as f64 / (self.n + 1) as f64, k + 1)[k + 1] / k as f64
            })
            .collect()
    }

    /// J_{ki} = ∂x_k/∂t_i.
    pub fn jacobian(&self, t: &[C64]) -> DMatrix<C64> {
        let e = self.eps(t);
        let m = self.powers.len();
        let s = 1.0 / self.lead;
        DMatrix::from_fn(m, m, |r, i| {
            let k = self.k_of(r);
            let alpha = k as f64 / (self.n + 1) as f64;
            let p = series_pow(&e, alpha - 1.0, k + 1);
            // ∂ε/∂t_i = s·u^{n+1−j_i}
            let shift = self.n + 1 - self.powers[i];
            if shift > k + 1 {
                C64::new(0.0, 0.0)
            } else {
                p[k + 1 - shift] * s * alpha / k as f64
            }
        })
    }

    /// Newton solve of flat(t) = x.
    pub fn invert(&self, x: &[C64], guess: &[C64]) -> Result<Vec<C64>> {
        let mut t = guess.to_vec();
        for _ in 0..60 {
            let r: Vec<C64> = self.flat(&t).iter().zip(x).map(|(a, b)| a - b).collect();
            let rn = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if rn < 1e-15 * (1.0 + x.iter().map(|z| z.norm()).fold(0.0, f64::max)) {
                return Ok(t);
            }
            let step = self
                .jacobian(&t)
                .lu()
                .solve(&nalgebra::DVector::from_vec(r))
                .ok_or_else(|| Error::Singular("flat chart Jacobian".into()))?;
            for (ti, s) in t.iter_mut().zip(step.iter()) {
                *ti -= s;
            }
        }
        Err(Error::NoConvergence("flat chart inversion".into()))
    }
}

#[derive(Clone, Debug)]
pub struct FrobeniusSample {
    pub x: Vec<C64>,
    pub t: Vec<C64>,
    /// A_{abc}, index a·m² + b·m + c.
    pub a: Vec<C64>,
    /// τ·η(∂_a f, ∂_b f) in the chart frame.
    pub metric: DMatrix<C64>,
    pub symmetry_defect: f64,
    /// Relative WDVV contraction residual.
    pub wdvv: f64,
}

fn tensor_at(family: &DeformationFamily, chart: Option<&FlatChart>, x: &[C64], guess: &[C64]) -> Result<FrobeniusSample> {
    let t = match chart {
        Some(c) => c.invert(x, guess)?,
        None => x.to_vec(),
    };
    let fam = family.at(&t, family.tau)?;
    let higgs = higgs_field(&fam)?;
    let eta = residue_pairing(&fam)?.eta;
    let m = t.len();
    let jinv = match chart {
        Some(c) => c.jacobian(&t).try_inverse().ok_or_else(|| Error::Singular("flat chart Jacobian".into()))?,
        None => DMatrix::identity(m, m),
    };
    let v = higgs.class_matrix() * &jinv;
    let mats: Vec<DMatrix<C64>> =
        (0..m).map(|a| (0..m).fold(DMatrix::zeros(higgs.mu(), higgs.mu()), |acc, i| acc + &higgs.b[i] * jinv[(i, a)])).collect();
    let mut a = vec![C64::new(0.0, 0.0); m * m * m];
    for i in 0..m {
        let prod = v.transpose() * &eta * &mats[i] * &v;
        for j in 0..m {
            for k in 0..m {
                a[i * m * m + j * m + k] = prod[(j, k)];
            }
        }
    }
    let metric = v.transpose() * &eta * &v * family.tau;
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let mut sym: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let x0 = a[i * m * m + j * m + k];
                sym = sym.max((x0 - a[j * m * m + i * m + k]).norm()).max((x0 - a[i * m * m + k * m + j]).norm());
            }
        }
    }
    let ginv = metric.clone().try_inverse().ok_or_else(|| Error::Singular("flat metric".into()))?;
    let at = |p: usize, q: usize, r: usize| a[p * m * m + q * m + r];
    let mut wd: f64 = 0.0;
    let mut wscale: f64 = 0.0;
    for p in 0..m {
        for q in 0..m {
            for r in 0..m {
                for s in 0..m {
                    let mut lhs = C64::new(0.0, 0.0);
                    let mut rhs = C64::new(0.0, 0.0);
                    for e in 0..m {
                        for f in 0..m {
                            lhs += at(p, q, e) * ginv[(e, f)] * at(f, r, s);
                            rhs += at(r, q, e) * ginv[(e, f)] * at(f, p, s);
                        }
                    }
                    wd = wd.max((lhs - rhs).norm());
                    wscale = wscale.max(lhs.norm()).max(rhs.norm());
                }
            }
        }
    }
    Ok(FrobeniusSample { x: x.to_vec(), t, a, metric, symmetry_defect: sym / scale, wdvv: wd / wscale.max(1e-300) })
}

#[derive(Clone, Debug)]
pub struct FrobeniusReport {
    pub samples: Vec<FrobeniusSample>,
    pub delta: f64,
    /// max over samples of |∂_a A_{bcd} − ∂_b A_{acd}| by central differences.
    pub potential_residual: f64,
    /// max relative variation of the chart metric over the samples.
    pub metric_variation: f64,
    pub max_wdvv: f64,
    pub max_symmetry_defect: f64,
}

impl FrobeniusReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sample,a,b,c,re_x_a,im_x_a,re_A,im_A\n");
        for (n, smp) in self.samples.iter().enumerate() {
            let m = smp.x.len();
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        let v = smp.a[a * m * m + b * m + c];
                        s.push_str(&format!("{n},{a},{b},{c},{:e},{:e},{:e},{:e}\n", smp.x[a].re, smp.x[a].im, v.re, v.im));
                    }
                }
            }
        }
        s
    }
}

/// Frobenius tensor at each chart point (flat coordinates when a chart is given,
/// the raw parameters otherwise) with the potentiality check at step delta.
pub fn frobenius_tensor(family: &DeformationFamily, chart: Option<&FlatChart>, points: &[Vec<C64>], delta: f64) -> Result<FrobeniusReport> {
    let guess = family.t.clone();
    let rows: Vec<Result<(FrobeniusSample, f64)>> = points
        .par_iter()
        .map(|x| {
            let s = tensor_at(family, chart, x, &guess)?;
            let m = x.len();
            let mut d = vec![vec![C64::new(0.0, 0.0); m * m * m]; m];
            for (a, da) in d.iter_mut().enumerate() {
                let shifted = |sg: f64| -> Result<Vec<C64>> {
                    let mut y = x.clone();
                    y[a] += delta * sg;
                    Ok(tensor_at(family, chart, &y, &s.t)?.a)
                };
                let (p, q) = (shifted(1.0)?, shifted(-1.0)?);
                for k in 0..m * m * m {
                    da[k] = (p[k] - q[k]) / (2.0 * delta);
                }
            }
            let mut pot: f64 = 0.0;
            for a in 0..m {
                for b in 0..m {
                    for k in 0..m * m {
                        pot = pot.max((d[a][b * m * m + k] - d[b][a * m * m + k]).norm());
                    }
                }
            }
            Ok((s, pot))
        })
        .collect();
    let mut samples = vec![];
    let mut potential_residual: f64 = 0.0;
    for r in rows {
        let (s, p) = r?;
        potential_residual = potential_residual.max(p);
        samples.push(s);
    }
    let g0 = samples.first().map(|s| s.metric.clone());
    let metric_variation = match &g0 {
        Some(g0) => samples.iter().map(|s| (&s.metric - g0).norm() / g0.norm()).fold(0.0, f64::max),
        None => 0.0,
    };
    Ok(FrobeniusReport {
        max_wdvv: samples.iter().map(|s| s.wdvv).fold(0.0, f64::max),
        max_symmetry_defect: samples.iter().map(|s| s.symmetry_defect).fold(0.0, f64::max),
        samples,
        delta,
        potential_residual,
        metric_variation,
    })
}

/// Period matrix at a nearby parameter with rows matched to `base` by critical
/// point and thimble orientation matched through the primitive vector.
fn aligned_periods(family: &DeformationFamily, base: &PeriodMatrix, opts: &PeriodOptions) -> Result<PeriodMatrix> {
    let mut pm = period_matrix(family, opts)?;
    let mu = pm.order.len();
    let base_pts: Vec<C64> = base.order.iter().map(|&a| base.critical.points[a]).collect();
    let pts: Vec<C64> = pm.order.iter().map(|&a| pm.critical.points[a]).collect();
    let mut perm = vec![usize::MAX; mu];
    for (r, bp) in base_pts.iter().enumerate() {
        let (k, _) = pts.iter().enumerate().map(|(k, p)| (k, (p - bp).norm())).fold((0, f64::INFINITY), |x, y| if y.1 < x.1 { y } else { x });
        if perm.contains(&k) {
            return Err(Error::OnWall("critical points could not be matched between samples".into()));
        }
        perm[r] = k;
    }
    if perm.iter().enumerate().any(|(r, &k)| r != k) {
        return Err(Error::OnWall("phase order changed within the stencil".into()));
    }
    for r in 0..mu {
        let s = pm.primitive[r] / base.primitive[r];
        if s.re < 0.0 {
            pm.primitive[r] = -pm.primitive[r];
            for c in 0..mu {
                pm.minus[(r, c)] = -pm.minus[(r, c)];
            }
        }
    }
    Ok(pm)
}

/// Fourth-order central difference of `eval` at offsets ±δ, ±2δ.
fn derivative<T, F>(delta: C64, eval: F) -> Result<Vec<C64>>
where
    F: Fn(C64) -> Result<T> + Sync,
    T: AsRef<[C64]> + Send,
{
    let offs = [1.0, -1.0, 2.0, -2.0];
    let vals: Vec<Result<T>> = offs.par_iter().map(|&o| eval(delta * o)).collect();
    let mut v = vec![];
    for r in vals {
        v.push(r?);
    }
    let n = v[0].as_ref().len();
    Ok((0..n)
        .map(|k| {
            let g = |i: usize| v[i].as_ref()[k];
            (8.0 * (g(0) - g(1)) - (g(2) - g(3))) / (delta * 12.0)
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionRow {
    pub re_tau: f64,
    pub im_tau: f64,
    pub t: Vec<(f64, f64)>,
    /// max_j ‖∂_jΠ° − Π_{·j}‖/‖Π_{·j}‖.
    pub derivative_residual: f64,
    /// ‖τ∂_τΠ° − Π·u‖/‖τ∂_τΠ°‖ with u the class of f_t in the deformer frame.
    pub tau_residual_raw: f64,
    /// Same after adding the weight term −½Π° and the exact-form term of f mod f'.
    pub tau_residual_corrected: f64,
    /// max over direction pairs of ‖∂_xΓ_y − ∂_yΓ_x + [Γ_x, Γ_y]‖ / (‖∂_xΓ_y‖ + ‖∂_yΓ_x‖ + ‖Γ_x‖‖Γ_y‖).
    pub flatness_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionReport {
    pub delta: f64,
    pub rows: Vec<ConnectionRow>,
}

impl ConnectionReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re_tau,im_tau,derivative,tau_raw,tau_corrected,flatness\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e}\n",
                r.re_tau, r.im_tau, r.derivative_residual, r.tau_residual_raw, r.tau_residual_corrected, r.flatness_residual
            ));
        }
        s
    }

    pub fn max_derivative_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.derivative_residual).fold(0.0, f64::max)
    }
}

fn vnorm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Coordinates of r (deg < μ) in the frame of the deformer polynomials.
fn in_deformers(r: &UPoly, deformers: &[UPoly]) -> Result<Vec<C64>> {
    let mu = deformers.len();
    let coef = |p: &UPoly, k: usize| p.c.get(k).copied().unwrap_or_default();
    if deformers.iter().any(|g| g.c.len() > mu) || r.c.len() > mu {
        return Err(Error::Domain("connection residuals need deformers of degree below μ".into()));
    }
    let m = DMatrix::from_fn(mu, mu, |k, c| coef(&deformers[c], k));
    let b = nalgebra::DVector::from_fn(mu, |k, _| coef(r, k));
    Ok(m.lu().solve(&b).ok_or(Error::DependentDeformers)?.iter().copied().collect())
}

/// Finite-difference checks of the period connection at each (τ, t) point.
pub fn connection_residuals(family: &DeformationFamily, points: &[(C64, Vec<C64>)], delta: f64, opts: &PeriodOptions) -> Result<ConnectionReport> {
    if opts.mode != Mode::Holomorphic {
        return Err(Error::Domain("connection residuals use Holomorphic-mode periods".into()));
    }
    let deformers: Vec<UPoly> = family.deformers.iter().map(|g| g.to_univariate()).collect::<Result<_>>()?;
    let mut rows = vec![];
    for (tau, t) in points {
        let fam = family.at(t, *tau)?;
        let base = period_matrix(&fam, opts)?;
        let mu = base.primitive.len();
        let m = t.len();
        let at = |dtau: C64, dt: &[C64]| -> Result<PeriodMatrix> {
            let tt: Vec<C64> = t.iter().zip(dt).map(|(a, b)| a + b).collect();
            aligned_periods(&family.at(&tt, tau + dtau)?, &base, opts)
        };
        let zero = vec![C64::new(0.0, 0.0); m];
        let unit = |j: usize, s: C64| -> Vec<C64> {
            let mut v = zero.clone();
            v[j] = s;
            v
        };
        // (i) ∂_jΠ° against column j
        let mut dres: f64 = 0.0;
        for j in 0..m {
            let d = derivative(C64::new(delta, 0.0), |s| Ok(at(C64::new(0.0, 0.0), &unit(j, s))?.primitive))?;
            let col: Vec<C64> = (0..mu).map(|r| base.minus[(r, j)]).collect();
            let diff: Vec<C64> = d.iter().zip(&col).map(|(a, b)| a - b).collect();
            dres = dres.max(vnorm(&diff) / vnorm(&col));
        }
        // (ii) τ-direction
        let dtau = C64::new(delta * tau.norm(), 0.0);
        let dp = derivative(dtau, |s| Ok(at(s, &zero)?.primitive))?;
        let lhs: Vec<C64> = dp.iter().map(|x| x * tau).collect();
        let f = fam.member_univariate()?;
        let (q, r) = f.div_rem(&f.derivative());
        let u = in_deformers(&r, &deformers)?;
        let pu: Vec<C64> = (0..mu).map(|a| (0..mu).map(|c| base.minus[(a, c)] * u[c]).sum()).collect();
        let raw: Vec<C64> = lhs.iter().zip(&pu).map(|(a, b)| a - b).collect();
        let qp = q.derivative();
        let mut corrected = raw.clone();
        for (row, th) in base.thimbles_minus.iter().enumerate() {
            let (e, _) = raw_integral(th, &f, &qp, Mode::Holomorphic)?;
            corrected[row] += base.primitive[row] * 0.5 + e / tau.sqrt();
        }
        // (iii) curvature of Γ_x = Π⁻¹∂_xΠ over directions (τ, t_1..t_m), fourth-order
        // differences throughout; the wider step keeps second differences above quadrature noise
        let fstep = 10.0 * delta;
        let dirs: Vec<(C64, Vec<C64>)> = std::iter::once((dtau * 10.0, zero.clone()))
            .chain((0..m).map(|j| (C64::new(0.0, 0.0), unit(j, C64::new(fstep, 0.0)))))
            .collect();
        let shifted = |terms: &[(usize, f64)]| -> (C64, Vec<C64>) {
            let mut d0 = C64::new(0.0, 0.0);
            let mut dt = zero.clone();
            for &(k, s) in terms {
                d0 += dirs[k].0 * s;
                for (a, b) in dt.iter_mut().zip(&dirs[k].1) {
                    *a += b * s;
                }
            }
            (d0, dt)
        };
        let d4 = [(1.0, 8.0), (-1.0, -8.0), (2.0, -1.0), (-2.0, 1.0)];
        // Γ_k at base + Σ terms, in units of the step along k
        let gamma = |k: usize, terms: &[(usize, f64)]| -> Result<DMatrix<C64>> {
            let (b0, bt) = shifted(terms);
            let p0 = at(b0, &bt)?.minus;
            let mut acc = DMatrix::<C64>::zeros(mu, mu);
            for &(s, w) in &d4 {
                let mut tt = terms.to_vec();
                tt.push((k, s));
                let (d0, dt) = shifted(&tt);
                acc += at(d0, &dt)?.minus * C64::new(w / 12.0, 0.0);
            }
            p0.try_inverse().map(|inv| inv * acc).ok_or_else(|| Error::Singular("period matrix".into()))
        };
        let mut flat: f64 = 0.0;
        for x in 0..dirs.len() {
            for y in 0..x {
                let dd = |k: usize, other: usize| -> Result<DMatrix<C64>> {
                    let mut acc = DMatrix::<C64>::zeros(mu, mu);
                    for &(s, w) in &d4 {
                        acc += gamma(k, &[(other, s)])? * C64::new(w / 12.0, 0.0);
                    }
                    Ok(acc)
                };
                // derivatives are per unit step; rescale both by the step lengths
                let hx = if x == 0 { dirs[0].0 } else { C64::new(fstep, 0.0) };
                let hy = if y == 0 { dirs[0].0 } else { C64::new(fstep, 0.0) };
                let gx = gamma(x, &[])? / hx;
                let gy = gamma(y, &[])? / hy;
                let dx_gy = dd(y, x)? / (hx * hy);
                let dy_gx = dd(x, y)? / (hx * hy);
                let br = commutator(&gx, &gy);
                let curv = &dx_gy - &dy_gx + &br;
                let scale = dx_gy.norm() + dy_gx.norm() + gx.norm() * gy.norm();
                if scale > 0.0 {
                    flat = flat.max(curv.norm() / scale);
                }
            }
        }
        rows.push(ConnectionRow {
            re_tau: tau.re,
            im_tau: tau.im,
            t: t.iter().map(|z| (z.re, z.im)).collect(),
            derivative_residual: dres,
            tau_residual_raw: vnorm(&raw) / vnorm(&lhs),
            tau_residual_corrected: vnorm(&corrected) / vnorm(&lhs),
            flatness_residual: flat,
        });
    }
    Ok(ConnectionReport { delta, rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatRow {
    pub t: Vec<(f64, f64)>,
    pub primitive: Vec<(f64, f64)>,
    /// ‖∂u/∂t − Π‖/‖Π‖ with the Jacobian from central differences.
    pub jacobian_mismatch: f64,
}

/// Primitive vector u(t) on a parameter grid and the Jacobian–period comparison.
pub fn flat_coordinates(family: &DeformationFamily, grid: &[Vec<C64>], delta: f64, opts: &PeriodOptions) -> Result<Vec<FlatRow>> {
    let pts: Vec<(C64, Vec<C64>)> = grid.iter().map(|t| (family.tau, t.clone())).collect();
    let mut out = vec![];
    for (tau, t) in &pts {
        let fam = family.at(t, *tau)?;
        let base = period_matrix(&fam, opts)?;
        let m = t.len();
        let mut worst: f64 = 0.0;
        for j in 0..m {
            let d = derivative(C64::new(delta, 0.0), |s| {
                let mut tt = t.clone();
                tt[j] += s;
                Ok(aligned_periods(&family.at(&tt, *tau)?, &base, opts)?.primitive)
            })?;
            let col: Vec<C64> = (0..d.len()).map(|r| base.minus[(r, j)]).collect();
            let diff: Vec<C64> = d.iter().zip(&col).map(|(a, b)| a - b).collect();
            worst = worst.max(vnorm(&diff) / vnorm(&col));
        }
        out.push(FlatRow {
            t: t.iter().map(|z| (z.re, z.im)).collect(),
            primitive: base.primitive.iter().map(|z| (z.re, z.im)).collect(),
            jacobian_mismatch: worst,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct TtStarRow {
    pub re_tau: f64,
    pub im_tau: f64,
    pub t: Vec<(f64, f64)>,
    pub delta: f64,
    /// ‖∂_t̄(G⁻¹∂_tG) − [B, B̄]‖ with B̄ = G⁻¹BᴴG.
    pub cv_residual: f64,
    pub cv_scale: f64,
    /// ‖|τ|²∂_τ̄(G⁻¹∂_τG) − [U, Ū]‖.
    pub fantastic_residual: f64,
    pub fantastic_scale: f64,
}

impl TtStarRow {
    pub fn cv_relative(&self) -> f64 {
        if self.cv_scale == 0.0 {
            self.cv_residual
        } else {
            self.cv_residual / self.cv_scale
        }
    }

    pub fn fantastic_relative(&self) -> f64 {
        if self.fantastic_scale == 0.0 {
            self.fantastic_residual
        } else {
            self.fantastic_residual / self.fantastic_scale
        }
    }
}

#[derive(Clone, Debug)]
pub struct TtStarOptions {
    /// Deformation direction used for the Cecotti–Vafa check.
    pub direction: usize,
    pub deltas: Vec<f64>,
    pub grid: SpectralGrid,
    pub tol: f64,
    pub eigen: EigenOptions,
}

fn laplacian_identity(g: &[DMatrix<C64>; 5], h: f64, b: &DMatrix<C64>, scale: f64) -> Result<(f64, f64)> {
    // order: centre, +x, −x, +y, −y
    let g0 = &g[0];
    let inv = g0.clone().try_inverse().ok_or_else(|| Error::Singular("Gram matrix".into()))?;
    let gx = (&g[1] - &g[2]) / C64::new(2.0 * h, 0.0);
    let gy = (&g[3] - &g[4]) / C64::new(2.0 * h, 0.0);
    let i = C64::new(0.0, 1.0);
    let gt = (&gx - &gy * i) * C64::new(0.5, 0.0);
    let gtb = (&gx + &gy * i) * C64::new(0.5, 0.0);
    let lap = (&g[1] + &g[2] + &g[3] + &g[4] - g0 * C64::new(4.0, 0.0)) / C64::new(h * h, 0.0);
    let lhs = (-(&inv * &gtb * &inv * &gt) + &inv * lap * C64::new(0.25, 0.0)) * C64::new(scale, 0.0);
    let bbar = &inv * b.adjoint() * g0;
    let rhs = commutator(b, &bbar);
    Ok(((lhs - &rhs).norm(), rhs.norm()))
}

/// Cecotti–Vafa and τ-direction commutator identities from the Gram matrices of
/// harmonic frames on 5-point stencils in t_j and in τ.
pub fn ttstar_residuals(family: &DeformationFamily, points: &[(C64, Vec<C64>)], opts: &TtStarOptions) -> Result<Vec<TtStarRow>> {
    let deformers: Vec<UPoly> = family.deformers.iter().map(|g| g.to_univariate()).collect::<Result<_>>()?;
    let j = opts.direction;
    if j >= deformers.len() {
        return Err(Error::IndexOutOfRange { index: j, len: deformers.len() });
    }
    let gram = |tau: C64, t: &[C64]| -> Result<DMatrix<C64>> {
        let fam = family.at(t, tau)?;
        let f = fam.member_univariate()?.scale(tau);
        Ok(harmonic_frame(&f, &deformers, &opts.grid, opts.tol, &opts.eigen)?.gram)
    };
    let mut rows = vec![];
    for (tau, t) in points {
        let fam = family.at(t, *tau)?;
        let higgs = higgs_field(&fam)?;
        let b = higgs.in_deformer_frame(&higgs.b[j])?;
        let u = higgs.in_deformer_frame(&u_matrix(&fam)?)?;
        if b.nrows() == 1 {
            for &d in &opts.deltas {
                rows.push(TtStarRow { re_tau: tau.re, im_tau: tau.im, t: t.iter().map(|z| (z.re, z.im)).collect(), delta: d, cv_residual: 0.0, cv_scale: 0.0, fantastic_residual: 0.0, fantastic_scale: 0.0 });
            }
            continue;
        }
        let g0 = gram(*tau, t)?;
        for &d in &opts.deltas {
            let shifts = [C64::new(d, 0.0), C64::new(-d, 0.0), C64::new(0.0, d), C64::new(0.0, -d)];
            let tg: Vec<Result<DMatrix<C64>>> = shifts
                .par_iter()
                .map(|&s| {
                    let mut tt = t.clone();
                    tt[j] += s;
                    gram(*tau, &tt)
                })
                .collect();
            let taug: Vec<Result<DMatrix<C64>>> = shifts.par_iter().map(|&s| gram(tau + s, t)).collect();
            let mut gt = vec![g0.clone()];
            for r in tg {
                gt.push(r?);
            }
            let mut gtau = vec![g0.clone()];
            for r in taug {
                gtau.push(r?);
            }
            let gt: [DMatrix<C64>; 5] = gt.try_into().expect("five stencil points");
            let gtau: [DMatrix<C64>; 5] = gtau.try_into().expect("five stencil points");
            let (cv, cvs) = laplacian_identity(&gt, d, &b, 1.0)?;
            let (fa, fas) = laplacian_identity(&gtau, d, &u, tau.norm_sqr())?;
            rows.push(TtStarRow {
                re_tau: tau.re,
                im_tau: tau.im,
                t: t.iter().map(|z| (z.re, z.im)).collect(),
                delta: d,
                cv_residual: cv,
                cv_scale: cvs,
                fantastic_residual: fa,
                fantastic_scale: fas,
            });
        }
    }
    Ok(rows)
}

pub fn ttstar_csv(rows: &[TtStarRow]) -> String {
    let mut s = String::from("re_tau,im_tau,delta,cv_residual,cv_relative,fantastic_residual,fantastic_relative\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{:e},{:e},{:e},{:e}\n",
            r.re_tau,
            r.im_tau,
            r.delta,
            r.cv_residual,
            r.cv_relative(),
            r.fantastic_residual,
            r.fantastic_relative()
        ));
    }
    s
}

/// Summary of a Frobenius run as key = value lines.
pub fn frobenius_summary(data: &FrobeniusData, report: Option<&FrobeniusReport>) -> String {
    let mut s = format!(
        "mu = {}\nbasis = {:?}\ncommute_exactly = {}\neta_symmetric_exactly = {}\neta_symmetry_defect = {:e}\n",
        data.labels.len(),
        data.labels,
        data.higgs.commute_exactly(),
        data.eta_symmetric_exactly().map_or("n/a".to_string(), |b| b.to_string()),
        data.eta_symmetry_defect()
    );
    if let Some(r) = report {
        s.push_str(&format!(
            "samples = {}\ndelta = {:e}\nmax_wdvv = {:e}\nmax_symmetry_defect = {:e}\npotential_residual = {:e}\nmetric_variation = {:e}\n",
            r.samples.len(),
            r.delta,
            r.max_wdvv,
            r.max_symmetry_defect,
            r.potential_residual,
            r.metric_variation
        ));
    }
    s
}

/// Deformer monomial classes of the one-variable A_n miniversal family.
pub fn an_family(n: usize, t: &[C64], tau: C64) -> Result<DeformationFamily> {
    let v = vec!["z".to_string()];
    let base = LaurentPoly::monomial(&v, vec![n as i32 + 1], GaussRat::from_frac(1, n as i64 + 1));
    let deformers = (0..n).map(|j| LaurentPoly::monomial(&v, vec![j as i32], GaussRat::one())).collect();
    DeformationFamily::new(base, deformers, t.to_vec(), tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn a2_higgs_and_u() {
        let (t1, t2) = (c(0.25, -0.5), c(-1.0, 0.375));
        let fam = an_family(2, &[t1, t2], c(1.5, 0.5)).unwrap();
        let h = higgs_field(&fam).unwrap();
        let tau = fam.tau;
        let want = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), -t2, c(1.0, 0.0), c(0.0, 0.0)]) * tau;
        assert!((&h.b[1] - want).norm() < 1e-14);
        assert!((&h.b[0] - DMatrix::identity(2, 2) * tau).norm() < 1e-14);
        assert!(h.commute_exactly());
        let u = u_matrix(&fam).unwrap();
        let want_u = (DMatrix::identity(2, 2) * t1 + &h.b[1] / tau * (t2 * 2.0 / 3.0)) * tau;
        assert!((u - want_u).norm() < 1e-14);
        let d = frobenius_data(&fam).unwrap();
        assert!(d.eta_symmetry_defect() < 1e-12);
        assert_eq!(d.eta_symmetric_exactly(), Some(true));
    }

    #[test]
    fn exact_pairing_matches_critical_sum() {
        let fam = an_family(3, &[c(0.5, 0.0), c(-0.25, 0.5), c(1.0, -0.5)], c(1.0, 0.0)).unwrap();
        let exact = exact_residue_pairing(&fam).unwrap();
        let num = residue_pairing(&fam).unwrap().eta;
        assert!((gauss_matrix_to_c64(&exact) - num).norm() < 1e-10);
    }

    #[test]
    fn dependent_deformers_rejected() {
        let v = vec!["z".to_string()];
        let base = LaurentPoly::monomial(&v, vec![3], GaussRat::from_frac(1, 3));
        let g = LaurentPoly::monomial(&v, vec![1], GaussRat::one());
        let fam = DeformationFamily::new(base, vec![g.clone(), g], vec![c(0.0, 0.0); 2], c(1.0, 0.0)).unwrap();
        assert!(matches!(higgs_field(&fam), Err(Error::DependentDeformers)));
    }

    #[test]
    fn exact_tensor_is_symmetric_with_unit_axiom() {
        for n in [2usize, 3] {
            let t: Vec<C64> = (0..n).map(|k| c(0.5 - k as f64 * 0.25, 0.125 * k as f64)).collect();
            let fam = an_family(n, &t, c(1.0, 0.0)).unwrap();
            let a = frobenius_tensor_exact(&fam).unwrap();
            assert!(is_totally_symmetric(&a));
            let eta = exact_residue_pairing(&fam).unwrap();
            // deformer 0 is the unit; classes of z^j are basis vectors
            for j in 0..n {
                for k in 0..n {
                    assert_eq!(a[0][j][k], eta[j][k]);
                }
            }
        }
    }

    #[test]
    fn a3_flat_chart() {
        let fam = an_family(3, &[c(0.0, 0.0); 3], c(1.0, 0.0)).unwrap();
        let ch = FlatChart::for_family(&fam).unwrap();
        let t = [c(0.3, 0.1), c(-0.2, 0.4), c(0.7, -0.3)];
        let x = ch.flat(&t);
        // deformer 1 ↔ x_3 = s_0 − s_2²/2, z ↔ x_2 = s_1, z² ↔ x_1 = s_2
        assert!((x[0] - (t[0] - t[2] * t[2] / 2.0)).norm() < 1e-14);
        assert!((x[1] - t[1]).norm() < 1e-14 && (x[2] - t[2]).norm() < 1e-14);
        let back = ch.invert(&x, &[c(0.0, 0.0); 3]).unwrap();
        assert!(back.iter().zip(&t).all(|(a, b)| (a - b).norm() < 1e-12));
        let j = ch.jacobian(&t);
        let h = 1e-6;
        for i in 0..3 {
            let mut tp = t;
            tp[i] += h;
            let mut tm = t;
            tm[i] -= h;
            let (xp, xm) = (ch.flat(&tp), ch.flat(&tm));
            for k in 0..3 {
                assert!(((xp[k] - xm[k]) / (2.0 * h) - j[(k, i)]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn a3_flat_metric_is_constant_and_wdvv_holds() {
        let fam = an_family(3, &[c(0.0, 0.0); 3], c(1.0, 0.0)).unwrap();
        let ch = FlatChart::for_family(&fam).unwrap();
        let pts: Vec<Vec<C64>> = (0..4).map(|k| vec![c(0.1 * k as f64, 0.05), c(-0.2, 0.1 * k as f64), c(0.3, -0.1 * k as f64)]).collect();
        let r = frobenius_tensor(&fam, Some(&ch), &pts, 1e-2).unwrap();
        assert!(r.metric_variation < 1e-10, "{}", r.metric_variation);
        assert!(r.max_wdvv < 1e-10);
        assert!(r.max_symmetry_defect < 1e-12);
        let naive = frobenius_tensor(&fam, None, &pts, 1e-2).unwrap();
        assert!(naive.metric_variation > 1e-3);
        let half = frobenius_tensor(&fam, Some(&ch), &pts, 5e-3).unwrap();
        assert!(half.potential_residual <= r.potential_residual.max(1e-9));
    }

    #[test]
    fn series_power_matches_binomial() {
        let p = series_pow(&[c(0.0, 0.0), c(1.0, 0.0)], 0.5, 4);
        let want = [1.0, 0.5, -0.125, 0.0625, -0.0390625];
        for (a, b) in p.iter().zip(want) {
            assert!((a.re - b).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_connection_is_exact() {
        let v = vec!["z".to_string()];
        let fam = DeformationFamily::new(
            LaurentPoly::monomial(&v, vec![2], GaussRat::one()),
            vec![LaurentPoly::monomial(&v, vec![0], GaussRat::one())],
            vec![c(0.1, 0.2)],
            c(1.0, 0.0),
        )
        .unwrap();
        let rep = connection_residuals(&fam, &[(c(1.0, 0.0), vec![c(0.1, 0.2)]), (c(2.0, 1.0), vec![c(-0.3, 0.0)])], 1e-3, &PeriodOptions::default()).unwrap();
        for r in &rep.rows {
            assert!(r.derivative_residual < 1e-6 && r.tau_residual_corrected < 1e-6 && r.flatness_residual < 1e-6, "{r:?}");
        }
        // u(t₁) = e^{2τ t₁}u(0)
        let rows = flat_coordinates(&fam, &[vec![c(0.0, 0.0)], vec![c(0.3, -0.2)]], 1e-3, &PeriodOptions::default()).unwrap();
        let u0 = C64::new(rows[0].primitive[0].0, rows[0].primitive[0].1);
        let u1 = C64::new(rows[1].primitive[0].0, rows[1].primitive[0].1);
        assert!((u1 - u0 * (c(0.6, -0.4)).exp()).norm() < 1e-9);
    }

    #[test]
    fn a2_connection_residuals() {
        let fam = an_family(2, &[c(0.0, 0.0), c(-1.0, 0.3)], c(1.0, 0.0)).unwrap();
        let rep = connection_residuals(&fam, &[(c(4.0, 0.5), vec![c(0.1, 0.0), c(-1.0, 0.3)])], 1e-3, &PeriodOptions::default()).unwrap();
        let r = &rep.rows[0];
        assert!(r.derivative_residual < 1e-6, "{r:?}");
        assert!(r.tau_residual_corrected < 1e-6, "{r:?}");
        assert!(r.flatness_residual < 1e-3, "{r:?}");
    }
}
