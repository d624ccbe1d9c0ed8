//! One-variable Lefschetz thimbles: critical data, tracing, period integrals,
//! walls and Picard–Lefschetz transforms, monodromy, Witten matrix and real structure.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{eigenvalues, matrix_csv, rational_solve_unique, unimodular_inverse, IMat};
use crate::poly::{DeformationFamily, UPoly};
use crate::spectral::HarmonicFrame;
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalData {
    pub points: Vec<C64>,
    pub values: Vec<C64>,
    pub hessians: Vec<C64>,
    pub multiplicity: Vec<usize>,
    pub morse: Vec<bool>,
}

impl CriticalData {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_morse(&self) -> bool {
        self.morse.iter().all(|&m| m)
    }

    /// Indices sorted by Im(τϖ) ascending, ties by Re(τϖ).
    pub fn phase_order(&self, tau: C64) -> Vec<usize> {
        let mut o: Vec<usize> = (0..self.len()).collect();
        o.sort_by(|&a, &b| {
            let (x, y) = (tau * self.values[a], tau * self.values[b]);
            x.im.total_cmp(&y.im).then(x.re.total_cmp(&y.re))
        });
        o
    }
}

/// Roots of f' (companion eigenvalues, Newton-polished); roots closer than
/// 1e-6·(1 + |p|) are merged into one non-Morse point.
pub fn critical_points(f: &UPoly) -> Result<CriticalData> {
    if f.degree() < 2 {
        return Err(Error::Domain("critical points need deg f >= 2".into()));
    }
    let fp = f.derivative();
    let fpp = fp.derivative();
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for r in fp.roots() {
        match clusters.iter_mut().find(|(c, _)| (*c / C64::new(1.0, 0.0) - r).norm() < 1e-6 * (1.0 + r.norm())) {
            Some(slot) => {
                slot.0 = (slot.0 * slot.1 as f64 + r) / (slot.1 as f64 + 1.0);
                slot.1 += 1;
            }
            None => clusters.push((r, 1)),
        }
    }
    let scale = f.c.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut data = CriticalData { points: vec![], values: vec![], hessians: vec![], multiplicity: vec![], morse: vec![] };
    for (mut p, m) in clusters {
        if m == 1 {
            for _ in 0..4 {
                let s = fp.eval(p) / fpp.eval(p);
                if !s.is_finite() {
                    break;
                }
                p -= s;
            }
        }
        let h = fpp.eval(p);
        data.points.push(p);
        data.values.push(f.eval(p));
        data.hessians.push(h);
        data.multiplicity.push(m);
        data.morse.push(m == 1 && h.norm() > 1e-10 * scale * (1.0 + p.norm()).powi(f.degree() as i32));
    }
    Ok(data)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallCandidate {
    /// Critical indices of the pair.
    pub pair: (usize, usize),
    /// Their positions in the Im(τϖ) order.
    pub positions: (usize, usize),
    pub gap: f64,
}

/// Pairs whose Im(τϖ) agree to tol·(1 + max|τϖ|).
pub fn detect_walls(crit: &CriticalData, tau: C64, tol: f64) -> Vec<WallCandidate> {
    let order = crit.phase_order(tau);
    let scale = 1.0 + crit.values.iter().map(|v| (tau * v).norm()).fold(0.0, f64::max);
    let mut out = vec![];
    for (i, &a) in order.iter().enumerate() {
        for (j, &b) in order.iter().enumerate().skip(i + 1) {
            let gap = ((tau * crit.values[a]).im - (tau * crit.values[b]).im).abs();
            if gap < tol * scale {
                out.push(WallCandidate { pair: (a, b), positions: (i, j), gap });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    /// τ(f − ϖ) = −v²: Re(τf) decreases away from the critical point.
    Minus,
    /// τ(f − ϖ) = +v².
    Plus,
}

impl Sign {
    fn sigma(self) -> f64 {
        match self {
            Sign::Minus => 1.0,
            Sign::Plus => -1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TraceOptions {
    /// Trace until Re(τ(f − ϖ)) reaches −lambda (the weight is then below e^{−2·lambda}).
    pub lambda: f64,
    pub max_step: f64,
    pub v_cap: f64,
    /// Relative distance to another critical point that counts as a Stokes stall.
    pub stokes_radius: f64,
    /// Preferred tangent at the critical point; the sign of the seed direction follows it.
    pub orientation: Option<C64>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { lambda: 25.0, max_step: 0.05, v_cap: 60.0, stokes_radius: 1e-3, orientation: None }
    }
}

/// Steepest-descent curve through a critical point, parametrized by
/// τ(f(z) − ϖ) = ∓v² with v ascending along the polyline.
#[derive(Clone, Debug)]
pub struct Thimble {
    pub index: usize,
    pub sign: Sign,
    pub tau: C64,
    pub center: C64,
    pub value: C64,
    /// dz/dv at v = 0.
    pub direction: C64,
    pub v: Vec<f64>,
    pub z: Vec<C64>,
    /// max |Im(τ(f − ϖ))| along the polyline.
    pub phase_error: f64,
}

impl Thimble {
    /// Columns s (arclength), Re z, Im z, Re τf, Im τf.
    pub fn to_csv(&self, f: &UPoly) -> String {
        let mut s = String::from("s,re_z,im_z,re_tau_f,im_tau_f\n");
        let mut arc = 0.0;
        for (k, z) in self.z.iter().enumerate() {
            if k > 0 {
                arc += (z - self.z[k - 1]).norm();
            }
            let w = self.tau * f.eval(*z);
            s.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", arc, z.re, z.im, w.re, w.im));
        }
        s
    }
}

/// Valley directions of Re(σ'τf) → −∞: arg z = (π − φ)/d + 2πk/d, φ = arg(σ'τ·lc)
/// kept continuous by the caller (σ' = −1 for ascending thimbles).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValleyFrame {
    pub d: usize,
    pub phi: f64,
}

impl ValleyFrame {
    pub fn new(f: &UPoly, tau: C64, sign: Sign) -> Self {
        let mut phi = (tau * f.leading()).arg();
        if sign == Sign::Plus {
            phi += PI;
        }
        ValleyFrame { d: f.degree(), phi }
    }

    /// Same frame with φ shifted by a multiple of 2π to lie closest to `prev`.
    pub fn continued_from(mut self, prev: f64) -> Self {
        self.phi += ((prev - self.phi) / (2.0 * PI)).round() * 2.0 * PI;
        self
    }

    fn position(&self, z: C64) -> f64 {
        let d = self.d as f64;
        (z.arg() - (PI - self.phi) / d) / (2.0 * PI / d)
    }

    pub fn index(&self, z: C64) -> usize {
        (self.position(z).round() as i64).rem_euclid(self.d as i64) as usize
    }

    /// Angular offset from the nearest valley centre in units of the sector width.
    pub fn offset(&self, z: C64) -> f64 {
        let p = self.position(z);
        (p - p.round()).abs()
    }
}

fn nearest_other(crit: &CriticalData, a: usize, z: C64) -> (usize, f64) {
    (0..crit.len())
        .filter(|&b| b != a)
        .map(|b| (b, (z - crit.points[b]).norm() / (1.0 + crit.points[b].norm())))
        .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
}

/// Newton solve of τ(f(z) − ϖ) + σv² = 0 from z.
fn correct(f: &UPoly, fp: &UPoly, tau: C64, w: C64, sigma: f64, v: f64, mut z: C64, iters: usize) -> Option<C64> {
    let tol = 1e-14 * (1.0 + v * v + (tau * w).norm());
    for _ in 0..iters {
        let r = tau * (f.eval(z) - w) + sigma * v * v;
        if r.norm() <= tol {
            return Some(z);
        }
        let s = r / (tau * fp.eval(z));
        if !s.is_finite() {
            return None;
        }
        z -= s;
    }
    let r = tau * (f.eval(z) - w) + sigma * v * v;
    (r.norm() <= 1e3 * tol).then_some(z)
}

pub fn trace_thimble(f: &UPoly, tau: C64, crit: &CriticalData, a: usize, sign: Sign, opts: &TraceOptions) -> Result<Thimble> {
    if a >= crit.len() {
        return Err(Error::IndexOutOfRange { index: a, len: crit.len() });
    }
    if !crit.morse[a] {
        return Err(Error::NotMorse(format!("critical point {a} is degenerate")));
    }
    let fp = f.derivative();
    let p = crit.points[a];
    let w = crit.values[a];
    let sigma = sign.sigma();
    let dminus = {
        let d = (C64::new(-2.0, 0.0) / (tau * crit.hessians[a])).sqrt();
        match (sign, opts.orientation) {
            (Sign::Minus, Some(o)) if (o.conj() * d).re < 0.0 => -d,
            _ => d,
        }
    };
    let dir0 = match sign {
        Sign::Minus => dminus,
        Sign::Plus => {
            let d = C64::new(0.0, 1.0) * dminus;
            match opts.orientation {
                Some(o) if (o.conj() * d).re < 0.0 => -d,
                _ => d,
            }
        }
    };
    let frame = ValleyFrame::new(f, tau, sign);
    let v_min_end = opts.lambda.sqrt() + 0.5;
    let local = 1.0 / (tau * crit.hessians[a]).norm().sqrt();

    let mut branches: Vec<Vec<(f64, C64)>> = Vec::new();
    for dir in [1.0, -1.0] {
        let mut pts = vec![(0.0, p)];
        let (mut v, mut z) = (0.0f64, p);
        let mut dv = opts.max_step.min(0.25 * local.max(1e-3));
        loop {
            let vn = v + dir * dv;
            let slope = if v == 0.0 { dir0 } else { C64::new(-2.0 * sigma * v, 0.0) / (tau * fp.eval(z)) };
            let pred = z + slope * (dir * dv);
            let ok = correct(f, &fp, tau, w, sigma, vn, pred, 8)
                .filter(|zn| (zn - pred).norm() <= 0.3 * (slope * dv).norm() + 1e-12 && (zn - z).norm() <= 0.1 * (1.0 + z.norm()));
            match ok {
                Some(zn) => {
                    let (b, dist) = nearest_other(crit, a, zn);
                    if dist < opts.stokes_radius {
                        return Err(Error::StokesProximity { index: b, distance: dist });
                    }
                    v = vn;
                    z = zn;
                    pts.push((v, z));
                    dv = (dv * 1.5).min(opts.max_step);
                    let done = v.abs() >= v_min_end && frame.offset(z) < 0.25 && {
                        let lead = tau * f.leading() * z.powu(f.degree() as u32);
                        (tau * f.eval(z) - lead).norm() < 0.25 * lead.norm()
                    };
                    if done || v.abs() >= opts.v_cap {
                        break;
                    }
                }
                None => {
                    dv *= 0.5;
                    if dv < 1e-10 {
                        let (b, dist) = nearest_other(crit, a, z);
                        return Err(Error::StokesProximity { index: b, distance: dist });
                    }
                }
            }
        }
        branches.push(pts);
    }
    let mut vs = Vec::new();
    let mut zs = Vec::new();
    for &(v, z) in branches[1].iter().rev() {
        vs.push(v);
        zs.push(z);
    }
    for &(v, z) in branches[0].iter().skip(1) {
        vs.push(v);
        zs.push(z);
    }
    let phase_error = zs.iter().map(|&z| (tau * (f.eval(z) - w)).im.abs()).fold(0.0, f64::max);
    Ok(Thimble { index: a, sign, tau, center: p, value: w, direction: dir0, v: vs, z: zs, phase_error })
}

/// Relative-homology class e_end − e_start in valley coordinates.
pub fn thimble_class(th: &Thimble, frame: &ValleyFrame) -> Vec<i64> {
    let mut c = vec![0i64; frame.d];
    c[frame.index(*th.z.last().unwrap())] += 1;
    c[frame.index(th.z[0])] -= 1;
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Weight e^{τf + conj(τf)}.
    Twisted,
    /// Weight e^{2τf}.
    Holomorphic,
}

const GL8: [(f64, f64); 8] = [
    (-0.9602898564975363, 0.1012285362903763),
    (-0.7966664774136267, 0.2223810344533745),
    (-0.5255324099163290, 0.3137066458778873),
    (-0.1834346424956498, 0.3626837833783620),
    (0.1834346424956498, 0.3626837833783620),
    (0.5255324099163290, 0.3137066458778873),
    (0.7966664774136267, 0.2223810344533745),
    (0.9602898564975363, 0.1012285362903763),
];

/// Composite 8-point Gauss–Legendre over the polyline segments with v in range,
/// halving until successive estimates agree to rel_tol. Returns (value, Σ|terms|).
fn integrate_along<F>(th: &Thimble, range: (f64, f64), rel_tol: f64, mut point: F) -> Result<(C64, f64)>
where
    F: FnMut(f64, C64) -> Option<C64>,
{
    let mut segs = Vec::new();
    for k in 0..th.v.len() - 1 {
        let (a, b) = (th.v[k].max(range.0), th.v[k + 1].min(range.1));
        if b > a {
            segs.push((k, a, b));
        }
    }
    let mut eval = |level: u32| -> Option<(C64, f64)> {
        let parts = 1usize << level;
        let mut s = C64::new(0.0, 0.0);
        let mut mag = 0.0;
        for &(k, a, b) in &segs {
            let h = (b - a) / parts as f64;
            for q in 0..parts {
                let (lo, hi) = (a + q as f64 * h, a + (q + 1) as f64 * h);
                for (x, wt) in GL8 {
                    let v = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                    let tfrac = (v - th.v[k]) / (th.v[k + 1] - th.v[k]);
                    let guess = th.z[k] + (th.z[k + 1] - th.z[k]) * tfrac;
                    let term = point(v, guess)? * (0.5 * (hi - lo) * wt);
                    mag += term.norm();
                    s += term;
                }
            }
        }
        Some((s, mag))
    };
    let fail = || Error::Quadrature("node correction failed".into());
    let mut prev = eval(0).ok_or_else(fail)?;
    for level in 1..=5 {
        let cur = eval(level).ok_or_else(fail)?;
        if (cur.0 - prev.0).norm() <= rel_tol * cur.0.norm().max(1e-300) || (cur.0 - prev.0).norm() <= 1e-11 * cur.1 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!("no convergence to {rel_tol:e} after 5 halvings")))
}

/// ∫ W(z) g(z) dz over the thimble without prefactors; W = e^{±2τf} (Holomorphic)
/// or e^{±(τf + conj τf)} (Twisted), + on descending thimbles.
/// Returns the value and the absolute quadrature scale Σ|terms|.
pub fn raw_integral(th: &Thimble, f: &UPoly, g: &UPoly, mode: Mode) -> Result<(C64, f64)> {
    let fp = f.derivative();
    let tau = th.tau;
    let sigma = th.sign.sigma();
    let w = th.value;
    let vmax = th.v.last().unwrap().min(-th.v[0]);
    let vint = vmax.min(30f64.sqrt());
    let weight = |z: C64| -> C64 {
        let e = tau * (f.eval(z) - w) * sigma;
        match mode {
            Mode::Holomorphic => (e * 2.0).exp(),
            Mode::Twisted => C64::new((2.0 * e.re).exp(), 0.0),
        }
    };
    // decay check at the ends of the integration range
    for &z in [th.z[0], *th.z.last().unwrap()].iter() {
        let e = (tau * (f.eval(z) - w) * sigma).re;
        if e > -20.0 {
            return Err(Error::Quadrature(format!("integrand not decayed at the thimble end (exponent {e:.2})")));
        }
    }
    let (s, mag) = integrate_along(th, (-vint, vint), 1e-12, |v, guess| {
        let z = correct(f, &fp, tau, w, sigma, v, guess, 30)?;
        let dz = C64::new(-2.0 * sigma * v, 0.0) / (tau * fp.eval(z));
        Some(weight(z) * g.eval(z) * dz)
    })?;
    let tw = tau * w * sigma;
    let factor = match mode {
        Mode::Holomorphic => (tw * 2.0).exp(),
        Mode::Twisted => C64::new((2.0 * tw.re).exp(), 0.0),
    };
    Ok((s * factor, mag * factor.norm()))
}

/// Period with the τ-power prefactors of a one-variable family: τ^{−1/2}∫W for the
/// primitive (weight None), τ^{1/2}·c·∫W·g for a column with c = 2 (Holomorphic) or
/// 1 (Twisted); ascending thimbles carry the extra factor (−1)^n = −1.
pub fn period_integral(th: &Thimble, f: &UPoly, weight: Option<&UPoly>, mode: Mode) -> Result<C64> {
    let one = UPoly::from_real(&[1.0]);
    let (raw, _) = raw_integral(th, f, weight.unwrap_or(&one), mode)?;
    let rt = th.tau.sqrt();
    let mut p = match weight {
        None => raw / rt,
        Some(_) => raw * rt * if mode == Mode::Holomorphic { 2.0 } else { 1.0 },
    };
    if th.sign == Sign::Plus {
        p = -p;
    }
    Ok(p)
}

#[derive(Clone, Debug)]
pub struct PeriodMatrix {
    pub minus: DMatrix<C64>,
    pub plus: DMatrix<C64>,
    pub primitive: Vec<C64>,
    pub primitive_plus: Vec<C64>,
    /// Σ_a g_i(p_a) g_j(p_a) / f_t''(p_a).
    pub eta: DMatrix<C64>,
    pub tau: C64,
    pub t: Vec<C64>,
    /// Critical indices in row order (ascending Im(τϖ)).
    pub order: Vec<usize>,
    pub critical: CriticalData,
    pub mode: Mode,
    pub thimbles_minus: Vec<Thimble>,
    pub thimbles_plus: Vec<Thimble>,
    /// Parameter actually used when the requested one sat on a wall.
    pub perturbed_t: Option<Vec<C64>>,
}

impl PeriodMatrix {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("# minus\n");
        s.push_str(&matrix_csv(&self.minus));
        s.push_str("# plus\n");
        s.push_str(&matrix_csv(&self.plus));
        s.push_str("# primitive\n");
        s.push_str(&matrix_csv(&DMatrix::from_column_slice(self.primitive.len(), 1, &self.primitive)));
        s
    }
}

pub fn residue_eta(crit: &CriticalData, weights: &[UPoly]) -> DMatrix<C64> {
    let m = weights.len();
    DMatrix::from_fn(m, m, |i, j| {
        (0..crit.len()).map(|a| weights[i].eval(crit.points[a]) * weights[j].eval(crit.points[a]) / crit.hessians[a]).sum()
    })
}

#[derive(Clone, Debug)]
pub struct PeriodOptions {
    pub mode: Mode,
    /// Rotate t by e^{i·angle} when the parameter sits on a wall, instead of failing.
    pub wall_rotation: Option<f64>,
    pub wall_tol: f64,
    pub trace: TraceOptions,
}

impl Default for PeriodOptions {
    fn default() -> Self {
        PeriodOptions { mode: Mode::Holomorphic, wall_rotation: None, wall_tol: 1e-9, trace: TraceOptions::default() }
    }
}

fn univariate_weights(family: &DeformationFamily) -> Result<Vec<UPoly>> {
    family.deformers.iter().map(|g| g.to_univariate()).collect()
}

pub fn period_matrix(family: &DeformationFamily, opts: &PeriodOptions) -> Result<PeriodMatrix> {
    let mut fam = family.clone();
    let mut perturbed_t = None;
    let f = fam.member_univariate()?;
    let crit = critical_points(&f)?;
    if !crit.is_morse() {
        return Err(Error::NotMorse("period matrix needs a Morse member".into()));
    }
    if !detect_walls(&crit, fam.tau, opts.wall_tol).is_empty() {
        match opts.wall_rotation {
            Some(ang) => {
                let rot = C64::from_polar(1.0, ang);
                let t: Vec<C64> = fam.t.iter().map(|x| x * rot).collect();
                fam = fam.at(&t, fam.tau)?;
                perturbed_t = Some(t);
            }
            None => return Err(Error::OnWall(format!("t = {:?}", fam.t))),
        }
    }
    let f = fam.member_univariate()?;
    let crit = critical_points(&f)?;
    let weights = univariate_weights(&fam)?;
    let mu = crit.len();
    if weights.len() != mu {
        return Err(Error::Dimension(weights.len()));
    }
    let ev = DMatrix::from_fn(mu, mu, |a, c| weights[c].eval(crit.points[a]));
    let scale = ev.norm().max(1e-300);
    if ev.determinant().norm() < 1e-10 * scale.powi(mu as i32) {
        return Err(Error::DependentDeformers);
    }
    let tau = fam.tau;
    let order = crit.phase_order(tau);
    let traced: Vec<Result<(Thimble, Thimble)>> = order
        .par_iter()
        .map(|&a| {
            let m = trace_thimble(&f, tau, &crit, a, Sign::Minus, &opts.trace)?;
            let p = trace_thimble(&f, tau, &crit, a, Sign::Plus, &opts.trace)?;
            Ok((m, p))
        })
        .collect();
    let mut tm = Vec::with_capacity(mu);
    let mut tp = Vec::with_capacity(mu);
    for r in traced {
        let (m, p) = r?;
        tm.push(m);
        tp.push(p);
    }
    let cells: Vec<(usize, usize, bool)> =
        (0..mu).flat_map(|r| (0..=mu).flat_map(move |c| [(r, c, true), (r, c, false)])).collect();
    let vals: Vec<Result<C64>> = cells
        .par_iter()
        .map(|&(r, c, minus)| {
            let th = if minus { &tm[r] } else { &tp[r] };
            period_integral(th, &f, if c == mu { None } else { Some(&weights[c]) }, opts.mode)
        })
        .collect();
    let mut minus = DMatrix::zeros(mu, mu);
    let mut plus = DMatrix::zeros(mu, mu);
    let mut primitive = vec![C64::new(0.0, 0.0); mu];
    let mut primitive_plus = vec![C64::new(0.0, 0.0); mu];
    for (&(r, c, m), v) in cells.iter().zip(vals) {
        let v = v?;
        match (c == mu, m) {
            (true, true) => primitive[r] = v,
            (true, false) => primitive_plus[r] = v,
            (false, true) => minus[(r, c)] = v,
            (false, false) => plus[(r, c)] = v,
        }
    }
    Ok(PeriodMatrix {
        minus,
        plus,
        primitive,
        primitive_plus,
        eta: residue_eta(&crit, &weights),
        tau,
        t: fam.t.clone(),
        order,
        critical: crit,
        mode: opts.mode,
        thimbles_minus: tm,
        thimbles_plus: tp,
        perturbed_t,
    })
}

#[derive(Clone, Debug)]
pub struct WittenMatrix {
    pub matrix: DMatrix<C64>,
    pub rounded: IMat,
    /// max entrywise distance to the nearest integer.
    pub integrality_defect: f64,
    pub det: C64,
}

/// I_W = Π⁻ η_W⁻¹ (Π⁺)ᵀ with η_W = 4(−πi)^n·η, on Holomorphic-mode periods.
pub fn witten_matrix(pm: &PeriodMatrix) -> Result<WittenMatrix> {
    if pm.mode != Mode::Holomorphic {
        return Err(Error::Domain("the Witten matrix uses Holomorphic-mode periods".into()));
    }
    let eta_w = &pm.eta * C64::new(0.0, -4.0 * PI);
    let inv = eta_w.try_inverse().ok_or_else(|| Error::Singular("residue pairing".into()))?;
    let m = &pm.minus * inv * pm.plus.transpose();
    let rounded: IMat = m.row_iter().map(|r| r.iter().map(|x| x.re.round() as i64).collect()).collect();
    let mut integrality_defect: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            integrality_defect = integrality_defect.max((m[(i, j)] - C64::new(rounded[i][j] as f64, 0.0)).norm());
        }
    }
    let det = m.determinant();
    Ok(WittenMatrix { matrix: m, rounded, integrality_defect, det })
}

/// Signed count of transversal crossings between an ascending and a descending
/// polyline; each crossing counts sign(Im(conj(d_minus)·d_plus)).
pub fn intersection_number(tp: &Thimble, tm: &Thimble) -> Result<i64> {
    let mut total = 0i64;
    for i in 0..tm.z.len() - 1 {
        let (a0, a1) = (tm.z[i], tm.z[i + 1]);
        let da = a1 - a0;
        for j in 0..tp.z.len() - 1 {
            let (b0, b1) = (tp.z[j], tp.z[j + 1]);
            let db = b1 - b0;
            let den = (da.conj() * db).im;
            let w = b0 - a0;
            if den == 0.0 {
                continue;
            }
            let s = (w.conj() * db).im / den;
            let u = (w.conj() * da).im / den;
            if (0.0..1.0).contains(&s) && (0.0..1.0).contains(&u) {
                if den.abs() < 1e-8 * da.norm() * db.norm() {
                    return Err(Error::Tangential(format!("{}", a0 + da * s)));
                }
                total += den.signum() as i64;
            }
        }
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallEvent {
    /// Loop sample index after the crossing.
    pub step: usize,
    /// Positions (i, i+1) in the Im(τϖ) order before the crossing.
    pub positions: (usize, usize),
    pub intersection: i64,
    pub side: Side,
}

/// Left: C_i ← C_{i+1} + I·C_i, C_{i+1} ← C_i. Right: C_i ← C_{i+1}, C_{i+1} ← C_i + I·C_{i+1}.
pub fn wall_crossing_transform(basis: &IMat, event: &WallEvent) -> Result<IMat> {
    let (i, j) = event.positions;
    if j != i + 1 || j >= basis.len() {
        return Err(Error::NonAdjacent(i, j));
    }
    let k = event.intersection;
    let mut out = basis.clone();
    let (ci, cj) = (basis[i].clone(), basis[j].clone());
    match event.side {
        Side::Left => {
            out[i] = cj.iter().zip(&ci).map(|(a, b)| a + k * b).collect();
            out[j] = ci;
        }
        Side::Right => {
            out[i] = cj.clone();
            out[j] = ci.iter().zip(&cj).map(|(a, b)| a + k * b).collect();
        }
    }
    Ok(out)
}

/// Rows of `target` as integer combinations of the rows of `basis`.
fn express_rows(target: &IMat, basis: &IMat) -> Option<IMat> {
    let cols = basis.first()?.len();
    let a: Vec<Vec<BigRational>> =
        (0..cols).map(|k| basis.iter().map(|r| BigRational::from_integer(r[k].into())).collect()).collect();
    target
        .iter()
        .map(|row| {
            let b: Vec<BigRational> = row.iter().map(|&x| BigRational::from_integer(x.into())).collect();
            let x = rational_solve_unique(&a, &b)?;
            x.iter().map(|q| if q.is_integer() { i64::try_from(q.to_integer()).ok() } else { None }).collect()
        })
        .collect()
}

fn imat_mul(a: &IMat, b: &IMat) -> IMat {
    let n = b.first().map_or(0, |r| r.len());
    a.iter().map(|r| (0..n).map(|j| r.iter().zip(b).map(|(x, row)| x * row[j]).sum()).collect()).collect()
}

fn identity(n: usize) -> IMat {
    (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect()
}

/// Shift valley coordinates: entry k moves to k + s (mod d).
fn shift_coords(row: &[i64], s: i64) -> Vec<i64> {
    let d = row.len() as i64;
    let mut out = vec![0; row.len()];
    for (k, &x) in row.iter().enumerate() {
        out[(k as i64 + s).rem_euclid(d) as usize] = x;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopPoint {
    pub tau: C64,
    pub t: Vec<C64>,
}

/// τ e^{2πik/steps}, k = 0..steps, at fixed t.
pub fn tau_loop(tau: C64, t: &[C64], steps: usize) -> Vec<LoopPoint> {
    (0..steps).map(|k| LoopPoint { tau: tau * C64::from_polar(1.0, 2.0 * PI * k as f64 / steps as f64), t: t.to_vec() }).collect()
}

/// t_j = centre_j + radius·e^{2πik/steps} at fixed τ.
pub fn t_loop(tau: C64, t: &[C64], j: usize, radius: f64, steps: usize) -> Vec<LoopPoint> {
    (0..steps)
        .map(|k| {
            let mut tt = t.to_vec();
            tt[j] += C64::from_polar(radius, 2.0 * PI * k as f64 / steps as f64);
            LoopPoint { tau, t: tt }
        })
        .collect()
}

struct TransportState {
    points: Vec<C64>,
    dirs: Vec<C64>,
    classes: IMat,
    phi: f64,
    values: Vec<C64>,
    tau: C64,
}

fn transport_sample(family: &DeformationFamily, lp: &LoopPoint, prev: Option<&TransportState>) -> Result<TransportState> {
    let fam = family.at(&lp.t, lp.tau)?;
    let f = fam.member_univariate()?;
    let crit = critical_points(&f)?;
    if !crit.is_morse() {
        return Err(Error::NotMorse("loop passes through a non-Morse parameter".into()));
    }
    let mu = crit.len();
    let perm: Vec<usize> = match prev {
        None => (0..mu).collect(),
        Some(s) => {
            let mut perm = vec![usize::MAX; mu];
            let sep = (0..mu)
                .flat_map(|i| (0..mu).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| (s.points[i] - s.points[j]).norm())
                .fold(f64::INFINITY, f64::min);
            for (l, &q) in s.points.iter().enumerate() {
                let (b, d) = (0..mu).map(|b| (b, (crit.points[b] - q).norm())).fold((0, f64::INFINITY), |x, y| if y.1 < x.1 { y } else { x });
                if d > 0.4 * sep || perm.contains(&b) {
                    return Err(Error::UnresolvedCrossing("critical points moved too far in one step".into()));
                }
                perm[l] = b;
            }
            perm
        }
    };
    let mut frame = ValleyFrame::new(&f, lp.tau, Sign::Minus);
    if let Some(s) = prev {
        frame = frame.continued_from(s.phi);
    }
    let results: Vec<Result<Thimble>> = (0..mu)
        .into_par_iter()
        .map(|l| {
            let opts = TraceOptions { orientation: prev.map(|s| s.dirs[l]), ..TraceOptions::default() };
            trace_thimble(&f, lp.tau, &crit, perm[l], Sign::Minus, &opts)
        })
        .collect();
    let mut dirs = Vec::with_capacity(mu);
    let mut classes = Vec::with_capacity(mu);
    for r in results {
        let th = r?;
        dirs.push(th.direction);
        classes.push(thimble_class(&th, &frame));
    }
    Ok(TransportState {
        points: perm.iter().map(|&b| crit.points[b]).collect(),
        values: perm.iter().map(|&b| crit.values[b]).collect(),
        dirs,
        classes,
        phi: frame.phi,
        tau: lp.tau,
    })
}

fn phase_positions(s: &TransportState) -> Vec<usize> {
    let mut o: Vec<usize> = (0..s.values.len()).collect();
    o.sort_by(|&a, &b| (s.tau * s.values[a]).im.total_cmp(&(s.tau * s.values[b]).im));
    let mut pos = vec![0; o.len()];
    for (p, &l) in o.iter().enumerate() {
        pos[l] = p;
    }
    pos
}

/// Classify one transport step as identity or a single Picard–Lefschetz move.
fn classify_step(prev: &TransportState, cur: &TransportState, step: usize) -> Result<(IMat, Option<WallEvent>)> {
    let delta = express_rows(&cur.classes, &prev.classes)
        .ok_or_else(|| Error::UnresolvedCrossing(format!("step {step}: classes are not an integral change of basis")))?;
    let mu = delta.len();
    let changed: Vec<usize> = (0..mu).filter(|&a| (0..mu).any(|b| delta[a][b] != (a == b) as i64)).collect();
    let pos0 = phase_positions(prev);
    let pos1 = phase_positions(cur);
    let swapped: Vec<usize> = (0..mu).filter(|&l| pos0[l] != pos1[l]).collect();
    match changed.len() {
        0 => {
            if swapped.is_empty() {
                return Ok((delta, None));
            }
            if swapped.len() != 2 {
                return Err(Error::UnresolvedCrossing(format!("step {step}: several walls crossed")));
            }
            let (x, y) = (swapped[0], swapped[1]);
            let i = pos0[x].min(pos0[y]);
            if pos0[x].abs_diff(pos0[y]) != 1 {
                return Err(Error::NonAdjacent(pos0[x].min(pos0[y]), pos0[x].max(pos0[y])));
            }
            Ok((delta, Some(WallEvent { step, positions: (i, i + 1), intersection: 0, side: Side::Left })))
        }
        1 => {
            let a = changed[0];
            let others: Vec<usize> = (0..mu).filter(|&b| b != a && delta[a][b] != 0).collect();
            if delta[a][a] != 1 || others.len() != 1 {
                return Err(Error::UnresolvedCrossing(format!("step {step}: change is not a Picard–Lefschetz move")));
            }
            let b = others[0];
            if pos0[a].abs_diff(pos0[b]) != 1 {
                return Err(Error::NonAdjacent(pos0[a].min(pos0[b]), pos0[a].max(pos0[b])));
            }
            if swapped.len() != 2 || !swapped.contains(&a) || !swapped.contains(&b) {
                return Err(Error::UnresolvedCrossing(format!("step {step}: basis changed without a wall")));
            }
            let i = pos0[a].min(pos0[b]);
            let side = if pos0[a] == i + 1 { Side::Left } else { Side::Right };
            let intersection = delta[a][b];
            Ok((delta, Some(WallEvent { step, positions: (i, i + 1), intersection, side })))
        }
        _ => Err(Error::UnresolvedCrossing(format!("step {step}: {} thimbles changed at once", changed.len()))),
    }
}

fn transport(family: &DeformationFamily, path: &[LoopPoint]) -> Result<(Vec<TransportState>, IMat, Vec<WallEvent>)> {
    let mut states: Vec<TransportState> = Vec::with_capacity(path.len());
    let mut b = IMat::new();
    let mut walls = vec![];
    for (k, lp) in path.iter().enumerate() {
        let mut attempt = lp.clone();
        let mut st = None;
        for nudge in 0..4 {
            match transport_sample(family, &attempt, states.last()) {
                Ok(s) => {
                    st = Some(s);
                    break;
                }
                Err(Error::StokesProximity { .. }) if nudge < 3 => {
                    // step off the wall toward the next sample
                    let next = &path[(k + 1) % path.len()];
                    let frac = 1e-3 * (nudge + 1) as f64;
                    attempt = LoopPoint {
                        tau: lp.tau + (next.tau - lp.tau) * frac,
                        t: lp.t.iter().zip(&next.t).map(|(a, c)| a + (c - a) * frac).collect(),
                    };
                }
                Err(e) => return Err(e),
            }
        }
        let st = st.ok_or_else(|| Error::UnresolvedCrossing(format!("sample {k} stays on a Stokes ray")))?;
        if let Some(prev) = states.last() {
            let (delta, ev) = classify_step(prev, &st, k)?;
            b = imat_mul(&delta, &b);
            walls.extend(ev);
        } else {
            b = identity(st.classes.len());
        }
        states.push(st);
    }
    Ok((states, b, walls))
}

#[derive(Clone, Debug)]
pub struct MonodromyResult {
    /// Row a expresses the transported thimble a in the starting basis (ordered by Im(τϖ)).
    pub matrix: IMat,
    pub eigenvalues: Vec<C64>,
    pub semisimple: bool,
    /// Condition number of the eigenvector matrix (1 for finite-order T).
    pub condition: f64,
    /// Smallest N ≤ 120 with T^N = I, if any.
    pub order: Option<u32>,
    /// Smallest m with (T^N − I)^m = 0, where N is the common order of the eigenvalues.
    pub nilpotency: Option<u32>,
    pub det: i64,
    pub walls: Vec<WallEvent>,
}

impl MonodromyResult {
    pub fn report(&self) -> String {
        let mut s = String::from("matrix\n");
        for r in &self.matrix {
            s.push_str(&r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
            s.push('\n');
        }
        s.push_str("eigenvalues\n");
        for e in &self.eigenvalues {
            s.push_str(&format!("{:.12} {:.12}\n", e.re, e.im));
        }
        s.push_str(&format!(
            "det {}\nsemisimple {}\ncondition {:e}\norder {}\nnilpotency {}\nwalls {}\n",
            self.det,
            self.semisimple,
            self.condition,
            self.order.map_or("none".into(), |x| x.to_string()),
            self.nilpotency.map_or("none".into(), |x| x.to_string()),
            self.walls.len()
        ));
        for w in &self.walls {
            s.push_str(&format!("wall step {} positions {:?} I {} {:?}\n", w.step, w.positions, w.intersection, w.side));
        }
        s
    }
}

fn imat_pow(a: &IMat, k: u32) -> IMat {
    (0..k).fold(identity(a.len()), |acc, _| imat_mul(&acc, a))
}

fn is_zero(a: &IMat) -> bool {
    a.iter().flatten().all(|&x| x == 0)
}

fn analyse(t: IMat, walls: Vec<WallEvent>) -> MonodromyResult {
    let n = t.len();
    let tc = DMatrix::from_fn(n, n, |i, j| C64::new(t[i][j] as f64, 0.0));
    let mut eig = eigenvalues(&tc);
    eig.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    let order = (1..=120u32).find(|&k| imat_pow(&t, k) == identity(n));
    // common order of eigenvalues as roots of unity
    let common = (1..=120u32).find(|&k| eig.iter().all(|e| (e.powu(k) - 1.0).norm() < 1e-6));
    let nilpotency = common.and_then(|nn| {
        let m: IMat = imat_pow(&t, nn).iter().enumerate().map(|(i, r)| r.iter().enumerate().map(|(j, &x)| x - (i == j) as i64).collect()).collect();
        (1..=n as u32 + 1).find(|&k| is_zero(&imat_pow(&m, k)))
    });
    let (semisimple, condition) = if order.is_some() {
        (true, 1.0)
    } else {
        let v = DMatrix::from_fn(n, n, |i, j| crate::linalg::eigenvector(&tc, eig[j])[i]);
        let sv = v.singular_values();
        let c = sv.max() / sv.min().max(1e-300);
        (c < 1e3, c)
    };
    let det = (tc.determinant().re).round() as i64;
    MonodromyResult { matrix: t, eigenvalues: eig, semisimple, condition, order, nilpotency, det, walls }
}

/// Transport the descending thimble basis around a closed loop (the first sample is
/// revisited at the end) and return the accumulated basis change.
pub fn monodromy_along_loop(family: &DeformationFamily, path: &[LoopPoint]) -> Result<MonodromyResult> {
    if path.len() < 3 {
        return Err(Error::Domain("a loop needs at least three samples".into()));
    }
    let mut closed = path.to_vec();
    closed.push(path[0].clone());
    let (states, b, walls) = transport(family, &closed)?;
    let (s0, sn) = (&states[0], states.last().unwrap());
    let mu = s0.classes.len();
    let d = s0.classes[0].len();
    let winding = ((sn.phi - s0.phi) / (2.0 * PI)).round() as i64;
    // end label l sits at start point pi[l] with orientation sign sg[l]
    let mut pi = vec![0usize; mu];
    let mut sg = vec![0i64; mu];
    for l in 0..mu {
        let (j, _) = (0..mu).map(|j| (j, (sn.points[l] - s0.points[j]).norm())).fold((0, f64::INFINITY), |x, y| if y.1 < x.1 { y } else { x });
        let orig = shift_coords(&sn.classes[l], -winding);
        pi[l] = j;
        sg[l] = if orig == s0.classes[j] {
            1
        } else if orig.iter().zip(&s0.classes[j]).all(|(a, c)| *a == -c) {
            -1
        } else {
            return Err(Error::UnresolvedCrossing("closing sample does not reproduce the starting thimbles".into()));
        };
    }
    let binv = unimodular_inverse(&b);
    let mut t = vec![vec![0i64; mu]; mu];
    for a in 0..mu {
        for l in 0..mu {
            t[a][pi[l]] += binv[a][l] * sg[l];
        }
    }
    // direct valley-shift formula as a consistency check
    let shifted: IMat = s0.classes.iter().map(|r| shift_coords(r, -winding)).collect();
    let direct = express_rows(&shifted, &s0.classes)
        .ok_or_else(|| Error::UnresolvedCrossing("valley shift is not integral in the thimble basis".into()))?;
    if direct != t {
        return Err(Error::UnresolvedCrossing("accumulated transforms disagree with the valley shift".into()));
    }
    let _ = d;
    let order = phase_positions(s0);
    let mut by_pos = vec![0usize; mu];
    for (l, &p) in order.iter().enumerate() {
        by_pos[p] = l;
    }
    let ts: IMat = by_pos.iter().map(|&a| by_pos.iter().map(|&b2| t[a][b2]).collect()).collect();
    Ok(analyse(ts, walls))
}

#[derive(Clone, Debug)]
pub struct HalfMonodromy {
    /// Transport over τ → τe^{iπ} followed by the antipodal relabelling of valleys.
    pub matrix: IMat,
    pub walls: Vec<WallEvent>,
}

/// Half-loop map whose square is the τ-loop monodromy (odd degree only).
pub fn witten_half_monodromy(family: &DeformationFamily, steps: usize) -> Result<HalfMonodromy> {
    let f = family.member_univariate()?;
    let d = f.degree();
    if d % 2 == 0 {
        return Err(Error::Domain("the antipodal relabelling needs odd degree".into()));
    }
    let path: Vec<LoopPoint> = (0..=steps)
        .map(|k| LoopPoint { tau: family.tau * C64::from_polar(1.0, PI * k as f64 / steps as f64), t: family.t.clone() })
        .collect();
    let (states, _, walls) = transport(family, &path)?;
    let s0 = &states[0];
    let half = ((d - 1) / 2) as i64;
    let winding_half = ((states.last().unwrap().phi - s0.phi) / PI).round() as i64;
    if winding_half != 1 {
        return Err(Error::UnresolvedCrossing("half loop did not advance the valley frame by π".into()));
    }
    let moved: IMat = s0.classes.iter().map(|r| shift_coords(r, half)).collect();
    let k = express_rows(&moved, &s0.classes).ok_or_else(|| Error::UnresolvedCrossing("half-loop map not integral".into()))?;
    let order = phase_positions(s0);
    let mu = k.len();
    let mut by_pos = vec![0usize; mu];
    for (l, &p) in order.iter().enumerate() {
        by_pos[p] = l;
    }
    let ks: IMat = by_pos.iter().map(|&a| by_pos.iter().map(|&b| k[a][b]).collect()).collect();
    Ok(HalfMonodromy { matrix: ks, walls })
}

/// Π_{ac} = ∫_{C_a} e^{F + conj F}(u_c dz + v_c dz̄) for the harmonic frame of F = τf_t,
/// rows ordered by Im(ϖ_a) of F.
pub fn frame_periods(big_f: &UPoly, frame: &HarmonicFrame) -> Result<DMatrix<C64>> {
    let crit = critical_points(big_f)?;
    let one = C64::new(1.0, 0.0);
    let order = crit.phase_order(one);
    let grid = frame.fields[0].grid;
    let lim = grid.half_width - 4.0 * grid.spacing;
    let mu = frame.fields.len();
    let fp = big_f.derivative();
    let mut pi = DMatrix::zeros(mu, mu);
    for (r, &a) in order.iter().enumerate() {
        let th = trace_thimble(big_f, one, &crit, a, Sign::Minus, &TraceOptions { lambda: 16.0, ..TraceOptions::default() })?;
        // keep the portion inside the grid
        let inside = |z: C64| z.re.abs() < lim && z.im.abs() < lim;
        let c0 = th.v.iter().position(|&v| v == 0.0).unwrap();
        let hi = (c0..th.z.len()).take_while(|&k| inside(th.z[k])).last().unwrap();
        let lo = (0..=c0).rev().take_while(|&k| inside(th.z[k])).last().unwrap();
        let range = (th.v[lo], th.v[hi]);
        // the frame weight e^{-2v²} must be below 1e-7 where the grid ends
        if range.0 * range.0 < 8.0 || range.1 * range.1 < 8.0 {
            return Err(Error::Quadrature("thimble leaves the grid before the weight decays".into()));
        }
        let w = th.value;
        for c in 0..mu {
            let fld = &frame.fields[c];
            let (s, _) = integrate_along(&th, range, 1e-9, |v, guess| {
                let z = correct(big_f, &fp, one, w, 1.0, v, guess, 30)?;
                let dz = C64::new(-2.0 * v, 0.0) / fp.eval(z);
                let wgt = (2.0 * (big_f.eval(z) - w).re).exp();
                Some((fld.value_at(0, z) * dz + fld.value_at(1, z) * dz.conj()) * wgt)
            })?;
            pi[(r, c)] = s * (2.0 * w.re).exp();
        }
    }
    Ok(pi)
}

#[derive(Clone, Debug)]
pub struct RealStructure {
    /// M = Π⁻¹·conj(Π).
    pub m: DMatrix<C64>,
    /// g = η·M.
    pub g: DMatrix<C64>,
    /// ‖M·conj(M) − I‖.
    pub involution_error: f64,
    /// ‖g − gᴴ‖/‖g‖.
    pub hermitian_error: f64,
    pub positive_definite: bool,
}

pub fn real_structure(pi: &DMatrix<C64>, eta: &DMatrix<C64>) -> Result<RealStructure> {
    let n = pi.nrows();
    let m = pi.clone().lu().solve(&pi.map(|x| x.conj())).ok_or_else(|| Error::Singular("period matrix".into()))?;
    let g = eta * &m;
    let involution_error = (&m * m.map(|x| x.conj()) - DMatrix::<C64>::identity(n, n)).norm();
    let hermitian_error = (&g - g.adjoint()).norm() / g.norm();
    let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let positive_definite = h.cholesky().is_some();
    Ok(RealStructure { m, g, involution_error, hermitian_error, positive_definite })
}

/// Winding number of a closed sequence of nonzero complex numbers (e.g. det M along a loop).
pub fn maslov_degree(dets: &[C64]) -> i64 {
    let mut total = 0.0;
    for k in 0..dets.len() {
        let a = dets[k];
        let b = dets[(k + 1) % dets.len()];
        total += (b / a).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_polynomial, var_names};

    fn cubic(t: C64) -> UPoly {
        UPoly::new(vec![C64::new(0.0, 0.0), -t, C64::new(0.0, 0.0), C64::new(1.0 / 3.0, 0.0)])
    }

    fn a2_family(t0: f64, t1: C64, tau: C64) -> DeformationFamily {
        let v = var_names(&["z"]);
        DeformationFamily::new(
            parse_polynomial("z^3/3", &v).unwrap(),
            vec![parse_polynomial("1", &v).unwrap(), parse_polynomial("z", &v).unwrap()],
            vec![C64::new(t0, 0.0), t1],
            tau,
        )
        .unwrap()
    }

    #[test]
    fn critical_examples() {
        let c = critical_points(&cubic(C64::new(1.0, 0.0))).unwrap();
        assert_eq!(c.len(), 2);
        for (p, v) in c.points.iter().zip(&c.values) {
            assert!((p.norm() - 1.0).abs() < 1e-14);
            assert!((v + p * (2.0 / 3.0)).norm() < 1e-14);
        }
        let q = critical_points(&UPoly::from_real(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(q.points, vec![C64::new(0.0, 0.0)]);
        let d = critical_points(&UPoly::from_real(&[0.0, 0.0, 0.0, 1.0 / 3.0])).unwrap();
        assert_eq!((d.len(), d.multiplicity[0], d.morse[0]), (1, 2, false));
        assert!(critical_points(&UPoly::from_real(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn wall_examples() {
        let one = C64::new(1.0, 0.0);
        let c = critical_points(&cubic(one)).unwrap();
        assert_eq!(detect_walls(&c, one, 1e-9).len(), 1);
        let c = critical_points(&cubic(C64::from_polar(1.0, PI / 6.0))).unwrap();
        assert!(detect_walls(&c, one, 1e-9).is_empty());
        for k in 0..3 {
            let c = critical_points(&cubic(C64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0))).unwrap();
            assert_eq!(detect_walls(&c, one, 1e-9).len(), 1, "k = {k}");
        }
    }

    #[test]
    fn quadratic_thimble_is_imaginary_axis() {
        let f = UPoly::from_real(&[0.0, 0.0, 1.0]);
        let c = critical_points(&f).unwrap();
        let th = trace_thimble(&f, C64::new(1.0, 0.0), &c, 0, Sign::Minus, &TraceOptions::default()).unwrap();
        assert!(th.z.iter().all(|z| z.re.abs() < 1e-8));
        let p = period_integral(&th, &f, None, Mode::Holomorphic).unwrap();
        assert!((p - C64::new(0.0, (PI / 2.0).sqrt())).norm() < 1e-6);
        let up = trace_thimble(&f, C64::new(1.0, 0.0), &c, 0, Sign::Plus, &TraceOptions::default()).unwrap();
        assert!(up.z.iter().all(|z| z.im.abs() < 1e-8));
        assert_eq!(intersection_number(&up, &th).unwrap(), 1);
    }

    #[test]
    fn cubic_thimbles_keep_phase_and_modes_agree() {
        let t = C64::from_polar(1.0, 0.3);
        let f = cubic(t);
        let tau = C64::new(1.2, 0.4);
        let c = critical_points(&f).unwrap();
        for a in 0..2 {
            let th = trace_thimble(&f, tau, &c, a, Sign::Minus, &TraceOptions::default()).unwrap();
            assert!(th.phase_error < 1e-8 * (1.0 + (tau * th.value).norm()));
            let re: Vec<f64> = th.z.iter().map(|z| (tau * f.eval(*z)).re).collect();
            let k0 = th.v.iter().position(|&v| v == 0.0).unwrap();
            assert!(re[k0..].windows(2).all(|w| w[1] < w[0]) && re[..=k0].windows(2).all(|w| w[1] > w[0]));
            let h = period_integral(&th, &f, None, Mode::Holomorphic).unwrap();
            let tw = period_integral(&th, &f, None, Mode::Twisted).unwrap();
            let ph = C64::from_polar(1.0, -2.0 * (tau * th.value).im);
            assert!((tw - ph * h).norm() < 1e-8 * h.norm());
            let one = UPoly::from_real(&[1.0]);
            let col = period_integral(&th, &f, Some(&one), Mode::Twisted).unwrap();
            assert!((col - tw * tau).norm() < 1e-10 * col.norm());
        }
    }

    #[test]
    fn exact_weights_integrate_to_zero() {
        // ∫ e^{2τf}(2τ f' h + h') dz = 0 on every thimble
        let f = cubic(C64::from_polar(0.8, 0.5));
        let tau = C64::new(0.7, -0.2);
        let h = UPoly::new(vec![C64::new(0.3, 0.1), C64::new(-1.0, 0.0), C64::new(0.0, 0.5)]);
        let g = f.derivative().mul(&h).scale(tau * 2.0).add(&h.derivative());
        let c = critical_points(&f).unwrap();
        for a in 0..2 {
            let th = trace_thimble(&f, tau, &c, a, Sign::Minus, &TraceOptions::default()).unwrap();
            let (v, scale) = raw_integral(&th, &f, &g, Mode::Holomorphic).unwrap();
            assert!(v.norm() < 1e-8 * scale, "{v} vs {scale}");
        }
    }

    #[test]
    fn a2_periods_and_witten_matrix() {
        let fam = a2_family(0.1, C64::from_polar(1.0, 0.3 + PI), C64::new(1.0, 0.0));
        let pm = period_matrix(&fam, &PeriodOptions::default()).unwrap();
        assert!(pm.minus.determinant().norm() > 1e-6);
        let w = witten_matrix(&pm).unwrap();
        assert!(w.integrality_defect < 1e-3, "{}", w.matrix);
        assert!((w.det.norm() - 1.0).abs() < 1e-3);
        // the constant deformer column is 2τ times the primitive in Holomorphic mode
        for r in 0..2 {
            assert!((pm.minus[(r, 0)] - pm.primitive[r] * 2.0).norm() < 1e-10 * pm.minus[(r, 0)].norm());
        }
        let q = a2_family(0.0, C64::new(-1.0, 0.0), C64::new(1.0, 0.0));
        assert!(matches!(period_matrix(&q, &PeriodOptions::default()), Err(Error::OnWall(_))));
        let pq = period_matrix(&q, &PeriodOptions { wall_rotation: Some(1e-2), ..PeriodOptions::default() }).unwrap();
        assert!(pq.perturbed_t.is_some());
    }

    #[test]
    fn primitive_derivative_is_the_column() {
        let t1 = C64::from_polar(1.0, 0.3 + PI);
        let fam = a2_family(0.1, t1, C64::new(0.9, 0.2));
        let pm = period_matrix(&fam, &PeriodOptions::default()).unwrap();
        let eps = 1e-4;
        for c in 0..2 {
            let shifted = |s: f64| {
                let mut t = fam.t.clone();
                t[c] += s * eps;
                period_matrix(&fam.at(&t, fam.tau).unwrap(), &PeriodOptions::default()).unwrap().primitive
            };
            let (up, dn) = (shifted(1.0), shifted(-1.0));
            for r in 0..2 {
                let fd = (up[r] - dn[r]) / (2.0 * eps);
                assert!((fd - pm.minus[(r, c)]).norm() < 1e-6 * pm.minus[(r, c)].norm(), "{fd} {}", pm.minus[(r, c)]);
            }
        }
    }

    #[test]
    fn dual_thimbles_meet_once() {
        let f = cubic(C64::from_polar(1.0, 0.3));
        let tau = C64::new(1.0, 0.0);
        let c = critical_points(&f).unwrap();
        let o = TraceOptions::default();
        for a in 0..2 {
            let up = trace_thimble(&f, tau, &c, a, Sign::Plus, &o).unwrap();
            for b in 0..2 {
                let down = trace_thimble(&f, tau, &c, b, Sign::Minus, &o).unwrap();
                assert_eq!(intersection_number(&up, &down).unwrap(), (a == b) as i64);
            }
        }
    }

    #[test]
    fn quadratic_period_matrix_is_one_by_one() {
        let v = var_names(&["z"]);
        let fam = DeformationFamily::new(
            parse_polynomial("z^2", &v).unwrap(),
            vec![parse_polynomial("1", &v).unwrap()],
            vec![C64::new(0.0, 0.0)],
            C64::new(1.0, 0.0),
        )
        .unwrap();
        let pm = period_matrix(&fam, &PeriodOptions::default()).unwrap();
        assert_eq!(pm.minus.shape(), (1, 1));
        assert!(pm.minus[(0, 0)].norm() > 0.1);
    }

    #[test]
    fn transforms() {
        let basis: IMat = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let ev = |i: i64, side| WallEvent { step: 0, positions: (0, 1), intersection: i, side };
        let swap = wall_crossing_transform(&basis, &ev(0, Side::Left)).unwrap();
        assert_eq!(swap, vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 1]]);
        for k in [-2, 1, 3] {
            let l = wall_crossing_transform(&basis, &ev(k, Side::Left)).unwrap();
            let back = wall_crossing_transform(&l, &ev(-k, Side::Right)).unwrap();
            assert_eq!(back, basis);
            let m = DMatrix::from_fn(3, 3, |i, j| l[i][j] as f64);
            assert!((m.determinant() + 1.0).abs() < 1e-12);
        }
        let far = WallEvent { step: 0, positions: (0, 2), intersection: 1, side: Side::Left };
        assert!(matches!(wall_crossing_transform(&basis, &far), Err(Error::NonAdjacent(0, 2))));
    }

    #[test]
    fn tau_loop_monodromy_for_a2_and_quadratic() {
        let fam = a2_family(0.0, C64::from_polar(1.0, 0.3 + PI), C64::new(1.0, 0.0));
        let res = monodromy_along_loop(&fam, &tau_loop(fam.tau, &fam.t, 48)).unwrap();
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let mut want = [w, w * w];
        want.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        for (e, x) in res.eigenvalues.iter().zip(want) {
            assert!((e - x).norm() < 1e-2);
        }
        assert_eq!(res.order, Some(3));
        assert!(res.semisimple);
        assert_eq!(res.nilpotency, Some(1));
        assert!(!res.walls.is_empty());
        let half = witten_half_monodromy(&fam, 24).unwrap();
        assert_eq!(imat_mul(&half.matrix, &half.matrix), res.matrix);

        let v = var_names(&["z"]);
        let q = DeformationFamily::fixed(parse_polynomial("z^2", &v).unwrap(), C64::new(1.0, 0.0)).unwrap();
        let r = monodromy_along_loop(&q, &tau_loop(q.tau, &[], 16)).unwrap();
        assert_eq!(r.matrix, vec![vec![-1]]);
    }

    #[test]
    fn chamber_loop_is_trivial() {
        let fam = a2_family(0.0, C64::from_polar(1.0, 0.3 + PI), C64::new(1.0, 0.0));
        let res = monodromy_along_loop(&fam, &t_loop(fam.tau, &fam.t, 1, 0.1, 12)).unwrap();
        assert_eq!(res.matrix, identity(2));
        assert!(res.walls.is_empty());
    }

    #[test]
    fn maslov_winding() {
        let loop_: Vec<C64> = (0..20).map(|k| C64::from_polar(2.0, -4.0 * PI * k as f64 / 20.0)).collect();
        assert_eq!(maslov_degree(&loop_), -2);
    }
}
