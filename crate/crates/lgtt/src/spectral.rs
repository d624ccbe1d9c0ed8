//! Finite-difference twisted Laplacian on a square lattice in ℂ (one variable),
//! degrees 0, 1, 2, with a shift-invert eigen-solver and harmonic frames.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::poly::UPoly;
use crate::{Error, Result, C64};

/// Exact oscillator levels for f = tτ z² on the real Witten deformation:
/// degree 0 gives 2tτ(1+2k), degree 1 gives 2tτ(3+2k).
pub fn oscillator_spectrum_real(t: f64, tau: f64, degree: u8, k_max: usize) -> Result<Vec<f64>> {
    if !(t > 0.0 && tau > 0.0) {
        return Err(Error::Domain("t and tau must be positive".into()));
    }
    let off = match degree {
        0 => 1.0,
        1 => 3.0,
        _ => return Err(Error::Domain("degree must be 0 or 1".into())),
    };
    Ok((0..=k_max).map(|k| 2.0 * t * tau * (off + 2.0 * k as f64)).collect())
}

/// Lattice (i h − R, j h − R), 0 ≤ i, j < 2m+1, with zero Dirichlet values on
/// the ring just outside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub half_width: f64,
    pub spacing: f64,
    pub m: usize,
}

impl SpectralGrid {
    pub fn new(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0 && spacing > 0.0) {
            return Err(Error::Domain("grid half width and spacing must be positive".into()));
        }
        let m = (half_width / spacing).round();
        if m < 2.0 || (m * spacing - half_width).abs() > 1e-9 * half_width {
            return Err(Error::Domain(format!("spacing {spacing} does not divide 2R = {}", 2.0 * half_width)));
        }
        Ok(SpectralGrid { half_width, spacing, m: m as usize })
    }

    /// Points per axis.
    pub fn side(&self) -> usize {
        2 * self.m + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - self.m as f64) * self.spacing
    }

    pub fn point(&self, idx: usize) -> C64 {
        let n = self.side();
        C64::new(self.coord(idx / n), self.coord(idx % n))
    }

    /// 8-point Lagrange weights along one axis, starting index and weights.
    fn lagrange(&self, x: f64) -> (usize, [f64; 8]) {
        let n = self.side();
        let f = ((x + self.half_width) / self.spacing).floor() as i64 - 3;
        let i0 = f.clamp(0, n as i64 - 8) as usize;
        let mut w = [1.0; 8];
        for (l, wl) in w.iter_mut().enumerate() {
            let xl = self.coord(i0 + l);
            for k in 0..8 {
                if k != l {
                    let xk = self.coord(i0 + k);
                    *wl *= (x - xk) / (xl - xk);
                }
            }
        }
        (i0, w)
    }

    /// Smallest R (a multiple of h) with min_{|z|=R} |f'|² ≥ 20·lambda_max.
    pub fn auto_half_width(f: &UPoly, lambda_max: f64, spacing: f64, r_cap: f64) -> f64 {
        let fp = f.derivative();
        let mut r = 4.0 * spacing;
        while r < r_cap {
            let min = (0..256)
                .map(|k| fp.eval(C64::from_polar(r, std::f64::consts::TAU * k as f64 / 256.0)).norm_sqr())
                .fold(f64::INFINITY, f64::min);
            if min >= 20.0 * lambda_max {
                break;
            }
            r += spacing;
        }
        r.min(r_cap)
    }
}

/// Sampled form: one component for degrees 0 and 2, (u, v) for degree 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormField {
    pub degree: u8,
    pub grid: SpectralGrid,
    pub components: Vec<Vec<C64>>,
}

impl FormField {
    /// Discrete L² inner product h² Σ conj(a)·b.
    pub fn inner(&self, o: &FormField) -> C64 {
        let h2 = self.grid.spacing * self.grid.spacing;
        self.components
            .iter()
            .zip(&o.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>())
            .sum::<C64>()
            * h2
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for c in &mut self.components {
                c.iter_mut().for_each(|x| *x /= n);
            }
        }
        self
    }

    /// Component value at an arbitrary point by 8×8 tensor Lagrange interpolation.
    pub fn value_at(&self, comp: usize, z: C64) -> C64 {
        let n = self.grid.side();
        let (i0, wx) = self.grid.lagrange(z.re);
        let (j0, wy) = self.grid.lagrange(z.im);
        let a = &self.components[comp];
        let mut s = C64::new(0.0, 0.0);
        for (di, wi) in wx.iter().enumerate() {
            for (dj, wj) in wy.iter().enumerate() {
                s += a[(i0 + di) * n + j0 + dj] * (wi * wj);
            }
        }
        s
    }

    /// Pointwise modulus sqrt(Σ_c |c|²).
    pub fn modulus(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.components.iter().map(|c| c[i].norm_sqr()).sum::<f64>().sqrt()).collect()
    }

    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut s = format!(
            "# form-field\ndegree {}\nhalf_width {:e}\nspacing {:e}\nside {}\ncomponents {}\n",
            self.degree,
            g.half_width,
            g.spacing,
            g.side(),
            self.components.len()
        );
        for i in 0..g.len() {
            let row: Vec<String> = self.components.iter().map(|c| format!("{:e} {:e}", c[i].re, c[i].im)).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<FormField> {
        let bad = |m: &str| Error::Parse { pos: 0, msg: m.to_string() };
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let mut header = |key: &str| -> Result<String> {
            let l = lines.next().ok_or_else(|| bad("truncated header"))?;
            l.strip_prefix(key).map(|v| v.trim().to_string()).ok_or_else(|| bad(&format!("expected {key}")))
        };
        let degree: u8 = header("degree")?.parse().map_err(|_| bad("degree"))?;
        let r: f64 = header("half_width")?.parse().map_err(|_| bad("half_width"))?;
        let h: f64 = header("spacing")?.parse().map_err(|_| bad("spacing"))?;
        let side: usize = header("side")?.parse().map_err(|_| bad("side"))?;
        let nc: usize = header("components")?.parse().map_err(|_| bad("components"))?;
        let grid = SpectralGrid::new(r, h)?;
        if grid.side() != side {
            return Err(bad("side does not match grid"));
        }
        let mut components = vec![Vec::with_capacity(grid.len()); nc];
        for l in lines {
            let v: Vec<f64> = l.split_whitespace().map(|x| x.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad("sample"))?;
            if v.len() != 2 * nc {
                return Err(bad("wrong sample width"));
            }
            for (c, comp) in components.iter_mut().enumerate() {
                comp.push(C64::new(v[2 * c], v[2 * c + 1]));
            }
        }
        if components.iter().any(|c| c.len() != grid.len()) {
            return Err(bad("wrong sample count"));
        }
        Ok(FormField { degree, grid, components })
    }

    /// Plot-ready columns x,y,|ψ|.
    pub fn plot_columns(&self) -> String {
        let mut s = String::from("x,y,abs\n");
        for (i, m) in self.modulus().iter().enumerate() {
            let z = self.grid.point(i);
            s.push_str(&format!("{},{},{:e}\n", z.re, z.im, m));
        }
        s
    }
}

/// The decaying zero mode of the degree-1 operator for f = τz²:
/// e^{−2|τ||z|²}(−(τ/|τ|)dz + dz̄), unit discrete norm.
pub fn oscillator_groundform_complex(tau: C64, grid: &SpectralGrid) -> Result<FormField> {
    if !(tau.re > 0.0) {
        return Err(Error::Domain("Re tau must be positive for a decaying ground form".into()));
    }
    let a = 2.0 * tau.norm();
    let ph = -tau / tau.norm();
    let g: Vec<f64> = (0..grid.len()).map(|i| (-a * grid.point(i).norm_sqr()).exp()).collect();
    let field = FormField {
        degree: 1,
        grid: *grid,
        components: vec![g.iter().map(|&x| ph * x).collect(), g.iter().map(|&x| C64::new(x, 0.0)).collect()],
    };
    Ok(field.normalized())
}

/// −(1/4)Δ₅ + |f'|² on each component, coupled by f'' between dz and dz̄ in degree 1.
/// Unknown ordering: lattice index idx = i·side + j, degree 1 interleaves (u, v) as 2·idx + c.
#[derive(Clone, Debug)]
pub struct TwistedLaplacian {
    pub grid: SpectralGrid,
    pub degree: u8,
    pub potential: Vec<f64>,
    pub coupling: Vec<C64>,
    /// |f''| at the critical points of f.
    pub critical_curvatures: Vec<f64>,
    pub degree_of_f: usize,
    pub warnings: Vec<String>,
}

pub fn assemble_twisted_laplacian(f: &UPoly, degree: u8, grid: &SpectralGrid, strict: bool) -> Result<TwistedLaplacian> {
    if degree > 2 {
        return Err(Error::Domain("form degree must be 0, 1 or 2".into()));
    }
    let fp = f.derivative();
    let fpp = fp.derivative();
    let pts: Vec<C64> = (0..grid.len()).map(|i| grid.point(i)).collect();
    let potential: Vec<f64> = pts.par_iter().map(|&z| fp.eval(z).norm_sqr()).collect();
    let coupling: Vec<C64> = if degree == 1 { pts.par_iter().map(|&z| fpp.eval(z)).collect() } else { vec![] };
    let mut warnings = vec![];
    let vmax = potential.iter().cloned().fold(0.0, f64::max);
    let h2 = grid.spacing * grid.spacing;
    if h2 * vmax > 0.5 {
        let msg = format!("grid under-resolves the potential: h²·max|f'|² = {:.3} > 0.5", h2 * vmax);
        if strict {
            return Err(Error::Resolution(msg));
        }
        warnings.push(msg);
    }
    let critical_curvatures = if f.degree() >= 2 { fp.roots().iter().map(|&p| fpp.eval(p).norm()).collect() } else { vec![] };
    Ok(TwistedLaplacian { grid: *grid, degree, potential, coupling, critical_curvatures, degree_of_f: f.degree(), warnings })
}

impl TwistedLaplacian {
    fn ncomp(&self) -> usize {
        if self.degree == 1 {
            2
        } else {
            1
        }
    }

    pub fn dim(&self) -> usize {
        self.ncomp() * self.grid.len()
    }

    /// Lower bandwidth in the interleaved ordering.
    fn bandwidth(&self) -> usize {
        self.ncomp() * self.grid.side()
    }

    /// Nonzero entries (row, col, value) in the interleaved ordering.
    pub fn entries(&self) -> Vec<(usize, usize, C64)> {
        let n = self.grid.side();
        let nc = self.ncomp();
        let h2 = self.grid.spacing * self.grid.spacing;
        let off = C64::new(-0.25 / h2, 0.0);
        let mut e = Vec::new();
        for idx in 0..self.grid.len() {
            let (i, j) = (idx / n, idx % n);
            for c in 0..nc {
                let r = nc * idx + c;
                e.push((r, r, C64::new(1.0 / h2 + self.potential[idx], 0.0)));
                if nc == 2 {
                    let o = nc * idx + 1 - c;
                    let w = if c == 0 { self.coupling[idx] } else { self.coupling[idx].conj() };
                    e.push((r, o, w));
                }
                if i > 0 {
                    e.push((r, nc * (idx - n) + c, off));
                }
                if i + 1 < n {
                    e.push((r, nc * (idx + n) + c, off));
                }
                if j > 0 {
                    e.push((r, nc * (idx - 1) + c, off));
                }
                if j + 1 < n {
                    e.push((r, nc * (idx + 1) + c, off));
                }
            }
        }
        e
    }

    /// y = H x.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.grid.side();
        let nc = self.ncomp();
        let h2 = self.grid.spacing * self.grid.spacing;
        let d0 = 1.0 / h2;
        let off = -0.25 / h2;
        y.par_chunks_mut(nc * n).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                let idx = i * n + j;
                for c in 0..nc {
                    let r = nc * idx + c;
                    let mut s = x[r] * (d0 + self.potential[idx]);
                    let mut nb = C64::new(0.0, 0.0);
                    if i > 0 {
                        nb += x[r - nc * n];
                    }
                    if i + 1 < n {
                        nb += x[r + nc * n];
                    }
                    if j > 0 {
                        nb += x[r - nc];
                    }
                    if j + 1 < n {
                        nb += x[r + nc];
                    }
                    s += nb * off;
                    if nc == 2 {
                        s += if c == 0 { self.coupling[idx] * x[r + 1] } else { self.coupling[idx].conj() * x[r - 1] };
                    }
                    row[nc * j + c] = s;
                }
            }
        });
    }

    fn field_from(&self, x: &[C64]) -> FormField {
        let nc = self.ncomp();
        let components = (0..nc).map(|c| x.iter().skip(c).step_by(nc).copied().collect()).collect();
        FormField { degree: self.degree, grid: self.grid, components }.normalized()
    }

    fn vector_from(&self, f: &FormField) -> Vec<C64> {
        let nc = self.ncomp();
        let mut x = vec![C64::new(0.0, 0.0); self.dim()];
        for (c, comp) in f.components.iter().enumerate().take(nc) {
            for (i, &v) in comp.iter().enumerate() {
                x[nc * i + c] = v;
            }
        }
        x
    }

    /// ‖Hψ‖ / ‖ψ‖ for a sampled field.
    pub fn residual_of(&self, f: &FormField, lambda: f64) -> f64 {
        let x = self.vector_from(f);
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.apply(&x, &mut y);
        let num: f64 = y.iter().zip(&x).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
        num / x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Banded LLᴴ factorization of a Hermitian positive-definite matrix, row storage.
struct BandCholesky {
    n: usize,
    w: usize,
    l: Vec<C64>,
}

impl BandCholesky {
    fn factor(op: &TwistedLaplacian, shift: f64) -> Option<Self> {
        let n = op.dim();
        let w = op.bandwidth();
        let mut l = vec![C64::new(0.0, 0.0); n * (w + 1)];
        for (r, c, v) in op.entries() {
            if c <= r {
                l[r * (w + 1) + w - (r - c)] = v;
            }
        }
        for r in 0..n {
            l[r * (w + 1) + w] += shift;
        }
        for r in 0..n {
            let k0 = r.saturating_sub(w);
            for c in k0..=r {
                let len = c - k0;
                let (head, tail) = l.split_at_mut(r * (w + 1));
                let rowr = &mut tail[..w + 1];
                let mut acc = rowr[w - (r - c)];
                if len > 0 {
                    let a = &rowr[w - (r - k0)..w - (r - c)];
                    let b: &[C64] = if c == r { a } else { &head[c * (w + 1) + w - (c - k0)..c * (w + 1) + w] };
                    let (mut sr, mut si) = (0.0, 0.0);
                    for (x, y) in a.iter().zip(b) {
                        sr += x.re * y.re + x.im * y.im;
                        si += x.im * y.re - x.re * y.im;
                    }
                    acc -= C64::new(sr, si);
                }
                if c == r {
                    if !(acc.re > 0.0) || !acc.re.is_finite() {
                        return None;
                    }
                    rowr[w] = C64::new(acc.re.sqrt(), 0.0);
                } else {
                    let d = head[c * (w + 1) + w].re;
                    rowr[w - (r - c)] = acc / d;
                }
            }
        }
        Some(BandCholesky { n, w, l })
    }

    fn solve(&self, b: &mut [C64]) {
        let (n, w) = (self.n, self.w);
        for r in 0..n {
            let k0 = r.saturating_sub(w);
            let row = &self.l[r * (w + 1)..(r + 1) * (w + 1)];
            let mut s = b[r];
            for (x, y) in row[w - (r - k0)..w].iter().zip(&b[k0..r]) {
                s -= x * y;
            }
            b[r] = s / row[w].re;
        }
        for r in (0..n).rev() {
            let row = &self.l[r * (w + 1)..(r + 1) * (w + 1)];
            let xr = b[r] / row[w].re;
            b[r] = xr;
            let k0 = r.saturating_sub(w);
            for (x, y) in row[w - (r - k0)..w].iter().zip(&mut b[k0..r]) {
                *y -= x.conj() * xr;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub seed: u64,
    /// Subspace size; defaults to 2k + 4.
    pub block: Option<usize>,
    pub max_iter: usize,
    /// Shift s for (H + s)⁻¹; defaults to (1/4)·min|f''(p)|, doubled until H + s factors.
    pub shift: Option<f64>,
    /// Starting vectors (e.g. eigenfields from a nearby parameter).
    pub start: Vec<FormField>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { seed: 1, block: None, max_iter: 300, shift: None, start: vec![] }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub eigenfields: Vec<FormField>,
    pub residuals: Vec<f64>,
    pub grid: SpectralGrid,
    pub degree: u8,
    pub shift: f64,
    pub iterations: usize,
    pub degree_of_f: usize,
}

impl SpectralResult {
    pub fn eigenvalue_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue,residual\n");
        for (k, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            s.push_str(&format!("{},{:e},{:e}\n", k + 1, l, r));
        }
        s
    }
}

pub fn lowest_eigenpairs(op: &TwistedLaplacian, k: usize, tol: f64) -> Result<SpectralResult> {
    lowest_eigenpairs_with(op, k, tol, &EigenOptions::default())
}

/// Block shift-invert subspace iteration with Rayleigh–Ritz; residual ‖Hψ − λψ‖/‖ψ‖ ≤ tol.
pub fn lowest_eigenpairs_with(op: &TwistedLaplacian, k: usize, tol: f64, opts: &EigenOptions) -> Result<SpectralResult> {
    let n = op.dim();
    let b = opts.block.unwrap_or(2 * k + 4).max(k + 1);
    if k == 0 || b >= n / 4 {
        return Err(Error::Domain(format!("requested {k} eigenpairs from dimension {n}")));
    }
    let mut shift = opts.shift.unwrap_or_else(|| {
        let c = op.critical_curvatures.iter().cloned().fold(f64::INFINITY, f64::min);
        if c.is_finite() && c > 0.0 {
            0.25 * c
        } else {
            0.25
        }
    });
    let chol = loop {
        if let Some(c) = BandCholesky::factor(op, shift) {
            break c;
        }
        shift *= 2.0;
        if shift > 1e12 {
            return Err(Error::NoConvergence("shifted operator never became positive definite".into()));
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DMatrix::<C64>::from_fn(n, b, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    for (c, f) in opts.start.iter().take(b).enumerate() {
        let v = op.vector_from(f);
        x.column_mut(c).iter_mut().zip(&v).for_each(|(a, s)| *a = *s + *a * 1e-3);
    }

    for it in 1..=opts.max_iter {
        x.column_iter_mut().collect::<Vec<_>>().into_par_iter().for_each(|mut col| chol.solve(col.as_mut_slice()));
        let q = x.clone().qr().q();
        let mut hq = DMatrix::<C64>::zeros(n, b);
        hq.column_iter_mut()
            .collect::<Vec<_>>()
            .into_par_iter()
            .zip(q.column_iter().collect::<Vec<_>>())
            .for_each(|(mut out, inp)| op.apply(inp.as_slice(), out.as_mut_slice()));
        let a = q.ad_mul(&hq);
        let a = (&a + a.adjoint()) * C64::new(0.5, 0.0);
        let eig = a.symmetric_eigen();
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let w = DMatrix::from_fn(b, b, |i, j| eig.eigenvectors[(i, order[j])]);
        let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        x = &q * &w;
        let hx = &hq * &w;
        let res: Vec<f64> = (0..k)
            .map(|j| {
                let r = hx.column(j) - x.column(j) * C64::new(vals[j], 0.0);
                r.norm() / x.column(j).norm()
            })
            .collect();
        if res.iter().all(|&r| r <= tol) {
            let fields = (0..k).map(|j| op.field_from(x.column(j).as_slice())).collect();
            return Ok(SpectralResult {
                eigenvalues: vals[..k].to_vec(),
                eigenfields: fields,
                residuals: res,
                grid: op.grid,
                degree: op.degree,
                shift,
                iterations: it,
                degree_of_f: op.degree_of_f,
            });
        }
    }
    Err(Error::NoConvergence(format!("{} iterations without reaching residual {tol:e}", opts.max_iter)))
}

/// Number of eigenvalues below zero_band, provided the next one exceeds gap_factor·zero_band.
pub fn harmonic_dimension(result: &SpectralResult, zero_band: f64, gap_factor: f64) -> Result<usize> {
    if result.degree_of_f < 2 {
        return Err(Error::Domain("f is not strongly tame (degree < 2); harmonic dimension undefined".into()));
    }
    let count = result.eigenvalues.iter().take_while(|&&l| l < zero_band).count();
    match result.eigenvalues.get(count) {
        Some(&next) if next > gap_factor * zero_band => Ok(count),
        _ => Err(Error::Indeterminate(format!("{count} eigenvalues below {zero_band}, gap not resolved"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayProfile {
    Exponential,
    /// log-modulus fits a quadratic in r better than a line.
    SuperExponential,
    /// total log drop below 5: no exponential law visible.
    NonExponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// −slope of log max-modulus against r.
    pub rate: f64,
    /// R² of the linear fit.
    pub quality: f64,
    pub monotone: bool,
    pub profile: DecayProfile,
    /// (shell radius, log max-modulus).
    pub shells: Vec<(f64, f64)>,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Fit log max|ψ| over annuli of width h between core_radius and 0.8R, where the
/// pointwise modulus is taken jointly over the given fields.
pub fn decay_fit(fields: &[FormField], core_radius: f64) -> Result<DecayFit> {
    let first = fields.first().ok_or_else(|| Error::Domain("no field".into()))?;
    let g = first.grid;
    let mods: Vec<Vec<f64>> = fields.iter().map(|f| f.modulus()).collect();
    let rho: Vec<f64> = (0..g.len()).map(|i| mods.iter().map(|m| m[i] * m[i]).sum::<f64>().sqrt()).collect();
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    let rmax = 0.8 * g.half_width;
    let nsh = ((rmax - core_radius) / g.spacing).floor();
    if nsh < 4.0 {
        return Err(Error::Domain("too few shells outside the core radius".into()));
    }
    let nsh = nsh as usize;
    let mut best = vec![0.0f64; nsh];
    for (i, &v) in rho.iter().enumerate() {
        let r = g.point(i).norm();
        if r < core_radius || r >= core_radius + nsh as f64 * g.spacing {
            continue;
        }
        let s = ((r - core_radius) / g.spacing) as usize;
        best[s.min(nsh - 1)] = best[s.min(nsh - 1)].max(v);
    }
    let mut shells = vec![];
    for (s, &v) in best.iter().enumerate() {
        if v <= 1e-12 * peak {
            break;
        }
        shells.push((core_radius + (s as f64 + 0.5) * g.spacing, v.ln()));
    }
    if shells.len() < 4 {
        return Err(Error::Domain("too few shells above the noise floor".into()));
    }
    let xs: Vec<f64> = shells.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = shells.iter().map(|s| s.1).collect();
    let (slope, q1) = linear_fit(&xs, &ys);
    let x2: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let (_, q2) = linear_fit(&x2, &ys);
    let monotone = ys.windows(2).all(|w| w[1] < w[0]);
    let drop = ys[0] - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let profile = if drop < 5.0 {
        DecayProfile::NonExponential
    } else if q2 > q1 {
        DecayProfile::SuperExponential
    } else {
        DecayProfile::Exponential
    };
    Ok(DecayFit { rate: -slope, quality: q1, monotone, profile, shells })
}

/// Harmonic frame α_c with α_c's dz-component at each critical point p_a equal to φ_c(p_a).
#[derive(Clone, Debug)]
pub struct HarmonicFrame {
    pub fields: Vec<FormField>,
    /// G_{cd} = ⟨α_c, α_d⟩, antilinear in c.
    pub gram: DMatrix<C64>,
    /// h² Σ (u_c v_d + v_c u_d).
    pub bilinear: DMatrix<C64>,
    pub critical_points: Vec<C64>,
    pub kernel: SpectralResult,
}

pub fn harmonic_frame(f: &UPoly, frame: &[UPoly], grid: &SpectralGrid, tol: f64, opts: &EigenOptions) -> Result<HarmonicFrame> {
    let mu = f.degree().saturating_sub(1);
    if mu == 0 || frame.len() != mu {
        return Err(Error::Dimension(mu));
    }
    let op = assemble_twisted_laplacian(f, 1, grid, false)?;
    let kernel = lowest_eigenpairs_with(&op, mu, tol, opts)?;
    let pts = f.derivative().roots();
    let e = DMatrix::from_fn(mu, mu, |a, k| kernel.eigenfields[k].value_at(0, pts[a]));
    let phi = DMatrix::from_fn(mu, mu, |a, c| frame[c].eval(pts[a]));
    let coef = e.lu().solve(&phi).ok_or_else(|| Error::Singular("kernel values at the critical points".into()))?;
    let fields: Vec<FormField> = (0..mu)
        .map(|c| {
            let comps = (0..2)
                .map(|p| {
                    (0..grid.len())
                        .map(|i| (0..mu).map(|k| kernel.eigenfields[k].components[p][i] * coef[(k, c)]).sum())
                        .collect()
                })
                .collect();
            FormField { degree: 1, grid: *grid, components: comps }
        })
        .collect();
    let h2 = grid.spacing * grid.spacing;
    let gram = DMatrix::from_fn(mu, mu, |c, d| fields[c].inner(&fields[d]));
    let bilinear = DMatrix::from_fn(mu, mu, |c, d| {
        let (uc, vc) = (&fields[c].components[0], &fields[c].components[1]);
        let (ud, vd) = (&fields[d].components[0], &fields[d].components[1]);
        (0..grid.len()).map(|i| uc[i] * vd[i] + vc[i] * ud[i]).sum::<C64>() * h2
    });
    Ok(HarmonicFrame { fields, gram, bilinear, critical_points: pts, kernel })
}

/// ‖Hφ‖/‖φ‖ for the closed-form zero mode of f = τz² on the degree-1 operator.
pub fn quadratic_self_test(tau: C64, grid: &SpectralGrid) -> Result<f64> {
    let f = UPoly::new(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), tau]);
    let op = assemble_twisted_laplacian(&f, 1, grid, false)?;
    let phi = oscillator_groundform_complex(tau, grid)?;
    Ok(op.residual_of(&phi, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn quad(tau: f64) -> UPoly {
        UPoly::from_real(&[0.0, 0.0, tau])
    }

    #[test]
    fn oscillator_levels() {
        assert_eq!(oscillator_spectrum_real(1.0, 1.0, 0, 2).unwrap(), vec![2.0, 6.0, 10.0]);
        assert_eq!(oscillator_spectrum_real(1.0, 1.0, 1, 1).unwrap(), vec![6.0, 10.0]);
        assert_eq!(oscillator_spectrum_real(0.5, 2.0, 0, 0).unwrap(), vec![2.0]);
        assert!(oscillator_spectrum_real(-1.0, 1.0, 0, 0).is_err());
    }

    #[test]
    fn groundform_shape() {
        let g = SpectralGrid::new(3.0, 0.125).unwrap();
        let phi = oscillator_groundform_complex(C64::new(1.0, 0.0), &g).unwrap();
        let c = g.len() / 2;
        let (u, v) = (phi.components[0][c], phi.components[1][c]);
        assert!((u + v).norm() < 1e-15 && v.re > 0.0);
        assert!(oscillator_groundform_complex(C64::new(0.0, 2.0), &g).is_err());
        assert!((phi.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grid_checks() {
        assert!(SpectralGrid::new(1.0, 0.3).is_err());
        let g = SpectralGrid::new(6.0, 1.0 / 16.0).unwrap();
        assert_eq!(g.side(), 193);
        assert_eq!(g.point(g.len() / 2), C64::new(0.0, 0.0));
    }

    #[test]
    fn assembled_operator_is_hermitian() {
        let g = SpectralGrid::new(1.0, 0.25).unwrap();
        let f = UPoly::new(vec![C64::new(0.2, 0.1), C64::new(-1.0, 0.3), C64::new(0.0, 0.0), C64::new(1.0, -0.5)]);
        for p in 0..3 {
            let op = assemble_twisted_laplacian(&f, p, &g, false).unwrap();
            let m: HashMap<(usize, usize), C64> = op.entries().into_iter().map(|(r, c, v)| ((r, c), v)).collect();
            for (&(r, c), v) in &m {
                assert_eq!(*v, m[&(c, r)].conj());
            }
            let x: Vec<C64> = (0..op.dim()).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.7).cos())).collect();
            let mut y = vec![C64::new(0.0, 0.0); x.len()];
            op.apply(&x, &mut y);
            let mut z = vec![C64::new(0.0, 0.0); x.len()];
            for (&(r, c), v) in &m {
                z[r] += v * x[c];
            }
            assert!(y.iter().zip(&z).all(|(a, b)| (a - b).norm() < 1e-12));
        }
    }

    #[test]
    fn quadratic_coupling_blocks() {
        let g = SpectralGrid::new(1.0, 0.25).unwrap();
        let tau = C64::new(0.6, 0.8);
        let op = assemble_twisted_laplacian(&UPoly::new(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), tau]), 1, &g, false).unwrap();
        assert!(op.coupling.iter().all(|c| *c == tau * 2.0));
    }

    #[test]
    fn self_test_passes() {
        for (tau, h) in [(C64::new(1.0, 0.0), 1.0 / 16.0), (C64::new(0.6, 0.8), 1.0 / 16.0), (C64::new(2.0, 0.0), 1.0 / 32.0)] {
            let g = SpectralGrid::new(4.0, h).unwrap();
            let r = quadratic_self_test(tau, &g).unwrap();
            assert!(r <= 10.0 * h * h * (2.0 * tau.norm()).powi(2), "tau={tau} residual {r}");
        }
    }

    #[test]
    fn box_spectrum_for_constant_potential() {
        let g = SpectralGrid::new(2.0, 0.125).unwrap();
        let op = assemble_twisted_laplacian(&UPoly::from_real(&[1.0]), 0, &g, false).unwrap();
        let res = lowest_eigenpairs(&op, 3, 1e-8).unwrap();
        // discrete Dirichlet box with walls at ±(R + h)
        let n = g.side() as f64;
        let h = g.spacing;
        let one = |k: f64| (1.0 / (h * h)) * (k * std::f64::consts::PI / (2.0 * (n + 1.0))).sin().powi(2);
        let expect = [2.0 * one(1.0), one(1.0) + one(2.0), one(1.0) + one(2.0)];
        for (l, e) in res.eigenvalues.iter().zip(expect) {
            assert!((l - e).abs() < 1e-8 * e, "{l} vs {e}");
        }
        let cont = (std::f64::consts::PI / (2.0 * 2.0)).powi(2) * 0.25 * 2.0;
        assert!((res.eigenvalues[0] - cont).abs() < 0.15 * cont);
        assert!(harmonic_dimension(&res, 0.01, 10.0).is_err());
    }

    #[test]
    fn degree_zero_and_two_agree() {
        let g = SpectralGrid::new(3.0, 0.125).unwrap();
        let f = UPoly::from_real(&[0.0, -1.0, 0.0, 1.0]);
        let a = lowest_eigenpairs(&assemble_twisted_laplacian(&f, 0, &g, false).unwrap(), 3, 1e-9).unwrap();
        let b = lowest_eigenpairs(&assemble_twisted_laplacian(&f, 2, &g, false).unwrap(), 3, 1e-9).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_potential_shifts_box() {
        let g = SpectralGrid::new(2.0, 0.125).unwrap();
        let b = lowest_eigenpairs(&assemble_twisted_laplacian(&UPoly::from_real(&[0.0]), 0, &g, false).unwrap(), 2, 1e-9).unwrap();
        let s = lowest_eigenpairs(&assemble_twisted_laplacian(&UPoly::from_real(&[0.0, 1.0]), 0, &g, false).unwrap(), 2, 1e-9).unwrap();
        for (x, y) in b.eigenvalues.iter().zip(&s.eigenvalues) {
            assert!((y - x - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn oscillator_refinement_order() {
        let errs: Vec<f64> = [0.25, 0.125, 0.0625]
            .iter()
            .map(|&h| {
                let g = SpectralGrid::new(4.0, h).unwrap();
                let op = assemble_twisted_laplacian(&quad(1.0), 0, &g, false).unwrap();
                (lowest_eigenpairs(&op, 1, 1e-10).unwrap().eigenvalues[0] - 2.0).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.7, "{errs:?}");
        }
    }

    #[test]
    fn field_text_round_trip() {
        let g = SpectralGrid::new(1.0, 0.25).unwrap();
        let phi = oscillator_groundform_complex(C64::new(1.0, 0.5), &g).unwrap();
        let back = FormField::from_text(&phi.to_text()).unwrap();
        assert_eq!(back, phi);
        assert_eq!(phi.plot_columns().lines().count(), g.len() + 1);
    }

    #[test]
    fn interpolation_is_exact_on_low_degree() {
        let g = SpectralGrid::new(2.0, 0.25).unwrap();
        let p = |z: C64| z * z * z - z * 2.0 + C64::new(0.5, 0.0);
        let f = FormField { degree: 0, grid: g, components: vec![(0..g.len()).map(|i| p(g.point(i))).collect()] };
        for z in [C64::new(0.13, -0.71), C64::new(-1.9, 1.95)] {
            assert!((f.value_at(0, z) - p(z)).norm() < 1e-11);
        }
    }

    #[test]
    fn auto_width_meets_floor() {
        let f = quad(1.0);
        let r = SpectralGrid::auto_half_width(&f, 4.0, 0.0625, 20.0);
        assert!(4.0 * r * r >= 80.0 && 4.0 * (r - 0.0625).powi(2) < 80.0);
    }
}
