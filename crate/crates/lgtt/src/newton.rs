//! Newton polytopes, convenience, non-degeneracy and subdiagram deformations.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    gauss_rank, integer_rank, primitive_integer, rational_inverse, rational_nullspace, smith_normal_form,
    unimodular_inverse,
};
use crate::poly::{Exponent, GaussRat, LaurentPoly};
use crate::singularity::groebner::{groebner_basis, variety_points, Poly};
use crate::singularity::{milnor_algebra, Mu};
use crate::{Error, Result, C64};

fn rat(x: i64) -> BigRational {
    BigRational::from_integer(x.into())
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Integer coordinates on the affine lattice spanned by a point set:
/// α = origin + Σ_j c_j·basis_j.
#[derive(Clone, Debug)]
pub struct AffineLattice {
    pub origin: Vec<i64>,
    pub basis: Vec<Vec<i64>>,
    v: Vec<Vec<i64>>,
    d: Vec<i64>,
}

impl AffineLattice {
    pub fn from_points(points: &[Vec<i64>]) -> Self {
        let n = points[0].len();
        let origin = points[0].clone();
        let diffs: Vec<Vec<i64>> = points[1..].iter().map(|p| p.iter().zip(&origin).map(|(a, b)| a - b).collect()).collect();
        if diffs.is_empty() || diffs.iter().all(|r| r.iter().all(|&x| x == 0)) {
            return AffineLattice { origin, basis: vec![], v: vec![], d: vec![] };
        }
        let (_, s, v) = smith_normal_form(&diffs);
        let vinv = unimodular_inverse(&v);
        let k = (0..s.len().min(n)).filter(|&i| s[i][i] != 0).count();
        let d: Vec<i64> = (0..k).map(|i| s[i][i]).collect();
        let basis = (0..k).map(|j| vinv[j].iter().map(|x| x * d[j]).collect()).collect();
        AffineLattice { origin, basis, v, d }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn coords(&self, p: &[i64]) -> Vec<i64> {
        let r: Vec<i64> = p.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        (0..self.dim())
            .map(|j| {
                let x: i64 = (0..r.len()).map(|i| r[i] * self.v[i][j]).sum();
                debug_assert_eq!(x % self.d[j], 0);
                x / self.d[j]
            })
            .collect()
    }

    /// Ambient integer normal N with N·(α − origin) ∝ ℓ·c(α) (positive factor).
    pub fn lift_normal(&self, l: &[i64]) -> Vec<i64> {
        let k = self.dim();
        if k == 0 {
            return vec![0; self.origin.len()];
        }
        let n = self.origin.len();
        let b: Vec<Vec<BigRational>> = self.basis.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect();
        let bbt: Vec<Vec<BigRational>> =
            (0..k).map(|i| (0..k).map(|j| (0..n).map(|t| &b[i][t] * &b[j][t]).sum()).collect()).collect();
        let inv = rational_inverse(&bbt).expect("lattice basis is independent");
        let y: Vec<BigRational> = (0..k).map(|i| (0..k).map(|j| &inv[i][j] * rat(l[j])).sum()).collect();
        let nrm: Vec<BigRational> = (0..n).map(|t| (0..k).map(|i| &b[i][t] * &y[i]).sum()).collect();
        primitive_integer(&nrm)
    }
}

#[derive(Clone, Debug)]
struct Facet {
    normal: Vec<i64>,
    points: BTreeSet<usize>,
}

/// Facets of the full-dimensional hull of `pts` (in lattice coordinates).
fn hull_facets(pts: &[Vec<i64>], k: usize) -> Vec<Facet> {
    let m = pts.len();
    let mut out: Vec<Facet> = Vec::new();
    if k == 0 {
        return out;
    }
    let mut push = |normal: Vec<i64>| {
        let vals: Vec<i64> = pts.iter().map(|p| dot(&normal, p)).collect();
        let offset = *vals.iter().max().unwrap();
        if out.iter().any(|f| f.normal == normal) {
            return;
        }
        let points = (0..m).filter(|&i| vals[i] == offset).collect();
        out.push(Facet { normal, points });
    };
    if k == 1 {
        push(vec![1]);
        push(vec![-1]);
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let base = &pts[idx[0]];
        let diffs: Vec<Vec<BigRational>> =
            idx[1..].iter().map(|&i| pts[i].iter().zip(base).map(|(a, b)| rat(a - b)).collect()).collect();
        let ns = rational_nullspace(&diffs, k);
        if ns.len() == 1 {
            let nrm = primitive_integer(&ns[0]);
            let d0 = dot(&nrm, base);
            let vals: Vec<i64> = pts.iter().map(|p| dot(&nrm, p)).collect();
            if vals.iter().all(|&v| v <= d0) {
                push(nrm);
            } else if vals.iter().all(|&v| v >= d0) {
                push(nrm.iter().map(|x| -x).collect());
            }
        }
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    pub dim: usize,
    /// Indices into `NewtonPolytope::vertices`.
    pub vertices: Vec<usize>,
    /// Supporting ambient normal and value: N·α ≤ offset on the polytope,
    /// equality exactly on the face.
    pub normal: Vec<i64>,
    pub offset: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NewtonPolytope {
    pub ambient_dim: usize,
    pub dim: usize,
    pub vertices: Vec<Exponent>,
    /// Proper faces of every dimension, vertices included, sorted by dimension.
    pub faces: Vec<Face>,
    pub interior_points: Vec<Exponent>,
    pub facet_normals: Vec<(Vec<i64>, i64)>,
}

impl NewtonPolytope {
    /// The polytope itself as a face.
    pub fn full_face(&self) -> Face {
        Face {
            dim: self.dim,
            vertices: (0..self.vertices.len()).collect(),
            normal: vec![0; self.ambient_dim],
            offset: 0,
        }
    }

    pub fn face_vertices(&self, face: &Face) -> Vec<Exponent> {
        face.vertices.iter().map(|&i| self.vertices[i].clone()).collect()
    }
}

struct Hull {
    lattice: AffineLattice,
    points: Vec<Vec<i64>>,
    facets: Vec<Facet>,
    ambient_facets: Vec<(Vec<i64>, i64)>,
}

fn hull(f: &LaurentPoly) -> Result<Hull> {
    if f.is_zero() {
        return Err(Error::Domain("zero polynomial has no Newton polytope".into()));
    }
    let points: Vec<Vec<i64>> = f.terms().keys().map(|e| e.iter().map(|&a| a as i64).collect()).collect();
    let lattice = AffineLattice::from_points(&points);
    let k = lattice.dim();
    let coords: Vec<Vec<i64>> = points.iter().map(|p| lattice.coords(p)).collect();
    let facets = hull_facets(&coords, k);
    let ambient_facets = facets
        .iter()
        .map(|fc| {
            let nrm = lattice.lift_normal(&fc.normal);
            let off = dot(&nrm, &points[*fc.points.iter().next().unwrap()]);
            (nrm, off)
        })
        .collect();
    Ok(Hull { lattice, points, facets, ambient_facets })
}

/// Exact hull and full face lattice (ambient dimension ≤ 3).
pub fn newton_polytope(f: &LaurentPoly) -> Result<NewtonPolytope> {
    let n = f.nvars();
    if n > 3 {
        return Err(Error::Dimension(n));
    }
    let h = hull(f)?;
    let k = h.lattice.dim();
    // faces as point-index sets: facets and all their intersections
    let mut sets: Vec<BTreeSet<usize>> = h.facets.iter().map(|f| f.points.clone()).collect();
    let mut i = 0;
    while i < sets.len() {
        for j in 0..h.facets.len() {
            let inter: BTreeSet<usize> = sets[i].intersection(&h.facets[j].points).copied().collect();
            if !inter.is_empty() && !sets.contains(&inter) {
                sets.push(inter);
            }
        }
        i += 1;
    }
    let dim_of = |s: &BTreeSet<usize>| {
        let pts: Vec<&Vec<i64>> = s.iter().map(|&i| &h.points[i]).collect();
        let diffs: Vec<Vec<i64>> = pts[1..].iter().map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b).collect()).collect();
        if diffs.is_empty() {
            0
        } else {
            integer_rank(&diffs)
        }
    };
    let mut vertex_pts: Vec<usize> = sets.iter().filter(|s| s.len() == 1).map(|s| *s.iter().next().unwrap()).collect();
    if k == 0 {
        vertex_pts = vec![0];
    }
    vertex_pts.sort_by(|&a, &b| h.points[a].cmp(&h.points[b]));
    vertex_pts.dedup();
    let vertices: Vec<Exponent> = vertex_pts.iter().map(|&i| h.points[i].iter().map(|&x| x as i32).collect()).collect();

    let mut faces = Vec::new();
    for s in &sets {
        let containing: Vec<&Facet> = h.facets.iter().filter(|f| s.is_subset(&f.points)).collect();
        let l: Vec<i64> = (0..k).map(|t| containing.iter().map(|f| f.normal[t]).sum()).collect();
        let normal = h.lattice.lift_normal(&l);
        let offset = dot(&normal, &h.points[*s.iter().next().unwrap()]);
        let vs: Vec<usize> = (0..vertex_pts.len()).filter(|&v| s.contains(&vertex_pts[v])).collect();
        faces.push(Face { dim: dim_of(s), vertices: vs, normal, offset });
    }
    if k == 0 {
        faces.clear();
    }
    faces.sort_by(|a, b| a.dim.cmp(&b.dim).then_with(|| a.vertices.cmp(&b.vertices)));

    let interior_points = if k == n { interior_lattice_points(&h) } else { vec![] };
    Ok(NewtonPolytope { ambient_dim: n, dim: k, vertices, faces, interior_points, facet_normals: h.ambient_facets })
}

fn interior_lattice_points(h: &Hull) -> Vec<Exponent> {
    let n = h.points[0].len();
    let lo: Vec<i64> = (0..n).map(|i| h.points.iter().map(|p| p[i]).min().unwrap()).collect();
    let hi: Vec<i64> = (0..n).map(|i| h.points.iter().map(|p| p[i]).max().unwrap()).collect();
    let mut out = Vec::new();
    let mut x = lo.clone();
    loop {
        if h.ambient_facets.iter().all(|(nrm, off)| dot(nrm, &x) < *off) {
            out.push(x.iter().map(|&a| a as i32).collect());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            if x[i] < hi[i] {
                x[i] += 1;
                break;
            }
            x[i] = lo[i];
            i += 1;
        }
    }
}

/// Origin strictly inside the Newton polytope (any ambient dimension).
pub fn is_convenient(f: &LaurentPoly) -> bool {
    let Ok(h) = hull(f) else { return false };
    h.lattice.dim() == f.nvars() && h.ambient_facets.iter().all(|(_, off)| 0 < *off)
}

/// Terms of f on the face.
pub fn face_polynomial(f: &LaurentPoly, poly: &NewtonPolytope, face: &Face) -> Result<LaurentPoly> {
    let own = newton_polytope(f)?;
    let want: BTreeSet<Exponent> = poly.face_vertices(face).into_iter().collect();
    let full = own.full_face();
    let matches = own
        .faces
        .iter()
        .chain(std::iter::once(&full))
        .any(|g| own.face_vertices(g).into_iter().collect::<BTreeSet<_>>() == want);
    if !matches {
        return Err(Error::ForeignFace);
    }
    Ok(restrict_to_face(f, face))
}

fn restrict_to_face(f: &LaurentPoly, face: &Face) -> LaurentPoly {
    LaurentPoly::from_terms(
        f.vars(),
        f.terms()
            .iter()
            .filter(|(e, _)| e.iter().zip(&face.normal).map(|(&a, &b)| a as i64 * b).sum::<i64>() == face.offset)
            .map(|(e, c)| (e.clone(), c.clone())),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NondegeneracyCertificate {
    ExactYes,
    /// A face system with a torus solution, decided exactly; the witness is a
    /// numeric torus point when the solution set is finite.
    ExactNo { face: Vec<Exponent>, witness: Option<Vec<C64>> },
    /// A torus solution found numerically on a face of dimension ≥ 3.
    NumericNo { face: Vec<Exponent>, witness: Vec<C64> },
    ProbabilisticYes { trials: usize },
    Unknown,
}

impl NondegeneracyCertificate {
    pub fn is_yes(&self) -> bool {
        matches!(self, Self::ExactYes | Self::ProbabilisticYes { .. })
    }
}

enum FaceVerdict {
    Clear,
    Probable(usize),
    Solution(Option<Vec<C64>>, bool),
}

/// Face polynomial rewritten in face-lattice coordinates y with exponents ≥ 0.
fn face_in_lattice(g: &LaurentPoly) -> (AffineLattice, Vec<(Vec<i64>, GaussRat)>) {
    let pts: Vec<Vec<i64>> = g.terms().keys().map(|e| e.iter().map(|&a| a as i64).collect()).collect();
    let lat = AffineLattice::from_points(&pts);
    let mut terms: Vec<(Vec<i64>, GaussRat)> = g.terms().iter().zip(&pts).map(|((_, c), p)| (lat.coords(p), c.clone())).collect();
    let k = lat.dim();
    for t in 0..k {
        let mn = terms.iter().map(|(c, _)| c[t]).min().unwrap_or(0);
        for (c, _) in terms.iter_mut() {
            c[t] -= mn;
        }
    }
    (lat, terms)
}

fn to_poly(terms: &[(Vec<i64>, GaussRat)], nv: usize) -> Poly {
    Poly::new(
        terms
            .iter()
            .map(|(c, a)| {
                let mut m: Vec<u32> = c.iter().map(|&x| x as u32).collect();
                m.resize(nv, 0);
                (m, a.clone())
            })
            .collect(),
    )
}

/// Lift y on the face torus to some z with z^{b_j} = y_j.
fn lift_point(lat: &AffineLattice, y: &[C64]) -> Vec<C64> {
    let k = lat.dim();
    let n = lat.origin.len();
    let b = DMatrix::from_fn(k, n, |i, j| lat.basis[i][j] as f64);
    let logs = DVector::from_iterator(k, y.iter().map(|v| v.ln()));
    let bbt = &b * b.transpose();
    let inv = bbt.try_inverse().unwrap_or_else(|| DMatrix::identity(k, k));
    let bp = b.transpose() * inv;
    let bpc = bp.map(|x| C64::new(x, 0.0));
    let w = bpc * logs;
    w.iter().map(|v| v.exp()).collect()
}

fn check_face(g: &LaurentPoly, seed: u64) -> FaceVerdict {
    let (lat, terms) = face_in_lattice(g);
    let k = lat.dim();
    if k == 0 {
        return FaceVerdict::Clear;
    }
    if k <= 2 {
        // F, y_j ∂_j F and the saturation y_1⋯y_k·w = 1
        let nv = k + 1;
        let mut gens = vec![to_poly(&terms, nv)];
        for j in 0..k {
            let dj: Vec<(Vec<i64>, GaussRat)> = terms
                .iter()
                .filter(|(c, _)| c[j] != 0)
                .map(|(c, a)| (c.clone(), a * &GaussRat::from_int(c[j])))
                .collect();
            gens.push(to_poly(&dj, nv));
        }
        let sat = vec![1u32; nv];
        gens.push(Poly::new(vec![(sat, GaussRat::one()), (vec![0; nv], -GaussRat::one())]));
        let gb = groebner_basis(&gens);
        if gb.len() == 1 && gb[0].lm().iter().all(|&e| e == 0) {
            return FaceVerdict::Clear;
        }
        let witness = variety_points(&gb, nv)
            .and_then(|pts| pts.into_iter().next())
            .map(|p| lift_point(&lat, &p[..k]));
        return FaceVerdict::Solution(witness, true);
    }
    // randomized local solves on the torus
    let trials = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num: Vec<(Vec<i64>, C64)> = terms.iter().map(|(c, a)| (c.clone(), a.to_c64())).collect();
    let eqs = |y: &[C64]| -> (Vec<C64>, DMatrix<C64>) {
        let mut r = vec![C64::zero(); k + 1];
        let mut jac = DMatrix::<C64>::zeros(k + 1, k);
        for (c, a) in &num {
            let mono: C64 = c.iter().zip(y).map(|(&e, &v)| v.powi(e as i32)).product::<C64>() * a;
            r[0] += mono;
            for j in 0..k {
                jac[(0, j)] += mono * c[j] as f64 / y[j];
                r[j + 1] += mono * c[j] as f64;
                for l in 0..k {
                    jac[(j + 1, l)] += mono * (c[j] * c[l]) as f64 / y[l];
                }
            }
        }
        (r, jac)
    };
    let scale: f64 = num.iter().map(|(_, a)| a.norm()).sum();
    for _ in 0..trials {
        let mut y: Vec<C64> = (0..k)
            .map(|_| {
                let r: f64 = (rng.random::<f64>() * 2.0 - 1.0).exp();
                C64::from_polar(r, rng.random::<f64>() * std::f64::consts::TAU)
            })
            .collect();
        for _ in 0..60 {
            let (r, jac) = eqs(&y);
            let rv = DVector::from_vec(r);
            let jh = jac.adjoint();
            let Some(step) = (&jh * &jac).lu().solve(&(&jh * &rv)) else { break };
            for j in 0..k {
                y[j] -= step[j];
            }
            if y.iter().any(|v| !v.is_finite() || v.norm() < 1e-8 || v.norm() > 1e8) {
                break;
            }
        }
        if y.iter().all(|v| v.is_finite() && v.norm() > 1e-6 && v.norm() < 1e6) {
            let (r, _) = eqs(&y);
            let res: f64 = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let mag: f64 = num.iter().map(|(c, a)| a.norm() * c.iter().zip(&y).map(|(&e, v)| v.norm().powi(e as i32)).product::<f64>()).sum();
            if res < 1e-10 * mag.max(scale) {
                return FaceVerdict::Solution(Some(lift_point(&lat, &y)), false);
            }
        }
    }
    FaceVerdict::Probable(trials)
}

/// Decide whether some face system f^F = z_1∂_1 f^F = … = 0 has a torus
/// solution. Faces: the polytope itself, all proper faces and the vertices.
pub fn is_nondegenerate_laurent(f: &LaurentPoly, seed: u64) -> Result<NondegeneracyCertificate> {
    let poly = newton_polytope(f)?;
    let mut faces = poly.faces.clone();
    faces.push(poly.full_face());
    let verdicts: Vec<(Vec<Exponent>, FaceVerdict)> = faces
        .par_iter()
        .enumerate()
        .map(|(i, face)| {
            let g = restrict_to_face(f, face);
            (poly.face_vertices(face), check_face(&g, seed.wrapping_add(i as u64)))
        })
        .collect();
    let mut trials = None;
    for (fv, v) in verdicts {
        match v {
            FaceVerdict::Clear => {}
            FaceVerdict::Probable(t) => trials = Some(t),
            FaceVerdict::Solution(w, true) => return Ok(NondegeneracyCertificate::ExactNo { face: fv, witness: w }),
            FaceVerdict::Solution(w, false) => {
                return Ok(NondegeneracyCertificate::NumericNo { face: fv, witness: w.unwrap_or_default() })
            }
        }
    }
    Ok(match trials {
        Some(t) => NondegeneracyCertificate::ProbabilisticYes { trials: t },
        None => NondegeneracyCertificate::ExactYes,
    })
}

/// Interior lattice monomials whose classes are independent in Q_f.
pub fn subdiagram_basis(f: &LaurentPoly) -> Result<Vec<Exponent>> {
    let alg = milnor_algebra(f)?;
    if alg.mu == Mu::Infinite {
        return Err(Error::InfiniteMilnor);
    }
    if !is_convenient(f) {
        return Err(Error::Domain("polynomial is not convenient".into()));
    }
    let poly = newton_polytope(f)?;
    let mut pts = poly.interior_points.clone();
    pts.sort_by_key(|e| (e.iter().map(|a| a.abs()).sum::<i32>(), e.clone()));
    let mut rows: Vec<Vec<GaussRat>> = Vec::new();
    let mut out = Vec::new();
    for e in pts {
        let nf = alg.normal_form(&LaurentPoly::monomial(f.vars(), e.clone(), GaussRat::one()))?;
        rows.push(nf);
        if gauss_rank(&rows) == rows.len() {
            out.push(e);
        } else {
            rows.pop();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_polynomial, var_names};

    fn p(s: &str, vars: &[&str]) -> LaurentPoly {
        parse_polynomial(s, &var_names(vars)).unwrap()
    }

    #[test]
    fn one_dimensional_examples() {
        let np = newton_polytope(&p("z + 1/z", &["z"])).unwrap();
        assert_eq!(np.vertices, vec![vec![-1], vec![1]]);
        assert_eq!(np.interior_points, vec![vec![0]]);
        let np = newton_polytope(&p("z^2", &["z"])).unwrap();
        assert_eq!(np.vertices, vec![vec![2]]);
        assert!(np.interior_points.is_empty());
        assert_eq!(np.dim, 0);
    }

    #[test]
    fn triangle() {
        let f = p("z1 + z2 + 1/(z1*z2)", &["z1", "z2"]);
        let np = newton_polytope(&f).unwrap();
        assert_eq!(np.vertices, vec![vec![-1, -1], vec![0, 1], vec![1, 0]]);
        assert_eq!(np.interior_points, vec![vec![0, 0]]);
        assert_eq!(np.faces.iter().filter(|f| f.dim == 1).count(), 3);
        assert_eq!(np.faces.iter().filter(|f| f.dim == 0).count(), 3);
        let edge = np.faces.iter().find(|fc| fc.dim == 1 && np.face_vertices(fc) == vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(face_polynomial(&f, &np, edge).unwrap(), p("z1 + z2", &["z1", "z2"]));
        assert_eq!(face_polynomial(&f, &np, &np.full_face()).unwrap(), f);
        let other = newton_polytope(&p("z1^2 + z2", &["z1", "z2"])).unwrap();
        assert!(matches!(face_polynomial(&f, &other, &other.full_face()), Err(Error::ForeignFace)));
    }

    #[test]
    fn convenience() {
        assert!(is_convenient(&p("z + 1/z", &["z"])));
        assert!(!is_convenient(&p("z + z^2", &["z"])));
        assert!(is_convenient(&p("z1 + z2 + 1/(z1*z2)", &["z1", "z2"])));
        // boundary origin is not interior
        assert!(!is_convenient(&p("z1 + 1/z1 + z2", &["z1", "z2"])));
        // four variables: hull still available for convenience
        assert!(is_convenient(&p("a + b + c + d + 1/(a*b*c*d)", &["a", "b", "c", "d"])));
        assert!(matches!(newton_polytope(&p("a + b + c + d", &["a", "b", "c", "d"])), Err(Error::Dimension(4))));
    }

    #[test]
    fn tetrahedron_faces() {
        let f = p("x + y + z + 1/(x*y*z)", &["x", "y", "z"]);
        let np = newton_polytope(&f).unwrap();
        let count = |d: usize| np.faces.iter().filter(|fc| fc.dim == d).count();
        assert_eq!((count(0), count(1), count(2)), (4, 6, 4));
        assert_eq!(np.interior_points, vec![vec![0, 0, 0]]);
        for fc in &np.faces {
            for v in np.face_vertices(fc) {
                let s: i64 = v.iter().zip(&fc.normal).map(|(&a, &b)| a as i64 * b).sum();
                assert_eq!(s, fc.offset);
            }
        }
    }

    #[test]
    fn nondegeneracy_examples() {
        assert_eq!(is_nondegenerate_laurent(&p("z + 1/z", &["z"]), 1).unwrap(), NondegeneracyCertificate::ExactYes);
        assert_eq!(
            is_nondegenerate_laurent(&p("z1 + z2 + 1/(z1*z2)", &["z1", "z2"]), 1).unwrap(),
            NondegeneracyCertificate::ExactYes
        );
        match is_nondegenerate_laurent(&p("z + 2 + 1/z", &["z"]), 1).unwrap() {
            NondegeneracyCertificate::ExactNo { witness: Some(w), .. } => assert!((w[0] + 1.0).norm() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn probabilistic_in_three_dimensions() {
        let f = p("x + y + z + 1/(x*y*z)", &["x", "y", "z"]);
        let c = is_nondegenerate_laurent(&f, 7).unwrap();
        assert_eq!(c, NondegeneracyCertificate::ProbabilisticYes { trials: 256 });
        assert_eq!(c, is_nondegenerate_laurent(&f, 7).unwrap());
    }

    #[test]
    fn subdiagram_examples() {
        assert_eq!(subdiagram_basis(&p("z + 1/z", &["z"])).unwrap(), vec![vec![0]]);
        assert_eq!(subdiagram_basis(&p("z1 + z2 + 1/(z1*z2)", &["z1", "z2"])).unwrap(), vec![vec![0, 0]]);
        assert_eq!(subdiagram_basis(&p("z^2 + 1/z", &["z"])).unwrap(), vec![vec![0], vec![1]]);
    }
}
