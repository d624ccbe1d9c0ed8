//! Exact integer / rational matrix routines and small complex helpers.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::poly::GaussRat;
use crate::C64;

pub type IMat = Vec<Vec<i64>>;

/// Smith normal form over Z: returns (U, S, V) with U·A·V = S, U and V
/// unimodular, S diagonal with d_1 | d_2 | … and non-negative entries.
pub fn smith_normal_form(a: &IMat) -> (IMat, IMat, IMat) {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut s: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut u: Vec<Vec<i128>> = identity(m);
    let mut v: Vec<Vec<i128>> = identity(n);

    let mut t = 0;
    while t < m.min(n) {
        // pivot: smallest nonzero magnitude in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if s[i][j] != 0 && best.map_or(true, |(bi, bj)| s[i][j].abs() < s[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        s.swap(t, pi);
        u.swap(t, pi);
        for row in s.iter_mut() {
            row.swap(t, pj);
        }
        for row in v.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..m {
                let q = s[i][t].div_euclid(s[t][t]);
                if q != 0 {
                    row_axpy(&mut s, i, t, -q);
                    row_axpy(&mut u, i, t, -q);
                }
                if s[i][t] != 0 {
                    s.swap(t, i);
                    u.swap(t, i);
                    dirty = true;
                }
            }
            for j in t + 1..n {
                let q = s[t][j].div_euclid(s[t][t]);
                if q != 0 {
                    col_axpy(&mut s, j, t, -q);
                    col_axpy(&mut v, j, t, -q);
                }
                if s[t][j] != 0 {
                    for row in s.iter_mut() {
                        row.swap(t, j);
                    }
                    for row in v.iter_mut() {
                        row.swap(t, j);
                    }
                    dirty = true;
                }
            }
            if !dirty {
                // divisibility: fold any entry not divisible by the pivot into row t
                let mut fix = None;
                'outer: for i in t + 1..m {
                    for j in t + 1..n {
                        if s[i][j] % s[t][t] != 0 {
                            fix = Some(i);
                            break 'outer;
                        }
                    }
                }
                match fix {
                    Some(i) => {
                        row_axpy(&mut s, t, i, 1);
                        row_axpy(&mut u, t, i, 1);
                    }
                    None => break,
                }
            }
        }
        if s[t][t] < 0 {
            for x in s[t].iter_mut() {
                *x = -*x;
            }
            for x in u[t].iter_mut() {
                *x = -*x;
            }
        }
        t += 1;
    }
    (to_i64(u), to_i64(s), to_i64(v))
}

fn identity(n: usize) -> Vec<Vec<i128>> {
    (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect()
}

fn row_axpy(a: &mut [Vec<i128>], dst: usize, src: usize, k: i128) {
    let r = a[src].clone();
    for (x, y) in a[dst].iter_mut().zip(r) {
        *x += k * y;
    }
}

fn col_axpy(a: &mut [Vec<i128>], dst: usize, src: usize, k: i128) {
    for row in a.iter_mut() {
        row[dst] += k * row[src];
    }
}

fn to_i64(a: Vec<Vec<i128>>) -> IMat {
    a.into_iter()
        .map(|r| r.into_iter().map(|x| i64::try_from(x).expect("integer overflow in Smith form")).collect())
        .collect()
}

/// Invariant factors (diagonal of the Smith form), length min(m, n).
pub fn invariant_factors(a: &IMat) -> Vec<i64> {
    let (_, s, _) = smith_normal_form(a);
    (0..s.len().min(s.first().map_or(0, |r| r.len()))).map(|i| s[i][i]).collect()
}

pub fn integer_rank(a: &IMat) -> usize {
    invariant_factors(a).iter().filter(|&&d| d != 0).count()
}

/// Inverse of a unimodular integer matrix.
pub fn unimodular_inverse(a: &IMat) -> IMat {
    let n = a.len();
    let q: Vec<Vec<BigRational>> = a.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect();
    let inv = rational_inverse(&q).expect("matrix is not invertible");
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    assert!(inv[i][j].is_integer(), "matrix is not unimodular");
                    i64::try_from(inv[i][j].to_integer()).expect("overflow")
                })
                .collect()
        })
        .collect()
}

/// Row-reduce [A | b] over Q. Returns the unique solution, or None when the
/// system is inconsistent or underdetermined.
pub fn rational_solve_unique(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<BigRational>> = a.iter().zip(b).map(|(r, bi)| r.iter().cloned().chain([bi.clone()]).collect()).collect();
    let mut row = 0;
    let mut pivots = Vec::new();
    for col in 0..n {
        let Some(p) = (row..m).find(|&i| !aug[i][col].is_zero()) else { continue };
        aug.swap(row, p);
        let inv = aug[row][col].recip();
        for x in aug[row].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..m {
            if i != row && !aug[i][col].is_zero() {
                let k = aug[i][col].clone();
                let src = aug[row].clone();
                for (x, y) in aug[i].iter_mut().zip(&src) {
                    *x = &*x - &k * y;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if (row..m).any(|i| !aug[i][n].is_zero()) || pivots.len() < n {
        return None;
    }
    let mut x = vec![BigRational::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][n].clone();
    }
    Some(x)
}

pub fn rational_inverse(a: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<BigRational> = (0..n).map(|i| if i == j { BigRational::one() } else { BigRational::zero() }).collect();
        cols.push(rational_solve_unique(a, &e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

/// Basis of the right nullspace of a rational matrix.
pub fn rational_nullspace(a: &[Vec<BigRational>], ncols: usize) -> Vec<Vec<BigRational>> {
    let m = a.len();
    let mut r: Vec<Vec<BigRational>> = a.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..m).find(|&i| !r[i][col].is_zero()) else { continue };
        r.swap(row, p);
        let inv = r[row][col].recip();
        for x in r[row].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..m {
            if i != row && !r[i][col].is_zero() {
                let k = r[i][col].clone();
                let src = r[row].clone();
                for (x, y) in r[i].iter_mut().zip(&src) {
                    *x = &*x - &k * y;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m {
            break;
        }
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![BigRational::zero(); ncols];
            v[fc] = BigRational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -r[i][fc].clone();
            }
            v
        })
        .collect()
}

/// Clear denominators and divide by the content: primitive integer vector.
pub fn primitive_integer(v: &[BigRational]) -> Vec<i64> {
    use num_integer::Integer;
    let l = v.iter().fold(num_bigint::BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<num_bigint::BigInt> = v.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(num_bigint::BigInt::zero(), |acc, x| acc.gcd(x));
    ints.iter()
        .map(|x| {
            let y = if g.is_zero() { x.clone() } else { x / &g };
            i64::try_from(y).expect("overflow")
        })
        .collect()
}

/// Rank over Q(i) by Gaussian elimination.
pub fn gauss_rank(rows: &[Vec<GaussRat>]) -> usize {
    let mut r: Vec<Vec<GaussRat>> = rows.to_vec();
    let m = r.len();
    let n = r.first().map_or(0, |x| x.len());
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..m).find(|&i| !r[i][col].is_zero()) else { continue };
        r.swap(rank, p);
        let inv = r[rank][col].inv().unwrap();
        for i in rank + 1..m {
            if !r[i][col].is_zero() {
                let k = &r[i][col] * &inv;
                let src = r[rank].clone();
                for (x, y) in r[i].iter_mut().zip(&src) {
                    *x = &*x - &(&k * y);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Exact determinant by fraction-free Bareiss elimination over Q(i).
pub fn bareiss_det(a: &[Vec<GaussRat>]) -> GaussRat {
    let n = a.len();
    if n == 0 {
        return GaussRat::one();
    }
    let mut m: Vec<Vec<GaussRat>> = a.to_vec();
    let mut sign = false;
    let mut prev = GaussRat::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else { return GaussRat::zero() };
            m.swap(k, p);
            sign = !sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&m[i][j] * &m[k][k]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = &num / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign {
        -d
    } else {
        d
    }
}

pub fn gauss_matrix_to_c64(a: &[Vec<GaussRat>]) -> DMatrix<C64> {
    let n = a.len();
    let m = a.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, m, |i, j| a[i][j].to_c64())
}

/// Max-abs entry of a complex matrix.
pub fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn eigenvalues(m: &DMatrix<C64>) -> Vec<C64> {
    if m.nrows() == 0 {
        return vec![];
    }
    let schur = nalgebra::Schur::new(m.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Eigenvector of `m` for the (approximate) eigenvalue `lambda` by inverse iteration.
pub fn eigenvector(m: &DMatrix<C64>, lambda: C64) -> DVector<C64> {
    let n = m.nrows();
    let scale = max_abs(m).max(1.0);
    let shift = lambda + C64::new(1e-10 * scale, 1e-10 * scale);
    let a = m - DMatrix::<C64>::identity(n, n) * shift;
    let lu = a.lu();
    let mut x = DVector::from_fn(n, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.3 - 0.05 * i as f64));
    for _ in 0..4 {
        if let Some(y) = lu.solve(&x) {
            let nrm = y.norm();
            if nrm == 0.0 || !nrm.is_finite() {
                break;
            }
            x = y / C64::new(nrm, 0.0);
        }
    }
    x
}

/// CSV rows of "re,im" pairs, one matrix row per line.
pub fn matrix_csv(a: &DMatrix<C64>) -> String {
    let mut s = String::new();
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:e},{:e}", a[(i, j)].re, a[(i, j)].im)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}
