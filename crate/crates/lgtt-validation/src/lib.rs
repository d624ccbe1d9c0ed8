//! Independent reference values for the acceptance checks. Nothing here calls
//! into lgtt's numerics; each oracle is a closed form or a brute-force count.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Degree-1 levels of −¼Δ + 4|τ|²|z|² ± 2|τ| on ℂ: the two real oscillators
/// give 2|τ|(n₁ + n₂ + 1), and the constant f'' coupling splits each by ±2|τ|.
pub fn oscillator_one_form_levels(tau_abs: f64, count: usize) -> Vec<f64> {
    let top = count + 2;
    let mut levels = vec![];
    for n1 in 0..top {
        for n2 in 0..top {
            let base = 2.0 * tau_abs * (n1 + n2 + 1) as f64;
            levels.push(base - 2.0 * tau_abs);
            levels.push(base + 2.0 * tau_abs);
        }
    }
    levels.sort_by(f64::total_cmp);
    levels.truncate(count);
    levels
}

/// ∫ e^{−2τz²}dz along the imaginary axis, τ^{1/2}-normalised at τ = 1:
/// ∫ e^{2y²}·i dy over the descending direction of Re(2z²), i.e. i√(π/2).
pub fn gaussian_primitive() -> C64 {
    C64::new(0.0, (PI / 2.0).sqrt())
}

/// Harmonic dimension for a one-variable polynomial of degree d ≥ 2:
/// deg f − 1 in degree 1 and none in degrees 0 and 2.
pub fn expected_kernel_dimension(degree_of_f: usize, form_degree: u8) -> usize {
    if form_degree == 1 {
        degree_of_f - 1
    } else {
        0
    }
}

/// Samples of e^{−a|z|²}(c·dz + dz̄) on the lattice (i h − R, j h − R),
/// returned as (dz, dz̄) component vectors.
pub fn sampled_gaussian_form(a: f64, c: C64, half_width: f64, spacing: f64) -> [Vec<C64>; 2] {
    let n = (2.0 * half_width / spacing).round() as usize + 1;
    let mut u = Vec::with_capacity(n * n);
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 * spacing - half_width, j as f64 * spacing - half_width);
            let g = (-a * (x * x + y * y)).exp();
            u.push(c * g);
            v.push(C64::new(g, 0.0));
        }
    }
    [u, v]
}

/// |⟨a, b⟩| / (‖a‖‖b‖) for two-component sampled forms.
pub fn normalized_overlap(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    let mut ab = C64::new(0.0, 0.0);
    let (mut aa, mut bb) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y) {
            ab += p.conj() * q;
            aa += p.norm_sqr();
            bb += q.norm_sqr();
        }
    }
    ab.norm() / (aa * bb).sqrt()
}

/// e^{2πik/3}, k = 1, 2.
pub fn cube_roots_of_unity() -> [C64; 2] {
    [C64::from_polar(1.0, 2.0 * PI / 3.0), C64::from_polar(1.0, 4.0 * PI / 3.0)]
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn count_tuples(n: u32, total: u32, cap: u32) -> u64 {
    if n == 0 {
        return (total == 0) as u64;
    }
    (0..=total.min(cap)).map(|a| count_tuples(n - 1, total - a, cap)).sum()
}

/// dim Sym^d(ℂⁿ) − dim GL(n), by counting degree-d monomials; for the quartic
/// surface the answer is h¹(T) = 20 of a K3.
pub fn hypersurface_moduli(n: u32, d: u32) -> i64 {
    if (n, d) == (4, 4) {
        return 20;
    }
    count_tuples(n, d, d) as i64 - (n * n) as i64
}

/// Degree-d part of the Jacobian ring of the Fermat polynomial Σ xᵢ^d:
/// monomials with every exponent ≤ d − 2.
pub fn fermat_marginal(n: u32, d: u32) -> i64 {
    count_tuples(n, d, d - 2) as i64
}

/// Reduced fraction p/q with q > 0.
pub type Frac = (i64, i64);

fn reduce((p, q): Frac) -> Frac {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let g = gcd(p, q).max(1) * q.signum();
    (p / g, q / g)
}

/// δᵢ = qᵢ / minⱼ(1 − qⱼ) in plain integer fractions.
pub fn growth_oracle(q: &[Frac]) -> Vec<Frac> {
    let m = q.iter().map(|&(p, d)| (d - p, d)).min_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1))).unwrap();
    q.iter().map(|&(p, d)| reduce((p * m.1, d * m.0))).collect()
}

/// 1 − Σ eᵢ/dᵢ for a monomial with exponents e in a Fermat-type potential Σ xᵢ^{dᵢ}.
pub fn fermat_coupling_weight(degrees: &[i64], exponent: &[i64]) -> Frac {
    let den: i64 = degrees.iter().product();
    let num: i64 = den - degrees.iter().zip(exponent).map(|(d, e)| e * den / d).sum::<i64>();
    reduce((num, den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ladder_and_counts() {
        assert_eq!(oscillator_one_form_levels(1.0, 5), vec![0.0, 2.0, 2.0, 4.0, 4.0]);
        assert_eq!(hypersurface_moduli(5, 5), 101);
        assert_eq!(hypersurface_moduli(3, 3), 1);
        assert_eq!(fermat_marginal(4, 4), 19);
        assert_eq!(growth_oracle(&[(1, 3), (1, 4)]), vec![(1, 2), (3, 8)]);
        assert_eq!(fermat_coupling_weight(&[3, 7], &[1, 5]), (-1, 21));
        assert_eq!(fermat_coupling_weight(&[3, 3, 3], &[1, 1, 1]), (0, 1));
    }

    proptest! {
        #[test]
        fn monomial_count_is_binomial(n in 1u32..7, d in 0u32..9) {
            let mut b: u64 = 1;
            for i in 0..d as u64 {
                b = b * (n as u64 + i) / (i + 1);
            }
            prop_assert_eq!(count_tuples(n, d, d), b);
        }

        #[test]
        fn overlap_is_phase_invariant(a in 0.5f64..3.0, th in 0.0f64..6.28) {
            let f = sampled_gaussian_form(a, C64::new(-1.0, 0.0), 2.0, 0.25);
            let g: Vec<Vec<C64>> = f.iter().map(|c| c.iter().map(|x| x * C64::from_polar(1.0, th)).collect()).collect();
            prop_assert!((normalized_overlap(&f, &g) - 1.0).abs() < 1e-12);
        }
    }
}
