use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::laurent::{Exponent, LaurentPoly};
use super::rational::GaussRat;
use crate::linalg::{integer_rank, rational_solve_unique, IMat};

/// Weights q_i = k_i/d with A·q = 1 on every monomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightSystem {
    pub q: Vec<BigRational>,
    pub degree: BigInt,
}

impl WeightSystem {
    pub fn from_weights(q: Vec<BigRational>) -> Self {
        let degree = q.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        WeightSystem { q, degree }
    }

    /// Integer numerators k_i with q_i = k_i / d.
    pub fn numerators(&self) -> Vec<BigInt> {
        self.q.iter().map(|x| (x * BigRational::from_integer(self.degree.clone())).to_integer()).collect()
    }

    /// ⟨α, q⟩ for an exponent vector.
    pub fn weight_of(&self, e: &[i32]) -> BigRational {
        e.iter().zip(&self.q).map(|(&a, q)| q * BigRational::from_integer(a.into())).sum()
    }

    /// Central charge Σ(1 − 2q_i).
    pub fn central_charge(&self) -> BigRational {
        self.q.iter().map(|q| BigRational::one() - q * BigRational::from_integer(2.into())).sum()
    }
}

pub(crate) fn exponent_matrix(p: &LaurentPoly) -> IMat {
    p.terms().keys().map(|e| e.iter().map(|&a| a as i64).collect()).collect()
}

/// Exact weights, or None unless A·q = 1 has a unique solution with every q_i > 0.
pub fn quasi_weights(p: &LaurentPoly) -> Option<WeightSystem> {
    if p.is_zero() || !p.is_polynomial() {
        return None;
    }
    let a: Vec<Vec<BigRational>> = p
        .terms()
        .keys()
        .map(|e| e.iter().map(|&x| BigRational::from_integer(x.into())).collect())
        .collect();
    let b = vec![BigRational::one(); a.len()];
    let q = rational_solve_unique(&a, &b)?;
    if q.iter().any(|x| !x.is_positive()) {
        return None;
    }
    Some(WeightSystem::from_weights(q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    Fermat,
    Loop,
    Chain,
}

/// One atomic summand of an invertible polynomial. `vars` are in block order
/// (chain head first, loop starting from the smallest index) and `exponents`
/// are the matching a_i.
#[derive(Clone, Debug, PartialEq)]
pub struct InvertibleBlock {
    pub kind: BlockKind,
    pub vars: Vec<usize>,
    pub exponents: Vec<i32>,
    pub terms: Vec<(Exponent, GaussRat)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InvertibleClass {
    Blocks(Vec<InvertibleBlock>),
    NotInvertible(String),
}

impl InvertibleClass {
    /// Sum of the block terms, for reconstruction checks.
    pub fn reassemble(&self, vars: &[String]) -> Option<LaurentPoly> {
        match self {
            InvertibleClass::Blocks(bs) => Some(LaurentPoly::from_terms(vars, bs.iter().flat_map(|b| b.terms.iter().cloned()))),
            InvertibleClass::NotInvertible(_) => None,
        }
    }
}

/// Kreuzer–Skarke decomposition into Fermat, loop and chain summands.
pub fn classify_invertible(p: &LaurentPoly) -> InvertibleClass {
    use InvertibleClass::NotInvertible;
    let n = p.nvars();
    if !p.is_polynomial() {
        return NotInvertible("not a polynomial".into());
    }
    if p.num_terms() != n {
        return NotInvertible(format!("term count {} differs from variable count {n}", p.num_terms()));
    }
    let rank = integer_rank(&exponent_matrix(p));
    if rank < n {
        return NotInvertible(format!("exponent matrix has rank {rank} < {n}"));
    }
    let terms: Vec<(Exponent, GaussRat)> = p.terms().iter().map(|(e, c)| (e.clone(), c.clone())).collect();

    // each monomial is x_i^{a} or x_i^{a} x_j; choose an owner per monomial by matching
    let mut cands: Vec<Vec<(usize, Option<usize>)>> = Vec::new();
    for (e, _) in &terms {
        let supp: Vec<usize> = (0..n).filter(|&i| e[i] != 0).collect();
        let c = match supp.len() {
            1 => vec![(supp[0], None)],
            2 => {
                let (i, j) = (supp[0], supp[1]);
                let mut c = Vec::new();
                if e[j] == 1 {
                    c.push((i, Some(j)));
                }
                if e[i] == 1 {
                    c.push((j, Some(i)));
                }
                c
            }
            _ => vec![],
        };
        if c.is_empty() {
            return NotInvertible(format!("monomial {e:?} is not of the form x^a or x^a y"));
        }
        cands.push(c);
    }
    let mut owner_of_var: Vec<Option<usize>> = vec![None; n];
    let mut choice: Vec<Option<(usize, Option<usize>)>> = vec![None; terms.len()];
    if !assign(0, &cands, &mut owner_of_var, &mut choice) {
        return NotInvertible("no one-to-one assignment of monomials to variables".into());
    }
    // pointer graph i -> j
    let mut next: Vec<Option<usize>> = vec![None; n];
    let mut mono_of: Vec<usize> = vec![0; n];
    for (m, ch) in choice.iter().enumerate() {
        let (i, j) = ch.unwrap();
        next[i] = j;
        mono_of[i] = m;
    }
    let mut indeg = vec![0usize; n];
    for j in next.iter().flatten() {
        indeg[*j] += 1;
    }
    if indeg.iter().any(|&d| d > 1) {
        return NotInvertible("variable-sharing graph branches; not a sum of atomic types".into());
    }
    let expo = |i: usize| terms[mono_of[i]].0[i];
    let mut seen = vec![false; n];
    let mut blocks = Vec::new();
    // paths start at in-degree-0 vertices
    for s in 0..n {
        if indeg[s] != 0 {
            continue;
        }
        let mut path = vec![s];
        let mut cur = s;
        while let Some(j) = next[cur] {
            path.push(j);
            cur = j;
        }
        for &v in &path {
            seen[v] = true;
        }
        let kind = if path.len() == 1 { BlockKind::Fermat } else { BlockKind::Chain };
        blocks.push(make_block(kind, path, &expo, &mono_of, &terms));
    }
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut cyc = vec![s];
        let mut cur = next[s].unwrap();
        while cur != s {
            cyc.push(cur);
            cur = next[cur].unwrap();
        }
        for &v in &cyc {
            seen[v] = true;
        }
        blocks.push(make_block(BlockKind::Loop, cyc, &expo, &mono_of, &terms));
    }
    blocks.sort_by_key(|b| b.vars.iter().copied().min());
    InvertibleClass::Blocks(blocks)
}

fn make_block(
    kind: BlockKind,
    vars: Vec<usize>,
    expo: &dyn Fn(usize) -> i32,
    mono_of: &[usize],
    terms: &[(Exponent, GaussRat)],
) -> InvertibleBlock {
    InvertibleBlock {
        kind,
        exponents: vars.iter().map(|&v| expo(v)).collect(),
        terms: vars.iter().map(|&v| terms[mono_of[v]].clone()).collect(),
        vars,
    }
}

fn assign(
    m: usize,
    cands: &[Vec<(usize, Option<usize>)>],
    owner: &mut Vec<Option<usize>>,
    choice: &mut Vec<Option<(usize, Option<usize>)>>,
) -> bool {
    if m == cands.len() {
        return true;
    }
    for &(i, j) in &cands[m] {
        if owner[i].is_none() {
            owner[i] = Some(m);
            choice[m] = Some((i, j));
            if assign(m + 1, cands, owner, choice) {
                return true;
            }
            owner[i] = None;
            choice[m] = None;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn weights_examples() {
        let xy = v(&["x", "y"]);
        let w = quasi_weights(&parse_polynomial("x^3 + y^4", &xy).unwrap()).unwrap();
        assert_eq!(w.q, vec![r(1, 3), r(1, 4)]);
        assert_eq!(w.degree, BigInt::from(12));
        let w = quasi_weights(&parse_polynomial("x^3 + x*y^3", &xy).unwrap()).unwrap();
        assert_eq!(w.q, vec![r(1, 3), r(2, 9)]);
        assert!(quasi_weights(&parse_polynomial("x^2 + x", &v(&["x"])).unwrap()).is_none());
        // underdetermined: one monomial in two variables
        assert!(quasi_weights(&parse_polynomial("x*y", &xy).unwrap()).is_none());
    }

    #[test]
    fn invertible_types() {
        let z = v(&["z"]);
        match classify_invertible(&parse_polynomial("z^5", &z).unwrap()) {
            InvertibleClass::Blocks(b) => {
                assert_eq!(b.len(), 1);
                assert_eq!(b[0].kind, BlockKind::Fermat);
                assert_eq!(b[0].exponents, vec![5]);
            }
            other => panic!("{other:?}"),
        }
        let xyz = v(&["x", "y", "z"]);
        let lp = parse_polynomial("x^2*y + y^3*z + z^4*x", &xyz).unwrap();
        match classify_invertible(&lp) {
            InvertibleClass::Blocks(b) => {
                assert_eq!(b.len(), 1);
                assert_eq!(b[0].kind, BlockKind::Loop);
                assert_eq!(b[0].exponents, vec![2, 3, 4]);
            }
            other => panic!("{other:?}"),
        }
        let ch = parse_polynomial("x^2*y + y^3*z + z^4", &xyz).unwrap();
        match classify_invertible(&ch) {
            InvertibleClass::Blocks(b) => {
                assert_eq!(b[0].kind, BlockKind::Chain);
                assert_eq!(b[0].vars, vec![0, 1, 2]);
                assert_eq!(b[0].exponents, vec![2, 3, 4]);
            }
            other => panic!("{other:?}"),
        }
        let c = classify_invertible(&parse_polynomial("x^3 + y^3 + z^3 + x*y*z", &xyz).unwrap());
        assert!(matches!(c, InvertibleClass::NotInvertible(ref s) if s.contains("term count")));
    }

    #[test]
    fn mixed_blocks_reassemble() {
        let vs = v(&["a", "b", "c", "d"]);
        let p = parse_polynomial("a^3 + 2*b^2*c + c^5 + d^7", &vs).unwrap();
        let cls = classify_invertible(&p);
        let kinds: Vec<BlockKind> = match &cls {
            InvertibleClass::Blocks(b) => b.iter().map(|x| x.kind).collect(),
            _ => panic!(),
        };
        assert_eq!(kinds, vec![BlockKind::Fermat, BlockKind::Chain, BlockKind::Fermat]);
        assert_eq!(cls.reassemble(&vs).unwrap(), p);
    }
}
