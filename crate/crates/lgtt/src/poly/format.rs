//! Polynomial and family documents (JSON or TOML).

use std::path::Path;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::family::DeformationFamily;
use super::laurent::LaurentPoly;
use super::parse::parse_polynomial;
use super::rational::{parse_rat, rat_to_string, GaussRat};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub exp: Vec<i32>,
    pub re: String,
    #[serde(default = "zero_str")]
    pub im: String,
}

fn zero_str() -> String {
    "0".into()
}

/// A polynomial given either as a term list or as an expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolyBody {
    Terms(Vec<TermDoc>),
    Expr(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyDoc {
    pub vars: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default)]
    pub terms: Vec<TermDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyDoc {
    pub vars: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default)]
    pub terms: Vec<TermDoc>,
    #[serde(default)]
    pub deformers: Vec<PolyBody>,
    /// Complex values written "a+bi".
    #[serde(default)]
    pub t: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
}

pub fn terms_to_doc(p: &LaurentPoly) -> Vec<TermDoc> {
    p.terms()
        .iter()
        .map(|(e, c)| TermDoc { exp: e.clone(), re: rat_to_string(&c.re), im: rat_to_string(&c.im) })
        .collect()
}

pub fn terms_from_doc(vars: &[String], terms: &[TermDoc]) -> Result<LaurentPoly> {
    let mut p = LaurentPoly::zero(vars);
    for t in terms {
        if t.exp.len() != vars.len() {
            return Err(Error::Parse { pos: 0, msg: format!("exponent {:?} has wrong length", t.exp) });
        }
        p.add_term(t.exp.clone(), GaussRat::new(parse_rat(&t.re)?, parse_rat(&t.im)?));
    }
    Ok(p)
}

fn body(vars: &[String], expr: &Option<String>, terms: &[TermDoc]) -> Result<LaurentPoly> {
    let mut p = terms_from_doc(vars, terms)?;
    if let Some(e) = expr {
        p = p.add(&parse_polynomial(e, vars)?);
    }
    Ok(p)
}

impl PolyDoc {
    pub fn from_poly(p: &LaurentPoly) -> Self {
        PolyDoc { vars: p.vars().to_vec(), expr: None, terms: terms_to_doc(p) }
    }

    pub fn to_poly(&self) -> Result<LaurentPoly> {
        body(&self.vars, &self.expr, &self.terms)
    }
}

impl FamilyDoc {
    pub fn from_family(f: &DeformationFamily) -> Self {
        FamilyDoc {
            vars: f.base.vars().to_vec(),
            expr: None,
            terms: terms_to_doc(&f.base),
            deformers: f.deformers.iter().map(|g| PolyBody::Terms(terms_to_doc(g))).collect(),
            t: f.t.iter().map(|z| format_complex(*z)).collect(),
            tau: Some(format_complex(f.tau)),
        }
    }

    pub fn to_family(&self) -> Result<DeformationFamily> {
        let base = body(&self.vars, &self.expr, &self.terms)?;
        let deformers = self
            .deformers
            .iter()
            .map(|d| match d {
                PolyBody::Terms(ts) => terms_from_doc(&self.vars, ts),
                PolyBody::Expr(e) => parse_polynomial(e, &self.vars),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut t = self.t.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>()?;
        t.resize(deformers.len(), C64::zero());
        let tau = match &self.tau {
            Some(s) => parse_complex(s)?,
            None => C64::new(1.0, 0.0),
        };
        DeformationFamily::new(base, deformers, t, tau)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DocFormat {
    Json,
    Toml,
}

impl DocFormat {
    pub fn guess(path: &Path, text: &str) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => DocFormat::Json,
            Some("toml") => DocFormat::Toml,
            _ if text.trim_start().starts_with('{') => DocFormat::Json,
            _ => DocFormat::Toml,
        }
    }
}

pub fn to_text<T: Serialize>(doc: &T, fmt: DocFormat) -> Result<String> {
    match fmt {
        DocFormat::Json => serde_json::to_string_pretty(doc).map_err(|e| Error::Io(e.to_string())),
        DocFormat::Toml => toml::to_string(doc).map_err(|e| Error::Io(e.to_string())),
    }
}

pub fn from_text<T: for<'de> Deserialize<'de>>(text: &str, fmt: DocFormat) -> Result<T> {
    match fmt {
        DocFormat::Json => serde_json::from_str(text).map_err(|e| Error::Parse { pos: e.column(), msg: e.to_string() }),
        DocFormat::Toml => toml::from_str(text).map_err(|e| Error::Parse {
            pos: e.span().map_or(0, |s| s.start),
            msg: e.message().to_string(),
        }),
    }
}

pub fn serialize_polynomial(p: &LaurentPoly, fmt: DocFormat) -> Result<String> {
    to_text(&PolyDoc::from_poly(p), fmt)
}

pub fn deserialize_polynomial(text: &str, fmt: DocFormat) -> Result<LaurentPoly> {
    from_text::<PolyDoc>(text, fmt)?.to_poly()
}

pub fn read_family_file(path: &Path) -> Result<DeformationFamily> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    from_text::<FamilyDoc>(&text, DocFormat::guess(path, &text))?.to_family()
}

/// Shortest round-trip decimal for each part, e.g. "0.3+0.1i", "-2i", "1".
pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Parse "a", "bi", "a+bi", "a-bi", "i", "-i", allowing exponents like 1e-3.
pub fn parse_complex(s: &str) -> Result<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse { pos: 0, msg: format!("bad complex number {s:?}") };
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

/// Parse a comma-separated list of complex numbers.
pub fn parse_complex_list(s: &str) -> Result<Vec<C64>> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(parse_complex).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn polynomial_round_trip() {
        let vs = v(&["z1", "z2"]);
        let p = parse_polynomial("z1 + z2 + 1/(z1*z2) - (3/7 + 2*i/5)*z1^4", &vs).unwrap();
        for fmt in [DocFormat::Json, DocFormat::Toml] {
            let s = serialize_polynomial(&p, fmt).unwrap();
            let q = deserialize_polynomial(&s, fmt).unwrap();
            assert_eq!(p, q);
            assert_eq!(s, serialize_polynomial(&q, fmt).unwrap());
        }
    }

    #[test]
    fn expression_documents() {
        let text = "vars = [\"z\"]\nexpr = \"z^3/3\"\ndeformers = [\"1\", \"z\"]\nt = [\"0\", \"-1+0.3i\"]\ntau = \"2\"\n";
        let fam = from_text::<FamilyDoc>(text, DocFormat::Toml).unwrap().to_family().unwrap();
        assert_eq!(fam.deformers.len(), 2);
        assert_eq!(fam.t[1], C64::new(-1.0, 0.3));
        assert_eq!(fam.tau, C64::new(2.0, 0.0));
        let back = FamilyDoc::from_family(&fam);
        let again = back.to_family().unwrap();
        assert_eq!(again.base, fam.base);
        assert_eq!(again.t, fam.t);
    }

    #[test]
    fn complex_text() {
        assert_eq!(parse_complex("0.3+0.1i").unwrap(), C64::new(0.3, 0.1));
        assert_eq!(parse_complex("-2i").unwrap(), C64::new(0.0, -2.0));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2e+1i").unwrap(), C64::new(1e-3, -20.0));
        assert_eq!(parse_complex("5").unwrap(), C64::new(5.0, 0.0));
        assert!(parse_complex("x").is_err());
        for z in [C64::new(0.1, -0.7), C64::new(-3.0, 0.0), C64::new(0.0, 2.5), C64::new(1e-300, 7.0)] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }

    #[test]
    fn wrong_exponent_length() {
        let text = r#"{"vars": ["x"], "terms": [{"exp": [1, 2], "re": "1", "im": "0"}]}"#;
        assert!(deserialize_polynomial(text, DocFormat::Json).is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::poly::var_names;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn poly() -> impl Strategy<Value = LaurentPoly> {
        prop::collection::vec(((-3i32..4, -3i32..4), (-9i64..10, 1i64..5), -5i64..6), 0..6).prop_map(|terms| {
            let v = var_names(&["x", "y"]);
            LaurentPoly::from_terms(
                &v,
                terms.into_iter().map(|((a, b), (p, q), im)| (vec![a, b], GaussRat::new(BigRational::new(p.into(), q.into()), BigRational::from_integer(im.into())))),
            )
        })
    }

    proptest! {
        #[test]
        fn documents_round_trip(p in poly()) {
            for fmt in [DocFormat::Json, DocFormat::Toml] {
                let text = serialize_polynomial(&p, fmt).unwrap();
                prop_assert_eq!(deserialize_polynomial(&text, fmt).unwrap(), p.clone());
            }
        }

        #[test]
        fn complex_strings_round_trip(re in -1e6f64..1e6, im in -1e6f64..1e6, zero_re: bool) {
            let z = C64::new(if zero_re { 0.0 } else { re }, im);
            prop_assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }
}
