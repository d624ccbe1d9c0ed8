//! Exact Laurent polynomials over Q(i), weights, invertible types and
//! diagonal symmetries. Variables are reported 1-based in text output and
//! stored 0-based.

mod family;
mod format;
mod laurent;
mod parse;
mod rational;
mod symmetry;
mod weights;

pub use family::DeformationFamily;
pub use format::{
    deserialize_polynomial, format_complex, from_text, parse_complex, parse_complex_list, read_family_file,
    serialize_polynomial, terms_from_doc, terms_to_doc, to_text, DocFormat, FamilyDoc, PolyBody, PolyDoc, TermDoc,
};
pub use laurent::{Exponent, LaurentPoly, NumPoly, UPoly};
pub use parse::parse_polynomial;
pub use rational::{parse_rat, rat_to_f64, rat_to_string, GaussRat};
pub use symmetry::{diagonal_symmetries, frac, twisted_sector, SymmetryGroup, TwistedSector};
pub use weights::{classify_invertible, quasi_weights, BlockKind, InvertibleBlock, InvertibleClass, WeightSystem};

/// Convenience: variable names from string slices.
pub fn var_names(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
