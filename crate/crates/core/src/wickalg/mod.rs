//! The field algebra generated by smeared fields `φ(f)` with relations
//! linearity, `φ(f)* = φ(f̄)`, `φ(P_g f) = 0` and
//! `φ(f)φ(g) − φ(g)φ(f) = iE(f, g)𝟙`, the morphisms `α_ψ`, and Wick
//! combinatorics.

pub mod algebra;
pub mod oracle;
pub mod registry;
pub mod wick;

pub use algebra::{
    apply_morphism, coeff_to_f64, exact, imag_unit, normal_form, rational, real, AlgebraElement, Coeff, Generator,
    Monomial, Pairing, PairingOracle, PairingTable,
};
pub use oracle::OscillatorRepresentation;
pub use registry::FieldRegistry;
pub use wick::{
    count_pairings, renorm_apply, reorder_by_double_expansion, reorder_prescription, wick_expand, wick_inverse, ExpansionKind, FieldPolynomial,
    HbPolynomial, PairingExpansion, RenormShift, MAX_POWER,
};

#[cfg(test)]
mod tests;
