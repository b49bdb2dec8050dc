//! Benchmark fixtures.

use hardylab_core::{make_exponents, Exponents, LorentzIndex, TrialFamily, TrialFunction};

/// `(d, p, r) = (3, 2, 6)`.
pub fn critical_d3() -> Exponents {
    make_exponents(3, 2.0, 6.0).expect("valid exponents")
}

/// `(d, p, r) = (3, 2, 4)`, below the critical Lorentz index.
pub fn subcritical_d3() -> Exponents {
    make_exponents(3, 2.0, LorentzIndex::Finite(4.0)).expect("valid exponents")
}

pub fn member(family: TrialFamily, param: f64, exps: &Exponents) -> TrialFunction {
    family
        .instantiate(param, exps)
        .expect("valid family member")
}
