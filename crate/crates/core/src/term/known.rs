//! Named equations used as fixtures throughout the crate.

use super::{parse_equation, Equation};

/// The 29-symbol, 8-variable absorption identity whose single equation defines lattices.
pub const A1_TEXT: &str = "((((y+x)*x)+(((z*(x+x))+(u*x))*v))*(w+((s+x)*(x+t)))) = x";
/// A second 29-symbol single identity, differing from A1 in the right factor.
pub const A2_TEXT: &str = "((((y+x)*x)+(((z*(x+x))+(u*x))*v))*(((w+x)*(s+x))+t)) = x";

pub const L1_TEXT: &str = "(x+(y*(x*z))) = x";
pub const L2_TEXT: &str = "(x*(y+(x+z))) = x";
pub const L3_TEXT: &str = "(((y*x)+(x*z))+x) = x";
pub const L4_TEXT: &str = "(((y+x)*(x+z))*x) = x";

/// The 51-step derivation of L1-L4 from A1, in proof file format.
pub const A1_PROOF_TEXT: &str = include_str!("../../fixtures/a1_mckenzie.proof");

fn fixed(text: &str) -> Equation {
    parse_equation(text).expect("fixture equation parses")
}

pub fn a1() -> Equation {
    fixed(A1_TEXT)
}

pub fn a2() -> Equation {
    fixed(A2_TEXT)
}

pub fn l1() -> Equation {
    fixed(L1_TEXT)
}

pub fn l2() -> Equation {
    fixed(L2_TEXT)
}

pub fn l3() -> Equation {
    fixed(L3_TEXT)
}

pub fn l4() -> Equation {
    fixed(L4_TEXT)
}

/// McKenzie's four-equation lattice basis.
pub fn mckenzie_basis() -> Vec<Equation> {
    vec![l1(), l2(), l3(), l4()]
}

/// Commutativity, associativity, idempotence and absorption for meet and join.
pub fn lattice_axioms() -> Vec<Equation> {
    [
        "(x*y) = (y*x)",
        "(x+y) = (y+x)",
        "((x*y)*z) = (x*(y*z))",
        "((x+y)+z) = (x+(y+z))",
        "(x*x) = x",
        "(x+x) = x",
        "(x*(x+y)) = x",
        "(x+(x*y)) = x",
    ]
    .into_iter()
    .map(fixed)
    .collect()
}

/// Short names for [`lattice_axioms`], in the same order.
pub const LATTICE_AXIOM_NAMES: [&str; 8] = [
    "meet-comm",
    "join-comm",
    "meet-assoc",
    "join-assoc",
    "meet-idem",
    "join-idem",
    "meet-absorb",
    "join-absorb",
];
