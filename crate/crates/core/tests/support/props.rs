//! Property suites over the module invariants, each run for [`CASES`] random cases.
//! A failing suite panics with the shrunk counterexample.

use std::collections::BTreeSet;

use forge_core::algebra::{
    filter_models, find_models, holds, is_lattice, FiniteAlgebra, LibraryEntry, ModelLibrary, Requirement,
};
use forge_core::enumerate::{enumerate_candidates, EnumSpec};
use forge_core::free_lattice::{is_identity, leq, leq_unmemoized};
use forge_core::kernel::{check_derivation, paramodulants, Derivation, Justification, ProofStep};
use forge_core::term::{
    canonicalize_vars, match_equation, parse_equation, parse_term, unify, Equation, Position, Substitution, Term, VarId,
};
use forge_core::Execution;
use proptest::prelude::*;

pub const CASES: u32 = 1024;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: CASES,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Terms with at most `leaves` leaves over variables `0..vars`.
fn term(vars: u32, leaves: u32) -> impl Strategy<Value = Term> {
    let leaf = (0..vars).prop_map(Term::var);
    leaf.prop_recursive(8, leaves, 2, |inner| {
        (any::<bool>(), inner.clone(), inner).prop_map(|(m, a, b)| if m { Term::meet(a, b) } else { Term::join(a, b) })
    })
}

fn equation(vars: u32, leaves: u32) -> impl Strategy<Value = Equation> {
    (term(vars, leaves), term(vars, leaves)).prop_map(|(l, r)| Equation::new(l, r))
}

fn algebra(size: usize) -> impl Strategy<Value = FiniteAlgebra> {
    let cells = size * size;
    (
        proptest::collection::vec(0..size, cells),
        proptest::collection::vec(0..size, cells),
    )
        .prop_map(move |(m, j)| FiniteAlgebra::new(size, m, j).unwrap())
}

/// A few small lattices: chains, the diamond and the pentagon.
fn lattices() -> Vec<FiniteAlgebra> {
    let from_order = |n: usize, leq: &dyn Fn(usize, usize) -> bool| {
        let glb = |a: usize, b: usize| {
            let lower: Vec<usize> = (0..n).filter(|&c| leq(c, a) && leq(c, b)).collect();
            *lower.iter().find(|&&c| lower.iter().all(|&d| leq(d, c))).unwrap()
        };
        let lub = |a: usize, b: usize| {
            let upper: Vec<usize> = (0..n).filter(|&c| leq(a, c) && leq(b, c)).collect();
            *upper.iter().find(|&&c| upper.iter().all(|&d| leq(c, d))).unwrap()
        };
        FiniteAlgebra::from_fns(n, glb, lub).unwrap()
    };
    // 0 bottom, 4 top; 1, 2, 3 pairwise incomparable
    let m3 = from_order(5, &|a, b| a == b || a == 0 || b == 4);
    // 0 < 1 < 2 < 4 and 0 < 3 < 4
    let n5 = from_order(5, &|a, b| a == b || a == 0 || b == 4 || (a == 1 && b == 2));
    let out = vec![FiniteAlgebra::chain(2), FiniteAlgebra::chain(3), m3, n5];
    assert!(out.iter().all(is_lattice));
    out
}

/// Replaces some subterms of `t` by fresh variables from `next` up, recording
/// the binding that undoes it.
fn generalize(
    t: &Term,
    choices: &mut impl Iterator<Item = bool>,
    next: &mut u32,
    undo: &mut Vec<(VarId, Term)>,
) -> Term {
    if choices.next().unwrap_or(false) {
        let v = VarId(*next);
        *next += 1;
        undo.push((v, t.clone()));
        return Term::Var(v);
    }
    match t {
        Term::Var(_) => t.clone(),
        Term::App(op, a, b) => {
            let a = generalize(a, choices, next, undo);
            let b = generalize(b, choices, next, undo);
            Term::app(*op, a, b)
        }
    }
}

proptest! {
    #![proptest_config(config())]

    fn print_parse_round_trip(e in equation(9, 9)) {
        prop_assume!(e.weight() <= 33);
        let text = e.to_string();
        prop_assert_eq!(parse_equation(&text).unwrap(), e.clone());
        prop_assert_eq!(parse_term(&e.lhs.to_string()).unwrap(), e.lhs.clone());
    }

    fn unifiers_unify(s in term(3, 6), t in term(3, 6)) {
        let t = t.rename(&mut |v| VarId(v.0 + 10));
        if let Some(sigma) = unify(&s, &t) {
            prop_assert_eq!(sigma.apply(&s), sigma.apply(&t));
            // idempotent
            let twice = sigma.apply(&sigma.apply(&s));
            prop_assert_eq!(twice, sigma.apply(&s));
        }
    }

    fn unifiers_are_most_general(
        u in term(3, 8),
        left in proptest::collection::vec(proptest::bool::weighted(0.25), 16),
        right in proptest::collection::vec(proptest::bool::weighted(0.25), 16),
    ) {
        // two generalizations of one term, with disjoint fresh variables, are unified by undoing both
        let mut undo = Vec::new();
        let mut next = 100;
        let s = generalize(&u, &mut left.into_iter(), &mut next, &mut undo);
        let t = generalize(&u, &mut right.into_iter(), &mut next, &mut undo);
        let theta = Substitution::from_pairs(undo);
        prop_assert_eq!(theta.apply(&s), theta.apply(&t));
        let sigma = unify(&s, &t).expect("unifiable");
        let general = Equation::new(sigma.apply(&s), sigma.apply(&t));
        let specific = Equation::new(theta.apply(&s), theta.apply(&t));
        let delta = match_equation(&general, &specific).expect("theta factors through sigma");
        for v in s.vars().into_iter().chain(t.vars()) {
            let via_sigma = delta.apply(&sigma.apply(&Term::Var(v)));
            prop_assert_eq!(via_sigma, theta.apply(&Term::Var(v)));
        }
    }

    fn replace_and_subterm_agree(t in term(4, 10), r in term(4, 4), pick in any::<prop::sample::Index>()) {
        let positions = t.positions();
        let p: &Position = pick.get(&positions);
        let replaced = t.replace_at(p, r.clone()).unwrap();
        prop_assert_eq!(replaced.subterm_at(p).unwrap(), &r);
        let original = t.subterm_at(p).unwrap().clone();
        prop_assert_eq!(t.replace_at(p, original).unwrap(), t.clone());
    }

    fn whitman_order_laws(a in term(3, 6), b in term(3, 6), c in term(3, 6)) {
        prop_assert!(leq(&a, &a));
        prop_assert!(leq(&Term::meet(a.clone(), b.clone()), &a));
        prop_assert!(leq(&a, &Term::join(a.clone(), b.clone())));
        let ab = leq(&a, &b);
        prop_assert_eq!(ab, leq_unmemoized(&a, &b));
        if ab && leq(&b, &c) {
            prop_assert!(leq(&a, &c));
        }
        // a <= a+b <= (a+b)+c
        let up = Term::join(a.clone(), b.clone());
        prop_assert!(leq(&a, &Term::join(up, c.clone())));
    }

    fn whitman_agrees_with_small_lattices(a in term(3, 6), b in term(3, 6)) {
        let e = Equation::new(a.clone(), b.clone());
        if is_identity(&e) {
            for l in lattices() {
                prop_assert!(holds(&l, &e), "{} fails in {:?}", e, l);
            }
        }
        if leq(&a, &b) {
            let absorbs = Equation::new(Term::meet(a.clone(), b.clone()), a.clone());
            for l in lattices() {
                prop_assert!(holds(&l, &absorbs));
            }
        }
    }

    fn holds_ignores_variable_names(e in equation(4, 6), alg in algebra(2), alg3 in algebra(3)) {
        let c = canonicalize_vars(&e);
        prop_assert_eq!(holds(&alg, &e), holds(&alg, &c));
        prop_assert_eq!(holds(&alg3, &e), holds(&alg3, &c));
    }

    fn model_filter_is_monotone(
        extra in proptest::collection::vec(algebra(2), 0..4),
        base in proptest::collection::vec(algebra(2), 0..4),
        leaves in 3usize..=4,
    ) {
        let mut small = ModelLibrary::new();
        let mut large = ModelLibrary::new();
        for a in base.iter().filter(|a| !is_lattice(a)) {
            small.push(LibraryEntry::hand(a.clone())).unwrap();
            large.push(LibraryEntry::hand(a.clone())).unwrap();
        }
        for a in extra.iter().filter(|a| !is_lattice(a)) {
            large.push(LibraryEntry::hand(a.clone())).unwrap();
        }
        let spec = EnumSpec::new(leaves..=leaves, 3);
        let cands: Vec<Equation> = enumerate_candidates(&spec).collect();
        let kept_small: BTreeSet<Equation> = filter_models(&cands, &small, Execution::Sequential).into_iter().collect();
        let kept_large = filter_models(&cands, &large, Execution::Sequential);
        for e in kept_large {
            prop_assert!(kept_small.contains(&e));
        }
    }

    fn kernel_accepts_only_consequences(
        ax in equation(3, 4),
        picks in proptest::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), any::<prop::sample::Index>()), 1..6),
        corrupt in proptest::collection::vec(proptest::option::weighted(0.3, equation(3, 4)), 6),
        model_pick in any::<prop::sample::Index>(),
    ) {
        let (models, _) = find_models(std::slice::from_ref(&ax), 2, Requirement::Any, u64::MAX).unwrap();
        prop_assume!(!models.is_empty());
        let model = model_pick.get(&models).clone();
        let mut steps = vec![ProofStep { id: 1, equation: ax.clone(), just: Justification::Axiom }];
        for (k, (i, j, which)) in picks.iter().enumerate() {
            let from = i.get(&steps).clone();
            let into = j.get(&steps).clone();
            let ps = paramodulants(&from.equation, &into.equation);
            if ps.is_empty() {
                continue;
            }
            let mut equation = which.get(&ps).equation.clone();
            // chained steps can square in size; keep the derivations small
            if equation.weight() > 120 {
                continue;
            }
            if let Some(bad) = &corrupt[k] {
                equation = bad.clone();
            }
            let id = steps.len() as u32 + 1;
            steps.push(ProofStep {
                id,
                equation,
                just: Justification::Para { from: from.id, into: into.id },
            });
        }
        let d = Derivation::new(steps);
        let verdicts = check_derivation(&d, std::slice::from_ref(&ax));
        for (s, v) in d.steps.iter().zip(&verdicts) {
            if !v.is_ok() {
                break;
            }
            // everything accepted up to here follows from the axiom, so it holds in its models
            prop_assert!(holds(&model, &s.equation), "step {} accepted but false in the model", s.id);
        }
        // uncorrupted steps are always accepted
        if corrupt.iter().all(Option::is_none) {
            prop_assert!(verdicts.iter().all(|v| v.is_ok()));
        }
    }

    fn paramodulants_match_naive_rewriting(from in equation(2, 3), into in equation(3, 5)) {
        let fast: BTreeSet<Equation> = paramodulants(&from, &into).into_iter().map(|p| p.equation).collect();
        // naive: rename `from` apart by a fixed offset, try unification at every position
        let offset = into.max_var().map_or(0, |v| v.0 + 1);
        let shifted = from.rename(&mut |v| VarId(v.0 + offset));
        let mut naive = BTreeSet::new();
        for p in into.lhs.positions() {
            let sub = into.lhs.subterm_at(&p).unwrap();
            if let Some(sigma) = unify(&shifted.lhs, sub) {
                let lhs = sigma.apply(&into.lhs).replace_at(&p, sigma.apply(&shifted.rhs)).unwrap();
                naive.insert(Equation::new(lhs, sigma.apply(&into.rhs)).canonical());
            }
        }
        prop_assert_eq!(fast, naive);
    }
}

/// Every suite by name.
pub const SUITES: [(&str, fn()); 10] = [
    ("print_parse_round_trip", print_parse_round_trip),
    ("unifiers_unify", unifiers_unify),
    ("unifiers_are_most_general", unifiers_are_most_general),
    ("replace_and_subterm_agree", replace_and_subterm_agree),
    ("whitman_order_laws", whitman_order_laws),
    ("whitman_agrees_with_small_lattices", whitman_agrees_with_small_lattices),
    ("holds_ignores_variable_names", holds_ignores_variable_names),
    ("model_filter_is_monotone", model_filter_is_monotone),
    ("kernel_accepts_only_consequences", kernel_accepts_only_consequences),
    (
        "paramodulants_match_naive_rewriting",
        paramodulants_match_naive_rewriting,
    ),
];
