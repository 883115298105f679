//! Independent brute-force oracles shared by the integration tests.

use std::collections::BTreeSet;

use forge_core::algebra::{find_models, find_nonlattice_model, holds, is_lattice, FiniteAlgebra, Requirement};
use forge_core::enumerate::{count_candidates, enumerate_candidates, is_admissible, EnumSpec};
use forge_core::term::{Equation, Term, VarId};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// All operator-labeled trees with `leaves` leaves, every leaf variable 0.
pub fn trees(leaves: usize) -> Vec<Term> {
    if leaves == 1 {
        return vec![Term::var(0)];
    }
    let mut out = Vec::new();
    for left in 1..leaves {
        for a in trees(left) {
            for b in trees(leaves - left) {
                out.push(Term::meet(a.clone(), b.clone()));
                out.push(Term::join(a.clone(), b.clone()));
            }
        }
    }
    out
}

fn relabel(t: &Term, labels: &[u32], next: &mut usize) -> Term {
    match t {
        Term::Var(_) => {
            let v = Term::var(labels[*next]);
            *next += 1;
            v
        }
        Term::App(op, a, b) => {
            let a = relabel(a, labels, next);
            let b = relabel(b, labels, next);
            Term::app(*op, a, b)
        }
    }
}

/// Keeps variable 0 and renumbers the others from 1 by first occurrence.
fn normalize(e: &Equation) -> String {
    let mut map = std::collections::BTreeMap::new();
    for v in e.lhs.leaves() {
        if v != VarId(0) {
            let next = map.len() as u32 + 1;
            map.entry(v).or_insert(VarId(next));
        }
    }
    map.insert(VarId(0), VarId(0));
    e.rename(&mut |v| map[&v]).to_string()
}

pub fn enumeration_oracle(lo: usize, hi: usize, max_vars: usize, require_x: bool) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for n in lo..=hi {
        let shapes = trees(n);
        let alphabet = n as u32 + 1;
        let mut labels = vec![0u32; n];
        loop {
            let x_count = labels.iter().filter(|&&l| l == 0).count();
            let mut others: Vec<u32> = labels.iter().copied().filter(|&l| l != 0).collect();
            let total = others.len();
            others.sort();
            others.dedup();
            let ok = labels[0] != 0
                && labels[n - 1] != 0
                && others.len() == total
                && (!require_x || x_count > 0)
                && others.len() + usize::from(x_count > 0) <= max_vars;
            if ok {
                for s in &shapes {
                    let alpha = relabel(s, &labels, &mut 0);
                    out.insert(normalize(&Equation::new(alpha, Term::var(0))));
                }
            }
            let mut i = n;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                labels[i] += 1;
                if labels[i] < alphabet {
                    break;
                }
                labels[i] = 0;
            }
            if labels.iter().all(|&l| l == 0) {
                break;
            }
        }
    }
    out
}

pub fn random_term(rng: &mut StdRng, leaves: usize, vars: u32) -> Term {
    if leaves == 1 {
        return Term::var(rng.gen_range(0..vars));
    }
    let left = rng.gen_range(1..leaves);
    let a = random_term(rng, left, vars);
    let b = random_term(rng, leaves - left, vars);
    if rng.gen_bool(0.5) {
        Term::meet(a, b)
    } else {
        Term::join(a, b)
    }
}

pub fn random_equation(rng: &mut StdRng) -> Equation {
    let (l, r) = (rng.gen_range(1..=6), rng.gen_range(1..=3));
    let lhs = random_term(rng, l, 3);
    let rhs = random_term(rng, r, 3);
    Equation::new(lhs, rhs)
}

/// Every algebra of size 2, one per pair of tables.
pub fn all_size_two() -> Vec<FiniteAlgebra> {
    (0u32..256)
        .map(|bits| {
            let cell = |i: u32| ((bits >> i) & 1) as usize;
            let meet = (0..4).map(cell).collect();
            let join = (4..8).map(cell).collect();
            FiniteAlgebra::new(2, meet, join).unwrap()
        })
        .collect()
}

pub fn classes(algs: impl IntoIterator<Item = FiniteAlgebra>) -> BTreeSet<FiniteAlgebra> {
    algs.into_iter().map(|a| a.iso_canonical()).collect()
}

/// Compares the enumerator with [`enumeration_oracle`] on every spec with at most
/// 5 leaves and 4 variables: emitted set, absence of duplicates, count and
/// admissibility.
pub fn check_enumerator() -> Result<usize, String> {
    let mut specs = 0;
    for require_x in [true, false] {
        for max_vars in 1..=4 {
            for lo in 2..=5 {
                for hi in lo..=5 {
                    let mut spec = EnumSpec::new(lo..=hi, max_vars);
                    spec.require_x = require_x;
                    let label = format!("leaves {lo}..{hi}, max_vars {max_vars}, require_x {require_x}");
                    let expected = enumeration_oracle(lo, hi, max_vars, require_x);
                    let emitted: Vec<Equation> = enumerate_candidates(&spec).collect();
                    let texts: BTreeSet<String> = emitted.iter().map(|e| e.to_string()).collect();
                    if texts.len() != emitted.len() {
                        return Err(format!("duplicates for {label}"));
                    }
                    if texts != expected {
                        return Err(format!("emitted set differs for {label}"));
                    }
                    let counted = count_candidates(&spec, 10_000_000).map_err(|e| e.to_string())?;
                    if counted != expected.len() as u64 {
                        return Err(format!("count {counted} != {} for {label}", expected.len()));
                    }
                    if !emitted.iter().all(|e| is_admissible(e, &spec)) {
                        return Err(format!("inadmissible candidate for {label}"));
                    }
                    specs += 1;
                }
            }
        }
    }
    Ok(specs)
}

/// Runs the model finder and brute force over all 256 size-2 tables on `count`
/// random equations. Returns how many of them have a nonlattice model.
pub fn check_size_two(seed: u64, count: usize) -> Result<usize, String> {
    let tables = all_size_two();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut with_models = 0;
    for _ in 0..count {
        let e = random_equation(&mut rng);
        let brute = classes(tables.iter().filter(|a| holds(a, &e) && !is_lattice(a)).cloned());
        let (found, _) = find_models(std::slice::from_ref(&e), 2, Requirement::NonLattice, u64::MAX)
            .map_err(|err| format!("{e}: {err}"))?;
        if !found.iter().all(|a| holds(a, &e) && !is_lattice(a)) {
            return Err(format!("{e}: search returned a non-model"));
        }
        if classes(found) != brute {
            return Err(format!("{e}: model sets differ"));
        }
        let first = find_nonlattice_model(std::slice::from_ref(&e), 2).map_err(|err| err.to_string())?;
        // the one-element algebra is a lattice, so size 2 decides existence
        if first.is_some() == brute.is_empty() {
            return Err(format!("{e}: existence differs"));
        }
        with_models += usize::from(!brute.is_empty());
    }
    Ok(with_models)
}
