use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{Equation, Term, VarId};

/// Finite map from variables to terms, applied simultaneously.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Substitution {
    bindings: BTreeMap<VarId, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, Term)>) -> Self {
        Substitution {
            bindings: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, v: VarId) -> Option<&Term> {
        self.bindings.get(&v)
    }

    pub fn insert(&mut self, v: VarId, t: Term) {
        self.bindings.insert(v, t);
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, &Term)> {
        self.bindings.iter()
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        self.apply_inner(t).unwrap_or_else(|| t.clone())
    }

    // None means "unchanged", which lets untouched subtrees keep their Arc.
    fn apply_inner(&self, t: &Term) -> Option<Term> {
        match t {
            Term::Var(v) => self.bindings.get(v).cloned(),
            Term::App(op, l, r) => {
                let nl = self.apply_inner(l);
                let nr = self.apply_inner(r);
                if nl.is_none() && nr.is_none() {
                    return None;
                }
                Some(Term::App(
                    *op,
                    nl.map_or_else(|| l.clone(), Arc::new),
                    nr.map_or_else(|| r.clone(), Arc::new),
                ))
            }
        }
    }

    pub fn apply_equation(&self, e: &Equation) -> Equation {
        Equation::new(self.apply(&e.lhs), self.apply(&e.rhs))
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->{t}")?;
        }
        f.write_str("}")
    }
}

/// Triangular bindings indexed by variable number, used while unifying.
struct Bindings {
    slots: Vec<Option<Term>>,
}

impl Bindings {
    fn with_capacity(n: usize) -> Self {
        Bindings { slots: vec![None; n] }
    }

    fn get(&self, v: VarId) -> Option<&Term> {
        self.slots.get(v.index()).and_then(|s| s.as_ref())
    }

    fn bind(&mut self, v: VarId, t: Term) {
        if self.slots.len() <= v.index() {
            self.slots.resize(v.index() + 1, None);
        }
        self.slots[v.index()] = Some(t);
    }

    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.get(*v) {
                Some(b) => t = b,
                None => break,
            }
        }
        t
    }

    fn occurs(&self, v: VarId, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => *w == v,
            Term::App(_, l, r) => self.occurs(v, l) || self.occurs(v, r),
        }
    }

    fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), _) => {
                if self.occurs(*x, &b) {
                    return false;
                }
                self.bind(*x, b);
                true
            }
            (_, Term::Var(y)) => {
                if self.occurs(*y, &a) {
                    return false;
                }
                self.bind(*y, a);
                true
            }
            (Term::App(o1, l1, r1), Term::App(o2, l2, r2)) => o1 == o2 && self.unify(l1, l2) && self.unify(r1, r2),
        }
    }

    fn resolve(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => match self.get(*v) {
                Some(b) => self.resolve(b),
                None => t.clone(),
            },
            Term::App(op, l, r) => Term::App(*op, Arc::new(self.resolve(l)), Arc::new(self.resolve(r))),
        }
    }

    fn into_substitution(self) -> Substitution {
        let mut out = Substitution::new();
        for (i, slot) in self.slots.iter().enumerate() {
            if let Some(t) = slot {
                out.insert(VarId(i as u32), self.resolve(t));
            }
        }
        out
    }
}

fn capacity_for(a: &Term, b: &Term) -> usize {
    let m = match (a.max_var(), b.max_var()) {
        (Some(x), Some(y)) => x.max(y).index(),
        (x, y) => x.or(y).map_or(0, |v| v.index()),
    };
    m + 1
}

/// Syntactic most general unifier with occurs check. The result is idempotent.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    let mut bs = Bindings::with_capacity(capacity_for(a, b));
    if bs.unify(a, b) {
        Some(bs.into_substitution())
    } else {
        None
    }
}

/// One-way matching: a substitution `σ` over the variables of `pattern` with
/// `σ(pattern) == target`. Variables of `target` are treated as constants.
pub fn match_term(pattern: &Term, target: &Term) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    if match_into(pattern, target, &mut sigma) {
        Some(sigma)
    } else {
        None
    }
}

/// Matches both sides of `pattern` onto `target` under a single substitution.
pub fn match_equation(pattern: &Equation, target: &Equation) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    if match_into(&pattern.lhs, &target.lhs, &mut sigma) && match_into(&pattern.rhs, &target.rhs, &mut sigma) {
        Some(sigma)
    } else {
        None
    }
}

fn match_into(pattern: &Term, target: &Term, sigma: &mut Substitution) -> bool {
    match pattern {
        Term::Var(v) => match sigma.get(*v) {
            Some(bound) => bound == target,
            None => {
                sigma.insert(*v, target.clone());
                true
            }
        },
        Term::App(op, l, r) => match target {
            Term::App(op2, l2, r2) => op == op2 && match_into(l, l2, sigma) && match_into(r, r2, sigma),
            Term::Var(_) => false,
        },
    }
}
