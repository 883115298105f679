//! Lattice terms and equations.
//!
//! A [`Term`] is a finite binary tree whose internal nodes are meet or join
//! and whose leaves are variables. Terms are immutable and share subtrees via
//! [`Arc`], so cloning is cheap and values can cross thread boundaries.

mod parse;
mod subst;

pub mod known;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use parse::{parse_equation, parse_equations, parse_term, ParseError};
pub use subst::{match_equation, match_term, unify, Substitution};

const DISPLAY_NAMES: [&str; 8] = ["x", "y", "z", "u", "v", "w", "s", "t"];

/// A variable, identified by a 0-based index.
///
/// Indices 0..8 display as `x y z u v w s t`; larger ones as `x<k>`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match DISPLAY_NAMES.get(self.index()) {
            Some(name) => f.write_str(name),
            None => write!(f, "x{}", self.0),
        }
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Op {
    Meet,
    Join,
}

impl Op {
    pub fn symbol(self) -> char {
        match self {
            Op::Meet => '*',
            Op::Join => '+',
        }
    }

    pub fn dual(self) -> Op {
        match self {
            Op::Meet => Op::Join,
            Op::Join => Op::Meet,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(VarId),
    App(Op, Arc<Term>, Arc<Term>),
}

/// One step of a [`Position`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Dir {
    Left,
    Right,
}

/// Path from the root of a term to one of its nodes. The empty path is the root.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Position(pub Vec<Dir>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, dir: Dir) -> Self {
        let mut path = self.0.clone();
        path.push(dir);
        Position(path)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        for d in &self.0 {
            f.write_str(match d {
                Dir::Left => "L",
                Dir::Right => "R",
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("position {position} does not address a node of the term")]
pub struct PositionError {
    pub position: Position,
}

impl Term {
    pub fn var(index: u32) -> Term {
        Term::Var(VarId(index))
    }

    pub fn app(op: Op, left: Term, right: Term) -> Term {
        Term::App(op, Arc::new(left), Arc::new(right))
    }

    pub fn meet(left: Term, right: Term) -> Term {
        Term::app(Op::Meet, left, right)
    }

    pub fn join(left: Term, right: Term) -> Term {
        Term::app(Op::Join, left, right)
    }

    pub fn as_var(&self) -> Option<VarId> {
        match self {
            Term::Var(v) => Some(*v),
            Term::App(..) => None,
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    /// Variable occurrences plus operator occurrences, `2 * leaves - 1`.
    pub fn symbol_count(&self) -> usize {
        2 * self.leaf_count() - 1
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Leaves from left to right.
    pub fn leaves(&self) -> Vec<VarId> {
        let mut out = Vec::with_capacity(8);
        self.visit_leaves(&mut |v| out.push(v));
        out
    }

    pub fn visit_leaves(&self, f: &mut impl FnMut(VarId)) {
        match self {
            Term::Var(v) => f(*v),
            Term::App(_, l, r) => {
                l.visit_leaves(f);
                r.visit_leaves(f);
            }
        }
    }

    pub fn leftmost_leaf(&self) -> VarId {
        match self {
            Term::Var(v) => *v,
            Term::App(_, l, _) => l.leftmost_leaf(),
        }
    }

    pub fn rightmost_leaf(&self) -> VarId {
        match self {
            Term::Var(v) => *v,
            Term::App(_, _, r) => r.rightmost_leaf(),
        }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.visit_leaves(&mut |v| {
            out.insert(v);
        });
        out
    }

    pub fn max_var(&self) -> Option<VarId> {
        let mut max = None;
        self.visit_leaves(&mut |v| max = Some(max.map_or(v, |m: VarId| m.max(v))));
        max
    }

    pub fn occurs(&self, var: VarId) -> bool {
        match self {
            Term::Var(v) => *v == var,
            Term::App(_, l, r) => l.occurs(var) || r.occurs(var),
        }
    }

    /// Replaces every variable `v` by `f(v)`.
    pub fn rename(&self, f: &mut impl FnMut(VarId) -> VarId) -> Term {
        match self {
            Term::Var(v) => Term::Var(f(*v)),
            Term::App(op, l, r) => Term::App(*op, Arc::new(l.rename(f)), Arc::new(r.rename(f))),
        }
    }

    /// Swaps meet and join throughout.
    pub fn dual(&self) -> Term {
        match self {
            Term::Var(_) => self.clone(),
            Term::App(op, l, r) => Term::App(op.dual(), Arc::new(l.dual()), Arc::new(r.dual())),
        }
    }

    pub fn subterm_at(&self, pos: &Position) -> Result<&Term, PositionError> {
        let mut cur = self;
        for d in &pos.0 {
            cur = match (cur, d) {
                (Term::App(_, l, _), Dir::Left) => l,
                (Term::App(_, _, r), Dir::Right) => r,
                (Term::Var(_), _) => return Err(PositionError { position: pos.clone() }),
            };
        }
        Ok(cur)
    }

    pub fn replace_at(&self, pos: &Position, replacement: Term) -> Result<Term, PositionError> {
        self.replace_path(&pos.0, replacement)
            .ok_or_else(|| PositionError { position: pos.clone() })
    }

    fn replace_path(&self, path: &[Dir], replacement: Term) -> Option<Term> {
        let Some((first, rest)) = path.split_first() else {
            return Some(replacement);
        };
        match self {
            Term::Var(_) => None,
            Term::App(op, l, r) => Some(match first {
                Dir::Left => Term::App(*op, Arc::new(l.replace_path(rest, replacement)?), r.clone()),
                Dir::Right => Term::App(*op, l.clone(), Arc::new(r.replace_path(rest, replacement)?)),
            }),
        }
    }

    /// Every position of the term in preorder (root first, then left subtree, then right).
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_positions(&mut path, &mut out);
        out
    }

    fn collect_positions(&self, path: &mut Vec<Dir>, out: &mut Vec<Position>) {
        out.push(Position(path.clone()));
        if let Term::App(_, l, r) = self {
            path.push(Dir::Left);
            l.collect_positions(path, out);
            path.pop();
            path.push(Dir::Right);
            r.collect_positions(path, out);
            path.pop();
        }
    }

    /// Subterms paired with their positions, in preorder.
    pub fn subterms(&self) -> Vec<(Position, &Term)> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_subterms(&mut path, &mut out);
        out
    }

    fn collect_subterms<'a>(&'a self, path: &mut Vec<Dir>, out: &mut Vec<(Position, &'a Term)>) {
        out.push((Position(path.clone()), self));
        if let Term::App(_, l, r) = self {
            path.push(Dir::Left);
            l.collect_subterms(path, out);
            path.pop();
            path.push(Dir::Right);
            r.collect_subterms(path, out);
            path.pop();
        }
    }

    fn write_to(&self, out: &mut String) {
        match self {
            Term::Var(v) => {
                use fmt::Write;
                let _ = write!(out, "{v}");
            }
            Term::App(op, l, r) => {
                out.push('(');
                l.write_to(out);
                out.push(op.symbol());
                r.write_to(out);
                out.push(')');
            }
        }
    }
}

/// Canonical fully parenthesized text of a term.
pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    t.write_to(&mut out);
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Equation { lhs, rhs }
    }

    /// Symbols on both sides plus one for the equality sign.
    pub fn length(&self) -> usize {
        self.lhs.symbol_count() + self.rhs.symbol_count() + 1
    }

    /// Symbols on both sides, without the equality sign.
    pub fn weight(&self) -> usize {
        self.lhs.symbol_count() + self.rhs.symbol_count()
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut vs = self.lhs.vars();
        vs.extend(self.rhs.vars());
        vs
    }

    pub fn var_count(&self) -> usize {
        self.vars().len()
    }

    pub fn max_var(&self) -> Option<VarId> {
        match (self.lhs.max_var(), self.rhs.max_var()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn rename(&self, f: &mut impl FnMut(VarId) -> VarId) -> Equation {
        let lhs = self.lhs.rename(f);
        let rhs = self.rhs.rename(f);
        Equation { lhs, rhs }
    }

    pub fn flip(&self) -> Equation {
        Equation::new(self.rhs.clone(), self.lhs.clone())
    }

    pub fn dual(&self) -> Equation {
        Equation::new(self.lhs.dual(), self.rhs.dual())
    }

    /// Renumbers variables by first occurrence in a preorder walk of lhs then rhs.
    pub fn canonical(&self) -> Equation {
        let mut seen: Vec<(VarId, VarId)> = Vec::with_capacity(8);
        let mut f = |v: VarId| {
            if let Some(&(_, to)) = seen.iter().find(|(from, _)| *from == v) {
                to
            } else {
                let to = VarId(seen.len() as u32);
                seen.push((v, to));
                to
            }
        };
        self.rename(&mut f)
    }

    pub fn is_variant_of(&self, other: &Equation) -> bool {
        variant_eq(self, other)
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

impl fmt::Debug for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn canonicalize_vars(e: &Equation) -> Equation {
    e.canonical()
}

pub fn variant_eq(a: &Equation, b: &Equation) -> bool {
    a.weight() == b.weight() && a.canonical() == b.canonical()
}

/// Returns `e1` unchanged and a copy of `e2` whose variables are shifted past every
/// variable of `e1`.
pub fn rename_apart(e1: &Equation, e2: &Equation) -> (Equation, Equation) {
    let offset = e1.max_var().map_or(0, |v| v.0 + 1);
    let shifted = e2.rename(&mut |v| VarId(v.0 + offset));
    (e1.clone(), shifted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn eq(s: &str) -> Equation {
        parse_equation(s).unwrap()
    }

    #[test]
    fn display_names() {
        let names: Vec<String> = (0..10).map(|i| VarId(i).to_string()).collect();
        assert_eq!(names, ["x", "y", "z", "u", "v", "w", "s", "t", "x8", "x9"]);
    }

    #[test]
    fn symbol_count_is_two_leaves_minus_one() {
        let a = t("((y+x)*(z*(x+u)))");
        assert_eq!(a.leaf_count(), 5);
        assert_eq!(a.symbol_count(), 9);
    }

    #[test]
    fn subterm_paths() {
        let a = t("((y+x)*x)");
        assert_eq!(a.subterm_at(&Position::root()).unwrap(), &a);
        let p = Position(vec![Dir::Left, Dir::Right]);
        assert_eq!(a.subterm_at(&p).unwrap(), &Term::var(0));
        let bad = Position(vec![Dir::Right, Dir::Left]);
        assert!(a.subterm_at(&bad).is_err());
    }

    #[test]
    fn replace_paths() {
        let a = t("(y*x)");
        assert_eq!(a.replace_at(&Position(vec![Dir::Left]), t("z")).unwrap(), t("(z*x)"));
        assert_eq!(t("x").replace_at(&Position::root(), t("(u+v)")).unwrap(), t("(u+v)"));
        assert_eq!(
            t("((y+x)*x)").replace_at(&Position(vec![Dir::Left]), t("x")).unwrap(),
            t("(x*x)")
        );
        assert!(t("x").replace_at(&Position(vec![Dir::Left]), t("y")).is_err());
    }

    #[test]
    fn positions_are_preorder() {
        let ps = t("((y+x)*x)").positions();
        let rendered: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
        assert_eq!(rendered, ["root", "L", "LL", "LR", "R"]);
    }

    #[test]
    fn rename_apart_is_disjoint() {
        let a = eq("(x+y) = x");
        let b = eq("(x*z) = x");
        let (a2, b2) = rename_apart(&a, &b);
        assert_eq!(a2, a);
        assert!(a2.vars().is_disjoint(&b2.vars()));
        assert!(variant_eq(&b, &b2));
        assert_eq!(b2.length(), b.length());
        assert_eq!(b2.var_count(), b.var_count());

        let (c1, c2) = rename_apart(&a, &a);
        assert!(c1.vars().is_disjoint(&c2.vars()));
    }

    #[test]
    fn canonical_first_occurrence() {
        assert_eq!(eq("(t*s) = t").canonical(), eq("(x*y) = x"));
        let c = eq("((w+v)*u) = v").canonical();
        assert_eq!(c.canonical(), c);
    }

    #[test]
    fn variants() {
        assert!(variant_eq(&eq("(x+(y*(x*z))) = x"), &eq("(u+(s*(u*t))) = u")));
        assert!(!variant_eq(&eq("(x+y) = x"), &eq("(x*y) = x")));
        // not a bijective renaming
        assert!(!variant_eq(&eq("(x+y) = x"), &eq("(x+x) = x")));
    }

    #[test]
    fn trivial_length() {
        let e = eq("x = x");
        assert_eq!(e.length(), 3);
        assert_eq!(e.var_count(), 1);
    }

    #[test]
    fn leftmost_and_rightmost() {
        let a = t("((y+x)*(z*(x+u)))");
        assert_eq!(a.leftmost_leaf(), VarId(1));
        assert_eq!(a.rightmost_leaf(), VarId(3));
    }
}
