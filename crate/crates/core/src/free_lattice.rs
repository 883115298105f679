//! Word problem for free lattices.
//!
//! `leq(a, b)` decides `a <= b` in the free lattice by Whitman's recursion. Both
//! terms are first interned into a small DAG so that the memo table can be keyed
//! by node ids instead of hashing whole subterms.

use std::collections::HashMap;

use crate::term::{Equation, Op, Term, VarId};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Var(VarId),
    App(Op, u32, u32),
}

struct Dag {
    nodes: Vec<Node>,
    ids: HashMap<Node, u32>,
}

impl Dag {
    fn new() -> Self {
        Dag {
            nodes: Vec::new(),
            ids: HashMap::new(),
        }
    }

    fn intern(&mut self, t: &Term) -> u32 {
        let node = match t {
            Term::Var(v) => Node::Var(*v),
            Term::App(op, l, r) => {
                let l = self.intern(l);
                let r = self.intern(r);
                Node::App(*op, l, r)
            }
        };
        if let Some(&id) = self.ids.get(&node) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(node);
        self.ids.insert(node, id);
        id
    }
}

struct Whitman<'a> {
    nodes: &'a [Node],
    memo: Option<HashMap<(u32, u32), bool>>,
}

impl Whitman<'_> {
    fn leq(&mut self, a: u32, b: u32) -> bool {
        if a == b {
            return true;
        }
        if let Some(&hit) = self.memo.as_ref().and_then(|m| m.get(&(a, b))) {
            return hit;
        }
        let result = self.decide(a, b);
        if let Some(m) = self.memo.as_mut() {
            m.insert((a, b), result);
        }
        result
    }

    fn decide(&mut self, a: u32, b: u32) -> bool {
        let na = self.nodes[a as usize];
        let nb = self.nodes[b as usize];
        match (na, nb) {
            (Node::App(Op::Join, a1, a2), _) => self.leq(a1, b) && self.leq(a2, b),
            (_, Node::App(Op::Meet, b1, b2)) => self.leq(a, b1) && self.leq(a, b2),
            (Node::Var(p), Node::Var(q)) => p == q,
            (Node::Var(_), Node::App(Op::Join, b1, b2)) => self.leq(a, b1) || self.leq(a, b2),
            (Node::App(Op::Meet, a1, a2), Node::Var(_)) => self.leq(a1, b) || self.leq(a2, b),
            (Node::App(Op::Meet, a1, a2), Node::App(Op::Join, b1, b2)) => {
                self.leq(a1, b) || self.leq(a2, b) || self.leq(a, b1) || self.leq(a, b2)
            }
        }
    }
}

fn run(a: &Term, b: &Term, memoize: bool) -> bool {
    let mut dag = Dag::new();
    let ia = dag.intern(a);
    let ib = dag.intern(b);
    let mut w = Whitman {
        nodes: &dag.nodes,
        memo: memoize.then(HashMap::new),
    };
    w.leq(ia, ib)
}

/// `a <= b` in every lattice.
pub fn leq(a: &Term, b: &Term) -> bool {
    run(a, b, true)
}

/// Same decision as [`leq`] without the memo table. Exponential; for small terms only.
pub fn leq_unmemoized(a: &Term, b: &Term) -> bool {
    run(a, b, false)
}

/// The equation holds in every lattice.
pub fn is_identity(e: &Equation) -> bool {
    leq(&e.lhs, &e.rhs) && leq(&e.rhs, &e.lhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{known, parse_equation, parse_term};

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn order_basics() {
        assert!(leq(&t("(x*y)"), &t("x")));
        assert!(leq(&t("x"), &t("(x+y)")));
        assert!(!leq(&t("x"), &t("(x*y)")));
        assert!(!leq(&t("(x+y)"), &t("x")));
        assert!(leq(&t("(x*y)"), &t("(x+z)")));
    }

    #[test]
    fn whitman_meet_below_join() {
        // (x+y)*(x+z) <= x+(y*z) fails: the distributive law
        assert!(!leq(&t("((x+y)*(x+z))"), &t("(x+(y*z))")));
        assert!(leq(&t("(x+(y*z))"), &t("((x+y)*(x+z))")));
    }

    #[test]
    fn known_identities() {
        for e in [known::a1(), known::a2()]
            .into_iter()
            .chain(known::mckenzie_basis())
            .chain(known::lattice_axioms())
        {
            assert!(is_identity(&e), "{e}");
        }
    }

    #[test]
    fn non_identities() {
        for s in ["(x+y) = x", "(x*y) = x", "x = y", "(x*(y+z)) = ((x*y)+(x*z))"] {
            assert!(!is_identity(&parse_equation(s).unwrap()), "{s}");
        }
    }

    #[test]
    fn memo_is_transparent_on_fixtures() {
        let a1 = known::a1();
        assert_eq!(leq(&a1.lhs, &a1.rhs), leq_unmemoized(&a1.lhs, &a1.rhs));
        assert_eq!(leq(&a1.rhs, &a1.lhs), leq_unmemoized(&a1.rhs, &a1.lhs));
    }
}
