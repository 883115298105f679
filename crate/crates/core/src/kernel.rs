//! Proof checker for equational derivations.
//!
//! A step justified by `i -> j` rewrites the left-hand side of equation `j` with
//! equation `i` used left to right. After renaming the two apart, a subterm `s` of
//! `u_j` is unified with `u_i` by an mgu `σ`; the conclusion is `σ(u_j)` with that
//! occurrence replaced by `σ(v_i)`, equated to `σ(v_j)`. Steps are accepted up to
//! variable renaming, and failing that, when the stated equation is an instance of
//! a generated one.
//!
//! Printed proofs treat equality as symmetric: a conclusion may be written with
//! its sides swapped, and a step may rewrite into the right-hand side of `j` or use
//! `i` right to left. Those routes are tried only after the strict one fails, and
//! the verdict records which route was taken.

use std::collections::HashSet;
use std::fmt;

use crate::term::{match_equation, parse_equation, rename_apart, unify, Equation, ParseError, Position};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Justification {
    Axiom,
    Para { from: u32, into: u32 },
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Axiom => f.write_str("axiom"),
            Justification::Para { from, into } => write!(f, "{from} -> {into}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofStep {
    pub id: u32,
    pub equation: Equation,
    pub just: Justification,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Derivation {
    pub steps: Vec<ProofStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProofParseError {
    #[error("line {line}: expected `<id> | <equation> | <justification>`")]
    Shape { line: usize },
    #[error("line {line}: bad step id {text:?}")]
    BadId { line: usize, text: String },
    #[error("line {line}")]
    Equation {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: bad justification {text:?}")]
    BadJustification { line: usize, text: String },
}

impl Derivation {
    pub fn new(steps: Vec<ProofStep>) -> Self {
        Derivation { steps }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn step(&self, id: u32) -> Option<&ProofStep> {
        self.steps.iter().find(|s| s.id == id)
    }

    /// Parses the proof file format: `<id> | <lhs> = <rhs> | axiom` or `... | <i> -> <j>`.
    pub fn parse(text: &str) -> Result<Derivation, ProofParseError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('|').map(str::trim).collect();
            let [id, eq, just] = fields[..] else {
                return Err(ProofParseError::Shape { line });
            };
            let id = id.parse::<u32>().map_err(|_| ProofParseError::BadId {
                line,
                text: id.to_string(),
            })?;
            let equation = parse_equation(eq).map_err(|source| ProofParseError::Equation { line, source })?;
            let just = parse_justification(just).ok_or_else(|| ProofParseError::BadJustification {
                line,
                text: just.to_string(),
            })?;
            steps.push(ProofStep { id, equation, just });
        }
        Ok(Derivation { steps })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&format!("{} | {} | {}\n", s.id, s.equation, s.just));
        }
        out
    }
}

fn parse_justification(text: &str) -> Option<Justification> {
    if text == "axiom" {
        return Some(Justification::Axiom);
    }
    let (a, b) = text.split_once("->")?;
    Some(Justification::Para {
        from: a.trim().parse().ok()?,
        into: b.trim().parse().ok()?,
    })
}

/// A paramodulant together with the position of `into.lhs` it was rewritten at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Paramodulant {
    pub equation: Equation,
    pub position: Position,
}

/// All paramodulants from `from` into the left-hand side of `into`, canonicalized,
/// without repeated variants, ordered by position in preorder.
pub fn paramodulants(from: &Equation, into: &Equation) -> Vec<Paramodulant> {
    let (into, from) = rename_apart(into, from);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (pos, sub) in into.lhs.subterms() {
        let Some(sigma) = unify(&from.lhs, sub) else {
            continue;
        };
        let rewritten = sigma
            .apply(&into.lhs)
            .replace_at(&pos, sigma.apply(&from.rhs))
            .expect("position survives substitution");
        let equation = Equation::new(rewritten, sigma.apply(&into.rhs)).canonical();
        if seen.insert(equation.clone()) {
            out.push(Paramodulant {
                equation,
                position: pos,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FailReason {
    /// Step id not greater than the previous one.
    IdOrder {
        previous: u32,
    },
    /// A cited id is missing or not earlier than the citing step.
    BadReference {
        cited: u32,
    },
    NotAnAxiom,
    NoUnifiablePosition,
    NoMatch {
        generated: usize,
    },
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailReason::IdOrder { previous } => write!(f, "id does not follow {previous}"),
            FailReason::BadReference { cited } => write!(f, "bad reference to {cited}"),
            FailReason::NotAnAxiom => f.write_str("not a variant of any axiom"),
            FailReason::NoUnifiablePosition => f.write_str("no position unifies"),
            FailReason::NoMatch { generated } => {
                write!(f, "none of {generated} generated equations matches")
            }
        }
    }
}

/// How a paramodulation step was matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Route {
    /// The cited `i` was used right to left.
    pub from_reversed: bool,
    /// The step rewrote into the right-hand side of `j`.
    pub into_rhs: bool,
    /// The conclusion is written with its sides swapped.
    pub stated_flipped: bool,
}

impl Route {
    pub const STRICT: Route = Route {
        from_reversed: false,
        into_rhs: false,
        stated_flipped: false,
    };

    /// Every route, strict first, then by number of relaxations.
    pub const ALL: [Route; 8] = {
        const fn r(from_reversed: bool, into_rhs: bool, stated_flipped: bool) -> Route {
            Route {
                from_reversed,
                into_rhs,
                stated_flipped,
            }
        }
        [
            r(false, false, false),
            r(false, false, true),
            r(false, true, false),
            r(true, false, false),
            r(false, true, true),
            r(true, false, true),
            r(true, true, false),
            r(true, true, true),
        ]
    };

    pub fn is_strict(self) -> bool {
        self == Route::STRICT
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.from_reversed {
            parts.push("right-to-left");
        }
        if self.into_rhs {
            parts.push("into rhs");
        }
        if self.stated_flipped {
            parts.push("flipped");
        }
        if parts.is_empty() {
            parts.push("strict");
        }
        f.write_str(&parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ok {
        /// First position (preorder) producing the step, for paramodulation steps.
        witness: Option<Position>,
        /// The stated equation is a proper instance of the generated one.
        instance: bool,
        route: Route,
    },
    Fail(FailReason),
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Ok {
                witness: Some(p),
                instance,
                route,
            } => {
                write!(f, "ok at {p}")?;
                if !route.is_strict() {
                    write!(f, " ({route})")?;
                }
                if *instance {
                    f.write_str(" (instance)")?;
                }
                Ok(())
            }
            Verdict::Ok { witness: None, .. } => f.write_str("ok"),
            Verdict::Fail(r) => write!(f, "fail: {r}"),
        }
    }
}

/// Checks one step against the steps before it.
pub fn check_step(prefix: &[ProofStep], axioms: &[Equation], step: &ProofStep) -> Verdict {
    if let Some(prev) = prefix.last() {
        if step.id <= prev.id {
            return Verdict::Fail(FailReason::IdOrder { previous: prev.id });
        }
    }
    match step.just {
        Justification::Axiom => {
            let canon = step.equation.canonical();
            if axioms.iter().any(|a| a.canonical() == canon) {
                Verdict::Ok {
                    witness: None,
                    instance: false,
                    route: Route::STRICT,
                }
            } else {
                Verdict::Fail(FailReason::NotAnAxiom)
            }
        }
        Justification::Para { from, into } => {
            let lookup = |id: u32| {
                prefix
                    .iter()
                    .find(|s| s.id == id && id < step.id)
                    .ok_or(FailReason::BadReference { cited: id })
            };
            let (from_step, into_step) = match (lookup(from), lookup(into)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(r), _) | (_, Err(r)) => return Verdict::Fail(r),
            };
            let routes: Vec<(Route, Vec<Paramodulant>)> = Route::ALL
                .iter()
                .filter(|r| !r.stated_flipped)
                .map(|&r| {
                    let from = if r.from_reversed {
                        from_step.equation.flip()
                    } else {
                        from_step.equation.clone()
                    };
                    let into = if r.into_rhs {
                        into_step.equation.flip()
                    } else {
                        into_step.equation.clone()
                    };
                    (r, paramodulants(&from, &into))
                })
                .collect();
            let generated: usize = routes.iter().map(|(_, g)| g.len()).sum();
            if generated == 0 {
                return Verdict::Fail(FailReason::NoUnifiablePosition);
            }
            let stated = [step.equation.canonical(), step.equation.flip().canonical()];
            for instance in [false, true] {
                for route in Route::ALL {
                    let base = Route {
                        stated_flipped: false,
                        ..route
                    };
                    let (_, candidates) = routes.iter().find(|(r, _)| *r == base).unwrap();
                    let target = &stated[route.stated_flipped as usize];
                    let hit = candidates.iter().find(|p| {
                        if instance {
                            match_equation(&p.equation, target).is_some()
                        } else {
                            p.equation == *target
                        }
                    });
                    if let Some(p) = hit {
                        return Verdict::Ok {
                            witness: Some(p.position.clone()),
                            instance,
                            route,
                        };
                    }
                }
            }
            Verdict::Fail(FailReason::NoMatch { generated })
        }
    }
}

/// Verdicts for every step, in order.
pub fn check_derivation(d: &Derivation, axioms: &[Equation]) -> Vec<Verdict> {
    (0..d.steps.len())
        .map(|i| check_step(&d.steps[..i], axioms, &d.steps[i]))
        .collect()
}

pub fn all_ok(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(Verdict::is_ok)
}

/// For each target, the id of the first step whose equation is a variant of it.
pub fn locate_targets(d: &Derivation, targets: &[Equation]) -> Vec<Option<u32>> {
    targets
        .iter()
        .map(|t| {
            let canon = t.canonical();
            d.steps.iter().find(|s| s.equation.canonical() == canon).map(|s| s.id)
        })
        .collect()
}

/// Every target is a variant of some step.
pub fn check_targets(d: &Derivation, targets: &[Equation]) -> bool {
    locate_targets(d, targets).iter().all(Option::is_some)
}
