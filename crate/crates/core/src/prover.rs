//! Bounded given-clause paramodulation prover.
//!
//! The set of support is a priority queue ordered by equation weight, with a large
//! bonus for equations that are variants of a supplied hint. Each selected
//! equation is paramodulated with every previously selected one in both
//! directions. Generated equations heavier than the weight cap, or variants of an
//! equation already kept, are dropped. Every returned derivation is re-checked by
//! the proof kernel.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::time::{Duration, Instant};

use crate::exec::Execution;
use crate::kernel::{all_ok, check_derivation, check_targets, Derivation, Justification, Paramodulant, ProofStep};
use crate::term::{known, rename_apart, unify, Equation};

const HINT_BONUS: i64 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ProverLimits {
    pub max_generated: u64,
    /// Largest number of symbols (both sides) a kept equation may have.
    pub max_weight: usize,
    pub max_seconds: f64,
}

impl Default for ProverLimits {
    fn default() -> Self {
        ProverLimits {
            max_generated: 200_000,
            max_weight: 60,
            max_seconds: 10.0,
        }
    }
}

impl ProverLimits {
    pub fn validate(&self) -> Result<(), ProverError> {
        if self.max_generated == 0 || self.max_weight == 0 || self.max_seconds.is_nan() || self.max_seconds <= 0.0 {
            return Err(ProverError::InvalidLimits);
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ProverConfig {
    pub hints: Vec<Equation>,
    pub targets: Vec<Equation>,
    /// Also rewrite into right-hand sides and use equations right to left.
    /// Without it the search only rewrites left-hand sides, left to right.
    pub both_sides: bool,
    /// Allow rewriting at variable positions and with equations whose rewritten
    /// side is a bare variable.
    pub into_variables: bool,
}

impl Default for ProverConfig {
    fn default() -> Self {
        ProverConfig {
            hints: Vec::new(),
            targets: Vec::new(),
            both_sides: true,
            into_variables: false,
        }
    }
}

impl ProverConfig {
    pub fn new(targets: Vec<Equation>) -> Self {
        ProverConfig {
            targets,
            ..ProverConfig::default()
        }
    }

    pub fn with_hints(mut self, hints: Vec<Equation>) -> Self {
        self.hints = hints;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProverError {
    #[error("prover needs at least one target")]
    NoTargets,
    #[error("prover limits must be positive")]
    InvalidLimits,
    #[error("internal error: kernel rejected the derivation: {0}")]
    KernelRejected(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    Generated,
    Time,
    /// The set of support ran empty.
    Saturated,
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Limit::Generated => "max-generated",
            Limit::Time => "max-seconds",
            Limit::Saturated => "saturated",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProverStats {
    pub generated: u64,
    pub kept: u64,
    pub given: u64,
}

#[derive(Clone, Debug)]
pub enum ProofOutcome {
    Found {
        derivation: Derivation,
        stats: ProverStats,
    },
    NotFound {
        limit: Limit,
        /// Which targets were reached before the limit fired.
        found: Vec<bool>,
        stats: ProverStats,
    },
}

impl ProofOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, ProofOutcome::Found { .. })
    }

    pub fn stats(&self) -> &ProverStats {
        match self {
            ProofOutcome::Found { stats, .. } | ProofOutcome::NotFound { stats, .. } => stats,
        }
    }

    pub fn derivation(&self) -> Option<&Derivation> {
        match self {
            ProofOutcome::Found { derivation, .. } => Some(derivation),
            ProofOutcome::NotFound { .. } => None,
        }
    }
}

struct Kept {
    equation: Equation,
    parents: Option<(usize, usize)>,
}

/// Canonical forms of an equation and its mirror image.
fn oriented_keys(e: &Equation) -> (Equation, Equation) {
    (e.canonical(), e.flip().canonical())
}

/// Paramodulants from `from` into the left side of `into`, skipping variable
/// positions and variable left sides unless `into_variables`.
fn generate(from: &Equation, into: &Equation, into_variables: bool, out: &mut Vec<Paramodulant>) {
    if !into_variables && from.lhs.as_var().is_some() {
        return;
    }
    let (into, from) = rename_apart(into, from);
    for (pos, sub) in into.lhs.subterms() {
        if !into_variables && sub.as_var().is_some() {
            continue;
        }
        let Some(sigma) = unify(&from.lhs, sub) else {
            continue;
        };
        let rewritten = sigma
            .apply(&into.lhs)
            .replace_at(&pos, sigma.apply(&from.rhs))
            .expect("position survives substitution");
        out.push(Paramodulant {
            equation: Equation::new(rewritten, sigma.apply(&into.rhs)).canonical(),
            position: pos,
        });
    }
}

struct Search<'a> {
    cfg: &'a ProverConfig,
    limits: &'a ProverLimits,
    kept: Vec<Kept>,
    index: HashMap<Equation, usize>,
    hints: HashMap<Equation, bool>,
    targets: Vec<(Equation, Equation)>,
    witness: Vec<Option<usize>>,
    sos: BinaryHeap<Reverse<(i64, usize)>>,
    usable: Vec<usize>,
    stats: ProverStats,
    started: Instant,
}

impl<'a> Search<'a> {
    fn new(cfg: &'a ProverConfig, limits: &'a ProverLimits) -> Self {
        let mut hints = HashMap::new();
        for h in &cfg.hints {
            let (fwd, back) = oriented_keys(h);
            hints.entry(back).or_insert(true);
            hints.insert(fwd, false);
        }
        Search {
            cfg,
            limits,
            kept: Vec::new(),
            index: HashMap::new(),
            hints,
            targets: cfg.targets.iter().map(oriented_keys).collect(),
            witness: vec![None; cfg.targets.len()],
            sos: BinaryHeap::new(),
            usable: Vec::new(),
            stats: ProverStats::default(),
            started: Instant::now(),
        }
    }

    fn all_found(&self) -> bool {
        self.witness.iter().all(Option::is_some)
    }

    /// Orients `e` like a matching hint or target, so that it is stated the way the
    /// caller expects. Returns the oriented equation and whether it matched a hint.
    fn orient(&self, e: Equation) -> (Equation, bool) {
        if let Some(&flip) = self.hints.get(&e) {
            return (if flip { e.flip().canonical() } else { e }, true);
        }
        for (fwd, back) in &self.targets {
            if *back == e && *fwd != e {
                return (fwd.clone(), false);
            }
        }
        (e, false)
    }

    fn dedup_key(&self, e: &Equation) -> Equation {
        let (fwd, back) = oriented_keys(e);
        if self.cfg.both_sides {
            fwd.min(back)
        } else {
            fwd
        }
    }

    fn insert(&mut self, e: Equation, parents: Option<(usize, usize)>) -> bool {
        if e.lhs == e.rhs {
            return false;
        }
        let (e, hinted) = self.orient(e);
        let key = self.dedup_key(&e);
        if self.index.contains_key(&key) {
            return false;
        }
        let id = self.kept.len();
        for (t, (fwd, back)) in self.targets.iter().enumerate() {
            if self.witness[t].is_none() && (e == *fwd || e == *back) {
                self.witness[t] = Some(id);
            }
        }
        let mut priority = e.weight() as i64;
        if hinted {
            priority -= HINT_BONUS;
        }
        self.index.insert(key, id);
        self.kept.push(Kept { equation: e, parents });
        self.sos.push(Reverse((priority, id)));
        self.stats.kept += 1;
        true
    }

    fn run(&mut self, axioms: &[Equation]) -> Option<Limit> {
        for a in axioms {
            self.insert(a.canonical(), None);
        }
        let time_limit = Duration::from_secs_f64(self.limits.max_seconds);
        let mut buf = Vec::new();
        while !self.all_found() {
            let Some(Reverse((_, given))) = self.sos.pop() else {
                return Some(Limit::Saturated);
            };
            self.stats.given += 1;
            self.usable.push(given);
            for k in 0..self.usable.len() {
                let other = self.usable[k];
                let pairs: &[(usize, usize)] = if other == given {
                    &[(given, given)]
                } else {
                    &[(given, other), (other, given)]
                };
                for &(from, into) in pairs {
                    buf.clear();
                    let from_eq = &self.kept[from].equation;
                    let into_eq = &self.kept[into].equation;
                    generate(from_eq, into_eq, self.cfg.into_variables, &mut buf);
                    if self.cfg.both_sides {
                        let from_back = from_eq.flip();
                        let into_back = into_eq.flip();
                        generate(&from_back, into_eq, self.cfg.into_variables, &mut buf);
                        generate(from_eq, &into_back, self.cfg.into_variables, &mut buf);
                        generate(&from_back, &into_back, self.cfg.into_variables, &mut buf);
                    }
                    for p in buf.drain(..) {
                        self.stats.generated += 1;
                        if p.equation.weight() <= self.limits.max_weight {
                            self.insert(p.equation, Some((from, into)));
                            if self.all_found() {
                                return None;
                            }
                        }
                        if self.stats.generated >= self.limits.max_generated {
                            return Some(Limit::Generated);
                        }
                    }
                }
                if self.started.elapsed() > time_limit {
                    return Some(Limit::Time);
                }
            }
        }
        None
    }

    fn derivation(&self) -> Derivation {
        let mut needed = BTreeSet::new();
        let mut stack: Vec<usize> = self.witness.iter().flatten().copied().collect();
        while let Some(id) = stack.pop() {
            if needed.insert(id) {
                if let Some((a, b)) = self.kept[id].parents {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        let renumber: HashMap<usize, u32> = needed.iter().enumerate().map(|(i, &id)| (id, i as u32 + 1)).collect();
        let steps = needed
            .iter()
            .map(|&id| ProofStep {
                id: renumber[&id],
                equation: self.kept[id].equation.clone(),
                just: match self.kept[id].parents {
                    None => Justification::Axiom,
                    Some((a, b)) => Justification::Para {
                        from: renumber[&a],
                        into: renumber[&b],
                    },
                },
            })
            .collect();
        Derivation::new(steps)
    }
}

/// Searches for a derivation of every target from `axioms`.
pub fn prove(axioms: &[Equation], cfg: &ProverConfig, limits: &ProverLimits) -> Result<ProofOutcome, ProverError> {
    if cfg.targets.is_empty() {
        return Err(ProverError::NoTargets);
    }
    limits.validate()?;
    let mut search = Search::new(cfg, limits);
    match search.run(axioms) {
        Some(limit) => Ok(ProofOutcome::NotFound {
            limit,
            found: search.witness.iter().map(Option::is_some).collect(),
            stats: search.stats,
        }),
        None => {
            let derivation = search.derivation();
            let verdicts = check_derivation(&derivation, axioms);
            if !all_ok(&verdicts) || !check_targets(&derivation, &cfg.targets) {
                let (step, v) = derivation
                    .steps
                    .iter()
                    .zip(&verdicts)
                    .find(|(_, v)| !v.is_ok())
                    .map_or((0, "targets missing".to_string()), |(s, v)| (s.id, v.to_string()));
                return Err(ProverError::KernelRejected(format!("step {step}: {v}")));
            }
            Ok(ProofOutcome::Found {
                derivation,
                stats: search.stats,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct TargetResult {
    pub name: &'static str,
    pub target: Equation,
    pub found: bool,
    pub limit: Option<Limit>,
    pub generated: u64,
}

#[derive(Clone, Debug)]
pub struct TriageReport {
    pub candidate: Equation,
    pub results: Vec<TargetResult>,
}

impl TriageReport {
    pub fn found_count(&self) -> usize {
        self.results.iter().filter(|r| r.found).count()
    }

    pub fn all_found(&self) -> bool {
        self.results.iter().all(|r| r.found)
    }

    /// `candidate <TAB> found/total <TAB> name=+|- ... <TAB> generated`.
    pub fn to_tsv(&self) -> String {
        let flags: Vec<String> = self
            .results
            .iter()
            .map(|r| format!("{}={}", r.name, if r.found { '+' } else { '-' }))
            .collect();
        let generated: u64 = self.results.iter().map(|r| r.generated).sum();
        format!(
            "{}\t{}/{}\t{}\t{}",
            self.candidate,
            self.found_count(),
            self.results.len(),
            flags.join(" "),
            generated
        )
    }
}

/// Tries to derive each lattice axiom from `candidate` alone, one search per axiom.
pub fn triage(
    candidate: &Equation,
    limits: &ProverLimits,
    hints: &[Equation],
    exec: Execution,
) -> Result<TriageReport, ProverError> {
    limits.validate()?;
    let targets: Vec<(&'static str, Equation)> = known::LATTICE_AXIOM_NAMES
        .into_iter()
        .zip(known::lattice_axioms())
        .collect();
    let results = exec.map(&targets, |(name, target)| {
        let cfg = ProverConfig::new(vec![target.clone()]).with_hints(hints.to_vec());
        let outcome = prove(std::slice::from_ref(candidate), &cfg, limits);
        let (found, limit, generated) = match &outcome {
            Ok(ProofOutcome::Found { stats, .. }) => (true, None, stats.generated),
            Ok(ProofOutcome::NotFound { limit, stats, .. }) => (false, Some(*limit), stats.generated),
            Err(_) => (false, None, 0),
        };
        (
            TargetResult {
                name,
                target: target.clone(),
                found,
                limit,
                generated,
            },
            outcome.err(),
        )
    });
    let mut out = Vec::with_capacity(results.len());
    for (r, err) in results {
        if let Some(e) = err {
            return Err(e);
        }
        out.push(r);
    }
    Ok(TriageReport {
        candidate: candidate.clone(),
        results: out,
    })
}
