//! Candidate absorption equations `alpha = x`.
//!
//! Every variable of `alpha` other than `x` occurs once, and neither the leftmost
//! nor the rightmost leaf of `alpha` is `x`. Candidates are produced in a fixed
//! order: by leaf count, then tree shape, then operator labels (meet before join,
//! internal nodes in preorder), then leaf pattern (`x` before a fresh variable).
//!
//! Emitted equations keep `x` as variable 0 and number the other variables
//! `y, z, u, ...` by first occurrence, which is how the known single identities
//! are usually written. Two candidates are never variants of each other, since
//! the shape, the labels and the positions of `x` determine the equation.

use std::ops::RangeInclusive;
use std::sync::Arc;

use crate::term::{Equation, Op, Term, VarId};

const X: VarId = VarId(0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shard {
    pub index: u64,
    pub of: u64,
}

impl Shard {
    pub const ALL: Shard = Shard { index: 0, of: 1 };

    pub fn contains(self, e: &Equation) -> bool {
        self.of == 1 || shard_hash(e) % self.of == self.index
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumSpec {
    /// Number of leaves of `alpha`.
    pub leaves: RangeInclusive<usize>,
    pub max_vars: usize,
    pub require_x: bool,
    /// Keep only one of each meet/join dual pair.
    pub dual_reduce: bool,
    pub shard: Shard,
}

impl EnumSpec {
    pub fn new(leaves: RangeInclusive<usize>, max_vars: usize) -> Self {
        EnumSpec {
            leaves,
            max_vars,
            require_x: true,
            dual_reduce: false,
            shard: Shard::ALL,
        }
    }

    pub fn with_shard(mut self, index: u64, of: u64) -> Self {
        self.shard = Shard { index, of };
        self
    }

    pub fn validate(&self) -> Result<(), EnumError> {
        let bad = |m: &str| Err(EnumError::InvalidSpec(m.to_string()));
        if self.shard.of == 0 || self.shard.index >= self.shard.of {
            return bad("shard index must satisfy 0 <= index < of");
        }
        if self.max_vars == 0 {
            return bad("max_vars must be at least 1");
        }
        if *self.leaves.start() < 2 && !self.leaves.is_empty() {
            return bad("leaf counts start at 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnumError {
    #[error("invalid enumeration spec: {0}")]
    InvalidSpec(String),
    #[error("counting budget of {budget} equations exceeded")]
    BudgetExceeded { budget: u64 },
}

/// 64-bit FNV-1a of the variant-canonical text.
pub fn shard_hash(e: &Equation) -> u64 {
    let text = e.canonical().to_string();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Unlabeled binary trees with `n` leaves in canonical recursive order: left
/// subtree size ascending, then left shape, then right shape. Internal nodes carry
/// a placeholder operator.
fn tree_shapes(n: usize) -> Vec<Arc<Term>> {
    let mut by_size: Vec<Vec<Arc<Term>>> = vec![Vec::new(), vec![Arc::new(Term::Var(X))]];
    for m in 2..=n {
        let mut out = Vec::new();
        for k in 1..m {
            for l in &by_size[k] {
                for r in &by_size[m - k] {
                    out.push(Arc::new(Term::App(Op::Meet, l.clone(), r.clone())));
                }
            }
        }
        by_size.push(out);
    }
    if n == 0 {
        return Vec::new();
    }
    by_size.swap_remove(n)
}

fn label(shape: &Term, word: u64, bits: u32, next: &mut u32) -> Term {
    match shape {
        Term::Var(v) => Term::Var(*v),
        Term::App(_, l, r) => {
            let bit = (word >> (bits - 1 - *next)) & 1;
            *next += 1;
            let op = if bit == 0 { Op::Meet } else { Op::Join };
            let l = label(l, word, bits, next);
            let r = label(r, word, bits, next);
            Term::app(op, l, r)
        }
    }
}

/// Every operator-labeled binary tree with `leaves` leaves (all leaves `x`).
pub fn enumerate_shapes(leaves: usize) -> impl Iterator<Item = Term> {
    let internal = leaves.saturating_sub(1) as u32;
    tree_shapes(leaves)
        .into_iter()
        .flat_map(move |shape| (0..1u64 << internal).map(move |word| label(&shape, word, internal, &mut 0)))
}

/// Admissible leaf patterns for `n` leaves: `Some(k)` is a fresh variable, `None` is `x`.
fn leaf_patterns(n: usize, max_vars: usize, require_x: bool) -> Vec<Vec<VarId>> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return if !require_x && max_vars >= 1 {
            vec![vec![VarId(1)]]
        } else {
            Vec::new()
        };
    }
    let interior = n - 2;
    let mut out = Vec::new();
    for mask in 0..1u64 << interior {
        let mut pattern = Vec::with_capacity(n);
        let mut fresh = 0u32;
        let mut fresh_var = |pattern: &mut Vec<VarId>| {
            fresh += 1;
            pattern.push(VarId(fresh));
        };
        fresh_var(&mut pattern);
        let mut has_x = false;
        for p in 1..=interior {
            if (mask >> (interior - p)) & 1 == 1 {
                fresh_var(&mut pattern);
            } else {
                has_x = true;
                pattern.push(X);
            }
        }
        fresh_var(&mut pattern);
        let distinct = fresh as usize + has_x as usize;
        if (has_x || !require_x) && distinct <= max_vars {
            out.push(pattern);
        }
    }
    out
}

fn fill_leaves(shape: &Term, pattern: &[VarId], next: &mut usize) -> Term {
    match shape {
        Term::Var(_) => {
            let v = pattern[*next];
            *next += 1;
            Term::Var(v)
        }
        Term::App(op, l, r) => {
            let l = fill_leaves(l, pattern, next);
            let r = fill_leaves(r, pattern, next);
            Term::app(*op, l, r)
        }
    }
}

/// Every admissible `alpha` with the given labeled shape.
pub fn assign_variables(shape: &Term, spec: &EnumSpec) -> Vec<Term> {
    leaf_patterns(shape.leaf_count(), spec.max_vars, spec.require_x)
        .iter()
        .map(|p| fill_leaves(shape, p, &mut 0))
        .collect()
}

fn keep_dual(e: &Equation) -> bool {
    e.lhs.to_string() <= e.lhs.dual().to_string()
}

/// Streams the candidates of `spec`, restricted to its shard.
pub fn enumerate_candidates(spec: &EnumSpec) -> impl Iterator<Item = Equation> {
    let spec = spec.clone();
    let shard = spec.shard;
    let dual_reduce = spec.dual_reduce;
    let patterns_spec = spec.clone();
    spec.leaves
        .clone()
        .flat_map(move |n| {
            let patterns = leaf_patterns(n, patterns_spec.max_vars, patterns_spec.require_x);
            let shapes: Box<dyn Iterator<Item = Term>> = if patterns.is_empty() {
                Box::new(std::iter::empty())
            } else {
                Box::new(enumerate_shapes(n))
            };
            shapes.flat_map(move |shape| {
                let alphas: Vec<Equation> = patterns
                    .iter()
                    .map(|p| Equation::new(fill_leaves(&shape, p, &mut 0), Term::Var(X)))
                    .collect();
                alphas
            })
        })
        .filter(move |e| !dual_reduce || keep_dual(e))
        .filter(move |e| shard.contains(e))
}

/// Default number of equations [`count_candidates`] may generate.
pub const DEFAULT_COUNT_BUDGET: u64 = 50_000_000;

/// Number of equations `enumerate_candidates` emits for `spec` ignoring its shard.
pub fn count_candidates(spec: &EnumSpec, budget: u64) -> Result<u64, EnumError> {
    spec.validate()?;
    let unsharded = EnumSpec {
        shard: Shard::ALL,
        ..spec.clone()
    };
    let mut count = 0u64;
    for _ in enumerate_candidates(&unsharded) {
        count += 1;
        if count > budget {
            return Err(EnumError::BudgetExceeded { budget });
        }
    }
    Ok(count)
}

/// Checks the syntactic constraints directly on an equation, independent of generation.
pub fn is_admissible(e: &Equation, spec: &EnumSpec) -> bool {
    let x = match e.rhs.as_var() {
        Some(v) => v,
        None => return false,
    };
    let leaves = e.lhs.leaves();
    if !spec.leaves.contains(&leaves.len()) {
        return false;
    }
    if leaves.first() == Some(&x) || leaves.last() == Some(&x) {
        return false;
    }
    let x_count = leaves.iter().filter(|&&v| v == x).count();
    if spec.require_x && x_count == 0 {
        return false;
    }
    let others: Vec<VarId> = leaves.iter().copied().filter(|&v| v != x).collect();
    let mut distinct = others.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != others.len() {
        return false;
    }
    distinct.len() + (x_count > 0) as usize <= spec.max_vars
}
