//! Backtracking finite model finder.
//!
//! The searcher branches on one unassigned table cell at a time, chosen
//! deterministically by `Searcher::pick`. The ground instances of the
//! constraints are flattened into shared ground subterms. A subterm whose
//! arguments are known waits on the table cell that decides its value, and
//! assigning the cell passes the value up to its parents.
//!
//! Ground equations also push values down: once one side is known the other
//! side is required to equal it. A required subterm with both arguments known
//! assigns its cell outright; with one argument known, it watches the table
//! line that argument selects, and when only one entry of the line can still
//! produce the required value the unknown argument is required to be that
//! entry.
//!
//! Isomorphic copies are pruned with the least-number heuristic: a cell may
//! only take values up to one more than the largest element mentioned so far
//! by an assigned cell.

use std::collections::{HashMap, HashSet};

use super::{is_lattice, Compiled, FiniteAlgebra, Instr};
use crate::term::{known, Equation, Op};

/// Largest carrier size the searcher accepts.
pub const HARD_SIZE_CAP: usize = 5;

const UNSET: u8 = u8::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Requirement {
    /// Any model of the constraints.
    Any,
    /// Models that fail at least one lattice axiom.
    NonLattice,
    /// Models that satisfy every lattice axiom.
    Lattice,
}

impl Requirement {
    fn accepts(self, alg: &FiniteAlgebra) -> bool {
        match self {
            Requirement::Any => true,
            Requirement::NonLattice => !is_lattice(alg),
            Requirement::Lattice => is_lattice(alg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("model size {requested} exceeds the cap of {cap}")]
    SizeTooLarge { requested: usize, cap: usize },
    #[error("search budget exhausted after {nodes} nodes")]
    BudgetExhausted { nodes: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSearch {
    pub max_size: usize,
    /// Maximum number of cell assignments tried before giving up.
    pub budget: u64,
    pub requirement: Requirement,
}

impl Default for ModelSearch {
    fn default() -> Self {
        ModelSearch {
            max_size: 4,
            budget: 200_000_000,
            requirement: Requirement::NonLattice,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: u64,
    pub models: u64,
}

/// Smallest nonlattice of size at most `max_size` satisfying every constraint.
///
/// `Ok(None)` means the space was covered and no such algebra exists.
pub fn find_nonlattice_model(constraints: &[Equation], max_size: usize) -> Result<Option<FiniteAlgebra>, SearchError> {
    find_nonlattice_model_with(
        constraints,
        &ModelSearch {
            max_size,
            ..ModelSearch::default()
        },
    )
}

pub fn find_nonlattice_model_with(
    constraints: &[Equation],
    cfg: &ModelSearch,
) -> Result<Option<FiniteAlgebra>, SearchError> {
    check_size(cfg.max_size)?;
    let mut nodes = 0;
    for n in 1..=cfg.max_size {
        let mut s = Searcher::new(n, constraints, cfg.requirement, cfg.budget - nodes, Some(1));
        s.run()?;
        nodes += s.stats.nodes;
        if let Some(m) = s.found.pop() {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// Every model of exactly `size` elements accepted by `requirement`, up to the
/// least-number symmetry reduction (each isomorphism class appears at least once).
pub fn find_models(
    constraints: &[Equation],
    size: usize,
    requirement: Requirement,
    budget: u64,
) -> Result<(Vec<FiniteAlgebra>, SearchStats), SearchError> {
    check_size(size)?;
    let mut s = Searcher::new(size, constraints, requirement, budget, None);
    s.run()?;
    Ok((s.found, s.stats))
}

fn check_size(size: usize) -> Result<(), SearchError> {
    if size > HARD_SIZE_CAP {
        return Err(SearchError::SizeTooLarge {
            requested: size,
            cap: HARD_SIZE_CAP,
        });
    }
    Ok(())
}

/// Re-checks a model by direct evaluation: `true` iff every constraint holds and the
/// algebra is not a lattice.
pub fn verify_model(alg: &FiniteAlgebra, constraints: &[Equation]) -> bool {
    constraints.iter().all(|c| super::holds(alg, c)) && !known::lattice_axioms().iter().all(|ax| super::holds(alg, ax))
}

const NONE: u32 = u32::MAX;

/// A ground subterm `a op b` over element constants, shared between instances.
#[derive(Clone, Copy)]
struct Node {
    /// Offset of the operation's table within the cell array.
    base: u32,
    a: u32,
    b: u32,
}

enum Undo {
    Value(u32),
    Required(u32),
    Watch(u32),
    LineWatch(u32),
    /// A cell assignment and the value of `mentioned` before it.
    Cell(u32, i32),
}

/// Cells in shells of growing `max(row, col)`, the diagonal cell of each shell
/// first, then the meet cells of the shell before its join cells.
fn cell_order(n: usize) -> Vec<usize> {
    let mut cells: Vec<usize> = (0..2 * n * n).collect();
    cells.sort_by_key(|&c| {
        let (op, w) = (c / (n * n), c % (n * n));
        let (r, col) = (w / n, w % n);
        (r.max(col), r != col, op, w)
    });
    cells
}

struct Searcher {
    n: usize,
    table: Vec<u8>,
    order: Vec<usize>,
    /// Nodes `0..n` are the element constants.
    nodes: Vec<Node>,
    values: Vec<u8>,
    /// Value a node must take for the ground equations to hold.
    required: Vec<u8>,
    parents: Vec<Vec<u32>>,
    /// Ground equations each node is a side of, as the index of the other side.
    partners: Vec<Vec<u32>>,
    /// Nodes whose arguments are known, waiting for a cell.
    watch: Vec<Vec<u32>>,
    /// Nodes with a required value and one known argument, waiting on the
    /// table row (or column) that argument selects. Indexed by line and
    /// required value.
    line_watch: Vec<Vec<u32>>,
    trail: Vec<Undo>,
    queue: Vec<u32>,
    /// Largest element appearing as a row, column or value of an assigned cell.
    mentioned: i32,
    conflict: bool,
    requirement: Requirement,
    budget: u64,
    limit: Option<usize>,
    found: Vec<FiniteAlgebra>,
    stats: SearchStats,
}

impl Searcher {
    fn new(n: usize, constraints: &[Equation], requirement: Requirement, budget: u64, limit: Option<usize>) -> Self {
        let ncells = 2 * n * n;
        let mut s = Searcher {
            n,
            table: vec![UNSET; ncells],
            order: cell_order(n),
            nodes: (0..n)
                .map(|_| Node {
                    base: NONE,
                    a: NONE,
                    b: NONE,
                })
                .collect(),
            values: (0..n as u8).collect(),
            required: vec![UNSET; n],
            parents: vec![Vec::new(); n],
            partners: vec![Vec::new(); n],
            watch: vec![Vec::new(); ncells],
            line_watch: vec![Vec::new(); 4 * n * n],
            trail: Vec::new(),
            queue: Vec::new(),
            mentioned: -1,
            conflict: false,
            requirement,
            budget,
            limit,
            found: Vec::new(),
            stats: SearchStats::default(),
        };
        let constant_sides = s.ground(constraints);
        for (id, v) in constant_sides {
            if !s.conflict {
                s.require(id, v);
            }
        }
        for id in n as u32..s.nodes.len() as u32 {
            if s.conflict {
                break;
            }
            let Node { a, b, .. } = s.nodes[id as usize];
            if (a as usize) < n && (b as usize) < n {
                s.ready(id);
            }
        }
        s.propagate();
        // assignments made before the first decision are never undone
        s.trail.clear();
        s
    }

    /// Builds the shared ground subterms of every instance of every constraint.
    /// Returns the ground equations with a constant side, as (node, constant).
    fn ground(&mut self, constraints: &[Equation]) -> Vec<(u32, u8)> {
        let n = self.n;
        let mut interned: HashMap<(u32, u32, u32), u32> = HashMap::new();
        let mut equations: HashSet<(u32, u32)> = HashSet::new();
        let mut stack: Vec<u32> = Vec::with_capacity(32);
        for c in constraints {
            let prog = Compiled::new(c);
            let k = prog.vars.len();
            let mut env = vec![0u32; k];
            loop {
                let mut side = |code: &[Instr], nodes: &mut Vec<Node>| {
                    stack.clear();
                    for ins in code {
                        match *ins {
                            Instr::Load(slot) => stack.push(env[slot as usize]),
                            Instr::Apply(op) => {
                                let b = stack.pop().unwrap();
                                let a = stack.pop().unwrap();
                                let base = match op {
                                    Op::Meet => 0,
                                    Op::Join => (n * n) as u32,
                                };
                                let id = *interned.entry((base, a, b)).or_insert_with(|| {
                                    nodes.push(Node { base, a, b });
                                    nodes.len() as u32 - 1
                                });
                                stack.push(id);
                            }
                        }
                    }
                    stack[0]
                };
                let l = side(&prog.lhs, &mut self.nodes);
                let r = side(&prog.rhs, &mut self.nodes);
                if l != r {
                    equations.insert((l.min(r), l.max(r)));
                }
                let mut i = k;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    env[i] += 1;
                    if (env[i] as usize) < n {
                        break;
                    }
                    env[i] = 0;
                }
                if env.iter().all(|&x| x == 0) {
                    break;
                }
            }
        }
        let total = self.nodes.len();
        self.values.resize(total, UNSET);
        self.required.resize(total, UNSET);
        self.parents.resize(total, Vec::new());
        self.partners.resize(total, Vec::new());
        for id in n..total {
            let Node { a, b, .. } = self.nodes[id];
            if a as usize >= n {
                self.parents[a as usize].push(id as u32);
            }
            if b != a && b as usize >= n {
                self.parents[b as usize].push(id as u32);
            }
        }
        let mut equations: Vec<(u32, u32)> = equations.into_iter().collect();
        equations.sort_unstable();
        let mut constant_sides = Vec::new();
        for (l, r) in equations {
            if (r as usize) < n {
                // both sides are distinct constants
                self.conflict = true;
            } else if (l as usize) < n {
                constant_sides.push((r, l as u8));
            } else {
                self.partners[l as usize].push(r);
                self.partners[r as usize].push(l);
            }
        }
        constant_sides
    }

    fn cell_of(&self, id: u32) -> usize {
        let Node { base, a, b } = self.nodes[id as usize];
        base as usize + self.values[a as usize] as usize * self.n + self.values[b as usize] as usize
    }

    fn known(&self, id: u32) -> bool {
        self.values[id as usize] != UNSET
    }

    /// Called once both arguments of `id` are known.
    fn ready(&mut self, id: u32) {
        let cell = self.cell_of(id);
        let v = self.table[cell];
        if v != UNSET {
            self.set_value(id, v);
            return;
        }
        self.watch[cell].push(id);
        self.trail.push(Undo::Watch(cell as u32));
        let r = self.required[id as usize];
        if r != UNSET {
            self.assign(cell, r);
        }
    }

    fn set_value(&mut self, id: u32, v: u8) {
        let r = self.required[id as usize];
        if r != UNSET && r != v {
            self.conflict = true;
            return;
        }
        self.values[id as usize] = v;
        self.trail.push(Undo::Value(id));
        for i in 0..self.partners[id as usize].len() {
            let other = self.partners[id as usize][i];
            self.require(other, v);
            if self.conflict {
                return;
            }
        }
        for i in 0..self.parents[id as usize].len() {
            let p = self.parents[id as usize][i];
            if self.known(p) {
                continue;
            }
            let Node { a, b, .. } = self.nodes[p as usize];
            match (self.known(a), self.known(b)) {
                (true, true) => self.ready(p),
                _ if self.required[p as usize] != UNSET => self.watch_line(p),
                _ => {}
            }
            if self.conflict {
                return;
            }
        }
    }

    /// Records that `id` must evaluate to `v`.
    fn require(&mut self, id: u32, v: u8) {
        let current = self.values[id as usize];
        if current != UNSET {
            if current != v {
                self.conflict = true;
            }
            return;
        }
        let r = self.required[id as usize];
        if r != UNSET {
            if r != v {
                self.conflict = true;
            }
            return;
        }
        self.required[id as usize] = v;
        self.trail.push(Undo::Required(id));
        let Node { a, b, .. } = self.nodes[id as usize];
        match (self.known(a), self.known(b)) {
            (true, true) => {
                let cell = self.cell_of(id);
                self.assign(cell, v);
            }
            (false, false) => {}
            _ => self.watch_line(id),
        }
    }

    /// `id` has a required value and exactly one known argument: watch the table
    /// line that argument selects, and check it now.
    fn watch_line(&mut self, id: u32) {
        let slot = self.line_of(id) * self.n + self.required[id as usize] as usize;
        self.line_watch[slot].push(id);
        self.trail.push(Undo::LineWatch(slot as u32));
        self.check_line(id);
    }

    fn line_of(&self, id: u32) -> usize {
        let n = self.n;
        let Node { base, a, b } = self.nodes[id as usize];
        let op = if base == 0 { 0 } else { 2 * n };
        if self.known(a) {
            op + self.values[a as usize] as usize
        } else {
            op + n + self.values[b as usize] as usize
        }
    }

    /// Narrows the unknown argument of `id` to the entries of its table line that
    /// can still produce the required value.
    fn check_line(&mut self, id: u32) {
        let n = self.n;
        let Node { base, a, b } = self.nodes[id as usize];
        let want = self.required[id as usize];
        let (fixed, free, by_row) = if self.known(a) {
            (self.values[a as usize] as usize, b, true)
        } else {
            (self.values[b as usize] as usize, a, false)
        };
        if self.known(free) {
            return;
        }
        let mut only = UNSET;
        let mut count = 0;
        for t in 0..n {
            let cell = base as usize + if by_row { fixed * n + t } else { t * n + fixed };
            let v = self.table[cell];
            if v == UNSET || v == want {
                count += 1;
                only = t as u8;
            }
        }
        match count {
            0 => self.conflict = true,
            1 => self.require(free, only),
            _ => {}
        }
    }

    /// Assigns a cell (or checks it against an earlier assignment) and queues it.
    fn assign(&mut self, cell: usize, value: u8) {
        let current = self.table[cell];
        if current != UNSET {
            if current != value {
                self.conflict = true;
            }
            return;
        }
        let n = self.n;
        let within = cell % (n * n);
        self.trail.push(Undo::Cell(cell as u32, self.mentioned));
        self.mentioned = self
            .mentioned
            .max((within / n) as i32)
            .max((within % n) as i32)
            .max(value as i32);
        self.table[cell] = value;
        self.queue.push(cell as u32);
    }

    /// Hands each queued cell's value to the nodes waiting for it and re-checks
    /// the lines through it. Returns false on a violated ground equation.
    fn propagate(&mut self) -> bool {
        let n = self.n;
        while !self.conflict {
            let Some(cell) = self.queue.pop() else {
                break;
            };
            let cell = cell as usize;
            let waiting = std::mem::take(&mut self.watch[cell]);
            let v = self.table[cell];
            for &id in &waiting {
                if !self.known(id) {
                    self.set_value(id, v);
                    if self.conflict {
                        break;
                    }
                }
            }
            self.watch[cell] = waiting;
            if self.conflict {
                break;
            }
            let op = if cell < n * n { 0 } else { 2 * n };
            let within = cell % (n * n);
            let (row, col) = (within / n, within % n);
            let base = cell - within;
            for (line, by_row, fixed) in [(op + row, true, row), (op + n + col, false, col)] {
                for want in 0..n {
                    let slot = line * n + want;
                    if self.line_watch[slot].is_empty() || self.conflict {
                        continue;
                    }
                    let mut only = 0;
                    let mut count = 0;
                    for t in 0..n {
                        let c = base + if by_row { fixed * n + t } else { t * n + fixed };
                        let v = self.table[c];
                        if v == UNSET || v as usize == want {
                            count += 1;
                            only = t as u8;
                        }
                    }
                    match count {
                        0 => self.conflict = true,
                        1 => {
                            // the list may grow while it is scanned; later entries were checked on arrival
                            let len = self.line_watch[slot].len();
                            for i in 0..len {
                                let id = self.line_watch[slot][i];
                                let Node { a, b, .. } = self.nodes[id as usize];
                                let free = if by_row { b } else { a };
                                if !self.known(id) {
                                    self.require(free, only);
                                    if self.conflict {
                                        break;
                                    }
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        self.queue.clear();
        !self.conflict
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Undo::Value(id) => self.values[id as usize] = UNSET,
                Undo::Required(id) => self.required[id as usize] = UNSET,
                Undo::Watch(cell) => {
                    self.watch[cell as usize].pop();
                }
                Undo::LineWatch(line) => {
                    self.line_watch[line as usize].pop();
                }
                Undo::Cell(cell, before) => {
                    self.table[cell as usize] = UNSET;
                    self.mentioned = before;
                }
            }
        }
        self.conflict = false;
    }

    fn run(&mut self) -> Result<(), SearchError> {
        if self.conflict {
            return Ok(());
        }
        self.descend(0)
    }

    fn done(&self) -> bool {
        self.limit.is_some_and(|l| self.found.len() >= l)
    }

    /// The next cell to branch on: among unassigned cells, prefer those inside
    /// the least-number frontier, then those with the most ground subterms
    /// waiting on them, then the earliest in `order`.
    fn pick(&self, mut pos: usize) -> (usize, Option<usize>) {
        while pos < self.order.len() && self.table[self.order[pos]] != UNSET {
            pos += 1;
        }
        let n = self.n;
        let frontier = self.mentioned + 1;
        let mut best = None;
        let mut best_score = (false, 0usize);
        for &c in &self.order[pos..] {
            if self.table[c] != UNSET {
                continue;
            }
            let w = c % (n * n);
            let inside = ((w / n) as i32) <= frontier && ((w % n) as i32) <= frontier;
            let score = (inside, self.watch[c].len());
            if best.is_none() || score > best_score {
                best = Some(c);
                best_score = score;
            }
        }
        (pos, best)
    }

    fn descend(&mut self, pos: usize) -> Result<(), SearchError> {
        let n = self.n;
        let (pos, choice) = self.pick(pos);
        let Some(cell) = choice else {
            let alg = FiniteAlgebra::from_raw(n, self.table[..n * n].to_vec(), self.table[n * n..].to_vec());
            if self.requirement.accepts(&alg) {
                self.stats.models += 1;
                self.found.push(alg);
            }
            return Ok(());
        };
        let within = cell % (n * n);
        let saved = self.mentioned;
        let mentioned = saved.max((within / n) as i32).max((within % n) as i32);
        let top = (mentioned + 1).min(n as i32 - 1);
        for value in 0..=top {
            if self.stats.nodes >= self.budget {
                return Err(SearchError::BudgetExhausted {
                    nodes: self.stats.nodes,
                });
            }
            self.stats.nodes += 1;
            let mark = self.trail.len();
            self.mentioned = mentioned;
            self.assign(cell, value as u8);
            if self.propagate() {
                self.descend(pos)?;
            }
            self.undo_to(mark);
            self.mentioned = saved;
            if self.done() {
                break;
            }
        }
        Ok(())
    }
}
