//! Finite algebras with two binary operations.
//!
//! The same type holds lattices and the nonlattice countermodels used to filter
//! candidate equations. Evaluation, the lattice test and the model file format
//! live here; the model library and the model finder are submodules.

mod library;
mod search;

use std::collections::BTreeMap;
use std::fmt;

use crate::term::{known, Equation, Op, Term, VarId};

pub use library::{filter_models, model_filter, LibraryEntry, LibraryError, ModelLibrary, Provenance};
pub use search::{
    find_models, find_nonlattice_model, find_nonlattice_model_with, verify_model, ModelSearch, Requirement,
    SearchError, SearchStats, HARD_SIZE_CAP,
};

/// Assignment of carrier elements to variables.
pub type Assignment = BTreeMap<VarId, usize>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteAlgebra {
    size: usize,
    meet: Vec<u8>,
    join: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("algebra size must be between 1 and 255, got {0}")]
    BadSize(usize),
    #[error("{table} table has {got} entries, expected {expected}")]
    TableShape {
        table: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("table entry {value} out of range for size {size}")]
    EntryOutOfRange { value: usize, size: usize },
    #[error("variable {0} is not assigned")]
    Unbound(VarId),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
}

impl FiniteAlgebra {
    /// Builds an algebra from row-major tables.
    pub fn new(size: usize, meet: Vec<usize>, join: Vec<usize>) -> Result<Self, AlgebraError> {
        if size == 0 || size > 255 {
            return Err(AlgebraError::BadSize(size));
        }
        let check = |name: &'static str, table: &[usize]| -> Result<Vec<u8>, AlgebraError> {
            if table.len() != size * size {
                return Err(AlgebraError::TableShape {
                    table: name,
                    got: table.len(),
                    expected: size * size,
                });
            }
            table
                .iter()
                .map(|&v| {
                    if v < size {
                        Ok(v as u8)
                    } else {
                        Err(AlgebraError::EntryOutOfRange { value: v, size })
                    }
                })
                .collect()
        };
        Ok(FiniteAlgebra {
            size,
            meet: check("meet", &meet)?,
            join: check("join", &join)?,
        })
    }

    pub(crate) fn from_raw(size: usize, meet: Vec<u8>, join: Vec<u8>) -> Self {
        debug_assert_eq!(meet.len(), size * size);
        debug_assert_eq!(join.len(), size * size);
        FiniteAlgebra { size, meet, join }
    }

    pub fn from_fns(
        size: usize,
        meet: impl Fn(usize, usize) -> usize,
        join: impl Fn(usize, usize) -> usize,
    ) -> Result<Self, AlgebraError> {
        let table = |f: &dyn Fn(usize, usize) -> usize| (0..size * size).map(|k| f(k / size, k % size)).collect();
        Self::new(size, table(&meet), table(&join))
    }

    /// The `n`-element chain `0 < 1 < ... < n-1` with meet = min and join = max.
    pub fn chain(n: usize) -> Self {
        Self::from_fns(n, |a, b| a.min(b), |a, b| a.max(b)).expect("chain size in range")
    }

    /// Both tables identically 0.
    pub fn constant(n: usize) -> Self {
        Self::from_fns(n, |_, _| 0, |_, _| 0).expect("size in range")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a * self.size + b] as usize
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a * self.size + b] as usize
    }

    pub fn apply(&self, op: Op, a: usize, b: usize) -> usize {
        match op {
            Op::Meet => self.meet(a, b),
            Op::Join => self.join(a, b),
        }
    }

    pub fn meet_table(&self) -> &[u8] {
        &self.meet
    }

    pub fn join_table(&self) -> &[u8] {
        &self.join
    }

    /// Relabels elements: element `a` becomes `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> FiniteAlgebra {
        let n = self.size;
        let mut meet = vec![0u8; n * n];
        let mut join = vec![0u8; n * n];
        for a in 0..n {
            for b in 0..n {
                meet[perm[a] * n + perm[b]] = perm[self.meet(a, b)] as u8;
                join[perm[a] * n + perm[b]] = perm[self.join(a, b)] as u8;
            }
        }
        FiniteAlgebra::from_raw(n, meet, join)
    }

    /// Least isomorphic copy under all relabelings. Intended for sizes up to about 6.
    pub fn iso_canonical(&self) -> FiniteAlgebra {
        let mut perm: Vec<usize> = (0..self.size).collect();
        let mut best = self.clone();
        for_each_permutation(&mut perm, 0, &mut |p| {
            let c = self.permuted(p);
            if c < best {
                best = c;
            }
        });
        best
    }

    pub fn is_isomorphic(&self, other: &FiniteAlgebra) -> bool {
        self.size == other.size && self.iso_canonical() == other.iso_canonical()
    }

    /// Model file text: size, meet rows, join rows, then optional `#` comment lines.
    pub fn to_model_text(&self, comments: &[String]) -> String {
        let n = self.size;
        let mut out = format!("{n}\n");
        for table in [&self.meet, &self.join] {
            for row in table.chunks(n) {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out
    }

    /// Parses model file text, returning the algebra and its comment lines (without `#`).
    pub fn parse_model_text(text: &str) -> Result<(FiniteAlgebra, Vec<String>), AlgebraError> {
        let mut comments = Vec::new();
        let mut rows: Vec<(usize, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if let Some(c) = trimmed.strip_prefix('#') {
                comments.push(c.trim().to_string());
            } else if !trimmed.is_empty() {
                if !comments.is_empty() {
                    return Err(AlgebraError::Format {
                        line: i + 1,
                        message: "table data after comment lines".into(),
                    });
                }
                rows.push((i + 1, trimmed));
            }
        }
        let fmt_err = |line: usize, message: String| AlgebraError::Format { line, message };
        let Some(&(first_line, first)) = rows.first() else {
            return Err(fmt_err(1, "missing size line".into()));
        };
        let n: usize = first
            .parse()
            .map_err(|_| fmt_err(first_line, format!("bad size {first:?}")))?;
        if rows.len() != 2 * n + 1 {
            return Err(fmt_err(
                first_line,
                format!("expected {} table rows, found {}", 2 * n, rows.len() - 1),
            ));
        }
        let mut cells = Vec::with_capacity(2 * n * n);
        for &(line, row) in &rows[1..] {
            let parsed: Result<Vec<usize>, _> = row.split_whitespace().map(str::parse).collect();
            let parsed = parsed.map_err(|_| fmt_err(line, format!("bad table row {row:?}")))?;
            if parsed.len() != n {
                return Err(fmt_err(line, format!("expected {n} entries, found {}", parsed.len())));
            }
            cells.extend(parsed);
        }
        let join = cells.split_off(n * n);
        Ok((FiniteAlgebra::new(n, cells, join)?, comments))
    }
}

fn for_each_permutation(perm: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        f(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        for_each_permutation(perm, k + 1, f);
        perm.swap(k, i);
    }
}

impl fmt::Debug for FiniteAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FiniteAlgebra(n={}, meet={:?}, join={:?})",
            self.size, self.meet, self.join
        )
    }
}

pub fn eval_term(alg: &FiniteAlgebra, t: &Term, a: &Assignment) -> Result<usize, AlgebraError> {
    match t {
        Term::Var(v) => match a.get(v) {
            Some(&x) if x < alg.size => Ok(x),
            Some(&x) => Err(AlgebraError::EntryOutOfRange {
                value: x,
                size: alg.size,
            }),
            None => Err(AlgebraError::Unbound(*v)),
        },
        Term::App(op, l, r) => {
            let x = eval_term(alg, l, a)?;
            let y = eval_term(alg, r, a)?;
            Ok(alg.apply(*op, x, y))
        }
    }
}

/// Postfix program for an equation over dense variable slots.
#[derive(Clone, Debug, Default)]
pub(crate) struct Compiled {
    pub vars: Vec<VarId>,
    pub lhs: Vec<Instr>,
    pub rhs: Vec<Instr>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Instr {
    Load(u8),
    Apply(Op),
}

impl Compiled {
    pub fn new(e: &Equation) -> Self {
        let vars: Vec<VarId> = e.vars().into_iter().collect();
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        emit(&e.lhs, &vars, &mut lhs);
        emit(&e.rhs, &vars, &mut rhs);
        Compiled { vars, lhs, rhs }
    }
}

fn emit(t: &Term, vars: &[VarId], out: &mut Vec<Instr>) {
    match t {
        Term::Var(v) => {
            let slot = vars.binary_search(v).expect("variable collected");
            out.push(Instr::Load(slot as u8));
        }
        Term::App(op, l, r) => {
            emit(l, vars, out);
            emit(r, vars, out);
            out.push(Instr::Apply(*op));
        }
    }
}

fn run_program(alg: &FiniteAlgebra, prog: &[Instr], env: &[u8], stack: &mut Vec<u8>) -> u8 {
    stack.clear();
    for ins in prog {
        match *ins {
            Instr::Load(s) => stack.push(env[s as usize]),
            Instr::Apply(op) => {
                let b = stack.pop().unwrap() as usize;
                let a = stack.pop().unwrap() as usize;
                stack.push(alg.apply(op, a, b) as u8);
            }
        }
    }
    stack[0]
}

/// A falsifying assignment, if any. Assignments are visited in odometer order over
/// the equation's variables sorted by index, the last variable varying fastest.
pub fn counterexample(alg: &FiniteAlgebra, e: &Equation) -> Option<Assignment> {
    let prog = Compiled::new(e);
    let k = prog.vars.len();
    let n = alg.size as u8;
    let mut env = vec![0u8; k];
    let mut stack = Vec::with_capacity(16);
    loop {
        let l = run_program(alg, &prog.lhs, &env, &mut stack);
        let r = run_program(alg, &prog.rhs, &env, &mut stack);
        if l != r {
            return Some(prog.vars.iter().zip(&env).map(|(v, &x)| (*v, x as usize)).collect());
        }
        // advance odometer
        let mut i = k;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            env[i] += 1;
            if env[i] < n {
                break;
            }
            env[i] = 0;
        }
    }
}

/// The equation is true under every assignment.
pub fn holds(alg: &FiniteAlgebra, e: &Equation) -> bool {
    counterexample(alg, e).is_none()
}

/// Commutativity, associativity, idempotence and both absorption laws.
pub fn is_lattice(alg: &FiniteAlgebra) -> bool {
    known::lattice_axioms().iter().all(|ax| holds(alg, ax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{parse_equation, parse_term};

    fn eq(s: &str) -> Equation {
        parse_equation(s).unwrap()
    }

    fn assign(pairs: &[(u32, usize)]) -> Assignment {
        pairs.iter().map(|&(v, x)| (VarId(v), x)).collect()
    }

    #[test]
    fn eval_examples() {
        let chain = FiniteAlgebra::chain(2);
        let t = parse_term("(x*(x+y))").unwrap();
        assert_eq!(eval_term(&chain, &t, &assign(&[(0, 0), (1, 1)])).unwrap(), 0);
        assert_eq!(eval_term(&chain, &Term::var(0), &assign(&[(0, 1)])).unwrap(), 1);
        let c = FiniteAlgebra::constant(2);
        let t = parse_term("(x+y)").unwrap();
        assert_eq!(eval_term(&c, &t, &assign(&[(0, 1), (1, 1)])).unwrap(), 0);
        assert_eq!(
            eval_term(&c, &t, &assign(&[(0, 1)])),
            Err(AlgebraError::Unbound(VarId(1)))
        );
    }

    #[test]
    fn holds_examples() {
        let chain = FiniteAlgebra::chain(2);
        assert!(holds(&chain, &eq("(x*y) = (y*x)")));
        assert!(holds(&chain, &known::a1()));
        let c = FiniteAlgebra::constant(2);
        let cex = counterexample(&c, &eq("(x+(x*x)) = x")).unwrap();
        assert_eq!(cex[&VarId(0)], 1);
    }

    #[test]
    fn lattice_test() {
        assert!(is_lattice(&FiniteAlgebra::chain(2)));
        assert!(is_lattice(&FiniteAlgebra::chain(4)));
        assert!(!is_lattice(&FiniteAlgebra::constant(2)));
        let both_min = FiniteAlgebra::from_fns(2, |a, b| a.min(b), |a, b| a.min(b)).unwrap();
        assert!(!is_lattice(&both_min));
        assert!(counterexample(&both_min, &eq("(x+(x*y)) = x")).is_some());
        // the one-element algebra is trivially a lattice
        assert!(is_lattice(&FiniteAlgebra::constant(1)));
    }

    #[test]
    fn model_text_round_trip() {
        let alg = FiniteAlgebra::from_fns(3, |a, b| (a + b) % 3, |a, b| a.max(b)).unwrap();
        let text = alg.to_model_text(&["provenance: hand".to_string()]);
        assert_eq!(
            text,
            "3\n0 1 2\n1 2 0\n2 0 1\n0 1 2\n1 1 2\n2 2 2\n# provenance: hand\n"
        );
        let (back, comments) = FiniteAlgebra::parse_model_text(&text).unwrap();
        assert_eq!(back, alg);
        assert_eq!(comments, ["provenance: hand"]);
    }

    #[test]
    fn model_text_errors() {
        assert!(FiniteAlgebra::parse_model_text("").is_err());
        assert!(FiniteAlgebra::parse_model_text("2\n0 0\n0 0\n0 0\n").is_err());
        assert!(matches!(
            FiniteAlgebra::parse_model_text("2\n0 0\n0 2\n0 0\n0 0\n"),
            Err(AlgebraError::EntryOutOfRange { value: 2, size: 2 })
        ));
        assert!(FiniteAlgebra::parse_model_text("1\n0\n# c\n0\n").is_err());
    }

    #[test]
    fn isomorphism() {
        // the 2-chain with 0 and 1 swapped is the "reversed" chain
        let rev = FiniteAlgebra::from_fns(2, |a, b| a.max(b), |a, b| a.min(b)).unwrap();
        assert!(rev.is_isomorphic(&FiniteAlgebra::chain(2)));
        assert!(!rev.is_isomorphic(&FiniteAlgebra::constant(2)));
    }
}
