//! End-to-end discovery loop: enumerate, identity filter, model filter, model
//! search, triage.
//!
//! Candidates are dealt to `workers` shards by [`shard_hash`]. Work proceeds in
//! rounds: each worker takes its next batch of candidates and filters it against
//! the shared library plus the models it found itself during the round. Between
//! rounds the new models are merged into the library in worker order, skipping
//! isomorphic duplicates. Survivors are re-filtered against the final library
//! before triage, so the survivor set does not depend on the number of workers.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::algebra::{
    find_nonlattice_model_with, holds, verify_model, LibraryEntry, LibraryError, ModelLibrary, ModelSearch,
    SearchError, HARD_SIZE_CAP,
};
use crate::enumerate::{enumerate_candidates, shard_hash, EnumError, EnumSpec, Shard};
use crate::exec::Execution;
use crate::free_lattice::is_identity;
use crate::prover::{triage, ProverError, ProverLimits, TriageReport};
use crate::term::{parse_equations, Equation};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Candidates {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Enum(#[from] EnumError),
    #[error(transparent)]
    Prover(#[from] ProverError),
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub enum_spec: EnumSpec,
    /// Read candidates from this file instead of enumerating them.
    pub candidates: Option<PathBuf>,
    pub library_dir: PathBuf,
    pub model_search: ModelSearch,
    pub triage_limits: ProverLimits,
    pub triage_hints: Option<PathBuf>,
    pub workers: usize,
    pub output: PathBuf,
    /// Stop adding models once the library holds this many.
    pub max_library: Option<usize>,
    /// Candidates each worker handles between library merges.
    pub batch: usize,
    pub execution: Execution,
}

impl PipelineConfig {
    pub fn new(enum_spec: EnumSpec, library_dir: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            enum_spec,
            candidates: None,
            library_dir: library_dir.into(),
            model_search: ModelSearch::default(),
            triage_limits: ProverLimits::default(),
            triage_hints: None,
            workers: 1,
            output: output.into(),
            max_library: None,
            batch: 1024,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.check(self.candidates.is_none())
    }

    fn check(&self, enumerating: bool) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Invalid(m.to_string()));
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if self.model_search.max_size > HARD_SIZE_CAP {
            return bad(&format!("max_size must be at most {HARD_SIZE_CAP}"));
        }
        if self.enum_spec.shard != Shard::ALL {
            return bad("the pipeline assigns shards itself; leave shard unset");
        }
        if enumerating {
            self.enum_spec.validate()?;
        }
        self.triage_limits.validate()?;
        Ok(())
    }

    /// Parses `key = value` lines. Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg = PipelineConfig::new(EnumSpec::new(2..=2, 8), base, base.join("survivors.tsv"));
        let mut seen_library = false;
        let mut seen_leaves = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| PipelineError::Config { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| err(format!("{key}: not an integer: {v:?}")))
            };
            let path = |v: &str| base.join(v);
            match key {
                "leaves" => {
                    let (lo, hi) =
                        parse_range(value).ok_or_else(|| err(format!("leaves: expected LO..HI, got {value:?}")))?;
                    cfg.enum_spec.leaves = lo..=hi;
                    seen_leaves = true;
                }
                "max_vars" => cfg.enum_spec.max_vars = num(value)? as usize,
                "require_x" => {
                    cfg.enum_spec.require_x = parse_bool(value).ok_or_else(|| err(format!("bad boolean {value:?}")))?
                }
                "dual_reduce" => {
                    cfg.enum_spec.dual_reduce =
                        parse_bool(value).ok_or_else(|| err(format!("bad boolean {value:?}")))?
                }
                "candidates" => cfg.candidates = Some(path(value)),
                "library_dir" => {
                    cfg.library_dir = path(value);
                    seen_library = true;
                }
                "max_size" => cfg.model_search.max_size = num(value)? as usize,
                "budget" => cfg.model_search.budget = num(value)?,
                "max_generated" => cfg.triage_limits.max_generated = num(value)?,
                "max_weight" => cfg.triage_limits.max_weight = num(value)? as usize,
                "max_seconds" => {
                    cfg.triage_limits.max_seconds = value
                        .parse()
                        .map_err(|_| err(format!("max_seconds: not a number: {value:?}")))?
                }
                "hints" => cfg.triage_hints = Some(path(value)),
                "workers" => cfg.workers = num(value)? as usize,
                "output" => cfg.output = path(value),
                "max_library" => cfg.max_library = Some(num(value)? as usize),
                "batch" => cfg.batch = num(value)? as usize,
                "parallel" => {
                    let on = parse_bool(value).ok_or_else(|| err(format!("bad boolean {value:?}")))?;
                    cfg.execution = if on { Execution::Parallel } else { Execution::Sequential };
                }
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        if !seen_library {
            return Err(PipelineError::Invalid("library_dir is required".into()));
        }
        if !seen_leaves && cfg.candidates.is_none() {
            return Err(PipelineError::Invalid(
                "leaves is required unless candidates is given".into(),
            ));
        }
        Ok(cfg)
    }
}

/// Parses `LO..HI` or a single number.
pub fn parse_range(s: &str) -> Option<(usize, usize)> {
    match s.split_once("..") {
        Some((lo, hi)) => Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?)),
        None => {
            let v = s.trim().parse().ok()?;
            Some((v, v))
        }
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub enumerated: u64,
    pub identity_pass: u64,
    pub model_filter_pass: u64,
    pub triage_pass: u64,
    pub models_added: u64,
    pub elapsed: f64,
}

impl RunStats {
    /// enumerated >= identity_pass >= model_filter_pass >= triage_pass
    pub fn is_monotone(&self) -> bool {
        self.enumerated >= self.identity_pass
            && self.identity_pass >= self.model_filter_pass
            && self.model_filter_pass >= self.triage_pass
    }
}

/// Column names of [`stats_report`], as a comment line.
pub const STATS_HEADER: &str = "# enumerated\tidentity_pass\tmodel_filter_pass\ttriage_pass\tmodels_added\telapsed";

/// One tab-separated line: the counts in funnel order, then elapsed seconds.
pub fn stats_report(stats: &RunStats) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{:.3}",
        stats.enumerated,
        stats.identity_pass,
        stats.model_filter_pass,
        stats.triage_pass,
        stats.models_added,
        stats.elapsed
    )
}

/// Inverse of [`stats_report`]. Blank lines and `#` comments are skipped; exactly
/// one data line is expected.
pub fn parse_stats_report(text: &str) -> Result<RunStats, String> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let line = lines.next().ok_or("no stats line")?;
    if lines.next().is_some() {
        return Err("more than one stats line".into());
    }
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 6 {
        return Err(format!("expected 6 tab-separated fields, got {}", fields.len()));
    }
    let count = |i: usize| {
        fields[i]
            .parse::<u64>()
            .map_err(|_| format!("field {}: not a count: {:?}", i + 1, fields[i]))
    };
    Ok(RunStats {
        enumerated: count(0)?,
        identity_pass: count(1)?,
        model_filter_pass: count(2)?,
        triage_pass: count(3)?,
        models_added: count(4)?,
        elapsed: fields[5]
            .parse()
            .map_err(|_| format!("field 6: not a number: {:?}", fields[5]))?,
    })
}

/// A candidate that passed every filter, with its triage report.
#[derive(Clone, Debug)]
pub struct Survivor {
    pub equation: Equation,
    /// Whether the model search covered its space; `false` if it ran out of budget.
    pub search_covered: bool,
    pub report: TriageReport,
}

impl Survivor {
    pub fn to_tsv(&self) -> String {
        let search = if self.search_covered { "covered" } else { "budget" };
        format!("{}\t{}", self.report.to_tsv(), search)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub stats: RunStats,
    pub survivors: Vec<Survivor>,
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.survivors {
            writeln!(f, "{}", s.to_tsv())?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct WorkerResult {
    enumerated: u64,
    identity_pass: u64,
    survivors: Vec<(u64, Equation, bool)>,
    found: Vec<LibraryEntry>,
}

fn run_worker(batch: &[(u64, Equation)], lib: &ModelLibrary, search: &ModelSearch, can_add: bool) -> WorkerResult {
    let mut out = WorkerResult::default();
    for (index, e) in batch {
        out.enumerated += 1;
        if !is_identity(e) {
            continue;
        }
        out.identity_pass += 1;
        if lib.first_model_of(e).is_some() || out.found.iter().any(|m| holds(&m.algebra, e)) {
            continue;
        }
        match find_nonlattice_model_with(std::slice::from_ref(e), search) {
            Ok(Some(m)) => {
                if can_add {
                    out.found.push(LibraryEntry::found(m, e.clone()));
                }
            }
            Ok(None) => out.survivors.push((*index, e.clone(), true)),
            Err(SearchError::BudgetExhausted { .. }) => out.survivors.push((*index, e.clone(), false)),
            Err(SearchError::SizeTooLarge { .. }) => unreachable!("size validated with the config"),
        }
    }
    out
}

fn read_equations(path: &Path) -> Result<Vec<Equation>, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    parse_equations(&text).map_err(|(line, e)| PipelineError::Candidates {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    })
}

/// Runs the pipeline described by `cfg`, writing survivors to `cfg.output` and
/// new models to `cfg.library_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutcome, PipelineError> {
    cfg.validate()?;
    match &cfg.candidates {
        Some(path) => {
            let list = read_equations(path)?;
            run_pipeline_on(cfg, list)
        }
        None => run_stream(cfg, enumerate_candidates(&cfg.enum_spec)),
    }
}

/// Like [`run_pipeline`], with an explicit candidate list in place of enumeration.
pub fn run_pipeline_on(cfg: &PipelineConfig, candidates: Vec<Equation>) -> Result<RunOutcome, PipelineError> {
    cfg.check(false)?;
    run_stream(cfg, candidates.into_iter())
}

fn run_stream(cfg: &PipelineConfig, candidates: impl Iterator<Item = Equation>) -> Result<RunOutcome, PipelineError> {
    let started = Instant::now();
    if !cfg.library_dir.is_dir() {
        return Err(PipelineError::Io {
            path: cfg.library_dir.clone(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "library directory does not exist"),
        });
    }
    let hints = match &cfg.triage_hints {
        Some(p) => read_equations(p)?,
        None => Vec::new(),
    };
    let mut lib = ModelLibrary::load_dir(&cfg.library_dir)?;
    let mut stats = RunStats::default();
    let mut survivors: Vec<(u64, Equation, bool)> = Vec::new();
    let workers = cfg.workers as u64;
    let mut stream = candidates.enumerate().map(|(i, e)| (i as u64, e)).peekable();

    while stream.peek().is_some() {
        let mut shards: Vec<Vec<(u64, Equation)>> = vec![Vec::new(); cfg.workers];
        let round = cfg.batch * cfg.workers;
        for (i, e) in stream.by_ref().take(round) {
            let w = if workers == 1 {
                0
            } else {
                (shard_hash(&e) % workers) as usize
            };
            shards[w].push((i, e));
        }
        let can_add = cfg.max_library.is_none_or(|m| lib.len() < m);
        let results = cfg
            .execution
            .map(&shards, |batch| run_worker(batch, &lib, &cfg.model_search, can_add));
        for r in results {
            stats.enumerated += r.enumerated;
            stats.identity_pass += r.identity_pass;
            survivors.extend(r.survivors);
            for entry in r.found {
                if cfg.max_library.is_some_and(|m| lib.len() >= m) {
                    break;
                }
                if !lib.contains_iso(&entry.algebra) {
                    lib.push(entry)?;
                }
            }
        }
    }

    survivors.retain(|(_, e, _)| lib.first_model_of(e).is_none());
    survivors.sort_by_key(|(i, _, _)| *i);
    stats.model_filter_pass = survivors.len() as u64;

    let reports = cfg.execution.map(&survivors, |(_, e, _)| {
        triage(e, &cfg.triage_limits, &hints, Execution::Sequential)
    });
    let mut out = Vec::with_capacity(survivors.len());
    for ((_, equation, covered), report) in survivors.into_iter().zip(reports) {
        let report = report?;
        if report.all_found() {
            stats.triage_pass += 1;
        }
        out.push(Survivor {
            equation,
            search_covered: covered,
            report,
        });
    }

    stats.models_added = lib.save_new(&cfg.library_dir)? as u64;
    stats.elapsed = started.elapsed().as_secs_f64();
    let outcome = RunOutcome { stats, survivors: out };
    fs::write(&cfg.output, outcome.to_string()).map_err(io_error(&cfg.output))?;
    Ok(outcome)
}

/// Verdict on one library file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LibraryCheck {
    Ok,
    Unreadable(String),
    IsLattice,
    /// The model does not satisfy the candidate recorded as its trigger.
    TriggerFails,
}

impl fmt::Display for LibraryCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LibraryCheck::Ok => f.write_str("ok"),
            LibraryCheck::Unreadable(m) => write!(f, "unreadable: {m}"),
            LibraryCheck::IsLattice => f.write_str("is a lattice"),
            LibraryCheck::TriggerFails => f.write_str("does not satisfy its candidate"),
        }
    }
}

/// Re-checks every `*.model` file in `dir` by direct evaluation.
pub fn verify_library(dir: &Path) -> Result<Vec<(PathBuf, LibraryCheck)>, PipelineError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_error(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "model"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path).map_err(io_error(&path))?;
        let check = match LibraryEntry::from_model_text(&text) {
            Err(e) => LibraryCheck::Unreadable(e.to_string()),
            Ok(entry) => {
                let trigger: Vec<Equation> = entry.trigger.into_iter().collect();
                if !verify_model(&entry.algebra, &[]) {
                    LibraryCheck::IsLattice
                } else if !verify_model(&entry.algebra, &trigger) {
                    LibraryCheck::TriggerFails
                } else {
                    LibraryCheck::Ok
                }
            }
        };
        out.push((path, check));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ops::RangeInclusive;

    use crate::algebra::FiniteAlgebra;
    use crate::term::{known, parse_equation};

    fn quick(dir: &Path) -> PipelineConfig {
        let mut cfg = PipelineConfig::new(EnumSpec::new(2..=5, 3), dir, dir.join("out.tsv"));
        cfg.model_search.max_size = 3;
        cfg.triage_limits = ProverLimits {
            max_generated: 500,
            max_weight: 30,
            max_seconds: 5.0,
        };
        cfg
    }

    fn tempdir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("forge-pipeline-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn stats_line_round_trip() {
        assert_eq!(stats_report(&RunStats::default()), "0\t0\t0\t0\t0\t0.000");
        let s = RunStats {
            enumerated: 10,
            identity_pass: 4,
            model_filter_pass: 1,
            triage_pass: 0,
            models_added: 2,
            elapsed: 1.5,
        };
        let text = format!("{STATS_HEADER}\n{}\n", stats_report(&s));
        assert_eq!(parse_stats_report(&text).unwrap(), s);
        assert!(parse_stats_report("1\t2").is_err());
    }

    #[test]
    fn config_parsing() {
        let text = "# demo\nleaves = 2..6\nmax_vars = 4\nlibrary_dir = lib\nworkers = 4 # four shards\nmax_size = 3\n";
        let cfg = PipelineConfig::parse(text, Path::new("/tmp/x")).unwrap();
        assert_eq!(cfg.enum_spec.leaves, 2..=6);
        assert_eq!(cfg.enum_spec.max_vars, 4);
        assert_eq!(cfg.library_dir, Path::new("/tmp/x/lib"));
        assert_eq!(cfg.workers, 4);
        assert_eq!(cfg.model_search.max_size, 3);
        assert!(matches!(
            PipelineConfig::parse("library_dir = l\nbogus = 1\n", Path::new(".")),
            Err(PipelineError::Config { line: 2, .. })
        ));
        assert!(PipelineConfig::parse("leaves = 2..3\n", Path::new(".")).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let dir = tempdir("bad");
        let mut cfg = quick(&dir);
        cfg.workers = 0;
        assert!(matches!(run_pipeline(&cfg), Err(PipelineError::Invalid(_))));
        let mut cfg = quick(&dir);
        cfg.model_search.max_size = 6;
        assert!(matches!(run_pipeline(&cfg), Err(PipelineError::Invalid(_))));
        let cfg = quick(&dir.join("missing"));
        assert!(matches!(run_pipeline(&cfg), Err(PipelineError::Io { .. })));
    }

    #[test]
    fn empty_range_is_all_zero() {
        let dir = tempdir("empty");
        let mut cfg = quick(&dir);
        cfg.enum_spec.leaves = RangeInclusive::new(1, 0);
        let out = run_pipeline(&cfg).unwrap();
        assert_eq!(
            (out.stats.enumerated, out.stats.identity_pass, out.stats.models_added),
            (0, 0, 0)
        );
        assert!(out.survivors.is_empty());
        assert_eq!(fs::read_to_string(dir.join("out.tsv")).unwrap(), "");
    }

    #[test]
    fn small_leaves_leave_no_survivors() {
        let dir = tempdir("small");
        let out = run_pipeline(&quick(&dir)).unwrap();
        assert!(out.stats.is_monotone());
        assert!(out.stats.enumerated > 0);
        assert_eq!(out.stats.model_filter_pass, 0);
        assert!(out.stats.models_added > 0);
        for (path, check) in verify_library(&dir).unwrap() {
            assert_eq!(check, LibraryCheck::Ok, "{}", path.display());
        }
        // a second run reuses the grown library and adds nothing
        let again = run_pipeline(&quick(&dir)).unwrap();
        assert_eq!(again.stats.models_added, 0);
        assert_eq!(again.stats.model_filter_pass, 0);
    }

    #[test]
    fn candidate_list_keeps_identities_without_models() {
        let dir = tempdir("list");
        let mut cfg = quick(&dir);
        cfg.model_search.max_size = 2;
        let cands = vec![
            parse_equation("(x*y) = (y*x)").unwrap(),
            known::a1(),
            parse_equation("(x+(x*y)) = x").unwrap(),
        ];
        let out = run_pipeline_on(&cfg, cands).unwrap();
        assert_eq!(out.stats.enumerated, 3);
        assert_eq!(out.stats.identity_pass, 3);
        let kept: Vec<&Equation> = out.survivors.iter().map(|s| &s.equation).collect();
        assert_eq!(kept, vec![&known::a1()]);
        assert_eq!(out.survivors[0].report.results.len(), 8);
    }

    #[test]
    fn library_check_flags_bad_files() {
        let dir = tempdir("verify");
        let lattice = FiniteAlgebra::chain(2).to_model_text(&[]);
        fs::write(dir.join("a.model"), lattice).unwrap();
        let entry = LibraryEntry::found(FiniteAlgebra::constant(2), parse_equation("(x+y) = x").unwrap());
        fs::write(dir.join("b.model"), entry.to_model_text()).unwrap();
        fs::write(dir.join("c.model"), "2\n0 0\n").unwrap();
        let checks: Vec<LibraryCheck> = verify_library(&dir).unwrap().into_iter().map(|(_, c)| c).collect();
        assert_eq!(checks[0], LibraryCheck::IsLattice);
        assert_eq!(checks[1], LibraryCheck::TriggerFails);
        assert!(matches!(checks[2], LibraryCheck::Unreadable(_)));
    }
}
