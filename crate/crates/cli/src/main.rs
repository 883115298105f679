use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use forge_core::algebra::{
    counterexample, find_nonlattice_model_with, is_lattice, model_filter, FiniteAlgebra, ModelLibrary, ModelSearch,
    SearchError,
};
use forge_core::enumerate::{count_candidates, enumerate_candidates, EnumSpec, DEFAULT_COUNT_BUDGET};
use forge_core::free_lattice::is_identity;
use forge_core::kernel::{all_ok, check_derivation, locate_targets, Derivation};
use forge_core::pipeline::{
    parse_range, parse_stats_report, run_pipeline, stats_report, verify_library, LibraryCheck, PipelineConfig,
    STATS_HEADER,
};
use forge_core::prover::{prove, triage, ProofOutcome, ProverConfig, ProverLimits};
use forge_core::term::{parse_equation, parse_equations};
use forge_core::{Equation, Execution};

#[derive(Parser)]
#[command(
    name = "forge",
    version,
    about = "Search for and verify single equational axioms of lattice theory"
)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write candidate equations `alpha = x`, one per line.
    Enumerate(EnumerateArgs),
    /// Keep the equations on standard input that are lattice identities.
    FilterIdentity {
        /// Keep the non-identities instead.
        #[arg(long)]
        invert: bool,
    },
    /// Keep the equations on standard input that hold in no library model.
    FilterModels {
        #[arg(long, env = "FORGE_LIBRARY")]
        library: PathBuf,
    },
    /// Search for a nonlattice satisfying every constraint.
    FindModel {
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        #[arg(long)]
        constraints: PathBuf,
        /// Maximum number of cell assignments.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Check that a model file is a nonlattice satisfying the constraints.
    VerifyModel {
        file: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
    },
    /// Check a derivation step by step and locate the targets in it.
    CheckProof {
        file: PathBuf,
        #[arg(long)]
        axioms: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        /// Print the verdict for every step.
        #[arg(long)]
        verbose: bool,
    },
    /// Search for a derivation of the targets and print it in proof-file format.
    Prove {
        #[arg(long)]
        axioms: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        hints: Option<PathBuf>,
        #[command(flatten)]
        limits: LimitArgs,
        /// Write the proof here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Try to derive each lattice axiom from each candidate.
    Triage {
        /// Candidate file, or `-` for standard input.
        #[arg(long, default_value = "-")]
        candidates: String,
        #[arg(long)]
        hints: Option<PathBuf>,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Re-check every model in a library directory.
    VerifyLibrary {
        #[arg(long, env = "FORGE_LIBRARY")]
        library: PathBuf,
    },
    /// Run the whole discovery loop from a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Override the worker count of the config.
        #[arg(long)]
        workers: Option<usize>,
        /// Stop adding models once the library holds this many.
        #[arg(long)]
        max_library: Option<usize>,
        /// Also write the stats line here.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Summarize a stats line written by `pipeline`.
    Stats {
        /// Stats file, or `-` for standard input.
        #[arg(default_value = "-")]
        file: String,
    },
}

#[derive(Args)]
struct EnumerateArgs {
    /// Leaf counts of `alpha`, as `LO..HI` or a single number.
    #[arg(long, value_parser = leaf_range)]
    leaves: (usize, usize),
    #[arg(long, default_value_t = 8)]
    max_vars: usize,
    /// Also emit candidates in which `x` does not occur on the left.
    #[arg(long)]
    allow_x_absent: bool,
    /// Keep one equation of each meet/join dual pair.
    #[arg(long)]
    dual_reduce: bool,
    /// Emit only shard `I` of `N`.
    #[arg(long, value_parser = shard)]
    shard: Option<(u64, u64)>,
    /// Print the number of candidates instead of the candidates.
    #[arg(long)]
    count: bool,
    /// Give up counting after this many candidates.
    #[arg(long, default_value_t = DEFAULT_COUNT_BUDGET)]
    count_budget: u64,
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long)]
    max_generated: Option<u64>,
    #[arg(long)]
    max_weight: Option<usize>,
    #[arg(long)]
    max_seconds: Option<f64>,
}

impl LimitArgs {
    fn limits(&self) -> ProverLimits {
        let mut l = ProverLimits::default();
        if let Some(g) = self.max_generated {
            l.max_generated = g;
        }
        if let Some(w) = self.max_weight {
            l.max_weight = w;
        }
        if let Some(s) = self.max_seconds {
            l.max_seconds = s;
        }
        l
    }
}

fn leaf_range(s: &str) -> Result<(usize, usize), String> {
    parse_range(s).ok_or_else(|| format!("expected LO..HI or N, got {s:?}"))
}

fn shard(s: &str) -> Result<(u64, u64), String> {
    let (i, n) = s.split_once('/').ok_or_else(|| format!("expected I/N, got {s:?}"))?;
    let i = i.trim().parse().map_err(|_| format!("bad shard index {i:?}"))?;
    let n = n.trim().parse().map_err(|_| format!("bad shard count {n:?}"))?;
    Ok((i, n))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_equations(path: &Path) -> Result<Vec<Equation>> {
    let text = read_text(path)?;
    parse_equations(&text).map_err(|(line, e)| anyhow!("{}: line {line}: {e}", path.display()))
}

/// Equations from standard input, one per line, skipping blanks and `#` comments.
fn stdin_equations() -> impl Iterator<Item = Result<Equation>> {
    io::stdin()
        .lock()
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(anyhow!(e).context("reading standard input"))),
            Ok(l) => {
                let l = l.trim();
                if l.is_empty() || l.starts_with('#') {
                    return None;
                }
                Some(parse_equation(l).map_err(|e| anyhow!("standard input: line {}: {e}", i + 1)))
            }
        })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match run(cli.command, exec) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("forge: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, exec: Execution) -> Result<ExitCode> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = match command {
        Command::Enumerate(args) => {
            let mut spec = EnumSpec::new(args.leaves.0..=args.leaves.1, args.max_vars);
            spec.require_x = !args.allow_x_absent;
            spec.dual_reduce = args.dual_reduce;
            if let Some((i, n)) = args.shard {
                spec = spec.with_shard(i, n);
            }
            spec.validate()?;
            if args.count {
                writeln!(out, "{}", count_candidates(&spec, args.count_budget)?)?;
            } else {
                for e in enumerate_candidates(&spec) {
                    writeln!(out, "{e}")?;
                }
            }
            ExitCode::SUCCESS
        }
        Command::FilterIdentity { invert } => {
            for e in stdin_equations() {
                let e = e?;
                if is_identity(&e) != invert {
                    writeln!(out, "{e}")?;
                }
            }
            ExitCode::SUCCESS
        }
        Command::FilterModels { library } => {
            let lib = ModelLibrary::load_dir(&library)?;
            let mut error = None;
            let input = stdin_equations().map_while(|r| r.map_err(|e| error = Some(e)).ok());
            for e in model_filter(input, &lib) {
                writeln!(out, "{e}")?;
            }
            if let Some(e) = error {
                return Err(e);
            }
            ExitCode::SUCCESS
        }
        Command::FindModel {
            max_size,
            constraints,
            budget,
        } => {
            let cs = read_equations(&constraints)?;
            let mut cfg = ModelSearch {
                max_size,
                ..ModelSearch::default()
            };
            if let Some(b) = budget {
                cfg.budget = b;
            }
            match find_nonlattice_model_with(&cs, &cfg) {
                Ok(Some(m)) => {
                    write!(out, "{}", m.to_model_text(&[]))?;
                    ExitCode::SUCCESS
                }
                Ok(None) => {
                    writeln!(out, "none")?;
                    ExitCode::from(1)
                }
                Err(e @ SearchError::BudgetExhausted { .. }) => {
                    writeln!(out, "unknown")?;
                    out.flush()?;
                    eprintln!("forge: {e}");
                    ExitCode::from(3)
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::VerifyModel { file, constraints } => {
            let (alg, _) = FiniteAlgebra::parse_model_text(&read_text(&file)?)
                .with_context(|| format!("parsing {}", file.display()))?;
            let cs = read_equations(&constraints)?;
            let mut ok = true;
            for c in &cs {
                if let Some(a) = counterexample(&alg, c) {
                    let shown: Vec<String> = a
                        .iter()
                        .map(|(v, x)| format!("{}={x}", forge_core::Term::Var(*v)))
                        .collect();
                    writeln!(out, "fails {c} at {}", shown.join(" "))?;
                    ok = false;
                }
            }
            if is_lattice(&alg) {
                writeln!(out, "is a lattice")?;
                ok = false;
            }
            if ok {
                writeln!(out, "ok")?;
            }
            exit_if(ok)
        }
        Command::CheckProof {
            file,
            axioms,
            targets,
            verbose,
        } => {
            let d = Derivation::parse(&read_text(&file)?).with_context(|| format!("parsing {}", file.display()))?;
            let axioms = read_equations(&axioms)?;
            let targets = read_equations(&targets)?;
            let verdicts = check_derivation(&d, &axioms);
            let failed = verdicts.iter().filter(|v| !v.is_ok()).count();
            for (s, v) in d.steps.iter().zip(&verdicts) {
                if verbose || !v.is_ok() {
                    writeln!(out, "{}\t{v}", s.id)?;
                }
            }
            writeln!(out, "steps: {} ok, {failed} failed", verdicts.len() - failed)?;
            let located = locate_targets(&d, &targets);
            for (t, at) in targets.iter().zip(&located) {
                match at {
                    Some(id) => writeln!(out, "target {t}: line {id}")?,
                    None => writeln!(out, "target {t}: not found")?,
                }
            }
            exit_if(all_ok(&verdicts) && located.iter().all(Option::is_some))
        }
        Command::Prove {
            axioms,
            targets,
            hints,
            limits,
            output,
        } => {
            let axioms = read_equations(&axioms)?;
            let mut cfg = ProverConfig::new(read_equations(&targets)?);
            if let Some(h) = hints {
                cfg.hints = read_equations(&h)?;
            }
            match prove(&axioms, &cfg, &limits.limits())? {
                ProofOutcome::Found { derivation, stats } => {
                    match output {
                        Some(p) => {
                            fs::write(&p, derivation.to_text()).with_context(|| format!("writing {}", p.display()))?
                        }
                        None => write!(out, "{}", derivation.to_text())?,
                    }
                    eprintln!(
                        "found: {} generated, {} kept, {} given",
                        stats.generated, stats.kept, stats.given
                    );
                    ExitCode::SUCCESS
                }
                ProofOutcome::NotFound { limit, found, stats } => {
                    let reached = found.iter().filter(|&&f| f).count();
                    eprintln!(
                        "not found: stopped at {limit} after {} generated; {reached} of {} targets reached",
                        stats.generated,
                        found.len()
                    );
                    ExitCode::from(1)
                }
            }
        }
        Command::Triage {
            candidates,
            hints,
            limits,
        } => {
            let hints = match hints {
                Some(h) => read_equations(&h)?,
                None => Vec::new(),
            };
            let limits = limits.limits();
            let list: Box<dyn Iterator<Item = Result<Equation>>> = if candidates == "-" {
                Box::new(stdin_equations())
            } else {
                Box::new(read_equations(Path::new(&candidates))?.into_iter().map(Ok))
            };
            for e in list {
                let report = triage(&e?, &limits, &hints, exec)?;
                writeln!(out, "{}", report.to_tsv())?;
                out.flush()?;
            }
            ExitCode::SUCCESS
        }
        Command::VerifyLibrary { library } => {
            let checks = verify_library(&library)?;
            let mut ok = true;
            for (path, check) in &checks {
                writeln!(out, "{}\t{check}", path.display())?;
                ok &= *check == LibraryCheck::Ok;
            }
            writeln!(out, "{} models checked", checks.len())?;
            exit_if(ok)
        }
        Command::Pipeline {
            config,
            workers,
            max_library,
            stats,
        } => {
            let base = config.parent().unwrap_or(Path::new("."));
            let mut cfg = PipelineConfig::parse(&read_text(&config)?, base)
                .with_context(|| format!("in {}", config.display()))?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if max_library.is_some() {
                cfg.max_library = max_library;
            }
            if exec == Execution::Sequential {
                cfg.execution = exec;
            }
            let outcome = run_pipeline(&cfg)?;
            let report = format!("{STATS_HEADER}\n{}\n", stats_report(&outcome.stats));
            if let Some(p) = stats {
                fs::write(&p, &report).with_context(|| format!("writing {}", p.display()))?;
            }
            write!(out, "{report}")?;
            ExitCode::SUCCESS
        }
        Command::Stats { file } => {
            let text = if file == "-" {
                io::read_to_string(io::stdin()).context("reading standard input")?
            } else {
                read_text(Path::new(&file))?
            };
            let s = parse_stats_report(&text).map_err(|e| anyhow!("{file}: {e}"))?;
            writeln!(out, "enumerated         {}", s.enumerated)?;
            writeln!(out, "identity_pass      {}", s.identity_pass)?;
            writeln!(out, "model_filter_pass  {}", s.model_filter_pass)?;
            writeln!(out, "triage_pass        {}", s.triage_pass)?;
            writeln!(out, "models_added       {}", s.models_added)?;
            writeln!(out, "elapsed            {:.3}s", s.elapsed)?;
            if !s.is_monotone() {
                bail!("funnel counts are not monotone");
            }
            ExitCode::SUCCESS
        }
    };
    out.flush()?;
    Ok(code)
}

fn exit_if(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
