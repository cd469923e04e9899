//! Command-line front end: verify single programs or run a corpus.
//!
//! Exit codes are the machine contract: 0 = SAFE, 1 = UNSAFE (or corpus
//! mismatch), 2 = UNKNOWN, 3 = usage or processing error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use mtlbmc::driver::witness::Witness;
use mtlbmc::driver::{verify, DriverConfig, Engine, Outcome, Verdict};
use mtlbmc::encoder::{encode, EncodeConfig};
use mtlbmc::frontend::{compile, UnwindConfig};

#[derive(Parser)]
#[command(
    name = "mtlbmc",
    version,
    about = "Bounded model checker for a small multi-threaded language"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify one program and print SAFE, UNSAFE or UNKNOWN.
    Verify(VerifyArgs),
    /// Verify every .mtl file of a directory against .expect sidecars.
    Corpus(CorpusArgs),
}

#[derive(Args)]
struct CommonOpts {
    /// Verification engine: cegar, monolithic or explicit.
    #[arg(long, default_value = "cegar", value_parser = Engine::from_str)]
    engine: Engine,
    /// Loop unwinding depth.
    #[arg(long, default_value_t = 4)]
    unwind: u32,
    /// Integer bit width.
    #[arg(long, default_value_t = 8)]
    int_width: u32,
    /// Refinement iteration budget.
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Recorded in stats; reserved for solver randomization (the bundled
    /// solver is deterministic).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep link candidates that program order rules out.
    #[arg(long)]
    no_link_pruning: bool,
    /// Run per-iteration self-checks and abort on any contract breach.
    #[arg(long)]
    check_invariants: bool,
}

impl CommonOpts {
    fn to_config(&self) -> DriverConfig {
        DriverConfig {
            engine: self.engine,
            unwind: UnwindConfig {
                depth: self.unwind,
                ..UnwindConfig::default()
            },
            width: self.int_width,
            max_iterations: self.max_iter,
            link_pruning: !self.no_link_pruning,
            check_invariants: self.check_invariants,
            seed: self.seed,
            ..DriverConfig::default()
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Program file.
    file: PathBuf,
    #[command(flatten)]
    common: CommonOpts,
    /// Write run statistics as JSON.
    #[arg(long, value_name = "PATH")]
    stats: Option<PathBuf>,
    /// Write the counterexample schedule as JSON (UNSAFE only).
    #[arg(long, value_name = "PATH")]
    witness: Option<PathBuf>,
    /// Dump a CNF component in DIMACS format, with a `.symbols.json`
    /// sidecar naming the interesting literals.
    #[arg(long, value_name = "PATH")]
    dump_cnf: Option<PathBuf>,
    /// Component to dump: init, flow, links, errors, sched, abstraction
    /// or full.
    #[arg(long, default_value = "full")]
    dump_component: String,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus directory; defaults to $MTL_CORPUS, then ./corpus.
    dir: Option<PathBuf>,
    #[command(flatten)]
    common: CommonOpts,
    /// Write aggregate per-file results as JSON.
    #[arg(long, value_name = "PATH")]
    stats: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Verify(args) => exit_or_report(cmd_verify(&args)),
        Command::Corpus(args) => exit_or_report(cmd_corpus(&args)),
    }
}

fn exit_or_report(result: Result<ExitCode, String>) -> ExitCode {
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(3)
        }
    }
}

fn verdict_exit(verdict: &Verdict) -> ExitCode {
    match verdict {
        Verdict::Safe => ExitCode::from(0),
        Verdict::Unsafe { .. } => ExitCode::from(1),
        Verdict::Unknown { .. } => ExitCode::from(2),
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode, String> {
    let src =
        fs::read_to_string(&args.file).map_err(|e| format!("{}: {e}", args.file.display()))?;
    let config = args.common.to_config();

    if let Some(path) = &args.dump_cnf {
        dump_cnf(&src, &config, &args.dump_component, path)?;
    }

    let outcome = verify(&src, &config).map_err(|e| e.to_string())?;
    println!("{}", outcome.verdict.name());
    if let Verdict::Unknown { reason } = &outcome.verdict {
        eprintln!("unknown: {reason}");
    }

    if let Some(path) = &args.stats {
        let json = serde_json::to_string_pretty(&outcome.stats).expect("stats always serialize");
        fs::write(path, json).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = &args.witness {
        if let Verdict::Unsafe { witness } = &outcome.verdict {
            let json = serde_json::to_string_pretty(&witness_json(witness))
                .expect("witness always serializes");
            fs::write(path, json).map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }
    Ok(verdict_exit(&outcome.verdict))
}

/// Witness file format: the violation message plus the executed steps in
/// schedule order (guard-false statements are elided).
fn witness_json(witness: &Witness) -> serde_json::Value {
    let steps: Vec<serde_json::Value> = witness
        .schedule
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.executed)
        .map(|(k, s)| {
            let mut writes = BTreeMap::new();
            if let Some(w) = &s.write {
                writes.insert(w.var.clone(), w.value);
            }
            let mut record = serde_json::json!({
                "step": k,
                "thread": s.thread,
                "statement_text": s.text,
                "writes": writes,
            });
            if !s.nondet.is_empty() {
                record["nondet"] = serde_json::json!(s.nondet);
            }
            record
        })
        .collect();
    serde_json::json!({ "message": witness.message, "steps": steps })
}

fn dump_cnf(src: &str, config: &DriverConfig, component: &str, path: &Path) -> Result<(), String> {
    let p = compile(src, &config.unwind).map_err(|e| e.to_string())?;
    let enc = encode(
        &p,
        &EncodeConfig {
            width: config.width,
            link_pruning: config.link_pruning,
        },
    );
    let clauses: Vec<Vec<satcore::Lit>> = enc
        .component_clauses(component)
        .ok_or_else(|| format!("unknown CNF component `{component}`"))?
        .cloned()
        .collect();
    let mut out = Vec::new();
    satcore::dimacs::write(&mut out, enc.num_vars, &clauses)
        .expect("writing to a buffer cannot fail");
    let mut file = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    file.write_all(&out)
        .map_err(|e| format!("{}: {e}", path.display()))?;

    // DIMACS numbers variables from 1.
    let symbols: BTreeMap<String, String> = enc
        .var_names
        .iter()
        .map(|(var, name)| ((var + 1).to_string(), name.clone()))
        .collect();
    let sidecar = path.with_extension("symbols.json");
    let json = serde_json::to_string_pretty(&symbols).expect("symbol map serializes");
    fs::write(&sidecar, json).map_err(|e| format!("{}: {e}", sidecar.display()))?;
    Ok(())
}

struct CorpusRow {
    file: String,
    expected: Option<String>,
    result: Result<Outcome, String>,
    time_ms: u64,
}

impl CorpusRow {
    fn verdict_name(&self) -> &str {
        match &self.result {
            Ok(outcome) => outcome.verdict.name(),
            Err(_) => "ERROR",
        }
    }

    fn mismatch(&self) -> bool {
        match (&self.result, &self.expected) {
            (Err(_), _) => true,
            (Ok(outcome), Some(expected)) => outcome.verdict.name() != expected,
            (Ok(_), None) => false,
        }
    }
}

fn cmd_corpus(args: &CorpusArgs) -> Result<ExitCode, String> {
    let dir = args
        .dir
        .clone()
        .or_else(|| std::env::var_os("MTL_CORPUS").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("corpus"));
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "mtl"))
        .collect();
    files.sort();

    // Read expectations up front so malformed sidecars fail fast.
    let mut expectations = Vec::new();
    for file in &files {
        expectations.push(read_expectation(file)?);
    }

    let config = args.common.to_config();
    let run_all = || -> Vec<CorpusRow> {
        files
            .par_iter()
            .zip(expectations.par_iter())
            .map(|(file, expected)| run_corpus_file(file, expected.clone(), &config))
            .collect()
    };
    let rows = match args.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| e.to_string())?
            .install(run_all),
        None => run_all(),
    };

    println!(
        "{:<32} {:>8} {:>8} {:>8} {:>6} {:>8}",
        "FILE", "VERDICT", "EXPECT", "TIME_MS", "ITER", "RATIO"
    );
    for row in &rows {
        let (iterations, ratio) = match &row.result {
            Ok(o) if o.stats.clauses_full > 0 => (
                o.stats.iterations.to_string(),
                format!(
                    "{:.2}",
                    o.stats.clauses_abstraction as f64 / o.stats.clauses_full as f64
                ),
            ),
            Ok(o) => (o.stats.iterations.to_string(), "-".to_string()),
            Err(_) => ("-".to_string(), "-".to_string()),
        };
        println!(
            "{:<32} {:>8} {:>8} {:>8} {:>6} {:>8}",
            row.file,
            row.verdict_name(),
            row.expected.as_deref().unwrap_or("-"),
            row.time_ms,
            iterations,
            ratio
        );
        if let Err(message) = &row.result {
            eprintln!("{}: {message}", row.file);
        }
    }

    if let Some(path) = &args.stats {
        let entries: Vec<serde_json::Value> = rows
            .iter()
            .map(|row| {
                let mut entry = serde_json::json!({
                    "file": row.file,
                    "verdict": row.verdict_name(),
                    "expected": row.expected,
                    "time_ms": row.time_ms,
                    "mismatch": row.mismatch(),
                });
                if let Ok(outcome) = &row.result {
                    entry["stats"] =
                        serde_json::to_value(&outcome.stats).expect("stats always serialize");
                }
                entry
            })
            .collect();
        let json = serde_json::to_string_pretty(&serde_json::json!({
            "engine": config.engine.to_string(),
            "files": entries,
        }))
        .expect("summary serializes");
        fs::write(path, json).map_err(|e| format!("{}: {e}", path.display()))?;
    }

    let mismatches: Vec<&CorpusRow> = rows.iter().filter(|r| r.mismatch()).collect();
    if mismatches.is_empty() {
        println!("{} file(s), all verdicts as expected", rows.len());
        Ok(ExitCode::from(0))
    } else {
        for row in &mismatches {
            eprintln!(
                "mismatch: {} expected {} got {}",
                row.file,
                row.expected.as_deref().unwrap_or("-"),
                row.verdict_name()
            );
        }
        Ok(ExitCode::from(1))
    }
}

/// Reads the `.expect` sidecar of a program (one line, SAFE or UNSAFE).
fn read_expectation(file: &Path) -> Result<Option<String>, String> {
    let sidecar = file.with_extension("expect");
    let text = match fs::read_to_string(&sidecar) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(format!("{}: {e}", sidecar.display())),
    };
    let verdict = text.trim();
    match verdict {
        "SAFE" | "UNSAFE" | "UNKNOWN" => Ok(Some(verdict.to_string())),
        other => Err(format!(
            "{}: expected SAFE, UNSAFE or UNKNOWN, found `{other}`",
            sidecar.display()
        )),
    }
}

fn run_corpus_file(file: &Path, expected: Option<String>, config: &DriverConfig) -> CorpusRow {
    let name = file
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| file.display().to_string());
    let started = Instant::now();
    let result = fs::read_to_string(file)
        .map_err(|e| e.to_string())
        .and_then(|src| verify(&src, config).map_err(|e| e.to_string()));
    CorpusRow {
        file: name,
        expected,
        result,
        time_ms: started.elapsed().as_millis() as u64,
    }
}
