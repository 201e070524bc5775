//! Command-line front end: `generate`, `check`, `corpus` and `eval`.
//!
//! Exit status is 0 on success, 1 when a check or evaluation finds problems
//! and 2 for usage errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::ast::FunctionDef;
use crate::cfg::find_dead_assignments;
use crate::emitter::{emit_function, EmitOptions};
use crate::eval::{evaluate_corpus, lines_of_code, report_csv, ManifestEntry, ToolchainConfig};
use crate::generator::{generate_function, GeneratorConfig, TypeUniverse};
use crate::liveness::check_fully_live;
use crate::wellformed::well_formed;

#[derive(Parser, Debug)]
#[command(name = "livegen", version, about = "Generate random C functions without dead code")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate one C file.
    Generate(GenerateArgs),
    /// Check a serialized function for dead assignments.
    Check(CheckArgs),
    /// Generate many files and a manifest.
    Corpus(CorpusArgs),
    /// Compile a corpus and report code-size statistics.
    Eval(EvalArgs),
}

#[derive(Args, Debug, Clone)]
struct GenFlags {
    /// Use only integer types.
    #[arg(long, conflicts_with = "float_only")]
    int_only: bool,
    /// Use only floating-point variable types.
    #[arg(long)]
    float_only: bool,
    /// Disable bitwise and shift operators.
    #[arg(long)]
    no_bitwise: bool,
    /// Disable division and remainder.
    #[arg(long)]
    no_division: bool,
    /// Disable all loops.
    #[arg(long)]
    no_loops: bool,
    /// Disable map-reduce `for` loops.
    #[arg(long)]
    no_for_loops: bool,
    #[arg(long, value_name = "N")]
    max_block_stmts: Option<usize>,
    #[arg(long, value_name = "N")]
    max_stmt_depth: Option<usize>,
    #[arg(long, value_name = "N")]
    max_expr_depth: Option<usize>,
    #[arg(long, value_name = "N")]
    max_total_stmts: Option<usize>,
    #[arg(long, value_name = "P")]
    fresh_var_prob: Option<f64>,
}

impl GenFlags {
    fn config(&self, seed: u64) -> GeneratorConfig {
        let d = GeneratorConfig::default();
        GeneratorConfig {
            seed,
            max_block_stmts: self.max_block_stmts.unwrap_or(d.max_block_stmts),
            max_stmt_depth: self.max_stmt_depth.unwrap_or(d.max_stmt_depth),
            max_expr_depth: self.max_expr_depth.unwrap_or(d.max_expr_depth),
            max_total_stmts: self.max_total_stmts.unwrap_or(d.max_total_stmts),
            allow_loops: !self.no_loops,
            allow_for_loops: !self.no_for_loops,
            allow_bitwise: !self.no_bitwise,
            allow_division: !self.no_division,
            type_universe: if self.int_only {
                TypeUniverse::IntOnly
            } else if self.float_only {
                TypeUniverse::FloatOnly
            } else {
                TypeUniverse::All
            },
            fresh_var_prob: self.fresh_var_prob.unwrap_or(d.fresh_var_prob),
            ..d
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Seed; a random one is drawn and reported when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    flags: GenFlags,
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the AST as JSON.
    #[arg(long, value_name = "FILE")]
    json_out: Option<PathBuf>,
    /// Omit the configuration comment at the top of the file.
    #[arg(long)]
    no_header: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Function serialized as JSON.
    file: PathBuf,
    /// Run only the control-flow-graph oracle.
    #[arg(long, conflicts_with = "structural")]
    oracle: bool,
    /// Run only the structural checker.
    #[arg(long)]
    structural: bool,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write each AST as `prog_<seed>.json`.
    #[arg(long)]
    with_ast: bool,
    #[command(flatten)]
    flags: GenFlags,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Directory of `.c` files, optionally with a `manifest.jsonl`.
    dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "-O3", allow_hyphen_values = true)]
    opt_flags: String,
    /// Per-command timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// Write the full report as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
    /// Write the summary table as CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.cmd {
        Cmd::Generate(a) => generate(a, out, err),
        Cmd::Check(a) => check(a, out, err),
        Cmd::Corpus(a) => corpus(a, err),
        Cmd::Eval(a) => eval(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

struct Failure(i32, String);

fn usage(msg: impl ToString) -> Failure {
    Failure(2, msg.to_string())
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure(1, format!("{}: {e}", path.display()))
}

fn header(cfg: &GeneratorConfig) -> String {
    format!("livegen {}\n{}", env!("CARGO_PKG_VERSION"), cfg.summary())
}

fn build(cfg: &GeneratorConfig, with_header: bool) -> Result<(FunctionDef, String), Failure> {
    let f = generate_function(cfg).map_err(usage)?;
    let opts = EmitOptions { header_comment: with_header.then(|| header(cfg)), ..EmitOptions::default() };
    let text = emit_function(&f, &opts);
    Ok((f, text))
}

fn generate(a: GenerateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let seed = match a.seed {
        Some(s) => s,
        None => {
            let s: u64 = rand::random();
            let _ = writeln!(err, "seed: {s}");
            s
        }
    };
    let cfg = a.flags.config(seed);
    let (f, text) = build(&cfg, !a.no_header)?;
    match &a.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| io_fail(path, e))?,
        None => out.write_all(text.as_bytes()).map_err(|e| Failure(1, e.to_string()))?,
    }
    if let Some(path) = &a.json_out {
        std::fs::write(path, f.to_json()).map_err(|e| io_fail(path, e))?;
    }
    Ok(0)
}

fn check(a: CheckArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(&a.file).map_err(|e| io_fail(&a.file, e))?;
    let f = FunctionDef::from_json(&text).map_err(|e| usage(format!("{}: {e}", a.file.display())))?;
    let mut failed = false;
    let mut say = |line: String| {
        let _ = writeln!(out, "{line}");
    };
    for v in well_formed(&f) {
        failed = true;
        say(format!("ill-formed: {} at {}: {}", v.rule, v.site, v.detail));
    }
    if failed {
        return Ok(1);
    }
    if !a.oracle {
        match check_fully_live(&f) {
            Ok(live_in) => say(format!("structural: fully live, live-in {live_in}")),
            Err(violations) => {
                failed = true;
                for v in violations {
                    say(format!("structural: {} at {}", v.rule, v.location));
                }
            }
        }
    }
    if !a.structural {
        let dead = find_dead_assignments(&f);
        if dead.is_empty() {
            say("oracle: no dead assignments".to_string());
        } else {
            failed = true;
            for site in dead {
                say(format!("oracle: dead assignment at {site}"));
            }
        }
    }
    Ok(i32::from(failed))
}

fn corpus(a: CorpusArgs, err: &mut dyn Write) -> Result<i32, Failure> {
    std::fs::create_dir_all(&a.out_dir).map_err(|e| io_fail(&a.out_dir, e))?;
    let base = a.flags.config(a.seed_base);
    base.validate().map_err(usage)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Failure(1, e.to_string()))?;
    let start = Instant::now();
    let entries: Result<Vec<ManifestEntry>, Failure> = pool.install(|| {
        (0..a.count as u64)
            .into_par_iter()
            .map(|k| {
                let seed = a.seed_base.wrapping_add(k);
                let cfg = GeneratorConfig { seed, ..base.clone() };
                let t = Instant::now();
                let (f, text) = build(&cfg, true)?;
                let generation_seconds = t.elapsed().as_secs_f64();
                let file = format!("prog_{seed}.c");
                let path = a.out_dir.join(&file);
                std::fs::write(&path, &text).map_err(|e| io_fail(&path, e))?;
                if a.with_ast {
                    let path = a.out_dir.join(format!("prog_{seed}.json"));
                    std::fs::write(&path, f.to_json()).map_err(|e| io_fail(&path, e))?;
                }
                Ok(ManifestEntry {
                    seed,
                    file,
                    config_hash: cfg.config_hash(),
                    lines: lines_of_code(&text),
                    generation_seconds,
                })
            })
            .collect()
    });
    let entries = entries?;
    let manifest: String =
        entries.iter().map(|e| serde_json::to_string(e).expect("manifest entry serializes") + "\n").collect();
    let path = a.out_dir.join("manifest.jsonl");
    std::fs::write(&path, manifest).map_err(|e| io_fail(&path, e))?;
    let lines: usize = entries.iter().map(|e| e.lines).sum();
    let secs = start.elapsed().as_secs_f64();
    let _ = writeln!(
        err,
        "wrote {} files ({lines} lines) to {} in {secs:.2}s, {:.0} lines/s",
        entries.len(),
        a.out_dir.display(),
        lines as f64 / secs.max(1e-9)
    );
    Ok(0)
}

fn eval(a: EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let tc =
        ToolchainConfig { optimization_flags: a.opt_flags, timeout_seconds: a.timeout, ..ToolchainConfig::from_env() };
    tc.validate().map_err(usage)?;
    let outcome = evaluate_corpus(&a.dir, &tc, a.jobs).map_err(|e| Failure(1, e.to_string()))?;
    for f in &outcome.failures {
        let _ = writeln!(err, "{}: {}", f.file, f.error);
    }
    if let Some(r) = &outcome.report {
        let _ = write!(out, "{}", report_csv(r));
        let _ = writeln!(out, "opcode_union,{}", r.opcode_union.len());
        if let Some(tp) = r.generation_lines_per_second {
            let _ = writeln!(out, "generation_lines_per_second,{tp:.1}");
        }
        if let Some(path) = &a.csv {
            std::fs::write(path, report_csv(r)).map_err(|e| io_fail(path, e))?;
        }
    }
    if let Some(path) = &a.json {
        let json = serde_json::to_string_pretty(&outcome).expect("report serializes");
        std::fs::write(path, json).map_err(|e| io_fail(path, e))?;
    }
    let _ = writeln!(err, "{} compiled, {} failed", outcome.files.len(), outcome.failures.len());
    Ok(i32::from(!outcome.failures.is_empty()))
}
