//! Compile a corpus with an external toolchain and measure the machine code.
//!
//! Commands are shell templates with `{input}`, `{output}` and `{opt}` holes.
//! Instruction counts come from the disassembler's text output: every
//! instruction line inside a `Disassembly of section` block counts, including
//! alignment padding.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("template `{0}` must contain both {{input}} and {{output}}")]
    BadTemplate(String),
    #[error("timeout must be at least one second")]
    BadTimeout,
    #[error("compiling {path} failed ({status}):\n{stderr}")]
    CompileFailed { path: PathBuf, status: String, stderr: String },
    #[error("disassembling {path} failed ({status}):\n{stderr}")]
    DisassembleFailed { path: PathBuf, status: String, stderr: String },
    #[error("{path}: command timed out after {seconds}s")]
    Timeout { path: PathBuf, seconds: u64 },
    #[error("no .c files in {0}")]
    NoSources(PathBuf),
    #[error("cannot aggregate an empty list of files")]
    EmptyInput,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolchainConfig {
    pub compile_command: String,
    pub disassemble_command: String,
    pub optimization_flags: String,
    pub timeout_seconds: u64,
}

impl Default for ToolchainConfig {
    fn default() -> Self {
        ToolchainConfig {
            compile_command: "gcc {opt} -std=c99 -w -c {input} -o {output}".into(),
            disassemble_command: "objdump -d --no-show-raw-insn {input} > {output}".into(),
            optimization_flags: "-O3".into(),
            timeout_seconds: 60,
        }
    }
}

impl ToolchainConfig {
    /// Defaults overridden by the environment: `LIVEGEN_COMPILE_CMD` and
    /// `LIVEGEN_DISASM_CMD` replace whole templates, while `LIVEGEN_CC` and
    /// `LIVEGEN_OBJDUMP` only swap the program in the default templates.
    pub fn from_env() -> Self {
        let mut tc = ToolchainConfig::default();
        if let Ok(cc) = std::env::var("LIVEGEN_CC") {
            tc.compile_command = format!("{cc} {{opt}} -std=c99 -w -c {{input}} -o {{output}}");
        }
        if let Ok(od) = std::env::var("LIVEGEN_OBJDUMP") {
            tc.disassemble_command = format!("{od} -d --no-show-raw-insn {{input}} > {{output}}");
        }
        if let Ok(cmd) = std::env::var("LIVEGEN_COMPILE_CMD") {
            tc.compile_command = cmd;
        }
        if let Ok(cmd) = std::env::var("LIVEGEN_DISASM_CMD") {
            tc.disassemble_command = cmd;
        }
        tc
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        for t in [&self.compile_command, &self.disassemble_command] {
            if !(t.contains("{input}") && t.contains("{output}")) {
                return Err(EvalError::BadTemplate(t.clone()));
            }
        }
        if self.timeout_seconds == 0 {
            return Err(EvalError::BadTimeout);
        }
        Ok(())
    }
}

/// Single-quotes `s` for `sh`.
fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

struct Finished {
    success: bool,
    status: String,
    stderr: String,
}

/// Runs a filled-in template under `sh`, killing it after `timeout`.
fn run_template(
    template: &str,
    input: &Path,
    output: &Path,
    opt: &str,
    timeout: u64,
) -> Result<Option<Finished>, EvalError> {
    let cmd = template
        .replace("{input}", &shell_quote(&input.to_string_lossy()))
        .replace("{output}", &shell_quote(&output.to_string_lossy()))
        .replace("{opt}", opt);
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(format!("exec {cmd}"))
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()?;
    let mut pipe = child.stderr.take().expect("stderr is piped");
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = pipe.read_to_string(&mut buf);
        buf
    });
    let deadline = Instant::now() + Duration::from_secs(timeout);
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(None);
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let stderr = reader.join().unwrap_or_default();
    Ok(Some(Finished { success: status.success(), status: status.to_string(), stderr }))
}

/// Compiles `src` to `obj` and returns the wall-clock compile time.
pub fn compile_source(src: &Path, obj: &Path, tc: &ToolchainConfig) -> Result<f64, EvalError> {
    let start = Instant::now();
    match run_template(&tc.compile_command, src, obj, &tc.optimization_flags, tc.timeout_seconds)? {
        None => Err(EvalError::Timeout { path: src.to_path_buf(), seconds: tc.timeout_seconds }),
        Some(f) if !f.success => {
            Err(EvalError::CompileFailed { path: src.to_path_buf(), status: f.status, stderr: f.stderr })
        }
        Some(_) => Ok(start.elapsed().as_secs_f64()),
    }
}

/// Instruction count and distinct mnemonics of an object file.
pub fn measure_object(obj: &Path, tc: &ToolchainConfig) -> Result<(usize, BTreeSet<String>), EvalError> {
    let listing = obj.with_extension("dis");
    match run_template(&tc.disassemble_command, obj, &listing, "", tc.timeout_seconds)? {
        None => Err(EvalError::Timeout { path: obj.to_path_buf(), seconds: tc.timeout_seconds }),
        Some(f) if !f.success => {
            Err(EvalError::DisassembleFailed { path: obj.to_path_buf(), status: f.status, stderr: f.stderr })
        }
        Some(_) => {
            let text = std::fs::read_to_string(&listing)?;
            let _ = std::fs::remove_file(&listing);
            Ok(parse_disassembly(&text))
        }
    }
}

const PREFIXES: &[&str] = &[
    "rep", "repe", "repz", "repne", "repnz", "lock", "notrack", "bnd", "data16", "data32", "addr32", "addr16", "cs",
    "ds", "es", "fs", "gs", "ss", "rex", "rex.w", "xacquire", "xrelease",
];

/// Counts instruction lines in objdump-style text and collects mnemonics.
/// Lines holding only raw bytes (continuations of long encodings) and
/// undecodable `(bad)` entries are skipped; instruction prefixes such as
/// `rep` or `notrack` are not treated as mnemonics.
pub fn parse_disassembly(text: &str) -> (usize, BTreeSet<String>) {
    let mut count = 0;
    let mut ops = BTreeSet::new();
    let mut in_section = false;
    for line in text.lines() {
        if line.starts_with("Disassembly of section") {
            in_section = true;
            continue;
        }
        if !in_section {
            continue;
        }
        let Some((addr, rest)) = line.split_once(':') else { continue };
        let addr = addr.trim();
        if addr.is_empty() || !line.starts_with(' ') || !addr.chars().all(|c| c.is_ascii_hexdigit()) {
            continue;
        }
        // with raw bytes shown the instruction text is the last tab field
        let insn = rest.split('\t').map(str::trim).rfind(|f| !f.is_empty()).unwrap_or("");
        if insn.is_empty() || is_byte_dump(insn) {
            continue;
        }
        let mnemonic = insn.split_whitespace().find(|tok| !PREFIXES.contains(tok));
        match mnemonic {
            Some(m) if m != "(bad)" => {
                count += 1;
                ops.insert(m.to_string());
            }
            _ => {}
        }
    }
    (count, ops)
}

fn is_byte_dump(s: &str) -> bool {
    s.split_whitespace().all(|t| t.len() == 2 && t.chars().all(|c| c.is_ascii_hexdigit()))
}

/// Whether an x86-64 mnemonic operates on packed vector data.
pub fn is_simd_mnemonic(m: &str) -> bool {
    const PACKED: &[&str] = &[
        "padd",
        "psub",
        "pmul",
        "pand",
        "por",
        "pxor",
        "psll",
        "psrl",
        "psra",
        "pshuf",
        "punpck",
        "pcmp",
        "pmax",
        "pmin",
        "pack",
        "movdq",
        "movap",
        "movup",
        "unpck",
        "shufp",
        "pmov",
        "pinsr",
        "pextr",
        "pbroadcast",
        "pblend",
        "palign",
        "pabs",
        "psign",
        "phadd",
        "phsub",
        "pavg",
        "pmadd",
        "psad",
        "ptest",
        "vperm",
        "vinsert",
        "vextract",
        "vbroadcast",
        "vpadd",
        "vpsub",
        "vpmul",
        "vpand",
        "vpor",
        "vpxor",
        "vpsll",
        "vpsrl",
        "vpsra",
        "vpshuf",
        "vpunpck",
        "vpcmp",
        "vpmax",
        "vpmin",
        "vpack",
        "vmovdq",
        "vmovap",
        "vmovup",
        "cvtdq2p",
        "cvtps2pd",
        "cvtpd2ps",
        "cvttps2dq",
        "cvttpd2dq",
        "haddp",
        "hsubp",
    ];
    let m = m.to_ascii_lowercase();
    if PACKED.iter().any(|p| m.starts_with(p)) {
        return true;
    }
    // packed floating-point arithmetic: addps, mulpd, vaddps, ...
    let base = m.strip_prefix('v').unwrap_or(&m);
    ["add", "sub", "mul", "div", "min", "max", "sqrt", "and", "andn", "or", "xor"]
        .iter()
        .any(|op| base == format!("{op}ps") || base == format!("{op}pd"))
}

/// Non-blank lines that are not entirely comment.
pub fn lines_of_code(text: &str) -> usize {
    let mut in_block = false;
    let mut count = 0;
    for line in text.lines() {
        let mut code = false;
        let mut rest = line;
        loop {
            if in_block {
                match rest.find("*/") {
                    Some(k) => {
                        in_block = false;
                        rest = &rest[k + 2..];
                    }
                    None => break,
                }
            } else {
                let block = rest.find("/*");
                let line_comment = rest.find("//");
                match (block, line_comment) {
                    (Some(b), l) if l.is_none_or(|l| b < l) => {
                        code |= !rest[..b].trim().is_empty();
                        in_block = true;
                        rest = &rest[b + 2..];
                    }
                    (_, Some(l)) => {
                        code |= !rest[..l].trim().is_empty();
                        break;
                    }
                    _ => {
                        code |= !rest.trim().is_empty();
                        break;
                    }
                }
            }
        }
        if code {
            count += 1;
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileStats {
    pub file: String,
    pub lines_of_code: usize,
    pub instruction_count: usize,
    pub unique_opcodes: BTreeSet<String>,
    /// From the corpus manifest, when one is present.
    pub generation_seconds: Option<f64>,
    pub compile_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub total: f64,
}

impl MetricSummary {
    /// The median of an even-sized sample is the mean of the two middle
    /// values.
    pub fn of(values: &[f64]) -> Option<MetricSummary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        Some(MetricSummary { min: v[0], median, max: v[n - 1], total: v.iter().sum() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub files: usize,
    pub lines_of_code: MetricSummary,
    pub instructions: MetricSummary,
    pub unique_opcodes: MetricSummary,
    pub instructions_per_line: MetricSummary,
    pub compile_seconds: MetricSummary,
    pub opcode_union: BTreeSet<String>,
    /// Generated lines per second of generation time, when the manifest
    /// records generation times.
    pub generation_lines_per_second: Option<f64>,
}

pub fn aggregate_stats(stats: &[FileStats]) -> Result<AggregateReport, EvalError> {
    let metric = |f: &dyn Fn(&FileStats) -> f64| {
        MetricSummary::of(&stats.iter().map(f).collect::<Vec<_>>()).ok_or(EvalError::EmptyInput)
    };
    let opcode_union: BTreeSet<String> = stats.iter().flat_map(|s| s.unique_opcodes.iter().cloned()).collect();
    let generation_lines_per_second = {
        let timed: Vec<(usize, f64)> =
            stats.iter().filter_map(|s| s.generation_seconds.map(|t| (s.lines_of_code, t))).collect();
        let secs: f64 = timed.iter().map(|&(_, t)| t).sum();
        let lines: usize = timed.iter().map(|&(l, _)| l).sum();
        (timed.len() == stats.len() && secs > 0.0).then(|| lines as f64 / secs)
    };
    Ok(AggregateReport {
        files: stats.len(),
        lines_of_code: metric(&|s| s.lines_of_code as f64)?,
        instructions: metric(&|s| s.instruction_count as f64)?,
        unique_opcodes: metric(&|s| s.unique_opcodes.len() as f64)?,
        instructions_per_line: metric(&|s| s.instruction_count as f64 / s.lines_of_code.max(1) as f64)?,
        compile_seconds: metric(&|s| s.compile_seconds)?,
        opcode_union,
        generation_lines_per_second,
    })
}

/// One line of a corpus `manifest.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub seed: u64,
    pub file: String,
    pub config_hash: String,
    pub lines: usize,
    pub generation_seconds: f64,
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>, EvalError> {
    let path = dir.join("manifest.jsonl");
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| EvalError::Io(e.into())))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileFailure {
    pub file: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub toolchain: ToolchainConfig,
    pub report: Option<AggregateReport>,
    pub files: Vec<FileStats>,
    pub failures: Vec<FileFailure>,
}

/// Compiles and measures every `.c` file in `dir` with up to `jobs`
/// concurrent toolchain runs.
pub fn evaluate_corpus(dir: &Path, tc: &ToolchainConfig, jobs: usize) -> Result<EvalOutcome, EvalError> {
    tc.validate()?;
    let mut sources: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .collect();
    sources.sort();
    if sources.is_empty() {
        return Err(EvalError::NoSources(dir.to_path_buf()));
    }
    let gen_times: BTreeMap<String, f64> =
        read_manifest(dir)?.into_iter().map(|m| (m.file, m.generation_seconds)).collect();
    let scratch = tempfile::tempdir()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    let results: Vec<Result<FileStats, FileFailure>> = pool.install(|| {
        sources
            .par_iter()
            .enumerate()
            .map(|(k, src)| {
                let file = src.file_name().unwrap_or_default().to_string_lossy().into_owned();
                let fail = |e: EvalError| FileFailure { file: file.clone(), error: e.to_string() };
                let text = std::fs::read_to_string(src).map_err(|e| fail(e.into()))?;
                let obj = scratch.path().join(format!("{k}.o"));
                let compile_seconds = compile_source(src, &obj, tc).map_err(fail)?;
                let (instruction_count, unique_opcodes) = measure_object(&obj, tc).map_err(fail)?;
                let _ = std::fs::remove_file(&obj);
                Ok(FileStats {
                    lines_of_code: lines_of_code(&text),
                    instruction_count,
                    unique_opcodes,
                    generation_seconds: gen_times.get(&file).copied(),
                    compile_seconds,
                    file,
                })
            })
            .collect()
    });
    let mut files = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => files.push(s),
            Err(f) => failures.push(f),
        }
    }
    let report = if files.is_empty() { None } else { Some(aggregate_stats(&files)?) };
    Ok(EvalOutcome { toolchain: tc.clone(), report, files, failures })
}

/// Table-style CSV: one row per metric with min, median, max and total. The
/// total of the opcode row is the size of the corpus-wide union.
pub fn report_csv(r: &AggregateReport) -> String {
    let mut out = String::from("metric,min,median,max,total\n");
    let rows = [
        ("lines_of_code", r.lines_of_code, r.lines_of_code.total),
        ("instructions", r.instructions, r.instructions.total),
        ("unique_opcodes", r.unique_opcodes, r.opcode_union.len() as f64),
        ("instructions_per_line", r.instructions_per_line, r.instructions_per_line.total),
        ("compile_seconds", r.compile_seconds, r.compile_seconds.total),
    ];
    for (name, m, total) in rows {
        out.push_str(&format!("{name},{},{},{},{}\n", m.min, m.median, m.max, total));
    }
    out
}
