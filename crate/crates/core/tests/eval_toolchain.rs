//! Evaluation against the real compiler and disassembler.

use std::path::Path;

use livegen::eval::{compile_source, evaluate_corpus, measure_object, EvalError, ToolchainConfig};

const THREE: &str = "\t.text\n\t.globl f\nf:\n\tmovl %edi, %eax\n\taddl $1, %eax\n\tret\n";

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn counts_an_assembled_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "three.s", THREE);
    let obj = dir.path().join("three.o");
    let tc = ToolchainConfig { compile_command: "gcc -c {input} -o {output}".into(), ..ToolchainConfig::from_env() };
    compile_source(&src, &obj, &tc).unwrap();
    let (count, ops) = measure_object(&obj, &tc).unwrap();
    assert_eq!(count, 3);
    let ops: Vec<&str> = ops.iter().map(String::as_str).collect();
    assert_eq!(ops, ["add", "mov", "ret"]);
}

#[test]
fn syntax_errors_carry_compiler_output() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "bad.c", "int f(void) { return }\n");
    let err = compile_source(&src, &dir.path().join("bad.o"), &ToolchainConfig::from_env()).unwrap_err();
    match err {
        EvalError::CompileFailed { stderr, .. } => assert!(stderr.contains("error"), "{stderr}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn slow_commands_time_out() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "ok.c", "int f(int x) { return x; }\n");
    let tc = ToolchainConfig {
        compile_command: "sleep 5 # {input} {output}".into(),
        timeout_seconds: 1,
        ..ToolchainConfig::default()
    };
    let start = std::time::Instant::now();
    let err = compile_source(&src, &dir.path().join("ok.o"), &tc).unwrap_err();
    assert!(matches!(err, EvalError::Timeout { seconds: 1, .. }), "{err:?}");
    assert!(start.elapsed().as_secs() < 4);
}

#[test]
fn corpus_reports_failures_per_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.c", "int f(int x) { return x * 3; }\n");
    write(dir.path(), "b.c", "int g(void) { return }\n");
    write(dir.path(), "notes.txt", "ignored");
    let out = evaluate_corpus(dir.path(), &ToolchainConfig::from_env(), 2).unwrap();
    assert_eq!(out.files.len(), 1);
    assert_eq!(out.files[0].file, "a.c");
    assert_eq!(out.files[0].lines_of_code, 1);
    assert!(out.files[0].instruction_count >= 1);
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].file, "b.c");
    let r = out.report.unwrap();
    assert_eq!(r.files, 1);
    assert!(r.generation_lines_per_second.is_none());
}

#[test]
fn empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(evaluate_corpus(dir.path(), &ToolchainConfig::default(), 1), Err(EvalError::NoSources(_))));
}
