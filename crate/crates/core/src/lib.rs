//! Liveness-driven random generation of C functions.
//!
//! Functions are generated backwards from their `return` statement while a
//! structural liveness analysis runs alongside, so every assignment in the
//! output is live by construction. Two independent liveness engines check
//! the result, an emitter prints C99, and an evaluation harness measures the
//! machine code an external compiler produces for a corpus.

pub mod ast;
pub mod cfg;
pub mod cli;
pub mod emitter;
pub mod eval;
pub mod generator;
pub mod liveness;
pub mod mutate;
pub mod samples;
pub mod wellformed;

pub use ast::{
    free_vars, BinOp, Expr, FunctionDef, LiveSet, ScalarType, Site, Stmt, StmtPath, UnOp, VarId, VarKind, Variable,
};
pub use cfg::{build_cfg, find_dead_assignments, solve_liveness};
pub use emitter::{emit_function, EmitOptions};
pub use generator::{generate_function, GenError, GeneratorConfig, TypeUniverse};
pub use liveness::{check_fully_live, live_in, transfer_assign, LivenessRule, LivenessViolation};
pub use wellformed::{well_formed, WfRule, WfViolation};
