//! Dead-assignment mutants for cross-checking the two liveness engines.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;

use crate::ast::{free_vars, Expr, FunctionDef, LitValue, Site, Stmt, StmtPath};

/// Inserts `v = k` immediately before some body assignment `v = e` with
/// `v ∉ FV(e)`. The new assignment is overwritten before any read, so it is
/// dead, and no other assignment changes status. Returns the mutant and the
/// site of the inserted assignment, or `None` when no assignment qualifies.
pub fn insert_dead_assignment(f: &FunctionDef, seed: u64) -> Option<(FunctionDef, Site)> {
    let mut candidates: Vec<StmtPath> = Vec::new();
    f.body.walk(&mut |path, s| {
        if let Stmt::Assign { target, rhs } = s {
            if !free_vars(rhs).contains(target) {
                candidates.push(path.clone());
            }
        }
    });
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let path = candidates.choose(&mut rng)?.clone();
    let mut mutant = f.clone();
    let slot = mutant.body.at_path_mut(&path)?;
    let Stmt::Assign { target, .. } = slot else { return None };
    let ty = f.variable(target)?.ty;
    let value = if ty.is_float() {
        LitValue::Float(7.0)
    } else if ty.is_signed() {
        LitValue::Int(7)
    } else {
        LitValue::Uint(7)
    };
    let dead = Stmt::assign(target, Expr::Literal { value, ty });
    let original = std::mem::replace(slot, Stmt::EmptyBlock);
    *slot = Stmt::seq(dead, original);
    Some((mutant, Site::Body(path.child(0))))
}
