//! Small hand-written functions used as fixtures and golden inputs.

use crate::ast::{BinOp, Expr, FunctionDef, ScalarType, Stmt, VarId, VarKind, Variable};

fn var(name: &str, index: u32, ty: ScalarType, kind: VarKind) -> Variable {
    Variable { id: VarId::new(name, index), ty, kind }
}

/// The iterative Fibonacci function:
///
/// ```c
/// a = 0; b = 1;
/// while (n > 0) { t = a + b; a = b; b = t; n = n - 1; }
/// return a;
/// ```
///
/// `n` is decremented, so it is a local copied from the parameter `p0` by an
/// initializer; the body itself is exactly the loop above.
pub fn fibonacci() -> FunctionDef {
    let int = ScalarType::I32;
    let a = var("a", 0, int, VarKind::Local);
    let b = var("b", 1, int, VarKind::Local);
    let t = var("t", 2, int, VarKind::Local);
    let n = var("n", 3, int, VarKind::Local);
    let p0 = var("p0", 4, int, VarKind::ScalarParam);
    let (a_, b_, t_, n_) = (&a.id, &b.id, &t.id, &n.id);

    let loop_body = Stmt::block(vec![
        Stmt::assign(t_, Expr::binary(BinOp::Add, Expr::var(a_), Expr::var(b_))),
        Stmt::assign(a_, Expr::var(b_)),
        Stmt::assign(b_, Expr::var(t_)),
        Stmt::assign(n_, Expr::binary(BinOp::Sub, Expr::var(n_), Expr::int(1, int))),
    ]);
    let body = Stmt::block(vec![
        Stmt::assign(a_, Expr::int(0, int)),
        Stmt::assign(b_, Expr::int(1, int)),
        Stmt::While { cond: Expr::binary(BinOp::Gt, Expr::var(n_), Expr::int(0, int)), body: Box::new(loop_body) },
        Stmt::Return { var: a_.clone() },
    ]);
    FunctionDef {
        name: "fib".into(),
        params: vec![p0.clone()],
        locals: vec![a.clone(), b, t, n.clone()],
        initializers: vec![Stmt::assign(&n.id, Expr::var(&p0.id))],
        body,
        return_var: a.id,
        array_size_global: None,
    }
}

/// `x = a; x = b; return x;` where the first assignment is dead.
pub fn double_assignment() -> FunctionDef {
    let int = ScalarType::I32;
    let x = var("x", 0, int, VarKind::Local);
    let a = var("a", 1, int, VarKind::ScalarParam);
    let b = var("b", 2, int, VarKind::ScalarParam);
    let body = Stmt::block(vec![
        Stmt::assign(&x.id, Expr::var(&a.id)),
        Stmt::assign(&x.id, Expr::var(&b.id)),
        Stmt::Return { var: x.id.clone() },
    ]);
    FunctionDef {
        name: "f".into(),
        params: vec![a, b],
        locals: vec![x.clone()],
        initializers: Vec::new(),
        body,
        return_var: x.id,
        array_size_global: None,
    }
}
