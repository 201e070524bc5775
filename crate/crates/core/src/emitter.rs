//! C99 pretty-printer.
//!
//! Every unary and binary subexpression is parenthesized; only the outermost
//! pair of an assignment right-hand side or a condition is dropped. Literals
//! carry the suffix or cast that gives them exactly their AST type.

use std::fmt::Write;

use crate::ast::{BinOp, Expr, FunctionDef, LitValue, ScalarType, Stmt, TypeKind, VarKind, Variable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmitOptions {
    pub indent_width: usize,
    /// Emitted as a leading `/* ... */` comment when present.
    pub header_comment: Option<String>,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions { indent_width: 4, header_comment: None }
    }
}

/// Renders `f` as a complete translation unit.
pub fn emit_function(f: &FunctionDef, opts: &EmitOptions) -> String {
    let mut out = String::new();
    if let Some(text) = &opts.header_comment {
        out.push_str("/*\n");
        for line in text.lines() {
            // keep a stray terminator from closing the comment early
            let _ = writeln!(out, " * {}", line.replace("*/", "* /"));
        }
        out.push_str(" */\n");
    }
    out.push_str("#include <stdint.h>\n\n");
    if let Some(n) = &f.array_size_global {
        let _ = writeln!(out, "extern uint32_t {};\n", n.name);
    }
    let ret_ty = f.return_type().unwrap_or(ScalarType::I32);
    let params: Vec<String> = f.params.iter().map(param_decl).collect();
    let params = if params.is_empty() { "void".to_string() } else { params.join(", ") };
    let _ = writeln!(out, "{} {}({})\n{{", ret_ty.c_name(), f.name, params);

    let mut p = Printer { out, indent: opts.indent_width.max(1), level: 1 };
    for v in &f.locals {
        p.line(&format!("{} {};", v.ty.c_name(), v.id.name));
    }
    for init in &f.initializers {
        p.stmt(init);
    }
    p.stmt(&f.body);
    p.out.push_str("}\n");
    p.out
}

fn param_decl(v: &Variable) -> String {
    match v.kind {
        VarKind::PointerParam | VarKind::ArrayParam => format!("{} *{}", v.ty.c_name(), v.id.name),
        _ => format!("{} {}", v.ty.c_name(), v.id.name),
    }
}

struct Printer {
    out: String,
    indent: usize,
    level: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        let _ = writeln!(self.out, "{:width$}{text}", "", width = self.indent * self.level);
    }

    fn block(&mut self, s: &Stmt) {
        self.level += 1;
        self.stmt(s);
        self.level -= 1;
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Sequence { .. } => {
                for part in s.flatten() {
                    self.stmt(part);
                }
            }
            Stmt::EmptyBlock => {}
            Stmt::Assign { target, rhs } => self.line(&format!("{} = {};", target.name, top(rhs))),
            Stmt::Return { var } => self.line(&format!("return {};", var.name)),
            Stmt::If { cond, then_branch, else_branch } => {
                self.line(&format!("if ({}) {{", top(cond)));
                self.block(then_branch);
                self.line("} else {");
                self.block(else_branch);
                self.line("}");
            }
            Stmt::While { cond, body } => {
                self.line(&format!("while ({}) {{", top(cond)));
                self.block(body);
                self.line("}");
            }
            Stmt::ForMapReduce { accumulator, bound, op, element, .. } => {
                self.line(&format!("for (unsigned int i = 0; i < {}; i++) {{", bound.name));
                self.level += 1;
                let acc = &accumulator.name;
                self.line(&format!("{acc} = {acc} {} {};", op.symbol(), operand(element)));
                self.level -= 1;
                self.line("}");
            }
        }
    }
}

/// An expression in a position where no surrounding parentheses are needed.
fn top(e: &Expr) -> String {
    match e {
        Expr::Binary { op, lhs, rhs } => binary_inner(*op, lhs, rhs),
        Expr::Unary { op, operand: x } => format!("{}{}", op.symbol(), operand(x)),
        Expr::Deref { pointer } => format!("*{}", pointer.name),
        Expr::Literal { value, ty } => literal(*value, *ty),
        _ => operand(e),
    }
}

fn binary_inner(op: BinOp, lhs: &Expr, rhs: &Expr) -> String {
    format!("{} {} {}", operand(lhs), op.symbol(), operand(rhs))
}

/// An expression that can be placed next to any operator unchanged.
fn operand(e: &Expr) -> String {
    match e {
        Expr::Literal { value, ty } => {
            let text = literal(*value, *ty);
            if text.starts_with('-') {
                format!("({text})")
            } else {
                text
            }
        }
        Expr::VarRef { var } => var.name.clone(),
        // `(*q)` keeps `x / *q` from opening a comment
        Expr::Deref { pointer } => format!("(*{})", pointer.name),
        Expr::Index { array, index } => format!("{}[{}]", array.name, top(index)),
        Expr::Cast { ty, operand: x } => format!("({}){}", ty.c_name(), operand(x)),
        Expr::Unary { op, operand: x } => format!("({}{})", op.symbol(), operand(x)),
        Expr::Binary { op, lhs, rhs } => format!("({})", binary_inner(*op, lhs, rhs)),
    }
}

/// A C literal whose type is exactly `ty`.
pub fn literal(value: LitValue, ty: ScalarType) -> String {
    match (ty.kind(), ty.width(), value) {
        (TypeKind::Float, w, LitValue::Float(x)) => {
            if w == 32 {
                format!("{:?}f", x as f32)
            } else {
                format!("{x:?}")
            }
        }
        (TypeKind::Signed, 32, LitValue::Int(x)) if x == i32::MIN as i64 => "(-2147483647 - 1)".into(),
        (TypeKind::Signed, 32, LitValue::Int(x)) => x.to_string(),
        (TypeKind::Signed, 64, LitValue::Int(i64::MIN)) => "(-9223372036854775807LL - 1)".into(),
        (TypeKind::Signed, 64, LitValue::Int(x)) => format!("{x}LL"),
        (TypeKind::Unsigned, 32, LitValue::Uint(x)) => format!("{x}U"),
        (TypeKind::Unsigned, 64, LitValue::Uint(x)) => format!("{x}ULL"),
        // 8- and 16-bit values fit in an int; the cast fixes the type
        (_, _, LitValue::Int(x)) => format!("(({}){x})", ty.c_name()),
        (_, _, LitValue::Uint(x)) => format!("(({}){x})", ty.c_name()),
        (_, _, LitValue::Float(x)) => format!("(({}){x:?})", ty.c_name()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Stmt, UnOp, VarId};
    use crate::samples::fibonacci;

    fn squash(s: &str) -> String {
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn return_only() {
        let p0 = VarId::new("p0", 0);
        let f = FunctionDef {
            name: "f".into(),
            params: vec![Variable { id: p0.clone(), ty: ScalarType::I32, kind: VarKind::ScalarParam }],
            locals: vec![],
            initializers: vec![],
            body: Stmt::Return { var: p0 },
            return_var: VarId::new("p0", 0),
            array_size_global: None,
        };
        let text = emit_function(&f, &EmitOptions::default());
        assert!(squash(&text).ends_with("int32_t f(int32_t p0) { return p0; }"), "{text}");
        assert!(text.starts_with("#include <stdint.h>\n"));
    }

    #[test]
    fn fibonacci_text() {
        let text = emit_function(&fibonacci(), &EmitOptions::default());
        let expected = "\
#include <stdint.h>

int32_t fib(int32_t p0)
{
    int32_t a;
    int32_t b;
    int32_t t;
    int32_t n;
    n = p0;
    a = 0;
    b = 1;
    while (n > 0) {
        t = a + b;
        a = b;
        b = t;
        n = n - 1;
    }
    return a;
}
";
        assert_eq!(text, expected);
    }

    #[test]
    fn literals_have_exact_types() {
        assert_eq!(literal(LitValue::Int(i32::MIN as i64), ScalarType::I32), "(-2147483647 - 1)");
        assert_eq!(literal(LitValue::Int(-5), ScalarType::I64), "-5LL");
        assert_eq!(literal(LitValue::Uint(u64::MAX), ScalarType::U64), "18446744073709551615ULL");
        assert_eq!(literal(LitValue::Uint(7), ScalarType::U32), "7U");
        assert_eq!(literal(LitValue::Int(-128), ScalarType::I8), "((int8_t)-128)");
        assert_eq!(literal(LitValue::Float(1.0), ScalarType::F64), "1.0");
        assert_eq!(literal(LitValue::Float(0.5), ScalarType::F32), "0.5f");
        assert_eq!(literal(LitValue::Float(1e16), ScalarType::F32), "1e16f");
    }

    #[test]
    fn operators_never_fuse() {
        let x = VarId::new("x", 0);
        let q = VarId::new("q", 1);
        let neg = |e| Expr::unary(UnOp::Neg, e);
        assert_eq!(top(&neg(neg(Expr::var(&x)))), "-(-x)");
        let lit = Expr::Literal { value: LitValue::Int(-3), ty: ScalarType::I32 };
        assert_eq!(top(&Expr::binary(BinOp::Sub, Expr::var(&x), lit)), "x - (-3)");
        let d = Expr::binary(BinOp::Div, Expr::var(&x), Expr::Deref { pointer: q });
        assert_eq!(top(&d), "x / (*q)");
        let c = Expr::cast(ScalarType::I8, Expr::binary(BinOp::Add, Expr::var(&x), Expr::var(&x)));
        assert_eq!(top(&c), "(int8_t)(x + x)");
    }

    #[test]
    fn header_comment_cannot_escape() {
        let opts = EmitOptions { header_comment: Some("a */ b\nline two".into()), ..Default::default() };
        let text = emit_function(&fibonacci(), &opts);
        assert!(text.starts_with("/*\n * a * / b\n * line two\n */\n"));
    }
}
