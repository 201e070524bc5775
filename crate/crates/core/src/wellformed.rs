//! Structural and typing rules every `FunctionDef` must satisfy before the
//! liveness engines or the emitter will look at it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::ast::{
    is_c_identifier, BinOp, Expr, FunctionDef, LitValue, ScalarType, Site, Stmt, StmtPath, UnOp, VarId, VarKind,
    Variable,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WfRule {
    InvalidIdentifier,
    DuplicateVariable,
    UnknownVariable,
    AssignToParameter,
    TypeMismatch,
    IntegerOpOnFloat,
    UnguardedDivision,
    UnguardedShift,
    IndexOutsideFor,
    PointerMisuse,
    LogicalOutsideCondition,
    BadLiteral,
    MissingReturn,
    MisplacedReturn,
    InitializerNotAssign,
    ForMissingIndex,
    ForBadOperator,
    ForBadBound,
}

impl fmt::Display for WfRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("rule serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WfViolation {
    pub site: Site,
    pub rule: WfRule,
    pub detail: String,
}

impl fmt::Display for WfViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.site, self.rule, self.detail)
    }
}

/// Returns every violated invariant; an empty list means `f` is well formed.
pub fn well_formed(f: &FunctionDef) -> Vec<WfViolation> {
    let mut cx = Checker { f, table: f.var_table(), out: Vec::new() };
    cx.declarations();
    for (k, init) in f.initializers.iter().enumerate() {
        let site = Site::Initializer(k);
        match init {
            Stmt::Assign { target, rhs } => {
                cx.assign_target(&site, target);
                cx.expr(&site, rhs, Ctx::default());
            }
            _ => cx.push(&site, WfRule::InitializerNotAssign, "initializer is not an assignment"),
        }
    }
    cx.returns();
    f.body.walk(&mut |path, s| cx.stmt(path, s));
    cx.out
}

#[derive(Clone, Copy, Default)]
struct Ctx {
    condition: bool,
    for_element: bool,
}

struct Checker<'a> {
    f: &'a FunctionDef,
    table: BTreeMap<VarId, Variable>,
    out: Vec<WfViolation>,
}

impl Checker<'_> {
    fn push(&mut self, site: &Site, rule: WfRule, detail: impl Into<String>) {
        self.out.push(WfViolation { site: site.clone(), rule, detail: detail.into() });
    }

    fn declarations(&mut self) {
        let site = Site::Body(StmtPath::root());
        let mut names = BTreeSet::new();
        let mut indices = BTreeSet::new();
        let all = self.f.params.iter().chain(self.f.locals.iter()).map(|v| &v.id);
        let ids: Vec<&VarId> = all.chain(self.f.array_size_global.iter()).collect();
        for id in ids {
            if !is_c_identifier(&id.name) || id.is_loop_index() || id.name == "i" {
                self.push(&site, WfRule::InvalidIdentifier, format!("`{}`", id.name));
            }
            if !names.insert(id.name.clone()) || !indices.insert(id.index) {
                self.push(&site, WfRule::DuplicateVariable, format!("`{}`", id.name));
            }
        }
        if !is_c_identifier(&self.f.name) {
            self.push(&site, WfRule::InvalidIdentifier, format!("function `{}`", self.f.name));
        }
    }

    fn returns(&mut self) {
        let flat = self.f.body.flatten();
        let last_is_return = matches!(flat.last(), Some(Stmt::Return { .. }));
        let mut count = 0;
        self.f.body.walk(&mut |_, s| {
            if matches!(s, Stmt::Return { .. }) {
                count += 1;
            }
        });
        let site = Site::Body(StmtPath::root());
        if !last_is_return {
            self.push(&site, WfRule::MissingReturn, "body does not end in a return");
        } else if count > 1 {
            self.push(&site, WfRule::MisplacedReturn, "return before the end of the body");
        }
    }

    fn assign_target(&mut self, site: &Site, target: &VarId) {
        match self.table.get(target) {
            None => self.push(site, WfRule::UnknownVariable, format!("`{target}`")),
            Some(v) if v.kind.is_param() => self.push(site, WfRule::AssignToParameter, format!("`{target}`")),
            Some(_) if Some(target) == self.f.array_size_global.as_ref() => {
                self.push(site, WfRule::AssignToParameter, format!("global `{target}`"))
            }
            Some(_) => {}
        }
    }

    fn stmt(&mut self, path: &StmtPath, s: &Stmt) {
        let site = Site::Body(path.clone());
        match s {
            Stmt::Assign { target, rhs } => {
                self.assign_target(&site, target);
                self.expr(&site, rhs, Ctx::default());
            }
            Stmt::Return { var } => {
                if !self.table.contains_key(var) {
                    self.push(&site, WfRule::UnknownVariable, format!("`{var}`"));
                }
            }
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => {
                self.expr(&site, cond, Ctx { condition: true, ..Ctx::default() });
            }
            Stmt::ForMapReduce { accumulator, array, bound, op, element } => {
                self.assign_target(&site, accumulator);
                if self.f.array_size_global.as_ref() != Some(bound) {
                    self.push(&site, WfRule::ForBadBound, format!("`{bound}` is not the size global"));
                }
                match self.table.get(array).cloned() {
                    Some(v) if v.kind == VarKind::ArrayParam => {}
                    _ => self.push(&site, WfRule::PointerMisuse, format!("`{array}` is not an array")),
                }
                if !matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor) {
                    self.push(&site, WfRule::ForBadOperator, op.symbol());
                }
                let mut indexes_array = false;
                element.walk(&mut |e| {
                    if matches!(e, Expr::Index { array: a, .. } if a == array) {
                        indexes_array = true;
                    }
                });
                if !indexes_array {
                    self.push(&site, WfRule::ForMissingIndex, format!("no `{array}[...]` in element"));
                }
                let elem_ty = self.expr(&site, element, Ctx { for_element: true, ..Ctx::default() });
                let acc_ty = self.table.get(accumulator).map(|v| v.ty);
                if let (Some(a), Some(e)) = (acc_ty, elem_ty) {
                    if a != e {
                        self.push(&site, WfRule::TypeMismatch, format!("accumulator {a} vs element {e}"));
                    }
                    if op.requires_integer() && a.is_float() {
                        self.push(&site, WfRule::IntegerOpOnFloat, op.symbol());
                    }
                }
            }
            Stmt::EmptyBlock | Stmt::Sequence { .. } => {}
        }
    }

    /// Type-checks `e`, recording violations; `None` when no type can be
    /// assigned.
    fn expr(&mut self, site: &Site, e: &Expr, cx: Ctx) -> Option<ScalarType> {
        match e {
            Expr::Literal { value, ty } => {
                let ok = match (value, ty.int_range()) {
                    (LitValue::Float(x), None) => x.is_finite(),
                    (LitValue::Int(_), Some(_)) if !ty.is_signed() => false,
                    (LitValue::Uint(_), Some(_)) if ty.is_signed() => false,
                    (v, Some((lo, hi))) => v.as_i128().is_some_and(|x| x >= lo && x <= hi),
                    _ => false,
                };
                if !ok {
                    self.push(site, WfRule::BadLiteral, format!("{value:?} as {ty}"));
                }
                Some(*ty)
            }
            Expr::VarRef { var } => {
                if var.is_loop_index() {
                    if !cx.for_element {
                        self.push(site, WfRule::IndexOutsideFor, "loop index outside map-reduce loop");
                    }
                    return Some(ScalarType::U32);
                }
                match self.table.get(var).cloned() {
                    None => {
                        self.push(site, WfRule::UnknownVariable, format!("`{var}`"));
                        None
                    }
                    Some(v) if matches!(v.kind, VarKind::PointerParam | VarKind::ArrayParam) => {
                        self.push(site, WfRule::PointerMisuse, format!("`{var}` read as a scalar"));
                        Some(v.ty)
                    }
                    Some(v) => Some(v.ty),
                }
            }
            Expr::Deref { pointer } => match self.table.get(pointer).cloned() {
                Some(v) if v.kind == VarKind::PointerParam => Some(v.ty),
                Some(v) => {
                    self.push(site, WfRule::PointerMisuse, format!("`*{pointer}` of non-pointer"));
                    Some(v.ty)
                }
                None => {
                    self.push(site, WfRule::UnknownVariable, format!("`{pointer}`"));
                    None
                }
            },
            Expr::Index { array, index } => {
                if !cx.for_element {
                    self.push(site, WfRule::IndexOutsideFor, format!("`{array}[...]`"));
                }
                if let Some(t) = self.expr(site, index, cx) {
                    if t.is_float() {
                        self.push(site, WfRule::IntegerOpOnFloat, "floating array index");
                    }
                }
                match self.table.get(array).cloned() {
                    Some(v) if v.kind == VarKind::ArrayParam => Some(v.ty),
                    Some(v) => {
                        self.push(site, WfRule::PointerMisuse, format!("`{array}` is not an array"));
                        Some(v.ty)
                    }
                    None => {
                        self.push(site, WfRule::UnknownVariable, format!("`{array}`"));
                        None
                    }
                }
            }
            Expr::Cast { ty, operand } => {
                self.expr(site, operand, cx);
                Some(*ty)
            }
            Expr::Unary { op, operand } => {
                let t = self.expr(site, operand, cx)?;
                match op {
                    UnOp::Neg => Some(t),
                    UnOp::BitNot => {
                        if t.is_float() {
                            self.push(site, WfRule::IntegerOpOnFloat, "~");
                        }
                        Some(t)
                    }
                    UnOp::LogNot => Some(ScalarType::I32),
                }
            }
            Expr::Binary { op, lhs, rhs } => {
                let lt = self.expr(site, lhs, cx);
                let rt = self.expr(site, rhs, cx);
                if let (Some(l), Some(r)) = (lt, rt) {
                    if l != r {
                        self.push(site, WfRule::TypeMismatch, format!("{l} {} {r}", op.symbol()));
                    }
                    if op.requires_integer() && (l.is_float() || r.is_float()) {
                        self.push(site, WfRule::IntegerOpOnFloat, op.symbol());
                    }
                }
                if op.is_logical() && !cx.condition {
                    self.push(site, WfRule::LogicalOutsideCondition, op.symbol());
                }
                if op.is_division() && !is_division_guard(rhs) {
                    self.push(site, WfRule::UnguardedDivision, format!("{} without `+ c`", op.symbol()));
                }
                if op.is_shift() {
                    let width = lt.map(|t| t.width()).unwrap_or(8);
                    if !is_shift_clamp(rhs, width) {
                        self.push(site, WfRule::UnguardedShift, format!("{} amount not clamped", op.symbol()));
                    }
                }
                if op.is_comparison() || op.is_logical() {
                    Some(ScalarType::I32)
                } else {
                    lt.or(rt)
                }
            }
        }
    }
}

/// `(e + c)` for a nonzero literal `c`.
pub fn is_division_guard(rhs: &Expr) -> bool {
    matches!(rhs, Expr::Binary { op: BinOp::Add, rhs: c, .. }
        if matches!(c.as_ref(), Expr::Literal { value, .. } if !value.is_zero()))
}

/// A shift amount whose value is provably below `width`: either a literal in
/// range or `(e & k)` with a literal `0 <= k < width`.
pub fn is_shift_clamp(rhs: &Expr, width: u8) -> bool {
    let in_range = |e: &Expr| match e {
        Expr::Literal { value, .. } => value.as_i128().is_some_and(|k| (0..width as i128).contains(&k)),
        _ => false,
    };
    match rhs {
        Expr::Binary { op: BinOp::BitAnd, rhs: mask, .. } => in_range(mask),
        lit => in_range(lit),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::fibonacci;

    fn local(name: &str, index: u32, ty: ScalarType) -> Variable {
        Variable { id: VarId::new(name, index), ty, kind: VarKind::Local }
    }

    fn tiny(body: Vec<Stmt>, params: Vec<Variable>, locals: Vec<Variable>) -> FunctionDef {
        let ret = locals[0].id.clone();
        let mut stmts = body;
        stmts.push(Stmt::Return { var: ret.clone() });
        FunctionDef {
            name: "f".into(),
            params,
            locals,
            initializers: Vec::new(),
            body: Stmt::block(stmts),
            return_var: ret,
            array_size_global: None,
        }
    }

    #[test]
    fn fibonacci_is_well_formed() {
        assert_eq!(well_formed(&fibonacci()), Vec::new());
    }

    #[test]
    fn assignment_to_parameter() {
        let p = Variable { id: VarId::new("p0", 1), ty: ScalarType::I32, kind: VarKind::ScalarParam };
        let v = local("v0", 0, ScalarType::I32);
        let f = tiny(
            vec![Stmt::assign(&p.id, Expr::int(1, ScalarType::I32)), Stmt::assign(&v.id, Expr::var(&p.id))],
            vec![p],
            vec![v],
        );
        let rules: Vec<WfRule> = well_formed(&f).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![WfRule::AssignToParameter]);
    }

    #[test]
    fn unguarded_division() {
        let v = local("v0", 0, ScalarType::I32);
        let z = local("z", 1, ScalarType::I32);
        let rhs = Expr::binary(BinOp::Div, Expr::var(&v.id), Expr::var(&z.id));
        let f = tiny(vec![Stmt::assign(&v.id, rhs)], vec![], vec![v, z]);
        let rules: Vec<WfRule> = well_formed(&f).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![WfRule::UnguardedDivision]);
    }

    #[test]
    fn float_remainder_and_mismatch() {
        let v = local("v0", 0, ScalarType::F32);
        let w = local("v1", 1, ScalarType::I32);
        let rhs = Expr::binary(
            BinOp::Rem,
            Expr::var(&v.id),
            Expr::binary(BinOp::Add, Expr::var(&w.id), Expr::int(1, ScalarType::I32)),
        );
        let f = tiny(vec![Stmt::assign(&v.id, rhs)], vec![], vec![v, w]);
        let rules: BTreeSet<WfRule> = well_formed(&f).into_iter().map(|v| v.rule).collect();
        assert!(rules.contains(&WfRule::TypeMismatch));
        assert!(rules.contains(&WfRule::IntegerOpOnFloat));
    }

    #[test]
    fn shifts_need_clamp() {
        let v = local("v0", 0, ScalarType::U8);
        let raw = Expr::binary(BinOp::Shl, Expr::var(&v.id), Expr::var(&v.id));
        let clamped = Expr::binary(
            BinOp::Shl,
            Expr::var(&v.id),
            Expr::binary(BinOp::BitAnd, Expr::var(&v.id), Expr::int(7, ScalarType::U8)),
        );
        let wide_mask = Expr::binary(
            BinOp::Shl,
            Expr::var(&v.id),
            Expr::binary(BinOp::BitAnd, Expr::var(&v.id), Expr::int(8, ScalarType::U8)),
        );
        let f = tiny(
            vec![Stmt::assign(&v.id, raw), Stmt::assign(&v.id, clamped), Stmt::assign(&v.id, wide_mask)],
            vec![],
            vec![v],
        );
        let rules: Vec<WfRule> = well_formed(&f).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![WfRule::UnguardedShift, WfRule::UnguardedShift]);
    }

    #[test]
    fn logical_ops_only_in_conditions() {
        let v = local("v0", 0, ScalarType::I32);
        let both = Expr::binary(BinOp::LogAnd, Expr::var(&v.id), Expr::var(&v.id));
        let f = tiny(
            vec![
                Stmt::If {
                    cond: both.clone(),
                    then_branch: Box::new(Stmt::assign(&v.id, Expr::int(1, ScalarType::I32))),
                    else_branch: Box::new(Stmt::assign(&v.id, Expr::int(2, ScalarType::I32))),
                },
                Stmt::assign(&v.id, both),
            ],
            vec![],
            vec![v],
        );
        let rules: Vec<WfRule> = well_formed(&f).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![WfRule::LogicalOutsideCondition]);
    }

    #[test]
    fn return_must_be_last() {
        let v = local("v0", 0, ScalarType::I32);
        let mut f = tiny(vec![], vec![], vec![v.clone()]);
        f.body =
            Stmt::block(vec![Stmt::Return { var: v.id.clone() }, Stmt::assign(&v.id, Expr::int(1, ScalarType::I32))]);
        let rules: Vec<WfRule> = well_formed(&f).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![WfRule::MissingReturn]);
    }

    #[test]
    fn index_only_inside_for() {
        let v = local("v0", 0, ScalarType::I32);
        let arr = Variable { id: VarId::new("arr0", 1), ty: ScalarType::I32, kind: VarKind::ArrayParam };
        let rhs = Expr::index(&arr.id, Expr::int(0, ScalarType::U32));
        let f = tiny(vec![Stmt::assign(&v.id, rhs)], vec![arr], vec![v]);
        let rules: Vec<WfRule> = well_formed(&f).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![WfRule::IndexOutsideFor]);
    }

    #[test]
    fn literal_range_checked() {
        let v = local("v0", 0, ScalarType::I8);
        let f = tiny(
            vec![Stmt::assign(&v.id, Expr::Literal { value: LitValue::Int(300), ty: ScalarType::I8 })],
            vec![],
            vec![v],
        );
        let rules: Vec<WfRule> = well_formed(&f).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![WfRule::BadLiteral]);
    }
}
