//! Abstract syntax of the generated C subset.
//!
//! Functions are built from scalar variables, side-effect-free expressions,
//! assignments to locals, `if`/`while`, a single map-reduce `for` form over
//! array parameters, and a final `return`. Everything here is immutable data
//! shared by the liveness engines, the generator and the emitter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("unknown scalar type `{0}`")]
    UnknownType(String),
    #[error("invalid width {width} for {kind:?} type")]
    InvalidWidth { kind: TypeKind, width: u8 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeKind {
    Signed,
    Unsigned,
    Float,
}

/// An arithmetic C type: exact-width integers or `float`/`double`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ScalarType {
    kind: TypeKind,
    width: u8,
}

impl ScalarType {
    pub const I8: ScalarType = ScalarType { kind: TypeKind::Signed, width: 8 };
    pub const I16: ScalarType = ScalarType { kind: TypeKind::Signed, width: 16 };
    pub const I32: ScalarType = ScalarType { kind: TypeKind::Signed, width: 32 };
    pub const I64: ScalarType = ScalarType { kind: TypeKind::Signed, width: 64 };
    pub const U8: ScalarType = ScalarType { kind: TypeKind::Unsigned, width: 8 };
    pub const U16: ScalarType = ScalarType { kind: TypeKind::Unsigned, width: 16 };
    pub const U32: ScalarType = ScalarType { kind: TypeKind::Unsigned, width: 32 };
    pub const U64: ScalarType = ScalarType { kind: TypeKind::Unsigned, width: 64 };
    pub const F32: ScalarType = ScalarType { kind: TypeKind::Float, width: 32 };
    pub const F64: ScalarType = ScalarType { kind: TypeKind::Float, width: 64 };

    pub const INTEGERS: [ScalarType; 8] =
        [Self::I8, Self::I16, Self::I32, Self::I64, Self::U8, Self::U16, Self::U32, Self::U64];
    pub const FLOATS: [ScalarType; 2] = [Self::F32, Self::F64];

    pub fn new(kind: TypeKind, width: u8) -> Result<Self, TypeError> {
        let ok = match kind {
            TypeKind::Float => matches!(width, 32 | 64),
            TypeKind::Signed | TypeKind::Unsigned => matches!(width, 8 | 16 | 32 | 64),
        };
        if ok {
            Ok(ScalarType { kind, width })
        } else {
            Err(TypeError::InvalidWidth { kind, width })
        }
    }

    pub fn kind(self) -> TypeKind {
        self.kind
    }

    pub fn width(self) -> u8 {
        self.width
    }

    pub fn is_integer(self) -> bool {
        self.kind != TypeKind::Float
    }

    pub fn is_float(self) -> bool {
        self.kind == TypeKind::Float
    }

    pub fn is_signed(self) -> bool {
        self.kind == TypeKind::Signed
    }

    pub fn c_name(self) -> &'static str {
        match (self.kind, self.width) {
            (TypeKind::Signed, 8) => "int8_t",
            (TypeKind::Signed, 16) => "int16_t",
            (TypeKind::Signed, 32) => "int32_t",
            (TypeKind::Signed, 64) => "int64_t",
            (TypeKind::Unsigned, 8) => "uint8_t",
            (TypeKind::Unsigned, 16) => "uint16_t",
            (TypeKind::Unsigned, 32) => "uint32_t",
            (TypeKind::Unsigned, 64) => "uint64_t",
            (TypeKind::Float, 32) => "float",
            (TypeKind::Float, 64) => "double",
            _ => unreachable!("ScalarType invariant"),
        }
    }

    /// Inclusive value range of an integer type, widened to `i128`.
    pub fn int_range(self) -> Option<(i128, i128)> {
        match self.kind {
            TypeKind::Signed => {
                let half = 1i128 << (self.width - 1);
                Some((-half, half - 1))
            }
            TypeKind::Unsigned => Some((0, (1i128 << self.width) - 1)),
            TypeKind::Float => None,
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.c_name())
    }
}

impl FromStr for ScalarType {
    type Err = TypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::INTEGERS
            .iter()
            .chain(Self::FLOATS.iter())
            .copied()
            .find(|t| t.c_name() == s)
            .ok_or_else(|| TypeError::UnknownType(s.to_string()))
    }
}

impl TryFrom<String> for ScalarType {
    type Error = TypeError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ScalarType> for String {
    fn from(t: ScalarType) -> String {
        t.c_name().to_string()
    }
}

/// Variable identity: a C identifier plus an index unique within a function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarId {
    pub name: String,
    pub index: u32,
}

impl VarId {
    pub fn new(name: impl Into<String>, index: u32) -> Self {
        VarId { name: name.into(), index }
    }

    /// The index variable of every map-reduce loop. It is declared by the
    /// loop header itself and never escapes the loop.
    pub fn loop_index() -> Self {
        VarId::new("i", u32::MAX)
    }

    pub fn is_loop_index(&self) -> bool {
        self.index == u32::MAX
    }
}

impl PartialOrd for VarId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VarId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.index, &self.name).cmp(&(other.index, &other.name))
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub fn is_c_identifier(s: &str) -> bool {
    const KEYWORDS: &[&str] = &[
        "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern",
        "float", "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return", "short", "signed",
        "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while", "_Bool",
    ];
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !KEYWORDS.contains(&s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Local,
    ScalarParam,
    /// `T *q`, only ever read as `*q`.
    PointerParam,
    /// `T *arr`, only ever read as `arr[i]` inside a map-reduce loop.
    ArrayParam,
}

impl VarKind {
    pub fn is_param(self) -> bool {
        self != VarKind::Local
    }
}

/// A declared variable. For pointer and array parameters `ty` is the
/// pointee/element type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub id: VarId,
    pub ty: ScalarType,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LitValue {
    Int(i64),
    Uint(u64),
    Float(f64),
}

impl LitValue {
    pub fn is_zero(self) -> bool {
        match self {
            LitValue::Int(v) => v == 0,
            LitValue::Uint(v) => v == 0,
            LitValue::Float(v) => v == 0.0,
        }
    }

    pub fn as_i128(self) -> Option<i128> {
        match self {
            LitValue::Int(v) => Some(v as i128),
            LitValue::Uint(v) => Some(v as i128),
            LitValue::Float(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnOp {
    Neg,
    BitNot,
    LogNot,
}

impl UnOp {
    pub const ALL: [UnOp; 3] = [UnOp::Neg, UnOp::BitNot, UnOp::LogNot];

    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::BitNot => "~",
            UnOp::LogNot => "!",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
    #[serde(rename = "%")]
    Rem,
    #[serde(rename = "<<")]
    Shl,
    #[serde(rename = ">>")]
    Shr,
    #[serde(rename = "&")]
    BitAnd,
    #[serde(rename = "|")]
    BitOr,
    #[serde(rename = "^")]
    BitXor,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "&&")]
    LogAnd,
    #[serde(rename = "||")]
    LogOr,
}

impl BinOp {
    pub const ALL: [BinOp; 18] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
        BinOp::Shl,
        BinOp::Shr,
        BinOp::BitAnd,
        BinOp::BitOr,
        BinOp::BitXor,
        BinOp::Lt,
        BinOp::Gt,
        BinOp::Le,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::LogAnd,
        BinOp::LogOr,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::LogAnd => "&&",
            BinOp::LogOr => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::LogAnd | BinOp::LogOr)
    }

    /// `/` and `%`: right operand must be guarded against zero.
    pub fn is_division(self) -> bool {
        matches!(self, BinOp::Div | BinOp::Rem)
    }

    pub fn is_shift(self) -> bool {
        matches!(self, BinOp::Shl | BinOp::Shr)
    }

    /// Operators gated by the "bitwise" feature flag.
    pub fn is_bitwise(self) -> bool {
        matches!(self, BinOp::Shl | BinOp::Shr | BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor)
    }

    /// Operators that C only defines on integer operands.
    pub fn requires_integer(self) -> bool {
        self == BinOp::Rem || self.is_bitwise()
    }

    pub fn is_arithmetic(self) -> bool {
        !self.is_comparison() && !self.is_logical()
    }
}

/// Side-effect-free expression tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expr {
    Literal { value: LitValue, ty: ScalarType },
    VarRef { var: VarId },
    Unary { op: UnOp, operand: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Cast { ty: ScalarType, operand: Box<Expr> },
    Deref { pointer: VarId },
    Index { array: VarId, index: Box<Expr> },
}

impl Expr {
    pub fn var(v: &VarId) -> Expr {
        Expr::VarRef { var: v.clone() }
    }

    pub fn int(value: i64, ty: ScalarType) -> Expr {
        let value = if ty.is_signed() { LitValue::Int(value) } else { LitValue::Uint(value as u64) };
        Expr::Literal { value, ty }
    }

    pub fn unary(op: UnOp, operand: Expr) -> Expr {
        Expr::Unary { op, operand: Box::new(operand) }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn cast(ty: ScalarType, operand: Expr) -> Expr {
        Expr::Cast { ty, operand: Box::new(operand) }
    }

    pub fn index(array: &VarId, index: Expr) -> Expr {
        Expr::Index { array: array.clone(), index: Box::new(index) }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Expr::Literal { .. })
    }

    /// Nesting depth of operator nodes. Casts, the `+ c` of a division guard
    /// and the `& mask` of a shift clamp are not counted.
    pub fn op_depth(&self) -> usize {
        match self {
            Expr::Literal { .. } | Expr::VarRef { .. } | Expr::Deref { .. } => 0,
            Expr::Index { index, .. } => index.op_depth(),
            Expr::Cast { operand, .. } => operand.op_depth(),
            Expr::Unary { operand, .. } => 1 + operand.op_depth(),
            Expr::Binary { op, lhs, rhs } => {
                let rhs_depth = match (op, rhs.as_ref()) {
                    (op, Expr::Binary { op: BinOp::Add, lhs: inner, rhs: c }) if op.is_division() && c.is_literal() => {
                        inner.op_depth()
                    }
                    (op, Expr::Binary { op: BinOp::BitAnd, lhs: inner, rhs: m }) if op.is_shift() && m.is_literal() => {
                        inner.op_depth()
                    }
                    _ => rhs.op_depth(),
                };
                1 + lhs.op_depth().max(rhs_depth)
            }
        }
    }

    /// Visit this expression and every subexpression, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Literal { .. } | Expr::VarRef { .. } | Expr::Deref { .. } => {}
            Expr::Index { index, .. } => index.walk(f),
            Expr::Cast { operand, .. } | Expr::Unary { operand, .. } => operand.walk(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
        }
    }
}

/// Syntactic free variables: every variable occurring in `e`.
pub fn free_vars(e: &Expr) -> LiveSet {
    let mut out = LiveSet::new();
    e.walk(&mut |node| match node {
        Expr::VarRef { var } => {
            out.insert(var.clone());
        }
        Expr::Deref { pointer } => {
            out.insert(pointer.clone());
        }
        Expr::Index { array, .. } => {
            out.insert(array.clone());
        }
        _ => {}
    });
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stmt {
    Assign {
        target: VarId,
        rhs: Expr,
    },
    Return {
        var: VarId,
    },
    EmptyBlock,
    Sequence {
        first: Box<Stmt>,
        second: Box<Stmt>,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    /// `for (unsigned int i = 0; i < bound; i++) accumulator = accumulator op element;`
    ForMapReduce {
        accumulator: VarId,
        array: VarId,
        bound: VarId,
        op: BinOp,
        element: Expr,
    },
}

impl Stmt {
    pub fn assign(target: &VarId, rhs: Expr) -> Stmt {
        Stmt::Assign { target: target.clone(), rhs }
    }

    pub fn seq(first: Stmt, second: Stmt) -> Stmt {
        Stmt::Sequence { first: Box::new(first), second: Box::new(second) }
    }

    /// Folds a statement list into a balanced `Sequence` tree (an empty list
    /// becomes `EmptyBlock`). Balancing keeps the tree depth logarithmic in
    /// the block length.
    pub fn block(mut stmts: Vec<Stmt>) -> Stmt {
        match stmts.len() {
            0 => Stmt::EmptyBlock,
            1 => stmts.pop().unwrap(),
            n => {
                let second = stmts.split_off(n / 2);
                Stmt::seq(Stmt::block(stmts), Stmt::block(second))
            }
        }
    }

    /// The statements of a sequence tree in execution order, with
    /// `EmptyBlock`s inside sequences dropped.
    pub fn flatten(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        fn go<'a>(s: &'a Stmt, out: &mut Vec<&'a Stmt>) {
            match s {
                Stmt::Sequence { first, second } => {
                    go(first, out);
                    go(second, out);
                }
                Stmt::EmptyBlock => {}
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn children(&self) -> Vec<&Stmt> {
        match self {
            Stmt::Sequence { first, second } => vec![first, second],
            Stmt::If { then_branch, else_branch, .. } => vec![then_branch, else_branch],
            Stmt::While { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    pub fn at_path(&self, path: &StmtPath) -> Option<&Stmt> {
        let mut cur = self;
        for &step in &path.0 {
            cur = *cur.children().get(step as usize)?;
        }
        Some(cur)
    }

    pub fn at_path_mut(&mut self, path: &StmtPath) -> Option<&mut Stmt> {
        let mut cur = self;
        for &step in &path.0 {
            cur = match (cur, step) {
                (Stmt::Sequence { first, .. }, 0) => first,
                (Stmt::Sequence { second, .. }, 1) => second,
                (Stmt::If { then_branch, .. }, 0) => then_branch,
                (Stmt::If { else_branch, .. }, 1) => else_branch,
                (Stmt::While { body, .. }, 0) => body,
                _ => return None,
            };
        }
        Some(cur)
    }

    /// Visit every statement node with its path, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&StmtPath, &'a Stmt)) {
        fn go<'a>(s: &'a Stmt, path: &mut StmtPath, f: &mut impl FnMut(&StmtPath, &'a Stmt)) {
            f(path, s);
            for (i, child) in s.children().into_iter().enumerate() {
                path.0.push(i as u8);
                go(child, path, f);
                path.0.pop();
            }
        }
        go(self, &mut StmtPath::root(), f)
    }

    /// Expressions owned directly by this node (not by child statements).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match self {
            Stmt::Assign { rhs, .. } => vec![rhs],
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => vec![cond],
            Stmt::ForMapReduce { element, .. } => vec![element],
            _ => Vec::new(),
        }
    }

    /// Every variable read anywhere in this statement tree, including the
    /// implicit reads of a map-reduce loop.
    pub fn used_vars(&self) -> LiveSet {
        let mut out = LiveSet::new();
        self.walk(&mut |_, s| {
            for e in s.own_exprs() {
                out.extend(free_vars(e));
            }
            match s {
                Stmt::Return { var } => {
                    out.insert(var.clone());
                }
                Stmt::ForMapReduce { accumulator, bound, .. } => {
                    out.insert(accumulator.clone());
                    out.insert(bound.clone());
                    out.insert(VarId::loop_index());
                }
                _ => {}
            }
        });
        out
    }

    /// The equivalent `while` form of a map-reduce loop:
    /// `i = 0; while (i < N) { acc = acc op element; i = i + 1 }`.
    pub fn desugar_for(&self) -> Option<Stmt> {
        let Stmt::ForMapReduce { accumulator, bound, op, element, .. } = self else {
            return None;
        };
        let i = VarId::loop_index();
        let one = Expr::int(1, ScalarType::U32);
        let body = Stmt::seq(
            Stmt::assign(accumulator, Expr::binary(*op, Expr::var(accumulator), element.clone())),
            Stmt::assign(&i, Expr::binary(BinOp::Add, Expr::var(&i), one)),
        );
        Some(Stmt::seq(
            Stmt::assign(&i, Expr::int(0, ScalarType::U32)),
            Stmt::While { cond: Expr::binary(BinOp::Lt, Expr::var(&i), Expr::var(bound)), body: Box::new(body) },
        ))
    }
}

/// Child indices from the root of a statement tree: `Sequence` 0/1 is
/// first/second, `If` 0/1 is then/else, `While` 0 is the body.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StmtPath(pub Vec<u8>);

impl StmtPath {
    pub fn root() -> Self {
        StmtPath(Vec::new())
    }

    pub fn child(&self, i: u8) -> Self {
        let mut p = self.0.clone();
        p.push(i);
        StmtPath(p)
    }
}

impl fmt::Display for StmtPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("body")?;
        for step in &self.0 {
            write!(f, ".{step}")?;
        }
        Ok(())
    }
}

/// A place in a function: one of its initializers or a body node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    Initializer(usize),
    Body(StmtPath),
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Initializer(i) => write!(f, "init.{i}"),
            Site::Body(p) => p.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Variable>,
    pub locals: Vec<Variable>,
    /// Assignments run before the body that give live-in locals a value.
    pub initializers: Vec<Stmt>,
    pub body: Stmt,
    pub return_var: VarId,
    /// The global array-size variable `N`, present iff a map-reduce loop is.
    #[serde(default)]
    pub array_size_global: Option<VarId>,
}

impl FunctionDef {
    /// Every variable in scope, keyed by id. `N` and the loop index are
    /// reported as `uint32_t` locals.
    pub fn var_table(&self) -> BTreeMap<VarId, Variable> {
        let mut table: BTreeMap<VarId, Variable> =
            self.params.iter().chain(self.locals.iter()).map(|v| (v.id.clone(), v.clone())).collect();
        if let Some(n) = &self.array_size_global {
            table.insert(n.clone(), Variable { id: n.clone(), ty: ScalarType::U32, kind: VarKind::Local });
        }
        table
    }

    pub fn variable(&self, id: &VarId) -> Option<&Variable> {
        self.params.iter().chain(self.locals.iter()).find(|v| &v.id == id)
    }

    pub fn return_type(&self) -> Option<ScalarType> {
        if Some(&self.return_var) == self.array_size_global.as_ref() {
            return Some(ScalarType::U32);
        }
        self.variable(&self.return_var).map(|v| v.ty)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("FunctionDef serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// A finite set of variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LiveSet(BTreeSet<VarId>);

impl LiveSet {
    pub fn new() -> Self {
        LiveSet(BTreeSet::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, v: &VarId) -> bool {
        self.0.contains(v)
    }

    pub fn insert(&mut self, v: VarId) -> bool {
        self.0.insert(v)
    }

    pub fn remove(&mut self, v: &VarId) -> bool {
        self.0.remove(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = &VarId> {
        self.0.iter()
    }

    pub fn union(&self, other: &LiveSet) -> LiveSet {
        LiveSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn minus(&self, other: &LiveSet) -> LiveSet {
        LiveSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn without(&self, v: &VarId) -> LiveSet {
        let mut out = self.clone();
        out.remove(v);
        out
    }

    pub fn is_subset(&self, other: &LiveSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.iter().map(|v| v.name.as_str()).collect()
    }
}

impl Extend<VarId> for LiveSet {
    fn extend<I: IntoIterator<Item = VarId>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

impl FromIterator<VarId> for LiveSet {
    fn from_iter<I: IntoIterator<Item = VarId>>(iter: I) -> Self {
        LiveSet(iter.into_iter().collect())
    }
}

impl IntoIterator for LiveSet {
    type Item = VarId;
    type IntoIter = std::collections::btree_set::IntoIter<VarId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a LiveSet {
    type Item = &'a VarId;
    type IntoIter = std::collections::btree_set::Iter<'a, VarId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for LiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&v.name)?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str, i: u32) -> VarId {
        VarId::new(name, i)
    }

    #[test]
    fn free_vars_of_literal_is_empty() {
        assert!(free_vars(&Expr::int(5, ScalarType::I32)).is_empty());
    }

    #[test]
    fn free_vars_of_sum() {
        let (a, b) = (v("a", 0), v("b", 1));
        let e = Expr::binary(BinOp::Add, Expr::var(&a), Expr::var(&b));
        assert_eq!(free_vars(&e), [a, b].into_iter().collect());
    }

    #[test]
    fn free_vars_is_syntactic() {
        // y - y still reads y
        let y = v("y", 0);
        let e = Expr::binary(BinOp::Sub, Expr::var(&y), Expr::var(&y));
        assert_eq!(free_vars(&e), [y].into_iter().collect());
    }

    #[test]
    fn free_vars_of_deref_and_index() {
        let (q, arr, i) = (v("q0", 0), v("arr0", 1), VarId::loop_index());
        let e = Expr::binary(BinOp::Mul, Expr::Deref { pointer: q.clone() }, Expr::index(&arr, Expr::var(&i)));
        assert_eq!(free_vars(&e), [q, arr, i].into_iter().collect());
    }

    #[test]
    fn scalar_type_names_round_trip() {
        for t in ScalarType::INTEGERS.iter().chain(ScalarType::FLOATS.iter()) {
            assert_eq!(t.c_name().parse::<ScalarType>().unwrap(), *t);
        }
        assert!(ScalarType::new(TypeKind::Float, 16).is_err());
        assert!(ScalarType::new(TypeKind::Signed, 12).is_err());
        assert!("long".parse::<ScalarType>().is_err());
    }

    #[test]
    fn block_is_balanced_and_flattens_in_order() {
        let stmts: Vec<Stmt> = (0..9).map(|k| Stmt::assign(&v("x", 0), Expr::int(k, ScalarType::I32))).collect();
        let tree = Stmt::block(stmts.clone());
        let flat: Vec<Stmt> = tree.flatten().into_iter().cloned().collect();
        assert_eq!(flat, stmts);
        let mut max_path = 0;
        tree.walk(&mut |p, _| max_path = max_path.max(p.0.len()));
        assert!(max_path <= 4);
        assert_eq!(Stmt::block(Vec::new()), Stmt::EmptyBlock);
    }

    #[test]
    fn paths_resolve() {
        let x = v("x", 0);
        let tree = Stmt::block(vec![Stmt::assign(&x, Expr::int(1, ScalarType::I32)), Stmt::Return { var: x.clone() }]);
        assert!(matches!(tree.at_path(&StmtPath(vec![1])), Some(Stmt::Return { .. })));
        assert!(tree.at_path(&StmtPath(vec![2])).is_none());
        assert_eq!(StmtPath(vec![1, 0]).to_string(), "body.1.0");
    }

    #[test]
    fn op_depth_ignores_guards_and_casts() {
        let x = v("x", 0);
        let guarded = Expr::binary(
            BinOp::Div,
            Expr::var(&x),
            Expr::binary(BinOp::Add, Expr::var(&x), Expr::int(3, ScalarType::I32)),
        );
        assert_eq!(guarded.op_depth(), 1);
        assert_eq!(Expr::cast(ScalarType::I64, guarded).op_depth(), 1);
        assert_eq!(Expr::var(&x).op_depth(), 0);
    }

    #[test]
    fn identifiers() {
        assert!(is_c_identifier("v12"));
        assert!(is_c_identifier("_tmp"));
        assert!(!is_c_identifier("12v"));
        assert!(!is_c_identifier("while"));
        assert!(!is_c_identifier("a-b"));
    }
}
