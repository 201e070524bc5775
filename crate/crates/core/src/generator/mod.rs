//! Backward, liveness-driven generation of random functions.
//!
//! Generation starts at `return v` with live set `{v}` and prepends
//! statements one at a time. Each new statement is chosen against the live
//! set of the code after it, so every assignment targets a live variable and
//! the live set is updated with the same rules the structural checker uses.
//! Loops pick a body live-out up front (`B'`), generate the body against it
//! and then repair the body so the loop's least fixed point really contains
//! every variable that was assumed live.

mod config;

pub use config::{ConfigError, GeneratorConfig, LiteralRanges, OpWeights, StmtWeights, TypeUniverse};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Geometric};
use rand_xoshiro::Xoshiro256StarStar;
use thiserror::Error;

use crate::ast::{
    free_vars, BinOp, Expr, FunctionDef, LitValue, LiveSet, ScalarType, Stmt, UnOp, VarId, VarKind, Variable,
};
use crate::liveness::{derive, transfer_assign};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    Config(#[from] ConfigError),
}

/// A generated function together with the live-in set the generator
/// tracked for its body.
#[derive(Clone, Debug)]
pub struct Generated {
    pub function: FunctionDef,
    pub body_live_in: LiveSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Assign,
    If,
    While,
    ForMapReduce,
}

/// What a generated condition must read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Needs {
    Nothing,
    AnyVar,
    Local,
}

#[derive(Clone, Copy)]
enum ExprOp {
    Unary(UnOp),
    Binary(BinOp),
}

/// Size-`B'` draws are geometric with this success probability.
const BPRIME_P: f64 = 0.4;
const BPRIME_MAX: usize = 4;
const MAX_REDRAWS: usize = 8;

/// Generate one function from `cfg`. Equal configurations give equal output.
pub fn generate_function(cfg: &GeneratorConfig) -> Result<FunctionDef, GenError> {
    Ok(GenState::new(cfg)?.generate().function)
}

pub struct GenState<'c> {
    cfg: &'c GeneratorConfig,
    rng: Xoshiro256StarStar,
    pool: Vec<Variable>,
    next_index: u32,
    /// Name counters for locals, scalar params, pointer params and arrays.
    counters: [u32; 4],
    size_global: Option<VarId>,
    types: Vec<ScalarType>,
    budget: usize,
    depth: usize,
}

impl<'c> GenState<'c> {
    pub fn new(cfg: &'c GeneratorConfig) -> Result<Self, GenError> {
        cfg.validate()?;
        Ok(GenState {
            cfg,
            rng: Xoshiro256StarStar::seed_from_u64(cfg.seed),
            pool: Vec::new(),
            next_index: 0,
            counters: [0; 4],
            size_global: None,
            types: cfg.type_universe.types(),
            budget: cfg.max_total_stmts,
            depth: 0,
        })
    }

    /// Remaining statement budget.
    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn generate(mut self) -> Generated {
        let ret_ty = self.random_type();
        let ret = self.fresh_var(VarKind::Local, ret_ty);
        let mut rev = vec![Stmt::Return { var: ret.clone() }];
        let mut live: LiveSet = [ret.clone()].into_iter().collect();
        while !live.is_empty() && self.budget > 0 {
            let before = rev.len();
            live = self.fill_block(&mut rev, live, self.cfg.max_block_stmts);
            if rev.len() == before {
                break;
            }
        }
        rev.reverse();
        let body = Stmt::block(rev);
        let function = self.finalize_function(body, ret, &live);
        Generated { function, body_live_in: live }
    }

    // ---- variables ----

    fn fresh_var(&mut self, kind: VarKind, ty: ScalarType) -> VarId {
        let slot = match kind {
            VarKind::Local => 0,
            VarKind::ScalarParam => 1,
            VarKind::PointerParam => 2,
            VarKind::ArrayParam => 3,
        };
        let prefix = ["v", "p", "q", "arr"][slot];
        let id = VarId::new(format!("{prefix}{}", self.counters[slot]), self.next_index);
        self.counters[slot] += 1;
        self.next_index += 1;
        self.pool.push(Variable { id: id.clone(), ty, kind });
        id
    }

    fn size_global(&mut self) -> VarId {
        if let Some(n) = &self.size_global {
            return n.clone();
        }
        let n = VarId::new("N", self.next_index);
        self.next_index += 1;
        self.size_global = Some(n.clone());
        n
    }

    fn lookup(&self, id: &VarId) -> Option<&Variable> {
        self.pool.iter().find(|v| &v.id == id)
    }

    fn ty_of(&self, id: &VarId) -> ScalarType {
        self.lookup(id).map(|v| v.ty).unwrap_or(ScalarType::U32)
    }

    fn is_local(&self, id: &VarId) -> bool {
        self.lookup(id).is_some_and(|v| v.kind == VarKind::Local)
    }

    fn locals_in(&self, live: &LiveSet) -> Vec<VarId> {
        live.iter().filter(|v| self.is_local(v)).cloned().collect()
    }

    fn random_type(&mut self) -> ScalarType {
        *self.types.choose(&mut self.rng).expect("type universe is nonempty")
    }

    /// An integer type for operators that need one. Float-only programs
    /// still use `int32_t`/`int64_t` casts here.
    fn random_int_type(&mut self) -> ScalarType {
        let ints: Vec<ScalarType> = self.types.iter().copied().filter(|t| t.is_integer()).collect();
        if ints.is_empty() {
            *[ScalarType::I32, ScalarType::I64].choose(&mut self.rng).unwrap()
        } else {
            *ints.choose(&mut self.rng).unwrap()
        }
    }

    fn choose_weighted<T: Copy>(&mut self, items: &[(T, u32)]) -> Option<T> {
        let total: u64 = items.iter().map(|&(_, w)| w as u64).sum();
        if total == 0 {
            return None;
        }
        let mut x = self.rng.random_range(0..total);
        for &(item, w) in items {
            if x < w as u64 {
                return Some(item);
            }
            x -= w as u64;
        }
        unreachable!("weights sum to total")
    }

    // ---- statements ----

    fn pick_stmt_kind(&mut self, live: &LiveSet) -> StmtKind {
        let w = self.cfg.stmt_weights;
        let has_local = live.iter().any(|v| self.is_local(v));
        let nest = self.depth < self.cfg.max_stmt_depth;
        let mut kinds = vec![(StmtKind::Assign, w.assign)];
        if nest && has_local && self.budget >= 3 {
            kinds.push((StmtKind::If, w.branch));
        }
        if nest && self.cfg.allow_loops && self.budget >= 3 {
            kinds.push((StmtKind::While, w.loop_));
        }
        if self.cfg.allow_loops && self.cfg.allow_for_loops && has_local && self.budget >= 2 {
            kinds.push((StmtKind::ForMapReduce, w.map_reduce));
        }
        self.choose_weighted(&kinds).expect("assignment weight is positive")
    }

    /// Prepends up to `max_stmts` statements to `rev` (which holds a block in
    /// reverse execution order) and returns the new live-in. Stops early when
    /// the live set empties or the budget runs out.
    fn fill_block(&mut self, rev: &mut Vec<Stmt>, mut live: LiveSet, max_stmts: usize) -> LiveSet {
        let mut made = 0;
        let mut redraws = 0;
        while made < max_stmts && self.budget > 0 && !live.is_empty() {
            let kind = self.pick_stmt_kind(&live);
            if kind == StmtKind::Assign && self.locals_in(&live).is_empty() {
                redraws += 1;
                if redraws >= MAX_REDRAWS {
                    break;
                }
                continue;
            }
            live = match kind {
                StmtKind::Assign => {
                    let (s, l) = self.gen_assignment(&live);
                    rev.push(s);
                    l
                }
                StmtKind::If => {
                    let (s, l) = self.gen_if(&live);
                    rev.push(s);
                    l
                }
                StmtKind::While => {
                    let (s, l) = self.gen_while(&live);
                    rev.push(s);
                    l
                }
                StmtKind::ForMapReduce => {
                    let (pre, for_stmt, l) = self.gen_for_map_reduce(&live);
                    rev.push(for_stmt);
                    rev.push(pre);
                    l
                }
            };
            made += 1;
        }
        live
    }

    /// A block that is fully live against `live_out`, with its live-in.
    pub fn random_statement_block(&mut self, live_out: &LiveSet) -> (Stmt, LiveSet) {
        let mut rev = Vec::new();
        let live = self.fill_block(&mut rev, live_out.clone(), self.cfg.max_block_stmts);
        rev.reverse();
        (Stmt::block(rev), live)
    }

    /// `v = e` for a live local `v`.
    ///
    /// # Panics
    /// If `live_out` holds no local.
    pub fn gen_assignment(&mut self, live_out: &LiveSet) -> (Stmt, LiveSet) {
        let locals = self.locals_in(live_out);
        let target = locals.choose(&mut self.rng).expect("a live local to assign").clone();
        self.budget = self.budget.saturating_sub(1);
        let rhs = self.gen_expression(self.ty_of(&target), 0);
        let live = transfer_assign(live_out, &target, &rhs);
        (Stmt::assign(&target, rhs), live)
    }

    /// Both branches are generated against `live_out`; one unit of budget is
    /// held back while the then-branch is built so the else-branch is never
    /// empty.
    pub fn gen_if(&mut self, live_out: &LiveSet) -> (Stmt, LiveSet) {
        self.budget = self.budget.saturating_sub(2);
        self.depth += 1;
        let mut then_rev = Vec::new();
        let l1 = self.fill_block(&mut then_rev, live_out.clone(), self.cfg.max_block_stmts);
        self.budget += 1;
        let mut else_rev = Vec::new();
        let l2 = self.fill_block(&mut else_rev, live_out.clone(), self.cfg.max_block_stmts);
        self.depth -= 1;
        let cond = self.gen_condition(Needs::AnyVar);
        let live = l1.union(&l2).union(&free_vars(&cond));
        then_rev.reverse();
        else_rev.reverse();
        let s = Stmt::If {
            cond,
            then_branch: Box::new(Stmt::block(then_rev)),
            else_branch: Box::new(Stmt::block(else_rev)),
        };
        (s, live)
    }

    /// A loop whose condition reads a local `t` and whose body ends by
    /// updating `t`. Costs the loop, that update and one reserved statement
    /// for the repair assignment.
    pub fn gen_while(&mut self, live_out: &LiveSet) -> (Stmt, LiveSet) {
        self.budget = self.budget.saturating_sub(3);
        self.depth += 1;

        let cond = self.gen_condition(Needs::Local);
        let fvc = free_vars(&cond);
        let t = self.locals_in(&fvc).choose(&mut self.rng).expect("condition reads a local").clone();

        let cap = BPRIME_MAX.min(1usize << self.cfg.max_expr_depth.min(16));
        let drawn = Geometric::new(BPRIME_P).expect("valid probability").sample(&mut self.rng) as usize;
        let exclude = live_out.union(&fvc);
        let mut bprime = LiveSet::new();
        for _ in 0..drawn.min(cap) {
            let ty = self.random_type();
            bprime.insert(self.fresh_var(VarKind::Local, ty));
        }
        let body_out = exclude.union(&bprime);

        let step = self.progress_rhs(&t);
        let mut rev = vec![Stmt::assign(&t, step.clone())];
        let after_step = transfer_assign(&body_out, &t, &step);
        let mut live = self.fill_block(&mut rev, after_step, self.cfg.max_block_stmts.saturating_sub(1));

        // Variables of B' that the body never reads before writing are not in
        // the loop's least fixed point; make the body read them up front.
        let exposed = {
            let mut fwd = rev.clone();
            fwd.reverse();
            derive(&Stmt::block(fwd), &LiveSet::new()).live_in
        };
        let missing = bprime.minus(&exposed);
        let mut repaired = false;
        if !missing.is_empty() {
            let targets = self.locals_in(&live);
            if let Some(v) = targets.choose(&mut self.rng).cloned() {
                let mut need = missing.clone();
                if bprime.contains(&v) {
                    need.insert(v.clone());
                }
                let e = self.expr_over(&need, self.ty_of(&v));
                live = transfer_assign(&live, &v, &e);
                rev.push(Stmt::assign(&v, e));
                repaired = true;
            } else {
                live = self.augment_first(rev.last_mut().expect("body is nonempty"), &missing, &live);
            }
        }
        if !repaired {
            self.budget += 1;
        }
        self.depth -= 1;

        rev.reverse();
        let live_in = live.union(&exclude);
        (Stmt::While { cond, body: Box::new(Stmt::block(rev)) }, live_in)
    }

    /// Makes the first statement of a loop body read `need` when no live
    /// local is available to receive a new assignment. Returns the updated
    /// body live-in. May deepen one expression by up to two levels.
    fn augment_first(&mut self, first: &mut Stmt, need: &LiveSet, live: &LiveSet) -> LiveSet {
        match first {
            Stmt::Assign { target, rhs } if live.is_empty() => {
                // A constant assignment: replace it outright.
                *rhs = self.expr_over(need, self.ty_of(target));
                need.clone()
            }
            Stmt::Assign { target, rhs } => {
                let ty = self.ty_of(target);
                let extra = self.expr_over(need, ty);
                let op = self.arith_op(ty);
                let old = std::mem::replace(rhs, Expr::int(0, ScalarType::I32));
                *rhs = Expr::binary(op, old, extra);
                live.union(need)
            }
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => {
                let ty = self.ty_of(need.iter().next().expect("need is nonempty"));
                let extra = self.expr_over(need, ty);
                let test = Expr::binary(BinOp::Ne, extra, zero(ty));
                let old = std::mem::replace(cond, Expr::int(0, ScalarType::I32));
                *cond = Expr::binary(BinOp::LogOr, old, test);
                live.union(need)
            }
            other => unreachable!("loop body cannot start with {other:?}"),
        }
    }

    /// `t - 1`, `t - e` or `t + e`.
    fn progress_rhs(&mut self, t: &VarId) -> Expr {
        let ty = self.ty_of(t);
        let step = if self.rng.random_bool(0.5) { one(ty) } else { self.gen_expression(ty, 1) };
        let op = if self.rng.random_bool(0.75) { BinOp::Sub } else { BinOp::Add };
        Expr::binary(op, Expr::var(t), step)
    }

    /// `acc = e0; for (i = 0; i < N; i++) acc = acc op f(arr[i]);` for a
    /// live local `acc`. Returns the pre-assignment, the loop and the
    /// live-in of the pair.
    pub fn gen_for_map_reduce(&mut self, live_out: &LiveSet) -> (Stmt, Stmt, LiveSet) {
        self.budget = self.budget.saturating_sub(2);
        let acc = self.locals_in(live_out).choose(&mut self.rng).expect("a live accumulator").clone();
        let acc_ty = self.ty_of(&acc);
        let elem_ty = self.random_type();
        let array = self.fresh_var(VarKind::ArrayParam, elem_ty);
        let bound = self.size_global();

        let mut item = Expr::index(&array, Expr::var(&VarId::loop_index()));
        if elem_ty != acc_ty {
            item = Expr::cast(acc_ty, item);
        }
        let element = if self.rng.random_bool(0.3) {
            item
        } else {
            let op = self.fold_op(acc_ty);
            let other = self.gen_expression(acc_ty, 1);
            if self.rng.random_bool(0.5) {
                Expr::binary(op, item, other)
            } else {
                Expr::binary(op, other, item)
            }
        };
        let op = self.fold_op(acc_ty);
        let for_stmt = Stmt::ForMapReduce { accumulator: acc.clone(), array, bound: bound.clone(), op, element };

        let mut loop_in = live_out.clone();
        loop_in.insert(acc.clone());
        loop_in.insert(bound);
        loop_in.extend(free_vars(match &for_stmt {
            Stmt::ForMapReduce { element, .. } => element,
            _ => unreachable!(),
        }));
        loop_in.remove(&VarId::loop_index());

        let pre = self.gen_expression(acc_ty, 0);
        let live = transfer_assign(&loop_in, &acc, &pre);
        (Stmt::assign(&acc, pre), for_stmt, live)
    }

    /// Combining operator for map-reduce loops: `+ - *`, plus `& | ^` for
    /// integer accumulators when bitwise operators are enabled.
    fn fold_op(&mut self, ty: ScalarType) -> BinOp {
        let mut ops = vec![BinOp::Add, BinOp::Sub, BinOp::Mul];
        if ty.is_integer() && self.cfg.allow_bitwise {
            ops.extend([BinOp::BitAnd, BinOp::BitOr, BinOp::BitXor]);
        }
        let weighted: Vec<(BinOp, u32)> = ops.iter().map(|&op| (op, self.cfg.op_weights.binary(op))).collect();
        self.choose_weighted(&weighted).unwrap_or(BinOp::Add)
    }

    fn arith_op(&mut self, ty: ScalarType) -> BinOp {
        let mut ops = vec![BinOp::Add, BinOp::Sub, BinOp::Mul];
        if ty.is_integer() && self.cfg.allow_bitwise {
            ops.push(BinOp::BitXor);
        }
        let weighted: Vec<(BinOp, u32)> = ops.iter().map(|&op| (op, self.cfg.op_weights.binary(op))).collect();
        self.choose_weighted(&weighted).unwrap_or(BinOp::Add)
    }

    /// A balanced combination of the variables in `vars`, each read once.
    fn expr_over(&mut self, vars: &LiveSet, ty: ScalarType) -> Expr {
        let mut layer: Vec<Expr> = vars.iter().map(|v| self.read_var(v, ty)).collect();
        assert!(!layer.is_empty(), "expr_over needs at least one variable");
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            let mut it = layer.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => {
                        let op = self.arith_op(ty);
                        next.push(Expr::binary(op, a, b));
                    }
                    None => next.push(a),
                }
            }
            layer = next;
        }
        layer.pop().unwrap()
    }

    // ---- expressions ----

    /// A random expression of type `ty` whose operator depth is at most
    /// `max_expr_depth - depth`. The leaf probability grows linearly with
    /// depth, so the root is always an operator.
    pub fn gen_expression(&mut self, ty: ScalarType, depth: usize) -> Expr {
        let max = self.cfg.max_expr_depth;
        if depth >= max || (depth > 0 && self.rng.random_bool(depth as f64 / max as f64)) {
            return self.leaf(ty);
        }
        match self.pick_expr_op() {
            ExprOp::Unary(op) => self.gen_unary(op, ty, depth),
            ExprOp::Binary(op) => self.gen_binary(op, ty, depth),
        }
    }

    fn pick_expr_op(&mut self) -> ExprOp {
        let w = &self.cfg.op_weights;
        let mut ops: Vec<(ExprOp, u32)> = BinOp::ALL
            .iter()
            .filter(|&&op| op.is_arithmetic() && self.cfg.op_enabled(op))
            .map(|&op| (ExprOp::Binary(op), w.binary(op)))
            .collect();
        ops.extend(
            UnOp::ALL.iter().filter(|&&op| self.cfg.unary_enabled(op)).map(|&op| (ExprOp::Unary(op), w.unary(op))),
        );
        self.choose_weighted(&ops).expect("validated: some operator has weight")
    }

    fn gen_unary(&mut self, op: UnOp, ty: ScalarType, depth: usize) -> Expr {
        match op {
            UnOp::Neg => Expr::unary(op, self.gen_expression(ty, depth + 1)),
            UnOp::BitNot if ty.is_float() => {
                let it = self.random_int_type();
                let inner = Expr::cast(it, self.gen_expression(ty, depth + 1));
                Expr::cast(ty, Expr::unary(op, inner))
            }
            UnOp::BitNot => Expr::unary(op, self.gen_expression(ty, depth + 1)),
            UnOp::LogNot => {
                let inner_ty = self.random_type();
                let e = Expr::unary(op, self.gen_expression(inner_ty, depth + 1));
                if ty == ScalarType::I32 {
                    e
                } else {
                    Expr::cast(ty, e)
                }
            }
        }
    }

    fn gen_binary(&mut self, op: BinOp, ty: ScalarType, depth: usize) -> Expr {
        if op.requires_integer() && ty.is_float() {
            let it = self.random_int_type();
            let lhs = Expr::cast(it, self.gen_expression(ty, depth + 1));
            let rhs = Expr::cast(it, self.gen_expression(ty, depth + 1));
            return Expr::cast(ty, self.guarded(op, it, lhs, rhs));
        }
        let lhs = self.gen_expression(ty, depth + 1);
        let rhs = self.gen_expression(ty, depth + 1);
        self.guarded(op, ty, lhs, rhs)
    }

    /// Builds `lhs op rhs`, turning a divisor into `(rhs + c)` and a shift
    /// amount into `(rhs & (width - 1))`.
    fn guarded(&mut self, op: BinOp, ty: ScalarType, lhs: Expr, rhs: Expr) -> Expr {
        let rhs = if op.is_division() {
            self.division_guard(ty, rhs)
        } else if op.is_shift() {
            Expr::binary(BinOp::BitAnd, rhs, Expr::int(ty.width() as i64 - 1, ty))
        } else {
            rhs
        };
        Expr::binary(op, lhs, rhs)
    }

    fn division_guard(&mut self, ty: ScalarType, divisor: Expr) -> Expr {
        let mut c: i64 = self.rng.random_range(1..=16);
        if let Expr::Literal { value, .. } = &divisor {
            while sums_to_zero(*value, c, ty) {
                c += 1;
            }
        }
        let lit = if ty.is_float() { Expr::Literal { value: LitValue::Float(c as f64), ty } } else { Expr::int(c, ty) };
        Expr::binary(BinOp::Add, divisor, lit)
    }

    fn leaf(&mut self, ty: ScalarType) -> Expr {
        if self.rng.random_bool(self.cfg.literal_leaf_prob) {
            self.literal(ty)
        } else {
            self.var_leaf(ty, false)
        }
    }

    /// Reads an existing variable, or with `fresh_var_prob` a new one.
    fn var_leaf(&mut self, ty: ScalarType, local_only: bool) -> Expr {
        let readable: Vec<usize> = (0..self.pool.len())
            .filter(|&k| {
                let kind = self.pool[k].kind;
                kind != VarKind::ArrayParam && (!local_only || kind == VarKind::Local)
            })
            .collect();
        let id = if readable.is_empty() || self.rng.random_bool(self.cfg.fresh_var_prob) {
            let kind = if local_only {
                VarKind::Local
            } else {
                match self.rng.random_range(0..20) {
                    0..10 => VarKind::Local,
                    10..17 => VarKind::ScalarParam,
                    _ => VarKind::PointerParam,
                }
            };
            let vty = if self.rng.random_bool(0.75) { ty } else { self.random_type() };
            self.fresh_var(kind, vty)
        } else {
            let same: Vec<usize> = readable.iter().copied().filter(|&k| self.pool[k].ty == ty).collect();
            let from = if !same.is_empty() && self.rng.random_bool(0.7) { same } else { readable };
            let k = *from.choose(&mut self.rng).unwrap();
            self.pool[k].id.clone()
        };
        self.read_var(&id, ty)
    }

    /// `v`, `*v` for pointers, cast to `ty` when the types differ.
    fn read_var(&self, id: &VarId, ty: ScalarType) -> Expr {
        let var = self.lookup(id).expect("variable in pool");
        let e = if var.kind == VarKind::PointerParam { Expr::Deref { pointer: id.clone() } } else { Expr::var(id) };
        if var.ty == ty {
            e
        } else {
            Expr::cast(ty, e)
        }
    }

    fn literal(&mut self, ty: ScalarType) -> Expr {
        let r = self.cfg.literal_ranges;
        let value = match ty.int_range() {
            None => {
                let x = self.rng.random_range(r.float.0..=r.float.1);
                let x = (x * 100.0).round() / 100.0;
                LitValue::Float(if ty == ScalarType::F32 { x as f32 as f64 } else { x })
            }
            Some((lo, hi)) if ty.is_signed() => {
                let a = (r.signed.0 as i128).clamp(lo, hi);
                let b = (r.signed.1 as i128).clamp(lo, hi);
                LitValue::Int(self.rng.random_range(a..=b) as i64)
            }
            Some((lo, hi)) => {
                let a = (r.unsigned.0 as i128).clamp(lo, hi);
                let b = (r.unsigned.1 as i128).clamp(lo, hi);
                LitValue::Uint(self.rng.random_range(a..=b) as u64)
            }
        };
        Expr::Literal { value, ty }
    }

    /// A comparison, possibly combined with `&&`/`||`, that reads what
    /// `needs` asks for and is never a constant.
    fn gen_condition(&mut self, needs: Needs) -> Expr {
        self.condition_at(0, needs)
    }

    fn condition_at(&mut self, depth: usize, needs: Needs) -> Expr {
        if depth + 2 <= self.cfg.max_expr_depth && self.rng.random_bool(0.2) {
            let w = &self.cfg.op_weights;
            let logical = [(BinOp::LogAnd, w.binary(BinOp::LogAnd)), (BinOp::LogOr, w.binary(BinOp::LogOr))];
            if let Some(op) = self.choose_weighted(&logical) {
                let a = self.condition_at(depth + 1, needs);
                let b = self.condition_at(depth + 1, Needs::Nothing);
                return Expr::binary(op, a, b);
            }
        }
        let comparisons: Vec<(BinOp, u32)> =
            BinOp::ALL.iter().filter(|op| op.is_comparison()).map(|&op| (op, self.cfg.op_weights.binary(op))).collect();
        let op = self.choose_weighted(&comparisons).expect("validated: some comparison has weight");
        let ty = self.random_type();
        let mut lhs = self.gen_expression(ty, depth + 1);
        let rhs = self.gen_expression(ty, depth + 1);
        let fv = free_vars(&lhs).union(&free_vars(&rhs));
        let ok = match needs {
            Needs::Nothing => true,
            Needs::AnyVar => !fv.is_empty(),
            Needs::Local => fv.iter().any(|v| self.is_local(v)),
        };
        if !ok {
            lhs = self.var_leaf(ty, needs == Needs::Local);
        }
        Expr::binary(op, lhs, rhs)
    }

    // ---- finishing ----

    /// Gives every live-in local an initializer (a literal or a parameter of
    /// the same type) and keeps only variables the function mentions.
    pub fn finalize_function(&mut self, body: Stmt, return_var: VarId, live_in: &LiveSet) -> FunctionDef {
        let mut initializers = Vec::new();
        for id in live_in.iter().filter(|v| self.is_local(v)).cloned().collect::<Vec<_>>() {
            let ty = self.ty_of(&id);
            let rhs = if self.rng.random_bool(0.5) {
                self.literal(ty)
            } else {
                let params: Vec<VarId> = self
                    .pool
                    .iter()
                    .filter(|v| v.kind == VarKind::ScalarParam && v.ty == ty)
                    .map(|v| v.id.clone())
                    .collect();
                let p = match params.choose(&mut self.rng) {
                    Some(p) if self.rng.random_bool(0.5) => p.clone(),
                    _ => self.fresh_var(VarKind::ScalarParam, ty),
                };
                Expr::var(&p)
            };
            initializers.push(Stmt::assign(&id, rhs));
        }
        let mut used = body.used_vars();
        used.insert(return_var.clone());
        for init in &initializers {
            used.extend(init.used_vars());
            if let Stmt::Assign { target, .. } = init {
                used.insert(target.clone());
            }
        }
        let keep = |kind: fn(VarKind) -> bool| -> Vec<Variable> {
            self.pool.iter().filter(|v| kind(v.kind) && used.contains(&v.id)).cloned().collect()
        };
        let params = keep(VarKind::is_param);
        let locals = keep(|k| k == VarKind::Local);
        FunctionDef {
            name: "f".to_string(),
            params,
            locals,
            initializers,
            body,
            return_var,
            array_size_global: self.size_global.clone(),
        }
    }
}

fn zero(ty: ScalarType) -> Expr {
    if ty.is_float() {
        Expr::Literal { value: LitValue::Float(0.0), ty }
    } else {
        Expr::int(0, ty)
    }
}

fn one(ty: ScalarType) -> Expr {
    if ty.is_float() {
        Expr::Literal { value: LitValue::Float(1.0), ty }
    } else {
        Expr::int(1, ty)
    }
}

/// Whether `value + c` is zero in `ty`, with wrap-around for unsigned types.
fn sums_to_zero(value: LitValue, c: i64, ty: ScalarType) -> bool {
    match value {
        LitValue::Float(x) => x + c as f64 == 0.0,
        v => {
            let s = v.as_i128().unwrap_or(0) + c as i128;
            if ty.is_signed() {
                s == 0
            } else {
                s.rem_euclid(1i128 << ty.width()) == 0
            }
        }
    }
}

#[cfg(test)]
mod tests;
