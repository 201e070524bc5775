use proptest::prelude::*;

use super::*;
use crate::ast::Site;
use crate::cfg::find_dead_assignments;
use crate::liveness::{check_fully_live, live_in};
use crate::wellformed::well_formed;

fn gen(cfg: &GeneratorConfig) -> Generated {
    GenState::new(cfg).unwrap().generate()
}

fn count_stmts(s: &Stmt) -> usize {
    let mut n = 0;
    s.walk(&mut |_, s| {
        if matches!(s, Stmt::Assign { .. } | Stmt::If { .. } | Stmt::While { .. } | Stmt::ForMapReduce { .. }) {
            n += 1;
        }
    });
    n
}

fn all_exprs(f: &FunctionDef) -> Vec<Expr> {
    let mut out = Vec::new();
    for init in &f.initializers {
        out.extend(init.own_exprs().into_iter().cloned());
    }
    f.body.walk(&mut |_, s| out.extend(s.own_exprs().into_iter().cloned()));
    out
}

fn types_in(f: &FunctionDef) -> Vec<ScalarType> {
    let mut tys: Vec<ScalarType> = f.params.iter().chain(&f.locals).map(|v| v.ty).collect();
    for e in all_exprs(f) {
        e.walk(&mut |n| match n {
            Expr::Literal { ty, .. } | Expr::Cast { ty, .. } => tys.push(*ty),
            _ => {}
        });
    }
    tys
}

fn binops_in(f: &FunctionDef) -> Vec<BinOp> {
    let mut ops = Vec::new();
    for e in all_exprs(f) {
        e.walk(&mut |n| {
            if let Expr::Binary { op, .. } = n {
                ops.push(*op);
            }
        });
    }
    f.body.walk(&mut |_, s| {
        if let Stmt::ForMapReduce { op, .. } = s {
            ops.push(*op);
        }
    });
    ops
}

fn assert_fully_live(g: &Generated) {
    let f = &g.function;
    assert_eq!(check_fully_live(f), Ok(g.body_live_in.clone()), "{}", f.to_json());
    assert_eq!(find_dead_assignments(f), Vec::<Site>::new(), "{}", f.to_json());
    assert_eq!(well_formed(f), vec![], "{}", f.to_json());
}

#[test]
fn default_seeds_are_fully_live() {
    for seed in 0..200 {
        assert_fully_live(&gen(&GeneratorConfig::with_seed(seed)));
    }
}

#[test]
fn deterministic() {
    for seed in [0, 1, 42, u64::MAX] {
        let cfg = GeneratorConfig::with_seed(seed);
        assert_eq!(generate_function(&cfg).unwrap(), generate_function(&cfg).unwrap());
    }
    let a = generate_function(&GeneratorConfig::with_seed(1)).unwrap();
    let b = generate_function(&GeneratorConfig::with_seed(2)).unwrap();
    assert_ne!(a, b);
}

#[test]
fn zero_budget_returns_an_initialized_local() {
    for seed in 0..20 {
        let cfg = GeneratorConfig { max_total_stmts: 0, ..GeneratorConfig::with_seed(seed) };
        let g = gen(&cfg);
        let f = &g.function;
        assert_eq!(f.body, Stmt::Return { var: f.return_var.clone() });
        assert_eq!(f.initializers.len(), 1);
        let Stmt::Assign { target, rhs } = &f.initializers[0] else { panic!() };
        assert_eq!(target, &f.return_var);
        assert!(rhs.is_literal() || matches!(rhs, Expr::VarRef { var } if var.name.starts_with('p')));
        assert_fully_live(&g);
    }
}

#[test]
fn invalid_config_is_an_error() {
    let mut cfg = GeneratorConfig::default();
    cfg.stmt_weights.assign = 0;
    assert!(matches!(generate_function(&cfg), Err(GenError::Config(ConfigError::NoAssignments))));
}

#[test]
fn empty_live_out_gives_empty_block() {
    let cfg = GeneratorConfig::default();
    let mut st = GenState::new(&cfg).unwrap();
    assert_eq!(st.random_statement_block(&LiveSet::new()), (Stmt::EmptyBlock, LiveSet::new()));
}

#[test]
fn constant_assignment_ends_block() {
    // With only literal leaves and assignments, the first statement kills the
    // single live variable and generation stops.
    let mut cfg = GeneratorConfig { literal_leaf_prob: 1.0, max_expr_depth: 1, ..Default::default() };
    cfg.stmt_weights = StmtWeights { assign: 1, branch: 0, loop_: 0, map_reduce: 0 };
    let mut st = GenState::new(&cfg).unwrap();
    let x = st.fresh_var(VarKind::Local, ScalarType::I32);
    let live: LiveSet = [x.clone()].into_iter().collect();
    let (s, l) = st.random_statement_block(&live);
    assert!(matches!(&s, Stmt::Assign { target, rhs } if target == &x && free_vars(rhs).is_empty()));
    assert!(l.is_empty());
}

#[test]
fn assignment_transfer() {
    let cfg = GeneratorConfig::default();
    let mut st = GenState::new(&cfg).unwrap();
    let x = st.fresh_var(VarKind::Local, ScalarType::I32);
    let live: LiveSet = [x.clone()].into_iter().collect();
    let (s, l) = st.gen_assignment(&live);
    let Stmt::Assign { target, rhs } = &s else { panic!() };
    assert_eq!(target, &x);
    assert_eq!(l, free_vars(rhs));
    assert_eq!(live_in(&s, &live).unwrap(), l);
}

#[test]
fn generated_while_matches_checker() {
    let cfg = GeneratorConfig::default();
    for seed in 0..100 {
        let cfg = GeneratorConfig { seed, ..cfg.clone() };
        let mut st = GenState::new(&cfg).unwrap();
        let a = st.fresh_var(VarKind::Local, ScalarType::I32);
        let out: LiveSet = [a.clone()].into_iter().collect();
        let (s, l) = st.gen_while(&out);
        let Stmt::While { cond, .. } = &s else { panic!() };
        assert_eq!(live_in(&s, &out), Ok(l.clone()), "seed {seed}");
        assert!(free_vars(cond).is_subset(&l));
    }
}

#[test]
fn generated_if_matches_checker() {
    let cfg = GeneratorConfig::default();
    for seed in 0..100 {
        let cfg = GeneratorConfig { seed, ..cfg.clone() };
        let mut st = GenState::new(&cfg).unwrap();
        let x = st.fresh_var(VarKind::Local, ScalarType::I32);
        let y = st.fresh_var(VarKind::Local, ScalarType::F64);
        let out: LiveSet = [x, y].into_iter().collect();
        let (s, l) = st.gen_if(&out);
        let Stmt::If { cond, then_branch, else_branch } = &s else { panic!() };
        assert_ne!(**then_branch, Stmt::EmptyBlock);
        assert_ne!(**else_branch, Stmt::EmptyBlock);
        assert!(!free_vars(cond).is_empty());
        assert_eq!(live_in(&s, &out), Ok(l), "seed {seed}");
    }
}

#[test]
fn map_reduce_shape() {
    let cfg = GeneratorConfig::default();
    for seed in 0..50 {
        let cfg = GeneratorConfig { seed, ..cfg.clone() };
        let mut st = GenState::new(&cfg).unwrap();
        let v = st.fresh_var(VarKind::Local, ScalarType::I64);
        let out: LiveSet = [v.clone()].into_iter().collect();
        let (pre, s, l) = st.gen_for_map_reduce(&out);
        let Stmt::ForMapReduce { accumulator, bound, .. } = &s else { panic!() };
        assert_eq!(accumulator, &v);
        assert!(matches!(&pre, Stmt::Assign { target, .. } if target == &v));
        assert!(l.contains(bound));
        let pair = Stmt::seq(pre, s);
        assert_eq!(live_in(&pair, &out), Ok(l));
    }
}

#[test]
fn float_remainder_goes_through_integer_casts() {
    let mut cfg = GeneratorConfig { max_expr_depth: 1, literal_leaf_prob: 0.5, ..Default::default() };
    for op in BinOp::ALL {
        cfg.op_weights.binary.insert(op, if op == BinOp::Rem || op.is_comparison() { 1 } else { 0 });
    }
    cfg.op_weights.unary.clear();
    let mut st = GenState::new(&cfg).unwrap();
    let e = st.gen_expression(ScalarType::F32, 0);
    let Expr::Cast { ty: ScalarType::F32, operand } = &e else { panic!("{e:?}") };
    let Expr::Binary { op: BinOp::Rem, lhs, rhs } = operand.as_ref() else { panic!("{e:?}") };
    assert!(matches!(lhs.as_ref(), Expr::Cast { ty, .. } if ty.is_integer()));
    // the divisor is `(cast + c)`
    let Expr::Binary { op: BinOp::Add, lhs: d, rhs: c } = rhs.as_ref() else { panic!("{e:?}") };
    assert!(matches!(d.as_ref(), Expr::Cast { ty, .. } if ty.is_integer()));
    assert!(matches!(c.as_ref(), Expr::Literal { value, .. } if !value.is_zero()));
}

#[test]
fn leaf_at_max_depth() {
    let cfg = GeneratorConfig::default();
    let mut st = GenState::new(&cfg).unwrap();
    for _ in 0..50 {
        let e = st.gen_expression(ScalarType::I32, cfg.max_expr_depth);
        assert_eq!(e.op_depth(), 0);
    }
}

#[test]
fn division_guard_avoids_literal_zero() {
    assert!(sums_to_zero(LitValue::Int(-3), 3, ScalarType::I32));
    assert!(sums_to_zero(LitValue::Uint(u32::MAX as u64), 1, ScalarType::U32));
    assert!(!sums_to_zero(LitValue::Uint(u32::MAX as u64), 2, ScalarType::U32));
    assert!(sums_to_zero(LitValue::Float(-2.0), 2, ScalarType::F64));
}

fn flags_strategy() -> impl Strategy<Value = GeneratorConfig> {
    (
        any::<u64>(),
        (1usize..10, 1usize..4, 1usize..5, 0usize..150),
        (any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()),
        prop_oneof![Just(TypeUniverse::All), Just(TypeUniverse::IntOnly), Just(TypeUniverse::FloatOnly)],
    )
        .prop_map(|(seed, (block, sdepth, edepth, total), (loops, fors, bitwise, division), types)| {
            GeneratorConfig {
                seed,
                max_block_stmts: block,
                max_stmt_depth: sdepth,
                max_expr_depth: edepth,
                max_total_stmts: total,
                allow_loops: loops,
                allow_for_loops: fors,
                allow_bitwise: bitwise,
                allow_division: division,
                type_universe: types,
                ..Default::default()
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fully_live_for_any_config(cfg in flags_strategy()) {
        let g = gen(&cfg);
        assert_fully_live(&g);
        prop_assert!(count_stmts(&g.function.body) <= cfg.max_total_stmts);
    }

    #[test]
    fn feature_flags_hold(cfg in flags_strategy()) {
        let f = gen(&cfg).function;
        let ops = binops_in(&f);
        if !cfg.allow_division {
            prop_assert!(!ops.iter().any(|op| op.is_division()));
        }
        if !cfg.allow_bitwise {
            prop_assert!(!ops.iter().any(|op| op.is_bitwise()));
            let mut bitnot = false;
            for e in all_exprs(&f) {
                e.walk(&mut |n| bitnot |= matches!(n, Expr::Unary { op: UnOp::BitNot, .. }));
            }
            prop_assert!(!bitnot);
        }
        let mut loops = 0;
        let mut fors = 0;
        f.body.walk(&mut |_, s| match s {
            Stmt::While { .. } => loops += 1,
            Stmt::ForMapReduce { .. } => fors += 1,
            _ => {}
        });
        if !cfg.allow_loops {
            prop_assert_eq!(loops + fors, 0);
        }
        if !cfg.allow_for_loops {
            prop_assert_eq!(fors, 0);
            prop_assert!(f.array_size_global.is_none());
        }
        match cfg.type_universe {
            TypeUniverse::IntOnly => prop_assert!(types_in(&f).iter().all(|t| t.is_integer())),
            TypeUniverse::FloatOnly => {
                prop_assert!(f.params.iter().chain(&f.locals).all(|v| v.ty.is_float()))
            }
            TypeUniverse::All => {}
        }
    }

    #[test]
    fn loop_bodies_end_by_updating_the_condition(cfg in flags_strategy()) {
        let f = gen(&cfg).function;
        let mut ok = true;
        f.body.walk(&mut |_, s| {
            if let Stmt::While { cond, body } = s {
                let last = *body.flatten().last().unwrap();
                ok &= matches!(last, Stmt::Assign { target, .. } if free_vars(cond).contains(target));
            }
        });
        prop_assert!(ok);
    }

    #[test]
    fn expression_depth_is_bounded(cfg in flags_strategy()) {
        let f = gen(&cfg).function;
        for e in all_exprs(&f) {
            // a loop repair that extends a condition with `|| (e != 0)` adds
            // up to two levels
            prop_assert!(e.op_depth() <= cfg.max_expr_depth + 2);
        }
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let f = generate_function(&GeneratorConfig::with_seed(seed)).unwrap();
        prop_assert_eq!(FunctionDef::from_json(&f.to_json()).unwrap(), f);
    }
}
