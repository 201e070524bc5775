//! Classical liveness over a control-flow graph: an independent oracle for
//! the structural engine in [`crate::liveness`].
//!
//! The graph has one node per assignment, per `return`, and per branch or
//! loop condition. `live_in(n) = uses(n) ∪ (live_out(n) \ defs(n))` and
//! `live_out(n)` is the union of the successors' live-in sets; the least
//! solution is found by worklist iteration.

use std::collections::VecDeque;

use crate::ast::{free_vars, FunctionDef, LiveSet, Site, Stmt, StmtPath, VarId};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Assign { target: VarId, uses: LiveSet },
    Condition { uses: LiveSet },
    Return { var: VarId },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CfgNode {
    pub kind: NodeKind,
    pub succs: Vec<NodeId>,
    /// Source location; nodes of a desugared map-reduce loop all carry the
    /// loop's own path.
    pub site: Site,
}

impl CfgNode {
    fn uses(&self) -> LiveSet {
        match &self.kind {
            NodeKind::Assign { uses, .. } | NodeKind::Condition { uses } => uses.clone(),
            NodeKind::Return { var } => [var.clone()].into_iter().collect(),
        }
    }

    fn def(&self) -> Option<&VarId> {
        match &self.kind {
            NodeKind::Assign { target, .. } => Some(target),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cfg {
    pub nodes: Vec<CfgNode>,
    pub entry: Option<NodeId>,
    pub exits: Vec<NodeId>,
}

impl Cfg {
    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.succs.len()).sum()
    }

    pub fn preds(&self) -> Vec<Vec<NodeId>> {
        let mut preds = vec![Vec::new(); self.nodes.len()];
        for (n, node) in self.nodes.iter().enumerate() {
            for &s in &node.succs {
                if !preds[s].contains(&n) {
                    preds[s].push(n);
                }
            }
        }
        preds
    }

    /// Reverse post-order of a depth-first walk from the entry.
    pub fn reverse_post_order(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut post = Vec::with_capacity(self.nodes.len());
        let Some(entry) = self.entry else { return post };
        let mut stack = vec![(entry, 0usize)];
        seen[entry] = true;
        while let Some((n, k)) = stack.pop() {
            if let Some(&s) = self.nodes[n].succs.get(k) {
                stack.push((n, k + 1));
                if !seen[s] {
                    seen[s] = true;
                    stack.push((s, 0));
                }
            } else {
                post.push(n);
            }
        }
        post.reverse();
        post
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataflowSolution {
    pub live_in: Vec<LiveSet>,
    pub live_out: Vec<LiveSet>,
}

/// Lowers the initializers and body of `f` into a control-flow graph.
pub fn build_cfg(f: &FunctionDef) -> Cfg {
    let mut b = Builder { cfg: Cfg::default() };
    let mut entry = b.lower(&f.body, None, &Site::Body(StmtPath::root()), true);
    for (k, init) in f.initializers.iter().enumerate().rev() {
        entry = b.lower(init, entry, &Site::Initializer(k), false);
    }
    b.cfg.entry = entry;
    b.cfg.exits = (0..b.cfg.nodes.len()).filter(|&n| matches!(b.cfg.nodes[n].kind, NodeKind::Return { .. })).collect();
    b.cfg
}

/// Lowers a single statement tree, exiting to nowhere.
pub fn build_stmt_cfg(s: &Stmt) -> Cfg {
    let mut b = Builder { cfg: Cfg::default() };
    b.cfg.entry = b.lower(s, None, &Site::Body(StmtPath::root()), true);
    b.cfg.exits = (0..b.cfg.nodes.len()).filter(|&n| b.cfg.nodes[n].succs.is_empty()).collect();
    b.cfg
}

struct Builder {
    cfg: Cfg,
}

impl Builder {
    fn node(&mut self, kind: NodeKind, succs: Vec<NodeId>, site: &Site) -> NodeId {
        self.cfg.nodes.push(CfgNode { kind, succs, site: site.clone() });
        self.cfg.nodes.len() - 1
    }

    fn child_site(site: &Site, i: u8, track: bool) -> Site {
        match site {
            Site::Body(p) if track => Site::Body(p.child(i)),
            other => other.clone(),
        }
    }

    /// Lowers `s` so that it continues at `next`; returns its entry node, or
    /// `next` when `s` produces no nodes. `track` is false inside desugared
    /// loops whose parts share one site.
    fn lower(&mut self, s: &Stmt, next: Option<NodeId>, site: &Site, track: bool) -> Option<NodeId> {
        match s {
            Stmt::Assign { target, rhs } => {
                let kind = NodeKind::Assign { target: target.clone(), uses: free_vars(rhs) };
                Some(self.node(kind, next.into_iter().collect(), site))
            }
            Stmt::Return { var } => Some(self.node(NodeKind::Return { var: var.clone() }, Vec::new(), site)),
            Stmt::EmptyBlock => next,
            Stmt::Sequence { first, second } => {
                let mid = self.lower(second, next, &Self::child_site(site, 1, track), track);
                self.lower(first, mid, &Self::child_site(site, 0, track), track)
            }
            Stmt::If { cond, then_branch, else_branch } => {
                let t = self.lower(then_branch, next, &Self::child_site(site, 0, track), track);
                let e = self.lower(else_branch, next, &Self::child_site(site, 1, track), track);
                let mut succs: Vec<NodeId> = t.into_iter().chain(e).collect();
                succs.dedup();
                Some(self.node(NodeKind::Condition { uses: free_vars(cond) }, succs, site))
            }
            Stmt::While { cond, body } => {
                let head = self.node(NodeKind::Condition { uses: free_vars(cond) }, Vec::new(), site);
                let body_entry = self.lower(body, Some(head), &Self::child_site(site, 0, track), track).unwrap_or(head);
                let mut succs = vec![body_entry];
                if let Some(n) = next {
                    succs.push(n);
                }
                self.cfg.nodes[head].succs = succs;
                Some(head)
            }
            Stmt::ForMapReduce { .. } => {
                let desugared = s.desugar_for().expect("map-reduce loop desugars");
                self.lower(&desugared, next, site, false)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorklistOrder {
    Fifo,
    Lifo,
    ReversePostOrder,
}

pub fn solve_liveness(g: &Cfg) -> DataflowSolution {
    solve_liveness_with(g, WorklistOrder::Fifo)
}

/// Backward worklist iteration from all-empty sets, seeded with the exit
/// nodes first. The result is the least solution regardless of `order`.
///
/// Sets are dense bit vectors over the variables of the graph while the
/// iteration runs.
pub fn solve_liveness_with(g: &Cfg, order: WorklistOrder) -> DataflowSolution {
    let n = g.nodes.len();
    let preds = g.preds();
    let mut universe: Vec<VarId> = Vec::new();
    for node in &g.nodes {
        universe.extend(node.uses());
        universe.extend(node.def().cloned());
    }
    universe.sort();
    universe.dedup();
    let bits = Bits::words(universe.len());
    let slot = |v: &VarId| universe.binary_search(v).expect("variable of the graph");
    let to_bits = |set: &LiveSet| {
        let mut b = Bits::empty(bits);
        for v in set {
            b.set(slot(v));
        }
        b
    };
    let uses: Vec<Bits> = g.nodes.iter().map(|node| to_bits(&node.uses())).collect();
    let defs: Vec<Option<usize>> = g.nodes.iter().map(|node| node.def().map(slot)).collect();
    let mut live_in = vec![Bits::empty(bits); n];
    let mut live_out = vec![Bits::empty(bits); n];

    let is_exit: Vec<bool> = (0..n).map(|k| g.exits.contains(&k)).collect();
    let mut initial: Vec<NodeId> = match order {
        WorklistOrder::ReversePostOrder => {
            // backward problem: post-order visits successors first
            let mut rpo = g.reverse_post_order();
            rpo.reverse();
            let mut reached = vec![false; n];
            for &k in &rpo {
                reached[k] = true;
            }
            rpo.extend((0..n).filter(|&k| !reached[k]));
            rpo
        }
        _ => g.exits.iter().copied().chain((0..n).rev().filter(|&k| !is_exit[k])).collect(),
    };
    if order == WorklistOrder::Lifo {
        initial.reverse();
    }
    let mut queued = vec![true; n];
    let mut work: VecDeque<NodeId> = initial.into();

    while let Some(node) = match order {
        WorklistOrder::Lifo => work.pop_back(),
        _ => work.pop_front(),
    } {
        queued[node] = false;
        let mut out = Bits::empty(bits);
        for &s in &g.nodes[node].succs {
            out.union_with(&live_in[s]);
        }
        let mut inn = out.clone();
        if let Some(d) = defs[node] {
            inn.clear(d);
        }
        inn.union_with(&uses[node]);
        live_out[node] = out;
        if inn != live_in[node] {
            live_in[node] = inn;
            for &p in &preds[node] {
                if !queued[p] {
                    queued[p] = true;
                    work.push_back(p);
                }
            }
        }
    }
    let to_set = |b: &Bits| -> LiveSet { b.ones().map(|k| universe[k].clone()).collect() };
    DataflowSolution { live_in: live_in.iter().map(to_set).collect(), live_out: live_out.iter().map(to_set).collect() }
}

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn words(len: usize) -> usize {
        len.div_ceil(64)
    }

    fn empty(words: usize) -> Self {
        Bits(vec![0; words])
    }

    fn set(&mut self, k: usize) {
        self.0[k / 64] |= 1 << (k % 64);
    }

    fn clear(&mut self, k: usize) {
        self.0[k / 64] &= !(1 << (k % 64));
    }

    fn union_with(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.0.len() * 64).filter(|&k| self.0[k / 64] >> (k % 64) & 1 == 1)
    }
}

/// Sites of every assignment whose target is not live immediately after it.
pub fn find_dead_assignments(f: &FunctionDef) -> Vec<Site> {
    let g = build_cfg(f);
    let sol = solve_liveness(&g);
    let mut dead: Vec<Site> = g
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(k, node)| match node.def() {
            Some(t) if !sol.live_out[k].contains(t) => Some(node.site.clone()),
            _ => None,
        })
        .collect();
    dead.sort();
    dead.dedup();
    dead
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{BinOp, Expr, ScalarType, VarKind, Variable};
    use crate::samples::{double_assignment, fibonacci};

    fn set(names: &[(&str, u32)]) -> LiveSet {
        names.iter().map(|(n, i)| VarId::new(*n, *i)).collect()
    }

    #[test]
    fn return_alone() {
        let a = VarId::new("a", 0);
        let g = build_stmt_cfg(&Stmt::Return { var: a });
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.edge_count(), 0);
        let sol = solve_liveness(&g);
        assert_eq!(sol.live_in[0], set(&[("a", 0)]));
        assert!(sol.live_out[0].is_empty());
    }

    #[test]
    fn if_is_a_diamond() {
        let (c, x, r) = (VarId::new("c", 0), VarId::new("x", 1), VarId::new("r", 2));
        let s = Stmt::block(vec![
            Stmt::If {
                cond: Expr::var(&c),
                then_branch: Box::new(Stmt::assign(&x, Expr::int(1, ScalarType::I32))),
                else_branch: Box::new(Stmt::assign(&x, Expr::int(2, ScalarType::I32))),
            },
            Stmt::Return { var: r },
        ]);
        let g = build_stmt_cfg(&s);
        let cond = g.entry.unwrap();
        assert!(matches!(g.nodes[cond].kind, NodeKind::Condition { .. }));
        assert_eq!(g.nodes[cond].succs.len(), 2);
        let joins: Vec<_> = g.nodes[cond].succs.iter().map(|&b| g.nodes[b].succs.clone()).collect();
        assert_eq!(joins[0], joins[1]);
        assert!(matches!(g.nodes[joins[0][0]].kind, NodeKind::Return { .. }));
    }

    #[test]
    fn fibonacci_loop_structure_and_solution() {
        let f = fibonacci();
        let g = build_cfg(&f);
        let head = g.nodes.iter().position(|n| matches!(n.kind, NodeKind::Condition { .. })).unwrap();
        let succs = &g.nodes[head].succs;
        assert_eq!(succs.len(), 2);
        assert!(matches!(&g.nodes[succs[0]].kind, NodeKind::Assign { target, .. } if target.name == "t"));
        assert!(matches!(g.nodes[succs[1]].kind, NodeKind::Return { .. }));

        let sol = solve_liveness(&g);
        let b_eq_t = g
            .nodes
            .iter()
            .position(
                |n| matches!(&n.kind, NodeKind::Assign { target, uses } if target.name == "b" && uses.names() == ["t"]),
            )
            .unwrap();
        assert_eq!(sol.live_out[b_eq_t], set(&[("a", 0), ("b", 1), ("n", 3)]));
        assert_eq!(sol.live_in[b_eq_t], set(&[("a", 0), ("t", 2), ("n", 3)]));
        assert!(find_dead_assignments(&f).is_empty());
    }

    #[test]
    fn straight_line() {
        // x = 1; y = x; return y
        let (x, y) = (VarId::new("x", 0), VarId::new("y", 1));
        let s = Stmt::block(vec![
            Stmt::assign(&x, Expr::int(1, ScalarType::I32)),
            Stmt::assign(&y, Expr::var(&x)),
            Stmt::Return { var: y },
        ]);
        let g = build_stmt_cfg(&s);
        let sol = solve_liveness(&g);
        assert_eq!(sol.live_out[g.entry.unwrap()], set(&[("x", 0)]));
    }

    #[test]
    fn double_assignment_first_is_dead() {
        let f = double_assignment();
        let dead = find_dead_assignments(&f);
        assert_eq!(dead, vec![Site::Body(StmtPath(vec![0]))]);
        assert_eq!(f.body.at_path(&StmtPath(vec![0])), Some(f.body.flatten()[0]));
    }

    #[test]
    fn dead_initializer_is_reported() {
        let mut f = fibonacci();
        let t = f.locals.iter().find(|v| v.id.name == "t").unwrap().id.clone();
        f.initializers.push(Stmt::assign(&t, Expr::int(3, ScalarType::I32)));
        assert_eq!(find_dead_assignments(&f), vec![Site::Initializer(1)]);
    }

    #[test]
    fn map_reduce_loop_lowering() {
        let int = ScalarType::I32;
        let acc = Variable { id: VarId::new("v0", 0), ty: int, kind: VarKind::Local };
        let arr = Variable { id: VarId::new("arr0", 1), ty: int, kind: VarKind::ArrayParam };
        let n = VarId::new("N", 2);
        let f = FunctionDef {
            name: "f".into(),
            params: vec![arr.clone()],
            locals: vec![acc.clone()],
            initializers: vec![],
            body: Stmt::block(vec![
                Stmt::assign(&acc.id, Expr::int(0, int)),
                Stmt::ForMapReduce {
                    accumulator: acc.id.clone(),
                    array: arr.id.clone(),
                    bound: n.clone(),
                    op: BinOp::Add,
                    element: Expr::index(&arr.id, Expr::var(&VarId::loop_index())),
                },
                Stmt::Return { var: acc.id.clone() },
            ]),
            return_var: acc.id.clone(),
            array_size_global: Some(n),
        };
        let g = build_cfg(&f);
        // acc = 0, i = 0, i < N, acc = acc + arr[i], i = i + 1, return
        assert_eq!(g.nodes.len(), 6);
        let sol = solve_liveness(&g);
        assert_eq!(sol.live_in[g.entry.unwrap()], set(&[("arr0", 1), ("N", 2)]));
        assert!(find_dead_assignments(&f).is_empty());
    }
}
