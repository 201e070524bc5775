//! Structural liveness: live-in sets computed rule by rule over the statement
//! tree, together with the side conditions that make a program fully live.
//!
//! A triple `{in} s {out}` is derivable when `in` is the live-in of `s` for
//! live-out `out` and every side condition below holds:
//!
//! * `return v` needs an empty live-out and has live-in `{v}`;
//! * `{}` needs a nonempty live-out;
//! * `v = e` needs `v` live-out; live-in is `(out \ {v}) ∪ FV(e)`;
//! * `s1; s2` needs the set between the two statements to be nonempty;
//! * `if` joins both branches and adds `FV(c)`;
//! * `while` needs a nonempty live-out. The body live-out is the least fixed
//!   point of `B = out ∪ FV(c) ∪ in(body, B)` and the loop live-in is
//!   `in(body, B) ∪ out ∪ FV(c)`, since the condition is evaluated before the
//!   body on loop entry.
//!
//! Map-reduce loops are checked through their `while` desugaring.

use std::fmt;

use serde::Serialize;

use crate::ast::{free_vars, Expr, FunctionDef, LiveSet, Stmt, StmtPath, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LivenessRule {
    AssignTargetDead,
    ReturnLiveOutNonempty,
    EmptyLiveSetSkip,
    EmptyLiveSetSequence,
    WhileLiveoutEmpty,
    NonMinimalFixedPoint,
}

impl fmt::Display for LivenessRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LivenessRule::AssignTargetDead => "assign-target-dead",
            LivenessRule::ReturnLiveOutNonempty => "return-liveout-nonempty",
            LivenessRule::EmptyLiveSetSkip => "empty-live-set-skip",
            LivenessRule::EmptyLiveSetSequence => "empty-live-set-sequence",
            LivenessRule::WhileLiveoutEmpty => "while-liveout-empty",
            LivenessRule::NonMinimalFixedPoint => "non-minimal-fixed-point",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LivenessViolation {
    pub location: StmtPath,
    pub rule: LivenessRule,
}

impl fmt::Display for LivenessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.rule)
    }
}

/// `{live_in} statement {live_out}` for the node at `path`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LivenessTriple {
    pub live_in: LiveSet,
    pub path: StmtPath,
    pub live_out: LiveSet,
}

/// Result of analysing one statement tree against a given live-out.
#[derive(Clone, Debug, Default)]
pub struct Derivation {
    pub live_in: LiveSet,
    /// One triple per statement node, in the order the final pass visits
    /// them. For loops this is the pass over the body at its fixed point.
    pub triples: Vec<LivenessTriple>,
    /// Least fixed point body live-out of every `while` node.
    pub loop_body_out: Vec<(StmtPath, LiveSet)>,
    pub violations: Vec<LivenessViolation>,
}

impl Derivation {
    pub fn triple_at(&self, path: &StmtPath) -> Option<&LivenessTriple> {
        self.triples.iter().find(|t| &t.path == path)
    }

    pub fn body_out_at(&self, path: &StmtPath) -> Option<&LiveSet> {
        self.loop_body_out.iter().find(|(p, _)| p == path).map(|(_, s)| s)
    }
}

/// Assignment transfer function: kills `{target}`, generates `FV(rhs)`.
pub fn transfer_assign(live_out: &LiveSet, target: &VarId, rhs: &Expr) -> LiveSet {
    live_out.without(target).union(&free_vars(rhs))
}

/// Live-in of `s` for `live_out`, or the first violated side condition.
pub fn live_in(s: &Stmt, live_out: &LiveSet) -> Result<LiveSet, LivenessViolation> {
    let d = derive(s, live_out);
    match d.violations.into_iter().next() {
        Some(v) => Err(v),
        None => Ok(d.live_in),
    }
}

/// Runs every rule over `s` and collects all triples and violations in one
/// bottom-up pass.
pub fn derive(s: &Stmt, live_out: &LiveSet) -> Derivation {
    let mut w = Walker { record: true, frozen: 0, path: StmtPath::root(), out: Derivation::default() };
    let live_in = w.visit(s, live_out);
    w.out.live_in = live_in;
    w.out
}

/// Checks that the body of `f` is fully live, i.e. `{L} body {∅}` is
/// derivable. Initializers are not part of the check. Returns `L`.
pub fn check_fully_live(f: &FunctionDef) -> Result<LiveSet, Vec<LivenessViolation>> {
    let d = derive(&f.body, &LiveSet::new());
    if d.violations.is_empty() {
        Ok(d.live_in)
    } else {
        Err(d.violations)
    }
}

struct Walker {
    /// Silent walkers only compute sets; they run inside fixed-point
    /// iterations where intermediate results are not final.
    record: bool,
    /// Nonzero while visiting a desugared map-reduce loop, whose nodes are
    /// all reported at the loop's own path.
    frozen: usize,
    path: StmtPath,
    out: Derivation,
}

impl Walker {
    fn violation(&mut self, rule: LivenessRule) {
        if self.record {
            self.out.violations.push(LivenessViolation { location: self.path.clone(), rule });
        }
    }

    fn child(&mut self, idx: u8, s: &Stmt, live_out: &LiveSet) -> LiveSet {
        if self.frozen == 0 {
            self.path.0.push(idx);
        }
        let r = self.visit(s, live_out);
        if self.frozen == 0 {
            self.path.0.pop();
        }
        r
    }

    fn visit(&mut self, s: &Stmt, live_out: &LiveSet) -> LiveSet {
        let live_in = match s {
            Stmt::Return { var } => {
                if !live_out.is_empty() {
                    self.violation(LivenessRule::ReturnLiveOutNonempty);
                }
                [var.clone()].into_iter().collect()
            }
            Stmt::EmptyBlock => {
                if live_out.is_empty() {
                    self.violation(LivenessRule::EmptyLiveSetSkip);
                }
                live_out.clone()
            }
            Stmt::Assign { target, rhs } => {
                if !live_out.contains(target) {
                    self.violation(LivenessRule::AssignTargetDead);
                }
                transfer_assign(live_out, target, rhs)
            }
            Stmt::Sequence { first, second } => {
                let mid = self.child(1, second, live_out);
                if mid.is_empty() {
                    self.violation(LivenessRule::EmptyLiveSetSequence);
                }
                self.child(0, first, &mid)
            }
            Stmt::If { cond, then_branch, else_branch } => {
                let l1 = self.child(0, then_branch, live_out);
                let l2 = self.child(1, else_branch, live_out);
                l1.union(&l2).union(&free_vars(cond))
            }
            Stmt::While { cond, body } => self.visit_while(cond, body, live_out),
            Stmt::ForMapReduce { .. } => {
                let desugared = s.desugar_for().expect("map-reduce loop desugars");
                self.frozen += 1;
                let r = self.visit(&desugared, live_out);
                self.frozen -= 1;
                r
            }
        };
        if self.record && self.frozen == 0 {
            self.out.triples.push(LivenessTriple {
                live_in: live_in.clone(),
                path: self.path.clone(),
                live_out: live_out.clone(),
            });
        }
        live_in
    }

    fn visit_while(&mut self, cond: &Expr, body: &Stmt, live_out: &LiveSet) -> LiveSet {
        if live_out.is_empty() {
            self.violation(LivenessRule::WhileLiveoutEmpty);
        }
        let base = live_out.union(&free_vars(cond));
        let body_out = least_fixed_point(&base, |b| {
            let mut silent = Walker { record: false, frozen: 1, path: StmtPath::root(), out: Derivation::default() };
            silent.visit(body, b)
        });
        let body_in = self.child(0, body, &body_out);
        let used = body.used_vars();
        if body_out.minus(&base).iter().any(|v| !used.contains(v)) {
            self.violation(LivenessRule::NonMinimalFixedPoint);
        }
        if self.record && self.frozen == 0 {
            self.out.loop_body_out.push((self.path.clone(), body_out.clone()));
        }
        body_in.union(&base)
    }
}

/// Ascending Kleene iteration of `B ↦ base ∪ f(B)` from `base`.
fn least_fixed_point(base: &LiveSet, mut f: impl FnMut(&LiveSet) -> LiveSet) -> LiveSet {
    let mut current = base.clone();
    loop {
        let next = base.union(&f(&current));
        if next == current {
            return current;
        }
        current = next;
    }
}
