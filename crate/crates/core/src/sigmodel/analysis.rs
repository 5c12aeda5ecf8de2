//! Cardinality analysis and validation.
//!
//! Every supported family is split into index classes. Inhabitation is a
//! least fixed point that also tracks which variables are in scope under
//! binders; infiniteness comes from cycles, from binder bodies that can mention
//! their own bound variable, and from abstractions over the naturals. Finite
//! counts are then evaluated over the remaining acyclic part.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::Deref;

use num_traits::{One, Zero};

use super::{
    instances_at, ArgInstance, Cardinality, CtorId, IndexValue, IndexClass, IndexExpr, IndexPattern, IndexSpec, Signature, TypeId,
    TypeRef,
};
use crate::bignat::Nat;

type Node = (TypeId, IndexClass);

#[derive(Clone, Copy, Debug)]
enum AbsVar {
    Exact(IndexClass),
    /// The predecessor of an index in class `S`: either class.
    Pred,
    AnyNat,
    AnyFin(usize),
}

#[derive(Clone, Debug)]
struct AbsArg {
    binders: Vec<Vec<Node>>,
    targets: Vec<Node>,
    /// The target index is the predecessor of the constructor's own index.
    pred: bool,
}

#[derive(Clone, Debug)]
struct AbsCtor {
    ctor: usize,
    nat_explicit: bool,
    explicit_sizes: Vec<Option<usize>>,
    args: Vec<AbsArg>,
}

struct Model {
    nodes: Vec<Node>,
    ctors: HashMap<Node, Vec<AbsCtor>>,
}

fn abs_env(p: &IndexPattern, cls: IndexClass) -> Option<Vec<(String, AbsVar)>> {
    match (p, cls) {
        (IndexPattern::Unit, IndexClass::Unit) => Some(vec![]),
        (IndexPattern::Zero, IndexClass::Z) => Some(vec![]),
        (IndexPattern::Succ(v), IndexClass::S) => Some(vec![(v.clone(), AbsVar::Pred)]),
        (IndexPattern::Var(v), c) if c != IndexClass::Unit => Some(vec![(v.clone(), AbsVar::Exact(c))]),
        (IndexPattern::Const(k), IndexClass::Fin(j)) if *k == j => Some(vec![]),
        _ => None,
    }
}

fn abs_ref(sig: &Signature, r: &TypeRef, env: &[(String, AbsVar)]) -> Option<(Vec<Node>, bool)> {
    let classes = |e: &IndexExpr| -> Option<(Vec<IndexClass>, bool)> {
        match e {
            IndexExpr::Zero => Some((vec![IndexClass::Z], false)),
            IndexExpr::Succ(_) => Some((vec![IndexClass::S], false)),
            IndexExpr::Const(k) => Some((vec![IndexClass::Fin(*k)], false)),
            IndexExpr::Var(v) => {
                let (_, a) = env.iter().rev().find(|(n, _)| n == v)?;
                Some(match *a {
                    AbsVar::Exact(c) => (vec![c], false),
                    AbsVar::Pred => (vec![IndexClass::Z, IndexClass::S], true),
                    AbsVar::AnyNat => (vec![IndexClass::Z, IndexClass::S], false),
                    AbsVar::AnyFin(n) => ((0..n).map(IndexClass::Fin).collect(), false),
                })
            }
            IndexExpr::Other(..) => None,
        }
    };
    match (&sig.decl(r.ty).index, r.index.as_slice()) {
        (IndexSpec::None, []) => Some((vec![(r.ty, IndexClass::Unit)], false)),
        (IndexSpec::Nat(_) | IndexSpec::Finite(_), [e]) => {
            let (cs, pred) = classes(e)?;
            Some((cs.into_iter().map(|c| (r.ty, c)).collect(), pred))
        }
        _ => None,
    }
}

fn build_model(sig: &Signature) -> Model {
    let mut nodes = Vec::new();
    let mut ctors = HashMap::new();
    for (i, d) in sig.decls.iter().enumerate() {
        let ty = TypeId(i);
        for cls in sig.classes(ty) {
            let node = (ty, cls);
            nodes.push(node);
            let mut list = Vec::new();
            'ctor: for (ci, c) in d.ctors.iter().enumerate() {
                let Some(mut env) = abs_env(&c.pattern, cls) else {
                    continue;
                };
                let mut nat_explicit = false;
                let mut explicit_sizes = Vec::new();
                for x in &c.explicit {
                    if sig.nat_shape(x.ty).is_some() {
                        nat_explicit = true;
                        explicit_sizes.push(None);
                        env.push((x.var.clone(), AbsVar::AnyNat));
                    } else if sig.is_enumeration(x.ty) {
                        let n = sig.decl(x.ty).ctors.len();
                        explicit_sizes.push(Some(n));
                        env.push((x.var.clone(), AbsVar::AnyFin(n)));
                    } else {
                        continue 'ctor;
                    }
                }
                let mut args = Vec::new();
                for a in &c.args {
                    let mut binders = Vec::new();
                    for b in &a.binders {
                        match abs_ref(sig, b, &env) {
                            Some((ns, _)) => binders.push(ns),
                            None => continue 'ctor,
                        }
                    }
                    let Some((targets, pred)) = abs_ref(sig, &a.target, &env) else {
                        continue 'ctor;
                    };
                    args.push(AbsArg {
                        binders,
                        targets,
                        pred,
                    });
                }
                list.push(AbsCtor {
                    ctor: ci,
                    nat_explicit,
                    explicit_sizes,
                    args,
                });
            }
            ctors.insert(node, list);
        }
    }
    Model { nodes, ctors }
}

/// Inhabitation under a set of in-scope variable classes, memoised per set.
struct Inhabitation<'a> {
    model: &'a Model,
    memo: HashMap<BTreeSet<Node>, HashSet<Node>>,
}

impl<'a> Inhabitation<'a> {
    fn new(model: &'a Model) -> Self {
        Inhabitation {
            model,
            memo: HashMap::new(),
        }
    }

    fn body_ctx(ctx: &BTreeSet<Node>, a: &AbsArg) -> BTreeSet<Node> {
        let mut out = ctx.clone();
        for b in &a.binders {
            out.extend(b.iter().copied());
        }
        out
    }

    /// Targets of `a` that can be inhabited in context `ctx`, given the
    /// partially computed set `cur` for that same context.
    fn live_targets(&mut self, a: &AbsArg, ctx: &BTreeSet<Node>, cur: &HashSet<Node>) -> Vec<Node> {
        let body = Self::body_ctx(ctx, a);
        if body == *ctx {
            a.targets
                .iter()
                .copied()
                .filter(|t| cur.contains(t) || ctx.contains(t))
                .collect()
        } else {
            let inner = self.get(&body);
            a.targets
                .iter()
                .copied()
                .filter(|t| inner.contains(t) || body.contains(t))
                .collect()
        }
    }

    fn get(&mut self, ctx: &BTreeSet<Node>) -> HashSet<Node> {
        if let Some(s) = self.memo.get(ctx) {
            return s.clone();
        }
        let model = self.model;
        let mut set = HashSet::new();
        loop {
            let mut changed = false;
            for node in &model.nodes {
                if set.contains(node) {
                    continue;
                }
                let productive = model.ctors[node].iter().any(|c| {
                    c.args
                        .iter()
                        .all(|a| !self.live_targets(a, ctx, &set).is_empty())
                });
                if productive {
                    set.insert(*node);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.memo.insert(ctx.clone(), set.clone());
        set
    }
}

/// Everything the analysis learns about a signature.
#[derive(Clone, Debug, Default)]
pub(crate) struct Facts {
    cardinality: BTreeMap<Node, Cardinality>,
    /// Live targets per (node, ctor, arg) for productive constructors.
    live: BTreeMap<(Node, usize), Vec<Vec<Node>>>,
    /// Constructors applicable at a node but never productive there.
    dead: BTreeMap<Node, Vec<usize>>,
    /// Families whose finiteness would hinge on recursion that only
    /// descends through the index.
    decreasing: BTreeSet<TypeId>,
    explicit_sizes: BTreeMap<(Node, usize), Vec<Option<usize>>>,
}

fn reach(edges: &HashMap<Node, Vec<(Node, bool)>>, from: Node, strict: bool) -> HashSet<Node> {
    let mut seen = HashSet::new();
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        for (m, pred) in edges.get(&n).into_iter().flatten() {
            if !(strict && *pred) {
                stack.push(*m);
            }
        }
    }
    seen
}

fn on_cycle(edges: &HashMap<Node, Vec<(Node, bool)>>, n: Node, strict: bool) -> bool {
    edges
        .get(&n)
        .into_iter()
        .flatten()
        .filter(|(_, pred)| !(strict && *pred))
        .any(|(m, _)| reach(edges, *m, strict).contains(&n))
}

fn analyse(sig: &Signature) -> Facts {
    let model = build_model(sig);
    let mut inhab = Inhabitation::new(&model);
    let closed = inhab.get(&BTreeSet::new());

    let mut facts = Facts::default();
    let mut edges: HashMap<Node, Vec<(Node, bool)>> = HashMap::new();
    // (node, binder nodes, live targets) for binder arguments of productive ctors
    let mut binder_args: Vec<(Node, Vec<Node>, Vec<Node>)> = Vec::new();
    let mut sources: HashSet<Node> = HashSet::new();

    for node in &model.nodes {
        for c in &model.ctors[node] {
            if !closed.contains(node) {
                continue;
            }
            let empty = BTreeSet::new();
            let lives: Vec<Vec<Node>> = c
                .args
                .iter()
                .map(|a| inhab.live_targets(a, &empty, &closed))
                .collect();
            if lives.iter().any(|l| l.is_empty()) {
                facts.dead.entry(*node).or_default().push(c.ctor);
                continue;
            }
            if c.nat_explicit {
                sources.insert(*node);
            }
            for (a, live) in c.args.iter().zip(&lives) {
                for t in live {
                    edges.entry(*node).or_default().push((*t, a.pred));
                }
                if !a.binders.is_empty() {
                    let bs = a.binders.iter().flatten().copied().collect();
                    binder_args.push((*node, bs, live.clone()));
                }
            }
            facts.explicit_sizes.insert((*node, c.ctor), c.explicit_sizes.clone());
            facts.live.insert((*node, c.ctor), lives);
        }
    }

    // a binder body that can mention its own variable nests without bound
    for (node, binders, live) in &binder_args {
        let hits = live
            .iter()
            .any(|t| reach(&edges, *t, false).iter().any(|r| binders.contains(r)));
        if hits {
            sources.insert(*node);
        }
    }

    let cyclic_all: HashSet<Node> = model
        .nodes
        .iter()
        .copied()
        .filter(|n| on_cycle(&edges, *n, false))
        .collect();
    let cyclic_strict: HashSet<Node> = model
        .nodes
        .iter()
        .copied()
        .filter(|n| on_cycle(&edges, *n, true))
        .collect();

    let mut infinite = HashSet::new();
    for n in &model.nodes {
        if !closed.contains(n) {
            continue;
        }
        let r = reach(&edges, *n, false);
        let all = r.iter().any(|m| sources.contains(m) || cyclic_all.contains(m));
        let strict = r.iter().any(|m| sources.contains(m) || cyclic_strict.contains(m));
        if all != strict {
            facts.decreasing.insert(n.0);
        }
        if all {
            infinite.insert(*n);
        }
    }

    let mut counts: HashMap<Node, Nat> = HashMap::new();
    fn count(
        n: Node,
        model: &Model,
        facts: &Facts,
        infinite: &HashSet<Node>,
        counts: &mut HashMap<Node, Nat>,
    ) -> Nat {
        if let Some(c) = counts.get(&n) {
            return c.clone();
        }
        let mut total = Nat::zero();
        for c in &model.ctors[&n] {
            let Some(lives) = facts.live.get(&(n, c.ctor)) else {
                continue;
            };
            let mut prod = Nat::one();
            for s in c.explicit_sizes.iter().flatten() {
                prod *= Nat::from(*s);
            }
            for live in lives {
                let best = live
                    .iter()
                    .filter(|t| !infinite.contains(t))
                    .map(|t| count(*t, model, facts, infinite, counts))
                    .max()
                    .unwrap_or_default();
                prod *= best;
            }
            total += prod;
        }
        counts.insert(n, total.clone());
        total
    }

    for n in &model.nodes {
        let card = if !closed.contains(n) {
            Cardinality::Empty
        } else if infinite.contains(n) {
            Cardinality::Infinite
        } else {
            Cardinality::Finite(count(*n, &model, &facts, &infinite, &mut counts))
        };
        facts.cardinality.insert(*n, card);
    }
    facts
}

/// Fills the per-class cardinality of every declaration.
pub fn compute_cardinality(mut sig: Signature) -> Signature {
    let facts = analyse(&sig);
    for d in sig.decls.iter_mut() {
        d.cardinality.clear();
    }
    for ((ty, cls), card) in facts.cardinality {
        sig.decls[ty.0].cardinality.insert(cls, card);
    }
    sig.analysed = true;
    sig
}

/// One violated rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    MultiIndex { ty: String, count: usize },
    UnsupportedIndexType { ty: String, index_ty: String },
    EmptyIndexType { ty: String, index_ty: String },
    PatternUnsupported { ctor: String, reason: String },
    UnboundIndexVar { ctor: String, var: String },
    ExplicitInResult { ctor: String, var: String },
    ExplicitNotIndex { ctor: String, var: String, ty: String },
    IndexVarMismatch { ctor: String, var: String },
    FiniteBinder { ctor: String, binder: String, cardinality: Cardinality },
    NonUniform { ty: String, classes: Vec<(String, Cardinality)> },
    EmptyArgument { ctor: String, class: String },
    DecreasingRecursion { ty: String },
}

impl Diagnostic {
    /// Short stable identifier of the rule.
    pub fn rule(&self) -> &'static str {
        match self {
            Diagnostic::MultiIndex { .. } => "single-index",
            Diagnostic::UnsupportedIndexType { .. } => "index-type",
            Diagnostic::EmptyIndexType { .. } => "index-type",
            Diagnostic::PatternUnsupported { .. } => "one-level-pattern",
            Diagnostic::UnboundIndexVar { .. } => "unbound-index-variable",
            Diagnostic::ExplicitInResult { .. } => "explicit-abstraction",
            Diagnostic::ExplicitNotIndex { .. } => "explicit-abstraction",
            Diagnostic::IndexVarMismatch { .. } => "index-variable-type",
            Diagnostic::FiniteBinder { .. } => "infinite-variables",
            Diagnostic::NonUniform { .. } => "uniform",
            Diagnostic::EmptyArgument { .. } => "empty-argument",
            Diagnostic::DecreasingRecursion { .. } => "decreasing-recursion",
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MultiIndex { ty, count } => write!(
                f,
                "[{}] `{ty}` has {count} indices; indexed types must have only a single index",
                self.rule()
            ),
            Diagnostic::UnsupportedIndexType { ty, index_ty } => write!(
                f,
                "[{}] index type `{index_ty}` of `{ty}` must be a natural-number type or an enumeration \
                 (it must not itself be indexed or be defined with binders)",
                self.rule()
            ),
            Diagnostic::EmptyIndexType { ty, index_ty } => {
                write!(f, "[{}] index type `{index_ty}` of `{ty}` has no values", self.rule())
            }
            Diagnostic::PatternUnsupported { ctor, reason } => write!(
                f,
                "[{}] result type of `{ctor}` is not supported: {reason}",
                self.rule()
            ),
            Diagnostic::UnboundIndexVar { ctor, var } => write!(
                f,
                "[{}] index variable `{var}` of `{ctor}` is not used in the result type and is not explicitly abstracted",
                self.rule()
            ),
            Diagnostic::ExplicitInResult { ctor, var } => write!(
                f,
                "[{}] explicitly abstracted `{var}` of `{ctor}` must not occur in the result type",
                self.rule()
            ),
            Diagnostic::ExplicitNotIndex { ctor, var, ty } => write!(
                f,
                "[{}] `{{{var}:{ty}}}` in `{ctor}` abstracts over a type that is not an index type",
                self.rule()
            ),
            Diagnostic::IndexVarMismatch { ctor, var } => write!(
                f,
                "[{}] index variable `{var}` of `{ctor}` is used at two different index types",
                self.rule()
            ),
            Diagnostic::FiniteBinder {
                ctor,
                binder,
                cardinality,
            } => write!(
                f,
                "[{}] Variables can only be of infinite type. `{ctor}` binds a variable of `{binder}`, which is {cardinality}",
                self.rule()
            ),
            Diagnostic::NonUniform { ty, classes } => {
                write!(
                    f,
                    "[{}] indexed type `{ty}` is not uniform: instances for different indices differ in cardinality (",
                    self.rule()
                )?;
                for (i, (c, card)) in classes.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}: {card}")?;
                }
                f.write_str(")")
            }
            Diagnostic::EmptyArgument { ctor, class } => write!(
                f,
                "[{}] constructor `{ctor}` (index class {class}) has an argument of an empty type",
                self.rule()
            ),
            Diagnostic::DecreasingRecursion { ty } => write!(
                f,
                "[{}] cardinality of `{ty}` depends on recursion through decreasing indices, which is not supported",
                self.rule()
            ),
        }
    }
}

/// How one payload slot of a constructor is coded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub source: SlotSource,
    /// `None` for slots ranging over all naturals; `Some(c)` for a finite
    /// slot with `c` values.
    pub radix: Option<Nat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotSource {
    Explicit(usize),
    Arg(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteCtor {
    pub ctor: usize,
    pub count: Nat,
    /// Explicit abstractions first, then arguments, in declaration order.
    pub slots: Vec<Slot>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfiniteCtor {
    pub ctor: usize,
    pub slots: Vec<Slot>,
}

/// Constructor layout of one index class, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassLayout {
    pub cardinality: Cardinality,
    pub finite: Vec<FiniteCtor>,
    pub finite_total: Nat,
    pub infinite: Vec<InfiniteCtor>,
}

/// A signature that passed every rule; immutable and shareable.
#[derive(Clone, Debug)]
pub struct ValidatedSignature {
    sig: Signature,
    layouts: BTreeMap<Node, ClassLayout>,
    fixed: Vec<Vec<Option<Vec<ArgInstance>>>>,
}

impl Deref for ValidatedSignature {
    type Target = Signature;
    fn deref(&self) -> &Signature {
        &self.sig
    }
}

impl ValidatedSignature {
    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    /// Argument instances of a constructor whose instance never varies
    /// (unindexed result, no explicit abstractions).
    pub fn fixed_instances(&self, ctor: CtorId) -> Option<&[ArgInstance]> {
        self.fixed[ctor.ty.0][ctor.index].as_deref()
    }

    pub fn layout(&self, ty: TypeId, cls: IndexClass) -> Option<&ClassLayout> {
        self.layouts.get(&(ty, cls))
    }

    pub fn cardinality(&self, ty: TypeId, cls: IndexClass) -> Cardinality {
        self.layouts
            .get(&(ty, cls))
            .map(|l| l.cardinality.clone())
            .unwrap_or(Cardinality::Empty)
    }
}

fn index_var_types(sig: &Signature, ty: TypeId, e: &IndexExpr, out: &mut Vec<(String, TypeId)>) {
    let Some(&it) = sig.decl(ty).index_types.first() else {
        return;
    };
    fn walk(e: &IndexExpr, it: TypeId, out: &mut Vec<(String, TypeId)>) {
        match e {
            IndexExpr::Var(v) => out.push((v.clone(), it)),
            IndexExpr::Succ(x) => walk(x, it, out),
            IndexExpr::Other(_, xs) => xs.iter().for_each(|x| walk(x, it, out)),
            _ => {}
        }
    }
    walk(e, it, out)
}

fn structural(sig: &Signature, out: &mut Vec<Diagnostic>) {
    for d in &sig.decls {
        match &d.index {
            IndexSpec::Multi(ts) => out.push(Diagnostic::MultiIndex {
                ty: d.name.clone(),
                count: ts.len(),
            }),
            IndexSpec::Unsupported(t) => out.push(Diagnostic::UnsupportedIndexType {
                ty: d.name.clone(),
                index_ty: sig.type_name(*t).to_string(),
            }),
            IndexSpec::Finite(t) if sig.decl(*t).ctors.is_empty() => out.push(Diagnostic::EmptyIndexType {
                ty: d.name.clone(),
                index_ty: sig.type_name(*t).to_string(),
            }),
            _ => {}
        }
        if matches!(d.index, IndexSpec::Multi(_) | IndexSpec::Unsupported(_)) {
            continue;
        }
        for c in &d.ctors {
            if let IndexPattern::Unsupported(reason) = &c.pattern {
                out.push(Diagnostic::PatternUnsupported {
                    ctor: c.name.clone(),
                    reason: reason.clone(),
                });
            }
            let mut result_vars = Vec::new();
            c.result.iter().for_each(|e| e.vars(&mut result_vars));
            let mut used = Vec::new();
            for a in &c.args {
                for r in a.binders.iter().chain(std::iter::once(&a.target)) {
                    r.index.iter().for_each(|e| e.vars(&mut used));
                }
            }
            for x in &c.explicit {
                if result_vars.contains(&x.var) {
                    out.push(Diagnostic::ExplicitInResult {
                        ctor: c.name.clone(),
                        var: x.var.clone(),
                    });
                }
                if sig.nat_shape(x.ty).is_none() && !sig.is_enumeration(x.ty) {
                    out.push(Diagnostic::ExplicitNotIndex {
                        ctor: c.name.clone(),
                        var: x.var.clone(),
                        ty: sig.type_name(x.ty).to_string(),
                    });
                }
            }
            for v in &used {
                if !result_vars.contains(v) && !c.explicit.iter().any(|x| x.var == *v) {
                    out.push(Diagnostic::UnboundIndexVar {
                        ctor: c.name.clone(),
                        var: v.clone(),
                    });
                }
            }
            // index variables must be used at one index type
            let mut typed: Vec<(String, TypeId)> = c.explicit.iter().map(|x| (x.var.clone(), x.ty)).collect();
            for e in &c.result {
                index_var_types(sig, TypeId(sig.type_id(&d.name).unwrap().0), e, &mut typed);
            }
            for a in &c.args {
                for r in a.binders.iter().chain(std::iter::once(&a.target)) {
                    for e in &r.index {
                        index_var_types(sig, r.ty, e, &mut typed);
                    }
                }
            }
            let mut reported = BTreeSet::new();
            for (v, t) in &typed {
                if typed.iter().any(|(w, u)| w == v && u != t) && reported.insert(v.clone()) {
                    out.push(Diagnostic::IndexVarMismatch {
                        ctor: c.name.clone(),
                        var: v.clone(),
                    });
                }
            }
        }
    }
}

/// Checks every rule and, on success, computes the constructor layouts the
/// codec needs.
pub fn validate(sig: Signature) -> Result<ValidatedSignature, Vec<Diagnostic>> {
    let sig = if sig.is_analysed() {
        sig
    } else {
        compute_cardinality(sig)
    };
    let facts = analyse(&sig);
    let model = build_model(&sig);
    let mut diags = Vec::new();
    structural(&sig, &mut diags);

    let card = |n: &Node| facts.cardinality.get(n).cloned().unwrap_or(Cardinality::Empty);

    for ty in &facts.decreasing {
        diags.push(Diagnostic::DecreasingRecursion {
            ty: sig.type_name(*ty).to_string(),
        });
    }

    let mut binder_reported = BTreeSet::new();
    for node in &model.nodes {
        for c in &model.ctors[node] {
            let cname = &sig.decl(node.0).ctors[c.ctor].name;
            for a in &c.args {
                for b in a.binders.iter().flatten() {
                    let bc = card(b);
                    if !bc.is_infinite() && binder_reported.insert((cname.clone(), b.0)) {
                        diags.push(Diagnostic::FiniteBinder {
                            ctor: cname.clone(),
                            binder: sig.type_name(b.0).to_string(),
                            cardinality: bc,
                        });
                    }
                }
            }
        }
    }

    for (i, d) in sig.decls.iter().enumerate() {
        let ty = TypeId(i);
        if d.index_types.is_empty() {
            continue;
        }
        let classes = sig.classes(ty);
        let cards: Vec<Cardinality> = classes.iter().map(|c| card(&(ty, *c))).collect();
        if cards.windows(2).any(|w| w[0] != w[1]) {
            diags.push(Diagnostic::NonUniform {
                ty: d.name.clone(),
                classes: classes
                    .iter()
                    .map(|c| sig.show_class(ty, *c))
                    .zip(cards)
                    .collect(),
            });
        }
    }

    for (node, dead) in &facts.dead {
        for ci in dead {
            diags.push(Diagnostic::EmptyArgument {
                ctor: sig.decl(node.0).ctors[*ci].name.clone(),
                class: sig.show_class(node.0, node.1),
            });
        }
    }

    if !diags.is_empty() {
        return Err(diags);
    }

    let mut layouts = BTreeMap::new();
    for node in &model.nodes {
        let cardinality = card(node);
        let mut finite = Vec::new();
        let mut infinite = Vec::new();
        let mut finite_total = Nat::zero();
        for c in &model.ctors[node] {
            let Some(lives) = facts.live.get(&(*node, c.ctor)) else {
                continue;
            };
            let mut slots = Vec::new();
            for (k, s) in c.explicit_sizes.iter().enumerate() {
                slots.push(Slot {
                    source: SlotSource::Explicit(k),
                    radix: s.map(Nat::from),
                });
            }
            for (k, (a, live)) in c.args.iter().zip(lives).enumerate() {
                let binders: Vec<Node> = a.binders.iter().flatten().copied().collect();
                let inf = live
                    .iter()
                    .any(|t| card(t).is_infinite() || binders.contains(t));
                let radix = if inf {
                    None
                } else {
                    live.iter()
                        .filter_map(|t| match card(t) {
                            Cardinality::Finite(n) => Some(n),
                            _ => None,
                        })
                        .max()
                };
                slots.push(Slot {
                    source: SlotSource::Arg(k),
                    radix,
                });
            }
            if slots.iter().any(|s| s.radix.is_none()) {
                infinite.push(InfiniteCtor { ctor: c.ctor, slots });
            } else {
                let count = slots
                    .iter()
                    .fold(Nat::one(), |acc, s| acc * s.radix.as_ref().unwrap());
                finite_total += &count;
                finite.push(FiniteCtor {
                    ctor: c.ctor,
                    count,
                    slots,
                });
            }
        }
        layouts.insert(
            *node,
            ClassLayout {
                cardinality,
                finite,
                finite_total,
                infinite,
            },
        );
    }
    let fixed = sig
        .decls
        .iter()
        .enumerate()
        .map(|(i, d)| {
            (0..d.ctors.len())
                .map(|k| {
                    let c = &d.ctors[k];
                    let unit = matches!(c.pattern, IndexPattern::Unit) && c.explicit.is_empty();
                    let id = CtorId { ty: TypeId(i), index: k };
                    unit.then(|| instances_at(&sig, id, &IndexValue::Unit, &[])).flatten()
                })
                .collect()
        })
        .collect();
    Ok(ValidatedSignature { sig, layouts, fixed })
}

/// Constructors applicable at a class, split into finite and infinite ones
/// (declaration order; tags are assigned by the codec).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassCtors {
    /// Finite constructors and how many instances each contributes.
    pub finite: Vec<(CtorId, Nat)>,
    pub infinite: Vec<CtorId>,
}

pub fn ctors_for_class(sig: &ValidatedSignature, ty: TypeId, cls: IndexClass) -> ClassCtors {
    match sig.layout(ty, cls) {
        None => ClassCtors {
            finite: vec![],
            infinite: vec![],
        },
        Some(l) => ClassCtors {
            finite: l
                .finite
                .iter()
                .map(|f| (CtorId { ty, index: f.ctor }, f.count.clone()))
                .collect(),
            infinite: l.infinite.iter().map(|i| CtorId { ty, index: i.ctor }).collect(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigmodel::parse_signature;

    fn card_of(text: &str, ty: &str) -> BTreeMap<IndexClass, Cardinality> {
        let sig = compute_cardinality(parse_signature(text).unwrap());
        let id = sig.type_id(ty).unwrap();
        sig.decl(id).cardinality.clone()
    }

    fn fin(n: u64) -> Cardinality {
        Cardinality::Finite(Nat::from(n))
    }

    const TERM: &str = "term : nat -> type.
        unit : term z.
        lam : (term z -> term N) -> term (s N).
        app : term (s N) -> term z -> term N.
        rec : (term N -> term N) -> term N.";

    #[test]
    fn bool_is_finite() {
        let c = card_of("bool : type. true : bool. false : bool.", "bool");
        assert_eq!(c[&IndexClass::Unit], fin(2));
    }

    #[test]
    fn no_ctors_is_empty() {
        let c = card_of("e : type.", "e");
        assert_eq!(c[&IndexClass::Unit], Cardinality::Empty);
    }

    #[test]
    fn nat_is_infinite() {
        let c = card_of("nat : type. z : nat. s : nat -> nat.", "nat");
        assert_eq!(c[&IndexClass::Unit], Cardinality::Infinite);
    }

    #[test]
    fn lambda_is_infinite_through_binder() {
        let c = card_of("t : type. lam : (t -> t) -> t.", "t");
        assert_eq!(c[&IndexClass::Unit], Cardinality::Infinite);
    }

    #[test]
    fn binder_reaching_its_variable_through_another_type() {
        let c = card_of("t : type. wrap : type. lam : (t -> wrap) -> t. w : t -> wrap.", "t");
        assert_eq!(c[&IndexClass::Unit], Cardinality::Infinite);
    }

    #[test]
    fn products_and_sums_of_finite_types() {
        let text = "bool : type. tt : bool. ff : bool.
                    tri : type. a : tri. b : tri. c : tri.
                    pair : type. mk : bool -> tri -> pair. none : pair.";
        assert_eq!(card_of(text, "pair")[&IndexClass::Unit], fin(7));
    }

    #[test]
    fn term_family_both_classes_infinite() {
        let c = card_of(TERM, "term");
        assert_eq!(c[&IndexClass::Z], Cardinality::Infinite);
        assert_eq!(c[&IndexClass::S], Cardinality::Infinite);
        let v = validate(parse_signature(TERM).unwrap()).unwrap();
        let term = v.type_id("term").unwrap();
        let z = ctors_for_class(&v, term, IndexClass::Z);
        let names = |ids: &[CtorId]| ids.iter().map(|c| v.ctor(*c).name.clone()).collect::<Vec<_>>();
        assert_eq!(z.finite.len(), 1);
        assert_eq!(v.ctor(z.finite[0].0).name, "unit");
        assert_eq!(names(&z.infinite), vec!["app", "rec"]);
        let s = ctors_for_class(&v, term, IndexClass::S);
        assert!(s.finite.is_empty());
        assert_eq!(names(&s.infinite), vec!["lam", "app", "rec"]);
    }

    #[test]
    fn natlist_split() {
        let v = validate(
            parse_signature("natlist : type. natlist/0 : natlist. natlist/+ : nat -> natlist -> natlist.")
                .unwrap(),
        )
        .unwrap();
        let t = v.type_id("natlist").unwrap();
        let cc = ctors_for_class(&v, t, IndexClass::Unit);
        assert_eq!(cc.finite, vec![(CtorId { ty: t, index: 0 }, Nat::from(1u32))]);
        assert_eq!(cc.infinite, vec![CtorId { ty: t, index: 1 }]);
    }

    #[test]
    fn actuals_style_is_not_uniform() {
        let text = "t : type. lam : (t -> t) -> t.
                    actuals : nat -> type.
                    actuals/0 : actuals z.
                    actuals/+ : t -> actuals N -> actuals (s N).";
        let c = card_of(text, "actuals");
        assert_eq!(c[&IndexClass::Z], fin(1));
        assert_eq!(c[&IndexClass::S], Cardinality::Infinite);
        let diags = validate(parse_signature(text).unwrap()).unwrap_err();
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::NonUniform { ty, .. } if ty == "actuals")));
    }

    #[test]
    fn finite_binder_rejected() {
        let text = "bool : type. tt : bool. ff : bool. t : type. c : t. f : (bool -> t) -> t.";
        let diags = validate(parse_signature(text).unwrap()).unwrap_err();
        assert!(diags
            .iter()
            .any(|d| d.to_string().contains("Variables can only be of infinite type.")), "{diags:?}");
    }

    #[test]
    fn multi_index_rejected() {
        let text = "plus : nat -> nat -> nat -> type.
                    plus/z : plus z N N.
                    plus/s : plus X Y Z -> plus (s X) Y (s Z).";
        let diags = validate(parse_signature(text).unwrap()).unwrap_err();
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::MultiIndex { count: 3, .. })));
    }

    #[test]
    fn deep_pattern_rejected() {
        let text = "f : nat -> type. a : f z. b : f N -> f (s (s N)).";
        let diags = validate(parse_signature(text).unwrap()).unwrap_err();
        assert!(diags.iter().any(|d| d.rule() == "one-level-pattern"));
    }

    #[test]
    fn unbound_and_explicit_rules() {
        let text = "t : type. c : t. f : nat -> type. g : f M -> f z.";
        let diags = validate(parse_signature(text).unwrap()).unwrap_err();
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::UnboundIndexVar { var, .. } if var == "M")));
        let text = "f : nat -> type. a : f N. g : {N:nat} f N -> f N.";
        let diags = validate(parse_signature(text).unwrap()).unwrap_err();
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::ExplicitInResult { .. })));
    }

    #[test]
    fn exists_form_is_accepted_and_infinite() {
        let text = format!("{TERM}\nexists : {{M:nat}} (term M -> term N) -> term N.");
        let v = validate(parse_signature(&text).unwrap()).unwrap();
        let term = v.type_id("term").unwrap();
        let l = v.layout(term, IndexClass::Z).unwrap();
        let ex = l.infinite.iter().find(|c| v.decl(term).ctors[c.ctor].name == "exists").unwrap();
        assert_eq!(ex.slots[0].radix, None);
        assert_eq!(ex.slots[0].source, SlotSource::Explicit(0));
    }

    #[test]
    fn paper_actuals_over_argtype_is_rejected() {
        let text = "term : nat -> type. unit : term z.
                    argtype : type.
                    argtype/0 : argtype.
                    argtype/+ : nat -> argtype -> argtype.
                    actuals : argtype -> type.
                    actuals/0 : actuals argtype/0.
                    actuals/+ : term K -> actuals A -> actuals (argtype/+ K A).";
        let diags = validate(parse_signature(text).unwrap()).unwrap_err();
        assert!(diags.iter().any(|d| d.rule() == "index-type"));
    }

    #[test]
    fn decreasing_recursion_rejected() {
        let text = "f : nat -> type. a : f z. b : f N -> f (s N).";
        let diags = validate(parse_signature(text).unwrap()).unwrap_err();
        assert!(diags.iter().any(|d| d.rule() == "decreasing-recursion"), "{diags:?}");
    }

    #[test]
    fn dead_constructor_rejected() {
        let text = "e : type. t : type. c : t. d : e -> t.";
        let diags = validate(parse_signature(text).unwrap()).unwrap_err();
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::EmptyArgument { ctor, .. } if ctor == "d")));
    }

    #[test]
    fn enumeration_index() {
        let text = "sort : type. num : sort. flag : sort.
                    g : sort -> type.
                    lit : nat -> g num.
                    yes : g flag. no : g flag.
                    wrap : g K -> g K.";
        let v = validate(parse_signature(text).unwrap()).unwrap();
        let g = v.type_id("g").unwrap();
        assert_eq!(v.cardinality(g, IndexClass::Fin(0)), Cardinality::Infinite);
        assert_eq!(v.cardinality(g, IndexClass::Fin(1)), Cardinality::Infinite);
    }

    #[test]
    fn validation_is_deterministic() {
        let text = "bool : type. tt : bool. ff : bool. t : type. c : t. f : (bool -> t) -> t.
                    plus : nat -> nat -> nat -> type.";
        let a = validate(parse_signature(text).unwrap()).unwrap_err();
        let b = validate(parse_signature(text).unwrap()).unwrap_err();
        assert_eq!(a, b);
    }
}
