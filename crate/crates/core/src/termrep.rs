//! Terms over a validated signature, with variables numbered by de Bruijn
//! *levels* per (type, index): a variable's number is fixed where it is bound
//! and never shifts under deeper binders. Alpha-equivalent surface terms get
//! identical representations.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;
use thiserror::Error;

use crate::bignat::Nat;
pub use crate::sigmodel::ArgInstance;
use crate::sigmodel::{instances_at, match_pattern, CtorId, IndexValue, TypeId, ValidatedSignature};
use crate::syntax::{parse_expr, Expr, Pos, SyntaxError};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarRef {
    pub ty: TypeId,
    pub index: IndexValue,
    pub level: Nat,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConTerm {
    pub ctor: CtorId,
    /// Values of the constructor's explicit index abstractions.
    pub index_args: Vec<IndexValue>,
    pub args: Vec<TermArg>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermArg {
    pub binder_count: usize,
    pub body: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(VarRef),
    Con(ConTerm),
}

impl Term {
    pub fn var(ty: TypeId, index: IndexValue, level: impl Into<Nat>) -> Term {
        Term::Var(VarRef {
            ty,
            index,
            level: level.into(),
        })
    }

    pub fn con(ctor: CtorId, index_args: Vec<IndexValue>, args: Vec<TermArg>) -> Term {
        Term::Con(ConTerm {
            ctor,
            index_args,
            args,
        })
    }
}

impl TermArg {
    pub fn plain(body: Term) -> TermArg {
        TermArg {
            binder_count: 0,
            body,
        }
    }

    pub fn bind(binder_count: usize, body: Term) -> TermArg {
        TermArg { binder_count, body }
    }
}

/// Number of free variables in scope per (type, index).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CountVector {
    counts: BTreeMap<(TypeId, IndexValue), Nat>,
}

impl CountVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, ty: TypeId, index: &IndexValue) -> Nat {
        if self.counts.is_empty() {
            return Nat::default();
        }
        self.counts
            .get(&(ty, index.clone()))
            .cloned()
            .unwrap_or_default()
    }

    /// The vector with one more variable at `(ty, index)`.
    pub fn extend(&self, ty: TypeId, index: &IndexValue) -> CountVector {
        let mut v = self.clone();
        v.push(ty, index);
        v
    }

    /// Adds one variable at `(ty, index)`, returning its level.
    pub fn push(&mut self, ty: TypeId, index: &IndexValue) -> Nat {
        let slot = self.counts.entry((ty, index.clone())).or_default();
        let level = slot.clone();
        *slot += 1u32;
        level
    }

    /// Undoes the matching [`CountVector::push`].
    pub fn pop(&mut self, ty: TypeId, index: &IndexValue) {
        let key = (ty, index.clone());
        let slot = self.counts.get_mut(&key).expect("pop without push");
        *slot -= 1u32;
        if slot.is_zero() {
            self.counts.remove(&key);
        }
    }

    pub fn set(&mut self, ty: TypeId, index: IndexValue, count: Nat) {
        if count.is_zero() {
            self.counts.remove(&(ty, index));
        } else {
            self.counts.insert((ty, index), count);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(TypeId, IndexValue), &Nat)> {
        self.counts.iter()
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: unbound name `{name}`")]
    Unbound { name: String, pos: Pos },
    #[error("{pos}: {msg}")]
    Mismatch { msg: String, pos: Pos },
    #[error("ill-formed term: {0}")]
    Ill(String),
}

fn mismatch(pos: Pos, msg: impl Into<String>) -> TermError {
    TermError::Mismatch {
        msg: msg.into(),
        pos,
    }
}

/// Caller-supplied names for free variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarEnv {
    entries: Vec<(String, VarRef)>,
}

impl VarEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, var: VarRef) {
        self.entries.push((name.into(), var));
    }

    /// Names `x0, x1, ...` for the free variables of `v`, in key order.
    pub fn for_counts(sig: &ValidatedSignature, v: &CountVector) -> VarEnv {
        let mut env = VarEnv::new();
        let single = v.iter().count() == 1;
        for ((ty, idx), n) in v.iter() {
            let mut level = Nat::zero();
            while &level < n {
                let name = if single {
                    format!("x{level}")
                } else {
                    format!("{}{}_{level}", sig.type_name(*ty), sig.show_index(*ty, idx))
                };
                env.bind(
                    name,
                    VarRef {
                        ty: *ty,
                        index: idx.clone(),
                        level: level.clone(),
                    },
                );
                level += 1u32;
            }
        }
        env
    }

    fn name_of(&self, v: &VarRef) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(_, r)| r == v)
            .map(|(n, _)| n.as_str())
    }

    /// The count vector implied by the named free variables.
    pub fn counts(&self) -> CountVector {
        let mut v = CountVector::new();
        for (_, r) in &self.entries {
            let cur = v.get(r.ty, &r.index);
            if r.level >= cur {
                v.set(r.ty, r.index.clone(), &r.level + 1u32);
            }
        }
        v
    }
}

/// Resolves the argument types of `ctor` when it builds a term at `index`
/// with the given explicit index values. `None` if the constructor does not
/// apply there.
pub fn instantiate(
    sig: &ValidatedSignature,
    ctor: CtorId,
    index: &IndexValue,
    index_args: &[IndexValue],
) -> Option<Vec<ArgInstance>> {
    instances(sig, ctor, index, index_args).map(Cow::into_owned)
}

/// As [`instantiate`], borrowing the precomputed instances of unindexed
/// constructors.
pub fn instances<'s>(
    sig: &'s ValidatedSignature,
    ctor: CtorId,
    index: &IndexValue,
    index_args: &[IndexValue],
) -> Option<Cow<'s, [ArgInstance]>> {
    if *index == IndexValue::Unit && index_args.is_empty() {
        if let Some(fixed) = sig.fixed_instances(ctor) {
            return Some(Cow::Borrowed(fixed));
        }
    }
    instances_at(sig, ctor, index, index_args).map(Cow::Owned)
}

struct Elab<'a> {
    sig: &'a ValidatedSignature,
    scope: Vec<(String, VarRef)>,
    counts: CountVector,
}

impl Elab<'_> {
    fn expand_abbrev(&self, e: &Expr) -> Option<Expr> {
        let (head, args) = e.spine();
        let Expr::Ident(name, _) = head else {
            return None;
        };
        if self.scope.iter().any(|(n, _)| n == name) {
            return None;
        }
        let body = self.sig.abbrev(name)?;
        Some(
            args.into_iter()
                .fold(body.clone(), |f, a| Expr::App(Box::new(f), Box::new(a.clone()))),
        )
    }

    fn index_value(&self, ty: TypeId, e: &Expr) -> Result<IndexValue, TermError> {
        if self.sig.nat_shape(ty).is_some() {
            return self
                .sig
                .eval_nat_literal(ty, e)
                .map(IndexValue::Nat)
                .ok_or_else(|| mismatch(e.pos(), "expected a natural-number index"));
        }
        if let Expr::Ident(name, _) = e {
            if let Some(k) = self.sig.decl(ty).ctors.iter().position(|c| c.name == *name) {
                return Ok(IndexValue::Fin(k));
            }
        }
        Err(mismatch(
            e.pos(),
            format!("expected a value of index type `{}`", self.sig.type_name(ty)),
        ))
    }

    fn numeral(&self, ty: TypeId, digits: &str, pos: Pos) -> Result<Term, TermError> {
        let shape = self.sig.nat_shape(ty).ok_or_else(|| {
            mismatch(pos, format!("numeral at non-nat type `{}`", self.sig.type_name(ty)))
        })?;
        let n: u64 = digits.parse().map_err(|_| mismatch(pos, "numeral too large"))?;
        let zero = self.sig.ctor_id(&shape.zero).unwrap();
        let succ = self.sig.ctor_id(&shape.succ).unwrap();
        let mut t = Term::con(zero, vec![], vec![]);
        for _ in 0..n {
            t = Term::con(succ, vec![], vec![TermArg::plain(t)]);
        }
        Ok(t)
    }

    fn describe(&self, ty: TypeId, index: &IndexValue) -> String {
        let i = self.sig.show_index(ty, index);
        if i.is_empty() {
            self.sig.type_name(ty).to_string()
        } else {
            format!("{} {i}", self.sig.type_name(ty))
        }
    }

    fn term(&mut self, e: &Expr, ty: TypeId, index: &IndexValue) -> Result<Term, TermError> {
        if let Some(x) = self.expand_abbrev(e) {
            return self.term(&x, ty, index);
        }
        let (head, args) = e.spine();
        let (name, pos) = match head {
            Expr::Ident(n, p) => (n.as_str(), *p),
            Expr::Lam { pos, .. } => {
                return Err(mismatch(*pos, "unexpected binder; this position binds no variables"))
            }
            other => return Err(mismatch(other.pos(), "expected a term")),
        };

        if let Some((_, v)) = self.scope.iter().rev().find(|(n, _)| n == name) {
            if !args.is_empty() {
                return Err(mismatch(pos, format!("variable `{name}` cannot be applied")));
            }
            if v.ty != ty || v.index != *index {
                return Err(mismatch(
                    pos,
                    format!("variable `{name}` does not have type `{}`", self.describe(ty, index)),
                ));
            }
            return Ok(Term::Var(v.clone()));
        }
        if args.is_empty() && name.chars().all(|c| c.is_ascii_digit()) {
            return self.numeral(ty, name, pos);
        }
        let Some(cid) = self.sig.ctor_id(name) else {
            return Err(TermError::Unbound {
                name: name.to_string(),
                pos,
            });
        };
        let ctor = self.sig.ctor(cid);
        if cid.ty != ty || match_pattern(&ctor.pattern, index).is_none() {
            return Err(mismatch(
                pos,
                format!("`{name}` does not construct `{}`", self.describe(ty, index)),
            ));
        }
        let expected = ctor.explicit.len() + ctor.args.len();
        if args.len() != expected {
            return Err(mismatch(
                pos,
                format!("`{name}` expects {expected} argument(s), got {}", args.len()),
            ));
        }
        let index_args = ctor
            .explicit
            .iter()
            .zip(&args)
            .map(|(x, a)| self.index_value(x.ty, a))
            .collect::<Result<Vec<_>, _>>()?;
        let shapes = instantiate(self.sig, cid, index, &index_args)
            .ok_or_else(|| TermError::Ill(format!("cannot resolve argument types of `{name}`")))?;
        let mut out = Vec::with_capacity(shapes.len());
        for (inst, a) in shapes.iter().zip(&args[ctor.explicit.len()..]) {
            out.push(self.arg(inst, cid, a)?);
        }
        Ok(Term::con(cid, index_args, out))
    }

    fn arg(&mut self, inst: &ArgInstance, cid: CtorId, e: &Expr) -> Result<TermArg, TermError> {
        let mut body = e.clone();
        let mut pushed = 0;
        let mut result = Ok(());
        for (bty, bidx) in &inst.binders {
            if !matches!(body, Expr::Lam { .. }) {
                if let Some(x) = self.expand_abbrev(&body) {
                    body = x;
                }
            }
            let Expr::Lam { var, ty, body: inner, pos } = body.clone() else {
                result = Err(mismatch(
                    body.pos(),
                    format!(
                        "argument of `{}` must bind {} variable(s)",
                        self.sig.ctor(cid).name,
                        inst.binders.len()
                    ),
                ));
                break;
            };
            if let Some(t) = &ty {
                let (h, _) = t.spine();
                if !matches!(h, Expr::Ident(n, _) if n == self.sig.type_name(*bty)) {
                    result = Err(mismatch(
                        pos,
                        format!("binder `{var}` must have type `{}`", self.describe(*bty, bidx)),
                    ));
                    break;
                }
            }
            let level = self.counts.push(*bty, bidx);
            self.scope.push((
                var,
                VarRef {
                    ty: *bty,
                    index: bidx.clone(),
                    level,
                },
            ));
            pushed += 1;
            body = *inner;
        }
        let out = result.and_then(|_| self.term(&body, inst.target.0, &inst.target.1));
        for (bty, bidx) in inst.binders[..pushed].iter().rev() {
            self.scope.pop();
            self.counts.pop(*bty, bidx);
        }
        Ok(TermArg::bind(inst.binders.len(), out?))
    }
}

/// Parses a closed term of type `ty` at `index`.
pub fn parse_term(
    sig: &ValidatedSignature,
    ty: TypeId,
    index: &IndexValue,
    text: &str,
) -> Result<Term, TermError> {
    parse_open_term(sig, ty, index, text, &VarEnv::new())
}

/// Parses a term whose free variables are named by `env`.
pub fn parse_open_term(
    sig: &ValidatedSignature,
    ty: TypeId,
    index: &IndexValue,
    text: &str,
    env: &VarEnv,
) -> Result<Term, TermError> {
    let e = parse_expr(text)?;
    let mut el = Elab {
        sig,
        scope: env.entries.clone(),
        counts: env.counts(),
    };
    el.term(&e, ty, index)
}

/// Chooses the name of a binder from its depth among enclosing binders.
pub type Namer<'a> = &'a dyn Fn(usize) -> String;

fn default_name(d: usize) -> String {
    format!("x{d}")
}

/// Prints a closed term of type `ty` at `index`; binders are named
/// `x0, x1, ...` by depth.
pub fn print_term(sig: &ValidatedSignature, ty: TypeId, index: &IndexValue, term: &Term) -> String {
    print_term_with(sig, ty, index, term, &VarEnv::new(), &default_name)
}

/// Prints a term whose free variables are named by `env`.
pub fn print_open_term(
    sig: &ValidatedSignature,
    ty: TypeId,
    index: &IndexValue,
    term: &Term,
    env: &VarEnv,
) -> String {
    print_term_with(sig, ty, index, term, env, &default_name)
}

pub fn print_term_with(
    sig: &ValidatedSignature,
    ty: TypeId,
    index: &IndexValue,
    term: &Term,
    env: &VarEnv,
    namer: Namer,
) -> String {
    let mut p = Printer {
        sig,
        env,
        namer,
        counts: env.counts(),
        stack: Vec::new(),
        out: String::new(),
    };
    debug_assert!(match term {
        Term::Var(v) => v.ty == ty,
        Term::Con(c) => c.ctor.ty == ty,
    });
    p.term(term, index, false);
    p.out
}

struct Printer<'a> {
    sig: &'a ValidatedSignature,
    env: &'a VarEnv,
    namer: Namer<'a>,
    counts: CountVector,
    stack: Vec<(VarRef, String)>,
    out: String,
}

impl Printer<'_> {
    fn fresh(&self) -> String {
        let taken = |n: &str| {
            self.env.entries.iter().any(|(m, _)| m == n)
                || self.stack.iter().any(|(_, m)| m == n)
                || self.sig.ctor_id(n).is_some()
                || self.sig.abbrev(n).is_some()
        };
        let start = self.stack.len();
        let tries = start + self.env.entries.len() + 64;
        for d in start..start + tries {
            let n = (self.namer)(d);
            if !taken(&n) {
                return n;
            }
        }
        // the namer keeps colliding; number its first suggestion
        let stem = (self.namer)(start);
        (0..).map(|k| format!("{stem}{k}")).find(|n| !taken(n)).unwrap()
    }

    fn term(&mut self, t: &Term, index: &IndexValue, nested: bool) {
        match t {
            Term::Var(v) => {
                let name = self
                    .stack
                    .iter()
                    .rev()
                    .find(|(r, _)| r == v)
                    .map(|(_, n)| n.clone())
                    .or_else(|| self.env.name_of(v).map(str::to_string))
                    .unwrap_or_else(|| {
                        format!(
                            "?{}{}#{}",
                            self.sig.type_name(v.ty),
                            self.sig.show_index(v.ty, &v.index),
                            v.level
                        )
                    });
                self.out.push_str(&name);
            }
            Term::Con(c) => {
                let ctor = self.sig.ctor(c.ctor);
                let wrap = nested && !(c.args.is_empty() && c.index_args.is_empty());
                if wrap {
                    self.out.push('(');
                }
                self.out.push_str(&ctor.name);
                for (x, v) in ctor.explicit.iter().zip(&c.index_args) {
                    self.out.push(' ');
                    match v {
                        IndexValue::Fin(k) => self.out.push_str(&self.sig.decl(x.ty).ctors[*k].name),
                        IndexValue::Nat(n) => {
                            let _ = write!(self.out, "{n}");
                        }
                        IndexValue::Unit => {}
                    }
                }
                let insts = instantiate(self.sig, c.ctor, index, &c.index_args);
                let n = c.args.len();
                for (i, a) in c.args.iter().enumerate() {
                    self.out.push(' ');
                    match insts.as_ref().and_then(|v| v.get(i)) {
                        Some(inst) => self.arg(a, inst, i + 1 == n),
                        None => self.out.push('?'),
                    }
                }
                if wrap {
                    self.out.push(')');
                }
            }
        }
    }

    fn arg(&mut self, a: &TermArg, inst: &ArgInstance, last: bool) {
        let tidx = &inst.target.1;
        if inst.binders.is_empty() {
            self.term(&a.body, tidx, true);
            return;
        }
        if !last {
            self.out.push('(');
        }
        for (bty, bidx) in &inst.binders {
            let name = self.fresh();
            let _ = write!(self.out, "[{name}] ");
            let level = self.counts.push(*bty, bidx);
            self.stack.push((
                VarRef {
                    ty: *bty,
                    index: bidx.clone(),
                    level,
                },
                name,
            ));
        }
        self.term(&a.body, tidx, false);
        for (bty, bidx) in inst.binders.iter().rev() {
            self.stack.pop();
            self.counts.pop(*bty, bidx);
        }
        if !last {
            self.out.push(')');
        }
    }
}

/// Checks that `term` is a well-formed term of type `ty` at `index` whose
/// free variables lie within `counts`.
pub fn check_term(
    sig: &ValidatedSignature,
    ty: TypeId,
    index: &IndexValue,
    counts: &CountVector,
    term: &Term,
) -> Result<(), TermError> {
    let mut v = counts.clone();
    check_inner(sig, ty, index, &mut v, term)
}

fn check_inner(
    sig: &ValidatedSignature,
    ty: TypeId,
    index: &IndexValue,
    v: &mut CountVector,
    term: &Term,
) -> Result<(), TermError> {
    match term {
        Term::Var(r) => {
            if r.ty != ty || r.index != *index {
                return Err(TermError::Ill(format!(
                    "variable of type `{}` used at `{}`",
                    sig.type_name(r.ty),
                    sig.type_name(ty)
                )));
            }
            if r.level >= v.get(ty, index) {
                return Err(TermError::Ill(format!("variable level {} out of scope", r.level)));
            }
            Ok(())
        }
        Term::Con(c) => {
            if c.ctor.ty != ty {
                return Err(TermError::Ill(format!(
                    "`{}` does not construct `{}`",
                    sig.ctor(c.ctor).name,
                    sig.type_name(ty)
                )));
            }
            let ctor = sig.ctor(c.ctor);
            for (x, val) in ctor.explicit.iter().zip(&c.index_args) {
                let ok = match val {
                    IndexValue::Nat(_) => sig.nat_shape(x.ty).is_some(),
                    IndexValue::Fin(k) => *k < sig.decl(x.ty).ctors.len() && sig.is_enumeration(x.ty),
                    IndexValue::Unit => false,
                };
                if !ok {
                    return Err(TermError::Ill(format!("bad explicit index for `{}`", ctor.name)));
                }
            }
            let insts = instances(sig, c.ctor, index, &c.index_args).ok_or_else(|| {
                TermError::Ill(format!("`{}` does not apply at this index", ctor.name))
            })?;
            if insts.len() != c.args.len() {
                return Err(TermError::Ill(format!("arity mismatch for `{}`", ctor.name)));
            }
            for (a, inst) in c.args.iter().zip(insts.iter()) {
                if a.binder_count != inst.binders.len() {
                    return Err(TermError::Ill(format!("binder count mismatch for `{}`", ctor.name)));
                }
                for (bty, bidx) in &inst.binders {
                    v.push(*bty, bidx);
                }
                let r = check_inner(sig, inst.target.0, &inst.target.1, v, &a.body);
                for (bty, bidx) in inst.binders.iter().rev() {
                    v.pop(*bty, bidx);
                }
                r?;
            }
            Ok(())
        }
    }
}

/// Node count: one per constructor and variable occurrence, plus `n + 1`
/// for an explicit natural-number index `n` and one for an explicit
/// enumeration index.
pub fn term_size(term: &Term) -> usize {
    match term {
        Term::Var(_) => 1,
        Term::Con(c) => {
            let explicit: usize = c
                .index_args
                .iter()
                .map(|v| match v {
                    IndexValue::Nat(n) => usize::try_from(n).unwrap_or(usize::MAX - 1) + 1,
                    _ => 1,
                })
                .fold(0usize, |a, b| a.saturating_add(b));
            c.args
                .iter()
                .map(|a| term_size(&a.body))
                .fold(1usize.saturating_add(explicit), |a, b| a.saturating_add(b))
        }
    }
}
