//! The bijection between well-typed terms and natural numbers.
//!
//! For a term of type `t` at index `i` under count vector `V`, with `F`
//! finite instances and `I` infinite constructors at the class of `i`:
//!
//! * a variable of level `l` has code `l`;
//! * the finite instance at offset `f` has code `V(t,i) + f`;
//! * an infinite constructor with tag `k` and payload `p` has code
//!   `V(t,i) + F + I*p + k`.
//!
//! The payload mingles the codes of all unbounded slots (explicit index
//! abstractions first, then arguments) and then folds in the bounded ones
//! as mixed-radix digits.

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::bignat::{mingle_fold, unmingle_fold, Nat};
use crate::sigmodel::{
    Cardinality, ClassLayout, CtorId, IndexClass, IndexValue, Slot, SlotSource, TypeId,
    ValidatedSignature,
};
use crate::termrep::{check_term, instances, ArgInstance, ConTerm, CountVector, Term, TermArg};

/// Decoding budget used when the caller does not pick one.
pub const DEFAULT_FUEL: u64 = 100_000;

/// Largest constructor count for which tag permutations are searched.
pub const MAX_PERMUTED_TAGS: usize = 12;

const TRIAL_FUEL: u64 = 10_000;
const TRACE_WINDOW: usize = 256;

type Node = (TypeId, IndexClass);

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("fuel exhausted after {steps} decoding steps (the tag plan is not well founded)")]
    FuelExhausted { steps: u64 },
    #[error("code {code} is out of range: the type has {cardinality} value(s)")]
    CodeOutOfRange { code: Nat, cardinality: Nat },
    #[error("ill-typed term: {0}")]
    IllTyped(String),
    #[error("no well-founded tag order for {}", .classes.join(", "))]
    NoWellFoundedPlan { classes: Vec<String> },
    #[error("{0}")]
    BadTagOrder(String),
}

/// Tag assignment for every class of a validated signature.
#[derive(Clone, Debug)]
pub struct CodecPlan {
    sig: ValidatedSignature,
    /// `tags[node][k]` is the position in the class layout's infinite list
    /// of the constructor with tag `k`.
    tags: BTreeMap<Node, Vec<usize>>,
}

impl CodecPlan {
    /// A plan using declaration order at every class, without any check.
    pub fn declaration_order(sig: ValidatedSignature) -> CodecPlan {
        let mut tags = BTreeMap::new();
        for (i, _) in sig.decls.iter().enumerate() {
            let ty = TypeId(i);
            for cls in sig.classes(ty) {
                if let Some(l) = sig.layout(ty, cls) {
                    tags.insert((ty, cls), (0..l.infinite.len()).collect());
                }
            }
        }
        CodecPlan { sig, tags }
    }

    pub fn signature(&self) -> &ValidatedSignature {
        &self.sig
    }

    /// Overrides the tag order of one class. `order` lists the infinite
    /// constructors by name, tag 0 first. No well-foundedness check is made.
    pub fn with_tag_order(mut self, ty: TypeId, cls: IndexClass, order: &[&str]) -> Result<Self, CodecError> {
        let layout = self
            .sig
            .layout(ty, cls)
            .ok_or_else(|| CodecError::BadTagOrder(format!("no such class of `{}`", self.sig.type_name(ty))))?;
        let names: Vec<&str> = layout
            .infinite
            .iter()
            .map(|c| self.sig.decl(ty).ctors[c.ctor].name.as_str())
            .collect();
        let mut perm = Vec::with_capacity(order.len());
        for n in order {
            let k = names
                .iter()
                .position(|m| m == n)
                .ok_or_else(|| CodecError::BadTagOrder(format!("`{n}` is not an infinite constructor here")))?;
            if perm.contains(&k) {
                return Err(CodecError::BadTagOrder(format!("`{n}` listed twice")));
            }
            perm.push(k);
        }
        if perm.len() != names.len() {
            return Err(CodecError::BadTagOrder(format!(
                "expected all of {}",
                names.join(", ")
            )));
        }
        self.tags.insert((ty, cls), perm);
        Ok(self)
    }

    /// Infinite constructors of a class in tag order.
    pub fn tag_order(&self, ty: TypeId, cls: IndexClass) -> Vec<CtorId> {
        let Some(l) = self.sig.layout(ty, cls) else {
            return vec![];
        };
        self.tags[&(ty, cls)]
            .iter()
            .map(|&k| CtorId {
                ty,
                index: l.infinite[k].ctor,
            })
            .collect()
    }

    fn layout(&self, ty: TypeId, index: &IndexValue) -> Option<&ClassLayout> {
        self.sig.layout(ty, index.class())
    }

    /// Exclusive bounds on the argument codes of a `ctor` term at
    /// `(ty, index, v)` whose own code is below `bound`. `None` when every
    /// such term is at or above `bound`.
    pub fn arg_bounds(&self, ty: TypeId, index: &IndexValue, v: &CountVector, ctor: CtorId, bound: &Nat) -> Option<Vec<Nat>> {
        let layout = self.layout(ty, index)?;
        let base = v.get(ty, index);
        let arity = self.sig.ctor(ctor).args.len();
        if let Some(pos) = layout.finite.iter().position(|f| f.ctor == ctor.index) {
            let least: Nat = base + layout.finite[..pos].iter().map(|f| &f.count).sum::<Nat>();
            return (least < *bound).then(|| vec![bound.clone(); arity]);
        }
        let k = layout.infinite.iter().position(|i| i.ctor == ctor.index)?;
        let tags = &self.tags[&(ty, index.class())];
        let tag = tags.iter().position(|&t| t == k)?;
        let least = base + &layout.finite_total + tag;
        if least >= *bound {
            return None;
        }
        let slots = &layout.infinite[k].slots;
        let radix: Nat = slots.iter().filter_map(|s| s.radix.as_ref()).product();
        // each unbounded argument code is at most the mingled payload
        let payload = (bound - 1u32 - least) / tags.len() / radix;
        let mut out = vec![bound.clone(); arity];
        for s in slots {
            if let (None, SlotSource::Arg(a)) = (&s.radix, s.source) {
                out[a] = &payload + 1u32;
            }
        }
        Some(out)
    }

    /// Number of codes available at `(ty, index)` under `v`; `None` when
    /// unbounded.
    pub fn range(&self, ty: TypeId, index: &IndexValue, v: &CountVector) -> Option<Nat> {
        let base = v.get(ty, index);
        match self.layout(ty, index) {
            None => Some(base),
            Some(l) if l.infinite.is_empty() => Some(base + &l.finite_total),
            Some(_) => None,
        }
    }

    pub fn encode(&self, ty: TypeId, index: &IndexValue, v: &CountVector, term: &Term) -> Result<Nat, CodecError> {
        check_term(&self.sig, ty, index, v, term).map_err(|e| CodecError::IllTyped(e.to_string()))?;
        let mut v = v.clone();
        Ok(self.enc(ty, index, &mut v, term))
    }

    /// [`CodecPlan::encode`] without the well-typedness check, for terms
    /// that are well typed by construction. Ill-typed input may panic.
    pub fn encode_unchecked(&self, ty: TypeId, index: &IndexValue, v: &CountVector, term: &Term) -> Nat {
        let mut v = v.clone();
        self.enc(ty, index, &mut v, term)
    }

    pub fn encode_closed(&self, ty: TypeId, index: &IndexValue, term: &Term) -> Result<Nat, CodecError> {
        self.encode(ty, index, &CountVector::new(), term)
    }

    pub fn decode(
        &self,
        ty: TypeId,
        index: &IndexValue,
        v: &CountVector,
        code: &Nat,
        fuel: u64,
    ) -> Result<Term, CodecError> {
        let mut d = Decoder {
            plan: self,
            fuel,
            budget: fuel,
            trace: None,
        };
        let mut v = v.clone();
        d.dec(ty, index, &mut v, code.clone())
    }

    pub fn decode_closed(&self, ty: TypeId, index: &IndexValue, code: &Nat, fuel: u64) -> Result<Term, CodecError> {
        self.decode(ty, index, &CountVector::new(), code, fuel)
    }

    /// Orders two closed terms by their codes.
    pub fn compare(&self, ty: TypeId, index: &IndexValue, a: &Term, b: &Term) -> Result<Ordering, CodecError> {
        Ok(self.encode_closed(ty, index, a)?.cmp(&self.encode_closed(ty, index, b)?))
    }

    fn slot_code(&self, c: &ConTerm, slot: &Slot, insts: &[ArgInstance], v: &mut CountVector) -> Nat {
        match slot.source {
            SlotSource::Explicit(k) => match &c.index_args[k] {
                IndexValue::Nat(n) => n.clone(),
                IndexValue::Fin(j) => Nat::from(*j),
                IndexValue::Unit => Nat::zero(),
            },
            SlotSource::Arg(k) => {
                let inst = &insts[k];
                for (bt, bi) in &inst.binders {
                    v.push(*bt, bi);
                }
                let code = self.enc(inst.target.0, &inst.target.1, v, &c.args[k].body);
                for (bt, bi) in inst.binders.iter().rev() {
                    v.pop(*bt, bi);
                }
                code
            }
        }
    }

    /// Encodes a term already known to be well typed.
    fn enc(&self, ty: TypeId, index: &IndexValue, v: &mut CountVector, term: &Term) -> Nat {
        let c = match term {
            Term::Var(r) => return r.level.clone(),
            Term::Con(c) => c,
        };
        let base = v.get(ty, index);
        let layout = self.layout(ty, index).expect("checked term at a known class");
        let insts = instances(&self.sig, c.ctor, index, &c.index_args).expect("checked term");
        if let Some(pos) = layout.finite.iter().position(|f| f.ctor == c.ctor.index) {
            let mut offset: Nat = layout.finite[..pos].iter().map(|f| &f.count).sum();
            let mut digits = Nat::zero();
            for slot in &layout.finite[pos].slots {
                let e = self.slot_code(c, slot, &insts, v);
                digits = digits * slot.radix.as_ref().unwrap() + e;
            }
            offset += digits;
            return base + offset;
        }
        let tags = &self.tags[&(ty, index.class())];
        let k = layout
            .infinite
            .iter()
            .position(|i| i.ctor == c.ctor.index)
            .expect("constructor belongs to the class");
        let tag = tags.iter().position(|&t| t == k).unwrap();
        let slots = &layout.infinite[k].slots;
        let mut unbounded = Vec::new();
        let mut bounded = Vec::new();
        for slot in slots {
            let code = self.slot_code(c, slot, &insts, v);
            match &slot.radix {
                None => unbounded.push(code),
                Some(r) => bounded.push((code, r)),
            }
        }
        let mut p = if unbounded.len() == 1 {
            unbounded.pop().unwrap()
        } else {
            mingle_fold(&unbounded)
        };
        for (e, r) in bounded {
            p = p * r + e;
        }
        if tags.len() > 1 {
            p = p * tags.len() + tag;
        }
        if !layout.finite_total.is_zero() {
            p += &layout.finite_total;
        }
        if !base.is_zero() {
            p += base;
        }
        p
    }

    /// Picks tag orders so that decoding the smallest codes terminates at
    /// every class, starting from declaration order.
    pub fn assign_tags(sig: ValidatedSignature) -> Result<CodecPlan, CodecError> {
        let mut plan = CodecPlan::declaration_order(sig);
        let mut failed: Vec<Node> = Vec::new();
        loop {
            let Some(culprit) = plan.trial() else {
                return Ok(plan);
            };
            let perm = plan.tags.get_mut(&culprit).unwrap();
            if perm.len() > MAX_PERMUTED_TAGS || !next_permutation(perm) {
                failed.push(culprit);
                failed.sort();
                failed.dedup();
                return Err(CodecError::NoWellFoundedPlan {
                    classes: failed
                        .iter()
                        .map(|(t, c)| format!("{} at {}", plan.sig.type_name(*t), plan.sig.show_class(*t, *c)))
                        .collect(),
                });
            }
        }
    }

    /// Trial-decodes the codes 0 and 1 at every inhabited class; on failure
    /// returns the class most responsible for the divergence.
    fn trial(&self) -> Option<Node> {
        for (i, _) in self.sig.decls.iter().enumerate() {
            let ty = TypeId(i);
            for cls in self.sig.classes(ty) {
                if matches!(self.sig.cardinality(ty, cls), Cardinality::Empty) {
                    continue;
                }
                for index in representatives(cls) {
                    for code in [0u32, 1] {
                        let mut d = Decoder {
                            plan: self,
                            fuel: TRIAL_FUEL,
                            budget: TRIAL_FUEL,
                            trace: Some(VecDeque::new()),
                        };
                        let r = d.dec(ty, &index, &mut CountVector::new(), Nat::from(code));
                        if let Err(CodecError::FuelExhausted { .. }) = r {
                            return Some(d.culprit());
                        }
                    }
                }
            }
        }
        None
    }
}

/// Concrete indices standing in for a class in checks.
pub fn representatives(cls: IndexClass) -> Vec<IndexValue> {
    match cls {
        IndexClass::Unit => vec![IndexValue::Unit],
        IndexClass::Z => vec![IndexValue::nat(0)],
        IndexClass::S => vec![IndexValue::nat(1), IndexValue::nat(2)],
        IndexClass::Fin(k) => vec![IndexValue::Fin(k)],
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

struct Decoder<'a> {
    plan: &'a CodecPlan,
    fuel: u64,
    budget: u64,
    trace: Option<VecDeque<Node>>,
}

impl Decoder<'_> {
    fn culprit(&self) -> Node {
        let trace = self.trace.as_ref().expect("tracing decoder");
        let mut freq: BTreeMap<Node, usize> = BTreeMap::new();
        for n in trace {
            let permutable = self.plan.tags.get(n).is_some_and(|t| t.len() > 1);
            if permutable {
                *freq.entry(*n).or_default() += 1;
            }
        }
        freq.into_iter()
            .max_by_key(|(_, c)| *c)
            .map(|(n, _)| n)
            .unwrap_or_else(|| *trace.back().unwrap())
    }

    fn step(&mut self, node: Node) -> Result<(), CodecError> {
        if self.fuel == 0 {
            return Err(CodecError::FuelExhausted { steps: self.budget });
        }
        self.fuel -= 1;
        if let Some(t) = &mut self.trace {
            if t.len() == TRACE_WINDOW {
                t.pop_front();
            }
            t.push_back(node);
        }
        Ok(())
    }

    /// Decodes iteratively so that deep terms and divergent plans are
    /// bounded by fuel rather than by the native stack.
    fn dec(&mut self, ty: TypeId, index: &IndexValue, v: &mut CountVector, code: Nat) -> Result<Term, CodecError> {
        let mut work = vec![Work::Decode(ty, index.clone(), code)];
        let mut done: Vec<Term> = Vec::new();
        while let Some(w) = work.pop() {
            match w {
                Work::Decode(ty, index, code) => self.expand(ty, &index, v, code, &mut work, &mut done)?,
                Work::Bind(bs) => bs.iter().for_each(|(t, i)| {
                    v.push(*t, i);
                }),
                Work::Unbind(bs) => bs.iter().rev().for_each(|(t, i)| v.pop(*t, i)),
                Work::Build(cid, index_args, counts) => {
                    let args = done
                        .drain(done.len() - counts.len()..)
                        .zip(counts)
                        .map(|(body, k)| TermArg::bind(k, body))
                        .collect();
                    done.push(Term::con(cid, index_args, args));
                }
            }
        }
        Ok(done.pop().expect("one result"))
    }

    fn expand(
        &mut self,
        ty: TypeId,
        index: &IndexValue,
        v: &CountVector,
        code: Nat,
        work: &mut Vec<Work>,
        done: &mut Vec<Term>,
    ) -> Result<(), CodecError> {
        let cls = index.class();
        self.step((ty, cls))?;
        let base = v.get(ty, index);
        if code < base {
            done.push(Term::var(ty, index.clone(), code));
            return Ok(());
        }
        let c = if base.is_zero() { code } else { code - &base };
        let plan = self.plan;
        let out_of_range = |total: &Nat| CodecError::CodeOutOfRange {
            code: &c + &base,
            cardinality: &base + total,
        };
        let Some(layout) = plan.layout(ty, index) else {
            return Err(out_of_range(&Nat::zero()));
        };
        if c < layout.finite_total {
            let mut off = c;
            for f in &layout.finite {
                if off < f.count {
                    let cid = CtorId { ty, index: f.ctor };
                    let mut digits = vec![Nat::zero(); f.slots.len()];
                    for (d, slot) in digits.iter_mut().zip(&f.slots).rev() {
                        let (q, r) = off.div_rem(slot.radix.as_ref().unwrap());
                        *d = r;
                        off = q;
                    }
                    self.schedule(cid, index, &f.slots, digits, work);
                    return Ok(());
                }
                off -= &f.count;
            }
            unreachable!("offset below finite total");
        }
        if layout.infinite.is_empty() {
            return Err(out_of_range(&layout.finite_total));
        }
        let tags = &plan.tags[&(ty, cls)];
        let rest = if layout.finite_total.is_zero() { c } else { c - &layout.finite_total };
        let (mut q, tag) = if tags.len() == 1 {
            (rest, 0)
        } else {
            let (q, t) = rest.div_rem(&Nat::from(tags.len()));
            (q, t.to_usize().unwrap())
        };
        let inf = &layout.infinite[tags[tag]];
        let cid = CtorId { ty, index: inf.ctor };
        let mut digits = vec![Nat::zero(); inf.slots.len()];
        for (d, slot) in digits.iter_mut().zip(&inf.slots).rev() {
            if let Some(r) = &slot.radix {
                let (q2, e) = q.div_rem(r);
                *d = e;
                q = q2;
            }
        }
        let unbounded = inf.slots.iter().filter(|s| s.radix.is_none()).count();
        let mut parts = match unbounded {
            0 => Vec::new(),
            1 => vec![q],
            k => unmingle_fold(&q, k),
        }
        .into_iter();
        for (d, slot) in digits.iter_mut().zip(&inf.slots) {
            if slot.radix.is_none() {
                *d = parts.next().unwrap();
            }
        }
        self.schedule(cid, index, &inf.slots, digits, work);
        Ok(())
    }

    fn schedule(&self, cid: CtorId, index: &IndexValue, slots: &[Slot], codes: Vec<Nat>, work: &mut Vec<Work>) {
        let sig = &self.plan.sig;
        let ctor = sig.ctor(cid);
        let mut index_args = Vec::with_capacity(ctor.explicit.len());
        let mut arg_codes = vec![Nat::zero(); ctor.args.len()];
        for (slot, code) in slots.iter().zip(codes) {
            match slot.source {
                SlotSource::Explicit(k) => {
                    let xt = ctor.explicit[k].ty;
                    index_args.push(if sig.nat_shape(xt).is_some() {
                        IndexValue::Nat(code)
                    } else {
                        IndexValue::Fin(code.to_usize().unwrap())
                    });
                }
                SlotSource::Arg(k) => arg_codes[k] = code,
            }
        }
        let insts = instances(sig, cid, index, &index_args).expect("layout matches the class");
        let counts = insts.iter().map(|i| i.binders.len()).collect();
        work.push(Work::Build(cid, index_args, counts));
        for (inst, code) in insts.iter().zip(arg_codes).rev() {
            let (ty, idx) = inst.target.clone();
            if inst.binders.is_empty() {
                work.push(Work::Decode(ty, idx, code));
            } else {
                work.push(Work::Unbind(inst.binders.clone()));
                work.push(Work::Decode(ty, idx, code));
                work.push(Work::Bind(inst.binders.clone()));
            }
        }
    }
}

enum Work {
    Decode(TypeId, IndexValue, Nat),
    Bind(Vec<(TypeId, IndexValue)>),
    Unbind(Vec<(TypeId, IndexValue)>),
    Build(CtorId, Vec<IndexValue>, Vec<usize>),
}

impl CodecPlan {
    /// Size of a finite class with no free variables; `None` when unbounded.
    pub fn finite_size(&self, ty: TypeId, index: &IndexValue) -> Option<Nat> {
        self.range(ty, index, &CountVector::new())
    }
}
