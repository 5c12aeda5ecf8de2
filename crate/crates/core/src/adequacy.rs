//! Bounded, executable checks of the four adequacy properties (total,
//! unique, onto, one-to-one) for a codec plan. Terms are produced by a
//! structural enumerator that never calls the decoder.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bignat::Nat;
use crate::codec::{representatives, CodecError, CodecPlan, DEFAULT_FUEL};
use crate::sigmodel::{Cardinality, IndexClass, IndexValue, TypeId, ValidatedSignature};
use crate::termrep::{
    instantiate, parse_term, print_term, print_term_with, ArgInstance, CountVector, Term, TermArg,
    VarEnv,
};

pub const DEFAULT_MAX_SIZE: usize = 6;
pub const DEFAULT_MAX_CODE: u64 = 10_000;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BudgetError {
    #[error("max-size must be at least 1")]
    MaxSize,
    #[error("max-code must be at least 2 so that codes 0 and 1 are checked")]
    MaxCode,
    #[error("fuel must be at least 1")]
    Fuel,
}

/// Bounds for a verification run. Codes `0..max_code` are decoded and all
/// closed terms of at most `max_size` nodes are enumerated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumBudget {
    pub max_size: usize,
    pub max_code: u64,
    pub fuel: u64,
    pub per_class: BTreeMap<(TypeId, IndexClass), (usize, u64)>,
}

impl Default for EnumBudget {
    fn default() -> Self {
        EnumBudget {
            max_size: DEFAULT_MAX_SIZE,
            max_code: DEFAULT_MAX_CODE,
            fuel: DEFAULT_FUEL,
            per_class: BTreeMap::new(),
        }
    }
}

impl EnumBudget {
    pub fn new(max_size: usize, max_code: u64) -> Result<Self, BudgetError> {
        EnumBudget {
            max_size,
            max_code,
            ..Default::default()
        }
        .validated()
    }

    pub fn with_fuel(mut self, fuel: u64) -> Result<Self, BudgetError> {
        self.fuel = fuel;
        self.validated()
    }

    pub fn validated(self) -> Result<Self, BudgetError> {
        if self.max_size < 1 || self.per_class.values().any(|(s, _)| *s < 1) {
            return Err(BudgetError::MaxSize);
        }
        if self.max_code < 2 || self.per_class.values().any(|(_, c)| *c < 2) {
            return Err(BudgetError::MaxCode);
        }
        if self.fuel < 1 {
            return Err(BudgetError::Fuel);
        }
        Ok(self)
    }

    fn for_class(&self, ty: TypeId, cls: IndexClass) -> (usize, u64) {
        self.per_class
            .get(&(ty, cls))
            .copied()
            .unwrap_or((self.max_size, self.max_code))
    }
}

/// A replayable witness of a failed property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub property: String,
    pub index: String,
    pub witness: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Counterexample),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Verdict::Pass => None,
            Verdict::Fail(c) => Some(c),
        }
    }

    fn and(self, other: Verdict) -> Verdict {
        match self {
            Verdict::Pass => other,
            fail => fail,
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(if self.passed() { "pass" } else { "fail" })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassReport {
    #[serde(rename = "type")]
    pub ty: String,
    pub index_class: String,
    pub total: Verdict,
    pub unique: Verdict,
    pub onto: Verdict,
    pub one_to_one: Verdict,
    pub terms_checked: u64,
    pub codes_checked: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl ClassReport {
    pub fn passed(&self) -> bool {
        [&self.total, &self.unique, &self.onto, &self.one_to_one]
            .iter()
            .all(|v| v.passed())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdequacyReport {
    pub signature: String,
    pub classes: Vec<ClassReport>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl AdequacyReport {
    pub fn passed(&self) -> bool {
        self.classes.iter().all(ClassReport::passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

type Key = (TypeId, IndexValue, CountVector, usize, Option<Nat>);

/// Structural generator of terms by exact node count.
pub struct Enumerator<'a> {
    sig: &'a ValidatedSignature,
    plan: Option<&'a CodecPlan>,
    bound: Option<Nat>,
    memo: HashMap<Key, Rc<Vec<Term>>>,
}

impl<'a> Enumerator<'a> {
    pub fn new(sig: &'a ValidatedSignature) -> Self {
        Enumerator {
            sig,
            plan: None,
            bound: None,
            memo: HashMap::new(),
        }
    }

    /// Keeps only terms whose code under `plan`, in context, is below
    /// `bound`. Lists are then ordered by code. A code grows with the code
    /// of each argument, so a search along an ordered list stops at the
    /// first argument that is already too large, and each argument is
    /// generated under the tighter bound implied by its constructor.
    pub fn below(plan: &'a CodecPlan, bound: Nat) -> Self {
        Enumerator {
            sig: plan.signature(),
            plan: Some(plan),
            bound: Some(bound),
            memo: HashMap::new(),
        }
    }

    /// All terms of exactly `n` nodes at `(ty, index)` under `v`.
    pub fn exact(&mut self, ty: TypeId, index: &IndexValue, v: &CountVector, n: usize) -> Rc<Vec<Term>> {
        let bound = self.bound.clone();
        self.exact_below(ty, index, v, n, bound)
    }

    fn exact_below(&mut self, ty: TypeId, index: &IndexValue, v: &CountVector, n: usize, bound: Option<Nat>) -> Rc<Vec<Term>> {
        let key = (ty, index.clone(), v.clone(), n, bound.clone());
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let mut out: Vec<(Nat, Term)> = Vec::new();
        if n == 1 {
            let count = v.get(ty, index);
            let mut level = Nat::default();
            while level < count {
                out.push((level.clone(), Term::var(ty, index.clone(), level.clone())));
                level += 1u32;
            }
        }
        let sig = self.sig;
        for (ci, ctor) in sig.decl(ty).ctors.iter().enumerate() {
            let cid = crate::sigmodel::CtorId { ty, index: ci };
            if crate::sigmodel::match_pattern(&ctor.pattern, index).is_none() || n < 1 {
                continue;
            }
            let arg_bounds = match (self.plan, &bound) {
                (Some(plan), Some(b)) => match plan.arg_bounds(ty, index, v, cid, b) {
                    Some(bs) => Some(bs),
                    None => continue,
                },
                _ => None,
            };
            // choose explicit index values, each costing its numeral size
            let mut choices: Vec<(Vec<IndexValue>, usize)> = vec![(vec![], 0)];
            for x in &ctor.explicit {
                let mut next = Vec::new();
                for (vals, cost) in &choices {
                    if sig.nat_shape(x.ty).is_some() {
                        for k in 0..n.saturating_sub(1 + cost) {
                            let mut vs = vals.clone();
                            vs.push(IndexValue::nat(k as u64));
                            next.push((vs, cost + k + 1));
                        }
                    } else if cost + 1 < n {
                        for k in 0..sig.decl(x.ty).ctors.len() {
                            let mut vs = vals.clone();
                            vs.push(IndexValue::Fin(k));
                            next.push((vs, cost + 1));
                        }
                    }
                }
                choices = next;
            }
            for (vals, cost) in choices {
                if 1 + cost > n {
                    continue;
                }
                let Some(insts) = instantiate(sig, cid, index, &vals) else {
                    continue;
                };
                let rem = n - 1 - cost;
                if rem < insts.len() || (insts.is_empty() && rem != 0) {
                    continue;
                }
                let ctx = Ctx {
                    ty,
                    index,
                    v,
                    cid,
                    vals: &vals,
                    insts: &insts,
                    bound: bound.as_ref(),
                    arg_bounds: arg_bounds.as_deref(),
                };
                self.product(&ctx, rem, &mut Vec::new(), &mut out);
            }
        }
        if let Some(b) = &bound {
            out.retain(|(c, _)| c < b);
            out.sort_by(|x, y| x.0.cmp(&y.0));
        }
        let r = Rc::new(out.into_iter().map(|(_, t)| t).collect::<Vec<_>>());
        self.memo.insert(key, r.clone());
        r
    }

    /// Extends `partial` with every choice of the remaining arguments.
    /// Returns true when no completion was kept; along an argument list
    /// ordered by code, every later choice is then rejected as well.
    fn product(&mut self, ctx: &Ctx, rem: usize, partial: &mut Vec<TermArg>, out: &mut Vec<(Nat, Term)>) -> bool {
        let i = partial.len();
        if i == ctx.insts.len() {
            let t = Term::con(ctx.cid, ctx.vals.to_vec(), partial.clone());
            let code = match (self.plan, ctx.bound) {
                (Some(plan), Some(bound)) => {
                    let c = plan.encode_unchecked(ctx.ty, ctx.index, ctx.v, &t);
                    if c >= *bound {
                        return true;
                    }
                    c
                }
                _ => Nat::default(),
            };
            out.push((code, t));
            return false;
        }
        let left = ctx.insts.len() - i - 1;
        let inst = &ctx.insts[i];
        let mut inner = ctx.v.clone();
        for (bt, bi) in &inst.binders {
            inner.push(*bt, bi);
        }
        let child_bound = ctx.arg_bounds.map(|bs| bs[i].clone());
        let max = rem - left;
        let lo = if left == 0 { rem } else { 1 };
        let mut none_kept = true;
        for s in lo..=max {
            let bodies = self.exact_below(inst.target.0, &inst.target.1, &inner, s, child_bound.clone());
            for b in bodies.iter() {
                partial.push(TermArg::bind(inst.binders.len(), b.clone()));
                let rejected = self.product(ctx, rem - s, partial, out);
                partial.pop();
                if rejected {
                    break;
                }
                none_kept = false;
            }
        }
        none_kept
    }
}

struct Ctx<'c> {
    ty: TypeId,
    index: &'c IndexValue,
    v: &'c CountVector,
    cid: crate::sigmodel::CtorId,
    vals: &'c [IndexValue],
    insts: &'c [ArgInstance],
    bound: Option<&'c Nat>,
    arg_bounds: Option<&'c [Nat]>,
}

impl Enumerator<'_> {
    /// Closed terms of at most `max_size` nodes, smallest first.
    pub fn closed_up_to(&mut self, ty: TypeId, index: &IndexValue, max_size: usize) -> Vec<Term> {
        let v = CountVector::new();
        (1..=max_size)
            .flat_map(|n| self.exact(ty, index, &v, n).as_ref().clone())
            .collect()
    }
}

/// All closed well-typed terms of at most `max_size` nodes, by size and
/// then constructor order.
pub fn enumerate_terms(sig: &ValidatedSignature, ty: TypeId, index: &IndexValue, max_size: usize) -> Vec<Term> {
    Enumerator::new(sig).closed_up_to(ty, index, max_size)
}

/// Closed terms of at most `max_size` nodes whose code, and the code of
/// every subterm, is below `bound`.
pub fn enumerate_below(plan: &CodecPlan, ty: TypeId, index: &IndexValue, bound: &Nat, max_size: usize) -> Vec<Term> {
    Enumerator::below(plan, bound.clone()).closed_up_to(ty, index, max_size)
}

fn witness(plan: &CodecPlan, ty: TypeId, index: &IndexValue, t: &Term) -> String {
    print_term(plan.signature(), ty, index, t)
}

fn variant_namers() -> [fn(usize) -> String; 2] {
    [|d| format!("v{d}"), |d| format!("n{}", (d * 7919 + 13) % 10007)]
}

/// Totality and uniqueness over the enumerated terms, plus the number of
/// terms checked.
pub fn verify_total_unique(
    plan: &CodecPlan,
    ty: TypeId,
    index: &IndexValue,
    budget: &EnumBudget,
) -> (Verdict, Verdict, u64) {
    let (max_size, _) = budget.for_class(ty, index.class());
    let terms = enumerate_terms(plan.signature(), ty, index, max_size);
    let (total, unique) = total_unique_over(plan, ty, index, &terms);
    (total, unique, terms.len() as u64)
}

fn total_unique_over(plan: &CodecPlan, ty: TypeId, index: &IndexValue, terms: &[Term]) -> (Verdict, Verdict) {
    let sig = plan.signature();
    let show_index = sig.show_index(ty, index);
    let fail = |property: &str, t: &Term, detail: String| {
        Verdict::Fail(Counterexample {
            property: property.into(),
            index: show_index.clone(),
            witness: witness(plan, ty, index, t),
            detail,
        })
    };
    let mut total = Verdict::Pass;
    let mut unique = Verdict::Pass;
    for t in terms {
        let code = match plan.encode_closed(ty, index, t) {
            Ok(c) => c,
            Err(e) => {
                if total.passed() {
                    total = fail("total", t, e.to_string());
                }
                continue;
            }
        };
        if !unique.passed() {
            continue;
        }
        let env = VarEnv::new();
        let mut texts = vec![print_term(sig, ty, index, t)];
        for namer in variant_namers() {
            texts.push(print_term_with(sig, ty, index, t, &env, &namer));
        }
        for text in texts {
            let again = parse_term(sig, ty, index, &text)
                .map_err(|e| e.to_string())
                .and_then(|u| plan.encode_closed(ty, index, &u).map_err(|e| e.to_string()));
            match again {
                Ok(c) if c == code => {}
                Ok(c) => {
                    unique = fail("unique", t, format!("`{text}` encodes to {c}, expected {code}"));
                    break;
                }
                Err(e) => {
                    unique = fail("unique", t, format!("`{text}`: {e}"));
                    break;
                }
            }
        }
    }
    (total, unique)
}

/// Every code below the budget (clamped to the class size) decodes within
/// fuel and re-encodes to itself. Returns the verdict and codes checked.
pub fn verify_onto(plan: &CodecPlan, ty: TypeId, index: &IndexValue, budget: &EnumBudget) -> (Verdict, u64) {
    let (_, max_code) = budget.for_class(ty, index.class());
    let limit = match plan.finite_size(ty, index) {
        Some(n) => u64::try_from(&n).unwrap_or(u64::MAX).min(max_code),
        None => max_code,
    };
    let check = |c: u64| -> Result<(), String> {
        let code = Nat::from(c);
        let t = plan
            .decode_closed(ty, index, &code, budget.fuel)
            .map_err(|e| e.to_string())?;
        let back = plan.encode_closed(ty, index, &t).map_err(|e| e.to_string())?;
        if back == code {
            Ok(())
        } else {
            Err(format!(
                "decodes to `{}`, which encodes to {back}",
                witness(plan, ty, index, &t)
            ))
        }
    };
    let bad = pool().install(|| (0..limit).into_par_iter().find_first(|c| check(*c).is_err()));
    let verdict = match bad {
        None => Verdict::Pass,
        Some(c) => Verdict::Fail(Counterexample {
            property: "onto".into(),
            index: plan.signature().show_index(ty, index),
            witness: c.to_string(),
            detail: check(c).unwrap_err(),
        }),
    };
    (verdict, limit)
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .stack_size(crate::DEEP_STACK)
            .build()
            .expect("verification thread pool")
    })
}

/// Distinct enumerated terms get distinct codes and decode back to
/// themselves.
pub fn verify_one_to_one(plan: &CodecPlan, ty: TypeId, index: &IndexValue, budget: &EnumBudget) -> Verdict {
    let (max_size, _) = budget.for_class(ty, index.class());
    let terms = enumerate_terms(plan.signature(), ty, index, max_size);
    one_to_one_over(plan, ty, index, &terms, budget.fuel)
}

fn one_to_one_over(plan: &CodecPlan, ty: TypeId, index: &IndexValue, terms: &[Term], fuel: u64) -> Verdict {
    let show_index = plan.signature().show_index(ty, index);
    let mut seen: BTreeMap<Nat, &Term> = BTreeMap::new();
    for t in terms {
        let Ok(code) = plan.encode_closed(ty, index, t) else {
            continue;
        };
        if let Some(prev) = seen.get(&code) {
            return Verdict::Fail(Counterexample {
                property: "one_to_one".into(),
                index: show_index,
                witness: format!("{} | {}", witness(plan, ty, index, prev), witness(plan, ty, index, t)),
                detail: format!("both encode to {code}"),
            });
        }
        let back: Result<Term, CodecError> = plan.decode_closed(ty, index, &code, fuel);
        match back {
            Ok(u) if u == *t => {}
            Ok(u) => {
                return Verdict::Fail(Counterexample {
                    property: "one_to_one".into(),
                    index: show_index,
                    witness: witness(plan, ty, index, t),
                    detail: format!("code {code} decodes to `{}`", witness(plan, ty, index, &u)),
                })
            }
            Err(e) => {
                return Verdict::Fail(Counterexample {
                    property: "one_to_one".into(),
                    index: show_index,
                    witness: witness(plan, ty, index, t),
                    detail: format!("code {code}: {e}"),
                })
            }
        }
        seen.insert(code, t);
    }
    Verdict::Pass
}

/// Runs the three verifiers at one concrete index.
pub fn verify_index(plan: &CodecPlan, ty: TypeId, index: &IndexValue, budget: &EnumBudget) -> ClassReport {
    let (max_size, _) = budget.for_class(ty, index.class());
    let terms = enumerate_terms(plan.signature(), ty, index, max_size);
    let (total, unique) = total_unique_over(plan, ty, index, &terms);
    let one_to_one = one_to_one_over(plan, ty, index, &terms, budget.fuel);
    let (onto, codes) = verify_onto(plan, ty, index, budget);
    let sig = plan.signature();
    let mut r = ClassReport {
        ty: sig.type_name(ty).to_string(),
        index_class: sig.show_class(ty, index.class()),
        total,
        unique,
        onto,
        one_to_one,
        terms_checked: terms.len() as u64,
        codes_checked: codes,
        counterexample: None,
    };
    r.counterexample = first_counterexample(&r);
    r
}

fn first_counterexample(r: &ClassReport) -> Option<Counterexample> {
    [&r.total, &r.unique, &r.onto, &r.one_to_one]
        .iter()
        .find_map(|v| v.counterexample().cloned())
}

fn merge(a: ClassReport, b: ClassReport) -> ClassReport {
    let mut r = ClassReport {
        total: a.total.and(b.total),
        unique: a.unique.and(b.unique),
        onto: a.onto.and(b.onto),
        one_to_one: a.one_to_one.and(b.one_to_one),
        terms_checked: a.terms_checked + b.terms_checked,
        codes_checked: a.codes_checked + b.codes_checked,
        counterexample: None,
        ..a
    };
    r.counterexample = first_counterexample(&r);
    r
}

/// Verifies every inhabited class of every type at its representative
/// indices (`Z` at 0, `S` at 1 and 2).
pub fn verify_all(plan: &CodecPlan, budget: &EnumBudget, signature: &str) -> AdequacyReport {
    let start = Instant::now();
    let sig = plan.signature();
    let mut classes = Vec::new();
    for (i, _) in sig.decls.iter().enumerate() {
        let ty = TypeId(i);
        for cls in sig.classes(ty) {
            if matches!(sig.cardinality(ty, cls), Cardinality::Empty) {
                continue;
            }
            let report = representatives(cls)
                .iter()
                .map(|idx| verify_index(plan, ty, idx, budget))
                .reduce(merge)
                .expect("at least one representative");
            classes.push(report);
        }
    }
    AdequacyReport {
        signature: signature.to_string(),
        classes,
        elapsed: start.elapsed(),
    }
}
