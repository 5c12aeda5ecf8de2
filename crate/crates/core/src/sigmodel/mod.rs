//! Signature model: parses the term-language description and resolves it into
//! declarations with typed constructor shapes.
//!
//! The accepted syntax is a subset of Twelf:
//!
//! ```text
//! %% pure lambda calculus
//! t : type.
//! lam : (t -> t) -> t.
//! app : t -> t -> t.
//!
//! term : nat -> type.
//! unit : term z.
//! lam  : (term z -> term N) -> term (s N).
//! ```
//!
//! `nat` (with `z` and `s`) is supplied implicitly when a signature mentions
//! it without declaring it.

mod analysis;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::bignat::Nat;
use crate::syntax::{Expr, Parser, Pos, SyntaxError, Tok};

pub use analysis::{
    compute_cardinality, ctors_for_class, validate, ClassCtors, ClassLayout, Diagnostic,
    FiniteCtor, InfiniteCtor, Slot, SlotSource, ValidatedSignature,
};

const NAT_PRELUDE: &str = "nat : type. z : nat. s : nat -> nat.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CtorId {
    pub ty: TypeId,
    pub index: usize,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SigError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: unknown type `{name}`")]
    UnknownType { name: String, pos: Pos },
    #[error("{pos}: duplicate declaration of `{name}`")]
    Duplicate { name: String, pos: Pos },
    #[error("{pos}: {msg}")]
    Malformed { msg: String, pos: Pos },
}

fn malformed(pos: Pos, msg: impl Into<String>) -> SigError {
    SigError::Malformed {
        msg: msg.into(),
        pos,
    }
}

/// How a family is indexed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexSpec {
    None,
    /// Indexed by a natural-number type (one nullary and one unary
    /// self-constructor).
    Nat(TypeId),
    /// Indexed by an enumeration type (nullary constructors only).
    Finite(TypeId),
    /// A single index over a type that is neither of the above.
    Unsupported(TypeId),
    /// More than one index.
    Multi(Vec<TypeId>),
}

/// An index expression inside a constructor type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexExpr {
    Var(String),
    Zero,
    Succ(Box<IndexExpr>),
    /// Constructor of an enumeration index type, by position.
    Const(usize),
    /// Constructor application over an unsupported index type.
    Other(String, Vec<IndexExpr>),
}

impl IndexExpr {
    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            IndexExpr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            IndexExpr::Succ(e) => e.vars(out),
            IndexExpr::Other(_, args) => args.iter().for_each(|a| a.vars(out)),
            IndexExpr::Zero | IndexExpr::Const(_) => {}
        }
    }
}

/// The result-type pattern of a constructor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexPattern {
    Unit,
    Zero,
    Succ(String),
    Var(String),
    Const(usize),
    /// Anything the class scheme cannot express (nested successor, a fixed
    /// numeral above zero, a compound constant, several indices).
    Unsupported(String),
}

/// Index classes over which the applicable constructor set is constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexClass {
    Unit,
    Z,
    S,
    Fin(usize),
}

/// A concrete index value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexValue {
    Unit,
    Nat(Nat),
    Fin(usize),
}

impl IndexValue {
    pub fn class(&self) -> IndexClass {
        match self {
            IndexValue::Unit => IndexClass::Unit,
            IndexValue::Nat(n) if *n == Nat::default() => IndexClass::Z,
            IndexValue::Nat(_) => IndexClass::S,
            IndexValue::Fin(k) => IndexClass::Fin(*k),
        }
    }

    pub fn nat(n: u64) -> Self {
        IndexValue::Nat(Nat::from(n))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cardinality {
    Empty,
    Finite(Nat),
    Infinite,
}

impl Cardinality {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Cardinality::Infinite)
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cardinality::Empty => f.write_str("Empty"),
            Cardinality::Finite(n) => write!(f, "Finite({n})"),
            Cardinality::Infinite => f.write_str("Infinite"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeRef {
    pub ty: TypeId,
    pub index: Vec<IndexExpr>,
}

/// One constructor argument: an optional chain of bound variables and the
/// type of the body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arg {
    pub binders: Vec<TypeRef>,
    pub target: TypeRef,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitIndex {
    pub var: String,
    pub ty: TypeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ctor {
    pub name: String,
    pub explicit: Vec<ExplicitIndex>,
    pub args: Vec<Arg>,
    pub result: Vec<IndexExpr>,
    pub pattern: IndexPattern,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub index_types: Vec<TypeId>,
    pub index: IndexSpec,
    pub ctors: Vec<Ctor>,
    /// Filled by [`compute_cardinality`].
    pub cardinality: BTreeMap<IndexClass, Cardinality>,
    pub pos: Pos,
}

/// Shape of a natural-number type: names of its zero and successor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NatShape {
    pub zero: String,
    pub succ: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub decls: Vec<TypeDecl>,
    type_names: HashMap<String, TypeId>,
    ctor_names: HashMap<String, CtorId>,
    abbrevs: HashMap<String, Expr>,
    analysed: bool,
}

impl Signature {
    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.type_names.get(name).copied()
    }

    pub fn decl(&self, id: TypeId) -> &TypeDecl {
        &self.decls[id.0]
    }

    pub fn ctor(&self, id: CtorId) -> &Ctor {
        &self.decls[id.ty.0].ctors[id.index]
    }

    pub fn ctor_id(&self, name: &str) -> Option<CtorId> {
        self.ctor_names.get(name).copied()
    }

    pub fn type_name(&self, id: TypeId) -> &str {
        &self.decls[id.0].name
    }

    pub fn abbrev(&self, name: &str) -> Option<&Expr> {
        self.abbrevs.get(name)
    }

    pub fn is_analysed(&self) -> bool {
        self.analysed
    }

    /// `Some` when `ty` is shaped like the naturals.
    pub fn nat_shape(&self, ty: TypeId) -> Option<NatShape> {
        let d = self.decl(ty);
        if !d.index_types.is_empty() || d.ctors.len() != 2 {
            return None;
        }
        let unary = |c: &Ctor| {
            c.explicit.is_empty()
                && c.args.len() == 1
                && c.args[0].binders.is_empty()
                && c.args[0].target.ty == ty
        };
        let nullary = |c: &Ctor| c.explicit.is_empty() && c.args.is_empty();
        let (a, b) = (&d.ctors[0], &d.ctors[1]);
        if nullary(a) && unary(b) {
            Some(NatShape {
                zero: a.name.clone(),
                succ: b.name.clone(),
            })
        } else if nullary(b) && unary(a) {
            Some(NatShape {
                zero: b.name.clone(),
                succ: a.name.clone(),
            })
        } else {
            None
        }
    }

    /// `true` when `ty` is unindexed and all of its constructors are nullary.
    pub fn is_enumeration(&self, ty: TypeId) -> bool {
        let d = self.decl(ty);
        d.index_types.is_empty()
            && d
                .ctors
                .iter()
                .all(|c| c.explicit.is_empty() && c.args.is_empty())
    }

    /// The classes of a family, following its index specification.
    pub fn classes(&self, ty: TypeId) -> Vec<IndexClass> {
        match &self.decl(ty).index {
            IndexSpec::None => vec![IndexClass::Unit],
            IndexSpec::Nat(_) => vec![IndexClass::Z, IndexClass::S],
            IndexSpec::Finite(t) => (0..self.decl(*t).ctors.len())
                .map(IndexClass::Fin)
                .collect(),
            IndexSpec::Unsupported(_) | IndexSpec::Multi(_) => vec![],
        }
    }

    /// Renders an index value in surface syntax.
    pub fn show_index(&self, ty: TypeId, v: &IndexValue) -> String {
        match (v, &self.decl(ty).index) {
            (IndexValue::Fin(k), IndexSpec::Finite(t)) => self.decl(*t).ctors[*k].name.clone(),
            (IndexValue::Nat(n), _) => n.to_string(),
            (IndexValue::Unit, _) => String::new(),
            (IndexValue::Fin(k), _) => format!("#{k}"),
        }
    }

    /// Renders an index class for reports.
    pub fn show_class(&self, ty: TypeId, cls: IndexClass) -> String {
        match (cls, &self.decl(ty).index) {
            (IndexClass::Unit, _) => "unit".into(),
            (IndexClass::Z, _) => "z".into(),
            (IndexClass::S, _) => "s".into(),
            (IndexClass::Fin(k), IndexSpec::Finite(t)) => self.decl(*t).ctors[k].name.clone(),
            (IndexClass::Fin(k), _) => format!("#{k}"),
        }
    }

    /// Parses an index value for family `ty` from text: a decimal numeral
    /// (or `z`/`s` form) for nat-indexed families, a constructor name for
    /// enumeration-indexed ones, and nothing for unindexed ones.
    pub fn parse_index(&self, ty: TypeId, text: Option<&str>) -> Result<IndexValue, String> {
        let d = self.decl(ty);
        match (&d.index, text) {
            (IndexSpec::None, None) => Ok(IndexValue::Unit),
            (IndexSpec::None, Some(t)) => Err(format!("type `{}` is not indexed (got `{t}`)", d.name)),
            (_, None) => Err(format!("type `{}` needs an index", d.name)),
            (IndexSpec::Nat(n), Some(t)) => {
                if let Ok(v) = t.trim().parse::<Nat>() {
                    return Ok(IndexValue::Nat(v));
                }
                let e = crate::syntax::parse_expr(t).map_err(|e| e.to_string())?;
                self.eval_nat_literal(*n, &e)
                    .map(IndexValue::Nat)
                    .ok_or_else(|| format!("`{t}` is not a natural-number index"))
            }
            (IndexSpec::Finite(f), Some(t)) => self
                .decl(*f)
                .ctors
                .iter()
                .position(|c| c.name == t.trim())
                .map(IndexValue::Fin)
                .ok_or_else(|| format!("`{t}` is not a constructor of `{}`", self.decl(*f).name)),
            (_, Some(_)) => Err(format!("family `{}` has an unsupported index", d.name)),
        }
    }

    /// Evaluates a closed `z`/`s`/numeral expression over a nat-shaped type.
    pub fn eval_nat_literal(&self, nat: TypeId, e: &Expr) -> Option<Nat> {
        let shape = self.nat_shape(nat)?;
        let (head, args) = e.spine();
        let Expr::Ident(name, _) = head else {
            return None;
        };
        if args.is_empty() {
            if *name == shape.zero {
                return Some(Nat::default());
            }
            if name.chars().all(|c| c.is_ascii_digit()) {
                return name.parse().ok();
            }
            return None;
        }
        if *name == shape.succ && args.len() == 1 {
            return self.eval_nat_literal(nat, args[0]).map(|n| n + 1u32);
        }
        None
    }
}

/// Binding of index variables to concrete values.
pub type Bindings = Vec<(String, IndexValue)>;

pub fn lookup<'a>(b: &'a Bindings, var: &str) -> Option<&'a IndexValue> {
    b.iter().rev().find(|(v, _)| v == var).map(|(_, x)| x)
}

/// Matches a result pattern against a concrete index value.
pub fn match_pattern(p: &IndexPattern, v: &IndexValue) -> Option<Bindings> {
    match (p, v) {
        (IndexPattern::Unit, IndexValue::Unit) => Some(vec![]),
        (IndexPattern::Zero, IndexValue::Nat(n)) if *n == Nat::default() => Some(vec![]),
        (IndexPattern::Succ(x), IndexValue::Nat(n)) if *n > Nat::default() => {
            Some(vec![(x.clone(), IndexValue::Nat(n - 1u32))])
        }
        (IndexPattern::Var(x), v) if *v != IndexValue::Unit => Some(vec![(x.clone(), v.clone())]),
        (IndexPattern::Const(k), IndexValue::Fin(j)) if k == j => Some(vec![]),
        _ => None,
    }
}

/// Binder and target types of one argument at a concrete instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArgInstance {
    pub binders: Vec<(TypeId, IndexValue)>,
    pub target: (TypeId, IndexValue),
}

/// Argument instances of `ctor` at `index` with the given explicit index
/// values; `None` if the constructor does not apply there.
pub fn instances_at(
    sig: &Signature,
    ctor: CtorId,
    index: &IndexValue,
    index_args: &[IndexValue],
) -> Option<Vec<ArgInstance>> {
    let c = sig.ctor(ctor);
    let mut b: Bindings = match_pattern(&c.pattern, index)?;
    if index_args.len() != c.explicit.len() {
        return None;
    }
    for (x, v) in c.explicit.iter().zip(index_args) {
        b.push((x.var.clone(), v.clone()));
    }
    c.args
        .iter()
        .map(|a| {
            let binders = a
                .binders
                .iter()
                .map(|r| eval_typeref(r, &b).map(|v| (r.ty, v)))
                .collect::<Option<Vec<_>>>()?;
            let target = (a.target.ty, eval_typeref(&a.target, &b)?);
            Some(ArgInstance { binders, target })
        })
        .collect()
}

/// Evaluates an index expression under concrete bindings.
pub fn eval_index(e: &IndexExpr, b: &Bindings) -> Option<IndexValue> {
    match e {
        IndexExpr::Var(v) => lookup(b, v).cloned(),
        IndexExpr::Zero => Some(IndexValue::nat(0)),
        IndexExpr::Succ(inner) => match eval_index(inner, b)? {
            IndexValue::Nat(n) => Some(IndexValue::Nat(n + 1u32)),
            _ => None,
        },
        IndexExpr::Const(k) => Some(IndexValue::Fin(*k)),
        IndexExpr::Other(..) => None,
    }
}

/// Evaluates the index of a type reference (unindexed types give `Unit`).
pub fn eval_typeref(r: &TypeRef, b: &Bindings) -> Option<IndexValue> {
    match r.index.as_slice() {
        [] => Some(IndexValue::Unit),
        [e] => eval_index(e, b),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// parsing

struct RawDecl {
    name: String,
    pos: Pos,
    body: Expr,
}

fn split_decls(text: &str) -> Result<(Vec<RawDecl>, Vec<(String, Expr)>), SigError> {
    let mut p = Parser::from_text(text)?;
    let mut decls = Vec::new();
    let mut abbrevs: Vec<(String, Expr)> = Vec::new();
    while !p.at_eof() {
        let t = p.peek().clone();
        match t.tok {
            Tok::Directive(ref d) if d == "abbrev" => {
                p.next();
                let (name, pos) = p.ident()?;
                if p.eat(&Tok::Colon) {
                    p.expr()?;
                }
                p.expect(&Tok::Eq)?;
                let body = p.expr()?;
                p.expect(&Tok::Dot)?;
                if abbrevs.iter().any(|(n, _)| *n == name) {
                    return Err(SigError::Duplicate { name, pos });
                }
                let body = expand(&body, &abbrevs);
                abbrevs.push((name, body));
            }
            Tok::Directive(_) => {
                p.next();
                p.skip_to_dot();
            }
            Tok::Ident(_) => {
                let (name, pos) = p.ident()?;
                p.expect(&Tok::Colon)?;
                let body = p.expr()?;
                if p.peek().tok == Tok::Eq {
                    return Err(malformed(p.peek().pos, "term-level definitions are not supported"));
                }
                p.expect(&Tok::Dot)?;
                decls.push(RawDecl {
                    name,
                    pos,
                    body: expand(&body, &abbrevs),
                });
            }
            other => {
                return Err(SyntaxError::new(t.pos, format!("expected a declaration, found {other}")).into())
            }
        }
    }
    Ok((decls, abbrevs))
}

fn expand(e: &Expr, abbrevs: &[(String, Expr)]) -> Expr {
    if abbrevs.is_empty() {
        return e.clone();
    }
    e.substitute(&|name| {
        abbrevs
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.clone())
    })
}

fn is_kind(e: &Expr) -> bool {
    match e {
        Expr::Ident(s, _) => s == "type",
        Expr::Arrow(_, c) => is_kind(c),
        _ => false,
    }
}

fn mentions(e: &Expr, name: &str) -> bool {
    match e {
        Expr::Ident(s, _) => s == name,
        Expr::App(a, b) | Expr::Arrow(a, b) => mentions(a, name) || mentions(b, name),
        Expr::Pi { ty, body, .. } | Expr::Lam { ty, body, .. } => {
            ty.as_ref().is_some_and(|t| mentions(t, name)) || mentions(body, name)
        }
    }
}

/// Result of the first resolution phase: constructor shapes with raw index
/// expressions.
struct RawTypeRef {
    ty: TypeId,
    index: Vec<Expr>,
}

struct RawArg {
    binders: Vec<RawTypeRef>,
    target: RawTypeRef,
}

struct RawCtor {
    name: String,
    pos: Pos,
    explicit: Vec<ExplicitIndex>,
    args: Vec<RawArg>,
    result: RawTypeRef,
}

fn is_var_name(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_uppercase() || c == '_')
}

impl Signature {
    fn raw_typeref(&self, e: &Expr) -> Result<RawTypeRef, SigError> {
        let (head, args) = e.spine();
        match head {
            Expr::Ident(name, pos) => {
                let ty = self.type_id(name).ok_or_else(|| SigError::UnknownType {
                    name: name.clone(),
                    pos: *pos,
                })?;
                let arity = self.decl(ty).index_types.len();
                if args.len() != arity {
                    return Err(malformed(
                        *pos,
                        format!("`{name}` expects {arity} index argument(s), got {}", args.len()),
                    ));
                }
                Ok(RawTypeRef {
                    ty,
                    index: args.into_iter().cloned().collect(),
                })
            }
            Expr::Arrow(..) => Err(malformed(
                e.pos(),
                "binder arguments of order higher than two are not supported",
            )),
            other => Err(malformed(other.pos(), "expected a type")),
        }
    }

    fn raw_arg(&self, e: &Expr) -> Result<RawArg, SigError> {
        let mut binders = Vec::new();
        let mut cur = e;
        loop {
            match cur {
                Expr::Arrow(d, c) => {
                    binders.push(self.raw_typeref(d)?);
                    cur = c;
                }
                Expr::Pi { pos, .. } => {
                    return Err(malformed(*pos, "explicit abstraction inside an argument is not supported"))
                }
                Expr::Lam { pos, .. } => return Err(malformed(*pos, "unexpected `[...]` in a type")),
                _ => break,
            }
        }
        Ok(RawArg {
            binders,
            target: self.raw_typeref(cur)?,
        })
    }

    fn raw_ctor(&self, d: &RawDecl) -> Result<RawCtor, SigError> {
        let mut explicit = Vec::new();
        let mut args = Vec::new();
        let mut cur = &d.body;
        loop {
            match cur {
                Expr::Pi { var, ty, body, pos } => {
                    let Some(ty) = ty else {
                        return Err(malformed(
                            *pos,
                            format!("explicit abstraction `{{{var}}}` must be typed"),
                        ));
                    };
                    let r = self.raw_typeref(ty)?;
                    if !r.index.is_empty() {
                        return Err(malformed(*pos, "explicit abstraction over an indexed type"));
                    }
                    explicit.push(ExplicitIndex {
                        var: var.clone(),
                        ty: r.ty,
                    });
                    cur = body;
                }
                Expr::Arrow(dom, cod) => {
                    args.push(self.raw_arg(dom)?);
                    cur = cod;
                }
                Expr::Lam { pos, .. } => return Err(malformed(*pos, "unexpected `[...]` in a type")),
                _ => break,
            }
        }
        Ok(RawCtor {
            name: d.name.clone(),
            pos: d.pos,
            explicit,
            args,
            result: self.raw_typeref(cur)?,
        })
    }

    fn index_expr(&self, e: &Expr, index_ty: TypeId, vars: &[String]) -> Result<IndexExpr, SigError> {
        let (head, args) = e.spine();
        let Expr::Ident(name, pos) = head else {
            return Err(malformed(e.pos(), "expected an index expression"));
        };
        let pos = *pos;
        let nat = self.nat_shape(index_ty);
        if args.is_empty() && name.chars().all(|c| c.is_ascii_digit()) {
            if nat.is_none() {
                return Err(malformed(pos, format!("numeral `{name}` used at a non-nat index")));
            }
            let n: u64 = name
                .parse()
                .map_err(|_| malformed(pos, format!("numeral `{name}` is too large")))?;
            let mut out = IndexExpr::Zero;
            for _ in 0..n {
                out = IndexExpr::Succ(Box::new(out));
            }
            return Ok(out);
        }
        if let Some(cid) = self.ctor_id(name).filter(|c| c.ty == index_ty) {
            if let Some(shape) = &nat {
                if *name == shape.zero && args.is_empty() {
                    return Ok(IndexExpr::Zero);
                }
                if *name == shape.succ && args.len() == 1 {
                    return Ok(IndexExpr::Succ(Box::new(self.index_expr(args[0], index_ty, vars)?)));
                }
                return Err(malformed(pos, format!("wrong number of arguments to `{name}`")));
            }
            if self.is_enumeration(index_ty) {
                if !args.is_empty() {
                    return Err(malformed(pos, format!("`{name}` takes no arguments")));
                }
                return Ok(IndexExpr::Const(cid.index));
            }
            let ctor = self.ctor(cid);
            let sub: Result<Vec<_>, _> = args
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let t = ctor.args.get(i).map_or(index_ty, |x| x.target.ty);
                    self.index_expr(a, t, vars)
                })
                .collect();
            return Ok(IndexExpr::Other(name.clone(), sub?));
        }
        if args.is_empty() && (is_var_name(name) || vars.contains(name)) {
            return Ok(IndexExpr::Var(name.clone()));
        }
        Err(malformed(
            pos,
            format!("`{name}` is not a constructor of `{}` nor an index variable", self.type_name(index_ty)),
        ))
    }

    fn typeref(&self, r: &RawTypeRef, vars: &[String]) -> Result<TypeRef, SigError> {
        let index_types = &self.decl(r.ty).index_types;
        let index = r
            .index
            .iter()
            .zip(index_types)
            .map(|(e, t)| self.index_expr(e, *t, vars))
            .collect::<Result<_, _>>()?;
        Ok(TypeRef { ty: r.ty, index })
    }
}

fn pattern_of(index: &[IndexExpr]) -> IndexPattern {
    match index {
        [] => IndexPattern::Unit,
        [IndexExpr::Zero] => IndexPattern::Zero,
        [IndexExpr::Var(v)] => IndexPattern::Var(v.clone()),
        [IndexExpr::Succ(inner)] => match inner.as_ref() {
            IndexExpr::Var(v) => IndexPattern::Succ(v.clone()),
            _ => IndexPattern::Unsupported("more than one level of pattern matching".into()),
        },
        [IndexExpr::Const(k)] => IndexPattern::Const(*k),
        [IndexExpr::Other(..)] => IndexPattern::Unsupported("pattern over an unsupported index type".into()),
        _ => IndexPattern::Unsupported("more than one index".into()),
    }
}

/// Parses signature text into declarations in source order.
pub fn parse_signature(text: &str) -> Result<Signature, SigError> {
    let (mut raw, abbrevs) = split_decls(text)?;
    let declares_nat = raw.iter().any(|d| d.name == "nat" && is_kind(&d.body));
    if !declares_nat && raw.iter().any(|d| mentions(&d.body, "nat")) {
        let (prelude, _) = split_decls(NAT_PRELUDE)?;
        let clash = prelude
            .iter()
            .find(|p| raw.iter().any(|d| d.name == p.name));
        if let Some(c) = clash {
            return Err(malformed(
                c.pos,
                format!("`nat` is used but not declared, and `{}` is already taken", c.name),
            ));
        }
        raw.splice(0..0, prelude);
    }

    let mut sig = Signature {
        abbrevs: abbrevs.into_iter().collect(),
        ..Signature::default()
    };
    for name in sig.abbrevs.keys() {
        if raw.iter().any(|d| d.name == *name) {
            let pos = raw.iter().find(|d| d.name == *name).map(|d| d.pos).unwrap_or_default();
            return Err(SigError::Duplicate {
                name: name.clone(),
                pos,
            });
        }
    }

    // types first, so that constructors may refer to any declared family
    for d in raw.iter().filter(|d| is_kind(&d.body)) {
        if sig.type_names.contains_key(&d.name) {
            return Err(SigError::Duplicate {
                name: d.name.clone(),
                pos: d.pos,
            });
        }
        let id = TypeId(sig.decls.len());
        sig.type_names.insert(d.name.clone(), id);
        sig.decls.push(TypeDecl {
            name: d.name.clone(),
            index_types: vec![],
            index: IndexSpec::None,
            ctors: vec![],
            cardinality: BTreeMap::new(),
            pos: d.pos,
        });
    }
    for d in raw.iter().filter(|d| is_kind(&d.body)) {
        let mut cur = &d.body;
        let mut index_types = Vec::new();
        while let Expr::Arrow(dom, cod) = cur {
            match dom.as_ref() {
                Expr::Ident(n, pos) => index_types.push(sig.type_id(n).ok_or_else(|| {
                    SigError::UnknownType {
                        name: n.clone(),
                        pos: *pos,
                    }
                })?),
                other => return Err(malformed(other.pos(), "index types must be plain type names")),
            }
            cur = cod;
        }
        let id = sig.type_names[&d.name];
        sig.decls[id.0].index_types = index_types;
    }

    let mut raw_ctors = Vec::new();
    for d in raw.iter().filter(|d| !is_kind(&d.body)) {
        if sig.type_names.contains_key(&d.name) || sig.ctor_names.contains_key(&d.name) {
            return Err(SigError::Duplicate {
                name: d.name.clone(),
                pos: d.pos,
            });
        }
        let rc = sig.raw_ctor(d)?;
        let ty = rc.result.ty;
        let id = CtorId {
            ty,
            index: sig.decls[ty.0].ctors.len(),
        };
        sig.ctor_names.insert(d.name.clone(), id);
        // shape-only placeholder until index expressions are resolved
        sig.decls[ty.0].ctors.push(Ctor {
            name: rc.name.clone(),
            explicit: rc.explicit.clone(),
            args: rc
                .args
                .iter()
                .map(|a| Arg {
                    binders: a
                        .binders
                        .iter()
                        .map(|b| TypeRef {
                            ty: b.ty,
                            index: vec![],
                        })
                        .collect(),
                    target: TypeRef {
                        ty: a.target.ty,
                        index: vec![],
                    },
                })
                .collect(),
            result: vec![],
            pattern: IndexPattern::Unit,
            pos: rc.pos,
        });
        raw_ctors.push((id, rc));
    }

    for d in sig.decls.iter_mut() {
        d.index = match d.index_types.as_slice() {
            [] => IndexSpec::None,
            [t] => IndexSpec::Unsupported(*t),
            many => IndexSpec::Multi(many.to_vec()),
        };
    }
    let specs: Vec<IndexSpec> = (0..sig.decls.len())
        .map(|i| match sig.decls[i].index {
            IndexSpec::Unsupported(t) if sig.nat_shape(t).is_some() => IndexSpec::Nat(t),
            IndexSpec::Unsupported(t) if sig.is_enumeration(t) => IndexSpec::Finite(t),
            ref other => other.clone(),
        })
        .collect();
    for (d, spec) in sig.decls.iter_mut().zip(specs) {
        d.index = spec;
    }

    for (id, rc) in raw_ctors {
        let vars: Vec<String> = rc.explicit.iter().map(|x| x.var.clone()).collect();
        let args = rc
            .args
            .iter()
            .map(|a| {
                Ok(Arg {
                    binders: a.binders.iter().map(|b| sig.typeref(b, &vars)).collect::<Result<_, SigError>>()?,
                    target: sig.typeref(&a.target, &vars)?,
                })
            })
            .collect::<Result<Vec<_>, SigError>>()?;
        let result = sig.typeref(&rc.result, &vars)?.index;
        let c = &mut sig.decls[id.ty.0].ctors[id.index];
        c.pattern = pattern_of(&result);
        c.args = args;
        c.result = result;
    }
    Ok(sig)
}
