//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so that the PASS/FAIL lines are always
//! shown; exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use godelgen::adequacy::{enumerate_below, verify_all, verify_onto, EnumBudget};
use godelgen::bignat::{mingle, unmingle};
use godelgen::codec::{representatives, CodecError, CodecPlan, DEFAULT_FUEL};
use godelgen::natcollections::{GapSet, TermSet};
use godelgen::sigmodel::{parse_signature, validate, IndexClass, IndexValue, TypeId, ValidatedSignature};
use godelgen::termrep::{parse_term, print_term, print_term_with, term_size, Term, TermArg, VarEnv};
use godelgen::Nat;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const LAMBDA: &str = include_str!("fixtures/lambda.sig");
const NAT: &str = include_str!("fixtures/nat.sig");
const NATLIST: &str = include_str!("fixtures/natlist.sig");
const RAT: &str = include_str!("fixtures/rat.sig");
const RAT_FRAC_FIRST: &str = include_str!("fixtures/rat_frac_first.sig");
const BOOL: &str = include_str!("fixtures/bool.sig");
const TERM: &str = include_str!("fixtures/term.sig");
const EMPTY: &str = include_str!("fixtures/empty.sig");
const ACTUALS: &str = include_str!("fixtures/actuals.sig");
const FINITE_BINDER: &str = include_str!("fixtures/finite_binder.sig");
const PLUS: &str = include_str!("fixtures/plus.sig");

const U: IndexValue = IndexValue::Unit;

type Outcome = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn n(x: u64) -> Nat {
    Nat::from(x)
}

fn validated(text: &str) -> ValidatedSignature {
    validate(parse_signature(text).expect("fixture parses")).expect("fixture validates")
}

fn plan(text: &str) -> CodecPlan {
    CodecPlan::assign_tags(validated(text)).expect("tag plan")
}

fn ty(p: &CodecPlan, name: &str) -> TypeId {
    p.signature().type_id(name).expect("type")
}

fn code_of(p: &CodecPlan, t: TypeId, idx: &IndexValue, text: &str) -> Result<Nat, String> {
    let term = parse_term(p.signature(), t, idx, text).map_err(|e| format!("{text}: {e}"))?;
    p.encode_closed(t, idx, &term).map_err(|e| e.to_string())
}

fn within(elapsed: Duration, limit: Duration) -> Outcome {
    ensure(elapsed < limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

fn ac1_mingle() -> Outcome {
    let table: [[u64; 4]; 4] = [[0, 1, 4, 5], [2, 3, 6, 7], [8, 9, 12, 13], [10, 11, 14, 15]];
    for (a, row) in table.iter().enumerate() {
        for (b, &want) in row.iter().enumerate() {
            let got = mingle(&n(a as u64), &n(b as u64));
            ensure(got == n(want), || format!("{a}${b} = {got}, expected {want}"))?;
        }
    }
    let start = Instant::now();
    for a in 0..4096u64 {
        for b in 0..4096u64 {
            let (x, y) = unmingle(&mingle(&n(a), &n(b)));
            ensure(x == n(a) && y == n(b), || format!("round trip failed at ({a}, {b})"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(1))
}

fn ac2_set_figure() -> Outcome {
    let figure: [(&[u64], &[u64]); 10] = [
        (&[], &[]),
        (&[0], &[0]),
        (&[3], &[3]),
        (&[0, 5], &[0, 4]),
        (&[1, 5], &[1, 3]),
        (&[2, 5], &[2, 2]),
        (&[4, 5], &[4, 0]),
        (&[0, 2, 4], &[0, 1, 1]),
        (&[2, 3, 4], &[2, 0, 0]),
        (&[4, 11, 96], &[4, 6, 84]),
    ];
    for (set, gaps) in figure {
        let set: Vec<Nat> = set.iter().copied().map(n).collect();
        let gaps: Vec<Nat> = gaps.iter().copied().map(n).collect();
        let forward = GapSet::from_elements(set.clone()).gaps();
        ensure(forward == gaps, || format!("{set:?} encodes to {forward:?}, expected {gaps:?}"))?;
        let back = GapSet::from_gaps(gaps.clone()).elements();
        ensure(back == set, || format!("{gaps:?} decodes to {back:?}, expected {set:?}"))?;
    }
    Ok(())
}

fn nat_term(p: &CodecPlan, k: usize) -> Term {
    let sig = p.signature();
    let (z, s) = (sig.ctor_id("z").unwrap(), sig.ctor_id("s").unwrap());
    (0..k).fold(Term::con(z, vec![], vec![]), |t, _| Term::con(s, vec![], vec![TermArg::plain(t)]))
}

fn successors(p: &CodecPlan, t: &Term) -> Option<usize> {
    let sig = p.signature();
    let (z, s) = (sig.ctor_id("z").unwrap(), sig.ctor_id("s").unwrap());
    let mut k = 0;
    let mut cur = t;
    loop {
        match cur {
            Term::Con(c) if c.ctor == z => return Some(k),
            Term::Con(c) if c.ctor == s => {
                k += 1;
                cur = &c.args[0].body;
            }
            _ => return None,
        }
    }
}

fn ac3_closed_forms() -> Outcome {
    let r = plan(RAT);
    let rat = ty(&r, "rat");
    for k in 0..=100u64 {
        let c = code_of(&r, rat, &U, &format!("whole {k}"))?;
        ensure(c == n(2 * k), || format!("whole {k} encodes to {c}"))?;
    }

    let l = plan(NATLIST);
    let natlist = ty(&l, "natlist");
    let empty = code_of(&l, natlist, &U, "natlist/0")?;
    ensure(empty == n(0), || format!("natlist/0 encodes to {empty}"))?;
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    for _ in 0..200 {
        let len = rng.gen_range(1..8);
        let items: Vec<u64> = (0..len).map(|_| rng.gen_range(0..40)).collect();
        let text = |xs: &[u64]| {
            xs.iter()
                .rev()
                .fold("natlist/0".to_string(), |acc, x| format!("natlist/+ {x} ({acc})"))
        };
        let whole = code_of(&l, natlist, &U, &text(&items))?;
        let tail = code_of(&l, natlist, &U, &text(&items[1..]))?;
        let want = mingle(&n(items[0]), &tail) + 1u32;
        ensure(whole == want, || format!("{items:?}: {whole} != 1 + {} $ {tail}", items[0]))?;
    }

    let p = plan(NAT);
    let nat = ty(&p, "nat");
    for k in 0..=1024usize {
        let c = p.encode_closed(nat, &U, &nat_term(&p, k)).map_err(|e| e.to_string())?;
        ensure(c == n(k as u64), || format!("s^{k} z encodes to {c}"))?;
        let t = p.decode_closed(nat, &U, &n(k as u64), DEFAULT_FUEL).map_err(|e| e.to_string())?;
        ensure(successors(&p, &t) == Some(k), || format!("{k} does not decode to s^{k} z"))?;
    }
    Ok(())
}

fn ac4_lambda() -> Outcome {
    let p = plan(LAMBDA);
    let t = ty(&p, "t");
    let start = Instant::now();
    let report = verify_all(&p, &EnumBudget::new(6, 10_000).unwrap(), "lambda.sig");
    let elapsed = start.elapsed();
    ensure(report.passed(), || report.to_json())?;
    let id = code_of(&p, t, &U, "lam [x] x")?;
    ensure(id == n(0), || format!("lam [x] x encodes to {id}"))?;
    let one = p.decode_closed(t, &U, &n(1), DEFAULT_FUEL).map_err(|e| e.to_string())?;
    let shown = print_term(p.signature(), t, &U, &one);
    ensure(shown == "app (lam [x0] x0) (lam [x0] x0)", || format!("decode 1 = {shown}"))?;
    within(elapsed, Duration::from_secs(30))
}

fn ac5_indexed() -> Outcome {
    let p = plan(TERM);
    let term = ty(&p, "term");
    let start = Instant::now();
    let report = verify_all(&p, &EnumBudget::new(6, 10_000).unwrap(), "term.sig");
    let elapsed = start.elapsed();
    ensure(report.passed(), || report.to_json())?;
    for (class, codes) in [("z", 10_000), ("s", 20_000)] {
        let r = report
            .classes
            .iter()
            .find(|c| c.ty == "term" && c.index_class == class)
            .ok_or_else(|| format!("no report for term at class {class}"))?;
        ensure(r.codes_checked == codes, || format!("class {class} checked {} codes", r.codes_checked))?;
    }
    let zero = IndexValue::nat(0);
    let unit = code_of(&p, term, &zero, "unit")?;
    ensure(unit == n(0), || format!("unit encodes to {unit}"))?;
    let rec = code_of(&p, term, &zero, "rec [f] f")?;
    ensure(rec == n(2), || format!("rec [f] f encodes to {rec}"))?;
    within(elapsed, Duration::from_secs(60))
}

fn ac6_trap() -> Outcome {
    let base = CodecPlan::declaration_order(validated(RAT));
    let rat = ty(&base, "rat");
    let reversed = base
        .with_tag_order(rat, IndexClass::Unit, &["frac", "whole"])
        .map_err(|e| e.to_string())?;
    let (verdict, _) = verify_onto(&reversed, rat, &U, &EnumBudget::new(6, 10_000).unwrap());
    let cx = verdict.counterexample().ok_or("reversed plan passed verify_onto")?;
    ensure(cx.witness == "0" && cx.detail.contains("fuel"), || {
        format!("witness {} ({})", cx.witness, cx.detail)
    })?;
    match reversed.decode_closed(rat, &U, &n(0), DEFAULT_FUEL) {
        Err(CodecError::FuelExhausted { .. }) => {}
        other => return Err(format!("decode 0 under the reversed plan: {other:?}")),
    }

    let recovered = plan(RAT_FRAC_FIRST);
    let rat = ty(&recovered, "rat");
    let order: Vec<String> = recovered
        .tag_order(rat, IndexClass::Unit)
        .iter()
        .map(|c| recovered.signature().ctor(*c).name.clone())
        .collect();
    ensure(order == ["whole", "frac"], || format!("recovered tag order {order:?}"))?;
    let (verdict, _) = verify_onto(&recovered, rat, &U, &EnumBudget::new(6, 10_000).unwrap());
    ensure(verdict.passed(), || format!("{verdict:?}"))?;
    let w = code_of(&recovered, rat, &U, "whole 3")?;
    ensure(w == n(6), || format!("whole 3 encodes to {w}"))
}

fn ac7_limitations() -> Outcome {
    for (name, text, rule) in [
        ("actuals", ACTUALS, "uniform"),
        ("finite binder", FINITE_BINDER, "infinite-variables"),
        ("plus", PLUS, "single-index"),
    ] {
        let sig = parse_signature(text).map_err(|e| format!("{name}: {e}"))?;
        match validate(sig) {
            Ok(_) => return Err(format!("{name} was accepted")),
            Err(ds) => ensure(ds.iter().any(|d| d.rule() == rule), || {
                format!("{name}: expected a `{rule}` diagnostic, got {ds:?}")
            })?,
        }
    }
    Ok(())
}

/// A random closed lambda term in concrete syntax, binders named by depth.
fn random_lambda(rng: &mut StdRng, depth: usize, budget: usize) -> String {
    let var = depth > 0 && (budget <= 1 || rng.gen_bool(0.3));
    if var {
        return format!("x{}", rng.gen_range(0..depth));
    }
    if budget <= 2 || rng.gen_bool(0.5) {
        format!("lam [x{depth}] {}", random_lambda(rng, depth + 1, budget.saturating_sub(1)))
    } else {
        let left = budget / 2;
        format!(
            "app ({}) ({})",
            random_lambda(rng, depth, left),
            random_lambda(rng, depth, budget - left)
        )
    }
}

fn renamed(p: &CodecPlan, t: TypeId, term: &Term, rng: &mut StdRng) -> String {
    let stems = ["u", "v", "w", "q", "foo", "bar"];
    let shift = rng.gen_range(0..stems.len());
    let (mult, off) = (rng.gen_range(1..7), rng.gen_range(0..100));
    let namer = move |d: usize| format!("{}{}", stems[(d + shift) % stems.len()], d * mult + off);
    print_term_with(p.signature(), t, &U, term, &VarEnv::new(), &namer)
}

fn ac8_alpha() -> Outcome {
    let p = plan(LAMBDA);
    let t = ty(&p, "t");
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    for _ in 0..500 {
        let size = rng.gen_range(1..30);
        let text = random_lambda(&mut rng, 0, size);
        let term = parse_term(p.signature(), t, &U, &text).map_err(|e| format!("{text}: {e}"))?;
        let code = p.encode_closed(t, &U, &term).map_err(|e| e.to_string())?;
        for _ in 0..3 {
            let variant = renamed(&p, t, &term, &mut rng);
            let again = code_of(&p, t, &U, &variant)?;
            ensure(again == code, || format!("`{text}` = {code} but `{variant}` = {again}"))?;
        }
    }

    let bases = ["lam [x] x", "lam [x] lam [y] app x y", "app (lam [x] x) (lam [y] lam [z] z)"];
    let mut set = TermSet::new(&p, t, U);
    for i in 0..100 {
        let base = parse_term(p.signature(), t, &U, bases[i % 3]).unwrap();
        let variant = renamed(&p, t, &base, &mut rng);
        let term = parse_term(p.signature(), t, &U, &variant).map_err(|e| format!("{variant}: {e}"))?;
        set = set.insert(&term).map_err(|e| e.to_string())?;
    }
    ensure(set.size() == 3, || format!("set of variants has size {}", set.size()))
}

fn ac9_oracle() -> Outcome {
    const BOUND: u64 = 200;
    let fixtures = [
        ("lambda", LAMBDA),
        ("nat", NAT),
        ("natlist", NATLIST),
        ("rat", RAT),
        ("bool", BOOL),
        ("term", TERM),
        ("empty", EMPTY),
    ];
    for (name, text) in fixtures {
        let p = plan(text);
        let sig = p.signature();
        for (i, _) in sig.decls.iter().enumerate() {
            let t = TypeId(i);
            for cls in sig.classes(t) {
                for idx in representatives(cls) {
                    let mut decoded = BTreeSet::new();
                    for c in 0..BOUND {
                        match p.decode_closed(t, &idx, &n(c), DEFAULT_FUEL) {
                            Ok(term) => {
                                decoded.insert(term);
                            }
                            Err(CodecError::CodeOutOfRange { .. }) => break,
                            Err(e) => return Err(format!("{name}: decode {c}: {e}")),
                        }
                    }
                    let cap = decoded.iter().map(term_size).max().unwrap_or(0);
                    let listed: BTreeSet<Term> = enumerate_below(&p, t, &idx, &n(BOUND), cap).into_iter().collect();
                    ensure(listed == decoded, || {
                        format!(
                            "{name}: {} at {}: {} decoded, {} enumerated",
                            sig.type_name(t),
                            sig.show_index(t, &idx),
                            decoded.len(),
                            listed.len()
                        )
                    })?;
                }
            }
        }
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("AC1 mingle table and exhaustive inverse below 4096", ac1_mingle),
        ("AC2 finite-set figure, both directions", ac2_set_figure),
        ("AC3 closed forms for rat, natlist and nat", ac3_closed_forms),
        ("AC4 lambda adequacy (size 6, 10^4 codes, < 30 s)", ac4_lambda),
        ("AC5 indexed term family adequacy (10^4 codes, < 60 s)", ac5_indexed),
        ("AC6 reversed rat tags trap and automatic recovery", ac6_trap),
        ("AC7 rejection of non-uniform, finite-binder and 3-index signatures", ac7_limitations),
        ("AC8 alpha-equivalence invariance and variant sets", ac8_alpha),
        ("AC9 decoded prefix equals filtered structural enumeration", ac9_oracle),
    ];
    let failures = godelgen::with_deep_stack(|| {
        let mut failures = 0;
        for (name, check) in criteria {
            let start = Instant::now();
            let outcome = check();
            let secs = start.elapsed().as_secs_f64();
            match outcome {
                Ok(()) => println!("PASS  {name}  ({secs:.2}s)"),
                Err(why) => {
                    failures += 1;
                    println!("FAIL  {name}  ({secs:.2}s): {why}");
                }
            }
        }
        failures
    });
    println!("acceptance: {} passed, {failures} failed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
