//! The library codec against small direct implementations of the lambda
//! and rational mapping equations over machine integers.

use godelgen::codec::{CodecPlan, DEFAULT_FUEL};
use godelgen::sigmodel::{parse_signature, validate, IndexValue};
use godelgen::termrep::parse_term;
use godelgen::Nat;

const U: IndexValue = IndexValue::Unit;

fn plan(text: &str) -> CodecPlan {
    CodecPlan::assign_tags(validate(parse_signature(text).unwrap()).unwrap()).unwrap()
}

fn mingle(a: u128, b: u128) -> u128 {
    (0..64).fold(0, |acc, i| acc | ((b >> i) & 1) << (2 * i) | ((a >> i) & 1) << (2 * i + 1))
}

fn unmingle(n: u128) -> (u128, u128) {
    (0..64).fold((0, 0), |(a, b), i| (a | ((n >> (2 * i + 1)) & 1) << i, b | ((n >> (2 * i)) & 1) << i))
}

#[derive(Debug)]
enum Lam {
    Var(u128),
    Abs(Box<Lam>),
    App(Box<Lam>, Box<Lam>),
}

fn lam_encode(t: &Lam, n: u128) -> u128 {
    match t {
        Lam::Var(level) => *level,
        Lam::Abs(body) => n + 2 * lam_encode(body, n + 1),
        Lam::App(f, a) => n + 2 * mingle(lam_encode(f, n), lam_encode(a, n)) + 1,
    }
}

fn lam_decode(c: u128, n: u128) -> Lam {
    if c < n {
        return Lam::Var(c);
    }
    let c = c - n;
    if c.is_multiple_of(2) {
        Lam::Abs(Box::new(lam_decode(c / 2, n + 1)))
    } else {
        let (f, a) = unmingle(c / 2);
        Lam::App(Box::new(lam_decode(f, n)), Box::new(lam_decode(a, n)))
    }
}

fn lam_text(t: &Lam, n: u128) -> String {
    match t {
        Lam::Var(level) => format!("v{level}"),
        Lam::Abs(body) => format!("lam [v{n}] {}", lam_text(body, n + 1)),
        Lam::App(f, a) => format!("app ({}) ({})", lam_text(f, n), lam_text(a, n)),
    }
}

#[test]
fn lambda_matches_direct_equations() {
    let p = plan(include_str!("fixtures/lambda.sig"));
    let t = p.signature().type_id("t").unwrap();
    for c in 0..10_000u128 {
        let expected = lam_decode(c, 0);
        assert_eq!(lam_encode(&expected, 0), c);
        let text = lam_text(&expected, 0);
        let parsed = parse_term(p.signature(), t, &U, &text).unwrap();
        let code = Nat::from(c);
        assert_eq!(p.encode_closed(t, &U, &parsed).unwrap(), code, "{text}");
        assert_eq!(p.decode_closed(t, &U, &code, DEFAULT_FUEL).unwrap(), parsed, "{text}");
    }
}

enum Rat {
    Whole(u128),
    Frac(u128, Box<Rat>),
}

fn rat_decode(c: u128) -> Rat {
    if c.is_multiple_of(2) {
        Rat::Whole(c / 2)
    } else {
        let (k, r) = unmingle(c / 2);
        Rat::Frac(k, Box::new(rat_decode(r)))
    }
}

fn rat_text(r: &Rat) -> String {
    match r {
        Rat::Whole(k) => format!("whole {k}"),
        Rat::Frac(k, r) => format!("frac {k} ({})", rat_text(r)),
    }
}

#[test]
fn rat_matches_direct_equations() {
    // R(whole n) = 2n, R(frac n r) = 2(n $ R(r)) + 1
    let p = plan(include_str!("fixtures/rat.sig"));
    let t = p.signature().type_id("rat").unwrap();
    for c in 0..2_000u128 {
        let text = rat_text(&rat_decode(c));
        let parsed = parse_term(p.signature(), t, &U, &text).unwrap();
        let code = Nat::from(c);
        assert_eq!(p.encode_closed(t, &U, &parsed).unwrap(), code, "{text}");
        assert_eq!(p.decode_closed(t, &U, &code, DEFAULT_FUEL).unwrap(), parsed, "{text}");
    }
}

#[test]
fn oracle_mingle_agrees_with_library() {
    for a in 0..64u128 {
        for b in 0..64u128 {
            let lib = godelgen::bignat::mingle(&Nat::from(a), &Nat::from(b));
            assert_eq!(lib, Nat::from(mingle(a, b)));
            assert_eq!(unmingle(mingle(a, b)), (a, b));
        }
    }
}
