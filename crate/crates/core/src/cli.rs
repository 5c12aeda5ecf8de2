//! Command-line front end.
//!
//! Exit status: 0 success, 1 verification failure, 2 semantic rejection
//! (invalid signature, code out of range, bad budget), 3 parse error,
//! 4 fuel exhaustion.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::adequacy::{verify_all, EnumBudget, DEFAULT_MAX_CODE, DEFAULT_MAX_SIZE};
use crate::bignat::Nat;
use crate::codec::{CodecError, CodecPlan, DEFAULT_FUEL};
use crate::natcollections::{Elements, GapSet};
use crate::sigmodel::{compute_cardinality, parse_signature, validate, IndexValue, TypeId, ValidatedSignature};
use crate::termrep::{parse_term, print_term};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_REJECT: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_FUEL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "godelgen", version, about = "Bijections between LF-style term languages and the natural numbers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a signature and print its cardinality table.
    Check { signature: PathBuf },
    /// Print the code of a closed term.
    Encode {
        #[command(flatten)]
        target: Target,
        term: String,
    },
    /// Print the closed term with a given code.
    Decode {
        #[command(flatten)]
        target: Target,
        code: Nat,
    },
    /// Print the terms with codes 0..COUNT.
    Enumerate {
        #[command(flatten)]
        target: Target,
        count: u64,
    },
    /// Order two closed terms by code (LT, EQ or GT).
    Compare {
        #[command(flatten)]
        target: Target,
        first: String,
        second: String,
    },
    /// Check totality, uniqueness, ontoness and injectivity within bounds.
    Verify {
        signature: PathBuf,
        #[command(flatten)]
        plan: PlanOpts,
        #[arg(long, default_value_t = DEFAULT_MAX_SIZE)]
        max_size: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_CODE)]
        max_code: u64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Convert a set literal `{a,b,...}` or gap list `[g,...]` to both forms.
    Gaps { literal: String },
}

#[derive(Debug, Args)]
pub struct Target {
    pub signature: PathBuf,
    #[arg(long = "type")]
    pub ty: String,
    /// Index value: a numeral, or a constructor of an enumeration index type.
    #[arg(long)]
    pub index: Option<String>,
    #[command(flatten)]
    pub plan: PlanOpts,
}

#[derive(Debug, Args)]
pub struct PlanOpts {
    #[arg(long, env = "GODELGEN_FUEL", default_value_t = DEFAULT_FUEL,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub fuel: u64,
    /// Force the tag order of a class, e.g. `rat=frac,whole` or
    /// `term:s=app,lam,rec`. Skips the automatic tag search.
    #[arg(long = "tags", value_name = "TYPE[:CLASS]=C1,C2,...")]
    pub tags: Vec<String>,
}

/// A failure carrying its exit status.
struct Fail(i32, String);

type Res<T> = Result<T, Fail>;

fn codec_fail(e: CodecError) -> Fail {
    let code = match e {
        CodecError::FuelExhausted { .. } => EXIT_FUEL,
        CodecError::IllTyped(_) => EXIT_PARSE,
        _ => EXIT_REJECT,
    };
    Fail(code, e.to_string())
}

fn load(path: &PathBuf) -> Res<ValidatedSignature> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    let sig = parse_signature(&text).map_err(|e| Fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    validate(sig).map_err(|ds| {
        Fail(
            EXIT_REJECT,
            ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"),
        )
    })
}

fn build_plan(sig: ValidatedSignature, opts: &PlanOpts) -> Res<CodecPlan> {
    if opts.tags.is_empty() {
        return CodecPlan::assign_tags(sig).map_err(codec_fail);
    }
    let mut plan = CodecPlan::declaration_order(sig);
    for spec in &opts.tags {
        let bad = || Fail(EXIT_REJECT, format!("bad --tags value `{spec}`"));
        let (lhs, rhs) = spec.split_once('=').ok_or_else(bad)?;
        let (ty_name, class) = match lhs.split_once(':') {
            Some((t, c)) => (t, Some(c)),
            None => (lhs, None),
        };
        let sig = plan.signature();
        let ty = sig
            .type_id(ty_name)
            .ok_or_else(|| Fail(EXIT_REJECT, format!("unknown type `{ty_name}`")))?;
        let classes = sig.classes(ty);
        let cls = match class {
            None if classes.len() == 1 => classes[0],
            None => return Err(Fail(EXIT_REJECT, format!("`{ty_name}` is indexed; name a class"))),
            Some(c) => *classes
                .iter()
                .find(|k| sig.show_class(ty, **k) == c)
                .ok_or_else(|| Fail(EXIT_REJECT, format!("`{c}` is not a class of `{ty_name}`")))?,
        };
        let order: Vec<&str> = rhs.split(',').map(str::trim).collect();
        plan = plan.with_tag_order(ty, cls, &order).map_err(codec_fail)?;
    }
    Ok(plan)
}

fn resolve(target: &Target) -> Res<(CodecPlan, TypeId, IndexValue)> {
    let sig = load(&target.signature)?;
    let ty = sig
        .type_id(&target.ty)
        .ok_or_else(|| Fail(EXIT_REJECT, format!("unknown type `{}`", target.ty)))?;
    let index = sig
        .parse_index(ty, target.index.as_deref())
        .map_err(|e| Fail(EXIT_PARSE, e))?;
    let plan = build_plan(sig, &target.plan)?;
    Ok((plan, ty, index))
}

fn term_code(plan: &CodecPlan, ty: TypeId, index: &IndexValue, text: &str) -> Res<Nat> {
    let t = parse_term(plan.signature(), ty, index, text).map_err(|e| Fail(EXIT_PARSE, e.to_string()))?;
    plan.encode_closed(ty, index, &t).map_err(codec_fail)
}

fn check(path: &PathBuf, out: &mut dyn Write) -> Res<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    let sig = parse_signature(&text).map_err(|e| Fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    let sig = compute_cardinality(sig);
    for d in &sig.decls {
        if d.cardinality.len() == 1 && d.index_types.is_empty() {
            for c in d.cardinality.values() {
                let _ = writeln!(out, "{}: {c}", d.name);
            }
        } else {
            let ty = sig.type_id(&d.name).unwrap();
            for (cls, c) in &d.cardinality {
                let _ = writeln!(out, "{} {}: {c}", d.name, sig.show_class(ty, *cls));
            }
        }
    }
    validate(sig).map(|_| ()).map_err(|ds| {
        Fail(
            EXIT_REJECT,
            ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"),
        )
    })
}

fn execute(cmd: Command, out: &mut dyn Write) -> Res<i32> {
    match cmd {
        Command::Check { signature } => check(&signature, out).map(|_| EXIT_OK),
        Command::Encode { target, term } => {
            let (plan, ty, index) = resolve(&target)?;
            let code = term_code(&plan, ty, &index, &term)?;
            let _ = writeln!(out, "{code}");
            Ok(EXIT_OK)
        }
        Command::Decode { target, code } => {
            let (plan, ty, index) = resolve(&target)?;
            let t = plan
                .decode_closed(ty, &index, &code, target.plan.fuel)
                .map_err(codec_fail)?;
            let _ = writeln!(out, "{}", print_term(plan.signature(), ty, &index, &t));
            Ok(EXIT_OK)
        }
        Command::Enumerate { target, count } => {
            let (plan, ty, index) = resolve(&target)?;
            let limit = match plan.finite_size(ty, &index) {
                Some(n) => u64::try_from(&n).unwrap_or(u64::MAX).min(count),
                None => count,
            };
            for n in 0..limit {
                let t = plan
                    .decode_closed(ty, &index, &Nat::from(n), target.plan.fuel)
                    .map_err(codec_fail)?;
                let _ = writeln!(out, "{n}\t{}", print_term(plan.signature(), ty, &index, &t));
            }
            Ok(EXIT_OK)
        }
        Command::Compare { target, first, second } => {
            let (plan, ty, index) = resolve(&target)?;
            let a = term_code(&plan, ty, &index, &first)?;
            let b = term_code(&plan, ty, &index, &second)?;
            let word = match a.cmp(&b) {
                std::cmp::Ordering::Less => "LT",
                std::cmp::Ordering::Equal => "EQ",
                std::cmp::Ordering::Greater => "GT",
            };
            let _ = writeln!(out, "{word}");
            Ok(EXIT_OK)
        }
        Command::Verify {
            signature,
            plan: opts,
            max_size,
            max_code,
            json,
        } => {
            let budget = EnumBudget::new(max_size, max_code)
                .and_then(|b| b.with_fuel(opts.fuel))
                .map_err(|e| Fail(EXIT_REJECT, e.to_string()))?;
            let plan = build_plan(load(&signature)?, &opts)?;
            let report = verify_all(&plan, &budget, &signature.display().to_string());
            if json {
                let _ = writeln!(out, "{}", report.to_json());
            } else {
                for c in &report.classes {
                    let v = |x: &crate::adequacy::Verdict| if x.passed() { "pass" } else { "FAIL" };
                    let name = if c.index_class == "unit" {
                        c.ty.clone()
                    } else {
                        format!("{} {}", c.ty, c.index_class)
                    };
                    let _ = writeln!(
                        out,
                        "{name}: total {} unique {} onto {} one-to-one {} ({} terms, {} codes)",
                        v(&c.total),
                        v(&c.unique),
                        v(&c.onto),
                        v(&c.one_to_one),
                        c.terms_checked,
                        c.codes_checked
                    );
                    if let Some(x) = &c.counterexample {
                        let _ = writeln!(out, "  {} at index {}: {} ({})", x.property, x.index, x.witness, x.detail);
                    }
                }
            }
            Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Gaps { literal } => {
            let s: GapSet = literal.parse().map_err(|e: crate::natcollections::SetLiteralError| Fail(EXIT_PARSE, e.to_string()))?;
            let _ = writeln!(out, "{} {}", Elements(&s), s);
            Ok(EXIT_OK)
        }
    }
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(name: &str) -> String {
        format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn go(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["godelgen"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn encode_and_decode() {
        let l = fixture("lambda.sig");
        assert_eq!(go(&["encode", &l, "--type", "t", "lam [x] x"]).1, "0\n");
        assert_eq!(go(&["decode", &l, "--type", "t", "1"]).1, "app (lam [x0] x0) (lam [x0] x0)\n");
        let (code, _, err) = go(&["encode", &l, "--type", "t", "app x y"]);
        assert_eq!(code, EXIT_PARSE);
        assert!(err.contains("unbound"));
    }

    #[test]
    fn tags_flag() {
        let r = fixture("rat.sig");
        let (code, _, err) = go(&["decode", &r, "--type", "rat", "--tags", "rat=frac,whole", "--fuel", "100", "0"]);
        assert_eq!(code, EXIT_FUEL, "{err}");
        let (code, _, _) = go(&["decode", &r, "--type", "rat", "--tags", "rat=frac,nope", "0"]);
        assert_eq!(code, EXIT_REJECT);
    }

    #[test]
    fn gaps_helper() {
        assert_eq!(go(&["gaps", "{4,11,96}"]).1, "{4,11,96} [4,6,84]\n");
        assert_eq!(go(&["gaps", "[0,4]"]).1, "{0,5} [0,4]\n");
        assert_eq!(go(&["gaps", "{x}"]).0, EXIT_PARSE);
    }

    #[test]
    fn usage_errors() {
        let (code, _, err) = go(&["frobnicate"]);
        assert_ne!(code, 0);
        assert!(!err.is_empty());
        let (code, out, _) = go(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("verify"));
    }
}
