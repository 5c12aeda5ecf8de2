use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn godelgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_godelgen"))
        .args(args)
        .env_remove("GODELGEN_FUEL")
        .output()
        .expect("run godelgen")
}

fn status(o: &Output) -> i32 {
    o.status.code().expect("exit status")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn check_reports_cardinalities() {
    let o = godelgen(&["check", &fixture("lambda.sig")]);
    assert_eq!(status(&o), 0);
    assert_eq!(stdout(&o), "t: Infinite\n");

    let o = godelgen(&["check", &fixture("term.sig")]);
    assert_eq!(status(&o), 0);
    assert!(stdout(&o).contains("term z: Infinite"));

    let o = godelgen(&["check", &fixture("bool.sig")]);
    assert_eq!(stdout(&o), "bool: Finite(2)\n");
}

#[test]
fn check_rejections() {
    let o = godelgen(&["check", &fixture("actuals.sig")]);
    assert_eq!(status(&o), 2);
    assert!(stderr(&o).contains("[uniform]"), "{}", stderr(&o));

    let o = godelgen(&["check", &fixture("finite_binder.sig")]);
    assert_eq!(status(&o), 2);
    assert!(stderr(&o).contains("[infinite-variables]"));

    let o = godelgen(&["check", &fixture("plus.sig")]);
    assert_eq!(status(&o), 2);
    assert!(stderr(&o).contains("[single-index]"));

    let o = godelgen(&["check", &fixture("garbage.sig")]);
    assert_eq!(status(&o), 3);

    let o = godelgen(&["check", &fixture("missing.sig")]);
    assert_eq!(status(&o), 3);
}

#[test]
fn encode_examples() {
    let cases = [
        ("lambda.sig", "t", None, "lam [x] x", "0"),
        ("rat.sig", "rat", None, "whole 3", "6"),
        ("term.sig", "term", Some("0"), "unit", "0"),
        ("term.sig", "term", Some("z"), "rec [f] f", "2"),
        ("nat.sig", "nat", None, "5", "5"),
    ];
    for (sig, ty, index, term, want) in cases {
        let sig = fixture(sig);
        let mut args = vec!["encode", sig.as_str(), "--type", ty];
        if let Some(i) = index {
            args.extend(["--index", i]);
        }
        args.push(term);
        let o = godelgen(&args);
        assert_eq!(status(&o), 0, "{term}: {}", stderr(&o));
        assert_eq!(stdout(&o).trim(), want, "{term}");
    }
}

#[test]
fn encode_errors() {
    let lambda = fixture("lambda.sig");
    let o = godelgen(&["encode", &lambda, "--type", "t", "lam [x] y"]);
    assert_eq!(status(&o), 3);
    let o = godelgen(&["encode", &lambda, "--type", "t", "lam [x"]);
    assert_eq!(status(&o), 3);
    let o = godelgen(&["encode", &lambda, "--type", "nope", "x"]);
    assert_eq!(status(&o), 2);
    let term = fixture("term.sig");
    let o = godelgen(&["encode", &term, "--type", "term", "--index", "1", "unit"]);
    assert_eq!(status(&o), 3);
}

#[test]
fn decode_examples() {
    let o = godelgen(&["decode", &fixture("lambda.sig"), "--type", "t", "1"]);
    assert_eq!(stdout(&o), "app (lam [x0] x0) (lam [x0] x0)\n");
    let o = godelgen(&["decode", &fixture("term.sig"), "--type", "term", "--index", "0", "1"]);
    assert_eq!(stdout(&o), "app (lam [x0] x0) unit\n");
    let o = godelgen(&["decode", &fixture("bool.sig"), "--type", "bool", "2"]);
    assert_eq!(status(&o), 2);
    assert!(stdout(&o).is_empty());
    let o = godelgen(&["decode", &fixture("lambda.sig"), "--type", "t", "123456789012345678901234567890"]);
    assert_eq!(status(&o), 0);
}

#[test]
fn fuel_flag_and_environment() {
    let nat = fixture("nat.sig");
    let o = godelgen(&["decode", &nat, "--type", "nat", "--fuel", "5", "10"]);
    assert_eq!(status(&o), 4);

    let run = |env: &str, extra: &[&str]| {
        let mut args = vec!["decode", nat.as_str(), "--type", "nat"];
        args.extend_from_slice(extra);
        args.push("10");
        let o = Command::new(env!("CARGO_BIN_EXE_godelgen"))
            .args(&args)
            .env("GODELGEN_FUEL", env)
            .output()
            .unwrap();
        status(&o)
    };
    assert_eq!(run("5", &[]), 4);
    assert_eq!(run("5", &["--fuel", "100"]), 0);
    assert_eq!(run("100", &[]), 0);

    let o = godelgen(&["decode", &nat, "--type", "nat", "--fuel", "0", "1"]);
    assert_ne!(status(&o), 0);
}

#[test]
fn enumerate_examples() {
    let o = godelgen(&["enumerate", &fixture("lambda.sig"), "--type", "t", "2"]);
    assert_eq!(stdout(&o), "0\tlam [x0] x0\n1\tapp (lam [x0] x0) (lam [x0] x0)\n");
    let o = godelgen(&["enumerate", &fixture("bool.sig"), "--type", "bool", "5"]);
    assert_eq!(stdout(&o).lines().count(), 2);
    let o = godelgen(&["enumerate", &fixture("empty.sig"), "--type", "void", "3"]);
    assert_eq!(status(&o), 0);
    assert!(stdout(&o).is_empty());
}

#[test]
fn compare_examples() {
    let lambda = fixture("lambda.sig");
    let cmp = |a: &str, b: &str| stdout(&godelgen(&["compare", &lambda, "--type", "t", a, b]));
    assert_eq!(cmp("lam [x] x", "lam [y] y"), "EQ\n");
    assert_eq!(cmp("lam [x] x", "app (lam [x] x) (lam [x] x)"), "LT\n");
    assert_eq!(cmp("app (lam [x] x) (lam [x] x)", "lam [x] x"), "GT\n");
    assert_eq!(cmp("lam [x] lam [y] x", "lam [x] lam [y] x"), "EQ\n");
    let o = godelgen(&["compare", &lambda, "--type", "t", "lam [x] x", "lam ["]);
    assert_eq!(status(&o), 3);
}

#[test]
fn verify_lambda_json() {
    let o = godelgen(&["verify", &fixture("lambda.sig"), "--json"]);
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["signature"].as_str().unwrap().ends_with("lambda.sig"));
    let c = &v["classes"][0];
    assert_eq!(c["type"], "t");
    assert_eq!(c["index_class"], "unit");
    for key in ["total", "unique", "onto", "one_to_one"] {
        assert_eq!(c[key], "pass", "{key}");
    }
    assert_eq!(c["codes_checked"], 10_000);
    assert!(c.get("counterexample").is_none());

    let again = godelgen(&["verify", &fixture("lambda.sig"), "--json"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn verify_bad_plan_reports_code_zero() {
    let o = godelgen(&[
        "verify",
        &fixture("rat.sig"),
        "--tags",
        "rat=frac,whole",
        "--max-code",
        "1000",
        "--max-size",
        "4",
        "--json",
    ]);
    assert_eq!(status(&o), 1, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rat = v["classes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["type"] == "rat")
        .unwrap();
    assert_eq!(rat["onto"], "fail");
    let cx = &rat["counterexample"];
    assert_eq!(cx["witness"], "0");
    assert!(cx["detail"].as_str().unwrap().contains("fuel"));
    let nat = v["classes"].as_array().unwrap().iter().find(|c| c["type"] == "nat").unwrap();
    assert_eq!(nat["onto"], "pass");
}

#[test]
fn verify_budget_rejections() {
    let lambda = fixture("lambda.sig");
    for code in ["0", "1"] {
        let o = godelgen(&["verify", &lambda, "--max-code", code]);
        assert_eq!(status(&o), 2, "max-code {code}");
    }
    let o = godelgen(&["verify", &fixture("actuals.sig")]);
    assert_eq!(status(&o), 2);
}

#[test]
fn gaps_helper() {
    let o = godelgen(&["gaps", "{4,11,96}"]);
    assert_eq!(stdout(&o), "{4,11,96} [4,6,84]\n");
    let o = godelgen(&["gaps", "[0,1,1]"]);
    assert_eq!(stdout(&o), "{0,2,4} [0,1,1]\n");
}
