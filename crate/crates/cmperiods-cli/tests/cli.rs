use assert_cmd::Command;
use serde_json::Value;

fn cmd() -> Command {
    Command::cargo_bin("cmperiods").unwrap()
}

fn stdout_of(args: &[&str]) -> String {
    let out = cmd().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json_of(args: &[&str]) -> Value {
    serde_json::from_str(&stdout_of(args)).unwrap()
}

#[test]
fn discriminant_scalar() {
    assert_eq!(stdout_of(&["discriminant", "--dk", "4"]).trim(), "2");
    assert_eq!(stdout_of(&["discriminant", "--dk", "7"]).trim(), "7");
    cmd().args(["discriminant", "--dk", "12"]).assert().code(2);
}

#[test]
fn valuation_calc_prints_rationals() {
    assert_eq!(stdout_of(&["valuation-calc", "thm-delta", "--p", "3", "--t", "2"]).trim(), "-1");
    let by_formula = stdout_of(&["valuation-calc", "interpolation", "--p", "3", "--t", "3", "--sign", "-"]);
    let by_eval = stdout_of(&["valuation-calc", "interpolation", "--p", "3", "--t", "3", "--sign", "-", "--by-eval"]);
    assert_eq!(by_formula, by_eval);
}

#[test]
fn xi_classify_inert() {
    assert_eq!(stdout_of(&["xi-classify", "--eps", "1", "--p", "split", "--t-cond", "3"]).trim(), "1");
    let a = stdout_of(&["xi-classify", "--eps", "1", "--p", "inert", "--t-cond", "2"]);
    let b = stdout_of(&["xi-classify", "--eps", "1", "--p", "inert", "--t-cond", "3"]);
    assert_ne!(a, b);
}

#[test]
fn master_identity_exit_codes() {
    cmd().args(["verify", "master-identity", "--q", "3", "--m", "2"]).assert().success();
    cmd().args(["verify", "master-identity", "--q", "3", "--m", "3"]).assert().code(1);
    cmd().args(["verify", "master-identity", "--q", "3", "--m", "3", "--form", "corrected"]).assert().success();
}

#[test]
fn multi_prime_mode_agrees_with_exact() {
    let exact = json_of(&["verify", "master-identity", "--q", "5", "--m", "2"]);
    let multi = json_of(&["verify", "master-identity", "--q", "5", "--m", "2", "--mode", "multi-prime"]);
    assert_eq!(exact["checked"], multi["checked"]);
    assert_eq!(exact["passed"], multi["passed"]);
    assert_eq!(multi["mode"], "multi-prime");
    for l in multi["primes"].as_array().unwrap() {
        assert_eq!(l.as_u64().unwrap() % 200, 1);
    }
}

#[test]
fn bfprime_odd_level_needs_correction() {
    cmd().args(["verify", "bfprime", "--q", "3", "--m", "3"]).assert().code(1);
    cmd().args(["verify", "bfprime", "--q", "3", "--m", "3", "--form", "corrected"]).assert().success();
    cmd().args(["verify", "bfprime", "--q", "3", "--m", "3", "--mode", "multi-prime"]).assert().code(2);
}

#[test]
fn toric_period_records() {
    let rows = json_of(&["toric-period", "--q", "3", "--m", "2", "--ell", "5,7"]);
    let rows = rows.as_array().unwrap();
    assert!(!rows.is_empty());
    for r in rows {
        assert_eq!(r["conductor"], 72);
        assert_eq!(r["ell_unit"].as_object().unwrap().len(), 8);
        assert_eq!(r["vanishes"], false);
    }
}

#[test]
fn gauss_and_epsilon() {
    cmd().args(["gauss", "--q", "5", "--m", "2", "--chi", "3"]).assert().success();
    let e = json_of(&["epsilon", "--q", "3", "--m", "2", "--lambda", "0,0,1"]);
    assert_eq!(e["epsilon"], "1");
    assert_eq!(e["root_number"], e["lambda_theta"]);
    cmd().args(["epsilon", "--q", "3", "--m", "2", "--lambda", "0,0,0"]).assert().code(2);
}

#[test]
fn iwasawa_mu_lambda() {
    let v = json_of(&["iwasawa", "mu-lambda", "--p", "3", "--coeffs", "27,9,18"]);
    assert_eq!(v["mu"], 2);
    assert_eq!(v["lambda"], 1);
}

#[test]
fn theta_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let tower = dir.path().join("tower.json");
    let t = tower.to_str().unwrap();
    let first = stdout_of(&["theta", "run", "--seed", "11", "--h", "2", "--save-tower", t]);
    let second = stdout_of(&["theta", "run", "--seed", "11", "--h", "2"]);
    let replay = stdout_of(&["theta", "run", "--tower", t]);
    assert_eq!(first, second);
    assert_eq!(first, replay);
    let v: Value = serde_json::from_str(&first).unwrap();
    assert!(v["cross_path"].as_array().unwrap().iter().all(|r| r["holds"] == true));
}

#[test]
fn pollack_round_trip_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("alpha.json");
    let f = file.to_str().unwrap();
    stdout_of(&["pollack", "assemble", "--plus", "1,-2,5", "--minus", "3,0,7", "--out", f]);
    let v = json_of(&["pollack", "decompose", "--input", f]);
    assert_eq!(v["reconstruction_exact"], true);
    let head = |k: &str| v[k]["coeffs"].as_array().unwrap()[..3].iter().map(|c| c.as_str().unwrap().to_owned()).collect::<Vec<_>>();
    // coefficients come back as residues mod 3^10
    assert_eq!(head("theta_plus"), ["1", "59047", "5"]);
    assert_eq!(head("theta_minus"), ["3", "0", "7"]);
}
