use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn statgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_statgame"))
        .args(args)
        .output()
        .expect("the binary runs")
}

fn fixtures(dir: &str) -> Vec<PathBuf> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(dir);
    let mut files: Vec<PathBuf> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files
}

fn fixture(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs a scenario and returns the exit code and parsed report.
fn report(scenario: &str, extra: &[&str]) -> (i32, Value) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let mut args = vec!["run", scenario, "--quiet", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = statgame(&args);
    let text = fs::read_to_string(&out).unwrap_or_else(|_| panic!("no report: {}", stderr(&o)));
    (
        o.status.code().unwrap(),
        serde_json::from_str(&text).unwrap(),
    )
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name} in {report}"))
}

#[test]
fn passing_fixtures_exit_zero() {
    for f in fixtures("pass") {
        let o = statgame(&["run", f.to_str().unwrap()]);
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}:\n{stdout}{}",
            f.display(),
            stderr(&o)
        );
        assert!(stdout.lines().last().unwrap().starts_with("PASS"));
    }
}

#[test]
fn failing_fixtures_exit_one_with_a_report() {
    for f in fixtures("fail") {
        let (code, r) = report(f.to_str().unwrap(), &[]);
        assert_eq!(code, 1, "{}", f.display());
        assert_eq!(r["pass"], false);
        assert!(r["checks"]
            .as_array()
            .unwrap()
            .iter()
            .any(|c| c["pass"] == false));
    }
}

#[test]
fn malformed_fixtures_exit_two_naming_the_json_path() {
    let expected = [
        ("missing_row.json", "$.payload.instances[0].c.rows.b"),
        ("negative_seed.json", "$.seed"),
        ("negative_variance.json", "$.payload.instances[0].prior"),
        ("truncated.json", "$: invalid JSON"),
        (
            "unknown_continuation.json",
            "$.payload.context.continuation.name",
        ),
        ("unknown_field.json", "$.payload.extra"),
        ("unknown_kind.json", "$.kind"),
        ("unknown_observation.json", "$.payload.instances[0].y"),
    ];
    assert_eq!(fixtures("malformed").len(), expected.len());
    for (file, path) in expected {
        let o = statgame(&["run", &fixture(&format!("malformed/{file}"))]);
        assert_eq!(o.status.code(), Some(2), "{file}");
        let err = stderr(&o);
        assert!(err.starts_with(&format!("error: {path}")), "{file}: {err}");
    }
}

#[test]
fn missing_scenario_file_is_an_input_error() {
    let o = statgame(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn optical_composition_at_seed_42_is_exact_on_200_instances() {
    let (code, r) = report(
        &fixture("pass/buco_random.json"),
        &["--seed", "42", "--instances", "200"],
    );
    assert_eq!(code, 0);
    assert_eq!(r["summary"]["instances"], 200);
    assert_eq!(r["summary"]["max_deviation"], 0.0);
    assert_eq!(r["mode"], "rational");
    assert_eq!(check(&r, "optical-composition")["pass"], true);
}

#[test]
fn free_energy_identity_holds_on_100_random_float_instances() {
    let (code, r) = report(&fixture("pass/eubo_float.json"), &["--instances", "100"]);
    assert_eq!(code, 0);
    assert_eq!(r["summary"]["instances"], 100);
    assert!(r["summary"]["max_deviation"].as_f64().unwrap() < 1e-12);
}

#[test]
fn reports_are_identical_apart_from_wall_time() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_time_ms").unwrap();
        v
    };
    for f in [
        "pass/buco_random.json",
        "pass/vae_unit_noise.json",
        "pass/bsc_autoencoder.json",
    ] {
        let (_, a) = report(&fixture(f), &[]);
        let (_, b) = report(&fixture(f), &[]);
        assert_eq!(strip(a), strip(b), "{f}");
    }
    // Thread count does not change the ordered report either.
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.json");
    let many = dir.path().join("many.json");
    let s = fixture("pass/genbayes_random.json");
    let run = |out: &Path, threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_statgame"))
            .args(["run", &s, "--quiet", "--out", out.to_str().unwrap()])
            .env("RAYON_NUM_THREADS", threads)
            .status()
            .unwrap();
        let text = fs::read_to_string(out).unwrap();
        text.lines()
            .filter(|l| !l.contains("wall_time_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(run(&one, "1"), run(&many, "4"));
}

#[test]
fn seed_and_mode_flags_override_the_scenario() {
    let (_, a) = report(&fixture("pass/buco_random.json"), &["--seed", "1"]);
    let (_, b) = report(
        &fixture("pass/buco_random.json"),
        &["--seed", "1", "--mode", "float"],
    );
    assert_eq!(a["seed"], 1);
    assert_eq!(a["mode"], "rational");
    assert_eq!(b["mode"], "float");
    assert_eq!(b["pass"], true);
    assert!(b["summary"]["max_deviation"].as_f64().unwrap() < 1e-12);
}

#[test]
fn report_has_the_versioned_schema() {
    let (_, r) = report(&fixture("pass/coin_mle.json"), &[]);
    let mut keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "checks",
            "kind",
            "mode",
            "pass",
            "report_version",
            "scenario",
            "seed",
            "summary",
            "wall_time_ms"
        ]
    );
    assert_eq!(r["report_version"], 1);
    assert_eq!(r["scenario"], "coin-7-of-10");
    assert_eq!(r["kind"], "coin-mle");
    for key in ["instances", "max_deviation", "iterations", "final_fitness"] {
        assert!(r["summary"].get(key).is_some(), "{key}");
    }
}

#[test]
fn bsc_autoencoder_reaches_the_surprisal() {
    let (code, r) = report(&fixture("pass/bsc_autoencoder.json"), &[]);
    assert_eq!(code, 0);
    // Uniform evidence: the optimum is the expected surprisal ln 2.
    let f = r["summary"]["final_fitness"].as_f64().unwrap();
    assert!((f - 2f64.ln()).abs() < 1e-6, "{f}");
    assert!(r["summary"]["iterations"].as_u64().unwrap() <= 5000);
    assert_eq!(check(&r, "posterior-recovered")["pass"], true);
}

#[test]
fn trace_is_written_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = statgame(&[
        "run",
        &fixture("pass/bsc_autoencoder.json"),
        "--quiet",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,fitness"));
    let rows: Vec<(usize, f64)> = lines
        .map(|l| {
            let (i, f) = l.split_once(',').unwrap();
            (i.parse().unwrap(), f.parse().unwrap())
        })
        .collect();
    assert_eq!(rows[0].0, 0);
    assert!(rows
        .windows(2)
        .all(|w| w[1].0 == w[0].0 + 1 && w[1].1 <= w[0].1));

    let batch = dir.path().join("batch.csv");
    statgame(&[
        "run",
        &fixture("pass/vae_unit_noise.json"),
        "--quiet",
        "--trace",
        batch.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&batch).unwrap();
    assert!(text.starts_with("instance,iteration,fitness\n0,0,"));
}

#[test]
fn quiet_suppresses_the_summary() {
    let o = statgame(&["run", &fixture("pass/helmholtz_explicit.json"), "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let o = statgame(&["run", &fixture("pass/helmholtz_explicit.json")]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("PASS energy-minus-entropy"), "{out}");
}

fn generate(args: &[&str]) -> (Output, Option<String>) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scenario.json");
    let mut all = vec!["generate"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let o = statgame(&all);
    (o, fs::read_to_string(&out).ok())
}

#[test]
fn generated_scenarios_are_byte_stable() {
    let args = ["compose-check", "--spaces", "4,5,3", "--seed", "7"];
    let (_, a) = generate(&args);
    let (_, b) = generate(&args);
    let a = a.unwrap();
    assert_eq!(Some(a.clone()), b);
    let (_, other) = generate(&["compose-check", "--spaces", "4,5,3", "--seed", "8"]);
    assert_ne!(Some(a.clone()), other);

    let doc: Value = serde_json::from_str(&a).unwrap();
    let inst = &doc["payload"]["instances"][0];
    assert_eq!(inst["c"]["dom"]["outcomes"].as_array().unwrap().len(), 4);
    assert_eq!(inst["c"]["cod"]["outcomes"].as_array().unwrap().len(), 5);
    assert_eq!(inst["d"]["cod"]["outcomes"].as_array().unwrap().len(), 3);
    // Quantized weights: every numerator and denominator stays within 64·n.
    for (_, w) in inst["prior"]["weights"].as_object().unwrap() {
        let (p, q) = w
            .as_str()
            .unwrap()
            .split_once('/')
            .unwrap_or((w.as_str().unwrap(), "1"));
        assert!(p.parse::<u64>().unwrap() <= 64 * 4 && q.parse::<u64>().unwrap() <= 64 * 4);
    }
}

#[test]
fn every_generated_kind_runs_clean() {
    for kind in [
        "compose-check",
        "eubo-check",
        "helmholtz-check",
        "genbayes-coincidence",
        "coin-mle",
        "vae-1d",
        "game-pipeline",
    ] {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let g = statgame(&[
            "generate",
            kind,
            "--seed",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(g.status.code(), Some(0), "{kind}: {}", stderr(&g));
        let o = statgame(&["run", path.to_str().unwrap(), "--quiet"]);
        assert_eq!(o.status.code(), Some(0), "{kind}: {}", stderr(&o));
    }
}

#[test]
fn unknown_generate_kind_exits_two() {
    let (o, written) = generate(&["no-such-kind"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(written.is_none());
    let (o, _) = generate(&["compose-check", "--spaces", "4,5"]);
    assert_eq!(o.status.code(), Some(2));
    let (o, _) = generate(&["coin-mle", "--heads", "11", "--flips", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coin_mle_embeds_the_empirical_replay() {
    let (o, text) = generate(&["coin-mle", "--heads", "7", "--flips", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = text.unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    let cont = &doc["payload"]["context"]["continuation"];
    assert_eq!(cont["name"], "empirical-replay");
    assert_eq!(cont["args"]["counts"]["H"], 7);
    assert_eq!(cont["args"]["counts"]["T"], 3);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coin.json");
    fs::write(&path, text).unwrap();
    let (code, r) = report(path.to_str().unwrap(), &[]);
    assert_eq!(code, 0);
    assert!(r["summary"]["max_deviation"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn vae_draws_lie_in_the_documented_ranges() {
    let (o, text) = generate(&["vae-1d", "--seed", "11", "--instances", "300"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&text.unwrap()).unwrap();
    let instances = doc["payload"]["instances"].as_array().unwrap();
    assert_eq!(instances.len(), 300);
    let within = |v: &Value, lo: f64, hi: f64| {
        let x = v.as_f64().unwrap();
        lo <= x && x <= hi
    };
    for i in instances {
        assert!(within(&i["prior"]["mean"], -2.0, 2.0));
        assert!(within(&i["kernel"]["slope"], -2.0, 2.0));
        assert!(within(&i["kernel"]["noise_variance"], 0.1, 4.0));
        assert!(within(&i["prior"]["variance"], 0.1, 4.0));
    }
}
