use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use imp_core::envs::{EnvConfig, Family, ModelSet};
use tempfile::TempDir;

fn imp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imp"))
        .args(args)
        .current_dir(dir)
        .env_remove("IMP_MODEL_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Struct models generated once through the CLI.
fn model_dir() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let out = imp(
            &[
                "gen-model",
                "--family",
                "struct",
                "--samples",
                "100000",
                "--seed",
                "3",
                "--out",
                ".",
            ],
            dir.path(),
        );
        ok(&out);
        dir
    })
    .path()
}

fn models_arg() -> String {
    model_dir().to_str().unwrap().to_owned()
}

#[test]
fn gen_model_requires_a_seed() {
    let dir = TempDir::new().unwrap();
    let out = imp(&["gen-model", "--family", "struct", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("struct.impm").exists());
}

#[test]
fn generated_models_load_back() {
    let dir = model_dir();
    let set = ModelSet::load_dir(Family::StructUc, dir).unwrap();
    set.check(Family::StructUc, 30).unwrap();
    assert!(dir.join("gen-model.manifest.json").is_file());
}

#[test]
fn wind_models_come_as_three_files() {
    let dir = TempDir::new().unwrap();
    let args = [
        "gen-model",
        "--family",
        "owf",
        "--samples",
        "100000",
        "--seed",
        "1",
        "--horizon",
        "3",
        "--out",
        "m",
    ];
    ok(&imp(&args, dir.path()));
    for name in ["owf_upper.impm", "owf_middle.impm", "owf_mudline.impm"] {
        assert!(dir.path().join("m").join(name).is_file(), "{name}");
    }
    let set = ModelSet::load_dir(Family::Owf, dir.path().join("m")).unwrap();
    assert!(set.check(Family::Owf, 3).is_ok());
    assert!(set.check(Family::Owf, 20).is_err());
}

#[test]
fn exported_config_round_trips() {
    let dir = TempDir::new().unwrap();
    let args = [
        "export-config",
        "--family",
        "struct_c",
        "--n-comp",
        "4",
        "--k-comp",
        "3",
        "--campaign-cost",
        "true",
    ];
    let text = ok(&imp(&args, dir.path()));
    let parsed = EnvConfig::from_toml_str(&text).unwrap();
    assert_eq!(parsed, EnvConfig::struct_c(4, 3).with_campaign_cost(true));
    std::fs::write(dir.path().join("c.toml"), &text).unwrap();
    let again = ok(&imp(&["export-config", "--config", "c.toml"], dir.path()));
    assert_eq!(again, text);
}

#[test]
fn invalid_configs_are_refused() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "family = \"struct_uc\"\nn_comp = 3\nk_comp = 5\n",
    )
    .unwrap();
    let out = imp(&["export-config", "--config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    std::fs::write(dir.path().join("typo.toml"), "family = \"owf\"\nn_turbines = 3\n").unwrap();
    assert!(!imp(&["export-config", "--config", "typo.toml"], dir.path())
        .status
        .success());
    let out = imp(&["eval", "--family", "struct_uc", "--policy", "clever"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let m = models_arg();
    let out = imp(
        &[
            "eval",
            "--family",
            "struct_uc",
            "--n-comp",
            "3",
            "--k-comp",
            "2",
            "--models",
            &m,
            "--policy",
            "heuristic",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_writes_reports_and_ignores_the_seed_for_doing_nothing() {
    let dir = TempDir::new().unwrap();
    let m = models_arg();
    let mean = |seed: &str, out: &str| {
        let args = [
            "eval",
            "--family",
            "struct_uc",
            "--n-comp",
            "3",
            "--k-comp",
            "2",
            "--models",
            &m,
            "--policy",
            "donothing",
            "--episodes",
            "5",
            "--seed",
            seed,
            "--out-dir",
            out,
            "--histogram",
            "4",
        ];
        ok(&imp(&args, dir.path()));
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(out).join("report.json")).unwrap()).unwrap();
        report["mean"].as_f64().unwrap()
    };
    assert_eq!(mean("1", "a"), mean("2", "b"));
    for f in ["episodes.csv", "histogram.csv", "manifest.json"] {
        assert!(dir.path().join("a").join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("a/episodes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "eval");
    assert_eq!(manifest["seeds"]["master"], 1);
}

#[test]
fn one_cell_search_writes_one_row() {
    let dir = TempDir::new().unwrap();
    let m = models_arg();
    let args = [
        "heuristic-search",
        "--family",
        "struct_uc",
        "--n-comp",
        "3",
        "--k-comp",
        "2",
        "--models",
        &m,
        "--intervals",
        "5",
        "--n-inspect",
        "1",
        "--episodes-per-cell",
        "10",
        "--eval-episodes",
        "10",
        "--out",
        "grid.csv",
    ];
    let stdout = ok(&imp(&args, dir.path()));
    assert!(stdout.contains("best interval=5 n_inspect=1"));
    let csv = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(dir.path().join("grid.json").is_file());
    assert!(dir.path().join("grid.manifest.json").is_file());
}

#[test]
fn rollout_traces_every_step() {
    let dir = TempDir::new().unwrap();
    let m = models_arg();
    let args = [
        "rollout",
        "--family",
        "struct_uc",
        "--n-comp",
        "3",
        "--k-comp",
        "2",
        "--models",
        &m,
        "--policy",
        "random",
        "--seed",
        "4",
    ];
    let stdout = ok(&imp(&args, dir.path()));
    let lines: Vec<serde_json::Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 30);
    assert_eq!(lines[29]["t"], 29);
    assert_eq!(ok(&imp(&args, dir.path())), stdout);

    std::fs::write(dir.path().join("script.jsonl"), "[1,0,0]\n[0,2,0]\n").unwrap();
    let args = [
        "rollout",
        "--family",
        "struct_uc",
        "--n-comp",
        "3",
        "--k-comp",
        "2",
        "--models",
        &m,
        "--policy",
        "external",
        "--actions",
        "script.jsonl",
        "--out",
        "trace.jsonl",
    ];
    ok(&imp(&args, dir.path()));
    let trace = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert_eq!(first["actions"], serde_json::json!([1, 0, 0]));
    assert!(dir.path().join("trace.manifest.json").is_file());
}

#[test]
fn variance_study_writes_both_tables() {
    let dir = TempDir::new().unwrap();
    let m = models_arg();
    let args = [
        "variance-study",
        "--family",
        "struct_uc",
        "--n-comp",
        "3",
        "--k-comp",
        "2",
        "--models",
        &m,
        "--policy",
        "random",
        "--counts",
        "3,9",
        "--repeats",
        "4",
        "--out-dir",
        "v",
    ];
    ok(&imp(&args, dir.path()));
    let v: PathBuf = dir.path().join("v");
    assert_eq!(
        std::fs::read_to_string(v.join("repeats.csv")).unwrap().lines().count(),
        9
    );
    assert_eq!(
        std::fs::read_to_string(v.join("summary.csv")).unwrap().lines().count(),
        3
    );
    assert!(v.join("manifest.json").is_file());
}
