use std::path::Path;
use std::process::{Command, Output};

use appraisal::cli::{EvalReport, RunManifest, TrainReport, TransferRunReport};
use appraisal::synth::{CitySpec, UniverseSpec};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_appraisal")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_spec(dir: &Path) -> std::path::PathBuf {
    let mut spec = UniverseSpec::default();
    spec.cities[0].n_records = 400;
    spec.cities.push(CitySpec {
        name: "Baotou".into(),
        tier: 3,
        n_districts: 2,
        n_residences: 6,
        n_records: 60,
        base_log_price: 9.5,
    });
    let path = dir.join("spec.json");
    std::fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    path
}

fn synth(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("data");
    let o = run(&["synth", "--spec", s(&small_spec(dir)), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn synth_writes_csvs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let o = run(&["synth", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("Beijing.csv").is_file());
    assert!(out.join("Hohhot.csv").is_file());
    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(out.join("synth.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.command, "synth");
    assert_eq!(manifest.seed, 42);
    assert_eq!(manifest.outputs.len(), 3);

    let again = dir.path().join("b");
    assert!(run(&["synth", "--out", s(&again)]).status.success());
    for f in ["Beijing.csv", "Hohhot.csv", "truth.json"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
    let reseeded = dir.path().join("c");
    assert!(run(&["synth", "--out", s(&reseeded), "--seed", "7"]).status.success());
    assert_ne!(std::fs::read(out.join("Hohhot.csv")).unwrap(), std::fs::read(reseeded.join("Hohhot.csv")).unwrap());
}

#[test]
fn malformed_spec_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(&spec, "{ \"cities\": [ {\"name\": ").unwrap();
    let o = run(&["synth", "--spec", s(&spec), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let mut invalid = UniverseSpec::default();
    invalid.cities[1].n_residences = 1;
    std::fs::write(&spec, serde_json::to_string(&invalid).unwrap()).unwrap();
    let o = run(&["synth", "--spec", s(&spec), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_csv_is_a_usage_error() {
    let o = run(&["train", "--tier", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn train_transfer_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let source_csv = data.join("Beijing.csv");
    let target_csv = data.join("Hohhot.csv");
    let before = std::fs::read(&source_csv).unwrap();

    let train_dir = dir.path().join("train");
    let o = run(&["train", "--csv", s(&source_csv), "--tier", "1", "--epochs", "30", "--cv", "2", "--out", s(&train_dir)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(train_dir.join("train.report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for field in ["rmse", "mape", "r2"] {
        assert!(value[field].is_number(), "{field}");
    }
    let report: TrainReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.folds.len(), 2);
    assert_eq!((report.config.learning_rate, report.config.batch_size), (0.005, 256));
    assert_eq!(std::fs::read(&source_csv).unwrap(), before);
    let model = train_dir.join("model.json");

    let o = run(&["eval", "--ckpt", s(&model), "--csv", s(&source_csv)]);
    assert_eq!(o.status.code(), Some(0));
    let eval: EvalReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(eval.records, 400);
    assert!(eval.metrics.r2 > 0.0, "r2 {}", eval.metrics.r2);

    let transfer_args = |out: &Path| {
        run(&[
            "transfer", "--source", s(&model), "--target", s(&target_csv), "--k", "10", "--epochs", "5", "--out", s(out),
        ])
    };
    let t1 = dir.path().join("t1");
    let o = transfer_args(&t1);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r1 = std::fs::read_to_string(t1.join("transfer.report.json")).unwrap();
    let parsed: TransferRunReport = serde_json::from_str(&r1).unwrap();
    assert_eq!(parsed.result.finetune_size, 200);
    assert_eq!(parsed.result.test_size, 100);
    assert!(parsed.frozen_backbone);
    let t2 = dir.path().join("t2");
    assert!(transfer_args(&t2).status.success());
    assert_eq!(r1, std::fs::read_to_string(t2.join("transfer.report.json")).unwrap());
    assert_eq!(
        std::fs::read(t1.join("transfer.model.json")).unwrap(),
        std::fs::read(t2.join("transfer.model.json")).unwrap()
    );

    let e = dir.path().join("eval");
    let o = run(&["eval", "--ckpt", s(&t1.join("transfer.model.json")), "--csv", s(&target_csv), "--out", s(&e)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(e.join("eval.report.json").is_file() && e.join("eval.manifest.json").is_file());
}

#[test]
fn baseline_checkpoint_cannot_be_transferred() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let out = dir.path().join("trad");
    let o = run(&[
        "train", "--csv", s(&data.join("Baotou.csv")), "--model", "traditional", "--epochs", "2", "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[
        "transfer", "--source", s(&out.join("model.json")), "--target", s(&data.join("Hohhot.csv")), "--epochs", "1",
        "--out", s(&dir.path().join("x")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn eval_rejects_unusable_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let out = dir.path().join("m");
    assert!(run(&["train", "--csv", s(&data.join("Baotou.csv")), "--epochs", "2", "--out", s(&out)])
        .status
        .success());
    let model = out.join("model.json");

    let empty = dir.path().join("empty.csv");
    let header = std::fs::read_to_string(data.join("Baotou.csv")).unwrap().lines().next().unwrap().to_string();
    std::fs::write(&empty, format!("{header}\nBaotou,,,,,,,,,,,,,,\n")).unwrap();
    assert_eq!(run(&["eval", "--ckpt", s(&model), "--csv", s(&empty)]).status.code(), Some(3));

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "not json").unwrap();
    assert_eq!(run(&["eval", "--ckpt", s(&garbage), "--csv", s(&data.join("Baotou.csv"))]).status.code(), Some(3));
}
