use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use amrq::formats::{read_records, ScoreTable};
use amrq_core::dataset::synthetic_gold;
use amrq_core::dep::write_conllu;
use amrq_core::penman::{format_entry, serialize_penman, split_sembank};

fn amrq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amrq")).args(args).env_remove("AMRQ_CONFIG").output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = amrq(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A gold sembank and matching CoNLL-U for `n` template sentences.
fn gold_files(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let items = synthetic_gold(n, 5);
    let bank: Vec<String> =
        items.iter().map(|g| format_entry(&g.id, Some(&g.sentence), &serialize_penman(&g.graph, 4))).collect();
    let trees: Vec<_> = items.iter().map(|g| g.dep.clone()).collect();
    let (sem, conllu) = (dir.join("gold.amr"), dir.join("gold.conllu"));
    fs::write(&sem, bank.join("\n")).unwrap();
    fs::write(&conllu, write_conllu(&trees)).unwrap();
    (sem, conllu)
}

const SMALL: &[&str] =
    &["--embed-dim", "6", "--conv1-filters", "8", "--conv2-filters", "4", "--hidden", "12", "--epochs", "2", "--batch-size", "16"];

#[test]
fn score_identical_files_gives_ones() {
    let dir = tempfile::tempdir().unwrap();
    let (sem, _) = gold_files(dir.path(), 6);
    let out = ok(&["score", "--candidate", p(&sem), "--gold", p(&sem)]);
    let table = ScoreTable::parse(&String::from_utf8(out.stdout).unwrap(), "stdout").unwrap();
    assert_eq!(table.columns.len(), 36);
    assert_eq!(table.rows.len(), 6);
    assert!(table.rows.iter().all(|(_, v)| v.iter().all(|&x| x == 1.0)));
}

#[test]
fn score_is_deterministic_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let (sem, _) = gold_files(dir.path(), 8);
    let cand = dir.path().join("cand.amr");
    ok(&["corrupt", "--gold", p(&sem), "--ops", "2", "--seed", "4", "--output", p(&cand)]);
    assert_eq!(split_sembank(&fs::read_to_string(&cand).unwrap()).len(), 8);
    let a = ok(&["score", "--candidate", p(&cand), "--gold", p(&sem), "--threads", "1"]).stdout;
    let b = ok(&["score", "--candidate", p(&cand), "--gold", p(&sem), "--threads", "3"]).stdout;
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().nth(1).unwrap().split('\t').skip(1).all(|c| c.len() == 6), "four decimals");

    let broken = dir.path().join("broken.amr");
    let mut cand_text = fs::read_to_string(&cand).unwrap();
    cand_text.push_str("\n# ::id extra\n(x / y\n");
    fs::write(&broken, cand_text).unwrap();
    let out = amrq(&["score", "--candidate", p(&broken), "--gold", p(&sem)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 9);

    let out = amrq(&["score", "--candidate", p(&cand), "--gold", p(&dir.path().join("missing.amr"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_pipeline_from_a_gold_sembank() {
    let dir = tempfile::tempdir().unwrap();
    let (sem, conllu) = gold_files(dir.path(), 30);
    let data = dir.path().join("data");
    let prep = ["prepare", "--corrupt", "--gold-sembank", p(&sem), "--conllu", p(&conllu), "--parses", "3"];
    ok(&[&prep[..], &["--out-dir", p(&data), "--seed", "2"]].concat());
    for f in ["train.jsonl", "dev.jsonl", "test.jsonl", "deps.conllu", "amr.vocab", "dep.vocab", "sentence.vocab"] {
        assert!(data.join(f).exists(), "{f}");
    }
    let train = read_records(&data.join("train.jsonl")).unwrap();
    assert_eq!(train.records.len(), 24 * 3);
    assert!(train.records.iter().all(|r| r.targets.is_some()));

    let again = dir.path().join("again");
    ok(&[&prep[..], &["--out-dir", p(&again), "--seed", "2", "--threads", "2"]].concat());
    for f in ["train.jsonl", "dev.jsonl", "test.jsonl", "amr.vocab"] {
        assert_eq!(fs::read(data.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }

    let ckpt = dir.path().join("m.ckpt");
    ok(&[&["train", "--data", p(&data), "--checkpoint", p(&ckpt)], SMALL].concat());
    let report = fs::read_to_string(dir.path().join("m.ckpt.train.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 3);

    let preds = dir.path().join("pred.tsv");
    ok(&["predict", "--checkpoint", p(&ckpt), "--data", p(&data), "--output", p(&preds)]);
    let table = ScoreTable::read(&preds).unwrap();
    assert_eq!(table.columns, ["smatch_p", "smatch_r", "smatch_f1"]);
    assert_eq!(table.rows.len(), 3 * 3);
    assert!(table.rows.iter().all(|(_, v)| v.iter().all(|&x| x > 0.0 && x < 1.0)));

    let ridge = dir.path().join("ridge.tsv");
    ok(&["baseline", "--data", p(&data), "--output", p(&ridge)]);
    let eval_dir = dir.path().join("eval");
    let out = ok(&[
        "evaluate",
        "--predictions",
        p(&preds),
        "--data",
        p(&data),
        "--compare",
        p(&ridge),
        "--out-dir",
        p(&eval_dir),
        "--plots",
    ]);
    let shown = String::from_utf8(out.stdout).unwrap();
    assert_eq!(shown, fs::read_to_string(eval_dir.join("eval.txt")).unwrap());
    assert!(shown.contains("fisher z"));
    for line in fs::read_to_string(eval_dir.join("eval.jsonl")).unwrap().lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    assert!(fs::read_to_string(eval_dir.join("scatter.svg")).unwrap().starts_with("<svg"));
    assert!(eval_dir.join("pearson.svg").exists());
}

#[test]
fn evaluating_the_targets_themselves_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["prepare", "--synthetic", "40", "--parses", "5", "--out-dir", p(&data)]);
    let test = read_records(&data.join("test.jsonl")).unwrap().records;
    let table = ScoreTable {
        columns: vec!["smatch_p".into(), "smatch_r".into(), "smatch_f1".into()],
        rows: test.iter().map(|r| (r.id.clone(), r.targets.unwrap().to_array()[..3].to_vec())).collect(),
    };
    let preds = dir.path().join("gold.tsv");
    fs::write(&preds, table.render(None)).unwrap();
    let out_dir = dir.path().join("eval");
    ok(&["evaluate", "--predictions", p(&preds), "--data", p(&data), "--out-dir", p(&out_dir)]);
    let lines: Vec<serde_json::Value> = fs::read_to_string(out_dir.join("eval.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    for l in lines.iter().filter(|l| l["kind"] == "dimension") {
        assert!((l["pearson"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(l["rmse"], 0.0);
    }
    let c = lines.iter().find(|l| l["kind"] == "classification").unwrap();
    assert_eq!(c["kappa"], 1.0);
    assert_eq!(c["macro_f1"], 1.0);
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, format!("# desk run\nsynthetic = 12\nparses = 3\nout-dir = {}\nseed = 9\n", p(&data))).unwrap();
    ok(&["--config", p(&cfg), "prepare"]);
    let n = |d: &Path| ["train.jsonl", "dev.jsonl", "test.jsonl"]
        .iter()
        .map(|f| read_records(&d.join(f)).unwrap().records.len())
        .sum::<usize>();
    assert_eq!(n(&data), 36);

    let other = dir.path().join("other");
    let out = Command::new(env!("CARGO_BIN_EXE_amrq"))
        .args(["prepare", "--out-dir", p(&other), "--parses", "2"])
        .env("AMRQ_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(n(&other), 24);

    fs::write(&cfg, "sede = 1\n").unwrap();
    assert_eq!(amrq(&["--config", p(&cfg), "prepare"]).status.code(), Some(2));
}

#[test]
fn argument_and_input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out_dir = dir.path().join("out");
    assert_eq!(amrq(&["prepare", "--records", p(&empty), "--out-dir", p(&out_dir)]).status.code(), Some(2));
    assert_eq!(amrq(&["train", "--data", p(&dir.path().join("nowhere"))]).status.code(), Some(2));
    assert_eq!(amrq(&["frobnicate"]).status.code(), Some(2));

    let data = dir.path().join("data");
    ok(&["prepare", "--synthetic", "10", "--parses", "2", "--out-dir", p(&data)]);
    fs::remove_file(data.join("dep.vocab")).unwrap();
    assert_eq!(amrq(&[&["train", "--data", p(&data)], SMALL].concat()).status.code(), Some(2));
    ok(&[&["train", "--data", p(&data), "--no-dep"], SMALL].concat());
}

#[test]
fn records_are_joined_with_sembanks_and_parses() {
    let dir = tempfile::tempdir().unwrap();
    let (sem, conllu) = gold_files(dir.path(), 4);
    let items = synthetic_gold(4, 5);
    let lines: Vec<String> = items
        .iter()
        .map(|g| {
            serde_json::json!({"id": g.id, "sentence_id": g.id, "snt": g.sentence, "penman": serialize_penman(&g.graph, 2)})
                .to_string()
        })
        .collect();
    let records = dir.path().join("records.jsonl");
    fs::write(&records, lines.join("\n")).unwrap();
    let data = dir.path().join("data");
    let args = ["prepare", "--records", p(&records), "--gold-sembank", p(&sem), "--conllu", p(&conllu)];
    ok(&[&args[..], &["--out-dir", p(&data), "--train-frac", "0.5", "--dev-frac", "0.25", "--test-frac", "0.25"]].concat());
    let all: Vec<_> = ["train.jsonl", "dev.jsonl", "test.jsonl"]
        .iter()
        .flat_map(|f| read_records(&data.join(f)).unwrap().records)
        .collect();
    assert_eq!(all.len(), 4);
    assert!(all.iter().all(|r| r.targets.unwrap().to_array().iter().all(|&v| v == 1.0)));

    let out = amrq(&[&args[..3], &["--gold-sembank", p(&sem), "--out-dir", p(&data)]].concat());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}
