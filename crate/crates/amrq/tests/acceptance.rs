//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#[path = "../../core/tests/support/gradcheck.rs"]
mod gradcheck;
#[path = "../../core/tests/support/graphs.rs"]
mod graphs;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use amrq_core::dataset::{corrupt, CorruptionPool};
use amrq_core::grid::{Side, TokenGrid, Truncation};
use amrq_core::metrics::{quality_targets, smatch, smatch_bruteforce, Family};
use amrq_core::model::{GridPair, ModelConfig, RaterModel};
use amrq_core::penman::{parse_penman, randomize_surface, AmrGraph};
use amrq_core::stats::{macro_f1, quadratic_weighted_kappa};
use amrq_core::{mix_seed, seeded_rng};
use graphs::random_graph;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pool() -> CorruptionPool {
    let gs: Vec<AmrGraph> = (0..16).map(|i| random_graph(mix_seed(99, i))).collect();
    CorruptionPool::from_graphs(&gs)
}

fn smatch_oracle() -> Outcome {
    let start = Instant::now();
    let pool = pool();
    let (mut pairs, mut equal, mut above, mut seed) = (0, 0, 0, 0u64);
    while pairs < 200 {
        seed += 1;
        let gold = random_graph(mix_seed(1, seed));
        let cand = if seed % 2 == 0 {
            corrupt(&gold, (seed % 5) as usize, &pool, seed)
        } else {
            random_graph(mix_seed(2, seed))
        };
        if gold.variable_count() > 6 || cand.variable_count() > 6 {
            continue;
        }
        pairs += 1;
        let best = smatch_bruteforce(&cand, &gold).map_err(|e| e.to_string())?.f1;
        let climbed = smatch(&cand, &gold, 4, seed).scores.f1;
        if climbed > best + 1e-12 {
            above += 1;
        } else if (climbed - best).abs() <= 1e-12 {
            equal += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        equal * 100 >= pairs * 95 && above == 0 && secs < 60.0,
        format!("{equal}/{pairs} optimal, {above} above optimum, {secs:.1}s"),
    )
}

fn metric_invariance() -> Outcome {
    let pool = pool();
    let (mut not_ones, mut drift) = (0, 0);
    for i in 0..500u64 {
        let g = random_graph(mix_seed(3, i));
        let shuffled = randomize_surface(&g, i);
        if quality_targets(&shuffled, &g, 4, i).to_array().iter().any(|&v| v != 1.0) {
            not_ones += 1;
        }
        let c = corrupt(&g, (i % 6) as usize + 1, &pool, i);
        let before = quality_targets(&c, &g, 4, i).to_array().map(f64::to_bits);
        let after = quality_targets(&randomize_surface(&c, i ^ 0x5a5a), &g, 4, i).to_array().map(f64::to_bits);
        if before != after {
            drift += 1;
        }
    }
    check(not_ones == 0 && drift == 0, format!("500 graphs: {not_ones} not all ones, {drift} corrupted pairs changed"))
}

fn gradient_suite() -> Outcome {
    let checks = gradcheck::gradient_suite(2024);
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| format!("{} {:?} err {:.2e}", c.op, c.shape, c.max_rel_err))
        .collect();
    let mut per_op = std::collections::BTreeMap::<&str, usize>::new();
    for c in &checks {
        *per_op.entry(c.op.split('/').next().unwrap_or(&c.op)).or_default() += 1;
    }
    let thin: Vec<&str> = per_op.iter().filter(|(_, &n)| n < 3).map(|(op, _)| *op).collect();
    let worst = checks.iter().map(|c| c.max_rel_err).fold(0.0, f64::max);
    check(
        failed.is_empty() && thin.is_empty(),
        format!(
            "{} checks over {} ops, worst rel err {worst:.2e}, failed {failed:?}, under three shapes {thin:?}",
            checks.len(),
            per_op.len()
        ),
    )
}

fn shape_contract() -> Outcome {
    let mut rng = seeded_rng(4);
    let mut grid = |side, vocab: u32| {
        let cells = (0..45 * 15).map(|_| rng.gen_range(0..vocab)).collect();
        TokenGrid { rows: 45, cols: 15, cells, side, truncation: Truncation::default() }
    };
    let pair = GridPair { amr: grid(Side::Amr, 30), dep: grid(Side::Dep, 30) };
    let mut seen = Vec::new();
    for out in [3, 33] {
        let model = RaterModel::<f32>::new(ModelConfig::paper(30, 30, out)).map_err(|e| e.to_string())?;
        let t = model.shape_trace(&pair).map_err(|e| e.to_string())?;
        let ok = t.l1 == [45, 15, 256] && t.l2 == [15, 5, 256] && t.g == 384 && t.j_res == 512 && t.j == 1280 && t.out == out;
        if !ok {
            return Err(format!("{t:?}"));
        }
        seen.push(format!("L1 {:?} L2 {:?} g {} j_res {} j {} out {}", t.l1, t.l2, t.g, t.j_res, t.j, t.out));
    }
    Ok(seen.join("; "))
}

fn classification_harness() -> Outcome {
    let gold: Vec<usize> = (0..50).map(|i| (i * 7 + i / 3) % 5).collect();
    let err = |e: amrq_core::stats::StatsError| e.to_string();
    let perfect_kappa = quadratic_weighted_kappa(&gold, &gold, 5).map_err(err)?;
    let perfect_f1 = macro_f1(&gold, &gold, 5).map_err(err)?;
    let mut counts = [0usize; 5];
    gold.iter().for_each(|&g| counts[g] += 1);
    let majority = (0..5).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap_or(0);
    let majority_kappa = quadratic_weighted_kappa(&vec![majority; gold.len()], &gold, 5).map_err(err)?;
    check(
        perfect_kappa == 1.0 && perfect_f1 == 1.0 && majority_kappa == 0.0,
        format!("perfect kappa {perfect_kappa} macro f1 {perfect_f1}; majority kappa {majority_kappa}"),
    )
}

fn correction_semantics() -> Outcome {
    let parse = |s| parse_penman(s).map_err(|e| e.to_string());
    let pairs = [
        ("(d / dog :mod (b / big))", "(d / dog :mod (s / small))"),
        ("(c / cat)", "(h / house :location (c / city))"),
    ];
    let mut shown = Vec::new();
    for (a, b) in pairs {
        let q = quality_targets(&parse(a)?, &parse(b)?, 4, 0);
        for f in [Family::Negations, Family::Wikification, Family::Srl] {
            let p = q.get(f);
            if [p.precision, p.recall, p.f1] != [1.0; 3] {
                return Err(format!("{} is {p:?} for {a} vs {b}", f.key()));
            }
        }
        shown.push(format!("smatch f1 {:.3}", q.get(Family::Smatch).f1));
    }
    Ok(format!("negations, wikification and srl are 1.0 on both pairs ({})", shown.join(", ")))
}

fn run(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_amrq"))
        .args(args)
        .env_remove("AMRQ_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!("amrq {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Dev Pearson of the Smatch F1 column in an eval.jsonl.
fn smatch_rho(eval_dir: &Path) -> Result<f64, String> {
    let text = fs::read_to_string(eval_dir.join("eval.jsonl")).map_err(|e| e.to_string())?;
    text.lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .find(|v| v["kind"] == "dimension" && v["name"] == "smatch_f1")
        .and_then(|v| v["pearson"].as_f64())
        .ok_or_else(|| "no smatch_f1 correlation".to_owned())
}

/// Trains on `data`, predicts dev and evaluates; returns dev rho and seconds.
fn train_and_score(data: &Path, work: &Path, name: &str, extra: &[&str]) -> Result<(f64, f64), String> {
    let start = Instant::now();
    let ckpt = work.join(format!("{name}.ckpt"));
    let preds = work.join(format!("{name}.tsv"));
    let eval = work.join(format!("{name}-eval"));
    run(&[&["train", "--data", p(data), "--checkpoint", p(&ckpt)], extra].concat())?;
    run(&["predict", "--checkpoint", p(&ckpt), "--data", p(data), "--split", "dev", "--output", p(&preds)])?;
    run(&["evaluate", "--predictions", p(&preds), "--data", p(data), "--split", "dev", "--out-dir", p(&eval)])?;
    Ok((smatch_rho(&eval)?, start.elapsed().as_secs_f64()))
}

struct Learning {
    verdict: Outcome,
    no_dep: Outcome,
}

fn learning_sanity(work: &Path) -> Learning {
    let data = work.join("data");
    let prepared = run(&["prepare", "--synthetic", "250", "--parses", "8", "--max-ops", "6", "--out-dir", p(&data)]);
    if let Err(e) = prepared {
        return Learning { verdict: Err(e.clone()), no_dep: Err(e) };
    }
    let records: usize = ["train.jsonl", "dev.jsonl", "test.jsonl"]
        .iter()
        .map(|f| fs::read_to_string(data.join(f)).map(|t| t.lines().count()).unwrap_or(0))
        .sum();
    let ridge = (|| {
        let preds = work.join("ridge.tsv");
        let eval = work.join("ridge-eval");
        run(&["baseline", "--data", p(&data), "--split", "dev", "--output", p(&preds)])?;
        run(&["evaluate", "--predictions", p(&preds), "--data", p(&data), "--split", "dev", "--out-dir", p(&eval)])?;
        smatch_rho(&eval)
    })();
    let full = train_and_score(&data, work, "full", &[]);
    let verdict = match (&full, &ridge) {
        (Ok((rho, secs)), Ok(ridge)) => check(
            records >= 2000 && *rho >= 0.5 && rho > ridge && *secs < 1800.0,
            format!("{records} records, dev rho {rho:.4} vs ridge {ridge:.4}, {secs:.0}s"),
        ),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    let no_dep = match (train_and_score(&data, work, "no-dep", &["--no-dep"]), &full) {
        (Ok((rho, secs)), Ok((full_rho, _))) => {
            Ok(format!("no-dep dev rho {rho:.4} vs full {full_rho:.4} (gap {:+.4}), {secs:.0}s", full_rho - rho))
        }
        (Ok((rho, secs)), Err(_)) => Ok(format!("no-dep dev rho {rho:.4}, {secs:.0}s, full model failed")),
        (Err(e), _) => Err(e),
    };
    Learning { verdict, no_dep }
}

const SMALL: &[&str] =
    &["--embed-dim", "6", "--conv1-filters", "8", "--conv2-filters", "4", "--hidden", "12", "--epochs", "2", "--batch-size", "16"];

/// Artifacts of one prepare, train, predict, evaluate run.
fn pipeline(dir: &Path, threads: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let t = ["--threads", threads];
    let data = dir.join("data");
    let ckpt = dir.join("m.ckpt");
    let preds = dir.join("pred.tsv");
    let eval = dir.join("eval");
    run(&[&["prepare", "--synthetic", "30", "--parses", "4", "--seed", "5", "--out-dir", p(&data)], &t[..]].concat())?;
    run(&[&["train", "--data", p(&data), "--checkpoint", p(&ckpt), "--seed", "5"], SMALL, &t[..]].concat())?;
    run(&[&["predict", "--checkpoint", p(&ckpt), "--data", p(&data), "--output", p(&preds)], &t[..]].concat())?;
    let shown =
        run(&[&["evaluate", "--predictions", p(&preds), "--data", p(&data), "--out-dir", p(&eval)], &t[..]].concat())?;
    let mut files = vec![("evaluate stdout".to_owned(), shown.into_bytes())];
    let listed = [
        "data/train.jsonl",
        "data/dev.jsonl",
        "data/test.jsonl",
        "data/deps.conllu",
        "data/amr.vocab",
        "data/dep.vocab",
        "m.ckpt",
        "pred.tsv",
        "eval/eval.txt",
        "eval/eval.jsonl",
    ];
    for f in listed {
        files.push((f.to_owned(), fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"))?));
    }
    let report = fs::read_to_string(dir.join("m.ckpt.train.jsonl")).map_err(|e| e.to_string())?;
    let mut stable = String::new();
    for line in report.lines() {
        let mut v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if let Some(o) = v.as_object_mut() {
            o.remove("seconds");
        }
        stable.push_str(&format!("{v}\n"));
    }
    files.push(("train report without seconds".to_owned(), stable.into_bytes()));
    Ok(files)
}

fn determinism(work: &Path) -> Outcome {
    let runs = [("a", "1"), ("b", "1"), ("c", "8")];
    let mut outputs = Vec::new();
    for (name, threads) in runs {
        outputs.push(pipeline(&work.join(name), threads)?);
    }
    let differing: Vec<String> = outputs[1..]
        .iter()
        .zip(&runs[1..])
        .flat_map(|(other, (name, _))| {
            outputs[0].iter().zip(other).filter(|(x, y)| x.1 != y.1).map(move |(x, _)| format!("{name}:{}", x.0))
        })
        .collect();
    check(
        differing.is_empty(),
        format!("{} artifacts compared over two --threads 1 runs and one --threads 8 run, differing {differing:?}", outputs[0].len()),
    )
}

fn main() {
    let work = tempfile::tempdir().expect("temporary directory");
    let mut failed = 0;
    let mut report = |n: usize, what: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {n} ({what}): {detail}");
    };
    report(1, "smatch oracle", smatch_oracle());
    report(2, "metric invariance", metric_invariance());
    report(3, "gradient suite", gradient_suite());
    report(4, "shape contract", shape_contract());
    let learning = learning_sanity(work.path());
    report(5, "learning sanity", learning.verdict);
    report(6, "classification harness", classification_harness());
    report(7, "score correction", correction_semantics());
    report(8, "determinism", determinism(work.path()));
    report(9, "no-dep ablation", learning.no_dep);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
