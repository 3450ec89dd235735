use amrq_core::dataset::{
    corrupt, debias_surface, generate_targets, resplit_by_sentence, synthetic_corpus, synthetic_gold, CorruptionPool,
    SplitSpec, SynthOptions,
};
use amrq_core::exec::Sequential;
use amrq_core::metrics::{smatch, Family};
use amrq_core::penman::{extract_triples, serialize_penman};
use amrq_core::seeded_rng;
use rand::Rng;
use std::collections::BTreeSet;

/// Average ranks, ties sharing the mean of their positions.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn more_edits_mean_lower_smatch() {
    let gold = synthetic_gold(500, 11);
    let pool = CorruptionPool::from_graphs(gold.iter().map(|g| &g.graph));
    let mut rng = seeded_rng(12);
    let (mut ops, mut f1) = (Vec::new(), Vec::new());
    for (i, item) in gold.iter().enumerate() {
        let k = rng.gen_range(0..=6usize);
        let cand = corrupt(&item.graph, k, &pool, i as u64);
        ops.push(k as f64);
        f1.push(smatch(&cand, &item.graph, 4, 0).scores.f1);
    }
    let rho = spearman(&ops, &f1);
    assert!(rho <= -0.5, "spearman {rho}");
}

#[test]
fn synthetic_corpus_is_seeded_and_complete() {
    let gold = synthetic_gold(30, 4);
    let opts = SynthOptions { parses_per_sentence: 4, max_ops: 5, seed: 9 };
    let a = synthetic_corpus(&gold, &opts);
    let b = synthetic_corpus(&gold, &opts);
    assert_eq!(a, b);
    assert_eq!(a.len(), 120);
    let ids: BTreeSet<&str> = a.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids.len(), a.len());
    assert!(a.iter().all(|r| r.gold.is_some() && r.dep.is_some() && r.targets.is_none()));
    let other = synthetic_corpus(&gold, &SynthOptions { seed: 10, ..opts });
    assert_ne!(a, other);
}

#[test]
fn targets_split_and_debias_pipeline() {
    let gold = synthetic_gold(40, 2);
    let mut records = synthetic_corpus(&gold, &SynthOptions { parses_per_sentence: 3, max_ops: 4, seed: 1 });
    generate_targets(&mut records, 2, 5, &Sequential).unwrap();
    for r in &records {
        let q = r.targets.as_ref().unwrap();
        assert!(q.is_consistent());
        assert!((0.0..=1.0).contains(&q.get(Family::Smatch).f1));
    }
    let before: Vec<_> = records.iter().map(|r| r.targets.clone()).collect();
    let mut shuffled = records.clone();
    debias_surface(&mut shuffled, 3);
    let triples = |g: &amrq_core::penman::AmrGraph| {
        let mut t: Vec<String> = extract_triples(g).iter().map(|t| format!("{t:?}")).collect();
        t.sort();
        t
    };
    assert!(shuffled.iter().zip(&records).all(|(a, b)| triples(&a.candidate) == triples(&b.candidate)));
    assert!(shuffled
        .iter()
        .zip(&records)
        .any(|(a, b)| serialize_penman(&a.candidate, 1) != serialize_penman(&b.candidate, 1)));
    assert_eq!(shuffled.iter().map(|r| r.targets.clone()).collect::<Vec<_>>(), before);

    let split = resplit_by_sentence(records.clone(), &SplitSpec::default()).unwrap();
    let total = split.train.len() + split.dev.len() + split.test.len();
    assert_eq!(total, records.len());
    let sentences = |rs: &[amrq_core::dataset::DatasetRecord]| -> BTreeSet<String> {
        rs.iter().map(|r| r.sentence_id.clone()).collect()
    };
    let (tr, de, te) = (sentences(&split.train), sentences(&split.dev), sentences(&split.test));
    assert!(tr.is_disjoint(&de) && tr.is_disjoint(&te) && de.is_disjoint(&te));
    assert_eq!((tr.len(), de.len(), te.len()), (32, 4, 4));
}
