use core::fmt;

use rand::seq::SliceRandom;

use super::quality::Prf;
use crate::penman::{extract_triples, AmrGraph, Triple, TripleKind};
use crate::prelude::*;
use crate::rng::{mix_seed, seeded_rng};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MetricsError {
    TooManyVariables { candidate: usize, gold: usize },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::TooManyVariables { candidate, gold } => write!(
                f,
                "exhaustive alignment over {candidate} x {gold} variables is too large"
            ),
        }
    }
}

impl core::error::Error for MetricsError {}

pub const DEFAULT_RESTARTS: usize = 4;

/// Lowercases labels and values. Variable names are kept as written.
pub fn normalize_triples(triples: &[Triple]) -> Vec<Triple> {
    triples
        .iter()
        .map(|t| {
            let lower = |s: &str| s.to_lowercase();
            match t.kind {
                TripleKind::Instance => Triple::instance(&t.source, &lower(&t.target)),
                TripleKind::Attribute => Triple::attribute(&t.source, &lower(&t.label), &lower(&t.target)),
                TripleKind::Relation => Triple::relation(&t.source, &lower(&t.label), &t.target),
            }
        })
        .collect()
}

type UnaryKey = (TripleKind, String, String);

/// Triples indexed by variable, the input to alignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TripleSet {
    vars: Vec<String>,
    unary: Vec<(usize, UnaryKey)>,
    relations: Vec<(usize, String, usize)>,
}

impl TripleSet {
    /// Indexes already-normalized triples. Variables are numbered by first
    /// appearance.
    pub fn from_triples(triples: &[Triple]) -> Self {
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut order: Vec<&str> = Vec::new();
        for t in triples {
            for name in [Some(t.source.as_str()), (t.kind == TripleKind::Relation).then_some(t.target.as_str())]
                .into_iter()
                .flatten()
            {
                if !index.contains_key(name) {
                    index.insert(name, order.len());
                    order.push(name);
                }
            }
        }
        let vars: Vec<String> = order.iter().map(|s| (*s).to_owned()).collect();
        let mut unary = Vec::new();
        let mut relations = Vec::new();
        for t in triples {
            let s = index[t.source.as_str()];
            match t.kind {
                TripleKind::Relation => relations.push((s, t.label.clone(), index[t.target.as_str()])),
                kind => unary.push((s, (kind, t.label.clone(), t.target.clone()))),
            }
        }
        TripleSet { vars, unary, relations }
    }

    pub fn from_graph(g: &AmrGraph) -> Self {
        TripleSet::from_triples(&normalize_triples(&extract_triples(g)))
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.unary.len() + self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rewrites unary items and relation labels. Variables are kept, so a
    /// mapping for `self` stays valid for the result.
    pub(crate) fn map_labels(
        &self,
        unary: impl Fn(&UnaryKey) -> UnaryKey,
        relation: impl Fn(&str) -> String,
    ) -> TripleSet {
        TripleSet {
            vars: self.vars.clone(),
            unary: self.unary.iter().map(|(v, k)| (*v, unary(k))).collect(),
            relations: self.relations.iter().map(|(a, l, b)| (*a, relation(l), *b)).collect(),
        }
    }
}

/// A partial injective map from candidate variables to gold variables, by
/// index into each side's [`TripleSet::variables`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alignment {
    pub mapping: Vec<Option<usize>>,
    pub matched: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmatchResult {
    pub scores: Prf,
    pub alignment: Alignment,
}

/// Precomputed match weights for one candidate/gold pair.
struct Aligner {
    n: usize,
    m: usize,
    /// `unary[i * m + j]`: instance and attribute matches when i maps to j.
    unary: Vec<u32>,
    /// Distinct candidate relations `(a, label, b, count)`.
    rel: Vec<(usize, u32, usize, u32)>,
    gold_rel: BTreeMap<(usize, u32, usize), u32>,
    incident: Vec<Vec<usize>>,
}

fn unary_by_var(s: &TripleSet, nv: usize) -> Vec<BTreeMap<&UnaryKey, u32>> {
    let mut v = vec![BTreeMap::new(); nv];
    for (var, key) in &s.unary {
        *v[*var].entry(key).or_insert(0) += 1;
    }
    v
}

fn count_multiset<K: Ord + Clone>(items: impl Iterator<Item = K>) -> BTreeMap<K, u32> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

impl Aligner {
    fn new(c: &TripleSet, g: &TripleSet) -> Self {
        let (n, m) = (c.vars.len(), g.vars.len());
        let cu = unary_by_var(c, n);
        let gu = unary_by_var(g, m);
        let mut unary = vec![0u32; n * m];
        for i in 0..n {
            for j in 0..m {
                unary[i * m + j] = cu[i]
                    .iter()
                    .map(|(k, &cc)| gu[j].get(k).map_or(0, |&gc| cc.min(gc)))
                    .sum();
            }
        }
        let mut labels: BTreeMap<&str, u32> = BTreeMap::new();
        for (_, l, _) in c.relations.iter().chain(g.relations.iter()) {
            let next = labels.len() as u32;
            labels.entry(l.as_str()).or_insert(next);
        }
        let crel = count_multiset(c.relations.iter().map(|(a, l, b)| (*a, labels[l.as_str()], *b)));
        let gold_rel = count_multiset(g.relations.iter().map(|(a, l, b)| (*a, labels[l.as_str()], *b)));
        let rel: Vec<_> = crel.into_iter().map(|((a, l, b), cnt)| (a, l, b, cnt)).collect();
        let mut incident = vec![Vec::new(); n];
        for (r, &(a, _, b, _)) in rel.iter().enumerate() {
            incident[a].push(r);
            if b != a {
                incident[b].push(r);
            }
        }
        Aligner { n, m, unary, rel, gold_rel, incident }
    }

    fn rel_score(&self, r: usize, map: &[Option<usize>]) -> u32 {
        let (a, l, b, cnt) = self.rel[r];
        match (map[a], map[b]) {
            (Some(ga), Some(gb)) => self.gold_rel.get(&(ga, l, gb)).map_or(0, |&gc| gc.min(cnt)),
            _ => 0,
        }
    }

    fn unary_score(&self, i: usize, map: &[Option<usize>]) -> u32 {
        map[i].map_or(0, |j| self.unary[i * self.m + j])
    }

    fn total(&self, map: &[Option<usize>]) -> u32 {
        let u: u32 = (0..self.n).map(|i| self.unary_score(i, map)).sum();
        let r: u32 = (0..self.rel.len()).map(|r| self.rel_score(r, map)).sum();
        u + r
    }

    /// Score restricted to the given variables and the relations touching
    /// them, each relation counted once.
    fn local(&self, vars: &[usize], map: &[Option<usize>]) -> u32 {
        let mut s: u32 = vars.iter().map(|&i| self.unary_score(i, map)).sum();
        for (k, &i) in vars.iter().enumerate() {
            for &r in &self.incident[i] {
                let (a, _, b, _) = self.rel[r];
                // skip relations already counted through an earlier var
                if vars[..k].iter().any(|&p| p == a || p == b) {
                    continue;
                }
                s += self.rel_score(r, map);
            }
        }
        s
    }

    fn greedy_start(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.n];
        let mut used = vec![false; self.m];
        for (i, slot) in map.iter_mut().enumerate() {
            let mut best: Option<(u32, usize)> = None;
            for j in (0..self.m).filter(|&j| !used[j]) {
                let w = self.unary[i * self.m + j];
                if w > 0 && best.is_none_or(|(bw, _)| w > bw) {
                    best = Some((w, j));
                }
            }
            if let Some((_, j)) = best {
                *slot = Some(j);
                used[j] = true;
            }
        }
        map
    }

    fn random_start(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Option<usize>> {
        let mut slots: Vec<Option<usize>> = (0..self.m).map(Some).collect();
        slots.resize(self.m.max(self.n), None);
        slots.shuffle(rng);
        slots.truncate(self.n);
        slots
    }

    /// Best-improvement hill climbing. Candidate moves are scanned in
    /// (candidate, gold) index order and only a strict improvement replaces
    /// the current best, so ties go to the lowest index pair.
    fn climb(&self, map: &mut Vec<Option<usize>>) -> u32 {
        let mut owner = vec![None; self.m];
        for (i, j) in map.iter().enumerate() {
            if let Some(j) = j {
                owner[*j] = Some(i);
            }
        }
        let mut score = self.total(map);
        let ceiling = self.ceiling();
        while score < ceiling {
            let mut best_gain = 0i64;
            let mut best: Option<(usize, usize)> = None;
            for i in 0..self.n {
                for j in 0..self.m {
                    if map[i] == Some(j) {
                        continue;
                    }
                    let gain = match owner[j] {
                        None => self.move_gain(map, i, j),
                        Some(k) => self.swap_gain(map, i, k),
                    };
                    if gain > best_gain {
                        best_gain = gain;
                        best = Some((i, j));
                    }
                }
            }
            let Some((i, j)) = best else { break };
            match owner[j] {
                None => {
                    if let Some(old) = map[i] {
                        owner[old] = None;
                    }
                    map[i] = Some(j);
                    owner[j] = Some(i);
                }
                Some(k) => {
                    let old = map[i];
                    map[i] = Some(j);
                    map[k] = old;
                    owner[j] = Some(i);
                    if let Some(o) = old {
                        owner[o] = Some(k);
                    }
                }
            }
            score = (score as i64 + best_gain) as u32;
        }
        debug_assert_eq!(score, self.total(map));
        score
    }

    fn move_gain(&self, map: &mut [Option<usize>], i: usize, j: usize) -> i64 {
        let before = self.local(&[i], map) as i64;
        let old = map[i];
        map[i] = Some(j);
        let after = self.local(&[i], map) as i64;
        map[i] = old;
        after - before
    }

    fn swap_gain(&self, map: &mut [Option<usize>], i: usize, k: usize) -> i64 {
        let vars = [i, k];
        let before = self.local(&vars, map) as i64;
        map.swap(i, k);
        let after = self.local(&vars, map) as i64;
        map.swap(i, k);
        after - before
    }

    /// No mapping can match more than this many triples.
    fn ceiling(&self) -> u32 {
        let best_unary: u32 = (0..self.n)
            .map(|i| (0..self.m).map(|j| self.unary[i * self.m + j]).max().unwrap_or(0))
            .sum();
        let rel: u32 = self.rel.iter().map(|r| r.3).sum();
        best_unary + rel
    }
}

/// Smatch between two triple sets. `restarts` counts the greedy start plus
/// `restarts - 1` random starts; `warm_start`, when given, is tried as one
/// more start.
pub fn smatch_triples(
    candidate: &TripleSet,
    gold: &TripleSet,
    restarts: usize,
    seed: u64,
    warm_start: Option<&[Option<usize>]>,
) -> SmatchResult {
    let (ct, gt) = (candidate.len(), gold.len());
    if ct == 0 || gt == 0 || candidate.vars.is_empty() || gold.vars.is_empty() {
        return SmatchResult {
            scores: Prf::from_counts(0, ct, gt),
            alignment: Alignment { mapping: vec![None; candidate.vars.len()], matched: 0 },
        };
    }
    let al = Aligner::new(candidate, gold);
    let mut rng = seeded_rng(mix_seed(seed, 0x5a7c));
    let mut best: Option<(u32, Vec<Option<usize>>)> = None;
    let mut starts: Vec<Vec<Option<usize>>> = Vec::new();
    if let Some(w) = warm_start {
        if w.len() == al.n {
            starts.push(w.to_vec());
        }
    }
    for r in 0..restarts.max(1) {
        let start = if r == 0 { al.greedy_start() } else { al.random_start(&mut rng) };
        starts.push(start);
    }
    let ceiling = al.ceiling();
    for mut map in starts {
        let s = al.climb(&mut map);
        if best.as_ref().is_none_or(|(bs, _)| s > *bs) {
            best = Some((s, map));
        }
        if best.as_ref().is_some_and(|(bs, _)| *bs == ceiling) {
            break;
        }
    }
    let (matched, mapping) = best.unwrap_or_default();
    SmatchResult {
        scores: Prf::from_counts(matched as usize, ct, gt),
        alignment: Alignment { mapping, matched: matched as usize },
    }
}

/// Smatch F1 with hill-climbing alignment over variables.
pub fn smatch(candidate: &AmrGraph, gold: &AmrGraph, restarts: usize, seed: u64) -> SmatchResult {
    smatch_triples(&TripleSet::from_graph(candidate), &TripleSet::from_graph(gold), restarts, seed, None)
}

/// Recounts matched triples for an alignment from scratch.
pub fn count_matches(candidate: &TripleSet, gold: &TripleSet, mapping: &[Option<usize>]) -> usize {
    if candidate.is_empty() || gold.is_empty() {
        return 0;
    }
    Aligner::new(candidate, gold).total(mapping) as usize
}

const BRUTE_FORCE_MAX_MIN_VARS: usize = 8;
const BRUTE_FORCE_MAX_MAPPINGS: u64 = 20_000_000;

/// Exact Smatch by enumerating every injective mapping from the smaller
/// variable set into the larger one and counting matched triples directly.
pub fn smatch_bruteforce(candidate: &AmrGraph, gold: &AmrGraph) -> Result<Prf, MetricsError> {
    let ct = normalize_triples(&extract_triples(candidate));
    let gt = normalize_triples(&extract_triples(gold));
    smatch_bruteforce_triples(&ct, &gt)
}

/// As [`smatch_bruteforce`], on normalized triples.
pub fn smatch_bruteforce_triples(candidate: &[Triple], gold: &[Triple]) -> Result<Prf, MetricsError> {
    let vars = |ts: &[Triple]| {
        let mut v: Vec<String> = Vec::new();
        for t in ts {
            let mut push = |s: &String| {
                if !v.contains(s) {
                    v.push(s.clone());
                }
            };
            push(&t.source);
            if t.kind == TripleKind::Relation {
                push(&t.target);
            }
        }
        v
    };
    let cv = vars(candidate);
    let gv = vars(gold);
    let (small, big) = (cv.len().min(gv.len()), cv.len().max(gv.len()));
    let count: u64 = (0..small).map(|k| (big - k) as u64).product();
    if small > BRUTE_FORCE_MAX_MIN_VARS || count > BRUTE_FORCE_MAX_MAPPINGS {
        return Err(MetricsError::TooManyVariables { candidate: cv.len(), gold: gv.len() });
    }
    let gold_bag = count_multiset(gold.iter().cloned());
    let cand_is_small = cv.len() <= gv.len();

    // `assign[k]` = index on the big side for small-side variable k.
    let mut best = 0usize;
    let mut assign: Vec<usize> = Vec::with_capacity(small);
    let mut used = vec![false; big];
    let mut eval = |assign: &[usize]| {
        let mut rename: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, &b) in assign.iter().enumerate() {
            if cand_is_small {
                rename.insert(cv[k].as_str(), gv[b].as_str());
            } else {
                rename.insert(cv[b].as_str(), gv[k].as_str());
            }
        }
        let mut bag: BTreeMap<Triple, u32> = BTreeMap::new();
        for t in candidate {
            let Some(src) = rename.get(t.source.as_str()) else { continue };
            let tgt = if t.kind == TripleKind::Relation {
                match rename.get(t.target.as_str()) {
                    Some(x) => (*x).to_owned(),
                    None => continue,
                }
            } else {
                t.target.clone()
            };
            let key = Triple { kind: t.kind, source: (*src).to_owned(), label: t.label.clone(), target: tgt };
            *bag.entry(key).or_insert(0) += 1;
        }
        let matched: u32 = bag.iter().map(|(k, &c)| gold_bag.get(k).map_or(0, |&g| g.min(c))).sum();
        matched as usize
    };
    fn rec(
        k: usize,
        small: usize,
        big: usize,
        assign: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut usize,
        eval: &mut dyn FnMut(&[usize]) -> usize,
    ) {
        if k == small {
            *best = (*best).max(eval(assign));
            return;
        }
        for b in 0..big {
            if used[b] {
                continue;
            }
            used[b] = true;
            assign.push(b);
            rec(k + 1, small, big, assign, used, best, eval);
            assign.pop();
            used[b] = false;
        }
    }
    rec(0, small, big, &mut assign, &mut used, &mut best, &mut eval);
    Ok(Prf::from_counts(best, candidate.len(), gold.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::{parse_penman, randomize_surface};

    fn g(s: &str) -> AmrGraph {
        parse_penman(s).unwrap()
    }

    #[test]
    fn identity_is_perfect() {
        let a = g("(w / want-01 :arg0 (b / boy) :arg1 (go / go-02 :arg0 b) :polarity -)");
        let r = smatch(&a, &a, 4, 0);
        assert_eq!(r.scores, Prf::PERFECT);
        assert_eq!(r.alignment.matched, TripleSet::from_graph(&a).len());
    }

    #[test]
    fn surface_randomization_is_perfect() {
        let a = g("(w / want-01 :arg0 (b / boy) :arg1 (go / go-02 :arg0 b :arg1 (c / city)) :time (n / now))");
        for s in 0..20 {
            assert_eq!(smatch(&randomize_surface(&a, s), &a, 4, 1).scores, Prf::PERFECT);
        }
    }

    #[test]
    fn renamed_variables_are_perfect() {
        let a = g("(r / run-01 :arg0 (c / cat))");
        let b = g("(x / run-01 :arg0 (y / cat))");
        assert_eq!(smatch(&a, &b, 4, 0).scores, Prf::PERFECT);
    }

    #[test]
    fn hand_counted_pair() {
        // candidate: instance r run-01, instance c cat, TOP, arg0(r,c)       = 4
        // gold:      instance r run-01, instance d dog, TOP, arg0(r,d)       = 4
        // best: r->r, c->d: run-01, TOP, arg0 -> 3 matched
        let r = smatch(&g("(r / run-01 :arg0 (c / cat))"), &g("(r / run-01 :arg0 (d / dog))"), 4, 0);
        assert_eq!(r.alignment.matched, 3);
        assert!((r.scores.f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn deleted_edge_lowers_recall_only() {
        let gold = g("(r / run-01 :arg0 (c / cat) :polarity -)");
        let cand = g("(r / run-01 :arg0 (c / cat))");
        let r = smatch(&cand, &gold, 4, 0);
        assert_eq!(r.scores.precision, 1.0);
        assert!((r.scores.recall - 4.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn swapped_roles_lose_one_triple() {
        let gold = g("(s / see-01 :arg0 (b / boy) :arg1 (g / girl))");
        let cand = g("(s / see-01 :arg1 (b / boy) :arg0 (g / girl))");
        let r = smatch(&cand, &gold, 4, 0);
        // 3 instances + TOP match; both relations fail under any mapping that
        // keeps concepts aligned, and swapping b/g loses two instances.
        assert_eq!(r.alignment.matched, 4);
    }

    #[test]
    fn disjoint_concepts_score_zero() {
        let a = g("(a / apple)");
        let b = g("(b / banana)");
        assert_eq!(smatch(&a, &b, 4, 0).scores, Prf::default());
        assert_eq!(smatch_bruteforce(&a, &b).unwrap(), Prf::default());
    }

    #[test]
    fn bruteforce_identity_and_cross_check() {
        let a = g("(b / baby)");
        assert_eq!(smatch_bruteforce(&a, &a).unwrap(), Prf::PERFECT);
        let c = g("(s / see-01 :arg0 (b / boy) :arg1 (g / girl :mod (t / tall)))");
        let d = g("(s / see-01 :arg0 (g / girl) :arg1 (b / boy))");
        let exact = smatch_bruteforce(&c, &d).unwrap();
        let hill = smatch(&c, &d, 4, 3).scores;
        assert!((exact.f1 - hill.f1).abs() < 1e-12);
    }

    #[test]
    fn bruteforce_guard() {
        let mut s = String::from("(a0 / x");
        for i in 1..10 {
            s.push_str(&format!(" :op{i} (a{i} / x)"));
        }
        s.push(')');
        let big = g(&s);
        assert!(matches!(smatch_bruteforce(&big, &big), Err(MetricsError::TooManyVariables { .. })));
    }

    #[test]
    fn alignment_is_injective_and_recounts() {
        let a = g("(a / and :op1 (x / cat) :op2 (y / cat) :op3 (z / dog :mod y))");
        let b = g("(a / and :op1 (p / cat) :op2 (q / dog :mod p) :op3 (r / cat))");
        let (ta, tb) = (TripleSet::from_graph(&a), TripleSet::from_graph(&b));
        let r = smatch_triples(&ta, &tb, 4, 9, None);
        let targets: Vec<usize> = r.alignment.mapping.iter().flatten().copied().collect();
        let unique: BTreeSet<usize> = targets.iter().copied().collect();
        assert_eq!(unique.len(), targets.len());
        assert_eq!(count_matches(&ta, &tb, &r.alignment.mapping), r.alignment.matched);
        // the graphs differ in which :opN carries the modified cat: 6 of 9 triples
        assert_eq!(r.alignment.matched, 6);
        assert_eq!(r.scores, smatch_bruteforce(&a, &b).unwrap());
    }

    #[test]
    fn empty_candidate() {
        let empty = TripleSet::default();
        let b = TripleSet::from_graph(&g("(b / baby)"));
        let r = smatch_triples(&empty, &b, 4, 0, None);
        assert_eq!(r.scores, Prf::default());
        assert!(r.alignment.mapping.is_empty());
    }

    #[test]
    fn case_is_ignored() {
        assert_eq!(smatch(&g("(b / Baby :ARG0 (c / Cat))"), &g("(b / baby :arg0 (c / cat))"), 4, 0).scores, Prf::PERFECT);
    }
}
