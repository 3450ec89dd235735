//! The fine-grained metric families.
//!
//! Alignment-based families (Smatch, Unlabeled, NoWSD, Reentrancies, SRL)
//! run the hill-climber on a transformed triple set. The remaining families
//! compare bags of extracted items without alignment.

use super::quality::{Family, Prf, QualityVector};
use super::smatch::{normalize_triples, smatch_triples, TripleSet};
use crate::penman::{extract_triples, AmrGraph, Triple, TripleKind, TOP};
use crate::prelude::*;
use crate::rng::mix_seed;

/// Label that replaces every edge label for the Unlabeled family.
const UNLABELED: &str = "label";

/// True when `concept` ends in a PropBank sense, `-` followed by two or more
/// digits, after a non-empty stem.
pub fn is_frame(concept: &str) -> bool {
    strip_sense_opt(concept).is_some()
}

fn strip_sense_opt(concept: &str) -> Option<&str> {
    let (stem, sense) = concept.rsplit_once('-')?;
    (!stem.is_empty() && sense.len() >= 2 && sense.bytes().all(|b| b.is_ascii_digit())).then_some(stem)
}

/// Removes a trailing sense suffix; other concepts pass through.
pub fn strip_sense(concept: &str) -> &str {
    strip_sense_opt(concept).unwrap_or(concept)
}

fn is_srl_label(label: &str) -> bool {
    label
        .strip_prefix("arg")
        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

/// Per-graph presence of the features the score correction looks at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FeatureFlags {
    pub present: [bool; 12],
}

impl FeatureFlags {
    pub fn has(&self, f: Family) -> bool {
        self.present[f.index()]
    }
}

/// Normalized triples of one graph plus the lookups the families need.
struct Analysed {
    triples: Vec<Triple>,
    set: TripleSet,
    concept: BTreeMap<String, String>,
}

impl Analysed {
    fn new(g: &AmrGraph) -> Self {
        let triples = normalize_triples(&extract_triples(g));
        let set = TripleSet::from_triples(&triples);
        let concept = triples
            .iter()
            .filter(|t| t.kind == TripleKind::Instance)
            .map(|t| (t.source.clone(), t.target.clone()))
            .collect();
        Analysed { triples, set, concept }
    }

    fn concept_of(&self, var: &str) -> String {
        self.concept.get(var).cloned().unwrap_or_default()
    }

    fn concepts(&self) -> impl Iterator<Item = &str> + '_ {
        self.triples.iter().filter(|t| t.kind == TripleKind::Instance).map(|t| t.target.as_str())
    }

    fn attributes<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.triples.iter().filter(move |t| t.kind == TripleKind::Attribute && t.label == label)
    }

    /// Variables that are the target of two or more relations.
    fn reentrant_vars(&self) -> BTreeSet<&str> {
        let mut incoming: BTreeMap<&str, usize> = BTreeMap::new();
        for t in self.triples.iter().filter(|t| t.kind == TripleKind::Relation) {
            *incoming.entry(t.target.as_str()).or_insert(0) += 1;
        }
        incoming.into_iter().filter(|(_, c)| *c >= 2).map(|(v, _)| v).collect()
    }

    /// Relation triples selected by `keep`, plus instance triples of every
    /// variable they touch.
    fn relation_subgraph(&self, keep: impl Fn(&Triple) -> bool) -> Vec<Triple> {
        let rels: Vec<&Triple> =
            self.triples.iter().filter(|t| t.kind == TripleKind::Relation && keep(t)).collect();
        let mut vars = BTreeSet::new();
        for t in &rels {
            vars.insert(t.source.as_str());
            vars.insert(t.target.as_str());
        }
        let mut out: Vec<Triple> = self
            .triples
            .iter()
            .filter(|t| t.kind == TripleKind::Instance && vars.contains(t.source.as_str()))
            .cloned()
            .collect();
        out.extend(rels.into_iter().cloned());
        out
    }

    fn reentrancy_triples(&self) -> Vec<Triple> {
        let re = self.reentrant_vars();
        self.relation_subgraph(|t| re.contains(t.target.as_str()))
    }

    fn srl_triples(&self) -> Vec<Triple> {
        self.relation_subgraph(|t| is_srl_label(&t.label))
    }

    fn named_entities(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in self.triples.iter().filter(|t| t.kind == TripleKind::Relation && t.label == "name") {
            if self.concept_of(&t.target) != "name" {
                continue;
            }
            let mut ops: Vec<(usize, &str)> = self
                .triples
                .iter()
                .filter(|a| a.kind == TripleKind::Attribute && a.source == t.target)
                .filter_map(|a| Some((a.label.strip_prefix("op")?.parse().ok()?, a.target.as_str())))
                .collect();
            ops.sort();
            let name: Vec<&str> = ops.into_iter().map(|(_, v)| v).collect();
            out.push(format!("{}\u{1f}{}", self.concept_of(&t.source), name.join(" ")));
        }
        out
    }

    fn negations(&self) -> Vec<String> {
        self.attributes("polarity").filter(|t| t.target == "-").map(|t| self.concept_of(&t.source)).collect()
    }

    fn wikis(&self) -> Vec<String> {
        self.attributes("wiki").map(|t| format!("{}\u{1f}{}", self.concept_of(&t.source), t.target)).collect()
    }

    fn frames(&self, keep_sense: bool) -> Vec<String> {
        self.concepts()
            .filter(|c| is_frame(c))
            .map(|c| if keep_sense { c.to_owned() } else { strip_sense(c).to_owned() })
            .collect()
    }

    /// Triples with every variable replaced by its concept.
    fn variable_free(&self) -> Vec<String> {
        self.triples
            .iter()
            .map(|t| match t.kind {
                TripleKind::Instance => format!("i\u{1f}{}", t.target),
                TripleKind::Attribute => {
                    format!("a\u{1f}{}\u{1f}{}\u{1f}{}", self.concept_of(&t.source), t.label, t.target)
                }
                TripleKind::Relation => format!(
                    "r\u{1f}{}\u{1f}{}\u{1f}{}",
                    self.concept_of(&t.source),
                    t.label,
                    self.concept_of(&t.target)
                ),
            })
            .collect()
    }

    fn flags(&self) -> FeatureFlags {
        let mut f = FeatureFlags::default();
        let mut set = |fam: Family, v: bool| f.present[fam.index()] = v;
        set(Family::NamedEnt, self.triples.iter().any(|t| t.kind == TripleKind::Relation && t.label == "name"));
        set(Family::Negations, self.attributes("polarity").next().is_some());
        set(Family::Wikification, self.attributes("wiki").next().is_some());
        let has_frame = self.concepts().any(is_frame);
        set(Family::Frames, has_frame);
        set(Family::NsFrames, has_frame);
        set(Family::Reentrancies, !self.reentrant_vars().is_empty());
        set(
            Family::Srl,
            self.triples.iter().any(|t| t.kind == TripleKind::Relation && is_srl_label(&t.label)),
        );
        f
    }
}

/// Multiset F1 between two bags of items.
pub fn bag_f1<T: Ord>(candidate: &[T], gold: &[T]) -> Prf {
    let mut bag: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    for c in candidate {
        bag.entry(c).or_default().0 += 1;
    }
    for g in gold {
        bag.entry(g).or_default().1 += 1;
    }
    let matched = bag.values().map(|(c, g)| (*c).min(*g)).sum();
    Prf::from_counts(matched, candidate.len(), gold.len())
}

/// Feature presence for score correction.
pub fn feature_flags(g: &AmrGraph) -> FeatureFlags {
    Analysed::new(g).flags()
}

/// All twelve families, before score correction.
pub fn fine_grained(candidate: &AmrGraph, gold: &AmrGraph, restarts: usize, seed: u64) -> QualityVector {
    fine_grained_with_flags(candidate, gold, restarts, seed).0
}

/// Scores and the feature flags of both graphs.
pub fn fine_grained_with_flags(
    candidate: &AmrGraph,
    gold: &AmrGraph,
    restarts: usize,
    seed: u64,
) -> (QualityVector, FeatureFlags, FeatureFlags) {
    let c = Analysed::new(candidate);
    let g = Analysed::new(gold);
    let mut q = QualityVector::default();
    let family_seed = |f: Family| mix_seed(seed, f.index() as u64);

    let base = smatch_triples(&c.set, &g.set, restarts, family_seed(Family::Smatch), None);
    q.set(Family::Smatch, base.scores);

    // Relaxed variants keep variable indexing, so the Smatch alignment is a
    // valid extra start and the relaxed score never falls below Smatch.
    let unlabel = |s: &TripleSet| {
        s.map_labels(
            |(kind, label, value)| {
                let label = if *kind == TripleKind::Attribute && !label.eq_ignore_ascii_case(TOP) { UNLABELED } else { label.as_str() };
                (*kind, label.to_owned(), value.clone())
            },
            |_| UNLABELED.to_owned(),
        )
    };
    let r = smatch_triples(
        &unlabel(&c.set),
        &unlabel(&g.set),
        restarts,
        family_seed(Family::Unlabeled),
        Some(&base.alignment.mapping),
    );
    q.set(Family::Unlabeled, r.scores);

    let no_wsd = |s: &TripleSet| {
        s.map_labels(
            |(kind, label, value)| {
                let value = if *kind == TripleKind::Instance || label.eq_ignore_ascii_case(TOP) { strip_sense(value) } else { value };
                (*kind, label.clone(), value.to_owned())
            },
            str::to_owned,
        )
    };
    let r = smatch_triples(
        &no_wsd(&c.set),
        &no_wsd(&g.set),
        restarts,
        family_seed(Family::NoWsd),
        Some(&base.alignment.mapping),
    );
    q.set(Family::NoWsd, r.scores);

    let cc: Vec<&str> = c.concepts().collect();
    let gc: Vec<&str> = g.concepts().collect();
    q.set(Family::Concepts, bag_f1(&cc, &gc));
    q.set(Family::NamedEnt, bag_f1(&c.named_entities(), &g.named_entities()));
    q.set(Family::Negations, bag_f1(&c.negations(), &g.negations()));
    q.set(Family::Wikification, bag_f1(&c.wikis(), &g.wikis()));
    q.set(Family::IgnoreVars, bag_f1(&c.variable_free(), &g.variable_free()));
    q.set(Family::Frames, bag_f1(&c.frames(true), &g.frames(true)));
    q.set(Family::NsFrames, bag_f1(&c.frames(false), &g.frames(false)));

    let sub = |ct: Vec<Triple>, gt: Vec<Triple>, f: Family| {
        smatch_triples(&TripleSet::from_triples(&ct), &TripleSet::from_triples(&gt), restarts, family_seed(f), None)
            .scores
    };
    q.set(Family::Reentrancies, sub(c.reentrancy_triples(), g.reentrancy_triples(), Family::Reentrancies));
    q.set(Family::Srl, sub(c.srl_triples(), g.srl_triples(), Family::Srl));

    (q, c.flags(), g.flags())
}

/// Sets a family to (1, 1, 1) when neither graph has its feature. Families
/// that every graph exercises are left alone.
pub fn score_correction(q: &QualityVector, candidate: &FeatureFlags, gold: &FeatureFlags) -> QualityVector {
    let mut out = *q;
    for f in Family::ALL {
        if f.is_correctable() && !candidate.has(f) && !gold.has(f) {
            out.set(f, Prf::PERFECT);
        }
    }
    out
}

/// Corrected fine-grained scores; the training target for one pair.
pub fn quality_targets(candidate: &AmrGraph, gold: &AmrGraph, restarts: usize, seed: u64) -> QualityVector {
    let (q, cf, gf) = fine_grained_with_flags(candidate, gold, restarts, seed);
    score_correction(&q, &cf, &gf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::parse_penman;

    fn g(s: &str) -> AmrGraph {
        parse_penman(s).unwrap()
    }

    #[test]
    fn frame_pattern() {
        assert!(is_frame("run-01"));
        assert!(is_frame("have-org-role-91"));
        assert!(!is_frame("run-1"));
        assert!(!is_frame("cat"));
        assert!(!is_frame("-01"));
        assert_eq!(strip_sense("have-org-role-91"), "have-org-role");
        assert_eq!(strip_sense("new-york"), "new-york");
    }

    #[test]
    fn identical_graphs_are_perfect_after_correction() {
        let a = g(r#"(w / want-01 :arg0 (p / person :name (n / name :op1 "Ann") :wiki "Ann") :arg1 (g / go-02 :arg0 p :polarity -))"#);
        assert_eq!(quality_targets(&a, &a, 4, 0), QualityVector::perfect());
        let b = g("(b / baby)");
        assert_eq!(quality_targets(&b, &b, 4, 0), QualityVector::perfect());
    }

    #[test]
    fn missing_negation_zeroes_recall() {
        let gold = g("(r / run-01 :arg0 (c / cat) :polarity -)");
        let cand = g("(r / run-01 :arg0 (c / cat))");
        let q = quality_targets(&cand, &gold, 4, 0);
        assert_eq!(q.get(Family::Negations).recall, 0.0);
        assert_eq!(q.get(Family::Negations).f1, 0.0);
    }

    #[test]
    fn edge_label_corruption() {
        let gold = g("(s / sleep-01 :arg0 (c / cat))");
        let cand = g("(s / sleep-01 :arg1 (c / cat))");
        let q = fine_grained(&cand, &gold, 4, 0);
        assert_eq!(q.get(Family::Unlabeled).f1, 1.0);
        assert!(q.get(Family::Smatch).f1 < 1.0);
        // SRL keeps sleep-01/cat instances but the role differs: 2 of 3
        assert!((q.get(Family::Srl).f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_wsd_ignores_senses() {
        let gold = g("(r / run-01 :arg0 (c / cat))");
        let cand = g("(r / run-02 :arg0 (c / cat))");
        let q = fine_grained(&cand, &gold, 4, 0);
        assert_eq!(q.get(Family::NoWsd).f1, 1.0);
        assert_eq!(q.get(Family::NsFrames).f1, 1.0);
        assert_eq!(q.get(Family::Frames).f1, 0.0);
        assert!(q.get(Family::Smatch).f1 < 1.0);
    }

    #[test]
    fn named_entities_pair_type_and_name() {
        let gold = g(r#"(p / person :name (n / name :op1 "Barack" :op2 "Obama"))"#);
        let cand = g(r#"(p / city :name (n / name :op1 "Barack" :op2 "Obama"))"#);
        let q = fine_grained(&cand, &gold, 4, 0);
        assert_eq!(q.get(Family::NamedEnt).f1, 0.0);
        assert_eq!(fine_grained(&gold, &gold, 4, 0).get(Family::NamedEnt).f1, 1.0);
    }

    #[test]
    fn wikification_and_ignore_vars() {
        let gold = g(r#"(c / city :wiki "Paris" :name (n / name :op1 "Paris"))"#);
        let cand = g(r#"(c / city :wiki "Lyon" :name (n / name :op1 "Paris"))"#);
        let q = fine_grained(&cand, &gold, 4, 0);
        assert_eq!(q.get(Family::Wikification).f1, 0.0);
        // variable-free items: i city, i name, a TOP, a wiki, r name, a op1 -> 5 of 6 shared
        assert!((q.get(Family::IgnoreVars).f1 - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn reentrancy_family() {
        let gold = g("(x / scratch-01 :arg0 (y / cat) :arg1 y)");
        let cand = g("(x / scratch-01 :arg0 (y / cat) :arg1 (z / cat))");
        let (q, cf, gf) = fine_grained_with_flags(&cand, &gold, 4, 0);
        assert!(gf.has(Family::Reentrancies));
        assert!(!cf.has(Family::Reentrancies));
        assert_eq!(q.get(Family::Reentrancies).recall, 0.0);
        assert_eq!(fine_grained(&gold, &gold, 4, 0).get(Family::Reentrancies).f1, 1.0);
    }

    #[test]
    fn correction_rules() {
        let gold = g("(c / cat)");
        let cand = g("(d / dog)");
        let q = quality_targets(&cand, &gold, 4, 0);
        for f in [Family::Negations, Family::Wikification, Family::Srl, Family::Reentrancies, Family::NamedEnt] {
            assert_eq!(q.get(f), Prf::PERFECT, "{f}");
        }
        assert_eq!(q.get(Family::Concepts).f1, 0.0);
        assert_eq!(q.get(Family::Smatch).f1, 0.0);

        let gold = g("(r / run-01 :polarity -)");
        let cand = g("(r / run-01)");
        let (raw, cf, gf) = fine_grained_with_flags(&cand, &gold, 4, 0);
        assert_eq!(score_correction(&raw, &cf, &gf).get(Family::Negations), raw.get(Family::Negations));
        let (raw, cf, gf) = fine_grained_with_flags(&gold, &cand, 4, 0);
        assert_eq!(score_correction(&raw, &cf, &gf).get(Family::Negations), raw.get(Family::Negations));
    }

    #[test]
    fn bag_f1_counts_multiplicity() {
        let p = bag_f1(&["a", "a", "b"], &["a", "b", "b"]);
        assert!((p.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.recall - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(bag_f1::<&str>(&[], &[]), Prf::default());
    }
}
