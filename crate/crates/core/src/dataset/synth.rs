//! A small templated gold sembank with matching dependency trees, and the
//! corrupted parse corpus built from it.

use rand::seq::SliceRandom;
use rand::Rng;

use super::corrupt::{corrupt, CorruptionPool};
use super::DatasetRecord;
use crate::dep::{DepToken, DepTree};
use crate::penman::{parse_penman, AmrGraph};
use crate::prelude::*;
use crate::rng::{mix_seed, seeded_rng};

/// A gold graph with its sentence and dependency tree.
#[derive(Clone, Debug, PartialEq)]
pub struct GoldItem {
    pub id: String,
    pub sentence: String,
    pub graph: AmrGraph,
    pub dep: DepTree,
}

const AGENTS: [&str; 10] = ["boy", "girl", "teacher", "doctor", "cat", "dog", "farmer", "child", "student", "king"];
const OBJECTS: [&str; 10] = ["book", "apple", "car", "letter", "house", "ball", "song", "door", "bread", "river"];
const ADJECTIVES: [&str; 8] = ["big", "small", "red", "old", "happy", "new", "quiet", "young"];
const MANNERS: [(&str, &str); 4] = [("quick-02", "quickly"), ("slow-05", "slowly"), ("careful-01", "carefully"), ("loud-02", "loudly")];
const NAMES: [(&str, Option<&str>, &str); 8] = [
    ("Anna", Some("Berg"), "Q101"),
    ("Omar", Some("Diaz"), "Q102"),
    ("Lena", None, "Q103"),
    ("Ravi", Some("Rao"), "Q104"),
    ("Mia", None, "Q105"),
    ("Tom", Some("Hale"), "Q106"),
    ("Sara", Some("Lind"), "Q107"),
    ("Ivan", None, "Q108"),
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Frame {
    Intransitive,
    Transitive,
    Ditransitive,
    Control,
}

/// `(frame, lemma, third person singular, valency)`.
const VERBS: [(&str, &str, &str, Frame); 19] = [
    ("sleep-01", "sleep", "sleeps", Frame::Intransitive),
    ("run-02", "run", "runs", Frame::Intransitive),
    ("sing-01", "sing", "sings", Frame::Intransitive),
    ("laugh-01", "laugh", "laughs", Frame::Intransitive),
    ("see-01", "see", "sees", Frame::Transitive),
    ("read-01", "read", "reads", Frame::Transitive),
    ("buy-01", "buy", "buys", Frame::Transitive),
    ("write-01", "write", "writes", Frame::Transitive),
    ("open-01", "open", "opens", Frame::Transitive),
    ("like-01", "like", "likes", Frame::Transitive),
    ("eat-01", "eat", "eats", Frame::Transitive),
    ("find-01", "find", "finds", Frame::Transitive),
    ("carry-01", "carry", "carries", Frame::Transitive),
    ("give-01", "give", "gives", Frame::Ditransitive),
    ("send-01", "send", "sends", Frame::Ditransitive),
    ("show-01", "show", "shows", Frame::Ditransitive),
    ("want-01", "want", "wants", Frame::Control),
    ("try-01", "try", "tries", Frame::Control),
    ("need-01", "need", "needs", Frame::Control),
];

enum Amr {
    Node { var: String, concept: String, edges: Vec<(&'static str, Amr)> },
    Ref(String),
    Str(String),
    Sym(&'static str),
}

impl Amr {
    fn render(&self, out: &mut String) {
        match self {
            Amr::Node { var, concept, edges } => {
                out.push('(');
                out.push_str(var);
                out.push_str(" / ");
                out.push_str(concept);
                for (role, child) in edges {
                    out.push(' ');
                    out.push_str(role);
                    out.push(' ');
                    child.render(out);
                }
                out.push(')');
            }
            Amr::Ref(v) => out.push_str(v),
            Amr::Str(s) => {
                out.push('"');
                out.push_str(s);
                out.push('"');
            }
            Amr::Sym(s) => out.push_str(s),
        }
    }

    fn var(&self) -> &str {
        match self {
            Amr::Node { var, .. } | Amr::Ref(var) => var,
            _ => "",
        }
    }
}

const UNSET: usize = usize::MAX;

struct Builder<'r, R: Rng> {
    rng: &'r mut R,
    tokens: Vec<DepToken>,
    heads: Vec<usize>,
    used: BTreeMap<char, usize>,
}

impl<R: Rng> Builder<'_, R> {
    fn var(&mut self, concept: &str) -> String {
        let c = concept.chars().next().filter(char::is_ascii_alphabetic).unwrap_or('x').to_ascii_lowercase();
        let n = self.used.entry(c).or_insert(0);
        *n += 1;
        if *n == 1 {
            c.to_string()
        } else {
            format!("{c}{n}")
        }
    }

    fn node(&mut self, concept: &str) -> Amr {
        Amr::Node { var: self.var(concept), concept: concept.to_owned(), edges: Vec::new() }
    }

    fn push(&mut self, form: &str, lemma: &str, deprel: &str, head: usize) -> usize {
        self.tokens.push(DepToken { form: form.to_owned(), lemma: lemma.to_owned(), deprel: deprel.to_owned(), head: None });
        self.heads.push(head);
        self.tokens.len() - 1
    }

    fn attach(&mut self, token: usize, head: usize, deprel: &str) {
        self.heads[token] = head;
        self.tokens[token].deprel = deprel.to_owned();
    }

    /// Pushes a noun phrase and returns its graph and head token; the head
    /// is attached by the caller.
    fn noun_phrase(&mut self, agent: bool) -> (Amr, usize) {
        if agent && self.rng.gen_bool(0.3) {
            let &(first, last, wiki) = NAMES.choose(self.rng).expect("non-empty");
            let head = self.push(first, first, "", UNSET);
            let mut name_edges = vec![(":op1", Amr::Str(first.to_owned()))];
            if let Some(last) = last {
                self.push(last, last, "flat", head);
                name_edges.push((":op2", Amr::Str(last.to_owned())));
            }
            let mut person = self.node("person");
            let name = Amr::Node { var: self.var("name"), concept: "name".into(), edges: name_edges };
            if let Amr::Node { edges, .. } = &mut person {
                if self.rng.gen_bool(0.7) {
                    edges.push((":wiki", Amr::Str(wiki.to_owned())));
                }
                edges.push((":name", name));
            }
            return (person, head);
        }
        let noun = *if agent { &AGENTS[..] } else { &OBJECTS[..] }.choose(self.rng).expect("non-empty");
        let det = self.push("the", "the", "det", UNSET);
        let adj = self.rng.gen_bool(0.3).then(|| *ADJECTIVES.choose(self.rng).expect("non-empty"));
        let adj_tok = adj.map(|a| self.push(a, a, "amod", UNSET));
        let head = self.push(noun, noun, "", UNSET);
        self.heads[det] = head;
        let mut amr = self.node(noun);
        if let (Some(a), Some(t)) = (adj, adj_tok) {
            self.heads[t] = head;
            let m = self.node(a);
            if let Amr::Node { edges, .. } = &mut amr {
                edges.push((":mod", m));
            }
        }
        (amr, head)
    }

    /// Pushes a clause. A complement clause shares its subject with the
    /// governing clause and has no surface subject of its own.
    fn clause(&mut self, depth: usize, shared: Option<String>) -> (Amr, usize) {
        let verbs: Vec<_> = VERBS.iter().filter(|v| depth == 0 || v.3 != Frame::Control).collect();
        let &&(frame_id, lemma, third, frame) = verbs.choose(self.rng).expect("non-empty");
        let (subject, subj_tok) = match &shared {
            Some(v) => (Amr::Ref(v.clone()), None),
            None => {
                let (a, t) = self.noun_phrase(true);
                (a, Some(t))
            }
        };
        let negated = depth == 0 && self.rng.gen_bool(0.2);
        let aux = negated.then(|| (self.push("does", "do", "aux", UNSET), self.push("not", "not", "advmod", UNSET)));
        let mark = shared.is_some().then(|| self.push("to", "to", "mark", UNSET));
        let form = if depth == 0 && !negated { third } else { lemma };
        let verb = self.push(form, lemma, "root", UNSET);
        for t in [subj_tok, aux.map(|a| a.0), aux.map(|a| a.1), mark].into_iter().flatten() {
            self.heads[t] = verb;
        }
        if let Some(t) = subj_tok {
            self.attach(t, verb, "nsubj");
        }
        let subject_var = subject.var().to_owned();
        let mut edges = vec![(":ARG0", subject)];
        match frame {
            Frame::Intransitive => {}
            Frame::Transitive => {
                let (obj, t) = self.noun_phrase(false);
                self.attach(t, verb, "obj");
                edges.push((":ARG1", obj));
            }
            Frame::Ditransitive => {
                let (obj, t) = self.noun_phrase(false);
                self.attach(t, verb, "obj");
                edges.push((":ARG1", obj));
                let case = self.push("to", "to", "case", UNSET);
                let (rec, t) = self.noun_phrase(true);
                self.heads[case] = t;
                self.attach(t, verb, "obl");
                edges.push((":ARG2", rec));
            }
            Frame::Control => {
                let (inner, t) = self.clause(depth + 1, Some(subject_var));
                self.attach(t, verb, "xcomp");
                edges.push((":ARG1", inner));
            }
        }
        if self.rng.gen_bool(0.2) {
            let &(concept, adverb) = MANNERS.choose(self.rng).expect("non-empty");
            let t = self.push(adverb, adverb, "advmod", verb);
            let _ = t;
            edges.push((":manner", self.node(concept)));
        }
        if negated {
            edges.push((":polarity", Amr::Sym("-")));
        }
        let var = self.var(frame_id);
        (Amr::Node { var, concept: frame_id.to_owned(), edges }, verb)
    }
}

fn generate_one(id: &str, seed: u64) -> GoldItem {
    let mut rng = seeded_rng(seed);
    let mut b = Builder { rng: &mut rng, tokens: Vec::new(), heads: Vec::new(), used: BTreeMap::new() };
    let (amr, root) = b.clause(0, None);
    b.push(".", ".", "punct", root);
    let Builder { mut tokens, heads, .. } = b;
    for (t, &h) in tokens.iter_mut().zip(&heads) {
        t.head = (h != UNSET).then_some(h);
    }
    let mut text = String::new();
    amr.render(&mut text);
    let graph = parse_penman(&text).expect("generated PENMAN parses");
    let sentence = tokens.iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" ");
    let dep = DepTree::new(id.to_owned(), tokens).expect("generated trees are well formed");
    GoldItem { id: id.to_owned(), sentence, graph, dep }
}

/// `n` gold items with ids `syn-00000`, `syn-00001`, ...
pub fn synthetic_gold(n: usize, seed: u64) -> Vec<GoldItem> {
    (0..n).map(|i| generate_one(&format!("syn-{i:05}"), mix_seed(seed, i as u64))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthOptions {
    pub parses_per_sentence: usize,
    /// Each parse receives a uniform number of edits in `0..=max_ops`.
    pub max_ops: usize,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { parses_per_sentence: 8, max_ops: 6, seed: 0 }
    }
}

/// Corrupted parses of every gold item, with the gold graph and tree
/// attached and no targets yet. Record ids are `<sentence id>.<k>`.
pub fn synthetic_corpus(gold: &[GoldItem], opts: &SynthOptions) -> Vec<DatasetRecord> {
    let pool = CorruptionPool::from_graphs(gold.iter().map(|g| &g.graph));
    let mut rng = seeded_rng(opts.seed);
    let mut out = Vec::with_capacity(gold.len() * opts.parses_per_sentence);
    for item in gold {
        for k in 0..opts.parses_per_sentence {
            let ops = rng.gen_range(0..=opts.max_ops);
            let seed = rng.gen::<u64>();
            out.push(DatasetRecord {
                id: format!("{}.{k}", item.id),
                sentence_id: item.id.clone(),
                sentence: item.sentence.clone(),
                candidate: corrupt(&item.graph, ops, &pool, seed),
                gold: Some(item.graph.clone()),
                dep: Some(item.dep.clone()),
                targets: None,
            });
        }
    }
    out
}
