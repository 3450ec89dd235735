//! Dependency trees from CoNLL-U, rendered into the same indented line form
//! as simplified AMRs.

use core::fmt;

use crate::penman::{LineTokens, SimplifiedAmr};
use crate::prelude::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepToken {
    pub form: String,
    pub lemma: String,
    pub deprel: String,
    /// 0-based index of the head token, `None` for the root.
    pub head: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepTree {
    pub sentence_id: String,
    pub tokens: Vec<DepToken>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DepError {
    MalformedLine { line: usize, reason: String },
    CyclicHeads { sentence: String },
    MultipleRoots { sentence: String },
}

impl fmt::Display for DepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepError::MalformedLine { line, reason } => write!(f, "line {line}: {reason}"),
            DepError::CyclicHeads { sentence } => write!(f, "sentence {sentence:?}: heads contain a cycle"),
            DepError::MultipleRoots { sentence } => write!(f, "sentence {sentence:?}: more than one root"),
        }
    }
}

impl core::error::Error for DepError {}

impl DepTree {
    /// Checks the single-root, acyclic, in-range invariants.
    pub fn new(sentence_id: String, tokens: Vec<DepToken>) -> Result<Self, DepError> {
        let t = DepTree { sentence_id, tokens };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<(), DepError> {
        let n = self.tokens.len();
        let roots = self.tokens.iter().filter(|t| t.head.is_none()).count();
        if roots > 1 {
            return Err(DepError::MultipleRoots { sentence: self.sentence_id.clone() });
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if let Some(h) = t.head {
                if h >= n {
                    return Err(DepError::MalformedLine {
                        line: i + 1,
                        reason: format!("head {} out of range", h + 1),
                    });
                }
            }
        }
        // Every token must reach the root within n steps.
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(h) = self.tokens[cur].head {
                cur = h;
                steps += 1;
                if steps > n {
                    return Err(DepError::CyclicHeads { sentence: self.sentence_id.clone() });
                }
            }
        }
        if n > 0 && roots == 0 {
            return Err(DepError::CyclicHeads { sentence: self.sentence_id.clone() });
        }
        Ok(())
    }

    pub fn root(&self) -> Option<usize> {
        self.tokens.iter().position(|t| t.head.is_none())
    }

    /// Dependents of `head` in surface order.
    pub fn children(&self, head: usize) -> impl Iterator<Item = usize> + '_ {
        self.tokens.iter().enumerate().filter(move |(_, t)| t.head == Some(head)).map(|(i, _)| i)
    }

    /// Depth of each token below the root.
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.tokens.len()];
        for (i, slot) in d.iter_mut().enumerate() {
            let mut cur = i;
            while let Some(h) = self.tokens[cur].head {
                *slot += 1;
                cur = h;
            }
        }
        d
    }
}

/// Reads CoNLL-U text. Multiword-token ranges (`3-4`) and empty nodes (`5.1`)
/// are skipped. `# sent_id = ...` sets the sentence id; otherwise sentences
/// are numbered from 1.
pub fn read_conllu(text: &str) -> Result<Vec<DepTree>, DepError> {
    let mut trees = Vec::new();
    let mut tokens: Vec<DepToken> = Vec::new();
    let mut sent_id: Option<String> = None;

    let finish = |tokens: &mut Vec<DepToken>, sent_id: &mut Option<String>, trees: &mut Vec<DepTree>| {
        if tokens.is_empty() {
            *sent_id = None;
            return Ok(());
        }
        let id = sent_id.take().unwrap_or_else(|| format!("{}", trees.len() + 1));
        trees.push(DepTree::new(id, core::mem::take(tokens))?);
        Ok(())
    };

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(&mut tokens, &mut sent_id, &mut trees)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if k.trim() == "sent_id" {
                    sent_id = Some(v.trim().to_owned());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(DepError::MalformedLine {
                line: line_no,
                reason: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| DepError::MalformedLine {
            line: line_no,
            reason: format!("bad token id {:?}", cols[0]),
        })?;
        if id != tokens.len() + 1 {
            return Err(DepError::MalformedLine {
                line: line_no,
                reason: format!("token id {id} out of sequence"),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| DepError::MalformedLine {
            line: line_no,
            reason: format!("bad head {:?}", cols[6]),
        })?;
        tokens.push(DepToken {
            form: cols[1].to_owned(),
            lemma: cols[2].to_owned(),
            deprel: cols[7].to_owned(),
            head: head.checked_sub(1),
        });
    }
    finish(&mut tokens, &mut sent_id, &mut trees)?;
    Ok(trees)
}

/// Writes trees back as CoNLL-U with only the columns this crate reads.
pub fn write_conllu(trees: &[DepTree]) -> String {
    let mut out = String::new();
    for t in trees {
        out.push_str("# sent_id = ");
        out.push_str(&t.sentence_id);
        out.push('\n');
        for (i, tok) in t.tokens.iter().enumerate() {
            let head = tok.head.map_or(0, |h| h + 1);
            out.push_str(&format!(
                "{}\t{}\t{}\t_\t_\t_\t{}\t{}\t_\t_\n",
                i + 1,
                tok.form,
                tok.lemma,
                head,
                tok.deprel
            ));
        }
        out.push('\n');
    }
    out
}

fn lower(s: &str) -> String {
    crate::penman::normalize_token(s)
}

/// Renders the tree top-down: the root form on line 0, then each dependent
/// as `[:deprel, form]` one level below its head, children in surface order.
pub fn render_dep_lines(t: &DepTree) -> SimplifiedAmr {
    let mut lines = Vec::with_capacity(t.tokens.len());
    if let Some(root) = t.root() {
        lines.push(LineTokens { depth: 0, tokens: vec![lower(&t.tokens[root].form)] });
        let mut stack: Vec<(usize, usize)> = t.children(root).map(|c| (c, 1)).collect();
        stack.reverse();
        while let Some((i, depth)) = stack.pop() {
            let tok = &t.tokens[i];
            lines.push(LineTokens { depth, tokens: vec![lower(&format!(":{}", tok.deprel)), lower(&tok.form)] });
            let before = stack.len();
            stack.extend(t.children(i).map(|c| (c, depth + 1)));
            stack[before..].reverse();
        }
    }
    SimplifiedAmr::new(lines)
}

/// The sentence alone: one depth-0 line of lowercased forms.
pub fn render_sentence_only(t: &DepTree) -> SimplifiedAmr {
    if t.tokens.is_empty() {
        return SimplifiedAmr::default();
    }
    SimplifiedAmr::new(vec![LineTokens { depth: 0, tokens: t.tokens.iter().map(|x| lower(&x.form)).collect() }])
}
