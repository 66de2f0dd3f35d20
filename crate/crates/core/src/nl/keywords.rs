use serde::{Deserialize, Serialize};

use crate::graph::{fold_case, Graph};

/// Keys are kept in the surface form used in the question; matching folds case.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub name_keys: Vec<String>,
    pub project_keys: Vec<String>,
}

impl KeywordSet {
    pub fn is_empty(&self) -> bool {
        self.name_keys.is_empty() && self.project_keys.is_empty()
    }
}

/// Words that never become keys on their own, nor start or end a key.
pub const STOPLIST: &[&str] = &[
    "t3", "rule", "rules", "about", "a", "all", "an", "and", "any", "are", "as", "at", "be", "by", "can", "do",
    "does", "find", "for", "from", "get", "give", "how", "i", "if", "in", "is", "it", "list", "me", "my", "of",
    "on", "or", "please", "recommend", "show", "tell", "that", "the", "there", "this", "to", "what", "which",
    "with",
];

const MAX_NGRAM: usize = 3;
const MIN_DIGIT_RUN: usize = 3;

fn is_stopword(token: &str) -> bool {
    let folded = fold_case(token);
    STOPLIST.contains(&folded.as_str())
}

/// Lexicon of names and projects, lower-cased for matching.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    names: Vec<String>,
    projects: Vec<String>,
}

impl Gazetteer {
    pub fn new<'a>(names: impl IntoIterator<Item = &'a str>, projects: impl IntoIterator<Item = &'a str>) -> Self {
        let fold = |it: &mut dyn Iterator<Item = &'a str>| {
            let mut v: Vec<String> = it.filter(|s| !s.trim().is_empty()).map(fold_case).collect();
            v.sort();
            v.dedup();
            v
        };
        Self {
            names: fold(&mut names.into_iter()),
            projects: fold(&mut projects.into_iter()),
        }
    }

    pub fn from_graph(graph: &Graph) -> Self {
        let (names, projects) = graph.gazetteer_entries();
        Self::new(names, projects)
    }

    fn in_projects(&self, folded: &str) -> bool {
        self.projects.iter().any(|p| p.contains(folded))
    }

    fn in_names(&self, folded: &str) -> bool {
        self.names.iter().any(|n| n.contains(folded))
    }
}

const EDGE_PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', '(', ')', '[', ']', '{', '}', '<', '>', '`'];

/// Whitespace tokens with surrounding punctuation removed.
pub fn tokenize_question(question: &str) -> Vec<&str> {
    question
        .split_whitespace()
        .map(|t| t.trim_matches(EDGE_PUNCTUATION))
        .filter(|t| !t.is_empty())
        .collect()
}

fn digit_runs(token: &str) -> impl Iterator<Item = &str> {
    token
        .split(|c: char| !c.is_ascii_digit())
        .filter(|run| run.len() >= MIN_DIGIT_RUN)
}

/// Greedy left-to-right matching of the longest n-gram (n up to 3) that
/// occurs inside a gazetteer entry. Tokens left unmatched still contribute
/// runs of three or more digits as name keys.
pub fn extract_keywords(question: &str, gazetteer: &Gazetteer) -> KeywordSet {
    let tokens = tokenize_question(question);
    let mut out = KeywordSet::default();
    let mut seen: Vec<String> = Vec::new();
    let mut push = |list: &mut Vec<String>, key: &str| {
        let folded = fold_case(key);
        if !seen.contains(&folded) {
            seen.push(folded);
            list.push(key.to_string());
        }
    };

    let mut i = 0;
    while i < tokens.len() {
        let mut consumed = 0;
        for n in (1..=MAX_NGRAM.min(tokens.len() - i)).rev() {
            let gram = &tokens[i..i + n];
            if is_stopword(gram[0]) || is_stopword(gram[n - 1]) {
                continue;
            }
            let phrase = gram.join(" ");
            let folded = fold_case(&phrase);
            if gazetteer.in_projects(&folded) {
                push(&mut out.project_keys, &phrase);
            } else if gazetteer.in_names(&folded) {
                push(&mut out.name_keys, &phrase);
            } else {
                continue;
            }
            consumed = n;
            break;
        }
        if consumed == 0 {
            if !is_stopword(tokens[i]) {
                for run in digit_runs(tokens[i]) {
                    push(&mut out.name_keys, run);
                }
            }
            consumed = 1;
        }
        i += consumed;
    }
    out
}
