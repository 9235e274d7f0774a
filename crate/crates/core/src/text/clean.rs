use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use regex::Regex;

static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").unwrap());
static RETWEET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\s*rt\s+@\w+").unwrap());
static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'#'
}

/// Blanks every "nan" that will stand as its own token once symbols become
/// spaces. Matching on the final token boundaries, not on whitespace, is what
/// keeps stage 1 idempotent for inputs like "nan.".
fn drop_nan_tokens(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < bytes.len() {
        if !is_word_byte(bytes[i]) {
            out.push(bytes[i] as char);
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && is_word_byte(bytes[i]) {
            i += 1;
        }
        let word = &text[start..i];
        if word.eq_ignore_ascii_case("nan") {
            out.push(' ');
        } else {
            out.push_str(word);
        }
    }
    out
}

/// First cleaning pass over raw tweet text: URLs, a leading retweet header,
/// @mentions, non-ASCII characters and "nan" tokens are removed, remaining
/// symbols other than '#' become spaces, whitespace is collapsed, and the
/// result is trimmed and lowercased.
pub fn clean_stage1(text: &str) -> String {
    let s = URL.replace_all(text, " ");
    let s = RETWEET.replace(&s, " ");
    let s = MENTION.replace_all(&s, " ");
    let ascii: String = s.chars().filter(char::is_ascii).collect();
    let s = drop_nan_tokens(&ascii);
    let spaced: String = s
        .chars()
        .map(|c| {
            if is_word_byte(c as u8) || c.is_ascii_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect();
    spaced
        .split_ascii_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_ascii_lowercase()
}

/// Reads a one-entry-per-line list. Blank lines and lines starting with '#'
/// are skipped; entries are trimmed and lowercased.
pub fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// Number of vowel-consonant sequences, as used by the Porter conditions.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let vowel = !is_consonant(w, i);
        if prev_vowel && !vowel {
            m += 1;
        }
        prev_vowel = vowel;
    }
    m
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_consonant(w, i))
}

fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

/// Rule-based lemmatizer: an exception table for irregular forms, then
/// regular noun plurals and -ed/-ing verb inflections.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

impl Lemmatizer {
    pub fn new(exceptions: HashMap<String, String>) -> Self {
        Lemmatizer { exceptions }
    }

    /// Parses "form lemma" lines; '#' comments and blank lines are ignored.
    pub fn parse_exceptions(text: &str) -> crate::Result<HashMap<String, String>> {
        let mut table = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(crate::Error::parse(
                    n + 1,
                    "expected an inflected form and its lemma",
                ));
            }
            table.insert(fields[0].to_lowercase(), fields[1].to_lowercase());
        }
        Ok(table)
    }

    pub fn add_exceptions(&mut self, table: HashMap<String, String>) {
        self.exceptions.extend(table);
    }

    pub fn lemma(&self, word: &str) -> String {
        if let Some(l) = self.exceptions.get(word) {
            return l.clone();
        }
        if word.len() <= 3 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
            return word.to_string();
        }
        if let Some(stem) = word.strip_suffix("ies") {
            if word.len() > 4 {
                return format!("{stem}y");
            }
            return word.to_string();
        }
        for sibilant in ["sses", "xes", "zes", "ches", "shes"] {
            if word.ends_with(sibilant) {
                return word[..word.len() - 2].to_string();
            }
        }
        if word.ends_with('s') && !["ss", "us", "is", "ous"].iter().any(|e| word.ends_with(e)) {
            return word[..word.len() - 1].to_string();
        }
        let stem = word
            .strip_suffix("ing")
            .or_else(|| word.strip_suffix("ed").filter(|_| !word.ends_with("eed")));
        match stem {
            Some(stem) if stem.len() >= 3 && has_vowel(stem.as_bytes()) => restore_verb_stem(stem),
            _ => word.to_string(),
        }
    }
}

/// Undoes spelling changes made when -ed/-ing was attached:
/// "stopp" → "stop", "creat" → "create", "hop" → "hope".
fn restore_verb_stem(stem: &str) -> String {
    let w = stem.as_bytes();
    let n = w.len();
    if w[n - 1] == w[n - 2] && is_consonant(w, n - 1) && !matches!(w[n - 1], b'l' | b's' | b'z') {
        return stem[..n - 1].to_string();
    }
    if stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz") {
        return format!("{stem}e");
    }
    if measure(w) == 1 && ends_cvc(w) {
        return format!("{stem}e");
    }
    stem.to_string()
}

/// Second cleaning pass over stage-1 tokens: stop words, hashtag tokens and
/// punctuation are removed, then each token is lemmatized and Porter-stemmed.
pub fn clean_stage2<S: AsRef<str>>(
    tokens: &[S],
    stopwords: &HashSet<String>,
    lemmatizer: &Lemmatizer,
) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !stopwords.contains(*t))
        .filter(|t| !t.starts_with('#'))
        .map(|t| {
            t.chars()
                .filter(char::is_ascii_alphanumeric)
                .collect::<String>()
                .to_ascii_lowercase()
        })
        .filter(|t| !t.is_empty())
        .map(|t| porter_stemmer::stem(&lemmatizer.lemma(&t)))
        .filter(|t| !t.is_empty())
        .collect()
}
