//! Text normalization and word-boundary phrase matching.
//!
//! Both the need lexicon and the category filters match patterns against
//! Unicode word tokens rather than raw substrings, so `how` never fires inside
//! `show`. Offsets exposed to callers are character (Unicode scalar) offsets.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

/// NFC-normalizes, trims and collapses internal whitespace runs to one space.
pub fn normalize(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    let mut out = String::with_capacity(nfc.len());
    for word in nfc.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Case fold used for all comparisons.
pub fn fold(s: &str) -> String {
    s.to_lowercase()
}

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Slices `text` by character offsets. Returns `None` if out of bounds.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if self.start > self.end {
            return None;
        }
        let mut bounds = text
            .char_indices()
            .map(|(b, _)| b)
            .chain(std::iter::once(text.len()));
        let start = bounds.nth(self.start)?;
        let end = if self.end == self.start {
            start
        } else {
            bounds.nth(self.end - self.start - 1)?
        };
        Some(&text[start..end])
    }
}

/// One word token of a text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub span: Span,
    pub byte_start: usize,
    pub byte_end: usize,
    pub folded: String,
}

/// Splits `text` into Unicode words (UAX #29), keeping both char and byte offsets.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    // Words come in increasing byte order, so char offsets advance monotonically.
    let mut chars_before = 0usize;
    let mut cursor = 0usize;
    for (byte_start, word) in text.unicode_word_indices() {
        chars_before += text[cursor..byte_start].chars().count();
        let len = word.chars().count();
        tokens.push(Token {
            span: Span::new(chars_before, chars_before + len),
            byte_start,
            byte_end: byte_start + word.len(),
            folded: fold(word),
        });
        chars_before += len;
        cursor = byte_start + word.len();
    }
    tokens
}

/// Canonical form of a pattern: its folded words joined by single spaces.
/// Returns `None` when the pattern contains no word at all.
pub fn canonical_pattern(pattern: &str) -> Option<String> {
    let normalized = normalize(pattern);
    let words: Vec<String> = tokenize(&normalized).into_iter().map(|t| t.folded).collect();
    if words.is_empty() {
        None
    } else {
        Some(words.join(" "))
    }
}

/// A match of a pattern over a token range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseMatch<'p, P> {
    pub span: Span,
    pub byte_start: usize,
    pub byte_end: usize,
    pub payload: &'p P,
}

/// Index of word-sequence patterns keyed by their first word.
#[derive(Debug, Clone)]
pub struct PhraseIndex<P> {
    by_first: HashMap<String, Vec<(Vec<String>, P)>>,
    len: usize,
}

impl<P> Default for PhraseIndex<P> {
    fn default() -> Self {
        Self {
            by_first: HashMap::new(),
            len: 0,
        }
    }
}

impl<P> PhraseIndex<P> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a canonical pattern (see [`canonical_pattern`]).
    pub fn insert(&mut self, canonical: &str, payload: P) {
        let words: Vec<String> = canonical.split(' ').map(str::to_owned).collect();
        self.by_first
            .entry(words[0].clone())
            .or_default()
            .push((words, payload));
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// All occurrences of all patterns, ordered by start token then insertion order.
    ///
    /// Consecutive pattern words must be separated by whitespace only in the
    /// source text; punctuation between words breaks a phrase.
    pub fn find_all<'p>(&'p self, text: &str, tokens: &[Token]) -> Vec<PhraseMatch<'p, P>> {
        let mut out = Vec::new();
        for (i, first) in tokens.iter().enumerate() {
            let Some(candidates) = self.by_first.get(&first.folded) else {
                continue;
            };
            for (words, payload) in candidates {
                if let Some(last) = match_at(text, tokens, i, words) {
                    out.push(PhraseMatch {
                        span: Span::new(first.span.start, tokens[last].span.end),
                        byte_start: first.byte_start,
                        byte_end: tokens[last].byte_end,
                        payload,
                    });
                }
            }
        }
        out
    }
}

fn match_at(text: &str, tokens: &[Token], start: usize, words: &[String]) -> Option<usize> {
    let end = start + words.len();
    if end > tokens.len() {
        return None;
    }
    for (k, word) in words.iter().enumerate() {
        let tok = &tokens[start + k];
        if &tok.folded != word {
            return None;
        }
        if k > 0 {
            let gap = &text[tokens[start + k - 1].byte_end..tok.byte_start];
            if !gap.chars().all(char::is_whitespace) {
                return None;
            }
        }
    }
    Some(end - 1)
}
