//! Explanation-need detection with a word-and-phrase lexicon.
//!
//! Each review (title and body) is matched against lexicon entries at word
//! boundaries. A unit's label is the strongest kind among its hits, with the
//! priority `Explicit > Implicit > Potential > None`.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, CorpusStats, NeedUnit, Review};
use crate::metrics::{self, MetricError, Prf};
use crate::report::{fmt4, TextTable};
use crate::Scalar;
use crate::text::{self, PhraseIndex, Span};

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("expected header `pattern,kind,language,match_mode,source`, found `{0}`")]
    BadHeader(String),
    #[error("line {line}: unknown need kind `{token}`")]
    UnknownKind { line: u64, token: String },
    #[error("line {line}: unknown match mode `{token}`")]
    UnknownMatchMode { line: u64, token: String },
    #[error("line {line}: empty pattern")]
    EmptyPattern { line: u64 },
    #[error("line {line}: whole-word entry `{pattern}` contains more than one word")]
    NotAWord { line: u64, pattern: String },
    #[error("line {line}: duplicate entry (`{pattern}`, {language}, {kind})")]
    Duplicate {
        line: u64,
        pattern: String,
        language: String,
        kind: NeedKind,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

/// Kind of explanation need. Ordered by aggregation priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NeedKind {
    #[default]
    None,
    Potential,
    Implicit,
    Explicit,
}

impl NeedKind {
    pub const ALL: [NeedKind; 4] = [Self::Explicit, Self::Implicit, Self::Potential, Self::None];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Explicit => "explicit",
            Self::Implicit => "implicit",
            Self::Potential => "potential",
            Self::None => "none",
        }
    }
}

impl fmt::Display for NeedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NeedKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "explicit" => Ok(Self::Explicit),
            "implicit" => Ok(Self::Implicit),
            "potential" => Ok(Self::Potential),
            "none" => Ok(Self::None),
            other => Err(other.to_owned()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    WholeWord,
    Phrase,
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "whole_word" | "wholeword" | "word" => Ok(Self::WholeWord),
            "phrase" => Ok(Self::Phrase),
            other => Err(other.to_owned()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub pattern: String,
    pub kind: NeedKind,
    pub language: String,
    pub match_mode: MatchMode,
    pub source: String,
}

impl LexiconEntry {
    fn applies_to(&self, review_language: &str) -> bool {
        self.language == "*" || review_language == "und" || primary_subtag(&self.language) == primary_subtag(review_language)
    }
}

fn primary_subtag(tag: &str) -> String {
    tag.split(['-', '_']).next().unwrap_or("").to_ascii_lowercase()
}

/// An immutable, indexed set of lexicon entries.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    version: String,
    index: PhraseIndex<usize>,
}

impl Lexicon {
    /// Builds a lexicon, canonicalizing patterns and rejecting duplicates.
    pub fn new(entries: Vec<LexiconEntry>, version: impl Into<String>) -> Result<Self, LexiconError> {
        let numbered = entries.into_iter().enumerate().map(|(i, e)| (i as u64 + 1, e));
        Self::build(numbered, version.into())
    }

    fn build(
        entries: impl IntoIterator<Item = (u64, LexiconEntry)>,
        version: String,
    ) -> Result<Self, LexiconError> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut index = PhraseIndex::new();
        for (line, mut e) in entries {
            if e.kind == NeedKind::None {
                return Err(LexiconError::UnknownKind {
                    line,
                    token: "none".into(),
                });
            }
            let canonical = text::canonical_pattern(&e.pattern).ok_or(LexiconError::EmptyPattern { line })?;
            if e.match_mode == MatchMode::WholeWord && canonical.contains(' ') {
                return Err(LexiconError::NotAWord {
                    line,
                    pattern: e.pattern,
                });
            }
            e.pattern = canonical;
            e.language = match e.language.trim() {
                "" => "*".to_owned(),
                l => l.to_ascii_lowercase(),
            };
            if !seen.insert((e.pattern.clone(), e.language.clone(), e.kind)) {
                return Err(LexiconError::Duplicate {
                    line,
                    pattern: e.pattern,
                    language: e.language,
                    kind: e.kind,
                });
            }
            index.insert(&e.pattern, out.len());
            out.push(e);
        }
        Ok(Self {
            entries: out,
            version,
            index,
        })
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub(crate) const VERSION_PREFIX: &str = "# version:";

/// Extracts a `# version: x` comment, defaulting to `unversioned`.
pub(crate) fn version_comment(src: &str) -> String {
    src.lines()
        .find_map(|l| l.trim().strip_prefix(VERSION_PREFIX))
        .map(|v| v.trim().to_owned())
        .unwrap_or_else(|| "unversioned".into())
}

/// Reads the lexicon file format: a `pattern,kind,language,match_mode,source`
/// header, `#` comment lines, one entry per line.
pub fn load_lexicon<R: Read>(mut input: R) -> Result<Lexicon, LexiconError> {
    let mut src = String::new();
    input.read_to_string(&mut src).map_err(|_| LexiconError::NotUtf8)?;
    let version = version_comment(&src);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(src.as_bytes());
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Lexicon::new(Vec::new(), version),
        Some(h) => h.map_err(|e| LexiconError::Malformed {
            line: 1,
            message: e.to_string(),
        })?,
    };
    let header_line = header.iter().collect::<Vec<_>>().join(",");
    if header_line != "pattern,kind,language,match_mode,source" {
        return Err(LexiconError::BadHeader(header_line));
    }
    let mut entries = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| LexiconError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 5 {
            return Err(LexiconError::Malformed {
                line,
                message: format!("expected 5 fields, found {}", rec.len()),
            });
        }
        let kind = rec[1]
            .parse::<NeedKind>()
            .map_err(|token| LexiconError::UnknownKind { line, token })?;
        let match_mode = rec[3]
            .parse::<MatchMode>()
            .map_err(|token| LexiconError::UnknownMatchMode { line, token })?;
        entries.push((
            line,
            LexiconEntry {
                pattern: rec[0].to_owned(),
                kind,
                language: rec[2].to_owned(),
                match_mode,
                source: rec[4].to_owned(),
            },
        ));
    }
    Lexicon::build(entries, version)
}

/// One lexicon hit inside a review's matched text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchHit {
    pub entry: LexiconEntry,
    pub span: Span,
    pub matched_text: String,
}

/// Matches `text` (already normalized) in the given language.
pub fn match_text(text: &str, language: &str, lexicon: &Lexicon) -> Vec<MatchHit> {
    let tokens = text::tokenize(text);
    let mut hits: Vec<MatchHit> = lexicon
        .index
        .find_all(text, &tokens)
        .into_iter()
        .filter_map(|m| {
            let entry = &lexicon.entries[*m.payload];
            entry.applies_to(language).then(|| MatchHit {
                entry: entry.clone(),
                span: m.span,
                matched_text: text[m.byte_start..m.byte_end].to_owned(),
            })
        })
        .collect();
    hits.sort_by(|a, b| {
        (a.span, &a.entry.pattern, a.entry.kind, &a.entry.language).cmp(&(
            b.span,
            &b.entry.pattern,
            b.entry.kind,
            &b.entry.language,
        ))
    });
    hits
}

/// Case-insensitive word-boundary matching over title and body.
pub fn match_review(review: &Review, lexicon: &Lexicon) -> Vec<MatchHit> {
    match_text(&review.matched_text(), &review.language, lexicon)
}

/// Strongest kind among the hits; `None` without hits.
pub fn label_unit(hits: &[MatchHit]) -> NeedKind {
    hits.iter().map(|h| h.entry.kind).max().unwrap_or(NeedKind::None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Filter,
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeedLabel {
    pub unit: NeedUnit,
    pub kind: NeedKind,
    pub hits: Vec<MatchHit>,
    pub labeled_by: LabelSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Labels every review as one whole-review unit and aggregates the counts.
pub fn detect_corpus(reviews: &[Review], lexicon: &Lexicon) -> (Vec<NeedLabel>, CorpusStats) {
    let labels: Vec<NeedLabel> = reviews
        .iter()
        .map(|r| {
            let hits = match_review(r, lexicon);
            NeedLabel {
                unit: NeedUnit::whole(r.key()),
                kind: label_unit(&hits),
                hits,
                labeled_by: LabelSource::Filter,
                note: None,
            }
        })
        .collect();
    let pairs: Vec<(NeedUnit, NeedKind)> = labels.iter().map(|l| (l.unit.clone(), l.kind)).collect();
    let stats = corpus::corpus_stats(&pairs, reviews).expect("units are derived from the corpus itself");
    (labels, stats)
}

/// One column of the per-class detection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore<T> {
    pub class: NeedKind,
    pub predicted: u64,
    pub relevant: u64,
    pub prf: Prf<T>,
}

/// Filter labels scored against reviewer labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport<T> {
    pub units: u64,
    /// Explicit, implicit, potential and none, in that order.
    pub per_class: Vec<ClassScore<T>>,
    /// "Any need flagged" against "any need in the truth".
    pub overall: Prf<T>,
    /// Exact label agreement over all units.
    pub accuracy: T,
    /// Agreement of the flagged/unflagged split with need/no need.
    pub binary_accuracy: T,
}

/// Scores `(truth, predicted)` label pairs.
///
/// Explicit, implicit and none are scored one-vs-rest. Reviewers never
/// assign `potential`, so a potential flag counts as a hit when the unit
/// truly carries any need; its recall is taken over all true needs.
pub fn evaluate_detection<T: Scalar>(pairs: &[(NeedKind, NeedKind)]) -> Result<DetectionReport<T>, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let is_need = |k: NeedKind| k != NeedKind::None;
    let count = |f: &dyn Fn(NeedKind, NeedKind) -> bool| pairs.iter().filter(|(t, p)| f(*t, *p)).count() as u64;
    let per_class = NeedKind::ALL
        .iter()
        .map(|&class| {
            let (tp, predicted, relevant) = if class == NeedKind::Potential {
                (
                    count(&|t, p| p == class && is_need(t)),
                    count(&|_, p| p == class),
                    count(&|t, _| is_need(t)),
                )
            } else {
                (
                    count(&|t, p| p == class && t == class),
                    count(&|_, p| p == class),
                    count(&|t, _| t == class),
                )
            };
            ClassScore {
                class,
                predicted,
                relevant,
                prf: metrics::prf_from_counts(tp, predicted - tp, relevant - tp),
            }
        })
        .collect();
    let tp = count(&|t, p| is_need(t) && is_need(p));
    let flagged = count(&|_, p| is_need(p));
    let needs = count(&|t, _| is_need(t));
    let n = pairs.len() as u64;
    Ok(DetectionReport {
        units: n,
        per_class,
        overall: metrics::prf_from_counts(tp, flagged - tp, needs - tp),
        accuracy: T::ratio(count(&|t, p| t == p), n),
        binary_accuracy: T::ratio(count(&|t, p| is_need(t) == is_need(p)), n),
    })
}

impl<T: Scalar> DetectionReport<T> {
    pub fn render(&self) -> String {
        let mut per = TextTable::new(["Metric", "Explicit", "Implicit", "Potential", "None"]);
        let cells = |f: &dyn Fn(&Prf<T>) -> f64| self.per_class.iter().map(|c| fmt4(f(&c.prf))).collect::<Vec<_>>();
        for (name, values) in [
            ("Precision", cells(&|p| p.precision.as_f64())),
            ("Recall", cells(&|p| p.recall.as_f64())),
            ("F1-Score", cells(&|p| p.f1.as_f64())),
        ] {
            per.push(std::iter::once(name.to_owned()).chain(values).collect());
        }
        let mut overall = TextTable::new(["Precision", "Recall", "F1-Score", "Accuracy", "Binary accuracy"]);
        overall.push(vec![
            fmt4(self.overall.precision.as_f64()),
            fmt4(self.overall.recall.as_f64()),
            fmt4(self.overall.f1.as_f64()),
            fmt4(self.accuracy.as_f64()),
            fmt4(self.binary_accuracy.as_f64()),
        ]);
        format!("units: {}

{}
{}", self.units, per.render(), overall.render())
    }
}
