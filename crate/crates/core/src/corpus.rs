//! Canonical review corpus: store-export import, normalization, deduplication,
//! need units and per-app label statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::NeedKind;
use crate::jsonl::{self, JsonlError};
use crate::report::TextTable;
use crate::text::{self, Span};

/// Version written into every canonical corpus line.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("input is not valid UTF-8 (byte offset {0})")]
    NotUtf8(usize),
    #[error("unknown import format `{0}` (expected json-lines or delimited-table)")]
    UnknownFormat(String),
    #[error("unknown store `{0}` (expected google_play or apple_app_store)")]
    UnknownStore(String),
    #[error("invalid column mapping: {0}")]
    Mapping(String),
    #[error("review {0} has an empty body after normalization")]
    EmptyBody(ReviewRef),
    #[error("need unit `{0}` references a review that is not in the corpus")]
    DanglingReview(String),
    #[error("invalid need unit span {span:?} for review {review} (body has {len} characters)")]
    BadSpan { review: ReviewRef, span: Span, len: usize },
    #[error("corpus line {line}: unsupported schema version {found}")]
    SchemaVersion { line: usize, found: u32 },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoreKind {
    GooglePlay,
    AppleAppStore,
}

impl StoreKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GooglePlay => "google_play",
            Self::AppleAppStore => "apple_app_store",
        }
    }
}

impl fmt::Display for StoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StoreKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "google_play" | "googleplay" | "play" | "android" => Ok(Self::GooglePlay),
            "apple_app_store" | "app_store" | "appstore" | "apple" | "ios" => Ok(Self::AppleAppStore),
            _ => Err(CorpusError::UnknownStore(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub text: String,
    pub responded_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub store: StoreKind,
    pub app_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub body: String,
    pub rating: u8,
    pub language: String,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub developer_responses: Vec<ResponseRecord>,
}

/// Identity of a review within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReviewRef {
    pub store: StoreKind,
    pub app_id: String,
    pub id: String,
}

impl fmt::Display for ReviewRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.store, self.app_id, self.id)
    }
}

impl Review {
    pub fn key(&self) -> ReviewRef {
        ReviewRef {
            store: self.store,
            app_id: self.app_id.clone(),
            id: self.id.clone(),
        }
    }

    /// Text used for matching: title and body joined by a newline.
    pub fn matched_text(&self) -> String {
        match &self.title {
            Some(t) if !t.is_empty() => format!("{t}\n{}", self.body),
            _ => self.body.clone(),
        }
    }
}

/// One individually countable explanation need inside a review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeedUnit {
    pub unit_id: String,
    pub review: ReviewRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    pub ordinal: u32,
}

impl NeedUnit {
    /// The single unit covering a whole review.
    pub fn whole(review: ReviewRef) -> Self {
        Self::with_ordinal(review, None, 1)
    }

    fn with_ordinal(review: ReviewRef, span: Option<Span>, ordinal: u32) -> Self {
        Self {
            unit_id: format!("{review}#{ordinal}"),
            review,
            span,
            ordinal,
        }
    }

    /// Splits a review into one unit per marked span of its body.
    pub fn split(review: &Review, spans: &[Span]) -> Result<Vec<NeedUnit>> {
        let len = review.body.chars().count();
        spans
            .iter()
            .enumerate()
            .map(|(i, &span)| {
                if span.start >= span.end || span.end > len {
                    return Err(CorpusError::BadSpan {
                        review: review.key(),
                        span,
                        len,
                    });
                }
                Ok(Self::with_ordinal(review.key(), Some(span), i as u32 + 1))
            })
            .collect()
    }

    /// Text of this unit: the marked span if any, else the review's matched text.
    pub fn text(&self, review: &Review) -> String {
        self.span
            .and_then(|s| s.slice(&review.body))
            .map(str::to_owned)
            .unwrap_or_else(|| review.matched_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImportFormat {
    JsonLines,
    DelimitedTable,
}

impl FromStr for ImportFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json-lines" | "jsonl" | "ndjson" => Ok(Self::JsonLines),
            "delimited-table" | "csv" | "tsv" | "table" => Ok(Self::DelimitedTable),
            _ => Err(CorpusError::UnknownFormat(s.to_owned())),
        }
    }
}

/// Source column (or JSON key) for each review field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Columns {
    pub id: String,
    pub app_id: String,
    pub title: String,
    pub body: String,
    pub rating: String,
    pub language: String,
    pub created_at: String,
    /// JSON array of `{text, responded_at}` objects (json-lines only).
    pub developer_responses: String,
    pub response_text: String,
    pub responded_at: String,
}

impl Default for Columns {
    fn default() -> Self {
        Self {
            id: "id".into(),
            app_id: "app_id".into(),
            title: "title".into(),
            body: "body".into(),
            rating: "rating".into(),
            language: "language".into(),
            created_at: "created_at".into(),
            developer_responses: "developer_responses".into(),
            response_text: "response_text".into(),
            responded_at: "responded_at".into(),
        }
    }
}

/// Import configuration, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub delimiter: char,
    /// Used when the export has no app column.
    pub app_id: Option<String>,
    /// Used when the export has no language column.
    pub language: Option<String>,
    pub columns: Columns,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            delimiter: ',',
            app_id: None,
            language: None,
            columns: Columns::default(),
        }
    }
}

impl ColumnMapping {
    pub fn from_toml(src: &str) -> Result<Self> {
        let m: Self = toml::from_str(src).map_err(|e| CorpusError::Mapping(e.to_string()))?;
        if !m.delimiter.is_ascii() {
            return Err(CorpusError::Mapping(format!("delimiter {:?} is not ASCII", m.delimiter)));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
}

impl ImportReport {
    pub fn rejected_count(&self) -> usize {
        self.rejected.len()
    }
}

enum RawRecord<'a> {
    Json(&'a serde_json::Map<String, serde_json::Value>),
    Csv(&'a csv::StringRecord, &'a HashMap<String, usize>),
}

impl RawRecord<'_> {
    fn get(&self, key: &str) -> Option<String> {
        let v = match self {
            RawRecord::Json(obj) => match obj.get(key)? {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                _ => return None,
            },
            RawRecord::Csv(rec, header) => rec.get(*header.get(key)?)?.to_owned(),
        };
        let v = v.trim();
        (!v.is_empty()).then(|| v.to_owned())
    }
}

/// Parses RFC 3339, `YYYY-MM-DD HH:MM:SS` (taken as UTC) or a bare date.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

fn build_review(raw: &RawRecord<'_>, mapping: &ColumnMapping, store: StoreKind) -> Result<Review, String> {
    let c = &mapping.columns;
    let id = raw.get(&c.id).ok_or("missing id")?;
    let app_id = raw
        .get(&c.app_id)
        .or_else(|| mapping.app_id.clone())
        .ok_or("missing app_id")?;
    let body = raw.get(&c.body).ok_or("missing body")?;
    let rating_raw = raw.get(&c.rating).ok_or("missing rating")?;
    let rating: i64 = rating_raw
        .parse::<i64>()
        .or_else(|_| {
            rating_raw
                .parse::<f64>()
                .ok()
                .filter(|f| f.fract() == 0.0)
                .map(|f| f as i64)
                .ok_or(())
        })
        .map_err(|_| format!("invalid rating `{rating_raw}`"))?;
    if !(1..=5).contains(&rating) {
        return Err("rating out of range".into());
    }
    let created_raw = raw.get(&c.created_at).ok_or("missing created_at")?;
    let created_at = parse_timestamp(&created_raw).ok_or_else(|| format!("invalid timestamp `{created_raw}`"))?;
    let language = raw
        .get(&c.language)
        .or_else(|| mapping.language.clone())
        .unwrap_or_else(|| "und".into());

    let mut developer_responses = Vec::new();
    if let RawRecord::Json(obj) = raw {
        if let Some(serde_json::Value::Array(items)) = obj.get(&c.developer_responses) {
            for item in items {
                let resp: ResponseRecord = serde_json::from_value(item.clone())
                    .map_err(|e| format!("invalid developer response: {e}"))?;
                developer_responses.push(resp);
            }
        }
    }
    if let Some(text) = raw.get(&c.response_text) {
        let at_raw = raw.get(&c.responded_at).ok_or("response without responded_at")?;
        let responded_at = parse_timestamp(&at_raw).ok_or_else(|| format!("invalid timestamp `{at_raw}`"))?;
        developer_responses.push(ResponseRecord { text, responded_at });
    }
    developer_responses.retain(|r| !r.text.trim().is_empty());

    Ok(Review {
        id,
        store,
        app_id,
        title: raw.get(&c.title),
        body,
        rating: rating as u8,
        language,
        created_at,
        developer_responses,
    })
}

/// Imports a store-export stream. Malformed records are skipped and reported.
pub fn import_reviews<R: Read>(
    mut input: R,
    format: ImportFormat,
    store: StoreKind,
    mapping: &ColumnMapping,
) -> Result<(Vec<Review>, ImportReport)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let src = String::from_utf8(bytes).map_err(|e| CorpusError::NotUtf8(e.utf8_error().valid_up_to()))?;
    let mut reviews = Vec::new();
    let mut report = ImportReport::default();
    let mut reject = |line: u64, reason: String| report.rejected.push(Rejection { line, reason });

    match format {
        ImportFormat::JsonLines => {
            for (i, line) in src.lines().enumerate() {
                let line_no = i as u64 + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value = match serde_json::from_str(line) {
                    Ok(v) => v,
                    Err(e) => {
                        reject(line_no, format!("malformed record: {e}"));
                        continue;
                    }
                };
                let Some(obj) = value.as_object() else {
                    reject(line_no, "malformed record: not an object".into());
                    continue;
                };
                match build_review(&RawRecord::Json(obj), mapping, store) {
                    Ok(r) => reviews.push(r),
                    Err(reason) => reject(line_no, reason),
                }
            }
        }
        ImportFormat::DelimitedTable => {
            let mut rdr = csv::ReaderBuilder::new()
                .delimiter(mapping.delimiter as u8)
                .has_headers(true)
                .from_reader(src.as_bytes());
            let header: HashMap<String, usize> = rdr
                .headers()
                .map_err(|e| CorpusError::Mapping(format!("unreadable header row: {e}")))?
                .iter()
                .enumerate()
                .map(|(i, h)| (h.trim().to_owned(), i))
                .collect();
            for rec in rdr.records() {
                match rec {
                    Ok(rec) => {
                        let line_no = rec.position().map_or(0, |p| p.line());
                        match build_review(&RawRecord::Csv(&rec, &header), mapping, store) {
                            Ok(r) => reviews.push(r),
                            Err(reason) => reject(line_no, reason),
                        }
                    }
                    Err(e) => {
                        let line_no = e.position().map_or(0, |p| p.line());
                        reject(line_no, format!("malformed record: {e}"));
                    }
                }
            }
        }
    }
    report.accepted = reviews.len();
    Ok((reviews, report))
}

/// NFC-normalizes and whitespace-collapses title and body.
pub fn normalize_review(raw: Review) -> Result<Review> {
    let body = text::normalize(&raw.body);
    if body.is_empty() {
        return Err(CorpusError::EmptyBody(raw.key()));
    }
    let title = raw.title.as_deref().map(text::normalize).filter(|t| !t.is_empty());
    Ok(Review { body, title, ..raw })
}

/// Keeps the first occurrence of each `(store, app_id, id)`.
pub fn dedupe(reviews: Vec<Review>) -> Vec<Review> {
    let mut seen = HashSet::new();
    reviews.into_iter().filter(|r| seen.insert(r.key())).collect()
}

#[derive(Serialize)]
struct RecordOut<'a> {
    schema_version: u32,
    #[serde(flatten)]
    review: &'a Review,
}

#[derive(Deserialize)]
struct RecordIn {
    schema_version: u32,
    #[serde(flatten)]
    review: Review,
}

/// Writes the canonical corpus: one versioned JSON record per line.
pub fn write_corpus<W: Write>(out: W, reviews: &[Review]) -> std::io::Result<()> {
    jsonl::write(
        out,
        reviews.iter().map(|review| RecordOut {
            schema_version: SCHEMA_VERSION,
            review,
        }),
    )
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<Review>> {
    let records: Vec<RecordIn> = jsonl::read(input)?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.schema_version != SCHEMA_VERSION {
                Err(CorpusError::SchemaVersion {
                    line: i + 1,
                    found: r.schema_version,
                })
            } else {
                Ok(r.review)
            }
        })
        .collect()
}

/// Counts of units per need label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub explicit: u64,
    pub implicit: u64,
    pub potential: u64,
    pub none: u64,
}

impl LabelCounts {
    pub fn add(&mut self, kind: NeedKind) {
        match kind {
            NeedKind::Explicit => self.explicit += 1,
            NeedKind::Implicit => self.implicit += 1,
            NeedKind::Potential => self.potential += 1,
            NeedKind::None => self.none += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.explicit + self.implicit + self.potential + self.none
    }

    fn merge(&mut self, other: &Self) {
        self.explicit += other.explicit;
        self.implicit += other.implicit;
        self.potential += other.potential;
        self.none += other.none;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub app_id: String,
    pub store: StoreKind,
    pub counts: LabelCounts,
}

/// Per-app label counts plus a total row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub rows: Vec<StatsRow>,
    pub total: LabelCounts,
}

impl CorpusStats {
    pub fn render(&self) -> String {
        let mut t = TextTable::new(["App", "Store", "Explicit", "Implicit", "Potential", "None"]);
        let row = |app: &str, store: &str, c: &LabelCounts| {
            vec![
                app.to_owned(),
                store.to_owned(),
                c.explicit.to_string(),
                c.implicit.to_string(),
                c.potential.to_string(),
                c.none.to_string(),
            ]
        };
        for r in &self.rows {
            t.push(row(&r.app_id, r.store.as_str(), &r.counts));
        }
        t.push(row("Total", "", &self.total));
        t.render()
    }
}

/// Aggregates labeled units per `(app_id, store)`.
pub fn corpus_stats(labeled: &[(NeedUnit, NeedKind)], reviews: &[Review]) -> Result<CorpusStats> {
    let known: HashSet<ReviewRef> = reviews.iter().map(Review::key).collect();
    let mut rows: BTreeMap<(String, StoreKind), LabelCounts> = BTreeMap::new();
    for (unit, kind) in labeled {
        if !known.contains(&unit.review) {
            return Err(CorpusError::DanglingReview(unit.unit_id.clone()));
        }
        rows.entry((unit.review.app_id.clone(), unit.review.store))
            .or_default()
            .add(*kind);
    }
    let mut total = LabelCounts::default();
    for c in rows.values() {
        total.merge(c);
    }
    Ok(CorpusStats {
        rows: rows
            .into_iter()
            .map(|((app_id, store), counts)| StatsRow { app_id, store, counts })
            .collect(),
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mapping() -> ColumnMapping {
        ColumnMapping::default()
    }

    fn review(id: &str, body: &str) -> Review {
        Review {
            id: id.into(),
            store: StoreKind::GooglePlay,
            app_id: "nav".into(),
            title: None,
            body: body.into(),
            rating: 3,
            language: "en".into(),
            created_at: parse_timestamp("2024-01-01T00:00:00Z").unwrap(),
            developer_responses: vec![],
        }
    }

    #[test]
    fn empty_stream_imports_nothing() {
        let (reviews, report) =
            import_reviews("".as_bytes(), ImportFormat::JsonLines, StoreKind::GooglePlay, &mapping()).unwrap();
        assert!(reviews.is_empty());
        assert_eq!(report, ImportReport::default());
    }

    #[test]
    fn rating_out_of_range_is_rejected() {
        let src = r#"{"id":"1","app_id":"nav","body":"x","rating":6,"created_at":"2024-01-01"}"#;
        let (reviews, report) =
            import_reviews(src.as_bytes(), ImportFormat::JsonLines, StoreKind::GooglePlay, &mapping()).unwrap();
        assert!(reviews.is_empty());
        assert_eq!(report.accepted, 0);
        assert_eq!(
            report.rejected,
            vec![Rejection {
                line: 1,
                reason: "rating out of range".into()
            }]
        );
    }

    #[test]
    fn malformed_line_is_counted_with_line_number() {
        let src = concat!(
            r#"{"id":"1","app_id":"nav","body":"a","rating":5,"created_at":"2024-01-01"}"#,
            "\n",
            r#"{"id":"2","app_id":"nav","body":"b","rating":"4","created_at":"2024-01-02 10:00:00"}"#,
            "\n{not json\n",
            r#"{"id":"3","app_id":"nav","body":"c","rating":1,"created_at":"2024-01-03T08:00:00+02:00"}"#,
            "\n"
        );
        let (reviews, report) =
            import_reviews(src.as_bytes(), ImportFormat::JsonLines, StoreKind::GooglePlay, &mapping()).unwrap();
        assert_eq!(reviews.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["1", "2", "3"]);
        assert_eq!(report.accepted, 3);
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(report.rejected[0].line, 3);
        assert_eq!(reviews[2].created_at.to_rfc3339(), "2024-01-03T06:00:00+00:00");
        assert_eq!(reviews[0].language, "und");
    }

    #[test]
    fn delimited_table_uses_mapping() {
        let m = ColumnMapping::from_toml(
            r#"
            delimiter = ";"
            app_id = "nav-ios"
            language = "de"
            [columns]
            id = "Review ID"
            title = "Title"
            body = "Text"
            rating = "Stars"
            created_at = "Date"
            response_text = "Reply"
            responded_at = "Reply Date"
            "#,
        )
        .unwrap();
        let src = "Review ID;Title;Text;Stars;Date;Reply;Reply Date\n\
                   a1;Frage;Wie geht das?;4;2024-02-01;Danke!;2024-02-02\n\
                   a2;;kaputt;;2024-02-01;;\n\
                   a3;x;y;2\n";
        let (reviews, report) =
            import_reviews(src.as_bytes(), ImportFormat::DelimitedTable, StoreKind::AppleAppStore, &m).unwrap();
        assert_eq!(reviews.len(), 1);
        let r = &reviews[0];
        assert_eq!((r.app_id.as_str(), r.language.as_str(), r.rating), ("nav-ios", "de", 4));
        assert_eq!(r.title.as_deref(), Some("Frage"));
        assert_eq!(r.developer_responses.len(), 1);
        assert_eq!(report.rejected.len(), 2);
        assert_eq!(report.rejected[0].reason, "missing rating");
        assert_eq!(report.rejected[0].line, 3);
        assert!(report.rejected[1].reason.starts_with("malformed record"));
    }

    #[test]
    fn undecodable_stream_is_fatal() {
        let bytes = [b'{', 0xff, 0xfe];
        let err = import_reviews(&bytes[..], ImportFormat::JsonLines, StoreKind::GooglePlay, &mapping()).unwrap_err();
        assert!(matches!(err, CorpusError::NotUtf8(1)));
        assert!(matches!("xml".parse::<ImportFormat>(), Err(CorpusError::UnknownFormat(_))));
    }

    #[test]
    fn normalize_review_examples() {
        let r = normalize_review(review("1", "  hi \u{0041}\u{030A} ")).unwrap();
        assert_eq!(r.body, "hi \u{00C5}");
        let again = normalize_review(r.clone()).unwrap();
        assert_eq!(again, r);
        assert_eq!(normalize_review(review("2", "a\n\n b")).unwrap().body, "a b");
        assert!(matches!(normalize_review(review("3", " \n ")), Err(CorpusError::EmptyBody(_))));
    }

    #[test]
    fn dedupe_examples() {
        let list = vec![review("1", "a"), review("2", "b")];
        assert_eq!(dedupe(list.clone()), list);
        let dup = vec![review("1", "first"), review("1", "second")];
        assert_eq!(dedupe(dup), vec![review("1", "first")]);
        let five = vec![
            review("1", "a"),
            review("2", "b"),
            review("1", "a2"),
            review("3", "c"),
            review("2", "b2"),
        ];
        let out = dedupe(five);
        assert_eq!(out.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["1", "2", "3"]);
    }

    #[test]
    fn stats_counts_and_totals() {
        let reviews = vec![review("1", "a"), review("2", "b"), review("3", "c")];
        let empty = corpus_stats(&[], &reviews).unwrap();
        assert_eq!(empty.total, LabelCounts::default());

        let labeled: Vec<_> = [NeedKind::Explicit, NeedKind::Explicit, NeedKind::None]
            .into_iter()
            .zip(&reviews)
            .map(|(k, r)| (NeedUnit::whole(r.key()), k))
            .collect();
        let stats = corpus_stats(&labeled, &reviews).unwrap();
        assert_eq!(stats.rows.len(), 1);
        assert_eq!(
            stats.rows[0].counts,
            LabelCounts {
                explicit: 2,
                implicit: 0,
                potential: 0,
                none: 1
            }
        );

        let mut other = review("9", "z");
        other.app_id = "bus".into();
        let mut all = reviews.clone();
        all.push(other.clone());
        let mut labeled2 = labeled.clone();
        labeled2.push((NeedUnit::whole(other.key()), NeedKind::Potential));
        let stats = corpus_stats(&labeled2, &all).unwrap();
        assert_eq!(stats.rows.len(), 2);
        let sum = stats.rows.iter().fold(LabelCounts::default(), |mut acc, r| {
            acc.merge(&r.counts);
            acc
        });
        assert_eq!(sum, stats.total);
        assert_eq!(stats.total.total(), 4);
    }

    #[test]
    fn stats_reject_dangling_units() {
        let r = review("1", "a");
        let mut missing = r.key();
        missing.id = "404".into();
        let err = corpus_stats(&[(NeedUnit::whole(missing), NeedKind::None)], &[r]).unwrap_err();
        assert!(err.to_string().contains("404"));
    }

    #[test]
    fn need_units_split_with_consecutive_ordinals() {
        let r = review("1", "Why is it slow? And what is ETA?");
        let units = NeedUnit::split(&r, &[Span::new(0, 15), Span::new(16, 32)]).unwrap();
        assert_eq!(units.iter().map(|u| u.ordinal).collect::<Vec<_>>(), [1, 2]);
        assert_eq!(units[1].text(&r), "And what is ETA?");
        assert_ne!(units[0].unit_id, units[1].unit_id);
        assert!(NeedUnit::split(&r, &[Span::new(3, 3)]).is_err());
        assert!(NeedUnit::split(&r, &[Span::new(0, 99)]).is_err());
    }

    #[test]
    fn canonical_corpus_round_trips() {
        let mut r = review("1", "body");
        r.title = Some("title".into());
        r.developer_responses.push(ResponseRecord {
            text: "thanks".into(),
            responded_at: parse_timestamp("2024-01-02").unwrap(),
        });
        let mut buf = Vec::new();
        write_corpus(&mut buf, &[r.clone()]).unwrap();
        let line = String::from_utf8(buf.clone()).unwrap();
        assert!(line.starts_with(r#"{"schema_version":1,"id":"1""#), "{line}");
        assert_eq!(read_corpus(&buf[..]).unwrap(), vec![r]);
        let bad = line.replace("\"schema_version\":1", "\"schema_version\":7");
        assert!(matches!(read_corpus(bad.as_bytes()), Err(CorpusError::SchemaVersion { .. })));
    }
}
