use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::Utc;
use needdesk_core::assignment::{self, UnitAssignment};
use needdesk_core::corpus::{self, ColumnMapping, ImportFormat, ImportReport, Review, ReviewRef, StoreKind};
use needdesk_core::detect::{self, NeedKind, NeedLabel};
use needdesk_core::jsonl;
use needdesk_core::report::TextTable;
use needdesk_core::sources::{self, SourceQuery, SourceTier, UnitSources};
use needdesk_core::taxonomy::{self, CategorySuggestion, Granularity};
use needdesk_core::workflow::automation::Automation;
use needdesk_core::workflow::store::CaseStore;
use serde::{Deserialize, Serialize};

use crate::args::{AssignArgs, ClassifyArgs, DetectArgs, IngestArgs, ResolveArgs};
use crate::{Env, UsageError};

pub const CORPUS: &str = "corpus.jsonl";
pub const INGEST_REPORT: &str = "ingest_report";
pub const LABELS: &str = "labels.jsonl";
pub const DETECT_STATS: &str = "detect_stats";
pub const ASSIGNMENTS: &str = "assignments.jsonl";
pub const TABLE_STEM: &str = "assignment_table";
pub const SOURCES: &str = "sources.jsonl";
pub const RESOLVE_SUMMARY: &str = "resolve_summary";

pub fn suggestions_name(g: Granularity) -> String {
    format!("suggestions_{g}.jsonl")
}

/// An explicit input path, or the named file in the output directory.
pub(crate) fn input(env: &Env, explicit: &Option<PathBuf>, default_name: &str) -> Result<PathBuf> {
    match explicit {
        Some(p) => Ok(p.clone()),
        None => env.out.path(default_name),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub(crate) fn load_corpus(path: &Path) -> Result<Vec<Review>> {
    corpus::read_corpus(open(path)?).with_context(|| format!("reading corpus {}", path.display()))
}

pub(crate) fn load_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    jsonl::read(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn by_key(reviews: &[Review]) -> BTreeMap<ReviewRef, &Review> {
    reviews.iter().map(|r| (r.key(), r)).collect()
}

/// Labels that go on to the later stages.
fn selected<'a>(env: &Env, labels: &'a [NeedLabel]) -> impl Iterator<Item = &'a NeedLabel> {
    let filter = env.settings.need_filter;
    labels.iter().filter(move |l| !filter || l.kind != NeedKind::None)
}

pub(crate) fn automation(env: &Env, responses: Vec<sources::PastResponse>) -> Automation {
    let r = &env.reference;
    Automation {
        lexicon: r.lexicon.clone(),
        filter: r.filter.clone(),
        table: r.table.clone(),
        articles: r.articles.clone(),
        responses,
        source_policy: env.settings.source_policy,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub input: String,
    pub store: StoreKind,
    pub format: ImportFormat,
    pub import: ImportReport,
    pub duplicates_dropped: usize,
    pub corpus_size: usize,
}

impl IngestSummary {
    fn render(&self) -> String {
        let mut out = format!(
            "{}: {} accepted, {} rejected, {} duplicates dropped; corpus now holds {} reviews\n",
            self.input,
            self.import.accepted,
            self.import.rejected_count(),
            self.duplicates_dropped,
            self.corpus_size
        );
        for r in &self.import.rejected {
            out.push_str(&format!("  line {}: {}\n", r.line, r.reason));
        }
        out
    }
}

fn infer_format(path: &Path) -> Option<ImportFormat> {
    match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
        "jsonl" | "ndjson" | "json" => Some(ImportFormat::JsonLines),
        "csv" | "tsv" => Some(ImportFormat::DelimitedTable),
        _ => None,
    }
}

pub fn ingest(env: &Env, a: &IngestArgs) -> Result<()> {
    let format = match a.format {
        Some(f) => f.into(),
        None => infer_format(&a.input).ok_or_else(|| {
            UsageError(format!("cannot infer the format of {}; pass --format", a.input.display()))
        })?,
    };
    let mapping = match &a.mapping {
        Some(p) => {
            let src = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ColumnMapping::from_toml(&src).with_context(|| format!("column mapping {}", p.display()))?
        }
        None => ColumnMapping::default(),
    };
    let store: StoreKind = a.store.into();
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let (imported, report) = corpus::import_reviews(file, format, store, &mapping)
        .with_context(|| format!("importing {}", a.input.display()))?;

    let corpus_path = env.out.path(CORPUS)?;
    let mut reviews = if a.append && corpus_path.exists() {
        load_corpus(&corpus_path)?
    } else {
        Vec::new()
    };
    let before = reviews.len() + imported.len();
    reviews.extend(imported.iter().cloned());
    let reviews = corpus::dedupe(reviews);
    let mut buf = Vec::new();
    corpus::write_corpus(&mut buf, &reviews)?;
    env.out.write(CORPUS, buf)?;

    let summary = IngestSummary {
        input: a.input.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
        store,
        format,
        import: report,
        duplicates_dropped: before - reviews.len(),
        corpus_size: reviews.len(),
    };
    env.out.write_report(INGEST_REPORT, &summary, &summary.render())?;

    if let Some(dir) = &a.open_cases {
        let ctx = env.reference.context(env.settings.workflow);
        let mut store = CaseStore::open(dir, &ctx)?;
        let automation = automation(env, sources::past_responses_from_corpus(&reviews));
        let opened = store.ingest(&corpus::dedupe(imported), &automation, Utc::now(), &ctx)?;
        println!(
            "cases: {} opened, {} already present in {}",
            opened.created.len(),
            opened.existing.len(),
            dir.display()
        );
    }
    Ok(())
}

pub fn detect(env: &Env, a: &DetectArgs) -> Result<()> {
    let reviews = load_corpus(&input(env, &a.corpus, CORPUS)?)?;
    let (labels, stats) = detect::detect_corpus(&reviews, &env.reference.lexicon);
    env.out.write_jsonl(LABELS, &labels)?;
    env.out.write_report(DETECT_STATS, &stats, &stats.render())
}

pub fn classify(env: &Env, a: &ClassifyArgs) -> Result<()> {
    let reviews = load_corpus(&input(env, &a.corpus, CORPUS)?)?;
    let labels: Vec<NeedLabel> = load_jsonl(&input(env, &a.labels, LABELS)?)?;
    let index = by_key(&reviews);
    let suggestions = selected(env, &labels)
        .map(|l| {
            let review = index
                .get(&l.unit.review)
                .with_context(|| format!("unit {} refers to a review missing from the corpus", l.unit.unit_id))?;
            Ok(taxonomy::classify(&l.unit, &l.unit.text(review), &env.reference.filter))
        })
        .collect::<Result<Vec<_>>>()?;
    let name = suggestions_name(env.settings.granularity);
    env.out.write_jsonl(&name, &suggestions)?;
    let with_category = suggestions.iter().filter(|s| s.top().is_some()).count();
    println!(
        "{name}: {} units, {with_category} with a suggested category",
        suggestions.len()
    );
    Ok(())
}

pub fn assign(env: &Env, a: &AssignArgs) -> Result<()> {
    let default = suggestions_name(env.settings.granularity);
    let suggestions: Vec<CategorySuggestion> = load_jsonl(&input(env, &a.suggestions, &default)?)?;
    let table = &env.reference.table;
    let assignments = suggestions
        .iter()
        .map(|s| assignment::assign_suggestion(s, table))
        .collect::<Result<Vec<UnitAssignment>, _>>()?;
    env.out.write_jsonl(ASSIGNMENTS, &assignments)?;
    let mut csv = Vec::new();
    table.write(&mut csv)?;
    env.out.write(&format!("{TABLE_STEM}.csv"), csv)?;
    env.out.write_report(TABLE_STEM, &table.view(), &table.render())?;
    let fallback = assignments
        .iter()
        .filter(|a| a.teams.first().is_some_and(|t| t.fallback))
        .count();
    println!("{ASSIGNMENTS}: {} units, {fallback} routed to the fallback team", assignments.len());
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveSummary {
    pub units: usize,
    pub by_tier: BTreeMap<SourceTier, usize>,
}

pub fn resolve(env: &Env, a: &ResolveArgs) -> Result<()> {
    let reviews = load_corpus(&input(env, &a.corpus, CORPUS)?)?;
    let labels: Vec<NeedLabel> = load_jsonl(&input(env, &a.labels, LABELS)?)?;
    let index = by_key(&reviews);
    let responses = sources::past_responses_from_corpus(&reviews);
    let policy = &env.settings.source_policy;
    let mut summary = ResolveSummary::default();
    let resolved = selected(env, &labels)
        .map(|l| {
            let review = index
                .get(&l.unit.review)
                .with_context(|| format!("unit {} refers to a review missing from the corpus", l.unit.unit_id))?;
            let text = l.unit.text(review);
            let query = SourceQuery {
                text: &text,
                review: &l.unit.review,
            };
            let resolution = sources::resolve(query, &env.reference.articles, &responses, policy)?;
            *summary.by_tier.entry(resolution.tier).or_default() += 1;
            Ok(UnitSources {
                unit: l.unit.clone(),
                resolution,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    summary.units = resolved.len();
    env.out.write_jsonl(SOURCES, &resolved)?;
    let mut t = TextTable::new(["Tier", "Units"]);
    for (tier, n) in &summary.by_tier {
        t.push(vec![serde_json::to_value(tier)?.as_str().unwrap_or_default().to_owned(), n.to_string()]);
    }
    let text = format!("units: {}\n\n{}", summary.units, t.render());
    env.out.write_report(RESOLVE_SUMMARY, &summary, &text)
}
