//! Answer-source resolution: support articles first, then past store
//! responses, else a flag for a newly drafted response.

use std::collections::{BTreeSet, HashSet};
use std::io::BufRead;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{NeedUnit, Review, ReviewRef, StoreKind};
use crate::jsonl::{self, JsonlError};
use crate::text;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("duplicate article id `{0}`")]
    DuplicateArticle(String),
    #[error("article `{0}` has an empty title")]
    EmptyTitle(String),
    #[error("top_k must be at least 1")]
    ZeroTopK,
    #[error("{what} must lie in [0, 1], got {value}")]
    ScoreOutOfRange { what: &'static str, value: f64 },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

pub type Result<T, E = SourceError> = std::result::Result<T, E>;

fn prepare(s: &str) -> Vec<char> {
    text::fold(&text::normalize(s)).chars().collect()
}

/// Longest common block `(i, j, len)`; ties go to the smallest `i`, then the
/// smallest `j`.
fn longest_block(a: &[char], b: &[char]) -> (usize, usize, usize) {
    let mut best = (0, 0, 0);
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
        }
        // Scan candidates ending at row i by start position so the earliest
        // start in `a`, then in `b`, wins on equal length.
        for j in 0..b.len() {
            let len = cur[j + 1];
            if len == 0 {
                continue;
            }
            let (si, sj) = (i + 1 - len, j + 1 - len);
            if len > best.2 || (len == best.2 && (si, sj) < (best.0, best.1)) {
                best = (si, sj, len);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Total length of the recursive matching-block decomposition.
pub fn matching_chars(a: &[char], b: &[char]) -> usize {
    let mut total = 0;
    let mut stack = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        if alo >= ahi || blo >= bhi {
            continue;
        }
        let (i, j, len) = longest_block(&a[alo..ahi], &b[blo..bhi]);
        if len == 0 {
            continue;
        }
        total += len;
        let (i, j) = (alo + i, blo + j);
        stack.push((alo, i, blo, j));
        stack.push((i + len, ahi, j + len, bhi));
    }
    total
}

fn ratio_of<T: Scalar>(a: &[char], b: &[char]) -> T {
    let t = a.len() + b.len();
    if t == 0 {
        return T::one();
    }
    T::ratio(2 * matching_chars(a, b) as u64, t as u64)
}

/// Ratcliff/Obershelp ratio `2M / (|a| + |b|)` over case-folded,
/// whitespace-collapsed characters.
pub fn similarity_as<T: Scalar>(a: &str, b: &str) -> T {
    ratio_of(&prepare(a), &prepare(b))
}

pub fn similarity(a: &str, b: &str) -> f64 {
    similarity_as(a, b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportArticle {
    pub id: String,
    pub title: String,
    pub body: String,
    #[serde(default)]
    pub url: String,
    /// Empty means the article serves every app.
    #[serde(default)]
    pub apps: BTreeSet<String>,
}

#[derive(Debug, Clone)]
struct IndexedArticle {
    article: SupportArticle,
    title: Vec<char>,
    body: Vec<char>,
}

/// Immutable, pre-normalized article collection.
#[derive(Debug, Clone, Default)]
pub struct ArticleIndex {
    articles: Vec<IndexedArticle>,
}

impl ArticleIndex {
    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SupportArticle> {
        self.articles.iter().find(|a| a.article.id == id).map(|a| &a.article)
    }
}

pub fn index_articles(articles: Vec<SupportArticle>) -> Result<ArticleIndex> {
    let mut ids = HashSet::new();
    let mut out = Vec::with_capacity(articles.len());
    for article in articles {
        if !ids.insert(article.id.clone()) {
            return Err(SourceError::DuplicateArticle(article.id));
        }
        if article.title.trim().is_empty() {
            return Err(SourceError::EmptyTitle(article.id));
        }
        out.push(IndexedArticle {
            title: prepare(&article.title),
            body: prepare(&article.body),
            article,
        });
    }
    Ok(ArticleIndex { articles: out })
}

/// Reads line-delimited article records.
pub fn load_articles<R: BufRead>(input: R) -> Result<ArticleIndex> {
    index_articles(jsonl::read(input)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PastResponse {
    pub review: ReviewRef,
    /// Text of the review this response answered.
    pub review_text: String,
    pub text: String,
    pub store: StoreKind,
    pub responded_at: DateTime<Utc>,
}

/// Every non-empty developer response in the corpus, in corpus order.
pub fn past_responses_from_corpus(reviews: &[Review]) -> Vec<PastResponse> {
    reviews
        .iter()
        .flat_map(|r| {
            r.developer_responses
                .iter()
                .filter(|resp| !resp.text.trim().is_empty())
                .map(move |resp| PastResponse {
                    review: r.key(),
                    review_text: r.matched_text(),
                    text: resp.text.clone(),
                    store: r.store,
                    responded_at: resp.responded_at,
                })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTier {
    Article,
    PastResponse,
    NewResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceCandidate {
    pub tier: SourceTier,
    /// Article id or `store:app:id` of the answered review; absent for new responses.
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub score: f64,
    pub rank: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePolicy {
    pub min_article_score: f64,
    pub min_response_score: f64,
    pub top_k: usize,
    /// Lets Apple-store units reuse past responses.
    #[serde(default)]
    pub cross_store_responses: bool,
}

impl Default for SourcePolicy {
    fn default() -> Self {
        Self {
            min_article_score: 0.45,
            min_response_score: 0.45,
            top_k: 5,
            cross_store_responses: false,
        }
    }
}

impl SourcePolicy {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(SourceError::ZeroTopK);
        }
        for (what, value) in [
            ("min_article_score", self.min_article_score),
            ("min_response_score", self.min_response_score),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SourceError::ScoreOutOfRange { what, value });
            }
        }
        Ok(())
    }
}

fn rank(mut scored: Vec<(f64, String)>, tier: SourceTier, top_k: usize) -> Vec<SourceCandidate> {
    // Stable sort keeps input order among equal scores.
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(i, (score, reference))| SourceCandidate {
            tier,
            reference: Some(reference),
            score,
            rank: i as u32 + 1,
        })
        .collect()
}

/// Articles serving `app`, scored by the better of title and body similarity.
pub fn find_articles(query: &str, index: &ArticleIndex, app: &str, min_score: f64, top_k: usize) -> Result<Vec<SourceCandidate>> {
    if top_k == 0 {
        return Err(SourceError::ZeroTopK);
    }
    let q = prepare(query);
    let scored = index
        .articles
        .iter()
        .filter(|a| a.article.apps.is_empty() || a.article.apps.contains(app))
        .filter_map(|a| {
            let s = ratio_of::<f64>(&q, &a.title).max(ratio_of(&q, &a.body));
            (s >= min_score).then(|| (s, a.article.id.clone()))
        })
        .collect();
    Ok(rank(scored, SourceTier::Article, top_k))
}

/// Past responses scored by how similar the review they answered is to
/// `review_text`. Responses to `exclude` (the unit's own review) are skipped.
pub fn find_past_responses(
    review_text: &str,
    exclude: Option<&ReviewRef>,
    responses: &[PastResponse],
    min_score: f64,
    top_k: usize,
) -> Result<Vec<SourceCandidate>> {
    if top_k == 0 {
        return Err(SourceError::ZeroTopK);
    }
    let q = prepare(review_text);
    let scored = responses
        .iter()
        .filter(|r| Some(&r.review) != exclude)
        .filter_map(|r| {
            let s = ratio_of::<f64>(&q, &prepare(&r.review_text));
            (s >= min_score).then(|| (s, r.review.to_string()))
        })
        .collect();
    Ok(rank(scored, SourceTier::PastResponse, top_k))
}

/// What is being answered: the unit's text and the review it belongs to.
#[derive(Debug, Clone, Copy)]
pub struct SourceQuery<'a> {
    pub text: &'a str,
    pub review: &'a ReviewRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub tier: SourceTier,
    pub candidates: Vec<SourceCandidate>,
}

fn new_response() -> Resolution {
    Resolution {
        tier: SourceTier::NewResponse,
        candidates: vec![SourceCandidate {
            tier: SourceTier::NewResponse,
            reference: None,
            score: 0.0,
            rank: 1,
        }],
    }
}

/// Resolved sources for one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSources {
    pub unit: NeedUnit,
    pub resolution: Resolution,
}

/// Walks the tiers in priority order and stops at the first that yields
/// candidates; always returns at least one candidate.
pub fn resolve(
    query: SourceQuery<'_>,
    index: &ArticleIndex,
    responses: &[PastResponse],
    policy: &SourcePolicy,
) -> Result<Resolution> {
    policy.validate()?;
    let articles = find_articles(query.text, index, &query.review.app_id, policy.min_article_score, policy.top_k)?;
    if !articles.is_empty() {
        return Ok(Resolution {
            tier: SourceTier::Article,
            candidates: articles,
        });
    }
    if query.review.store != StoreKind::AppleAppStore || policy.cross_store_responses {
        let past = find_past_responses(
            query.text,
            Some(query.review),
            responses,
            policy.min_response_score,
            policy.top_k,
        )?;
        if !past.is_empty() {
            return Ok(Resolution {
                tier: SourceTier::PastResponse,
                candidates: past,
            });
        }
    }
    Ok(new_response())
}
