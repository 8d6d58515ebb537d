//! Explanation-need taxonomy: subcategory → supercategory rollup, keyword
//! filters that rank candidate subcategories, and filter evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::NeedUnit;
use crate::detect::{version_comment, LabelSource, MatchMode};
use crate::metrics::{self, FBetaVariant, MetricError};
use crate::text::{self, PhraseIndex};
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum TaxonomyError {
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("expected header `{expected}`, found `{found}`")]
    BadHeader { expected: &'static str, found: String },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("subcategory `{0}` has no supercategory and is not standalone")]
    ZeroHomes(String),
    #[error("subcategory `{0}` is declared with more than one home")]
    TwoHomes(String),
    #[error("subcategory `{sub}` rolls up into undeclared supercategory `{sup}`")]
    UnknownSupercategory { sub: String, sup: String },
    #[error("category `{0}` is not declared in the taxonomy")]
    Undeclared(String),
    #[error("line {line}: fine rule `{pattern}` must map to exactly one subcategory")]
    FineRuleArity { line: u64, pattern: String },
    #[error("line {line}: duplicate rule `{pattern}`")]
    DuplicateRule { line: u64, pattern: String },
    #[error("prediction for unit `{0}` has no ground truth")]
    MissingTruth(String),
    #[error("result sets differ: {0}")]
    MismatchedSets(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T, E = TaxonomyError> = std::result::Result<T, E>;

/// Validated taxonomy configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyConfig {
    pub version: String,
    pub subcategories: Vec<String>,
    pub supercategories: Vec<String>,
    pub rollup: BTreeMap<String, String>,
    pub standalone: BTreeSet<String>,
}

impl TaxonomyConfig {
    /// Validates the "exactly one home" and "declared supercategory" rules.
    pub fn new(
        version: impl Into<String>,
        subcategories: Vec<String>,
        supercategories: Vec<String>,
        rollup: BTreeMap<String, String>,
        standalone: BTreeSet<String>,
    ) -> Result<Self> {
        let supers: BTreeSet<&String> = supercategories.iter().collect();
        let mut seen = BTreeSet::new();
        for sub in &subcategories {
            if !seen.insert(sub) {
                return Err(TaxonomyError::TwoHomes(sub.clone()));
            }
            match (rollup.get(sub), standalone.contains(sub)) {
                (None, false) => return Err(TaxonomyError::ZeroHomes(sub.clone())),
                (Some(_), true) => return Err(TaxonomyError::TwoHomes(sub.clone())),
                (Some(sup), false) if !supers.contains(sup) => {
                    return Err(TaxonomyError::UnknownSupercategory {
                        sub: sub.clone(),
                        sup: sup.clone(),
                    })
                }
                _ => {}
            }
        }
        for key in rollup.keys().chain(standalone.iter()) {
            if !seen.contains(key) {
                return Err(TaxonomyError::Undeclared(key.clone()));
            }
        }
        Ok(Self {
            version: version.into(),
            subcategories,
            supercategories,
            rollup,
            standalone,
        })
    }

    pub fn is_declared(&self, category: &str) -> bool {
        self.subcategories.iter().any(|c| c == category)
    }

    /// Top-level groups: supercategories followed by standalone subcategories.
    pub fn top_level(&self) -> Vec<String> {
        let mut out = self.supercategories.clone();
        out.extend(self.subcategories.iter().filter(|s| self.standalone.contains(*s)).cloned());
        out
    }
}

const TAXONOMY_HEADER: &str = "kind,name,parent";

fn read_all<R: Read>(mut input: R) -> Result<String> {
    let mut src = String::new();
    input.read_to_string(&mut src).map_err(|_| TaxonomyError::NotUtf8)?;
    Ok(src)
}

fn csv_rows(src: &str, expected: &'static str) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(src.as_bytes());
    let mut rows = Vec::new();
    let mut header_seen = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| TaxonomyError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if !header_seen {
            let found = rec.iter().collect::<Vec<_>>().join(",");
            if found != expected {
                return Err(TaxonomyError::BadHeader { expected, found });
            }
            header_seen = true;
            continue;
        }
        let width = expected.split(',').count();
        if rec.len() != width {
            return Err(TaxonomyError::Malformed {
                line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        rows.push((line, rec));
    }
    Ok(rows)
}

/// Reads a taxonomy file with header `kind,name,parent`, where `kind` is
/// `supercategory`, `subcategory` (parent required) or `standalone`.
pub fn load_taxonomy<R: Read>(input: R) -> Result<TaxonomyConfig> {
    let src = read_all(input)?;
    let version = version_comment(&src);
    let mut subs = Vec::new();
    let mut supers = Vec::new();
    let mut rollup = BTreeMap::new();
    let mut standalone = BTreeSet::new();
    for (line, rec) in csv_rows(&src, TAXONOMY_HEADER)? {
        let (kind, name, parent) = (&rec[0], rec[1].to_owned(), &rec[2]);
        if name.is_empty() {
            return Err(TaxonomyError::Malformed {
                line,
                message: "empty category name".into(),
            });
        }
        match kind {
            "supercategory" => {
                if !supers.contains(&name) {
                    supers.push(name);
                }
            }
            "subcategory" => {
                if subs.contains(&name) {
                    return Err(TaxonomyError::TwoHomes(name));
                }
                if !parent.is_empty() {
                    rollup.insert(name.clone(), parent.to_owned());
                }
                subs.push(name);
            }
            "standalone" => {
                if subs.contains(&name) {
                    return Err(TaxonomyError::TwoHomes(name));
                }
                standalone.insert(name.clone());
                subs.push(name);
            }
            other => {
                return Err(TaxonomyError::Malformed {
                    line,
                    message: format!("unknown row kind `{other}`"),
                })
            }
        }
    }
    TaxonomyConfig::new(version, subs, supers, rollup, standalone)
}

/// Supercategory of `category`, or the category itself when standalone.
pub fn rollup<'a>(category: &'a str, config: &'a TaxonomyConfig) -> Result<&'a str> {
    if !config.is_declared(category) {
        return Err(TaxonomyError::Undeclared(category.to_owned()));
    }
    Ok(config.rollup.get(category).map_or(category, String::as_str))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Fine,
    Broad,
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fine" => Ok(Self::Fine),
            "broad" | "coarse" => Ok(Self::Broad),
            other => Err(format!("unknown granularity `{other}` (fine|broad)")),
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fine => "fine",
            Self::Broad => "broad",
        })
    }
}

/// Prefix marking an auxiliary tag target (e.g. `tag:Timing`) in rule files.
pub const TAG_PREFIX: &str = "tag:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRule {
    pub pattern: String,
    pub categories: Vec<String>,
    pub tags: Vec<String>,
    pub match_mode: MatchMode,
}

#[derive(Debug, Clone)]
pub struct CategoryFilter {
    granularity: Granularity,
    rules: Vec<CategoryRule>,
    index: PhraseIndex<usize>,
}

impl CategoryFilter {
    pub fn new(granularity: Granularity, rules: Vec<CategoryRule>, config: &TaxonomyConfig) -> Result<Self> {
        let numbered = rules.into_iter().enumerate().map(|(i, r)| (i as u64 + 1, r));
        Self::build(granularity, numbered, config)
    }

    fn build(
        granularity: Granularity,
        rules: impl IntoIterator<Item = (u64, CategoryRule)>,
        config: &TaxonomyConfig,
    ) -> Result<Self> {
        let mut out: Vec<CategoryRule> = Vec::new();
        let mut index = PhraseIndex::new();
        let mut seen = BTreeSet::new();
        for (line, mut rule) in rules {
            let canonical = text::canonical_pattern(&rule.pattern).ok_or_else(|| TaxonomyError::Malformed {
                line,
                message: "empty pattern".into(),
            })?;
            if rule.match_mode == MatchMode::WholeWord && canonical.contains(' ') {
                return Err(TaxonomyError::Malformed {
                    line,
                    message: format!("whole-word rule `{canonical}` contains more than one word"),
                });
            }
            for c in &rule.categories {
                if !config.is_declared(c) {
                    return Err(TaxonomyError::Undeclared(c.clone()));
                }
            }
            rule.categories.sort();
            rule.categories.dedup();
            rule.tags.sort();
            rule.tags.dedup();
            let arity_ok = match granularity {
                Granularity::Fine => rule.categories.len() == 1,
                Granularity::Broad => !rule.categories.is_empty() || !rule.tags.is_empty(),
            };
            if !arity_ok {
                return Err(TaxonomyError::FineRuleArity {
                    line,
                    pattern: canonical,
                });
            }
            if !seen.insert(canonical.clone()) {
                return Err(TaxonomyError::DuplicateRule {
                    line,
                    pattern: canonical,
                });
            }
            rule.pattern = canonical;
            index.insert(&rule.pattern, out.len());
            out.push(rule);
        }
        Ok(Self {
            granularity,
            rules: out,
            index,
        })
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn rules(&self) -> &[CategoryRule] {
        &self.rules
    }
}

const RULES_HEADER: &str = "pattern,categories,match_mode";

/// Reads a rule file with header `pattern,categories,match_mode`; categories
/// are `|`-separated and `tag:`-prefixed targets become suggestion tags.
pub fn load_filter<R: Read>(input: R, granularity: Granularity, config: &TaxonomyConfig) -> Result<CategoryFilter> {
    let src = read_all(input)?;
    let mut rules = Vec::new();
    for (line, rec) in csv_rows(&src, RULES_HEADER)? {
        let mut categories = Vec::new();
        let mut tags = Vec::new();
        for target in rec[1].split('|').map(str::trim).filter(|t| !t.is_empty()) {
            match target.strip_prefix(TAG_PREFIX) {
                Some(tag) => tags.push(tag.trim().to_owned()),
                None => categories.push(target.to_owned()),
            }
        }
        let match_mode = rec[2].parse::<MatchMode>().map_err(|token| TaxonomyError::Malformed {
            line,
            message: format!("unknown match mode `{token}`"),
        })?;
        rules.push((
            line,
            CategoryRule {
                pattern: rec[0].to_owned(),
                categories,
                tags,
                match_mode,
            },
        ));
    }
    CategoryFilter::build(granularity, rules, config)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedCategory {
    pub category: String,
    pub score: u32,
}

/// Ranked subcategory candidates for one need unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySuggestion {
    pub unit: NeedUnit,
    pub ranked: Vec<RankedCategory>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub suggested_by: LabelSource,
}

impl CategorySuggestion {
    pub fn top(&self) -> Option<&str> {
        self.ranked.first().map(|r| r.category.as_str())
    }
}

/// Scores each subcategory by the number of rule hits mapping to it.
/// Ties break on category name.
pub fn classify(unit: &NeedUnit, unit_text: &str, filter: &CategoryFilter) -> CategorySuggestion {
    let tokens = text::tokenize(unit_text);
    let mut scores: BTreeMap<&str, u32> = BTreeMap::new();
    let mut tags = BTreeSet::new();
    for m in filter.index.find_all(unit_text, &tokens) {
        let rule = &filter.rules[*m.payload];
        for c in &rule.categories {
            *scores.entry(c.as_str()).or_default() += 1;
        }
        tags.extend(rule.tags.iter().cloned());
    }
    let mut ranked: Vec<RankedCategory> = scores
        .into_iter()
        .map(|(category, score)| RankedCategory {
            category: category.to_owned(),
            score,
        })
        .collect();
    ranked.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.category.cmp(&b.category)));
    CategorySuggestion {
        unit: unit.clone(),
        ranked,
        tags: tags.into_iter().collect(),
        suggested_by: LabelSource::Filter,
    }
}

/// Top-1 evaluation of category suggestions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport<T> {
    pub units: u64,
    pub predicted: u64,
    pub correct: u64,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub accuracy: T,
    pub beta: T,
    /// F-β with β entering linearly.
    pub f_beta_linear: T,
    pub f_beta_standard: T,
    pub degenerate: bool,
}

/// Scores the top-ranked category of every prediction against the truth map.
/// Units with an empty ranking count as unpredicted.
pub fn evaluate_filter<T: Scalar>(
    predictions: &[CategorySuggestion],
    truth: &BTreeMap<String, String>,
    beta: T,
) -> Result<FilterReport<T>> {
    let mut predicted = 0u64;
    let mut correct = 0u64;
    for p in predictions {
        let t = truth
            .get(&p.unit.unit_id)
            .ok_or_else(|| TaxonomyError::MissingTruth(p.unit.unit_id.clone()))?;
        if let Some(top) = p.top() {
            predicted += 1;
            if top == t {
                correct += 1;
            }
        }
    }
    let units = predictions.len() as u64;
    let ratio = |n: u64, d: u64| if d == 0 { (T::zero(), true) } else { (T::ratio(n, d), false) };
    let (precision, dp) = ratio(correct, predicted);
    let (recall, dr) = ratio(correct, units);
    let f1 = metrics::harmonic_f1(precision.clone(), recall.clone());
    let linear = metrics::f_beta(precision.clone(), recall.clone(), beta.clone(), FBetaVariant::Linear)?;
    let standard = metrics::f_beta(precision.clone(), recall.clone(), beta.clone(), FBetaVariant::Standard)?;
    Ok(FilterReport {
        units,
        predicted,
        correct,
        precision,
        recall: recall.clone(),
        f1: f1.value,
        accuracy: recall,
        beta,
        f_beta_linear: linear.value,
        f_beta_standard: standard.value,
        degenerate: dp || dr || f1.degenerate || linear.degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub unit_id: String,
    pub correct: bool,
}

/// Outcomes for one evaluation set (e.g. one block of interview reviews).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetResults {
    pub name: String,
    pub outcomes: Vec<Outcome>,
}

/// Scores `(unit, predicted, truth)` triples at subcategory and rolled-up level.
pub fn outcomes_at_both_levels(
    triples: &[(String, String, String)],
    config: &TaxonomyConfig,
) -> Result<(Vec<Outcome>, Vec<Outcome>)> {
    let mut sub = Vec::with_capacity(triples.len());
    let mut sup = Vec::with_capacity(triples.len());
    for (unit, predicted, truth) in triples {
        sub.push(Outcome {
            unit_id: unit.clone(),
            correct: predicted == truth,
        });
        sup.push(Outcome {
            unit_id: unit.clone(),
            correct: rollup(predicted, config)? == rollup(truth, config)?,
        });
    }
    Ok((sub, sup))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow<T> {
    pub set: String,
    pub units: u64,
    /// `None` marks a set without data.
    pub sub_validity: Option<T>,
    pub super_validity: Option<T>,
    /// Difference in percentage points (super − sub).
    pub delta: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport<T> {
    pub rows: Vec<DeltaRow<T>>,
}

/// Per-set validity at both granularities and the percentage-point difference.
pub fn compare_granularity<T: Scalar>(sub: &[SetResults], sup: &[SetResults]) -> Result<DeltaReport<T>> {
    if sub.len() != sup.len() {
        return Err(TaxonomyError::MismatchedSets(format!(
            "{} subcategory sets vs {} supercategory sets",
            sub.len(),
            sup.len()
        )));
    }
    let mut rows = Vec::new();
    for (a, b) in sub.iter().zip(sup) {
        if a.name != b.name {
            return Err(TaxonomyError::MismatchedSets(format!("`{}` vs `{}`", a.name, b.name)));
        }
        let units_a: BTreeSet<&str> = a.outcomes.iter().map(|o| o.unit_id.as_str()).collect();
        let units_b: BTreeSet<&str> = b.outcomes.iter().map(|o| o.unit_id.as_str()).collect();
        if units_a != units_b || a.outcomes.len() != b.outcomes.len() {
            return Err(TaxonomyError::MismatchedSets(format!("set `{}` covers different units", a.name)));
        }
        let n = a.outcomes.len() as u64;
        let validity = |s: &SetResults| -> Result<Option<T>> {
            if n == 0 {
                return Ok(None);
            }
            let correct = s.outcomes.iter().filter(|o| o.correct).count() as u64;
            Ok(Some(metrics::validity(correct, n)?))
        };
        let sv = validity(a)?;
        let pv = validity(b)?;
        let delta = match (&sv, &pv) {
            (Some(x), Some(y)) => Some(y.clone() - x.clone()),
            _ => None,
        };
        rows.push(DeltaRow {
            set: a.name.clone(),
            units: n,
            sub_validity: sv,
            super_validity: pv,
            delta,
        });
    }
    Ok(DeltaReport { rows })
}

impl<T: Scalar> FilterReport<T> {
    pub fn render(&self) -> String {
        use crate::report::{fmt4, TextTable};
        let mut t = TextTable::new(["Metric", "Value"]);
        for (name, v) in [
            ("Precision", &self.precision),
            ("Recall", &self.recall),
            ("F1-Score", &self.f1),
            ("Accuracy", &self.accuracy),
        ] {
            t.push(vec![name.to_owned(), fmt4(v.as_f64())]);
        }
        t.push(vec![format!("F-beta (linear, beta={})", self.beta.as_f64()), fmt4(self.f_beta_linear.as_f64())]);
        t.push(vec![format!("F-beta (standard, beta={})", self.beta.as_f64()), fmt4(self.f_beta_standard.as_f64())]);
        format!(
            "units: {}  predicted: {}  correct: {}\n\n{}",
            self.units,
            self.predicted,
            self.correct,
            t.render()
        )
    }
}

impl<T: Scalar> DeltaReport<T> {
    pub fn render(&self) -> String {
        use crate::report::TextTable;
        let pct = |v: &Option<T>| v.as_ref().map_or_else(|| "n.a.".to_owned(), |v| format!("{:.2}", v.as_f64()));
        let mut t = TextTable::new(["Set", "Units", "Subcategory validity", "Supercategory validity", "Delta (pp)"]);
        for r in &self.rows {
            t.push(vec![
                r.set.clone(),
                r.units.to_string(),
                pct(&r.sub_validity),
                pct(&r.super_validity),
                pct(&r.delta),
            ]);
        }
        t.render()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ReviewRef, StoreKind};

    const TAXO: &str = "# version: t1\n\
        kind,name,parent\n\
        supercategory,System Behavior,\n\
        supercategory,Interaction,\n\
        subcategory,Bugs & Crashes,System Behavior\n\
        subcategory,Navigation,System Behavior\n\
        subcategory,Operation,Interaction\n\
        subcategory,Tutorial,Interaction\n\
        standalone,Business,\n";

    fn unit(id: &str) -> NeedUnit {
        NeedUnit::whole(ReviewRef {
            store: StoreKind::GooglePlay,
            app_id: "nav".into(),
            id: id.into(),
        })
    }

    fn rule(p: &str, cats: &[&str]) -> CategoryRule {
        CategoryRule {
            pattern: p.into(),
            categories: cats.iter().map(|s| s.to_string()).collect(),
            tags: vec![],
            match_mode: MatchMode::Phrase,
        }
    }

    #[test]
    fn loads_and_rolls_up() {
        let t = load_taxonomy(TAXO.as_bytes()).unwrap();
        assert_eq!(t.version, "t1");
        assert_eq!(t.subcategories.len(), 5);
        assert_eq!(rollup("Operation", &t).unwrap(), "Interaction");
        assert_eq!(rollup("Business", &t).unwrap(), "Business");
        assert_eq!(rollup("Weather", &t), Err(TaxonomyError::Undeclared("Weather".into())));
        assert_eq!(t.top_level(), ["System Behavior", "Interaction", "Business"]);
    }

    #[test]
    fn homes_are_enforced() {
        let missing = "kind,name,parent\nsupercategory,Privacy & Security,\nsubcategory,Privacy,\n";
        assert_eq!(
            load_taxonomy(missing.as_bytes()).unwrap_err(),
            TaxonomyError::ZeroHomes("Privacy".into())
        );
        let unknown = "kind,name,parent\nsubcategory,Privacy,Secrets\n";
        assert!(matches!(
            load_taxonomy(unknown.as_bytes()),
            Err(TaxonomyError::UnknownSupercategory { .. })
        ));
        let twice = "kind,name,parent\nsupercategory,A,\nsubcategory,X,A\nstandalone,X,\n";
        assert_eq!(load_taxonomy(twice.as_bytes()).unwrap_err(), TaxonomyError::TwoHomes("X".into()));
    }

    #[test]
    fn classify_single_rule() {
        let t = load_taxonomy(TAXO.as_bytes()).unwrap();
        let f = CategoryFilter::new(Granularity::Fine, vec![rule("crashed", &["Bugs & Crashes"])], &t).unwrap();
        let s = classify(&unit("1"), "the app crashed again", &f);
        assert_eq!(
            s.ranked,
            vec![RankedCategory {
                category: "Bugs & Crashes".into(),
                score: 1
            }]
        );
        assert!(classify(&unit("2"), "lovely weather", &f).ranked.is_empty());
    }

    #[test]
    fn classify_orders_by_score_then_name() {
        let t = load_taxonomy(TAXO.as_bytes()).unwrap();
        let f = CategoryFilter::new(
            Granularity::Fine,
            vec![
                rule("tutorial", &["Tutorial"]),
                rule("settings", &["Operation"]),
                rule("button", &["Operation"]),
                rule("route", &["Navigation"]),
            ],
            &t,
        )
        .unwrap();
        let s = classify(&unit("1"), "which button in settings? a tutorial would help", &f);
        assert_eq!(s.top(), Some("Operation"));
        assert_eq!(s.ranked[1].category, "Tutorial");
        let tie = classify(&unit("2"), "tutorial for the route", &f);
        assert_eq!(tie.top(), Some("Navigation"));
    }

    #[test]
    fn fine_rules_need_exactly_one_category() {
        let t = load_taxonomy(TAXO.as_bytes()).unwrap();
        assert!(matches!(
            CategoryFilter::new(Granularity::Fine, vec![rule("why", &["Operation", "Tutorial"])], &t),
            Err(TaxonomyError::FineRuleArity { .. })
        ));
        assert!(CategoryFilter::new(Granularity::Broad, vec![rule("why", &["Operation", "Tutorial"])], &t).is_ok());
        assert!(matches!(
            CategoryFilter::new(Granularity::Broad, vec![rule("why", &["Weather"])], &t),
            Err(TaxonomyError::Undeclared(_))
        ));
    }

    #[test]
    fn rule_files_parse_tags() {
        let t = load_taxonomy(TAXO.as_bytes()).unwrap();
        let src = "pattern,categories,match_mode\nhow long,Navigation|tag:Timing,phrase\nrouting,Navigation|Operation,whole_word\n";
        let f = load_filter(src.as_bytes(), Granularity::Broad, &t).unwrap();
        assert_eq!(f.rules()[0].tags, ["Timing"]);
        let s = classify(&unit("1"), "How long does routing take", &f);
        assert_eq!(s.tags, ["Timing"]);
        assert_eq!(s.ranked[0].score, 2);
        assert!(load_filter(src.as_bytes(), Granularity::Fine, &t).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let truth: BTreeMap<String, String> = [("a", "Operation"), ("b", "Tutorial")]
            .iter()
            .map(|(u, c)| (unit(u).unit_id, c.to_string()))
            .collect();
        let pred = |id: &str, cat: Option<&str>| CategorySuggestion {
            unit: unit(id),
            ranked: cat
                .map(|c| {
                    vec![RankedCategory {
                        category: c.into(),
                        score: 1,
                    }]
                })
                .unwrap_or_default(),
            tags: vec![],
            suggested_by: LabelSource::Filter,
        };
        let perfect = evaluate_filter(&[pred("a", Some("Operation")), pred("b", Some("Tutorial"))], &truth, 0.2).unwrap();
        assert_eq!((perfect.precision, perfect.recall), (1.0, 1.0));

        let partial = evaluate_filter(&[pred("a", Some("Operation")), pred("b", None)], &truth, 0.2).unwrap();
        assert_eq!((partial.precision, partial.recall, partial.accuracy), (1.0, 0.5, 0.5));

        let err = evaluate_filter(&[pred("zzz", None)], &truth, 0.2).unwrap_err();
        assert!(matches!(err, TaxonomyError::MissingTruth(u) if u.contains("zzz")));
    }

    fn set(name: &str, correct: &[bool]) -> SetResults {
        SetResults {
            name: name.into(),
            outcomes: correct
                .iter()
                .enumerate()
                .map(|(i, &c)| Outcome {
                    unit_id: i.to_string(),
                    correct: c,
                })
                .collect(),
        }
    }

    #[test]
    fn granularity_deltas() {
        let same = compare_granularity::<f64>(&[set("1-25", &[true, false])], &[set("1-25", &[true, false])]).unwrap();
        assert_eq!(same.rows[0].delta, Some(0.0));

        // 10 units, 4 correct at sub level; super level fixes 2 of the 6 errors.
        let sub = [true, true, true, true, false, false, false, false, false, false];
        let sup = [true, true, true, true, true, true, false, false, false, false];
        let r = compare_granularity::<f64>(&[set("s", &sub)], &[set("s", &sup)]).unwrap();
        assert_eq!(r.rows[0].sub_validity, Some(40.0));
        assert_eq!(r.rows[0].super_validity, Some(60.0));
        assert_eq!(r.rows[0].delta, Some(20.0));

        let empty = compare_granularity::<f64>(&[set("e", &[])], &[set("e", &[])]).unwrap();
        assert_eq!(empty.rows[0].sub_validity, None);
        assert_eq!(empty.rows[0].delta, None);

        assert!(compare_granularity::<f64>(&[set("a", &[true])], &[set("b", &[true])]).is_err());
        assert!(compare_granularity::<f64>(&[set("a", &[true])], &[set("a", &[true, true])]).is_err());
    }

    #[test]
    fn both_levels_from_triples() {
        let t = load_taxonomy(TAXO.as_bytes()).unwrap();
        let triples = vec![
            ("1".to_string(), "Operation".to_string(), "Tutorial".to_string()),
            ("2".to_string(), "Navigation".to_string(), "Navigation".to_string()),
            ("3".to_string(), "Business".to_string(), "Operation".to_string()),
        ];
        let (sub, sup) = outcomes_at_both_levels(&triples, &t).unwrap();
        assert_eq!(sub.iter().map(|o| o.correct).collect::<Vec<_>>(), [false, true, false]);
        assert_eq!(sup.iter().map(|o| o.correct).collect::<Vec<_>>(), [true, true, false]);
    }
}
