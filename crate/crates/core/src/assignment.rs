//! Team reference points: deriving the category → ranked-team hierarchy from
//! assignment votes and looking up teams for categorized units.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::NeedUnit;
use crate::taxonomy::{CategorySuggestion, TaxonomyConfig};
use crate::Scalar;

/// Reserved fallback team, always present in a registry.
pub const META_TEAM: &str = "Meta";

#[derive(Debug, Error, PartialEq)]
pub enum AssignmentError {
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("expected header `{expected}`, found `{found}`")]
    BadHeader { expected: &'static str, found: String },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("duplicate team `{0}`")]
    DuplicateTeam(String),
    #[error("unknown team `{0}`")]
    UnknownTeam(String),
    #[error("category `{0}` is not declared in the taxonomy")]
    UndeclaredCategory(String),
    #[error("unit `{unit}` already has a vote from rater `{rater}`")]
    DuplicateVote { unit: String, rater: String },
    #[error("threshold must lie in (0, 1], got {0}")]
    ThresholdOutOfRange(String),
    #[error("hit rate needs at least one case")]
    EmptyInput,
}

pub type Result<T, E = AssignmentError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Team {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// Unique team names; `Meta` is added when absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamRegistry {
    teams: Vec<Team>,
}

impl TeamRegistry {
    pub fn new(mut teams: Vec<Team>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for t in &teams {
            if t.name.trim().is_empty() {
                return Err(AssignmentError::Malformed {
                    line: 0,
                    message: "empty team name".into(),
                });
            }
            if !seen.insert(t.name.clone()) {
                return Err(AssignmentError::DuplicateTeam(t.name.clone()));
            }
        }
        if !seen.contains(META_TEAM) {
            teams.push(Team {
                name: META_TEAM.into(),
                description: Some("fallback when no team qualifies".into()),
            });
        }
        Ok(Self { teams })
    }

    pub fn teams(&self) -> &[Team] {
        &self.teams
    }

    pub fn contains(&self, name: &str) -> bool {
        self.teams.iter().any(|t| t.name == name)
    }
}

fn read_all<R: Read>(mut input: R) -> Result<String> {
    let mut s = String::new();
    input.read_to_string(&mut s).map_err(|_| AssignmentError::NotUtf8)?;
    Ok(s)
}

fn csv_rows(src: &str, expected: &'static str) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(src.as_bytes());
    let width = expected.split(',').count();
    let mut rows = Vec::new();
    let mut header = true;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| AssignmentError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if header {
            let found = rec.iter().collect::<Vec<_>>().join(",");
            if found != expected {
                return Err(AssignmentError::BadHeader { expected, found });
            }
            header = false;
            continue;
        }
        if rec.len() != width {
            return Err(AssignmentError::Malformed {
                line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        rows.push((line, rec));
    }
    Ok(rows)
}

/// Reads `name,description`.
pub fn load_teams<R: Read>(input: R) -> Result<TeamRegistry> {
    let src = read_all(input)?;
    let teams = csv_rows(&src, "name,description")?
        .into_iter()
        .map(|(_, r)| Team {
            name: r[0].to_owned(),
            description: Some(r[1].to_owned()).filter(|d| !d.is_empty()),
        })
        .collect();
    TeamRegistry::new(teams)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub unit_id: String,
    pub category: String,
    pub team: String,
    pub rater: String,
}

/// Validated assignment votes: declared teams and categories, one vote per
/// `(unit, rater)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentEvidence {
    records: Vec<EvidenceRecord>,
}

impl AssignmentEvidence {
    pub fn new(records: Vec<EvidenceRecord>, teams: &TeamRegistry, taxonomy: &TaxonomyConfig) -> Result<Self> {
        let mut votes = BTreeSet::new();
        for r in &records {
            if !teams.contains(&r.team) {
                return Err(AssignmentError::UnknownTeam(r.team.clone()));
            }
            if !taxonomy.is_declared(&r.category) {
                return Err(AssignmentError::UndeclaredCategory(r.category.clone()));
            }
            if !votes.insert((r.unit_id.as_str(), r.rater.as_str())) {
                return Err(AssignmentError::DuplicateVote {
                    unit: r.unit_id.clone(),
                    rater: r.rater.clone(),
                });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[EvidenceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub const EVIDENCE_HEADER: &str = "unit_id,category,team,rater";

pub fn load_evidence<R: Read>(input: R, teams: &TeamRegistry, taxonomy: &TaxonomyConfig) -> Result<AssignmentEvidence> {
    let src = read_all(input)?;
    let records = csv_rows(&src, EVIDENCE_HEADER)?
        .into_iter()
        .map(|(_, r)| EvidenceRecord {
            unit_id: r[0].to_owned(),
            category: r[1].to_owned(),
            team: r[2].to_owned(),
            rater: r[3].to_owned(),
        })
        .collect();
    AssignmentEvidence::new(records, teams, taxonomy)
}

pub fn write_evidence<W: Write>(out: W, evidence: &AssignmentEvidence) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| AssignmentError::Io(e.to_string());
    w.write_record(EVIDENCE_HEADER.split(',')).map_err(io)?;
    for r in &evidence.records {
        w.write_record([&r.unit_id, &r.category, &r.team, &r.rater]).map_err(io)?;
    }
    w.flush().map_err(|e| AssignmentError::Io(e.to_string()))
}

/// How raters' votes are combined before shares are computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Every vote counts once.
    #[default]
    AllVotes,
    /// One vote per unit for its plurality team; tied units are dropped.
    Consensus,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "all_votes" | "all" => Ok(Self::AllVotes),
            "consensus" => Ok(Self::Consensus),
            other => Err(format!("unknown aggregation `{other}` (all-votes|consensus)")),
        }
    }
}

/// Explicit tie order per category, consulted after share and raw votes.
pub type TieOrder = BTreeMap<String, Vec<String>>;

/// Reads `category,order` where `order` is a `|`-separated team list.
pub fn load_tie_order<R: Read>(input: R, teams: &TeamRegistry) -> Result<TieOrder> {
    let src = read_all(input)?;
    let mut out = TieOrder::new();
    for (line, r) in csv_rows(&src, "category,order")? {
        let order: Vec<String> = r[1].split('|').map(|t| t.trim().to_owned()).filter(|t| !t.is_empty()).collect();
        if let Some(bad) = order.iter().find(|t| !teams.contains(t)) {
            return Err(AssignmentError::UnknownTeam(bad.clone()));
        }
        if out.insert(r[0].to_owned(), order).is_some() {
            return Err(AssignmentError::Malformed {
                line,
                message: format!("duplicate tie order for `{}`", &r[0]),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeriveOptions {
    pub aggregation: Aggregation,
    pub tie_order: TieOrder,
}

/// Parses `1/4`, `0.25` or `25%` into an exact fraction.
pub fn parse_fraction(s: &str) -> Option<Ratio<u64>> {
    let s = s.trim();
    if let Some(pct) = s.strip_suffix('%') {
        return parse_fraction(pct).map(|r| r / 100);
    }
    if let Some((n, d)) = s.split_once('/') {
        let (n, d) = (n.trim().parse().ok()?, d.trim().parse::<u64>().ok()?);
        return (d != 0).then(|| Ratio::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let den = 10u64.checked_pow(frac.len() as u32)?;
    Some(Ratio::new(digits.parse().ok()?, den))
}

/// Default share threshold: one quarter of a category's votes.
pub fn default_threshold() -> Ratio<u64> {
    Ratio::new(1, 4)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedTeam {
    pub team: String,
    pub votes: u64,
    pub total: u64,
}

impl RankedTeam {
    pub fn share(&self) -> Ratio<u64> {
        Ratio::new(self.votes, self.total)
    }

    pub fn share_as<T: Scalar>(&self) -> T {
        T::ratio(self.votes, self.total)
    }

    /// Share in whole percent, rounded half up.
    pub fn percent(&self) -> u64 {
        (self.votes * 200 + self.total) / (2 * self.total)
    }
}

/// Category → teams ranked by share. Every declared category has a row,
/// possibly empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentTable {
    threshold: Ratio<u64>,
    rows: BTreeMap<String, Vec<RankedTeam>>,
    order: Vec<String>,
}

fn check_threshold(t: Ratio<u64>) -> Result<()> {
    if *t.numer() == 0 || t > Ratio::from_integer(1) {
        return Err(AssignmentError::ThresholdOutOfRange(t.to_string()));
    }
    Ok(())
}

fn consensus(records: &[EvidenceRecord]) -> Vec<(String, String)> {
    let mut by_unit: BTreeMap<&str, BTreeMap<(&str, &str), u64>> = BTreeMap::new();
    for r in records {
        *by_unit
            .entry(&r.unit_id)
            .or_default()
            .entry((&r.category, &r.team))
            .or_default() += 1;
    }
    by_unit
        .into_values()
        .filter_map(|counts| {
            let best = *counts.values().max()?;
            let mut winners = counts.into_iter().filter(|(_, c)| *c == best);
            let ((cat, team), _) = winners.next()?;
            winners.next().is_none().then(|| (cat.to_owned(), team.to_owned()))
        })
        .collect()
}

/// Computes shares per category and keeps teams at or above `threshold`.
pub fn derive_table(
    evidence: &AssignmentEvidence,
    threshold: Ratio<u64>,
    options: &DeriveOptions,
    taxonomy: &TaxonomyConfig,
) -> Result<AssignmentTable> {
    check_threshold(threshold)?;
    let votes: Vec<(String, String)> = match options.aggregation {
        Aggregation::AllVotes => evidence
            .records
            .iter()
            .map(|r| (r.category.clone(), r.team.clone()))
            .collect(),
        Aggregation::Consensus => consensus(&evidence.records),
    };
    let mut counts: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for (cat, team) in &votes {
        *counts.entry(cat).or_default().entry(team).or_default() += 1;
    }
    let mut rows = BTreeMap::new();
    for cat in &taxonomy.subcategories {
        let Some(per_team) = counts.get(cat.as_str()) else {
            rows.insert(cat.clone(), Vec::new());
            continue;
        };
        let total: u64 = per_team.values().sum();
        let mut ranked: Vec<RankedTeam> = per_team
            .iter()
            .filter(|(_, &v)| Ratio::new(v, total) >= threshold)
            .map(|(team, &v)| RankedTeam {
                team: (*team).to_owned(),
                votes: v,
                total,
            })
            .collect();
        let override_pos = |team: &str| {
            options
                .tie_order
                .get(cat)
                .and_then(|o| o.iter().position(|t| t == team))
                .unwrap_or(usize::MAX)
        };
        ranked.sort_by(|a, b| {
            b.share()
                .cmp(&a.share())
                .then(b.votes.cmp(&a.votes))
                .then(override_pos(&a.team).cmp(&override_pos(&b.team)))
                .then(a.team.cmp(&b.team))
        });
        rows.insert(cat.clone(), ranked);
    }
    Ok(AssignmentTable {
        threshold,
        rows,
        order: taxonomy.subcategories.clone(),
    })
}

/// One team suggested for a unit, rank starting at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamPick {
    pub team: String,
    pub rank: u32,
    /// Whole-percent share; absent for the fallback pick.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub share_percent: Option<u64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

/// Serializable form of an [`AssignmentTable`] row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRowView {
    pub category: String,
    pub teams: Vec<TableTeamView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableTeamView {
    pub rank: u32,
    #[serde(flatten)]
    pub team: RankedTeam,
    pub percent: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableView {
    pub threshold: String,
    pub rows: Vec<TableRowView>,
}

impl AssignmentTable {
    /// Every row with ranks and whole percentages, for machine-readable output.
    pub fn view(&self) -> TableView {
        TableView {
            threshold: self.threshold.to_string(),
            rows: self
                .rows()
                .map(|(category, row)| TableRowView {
                    category: category.to_owned(),
                    teams: row
                        .iter()
                        .enumerate()
                        .map(|(i, t)| TableTeamView {
                            rank: i as u32 + 1,
                            team: t.clone(),
                            percent: t.percent(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn threshold(&self) -> Ratio<u64> {
        self.threshold
    }

    pub fn row(&self, category: &str) -> Option<&[RankedTeam]> {
        self.rows.get(category).map(Vec::as_slice)
    }

    /// Rows in taxonomy declaration order.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &[RankedTeam])> {
        self.order.iter().map(|c| (c.as_str(), self.rows[c].as_slice()))
    }

    /// Writes `category,rank,team,votes,total`; empty rows are omitted.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| AssignmentError::Io(e.to_string());
        writeln!(out, "# threshold: {}", self.threshold).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let csv_io = |e: csv::Error| AssignmentError::Io(e.to_string());
        w.write_record(TABLE_HEADER.split(',')).map_err(csv_io)?;
        for (cat, row) in self.rows() {
            for (i, t) in row.iter().enumerate() {
                w.write_record([
                    cat,
                    &(i + 1).to_string(),
                    &t.team,
                    &t.votes.to_string(),
                    &t.total.to_string(),
                ])
                .map_err(csv_io)?;
            }
        }
        w.flush().map_err(io)
    }

    /// Human-readable table with whole-percent shares.
    pub fn render(&self) -> String {
        let mut t = crate::report::TextTable::new(["Taxonomy category", "Rank", "Team", "Applicability"]);
        for (cat, row) in self.rows() {
            if row.is_empty() {
                t.push(vec![cat.to_owned(), "-".into(), "n.a.".into(), "n.a.".into()]);
            }
            for (i, team) in row.iter().enumerate() {
                t.push(vec![
                    cat.to_owned(),
                    (i + 1).to_string(),
                    team.team.clone(),
                    format!("{}%", team.percent()),
                ]);
            }
        }
        t.render()
    }
}

pub const TABLE_HEADER: &str = "category,rank,team,votes,total";

/// Reads a table file; categories without rows get an empty row.
pub fn load_table<R: Read>(input: R, teams: &TeamRegistry, taxonomy: &TaxonomyConfig) -> Result<AssignmentTable> {
    let src = read_all(input)?;
    let threshold = src
        .lines()
        .find_map(|l| l.trim().strip_prefix("# threshold:"))
        .map(|v| parse_fraction(v).ok_or_else(|| AssignmentError::ThresholdOutOfRange(v.trim().to_owned())))
        .transpose()?
        .unwrap_or_else(default_threshold);
    check_threshold(threshold)?;
    let mut rows: BTreeMap<String, Vec<RankedTeam>> =
        taxonomy.subcategories.iter().map(|c| (c.clone(), Vec::new())).collect();
    for (line, r) in csv_rows(&src, TABLE_HEADER)? {
        let bad = |message: String| AssignmentError::Malformed { line, message };
        let row = rows
            .get_mut(&r[0])
            .ok_or_else(|| AssignmentError::UndeclaredCategory(r[0].to_owned()))?;
        let rank: usize = r[1].parse().map_err(|_| bad(format!("bad rank `{}`", &r[1])))?;
        if rank != row.len() + 1 {
            return Err(bad(format!("rank {rank} out of sequence")));
        }
        if !teams.contains(&r[2]) {
            return Err(AssignmentError::UnknownTeam(r[2].to_owned()));
        }
        let votes: u64 = r[3].parse().map_err(|_| bad(format!("bad vote count `{}`", &r[3])))?;
        let total: u64 = r[4].parse().map_err(|_| bad(format!("bad total `{}`", &r[4])))?;
        if total == 0 || votes > total {
            return Err(bad(format!("votes {votes} / total {total} is not a share")));
        }
        if Ratio::new(votes, total) < threshold {
            return Err(bad(format!("share {votes}/{total} below threshold {threshold}")));
        }
        row.push(RankedTeam {
            team: r[2].to_owned(),
            votes,
            total,
        });
    }
    Ok(AssignmentTable {
        threshold,
        rows,
        order: taxonomy.subcategories.clone(),
    })
}

/// Ranked teams for a category, or `[Meta]` when the row is empty.
pub fn assign(category: &str, table: &AssignmentTable) -> Result<Vec<TeamPick>> {
    let row = table
        .row(category)
        .ok_or_else(|| AssignmentError::UndeclaredCategory(category.to_owned()))?;
    if row.is_empty() {
        return Ok(vec![TeamPick {
            team: META_TEAM.into(),
            rank: 1,
            share_percent: None,
            fallback: true,
        }]);
    }
    Ok(row
        .iter()
        .enumerate()
        .map(|(i, t)| TeamPick {
            team: t.team.clone(),
            rank: i as u32 + 1,
            share_percent: Some(t.percent()),
            fallback: false,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitReport<T> {
    pub cases: u64,
    pub hits: u64,
    pub overall: T,
    /// Index 0 is rank 1; always covers at least ranks 1–3.
    pub per_rank_hits: Vec<u64>,
    pub per_rank: Vec<T>,
}

/// Team ranking for one unit, keyed by its top suggested category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitAssignment {
    pub unit: NeedUnit,
    /// `None` when no category was suggested; the team list is then empty.
    pub category: Option<String>,
    pub teams: Vec<TeamPick>,
}

pub fn assign_suggestion(suggestion: &CategorySuggestion, table: &AssignmentTable) -> Result<UnitAssignment> {
    let category = suggestion.top().map(str::to_owned);
    let teams = match &category {
        Some(c) => assign(c, table)?,
        None => Vec::new(),
    };
    Ok(UnitAssignment {
        unit: suggestion.unit.clone(),
        category,
        teams,
    })
}

impl<T: Scalar> HitReport<T> {
    pub fn render(&self) -> String {
        use crate::report::{fmt4, TextTable};
        let mut t = TextTable::new(["Rank", "Hits", "Rate"]);
        for (i, (h, r)) in self.per_rank_hits.iter().zip(&self.per_rank).enumerate() {
            t.push(vec![(i + 1).to_string(), h.to_string(), fmt4(r.as_f64())]);
        }
        t.push(vec!["any".into(), self.hits.to_string(), fmt4(self.overall.as_f64())]);
        format!("cases: {}\n\n{}", self.cases, t.render())
    }
}

/// Fraction of cases whose truth team appears in the ranked list, overall
/// and per rank.
pub fn hierarchy_hit_rate<T: Scalar, S: AsRef<str>>(cases: &[(Vec<S>, S)]) -> Result<HitReport<T>> {
    if cases.is_empty() {
        return Err(AssignmentError::EmptyInput);
    }
    let depth = cases.iter().map(|(r, _)| r.len()).max().unwrap_or(0).max(3);
    let mut per_rank_hits = vec![0u64; depth];
    for (ranked, truth) in cases {
        if let Some(pos) = ranked.iter().position(|t| t.as_ref() == truth.as_ref()) {
            per_rank_hits[pos] += 1;
        }
    }
    let n = cases.len() as u64;
    let hits: u64 = per_rank_hits.iter().sum();
    Ok(HitReport {
        cases: n,
        hits,
        overall: T::ratio(hits, n),
        per_rank: per_rank_hits.iter().map(|&h| T::ratio(h, n)).collect(),
        per_rank_hits,
    })
}
