//! Reference data shipped with the crate, embedded at compile time.

use crate::assignment::{self, AssignmentError, AssignmentEvidence, AssignmentTable, DeriveOptions, TeamRegistry, TieOrder};
use crate::detect::{self, Lexicon, LexiconError};
use crate::sources::{self, ArticleIndex, SourceError};
use crate::taxonomy::{self, CategoryFilter, Granularity, TaxonomyConfig, TaxonomyError};

pub const LEXICON: &str = include_str!("../data/lexicon.csv");
pub const TAXONOMY: &str = include_str!("../data/taxonomy.csv");
pub const RULES_FINE: &str = include_str!("../data/rules_fine.csv");
pub const RULES_BROAD: &str = include_str!("../data/rules_broad.csv");
pub const TEAMS: &str = include_str!("../data/teams.csv");
pub const TIE_ORDER: &str = include_str!("../data/tie_order.csv");
pub const ASSIGNMENT_EVIDENCE: &str = include_str!("../data/assignment_evidence.csv");
pub const ASSIGNMENT_TABLE: &str = include_str!("../data/assignment_table.csv");
pub const ARTICLES: &str = include_str!("../data/articles.jsonl");

pub fn lexicon() -> Result<Lexicon, LexiconError> {
    detect::load_lexicon(LEXICON.as_bytes())
}

pub fn taxonomy() -> Result<TaxonomyConfig, TaxonomyError> {
    taxonomy::load_taxonomy(TAXONOMY.as_bytes())
}

pub fn filter(granularity: Granularity, config: &TaxonomyConfig) -> Result<CategoryFilter, TaxonomyError> {
    let src = match granularity {
        Granularity::Fine => RULES_FINE,
        Granularity::Broad => RULES_BROAD,
    };
    taxonomy::load_filter(src.as_bytes(), granularity, config)
}

pub fn teams() -> Result<TeamRegistry, AssignmentError> {
    assignment::load_teams(TEAMS.as_bytes())
}

pub fn tie_order(teams: &TeamRegistry) -> Result<TieOrder, AssignmentError> {
    assignment::load_tie_order(TIE_ORDER.as_bytes(), teams)
}

pub fn evidence(teams: &TeamRegistry, config: &TaxonomyConfig) -> Result<AssignmentEvidence, AssignmentError> {
    assignment::load_evidence(ASSIGNMENT_EVIDENCE.as_bytes(), teams, config)
}

pub fn table(teams: &TeamRegistry, config: &TaxonomyConfig) -> Result<AssignmentTable, AssignmentError> {
    assignment::load_table(ASSIGNMENT_TABLE.as_bytes(), teams, config)
}

/// Derives the table from the shipped evidence and tie order.
pub fn derived_table(teams: &TeamRegistry, config: &TaxonomyConfig) -> Result<AssignmentTable, AssignmentError> {
    let options = DeriveOptions {
        tie_order: tie_order(teams)?,
        ..Default::default()
    };
    assignment::derive_table(&evidence(teams, config)?, assignment::default_threshold(), &options, config)
}

pub fn articles() -> Result<ArticleIndex, SourceError> {
    sources::load_articles(ARTICLES.as_bytes())
}
