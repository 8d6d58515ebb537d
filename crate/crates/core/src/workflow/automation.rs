//! Produces the system-side events: detection, category suggestion, team
//! ranking and source proposal.

use chrono::{DateTime, Utc};

use super::{advance, Action, Actor, CaseState, TriageCase, WorkflowContext, WorkflowError};
use crate::assignment::{self, AssignmentTable};
use crate::detect::{self, Lexicon};
use crate::sources::{self, ArticleIndex, PastResponse, SourcePolicy, SourceQuery};
use crate::taxonomy::{self, CategoryFilter};

/// Bundles the reference data the system stages draw on.
#[derive(Debug, Clone)]
pub struct Automation {
    pub lexicon: Lexicon,
    pub filter: CategoryFilter,
    pub table: AssignmentTable,
    pub articles: ArticleIndex,
    pub responses: Vec<PastResponse>,
    pub source_policy: SourcePolicy,
}

impl Automation {
    /// The system action due for `case`, if any.
    pub fn next_action(&self, case: &TriageCase) -> Option<Action> {
        match case.state {
            CaseState::Ingested => {
                let hits = detect::match_text(&case.text, &case.language, &self.lexicon);
                Some(Action::AutoDetect {
                    label: detect::label_unit(&hits),
                    hits,
                })
            }
            CaseState::NeedConfirmed if case.suggestion.is_none() => Some(Action::SuggestCategory {
                suggestion: taxonomy::classify(&case.unit, &case.text, &self.filter),
            }),
            CaseState::Categorized if case.team_ranking.is_none() => {
                let category = case.confirmed_category.as_deref()?;
                assignment::assign(category, &self.table)
                    .ok()
                    .map(|teams| Action::RankTeams { teams })
            }
            CaseState::TeamAssigned => {
                let query = SourceQuery {
                    text: &case.text,
                    review: &case.unit.review,
                };
                sources::resolve(query, &self.articles, &self.responses, &self.source_policy)
                    .ok()
                    .map(|resolution| Action::ProposeSources { resolution })
            }
            _ => None,
        }
    }

    /// Applies system actions until the case waits on a human.
    pub fn run(&self, mut case: TriageCase, at: DateTime<Utc>, ctx: &WorkflowContext<'_>) -> Result<TriageCase, WorkflowError> {
        while let Some(action) = self.next_action(&case) {
            case = advance(&case, &Actor::System, action, case.version, at, ctx)?;
        }
        Ok(case)
    }
}
