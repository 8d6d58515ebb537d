//! Triage state machine with mandatory human checkpoints.
//!
//! Every mutation of a [`TriageCase`] goes through [`advance`], which checks
//! the optimistic version, the actor kind, the transition table and the
//! action's guards, then appends an [`AuditEvent`]. Cases can be rebuilt
//! from their audit trail with [`replay`].

pub mod automation;
pub mod reports;
pub mod store;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{TeamPick, TeamRegistry};
use crate::corpus::{NeedUnit, Review};
use crate::detect::{MatchHit, NeedKind};
use crate::sources::{Resolution, SourceCandidate, SourceTier};
use crate::taxonomy::{CategorySuggestion, TaxonomyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseState {
    Ingested,
    AutoDetected,
    NeedConfirmed,
    NoNeed,
    Categorized,
    TeamAssigned,
    SourceProposed,
    Answered,
    Unresolvable,
}

impl CaseState {
    pub const ALL: [CaseState; 9] = [
        Self::Ingested,
        Self::AutoDetected,
        Self::NeedConfirmed,
        Self::NoNeed,
        Self::Categorized,
        Self::TeamAssigned,
        Self::SourceProposed,
        Self::Answered,
        Self::Unresolvable,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(self, Self::NoNeed | Self::Answered | Self::Unresolvable)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ingested => "Ingested",
            Self::AutoDetected => "AutoDetected",
            Self::NeedConfirmed => "NeedConfirmed",
            Self::NoNeed => "NoNeed",
            Self::Categorized => "Categorized",
            Self::TeamAssigned => "TeamAssigned",
            Self::SourceProposed => "SourceProposed",
            Self::Answered => "Answered",
            Self::Unresolvable => "Unresolvable",
        }
    }
}

impl fmt::Display for CaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown case state `{s}`"))
    }
}

/// How a confirmed need was finally handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseResolution {
    Answered,
    AlreadySolved,
    WillBeSolved,
    Unresolvable,
}

impl CaseResolution {
    pub const ALL: [CaseResolution; 4] = [Self::Answered, Self::AlreadySolved, Self::WillBeSolved, Self::Unresolvable];

    pub fn is_resolved(self) -> bool {
        self != Self::Unresolvable
    }
}

/// Who performed an event. Serialized as `system` or `human:<id>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Actor {
    System,
    Human(String),
}

impl Actor {
    pub fn human(id: impl Into<String>) -> Self {
        Self::Human(id.into())
    }

    pub fn is_human(&self) -> bool {
        matches!(self, Self::Human(_))
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::System => f.write_str("system"),
            Self::Human(id) => write!(f, "human:{id}"),
        }
    }
}

impl From<Actor> for String {
    fn from(a: Actor) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for Actor {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        match s.strip_prefix("human:") {
            _ if s == "system" => Ok(Self::System),
            Some(id) if !id.trim().is_empty() => Ok(Self::Human(id.trim().to_owned())),
            _ => Err(format!("actor must be `system` or `human:<id>`, got `{s}`")),
        }
    }
}

/// Payload-free action names, used by the transition table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    AutoDetect,
    ConfirmNeed,
    RejectNeed,
    SuggestCategory,
    ConfirmCategory,
    RankTeams,
    ConfirmTeam,
    ProposeSources,
    ChooseSource,
    DraftResponse,
    MarkUnresolvable,
}

impl ActionKind {
    pub const ALL: [ActionKind; 11] = [
        Self::AutoDetect,
        Self::ConfirmNeed,
        Self::RejectNeed,
        Self::SuggestCategory,
        Self::ConfirmCategory,
        Self::RankTeams,
        Self::ConfirmTeam,
        Self::ProposeSources,
        Self::ChooseSource,
        Self::DraftResponse,
        Self::MarkUnresolvable,
    ];

    /// System actions produce suggestions; everything else is a human checkpoint.
    pub fn is_system(self) -> bool {
        matches!(
            self,
            Self::AutoDetect | Self::SuggestCategory | Self::RankTeams | Self::ProposeSources
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AutoDetect => "auto_detect",
            Self::ConfirmNeed => "confirm_need",
            Self::RejectNeed => "reject_need",
            Self::SuggestCategory => "suggest_category",
            Self::ConfirmCategory => "confirm_category",
            Self::RankTeams => "rank_teams",
            Self::ConfirmTeam => "confirm_team",
            Self::ProposeSources => "propose_sources",
            Self::ChooseSource => "choose_source",
            Self::DraftResponse => "draft_response",
            Self::MarkUnresolvable => "mark_unresolvable",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An event with its payload. Serialized as `{"action": ..., "payload": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", content = "payload", rename_all = "snake_case")]
pub enum Action {
    AutoDetect {
        label: NeedKind,
        #[serde(default)]
        hits: Vec<MatchHit>,
    },
    ConfirmNeed {
        kind: NeedKind,
    },
    RejectNeed,
    SuggestCategory {
        suggestion: CategorySuggestion,
    },
    ConfirmCategory {
        category: String,
    },
    RankTeams {
        teams: Vec<TeamPick>,
    },
    ConfirmTeam {
        team: String,
    },
    ProposeSources {
        resolution: Resolution,
    },
    ChooseSource {
        rank: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        status: Option<CaseResolution>,
    },
    DraftResponse {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        status: Option<CaseResolution>,
    },
    MarkUnresolvable {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Self::AutoDetect { .. } => ActionKind::AutoDetect,
            Self::ConfirmNeed { .. } => ActionKind::ConfirmNeed,
            Self::RejectNeed => ActionKind::RejectNeed,
            Self::SuggestCategory { .. } => ActionKind::SuggestCategory,
            Self::ConfirmCategory { .. } => ActionKind::ConfirmCategory,
            Self::RankTeams { .. } => ActionKind::RankTeams,
            Self::ConfirmTeam { .. } => ActionKind::ConfirmTeam,
            Self::ProposeSources { .. } => ActionKind::ProposeSources,
            Self::ChooseSource { .. } => ActionKind::ChooseSource,
            Self::DraftResponse { .. } => ActionKind::DraftResponse,
            Self::MarkUnresolvable { .. } => ActionKind::MarkUnresolvable,
        }
    }
}

/// The transition table, ignoring payload guards.
pub fn transition(state: CaseState, action: ActionKind) -> Option<CaseState> {
    use ActionKind as A;
    use CaseState as S;
    Some(match (state, action) {
        (S::Ingested, A::AutoDetect) => S::AutoDetected,
        (S::AutoDetected, A::ConfirmNeed) => S::NeedConfirmed,
        (S::AutoDetected, A::RejectNeed) => S::NoNeed,
        (S::NeedConfirmed, A::SuggestCategory) => S::NeedConfirmed,
        (S::NeedConfirmed, A::ConfirmCategory) => S::Categorized,
        (S::Categorized, A::RankTeams) => S::Categorized,
        (S::Categorized, A::ConfirmTeam) => S::TeamAssigned,
        (S::TeamAssigned, A::ProposeSources) => S::SourceProposed,
        (S::SourceProposed, A::ChooseSource | A::DraftResponse) => S::Answered,
        (S::SourceProposed, A::MarkUnresolvable) => S::Unresolvable,
        _ => return None,
    })
}

/// A human verdict awaiting a second reviewer under dual review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingReview {
    pub actor: Actor,
    /// `None` records a rejection.
    pub kind: Option<NeedKind>,
}

/// Everything needed to open a case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSeed {
    pub case_id: String,
    pub unit: NeedUnit,
    pub text: String,
    pub language: String,
    pub created_at: DateTime<Utc>,
}

impl CaseSeed {
    /// A case covering the whole review, keyed by its unit id.
    pub fn for_review(review: &Review) -> Self {
        let unit = NeedUnit::whole(review.key());
        Self {
            case_id: unit.unit_id.clone(),
            unit,
            text: review.matched_text(),
            language: review.language.clone(),
            created_at: review.created_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub case_id: String,
    /// Case version after this event; gapless from 1.
    pub version: u64,
    pub actor: Actor,
    #[serde(flatten)]
    pub action: Action,
    pub at: DateTime<Utc>,
    pub from: CaseState,
    pub to: CaseState,
    /// Set when a human picked something other than the top suggestion.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub overrides_suggestion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageCase {
    pub case_id: String,
    pub unit: NeedUnit,
    pub text: String,
    pub language: String,
    pub created_at: DateTime<Utc>,
    pub state: CaseState,
    pub filter_label: Option<NeedKind>,
    #[serde(default)]
    pub hits: Vec<MatchHit>,
    pub confirmed_label: Option<NeedKind>,
    pub pending_review: Option<PendingReview>,
    pub suggestion: Option<CategorySuggestion>,
    pub confirmed_category: Option<String>,
    pub team_ranking: Option<Vec<TeamPick>>,
    pub confirmed_team: Option<String>,
    pub source_candidates: Option<Resolution>,
    pub chosen_source: Option<SourceCandidate>,
    pub response_text: Option<String>,
    pub resolution: Option<CaseResolution>,
    pub version: u64,
    pub audit: Vec<AuditEvent>,
}

impl TriageCase {
    pub fn new(seed: CaseSeed) -> Self {
        Self {
            case_id: seed.case_id,
            unit: seed.unit,
            text: seed.text,
            language: seed.language,
            created_at: seed.created_at,
            state: CaseState::Ingested,
            filter_label: None,
            hits: Vec::new(),
            confirmed_label: None,
            pending_review: None,
            suggestion: None,
            confirmed_category: None,
            team_ranking: None,
            confirmed_team: None,
            source_candidates: None,
            chosen_source: None,
            response_text: None,
            resolution: None,
            version: 0,
            audit: Vec::new(),
        }
    }

    pub fn seed(&self) -> CaseSeed {
        CaseSeed {
            case_id: self.case_id.clone(),
            unit: self.unit.clone(),
            text: self.text.clone(),
            language: self.language.clone(),
            created_at: self.created_at,
        }
    }

    /// Actions whose transition exists from the current state and whose
    /// guards do not depend on payload.
    pub fn legal_actions(&self) -> Vec<ActionKind> {
        ActionKind::ALL
            .into_iter()
            .filter(|&a| transition(self.state, a).is_some() && self.phase_allows(a))
            .collect()
    }

    /// Guards on the self-loop stages: a suggestion must exist before it
    /// can be confirmed and is produced only once.
    fn phase_allows(&self, action: ActionKind) -> bool {
        match action {
            ActionKind::SuggestCategory => self.suggestion.is_none(),
            ActionKind::ConfirmCategory => self.suggestion.is_some(),
            ActionKind::RankTeams => self.team_ranking.is_none(),
            ActionKind::ConfirmTeam => self.team_ranking.is_some(),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowPolicy {
    /// Require two distinct reviewers to agree at the need gate.
    #[serde(default)]
    pub dual_review: bool,
}

/// Reference data that human decisions are validated against.
#[derive(Debug, Clone, Copy)]
pub struct WorkflowContext<'a> {
    pub taxonomy: &'a TaxonomyConfig,
    pub teams: &'a TeamRegistry,
    pub policy: WorkflowPolicy,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkflowError {
    #[error("version conflict on case `{case_id}`: expected {expected}, current {current}")]
    Conflict { case_id: String, expected: u64, current: u64 },
    #[error("illegal transition: `{action}` in state {state}")]
    IllegalTransition { state: CaseState, action: ActionKind },
    #[error("`{action}` must be performed by {required}")]
    WrongActor { action: ActionKind, required: &'static str },
    #[error("invalid `{action}`: {reason}")]
    Invalid { action: ActionKind, reason: String },
    #[error("case `{0}` not found")]
    NotFound(String),
    #[error("case `{0}` already exists")]
    Duplicate(String),
}

impl WorkflowError {
    fn invalid(action: ActionKind, reason: impl Into<String>) -> Self {
        Self::Invalid {
            action,
            reason: reason.into(),
        }
    }
}

/// Applies one event to a case and returns the updated case.
pub fn advance(
    case: &TriageCase,
    actor: &Actor,
    action: Action,
    expected_version: u64,
    at: DateTime<Utc>,
    ctx: &WorkflowContext<'_>,
) -> Result<TriageCase, WorkflowError> {
    let kind = action.kind();
    if expected_version != case.version {
        return Err(WorkflowError::Conflict {
            case_id: case.case_id.clone(),
            expected: expected_version,
            current: case.version,
        });
    }
    let target = transition(case.state, kind)
        .filter(|_| case.phase_allows(kind))
        .ok_or(WorkflowError::IllegalTransition {
            state: case.state,
            action: kind,
        })?;
    match (kind.is_system(), actor.is_human()) {
        (true, true) => {
            return Err(WorkflowError::WrongActor {
                action: kind,
                required: "the system",
            })
        }
        (false, false) => {
            return Err(WorkflowError::WrongActor {
                action: kind,
                required: "a human reviewer",
            })
        }
        _ => {}
    }

    let mut next = case.clone();
    let mut to = target;
    let mut overrides = false;
    match &action {
        Action::AutoDetect { label, hits } => {
            next.filter_label = Some(*label);
            next.hits = hits.clone();
        }
        Action::ConfirmNeed { kind: label } => {
            if !matches!(label, NeedKind::Explicit | NeedKind::Implicit) {
                return Err(WorkflowError::invalid(kind, "a confirmed need must be explicit or implicit"));
            }
            to = need_gate(&mut next, actor, Some(*label), ctx, kind)?;
            if to == CaseState::NeedConfirmed {
                next.confirmed_label = Some(*label);
            }
        }
        Action::RejectNeed => {
            to = need_gate(&mut next, actor, None, ctx, kind)?;
        }
        Action::SuggestCategory { suggestion } => {
            if suggestion.unit != case.unit {
                return Err(WorkflowError::invalid(kind, "suggestion is for a different unit"));
            }
            next.suggestion = Some(suggestion.clone());
        }
        Action::ConfirmCategory { category } => {
            if !ctx.taxonomy.is_declared(category) {
                return Err(WorkflowError::invalid(kind, format!("category `{category}` is not declared")));
            }
            overrides = case.suggestion.as_ref().and_then(|s| s.top()) != Some(category.as_str());
            next.confirmed_category = Some(category.clone());
        }
        Action::RankTeams { teams } => {
            if teams.is_empty() {
                return Err(WorkflowError::invalid(kind, "team ranking is empty"));
            }
            next.team_ranking = Some(teams.clone());
        }
        Action::ConfirmTeam { team } => {
            if !ctx.teams.contains(team) {
                return Err(WorkflowError::invalid(kind, format!("team `{team}` is not registered")));
            }
            overrides = case
                .team_ranking
                .as_ref()
                .and_then(|r| r.first())
                .map(|p| p.team.as_str())
                != Some(team.as_str());
            next.confirmed_team = Some(team.clone());
        }
        Action::ProposeSources { resolution } => {
            if resolution.candidates.is_empty() {
                return Err(WorkflowError::invalid(kind, "no source candidates"));
            }
            next.source_candidates = Some(resolution.clone());
        }
        Action::ChooseSource { rank, status } => {
            let candidate = case
                .source_candidates
                .as_ref()
                .and_then(|r| r.candidates.iter().find(|c| c.rank == *rank))
                .ok_or_else(|| WorkflowError::invalid(kind, format!("no candidate with rank {rank}")))?;
            if candidate.tier == SourceTier::NewResponse {
                return Err(WorkflowError::invalid(kind, "a new response must be drafted"));
            }
            overrides = *rank != 1;
            next.chosen_source = Some(candidate.clone());
            next.resolution = Some(answered_status(*status, kind)?);
        }
        Action::DraftResponse { text, status } => {
            if text.trim().is_empty() {
                return Err(WorkflowError::invalid(kind, "response text is empty"));
            }
            overrides = case
                .source_candidates
                .as_ref()
                .is_some_and(|r| r.tier != SourceTier::NewResponse);
            next.response_text = Some(text.clone());
            next.resolution = Some(answered_status(*status, kind)?);
        }
        Action::MarkUnresolvable { .. } => {
            next.resolution = Some(CaseResolution::Unresolvable);
        }
    }

    next.state = to;
    next.version = case.version + 1;
    next.audit.push(AuditEvent {
        case_id: case.case_id.clone(),
        version: next.version,
        actor: actor.clone(),
        action,
        at,
        from: case.state,
        to,
        overrides_suggestion: overrides,
    });
    Ok(next)
}

fn answered_status(status: Option<CaseResolution>, kind: ActionKind) -> Result<CaseResolution, WorkflowError> {
    match status.unwrap_or(CaseResolution::Answered) {
        CaseResolution::Unresolvable => Err(WorkflowError::invalid(kind, "use mark_unresolvable instead")),
        s => Ok(s),
    }
}

/// Handles single and dual review at the need gate; returns the new state.
fn need_gate(
    next: &mut TriageCase,
    actor: &Actor,
    verdict: Option<NeedKind>,
    ctx: &WorkflowContext<'_>,
    kind: ActionKind,
) -> Result<CaseState, WorkflowError> {
    let decided = if verdict.is_some() {
        CaseState::NeedConfirmed
    } else {
        CaseState::NoNeed
    };
    if !ctx.policy.dual_review {
        return Ok(decided);
    }
    match next.pending_review.take() {
        Some(p) if p.actor == *actor => {
            next.pending_review = Some(p);
            Err(WorkflowError::invalid(kind, "a second, different reviewer must confirm"))
        }
        Some(p) if p.kind == verdict => Ok(decided),
        _ => {
            // First opinion, or a disagreement that replaces the earlier one.
            next.pending_review = Some(PendingReview {
                actor: actor.clone(),
                kind: verdict,
            });
            Ok(CaseState::AutoDetected)
        }
    }
}

/// Rebuilds a case from its seed and event sequence.
pub fn replay(seed: CaseSeed, events: &[AuditEvent], ctx: &WorkflowContext<'_>) -> Result<TriageCase, WorkflowError> {
    let mut case = TriageCase::new(seed);
    for e in events {
        case = advance(&case, &e.actor, e.action.clone(), case.version, e.at, ctx)?;
    }
    Ok(case)
}
