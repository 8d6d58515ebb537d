use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::HeaderMap;
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use needdesk_core::assignment::{self, Aggregation, DeriveOptions, HitReport, TableView};
use needdesk_core::corpus::{self, ColumnMapping, ImportFormat, ImportReport, StoreKind};
use needdesk_core::detect::NeedKind;
use needdesk_core::sources;
use needdesk_core::workflow::reports::{self, AddressabilityReport, StatsReport};
use needdesk_core::workflow::store::IngestSummary;
use needdesk_core::workflow::{Action, ActionKind, Actor, CaseState, TriageCase};
use needdesk_core::agreement::AgreementRow;
use serde::{Deserialize, Serialize};

use crate::{ApiError, AppState, ACTOR_HEADER};

const DEFAULT_PER_PAGE: usize = 50;
const MAX_PER_PAGE: usize = 500;

pub(crate) fn routes() -> Router<AppState> {
    Router::new()
        .route("/cases", get(list_cases))
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/decision", post(decide))
        .route("/reports/addressability", get(addressability))
        .route("/reports/agreement", get(agreement))
        .route("/reports/stats", get(stats))
        .route("/admin/ingest", post(ingest))
        .route("/admin/derive-table", post(derive_table))
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

#[derive(Debug, Default, Deserialize)]
struct ListQuery {
    state: Option<String>,
    app: Option<String>,
    store: Option<String>,
    page: Option<usize>,
    per_page: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub case_id: String,
    pub state: CaseState,
    pub app_id: String,
    pub store: StoreKind,
    pub filter_label: Option<NeedKind>,
    pub confirmed_label: Option<NeedKind>,
    pub version: u64,
    pub created_at: DateTime<Utc>,
    pub text: String,
}

impl From<&TriageCase> for CaseSummary {
    fn from(c: &TriageCase) -> Self {
        Self {
            case_id: c.case_id.clone(),
            state: c.state,
            app_id: c.unit.review.app_id.clone(),
            store: c.unit.review.store,
            filter_label: c.filter_label,
            confirmed_label: c.confirmed_label,
            version: c.version,
            created_at: c.created_at,
            text: c.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasePage {
    pub total: usize,
    pub page: usize,
    pub per_page: usize,
    pub cases: Vec<CaseSummary>,
}

async fn list_cases(
    State(state): State<AppState>,
    query: Result<Query<ListQuery>, QueryRejection>,
) -> Result<Json<CasePage>, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let wanted_state = q
        .state
        .as_deref()
        .map(str::parse::<CaseState>)
        .transpose()
        .map_err(|_| ApiError::bad_request(format!("unknown state `{}`", q.state.as_deref().unwrap_or_default())))?;
    let wanted_store = q
        .store
        .as_deref()
        .map(str::parse::<StoreKind>)
        .transpose()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let page = q.page.unwrap_or(1).max(1);
    let per_page = q.per_page.unwrap_or(DEFAULT_PER_PAGE).clamp(1, MAX_PER_PAGE);

    let live = state.0.live.read().await;
    let matching: Vec<&TriageCase> = live
        .store
        .cases()
        .filter(|c| wanted_state.is_none_or(|s| c.state == s))
        .filter(|c| wanted_store.is_none_or(|s| c.unit.review.store == s))
        .filter(|c| q.app.as_deref().is_none_or(|a| c.unit.review.app_id == a))
        .collect();
    let cases = matching
        .iter()
        .skip((page - 1) * per_page)
        .take(per_page)
        .map(|c| CaseSummary::from(*c))
        .collect();
    Ok(Json(CasePage {
        total: matching.len(),
        page,
        per_page,
        cases,
    }))
}

/// A case with the actions currently open to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDetail {
    pub case: TriageCase,
    pub legal_actions: Vec<ActionKind>,
}

impl CaseDetail {
    fn of(case: TriageCase) -> Self {
        Self {
            legal_actions: case.legal_actions(),
            case,
        }
    }
}

async fn get_case(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<CaseDetail>, ApiError> {
    let live = state.0.live.read().await;
    let case = live
        .store
        .get(&id)
        .ok_or_else(|| ApiError::from(needdesk_core::workflow::WorkflowError::NotFound(id)))?;
    Ok(Json(CaseDetail::of(case.clone())))
}

/// `{"version": 3, "action": "confirm_need", "payload": {"kind": "explicit"}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub version: u64,
    #[serde(flatten)]
    pub action: Action,
}

fn actor(headers: &HeaderMap) -> Result<Actor, ApiError> {
    let raw = headers
        .get(ACTOR_HEADER)
        .ok_or_else(|| ApiError::bad_request(format!("missing `{ACTOR_HEADER}` header")))?;
    let id = raw
        .to_str()
        .map_err(|_| ApiError::bad_request(format!("`{ACTOR_HEADER}` is not valid text")))?
        .trim();
    if id.is_empty() || id.eq_ignore_ascii_case("system") {
        return Err(ApiError::bad_request(format!("`{ACTOR_HEADER}` must name a reviewer")));
    }
    Ok(Actor::human(id))
}

async fn decide(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<DecisionRequest>, JsonRejection>,
) -> Result<Json<CaseDetail>, ApiError> {
    let actor = actor(&headers)?;
    let req = body(payload)?;
    let ctx = state.0.reference.context();
    let now = Utc::now();
    let mut guard = state.0.live.write().await;
    let live = &mut *guard;
    live.store.apply(&id, &actor, req.action, req.version, now, &ctx)?;
    let case = live.store.automate(&id, &live.automation, now, &ctx)?;
    live.store.write_snapshot()?;
    Ok(Json(CaseDetail::of(case)))
}

async fn addressability(State(state): State<AppState>) -> Json<AddressabilityReport<f64>> {
    let live = state.0.live.read().await;
    let cases: Vec<TriageCase> = live.store.cases().cloned().collect();
    Json(reports::addressability_report(&cases))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementDocument {
    /// Detection filter against the reviewers' need verdicts.
    pub filter: AgreementRow,
}

async fn agreement(State(state): State<AppState>) -> Result<Json<AgreementDocument>, ApiError> {
    let live = state.0.live.read().await;
    let cases: Vec<TriageCase> = live.store.cases().cloned().collect();
    let filter = reports::filter_agreement(&cases).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    Ok(Json(AgreementDocument { filter }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDocument {
    #[serde(flatten)]
    pub stats: StatsReport,
    /// How often the confirmed team was in the suggested ranking, per rank;
    /// absent until a team has been confirmed.
    pub team_hits: Option<HitReport<f64>>,
}

async fn stats(State(state): State<AppState>) -> Json<StatsDocument> {
    let live = state.0.live.read().await;
    let cases: Vec<TriageCase> = live.store.cases().cloned().collect();
    let ranked: Vec<(Vec<String>, String)> = cases
        .iter()
        .filter_map(|c| {
            let ranking = c.team_ranking.as_ref()?.iter().map(|p| p.team.clone()).collect();
            Some((ranking, c.confirmed_team.clone()?))
        })
        .collect();
    Json(StatsDocument {
        stats: reports::stats_report(&cases),
        team_hits: assignment::hierarchy_hit_rate(&ranked).ok(),
    })
}

/// A store export to import; `mapping` is the column mapping in TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestRequest {
    pub format: ImportFormat,
    pub store: StoreKind,
    #[serde(default)]
    pub mapping: Option<String>,
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestResponse {
    pub import: ImportReport,
    pub cases: IngestSummary,
}

async fn ingest(
    State(state): State<AppState>,
    payload: Result<Json<IngestRequest>, JsonRejection>,
) -> Result<Json<IngestResponse>, ApiError> {
    let req = body(payload)?;
    let mapping = match &req.mapping {
        Some(src) => ColumnMapping::from_toml(src).map_err(|e| ApiError::unprocessable(e.to_string()))?,
        None => ColumnMapping::default(),
    };
    let (reviews, import) = corpus::import_reviews(req.data.as_bytes(), req.format, req.store, &mapping)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let reviews = corpus::dedupe(reviews);
    let ctx = state.0.reference.context();
    let mut guard = state.0.live.write().await;
    let live = &mut *guard;
    for response in sources::past_responses_from_corpus(&reviews) {
        if !live.automation.responses.iter().any(|r| r.review == response.review) {
            live.automation.responses.push(response);
        }
    }
    let cases = live.store.ingest(&reviews, &live.automation, Utc::now(), &ctx)?;
    Ok(Json(IngestResponse { import, cases }))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeriveRequest {
    /// `1/4`, `0.25` or `25%`; defaults to one quarter.
    #[serde(default)]
    pub threshold: Option<String>,
    #[serde(default)]
    pub aggregation: Aggregation,
}

/// Rebuilds the assignment table from confirmed cases and uses it for
/// subsequent team rankings.
async fn derive_table(
    State(state): State<AppState>,
    payload: Result<Json<DeriveRequest>, JsonRejection>,
) -> Result<Json<TableView>, ApiError> {
    let req = body(payload)?;
    let threshold = match &req.threshold {
        Some(t) => assignment::parse_fraction(t).ok_or_else(|| ApiError::unprocessable(format!("invalid threshold `{t}`")))?,
        None => assignment::default_threshold(),
    };
    let reference = &state.0.reference;
    let mut live = state.0.live.write().await;
    let cases: Vec<TriageCase> = live.store.cases().cloned().collect();
    let evidence = reports::export_evidence(&cases, &reference.teams, &reference.taxonomy)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let options = DeriveOptions {
        aggregation: req.aggregation,
        tie_order: reference.tie_order.clone(),
    };
    let table = assignment::derive_table(&evidence, threshold, &options, &reference.taxonomy)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let view = table.view();
    live.automation.table = table;
    Ok(Json(view))
}
