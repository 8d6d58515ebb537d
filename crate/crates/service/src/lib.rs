//! HTTP interface for the triage workflow.
//!
//! All mutations go through the core state machine; concurrent decisions on
//! one case are serialized by the store lock and arbitrated by the case
//! version the client sends back.

mod api;
mod error;

use std::net::SocketAddr;
use std::sync::Arc;

use needdesk_core::assignment::{TeamRegistry, TieOrder};
use needdesk_core::taxonomy::TaxonomyConfig;
use needdesk_core::workflow::automation::Automation;
use needdesk_core::workflow::store::CaseStore;
use needdesk_core::workflow::{WorkflowContext, WorkflowPolicy};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::RwLock;

pub use api::{
    AgreementDocument, CaseDetail, CasePage, CaseSummary, DecisionRequest, DeriveRequest, IngestRequest,
    IngestResponse, StatsDocument,
};
pub use error::ApiError;

/// Header carrying the reviewer identifier for decisions.
pub const ACTOR_HEADER: &str = "x-actor";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(#[source] std::io::Error),
}

/// Reference data decisions are validated against; fixed for the lifetime
/// of the service.
#[derive(Debug, Clone)]
pub struct Reference {
    pub taxonomy: TaxonomyConfig,
    pub teams: TeamRegistry,
    pub tie_order: TieOrder,
    pub policy: WorkflowPolicy,
}

impl Reference {
    pub fn context(&self) -> WorkflowContext<'_> {
        WorkflowContext {
            taxonomy: &self.taxonomy,
            teams: &self.teams,
            policy: self.policy,
        }
    }
}

#[derive(Debug)]
struct Live {
    store: CaseStore,
    automation: Automation,
}

#[derive(Debug)]
struct Inner {
    reference: Reference,
    live: RwLock<Live>,
}

/// Shared service state; cheap to clone.
#[derive(Debug, Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(reference: Reference, store: CaseStore, automation: Automation) -> Self {
        Self(Arc::new(Inner {
            reference,
            live: RwLock::new(Live { store, automation }),
        }))
    }
}

pub fn router(state: AppState) -> axum::Router {
    api::routes().with_state(state)
}

/// Binds the listening socket, reporting a busy port as a startup error.
pub async fn bind(addr: SocketAddr) -> Result<TcpListener, ServiceError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })
}

pub async fn serve(listener: TcpListener, state: AppState) -> Result<(), ServiceError> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "triage service listening");
    }
    axum::serve(listener, router(state)).await.map_err(ServiceError::Serve)
}
