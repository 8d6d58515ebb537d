//! Event-sourced persistence: an append-only `events.jsonl` log plus a
//! derived `snapshot.json` that is replaced atomically.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::automation::Automation;
use super::{advance, Action, Actor, CaseSeed, CaseState, TriageCase, WorkflowContext, WorkflowError};
use crate::corpus::Review;
use crate::jsonl::{self, JsonlError};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Corrupt {
        path: PathBuf,
        #[source]
        source: JsonlError,
    },
    #[error("{path}: replay failed: {source}")]
    Replay {
        path: PathBuf,
        #[source]
        source: WorkflowError,
    },
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Created {
        seed: CaseSeed,
    },
    Applied {
        case_id: String,
        actor: Actor,
        event: Action,
        at: DateTime<Utc>,
    },
}

/// Outcome of opening cases for a batch of reviews.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub created: Vec<String>,
    /// Reviews that already had a case.
    pub existing: Vec<String>,
}

#[derive(Debug)]
pub struct CaseStore {
    dir: PathBuf,
    cases: BTreeMap<String, TriageCase>,
    log: BufWriter<File>,
}

fn replay_log(events: &Path, ctx: &WorkflowContext<'_>) -> Result<BTreeMap<String, TriageCase>, StoreError> {
    let mut cases = BTreeMap::new();
    if !events.exists() {
        return Ok(cases);
    }
    let file = File::open(events).map_err(|source| StoreError::Io {
        path: events.to_path_buf(),
        source,
    })?;
    let records: Vec<LogRecord> = jsonl::read(BufReader::new(file)).map_err(|source| StoreError::Corrupt {
        path: events.to_path_buf(),
        source,
    })?;
    let replay_err = |source| StoreError::Replay {
        path: events.to_path_buf(),
        source,
    };
    for rec in records {
        match rec {
            LogRecord::Created { seed } => {
                if cases.contains_key(&seed.case_id) {
                    return Err(replay_err(WorkflowError::Duplicate(seed.case_id)));
                }
                cases.insert(seed.case_id.clone(), TriageCase::new(seed));
            }
            LogRecord::Applied {
                case_id,
                actor,
                event,
                at,
            } => {
                let case: &mut TriageCase = cases
                    .get_mut(&case_id)
                    .ok_or_else(|| replay_err(WorkflowError::NotFound(case_id.clone())))?;
                *case = advance(case, &actor, event, case.version, at, ctx).map_err(replay_err)?;
            }
        }
    }
    Ok(cases)
}

impl CaseStore {
    /// Opens (or creates) a store directory and replays its log.
    pub fn open(dir: impl AsRef<Path>, ctx: &WorkflowContext<'_>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        let events = dir.join(EVENTS_FILE);
        let cases = replay_log(&events, ctx)?;
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&events)
            .map_err(|source| StoreError::Io {
                path: events.clone(),
                source,
            })?;
        let store = Self {
            dir,
            cases,
            log: BufWriter::new(log),
        };
        store.write_snapshot()?;
        Ok(store)
    }

    /// Replays a store's log without creating or modifying any file. A
    /// missing log reads as an empty store.
    pub fn read_only(dir: impl AsRef<Path>, ctx: &WorkflowContext<'_>) -> Result<Vec<TriageCase>, StoreError> {
        Ok(replay_log(&dir.as_ref().join(EVENTS_FILE), ctx)?.into_values().collect())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn get(&self, case_id: &str) -> Option<&TriageCase> {
        self.cases.get(case_id)
    }

    /// All cases ordered by id.
    pub fn cases(&self) -> impl Iterator<Item = &TriageCase> {
        self.cases.values()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn count_in(&self, state: CaseState) -> usize {
        self.cases.values().filter(|c| c.state == state).count()
    }

    fn append(&mut self, rec: &LogRecord) -> Result<(), StoreError> {
        let path = self.dir.join(EVENTS_FILE);
        let res = serde_json::to_writer(&mut self.log, rec)
            .map_err(io::Error::from)
            .and_then(|_| self.log.write_all(b"\n"))
            .and_then(|_| self.log.flush());
        res.map_err(|source| StoreError::Io { path, source })
    }

    /// Opens a new case; ids must be unique.
    pub fn create(&mut self, seed: CaseSeed) -> Result<&TriageCase, StoreError> {
        if self.cases.contains_key(&seed.case_id) {
            return Err(WorkflowError::Duplicate(seed.case_id).into());
        }
        self.append(&LogRecord::Created { seed: seed.clone() })?;
        let id = seed.case_id.clone();
        Ok(self.cases.entry(id).or_insert_with(|| TriageCase::new(seed)))
    }

    /// Validates an event, logs it, and updates the in-memory case.
    pub fn apply(
        &mut self,
        case_id: &str,
        actor: &Actor,
        action: Action,
        expected_version: u64,
        at: DateTime<Utc>,
        ctx: &WorkflowContext<'_>,
    ) -> Result<TriageCase, StoreError> {
        let case = self
            .cases
            .get(case_id)
            .ok_or_else(|| WorkflowError::NotFound(case_id.to_owned()))?;
        let next = advance(case, actor, action.clone(), expected_version, at, ctx)?;
        self.append(&LogRecord::Applied {
            case_id: case_id.to_owned(),
            actor: actor.clone(),
            event: action,
            at,
        })?;
        self.cases.insert(case_id.to_owned(), next.clone());
        Ok(next)
    }

    /// Applies due system actions until the case waits on a human.
    pub fn automate(
        &mut self,
        case_id: &str,
        automation: &Automation,
        at: DateTime<Utc>,
        ctx: &WorkflowContext<'_>,
    ) -> Result<TriageCase, StoreError> {
        loop {
            let case = self
                .cases
                .get(case_id)
                .ok_or_else(|| WorkflowError::NotFound(case_id.to_owned()))?;
            let Some(action) = automation.next_action(case) else {
                return Ok(case.clone());
            };
            let version = case.version;
            self.apply(case_id, &Actor::System, action, version, at, ctx)?;
        }
    }

    /// Opens one whole-review case per new review and runs automation on it.
    pub fn ingest(
        &mut self,
        reviews: &[Review],
        automation: &Automation,
        at: DateTime<Utc>,
        ctx: &WorkflowContext<'_>,
    ) -> Result<IngestSummary, StoreError> {
        let mut summary = IngestSummary::default();
        for review in reviews {
            let seed = CaseSeed::for_review(review);
            let id = seed.case_id.clone();
            if self.cases.contains_key(&id) {
                summary.existing.push(id);
                continue;
            }
            self.create(seed)?;
            self.automate(&id, automation, at, ctx)?;
            summary.created.push(id);
        }
        self.write_snapshot()?;
        Ok(summary)
    }

    /// Replaces `snapshot.json` with the current cases (write, then rename).
    pub fn write_snapshot(&self) -> Result<(), StoreError> {
        let path = self.dir.join(SNAPSHOT_FILE);
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let cases: Vec<&TriageCase> = self.cases.values().collect();
        let io_err = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        fs::write(&tmp, jsonl::to_pretty(&cases)).map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(io_err)
    }
}
