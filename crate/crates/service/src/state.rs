//! Per-session single writers over the on-disk event store.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;

use axum::http::StatusCode;
use chrono::Utc;
use parking_lot::{Mutex, RwLock};
use pointwise_core::ledger::{EventStore, LedgerError};
use pointwise_core::session::{Session, Timestamp};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ApiError;

/// A finished command: status plus JSON body (before `version` is added).
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub status: StatusCode,
    pub body: Value,
}

impl Reply {
    pub fn new(status: StatusCode, body: Value) -> Self {
        Self { status, body }
    }
}

/// What a command closure gets to work with.
pub struct Command<'a> {
    pub session: &'a mut Session,
    pub participant: Option<String>,
    pub at: Timestamp,
    issued: Vec<TokenRecord>,
}

impl Command<'_> {
    /// Issues an opaque token for a freshly joined participant.
    pub fn issue_token(&mut self, participant_id: &str) -> String {
        let token = uuid::Uuid::new_v4().simple().to_string();
        self.issued.push(TokenRecord { token: token.clone(), participant_id: participant_id.into() });
        token
    }

    pub fn participant(&self) -> Result<&str, ApiError> {
        self.participant
            .as_deref()
            .ok_or_else(|| ApiError::new("MISSING_TOKEN", "x-participant-token header required"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TokenRecord {
    token: String,
    participant_id: String,
}

#[derive(Debug, Clone)]
struct Cached {
    fingerprint: String,
    reply: Result<Reply, ApiError>,
}

struct Writer {
    session: Session,
    tokens: HashMap<String, String>,
    idempotent: HashMap<String, Cached>,
}

struct Slot {
    writer: Mutex<Writer>,
    snapshot: RwLock<Arc<Session>>,
}

pub struct AppState {
    store: EventStore,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
    creations: Mutex<HashMap<String, Cached>>,
}

fn check_replay(cached: &Cached, fingerprint: &str) -> Result<Reply, ApiError> {
    if cached.fingerprint != fingerprint {
        return Err(ApiError::new(
            "IDEMPOTENCY_CONFLICT",
            "idempotency key was already used for a different request",
        ));
    }
    cached.reply.clone()
}

impl AppState {
    pub fn new(data_dir: impl Into<PathBuf>) -> Result<Self, LedgerError> {
        Ok(Self {
            store: EventStore::open(data_dir)?,
            sessions: RwLock::new(HashMap::new()),
            creations: Mutex::new(HashMap::new()),
        })
    }

    pub fn store(&self) -> &EventStore {
        &self.store
    }

    fn tokens_path(&self, session_id: &str) -> PathBuf {
        self.store.root().join(format!("{session_id}.tokens.jsonl"))
    }

    fn load_tokens(&self, session_id: &str) -> Result<HashMap<String, String>, LedgerError> {
        let text = match fs::read_to_string(self.tokens_path(session_id)) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(HashMap::new()),
            Err(e) => return Err(e.into()),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let r: TokenRecord = serde_json::from_str(l)?;
                Ok((r.token, r.participant_id))
            })
            .collect()
    }

    fn save_tokens(&self, session_id: &str, records: &[TokenRecord]) -> Result<(), LedgerError> {
        if records.is_empty() {
            return Ok(());
        }
        let mut buf = String::new();
        for r in records {
            buf.push_str(&serde_json::to_string(r)?);
            buf.push('\n');
        }
        let mut f = OpenOptions::new().create(true).append(true).open(self.tokens_path(session_id))?;
        f.write_all(buf.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }

    fn slot(&self, session_id: &str) -> Result<Arc<Slot>, ApiError> {
        if let Some(slot) = self.sessions.read().get(session_id) {
            return Ok(slot.clone());
        }
        let mut sessions = self.sessions.write();
        if let Some(slot) = sessions.get(session_id) {
            return Ok(slot.clone());
        }
        if !pointwise_core::session::valid_session_id(session_id) || !self.store.exists(session_id) {
            return Err(ApiError::new("UNKNOWN_SESSION", format!("session {session_id} not found")));
        }
        let session = self.store.load(session_id)?;
        let tokens = self.load_tokens(session_id)?;
        let slot = Arc::new(Slot {
            snapshot: RwLock::new(Arc::new(session.clone())),
            writer: Mutex::new(Writer { session, tokens, idempotent: HashMap::new() }),
        });
        sessions.insert(session_id.to_string(), slot.clone());
        Ok(slot)
    }

    /// Latest committed state; never waits for a writer.
    pub fn snapshot(&self, session_id: &str) -> Result<Arc<Session>, ApiError> {
        Ok(self.slot(session_id)?.snapshot.read().clone())
    }

    pub fn create_session(
        &self,
        session: Session,
        idempotency: Option<(&str, &str)>,
    ) -> Result<Reply, ApiError> {
        let mut creations = self.creations.lock();
        if let Some((key, fingerprint)) = idempotency {
            if let Some(cached) = creations.get(key) {
                return check_replay(cached, fingerprint);
            }
        }
        let id = session.session_id().to_string();
        let reply = self.store.create(&session).map_err(ApiError::from).map(|()| {
            let slot = Arc::new(Slot {
                snapshot: RwLock::new(Arc::new(session.clone())),
                writer: Mutex::new(Writer {
                    session,
                    tokens: HashMap::new(),
                    idempotent: HashMap::new(),
                }),
            });
            self.sessions.write().insert(id.clone(), slot);
            Reply::new(StatusCode::CREATED, serde_json::json!({ "session_id": id, "version": 1 }))
        });
        if let Some((key, fingerprint)) = idempotency {
            creations.insert(
                key.to_string(),
                Cached { fingerprint: fingerprint.to_string(), reply: reply.clone() },
            );
        }
        reply
    }

    /// Runs one command under the session's writer lock. New events are
    /// persisted before the in-memory state and snapshot are replaced.
    pub fn execute<F>(
        &self,
        session_id: &str,
        token: Option<&str>,
        idempotency: Option<(&str, &str)>,
        command: F,
    ) -> Result<Reply, ApiError>
    where
        F: FnOnce(&mut Command<'_>) -> Result<Reply, ApiError>,
    {
        let slot = self.slot(session_id)?;
        let mut writer = slot.writer.lock();
        if let Some((key, fingerprint)) = idempotency {
            if let Some(cached) = writer.idempotent.get(key) {
                return check_replay(cached, fingerprint);
            }
        }
        let reply = self.run(&slot, &mut writer, token, command);
        if let Some((key, fingerprint)) = idempotency {
            writer.idempotent.insert(
                key.to_string(),
                Cached { fingerprint: fingerprint.to_string(), reply: reply.clone() },
            );
        }
        reply
    }

    fn run<F>(
        &self,
        slot: &Slot,
        writer: &mut Writer,
        token: Option<&str>,
        command: F,
    ) -> Result<Reply, ApiError>
    where
        F: FnOnce(&mut Command<'_>) -> Result<Reply, ApiError>,
    {
        let participant = match token {
            None => None,
            Some(t) => Some(
                writer
                    .tokens
                    .get(t)
                    .cloned()
                    .ok_or_else(|| ApiError::new("UNKNOWN_TOKEN", "participant token not recognised"))?,
            ),
        };
        let mut draft = writer.session.clone();
        let before = draft.version() as usize;
        let mut cmd = Command { session: &mut draft, participant, at: Utc::now(), issued: Vec::new() };
        let mut reply = command(&mut cmd)?;
        let issued = std::mem::take(&mut cmd.issued);

        let id = draft.session_id().to_string();
        self.store.append(&id, &draft.events()[before..])?;
        self.save_tokens(&id, &issued)?;
        writer.tokens.extend(issued.into_iter().map(|r| (r.token, r.participant_id)));
        if let Value::Object(map) = &mut reply.body {
            map.insert("version".into(), draft.version().into());
        }
        *slot.snapshot.write() = Arc::new(draft.clone());
        writer.session = draft;
        Ok(reply)
    }
}
