//! HTTP/JSON front end for live planning sessions.
//!
//! Each session has one writer at a time; every mutating request appends its
//! events to the session log before the response goes out. Reads are served
//! from the last committed snapshot. Participants get an opaque token when
//! they join and present it in `x-participant-token`; the server alone maps
//! tokens to participants.

pub mod error;
pub mod routes;
pub mod state;

use std::path::PathBuf;
use std::sync::Arc;

pub use error::{ApiError, CODES};
pub use routes::{router, IDEMPOTENCY_HEADER, TOKEN_HEADER, VERSION_HEADER};
pub use state::AppState;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot open data directory: {0}")]
    Data(#[from] pointwise_core::ledger::LedgerError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

pub async fn serve(listen: &str, data_dir: impl Into<PathBuf>) -> Result<(), ServeError> {
    let data_dir = data_dir.into();
    let app = router(Arc::new(AppState::new(&data_dir)?));
    let listener = tokio::net::TcpListener::bind(listen)
        .await
        .map_err(|source| ServeError::Bind { addr: listen.to_string(), source })?;
    tracing::info!(addr = %listener.local_addr()?, data = %data_dir.display(), "listening");
    axum::serve(listener, app).await?;
    Ok(())
}
