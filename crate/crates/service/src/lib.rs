//! HTTP front door for evoform rooms.
//!
//! JSON over HTTP/1.1 for session state and mutations, `text/plain` for
//! shader snippets and OBJ previews, and a per-room event stream served as
//! server-sent events or, for clients without `text/event-stream`, as a
//! long poll.

pub mod api;
pub mod config;
pub mod error;
pub mod state;

use std::sync::Arc;

pub use api::router;
pub use config::ServiceConfig;
pub use error::{ApiError, ConfigError, ErrorBody};
pub use state::{ApiEvent, AppState};

pub fn app(config: ServiceConfig) -> axum::Router {
    router(AppState::new(config))
}

pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.addr()).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    serve_on(listener, AppState::new(config)).await
}

pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
