//! HTTP hosting for nodes.
//!
//! Every request is handed to the node's synchronous `handle` on the
//! blocking pool. A service with issuer URLs pulls a fresh ring snapshot
//! when a registration fails for want of one and retries once.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;
use phc_core::issuance::EpochRing;
use phc_core::wire::{Wire, WireEnvelope};
use tokio::sync::oneshot;

use crate::error::codes;
use crate::protocol::{kinds, paths, RegistrationBody, Reply, RingDoc};
use crate::{IssuerNode, ServiceNode};

#[derive(Clone)]
pub enum App {
    Issuer(Arc<IssuerNode>),
    Service(Arc<ServiceNode>),
}

struct Shared {
    app: App,
    http: reqwest::Client,
}

pub fn router(app: App) -> Router {
    let shared = Arc::new(Shared {
        app,
        http: reqwest::Client::new(),
    });
    Router::new().fallback(dispatch).with_state(shared)
}

async fn dispatch(State(shared): State<Arc<Shared>>, method: Method, uri: Uri, body: Bytes) -> Response {
    let path = uri.path().to_owned();
    let reply = match &shared.app {
        App::Issuer(node) => {
            let node = node.clone();
            run_blocking(move || node.handle(method.as_str(), &path, &body)).await
        }
        App::Service(node) => serve_service(&shared.http, node.clone(), method, path, body).await,
    };
    let status = StatusCode::from_u16(reply.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, "application/json")], reply.body).into_response()
}

async fn run_blocking(f: impl FnOnce() -> Reply + Send + 'static) -> Reply {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|_| crate::ApiError::internal("handler panicked").reply())
}

async fn serve_service(http: &reqwest::Client, node: Arc<ServiceNode>, method: Method, path: String, body: Bytes) -> Reply {
    let call = {
        let node = node.clone();
        let (method, path, body) = (method.clone(), path.clone(), body.clone());
        move || node.handle(method.as_str(), &path, &body)
    };
    let reply = run_blocking(call.clone()).await;
    tracing::debug!(%method, %path, status = reply.status, "service request");
    if method != Method::POST || path != paths::REGISTER {
        return reply;
    }
    let retry = matches!(
        reply.error_code().as_deref(),
        Some(codes::MISSING_RING | codes::STALE_EPOCH | codes::INVALID_PROOF)
    );
    if !retry {
        return reply;
    }
    let Some(issuer_id) = presented_issuer(&body) else {
        return reply;
    };
    match refresh_ring(http, &node, &issuer_id).await {
        Ok(true) => run_blocking(call).await,
        Ok(false) => reply,
        Err(e) => {
            tracing::warn!(issuer = %issuer_id, error = %e, "ring refresh failed");
            reply
        }
    }
}

fn presented_issuer(body: &[u8]) -> Option<String> {
    let env: WireEnvelope = serde_json::from_slice(body).ok()?;
    let reg: RegistrationBody = env.open(kinds::REGISTRATION).ok()?;
    Some(reg.presentation.issuer_id)
}

/// Pulls the issuer's current ring and installs it if it changed.
/// Returns whether a new snapshot was installed.
pub async fn refresh_ring(http: &reqwest::Client, node: &Arc<ServiceNode>, issuer_id: &str) -> Result<bool, String> {
    let Some(url) = node
        .setup()
        .accepted_issuers
        .iter()
        .find(|p| p.issuer_id == issuer_id)
        .and_then(|p| p.url.clone())
    else {
        return Ok(false);
    };
    let ring = fetch_ring(http, &url, node).await?;
    if ring.issuer_id != issuer_id || !node.ring_is_news(&ring) {
        return Ok(false);
    }
    let node = node.clone();
    tokio::task::spawn_blocking(move || node.install_ring(ring))
        .await
        .map_err(|e| e.to_string())?
        .map_err(|e| e.to_string())?;
    Ok(true)
}

async fn fetch_ring(http: &reqwest::Client, base: &str, node: &ServiceNode) -> Result<EpochRing, String> {
    let url = format!("{}{}current", base.trim_end_matches('/'), paths::RING_PREFIX);
    let resp = http.get(&url).send().await.map_err(|e| e.to_string())?;
    let bytes = resp.bytes().await.map_err(|e| e.to_string())?;
    let env: WireEnvelope = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
    let doc: RingDoc = env.open(kinds::RING).map_err(|e| e.to_string())?;
    EpochRing::from_doc(&doc, &node.config().params).map_err(|e| e.to_string())
}

/// Pulls every pinned issuer's ring once; failures are logged and skipped.
pub async fn refresh_all(http: &reqwest::Client, node: &Arc<ServiceNode>) {
    let ids: Vec<String> = node.setup().accepted_issuers.iter().map(|p| p.issuer_id.clone()).collect();
    for id in ids {
        if let Err(e) = refresh_ring(http, node, &id).await {
            tracing::warn!(issuer = %id, error = %e, "initial ring fetch failed");
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ServeOptions {
    /// Also stop on SIGINT.
    pub stop_on_ctrl_c: bool,
}

/// A server running on its own thread and runtime. Dropping it stops it.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server stops on its own (for example on SIGINT).
    pub fn wait(mut self) -> std::io::Result<()> {
        self.thread.take().map(join).unwrap_or(Ok(()))
    }

    pub fn shutdown(mut self) -> std::io::Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.thread.take().map(join).unwrap_or(Ok(()))
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

fn join(t: JoinHandle<std::io::Result<()>>) -> std::io::Result<()> {
    t.join()
        .unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked")))
}

/// Binds `addr` and serves `app` on a background thread.
pub fn spawn(app: App, addr: &str, options: ServeOptions) -> std::io::Result<ServerHandle> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name(format!("phc-server-{local}"))
        .spawn(move || {
            runtime.block_on(async move {
                if let App::Service(node) = &app {
                    refresh_all(&reqwest::Client::new(), node).await;
                }
                let listener = tokio::net::TcpListener::from_std(listener)?;
                let stop = async move {
                    if options.stop_on_ctrl_c {
                        tokio::select! {
                            _ = rx => {}
                            _ = tokio::signal::ctrl_c() => {}
                        }
                    } else {
                        let _ = rx.await;
                    }
                };
                tracing::info!(addr = %local, "listening");
                axum::serve(listener, router(app)).with_graceful_shutdown(stop).await
            })
        })?;
    Ok(ServerHandle {
        addr: local,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
