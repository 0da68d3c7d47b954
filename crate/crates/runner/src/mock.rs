//! In-process chat-completion endpoint for tests.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

pub enum MockReply {
    Text(String),
    Status(u16),
    /// Never answers; the client has to time out.
    Stall,
}

type Handler = dyn Fn(&str) -> MockReply + Send + Sync;

#[derive(Default)]
struct Stats {
    requests: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    bodies: Mutex<Vec<Value>>,
}

struct Shared {
    handler: Box<Handler>,
    delay: Duration,
    stats: Stats,
}

/// Serves `POST /v1/chat/completions` on a local port until dropped.
pub struct MockServer {
    pub base_url: String,
    shared: Arc<Shared>,
    server: tokio::task::JoinHandle<()>,
}

async fn complete(State(shared): State<Arc<Shared>>, Json(body): Json<Value>) -> Response {
    let stats = &shared.stats;
    stats.requests.fetch_add(1, Ordering::SeqCst);
    let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let prompt = body["messages"][0]["content"].as_str().unwrap_or_default().to_string();
    stats.bodies.lock().unwrap().push(body);
    tokio::time::sleep(shared.delay).await;
    let reply = (shared.handler)(&prompt);
    let response = match reply {
        MockReply::Text(text) => Json(json!({
            "id": "mock",
            "object": "chat.completion",
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
            "usage": {"prompt_tokens": prompt.len() / 4, "completion_tokens": text.len() / 4},
        }))
        .into_response(),
        MockReply::Status(code) => {
            (StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), "mock failure").into_response()
        }
        MockReply::Stall => {
            tokio::time::sleep(Duration::from_secs(3600)).await;
            StatusCode::GATEWAY_TIMEOUT.into_response()
        }
    };
    stats.in_flight.fetch_sub(1, Ordering::SeqCst);
    response
}

impl MockServer {
    /// Starts the server on the current Tokio runtime. Each request waits
    /// `delay`, then answers with `handler(prompt)`.
    pub async fn start(delay: Duration, handler: impl Fn(&str) -> MockReply + Send + Sync + 'static) -> Self {
        let shared = Arc::new(Shared { handler: Box::new(handler), delay, stats: Stats::default() });
        let app = Router::new().route("/v1/chat/completions", post(complete)).with_state(shared.clone());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind a local port");
        let addr = listener.local_addr().expect("bound address");
        let server = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });
        MockServer { base_url: format!("http://{addr}/v1"), shared, server }
    }

    pub fn requests(&self) -> usize {
        self.shared.stats.requests.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.shared.stats.max_in_flight.load(Ordering::SeqCst)
    }

    /// Request bodies in arrival order.
    pub fn bodies(&self) -> Vec<Value> {
        self.shared.stats.bodies.lock().unwrap().clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.abort();
    }
}
