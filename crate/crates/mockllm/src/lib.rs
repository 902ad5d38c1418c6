//! A local chat-completions endpoint with scripted behavior, for exercising
//! the experiment pipeline without a paid API.
//!
//! The server speaks just enough of the OpenAI chat wire shape: POST
//! `/v1/chat/completions` with `messages`, answered by
//! `{"choices":[{"message":{"content": ...}}]}`. What the "model" says is
//! decided by a [`Responder`] closure over the prompt and a global request
//! counter, so tests can script SDT observers, malformed replies, outages,
//! or anything else.
//!
//! [`SdtObserver`] simulates confidence-rated decisions by drawing evidence
//! directly: a type 1 sample against the criterion for the decision, then a
//! rejection-sampled type 2 evidence draw on the response's side of meta_c
//! for the rating. That is a different route to the same distributions the
//! estimators assume, which keeps round-trip tests honest.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::post;
use axum::{Json, Router};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

/// What the mock returns for one request.
#[derive(Debug, Clone)]
pub enum MockReply {
    /// A completion whose message content is this string.
    Content(String),
    /// A bare HTTP status (for outage and auth scripting).
    Status(u16),
    /// HTTP 200 whose body is not a completion payload.
    MalformedEnvelope,
}

/// Decides the reply from (prompt, global request index).
pub type Responder = Arc<dyn Fn(&str, u64) -> MockReply + Send + Sync>;

struct ServerState {
    responder: Responder,
    requests: AtomicU64,
}

/// A running mock endpoint. Dropping the handle shuts it down.
pub struct MockLlm {
    addr: SocketAddr,
    state: Arc<ServerState>,
    handle: tokio::task::JoinHandle<()>,
}

impl MockLlm {
    /// Start on an ephemeral localhost port.
    pub async fn start(responder: Responder) -> MockLlm {
        let state = Arc::new(ServerState { responder, requests: AtomicU64::new(0) });
        let app = Router::new()
            .route("/v1/chat/completions", post(complete))
            .with_state(Arc::clone(&state));
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind");
        let addr = listener.local_addr().expect("local addr");
        let handle = tokio::spawn(async move {
            axum::serve(listener, app).await.ok();
        });
        MockLlm { addr, state, handle }
    }

    /// Base URL to use as `endpoint_url` (includes the `/v1` prefix).
    pub fn endpoint_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn request_count(&self) -> u64 {
        self.state.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockLlm {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

async fn complete(
    State(state): State<Arc<ServerState>>,
    Json(body): Json<serde_json::Value>,
) -> axum::response::Response {
    let index = state.requests.fetch_add(1, Ordering::SeqCst);
    let prompt = body
        .get("messages")
        .and_then(|m| m.as_array())
        .and_then(|m| m.last())
        .and_then(|m| m.get("content"))
        .and_then(|c| c.as_str())
        .unwrap_or_default();

    match (state.responder)(prompt, index) {
        MockReply::Content(content) => Json(serde_json::json!({
            "id": format!("mock-{index}"),
            "object": "chat.completion",
            "choices": [{
                "index": 0,
                "message": {"role": "assistant", "content": content},
                "finish_reason": "stop"
            }]
        }))
        .into_response(),
        MockReply::Status(code) => {
            StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR).into_response()
        }
        MockReply::MalformedEnvelope => {
            Json(serde_json::json!({"object": "chat.completion", "choices": []})).into_response()
        }
    }
}

/// An equal-variance SDT observer that answers the reply protocol.
#[derive(Debug, Clone)]
pub struct SdtObserver {
    pub d_prime: f64,
    pub c: f64,
    pub meta_d: f64,
    /// Type 2 criteria below meta_c (ascending), for "0" responses.
    pub t2_criteria_s1: Vec<f64>,
    /// Type 2 criteria above meta_c (ascending), for "1" responses.
    pub t2_criteria_s2: Vec<f64>,
    pub seed: u64,
}

impl SdtObserver {
    pub fn meta_c(&self) -> f64 {
        (self.c / self.d_prime) * self.meta_d
    }

    /// One trial's reply, deterministic in (seed, item_key): decision from
    /// a type 1 evidence draw, confidence from a type 2 draw conditioned on
    /// the response by rejection.
    pub fn respond(&self, is_s2: bool, item_key: u64, with_confidence: bool) -> String {
        let mut rng = key_rng(self.seed, item_key);
        let sign = if is_s2 { 0.5 } else { -0.5 };

        let type1 = Normal::new(sign * self.d_prime, 1.0).expect("unit variance");
        let decision_s2 = type1.sample(&mut rng) > self.c;

        if !with_confidence {
            return format!("{{\"decision\":{}}}", u8::from(decision_s2));
        }

        let meta_c = self.meta_c();
        let type2 = Normal::new(sign * self.meta_d, 1.0).expect("unit variance");
        let mut evidence = meta_c;
        for attempt in 0..10_000 {
            let x = type2.sample(&mut rng);
            if (x > meta_c) == decision_s2 {
                evidence = x;
                break;
            }
            if attempt == 9_999 {
                evidence = if decision_s2 { meta_c + 1e-9 } else { meta_c - 1e-9 };
            }
        }
        let confidence = if decision_s2 {
            1 + self.t2_criteria_s2.iter().filter(|&&t| evidence > t).count()
        } else {
            1 + self.t2_criteria_s1.iter().filter(|&&t| evidence < t).count()
        };
        format!("{{\"decision\":{},\"confidence\":{confidence}}}", u8::from(decision_s2))
    }

    /// Build a responder that keys trials by a marker embedded in the
    /// prompt via `labeler` (returns the item's class and stable key).
    pub fn into_responder(
        self,
        with_confidence: bool,
        labeler: impl Fn(&str) -> Option<(bool, u64)> + Send + Sync + 'static,
    ) -> Responder {
        Arc::new(move |prompt, _| match labeler(prompt) {
            Some((is_s2, key)) => {
                MockReply::Content(self.respond(is_s2, key, with_confidence))
            }
            None => MockReply::Content("{\"error\":\"unlabeled item\"}".to_string()),
        })
    }
}

fn key_rng(seed: u64, key: u64) -> ChaCha12Rng {
    let mut x = seed ^ key.wrapping_mul(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    ChaCha12Rng::seed_from_u64(x ^ (x >> 31))
}

/// Convenience responder: always the same content.
pub fn fixed_content(content: &str) -> Responder {
    let content = content.to_string();
    Arc::new(move |_, _| MockReply::Content(content.clone()))
}
