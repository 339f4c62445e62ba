//! Async client for the session service.

use std::time::Duration;

use lfsearch_api::*;
use reqwest::{RequestBuilder, Response};
use serde::de::DeserializeOwned;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("{}: {}", .0.status, .0.detail)]
    Api(Problem),
    #[error("timed out waiting for session {0}")]
    Timeout(String),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Api(p) => Some(p.status),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Client {
        Client { base: base.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    async fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        decode(req.send().await?).await
    }

    pub async fn create(&self, body: &CreateSession, idempotency_key: Option<&str>) -> Result<SessionView> {
        let mut req = self.http.post(self.url("/sessions")).json(body);
        if let Some(k) = idempotency_key {
            req = req.header(IDEMPOTENCY_HEADER, k);
        }
        self.send(req).await
    }

    pub async fn get(&self, id: &str) -> Result<SessionView> {
        self.send(self.http.get(self.url(&format!("/sessions/{id}")))).await
    }

    pub async fn next_world(&self, id: &str, batch: bool) -> Result<NextWorld> {
        let mode = if batch { "batch" } else { "greedy" };
        self.send(self.http.get(self.url(&format!("/sessions/{id}/next-world?mode={mode}")))).await
    }

    pub async fn annotate(&self, id: &str, body: &AnnotationRequest) -> Result<SessionView> {
        self.send(self.http.post(self.url(&format!("/sessions/{id}/annotations"))).json(body)).await
    }

    pub async fn result(&self, id: &str) -> Result<ResultView> {
        self.send(self.http.get(self.url(&format!("/sessions/{id}/result")))).await
    }

    pub async fn classes(&self, id: &str) -> Result<ClassesView> {
        self.send(self.http.get(self.url(&format!("/sessions/{id}/classes")))).await
    }

    /// Polls until the session has left the searching state.
    pub async fn wait_ready(&self, id: &str, timeout: Duration) -> Result<SessionView> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let view = self.get(id).await?;
            if view.state != SessionState::Searching {
                return Ok(view);
            }
            if tokio::time::Instant::now() >= deadline {
                return Err(ClientError::Timeout(id.to_string()));
            }
            tokio::time::sleep(Duration::from_millis(50)).await;
        }
    }
}

async fn decode<T: DeserializeOwned>(resp: Response) -> Result<T> {
    let status = resp.status();
    if status.is_success() {
        return Ok(resp.json().await?);
    }
    let text = resp.text().await?;
    let problem = serde_json::from_str::<Problem>(&text).unwrap_or(Problem {
        kind: "about:blank".into(),
        title: status.canonical_reason().unwrap_or("Error").into(),
        status: status.as_u16(),
        detail: text,
    });
    Err(ClientError::Api(problem))
}
