//! The single exit point for remote model calls: an OpenAI-compatible vision
//! chat endpoint and an element-parser endpoint, both over JSON/HTTP.

use std::io::Cursor;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use base64::Engine;
use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_RETRIES: u32 = 2;
pub const DEFAULT_BACKOFF_MS: u64 = 250;
pub const DEFAULT_MAX_PAYLOAD_BYTES: usize = 32 * 1024 * 1024;
pub const DEFAULT_TIMEOUT_MS: u64 = 60_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("{0} endpoint not configured")]
    NotConfigured(&'static str),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("payload of {0} bytes is too large")]
    OversizedPayload(usize),
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed response: {0}")]
    BadResponse(String),
}

/// Failure below HTTP; always considered transient.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct TransportError(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

impl HttpReply {
    pub fn ok(body: impl Into<String>) -> Self {
        Self { status: 200, body: body.into() }
    }
}

/// Posts a serialized JSON body. Implementations must be shareable across
/// threads; the gateway issues concurrent calls through one instance.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, auth: Option<&str>, body: &str) -> Result<HttpReply, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout_ms: u64) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_millis(timeout_ms)))
            .build()
            .into();
        Self { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(DEFAULT_TIMEOUT_MS)
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, auth: Option<&str>, body: &str) -> Result<HttpReply, TransportError> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(token) = auth {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req.send(body).map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

/// A request as seen by [`MockTransport`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedRequest {
    pub url: String,
    pub auth: Option<String>,
    pub body: String,
}

type Responder = dyn Fn(&RecordedRequest) -> Result<HttpReply, TransportError> + Send + Sync;

/// Test transport: answers from a closure and records every request.
pub struct MockTransport {
    responder: Box<Responder>,
    log: Mutex<Vec<RecordedRequest>>,
}

impl MockTransport {
    pub fn new(f: impl Fn(&RecordedRequest) -> Result<HttpReply, TransportError> + Send + Sync + 'static) -> Self {
        Self { responder: Box::new(f), log: Mutex::new(Vec::new()) }
    }

    /// Replies to every chat request with `content` as the assistant message.
    pub fn chat_reply(content: impl Into<String>) -> Self {
        let body = chat_completion_body(&content.into());
        Self::new(move |_| Ok(HttpReply::ok(body.clone())))
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl Transport for MockTransport {
    fn post_json(&self, url: &str, auth: Option<&str>, body: &str) -> Result<HttpReply, TransportError> {
        let req = RecordedRequest { url: url.to_string(), auth: auth.map(str::to_string), body: body.to_string() };
        self.log.lock().unwrap_or_else(|e| e.into_inner()).push(req.clone());
        (self.responder)(&req)
    }
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn post_json(&self, url: &str, auth: Option<&str>, body: &str) -> Result<HttpReply, TransportError> {
        (**self).post_json(url, auth, body)
    }
}

/// Minimal chat-completions response carrying `content`.
pub fn chat_completion_body(content: &str) -> String {
    serde_json::json!({
        "id": "mock",
        "object": "chat.completion",
        "model": "mock",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}]
    })
    .to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: DEFAULT_MAX_RETRIES, backoff_ms: DEFAULT_BACKOFF_MS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VlmEndpoint {
    pub url: String,
    pub model: String,
    #[serde(default, skip_serializing)]
    pub auth_token: Option<String>,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_max_payload")]
    pub max_payload_bytes: usize,
}

fn default_max_payload() -> usize {
    DEFAULT_MAX_PAYLOAD_BYTES
}

impl VlmEndpoint {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            auth_token: None,
            retry: RetryPolicy::default(),
            max_payload_bytes: DEFAULT_MAX_PAYLOAD_BYTES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParserEndpoint {
    pub url: String,
    #[serde(default)]
    pub retry: RetryPolicy,
}

impl ParserEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Self { url: url.into(), retry: RetryPolicy::default() }
    }
}

/// PNG-encoded image bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageData(pub Vec<u8>);

impl ImageData {
    pub fn from_rgb(img: &RgbImage) -> Self {
        Self(encode_png(img))
    }

    pub fn to_data_url(&self) -> String {
        format!("data:image/png;base64,{}", base64::engine::general_purpose::STANDARD.encode(&self.0))
    }
}

pub fn encode_png(img: &RgbImage) -> Vec<u8> {
    let mut buf = Cursor::new(Vec::new());
    // encoding an in-memory RGB8 buffer cannot fail
    img.write_to(&mut buf, image::ImageFormat::Png).expect("png encoding");
    buf.into_inner()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub temperature: f32,
    pub max_tokens: u32,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self { temperature: 0.0, max_tokens: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisionRequest {
    /// Sent in order, ahead of the prompt text.
    pub images: Vec<ImageData>,
    pub prompt: String,
    pub params: DecodeParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisionResponse {
    pub text: String,
    pub latency_ms: u64,
    pub model: String,
}

#[derive(Serialize)]
struct ChatBody<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f32,
    max_tokens: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: Vec<ContentPart<'a>>,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ContentPart<'a> {
    ImageUrl { image_url: ImageUrl },
    Text { text: &'a str },
}

#[derive(Serialize)]
struct ImageUrl {
    url: String,
}

#[derive(Deserialize)]
struct ChatReply {
    #[serde(default)]
    model: Option<String>,
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReplyMessage,
}

#[derive(Deserialize)]
struct ChatReplyMessage {
    content: Option<String>,
}

/// Serialized chat body for `req`. Identical inputs give identical bytes.
pub fn chat_request_body(model: &str, req: &VisionRequest) -> String {
    let mut content: Vec<ContentPart> = req
        .images
        .iter()
        .map(|img| ContentPart::ImageUrl { image_url: ImageUrl { url: img.to_data_url() } })
        .collect();
    content.push(ContentPart::Text { text: &req.prompt });
    let body = ChatBody {
        model,
        messages: [ChatMessage { role: "user", content }],
        temperature: req.params.temperature,
        max_tokens: req.params.max_tokens,
    };
    serde_json::to_string(&body).expect("chat body serialization")
}

#[derive(Serialize)]
struct ParserBody {
    image: String,
}

/// Remote services with a shared transport.
#[derive(Clone)]
pub struct Gateway {
    transport: Arc<dyn Transport>,
    vlm: Option<VlmEndpoint>,
    parser: Option<ParserEndpoint>,
}

impl Gateway {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Self { transport, vlm: None, parser: None }
    }

    pub fn with_vlm(mut self, ep: VlmEndpoint) -> Self {
        self.vlm = Some(ep);
        self
    }

    pub fn with_parser(mut self, ep: ParserEndpoint) -> Self {
        self.parser = Some(ep);
        self
    }

    pub fn has_vlm(&self) -> bool {
        self.vlm.is_some()
    }

    pub fn has_parser(&self) -> bool {
        self.parser.is_some()
    }

    pub fn chat_vision(&self, req: &VisionRequest) -> Result<VisionResponse, GatewayError> {
        let ep = self.vlm.as_ref().ok_or(GatewayError::NotConfigured("vlm"))?;
        if req.images.is_empty() {
            return Err(GatewayError::InvalidRequest("at least one image is required".into()));
        }
        if req.prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("empty prompt".into()));
        }
        let body = chat_request_body(&ep.model, req);
        if body.len() > ep.max_payload_bytes {
            return Err(GatewayError::OversizedPayload(body.len()));
        }
        let started = Instant::now();
        let reply = self.send(&ep.url, ep.auth_token.as_deref(), &body, &ep.retry)?;
        let parsed: ChatReply =
            serde_json::from_str(&reply).map_err(|e| GatewayError::BadResponse(e.to_string()))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GatewayError::BadResponse("no message content".into()))?;
        Ok(VisionResponse {
            text,
            latency_ms: started.elapsed().as_millis() as u64,
            model: parsed.model.unwrap_or_else(|| ep.model.clone()),
        })
    }

    /// Posts a screenshot to the parser endpoint and returns the raw reply.
    pub fn parse_screen(&self, image: &ImageData) -> Result<String, GatewayError> {
        let ep = self.parser.as_ref().ok_or(GatewayError::NotConfigured("parser"))?;
        let body = serde_json::to_string(&ParserBody {
            image: base64::engine::general_purpose::STANDARD.encode(&image.0),
        })
        .expect("parser body serialization");
        self.send(&ep.url, None, &body, &ep.retry)
    }

    fn send(&self, url: &str, auth: Option<&str>, body: &str, retry: &RetryPolicy) -> Result<String, GatewayError> {
        let mut last = String::new();
        let attempts = retry.max_retries + 1;
        for attempt in 0..attempts {
            if attempt > 0 && retry.backoff_ms > 0 {
                std::thread::sleep(Duration::from_millis(retry.backoff_ms << (attempt - 1).min(16)));
            }
            match self.transport.post_json(url, auth, body) {
                Err(e) => last = e.0,
                Ok(HttpReply { status, body }) => match status {
                    200..=299 => return Ok(body),
                    401 | 403 => return Err(GatewayError::Auth(status)),
                    413 => return Err(GatewayError::OversizedPayload(body.len())),
                    408 | 429 | 500..=599 => last = format!("HTTP {status}"),
                    _ => return Err(GatewayError::Rejected { status, body }),
                },
            }
            log::debug!("attempt {} to {url} failed: {last}", attempt + 1);
        }
        Err(GatewayError::Transport { attempts, message: last })
    }
}
