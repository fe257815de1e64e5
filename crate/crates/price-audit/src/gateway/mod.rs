//! Uniform chat-completion gateway over an HTTP or mock backend.
//!
//! One system message plus one user message per call. Transient transport
//! failures are retried with exponential backoff; the mock backend answers
//! from deterministic rules and never leaves the process.

mod http;
mod json;
mod mock;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use http::{response_text, response_usage, HttpBackend};
pub use json::{extract_json, ExtractError};
pub use mock::{mock_oracle, DecisionPayload, MockBackend, MockError, PairPayload, UtilityPayload};

pub const DEFAULT_CREDENTIAL_ENV: &str = "PRICE_AUDIT_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Relevance,
    Utility,
    Padding,
    Decision,
}

impl AgentRole {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentRole::Relevance => "relevance",
            AgentRole::Utility => "utility",
            AgentRole::Padding => "padding",
            AgentRole::Decision => "decision",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub user_message: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_seconds: f64,
    /// Which agent issued the call. Only the mock backend reads this and
    /// `payload`; the HTTP backend sends the prompts alone.
    pub role: Option<AgentRole>,
    pub payload: Option<Value>,
}

impl ChatRequest {
    pub fn new(system_prompt: impl Into<String>, user_message: impl Into<String>) -> Self {
        Self {
            system_prompt: system_prompt.into(),
            user_message: user_message.into(),
            temperature: 0.0,
            max_retries: 3,
            timeout_seconds: 60.0,
            role: None,
            payload: None,
        }
    }

    pub fn with_role(mut self, role: AgentRole, payload: Value) -> Self {
        self.role = Some(role);
        self.payload = Some(payload);
        self
    }

    pub fn with_max_retries(mut self, n: u32) -> Self {
        self.max_retries = n;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub attempts: u32,
    /// False when the backend omitted token usage (counts are then 0).
    pub usage_reported: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Http,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub model_name: String,
    pub credential_env_var: String,
    /// Header that carries the credential, and the prefix put before it.
    pub auth_header: String,
    pub auth_prefix: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub headers: BTreeMap<String, String>,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_seconds: f64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Http,
            endpoint: None,
            model_name: "claude-3-5-sonnet".into(),
            credential_env_var: DEFAULT_CREDENTIAL_ENV.into(),
            auth_header: "Authorization".into(),
            auth_prefix: "Bearer ".into(),
            headers: BTreeMap::new(),
            temperature: 0.0,
            max_retries: 3,
            timeout_seconds: 60.0,
        }
    }
}

impl BackendConfig {
    pub fn mock() -> Self {
        Self {
            kind: BackendKind::Mock,
            model_name: "mock".into(),
            ..Self::default()
        }
    }

    /// Applies the per-call settings to a request built by an agent.
    pub fn prepare(&self, mut request: ChatRequest) -> ChatRequest {
        request.temperature = self.temperature;
        request.max_retries = self.max_retries;
        request.timeout_seconds = self.timeout_seconds;
        request
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendReply {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SendError {
    #[error("transient transport failure: {0}")]
    Transient(String),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("{0}")]
    Fatal(String),
}

/// A single-shot chat-completion transport. Retries live in [`Gateway`].
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn send(&self, request: &ChatRequest) -> Result<BackendReply, SendError>;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("credential environment variable `{0}` is not set")]
    MissingCredential(String),
    #[error("http backend requires an endpoint")]
    MissingEndpoint,
    #[error("request prompts must be nonempty")]
    EmptyPrompt,
    #[error("gave up after {attempts} attempt(s): {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("timed out after {attempts} attempt(s): {last}")]
    Timeout { attempts: u32, last: String },
    #[error("backend error: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Delay before the first retry; doubles on each further retry.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            base_delay: Duration::from_secs(1),
        }
    }
}

/// Retrying front end to a [`Backend`], with in-flight instrumentation.
pub struct Gateway {
    backend: Arc<dyn Backend>,
    retry: RetryPolicy,
    settings: BackendConfig,
    in_flight: AtomicUsize,
    peak_in_flight: AtomicUsize,
    calls: AtomicUsize,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.backend.name())
            .field("retry", &self.retry)
            .finish()
    }
}

struct InFlight<'a>(&'a AtomicUsize);

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>, retry: RetryPolicy) -> Self {
        Self {
            backend,
            retry,
            settings: BackendConfig::mock(),
            in_flight: AtomicUsize::new(0),
            peak_in_flight: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn mock() -> Self {
        Self::new(Arc::new(MockBackend), RetryPolicy::default())
    }

    /// Builds the configured backend. For HTTP this checks the endpoint and
    /// reads the credential before any network traffic.
    pub fn from_config(config: &BackendConfig) -> Result<Self, GatewayError> {
        match config.kind {
            BackendKind::Mock => Ok(Self::mock().with_settings(config.clone())),
            BackendKind::Http => {
                let endpoint = config.endpoint.clone().ok_or(GatewayError::MissingEndpoint)?;
                let key = std::env::var(&config.credential_env_var)
                    .ok()
                    .filter(|k| !k.is_empty())
                    .ok_or_else(|| GatewayError::MissingCredential(config.credential_env_var.clone()))?;
                let auth = (config.auth_header.clone(), format!("{}{}", config.auth_prefix, key));
                let backend = HttpBackend::new(endpoint, config.model_name.clone(), auth, &config.headers);
                Ok(Self::new(Arc::new(backend), RetryPolicy::default()).with_settings(config.clone()))
            }
        }
    }

    /// Call settings (temperature, retries, timeout) applied by [`Gateway::ask`].
    pub fn with_settings(mut self, settings: BackendConfig) -> Self {
        self.settings = settings;
        self
    }

    /// Sends `request` with the gateway's configured call settings.
    pub fn ask(&self, request: ChatRequest) -> Result<ChatResponse, GatewayError> {
        self.complete(&self.settings.prepare(request))
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    /// Highest number of simultaneous in-flight backend calls observed.
    pub fn peak_in_flight(&self) -> usize {
        self.peak_in_flight.load(Ordering::SeqCst)
    }

    /// Total backend attempts made through this gateway.
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn attempt(&self, request: &ChatRequest) -> Result<BackendReply, SendError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        let _guard = InFlight(&self.in_flight);
        self.peak_in_flight.fetch_max(now, Ordering::SeqCst);
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.backend.send(request)
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        if request.system_prompt.trim().is_empty() || request.user_message.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        let max_attempts = request.max_retries + 1;
        let mut attempts = 0;
        loop {
            attempts += 1;
            let err = match self.attempt(request) {
                Ok(reply) => {
                    let usage_reported = reply.prompt_tokens.is_some() && reply.completion_tokens.is_some();
                    if !usage_reported {
                        log::debug!("backend {} omitted token usage", self.backend.name());
                    }
                    return Ok(ChatResponse {
                        text: reply.text,
                        prompt_tokens: reply.prompt_tokens.unwrap_or(0),
                        completion_tokens: reply.completion_tokens.unwrap_or(0),
                        attempts,
                        usage_reported,
                    });
                }
                Err(SendError::Fatal(msg)) => return Err(GatewayError::Backend(msg)),
                Err(e) => e,
            };
            if attempts >= max_attempts {
                return Err(match err {
                    SendError::Timeout(last) => GatewayError::Timeout { attempts, last },
                    other => GatewayError::RetriesExhausted {
                        attempts,
                        last: other.to_string(),
                    },
                });
            }
            let delay = self.retry.base_delay * 2u32.saturating_pow(attempts - 1);
            log::warn!("attempt {attempts} failed ({err}); retrying in {delay:?}");
            std::thread::sleep(delay);
        }
    }
}

/// One-shot convenience: build a gateway for `config` and send `request`.
pub fn complete(config: &BackendConfig, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
    Gateway::from_config(config)?.complete(&config.prepare(request.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::sync::Mutex;

    struct Failing {
        sent: Mutex<u32>,
        error: SendError,
    }

    impl Backend for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn send(&self, _: &ChatRequest) -> Result<BackendReply, SendError> {
            *self.sent.lock().unwrap() += 1;
            Err(self.error.clone())
        }
    }

    fn failing(error: SendError) -> (Arc<Failing>, Gateway) {
        let b = Arc::new(Failing { sent: Mutex::new(0), error });
        let g = Gateway::new(b.clone(), RetryPolicy { base_delay: Duration::ZERO });
        (b, g)
    }

    #[test]
    fn zero_retries_means_one_attempt() {
        let (b, g) = failing(SendError::Transient("connection reset".into()));
        let err = g.complete(&ChatRequest::new("s", "u").with_max_retries(0)).unwrap_err();
        assert_eq!(*b.sent.lock().unwrap(), 1);
        assert!(matches!(err, GatewayError::RetriesExhausted { attempts: 1, .. }));
    }

    #[test]
    fn retries_transient_failures_up_to_limit() {
        let (b, g) = failing(SendError::Timeout("slow".into()));
        let err = g.complete(&ChatRequest::new("s", "u").with_max_retries(3)).unwrap_err();
        assert_eq!(*b.sent.lock().unwrap(), 4);
        assert!(matches!(err, GatewayError::Timeout { attempts: 4, .. }));
    }

    #[test]
    fn fatal_errors_are_not_retried() {
        let (b, g) = failing(SendError::Fatal("HTTP 401".into()));
        assert!(matches!(g.complete(&ChatRequest::new("s", "u")), Err(GatewayError::Backend(_))));
        assert_eq!(*b.sent.lock().unwrap(), 1);
    }

    #[test]
    fn http_without_credential_fails_before_network() {
        let cfg = BackendConfig {
            endpoint: Some("http://127.0.0.1:9/v1/chat".into()),
            credential_env_var: "PRICE_AUDIT_TEST_UNSET_VARIABLE".into(),
            ..BackendConfig::default()
        };
        assert_eq!(
            Gateway::from_config(&cfg).unwrap_err(),
            GatewayError::MissingCredential("PRICE_AUDIT_TEST_UNSET_VARIABLE".into())
        );
        let no_endpoint = BackendConfig::default();
        assert_eq!(Gateway::from_config(&no_endpoint).unwrap_err(), GatewayError::MissingEndpoint);
    }

    #[test]
    fn mock_is_byte_identical() {
        let g = Gateway::mock();
        let req = ChatRequest::new("system", "user").with_role(AgentRole::Padding, json!({}));
        let a = g.complete(&req).unwrap();
        let b = g.complete(&req).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.attempts, 1);
        assert!(a.usage_reported);
    }

    #[test]
    fn empty_prompts_rejected() {
        assert_eq!(Gateway::mock().complete(&ChatRequest::new("", "u")), Err(GatewayError::EmptyPrompt));
    }
}
