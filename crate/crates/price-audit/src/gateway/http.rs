//! Generic chat-completion HTTP backend.

use std::collections::BTreeMap;
use std::io;
use std::time::Duration;

use serde_json::{json, Value};

use super::{Backend, BackendReply, ChatRequest, SendError};

pub struct HttpBackend {
    endpoint: String,
    model: String,
    headers: Vec<(String, String)>,
    agent: ureq::Agent,
}

impl HttpBackend {
    /// `auth` is the `(header, value)` pair carrying the credential.
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, auth: (String, String), extra_headers: &BTreeMap<String, String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        let mut headers = vec![auth];
        headers.extend(extra_headers.iter().map(|(k, v)| (k.clone(), v.clone())));
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            headers,
            agent,
        }
    }

    pub fn request_body(&self, request: &ChatRequest) -> Value {
        json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_message},
            ],
            "temperature": request.temperature,
        })
    }
}

/// Text of the first choice (`choices[0].message.content`, `choices[0].text`)
/// or the first content block (`content[0].text`).
pub fn response_text(body: &Value) -> Option<String> {
    let choice = body.get("choices").and_then(|c| c.get(0));
    let from_choice = choice.and_then(|c| {
        c.pointer("/message/content")
            .or_else(|| c.get("text"))
            .and_then(Value::as_str)
    });
    let from_block = || {
        body.get("content").and_then(|c| match c {
            Value::Array(blocks) => blocks.first().and_then(|b| b.get("text")).and_then(Value::as_str),
            Value::String(s) => Some(s.as_str()),
            _ => None,
        })
    };
    from_choice.or_else(from_block).map(str::to_owned)
}

/// `(prompt, completion)` token counts from OpenAI- or Anthropic-style usage.
pub fn response_usage(body: &Value) -> (Option<u64>, Option<u64>) {
    let usage = body.get("usage");
    let field = |a: &str, b: &str| {
        usage.and_then(|u| u.get(a).or_else(|| u.get(b))).and_then(Value::as_u64)
    };
    (field("prompt_tokens", "input_tokens"), field("completion_tokens", "output_tokens"))
}

fn classify(err: ureq::Error) -> SendError {
    match err {
        ureq::Error::Timeout(t) => SendError::Timeout(t.to_string()),
        ureq::Error::Io(e) if matches!(e.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock) => {
            SendError::Timeout(e.to_string())
        }
        ureq::Error::Io(e) => SendError::Transient(e.to_string()),
        ureq::Error::HostNotFound | ureq::Error::ConnectionFailed | ureq::Error::Protocol(_) => {
            SendError::Transient(err.to_string())
        }
        other => SendError::Fatal(other.to_string()),
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn send(&self, request: &ChatRequest) -> Result<BackendReply, SendError> {
        let mut req = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json");
        for (k, v) in &self.headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let timeout = Duration::from_secs_f64(request.timeout_seconds.max(0.001));
        let req = req.config().timeout_global(Some(timeout)).build();
        let mut resp = req.send(self.request_body(request).to_string()).map_err(classify)?;

        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(classify)?;
        if status == 429 || status >= 500 {
            return Err(SendError::Transient(format!("HTTP {status}: {}", truncate(&text))));
        }
        if status >= 400 {
            return Err(SendError::Fatal(format!("HTTP {status}: {}", truncate(&text))));
        }
        let body: Value = serde_json::from_str(&text).map_err(|e| SendError::Fatal(format!("response is not JSON: {e}")))?;
        let content = response_text(&body).ok_or_else(|| SendError::Fatal("response carries no content".into()))?;
        let (prompt_tokens, completion_tokens) = response_usage(&body);
        Ok(BackendReply {
            text: content,
            prompt_tokens,
            completion_tokens,
        })
    }
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(200) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
