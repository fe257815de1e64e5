//! The three pipeline agents plus the optional padding proposer.

pub mod decision;
pub mod relevance;
pub mod utility;

use serde::{Deserialize, Serialize};

use crate::gateway::{AgentRole, ChatRequest, ChatResponse, Gateway, GatewayError};

/// Token and retry accounting for one backend call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub stage: AgentRole,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neighbor_id: Option<String>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub attempts: u32,
    pub usage_reported: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub(crate) fn call(gateway: &Gateway, request: ChatRequest, stage: AgentRole, neighbor_id: Option<&str>) -> (Result<ChatResponse, GatewayError>, CallRecord) {
    let result = gateway.ask(request);
    let record = match &result {
        Ok(r) => CallRecord {
            stage,
            neighbor_id: neighbor_id.map(str::to_owned),
            prompt_tokens: r.prompt_tokens,
            completion_tokens: r.completion_tokens,
            attempts: r.attempts,
            usage_reported: r.usage_reported,
            error: None,
        },
        Err(e) => CallRecord {
            stage,
            neighbor_id: neighbor_id.map(str::to_owned),
            prompt_tokens: 0,
            completion_tokens: 0,
            attempts: match e {
                GatewayError::RetriesExhausted { attempts, .. } | GatewayError::Timeout { attempts, .. } => *attempts,
                _ => 1,
            },
            usage_reported: false,
            error: Some(e.to_string()),
        },
    };
    (result, record)
}

pub(crate) fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}
