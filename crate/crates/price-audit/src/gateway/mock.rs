//! Offline mock backend driven by the deterministic rules in
//! [`price_audit_core::mock_rules`].

use price_audit_core::decision::{decide, QuadrantPoint, Strategy};
use price_audit_core::mock_rules::{self, MOCK_PADDING};
use price_audit_core::Product;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{AgentRole, Backend, BackendReply, ChatRequest, SendError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MockError {
    #[error("mock backend needs an agent role on the request")]
    UnknownRole,
    #[error("payload does not match the {role} schema: {detail}")]
    Schema { role: &'static str, detail: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairPayload {
    pub target: Product,
    pub neighbor: Product,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityPayload {
    pub target: Product,
    pub neighbor: Product,
    /// Attribute names fixed by the mode; `None` compares every shared one.
    #[serde(default)]
    pub attributes: Option<Vec<String>>,
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionPayload {
    pub points: Vec<QuadrantPoint>,
    pub strategy: Strategy,
}

fn parse<T: for<'de> Deserialize<'de>>(role: AgentRole, payload: &Value) -> Result<T, MockError> {
    serde_json::from_value(payload.clone()).map_err(|e| MockError::Schema {
        role: role.as_str(),
        detail: e.to_string(),
    })
}

/// Deterministic reply object for `role` given its structured payload.
pub fn mock_oracle(role: AgentRole, payload: &Value) -> Result<Value, MockError> {
    match role {
        AgentRole::Relevance => {
            let p: PairPayload = parse(role, payload)?;
            let jaccard = mock_rules::title_jaccard(&p.target.title, &p.neighbor.title);
            let same_category = p.target.category.trim().eq_ignore_ascii_case(p.neighbor.category.trim());
            let relevant = mock_rules::is_relevant(&p.target, &p.neighbor);
            let explanation = format!(
                "{} category; title token overlap {:.2} {} the 0.20 comparability bar.",
                if same_category { "Same" } else { "Different" },
                jaccard,
                if jaccard >= mock_rules::RELEVANCE_JACCARD_THRESHOLD { "meets" } else { "misses" },
            );
            Ok(json!({
                "explanation": explanation,
                "relevance": if relevant { "Relevant" } else { "Irrelevant" },
            }))
        }
        AgentRole::Utility => {
            let p: UtilityPayload = parse(role, payload)?;
            let comparisons = mock_rules::compare_attributes(&p.target, &p.neighbor, p.attributes.as_deref(), p.limit);
            let items: Vec<Value> = comparisons
                .iter()
                .map(|c| {
                    json!({
                        "attribute": c.attribute,
                        "verdict": c.verdict,
                        "utility": c.weight,
                        "analysis": format!(
                            "{} vs {}",
                            p.neighbor.attributes.iter().find(|(k, _)| k.eq_ignore_ascii_case(&c.attribute)).map(|(_, v)| v.as_str()).unwrap_or("?"),
                            p.target.attributes.iter().find(|(k, _)| k.eq_ignore_ascii_case(&c.attribute)).map(|(_, v)| v.as_str()).unwrap_or("?"),
                        ),
                    })
                })
                .collect();
            Ok(json!({ "comparisons": items }))
        }
        AgentRole::Padding => Ok(json!({
            "explanation": "Fixed mock padding.",
            "price_padding": MOCK_PADDING,
        })),
        AgentRole::Decision => {
            let p: DecisionPayload = parse(role, payload)?;
            let d = decide(p.strategy, &p.points);
            Ok(json!({
                "explanation": d.explanation,
                "decision": d.verdict.as_str(),
            }))
        }
    }
}

fn word_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

/// Answers every request from [`mock_oracle`]; never touches the network.
#[derive(Debug, Default, Clone, Copy)]
pub struct MockBackend;

impl Backend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn send(&self, request: &ChatRequest) -> Result<BackendReply, SendError> {
        let role = request.role.ok_or_else(|| SendError::Fatal(MockError::UnknownRole.to_string()))?;
        let payload = request.payload.clone().unwrap_or(Value::Null);
        let reply = mock_oracle(role, &payload).map_err(|e| SendError::Fatal(e.to_string()))?;
        let text = reply.to_string();
        Ok(BackendReply {
            prompt_tokens: Some(word_count(&request.system_prompt) + word_count(&request.user_message)),
            completion_tokens: Some(word_count(&text)),
            text,
        })
    }
}
