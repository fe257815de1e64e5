//! Stage three in LLM mode, and the LLM padding proposer.

use price_audit_core::decision::{decide, normalize_padding_proposal, DEFAULT_PRICE_PADDING};
use price_audit_core::prompts::{decision_prompt, padding_prompt};
use price_audit_core::{Decision, OutlierVerdict, PaddingConfig, Product, QuadrantPoint, Strategy, ZoneCounts};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{call, CallRecord};
use crate::gateway::{extract_json, AgentRole, ChatRequest, Gateway};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionSource {
    Rules,
    Llm,
    /// LLM mode whose reply was unusable; the deterministic rule decided.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmDecision {
    pub decision: Decision,
    pub source: DecisionSource,
    pub note: Option<String>,
    pub call: CallRecord,
}

pub fn build_decision_prompt(target: &Product, points: &[QuadrantPoint], padding: &PaddingConfig, strategy: Strategy) -> ChatRequest {
    let p = decision_prompt(target, points, padding, strategy);
    ChatRequest::new(p.system, p.user).with_role(AgentRole::Decision, json!({ "points": points, "strategy": strategy }))
}

fn parse_decision_reply(text: &str) -> Result<(OutlierVerdict, String), String> {
    let map = extract_json(text).map_err(|e| e.to_string())?;
    let raw = map.get("decision").and_then(Value::as_str).ok_or("reply has no string `decision` field")?;
    let verdict = OutlierVerdict::parse(raw).ok_or_else(|| format!("decision `{raw}` is not Yes/No/Unsure"))?;
    let explanation = map.get("explanation").and_then(Value::as_str).unwrap_or_default().trim().to_owned();
    Ok((verdict, explanation))
}

/// Asks the backend to aggregate the zone evidence. Falls back to `strategy`
/// when the reply is unusable.
pub fn llm_decide(gateway: &Gateway, target: &Product, points: &[QuadrantPoint], padding: &PaddingConfig, strategy: Strategy) -> LlmDecision {
    let (result, record) = call(gateway, build_decision_prompt(target, points, padding, strategy), AgentRole::Decision, None);
    let parsed = match result {
        Ok(resp) => parse_decision_reply(&resp.text).map_err(|e| format!("parse-failure: {e}")),
        Err(e) => Err(format!("backend-failure: {e}")),
    };
    let rules = decide(strategy, points);
    match parsed {
        Ok((verdict, explanation)) => {
            let decision = Decision {
                verdict,
                explanation: if explanation.is_empty() { rules.explanation.clone() } else { explanation },
                strategy,
                evidence: ZoneCounts::of_points(points),
                deciding_neighbors: if verdict == rules.verdict { rules.deciding_neighbors } else { Vec::new() },
            };
            LlmDecision { decision, source: DecisionSource::Llm, note: None, call: record }
        }
        Err(reason) => {
            log::warn!("decision reply for {} unusable ({reason}); using {} rule", target.id, strategy.as_str());
            LlmDecision { decision: rules, source: DecisionSource::Fallback, note: Some(reason), call: record }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedPadding {
    pub price_padding: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn first_number(text: &str) -> Option<f64> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            return text[start..i].trim_end_matches('.').parse().ok();
        }
        i += 1;
    }
    None
}

fn raw_padding(text: &str) -> Option<f64> {
    match extract_json(text) {
        Ok(map) => map.get("price_padding").and_then(|v| v.as_f64().or_else(|| v.as_str().and_then(first_number))),
        Err(_) => first_number(text),
    }
}

/// Asks for a price padding, reading percentages above 1 and clamping into
/// `[0.10, 0.90]`; unusable replies give the 0.50 default.
pub fn propose_padding(gateway: &Gateway, target: &Product, neighbors: &[&Product]) -> (ProposedPadding, CallRecord) {
    let p = padding_prompt(target, neighbors);
    let request = ChatRequest::new(p.system, p.user).with_role(AgentRole::Padding, json!({ "target": target }));
    let (result, record) = call(gateway, request, AgentRole::Padding, None);
    let proposal = match result {
        Ok(resp) => parse_padding_reply(&resp.text),
        Err(e) => ProposedPadding { price_padding: DEFAULT_PRICE_PADDING, note: Some(format!("backend-failure: {e}; default 0.50 used")) },
    };
    (proposal, record)
}

pub fn parse_padding_reply(text: &str) -> ProposedPadding {
    match raw_padding(text).and_then(normalize_padding_proposal) {
        Some(p) => ProposedPadding {
            price_padding: p.fraction,
            note: p.clamped.then(|| format!("proposal {} clamped to {:.2}", raw_padding(text).unwrap_or_default(), p.fraction)),
        },
        None => ProposedPadding {
            price_padding: DEFAULT_PRICE_PADDING,
            note: Some("parse-failure: no padding number in reply; default 0.50 used".into()),
        },
    }
}
