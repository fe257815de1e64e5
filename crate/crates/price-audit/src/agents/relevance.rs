//! Stage one: is a candidate neighbor price-relevant to the target?

use price_audit_core::prompts::relevance_prompt;
use price_audit_core::{NeighborCandidate, Product};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{call, word_count, CallRecord};
use crate::gateway::{extract_json, AgentRole, ChatRequest, Gateway};

pub const EXPLANATION_WORD_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relevance {
    Relevant,
    Irrelevant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceVerdict {
    pub neighbor_id: String,
    pub relevance: Relevance,
    pub explanation: String,
    /// Why the reply could not be used; the neighbor is then Irrelevant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Explanation exceeded the 50-word limit (stored intact).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub overlong: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceOutcome {
    pub verdict: RelevanceVerdict,
    pub call: CallRecord,
}

pub fn build_relevance_prompt(target: &Product, neighbor: &Product) -> ChatRequest {
    let p = relevance_prompt(target, neighbor);
    ChatRequest::new(p.system, p.user).with_role(AgentRole::Relevance, json!({ "target": target, "neighbor": neighbor }))
}

/// Parses a relevance reply; the relevance field must be exactly one of the
/// two category names.
pub fn parse_relevance_reply(neighbor_id: &str, text: &str) -> Result<RelevanceVerdict, String> {
    let map = extract_json(text).map_err(|e| e.to_string())?;
    let relevance = match map.get("relevance").and_then(Value::as_str) {
        Some("Relevant") => Relevance::Relevant,
        Some("Irrelevant") => Relevance::Irrelevant,
        Some(other) => return Err(format!("relevance `{other}` is not \"Relevant\" or \"Irrelevant\"")),
        None => return Err("reply has no string `relevance` field".into()),
    };
    let explanation = map
        .get("explanation")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .unwrap_or("no explanation provided")
        .to_owned();
    Ok(RelevanceVerdict {
        neighbor_id: neighbor_id.into(),
        relevance,
        overlong: word_count(&explanation) > EXPLANATION_WORD_LIMIT,
        explanation,
        failure: None,
    })
}

fn excluded(neighbor_id: &str, reason: String) -> RelevanceVerdict {
    RelevanceVerdict {
        neighbor_id: neighbor_id.into(),
        relevance: Relevance::Irrelevant,
        explanation: format!("excluded: {reason}"),
        failure: Some(reason),
        overlong: false,
    }
}

/// Classifies one neighbor. Unusable replies never fail the assessment; the
/// neighbor is excluded as Irrelevant with the reason recorded.
pub fn classify_neighbor(gateway: &Gateway, target: &Product, neighbor: &Product) -> RelevanceOutcome {
    let (result, record) = call(gateway, build_relevance_prompt(target, neighbor), AgentRole::Relevance, Some(&neighbor.id));
    let verdict = match result {
        Ok(resp) => parse_relevance_reply(&neighbor.id, &resp.text)
            .unwrap_or_else(|e| excluded(&neighbor.id, format!("parse-failure: {e}"))),
        Err(e) => excluded(&neighbor.id, format!("backend-failure: {e}")),
    };
    if verdict.overlong {
        log::warn!("relevance explanation for {} exceeds {EXPLANATION_WORD_LIMIT} words", neighbor.id);
    }
    RelevanceOutcome { verdict, call: record }
}

/// Ids of Relevant candidates, in rank order.
pub fn filter_relevant(verdicts: &[RelevanceVerdict], candidates: &[NeighborCandidate]) -> Vec<String> {
    let mut ranked: Vec<&NeighborCandidate> = candidates.iter().collect();
    ranked.sort_by_key(|c| c.rank);
    ranked
        .into_iter()
        .filter(|c| {
            verdicts
                .iter()
                .any(|v| v.neighbor_id == c.product_id && v.relevance == Relevance::Relevant)
        })
        .map(|c| c.product_id.clone())
        .collect()
}
