//! Stage two: attribute-by-attribute comparison of a relevant neighbor.

use price_audit_core::prompts::utility_prompt;
use price_audit_core::utility::clamp_weight;
use price_audit_core::{AttributeComparison, AttributeMode, AttributeVerdict, Product, UtilityModeError, UtilityReport};
use serde_json::{json, Map, Value};

use super::{call, CallRecord};
use crate::gateway::{extract_json, AgentRole, ChatRequest, Gateway};

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityOutcome {
    /// `Err` carries the exclusion reason for the trace.
    pub report: Result<UtilityReport, String>,
    pub call: CallRecord,
}

pub fn build_utility_prompt(mode: &AttributeMode, target: &Product, neighbor: &Product) -> Result<ChatRequest, UtilityModeError> {
    let p = utility_prompt(mode, target, neighbor)?;
    let payload = json!({
        "target": target,
        "neighbor": neighbor,
        "attributes": mode.fixed_attributes(&target.category).filter(|_| mode.mode == price_audit_core::ModeKind::StaticCategory),
        "limit": mode.mode.is_dynamic().then_some(mode.top_n),
    });
    Ok(ChatRequest::new(p.system, p.user).with_role(AgentRole::Utility, payload))
}

fn first_str<'a>(obj: &'a Map<String, Value>, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| obj.get(*k).and_then(Value::as_str))
}

/// Parses a utility reply. Every item needs an attribute name and one of the
/// four verdict words; weights default to 1 and are clamped to `[1, 3]`.
pub fn parse_utility_reply(mode: &AttributeMode, neighbor_id: &str, text: &str) -> Result<UtilityReport, String> {
    let map = extract_json(text).map_err(|e| e.to_string())?;
    let items = ["comparisons", "attributes"]
        .iter()
        .find_map(|k| map.get(*k).and_then(Value::as_array))
        .ok_or("reply has no `comparisons` array")?;
    let mut comparisons = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let obj = item.as_object().ok_or_else(|| format!("comparison {i} is not an object"))?;
        let attribute = first_str(obj, &["attribute", "name"]).ok_or_else(|| format!("comparison {i} has no attribute name"))?;
        let raw = first_str(obj, &["verdict", "comparison"]).ok_or_else(|| format!("comparison {i} has no verdict"))?;
        let verdict = AttributeVerdict::parse(raw).ok_or_else(|| format!("verdict `{raw}` is not better/worse/same/mixed"))?;
        let weight = ["utility", "weight", "score"]
            .iter()
            .find_map(|k| obj.get(*k).and_then(|v| v.as_i64().or_else(|| v.as_f64().map(|f| f.round() as i64))))
            .map(clamp_weight)
            .unwrap_or(1);
        let mut c = AttributeComparison::new(attribute.trim(), verdict, weight);
        c.analysis = first_str(obj, &["analysis", "explanation"]).unwrap_or_default().to_owned();
        comparisons.push(c);
    }
    Ok(UtilityReport::from_comparisons(neighbor_id, mode.mode, comparisons))
}

pub fn compare_pair(gateway: &Gateway, mode: &AttributeMode, target: &Product, neighbor: &Product) -> UtilityOutcome {
    let request = match build_utility_prompt(mode, target, neighbor) {
        Ok(r) => r,
        Err(e) => {
            return UtilityOutcome {
                report: Err(format!("config-error: {e}")),
                call: CallRecord {
                    stage: AgentRole::Utility,
                    neighbor_id: Some(neighbor.id.clone()),
                    prompt_tokens: 0,
                    completion_tokens: 0,
                    attempts: 0,
                    usage_reported: false,
                    error: Some(e.to_string()),
                },
            }
        }
    };
    let (result, record) = call(gateway, request, AgentRole::Utility, Some(&neighbor.id));
    let report = match result {
        Ok(resp) => parse_utility_reply(mode, &neighbor.id, &resp.text).map_err(|e| format!("parse-failure: {e}")),
        Err(e) => Err(format!("backend-failure: {e}")),
    };
    UtilityOutcome { report, call: record }
}
