//! Lenient extraction of a JSON object from model output.

use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("no parsable JSON object in reply")]
    NoObject,
    #[error("reply JSON is a {0}, not an object")]
    NotAnObject(&'static str),
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        // Skip an info string such as `json` up to the end of the line or the
        // first brace, whichever comes first.
        let body_start = after
            .find(['\n', '{', '['])
            .map(|i| if after.as_bytes()[i] == b'\n' { i + 1 } else { i })
            .unwrap_or(0);
        let body = &after[body_start..];
        match body.find("```") {
            Some(end) => {
                blocks.push(&body[..end]);
                rest = &body[end + 3..];
            }
            None => break,
        }
    }
    blocks
}

fn first_value_at_braces(text: &str) -> Option<Value> {
    for (i, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(v)) = stream.next() {
            return Some(v);
        }
    }
    None
}

/// Parses the first JSON object in `text`.
///
/// Accepts a bare object, an object inside a fenced code block, or an object
/// embedded in surrounding prose.
pub fn extract_json(text: &str) -> Result<Map<String, Value>, ExtractError> {
    let trimmed = text.trim();
    if let Ok(v) = serde_json::from_str::<Value>(trimmed) {
        return match v {
            Value::Object(m) => Ok(m),
            other => Err(ExtractError::NotAnObject(kind(&other))),
        };
    }
    for block in fenced_blocks(trimmed) {
        if let Ok(v) = serde_json::from_str::<Value>(block.trim()) {
            return match v {
                Value::Object(m) => Ok(m),
                other => Err(ExtractError::NotAnObject(kind(&other))),
            };
        }
    }
    match first_value_at_braces(trimmed) {
        Some(Value::Object(m)) => Ok(m),
        Some(other) => Err(ExtractError::NotAnObject(kind(&other))),
        None => Err(ExtractError::NoObject),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn direct_object() {
        let m = extract_json(r#"{"decision":"No"}"#).unwrap();
        assert_eq!(m["decision"], "No");
    }

    #[test]
    fn fenced_with_prose() {
        let text = "Sure, here you go:\n```json\n{\"relevance\":\"Relevant\"}\n```\nHope that helps.";
        assert_eq!(extract_json(text).unwrap()["relevance"], "Relevant");
        let inline = "```json {\"relevance\":\"Relevant\"} ```";
        assert_eq!(extract_json(inline).unwrap()["relevance"], "Relevant");
    }

    #[test]
    fn embedded_in_prose() {
        let text = "My answer is {\"decision\": \"Yes\", \"explanation\": \"cheaper {twin}\"} as requested.";
        assert_eq!(extract_json(text).unwrap()["decision"], "Yes");
    }

    #[test]
    fn absence_and_non_maps() {
        assert_eq!(extract_json("no json here"), Err(ExtractError::NoObject));
        assert_eq!(extract_json("[1, 2]"), Err(ExtractError::NotAnObject("array")));
        assert_eq!(extract_json("```\n42\n```"), Err(ExtractError::NotAnObject("number")));
        assert_eq!(extract_json("{broken"), Err(ExtractError::NoObject));
    }

    fn leaf() -> impl Strategy<Value = Value> {
        prop_oneof![
            Just(Value::Null),
            any::<bool>().prop_map(Value::Bool),
            any::<i64>().prop_map(|n| json!(n)),
            "[a-zA-Z0-9 {}`\"]{0,12}".prop_map(Value::String),
        ]
    }

    fn value() -> impl Strategy<Value = Value> {
        leaf().prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
                prop::collection::btree_map("[a-z]{1,6}", inner, 0..4)
                    .prop_map(|m| Value::Object(m.into_iter().collect())),
            ]
        })
    }

    proptest! {
        #[test]
        fn roundtrip_with_and_without_fences(
            m in prop::collection::btree_map("[a-z_]{1,8}", value(), 0..5),
            fenced in any::<bool>(),
            pretty in any::<bool>(),
        ) {
            let map: Map<String, Value> = m.into_iter().collect();
            let v = Value::Object(map.clone());
            let body = if pretty { serde_json::to_string_pretty(&v).unwrap() } else { v.to_string() };
            let text = if fenced { format!("Here it is:\n```json\n{body}\n```\nDone.") } else { body };
            prop_assert_eq!(extract_json(&text).unwrap(), map);
        }
    }
}
