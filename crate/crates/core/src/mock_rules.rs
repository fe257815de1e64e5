//! Deterministic rules behind the offline mock backend.
//!
//! These are documented test fixtures, not a model of pricing judgment:
//! relevance is category equality plus title-token Jaccard >= 0.2; utility
//! compares attribute values present on both sides, reading leading numbers
//! as "higher is better"; brand and quantity weigh 3, everything else 2.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::product::Product;
use crate::similarity::tokenize;
use crate::utility::{AttributeComparison, AttributeVerdict};

pub const RELEVANCE_JACCARD_THRESHOLD: f64 = 0.2;
pub const MOCK_PADDING: f64 = 0.40;

/// Jaccard index of the two titles' lowercase token sets.
pub fn title_jaccard(a: &str, b: &str) -> f64 {
    let sa: BTreeSet<String> = tokenize(a).into_iter().collect();
    let sb: BTreeSet<String> = tokenize(b).into_iter().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

fn same_category(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

pub fn is_relevant(target: &Product, neighbor: &Product) -> bool {
    same_category(&target.category, &neighbor.category)
        && title_jaccard(&target.title, &neighbor.title) >= RELEVANCE_JACCARD_THRESHOLD
}

/// Leading decimal number of a value such as `"512 GB"` or `"-3.5"`.
pub fn leading_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let bytes = s.as_bytes();
    let mut end = 0;
    if matches!(bytes.first(), Some(b'+' | b'-')) {
        end = 1;
    }
    let digits_start = end;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end < bytes.len() && bytes[end] == b'.' {
        let mut frac = end + 1;
        while frac < bytes.len() && bytes[frac].is_ascii_digit() {
            frac += 1;
        }
        if frac > end + 1 {
            end = frac;
        }
    }
    if end == digits_start {
        return None;
    }
    s[..end].parse().ok()
}

/// Neighbor-relative verdict for one attribute value pair.
pub fn compare_values(target: &str, neighbor: &str) -> AttributeVerdict {
    match (leading_number(target), leading_number(neighbor)) {
        (Some(t), Some(n)) if n > t => AttributeVerdict::Better,
        (Some(t), Some(n)) if n < t => AttributeVerdict::Worse,
        (Some(_), Some(_)) => AttributeVerdict::Same,
        _ if target.trim().eq_ignore_ascii_case(neighbor.trim()) => AttributeVerdict::Same,
        _ => AttributeVerdict::Mixed,
    }
}

pub fn weight_for(attribute: &str) -> u8 {
    let a = attribute.trim();
    if a.eq_ignore_ascii_case("brand") || a.eq_ignore_ascii_case("quantity") {
        3
    } else {
        2
    }
}

fn find<'a>(p: &'a Product, name: &str) -> Option<&'a String> {
    p.attributes
        .iter()
        .find(|(k, _)| k.trim().eq_ignore_ascii_case(name.trim()))
        .map(|(_, v)| v)
}

/// Compares the attributes both products carry.
///
/// With `restrict`, only the listed names are considered (in list order);
/// otherwise the target's attributes in name order. `limit` truncates the
/// result to the first `limit` comparable attributes.
pub fn compare_attributes(target: &Product, neighbor: &Product, restrict: Option<&[String]>, limit: Option<usize>) -> Vec<AttributeComparison> {
    let names: Vec<&str> = match restrict {
        Some(list) => list.iter().map(String::as_str).collect(),
        None => target.attributes.keys().map(String::as_str).collect(),
    };
    names
        .into_iter()
        .filter_map(|name| {
            let t = find(target, name)?;
            let n = find(neighbor, name)?;
            Some(AttributeComparison::new(name, compare_values(t, n), weight_for(name)))
        })
        .take(limit.unwrap_or(usize::MAX))
        .collect()
}
