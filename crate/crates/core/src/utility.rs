//! Attribute-selection modes and the net-utility scoring rule.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four attributes compared in [`ModeKind::Generic`].
pub const GENERIC_CRITERIA: [&str; 4] = ["build quality", "features", "brand reputation", "quantity"];

pub const DEFAULT_TOP_N: usize = 5;
pub const MIN_TOP_N: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Generic,
    StaticCategory,
    Dynamic,
    WeightedDynamic,
}

impl ModeKind {
    pub const ALL: [ModeKind; 4] = [
        ModeKind::Generic,
        ModeKind::StaticCategory,
        ModeKind::Dynamic,
        ModeKind::WeightedDynamic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModeKind::Generic => "generic",
            ModeKind::StaticCategory => "static_category",
            ModeKind::Dynamic => "dynamic",
            ModeKind::WeightedDynamic => "weighted_dynamic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "generic" => Some(ModeKind::Generic),
            "static" | "static_category" => Some(ModeKind::StaticCategory),
            "dynamic" => Some(ModeKind::Dynamic),
            "weighted_dynamic" | "w_dynamic" | "wdynamic" => Some(ModeKind::WeightedDynamic),
            _ => None,
        }
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, ModeKind::Dynamic | ModeKind::WeightedDynamic)
    }
}

/// How the utility agent chooses which attributes to compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeMode {
    pub mode: ModeKind,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    /// Ordered price-influencing attributes per category.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub static_table: BTreeMap<String, Vec<String>>,
}

fn default_top_n() -> usize {
    DEFAULT_TOP_N
}

impl Default for AttributeMode {
    fn default() -> Self {
        Self::new(ModeKind::Generic)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UtilityModeError {
    #[error("no static attribute list for category `{0}`")]
    MissingCategory(String),
    #[error("top_n must be at least 3, got {0}")]
    TopNTooSmall(usize),
}

impl AttributeMode {
    pub fn new(mode: ModeKind) -> Self {
        Self {
            mode,
            top_n: DEFAULT_TOP_N,
            static_table: BTreeMap::new(),
        }
    }

    pub fn weighted(&self) -> bool {
        self.mode == ModeKind::WeightedDynamic
    }

    /// Checks that this mode can assess products of `category`.
    pub fn validate_for(&self, category: &str) -> Result<(), UtilityModeError> {
        match self.mode {
            ModeKind::Generic => Ok(()),
            ModeKind::StaticCategory => self
                .static_table
                .contains_key(category)
                .then_some(())
                .ok_or_else(|| UtilityModeError::MissingCategory(category.into())),
            ModeKind::Dynamic | ModeKind::WeightedDynamic => {
                if self.top_n < MIN_TOP_N {
                    Err(UtilityModeError::TopNTooSmall(self.top_n))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Attribute names the mode fixes up front; `None` for dynamic modes.
    pub fn fixed_attributes(&self, category: &str) -> Option<Vec<String>> {
        match self.mode {
            ModeKind::Generic => Some(GENERIC_CRITERIA.iter().map(|s| String::from(*s)).collect()),
            ModeKind::StaticCategory => self.static_table.get(category).cloned(),
            ModeKind::Dynamic | ModeKind::WeightedDynamic => None,
        }
    }
}

/// Neighbor-relative-to-target verdict on one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeVerdict {
    Better,
    Worse,
    Same,
    Mixed,
}

impl AttributeVerdict {
    pub fn score(self) -> i64 {
        match self {
            AttributeVerdict::Better => 1,
            AttributeVerdict::Worse => -1,
            AttributeVerdict::Same | AttributeVerdict::Mixed => 0,
        }
    }

    /// Exact, case-insensitive match on the four verdict words.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "better" => Some(AttributeVerdict::Better),
            "worse" => Some(AttributeVerdict::Worse),
            "same" => Some(AttributeVerdict::Same),
            "mixed" => Some(AttributeVerdict::Mixed),
            _ => None,
        }
    }

    pub fn negated(self) -> Self {
        match self {
            AttributeVerdict::Better => AttributeVerdict::Worse,
            AttributeVerdict::Worse => AttributeVerdict::Better,
            v => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeComparison {
    pub attribute: String,
    pub verdict: AttributeVerdict,
    /// Importance in `[1, 3]`.
    pub weight: u8,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub analysis: String,
}

impl AttributeComparison {
    pub fn new(attribute: impl Into<String>, verdict: AttributeVerdict, weight: u8) -> Self {
        Self {
            attribute: attribute.into(),
            verdict,
            weight: clamp_weight(i64::from(weight)),
            analysis: String::new(),
        }
    }
}

pub fn clamp_weight(w: i64) -> u8 {
    w.clamp(1, 3) as u8
}

/// Sum of per-attribute scores (better +1, worse -1, same/mixed 0), each
/// multiplied by its weight when `weighted`.
pub fn net_utility(comparisons: &[AttributeComparison], weighted: bool) -> i64 {
    comparisons
        .iter()
        .map(|c| {
            let s = c.verdict.score();
            if weighted {
                s * i64::from(c.weight)
            } else {
                s
            }
        })
        .sum()
}

/// Outcome of comparing one relevant neighbor against the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub neighbor_id: String,
    pub comparisons: Vec<AttributeComparison>,
    pub net_utility: i64,
    pub mode: ModeKind,
    /// Set when no attribute could be compared; `net_utility` is then 0.
    #[serde(default)]
    pub degenerate: bool,
}

impl UtilityReport {
    pub fn from_comparisons(neighbor_id: impl Into<String>, mode: ModeKind, comparisons: Vec<AttributeComparison>) -> Self {
        let net = net_utility(&comparisons, mode == ModeKind::WeightedDynamic);
        Self {
            neighbor_id: neighbor_id.into(),
            degenerate: comparisons.is_empty(),
            comparisons,
            net_utility: net,
            mode,
        }
    }

    /// Whether the stored score matches the scoring rule applied to the stored
    /// comparisons.
    pub fn is_consistent(&self) -> bool {
        self.net_utility == net_utility(&self.comparisons, self.mode == ModeKind::WeightedDynamic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use AttributeVerdict::*;

    fn cmp(v: AttributeVerdict, w: u8) -> AttributeComparison {
        AttributeComparison::new("a", v, w)
    }

    #[test]
    fn unweighted_and_weighted_examples() {
        let unweighted = [cmp(Better, 1), cmp(Worse, 1), cmp(Same, 1), cmp(Better, 1)];
        assert_eq!(net_utility(&unweighted, false), 1);
        let weighted = [cmp(Better, 3), cmp(Worse, 1), cmp(Same, 2)];
        assert_eq!(net_utility(&weighted, true), 2);
        assert_eq!(net_utility(&[], true), 0);
        assert_eq!(net_utility(&[], false), 0);
    }

    #[test]
    fn weights_clamp() {
        assert_eq!(AttributeComparison::new("a", Better, 0).weight, 1);
        assert_eq!(AttributeComparison::new("a", Better, 9).weight, 3);
        assert_eq!(clamp_weight(-4), 1);
    }

    #[test]
    fn verdict_parsing_is_exact() {
        assert_eq!(AttributeVerdict::parse(" Better "), Some(Better));
        assert_eq!(AttributeVerdict::parse("superior"), None);
    }

    #[test]
    fn mode_validation() {
        let mut m = AttributeMode::new(ModeKind::StaticCategory);
        assert_eq!(m.validate_for("mice"), Err(UtilityModeError::MissingCategory("mice".into())));
        m.static_table.insert("mice".into(), vec!["dpi".into()]);
        assert!(m.validate_for("mice").is_ok());

        let mut d = AttributeMode::new(ModeKind::Dynamic);
        d.top_n = 2;
        assert_eq!(d.validate_for("x"), Err(UtilityModeError::TopNTooSmall(2)));
        assert!(d.fixed_attributes("x").is_none());
        assert_eq!(AttributeMode::default().fixed_attributes("x").unwrap().len(), 4);
    }

    #[test]
    fn only_weighted_dynamic_reports_weighted_sums() {
        let c = vec![cmp(Better, 3), cmp(Better, 3)];
        assert_eq!(UtilityReport::from_comparisons("n", ModeKind::StaticCategory, c.clone()).net_utility, 2);
        assert_eq!(UtilityReport::from_comparisons("n", ModeKind::WeightedDynamic, c).net_utility, 6);
        let empty = UtilityReport::from_comparisons("n", ModeKind::Generic, vec![]);
        assert!(empty.degenerate);
        assert_eq!(empty.net_utility, 0);
    }
}
