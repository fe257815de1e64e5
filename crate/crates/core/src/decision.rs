//! Quadrant zoning and the two deterministic decision strategies.
//!
//! The target sits at the origin of a (net utility, relative price gap) plane.
//! A neighbor's relative gap is `(target_price - neighbor_price) / target_price`,
//! so positive gaps are cheaper neighbors. Zones:
//!
//! * `AP`: similar-or-better utility, cheaper by at least the price padding.
//! * `NOT_AP`: worse utility, priced at or above the target.
//! * `TRADEOFF`: similar utility inside the price padding band.
//! * `UNINFORMATIVE`: everything else.
//!
//! Utility counts as similar while `|net_utility| <= utility_padding`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const DEFAULT_PRICE_PADDING: f64 = 0.50;
pub const LLM_PADDING_MIN: f64 = 0.10;
pub const LLM_PADDING_MAX: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PaddingMode {
    #[default]
    Fixed,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PaddingConfig {
    /// Minimum fractional price gap for AP membership, in `[0, 1)`.
    pub price_padding: f64,
    /// Half-width of the similar-utility band.
    #[serde(default)]
    pub utility_padding: u32,
    #[serde(default)]
    pub padding_mode: PaddingMode,
}

impl Default for PaddingConfig {
    fn default() -> Self {
        Self {
            price_padding: DEFAULT_PRICE_PADDING,
            utility_padding: 0,
            padding_mode: PaddingMode::Fixed,
        }
    }
}

impl PaddingConfig {
    pub fn fixed(price_padding: f64, utility_padding: u32) -> Self {
        Self {
            price_padding,
            utility_padding,
            padding_mode: PaddingMode::Fixed,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.price_padding.is_finite() && (0.0..1.0).contains(&self.price_padding)
    }
}

/// A backend-proposed price padding after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaddingProposal {
    pub fraction: f64,
    pub from_percent: bool,
    pub clamped: bool,
}

/// Turns a raw proposal into a fraction: values above 1 are read as
/// percentages, then the result is clamped to `[0.10, 0.90]`.
pub fn normalize_padding_proposal(raw: f64) -> Option<PaddingProposal> {
    if !raw.is_finite() {
        return None;
    }
    let from_percent = raw > 1.0;
    let fraction = if from_percent { raw / 100.0 } else { raw };
    let clamped_value = fraction.clamp(LLM_PADDING_MIN, LLM_PADDING_MAX);
    Some(PaddingProposal {
        fraction: clamped_value,
        from_percent,
        clamped: clamped_value != fraction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Zone {
    Ap,
    NotAp,
    Tradeoff,
    Uninformative,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Ap => "AP",
            Zone::NotAp => "NOT_AP",
            Zone::Tradeoff => "TRADEOFF",
            Zone::Uninformative => "UNINFORMATIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityClass {
    Better,
    Similar,
    Worse,
}

impl UtilityClass {
    pub fn of(net_utility: i64, utility_padding: u32) -> Self {
        let band = i64::from(utility_padding);
        if net_utility > band {
            UtilityClass::Better
        } else if net_utility < -band {
            UtilityClass::Worse
        } else {
            UtilityClass::Similar
        }
    }
}

/// `(target_price - neighbor_price) / target_price`.
pub fn rel_gap(target_price: f64, neighbor_price: f64) -> f64 {
    (target_price - neighbor_price) / target_price
}

pub fn classify_zone(rel_gap: f64, net_utility: i64, padding: &PaddingConfig) -> Zone {
    let class = UtilityClass::of(net_utility, padding.utility_padding);
    let pad = padding.price_padding;
    match class {
        UtilityClass::Better | UtilityClass::Similar if rel_gap >= pad => Zone::Ap,
        UtilityClass::Worse if rel_gap <= 0.0 => Zone::NotAp,
        UtilityClass::Similar if rel_gap.abs() < pad => Zone::Tradeoff,
        _ => Zone::Uninformative,
    }
}

/// A relevant neighbor placed on the quadrant plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantPoint {
    pub neighbor_id: String,
    pub rel_gap: f64,
    pub net_utility: i64,
    pub zone: Zone,
}

impl QuadrantPoint {
    pub fn new(neighbor_id: impl Into<String>, target_price: f64, neighbor_price: f64, net_utility: i64, padding: &PaddingConfig) -> Self {
        let gap = rel_gap(target_price, neighbor_price);
        Self {
            neighbor_id: neighbor_id.into(),
            rel_gap: gap,
            net_utility,
            zone: classify_zone(gap, net_utility, padding),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ZoneCounts {
    pub ap: usize,
    pub not_ap: usize,
    pub tradeoff: usize,
    pub uninformative: usize,
}

impl ZoneCounts {
    pub fn tally<'a>(zones: impl IntoIterator<Item = &'a Zone>) -> Self {
        let mut c = ZoneCounts::default();
        for z in zones {
            match z {
                Zone::Ap => c.ap += 1,
                Zone::NotAp => c.not_ap += 1,
                Zone::Tradeoff => c.tradeoff += 1,
                Zone::Uninformative => c.uninformative += 1,
            }
        }
        c
    }

    pub fn of_points(points: &[QuadrantPoint]) -> Self {
        Self::tally(points.iter().map(|p| &p.zone))
    }

    pub fn total(&self) -> usize {
        self.ap + self.not_ap + self.tradeoff + self.uninformative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutlierVerdict {
    Yes,
    No,
    Unsure,
}

impl OutlierVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            OutlierVerdict::Yes => "Yes",
            OutlierVerdict::No => "No",
            OutlierVerdict::Unsure => "Unsure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "Yes" | "yes" | "YES" => Some(OutlierVerdict::Yes),
            "No" | "no" | "NO" => Some(OutlierVerdict::No),
            "Unsure" | "unsure" | "UNSURE" => Some(OutlierVerdict::Unsure),
            _ => None,
        }
    }

    pub fn is_flagged(self) -> bool {
        self == OutlierVerdict::Yes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Worse-pricier veto: one NOT_AP neighbor clears the target.
    #[default]
    Veto,
    /// Quadrant voting: AP neighbors must equal or outnumber NOT_AP ones.
    Voting,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Veto => "veto",
            Strategy::Voting => "voting",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "veto" | "worse-pricier-veto" | "worse_pricier_veto" => Some(Strategy::Veto),
            "voting" | "quadrant-voting" | "quadrant_voting" => Some(Strategy::Voting),
            _ => None,
        }
    }

    /// The strategy's rule applied to zone counts alone.
    pub fn verdict(self, counts: &ZoneCounts) -> OutlierVerdict {
        match self {
            Strategy::Veto => {
                if counts.not_ap >= 1 {
                    OutlierVerdict::No
                } else if counts.ap >= 1 {
                    OutlierVerdict::Yes
                } else {
                    OutlierVerdict::Unsure
                }
            }
            Strategy::Voting => {
                if counts.ap >= 1 && counts.ap >= counts.not_ap {
                    OutlierVerdict::Yes
                } else if counts.not_ap >= 1 {
                    OutlierVerdict::No
                } else {
                    OutlierVerdict::Unsure
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: OutlierVerdict,
    pub explanation: String,
    pub strategy: Strategy,
    pub evidence: ZoneCounts,
    /// Neighbors whose zones determined the verdict.
    #[serde(default)]
    pub deciding_neighbors: Vec<String>,
}

impl Decision {
    /// Whether the stored verdict follows from the stored evidence.
    pub fn is_consistent(&self) -> bool {
        self.strategy.verdict(&self.evidence) == self.verdict
    }
}

fn ids_in(points: &[QuadrantPoint], zone: Zone) -> Vec<String> {
    points
        .iter()
        .filter(|p| p.zone == zone)
        .map(|p| p.neighbor_id.clone())
        .collect()
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        ""
    } else {
        "s"
    }
}

pub fn decide(strategy: Strategy, points: &[QuadrantPoint]) -> Decision {
    let evidence = ZoneCounts::of_points(points);
    let verdict = strategy.verdict(&evidence);
    let ap = ids_in(points, Zone::Ap);
    let not_ap = ids_in(points, Zone::NotAp);

    let (explanation, deciding_neighbors) = match (strategy, verdict) {
        (_, OutlierVerdict::Unsure) if evidence.ap == 0 && evidence.not_ap == 0 => (
            format!(
                "No relevant neighbor fell in an informative zone ({} assessed); insufficient evidence either way.",
                evidence.total()
            ),
            Vec::new(),
        ),
        (Strategy::Veto, OutlierVerdict::No) => (
            format!(
                "Worse-pricier veto: {} neighbor{} of worse utility priced at or above the target ({}); the price is not anomalous.",
                not_ap.len(),
                plural(not_ap.len()),
                not_ap.join(", ")
            ),
            not_ap,
        ),
        (Strategy::Veto, OutlierVerdict::Yes) => (
            format!(
                "No worse-and-pricier neighbor; {} neighbor{} of similar or better utility priced below the target by at least the price padding ({}).",
                ap.len(),
                plural(ap.len()),
                ap.join(", ")
            ),
            ap,
        ),
        (Strategy::Voting, OutlierVerdict::Yes) => (
            format!(
                "Quadrant voting: {} AP neighbor{} ({}) against {} NOT-AP; cheaper comparable products equal or outnumber worse-pricier ones.",
                ap.len(),
                plural(ap.len()),
                ap.join(", "),
                not_ap.len()
            ),
            ap,
        ),
        (Strategy::Voting, OutlierVerdict::No) => (
            format!(
                "Quadrant voting: {} NOT-AP neighbor{} ({}) outnumber {} AP; the price is not anomalous.",
                not_ap.len(),
                plural(not_ap.len()),
                not_ap.join(", "),
                ap.len()
            ),
            not_ap,
        ),
        // Unreachable for both rules: Unsure implies no informative points.
        (_, OutlierVerdict::Unsure) => (String::from("Insufficient evidence."), Vec::new()),
    };

    Decision {
        verdict,
        explanation,
        strategy,
        evidence,
        deciding_neighbors,
    }
}

pub fn decide_veto(points: &[QuadrantPoint]) -> Decision {
    decide(Strategy::Veto, points)
}

pub fn decide_voting(points: &[QuadrantPoint]) -> Decision {
    decide(Strategy::Voting, points)
}
