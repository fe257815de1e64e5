//! Throughput and per-item cost model for audit workloads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostProfile {
    /// Items processed per hour.
    pub throughput: f64,
    /// Currency per item.
    pub unit_cost: f64,
}

impl CostProfile {
    /// Hosted-model agent: 37 items per hour at $0.1053 per item.
    pub const AGENT: CostProfile = CostProfile {
        throughput: 37.0,
        unit_cost: 0.1053,
    };

    /// Human auditor: 3 items per hour at $10 per hour.
    pub const HUMAN: CostProfile = CostProfile {
        throughput: 3.0,
        unit_cost: 10.0 / 3.0,
    };

    pub fn by_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "agent" | "llm" => Some(Self::AGENT),
            "human" => Some(Self::HUMAN),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub hours: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("item count must be nonnegative, got {0}")]
    NegativeCount(f64),
    #[error("throughput must be positive, got {0}")]
    NonPositiveThroughput(f64),
    #[error("batch size must be positive")]
    ZeroBatch,
}

/// Hours `n / throughput` and cost `n * unit_cost` for `n` items.
pub fn cost_time(n: f64, profile: &CostProfile) -> Result<CostEstimate, CostError> {
    if !(n >= 0.0) {
        return Err(CostError::NegativeCount(n));
    }
    if !(profile.throughput > 0.0) {
        return Err(CostError::NonPositiveThroughput(profile.throughput));
    }
    Ok(CostEstimate {
        hours: n / profile.throughput,
        cost: n * profile.unit_cost,
    })
}

/// Per-item cost from token usage: `tokens * rate / batch_size`.
pub fn cost_per_item(api_tokens: f64, rate_per_token: f64, batch_size: usize) -> Result<f64, CostError> {
    if batch_size == 0 {
        return Err(CostError::ZeroBatch);
    }
    Ok(api_tokens * rate_per_token / batch_size as f64)
}

/// Rounds half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    libm::round(x * 100.0) / 100.0
}
