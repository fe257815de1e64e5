//! Per-target orchestration: k-NN, relevance, utility, zones, decision.
//!
//! Stages run in order for each target. Within the relevance and utility
//! stages the per-neighbor calls fan out over at most `max_concurrency`
//! threads; results are re-collected in rank order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use price_audit_core::decision::{decide, PaddingMode};
use price_audit_core::{AttributeMode, Catalog, Decision, NeighborCandidate, OutlierVerdict, PaddingConfig, QuadrantPoint, Strategy, UtilityReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::decision::{llm_decide, propose_padding, DecisionSource};
use crate::agents::relevance::{classify_neighbor, filter_relevant, Relevance, RelevanceVerdict};
use crate::agents::utility::compare_pair;
use crate::agents::CallRecord;
use crate::gateway::{BackendConfig, Gateway, GatewayError};

pub const RECORD_SCHEMA: &str = "price-audit.assessment/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecisionMode {
    #[default]
    Deterministic,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub k: usize,
    pub padding: PaddingConfig,
    pub attribute_mode: AttributeMode,
    pub strategy: Strategy,
    pub decision_mode: DecisionMode,
    pub backend: BackendConfig,
    pub max_concurrency: usize,
    /// Store wall-clock duration in records. Off for byte-stable traces.
    pub record_timing: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: 7,
            padding: PaddingConfig::default(),
            attribute_mode: AttributeMode::default(),
            strategy: Strategy::Veto,
            decision_mode: DecisionMode::Deterministic,
            backend: BackendConfig::default(),
            max_concurrency: 4,
            record_timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown target product `{0}`")]
    UnknownTarget(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if self.max_concurrency == 0 {
            return bad("max_concurrency must be positive".into());
        }
        if !self.padding.is_valid() {
            return bad(format!("price_padding {} is outside [0, 1)", self.padding.price_padding));
        }
        if self.attribute_mode.mode.is_dynamic() && self.attribute_mode.top_n < price_audit_core::utility::MIN_TOP_N {
            return bad(format!("top_n must be at least {}", price_audit_core::utility::MIN_TOP_N));
        }
        if self.backend.temperature < 0.0 || self.backend.timeout_seconds <= 0.0 {
            return bad("temperature must be >= 0 and timeout_seconds > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Retrieved,
    Relevant,
    Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrace {
    pub product_id: String,
    pub similarity: f64,
    pub rank: usize,
    pub price: f64,
    /// Furthest stage this candidate reached.
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct TokenTotals {
    pub calls: usize,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Calls whose backend omitted usage; their counts are recorded as 0.
    pub unreported: usize,
}

impl TokenTotals {
    pub fn of(calls: &[CallRecord]) -> Self {
        calls.iter().fold(Self::default(), |mut t, c| {
            t.calls += 1;
            t.prompt_tokens += c.prompt_tokens;
            t.completion_tokens += c.completion_tokens;
            t.unreported += usize::from(!c.usage_reported);
            t
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRecord {
    pub schema: String,
    pub target_id: String,
    pub target_price: f64,
    pub config: PipelineConfig,
    /// Padding the zones were classified with (differs from the config in
    /// llm padding mode).
    pub padding: PaddingConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub padding_note: Option<String>,
    pub candidates: Vec<CandidateTrace>,
    pub relevance: Vec<RelevanceVerdict>,
    pub utility: Vec<UtilityReport>,
    pub points: Vec<QuadrantPoint>,
    pub decision: Decision,
    pub decision_source: DecisionSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision_note: Option<String>,
    pub calls: Vec<CallRecord>,
    pub tokens: TokenTotals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
}

impl AssessmentRecord {
    pub fn verdict(&self) -> OutlierVerdict {
        self.decision.verdict
    }

    /// Checks the trace invariants: stage monotonicity, complete exclusion
    /// reasons, and a decision recomputable from the stored points.
    pub fn check_invariants(&self) -> Result<(), String> {
        for c in &self.candidates {
            if c.stage != Stage::Decision && c.exclusion.is_none() {
                return Err(format!("candidate {} stopped at {:?} without a reason", c.product_id, c.stage));
            }
        }
        for r in &self.utility {
            let reached = self.candidates.iter().find(|c| c.product_id == r.neighbor_id).map(|c| c.stage);
            if !matches!(reached, Some(Stage::Relevant | Stage::Decision)) {
                return Err(format!("utility report for {} which did not pass relevance", r.neighbor_id));
            }
            if !r.is_consistent() {
                return Err(format!("utility report for {} has an inconsistent score", r.neighbor_id));
            }
        }
        for p in &self.points {
            if !self.utility.iter().any(|r| r.neighbor_id == p.neighbor_id) {
                return Err(format!("point {} has no utility report", p.neighbor_id));
            }
        }
        if self.decision_source != DecisionSource::Llm {
            let again = decide(self.decision.strategy, &self.points);
            if again.verdict != self.decision.verdict || again.evidence != self.decision.evidence {
                return Err("decision does not follow from the stored points".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum BatchItem {
    Assessed(Box<AssessmentRecord>),
    Failed { target_id: String, error: String },
}

impl BatchItem {
    pub fn target_id(&self) -> &str {
        match self {
            BatchItem::Assessed(r) => &r.target_id,
            BatchItem::Failed { target_id, .. } => target_id,
        }
    }

    pub fn record(&self) -> Option<&AssessmentRecord> {
        match self {
            BatchItem::Assessed(r) => Some(r),
            BatchItem::Failed { .. } => None,
        }
    }
}

/// Runs `f` over `items` on at most `limit` threads, returning results in
/// input order.
pub fn fan_out<T: Sync, R: Send>(items: &[T], limit: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = limit.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                slots.lock().expect("result slots poisoned")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

pub struct Pipeline {
    config: PipelineConfig,
    gateway: Arc<Gateway>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        let gateway = Gateway::from_config(&config.backend)?;
        Self::with_gateway(config, Arc::new(gateway))
    }

    pub fn with_gateway(config: PipelineConfig, gateway: Arc<Gateway>) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self { config, gateway })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn assess_target(&self, catalog: &Catalog, target_id: &str) -> Result<AssessmentRecord, PipelineError> {
        let started = Instant::now();
        let cfg = &self.config;
        let target = catalog.get(target_id).ok_or_else(|| PipelineError::UnknownTarget(target_id.into()))?;
        cfg.attribute_mode
            .validate_for(&target.category)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let neighbors: Vec<NeighborCandidate> = catalog
            .neighbors(target_id, cfg.k)
            .map_err(|_| PipelineError::UnknownTarget(target_id.into()))?;
        let product = |id: &str| catalog.get(id).expect("neighbor ids come from the catalog");

        let mut calls = Vec::new();
        let relevance_outcomes = fan_out(&neighbors, cfg.max_concurrency, |c| classify_neighbor(&self.gateway, target, product(&c.product_id)));
        let mut relevance = Vec::with_capacity(relevance_outcomes.len());
        for o in relevance_outcomes {
            calls.push(o.call);
            relevance.push(o.verdict);
        }
        let relevant_ids = filter_relevant(&relevance, &neighbors);

        let (padding, padding_note) = match cfg.padding.padding_mode {
            PaddingMode::Fixed => (cfg.padding, None),
            PaddingMode::Llm => {
                let relevant: Vec<_> = relevant_ids.iter().map(|id| product(id)).collect();
                let (proposal, call) = propose_padding(&self.gateway, target, &relevant);
                calls.push(call);
                (PaddingConfig { price_padding: proposal.price_padding, ..cfg.padding }, proposal.note)
            }
        };

        let utility_outcomes = fan_out(&relevant_ids, cfg.max_concurrency, |id| compare_pair(&self.gateway, &cfg.attribute_mode, target, product(id)));
        let mut utility = Vec::new();
        let mut utility_failures = Vec::new();
        for (id, o) in relevant_ids.iter().zip(utility_outcomes) {
            calls.push(o.call);
            match o.report {
                Ok(r) => utility.push(r),
                Err(reason) => utility_failures.push((id.clone(), reason)),
            }
        }

        let points: Vec<QuadrantPoint> = utility
            .iter()
            .map(|r| QuadrantPoint::new(r.neighbor_id.clone(), target.price, product(&r.neighbor_id).price, r.net_utility, &padding))
            .collect();

        let candidates: Vec<CandidateTrace> = neighbors
            .iter()
            .map(|c| {
                let v = relevance.iter().find(|v| v.neighbor_id == c.product_id);
                let (stage, exclusion) = match v {
                    Some(v) if v.relevance == Relevance::Relevant => {
                        match utility_failures.iter().find(|(id, _)| *id == c.product_id) {
                            Some((_, reason)) => (Stage::Relevant, Some(format!("utility: {reason}"))),
                            None => (Stage::Decision, None),
                        }
                    }
                    Some(v) => (Stage::Retrieved, Some(match &v.failure {
                        Some(f) => format!("relevance: {f}"),
                        None => "relevance: judged Irrelevant".to_owned(),
                    })),
                    None => (Stage::Retrieved, Some("relevance: no verdict".to_owned())),
                };
                CandidateTrace {
                    product_id: c.product_id.clone(),
                    similarity: c.similarity,
                    rank: c.rank,
                    price: product(&c.product_id).price,
                    stage,
                    exclusion,
                }
            })
            .collect();

        let (mut decision, decision_source, mut decision_note) = match cfg.decision_mode {
            DecisionMode::Deterministic => (decide(cfg.strategy, &points), DecisionSource::Rules, None),
            DecisionMode::Llm => {
                let d = llm_decide(&self.gateway, target, &points, &padding, cfg.strategy);
                calls.push(d.call);
                (d.decision, d.source, d.note)
            }
        };

        let attempted = calls.iter().filter(|c| c.stage != crate::gateway::AgentRole::Decision).count();
        let all_failed = attempted > 0 && calls.iter().filter(|c| c.stage != crate::gateway::AgentRole::Decision).all(|c| c.error.is_some());
        if points.is_empty() && all_failed {
            decision.explanation = format!("no usable evidence: every backend call failed. {}", decision.explanation);
            decision_note.get_or_insert_with(|| "no usable evidence".to_owned());
        }

        let tokens = TokenTotals::of(&calls);
        Ok(AssessmentRecord {
            schema: RECORD_SCHEMA.into(),
            target_id: target.id.clone(),
            target_price: target.price,
            config: cfg.clone(),
            padding,
            padding_note,
            candidates,
            relevance,
            utility,
            points,
            decision,
            decision_source,
            decision_note,
            calls,
            tokens,
            duration_ms: cfg.record_timing.then(|| started.elapsed().as_millis() as u64),
        })
    }

    /// One item per id, in input order; failures stay in their own item.
    pub fn assess_batch<S: AsRef<str>>(&self, catalog: &Catalog, target_ids: &[S]) -> Vec<BatchItem> {
        target_ids
            .iter()
            .map(|id| match self.assess_target(catalog, id.as_ref()) {
                Ok(r) => BatchItem::Assessed(Box::new(r)),
                Err(e) => BatchItem::Failed { target_id: id.as_ref().to_owned(), error: e.to_string() },
            })
            .collect()
    }
}

/// One JSON object per line.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records serialize"));
        out.push('\n');
    }
    out
}
