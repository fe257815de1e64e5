//! Allocation-only core of the price-outlier audit engine.
//!
//! Everything here is pure computation: candidate retrieval by cosine
//! similarity, attribute-level utility scoring, quadrant zoning with price and
//! trade-off padding, the veto and voting decision strategies, evaluation
//! metrics and the cost model. Prompt templates and the rules behind the
//! offline mock backend live here as well so they can be shared by any host.
//!
//! IO, HTTP, concurrency and the command line are provided by the
//! `price-audit` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cost;
pub mod decision;
pub mod metrics;
pub mod mock_rules;
pub mod product;
pub mod prompts;
pub mod similarity;
pub mod utility;

pub use cost::{cost_per_item, cost_time, round2, CostError, CostEstimate, CostProfile};
pub use decision::{
    classify_zone, decide, decide_veto, decide_voting, normalize_padding_proposal, rel_gap,
    Decision, OutlierVerdict, PaddingConfig, PaddingMode, PaddingProposal, QuadrantPoint, Strategy,
    UtilityClass, Zone, ZoneCounts,
};
pub use metrics::{
    agreement_rate, cohen_kappa, f1_score, outlier_rate, precision_recall_f1, Label, MetricsError,
    PrecisionRecall,
};
pub use product::{Catalog, CatalogError, NeighborCandidate, Product, ProductError};
pub use similarity::{cosine, fallback_featurize, tokenize, SimilarityError, DEFAULT_FALLBACK_DIM};
pub use utility::{
    net_utility, AttributeComparison, AttributeMode, AttributeVerdict, ModeKind, UtilityReport,
    UtilityModeError,
};
