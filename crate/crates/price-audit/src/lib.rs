//! Catalog IO, backend gateway, agents, pipeline, evaluation and CLI for
//! price-outlier auditing built on [`price_audit_core`].

pub mod agents;
pub mod catalog;
pub mod cli;
pub mod config;
pub mod eval;
pub mod gateway;
pub mod pipeline;
pub mod plot;
