//! Shared fixtures for the integration tests.
//!
//! Synthetic catalog: 10 categories x 6 products. In each category five
//! "normal" products rise in spec and price together and one "planted"
//! product has the lowest spec but costs several times the dearest normal
//! one. Titles share two of three tokens within a category and none across
//! categories, so the mock relevance rule passes exactly the same-category
//! neighbors.
//!
//! Hand trace under the mock rules (generic mode, utility padding 0):
//! - planted target: every normal neighbor is better (+2) and cheaper by
//!   `1 - p_i / P`, so AP whenever that gap reaches the price padding and
//!   never NOT_AP. Yes under both strategies while one gap qualifies.
//! - normal target j: the planted neighbor is worse (-2) and pricier, so
//!   NOT_AP; other normals are either worse-and-cheaper or
//!   better-and-pricier, both UNINFORMATIVE. No under both strategies.
//!
//! With normal prices `b * (1 + 0.1 i)` and planted price `1.5 m b`, the
//! largest planted gap is `1 - 1.1 / (1.5 m)`: above 0.5 for every m >= 2,
//! and at least 0.75 only for m >= 2.934 (six of the ten multipliers).

#![allow(dead_code)]

use std::path::Path;

use price_audit::gateway::BackendConfig;
use price_audit::pipeline::PipelineConfig;
use price_audit_core::{PaddingConfig, Product, Strategy};

pub const CATEGORIES: [(&str, &str); 10] = [
    ("quiet", "blender"),
    ("cordless", "drill"),
    ("ergonomic", "keyboard"),
    ("oak", "bookshelf"),
    ("ceramic", "heater"),
    ("gooseneck", "kettle"),
    ("folding", "treadmill"),
    ("espresso", "grinder"),
    ("robotic", "vacuum"),
    ("hiking", "backpack"),
];

pub const MULTIPLIERS: [f64; 10] = [2.0, 2.3, 2.6, 2.9, 3.2, 3.5, 3.8, 4.1, 4.4, 4.7];

/// Planted targets flagged at padding 0.30, 0.50 and 0.75 (hand-derived).
pub const EXPECTED_PLANTED_YES: [usize; 3] = [10, 10, 6];

pub fn planted_id(c: usize) -> String {
    format!("{}-planted", CATEGORIES[c].1)
}

pub fn normal_id(c: usize, i: usize) -> String {
    format!("{}-normal-{i}", CATEGORIES[c].1)
}

pub fn planted_ids() -> Vec<String> {
    (0..10).map(planted_id).collect()
}

pub fn normal_ids() -> Vec<String> {
    (0..10).flat_map(|c| (1..=5).map(move |i| normal_id(c, i))).collect()
}

fn spec_product(id: String, c: usize, variant: &str, price: f64, level: f64) -> Product {
    let (adj, noun) = CATEGORIES[c];
    Product::new(id, format!("{adj} {noun} {variant}"), noun, price)
        .with_attribute("brand", format!("{adj}co"))
        .with_attribute("capacity", format!("{}", 10.0 * level))
        .with_attribute("power", format!("{} W", 100.0 * level))
}

/// The 60-product catalog with every price multiplied by `scale`.
pub fn synthetic_products(scale: f64) -> Vec<Product> {
    let mut out = Vec::new();
    for c in 0..10 {
        let base = 20.0 * (c as f64 + 1.0);
        for i in 1..=5 {
            out.push(spec_product(normal_id(c, i), c, &format!("mk{i}"), scale * base * (1.0 + 0.1 * i as f64), i as f64));
        }
        out.push(spec_product(planted_id(c), c, "lite", scale * 1.5 * MULTIPLIERS[c] * base, 0.5));
    }
    out
}

fn mouse(id: &str, price: f64, dpi: u32, buttons: u32, suffix: &str) -> Product {
    Product::new(id, format!("Acme Wireless Mouse{suffix}"), "mice", price)
        .with_attribute("brand", "Acme")
        .with_attribute("dpi", dpi.to_string())
        .with_attribute("buttons", buttons.to_string())
}

/// $150 target and one inferior mouse at $180 (20% above the target).
pub fn mouse_veto_products() -> Vec<Product> {
    vec![mouse("mouse-150", 150.0, 1600, 6, ""), mouse("mouse-180", 180.0, 800, 3, " Basic")]
}

/// $150 target, three better mice at $100 and two worse mice at $200.
pub fn mouse_voting_products() -> Vec<Product> {
    let mut v = vec![mouse("mouse-150", 150.0, 1600, 6, "")];
    v.extend((1..=3).map(|i| mouse(&format!("better-{i}"), 100.0, 3200, 8, " Pro")));
    v.extend((1..=2).map(|i| mouse(&format!("worse-{i}"), 200.0, 800, 3, " Basic")));
    v
}

pub fn mock_config(price_padding: f64, strategy: Strategy) -> PipelineConfig {
    PipelineConfig {
        padding: PaddingConfig::fixed(price_padding, 0),
        strategy,
        backend: BackendConfig::mock(),
        record_timing: false,
        ..PipelineConfig::default()
    }
}

pub fn write_jsonl(path: &Path, products: &[Product]) {
    let text: String = products.iter().map(|p| serde_json::to_string(p).unwrap() + "\n").collect();
    std::fs::write(path, text).unwrap();
}
