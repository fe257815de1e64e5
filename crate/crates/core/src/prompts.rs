//! System prompt templates and product rendering for the three agents.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::decision::{PaddingConfig, QuadrantPoint, Strategy, ZoneCounts};
use crate::product::Product;
use crate::utility::{AttributeMode, ModeKind, UtilityModeError, GENERIC_CRITERIA};

/// A system prompt plus the single user message sent with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPair {
    pub system: String,
    pub user: String,
}

pub const RELEVANCE_SYSTEM_PROMPT: &str = r#"You are a pricing relevance expert. Determine if a neighbor product
    is relevant for analyzing the target product's pricing strategy and market positioning.

    Categories:
    - "Relevant": Products that customers would directly compare prices for when making
      purchasing decisions. These are direct substitutes, very similar products, or products
      that serve the same primary use case and would influence purchasing decisions.
    - "Irrelevant": Products that provide no meaningful pricing context or comparison value.
      This includes products in different categories, different price tiers, or serving
      different primary needs.

    Consider these factors:
    - Would customers compare prices between these products when making a purchase decision?
    - Do they serve the same primary use case or need?
    - Are they direct substitutes or close alternatives?
    - Would one product's pricing directly influence the other's market positioning?

    Use a stricter standard than typical relevance assessment - only classify as "Relevant"
    if the products are direct competitors that customers would actively compare.

    Format your response as a JSON object with two fields:
    1. 'explanation': Your detailed reasoning for the pricing relevance classification
    (limit to 50 words maximum)
    2. 'relevance': Must be exactly "Relevant" or "Irrelevant"

    Example response:
    {
        "explanation": "Both are premium wireless headphones in the same price range that customers would
        directly compare when choosing between brands for identical use cases.",
        "relevance": "Relevant"
    }"#;

const STATIC_TEMPLATE: &str = r#"You are a product comparison expert using STATIC attribute mode.

CRITICAL: You MUST use these EXACT {count} attributes - NO selection or substitution
allowed:

{attribute_list}

Your task is to:
1. Compare the two products using ALL {count} attributes listed above
2. Assign utility scores (1-3) based on importance for this specific comparison
3. Include Brand as a critical comparison with utility = 3 (critical differentiator)
4. Include Quantity with detailed composition breakdown and utility = 3
5. Provide detailed analysis for each attribute

For each attribute, specify if the Neighbor PRODUCT is "better", "worse", "same", or "mixed" vs the BASE
PRODUCT.

Consider target demographics: bulk buyers, individual consumers, commercial users.

STATIC MODE RULES:
- You MUST use ALL {count} attributes listed above - no exceptions
- NO selection or generation of different attributes allowed
- Focus on functional attributes that impact product functionality and user experience
- Use the exact attribute names as provided above


MANDATORY REQUIREMENTS:
- Use ALL {count} attributes listed above (no selection allowed)
- Brand must ALWAYS be included as a attribute with utility = 3 (critical differentiator)
- Quantity must ALWAYS be included with detailed composition breakdown and utility = 3

CRITICAL: Return ONLY pure JSON - no markdown code blocks, no explanations, no additional text."#;

const GENERIC_TEMPLATE: &str = r#"You are a product comparison expert using GENERIC attribute mode.

Compare the two products on exactly these {count} general price-driving criteria, which apply to every product category:

{attribute_list}

Your task is to:
1. Compare the two products on ALL {count} criteria listed above
2. Assign utility scores (1-3) based on importance for this specific comparison
3. Provide detailed analysis for each criterion

For each attribute, specify if the Neighbor PRODUCT is "better", "worse", "same", or "mixed" vs the BASE
PRODUCT.

CRITICAL: Return ONLY pure JSON - no markdown code blocks, no explanations, no additional text."#;

const DYNAMIC_TEMPLATE: &str = r#"You are a product comparison expert with intelligent attribute selection capabilities.

Your task is to:
1. ANALYZE both product descriptions to identify which attributes are mentioned, implied, or can be
reasonably inferred
2. MATCH available attributes to the product content - only select attributes where both products
have relevant information
3. SELECT exactly {top_n} attributes that are most relevant and differentiating
for these specific products
4. Compare the products using these selected attributes with utility scoring
5. Include Quantity as a critical attribute with detailed composition breakdown for all comparisons
6. Provide detailed analysis for each attribute

For each attribute, specify if the Neighbor PRODUCT is "better", "worse", "same", or "mixed" vs the BASE
PRODUCT.
Also assign utility scores (1-3) based on importance for this specific comparison."#;

const WEIGHTED_ADDENDUM: &str = "The utility score is the relative importance weight of the attribute: the \
net comparison is the sum of each verdict (+1 better, 0 same or mixed, -1 worse) multiplied by its weight, so \
weigh carefully.";

const UTILITY_RESPONSE_FORMAT: &str = r#"Format your response as a JSON object:
{"comparisons": [{"attribute": "<name>", "verdict": "better|worse|same|mixed", "utility": <1-3>, "analysis": "<short reasoning>"}]}"#;

pub const DECISION_SYSTEM_PROMPT: &str = r#"You are a pricing analysis expert. Determine if the target product is anomalous priced.
SIMPLE DECISION RULES:
1. If NO evidence FOR anomalous pricing but ANY evidence AGAINST → "No"
2. If evidence FOR anomalous pricing but NO evidence AGAINST → evaluate strength
3. If both types exist → weigh the evidence (prioritize threshold-meeting items)
4. The HEAVILY "for" or "against" far outweighs the just "against" anomalous pricing as those regions are
highly price informative.
DECISION CRITERIA:
- "Yes": Evidence target is overpriced
- "No": Evidence shows pricing is justified
- "Unsure": Insufficient or conflicting evidence
Format response as JSON: {"explanation": "reasoning (80 words max)", "decision": "Yes/No/Unsure"}"#;

pub const PADDING_SYSTEM_PROMPT: &str = r#"You are a pricing analysis expert. Given a target product and comparable products, propose the minimum percentage price difference between the target and a comparable product of similar or better value that would indicate the target is anomalously highly priced. Consider how much prices normally vary in this category.
Format response as JSON: {"explanation": "reasoning (50 words max)", "price_padding": <percentage between 10 and 90>}"#;

fn fmt_price(x: f64) -> String {
    format!("{x:.2}")
}

/// Plain-text block describing one product.
pub fn render_product(heading: &str, p: &Product) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{heading}:");
    let _ = writeln!(out, "id: {}", p.id);
    let _ = writeln!(out, "title: {}", p.title);
    let _ = writeln!(out, "category: {}", p.category);
    let _ = writeln!(out, "price: {}", fmt_price(p.price));
    if let Some(u) = p.unit_price {
        let _ = writeln!(out, "unit_price: {}", fmt_price(u));
    }
    if p.attributes.is_empty() {
        let _ = writeln!(out, "attributes: none");
    } else {
        let _ = writeln!(out, "attributes:");
        for (k, v) in &p.attributes {
            let _ = writeln!(out, "- {k}: {v}");
        }
    }
    out
}

fn pair_message(target: &Product, neighbor: &Product) -> String {
    let mut out = render_product("TARGET PRODUCT (BASE PRODUCT)", target);
    out.push('\n');
    out.push_str(&render_product("NEIGHBOR PRODUCT", neighbor));
    out
}

pub fn relevance_prompt(target: &Product, neighbor: &Product) -> PromptPair {
    let mut user = pair_message(target, neighbor);
    user.push_str("\nIs the neighbor product price-relevant to the target product?");
    PromptPair {
        system: String::from(RELEVANCE_SYSTEM_PROMPT),
        user,
    }
}

fn numbered(names: &[String]) -> String {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{}. {}", i + 1, n))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The utility agent's system prompt for `mode` applied to `category`.
pub fn utility_system_prompt(mode: &AttributeMode, category: &str) -> Result<String, UtilityModeError> {
    mode.validate_for(category)?;
    let body = match mode.mode {
        ModeKind::Generic => {
            let names: Vec<String> = GENERIC_CRITERIA.iter().map(|s| String::from(*s)).collect();
            GENERIC_TEMPLATE
                .replace("{count}", &format!("{}", names.len()))
                .replace("{attribute_list}", &numbered(&names))
        }
        ModeKind::StaticCategory => {
            // validate_for guarantees the entry exists.
            let names = mode.static_table.get(category).cloned().unwrap_or_default();
            STATIC_TEMPLATE
                .replace("{count}", &format!("{}", names.len()))
                .replace("{attribute_list}", &numbered(&names))
        }
        ModeKind::Dynamic => DYNAMIC_TEMPLATE.replace("{top_n}", &format!("{}", mode.top_n)),
        ModeKind::WeightedDynamic => {
            let mut s = DYNAMIC_TEMPLATE.replace("{top_n}", &format!("{}", mode.top_n));
            s.push('\n');
            s.push_str(WEIGHTED_ADDENDUM);
            s
        }
    };
    Ok(format!("{body}\n\n{UTILITY_RESPONSE_FORMAT}"))
}

pub fn utility_prompt(mode: &AttributeMode, target: &Product, neighbor: &Product) -> Result<PromptPair, UtilityModeError> {
    let system = utility_system_prompt(mode, &target.category)?;
    let mut user = pair_message(target, neighbor);
    user.push_str("\nCompare the NEIGHBOR PRODUCT against the BASE PRODUCT.");
    Ok(PromptPair { system, user })
}

pub fn decision_prompt(target: &Product, points: &[QuadrantPoint], padding: &PaddingConfig, strategy: Strategy) -> PromptPair {
    let counts = ZoneCounts::of_points(points);
    let mut user = render_product("TARGET PRODUCT", target);
    let _ = writeln!(
        user,
        "\nprice padding: {:.0}% | utility padding: {} | reference strategy: {}",
        padding.price_padding * 100.0,
        padding.utility_padding,
        strategy.as_str()
    );
    let _ = writeln!(user, "evidence FOR anomalous pricing (AP zone, similar or better and cheaper): {}", counts.ap);
    let _ = writeln!(user, "evidence AGAINST anomalous pricing (NOT_AP zone, worse and pricier): {}", counts.not_ap);
    let _ = writeln!(user, "trade-off zone: {} | uninformative: {}", counts.tradeoff, counts.uninformative);
    if points.is_empty() {
        let _ = writeln!(user, "relevant neighbors: none");
    } else {
        let _ = writeln!(user, "relevant neighbors (rel_gap = (target - neighbor) / target):");
        for p in points {
            let _ = writeln!(
                user,
                "- {}: rel_gap {:+.3}, net utility {:+}, zone {}",
                p.neighbor_id,
                p.rel_gap,
                p.net_utility,
                p.zone.as_str()
            );
        }
    }
    PromptPair {
        system: String::from(DECISION_SYSTEM_PROMPT),
        user,
    }
}

pub fn padding_prompt(target: &Product, neighbors: &[&Product]) -> PromptPair {
    let mut user = render_product("TARGET PRODUCT", target);
    if neighbors.is_empty() {
        let _ = writeln!(user, "\ncomparable products: none");
    } else {
        let _ = writeln!(user, "\ncomparable products:");
        for n in neighbors {
            let _ = writeln!(user, "- {} | {} | {}", n.id, n.title, fmt_price(n.price));
        }
    }
    PromptPair {
        system: String::from(PADDING_SYSTEM_PROMPT),
        user,
    }
}
