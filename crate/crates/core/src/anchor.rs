//! Fuzzy anchoring of utterance spans to world values.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::normalize::{decimal_literals, parse_date, tokenize};
use crate::value::{Value, ValueKind};
use crate::world::World;

/// Longest span, in tokens, that is tried against the world.
pub const MAX_SPAN: usize = 6;

/// Minimum token-set Jaccard similarity for a fuzzy entity match.
pub const JACCARD_THRESHOLD: f64 = 0.8;

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "did", "do", "does", "for", "from", "how",
    "in", "is", "it", "its", "many", "much", "of", "on", "or", "that", "the", "their", "there",
    "this", "to", "was", "were", "what", "when", "where", "which", "who", "with",
];

/// A span of utterance tokens matched to a value of the world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    /// Token range `[start, end)`.
    pub span: (usize, usize),
    pub value: Value,
    pub score: f64,
}

fn entity_score(span: &[String], entity: &str) -> Option<f64> {
    let joined = span.join(" ");
    if joined == entity {
        return Some(1.0);
    }
    let etoks: Vec<&str> = entity.split(' ').collect();
    if span.len() < etoks.len() && span.iter().zip(&etoks).all(|(a, b)| a == b) {
        return Some(span.len() as f64 / etoks.len() as f64);
    }
    let a: BTreeSet<&str> = span.iter().map(String::as_str).collect();
    let b: BTreeSet<&str> = etoks.iter().copied().collect();
    let inter = a.intersection(&b).count() as f64;
    let jaccard = inter / a.union(&b).count() as f64;
    (jaccard >= JACCARD_THRESHOLD).then_some(jaccard)
}

/// Every `(span, value)` pair where the span fuzzily matches an entity,
/// number, or date present in `world`. Overlapping anchors are all kept.
pub fn anchor_entities(utterance: &str, world: &World) -> Vec<Anchor> {
    let tokens = tokenize(utterance);
    let entities = world.nodes_of_kind(ValueKind::Entity);
    let mut out = Vec::new();
    for start in 0..tokens.len() {
        for end in start + 1..=(start + MAX_SPAN).min(tokens.len()) {
            let span = &tokens[start..end];
            if span.iter().all(|t| STOPWORDS.contains(&t.as_str())) {
                continue;
            }
            for e in entities {
                let Value::Entity(text) = e else { continue };
                if text.is_empty() {
                    continue;
                }
                if let Some(score) = entity_score(span, text) {
                    out.push(Anchor { span: (start, end), value: e.clone(), score });
                }
            }
            if end == start + 1 {
                if let Some(&x) = decimal_literals(&span[0]).first() {
                    let v = Value::number(x);
                    if world.contains(&v) {
                        out.push(Anchor { span: (start, end), value: v, score: 1.0 });
                    }
                }
            }
            if let Some(d) = parse_date(&span.join(" ")) {
                let v = Value::Date(d);
                if world.contains(&v) {
                    out.push(Anchor { span: (start, end), value: v, score: 1.0 });
                }
            }
        }
    }
    out
}

/// Anchored values without duplicates, in canonical order.
pub fn anchored_values(anchors: &[Anchor]) -> Vec<Value> {
    anchors.iter().map(|a| a.value.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}
