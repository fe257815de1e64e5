//! Cosine similarity and the hashed-token fallback featurizer.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

/// Dimension used by the fallback featurizer when a catalog carries no
/// embeddings of its own.
pub const DEFAULT_FALLBACK_DIM: usize = 256;

/// Smallest dimension the fallback featurizer accepts.
pub const MIN_FALLBACK_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimilarityError {
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("fallback dimension {0} is below the minimum of 8")]
    DimensionTooSmall(usize),
    #[error("title carries no tokens to featurize")]
    NoTokens,
}

/// Cosine similarity `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]` to absorb
/// rounding.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(SimilarityError::ZeroNorm);
    }
    let value = dot / (libm::sqrt(norm_a) * libm::sqrt(norm_b));
    Ok(value.clamp(-1.0, 1.0))
}

/// Lowercase alphanumeric tokens of `text`, in order of appearance.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

// 64-bit FNV-1a. Stable across platforms and process restarts.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Bucket a token lands in for a featurizer of dimension `dim`.
pub fn token_bucket(token: &str, dim: usize) -> usize {
    (fnv1a(token.as_bytes()) % dim as u64) as usize
}

/// Deterministic L2-normalized bag-of-tokens vector for a title.
///
/// Each lowercase token increments the bucket chosen by its FNV-1a hash; the
/// count vector is then normalized to unit length.
pub fn fallback_featurize(title: &str, dim: usize) -> Result<Vec<f64>, SimilarityError> {
    if dim < MIN_FALLBACK_DIM {
        return Err(SimilarityError::DimensionTooSmall(dim));
    }
    let tokens = tokenize(title);
    if tokens.is_empty() {
        return Err(SimilarityError::NoTokens);
    }
    let mut v = vec![0.0; dim];
    for t in &tokens {
        v[token_bucket(t, dim)] += 1.0;
    }
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    for x in &mut v {
        *x /= norm;
    }
    Ok(v)
}
