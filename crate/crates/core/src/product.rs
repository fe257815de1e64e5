//! Products, catalogs and top-k candidate neighbor retrieval.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::{cosine, fallback_featurize, SimilarityError, DEFAULT_FALLBACK_DIM};

/// A catalog entry: either an audited target or a candidate neighbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub category: String,
    pub price: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_price: Option<f64>,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

impl Product {
    pub fn new(id: impl Into<String>, title: impl Into<String>, category: impl Into<String>, price: f64) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            category: category.into(),
            price,
            unit_price: None,
            attributes: BTreeMap::new(),
            embedding: None,
        }
    }

    pub fn with_attribute(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(name.into(), value.into());
        self
    }

    pub fn with_embedding(mut self, embedding: Vec<f64>) -> Self {
        self.embedding = Some(embedding);
        self
    }

    /// Checks the per-product invariants (those that need no catalog context).
    pub fn validate(&self) -> Result<(), ProductError> {
        if self.id.is_empty() {
            return Err(ProductError::EmptyId);
        }
        if self.title.trim().is_empty() {
            return Err(ProductError::EmptyTitle);
        }
        if !(self.price.is_finite() && self.price > 0.0) {
            return Err(ProductError::NonPositivePrice(self.price));
        }
        if let Some(u) = self.unit_price {
            if !(u.is_finite() && u > 0.0) {
                return Err(ProductError::NonPositiveUnitPrice(u));
            }
        }
        if let Some(e) = &self.embedding {
            if e.is_empty() {
                return Err(ProductError::EmptyEmbedding);
            }
            if e.iter().any(|x| !x.is_finite()) {
                return Err(ProductError::NonFiniteEmbedding);
            }
            if e.iter().all(|x| *x == 0.0) {
                return Err(ProductError::ZeroNormEmbedding);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProductError {
    #[error("product id is empty")]
    EmptyId,
    #[error("title is empty")]
    EmptyTitle,
    #[error("price must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("unit price must be positive, got {0}")]
    NonPositiveUnitPrice(f64),
    #[error("embedding is empty")]
    EmptyEmbedding,
    #[error("embedding contains non-finite values")]
    NonFiniteEmbedding,
    #[error("embedding has zero norm")]
    ZeroNormEmbedding,
    #[error("embedding dimension {found} does not match catalog dimension {expected}")]
    EmbeddingDimension { expected: usize, found: usize },
    #[error("duplicate product id `{0}`")]
    DuplicateId(String),
    #[error("fallback featurizer failed: {0}")]
    Featurize(SimilarityError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    /// `position` is the 0-based index of the offending product in the input.
    #[error("product #{position} (`{id}`): {kind}")]
    InvalidProduct {
        position: usize,
        id: String,
        kind: ProductError,
    },
    #[error("unknown product id `{0}`")]
    UnknownTarget(String),
}

/// A retrieved neighbor, ranked by cosine similarity to the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborCandidate {
    pub product_id: String,
    pub similarity: f64,
    pub rank: usize,
}

/// An immutable, validated product collection with resolved vectors.
///
/// Products without a supplied embedding get a fallback vector of the
/// catalog dimension (the supplied dimension, or [`DEFAULT_FALLBACK_DIM`]
/// when nothing is supplied).
#[derive(Debug, Clone)]
pub struct Catalog {
    products: Vec<Product>,
    vectors: Vec<Vec<f64>>,
    index: BTreeMap<String, usize>,
    embedding_dim: Option<usize>,
}

impl Catalog {
    pub fn new(products: Vec<Product>) -> Result<Self, CatalogError> {
        Self::with_fallback_dim(products, DEFAULT_FALLBACK_DIM)
    }

    pub fn with_fallback_dim(products: Vec<Product>, fallback_dim: usize) -> Result<Self, CatalogError> {
        let invalid = |position: usize, p: &Product, kind: ProductError| CatalogError::InvalidProduct {
            position,
            id: p.id.clone(),
            kind,
        };

        let mut index = BTreeMap::new();
        let mut embedding_dim = None;
        for (position, p) in products.iter().enumerate() {
            p.validate().map_err(|k| invalid(position, p, k))?;
            if index.insert(p.id.clone(), position).is_some() {
                return Err(invalid(position, p, ProductError::DuplicateId(p.id.clone())));
            }
            if let Some(e) = &p.embedding {
                match embedding_dim {
                    None => embedding_dim = Some(e.len()),
                    Some(expected) if expected != e.len() => {
                        return Err(invalid(
                            position,
                            p,
                            ProductError::EmbeddingDimension {
                                expected,
                                found: e.len(),
                            },
                        ))
                    }
                    Some(_) => {}
                }
            }
        }

        let dim = embedding_dim.unwrap_or(fallback_dim);
        let mut vectors = Vec::with_capacity(products.len());
        for (position, p) in products.iter().enumerate() {
            let v = match &p.embedding {
                Some(e) => e.clone(),
                None => fallback_featurize(&p.title, dim)
                    .map_err(|e| invalid(position, p, ProductError::Featurize(e)))?,
            };
            vectors.push(v);
        }

        Ok(Self {
            products,
            vectors,
            index,
            embedding_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    /// Dimension shared by supplied embeddings, if any were supplied.
    pub fn embedding_dim(&self) -> Option<usize> {
        self.embedding_dim
    }

    pub fn get(&self, id: &str) -> Option<&Product> {
        self.index.get(id).map(|&i| &self.products[i])
    }

    /// Resolved vector (supplied or fallback) for a product.
    pub fn vector(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.vectors[i].as_slice())
    }

    /// Number of products carrying a supplied embedding.
    pub fn supplied_embeddings(&self) -> usize {
        self.products.iter().filter(|p| p.embedding.is_some()).count()
    }

    /// The `k` non-target products most similar to the target.
    ///
    /// Sorted by similarity descending with ties broken by ascending id; `k`
    /// is clamped to the number of available products.
    pub fn neighbors(&self, target_id: &str, k: usize) -> Result<Vec<NeighborCandidate>, CatalogError> {
        let &t = self
            .index
            .get(target_id)
            .ok_or_else(|| CatalogError::UnknownTarget(target_id.into()))?;
        let target = &self.vectors[t];

        let mut scored: Vec<(f64, &str)> = self
            .products
            .iter()
            .zip(&self.vectors)
            .enumerate()
            .filter(|(i, _)| *i != t)
            // Vectors are validated nonzero with a shared dimension.
            .map(|(_, (p, v))| (cosine(target, v).unwrap_or(0.0), p.id.as_str()))
            .collect();
        scored.sort_by(|a, b| match b.0.total_cmp(&a.0) {
            Ordering::Equal => a.1.cmp(b.1),
            o => o,
        });

        Ok(scored
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (similarity, id))| NeighborCandidate {
                product_id: id.into(),
                similarity,
                rank: i + 1,
            })
            .collect())
    }
}
