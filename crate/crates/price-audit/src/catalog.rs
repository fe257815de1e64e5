//! Line-delimited JSON readers for catalogs and static attribute tables.
//!
//! Catalog records: `{"id", "title", "category", "price", "unit_price"?,
//! "attributes"?: {name: value}, "embedding"?: [numbers]}`. Unknown keys are
//! ignored with a warning. Blank lines are skipped.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use price_audit_core::{Catalog, CatalogError, Product, ProductError};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

const CATALOG_KEYS: [&str; 7] = ["id", "title", "category", "price", "unit_price", "attributes", "embedding"];

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {kind}")]
    Invalid { line: usize, kind: ProductError },
    #[error("line {line}: duplicate category `{category}`")]
    DuplicateCategory { line: usize, category: String },
}

fn lines(reader: impl BufRead) -> impl Iterator<Item = (usize, io::Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| (i + 1, l))
}

fn io_err(path: &str) -> impl Fn(io::Error) -> LoadError + '_ {
    move |source| LoadError::Io { path: path.to_owned(), source }
}

pub fn parse_catalog(reader: impl BufRead, source_name: &str) -> Result<Catalog, LoadError> {
    let mut products = Vec::new();
    let mut line_of = Vec::new();
    for (line, text) in lines(reader) {
        let text = text.map_err(io_err(source_name))?;
        if text.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| LoadError::Malformed { line, message: e.to_string() })?;
        let Value::Object(map) = &value else {
            return Err(LoadError::Malformed { line, message: "record is not an object".into() });
        };
        for key in map.keys().filter(|k| !CATALOG_KEYS.contains(&k.as_str())) {
            log::warn!("{source_name}:{line}: ignoring unknown key `{key}`");
        }
        let product: Product = serde_json::from_value(value).map_err(|e| LoadError::Malformed { line, message: e.to_string() })?;
        products.push(product);
        line_of.push(line);
    }
    Catalog::new(products).map_err(|e| match e {
        CatalogError::InvalidProduct { position, kind, .. } => LoadError::Invalid { line: line_of[position], kind },
        CatalogError::UnknownTarget(id) => LoadError::Malformed { line: 0, message: format!("unknown product {id}") },
    })
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, LoadError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = File::open(path).map_err(io_err(&name))?;
    parse_catalog(BufReader::new(file), &name)
}

#[derive(Debug, Deserialize)]
struct TableRecord {
    category: String,
    attributes: Vec<String>,
}

/// Category -> ordered attribute names, from `{"category", "attributes": [...]}` lines.
pub fn parse_static_table(reader: impl BufRead, source_name: &str) -> Result<BTreeMap<String, Vec<String>>, LoadError> {
    let mut table = BTreeMap::new();
    for (line, text) in lines(reader) {
        let text = text.map_err(io_err(source_name))?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: TableRecord = serde_json::from_str(&text).map_err(|e| LoadError::Malformed { line, message: e.to_string() })?;
        if rec.attributes.is_empty() {
            return Err(LoadError::Malformed { line, message: format!("category `{}` lists no attributes", rec.category) });
        }
        if table.insert(rec.category.clone(), rec.attributes).is_some() {
            return Err(LoadError::DuplicateCategory { line, category: rec.category });
        }
    }
    Ok(table)
}

pub fn load_static_table(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<String>>, LoadError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = File::open(path).map_err(io_err(&name))?;
    parse_static_table(BufReader::new(file), &name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Catalog, LoadError> {
        parse_catalog(s.as_bytes(), "test")
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse("").unwrap().len(), 0);
        assert_eq!(parse("\n\n").unwrap().len(), 0);
    }

    #[test]
    fn three_records() {
        let c = parse(concat!(
            r#"{"id":"a","title":"Acme Mouse","category":"mice","price":10}"#, "\n",
            r#"{"id":"b","title":"Zen Mouse","category":"mice","price":12.5,"attributes":{"dpi":"800"},"colour":"red"}"#, "\n",
            r#"{"id":"c","title":"Pad","category":"mice","price":3,"unit_price":1.5,"embedding":null}"#, "\n",
        ))
        .unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.get("b").unwrap().attributes["dpi"], "800");
        assert_eq!(c.get("c").unwrap().unit_price, Some(1.5));
    }

    #[test]
    fn negative_price_names_line() {
        let err = parse(concat!(
            r#"{"id":"a","title":"Acme Mouse","category":"mice","price":10}"#, "\n",
            "\n",
            r#"{"id":"b","title":"Zen Mouse","category":"mice","price":-5}"#, "\n",
        ))
        .unwrap_err();
        assert!(matches!(err, LoadError::Invalid { line: 3, kind: ProductError::NonPositivePrice(_) }), "{err}");
        assert!(err.to_string().starts_with("line 3"));
    }

    #[test]
    fn malformed_and_duplicates() {
        assert!(matches!(parse("{oops}"), Err(LoadError::Malformed { line: 1, .. })));
        assert!(matches!(parse(r#"{"id":"a"}"#), Err(LoadError::Malformed { line: 1, .. })));
        let dup = concat!(
            r#"{"id":"a","title":"x","price":1}"#, "\n",
            r#"{"id":"a","title":"y","price":2}"#,
        );
        assert!(matches!(parse(dup), Err(LoadError::Invalid { line: 2, kind: ProductError::DuplicateId(_) })));
        let dims = concat!(
            r#"{"id":"a","title":"x","price":1,"embedding":[1,0]}"#, "\n",
            r#"{"id":"b","title":"y","price":2,"embedding":[1,0,0]}"#,
        );
        assert!(matches!(parse(dims), Err(LoadError::Invalid { line: 2, kind: ProductError::EmbeddingDimension { .. } })));
    }

    #[test]
    fn static_tables() {
        let t = parse_static_table(
            concat!(r#"{"category":"mice","attributes":["brand","quantity","dpi"]}"#, "\n").as_bytes(),
            "t",
        )
        .unwrap();
        assert_eq!(t["mice"], ["brand", "quantity", "dpi"]);
        let dup = concat!(r#"{"category":"m","attributes":["a"]}"#, "\n", r#"{"category":"m","attributes":["b"]}"#);
        assert!(matches!(parse_static_table(dup.as_bytes(), "t"), Err(LoadError::DuplicateCategory { line: 2, .. })));
    }
}
