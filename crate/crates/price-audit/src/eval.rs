//! Labeled test sets, metric rows and hyperparameter sweeps.
//!
//! Unsure verdicts count as negative predictions for precision, recall and
//! F1, and as agreement on the one-sided set.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use price_audit_core::decision::PaddingMode;
use price_audit_core::{agreement_rate, cohen_kappa, outlier_rate, precision_recall_f1, Catalog, Label, MetricsError, ModeKind, OutlierVerdict, PaddingConfig, Strategy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::Gateway;
use crate::pipeline::{BatchItem, Pipeline, PipelineConfig, PipelineError};

pub const UNSURE_NOTE: &str = "Unsure verdicts count as negative predictions (P/R/F1) and as agreement on the one-sided set";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetName {
    Silver,
    OneSided,
    Edge,
    Unannotated,
}

impl SetName {
    pub fn as_str(self) -> &'static str {
        match self {
            SetName::Silver => "silver",
            SetName::OneSided => "one_sided",
            SetName::Edge => "edge",
            SetName::Unannotated => "unannotated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledItem {
    pub product_id: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator_labels: Option<Vec<Label>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub name: SetName,
    pub items: Vec<LabeledItem>,
}

impl LabeledSet {
    pub fn new(name: SetName) -> Self {
        Self { name, items: Vec::new() }
    }

    pub fn check(&self) -> Result<(), String> {
        for item in &self.items {
            let ok = match self.name {
                SetName::OneSided => item.label == Label::NotOutlier,
                SetName::Unannotated => item.label == Label::Unlabeled,
                SetName::Silver | SetName::Edge => item.label != Label::Unlabeled,
            };
            if !ok {
                return Err(format!("{}: label {:?} is not allowed in the {} set", item.product_id, item.label, self.name.as_str()));
            }
        }
        Ok(())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.product_id.as_str())
    }

    pub fn labels(&self) -> Vec<Label> {
        self.items.iter().map(|i| i.label).collect()
    }

    /// Kappa between the first two annotators over items that carry at least
    /// two binary annotator labels; `None` when no item qualifies.
    pub fn annotator_kappa(&self) -> Option<Result<f64, MetricsError>> {
        let (a, b): (Vec<bool>, Vec<bool>) = self
            .items
            .iter()
            .filter_map(|i| match i.annotator_labels.as_deref() {
                Some([x, y, ..]) if *x != Label::Unlabeled && *y != Label::Unlabeled => Some((*x == Label::Outlier, *y == Label::Outlier)),
                _ => None,
            })
            .unzip();
        (!a.is_empty()).then(|| cohen_kappa(&a, &b))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledSets {
    pub sets: BTreeMap<SetName, LabeledSet>,
}

impl LabeledSets {
    pub fn get(&self, name: SetName) -> Option<&LabeledSet> {
        self.sets.get(&name)
    }

    pub fn insert(&mut self, set: LabeledSet) {
        self.sets.insert(set.name, set);
    }

    /// Every labeled product id once, in set order then file order.
    pub fn all_ids(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.sets
            .values()
            .flat_map(|s| s.ids())
            .filter(|id| seen.insert(*id))
            .map(str::to_owned)
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: malformed label record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

#[derive(Deserialize)]
struct LabelRecord {
    product_id: String,
    set: SetName,
    label: Label,
    #[serde(default)]
    annotator_labels: Option<Vec<Label>>,
}

pub fn parse_labels(reader: impl BufRead, source_name: &str) -> Result<LabeledSets, LabelError> {
    let mut sets = LabeledSets::default();
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let text = text.map_err(|source| LabelError::Io { path: source_name.into(), source })?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: LabelRecord = serde_json::from_str(&text).map_err(|e| LabelError::Malformed { line, message: e.to_string() })?;
        let set = sets.sets.entry(rec.set).or_insert_with(|| LabeledSet::new(rec.set));
        if set.items.iter().any(|it| it.product_id == rec.product_id) {
            return Err(LabelError::Invalid { line, message: format!("{} listed twice in the {} set", rec.product_id, rec.set.as_str()) });
        }
        set.items.push(LabeledItem { product_id: rec.product_id, label: rec.label, annotator_labels: rec.annotator_labels });
        set.check().map_err(|message| LabelError::Invalid { line, message })?;
    }
    Ok(sets)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabeledSets, LabelError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = File::open(path).map_err(|source| LabelError::Io { path: name.clone(), source })?;
    parse_labels(BufReader::new(file), &name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "lowercase")]
pub enum PaddingChoice {
    Fixed(f64),
    Llm,
}

impl PaddingChoice {
    pub fn label(&self) -> String {
        match self {
            PaddingChoice::Fixed(f) => format!("{:.0}%", f * 100.0),
            PaddingChoice::Llm => "llm".into(),
        }
    }

    pub fn apply(&self, base: PaddingConfig) -> PaddingConfig {
        match *self {
            PaddingChoice::Fixed(f) => PaddingConfig { price_padding: f, padding_mode: PaddingMode::Fixed, ..base },
            PaddingChoice::Llm => PaddingConfig { padding_mode: PaddingMode::Llm, ..base },
        }
    }

    pub fn of(padding: &PaddingConfig) -> Self {
        match padding.padding_mode {
            PaddingMode::Fixed => PaddingChoice::Fixed(padding.price_padding),
            PaddingMode::Llm => PaddingChoice::Llm,
        }
    }
}

/// The swept coordinates of a row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowKey {
    pub padding: PaddingChoice,
    pub k: usize,
    pub mode: ModeKind,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub key: RowKey,
    pub config: PipelineConfig,
    pub silver: Option<SetScores>,
    pub edge: Option<SetScores>,
    pub agreement: Option<f64>,
    pub outlier_rate: Option<f64>,
    pub assessed: usize,
    pub failed: usize,
    /// Set when any assessment or metric failed; failed assessments count as Unsure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

fn scores(set: &LabeledSet, preds: &[OutlierVerdict]) -> Result<SetScores, MetricsError> {
    let pr = precision_recall_f1(preds, &set.labels())?;
    Ok(SetScores { precision: pr.precision, recall: pr.recall, f1: pr.f1, n: preds.len() })
}

/// Scores `predictions` (missing ids count as Unsure) against every set.
pub fn score_predictions(sets: &LabeledSets, predictions: &BTreeMap<String, OutlierVerdict>, key: RowKey, config: PipelineConfig) -> MetricsRow {
    let mut errors = Vec::new();
    let preds_for = |set: &LabeledSet| -> Vec<OutlierVerdict> {
        set.ids().map(|id| predictions.get(id).copied().unwrap_or(OutlierVerdict::Unsure)).collect()
    };
    let nonempty = |name: SetName| sets.get(name).filter(|s| !s.items.is_empty());
    let run = |name: SetName, errors: &mut Vec<String>| {
        nonempty(name).and_then(|s| match scores(s, &preds_for(s)) {
            Ok(v) => Some(v),
            Err(e) => {
                errors.push(format!("{}: {e}", name.as_str()));
                None
            }
        })
    };
    let silver = run(SetName::Silver, &mut errors);
    let edge = run(SetName::Edge, &mut errors);
    let agreement = sets.get(SetName::OneSided).filter(|s| !s.items.is_empty()).and_then(|s| {
        agreement_rate(&preds_for(s), &s.labels()).map_err(|e| errors.push(format!("one_sided: {e}"))).ok()
    });
    let outlier_rate = sets.get(SetName::Unannotated).filter(|s| !s.items.is_empty()).and_then(|s| {
        outlier_rate(&preds_for(s)).map_err(|e| errors.push(format!("unannotated: {e}"))).ok()
    });
    MetricsRow {
        key,
        config,
        silver,
        edge,
        agreement,
        outlier_rate,
        assessed: predictions.len(),
        failed: 0,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
    }
}

/// Assesses every labeled product under `pipeline` and scores the results.
pub fn evaluate(catalog: &Catalog, sets: &LabeledSets, pipeline: &Pipeline) -> MetricsRow {
    let config = pipeline.config().clone();
    let key = RowKey {
        padding: PaddingChoice::of(&config.padding),
        k: config.k,
        mode: config.attribute_mode.mode,
        strategy: config.strategy,
    };
    let items = pipeline.assess_batch(catalog, &sets.all_ids());
    let mut predictions = BTreeMap::new();
    let mut failures = Vec::new();
    for item in &items {
        match item {
            BatchItem::Assessed(r) => {
                predictions.insert(r.target_id.clone(), r.verdict());
            }
            BatchItem::Failed { target_id, error } => failures.push(format!("{target_id}: {error}")),
        }
    }
    let mut row = score_predictions(sets, &predictions, key, config);
    row.failed = failures.len();
    if !failures.is_empty() {
        let msg = format!("{} assessment(s) failed, counted as Unsure (first: {})", failures.len(), failures[0]);
        row.error = Some(match row.error.take() {
            Some(e) => format!("{msg}; {e}"),
            None => msg,
        });
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub paddings: Vec<PaddingChoice>,
    pub ks: Vec<usize>,
    pub modes: Vec<ModeKind>,
    pub strategies: Vec<Strategy>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.paddings.len() * self.ks.len() * self.modes.len() * self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in lexicographic order (padding, k, mode, strategy).
    pub fn points(&self) -> Vec<RowKey> {
        let mut out = Vec::with_capacity(self.len());
        for &padding in &self.paddings {
            for &k in &self.ks {
                for &mode in &self.modes {
                    for &strategy in &self.strategies {
                        out.push(RowKey { padding, k, mode, strategy });
                    }
                }
            }
        }
        out
    }
}

/// One row per grid point. Rows whose configuration is invalid carry the
/// error instead of metrics.
pub fn sweep(catalog: &Catalog, sets: &LabeledSets, base: &PipelineConfig, grid: &Grid, gateway: Arc<Gateway>) -> Result<Vec<MetricsRow>, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    Ok(grid
        .points()
        .into_iter()
        .map(|key| {
            let mut config = base.clone();
            config.padding = key.padding.apply(base.padding);
            config.k = key.k;
            config.attribute_mode.mode = key.mode;
            config.strategy = key.strategy;
            match Pipeline::with_gateway(config.clone(), gateway.clone()) {
                Ok(p) => evaluate(catalog, sets, &p),
                Err(e) => MetricsRow {
                    key,
                    config,
                    silver: None,
                    edge: None,
                    agreement: None,
                    outlier_rate: None,
                    assessed: 0,
                    failed: 0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

pub const TABLE_COLUMNS: [&str; 15] = [
    "padding", "k", "mode", "strategy", "ss_f1", "ss_precision", "ss_recall", "ec_f1", "ec_precision", "ec_recall", "agreement", "outlier_rate", "assessed", "failed", "error",
];

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Comma-separated table with a leading `#` comment on Unsure handling.
pub fn rows_to_csv(rows: &[MetricsRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.key.padding.label(),
            r.key.k.to_string(),
            r.key.mode.as_str().to_owned(),
            r.key.strategy.as_str().to_owned(),
            cell(r.silver.map(|s| s.f1)),
            cell(r.silver.map(|s| s.precision)),
            cell(r.silver.map(|s| s.recall)),
            cell(r.edge.map(|s| s.f1)),
            cell(r.edge.map(|s| s.precision)),
            cell(r.edge.map(|s| s.recall)),
            cell(r.agreement),
            cell(r.outlier_rate),
            r.assessed.to_string(),
            r.failed.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 table");
    format!("# {UNSURE_NOTE}\n{body}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(text: &str) -> Result<LabeledSets, LabelError> {
        parse_labels(text.as_bytes(), "t")
    }

    #[test]
    fn label_invariants() {
        let ok = sets(concat!(
            r#"{"product_id":"a","set":"silver","label":"outlier","annotator_labels":["outlier","not_outlier"]}"#, "\n",
            r#"{"product_id":"b","set":"one_sided","label":"not_outlier"}"#, "\n",
            r#"{"product_id":"c","set":"unannotated","label":"unlabeled"}"#, "\n",
        ))
        .unwrap();
        assert_eq!(ok.all_ids(), ["a", "b", "c"]);
        assert!(matches!(sets(r#"{"product_id":"x","set":"one_sided","label":"outlier"}"#), Err(LabelError::Invalid { line: 1, .. })));
        assert!(matches!(sets(r#"{"product_id":"x","set":"silver","label":"unlabeled"}"#), Err(LabelError::Invalid { .. })));
        assert!(matches!(sets(r#"{"product_id":"x","set":"unannotated","label":"outlier"}"#), Err(LabelError::Invalid { .. })));
        assert!(matches!(sets(r#"{"product_id":"x","set":"gold","label":"outlier"}"#), Err(LabelError::Malformed { .. })));
    }

    #[test]
    fn kappa_over_annotators() {
        let s = sets(concat!(
            r#"{"product_id":"a","set":"silver","label":"outlier","annotator_labels":["outlier","outlier"]}"#, "\n",
            r#"{"product_id":"b","set":"silver","label":"not_outlier","annotator_labels":["not_outlier","not_outlier"]}"#, "\n",
            r#"{"product_id":"c","set":"silver","label":"not_outlier"}"#, "\n",
        ))
        .unwrap();
        assert_eq!(s.get(SetName::Silver).unwrap().annotator_kappa().unwrap().unwrap(), 1.0);
        assert!(LabeledSet::new(SetName::Edge).annotator_kappa().is_none());
    }

    fn key() -> RowKey {
        RowKey { padding: PaddingChoice::Fixed(0.5), k: 7, mode: ModeKind::Generic, strategy: Strategy::Veto }
    }

    #[test]
    fn scoring_counts_missing_as_unsure() {
        let s = sets(concat!(
            r#"{"product_id":"a","set":"silver","label":"outlier"}"#, "\n",
            r#"{"product_id":"b","set":"silver","label":"not_outlier"}"#, "\n",
            r#"{"product_id":"c","set":"one_sided","label":"not_outlier"}"#, "\n",
            r#"{"product_id":"d","set":"unannotated","label":"unlabeled"}"#, "\n",
        ))
        .unwrap();
        let preds = BTreeMap::from([("a".to_owned(), OutlierVerdict::Yes), ("d".to_owned(), OutlierVerdict::Yes)]);
        let row = score_predictions(&s, &preds, key(), PipelineConfig::default());
        let silver = row.silver.unwrap();
        assert_eq!((silver.precision, silver.recall, silver.f1), (1.0, 1.0, 1.0));
        assert_eq!(row.agreement, Some(1.0));
        assert_eq!(row.outlier_rate, Some(1.0));
        assert!(row.edge.is_none());
        assert!(row.error.is_none());
    }

    #[test]
    fn grid_order_and_size() {
        let g = Grid {
            paddings: vec![PaddingChoice::Fixed(0.3), PaddingChoice::Llm],
            ks: vec![3, 7],
            modes: vec![ModeKind::Generic],
            strategies: vec![Strategy::Veto, Strategy::Voting],
        };
        let pts = g.points();
        assert_eq!(pts.len(), 8);
        assert_eq!(pts[1], RowKey { padding: PaddingChoice::Fixed(0.3), k: 3, mode: ModeKind::Generic, strategy: Strategy::Voting });
        assert_eq!(pts[2].k, 7);
        assert_eq!(pts[4].padding, PaddingChoice::Llm);
        let empty = Grid { ks: vec![], ..g };
        let c = Catalog::new(vec![]).unwrap();
        assert!(matches!(
            sweep(&c, &LabeledSets::default(), &PipelineConfig::default(), &empty, Arc::new(Gateway::mock())),
            Err(EvalError::EmptyGrid)
        ));
    }

    #[test]
    fn csv_header() {
        let row = score_predictions(&LabeledSets::default(), &BTreeMap::new(), key(), PipelineConfig::default());
        let t = rows_to_csv(&[row]);
        let mut lines = t.lines();
        assert!(lines.next().unwrap().starts_with("# Unsure"));
        assert_eq!(lines.next().unwrap(), TABLE_COLUMNS.join(","));
        assert!(lines.next().unwrap().starts_with("50%,7,generic,veto,"));
    }
}
