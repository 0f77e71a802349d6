use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bayesopt::{ControlPointSet, GpHyperparams, OptimizationResult};
use crate::error::{PlannerError, Result};
use crate::geometry::Vec2;

use super::scenario::{FeatureVector, PlanningScenario, FEATURE_DIM};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub seed: u64,
    pub budget: usize,
}

/// One optimised scenario with its surrogate state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorRecord {
    pub id: u64,
    pub scenario: PlanningScenario,
    pub features: FeatureVector,
    pub best_point: ControlPointSet,
    pub best_value: f64,
    pub hyper: GpHyperparams,
    pub history_x: Vec<ControlPointSet>,
    pub history_y: Vec<f64>,
    pub meta: RecordMeta,
}

impl PriorRecord {
    pub fn from_result(
        id: u64,
        scenario: PlanningScenario,
        features: FeatureVector,
        result: &OptimizationResult,
        hyper: GpHyperparams,
        meta: RecordMeta,
    ) -> Self {
        let (history_x, history_y) = result.history.iter().cloned().unzip();
        PriorRecord {
            id,
            scenario,
            features,
            best_point: result.best_point.clone(),
            best_value: result.best_value,
            hyper,
            history_x,
            history_y,
            meta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = 2 * self.scenario.j;
        if self.history_x.len() != self.history_y.len() || self.history_y.is_empty() {
            return Err(PlannerError::invalid("history lengths differ or are empty"));
        }
        if self.features.0.len() != FEATURE_DIM {
            return Err(PlannerError::invalid(format!("expected {FEATURE_DIM} features, got {}", self.features.0.len())));
        }
        if self.best_point.dim() != dim || self.hyper.dim() != dim || self.history_x.iter().any(|x| x.dim() != dim) {
            return Err(PlannerError::invalid(format!("points must have dimension {dim}")));
        }
        let min = self.history_y.iter().copied().fold(f64::INFINITY, f64::min);
        if min != self.best_value {
            return Err(PlannerError::invalid(format!("best_value {} is not the history minimum {min}", self.best_value)));
        }
        self.hyper.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    field_half_extents: Vec2,
}

/// Prior records for one field size.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub field_half_extents: Vec2,
    pub records: Vec<PriorRecord>,
}

impl Database {
    pub fn new(field_half_extents: Vec2) -> Self {
        Database { field_half_extents, records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Newline-delimited JSON: a header line, then one record per line.
    pub fn to_jsonl(&self) -> String {
        let header = Header { format_version: FORMAT_VERSION, field_half_extents: self.field_half_extents };
        let mut out = serde_json::to_string(&header).expect("header serialises");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serialises"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let parse_err = |line: usize, message: String| PlannerError::Parse { line, message };
        let (_, first) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
        let header: Header = serde_json::from_str(first).map_err(|e| parse_err(1, e.to_string()))?;
        if header.format_version != FORMAT_VERSION {
            return Err(parse_err(1, format!("unsupported format version {}", header.format_version)));
        }
        let mut db = Database::new(header.field_half_extents);
        for (line, l) in lines {
            let record: PriorRecord = serde_json::from_str(l).map_err(|e| parse_err(line, e.to_string()))?;
            record.validate().map_err(|e| parse_err(line, e.to_string()))?;
            db.records.push(record);
        }
        Ok(db)
    }
}

pub fn save(db: &Database, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(PlannerError::DatabaseWrite)?;
    f.write_all(db.to_jsonl().as_bytes()).map_err(PlannerError::DatabaseWrite)?;
    f.flush().map_err(PlannerError::DatabaseWrite)
}

pub fn load(path: &Path) -> Result<Database> {
    Database::parse(&fs::read_to_string(path)?)
}

/// A k-NN hit: position in the database, L1 distance and the record.
#[derive(Debug, Clone, Copy)]
pub struct Neighbor<'a> {
    pub index: usize,
    pub distance: f64,
    pub record: &'a PriorRecord,
}

/// The `k` records closest to `features` in L1 distance, nearest first,
/// ties broken by database order.
pub fn knn_query<'a>(db: &'a Database, features: &FeatureVector, k: usize) -> Result<Vec<Neighbor<'a>>> {
    knn_query_where(db, features, k, |_| true)
}

/// Like [`knn_query`], restricted to records accepted by `filter`.
pub fn knn_query_where<'a>(
    db: &'a Database,
    features: &FeatureVector,
    k: usize,
    filter: impl Fn(&PriorRecord) -> bool,
) -> Result<Vec<Neighbor<'a>>> {
    if k == 0 {
        return Err(PlannerError::invalid("k must be at least 1"));
    }
    if features.0.len() != FEATURE_DIM {
        return Err(PlannerError::invalid(format!("expected {FEATURE_DIM} features, got {}", features.0.len())));
    }
    let mut hits: Vec<Neighbor<'a>> = db
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| filter(r))
        .map(|(index, record)| Neighbor { index, distance: record.features.l1_distance(features), record })
        .collect();
    if hits.is_empty() {
        return Err(PlannerError::EmptyDatabase);
    }
    hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
    hits.truncate(k);
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesopt::KernelKind;

    pub(crate) fn toy_record(id: u64, f0: f64) -> PriorRecord {
        let mut features = vec![0.0; FEATURE_DIM];
        features[0] = f0;
        PriorRecord {
            id,
            scenario: PlanningScenario {
                sp: Vec2::new(0.0, 0.0),
                ep: Vec2::new(100.0, 0.1),
                sv: Vec2::ZERO,
                ev: Vec2::ZERO,
                obstacles: vec![],
                j: 1,
            },
            features: FeatureVector(features),
            best_point: ControlPointSet(vec![50.0, 0.1]),
            best_value: 1.0 / 3.0,
            hyper: GpHyperparams {
                mean: 0.1,
                amplitude: 0.7,
                length_scales: vec![100.0, 200.0],
                noise: 1e-3,
                kernel: KernelKind::Matern52Ard,
            },
            history_x: vec![ControlPointSet(vec![50.0, 0.1]), ControlPointSet(vec![10.0, -3.0])],
            history_y: vec![1.0 / 3.0, 2.5],
            meta: RecordMeta { seed: 1, budget: 2 },
        }
    }

    fn toy_db() -> Database {
        let mut db = Database::new(Vec2::new(1000.0, 1000.0));
        db.records = vec![toy_record(0, 0.0), toy_record(1, 1.0), toy_record(2, 3.0)];
        db
    }

    #[test]
    fn knn_orders_by_l1() {
        let db = toy_db();
        let q = toy_record(9, 0.9).features;
        let hits = knn_query(&db, &q, 2).unwrap();
        assert_eq!(hits.iter().map(|h| h.index).collect::<Vec<_>>(), vec![1, 0]);
        assert!((hits[0].distance - 0.1).abs() < 1e-12 && (hits[1].distance - 0.9).abs() < 1e-12);
    }

    #[test]
    fn knn_identity_and_clamped_k() {
        let db = toy_db();
        let hits = knn_query(&db, &db.records[2].features, 10).unwrap();
        assert_eq!(hits.len(), 3);
        assert_eq!(hits[0].index, 2);
        assert_eq!(hits[0].distance, 0.0);
        assert!(matches!(knn_query(&Database::new(Vec2::new(1.0, 1.0)), &db.records[0].features, 1), Err(PlannerError::EmptyDatabase)));
        assert!(knn_query(&db, &db.records[0].features, 0).is_err());
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let db = toy_db();
        let text = db.to_jsonl();
        let back = Database::parse(&text).unwrap();
        assert_eq!(back, db);
        assert_eq!(back.to_jsonl(), text);
        assert!(text.starts_with("{\"format_version\":1,\"field_half_extents\":[1000.0,1000.0]}\n"));
    }

    #[test]
    fn truncated_file_reports_line() {
        let text = toy_db().to_jsonl();
        let cut = &text[..text.len() - 20];
        match Database::parse(cut) {
            Err(PlannerError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(Database::parse(""), Err(PlannerError::Parse { line: 1, .. })));
    }

    #[test]
    fn inconsistent_record_rejected() {
        let mut db = toy_db();
        db.records[1].best_value = 0.2;
        assert!(matches!(Database::parse(&db.to_jsonl()), Err(PlannerError::Parse { line: 3, .. })));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.jsonl");
        save(&toy_db(), &path).unwrap();
        assert_eq!(load(&path).unwrap(), toy_db());
        assert!(matches!(save(&toy_db(), &dir.path().join("missing/db.jsonl")), Err(PlannerError::DatabaseWrite(_))));
    }
}
