//! Model, membership and run-metadata files.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ClusterModel, FcmConfig, FcmError, FuzzyPartition};
use crate::formats::{check_header, csv_reader, csv_writer, format_value, index_columns, parse_finite};
use crate::matrix::Matrix;

/// JSON sidecar describing a clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub c: usize,
    pub m: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
    #[serde(default)]
    pub empty_clusters: Vec<usize>,
}

impl RunMetadata {
    pub fn new(cfg: &FcmConfig, model: &ClusterModel) -> Self {
        Self {
            c: cfg.clusters,
            m: cfg.fuzzifier,
            tol: cfg.tolerance,
            max_iter: cfg.max_iter,
            seed: cfg.seed,
            iterations: model.iterations,
            objective: model.objective,
            converged: model.converged,
            empty_clusters: model.empty_clusters.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FcmError> {
        serde_json::from_str(text).map_err(|e| FcmError::InvalidConfig(format!("run metadata: {e}")))
    }
}

fn io_err(e: impl std::fmt::Display) -> FcmError {
    FcmError::InvalidConfig(e.to_string())
}

fn model_header(dim: usize) -> Vec<String> {
    let mut cols = vec!["cluster_id".to_string()];
    cols.extend((0..dim).map(|h| format!("h{h:02}")));
    cols
}

/// Writes `cluster_id,h00..h23`, one row per centroid.
pub fn write_model<W: Write>(writer: W, model: &ClusterModel) -> Result<(), FcmError> {
    let mut w = csv_writer(writer);
    w.write_record(model_header(model.dim())).map_err(io_err)?;
    for (i, row) in model.centroids.iter_rows().enumerate() {
        let mut record = vec![i.to_string()];
        record.extend(row.iter().map(|&v| format_value(v)));
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads centroids written by [`write_model`]; the fuzzifier comes from the
/// run metadata.
pub fn read_model<R: Read>(reader: R, meta: &RunMetadata) -> Result<ClusterModel, FcmError> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers().map_err(io_err)?.clone();
    let dim = header.len().saturating_sub(1);
    check_header(&header, &model_header(dim)).map_err(FcmError::InvalidConfig)?;
    if dim == 0 {
        return Err(FcmError::InvalidConfig("model has no value columns".into()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(io_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |m: String| FcmError::InvalidConfig(format!("model line {line}: {m}"));
        if record.len() != dim + 1 {
            return Err(fail(format!("expected {} columns, found {}", dim + 1, record.len())));
        }
        if record[0].parse::<usize>().ok() != Some(rows.len()) {
            return Err(fail(format!("cluster_id {:?} out of sequence", &record[0])));
        }
        let row = (1..=dim)
            .map(|j| parse_finite(&record[j], "centroid"))
            .collect::<Result<Vec<_>, _>>()
            .map_err(fail)?;
        rows.push(row);
    }
    if rows.len() != meta.c {
        return Err(FcmError::InvalidConfig(format!(
            "model has {} centroids, metadata says {}",
            rows.len(),
            meta.c
        )));
    }
    let mut model = ClusterModel::from_centroids(Matrix::from_rows(&rows, dim).expect("checked widths"), meta.m);
    model.objective = meta.objective;
    model.iterations = meta.iterations;
    model.converged = meta.converged;
    model.empty_clusters = meta.empty_clusters.clone();
    Ok(model)
}

/// Household ids with one membership row each.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipTable {
    pub household_ids: Vec<String>,
    /// n × c; rows are not re-validated on read.
    pub memberships: Matrix,
}

impl MembershipTable {
    pub fn new(household_ids: Vec<String>, partition: &FuzzyPartition) -> Self {
        Self {
            household_ids,
            memberships: partition.matrix().clone(),
        }
    }

    pub fn clusters(&self) -> usize {
        self.memberships.cols()
    }

    pub fn row_of(&self, household_id: &str) -> Option<&[f64]> {
        self.household_ids
            .iter()
            .position(|id| id == household_id)
            .map(|k| self.memberships.row(k))
    }
}

fn membership_header(c: usize) -> Vec<String> {
    let mut cols = vec!["household_id".to_string()];
    cols.extend(index_columns("u", c));
    cols
}

/// Writes `household_id,u0..u{c-1}`.
pub fn write_memberships<W: Write>(writer: W, table: &MembershipTable) -> Result<(), FcmError> {
    let mut w = csv_writer(writer);
    w.write_record(membership_header(table.clusters())).map_err(io_err)?;
    for (id, row) in table.household_ids.iter().zip(table.memberships.iter_rows()) {
        let mut record = vec![id.clone()];
        record.extend(row.iter().map(|&v| format_value(v)));
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_memberships<R: Read>(reader: R) -> Result<MembershipTable, FcmError> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers().map_err(io_err)?.clone();
    let c = header.len().saturating_sub(1);
    check_header(&header, &membership_header(c)).map_err(FcmError::InvalidPartition)?;
    let mut ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(io_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |m: String| FcmError::InvalidPartition(format!("memberships line {line}: {m}"));
        if record.len() != c + 1 {
            return Err(fail(format!("expected {} columns, found {}", c + 1, record.len())));
        }
        ids.push(record[0].to_string());
        rows.push(
            (1..=c)
                .map(|j| parse_finite(&record[j], "membership"))
                .collect::<Result<Vec<_>, _>>()
                .map_err(fail)?,
        );
    }
    Ok(MembershipTable {
        household_ids: ids,
        memberships: Matrix::from_rows(&rows, c).expect("checked widths"),
    })
}
