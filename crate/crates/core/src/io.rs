//! CSV point files and JSON truth sidecars.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::datagen::{ClusterInstance, GenSpec, PlantedInstance};
use crate::error::{Error, Result};
use crate::geometry::{PointSet, SetRecord};

/// Read one point per row. With `header`, the first line is skipped.
/// Blank lines are ignored; every other row must have the same number of
/// numeric fields.
pub fn read_points<R: Read>(reader: R, header: bool) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut d = None;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match d {
            None => d = Some(rec.len()),
            Some(d) if d != rec.len() => {
                return Err(Error::Parse {
                    line,
                    column: rec.len().min(d) + 1,
                    message: format!("expected {d} fields, found {}", rec.len()),
                });
            }
            _ => {}
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                column: j + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: j + 1,
                    message: format!("non-finite value {field:?}"),
                });
            }
            data.push(v);
        }
    }
    match d {
        None => Err(Error::EmptySet),
        Some(d) => PointSet::new(data, d),
    }
}

pub fn read_points_file(path: &std::path::Path, header: bool) -> Result<PointSet> {
    read_points(std::fs::File::open(path)?, header)
}

/// Write one row per point with shortest round-trip formatting.
pub fn write_points<W: Write>(writer: W, y: &PointSet) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in y.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Ground truth written next to a generated point file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub spec: GenSpec,
    pub planted: Vec<SetRecord>,
    /// Sorted indices of every planted point.
    pub inlier_indices: Vec<usize>,
    /// Per-ball membership for cluster instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<Vec<usize>>>,
}

impl Truth {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl From<&PlantedInstance> for Truth {
    fn from(inst: &PlantedInstance) -> Self {
        Truth {
            spec: inst.spec.clone(),
            planted: vec![inst.planted.to_record(Some(inst.inlier_indices.len()))],
            inlier_indices: inst.inlier_indices.clone(),
            clusters: None,
        }
    }
}

impl From<&ClusterInstance> for Truth {
    fn from(inst: &ClusterInstance) -> Self {
        let mut all: Vec<usize> = inst.clusters.iter().flatten().copied().collect();
        all.sort_unstable();
        Truth {
            spec: inst.spec.clone(),
            planted: inst
                .planted
                .iter()
                .zip(&inst.clusters)
                .map(|(b, c)| b.to_record(Some(c.len())))
                .collect(),
            inlier_indices: all,
            clusters: Some(inst.clusters.clone()),
        }
    }
}
