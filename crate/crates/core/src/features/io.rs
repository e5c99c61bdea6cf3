use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureMatrix, Label, Provenance};
use crate::scalar::Real;

const META_COLUMNS: [&str; 4] = ["label", "subject_id", "source", "segment"];

fn csv_err(e: impl std::fmt::Display) -> FeatureError {
    FeatureError::Csv(e.to_string())
}

/// Writes `# `-prefixed preamble lines, then the header and one row per
/// segment. Values use the shortest round-tripping decimal form.
pub fn write_feature_csv<T: Real, W: Write>(
    m: &FeatureMatrix<T>,
    mut w: W,
    preamble: &[String],
) -> Result<(), FeatureError> {
    for line in preamble {
        writeln!(w, "# {line}").map_err(csv_err)?;
    }
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<&str> = m.names().iter().map(String::as_str).chain(META_COLUMNS).collect();
    out.write_record(&header).map_err(csv_err)?;
    for i in 0..m.n_rows() {
        let mut rec: Vec<String> = m.rows()[i].iter().map(|v| v.to_string()).collect();
        let p = &m.provenance()[i];
        rec.push(m.labels()[i].to_string());
        rec.push(m.subjects()[i].clone());
        rec.push(p.source.clone());
        rec.push(p.segment.map(|s| s.to_string()).unwrap_or_default());
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}

/// Reads a table written by [`write_feature_csv`]; `#` lines are skipped.
pub fn read_feature_csv<R: Read>(r: R) -> Result<FeatureMatrix<f64>, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let n_feat = header
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| FeatureError::Csv("missing label column".into()))?;
    let col = |name: &str| header.iter().position(|h| h == name);
    let subject_col = col("subject_id").ok_or_else(|| FeatureError::Csv("missing subject_id column".into()))?;
    let (source_col, segment_col) = (col("source"), col("segment"));

    let mut m = FeatureMatrix::empty(header[..n_feat].to_vec());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = (0..n_feat)
            .map(|j| {
                rec[j].trim().parse::<f64>().map_err(|e| {
                    FeatureError::Csv(format!("row {}: column {}: {e}", line + 1, header[j]))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let label: Label = rec[n_feat].parse()?;
        let provenance = Provenance {
            source: source_col.map(|c| rec[c].to_string()).unwrap_or_default(),
            segment: match segment_col.map(|c| rec[c].trim()) {
                Some(s) if !s.is_empty() => Some(s.parse().map_err(csv_err)?),
                _ => None,
            },
        };
        m.push(row, label, rec[subject_col].to_string(), provenance)?;
    }
    Ok(m)
}

/// One recording (or segment) in a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub subject_id: String,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub segment: Option<usize>,
}

/// Reads `path,label,subject_id[,source,segment]` rows; `#` lines are skipped.
pub fn read_manifest<R: Read>(r: R) -> Result<Vec<ManifestEntry>, FeatureError> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

pub fn write_manifest<W: Write>(entries: &[ManifestEntry], mut w: W, preamble: &[String]) -> Result<(), FeatureError> {
    for line in preamble {
        writeln!(w, "# {line}").map_err(csv_err)?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["path", "label", "subject_id", "source", "segment"]).map_err(csv_err)?;
    for e in entries {
        out.write_record([
            e.path.clone(),
            e.label.to_string(),
            e.subject_id.clone(),
            e.source.clone().unwrap_or_default(),
            e.segment.map(|s| s.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(csv_err)
}
