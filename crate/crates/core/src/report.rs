//! Batch report types and JSON/CSV/PGM emission.
//!
//! The JSON schema is versioned (`schema_version`, currently 1); adding
//! fields is backward compatible, removing is not. Wall-clock measurements
//! live exclusively in the `timing` block so that reports are byte-identical
//! across runs and thread counts once that block is dropped.

use serde::Serialize;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("importance map shape {width}x{height} does not match {features} features")]
    ShapeMismatch {
        width: usize,
        height: usize,
        features: usize,
    },
    #[error("csv error: {0}")]
    Csv(String),
}

/// Echo of the run configuration, flattened to plain strings and numbers.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub model: String,
    pub format: String,
    pub data: String,
    pub mode: String,
    pub n: usize,
    pub eps_max: f64,
    pub steps: usize,
    #[serde(rename = "T")]
    pub group_size: usize,
    #[serde(rename = "L")]
    pub levels: usize,
    pub method: String,
    pub cap: Option<u64>,
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRecord {
    pub eps: f64,
    /// Infinite bounds serialize as JSON null.
    pub bound: f64,
    pub robust: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleRecord {
    pub id: usize,
    pub predicted: usize,
    pub correct: bool,
    /// Certified radius; absent when no flip exists at all (a constant tree
    /// in single-tree mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub saturated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_class: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub importance: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifiedAccuracy {
    pub eps: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub examples: usize,
    pub correct: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_radius_all: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_radius_correct: Option<f64>,
    /// Fraction of examples certified at each probed radius.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verified_accuracy: Vec<VerifiedAccuracy>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub avg_seconds_per_example: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub schema_version: u32,
    pub config: ConfigEcho,
    /// Parser-recorded conventions (e.g. the XGBoost threshold rule).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub model_notes: Vec<String>,
    pub results: Vec<ExampleRecord>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl BatchReport {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serialization cannot fail");
        bytes.push(b'\n');
        bytes
    }

    /// JSON bytes with the timing block removed; identical runs produce
    /// identical bytes regardless of thread count or machine speed.
    pub fn to_deterministic_json(&self) -> Vec<u8> {
        let mut clone = self.clone();
        clone.timing = None;
        clone.to_json()
    }

    /// CSV rows, one per example. Importance radii expand into one `r_f<i>`
    /// column per feature; anchor sets are semicolon-joined.
    pub fn to_csv(&self) -> Result<Vec<u8>, ReportError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let importance_width = self
            .results
            .iter()
            .filter_map(|r| r.importance.as_ref().map(Vec::len))
            .max();
        let has_anchors = self.results.iter().any(|r| r.anchors.is_some());
        let has_target = self.results.iter().any(|r| r.target_class.is_some());

        let mut header = vec![
            "id".to_string(),
            "predicted".to_string(),
            "correct".to_string(),
            "radius".to_string(),
            "saturated".to_string(),
        ];
        if has_target {
            header.push("target_class".to_string());
        }
        if let Some(width) = importance_width {
            for i in 0..width {
                header.push(format!("r_f{i}"));
            }
        }
        if has_anchors {
            header.push("anchors".to_string());
        }
        writer
            .write_record(&header)
            .map_err(|e| ReportError::Csv(e.to_string()))?;

        for r in &self.results {
            let mut row = vec![
                r.id.to_string(),
                r.predicted.to_string(),
                r.correct.to_string(),
                r.radius.map_or_else(|| "inf".to_string(), |v| v.to_string()),
                r.saturated.to_string(),
            ];
            if has_target {
                row.push(
                    r.target_class
                        .map_or_else(String::new, |c| c.to_string()),
                );
            }
            if let Some(width) = importance_width {
                let radii = r.importance.as_deref().unwrap_or(&[]);
                for i in 0..width {
                    row.push(radii.get(i).map_or_else(String::new, f64::to_string));
                }
            }
            if has_anchors {
                row.push(r.anchors.as_ref().map_or_else(String::new, |a| {
                    a.iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join(";")
                }));
            }
            writer
                .write_record(&row)
                .map_err(|e| ReportError::Csv(e.to_string()))?;
        }
        writer
            .into_inner()
            .map_err(|e| ReportError::Csv(e.to_string()))
    }
}

/// Renders per-feature radii as an 8-bit binary PGM (P5): pixel value
/// `round(255 * radius / domain_width)`, clamped to 0..=255, row-major.
/// Saturated features render as 255.
pub fn emit_importance_map(
    radii: &[f64],
    width: usize,
    height: usize,
    domain_width: f64,
) -> Result<Vec<u8>, ReportError> {
    if radii.len() != width * height {
        return Err(ReportError::ShapeMismatch {
            width,
            height,
            features: radii.len(),
        });
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(radii.iter().map(|&r| {
        let v = (255.0 * r / domain_width).round();
        v.clamp(0.0, 255.0) as u8
    }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_uniform_saturated() {
        let img = emit_importance_map(&[1.0; 4], 2, 2, 1.0).unwrap();
        assert!(img.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&img[img.len() - 4..], &[255, 255, 255, 255]);
    }

    #[test]
    fn pgm_rounding_rule() {
        let img = emit_importance_map(&[1.0, 0.5, 0.25, 0.0], 2, 2, 1.0).unwrap();
        assert_eq!(&img[img.len() - 4..], &[255, 128, 64, 0]);
    }

    #[test]
    fn pgm_shape_mismatch() {
        assert!(emit_importance_map(&[0.0; 3], 2, 2, 1.0).is_err());
    }
}
