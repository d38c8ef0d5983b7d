//! Batch verification driver shared by the CLI and the Python bindings.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::clique::BoundMethod;
use crate::data::{self, DataError, LabeledExample};
use crate::model::{Ensemble, ModelError};
use crate::report::{
    emit_importance_map, BatchReport, ConfigEcho, ExampleRecord, ReportError, Summary, Timing,
    TraceRecord, VerifiedAccuracy, SCHEMA_VERSION,
};
use crate::single_tree::{verify_tree_linear, Sign};
use crate::verifier::{
    anchor_features, certify_radius, certify_untargeted_multiclass, feature_importance, Mode,
    PreparedEnsemble, VerificationReport, VerifierError, VerifyConfig,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("failed to read {path}: {source}")]
    ReadIo {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    WriteIo {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid run configuration: {0}")]
    Config(String),
}

impl RunError {
    /// Distinct process exit code per failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Model(_) => 3,
            RunError::Data(_) => 4,
            RunError::ReadIo { .. } | RunError::WriteIo { .. } => 5,
            RunError::Verifier(_) => 6,
            RunError::Report(_) => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Xgboost,
    Native,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Certified radius per example via the multi-level bound.
    Verify,
    /// Certified radius per example with exact fixed-radius decisions.
    Exact,
    /// Exact single-tree verification (requires a one-tree binary model).
    SingleTree,
    /// Per-feature robustness radii over the unit domain.
    Importance,
    /// Greedy anchor feature sets.
    Anchor,
}

impl RunMode {
    fn as_str(self) -> &'static str {
        match self {
            RunMode::Verify => "verify",
            RunMode::Exact => "exact",
            RunMode::SingleTree => "single-tree",
            RunMode::Importance => "importance",
            RunMode::Anchor => "anchor",
        }
    }
}

/// Optional PGM emission for importance runs on image-shaped data.
#[derive(Debug, Clone)]
pub struct PgmConfig {
    /// Files are written as `<prefix><example id>.pgm`.
    pub prefix: PathBuf,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model_path: PathBuf,
    pub model_format: ModelFormat,
    pub data_path: PathBuf,
    /// Number of examples to verify (all when `None`).
    pub num_examples: Option<usize>,
    pub mode: RunMode,
    pub verify: VerifyConfig,
    /// Worker threads; 0 picks the rayon default.
    pub threads: usize,
    pub out_path: Option<PathBuf>,
    pub out_format: OutputFormat,
    /// XGBoost dumps do not carry the class count; defaults to binary.
    pub num_classes: Option<usize>,
    /// Overrides the feature count inferred from the model.
    pub dim: Option<usize>,
    pub pgm: Option<PgmConfig>,
}

impl RunConfig {
    pub fn new(
        model_path: impl Into<PathBuf>,
        model_format: ModelFormat,
        data_path: impl Into<PathBuf>,
    ) -> RunConfig {
        RunConfig {
            model_path: model_path.into(),
            model_format,
            data_path: data_path.into(),
            num_examples: None,
            mode: RunMode::Verify,
            verify: VerifyConfig::default(),
            threads: 1,
            out_path: None,
            out_format: OutputFormat::Json,
            num_classes: None,
            dim: None,
            pgm: None,
        }
    }
}

pub fn load_model(cfg: &RunConfig) -> Result<Ensemble, RunError> {
    let bytes = std::fs::read(&cfg.model_path).map_err(|source| RunError::ReadIo {
        path: cfg.model_path.display().to_string(),
        source,
    })?;
    let ensemble = match cfg.model_format {
        ModelFormat::Native => Ensemble::parse_native_json(&bytes)?,
        ModelFormat::Xgboost => {
            Ensemble::parse_xgboost_json(&bytes, cfg.dim, cfg.num_classes.unwrap_or(2))?
        }
    };
    Ok(ensemble)
}

/// Verifies the first `n` examples of the data file and assembles the batch
/// report; writes it to `out_path` when configured. Per-example work runs on
/// a worker pool sized by `threads`, and results keep data-file order, so
/// reports are independent of the thread count.
pub fn run_batch(cfg: &RunConfig) -> Result<BatchReport, RunError> {
    let started = Instant::now();
    cfg.verify.validate()?;

    let ensemble = load_model(cfg)?;
    let mut examples = data::read_libsvm(&cfg.data_path, ensemble.dim())?;
    if let Some(n) = cfg.num_examples {
        examples.truncate(n);
    }

    let mut vcfg = cfg.verify;
    match cfg.mode {
        RunMode::Verify => vcfg.mode = Mode::Bound,
        RunMode::Exact => vcfg.mode = Mode::Exact,
        _ => {}
    }
    match cfg.mode {
        RunMode::SingleTree => {
            if ensemble.num_trees() != 1 || !ensemble.is_binary() {
                return Err(RunError::Config(
                    "mode=single-tree requires a binary ensemble with exactly one tree".into(),
                ));
            }
        }
        RunMode::Importance | RunMode::Anchor => {
            if !ensemble.is_binary() {
                return Err(RunError::Config(format!(
                    "mode={} requires a binary model",
                    cfg.mode.as_str()
                )));
            }
        }
        _ => {}
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| RunError::Config(e.to_string()))?;

    let prepared = PreparedEnsemble::new(ensemble.clone());
    let outcome: Result<Vec<(ExampleRecord, f64)>, RunError> = pool.install(|| {
        examples
            .par_iter()
            .enumerate()
            .map(|(id, example)| {
                let t0 = Instant::now();
                let record = verify_one(id, example, &ensemble, &prepared, cfg.mode, &vcfg)?;
                Ok((record, t0.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let (records, seconds): (Vec<ExampleRecord>, Vec<f64>) = outcome?.into_iter().unzip();

    if let Some(pgm) = &cfg.pgm {
        write_pgms(&records, pgm)?;
    }

    let summary = summarize(&records);
    let per_example: f64 = seconds.iter().sum::<f64>() / records.len().max(1) as f64;
    let report = BatchReport {
        schema_version: SCHEMA_VERSION,
        config: ConfigEcho {
            model: cfg.model_path.display().to_string(),
            format: match cfg.model_format {
                ModelFormat::Xgboost => "xgboost".into(),
                ModelFormat::Native => "native".into(),
            },
            data: cfg.data_path.display().to_string(),
            mode: cfg.mode.as_str().into(),
            n: records.len(),
            eps_max: vcfg.eps_max,
            steps: vcfg.search_steps,
            group_size: vcfg.group_size,
            levels: vcfg.levels,
            method: match vcfg.method {
                BoundMethod::Naive => "naive".into(),
                BoundMethod::Dp => "dp".into(),
            },
            cap: vcfg.cap.map(|c| c as u64),
            threads: cfg.threads,
        },
        model_notes: ensemble.notes().to_vec(),
        results: records,
        summary,
        timing: Some(Timing {
            total_seconds: started.elapsed().as_secs_f64(),
            avg_seconds_per_example: per_example,
        }),
    };

    if let Some(path) = &cfg.out_path {
        let bytes = match cfg.out_format {
            OutputFormat::Json => report.to_json(),
            OutputFormat::Csv => report.to_csv()?,
        };
        std::fs::write(path, bytes).map_err(|source| RunError::WriteIo {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(report)
}

/// The unit feature domain assumed by importance and anchor modes; the paper
/// protocol normalizes datasets to [0, 1].
fn unit_domain(dim: usize) -> Vec<(f64, f64)> {
    vec![(0.0, 1.0); dim]
}

fn verify_one(
    id: usize,
    example: &LabeledExample,
    ensemble: &Ensemble,
    prepared: &PreparedEnsemble,
    mode: RunMode,
    vcfg: &VerifyConfig,
) -> Result<ExampleRecord, RunError> {
    let x = &example.features;
    match mode {
        RunMode::Verify | RunMode::Exact => {
            let report = if ensemble.is_binary() {
                let sign = data::binary_sign(example.label)?;
                certify_radius(prepared, x, sign, vcfg)?
            } else {
                let class = data::class_index(example.label, ensemble.num_classes())?;
                certify_untargeted_multiclass(ensemble, x, class, vcfg)?
            };
            Ok(radius_record(id, &report))
        }
        RunMode::SingleTree => {
            let sign = data::binary_sign(example.label)?;
            let margin = ensemble.margin(x);
            let predicted = Sign::of(margin);
            let correct = predicted == sign;
            let radius = if correct {
                verify_tree_linear(&ensemble.trees()[0], ensemble.dim(), x, sign)
            } else {
                0.0
            };
            Ok(ExampleRecord {
                id,
                predicted: usize::from(predicted == Sign::Pos),
                correct,
                radius: radius.is_finite().then_some(radius),
                saturated: !radius.is_finite(),
                target_class: None,
                trace: Vec::new(),
                importance: None,
                anchors: None,
            })
        }
        RunMode::Importance | RunMode::Anchor => {
            let sign = data::binary_sign(example.label)?;
            let domain = unit_domain(ensemble.dim());
            let predicted = Sign::of(ensemble.margin(x));
            let mut record = ExampleRecord {
                id,
                predicted: usize::from(predicted == Sign::Pos),
                correct: predicted == sign,
                radius: None,
                saturated: false,
                target_class: None,
                trace: Vec::new(),
                importance: None,
                anchors: None,
            };
            if mode == RunMode::Importance {
                record.importance = Some(feature_importance(prepared, x, sign, &domain, vcfg)?);
            } else {
                record.anchors = Some(anchor_features(prepared, x, sign, &domain, vcfg)?);
            }
            Ok(record)
        }
    }
}

fn radius_record(id: usize, report: &VerificationReport) -> ExampleRecord {
    ExampleRecord {
        id,
        predicted: report.predicted,
        correct: report.correct,
        radius: Some(report.radius),
        saturated: report.saturated,
        target_class: report.target_class,
        trace: report
            .trace
            .iter()
            .map(|s| TraceRecord {
                eps: s.eps,
                bound: s.bound,
                robust: s.robust,
            })
            .collect(),
        importance: None,
        anchors: None,
    }
}

fn summarize(records: &[ExampleRecord]) -> Summary {
    let examples = records.len();
    let correct = records.iter().filter(|r| r.correct).count();

    let radii: Vec<f64> = records.iter().filter_map(|r| r.radius).collect();
    let avg = |values: &[f64]| {
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    };
    let avg_radius_all = avg(&radii);
    let correct_radii: Vec<f64> = records
        .iter()
        .filter(|r| r.correct)
        .filter_map(|r| r.radius)
        .collect();
    let avg_radius_correct = avg(&correct_radii);

    // Verified accuracy over the union of probed radii: the fraction of
    // examples whose certified radius covers each grid point.
    let mut grid: Vec<f64> = records
        .iter()
        .flat_map(|r| r.trace.iter().map(|s| s.eps))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let verified_accuracy = grid
        .into_iter()
        .map(|eps| VerifiedAccuracy {
            eps,
            accuracy: records
                .iter()
                .filter(|r| r.radius.is_some_and(|radius| radius >= eps))
                .count() as f64
                / examples.max(1) as f64,
        })
        .collect();

    Summary {
        examples,
        correct,
        avg_radius_all,
        avg_radius_correct,
        verified_accuracy,
    }
}

fn write_pgms(records: &[ExampleRecord], pgm: &PgmConfig) -> Result<(), RunError> {
    for record in records {
        let Some(radii) = &record.importance else {
            continue;
        };
        let bytes = emit_importance_map(radii, pgm.width, pgm.height, 1.0)?;
        let path = pgm_path(&pgm.prefix, record.id);
        std::fs::write(&path, bytes).map_err(|source| RunError::WriteIo {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

fn pgm_path(prefix: &Path, id: usize) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(format!("{id}.pgm"));
    PathBuf::from(name)
}
