//! Command-line front end for tree-ensemble robustness verification.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use treeverify::clique::BoundMethod;
use treeverify::driver::{
    run_batch, ModelFormat, OutputFormat, PgmConfig, RunConfig, RunMode,
};
use treeverify::verifier::{Mode, VerifyConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Xgboost,
    Native,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Certified radius per example via the multi-level bound.
    Verify,
    /// Certified radius with exact fixed-radius decisions (small models).
    Exact,
    /// Exact verification of a single decision tree.
    #[value(name = "single-tree")]
    SingleTree,
    /// Per-feature robustness radii over the unit domain.
    Importance,
    /// Greedy anchor feature sets.
    Anchor,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Naive,
    Dp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutFormatArg {
    Json,
    Csv,
}

/// Certified l-infinity robustness verification for decision tree ensembles.
#[derive(Debug, Parser)]
#[command(name = "treeverify", version, about)]
struct Args {
    /// Model file.
    #[arg(long)]
    model: PathBuf,

    /// Model format.
    #[arg(long, value_enum, default_value = "native")]
    format: FormatArg,

    /// LIBSVM data file (labels {0,1} or {-1,+1} for binary models,
    /// 0-based class indices for multiclass).
    #[arg(long)]
    data: PathBuf,

    /// Number of examples to verify (default: all).
    #[arg(long)]
    n: Option<usize>,

    /// What to compute per example.
    #[arg(long, value_enum, default_value = "verify")]
    mode: ModeArg,

    /// Upper end of the radius search bracket.
    #[arg(long = "eps-max", default_value_t = 1.0)]
    eps_max: f64,

    /// Binary-search probes after the initial saturation probe.
    #[arg(long, default_value_t = 10)]
    steps: usize,

    /// Parts merged per group at each level.
    #[arg(long = "T", default_value_t = 2)]
    group_size: usize,

    /// Merge levels before bounding (clamped to the exact depth).
    #[arg(long = "L", default_value_t = 1)]
    levels: usize,

    /// Single-level bound applied after merging.
    #[arg(long, value_enum, default_value = "naive")]
    method: MethodArg,

    /// Pseudo-node budget per enumeration; 0 removes the cap.
    #[arg(long, default_value_t = 1_000_000)]
    cap: usize,

    /// Worker threads (0 = all cores). TREEVERIFY_THREADS overrides.
    #[arg(long, default_value_t = 1, env = "TREEVERIFY_THREADS")]
    threads: usize,

    /// Report file; omit to print the report to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report format.
    #[arg(long = "out-format", value_enum, default_value = "json")]
    out_format: OutFormatArg,

    /// Class count for XGBoost dumps (they do not carry it).
    #[arg(long = "num-classes")]
    num_classes: Option<usize>,

    /// Feature count override when the data has trailing unused features.
    #[arg(long)]
    dim: Option<usize>,

    /// Importance mode: write `<prefix><id>.pgm` maps (needs --pgm-width/height).
    #[arg(long = "pgm-out", requires = "pgm_width", requires = "pgm_height")]
    pgm_out: Option<PathBuf>,

    #[arg(long = "pgm-width")]
    pgm_width: Option<usize>,

    #[arg(long = "pgm-height")]
    pgm_height: Option<usize>,
}

impl Args {
    fn into_run_config(self) -> RunConfig {
        let mut cfg = RunConfig::new(
            self.model,
            match self.format {
                FormatArg::Xgboost => ModelFormat::Xgboost,
                FormatArg::Native => ModelFormat::Native,
            },
            self.data,
        );
        cfg.num_examples = self.n;
        cfg.mode = match self.mode {
            ModeArg::Verify => RunMode::Verify,
            ModeArg::Exact => RunMode::Exact,
            ModeArg::SingleTree => RunMode::SingleTree,
            ModeArg::Importance => RunMode::Importance,
            ModeArg::Anchor => RunMode::Anchor,
        };
        cfg.verify = VerifyConfig {
            group_size: self.group_size,
            levels: self.levels,
            method: match self.method {
                MethodArg::Naive => BoundMethod::Naive,
                MethodArg::Dp => BoundMethod::Dp,
            },
            search_steps: self.steps,
            eps_max: self.eps_max,
            cap: (self.cap > 0).then_some(self.cap),
            mode: Mode::Bound,
        };
        cfg.threads = self.threads;
        cfg.out_path = self.out;
        cfg.out_format = match self.out_format {
            OutFormatArg::Json => OutputFormat::Json,
            OutFormatArg::Csv => OutputFormat::Csv,
        };
        cfg.num_classes = self.num_classes;
        cfg.dim = self.dim;
        cfg.pgm = self.pgm_out.map(|prefix| PgmConfig {
            prefix,
            width: self.pgm_width.expect("required by clap"),
            height: self.pgm_height.expect("required by clap"),
        });
        cfg
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = args.into_run_config();
    let to_stdout = cfg.out_path.is_none();
    match run_batch(&cfg) {
        Ok(report) => {
            if to_stdout {
                let bytes = match cfg.out_format {
                    OutputFormat::Json => report.to_json(),
                    OutputFormat::Csv => match report.to_csv() {
                        Ok(bytes) => bytes,
                        Err(e) => {
                            eprintln!("error: {e}");
                            return ExitCode::from(7);
                        }
                    },
                };
                let mut out = std::io::stdout().lock();
                use std::io::Write;
                if out.write_all(&bytes).is_err() {
                    return ExitCode::from(5);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
