//! `aquamass` command line.
//!
//! Exit codes: 0 on success, 1 on partial or runtime failure, 2 on usage
//! or configuration errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use crate::annotio::{parse_frame_records, read_mask_raster, FrameRecord};
use crate::error::{Error, Result};
use crate::evalmetrics::{reference_summary, render_table, summarize_files, IouKind, MetricsSummary, OperatingPoint};
use crate::features::{pca_with, project, DataMatrix};
use crate::maskgeom::{analytic_area, mask_membership, mc_area, Rect, Shape, DEFAULT_SAMPLES};

use super::config::{PipelineConfig, TelemetryMode};
use super::estimate::{run_estimate, RECORDS_FILE};
use super::report::render_report;
use super::telemetry::push_telemetry;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "aquamass", version, about = "Marine debris mass estimation toolkit", arg_required_else_help = true)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Raise log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate per-frame debris mass and write records, summary and report.
    Estimate,
    /// Score predictions against ground truth.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        preds: PathBuf,
        #[arg(long, value_name = "PATH")]
        gts: PathBuf,
        /// box or mask IoU.
        #[arg(long, value_parser = IouKind::from_str)]
        kind: Option<IouKind>,
        /// f1max or fixed:<score>.
        #[arg(long, value_parser = OperatingPoint::from_str)]
        operating_point: Option<OperatingPoint>,
    },
    /// Monte Carlo area of an analytic shape or a PGM mask.
    #[command(group(ArgGroup::new("target").required(true).args(["shape", "mask"])))]
    McArea {
        /// circle:<radius> or rect:<width>:<height>.
        #[arg(long, value_parser = parse_shape)]
        shape: Option<Shape<f64>>,
        /// Binary P5 mask.
        #[arg(long, value_name = "PATH")]
        mask: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: u64,
    },
    /// Principal components of a CSV feature matrix.
    Pca {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        standardize: bool,
    },
    /// Render the static report from records and metrics.
    Report {
        /// JSON-lines records.
        #[arg(long, value_name = "PATH")]
        records: Option<PathBuf>,
        /// Metrics JSON produced by `evaluate` (repeatable).
        #[arg(long, value_name = "PATH")]
        metrics: Vec<PathBuf>,
        /// Bundled published table by name (repeatable).
        #[arg(long, value_name = "NAME")]
        reference: Vec<String>,
    },
    /// Push records as telemetry envelopes.
    Push {
        #[arg(long, value_name = "PATH")]
        records: Option<PathBuf>,
        #[arg(long, value_name = "URL")]
        endpoint: Option<String>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_name = "PATH")]
        sink: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Http,
    File,
}

fn parse_shape(s: &str) -> std::result::Result<Shape<f64>, String> {
    let num = |v: &str| v.parse::<f64>().map_err(|_| format!("not a number: {v:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let shape = match parts.as_slice() {
        ["circle", r] => Shape::Circle { radius: num(r)? },
        ["rect", w, h] => Shape::Rectangle { width: num(w)?, height: num(h)? },
        _ => return Err("expected circle:<radius> or rect:<width>:<height>".into()),
    };
    analytic_area(shape).map_err(|e| e.to_string())?;
    Ok(shape)
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => {
            let mut c = PipelineConfig::default();
            c.apply_env();
            c
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.paths.output_dir = out.clone();
    }
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_records(path: &Path) -> Result<Vec<FrameRecord>> {
    parse_frame_records(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn execute(cli: Cli) -> Result<i32> {
    let cfg = load_config(&cli)?;
    let out = cfg.paths.output_dir.clone();
    match cli.command {
        Command::Estimate => {
            let clock = cfg.clock.build();
            let art = run_estimate(&cfg, clock.as_ref())?;
            let s = &art.outcome.summary;
            println!(
                "{} of {} frames estimated; total mass {:.3} g, total area {:.6} m^2; records in {}",
                s.frames_ok,
                s.frames_total,
                s.total_mass_g,
                s.total_area_m2,
                art.records_path.display()
            );
            for e in &s.errors {
                eprintln!("frame {}: {}", e.frame_id, e.error);
            }
            Ok(if art.outcome.is_partial() { EXIT_PARTIAL } else { EXIT_OK })
        }
        Command::Evaluate { preds, gts, kind, operating_point } => {
            let mut mc = cfg.metrics.match_config();
            if let Some(k) = kind {
                mc.iou_kind = k;
            }
            if let Some(op) = operating_point {
                mc.operating_point = op;
            }
            let summary = summarize_files(&preds, &gts, &mc)?;
            let table = render_table(&summary);
            print!("{table}");
            if let Some(m) = summary.miou {
                println!("mIoU {m:.3}");
            }
            write_text(&out.join("metrics.json"), &format!("{}\n", summary.to_json()))?;
            write_text(&out.join("metrics.txt"), &table)?;
            Ok(EXIT_OK)
        }
        Command::McArea { shape, mask, samples } => {
            let value = if let Some(shape) = shape {
                let (rect, analytic) = match shape {
                    Shape::Circle { radius } => (Rect::new(-radius, -radius, radius, radius)?, analytic_area(shape)?),
                    Shape::Rectangle { width, height } => (Rect::new(0.0, 0.0, width, height)?, analytic_area(shape)?),
                };
                let est = match shape {
                    Shape::Circle { radius } => {
                        mc_area(|x: f64, y: f64| x * x + y * y <= radius * radius, rect, samples, cfg.seed)?
                    }
                    Shape::Rectangle { .. } => mc_area(|_: f64, _: f64| true, rect, samples, cfg.seed)?,
                };
                serde_json::json!({
                    "area": est.area, "std_error": est.std_error, "hits": est.hits,
                    "samples": est.samples, "seed": est.seed, "analytic_area": analytic,
                })
            } else {
                let path = mask.expect("clap enforces shape or mask");
                let bits = read_mask_raster(&path)?.to_bitmask();
                let rect = Rect::new(0.0, 0.0, f64::from(bits.width()), f64::from(bits.height()))?;
                let est = mc_area(mask_membership(&bits), rect, samples, cfg.seed)?;
                serde_json::json!({
                    "area": est.area, "std_error": est.std_error, "hits": est.hits,
                    "samples": est.samples, "seed": est.seed, "pixel_count": bits.count_ones(),
                })
            };
            print!("{}", pretty(&value));
            Ok(EXIT_OK)
        }
        Command::Pca { input, k, standardize } => {
            let data = DataMatrix::<f64>::read_csv(&input)?;
            let k = k.unwrap_or(cfg.pca.k.min(data.cols()));
            let result = pca_with(&data, k, standardize || cfg.pca.standardize)?;
            let proj = project(&data, &result)?;
            write_text(&out.join("pca_projection.csv"), &proj.to_csv_string())?;
            let doc = serde_json::json!({
                "features": data.col_names(),
                "components": result.components,
                "eigenvalues": result.eigenvalues,
                "explained_ratio": result.explained_ratio,
                "mean": result.mean,
                "scale": result.scale,
                "total_variance": result.total_variance,
            });
            write_text(&out.join("pca.json"), &pretty(&doc))?;
            for (i, (e, r)) in result.eigenvalues.iter().zip(&result.explained_ratio).enumerate() {
                println!("PC{}: eigenvalue {e:.6}, explained {:.2}%", i + 1, r * 100.0);
            }
            Ok(EXIT_OK)
        }
        Command::Report { records, metrics, reference } => {
            let recs = match records {
                Some(p) => read_records(&p)?,
                None => Vec::new(),
            };
            let mut tables: Vec<MetricsSummary> = Vec::new();
            for p in &metrics {
                tables.push(MetricsSummary::from_json(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?);
            }
            for key in &reference {
                let table = reference_summary(key)
                    .ok_or_else(|| Error::Config(format!("unknown reference table {key:?}")))??;
                tables.push(table);
            }
            if recs.is_empty() && tables.is_empty() {
                return Err(Error::Config("report needs --records, --metrics or --reference".into()));
            }
            let paths = render_report(&recs, &tables, &out)?;
            println!("report written to {}", paths.html.display());
            Ok(EXIT_OK)
        }
        Command::Push { records, endpoint, mode, sink } => {
            let path = records.unwrap_or_else(|| out.join(RECORDS_FILE));
            let recs = read_records(&path)?;
            let mut settings = cfg.telemetry.clone();
            if let Some(e) = endpoint {
                settings.endpoint = Some(e);
            }
            if let Some(s) = sink {
                settings.sink = s;
            }
            settings.mode = match mode {
                Some(ModeArg::Http) => TelemetryMode::Http,
                Some(ModeArg::File) => TelemetryMode::File,
                None => settings.mode,
            };
            let report = push_telemetry(&recs, &cfg.device_id, &settings)?;
            let text = pretty(&report);
            write_text(&out.join("delivery_report.json"), &text)?;
            print!("{text}");
            Ok(if report.all_delivered() { EXIT_OK } else { EXIT_PARTIAL })
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    init_logging(cli.verbose);
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                EXIT_USAGE
            } else {
                EXIT_PARTIAL
            }
        }
    }
}
