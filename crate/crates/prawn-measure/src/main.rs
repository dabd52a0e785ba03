//! Thin CLI over the library pipeline. Exit codes: 0 success, 2 bad input,
//! 3 empty result.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use prawn_measure::commands::{
    apply_config_file, cmd_eval, cmd_measure, cmd_report, cmd_synth, cmd_track, write_growth_csv,
    write_report_bundle, EvalKind, RunConfig,
};
use prawn_measure::Error;

#[derive(Parser)]
#[command(name = "prawn-measure", version, about = "Prawn length measurement and growth analytics from RGB-D feed tray captures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct CommonFlags {
    /// Config file (TOML) mirroring these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Centreline downsampling stride in pixels.
    #[arg(long)]
    stride: Option<usize>,
    /// Minimum usable-sample fraction for an accepted measurement.
    #[arg(long)]
    validity_threshold: Option<f64>,
    /// IoU gate for track association.
    #[arg(long)]
    iou_threshold: Option<f64>,
    /// Frames a track survives unmatched.
    #[arg(long)]
    max_age: Option<u32>,
    /// Hits before a track is reported.
    #[arg(long)]
    min_hits: Option<u32>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for anything randomized.
    #[arg(long)]
    seed: Option<u64>,
    /// Write skeleton/centreline debug SVGs into the session directory.
    #[arg(long)]
    dump_skeleton: bool,
}

impl CommonFlags {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            cfg = apply_config_file(&cfg, &text)?;
        }
        if let Some(v) = self.stride {
            cfg.ranging.sample_stride = v;
        }
        if let Some(v) = self.validity_threshold {
            cfg.ranging.validity_threshold = v;
        }
        if let Some(v) = self.iou_threshold {
            cfg.tracker.iou_threshold = v;
        }
        if let Some(v) = self.max_age {
            cfg.tracker.max_age = v;
        }
        if let Some(v) = self.min_hits {
            cfg.tracker.min_hits = v;
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.dump_skeleton {
            cfg.dump_skeleton = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KindArg {
    Mask,
    Box,
}

#[derive(Subcommand)]
enum Command {
    /// Measure every annotated instance in a session directory.
    Measure {
        session_dir: PathBuf,
        /// Per-instance measurement CSV.
        #[arg(short, long, default_value = "measurements.csv")]
        out: PathBuf,
        /// Also append accepted lengths as growth rows (pond_id,doc,source,length_mm).
        #[arg(long)]
        growth_out: Option<PathBuf>,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Track instances across a session's frames and aggregate lengths.
    Track {
        session_dir: PathBuf,
        #[arg(short, long, default_value = "tracks.csv")]
        out: PathBuf,
        #[arg(long)]
        growth_out: Option<PathBuf>,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Score predictions against ground truth (COCO mAP/mAR).
    Eval {
        ground_truth: PathBuf,
        predictions: PathBuf,
        /// Region representation to score.
        #[arg(long, value_enum, default_value_t = KindArg::Mask)]
        kind: KindArg,
        /// Frame width for mask rasterization.
        #[arg(long, default_value_t = 1280)]
        width: u32,
        /// Frame height for mask rasterization.
        #[arg(long, default_value_t = 720)]
        height: u32,
        /// Per-threshold AP/AR table.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Render the growth report bundle from growth CSVs.
    Report {
        /// Growth CSV files (pond_id,doc,source,length_mm).
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "report")]
        out_dir: PathBuf,
        /// Histogram bin width, mm.
        #[arg(long)]
        bin_width: Option<f64>,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Generate synthetic session directories from a scene spec.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn write_text(path: &PathBuf, body: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Measure {
            session_dir,
            out,
            growth_out,
            flags,
        } => {
            let cfg = flags.resolve()?;
            let outcome = cmd_measure(&session_dir, &cfg)?;
            write_text(&out, &outcome.csv)?;
            if let Some(path) = growth_out {
                write_text(&path, &write_growth_csv(&outcome.growth))?;
            }
            let accepted = outcome.rejections.n_measured - outcome.rejections.n_rejected;
            println!(
                "measured={} accepted={} rejected={} rejection_rate={:.3}",
                outcome.rejections.n_measured,
                accepted,
                outcome.rejections.n_rejected,
                outcome.rejections.rejection_rate()
            );
            Ok(if accepted == 0 { 3 } else { 0 })
        }
        Command::Track {
            session_dir,
            out,
            growth_out,
            flags,
        } => {
            let cfg = flags.resolve()?;
            let outcome = cmd_track(&session_dir, &cfg)?;
            write_text(&out, &outcome.csv)?;
            if let Some(path) = growth_out {
                write_text(&path, &write_growth_csv(&outcome.growth))?;
            }
            println!("tracks={}", outcome.rows.len());
            Ok(0)
        }
        Command::Eval {
            ground_truth,
            predictions,
            kind,
            width,
            height,
            out,
        } => {
            let kind = match kind {
                KindArg::Mask => EvalKind::Mask,
                KindArg::Box => EvalKind::Box,
            };
            let outcome = cmd_eval(&ground_truth, &predictions, kind, width, height)?;
            println!(
                "map={:.6} ap50={:.6} mar={:.6}",
                outcome.summary.map, outcome.summary.ap50, outcome.summary.mar
            );
            if let Some(path) = out {
                write_text(&path, &outcome.per_threshold_csv)?;
            }
            Ok(0)
        }
        Command::Report {
            inputs,
            out_dir,
            bin_width,
            flags,
        } => {
            let mut cfg = flags.resolve()?;
            if let Some(v) = bin_width {
                cfg.report.histogram_bin_mm = v;
            }
            cfg.validate()?;
            if inputs.is_empty() {
                return Err(Error::config("inputs", "no growth CSVs given"));
            }
            match cmd_report(&inputs, None, &cfg) {
                Ok(outcome) => {
                    write_report_bundle(&out_dir, &outcome.bundle)?;
                    println!(
                        "measurements={} report_dir={}",
                        outcome.n_measurements,
                        out_dir.display()
                    );
                    Ok(0)
                }
                Err(Error::EmptyReport) => {
                    eprintln!("no accepted measurements; nothing to report");
                    Ok(3)
                }
                Err(e) => Err(e),
            }
        }
        Command::Synth {
            spec,
            out_dir,
            seed,
        } => {
            let outcome = cmd_synth(&spec, &out_dir, seed)?;
            println!("sessions={}", outcome.session_dirs.len());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
