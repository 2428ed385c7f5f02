use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use inscom_core::formats::{self, results::format_real};
use inscom_core::harness::{self, PipelineOptions, ReceiverKind, Scheme, SweepConfig};
use inscom_core::{metrics, toif, Error, Result};

#[derive(Parser)]
#[command(
    name = "inscom",
    version,
    about = "Instance-level task-oriented image transmission simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate every annotation listed in a manifest.
    Validate { manifest: PathBuf },
    /// Write the task mask and masked image for one annotation.
    Filter {
        annotation: PathBuf,
        criteria: PathBuf,
        #[arg(long)]
        out_mask: PathBuf,
        #[arg(long)]
        out_image: PathBuf,
    },
    /// Run one transmission trial and write the reconstruction.
    Transmit {
        annotation: PathBuf,
        criteria: PathBuf,
        #[arg(long, default_value = "inscom")]
        scheme: Scheme,
        #[arg(long)]
        eta: f64,
        #[arg(long, allow_negative_numbers = true)]
        snr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        k_min: usize,
        #[arg(long, value_enum, default_value = "lmmse")]
        receiver: Receiver,
    },
    /// Run an eta x SNR sweep described by a JSON config.
    Sweep {
        config: PathBuf,
        /// Also write a rate-distortion chart.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// PSNR between two images, plus TC-PSNR when a mask is given.
    Metrics {
        reference: PathBuf,
        reconstruction: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Generate a synthetic annotated scene.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Receiver {
    Descale,
    Lmmse,
}

impl From<Receiver> for ReceiverKind {
    fn from(r: Receiver) -> Self {
        match r {
            Receiver::Descale => ReceiverKind::Descale,
            Receiver::Lmmse => ReceiverKind::Lmmse,
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn validate(manifest: &Path) -> Result<bool> {
    let mut all_valid = true;
    for path in harness::load_manifest(manifest)? {
        match harness::load_scene(&path) {
            Ok(scene) => println!("ok      {}", scene.id),
            Err(e) if e.is_io() => return Err(e),
            Err(e) => {
                all_valid = false;
                println!("invalid {}", e);
            }
        }
    }
    Ok(all_valid)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { manifest } => {
            if !validate(&manifest)? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Filter {
            annotation,
            criteria,
            out_mask,
            out_image,
        } => {
            let scene = harness::load_scene(&annotation)?;
            let crit = formats::parse_criteria(&read_text(&criteria)?)?;
            let (masked, mask) =
                toif::task_mask(&scene.graph, &scene.segmentation, &scene.image, &crit)?;
            formats::write_mask(&mask, &out_mask)?;
            formats::write_image(&masked, &out_image)?;
            println!("{}: {} task-critical pixels", scene.id, mask.popcount());
        }
        Command::Transmit {
            annotation,
            criteria,
            scheme,
            eta,
            snr,
            seed,
            out,
            k_min,
            receiver,
        } => {
            let scene = harness::load_scene(&annotation)?;
            let crit = formats::parse_criteria(&read_text(&criteria)?)?;
            let opts = PipelineOptions {
                k_min,
                receiver: receiver.into(),
            };
            let trial = harness::run_pipeline(&scene, &crit, scheme, eta, snr, seed, &opts)?;
            formats::write_image(&trial.reconstruction, &out)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&trial.result).expect("results serialize")
            );
        }
        Command::Sweep { config, svg } => {
            let mut cfg = SweepConfig::from_file(&config)?;
            if svg.is_some() {
                cfg.svg = svg;
            }
            let rows = harness::sweep(&cfg)?;
            let failed = rows.iter().filter(|r| r.note.starts_with("error")).count();
            println!(
                "{} rows written to {} ({failed} failed)",
                rows.len(),
                cfg.output.display()
            );
        }
        Command::Metrics {
            reference,
            reconstruction,
            mask,
        } => {
            let a = formats::read_image(&reference)?;
            let b = formats::read_image(&reconstruction)?;
            println!("psnr_db {}", format_real(metrics::psnr(&a, &b)?));
            if let Some(mask) = mask {
                let m = formats::read_mask(&mask)?;
                println!("tc_psnr_db {}", format_real(metrics::tc_psnr(&a, &b, &m)?));
            }
        }
        Command::Synth { spec, out_dir } => {
            let spec: harness::SyntheticSpec = serde_json::from_str(&read_text(&spec)?)
                .map_err(|e| Error::Json(format!("{}: {e}", spec.display())))?;
            let scene = harness::gen_synthetic(&spec)?;
            harness::write_synthetic(&scene, &out_dir)?;
            println!(
                "wrote {} instances, {} triplets to {}",
                scene.record.graph.instances.len(),
                scene.record.graph.triplets.len(),
                out_dir.display()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
