use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::pipeline::{prepare, PipelineOptions, PreparedFrame, ReceiverKind};
use super::{load_scene, read_text, resolve, scene_id, seed, Scene, Scheme};
use crate::error::{Error, Result};
use crate::formats::{self, ResultRow};
use crate::metrics::TrialResult;
use crate::toif::TaskCriteria;

fn default_k_min() -> usize {
    1
}

/// Sweep description. Relative paths are resolved against the directory of
/// the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// JSON array of annotation paths.
    pub manifest: PathBuf,
    pub criteria: PathBuf,
    pub eta_grid: Vec<f64>,
    pub snr_grid_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default)]
    pub receiver: ReceiverKind,
    #[serde(default)]
    pub svg: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: SweepConfig = serde_json::from_str(&read_text(path)?)
            .map_err(|e| Error::Json(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.manifest, &mut cfg.criteria, &mut cfg.output] {
            *p = resolve(base, &p.to_string_lossy());
        }
        if let Some(svg) = &mut cfg.svg {
            *svg = resolve(base, &svg.to_string_lossy());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::InvalidConfig(format!("{what} must not be empty")));
        if self.eta_grid.is_empty() {
            return empty("eta_grid");
        }
        if self.snr_grid_db.is_empty() {
            return empty("snr_grid_db");
        }
        if self.schemes.is_empty() {
            return empty("schemes");
        }
        if self.seeds.is_empty() {
            return empty("seeds");
        }
        if let Some(eta) = self.eta_grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidConfig(format!("eta {eta} is not positive")));
        }
        if let Some(snr) = self.snr_grid_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig(format!("snr {snr} is not finite")));
        }
        Ok(())
    }

    pub fn options(&self) -> PipelineOptions {
        PipelineOptions {
            k_min: self.k_min,
            receiver: self.receiver,
        }
    }
}

/// Grid of one sweep, independent of where scenes come from.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrial {
    pub eta_grid: Vec<f64>,
    pub snr_grid_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub options: PipelineOptions,
}

impl From<&SweepConfig> for SweepTrial {
    fn from(cfg: &SweepConfig) -> Self {
        SweepTrial {
            eta_grid: cfg.eta_grid.clone(),
            snr_grid_db: cfg.snr_grid_db.clone(),
            schemes: cfg.schemes.clone(),
            seeds: cfg.seeds.clone(),
            master_seed: cfg.master_seed,
            options: cfg.options(),
        }
    }
}

/// Reads a manifest: a JSON array of annotation paths relative to the
/// manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    let entries: Vec<String> = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::Json(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(entries.iter().map(|e| resolve(base, e)).collect())
}

fn failed_row(
    image_id: &str,
    scheme: Scheme,
    eta: f64,
    snr_db: f64,
    seed: u64,
    err: &Error,
) -> ResultRow {
    ResultRow {
        result: TrialResult {
            image_id: image_id.to_string(),
            scheme: scheme.to_string(),
            eta,
            snr_db,
            seed,
            payload_symbols: 0,
            side_symbol_equiv: 0,
            cbr: f64::NAN,
            psnr_db: f64::NAN,
            tc_psnr_db: f64::NAN,
            tc_pixel_count: 0,
        },
        note: format!("error: {err}"),
    }
}

/// Runs every (image, scheme, eta, snr, seed) tuple, in that nesting order.
/// Scenes that failed to load, and trials that fail, become rows carrying
/// the error in their note. Trials run in parallel; row order does not
/// depend on scheduling.
pub fn sweep_rows(
    scenes: &[(String, Result<Scene>)],
    crit: &TaskCriteria,
    grid: &SweepTrial,
) -> Vec<ResultRow> {
    struct Job<'a> {
        image: usize,
        scheme: Scheme,
        eta_index: usize,
        prepared: Option<std::result::Result<PreparedFrame, String>>,
        scene: Option<&'a Scene>,
    }

    let mut jobs = Vec::new();
    for (image, (_, scene)) in scenes.iter().enumerate() {
        for &scheme in &grid.schemes {
            for eta_index in 0..grid.eta_grid.len() {
                jobs.push(Job {
                    image,
                    scheme,
                    eta_index,
                    prepared: None,
                    scene: scene.as_ref().ok(),
                });
            }
        }
    }
    jobs.par_iter_mut().for_each(|job| {
        if let Some(scene) = job.scene {
            job.prepared = Some(
                prepare(
                    scene,
                    crit,
                    job.scheme,
                    grid.eta_grid[job.eta_index],
                    &grid.options,
                )
                .map_err(|e| e.to_string()),
            );
        }
    });

    let per_job = grid.snr_grid_db.len() * grid.seeds.len();
    (0..jobs.len() * per_job)
        .into_par_iter()
        .map(|t| {
            let job = &jobs[t / per_job];
            let snr_index = (t % per_job) / grid.seeds.len();
            let seed_index = t % grid.seeds.len();
            let (image_id, scene) = &scenes[job.image];
            let eta = grid.eta_grid[job.eta_index];
            let snr_db = grid.snr_grid_db[snr_index];
            let seed = grid.seeds[seed_index];
            let fail = |e: &Error| failed_row(image_id, job.scheme, eta, snr_db, seed, e);
            let scene = match scene {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let prepared = match job.prepared.as_ref().expect("prepared above") {
                Ok(p) => p,
                Err(msg) => return fail(&Error::InvalidConfig(msg.clone())),
            };
            let channel_seed = seed::trial_seed(
                grid.master_seed,
                image_id,
                job.scheme.as_str(),
                job.eta_index,
                snr_index,
                seed_index,
            );
            match prepared.transmit(scene, snr_db, seed, channel_seed, &grid.options) {
                Ok(out) => ResultRow {
                    result: out.result,
                    note: out.note.unwrap_or_default(),
                },
                Err(e) => fail(&e),
            }
        })
        .collect()
}

/// Runs a configured sweep and writes the CSV (and optional SVG chart).
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let crit = formats::parse_criteria(&read_text(&cfg.criteria)?)?;
    let scenes: Vec<(String, Result<Scene>)> = load_manifest(&cfg.manifest)?
        .into_iter()
        .map(|path| (scene_id(&path), load_scene(&path)))
        .collect();
    let rows = sweep_rows(&scenes, &crit, &SweepTrial::from(cfg));

    let file = std::fs::File::create(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    formats::write_results(std::io::BufWriter::new(file), &rows).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(&cfg.output, source),
        other => other,
    })?;
    if let Some(svg_path) = &cfg.svg {
        std::fs::write(svg_path, super::render_svg(&rows)).map_err(|e| Error::io(svg_path, e))?;
    }
    Ok(rows)
}
