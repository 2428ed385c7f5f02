//! End-to-end orchestration: loading annotated scenes, running one
//! transmission trial, parameter sweeps and synthetic fixtures.

mod pipeline;
pub mod seed;
mod svg;
mod sweep;
pub mod synth;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{self, AnnotationRecord};
use crate::scene::{validate_scene, Image, SceneGraph, SegmentationMap, Violation};

pub use pipeline::{
    prepare, run_pipeline, PipelineOptions, PreparedFrame, ReceiverKind, TrialOutput,
};
pub use svg::render_svg;
pub use sweep::{load_manifest, sweep, sweep_rows, SweepConfig, SweepTrial};
pub use synth::{gen_synthetic, write_synthetic, SyntheticScene, SyntheticSpec};

/// Transmission schemes compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Task filtering, masked image, entropy-guided rates.
    Inscom,
    /// Unmasked image, entropy-guided rates.
    NtsccLike,
    /// Unmasked image, one rate for every block.
    Uniform,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Inscom, Scheme::NtsccLike, Scheme::Uniform];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Inscom => "inscom",
            Scheme::NtsccLike => "ntscc_like",
            Scheme::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

/// A validated image with its annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub image: Image,
    pub segmentation: SegmentationMap,
    pub graph: SceneGraph,
}

pub(crate) fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Builds a scene from a parsed record and its rasters and validates it.
pub fn assemble_scene(
    id: impl Into<String>,
    record: AnnotationRecord,
    image: Image,
    labels: formats::GrayRaster,
) -> Result<Scene> {
    let segmentation = SegmentationMap {
        width: labels.width,
        height: labels.height,
        labels: labels.samples,
        class_table: record.class_table,
    };
    let mut report = validate_scene(&record.graph, &segmentation, &image);
    if (record.width, record.height) != (image.width, image.height) {
        report.violations.push(Violation::DimensionMismatch {
            what: "annotation",
            expected: (image.width, image.height),
            found: (record.width, record.height),
        });
    }
    report.into_result()?;
    Ok(Scene {
        id: id.into(),
        image,
        segmentation,
        graph: record.graph,
    })
}

/// The file stem, or the parent directory name for files called
/// `annotation.json` (the layout `synth` writes).
pub fn scene_id(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if stem == "annotation" {
        if let Some(dir) = path.parent().and_then(Path::file_name) {
            return dir.to_string_lossy().into_owned();
        }
    }
    stem
}

/// Loads an annotation file and the rasters it references (paths relative
/// to the annotation's directory).
pub fn load_scene(annotation: impl AsRef<Path>) -> Result<Scene> {
    let path = annotation.as_ref();
    let id = scene_id(path);
    let wrap = |source: Error| Error::Trial {
        image_id: id.clone(),
        source: Box::new(source),
    };
    let record = formats::parse_annotation(&read_text(path).map_err(wrap)?).map_err(wrap)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let image = formats::read_image(resolve(base, &record.image)).map_err(wrap)?;
    let labels = formats::read_pgm(resolve(base, &record.segmentation)).map_err(wrap)?;
    assemble_scene(id.clone(), record, image, labels).map_err(wrap)
}
