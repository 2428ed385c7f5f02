//! Synthetic annotated scenes.
//!
//! The background is split into horizontal bands, one per background class,
//! each textured with uniform noise around its own base level and registered
//! as an instance. Foreground instances are non-overlapping flat-colored
//! rectangles, each related to the band under its centre. The segmentation
//! map and boxes are exact by construction.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::Scene;
use crate::error::{Error, Result};
use crate::formats::{self, AnnotationRecord};
use crate::scene::{BBox, Image, Instance, PixelRect, SceneGraph, SegmentationMap, Triplet};

const PLACEMENT_ATTEMPTS: usize = 200;

fn default_background() -> Vec<String> {
    vec!["street".into(), "sidewalk".into()]
}

fn default_relations() -> Vec<String> {
    vec!["on".into()]
}

fn default_channels() -> usize {
    3
}

fn default_texture() -> u8 {
    48
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub min_instances: usize,
    pub max_instances: usize,
    /// Foreground vocabulary.
    pub classes: Vec<String>,
    #[serde(default = "default_relations")]
    pub relations: Vec<String>,
    #[serde(default = "default_background")]
    pub background_classes: Vec<String>,
    #[serde(default = "default_channels")]
    pub channels: usize,
    /// Half-width of the background noise.
    #[serde(default = "default_texture")]
    pub texture: u8,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.width < 16 || self.height < 16 {
            return bad(format!("{}x{} is below 16x16", self.width, self.height));
        }
        if self.min_instances > self.max_instances {
            return bad("min_instances exceeds max_instances".into());
        }
        if self.max_instances > 0 && self.classes.is_empty() {
            return bad("classes must not be empty".into());
        }
        if self.relations.is_empty() || self.background_classes.is_empty() {
            return bad("relations and background_classes must not be empty".into());
        }
        if self.background_classes.len() > self.height {
            return bad("more background bands than rows".into());
        }
        if let Some(c) = self
            .classes
            .iter()
            .find(|c| self.background_classes.contains(c))
        {
            return bad(format!("class `{c}` is both foreground and background"));
        }
        if self.channels != 1 && self.channels != 3 {
            return bad(format!("channels must be 1 or 3, got {}", self.channels));
        }
        let vocab = self.background_classes.len()
            + self
                .classes
                .iter()
                .collect::<std::collections::BTreeSet<_>>()
                .len();
        if vocab > 256 {
            return bad("more than 256 classes".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub image: Image,
    pub segmentation: SegmentationMap,
    pub record: AnnotationRecord,
}

impl SyntheticScene {
    pub fn into_scene(self, id: impl Into<String>) -> Scene {
        Scene {
            id: id.into(),
            image: self.image,
            segmentation: self.segmentation,
            graph: self.record.graph,
        }
    }
}

/// Flat color `k`, distinct for every `k < 256`.
fn flat_color(k: usize, channels: usize) -> [u8; 3] {
    let r = (40 + 37 * (k % 16)) % 256;
    let g = (200 + 53 * ((k / 16) % 16)) % 256;
    let b = (90 + 71 * (k % 7) + 13 * (k / 112)) % 256;
    if channels == 1 {
        let v = (20 + 23 * k) % 256;
        [v as u8; 3]
    } else {
        [r as u8, g as u8, b as u8]
    }
}

fn overlaps(a: &PixelRect, b: &PixelRect) -> bool {
    a.col0 < b.col1 && b.col0 < a.col1 && a.row0 < b.row1 && b.row0 < a.row1
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let (w, h, ch) = (spec.width, spec.height, spec.channels);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut class_table = BTreeMap::new();
    let mut class_index = BTreeMap::new();
    for name in spec.background_classes.iter().chain(&spec.classes) {
        if !class_index.contains_key(name) {
            let idx = class_index.len() as u8;
            class_index.insert(name.clone(), idx);
            class_table.insert(idx, name.clone());
        }
    }

    let bands = spec.background_classes.len();
    let band_rows = |i: usize| (i * h / bands, (i + 1) * h / bands);
    let mut instances = Vec::new();
    let mut labels = vec![0u8; w * h];
    let mut pixels = vec![0u8; w * h * ch];
    for (i, name) in spec.background_classes.iter().enumerate() {
        let (r0, r1) = band_rows(i);
        let base = 70 + (i * 90) % 120;
        let rect = PixelRect {
            col0: 0,
            row0: r0,
            col1: w,
            row1: r1,
        };
        instances.push(Instance::new(
            i as i64 + 1,
            name.clone(),
            1.0,
            BBox::from_pixels(rect, w, h),
        ));
        let t = spec.texture as i32;
        for row in r0..r1 {
            labels[row * w..(row + 1) * w].fill(class_index[name]);
            for s in &mut pixels[row * w * ch..(row + 1) * w * ch] {
                *s = (base as i32 + rng.random_range(-t..=t)).clamp(0, 255) as u8;
            }
        }
    }

    let count = rng.random_range(spec.min_instances..=spec.max_instances);
    let mut rects: Vec<PixelRect> = Vec::new();
    let mut triplets = Vec::new();
    for k in 0..count {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let rw = rng.random_range((w / 8).max(2)..=(w / 3).max(2));
            let rh = rng.random_range((h / 8).max(2)..=(h / 2).max(2));
            let col0 = rng.random_range(0..=w - rw);
            let row0 = rng.random_range(0..=h - rh);
            let rect = PixelRect {
                col0,
                row0,
                col1: col0 + rw,
                row1: row0 + rh,
            };
            if rects.iter().all(|r| !overlaps(r, &rect)) {
                placed = Some(rect);
                break;
            }
        }
        let rect = placed.ok_or(Error::Infeasible { requested: count })?;
        rects.push(rect);

        let class = &spec.classes[rng.random_range(0..spec.classes.len())];
        let id = (bands + k) as i64 + 1;
        let score = rng.random_range(0.5..=1.0);
        instances.push(Instance::new(
            id,
            class.clone(),
            score,
            BBox::from_pixels(rect, w, h),
        ));

        let color = flat_color(k, ch);
        for row in rect.row0..rect.row1 {
            for col in rect.col0..rect.col1 {
                labels[row * w + col] = class_index[class];
                let px = &mut pixels[(row * w + col) * ch..(row * w + col + 1) * ch];
                px.copy_from_slice(&color[..ch]);
            }
        }

        let centre = (rect.row0 + rect.row1) / 2;
        let band = (0..bands)
            .find(|&i| centre < band_rows(i).1)
            .unwrap_or(bands - 1);
        let relation = &spec.relations[rng.random_range(0..spec.relations.len())];
        triplets.push(Triplet::new(id, relation.clone(), band as i64 + 1));
    }

    let image = Image::new(w, h, ch, pixels)?;
    let segmentation = SegmentationMap {
        width: w,
        height: h,
        labels,
        class_table: class_table.clone(),
    };
    let record = AnnotationRecord {
        image: if ch == 3 { "image.ppm" } else { "image.pgm" }.into(),
        segmentation: "segmentation.pgm".into(),
        width: w,
        height: h,
        class_table,
        graph: SceneGraph::new(instances, triplets),
    };
    Ok(SyntheticScene {
        image,
        segmentation,
        record,
    })
}

/// Writes the image, segmentation and `annotation.json` into `dir`.
pub fn write_synthetic(scene: &SyntheticScene, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    formats::write_image(&scene.image, dir.join(&scene.record.image))?;
    formats::write_pgm(
        &formats::GrayRaster {
            width: scene.segmentation.width,
            height: scene.segmentation.height,
            samples: scene.segmentation.labels.clone(),
        },
        dir.join(&scene.record.segmentation),
    )?;
    let path = dir.join("annotation.json");
    std::fs::write(&path, formats::annotation_to_json(&scene.record))
        .map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::validate_scene;
    use crate::toif::{semantic_mask, TaskCriteria};

    fn spec(min: usize, max: usize, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            width: 64,
            height: 48,
            min_instances: min,
            max_instances: max,
            classes: vec!["car".into(), "person".into()],
            relations: default_relations(),
            background_classes: default_background(),
            channels: 3,
            texture: 48,
            seed,
        }
    }

    #[test]
    fn background_only() {
        let s = gen_synthetic(&spec(0, 0, 1)).unwrap();
        assert!(s.record.graph.triplets.is_empty());
        assert_eq!(s.record.graph.instances.len(), 2);
        assert!(validate_scene(&s.record.graph, &s.segmentation, &s.image).is_valid());
    }

    #[test]
    fn masks_match_rectangles() {
        for seed in 0..20 {
            let s = gen_synthetic(&spec(2, 2, seed)).unwrap();
            assert!(validate_scene(&s.record.graph, &s.segmentation, &s.image).is_valid());
            let fg = &s.record.graph.instances[2..];
            assert_eq!(fg.len(), 2);
            let area: usize = fg.iter().map(|i| i.bbox.to_pixels(64, 48).area()).sum();
            let crit = TaskCriteria::new("t", ["car", "person"], Vec::<(&str, &str)>::new());
            assert_eq!(semantic_mask(&s.segmentation, &crit).popcount(), area);
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            gen_synthetic(&spec(1, 4, 9)).unwrap(),
            gen_synthetic(&spec(1, 4, 9)).unwrap()
        );
    }

    #[test]
    fn infeasible_and_invalid_specs() {
        let mut crowded = spec(400, 400, 3);
        crowded.width = 16;
        crowded.height = 16;
        assert!(matches!(
            gen_synthetic(&crowded),
            Err(Error::Infeasible { .. })
        ));
        let mut small = spec(0, 0, 0);
        small.width = 8;
        assert!(gen_synthetic(&small).is_err());
        let mut clash = spec(0, 1, 0);
        clash.classes.push("street".into());
        assert!(gen_synthetic(&clash).is_err());
    }
}
