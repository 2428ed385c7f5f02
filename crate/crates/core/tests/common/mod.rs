#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use inscom_core::codec::BLOCK_SIZE;
use inscom_core::formats::{self, AnnotationRecord, GrayRaster};
use inscom_core::harness::{gen_synthetic, Scene, SyntheticSpec};
use inscom_core::scene::{BBox, Image, Instance, PixelRect, SceneGraph, SegmentationMap, Triplet};
use inscom_core::toif::{Mask, TaskCriteria};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn pedestrian_criteria() -> TaskCriteria {
    TaskCriteria::new("pedestrian", ["person"], [("on", "street")])
}

pub fn synthetic_spec(width: usize, height: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        width,
        height,
        min_instances: 1,
        max_instances: 3,
        classes: vec!["person".into(), "car".into()],
        relations: vec!["on".into()],
        background_classes: vec!["sidewalk".into(), "street".into()],
        channels: 3,
        texture: 48,
        seed,
    }
}

pub fn synthetic_scene(width: usize, height: usize, seed: u64) -> Scene {
    gen_synthetic(&synthetic_spec(width, height, seed))
        .expect("synthetic spec is feasible")
        .into_scene(format!("synth{seed:03}"))
}

/// Fraction of blocks touched by `mask`.
pub fn block_coverage(mask: &Mask) -> f64 {
    let bx = mask.width.div_ceil(BLOCK_SIZE);
    let by = mask.height.div_ceil(BLOCK_SIZE);
    let mut touched = 0;
    for y in 0..by {
        for x in 0..bx {
            let hit = (y * BLOCK_SIZE..((y + 1) * BLOCK_SIZE).min(mask.height)).any(|r| {
                (x * BLOCK_SIZE..((x + 1) * BLOCK_SIZE).min(mask.width)).any(|c| mask.get(r, c))
            });
            touched += hit as usize;
        }
    }
    touched as f64 / (bx * by) as f64
}

pub fn random_image(rng: &mut ChaCha8Rng, width: usize, height: usize, channels: usize) -> Image {
    let pixels = (0..width * height * channels)
        .map(|_| rng.random())
        .collect();
    Image::new(width, height, channels, pixels).unwrap()
}

/// Textured scene whose only task-critical object is a person standing on
/// the street, covering the block-aligned rectangle `person` exactly.
pub fn block_aligned_scene(
    blocks_x: usize,
    blocks_y: usize,
    person: PixelRect,
    seed: u64,
) -> Scene {
    let (w, h) = (blocks_x * BLOCK_SIZE, blocks_y * BLOCK_SIZE);
    let mut rng = rng(seed);
    let street_top = h / 2;
    let mut labels = vec![1u8; w * h];
    let mut pixels = vec![0u8; w * h * 3];
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let (label, base) = if person.contains(row, col) {
                (2, 170)
            } else if row >= street_top {
                (0, 90)
            } else {
                (1, 130)
            };
            labels[i] = label;
            for s in &mut pixels[i * 3..i * 3 + 3] {
                *s = (base + rng.random_range(-48i32..=48)) as u8;
            }
        }
    }
    let class_table = BTreeMap::from([
        (0u8, "street".to_string()),
        (1, "sidewalk".to_string()),
        (2, "person".to_string()),
    ]);
    let band = |r0, r1| {
        BBox::from_pixels(
            PixelRect {
                col0: 0,
                row0: r0,
                col1: w,
                row1: r1,
            },
            w,
            h,
        )
    };
    let graph = SceneGraph::new(
        vec![
            Instance::new(1, "street", 1.0, band(street_top, h)),
            Instance::new(2, "sidewalk", 1.0, band(0, street_top)),
            Instance::new(3, "person", 0.9, BBox::from_pixels(person, w, h)),
        ],
        vec![Triplet::new(3, "on", 1)],
    );
    Scene {
        id: format!("aligned{seed}"),
        image: Image::new(w, h, 3, pixels).unwrap(),
        segmentation: SegmentationMap {
            width: w,
            height: h,
            labels,
            class_table,
        },
        graph,
    }
}

/// Writes `scene` as `<dir>/<id>/annotation.json` plus rasters and returns
/// the annotation path.
pub fn write_scene(scene: &Scene, dir: &Path) -> PathBuf {
    let sub = dir.join(&scene.id);
    std::fs::create_dir_all(&sub).unwrap();
    formats::write_image(&scene.image, sub.join("image.ppm")).unwrap();
    formats::write_pgm(
        &GrayRaster {
            width: scene.segmentation.width,
            height: scene.segmentation.height,
            samples: scene.segmentation.labels.clone(),
        },
        sub.join("segmentation.pgm"),
    )
    .unwrap();
    let record = AnnotationRecord {
        image: "image.ppm".into(),
        segmentation: "segmentation.pgm".into(),
        width: scene.image.width,
        height: scene.image.height,
        class_table: scene.segmentation.class_table.clone(),
        graph: scene.graph.clone(),
    };
    let path = sub.join("annotation.json");
    std::fs::write(&path, formats::annotation_to_json(&record)).unwrap();
    path
}

/// Writes a manifest, criteria and sweep config for `scenes` into `dir` and
/// returns the config path.
pub fn write_sweep(
    dir: &Path,
    scenes: &[Scene],
    crit: &TaskCriteria,
    config: serde_json::Value,
) -> PathBuf {
    let entries: Vec<String> = scenes
        .iter()
        .map(|s| {
            write_scene(s, dir);
            format!("{}/annotation.json", s.id)
        })
        .collect();
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string(&entries).unwrap(),
    )
    .unwrap();
    std::fs::write(dir.join("criteria.json"), formats::criteria_to_json(crit)).unwrap();
    let mut config = config;
    let obj = config.as_object_mut().expect("config is an object");
    obj.insert("manifest".into(), "manifest.json".into());
    obj.insert("criteria".into(), "criteria.json".into());
    obj.entry("output").or_insert("results.csv".into());
    let path = dir.join("sweep.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

/// First synthetic scene at or after `seed` with a nonempty task mask under
/// [`pedestrian_criteria`].
pub fn task_scene(width: usize, height: usize, seed: u64) -> Scene {
    let crit = pedestrian_criteria();
    (seed..)
        .map(|s| synthetic_scene(width, height, s))
        .find(|s| {
            inscom_core::toif::task_mask(&s.graph, &s.segmentation, &s.image, &crit)
                .unwrap()
                .1
                .popcount()
                > 0
        })
        .unwrap()
}
