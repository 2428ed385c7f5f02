//! Scene model: images, detected instances, relation triplets and
//! per-pixel segmentation, plus structural validation.
//!
//! Everything here is plain data. Validation never fails; it collects every
//! violated invariant into a [`ValidationReport`] so that callers can decide
//! whether a scene is usable.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Smallest accepted image side, one codec block.
pub const MIN_IMAGE_SIDE: usize = 8;

/// Row-major 8-bit image with interleaved channels (1 = gray, 3 = RGB).
///
/// Any size can be held; the codec's 8x8 floor is enforced by
/// [`validate_scene`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidConfig(format!(
                "unsupported channel count {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "pixel buffer has {} samples, expected {}",
                pixels.len(),
                width * height * channels
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        Image {
            width,
            height,
            channels,
            pixels: vec![value; width * height * channels],
        }
    }

    #[inline]
    pub fn sample(&self, row: usize, col: usize, channel: usize) -> u8 {
        self.pixels[(row * self.width + col) * self.channels + channel]
    }

    #[inline]
    pub fn set_sample(&mut self, row: usize, col: usize, channel: usize, value: u8) {
        self.pixels[(row * self.width + col) * self.channels + channel] = value;
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Total number of samples, W·H·channels.
    pub fn dimension(&self) -> usize {
        self.pixels.len()
    }
}

/// Normalized bounding box, `0 <= x1 < x2 <= 1` and `0 <= y1 < y2 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

/// Half-open pixel rectangle `[col0, col1) x [row0, row1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub col0: usize,
    pub row0: usize,
    pub col1: usize,
    pub row1: usize,
}

impl PixelRect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row0 && row < self.row1 && col >= self.col0 && col < self.col1
    }

    pub fn area(&self) -> usize {
        (self.col1 - self.col0) * (self.row1 - self.row0)
    }
}

fn low_edge(v: f64, extent: usize) -> usize {
    ((v * extent as f64).floor().max(0.0) as usize).min(extent)
}

fn high_edge(v: f64, extent: usize) -> usize {
    ((v * extent as f64).ceil().max(0.0) as usize).min(extent)
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        BBox { x1, y1, x2, y2 }
    }

    pub fn is_valid(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        unit(self.x1)
            && unit(self.y1)
            && unit(self.x2)
            && unit(self.y2)
            && self.x1 < self.x2
            && self.y1 < self.y2
    }

    /// Pixel footprint on a `width` x `height` grid. Low edges round down and
    /// high edges round up, so a box never loses covered pixels.
    pub fn to_pixels(&self, width: usize, height: usize) -> PixelRect {
        PixelRect {
            col0: low_edge(self.x1, width),
            row0: low_edge(self.y1, height),
            col1: high_edge(self.x2, width),
            row1: high_edge(self.y2, height),
        }
    }

    /// Normalized box whose pixel footprint is exactly `rect`.
    ///
    /// `a / n * n` is not always `a` in floating point, so each edge is nudged
    /// by one ulp when the naive quotient would round to a neighbouring pixel.
    pub fn from_pixels(rect: PixelRect, width: usize, height: usize) -> Self {
        fn fit(target: usize, extent: usize, edge: fn(f64, usize) -> usize) -> f64 {
            let mut v = target as f64 / extent as f64;
            for _ in 0..4 {
                let got = edge(v, extent);
                if got == target {
                    break;
                }
                v = if got > target {
                    next_down(v)
                } else {
                    next_up(v)
                };
            }
            v.clamp(0.0, 1.0)
        }
        BBox {
            x1: fit(rect.col0, width, low_edge),
            y1: fit(rect.row0, height, low_edge),
            x2: fit(rect.col1, width, high_edge),
            y2: fit(rect.row1, height, high_edge),
        }
    }
}

fn next_up(v: f64) -> f64 {
    if v == 0.0 {
        f64::from_bits(1)
    } else {
        f64::from_bits(v.to_bits() + 1)
    }
}

fn next_down(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        f64::from_bits(v.to_bits() - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: i64,
    pub class_label: String,
    pub score: f64,
    pub bbox: BBox,
    /// Detector feature vector, carried through unchanged and never read.
    pub feature: Option<Vec<u8>>,
}

impl Instance {
    pub fn new(id: i64, class_label: impl Into<String>, score: f64, bbox: BBox) -> Self {
        Instance {
            id,
            class_label: class_label.into(),
            score,
            bbox,
            feature: None,
        }
    }
}

/// `<subject, relation, object>` over instance ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    pub subject_id: i64,
    pub relation: String,
    pub object_id: i64,
}

impl Triplet {
    pub fn new(subject_id: i64, relation: impl Into<String>, object_id: i64) -> Self {
        Triplet {
            subject_id,
            relation: relation.into(),
            object_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneGraph {
    pub instances: Vec<Instance>,
    pub triplets: Vec<Triplet>,
}

impl SceneGraph {
    pub fn new(instances: Vec<Instance>, triplets: Vec<Triplet>) -> Self {
        SceneGraph {
            instances,
            triplets,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty() && self.triplets.is_empty()
    }

    pub fn instance(&self, id: i64) -> Option<&Instance> {
        self.instances.iter().find(|inst| inst.id == id)
    }

    pub fn class_of(&self, id: i64) -> Option<&str> {
        self.instance(id).map(|inst| inst.class_label.as_str())
    }
}

/// Returns the instance with the given id.
pub fn lookup_instance(sg: &SceneGraph, id: i64) -> Result<&Instance> {
    sg.instance(id).ok_or(Error::UnknownInstance(id))
}

/// Per-pixel class indices with an index -> label table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
    pub class_table: BTreeMap<u8, String>,
}

impl SegmentationMap {
    #[inline]
    pub fn label(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.width + col]
    }

    pub fn class_name(&self, index: u8) -> Option<&str> {
        self.class_table.get(&index).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateInstanceId(i64),
    BBoxOutOfRange {
        id: i64,
        bbox: BBox,
    },
    ScoreOutOfRange {
        id: i64,
        score: f64,
    },
    DanglingReference {
        triplet: usize,
        id: i64,
    },
    SelfRelation {
        triplet: usize,
        id: i64,
    },
    DuplicateTriplet(Triplet),
    DimensionMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    BufferLength {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    ImageTooSmall {
        width: usize,
        height: usize,
    },
    UnknownLabel(u8),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateInstanceId(id) => write!(f, "duplicate instance id {id}"),
            Violation::BBoxOutOfRange { id, bbox } => write!(
                f,
                "instance {id}: bbox ({}, {}, {}, {}) out of range",
                bbox.x1, bbox.y1, bbox.x2, bbox.y2
            ),
            Violation::ScoreOutOfRange { id, score } => {
                write!(f, "instance {id}: score {score} outside [0, 1]")
            }
            Violation::DanglingReference { triplet, id } => {
                write!(f, "triplet {triplet} references unknown instance {id}")
            }
            Violation::SelfRelation { triplet, id } => {
                write!(f, "triplet {triplet} relates instance {id} to itself")
            }
            Violation::DuplicateTriplet(t) => write!(
                f,
                "duplicate triplet <{}, {}, {}>",
                t.subject_id, t.relation, t.object_id
            ),
            Violation::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(
                f,
                "{what} is {}x{}, image is {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::BufferLength {
                what,
                expected,
                found,
            } => write!(f, "{what} buffer has {found} entries, expected {expected}"),
            Violation::ImageTooSmall { width, height } => {
                write!(f, "image {width}x{height} is below the 8x8 minimum")
            }
            Violation::UnknownLabel(idx) => {
                write!(f, "segmentation label {idx} has no class_table entry")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks the graph-only invariants (ids, boxes, scores, triplets).
pub fn validate_graph(sg: &SceneGraph) -> ValidationReport {
    let mut violations = Vec::new();
    let mut ids = HashSet::new();
    for inst in &sg.instances {
        if !ids.insert(inst.id) {
            violations.push(Violation::DuplicateInstanceId(inst.id));
        }
        if !inst.bbox.is_valid() {
            violations.push(Violation::BBoxOutOfRange {
                id: inst.id,
                bbox: inst.bbox,
            });
        }
        if !(0.0..=1.0).contains(&inst.score) {
            violations.push(Violation::ScoreOutOfRange {
                id: inst.id,
                score: inst.score,
            });
        }
    }
    let mut seen = HashSet::new();
    for (i, t) in sg.triplets.iter().enumerate() {
        for id in [t.subject_id, t.object_id] {
            if !ids.contains(&id) {
                violations.push(Violation::DanglingReference { triplet: i, id });
            }
        }
        if t.subject_id == t.object_id {
            violations.push(Violation::SelfRelation {
                triplet: i,
                id: t.subject_id,
            });
        }
        if !seen.insert(t) {
            violations.push(Violation::DuplicateTriplet(t.clone()));
        }
    }
    ValidationReport { violations }
}

/// Checks every structural invariant of a scene. An empty report means the
/// scene is valid.
pub fn validate_scene(sg: &SceneGraph, seg: &SegmentationMap, img: &Image) -> ValidationReport {
    let mut report = validate_graph(sg);
    let v = &mut report.violations;

    if img.width < MIN_IMAGE_SIDE || img.height < MIN_IMAGE_SIDE {
        v.push(Violation::ImageTooSmall {
            width: img.width,
            height: img.height,
        });
    }
    let expected = img.width * img.height * img.channels;
    if img.pixels.len() != expected {
        v.push(Violation::BufferLength {
            what: "image",
            expected,
            found: img.pixels.len(),
        });
    }
    if (seg.width, seg.height) != (img.width, img.height) {
        v.push(Violation::DimensionMismatch {
            what: "segmentation",
            expected: (img.width, img.height),
            found: (seg.width, seg.height),
        });
    }
    if seg.labels.len() != seg.width * seg.height {
        v.push(Violation::BufferLength {
            what: "segmentation",
            expected: seg.width * seg.height,
            found: seg.labels.len(),
        });
    }
    let mut present = [false; 256];
    for &label in &seg.labels {
        present[label as usize] = true;
    }
    for (idx, _) in present.iter().enumerate().filter(|(_, p)| **p) {
        if !seg.class_table.contains_key(&(idx as u8)) {
            v.push(Violation::UnknownLabel(idx as u8));
        }
    }
    report
}
