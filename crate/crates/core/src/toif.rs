//! Task-oriented instance filtering.
//!
//! A task is described by the subject classes it cares about and by the
//! `(relation, object class)` pairs that make such a subject critical. The
//! scene graph is filtered in two passes, the surviving subjects become the
//! task-critical instances, and their boxes are intersected with the
//! class-level segmentation mask to cut the transmitted image down to exactly
//! the pixels the task needs.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::scene::{BBox, Image, SceneGraph, SegmentationMap};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaskCriteria {
    pub task_name: String,
    pub critical_classes: BTreeSet<String>,
    pub critical_relations: BTreeSet<(String, String)>,
}

impl TaskCriteria {
    pub fn new<C, R, S1, S2, S3>(task_name: impl Into<String>, classes: C, relations: R) -> Self
    where
        C: IntoIterator<Item = S1>,
        R: IntoIterator<Item = (S2, S3)>,
        S1: Into<String>,
        S2: Into<String>,
        S3: Into<String>,
    {
        TaskCriteria {
            task_name: task_name.into(),
            critical_classes: classes.into_iter().map(Into::into).collect(),
            critical_relations: relations
                .into_iter()
                .map(|(r, o)| (r.into(), o.into()))
                .collect(),
        }
    }

    pub fn is_critical_class(&self, class: &str) -> bool {
        self.critical_classes.contains(class)
    }

    pub fn is_critical_relation(&self, relation: &str, object_class: &str) -> bool {
        // BTreeSet<(String, String)> cannot be probed with borrowed strs.
        self.critical_relations
            .iter()
            .any(|(r, o)| r == relation && o == object_class)
    }
}

/// Binary row-major mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn zeros(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::DimensionMismatch(format!(
                "mask {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a && *b)
                .collect(),
        })
    }
}

/// Keeps the instances referenced by `triplets`, in their original order.
fn subgraph(sg: &SceneGraph, triplets: Vec<crate::scene::Triplet>) -> SceneGraph {
    let referenced: HashSet<i64> = triplets
        .iter()
        .flat_map(|t| [t.subject_id, t.object_id])
        .collect();
    let instances = sg
        .instances
        .iter()
        .filter(|inst| referenced.contains(&inst.id))
        .cloned()
        .collect();
    SceneGraph::new(instances, triplets)
}

/// First pass: keep triplets whose subject class is task-critical.
pub fn filter_semantic(sg: &SceneGraph, crit: &TaskCriteria) -> SceneGraph {
    let triplets = sg
        .triplets
        .iter()
        .filter(|t| {
            sg.class_of(t.subject_id)
                .is_some_and(|class| crit.is_critical_class(class))
        })
        .cloned()
        .collect();
    subgraph(sg, triplets)
}

/// Second pass: keep triplets whose `(relation, object class)` is critical.
pub fn filter_instance(sg1: &SceneGraph, crit: &TaskCriteria) -> SceneGraph {
    let triplets = sg1
        .triplets
        .iter()
        .filter(|t| {
            sg1.class_of(t.object_id)
                .is_some_and(|class| crit.is_critical_relation(&t.relation, class))
        })
        .cloned()
        .collect();
    subgraph(sg1, triplets)
}

/// Distinct subject instances of the filtered graph with their boxes, by id.
pub fn critical_instances(sg2: &SceneGraph) -> Vec<(i64, BBox)> {
    let mut out = BTreeMap::new();
    for t in &sg2.triplets {
        if let Some(inst) = sg2.instance(t.subject_id) {
            out.insert(inst.id, inst.bbox);
        }
    }
    out.into_iter().collect()
}

/// Pixels whose segmentation class is task-critical.
pub fn semantic_mask(seg: &SegmentationMap, crit: &TaskCriteria) -> Mask {
    let mut lut = [false; 256];
    for (idx, name) in &seg.class_table {
        lut[*idx as usize] = crit.is_critical_class(name);
    }
    Mask {
        width: seg.width,
        height: seg.height,
        bits: seg.labels.iter().map(|l| lut[*l as usize]).collect(),
    }
}

/// Union of the pixel footprints of `boxes`.
pub fn instance_mask(boxes: &[BBox], width: usize, height: usize) -> Mask {
    let mut mask = Mask::zeros(width, height);
    for b in boxes {
        let r = b.to_pixels(width, height);
        for row in r.row0..r.row1 {
            mask.bits[row * width + r.col0..row * width + r.col1].fill(true);
        }
    }
    mask
}

/// Intersects the two masks and zeroes every pixel outside the result.
pub fn compose_and_apply(img: &Image, m_sem: &Mask, m_ins: &Mask) -> Result<(Image, Mask)> {
    if (img.width, img.height) != (m_sem.width, m_sem.height) {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} vs semantic mask {}x{}",
            img.width, img.height, m_sem.width, m_sem.height
        )));
    }
    let m_t = m_sem.and(m_ins)?;
    Ok((apply_mask(img, &m_t), m_t))
}

pub(crate) fn apply_mask(img: &Image, mask: &Mask) -> Image {
    let mut out = img.clone();
    for (px, keep) in out.pixels.chunks_mut(img.channels).zip(&mask.bits) {
        if !keep {
            px.fill(0);
        }
    }
    out
}

/// The full filtering chain: returns the masked image and its task mask.
pub fn task_mask(
    sg: &SceneGraph,
    seg: &SegmentationMap,
    img: &Image,
    crit: &TaskCriteria,
) -> Result<(Image, Mask)> {
    let sg2 = filter_instance(&filter_semantic(sg, crit), crit);
    let boxes: Vec<BBox> = critical_instances(&sg2)
        .into_iter()
        .map(|(_, b)| b)
        .collect();
    let m_sem = semantic_mask(seg, crit);
    let m_ins = instance_mask(&boxes, img.width, img.height);
    compose_and_apply(img, &m_sem, &m_ins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Instance, Triplet};

    fn street_scene() -> SceneGraph {
        SceneGraph::new(
            vec![
                Instance::new(1, "woman", 0.9, BBox::new(0.1, 0.2, 0.3, 0.9)),
                Instance::new(2, "street", 0.9, BBox::new(0.0, 0.6, 1.0, 1.0)),
                Instance::new(3, "building", 0.8, BBox::new(0.5, 0.0, 1.0, 0.5)),
                Instance::new(4, "woman", 0.7, BBox::new(0.6, 0.2, 0.8, 0.9)),
                Instance::new(5, "sidewalk", 0.9, BBox::new(0.5, 0.6, 1.0, 1.0)),
            ],
            vec![
                Triplet::new(1, "walking on", 2),
                Triplet::new(3, "next to", 2),
                Triplet::new(4, "walking on", 5),
            ],
        )
    }

    fn pedestrian_task() -> TaskCriteria {
        TaskCriteria::new(
            "pedestrian_warning",
            ["man", "woman"],
            [("walking on", "street"), ("on", "crosswalk")],
        )
    }

    #[test]
    fn semantic_pass_keeps_person_subjects() {
        let sg1 = filter_semantic(&street_scene(), &pedestrian_task());
        assert_eq!(
            sg1.triplets,
            vec![
                Triplet::new(1, "walking on", 2),
                Triplet::new(4, "walking on", 5)
            ]
        );
        let ids: Vec<i64> = sg1.instances.iter().map(|i| i.id).collect();
        assert_eq!(ids, vec![1, 2, 4, 5]);
    }

    #[test]
    fn instance_pass_drops_sidewalk_walker() {
        let crit = pedestrian_task();
        let sg2 = filter_instance(&filter_semantic(&street_scene(), &crit), &crit);
        assert_eq!(sg2.triplets, vec![Triplet::new(1, "walking on", 2)]);
        let ids: Vec<i64> = critical_instances(&sg2).iter().map(|(id, _)| *id).collect();
        assert_eq!(ids, vec![1]);
    }

    #[test]
    fn empty_criteria_yield_empty_graphs() {
        let empty = TaskCriteria::default();
        assert!(filter_semantic(&street_scene(), &empty).is_empty());
        let sg1 = filter_semantic(&street_scene(), &pedestrian_task());
        assert!(filter_instance(&sg1, &empty).is_empty());
        assert!(critical_instances(&SceneGraph::default()).is_empty());
    }

    #[test]
    fn repeated_subject_counted_once() {
        let mut sg = street_scene();
        sg.triplets = vec![
            Triplet::new(1, "walking on", 2),
            Triplet::new(1, "on", 2),
            Triplet::new(1, "near", 2),
        ];
        let crit = TaskCriteria::new(
            "t",
            ["woman"],
            [
                ("walking on", "street"),
                ("on", "street"),
                ("near", "street"),
            ],
        );
        let sg2 = filter_instance(&filter_semantic(&sg, &crit), &crit);
        assert_eq!(sg2.triplets.len(), 3);
        assert_eq!(critical_instances(&sg2).len(), 1);
    }

    #[test]
    fn instance_mask_edge_cases() {
        assert_eq!(instance_mask(&[], 8, 8).popcount(), 0);
        assert_eq!(
            instance_mask(&[BBox::new(0.0, 0.0, 1.0, 1.0)], 8, 8),
            Mask::ones(8, 8)
        );
    }

    #[test]
    fn semantic_mask_extremes() {
        let seg = SegmentationMap {
            width: 8,
            height: 8,
            labels: (0..64).map(|i| (i % 2) as u8).collect(),
            class_table: BTreeMap::from([(0, "road".into()), (1, "person".into())]),
        };
        assert_eq!(semantic_mask(&seg, &TaskCriteria::default()).popcount(), 0);
        let all = TaskCriteria::new("t", ["road", "person"], Vec::<(&str, &str)>::new());
        assert_eq!(semantic_mask(&seg, &all).popcount(), 64);
    }

    #[test]
    fn compose_identity_and_zero() {
        let img = Image::new(8, 8, 3, (0..192).map(|v| v as u8).collect()).unwrap();
        let (x_t, m_t) = compose_and_apply(&img, &Mask::ones(8, 8), &Mask::ones(8, 8)).unwrap();
        assert_eq!(x_t, img);
        assert_eq!(m_t.popcount(), 64);
        let (x_t, _) = compose_and_apply(&img, &Mask::zeros(8, 8), &Mask::ones(8, 8)).unwrap();
        assert!(x_t.pixels.iter().all(|p| *p == 0));
    }

    #[test]
    fn compose_rejects_mismatched_masks() {
        let img = Image::filled(8, 8, 1, 3);
        assert!(matches!(
            compose_and_apply(&img, &Mask::ones(8, 8), &Mask::ones(16, 8)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            compose_and_apply(&img, &Mask::ones(16, 16), &Mask::ones(16, 16)),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
