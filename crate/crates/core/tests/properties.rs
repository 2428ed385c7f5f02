use std::collections::BTreeSet;

use inscom_core::codec::{self, dct, AllocationScheme, RateConfig, BLOCK_AREA};
use inscom_core::formats::{self, netpbm, AnnotationRecord, GrayRaster};
use inscom_core::metrics;
use inscom_core::scene::{
    validate_graph, BBox, Image, Instance, SceneGraph, SegmentationMap, Triplet, Violation,
};
use inscom_core::toif::{self, Mask, TaskCriteria};
use proptest::prelude::*;

const CLASSES: [&str; 5] = ["man", "woman", "car", "street", "sidewalk"];
const RELATIONS: [&str; 3] = ["on", "walking on", "near"];

fn bbox() -> impl Strategy<Value = BBox> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64)
        .prop_map(|(a, b, c, d)| BBox::new(a.min(b), c.min(d), a.max(b), c.max(d)))
        .prop_filter("degenerate box", BBox::is_valid)
}

/// A structurally valid graph: unique ids, in-range boxes, distinct
/// non-reflexive triplets.
fn graph() -> impl Strategy<Value = SceneGraph> {
    (2usize..12)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((0..CLASSES.len(), 0.0..=1.0f64, bbox()), n),
                prop::collection::btree_set((0..n, 0..RELATIONS.len(), 0..n), 0..30),
            )
        })
        .prop_map(|(insts, triplets)| {
            let instances = insts
                .into_iter()
                .enumerate()
                .map(|(i, (c, s, b))| Instance::new(i as i64 * 7 + 3, CLASSES[c], s, b))
                .collect::<Vec<_>>();
            let triplets = triplets
                .into_iter()
                .filter(|(s, _, o)| s != o)
                .map(|(s, r, o)| Triplet::new(instances[s].id, RELATIONS[r], instances[o].id))
                .collect();
            SceneGraph::new(instances, triplets)
        })
}

fn criteria() -> impl Strategy<Value = TaskCriteria> {
    (
        prop::collection::btree_set(0..CLASSES.len(), 0..=CLASSES.len()),
        prop::collection::btree_set((0..RELATIONS.len(), 0..CLASSES.len()), 0..8),
    )
        .prop_map(|(c, r)| {
            TaskCriteria::new(
                "p",
                c.into_iter().map(|i| CLASSES[i]),
                r.into_iter().map(|(r, c)| (RELATIONS[r], CLASSES[c])),
            )
        })
}

fn image(max_side: usize) -> impl Strategy<Value = Image> {
    (
        8..=max_side,
        8..=max_side,
        prop_oneof![Just(1usize), Just(3usize)],
    )
        .prop_flat_map(|(w, h, ch)| {
            prop::collection::vec(any::<u8>(), w * h * ch)
                .prop_map(move |px| Image::new(w, h, ch, px).unwrap())
        })
}

fn mask(w: usize, h: usize) -> impl Strategy<Value = Mask> {
    prop::collection::vec(any::<bool>(), w * h).prop_map(move |bits| Mask {
        width: w,
        height: h,
        bits,
    })
}

fn triplet_set(sg: &SceneGraph) -> BTreeSet<(i64, String, i64)> {
    sg.triplets
        .iter()
        .map(|t| (t.subject_id, t.relation.clone(), t.object_id))
        .collect()
}

proptest! {
    #[test]
    fn generated_graphs_are_valid(sg in graph()) {
        prop_assert!(validate_graph(&sg).is_valid());
    }

    #[test]
    fn duplicated_id_is_reported(sg in graph(), pick in any::<prop::sample::Index>()) {
        let mut sg = sg;
        let dup = sg.instances[pick.index(sg.instances.len())].clone();
        sg.instances.push(dup.clone());
        let report = validate_graph(&sg);
        prop_assert!(report.violations.contains(&Violation::DuplicateInstanceId(dup.id)));
    }

    #[test]
    fn dangling_reference_is_reported(sg in graph(), rel in 0..RELATIONS.len()) {
        let mut sg = sg;
        let subject = sg.instances[0].id;
        sg.triplets.push(Triplet::new(subject, RELATIONS[rel], -1));
        let at = sg.triplets.len() - 1;
        let report = validate_graph(&sg);
        let expected = Violation::DanglingReference { triplet: at, id: -1 };
        prop_assert!(report.violations.contains(&expected));
    }

    #[test]
    fn filtering_only_removes(sg in graph(), crit in criteria()) {
        let sg1 = toif::filter_semantic(&sg, &crit);
        let sg2 = toif::filter_instance(&sg1, &crit);
        prop_assert!(triplet_set(&sg2).is_subset(&triplet_set(&sg1)));
        prop_assert!(triplet_set(&sg1).is_subset(&triplet_set(&sg)));
        prop_assert!(validate_graph(&sg2).is_valid());
        for t in &sg2.triplets {
            prop_assert!(crit.critical_classes.contains(sg.class_of(t.subject_id).unwrap()));
        }
    }

    #[test]
    fn more_classes_keep_more(sg in graph(), crit in criteria(), extra in 0..CLASSES.len()) {
        let mut wider = crit.clone();
        wider.critical_classes.insert(CLASSES[extra].to_string());
        let narrow = triplet_set(&toif::filter_semantic(&sg, &crit));
        let wide = triplet_set(&toif::filter_semantic(&sg, &wider));
        prop_assert!(narrow.is_subset(&wide));
    }

    #[test]
    fn filtering_is_idempotent(sg in graph(), crit in criteria()) {
        let once = toif::filter_instance(&toif::filter_semantic(&sg, &crit), &crit);
        let twice = toif::filter_instance(&toif::filter_semantic(&once, &crit), &crit);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn task_mask_is_within_both_masks(
        (w, h, labels) in (8usize..32, 8usize..32).prop_flat_map(|(w, h)| {
            (Just(w), Just(h), prop::collection::vec(0u8..5, w * h))
        }),
        boxes in prop::collection::vec(bbox(), 0..4),
        crit in criteria(),
    ) {
        let seg = SegmentationMap {
            width: w,
            height: h,
            labels,
            class_table: CLASSES.iter().enumerate().map(|(i, c)| (i as u8, c.to_string())).collect(),
        };
        let img = Image::filled(w, h, 3, 200);
        let m_sem = toif::semantic_mask(&seg, &crit);
        let m_ins = toif::instance_mask(&boxes, w, h);
        let (x_t, m_t) = toif::compose_and_apply(&img, &m_sem, &m_ins).unwrap();
        prop_assert_eq!(&m_t, &m_ins.and(&m_sem).unwrap());
        for i in 0..w * h {
            prop_assert!(!m_t.bits[i] || (m_sem.bits[i] && m_ins.bits[i]));
            let expect = if m_t.bits[i] { 200 } else { 0 };
            prop_assert!(x_t.pixels[i * 3..i * 3 + 3].iter().all(|p| *p == expect));
        }
    }

    #[test]
    fn dct_preserves_energy(block in prop::array::uniform32(-128.0..128.0f64), tail in prop::array::uniform32(-128.0..128.0f64)) {
        let mut x = [0.0; BLOCK_AREA];
        x[..32].copy_from_slice(&block);
        x[32..].copy_from_slice(&tail);
        let c = dct::forward(&x);
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ec: f64 = c.iter().map(|v| v * v).sum();
        prop_assert!((ex - ec).abs() <= 1e-9 * ex.max(1.0));
        let back = dct::inverse(&c);
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rate_is_monotone_in_eta(img in image(40), eta in 0.01..2.0f64, step in 0.0..1.0f64, uniform in any::<bool>()) {
        let scheme = if uniform { AllocationScheme::Uniform } else { AllocationScheme::Variable };
        let lat = codec::analysis(&img, None).unwrap();
        let lo = codec::allocate(&lat, &RateConfig::new(eta, 1, scheme).unwrap()).unwrap();
        let hi = codec::allocate(&lat, &RateConfig::new(eta + step, 1, scheme).unwrap()).unwrap();
        for (a, b) in lo.rates.iter().zip(&hi.rates) {
            prop_assert!(a.unwrap() <= b.unwrap());
        }
        prop_assert!(lo.total_rate() <= hi.total_rate());
    }

    #[test]
    fn frames_have_unit_power(img in image(32), eta in 0.01..1.5f64) {
        let lat = codec::analysis(&img, None).unwrap();
        let alloc = codec::allocate(&lat, &RateConfig::variable(eta).unwrap()).unwrap();
        let frame = codec::encode(&lat, &alloc).unwrap();
        prop_assert_eq!(frame.symbols.len(), alloc.total_rate() * img.channels);
        prop_assert!((frame.mean_power() - 1.0).abs() <= 1e-9);
        let coded = alloc.rates.iter().flatten().count() as u64;
        prop_assert_eq!(frame.side_bits, alloc.rates.len() as u64 + 6 * coded + 32);
    }

    #[test]
    fn psnr_is_symmetric((a, b, m) in image(24).prop_flat_map(|a| {
        let (w, h, ch) = (a.width, a.height, a.channels);
        let b = prop::collection::vec(any::<u8>(), w * h * ch)
            .prop_map(move |px| Image::new(w, h, ch, px).unwrap());
        (Just(a), b, mask(w, h))
    })) {
        prop_assert_eq!(metrics::psnr(&a, &b).unwrap(), metrics::psnr(&b, &a).unwrap());
        if m.popcount() > 0 {
            prop_assert_eq!(metrics::tc_psnr(&a, &b, &m).unwrap(), metrics::tc_psnr(&b, &a, &m).unwrap());
            prop_assert!(metrics::tc_psnr(&a, &a, &m).unwrap().is_infinite());
        }
    }

    #[test]
    fn netpbm_round_trips(img in image(24)) {
        let bytes = netpbm::encode_image(&img);
        prop_assert_eq!(&netpbm::decode_image(&bytes).unwrap(), &img);
        let raster = GrayRaster { width: img.width, height: img.height, samples: img.pixels[..img.width * img.height].to_vec() };
        let bytes = netpbm::encode_pgm(&raster);
        prop_assert_eq!(netpbm::decode_pgm(&bytes).unwrap(), raster);
    }

    #[test]
    fn annotation_round_trips(sg in graph()) {
        let rec = AnnotationRecord {
            image: "img.ppm".into(),
            segmentation: "seg.pgm".into(),
            width: 32,
            height: 24,
            class_table: CLASSES.iter().enumerate().map(|(i, c)| (i as u8, c.to_string())).collect(),
            graph: sg,
        };
        let back = formats::parse_annotation(&formats::annotation_to_json(&rec)).unwrap();
        prop_assert_eq!(back, rec);
    }

    #[test]
    fn criteria_round_trip(crit in criteria()) {
        prop_assert_eq!(formats::parse_criteria(&formats::criteria_to_json(&crit)).unwrap(), crit);
    }
}
