//! Annotation and task-criteria documents.
//!
//! Parsing walks a `serde_json::Value` by hand so that every error names the
//! exact field path (`instances[0].bbox`). Unknown fields are ignored.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::scene::{validate_graph, BBox, Instance, SceneGraph, Triplet};
use crate::toif::TaskCriteria;

/// One annotated image: file references, class table and scene graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    /// Image path, relative to the annotation file unless absolute.
    pub image: String,
    pub segmentation: String,
    pub width: usize,
    pub height: usize,
    pub class_table: BTreeMap<u8, String>,
    pub graph: SceneGraph,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::TypeMismatch {
        path: path.to_string(),
        expected: "object",
    })
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<(&'a Value, String)> {
    let p = join(path, key);
    match obj.get(key) {
        Some(v) => Ok((v, p)),
        None => Err(Error::MissingField(p)),
    }
}

fn string(obj: &Map<String, Value>, path: &str, key: &str) -> Result<String> {
    let (v, p) = field(obj, path, key)?;
    v.as_str().map(str::to_string).ok_or(Error::TypeMismatch {
        path: p,
        expected: "string",
    })
}

fn integer(obj: &Map<String, Value>, path: &str, key: &str) -> Result<i64> {
    let (v, p) = field(obj, path, key)?;
    v.as_i64().ok_or(Error::TypeMismatch {
        path: p,
        expected: "integer",
    })
}

fn size(obj: &Map<String, Value>, path: &str, key: &str) -> Result<usize> {
    let (v, p) = field(obj, path, key)?;
    v.as_u64().map(|n| n as usize).ok_or(Error::TypeMismatch {
        path: p,
        expected: "non-negative integer",
    })
}

fn number(v: &Value, path: String) -> Result<f64> {
    v.as_f64().ok_or(Error::TypeMismatch {
        path,
        expected: "number",
    })
}

fn array<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<(&'a [Value], String)> {
    let (v, p) = field(obj, path, key)?;
    match v.as_array() {
        Some(a) => Ok((a.as_slice(), p)),
        None => Err(Error::TypeMismatch {
            path: p,
            expected: "array",
        }),
    }
}

fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))
}

fn parse_instance(v: &Value, path: &str) -> Result<Instance> {
    let obj = object(v, path)?;
    let (bbox, bbox_path) = array(obj, path, "bbox")?;
    if bbox.len() != 4 {
        return Err(Error::TypeMismatch {
            path: bbox_path,
            expected: "array of 4 numbers",
        });
    }
    let coord = |i: usize| number(&bbox[i], format!("{bbox_path}[{i}]"));
    let feature = match obj.get("feature") {
        None | Some(Value::Null) => None,
        Some(Value::Array(bytes)) => Some(
            bytes
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    b.as_u64()
                        .filter(|n| *n <= 255)
                        .map(|n| n as u8)
                        .ok_or(Error::TypeMismatch {
                            path: format!("{path}.feature[{i}]"),
                            expected: "byte",
                        })
                })
                .collect::<Result<Vec<u8>>>()?,
        ),
        Some(_) => {
            return Err(Error::TypeMismatch {
                path: join(path, "feature"),
                expected: "array of bytes",
            })
        }
    };
    let (score, score_path) = field(obj, path, "score")?;
    Ok(Instance {
        id: integer(obj, path, "id")?,
        class_label: string(obj, path, "class")?,
        score: number(score, score_path)?,
        bbox: BBox::new(coord(0)?, coord(1)?, coord(2)?, coord(3)?),
        feature,
    })
}

fn parse_triplet(v: &Value, path: &str) -> Result<Triplet> {
    let obj = object(v, path)?;
    Ok(Triplet {
        subject_id: integer(obj, path, "subject")?,
        relation: string(obj, path, "relation")?,
        object_id: integer(obj, path, "object")?,
    })
}

/// Parses an annotation document. The scene graph must pass the graph-level
/// structural checks; file-dependent checks happen when the scene is loaded.
pub fn parse_annotation(text: &str) -> Result<AnnotationRecord> {
    let root = parse_value(text)?;
    let obj = object(&root, "")?;

    let (table, table_path) = field(obj, "", "class_table")?;
    let mut class_table = BTreeMap::new();
    for (key, name) in object(table, &table_path)? {
        let p = join(&table_path, key);
        let idx: u8 = key.parse().map_err(|_| Error::TypeMismatch {
            path: p.clone(),
            expected: "class index key in 0..=255",
        })?;
        let name = name.as_str().ok_or(Error::TypeMismatch {
            path: p,
            expected: "string",
        })?;
        class_table.insert(idx, name.to_string());
    }

    let (instances, ipath) = array(obj, "", "instances")?;
    let instances = instances
        .iter()
        .enumerate()
        .map(|(i, v)| parse_instance(v, &format!("{ipath}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let (triplets, tpath) = array(obj, "", "triplets")?;
    let triplets = triplets
        .iter()
        .enumerate()
        .map(|(i, v)| parse_triplet(v, &format!("{tpath}[{i}]")))
        .collect::<Result<Vec<_>>>()?;

    let rec = AnnotationRecord {
        image: string(obj, "", "image")?,
        segmentation: string(obj, "", "segmentation")?,
        width: size(obj, "", "width")?,
        height: size(obj, "", "height")?,
        class_table,
        graph: SceneGraph::new(instances, triplets),
    };
    validate_graph(&rec.graph).into_result()?;
    Ok(rec)
}

pub fn annotation_to_value(rec: &AnnotationRecord) -> Value {
    let class_table: Map<String, Value> = rec
        .class_table
        .iter()
        .map(|(k, v)| (k.to_string(), Value::String(v.clone())))
        .collect();
    let instances: Vec<Value> = rec
        .graph
        .instances
        .iter()
        .map(|inst| {
            let mut v = json!({
                "id": inst.id,
                "class": inst.class_label,
                "score": inst.score,
                "bbox": [inst.bbox.x1, inst.bbox.y1, inst.bbox.x2, inst.bbox.y2],
            });
            if let Some(f) = &inst.feature {
                v["feature"] = json!(f);
            }
            v
        })
        .collect();
    let triplets: Vec<Value> = rec
        .graph
        .triplets
        .iter()
        .map(|t| json!({"subject": t.subject_id, "relation": t.relation, "object": t.object_id}))
        .collect();
    json!({
        "image": rec.image,
        "segmentation": rec.segmentation,
        "width": rec.width,
        "height": rec.height,
        "class_table": class_table,
        "instances": instances,
        "triplets": triplets,
    })
}

pub fn annotation_to_json(rec: &AnnotationRecord) -> String {
    serde_json::to_string_pretty(&annotation_to_value(rec)).expect("values serialize")
}

/// Parses a task-criteria document; duplicate entries collapse.
pub fn parse_criteria(text: &str) -> Result<TaskCriteria> {
    let root = parse_value(text)?;
    let obj = object(&root, "")?;
    let task_name = string(obj, "", "task")?;

    let (classes, cpath) = array(obj, "", "critical_classes")?;
    let critical_classes = classes
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_str().map(str::to_string).ok_or(Error::TypeMismatch {
                path: format!("{cpath}[{i}]"),
                expected: "string",
            })
        })
        .collect::<Result<_>>()?;

    let (relations, rpath) = array(obj, "", "critical_relations")?;
    let critical_relations = relations
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let p = format!("{rpath}[{i}]");
            let o = object(v, &p)?;
            Ok((string(o, &p, "relation")?, string(o, &p, "object_class")?))
        })
        .collect::<Result<_>>()?;

    Ok(TaskCriteria {
        task_name,
        critical_classes,
        critical_relations,
    })
}

pub fn criteria_to_json(crit: &TaskCriteria) -> String {
    let relations: Vec<Value> = crit
        .critical_relations
        .iter()
        .map(|(r, o)| json!({"relation": r, "object_class": o}))
        .collect();
    serde_json::to_string_pretty(&json!({
        "task": crit.task_name,
        "critical_classes": crit.critical_classes,
        "critical_relations": relations,
    }))
    .expect("values serialize")
}
