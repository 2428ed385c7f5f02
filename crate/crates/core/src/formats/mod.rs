//! On-disk formats: netpbm rasters, JSON annotations and criteria, and the
//! results CSV.

pub mod json;
pub mod netpbm;
pub mod results;

pub use json::{
    annotation_to_json, criteria_to_json, parse_annotation, parse_criteria, AnnotationRecord,
};
pub use netpbm::{
    read_image, read_mask, read_pgm, read_ppm, write_image, write_mask, write_pgm, GrayRaster,
};
pub use results::{read_results, write_results, ResultRow};
