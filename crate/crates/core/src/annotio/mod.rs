//! Annotation, prediction and mask-raster I/O.
//!
//! Ground truth and predictions share one JSON schema; the presence of a
//! `score` on each instance is what tells them apart:
//!
//! ```json
//! { "frames": [ { "frame_id": "f0", "width": 640, "height": 480,
//!     "instances": [ { "class_id": 0, "class_name": "Plastic bags",
//!                      "polygon": [[10, 10], [50, 10], [30, 40]],
//!                      "score": 0.91 } ] } ] }
//! ```
//!
//! An instance carries either `polygon` (three or more `[x, y]` vertices)
//! or `bbox` (`[x_min, y_min, x_max, y_max]`). Coordinates are real-valued
//! pixels with the origin at the top-left corner.

mod frames;
mod pgm;
mod records;

pub use frames::{
    frames_to_json, parse_frames, parse_frames_bytes, parse_frames_each, write_frames, AnnotationKind, BoxInstance,
    FrameAnnotations, FrameEntry, Instance, PolygonInstance,
};
pub use pgm::{decode_pgm, encode_pgm, read_mask_raster, write_mask_raster, MaskRaster};
pub use records::{parse_frame_records, records_to_jsonl, write_frame_records, FrameRecord, InstanceRecord};
