use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationKind {
    GroundTruth,
    Predictions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonInstance {
    pub class_id: u32,
    pub class_name: String,
    /// Vertices in image pixels, origin top-left.
    pub vertices: Vec<[f64; 2]>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxInstance {
    pub class_id: u32,
    pub class_name: String,
    /// `[x_min, y_min, x_max, y_max]`
    pub bbox: [f64; 4],
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Polygon(PolygonInstance),
    Box(BoxInstance),
}

impl Instance {
    pub fn class_id(&self) -> u32 {
        match self {
            Instance::Polygon(p) => p.class_id,
            Instance::Box(b) => b.class_id,
        }
    }

    pub fn class_name(&self) -> &str {
        match self {
            Instance::Polygon(p) => &p.class_name,
            Instance::Box(b) => &b.class_name,
        }
    }

    pub fn score(&self) -> Option<f64> {
        match self {
            Instance::Polygon(p) => p.score,
            Instance::Box(b) => b.score,
        }
    }

    /// Closed outline as a vertex list. Boxes expand to their four corners.
    pub fn outline(&self) -> Vec<[f64; 2]> {
        match self {
            Instance::Polygon(p) => p.vertices.clone(),
            Instance::Box(b) => {
                let [x0, y0, x1, y1] = b.bbox;
                vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
            }
        }
    }

    /// Axis-aligned bounds `[x_min, y_min, x_max, y_max]` of the outline.
    pub fn bounds(&self) -> [f64; 4] {
        match self {
            Instance::Box(b) => b.bbox,
            Instance::Polygon(p) => p.vertices.iter().fold(
                [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
                |[x0, y0, x1, y1], &[x, y]| [x0.min(x), y0.min(y), x1.max(x), y1.max(y)],
            ),
        }
    }

    fn validate(&self, width: u32, height: u32) -> std::result::Result<(), String> {
        let (w, h) = (f64::from(width), f64::from(height));
        let in_frame =
            |x: f64, y: f64| x.is_finite() && y.is_finite() && (0.0..=w).contains(&x) && (0.0..=h).contains(&y);
        match self {
            Instance::Polygon(p) => {
                if p.vertices.len() < 3 {
                    return Err(format!("polygon has {} vertices, need at least 3", p.vertices.len()));
                }
                if let Some((i, [x, y])) = p.vertices.iter().enumerate().find(|(_, v)| !in_frame(v[0], v[1])) {
                    return Err(format!("vertex {i} ({x}, {y}) out of bounds [0, {width}] x [0, {height}]"));
                }
            }
            Instance::Box(b) => {
                let [x0, y0, x1, y1] = b.bbox;
                if !(x0 < x1 && y0 < y1) {
                    return Err(format!("bbox {:?} requires x_min < x_max and y_min < y_max", b.bbox));
                }
                if !in_frame(x0, y0) || !in_frame(x1, y1) {
                    return Err(format!("bbox {:?} out of bounds [0, {width}] x [0, {height}]", b.bbox));
                }
            }
        }
        if let Some(s) = self.score() {
            if !(0.0..=1.0).contains(&s) {
                return Err(format!("score {s} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnnotations {
    pub frame_id: String,
    pub width: u32,
    pub height: u32,
    pub instances: Vec<Instance>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    frames: Vec<RawFrame>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    frame_id: String,
    width: i64,
    height: i64,
    #[serde(default)]
    instances: Vec<RawInstance>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    class_id: u32,
    class_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polygon: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bbox: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

fn dimension(frame_id: &str, name: &str, v: i64) -> Result<u32> {
    u32::try_from(v)
        .ok()
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::validation(format!("frame {frame_id:?}: {name} must be a positive integer, got {v}")))
}

fn convert_frame(rf: RawFrame, kind: AnnotationKind) -> Result<FrameAnnotations> {
    let width = dimension(&rf.frame_id, "width", rf.width)?;
    let height = dimension(&rf.frame_id, "height", rf.height)?;
    let mut instances = Vec::with_capacity(rf.instances.len());
    for (idx, ri) in rf.instances.into_iter().enumerate() {
        let fail = |msg: String| Error::validation(format!("frame {:?}, instance {idx}: {msg}", rf.frame_id));
        match (kind, ri.score) {
            (AnnotationKind::GroundTruth, Some(_)) => {
                return Err(fail("ground-truth instance must not carry a score".into()))
            }
            (AnnotationKind::Predictions, None) => return Err(fail("prediction instance is missing its score".into())),
            _ => {}
        }
        let inst = match (ri.polygon, ri.bbox) {
            (Some(vertices), None) => Instance::Polygon(PolygonInstance {
                class_id: ri.class_id,
                class_name: ri.class_name,
                vertices,
                score: ri.score,
            }),
            (None, Some(bbox)) => {
                Instance::Box(BoxInstance { class_id: ri.class_id, class_name: ri.class_name, bbox, score: ri.score })
            }
            (Some(_), Some(_)) => return Err(fail("instance has both polygon and bbox".into())),
            (None, None) => return Err(fail("instance needs a polygon or a bbox".into())),
        };
        inst.validate(width, height).map_err(fail)?;
        instances.push(inst);
    }
    Ok(FrameAnnotations { frame_id: rf.frame_id, width, height, instances })
}

fn check_unique_ids(raw: &RawFile) -> Result<()> {
    let mut seen = HashSet::new();
    for rf in &raw.frames {
        if !seen.insert(rf.frame_id.as_str()) {
            return Err(Error::validation(format!("duplicate frame_id {:?}", rf.frame_id)));
        }
    }
    Ok(())
}

fn convert(raw: RawFile, kind: AnnotationKind) -> Result<Vec<FrameAnnotations>> {
    check_unique_ids(&raw)?;
    raw.frames.into_iter().map(|rf| convert_frame(rf, kind)).collect()
}

/// Outcome of validating one frame of a document parsed with [`parse_frames_each`].
#[derive(Debug)]
pub struct FrameEntry {
    pub frame_id: String,
    pub frame: Result<FrameAnnotations>,
}

/// Parses a frames document but validates each frame on its own, so one bad
/// frame does not reject the rest. Syntax errors and duplicate frame ids still
/// fail the whole document. With `kind` unset, the document holds
/// predictions if its first instance carries a score.
pub fn parse_frames_each(bytes: &[u8], kind: Option<AnnotationKind>) -> Result<(AnnotationKind, Vec<FrameEntry>)> {
    let raw: RawFile = serde_json::from_slice(bytes)?;
    check_unique_ids(&raw)?;
    let kind = kind.unwrap_or_else(|| match raw.frames.iter().flat_map(|f| &f.instances).next() {
        Some(ri) if ri.score.is_some() => AnnotationKind::Predictions,
        _ => AnnotationKind::GroundTruth,
    });
    let entries = raw
        .frames
        .into_iter()
        .map(|rf| FrameEntry { frame_id: rf.frame_id.clone(), frame: convert_frame(rf, kind) })
        .collect();
    Ok((kind, entries))
}

/// Parses and validates a frames document held in memory.
pub fn parse_frames_bytes(bytes: &[u8], kind: AnnotationKind) -> Result<Vec<FrameAnnotations>> {
    let raw: RawFile = serde_json::from_slice(bytes)?;
    convert(raw, kind)
}

/// Reads and validates a frames file.
pub fn parse_frames(path: impl AsRef<Path>, kind: AnnotationKind) -> Result<Vec<FrameAnnotations>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_frames_bytes(&bytes, kind)
}

pub fn frames_to_json(frames: &[FrameAnnotations]) -> String {
    let raw = RawFile {
        frames: frames
            .iter()
            .map(|f| RawFrame {
                frame_id: f.frame_id.clone(),
                width: i64::from(f.width),
                height: i64::from(f.height),
                instances: f
                    .instances
                    .iter()
                    .map(|inst| match inst {
                        Instance::Polygon(p) => RawInstance {
                            class_id: p.class_id,
                            class_name: p.class_name.clone(),
                            polygon: Some(p.vertices.clone()),
                            bbox: None,
                            score: p.score,
                        },
                        Instance::Box(b) => RawInstance {
                            class_id: b.class_id,
                            class_name: b.class_name.clone(),
                            polygon: None,
                            bbox: Some(b.bbox),
                            score: b.score,
                        },
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("frames serialize")
}

pub fn write_frames(frames: &[FrameAnnotations], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, frames_to_json(frames)).map_err(|e| Error::io(path, e))
}
