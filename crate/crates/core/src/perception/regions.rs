use image::RgbImage;
use serde_json::Value;

use super::gateway::{DecodeParams, Gateway, ImageData, VisionRequest};
use super::{parse_json_lenient, prompts, Axes, PerceptionError, ScrollableTarget, TargetSource};
use crate::model::{BBox, SwipeKind, NORM_MAX};

pub const MAX_REGIONS: usize = 6;

/// Asks the vision model for scrollable regions on `screenshot`.
pub fn detect_regions(gw: &Gateway, screenshot: &RgbImage) -> Result<Vec<ScrollableTarget>, PerceptionError> {
    let req = VisionRequest {
        images: vec![ImageData::from_rgb(screenshot)],
        prompt: prompts::region_detection_prompt(),
        params: DecodeParams::default(),
    };
    let resp = gw.chat_vision(&req)?;
    parse_region_reply(&resp.text)
}

/// Turns a region-detection reply into targets. Entries with an unknown
/// direction or an inverted box are dropped; coordinates are clamped into the
/// normalized frame; at most [`MAX_REGIONS`] are kept.
pub fn parse_region_reply(text: &str) -> Result<Vec<ScrollableTarget>, PerceptionError> {
    let value: Value = parse_json_lenient(text)?;
    let entries = match value {
        Value::Array(items) => items,
        obj @ Value::Object(_) => vec![obj],
        _ => return Err(PerceptionError::UnparseableJson("expected a JSON array of regions".into())),
    };
    let mut out: Vec<ScrollableTarget> = entries.iter().filter_map(region_entry).collect();
    out.truncate(MAX_REGIONS);
    Ok(out)
}

fn region_entry(v: &Value) -> Option<ScrollableTarget> {
    let axes = Axes::parse(v.get("direction")?.as_str()?)?;
    let coords = v.get("bbox")?.as_array()?;
    if coords.len() != 4 {
        return None;
    }
    let mut c = [0i32; 4];
    for (slot, n) in c.iter_mut().zip(coords) {
        let f = n.as_f64()?;
        if !f.is_finite() {
            return None;
        }
        *slot = f.round().clamp(0.0, NORM_MAX as f64) as i32;
    }
    let bbox = BBox::from(c);
    if bbox.x1 >= bbox.x2 || bbox.y1 >= bbox.y2 {
        return None;
    }
    let kind = v.get("type").and_then(Value::as_str).unwrap_or("").trim();
    let desc = v.get("description").and_then(Value::as_str).unwrap_or("").trim();
    let label = match (kind.is_empty(), desc.is_empty()) {
        (false, false) => format!("{kind}: {desc}"),
        (false, true) => kind.to_string(),
        _ => desc.to_string(),
    };
    Some(ScrollableTarget { kind: SwipeKind::Region, bbox, axes, label, source: TargetSource::Vlm })
}
