//! Client for an element-parser service. See `docs/parser-schema.md`.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::gateway::{Gateway, ImageData};
use super::{Axes, ClickableElement, PerceptionError, ScrollableTarget, TargetSource};
use crate::model::{BBox, SwipeKind, NORM_MAX};

/// One element as returned by the parser. `bbox` holds `[x1, y1, x2, y2]` as
/// fractions of the screen size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedElement {
    pub bbox: [f64; 4],
    #[serde(default, rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub content: Option<String>,
    #[serde(default)]
    pub interactivity: bool,
    #[serde(default)]
    pub scrollable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParserReply {
    pub elements: Vec<ParsedElement>,
}

fn to_norm(b: &[f64; 4]) -> Option<BBox> {
    if b.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let n = |v: f64| (v * NORM_MAX as f64).round().clamp(0.0, NORM_MAX as f64) as i32;
    let bbox = BBox::new(n(b[0]), n(b[1]), n(b[2]), n(b[3]));
    (bbox.x1 < bbox.x2 && bbox.y1 < bbox.y2).then_some(bbox)
}

/// Splits a parser reply into component targets and clickable elements.
/// Overlapping boxes are all kept.
pub fn parse_parser_reply(body: &str) -> Result<(Vec<ScrollableTarget>, Vec<ClickableElement>), PerceptionError> {
    let reply: ParserReply = serde_json::from_str(body).map_err(|e| PerceptionError::SchemaMismatch(e.to_string()))?;
    let mut targets = Vec::new();
    let mut clicks = Vec::new();
    for el in &reply.elements {
        let Some(bbox) = to_norm(&el.bbox) else { continue };
        let label = el.content.clone().filter(|c| !c.trim().is_empty()).unwrap_or_else(|| el.kind.clone());
        if el.scrollable {
            let axes = if bbox.height() > bbox.width() { Axes::Vertical } else { Axes::Horizontal };
            targets.push(ScrollableTarget { kind: SwipeKind::Component, bbox, axes, label, source: TargetSource::Parser });
        } else if el.interactivity {
            clicks.push(ClickableElement { bbox, label });
        }
    }
    Ok((targets, clicks))
}

pub fn detect_components(
    gw: &Gateway,
    screenshot: &RgbImage,
) -> Result<(Vec<ScrollableTarget>, Vec<ClickableElement>), PerceptionError> {
    let body = gw.parse_screen(&ImageData::from_rgb(screenshot))?;
    parse_parser_reply(&body)
}
