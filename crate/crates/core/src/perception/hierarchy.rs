use super::{Axes, ClickableElement, PerceptionError, ScrollableTarget, TargetSource};
use crate::model::{normalize_bbox, BBox, SwipeKind};
use crate::synth::{swipe_axis, Axis};

/// Result of reading a hierarchy dump.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HierarchyParse {
    pub targets: Vec<ScrollableTarget>,
    pub clickables: Vec<ClickableElement>,
    /// Scrollable or clickable nodes dropped for missing or unusable bounds.
    pub skipped: usize,
}

/// Parses a `[x1,y1][x2,y2]` bounds attribute.
pub fn parse_bounds(s: &str) -> Option<BBox> {
    let s = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    let (a, b) = s.split_once("][")?;
    let pair = |p: &str| -> Option<(i32, i32)> {
        let (x, y) = p.split_once(',')?;
        Some((x.trim().parse().ok()?, y.trim().parse().ok()?))
    };
    let (x1, y1) = pair(a)?;
    let (x2, y2) = pair(b)?;
    Some(BBox::new(x1, y1, x2, y2))
}

fn flag(node: &roxmltree::Node, names: &[&str]) -> bool {
    names.iter().any(|n| node.attribute(*n).is_some_and(|v| v.eq_ignore_ascii_case("true")))
}

fn label_of(node: &roxmltree::Node) -> String {
    ["text", "content-desc", "resource-id", "class"]
        .iter()
        .filter_map(|a| node.attribute(*a))
        .map(str::trim)
        .find(|v| !v.is_empty())
        .unwrap_or("")
        .to_string()
}

/// Reads a UI-automator XML dump or an accessibility dump using
/// `is_scrollable`. Every scrollable node becomes a component target;
/// clickable nodes that are not scrollable become clickable elements.
pub fn parse_hierarchy(doc: &str, width: u32, height: u32) -> Result<HierarchyParse, PerceptionError> {
    let xml = roxmltree::Document::parse(doc).map_err(|e| PerceptionError::MalformedDocument(e.to_string()))?;
    let mut out = HierarchyParse::default();
    for node in xml.descendants().filter(|n| n.is_element()) {
        let scrollable = flag(&node, &["scrollable", "is_scrollable"]);
        let clickable = flag(&node, &["clickable", "is_clickable"]);
        if !scrollable && !clickable {
            continue;
        }
        let px = node
            .attribute("bounds")
            .and_then(parse_bounds)
            .map(|b| {
                let (w, h) = (width as i32, height as i32);
                BBox::new(b.x1.clamp(0, w), b.y1.clamp(0, h), b.x2.clamp(0, w), b.y2.clamp(0, h))
            })
            .filter(|b| b.x1 < b.x2 && b.y1 < b.y2);
        let Some(px) = px else {
            out.skipped += 1;
            continue;
        };
        let bbox = normalize_bbox(px, width, height)?;
        if scrollable {
            let axes = match swipe_axis(&px) {
                Axis::Horizontal => Axes::Horizontal,
                Axis::Vertical => Axes::Vertical,
            };
            out.targets.push(ScrollableTarget {
                kind: SwipeKind::Component,
                bbox,
                axes,
                label: label_of(&node),
                source: TargetSource::Hierarchy,
            });
        } else {
            out.clickables.push(ClickableElement { bbox, label: label_of(&node) });
        }
    }
    if out.skipped > 0 {
        log::warn!("hierarchy: skipped {} nodes without usable bounds", out.skipped);
    }
    Ok(out)
}
