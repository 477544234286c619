//! Stand-ins for the vision model and the element parser, answering from the
//! simulator's state. Only meant for tests and offline demo runs.

use serde_json::{json, Value};

use super::{SimHandle, WidgetKind};
use crate::model::{denormalize_point, normalize_bbox, NormPoint};
use crate::perception::gateway::{chat_completion_body, HttpReply, Transport, TransportError};

pub const SIM_VLM_URL: &str = "sim://vlm";
pub const SIM_PARSER_URL: &str = "sim://parser";

/// A [`Transport`] serving `sim://vlm` and `sim://parser`.
#[derive(Debug, Clone)]
pub struct SimServices {
    handle: SimHandle,
}

impl SimServices {
    pub fn new(handle: SimHandle) -> Self {
        Self { handle }
    }

    fn regions(&self) -> String {
        let app = self.handle.lock();
        let (w, h) = (app.width, app.height);
        let items: Vec<Value> = app
            .screen()
            .widgets
            .iter()
            .filter_map(|wd| {
                let (kind, dir) = match wd.kind {
                    WidgetKind::VerticalList { .. } => ("list", "vertical"),
                    WidgetKind::HorizontalCarousel { .. } => ("carousel", "horizontal"),
                    _ => return None,
                };
                let b = normalize_bbox(wd.bbox, w, h).ok()?;
                Some(json!({
                    "type": kind,
                    "direction": dir,
                    "bbox": [b.x1, b.y1, b.x2, b.y2],
                    "description": format!("Swipe to browse the {}", wd.label.to_lowercase()),
                }))
            })
            .collect();
        serde_json::to_string_pretty(&items).expect("region json")
    }

    fn describe(&self, prompt: &str) -> String {
        let params: Option<Value> = prompt
            .lines()
            .find(|l| l.trim_start().starts_with('{'))
            .and_then(|l| serde_json::from_str(l.trim()).ok());
        let Some(p) = params else {
            return "I cannot tell which swipe was performed.".into();
        };
        let dir = p["direction"].as_str().unwrap_or("up");
        let app = self.handle.lock();
        let start = p["start"]
            .as_array()
            .and_then(|a| Some(NormPoint::new(a.first()?.as_i64()? as i32, a.get(1)?.as_i64()? as i32)));
        let target = start
            .and_then(|s| denormalize_point(s, app.width, app.height).ok())
            .and_then(|px| {
                app.screen()
                    .widgets
                    .iter()
                    .find(|wd| wd.bbox.contains(px.x as i32, px.y as i32))
                    .map(|wd| (wd.label.clone(), matches!(wd.kind, WidgetKind::Slider { .. })))
            });
        let (command, reason) = match target {
            Some((label, true)) => (
                format!("Drag the {} slider {dir}.", label.to_lowercase()),
                format!("The thumb of the {label} slider moved {dir} between the screenshots."),
            ),
            Some((label, false)) => (
                format!("Swipe {dir} on the {} to view more content.", label.to_lowercase()),
                format!("New items scrolled into view inside the {label} area."),
            ),
            None => (format!("Swipe {dir} on the screen."), "The screen content moved.".to_string()),
        };
        json!({ "command": command, "reason": reason }).to_string()
    }

    fn parser(&self) -> String {
        let app = self.handle.lock();
        let (w, h) = (app.width as f64, app.height as f64);
        let elements: Vec<Value> = app
            .screen()
            .widgets
            .iter()
            .filter_map(|wd| {
                let scrollable = match wd.kind {
                    WidgetKind::Slider { .. } => true,
                    WidgetKind::Button { .. } => false,
                    _ => return None,
                };
                let b = wd.bbox;
                Some(json!({
                    "bbox": [b.x1 as f64 / w, b.y1 as f64 / h, b.x2 as f64 / w, b.y2 as f64 / h],
                    "type": "icon",
                    "content": wd.label,
                    "interactivity": true,
                    "scrollable": scrollable,
                }))
            })
            .collect();
        json!({ "elements": elements }).to_string()
    }
}

impl Transport for SimServices {
    fn post_json(&self, url: &str, _auth: Option<&str>, body: &str) -> Result<HttpReply, TransportError> {
        if url == SIM_PARSER_URL {
            return Ok(HttpReply::ok(self.parser()));
        }
        if url != SIM_VLM_URL {
            return Err(TransportError(format!("no simulated service at {url}")));
        }
        let req: Value = serde_json::from_str(body).map_err(|e| TransportError(e.to_string()))?;
        let parts = req["messages"][0]["content"].as_array().cloned().unwrap_or_default();
        let images = parts.iter().filter(|p| p["type"] == "image_url").count();
        let prompt = parts.iter().find_map(|p| p["text"].as_str()).unwrap_or("");
        let content = if images >= 2 { self.describe(prompt) } else { self.regions() };
        Ok(HttpReply::ok(chat_completion_body(&content)))
    }
}
