//! Prompt templates, stored as text assets next to the crate.
//!
//! The leading line of each template names the image slots (`<image>`,
//! `<image1> <image2>`); images travel as separate message parts, so that line
//! is dropped before sending.

use serde::Serialize;

use crate::model::SwipeSpec;

pub const REGION_DETECTION_TEMPLATE: &str = include_str!("../../prompts/region_detection.txt");
pub const SWIPE_DESCRIPTION_TEMPLATE: &str = include_str!("../../prompts/swipe_description.txt");

const SWIPE_SLOT: &str = "<swipe>";

fn without_image_slots(template: &str) -> &str {
    match template.split_once('\n') {
        Some((first, rest)) if first.trim_start().starts_with("<image") => rest,
        _ => template,
    }
}

pub fn region_detection_prompt() -> String {
    without_image_slots(REGION_DETECTION_TEMPLATE).trim_end().to_string()
}

#[derive(Serialize)]
struct SwipeParams<'a> {
    #[serde(rename = "type")]
    kind: &'a str,
    start: [i32; 2],
    end: [i32; 2],
    direction: &'a str,
    duration: u32,
}

/// The swipe parameters as they appear in the description prompt.
pub fn swipe_params_json(spec: &SwipeSpec) -> String {
    serde_json::to_string(&SwipeParams {
        kind: spec.kind.as_str(),
        start: spec.start.into(),
        end: spec.end.into(),
        direction: spec.direction.as_str(),
        duration: spec.duration_ms,
    })
    .expect("swipe params serialization")
}

pub fn swipe_description_prompt(spec: &SwipeSpec) -> String {
    without_image_slots(SWIPE_DESCRIPTION_TEMPLATE)
        .trim_end()
        .replace(SWIPE_SLOT, &swipe_params_json(spec))
}
