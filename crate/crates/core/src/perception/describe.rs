use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::gateway::{DecodeParams, Gateway, ImageData, VisionRequest};
use super::{parse_json_lenient, prompts, PerceptionError};
use crate::model::SwipeSpec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwipeDescription {
    pub command: String,
    pub reason: String,
}

/// Strict: both fields are required and nothing else is allowed.
pub fn parse_description(text: &str) -> Result<SwipeDescription, PerceptionError> {
    let d: SwipeDescription = parse_json_lenient(text)?;
    if d.command.trim().is_empty() {
        return Err(PerceptionError::EmptyCommand);
    }
    Ok(SwipeDescription { command: d.command.trim().to_string(), reason: d.reason.trim().to_string() })
}

/// Asks the vision model to describe an executed swipe from the screens
/// before and after it.
pub fn describe_swipe(
    gw: &Gateway,
    before: &RgbImage,
    after: &RgbImage,
    spec: &SwipeSpec,
) -> Result<SwipeDescription, PerceptionError> {
    let req = VisionRequest {
        images: vec![ImageData::from_rgb(before), ImageData::from_rgb(after)],
        prompt: prompts::swipe_description_prompt(spec),
        params: DecodeParams::default(),
    };
    parse_description(&gw.chat_vision(&req)?.text)
}
