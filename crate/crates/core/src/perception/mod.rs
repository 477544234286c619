//! Finding swipe targets on a screen and describing executed swipes.
//!
//! Targets come from a hierarchy dump, from a vision model prompted for
//! scrollable regions, or from an element-parser service. Remote calls all go
//! through [`gateway::Gateway`].

mod describe;
pub mod gateway;
mod hierarchy;
mod parser;
pub mod prompts;
mod regions;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BBox, SwipeKind};

pub use describe::{describe_swipe, parse_description, SwipeDescription};
pub use gateway::{Gateway, GatewayError};
pub use hierarchy::{parse_bounds, parse_hierarchy, HierarchyParse};
pub use parser::{detect_components, parse_parser_reply, ParsedElement, ParserReply};
pub use regions::{detect_regions, parse_region_reply, MAX_REGIONS};

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("model output is not valid JSON: {0}")]
    UnparseableJson(String),
    #[error("model returned an empty command")]
    EmptyCommand,
    #[error("malformed hierarchy document: {0}")]
    MalformedDocument(String),
    #[error("parser reply does not match schema: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Geometry(#[from] crate::model::GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axes {
    Horizontal,
    Vertical,
    Both,
}

impl Axes {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "horizontal" => Some(Axes::Horizontal),
            "vertical" => Some(Axes::Vertical),
            "both" => Some(Axes::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSource {
    Hierarchy,
    Vlm,
    Parser,
}

/// Something on screen that can be swiped. `bbox` is normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrollableTarget {
    pub kind: SwipeKind,
    pub bbox: BBox,
    pub axes: Axes,
    pub label: String,
    pub source: TargetSource,
}

/// A tappable element. `bbox` is normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickableElement {
    pub bbox: BBox,
    pub label: String,
}

/// Strips one surrounding markdown code fence, if present.
pub(crate) fn strip_code_fence(text: &str) -> Option<&str> {
    let t = text.trim();
    let rest = t.strip_prefix("```")?;
    let body_start = rest.find('\n').map(|i| i + 1).unwrap_or(0);
    let body = &rest[body_start..];
    let end = body.rfind("```")?;
    Some(body[..end].trim())
}

/// Parses `text` as JSON, retrying once with a code fence removed.
pub(crate) fn parse_json_lenient<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, PerceptionError> {
    match serde_json::from_str(text.trim()) {
        Ok(v) => Ok(v),
        Err(first) => match strip_code_fence(text) {
            Some(inner) => serde_json::from_str(inner).map_err(|e| PerceptionError::UnparseableJson(e.to_string())),
            None => Err(PerceptionError::UnparseableJson(first.to_string())),
        },
    }
}
