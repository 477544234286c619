//! Declarative JSON scenes and the built-in fixture apps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{InertiaModel, SimApp, SimError, SimScreen};

/// On-disk scene layout. See `docs/scene-format.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub app: String,
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
    #[serde(default)]
    pub seed: u64,
    pub start: String,
    #[serde(default)]
    pub inertia: InertiaModel,
    pub screens: Vec<SimScreen>,
}

fn default_width() -> u32 {
    1080
}

fn default_height() -> u32 {
    1920
}

impl SceneFile {
    pub fn into_app(self) -> Result<SimApp, SimError> {
        let mut app = SimApp::new(self.app, self.width, self.height, self.seed, self.screens, self.start)?;
        if !(self.inertia.k_fast > self.inertia.k_slow && self.inertia.k_slow > 0.0) {
            return Err(SimError::InvalidScene("inertia needs k_fast > k_slow > 0".into()));
        }
        if self.inertia.v_threshold <= 0.0 {
            return Err(SimError::InvalidScene("inertia v_threshold must be positive".into()));
        }
        app.inertia = self.inertia;
        Ok(app)
    }
}

/// Names of the bundled fixtures.
pub const BUILTIN_SCENES: [&str; 3] = ["feed", "gallery", "editor"];

pub fn builtin_scene(name: &str) -> Option<&'static str> {
    match name {
        "feed" => Some(include_str!("../../fixtures/feed.json")),
        "gallery" => Some(include_str!("../../fixtures/gallery.json")),
        "editor" => Some(include_str!("../../fixtures/editor.json")),
        _ => None,
    }
}

pub fn parse_scene(json: &str) -> Result<SimApp, SimError> {
    serde_json::from_str::<SceneFile>(json)?.into_app()
}

/// Loads a scene from a path, or from a built-in fixture when `spec` names one
/// (`feed`, `fixtures/feed.json`) and no such file exists.
pub fn load_scene(spec: &str) -> Result<SimApp, SimError> {
    let path = Path::new(spec);
    if path.is_file() {
        return parse_scene(&std::fs::read_to_string(path)?);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    match builtin_scene(stem) {
        Some(json) => parse_scene(json),
        None => Err(SimError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no scene file or built-in fixture named {spec}"),
        ))),
    }
}
