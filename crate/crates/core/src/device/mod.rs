//! Uniform device interface and ADB command rendering.

mod adb;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{denormalize_point, ActionKind, GeometryError, PixelPoint, SwipeSpec};

pub use adb::{AdbDevice, AdbRunner};

/// Default wait after a gesture before the next screenshot, in milliseconds.
pub const DEFAULT_SETTLE_MS: u64 = 800;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("expected a {expected:?} gesture, got {got:?}")]
    KindMismatch { expected: ActionKind, got: ActionKind },
    #[error("malformed gesture: {0}")]
    MalformedGesture(&'static str),
    #[error("point ({x},{y}) outside {width}x{height} screen")]
    OutOfBounds { x: u32, y: u32, width: u32, height: u32 },
    #[error("device {0} unreachable")]
    Unreachable(String),
    #[error("screenshot decode failed: {0}")]
    Decode(String),
    #[error("hierarchy dump not supported by this device")]
    Unsupported,
    #[error("hierarchy dump failed: {0}")]
    DumpFailed(String),
    #[error("device command failed: {0}")]
    Command(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceInfo {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub density: Option<u32>,
}

/// A gesture in device pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GestureCommand {
    pub kind: ActionKind,
    pub start: PixelPoint,
    pub end: Option<PixelPoint>,
    pub duration_ms: Option<u32>,
    pub text: Option<String>,
}

impl GestureCommand {
    pub fn tap(at: PixelPoint) -> Self {
        Self { kind: ActionKind::Tap, start: at, end: None, duration_ms: None, text: None }
    }

    pub fn swipe(start: PixelPoint, end: PixelPoint, duration_ms: u32) -> Self {
        Self { kind: ActionKind::Swipe, start, end: Some(end), duration_ms: Some(duration_ms), text: None }
    }

    pub fn long_press(at: PixelPoint, duration_ms: u32) -> Self {
        Self { kind: ActionKind::LongPress, start: at, end: None, duration_ms: Some(duration_ms), text: None }
    }

    pub fn text(at: PixelPoint, text: impl Into<String>) -> Self {
        Self { kind: ActionKind::Text, start: at, end: None, duration_ms: None, text: Some(text.into()) }
    }

    /// The pixel gesture that executes a normalized swipe on a `w x h` screen.
    pub fn from_spec(spec: &SwipeSpec, w: u32, h: u32) -> Result<Self, GeometryError> {
        Ok(Self::swipe(
            denormalize_point(spec.start, w, h)?,
            denormalize_point(spec.end, w, h)?,
            spec.duration_ms,
        ))
    }

    /// Structural invariants: swipes carry end and duration, long presses a
    /// duration, text entry a string.
    pub fn check(&self) -> Result<(), DeviceError> {
        match self.kind {
            ActionKind::Swipe if self.end.is_none() => Err(DeviceError::MalformedGesture("swipe without end")),
            ActionKind::Swipe | ActionKind::LongPress if !matches!(self.duration_ms, Some(d) if d > 0) => {
                Err(DeviceError::MalformedGesture("missing or zero duration"))
            }
            ActionKind::Text if self.text.is_none() => Err(DeviceError::MalformedGesture("text without string")),
            _ => Ok(()),
        }
    }

    /// Rejects any point outside `[0, w) x [0, h)`.
    pub fn check_bounds(&self, w: u32, h: u32) -> Result<(), DeviceError> {
        for p in std::iter::once(self.start).chain(self.end) {
            if p.x >= w || p.y >= h {
                return Err(DeviceError::OutOfBounds { x: p.x, y: p.y, width: w, height: h });
            }
        }
        Ok(())
    }
}

/// `input swipe x1 y1 x2 y2 duration`
pub fn render_adb_swipe(g: &GestureCommand) -> Result<String, DeviceError> {
    if g.kind != ActionKind::Swipe {
        return Err(DeviceError::KindMismatch { expected: ActionKind::Swipe, got: g.kind });
    }
    g.check()?;
    let end = g.end.expect("checked");
    let duration = g.duration_ms.expect("checked");
    Ok(format!("input swipe {} {} {} {} {}", g.start.x, g.start.y, end.x, end.y, duration))
}

/// Shell command for any gesture kind. Long presses are zero-length swipes.
pub fn render_adb_command(g: &GestureCommand) -> Result<String, DeviceError> {
    g.check()?;
    match g.kind {
        ActionKind::Swipe => render_adb_swipe(g),
        ActionKind::Tap => Ok(format!("input tap {} {}", g.start.x, g.start.y)),
        ActionKind::LongPress => Ok(format!(
            "input swipe {x} {y} {x} {y} {}",
            g.duration_ms.expect("checked"),
            x = g.start.x,
            y = g.start.y
        )),
        ActionKind::Text => Ok(format!("input text {}", escape_input_text(g.text.as_deref().unwrap_or("")))),
    }
}

/// `input text` treats spaces as separators; `%s` is its space escape. Shell
/// metacharacters are backslash-escaped.
fn escape_input_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            ' ' => out.push_str("%s"),
            '\\' | '"' | '\'' | '`' | '$' | '&' | '|' | ';' | '<' | '>' | '(' | ')' | '*' | '?' | '~' | '#' => {
                out.push('\\');
                out.push(ch);
            }
            _ => out.push(ch),
        }
    }
    out
}

pub const ADB_BACK_COMMAND: &str = "input keyevent 4";

/// Anything the explorer can drive. One owner per session.
pub trait Device {
    fn info(&mut self) -> Result<DeviceInfo, DeviceError>;

    fn capture_screenshot(&mut self) -> Result<(RgbImage, DeviceInfo), DeviceError>;

    /// Issues the gesture and returns once the screen has settled.
    fn exec_gesture(&mut self, g: &GestureCommand) -> Result<(), DeviceError>;

    fn dump_hierarchy(&mut self) -> Result<String, DeviceError>;

    fn back(&mut self) -> Result<(), DeviceError>;
}

impl<D: Device + ?Sized> Device for Box<D> {
    fn info(&mut self) -> Result<DeviceInfo, DeviceError> {
        (**self).info()
    }
    fn capture_screenshot(&mut self) -> Result<(RgbImage, DeviceInfo), DeviceError> {
        (**self).capture_screenshot()
    }
    fn exec_gesture(&mut self, g: &GestureCommand) -> Result<(), DeviceError> {
        (**self).exec_gesture(g)
    }
    fn dump_hierarchy(&mut self) -> Result<String, DeviceError> {
        (**self).dump_hierarchy()
    }
    fn back(&mut self) -> Result<(), DeviceError> {
        (**self).back()
    }
}
