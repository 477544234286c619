//! Domain types shared by every stage of the pipeline, and the JSONL row
//! format of the swipe dataset.
//!
//! Anything stored (dataset rows, reward inputs) is in the normalized
//! `[0, 1000]` frame. Device-pixel space only appears while generating
//! candidates and while driving a device.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound of the normalized coordinate frame.
pub const NORM_MAX: i32 = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("invalid screen dimension {width}x{height}")]
    InvalidDimension { width: u32, height: u32 },
    #[error("degenerate gesture: start equals end")]
    DegenerateGesture,
}

/// A position in the resolution-independent `[0,1000]²` frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct NormPoint {
    pub x: i32,
    pub y: i32,
}

impl NormPoint {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn in_range(&self) -> bool {
        (0..=NORM_MAX).contains(&self.x) && (0..=NORM_MAX).contains(&self.y)
    }

    /// Squared Euclidean distance, exact in integers.
    pub fn dist_sq(&self, other: &NormPoint) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }
}

impl From<[i32; 2]> for NormPoint {
    fn from(v: [i32; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<NormPoint> for [i32; 2] {
    fn from(p: NormPoint) -> Self {
        [p.x, p.y]
    }
}

/// A position in device pixels.
///
/// Candidate geometry may place an end point exactly on the screen edge
/// (`x == width`); the device adapter rejects such points, so callers go
/// through [`denormalize_point`] before executing anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x: u32,
    pub y: u32,
}

impl PixelPoint {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned box `(x1, y1, x2, y2)`. The coordinate space is whatever the
/// surrounding context uses (pixels or normalized).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 4]", into = "[i32; 4]")]
pub struct BBox {
    pub x1: i32,
    pub y1: i32,
    pub x2: i32,
    pub y2: i32,
}

impl BBox {
    pub const fn new(x1: i32, y1: i32, x2: i32, y2: i32) -> Self {
        Self { x1, y1, x2, y2 }
    }

    /// The full normalized screen.
    pub const FULL_NORM: BBox = BBox::new(0, 0, NORM_MAX, NORM_MAX);

    pub fn width(&self) -> i32 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> i32 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> i64 {
        self.width().max(0) as i64 * self.height().max(0) as i64
    }

    pub fn is_ordered(&self) -> bool {
        self.x1 <= self.x2 && self.y1 <= self.y2 && self.x1 >= 0 && self.y1 >= 0
    }

    /// Inclusive containment on all four edges.
    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.x1 && x <= self.x2 && y >= self.y1 && y <= self.y2
    }

    pub fn contains_norm(&self, p: NormPoint) -> bool {
        self.contains(p.x, p.y)
    }

    pub fn within_norm_frame(&self) -> bool {
        self.is_ordered() && self.x2 <= NORM_MAX && self.y2 <= NORM_MAX
    }
}

impl From<[i32; 4]> for BBox {
    fn from(v: [i32; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [i32; 4] {
    fn from(b: BBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn opposite(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "up" => Some(Direction::Up),
            "down" => Some(Direction::Down),
            "left" => Some(Direction::Left),
            "right" => Some(Direction::Right),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether a swipe adjusts a component (slider, progress bar) or scrolls a
/// layout region (feed, list, carousel).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwipeKind {
    Component,
    Region,
}

impl SwipeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SwipeKind::Component => "component",
            SwipeKind::Region => "region",
        }
    }
}

/// A fully parameterized swipe in normalized coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwipeSpec {
    #[serde(rename = "type")]
    pub kind: SwipeKind,
    pub start: NormPoint,
    pub end: NormPoint,
    pub direction: Direction,
    #[serde(rename = "duration")]
    pub duration_ms: u32,
    pub bbox: BBox,
    #[serde(default)]
    pub intent: String,
}

impl SwipeSpec {
    /// Invariant violations of this spec, in a fixed order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.start.in_range() {
            out.push(Violation::new("start", ViolationRule::CoordinateOutOfRange));
        }
        if !self.end.in_range() {
            out.push(Violation::new("end", ViolationRule::CoordinateOutOfRange));
        }
        if !self.bbox.is_ordered() {
            out.push(Violation::new("bbox", ViolationRule::InvertedBBox));
        } else if !self.bbox.within_norm_frame() {
            out.push(Violation::new("bbox", ViolationRule::CoordinateOutOfRange));
        }
        match direction_of(self.start, self.end) {
            Err(_) => out.push(Violation::new("end", ViolationRule::DegenerateGesture)),
            Ok(d) if d != self.direction => {
                out.push(Violation::new("direction", ViolationRule::DirectionMismatch))
            }
            Ok(_) => {}
        }
        if self.kind == SwipeKind::Region && !self.bbox.contains_norm(self.start) {
            out.push(Violation::new("start", ViolationRule::StartOutsideBBox));
        }
        if self.duration_ms == 0 {
            out.push(Violation::new("duration", ViolationRule::NonpositiveDuration));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordSource {
    Synthesized,
    Manual,
}

/// One dataset row. Serializes to the flat JSONL layout; the swipe fields are
/// inlined beside the provenance fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RecordLine", from = "RecordLine")]
pub struct SwipeRecord {
    pub id: String,
    pub app: String,
    pub screen_before: String,
    pub screen_after: String,
    pub spec: SwipeSpec,
    pub command: String,
    pub reason: String,
    pub source: RecordSource,
    pub created_at: String,
}

impl SwipeRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization is infallible")
    }

    pub fn from_json_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Wire layout of a record: flat, fixed key order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    app: String,
    screen_before: String,
    screen_after: String,
    #[serde(rename = "type")]
    kind: SwipeKind,
    start: NormPoint,
    end: NormPoint,
    direction: Direction,
    duration: u32,
    bbox: BBox,
    #[serde(default)]
    intent: String,
    command: String,
    reason: String,
    source: RecordSource,
    created_at: String,
}

impl From<SwipeRecord> for RecordLine {
    fn from(r: SwipeRecord) -> Self {
        RecordLine {
            id: r.id,
            app: r.app,
            screen_before: r.screen_before,
            screen_after: r.screen_after,
            kind: r.spec.kind,
            start: r.spec.start,
            end: r.spec.end,
            direction: r.spec.direction,
            duration: r.spec.duration_ms,
            bbox: r.spec.bbox,
            intent: r.spec.intent,
            command: r.command,
            reason: r.reason,
            source: r.source,
            created_at: r.created_at,
        }
    }
}

impl From<RecordLine> for SwipeRecord {
    fn from(l: RecordLine) -> Self {
        SwipeRecord {
            id: l.id,
            app: l.app,
            screen_before: l.screen_before,
            screen_after: l.screen_after,
            spec: SwipeSpec {
                kind: l.kind,
                start: l.start,
                end: l.end,
                direction: l.direction,
                duration_ms: l.duration,
                bbox: l.bbox,
                intent: l.intent,
            },
            command: l.command,
            reason: l.reason,
            source: l.source,
            created_at: l.created_at,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Tap,
    Swipe,
    LongPress,
    Text,
}

impl ActionKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tap" => Some(ActionKind::Tap),
            "swipe" => Some(ActionKind::Swipe),
            "long_press" => Some(ActionKind::LongPress),
            "text" => Some(ActionKind::Text),
            _ => None,
        }
    }
}

/// A parsed agent action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentPrediction {
    pub action: ActionKind,
    pub start: NormPoint,
    pub end: Option<NormPoint>,
    pub direction: Option<Direction>,
    pub duration_ms: Option<u32>,
    pub text: Option<String>,
}

impl AgentPrediction {
    /// A swipe prediction carrying exactly the parameters of `spec`.
    pub fn from_spec(spec: &SwipeSpec) -> Self {
        AgentPrediction {
            action: ActionKind::Swipe,
            start: spec.start,
            end: Some(spec.end),
            direction: Some(spec.direction),
            duration_ms: Some(spec.duration_ms),
            text: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationRule {
    EmptyId,
    EmptyScreenRef,
    UnresolvedScreenRef,
    DuplicateId,
    CoordinateOutOfRange,
    InvertedBBox,
    DegenerateGesture,
    DirectionMismatch,
    StartOutsideBBox,
    NonpositiveDuration,
}

impl ViolationRule {
    pub fn code(self) -> &'static str {
        match self {
            ViolationRule::EmptyId => "empty-id",
            ViolationRule::EmptyScreenRef => "empty-screen-ref",
            ViolationRule::UnresolvedScreenRef => "unresolved-screen-ref",
            ViolationRule::DuplicateId => "duplicate-id",
            ViolationRule::CoordinateOutOfRange => "coordinate-out-of-range",
            ViolationRule::InvertedBBox => "inverted-bbox",
            ViolationRule::DegenerateGesture => "degenerate-gesture",
            ViolationRule::DirectionMismatch => "direction-mismatch",
            ViolationRule::StartOutsideBBox => "start-outside-bbox",
            ViolationRule::NonpositiveDuration => "nonpositive-duration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: ViolationRule,
}

impl Violation {
    pub fn new(field: &str, rule: ViolationRule) -> Self {
        Self { field: field.to_string(), rule }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule.code())
    }
}

/// Checks every per-record invariant. File resolvability and id uniqueness
/// need the surrounding dataset; see [`crate::dataset::validate_dataset`].
pub fn validate_record(r: &SwipeRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if r.id.trim().is_empty() {
        out.push(Violation::new("id", ViolationRule::EmptyId));
    }
    if r.screen_before.trim().is_empty() {
        out.push(Violation::new("screen_before", ViolationRule::EmptyScreenRef));
    }
    if r.screen_after.trim().is_empty() {
        out.push(Violation::new("screen_after", ViolationRule::EmptyScreenRef));
    }
    out.extend(r.spec.violations());
    out
}

fn check_dims(w: u32, h: u32) -> Result<(), GeometryError> {
    if w == 0 || h == 0 {
        Err(GeometryError::InvalidDimension { width: w, height: h })
    } else {
        Ok(())
    }
}

/// `round(num / den)` with halves away from zero, for `num >= 0`, `den > 0`.
pub(crate) fn div_round(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// Rescales a pixel position to the `[0,1000]` frame.
pub fn normalize_point(p: PixelPoint, w: u32, h: u32) -> Result<NormPoint, GeometryError> {
    check_dims(w, h)?;
    let x = div_round(p.x as u64 * NORM_MAX as u64, w as u64).min(NORM_MAX as u64);
    let y = div_round(p.y as u64 * NORM_MAX as u64, h as u64).min(NORM_MAX as u64);
    Ok(NormPoint::new(x as i32, y as i32))
}

/// Maps a normalized position back onto an addressable device pixel.
pub fn denormalize_point(p: NormPoint, w: u32, h: u32) -> Result<PixelPoint, GeometryError> {
    check_dims(w, h)?;
    let axis = |v: i32, size: u32| -> u32 {
        let v = v.clamp(0, NORM_MAX) as u64;
        (div_round(v * size as u64, NORM_MAX as u64) as u32).min(size - 1)
    };
    Ok(PixelPoint::new(axis(p.x, w), axis(p.y, h)))
}

/// Normalizes a pixel box corner by corner. Edges map to edges: a box
/// reaching `x2 == w` normalizes to `1000`.
pub fn normalize_bbox(b: BBox, w: u32, h: u32) -> Result<BBox, GeometryError> {
    check_dims(w, h)?;
    let ax = |v: i32, size: u32| -> i32 {
        div_round(v.max(0) as u64 * NORM_MAX as u64, size as u64).min(NORM_MAX as u64) as i32
    };
    Ok(BBox::new(ax(b.x1, w), ax(b.y1, h), ax(b.x2, w), ax(b.y2, h)))
}

/// Inverse of [`normalize_bbox`]; edges land on `[0, w] x [0, h]`.
pub fn denormalize_bbox(b: BBox, w: u32, h: u32) -> Result<BBox, GeometryError> {
    check_dims(w, h)?;
    let ax = |v: i32, size: u32| -> i32 {
        div_round(v.clamp(0, NORM_MAX) as u64 * size as u64, NORM_MAX as u64) as i32
    };
    Ok(BBox::new(ax(b.x1, w), ax(b.y1, h), ax(b.x2, w), ax(b.y2, h)))
}

/// Dominant-axis direction of the motion `start -> end`. Diagonal ties go to
/// the horizontal axis.
pub fn direction_of(start: NormPoint, end: NormPoint) -> Result<Direction, GeometryError> {
    direction_of_delta((end.x - start.x) as i64, (end.y - start.y) as i64)
}

pub(crate) fn direction_of_delta(dx: i64, dy: i64) -> Result<Direction, GeometryError> {
    if dx == 0 && dy == 0 {
        return Err(GeometryError::DegenerateGesture);
    }
    Ok(if dx.abs() >= dy.abs() {
        if dx > 0 {
            Direction::Right
        } else {
            Direction::Left
        }
    } else if dy > 0 {
        Direction::Down
    } else {
        Direction::Up
    })
}
