//! Scoring agent responses against recorded swipes.
//!
//! Sub-rewards are tracked as integer hundredths so that sums are exact and
//! `r_acc == 1.0` is a reliable success test.

mod eval;
mod format;
mod report;

use serde::{Deserialize, Serialize};

use crate::model::{direction_of, ActionKind, AgentPrediction, BBox, SwipeKind, SwipeSpec};

pub use eval::{evaluate, AppStats, EvalReport, FailureMode, PredictionLine, RecordEval};
pub use format::{parse_response, render_response, FormatResult, FormatViolation};
pub use report::{render_html, render_markdown};

/// Start and end tolerance in normalized units.
pub const DISTANCE_TOLERANCE: i64 = 220;
/// Durations up to this many milliseconds are fast.
pub const DURATION_MIDPOINT_MS: u32 = 325;

pub const START_HUNDREDTHS: u32 = 45;
pub const END_HUNDREDTHS: u32 = 10;
pub const DIRECTION_HUNDREDTHS: u32 = 35;
pub const DURATION_HUNDREDTHS: u32 = 10;

const FORMAT_HUNDREDTHS: i32 = 100;
const TYPE_HUNDREDTHS: i32 = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DurationCategory {
    Fast,
    Slow,
}

pub fn duration_category(ms: u32) -> DurationCategory {
    if ms <= DURATION_MIDPOINT_MS {
        DurationCategory::Fast
    } else {
        DurationCategory::Slow
    }
}

/// A recorded swipe together with its start-constraint box: the target box
/// for regions, the full frame for components.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldSwipe {
    pub spec: SwipeSpec,
    pub b: BBox,
}

impl GoldSwipe {
    pub fn new(spec: SwipeSpec) -> Self {
        let b = match spec.kind {
            SwipeKind::Region => spec.bbox,
            SwipeKind::Component => BBox::FULL_NORM,
        };
        Self { spec, b }
    }
}

/// Which of the four accuracy criteria a prediction meets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AccuracyHits {
    pub start_in_region: bool,
    pub start_near: bool,
    pub end_near: bool,
    pub direction: bool,
    pub duration: bool,
}

impl AccuracyHits {
    pub fn start(&self) -> bool {
        self.start_in_region && self.start_near
    }

    pub fn hundredths(&self) -> u32 {
        START_HUNDREDTHS * self.start() as u32
            + END_HUNDREDTHS * self.end_near as u32
            + DIRECTION_HUNDREDTHS * self.direction as u32
            + DURATION_HUNDREDTHS * self.duration as u32
    }

    pub fn all(&self) -> bool {
        self.start() && self.end_near && self.direction && self.duration
    }
}

/// Evaluates the four accuracy criteria of a swipe prediction.
pub fn accuracy_hits(pred: &AgentPrediction, gold: &GoldSwipe) -> AccuracyHits {
    let tol = DISTANCE_TOLERANCE * DISTANCE_TOLERANCE;
    let g = &gold.spec;
    let direction = pred
        .direction
        .or_else(|| pred.end.and_then(|e| direction_of(pred.start, e).ok()))
        .is_some_and(|d| d == g.direction);
    let duration = match g.kind {
        SwipeKind::Component => true,
        SwipeKind::Region => pred
            .duration_ms
            .is_some_and(|d| duration_category(d) == duration_category(g.duration_ms)),
    };
    AccuracyHits {
        start_in_region: gold.b.contains_norm(pred.start),
        start_near: pred.start.dist_sq(&g.start) <= tol,
        end_near: pred.end.is_some_and(|e| e.dist_sq(&g.end) <= tol),
        direction,
        duration,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_start: f64,
    pub r_end: f64,
    pub r_dir: f64,
    pub r_dur: f64,
    pub r_acc: f64,
    pub r_format: f64,
    pub r_type: f64,
    pub total_norm: f64,
}

fn hundredths(v: u32) -> f64 {
    v as f64 / 100.0
}

/// Accuracy part of the breakdown; format, type and total are left neutral.
pub fn accuracy_reward(pred: &AgentPrediction, gold: &GoldSwipe) -> RewardBreakdown {
    breakdown(true, true, accuracy_hits(pred, gold))
}

pub fn format_reward(f: &FormatResult) -> f64 {
    if f.valid {
        1.0
    } else {
        -1.0
    }
}

pub fn type_reward(pred: Option<ActionKind>, gold: ActionKind) -> f64 {
    if pred == Some(gold) {
        0.8
    } else {
        -0.8
    }
}

/// Linear map of `format + type + acc` from `[-1.8, 2.8]` onto `[-1, 1]`.
pub fn total_reward(r_format: f64, r_type: f64, r_acc: f64) -> f64 {
    2.0 * (r_format + r_type + r_acc + 1.8) / 4.6 - 1.0
}

fn breakdown(format_ok: bool, type_ok: bool, hits: AccuracyHits) -> RewardBreakdown {
    let f = if format_ok { FORMAT_HUNDREDTHS } else { -FORMAT_HUNDREDTHS };
    let t = if type_ok { TYPE_HUNDREDTHS } else { -TYPE_HUNDREDTHS };
    let acc = hits.hundredths();
    // integer form of total_reward, exact at both ends
    let raw = f + t + acc as i32;
    RewardBreakdown {
        r_start: hundredths(START_HUNDREDTHS * hits.start() as u32),
        r_end: hundredths(END_HUNDREDTHS * hits.end_near as u32),
        r_dir: hundredths(DIRECTION_HUNDREDTHS * hits.direction as u32),
        r_dur: hundredths(DURATION_HUNDREDTHS * hits.duration as u32),
        r_acc: hundredths(acc),
        r_format: f as f64 / 100.0,
        r_type: t as f64 / 100.0,
        total_norm: (2 * (raw + 180)) as f64 / 460.0 - 1.0,
    }
}

/// Full reward for one raw response against one recorded swipe.
pub fn score_response(raw: &str, gold: &GoldSwipe) -> (FormatResult, AccuracyHits, RewardBreakdown) {
    let f = parse_response(raw);
    let (type_ok, hits) = match &f.prediction {
        Some(p) if p.action == ActionKind::Swipe => (true, accuracy_hits(p, gold)),
        _ => (false, AccuracyHits::default()),
    };
    let b = breakdown(f.valid, type_ok, hits);
    (f, hits, b)
}
