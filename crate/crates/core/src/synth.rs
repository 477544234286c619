//! Candidate swipe generation for scrollable components and regions.
//!
//! Geometry runs in device pixels. Every candidate also carries the
//! normalized [`SwipeSpec`] that will be executed and stored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_bbox, normalize_point, BBox, Direction, GeometryError, PixelPoint, SwipeKind, SwipeSpec};

/// Fixed duration of component swipes, in milliseconds.
pub const COMPONENT_DURATION_MS: u32 = 300;
/// Fast region swipe duration.
pub const FAST_DURATION_MS: u32 = 150;
/// Slow region swipe duration.
pub const SLOW_DURATION_MS: u32 = 500;
/// Region offset ratio is drawn from `[REGION_ALPHA_MIN, REGION_ALPHA_MAX)`.
pub const REGION_ALPHA_MIN: f64 = 0.2;
pub const REGION_ALPHA_MAX: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("degenerate target {0:?}")]
    DegenerateTarget(BBox),
    #[error("target {bbox:?} is not inside the {width}x{height} screen")]
    TargetOutsideScreen { bbox: BBox, width: u32, height: u32 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    Vertical,
}

impl Axis {
    /// The two directions along this axis, negative first.
    pub fn directions(self) -> [Direction; 2] {
        match self {
            Axis::Horizontal => [Direction::Left, Direction::Right],
            Axis::Vertical => [Direction::Up, Direction::Down],
        }
    }
}

/// Vertical iff strictly taller than wide.
pub fn swipe_axis(b: &BBox) -> Axis {
    if b.height() > b.width() {
        Axis::Vertical
    } else {
        Axis::Horizontal
    }
}

/// Deterministic random source for candidate sampling.
#[derive(Debug, Clone)]
pub struct SwipeRng(ChaCha8Rng);

impl SwipeRng {
    pub fn seed_from(seed: u64) -> Self {
        SwipeRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Component scaling factor in `(0, 1]`.
    pub fn component_alpha(&mut self) -> f64 {
        1.0 - self.0.gen::<f64>()
    }

    /// Region offset ratio in `[0.2, 0.5)`.
    pub fn region_alpha(&mut self) -> f64 {
        self.0.gen_range(REGION_ALPHA_MIN..REGION_ALPHA_MAX)
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn pick(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }
}

/// One executable candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwipeCandidate {
    /// Normalized spec; `intent` is empty.
    pub spec: SwipeSpec,
    pub alpha: f64,
    pub axis: Axis,
    /// Start and end as computed in pixels, before normalization.
    pub start_px: PixelPoint,
    pub end_px: PixelPoint,
    /// Target box in pixels; used as the verification area.
    pub target_px: BBox,
}

fn check_target(b: &BBox, w: u32, h: u32) -> Result<(), SynthError> {
    if w == 0 || h == 0 {
        return Err(GeometryError::InvalidDimension { width: w, height: h }.into());
    }
    if !b.is_ordered() || b.x2 > w as i32 || b.y2 > h as i32 {
        return Err(SynthError::TargetOutsideScreen { bbox: *b, width: w, height: h });
    }
    if b.area() == 0 {
        return Err(SynthError::DegenerateTarget(*b));
    }
    Ok(())
}

fn round_half_away(v: f64) -> i64 {
    v.round() as i64
}

#[allow(clippy::too_many_arguments)]
fn build(
    kind: SwipeKind,
    target: BBox,
    start: (i64, i64),
    end: (i64, i64),
    direction: Direction,
    duration_ms: u32,
    alpha: f64,
    axis: Axis,
    w: u32,
    h: u32,
) -> Result<SwipeCandidate, SynthError> {
    let start_px = PixelPoint::new(start.0 as u32, start.1 as u32);
    let end_px = PixelPoint::new(end.0 as u32, end.1 as u32);
    let bbox = match kind {
        SwipeKind::Component => BBox::FULL_NORM,
        SwipeKind::Region => normalize_bbox(target, w, h)?,
    };
    Ok(SwipeCandidate {
        spec: SwipeSpec {
            kind,
            start: normalize_point(start_px, w, h)?,
            end: normalize_point(end_px, w, h)?,
            direction,
            duration_ms,
            bbox,
            intent: String::new(),
        },
        alpha,
        axis,
        start_px,
        end_px,
        target_px: target,
    })
}

/// A single component candidate for an explicit `alpha` and direction.
///
/// The travel distance is `round(alpha * W)` (or `H`), at least one pixel,
/// and the end point is clamped to `[0, W] x [0, H]`.
pub fn component_candidate_with_alpha(
    b: &BBox,
    w: u32,
    h: u32,
    direction: Direction,
    alpha: f64,
) -> Result<SwipeCandidate, SynthError> {
    check_target(b, w, h)?;
    let axis = swipe_axis(b);
    let sx = ((b.x1 + b.x2) / 2) as i64;
    let sy = ((b.y1 + b.y2) / 2) as i64;
    let extent = match axis {
        Axis::Horizontal => w,
        Axis::Vertical => h,
    } as f64;
    let d = round_half_away(alpha * extent).max(1);
    let (w, h) = (w as i64, h as i64);
    let end = match direction {
        Direction::Right => ((sx + d).min(w), sy),
        Direction::Left => ((sx - d).max(0), sy),
        Direction::Down => (sx, (sy + d).min(h)),
        Direction::Up => (sx, (sy - d).max(0)),
    };
    build(
        SwipeKind::Component,
        *b,
        (sx, sy),
        end,
        direction,
        COMPONENT_DURATION_MS,
        alpha,
        axis,
        w as u32,
        h as u32,
    )
}

/// Two candidates sharing the box center, one per direction of the box's
/// axis. `alpha` is drawn independently for each; a draw that rounds to a zero
/// distance is redrawn once.
pub fn component_candidates(
    b: &BBox,
    w: u32,
    h: u32,
    rng: &mut SwipeRng,
) -> Result<Vec<SwipeCandidate>, SynthError> {
    check_target(b, w, h)?;
    let extent = match swipe_axis(b) {
        Axis::Horizontal => w,
        Axis::Vertical => h,
    } as f64;
    swipe_axis(b)
        .directions()
        .into_iter()
        .map(|dir| {
            let mut alpha = rng.component_alpha();
            if round_half_away(alpha * extent) == 0 {
                alpha = rng.component_alpha();
            }
            component_candidate_with_alpha(b, w, h, dir, alpha)
        })
        .collect()
}

/// The four region candidates for one offset ratio.
///
/// Start points sit at `c ± floor(alpha * extent)` along the dominant axis,
/// kept strictly inside the box. Each swipes back across the center onto the
/// opposite boundary. Output order: high-offset start first, fast before slow.
pub fn region_candidates_with_alpha(
    b: &BBox,
    w: u32,
    h: u32,
    alpha: f64,
) -> Result<Vec<SwipeCandidate>, SynthError> {
    check_target(b, w, h)?;
    let axis = swipe_axis(b);
    let (lo, hi) = match axis {
        Axis::Horizontal => (b.x1 as i64, b.x2 as i64),
        Axis::Vertical => (b.y1 as i64, b.y2 as i64),
    };
    if hi - lo < 2 {
        return Err(SynthError::DegenerateTarget(*b));
    }
    let center = (lo + hi) / 2;
    let offset = (alpha * (hi - lo) as f64).floor() as i64;
    let inside = |v: i64| v.clamp(lo + 1, hi - 1);
    // (start along axis, direction, end along axis)
    let legs = match axis {
        Axis::Horizontal => [
            (inside(center + offset), Direction::Left, lo),
            (inside(center - offset), Direction::Right, hi),
        ],
        Axis::Vertical => [
            (inside(center + offset), Direction::Up, lo),
            (inside(center - offset), Direction::Down, hi),
        ],
    };
    let cross = match axis {
        Axis::Horizontal => ((b.y1 + b.y2) / 2) as i64,
        Axis::Vertical => ((b.x1 + b.x2) / 2) as i64,
    };
    let mut out = Vec::with_capacity(4);
    for (start, dir, end) in legs {
        for duration in [FAST_DURATION_MS, SLOW_DURATION_MS] {
            let (s, e) = match axis {
                Axis::Horizontal => ((start, cross), (end, cross)),
                Axis::Vertical => ((cross, start), (cross, end)),
            };
            out.push(build(SwipeKind::Region, *b, s, e, dir, duration, alpha, axis, w, h)?);
        }
    }
    Ok(out)
}

/// Four candidates for a region: one shared `alpha` draw per call.
pub fn region_candidates(
    b: &BBox,
    w: u32,
    h: u32,
    rng: &mut SwipeRng,
) -> Result<Vec<SwipeCandidate>, SynthError> {
    check_target(b, w, h)?;
    let alpha = rng.region_alpha();
    region_candidates_with_alpha(b, w, h, alpha)
}

/// Pinned execution order. Candidates stay grouped by target (first
/// appearance); within a target, axis-negative directions (up, left) come
/// first, then shorter durations.
pub fn candidate_order(mut cands: Vec<SwipeCandidate>) -> Vec<SwipeCandidate> {
    let mut targets: Vec<BBox> = Vec::new();
    for c in &cands {
        if !targets.contains(&c.target_px) {
            targets.push(c.target_px);
        }
    }
    let dir_rank = |d: Direction| match d {
        Direction::Up | Direction::Left => 0,
        Direction::Down | Direction::Right => 1,
    };
    cands.sort_by_key(|c| {
        let group = targets.iter().position(|t| *t == c.target_px).unwrap_or(usize::MAX);
        (group, dir_rank(c.spec.direction), c.spec.duration_ms)
    });
    cands
}
