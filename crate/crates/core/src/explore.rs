//! Random GUI exploration with swipe synthesis on every visited screen.
//!
//! Each step detects targets on the current screen, runs candidate swipes
//! until one visibly changes the target, records it, and then taps a random
//! clickable element that has not been tapped before. When a screen has no
//! untapped elements left the explorer navigates back; it stops at the root.

use std::collections::{HashMap, HashSet};

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ClickOutcome, ClickRecord, DatasetError, Sink};
use crate::device::{Device, DeviceError, GestureCommand};
use crate::diff::{
    changed_ratio, is_effective, match_visited, screen_hash, to_gray, DiffConfig, DiffError, ScreenHash,
    DEFAULT_HAMMING_MAX,
};
use crate::model::{
    denormalize_bbox, denormalize_point, normalize_point, BBox, NormPoint, PixelPoint, RecordSource, SwipeKind,
    SwipeRecord, SwipeSpec,
};
use crate::perception::{
    describe_swipe, detect_components, detect_regions, parse_hierarchy, ClickableElement, Gateway, GatewayError,
    PerceptionError, ScrollableTarget,
};
use crate::synth::{candidate_order, component_candidates, region_candidates, SwipeCandidate, SwipeRng};

pub const DEFAULT_MAX_STEPS: u32 = 20;
pub const DEFAULT_TARGET_CAP: usize = 8;

/// Salt separating the click-selection stream from candidate sampling.
const CLICK_STREAM: u64 = 0x636c_6963_6b73;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorMode {
    /// Region prompt to the vision model plus the element parser.
    Vision,
    /// Scrollable nodes of the hierarchy dump.
    Hierarchy,
    Both,
}

impl DetectorMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vision" => Some(DetectorMode::Vision),
            "hierarchy" => Some(DetectorMode::Hierarchy),
            "both" => Some(DetectorMode::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreConfig {
    pub max_steps: u32,
    pub per_screen_target_cap: usize,
    pub diff: DiffConfig,
    pub hamming_max: u32,
    pub seed: u64,
    pub detectors: DetectorMode,
    pub describe: bool,
    /// Post-gesture wait applied by the device backend.
    pub settle_ms: u64,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            per_screen_target_cap: DEFAULT_TARGET_CAP,
            diff: DiffConfig::default(),
            hamming_max: DEFAULT_HAMMING_MAX,
            seed: 0,
            detectors: DetectorMode::Hierarchy,
            describe: false,
            settle_ms: crate::device::DEFAULT_SETTLE_MS,
        }
    }
}

impl ExploreConfig {
    pub fn validate(&self) -> Result<(), ExploreError> {
        if self.max_steps == 0 {
            return Err(ExploreError::Config("max_steps must be positive".into()));
        }
        if self.per_screen_target_cap == 0 {
            return Err(ExploreError::Config("per_screen_target_cap must be positive".into()));
        }
        self.diff.validate().map_err(|e| ExploreError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreStats {
    pub steps: u32,
    pub screens_visited: u32,
    pub clicks_executed: u32,
    pub candidates_executed: u32,
    pub swipes_retained: u32,
    pub vlm_calls: u32,
    pub errors: u32,
    /// Service calls that never reached the vision model or parser.
    #[serde(default)]
    pub transport_errors: u32,
    /// Set when the device failed and the run ended early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub device_error: Option<String>,
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("invalid explore config: {0}")]
    Config(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Sink(#[from] DatasetError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// Timestamp source for records.
pub trait Clock {
    fn now(&mut self) -> String;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&mut self) -> String {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
    }
}

/// Always returns the same instant.
pub struct FixedClock(pub String);

impl Default for FixedClock {
    fn default() -> Self {
        Self("2000-01-01T00:00:00.000Z".into())
    }
}

impl Clock for FixedClock {
    fn now(&mut self) -> String {
        self.0.clone()
    }
}

/// Record id source.
pub trait IdGen {
    fn next_id(&mut self) -> String;
}

pub struct UuidIds;

impl IdGen for UuidIds {
    fn next_id(&mut self) -> String {
        uuid::Uuid::new_v4().to_string()
    }
}

/// `<prefix>-000001`, `<prefix>-000002`, ...
pub struct SequentialIds {
    prefix: String,
    n: u64,
}

impl SequentialIds {
    pub fn new(prefix: impl Into<String>) -> Self {
        Self { prefix: prefix.into(), n: 0 }
    }
}

impl IdGen for SequentialIds {
    fn next_id(&mut self) -> String {
        self.n += 1;
        format!("{}-{:06}", self.prefix, self.n)
    }
}

/// A swipe that passed verification.
#[derive(Debug, Clone)]
pub struct ValidatedSwipe {
    pub before: RgbImage,
    pub after: RgbImage,
    pub spec: SwipeSpec,
}

/// Clamps a pixel box to the screen.
fn clamp_roi(b: &BBox, w: u32, h: u32) -> BBox {
    let (w, h) = (w as i32, h as i32);
    BBox::new(b.x1.clamp(0, w), b.y1.clamp(0, h), b.x2.clamp(0, w), b.y2.clamp(0, h))
}

/// Runs one candidate and keeps it iff the target area changed perceptibly.
pub fn execute_and_verify<D: Device + ?Sized>(
    device: &mut D,
    cand: &SwipeCandidate,
    diff: &DiffConfig,
) -> Result<Option<ValidatedSwipe>, ExploreError> {
    let (before, info) = device.capture_screenshot()?;
    let g = GestureCommand::from_spec(&cand.spec, info.width, info.height).map_err(DeviceError::from)?;
    device.exec_gesture(&g)?;
    let (after, _) = device.capture_screenshot()?;
    if after.dimensions() != before.dimensions() {
        return Ok(None);
    }
    let roi = clamp_roi(&cand.target_px, info.width, info.height);
    if roi.area() == 0 {
        return Ok(None);
    }
    let effective = is_effective(&to_gray(&before)?, &to_gray(&after)?, &roi, diff)?;
    Ok(effective.then(|| ValidatedSwipe { before, after, spec: cand.spec.clone() }))
}

/// Everything detected on one screen.
#[derive(Debug, Clone, Default)]
pub struct Detection {
    pub targets: Vec<ScrollableTarget>,
    pub clickables: Vec<ClickableElement>,
}

pub struct Explorer<'a, D: Device> {
    device: &'a mut D,
    gateway: Option<Gateway>,
    cfg: ExploreConfig,
    app: String,
    clock: Box<dyn Clock + 'a>,
    ids: Box<dyn IdGen + 'a>,
    cand_rng: SwipeRng,
    click_rng: SwipeRng,
    stats: ExploreStats,
}

impl<'a, D: Device> Explorer<'a, D> {
    pub fn new(device: &'a mut D, cfg: ExploreConfig, app: impl Into<String>) -> Self {
        Self {
            device,
            gateway: None,
            cand_rng: SwipeRng::seed_from(cfg.seed),
            click_rng: SwipeRng::seed_from(cfg.seed ^ CLICK_STREAM),
            cfg,
            app: app.into(),
            clock: Box::new(SystemClock),
            ids: Box::new(UuidIds),
            stats: ExploreStats::default(),
        }
    }

    pub fn with_gateway(mut self, gw: Gateway) -> Self {
        self.gateway = Some(gw);
        self
    }

    pub fn with_clock(mut self, clock: impl Clock + 'a) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn with_ids(mut self, ids: impl IdGen + 'a) -> Self {
        self.ids = Box::new(ids);
        self
    }

    pub fn stats(&self) -> &ExploreStats {
        &self.stats
    }

    /// Runs target detection on the current screen.
    pub fn detect(&mut self, screenshot: &RgbImage) -> Result<Detection, ExploreError> {
        let (w, h) = screenshot.dimensions();
        let mut det = Detection::default();
        let vision = matches!(self.cfg.detectors, DetectorMode::Vision | DetectorMode::Both);
        let hierarchy = matches!(self.cfg.detectors, DetectorMode::Hierarchy | DetectorMode::Both);
        let mut have_parser = false;
        if vision {
            if let Some(gw) = self.gateway.clone() {
                if gw.has_vlm() {
                    self.stats.vlm_calls += 1;
                    match detect_regions(&gw, screenshot) {
                        Ok(t) => det.targets.extend(t),
                        Err(e) => self.service_error("region detection", &e),
                    }
                }
                if gw.has_parser() {
                    have_parser = true;
                    match detect_components(&gw, screenshot) {
                        Ok((t, c)) => {
                            det.targets.extend(t);
                            det.clickables.extend(c);
                        }
                        Err(e) => self.service_error("element parsing", &e),
                    }
                }
            }
        }
        if hierarchy || !have_parser {
            match self.device.dump_hierarchy() {
                Ok(doc) => match parse_hierarchy(&doc, w, h) {
                    Ok(p) => {
                        if hierarchy {
                            det.targets.extend(p.targets);
                        }
                        if hierarchy || !have_parser {
                            det.clickables.extend(p.clickables);
                        }
                    }
                    Err(e) => self.soft_error("hierarchy parsing", &e),
                },
                Err(DeviceError::Unsupported) if !hierarchy => {}
                Err(e @ (DeviceError::Unsupported | DeviceError::DumpFailed(_))) => self.soft_error("hierarchy dump", &e),
                Err(e) => return Err(e.into()),
            }
        }
        // the same box from two detectors is kept once, first source wins
        let mut seen = HashSet::new();
        det.targets.retain(|t| seen.insert(t.bbox));
        let mut seen = HashSet::new();
        det.clickables.retain(|c| seen.insert(c.bbox));
        Ok(det)
    }

    fn service_error(&mut self, what: &str, e: &PerceptionError) {
        if matches!(e, PerceptionError::Gateway(GatewayError::Transport { .. })) {
            self.stats.transport_errors += 1;
        }
        self.soft_error(what, e);
    }

    fn soft_error(&mut self, what: &str, e: &dyn std::fmt::Display) {
        log::warn!("{what} failed: {e}");
        self.stats.errors += 1;
    }

    /// Detected targets in processing order: largest pixel area first, ties
    /// by top-left corner; at most the configured cap.
    fn ordered_targets(&self, targets: &[ScrollableTarget], w: u32, h: u32) -> Vec<(ScrollableTarget, BBox)> {
        let mut out: Vec<_> = targets
            .iter()
            .filter_map(|t| denormalize_bbox(t.bbox, w, h).ok().map(|px| (t.clone(), px)))
            .filter(|(_, px)| px.area() > 0)
            .collect();
        out.sort_by_key(|(_, px)| (std::cmp::Reverse(px.area()), px.y1, px.x1));
        out.truncate(self.cfg.per_screen_target_cap);
        out
    }

    fn candidates(&mut self, t: &ScrollableTarget, px: &BBox, w: u32, h: u32) -> Vec<SwipeCandidate> {
        let made = match t.kind {
            SwipeKind::Component => component_candidates(px, w, h, &mut self.cand_rng),
            SwipeKind::Region => region_candidates(px, w, h, &mut self.cand_rng),
        };
        match made {
            Ok(c) => candidate_order(c),
            Err(e) => {
                log::debug!("no candidates for {:?}: {e}", t.label);
                Vec::new()
            }
        }
    }

    /// Synthesizes swipes for every target on the current screen. Returns
    /// the detection so the caller can pick a click.
    pub fn synthesize_on_screen(&mut self, sink: &mut dyn Sink) -> Result<Detection, ExploreError> {
        let (shot, info) = self.device.capture_screenshot()?;
        let det = self.detect(&shot)?;
        let (w, h) = (info.width, info.height);
        for (target, px) in self.ordered_targets(&det.targets, w, h) {
            for cand in self.candidates(&target, &px, w, h) {
                if !cand.spec.violations().is_empty() {
                    continue;
                }
                self.stats.candidates_executed += 1;
                if let Some(v) = execute_and_verify(&mut *self.device, &cand, &self.cfg.diff)? {
                    self.retain(v, &target, sink)?;
                    break;
                }
            }
        }
        Ok(det)
    }

    fn retain(&mut self, v: ValidatedSwipe, target: &ScrollableTarget, sink: &mut dyn Sink) -> Result<(), ExploreError> {
        let (mut command, mut reason) = (String::new(), String::new());
        if self.cfg.describe {
            match self.gateway.clone().filter(Gateway::has_vlm) {
                Some(gw) => {
                    self.stats.vlm_calls += 1;
                    match describe_swipe(&gw, &v.before, &v.after, &v.spec) {
                        Ok(d) => (command, reason) = (d.command, d.reason),
                        Err(e) => {
                            self.service_error("swipe description", &e);
                            reason = format!("description unavailable: {e}");
                        }
                    }
                }
                None => {
                    self.soft_error("swipe description", &"no vision endpoint configured");
                    reason = "description unavailable: no vision endpoint configured".into();
                }
            }
        }
        let id = self.ids.next_id();
        let screen_before = sink.save_screen(&format!("{id}_before"), &v.before)?;
        let screen_after = sink.save_screen(&format!("{id}_after"), &v.after)?;
        let mut spec = v.spec;
        spec.intent = target.label.clone();
        let rec = SwipeRecord {
            id,
            app: self.app.clone(),
            screen_before,
            screen_after,
            spec,
            command,
            reason,
            source: RecordSource::Synthesized,
            created_at: self.clock.now(),
        };
        sink.append_swipe(&rec)?;
        self.stats.swipes_retained += 1;
        Ok(())
    }

    /// Runs the exploration loop. Device failures end the run and are
    /// reported in the returned stats; sink failures are errors.
    pub fn explore(&mut self, sink: &mut dyn Sink) -> Result<ExploreStats, ExploreError> {
        self.cfg.validate()?;
        match self.explore_inner(sink) {
            Ok(()) => {}
            Err(ExploreError::Device(e)) => {
                log::error!("device failure, stopping: {e}");
                self.stats.errors += 1;
                self.stats.device_error = Some(e.to_string());
            }
            Err(ExploreError::Diff(DiffError::Shape { .. })) => {
                self.stats.errors += 1;
                self.stats.device_error = Some("screen dimensions changed mid-run".into());
            }
            Err(e) => return Err(e),
        }
        Ok(self.stats.clone())
    }

    fn explore_inner(&mut self, sink: &mut dyn Sink) -> Result<(), ExploreError> {
        let mut visited: HashSet<ScreenHash> = HashSet::new();
        let mut screen_of: HashMap<ScreenHash, String> = HashMap::new();
        let mut clicked: HashSet<(String, NormPoint)> = HashSet::new();

        let (first, _) = self.device.capture_screenshot()?;
        let h0 = screen_hash(&to_gray(&first)?);
        let root = h0.to_string();
        visited.insert(h0);
        screen_of.insert(h0, root.clone());
        let mut nav = vec![root];
        self.stats.screens_visited = 1;

        while self.stats.steps < self.cfg.max_steps {
            self.stats.steps += 1;
            let det = self.synthesize_on_screen(sink)?;
            let current = nav.last().cloned().expect("navigation stack is never empty");

            let (before, info) = self.device.capture_screenshot()?;
            let (w, h) = (info.width, info.height);
            // the screen may look different after swipes; remember it too
            let hb = screen_hash(&to_gray(&before)?);
            if visited.insert(hb) {
                screen_of.insert(hb, current.clone());
            }

            let mut open: Vec<(ClickableElement, NormPoint, PixelPoint)> = Vec::new();
            for c in det.clickables {
                let Ok(px) = denormalize_bbox(c.bbox, w, h) else { continue };
                let center = PixelPoint::new(((px.x1 + px.x2) / 2).max(0) as u32, ((px.y1 + px.y2) / 2).max(0) as u32);
                let center = PixelPoint::new(center.x.min(w - 1), center.y.min(h - 1));
                let key = normalize_point(center, w, h).map_err(DeviceError::from)?;
                if !clicked.contains(&(current.clone(), key)) {
                    open.push((c, key, center));
                }
            }
            if open.is_empty() {
                if nav.len() > 1 {
                    self.device.back()?;
                    nav.pop();
                    continue;
                }
                break;
            }

            let (el, key, center) = open.swap_remove(self.click_rng.pick(open.len()));
            clicked.insert((current.clone(), key));
            let id = self.ids.next_id();
            let screen_before = sink.save_screen(&format!("{id}_click"), &before)?;
            // tap exactly where the record says
            let tap_at = denormalize_point(key, w, h).map_err(DeviceError::from).unwrap_or(center);
            self.device.exec_gesture(&GestureCommand::tap(tap_at))?;
            self.stats.clicks_executed += 1;

            let (after, _) = self.device.capture_screenshot()?;
            let gb = to_gray(&before)?;
            let ga = to_gray(&after)?;
            let outcome = if after.dimensions() != before.dimensions()
                || changed_ratio(&gb, &ga, &ga.full_roi(), self.cfg.diff.delta)? >= self.cfg.diff.tau_screen
            {
                let ha = screen_hash(&ga);
                match match_visited(ha, &visited, self.cfg.hamming_max) {
                    Some(known) => {
                        let k = screen_of[&known].clone();
                        if nav.last() != Some(&k) {
                            nav.push(k);
                        }
                        ClickOutcome::Revisited
                    }
                    None => {
                        let k = ha.to_string();
                        visited.insert(ha);
                        screen_of.insert(ha, k.clone());
                        nav.push(k);
                        self.stats.screens_visited += 1;
                        ClickOutcome::NewScreen
                    }
                }
            } else {
                ClickOutcome::NoChange
            };
            sink.append_click(&ClickRecord {
                id,
                app: self.app.clone(),
                screen: current,
                screen_before,
                point: key,
                bbox: el.bbox,
                label: el.label,
                outcome,
                created_at: self.clock.now(),
            })?;
        }
        Ok(())
    }
}
