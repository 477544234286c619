//! Deterministic simulated mobile GUI.
//!
//! Screens hold lists, carousels, sliders and buttons. Scrolling uses a
//! two-class inertia model so that fast and slow swipes with identical
//! endpoints land in different states. Lists render as solid bands whose
//! intensity depends on the item index, which keeps pixel-diff ratios easy to
//! predict.

mod device;
mod scene;
mod services;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::GestureCommand;
use crate::model::{ActionKind, BBox};

pub use device::{JournalEntry, SimDevice, SimHandle};
pub use scene::{builtin_scene, load_scene, SceneFile, BUILTIN_SCENES};
pub use services::{SimServices, SIM_PARSER_URL, SIM_VLM_URL};

/// Thumb extent of a slider along its track, in pixels.
pub const SLIDER_THUMB_PX: i32 = 40;

const LIST_EMPTY_LEVEL: f32 = 0.98;
const SLIDER_TRACK_LEVEL: f32 = 0.75;
const SLIDER_THUMB_LEVEL: f32 = 0.15;
const BUTTON_LEVEL: f32 = 0.3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("gesture point ({x},{y}) outside {width}x{height} screen")]
    OutOfBounds { x: u32, y: u32, width: u32, height: u32 },
    #[error("non-positive swipe duration")]
    NonpositiveDuration,
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("scene io: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene parse: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Velocity-dependent scroll gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InertiaModel {
    pub k_fast: f64,
    pub k_slow: f64,
    /// px/ms
    pub v_threshold: f64,
}

impl Default for InertiaModel {
    fn default() -> Self {
        Self { k_fast: 2.5, k_slow: 1.0, v_threshold: 1.2 }
    }
}

/// Content displacement produced by a swipe travelling `distance_px` in
/// `duration_ms`.
pub fn scroll_displacement(distance_px: f64, duration_ms: f64, m: &InertiaModel) -> Result<f64, SimError> {
    if duration_ms <= 0.0 {
        return Err(SimError::NonpositiveDuration);
    }
    let velocity = distance_px / duration_ms;
    let gain = if velocity >= m.v_threshold { m.k_fast } else { m.k_slow };
    Ok(distance_px * gain)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WidgetKind {
    VerticalList {
        items: u32,
        item_height: u32,
        #[serde(default)]
        offset_px: i64,
    },
    HorizontalCarousel {
        items: u32,
        item_width: u32,
        #[serde(default)]
        offset_px: i64,
    },
    Slider {
        #[serde(default)]
        value: f64,
    },
    Button {
        target: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimWidget {
    pub id: String,
    #[serde(default)]
    pub label: String,
    /// Pixels, half-open on the far edges.
    pub bbox: BBox,
    #[serde(flatten)]
    pub kind: WidgetKind,
}

impl SimWidget {
    pub fn is_scrollable(&self) -> bool {
        !matches!(self.kind, WidgetKind::Button { .. })
    }

    fn hit(&self, x: u32, y: u32) -> bool {
        let (x, y) = (x as i32, y as i32);
        x >= self.bbox.x1 && x < self.bbox.x2 && y >= self.bbox.y1 && y < self.bbox.y2
    }

    /// Largest valid scroll offset for lists and carousels.
    pub fn max_offset(&self) -> i64 {
        match self.kind {
            WidgetKind::VerticalList { items, item_height, .. } => {
                (items as i64 * item_height as i64 - self.bbox.height() as i64).max(0)
            }
            WidgetKind::HorizontalCarousel { items, item_width, .. } => {
                (items as i64 * item_width as i64 - self.bbox.width() as i64).max(0)
            }
            _ => 0,
        }
    }

    pub fn offset(&self) -> Option<i64> {
        match self.kind {
            WidgetKind::VerticalList { offset_px, .. } | WidgetKind::HorizontalCarousel { offset_px, .. } => {
                Some(offset_px)
            }
            _ => None,
        }
    }

    fn android_class(&self) -> &'static str {
        match self.kind {
            WidgetKind::VerticalList { .. } => "androidx.recyclerview.widget.RecyclerView",
            WidgetKind::HorizontalCarousel { .. } => "androidx.viewpager.widget.ViewPager",
            WidgetKind::Slider { .. } => "android.widget.SeekBar",
            WidgetKind::Button { .. } => "android.widget.Button",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScreen {
    pub id: String,
    #[serde(default = "default_background")]
    pub background: f32,
    #[serde(default)]
    pub widgets: Vec<SimWidget>,
}

fn default_background() -> f32 {
    0.96
}

/// A simulated app: screens, navigation state, and the inertia model.
#[derive(Debug, Clone, PartialEq)]
pub struct SimApp {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub inertia: InertiaModel,
    screens: BTreeMap<String, SimScreen>,
    current: String,
    back_stack: Vec<String>,
    rotation: u8,
}

fn fnv1a(bytes: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Intensity of list item `item`, one of 17 levels in `[0.1, 0.9]`.
/// Consecutive items are always 7 levels apart (mod 17), never equal.
pub fn band_level(salt: u64, item: u64) -> f32 {
    let step = (item.wrapping_mul(7).wrapping_add(salt)) % 17;
    0.1 + 0.05 * step as f32
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(ch),
        }
    }
    out
}

impl SimApp {
    pub fn new(
        name: impl Into<String>,
        width: u32,
        height: u32,
        seed: u64,
        screens: Vec<SimScreen>,
        start: impl Into<String>,
    ) -> Result<Self, SimError> {
        let start = start.into();
        if width == 0 || height == 0 {
            return Err(SimError::InvalidScene("zero screen dimension".into()));
        }
        let mut map = BTreeMap::new();
        for s in screens {
            if map.contains_key(&s.id) {
                return Err(SimError::InvalidScene(format!("duplicate screen {}", s.id)));
            }
            map.insert(s.id.clone(), s);
        }
        for s in map.values() {
            for w in &s.widgets {
                let b = w.bbox;
                if !b.is_ordered() || b.x2 > width as i32 || b.y2 > height as i32 || b.area() == 0 {
                    return Err(SimError::InvalidScene(format!("widget {} bbox {:?}", w.id, b)));
                }
                match &w.kind {
                    WidgetKind::Button { target } if !map.contains_key(target) => {
                        return Err(SimError::InvalidScene(format!("button {} targets unknown {target}", w.id)));
                    }
                    WidgetKind::Slider { value } if !(0.0..=1.0).contains(value) => {
                        return Err(SimError::InvalidScene(format!("slider {} value {value}", w.id)));
                    }
                    WidgetKind::VerticalList { item_height: 0, .. }
                    | WidgetKind::HorizontalCarousel { item_width: 0, .. } => {
                        return Err(SimError::InvalidScene(format!("widget {} has zero item size", w.id)));
                    }
                    _ => {}
                }
            }
        }
        if !map.contains_key(&start) {
            return Err(SimError::InvalidScene(format!("start screen {start} missing")));
        }
        let mut app = Self {
            name: name.into(),
            width,
            height,
            seed,
            inertia: InertiaModel::default(),
            screens: map,
            current: start,
            back_stack: Vec::new(),
            rotation: 0,
        };
        for s in app.screens.values_mut() {
            for w in &mut s.widgets {
                let max = w.max_offset();
                if let WidgetKind::VerticalList { offset_px, .. } | WidgetKind::HorizontalCarousel { offset_px, .. } =
                    &mut w.kind
                {
                    *offset_px = (*offset_px).clamp(0, max);
                }
            }
        }
        Ok(app)
    }

    pub fn current(&self) -> &str {
        &self.current
    }

    pub fn screen(&self) -> &SimScreen {
        &self.screens[&self.current]
    }

    pub fn screens(&self) -> impl Iterator<Item = &SimScreen> {
        self.screens.values()
    }

    pub fn screen_by_id(&self, id: &str) -> Option<&SimScreen> {
        self.screens.get(id)
    }

    pub fn widget(&self, id: &str) -> Option<&SimWidget> {
        self.screen().widgets.iter().find(|w| w.id == id)
    }

    pub fn widget_mut(&mut self, id: &str) -> Option<&mut SimWidget> {
        let cur = self.current.clone();
        self.screens.get_mut(&cur)?.widgets.iter_mut().find(|w| w.id == id)
    }

    pub fn back_depth(&self) -> usize {
        self.back_stack.len()
    }

    /// Swaps the screen dimensions, as a device rotation would.
    pub fn rotate(&mut self) {
        std::mem::swap(&mut self.width, &mut self.height);
        self.rotation = (self.rotation + 1) % 4;
    }

    /// Pops the navigation stack. No-op on the root screen.
    pub fn back(&mut self) {
        if let Some(prev) = self.back_stack.pop() {
            self.current = prev;
        }
    }

    fn salt(&self, widget_id: &str) -> u64 {
        fnv1a(widget_id.as_bytes(), self.seed) % 17
    }

    /// Applies one gesture in place.
    pub fn step(&mut self, g: &GestureCommand) -> Result<(), SimError> {
        for p in std::iter::once(g.start).chain(g.end) {
            if p.x >= self.width || p.y >= self.height {
                return Err(SimError::OutOfBounds { x: p.x, y: p.y, width: self.width, height: self.height });
            }
        }
        let inertia = self.inertia;
        let cur = self.current.clone();
        let screen = self.screens.get_mut(&cur).expect("current screen exists");
        let Some(widget) = screen.widgets.iter_mut().rev().find(|w| w.hit(g.start.x, g.start.y)) else {
            return Ok(());
        };
        match (g.kind, &mut widget.kind) {
            (ActionKind::Tap, WidgetKind::Button { target }) => {
                let target = target.clone();
                self.back_stack.push(cur);
                self.current = target;
            }
            (ActionKind::Swipe, _) => {
                let end = g.end.unwrap_or(g.start);
                let duration = g.duration_ms.unwrap_or(0) as f64;
                let max = widget.max_offset();
                let track = widget.bbox;
                match &mut widget.kind {
                    WidgetKind::VerticalList { offset_px, .. } => {
                        let travel = g.start.y as i64 - end.y as i64;
                        *offset_px = scrolled(*offset_px, travel, duration, max, &inertia)?;
                    }
                    WidgetKind::HorizontalCarousel { offset_px, .. } => {
                        let travel = g.start.x as i64 - end.x as i64;
                        *offset_px = scrolled(*offset_px, travel, duration, max, &inertia)?;
                    }
                    WidgetKind::Slider { value } => {
                        let delta = if track.height() > track.width() {
                            (g.start.y as f64 - end.y as f64) / track.height() as f64
                        } else {
                            (end.x as f64 - g.start.x as f64) / track.width() as f64
                        };
                        *value = (*value + delta).clamp(0.0, 1.0);
                    }
                    WidgetKind::Button { .. } => {}
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn render(&self) -> RgbImage {
        let (w, h) = (self.width, self.height);
        let screen = self.screen();
        let mut img = RgbImage::from_pixel(w, h, Rgb([to_u8(screen.background); 3]));
        for widget in &screen.widgets {
            let b = widget.bbox;
            let x2 = (b.x2 as u32).min(w);
            let y2 = (b.y2 as u32).min(h);
            let (x1, y1) = (b.x1 as u32, b.y1 as u32);
            if x1 >= x2 || y1 >= y2 {
                continue;
            }
            let salt = self.salt(&widget.id);
            match &widget.kind {
                WidgetKind::VerticalList { items, item_height, offset_px } => {
                    for y in y1..y2 {
                        let content = *offset_px + (y - y1) as i64;
                        let item = content / *item_height as i64;
                        let level = if item < *items as i64 { band_level(salt, item as u64) } else { LIST_EMPTY_LEVEL };
                        let px = Rgb([to_u8(level); 3]);
                        for x in x1..x2 {
                            img.put_pixel(x, y, px);
                        }
                    }
                }
                WidgetKind::HorizontalCarousel { items, item_width, offset_px } => {
                    for x in x1..x2 {
                        let content = *offset_px + (x - x1) as i64;
                        let item = content / *item_width as i64;
                        let level = if item < *items as i64 { band_level(salt, item as u64) } else { LIST_EMPTY_LEVEL };
                        let px = Rgb([to_u8(level); 3]);
                        for y in y1..y2 {
                            img.put_pixel(x, y, px);
                        }
                    }
                }
                WidgetKind::Slider { value } => {
                    fill(&mut img, x1, y1, x2, y2, SLIDER_TRACK_LEVEL);
                    let t = thumb_box(&b, *value);
                    fill(&mut img, t.x1 as u32, t.y1 as u32, (t.x2 as u32).min(w), (t.y2 as u32).min(h), SLIDER_THUMB_LEVEL);
                }
                WidgetKind::Button { .. } => fill(&mut img, x1, y1, x2, y2, BUTTON_LEVEL),
            }
        }
        img
    }

    /// UI-automator style dump: one `<node>` per widget.
    pub fn emit_hierarchy(&self) -> String {
        let mut out = String::from("<?xml version='1.0' encoding='UTF-8' standalone='yes' ?>\n");
        let _ = writeln!(out, "<hierarchy rotation=\"{}\">", self.rotation);
        for (i, w) in self.screen().widgets.iter().enumerate() {
            let b = w.bbox;
            let _ = writeln!(
                out,
                "  <node index=\"{i}\" text=\"{}\" resource-id=\"{}:id/{}\" class=\"{}\" package=\"sim.{}\" \
                 clickable=\"{}\" scrollable=\"{}\" bounds=\"[{},{}][{},{}]\" />",
                xml_escape(&w.label),
                xml_escape(&self.name),
                xml_escape(&w.id),
                w.android_class(),
                xml_escape(&self.name),
                matches!(w.kind, WidgetKind::Button { .. }),
                w.is_scrollable(),
                b.x1,
                b.y1,
                b.x2,
                b.y2
            );
        }
        out.push_str("</hierarchy>\n");
        out
    }
}

/// Thumb rectangle of a slider at `value`.
pub fn thumb_box(track: &BBox, value: f64) -> BBox {
    if track.height() > track.width() {
        let thumb = SLIDER_THUMB_PX.min(track.height());
        let travel = (track.height() - thumb) as f64;
        let top = track.y2 - thumb - (value * travel).round() as i32;
        BBox::new(track.x1, top, track.x2, top + thumb)
    } else {
        let thumb = SLIDER_THUMB_PX.min(track.width());
        let travel = (track.width() - thumb) as f64;
        let left = track.x1 + (value * travel).round() as i32;
        BBox::new(left, track.y1, left + thumb, track.y2)
    }
}

fn scrolled(offset: i64, travel: i64, duration: f64, max: i64, m: &InertiaModel) -> Result<i64, SimError> {
    let disp = scroll_displacement(travel.unsigned_abs() as f64, duration, m)?.round() as i64;
    Ok((offset + travel.signum() * disp).clamp(0, max))
}

fn fill(img: &mut RgbImage, x1: u32, y1: u32, x2: u32, y2: u32, level: f32) {
    let px = Rgb([to_u8(level); 3]);
    for y in y1..y2 {
        for x in x1..x2 {
            img.put_pixel(x, y, px);
        }
    }
}

/// Functional form of [`SimApp::step`].
pub fn sim_step(app: &SimApp, g: &GestureCommand) -> Result<SimApp, SimError> {
    let mut next = app.clone();
    next.step(g)?;
    Ok(next)
}
