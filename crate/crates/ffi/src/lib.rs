//! C ABI over the swipekit core: coordinate conversion, candidate synthesis,
//! ADB rendering, pixel diffing, reward scoring and a handle to the simulator.
//!
//! Every fallible call returns a [`SwkStatus`]. On failure the message is kept
//! per thread and can be read with [`swk_last_error`]. Strings returned by the
//! library are released with [`swk_string_free`]; handles have their own
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use swipekit::device::{render_adb_swipe, GestureCommand};
use swipekit::diff::{changed_ratio, to_gray};
use swipekit::model::{
    denormalize_point, direction_of, normalize_point, BBox, Direction, NormPoint, PixelPoint, SwipeKind,
    SwipeSpec,
};
use swipekit::reward::{score_response, GoldSwipe};
use swipekit::sim::{load_scene, SimApp};
use swipekit::synth::{candidate_order, component_candidates, region_candidates, SwipeRng};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Geometry = 3,
    Parse = 4,
    Device = 5,
    Sim = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwkDirection {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl From<Direction> for SwkDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Up => SwkDirection::Up,
            Direction::Down => SwkDirection::Down,
            Direction::Left => SwkDirection::Left,
            Direction::Right => SwkDirection::Right,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwkKind {
    Component = 0,
    Region = 1,
}

/// Axis-aligned box, `x1 < x2` and `y1 < y2`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SwkBox {
    pub x1: i32,
    pub y1: i32,
    pub x2: i32,
    pub y2: i32,
}

impl From<SwkBox> for BBox {
    fn from(b: SwkBox) -> Self {
        BBox::new(b.x1, b.y1, b.x2, b.y2)
    }
}

impl From<BBox> for SwkBox {
    fn from(b: BBox) -> Self {
        SwkBox { x1: b.x1, y1: b.y1, x2: b.x2, y2: b.y2 }
    }
}

/// A normalized swipe. Coordinates are in `[0, 1000]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwkSwipe {
    pub kind: SwkKind,
    pub start_x: i32,
    pub start_y: i32,
    pub end_x: i32,
    pub end_y: i32,
    pub direction: SwkDirection,
    pub duration_ms: u32,
    pub bbox: SwkBox,
}

impl From<&SwipeSpec> for SwkSwipe {
    fn from(s: &SwipeSpec) -> Self {
        SwkSwipe {
            kind: match s.kind {
                SwipeKind::Component => SwkKind::Component,
                SwipeKind::Region => SwkKind::Region,
            },
            start_x: s.start.x,
            start_y: s.start.y,
            end_x: s.end.x,
            end_y: s.end.y,
            direction: s.direction.into(),
            duration_ms: s.duration_ms,
            bbox: s.bbox.into(),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SwkReward {
    pub format_valid: bool,
    pub r_start: f64,
    pub r_end: f64,
    pub r_dir: f64,
    pub r_dur: f64,
    pub r_acc: f64,
    pub r_format: f64,
    pub r_type: f64,
    pub total_norm: f64,
}

/// Seeded random source for candidate synthesis.
pub struct SwkRng(SwipeRng);

/// A running simulator instance.
pub struct SwkSim(SimApp);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type FfiResult = Result<(), (SwkStatus, String)>;

fn fail<E: std::fmt::Display>(status: SwkStatus) -> impl Fn(E) -> (SwkStatus, String) {
    move |e| (status, e.to_string())
}

fn guard(f: impl FnOnce() -> FfiResult) -> SwkStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SwkStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SwkStatus::Panic
        }
    }
}

fn null(name: &str) -> (SwkStatus, String) {
    (SwkStatus::NullPointer, format!("{name} is null"))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (SwkStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, (SwkStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SwkStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn owned_string(s: String) -> Result<*mut c_char, (SwkStatus, String)> {
    CString::new(s).map(CString::into_raw).map_err(fail(SwkStatus::InvalidArgument))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn swk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn swk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Pixel position to the `[0, 1000]` frame of a `width x height` screen.
///
/// # Safety
/// `out_x` and `out_y` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swk_normalize_point(
    x: u32,
    y: u32,
    width: u32,
    height: u32,
    out_x: *mut i32,
    out_y: *mut i32,
) -> SwkStatus {
    guard(|| {
        let (ox, oy) = (out(out_x, "out_x")?, out(out_y, "out_y")?);
        let p = normalize_point(PixelPoint::new(x, y), width, height).map_err(fail(SwkStatus::Geometry))?;
        (*ox, *oy) = (p.x, p.y);
        Ok(())
    })
}

/// Normalized position to a pixel on a `width x height` screen.
///
/// # Safety
/// `out_x` and `out_y` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swk_denormalize_point(
    x: i32,
    y: i32,
    width: u32,
    height: u32,
    out_x: *mut u32,
    out_y: *mut u32,
) -> SwkStatus {
    guard(|| {
        let (ox, oy) = (out(out_x, "out_x")?, out(out_y, "out_y")?);
        let p = denormalize_point(NormPoint::new(x, y), width, height).map_err(fail(SwkStatus::Geometry))?;
        (*ox, *oy) = (p.x, p.y);
        Ok(())
    })
}

/// Dominant direction from start to end. Fails when the points coincide.
///
/// # Safety
/// `out_dir` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swk_direction_of(
    start_x: i32,
    start_y: i32,
    end_x: i32,
    end_y: i32,
    out_dir: *mut SwkDirection,
) -> SwkStatus {
    guard(|| {
        let o = out(out_dir, "out_dir")?;
        let d = direction_of(NormPoint::new(start_x, start_y), NormPoint::new(end_x, end_y))
            .map_err(fail(SwkStatus::Geometry))?;
        *o = d.into();
        Ok(())
    })
}

/// `input swipe` shell command for a pixel swipe. Free the result with
/// [`swk_string_free`].
///
/// # Safety
/// `out_cmd` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swk_render_adb_swipe(
    x1: u32,
    y1: u32,
    x2: u32,
    y2: u32,
    duration_ms: u32,
    out_cmd: *mut *mut c_char,
) -> SwkStatus {
    guard(|| {
        let o = out(out_cmd, "out_cmd")?;
        let g = GestureCommand::swipe(PixelPoint::new(x1, y1), PixelPoint::new(x2, y2), duration_ms);
        let s = render_adb_swipe(&g).map_err(fail(SwkStatus::Device))?;
        *o = owned_string(s)?;
        Ok(())
    })
}

/// New random source. Returns NULL only on allocation failure.
#[no_mangle]
pub extern "C" fn swk_rng_new(seed: u64) -> *mut SwkRng {
    Box::into_raw(Box::new(SwkRng(SwipeRng::seed_from(seed))))
}

/// # Safety
/// `rng` must come from [`swk_rng_new`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn swk_rng_free(rng: *mut SwkRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// Candidate swipes for a pixel-space target on a `width x height` screen, in
/// execution order. Components yield 2, regions 4. `out_len` receives the
/// count; when `capacity` is too small nothing is written to `out` and
/// `SWK_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `rng` must be a live handle, `out` valid for `capacity` writes and
/// `out_len` valid for one.
#[no_mangle]
pub unsafe extern "C" fn swk_candidates(
    rng: *mut SwkRng,
    kind: SwkKind,
    target: SwkBox,
    width: u32,
    height: u32,
    out: *mut SwkSwipe,
    capacity: usize,
    out_len: *mut usize,
) -> SwkStatus {
    guard(|| {
        let rng = &mut rng.as_mut().ok_or_else(|| null("rng"))?.0;
        let len = self::out(out_len, "out_len")?;
        let b: BBox = target.into();
        let cands = match kind {
            SwkKind::Component => component_candidates(&b, width, height, rng),
            SwkKind::Region => region_candidates(&b, width, height, rng),
        }
        .map_err(fail(SwkStatus::Geometry))?;
        let cands = candidate_order(cands);
        *len = cands.len();
        if capacity < cands.len() {
            return Err((SwkStatus::BufferTooSmall, format!("need {} slots, got {capacity}", cands.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        for (i, c) in cands.iter().enumerate() {
            out.add(i).write(SwkSwipe::from(&c.spec));
        }
        Ok(())
    })
}

/// Scores a raw model response against a gold swipe given as SwipeSpec JSON.
///
/// # Safety
/// `response` and `gold_json` must be NUL-terminated; `out_reward` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swk_score_response(
    response: *const c_char,
    gold_json: *const c_char,
    out_reward: *mut SwkReward,
) -> SwkStatus {
    guard(|| {
        let raw = text(response, "response")?;
        let gold = text(gold_json, "gold_json")?;
        let o = out(out_reward, "out_reward")?;
        let spec: SwipeSpec = serde_json::from_str(gold).map_err(fail(SwkStatus::Parse))?;
        let (f, _, b) = score_response(raw, &GoldSwipe::new(spec));
        *o = SwkReward {
            format_valid: f.valid,
            r_start: b.r_start,
            r_end: b.r_end,
            r_dir: b.r_dir,
            r_dur: b.r_dur,
            r_acc: b.r_acc,
            r_format: b.r_format,
            r_type: b.r_type,
            total_norm: b.total_norm,
        };
        Ok(())
    })
}

unsafe fn rgb_image(p: *const u8, width: u32, height: u32, name: &str) -> Result<image::RgbImage, (SwkStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    let len = width as usize * height as usize * 3;
    let bytes = std::slice::from_raw_parts(p, len).to_vec();
    image::RgbImage::from_raw(width, height, bytes)
        .ok_or_else(|| (SwkStatus::InvalidArgument, format!("{name}: bad dimensions")))
}

/// Fraction of pixels in `roi` whose gray level differs by more than `delta`.
/// Images are packed 8-bit RGB, `width * height * 3` bytes each.
///
/// # Safety
/// `a` and `b` must each hold `width * height * 3` readable bytes; `out_ratio`
/// must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swk_changed_ratio(
    a: *const u8,
    b: *const u8,
    width: u32,
    height: u32,
    roi: SwkBox,
    delta: f64,
    out_ratio: *mut f64,
) -> SwkStatus {
    guard(|| {
        let o = out(out_ratio, "out_ratio")?;
        let ga = to_gray(&rgb_image(a, width, height, "a")?).map_err(fail(SwkStatus::InvalidArgument))?;
        let gb = to_gray(&rgb_image(b, width, height, "b")?).map_err(fail(SwkStatus::InvalidArgument))?;
        *o = changed_ratio(&ga, &gb, &roi.into(), delta).map_err(fail(SwkStatus::InvalidArgument))?;
        Ok(())
    })
}

/// Loads a built-in scene by name or a scene file by path. Returns NULL on
/// failure; see [`swk_last_error`].
///
/// # Safety
/// `scene` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn swk_sim_new(scene: *const c_char) -> *mut SwkSim {
    let mut handle = ptr::null_mut();
    guard(|| {
        let app = load_scene(text(scene, "scene")?).map_err(fail(SwkStatus::Sim))?;
        handle = Box::into_raw(Box::new(SwkSim(app)));
        Ok(())
    });
    handle
}

/// # Safety
/// `sim` must come from [`swk_sim_new`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn swk_sim_free(sim: *mut SwkSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

unsafe fn sim_mut<'a>(sim: *mut SwkSim) -> Result<&'a mut SimApp, (SwkStatus, String)> {
    sim.as_mut().map(|s| &mut s.0).ok_or_else(|| null("sim"))
}

/// # Safety
/// `sim` must be a live handle; `out_width` and `out_height` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swk_sim_size(sim: *const SwkSim, out_width: *mut u32, out_height: *mut u32) -> SwkStatus {
    guard(|| {
        let app = &sim.as_ref().ok_or_else(|| null("sim"))?.0;
        let (w, h) = (out(out_width, "out_width")?, out(out_height, "out_height")?);
        (*w, *h) = (app.width, app.height);
        Ok(())
    })
}

/// Applies a pixel swipe.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn swk_sim_swipe(sim: *mut SwkSim, x1: u32, y1: u32, x2: u32, y2: u32, duration_ms: u32) -> SwkStatus {
    guard(|| {
        let app = sim_mut(sim)?;
        let g = GestureCommand::swipe(PixelPoint::new(x1, y1), PixelPoint::new(x2, y2), duration_ms);
        g.check().map_err(fail(SwkStatus::Device))?;
        app.step(&g).map_err(fail(SwkStatus::Sim))
    })
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn swk_sim_tap(sim: *mut SwkSim, x: u32, y: u32) -> SwkStatus {
    guard(|| sim_mut(sim)?.step(&GestureCommand::tap(PixelPoint::new(x, y))).map_err(fail(SwkStatus::Sim)))
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn swk_sim_back(sim: *mut SwkSim) -> SwkStatus {
    guard(|| {
        sim_mut(sim)?.back();
        Ok(())
    })
}

/// Id of the current screen. Free the result with [`swk_string_free`].
///
/// # Safety
/// `sim` must be a live handle; `out_id` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swk_sim_current_screen(sim: *const SwkSim, out_id: *mut *mut c_char) -> SwkStatus {
    guard(|| {
        let app = &sim.as_ref().ok_or_else(|| null("sim"))?.0;
        let o = out(out_id, "out_id")?;
        *o = owned_string(app.current().to_string())?;
        Ok(())
    })
}

/// Renders the current screen as packed RGB into `buf`, which must hold
/// `width * height * 3` bytes.
///
/// # Safety
/// `sim` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn swk_sim_render(sim: *const SwkSim, buf: *mut u8, len: usize) -> SwkStatus {
    guard(|| {
        let app = &sim.as_ref().ok_or_else(|| null("sim"))?.0;
        let need = app.width as usize * app.height as usize * 3;
        if len < need {
            return Err((SwkStatus::BufferTooSmall, format!("need {need} bytes, got {len}")));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let img = app.render();
        ptr::copy_nonoverlapping(img.as_raw().as_ptr(), buf, need);
        Ok(())
    })
}
