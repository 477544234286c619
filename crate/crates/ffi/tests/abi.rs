use std::ffi::{CStr, CString};
use std::ptr;

use swipekit_ffi::*;

fn last_error() -> String {
    let p = swk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn point_round_trip() {
    let (mut nx, mut ny) = (0, 0);
    let (mut px, mut py) = (0u32, 0u32);
    unsafe {
        assert_eq!(swk_normalize_point(1079, 1919, 1080, 1920, &mut nx, &mut ny), SwkStatus::Ok);
        assert_eq!((nx, ny), (999, 999));
        assert_eq!(swk_denormalize_point(1000, 1000, 1080, 1920, &mut px, &mut py), SwkStatus::Ok);
    }
    assert_eq!((px, py), (1079, 1919));
}

#[test]
fn direction_and_degenerate_gesture() {
    let mut d = SwkDirection::Down;
    unsafe {
        assert_eq!(swk_direction_of(500, 800, 500, 200, &mut d), SwkStatus::Ok);
        assert_eq!(d, SwkDirection::Up);
        assert_eq!(swk_direction_of(5, 5, 5, 5, &mut d), SwkStatus::Geometry);
    }
    assert!(!last_error().is_empty());
}

#[test]
fn adb_rendering_and_zero_duration() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(swk_render_adb_swipe(340, 400, 1040, 400, 500, &mut s), SwkStatus::Ok);
        assert_eq!(CStr::from_ptr(s).to_str().unwrap(), "input swipe 340 400 1040 400 500");
        swk_string_free(s);
        let mut s = ptr::null_mut();
        assert_eq!(swk_render_adb_swipe(1, 1, 2, 2, 0, &mut s), SwkStatus::Device);
        assert!(s.is_null());
    }
}

#[test]
fn candidates_match_the_library() {
    let target = SwkBox { x1: 100, y1: 900, x2: 980, y2: 1000 };
    let mut out = [SwkSwipe {
        kind: SwkKind::Component,
        start_x: 0,
        start_y: 0,
        end_x: 0,
        end_y: 0,
        direction: SwkDirection::Up,
        duration_ms: 0,
        bbox: SwkBox::default(),
    }; 4];
    let mut n = 0usize;
    let rng = swk_rng_new(11);
    unsafe {
        assert_eq!(swk_candidates(rng, SwkKind::Component, target, 1080, 1920, out.as_mut_ptr(), 4, &mut n), SwkStatus::Ok);
        swk_rng_free(rng);
    }
    assert_eq!(n, 2);
    let mut lib_rng = swipekit::synth::SwipeRng::seed_from(11);
    let b = swipekit::model::BBox::new(100, 900, 980, 1000);
    let want = swipekit::synth::candidate_order(
        swipekit::synth::component_candidates(&b, 1080, 1920, &mut lib_rng).unwrap(),
    );
    for (got, want) in out[..n].iter().zip(&want) {
        assert_eq!(*got, SwkSwipe::from(&want.spec));
    }
    assert_eq!(out[0].direction, SwkDirection::Left);
    assert_eq!(out[0].duration_ms, 300);
    assert_eq!(out[0].bbox, SwkBox { x1: 0, y1: 0, x2: 1000, y2: 1000 });
}

#[test]
fn null_handles_are_rejected() {
    let mut n = 0usize;
    unsafe {
        assert_eq!(
            swk_candidates(ptr::null_mut(), SwkKind::Region, SwkBox::default(), 10, 10, ptr::null_mut(), 0, &mut n),
            SwkStatus::NullPointer
        );
        assert_eq!(swk_sim_back(ptr::null_mut()), SwkStatus::NullPointer);
        swk_sim_free(ptr::null_mut());
        swk_rng_free(ptr::null_mut());
        swk_string_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn score_invalid_response_and_bad_gold() {
    let gold = CString::new(
        r#"{"type":"component","start":[500,500],"end":[500,100],"direction":"up","duration":300,"bbox":[0,0,1000,1000]}"#,
    )
    .unwrap();
    let raw = CString::new("```json\n{}\n```").unwrap();
    let mut r = SwkReward::default();
    unsafe {
        assert_eq!(swk_score_response(raw.as_ptr(), gold.as_ptr(), &mut r), SwkStatus::Ok);
    }
    assert!(!r.format_valid);
    assert_eq!((r.r_format, r.r_type, r.r_acc, r.total_norm), (-1.0, -0.8, 0.0, -1.0));

    let bad = CString::new("{}").unwrap();
    unsafe {
        assert_eq!(swk_score_response(raw.as_ptr(), bad.as_ptr(), &mut r), SwkStatus::Parse);
    }
}

#[test]
fn sim_navigation_and_render() {
    let name = CString::new("feed").unwrap();
    let sim = unsafe { swk_sim_new(name.as_ptr()) };
    assert!(!sim.is_null());
    let screen = |sim| unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(swk_sim_current_screen(sim, &mut s), SwkStatus::Ok);
        let id = CStr::from_ptr(s).to_str().unwrap().to_string();
        swk_string_free(s);
        id
    };
    assert_eq!(screen(sim), "home");
    unsafe {
        assert_eq!(swk_sim_tap(sim, 200, 1600), SwkStatus::Ok);
        assert_eq!(screen(sim), "detail");
        assert_eq!(swk_sim_back(sim), SwkStatus::Ok);
        assert_eq!(swk_sim_swipe(sim, 2000, 10, 10, 10, 100), SwkStatus::Sim);
        let mut small = [0u8; 16];
        assert_eq!(swk_sim_render(sim, small.as_mut_ptr(), small.len()), SwkStatus::BufferTooSmall);
        swk_sim_free(sim);
    }
    assert!(missing_scene_is_reported());
}

fn missing_scene_is_reported() -> bool {
    let name = CString::new("no-such-scene").unwrap();
    let sim = unsafe { swk_sim_new(name.as_ptr()) };
    sim.is_null() && last_error().contains("no-such-scene")
}

#[test]
fn changed_ratio_over_buffers() {
    let a = vec![0u8; 4 * 4 * 3];
    let mut b = a.clone();
    b[..3].copy_from_slice(&[255, 255, 255]);
    let mut ratio = -1.0;
    let roi = SwkBox { x1: 0, y1: 0, x2: 4, y2: 4 };
    unsafe {
        assert_eq!(swk_changed_ratio(a.as_ptr(), b.as_ptr(), 4, 4, roi, 0.02, &mut ratio), SwkStatus::Ok);
        assert_eq!(ratio, 1.0 / 16.0);
        let outside = SwkBox { x1: 0, y1: 0, x2: 5, y2: 4 };
        assert_eq!(swk_changed_ratio(a.as_ptr(), b.as_ptr(), 4, 4, outside, 0.02, &mut ratio), SwkStatus::InvalidArgument);
    }
}
