use std::path::Path;
use std::sync::Arc;

use image::RgbImage;
use serde_json::Value;

use swipekit::dataset::{read_swipes, validate_dataset, DatasetWriter, SWIPES_FILE};
use swipekit::explore::{DetectorMode, ExploreConfig, Explorer, FixedClock, SequentialIds};
use swipekit::model::{BBox, Direction, NormPoint, SwipeKind, SwipeSpec};
use swipekit::perception::gateway::{Gateway, MockTransport, VlmEndpoint};
use swipekit::perception::prompts::{region_detection_prompt, swipe_description_prompt};
use swipekit::perception::{describe_swipe, detect_regions};
use swipekit::sim::{load_scene, SimDevice};

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn spec() -> SwipeSpec {
    SwipeSpec {
        kind: SwipeKind::Region,
        start: NormPoint::new(500, 771),
        end: NormPoint::new(500, 104),
        direction: Direction::Up,
        duration_ms: 150,
        bbox: BBox::new(259, 104, 741, 417),
        intent: String::new(),
    }
}

#[test]
fn prompt_snapshots() {
    assert_eq!(region_detection_prompt(), golden("prompt_region_detection.txt").trim_end());
    assert_eq!(swipe_description_prompt(&spec()), golden("prompt_swipe_description.txt").trim_end());
}

#[test]
fn description_request_carries_both_screens_then_prompt() {
    let mock = Arc::new(MockTransport::chat_reply(r#"{"command":"Scroll up the feed.","reason":"More posts."}"#));
    let gw = Gateway::new(mock.clone()).with_vlm(VlmEndpoint::new("http://vlm.test/v1/chat/completions", "m"));
    let before = RgbImage::new(8, 8);
    let after = RgbImage::from_pixel(8, 8, image::Rgb([255, 255, 255]));
    let d = describe_swipe(&gw, &before, &after, &spec()).unwrap();
    assert_eq!(d.command, "Scroll up the feed.");

    let reqs = mock.requests();
    assert_eq!(reqs.len(), 1);
    let body: Value = serde_json::from_str(&reqs[0].body).unwrap();
    assert_eq!(body["model"], "m");
    let parts = body["messages"][0]["content"].as_array().unwrap();
    let kinds: Vec<&str> = parts.iter().map(|p| p["type"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["image_url", "image_url", "text"]);
    assert_ne!(parts[0]["image_url"]["url"], parts[1]["image_url"]["url"]);
    assert_eq!(parts[2]["text"], swipe_description_prompt(&spec()));
}

#[test]
fn fenced_region_reply_is_accepted() {
    let reply = "```json\n[{\"type\":\"list\",\"direction\":\"vertical\",\"bbox\":[0,100,1000,900],\"description\":\"feed\"}]\n```";
    let gw = Gateway::new(Arc::new(MockTransport::chat_reply(reply))).with_vlm(VlmEndpoint::new("http://vlm.test", "m"));
    let regions = detect_regions(&gw, &RgbImage::new(4, 4)).unwrap();
    assert_eq!(regions.len(), 1);
    assert_eq!(regions[0].bbox, BBox::new(0, 100, 1000, 900));
    assert_eq!(regions[0].kind, SwipeKind::Region);
}

/// Hierarchy-only runs over the bundled scenes write datasets that read back
/// cleanly and pass validation.
#[test]
fn bundled_scenes_explore_to_valid_datasets() {
    for scene in ["feed", "gallery", "editor"] {
        let dir = tempfile::tempdir().unwrap();
        let mut dev = SimDevice::new(load_scene(scene).unwrap());
        let cfg = ExploreConfig { seed: 3, detectors: DetectorMode::Hierarchy, ..Default::default() };
        let stats = {
            let mut sink = DatasetWriter::create(dir.path()).unwrap();
            Explorer::new(&mut dev, cfg, scene)
                .with_clock(FixedClock::default())
                .with_ids(SequentialIds::new(scene))
                .explore(&mut sink)
                .unwrap()
        };
        let records = read_swipes(&dir.path().join(SWIPES_FILE)).unwrap();
        assert_eq!(records.len() as u32, stats.swipes_retained, "{scene}");
        assert!(!records.is_empty(), "{scene}");
        assert!(records.iter().all(|r| r.spec.kind == SwipeKind::Component), "{scene}");
        assert!(validate_dataset(&records, Some(dir.path())).is_empty(), "{scene}");
    }
}
