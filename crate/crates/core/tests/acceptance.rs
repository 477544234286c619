//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swipekit::dataset::{read_swipes, validate_dataset, MemorySink, SWIPES_FILE};
use swipekit::device::{render_adb_swipe, GestureCommand};
use swipekit::diff::{changed_ratio, to_gray, DiffConfig, GrayImage};
use swipekit::explore::{DetectorMode, ExploreConfig, Explorer, FixedClock, SequentialIds};
use swipekit::model::{
    validate_record, ActionKind, AgentPrediction, BBox, Direction, NormPoint, PixelPoint, RecordSource,
    SwipeKind, SwipeRecord, SwipeSpec,
};
use swipekit::perception::gateway::{Gateway, ParserEndpoint, VlmEndpoint};
use swipekit::reward::{evaluate, parse_response, render_response, score_response, GoldSwipe};
use swipekit::sim::{load_scene, sim_step, SimDevice, SimServices, SIM_PARSER_URL, SIM_VLM_URL};
use swipekit::synth::{
    candidate_order, component_candidate_with_alpha, component_candidates, region_candidates,
    region_candidates_with_alpha, SwipeRng, FAST_DURATION_MS, SLOW_DURATION_MS,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------- candidates

/// Candidate geometry written straight from the formulas, in plain integers
/// and floats.
mod formula {
    use super::*;

    pub fn norm(v: i64, size: u32) -> i32 {
        ((v as f64 * 1000.0 / size as f64).round() as i64).min(1000) as i32
    }

    pub fn norm_box(b: &BBox, w: u32, h: u32) -> BBox {
        BBox::new(norm(b.x1 as i64, w), norm(b.y1 as i64, h), norm(b.x2 as i64, w), norm(b.y2 as i64, h))
    }

    pub struct Swipe {
        pub start: (i32, i32),
        pub end: (i32, i32),
        pub dir: Direction,
        pub duration: u32,
        pub bbox: BBox,
    }

    pub fn component(b: &BBox, w: u32, h: u32, dir: Direction, alpha: f64) -> Swipe {
        let sx = (b.x1 + b.x2) as i64 / 2;
        let sy = (b.y1 + b.y2) as i64 / 2;
        let vertical = (b.y2 - b.y1) > (b.x2 - b.x1);
        let d = ((alpha * if vertical { h } else { w } as f64).round() as i64).max(1);
        let (ex, ey) = match dir {
            Direction::Right => ((sx + d).min(w as i64), sy),
            Direction::Left => ((sx - d).max(0), sy),
            Direction::Down => (sx, (sy + d).min(h as i64)),
            Direction::Up => (sx, (sy - d).max(0)),
        };
        Swipe {
            start: (norm(sx, w), norm(sy, h)),
            end: (norm(ex, w), norm(ey, h)),
            dir,
            duration: 300,
            bbox: BBox::new(0, 0, 1000, 1000),
        }
    }

    /// Execution order: offset-high start first, fast before slow.
    pub fn region(b: &BBox, w: u32, h: u32, alpha: f64) -> Vec<Swipe> {
        let vertical = (b.y2 - b.y1) > (b.x2 - b.x1);
        let (lo, hi) = if vertical { (b.y1 as i64, b.y2 as i64) } else { (b.x1 as i64, b.x2 as i64) };
        let c = (lo + hi) / 2;
        let off = (alpha * (hi - lo) as f64).floor() as i64;
        let hi_start = (c + off).min(hi - 1).max(lo + 1);
        let lo_start = (c - off).min(hi - 1).max(lo + 1);
        let cross = if vertical { (b.x1 + b.x2) as i64 / 2 } else { (b.y1 + b.y2) as i64 / 2 };
        let mut out = Vec::new();
        let legs = if vertical {
            [(hi_start, lo, Direction::Up), (lo_start, hi, Direction::Down)]
        } else {
            [(hi_start, lo, Direction::Left), (lo_start, hi, Direction::Right)]
        };
        for (s, e, dir) in legs {
            for duration in [150, 500] {
                let (start, end) = if vertical {
                    ((norm(cross, w), norm(s, h)), (norm(cross, w), norm(e, h)))
                } else {
                    ((norm(s, w), norm(cross, h)), (norm(e, w), norm(cross, h)))
                };
                out.push(Swipe { start, end, dir, duration, bbox: norm_box(b, w, h) });
            }
        }
        out
    }
}

fn same(spec: &SwipeSpec, f: &formula::Swipe, kind: SwipeKind) -> bool {
    spec.kind == kind
        && (spec.start.x, spec.start.y) == f.start
        && (spec.end.x, spec.end.y) == f.end
        && spec.direction == f.dir
        && spec.duration_ms == f.duration
        && spec.bbox == f.bbox
}

fn random_target(rng: &mut ChaCha8Rng, min_side: i32) -> (BBox, u32, u32) {
    let w: u32 = rng.gen_range(200..=2400);
    let h: u32 = rng.gen_range(200..=2400);
    let bw = rng.gen_range(min_side..=w as i32);
    let bh = rng.gen_range(min_side..=h as i32);
    let x1 = rng.gen_range(0..=w as i32 - bw);
    let y1 = rng.gen_range(0..=h as i32 - bh);
    (BBox::new(x1, y1, x1 + bw, y1 + bh), w, h)
}

fn candidate_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let mut mismatches = 0;
    let mut compared = 0;
    for _ in 0..1000 {
        let (b, w, h) = random_target(&mut rng, 2);
        let ac = 1.0 - rng.gen::<f64>();
        let ar = rng.gen_range(0.2..0.5);
        let dirs = if b.height() > b.width() { [Direction::Up, Direction::Down] } else { [Direction::Left, Direction::Right] };
        for dir in dirs {
            let got = component_candidate_with_alpha(&b, w, h, dir, ac).map_err(|e| e.to_string())?;
            compared += 1;
            if !same(&got.spec, &formula::component(&b, w, h, dir, ac), SwipeKind::Component) {
                mismatches += 1;
            }
        }
        let got = candidate_order(region_candidates_with_alpha(&b, w, h, ar).map_err(|e| e.to_string())?);
        let want = formula::region(&b, w, h, ar);
        ensure!(got.len() == want.len(), "region count {} vs {}", got.len(), want.len());
        for (g, f) in got.iter().zip(&want) {
            compared += 1;
            if !same(&g.spec, f, SwipeKind::Region) {
                mismatches += 1;
            }
        }
    }
    let took = t0.elapsed();
    ensure!(mismatches == 0, "{mismatches} of {compared} candidates differ from the formula");
    ensure!(took < Duration::from_secs(5), "took {took:?}");
    Ok(format!("1000 inputs, {compared} candidates, 0 mismatches, {took:.2?}"))
}

fn structural_counts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut srng = SwipeRng::seed_from(99);
    for i in 0..10_000 {
        let (b, w, h) = random_target(&mut rng, 2);
        let c = component_candidates(&b, w, h, &mut srng).map_err(|e| format!("target {i}: {e}"))?;
        let r = region_candidates(&b, w, h, &mut srng).map_err(|e| format!("target {i}: {e}"))?;
        ensure!(c.len() == 2, "target {i} {b:?}: {} component candidates", c.len());
        ensure!(r.len() == 4, "target {i} {b:?}: {} region candidates", r.len());
        ensure!(c.iter().all(|x| x.spec.duration_ms == 300), "component duration");
        let mut durs: Vec<u32> = r.iter().map(|x| x.spec.duration_ms).collect();
        durs.sort();
        ensure!(durs == [150, 150, 500, 500], "region durations {durs:?}");
    }
    Ok("10000 targets: 2 per component, 4 per region".into())
}

// ---------------------------------------------------------------------- diff

fn brute_ratio(a: &GrayImage, b: &GrayImage, roi: &BBox, delta: f64) -> f64 {
    let mut n = 0u32;
    let mut changed = 0u32;
    for y in roi.y1..roi.y2 {
        for x in roi.x1..roi.x2 {
            n += 1;
            let d = a.get(x as u32, y as u32) as f64 - b.get(x as u32, y as u32) as f64;
            if d.abs() > delta {
                changed += 1;
            }
        }
    }
    changed as f64 / n as f64
}

fn diff_verification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1FF);
    let deltas = [0.0, 0.01, 0.02, 0.05, 0.1, 0.3, 0.6, 0.99];
    for i in 0..500 {
        let w = rng.gen_range(1..=64u32);
        let h = rng.gen_range(1..=64u32);
        let a: Vec<f32> = (0..w * h).map(|_| rng.gen::<f32>()).collect();
        let b: Vec<f32> = a
            .iter()
            .map(|v| if rng.gen_bool(0.5) { *v } else { (v + rng.gen_range(-0.5f32..0.5)).clamp(0.0, 1.0) })
            .collect();
        let ga = GrayImage::new(w, h, a).map_err(|e| e.to_string())?;
        let gb = GrayImage::new(w, h, b).map_err(|e| e.to_string())?;
        let x1 = rng.gen_range(0..w as i32);
        let y1 = rng.gen_range(0..h as i32);
        let roi = BBox::new(x1, y1, rng.gen_range(x1 + 1..=w as i32), rng.gen_range(y1 + 1..=h as i32));
        ensure!(changed_ratio(&ga, &ga, &roi, 0.02).map_err(|e| e.to_string())? == 0.0, "pair {i}: self ratio");
        let mut prev = f64::INFINITY;
        for d in deltas {
            let got = changed_ratio(&ga, &gb, &roi, d).map_err(|e| e.to_string())?;
            let want = brute_ratio(&ga, &gb, &roi, d);
            ensure!(got == want, "pair {i} delta {d}: {got} vs {want}");
            ensure!(got <= prev, "pair {i}: ratio rises with delta");
            prev = got;
        }
    }
    Ok(format!("500 pairs x {} deltas exact, self ratio 0, monotone", deltas.len()))
}

// ------------------------------------------------------------------- rewards

struct Expected {
    valid: bool,
    r: [f64; 4],
    r_format: f64,
    r_type: f64,
}

/// Scoring rules re-derived independently of the library.
fn oracle(pred: Option<&AgentPrediction>, gold: &SwipeSpec) -> Expected {
    let Some(p) = pred else {
        return Expected { valid: false, r: [0.0; 4], r_format: -1.0, r_type: -0.8 };
    };
    if p.action != ActionKind::Swipe {
        return Expected { valid: true, r: [0.0; 4], r_format: 1.0, r_type: -0.8 };
    }
    let (bx1, by1, bx2, by2) = match gold.kind {
        SwipeKind::Region => (gold.bbox.x1, gold.bbox.y1, gold.bbox.x2, gold.bbox.y2),
        SwipeKind::Component => (0, 0, 1000, 1000),
    };
    let dist = |a: NormPoint, b: NormPoint| (((a.x - b.x) as f64).powi(2) + ((a.y - b.y) as f64).powi(2)).sqrt();
    let inside = p.start.x >= bx1 && p.start.x <= bx2 && p.start.y >= by1 && p.start.y <= by2;
    let start = inside && dist(p.start, gold.start) <= 220.0;
    let end = p.end.is_some_and(|e| dist(e, gold.end) <= 220.0);
    let dir = p.direction.or_else(|| {
        let e = p.end?;
        let (dx, dy) = (e.x - p.start.x, e.y - p.start.y);
        if dx == 0 && dy == 0 {
            None
        } else if dx.abs() >= dy.abs() {
            Some(if dx > 0 { Direction::Right } else { Direction::Left })
        } else {
            Some(if dy > 0 { Direction::Down } else { Direction::Up })
        }
    }) == Some(gold.direction);
    let fast = |ms: u32| ms <= 325;
    let dur = match gold.kind {
        SwipeKind::Component => true,
        SwipeKind::Region => p.duration_ms.is_some_and(|d| fast(d) == fast(gold.duration_ms)),
    };
    let pick = |hit: bool, v: f64| if hit { v } else { 0.0 };
    Expected {
        valid: true,
        r: [pick(start, 0.45), pick(end, 0.10), pick(dir, 0.35), pick(dur, 0.10)],
        r_format: 1.0,
        r_type: 0.8,
    }
}

fn random_gold(rng: &mut ChaCha8Rng) -> SwipeSpec {
    let kind = if rng.gen_bool(0.5) { SwipeKind::Region } else { SwipeKind::Component };
    let bbox = match kind {
        SwipeKind::Component => BBox::FULL_NORM,
        SwipeKind::Region => {
            let x1 = rng.gen_range(0..900);
            let y1 = rng.gen_range(0..900);
            BBox::new(x1, y1, rng.gen_range(x1 + 50..=1000), rng.gen_range(y1 + 50..=1000))
        }
    };
    let start = NormPoint::new(rng.gen_range(bbox.x1..=bbox.x2), rng.gen_range(bbox.y1..=bbox.y2));
    let direction = [Direction::Up, Direction::Down, Direction::Left, Direction::Right][rng.gen_range(0..4)];
    let end = match direction {
        Direction::Up => NormPoint::new(start.x, bbox.y1),
        Direction::Down => NormPoint::new(start.x, bbox.y2),
        Direction::Left => NormPoint::new(bbox.x1, start.y),
        Direction::Right => NormPoint::new(bbox.x2, start.y),
    };
    let duration_ms = match kind {
        SwipeKind::Component => 300,
        SwipeKind::Region => [FAST_DURATION_MS, SLOW_DURATION_MS][rng.gen_range(0..2)],
    };
    SwipeSpec { kind, start, end, direction, duration_ms, bbox, intent: String::new() }
}

fn clamp_pt(x: i32, y: i32) -> NormPoint {
    NormPoint::new(x.clamp(0, 1000), y.clamp(0, 1000))
}

/// Offsets with squared length exactly 220^2.
const ON_RADIUS: [(i32, i32); 6] = [(220, 0), (0, 220), (-220, 0), (0, -220), (132, 176), (-176, -132)];

fn random_pred(rng: &mut ChaCha8Rng, gold: &SwipeSpec) -> AgentPrediction {
    let b = gold.bbox;
    let start = match rng.gen_range(0..6) {
        0 => gold.start,
        1 => {
            let (dx, dy) = ON_RADIUS[rng.gen_range(0..ON_RADIUS.len())];
            clamp_pt(gold.start.x + dx, gold.start.y + dy)
        }
        // on an edge of B
        2 => match rng.gen_range(0..4) {
            0 => NormPoint::new(b.x1, rng.gen_range(b.y1..=b.y2)),
            1 => NormPoint::new(b.x2, rng.gen_range(b.y1..=b.y2)),
            2 => NormPoint::new(rng.gen_range(b.x1..=b.x2), b.y1),
            _ => NormPoint::new(rng.gen_range(b.x1..=b.x2), b.y2),
        },
        3 => clamp_pt(gold.start.x + rng.gen_range(-230..=230), gold.start.y + rng.gen_range(-230..=230)),
        _ => NormPoint::new(rng.gen_range(0..=1000), rng.gen_range(0..=1000)),
    };
    let end = match rng.gen_range(0..5) {
        0 => None,
        1 => Some(gold.end),
        2 => {
            let (dx, dy) = ON_RADIUS[rng.gen_range(0..ON_RADIUS.len())];
            Some(clamp_pt(gold.end.x + dx, gold.end.y + dy))
        }
        3 => Some(clamp_pt(gold.end.x + rng.gen_range(-300..=300), gold.end.y + rng.gen_range(-300..=300))),
        _ => Some(NormPoint::new(rng.gen_range(0..=1000), rng.gen_range(0..=1000))),
    };
    let direction = match rng.gen_range(0..3) {
        0 => None,
        1 => Some(gold.direction),
        _ => Some([Direction::Up, Direction::Down, Direction::Left, Direction::Right][rng.gen_range(0..4)]),
    };
    let duration_ms = match rng.gen_range(0..6) {
        0 => None,
        1 => Some(325),
        2 => Some(326),
        3 => Some(gold.duration_ms),
        _ => Some(rng.gen_range(1..1000)),
    };
    let action = if end.is_some() && rng.gen_bool(0.9) { ActionKind::Swipe } else { ActionKind::Tap };
    let end = if action == ActionKind::Tap { None } else { end };
    AgentPrediction { action, start, end, direction, duration_ms, text: None }
}

fn random_response(rng: &mut ChaCha8Rng, gold: &SwipeSpec) -> (String, Option<AgentPrediction>) {
    if rng.gen_ratio(1, 10) {
        let junk = ["", "swipe up", "<think>x</think>", "<think>a</think><think>b</think>{}", "{\"action\":\"swipe\"}"];
        return (junk[rng.gen_range(0..junk.len())].to_string(), None);
    }
    let p = random_pred(rng, gold);
    (render_response("Looking at the screen.", &p), Some(p))
}

const SUBSET_SUMS: [u32; 16] = {
    let w = [45, 10, 35, 10];
    let mut out = [0u32; 16];
    let mut m = 0;
    while m < 16 {
        let mut i = 0;
        while i < 4 {
            if m & (1 << i) != 0 {
                out[m] += w[i];
            }
            i += 1;
        }
        m += 1;
    }
    out
};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

fn reward_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x12E3A2D);
    let allowed: BTreeSet<u32> = SUBSET_SUMS.into_iter().collect();
    let mut seen = BTreeSet::new();
    let mut boundary = [0usize; 3];
    let n = 20_000;
    for i in 0..n {
        let gold = random_gold(&mut rng);
        let (raw, pred) = random_response(&mut rng, &gold);
        if let Some(p) = &pred {
            boundary[0] += (p.start.dist_sq(&gold.start) == 220 * 220) as usize;
            boundary[1] += (p.duration_ms == Some(325)) as usize;
            let b = gold.bbox;
            boundary[2] += (p.start.x == b.x1 || p.start.x == b.x2 || p.start.y == b.y1 || p.start.y == b.y2) as usize;
        }
        let (f, _, got) = score_response(&raw, &GoldSwipe::new(gold.clone()));
        let want = oracle(pred.as_ref(), &gold);
        ensure!(f.valid == want.valid, "case {i}: validity differs for {raw:?}");
        let r = [got.r_start, got.r_end, got.r_dir, got.r_dur];
        ensure!(r == want.r, "case {i}: sub-rewards {r:?} vs {:?} for {raw:?} gold {gold:?}", want.r);
        ensure!(got.r_format == want.r_format && got.r_type == want.r_type, "case {i}: format/type");
        let acc: f64 = want.r.iter().sum();
        ensure!(close(got.r_acc, acc), "case {i}: r_acc {} vs {acc}", got.r_acc);
        let total = 2.0 * (want.r_format + want.r_type + acc + 1.8) / 4.6 - 1.0;
        ensure!(close(got.total_norm, total), "case {i}: total {} vs {total}", got.total_norm);
        let h = (got.r_acc * 100.0).round() as u32;
        ensure!(allowed.contains(&h), "case {i}: r_acc {} is not a subset sum", got.r_acc);
        seen.insert(h);
    }
    ensure!(boundary.iter().all(|c| *c > 0), "boundary coverage {boundary:?}");

    // every hit pattern, built explicitly on one region gold
    let gold = SwipeSpec {
        kind: SwipeKind::Region,
        start: NormPoint::new(500, 500),
        end: NormPoint::new(500, 300),
        direction: Direction::Up,
        duration_ms: 150,
        bbox: BBox::new(100, 300, 900, 700),
        intent: String::new(),
    };
    for (mask, want) in SUBSET_SUMS.iter().enumerate() {
        let hit = |bit: usize| mask & (1 << bit) != 0;
        let p = AgentPrediction {
            action: ActionKind::Swipe,
            start: if hit(0) { NormPoint::new(500, 500) } else { NormPoint::new(950, 950) },
            end: Some(if hit(1) { NormPoint::new(500, 300) } else { NormPoint::new(10, 990) }),
            direction: Some(if hit(2) { Direction::Up } else { Direction::Right }),
            duration_ms: Some(if hit(3) { 150 } else { 500 }),
            text: None,
        };
        let (_, _, got) = score_response(&render_response("t", &p), &GoldSwipe::new(gold.clone()));
        ensure!(close(got.r_acc, *want as f64 / 100.0), "pattern {mask:04b}: r_acc {}", got.r_acc);
        seen.insert(*want);
    }
    ensure!(seen == allowed, "attained {seen:?}, expected {allowed:?}");
    Ok(format!(
        "{n} pairs match (boundary hits: dist=220 {}, dur=325 {}, edge start {}); 16 patterns, {} distinct r_acc values",
        boundary[0],
        boundary[1],
        boundary[2],
        allowed.len()
    ))
}

fn gold_record(i: usize, spec: SwipeSpec) -> SwipeRecord {
    SwipeRecord {
        id: format!("r{i:05}"),
        app: ["feed", "gallery", "editor"][i % 3].into(),
        screen_before: format!("screens/r{i:05}_before.png"),
        screen_after: format!("screens/r{i:05}_after.png"),
        spec,
        command: String::new(),
        reason: String::new(),
        source: RecordSource::Synthesized,
        created_at: "2000-01-01T00:00:00.000Z".into(),
    }
}

fn eval_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE7A1);
    let mut records = Vec::new();
    let mut preds = BTreeMap::new();
    for i in 0..5000 {
        let rec = gold_record(i, random_gold(&mut rng));
        let raw = if rng.gen_ratio(1, 4) {
            render_response("same", &AgentPrediction::from_spec(&rec.spec))
        } else {
            random_response(&mut rng, &rec.spec).0
        };
        if !rng.gen_ratio(1, 50) {
            preds.insert(rec.id.clone(), raw);
        }
        records.push(rec);
    }
    let report = evaluate(&preds, &records);
    ensure!(report.records.len() == records.len(), "record count");
    let mut disagreements = 0;
    let mut successes = 0;
    for (rec, ev) in records.iter().zip(&report.records) {
        let r_acc = preds
            .get(&rec.id)
            .map(|raw| score_response(raw, &GoldSwipe::new(rec.spec.clone())).2.r_acc)
            .unwrap_or(0.0);
        if ev.success != (r_acc == 1.0) {
            disagreements += 1;
        }
        successes += ev.success as usize;
    }
    ensure!(disagreements == 0, "{disagreements} disagreements");
    ensure!(successes > 0 && successes < records.len(), "degenerate sample: {successes} successes");
    Ok(format!("{} records, {successes} successes, 0 disagreements", records.len()))
}

fn format_suite() -> Outcome {
    let swipe = r#"{"action":"swipe","start":[500,800],"end":[500,200],"direction":"up","duration":300,"text":null}"#;
    let cases: [(&str, String, Option<&str>); 15] = [
        ("reference swipe", format!("<think>Scroll the list down to reveal more items.</think>\n{swipe}"), None),
        (
            "reference tap",
            "<think>Locate the search icon and tap it.</think>\n{\"action\":\"tap\",\"start\":[512,128],\"end\":[],\n\"direction\":null,\"duration\":0,\"text\":null}".into(),
            None,
        ),
        (
            "long press",
            r#"<think>hold</think>{"action":"long_press","start":[10,20],"duration":800}"#.into(),
            None,
        ),
        ("text entry", r#"<think>type</think>{"action":"text","start":[10,20],"end":[],"text":"hi"}"#.into(), None),
        ("two think blocks", format!("<think>a</think><think>b</think>{swipe}"), Some("multiple-think")),
        ("fenced json", format!("<think>a</think>```json\n{swipe}\n```"), Some("code-fence")),
        ("extra field", r#"<think>a</think>{"action":"tap","start":[1,1],"end":[],"x":1}"#.into(), Some("extra-field")),
        (
            "coordinate 1001",
            r#"<think>a</think>{"action":"swipe","start":[1001,5],"end":[5,5]}"#.into(),
            Some("coordinate-out-of-range"),
        ),
        (
            "negative coordinate",
            r#"<think>a</think>{"action":"swipe","start":[5,5],"end":[-1,5]}"#.into(),
            Some("coordinate-out-of-range"),
        ),
        (
            "float coordinate",
            r#"<think>a</think>{"action":"swipe","start":[5.5,5],"end":[5,5]}"#.into(),
            Some("non-integer-coordinate"),
        ),
        ("missing think", swipe.to_string(), Some("missing-think")),
        ("trailing text", format!("<think>a</think>{swipe} done"), Some("trailing-text")),
        ("swipe without end", r#"<think>a</think>{"action":"swipe","start":[5,5]}"#.into(), Some("missing-end")),
        ("tap with end", r#"<think>a</think>{"action":"tap","start":[5,5],"end":[6,6]}"#.into(), Some("tap-end-not-empty")),
        ("unknown action", r#"<think>a</think>{"action":"pinch","start":[5,5]}"#.into(), Some("invalid-action")),
    ];
    let mut failed = Vec::new();
    for (name, raw, want) in &cases {
        let r = parse_response(raw);
        let got = r.violation.map(|v| v.code());
        if r.valid != want.is_none() || got != *want || r.valid != r.prediction.is_some() {
            failed.push(format!("{name}: got {got:?}, want {want:?}"));
        }
    }
    ensure!(failed.is_empty(), "{}", failed.join("; "));
    Ok(format!("{}/{} cases", cases.len(), cases.len()))
}

// ----------------------------------------------------------------------- sim

fn explore_cli(out: &Path) -> Result<Duration, String> {
    let t0 = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_swipekit"))
        .args(["explore", "--sim", "feed", "--steps", "20", "--seed", "7", "--mock-services", "--fixed-clock", "--fixed-ids"])
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(status.status.success(), "explore exited {:?}: {}", status.status, String::from_utf8_lossy(&status.stderr));
    Ok(t0.elapsed())
}

fn replay_in_process() -> Result<usize, String> {
    let mut dev = SimDevice::new(load_scene("feed").map_err(|e| e.to_string())?).with_journal();
    let gw = Gateway::new(Arc::new(SimServices::new(dev.handle())))
        .with_vlm(VlmEndpoint::new(SIM_VLM_URL, "sim"))
        .with_parser(ParserEndpoint::new(SIM_PARSER_URL));
    let cfg = ExploreConfig { seed: 7, detectors: DetectorMode::Vision, describe: true, ..Default::default() };
    let mut sink = MemorySink::default();
    Explorer::new(&mut dev, cfg, "feed")
        .with_gateway(gw)
        .with_clock(FixedClock::default())
        .with_ids(SequentialIds::new("feed-7"))
        .explore(&mut sink)
        .map_err(|e| e.to_string())?;
    let journal = dev.journal();
    let renders: Vec<_> = journal.iter().map(|j| j.before.render()).collect();
    for rec in &sink.swipes {
        let before = &sink.screens[&rec.screen_before];
        let after = &sink.screens[&rec.screen_after];
        let g = GestureCommand::from_spec(&rec.spec, before.width(), before.height()).map_err(|e| e.to_string())?;
        let idx = journal
            .iter()
            .zip(&renders)
            .position(|(j, r)| j.gesture == g && r == before)
            .ok_or_else(|| format!("{}: no journal entry for its gesture and pre-state", rec.id))?;
        let replayed = sim_step(&journal[idx].before, &g).map_err(|e| e.to_string())?.render();
        let (ga, gb) = (to_gray(&replayed).map_err(|e| e.to_string())?, to_gray(after).map_err(|e| e.to_string())?);
        let ratio = changed_ratio(&ga, &gb, &ga.full_roi(), DiffConfig::default().delta).map_err(|e| e.to_string())?;
        ensure!(ratio == 0.0, "{}: replay differs by {ratio}", rec.id);
    }
    Ok(sink.swipes.len())
}

fn end_to_end(out: &Path) -> Outcome {
    let took = explore_cli(out)?;
    ensure!(took < Duration::from_secs(60), "explore took {took:?}");
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let screens = stats["screens_visited"].as_u64().unwrap_or(0);
    ensure!(screens == 3, "visited {screens} of 3 screens");
    let records = read_swipes(&out.join(SWIPES_FILE)).map_err(|e| e.to_string())?;
    ensure!(records.len() >= 10, "only {} records", records.len());
    for r in &records {
        let v = validate_record(r);
        ensure!(v.is_empty(), "{}: {v:?}", r.id);
    }
    let issues = validate_dataset(&records, Some(out));
    ensure!(issues.is_empty(), "dataset issues: {issues:?}");
    let replayed = replay_in_process()?;
    ensure!(replayed == records.len(), "in-process run kept {replayed} records, cli {}", records.len());
    Ok(format!("3/3 screens, {} records, {took:.1?}, all valid, {replayed} replays exact", records.len()))
}

fn duration_sensitivity() -> Outcome {
    let app = load_scene("feed").map_err(|e| e.to_string())?;
    let (w, h) = (app.width, app.height);
    let mut checked = 0;
    let mut min_ratio = f64::INFINITY;
    for id in ["news", "stories"] {
        let target = app.widget(id).ok_or(format!("no widget {id}"))?.bbox;
        for alpha in [0.2, 0.3, 0.45] {
            let cands = candidate_order(region_candidates_with_alpha(&target, w, h, alpha).map_err(|e| e.to_string())?);
            for pair in cands.chunks(2) {
                let (fast, slow) = (&pair[0], &pair[1]);
                ensure!(fast.spec.duration_ms == 150 && slow.spec.duration_ms == 500, "pairing");
                ensure!(fast.spec.start == slow.spec.start && fast.spec.end == slow.spec.end, "endpoints differ");
                // start each pair from the middle of the content so both directions can move
                let mut base = app.clone();
                if let Some(wd) = base.widget_mut(id) {
                    let mid = wd.max_offset() / 2;
                    match &mut wd.kind {
                        swipekit::sim::WidgetKind::VerticalList { offset_px, .. }
                        | swipekit::sim::WidgetKind::HorizontalCarousel { offset_px, .. } => *offset_px = mid,
                        _ => {}
                    }
                }
                let run = |c: &swipekit::synth::SwipeCandidate| -> Result<_, String> {
                    let g = GestureCommand::from_spec(&c.spec, w, h).map_err(|e| e.to_string())?;
                    let img = sim_step(&base, &g).map_err(|e| e.to_string())?.render();
                    to_gray(&img).map_err(|e| e.to_string())
                };
                let (a, b) = (run(fast)?, run(slow)?);
                let ratio = changed_ratio(&a, &b, &target, DiffConfig::default().delta).map_err(|e| e.to_string())?;
                ensure!(
                    ratio > DiffConfig::default().tau,
                    "{id} alpha {alpha} {:?}: fast and slow differ by only {ratio}",
                    fast.spec.direction
                );
                min_ratio = min_ratio.min(ratio);
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} fast/slow pairs, min mutual ratio {min_ratio:.3}"))
}

fn adb_contract() -> Outcome {
    let px = PixelPoint::new;
    let table: [(GestureCommand, &str); 10] = [
        (GestureCommand::swipe(px(540, 1480), px(540, 200), 150), "input swipe 540 1480 540 200 150"),
        (GestureCommand::swipe(px(540, 520), px(540, 1800), 500), "input swipe 540 520 540 1800 500"),
        (GestureCommand::swipe(px(740, 400), px(40, 400), 150), "input swipe 740 400 40 400 150"),
        (GestureCommand::swipe(px(340, 400), px(1040, 400), 500), "input swipe 340 400 1040 400 500"),
        (GestureCommand::swipe(px(540, 950), px(1079, 950), 300), "input swipe 540 950 1079 950 300"),
        (GestureCommand::swipe(px(540, 950), px(0, 950), 300), "input swipe 540 950 0 950 300"),
        (GestureCommand::swipe(px(530, 500), px(530, 20), 300), "input swipe 530 500 530 20 300"),
        (GestureCommand::swipe(px(0, 0), px(1079, 1919), 1), "input swipe 0 0 1079 1919 1"),
        (GestureCommand::swipe(px(12, 34), px(56, 78), 2000), "input swipe 12 34 56 78 2000"),
        (
            GestureCommand::from_spec(
                &SwipeSpec {
                    kind: SwipeKind::Region,
                    start: NormPoint::new(500, 771),
                    end: NormPoint::new(500, 104),
                    direction: Direction::Up,
                    duration_ms: 150,
                    bbox: BBox::new(259, 104, 741, 417),
                    intent: String::new(),
                },
                1080,
                1920,
            )
            .map_err(|e| e.to_string())?,
            "input swipe 540 1480 540 200 150",
        ),
    ];
    for (i, (g, want)) in table.iter().enumerate() {
        let got = render_adb_swipe(g).map_err(|e| format!("row {i}: {e}"))?;
        ensure!(got == *want, "row {i}: {got:?} != {want:?}");
    }
    Ok("10/10 gestures byte-identical".into())
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    explore_cli(second)?;
    for f in [SWIPES_FILE, swipekit::dataset::CLICKS_FILE] {
        let a = std::fs::read(first.join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(second.join(f)).map_err(|e| e.to_string())?;
        ensure!(!a.is_empty() || f != SWIPES_FILE, "{f} is empty");
        ensure!(a == b, "{f} differs between runs");
    }
    Ok("swipes.jsonl and clicks.jsonl byte-identical across two runs".into())
}

fn main() {
    let dir = tempfile::tempdir().expect("tempdir");
    let (run1, run2) = (dir.path().join("run1"), dir.path().join("run2"));
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("candidate-oracle", Box::new(candidate_oracle)),
        ("structural-counts", Box::new(structural_counts)),
        ("diff-verification", Box::new(diff_verification)),
        ("reward-oracle", Box::new(reward_oracle)),
        ("eval-consistency", Box::new(eval_consistency)),
        ("format-conformance", Box::new(format_suite)),
        ("end-to-end-sim", Box::new(|| end_to_end(&run1))),
        ("duration-sensitivity", Box::new(duration_sensitivity)),
        ("adb-contract", Box::new(adb_contract)),
        ("determinism", Box::new(|| determinism(&run1, &run2))),
    ];
    let total = criteria.len();
    let mut failures = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failures += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failures += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!("acceptance: {}/{total} passed", total - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
