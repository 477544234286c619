//! Strict parser for agent responses: one `<think>` block followed by exactly
//! one JSON action object.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::model::{ActionKind, AgentPrediction, Direction, NormPoint, NORM_MAX};

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const FIELDS: [&str; 6] = ["action", "start", "end", "direction", "duration", "text"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatViolation {
    Empty,
    MissingThink,
    MultipleThink,
    TextBeforeThink,
    CodeFence,
    MissingJson,
    InvalidJson,
    MultipleJson,
    TrailingText,
    NotAnObject,
    ExtraField,
    InvalidAction,
    MissingStart,
    NonIntegerCoordinate,
    CoordinateOutOfRange,
    TapEndNotEmpty,
    MissingEnd,
    InvalidDirection,
    MissingDuration,
    InvalidDuration,
    MissingText,
    InvalidText,
}

impl FormatViolation {
    pub fn code(self) -> &'static str {
        match self {
            FormatViolation::Empty => "empty",
            FormatViolation::MissingThink => "missing-think",
            FormatViolation::MultipleThink => "multiple-think",
            FormatViolation::TextBeforeThink => "text-before-think",
            FormatViolation::CodeFence => "code-fence",
            FormatViolation::MissingJson => "missing-json",
            FormatViolation::InvalidJson => "invalid-json",
            FormatViolation::MultipleJson => "multiple-json",
            FormatViolation::TrailingText => "trailing-text",
            FormatViolation::NotAnObject => "not-an-object",
            FormatViolation::ExtraField => "extra-field",
            FormatViolation::InvalidAction => "invalid-action",
            FormatViolation::MissingStart => "missing-start",
            FormatViolation::NonIntegerCoordinate => "non-integer-coordinate",
            FormatViolation::CoordinateOutOfRange => "coordinate-out-of-range",
            FormatViolation::TapEndNotEmpty => "tap-end-not-empty",
            FormatViolation::MissingEnd => "missing-end",
            FormatViolation::InvalidDirection => "invalid-direction",
            FormatViolation::MissingDuration => "missing-duration",
            FormatViolation::InvalidDuration => "invalid-duration",
            FormatViolation::MissingText => "missing-text",
            FormatViolation::InvalidText => "invalid-text",
        }
    }
}

/// Outcome of [`parse_response`]. `valid` holds iff `prediction` is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatResult {
    pub valid: bool,
    pub prediction: Option<AgentPrediction>,
    pub violation: Option<FormatViolation>,
}

impl FormatResult {
    fn ok(p: AgentPrediction) -> Self {
        Self { valid: true, prediction: Some(p), violation: None }
    }

    fn bad(v: FormatViolation) -> Self {
        Self { valid: false, prediction: None, violation: Some(v) }
    }
}

pub fn parse_response(raw: &str) -> FormatResult {
    match parse_inner(raw) {
        Ok(p) => FormatResult::ok(p),
        Err(v) => FormatResult::bad(v),
    }
}

fn parse_inner(raw: &str) -> Result<AgentPrediction, FormatViolation> {
    use FormatViolation as V;
    if raw.trim().is_empty() {
        return Err(V::Empty);
    }
    let opens = raw.matches(THINK_OPEN).count();
    let closes = raw.matches(THINK_CLOSE).count();
    if opens > 1 || closes > 1 {
        return Err(V::MultipleThink);
    }
    let (Some(open), Some(close)) = (raw.find(THINK_OPEN), raw.find(THINK_CLOSE)) else {
        return Err(V::MissingThink);
    };
    if close < open {
        return Err(V::MissingThink);
    }
    if !raw[..open].trim().is_empty() {
        return Err(V::TextBeforeThink);
    }
    let tail = raw[close + THINK_CLOSE.len()..].trim();
    if tail.contains("```") {
        return Err(V::CodeFence);
    }
    if tail.is_empty() {
        return Err(V::MissingJson);
    }
    let mut stream = serde_json::Deserializer::from_str(tail).into_iter::<Value>();
    let value = match stream.next() {
        Some(Ok(v)) => v,
        _ => return Err(if tail.starts_with('{') { V::InvalidJson } else { V::MissingJson }),
    };
    let rest = tail[stream.byte_offset()..].trim();
    if !rest.is_empty() {
        let another = serde_json::Deserializer::from_str(rest).into_iter::<Value>().next();
        return Err(if matches!(another, Some(Ok(_))) { V::MultipleJson } else { V::TrailingText });
    }
    let Value::Object(obj) = value else {
        return Err(V::NotAnObject);
    };
    parse_action(&obj)
}

fn point(v: &Value) -> Result<Option<NormPoint>, FormatViolation> {
    use FormatViolation as V;
    let Value::Array(a) = v else {
        return Err(V::NonIntegerCoordinate);
    };
    if a.is_empty() {
        return Ok(None);
    }
    if a.len() != 2 {
        return Err(V::NonIntegerCoordinate);
    }
    let mut c = [0i32; 2];
    for (slot, n) in c.iter_mut().zip(a) {
        let i = n.as_i64().ok_or(V::NonIntegerCoordinate)?;
        if !(0..=NORM_MAX as i64).contains(&i) {
            return Err(V::CoordinateOutOfRange);
        }
        *slot = i as i32;
    }
    Ok(Some(NormPoint::from(c)))
}

fn present<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

fn parse_action(obj: &Map<String, Value>) -> Result<AgentPrediction, FormatViolation> {
    use FormatViolation as V;
    if obj.keys().any(|k| !FIELDS.contains(&k.as_str())) {
        return Err(V::ExtraField);
    }
    let action = present(obj, "action")
        .and_then(Value::as_str)
        .and_then(ActionKind::parse)
        .ok_or(V::InvalidAction)?;
    let start = match present(obj, "start") {
        Some(v) => point(v)?.ok_or(V::MissingStart)?,
        None => return Err(V::MissingStart),
    };
    let end = match present(obj, "end") {
        Some(v) => point(v)?,
        None => None,
    };
    let direction = match present(obj, "direction") {
        Some(v) => Some(v.as_str().and_then(Direction::parse).ok_or(V::InvalidDirection)?),
        None => None,
    };
    let duration_ms = match present(obj, "duration") {
        Some(v) => Some(v.as_u64().and_then(|d| u32::try_from(d).ok()).ok_or(V::InvalidDuration)?),
        None => None,
    };
    let text = match present(obj, "text") {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(V::InvalidText),
        None => None,
    };
    match action {
        ActionKind::Tap if end.is_some() => return Err(V::TapEndNotEmpty),
        ActionKind::Swipe if end.is_none() => return Err(V::MissingEnd),
        ActionKind::LongPress if !duration_ms.is_some_and(|d| d > 0) => return Err(V::MissingDuration),
        ActionKind::Text if text.is_none() => return Err(V::MissingText),
        _ => {}
    }
    Ok(AgentPrediction { action, start, end, direction, duration_ms, text })
}

/// Canonical response text for `pred`, accepted by [`parse_response`].
pub fn render_response(thought: &str, pred: &AgentPrediction) -> String {
    let end: Value = match pred.end {
        Some(e) => serde_json::json!([e.x, e.y]),
        None => serde_json::json!([]),
    };
    let body = serde_json::json!({
        "action": pred.action,
        "start": [pred.start.x, pred.start.y],
        "end": end,
        "direction": pred.direction,
        "duration": pred.duration_ms,
        "text": pred.text,
    });
    format!("{THINK_OPEN}{}{THINK_CLOSE}{body}", thought.replace(THINK_OPEN, "").replace(THINK_CLOSE, ""))
}
