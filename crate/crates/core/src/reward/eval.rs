use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{score_response, AccuracyHits, GoldSwipe, RewardBreakdown};
use crate::model::{ActionKind, SwipeRecord};

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionLine {
    pub id: String,
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureMode {
    MissingPrediction,
    InvalidFormat,
    WrongType,
    StartOutOfRegion,
    StartDistance,
    EndDistance,
    Direction,
    Duration,
}

impl FailureMode {
    pub const ALL: [FailureMode; 8] = [
        FailureMode::MissingPrediction,
        FailureMode::InvalidFormat,
        FailureMode::WrongType,
        FailureMode::StartOutOfRegion,
        FailureMode::StartDistance,
        FailureMode::EndDistance,
        FailureMode::Direction,
        FailureMode::Duration,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureMode::MissingPrediction => "missing-prediction",
            FailureMode::InvalidFormat => "invalid-format",
            FailureMode::WrongType => "wrong-type",
            FailureMode::StartOutOfRegion => "start-out-of-region",
            FailureMode::StartDistance => "start-distance",
            FailureMode::EndDistance => "end-distance",
            FailureMode::Direction => "direction",
            FailureMode::Duration => "duration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEval {
    pub id: String,
    pub app: String,
    pub command: String,
    pub screen_before: String,
    pub screen_after: String,
    pub success: bool,
    pub failures: Vec<FailureMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AppStats {
    pub total: usize,
    pub successes: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub successes: usize,
    pub accuracy: f64,
    pub per_app: BTreeMap<String, AppStats>,
    /// Failed records per mode; a record may count under several modes.
    pub failures: BTreeMap<FailureMode, usize>,
    /// Predictions whose id matched no gold record.
    pub unmatched_predictions: usize,
    pub records: Vec<RecordEval>,
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn failure_modes(hits: &AccuracyHits) -> Vec<FailureMode> {
    let mut out = Vec::new();
    if !hits.start_in_region {
        out.push(FailureMode::StartOutOfRegion);
    }
    if !hits.start_near {
        out.push(FailureMode::StartDistance);
    }
    if !hits.end_near {
        out.push(FailureMode::EndDistance);
    }
    if !hits.direction {
        out.push(FailureMode::Direction);
    }
    if !hits.duration {
        out.push(FailureMode::Duration);
    }
    out
}

fn eval_one(raw: Option<&str>, rec: &SwipeRecord) -> RecordEval {
    let mut out = RecordEval {
        id: rec.id.clone(),
        app: rec.app.clone(),
        command: rec.command.clone(),
        screen_before: rec.screen_before.clone(),
        screen_after: rec.screen_after.clone(),
        success: false,
        failures: Vec::new(),
        violation: None,
        reward: None,
    };
    let Some(raw) = raw else {
        out.failures.push(FailureMode::MissingPrediction);
        return out;
    };
    let (f, hits, reward) = score_response(raw, &GoldSwipe::new(rec.spec.clone()));
    out.reward = Some(reward);
    match &f.prediction {
        None => {
            out.failures.push(FailureMode::InvalidFormat);
            out.violation = f.violation.map(|v| v.code().to_string());
        }
        Some(p) if p.action != ActionKind::Swipe => out.failures.push(FailureMode::WrongType),
        Some(_) => {
            out.failures = failure_modes(&hits);
            out.success = out.failures.is_empty();
        }
    }
    out
}

/// Scores every gold record against the prediction with the same id. A
/// record succeeds when the response parses, predicts a swipe, and meets all
/// four accuracy criteria.
pub fn evaluate(preds: &BTreeMap<String, String>, gold: &[SwipeRecord]) -> EvalReport {
    let mut report = EvalReport::default();
    for rec in gold {
        let r = eval_one(preds.get(&rec.id).map(String::as_str), rec);
        let app = report.per_app.entry(rec.app.clone()).or_default();
        app.total += 1;
        if r.success {
            app.successes += 1;
            report.successes += 1;
        }
        for m in &r.failures {
            *report.failures.entry(*m).or_default() += 1;
        }
        report.records.push(r);
    }
    report.total = gold.len();
    report.accuracy = ratio(report.successes, report.total);
    for app in report.per_app.values_mut() {
        app.accuracy = ratio(app.successes, app.total);
    }
    report.unmatched_predictions = preds.keys().filter(|id| !gold.iter().any(|g| &g.id == *id)).count();
    report
}
