//! The `swipekit` command line.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{AppConfig, DeviceBackend};
use crate::dataset::{read_jsonl, read_swipes, swipes_path, validate_dataset, DatasetWriter};
use crate::device::{AdbDevice, Device};
use crate::explore::{DetectorMode, ExploreStats, Explorer, FixedClock, SequentialIds, SystemClock, UuidIds};
use crate::perception::gateway::{Gateway, ParserEndpoint, Transport, UreqTransport, VlmEndpoint};
use crate::reward::{evaluate, render_html, render_markdown, score_response, EvalReport, GoldSwipe, PredictionLine};
use crate::sim::{load_scene, SimDevice, SimServices, SIM_PARSER_URL, SIM_VLM_URL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEVICE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "swipekit", version, about = "Synthesize, verify and score swipe gestures on mobile GUIs")]
pub struct Cli {
    /// TOML configuration file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed for candidate sampling and click selection
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explore an app and record verified swipes
    Explore(ExploreArgs),
    /// Compute per-record rewards for agent responses
    Score(PairArgs),
    /// Evaluate agent responses and write an evaluation report as JSON
    Eval(PairArgs),
    /// Render an evaluation report as Markdown and HTML
    Report(ReportArgs),
    /// Check a dataset for schema and invariant violations
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorArg {
    Vision,
    Hierarchy,
    Both,
}

impl From<DetectorArg> for DetectorMode {
    fn from(d: DetectorArg) -> Self {
        match d {
            DetectorArg::Vision => DetectorMode::Vision,
            DetectorArg::Hierarchy => DetectorMode::Hierarchy,
            DetectorArg::Both => DetectorMode::Both,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    /// Drive the simulator with this scene file or built-in fixture name
    #[arg(long, value_name = "SCENE", conflicts_with = "serial")]
    pub sim: Option<String>,
    /// Drive the ADB device with this serial
    #[arg(long)]
    pub serial: Option<String>,
    /// Path to the adb binary
    #[arg(long, value_name = "PATH")]
    pub adb: Option<String>,
    /// Maximum exploration steps
    #[arg(long)]
    pub steps: Option<u32>,
    /// Target detector [default: vision when a vision endpoint is configured, else hierarchy]
    #[arg(long, value_enum)]
    pub detector: Option<DetectorArg>,
    /// Generate a command for every retained swipe (needs a vision endpoint)
    #[arg(long, overrides_with = "no_describe")]
    pub describe: bool,
    /// Do not generate commands
    #[arg(long)]
    pub no_describe: bool,
    /// Answer vision and parser requests from the simulator (sim only)
    #[arg(long)]
    pub mock_services: bool,
    /// Vision chat endpoint URL
    #[arg(long, value_name = "URL")]
    pub vlm_url: Option<String>,
    /// Vision model name
    #[arg(long)]
    pub vlm_model: Option<String>,
    /// Element parser endpoint URL
    #[arg(long, value_name = "URL")]
    pub parser_url: Option<String>,
    /// Maximum targets per screen
    #[arg(long, value_name = "N")]
    pub target_cap: Option<usize>,
    /// Wait after each gesture, in milliseconds (ADB only)
    #[arg(long, value_name = "MS")]
    pub settle_ms: Option<u64>,
    /// Per-pixel intensity change threshold
    #[arg(long)]
    pub delta: Option<f64>,
    /// Changed-pixel ratio that makes a swipe effective
    #[arg(long)]
    pub tau: Option<f64>,
    /// Exit 0 even when no swipe was retained
    #[arg(long)]
    pub allow_empty: bool,
    /// Use a constant timestamp in records
    #[arg(long)]
    pub fixed_clock: bool,
    /// Use sequential record ids derived from app name and seed
    #[arg(long)]
    pub fixed_ids: bool,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Predictions JSONL: one {"id", "response"} object per line
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    /// Gold dataset: a swipes JSONL file or a dataset directory
    #[arg(long, value_name = "PATH")]
    pub gold: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Evaluation report JSON written by `eval`
    #[arg(long, value_name = "FILE")]
    pub eval: PathBuf,
    /// Prefix for screenshot links
    #[arg(long, value_name = "PREFIX", default_value = "")]
    pub images: String,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// A swipes JSONL file or a dataset directory
    pub dataset: PathBuf,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(m: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_USAGE, message: m.to_string() }
}

fn device_err(m: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_DEVICE, message: m.to_string() }
}

fn failed(m: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_FAILURE, message: m.to_string() }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("SWIPEKIT_LOG").try_init();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load_config(cli: &Cli) -> Result<AppConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => AppConfig::load(p).map_err(usage)?,
        None => AppConfig::default(),
    };
    cfg.apply_env(|k| std::env::var(k).ok());
    if let Some(seed) = cli.seed {
        cfg.explore.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &AppConfig) -> Result<PathBuf, Failure> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| failed(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn dispatch(cli: &Cli) -> Result<i32, Failure> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Explore(a) => cmd_explore(cfg, a),
        Command::Score(a) => cmd_score(cfg, a),
        Command::Eval(a) => cmd_eval(cfg, a),
        Command::Report(a) => cmd_report(cfg, a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn cmd_explore(mut cfg: AppConfig, a: &ExploreArgs) -> Result<i32, Failure> {
    if let Some(s) = &a.sim {
        cfg.device.sim = Some(s.clone());
        cfg.device.adb = None;
    }
    if let Some(s) = &a.serial {
        cfg.device.adb = Some(s.clone());
        cfg.device.sim = None;
    }
    if let Some(p) = &a.adb {
        cfg.device.adb_path = Some(p.clone());
    }
    if let Some(v) = &a.vlm_url {
        cfg.vlm.url = Some(v.clone());
    }
    if let Some(v) = &a.vlm_model {
        cfg.vlm.model = Some(v.clone());
    }
    if let Some(v) = &a.parser_url {
        cfg.parser.url = Some(v.clone());
    }
    if let Some(v) = a.steps {
        cfg.explore.max_steps = v;
    }
    if let Some(v) = a.target_cap {
        cfg.explore.per_screen_target_cap = v;
    }
    if let Some(v) = a.settle_ms {
        cfg.explore.settle_ms = v;
    }
    if let Some(v) = a.delta {
        cfg.diff.delta = v;
    }
    if let Some(v) = a.tau {
        cfg.diff.tau = v;
    }
    cfg.explore.diff = cfg.diff;
    cfg.validate().map_err(usage)?;
    let backend = cfg.backend().map_err(usage)?;

    let mut device: Box<dyn Device>;
    let mut gateway: Option<Gateway> = None;
    let app_name;
    match &backend {
        DeviceBackend::Sim { scene } => {
            let app = load_scene(scene).map_err(usage)?;
            app_name = app.name.clone();
            let dev = SimDevice::new(app);
            if a.mock_services {
                let transport: Arc<dyn Transport> = Arc::new(SimServices::new(dev.handle()));
                gateway = Some(
                    Gateway::new(transport)
                        .with_vlm(VlmEndpoint::new(SIM_VLM_URL, "sim"))
                        .with_parser(ParserEndpoint::new(SIM_PARSER_URL)),
                );
            }
            device = Box::new(dev);
        }
        DeviceBackend::Adb { serial, adb_path } => {
            if a.mock_services {
                return Err(usage("--mock-services requires the simulator backend"));
            }
            let dev = match adb_path {
                Some(p) => AdbDevice::with_adb(serial.clone(), p),
                None => AdbDevice::new(serial.clone()),
            };
            app_name = serial.clone();
            device = Box::new(dev.settle_ms(cfg.explore.settle_ms));
        }
    }
    if gateway.is_none() {
        let vlm = cfg.vlm_endpoint();
        let parser = cfg.parser_endpoint();
        if vlm.is_some() || parser.is_some() {
            let mut gw = Gateway::new(Arc::new(UreqTransport::default()));
            if let Some(v) = vlm {
                gw = gw.with_vlm(v);
            }
            if let Some(p) = parser {
                gw = gw.with_parser(p);
            }
            gateway = Some(gw);
        }
    }
    let has_vlm = gateway.as_ref().is_some_and(Gateway::has_vlm);
    let mode: DetectorMode = match a.detector {
        Some(d) => d.into(),
        None if has_vlm => DetectorMode::Vision,
        None => DetectorMode::Hierarchy,
    };
    if matches!(mode, DetectorMode::Vision | DetectorMode::Both) && !has_vlm {
        return Err(usage(format!(
            "--detector {} needs a vision endpoint (--vlm-url, {} or [vlm] url)",
            if mode == DetectorMode::Both { "both" } else { "vision" },
            crate::config::ENV_VLM_URL
        )));
    }
    cfg.explore.detectors = mode;
    cfg.explore.describe = if a.no_describe {
        false
    } else if a.describe {
        if !has_vlm {
            return Err(usage("--describe needs a vision endpoint"));
        }
        true
    } else {
        has_vlm
    };

    let out = out_dir(&cfg)?;
    let mut sink = DatasetWriter::create(&out).map_err(failed)?;
    let seed = cfg.explore.seed;
    let mut explorer = Explorer::new(&mut device, cfg.explore.clone(), app_name.clone());
    if let Some(gw) = gateway {
        explorer = explorer.with_gateway(gw);
    }
    explorer = if a.fixed_clock { explorer.with_clock(FixedClock::default()) } else { explorer.with_clock(SystemClock) };
    explorer = if a.fixed_ids {
        explorer.with_ids(SequentialIds::new(format!("{app_name}-{seed}")))
    } else {
        explorer.with_ids(UuidIds)
    };
    let stats: ExploreStats = explorer.explore(&mut sink).map_err(failed)?;
    sink.flush().map_err(failed)?;
    write_file(&out.join("stats.json"), &to_json(&stats))?;
    println!(
        "steps {} screens {} clicks {} candidates {} retained {} vlm_calls {} errors {}",
        stats.steps,
        stats.screens_visited,
        stats.clicks_executed,
        stats.candidates_executed,
        stats.swipes_retained,
        stats.vlm_calls,
        stats.errors
    );
    if let Some(e) = &stats.device_error {
        return Err(device_err(format!("device failure: {e}")));
    }
    if stats.swipes_retained == 0 && stats.transport_errors > 0 {
        return Err(device_err("no swipe was retained: the vision or parser service was unreachable"));
    }
    if stats.swipes_retained == 0 && !a.allow_empty {
        return Err(failed("no swipe was retained (use --allow-empty to accept)"));
    }
    Ok(EXIT_OK)
}

fn read_predictions(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let lines = read_jsonl(path, |l| serde_json::from_str::<PredictionLine>(l).map_err(|e| e.to_string())).map_err(usage)?;
    if lines.is_empty() {
        return Err(usage(format!("{}: no predictions", path.display())));
    }
    let mut out = BTreeMap::new();
    for p in lines {
        if out.insert(p.id.clone(), p.response).is_some() {
            return Err(usage(format!("{}: duplicate prediction id {}", path.display(), p.id)));
        }
    }
    Ok(out)
}

fn read_gold(path: &Path) -> Result<Vec<crate::model::SwipeRecord>, Failure> {
    read_swipes(&swipes_path(path)).map_err(usage)
}

#[derive(Serialize)]
struct ScoreLine<'a> {
    id: &'a str,
    format_valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<&'static str>,
    #[serde(flatten)]
    reward: crate::reward::RewardBreakdown,
}

#[derive(Debug, Default, Serialize)]
struct ScoreSummary {
    scored: usize,
    unmatched_predictions: usize,
    mean_r_acc: f64,
    mean_r_format: f64,
    mean_r_type: f64,
    mean_total: f64,
}

fn cmd_score(cfg: AppConfig, a: &PairArgs) -> Result<i32, Failure> {
    let preds = read_predictions(&a.pred)?;
    let gold = read_gold(&a.gold)?;
    let out = out_dir(&cfg)?;
    let mut lines = String::new();
    let mut sum = ScoreSummary::default();
    let mut matched = 0usize;
    for rec in &gold {
        let Some(raw) = preds.get(&rec.id) else { continue };
        matched += 1;
        let (f, _, b) = score_response(raw, &GoldSwipe::new(rec.spec.clone()));
        let line = ScoreLine { id: &rec.id, format_valid: f.valid, violation: f.violation.map(|v| v.code()), reward: b };
        lines.push_str(&serde_json::to_string(&line).expect("serializable"));
        lines.push('\n');
        sum.mean_r_acc += b.r_acc;
        sum.mean_r_format += b.r_format;
        sum.mean_r_type += b.r_type;
        sum.mean_total += b.total_norm;
    }
    sum.scored = matched;
    sum.unmatched_predictions = preds.len() - matched;
    if matched > 0 {
        let n = matched as f64;
        sum.mean_r_acc /= n;
        sum.mean_r_format /= n;
        sum.mean_r_type /= n;
        sum.mean_total /= n;
    }
    write_file(&out.join("scores.jsonl"), &lines)?;
    write_file(&out.join("score_summary.json"), &to_json(&sum))?;
    println!(
        "scored {} unmatched {} mean_total {:.4} mean_r_acc {:.4}",
        sum.scored, sum.unmatched_predictions, sum.mean_total, sum.mean_r_acc
    );
    if matched == 0 {
        return Err(usage("no prediction id matches the gold dataset"));
    }
    Ok(EXIT_OK)
}

fn cmd_eval(cfg: AppConfig, a: &PairArgs) -> Result<i32, Failure> {
    let preds = read_predictions(&a.pred)?;
    let gold = read_gold(&a.gold)?;
    let report = evaluate(&preds, &gold);
    let out = out_dir(&cfg)?;
    write_file(&out.join("eval.json"), &to_json(&report))?;
    println!("records {} successes {} accuracy {:.4}", report.total, report.successes, report.accuracy);
    Ok(EXIT_OK)
}

fn cmd_report(cfg: AppConfig, a: &ReportArgs) -> Result<i32, Failure> {
    let text = fs::read_to_string(&a.eval).map_err(|e| usage(format!("{}: {e}", a.eval.display())))?;
    let report: EvalReport = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.eval.display())))?;
    let out = out_dir(&cfg)?;
    write_file(&out.join("report.md"), &render_markdown(&report, &a.images))?;
    write_file(&out.join("report.html"), &render_html(&report, &a.images))?;
    println!("wrote {} and {}", out.join("report.md").display(), out.join("report.html").display());
    Ok(EXIT_OK)
}

fn cmd_validate(a: &ValidateArgs) -> Result<i32, Failure> {
    let path = swipes_path(&a.dataset);
    let records = read_swipes(&path).map_err(usage)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let issues = validate_dataset(&records, Some(&base));
    for i in &issues {
        println!("record {} ({}): {}", i.index + 1, i.id, i.violation);
    }
    println!("{} records, {} violations", records.len(), issues.len());
    Ok(if issues.is_empty() { EXIT_OK } else { EXIT_FAILURE })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn help_exits_zero_and_bad_flag_two() {
        assert_eq!(run(["swipekit", "--help"]), EXIT_OK);
        assert_eq!(run(["swipekit", "explore", "--bogus"]), EXIT_USAGE);
    }
}
