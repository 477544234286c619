//! On-disk dataset: `swipes.jsonl`, `clicks.jsonl`, and a `screens/`
//! directory of PNGs referenced by relative path.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_record, BBox, NormPoint, SwipeRecord, Violation, ViolationRule};

pub const SWIPES_FILE: &str = "swipes.jsonl";
pub const CLICKS_FILE: &str = "clicks.jsonl";
pub const SCREENS_DIR: &str = "screens";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("cannot encode screenshot {0}: {1}")]
    Image(String, String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClickOutcome {
    NewScreen,
    Revisited,
    NoChange,
}

/// One exploration click.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClickRecord {
    pub id: String,
    pub app: String,
    pub screen: String,
    pub screen_before: String,
    pub point: NormPoint,
    pub bbox: BBox,
    pub label: String,
    pub outcome: ClickOutcome,
    pub created_at: String,
}

/// Destination for explorer output.
pub trait Sink {
    /// Stores a screenshot and returns the reference to put in records.
    fn save_screen(&mut self, name: &str, img: &RgbImage) -> Result<String, DatasetError>;
    fn append_swipe(&mut self, rec: &SwipeRecord) -> Result<(), DatasetError>;
    fn append_click(&mut self, rec: &ClickRecord) -> Result<(), DatasetError>;
}

impl<S: Sink + ?Sized> Sink for &mut S {
    fn save_screen(&mut self, name: &str, img: &RgbImage) -> Result<String, DatasetError> {
        (**self).save_screen(name, img)
    }
    fn append_swipe(&mut self, rec: &SwipeRecord) -> Result<(), DatasetError> {
        (**self).append_swipe(rec)
    }
    fn append_click(&mut self, rec: &ClickRecord) -> Result<(), DatasetError> {
        (**self).append_click(rec)
    }
}

/// Writes a dataset directory. Existing JSONL files are truncated.
pub struct DatasetWriter {
    dir: PathBuf,
    swipes: BufWriter<File>,
    clicks: BufWriter<File>,
}

impl DatasetWriter {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let dir = dir.as_ref().to_path_buf();
        let screens = dir.join(SCREENS_DIR);
        fs::create_dir_all(&screens).map_err(io_err(&screens))?;
        let open = |name: &str| -> Result<BufWriter<File>, DatasetError> {
            let p = dir.join(name);
            File::create(&p).map(BufWriter::new).map_err(io_err(&p))
        };
        Ok(Self { swipes: open(SWIPES_FILE)?, clicks: open(CLICKS_FILE)?, dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn flush(&mut self) -> Result<(), DatasetError> {
        let dir = self.dir.clone();
        self.swipes.flush().map_err(io_err(&dir))?;
        self.clicks.flush().map_err(io_err(&dir))
    }
}

impl Sink for DatasetWriter {
    fn save_screen(&mut self, name: &str, img: &RgbImage) -> Result<String, DatasetError> {
        let rel = format!("{SCREENS_DIR}/{name}.png");
        let path = self.dir.join(&rel);
        img.save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| DatasetError::Image(path.display().to_string(), e.to_string()))?;
        Ok(rel)
    }

    fn append_swipe(&mut self, rec: &SwipeRecord) -> Result<(), DatasetError> {
        let p = self.dir.join(SWIPES_FILE);
        writeln!(self.swipes, "{}", rec.to_json_line()).map_err(io_err(&p))?;
        // one line per record even if the run is interrupted
        self.swipes.flush().map_err(io_err(&p))
    }

    fn append_click(&mut self, rec: &ClickRecord) -> Result<(), DatasetError> {
        let p = self.dir.join(CLICKS_FILE);
        let line = serde_json::to_string(rec).expect("click serialization");
        writeln!(self.clicks, "{line}").map_err(io_err(&p))?;
        self.clicks.flush().map_err(io_err(&p))
    }
}

impl Drop for DatasetWriter {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

/// In-memory sink for tests and embedding.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub screens: BTreeMap<String, RgbImage>,
    pub swipes: Vec<SwipeRecord>,
    pub clicks: Vec<ClickRecord>,
}

impl Sink for MemorySink {
    fn save_screen(&mut self, name: &str, img: &RgbImage) -> Result<String, DatasetError> {
        let rel = format!("{SCREENS_DIR}/{name}.png");
        self.screens.insert(rel.clone(), img.clone());
        Ok(rel)
    }

    fn append_swipe(&mut self, rec: &SwipeRecord) -> Result<(), DatasetError> {
        self.swipes.push(rec.clone());
        Ok(())
    }

    fn append_click(&mut self, rec: &ClickRecord) -> Result<(), DatasetError> {
        self.clicks.push(rec.clone());
        Ok(())
    }
}

/// Reads JSONL rows with `parse`, skipping blank lines.
pub fn read_jsonl<T>(path: &Path, parse: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, DatasetError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = parse(&line).map_err(|message| DatasetError::Parse { path: path.to_path_buf(), line: i + 1, message })?;
        out.push(v);
    }
    Ok(out)
}

pub fn read_swipes(path: &Path) -> Result<Vec<SwipeRecord>, DatasetError> {
    read_jsonl(path, |l| SwipeRecord::from_json_line(l).map_err(|e| e.to_string()))
}

/// Resolves a dataset path: a directory means its `swipes.jsonl`.
pub fn swipes_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(SWIPES_FILE)
    } else {
        p.to_path_buf()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetIssue {
    /// Zero-based index of the record.
    pub index: usize,
    pub id: String,
    pub violation: Violation,
}

/// Runs [`validate_record`] on every record, then checks id uniqueness and,
/// when `base` is given, that screenshot references exist under it.
pub fn validate_dataset(records: &[SwipeRecord], base: Option<&Path>) -> Vec<DatasetIssue> {
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for (index, r) in records.iter().enumerate() {
        let mut push = |v: Violation| issues.push(DatasetIssue { index, id: r.id.clone(), violation: v });
        for v in validate_record(r) {
            push(v);
        }
        if !r.id.is_empty() && !seen.insert(r.id.as_str()) {
            push(Violation::new("id", ViolationRule::DuplicateId));
        }
        if let Some(base) = base {
            for (field, rel) in [("screen_before", &r.screen_before), ("screen_after", &r.screen_after)] {
                if !rel.trim().is_empty() && !base.join(rel).is_file() {
                    push(Violation::new(field, ViolationRule::UnresolvedScreenRef));
                }
            }
        }
    }
    issues
}
