use std::path::PathBuf;
use std::process::Command;
use std::time::Duration;

use image::RgbImage;

use super::{render_adb_command, Device, DeviceError, DeviceInfo, GestureCommand, ADB_BACK_COMMAND, DEFAULT_SETTLE_MS};

/// Runs one `adb` invocation and returns stdout.
pub trait AdbRunner: Send {
    fn run(&mut self, args: &[String]) -> Result<Vec<u8>, DeviceError>;
}

struct ProcessRunner {
    adb: PathBuf,
}

impl AdbRunner for ProcessRunner {
    fn run(&mut self, args: &[String]) -> Result<Vec<u8>, DeviceError> {
        let out = Command::new(&self.adb)
            .args(args)
            .output()
            .map_err(|e| DeviceError::Unreachable(format!("{}: {e}", self.adb.display())))?;
        if !out.status.success() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            if stderr.contains("not found") || stderr.contains("offline") || stderr.contains("unauthorized") {
                return Err(DeviceError::Unreachable(stderr.trim().to_string()));
            }
            return Err(DeviceError::Command(stderr.trim().to_string()));
        }
        Ok(out.stdout)
    }
}

/// A device driven through the `adb` platform tool.
pub struct AdbDevice {
    serial: String,
    runner: Box<dyn AdbRunner>,
    settle: Duration,
    info: Option<DeviceInfo>,
}

impl AdbDevice {
    pub fn new(serial: impl Into<String>) -> Self {
        Self::with_adb(serial, "adb")
    }

    pub fn with_adb(serial: impl Into<String>, adb: impl Into<PathBuf>) -> Self {
        Self::with_runner(serial, Box::new(ProcessRunner { adb: adb.into() }))
    }

    pub fn with_runner(serial: impl Into<String>, runner: Box<dyn AdbRunner>) -> Self {
        Self {
            serial: serial.into(),
            runner,
            settle: Duration::from_millis(DEFAULT_SETTLE_MS),
            info: None,
        }
    }

    pub fn settle_ms(mut self, ms: u64) -> Self {
        self.settle = Duration::from_millis(ms);
        self
    }

    pub fn serial(&self) -> &str {
        &self.serial
    }

    fn adb(&mut self, tail: &[&str]) -> Result<Vec<u8>, DeviceError> {
        let mut args = vec!["-s".to_string(), self.serial.clone()];
        args.extend(tail.iter().map(|s| s.to_string()));
        self.runner.run(&args)
    }

    fn shell(&mut self, cmd: &str) -> Result<(), DeviceError> {
        self.adb(&["shell", cmd]).map(|_| ())
    }

    fn settle(&self) {
        if !self.settle.is_zero() {
            std::thread::sleep(self.settle);
        }
    }
}

impl Device for AdbDevice {
    fn info(&mut self) -> Result<DeviceInfo, DeviceError> {
        if let Some(info) = &self.info {
            return Ok(info.clone());
        }
        self.capture_screenshot().map(|(_, info)| info)
    }

    fn capture_screenshot(&mut self) -> Result<(RgbImage, DeviceInfo), DeviceError> {
        let png = self.adb(&["exec-out", "screencap", "-p"])?;
        let img = image::load_from_memory_with_format(&png, image::ImageFormat::Png)
            .map_err(|e| DeviceError::Decode(e.to_string()))?
            .to_rgb8();
        // orientation can change between captures, so dimensions are refreshed every time
        let info = DeviceInfo {
            id: self.serial.clone(),
            width: img.width(),
            height: img.height(),
            density: self.info.as_ref().and_then(|i| i.density),
        };
        self.info = Some(info.clone());
        Ok((img, info))
    }

    fn exec_gesture(&mut self, g: &GestureCommand) -> Result<(), DeviceError> {
        let info = self.info()?;
        g.check_bounds(info.width, info.height)?;
        let cmd = render_adb_command(g)?;
        self.shell(&cmd)?;
        self.settle();
        Ok(())
    }

    fn dump_hierarchy(&mut self) -> Result<String, DeviceError> {
        let raw = self.adb(&["exec-out", "uiautomator", "dump", "/dev/tty"])?;
        let text = String::from_utf8_lossy(&raw);
        let start = text.find('<').ok_or_else(|| DeviceError::DumpFailed(text.trim().to_string()))?;
        let end = text.rfind('>').ok_or_else(|| DeviceError::DumpFailed(text.trim().to_string()))?;
        Ok(text[start..=end].to_string())
    }

    fn back(&mut self) -> Result<(), DeviceError> {
        self.shell(ADB_BACK_COMMAND)?;
        self.settle();
        Ok(())
    }
}
