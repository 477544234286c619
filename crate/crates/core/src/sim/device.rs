use std::sync::{Arc, Mutex, MutexGuard};

use image::RgbImage;

use super::{SimApp, SimError};
use crate::device::{Device, DeviceError, DeviceInfo, GestureCommand};

/// Shared view of a running sim; the device and the mock services hold clones.
#[derive(Debug, Clone)]
pub struct SimHandle(Arc<Mutex<SimApp>>);

impl SimHandle {
    pub fn new(app: SimApp) -> Self {
        Self(Arc::new(Mutex::new(app)))
    }

    pub fn lock(&self) -> MutexGuard<'_, SimApp> {
        self.0.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn snapshot(&self) -> SimApp {
        self.lock().clone()
    }
}

/// State before a gesture, and the gesture itself.
#[derive(Debug, Clone)]
pub struct JournalEntry {
    pub before: SimApp,
    pub gesture: GestureCommand,
}

/// [`Device`] backed by a [`SimApp`]. Transitions are atomic, so there is no
/// settle delay.
pub struct SimDevice {
    handle: SimHandle,
    journal: Option<Vec<JournalEntry>>,
    screen_log: Vec<String>,
}

impl SimDevice {
    pub fn new(app: SimApp) -> Self {
        Self::from_handle(SimHandle::new(app))
    }

    pub fn from_handle(handle: SimHandle) -> Self {
        let first = handle.lock().current().to_string();
        Self { handle, journal: None, screen_log: vec![first] }
    }

    /// Records every gesture with its pre-state.
    pub fn with_journal(mut self) -> Self {
        self.journal = Some(Vec::new());
        self
    }

    pub fn handle(&self) -> SimHandle {
        self.handle.clone()
    }

    pub fn journal(&self) -> &[JournalEntry] {
        self.journal.as_deref().unwrap_or(&[])
    }

    /// Screen ids in the order they became current.
    pub fn screen_log(&self) -> &[String] {
        &self.screen_log
    }

    fn note_screen(&mut self) {
        let cur = self.handle.lock().current().to_string();
        if self.screen_log.last() != Some(&cur) {
            self.screen_log.push(cur);
        }
    }
}

impl From<SimError> for DeviceError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::OutOfBounds { x, y, width, height } => DeviceError::OutOfBounds { x, y, width, height },
            other => DeviceError::Command(other.to_string()),
        }
    }
}

impl Device for SimDevice {
    fn info(&mut self) -> Result<DeviceInfo, DeviceError> {
        let app = self.handle.lock();
        Ok(DeviceInfo { id: format!("sim:{}", app.name), width: app.width, height: app.height, density: None })
    }

    fn capture_screenshot(&mut self) -> Result<(RgbImage, DeviceInfo), DeviceError> {
        let img = self.handle.lock().render();
        Ok((img, self.info()?))
    }

    fn exec_gesture(&mut self, g: &GestureCommand) -> Result<(), DeviceError> {
        g.check()?;
        {
            let mut app = self.handle.lock();
            g.check_bounds(app.width, app.height)?;
            if let Some(j) = &mut self.journal {
                j.push(JournalEntry { before: app.clone(), gesture: g.clone() });
            }
            app.step(g)?;
        }
        self.note_screen();
        Ok(())
    }

    fn dump_hierarchy(&mut self) -> Result<String, DeviceError> {
        Ok(self.handle.lock().emit_hierarchy())
    }

    fn back(&mut self) -> Result<(), DeviceError> {
        self.handle.lock().back();
        self.note_screen();
        Ok(())
    }
}
