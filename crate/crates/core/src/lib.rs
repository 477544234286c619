//! Synthesis, verification and scoring of parameterized swipe gestures on
//! mobile GUIs.

pub mod device;
pub mod diff;
pub mod model;
pub mod perception;
pub mod sim;
pub mod synth;
pub mod reward;
pub mod dataset;
pub mod explore;
pub mod cli;
pub mod config;
