//! File formats written and read by the CLI.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use netcover::{Ball, CoverageReport, Device, Norm, Placement, Point};
use serde::{Deserialize, Serialize};

use crate::commands::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub norm: Norm,
}

/// `{"devices": [{x, y, radius, norm}], "report": {...}}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementFile {
    pub devices: Vec<DeviceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CoverageReport>,
}

impl PlacementFile {
    pub fn new(placement: &Placement, report: Option<CoverageReport>) -> Self {
        let devices = placement
            .devices
            .iter()
            .map(|d| DeviceRecord {
                x: d.position.x,
                y: d.position.y,
                radius: d.ball.radius,
                norm: d.ball.norm,
            })
            .collect();
        PlacementFile { devices, report }
    }

    pub fn placement(&self) -> Result<Placement, CliError> {
        let devices = self
            .devices
            .iter()
            .map(|d| {
                let ball =
                    Ball::new(d.norm, d.radius).map_err(|e| CliError::Usage(e.to_string()))?;
                Ok(Device::new(Point::new(d.x, d.y), ball))
            })
            .collect::<Result<_, CliError>>()?;
        Ok(Placement::new(devices))
    }
}

/// Everything needed to re-run a command; written beside its outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub flags: serde_json::Value,
    pub rng_seed: u64,
    pub version: &'static str,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    flags: serde_json::Value,
    rng_seed: u64,
    elapsed: Duration,
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command: command.to_string(),
        argv: std::env::args().collect(),
        flags,
        rng_seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: elapsed.as_secs_f64(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    write_file(
        &dir.join(format!("{command}.manifest.json")),
        &to_json(&manifest),
    )
}
