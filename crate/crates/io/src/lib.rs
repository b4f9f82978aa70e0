//! Instance generation and file I/O.
//!
//! Provides seeded random instance generation for all supported variants,
//! parsers for the Cordeau multi-depot, TSPLIB/CVRPLIB keyword and Solomon
//! benchmark formats, a canonical JSON instance document, a line-oriented
//! solution file format, and coordinate normalization for the neural policy.
//!
//! Byte-level format details live in `docs/formats.md` at the repo root.

mod cordeau;
mod error;
mod generate;
mod json;
mod normalize;
mod solomon;
mod solution_io;
mod tsplib;

pub use cordeau::parse_cordeau;
pub use error::IoError;
pub use generate::{generate_instance, generate_time_windows, GenConfig, TwParams};
pub use json::{instance_from_json, instance_to_json};
pub use normalize::{normalize_for_policy, NormalizedInstance};
pub use solomon::parse_solomon;
pub use solution_io::{format_solution, parse_solution, read_solution, write_solution};
pub use tsplib::parse_tsplib_like;

use std::path::Path;
use vrp_core::Instance;

/// A parsed instance together with harness-relevant metadata.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub name: String,
    pub instance: Instance,
    /// True when the source convention compares objectives on distances
    /// rounded to the nearest integer (CVRPLIB Set-X); the instance's
    /// distance matrix is already rounded in that case.
    pub rounded: bool,
}

/// Best-effort format detection: JSON, TSPLIB keyword, Solomon or Cordeau.
pub fn detect_format(text: &str) -> InstanceFormat {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return InstanceFormat::Json;
    }
    if text.contains("NODE_COORD_SECTION") || text.contains("EDGE_WEIGHT_TYPE") {
        return InstanceFormat::Tsplib;
    }
    if text.contains("VEHICLE") && text.contains("CUSTOMER") {
        return InstanceFormat::Solomon;
    }
    InstanceFormat::Cordeau
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFormat {
    Json,
    Tsplib,
    Solomon,
    Cordeau,
}

/// Loads an instance file, detecting its format from the content.
pub fn load_instance(path: &Path) -> Result<LoadedInstance, IoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| IoError::File(path.display().to_string(), e.to_string()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string());
    let mut loaded = match detect_format(&text) {
        InstanceFormat::Json => LoadedInstance {
            name: name.clone(),
            instance: instance_from_json(&text)?,
            rounded: false,
        },
        InstanceFormat::Tsplib => parse_tsplib_like(&text)?,
        InstanceFormat::Solomon => parse_solomon(&text)?,
        InstanceFormat::Cordeau => LoadedInstance {
            name: name.clone(),
            instance: parse_cordeau(&text)?,
            rounded: false,
        },
    };
    if loaded.name.is_empty() {
        loaded.name = name;
    }
    Ok(loaded)
}
