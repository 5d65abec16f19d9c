//! File-based configuration: environment schedules and simulation
//! parameters, both as versioned TOML documents.

use serde::{Deserialize, Serialize};

use crate::env::{ArmTrack, EnvironmentSchedule, GradualSpec, RewardModel, Segment};
use crate::error::{Error, Result};
use crate::evolution::SimParams;

pub const CONFIG_VERSION: u32 = 1;

/// On-disk schedule description. Exactly one of `segment` (repeated) or
/// `gradual` must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvFile {
    pub version: u32,
    pub arms: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segment: Vec<SegmentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradual: Option<GradualConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub duration: u32,
    pub models: Vec<RewardModel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradualConfig {
    pub horizon: u32,
    pub arm: Vec<ArmTrack>,
}

/// Parses a schedule from its TOML form.
pub fn parse_env_toml(text: &str) -> Result<EnvironmentSchedule> {
    let file: EnvFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.version != CONFIG_VERSION {
        return Err(Error::config(format!(
            "unsupported env config version {}, expected {CONFIG_VERSION}",
            file.version
        )));
    }
    match (file.segment.is_empty(), &file.gradual) {
        (false, None) => {
            let segments = file
                .segment
                .into_iter()
                .map(|s| Segment { duration: s.duration, models: s.models })
                .collect();
            EnvironmentSchedule::from_segments(file.arms, segments)
        }
        (true, Some(g)) => {
            if g.arm.len() != file.arms {
                return Err(Error::config(format!(
                    "gradual spec defines {} arms, header says {}",
                    g.arm.len(),
                    file.arms
                )));
            }
            EnvironmentSchedule::from_gradual(g.horizon, GradualSpec { arms: g.arm.clone() })
        }
        (false, Some(_)) => {
            Err(Error::config("env config must define segments or gradual, not both"))
        }
        (true, None) => Err(Error::config("env config defines no schedule")),
    }
}

/// Renders a schedule back to TOML (segment schedules only carry their
/// segment list; gradual schedules carry the sinusoid tracks).
pub fn env_to_toml(schedule: &EnvironmentSchedule) -> Result<String> {
    let horizon = schedule.horizon();
    let arms = schedule.arms();
    // walk the schedule and reconstruct segments from model changes
    let mut segments: Vec<SegmentConfig> = Vec::new();
    let mut current: Option<(Vec<RewardModel>, u32)> = None;
    let mut gradual = true;
    // segment schedules repeat models between change points; sample each step
    for t in 0..horizon {
        let models = schedule.models_at(t)?;
        match &mut current {
            Some((m, count)) if *m == models => *count += 1,
            _ => {
                if let Some((m, count)) = current.take() {
                    segments.push(SegmentConfig { duration: count, models: m });
                }
                current = Some((models, 1));
            }
        }
    }
    if let Some((m, count)) = current.take() {
        segments.push(SegmentConfig { duration: count, models: m });
    }
    // heuristics: a schedule with per-step changes everywhere is gradual
    if segments.len() < horizon as usize {
        gradual = false;
    }
    if gradual {
        return Err(Error::config(
            "gradual schedules cannot be serialized from samples; keep the original config",
        ));
    }
    let file = EnvFile { version: CONFIG_VERSION, arms, segment: segments, gradual: None };
    toml::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))
}

/// Simulation parameter file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub version: u32,
    #[serde(default)]
    pub params: SimParams,
}

pub fn parse_params_toml(text: &str) -> Result<SimParams> {
    let file: ParamsFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.version != CONFIG_VERSION {
        return Err(Error::config(format!(
            "unsupported params config version {}, expected {CONFIG_VERSION}",
            file.version
        )));
    }
    Ok(file.params)
}

pub fn params_to_toml(params: &SimParams) -> Result<String> {
    let file = ParamsFile { version: CONFIG_VERSION, params: *params };
    toml::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))
}
