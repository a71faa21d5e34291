//! Presets, the flat-key JSON config format, and run metadata.
//!
//! Config files are a single flat JSON object whose keys mirror module
//! names with dotted sections, e.g. `{"env.a": 9.61, "run.seed": 7}`.
//! A file only needs the keys it overrides; the rest come from the chosen
//! preset. `to_flat` emits every key, so the resolved config echoed into
//! the metadata parses back to an equal config.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::channel::{EnvParams, FadingMode};
use crate::error::{Error, Result};
use crate::harness::RunConfig;
use crate::mobility::Rect;
use crate::world::TxPowers;

/// Built-in scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Workstation-sized: 1000 m x 1000 m, 50 UEs, 2 UAVs, T = 200,
    /// 2000 episodes.
    Desk,
    /// Full experiment: 5000 m x 5000 m, 500 UEs, 4 UAVs, T = 500,
    /// 50000 episodes.
    Paper,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::Config(format!(
                "unknown scale {other:?} (expected \"desk\" or \"paper\")"
            ))),
        }
    }
}

pub fn preset(scale: Scale) -> RunConfig {
    match scale {
        Scale::Desk => desk_preset(),
        Scale::Paper => paper_preset(),
    }
}

pub fn desk_preset() -> RunConfig {
    let area = (1000.0, 1000.0);
    RunConfig {
        env: EnvParams::urban(),
        powers: TxPowers::default(),
        area,
        altitude_m: 100.0,
        n_ues: 50,
        n_uavs: 2,
        gbs_positions: vec![(500.0, 500.0)],
        steps_per_episode: 200,
        episodes: 2000,
        hyper: Default::default(),
        ue_step_m: 1.0,
        phase_t1: 66,
        phase_t2: 133,
        concentrate_fraction: 0.9,
        section1: Rect {
            x0: 0.0,
            y0: 0.0,
            x1: area.0 / 2.0,
            y1: area.1 / 2.0,
        },
        seed: 1,
        fading: FadingMode::Deterministic,
        uav_step_m: 1.0,
        init_grid_resolution: 25,
        replay_ue_trajectory: true,
    }
}

pub fn paper_preset() -> RunConfig {
    let area = (5000.0, 5000.0);
    RunConfig {
        env: EnvParams::urban(),
        powers: TxPowers::default(),
        area,
        altitude_m: 100.0,
        n_ues: 500,
        n_uavs: 4,
        gbs_positions: vec![(2500.0, 2500.0)],
        steps_per_episode: 500,
        episodes: 50_000,
        hyper: Default::default(),
        ue_step_m: 1.0,
        phase_t1: 166,
        phase_t2: 333,
        concentrate_fraction: 0.9,
        section1: Rect {
            x0: 0.0,
            y0: 0.0,
            x1: area.0 / 2.0,
            y1: area.1 / 2.0,
        },
        seed: 1,
        fading: FadingMode::Deterministic,
        uav_step_m: 1.0,
        init_grid_resolution: 25,
        replay_ue_trajectory: true,
    }
}

/// Serialize every config key into the flat map (sorted by key).
pub fn to_flat(cfg: &RunConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("env.a".into(), json!(cfg.env.a));
    m.insert("env.b".into(), json!(cfg.env.b));
    m.insert("env.eta_los_db".into(), json!(cfg.env.eta_los_db));
    m.insert("env.eta_nlos_db".into(), json!(cfg.env.eta_nlos_db));
    m.insert("env.carrier_hz".into(), json!(cfg.env.carrier_hz));
    m.insert(
        "env.terrestrial_alpha".into(),
        json!(cfg.env.terrestrial_alpha),
    );
    m.insert(
        "env.terrestrial_eta_db".into(),
        json!(cfg.env.terrestrial_eta_db),
    );
    m.insert("env.bandwidth_hz".into(), json!(cfg.env.bandwidth_hz));
    m.insert("env.noise_dbm".into(), json!(cfg.env.noise_dbm));
    m.insert(
        "env.pl_max_db".into(),
        cfg.env.pl_max_db.map_or(Value::Null, |v| json!(v)),
    );
    m.insert("world.area_width_m".into(), json!(cfg.area.0));
    m.insert("world.area_height_m".into(), json!(cfg.area.1));
    m.insert("world.altitude_m".into(), json!(cfg.altitude_m));
    m.insert("world.n_ues".into(), json!(cfg.n_ues));
    m.insert("world.n_uavs".into(), json!(cfg.n_uavs));
    m.insert(
        "world.gbs_positions".into(),
        json!(cfg
            .gbs_positions
            .iter()
            .map(|&(x, y)| vec![x, y])
            .collect::<Vec<_>>()),
    );
    m.insert("world.uav_power_dbm".into(), json!(cfg.powers.uav_dbm));
    m.insert("world.gbs_power_dbm".into(), json!(cfg.powers.gbs_dbm));
    m.insert("mobility.ue_step_m".into(), json!(cfg.ue_step_m));
    m.insert("mobility.t1".into(), json!(cfg.phase_t1));
    m.insert("mobility.t2".into(), json!(cfg.phase_t2));
    m.insert(
        "mobility.concentrate_fraction".into(),
        json!(cfg.concentrate_fraction),
    );
    m.insert(
        "mobility.section1".into(),
        json!([cfg.section1.x0, cfg.section1.y0, cfg.section1.x1, cfg.section1.y1]),
    );
    m.insert("dqn.learning_rate".into(), json!(cfg.hyper.learning_rate));
    m.insert("dqn.discount".into(), json!(cfg.hyper.discount));
    m.insert("dqn.capacity".into(), json!(cfg.hyper.capacity));
    m.insert("dqn.batch_size".into(), json!(cfg.hyper.batch_size));
    m.insert("dqn.target_sync".into(), json!(cfg.hyper.target_sync));
    m.insert("dqn.epsilon".into(), json!(cfg.hyper.epsilon));
    m.insert(
        "run.steps_per_episode".into(),
        json!(cfg.steps_per_episode),
    );
    m.insert("run.episodes".into(), json!(cfg.episodes));
    m.insert("run.seed".into(), json!(cfg.seed));
    m.insert("run.fading".into(), json!(cfg.fading.name()));
    m.insert("run.uav_step_m".into(), json!(cfg.uav_step_m));
    m.insert(
        "run.init_grid_resolution".into(),
        json!(cfg.init_grid_resolution),
    );
    m.insert(
        "run.replay_ue_trajectory".into(),
        json!(cfg.replay_ue_trajectory),
    );
    m
}

fn need_f64(key: &str, v: &Value) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Config(format!("{key} must be a number, got {v}")))
}

fn need_u64(key: &str, v: &Value) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| Error::Config(format!("{key} must be a non-negative integer, got {v}")))
}

fn need_usize(key: &str, v: &Value) -> Result<usize> {
    Ok(need_u64(key, v)? as usize)
}

fn need_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| Error::Config(format!("{key} must be a boolean, got {v}")))
}

fn need_str<'v>(key: &str, v: &'v Value) -> Result<&'v str> {
    v.as_str()
        .ok_or_else(|| Error::Config(format!("{key} must be a string, got {v}")))
}

/// Apply flat-key overrides onto `cfg`. Unknown keys are rejected.
pub fn apply_flat(cfg: &mut RunConfig, map: &Map<String, Value>) -> Result<()> {
    for (key, v) in map {
        match key.as_str() {
            "env.a" => cfg.env.a = need_f64(key, v)?,
            "env.b" => cfg.env.b = need_f64(key, v)?,
            "env.eta_los_db" => cfg.env.eta_los_db = need_f64(key, v)?,
            "env.eta_nlos_db" => cfg.env.eta_nlos_db = need_f64(key, v)?,
            "env.carrier_hz" => cfg.env.carrier_hz = need_f64(key, v)?,
            "env.terrestrial_alpha" => cfg.env.terrestrial_alpha = need_f64(key, v)?,
            "env.terrestrial_eta_db" => cfg.env.terrestrial_eta_db = need_f64(key, v)?,
            "env.bandwidth_hz" => cfg.env.bandwidth_hz = need_f64(key, v)?,
            "env.noise_dbm" => cfg.env.noise_dbm = need_f64(key, v)?,
            "env.pl_max_db" => {
                cfg.env.pl_max_db = if v.is_null() {
                    None
                } else {
                    Some(need_f64(key, v)?)
                }
            }
            "world.area_width_m" => cfg.area.0 = need_f64(key, v)?,
            "world.area_height_m" => cfg.area.1 = need_f64(key, v)?,
            "world.altitude_m" => cfg.altitude_m = need_f64(key, v)?,
            "world.n_ues" => cfg.n_ues = need_usize(key, v)?,
            "world.n_uavs" => cfg.n_uavs = need_usize(key, v)?,
            "world.gbs_positions" => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| Error::Config(format!("{key} must be an array of [x, y]")))?;
                let mut positions = Vec::with_capacity(arr.len());
                for item in arr {
                    let pair = item
                        .as_array()
                        .filter(|p| p.len() == 2)
                        .ok_or_else(|| {
                            Error::Config(format!("{key} entries must be [x, y], got {item}"))
                        })?;
                    positions.push((need_f64(key, &pair[0])?, need_f64(key, &pair[1])?));
                }
                cfg.gbs_positions = positions;
            }
            "world.uav_power_dbm" => cfg.powers.uav_dbm = need_f64(key, v)?,
            "world.gbs_power_dbm" => cfg.powers.gbs_dbm = need_f64(key, v)?,
            "mobility.ue_step_m" => cfg.ue_step_m = need_f64(key, v)?,
            "mobility.t1" => cfg.phase_t1 = need_u64(key, v)?,
            "mobility.t2" => cfg.phase_t2 = need_u64(key, v)?,
            "mobility.concentrate_fraction" => cfg.concentrate_fraction = need_f64(key, v)?,
            "mobility.section1" => {
                let arr = v
                    .as_array()
                    .filter(|a| a.len() == 4)
                    .ok_or_else(|| {
                        Error::Config(format!("{key} must be [x0, y0, x1, y1], got {v}"))
                    })?;
                cfg.section1 = Rect {
                    x0: need_f64(key, &arr[0])?,
                    y0: need_f64(key, &arr[1])?,
                    x1: need_f64(key, &arr[2])?,
                    y1: need_f64(key, &arr[3])?,
                };
            }
            "dqn.learning_rate" => cfg.hyper.learning_rate = need_f64(key, v)?,
            "dqn.discount" => cfg.hyper.discount = need_f64(key, v)?,
            "dqn.capacity" => cfg.hyper.capacity = need_usize(key, v)?,
            "dqn.batch_size" => cfg.hyper.batch_size = need_usize(key, v)?,
            "dqn.target_sync" => cfg.hyper.target_sync = need_u64(key, v)?,
            "dqn.epsilon" => cfg.hyper.epsilon = need_f64(key, v)?,
            "run.steps_per_episode" => cfg.steps_per_episode = need_u64(key, v)?,
            "run.episodes" => cfg.episodes = need_u64(key, v)?,
            "run.seed" => cfg.seed = need_u64(key, v)?,
            "run.fading" => cfg.fading = FadingMode::from_name(need_str(key, v)?)?,
            "run.uav_step_m" => cfg.uav_step_m = need_f64(key, v)?,
            "run.init_grid_resolution" => cfg.init_grid_resolution = need_usize(key, v)?,
            "run.replay_ue_trajectory" => cfg.replay_ue_trajectory = need_bool(key, v)?,
            other => {
                return Err(Error::Config(format!("unknown config key {other:?}")));
            }
        }
    }
    Ok(())
}

/// Resolve a config: preset, then optional file overrides, then an optional
/// seed override.
pub fn resolve(scale: Scale, config_path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = preset(scale);
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)?;
        let map = value
            .as_object()
            .ok_or_else(|| Error::Config("config file must be a JSON object".into()))?;
        apply_flat(&mut cfg, map)?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run metadata: resolved config, code version, and the interpretation
/// flags naming how underspecified baselines were realized. Contains no
/// timestamps so reruns are byte-identical.
pub fn metadata_json(cfg: &RunConfig, extra: &[(&str, Value)]) -> Value {
    let mut obj = Map::new();
    obj.insert(
        "code_version".into(),
        json!(env!("CARGO_PKG_VERSION")),
    );
    obj.insert("config".into(), Value::Object(to_flat(cfg)));
    obj.insert(
        "interpretation".into(),
        json!({
            "exhaustive": "one-step-joint",
            "init_search": format!("greedy-grid-{}", cfg.init_grid_resolution),
        }),
    );
    obj.insert("seed".into(), json!(cfg.seed));
    for (k, v) in extra {
        obj.insert((*k).into(), v.clone());
    }
    Value::Object(obj)
}

/// Parse a metadata document (or bare flat map) back into a config.
pub fn config_from_metadata(value: &Value) -> Result<RunConfig> {
    let map = value
        .get("config")
        .and_then(Value::as_object)
        .or_else(|| value.as_object())
        .ok_or_else(|| Error::Config("metadata has no config object".into()))?;
    let mut cfg = desk_preset();
    apply_flat(&mut cfg, map)?;
    Ok(cfg)
}
