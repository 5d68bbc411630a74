//! Flat `key = value` scenario files.
//!
//! Blank lines and `#` comments are ignored. Relative paths are resolved
//! against the directory holding the config file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cargohitch::dispatch::Strategy;
use cargohitch::engine::RunConfig;
use cargohitch::time::Window;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { key: String, line: usize },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
}

/// Where requests of one kind come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DemandSource {
    /// Hourly profile file, sampled with the demand seed.
    Profile(PathBuf),
    /// Explicit request file.
    Requests(PathBuf),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub network_nodes: PathBuf,
    pub network_links: PathBuf,
    pub passengers: DemandSource,
    pub parcels: DemandSource,
    pub spatial_weights: Option<PathBuf>,
    pub depots: Option<PathBuf>,
    pub background_volumes: Option<PathBuf>,
    pub run: RunConfig,
    pub passenger_total: usize,
    pub parcel_total: usize,
    pub shared_fraction: f64,
    pub demand_seed: u64,
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "network_nodes",
    "network_links",
    "passenger_profile",
    "passenger_requests",
    "parcel_profile",
    "parcel_requests",
    "spatial_weights",
    "depots",
    "background_volumes",
    "output_dir",
    "strategy",
    "fleet_size",
    "seat_capacity",
    "cycle_s",
    "max_passenger_wait_s",
    "parcel_approach_wait_s",
    "idle_eligibility_s",
    "detour_factor",
    "dwell_s",
    "am_peak_start_s",
    "am_peak_end_s",
    "pm_peak_start_s",
    "pm_peak_end_s",
    "multi_parcel",
    "passenger_total",
    "parcel_total",
    "shared_fraction",
    "demand_seed",
    "seeds",
    "iterations",
    "tolerance",
    "bin_width_s",
];

struct Entries {
    base: PathBuf,
    map: HashMap<String, String>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| ConfigError::Value {
                key: key.to_owned(),
                message: format!("{v:?}: {e}"),
            }),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|v| self.base.join(v))
    }

    fn required_path(&self, key: &'static str) -> Result<PathBuf, ConfigError> {
        self.path(key).ok_or(ConfigError::Missing(key))
    }

    fn source(&self, profile: &str, requests: &str) -> Result<DemandSource, ConfigError> {
        match (self.path(profile), self.path(requests)) {
            (Some(_), Some(_)) => Err(ConfigError::Value {
                key: requests.to_owned(),
                message: format!("give either `{profile}` or `{requests}`, not both"),
            }),
            (Some(p), None) => Ok(DemandSource::Profile(p)),
            (None, Some(r)) => Ok(DemandSource::Requests(r)),
            (None, None) => Ok(DemandSource::None),
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_owned(),
        message: message.into(),
    }
}

fn parse_seeds(raw: &str) -> Result<Vec<u64>, ConfigError> {
    let seeds = raw
        .split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| invalid("seeds", format!("{raw:?}: {e}")))?;
    if seeds.is_empty() {
        return Err(invalid("seeds", "at least one seed is required"));
    }
    Ok(seeds)
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    key: key.to_owned(),
                    line,
                });
            }
            if map.insert(key.to_owned(), value.to_owned()).is_some() {
                return Err(ConfigError::Duplicate {
                    key: key.to_owned(),
                    line,
                });
            }
        }
        let e = Entries {
            base: base.to_owned(),
            map,
        };

        let mut run = RunConfig::default();
        let s = &mut run.strategy;
        s.strategy = match e.raw("strategy") {
            None => Strategy::Base,
            Some(v) => v.parse().map_err(|m: String| invalid("strategy", m))?,
        };
        s.cycle_s = e.parse("cycle_s", s.cycle_s)?;
        s.max_passenger_wait_s = e.parse("max_passenger_wait_s", s.max_passenger_wait_s)?;
        s.parcel_approach_wait_s = e.parse("parcel_approach_wait_s", s.parcel_approach_wait_s)?;
        s.idle_eligibility_s = e.parse("idle_eligibility_s", s.idle_eligibility_s)?;
        s.detour_factor = e.parse("detour_factor", s.detour_factor)?;
        s.dwell_s = e.parse("dwell_s", s.dwell_s)?;
        s.am_peak = Window::new(
            e.parse("am_peak_start_s", s.am_peak.start)?,
            e.parse("am_peak_end_s", s.am_peak.end)?,
        );
        s.pm_peak = Window::new(
            e.parse("pm_peak_start_s", s.pm_peak.start)?,
            e.parse("pm_peak_end_s", s.pm_peak.end)?,
        );
        s.multi_parcel = e.parse("multi_parcel", s.multi_parcel)?;
        run.fleet_size = e.parse("fleet_size", run.fleet_size)?;
        run.seat_capacity = e.parse("seat_capacity", run.seat_capacity)?;
        run.iterations = e.parse("iterations", run.iterations)?;
        run.tolerance = e.parse("tolerance", run.tolerance)?;
        run.bin_width_s = e.parse("bin_width_s", run.bin_width_s)?;

        let cfg = Self {
            network_nodes: e.required_path("network_nodes")?,
            network_links: e.required_path("network_links")?,
            passengers: e.source("passenger_profile", "passenger_requests")?,
            parcels: e.source("parcel_profile", "parcel_requests")?,
            spatial_weights: e.path("spatial_weights"),
            depots: e.path("depots"),
            background_volumes: e.path("background_volumes"),
            run,
            passenger_total: e.parse("passenger_total", 5000)?,
            parcel_total: e.parse("parcel_total", 600)?,
            shared_fraction: e.parse("shared_fraction", 0.27)?,
            demand_seed: e.parse("demand_seed", 1)?,
            seeds: match e.raw("seeds") {
                Some(raw) => parse_seeds(raw)?,
                None => vec![1, 2, 3],
            },
            output_dir: e.path("output_dir"),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that do not touch the file system.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = &self.run;
        if r.fleet_size == 0 {
            return Err(invalid("fleet_size", "must be at least 1"));
        }
        if r.seat_capacity == 0 {
            return Err(invalid("seat_capacity", "must be at least 1"));
        }
        if r.iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.shared_fraction) {
            return Err(invalid("shared_fraction", "must lie in [0, 1]"));
        }
        if self.passengers == DemandSource::None {
            return Err(ConfigError::Missing("passenger_profile"));
        }
        if self.parcels != DemandSource::None && self.depots.is_none() {
            return Err(ConfigError::Missing("depots"));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(invalid("seeds", "seeds must be distinct"));
        }
        r.validate().map_err(|e| invalid("strategy settings", e.to_string()))
    }
}
