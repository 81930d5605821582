//! `key = value` config files for the generator.
//!
//! One setting per line; `#` starts a comment. `seed` is required, every
//! other key falls back to [`SynthConfig::default`]. Lists are
//! comma-separated.
//!
//! ```text
//! seed = 7
//! n_stations = 200
//! area_km = 10, 10
//! layout = clustered
//! hotspots = 5
//! spread_m = 800
//! peak_sigma = 2.5
//! operators = A, B
//! ```

use std::collections::BTreeMap;

use edgeplace_core::synth::Layout;
use edgeplace_core::SynthConfig;

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("`{key}`: {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

const KEYS: &[&str] = &[
    "seed",
    "n_stations",
    "area_km",
    "layout",
    "hotspots",
    "spread_m",
    "duration_hours",
    "peak_mu",
    "peak_sigma",
    "base_load",
    "load_spread",
    "diurnal",
    "peak_alignment",
    "burst_probability",
    "app_mix",
    "users_per_station",
    "coverage_radius_m",
    "noise",
    "operators",
    "center_lat",
    "center_lon",
    "start_epoch",
];

pub fn parse_synth_config(text: &str) -> Result<SynthConfig, ConfigError> {
    let mut entries: BTreeMap<&str, &str> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        if entries.insert(key, value.trim()).is_some() {
            return Err(ConfigError::Duplicate {
                line: i + 1,
                key: key.to_string(),
            });
        }
    }

    let mut cfg = SynthConfig::default();
    let v = Values(&entries);
    cfg.seed = v.scalar("seed")?.ok_or(ConfigError::Missing("seed"))?;
    set(&mut cfg.n_stations, v.scalar("n_stations")?);
    if let Some(a) = v.list::<f64>("area_km")? {
        match a[..] {
            [w, h] => cfg.area_km = (w, h),
            [s] => cfg.area_km = (s, s),
            _ => return Err(v.bad("area_km", "expected `width, height`")),
        }
    }
    let hotspots: Option<usize> = v.scalar("hotspots")?;
    let spread: Option<f64> = v.scalar("spread_m")?;
    match v.get("layout") {
        None | Some("uniform") => {
            if hotspots.is_some() || spread.is_some() {
                return Err(v.bad("layout", "hotspots/spread_m need `layout = clustered`"));
            }
        }
        Some("clustered") => {
            cfg.layout = Layout::Clustered {
                hotspots: hotspots.unwrap_or(5),
                spread_m: spread.unwrap_or(1000.0),
            }
        }
        Some(_) => return Err(v.bad("layout", "expected `uniform` or `clustered`")),
    }
    set(&mut cfg.duration_hours, v.scalar("duration_hours")?);
    set(&mut cfg.peak_mu, v.scalar("peak_mu")?);
    set(&mut cfg.peak_sigma, v.scalar("peak_sigma")?);
    set(&mut cfg.base_load, v.scalar("base_load")?);
    set(&mut cfg.load_spread, v.scalar("load_spread")?);
    if let Some(d) = v.list::<f64>("diurnal")? {
        cfg.diurnal = d
            .try_into()
            .map_err(|_| v.bad("diurnal", "expected 24 weights"))?;
    }
    set(&mut cfg.peak_alignment, v.scalar("peak_alignment")?);
    set(&mut cfg.burst_probability, v.scalar("burst_probability")?);
    if let Some(m) = v.list::<f64>("app_mix")? {
        cfg.app_mix = m.try_into().map_err(|_| {
            v.bad(
                "app_mix",
                "expected 4 weights: facebook, youtube, maps, other",
            )
        })?;
    }
    set(&mut cfg.users_per_station, v.scalar("users_per_station")?);
    set(&mut cfg.coverage_radius_m, v.scalar("coverage_radius_m")?);
    set(&mut cfg.noise, v.scalar("noise")?);
    if let Some(ops) = v.list::<String>("operators")? {
        cfg.operators = ops;
    }
    set(&mut cfg.center_lat, v.scalar("center_lat")?);
    set(&mut cfg.center_lon, v.scalar("center_lon")?);
    set(&mut cfg.start_epoch, v.scalar("start_epoch")?);

    cfg.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

struct Values<'a>(&'a BTreeMap<&'a str, &'a str>);

impl Values<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).copied()
    }

    fn bad(&self, key: &str, message: &str) -> ConfigError {
        ConfigError::Value {
            key: key.to_string(),
            message: message.to_string(),
        }
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key)
            .map(|s| {
                s.parse()
                    .map_err(|_| self.bad(key, &format!("cannot parse `{s}`")))
            })
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        self.get(key)
            .map(|s| {
                s.split(',')
                    .map(|item| {
                        item.trim()
                            .parse()
                            .map_err(|_| self.bad(key, &format!("cannot parse `{}`", item.trim())))
                    })
                    .collect()
            })
            .transpose()
    }
}
