//! Seeded synthetic trace generator.
//!
//! Each station carries a fixed amount of traffic over the trace (its mean
//! load times the duration). On a random subset of days
//! (`burst_probability`) part of that traffic arrives as a busy-hour burst
//! whose height is log-normal across stations; the rest follows a noisy
//! diurnal baseline. Tall bursts therefore mean low utilization, and no
//! single station can carry more than its own mass into one hour.
//! `peak_alignment` decides how many stations burst in the global busy hour.
//! Loads are split over a few pinned users per station and emitted as trace
//! records whose observation points are scattered
//! around the planted station center.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Normal};

use crate::geo::{PlanePoint, Projection};
use crate::record::{AppCategory, TraceRecord};

/// Where stations are planted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Layout {
    Uniform,
    /// Stations gather around `hotspots` centers with a normal spread of
    /// `spread_m` meters.
    Clustered {
        hotspots: usize,
        spread_m: f64,
    },
}

/// A typical weekday mobile-traffic shape: night trough, evening peak.
const DEFAULT_DIURNAL: [f64; 24] = [
    30.0, 20.0, 14.0, 10.0, 9.0, 10.0, 15.0, 25.0, 37.0, 45.0, 50.0, 53.0, 55.0, 54.0, 53.0, 52.0,
    53.0, 56.0, 60.0, 64.0, 66.0, 63.0, 52.0, 42.0,
];

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_stations: usize,
    /// Width and height of the area, km.
    pub area_km: (f64, f64),
    pub layout: Layout,
    pub duration_hours: usize,
    /// Log-normal location of the busy-hour burst scale, ln(bytes/hour).
    pub peak_mu: f64,
    /// Log-normal shape of the burst scale.
    pub peak_sigma: f64,
    /// Median of the per-station mean load, bytes/hour.
    pub base_load: f64,
    /// Per-station mean loads are log-normal around `base_load` with shape
    /// `load_spread * peak_sigma`, so `peak_sigma = 0` is fully homogeneous.
    pub load_spread: f64,
    /// Hour-of-day weights (UTC), summing to 1.
    pub diurnal: [f64; 24],
    /// Probability that a station's daily peak falls in the global busy
    /// hour.
    pub peak_alignment: f64,
    /// Probability that a station bursts on a given day.
    pub burst_probability: f64,
    /// Probabilities for facebook, youtube, maps, other; sum to 1.
    pub app_mix: [f64; 4],
    pub users_per_station: usize,
    pub coverage_radius_m: f64,
    /// Relative amplitude of the multiplicative hourly noise, in `[0, 1)`.
    pub noise: f64,
    /// Stations are assigned to operators round-robin.
    pub operators: Vec<String>,
    pub center_lat: f64,
    pub center_lon: f64,
    /// Epoch seconds of the first hour; must be hour-aligned.
    pub start_epoch: i64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let sum: f64 = DEFAULT_DIURNAL.iter().sum();
        Self {
            n_stations: 50,
            area_km: (10.0, 10.0),
            layout: Layout::Uniform,
            duration_hours: 168,
            peak_mu: 16.0,
            peak_sigma: 1.0,
            base_load: 1.0e6,
            load_spread: 0.4,
            diurnal: DEFAULT_DIURNAL.map(|w| w / sum),
            peak_alignment: 0.5,
            burst_probability: 0.3,
            app_mix: [0.30, 0.25, 0.10, 0.35],
            users_per_station: 3,
            coverage_radius_m: 400.0,
            noise: 0.5,
            operators: alloc::vec!["SYNTH".to_string()],
            center_lat: 37.7749,
            center_lon: -122.4194,
            start_epoch: 1_412_121_600,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

impl SynthConfig {
    /// Checks every field, collecting all violations.
    pub fn validate(&self) -> Result<(), SynthError> {
        let mut bad = Vec::new();
        if self.n_stations == 0 {
            bad.push("n_stations must be at least 1".to_string());
        }
        if !(self.area_km.0 > 0.0 && self.area_km.1 > 0.0)
            || !self.area_km.0.is_finite()
            || !self.area_km.1.is_finite()
        {
            bad.push("area_km must be positive".to_string());
        }
        if let Layout::Clustered { hotspots, spread_m } = self.layout {
            if hotspots == 0 {
                bad.push("layout hotspot count must be at least 1".to_string());
            }
            if !(spread_m >= 0.0 && spread_m.is_finite()) {
                bad.push("layout spread must be non-negative".to_string());
            }
        }
        if self.duration_hours < 24 {
            bad.push("duration_hours must be at least 24".to_string());
        }
        if !self.peak_mu.is_finite() {
            bad.push("peak_mu must be finite".to_string());
        }
        if !(self.peak_sigma >= 0.0 && self.peak_sigma.is_finite()) {
            bad.push("peak_sigma must be non-negative".to_string());
        }
        if !(self.base_load >= 0.0 && self.base_load.is_finite()) {
            bad.push("base_load must be non-negative".to_string());
        }
        if !(self.load_spread >= 0.0 && self.load_spread.is_finite()) {
            bad.push("load_spread must be non-negative".to_string());
        }
        check_mix(&mut bad, "diurnal", &self.diurnal);
        if !(0.0..=1.0).contains(&self.peak_alignment) {
            bad.push("peak_alignment must be in [0, 1]".to_string());
        }
        if !(0.0..=1.0).contains(&self.burst_probability) {
            bad.push("burst_probability must be in [0, 1]".to_string());
        }
        check_mix(&mut bad, "app_mix", &self.app_mix);
        if self.users_per_station == 0 {
            bad.push("users_per_station must be at least 1".to_string());
        }
        if !(self.coverage_radius_m > 0.0 && self.coverage_radius_m.is_finite()) {
            bad.push("coverage_radius_m must be positive".to_string());
        }
        if !(0.0..1.0).contains(&self.noise) {
            bad.push("noise must be in [0, 1)".to_string());
        }
        if self.operators.is_empty() || self.operators.iter().any(|o| o.trim().is_empty()) {
            bad.push("operators must be a non-empty list of names".to_string());
        }
        if !(-80.0..=80.0).contains(&self.center_lat) {
            bad.push("center_lat must be in [-80, 80]".to_string());
        }
        if !(-180.0..=180.0).contains(&self.center_lon) {
            bad.push("center_lon must be in [-180, 180]".to_string());
        }
        if self.start_epoch <= 0 || self.start_epoch % 3600 != 0 {
            bad.push("start_epoch must be a positive multiple of 3600".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SynthError::Invalid(bad))
        }
    }
}

fn check_mix(bad: &mut Vec<String>, name: &str, w: &[f64]) {
    if w.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        bad.push(format!("{name} entries must be in [0, 1]"));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        bad.push(format!("{name} must sum to 1 (got {sum})"));
    }
}

/// Ground truth for one planted station.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedStation {
    pub operator: String,
    pub cell_id: String,
    pub lac: String,
    pub lat: f64,
    pub lon: f64,
    /// Planted position relative to the config center, meters.
    pub offset: PlanePoint,
    /// Busy-hour burst scale drawn from the log-normal, bytes/hour.
    pub burst_scale: f64,
    /// Hour of day (UTC) of the station's daily peak.
    pub busy_hour: usize,
    pub total_bytes: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthTrace {
    pub records: Vec<TraceRecord>,
    pub truth: Vec<PlantedStation>,
}

/// Generates a trace. Output depends only on `config`.
pub fn generate_trace(config: &SynthConfig) -> Result<SynthTrace, SynthError> {
    config.validate()?;

    let projection = Projection::new(config.center_lat, config.center_lon);
    let mut layout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let centers = plant_centers(config, &mut layout_rng);

    let global_busy = argmax(&config.diurnal);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let scale_dist = LogNormal::new(config.peak_mu, config.peak_sigma).expect("validated sigma");
    let unit = Uniform::new(0.0f64, 1.0).expect("unit interval");
    let second = Uniform::new(0i64, 3600).expect("hour");

    let mut records = Vec::new();
    let mut truth = Vec::with_capacity(config.n_stations);
    for (s, &center) in centers.iter().enumerate() {
        // one ChaCha stream per station keeps stations independent of each
        // other's draw counts
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(s as u64 + 1);

        let burst_scale = scale_dist.sample(&mut rng);
        let mean_load = config.base_load
            * libm::exp(config.load_spread * config.peak_sigma * normal.sample(&mut rng));
        let busy_hour = if rng.random_bool(config.peak_alignment) {
            global_busy
        } else {
            rng.random_range(0..24)
        };
        let shift = (busy_hour + 24 - global_busy) % 24;

        let operator = config.operators[s % config.operators.len()].clone();
        let cell_id = format!("{}", 10_000 + s);
        let lac = format!("{}", 100 + s / 64);
        let mut total_bytes = 0u64;
        let hourly =
            station_hourly_load(config, &mut rng, mean_load, burst_scale, busy_hour, shift);

        for (h, &load) in hourly.iter().enumerate() {
            let shares: Vec<f64> = (0..config.users_per_station)
                .map(|_| unit.sample(&mut rng) + 1e-9)
                .collect();
            let share_sum: f64 = shares.iter().sum();
            let hour_start = config.start_epoch + 3600 * h as i64;

            for (u, share) in shares.iter().enumerate() {
                let user_bytes = libm::round(load * share / share_sum) as u64;
                // two observations at mirrored offsets split the user's bytes
                let radius = config.coverage_radius_m * libm::sqrt(unit.sample(&mut rng));
                let theta = 2.0 * PI * unit.sample(&mut rng);
                let (dx, dy) = (radius * libm::cos(theta), radius * libm::sin(theta));
                let halves = [user_bytes / 2, user_bytes - user_bytes / 2];
                for (half, sign) in halves.into_iter().zip([1.0, -1.0]) {
                    let p = PlanePoint::new(center.x + sign * dx, center.y + sign * dy);
                    let (lat, lon) = projection.unproject(p);
                    let app = pick_app(&config.app_mix, unit.sample(&mut rng));
                    let up = half / 5;
                    records.push(TraceRecord {
                        timestamp: hour_start + second.sample(&mut rng),
                        user_id: format!("s{s}u{u}"),
                        lat,
                        lon,
                        operator: operator.clone(),
                        cell_id: cell_id.clone(),
                        lac: lac.clone(),
                        app: app.to_string(),
                        bytes_up: up,
                        bytes_down: half - up,
                    });
                    total_bytes += half;
                }
            }
        }

        let (lat, lon) = projection.unproject(center);
        truth.push(PlantedStation {
            operator,
            cell_id,
            lac,
            lat,
            lon,
            offset: center,
            burst_scale,
            busy_hour,
            total_bytes,
        });
    }

    Ok(SynthTrace { records, truth })
}

/// Share of a station's traffic that bursts may take from the baseline.
const MAX_BURST_SHARE: f64 = 0.9;

/// Hourly loads of one station. The station carries `mean_load` bytes/hour
/// on average. Burst hours are drawn first; whatever mass they leave is
/// spread over the diurnal baseline, so a tall burst means a flat, thin
/// remainder rather than extra traffic.
fn station_hourly_load(
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
    mean_load: f64,
    burst_scale: f64,
    busy_hour: usize,
    shift: usize,
) -> Vec<f64> {
    let unit = Uniform::new(0.0f64, 1.0).expect("unit interval");
    let start_hour_of_day = (config.start_epoch.div_euclid(3600)).rem_euclid(24) as usize;
    let mass = mean_load * config.duration_hours as f64;
    let jitter = |rng: &mut ChaCha8Rng| 1.0 + config.noise * (2.0 * unit.sample(rng) - 1.0);

    let mut baseline = Vec::with_capacity(config.duration_hours);
    let mut burst = Vec::with_capacity(config.duration_hours);
    let mut bursting = false;
    for h in 0..config.duration_hours {
        let hour_of_day = (start_hour_of_day + h) % 24;
        if h == 0 || hour_of_day == 0 {
            bursting = rng.random_bool(config.burst_probability);
        }
        baseline.push(config.diurnal[(hour_of_day + 24 - shift) % 24] * jitter(rng));
        burst.push(if bursting && hour_of_day == busy_hour {
            burst_scale * jitter(rng)
        } else {
            0.0
        });
    }

    let mut burst_mass: f64 = burst.iter().sum();
    if burst_mass > MAX_BURST_SHARE * mass {
        let k = MAX_BURST_SHARE * mass / burst_mass;
        burst.iter_mut().for_each(|b| *b *= k);
        burst_mass = MAX_BURST_SHARE * mass;
    }
    let baseline_sum: f64 = baseline.iter().sum();
    let k = if baseline_sum > 0.0 {
        (mass - burst_mass) / baseline_sum
    } else {
        0.0
    };
    baseline
        .iter()
        .zip(&burst)
        .map(|(b, x)| b * k + x)
        .collect()
}

fn plant_centers(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<PlanePoint> {
    let half_w = config.area_km.0 * 500.0;
    let half_h = config.area_km.1 * 500.0;
    let xs = Uniform::new_inclusive(-half_w, half_w).expect("positive area");
    let ys = Uniform::new_inclusive(-half_h, half_h).expect("positive area");
    match config.layout {
        Layout::Uniform => (0..config.n_stations)
            .map(|_| PlanePoint::new(xs.sample(rng), ys.sample(rng)))
            .collect(),
        Layout::Clustered { hotspots, spread_m } => {
            let spots: Vec<PlanePoint> = (0..hotspots)
                .map(|_| PlanePoint::new(xs.sample(rng), ys.sample(rng)))
                .collect();
            let spread = Normal::new(0.0, spread_m).expect("validated spread");
            (0..config.n_stations)
                .map(|_| {
                    let c = spots[rng.random_range(0..hotspots)];
                    PlanePoint::new(
                        (c.x + spread.sample(rng)).clamp(-half_w, half_w),
                        (c.y + spread.sample(rng)).clamp(-half_h, half_h),
                    )
                })
                .collect()
        }
    }
}

fn argmax(w: &[f64; 24]) -> usize {
    let mut best = 0;
    for (i, &v) in w.iter().enumerate() {
        if v > w[best] {
            best = i;
        }
    }
    best
}

fn pick_app(mix: &[f64; 4], u: f64) -> &'static str {
    let mut acc = 0.0;
    for (c, &p) in AppCategory::ALL.iter().zip(mix) {
        acc += p;
        if u < acc {
            return app_package(*c);
        }
    }
    app_package(AppCategory::Other)
}

fn app_package(c: AppCategory) -> &'static str {
    c.client_package().unwrap_or("com.android.chrome")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn small() -> SynthConfig {
        SynthConfig {
            n_stations: 6,
            duration_hours: 24,
            seed: 7,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn default_diurnal_is_normalized() {
        let s: f64 = SynthConfig::default().diurnal.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(SynthConfig::default().validate().is_ok());
    }

    #[test]
    fn same_seed_same_trace() {
        assert_eq!(generate_trace(&small()), generate_trace(&small()));
        let other = SynthConfig { seed: 8, ..small() };
        assert_ne!(
            generate_trace(&small()).unwrap(),
            generate_trace(&other).unwrap()
        );
    }

    #[test]
    fn records_are_valid_and_cells_distinct() {
        let t = generate_trace(&small()).unwrap();
        assert!(t.records.iter().all(|r| r.validate().is_ok()));
        let cells: BTreeSet<_> = t.records.iter().map(|r| (&r.cell_id, &r.lac)).collect();
        assert_eq!(cells.len(), 6);
        assert_eq!(t.records.len(), 6 * 24 * 3 * 2);
        let planted: u64 = t.truth.iter().map(|p| p.total_bytes).sum();
        let seen: u64 = t.records.iter().map(TraceRecord::total_bytes).sum();
        assert_eq!(planted, seen);
    }

    #[test]
    fn zero_sigma_gives_equal_scales() {
        let cfg = SynthConfig {
            peak_sigma: 0.0,
            ..small()
        };
        let t = generate_trace(&cfg).unwrap();
        let first = t.truth[0].burst_scale;
        assert!(t.truth.iter().all(|p| p.burst_scale == first));
    }

    #[test]
    fn full_alignment_uses_global_busy_hour() {
        let cfg = SynthConfig {
            peak_alignment: 1.0,
            ..small()
        };
        let t = generate_trace(&cfg).unwrap();
        assert!(t.truth.iter().all(|p| p.busy_hour == 20));
    }

    #[test]
    fn validation_lists_every_violation() {
        let cfg = SynthConfig {
            n_stations: 0,
            duration_hours: 3,
            peak_alignment: 1.5,
            app_mix: [0.5, 0.5, 0.5, 0.0],
            ..small()
        };
        let Err(SynthError::Invalid(v)) = cfg.validate() else {
            panic!("expected violations");
        };
        assert_eq!(v.len(), 4, "{v:?}");
    }

    #[test]
    fn clustered_layout_stays_in_area() {
        let cfg = SynthConfig {
            layout: Layout::Clustered {
                hotspots: 2,
                spread_m: 20_000.0,
            },
            ..small()
        };
        let t = generate_trace(&cfg).unwrap();
        assert!(t
            .truth
            .iter()
            .all(|p| p.offset.x.abs() <= 5000.0 && p.offset.y.abs() <= 5000.0));
    }
}
