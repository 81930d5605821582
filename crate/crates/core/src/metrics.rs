//! Server-utilization proxy: average-to-peak efficiency of aggregated
//! station loads, threshold sweeps, and peak-load statistics.
//!
//! Efficiency is evaluated as `total / (len * peak)`, which equals
//! `mean / peak` but keeps byte-valued inputs exact up to the final
//! division. The merge bounds checked in the test suite rely on this.

use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::{MergeTree, Partition};
use crate::geo::{hulls_intersect, Hull};
use crate::recon::{LoadSeries, Station};
use crate::record::AppFilter;

/// Neighbor peak ratio at or above which two cells count as disparate
/// (two orders of magnitude).
pub const DISPARITY_RATIO: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("empty series")]
    EmptySeries,
    #[error("zero peak")]
    ZeroPeak,
    #[error("no load series for station {0}")]
    MissingLoad(usize),
    #[error("load series are not aligned on a common hour range")]
    Misaligned,
    #[error("no station has a nonzero peak")]
    NoNonzeroPeak,
    #[error("undefined maximum: every bin is zero")]
    UndefinedMaximum,
}

/// `mean(bins) / max(bins)`.
pub fn efficiency(series: &LoadSeries) -> Result<f64, MetricsError> {
    efficiency_of(&series.bins)
}

pub fn efficiency_of(bins: &[f64]) -> Result<f64, MetricsError> {
    let load = AggregateLoad::of(bins).ok_or(MetricsError::EmptySeries)?;
    load.efficiency().ok_or(MetricsError::ZeroPeak)
}

/// Summary of one aggregated series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateLoad {
    pub total: f64,
    pub peak: f64,
    pub len: usize,
}

impl AggregateLoad {
    pub fn of(bins: &[f64]) -> Option<Self> {
        (!bins.is_empty()).then(|| Self {
            total: bins.iter().sum(),
            peak: bins.iter().copied().fold(0.0, f64::max),
            len: bins.len(),
        })
    }

    pub fn average(&self) -> f64 {
        self.total / self.len as f64
    }

    /// Peak capacity-hours: the denominator of the efficiency ratio.
    pub fn capacity(&self) -> f64 {
        self.len as f64 * self.peak
    }

    pub fn efficiency(&self) -> Option<f64> {
        (self.peak > 0.0).then(|| self.total / self.capacity())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterEfficiency {
    /// Index into the partition's cluster list.
    pub cluster: usize,
    pub stations: usize,
    pub avg_load: f64,
    pub peak_load: f64,
    pub efficiency: f64,
}

/// Efficiency of every cluster of one partition, plus aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyReport {
    pub d_max: f64,
    pub app_filter: AppFilter,
    /// Clusters with a nonzero peak.
    pub per_cluster: Vec<ClusterEfficiency>,
    /// Clusters with no traffic in the filtered category; excluded above.
    pub zero_peak_clusters: usize,
    /// Unweighted mean over `per_cluster`; `None` if it is empty.
    pub mean_efficiency: Option<f64>,
    /// `Σ avg / Σ peak` over `per_cluster`; `None` if it is empty.
    pub weighted_efficiency: Option<f64>,
}

/// Sums member series per cluster and reports each cluster's efficiency.
/// `loads[i]` is the series of leaf `i`.
pub fn evaluate_partition(
    partition: &Partition,
    loads: &[LoadSeries],
    app_filter: AppFilter,
) -> Result<EfficiencyReport, MetricsError> {
    let span = loads.first().map(LoadSeries::span);
    if loads.iter().any(|l| Some(l.span()) != span) {
        return Err(MetricsError::Misaligned);
    }

    let mut per_cluster = Vec::with_capacity(partition.len());
    let mut zero_peak_clusters = 0;
    let mut scratch: Vec<f64> = Vec::new();
    let (mut sum_eff, mut sum_total, mut sum_capacity) = (0.0, 0.0, 0.0);

    for (ci, members) in partition.clusters.iter().enumerate() {
        scratch.clear();
        for &leaf in members {
            let l = loads.get(leaf).ok_or(MetricsError::MissingLoad(leaf))?;
            if scratch.is_empty() {
                scratch.extend_from_slice(&l.bins);
            } else {
                for (a, b) in scratch.iter_mut().zip(&l.bins) {
                    *a += *b;
                }
            }
        }
        let Some(agg) = AggregateLoad::of(&scratch) else {
            return Err(MetricsError::EmptySeries);
        };
        match agg.efficiency() {
            Some(e) => {
                sum_eff += e;
                sum_total += agg.total;
                sum_capacity += agg.capacity();
                per_cluster.push(ClusterEfficiency {
                    cluster: ci,
                    stations: members.len(),
                    avg_load: agg.average(),
                    peak_load: agg.peak,
                    efficiency: e,
                });
            }
            None => zero_peak_clusters += 1,
        }
    }

    let n = per_cluster.len();
    Ok(EfficiencyReport {
        d_max: partition.d_max,
        app_filter,
        per_cluster,
        zero_peak_clusters,
        mean_efficiency: (n > 0).then(|| sum_eff / n as f64),
        weighted_efficiency: (n > 0).then(|| sum_total / sum_capacity),
    })
}

/// One threshold of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub d_max: f64,
    pub n_clusters: usize,
    pub mean_bs_per_cluster: f64,
    pub mean_efficiency: Option<f64>,
    pub weighted_efficiency: Option<f64>,
    pub zero_peak_clusters: usize,
}

/// `0` followed by 40 log-spaced thresholds from 50 m to 50 km.
pub fn default_dmax_grid() -> Vec<f64> {
    let mut grid = alloc::vec![0.0];
    grid.extend((0..40).map(|k| 50.0 * libm::pow(1000.0, k as f64 / 39.0)));
    grid[40] = 50_000.0;
    grid
}

/// Cuts `tree` at every threshold and evaluates the partition. Rows are
/// sorted by `d_max`.
pub fn sweep(
    tree: &MergeTree,
    loads: &[LoadSeries],
    d_max_values: &[f64],
    app_filter: AppFilter,
) -> Result<Vec<SweepRow>, MetricsError> {
    let mut grid = d_max_values.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.into_iter()
        .map(|d| {
            let part = tree.cut(d);
            let report = evaluate_partition(&part, loads, app_filter)?;
            Ok(SweepRow {
                d_max: d,
                n_clusters: part.len(),
                mean_bs_per_cluster: part.mean_cluster_size(),
                mean_efficiency: report.mean_efficiency,
                weighted_efficiency: report.weighted_efficiency,
                zero_peak_clusters: report.zero_peak_clusters,
            })
        })
        .collect()
}

/// Empirical distribution of a sample.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DistributionSummary {
    /// Sorted ascending.
    pub values: Vec<f64>,
    /// `(value, fraction of samples <= value)` at each distinct value.
    pub cdf: Vec<(f64, f64)>,
}

impl DistributionSummary {
    pub fn from_samples(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mut cdf: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            let frac = (i + 1) as f64 / n;
            match cdf.last_mut() {
                Some(last) if last.0 == v => last.1 = frac,
                _ => cdf.push((v, frac)),
            }
        }
        Self { values, cdf }
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of samples `<= x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let k = self.values.partition_point(|&v| v <= x);
        k as f64 / self.values.len() as f64
    }

    /// Linearly interpolated quantile, `q` in `[0, 1]`.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        let n = self.values.len();
        if n == 0 {
            return None;
        }
        let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = libm::floor(pos) as usize;
        let hi = (lo + 1).min(n - 1);
        let t = pos - lo as f64;
        Some(self.values[lo] + t * (self.values[hi] - self.values[lo]))
    }

    /// `log10(max / min)` over the strictly positive samples.
    pub fn log10_span(&self) -> Option<f64> {
        let lo = self.values.iter().copied().find(|&v| v > 0.0)?;
        let hi = *self.values.last()?;
        Some(libm::log10(hi / lo))
    }
}

/// Distribution of per-station peak loads.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakDistribution {
    pub summary: DistributionSummary,
    /// Orders of magnitude between the largest and smallest nonzero peak.
    pub log10_span: f64,
}

/// CDF of the given peaks. At least one must be nonzero.
pub fn peak_distribution(peaks: &[f64]) -> Result<PeakDistribution, MetricsError> {
    let summary = DistributionSummary::from_samples(peaks.to_vec());
    let log10_span = summary.log10_span().ok_or(MetricsError::NoNonzeroPeak)?;
    Ok(PeakDistribution {
        summary,
        log10_span,
    })
}

/// CDF of station peak loads for one traffic category.
pub fn peak_load_distribution(
    stations: &[Station],
    app_filter: AppFilter,
) -> Result<PeakDistribution, MetricsError> {
    let peaks: Vec<f64> = stations
        .iter()
        .map(|s| s.loads.get(app_filter).peak())
        .collect();
    peak_distribution(&peaks)
}

/// Peak ratios between neighboring (coverage-overlapping) stations.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborRatios {
    /// `max(p_i, p_j) / min(p_i, p_j)` per neighbor pair.
    pub pairwise: DistributionSummary,
    /// Fraction of stations (nonzero peak) with at least one neighbor at a
    /// ratio of [`DISPARITY_RATIO`] or more.
    pub per_cell_disparity: f64,
    pub stations_considered: usize,
}

/// Neighbor pairs are stations whose hulls intersect. Stations with a zero
/// peak are left out entirely.
pub fn neighbor_ratios(hulls: &[&Hull], peaks: &[f64]) -> NeighborRatios {
    assert_eq!(hulls.len(), peaks.len());
    let idx: Vec<usize> = (0..peaks.len()).filter(|&i| peaks[i] > 0.0).collect();
    let boxes: Vec<_> = idx.iter().map(|&i| hulls[i].bbox()).collect();

    // sweep along x over bounding boxes
    let mut order: Vec<usize> = (0..idx.len()).collect();
    order.sort_by(|&a, &b| boxes[a].0.x.total_cmp(&boxes[b].0.x).then(a.cmp(&b)));

    let tol = crate::geo::INCIDENCE_TOLERANCE_M;
    let mut samples = Vec::new();
    let mut disparate = alloc::vec![false; idx.len()];
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if boxes[b].0.x > boxes[a].1.x + tol {
                break;
            }
            if boxes[b].0.y > boxes[a].1.y + tol || boxes[a].0.y > boxes[b].1.y + tol {
                continue;
            }
            let (i, j) = (idx[a], idx[b]);
            if !hulls_intersect(hulls[i], hulls[j]) {
                continue;
            }
            let ratio = peaks[i].max(peaks[j]) / peaks[i].min(peaks[j]);
            if ratio >= DISPARITY_RATIO {
                disparate[a] = true;
                disparate[b] = true;
            }
            samples.push(ratio);
        }
    }

    let considered = idx.len();
    let hits = disparate.iter().filter(|&&d| d).count();
    NeighborRatios {
        pairwise: DistributionSummary::from_samples(samples),
        per_cell_disparity: if considered == 0 {
            0.0
        } else {
            hits as f64 / considered as f64
        },
        stations_considered: considered,
    }
}

/// Neighbor peak ratios over station coverage hulls for one category.
pub fn neighbor_peak_ratios(stations: &[Station], app_filter: AppFilter) -> NeighborRatios {
    let hulls: Vec<&Hull> = stations.iter().map(|s| &s.coverage).collect();
    let peaks: Vec<f64> = stations
        .iter()
        .map(|s| s.loads.get(app_filter).peak())
        .collect();
    neighbor_ratios(&hulls, &peaks)
}

/// Upper bound of the random baseline's uniform draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MaxScope {
    /// Largest hourly bin over all stations.
    #[default]
    Global,
    /// Each station's own largest bin.
    PerStation,
}

/// Replaces every bin by an independent uniform draw on `[0, M]`.
/// Deterministic in `seed`.
pub fn randomize_loads(
    loads: &[LoadSeries],
    seed: u64,
    scope: MaxScope,
) -> Result<Vec<LoadSeries>, MetricsError> {
    let global = loads.iter().map(LoadSeries::peak).fold(0.0, f64::max);
    if global <= 0.0 {
        return Err(MetricsError::UndefinedMaximum);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(loads
        .iter()
        .map(|l| {
            let m = match scope {
                MaxScope::Global => global,
                MaxScope::PerStation => l.peak(),
            };
            let bins = if m > 0.0 {
                let u = Uniform::new_inclusive(0.0, m).expect("finite positive bound");
                l.bins.iter().map(|_| u.sample(&mut rng)).collect()
            } else {
                alloc::vec![0.0; l.bins.len()]
            };
            LoadSeries::new(l.origin_hour, bins)
        })
        .collect())
}
