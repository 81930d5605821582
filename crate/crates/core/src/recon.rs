//! Base-station reconstruction and hourly load aggregation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geo::{self, Hull, PlanePoint, Projection};
use crate::record::{AppFilter, TraceRecord};

/// A cell within one operator's network: `(operator, cell_id, lac)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StationId {
    pub operator: String,
    pub cell_id: String,
    pub lac: String,
}

impl StationId {
    pub fn of(rec: &TraceRecord) -> Self {
        Self {
            operator: rec.operator.clone(),
            cell_id: rec.cell_id.clone(),
            lac: rec.lac.clone(),
        }
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.operator, self.cell_id, self.lac)
    }
}

/// A dense range of hour indices `[origin, origin + len)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HourSpan {
    pub origin: i64,
    pub len: usize,
}

impl HourSpan {
    /// Smallest span covering every record's hour bin.
    pub fn of_records(records: &[TraceRecord]) -> Option<Self> {
        let lo = records.iter().map(TraceRecord::hour).min()?;
        let hi = records.iter().map(TraceRecord::hour).max()?;
        Some(Self {
            origin: lo,
            len: (hi - lo + 1) as usize,
        })
    }

    pub fn index_of(&self, hour: i64) -> Option<usize> {
        let off = hour.checked_sub(self.origin)?;
        (off >= 0 && (off as usize) < self.len).then_some(off as usize)
    }
}

/// Hourly traffic (bytes per hour) over a dense hour range. Hours with no
/// traffic are explicit zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadSeries {
    pub origin_hour: i64,
    pub bins: Vec<f64>,
}

impl LoadSeries {
    pub fn zeros(span: HourSpan) -> Self {
        Self {
            origin_hour: span.origin,
            bins: alloc::vec![0.0; span.len],
        }
    }

    pub fn new(origin_hour: i64, bins: Vec<f64>) -> Self {
        Self { origin_hour, bins }
    }

    pub fn span(&self) -> HourSpan {
        HourSpan {
            origin: self.origin_hour,
            len: self.bins.len(),
        }
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }

    pub fn peak(&self) -> f64 {
        self.bins.iter().copied().fold(0.0, f64::max)
    }

    /// Adds `other` bin-wise. Both series must share a span.
    pub fn accumulate(&mut self, other: &LoadSeries) {
        assert_eq!(self.span(), other.span(), "load series are not aligned");
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += *b;
        }
    }
}

/// Per-station load series, total and per app category.
#[derive(Clone, Debug, PartialEq)]
pub struct StationLoads {
    pub total: LoadSeries,
    pub by_category: [LoadSeries; 4],
}

impl StationLoads {
    pub fn get(&self, filter: AppFilter) -> &LoadSeries {
        match filter {
            AppFilter::Total => &self.total,
            AppFilter::Only(c) => &self.by_category[c.index()],
        }
    }
}

/// A reconstructed base station.
#[derive(Clone, Debug, PartialEq)]
pub struct Station {
    pub id: StationId,
    /// Traffic-weighted centroid of the cell's observation points.
    pub position: PlanePoint,
    /// Convex hull of every observation point reported on the cell.
    pub coverage: Hull,
    pub loads: StationLoads,
    pub observation_count: usize,
}

/// Shared coordinate frame and time axis for one analysis run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceFrame {
    pub projection: Projection,
    pub span: HourSpan,
}

impl TraceFrame {
    /// Projection centered on the mean record position; span covering all
    /// records.
    pub fn from_records(records: &[TraceRecord]) -> Option<Self> {
        Some(Self {
            projection: Projection::centered_on(records.iter().map(|r| (r.lat, r.lon)))?,
            span: HourSpan::of_records(records)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReconError {
    #[error("records from more than one operator ({0} and {1})")]
    MixedOperators(String, String),
    #[error("record {index} falls outside the analysis span")]
    OutsideSpan { index: usize },
}

/// Why a record was left out of a load series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkipReason {
    UnknownCell,
    OutsideSpan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SkippedRecord {
    pub index: usize,
    pub reason: SkipReason,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadBuild {
    pub series: BTreeMap<StationId, LoadSeries>,
    pub skipped: Vec<SkippedRecord>,
}

/// Rebuilds one operator's stations, sorted by id.
///
/// Each distinct `(cell_id, lac)` becomes a station whose coverage is the
/// hull of its observation points and whose position is their centroid
/// weighted by `bytes_up + bytes_down` (unweighted if every weight is zero).
pub fn reconstruct_stations(
    records: &[TraceRecord],
    frame: &TraceFrame,
) -> Result<Vec<Station>, ReconError> {
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.operator != first.operator) {
            return Err(ReconError::MixedOperators(
                first.operator.clone(),
                other.operator.clone(),
            ));
        }
    }
    if let Some(index) = records
        .iter()
        .position(|r| frame.span.index_of(r.hour()).is_none())
    {
        return Err(ReconError::OutsideSpan { index });
    }

    let mut cells: BTreeMap<StationId, Vec<(PlanePoint, u64)>> = BTreeMap::new();
    for rec in records {
        let p = frame.projection.project(rec.lat, rec.lon);
        cells
            .entry(StationId::of(rec))
            .or_default()
            .push((p, rec.total_bytes()));
    }

    let mut geometry = Vec::with_capacity(cells.len());
    for (id, mut obs) in cells {
        // fixed summation order makes the centroid independent of record order
        obs.sort_by(|a, b| {
            a.0.x
                .total_cmp(&b.0.x)
                .then(a.0.y.total_cmp(&b.0.y))
                .then(a.1.cmp(&b.1))
        });
        let points: Vec<PlanePoint> = obs.iter().map(|o| o.0).collect();
        let weights: Vec<f64> = obs.iter().map(|o| o.1 as f64).collect();
        let position = match geo::weighted_centroid(&points, &weights) {
            Ok(p) => p,
            Err(_) => geo::weighted_centroid(&points, &alloc::vec![1.0; points.len()])
                .expect("non-empty cell"),
        };
        let coverage = geo::convex_hull(&points).expect("non-empty cell");
        geometry.push((id, position, coverage, obs.len()));
    }

    let mut loads: BTreeMap<StationId, StationLoads> = geometry
        .iter()
        .map(|g| {
            let zero = LoadSeries::zeros(frame.span);
            let l = StationLoads {
                total: zero.clone(),
                by_category: core::array::from_fn(|_| zero.clone()),
            };
            (g.0.clone(), l)
        })
        .collect();
    for rec in records {
        let bin = frame.span.index_of(rec.hour()).expect("span checked above");
        let l = loads
            .get_mut(&StationId::of(rec))
            .expect("cell indexed above");
        let bytes = rec.total_bytes() as f64;
        l.total.bins[bin] += bytes;
        l.by_category[rec.category().index()].bins[bin] += bytes;
    }

    Ok(geometry
        .into_iter()
        .map(|(id, position, coverage, observation_count)| {
            let loads = loads.remove(&id).expect("cell indexed above");
            Station {
                id,
                position,
                coverage,
                loads,
                observation_count,
            }
        })
        .collect())
}

/// Per-station hourly series of `bytes_up + bytes_down` over `span`, for the
/// records matching `filter`. Records on cells absent from `stations` or
/// outside `span` are skipped and reported.
pub fn build_load_series(
    records: &[TraceRecord],
    stations: &[Station],
    filter: AppFilter,
    span: HourSpan,
) -> LoadBuild {
    let mut series: BTreeMap<StationId, LoadSeries> = stations
        .iter()
        .map(|s| (s.id.clone(), LoadSeries::zeros(span)))
        .collect();
    let mut skipped = Vec::new();
    for (index, rec) in records.iter().enumerate() {
        let Some(bin) = span.index_of(rec.hour()) else {
            skipped.push(SkippedRecord {
                index,
                reason: SkipReason::OutsideSpan,
            });
            continue;
        };
        let key = StationId::of(rec);
        let Some(s) = series.get_mut(&key) else {
            skipped.push(SkippedRecord {
                index,
                reason: SkipReason::UnknownCell,
            });
            continue;
        };
        if filter.matches(rec.category()) {
            s.bins[bin] += rec.total_bytes() as f64;
        }
    }
    LoadBuild { series, skipped }
}
