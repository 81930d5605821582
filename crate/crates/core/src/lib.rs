//! Analysis core for edge-server placement studies on cellular traces.
//!
//! The pipeline: group trace records by operator ([`record`]), rebuild base
//! stations and their hourly loads ([`recon`]), cluster stations under a
//! maximum-distance threshold ([`cluster`]), and measure how well the
//! resulting servers would be utilized ([`metrics`]). [`synth`] generates
//! traces with known ground truth.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod cluster;
pub mod geo;
pub mod metrics;
pub mod recon;
pub mod record;
pub mod synth;

pub use cluster::{build_merge_tree, cut_at_threshold, Merge, MergeTree, Partition, TreeBuilder};
pub use geo::{
    convex_hull, hulls_intersect, weighted_centroid, Hull, HullKind, PlanePoint, Projection,
};
pub use metrics::{
    default_dmax_grid, efficiency, evaluate_partition, neighbor_peak_ratios,
    peak_load_distribution, randomize_loads, sweep, DistributionSummary, EfficiencyReport,
    MaxScope, MetricsError, NeighborRatios, SweepRow,
};
pub use recon::{
    build_load_series, reconstruct_stations, HourSpan, LoadSeries, Station, StationId, TraceFrame,
};
pub use record::{partition_by_operator, AppCategory, AppFilter, TraceRecord};
pub use synth::{generate_trace, SynthConfig, SynthTrace};
