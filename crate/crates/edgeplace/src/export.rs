//! Output files: GeoJSON, CSV tables, atomic writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use edgeplace_core::{
    convex_hull, AppFilter, DistributionSummary, Hull, Partition, PlanePoint, Projection, Station,
    SweepRow,
};
use serde_json::{json, Value};

/// Writes `bytes` to `path` through a temp file in the same directory, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Operator names made safe for file names.
pub fn file_stem(operator: &str) -> String {
    operator
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn lon_lat(projection: &Projection, p: PlanePoint) -> Value {
    let (lat, lon) = projection.unproject(p);
    json!([lon, lat])
}

fn hull_geometry(projection: &Projection, hull: &Hull) -> Value {
    match hull {
        Hull::Point(p) => json!({"type": "Point", "coordinates": lon_lat(projection, *p)}),
        Hull::Segment(a, b) => json!({
            "type": "LineString",
            "coordinates": [lon_lat(projection, *a), lon_lat(projection, *b)],
        }),
        Hull::Polygon(vs) => {
            let mut ring: Vec<Value> = vs.iter().map(|&v| lon_lat(projection, v)).collect();
            ring.push(lon_lat(projection, vs[0]));
            json!({"type": "Polygon", "coordinates": [ring]})
        }
    }
}

/// Two features per station: its position (Point) and its coverage hull.
/// Both carry the same properties.
pub fn stations_geojson(stations: &[Station], projection: &Projection, app: AppFilter) -> Value {
    let mut features = Vec::with_capacity(2 * stations.len());
    for s in stations {
        let load = s.loads.get(app);
        let peak = load.peak();
        let avg = if load.bins.is_empty() {
            0.0
        } else {
            load.total() / load.bins.len() as f64
        };
        let props = |role: &str| {
            json!({
                "role": role,
                "operator": s.id.operator,
                "cell_id": s.id.cell_id,
                "lac": s.id.lac,
                "observations": s.observation_count,
                "app": app.name(),
                "peak_load": peak,
                "avg_load": avg,
                "efficiency": if peak > 0.0 { Some(avg / peak) } else { None },
            })
        };
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": lon_lat(projection, s.position)},
            "properties": props("position"),
        }));
        features.push(json!({
            "type": "Feature",
            "geometry": hull_geometry(projection, &s.coverage),
            "properties": props("coverage"),
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}

/// Cluster membership as `{d_max, clusters: [[station ids]]}`.
pub fn partition_json(partition: &Partition, stations: &[Station]) -> Value {
    let clusters: Vec<Vec<String>> = partition
        .clusters
        .iter()
        .map(|c| c.iter().map(|&i| stations[i].id.to_string()).collect())
        .collect();
    json!({"d_max": partition.d_max, "clusters": clusters})
}

/// One feature per cluster: the hull of its members' coverage areas.
pub fn partition_geojson(
    partition: &Partition,
    stations: &[Station],
    projection: &Projection,
) -> Value {
    let features: Vec<Value> = partition
        .clusters
        .iter()
        .enumerate()
        .map(|(ci, members)| {
            let points: Vec<PlanePoint> = members
                .iter()
                .flat_map(|&i| stations[i].coverage.vertex_list())
                .collect();
            let hull = convex_hull(&points).expect("clusters are non-empty");
            json!({
                "type": "Feature",
                "geometry": hull_geometry(projection, &hull),
                "properties": {"cluster": ci, "stations": members.len()},
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SWEEP_HEADER: &str =
    "d_max,n_clusters,mean_bs_per_cluster,mean_efficiency,weighted_efficiency,zero_peak_clusters";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.d_max,
            r.n_clusters,
            r.mean_bs_per_cluster,
            opt(r.mean_efficiency),
            opt(r.weighted_efficiency),
            r.zero_peak_clusters
        );
    }
    out
}

/// `value,cdf` rows, one per distinct value.
pub fn cdf_csv(dist: &DistributionSummary) -> String {
    let mut out = String::from("value,cdf\n");
    for (v, f) in &dist.cdf {
        let _ = writeln!(out, "{v},{f}");
    }
    out
}

pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("JSON values serialize");
    bytes.push(b'\n');
    bytes
}
