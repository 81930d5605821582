//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use edgeplace::{parse_records, TraceFormat};
use edgeplace_core::geo::EARTH_RADIUS_M;
use edgeplace_core::metrics::AggregateLoad;
use edgeplace_core::{
    build_merge_tree, convex_hull, cut_at_threshold, default_dmax_grid, efficiency,
    evaluate_partition, generate_trace, randomize_loads, reconstruct_stations, sweep, AppFilter,
    LoadSeries, MaxScope, Partition, PlanePoint, Projection, Station, SweepRow, SynthConfig,
    TraceFrame, TraceRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

// ---------------------------------------------------------------- oracles

/// Merge the closest pair (maximum pairwise distance) until the smallest
/// distance exceeds `d_max`; ties go to the lexicographically smallest
/// (min leaf, min leaf) pair.
fn naive_partition(points: &[PlanePoint], d_max: f64) -> Partition {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    loop {
        clusters.sort_by_key(|c| *c.iter().min().unwrap());
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let mut d = 0.0f64;
                for &a in &clusters[i] {
                    for &b in &clusters[j] {
                        d = d.max(points[a].distance(points[b]));
                    }
                }
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        match best {
            Some((d, i, j)) if d <= d_max => {
                let merged = clusters.remove(j);
                clusters[i].extend(merged);
            }
            _ => break,
        }
    }
    Partition::from_groups(d_max, clusters)
}

fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dl = (lon2 - lon1).to_radians();
    let a = ((p2 - p1) / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().asin()
}

// --------------------------------------------------------------- fixtures

/// Heavy-tailed synthetic city shared by the shape criteria.
fn shape_config() -> SynthConfig {
    SynthConfig {
        n_stations: 200,
        peak_sigma: 2.5,
        peak_alignment: 0.8,
        seed: 2024,
        ..SynthConfig::default()
    }
}

struct City {
    records: Vec<TraceRecord>,
    stations: Vec<Station>,
}

fn build_city(cfg: &SynthConfig) -> City {
    let records = generate_trace(cfg).expect("valid config").records;
    let frame = TraceFrame::from_records(&records).unwrap();
    let stations = reconstruct_stations(&records, &frame).unwrap();
    City { records, stations }
}

fn city_sweep(city: &City, loads: &[LoadSeries]) -> Vec<SweepRow> {
    let points: Vec<PlanePoint> = city.stations.iter().map(|s| s.position).collect();
    sweep(
        &build_merge_tree(&points),
        loads,
        &default_dmax_grid(),
        AppFilter::Total,
    )
    .unwrap()
}

fn total_loads(stations: &[Station]) -> Vec<LoadSeries> {
    stations.iter().map(|s| s.loads.total.clone()).collect()
}

const MID_GRID: (f64, f64) = (500.0, 5000.0);

// ------------------------------------------------------------- criteria

fn clustering_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut compared = 0;
    for instance in 0..200 {
        let n = rng.random_range(1..=40);
        let lattice = instance % 2 == 1;
        let points: Vec<PlanePoint> = (0..n)
            .map(|_| {
                if lattice {
                    // many equal distances, so the tie-break matters
                    let (x, y) = (rng.random_range(0..6), rng.random_range(0..6));
                    PlanePoint::new(f64::from(x) * 100.0, f64::from(y) * 100.0)
                } else {
                    PlanePoint::new(rng.random_range(0.0..5000.0), rng.random_range(0.0..5000.0))
                }
            })
            .collect();
        let tree = build_merge_tree(&points);
        for t in 0..10 {
            let d = if lattice {
                f64::from(t) * 100.0
            } else {
                rng.random_range(0.0..4000.0)
            };
            if cut_at_threshold(&tree, d) != naive_partition(&points, d) {
                return Err(format!("instance {instance}, d_max {d}: partitions differ"));
            }
            compared += 1;
        }
    }
    within(Duration::from_secs(10), start.elapsed())?;
    Ok(format!(
        "{compared} cuts identical in {:.2?}",
        start.elapsed()
    ))
}

fn monotone(rows: &[SweepRow]) -> bool {
    rows.windows(2).all(|w| {
        w[0].n_clusters >= w[1].n_clusters && w[0].mean_bs_per_cluster <= w[1].mean_bs_per_cluster
    })
}

fn monotonicity(city: &City) -> Outcome {
    let mut sweeps = 0;
    if !monotone(&city_sweep(city, &total_loads(&city.stations))) {
        return Err("shape city sweep is not monotone".into());
    }
    sweeps += 1;
    for seed in 0..10 {
        let cfg = SynthConfig {
            seed,
            n_stations: 60,
            duration_hours: 48,
            layout: if seed % 2 == 0 {
                edgeplace_core::synth::Layout::Uniform
            } else {
                edgeplace_core::synth::Layout::Clustered {
                    hotspots: 4,
                    spread_m: 700.0,
                }
            },
            ..SynthConfig::default()
        };
        let c = build_city(&cfg);
        for app in [AppFilter::Total, AppFilter::from_name("youtube").unwrap()] {
            let loads: Vec<LoadSeries> = c
                .stations
                .iter()
                .map(|s| s.loads.get(app).clone())
                .collect();
            let points: Vec<PlanePoint> = c.stations.iter().map(|s| s.position).collect();
            let rows = sweep(
                &build_merge_tree(&points),
                &loads,
                &default_dmax_grid(),
                app,
            )
            .unwrap();
            if !monotone(&rows) {
                return Err(format!("seed {seed}, app {app}: not monotone"));
            }
            sweeps += 1;
        }
    }
    Ok(format!("{sweeps} sweeps monotone"))
}

fn three_station_reproduction() -> Outcome {
    let start = Instant::now();
    let t0 = 1_412_121_600;
    let row = |hour: i64, cell: &str, lon: f64, bytes: u64| {
        format!(
            "{},u,40.0,{lon},OP,{cell},1,com.whatsapp,0,{bytes}\n",
            t0 + hour * 3600
        )
    };
    let mut text =
        String::from("timestamp,user_id,lat,lon,operator,cell_id,lac,app,bytes_up,bytes_down\n");
    text += &row(0, "yellow", -74.0, 58);
    text += &row(19, "yellow", -74.0, 0);
    for (cell, lon) in [("small1", -73.997), ("small2", -73.994)] {
        for h in 1..6 {
            text += &row(h, cell, lon, 10);
        }
        text += &row(6, cell, lon, 8);
    }
    let records = parse_records(text.as_bytes(), TraceFormat::Csv)
        .unwrap()
        .records;
    let frame = TraceFrame::from_records(&records).unwrap();
    let stations = reconstruct_stations(&records, &frame).unwrap();
    let points: Vec<PlanePoint> = stations.iter().map(|s| s.position).collect();
    let rows = sweep(
        &build_merge_tree(&points),
        &total_loads(&stations),
        &[0.0, 5000.0],
        AppFilter::Total,
    )
    .unwrap();
    let (apart, merged) = (
        rows[0].mean_efficiency.unwrap(),
        rows[1].mean_efficiency.unwrap(),
    );
    within(Duration::from_secs(1), start.elapsed())?;
    check(
        frame.span.len == 20
            && rows[1].n_clusters == 1
            && (merged - 0.15).abs() <= 1e-9
            && (apart - 0.21).abs() <= 1e-9,
        format!(
            "merged {merged:.4}, separate mean {apart:.4} over {} bins",
            frame.span.len
        ),
    )
}

fn merge_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pairs = 0;
    while pairs < 500 {
        let len = rng.random_range(1..=48);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let scale = 10u64.pow(rng.random_range(0..7));
            (0..len)
                .map(|_| {
                    if rng.random_bool(0.3) {
                        0.0
                    } else {
                        (rng.random_range(0..1000) * scale) as f64
                    }
                })
                .collect()
        };
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        let (Some(la), Some(lb)) = (AggregateLoad::of(&a), AggregateLoad::of(&b)) else {
            continue;
        };
        let (Some(ea), Some(eb)) = (la.efficiency(), lb.efficiency()) else {
            continue;
        };
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let m = AggregateLoad::of(&sum).unwrap();
        let em = m.efficiency().unwrap();
        if em < ea.min(eb) {
            return Err(format!(
                "pair {pairs}: merged {em} below member minimum {}",
                ea.min(eb)
            ));
        }
        // merged ≥ Σavg/Σpeak, cross-multiplied over integer-valued sums
        if m.total * (la.capacity() + lb.capacity()) < (la.total + lb.total) * m.capacity() {
            return Err(format!("pair {pairs}: merged below Σavg/Σpeak"));
        }

        // the pair merges inside a partition with a few bystander clusters
        let mut loads = vec![LoadSeries::new(0, a), LoadSeries::new(0, b)];
        for _ in 0..rng.random_range(0..4) {
            loads.push(LoadSeries::new(0, draw(&mut rng)));
        }
        let n = loads.len();
        let before = Partition::from_groups(0.0, (0..n).map(|i| vec![i]).collect());
        let mut groups = vec![vec![0, 1]];
        groups.extend((2..n).map(|i| vec![i]));
        let after = Partition::from_groups(1.0, groups);
        let wb = evaluate_partition(&before, &loads, AppFilter::Total)
            .unwrap()
            .weighted_efficiency;
        let wa = evaluate_partition(&after, &loads, AppFilter::Total)
            .unwrap()
            .weighted_efficiency;
        if wa < wb {
            return Err(format!(
                "pair {pairs}: weighted efficiency fell from {wb:?} to {wa:?}"
            ));
        }
        pairs += 1;
    }
    Ok(format!("{pairs} pairs, all bounds hold exactly"))
}

fn mid_grid_minimum(rows: &[SweepRow]) -> f64 {
    rows.iter()
        .filter(|r| (MID_GRID.0..=MID_GRID.1).contains(&r.d_max))
        .filter_map(|r| r.mean_efficiency)
        .fold(f64::INFINITY, f64::min)
}

fn efficiency_shape(city: &City) -> Outcome {
    let start = Instant::now();
    let rows = city_sweep(city, &total_loads(&city.stations));
    let at_zero = rows[0]
        .mean_efficiency
        .ok_or("no efficiency at d_max = 0")?;
    let at_max = rows
        .last()
        .unwrap()
        .mean_efficiency
        .ok_or("no efficiency at largest d_max")?;
    let mid = mid_grid_minimum(&rows);
    let rel = (at_zero - mid) / mid;
    within(Duration::from_secs(60), start.elapsed())?;
    check(
        rel >= 0.20 && at_max > mid,
        format!(
            "d_max=0 {at_zero:.4}, mid-grid [{} m, {} m] min {mid:.4} (+{:.0}%), largest d_max {at_max:.4}",
            MID_GRID.0,
            MID_GRID.1,
            rel * 100.0
        ),
    )
}

fn random_baseline(city: &City) -> Outcome {
    let real = city_sweep(city, &total_loads(&city.stations));
    let rnd_loads = randomize_loads(&total_loads(&city.stations), 99, MaxScope::Global).unwrap();
    let rnd = city_sweep(city, &rnd_loads);
    let above = real
        .iter()
        .zip(&rnd)
        .filter(|(r, q)| match (r.mean_efficiency, q.mean_efficiency) {
            (Some(a), Some(b)) => b > a,
            _ => false,
        })
        .count();
    let frac = above as f64 / real.len() as f64;
    check(
        frac >= 0.95,
        format!("random above real at {above}/{} grid points", real.len()),
    )
}

fn geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for set in 0..1000 {
        let n = rng.random_range(1..=50);
        let lattice = set % 3 == 0;
        let pts: Vec<PlanePoint> = (0..n)
            .map(|_| {
                if lattice {
                    PlanePoint::new(
                        f64::from(rng.random_range(-4..4)),
                        f64::from(rng.random_range(-4..4)),
                    )
                } else {
                    PlanePoint::new(rng.random_range(-1e4..1e4), rng.random_range(-1e4..1e4))
                }
            })
            .collect();
        let hull = convex_hull(&pts).unwrap();
        if let Some(p) = pts.iter().find(|p| !hull.contains(**p, 1e-9)) {
            return Err(format!("set {set}: {p:?} outside its hull"));
        }
        if convex_hull(&hull.vertex_list()).unwrap() != hull {
            return Err(format!("set {set}: hull not idempotent"));
        }
    }

    let mut worst = 0.0f64;
    for _ in 0..20_000 {
        let lat0 = rng.random_range(-70.0..70.0);
        let lon0 = rng.random_range(-179.0..179.0);
        // 100 km box: ±50 km in each direction
        let dlat = 50_000.0 / EARTH_RADIUS_M * 180.0 / std::f64::consts::PI;
        let dlon = dlat / f64::cos(f64::to_radians(lat0));
        let mut corner = || {
            (
                lat0 + rng.random_range(-dlat..dlat),
                lon0 + rng.random_range(-dlon..dlon),
            )
        };
        let ((la1, lo1), (la2, lo2)) = (corner(), corner());
        let truth = haversine(la1, lo1, la2, lo2);
        if truth < 1.0 {
            continue;
        }
        let proj = Projection::new(lat0, lon0);
        let planar = proj.project(la1, lo1).distance(proj.project(la2, lo2));
        worst = worst.max((planar - truth).abs() / truth);
    }
    check(
        worst < 0.005,
        format!(
            "1000 hulls contain inputs and are idempotent; projection worst error {:.4}%",
            worst * 100.0
        ),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn conservation_and_determinism(city: &City) -> Outcome {
    let expected: u64 = city.records.iter().map(TraceRecord::total_bytes).sum();
    let per_station: f64 = city.stations.iter().map(|s| s.loads.total.total()).sum();
    let points: Vec<PlanePoint> = city.stations.iter().map(|s| s.position).collect();
    let tree = build_merge_tree(&points);
    let loads = total_loads(&city.stations);
    for d in default_dmax_grid() {
        let mut clustered = 0.0;
        for members in &tree.cut(d).clusters {
            let mut sum = LoadSeries::zeros(loads[0].span());
            for &m in members {
                sum.accumulate(&loads[m]);
            }
            clustered += sum.total();
        }
        if clustered != expected as f64 {
            return Err(format!(
                "d_max {d}: clusters carry {clustered}, records {expected}"
            ));
        }
    }
    if per_station != expected as f64 {
        return Err(format!("stations carry {per_station}, records {expected}"));
    }

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.cfg");
    fs::write(
        &cfg,
        "seed = 31\nn_stations = 40\nduration_hours = 72\noperators = A, B\npeak_sigma = 2\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap().to_string();
    let trace = dir.path().join("run0/synth/trace.csv");
    let trace = trace.to_str().unwrap().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["synth", "--config", &cfg],
        vec!["reconstruct", "--input", &trace],
        vec![
            "sweep",
            "--input",
            &trace,
            "--randomize",
            "--seed",
            "5",
            "--partition-at",
            "1000",
        ],
        vec![
            "sweep",
            "--input",
            &trace,
            "--randomize",
            "--seed",
            "5",
            "--per-cell-max",
            "--app",
            "facebook",
        ],
        vec!["stats", "--input", &trace],
    ];
    for (i, cmd) in commands.iter().enumerate() {
        let mut runs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!(
                "run{run}/{}",
                if i == 0 {
                    "synth".to_string()
                } else {
                    format!("c{i}")
                }
            ));
            let mut args = cmd.clone();
            let out_s = out.to_str().unwrap().to_string();
            args.extend(["--out", &out_s]);
            let o = Command::new(env!("CARGO_BIN_EXE_edgeplace"))
                .args(&args)
                .output()
                .unwrap();
            if o.status.code() != Some(0) {
                return Err(format!(
                    "{cmd:?} failed: {}",
                    String::from_utf8_lossy(&o.stderr)
                ));
            }
            runs.push(snapshot(&out));
        }
        if runs[0] != runs[1] || runs[0].is_empty() {
            return Err(format!("{:?} output differs between runs", cmd[0]));
        }
    }
    Ok(format!(
        "{expected} bytes conserved at every grid point; {} commands byte-identical",
        commands.len()
    ))
}

fn randomization_statistics() -> Outcome {
    let one = [LoadSeries::new(0, vec![1.0; 24])];
    let n = 10_000u64;
    let mean = (0..n)
        .map(|seed| efficiency(&randomize_loads(&one, seed, MaxScope::Global).unwrap()[0]).unwrap())
        .sum::<f64>()
        / n as f64;
    check(
        (mean - 0.524).abs() <= 0.02,
        format!("mean efficiency {mean:.4} over {n} seeds"),
    )
}

fn main() {
    let city = build_city(&shape_config());
    let criteria: Vec<Criterion> = vec![
        ("clustering oracle equivalence", Box::new(clustering_oracle)),
        ("sweep monotonicity", Box::new(|| monotonicity(&city))),
        (
            "three-station 15% vs 21% reproduction",
            Box::new(three_station_reproduction),
        ),
        ("merge bounds", Box::new(merge_bounds)),
        (
            "efficiency dips mid-grid and recovers",
            Box::new(|| efficiency_shape(&city)),
        ),
        (
            "random baseline above real loads",
            Box::new(|| random_baseline(&city)),
        ),
        ("geometry oracles", Box::new(geometry)),
        (
            "conservation and determinism",
            Box::new(|| conservation_and_determinism(&city)),
        ),
        (
            "randomization statistics",
            Box::new(randomization_statistics),
        ),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
