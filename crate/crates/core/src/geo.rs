//! Planar geometry over a local projection of GPS coordinates.
//!
//! Coordinates are projected with an equirectangular mapping on a sphere
//! around a reference point. At city scale (tens of km) the distortion is far
//! below the granularity of any clustering threshold, so all distances,
//! hulls and overlap tests below are plain Euclidean.

use alloc::vec::Vec;
use core::cmp::Ordering;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Distance under which two hulls are considered to touch.
pub const INCIDENCE_TOLERANCE_M: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum GeoError {
    #[error("no points")]
    NoPoints,
    #[error("zero total weight")]
    ZeroTotalWeight,
    #[error("points and weights differ in length ({points} vs {weights})")]
    LengthMismatch { points: usize, weights: usize },
    #[error("weights must be finite and non-negative")]
    InvalidWeight,
}

/// A point in meters east (`x`) and north (`y`) of a projection reference.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: PlanePoint) -> f64 {
        distance(self, other)
    }

    fn sub(self, o: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x - o.x, self.y - o.y)
    }

    fn dot(self, o: PlanePoint) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn lex_cmp(&self, o: &PlanePoint) -> Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
    }
}

/// Euclidean distance in the plane.
pub fn distance(a: PlanePoint, b: PlanePoint) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    libm::sqrt(dx * dx + dy * dy)
}

fn cross(o: PlanePoint, a: PlanePoint, b: PlanePoint) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Local projection around a fixed reference.
///
/// `x = R·cos(lat)·Δlon` is the arc along the point's parallel and
/// `y = R·Δlat + R·sin(lat)·cos(lat)·Δlon²/2` bends parallels toward the
/// pole the way they curve on the sphere. On the reference meridian and
/// the reference parallel this agrees with the equirectangular projection
/// (`y = R·Δlat`, `x = R·cos(ref_lat)·Δlon`). The curvature term cancels
/// the first-order shear, so planar distances stay within 2e-4 of
/// great-circle distances over a 100 km box at any latitude up to 70°,
/// where plain equirectangular drifts by `tan(lat)·Δlat`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub ref_lat: f64,
    pub ref_lon: f64,
}

impl Projection {
    pub fn new(ref_lat: f64, ref_lon: f64) -> Self {
        Self { ref_lat, ref_lon }
    }

    /// Reference at the arithmetic mean of the given `(lat, lon)` pairs.
    /// Returns `None` for an empty input.
    pub fn centered_on<I>(coords: I) -> Option<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
        for (a, o) in coords {
            lat += a;
            lon += o;
            n += 1;
        }
        (n > 0).then(|| Self::new(lat / n as f64, lon / n as f64))
    }

    pub fn project(&self, lat: f64, lon: f64) -> PlanePoint {
        let dlon = wrap_degrees(lon - self.ref_lon).to_radians();
        let phi = lat.to_radians();
        let (sin, cos) = (libm::sin(phi), libm::cos(phi));
        PlanePoint {
            x: EARTH_RADIUS_M * cos * dlon,
            y: EARTH_RADIUS_M * ((lat - self.ref_lat).to_radians() + sin * cos * dlon * dlon / 2.0),
        }
    }

    /// Inverse of [`Projection::project`], returning `(lat, lon)`.
    pub fn unproject(&self, p: PlanePoint) -> (f64, f64) {
        let phi0 = self.ref_lat.to_radians();
        let (x, y) = (p.x / EARTH_RADIUS_M, p.y / EARTH_RADIUS_M);
        let mut phi = phi0 + y;
        let mut dlon = 0.0;
        for _ in 0..50 {
            let (sin, cos) = (libm::sin(phi), libm::cos(phi));
            dlon = if cos > 0.0 { x / cos } else { 0.0 };
            let next = phi0 + y - sin * cos * dlon * dlon / 2.0;
            let done = (next - phi).abs() < 1e-15;
            phi = next;
            if done {
                break;
            }
        }
        (
            phi.to_degrees(),
            wrap_degrees(self.ref_lon + dlon.to_degrees()),
        )
    }
}

fn wrap_degrees(d: f64) -> f64 {
    if (-180.0..=180.0).contains(&d) {
        d
    } else {
        let w = libm::fmod(d + 180.0, 360.0);
        if w < 0.0 {
            w + 180.0
        } else {
            w - 180.0
        }
    }
}

/// Projects `(lat, lon)` around `(ref_lat, ref_lon)`.
pub fn project_to_plane(lat: f64, lon: f64, ref_lat: f64, ref_lon: f64) -> PlanePoint {
    Projection::new(ref_lat, ref_lon).project(lat, lon)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HullKind {
    Point,
    Segment,
    Polygon,
}

/// Convex hull of a finite point set.
///
/// Polygon vertices are counter-clockwise, strictly convex, and start at the
/// lexicographically smallest `(x, y)` vertex, so equal hulls compare equal.
#[derive(Clone, Debug, PartialEq)]
pub enum Hull {
    Point(PlanePoint),
    Segment(PlanePoint, PlanePoint),
    Polygon(Vec<PlanePoint>),
}

impl Hull {
    pub fn kind(&self) -> HullKind {
        match self {
            Hull::Point(_) => HullKind::Point,
            Hull::Segment(..) => HullKind::Segment,
            Hull::Polygon(_) => HullKind::Polygon,
        }
    }

    /// All vertices as an owned vector (1, 2, or >= 3 entries).
    pub fn vertex_list(&self) -> Vec<PlanePoint> {
        match self {
            Hull::Point(p) => alloc::vec![*p],
            Hull::Segment(a, b) => alloc::vec![*a, *b],
            Hull::Polygon(v) => v.clone(),
        }
    }

    /// True if `p` lies inside or within `tol` meters of the hull boundary.
    pub fn contains(&self, p: PlanePoint, tol: f64) -> bool {
        match self {
            Hull::Point(q) => distance(p, *q) <= tol,
            Hull::Segment(a, b) => point_segment_distance(p, *a, *b) <= tol,
            Hull::Polygon(v) => (0..v.len()).all(|i| {
                let a = v[i];
                let b = v[(i + 1) % v.len()];
                let len = distance(a, b);
                cross(a, b, p) / len >= -tol
            }),
        }
    }

    /// Axis-aligned bounding box as `(min, max)` corners.
    pub fn bbox(&self) -> (PlanePoint, PlanePoint) {
        let verts = self.vertex_list();
        let mut lo = verts[0];
        let mut hi = verts[0];
        for v in &verts[1..] {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Candidate separating axes (unit length).
    fn axes(&self, out: &mut Vec<PlanePoint>) {
        match self {
            Hull::Point(_) => {}
            Hull::Segment(a, b) => {
                let d = b.sub(*a);
                let len = libm::sqrt(d.dot(d));
                out.push(PlanePoint::new(d.x / len, d.y / len));
                out.push(PlanePoint::new(-d.y / len, d.x / len));
            }
            Hull::Polygon(v) => {
                for i in 0..v.len() {
                    let d = v[(i + 1) % v.len()].sub(v[i]);
                    let len = libm::sqrt(d.dot(d));
                    out.push(PlanePoint::new(-d.y / len, d.x / len));
                }
            }
        }
    }
}

fn point_segment_distance(p: PlanePoint, a: PlanePoint, b: PlanePoint) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return distance(p, a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    distance(p, PlanePoint::new(a.x + t * ab.x, a.y + t * ab.y))
}

/// Andrew's monotone chain. Collinear boundary points are dropped.
pub fn convex_hull(points: &[PlanePoint]) -> Result<Hull, GeoError> {
    if points.is_empty() {
        return Err(GeoError::NoPoints);
    }
    let mut pts: Vec<PlanePoint> = points.to_vec();
    pts.sort_by(PlanePoint::lex_cmp);
    pts.dedup();
    if pts.len() == 1 {
        return Ok(Hull::Point(pts[0]));
    }

    let mut hull: Vec<PlanePoint> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();

    Ok(match hull.len() {
        // all input points collinear: extremes of the sorted order
        0..=2 => Hull::Segment(pts[0], pts[pts.len() - 1]),
        _ => Hull::Polygon(hull),
    })
}

/// `(Σ wᵢ·pᵢ) / Σ wᵢ`.
pub fn weighted_centroid(points: &[PlanePoint], weights: &[f64]) -> Result<PlanePoint, GeoError> {
    if points.len() != weights.len() {
        return Err(GeoError::LengthMismatch {
            points: points.len(),
            weights: weights.len(),
        });
    }
    if points.is_empty() {
        return Err(GeoError::NoPoints);
    }
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for (p, &w) in points.iter().zip(weights) {
        if !(w.is_finite() && w >= 0.0) {
            return Err(GeoError::InvalidWeight);
        }
        sx += w * p.x;
        sy += w * p.y;
        sw += w;
    }
    if sw <= 0.0 {
        return Err(GeoError::ZeroTotalWeight);
    }
    Ok(PlanePoint::new(sx / sw, sy / sw))
}

/// Whether two closed convex hulls intersect, touching boundaries included.
///
/// Separating-axis test over the edge normals of both shapes, plus segment
/// directions (needed for collinear segments) and, for two points, the axis
/// through both.
pub fn hulls_intersect(a: &Hull, b: &Hull) -> bool {
    let tol = INCIDENCE_TOLERANCE_M;
    let mut axes = Vec::new();
    a.axes(&mut axes);
    b.axes(&mut axes);
    if let (Hull::Point(p), Hull::Point(q)) = (a, b) {
        return distance(*p, *q) <= tol;
    }
    let va = a.vertex_list();
    let vb = b.vertex_list();
    for axis in axes {
        let (amin, amax) = project_onto(&va, axis);
        let (bmin, bmax) = project_onto(&vb, axis);
        if amax + tol < bmin || bmax + tol < amin {
            return false;
        }
    }
    true
}

fn project_onto(verts: &[PlanePoint], axis: PlanePoint) -> (f64, f64) {
    verts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            let d = v.dot(axis);
            (lo.min(d), hi.max(d))
        })
}
