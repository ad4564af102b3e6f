//! Rectangle-based link classification.
//!
//! Vehicles and buildings are rectangles. A TX-RX link is LOS when the
//! antenna-to-antenna segment crosses no rectangle other than the two
//! endpoints' own footprints, OLOS when it crosses only vehicles, and NLOS
//! when it crosses a building. NLOS links between streets whose centre lines
//! do not meet are [`LinkClass::NlosParallel`].
//!
//! Touching a rectangle edge counts as crossing it.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::mobility::VehicleBody;
use crate::propagation::NlosGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Antenna position with height above ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub xy: Vec2,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    Vehicle,
    Building,
}

/// Oriented rectangle footprint. `length` runs along `heading`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub center: Vec2,
    pub length: f64,
    pub width: f64,
    #[serde(default)]
    pub heading: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    pub kind: ObstacleKind,
}

impl Rect {
    pub fn new(
        center: Vec2,
        length: f64,
        width: f64,
        heading: f64,
        height: Option<f64>,
        kind: ObstacleKind,
    ) -> Result<Self> {
        let r = Self {
            center,
            length,
            width,
            heading,
            height,
            kind,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.width > 0.0) || !self.heading.is_finite() {
            return Err(domain(format!(
                "degenerate rectangle: length {} width {} heading {}",
                self.length, self.width, self.heading
            )));
        }
        if let Some(h) = self.height {
            if !(h > 0.0) {
                return Err(domain(format!("rectangle height must be positive, got {h}")));
            }
        }
        Ok(())
    }

    /// World point expressed in the rectangle frame (centre origin, x along heading).
    pub fn to_local(&self, p: Vec2) -> Vec2 {
        (p - self.center).rotate(-self.heading)
    }

    fn half_extents(&self) -> (f64, f64) {
        (self.length / 2.0, self.width / 2.0)
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let (hx, hy) = self.half_extents();
        [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)].map(|(x, y)| self.center + Vec2::new(x, y).rotate(self.heading))
    }

    /// Closed containment test.
    pub fn contains(&self, p: Vec2) -> bool {
        let l = self.to_local(p);
        let (hx, hy) = self.half_extents();
        l.x.abs() <= hx && l.y.abs() <= hy
    }

    fn distance_to_point(&self, p: Vec2) -> f64 {
        let l = self.to_local(p);
        let (hx, hy) = self.half_extents();
        let dx = (l.x.abs() - hx).max(0.0);
        let dy = (l.y.abs() - hy).max(0.0);
        dx.hypot(dy)
    }

    /// Parameter interval of the infinite line `a + t (b - a)` inside the
    /// closed rectangle, if any.
    fn clip(&self, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
        let p = self.to_local(a);
        let d = self.to_local(b) - p;
        let (hx, hy) = self.half_extents();
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for (pi, qi) in [(-d.x, p.x + hx), (d.x, hx - p.x), (-d.y, p.y + hy), (d.y, hy - p.y)] {
            if pi == 0.0 {
                if qi < 0.0 {
                    return None;
                }
            } else {
                let r = qi / pi;
                if pi < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

fn distance_point_segment(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let d = b - a;
    let len2 = d.dot(d);
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(d) / len2).clamp(0.0, 1.0)
    };
    ((a + d * t).distance(p), t)
}

/// True iff the open segment `(a, b)` meets the closed rectangle.
pub fn segment_intersects_rect(a: Vec2, b: Vec2, r: &Rect) -> Result<bool> {
    r.validate()?;
    if a == b {
        return Err(domain("segment endpoints coincide"));
    }
    Ok(matches!(r.clip(a, b), Some((t0, t1)) if t1 > 0.0 && t0 < 1.0))
}

/// Along-segment parameter of the obstacle and its lateral clearance from
/// the segment (0 when the segment crosses it).
fn obstacle_position(a: Vec2, b: Vec2, r: &Rect) -> (f64, f64) {
    if let Some((t0, t1)) = r.clip(a, b) {
        if t1 > 0.0 && t0 < 1.0 {
            return (0.5f64.clamp(t0.max(0.0), t1.min(1.0)), 0.0);
        }
    }
    let mut best = (r.distance_to_point(a), 0.0);
    let db = r.distance_to_point(b);
    if db < best.0 {
        best = (db, 1.0);
    }
    for c in r.corners() {
        let (dist, t) = distance_point_segment(c, a, b);
        if dist < best.0 {
            best = (dist, t);
        }
    }
    (best.1, best.0)
}

/// Whether `obstacle` leaves the first Fresnel ellipsoid of the TX-RX ray
/// free. Returns `false` when the link has to be downgraded from LOS.
///
/// The ellipsoid radius at the obstacle's along-path position is
/// `r1 = sqrt(λ d1 d2 / (d1 + d2))`; the obstacle (a box from the ground up
/// to its height) penetrates when its nearest point lies within `r1` of the
/// ray.
pub fn fresnel_clearance(tx: Point3, rx: Point3, obstacle: &Rect, lambda_m: f64) -> Result<bool> {
    let top = obstacle
        .height
        .ok_or_else(|| config("Fresnel test needs obstacle heights"))?;
    if !(lambda_m > 0.0) {
        return Err(domain(format!("wavelength must be positive, got {lambda_m}")));
    }
    let total = tx.xy.distance(rx.xy);
    if total == 0.0 {
        return Err(domain("segment endpoints coincide"));
    }
    let (t, lateral) = obstacle_position(tx.xy, rx.xy, obstacle);
    let d1 = t * total;
    let d2 = total - d1;
    let r1 = (lambda_m * d1 * d2 / total).sqrt();
    let ray = tx.z + t * (rx.z - tx.z);
    let vertical = (ray - top).max(0.0);
    Ok(lateral * lateral + vertical * vertical >= r1 * r1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkClass {
    Los,
    Olos,
    Nlos,
    NlosParallel,
}

impl LinkClass {
    pub const ALL: [LinkClass; 4] = [
        LinkClass::Los,
        LinkClass::Olos,
        LinkClass::Nlos,
        LinkClass::NlosParallel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LinkClass::Los => "LOS",
            LinkClass::Olos => "OLOS",
            LinkClass::Nlos => "NLOS",
            LinkClass::NlosParallel => "NLOS_PARALLEL",
        }
    }

    pub fn is_nlos(self) -> bool {
        matches!(self, LinkClass::Nlos | LinkClass::NlosParallel)
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LinkClass {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        LinkClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| crate::Error::Format(format!("unknown link class {s:?}")))
    }
}

/// Street with an axis-aligned centre line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Road {
    pub start: Vec2,
    pub end: Vec2,
    pub width_m: f64,
}

impl Road {
    pub fn validate(&self) -> Result<()> {
        let axis_aligned = self.start.x == self.end.x || self.start.y == self.end.y;
        if !(self.width_m > 0.0) || self.start == self.end || !axis_aligned {
            return Err(config(format!(
                "road must be a non-empty axis-aligned segment with positive width: {self:?}"
            )));
        }
        Ok(())
    }

    fn centerline_distance(&self, p: Vec2) -> f64 {
        distance_point_segment(p, self.start, self.end).0
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.centerline_distance(p) <= self.width_m / 2.0
    }

    fn direction(&self) -> Vec2 {
        let d = self.end - self.start;
        d * (1.0 / d.norm())
    }

    /// Intersection point of two centre lines, if the segments meet.
    pub fn crossing(&self, other: &Road) -> Option<Vec2> {
        let (p, r) = (self.start, self.end - self.start);
        let (q, s) = (other.start, other.end - other.start);
        let denom = r.cross(s);
        if denom == 0.0 {
            return None;
        }
        let t = (q - p).cross(s) / denom;
        let u = (q - p).cross(r) / denom;
        ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| p + r * t)
    }
}

/// Index of the road a point lies on; the nearest centre line wins inside
/// junction boxes.
pub fn road_of(p: Vec2, roads: &[Road]) -> Option<usize> {
    roads
        .iter()
        .enumerate()
        .filter(|(_, r)| r.contains(p))
        .min_by(|(_, a), (_, b)| a.centerline_distance(p).total_cmp(&b.centerline_distance(p)))
        .map(|(i, _)| i)
}

/// Whether the streets of two points meet. Points off every road are
/// treated as not meeting.
pub fn streets_intersect(a: Vec2, b: Vec2, roads: &[Road]) -> bool {
    match (road_of(a, roads), road_of(b, roads)) {
        (Some(i), Some(j)) => i == j || roads[i].crossing(&roads[j]).is_some(),
        _ => false,
    }
}

/// Intersection-model geometry for an NLOS link.
pub fn nlos_geometry(tx: Vec2, rx: Vec2, roads: &[Road]) -> Result<NlosGeometry> {
    let (ti, ri) = match (road_of(tx, roads), road_of(rx, roads)) {
        (Some(t), Some(r)) if t != r => (t, r),
        _ => return Err(config("NLOS link needs TX and RX on two distinct declared roads")),
    };
    let (tx_road, rx_road) = (&roads[ti], &roads[ri]);
    let center = tx_road
        .crossing(rx_road)
        .ok_or_else(|| config("TX and RX streets do not intersect"))?;
    let normal = {
        let u = tx_road.direction();
        Vec2::new(-u.y, u.x)
    };
    let side = if normal.dot(rx - center) >= 0.0 { 1.0 } else { -1.0 };
    let lateral = normal.dot(tx - center);
    let xt = (side * tx_road.width_m / 2.0 - lateral).abs().max(0.1);
    Ok(NlosGeometry {
        dr_m: rx.distance(center).max(f64::MIN_POSITIVE),
        dt_m: tx.distance(center).max(f64::MIN_POSITIVE),
        wr_m: rx_road.width_m,
        xt_m: xt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyOptions {
    /// When set, obstacles inside the first Fresnel zone of this wavelength
    /// also obstruct the link.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fresnel_lambda_m: Option<f64>,
}

/// Classify a link against `obstacles`, which must not include the TX and
/// RX footprints.
pub fn classify_link<'a>(
    tx: &VehicleBody,
    rx: &VehicleBody,
    obstacles: impl IntoIterator<Item = &'a Rect>,
    roads: &[Road],
    opts: &ClassifyOptions,
) -> Result<LinkClass> {
    let (a, b) = (tx.antenna, rx.antenna);
    if a == b {
        return Err(domain(format!(
            "vehicles {} and {} share an antenna position",
            tx.id, rx.id
        )));
    }
    let mut vehicle_hit = false;
    for o in obstacles {
        if segment_intersects_rect(a, b, o)? {
            match o.kind {
                ObstacleKind::Building => {
                    return Ok(if streets_intersect(a, b, roads) {
                        LinkClass::Nlos
                    } else {
                        LinkClass::NlosParallel
                    })
                }
                ObstacleKind::Vehicle => vehicle_hit = true,
            }
        } else if let Some(lambda) = opts.fresnel_lambda_m {
            if !fresnel_clearance(tx.antenna3(), rx.antenna3(), o, lambda)? {
                vehicle_hit = true;
            }
        }
    }
    Ok(if vehicle_hit { LinkClass::Olos } else { LinkClass::Los })
}

/// Immutable scene snapshot.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default)]
    pub vehicles: Vec<VehicleBody>,
    #[serde(default)]
    pub buildings: Vec<Rect>,
    #[serde(default)]
    pub roads: Vec<Road>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        for v in &self.vehicles {
            v.footprint.validate()?;
        }
        for b in &self.buildings {
            b.validate()?;
        }
        for r in &self.roads {
            r.validate()?;
        }
        Ok(())
    }

    pub fn vehicle(&self, id: u32) -> Option<&VehicleBody> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    /// Classify the link between two vehicles of the scene.
    pub fn classify(&self, tx_id: u32, rx_id: u32, opts: &ClassifyOptions) -> Result<LinkClass> {
        let missing = |id| config(format!("vehicle {id} is not in the scene"));
        let tx = self.vehicle(tx_id).ok_or_else(|| missing(tx_id))?;
        let rx = self.vehicle(rx_id).ok_or_else(|| missing(rx_id))?;
        if tx_id == rx_id {
            return Err(domain("TX and RX must differ"));
        }
        let obstacles = self.buildings.iter().chain(
            self.vehicles
                .iter()
                .filter(|v| v.id != tx_id && v.id != rx_id)
                .map(|v| &v.footprint),
        );
        classify_link(tx, rx, obstacles, &self.roads, opts)
    }
}
