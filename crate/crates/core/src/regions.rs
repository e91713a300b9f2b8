//! Achievable rate regions as polygons in the nonnegative quadrant.
//!
//! Every region handled here is down-closed, hence star-shaped about the
//! origin: each ray from the origin leaves it exactly once. Unions and
//! intersections are therefore computed as the pointwise max/min of the
//! radial boundary function, evaluated at every vertex angle and every edge
//! crossing, which is exact for polygons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{RatePair, TimeShareProfile};
use crate::prob::{info_quantities, ChannelKernel, FiniteDist, InfoReport, JointDist3};

/// Boundary tolerance for membership and degeneracy checks.
pub const GEOM_EPS: f64 = 1e-12;

/// Closed polygon `(r_x, r_y)` with vertices counterclockwise from the origin.
///
/// The polygon is the closure of the region, clipped at a finite extent in
/// the directions flagged open.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPolygon {
    vertices: Vec<(f64, f64)>,
    pub open_rx: bool,
    pub open_ry: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    /// Interior only.
    Strict,
    /// Interior plus boundary.
    Closed,
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// Drops repeated and collinear vertices; the origin is kept.
fn simplify(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.dedup_by(|a, b| (a.0 - b.0).abs() < GEOM_EPS && (a.1 - b.1).abs() < GEOM_EPS);
    while v.len() > 1 {
        let (f, l) = (v[0], v[v.len() - 1]);
        if (f.0 - l.0).abs() < GEOM_EPS && (f.1 - l.1).abs() < GEOM_EPS {
            v.pop();
        } else {
            break;
        }
    }
    let mut changed = true;
    while changed && v.len() > 3 {
        changed = false;
        for i in 1..v.len() {
            let (a, b, c) = (v[i - 1], v[i], v[(i + 1) % v.len()]);
            let scale = ((c.0 - a.0).powi(2) + (c.1 - a.1).powi(2)).sqrt().max(1.0);
            if cross(a, b, c).abs() < GEOM_EPS * scale {
                v.remove(i);
                changed = true;
                break;
            }
        }
    }
    v
}

impl RegionPolygon {
    pub fn empty() -> Self {
        Self { vertices: Vec::new(), open_rx: false, open_ry: false }
    }

    /// Builds a polygon from counterclockwise vertices; zero-area input is
    /// the empty region.
    pub fn from_vertices(vertices: Vec<(f64, f64)>, open_rx: bool, open_ry: bool) -> Result<Self> {
        if vertices.iter().any(|&(x, y)| !(x.is_finite() && y.is_finite()) || x < -GEOM_EPS || y < -GEOM_EPS) {
            return Err(Error::arg("region vertices must be finite and nonnegative"));
        }
        let v = simplify(vertices.into_iter().map(|(x, y)| (x.max(0.0), y.max(0.0))).collect());
        let p = Self { vertices: v, open_rx, open_ry };
        if p.vertices.len() < 3 || p.area() < GEOM_EPS {
            return Ok(Self::empty());
        }
        Ok(p)
    }

    /// Axis-aligned box `[0, w] × [0, h]`.
    fn rect(w: f64, h: f64, open_rx: bool, open_ry: bool) -> Self {
        Self::from_vertices(vec![(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)], open_rx, open_ry).expect("finite box")
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a.0 * b.1 - a.1 * b.0
            })
            .sum::<f64>()
            * 0.5
    }

    fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: (f64, f64)) -> f64 {
        self.edges().map(|(a, b)| seg_dist(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// Crossing-number point-in-polygon test with an explicit boundary band.
    pub fn contains(&self, r: RatePair, mode: Membership) -> bool {
        self.contains_point((r.r_x, r.r_y), mode)
    }

    pub fn contains_point(&self, p: (f64, f64), mode: Membership) -> bool {
        if self.is_empty() {
            return false;
        }
        if self.boundary_distance(p) <= GEOM_EPS {
            return mode == Membership::Closed;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.1 > p.1) != (b.1 > p.1) {
                let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
                if p.0 < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance from `p` to the polygon (0 inside).
    pub fn distance(&self, p: (f64, f64)) -> f64 {
        if self.is_empty() {
            return f64::INFINITY;
        }
        if self.contains_point(p, Membership::Closed) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    /// Swaps the two axes.
    pub fn transpose(&self) -> Self {
        let mut v: Vec<(f64, f64)> = self.vertices.iter().map(|&(x, y)| (y, x)).collect();
        // reflection reverses orientation; restore counterclockwise order from the origin
        if !v.is_empty() {
            v[1..].reverse();
        }
        Self { vertices: v, open_rx: self.open_ry, open_ry: self.open_rx }
    }

    /// Distance from the origin to the boundary along angle `theta`.
    fn radius(&self, theta: f64) -> f64 {
        let d = (theta.cos(), theta.sin());
        let mut best: f64 = 0.0;
        for (a, b) in self.edges() {
            let e = (b.0 - a.0, b.1 - a.1);
            let den = d.0 * e.1 - d.1 * e.0;
            if den.abs() < 1e-15 {
                // edge parallel to the ray: count its endpoints lying on the ray
                for p in [a, b] {
                    if (d.0 * p.1 - d.1 * p.0).abs() < GEOM_EPS {
                        best = best.max(p.0 * d.0 + p.1 * d.1);
                    }
                }
                continue;
            }
            let s = (d.1 * a.0 - d.0 * a.1) / den;
            let t = (a.0 * e.1 - a.1 * e.0) / den;
            if (-1e-12..=1.0 + 1e-12).contains(&s) && t >= 0.0 {
                best = best.max(t);
            }
        }
        best
    }

    /// Upper extent in each coordinate.
    pub fn extent(&self) -> (f64, f64) {
        self.vertices.iter().fold((0.0, 0.0), |acc, &(x, y)| (f64::max(acc.0, x), f64::max(acc.1, y)))
    }
}

fn seg_intersection(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> Option<(f64, f64)> {
    let r = (b.0 - a.0, b.1 - a.1);
    let s = (d.0 - c.0, d.1 - c.1);
    let den = r.0 * s.1 - r.1 * s.0;
    if den.abs() < 1e-15 {
        return None;
    }
    let t = ((c.0 - a.0) * s.1 - (c.1 - a.1) * s.0) / den;
    let u = ((c.0 - a.0) * r.1 - (c.1 - a.1) * r.0) / den;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some((a.0 + t * r.0, a.1 + t * r.1))
    } else {
        None
    }
}

fn radial_combine(a: &RegionPolygon, b: &RegionPolygon, take_max: bool) -> RegionPolygon {
    let mut angles = vec![0.0, std::f64::consts::FRAC_PI_2];
    let mut push = |p: (f64, f64)| {
        if p.0.hypot(p.1) > GEOM_EPS {
            angles.push(p.1.atan2(p.0));
        }
    };
    for p in a.vertices.iter().chain(&b.vertices) {
        push(*p);
    }
    for (p, q) in a.edges() {
        for (r, s) in b.edges() {
            if let Some(x) = seg_intersection(p, q, r, s) {
                push(x);
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let mut verts = vec![(0.0, 0.0)];
    for th in angles {
        let (ra, rb) = (a.radius(th), b.radius(th));
        let r = if take_max { ra.max(rb) } else { ra.min(rb) };
        verts.push((r * th.cos(), r * th.sin()));
    }
    // snap axis points exactly onto the axes
    if let Some(p) = verts.get_mut(1) {
        p.1 = 0.0;
    }
    if let Some(p) = verts.last_mut() {
        p.0 = 0.0;
    }
    let (ox, oy) = if take_max { (a.open_rx || b.open_rx, a.open_ry || b.open_ry) } else { (a.open_rx && b.open_rx, a.open_ry && b.open_ry) };
    RegionPolygon::from_vertices(verts, ox, oy).unwrap_or_else(|_| RegionPolygon::empty())
}

/// Intersection of two down-closed regions.
pub fn intersect_regions(a: &RegionPolygon, b: &RegionPolygon) -> RegionPolygon {
    if a.is_empty() || b.is_empty() {
        return RegionPolygon::empty();
    }
    radial_combine(a, b, false)
}

/// Union of two down-closed regions.
pub fn union_regions(a: &RegionPolygon, b: &RegionPolygon) -> RegionPolygon {
    match (a.is_empty(), b.is_empty()) {
        (true, _) => b.clone(),
        (_, true) => a.clone(),
        _ => radial_combine(a, b, true),
    }
}

/// Convex hull of the union of the given regions.
pub fn convex_hull_union(regions: &[RegionPolygon]) -> Result<RegionPolygon> {
    if regions.is_empty() {
        return Err(Error::arg("convex hull of an empty list"));
    }
    let mut pts: Vec<(f64, f64)> = regions.iter().flat_map(|r| r.vertices.iter().copied()).collect();
    if pts.is_empty() {
        return Ok(RegionPolygon::empty());
    }
    pts.push((0.0, 0.0));
    // round-off twins would otherwise read as collinear and evict true corners
    let snap = |v: f64| (v / GEOM_EPS).round() * GEOM_EPS;
    for p in pts.iter_mut() {
        *p = (snap(p.0), snap(p.1));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    // Andrew's monotone chain, counterclockwise
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    // rotate so the origin comes first
    let o = hull.iter().position(|p| p.0.abs() < GEOM_EPS && p.1.abs() < GEOM_EPS).unwrap_or(0);
    hull.rotate_left(o);
    let open_rx = regions.iter().any(|r| r.open_rx);
    let open_ry = regions.iter().any(|r| r.open_ry);
    RegionPolygon::from_vertices(hull, open_rx, open_ry)
}

/// Corner informations defining the X-decoder region:
/// `{r_x < a} ∪ {r_x < b, r_x + r_y < c}` with `a ≤ b ≤ c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionBounds {
    /// `I(X;Z)`
    pub a: f64,
    /// `I(X;Z|Y)`
    pub b: f64,
    /// `I(XY;Z)`
    pub c: f64,
}

impl RegionBounds {
    pub fn from_info(i: &InfoReport) -> Self {
        Self { a: i.i_x_z, b: i.i_x_z_given_y, c: i.i_xy_z }
    }

    /// Signed depth of `r` inside the region (positive inside).
    pub fn margin(&self, r: RatePair) -> f64 {
        let region_i = self.a - r.r_x;
        let region_ii = (self.b - r.r_x).min(self.c - r.r_x - r.r_y);
        region_i.max(region_ii)
    }

    /// Direct evaluation of the defining strict inequalities.
    pub fn contains(&self, r: RatePair) -> bool {
        r.r_x < self.a || (r.r_x < self.b && r.r_x + r.r_y < self.c)
    }

    fn polygon(&self, clip: f64) -> RegionPolygon {
        let strip = RegionPolygon::rect(self.a, clip, false, true);
        let c = self.c.min(clip);
        let b = self.b.min(c);
        let pentagon = RegionPolygon::from_vertices(vec![(0.0, 0.0), (b, 0.0), (b, c - b), (0.0, c)], false, false)
            .unwrap_or_else(|_| RegionPolygon::empty());
        union_regions(&strip, &pentagon)
    }
}

/// Extent used for the open direction: no information term exceeds it.
pub fn region_clip(nx: usize, ny: usize) -> f64 {
    (nx as f64).log2() + (ny as f64).log2() + 1.0
}

fn bounds_x(p_x: &FiniteDist, p_y: &FiniteDist, w: &ChannelKernel) -> Result<RegionBounds> {
    Ok(RegionBounds::from_info(&info_quantities(&JointDist3::product(p_x, p_y, w)?)))
}

/// The X-decoder region for a composition pair.
pub fn region_x(p_x: &FiniteDist, p_y: &FiniteDist, w: &ChannelKernel) -> Result<RegionPolygon> {
    Ok(bounds_x(p_x, p_y, w)?.polygon(region_clip(w.nx(), w.ny())))
}

/// The Y-decoder region: `region_x` with the users swapped, transposed back.
pub fn region_y(p_x: &FiniteDist, p_y: &FiniteDist, w_tilde: &ChannelKernel) -> Result<RegionPolygon> {
    Ok(region_x(p_y, p_x, &w_tilde.swap_inputs())?.transpose())
}

pub fn region_xy(p_x: &FiniteDist, p_y: &FiniteDist, w: &ChannelKernel, w_tilde: &ChannelKernel) -> Result<RegionPolygon> {
    Ok(intersect_regions(&region_x(p_x, p_y, w)?, &region_y(p_x, p_y, w_tilde)?))
}

/// U-conditioned corner informations, averaged over the atoms.
pub fn timeshare_bounds(profile: &TimeShareProfile, w: &ChannelKernel) -> Result<RegionBounds> {
    let mut acc = RegionBounds { a: 0.0, b: 0.0, c: 0.0 };
    for u in 0..profile.atoms() {
        let wu = profile.p_u.get(u);
        if wu <= 0.0 {
            continue;
        }
        let b = bounds_x(&profile.p_x_given_u[u], &profile.p_y_given_u[u], w)?;
        acc.a += wu * b.a;
        acc.b += wu * b.b;
        acc.c += wu * b.c;
    }
    Ok(acc)
}

fn swap_profile(profile: &TimeShareProfile) -> TimeShareProfile {
    TimeShareProfile {
        p_u: profile.p_u.clone(),
        p_x_given_u: profile.p_y_given_u.clone(),
        p_y_given_u: profile.p_x_given_u.clone(),
    }
}

pub fn region_x_timeshare(profile: &TimeShareProfile, w: &ChannelKernel) -> Result<RegionPolygon> {
    Ok(timeshare_bounds(profile, w)?.polygon(region_clip(w.nx(), w.ny())))
}

pub fn region_y_timeshare(profile: &TimeShareProfile, w_tilde: &ChannelKernel) -> Result<RegionPolygon> {
    Ok(region_x_timeshare(&swap_profile(profile), &w_tilde.swap_inputs())?.transpose())
}

pub fn region_xy_timeshare(profile: &TimeShareProfile, w: &ChannelKernel, w_tilde: &ChannelKernel) -> Result<RegionPolygon> {
    Ok(intersect_regions(&region_x_timeshare(profile, w)?, &region_y_timeshare(profile, w_tilde)?))
}

/// Options for the time-sharing gap search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessOptions {
    /// Grid step in bits.
    pub resolution: f64,
    /// Minimum Euclidean distance between the witness and the hull.
    pub min_gap: f64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self { resolution: 0.005, min_gap: 0.005 }
    }
}

/// Everything the gap search builds, for export.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapSearch {
    /// Fixed-composition `R_xy` of each atom, in profile order.
    pub atom_regions: Vec<RegionPolygon>,
    /// Convex hull of `atom_regions` (simple time-sharing).
    pub hull: RegionPolygon,
    pub timeshare_xy: RegionPolygon,
    pub witness: Option<RatePair>,
}

/// Searches for a rate pair achievable by uniform time-sharing under
/// `profile` but at least `min_gap` outside the convex hull of the atoms'
/// fixed-composition regions. Grid order is `r_x` major, then `r_y`.
pub fn profile_gap_search(
    profile: &TimeShareProfile,
    w: &ChannelKernel,
    w_tilde: &ChannelKernel,
    opts: WitnessOptions,
) -> Result<GapSearch> {
    if !(opts.resolution > 0.0) {
        return Err(Error::arg("witness resolution must be positive"));
    }
    let atom_regions = (0..profile.atoms())
        .map(|u| region_xy(&profile.p_x_given_u[u], &profile.p_y_given_u[u], w, w_tilde))
        .collect::<Result<Vec<_>>>()?;
    let hull = convex_hull_union(&atom_regions)?;
    let ts = region_xy_timeshare(profile, w, w_tilde)?;
    let (ex, ey) = ts.extent();
    let (nx, ny) = ((ex / opts.resolution).floor() as usize, (ey / opts.resolution).floor() as usize);
    let mut witness = None;
    'outer: for i in 0..=nx {
        for j in 0..=ny {
            let p = (i as f64 * opts.resolution, j as f64 * opts.resolution);
            if ts.contains_point(p, Membership::Strict) && hull.distance(p) >= opts.min_gap {
                witness = Some(RatePair { r_x: p.0, r_y: p.1 });
                break 'outer;
            }
        }
    }
    Ok(GapSearch { atom_regions, hull, timeshare_xy: ts, witness })
}

/// [`profile_gap_search`] for the even two-atom mix of `p1` and `p2`.
pub fn timeshare_gap_search(
    p1: (&FiniteDist, &FiniteDist),
    p2: (&FiniteDist, &FiniteDist),
    w: &ChannelKernel,
    w_tilde: &ChannelKernel,
    opts: WitnessOptions,
) -> Result<GapSearch> {
    let profile = TimeShareProfile::even_mix((p1.0.clone(), p1.1.clone()), (p2.0.clone(), p2.1.clone()))?;
    profile_gap_search(&profile, w, w_tilde, opts)
}

pub fn find_timeshare_gap_witness(
    p1: (&FiniteDist, &FiniteDist),
    p2: (&FiniteDist, &FiniteDist),
    w: &ChannelKernel,
    w_tilde: &ChannelKernel,
    opts: WitnessOptions,
) -> Result<Option<RatePair>> {
    Ok(timeshare_gap_search(p1, p2, w, w_tilde, opts)?.witness)
}

#[cfg(test)]
mod tests;
