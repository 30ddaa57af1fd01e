//! Reverse systems: finitely many expansive maps acting on a discrete set,
//! their forward orbits and invariant sets, the golden strip and its
//! projection, the decomposition of `A(1̄)` as `A + D`, and fast basins.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::address::{PriorityOrder, Word};
use crate::error::{Error, Result};
use crate::ifs::{AffineMap, Ifs, Point, PREDICATE_TOL};
use crate::raster::{Raster, Viewport};
use crate::tiling::blowup_region;

/// Default bound on the number of orbit points.
pub const ORBIT_CAP: usize = 10_000_000;

/// `ρ` with `ρ² + ρ = 1`.
pub fn golden_rho() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Sign of `√5·a - b`, exactly.
pub fn cmp_sqrt5(a: i64, b: i64) -> Ordering {
    let (a, b) = (a as i128, b as i128);
    match (a.signum(), b.signum()) {
        (sa, sb) if sa != sb => sa.cmp(&sb),
        (0, _) => Ordering::Equal,
        (1, _) => (5 * a * a).cmp(&(b * b)),
        _ => (b * b).cmp(&(5 * a * a)),
    }
}

/// Whether the lattice point `(x, y)` satisfies `ρx ≤ y ≤ ρx + 1`, decided
/// in integers: `2ρ = √5 - 1`, so the bounds read `√5·x ≤ 2y + x` and
/// `2y + x - 2 ≤ √5·x`.
pub fn in_golden_strip(x: i64, y: i64) -> bool {
    cmp_sqrt5(x, 2 * y + x) != Ordering::Greater && cmp_sqrt5(x, 2 * y + x - 2) != Ordering::Less
}

/// The set the maps act on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    /// Integer points, with `y = 0` for line systems.
    Lattice,
    /// Lattice points of the strip `ρx ≤ y ≤ ρx + 1`.
    GoldenStrip,
    /// Real points; two points are the same when they agree to `quantum`.
    Real { quantum: f64 },
}

/// Axis-aligned box; for line systems only `x` matters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub lo: Point,
    pub hi: Point,
}

impl Window {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        if !(lo.x <= hi.x && lo.y <= hi.y) {
            return Err(Error::InvalidArgument(format!(
                "empty window ({}, {}) .. ({}, {})",
                lo.x, lo.y, hi.x, hi.y
            )));
        }
        Ok(Window { lo, hi })
    }

    /// `|x|, |y| ≤ radius`.
    pub fn square(radius: f64) -> Self {
        Window {
            lo: Point::new(-radius, -radius),
            hi: Point::new(radius, radius),
        }
    }

    /// `[lo, hi]` on the x-axis.
    pub fn interval(lo: f64, hi: f64) -> Self {
        Window {
            lo: Point::new(lo, 0.0),
            hi: Point::new(hi, 0.0),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let e = PREDICATE_TOL;
        p.x >= self.lo.x - e && p.x <= self.hi.x + e && p.y >= self.lo.y - e && p.y <= self.hi.y + e
    }

    /// The window with `margin` removed on every side (the y extent of a
    /// line window is left alone).
    pub fn shrink(&self, margin: f64) -> Self {
        let my = if self.lo.y == self.hi.y { 0.0 } else { margin };
        Window {
            lo: Point::new(self.lo.x + margin, self.lo.y + my),
            hi: Point::new(self.hi.x - margin, self.hi.y - my),
        }
    }
}

/// Orbit key: exact coordinates on lattices, rounded multiples of the
/// quantum on real domains.
pub type Key = [i64; 2];

fn key_of(p: Point, quantum: Option<f64>) -> Key {
    match quantum {
        None => [p.x.round() as i64, p.y.round() as i64],
        Some(q) => [(p.x / q).round() as i64, (p.y / q).round() as i64],
    }
}

fn is_integer(v: f64) -> bool {
    v.fract() == 0.0 && v.abs() < (1u64 << 52) as f64
}

/// A reverse system `T = {t_1, ..., t_m}` of expansive maps on a domain.
#[derive(Clone, Debug)]
pub struct ReverseIfs {
    name: String,
    maps: Vec<AffineMap>,
    domain: Domain,
    line: bool,
    /// Integer coefficients `[[a, b, e], [c, d, g]]` on lattice domains.
    int_maps: Vec<[[i64; 3]; 2]>,
}

impl ReverseIfs {
    pub fn new(name: impl Into<String>, maps: Vec<AffineMap>, domain: Domain) -> Result<Self> {
        let name = name.into();
        if maps.is_empty() {
            return Err(Error::InvalidArgument("a reverse system needs at least one map".into()));
        }
        for f in &maps {
            if f.det().abs() < PREDICATE_TOL {
                return Err(Error::SingularMap { det: f.det() });
            }
        }
        let line = maps.iter().all(|f| {
            let [[_, b, _], [c, _, g]] = f.rows();
            b == 0.0 && c == 0.0 && g == 0.0
        });
        let int_maps = match domain {
            Domain::Real { quantum } => {
                if !(quantum > 0.0) {
                    return Err(Error::InvalidArgument(format!("quantum {quantum} is not positive")));
                }
                Vec::new()
            }
            _ => maps
                .iter()
                .map(|f| {
                    let r = f.rows();
                    if r.iter().flatten().all(|&v| is_integer(v)) {
                        Ok(r.map(|row| row.map(|v| v as i64)))
                    } else {
                        Err(Error::InvalidArgument(format!("{f} has non-integer coefficients")))
                    }
                })
                .collect::<Result<_>>()?,
        };
        Ok(ReverseIfs {
            name,
            maps,
            domain,
            line,
            int_maps,
        })
    }

    /// `{2x, 2x - 1}` on the integers.
    pub fn example1() -> Self {
        ReverseIfs::new(
            "example1",
            vec![AffineMap::line(2.0, 0.0), AffineMap::line(2.0, -1.0)],
            Domain::Lattice,
        )
        .expect("integer maps")
    }

    /// `t_1(x, y) = (-x - y, -x)`, `t_2(x, y) = (1 - x - y, 1 - x)` on the
    /// golden strip.
    pub fn example2() -> Self {
        ReverseIfs::new(
            "example2",
            vec![
                AffineMap::from_rows([[-1.0, -1.0, 0.0], [-1.0, 0.0, 0.0]]),
                AffineMap::from_rows([[-1.0, -1.0, 1.0], [-1.0, 0.0, 1.0]]),
            ],
            Domain::GoldenStrip,
        )
        .expect("integer maps")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_line(&self) -> bool {
        self.line
    }

    fn quantum(&self) -> Option<f64> {
        match self.domain {
            Domain::Real { quantum } => Some(quantum),
            _ => None,
        }
    }

    pub fn key(&self, p: Point) -> Key {
        key_of(p, self.quantum())
    }

    /// Whether `p` is a point of the domain.
    pub fn contains(&self, p: Point) -> bool {
        if self.line && p.y != 0.0 {
            return false;
        }
        match self.domain {
            Domain::Real { .. } => p.x.is_finite() && p.y.is_finite(),
            Domain::Lattice => is_integer(p.x) && is_integer(p.y),
            Domain::GoldenStrip => {
                is_integer(p.x) && is_integer(p.y) && in_golden_strip(p.x as i64, p.y as i64)
            }
        }
    }

    /// `t_j(p)`, in exact integer arithmetic on lattice domains. `None` on
    /// overflow.
    pub fn apply(&self, j: usize, p: Point) -> Option<Point> {
        if self.int_maps.is_empty() {
            return Some(self.maps[j].apply(p));
        }
        let [[a, b, e], [c, d, g]] = self.int_maps[j];
        let (x, y) = (p.x as i64, p.y as i64);
        let nx = a.checked_mul(x)?.checked_add(b.checked_mul(y)?)?.checked_add(e)?;
        let ny = c.checked_mul(x)?.checked_add(d.checked_mul(y)?)?.checked_add(g)?;
        let out = Point::new(nx as f64, ny as f64);
        (nx.unsigned_abs() < 1 << 52 && ny.unsigned_abs() < 1 << 52).then_some(out)
    }

    /// Domain points of a window: every lattice point for discrete domains,
    /// `samples` uniform points for real ones.
    pub fn domain_points(&self, window: &Window, samples: usize, seed: u64) -> Vec<Point> {
        if let Domain::Real { .. } = self.domain {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            return (0..samples)
                .map(|_| {
                    let x = rng.random_range(window.lo.x..=window.hi.x);
                    let y = if self.line { 0.0 } else { rng.random_range(window.lo.y..=window.hi.y) };
                    Point::new(x, y)
                })
                .collect();
        }
        let (ylo, yhi) = if self.line {
            (0, 0)
        } else {
            (window.lo.y.ceil() as i64, window.hi.y.floor() as i64)
        };
        let mut out = Vec::new();
        for y in ylo..=yhi {
            for x in window.lo.x.ceil() as i64..=window.hi.x.floor() as i64 {
                let p = Point::new(x as f64, y as f64);
                if self.contains(p) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Spot check on `pairs` random pairs of domain points in `window`:
    /// `d(t_j x, t_j y) ≥ d(x, y)` for every map, and no two distinct points
    /// share an image.
    pub fn check_expansive(&self, window: &Window, pairs: usize, seed: u64) -> ExpansivityReport {
        let pts = self.domain_points(window, pairs.max(2), seed);
        let mut report = ExpansivityReport {
            pairs: 0,
            contracted: 0,
            collisions: 0,
            min_ratio: f64::INFINITY,
        };
        if pts.len() < 2 {
            return report;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        for _ in 0..pairs {
            let a = pts[rng.random_range(0..pts.len())];
            let b = pts[rng.random_range(0..pts.len())];
            if a == b {
                continue;
            }
            report.pairs += 1;
            let d = a.distance(b);
            for j in 0..self.len() {
                let (Some(ta), Some(tb)) = (self.apply(j, a), self.apply(j, b)) else {
                    continue;
                };
                let dt = ta.distance(tb);
                report.min_ratio = report.min_ratio.min(dt / d);
                if dt == 0.0 || self.key(ta) == self.key(tb) {
                    report.collisions += 1;
                } else if dt < d * (1.0 - PREDICATE_TOL) {
                    report.contracted += 1;
                }
            }
        }
        report
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansivityReport {
    pub pairs: usize,
    /// Pair images closer than the pair.
    pub contracted: usize,
    /// Distinct points sent to the same point.
    pub collisions: usize,
    /// Smallest `d(t x, t y) / d(x, y)` seen.
    pub min_ratio: f64,
}

impl ExpansivityReport {
    pub fn expansive(&self) -> bool {
        self.contracted == 0 && self.collisions == 0
    }
}

/// A point of an orbit and the first generation that reached it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitPoint {
    pub point: Point,
    pub generation: usize,
}

/// Points reached from the seeds inside a window.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteOrbit {
    pub window: Window,
    quantum: Option<f64>,
    points: BTreeMap<Key, OrbitPoint>,
}

impl DiscreteOrbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &OrbitPoint> {
        self.points.values()
    }

    pub fn keys(&self) -> BTreeSet<Key> {
        self.points.keys().copied().collect()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.contains_key(&key_of(p, self.quantum))
    }

    /// Removes a point; returns whether it was present.
    pub fn remove(&mut self, p: Point) -> bool {
        self.points.remove(&key_of(p, self.quantum)).is_some()
    }

    /// Deepest generation present.
    pub fn generations(&self) -> usize {
        self.points.values().map(|p| p.generation).max().unwrap_or(0)
    }

    /// `x,y,generation` per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,generation\n");
        for p in self.points.values() {
            out.push_str(&format!("{},{},{}\n", p.point.x, p.point.y, p.generation));
        }
        out
    }
}

/// Closure of the seeds under the maps, breadth first, keeping only domain
/// points inside `window`, for at most `max_gen` generations.
pub fn forward_orbit(rifs: &ReverseIfs, seeds: &[Point], window: &Window, max_gen: usize) -> Result<DiscreteOrbit> {
    forward_orbit_capped(rifs, seeds, window, max_gen, ORBIT_CAP)
}

pub fn forward_orbit_capped(
    rifs: &ReverseIfs,
    seeds: &[Point],
    window: &Window,
    max_gen: usize,
    cap: usize,
) -> Result<DiscreteOrbit> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("forward orbit needs at least one seed".into()));
    }
    let keep = |p: &Point| window.contains(*p) && rifs.contains(*p);
    let mut points = BTreeMap::new();
    let mut frontier = Vec::new();
    for &p in seeds.iter().filter(|p| keep(p)) {
        if points.insert(rifs.key(p), OrbitPoint { point: p, generation: 0 }).is_none() {
            frontier.push(p);
        }
    }
    let mut generation = 0;
    while !frontier.is_empty() && generation < max_gen {
        generation += 1;
        let images: Vec<Point> = frontier
            .par_iter()
            .flat_map_iter(|&p| (0..rifs.len()).filter_map(move |j| rifs.apply(j, p)))
            .filter(keep)
            .collect();
        frontier.clear();
        for q in images {
            if let std::collections::btree_map::Entry::Vacant(e) = points.entry(rifs.key(q)) {
                e.insert(OrbitPoint {
                    point: q,
                    generation,
                });
                frontier.push(q);
                if points.len() > cap {
                    return Err(Error::OrbitExplosion { cap });
                }
            }
        }
    }
    Ok(DiscreteOrbit {
        window: *window,
        quantum: rifs.quantum(),
        points,
    })
}

/// Comparison of `S` and `T(S)` on the window shrunk by `margin`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub inner: Window,
    /// Points of `S` in the inner window that are no image of a point of `S`.
    pub missing: Vec<Point>,
    /// Images of points of `S` in the inner window that are not in `S`.
    pub extra: Vec<Point>,
    pub checked: usize,
}

impl InvarianceReport {
    pub fn holds(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

/// Checks `S = T(S)` away from the window's edge. The margin must be wide
/// enough that every preimage of an inner point lies in the window.
pub fn verify_invariance_window(rifs: &ReverseIfs, orbit: &DiscreteOrbit, margin: f64) -> InvarianceReport {
    let inner = orbit.window.shrink(margin);
    let images: BTreeMap<Key, Point> = orbit
        .points()
        .flat_map(|p| (0..rifs.len()).filter_map(move |j| rifs.apply(j, p.point)))
        .filter(|q| inner.contains(*q))
        .map(|q| (rifs.key(q), q))
        .collect();
    let mut missing = Vec::new();
    let mut checked = 0;
    for (k, p) in &orbit.points {
        if inner.contains(p.point) {
            checked += 1;
            if !images.contains_key(k) {
                missing.push(p.point);
            }
        }
    }
    let extra = images
        .iter()
        .filter(|(k, _)| !orbit.points.contains_key(*k))
        .map(|(_, &q)| q)
        .collect();
    InvarianceReport {
        inner,
        missing,
        extra,
        checked,
    }
}

/// Fixed points of the composites `t_w`, `1 ≤ |w| ≤ max_len`, that are
/// domain points inside `window`. Each point is listed once.
pub fn periodic_points(rifs: &ReverseIfs, max_len: usize, window: &Window) -> Result<Vec<Point>> {
    let order = PriorityOrder::standard(rifs.len());
    let mut found = BTreeMap::new();
    for n in 1..=max_len {
        for w in order.words_increasing(n) {
            let t = compose(rifs, &w);
            let Ok(p) = t.fixed_point() else { continue };
            let snapped = match rifs.domain {
                Domain::Real { .. } => p,
                _ => Point::new(p.x.round(), p.y.round()),
            };
            if snapped.distance(p) <= PREDICATE_TOL && rifs.contains(snapped) && window.contains(snapped) {
                found.entry(rifs.key(snapped)).or_insert(snapped);
            }
        }
    }
    Ok(found.into_values().collect())
}

/// `t_{w_1} ∘ ... ∘ t_{w_n}`.
fn compose(rifs: &ReverseIfs, w: &Word) -> AffineMap {
    w.symbols()
        .iter()
        .fold(AffineMap::IDENTITY, |acc, &s| acc.compose(&rifs.maps[s as usize - 1]))
}

/// Gaps between consecutive projections of orbit points onto `y = ρx`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    /// `1 / √(1 + ρ²)`, the length of the projection of `(1, 0)`.
    pub scale: f64,
    pub gaps: Vec<f64>,
    /// Distinct gap lengths (to 1e-9) with their counts, shortest first.
    pub lengths: Vec<(f64, usize)>,
}

impl GapReport {
    /// The two most frequent lengths, shorter first.
    pub fn main_lengths(&self) -> (f64, f64) {
        let (a, b) = self.main();
        (a.0, b.0)
    }

    /// Count of the longer of the two most frequent lengths over the count
    /// of the shorter.
    pub fn count_ratio(&self) -> f64 {
        let (a, b) = self.main();
        b.1 as f64 / a.1 as f64
    }

    fn main(&self) -> ((f64, usize), (f64, usize)) {
        let mut by_count = self.lengths.clone();
        by_count.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.total_cmp(&b.0)));
        let a = by_count.first().copied().unwrap_or((f64::NAN, 0));
        let b = by_count.get(1).copied().unwrap_or(a);
        if a.0 <= b.0 {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// Projects the orbit orthogonally onto the line `y = ρx` and reports the gaps.
pub fn fib_projection(orbit: &DiscreteOrbit) -> Result<GapReport> {
    if orbit.len() < 3 {
        return Err(Error::DegenerateOrbit { points: orbit.len() });
    }
    let rho = golden_rho();
    let scale = 1.0 / (1.0 + rho * rho).sqrt();
    let mut s: Vec<f64> = orbit.points().map(|p| (p.point.x + rho * p.point.y) * scale).collect();
    s.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let mut lengths: Vec<(f64, usize)> = Vec::new();
    for g in sorted {
        match lengths.last_mut() {
            Some((v, n)) if g - *v <= PREDICATE_TOL => *n += 1,
            _ => lengths.push((g, 1)),
        }
    }
    Ok(GapReport { scale, gaps, lengths })
}

/// `A(1̄|n) = A + D_n` for a system `f_j(x) = r x + b_j`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub ratio: f64,
    /// `b_j`.
    pub offsets: Vec<Point>,
    /// `t_j(x) = r^{-1}(x + b_j - b_1)`.
    pub rifs: ReverseIfs,
    /// Forward orbit of 0 to generation `n`.
    pub d: DiscreteOrbit,
    pub depth: usize,
}

impl Decomposition {
    pub fn points(&self) -> Vec<Point> {
        self.d.points().map(|p| p.point).collect()
    }
}

/// Splits `f_j` into the common ratio and the offsets. Fails unless every
/// linear part is the same positive multiple of the identity.
pub fn translation_family(ifs: &Ifs) -> Result<(f64, Vec<Point>)> {
    let line = ifs.is_one_dimensional();
    let mut ratios = Vec::new();
    let mut offsets = Vec::new();
    for f in ifs.maps() {
        let [[a, b, e], [c, d, g]] = f.rows();
        let scalar = b == 0.0 && c == 0.0 && a > 0.0 && (line || (a - d).abs() <= PREDICATE_TOL);
        if !scalar {
            return Err(Error::NotTranslationFamily);
        }
        ratios.push(a);
        offsets.push(Point::new(e, g));
    }
    let r = ratios[0];
    if ratios.iter().any(|&s| (s - r).abs() > PREDICATE_TOL) {
        return Err(Error::NotCommonRatio);
    }
    Ok((r, offsets))
}

/// The reverse system of `f_j(x) = r x + b_j` and `D_n`, the points
/// `t_w(0)` with `|w| ≤ n`.
pub fn blowup_decomposition(ifs: &Ifs, n: usize) -> Result<Decomposition> {
    let (r, offsets) = translation_family(ifs)?;
    let b1 = offsets[0];
    let maps = offsets
        .iter()
        .map(|b| AffineMap::new([[1.0 / r, 0.0], [0.0, 1.0 / r]], [(b.x - b1.x) / r, (b.y - b1.y) / r]))
        .collect();
    let rifs = ReverseIfs::new(
        format!("{} (reverse)", ifs.name()),
        maps,
        Domain::Real {
            quantum: PREDICATE_TOL,
        },
    )?;
    // |t_w(0)| ≤ spread (r^{-1} + ... + r^{-n})
    let spread = offsets.iter().map(|b| b.distance(b1)).fold(0.0, f64::max);
    let reach = spread * (1..=n).map(|k| r.powi(-(k as i32))).sum::<f64>() + 1.0;
    let window = if ifs.is_one_dimensional() {
        Window::interval(-reach, reach)
    } else {
        Window::square(reach)
    };
    let d = forward_orbit(&rifs, &[Point::ORIGIN], &window, n)?;
    Ok(Decomposition {
        ratio: r,
        offsets,
        rifs,
        d,
        depth: n,
    })
}

/// Raster of `A ⊕ D` on `viewport`: the centres of the set cells of `base`
/// translated by every point of `d`.
pub fn minkowski_raster(base: &Raster, d: &[Point], viewport: &Viewport) -> Raster {
    let centers = base.centers();
    let mut out = Raster::empty(*viewport);
    for t in d {
        for c in &centers {
            out.insert_point(Point::new(c.x + t.x, c.y + t.y));
        }
    }
    out
}

/// Hausdorff distance, in cells, between the raster of `A(1̄|n)` and the
/// raster of `A ⊕ D_n`.
pub fn decomposition_gap(ifs: &Ifs, dec: &Decomposition, base: &Raster) -> Result<f64> {
    let blowup = blowup_region(ifs, &crate::address::InfiniteAddress::constant(1), dec.depth, base)?;
    let sum = minkowski_raster(base, &dec.points(), blowup.viewport());
    Ok(crate::raster::hausdorff(&blowup, &sum)? / blowup.viewport().cell())
}

/// Fast basin `⋃_w f_{-w}(A)` over inverse words of length at most
/// `max_depth`, on `window`. Depth `n` adds the cells `y` with `f_j(y)` in
/// depth `n - 1`; images that leave the window are dropped, which loses
/// nothing when every `f_j` maps the window into itself.
pub fn fast_basin(ifs: &Ifs, window: &Viewport, max_depth: usize, base: &Raster) -> Result<Raster> {
    Ok(fast_basin_levels(ifs, window, max_depth, base)?.pop().expect("depth 0 present"))
}

/// The fast basins of depths `0..=max_depth`.
pub fn fast_basin_levels(ifs: &Ifs, window: &Viewport, max_depth: usize, base: &Raster) -> Result<Vec<Raster>> {
    let start: Vec<bool> = (0..window.len())
        .into_par_iter()
        .map(|idx| base.contains_point(window.center_of_index(idx)))
        .collect();
    let mut levels = vec![Raster::from_bits(*window, start)?];
    for _ in 0..max_depth {
        let prev = levels.last().expect("nonempty");
        let next: Vec<bool> = (0..window.len())
            .into_par_iter()
            .map(|idx| {
                let y = window.center_of_index(idx);
                prev.get_index(idx) || ifs.maps().iter().any(|f| prev.contains_point(f.apply(y)))
            })
            .collect();
        let done = next == prev.bits();
        levels.push(Raster::from_bits(*window, next)?);
        if done {
            // stable: later depths repeat this raster
            while levels.len() <= max_depth {
                levels.push(levels.last().expect("nonempty").clone());
            }
            break;
        }
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt5_comparisons() {
        assert_eq!(cmp_sqrt5(1, 2), Ordering::Greater);
        assert_eq!(cmp_sqrt5(1, 3), Ordering::Less);
        assert_eq!(cmp_sqrt5(-1, -2), Ordering::Less);
        assert_eq!(cmp_sqrt5(-1, -3), Ordering::Greater);
        assert_eq!(cmp_sqrt5(0, 0), Ordering::Equal);
        assert_eq!(cmp_sqrt5(0, -1), Ordering::Greater);
        assert_eq!(cmp_sqrt5(-4, 1), Ordering::Less);
    }

    #[test]
    fn strip_membership_against_doubles() {
        let rho = golden_rho();
        for x in -300i64..=300 {
            for y in -200i64..=200 {
                let v = y as f64 - rho * x as f64;
                if v.abs() > 1e-6 && (v - 1.0).abs() > 1e-6 {
                    assert_eq!(in_golden_strip(x, y), (0.0..=1.0).contains(&v), "({x}, {y})");
                }
            }
        }
        assert!(in_golden_strip(0, 0) && in_golden_strip(0, 1));
    }

    #[test]
    fn lattice_maps_need_integers() {
        let half = AffineMap::line(0.5, 0.0);
        assert!(ReverseIfs::new("x", vec![half], Domain::Lattice).is_err());
        assert!(ReverseIfs::new("x", vec![half], Domain::Real { quantum: 1e-9 }).is_ok());
        assert!(ReverseIfs::new("x", vec![], Domain::Lattice).is_err());
    }

    #[test]
    fn lattice_overflow_is_dropped() {
        let t = ReverseIfs::example1();
        assert_eq!(t.apply(1, Point::new(5.0, 0.0)), Some(Point::new(9.0, 0.0)));
        assert_eq!(t.apply(0, Point::new((1u64 << 52) as f64, 0.0)), None);
    }

    #[test]
    fn window_shrink_keeps_line_rows() {
        let w = Window::interval(-10.0, 10.0).shrink(3.0);
        assert_eq!(w, Window::interval(-7.0, 7.0));
        assert!(w.contains(Point::new(7.0, 0.0)) && !w.contains(Point::new(7.5, 0.0)));
    }
}
