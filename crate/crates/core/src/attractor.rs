//! Point clouds and rasters of the attractor and of its cylinder images.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::address::Word;
use crate::error::Result;
use crate::exact::{to_f64, LineIfs};
use crate::ifs::{AffineMap, Ifs, Point};
use crate::raster::{Raster, Viewport};

pub const DEFAULT_BURN_IN: usize = 50;
pub const DEFAULT_RESOLUTION: usize = 1024;
/// Padding, in cells, between the attractor's bounding box and the viewport edge.
pub const VIEWPORT_PAD: usize = 3;

/// A box and a ball known to contain the attractor.
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub lo: Point,
    pub hi: Point,
    /// A point of the attractor (the fixed point of map 1).
    pub anchor: Point,
    /// The attractor lies in the closed ball of this radius about `center`.
    pub center: Point,
    pub radius: f64,
}

pub fn bounds(ifs: &Ifs) -> Bounds {
    let anchor = ifs.fixed_points()[0];
    let lips: Vec<f64> = ifs.maps().iter().map(AffineMap::lipschitz).collect();
    // B(anchor, R) is mapped into itself once s_j R + |f_j(c) - c| <= R.
    let mut radius = ifs
        .maps()
        .iter()
        .zip(&lips)
        .map(|(f, s)| f.apply(anchor).distance(anchor) / (1.0 - s))
        .fold(0.0, f64::max);

    let m = ifs.len();
    let depth = ((12.0 / (m as f64).log2()).floor() as usize).max(1);
    let images = word_images(ifs, &lips, anchor, depth);
    for _ in 0..4 {
        let refined = images
            .iter()
            .map(|(p, s)| p.distance(anchor) + s * radius)
            .fold(0.0, f64::max);
        radius = radius.min(refined);
    }
    let (lo, hi) = if ifs.is_one_dimensional() {
        let (lo, hi) = line_hull(ifs);
        (Point::new(lo, 0.0), Point::new(hi, 0.0))
    } else {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (p, s) in &images {
            let e = s * radius;
            lo = Point::new(lo.x.min(p.x - e), lo.y.min(p.y - e));
            hi = Point::new(hi.x.max(p.x + e), hi.y.max(p.y + e));
        }
        (lo, hi)
    };

    // Re-centre on the box: A lies in the union of the balls f_w(B(anchor, R)).
    let center = Point::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0);
    let mut centered = images
        .iter()
        .map(|(p, s)| p.distance(center) + s * radius)
        .fold(0.0, f64::max);
    let images = word_images(ifs, &lips, center, depth);
    for _ in 0..4 {
        let refined = images
            .iter()
            .map(|(p, s)| p.distance(center) + s * centered)
            .fold(0.0, f64::max);
        centered = centered.min(refined);
    }
    Bounds {
        lo,
        hi,
        anchor,
        center,
        radius: centered,
    }
}

/// `(f_w(c), Lip(f_w))` for all words of length `depth`.
fn word_images(ifs: &Ifs, lips: &[f64], c: Point, depth: usize) -> Vec<(Point, f64)> {
    let mut level = vec![(AffineMap::IDENTITY, 1.0)];
    for _ in 0..depth {
        level = level
            .iter()
            .flat_map(|(t, s)| {
                ifs.maps()
                    .iter()
                    .zip(lips)
                    .map(move |(f, l)| (t.compose(f), s * l))
            })
            .collect();
    }
    level.into_iter().map(|(t, s)| (t.apply(c), s)).collect()
}

/// Convex hull `[lo, hi]` of a line attractor, computed exactly on the
/// rationalized coefficients.
pub fn line_hull(ifs: &Ifs) -> (f64, f64) {
    let exact = LineIfs::from_ifs(ifs).expect("line system");
    let (lo, hi) = exact.hull();
    (to_f64(&lo), to_f64(&hi))
}

/// Viewport with `resolution` cells across the longer side of the attractor's
/// bounding box, square cells, and [`VIEWPORT_PAD`] cells of padding. Line
/// systems get a line viewport.
pub fn viewport_for(ifs: &Ifs, resolution: usize) -> Result<Viewport> {
    let b = bounds(ifs);
    if ifs.is_one_dimensional() {
        return Viewport::line(b.lo.x, b.hi.x, resolution, VIEWPORT_PAD);
    }
    let h = (b.hi.x - b.lo.x).max(b.hi.y - b.lo.y) / resolution as f64;
    Viewport::with_cell_size(b.lo, b.hi, h, VIEWPORT_PAD)
}

/// Random iteration from the origin. After `burn_in` steps each point is
/// within `radius · r^burn_in` of the attractor. Maps are chosen with weights
/// proportional to their contraction ratio raised to the dimension.
pub fn chaos_game(ifs: &Ifs, n_points: usize, seed: u64, burn_in: usize) -> Vec<Point> {
    if n_points == 0 {
        return Vec::new();
    }
    let dim = if ifs.is_one_dimensional() { 1 } else { 2 };
    let weights: Vec<f64> = ifs.ratios().iter().map(|s| s.powi(dim).max(1e-6)).collect();
    let pick = WeightedIndex::new(&weights).expect("positive weights");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps = ifs.maps();
    let mut p = Point::ORIGIN;
    for _ in 0..burn_in {
        p = maps[pick.sample(&mut rng)].apply(p);
    }
    let mut out = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        p = maps[pick.sample(&mut rng)].apply(p);
        out.push(p);
    }
    out
}

struct AtomicBits(Vec<AtomicU64>);

impl AtomicBits {
    fn new(n: usize) -> Self {
        AtomicBits((0..n.div_ceil(64)).map(|_| AtomicU64::new(0)).collect())
    }

    #[inline]
    fn set(&self, i: usize) {
        self.0[i / 64].fetch_or(1 << (i % 64), Ordering::Relaxed);
    }

    /// Whether every bit in `lo..=hi` is set.
    fn all_set(&self, lo: usize, hi: usize) -> bool {
        let (w0, w1) = (lo / 64, hi / 64);
        (w0..=w1).all(|w| {
            let from = if w == w0 { lo % 64 } else { 0 };
            let to = if w == w1 { hi % 64 } else { 63 };
            let mask = (u64::MAX >> (63 - to)) & (u64::MAX << from);
            self.0[w].load(Ordering::Relaxed) & mask == mask
        })
    }

    fn into_bools(self, n: usize) -> Vec<bool> {
        let words: Vec<u64> = self.0.into_iter().map(AtomicU64::into_inner).collect();
        (0..n).map(|i| words[i / 64] & (1 << (i % 64)) != 0).collect()
    }
}

/// Raster of the cells containing a point of the attractor.
///
/// Walks the word tree, marking `f_w(anchor)` once the cylinder `f_w(A)` is
/// smaller than a thirty-second of a cell. A subtree is skipped when every cell
/// its cylinder can reach is already marked, which leaves the result
/// unchanged. The walk is split across workers; the merge is a bitwise OR.
pub fn attractor_raster(ifs: &Ifs, viewport: &Viewport) -> Raster {
    let b = bounds(ifs);
    let (dx, dy) = viewport.cell_size();
    let h = if viewport.is_line() { dx } else { dx.min(dy) };
    let stop = h / 32.0;
    let lips: Vec<f64> = ifs.maps().iter().map(AffineMap::lipschitz).collect();
    let bits = AtomicBits::new(viewport.len());

    let mut seeds = vec![(AffineMap::IDENTITY, 1.0)];
    while seeds.len() < 64 && seeds.iter().all(|(_, s)| s * b.radius > stop) {
        seeds = seeds
            .iter()
            .flat_map(|(t, s)| {
                ifs.maps()
                    .iter()
                    .zip(&lips)
                    .map(move |(f, l)| (t.compose(f), s * l))
            })
            .collect();
    }

    let box_lo = viewport.fractional(b.lo);
    let box_hi = viewport.fractional(b.hi);
    let box_lo = (box_lo.0.floor(), if viewport.is_line() { 0.0 } else { box_lo.1.floor() });
    let box_hi = (box_hi.0.floor(), if viewport.is_line() { 0.0 } else { box_hi.1.floor() });
    let covered = |center: Point, rho: f64| -> bool {
        let (fx0, fy0) = viewport.fractional(Point::new(center.x - rho, center.y - rho));
        let (fx1, fy1) = viewport.fractional(Point::new(center.x + rho, center.y + rho));
        let clamp = |v: f64, n: usize| v.floor().clamp(0.0, n as f64 - 1.0) as usize;
        if fx1 < 0.0 || fy1 < 0.0 || fx0 >= viewport.nx() as f64 || fy0 >= viewport.ny() as f64 {
            return true;
        }
        // cells outside the attractor's box never get marked
        let (i0, i1) = (clamp(fx0.max(box_lo.0), viewport.nx()), clamp(fx1.min(box_hi.0), viewport.nx()));
        let (j0, j1) = (clamp(fy0.max(box_lo.1), viewport.ny()), clamp(fy1.min(box_hi.1), viewport.ny()));
        if i0 > i1 || j0 > j1 {
            return true;
        }
        (j0..=j1).all(|j| bits.all_set(j * viewport.nx() + i0, j * viewport.nx() + i1))
    };

    seeds.par_iter().for_each(|(t0, s0)| {
        let mut stack = vec![(*t0, *s0)];
        while let Some((t, s)) = stack.pop() {
            let rho = s * b.radius;
            let c = t.apply(b.center);
            if rho <= stop {
                if let Some(idx) = viewport.index_of(t.apply(b.anchor)) {
                    bits.set(idx);
                }
                continue;
            }
            if rho < h / 2.0 {
                // the whole cylinder sits inside one cell
                let lo = viewport.index_of(Point::new(c.x - rho, c.y - rho));
                if lo.is_some() && lo == viewport.index_of(Point::new(c.x + rho, c.y + rho)) {
                    bits.set(lo.unwrap());
                    continue;
                }
            }
            if covered(c, rho) {
                continue;
            }
            for (f, l) in ifs.maps().iter().zip(&lips) {
                stack.push((t.compose(f), s * l));
            }
        }
    });
    Raster::from_bits(*viewport, bits.into_bools(viewport.len())).expect("sized to viewport")
}

/// Cells of a sub-rectangle `[i0, i0 + w) × [j0, j0 + h)` of a viewport.
#[derive(Clone, Debug)]
pub struct Patch {
    pub i0: usize,
    pub j0: usize,
    pub w: usize,
    pub h: usize,
    pub bits: Vec<bool>,
}

impl Patch {
    pub fn empty() -> Self {
        Patch {
            i0: 0,
            j0: 0,
            w: 0,
            h: 0,
            bits: Vec::new(),
        }
    }

    /// Global indices of the set cells in a viewport `nx` cells wide.
    pub fn indices(&self, nx: usize) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(move |(k, &b)| {
            b.then(|| (self.j0 + k / self.w.max(1)) * nx + self.i0 + k % self.w.max(1))
        })
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_raster(&self, viewport: &Viewport) -> Raster {
        let mut r = Raster::empty(*viewport);
        for idx in self.indices(viewport.nx()) {
            r.set_index(idx, true);
        }
        r
    }
}

/// Supersampling factor so that the image of a source grid under a map with
/// Lipschitz constant `lip` leaves no unsampled target cell.
pub fn supersampling(lip: f64, source_cell: f64, target_cell: f64, line: bool) -> usize {
    let spread = if line { 1.0 } else { std::f64::consts::SQRT_2 };
    ((lip * source_cell * spread / target_cell) * (1.0 + 1e-9)).ceil().max(1.0) as usize
}

/// Image of the cells centred at `points` (cells of size `source_cell`) under
/// `map`, rasterized on `target`, then dilated by `dilate` cells. Points
/// landing outside the target are dropped.
pub fn map_points(
    points: &[Point],
    source_cell: (f64, f64),
    map: &AffineMap,
    target: &Viewport,
    dilate: usize,
) -> Patch {
    if points.is_empty() {
        return Patch::empty();
    }
    let line = target.is_line();
    let k = supersampling(map.lipschitz(), source_cell.0.max(source_cell.1), target.cell(), line);
    let mut offsets = Vec::with_capacity(k * k);
    for a in 0..k {
        let ox = ((a as f64 + 0.5) / k as f64 - 0.5) * source_cell.0;
        if line {
            offsets.push(Point::new(ox, 0.0));
            continue;
        }
        for c in 0..k {
            let oy = ((c as f64 + 0.5) / k as f64 - 0.5) * source_cell.1;
            offsets.push(Point::new(ox, oy));
        }
    }
    let mut hits: Vec<(usize, usize)> = Vec::with_capacity(points.len() * offsets.len());
    for &p in points {
        for &o in &offsets {
            if let Some(ij) = target.coords_of(map.apply(p + o)) {
                hits.push(ij);
            }
        }
    }
    if hits.is_empty() {
        return Patch::empty();
    }
    let (mut i0, mut j0, mut i1, mut j1) = (usize::MAX, usize::MAX, 0, 0);
    for &(i, j) in &hits {
        i0 = i0.min(i);
        j0 = j0.min(j);
        i1 = i1.max(i);
        j1 = j1.max(j);
    }
    let i0 = i0.saturating_sub(dilate);
    let j0 = j0.saturating_sub(dilate);
    let i1 = (i1 + dilate).min(target.nx() - 1);
    let j1 = (j1 + dilate).min(target.ny() - 1);
    let (w, h) = (i1 - i0 + 1, j1 - j0 + 1);
    let mut bits = vec![false; w * h];
    for &(i, j) in &hits {
        bits[(j - j0) * w + (i - i0)] = true;
    }
    let mut patch = Patch { i0, j0, w, h, bits };
    if dilate > 0 {
        patch.bits = dilate_local(&patch.bits, w, h, dilate);
    }
    patch
}

fn dilate_local(bits: &[bool], w: usize, h: usize, k: usize) -> Vec<bool> {
    let mut horiz = vec![false; bits.len()];
    for j in 0..h {
        let mut last: Option<usize> = None;
        // forward pass: nearest set cell to the left, then to the right
        for i in 0..w {
            if bits[j * w + i] {
                last = Some(i);
            }
            if last.is_some_and(|l| i - l <= k) {
                horiz[j * w + i] = true;
            }
        }
        let mut next: Option<usize> = None;
        for i in (0..w).rev() {
            if bits[j * w + i] {
                next = Some(i);
            }
            if next.is_some_and(|n| n - i <= k) {
                horiz[j * w + i] = true;
            }
        }
    }
    if h == 1 {
        return horiz;
    }
    let mut out = vec![false; bits.len()];
    for i in 0..w {
        let mut last: Option<usize> = None;
        for j in 0..h {
            if horiz[j * w + i] {
                last = Some(j);
            }
            if last.is_some_and(|l| j - l <= k) {
                out[j * w + i] = true;
            }
        }
        let mut next: Option<usize> = None;
        for j in (0..h).rev() {
            if horiz[j * w + i] {
                next = Some(j);
            }
            if next.is_some_and(|n| n - j <= k) {
                out[j * w + i] = true;
            }
        }
    }
    out
}

/// Forward image of a raster under `map`, on `target`, dilated by `dilate` cells.
pub fn map_raster(src: &Raster, map: &AffineMap, target: &Viewport, dilate: usize) -> Raster {
    map_points(&src.centers(), src.viewport().cell_size(), map, target, dilate).to_raster(target)
}

/// Raster on `target` of the cells whose centre `y` has `inverse(y)` in `src`.
pub fn pull_back(src: &Raster, inverse: &AffineMap, target: &Viewport) -> Raster {
    let mut out = Raster::empty(*target);
    for idx in 0..target.len() {
        if src.contains_point(inverse.apply(target.center_of_index(idx))) {
            out.set_index(idx, true);
        }
    }
    out
}

/// Raster of `f_w(A)`: the base cells pushed through `f_w` and dilated by one
/// cell. The empty word gives the base dilated by one cell.
pub fn cylinder_raster(ifs: &Ifs, w: &Word, base: &Raster) -> Result<Raster> {
    let f = ifs.compose_word(w, false)?;
    Ok(map_raster(base, &f, base.viewport(), 1))
}
