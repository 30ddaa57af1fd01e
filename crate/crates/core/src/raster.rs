//! Uniform grids over a rectangle of the plane and bitmask rasters on them.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ifs::{AffineMap, Point};

pub const MIN_RESOLUTION: usize = 16;

/// A grid of `nx × ny` cells over `[min.x, max.x] × [min.y, max.y]`.
/// Row `j` covers the `j`-th slab from the bottom. A viewport with `ny == 1`
/// is a line viewport for one-dimensional systems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    min: Point,
    max: Point,
    nx: usize,
    ny: usize,
}

impl Viewport {
    pub fn new(min: Point, max: Point, nx: usize, ny: usize) -> Result<Self> {
        if !(max.x > min.x && max.y > min.y) || ![min.x, min.y, max.x, max.y].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidViewport(format!(
                "need min < max componentwise, got ({}, {}) .. ({}, {})",
                min.x, min.y, max.x, max.y
            )));
        }
        if nx < MIN_RESOLUTION || (ny < MIN_RESOLUTION && ny != 1) {
            return Err(Error::InvalidViewport(format!(
                "resolution {nx}×{ny} below {MIN_RESOLUTION}"
            )));
        }
        nx.checked_mul(ny)
            .filter(|&n| n <= 1 << 28)
            .ok_or_else(|| Error::InvalidViewport(format!("{nx}×{ny} cells is too many")))?;
        Ok(Viewport { min, max, nx, ny })
    }

    /// Square grid of `resolution²` cells.
    pub fn square(min: Point, max: Point, resolution: usize) -> Result<Self> {
        Viewport::new(min, max, resolution, resolution)
    }

    /// Square cells of side `h` covering the box, padded by `pad` cells.
    pub fn with_cell_size(lo: Point, hi: Point, h: f64, pad: usize) -> Result<Self> {
        let nx = ((hi.x - lo.x) / h).ceil().max(1.0) as usize + 2 * pad;
        let ny = ((hi.y - lo.y) / h).ceil().max(1.0) as usize + 2 * pad;
        let nx = nx.max(MIN_RESOLUTION);
        let ny = ny.max(MIN_RESOLUTION);
        let cx = (lo.x + hi.x) / 2.0;
        let cy = (lo.y + hi.y) / 2.0;
        let (wx, wy) = (nx as f64 * h / 2.0, ny as f64 * h / 2.0);
        Viewport::new(Point::new(cx - wx, cy - wy), Point::new(cx + wx, cy + wy), nx, ny)
    }

    /// Line viewport with `cells` cells across `[lo, hi]` plus `pad` cells on
    /// each side. The single row is centred on the x-axis.
    pub fn line(lo: f64, hi: f64, cells: usize, pad: usize) -> Result<Self> {
        if !(hi > lo) || cells == 0 {
            return Err(Error::InvalidViewport(format!("bad interval [{lo}, {hi}]")));
        }
        let h = (hi - lo) / cells as f64;
        let p = pad as f64 * h;
        Viewport::new(
            Point::new(lo - p, -h / 2.0),
            Point::new(hi + p, h / 2.0),
            cells + 2 * pad,
            1,
        )
    }

    pub fn min(&self) -> Point {
        self.min
    }

    pub fn max(&self) -> Point {
        self.max
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_line(&self) -> bool {
        self.ny == 1
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// Cell width and height.
    pub fn cell_size(&self) -> (f64, f64) {
        (self.width() / self.nx as f64, self.height() / self.ny as f64)
    }

    /// The characteristic cell length: the cell width.
    pub fn cell(&self) -> f64 {
        self.cell_size().0
    }

    #[inline]
    pub fn coords_of(&self, p: Point) -> Option<(usize, usize)> {
        let fx = (p.x - self.min.x) / (self.max.x - self.min.x) * self.nx as f64;
        let fy = (p.y - self.min.y) / (self.max.y - self.min.y) * self.ny as f64;
        if fx >= 0.0 && fy >= 0.0 && fx < self.nx as f64 && fy < self.ny as f64 {
            Some((fx as usize, fy as usize))
        } else {
            None
        }
    }

    #[inline]
    pub fn index_of(&self, p: Point) -> Option<usize> {
        self.coords_of(p).map(|(i, j)| j * self.nx + i)
    }

    /// Fractional cell coordinates, unclipped.
    #[inline]
    pub fn fractional(&self, p: Point) -> (f64, f64) {
        (
            (p.x - self.min.x) / (self.max.x - self.min.x) * self.nx as f64,
            (p.y - self.min.y) / (self.max.y - self.min.y) * self.ny as f64,
        )
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Point {
        let (dx, dy) = self.cell_size();
        Point::new(
            self.min.x + (i as f64 + 0.5) * dx,
            self.min.y + (j as f64 + 0.5) * dy,
        )
    }

    #[inline]
    pub fn center_of_index(&self, idx: usize) -> Point {
        self.center(idx % self.nx, idx / self.nx)
    }

    /// Bounding box of the image of this viewport's rectangle under `map`,
    /// gridded with the same cell counts.
    pub fn mapped(&self, map: &AffineMap) -> Result<Viewport> {
        let corners = [
            self.min,
            self.max,
            Point::new(self.min.x, self.max.y),
            Point::new(self.max.x, self.min.y),
        ]
        .map(|c| map.apply(c));
        let lo = Point::new(
            corners.iter().map(|c| c.x).fold(f64::INFINITY, f64::min),
            corners.iter().map(|c| c.y).fold(f64::INFINITY, f64::min),
        );
        let hi = Point::new(
            corners.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max),
            corners.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max),
        );
        if self.is_line() {
            let h = (hi.x - lo.x) / self.nx as f64;
            Viewport::new(Point::new(lo.x, -h / 2.0), Point::new(hi.x, h / 2.0), self.nx, 1)
        } else {
            Viewport::new(lo, hi, self.nx, self.ny)
        }
    }

    /// Componentwise near-equality of the rectangles and equal grids.
    pub fn same_grid(&self, other: &Viewport) -> bool {
        let tol = 1e-9 * self.width().max(self.height());
        self.nx == other.nx
            && self.ny == other.ny
            && (self.min.x - other.min.x).abs() <= tol
            && (self.min.y - other.min.y).abs() <= tol
            && (self.max.x - other.max.x).abs() <= tol
            && (self.max.y - other.max.y).abs() <= tol
    }
}

/// A set of cells of a viewport.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    viewport: Viewport,
    bits: Vec<bool>,
}

impl Raster {
    pub fn empty(viewport: Viewport) -> Self {
        Raster {
            viewport,
            bits: vec![false; viewport.len()],
        }
    }

    pub fn from_bits(viewport: Viewport, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != viewport.len() {
            return Err(Error::InvalidArgument(format!(
                "payload has {} cells, viewport {}",
                bits.len(),
                viewport.len()
            )));
        }
        Ok(Raster { viewport, bits })
    }

    /// Cells containing at least one of the points.
    pub fn from_points(viewport: Viewport, points: &[Point]) -> Self {
        let mut r = Raster::empty(viewport);
        for &p in points {
            r.insert_point(p);
        }
        r
    }

    pub fn viewport(&self) -> &Viewport {
        &self.viewport
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.viewport.nx + i]
    }

    #[inline]
    pub fn get_index(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let nx = self.viewport.nx;
        self.bits[j * nx + i] = v;
    }

    #[inline]
    pub fn set_index(&mut self, idx: usize, v: bool) {
        self.bits[idx] = v;
    }

    /// Mark the cell containing `p`; returns false when `p` is outside.
    #[inline]
    pub fn insert_point(&mut self, p: Point) -> bool {
        match self.viewport.index_of(p) {
            Some(idx) => {
                self.bits[idx] = true;
                true
            }
            None => false,
        }
    }

    pub fn contains_point(&self, p: Point) -> bool {
        self.viewport.index_of(p).is_some_and(|i| self.bits[i])
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn centers(&self) -> Vec<Point> {
        self.indices()
            .map(|i| self.viewport.center_of_index(i))
            .collect()
    }

    /// Inclusive cell bounds `(i0, j0, i1, j1)` of the occupied cells.
    pub fn cell_bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let nx = self.viewport.nx;
        let mut b: Option<(usize, usize, usize, usize)> = None;
        for idx in self.indices() {
            let (i, j) = (idx % nx, idx / nx);
            b = Some(match b {
                None => (i, j, i, j),
                Some((a, c, d, e)) => (a.min(i), c.min(j), d.max(i), e.max(j)),
            });
        }
        b
    }

    fn check(&self, other: &Raster) -> Result<()> {
        if self.viewport.same_grid(&other.viewport) {
            Ok(())
        } else {
            Err(Error::ViewportMismatch)
        }
    }

    fn zip_with(&self, other: &Raster, f: impl Fn(bool, bool) -> bool) -> Result<Raster> {
        self.check(other)?;
        Ok(Raster {
            viewport: self.viewport,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn union(&self, other: &Raster) -> Result<Raster> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Raster) -> Result<Raster> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Raster) -> Result<Raster> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &Raster) -> Result<Raster> {
        self.zip_with(other, |a, b| a != b)
    }

    pub fn union_in_place(&mut self, other: &Raster) -> Result<()> {
        self.check(other)?;
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }

    pub fn is_subset(&self, other: &Raster) -> Result<bool> {
        self.check(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    /// Number of own cells outside `other`.
    pub fn count_outside(&self, other: &Raster) -> Result<usize> {
        self.check(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && !b)
            .count())
    }

    /// Chebyshev dilation by `k` cells (a `(2k+1)`-square structuring element;
    /// rows only for line viewports).
    pub fn dilate(&self, k: usize) -> Raster {
        if k == 0 {
            return self.clone();
        }
        let (nx, ny) = (self.viewport.nx, self.viewport.ny);
        let horiz = sweep_rows(&self.bits, nx, ny, k, true);
        let bits = if ny == 1 {
            horiz
        } else {
            sweep_cols(&horiz, nx, ny, k, true)
        };
        Raster {
            viewport: self.viewport,
            bits,
        }
    }

    /// Chebyshev erosion by `k` cells; cells outside the viewport count as empty.
    pub fn erode(&self, k: usize) -> Raster {
        if k == 0 {
            return self.clone();
        }
        let (nx, ny) = (self.viewport.nx, self.viewport.ny);
        let horiz = sweep_rows(&self.bits, nx, ny, k, false);
        let bits = if ny == 1 {
            horiz
        } else {
            sweep_cols(&horiz, nx, ny, k, false)
        };
        Raster {
            viewport: self.viewport,
            bits,
        }
    }

    /// Pixels as 0/255 bytes, top row first.
    pub fn to_gray(&self) -> Vec<u8> {
        let (nx, ny) = (self.viewport.nx, self.viewport.ny);
        let mut out = Vec::with_capacity(nx * ny);
        for j in (0..ny).rev() {
            out.extend(self.bits[j * nx..(j + 1) * nx].iter().map(|&b| if b { 0 } else { 255 }));
        }
        out
    }

    /// Binary PGM (P5), occupied cells black.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "P5\n{} {}\n255\n", self.viewport.nx, self.viewport.ny)?;
        f.write_all(&self.to_gray())?;
        f.flush()?;
        Ok(())
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let img = image::GrayImage::from_raw(
            self.viewport.nx as u32,
            self.viewport.ny as u32,
            self.to_gray(),
        )
        .expect("buffer matches dimensions");
        img.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }
}

/// 1D max (dilate) or min (erode) filter of radius `k` along rows.
fn sweep_rows(bits: &[bool], nx: usize, ny: usize, k: usize, dilate: bool) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    for j in 0..ny {
        let row = &bits[j * nx..(j + 1) * nx];
        let dst = &mut out[j * nx..(j + 1) * nx];
        window_filter(row.iter().copied(), nx, k, dilate, |i, v| dst[i] = v);
    }
    out
}

fn sweep_cols(bits: &[bool], nx: usize, ny: usize, k: usize, dilate: bool) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    for i in 0..nx {
        window_filter((0..ny).map(|j| bits[j * nx + i]), ny, k, dilate, |j, v| {
            out[j * nx + i] = v
        });
    }
    out
}

/// Sliding-window any/all over a line using a running count.
fn window_filter(
    line: impl Iterator<Item = bool>,
    n: usize,
    k: usize,
    dilate: bool,
    mut emit: impl FnMut(usize, bool),
) {
    let vals: Vec<bool> = line.collect();
    let mut prefix = vec![0u32; n + 1];
    for (i, &v) in vals.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v as u32;
    }
    for i in 0..n {
        let lo = i.saturating_sub(k);
        let hi = (i + k + 1).min(n);
        let ones = prefix[hi] - prefix[lo];
        let v = if dilate {
            ones > 0
        } else {
            // cells beyond the edge are empty
            i >= k && i + k < n && ones as usize == 2 * k + 1
        };
        emit(i, v);
    }
}

/// Squared Euclidean distance (scene units²) from every cell centre to the
/// nearest occupied cell centre; `INFINITY` when the raster is empty.
pub fn squared_distance_field(r: &Raster) -> Vec<f64> {
    let vp = r.viewport();
    let (nx, ny) = (vp.nx(), vp.ny());
    let (dx, dy) = vp.cell_size();
    let mut g: Vec<f64> = r
        .bits()
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    let mut buf = vec![0.0; nx.max(ny)];
    let mut out = vec![0.0; nx.max(ny)];
    // columns first, then rows
    if ny > 1 {
        for i in 0..nx {
            for j in 0..ny {
                buf[j] = g[j * nx + i];
            }
            edt_1d(&buf[..ny], dy, &mut out[..ny]);
            for j in 0..ny {
                g[j * nx + i] = out[j];
            }
        }
    }
    for j in 0..ny {
        buf[..nx].copy_from_slice(&g[j * nx..(j + 1) * nx]);
        edt_1d(&buf[..nx], dx, &mut out[..nx]);
        g[j * nx..(j + 1) * nx].copy_from_slice(&out[..nx]);
    }
    g
}

/// Lower envelope of parabolas `(s (q - p))² + f(p)`.
fn edt_1d(f: &[f64], s: f64, out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(p) => p,
        None => {
            out.iter_mut().for_each(|o| *o = f64::INFINITY);
            return;
        }
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let pos = |q: usize| q as f64 * s;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let sq = (f[q] + pos(q) * pos(q) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
            if sq <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = sq;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < pos(q) {
            k += 1;
        }
        let d = pos(q) - pos(v[k]);
        *o = d * d + f[v[k]];
    }
}

/// Symmetric Hausdorff distance between the occupied cell centres.
pub fn hausdorff(a: &Raster, b: &Raster) -> Result<f64> {
    a.check(b)?;
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(f64::INFINITY),
        _ => {}
    }
    let da = squared_distance_field(a);
    let db = squared_distance_field(b);
    let ab = a.indices().map(|i| db[i]).fold(0.0, f64::max);
    let ba = b.indices().map(|i| da[i]).fold(0.0, f64::max);
    Ok(ab.max(ba).sqrt())
}

/// `x,y` per line.
pub fn write_points_csv(points: &[Point], path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for p in points {
        writeln!(f, "{},{}", p.x, p.y)?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square(res: usize) -> Viewport {
        Viewport::square(Point::new(0.0, 0.0), Point::new(1.0, 1.0), res).unwrap()
    }

    #[test]
    fn viewport_validation() {
        assert!(Viewport::square(Point::new(0.0, 0.0), Point::new(1.0, 1.0), 15).is_err());
        assert!(Viewport::square(Point::new(1.0, 0.0), Point::new(0.0, 1.0), 64).is_err());
        assert!(Viewport::line(0.0, 1.0, 64, 2).unwrap().is_line());
    }

    #[test]
    fn cell_lookup_round_trips() {
        let vp = unit_square(32);
        for idx in [0, 31, 32, 1023, 517] {
            assert_eq!(vp.index_of(vp.center_of_index(idx)), Some(idx));
        }
        assert_eq!(vp.index_of(Point::new(1.0, 0.5)), None);
        assert_eq!(vp.index_of(Point::new(-1e-12, 0.5)), None);
    }

    #[test]
    fn hausdorff_identical_is_zero() {
        let mut r = Raster::empty(unit_square(64));
        r.set(3, 4, true);
        r.set(40, 50, true);
        assert_eq!(hausdorff(&r, &r).unwrap(), 0.0);
    }

    #[test]
    fn hausdorff_single_cells() {
        let vp = unit_square(64);
        let h = vp.cell();
        for k in [1usize, 5, 17] {
            let mut a = Raster::empty(vp);
            let mut b = Raster::empty(vp);
            a.set(10, 20, true);
            b.set(10 + k, 20, true);
            assert!((hausdorff(&a, &b).unwrap() - k as f64 * h).abs() < 1e-12);
        }
        let mut a = Raster::empty(vp);
        let mut b = Raster::empty(vp);
        a.set(0, 0, true);
        b.set(3, 4, true);
        assert!((hausdorff(&a, &b).unwrap() - 5.0 * h).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_intervals() {
        let vp = Viewport::line(0.0, 1.0, 1024, 0).unwrap();
        let mut a = Raster::empty(vp);
        let mut b = Raster::empty(vp);
        for i in 0..1024 {
            a.set(i, 0, true);
            if i < 512 {
                b.set(i, 0, true);
            }
        }
        let d = hausdorff(&a, &b).unwrap();
        assert!((d - 0.5).abs() <= vp.cell());
    }

    #[test]
    fn mismatched_viewports() {
        let a = Raster::empty(unit_square(32));
        let b = Raster::empty(unit_square(64));
        assert!(matches!(hausdorff(&a, &b), Err(Error::ViewportMismatch)));
        assert!(a.union(&b).is_err());
    }

    #[test]
    fn dilate_erode() {
        let vp = unit_square(16);
        let mut r = Raster::empty(vp);
        r.set(5, 5, true);
        let d = r.dilate(1);
        assert_eq!(d.count(), 9);
        assert!(d.get(4, 6) && d.get(6, 4));
        assert_eq!(d.erode(1).count(), 1);
        assert_eq!(r.erode(1).count(), 0);
        let mut edge = Raster::empty(vp);
        edge.set(0, 0, true);
        assert_eq!(edge.dilate(2).count(), 9);
    }

    proptest! {
        #[test]
        fn dilation_matches_brute_force(cells in proptest::collection::vec((0usize..20, 0usize..20), 0..30), k in 0usize..3) {
            let vp = Viewport::square(Point::new(0.0, 0.0), Point::new(1.0, 1.0), 20).unwrap();
            let mut r = Raster::empty(vp);
            for &(i, j) in &cells {
                r.set(i, j, true);
            }
            let d = r.dilate(k);
            for i in 0..20 {
                for j in 0..20 {
                    let expect = cells.iter().any(|&(a, b)| a.abs_diff(i) <= k && b.abs_diff(j) <= k);
                    prop_assert_eq!(d.get(i, j), expect);
                }
            }
        }

        #[test]
        fn hausdorff_matches_brute_force(
            a in proptest::collection::vec((0usize..24, 0usize..24), 1..12),
            b in proptest::collection::vec((0usize..24, 0usize..24), 1..12),
        ) {
            let vp = Viewport::new(Point::new(0.0, 0.0), Point::new(2.0, 1.0), 24, 24).unwrap();
            let (dx, dy) = vp.cell_size();
            let mut ra = Raster::empty(vp);
            let mut rb = Raster::empty(vp);
            for &(i, j) in &a { ra.set(i, j, true); }
            for &(i, j) in &b { rb.set(i, j, true); }
            let dist = |p: &(usize, usize), q: &(usize, usize)| {
                ((p.0 as f64 - q.0 as f64) * dx).hypot((p.1 as f64 - q.1 as f64) * dy)
            };
            let directed = |x: &[(usize, usize)], y: &[(usize, usize)]| {
                x.iter().map(|p| y.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
            };
            let expect = directed(&a, &b).max(directed(&b, &a));
            prop_assert!((hausdorff(&ra, &rb).unwrap() - expect).abs() < 1e-9);
        }
    }
}
