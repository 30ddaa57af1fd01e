//! Fractal tops at finite depth: the field of maximal depth-`n` words over the
//! raster of the attractor, the top word sets, the tops dynamical system and
//! an exact interval oracle for line systems.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU32, Ordering};

use rayon::prelude::*;

use crate::address::{InfiniteAddress, PriorityOrder, Word};
use crate::attractor::map_points;
use crate::error::{Error, Result};
use crate::exact::{IntervalSet, LineIfs, Q};
use crate::ifs::{Ifs, Point};
use crate::raster::{Raster, Viewport};

/// Largest admissible `n · log2(m)`.
pub const MAX_WORD_BITS: f64 = 24.0;

pub fn check_depth(alphabet: usize, depth: usize) -> Result<u64> {
    let bits = depth as f64 * (alphabet as f64).log2();
    if bits > MAX_WORD_BITS {
        return Err(Error::DepthTooLarge {
            depth,
            reason: format!("{alphabet}^{depth} words exceed 2^{MAX_WORD_BITS}"),
        });
    }
    Ok((alphabet as u64).pow(depth as u32))
}

/// Each covered cell carries the maximal depth-`n` word whose cylinder raster
/// contains it. Labels are `code + 1` in the increasing enumeration of the
/// order, 0 for uncovered cells.
#[derive(Clone, Debug, PartialEq)]
pub struct TopField {
    depth: usize,
    order: PriorityOrder,
    viewport: Viewport,
    labels: Vec<u32>,
}

impl TopField {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn order(&self) -> &PriorityOrder {
        &self.order
    }

    pub fn viewport(&self) -> &Viewport {
        &self.viewport
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_of(&self, w: &Word) -> u32 {
        self.order.encode(w) as u32 + 1
    }

    pub fn word_of_label(&self, label: u32) -> Option<Word> {
        (label > 0).then(|| self.order.decode(label as u64 - 1, self.depth))
    }

    pub fn word_at(&self, idx: usize) -> Option<Word> {
        self.word_of_label(self.labels[idx])
    }

    pub fn word_at_point(&self, p: Point) -> Option<Word> {
        self.viewport.index_of(p).and_then(|i| self.word_at(i))
    }

    /// Cell count per label.
    pub fn label_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.labels {
            if l > 0 {
                *counts.entry(l).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Cell count per word.
    pub fn counts(&self) -> BTreeMap<Word, usize> {
        self.label_counts()
            .into_iter()
            .map(|(l, c)| (self.word_of_label(l).expect("nonzero label"), c))
            .collect()
    }

    pub fn cells_of(&self, w: &Word) -> Vec<usize> {
        let l = self.label_of(w);
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &x)| (x == l).then_some(i))
            .collect()
    }

    pub fn raster_of(&self, w: &Word) -> Raster {
        let l = self.label_of(w);
        Raster::from_bits(self.viewport, self.labels.iter().map(|&x| x == l).collect())
            .expect("sized to viewport")
    }

    pub fn covered(&self) -> Raster {
        Raster::from_bits(self.viewport, self.labels.iter().map(|&x| x > 0).collect())
            .expect("sized to viewport")
    }

    /// One line per word of the set: `word count`, in word order.
    pub fn write_sidecar(&self, set: &TopWordSet, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "# depth {} order {}", self.depth, self.order)?;
        for (w, c) in &set.counts {
            writeln!(f, "{w} {c}")?;
        }
        f.flush()?;
        Ok(())
    }

    /// Colour-coded PNG, one hashed colour per word, uncovered cells white.
    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let (nx, ny) = (self.viewport.nx(), self.viewport.ny());
        let mut img = image::RgbImage::new(nx as u32, ny as u32);
        for j in 0..ny {
            for i in 0..nx {
                let rgb = match self.word_at(j * nx + i) {
                    Some(w) => word_color(&w),
                    None => [255, 255, 255],
                };
                img.put_pixel(i as u32, (ny - 1 - j) as u32, image::Rgb(rgb));
            }
        }
        img.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }
}

/// Deterministic colour for a word (FNV-1a hash mapped to a saturated hue).
pub fn word_color(w: &Word) -> [u8; 3] {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &s in w.symbols() {
        h ^= s as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^= w.len() as u64;
    h = h.wrapping_mul(0x0100_0000_01b3);
    let hue = (h % 360) as f64;
    let sat = 0.45 + ((h >> 16) % 40) as f64 / 100.0;
    let val = 0.65 + ((h >> 32) % 30) as f64 / 100.0;
    hsv_to_rgb(hue, sat, val)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r, g, b].map(|t| ((t + m) * 255.0).round() as u8)
}

/// Paint algorithm with the default worker pool.
pub fn compute_top_field(
    ifs: &Ifs,
    depth: usize,
    base: &Raster,
    order: &PriorityOrder,
) -> Result<TopField> {
    compute_top_field_with(ifs, depth, base, order, None)
}

/// Paint every depth-`n` cylinder raster (base cells pushed through `f_w`,
/// dilated by one cell), stamping label `code(w) + 1` with a per-cell
/// maximum. Cells therefore carry their maximal word whatever the schedule.
/// `workers` fixes the thread count.
pub fn compute_top_field_with(
    ifs: &Ifs,
    depth: usize,
    base: &Raster,
    order: &PriorityOrder,
    workers: Option<usize>,
) -> Result<TopField> {
    if order.alphabet() != ifs.len() {
        return Err(Error::InvalidArgument(format!(
            "order over {} symbols for {} maps",
            order.alphabet(),
            ifs.len()
        )));
    }
    let total = check_depth(ifs.len(), depth)?;
    let viewport = *base.viewport();
    if depth == 0 {
        let labels = base.dilate(1).bits().iter().map(|&b| b as u32).collect();
        return Ok(TopField {
            depth,
            order: order.clone(),
            viewport,
            labels,
        });
    }
    let centers = base.centers();
    let cell = viewport.cell_size();
    let field: Vec<AtomicU32> = (0..viewport.len()).map(|_| AtomicU32::new(0)).collect();
    let paint = || {
        (0..total).into_par_iter().for_each(|code| {
            let w = order.decode(code, depth);
            let f = ifs.compose_word(&w, false).expect("symbols in range");
            let patch = map_points(&centers, cell, &f, &viewport, 1);
            let label = code as u32 + 1;
            for idx in patch.indices(viewport.nx()) {
                field[idx].fetch_max(label, Ordering::Relaxed);
            }
        })
    };
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(paint),
        None => paint(),
    }
    Ok(TopField {
        depth,
        order: order.clone(),
        viewport,
        labels: field.into_iter().map(AtomicU32::into_inner).collect(),
    })
}

/// Words of a top field that occupy at least `min_cells` cells.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TopWordSet {
    pub depth: usize,
    pub counts: BTreeMap<Word, usize>,
}

impl TopWordSet {
    pub fn words(&self) -> BTreeSet<Word> {
        self.counts.keys().cloned().collect()
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.counts.contains_key(w)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

pub fn top_words(field: &TopField, min_cells: usize) -> TopWordSet {
    TopWordSet {
        depth: field.depth,
        counts: field
            .counts()
            .into_iter()
            .filter(|&(_, c)| c >= min_cells)
            .collect(),
    }
}

/// Default noise floor `max(1, cells(A) · r_min^(n·dim) / 32)` where `dim` is
/// 1 for line viewports and 2 otherwise.
pub fn default_min_cells(cells_of_a: usize, r_min: f64, depth: usize, line: bool) -> usize {
    let dim = if line { 1 } else { 2 };
    let t = cells_of_a as f64 * r_min.powi((depth * dim) as i32) / 32.0;
    (t.floor() as usize).max(1)
}

/// [`default_min_cells`] for a field computed over `base`.
pub fn default_min_cells_for(ifs: &Ifs, base: &Raster, depth: usize) -> usize {
    default_min_cells(base.count(), ifs.min_ratio(), depth, base.viewport().is_line())
}

/// Itinerary `i_1 ... i_steps` of `x_{n+1} = f_{i_n}^{-1}(x_n)`, with `i_n`
/// read from the depth-1 field. Points within two cells of the covered
/// region take the label of the nearest covered cell.
pub fn tops_orbit(ifs: &Ifs, x: Point, steps: usize, field: &TopField) -> Result<Word> {
    if field.depth() != 1 {
        return Err(Error::InvalidArgument("tops orbit needs a depth-1 field".into()));
    }
    let mut p = x;
    let mut out = Vec::with_capacity(steps);
    for step in 0..steps {
        let label = nearest_label(field, p, 2).ok_or(Error::EscapedAttractor { step })?;
        let w = field.word_of_label(label).expect("nonzero label");
        let s = w.symbols()[0];
        out.push(s);
        p = ifs.inverse(s)?.apply(p);
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::EscapedAttractor { step });
        }
    }
    Ok(Word::from(out))
}

fn nearest_label(field: &TopField, p: Point, reach: usize) -> Option<u32> {
    let vp = field.viewport();
    let (fx, fy) = vp.fractional(p);
    let (ci, cj) = (fx.floor(), fy.floor());
    let mut best: Option<(f64, u32)> = None;
    let r = reach as i64;
    for dj in -r..=r {
        for di in -r..=r {
            let (i, j) = (ci + di as f64, cj + dj as f64);
            if i < 0.0 || j < 0.0 || i >= vp.nx() as f64 || j >= vp.ny() as f64 {
                continue;
            }
            let label = field.labels()[j as usize * vp.nx() + i as usize];
            if label == 0 {
                continue;
            }
            let d = (di * di + dj * dj) as f64;
            if best.is_none_or(|(bd, bl)| d < bd || (d == bd && label > bl)) {
                best = Some((d, label));
            }
        }
    }
    best.map(|(_, l)| l)
}

/// Depth-`n` flag: the reversed prefix `i_n ... i_1` is a depth-`n` top word.
/// `sets[n - 1]` holds the top words of depth `n`.
pub fn check_reversible(a: &InfiniteAddress, sets: &[BTreeSet<Word>]) -> Vec<bool> {
    sets.iter()
        .enumerate()
        .map(|(k, set)| set.contains(&a.reverse_prefix(k + 1)))
        .collect()
}

/// Exact top cells of a line system at one depth.
#[derive(Clone, Debug)]
pub struct ExactTops {
    pub depth: usize,
    /// Residual of each word with positive length.
    pub cells: BTreeMap<Word, IntervalSet>,
    /// Words whose residual is a nonempty set of isolated points.
    pub isolated: BTreeMap<Word, IntervalSet>,
}

impl ExactTops {
    pub fn words(&self) -> BTreeSet<Word> {
        self.cells.keys().cloned().collect()
    }

    /// Words including those whose residual is only isolated points.
    pub fn words_with_isolated(&self) -> BTreeSet<Word> {
        self.cells.keys().chain(self.isolated.keys()).cloned().collect()
    }
}

/// Exact oracle on the convex hull `H` of the attractor: words are visited in
/// decreasing order and each keeps `f_w(H)` minus the union claimed so far.
/// On interval attractors this is the top partition itself.
pub fn top_words_1d_exact(ifs: &Ifs, depth: usize, order: &PriorityOrder) -> Result<ExactTops> {
    let line = LineIfs::from_ifs(ifs)?;
    top_words_exact(&line, depth, order)
}

pub fn top_words_exact(line: &LineIfs, depth: usize, order: &PriorityOrder) -> Result<ExactTops> {
    let total = check_depth(line.len(), depth)?;
    let hull = line.hull();
    let mut claimed = IntervalSet::new();
    let mut cells = BTreeMap::new();
    let mut isolated = BTreeMap::new();
    for code in (0..total).rev() {
        let w = order.decode(code, depth);
        let (a, b) = line.compose(&w);
        let (lo, hi) = crate::exact::map_interval(&a, &b, &hull);
        let residual = claimed.subtract_from(&lo, &hi);
        if residual.measure() > Q::default() {
            cells.insert(w, residual);
        } else if !residual.is_empty() {
            isolated.insert(w, residual);
        }
        claimed.insert(lo, hi);
    }
    Ok(ExactTops {
        depth,
        cells,
        isolated,
    })
}
