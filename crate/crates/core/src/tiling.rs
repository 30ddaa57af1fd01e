//! Blowups `A(i|n) = f_{-i|n}(A)`, partial top tilings and the relations
//! between consecutive levels, plus the stopping-time tilings of systems with
//! disjoint pieces.
//!
//! Level-`k` tiles are `f_{-i|k}(π_top(t))` for depth-`k` top words `t`. All
//! comparisons between levels `k` and `k + 1` are carried out in the frame of
//! `A`: pulling both levels back by `f_{i|k+1}` turns the level-`(k+1)` tiles
//! into top cells and a level-`k` tile `t` into `f_{i_{k+1}}(π_top(t))`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::address::{InfiniteAddress, PriorityOrder, Symbol, Word};
use crate::attractor::{attractor_raster, bounds};
use crate::error::{Error, Result};
use crate::exact::{IntervalSet, LineIfs, Q};
use crate::ifs::{AffineMap, Ifs, Point, PREDICATE_TOL};
use crate::raster::{Raster, Viewport};
use crate::tops::{top_words_exact, ExactTops, TopField, TopWordSet};

/// Largest blowup viewport, in cells.
pub const MAX_BLOWUP_CELLS: usize = 1 << 26;

/// `i_1 ... i_k . t_1 ... t_k`; both words have the same length.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TileAddress {
    blowup: Word,
    top: Word,
}

impl TileAddress {
    pub fn new(blowup: Word, top: Word) -> Result<Self> {
        if blowup.len() != top.len() {
            return Err(Error::InvalidArgument(format!(
                "tile address words differ in length: {blowup} and {top}"
            )));
        }
        Ok(TileAddress { blowup, top })
    }

    /// The address of `A` itself.
    pub fn root() -> Self {
        TileAddress {
            blowup: Word::empty(),
            top: Word::empty(),
        }
    }

    pub fn blowup(&self) -> &Word {
        &self.blowup
    }

    pub fn top(&self) -> &Word {
        &self.top
    }

    pub fn level(&self) -> usize {
        self.top.len()
    }

    /// Fails unless the top word is in `set`.
    pub fn validate(&self, set: &TopWordSet) -> Result<()> {
        if set.depth != self.level() || !set.contains(&self.top) {
            return Err(Error::InvalidArgument(format!(
                "{} is not a depth-{} top word",
                self.top,
                self.level()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for TileAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.top.is_empty() {
            return f.write_str(".");
        }
        write!(f, "{}.{}", self.blowup, self.top)
    }
}

impl FromStr for TileAddress {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('.')
            .ok_or_else(|| Error::Parse(format!("tile address {s:?} has no '.'")))?;
        let word = |t: &str| -> Result<Word> {
            if t.is_empty() {
                Ok(Word::empty())
            } else {
                t.parse()
            }
        };
        TileAddress::new(word(a)?, word(b)?)
    }
}

/// One tile of a partial tiling. `cells` are indices of base-frame cells of
/// its top cell; the tile itself is their image under `transform`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tile {
    pub address: TileAddress,
    pub transform: AffineMap,
    pub cells: Vec<usize>,
}

impl Tile {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Box around the tile in the blowup frame.
    pub fn bounding_box(&self, base: &Viewport) -> (Point, Point) {
        let (dx, dy) = base.cell_size();
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &idx in &self.cells {
            let c = base.center_of_index(idx);
            for (sx, sy) in [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)] {
                let p = self.transform.apply(Point::new(c.x + sx * dx, c.y + sy * dy));
                lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        (lo, hi)
    }
}

/// The tiles `f_{-i|k}(π_top(t))` over the surviving depth-`k` top words.
/// Every base cell belongs to at most one tile, so tiles are disjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialTiling {
    level: usize,
    blowup: Word,
    order: PriorityOrder,
    transform: AffineMap,
    base: Viewport,
    tiles: Vec<Tile>,
    /// Per base cell: tile index + 1, or 0.
    owner: Vec<u32>,
}

impl PartialTiling {
    pub fn level(&self) -> usize {
        self.level
    }

    /// `i|k`.
    pub fn blowup(&self) -> &Word {
        &self.blowup
    }

    pub fn order(&self) -> &PriorityOrder {
        &self.order
    }

    /// `f_{-i|k}`.
    pub fn transform(&self) -> &AffineMap {
        &self.transform
    }

    pub fn base_viewport(&self) -> &Viewport {
        &self.base
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn words(&self) -> BTreeSet<Word> {
        self.tiles.iter().map(|t| t.address.top.clone()).collect()
    }

    pub fn tile(&self, top: &Word) -> Option<&Tile> {
        self.tiles
            .binary_search_by(|t| t.address.top.cmp(top))
            .ok()
            .map(|k| &self.tiles[k])
    }

    /// Per base cell: tile index + 1, or 0.
    pub fn owners(&self) -> &[u32] {
        &self.owner
    }

    /// Viewport of the blowup frame with the base grid's cell counts.
    pub fn default_viewport(&self) -> Result<Viewport> {
        self.base.mapped(&self.transform)
    }

    /// Tile index + 1 (0 for none) of every cell of `viewport`, a viewport in
    /// the blowup frame, read by pulling cell centres back to the base frame.
    pub fn render_labels(&self, viewport: &Viewport) -> Result<Vec<u32>> {
        let back = self.transform.invert()?;
        Ok((0..viewport.len())
            .into_par_iter()
            .map(|idx| {
                let p = back.apply(viewport.center_of_index(idx));
                self.base.index_of(p).map_or(0, |b| self.owner[b])
            })
            .collect())
    }

    /// Union of the tiles on a blowup-frame viewport.
    pub fn union_raster(&self, viewport: &Viewport) -> Result<Raster> {
        let labels = self.render_labels(viewport)?;
        Raster::from_bits(*viewport, labels.iter().map(|&l| l > 0).collect())
    }

    /// One line per tile: address, the six coefficients of the transform,
    /// cell count and bounding box in the blowup frame.
    pub fn manifest(&self) -> String {
        let mut out = String::from("# address a b e c d g cells xmin ymin xmax ymax\n");
        for t in &self.tiles {
            let [[a, b, e], [c, d, g]] = t.transform.rows();
            let (lo, hi) = t.bounding_box(&self.base);
            out.push_str(&format!(
                "{} {a:.12e} {b:.12e} {e:.12e} {c:.12e} {d:.12e} {g:.12e} {} {:.9e} {:.9e} {:.9e} {:.9e}\n",
                t.address,
                t.cell_count(),
                lo.x,
                lo.y,
                hi.x,
                hi.y
            ));
        }
        out
    }

    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.manifest().as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

/// Level-`k` partial tiling for the address `i`, built from a depth-`k` top
/// field and the words kept from it.
pub fn partial_tiling(
    ifs: &Ifs,
    i: &InfiniteAddress,
    k: usize,
    field: &TopField,
    words: &TopWordSet,
) -> Result<PartialTiling> {
    if field.depth() != k || words.depth != k {
        return Err(Error::InvalidArgument(format!(
            "level {k} needs depth-{k} top data (field {}, words {})",
            field.depth(),
            words.depth
        )));
    }
    i.check_alphabet(ifs.len())?;
    let blowup = i.prefix(k);
    let transform = ifs.compose_word(&blowup, true)?;
    let index: HashMap<u32, usize> = words
        .counts
        .keys()
        .enumerate()
        .map(|(n, w)| (field.label_of(w), n))
        .collect();
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); index.len()];
    let mut owner = vec![0u32; field.labels().len()];
    for (idx, &label) in field.labels().iter().enumerate() {
        if let Some(&n) = index.get(&label) {
            cells[n].push(idx);
            owner[idx] = n as u32 + 1;
        }
    }
    let tiles = words
        .counts
        .keys()
        .zip(cells)
        .map(|(w, cells)| Tile {
            address: TileAddress {
                blowup: blowup.clone(),
                top: w.clone(),
            },
            transform,
            cells,
        })
        .collect();
    Ok(PartialTiling {
        level: k,
        blowup,
        order: field.order().clone(),
        transform,
        base: *field.viewport(),
        tiles,
        owner,
    })
}

/// The system `{T f_j T^{-1}}`, whose attractor is `T(A)`.
pub fn conjugate(ifs: &Ifs, t: &AffineMap) -> Result<Ifs> {
    let back = t.invert()?;
    let maps = ifs.maps().iter().map(|f| t.compose(f).compose(&back)).collect();
    Ifs::new(format!("{} (conjugated)", ifs.name()), maps)
}

/// Viewport covering `map` applied to `base`, keeping the base cell size.
pub fn blowup_viewport(base: &Viewport, map: &AffineMap, max_cells: usize) -> Result<Viewport> {
    let image = base.mapped(map)?;
    let (dx, dy) = base.cell_size();
    let nx = (image.width() / dx).round().max(1.0);
    let ny = if base.is_line() { 1.0 } else { (image.height() / dy).round().max(1.0) };
    if nx * ny > max_cells as f64 {
        return Err(Error::DepthTooLarge {
            depth: 0,
            reason: format!("blowup needs {nx}x{ny} cells, more than {max_cells}"),
        });
    }
    let (nx, ny) = (nx as usize, ny as usize);
    if base.is_line() {
        let h = image.width() / nx as f64;
        return Viewport::new(
            Point::new(image.min().x, -h / 2.0),
            Point::new(image.max().x, h / 2.0),
            nx,
            1,
        );
    }
    Viewport::new(image.min(), image.max(), nx, ny)
}

/// Raster of `A_n = f_{-i|n}(A)`. The viewport grows with the blowup and keeps
/// the base cell size; `n = 0` returns the base.
pub fn blowup_region(ifs: &Ifs, i: &InfiniteAddress, n: usize, base: &Raster) -> Result<Raster> {
    if n == 0 {
        return Ok(base.clone());
    }
    let t = ifs.compose_word(&i.prefix(n), true)?;
    let viewport = blowup_viewport(base.viewport(), &t, MAX_BLOWUP_CELLS).map_err(|e| match e {
        Error::DepthTooLarge { reason, .. } => Error::DepthTooLarge { depth: n, reason },
        e => e,
    })?;
    render_blowup(ifs, i, n, &viewport)
}

/// Raster of `A_n` on a given viewport, drawn as the attractor of the
/// conjugated system.
pub fn render_blowup(ifs: &Ifs, i: &InfiniteAddress, n: usize, viewport: &Viewport) -> Result<Raster> {
    let t = ifs.compose_word(&i.prefix(n), true)?;
    Ok(attractor_raster(&conjugate(ifs, &t)?, viewport))
}

/// Thresholds for "tile `a` lies inside tile `b`" on rasters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Containment {
    /// Share of `a` within one cell of `b`.
    pub dilated: f64,
    /// Share of `a` inside `b` itself.
    pub undilated: f64,
}

impl Default for Containment {
    fn default() -> Self {
        Containment {
            dilated: 0.98,
            undilated: 0.5,
        }
    }
}

/// Relations between the tiles of levels `k` and `k + 1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransitionReport {
    pub level: usize,
    /// `i_{k+1}`.
    pub symbol: Symbol,
    /// Every level-`k` top word with the level-`(k+1)` words inside its tile.
    pub children: BTreeMap<Word, Vec<Word>>,
    /// Level-`(k+1)` words inside no level-`k` tile.
    pub new_tiles: Vec<Word>,
    /// Whether `i_{k+1} ... i_1` is among the level-`(k+1)` words.
    pub reversible: bool,
    pub violations: Vec<String>,
}

impl TransitionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::ClassificationFailure {
                violations: self.violations,
            })
        }
    }

    /// Checks the relations against the statement: one child per tile, the
    /// child word is `i_{k+1}` followed by the parent word, and new tiles are
    /// exactly the words not starting with `i_{k+1}`.
    fn audit(&mut self, next_words: &BTreeSet<Word>) {
        let s = self.symbol;
        let mut contained = BTreeSet::new();
        for (parent, kids) in &self.children {
            let expected = parent.prepend(s);
            match kids.as_slice() {
                [only] if *only == expected => {}
                [only] => self
                    .violations
                    .push(format!("tile .{parent} has child {only}, expected {expected}")),
                [] => self.violations.push(format!("tile .{parent} has no child")),
                many => self.violations.push(format!(
                    "tile .{parent} has {} children: {}",
                    many.len(),
                    join(many)
                )),
            }
            contained.extend(kids.iter().cloned());
        }
        for w in next_words {
            let starts = w.first() == Some(s);
            let is_new = !contained.contains(w);
            if starts && is_new {
                self.violations
                    .push(format!("tile .{w} starts with {s} but lies in no parent"));
            }
            if !starts && !is_new {
                self.violations
                    .push(format!("tile .{w} does not start with {s} but lies in a parent"));
            }
        }
        if !self.reversible {
            self.violations.push(format!(
                "address not reversible at depth {}",
                self.level + 1
            ));
        }
    }
}

fn join(words: &[Word]) -> String {
    words.iter().map(Word::to_string).collect::<Vec<_>>().join(",")
}

/// Labels of `f_{i_{k+1}}` applied to the level-`k` tiles, on the base grid:
/// each cell reads the owner of its preimage.
fn parent_image(ifs: &Ifs, prev: &PartialTiling, symbol: Symbol) -> Result<Vec<u32>> {
    let back = ifs.inverse(symbol)?;
    let vp = prev.base;
    Ok((0..vp.len())
        .into_par_iter()
        .map(|idx| {
            vp.index_of(back.apply(vp.center_of_index(idx)))
                .map_or(0, |b| prev.owner[b])
        })
        .collect())
}

/// Whether `labels` holds `id` within one cell of `idx`.
fn near(labels: &[u32], vp: &Viewport, idx: usize, id: u32) -> bool {
    let (nx, ny) = (vp.nx() as isize, vp.ny() as isize);
    let (i, j) = ((idx % vp.nx()) as isize, (idx / vp.nx()) as isize);
    for dj in -1..=1 {
        for di in -1..=1 {
            let (a, b) = (i + di, j + dj);
            if a >= 0 && b >= 0 && a < nx && b < ny && labels[(b * nx + a) as usize] == id {
                return true;
            }
        }
    }
    false
}

/// Whether some cell within one cell of `idx` meets the image of tile `id` of
/// `prev` under the map whose inverse is `back`. Each cell is probed at a 3x3
/// grid of points, which is finer than a base cell after pulling back.
fn touches_near(prev: &PartialTiling, back: &AffineMap, vp: &Viewport, idx: usize, id: u32) -> bool {
    let (nx, ny) = (vp.nx() as isize, vp.ny() as isize);
    let (i, j) = ((idx % vp.nx()) as isize, (idx / vp.nx()) as isize);
    let (dx, dy) = vp.cell_size();
    let probes: &[f64] = &[-0.5, 0.0, 0.5];
    let rows: &[f64] = if vp.is_line() { &[0.0] } else { probes };
    for dj in -1..=1 {
        for di in -1..=1 {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= nx || b >= ny {
                continue;
            }
            let c = vp.center(a as usize, b as usize);
            for &oy in rows {
                for &ox in probes {
                    let p = back.apply(Point::new(c.x + ox * dx, c.y + oy * dy));
                    if vp.index_of(p).is_some_and(|q| prev.owner[q] == id) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

fn check_pair(prev: &PartialTiling, next: &PartialTiling) -> Result<()> {
    if next.level != prev.level + 1
        || next.blowup.prefix(prev.level) != prev.blowup
        || !prev.base.same_grid(&next.base)
        || prev.order != next.order
    {
        return Err(Error::InvalidArgument(
            "tilings are not consecutive levels of one address on one grid".into(),
        ));
    }
    Ok(())
}

/// Parent, child and new-tile relations between consecutive levels, without
/// failing on violations.
pub fn transition_report(
    ifs: &Ifs,
    prev: &PartialTiling,
    next: &PartialTiling,
    rule: Containment,
) -> Result<TransitionReport> {
    check_pair(prev, next)?;
    let symbol = *next.blowup.symbols().last().expect("level at least 1");
    let parents = parent_image(ifs, prev, symbol)?;
    let vp = prev.base;

    // for each level-(k+1) tile, the parent tile holding most of it
    let placed: Vec<Option<usize>> = next
        .tiles
        .par_iter()
        .map(|tile| {
            let mut tally: HashMap<u32, usize> = HashMap::new();
            for &idx in &tile.cells {
                *tally.entry(parents[idx]).or_default() += 1;
            }
            let (id, inside) = tally
                .iter()
                .filter(|(&id, _)| id > 0)
                .max_by_key(|(&id, &n)| (n, std::cmp::Reverse(id)))
                .map(|(&id, &n)| (id, n))?;
            let n = tile.cells.len() as f64;
            let close = tile.cells.iter().filter(|&&idx| near(&parents, &vp, idx, id)).count();
            (inside as f64 >= rule.undilated * n && close as f64 >= rule.dilated * n)
                .then_some(id as usize - 1)
        })
        .collect();

    let mut children: BTreeMap<Word, Vec<Word>> = prev
        .tiles
        .iter()
        .map(|t| (t.address.top.clone(), Vec::new()))
        .collect();
    let mut new_tiles = Vec::new();
    for (tile, parent) in next.tiles.iter().zip(placed) {
        match parent {
            Some(p) => children
                .get_mut(&prev.tiles[p].address.top)
                .expect("parent listed")
                .push(tile.address.top.clone()),
            None => new_tiles.push(tile.address.top.clone()),
        }
    }
    let next_words = next.words();
    let reversed = next.blowup.reversed();
    let mut report = TransitionReport {
        level: prev.level,
        symbol,
        children,
        new_tiles,
        reversible: next_words.contains(&reversed),
        violations: Vec::new(),
    };
    report.audit(&next_words);
    Ok(report)
}

/// As [`transition_report`], failing with the list of violations.
pub fn classify_transition(
    ifs: &Ifs,
    prev: &PartialTiling,
    next: &PartialTiling,
    rule: Containment,
) -> Result<TransitionReport> {
    transition_report(ifs, prev, next, rule)?.into_result()
}

/// The same relations for a line system, from exact top cells at depths `k`
/// and `k + 1`. Containment means the child cell minus the mapped parent cell
/// has measure zero.
pub fn exact_transition(
    line: &LineIfs,
    i: &InfiniteAddress,
    k: usize,
    order: &PriorityOrder,
) -> Result<TransitionReport> {
    i.check_alphabet(line.len())?;
    let prev = top_words_exact(line, k, order)?;
    let next = top_words_exact(line, k + 1, order)?;
    exact_transition_from(line, i, &prev, &next)
}

pub fn exact_transition_from(
    line: &LineIfs,
    i: &InfiniteAddress,
    prev: &ExactTops,
    next: &ExactTops,
) -> Result<TransitionReport> {
    let k = prev.depth;
    if next.depth != k + 1 {
        return Err(Error::InvalidArgument("exact tops are not consecutive".into()));
    }
    let symbol = i.symbol_at(k);
    let (a, b) = &line.maps()[symbol as usize - 1];
    let images: Vec<(Word, IntervalSet)> = prev
        .cells
        .iter()
        .map(|(w, set)| (w.clone(), set.map(a, b)))
        .collect();
    let zero = Q::default();
    let mut children: BTreeMap<Word, Vec<Word>> =
        prev.cells.keys().map(|w| (w.clone(), Vec::new())).collect();
    let mut new_tiles = Vec::new();
    for (w, cell) in &next.cells {
        match images.iter().find(|(_, img)| cell.measure_outside(img) == zero) {
            Some((p, _)) => children.get_mut(p).expect("parent listed").push(w.clone()),
            None => new_tiles.push(w.clone()),
        }
    }
    let next_words = next.words();
    let mut report = TransitionReport {
        level: k,
        symbol,
        children,
        new_tiles,
        reversible: next_words.contains(&i.reverse_prefix(k + 1)),
        violations: Vec::new(),
    };
    report.audit(&next_words);
    Ok(report)
}

/// Per-level check that every level-`k` tile of `1̄` reappears at level
/// `k + 1`: the word `1t` is present and its cell agrees with `f_1` applied
/// to the cell of `t` up to one cell. `tilings[k]` is level `k`.
pub fn verify_nesting_onebar(ifs: &Ifs, tilings: &[PartialTiling]) -> Result<Vec<bool>> {
    for t in tilings {
        if t.blowup.symbols().iter().any(|&s| s != 1) {
            return Err(Error::InvalidArgument(format!(
                "nesting holds for the address 1̄ only, got {}",
                t.blowup
            )));
        }
    }
    tilings
        .windows(2)
        .map(|pair| Ok(nesting_mismatches(ifs, &pair[0], &pair[1])?.is_empty()))
        .collect()
}

/// Level-`k` tiles whose copy at level `k + 1` differs from them outside a
/// one-cell band around the tile's boundary, with the number of offending
/// cells. In the frame of `A` the parent is `f_1` applied to its top cell and
/// the copy is the top cell of `1t`. A copy cell is excused when it is within
/// one cell of the parent; a parent cell missing from the copy is excused
/// when it lies on the parent's rim or next to the copy.
pub fn nesting_mismatches(
    ifs: &Ifs,
    prev: &PartialTiling,
    next: &PartialTiling,
) -> Result<Vec<(Word, usize)>> {
    check_pair(prev, next)?;
    let symbol = *next.blowup.symbols().last().expect("level at least 1");
    let parents = parent_image(ifs, prev, symbol)?;
    let back = ifs.inverse(symbol)?;
    let vp = prev.base;
    let mut region: Vec<Vec<usize>> = vec![Vec::new(); prev.tiles.len()];
    for (idx, &id) in parents.iter().enumerate() {
        if id > 0 {
            region[id as usize - 1].push(idx);
        }
    }
    let out: Vec<Option<(Word, usize)>> = prev
        .tiles
        .par_iter()
        .zip(region)
        .enumerate()
        .map(|(n, (tile, parent_cells))| {
            let top = &tile.address.top;
            let pid = n as u32 + 1;
            let Some(k) = next.tiles.iter().position(|t| t.address.top == top.prepend(symbol))
            else {
                return Some((top.clone(), parent_cells.len().max(1)));
            };
            let cid = k as u32 + 1;
            let extra = next.tiles[k]
                .cells
                .iter()
                .filter(|&&i| parents[i] != pid && !touches_near(prev, back, &vp, i, pid))
                .count();
            let missing = parent_cells
                .iter()
                .filter(|&&i| next.owner[i] != cid)
                .filter(|&&i| !on_rim(&parents, &vp, i, pid) && !near(&next.owner, &vp, i, cid))
                .count();
            (extra + missing > 0).then(|| (top.clone(), extra + missing))
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Whether a cell labelled `id` has a neighbour with another label.
fn on_rim(labels: &[u32], vp: &Viewport, idx: usize, id: u32) -> bool {
    let (nx, ny) = (vp.nx() as isize, vp.ny() as isize);
    let (i, j) = ((idx % vp.nx()) as isize, (idx / vp.nx()) as isize);
    (-1..=1).any(|dj| {
        (-1..=1).any(|di| {
            let (a, b) = (i + di, j + dj);
            a < 0 || b < 0 || a >= nx || b >= ny || labels[(b * nx + a) as usize] != id
        })
    })
}

/// Exact nesting for line systems: `f_1^{-1}(π_top(1t)) = π_top(t)` for every
/// depth-`k` top word `t`, up to measure zero. Returns the failing words.
pub fn exact_nesting_mismatches(prev: &ExactTops, next: &ExactTops, line: &LineIfs) -> Vec<Word> {
    let (a, b) = &line.maps()[0];
    let zero = Q::default();
    prev.cells
        .iter()
        .filter(|(t, cell)| match next.cells.get(&t.prepend(1)) {
            None => true,
            Some(child) => {
                let image = cell.map(a, b);
                child.measure_outside(&image) != zero || image.measure_outside(child) != zero
            }
        })
        .map(|(t, _)| t.clone())
        .collect()
}

/// `(η⁻(m), η(m))`: the sum of `a_{m_i}` without and with the last symbol.
pub fn stopping_time_eta(word: &Word, exponents: &[f64]) -> Result<(f64, f64)> {
    let Some(last) = word.last() else {
        return Err(Error::InvalidArgument("stopping times need a nonempty word".into()));
    };
    word.check_alphabet(exponents.len())?;
    let eta: f64 = word.symbols().iter().map(|&s| exponents[s as usize - 1]).sum();
    Ok((eta - exponents[last as usize - 1], eta))
}

/// One tile `f_{-i|j} f_m(A)` of a stopping-time tiling.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppingTile {
    pub word: Word,
    pub transform: AffineMap,
    /// Contraction ratio of `f_m`.
    pub word_ratio: f64,
    /// Contraction ratio of `f_{-i|j} f_m`, the size relative to `A`.
    pub scale: f64,
}

/// Tiles `f_{-i|j} f_m(A)` over all words `m` with `η⁻(m) < η(i|j) ≤ η(m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppingTiling {
    pub level: usize,
    pub blowup: Word,
    pub threshold: f64,
    pub tiles: Vec<StoppingTile>,
    /// A ball holding `A`, used for local counts.
    pub center: Point,
    pub radius: f64,
}

impl StoppingTiling {
    /// Tiles whose enclosing ball meets the closed ball `B(p, rho)`.
    pub fn count_in_ball(&self, p: Point, rho: f64) -> usize {
        self.tiles
            .iter()
            .filter(|t| t.transform.apply(self.center).distance(p) <= rho + t.scale * self.radius)
            .count()
    }

    /// Smallest and largest `scale` over the tiles.
    pub fn scale_range(&self) -> (f64, f64) {
        self.tiles.iter().fold((f64::INFINITY, 0.0), |(lo, hi), t| {
            (lo.min(t.scale), hi.max(t.scale))
        })
    }
}

/// Stopping-time tiling of the blowup at level `j`. Each ratio `s_k` is
/// written `r^{a_k}` with `r` the largest ratio.
pub fn osc_stopping_tiling(ifs: &Ifs, i: &InfiniteAddress, j: usize) -> Result<StoppingTiling> {
    i.check_alphabet(ifs.len())?;
    let a = ifs.ratio_exponents();
    let r = ifs.max_ratio();
    let blowup = i.prefix(j);
    let threshold: f64 = blowup.symbols().iter().map(|&s| a[s as usize - 1]).sum();
    let outer = ifs.compose_word(&blowup, true)?;
    let lift = r.powf(-threshold);
    let tol = PREDICATE_TOL * threshold.max(1.0);

    let mut tiles = Vec::new();
    let mut stack = vec![(Word::empty(), AffineMap::IDENTITY, 0.0)];
    while let Some((w, f, eta)) = stack.pop() {
        if !w.is_empty() && eta >= threshold - tol {
            let word_ratio = r.powf(eta);
            tiles.push(StoppingTile {
                transform: outer.compose(&f),
                word: w,
                word_ratio,
                scale: word_ratio * lift,
            });
            continue;
        }
        for s in (1..=ifs.len() as Symbol).rev() {
            let g = f.compose(ifs.map(s)?);
            stack.push((w.append(s), g, eta + a[s as usize - 1]));
        }
    }
    tiles.sort_by(|x, y| x.word.cmp(&y.word));
    let b = bounds(ifs);
    Ok(StoppingTiling {
        level: j,
        blowup,
        threshold,
        tiles,
        center: b.center,
        radius: b.radius,
    })
}

/// Maps `f_{-i|n} f_{m|n}` for all words `m` of length `n`.
fn level_maps(ifs: &Ifs, i: &InfiniteAddress, n: usize) -> Result<Vec<(Word, AffineMap)>> {
    let outer = ifs.compose_word(&i.prefix(n), true)?;
    let order = PriorityOrder::standard(ifs.len());
    order
        .words_increasing(n)
        .map(|m| Ok((m.clone(), outer.compose(&ifs.compose_word(&m, false)?))))
        .collect()
}

/// Counts for the passage from level `n` to `n + 1` of the single-ratio
/// construction `{f_{-i|n} f_{m|n}(A)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscLevelCount {
    pub level: usize,
    /// Level-`(n+1)` maps equal to no level-`n` map.
    pub new_maps: usize,
    /// Of those, words whose first symbol differs from `i_{n+1}`.
    pub new_with_other_first: usize,
    /// Level-`(n+1)` maps that coincide with each other.
    pub duplicates: usize,
    /// `m^n (m - 1)`.
    pub expected: usize,
}

impl OscLevelCount {
    pub fn holds(&self) -> bool {
        self.new_maps == self.expected
            && self.new_with_other_first == self.expected
            && self.duplicates == 0
    }
}

/// Symbolic count of the new pieces at level `n + 1`: maps are matched
/// coefficientwise, so no geometry is involved.
pub fn osc_new_cylinder_count(ifs: &Ifs, i: &InfiniteAddress, n: usize) -> Result<OscLevelCount> {
    i.check_alphabet(ifs.len())?;
    crate::tops::check_depth(ifs.len(), n + 1)?;
    let prev = level_maps(ifs, i, n)?;
    let next = level_maps(ifs, i, n + 1)?;
    let scale = next
        .iter()
        .map(|(_, f)| f.rows().concat().iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(1.0, f64::max);
    let tol = PREDICATE_TOL * scale;
    let symbol = i.symbol_at(n);
    let mut new_maps = 0;
    let mut new_with_other_first = 0;
    for (m, f) in &next {
        if !prev.iter().any(|(_, g)| g.approx_eq(f, tol)) {
            new_maps += 1;
            if m.first() != Some(symbol) {
                new_with_other_first += 1;
            }
        }
    }
    let duplicates = (0..next.len())
        .filter(|&a| next[..a].iter().any(|(_, g)| g.approx_eq(&next[a].1, tol)))
        .count();
    let m = ifs.len();
    Ok(OscLevelCount {
        level: n,
        new_maps,
        new_with_other_first,
        duplicates,
        expected: m.pow(n as u32) * (m - 1),
    })
}
