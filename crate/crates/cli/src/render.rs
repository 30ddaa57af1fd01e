//! SVG and PNG output for labelled rasters: tilings, top fields and 1D top
//! diagrams. SVG regions are unions of horizontal cell runs with their cell
//! boundary traced as a separate stroke, so output depends only on the labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use blowups::exact::IntervalSet;
use blowups::tiling::PartialTiling;
use blowups::tops::{word_color, ExactTops, TopField};
use blowups::{Point, Viewport, Word};
use clap::ValueEnum;
use image::{Rgb, RgbImage};

/// How tiles are filled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ColorMode {
    /// Colour derived from the tile's top word.
    #[default]
    AddressHash,
    /// Colour of the photo beneath the tile's centroid.
    PhotoSample,
    /// One colour for every tile.
    Flat,
}

#[derive(Clone, Debug)]
pub struct RenderStyle {
    pub color: ColorMode,
    pub photo: Option<PathBuf>,
    /// Outline width in cells; 0 disables outlines.
    pub stroke: f64,
    /// Print tile addresses.
    pub labels: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            color: ColorMode::AddressHash,
            photo: None,
            stroke: 0.25,
            labels: false,
        }
    }
}

const FLAT: [u8; 3] = [196, 214, 160];
const BACKGROUND: [u8; 3] = [255, 255, 255];

/// An image stretched over a viewport.
pub struct Photo {
    image: RgbImage,
}

impl Photo {
    pub fn open(path: &Path) -> Result<Self> {
        let image = image::open(path)
            .with_context(|| format!("reading photo {}", path.display()))?
            .to_rgb8();
        ensure!(image.width() > 0 && image.height() > 0, "photo {} is empty", path.display());
        Ok(Photo { image })
    }

    pub fn from_image(image: RgbImage) -> Self {
        Photo { image }
    }

    /// Pixel under `p`, with the viewport mapped onto the whole image.
    pub fn sample(&self, vp: &Viewport, p: Point) -> [u8; 3] {
        let (w, h) = (self.image.width(), self.image.height());
        let u = ((p.x - vp.min().x) / vp.width()).clamp(0.0, 1.0);
        let v = ((vp.max().y - p.y) / vp.height().max(f64::MIN_POSITIVE)).clamp(0.0, 1.0);
        let px = ((u * w as f64) as u32).min(w - 1);
        let py = ((v * h as f64) as u32).min(h - 1);
        self.image.get_pixel(px, py).0
    }
}

/// Deterministic synthetic photograph: smooth colour bands with a few
/// ripples, standing in for a real picture.
pub fn synthetic_photo(width: u32, height: u32) -> RgbImage {
    RgbImage::from_fn(width, height, |x, y| {
        let u = x as f64 / width.max(1) as f64;
        let v = y as f64 / height.max(1) as f64;
        let ripple = (12.0 * u + 7.0 * v).sin() * 0.5 + 0.5;
        let r = 0.35 + 0.5 * v * ripple;
        let g = 0.45 + 0.45 * (1.0 - v) * (0.6 + 0.4 * (9.0 * u).cos());
        let b = 0.2 + 0.3 * u * (1.0 - ripple);
        Rgb([r, g, b].map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8))
    })
}

/// A labelled region: label `k` of a label grid is `regions[k - 1]`.
#[derive(Clone, Debug)]
pub struct Region {
    pub id: String,
    pub fill: [u8; 3],
}

/// Cell grid with labels, rows bottom to top. `row_height` stretches rows,
/// which keeps line viewports visible.
pub struct LabelGrid<'a> {
    pub nx: usize,
    pub ny: usize,
    pub labels: &'a [u32],
    pub row_height: usize,
}

impl LabelGrid<'_> {
    fn at(&self, i: isize, j: isize) -> u32 {
        if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
            0
        } else {
            self.labels[j as usize * self.nx + i as usize]
        }
    }
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG with one `<g>` per region holding its fill, outline and label.
pub fn regions_svg(grid: &LabelGrid, regions: &[Region], style: &RenderStyle) -> String {
    let rh = grid.row_height.max(1);
    let (w, h) = (grid.nx, grid.ny * rh);
    let flip = |j: usize| (grid.ny - 1 - j) * rh;

    let mut runs: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); regions.len()];
    let mut sums: Vec<(f64, f64, usize)> = vec![(0.0, 0.0, 0); regions.len()];
    for j in 0..grid.ny {
        let row = &grid.labels[j * grid.nx..(j + 1) * grid.nx];
        let mut i = 0;
        while i < grid.nx {
            let l = row[i];
            let start = i;
            while i < grid.nx && row[i] == l {
                i += 1;
            }
            if l > 0 && (l as usize) <= regions.len() {
                let k = l as usize - 1;
                runs[k].push((start, j, i - start));
                let s = &mut sums[k];
                let n = i - start;
                s.0 += (start as f64 + n as f64 / 2.0) * n as f64;
                s.1 += (flip(j) as f64 + rh as f64 / 2.0) * n as f64;
                s.2 += n;
            }
        }
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" shape-rendering="crispEdges">
<rect width="{w}" height="{h}" fill="{}"/>"#,
        hex(BACKGROUND)
    );
    let font = (w.min(h) as f64 / 60.0).max(2.0);
    for (k, region) in regions.iter().enumerate() {
        if runs[k].is_empty() {
            continue;
        }
        let label = k as u32 + 1;
        let _ = writeln!(out, r#"<g id="{}">"#, escape(&region.id));
        let mut d = String::new();
        for &(i, j, n) in &runs[k] {
            let _ = write!(d, "M{i} {}h{n}v{rh}h-{n}z", flip(j));
        }
        let _ = writeln!(out, r#"<path fill="{}" d="{d}"/>"#, hex(region.fill));
        if style.stroke > 0.0 {
            let _ = writeln!(
                out,
                r##"<path fill="none" stroke="#000000" stroke-width="{}" d="{}"/>"##,
                style.stroke,
                outline(grid, label, rh)
            );
        }
        if style.labels {
            let (sx, sy, n) = sums[k];
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="{font:.1}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
                sx / n as f64,
                sy / n as f64,
                escape(&region.id)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Cell edges between `label` and anything else, merged along rows and
/// columns.
fn outline(grid: &LabelGrid, label: u32, rh: usize) -> String {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let y = |j: isize| ((ny - j) as usize) * rh;
    let mut d = String::new();
    // horizontal edges: above (dj = 1) and below (dj = -1) each row
    for j in 0..ny {
        for dj in [1isize, -1] {
            let mut i = 0;
            while i < nx {
                if grid.at(i, j) == label && grid.at(i, j + dj) != label {
                    let start = i;
                    while i < nx && grid.at(i, j) == label && grid.at(i, j + dj) != label {
                        i += 1;
                    }
                    let edge = if dj == 1 { y(j + 1) } else { y(j) };
                    let _ = write!(d, "M{start} {edge}h{}", i - start);
                } else {
                    i += 1;
                }
            }
        }
    }
    // vertical edges: left (di = -1) and right (di = 1) of each column
    for i in 0..nx {
        for di in [-1isize, 1] {
            let mut j = 0;
            while j < ny {
                if grid.at(i, j) == label && grid.at(i + di, j) != label {
                    let start = j;
                    while j < ny && grid.at(i, j) == label && grid.at(i + di, j) != label {
                        j += 1;
                    }
                    let x = if di == 1 { i + 1 } else { i };
                    let _ = write!(d, "M{x} {}v{}", y(j), (j - start) as usize * rh);
                } else {
                    j += 1;
                }
            }
        }
    }
    d
}

/// Labels rendered as RGB, outlines drawn in black when `style.stroke > 0`.
pub fn regions_image(grid: &LabelGrid, regions: &[Region], style: &RenderStyle) -> RgbImage {
    let rh = grid.row_height.max(1);
    RgbImage::from_fn(grid.nx as u32, (grid.ny * rh) as u32, |x, y| {
        let (i, j) = (x as isize, (grid.ny - 1 - y as usize / rh) as isize);
        let l = grid.at(i, j);
        if l == 0 || l as usize > regions.len() {
            return Rgb(BACKGROUND);
        }
        let edge = style.stroke > 0.0
            && [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|&(di, dj)| grid.at(i + di, j + dj) != l);
        Rgb(if edge { [0, 0, 0] } else { regions[l as usize - 1].fill })
    })
}

fn row_height(vp: &Viewport) -> usize {
    if vp.is_line() {
        (vp.nx() / 16).max(1)
    } else {
        1
    }
}

fn tile_fill(style: &RenderStyle, photo: Option<&Photo>, vp: &Viewport, top: &Word, centroid: Point) -> [u8; 3] {
    match (style.color, photo) {
        (ColorMode::AddressHash, _) => word_color(top),
        (ColorMode::Flat, _) => FLAT,
        (ColorMode::PhotoSample, Some(p)) => p.sample(vp, centroid),
        (ColorMode::PhotoSample, None) => FLAT,
    }
}

/// Per-tile labels and regions of a tiling on its blowup-frame viewport.
pub fn tiling_regions(
    tiling: &PartialTiling,
    style: &RenderStyle,
    photo: Option<&Photo>,
) -> Result<(Viewport, Vec<u32>, Vec<Region>)> {
    ensure!(!tiling.is_empty(), "tiling at level {} has no tiles", tiling.level());
    if style.color == ColorMode::PhotoSample && photo.is_none() {
        bail!("photo-sample colouring needs a photo");
    }
    let vp = tiling.default_viewport()?;
    let labels = tiling.render_labels(&vp)?;
    let mut sums = vec![(0.0, 0.0, 0usize); tiling.len()];
    for (idx, &l) in labels.iter().enumerate() {
        if l > 0 {
            let c = vp.center_of_index(idx);
            let s = &mut sums[l as usize - 1];
            s.0 += c.x;
            s.1 += c.y;
            s.2 += 1;
        }
    }
    let regions = tiling
        .tiles()
        .iter()
        .zip(&sums)
        .map(|(t, &(sx, sy, n))| {
            let centroid = if n > 0 {
                Point::new(sx / n as f64, sy / n as f64)
            } else {
                t.transform.apply(tiling.base_viewport().center_of_index(t.cells.first().copied().unwrap_or(0)))
            };
            Region {
                id: t.address.to_string(),
                fill: tile_fill(style, photo, &vp, t.address.top(), centroid),
            }
        })
        .collect();
    Ok((vp, labels, regions))
}

/// Writes `out` as SVG, plus a PNG next to it when `png` is set.
pub fn render_tiling(tiling: &PartialTiling, style: &RenderStyle, out: &Path, png: bool) -> Result<()> {
    let photo = style.photo.as_deref().map(Photo::open).transpose()?;
    render_tiling_with(tiling, style, photo.as_ref(), out, png)
}

pub fn render_tiling_with(
    tiling: &PartialTiling,
    style: &RenderStyle,
    photo: Option<&Photo>,
    out: &Path,
    png: bool,
) -> Result<()> {
    let (vp, labels, regions) = tiling_regions(tiling, style, photo)?;
    write_regions(&vp, &labels, &regions, style, out, png)
}

fn write_regions(
    vp: &Viewport,
    labels: &[u32],
    regions: &[Region],
    style: &RenderStyle,
    out: &Path,
    png: bool,
) -> Result<()> {
    let grid = LabelGrid {
        nx: vp.nx(),
        ny: vp.ny(),
        labels,
        row_height: row_height(vp),
    };
    std::fs::write(out, regions_svg(&grid, regions, style))
        .with_context(|| format!("writing {}", out.display()))?;
    if png {
        let path = out.with_extension("png");
        regions_image(&grid, regions, style)
            .save(&path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// A top field with one region per word present.
pub fn render_top_field(field: &TopField, style: &RenderStyle, out: &Path, png: bool) -> Result<()> {
    let counts = field.label_counts();
    let present: Vec<u32> = counts.keys().copied().filter(|&l| l > 0).collect();
    let remap: BTreeMap<u32, u32> = present.iter().enumerate().map(|(k, &l)| (l, k as u32 + 1)).collect();
    let labels: Vec<u32> = field
        .labels()
        .iter()
        .map(|l| remap.get(l).copied().unwrap_or(0))
        .collect();
    let regions: Vec<Region> = present
        .iter()
        .map(|&l| {
            let w = field.word_of_label(l).expect("label of a painted word");
            let fill = match style.color {
                ColorMode::Flat => FLAT,
                _ => word_color(&w),
            };
            Region { id: w.to_string(), fill }
        })
        .collect();
    write_regions(field.viewport(), &labels, &regions, style, out, png)
}

/// Tile outlines of several label grids on one viewport, one `<g>` per
/// layer, each layer in its own colour.
pub fn layered_outlines_svg(nx: usize, ny: usize, layers: &[(String, Vec<u32>)], stroke: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{nx}" height="{ny}" viewBox="0 0 {nx} {ny}">
<rect width="{nx}" height="{ny}" fill="{}"/>"#,
        hex(BACKGROUND)
    );
    let n = layers.len().max(1) as f64;
    for (k, (id, labels)) in layers.iter().enumerate() {
        let grid = LabelGrid {
            nx,
            ny,
            labels,
            row_height: 1,
        };
        let colour = blowups::tops::hsv_to_rgb(360.0 * k as f64 / n, 0.85, 0.8);
        let present: BTreeSet<u32> = labels.iter().copied().filter(|&l| l > 0).collect();
        let _ = writeln!(
            out,
            r#"<g id="{}" fill="none" stroke="{}" stroke-width="{stroke}">"#,
            escape(id),
            hex(colour)
        );
        for l in present {
            let _ = writeln!(out, r#"<path d="{}"/>"#, outline(&grid, l, 1));
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Rows of exact 1D top cells, shallowest at the top, as SVG. Each row
/// spans the hull `[lo, hi]` over `width` units.
pub fn exact_tops_svg(rows: &[ExactTops], lo: f64, hi: f64, width: usize, labels: bool) -> String {
    let row_h = 28.0;
    let gap = 10.0;
    let height = rows.len() as f64 * (row_h + gap) + gap;
    let scale = width as f64 / (hi - lo);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">
<rect width="{width}" height="{height}" fill="{}"/>"#,
        hex(BACKGROUND)
    );
    for (r, tops) in rows.iter().enumerate() {
        let y = gap + r as f64 * (row_h + gap);
        let _ = writeln!(out, r#"<g id="depth-{}">"#, tops.depth);
        for (w, set) in &tops.cells {
            cell_rects(&mut out, w, set, lo, scale, y, row_h, labels);
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[allow(clippy::too_many_arguments)]
fn cell_rects(out: &mut String, w: &Word, set: &IntervalSet, lo: f64, scale: f64, y: f64, h: f64, labels: bool) {
    let name = if w.is_empty() { "\u{2205}".to_string() } else { w.to_string() };
    for (a, b) in set.to_f64() {
        let (x0, x1) = ((a - lo) * scale, (b - lo) * scale);
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.3}" y="{y:.3}" width="{:.3}" height="{h:.3}" fill="{}" stroke="#000000" stroke-width="0.5"><title>{name}</title></rect>"##,
            x1 - x0,
            hex(word_color(w))
        );
        if labels && x1 - x0 > 6.0 * name.len() as f64 {
            let _ = writeln!(
                out,
                r#"<text x="{:.3}" y="{:.3}" font-size="10" text-anchor="middle">{name}</text>"#,
                (x0 + x1) / 2.0,
                y + h / 2.0 + 3.5
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(labels: &[u32], nx: usize) -> LabelGrid<'_> {
        LabelGrid {
            nx,
            ny: labels.len() / nx,
            labels,
            row_height: 1,
        }
    }

    fn two_regions() -> Vec<Region> {
        vec![
            Region { id: "a".into(), fill: [255, 0, 0] },
            Region { id: "b".into(), fill: [0, 0, 255] },
        ]
    }

    #[test]
    fn one_group_per_region() {
        let labels = [1, 1, 2, 0, 1, 2];
        let svg = regions_svg(&grid(&labels, 3), &two_regions(), &RenderStyle::default());
        assert_eq!(svg.matches("<g id=").count(), 2);
        assert!(svg.contains(r#"<g id="a">"#));
        // row 0 is drawn at the bottom
        assert!(svg.contains("M0 1h2v1h-2z"));
    }

    #[test]
    fn outline_of_a_square() {
        let labels = [1, 1, 1, 1];
        let d = outline(&grid(&labels, 2), 1, 1);
        assert_eq!(d.matches('M').count(), 4);
    }

    #[test]
    fn image_marks_edges() {
        let labels = [1, 1, 1, 1, 1, 1, 1, 1, 1];
        let img = regions_image(&grid(&labels, 3), &two_regions(), &RenderStyle::default());
        assert_eq!(img.get_pixel(1, 1).0, [255, 0, 0]);
        assert_eq!(img.get_pixel(0, 0).0, [0, 0, 0]);
    }

    #[test]
    fn synthetic_photo_is_stable() {
        let a = synthetic_photo(32, 16);
        let b = synthetic_photo(32, 16);
        assert_eq!(a, b);
        assert_eq!(a.dimensions(), (32, 16));
    }
}
