//! Regenerates the figure set: attractors, tops, blowups, tilings, fast
//! basins and the golden strip. Every output is a pure function of the
//! configuration, so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use blowups::attractor::{attractor_raster, bounds, viewport_for};
use blowups::exact::LineIfs;
use blowups::rifs::{self, golden_rho, ReverseIfs, Window};
use blowups::systems;
use blowups::tops::{compute_top_field, default_min_cells_for, top_words};
use blowups::{AffineMap, Ifs, InfiniteAddress, Point, PriorityOrder, Raster, Viewport};
use image::{Rgb, RgbImage};

use crate::config::Config;
use crate::render::{self, ColorMode, Photo, RenderStyle};
use crate::verify::levels_on;

/// Files written by [`generate`], relative to the output directory.
pub fn expected_files(cfg: &Config) -> Vec<String> {
    let mut files: Vec<String> = [
        "synthetic-photo.png",
        "attractor-leaf.png",
        "top-addresses-third.svg",
        "top-addresses-half.svg",
        "top-addresses-two-thirds.svg",
        "tops-example3.svg",
        "tops-example3-reversed.svg",
        "tops-example4.svg",
        "leaf-blowups-nested.svg",
        "leaf-tiling-patch.svg",
        "leaf-tiling-patch.png",
        "leaf-tiling-patch.txt",
        "three-map-top.svg",
        "three-map-top.png",
        "fast-basin-sierpinski.png",
        "fast-basin-leaf.png",
        "fibonacci-strip.svg",
        "fibonacci-orbit.csv",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for n in 1..=cfg.depth {
        files.push(format!("leaf-tops-depth-{n}.svg"));
        files.push(format!("leaf-tops-depth-{n}.png"));
    }
    for k in 0..=cfg.depth {
        files.push(format!("leaf-blowup-level-{k}.svg"));
    }
    files.sort();
    files
}

/// An overlapping system of three maps used for the photo-coloured top.
pub fn three_map_ifs() -> Ifs {
    Ifs::new(
        "three-maps",
        vec![
            AffineMap::similitude(0.62, 0.35, 0.0, 0.0),
            AffineMap::similitude(0.58, -0.5, 0.45, 0.3),
            AffineMap::from_rows([[0.5, 0.1, 0.2], [-0.15, 0.55, 0.5]]),
        ],
    )
    .expect("contractive maps")
}

/// Writes every figure into `dir` and returns their paths, sorted.
pub fn generate(cfg: &Config, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let res = cfg.figure_resolution;

    let photo_image = render::synthetic_photo(512, 512);
    save(&photo_image, &dir.join("synthetic-photo.png"))?;
    let photo = Photo::from_image(photo_image);

    // attractor of the leaf
    let leaf = systems::leaf();
    let order = PriorityOrder::standard(leaf.len());
    let vp = viewport_for(&leaf, res)?;
    let base = attractor_raster(&leaf, &vp);
    base.write_png(dir.join("attractor-leaf.png"))?;

    // top addresses of two-map line systems with ratios 1/3, 1/2, 2/3
    for (name, ifs) in [
        ("third", systems::cantor()),
        ("half", systems::dyadic()),
        ("two-thirds", systems::example3()),
    ] {
        line_tops(&ifs, &PriorityOrder::standard(2), 5, &dir.join(format!("top-addresses-{name}.svg")))?;
    }
    line_tops(&systems::example3(), &PriorityOrder::standard(2), 5, &dir.join("tops-example3.svg"))?;
    line_tops(&systems::example3(), &PriorityOrder::reversed(2), 5, &dir.join("tops-example3-reversed.svg"))?;
    line_tops(&systems::example4(), &PriorityOrder::standard(2), 5, &dir.join("tops-example4.svg"))?;

    // successive tops of the leaf, labelled
    let labelled = RenderStyle {
        labels: true,
        ..RenderStyle::default()
    };
    for n in 1..=cfg.depth {
        let field = compute_top_field(&leaf, n, &base, &order)?;
        render::render_top_field(&field, &labelled, &dir.join(format!("leaf-tops-depth-{n}.svg")), true)?;
    }

    // blowups of 1̄, each in its own frame and all together
    let one = InfiniteAddress::constant(1);
    let tilings = levels_on(&leaf, &order, &one, &base, cfg.depth)?;
    let style = RenderStyle::default();
    for t in &tilings {
        render::render_tiling_with(t, &style, None, &dir.join(format!("leaf-blowup-level-{}.svg", t.level())), false)?;
    }
    let last = tilings.last().expect("level 0 present");
    let frame = last.default_viewport()?;
    let layers = tilings
        .iter()
        .map(|t| Ok((format!("level-{}", t.level()), t.render_labels(&frame)?)))
        .collect::<Result<Vec<_>>>()?;
    std::fs::write(
        dir.join("leaf-blowups-nested.svg"),
        render::layered_outlines_svg(frame.nx(), frame.ny(), &layers, 0.5),
    )?;

    // photo-coloured patch of the leaf tiling
    let patch_style = RenderStyle {
        color: ColorMode::PhotoSample,
        stroke: 0.0,
        ..RenderStyle::default()
    };
    render::render_tiling_with(last, &patch_style, Some(&photo), &dir.join("leaf-tiling-patch.svg"), true)?;
    last.write_manifest(dir.join("leaf-tiling-patch.txt"))?;

    // photo-coloured blowup of an overlapping three-map system
    let three = three_map_ifs();
    let tvp = viewport_for(&three, res)?;
    let tbase = attractor_raster(&three, &tvp);
    let torder = PriorityOrder::standard(3);
    let k = cfg.depth.min(5);
    let field = compute_top_field(&three, k, &tbase, &torder)?;
    let words = top_words(&field, default_min_cells_for(&three, &tbase, k));
    let tiling = blowups::tiling::partial_tiling(&three, &one, k, &field, &words)?;
    render::render_tiling_with(&tiling, &patch_style, Some(&photo), &dir.join("three-map-top.svg"), true)?;

    // fast basins over four times the attractor's box
    for (name, ifs) in [("sierpinski", systems::sierpinski()), ("leaf", leaf.clone())] {
        let window = basin_window(&ifs, res)?;
        let a_vp = viewport_for(&ifs, res)?;
        let a = attractor_raster(&ifs, &a_vp);
        let basin = rifs::fast_basin(&ifs, &window, 8, &a)?;
        save(&basin_image(&basin, &a), &dir.join(format!("fast-basin-{name}.png")))?;
    }

    // golden strip orbit and its projection
    let radius = 20.0;
    let t = ReverseIfs::example2();
    let orbit = rifs::forward_orbit(
        &t,
        &[Point::new(0.0, 0.0), Point::new(0.0, 1.0)],
        &Window::square(radius),
        usize::MAX,
    )?;
    std::fs::write(dir.join("fibonacci-orbit.csv"), orbit.to_csv())?;
    let points: Vec<Point> = orbit.points().map(|p| p.point).collect();
    std::fs::write(dir.join("fibonacci-strip.svg"), strip_svg(&points, radius))?;

    let mut files: Vec<PathBuf> = expected_files(cfg).iter().map(|f| dir.join(f)).collect();
    files.sort();
    Ok(files)
}

fn save(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path).with_context(|| format!("writing {}", path.display()))
}

fn line_tops(ifs: &Ifs, order: &PriorityOrder, depth: usize, out: &Path) -> Result<()> {
    let line = LineIfs::from_ifs(ifs)?;
    let rows = crate::verify::exact_levels(&line, order, depth)?;
    let (lo, hi) = line.hull();
    let svg = render::exact_tops_svg(&rows, blowups::exact::to_f64(&lo), blowups::exact::to_f64(&hi), 960, true);
    std::fs::write(out, svg).with_context(|| format!("writing {}", out.display()))
}

/// Square viewport four times the size of the attractor's box, around it.
fn basin_window(ifs: &Ifs, res: usize) -> Result<Viewport> {
    let b = bounds(ifs);
    let side = (b.hi.x - b.lo.x).max(b.hi.y - b.lo.y);
    let c = Point::new((b.lo.x + b.hi.x) / 2.0, (b.lo.y + b.hi.y) / 2.0);
    let half = 2.0 * side;
    Ok(Viewport::square(
        Point::new(c.x - half, c.y - half),
        Point::new(c.x + half, c.y + half),
        res,
    )?)
}

/// Basin in grey with the attractor in red, rows flipped so `y` points up.
fn basin_image(basin: &Raster, a: &Raster) -> RgbImage {
    let vp = *basin.viewport();
    let (nx, ny) = (vp.nx(), vp.ny());
    RgbImage::from_fn(nx as u32, ny as u32, |x, y| {
        let idx = (ny - 1 - y as usize) * nx + x as usize;
        let p = vp.center_of_index(idx);
        if a.contains_point(p) {
            Rgb([200, 30, 30])
        } else if basin.get_index(idx) {
            Rgb([90, 90, 90])
        } else {
            Rgb([255, 255, 255])
        }
    })
}

/// Lattice points of the strip, the strip's edges, and the projections onto
/// `y = ρx`.
fn strip_svg(points: &[Point], radius: f64) -> String {
    let rho = golden_rho();
    let scale = 12.0;
    let size = 2.0 * radius * scale;
    let tx = |x: f64| (x + radius) * scale;
    let ty = |y: f64| (radius - y) * scale;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">
<rect width="{size}" height="{size}" fill="#ffffff"/>"##
    );
    for (id, c) in [("lower-edge", 0.0), ("upper-edge", 1.0)] {
        let (x0, x1) = (-radius, radius);
        let _ = writeln!(
            out,
            r##"<line id="{id}" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#3060c0" stroke-width="1"/>"##,
            tx(x0),
            ty(rho * x0 + c),
            tx(x1),
            ty(rho * x1 + c)
        );
    }
    out.push_str("<g id=\"projections\" stroke=\"#c04030\" stroke-width=\"0.6\">\n");
    let k = 1.0 / (1.0 + rho * rho);
    for p in points {
        let s = (p.x + rho * p.y) * k;
        let (qx, qy) = (s, rho * s);
        let _ = writeln!(
            out,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
            tx(p.x),
            ty(p.y),
            tx(qx),
            ty(qy)
        );
    }
    out.push_str("</g>\n<g id=\"orbit\" fill=\"#000000\">\n");
    for p in points {
        let _ = writeln!(out, r#"<circle cx="{:.3}" cy="{:.3}" r="2"/>"#, tx(p.x), ty(p.y));
    }
    out.push_str("</g>\n</svg>\n");
    out
}
