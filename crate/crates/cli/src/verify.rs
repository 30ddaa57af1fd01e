//! Invariant suites behind `blowups verify`. Each suite returns named checks;
//! a suite passes when all of its checks do.

use std::collections::BTreeSet;
use std::fmt;

use anyhow::{ensure, Result};
use blowups::attractor::{attractor_raster, viewport_for};
use blowups::exact::LineIfs;
use blowups::rifs::{self, in_golden_strip, ReverseIfs, Window};
use blowups::tiling::{
    exact_nesting_mismatches, exact_transition_from, nesting_mismatches, osc_new_cylinder_count,
    partial_tiling, transition_report, Containment, PartialTiling,
};
use blowups::tops::{
    check_reversible, compute_top_field, default_min_cells_for, top_words, top_words_exact, ExactTops,
};
use blowups::{Ifs, InfiniteAddress, Point, PriorityOrder, Raster, Word};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>) -> Self {
        SuiteReport {
            suite: suite.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn extend(&mut self, other: SuiteReport) {
        for mut c in other.checks {
            c.name = format!("{}: {}", other.suite, c.name);
            self.checks.push(c);
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "{mark} {} {}", c.name, c.detail)?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{}: {} checks, {} failed",
            self.suite,
            self.checks.len(),
            failed
        )
    }
}

/// Levels `0..=levels` of the partial tilings of `i`, built from raster top
/// fields at `resolution` with the default word threshold.
pub fn raster_levels(
    ifs: &Ifs,
    order: &PriorityOrder,
    i: &InfiniteAddress,
    resolution: usize,
    levels: usize,
) -> Result<Vec<PartialTiling>> {
    let vp = viewport_for(ifs, resolution)?;
    let base = attractor_raster(ifs, &vp);
    levels_on(ifs, order, i, &base, levels)
}

pub fn levels_on(
    ifs: &Ifs,
    order: &PriorityOrder,
    i: &InfiniteAddress,
    base: &Raster,
    levels: usize,
) -> Result<Vec<PartialTiling>> {
    (0..=levels)
        .map(|k| {
            let field = compute_top_field(ifs, k, base, order)?;
            let words = top_words(&field, default_min_cells_for(ifs, base, k));
            Ok(partial_tiling(ifs, i, k, &field, &words)?)
        })
        .collect()
}

/// Exact top cells of a line system at depths `0..=depth`.
pub fn exact_levels(line: &LineIfs, order: &PriorityOrder, depth: usize) -> Result<Vec<ExactTops>> {
    (0..=depth)
        .map(|n| Ok(top_words_exact(line, n, order)?))
        .collect()
}

/// Depth-`n` top word sets for `n = 1..=depth` from the exact oracle.
pub fn exact_word_sets(line: &LineIfs, order: &PriorityOrder, depth: usize) -> Result<Vec<BTreeSet<Word>>> {
    (1..=depth)
        .map(|n| Ok(top_words_exact(line, n, order)?.words()))
        .collect()
}

/// Tile structure between consecutive levels of `i`: each level-`k` tile
/// has exactly one child, children carry `i_{k+1}` followed by the parent's
/// word, new tiles start with another symbol. Transitions `k = 0..=depth` on
/// rasters, and `k = 0..=exact_depth` exactly for line systems.
pub fn tile_structure(
    ifs: &Ifs,
    order: &PriorityOrder,
    i: &InfiniteAddress,
    resolution: usize,
    depth: usize,
    exact_depth: usize,
    rule: Containment,
) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(format!("tile-structure {} {i}", ifs.name()));
    let tilings = raster_levels(ifs, order, i, resolution, depth + 1)?;
    report.checks.extend(raster_transitions(ifs, &tilings, rule)?);
    if ifs.is_one_dimensional() && exact_depth > 0 {
        let line = LineIfs::from_ifs(ifs)?;
        report.checks.extend(exact_transitions(&line, order, i, exact_depth)?);
    }
    Ok(report)
}

/// One check per consecutive pair of `tilings`.
pub fn raster_transitions(ifs: &Ifs, tilings: &[PartialTiling], rule: Containment) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for pair in tilings.windows(2) {
        let t = transition_report(ifs, &pair[0], &pair[1], rule)?;
        let name = format!("raster {}->{}", t.level, t.level + 1);
        if !t.reversible {
            checks.push(Check::new(name, false, format!("{} is not a top word", pair[1].blowup().reversed())));
            continue;
        }
        let detail = format!(
            "{} tiles, {} new, {} violations {}",
            pair[0].len(),
            t.new_tiles.len(),
            t.violations.len(),
            t.violations.first().map(String::as_str).unwrap_or("")
        );
        checks.push(Check::new(name, t.is_clean(), detail));
    }
    Ok(checks)
}

/// Exact transitions `k -> k + 1` for `k = 0..=depth`.
pub fn exact_transitions(line: &LineIfs, order: &PriorityOrder, i: &InfiniteAddress, depth: usize) -> Result<Vec<Check>> {
    let levels = exact_levels(line, order, depth + 1)?;
    let mut checks = Vec::new();
    for pair in levels.windows(2) {
        let t = exact_transition_from(line, i, &pair[0], &pair[1])?;
        let name = format!("exact {}->{}", t.level, t.level + 1);
        if !t.reversible {
            checks.push(Check::new(name, false, format!("{} is not a top word", i.reverse_prefix(t.level + 1))));
            continue;
        }
        let detail = format!(
            "{} tiles, {} new, {} violations {}",
            pair[0].cells.len(),
            t.new_tiles.len(),
            t.violations.len(),
            t.violations.first().map(String::as_str).unwrap_or("")
        );
        checks.push(Check::new(name, t.is_clean(), detail));
    }
    Ok(checks)
}

/// Every level-`k` tile of `1̄` reappears at level `k + 1` up to a one-cell
/// band, for `k = 0..=depth`; exactly for line systems up to `exact_depth`.
pub fn nesting(
    ifs: &Ifs,
    order: &PriorityOrder,
    resolution: usize,
    depth: usize,
    exact_depth: usize,
) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(format!("nesting {}", ifs.name()));
    let one = InfiniteAddress::constant(1);
    let tilings = raster_levels(ifs, order, &one, resolution, depth + 1)?;
    report.checks.extend(raster_nesting(ifs, &tilings)?);
    if ifs.is_one_dimensional() && exact_depth > 0 {
        let line = LineIfs::from_ifs(ifs)?;
        report.checks.extend(exact_nesting(&line, order, exact_depth)?);
    }
    Ok(report)
}

/// One check per consecutive pair of tilings of `1̄`.
pub fn raster_nesting(ifs: &Ifs, tilings: &[PartialTiling]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for pair in tilings.windows(2) {
        let bad = nesting_mismatches(ifs, &pair[0], &pair[1])?;
        let detail = bad
            .iter()
            .map(|(w, n)| format!("{w}:{n}"))
            .collect::<Vec<_>>()
            .join(" ");
        checks.push(Check::new(
            format!("raster {}->{}", pair[0].level(), pair[1].level()),
            bad.is_empty(),
            format!("{} tiles {detail}", pair[0].len()),
        ));
    }
    Ok(checks)
}

/// Exact nesting `k -> k + 1` for `k = 0..=depth`.
pub fn exact_nesting(line: &LineIfs, order: &PriorityOrder, depth: usize) -> Result<Vec<Check>> {
    let levels = exact_levels(line, order, depth + 1)?;
    Ok(levels
        .windows(2)
        .map(|pair| {
            let bad = exact_nesting_mismatches(&pair[0], &pair[1], line);
            Check::new(
                format!("exact {}->{}", pair[0].depth, pair[1].depth),
                bad.is_empty(),
                format!("{} tiles {bad:?}", pair[0].cells.len()),
            )
        })
        .collect())
}

/// New-cylinder counts `m^n (m - 1)` at levels `n + 1 ≤ depth + 1`.
pub fn osc(ifs: &Ifs, i: &InfiniteAddress, depth: usize) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(format!("osc {} {i}", ifs.name()));
    for n in 0..=depth {
        let c = osc_new_cylinder_count(ifs, i, n)?;
        report.push(
            format!("level {}", n + 1),
            c.holds(),
            format!("{} new, expected {}", c.new_with_other_first, c.expected),
        );
    }
    Ok(report)
}

/// Blowups of `1̄` against `A ⊕ D_n` for `n = 0..=depth`.
pub fn decomposition(ifs: &Ifs, resolution: usize, depth: usize, cells: f64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(format!("decomposition {}", ifs.name()));
    let vp = viewport_for(ifs, resolution)?;
    let base = attractor_raster(ifs, &vp);
    for n in 0..=depth {
        let dec = rifs::blowup_decomposition(ifs, n)?;
        let gap = rifs::decomposition_gap(ifs, &dec, &base)?;
        report.push(
            format!("n = {n}"),
            gap <= cells,
            format!("|D| = {}, hausdorff {gap:.3} cells", dec.d.len()),
        );
    }
    Ok(report)
}

/// Forward orbit of {0, 1} under {2x, 2x - 1} against the integers of the
/// window.
pub fn integers(radius: i64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("integers");
    let t = ReverseIfs::example1();
    let window = Window::interval(-radius as f64, radius as f64);
    let seeds = [Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
    let orbit = rifs::forward_orbit(&t, &seeds, &window, usize::MAX)?;
    let got: BTreeSet<i64> = orbit.keys().iter().map(|k| k[0]).collect();
    let want: BTreeSet<i64> = (-radius..=radius).collect();
    report.push(
        "orbit",
        got == want,
        format!("{} points, {} missing", got.len(), want.difference(&got).count()),
    );
    let inv = rifs::verify_invariance_window(&t, &orbit, 2.0 * radius as f64 / 4.0);
    report.push("invariance", inv.holds(), format!("{} checked", inv.checked));
    Ok(report)
}

/// Orbit of {(0,0), (0,1)} under the golden maps: strip membership, equality
/// with the strip's lattice points, invariance, and projected gaps.
pub fn fibonacci(radius: f64, gap_tol: f64, count_tol: f64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("fibonacci");
    let t = ReverseIfs::example2();
    let window = Window::square(radius);
    let seeds = [Point::new(0.0, 0.0), Point::new(0.0, 1.0)];
    let orbit = rifs::forward_orbit(&t, &seeds, &window, usize::MAX)?;
    let keys = orbit.keys();
    let outside = keys.iter().filter(|k| !in_golden_strip(k[0], k[1])).count();
    report.push("strip", outside == 0, format!("{} points, {outside} outside", keys.len()));
    let r = radius.floor() as i64;
    let strip: BTreeSet<[i64; 2]> = (-r..=r)
        .flat_map(|x| (-r..=r).map(move |y| [x, y]))
        .filter(|&[x, y]| in_golden_strip(x, y))
        .collect();
    report.push(
        "orbit is the strip",
        keys == strip,
        format!("{} strip points", strip.len()),
    );
    let inv = rifs::verify_invariance_window(&t, &orbit, radius / 2.0);
    report.push("invariance", inv.holds(), format!("{} checked", inv.checked));

    let gaps = rifs::fib_projection(&orbit)?;
    let rho = rifs::golden_rho();
    let lengths: Vec<String> = gaps.lengths.iter().map(|(l, n)| format!("{l:.12}x{n}")).collect();
    report.push(
        "two gap lengths",
        gaps.lengths.len() == 2,
        lengths.join(" "),
    );
    let (short, long) = gaps.main_lengths();
    let want = (1.0 + rho) / rho;
    report.push(
        "length ratio",
        ((long / short) - want).abs() <= gap_tol * want,
        format!("{:.12} vs {want:.12}", long / short),
    );
    let counts = gaps.count_ratio();
    report.push(
        "count ratio",
        (counts - 1.0 / rho).abs() <= count_tol / rho,
        format!("{counts:.6} vs {:.6}", 1.0 / rho),
    );
    Ok(report)
}

/// Raster top words at `cells` line resolution with the default threshold
/// against the exact oracle, and both truncations of the oracle's words.
pub fn tops_consistency(ifs: &Ifs, order: &PriorityOrder, cells: usize, depth: usize) -> Result<SuiteReport> {
    ensure!(ifs.is_one_dimensional(), "tops consistency needs a line system");
    let mut report = SuiteReport::new(format!("tops {} {order}", ifs.name()));
    let line = LineIfs::from_ifs(ifs)?;
    let vp = viewport_for(ifs, cells)?;
    let base = attractor_raster(ifs, &vp);
    let exact = exact_word_sets(&line, order, depth + 1)?;
    for n in 1..=depth {
        let field = compute_top_field(ifs, n, &base, order)?;
        let raster = top_words(&field, default_min_cells_for(ifs, &base, n)).words();
        let want = &exact[n - 1];
        let missing: Vec<String> = want.difference(&raster).map(Word::to_string).collect();
        let extra: Vec<String> = raster.difference(want).map(Word::to_string).collect();
        report.push(
            format!("raster n = {n}"),
            missing.is_empty() && extra.is_empty(),
            format!("{} words, missing {missing:?}, extra {extra:?}", want.len()),
        );
    }
    for n in 1..=depth {
        let (short, long) = (&exact[n - 1], &exact[n]);
        let heads: BTreeSet<Word> = long.iter().map(Word::init).collect();
        let tails: BTreeSet<Word> = long.iter().map(Word::tail).collect();
        report.push(format!("right truncation {}", n + 1), &heads == short, "");
        report.push(format!("left truncation {}", n + 1), &tails == short, "");
    }
    Ok(report)
}

/// Reversibility of each address to `depth` on the exact oracle.
pub fn reversibility(ifs: &Ifs, order: &PriorityOrder, addresses: &[InfiniteAddress], depth: usize) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(format!("reversibility {}", ifs.name()));
    let line = LineIfs::from_ifs(ifs)?;
    let sets = exact_word_sets(&line, order, depth)?;
    for a in addresses {
        let flags = check_reversible(a, &sets);
        let first_bad = flags.iter().position(|&b| !b).map(|n| n + 1);
        report.push(
            a.to_string(),
            first_bad.is_none(),
            match first_bad {
                Some(n) => format!("{} missing at depth {n}", a.reverse_prefix(n)),
                None => format!("to depth {depth}"),
            },
        );
    }
    Ok(report)
}
