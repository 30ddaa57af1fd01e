use std::collections::BTreeSet;

use proptest::prelude::*;

use blowups::attractor::{attractor_raster, viewport_for};
use blowups::exact::{to_f64, LineIfs, Q};
use blowups::systems;
use blowups::tops::*;
use blowups::*;

/// Word whose exact cell contains `x`, with the distance from `x` to the
/// nearest cell boundary.
fn exact_word_at(tops: &ExactTops, x: f64) -> Option<(Word, f64)> {
    tops.cells.iter().find_map(|(w, set)| {
        set.pieces().iter().find_map(|(lo, hi)| {
            let (lo, hi) = (to_f64(lo), to_f64(hi));
            (x >= lo && x <= hi).then(|| (w.clone(), (x - lo).min(hi - x)))
        })
    })
}

#[test]
fn line_fields_match_exact_cells() {
    for ifs in [systems::dyadic(), systems::example3(), systems::example4(), systems::two_thirds_triple()] {
        for order in [PriorityOrder::standard(ifs.len()), PriorityOrder::reversed(ifs.len())] {
            let vp = viewport_for(&ifs, 2048).unwrap();
            let base = attractor_raster(&ifs, &vp);
            for n in 1..=4 {
                let field = compute_top_field(&ifs, n, &base, &order).unwrap();
                let exact = top_words_1d_exact(&ifs, n, &order).unwrap();
                let mut compared = 0;
                for idx in 0..vp.len() {
                    let x = vp.center_of_index(idx).x;
                    let Some((w, margin)) = exact_word_at(&exact, x) else {
                        continue;
                    };
                    if margin <= 2.5 * vp.cell() {
                        continue;
                    }
                    compared += 1;
                    assert_eq!(field.word_at(idx), Some(w), "{} {order} n = {n} x = {x}", ifs.name());
                }
                assert!(compared > vp.len() * 9 / 10);
            }
        }
    }
}

#[test]
fn cantor_field_matches_exact_cells_on_the_attractor() {
    let ifs = systems::cantor();
    let order = PriorityOrder::standard(2);
    let vp = viewport_for(&ifs, 2187).unwrap();
    let base = attractor_raster(&ifs, &vp);
    for n in 1..=4 {
        let field = compute_top_field(&ifs, n, &base, &order).unwrap();
        let exact = top_words_1d_exact(&ifs, n, &order).unwrap();
        for idx in base.indices() {
            let x = vp.center_of_index(idx).x;
            if let Some((w, margin)) = exact_word_at(&exact, x) {
                if margin > 2.5 * vp.cell() {
                    assert_eq!(field.word_at(idx), Some(w));
                }
            }
        }
    }
}

/// Brute force: the highest word `w` of length `n` with `f_w^{-1}(x)` in
/// `grown`, the attractor raster grown by one target cell.
fn brute_force_label(ifs: &Ifs, grown: &Raster, order: &PriorityOrder, n: usize, x: Point) -> Option<Word> {
    let count = (ifs.len() as u64).pow(n as u32);
    (0..count).rev().map(|c| order.decode(c, n)).find(|w| {
        let back = ifs.compose_word(w, false).unwrap().invert().unwrap();
        grown.contains_point(back.apply(x))
    })
}

#[test]
fn plane_fields_match_brute_force() {
    for ifs in [systems::leaf(), systems::sierpinski()] {
        let order = PriorityOrder::standard(ifs.len());
        let vp = viewport_for(&ifs, 384).unwrap();
        let base = attractor_raster(&ifs, &vp);
        for n in 1..=4 {
            let reach = (1.0 / ifs.max_ratio().powi(n as i32)).ceil() as usize;
            let grown = base.dilate(reach);
            let field = compute_top_field(&ifs, n, &base, &order).unwrap();
            let oracle: Vec<u32> = (0..vp.len())
                .map(|idx| {
                    brute_force_label(&ifs, &grown, &order, n, vp.center_of_index(idx))
                        .map_or(0, |w| field.label_of(&w))
                })
                .collect();
            let (nx, ny) = (vp.nx() as i64, vp.ny() as i64);
            let mut interior = 0;
            for idx in 0..vp.len() {
                // away from boundaries between words the labels must agree
                let (i, j) = ((idx as i64) % nx, (idx as i64) / nx);
                let mut seen = BTreeSet::new();
                for dj in -2..=2 {
                    for di in -2..=2 {
                        let (a, b) = (i + di, j + dj);
                        if a >= 0 && b >= 0 && a < nx && b < ny {
                            seen.insert(oracle[(b * nx + a) as usize]);
                        }
                    }
                }
                seen.remove(&0);
                if seen.len() == 1 && oracle[idx] != 0 && field.labels()[idx] != 0 {
                    interior += 1;
                    assert_eq!(field.labels()[idx], oracle[idx], "{} n = {n} cell ({i}, {j})", ifs.name());
                }
            }
            assert!(interior * 20 > base.count(), "{} n = {n} interior {interior}", ifs.name());
        }
    }
}

#[test]
fn worker_count_does_not_change_fields() {
    let ifs = systems::leaf();
    let vp = viewport_for(&ifs, 128).unwrap();
    let base = attractor_raster(&ifs, &vp);
    let order = PriorityOrder::standard(2);
    for n in [1, 4, 7] {
        let one = compute_top_field_with(&ifs, n, &base, &order, Some(1)).unwrap();
        let many = compute_top_field_with(&ifs, n, &base, &order, Some(8)).unwrap();
        assert_eq!(one.labels(), many.labels());
    }
}

fn truncation_holds(ifs: &Ifs, order: &PriorityOrder, nmax: usize) {
    let sets: Vec<BTreeSet<Word>> = (1..=nmax + 1)
        .map(|n| top_words_1d_exact(ifs, n, order).unwrap().words())
        .collect();
    for n in 1..=nmax {
        let (short, long) = (&sets[n - 1], &sets[n]);
        let heads: BTreeSet<Word> = long.iter().map(|t| t.init()).collect();
        let tails: BTreeSet<Word> = long.iter().map(|t| t.tail()).collect();
        assert_eq!(&heads, short, "{} right truncation n = {n}", ifs.name());
        assert_eq!(&tails, short, "{} left truncation n = {n}", ifs.name());
    }
}

#[test]
fn truncations_of_top_words_are_top_words() {
    for ifs in [systems::example3(), systems::example4(), systems::two_thirds_triple()] {
        truncation_holds(&ifs, &PriorityOrder::standard(ifs.len()), 8);
        truncation_holds(&ifs, &PriorityOrder::reversed(ifs.len()), 6);
    }
}

#[test]
fn overlapping_maps_hide_words() {
    let order = PriorityOrder::standard(2);
    for n in 3..=8 {
        let set = top_words_1d_exact(&systems::example3(), n, &order).unwrap().words();
        assert!(set.len() < 1 << n);
        let set = top_words_1d_exact(&systems::dyadic(), n, &order).unwrap().words();
        assert_eq!(set.len(), 1 << n);
    }
}

#[test]
fn reversibility_of_example_addresses() {
    let order = PriorityOrder::standard(2);
    let sets = |ifs: &Ifs| -> Vec<BTreeSet<Word>> {
        (1..=12)
            .map(|n| top_words_1d_exact(ifs, n, &order).unwrap().words())
            .collect()
    };
    let e3 = sets(&systems::example3());
    for a in ["(1)", "(2)"] {
        let a: InfiniteAddress = a.parse().unwrap();
        assert!(check_reversible(&a, &e3).iter().all(|&b| b), "{a}");
    }
    let e4 = sets(&systems::example4());
    for a in ["(1)", "(12)", "(21)"] {
        let a: InfiniteAddress = a.parse().unwrap();
        assert!(check_reversible(&a, &e4).iter().all(|&b| b), "{a}");
    }
}

fn point_in(line: &LineIfs, w: &Word, x: &Q) -> bool {
    let (a, b) = line.compose(w);
    let (lo, hi) = blowups::exact::map_interval(&a, &b, &line.hull());
    &lo <= x && x <= &hi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The exact cell holding a rational point belongs to the highest word
    /// whose image of the hull contains it.
    #[test]
    fn exact_cells_are_highest_words(num in 1i64..9999, n in 1usize..6, rev in any::<bool>(), which in 0usize..3) {
        let ifs = [systems::example3(), systems::example4(), systems::two_thirds_triple()][which].clone();
        let line = LineIfs::from_ifs(&ifs).unwrap();
        let order = if rev { PriorityOrder::reversed(ifs.len()) } else { PriorityOrder::standard(ifs.len()) };
        let x = blowups::exact::q(num, 10_000);
        let tops = top_words_exact(&line, n, &order).unwrap();
        let total = (ifs.len() as u64).pow(n as u32);
        let best = (0..total).rev().map(|c| order.decode(c, n)).find(|w| point_in(&line, w, &x)).unwrap();
        let holder: Vec<&Word> = tops.cells.iter().chain(tops.isolated.iter())
            .filter(|(_, set)| set.pieces().iter().any(|(lo, hi)| lo <= &x && &x <= hi))
            .map(|(w, _)| w)
            .collect();
        prop_assert!(holder.contains(&&best));
    }

    /// Top words of each depth are distinct cells covering the hull.
    #[test]
    fn exact_cells_partition_the_hull(n in 1usize..8, which in 0usize..3) {
        let ifs = [systems::example3(), systems::example4(), systems::two_thirds_triple()][which].clone();
        let line = LineIfs::from_ifs(&ifs).unwrap();
        let tops = top_words_exact(&line, n, &PriorityOrder::standard(ifs.len())).unwrap();
        let (lo, hi) = line.hull();
        let total = tops.cells.values().fold(Q::default(), |acc, s| acc + s.measure());
        prop_assert_eq!(total, hi - lo);
    }
}
