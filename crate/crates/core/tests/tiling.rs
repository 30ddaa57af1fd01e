use blowups::attractor::{attractor_raster, map_raster, viewport_for};
use blowups::exact::LineIfs;
use blowups::raster::hausdorff;
use blowups::systems;
use blowups::tiling::*;
use blowups::tops::*;
use blowups::*;

fn w(s: &str) -> Word {
    s.parse().unwrap()
}

fn addr(s: &str) -> InfiniteAddress {
    s.parse().unwrap()
}

/// Levels `0..=kmax` of the top tiling of `i`, with default word thresholds.
fn tilings(ifs: &Ifs, base: &Raster, i: &InfiniteAddress, kmax: usize) -> Vec<PartialTiling> {
    let order = PriorityOrder::standard(ifs.len());
    (0..=kmax)
        .map(|k| {
            let field = compute_top_field(ifs, k, base, &order).unwrap();
            let words = top_words(&field, default_min_cells_for(ifs, base, k));
            partial_tiling(ifs, i, k, &field, &words).unwrap()
        })
        .collect()
}

#[test]
fn tile_address_round_trip() {
    let a: TileAddress = "12.21".parse().unwrap();
    assert_eq!(a.blowup(), &w("12"));
    assert_eq!(a.top(), &w("21"));
    assert_eq!(a.level(), 2);
    assert_eq!(a.to_string(), "12.21");
    assert_eq!(TileAddress::root().to_string(), ".");
    assert_eq!(".".parse::<TileAddress>().unwrap(), TileAddress::root());
    assert!("12.2".parse::<TileAddress>().is_err());
    assert!("12".parse::<TileAddress>().is_err());
    assert!(TileAddress::new(w("1"), w("12")).is_err());
}

#[test]
fn tile_address_validation() {
    let ifs = systems::example3();
    let vp = viewport_for(&ifs, 1024).unwrap();
    let base = attractor_raster(&ifs, &vp);
    let order = PriorityOrder::standard(2);
    let field = compute_top_field(&ifs, 3, &base, &order).unwrap();
    let set = top_words(&field, 1);
    let exact = top_words_1d_exact(&ifs, 3, &order).unwrap().words();
    let hidden = order.words_increasing(3).find(|t| !exact.contains(t)).unwrap();
    assert!(TileAddress::new(w("111"), w("111")).unwrap().validate(&set).is_ok());
    assert!(TileAddress::new(w("111"), hidden).unwrap().validate(&set).is_err());
    assert!(TileAddress::new(w("11"), w("11")).unwrap().validate(&set).is_err());
}

#[test]
fn dyadic_blowup_is_eight_units_long() {
    let ifs = systems::dyadic();
    let vp = viewport_for(&ifs, 256).unwrap();
    let base = attractor_raster(&ifs, &vp);
    assert_eq!(blowup_region(&ifs, &addr("(1)"), 0, &base).unwrap(), base);

    let a3 = blowup_region(&ifs, &addr("(1)"), 3, &base).unwrap();
    let cell = a3.viewport().cell();
    assert!((cell - vp.cell()).abs() < 1e-12);
    let mut expect = Raster::empty(*a3.viewport());
    for idx in 0..expect.viewport().len() {
        let x = expect.viewport().center_of_index(idx).x;
        expect.set_index(idx, x > 0.0 && x < 8.0);
    }
    assert!(hausdorff(&a3, &expect).unwrap() <= cell * 1.0001);
    assert!((a3.count() as i64 - 8 * 256).abs() <= 2);
}

#[test]
fn blowup_depth_bound() {
    let ifs = systems::dyadic();
    let vp = viewport_for(&ifs, 1 << 20).unwrap();
    let base = Raster::empty(vp);
    let err = blowup_region(&ifs, &addr("(1)"), 10, &base).unwrap_err();
    assert!(matches!(err, Error::DepthTooLarge { depth: 10, .. }));
}

#[test]
fn leaf_blowups_increase() {
    let ifs = systems::leaf();
    let i = addr("(1)");
    let vp = viewport_for(&ifs, 96).unwrap();
    let base = attractor_raster(&ifs, &vp);
    for n in 0..6 {
        let outer = blowup_region(&ifs, &i, n + 1, &base).unwrap();
        let inner = render_blowup(&ifs, &i, n, outer.viewport()).unwrap();
        assert!(inner.count() > 0);
        assert!(inner.is_subset(&outer.dilate(1)).unwrap(), "n = {n}");
    }
}

#[test]
fn blowups_of_different_addresses_are_congruent() {
    let ifs = systems::leaf();
    let vp = viewport_for(&ifs, 128).unwrap();
    let base = attractor_raster(&ifs, &vp);
    let (i, j) = (addr("(1)"), addr("(12)"));
    for n in 1..=3 {
        let ai = blowup_region(&ifs, &i, n, &base).unwrap();
        let aj = blowup_region(&ifs, &j, n, &base).unwrap();
        let fi = ifs.compose_word(&i.prefix(n), true).unwrap();
        let fj = ifs.compose_word(&j.prefix(n), true).unwrap();
        let iso = fj.compose(&fi.invert().unwrap());
        assert!((iso.lipschitz() - 1.0).abs() < 1e-9);
        let moved = map_raster(&ai, &iso, aj.viewport(), 0);
        let d = hausdorff(&moved, &aj).unwrap();
        assert!(d <= 2.0 * aj.viewport().cell(), "n = {n}: {d}");
    }
}

#[test]
fn level_zero_is_the_attractor() {
    let ifs = systems::leaf();
    let vp = viewport_for(&ifs, 128).unwrap();
    let base = attractor_raster(&ifs, &vp);
    let t = &tilings(&ifs, &base, &addr("(1)"), 0)[0];
    assert_eq!(t.len(), 1);
    assert_eq!(t.tiles()[0].address, TileAddress::root());
    assert_eq!(t.union_raster(&vp).unwrap(), base.dilate(1));
}

#[test]
fn cantor_level_two() {
    let ifs = systems::cantor();
    let vp = viewport_for(&ifs, 729).unwrap();
    let base = attractor_raster(&ifs, &vp);
    let ts = tilings(&ifs, &base, &addr("(1)"), 3);
    let t2 = &ts[2];
    assert_eq!(t2.words(), ["11", "12", "21", "22"].map(w).into());
    for (a, b) in t2.tiles().iter().zip(t2.tiles().iter().skip(1)) {
        assert!(a.cells.iter().all(|c| !b.cells.contains(c)));
    }
    let frame = t2.default_viewport().unwrap();
    let union = t2.union_raster(&frame).unwrap();
    let a2 = render_blowup(&ifs, &addr("(1)"), 2, &frame).unwrap();
    let d = hausdorff(&union, &a2).unwrap();
    assert!(d <= 2.0 * frame.cell() * (1.0 + 1e-9), "{d}");
    let span = t2.tiles().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
        let (a, b) = t.bounding_box(&vp);
        (lo.min(a.x), hi.max(b.x))
    });
    assert!(span.0.abs() < 0.05 && (span.1 - 9.0).abs() < 0.05, "{span:?}");

    let rep = classify_transition(&ifs, &ts[2], &ts[3], Containment::default()).unwrap();
    for (parent, kids) in &rep.children {
        assert_eq!(kids, &vec![parent.prepend(1)]);
    }
    assert_eq!(rep.new_tiles, ["211", "212", "221", "222"].map(w).to_vec());
    assert!(rep.reversible);
}

#[test]
fn cantor_nesting() {
    let ifs = systems::cantor();
    let vp = viewport_for(&ifs, 729).unwrap();
    let base = attractor_raster(&ifs, &vp);
    let ts = tilings(&ifs, &base, &addr("(1)"), 5);
    assert_eq!(verify_nesting_onebar(&ifs, &ts).unwrap(), vec![true; 5]);
}

#[test]
fn nesting_refuses_other_addresses() {
    let ifs = systems::example4();
    let vp = viewport_for(&ifs, 512).unwrap();
    let base = attractor_raster(&ifs, &vp);
    let ts = tilings(&ifs, &base, &addr("(12)"), 2);
    assert!(matches!(
        verify_nesting_onebar(&ifs, &ts),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn transition_rejects_mismatched_levels() {
    let ifs = systems::cantor();
    let vp = viewport_for(&ifs, 243).unwrap();
    let base = attractor_raster(&ifs, &vp);
    let ts = tilings(&ifs, &base, &addr("(1)"), 2);
    assert!(transition_report(&ifs, &ts[0], &ts[2], Containment::default()).is_err());
    let other = tilings(&ifs, &base, &addr("(2)"), 2);
    assert!(transition_report(&ifs, &ts[1], &other[2], Containment::default()).is_err());
}

#[test]
fn raster_transitions_match_exact_intervals() {
    for (ifs, i) in [
        (systems::example3(), "(1)"),
        (systems::example3(), "(2)"),
        (systems::example4(), "(1)"),
        (systems::dyadic(), "(12)"),
    ] {
        let i = addr(i);
        let line = LineIfs::from_ifs(&ifs).unwrap();
        let order = PriorityOrder::standard(ifs.len());
        let vp = viewport_for(&ifs, 4096).unwrap();
        let base = attractor_raster(&ifs, &vp);
        let ts = tilings(&ifs, &base, &i, 8);
        for k in 0..8 {
            let raster = transition_report(&ifs, &ts[k], &ts[k + 1], Containment::default()).unwrap();
            let exact = exact_transition(&line, &i, k, &order).unwrap();
            assert_eq!(raster.children, exact.children, "{} {i} k = {k}", ifs.name());
            assert_eq!(raster.new_tiles, exact.new_tiles, "{} {i} k = {k}", ifs.name());
            assert_eq!(raster.is_clean(), exact.is_clean(), "{} {i} k = {k}", ifs.name());
        }
    }
}

#[test]
fn manifest_lists_every_tile() {
    let ifs = systems::cantor();
    let vp = viewport_for(&ifs, 243).unwrap();
    let base = attractor_raster(&ifs, &vp);
    let t = &tilings(&ifs, &base, &addr("(1)"), 2)[2];
    let text = t.manifest();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with('#'));
    let first: Vec<&str> = lines[1].split_whitespace().collect();
    assert_eq!(first[0], "11.11");
    assert_eq!(first.len(), 12);
    assert_eq!(first[1].parse::<f64>().unwrap(), 9.0);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiles.txt");
    t.write_manifest(&path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn eta_sums() {
    assert_eq!(stopping_time_eta(&w("1111"), &[1.0, 1.0]).unwrap(), (3.0, 4.0));
    let (lo, hi) = stopping_time_eta(&w("122"), &[1.0, 1.585]).unwrap();
    assert!((hi - 4.17).abs() < 1e-12 && (lo - 2.585).abs() < 1e-12);
    assert!(stopping_time_eta(&Word::empty(), &[1.0]).is_err());
    assert!(stopping_time_eta(&w("3"), &[1.0, 1.0]).is_err());
}

#[test]
fn cantor_stopping_tiling() {
    let ifs = systems::cantor();
    let t = osc_stopping_tiling(&ifs, &addr("(1)"), 2).unwrap();
    let words: Vec<Word> = t.tiles.iter().map(|t| t.word.clone()).collect();
    assert_eq!(words, ["11", "12", "21", "22"].map(w).to_vec());
    let mut lefts = Vec::new();
    for tile in &t.tiles {
        assert!((tile.word_ratio - 1.0 / 9.0).abs() < 1e-12);
        assert!((tile.scale - 1.0).abs() < 1e-9);
        lefts.push(tile.transform.apply(Point::ORIGIN).x);
    }
    for (x, e) in lefts.iter().zip([0.0, 2.0, 6.0, 8.0]) {
        assert!((x - e).abs() < 1e-9, "{lefts:?}");
    }
}

#[test]
fn uniform_stopping_tiling_is_all_words() {
    let ifs = systems::sierpinski();
    let i = addr("(12)");
    for j in 1..=4 {
        let t = osc_stopping_tiling(&ifs, &i, j).unwrap();
        let words: Vec<Word> = t.tiles.iter().map(|t| t.word.clone()).collect();
        let all: Vec<Word> = PriorityOrder::standard(3).words_increasing(j).collect();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(words, sorted);
    }
}

#[test]
fn two_ratio_stopping_tiling_band() {
    let ifs = systems::half_quarter();
    let r = ifs.max_ratio();
    let amax = ifs.ratio_exponents().iter().cloned().fold(0.0, f64::max);
    for (i, j) in [("(1)", 4), ("(2)", 3), ("(12)", 5)] {
        let t = osc_stopping_tiling(&ifs, &addr(i), j).unwrap();
        assert!(!t.tiles.is_empty());
        let (lo, hi) = t.scale_range();
        assert!(lo >= r.powf(amax) - 1e-12 && hi <= 1.0 + 1e-12, "{i} {j}: {lo} {hi}");
        for tile in &t.tiles {
            let (before, eta) = stopping_time_eta(&tile.word, &ifs.ratio_exponents()).unwrap();
            assert!(before < t.threshold + 1e-9 && t.threshold <= eta + 1e-9);
        }
        let n = t.count_in_ball(t.center, 1.0);
        assert!(n > 0 && n <= t.tiles.len());
    }
}

#[test]
fn osc_counts() {
    for (ifs, i) in [(systems::dyadic(), "(1)"), (systems::dyadic(), "(12)"), (systems::sierpinski(), "(1)"), (systems::sierpinski(), "(132)")] {
        for n in 0..=6 {
            let c = osc_new_cylinder_count(&ifs, &addr(i), n).unwrap();
            assert!(c.holds(), "{} {i} n = {n}: {c:?}", ifs.name());
        }
    }
}
