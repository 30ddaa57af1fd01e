//! Exact rational arithmetic for line systems `x -> a x + b`: interval hulls
//! and finite unions of closed intervals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::address::Word;
use crate::error::{Error, Result};
use crate::ifs::Ifs;

pub type Q = BigRational;

/// The simplest rational within a few ulps of `x` (continued-fraction
/// convergents), so `0.6666666666666666` reads back as `2/3` and `0.7526` as
/// `3763/5000`. Falls back to the exact binary value.
pub fn rationalize(x: f64) -> Q {
    if x == 0.0 {
        return Q::zero();
    }
    let tol = x.abs() * 4.0 * f64::EPSILON;
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > 1_000_000_000_000 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Q::new(BigInt::from(h1), BigInt::from(k1));
        }
        let frac = rest - a;
        if frac == 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    Q::from_float(x).expect("finite")
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// A line system with rational coefficients.
#[derive(Clone, Debug)]
pub struct LineIfs {
    maps: Vec<(Q, Q)>,
}

impl LineIfs {
    pub fn new(maps: Vec<(Q, Q)>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidIfs("need at least 2 maps".into()));
        }
        for (a, _) in &maps {
            if a.is_zero() || a.abs() >= Q::one() {
                return Err(Error::InvalidIfs(format!("slope {a} is not a contraction")));
            }
        }
        Ok(LineIfs { maps })
    }

    /// Rationalized copy of a line system.
    pub fn from_ifs(ifs: &Ifs) -> Result<Self> {
        if !ifs.is_one_dimensional() {
            return Err(Error::NotOneDimensional);
        }
        LineIfs::new(
            ifs.maps()
                .iter()
                .map(|f| (rationalize(f.linear[0][0]), rationalize(f.translation[0])))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[(Q, Q)] {
        &self.maps
    }

    /// `f_{w1} ∘ ... ∘ f_{wn}` as `(a, b)`.
    pub fn compose(&self, w: &Word) -> (Q, Q) {
        let mut a = Q::one();
        let mut b = Q::zero();
        for &s in w.symbols() {
            let (fa, fb) = &self.maps[s as usize - 1];
            // (a, b) ∘ (fa, fb) = (a fa, a fb + b)
            b += &a * fb;
            a *= fa;
        }
        (a, b)
    }

    pub fn fixed_point(a: &Q, b: &Q) -> Q {
        b / (Q::one() - a)
    }

    /// The convex hull `[lo, hi]` of the attractor. Each endpoint is the image
    /// of an endpoint under one map, so it is a fixed point of a word of
    /// length at most two or the image of a map's fixed point.
    pub fn hull(&self) -> (Q, Q) {
        let mut candidates = Vec::new();
        let m = self.maps.len() as u8;
        for s in 1..=m {
            let (a, b) = &self.maps[s as usize - 1];
            let p = LineIfs::fixed_point(a, b);
            for (fa, fb) in &self.maps {
                candidates.push(fa * &p + fb);
            }
            candidates.push(p);
            for t in 1..=m {
                let (a2, b2) = self.compose(&Word::from(vec![s, t]));
                candidates.push(LineIfs::fixed_point(&a2, &b2));
            }
        }
        let lo = candidates.iter().min().expect("nonempty").clone();
        let hi = candidates.iter().max().expect("nonempty").clone();
        (lo, hi)
    }
}

/// Image of `[lo, hi]` under `x -> a x + b`.
pub fn map_interval(a: &Q, b: &Q, iv: &(Q, Q)) -> (Q, Q) {
    let p = a * &iv.0 + b;
    let q = a * &iv.1 + b;
    if p <= q {
        (p, q)
    } else {
        (q, p)
    }
}

/// A finite union of closed intervals, kept sorted, disjoint and with
/// touching pieces merged. Degenerate (single point) pieces are kept.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntervalSet {
    pieces: Vec<(Q, Q)>,
}

impl IntervalSet {
    pub fn new() -> Self {
        IntervalSet { pieces: Vec::new() }
    }

    pub fn from_interval(lo: Q, hi: Q) -> Self {
        let mut s = IntervalSet::new();
        s.insert(lo, hi);
        s
    }

    pub fn pieces(&self) -> &[(Q, Q)] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn measure(&self) -> Q {
        self.pieces
            .iter()
            .fold(Q::zero(), |acc, (a, b)| acc + (b - a))
    }

    /// Union with `[lo, hi]`.
    pub fn insert(&mut self, lo: Q, hi: Q) {
        debug_assert!(lo <= hi);
        // first piece whose right end reaches lo
        let start = self.pieces.partition_point(|(_, b)| b < &lo);
        let mut end = start;
        let mut new_lo = lo;
        let mut new_hi = hi;
        while end < self.pieces.len() && self.pieces[end].0 <= new_hi {
            if self.pieces[end].0 < new_lo {
                new_lo = self.pieces[end].0.clone();
            }
            if self.pieces[end].1 > new_hi {
                new_hi = self.pieces[end].1.clone();
            }
            end += 1;
        }
        self.pieces.splice(start..end, [(new_lo, new_hi)]);
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = self.clone();
        for (a, b) in &other.pieces {
            out.insert(a.clone(), b.clone());
        }
        out
    }

    /// Closure of `[lo, hi] \ self`: the parts of positive length together
    /// with isolated points of `[lo, hi]` not covered.
    pub fn subtract_from(&self, lo: &Q, hi: &Q) -> IntervalSet {
        let mut out = IntervalSet::new();
        if lo == hi {
            if !self.pieces.iter().any(|(a, b)| a <= lo && lo <= b) {
                out.pieces.push((lo.clone(), hi.clone()));
            }
            return out;
        }
        let mut cursor = lo.clone();
        let start = self.pieces.partition_point(|(_, b)| b < lo);
        for (a, b) in &self.pieces[start..] {
            if a >= hi {
                break;
            }
            if a > &cursor {
                out.pieces.push((cursor.clone(), a.clone()));
            }
            if b > &cursor {
                cursor = b.clone();
            }
            if &cursor >= hi {
                return out;
            }
        }
        out.pieces.push((cursor, hi.clone()));
        out
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = IntervalSet::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let (a0, a1) = &self.pieces[i];
            let (b0, b1) = &other.pieces[j];
            let lo = if a0 > b0 { a0 } else { b0 };
            let hi = if a1 < b1 { a1 } else { b1 };
            if lo <= hi {
                out.pieces.push((lo.clone(), hi.clone()));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        out
    }

    /// Measure of `self \ other`.
    pub fn measure_outside(&self, other: &IntervalSet) -> Q {
        self.measure() - self.intersection(other).measure()
    }

    pub fn map(&self, a: &Q, b: &Q) -> IntervalSet {
        let mut out = IntervalSet::new();
        for iv in &self.pieces {
            let (p, q) = map_interval(a, b, iv);
            out.insert(p, q);
        }
        out
    }

    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        self.pieces.iter().map(|(a, b)| (to_f64(a), to_f64(b))).collect()
    }
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_from_f64(x: f64) -> Q {
    Q::from_f64(x).expect("finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;
    use proptest::prelude::*;

    #[test]
    fn rationalize_examples() {
        assert_eq!(rationalize(2.0 / 3.0), q(2, 3));
        assert_eq!(rationalize(-2.0 / 3.0), q(-2, 3));
        assert_eq!(rationalize(0.7526), q(3763, 5000));
        assert_eq!(rationalize(1.0 / 3.0), q(1, 3));
        assert_eq!(rationalize(0.5), q(1, 2));
        assert_eq!(rationalize(0.0), q(0, 1));
    }

    #[test]
    fn hulls() {
        for ifs in [systems::example3(), systems::example4(), systems::cantor(), systems::dyadic()] {
            let l = LineIfs::from_ifs(&ifs).unwrap();
            assert_eq!(l.hull(), (q(0, 1), q(1, 1)), "{}", ifs.name());
        }
        let l = LineIfs::from_ifs(&systems::half_quarter()).unwrap();
        assert_eq!(l.hull(), (q(0, 1), q(1, 1)));
        assert!(matches!(LineIfs::from_ifs(&systems::leaf()), Err(Error::NotOneDimensional)));
    }

    #[test]
    fn insert_merges() {
        let mut s = IntervalSet::new();
        s.insert(q(0, 1), q(1, 3));
        s.insert(q(2, 3), q(1, 1));
        assert_eq!(s.pieces().len(), 2);
        s.insert(q(1, 3), q(2, 3));
        assert_eq!(s.pieces(), &[(q(0, 1), q(1, 1))]);
    }

    #[test]
    fn subtraction() {
        let mut s = IntervalSet::new();
        s.insert(q(0, 1), q(2, 3));
        let r = s.subtract_from(&q(1, 3), &q(1, 1));
        assert_eq!(r.pieces(), &[(q(2, 3), q(1, 1))]);
        assert_eq!(s.subtract_from(&q(0, 1), &q(1, 2)).measure(), q(0, 1));
        assert!(s.subtract_from(&q(0, 1), &q(1, 2)).is_empty());
        let mut t = IntervalSet::new();
        t.insert(q(1, 4), q(1, 2));
        let r = t.subtract_from(&q(0, 1), &q(1, 1));
        assert_eq!(r.pieces(), &[(q(0, 1), q(1, 4)), (q(1, 2), q(1, 1))]);
    }

    fn arb_set() -> impl Strategy<Value = Vec<(i64, i64)>> {
        proptest::collection::vec((0i64..40, 0i64..8), 0..6)
            .prop_map(|v| v.into_iter().map(|(a, l)| (a, a + l)).collect())
    }

    proptest! {
        #[test]
        fn measures_match_sampling(a in arb_set(), b in arb_set(), lo in 0i64..40, len in 0i64..20) {
            let mut sa = IntervalSet::new();
            for &(x, y) in &a { sa.insert(q(x, 1), q(y, 1)); }
            let mut sb = IntervalSet::new();
            for &(x, y) in &b { sb.insert(q(x, 1), q(y, 1)); }
            let hi = lo + len;
            // integer-endpoint sets: measure = number of covered unit slots
            let slot = |v: &[(i64, i64)], k: i64| v.iter().any(|&(x, y)| x <= k && k + 1 <= y);
            let rest = sa.subtract_from(&q(lo, 1), &q(hi, 1));
            let expect = (lo..hi).filter(|&k| !slot(&a, k)).count() as i64;
            prop_assert_eq!(rest.measure(), q(expect, 1));
            let inter = (0..50).filter(|&k| slot(&a, k) && slot(&b, k)).count() as i64;
            prop_assert_eq!(sa.intersection(&sb).measure(), q(inter, 1));
            let uni = (0..50).filter(|&k| slot(&a, k) || slot(&b, k)).count() as i64;
            prop_assert_eq!(sa.union(&sb).measure(), q(uni, 1));
        }
    }
}
