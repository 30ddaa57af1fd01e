//! Finite words, eventually periodic infinite addresses and the priority
//! order used to pick "top" addresses.
//!
//! Symbols are 1-based: an alphabet of size `m` uses the symbols `1..=m`.
//!
//! Text syntax:
//!
//! * `121` is a finite word. Alphabets larger than 9 use comma separated
//!   symbols, e.g. `1,10,3`.
//! * `12(21)` is the infinite address with preperiod `12` and period `21`;
//!   `(1)` is the constant address 111...
//! * `112.212` is a tile address (blowup word, then top word).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Symbol = u8;

/// A finite string of symbols. The empty word is allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    /// Builds a word after checking every symbol lies in `1..=alphabet`.
    pub fn new(symbols: Vec<Symbol>, alphabet: usize) -> Result<Self> {
        for &s in &symbols {
            if s == 0 || s as usize > alphabet {
                return Err(Error::BadSymbol {
                    symbol: s as u32,
                    alphabet,
                });
            }
        }
        Ok(Word(symbols))
    }

    /// Builds a word without validating symbols against an alphabet.
    /// Symbol 0 is still rejected by every consumer.
    pub fn from_symbols(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn repeat(symbol: Symbol, n: usize) -> Self {
        Word(vec![symbol; n])
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<Symbol> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Symbol> {
        self.0.last().copied()
    }

    pub fn max_symbol(&self) -> Symbol {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Checks that every symbol lies in `1..=alphabet`.
    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s == 0 || s as usize > alphabet) {
            Some(&s) => Err(Error::BadSymbol {
                symbol: s as u32,
                alphabet,
            }),
            None => Ok(()),
        }
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    /// Drops the first symbol (left truncation).
    pub fn tail(&self) -> Word {
        Word(self.0.iter().skip(1).copied().collect())
    }

    /// Drops the last symbol (right truncation).
    pub fn init(&self) -> Word {
        let n = self.0.len().saturating_sub(1);
        Word(self.0[..n].to_vec())
    }

    pub fn prepend(&self, s: Symbol) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(s);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn append(&self, s: Symbol) -> Word {
        let mut v = self.0.clone();
        v.push(s);
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// True if `needle` occurs as a contiguous factor.
    pub fn contains_factor(&self, needle: &[Symbol]) -> bool {
        needle.is_empty() || self.0.windows(needle.len()).any(|w| w == needle)
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl From<&[Symbol]> for Word {
    fn from(v: &[Symbol]) -> Self {
        Word(v.to_vec())
    }
}

fn write_symbols(f: &mut fmt::Formatter<'_>, symbols: &[Symbol]) -> fmt::Result {
    if symbols.iter().all(|&s| s < 10) {
        for s in symbols {
            write!(f, "{s}")?;
        }
    } else {
        for (i, s) in symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
    }
    Ok(())
}

fn parse_symbols(s: &str) -> Result<Vec<Symbol>> {
    let s = s.trim();
    if s.is_empty() || s == "∅" {
        return Ok(Vec::new());
    }
    let parse_one = |t: &str| -> Result<Symbol> {
        let v: u32 = t
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad symbol {t:?}")))?;
        if v == 0 || v > Symbol::MAX as u32 {
            return Err(Error::BadSymbol {
                symbol: v,
                alphabet: Symbol::MAX as usize,
            });
        }
        Ok(v as Symbol)
    };
    if s.contains(',') {
        s.split(',').map(parse_one).collect()
    } else {
        s.chars()
            .map(|c| {
                let d = c
                    .to_digit(10)
                    .ok_or_else(|| Error::Parse(format!("bad symbol {c:?} in {s:?}")))?;
                parse_one(&d.to_string())
            })
            .collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        write_symbols(f, &self.0)
    }
}

impl FromStr for Word {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(Word(parse_symbols(s)?))
    }
}

/// Permutation of the alphabet listing symbols from highest to lowest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PriorityOrder {
    ranking: Vec<Symbol>,
    /// `rank[s]` is the position of symbol `s` in `ranking` (0 = highest).
    rank: Vec<usize>,
}

impl PriorityOrder {
    pub fn new(ranking: Vec<Symbol>) -> Result<Self> {
        let m = ranking.len();
        if m == 0 {
            return Err(Error::InvalidArgument("empty priority order".into()));
        }
        let mut rank = vec![usize::MAX; m + 1];
        for (pos, &s) in ranking.iter().enumerate() {
            if s == 0 || s as usize > m {
                return Err(Error::BadSymbol {
                    symbol: s as u32,
                    alphabet: m,
                });
            }
            if rank[s as usize] != usize::MAX {
                return Err(Error::InvalidArgument(format!(
                    "symbol {s} repeated in priority order"
                )));
            }
            rank[s as usize] = pos;
        }
        Ok(PriorityOrder { ranking, rank })
    }

    /// `1 > 2 > ... > m`.
    pub fn standard(m: usize) -> Self {
        PriorityOrder::new((1..=m as Symbol).collect()).expect("identity permutation")
    }

    /// `m > m-1 > ... > 1`.
    pub fn reversed(m: usize) -> Self {
        PriorityOrder::new((1..=m as Symbol).rev().collect()).expect("permutation")
    }

    pub fn alphabet(&self) -> usize {
        self.ranking.len()
    }

    /// Symbols from highest to lowest.
    pub fn ranking(&self) -> &[Symbol] {
        &self.ranking
    }

    /// 0 for the highest symbol.
    pub fn rank(&self, s: Symbol) -> usize {
        self.rank[s as usize]
    }

    /// Digit value of a symbol, `m - 1` for the highest and 0 for the lowest,
    /// so that numeric order of digit strings is the priority order.
    pub fn digit(&self, s: Symbol) -> u32 {
        (self.ranking.len() - 1 - self.rank[s as usize]) as u32
    }

    pub fn symbol_for_digit(&self, d: u32) -> Symbol {
        self.ranking[self.ranking.len() - 1 - d as usize]
    }

    pub fn highest(&self) -> Symbol {
        self.ranking[0]
    }

    pub fn compare_symbols(&self, a: Symbol, b: Symbol) -> Ordering {
        // lower rank = higher priority
        self.rank(b).cmp(&self.rank(a))
    }

    /// Lexicographic comparison of finite words. A proper prefix is smaller
    /// than its extensions.
    pub fn compare_words(&self, a: &Word, b: &Word) -> Ordering {
        for (&x, &y) in a.symbols().iter().zip(b.symbols()) {
            match self.compare_symbols(x, y) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        a.len().cmp(&b.len())
    }

    pub fn compare_addresses(&self, a: &InfiniteAddress, b: &InfiniteAddress) -> Ordering {
        let horizon = a.preperiod.len().max(b.preperiod.len())
            + 2 * lcm(a.period.len(), b.period.len());
        for k in 0..horizon {
            match self.compare_symbols(a.symbol_at(k), b.symbol_at(k)) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    /// All words of length `n` in increasing priority order.
    pub fn words_increasing(&self, n: usize) -> impl Iterator<Item = Word> + '_ {
        let m = self.alphabet() as u64;
        let total = m.pow(n as u32);
        (0..total).map(move |code| self.decode(code, n))
    }

    /// Position of a length-`n` word in the increasing enumeration.
    pub fn encode(&self, w: &Word) -> u64 {
        let m = self.alphabet() as u64;
        w.symbols()
            .iter()
            .fold(0u64, |acc, &s| acc * m + self.digit(s) as u64)
    }

    pub fn decode(&self, mut code: u64, n: usize) -> Word {
        let m = self.alphabet() as u64;
        let mut v = vec![0; n];
        for slot in v.iter_mut().rev() {
            *slot = self.symbol_for_digit((code % m) as u32);
            code /= m;
        }
        Word(v)
    }
}

impl fmt::Display for PriorityOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.ranking.iter().enumerate() {
            if i > 0 {
                f.write_str(">")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for PriorityOrder {
    type Err = Error;
    /// Accepts `2>1`, `2,1` or `21`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('>', ",");
        PriorityOrder::new(parse_symbols(&s)?)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// An eventually periodic infinite address `preperiod (period)^∞`, kept in
/// canonical form: shortest period, then shortest preperiod.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InfiniteAddress {
    preperiod: Vec<Symbol>,
    period: Vec<Symbol>,
}

impl InfiniteAddress {
    pub fn new(preperiod: Word, period: Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidArgument("period must be nonempty".into()));
        }
        if preperiod.symbols().contains(&0) || period.symbols().contains(&0) {
            return Err(Error::BadSymbol {
                symbol: 0,
                alphabet: Symbol::MAX as usize,
            });
        }
        let mut a = InfiniteAddress {
            preperiod: preperiod.0,
            period: period.0,
        };
        a.canonicalize();
        Ok(a)
    }

    /// The constant address `s s s ...`.
    pub fn constant(s: Symbol) -> Self {
        InfiniteAddress {
            preperiod: Vec::new(),
            period: vec![s],
        }
    }

    pub fn periodic(period: Word) -> Result<Self> {
        InfiniteAddress::new(Word::empty(), period)
    }

    fn canonicalize(&mut self) {
        let p = self.period.len();
        for d in 1..=p {
            if p % d == 0 && (d..p).all(|i| self.period[i] == self.period[i - d]) {
                self.period.truncate(d);
                break;
            }
        }
        while let Some(&last) = self.preperiod.last() {
            if last != *self.period.last().unwrap() {
                break;
            }
            self.preperiod.pop();
            self.period.rotate_right(1);
        }
    }

    pub fn preperiod(&self) -> Word {
        Word(self.preperiod.clone())
    }

    pub fn period(&self) -> Word {
        Word(self.period.clone())
    }

    pub fn is_periodic(&self) -> bool {
        self.preperiod.is_empty()
    }

    /// Symbol at 0-based position `k`.
    pub fn symbol_at(&self, k: usize) -> Symbol {
        if k < self.preperiod.len() {
            self.preperiod[k]
        } else {
            self.period[(k - self.preperiod.len()) % self.period.len()]
        }
    }

    pub fn max_symbol(&self) -> Symbol {
        self.preperiod
            .iter()
            .chain(&self.period)
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        self.preperiod().check_alphabet(alphabet)?;
        self.period().check_alphabet(alphabet)
    }

    /// First `n` symbols.
    pub fn prefix(&self, n: usize) -> Word {
        Word((0..n).map(|k| self.symbol_at(k)).collect())
    }

    /// The left shift: drops the first symbol.
    pub fn shift(&self) -> InfiniteAddress {
        let mut a = if self.preperiod.is_empty() {
            let mut period = self.period.clone();
            period.rotate_left(1);
            InfiniteAddress {
                preperiod: Vec::new(),
                period,
            }
        } else {
            InfiniteAddress {
                preperiod: self.preperiod[1..].to_vec(),
                period: self.period.clone(),
            }
        };
        a.canonicalize();
        a
    }

    pub fn prepend(&self, s: Symbol) -> InfiniteAddress {
        let mut preperiod = Vec::with_capacity(self.preperiod.len() + 1);
        preperiod.push(s);
        preperiod.extend_from_slice(&self.preperiod);
        let mut a = InfiniteAddress {
            preperiod,
            period: self.period.clone(),
        };
        a.canonicalize();
        a
    }

    /// `i_n i_{n-1} ... i_1` for this address `i`.
    pub fn reverse_prefix(&self, n: usize) -> Word {
        self.prefix(n).reversed()
    }

    /// Every word of length at most `k` over `1..=alphabet` occurs as a
    /// factor within the first `horizon` symbols.
    ///
    /// Any factor of an eventually periodic sequence already occurs within
    /// the first `preperiod + period + k - 1` symbols, so the scan stops
    /// there; when `horizon` is shorter than that the answer is only a
    /// semi-decision (a `false` may become `true` with a longer horizon).
    pub fn is_disjunctive_up_to(&self, alphabet: usize, k: usize, horizon: usize) -> bool {
        let exact = self.preperiod.len() + self.period.len() + k.saturating_sub(1);
        let scan = self.prefix(horizon.min(exact));
        (1..=k).all(|len| {
            let total = (alphabet as u64).pow(len as u32);
            let order = PriorityOrder::standard(alphabet);
            (0..total).all(|code| scan.contains_factor(order.decode(code, len).symbols()))
        })
    }
}

impl fmt::Display for InfiniteAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbols(f, &self.preperiod)?;
        f.write_str("(")?;
        write_symbols(f, &self.period)?;
        f.write_str(")")
    }
}

impl FromStr for InfiniteAddress {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::Parse(format!("address {s:?} needs a (period)")))?;
        if !s.ends_with(')') {
            return Err(Error::Parse(format!("address {s:?} must end with ')'")));
        }
        let pre = parse_symbols(&s[..open])?;
        let per = parse_symbols(&s[open + 1..s.len() - 1])?;
        InfiniteAddress::new(Word(pre), Word(per))
    }
}

/// Ordering of two words or two infinite addresses under a priority order.
pub trait LexCompare {
    fn lex_compare(&self, other: &Self, order: &PriorityOrder) -> Ordering;
}

impl LexCompare for Word {
    fn lex_compare(&self, other: &Self, order: &PriorityOrder) -> Ordering {
        order.compare_words(self, other)
    }
}

impl LexCompare for InfiniteAddress {
    fn lex_compare(&self, other: &Self, order: &PriorityOrder) -> Ordering {
        order.compare_addresses(self, other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn a(s: &str) -> InfiniteAddress {
        s.parse().unwrap()
    }

    #[test]
    fn equal_words_compare_equal() {
        let order = PriorityOrder::standard(2);
        assert_eq!(w("12").lex_compare(&w("12"), &order), Ordering::Equal);
    }

    #[test]
    fn order_decides_constant_addresses() {
        let one_high = PriorityOrder::standard(2);
        let two_high = PriorityOrder::reversed(2);
        assert_eq!(
            a("(1)").lex_compare(&a("2(1)"), &one_high),
            Ordering::Greater
        );
        assert_eq!(a("(1)").lex_compare(&a("2(1)"), &two_high), Ordering::Less);
    }

    #[test]
    fn shift_examples() {
        assert_eq!(a("(1)").shift(), a("(1)"));
        assert_eq!(a("2(13)").shift(), a("(13)"));
        assert_eq!(a("(12)").shift(), a("(21)"));
    }

    #[test]
    fn canonical_form() {
        assert_eq!(a("1(1)"), a("(1)"));
        assert_eq!(a("(1212)"), a("(12)"));
        assert_eq!(a("12(12)").to_string(), "(12)");
        assert_eq!(a("2(1)").to_string(), "2(1)");
        assert_eq!(a("1(21)").to_string(), "(12)");
    }

    #[test]
    fn reverse_prefix_examples() {
        assert_eq!(a("(1)").reverse_prefix(4), w("1111"));
        assert_eq!(a("(12)").reverse_prefix(3), w("121"));
        assert_eq!(a("2(1)").reverse_prefix(2), w("12"));
    }

    #[test]
    fn disjunctive_examples() {
        assert!(!a("(1)").is_disjunctive_up_to(2, 1, 100));
        assert!(!a("(12)").is_disjunctive_up_to(2, 2, 100));
        // all words of length 1 and 2 in length-lexicographic order
        let witness = InfiniteAddress::new(w("1211122122"), w("1")).unwrap();
        assert!(witness.is_disjunctive_up_to(2, 2, 64));
        // horizon too short to see "22"
        assert!(!witness.is_disjunctive_up_to(2, 2, 4));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(w("121").to_string(), "121");
        assert_eq!(Word::empty().to_string(), "∅");
        assert_eq!(w("1,10,3").symbols(), &[1, 10, 3]);
        assert_eq!(w("1,10,3").to_string(), "1,10,3");
        assert!("12(".parse::<InfiniteAddress>().is_err());
        assert!("12()".parse::<InfiniteAddress>().is_err());
        assert!("102".parse::<Word>().is_err());
        assert_eq!("2>1".parse::<PriorityOrder>().unwrap(), PriorityOrder::reversed(2));
        assert!("1,1".parse::<PriorityOrder>().is_err());
    }

    #[test]
    fn word_codes_follow_priority() {
        let order: PriorityOrder = "2>3>1".parse().unwrap();
        let words: Vec<Word> = order.words_increasing(2).collect();
        assert_eq!(words.len(), 9);
        for pair in words.windows(2) {
            assert_eq!(order.compare_words(&pair[0], &pair[1]), Ordering::Less);
        }
        assert_eq!(words[8], w("22"));
        assert_eq!(words[0], w("11"));
        for (i, word) in words.iter().enumerate() {
            assert_eq!(order.encode(word), i as u64);
        }
    }

    #[test]
    fn bad_symbols_rejected() {
        assert!(Word::new(vec![1, 3], 2).is_err());
        assert!(Word::new(vec![0], 2).is_err());
        assert!(Word::new(vec![1, 2], 2).is_ok());
    }

    fn arb_address() -> impl Strategy<Value = InfiniteAddress> {
        (
            proptest::collection::vec(1u8..=3, 0..5),
            proptest::collection::vec(1u8..=3, 1..5),
        )
            .prop_map(|(pre, per)| InfiniteAddress::new(Word(pre), Word(per)).unwrap())
    }

    proptest! {
        #[test]
        fn lex_compare_is_a_total_order(x in arb_address(), y in arb_address(), z in arb_address()) {
            let order = PriorityOrder::standard(3);
            let xy = x.lex_compare(&y, &order);
            prop_assert_eq!(xy, y.lex_compare(&x, &order).reverse());
            prop_assert_eq!(xy == Ordering::Equal, x == y);
            if xy != Ordering::Greater && y.lex_compare(&z, &order) != Ordering::Greater {
                prop_assert_ne!(x.lex_compare(&z, &order), Ordering::Greater);
            }
        }

        #[test]
        fn shift_undoes_prepend(x in arb_address(), s in 1u8..=3) {
            prop_assert_eq!(x.prepend(s).shift(), x.clone());
        }

        #[test]
        fn canonical_form_preserves_symbols(x in arb_address()) {
            let again = InfiniteAddress::new(x.preperiod(), x.period()).unwrap();
            prop_assert_eq!(&again, &x);
            let round: InfiniteAddress = x.to_string().parse().unwrap();
            prop_assert_eq!(round, x);
        }

        #[test]
        fn reversing_twice_is_identity(v in proptest::collection::vec(1u8..=4, 0..12)) {
            let word = Word(v);
            prop_assert_eq!(word.reversed().reversed(), word);
        }
    }
}
