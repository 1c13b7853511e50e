//! Graded bookkeeping: exterior words, monomials, v_c-towers, degreewise
//! lengths and finite abelian p-groups.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::rep::ChromaticContext;

/// The odd exterior letter of a word: `u_n` (degree -1) or `beta_l` (+1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OddLetter {
    U,
    Beta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    Lambda1,
    Lambda2,
    U,
    Beta,
}

impl Letter {
    pub fn degree(self, ctx: &ChromaticContext) -> i64 {
        match self {
            Letter::Lambda1 => ctx.lambda_degree(1),
            Letter::Lambda2 => ctx.lambda_degree(2),
            Letter::U => ctx.u_degree(),
            Letter::Beta => ctx.beta_degree(),
        }
    }
}

/// A monomial in the exterior generators. `u` and `beta` never co-occur,
/// which the representation enforces.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct ExteriorWord {
    pub lambda1: bool,
    pub lambda2: bool,
    pub odd: Option<OddLetter>,
}

impl ExteriorWord {
    pub const EMPTY: ExteriorWord = ExteriorWord {
        lambda1: false,
        lambda2: false,
        odd: None,
    };

    pub fn lambda1() -> Self {
        ExteriorWord {
            lambda1: true,
            ..Self::EMPTY
        }
    }

    pub fn lambda2() -> Self {
        ExteriorWord {
            lambda2: true,
            ..Self::EMPTY
        }
    }

    pub fn has(&self, letter: Letter) -> bool {
        match letter {
            Letter::Lambda1 => self.lambda1,
            Letter::Lambda2 => self.lambda2,
            Letter::U => self.odd == Some(OddLetter::U),
            Letter::Beta => self.odd == Some(OddLetter::Beta),
        }
    }

    /// Product with a letter; `None` when the letter is already present or
    /// would put `u` and `beta` in one word.
    pub fn with(&self, letter: Letter) -> Option<Self> {
        let mut w = *self;
        match letter {
            Letter::Lambda1 if !w.lambda1 => w.lambda1 = true,
            Letter::Lambda2 if !w.lambda2 => w.lambda2 = true,
            Letter::U if w.odd.is_none() => w.odd = Some(OddLetter::U),
            Letter::Beta if w.odd.is_none() => w.odd = Some(OddLetter::Beta),
            _ => return None,
        }
        Some(w)
    }

    pub fn letters(&self) -> Vec<Letter> {
        let mut out = Vec::new();
        if self.lambda1 {
            out.push(Letter::Lambda1);
        }
        if self.lambda2 {
            out.push(Letter::Lambda2);
        }
        match self.odd {
            Some(OddLetter::U) => out.push(Letter::U),
            Some(OddLetter::Beta) => out.push(Letter::Beta),
            None => {}
        }
        out
    }

    pub fn degree(&self, ctx: &ChromaticContext) -> i64 {
        self.letters().iter().map(|l| l.degree(ctx)).sum()
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::EMPTY
    }
}

impl fmt::Display for ExteriorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self
            .letters()
            .iter()
            .map(|l| match l {
                Letter::Lambda1 => "lambda_1",
                Letter::Lambda2 => "lambda_2",
                Letter::U => "u",
                Letter::Beta => "beta",
            })
            .collect();
        if names.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", names.join("*"))
        }
    }
}

/// `v^v t^t * word` in the Tate spectral sequence, where `v = t mu`. Read as
/// `t^(v+t) mu^v`, so `t_power()` is the filtration coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial {
    pub v: i64,
    pub t: i64,
    pub word: ExteriorWord,
}

impl Monomial {
    pub fn new(v: i64, t: i64, word: ExteriorWord) -> Self {
        Monomial { v, t, word }
    }

    pub fn t_power(&self) -> i64 {
        self.v + self.t
    }

    /// Degree of the class in the Tate spectral sequence.
    pub fn degree(&self, ctx: &ChromaticContext) -> i64 {
        self.v * ctx.v_degree() + self.t * ctx.t_degree() + self.word.degree(ctx)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v^{} t^{}", self.v, self.t)?;
        if !self.word.is_empty() {
            write!(f, " {}", self.word)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Piece {
    /// Image of the Tate construction under the boundary map.
    Tate,
    /// Image in the homotopy fixed points.
    Hofp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Coefficient {
    /// The coefficient spectrum V itself (l = infinity).
    Integral,
    /// `V / p^l`, only used for c = 0.
    ModPl(u32),
}

/// Which sum of a decomposition a tower came from, with its indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Indices {
    pub k: i64,
    pub j: u32,
    pub sum: u8,
}

/// `E(alphabet) (x) P_height(v_c){generator}` in filtration `filtration`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerSummand {
    pub generator: Monomial,
    pub height: u32,
    pub alphabet: Vec<Letter>,
    pub piece: Piece,
    pub filtration: u32,
    pub family: u8,
    pub indices: Indices,
    pub coefficient: Coefficient,
}

impl TowerSummand {
    /// Total degree of the bottom class; Tate-piece classes sit one below
    /// their Tate name.
    pub fn gen_degree(&self, ctx: &ChromaticContext) -> i64 {
        self.generator.degree(ctx) - i64::from(self.piece == Piece::Tate)
    }

    /// Smallest and largest degree of any basis class.
    pub fn degree_span(&self, ctx: &ChromaticContext) -> (i64, i64) {
        let base = self.gen_degree(ctx);
        let (mut lo, mut hi) = (0, 0);
        for l in &self.alphabet {
            let d = l.degree(ctx);
            if d < 0 {
                lo += d;
            } else {
                hi += d;
            }
        }
        let top = i64::from(self.height - 1) * ctx.v_degree();
        (base + lo, base + top + hi)
    }
}

/// An inclusive range of total degrees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeWindow {
    pub lo: i64,
    pub hi: i64,
}

impl DegreeWindow {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::EmptyWindow { lo, hi });
        }
        Ok(DegreeWindow { lo, hi })
    }

    pub fn contains(&self, q: i64) -> bool {
        self.lo <= q && q <= self.hi
    }

    pub fn meets(&self, lo: i64, hi: i64) -> bool {
        lo <= self.hi && hi >= self.lo
    }

    pub fn widened(&self, below: i64, above: i64) -> Self {
        DegreeWindow {
            lo: self.lo - below,
            hi: self.hi + above,
        }
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
}

/// One basis element of a tower summand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisClass {
    pub degree: i64,
    pub v_exponent: u32,
    pub word: ExteriorWord,
    pub monomial: Monomial,
}

pub fn expand_summand(ts: &TowerSummand, ctx: &ChromaticContext) -> Vec<BasisClass> {
    let base = ts.gen_degree(ctx) - ts.generator.word.degree(ctx);
    let n = ts.alphabet.len();
    let mut out = Vec::with_capacity(ts.height as usize * (1 << n));
    'subsets: for mask in 0u32..(1 << n) {
        let mut word = ts.generator.word;
        for (i, l) in ts.alphabet.iter().enumerate() {
            if mask & (1 << i) != 0 {
                match word.with(*l) {
                    Some(w) => word = w,
                    None => continue 'subsets,
                }
            }
        }
        for m in 0..ts.height {
            let monomial = Monomial::new(ts.generator.v + i64::from(m), ts.generator.t, word);
            out.push(BasisClass {
                degree: base + word.degree(ctx) + i64::from(m) * ctx.v_degree(),
                v_exponent: m,
                word,
                monomial,
            });
        }
    }
    out
}

/// Number of basis classes in each degree of `[lo, hi]`, zeros included.
pub fn degreewise_lengths(
    summands: &[TowerSummand],
    lo: i64,
    hi: i64,
    ctx: &ChromaticContext,
) -> BTreeMap<i64, usize> {
    let mut out: BTreeMap<i64, usize> = (lo..=hi).map(|q| (q, 0)).collect();
    for ts in summands {
        for b in expand_summand(ts, ctx) {
            if let Some(n) = out.get_mut(&b.degree) {
                *n += 1;
            }
        }
    }
    out
}

/// `(+)_i Z/p^{e_i}`, exponents kept in descending order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PGroup {
    exponents: Vec<u32>,
}

impl PGroup {
    pub fn zero() -> Self {
        PGroup::default()
    }

    pub fn cyclic(e: u32) -> Self {
        Self::new(vec![e])
    }

    pub fn new(mut exponents: Vec<u32>) -> Self {
        exponents.retain(|&e| e > 0);
        exponents.sort_unstable_by(|a, b| b.cmp(a));
        PGroup { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn is_zero(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn is_cyclic(&self) -> bool {
        self.exponents.len() <= 1
    }

    /// `log_p` of the order.
    pub fn length(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// `length(G / p^l)`, which equals `length(G[p^l])`.
    pub fn truncated_length(&self, l: u32) -> u32 {
        self.exponents.iter().map(|&e| e.min(l)).sum()
    }

    /// `(exponent, multiplicity)` pairs, largest exponent first.
    pub fn summands(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = Vec::new();
        for &e in &self.exponents {
            match out.last_mut() {
                Some((x, n)) if *x == e => *n += 1,
                _ => out.push((e, 1)),
            }
        }
        out
    }
}

impl fmt::Display for PGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .summands()
            .iter()
            .map(|&(e, n)| {
                let g = if e == 1 {
                    "Z/p".to_string()
                } else {
                    format!("Z/p^{e}")
                };
                if n == 1 {
                    g
                } else {
                    format!("({g})^{n}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Mod p^l lengths indexed by `(q, l)`; absent entries read as zero.
pub type LengthTable = BTreeMap<(i64, u32), usize>;

/// The universal coefficient forward map:
/// `lengths(q, l) = length(G_q / p^l) + length(G_{q-1}[p^l])`.
pub fn forward_lengths(
    groups: &BTreeMap<i64, PGroup>,
    lo: i64,
    hi: i64,
    max_l: u32,
) -> LengthTable {
    let zero = PGroup::zero();
    let mut out = LengthTable::new();
    for q in lo..=hi {
        let g = groups.get(&q).unwrap_or(&zero);
        let below = groups.get(&(q - 1)).unwrap_or(&zero);
        for l in 1..=max_l {
            let n = g.truncated_length(l) + below.truncated_length(l);
            out.insert((q, l), n as usize);
        }
    }
    out
}

/// Inverts [`forward_lengths`] on `[lo, hi]`, assuming `G_{lo-1} = 0`.
///
/// The table must stabilize: `lengths(q, max_l) == lengths(q, max_l - 1)`,
/// which certifies that no exponent reaches `max_l`.
pub fn reconstruct_p_groups(
    lengths: &LengthTable,
    lo: i64,
    hi: i64,
    max_l: u32,
) -> Result<BTreeMap<i64, PGroup>> {
    if lo > hi {
        return Err(Error::EmptyWindow { lo, hi });
    }
    if max_l < 2 {
        return Err(Error::Usage(
            "reconstruction needs at least two coefficient exponents".into(),
        ));
    }
    let get = |q: i64, l: u32| lengths.get(&(q, l)).copied().unwrap_or(0) as i64;
    let mut out = BTreeMap::new();
    let mut below = PGroup::zero();
    for q in lo..=hi {
        if get(q, max_l) != get(q, max_l - 1) {
            return Err(Error::NotStabilized { q, l: max_l });
        }
        // f(l) = sum_i min(e_i, l) for the unknown G_q.
        let f: Vec<i64> = (0..=max_l)
            .map(|l| {
                if l == 0 {
                    0
                } else {
                    get(q, l) - below.truncated_length(l) as i64
                }
            })
            .collect();
        // at_least[l] = #{i : e_i >= l}; must be non-negative and non-increasing.
        let at_least: Vec<i64> = (1..=max_l as usize).map(|l| f[l] - f[l - 1]).collect();
        let mut exps = Vec::new();
        for l in 1..=max_l as usize {
            let here = at_least[l - 1];
            let next = if l < max_l as usize { at_least[l] } else { 0 };
            if here < 0 || here < next {
                return Err(Error::Inconsistent {
                    q,
                    reason: format!("truncated lengths {:?} are not concave", &f[1..]),
                });
            }
            for _ in 0..(here - next) {
                exps.push(l as u32);
            }
        }
        let g = PGroup::new(exps);
        below = g.clone();
        out.insert(q, g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(c: u32, p: i64) -> ChromaticContext {
        ChromaticContext::new(c, p).unwrap()
    }

    fn tower(gen: Monomial, height: u32, alphabet: Vec<Letter>) -> TowerSummand {
        TowerSummand {
            generator: gen,
            height,
            alphabet,
            piece: Piece::Hofp,
            filtration: 0,
            family: 1,
            indices: Indices { k: 0, j: 0, sum: 1 },
            coefficient: Coefficient::Integral,
        }
    }

    fn trivial_gen() -> Monomial {
        Monomial::new(0, 0, ExteriorWord::EMPTY)
    }

    #[test]
    fn words() {
        let w = ExteriorWord::EMPTY.with(Letter::U).unwrap();
        assert!(w.with(Letter::Beta).is_none());
        assert!(w.with(Letter::U).is_none());
        let k = ctx(2, 5);
        let w = ExteriorWord::lambda1().with(Letter::Lambda2).unwrap();
        assert_eq!(w.degree(&k), 9 + 49);
        assert_eq!(w.to_string(), "lambda_1*lambda_2");
        assert_eq!(ExteriorWord::EMPTY.to_string(), "1");
    }

    #[test]
    fn expand_examples() {
        let k = ctx(1, 3);
        let one = expand_summand(&tower(trivial_gen(), 1, vec![]), &k);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].degree, 0);

        let mut degs: Vec<i64> =
            expand_summand(&tower(trivial_gen(), 2, vec![Letter::Lambda1]), &k)
                .iter()
                .map(|b| b.degree)
                .collect();
        degs.sort();
        assert_eq!(degs, vec![0, 4, 5, 9]);

        let k0 = ctx(0, 5);
        let classes = expand_summand(&tower(trivial_gen(), 4, vec![]), &k0);
        assert_eq!(classes.len(), 4);
        assert!(classes.iter().all(|b| b.degree == 0));
    }

    #[test]
    fn tate_piece_is_shifted() {
        let k = ctx(1, 3);
        let mut ts = tower(Monomial::new(0, -2, ExteriorWord::EMPTY), 1, vec![]);
        ts.piece = Piece::Tate;
        assert_eq!(ts.gen_degree(&k), 3);
    }

    #[test]
    fn length_examples() {
        let k = ctx(0, 3);
        let empty = degreewise_lengths(&[], -2, 2, &k);
        assert!(empty.values().all(|&n| n == 0));

        let at_four = tower(Monomial::new(0, -2, ExteriorWord::EMPTY), 3, vec![]);
        let l = degreewise_lengths(std::slice::from_ref(&at_four), 0, 6, &k);
        for (q, n) in &l {
            assert_eq!(*n, if *q == 4 { 3 } else { 0 });
        }
        let at_zero = tower(trivial_gen(), 2, vec![]);
        let both = degreewise_lengths(&[at_four, at_zero], 0, 6, &k);
        assert_eq!(both[&0], 2);
        assert_eq!(both[&4], 3);
    }

    #[test]
    fn reconstruct_examples() {
        let mut lengths = LengthTable::new();
        for l in 1..=3 {
            lengths.insert((5, l), l.min(2) as usize);
            lengths.insert((6, l), l.min(2) as usize);
        }
        let g = reconstruct_p_groups(&lengths, 3, 8, 3).unwrap();
        assert_eq!(g[&5], PGroup::cyclic(2));
        assert!(g[&6].is_zero());
        assert!(g[&3].is_zero());

        let g = reconstruct_p_groups(&LengthTable::new(), -4, 4, 2).unwrap();
        assert!(g.values().all(|x| x.is_zero()));

        let mut bad = LengthTable::new();
        bad.insert((0, 1), 2);
        bad.insert((0, 2), 1);
        bad.insert((0, 3), 1);
        assert!(matches!(
            reconstruct_p_groups(&bad, 0, 0, 3),
            Err(Error::Inconsistent { .. })
        ));
        let mut moving = LengthTable::new();
        moving.insert((0, 1), 1);
        moving.insert((0, 2), 2);
        assert!(matches!(
            reconstruct_p_groups(&moving, 0, 0, 2),
            Err(Error::NotStabilized { .. })
        ));
    }

    #[test]
    fn pgroup_display() {
        assert_eq!(PGroup::new(vec![2]).to_string(), "Z/p^2");
        assert_eq!(PGroup::new(vec![1, 3, 1]).to_string(), "Z/p^3 + (Z/p)^2");
        assert_eq!(PGroup::zero().to_string(), "0");
        assert_eq!(PGroup::new(vec![1, 3]).exponents(), &[3, 1]);
    }

    fn group_strategy() -> impl Strategy<Value = PGroup> {
        proptest::collection::vec(1u32..=4, 0..=3).prop_map(|mut v| {
            let mut total = 0;
            v.retain(|&e| {
                total += e;
                total <= 4
            });
            PGroup::new(v)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1200))]

        #[test]
        fn reconstruction_round_trip(gs in proptest::collection::vec(group_strategy(), 1..8)) {
            let lo = 0;
            let groups: BTreeMap<i64, PGroup> =
                gs.iter().enumerate().map(|(i, g)| (lo + 1 + i as i64, g.clone())).collect();
            let hi = lo + gs.len() as i64 + 1;
            let table = forward_lengths(&groups, lo, hi, 5);
            let back = reconstruct_p_groups(&table, lo, hi, 5).unwrap();
            for q in lo..=hi {
                let want = groups.get(&q).cloned().unwrap_or_default();
                prop_assert_eq!(&back[&q], &want);
            }
        }

        #[test]
        fn lengths_monotone_in_l(gs in proptest::collection::vec(group_strategy(), 1..6)) {
            let groups: BTreeMap<i64, PGroup> =
                gs.iter().enumerate().map(|(i, g)| (i as i64, g.clone())).collect();
            let hi = gs.len() as i64;
            let table = forward_lengths(&groups, 0, hi, 6);
            for q in 0..=hi {
                let max_e = [q, q - 1]
                    .iter()
                    .filter_map(|x| groups.get(x))
                    .flat_map(|g| g.exponents().first().copied())
                    .max()
                    .unwrap_or(0);
                for l in 1..6 {
                    prop_assert!(table[&(q, l)] <= table[&(q, l + 1)]);
                    if l >= max_e {
                        prop_assert_eq!(table[&(q, l)], table[&(q, l + 1)]);
                    }
                }
            }
        }

        #[test]
        fn lengths_are_additive(h1 in 1u32..5, h2 in 1u32..5, t1 in -3i64..3, t2 in -3i64..3) {
            let k = ctx(1, 3);
            let a = tower(Monomial::new(0, t1, ExteriorWord::EMPTY), h1, vec![Letter::Lambda1]);
            let b = tower(Monomial::new(0, t2, ExteriorWord::EMPTY), h2, vec![Letter::U]);
            let la = degreewise_lengths(std::slice::from_ref(&a), -20, 40, &k);
            let lb = degreewise_lengths(std::slice::from_ref(&b), -20, 40, &k);
            let lab = degreewise_lengths(&[a, b], -20, 40, &k);
            for q in -20..=40 {
                prop_assert_eq!(lab[&q], la[&q] + lb[&q]);
            }
        }
    }
}
