//! The homotopy-orbit-to-TR spectral sequence.
//!
//! Column `s` of the E^1 page for `TR^m` (with `n = m - 1`) is
//! `V_* T[-alpha^(n-s)]_{hC_{p^s}}`. A differential `d_rho` runs from column
//! `s` to `s + rho` and lowers total degree by one. Only homotopy fixed point
//! classes support differentials and only Tate-piece classes are hit.
//!
//! A class `x` in column `s` is followed through its y-chain: each step
//! moves one column right and rewrites the monomial by
//! `(I, E) -> (I + E - d, p^c E + (1 - p^c) d)`, where `d` is `d_0` of the
//! current column's representation. The step preserves degree. The first
//! chain entry that is a nonzero Tate class in the orbit region names the
//! target.
//!
//! The page splits into small spectral sequences keyed by the t-exponent
//! transported to the last column. Differentials stay inside one of them,
//! which the engine checks rather than assumes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use crate::algebra::{
    expand_summand, reconstruct_p_groups, Coefficient, DegreeWindow, LengthTable, Monomial,
    OddLetter, PGroup, Piece,
};
use crate::document::{
    FpEntry, Groups, Meta, ResultDocument, SummandCount, TowerDescriptor, VcEntry,
};
use crate::error::{Error, Result};
use crate::rep::{connectivity_bound, delta, stable_bound, ChromaticContext, VirtualRep};
use crate::tate::{orbit_decomposition, orbit_decomposition_mod_pl, tate_class_nonzero, TateClass};

pub const CAVEAT_ADDITIVE: &str = "additive-only (p=2)";
pub const CAVEAT_HIDDEN: &str = "hidden_extensions_possible";

/// One basis class of the E^1 page.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PageClass {
    pub column: u32,
    pub piece: Piece,
    pub family: u8,
    /// The `j` index of the summand the class came from.
    pub j: u32,
    pub monomial: Monomial,
    pub degree: i64,
}

#[derive(Clone, Debug)]
pub struct SsPage {
    pub ctx: ChromaticContext,
    pub level: u32,
    pub rep: VirtualRep,
    pub coefficient: Coefficient,
    /// The degrees reported.
    pub window: DegreeWindow,
    pub classes: Vec<PageClass>,
    /// `column_reps[s] = rep^(n-s)`.
    column_reps: Vec<VirtualRep>,
}

impl SsPage {
    pub fn last_column(&self) -> u32 {
        self.level - 1
    }

    pub fn column_rep(&self, s: u32) -> &VirtualRep {
        &self.column_reps[s as usize]
    }

    fn column_d0(&self, s: u32) -> i64 {
        self.column_reps[s as usize].dims()[0]
    }

    /// Classes whose fate is fully decided inside the enumerated range:
    /// Tate classes in `[lo - 1, hi]` and fixed point classes in
    /// `[lo, hi + 1]`.
    pub fn is_resolved(&self, i: usize) -> bool {
        let c = &self.classes[i];
        match c.piece {
            Piece::Tate => c.degree >= self.window.lo - 1 && c.degree <= self.window.hi,
            Piece::Hofp => c.degree >= self.window.lo && c.degree <= self.window.hi + 1,
        }
    }
}

/// Assemble the E^1 page for `TR^m_{rep + *}` over `window`.
pub fn e1_page(
    ctx: &ChromaticContext,
    m: u32,
    rep: &VirtualRep,
    window: &DegreeWindow,
    coefficient: Coefficient,
) -> Result<SsPage> {
    if m == 0 {
        return Err(Error::LevelTooSmall { min: 1, got: 0 });
    }
    rep.require_len(m as usize)?;
    let n = m - 1;
    let enumerated = window.widened(1, 1);
    let mut classes = Vec::new();
    let mut column_reps = Vec::with_capacity(m as usize);
    for s in 0..=n {
        let col_rep = rep.iterated_prime((n - s) as usize)?;
        let towers = match coefficient {
            Coefficient::Integral => orbit_decomposition(ctx, s, &col_rep, &enumerated)?,
            Coefficient::ModPl(l) => orbit_decomposition_mod_pl(ctx, s, &col_rep, l, &enumerated)?,
        };
        for ts in &towers {
            for b in expand_summand(ts, ctx) {
                if enumerated.contains(b.degree) {
                    classes.push(PageClass {
                        column: s,
                        piece: ts.piece,
                        family: ts.family,
                        j: ts.indices.j,
                        monomial: b.monomial,
                        degree: b.degree,
                    });
                }
            }
        }
        column_reps.push(col_rep);
    }
    classes.sort_by_key(|c| (c.column, c.degree, c.piece, c.monomial));
    Ok(SsPage {
        ctx: *ctx,
        level: m,
        rep: rep.clone(),
        coefficient,
        window: *window,
        classes,
        column_reps,
    })
}

/// Identifier of a small spectral sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SmallSsId {
    pub family: u8,
    /// First column of the diagram (0 for family 1).
    pub start: i64,
    /// Whether the classes carry an odd exterior letter.
    pub odd: bool,
    /// t-exponent transported to the last column.
    pub index: i64,
}

fn chain_step(ctx: &ChromaticContext, d: i64, (i, e): (i64, i64)) -> (i64, i64) {
    let pc = ctx.pc();
    (i + e - d, pc * e + (1 - pc) * d)
}

/// Assign every class of the page to its small spectral sequence.
pub fn split_small(page: &SsPage) -> Vec<SmallSsId> {
    let n = page.last_column();
    page.classes
        .iter()
        .map(|c| {
            let mut e = c.monomial.t;
            for s in c.column..n {
                e = chain_step(&page.ctx, page.column_d0(s), (0, e)).1;
            }
            let odd = c.monomial.word.odd;
            if page.coefficient != Coefficient::Integral && odd == Some(OddLetter::U) {
                e += 1;
            }
            let start = if c.family == 1 {
                0
            } else {
                i64::from(c.column) + 1 - i64::from(c.j)
            };
            SmallSsId {
                family: c.family,
                start,
                odd: odd.is_some(),
                index: e,
            }
        })
        .collect()
}

/// The chain `y_1, ..., y_rho` of a fixed point class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct YChain {
    pub source: usize,
    /// `None` marks a chain entry with negative v-exponent, i.e. zero.
    pub links: Vec<Option<TateClass>>,
}

impl YChain {
    pub fn v_exponents(&self) -> Vec<Option<i64>> {
        self.links.iter().map(|y| y.map(|c| c.monomial.v)).collect()
    }
}

/// `y_h` for the fixed point class `page.classes[x]`.
pub fn y_class(page: &SsPage, x: usize, h: u32) -> Result<Option<TateClass>> {
    let cls = &page.classes[x];
    if cls.piece != Piece::Hofp {
        return Err(Error::Mismatch(
            "y-chains start at fixed point classes".into(),
        ));
    }
    let target = cls.column + h;
    if h == 0 || target > page.last_column() {
        return Err(Error::Mismatch(format!(
            "hop {h} from column {} leaves the page",
            cls.column
        )));
    }
    let mut ie = (cls.monomial.v, cls.monomial.t);
    for s in cls.column..target {
        ie = chain_step(&page.ctx, page.column_d0(s), ie);
    }
    let (mut i, mut e) = ie;
    let mut word = cls.monomial.word;
    if let Coefficient::ModPl(l) = page.coefficient {
        if word.odd == Some(OddLetter::Beta) && target >= l {
            i -= i64::from(target - l);
            e -= 1;
            word.odd = Some(OddLetter::U);
        }
    }
    if i < 0 {
        return Ok(None);
    }
    Ok(Some(TateClass {
        monomial: Monomial::new(i, e, word),
        level: target,
        coefficient: page.coefficient,
    }))
}

pub fn y_chain(page: &SsPage, x: usize, rho: u32) -> Result<YChain> {
    let links = (1..=rho)
        .map(|h| y_class(page, x, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(YChain { source: x, links })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Differential {
    pub source: usize,
    pub target: usize,
    pub page: u32,
}

/// Outcome of one small spectral sequence, over its resolved classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallSsRun {
    pub id: SmallSsId,
    pub e1: usize,
    pub einf: usize,
    pub differentials: Vec<Differential>,
}

impl SmallSsRun {
    pub fn euler_holds(&self) -> bool {
        self.e1 == self.einf + 2 * self.differentials.len()
    }
}

#[derive(Clone, Debug)]
pub struct EInfinity {
    pub alive: Vec<bool>,
    pub small: Vec<SmallSsRun>,
}

impl EInfinity {
    pub fn differentials(&self) -> impl Iterator<Item = &Differential> {
        self.small.iter().flat_map(|s| s.differentials.iter())
    }

    pub fn euler_holds(&self) -> bool {
        self.small.iter().all(SmallSsRun::euler_holds)
    }
}

/// First page `h >= from` at which `x` could support a differential, with
/// the column and monomial of the target. `None` means a permanent cycle.
fn next_candidate(page: &SsPage, x: usize, from: u32) -> Result<Option<(u32, u32, Monomial)>> {
    let col = page.classes[x].column;
    for h in from..=(page.last_column() - col) {
        let y = match y_class(page, x, h)? {
            Some(y) => y,
            None => return Ok(None),
        };
        let target = col + h;
        if !tate_class_nonzero(&page.ctx, target, page.column_rep(target), &y)? {
            return Ok(None);
        }
        if y.monomial.t_power() < page.column_d0(target) {
            return Ok(Some((h, target, y.monomial)));
        }
    }
    Ok(None)
}

/// Run one small spectral sequence. `members` are page indices; `lookup`
/// locates Tate-piece classes anywhere on the page.
pub fn run_small_ss(
    page: &SsPage,
    id: SmallSsId,
    members: &[usize],
    lookup: &HashMap<(u32, Monomial), usize>,
) -> Result<(SmallSsRun, Vec<usize>)> {
    let mut dead: HashMap<usize, ()> = HashMap::new();
    let mut local: HashMap<(u32, Monomial), usize> = HashMap::new();
    for &i in members {
        let c = &page.classes[i];
        if c.piece == Piece::Tate {
            local.insert((c.column, c.monomial), i);
        }
    }
    let mut queue = BinaryHeap::new();
    for &x in members {
        let c = &page.classes[x];
        if c.piece == Piece::Hofp && page.is_resolved(x) {
            if let Some((h, col, mono)) = next_candidate(page, x, 1)? {
                queue.push(Reverse((h, c.degree, c.column, c.monomial, x, col, mono)));
            }
        }
    }
    let mut differentials = Vec::new();
    while let Some(Reverse((h, _, _, _, x, col, mono))) = queue.pop() {
        let t = match local.get(&(col, mono)) {
            Some(&t) => t,
            None => {
                let c = &page.classes[x];
                return Err(Error::Invariant(match lookup.get(&(col, mono)) {
                    Some(_) => format!(
                        "d_{h} from {} (column {}) crosses small spectral sequences",
                        c.monomial, c.column
                    ),
                    None => format!(
                        "d_{h} from {} (column {}, degree {}) has no target {} in column {col}",
                        c.monomial, c.column, c.degree, mono
                    ),
                }));
            }
        };
        if dead.contains_key(&t) {
            if let Some((h2, col2, mono2)) = next_candidate(page, x, h + 1)? {
                let c = &page.classes[x];
                queue.push(Reverse((
                    h2, c.degree, c.column, c.monomial, x, col2, mono2,
                )));
            }
            continue;
        }
        dead.insert(t, ());
        dead.insert(x, ());
        differentials.push(Differential {
            source: x,
            target: t,
            page: h,
        });
    }
    let resolved: Vec<usize> = members
        .iter()
        .copied()
        .filter(|&i| page.is_resolved(i))
        .collect();
    let e1 = resolved.len();
    let einf = resolved.iter().filter(|i| !dead.contains_key(i)).count();
    let mut killed: Vec<usize> = dead.into_keys().collect();
    killed.sort_unstable();
    differentials.sort_by_key(|d| (d.page, d.source));
    Ok((
        SmallSsRun {
            id,
            e1,
            einf,
            differentials,
        },
        killed,
    ))
}

/// Run every small spectral sequence of the page.
pub fn run_page(page: &SsPage) -> Result<EInfinity> {
    let ids = split_small(page);
    let mut groups: BTreeMap<SmallSsId, Vec<usize>> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        groups.entry(*id).or_default().push(i);
    }
    let lookup: HashMap<(u32, Monomial), usize> = page
        .classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.piece == Piece::Tate)
        .map(|(i, c)| ((c.column, c.monomial), i))
        .collect();
    let runs = groups
        .par_iter()
        .map(|(id, members)| run_small_ss(page, *id, members, &lookup))
        .collect::<Result<Vec<_>>>()?;
    let mut alive = vec![true; page.classes.len()];
    let mut small = Vec::with_capacity(runs.len());
    for (run, killed) in runs {
        for i in killed {
            alive[i] = false;
        }
        small.push(run);
    }
    Ok(EInfinity { alive, small })
}

/// Surviving classes per degree of the reported window.
pub fn einf_lengths(page: &SsPage, einf: &EInfinity) -> BTreeMap<i64, usize> {
    let mut out: BTreeMap<i64, usize> = page.window.degrees().map(|q| (q, 0)).collect();
    for (i, c) in page.classes.iter().enumerate() {
        if einf.alive[i] && page.window.contains(c.degree) {
            *out.get_mut(&c.degree).expect("degree in window") += 1;
        }
    }
    out
}

/// Surviving Tate-piece classes among the resolved ones.
pub fn tate_survivors(page: &SsPage, einf: &EInfinity) -> usize {
    (0..page.classes.len())
        .filter(|&i| einf.alive[i] && page.classes[i].piece == Piece::Tate && page.is_resolved(i))
        .count()
}

/// One maximal `v_c`-string of survivors inside one column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcString {
    pub column: u32,
    pub piece: Piece,
    pub bottom: Monomial,
    pub height: u32,
    pub base_degree: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcModule {
    pub strings: Vec<VcString>,
    pub caveats: Vec<String>,
}

pub fn caveats(ctx: &ChromaticContext) -> Vec<String> {
    let mut out = Vec::new();
    if ctx.additive_only() {
        out.push(CAVEAT_ADDITIVE.to_string());
    }
    if ctx.c() >= 1 {
        out.push(CAVEAT_HIDDEN.to_string());
    }
    out
}

/// Column, piece, t-exponent and word: what multiplication by `v_c` keeps.
type StringKey = (u32, Piece, i64, crate::algebra::ExteriorWord);

/// Regroup the survivors in the reported window into `v_c`-strings. Strings
/// are clipped to the window.
pub fn assemble_vc_module(page: &SsPage, einf: &EInfinity) -> VcModule {
    let mut buckets: BTreeMap<StringKey, Vec<(i64, i64)>> = BTreeMap::new();
    for (i, c) in page.classes.iter().enumerate() {
        if einf.alive[i] && page.window.contains(c.degree) {
            buckets
                .entry((c.column, c.piece, c.monomial.t, c.monomial.word))
                .or_default()
                .push((c.monomial.v, c.degree));
        }
    }
    let mut strings = Vec::new();
    for ((column, piece, t, word), mut vs) in buckets {
        vs.sort_unstable();
        let mut start = 0;
        for k in 1..=vs.len() {
            if k == vs.len() || vs[k].0 != vs[k - 1].0 + 1 {
                strings.push(VcString {
                    column,
                    piece,
                    bottom: Monomial::new(vs[start].0, t, word),
                    height: (k - start) as u32,
                    base_degree: vs[start].1,
                });
                start = k;
            }
        }
    }
    strings.sort_by_key(|s| (s.base_degree, s.column, s.bottom));
    VcModule {
        strings,
        caveats: caveats(&page.ctx),
    }
}

/// Summary of one engine run, kept for verification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub coefficient: Coefficient,
    pub small_count: usize,
    pub differentials: usize,
    pub euler_holds: bool,
    pub tate_survivors: usize,
    pub lengths: BTreeMap<i64, usize>,
}

fn summarize(page: &SsPage, einf: &EInfinity) -> RunSummary {
    RunSummary {
        coefficient: page.coefficient,
        small_count: einf.small.len(),
        differentials: einf.differentials().count(),
        euler_holds: einf.euler_holds(),
        tate_survivors: tate_survivors(page, einf),
        lengths: einf_lengths(page, einf),
    }
}

/// Run the engine once and summarize.
pub fn run_engine(
    ctx: &ChromaticContext,
    m: u32,
    rep: &VirtualRep,
    window: &DegreeWindow,
    coefficient: Coefficient,
) -> Result<(SsPage, EInfinity, RunSummary)> {
    let page = e1_page(ctx, m, rep, window, coefficient)?;
    let einf = run_page(&page)?;
    let summary = summarize(&page, &einf);
    Ok((page, einf, summary))
}

/// Lowest degree in which `TR^m_{rep + *}` can be nonzero.
pub fn global_connectivity(rep: &VirtualRep, m: u32) -> Result<i64> {
    (0..m)
        .map(|s| connectivity_bound(rep, s, m))
        .try_fold(i64::MAX, |acc, b| b.map(|b| acc.min(b)))
}

#[derive(Clone, Debug)]
pub struct FpComputation {
    pub groups: BTreeMap<i64, PGroup>,
    pub mod_lengths: LengthTable,
    /// One run per coefficient exponent, then the integral run.
    pub runs: Vec<RunSummary>,
}

/// `TR^m_{rep + *}(F_p)` over `window`, via mod p^l lengths for
/// `l = 1, ..., m + 1` and reconstruction.
pub fn compute_tr_fp_integral(
    p: i64,
    m: u32,
    rep: &VirtualRep,
    window: &DegreeWindow,
) -> Result<FpComputation> {
    let ctx = ChromaticContext::new(0, p)?;
    rep.require_len(m as usize)?;
    let lo = window.lo.min(global_connectivity(rep, m)?);
    let full = DegreeWindow::new(lo, window.hi)?;
    let max_l = m + 1;
    let mut table = LengthTable::new();
    let mut runs = Vec::new();
    for l in 1..=max_l {
        let (_, _, summary) = run_engine(&ctx, m, rep, &full, Coefficient::ModPl(l))?;
        for (&q, &n) in &summary.lengths {
            table.insert((q, l), n);
        }
        runs.push(summary);
    }
    let (_, _, integral) = run_engine(&ctx, m, rep, window, Coefficient::Integral)?;
    runs.push(integral);
    let all = reconstruct_p_groups(&table, lo, window.hi, max_l)?;
    let groups = all
        .into_iter()
        .filter(|(q, _)| window.contains(*q))
        .collect();
    Ok(FpComputation {
        groups,
        mod_lengths: table,
        runs,
    })
}

/// A finished computation: the document plus the run summaries.
#[derive(Clone, Debug)]
pub struct TrComputation {
    pub document: ResultDocument,
    pub runs: Vec<RunSummary>,
    /// Integral E-infinity lengths (log_p of orders for c = 0).
    pub lengths: BTreeMap<i64, usize>,
    pub fp_groups: Option<BTreeMap<i64, PGroup>>,
}

pub fn compute_tr(
    ctx: &ChromaticContext,
    m: u32,
    rep: &VirtualRep,
    window: &DegreeWindow,
) -> Result<TrComputation> {
    if m == 0 {
        return Err(Error::LevelTooSmall { min: 1, got: 0 });
    }
    rep.require_len(m as usize)?;
    let meta = Meta {
        p: ctx.p(),
        c: ctx.c(),
        level: m,
        dims: rep.dims().to_vec(),
        delta: (1..=m)
            .map(|k| delta(ctx, k, rep))
            .collect::<Result<Vec<_>>>()?,
        stable_bound: stable_bound(ctx, rep, m - 1)?,
        caveats: caveats(ctx),
    };
    if ctx.c() == 0 {
        let fp = compute_tr_fp_integral(ctx.p(), m, rep, window)?;
        let integral = fp.runs.last().expect("integral run").lengths.clone();
        let entries = fp
            .groups
            .iter()
            .map(|(&q, g)| FpEntry {
                q,
                summands: g
                    .summands()
                    .into_iter()
                    .map(|(exp, count)| SummandCount { exp, count })
                    .collect(),
            })
            .collect();
        return Ok(TrComputation {
            document: ResultDocument {
                meta,
                groups: Groups::Fp(entries),
                verification: None,
            },
            runs: fp.runs,
            lengths: integral,
            fp_groups: Some(fp.groups),
        });
    }
    let (page, einf, summary) = run_engine(ctx, m, rep, window, Coefficient::Integral)?;
    let module = assemble_vc_module(&page, &einf);
    let mut by_degree: BTreeMap<i64, Vec<TowerDescriptor>> = BTreeMap::new();
    for s in &module.strings {
        by_degree
            .entry(s.base_degree)
            .or_default()
            .push(TowerDescriptor {
                height: s.height,
                word: s.bottom.word.to_string(),
                base_degree: s.base_degree,
            });
    }
    let entries = summary
        .lengths
        .iter()
        .map(|(&q, &length)| VcEntry {
            q,
            length,
            towers: by_degree.remove(&q).unwrap_or_default(),
        })
        .collect();
    Ok(TrComputation {
        document: ResultDocument {
            meta,
            groups: Groups::Vc(entries),
            verification: None,
        },
        lengths: summary.lengths.clone(),
        runs: vec![summary],
        fp_groups: None,
    })
}
