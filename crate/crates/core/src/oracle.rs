//! Closed forms for `TR^n_{q - lambda}` with `lambda` actual, and a verifier
//! that diffs them, together with structural identities, against a
//! computation.
//!
//! The closed forms below use only dimension sequences; they share no code
//! with the spectral sequence engine.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::algebra::{DegreeWindow, PGroup};
use crate::error::{Error, Result};
use crate::rep::{delta, ipow, shift_bound, ChromaticContext, VirtualRep};
use crate::trss::{compute_tr, TrComputation};

fn check_actual(n: u32, lambda: &VirtualRep) -> Result<()> {
    if n == 0 {
        return Err(Error::LevelTooSmall { min: 1, got: 0 });
    }
    lambda.require_len(n as usize)?;
    if !lambda.is_actual() {
        return Err(Error::Usage(format!(
            "{lambda} is not an actual representation"
        )));
    }
    Ok(())
}

/// The index `s` with `2 d_s <= q < 2 d_{s-1}` (reading `d_{-1}` as
/// infinity), or `None` when `q < 2 d_{n-1}`.
fn range_index(n: u32, lambda: &VirtualRep, q: i64) -> Option<u32> {
    let d = lambda.dims();
    (0..n).find(|&s| q >= 2 * d[s as usize])
}

/// `log_p |TR^n_{q - lambda}(F_p)|`.
pub fn order_corollary(p: i64, n: u32, lambda: &VirtualRep, q: i64) -> Result<u32> {
    let _ = p;
    check_actual(n, lambda)?;
    if q.rem_euclid(2) == 1 {
        return Ok(0);
    }
    Ok(range_index(n, lambda, q).map_or(0, |s| n - s))
}

/// `TR^n_{q - lambda}(F_p)`: cyclic of order `p^{n-s}` in even degrees with
/// `d_s <= q/2 < d_{s-1}`, zero otherwise.
pub fn closed_form_fp(p: i64, n: u32, lambda: &VirtualRep, q: i64) -> Result<PGroup> {
    Ok(PGroup::cyclic(order_corollary(p, n, lambda, q)?))
}

/// Length of `TR^n_{q - lambda}(Z; Z/p)`.
///
/// For `2 d_s <= q < 2 d_{s-1}` the answer is `n - s` when
/// `q == -2 delta_1^{n-s}(lambda^(s))` or one less than that modulo
/// `2 p^{n-s}`, and `n - s - 1` otherwise; below `2 d_{n-1}` it is zero.
pub fn closed_form_z_length(p: i64, n: u32, lambda: &VirtualRep, q: i64) -> Result<u32> {
    check_actual(n, lambda)?;
    let ctx = ChromaticContext::new(1, p)?;
    let s = match range_index(n, lambda, q) {
        Some(s) => s,
        None => return Ok(0),
    };
    let level = n - s;
    let shifted = lambda.iterated_prime(s as usize)?;
    let target = -2 * delta(&ctx, level, &shifted)?;
    let modulus = 2 * ipow(p, level);
    let r = (q - target).rem_euclid(modulus);
    Ok(if r == 0 || r == modulus - 1 {
        level
    } else {
        level - 1
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseDescriptor {
    pub p: i64,
    pub c: u32,
    pub level: u32,
    pub dims: Vec<i64>,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub check: String,
    pub q: Option<i64>,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub case: CaseDescriptor,
    pub entries: Vec<OracleEntry>,
    pub failures: Vec<String>,
}

impl OracleReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, check: &str, q: Option<i64>, expected: String, computed: String) {
        let pass = expected == computed;
        if !pass {
            self.failures.push(match q {
                Some(q) => format!("{check} at q={q}: expected {expected}, computed {computed}"),
                None => format!("{check}: expected {expected}, computed {computed}"),
            });
        }
        self.entries.push(OracleEntry {
            check: check.to_string(),
            q,
            expected,
            computed,
            pass,
        });
    }
}

/// Groups of a computation as comparable strings: p-groups for c = 0,
/// lengths otherwise.
fn degree_values(comp: &TrComputation) -> BTreeMap<i64, String> {
    match &comp.fp_groups {
        Some(g) => g.iter().map(|(q, g)| (*q, g.to_string())).collect(),
        None => comp
            .lengths
            .iter()
            .map(|(q, n)| (*q, n.to_string()))
            .collect(),
    }
}

/// Run every applicable check against `computed`.
pub fn verify(
    ctx: &ChromaticContext,
    level: u32,
    rep: &VirtualRep,
    window: &DegreeWindow,
    computed: &TrComputation,
) -> Result<OracleReport> {
    let mut report = OracleReport {
        case: CaseDescriptor {
            p: ctx.p(),
            c: ctx.c(),
            level,
            dims: rep.dims().to_vec(),
            lo: window.lo,
            hi: window.hi,
        },
        entries: Vec::new(),
        failures: Vec::new(),
    };
    let p = ctx.p();
    let lambda = rep.negated();
    let actual = lambda.is_actual();

    let euler = computed.runs.iter().all(|r| r.euler_holds);
    report.record("euler", None, "true".into(), euler.to_string());

    if actual && ctx.c() <= 1 {
        let survivors: usize = computed
            .runs
            .iter()
            .filter(|r| r.coefficient == crate::algebra::Coefficient::Integral)
            .map(|r| r.tate_survivors)
            .sum();
        report.record("tate_piece_killed", None, "0".into(), survivors.to_string());
    }

    if actual && ctx.c() == 0 {
        let groups = computed
            .fp_groups
            .as_ref()
            .ok_or_else(|| Error::Invariant("c = 0 computation without groups".into()))?;
        for q in window.degrees() {
            let g = groups.get(&q).cloned().unwrap_or_default();
            let want = closed_form_fp(p, level, &lambda, q)?;
            report.record("closed_form_fp", Some(q), want.to_string(), g.to_string());
            let order = order_corollary(p, level, &lambda, q)?;
            report.record("order", Some(q), order.to_string(), g.length().to_string());
            report.record(
                "integral_length",
                Some(q),
                g.length().to_string(),
                computed.lengths.get(&q).copied().unwrap_or(0).to_string(),
            );
        }
    }

    if actual && ctx.c() == 1 {
        for q in window.degrees() {
            let want = closed_form_z_length(p, level, &lambda, q)?;
            let got = computed.lengths.get(&q).copied().unwrap_or(0);
            report.record("closed_form_z", Some(q), want.to_string(), got.to_string());
        }
        let d0 = lambda.dims()[0];
        if level >= 2 && window.lo < 2 * d0 {
            let below = DegreeWindow::new(window.lo, window.hi.min(2 * d0 - 1))?;
            let lower = compute_tr(ctx, level - 1, &rep.prime()?, &below)?;
            for q in below.degrees() {
                report.record(
                    "restriction",
                    Some(q),
                    lower.lengths[&q].to_string(),
                    computed.lengths[&q].to_string(),
                );
            }
        }
    }

    let bound = shift_bound(ctx, rep, level)?;
    if bound <= window.hi {
        let lo = bound.max(window.lo);
        let shift = 2 * delta(ctx, level, rep)?;
        let trivial_window = DegreeWindow::new(lo - shift, window.hi - shift)?;
        let trivial = compute_tr(
            ctx,
            level,
            &VirtualRep::trivial(level as usize),
            &trivial_window,
        )?;
        let here = degree_values(computed);
        let there = degree_values(&trivial);
        for q in lo..=window.hi {
            report.record(
                "stable_shift",
                Some(q),
                there[&(q - shift)].clone(),
                here[&q].clone(),
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Groups;

    fn lam(d: &[i64]) -> VirtualRep {
        VirtualRep::from_dims(d.to_vec()).unwrap()
    }

    #[test]
    fn fp_examples() {
        for n in 1..=3 {
            let zero = VirtualRep::trivial(n as usize);
            for q in 0..20 {
                let want = if q % 2 == 0 {
                    PGroup::cyclic(n)
                } else {
                    PGroup::zero()
                };
                assert_eq!(closed_form_fp(3, n, &zero, q).unwrap(), want);
            }
        }
        let l = VirtualRep::from_weights(&[1, 3], 3, 2).unwrap();
        assert_eq!(l.dims(), &[2, 1]);
        assert_eq!(closed_form_fp(3, 2, &l, 4).unwrap(), PGroup::cyclic(2));
        assert_eq!(closed_form_fp(3, 2, &l, 2).unwrap(), PGroup::cyclic(1));
        assert!(closed_form_fp(3, 2, &l, 0).unwrap().is_zero());
        assert!(closed_form_fp(3, 2, &l, 5).unwrap().is_zero());
        assert!(closed_form_fp(3, 2, &lam(&[-1, 0]), 0).is_err());
    }

    #[test]
    fn z_length_examples() {
        let zero = VirtualRep::trivial(1);
        for q in 0..30 {
            let want = u32::from(q % 6 == 0 || q % 6 == 5);
            assert_eq!(closed_form_z_length(3, 1, &zero, q).unwrap(), want);
        }
        let l = lam(&[2, 1]);
        assert_eq!(closed_form_z_length(3, 2, &l, 1).unwrap(), 0);
        // Low degrees restrict to level one at lambda' = C(1): a bottom
        // class in degree 2 and nothing in degree 3.
        assert_eq!(closed_form_z_length(3, 2, &l, 2).unwrap(), 1);
        assert_eq!(closed_form_z_length(3, 2, &l, 3).unwrap(), 0);
        // Level one is the shifted homotopy of T itself.
        let c1 = lam(&[1]);
        assert_eq!(closed_form_z_length(3, 1, &c1, 2).unwrap(), 1);
        assert_eq!(closed_form_z_length(3, 1, &c1, 7).unwrap(), 1);
        assert_eq!(closed_form_z_length(3, 1, &c1, 3).unwrap(), 0);
    }

    #[test]
    fn order_examples() {
        let l = lam(&[2, 1]);
        assert_eq!(order_corollary(3, 2, &l, 2).unwrap(), 1);
        assert_eq!(order_corollary(3, 2, &l, 3).unwrap(), 0);
        assert_eq!(
            order_corollary(3, 2, &VirtualRep::trivial(2), 8).unwrap(),
            2
        );
    }

    #[test]
    fn fp_is_cyclic_and_matches_order() {
        for d in [[3, 1, 1], [2, 2, 0], [4, 2, 1], [0, 0, 0]] {
            let l = lam(&d);
            for q in -3..12 {
                let g = closed_form_fp(5, 3, &l, q).unwrap();
                assert!(g.is_cyclic());
                assert_eq!(g.length(), order_corollary(5, 3, &l, q).unwrap());
            }
        }
    }

    #[test]
    fn verify_passes_and_detects_corruption() {
        let ctx = ChromaticContext::new(0, 3).unwrap();
        let rep = lam(&[-2, -1, 0]);
        let win = DegreeWindow::new(-2, 20).unwrap();
        let comp = compute_tr(&ctx, 3, &rep, &win).unwrap();
        let report = verify(&ctx, 3, &rep, &win, &comp).unwrap();
        assert!(report.passes(), "{:?}", report.failures);

        // Negative control: drop every differential, as if d_r were zero.
        let mut broken = comp.clone();
        let groups = broken.fp_groups.as_mut().unwrap();
        groups.insert(6, PGroup::new(vec![3, 1]));
        if let Groups::Fp(entries) = &mut broken.document.groups {
            entries.clear();
        }
        let report = verify(&ctx, 3, &rep, &win, &broken).unwrap();
        assert!(!report.passes());

        let ctx1 = ChromaticContext::new(1, 3).unwrap();
        let comp = compute_tr(&ctx1, 2, &lam(&[-2, -1]), &win).unwrap();
        let mut lengths = comp.clone();
        *lengths.lengths.get_mut(&4).unwrap() += 1;
        assert!(!verify(&ctx1, 2, &lam(&[-2, -1]), &win, &lengths)
            .unwrap()
            .passes());
    }
}
