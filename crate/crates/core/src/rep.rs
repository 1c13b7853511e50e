//! Numerology of virtual S^1-representations.
//!
//! A virtual representation is only ever seen through its sequence of
//! complex fixed-point dimensions `d_i = dim_C(alpha^(i))`. Everything the
//! spectral sequences need (the prime operation, the shift `delta_c^n`,
//! the differential lengths `r(n)` and the stable range) is a function of
//! that sequence and the chromatic context.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// p-adic valuation; `None` stands for `nu_p(0) = +infinity`.
pub fn nu_p(p: i64, x: i64) -> Option<u32> {
    if x == 0 {
        return None;
    }
    let mut x = x.abs();
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    Some(v)
}

/// `nu_p(x) >= bound`, with the convention that zero has infinite valuation.
pub fn nu_at_least(p: i64, x: i64, bound: u32) -> bool {
    nu_p(p, x).is_none_or(|v| v >= bound)
}

/// `nu_p(x) == value`; never true for `x == 0`.
pub fn nu_equals(p: i64, x: i64, value: u32) -> bool {
    nu_p(p, x) == Some(value)
}

pub fn is_prime(p: i64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn ipow(p: i64, e: u32) -> i64 {
    p.checked_pow(e).expect("prime power overflows i64")
}

/// The pair `(c, p)` selecting `(A, V)`: `(F_p, S)`, `(Z, V(0))` or
/// `(ell, V(1))`, together with the degrees of the generators that appear
/// in the Tate spectral sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChromaticContext {
    c: u32,
    p: i64,
}

impl ChromaticContext {
    pub fn new(c: u32, p: i64) -> Result<Self> {
        if c > 2 {
            return Err(Error::InvalidChromatic(c));
        }
        if !is_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        if c == 2 && p < 5 {
            return Err(Error::ChromaticPrime(p));
        }
        Ok(ChromaticContext { c, p })
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    /// `p^c`, the factor by which the prime operation rescales `mu_c`.
    pub fn pc(&self) -> i64 {
        ipow(self.p, self.c)
    }

    pub fn t_degree(&self) -> i64 {
        -2
    }

    pub fn mu_degree(&self) -> i64 {
        2 * self.pc()
    }

    /// `|v_c| = 2p^c - 2`; in particular `|v_0| = 0` since `v_0 = p`.
    pub fn v_degree(&self) -> i64 {
        2 * self.pc() - 2
    }

    pub fn lambda_degree(&self, i: u32) -> i64 {
        2 * ipow(self.p, i) - 1
    }

    pub fn u_degree(&self) -> i64 {
        -1
    }

    pub fn beta_degree(&self) -> i64 {
        1
    }

    /// Degree above which `T(A) -> T(A)^{tC_p}` is an isomorphism on
    /// V-homotopy: 0, 0 and 2p - 1.
    pub fn stable_offset(&self) -> i64 {
        match self.c {
            2 => 2 * self.p - 1,
            _ => 0,
        }
    }

    /// At p = 2, V(0) is not a ring spectrum and the c = 1 answers are only
    /// additive.
    pub fn additive_only(&self) -> bool {
        self.c == 1 && self.p == 2
    }
}

impl fmt::Display for ChromaticContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c={}, p={}", self.c, self.p)
    }
}

/// A virtual S^1-representation, encoded by `(d_0, ..., d_m)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VirtualRep {
    dims: Vec<i64>,
}

impl VirtualRep {
    pub fn from_dims(dims: Vec<i64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::EmptyRep);
        }
        Ok(VirtualRep { dims })
    }

    /// The zero representation, with `length` recorded dimensions.
    pub fn trivial(length: usize) -> Self {
        VirtualRep {
            dims: vec![0; length.max(1)],
        }
    }

    /// The actual representation `C(w_1) + ... + C(w_r)`: `d_i` counts the
    /// weights divisible by `p^i`, since `C(n)' = C(n/p)` when `p | n` and
    /// vanishes otherwise. Padded with zeros to `length`.
    pub fn from_weights(weights: &[i64], p: i64, length: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        if length == 0 {
            return Err(Error::EmptyRep);
        }
        if weights.contains(&0) {
            return Err(Error::ZeroWeight);
        }
        let mut dims = vec![0; length];
        for &w in weights {
            let v = nu_p(p, w).unwrap_or(0) as usize;
            for d in dims.iter_mut().take(v + 1) {
                *d += 1;
            }
        }
        Ok(VirtualRep { dims })
    }

    pub fn dims(&self) -> &[i64] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn d(&self, i: usize) -> Result<i64> {
        self.dims.get(i).copied().ok_or(Error::RepTooShort {
            needed: i + 1,
            len: self.dims.len(),
        })
    }

    pub fn require_len(&self, needed: usize) -> Result<()> {
        if self.dims.len() < needed {
            Err(Error::RepTooShort {
                needed,
                len: self.dims.len(),
            })
        } else {
            Ok(())
        }
    }

    /// `alpha' = rho_p^* alpha^{C_p}`: on dimension sequences a left shift.
    pub fn prime(&self) -> Result<Self> {
        if self.dims.len() < 2 {
            return Err(Error::PrimeOfLengthOne);
        }
        Ok(VirtualRep {
            dims: self.dims[1..].to_vec(),
        })
    }

    /// `alpha^(k)`, the k-fold prime.
    pub fn iterated_prime(&self, k: usize) -> Result<Self> {
        if k >= self.dims.len() {
            return Err(Error::RepTooShort {
                needed: k + 1,
                len: self.dims.len(),
            });
        }
        Ok(VirtualRep {
            dims: self.dims[k..].to_vec(),
        })
    }

    pub fn negated(&self) -> Self {
        VirtualRep {
            dims: self.dims.iter().map(|d| -d).collect(),
        }
    }

    /// Whether the dimensions are those of an actual representation:
    /// non-negative and non-increasing.
    pub fn is_actual(&self) -> bool {
        self.dims.iter().all(|&d| d >= 0) && self.dims.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn is_trivial(&self) -> bool {
        self.dims.iter().all(|&d| d == 0)
    }
}

impl fmt::Display for VirtualRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.dims.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// `delta_c^n(alpha) = -d_0 + sum_{k=1}^{n-1} (d_{k-1} - d_k) p^{ck}`.
pub fn delta(ctx: &ChromaticContext, n: u32, rep: &VirtualRep) -> Result<i64> {
    if n == 0 {
        return Err(Error::LevelTooSmall { min: 1, got: 0 });
    }
    rep.require_len(n as usize)?;
    let d = rep.dims();
    let pc = ctx.pc();
    let mut acc = -d[0];
    let mut weight = 1;
    for k in 1..n as usize {
        weight *= pc;
        acc += (d[k - 1] - d[k]) * weight;
    }
    Ok(acc)
}

/// `r(n) = sum_{k=1}^n p^{ck}`; with `over_p`, `r(n)/p` (only for `c = 2`).
pub fn r_of(ctx: &ChromaticContext, n: u32, over_p: bool) -> Result<i64> {
    if over_p && ctx.c() != 2 {
        return Err(Error::OverPRequiresC2);
    }
    let pc = ctx.pc();
    let mut sum = 0;
    let mut term = 1;
    for _ in 0..n {
        term *= pc;
        sum += term;
    }
    Ok(if over_p { sum / ctx.p() } else { sum })
}

/// `r(n)`, infallible form for internal use (`c = 2` only with `over_p`).
pub(crate) fn r(ctx: &ChromaticContext, n: u32) -> i64 {
    r_of(ctx, n, false).expect("r(n) without division is always defined")
}

pub(crate) fn r_over_p(ctx: &ChromaticContext, n: u32) -> i64 {
    r_of(ctx, n, true).expect("r(n)/p requested outside c = 2")
}

/// Lower end of the range in which `TR^{n+1}_{alpha+q}` agrees with the
/// homotopy fixed points: `2 max(-d_1, ..., -d_n) + i_c`. An empty maximum
/// (n = 0) is read as 0.
pub fn stable_bound(ctx: &ChromaticContext, rep: &VirtualRep, n: u32) -> Result<i64> {
    rep.require_len(n as usize + 1)?;
    let worst = rep.dims()[1..=n as usize]
        .iter()
        .map(|d| -d)
        .max()
        .unwrap_or(0);
    Ok(2 * worst + ctx.stable_offset())
}

/// First degree from which `TR^n_{alpha+q}` agrees with the trivial-rep group
/// in degree `q - 2 delta_c^n(alpha)`: both sides must be in their stable
/// ranges, which brings in `d_0` and the shifted trivial bound.
pub fn shift_bound(ctx: &ChromaticContext, rep: &VirtualRep, n: u32) -> Result<i64> {
    if n == 0 {
        return Err(Error::LevelTooSmall { min: 1, got: 0 });
    }
    rep.require_len(n as usize)?;
    let worst = rep.dims()[..n as usize]
        .iter()
        .map(|d| -d)
        .max()
        .unwrap_or(0);
    let shift = 2 * delta(ctx, n, rep)?;
    Ok((2 * worst).max(shift) + ctx.stable_offset())
}

/// The filtration-s column of the E^1 page for `TR^m` is
/// `V_* T[-alpha^((m-1)-s)]_{hC_{p^s}}`, which vanishes below
/// `-2 d_{(m-1)-s}(alpha)`.
pub fn connectivity_bound(rep: &VirtualRep, s: u32, m: u32) -> Result<i64> {
    if m == 0 || s >= m {
        return Err(Error::Mismatch(format!(
            "filtration {s} out of range for level {m}"
        )));
    }
    rep.require_len(m as usize)?;
    Ok(-2 * rep.d((m - 1 - s) as usize)?)
}
