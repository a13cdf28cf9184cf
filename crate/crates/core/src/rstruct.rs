//! Decomposition of `(q^n - 1, r)` into the prime classes used by the
//! character expansion of the r-primitive indicator, and the explicit
//! sufficient condition `q > s * f_1 ... f_k * d(u) * sqrt(q)`.
//!
//! With `q^n - 1 = prod p^a_p` and `r = prod p^b_p`:
//!
//! * `P_s = { p : a_p = b_p > 0 }`, `s = prod_{P_s} p^b_p`
//! * `P_t = { p : a_p > b_p > 0 }`, `t = prod_{P_t} p^b_p`
//! * `P_u = { p : a_p > b_p = 0 }`, `u = prod_{P_u} p`
//!
//! and for each `p_i` in `P_t`, `e_i = p_i^b` and `f_i = p_i^(b+1)`.

use num_rational::Ratio;
use serde::ser::{SerializeTuple, Serializer};
use serde::Serialize;
use thiserror::Error;

use crate::arith::{self, ArithError};

/// Exact rational used for the expansion coefficients.
pub type Rational = Ratio<i128>;

/// Largest `q_max` accepted by [`min_q_satisfying_bound`].
pub const BOUND_TABLE_Q_MAX: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("extension degree must be at least 2, got {0}")]
    BadDegree(u32),
    #[error("r={r} does not divide q^n-1={group_order}")]
    NotDivisor { r: u64, group_order: u64 },
    #[error("q^n-1 overflows 63 bits for q={q}, n={n}")]
    Overflow { q: u64, n: u32 },
    #[error("no prime p_{i} in P_t (k={k})")]
    BadIndex { i: usize, k: usize },
    #[error("{d} does not divide f={f}")]
    NotDivisorOfF { d: u64, f: u64 },
    #[error("q_max={0} exceeds {BOUND_TABLE_Q_MAX}")]
    QMaxTooLarge(u64),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// One prime of `P_t` with its `e_i = p^b` and `f_i = p^(b+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TPrime {
    pub p: u64,
    pub e: u64,
    pub f: u64,
}

impl Serialize for TPrime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(3)?;
        t.serialize_element(&self.p)?;
        t.serialize_element(&self.e)?;
        t.serialize_element(&self.f)?;
        t.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RStructure {
    pub q: u64,
    pub n: u32,
    pub r: u64,
    pub group_order: u64,
    pub ps: Vec<u64>,
    pub pt: Vec<u64>,
    pub pu: Vec<u64>,
    pub s: u64,
    pub t: u64,
    pub u: u64,
    pub pairs: Vec<TPrime>,
    /// `phi(u)/u`.
    pub theta_u: Rational,
    pub a_r: u128,
    /// `s * f_1 ... f_k * d(u)`.
    pub bound_rhs_root: u128,
}

#[derive(Serialize)]
struct StructureJson<'a> {
    q: u64,
    n: u32,
    r: u64,
    ps: &'a [u64],
    pt: &'a [u64],
    pu: &'a [u64],
    s: u64,
    t: u64,
    u: u64,
    pairs: &'a [TPrime],
    a_r: u128,
    bound_rhs_root: u128,
    bound_holds: bool,
}

impl Serialize for RStructure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        StructureJson {
            q: self.q,
            n: self.n,
            r: self.r,
            ps: &self.ps,
            pt: &self.pt,
            pu: &self.pu,
            s: self.s,
            t: self.t,
            u: self.u,
            pairs: &self.pairs,
            a_r: self.a_r,
            bound_rhs_root: self.bound_rhs_root,
            bound_holds: self.bound_holds(),
        }
        .serialize(s)
    }
}

/// `q^n - 1`, provided it stays below `2^63`.
pub fn group_order_of(q: u64, n: u32) -> Result<u64, StructureError> {
    q.checked_pow(n)
        .map(|v| v - 1)
        .filter(|&v| v < arith::MAX_INPUT)
        .ok_or(StructureError::Overflow { q, n })
}

impl RStructure {
    pub fn compute(q: u64, n: u32, r: u64) -> Result<Self, StructureError> {
        if arith::as_prime_power(q).is_none() {
            return Err(StructureError::NotPrimePower(q));
        }
        if n < 2 {
            return Err(StructureError::BadDegree(n));
        }
        let group_order = group_order_of(q, n)?;
        if r == 0 || group_order % r != 0 {
            return Err(StructureError::NotDivisor { r, group_order });
        }
        let big = arith::factor(group_order)?;
        let rf = arith::factor(r)?;

        let (mut ps, mut pt, mut pu) = (Vec::new(), Vec::new(), Vec::new());
        let (mut s, mut t, mut u) = (1u64, 1u64, 1u64);
        let mut pairs = Vec::new();
        let mut a_r: u128 = 1;
        for &(p, a) in big.factors() {
            let b = rf.exponent_of(p);
            if b == 0 {
                pu.push(p);
                u *= p;
            } else if b == a {
                ps.push(p);
                s *= p.pow(b);
                a_r *= u128::from(p).pow(b + 1);
            } else {
                pt.push(p);
                let e = p.pow(b);
                t *= e;
                pairs.push(TPrime { p, e, f: e * p });
                a_r *= u128::from(p).pow(b + 1);
            }
        }
        let u_fact = arith::factor(u)?;
        let theta_u = Rational::new(i128::from(u_fact.euler_phi()), i128::from(u));
        let bound_rhs_root = u128::from(s)
            * pairs.iter().map(|tp| u128::from(tp.f)).product::<u128>()
            * u128::from(u_fact.divisor_count());

        Ok(RStructure {
            q,
            n,
            r,
            group_order,
            ps,
            pt,
            pu,
            s,
            t,
            u,
            pairs,
            theta_u,
            a_r,
            bound_rhs_root,
        })
    }

    /// Number of primes in `P_t`.
    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    /// `l_{i,d}` for the `i`-th prime of `P_t` (zero-based) and `d | f_i`:
    /// `1 - 1/p_i` when `d != f_i`, and `-1/p_i` when `d = f_i`.
    pub fn ell_coefficient(&self, i: usize, d: u64) -> Result<Rational, StructureError> {
        let tp = self
            .pairs
            .get(i)
            .ok_or(StructureError::BadIndex { i, k: self.k() })?;
        if d == 0 || tp.f % d != 0 {
            return Err(StructureError::NotDivisorOfF { d, f: tp.f });
        }
        let inv_p = Rational::new(1, i128::from(tp.p));
        Ok(if d == tp.f {
            -inv_p
        } else {
            Rational::from_integer(1) - inv_p
        })
    }

    /// `q > (s * f_1 ... f_k * d(u))^2`, exactly.
    pub fn bound_holds(&self) -> bool {
        self.bound_rhs_root
            .checked_mul(self.bound_rhs_root)
            .is_some_and(|sq| u128::from(self.q) > sq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundRow {
    pub q: u64,
    pub bound_rhs_root: u128,
    pub holds: bool,
}

/// The sufficient-condition verdict for every prime power `q <= q_max` with
/// `r | q^n - 1`, ascending in `q`.
pub fn min_q_satisfying_bound(n: u32, r: u64, q_max: u64) -> Result<Vec<BoundRow>, StructureError> {
    if q_max > BOUND_TABLE_Q_MAX {
        return Err(StructureError::QMaxTooLarge(q_max));
    }
    if n < 2 {
        return Err(StructureError::BadDegree(n));
    }
    let mut rows = Vec::new();
    for pp in arith::prime_powers_in(2, q_max) {
        let order = group_order_of(pp.q, n)?;
        if r == 0 || order % r != 0 {
            continue;
        }
        let st = RStructure::compute(pp.q, n, r)?;
        rows.push(BoundRow {
            q: pp.q,
            bound_rhs_root: st.bound_rhs_root,
            holds: st.bound_holds(),
        });
    }
    Ok(rows)
}
