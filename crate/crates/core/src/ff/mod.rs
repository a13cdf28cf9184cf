//! The field `F_{q^n}` with `q = p^k`, built once as `F_p[x]/(f)` with
//! `deg f = k*n`, together with a full discrete-log table.
//!
//! Elements are identified by their index: the base-`p` digits of the index
//! are the coefficients of the residue polynomial, constant term first.
//! The subfield `F_q` is the order-`(q-1)` subgroup of `F_{q^n}^*` plus zero.

mod poly;

use std::fmt;

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{self, ArithError, Factorization};

/// Hard ceiling on `q^n`.
pub const FIELD_SIZE_CAP: u64 = 1 << 27;

/// Environment variable that may lower (never raise) [`FIELD_SIZE_CAP`].
pub const FIELD_CAP_ENV: &str = "RPRIM_MAX_FIELD";

/// The active cap: [`FIELD_SIZE_CAP`], lowered by `RPRIM_MAX_FIELD` if set.
pub fn field_size_cap() -> Result<u64, FieldError> {
    match std::env::var(FIELD_CAP_ENV) {
        Ok(raw) => {
            let v: u64 = raw
                .trim()
                .parse()
                .map_err(|_| FieldError::BadCapOverride(raw.clone()))?;
            Ok(v.min(FIELD_SIZE_CAP))
        }
        Err(_) => Ok(FIELD_SIZE_CAP),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid degrees k={k}, n={n} (need k >= 1, n >= 2)")]
    BadDegree { k: u32, n: u32 },
    #[error("field size {size} exceeds the cap {cap}")]
    SizeCap { size: String, cap: u64 },
    #[error("{0} is undefined at zero")]
    Zero(&'static str),
    #[error("{d} does not divide the group order {group_order}")]
    NotDivisor { d: u64, group_order: u64 },
    #[error("element index {0} is outside the field")]
    BadIndex(u64),
    #[error("{FIELD_CAP_ENV} must be a non-negative integer, got {0:?}")]
    BadCapOverride(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// An element of `F_{q^n}`, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: Self = FieldElement(0);
    pub const ONE: Self = FieldElement(1);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Immutable description of `F_{q^n} / F_q`.
#[derive(Clone)]
pub struct FieldContext {
    p: u64,
    k: u32,
    n: u32,
    q: u64,
    size: u64,
    group_order: u64,
    factorization: Factorization,
    modulus: Vec<u64>,
    gamma: FieldElement,
    log: Vec<u32>,
    exp: Vec<u32>,
    subfield: Vec<FieldElement>,
    /// `(q^n-1)/(q^(n/l)-1)` for each prime `l | n`.
    maximal_subfield_cofactors: Vec<u64>,
}

impl fmt::Debug for FieldContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldContext")
            .field("p", &self.p)
            .field("k", &self.k)
            .field("n", &self.n)
            .field("modulus", &self.modulus)
            .field("gamma", &self.gamma)
            .finish_non_exhaustive()
    }
}

fn digits_of(mut index: u64, p: u64, len: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(len);
    while index > 0 {
        out.push(index % p);
        index /= p;
    }
    out
}

fn index_of(poly: &[u64], p: u64) -> u64 {
    poly.iter().rev().fold(0, |acc, &c| acc * p + c)
}

impl FieldContext {
    /// Builds `F_{(p^k)^n}` deterministically: the modulus is the least monic
    /// irreducible of degree `k*n` when its lower coefficients are compared
    /// lexicographically constant term first, and `gamma` is the primitive
    /// element of least index.
    pub fn build(p: u64, k: u32, n: u32) -> Result<Self, FieldError> {
        if !arith::is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if k == 0 || n < 2 {
            return Err(FieldError::BadDegree { k, n });
        }
        let cap = field_size_cap()?;
        let degree = k.checked_mul(n).ok_or(FieldError::BadDegree { k, n })?;
        let size =
            p.checked_pow(degree)
                .filter(|&s| s <= cap)
                .ok_or_else(|| FieldError::SizeCap {
                    size: format!("{p}^{degree}"),
                    cap,
                })?;
        let q = p.pow(k);
        let group_order = size - 1;
        let factorization = arith::factor(group_order)?;
        let modulus = least_irreducible(p, degree as usize)?;

        let gamma_poly = (2..size)
            .map(|idx| digits_of(idx, p, degree as usize))
            .find(|c| {
                factorization
                    .primes()
                    .all(|l| poly::pow_mod(c, group_order / l, &modulus, p) != [1])
            })
            .expect("a finite field has a primitive element");
        let gamma = FieldElement(index_of(&gamma_poly, p) as u32);

        let mut log = vec![u32::MAX; size as usize];
        let mut exp = vec![0u32; group_order as usize];
        let mut cur: Vec<u64> = vec![1];
        for e in 0..group_order {
            let idx = index_of(&cur, p);
            log[idx as usize] = e as u32;
            exp[e as usize] = idx as u32;
            cur = poly::mul_mod(&cur, &gamma_poly, &modulus, p);
        }
        debug_assert_eq!(cur, vec![1]);

        let step = group_order / (q - 1);
        let mut subfield: Vec<FieldElement> = std::iter::once(FieldElement::ZERO)
            .chain((0..q - 1).map(|j| FieldElement(exp[(j * step) as usize])))
            .collect();
        subfield.sort_unstable();

        let maximal_subfield_cofactors = arith::factor(u64::from(n))?
            .primes()
            .map(|l| group_order / (q.pow(n / l as u32) - 1))
            .collect();

        Ok(FieldContext {
            p,
            k,
            n,
            q,
            size,
            group_order,
            factorization,
            modulus,
            gamma,
            log,
            exp,
            subfield,
            maximal_subfield_cofactors,
        })
    }

    /// Builds the context for a prime power `q` given as an integer.
    pub fn for_prime_power(q: u64, n: u32) -> Result<Self, FieldError> {
        let pp = arith::as_prime_power(q).ok_or(FieldError::NotPrime(q))?;
        Self::build(pp.p, pp.k, n)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// `q^n`.
    pub fn size(&self) -> u64 {
        self.size
    }

    /// `q^n - 1`.
    pub fn group_order(&self) -> u64 {
        self.group_order
    }

    pub fn group_factorization(&self) -> &Factorization {
        &self.factorization
    }

    /// Monic modulus, constant term first.
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn gamma(&self) -> FieldElement {
        self.gamma
    }

    /// `F_q` inside `F_{q^n}`, sorted by index.
    pub fn subfield(&self) -> &[FieldElement] {
        &self.subfield
    }

    pub fn element(&self, index: u64) -> Result<FieldElement, FieldError> {
        if index < self.size {
            Ok(FieldElement(index as u32))
        } else {
            Err(FieldError::BadIndex(index))
        }
    }

    /// All elements, ascending index.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.size as u32).map(FieldElement)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (1..self.size as u32).map(FieldElement)
    }

    /// Raw log table (index -> log); entry 0 is a sentinel.
    pub(crate) fn log_table(&self) -> &[u32] {
        &self.log
    }

    /// Raw power table (log -> index).
    pub(crate) fn exp_table(&self) -> &[u32] {
        &self.exp
    }

    /// Discrete log base `gamma`, in `[0, q^n - 2]`.
    pub fn log(&self, x: FieldElement) -> Result<u64, FieldError> {
        if x.is_zero() {
            return Err(FieldError::Zero("log"));
        }
        Ok(u64::from(self.log[x.0 as usize]))
    }

    /// `gamma^e`.
    pub fn exp(&self, e: u64) -> FieldElement {
        FieldElement(self.exp[(e % self.group_order) as usize])
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.p == 2 {
            return FieldElement(a.0 ^ b.0);
        }
        let p = self.p as u32;
        let (mut x, mut y) = (a.0, b.0);
        let (mut out, mut place) = (0u32, 1u32);
        while x > 0 || y > 0 {
            let d = (x % p + y % p) % p;
            out += d * place;
            place = place.wrapping_mul(p);
            x /= p;
            y /= p;
        }
        FieldElement(out)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.p == 2 {
            return a;
        }
        let p = self.p as u32;
        let mut x = a.0;
        let (mut out, mut place) = (0u32, 1u32);
        while x > 0 {
            out += (p - x % p) % p * place;
            place = place.wrapping_mul(p);
            x /= p;
        }
        FieldElement(out)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.is_zero() || b.is_zero() {
            return FieldElement::ZERO;
        }
        let s = u64::from(self.log[a.0 as usize]) + u64::from(self.log[b.0 as usize]);
        self.exp(s)
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        let l = self.log(a).map_err(|_| FieldError::Zero("inverse"))?;
        Ok(self.exp(self.group_order - l))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.is_zero() {
            return FieldElement::ZERO;
        }
        let l = u64::from(self.log[a.0 as usize]);
        let r = (u128::from(l) * u128::from(e) % u128::from(self.group_order)) as u64;
        self.exp(r)
    }

    fn check_divisor(&self, d: u64) -> Result<(), FieldError> {
        if d == 0 || !self.group_order.is_multiple_of(d) {
            Err(FieldError::NotDivisor {
                d,
                group_order: self.group_order,
            })
        } else {
            Ok(())
        }
    }

    /// Multiplicative order, `(q^n-1) / gcd(log x, q^n-1)`.
    pub fn order(&self, x: FieldElement) -> Result<u64, FieldError> {
        let l = self.log(x).map_err(|_| FieldError::Zero("order"))?;
        Ok(self.group_order / l.gcd(&self.group_order))
    }

    /// Whether `x` has order exactly `(q^n-1)/r`.
    pub fn is_r_primitive(&self, x: FieldElement, r: u64) -> Result<bool, FieldError> {
        self.check_divisor(r)?;
        let l = self.log(x).map_err(|_| FieldError::Zero("r-primitivity"))?;
        Ok(l.gcd(&self.group_order) == r)
    }

    /// `x` is `m`-free iff `gcd(m, (q^n-1)/ord x) = 1`.
    pub fn is_m_free(&self, x: FieldElement, m: u64) -> Result<bool, FieldError> {
        self.check_divisor(m)?;
        let ord = self.order(x)?;
        Ok(m.gcd(&(self.group_order / ord)) == 1)
    }

    /// Whether `x` lies in `F_{q^j}` for some `j | n` (with `x` nonzero
    /// this is a divisibility condition on its log).
    pub fn in_intermediate_field(&self, x: FieldElement, j: u32) -> bool {
        if x.is_zero() {
            return true;
        }
        let sub_order = self.q.pow(j) - 1;
        let cofactor = self.group_order / sub_order;
        u64::from(self.log[x.0 as usize]) % cofactor == 0
    }

    pub fn in_subfield(&self, x: FieldElement) -> bool {
        self.in_intermediate_field(x, 1)
    }

    /// `F_q(theta) = F_{q^n}`: `theta` avoids `F_{q^(n/l)}` for every prime
    /// `l | n`, i.e. `theta^(q^(n/l)) != theta`.
    pub fn is_generator(&self, theta: FieldElement) -> bool {
        if theta.is_zero() {
            return false;
        }
        let l = u64::from(self.log[theta.0 as usize]);
        self.maximal_subfield_cofactors.iter().all(|&c| l % c != 0)
    }
}

fn least_irreducible(p: u64, degree: usize) -> Result<Vec<u64>, FieldError> {
    let degree_primes: Vec<u64> = arith::factor(degree as u64)?.primes().collect();
    let span = p.pow(degree as u32);
    // c_0 is the most significant digit of the scan counter
    (span / p..span)
        .map(|v| {
            let mut f = vec![0u64; degree + 1];
            let mut rest = v;
            for i in (0..degree).rev() {
                f[i] = rest % p;
                rest /= p;
            }
            f[degree] = 1;
            f
        })
        .find(|f| poly::is_irreducible(f, p, &degree_primes))
        .ok_or(FieldError::BadDegree {
            k: degree as u32,
            n: 1,
        })
}
