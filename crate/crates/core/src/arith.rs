//! Exact 64-bit integer number theory: factorization, primality,
//! the classical arithmetic functions and prime-power enumeration.
//!
//! Inputs are limited to `m < 2^63`. Products that can leave 64 bits are
//! carried out in `u128`.

use std::sync::OnceLock;

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

/// Largest accepted input (exclusive).
pub const MAX_INPUT: u64 = 1 << 63;

/// Primes up to this bound are removed by trial division before Pollard rho.
const TRIAL_BOUND: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("value {0} is out of range (must satisfy 1 <= m < 2^63)")]
    OutOfRange(u64),
    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),
}

/// `value = prod p^e` with primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Factorization {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Exponent of `p` in the value, zero when `p` does not divide it.
    pub fn exponent_of(&self, p: u64) -> u32 {
        self.factors
            .binary_search_by_key(&p, |&(q, _)| q)
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    /// Product of the distinct primes.
    pub fn radical(&self) -> u64 {
        self.primes().product()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn mobius(&self) -> i32 {
        if !self.is_squarefree() {
            0
        } else if self.factors.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn euler_phi(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| (p - 1) * p.pow(e - 1))
            .product()
    }

    pub fn divisor_count(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(_, e)| u64::from(e) + 1)
            .product()
    }

    /// All positive divisors in ascending order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

fn check_range(m: u64) -> Result<(), ArithError> {
    if m == 0 || m >= MAX_INPUT {
        Err(ArithError::OutOfRange(m))
    } else {
        Ok(())
    }
}

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(TRIAL_BOUND))
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin; the first twelve prime bases are a
/// certificate for every 64-bit input.
pub fn is_prime(m: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if m < 2 {
        return false;
    }
    for &b in &BASES {
        if m.is_multiple_of(b) {
            return m == b;
        }
    }
    let mut d = m - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, m);
        if x == 1 || x == m - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, m);
            if x == m - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's variant of Pollard rho. `n` must be odd and composite.
fn pollard_brent(n: u64) -> u64 {
    let f = |x: u64, c: u64| (mul_mod(x, x, n) + c) % n;
    for c in 1.. {
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;
        let m = 128u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y, c);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y, c);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += m;
            }
            r *= 2;
        }
        if g == n {
            // batch overshot: replay one step at a time
            loop {
                ys = f(ys, c);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!("rho exhausted all increments")
}

fn split_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    split_into(d, out);
    split_into(n / d, out);
}

/// Factor `1 <= m < 2^63`.
pub fn factor(m: u64) -> Result<Factorization, ArithError> {
    check_range(m)?;
    let mut rest = m;
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for &p in small_primes() {
        if p * p > rest {
            break;
        }
        if rest.is_multiple_of(p) {
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        // large prime cofactors would otherwise walk the whole table
        if p == 4093 && is_prime(rest) {
            break;
        }
    }
    if rest > 1 {
        let mut big = Vec::new();
        split_into(rest, &mut big);
        big.sort_unstable();
        for p in big {
            match factors.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => factors.push((p, 1)),
            }
        }
    }
    Ok(Factorization { value: m, factors })
}

pub fn mobius(m: u64) -> Result<i32, ArithError> {
    Ok(factor(m)?.mobius())
}

pub fn euler_phi(m: u64) -> Result<u64, ArithError> {
    Ok(factor(m)?.euler_phi())
}

pub fn divisor_count(m: u64) -> Result<u64, ArithError> {
    Ok(factor(m)?.divisor_count())
}

pub fn divisors(m: u64) -> Result<Vec<u64>, ArithError> {
    Ok(factor(m)?.divisors())
}

/// `base^exp`, or `None` on 64-bit overflow.
pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PrimePower {
    pub p: u64,
    pub k: u32,
    pub q: u64,
}

/// Splits `q = p^k`, returning `None` when `q` is not a prime power.
pub fn as_prime_power(q: u64) -> Option<PrimePower> {
    if !(2..MAX_INPUT).contains(&q) {
        return None;
    }
    let f = factor(q).ok()?;
    match f.factors() {
        [(p, k)] => Some(PrimePower { p: *p, k: *k, q }),
        _ => None,
    }
}

/// Every prime power in `[lo, hi]`, ascending in `q`.
pub fn prime_powers_in(lo: u64, hi: u64) -> Vec<PrimePower> {
    if hi < 2 || lo > hi {
        return Vec::new();
    }
    let mut out = Vec::new();
    for p in primes_up_to(hi) {
        let mut q = p;
        let mut k = 1;
        loop {
            if q >= lo {
                out.push(PrimePower { p, k, q });
            }
            match q.checked_mul(p) {
                Some(next) if next <= hi => {
                    q = next;
                    k += 1;
                }
                _ => break,
            }
        }
    }
    out.sort_unstable_by_key(|pp| pp.q);
    out
}
