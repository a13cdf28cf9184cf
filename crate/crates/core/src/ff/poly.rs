//! Dense polynomials over a prime field, coefficients low degree first.
//! Just enough to pick a modulus and test candidate primitive elements.

pub(crate) type Poly = Vec<u64>;

fn trim(a: &mut Poly) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn inv_mod_p(a: u64, p: u64) -> u64 {
    // p is prime: a^(p-2)
    let mut acc = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

/// Remainder of `a` modulo the monic `modulus`.
pub(crate) fn rem_monic(mut a: Poly, modulus: &[u64], p: u64) -> Poly {
    let deg = modulus.len() - 1;
    while a.len() > deg {
        let lead = a.pop().unwrap_or(0);
        if lead != 0 {
            let shift = a.len() - deg;
            for (i, &m) in modulus[..deg].iter().enumerate() {
                let t = &mut a[shift + i];
                *t = (*t + (p - lead) * m) % p;
            }
        }
    }
    trim(&mut a);
    a
}

pub(crate) fn mul(a: &[u64], b: &[u64], p: u64) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    trim(&mut out);
    out
}

pub(crate) fn mul_mod(a: &[u64], b: &[u64], modulus: &[u64], p: u64) -> Poly {
    rem_monic(mul(a, b, p), modulus, p)
}

pub(crate) fn pow_mod(base: &[u64], mut exp: u64, modulus: &[u64], p: u64) -> Poly {
    let mut acc: Poly = vec![1];
    let mut b = rem_monic(base.to_vec(), modulus, p);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(&acc, &b, modulus, p);
        }
        exp >>= 1;
        if exp > 0 {
            b = mul_mod(&b, &b, modulus, p);
        }
    }
    acc
}

fn sub(a: &[u64], b: &[u64], p: u64) -> Poly {
    let mut out = vec![0u64; a.len().max(b.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *o = (x + p - y) % p;
    }
    trim(&mut out);
    out
}

/// Remainder for a general (non-monic) divisor.
fn rem(mut a: Poly, b: &[u64], p: u64) -> Poly {
    let db = b.len() - 1;
    let lead_inv = inv_mod_p(b[db], p);
    trim(&mut a);
    while a.len() > db {
        let lead = a[a.len() - 1] * lead_inv % p;
        let shift = a.len() - 1 - db;
        for (i, &c) in b.iter().enumerate() {
            let t = &mut a[shift + i];
            *t = (*t + (p - lead) * c % p) % p;
        }
        trim(&mut a);
    }
    a
}

fn gcd(mut a: Poly, mut b: Poly, p: u64) -> Poly {
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = rem(a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Rabin's test: `f` of degree `d` is irreducible iff `x^(p^d) = x (mod f)`
/// and `gcd(x^(p^(d/l)) - x, f) = 1` for every prime `l | d`.
pub(crate) fn is_irreducible(f: &[u64], p: u64, prime_divisors_of_degree: &[u64]) -> bool {
    let d = f.len() - 1;
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    let x: Poly = vec![0, 1];
    // frob[i] = x^(p^i) mod f
    let mut frob = Vec::with_capacity(d + 1);
    frob.push(x.clone());
    for i in 1..=d {
        let prev: &Poly = &frob[i - 1];
        frob.push(pow_mod(prev, p, f, p));
    }
    if sub(&frob[d], &x, p).iter().any(|&c| c != 0) {
        return false;
    }
    prime_divisors_of_degree.iter().all(|&l| {
        let h = sub(&frob[d / l as usize], &x, p);
        gcd(f.to_vec(), h, p).len() == 1
    })
}
