//! Invariant checks shared by the property suite and the acceptance runner.
//! Each check returns `Err` with a description of the first violation.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use std::collections::HashSet;

use num_integer::Integer;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use rprim::arith;
use rprim::chars::{self, CharacterTable, GammaExpansion};
use rprim::ff::{FieldContext, FieldElement};
use rprim::rstruct::{RStructure, Rational};
use rprim::search::{self, CanonicalLine, Mode, VerifyOptions};

pub const SMALL_FIELD_MAX: u64 = 1 << 12;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub type Check = Result<(), String>;
pub type Suite = (&'static str, fn() -> Check);

/// Every `F_{q^n}` with `n >= 2` and `q^n <= max`, ascending in `(q, n)`.
pub fn small_fields(max: u64) -> Vec<FieldContext> {
    let mut out = Vec::new();
    for pp in arith::prime_powers_in(2, max) {
        let mut n = 2;
        while pp.q.checked_pow(n).is_some_and(|s| s <= max) {
            out.push(FieldContext::build(pp.p, pp.k, n).unwrap());
            n += 1;
        }
    }
    out
}

pub fn divisors_of_order(ctx: &FieldContext) -> Vec<u64> {
    ctx.group_factorization().divisors()
}

fn label(ctx: &FieldContext) -> String {
    format!("F_{}^{}", ctx.q(), ctx.n())
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

// ---- arith

pub fn arith_divisor_sums(limit: usize) -> Check {
    let mut phi_sum = vec![0u64; limit + 1];
    let mut mu_sum = vec![0i64; limit + 1];
    for d in 1..=limit {
        let f = arith::factor(d as u64).map_err(|e| e.to_string())?;
        let (phi, mu) = (f.euler_phi(), i64::from(f.mobius()));
        for m in (d..=limit).step_by(d) {
            phi_sum[m] += phi;
            mu_sum[m] += mu;
        }
    }
    for m in 1..=limit {
        ensure!(
            phi_sum[m] == m as u64,
            "sum of phi over divisors of {m} is {}",
            phi_sum[m]
        );
        let want = i64::from(m == 1);
        ensure!(
            mu_sum[m] == want,
            "sum of mu over divisors of {m} is {}",
            mu_sum[m]
        );
    }
    Ok(())
}

pub fn arith_factor_recombines(cases: u32) -> Check {
    runner(cases)
        .run(&(1u64..(1 << 63)), |m| {
            let f = arith::factor(m).unwrap();
            let mut prod = 1u64;
            for &(p, e) in f.factors() {
                prop_assert!(arith::is_prime(p));
                prod *= p.pow(e);
            }
            prop_assert_eq!(prod, m);
            let count: u64 = f.factors().iter().map(|&(_, e)| u64::from(e) + 1).product();
            prop_assert_eq!(f.divisor_count(), count);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn arith_divisor_count_small(cases: u32) -> Check {
    runner(cases)
        .run(&(1u64..2_000_000), |m| {
            let f = arith::factor(m).unwrap();
            let count: u64 = f.factors().iter().map(|&(_, e)| u64::from(e) + 1).product();
            prop_assert_eq!(arith::divisor_count(m).unwrap(), count);
            prop_assert_eq!(arith::divisors(m).unwrap().len() as u64, count);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

// ---- ff

pub fn ff_exp_is_bijective(ctx: &FieldContext) -> Check {
    let mut seen = vec![false; ctx.size() as usize];
    for e in 0..ctx.group_order() {
        let x = ctx.exp(e);
        ensure!(!x.is_zero(), "{}: gamma^{e} = 0", label(ctx));
        ensure!(
            !seen[x.index() as usize],
            "{}: gamma^{e} repeats",
            label(ctx)
        );
        seen[x.index() as usize] = true;
    }
    Ok(())
}

pub fn ff_order_law(ctx: &FieldContext) -> Check {
    let n = ctx.group_order();
    let mut by_order = std::collections::HashMap::new();
    for x in ctx.nonzero_elements() {
        let o = ctx.order(x).map_err(|e| e.to_string())?;
        ensure!(
            n.is_multiple_of(o),
            "{}: order {o} of {x} does not divide {n}",
            label(ctx)
        );
        *by_order.entry(o).or_insert(0u64) += 1;
    }
    for e in divisors_of_order(ctx) {
        let got = by_order.get(&e).copied().unwrap_or(0);
        let want = arith::euler_phi(e).unwrap();
        ensure!(
            got == want,
            "{}: {got} elements of order {e}, expected {want}",
            label(ctx)
        );
    }
    Ok(())
}

pub fn ff_subfield_closure(ctx: &FieldContext) -> Check {
    let sub = ctx.subfield();
    ensure!(
        sub.len() as u64 == ctx.q(),
        "{}: subfield has {} elements",
        label(ctx),
        sub.len()
    );
    for &a in sub {
        for &b in sub {
            ensure!(
                ctx.in_subfield(ctx.add(a, b)),
                "{}: {a}+{b} leaves F_q",
                label(ctx)
            );
            ensure!(
                ctx.in_subfield(ctx.mul(a, b)),
                "{}: {a}*{b} leaves F_q",
                label(ctx)
            );
        }
    }
    Ok(())
}

pub fn ff_r_primitive_counts(ctx: &FieldContext) -> Check {
    let n = ctx.group_order();
    for r in divisors_of_order(ctx) {
        let mut count = 0u64;
        for x in ctx.nonzero_elements() {
            if ctx.is_r_primitive(x, r).map_err(|e| e.to_string())? {
                count += 1;
            }
        }
        let want = arith::euler_phi(n / r).unwrap();
        ensure!(
            count == want,
            "{}: {count} {r}-primitive elements, expected {want}",
            label(ctx)
        );
    }
    Ok(())
}

/// `x` is m-free iff it is not a `d`-th power for any `d | m`, `d > 1`;
/// the powers are enumerated directly.
pub fn ff_m_free_matches_powers(ctx: &FieldContext) -> Check {
    let size = ctx.size() as usize;
    let divisors = divisors_of_order(ctx);
    let powers: Vec<(u64, Vec<bool>)> = divisors
        .iter()
        .filter(|&&d| d > 1)
        .map(|&d| {
            let mut is_power = vec![false; size];
            for y in ctx.nonzero_elements() {
                is_power[ctx.pow(y, d).index() as usize] = true;
            }
            (d, is_power)
        })
        .collect();
    for &m in &divisors {
        for x in ctx.nonzero_elements() {
            let want = !powers
                .iter()
                .any(|(d, p)| m % d == 0 && p[x.index() as usize]);
            let got = ctx.is_m_free(x, m).map_err(|e| e.to_string())?;
            ensure!(got == want, "{}: is_m_free({x}, {m}) = {got}", label(ctx));
        }
    }
    Ok(())
}

// ---- rstruct

pub fn rstruct_invariants(q: u64, n: u32, r: u64) -> Check {
    let st = RStructure::compute(q, n, r).map_err(|e| e.to_string())?;
    let order = st.group_order;
    let f = arith::factor(order).unwrap();
    let tag = format!("({q},{n},{r})");

    let mut primes: Vec<u64> = st.ps.iter().chain(&st.pt).chain(&st.pu).copied().collect();
    primes.sort_unstable();
    ensure!(
        primes == f.primes().collect::<Vec<_>>(),
        "{tag}: partition {primes:?}"
    );
    let recombined: u64 = primes.iter().map(|&p| p.pow(f.exponent_of(p))).product();
    ensure!(
        recombined == order,
        "{tag}: partition recombines to {recombined}"
    );
    ensure!(st.s * st.t == r, "{tag}: s*t = {}", st.s * st.t);
    ensure!(
        arith::factor(st.u).unwrap().is_squarefree(),
        "{tag}: u={} not squarefree",
        st.u
    );
    ensure!(st.u.gcd(&r) == 1, "{tag}: gcd(u, r) != 1");

    let mut sf = u128::from(st.s);
    let mut ell_1 = Rational::from_integer(1);
    for (i, tp) in st.pairs.iter().enumerate() {
        ensure!(
            order % tp.f == 0,
            "{tag}: f_{i}={} does not divide {order}",
            tp.f
        );
        ensure!(tp.f == tp.e * tp.p, "{tag}: f_{i} != e_{i} p_{i}");
        sf *= u128::from(tp.f);
        let mut mass = Rational::from_integer(0);
        for d in arith::divisors(tp.f).unwrap() {
            let l = st.ell_coefficient(i, d).map_err(|e| e.to_string())?;
            mass += l * Rational::from_integer(i128::from(arith::euler_phi(d).unwrap()));
        }
        ensure!(
            mass == Rational::from_integer(0),
            "{tag}: sum phi(d) l_{i},d = {mass}"
        );
        ell_1 *= st.ell_coefficient(i, 1).unwrap();
    }
    let t_ratio = Rational::new(
        i128::from(arith::euler_phi(st.t).unwrap()),
        i128::from(st.t),
    );
    ensure!(
        ell_1 == t_ratio,
        "{tag}: prod l_i,1 = {ell_1}, phi(t)/t = {t_ratio}"
    );
    ensure!(sf <= st.a_r, "{tag}: s f_1..f_k = {sf} > A_r = {}", st.a_r);
    let rhs = sf * u128::from(arith::divisor_count(st.u).unwrap());
    ensure!(
        rhs == st.bound_rhs_root,
        "{tag}: bound_rhs_root {}",
        st.bound_rhs_root
    );
    ensure!(
        st.bound_holds() == (u128::from(q) > rhs * rhs),
        "{tag}: bound_holds disagrees with q > rhs^2"
    );
    Ok(())
}

pub fn rstruct_random(cases: u32) -> Check {
    let prime_powers: Vec<u64> = arith::prime_powers_in(2, 46_000)
        .into_iter()
        .map(|pp| pp.q)
        .collect();
    runner(cases)
        .run(
            &(
                0..prime_powers.len(),
                2u32..=4,
                any::<prop::sample::Index>(),
            ),
            |(i, n, pick)| {
                let q = prime_powers[i];
                let order = q.pow(n) - 1;
                let divs = arith::divisors(order).unwrap();
                let r = divs[pick.index(divs.len())];
                rstruct_invariants(q, n, r).map_err(TestCaseError::fail)
            },
        )
        .map_err(|e| e.to_string())
}

// ---- chars

pub fn chars_orthogonality(ctx: &FieldContext) -> Check {
    let table = CharacterTable::new(ctx).map_err(|e| e.to_string())?;
    let n = ctx.group_order();
    let mut total = 0u64;
    for d in divisors_of_order(ctx) {
        let chars = table.characters_of_order(d).map_err(|e| e.to_string())?;
        ensure!(
            chars.len() as u64 == arith::euler_phi(d).unwrap(),
            "{}: {} characters of order {d}",
            label(ctx),
            chars.len()
        );
        total += chars.len() as u64;
        for chi in chars {
            let mut s = num_complex::Complex64::new(0.0, 0.0);
            for x in ctx.nonzero_elements() {
                s += table.eval(chi, x).map_err(|e| e.to_string())?;
            }
            let want = if chi.is_trivial() { n as f64 } else { 0.0 };
            ensure!(
                (s - want).norm() < 1e-6,
                "{}: sum of chi_{} is {s}",
                label(ctx),
                chi.exponent()
            );
        }
    }
    ensure!(total == n, "{}: {total} characters in all", label(ctx));
    Ok(())
}

pub fn chars_coprime_products(ctx: &FieldContext) -> Check {
    let table = CharacterTable::new(ctx).map_err(|e| e.to_string())?;
    let divs = divisors_of_order(ctx);
    for &d1 in &divs {
        for &d2 in divs
            .iter()
            .filter(|&&d2| d1.gcd(&d2) == 1 && d1 * d2 <= ctx.group_order())
        {
            let c1 = table.characters_of_order(d1).unwrap();
            let c2 = table.characters_of_order(d2).unwrap();
            for &a in c1.iter().take(3) {
                for &b in c2.iter().take(3) {
                    let prod = table.product(a, b);
                    ensure!(
                        prod.order() == d1 * d2,
                        "{}: order of product {d1}*{d2}",
                        label(ctx)
                    );
                    ensure!(
                        prod.is_trivial() == (a.is_trivial() && b.is_trivial()),
                        "{}: trivial product",
                        label(ctx)
                    );
                }
            }
        }
    }
    Ok(())
}

pub fn chars_w_sums(ctx: &FieldContext) -> Check {
    let table = CharacterTable::new(ctx).map_err(|e| e.to_string())?;
    let n = ctx.group_order();
    for k in divisors_of_order(ctx) {
        let mut s = num_complex::Complex64::new(0.0, 0.0);
        for x in ctx.nonzero_elements() {
            s += table.w_k(k, x).map_err(|e| e.to_string())?;
        }
        ensure!(
            (s - (n / k) as f64).norm() < 1e-6,
            "{}: sum of w_{k} is {s}",
            label(ctx)
        );
    }
    Ok(())
}

/// Pointwise: both forms of `Gamma` equal the direct test, and
/// `w_e w_f = w_f` for each pair of the structure.
pub fn chars_gamma_and_absorption(ctx: &FieldContext) -> Check {
    let table = CharacterTable::new(ctx).map_err(|e| e.to_string())?;
    for r in divisors_of_order(ctx) {
        let st = RStructure::compute(ctx.q(), ctx.n(), r).unwrap();
        let gamma = GammaExpansion::new(&table, &st).map_err(|e| e.to_string())?;
        for x in ctx.nonzero_elements() {
            let v = gamma.gamma_char(x).map_err(|e| e.to_string())?;
            let want = if ctx.is_r_primitive(x, r).unwrap() {
                1.0
            } else {
                0.0
            };
            ensure!(
                (v.product - want).norm() < chars::INDICATOR_TOLERANCE
                    && (v.expanded - want).norm() < chars::INDICATOR_TOLERANCE,
                "{}: r={r} Gamma({x}) = {:?}",
                label(ctx),
                v
            );
            for tp in &st.pairs {
                let we = table.w_k(tp.e, x).unwrap();
                let wf = table.w_k(tp.f, x).unwrap();
                ensure!(
                    (we * wf - wf).norm() < chars::INDICATOR_TOLERANCE,
                    "{}: w_{} w_{} != w_{} at {x}",
                    label(ctx),
                    tp.e,
                    tp.f,
                    tp.f
                );
            }
        }
    }
    Ok(())
}

// ---- search

fn point_set(ctx: &FieldContext, line: &CanonicalLine) -> Vec<u32> {
    let mut pts: Vec<u32> = line.points(ctx).iter().map(|x| x.index()).collect();
    pts.sort_unstable();
    pts
}

/// Canonical lines are distinct point sets avoiding 0, and there are as many
/// as there are `(a, b)`-parametrization orbits, so they cover every line.
pub fn search_lines_partition(ctx: &FieldContext) -> Check {
    let q = ctx.q();
    let generators = ctx.elements().filter(|&t| ctx.is_generator(t)).count() as u64;
    let admissible = generators * ctx.group_order();
    let lines: Vec<CanonicalLine> = search::canonical_lines(ctx).collect();
    ensure!(
        lines.len() as u64 * q * (q - 1) == admissible,
        "{}: {} lines for {admissible} admissible pairs",
        label(ctx),
        lines.len()
    );
    let mut seen = HashSet::new();
    for l in &lines {
        let pts = point_set(ctx, l);
        ensure!(pts[0] != 0, "{}: line {l:?} contains 0", label(ctx));
        ensure!(
            pts.windows(2).all(|w| w[0] < w[1]),
            "{}: repeated point",
            label(ctx)
        );
        ensure!(l.a().index() == pts[0], "{}: offset not least", label(ctx));
        ensure!(
            ctx.is_generator(l.theta()),
            "{}: non-generator ratio",
            label(ctx)
        );
        ensure!(seen.insert(pts), "{}: duplicate line {l:?}", label(ctx));
    }
    ensure!(
        lines.windows(2).all(|w| w[0] < w[1]),
        "{}: lines not in (b, a) order",
        label(ctx)
    );
    let translates: Vec<CanonicalLine> = search::canonical_translates(ctx).collect();
    ensure!(
        translates.len() as u64 * q == generators,
        "{}: {} translate sets",
        label(ctx),
        translates.len()
    );
    for t in &translates {
        ensure!(
            seen.contains(&point_set(ctx, t)),
            "{}: translate {t:?} not a line",
            label(ctx)
        );
    }
    Ok(())
}

/// Random `(alpha, theta)`: canonicalization keeps the point set and is
/// idempotent.
pub fn search_canonical_random(ctx: &FieldContext, cases: u32) -> Check {
    let generators: Vec<FieldElement> = ctx.elements().filter(|&t| ctx.is_generator(t)).collect();
    let nonzero: Vec<FieldElement> = ctx.nonzero_elements().collect();
    runner(cases)
        .run(
            &(any::<prop::sample::Index>(), any::<prop::sample::Index>()),
            |(i, j)| {
                let alpha = nonzero[i.index(nonzero.len())];
                let theta = generators[j.index(generators.len())];
                let line = CanonicalLine::from_params(ctx, alpha, theta).unwrap();
                let mut direct: Vec<u32> = ctx
                    .subfield()
                    .iter()
                    .map(|&s| ctx.mul(alpha, ctx.add(theta, s)).index())
                    .collect();
                direct.sort_unstable();
                prop_assert_eq!(point_set(ctx, &line), direct);
                let again = CanonicalLine::from_params(ctx, line.b(), line.theta()).unwrap();
                prop_assert_eq!(again, line);
                Ok(())
            },
        )
        .map_err(|e| e.to_string())
}

/// `is_generator((theta + c') / c) == is_generator(theta)`: the ratio
/// `a/b` under `b -> bc`, `a -> a + bc'`.
pub fn search_generator_ratio_invariance(ctx: &FieldContext) -> Check {
    let sub = ctx.subfield();
    for theta in ctx.elements() {
        let g = ctx.is_generator(theta);
        for &c in sub.iter().filter(|c| !c.is_zero()) {
            for &c2 in sub {
                let moved = ctx.div(ctx.add(theta, c2), c).unwrap();
                ensure!(
                    ctx.is_generator(moved) == g,
                    "{}: ratio {theta} moved",
                    label(ctx)
                );
            }
        }
    }
    Ok(())
}

/// For every r: exact sweep counts match direct counts and the character
/// sum, and the line property implies the translate property.
///
/// The character side sums the expanded `Gamma` over each line's points
/// (the same finite sums as `n_char`, in the other order); `n_char` itself
/// is called on about `n_char_samples` lines per `r`.
pub fn search_counts_agree(ctx: &FieldContext, n_char_samples: usize) -> Check {
    let table = CharacterTable::new(ctx).map_err(|e| e.to_string())?;
    let lines: Vec<CanonicalLine> = search::canonical_lines(ctx).collect();
    let stride = (lines.len() / n_char_samples.max(1)).max(1);
    let full = VerifyOptions {
        full_counts: true,
        sequential: true,
        timing: false,
        ..VerifyOptions::default()
    };
    for r in divisors_of_order(ctx) {
        let st = RStructure::compute(ctx.q(), ctx.n(), r).unwrap();
        let gamma = GammaExpansion::new(&table, &st).map_err(|e| e.to_string())?;
        let mut gamma_at = vec![0.0f64; ctx.size() as usize];
        for x in ctx.nonzero_elements() {
            gamma_at[x.index() as usize] = gamma.gamma_char(x).unwrap().expanded.re;
        }
        let mut min = u64::MAX;
        for (i, l) in lines.iter().enumerate() {
            let direct = search::line_hit_count(ctx, l, r).map_err(|e| e.to_string())?;
            let summed: f64 = l
                .points(ctx)
                .iter()
                .map(|x| gamma_at[x.index() as usize])
                .sum();
            ensure!(
                (summed - direct as f64).abs() < 1e-6,
                "{}: r={r} line {l:?}: character sum {summed} vs {direct}",
                label(ctx)
            );
            if i % stride == 0 {
                let nc = gamma.n_char(l.b(), l.theta()).map_err(|e| e.to_string())?;
                ensure!(
                    (nc.value - direct as f64).abs() < 1e-6,
                    "{}: r={r} line {l:?}: n_char {} vs {direct}",
                    label(ctx),
                    nc.value
                );
            }
            min = min.min(direct);
        }
        let line = search::verify_property(ctx, r, Mode::Line, &full).unwrap();
        let translate = search::verify_property(ctx, r, Mode::Translate, &full).unwrap();
        ensure!(
            line.min_count == min,
            "{}: r={r} min_count {}",
            label(ctx),
            line.min_count
        );
        ensure!(
            !line.pass || translate.pass,
            "{}: r={r} line property holds but translate fails",
            label(ctx)
        );
        ensure!(line.pass == (min > 0), "{}: r={r} verdict", label(ctx));
    }
    Ok(())
}

/// Named suites over every field with `q^n <= SMALL_FIELD_MAX`.
pub fn all_suites() -> Vec<Suite> {
    fn per_field(f: fn(&FieldContext) -> Check) -> Check {
        small_fields(SMALL_FIELD_MAX).iter().try_for_each(f)
    }
    vec![
        ("arith: divisor sums to 10^6", || {
            arith_divisor_sums(1_000_000)
        }),
        ("arith: factor recombination", || {
            arith_factor_recombines(10_000)
        }),
        ("arith: divisor count", || arith_divisor_count_small(2_000)),
        ("ff: exp bijective", || per_field(ff_exp_is_bijective)),
        ("ff: order law", || per_field(ff_order_law)),
        ("ff: subfield closure", || per_field(ff_subfield_closure)),
        ("ff: r-primitive counts", || {
            per_field(ff_r_primitive_counts)
        }),
        ("ff: m-free vs powers", || {
            per_field(ff_m_free_matches_powers)
        }),
        ("rstruct: small fields", || {
            small_fields(SMALL_FIELD_MAX).iter().try_for_each(|ctx| {
                divisors_of_order(ctx)
                    .into_iter()
                    .try_for_each(|r| rstruct_invariants(ctx.q(), ctx.n(), r))
            })
        }),
        ("rstruct: random", || rstruct_random(2_000)),
        ("chars: orthogonality", || per_field(chars_orthogonality)),
        ("chars: coprime products", || {
            per_field(chars_coprime_products)
        }),
        ("chars: w sums", || per_field(chars_w_sums)),
        ("chars: gamma and absorption", || {
            per_field(chars_gamma_and_absorption)
        }),
        ("search: lines partition", || {
            per_field(search_lines_partition)
        }),
        ("search: canonical random", || {
            per_field(|c| search_canonical_random(c, 64))
        }),
        ("search: generator ratio", || {
            per_field(search_generator_ratio_invariance)
        }),
        ("search: counts agree", || {
            per_field(|c| search_counts_agree(c, 16))
        }),
    ]
}
