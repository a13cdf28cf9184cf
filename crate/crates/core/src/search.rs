//! Exhaustive verification of the translate and line properties for
//! r-primitive elements.
//!
//! A line is a point set `L = alpha (theta + F_q)` with `alpha != 0` and
//! `theta` a generator of the extension. Every line is `a + b F_q` for a
//! direction `b` and offset `a`; it is stored canonically with `b` the
//! least-index element of `b F_q^*` and `a` the least-index point of `L`.
//!
//! The sweep never touches field arithmetic in its inner loop. Each
//! translate set `theta + F_q` is stored as the logs of its `q` points, and
//! the line `b (theta + F_q)` is that list shifted by `log b`. A bitmap over
//! logs marks r-primitivity (`gcd(log, q^n-1) = r`).

use std::time::Instant;

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::arith;
use crate::ff::{field_size_cap, FieldContext, FieldElement, FieldError};
use crate::par;
use crate::rstruct::{self, StructureError};

/// Default cap on exceptions listed per report.
pub const DEFAULT_MAX_EXCEPTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("theta={0} does not generate the extension")]
    NotGenerator(u32),
    #[error("q={q}: field size {q}^{n} exceeds the cap {cap}")]
    ScanSizeCap { q: u64, n: u32, cap: u64 },
    #[error("empty range q_lo={lo} > q_hi={hi}")]
    EmptyRange { lo: u64, hi: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every translate set `theta + F_q`.
    Translate,
    /// Every line `alpha (theta + F_q)`.
    Line,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Translate => "translate",
            Mode::Line => "line",
        })
    }
}

/// A deduplicated line `a + b F_q` with generator ratio `theta = a / b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CanonicalLine {
    a: FieldElement,
    b: FieldElement,
    theta: FieldElement,
}

/// Ascending `(b, a)`.
impl Ord for CanonicalLine {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.b, self.a).cmp(&(other.b, other.a))
    }
}

impl PartialOrd for CanonicalLine {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl CanonicalLine {
    /// Canonical form of `alpha (theta + F_q)`.
    pub fn from_params(
        ctx: &FieldContext,
        alpha: FieldElement,
        theta: FieldElement,
    ) -> Result<Self, SearchError> {
        if alpha.is_zero() {
            return Err(FieldError::Zero("line scale").into());
        }
        if !ctx.is_generator(theta) {
            return Err(SearchError::NotGenerator(theta.index()));
        }
        let b = ctx
            .subfield()
            .iter()
            .filter(|s| !s.is_zero())
            .map(|&c| ctx.mul(alpha, c))
            .min()
            .expect("F_q^* is nonempty");
        let a = ctx
            .subfield()
            .iter()
            .map(|&s| ctx.mul(alpha, ctx.add(theta, s)))
            .min()
            .expect("F_q is nonempty");
        Ok(Self::from_canonical(ctx, a, b))
    }

    fn from_canonical(ctx: &FieldContext, a: FieldElement, b: FieldElement) -> Self {
        let theta = ctx.div(a, b).expect("direction is nonzero");
        CanonicalLine { a, b, theta }
    }

    pub fn a(&self) -> FieldElement {
        self.a
    }

    pub fn b(&self) -> FieldElement {
        self.b
    }

    pub fn theta(&self) -> FieldElement {
        self.theta
    }

    /// The `q` points `a + b x`, `x` in subfield order.
    pub fn points(&self, ctx: &FieldContext) -> Vec<FieldElement> {
        ctx.subfield()
            .iter()
            .map(|&s| ctx.add(self.a, ctx.mul(self.b, s)))
            .collect()
    }
}

const NOT_A_GENERATOR: u32 = u32::MAX;

/// The translate sets `theta + F_q` of all generators, each with the logs
/// of its points. Sets are numbered by ascending least-index member.
pub(crate) struct TranslateCosets {
    q: usize,
    reps: Vec<FieldElement>,
    logs: Vec<u32>,
    coset_of: Vec<u32>,
}

impl TranslateCosets {
    pub(crate) fn new(ctx: &FieldContext) -> Self {
        let q = ctx.q() as usize;
        let size = ctx.size() as usize;
        let log = ctx.log_table();
        let mut coset_of = vec![NOT_A_GENERATOR; size];
        let mut reps = Vec::new();
        let mut logs = Vec::new();
        for theta in ctx.elements() {
            let i = theta.index() as usize;
            if coset_of[i] != NOT_A_GENERATOR || !ctx.is_generator(theta) {
                continue;
            }
            let id = reps.len() as u32;
            reps.push(theta);
            for &s in ctx.subfield() {
                let pt = ctx.add(theta, s);
                coset_of[pt.index() as usize] = id;
                logs.push(log[pt.index() as usize]);
            }
        }
        TranslateCosets {
            q,
            reps,
            logs,
            coset_of,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.reps.len()
    }

    pub(crate) fn rep(&self, c: usize) -> FieldElement {
        self.reps[c]
    }

    pub(crate) fn logs(&self, c: usize) -> &[u32] {
        &self.logs[c * self.q..(c + 1) * self.q]
    }

    pub(crate) fn coset_of(&self, x: FieldElement) -> Option<usize> {
        match self.coset_of[x.index() as usize] {
            NOT_A_GENERATOR => None,
            c => Some(c as usize),
        }
    }

    /// One translate set per orbit of `theta + F_q -> c theta + F_q`,
    /// `c in F_q^*`.
    pub(crate) fn scaling_orbit_representatives(&self, ctx: &FieldContext) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for c in 0..self.len() {
            if seen[c] {
                continue;
            }
            out.push(c);
            for &s in ctx.subfield().iter().filter(|s| !s.is_zero()) {
                let image = ctx.mul(s, self.reps[c]);
                let id = self.coset_of(image).expect("scaling preserves generators");
                seen[id] = true;
            }
        }
        out
    }
}

/// Least-index representatives of `F_{q^n}^* / F_q^*`, ascending, with logs.
fn direction_classes(ctx: &FieldContext) -> Vec<(FieldElement, u32)> {
    let classes = ctx.group_order() / (ctx.q() - 1);
    let log = ctx.log_table();
    let mut rep = vec![FieldElement::ZERO; classes as usize];
    let mut found = 0u64;
    for x in ctx.nonzero_elements() {
        let l = log[x.index() as usize];
        let c = (u64::from(l) % classes) as usize;
        if rep[c].is_zero() {
            rep[c] = x;
            found += 1;
            if found == classes {
                break;
            }
        }
    }
    let mut out: Vec<(FieldElement, u32)> = rep
        .into_iter()
        .map(|b| (b, log[b.index() as usize]))
        .collect();
    out.sort_unstable();
    out
}

fn directions_for(ctx: &FieldContext, mode: Mode) -> Vec<(FieldElement, u32)> {
    match mode {
        Mode::Translate => vec![(FieldElement::ONE, 0)],
        Mode::Line => direction_classes(ctx),
    }
}

/// Least-index point of `b (theta + F_q)` given the logs of `theta + F_q`.
fn least_point(ctx: &FieldContext, log_b: u32, coset_logs: &[u32]) -> FieldElement {
    let n = ctx.group_order();
    let exp = ctx.exp_table();
    let idx = coset_logs
        .iter()
        .map(|&l| exp[((u64::from(log_b) + u64::from(l)) % n) as usize])
        .min()
        .expect("cosets are nonempty");
    ctx.element(u64::from(idx))
        .expect("table entries are valid")
}

fn lines_in_direction(
    ctx: &FieldContext,
    cosets: &TranslateCosets,
    b: FieldElement,
    log_b: u32,
) -> Vec<CanonicalLine> {
    let mut lines: Vec<CanonicalLine> = (0..cosets.len())
        .map(|c| CanonicalLine::from_canonical(ctx, least_point(ctx, log_b, cosets.logs(c)), b))
        .collect();
    lines.sort_unstable();
    lines
}

/// One canonical line per translate set: direction `1`, ascending offset.
pub fn canonical_translates(ctx: &FieldContext) -> impl Iterator<Item = CanonicalLine> + '_ {
    let cosets = TranslateCosets::new(ctx);
    (0..cosets.len())
        .map(move |c| CanonicalLine::from_canonical(ctx, cosets.rep(c), FieldElement::ONE))
}

/// Every line, exactly once, ascending in `(b, a)`.
pub fn canonical_lines(ctx: &FieldContext) -> impl Iterator<Item = CanonicalLine> + '_ {
    let cosets = TranslateCosets::new(ctx);
    direction_classes(ctx)
        .into_iter()
        .flat_map(move |(b, log_b)| lines_in_direction(ctx, &cosets, b, log_b))
}

/// Number of r-primitive points on `line`, by direct order tests.
pub fn line_hit_count(
    ctx: &FieldContext,
    line: &CanonicalLine,
    r: u64,
) -> Result<u64, SearchError> {
    let mut hits = 0;
    for x in line.points(ctx) {
        if ctx.is_r_primitive(x, r)? {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Bitmap over logs: bit `l` set iff `gcd(l, q^n-1) = r`.
struct RPrimitiveBitmap {
    words: Vec<u64>,
}

impl RPrimitiveBitmap {
    fn new(group_order: u64, r: u64) -> Self {
        let mut words = vec![0u64; (group_order as usize).div_ceil(64)];
        let cofactor = group_order / r;
        for j in 0..cofactor {
            if j.gcd(&cofactor) == 1 {
                let l = (j * r) as usize;
                words[l / 64] |= 1 << (l % 64);
            }
        }
        RPrimitiveBitmap { words }
    }

    #[inline]
    fn get(&self, l: u64) -> bool {
        self.words[(l / 64) as usize] >> (l % 64) & 1 == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Count every point of every line instead of stopping at the first hit.
    pub full_counts: bool,
    pub max_exceptions: usize,
    /// Run on the calling thread only.
    pub sequential: bool,
    /// Record wall-clock time; when off, `elapsed_s` is reported as zero.
    pub timing: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            full_counts: false,
            max_exceptions: DEFAULT_MAX_EXCEPTIONS,
            sequential: false,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub q: u64,
    pub p: u64,
    pub k: u32,
    pub n: u32,
    pub r: u64,
    pub mode: Mode,
    pub pass: bool,
    pub lines_checked: u64,
    /// Exact minimum when `min_count_exact`; otherwise 0 on failure and the
    /// lower bound 1 on success.
    pub min_count: u64,
    pub min_count_exact: bool,
    pub exception_count: u64,
    /// The first `max_exceptions` failing lines in `(b, a)` order.
    pub exceptions: Vec<CanonicalLine>,
    pub elapsed_s: f64,
}

struct SweepAcc {
    min_count: u64,
    exception_count: u64,
    exceptions: Vec<CanonicalLine>,
}

impl SweepAcc {
    fn empty() -> Self {
        SweepAcc {
            min_count: u64::MAX,
            exception_count: 0,
            exceptions: Vec::new(),
        }
    }

    fn merge(mut self, other: SweepAcc, cap: usize) -> Self {
        self.min_count = self.min_count.min(other.min_count);
        self.exception_count += other.exception_count;
        self.exceptions.extend(other.exceptions);
        self.exceptions.sort_unstable();
        self.exceptions.truncate(cap);
        self
    }
}

/// Exhaustively checks that every translate set (or line) of `ctx` holds an
/// r-primitive element.
pub fn verify_property(
    ctx: &FieldContext,
    r: u64,
    mode: Mode,
    opts: &VerifyOptions,
) -> Result<PropertyReport, SearchError> {
    let start = Instant::now();
    let n = ctx.group_order();
    if r == 0 || !n.is_multiple_of(r) {
        return Err(FieldError::NotDivisor {
            d: r,
            group_order: n,
        }
        .into());
    }
    let bitmap = RPrimitiveBitmap::new(n, r);
    let cosets = TranslateCosets::new(ctx);
    let directions = directions_for(ctx, mode);
    let cap = opts.max_exceptions;

    let acc = par::map_reduce(
        directions.len(),
        opts.sequential,
        SweepAcc::empty,
        |d| {
            let (b, log_b) = directions[d];
            let shift = u64::from(log_b);
            let mut acc = SweepAcc::empty();
            for c in 0..cosets.len() {
                let mut count = 0u64;
                for &l in cosets.logs(c) {
                    let mut v = shift + u64::from(l);
                    if v >= n {
                        v -= n;
                    }
                    if bitmap.get(v) {
                        count += 1;
                        if !opts.full_counts {
                            break;
                        }
                    }
                }
                acc.min_count = acc.min_count.min(count);
                if count == 0 {
                    acc.exception_count += 1;
                    if acc.exceptions.len() < cap {
                        let a = least_point(ctx, log_b, cosets.logs(c));
                        acc.exceptions
                            .push(CanonicalLine::from_canonical(ctx, a, b));
                    }
                }
            }
            acc.exceptions.sort_unstable();
            acc
        },
        |x, y| x.merge(y, cap),
    );

    let lines_checked = directions.len() as u64 * cosets.len() as u64;
    let min_count = if lines_checked == 0 { 0 } else { acc.min_count };
    Ok(PropertyReport {
        q: ctx.q(),
        p: ctx.p(),
        k: ctx.k(),
        n: ctx.n(),
        r,
        mode,
        pass: acc.exception_count == 0,
        lines_checked,
        min_count,
        min_count_exact: opts.full_counts,
        exception_count: acc.exception_count,
        exceptions: acc.exceptions,
        elapsed_s: if opts.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSummary {
    pub n: u32,
    pub r: u64,
    pub mode: Mode,
    pub q_lo: u64,
    pub q_hi: u64,
    pub fields_checked: usize,
    pub failing: Vec<u64>,
    /// Largest failing `q` in the scanned range; not a claim about the
    /// true threshold.
    pub largest_failing_q: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub reports: Vec<PropertyReport>,
    pub summary: ScanSummary,
}

/// Prime powers `q` in `[q_lo, q_hi]` with `r | q^n - 1`.
pub fn eligible_prime_powers(
    n: u32,
    r: u64,
    q_lo: u64,
    q_hi: u64,
) -> Result<Vec<arith::PrimePower>, SearchError> {
    let mut out = Vec::new();
    for pp in arith::prime_powers_in(q_lo, q_hi) {
        let order = rstruct::group_order_of(pp.q, n)?;
        if r != 0 && order % r == 0 {
            out.push(pp);
        }
    }
    Ok(out)
}

/// Verifies every eligible prime power in `[q_lo, q_hi]`, ascending.
pub fn scan(
    n: u32,
    r: u64,
    q_lo: u64,
    q_hi: u64,
    mode: Mode,
    opts: &VerifyOptions,
) -> Result<ScanResult, SearchError> {
    if q_lo > q_hi {
        return Err(SearchError::EmptyRange { lo: q_lo, hi: q_hi });
    }
    if n < 2 {
        return Err(FieldError::BadDegree { k: 1, n }.into());
    }
    let cap = field_size_cap()?;
    let eligible = eligible_prime_powers(n, r, q_lo, q_hi)?;
    if let Some(pp) = eligible
        .iter()
        .find(|pp| pp.q.checked_pow(n).is_none_or(|s| s > cap))
    {
        return Err(SearchError::ScanSizeCap { q: pp.q, n, cap });
    }
    let mut reports = Vec::with_capacity(eligible.len());
    for pp in &eligible {
        let ctx = FieldContext::build(pp.p, pp.k, n)?;
        reports.push(verify_property(&ctx, r, mode, opts)?);
    }
    let failing: Vec<u64> = reports.iter().filter(|r| !r.pass).map(|r| r.q).collect();
    let summary = ScanSummary {
        n,
        r,
        mode,
        q_lo,
        q_hi,
        fields_checked: reports.len(),
        largest_failing_q: failing.last().copied(),
        failing,
    };
    Ok(ScanResult { reports, summary })
}
