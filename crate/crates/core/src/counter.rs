//! Rational point counting for models over `F_{p^k}`.
//!
//! Projective factors are split into the usual disjoint pivot charts (first
//! nonzero coordinate scaled to 1, earlier coordinates 0), so every
//! projective point is counted exactly once. Within a chart the counter
//! works by recursive specialization with three shortcuts that carry all of
//! the load in practice:
//!
//! * a system with no remaining equations contributes `q^{#free}` directly;
//! * an equation of the shape `c*v + b` with `c` a nonzero constant
//!   determines `v`, so `v` is eliminated by substituting `-b/c`;
//! * when only one variable is left in play, the equations are scanned as
//!   dense univariate polynomials.
//!
//! Models whose equations all vanish mod p never build field tables at all;
//! their counts come from the closed form for products of affine and
//! projective spaces. A step budget bounds the total specialization work,
//! and counts can be cached on disk keyed by a hash of the canonical model
//! text.

use crate::fastfield::FastField;
use crate::ffield::{self, FieldError};
use crate::geomdsl::{self, FactorKind, Model, Polynomial, Severity};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum CountError {
    #[error("enumeration budget of {0} steps exceeded")]
    BudgetExceeded(u64),
    #[error("model '{name}' failed validation: {detail}")]
    InvalidModel { name: String, detail: String },
    #[error("count exceeds the supported integer range")]
    Overflow,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("cache at {path}: {detail}")]
    Cache { path: String, detail: String },
}

#[derive(Debug, Clone)]
pub struct CountOpts {
    /// Upper bound on specialization steps for one call.
    pub budget: u64,
    pub parallel: bool,
    /// When set, counts are read from and written to `counts.json` here.
    pub cache_dir: Option<PathBuf>,
}

impl Default for CountOpts {
    fn default() -> Self {
        CountOpts { budget: DEFAULT_BUDGET, parallel: true, cache_dir: None }
    }
}

/// Counts over the tower `F_{p^k} .. F_{p^{k r_max}}`; `counts[r-1]` is the
/// count over `F_{p^{k r}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub p: u64,
    pub k: u32,
    pub counts: Vec<u128>,
}

impl CountTable {
    /// Base field size `p^k`.
    pub fn q(&self) -> u128 {
        (self.p as u128).pow(self.k)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessReport {
    pub p: u64,
    pub k: u32,
    pub smooth: bool,
    /// Ambient chart tuples examined (open cover, so overlaps recount).
    pub points_scanned: u64,
    /// Chart-point incidences that satisfied every equation.
    pub variety_incidences: u64,
    /// Up to eight witnesses, each as `var=index` coordinates.
    pub singular_points: Vec<String>,
}

struct Budget {
    limit: u64,
    used: AtomicU64,
}

impl Budget {
    fn new(limit: u64) -> Budget {
        Budget { limit, used: AtomicU64::new(0) }
    }

    fn spend(&self, n: u64) -> Result<(), CountError> {
        let prev = self.used.fetch_add(n, Ordering::Relaxed);
        if prev.saturating_add(n) > self.limit {
            return Err(CountError::BudgetExceeded(self.limit));
        }
        Ok(())
    }

    fn spend_big(&self, n: u128) -> Result<(), CountError> {
        if n > u64::MAX as u128 {
            return Err(CountError::BudgetExceeded(self.limit));
        }
        self.spend(n as u64)
    }
}

/// Hash of the canonical model text with the name stripped, so renaming a
/// model does not invalidate cached counts.
pub fn model_hash(m: &Model) -> String {
    let mut anon = m.clone();
    anon.name = String::new();
    let mut h = Sha256::new();
    h.update(geomdsl::print_model(&anon).as_bytes());
    format!("{:x}", h.finalize())
}

fn ensure_valid(m: &Model) -> Result<(), CountError> {
    let errs: Vec<String> = geomdsl::validate(m)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.message)
        .collect();
    if errs.is_empty() {
        Ok(())
    } else {
        Err(CountError::InvalidModel { name: m.name.clone(), detail: errs.join("; ") })
    }
}

pub fn count_points(m: &Model, p: u64, k: u32, opts: &CountOpts) -> Result<u128, CountError> {
    ensure_valid(m)?;
    if !ffield::is_prime(p) {
        return Err(FieldError::NotPrime(p).into());
    }
    if k < 1 {
        return Err(FieldError::BadDegree(k).into());
    }
    let hash = model_hash(m);
    if let Some(dir) = &opts.cache_dir {
        if let Some(c) = cache_get(dir, &hash, p, k) {
            return Ok(c);
        }
    }
    let count = count_points_uncached(m, p, k, opts)?;
    if let Some(dir) = &opts.cache_dir {
        cache_put(dir, &hash, p, k, count)?;
    }
    Ok(count)
}

pub fn count_tower(
    m: &Model,
    p: u64,
    k: u32,
    r_max: u32,
    opts: &CountOpts,
) -> Result<CountTable, CountError> {
    let counts = (1..=r_max)
        .map(|r| count_points(m, p, k * r, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CountTable { p, k, counts })
}

fn qpow(q: u128, e: usize) -> Result<u128, CountError> {
    u32::try_from(e)
        .ok()
        .and_then(|e| q.checked_pow(e))
        .ok_or(CountError::Overflow)
}

fn count_points_uncached(m: &Model, p: u64, k: u32, opts: &CountOpts) -> Result<u128, CountError> {
    let budget = Budget::new(opts.budget);
    let q = (p as u128).checked_pow(k).ok_or(CountError::Overflow)?;
    let active: Vec<&Polynomial> =
        m.equations.iter().filter(|eq| !vanishes_mod_p(eq, p)).collect();
    if active.is_empty() {
        // Pure ambient count; no field tables needed, so arbitrarily deep
        // extensions stay cheap.
        budget.spend(1)?;
        return closed_form_ambient(m, q);
    }
    let ff = FastField::new(p, k)?;
    let nvars = m.nvars();
    let base_eqs: Vec<FPoly> = active.iter().map(|eq| FPoly::from_big(eq, &ff)).collect();

    let mut total = 0u128;
    for chart in pivot_charts(m) {
        let mut eqs = base_eqs.clone();
        for (v, val) in &chart.fixed {
            for e in eqs.iter_mut() {
                *e = e.subst_value(*v, *val, &ff);
            }
        }
        let free: Vec<usize> = (0..nvars)
            .filter(|v| !chart.fixed.iter().any(|(fv, _)| fv == v))
            .collect();
        let chart_count = count_rec(&ff, eqs, free, &budget, opts.parallel)?;
        total = total.checked_add(chart_count).ok_or(CountError::Overflow)?;
    }
    Ok(total)
}

fn vanishes_mod_p(eq: &Polynomial, p: u64) -> bool {
    let pb = BigInt::from(p);
    eq.iter_terms().all(|(_, c)| c.mod_floor(&pb) == BigInt::from(0))
}

fn closed_form_ambient(m: &Model, q: u128) -> Result<u128, CountError> {
    let mut total = 1u128;
    for f in &m.ambient {
        let factor = match f.kind {
            FactorKind::Affine => qpow(q, f.dim as usize)?,
            FactorKind::Projective => {
                let mut s = 0u128;
                for l in 0..=f.dim as usize {
                    s = s.checked_add(qpow(q, l)?).ok_or(CountError::Overflow)?;
                }
                s
            }
        };
        total = total.checked_mul(factor).ok_or(CountError::Overflow)?;
    }
    Ok(total)
}

struct Chart {
    /// (flat variable index, value) assignments made by this chart.
    fixed: Vec<(usize, u32)>,
}

fn factor_ranges(m: &Model) -> Vec<(FactorKind, std::ops::Range<usize>)> {
    let mut out = Vec::new();
    let mut start = 0usize;
    for (f, g) in m.ambient.iter().zip(&m.var_groups) {
        out.push((f.kind, start..start + g.len()));
        start += g.len();
    }
    out
}

/// Disjoint pivot charts: per projective factor, coordinates before the
/// pivot are 0 and the pivot is 1. Affine variables stay free.
fn pivot_charts(m: &Model) -> Vec<Chart> {
    let proj: Vec<std::ops::Range<usize>> = factor_ranges(m)
        .into_iter()
        .filter(|(kind, _)| *kind == FactorKind::Projective)
        .map(|(_, r)| r)
        .collect();
    let mut charts = vec![Chart { fixed: Vec::new() }];
    for range in proj {
        let mut next = Vec::new();
        for chart in charts {
            for pivot in 0..range.len() {
                let mut fixed = chart.fixed.clone();
                for v in range.start..range.start + pivot {
                    fixed.push((v, 0));
                }
                fixed.push((range.start + pivot, 1));
                next.push(Chart { fixed });
            }
        }
        charts = next;
    }
    charts
}

/// Open affine cover used for smoothness checks: one coordinate of each
/// projective factor is set to 1, the rest stay free, so charts overlap.
fn open_charts(m: &Model) -> Vec<Chart> {
    let proj: Vec<std::ops::Range<usize>> = factor_ranges(m)
        .into_iter()
        .filter(|(kind, _)| *kind == FactorKind::Projective)
        .map(|(_, r)| r)
        .collect();
    let mut charts = vec![Chart { fixed: Vec::new() }];
    for range in proj {
        let mut next = Vec::new();
        for chart in charts {
            for unit in 0..range.len() {
                let mut fixed = chart.fixed.clone();
                fixed.push((range.start + unit, 1));
                next.push(Chart { fixed });
            }
        }
        charts = next;
    }
    charts
}

// ---------------------------------------------------------------------------
// Specialized sparse polynomials over a FastField.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct FPoly {
    /// (coefficient index, exponents over all model variables), normalized:
    /// distinct exponent vectors, no zero coefficients.
    terms: Vec<(u32, Vec<u16>)>,
}

impl FPoly {
    fn from_big(eq: &Polynomial, ff: &FastField) -> FPoly {
        let pb = BigInt::from(ff.p());
        let terms = eq
            .iter_terms()
            .filter_map(|(exps, c)| {
                let r = c.mod_floor(&pb).to_u64().expect("residue fits") as u32;
                (r != 0).then(|| (r, exps.to_vec()))
            })
            .collect();
        FPoly { terms }
    }

    fn normalize(terms: Vec<(u32, Vec<u16>)>, ff: &FastField) -> FPoly {
        let mut map: BTreeMap<Vec<u16>, u32> = BTreeMap::new();
        for (c, e) in terms {
            let slot = map.entry(e).or_insert(0);
            *slot = ff.add(*slot, c);
        }
        FPoly {
            terms: map.into_iter().filter(|&(_, c)| c != 0).map(|(e, c)| (c, e)).collect(),
        }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn as_constant(&self) -> Option<u32> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(c, e)] if e.iter().all(|&x| x == 0) => Some(*c),
            _ => None,
        }
    }

    fn subst_value(&self, v: usize, val: u32, ff: &FastField) -> FPoly {
        let terms = self
            .terms
            .iter()
            .filter_map(|(c, e)| {
                let c2 = ff.mul(*c, ff.pow(val, e[v] as u64));
                if c2 == 0 {
                    return None;
                }
                let mut e2 = e.clone();
                e2[v] = 0;
                Some((c2, e2))
            })
            .collect();
        FPoly::normalize(terms, ff)
    }

    fn add(&self, other: &FPoly, ff: &FastField) -> FPoly {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FPoly::normalize(terms, ff)
    }

    fn mul(&self, other: &FPoly, ff: &FastField) -> FPoly {
        let mut terms = Vec::new();
        for (ca, ea) in &self.terms {
            for (cb, eb) in &other.terms {
                let c = ff.mul(*ca, *cb);
                if c == 0 {
                    continue;
                }
                let e: Vec<u16> = ea
                    .iter()
                    .zip(eb)
                    .map(|(&x, &y)| {
                        x.checked_add(y).expect("monomial degree exceeds supported range")
                    })
                    .collect();
                terms.push((c, e));
            }
        }
        FPoly::normalize(terms, ff)
    }

    fn pow(&self, e: u16, ff: &FastField, nvars: usize) -> FPoly {
        let mut acc = FPoly { terms: vec![(1, vec![0u16; nvars])] };
        for _ in 0..e {
            acc = acc.mul(self, ff);
        }
        acc
    }

    fn scale(&self, s: u32, ff: &FastField) -> FPoly {
        if s == 0 {
            return FPoly { terms: Vec::new() };
        }
        FPoly {
            terms: self.terms.iter().map(|(c, e)| (ff.mul(*c, s), e.clone())).collect(),
        }
    }

    /// Substitutes the polynomial `g` (which must not involve `v`) for `v`.
    fn subst_poly(&self, v: usize, g: &FPoly, ff: &FastField, nvars: usize) -> FPoly {
        let mut acc = FPoly { terms: Vec::new() };
        for (c, e) in &self.terms {
            let mut base = e.clone();
            let ev = base[v];
            base[v] = 0;
            let mut part = FPoly { terms: vec![(*c, base)] };
            if ev > 0 {
                part = part.mul(&g.pow(ev, ff, nvars), ff);
            }
            acc = acc.add(&part, ff);
        }
        acc
    }

    /// If the polynomial is `c*v + b` with `c` a nonzero constant and `b`
    /// free of `v`, returns `(c, b)`.
    fn linear_coeff(&self, v: usize) -> Option<(u32, FPoly)> {
        let mut coeff = None;
        let mut rest = Vec::new();
        for (c, e) in &self.terms {
            if e[v] == 0 {
                rest.push((*c, e.clone()));
                continue;
            }
            if e[v] != 1 || e.iter().enumerate().any(|(i, &x)| i != v && x != 0) {
                return None;
            }
            if coeff.replace(*c).is_some() {
                // Normalization merged like terms, so two v-terms cannot occur.
                unreachable!("normalized polynomial has merged terms");
            }
        }
        coeff.map(|c| (c, FPoly { terms: rest }))
    }

    fn used_vars(&self, into: &mut BTreeSet<usize>) {
        for (_, e) in &self.terms {
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    into.insert(i);
                }
            }
        }
    }

    fn eval(&self, vals: &[u32], ff: &FastField) -> u32 {
        let mut acc = 0u32;
        for (c, e) in &self.terms {
            let mut t = *c;
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    t = ff.mul(t, ff.pow(vals[i], x as u64));
                }
            }
            acc = ff.add(acc, t);
        }
        acc
    }
}

fn count_rec(
    ff: &FastField,
    mut eqs: Vec<FPoly>,
    mut free: Vec<usize>,
    budget: &Budget,
    par: bool,
) -> Result<u128, CountError> {
    let q = ff.q() as u128;
    'simplify: loop {
        eqs.retain(|e| !e.is_zero());
        for e in &eqs {
            if let Some(c) = e.as_constant() {
                if c != 0 {
                    return Ok(0);
                }
            }
        }
        if eqs.is_empty() {
            return qpow(q, free.len());
        }
        let nvars = eqs[0].terms[0].1.len();
        for i in 0..eqs.len() {
            for (fi, &v) in free.iter().enumerate() {
                if let Some((c, b)) = eqs[i].linear_coeff(v) {
                    // v is determined by the other variables; substitute it
                    // away instead of enumerating.
                    budget.spend(1)?;
                    let g = b.scale(ff.neg(ff.inv(c)), ff);
                    eqs.swap_remove(i);
                    free.remove(fi);
                    for e in eqs.iter_mut() {
                        *e = e.subst_poly(v, &g, ff, nvars);
                    }
                    continue 'simplify;
                }
            }
        }
        break;
    }

    let mut used = BTreeSet::new();
    for e in &eqs {
        e.used_vars(&mut used);
    }
    debug_assert!(!used.is_empty(), "non-constant equations use variables");

    if used.len() == 1 {
        let v = *used.iter().next().unwrap();
        budget.spend(q as u64)?;
        let dense: Vec<Vec<u32>> = eqs
            .iter()
            .map(|e| {
                let deg = e.terms.iter().map(|(_, x)| x[v]).max().unwrap_or(0) as usize;
                let mut cs = vec![0u32; deg + 1];
                for (c, x) in &e.terms {
                    cs[x[v] as usize] = ff.add(cs[x[v] as usize], *c);
                }
                cs
            })
            .collect();
        let mut sols = 0u128;
        for x in 0..ff.q() {
            let all_zero = dense.iter().all(|cs| {
                let mut acc = 0u32;
                for &c in cs.iter().rev() {
                    acc = ff.add(ff.mul(acc, x), c);
                }
                acc == 0
            });
            if all_zero {
                sols += 1;
            }
        }
        return sols.checked_mul(qpow(q, free.len() - 1)?).ok_or(CountError::Overflow);
    }

    // Branch on the variable hitting the most equations.
    let v = *used
        .iter()
        .max_by_key(|&&v| {
            let hits = eqs
                .iter()
                .filter(|e| e.terms.iter().any(|(_, x)| x[v] > 0))
                .count();
            (hits, std::cmp::Reverse(v))
        })
        .unwrap();
    let rest: Vec<usize> = free.iter().copied().filter(|&x| x != v).collect();

    let branch = |val: u32| -> Result<u128, CountError> {
        budget.spend(1)?;
        let next: Vec<FPoly> = eqs.iter().map(|e| e.subst_value(v, val, ff)).collect();
        count_rec(ff, next, rest.clone(), budget, false)
    };

    if par && free.len() >= 2 {
        (0..ff.q())
            .into_par_iter()
            .map(branch)
            .try_reduce(|| 0u128, |a, b| a.checked_add(b).ok_or(CountError::Overflow))
    } else {
        let mut total = 0u128;
        for val in 0..ff.q() {
            total = total.checked_add(branch(val)?).ok_or(CountError::Overflow)?;
        }
        Ok(total)
    }
}

// ---------------------------------------------------------------------------
// Smoothness scan.
// ---------------------------------------------------------------------------

/// Checks the Jacobian rank at every `F_{p^k}` point of the model across an
/// open affine cover. A full-rank Jacobian everywhere certifies the scanned
/// locus is smooth; any witness of lower rank marks the reduction as
/// singular, which downstream consumers treat as a bad prime.
pub fn smoothness_scan(
    m: &Model,
    p: u64,
    k: u32,
    opts: &CountOpts,
) -> Result<SmoothnessReport, CountError> {
    ensure_valid(m)?;
    let ff = FastField::new(p, k)?;
    let budget = Budget::new(opts.budget);
    let nvars = m.nvars();
    let names = m.flat_vars();

    let active: Vec<&Polynomial> =
        m.equations.iter().filter(|eq| !vanishes_mod_p(eq, p)).collect();
    let eqs: Vec<FPoly> = active.iter().map(|eq| FPoly::from_big(eq, &ff)).collect();
    let partials: Vec<Vec<FPoly>> = active
        .iter()
        .map(|eq| (0..nvars).map(|v| FPoly::from_big(&eq.partial(v), &ff)).collect())
        .collect();

    let mut report = SmoothnessReport {
        p,
        k,
        smooth: true,
        points_scanned: 0,
        variety_incidences: 0,
        singular_points: Vec::new(),
    };
    if active.is_empty() {
        // The model is a pure ambient space mod p; nothing to check.
        return Ok(report);
    }

    for chart in open_charts(m) {
        let free: Vec<usize> = (0..nvars)
            .filter(|v| !chart.fixed.iter().any(|(fv, _)| fv == v))
            .collect();
        let expected_rank: i64 = match m.expected_dim {
            Some(d) => free.len() as i64 - d as i64,
            None => active.len() as i64,
        };
        let chart_points = qpow(ff.q() as u128, free.len())?;
        budget.spend_big(chart_points)?;

        let mut vals = vec![0u32; nvars];
        for &(v, x) in &chart.fixed {
            vals[v] = x;
        }
        let mut digits = vec![0u32; free.len()];
        loop {
            for (d, &v) in digits.iter().zip(&free) {
                vals[v] = *d;
            }
            report.points_scanned = report.points_scanned.saturating_add(1);
            if eqs.iter().all(|e| e.eval(&vals, &ff) == 0) {
                report.variety_incidences = report.variety_incidences.saturating_add(1);
                let rows: Vec<Vec<u32>> = partials
                    .iter()
                    .map(|row| free.iter().map(|&v| row[v].eval(&vals, &ff)).collect())
                    .collect();
                if (matrix_rank(&ff, rows) as i64) != expected_rank {
                    report.smooth = false;
                    if report.singular_points.len() < 8 {
                        let desc = names
                            .iter()
                            .zip(&vals)
                            .map(|(n, v)| format!("{n}={v}"))
                            .collect::<Vec<_>>()
                            .join(", ");
                        if !report.singular_points.contains(&desc) {
                            report.singular_points.push(desc);
                        }
                    }
                }
            }
            // Mixed-radix odometer over the free variables.
            let mut pos = 0;
            loop {
                if pos == digits.len() {
                    break;
                }
                digits[pos] += 1;
                if digits[pos] < ff.q() {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == digits.len() {
                break;
            }
        }
    }
    Ok(report)
}

fn matrix_rank(ff: &FastField, mut rows: Vec<Vec<u32>>) -> usize {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0usize;
    for col in 0..ncols {
        let pivot = (rank..rows.len()).find(|&i| rows[i][col] != 0);
        let Some(pivot) = pivot else { continue };
        rows.swap(rank, pivot);
        let inv = ff.inv(rows[rank][col]);
        for i in rank + 1..rows.len() {
            if rows[i][col] != 0 {
                let factor = ff.mul(rows[i][col], inv);
                for c in col..ncols {
                    let s = ff.mul(factor, rows[rank][c]);
                    rows[i][c] = ff.sub(rows[i][c], s);
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

// ---------------------------------------------------------------------------
// Count cache.
// ---------------------------------------------------------------------------

const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize, Default)]
struct CacheFile {
    version: u32,
    entries: Vec<CacheEntry>,
}

#[derive(Serialize, Deserialize, Clone)]
struct CacheEntry {
    model: String,
    p: u64,
    k: u32,
    /// Decimal string; counts can exceed what JSON numbers carry exactly.
    count: String,
}

fn cache_file(dir: &Path) -> PathBuf {
    dir.join("counts.json")
}

fn cache_load(dir: &Path) -> CacheFile {
    // Unreadable or stale caches are treated as empty and rebuilt.
    match std::fs::read_to_string(cache_file(dir)) {
        Ok(text) => serde_json::from_str::<CacheFile>(&text)
            .ok()
            .filter(|c| c.version == CACHE_VERSION)
            .unwrap_or_default(),
        Err(_) => CacheFile::default(),
    }
}

fn cache_get(dir: &Path, hash: &str, p: u64, k: u32) -> Option<u128> {
    cache_load(dir)
        .entries
        .iter()
        .find(|e| e.model == hash && e.p == p && e.k == k)
        .and_then(|e| e.count.parse().ok())
}

fn cache_put(dir: &Path, hash: &str, p: u64, k: u32, count: u128) -> Result<(), CountError> {
    let io_err = |detail: String| CountError::Cache {
        path: cache_file(dir).display().to_string(),
        detail,
    };
    std::fs::create_dir_all(dir).map_err(|e| io_err(e.to_string()))?;
    let mut cache = cache_load(dir);
    cache.version = CACHE_VERSION;
    match cache
        .entries
        .iter_mut()
        .find(|e| e.model == hash && e.p == p && e.k == k)
    {
        Some(e) => e.count = count.to_string(),
        None => cache.entries.push(CacheEntry {
            model: hash.to_string(),
            p,
            k,
            count: count.to_string(),
        }),
    }
    cache.entries.sort_by(|a, b| (&a.model, a.p, a.k).cmp(&(&b.model, b.p, b.k)));
    let text = serde_json::to_string_pretty(&cache).map_err(|e| io_err(e.to_string()))?;
    // Atomic replace so concurrent readers never see partial writes.
    let tmp = dir.join(format!("counts.json.tmp-{}", std::process::id()));
    std::fs::write(&tmp, text).map_err(|e| io_err(e.to_string()))?;
    std::fs::rename(&tmp, cache_file(dir)).map_err(|e| io_err(e.to_string()))?;
    Ok(())
}
