//! p-adic absolute values and volumes at fixed working precision.
//!
//! Two integration routes are provided and deliberately kept independent:
//!
//! * [`integrate_gauge`] evaluates the volume of an affine model's integral
//!   points against its gauge charts exactly, one residue disk per mod-p
//!   point. A disk contributes `p^{-n}` once the chart's Jacobian minor and
//!   numerator are both units there; anything else is an error, never a
//!   silent approximation.
//! * [`integrate_abs`] and friends bracket integrals of `|f|_p` by adaptive
//!   cell subdivision at precision `N`: a cell either pins the valuation of
//!   `f` exactly, splits, or bottoms out contributing `[0, p^{-N}]` times
//!   its measure. The result is a hard interval, and deeper precision only
//!   ever shrinks it.
//!
//! Working precision defaults to `N = 4`: scalars are residues mod `p^N`
//! and a vanishing residue means "zero to precision", whose absolute value
//! is only bounded above, not known.

use crate::ffield;
use crate::geomdsl::{self, FactorKind, Model, Polynomial, Severity};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub const DEFAULT_PRECISION: u32 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum PadicError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("precision p^N = {p}^{n} exceeds the supported scalar range")]
    PrecisionTooLarge { p: u64, n: u32 },
    #[error("model '{name}' failed validation: {detail}")]
    InvalidModel { name: String, detail: String },
    #[error("gauge integration works on affine models only")]
    NotAffine,
    #[error("model declares no dimension, which gauge measures need")]
    MissingDim,
    #[error("model has no gauge chart")]
    MissingGauge,
    #[error("{eqs} equations cannot present codimension {codim}")]
    WrongCodim { eqs: usize, codim: usize },
    #[error("no gauge chart has a unit Jacobian minor on the disk at {point}")]
    NoUsableChart { point: String },
    #[error("gauge numerator of chart '{chart}' is not a unit on the disk at {point}")]
    NonUnitNumerator { chart: String, point: String },
    #[error("denominator of the rational input is divisible by p = {0}")]
    NonUnitDenominator(u64),
    #[error("cell budget of {0} exceeded; integrand is too degenerate at this precision")]
    CellBudget(u64),
    #[error("integrand is built over {got} variables, expected {expected}")]
    WrongArity { got: usize, expected: usize },
}

// ---------------------------------------------------------------------------
// Exact absolute value on Q.
// ---------------------------------------------------------------------------

/// Valuation of a nonzero rational at `p`; `None` for zero.
pub fn padic_val(p: u64, x: &BigRational) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let count = |mut n: BigInt| -> i64 {
        let pb = BigInt::from(p);
        let mut v = 0i64;
        while (&n % &pb).is_zero() {
            n /= &pb;
            v += 1;
        }
        v
    };
    Some(count(x.numer().abs()) - count(x.denom().abs()))
}

/// `|x|_p = p^{-v(x)}`, with `|0|_p = 0`, exactly.
pub fn padic_abs(p: u64, x: &BigRational) -> BigRational {
    match padic_val(p, x) {
        None => BigRational::zero(),
        Some(v) => power_of_p(p, -v),
    }
}

fn power_of_p(p: u64, e: i64) -> BigRational {
    let pow = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(pow)
    } else {
        BigRational::new(BigInt::one(), pow)
    }
}

// ---------------------------------------------------------------------------
// Scalars at working precision.
// ---------------------------------------------------------------------------

/// What a finite-precision residue reveals about a valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Exact(u32),
    /// Residue vanishes mod `p^N`: all that is known is `v >= N`.
    AtLeast(u32),
}

/// An absolute value that may only be an upper bound.
#[derive(Debug, Clone, PartialEq)]
pub enum PAdicAbs {
    Exact(BigRational),
    UpperBound(BigRational),
}

/// A residue class mod `p^N` standing in for an element of `Z_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicScalar {
    p: u64,
    precision: u32,
    residue: u128,
}

fn check_precision(p: u64, n: u32) -> Result<u128, PadicError> {
    if !ffield::is_prime(p) {
        return Err(PadicError::NotPrime(p));
    }
    (p as u128)
        .checked_pow(n)
        .filter(|&m| m <= 1 << 62 && n >= 1)
        .ok_or(PadicError::PrecisionTooLarge { p, n })
}

impl PAdicScalar {
    pub fn from_bigint(p: u64, precision: u32, value: &BigInt) -> Result<PAdicScalar, PadicError> {
        let m = check_precision(p, precision)?;
        let mb = BigInt::from(m);
        let r = ((value % &mb) + &mb) % &mb;
        Ok(PAdicScalar { p, precision, residue: r.to_u128().expect("reduced residue fits") })
    }

    /// Embeds a rational with denominator prime to `p`.
    pub fn from_rational(
        p: u64,
        precision: u32,
        value: &BigRational,
    ) -> Result<PAdicScalar, PadicError> {
        let m = check_precision(p, precision)?;
        let mb = BigInt::from(m);
        let den = ((value.denom() % &mb) + &mb) % &mb;
        let den = den.to_u128().expect("reduced residue fits");
        if den % p as u128 == 0 {
            return Err(PadicError::NonUnitDenominator(p));
        }
        let num = PAdicScalar::from_bigint(p, precision, value.numer())?;
        let inv = inv_mod(den, m);
        Ok(PAdicScalar { p, precision, residue: num.residue * inv % m })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn residue(&self) -> u128 {
        self.residue
    }

    fn modulus(&self) -> u128 {
        (self.p as u128).pow(self.precision)
    }

    fn assert_compatible(&self, other: &PAdicScalar) {
        assert_eq!(
            (self.p, self.precision),
            (other.p, other.precision),
            "scalars live at different primes or precisions"
        );
    }

    pub fn add(&self, other: &PAdicScalar) -> PAdicScalar {
        self.assert_compatible(other);
        PAdicScalar { residue: (self.residue + other.residue) % self.modulus(), ..*self }
    }

    pub fn sub(&self, other: &PAdicScalar) -> PAdicScalar {
        self.assert_compatible(other);
        let m = self.modulus();
        PAdicScalar { residue: (self.residue + m - other.residue) % m, ..*self }
    }

    pub fn mul(&self, other: &PAdicScalar) -> PAdicScalar {
        self.assert_compatible(other);
        PAdicScalar { residue: self.residue * other.residue % self.modulus(), ..*self }
    }

    pub fn valuation(&self) -> Valuation {
        match val_of_residue(self.residue, self.p, self.precision) {
            Some(v) => Valuation::Exact(v),
            None => Valuation::AtLeast(self.precision),
        }
    }

    pub fn abs(&self) -> PAdicAbs {
        match self.valuation() {
            Valuation::Exact(v) => PAdicAbs::Exact(power_of_p(self.p, -(v as i64))),
            Valuation::AtLeast(n) => PAdicAbs::UpperBound(power_of_p(self.p, -(n as i64))),
        }
    }
}

/// Valuation of a residue `r` mod `p^cap`; `None` when `r = 0` there.
fn val_of_residue(r: u128, p: u64, cap: u32) -> Option<u32> {
    if r == 0 {
        return None;
    }
    let mut v = 0u32;
    let mut r = r;
    while r % p as u128 == 0 {
        r /= p as u128;
        v += 1;
    }
    debug_assert!(v < cap);
    Some(v)
}

fn inv_mod(a: u128, m: u128) -> u128 {
    // Extended Euclid; caller guarantees gcd(a, m) = 1.
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1);
    s0.rem_euclid(m as i128) as u128
}

// ---------------------------------------------------------------------------
// Interval results.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralBound {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl IntegralBound {
    pub fn exact(v: BigRational) -> IntegralBound {
        IntegralBound { lo: v.clone(), hi: v }
    }

    pub fn zero() -> IntegralBound {
        IntegralBound::exact(BigRational::zero())
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        self.lo <= *v && *v <= self.hi
    }

    pub fn intersects(&self, other: &IntegralBound) -> bool {
        self.lo.clone().max(other.lo.clone()) <= self.hi.clone().min(other.hi.clone())
    }

    /// True when `self` is contained in `other`.
    pub fn within(&self, other: &IntegralBound) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    fn add_assign(&mut self, other: &IntegralBound) {
        self.lo += &other.lo;
        self.hi += &other.hi;
    }
}

#[derive(Debug, Clone)]
pub struct PadicOpts {
    /// Working precision `N`; scalars are classes mod `p^N`.
    pub precision: u32,
    /// Cap on examined cells before giving up on a degenerate integrand.
    pub max_cells: u64,
}

impl Default for PadicOpts {
    fn default() -> Self {
        PadicOpts { precision: DEFAULT_PRECISION, max_cells: 1 << 22 }
    }
}

/// Lower bound on a coordinate valuation: `(variable, minimum)` requires
/// `v(x_i) >= minimum`, carving out sets like `p Z_p`.
pub type ValConstraint = (usize, u32);

// ---------------------------------------------------------------------------
// Adaptive cell integration over Z_p^m.
// ---------------------------------------------------------------------------

struct CellAcc {
    p: u64,
    n: u32,
    max_cells: u64,
    cells: u64,
    lo: BigRational,
    hi: BigRational,
}

impl CellAcc {
    fn new(p: u64, n: u32, max_cells: u64) -> CellAcc {
        CellAcc {
            p,
            n,
            max_cells,
            cells: 0,
            lo: BigRational::zero(),
            hi: BigRational::zero(),
        }
    }

    fn charge(&mut self) -> Result<(), PadicError> {
        self.cells += 1;
        if self.cells > self.max_cells {
            return Err(PadicError::CellBudget(self.max_cells));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Tri {
    True,
    False,
    Unknown,
}

fn constraint_status(center: &[u128], level: u32, p: u64, cons: &[ValConstraint]) -> Tri {
    let mut out = Tri::True;
    for &(var, min_v) in cons {
        match val_of_residue(center[var], p, level.max(1)) {
            Some(v) => {
                // Valuation pinned below the level, hence exact on the cell.
                if v < level {
                    if v < min_v {
                        return Tri::False;
                    }
                } else if level < min_v {
                    out = Tri::Unknown;
                }
            }
            None => {
                // v >= level everywhere on the cell.
                if level < min_v {
                    out = Tri::Unknown;
                }
            }
        }
    }
    out
}

/// Brackets `int_{Z_p^m} |f|_p` over the cells satisfying the constraints.
pub fn integrate_abs_region(
    p: u64,
    opts: &PadicOpts,
    f: &Polynomial,
    region: &[ValConstraint],
) -> Result<IntegralBound, PadicError> {
    let n = opts.precision;
    check_precision(p, n)?;
    let m = f.nvars();
    for &(var, _) in region {
        if var >= m {
            return Err(PadicError::WrongArity { got: var, expected: m });
        }
    }
    if m == 0 {
        let c = BigRational::from_integer(f.constant_term());
        return Ok(IntegralBound::exact(padic_abs(p, &c)));
    }
    if f.is_zero() {
        return Ok(IntegralBound::zero());
    }
    // Content divisible by p^N: nothing distinguishes the integrand from 0
    // at this precision.
    let pn = BigInt::from(p).pow(n);
    if f.iter_terms().all(|(_, c)| (c % &pn).is_zero()) {
        return Ok(IntegralBound { lo: BigRational::zero(), hi: power_of_p(p, -(n as i64)) });
    }

    let mut acc = CellAcc::new(p, n, opts.max_cells);
    plain_cell(&mut acc, f, &mut vec![0u128; m], 0, region)?;
    Ok(IntegralBound { lo: acc.lo, hi: acc.hi })
}

pub fn integrate_abs(
    p: u64,
    opts: &PadicOpts,
    f: &Polynomial,
) -> Result<IntegralBound, PadicError> {
    integrate_abs_region(p, opts, f, &[])
}

fn cell_measure(p: u64, m: usize, level: u32) -> BigRational {
    power_of_p(p, -((m as i64) * level as i64))
}

fn plain_cell(
    acc: &mut CellAcc,
    f: &Polynomial,
    center: &mut Vec<u128>,
    level: u32,
    region: &[ValConstraint],
) -> Result<(), PadicError> {
    acc.charge()?;
    let p = acc.p;
    let m = center.len();
    let measure = cell_measure(p, m, level);

    let status = constraint_status(center, level, p, region);
    if status == Tri::False {
        return Ok(());
    }

    // Valuation of f on the cell, when the center pins it down.
    let f_val = if level == 0 {
        None
    } else {
        let modulus = (p as u128).pow(level);
        val_of_residue(f.eval_mod(center, modulus), p, level)
    };

    let refine = |acc: &mut CellAcc, center: &mut Vec<u128>| -> Result<(), PadicError> {
        let step = (p as u128).pow(level);
        let mut digits = vec![0u64; m];
        loop {
            for (i, &d) in digits.iter().enumerate() {
                center[i] += step * d as u128;
            }
            plain_cell(acc, f, center, level + 1, region)?;
            for (i, &d) in digits.iter().enumerate() {
                center[i] -= step * d as u128;
            }
            let mut pos = 0;
            while pos < m {
                digits[pos] += 1;
                if digits[pos] < p {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == m {
                return Ok(());
            }
        }
    };

    match (status, f_val) {
        (Tri::Unknown, _) if level < acc.n => refine(acc, center),
        (Tri::Unknown, v) => {
            // Bottom of the precision; the cell may or may not belong to
            // the region, so only the upper bound moves.
            let cap = v.unwrap_or(acc.n).min(acc.n) as i64;
            acc.hi += measure * power_of_p(p, -cap);
            Ok(())
        }
        (Tri::True, Some(v)) => {
            let contrib = measure * power_of_p(p, -(v as i64));
            acc.lo += &contrib;
            acc.hi += contrib;
            Ok(())
        }
        (Tri::True, None) if level < acc.n => refine(acc, center),
        (Tri::True, None) => {
            // f vanishes to full precision here: |f| <= p^{-N}.
            acc.hi += measure * power_of_p(p, -(acc.n as i64));
            Ok(())
        }
        (Tri::False, _) => unreachable!("handled above"),
    }
}

// ---------------------------------------------------------------------------
// Gauge charts on affine models.
// ---------------------------------------------------------------------------

struct PreparedChart {
    id: String,
    /// Chart coordinates, then the solved coordinates, as flat indices.
    free: Vec<usize>,
    solved: Vec<usize>,
    /// det of the equations' Jacobian in the solved coordinates.
    minor: Polynomial,
    numerator: Polynomial,
}

struct GaugeSetup {
    nvars: usize,
    dim: usize,
    charts: Vec<PreparedChart>,
}

fn prepare_gauge(m: &Model) -> Result<GaugeSetup, PadicError> {
    let errs: Vec<String> = geomdsl::validate(m)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.message)
        .collect();
    if !errs.is_empty() {
        return Err(PadicError::InvalidModel { name: m.name.clone(), detail: errs.join("; ") });
    }
    if m.ambient.iter().any(|f| f.kind != FactorKind::Affine) {
        return Err(PadicError::NotAffine);
    }
    let Some(dim) = m.expected_dim else {
        return Err(PadicError::MissingDim);
    };
    if m.gauges.is_empty() {
        return Err(PadicError::MissingGauge);
    }
    let nvars = m.nvars();
    let codim = nvars - dim as usize;
    if m.equations.len() != codim {
        return Err(PadicError::WrongCodim { eqs: m.equations.len(), codim });
    }
    let flat = m.flat_vars();
    let mut charts = Vec::new();
    for g in &m.gauges {
        let free: Vec<usize> = g
            .coords
            .iter()
            .map(|c| flat.iter().position(|v| v == c).expect("validated coordinate"))
            .collect();
        let solved: Vec<usize> =
            (0..nvars).filter(|v| !free.contains(v)).collect();
        let jac: Vec<Vec<Polynomial>> = m
            .equations
            .iter()
            .map(|eq| solved.iter().map(|&v| eq.partial(v)).collect())
            .collect();
        charts.push(PreparedChart {
            id: g.id.clone(),
            free,
            solved,
            minor: det_poly(&jac, nvars),
            numerator: g.numerator.clone(),
        });
    }
    Ok(GaugeSetup { nvars, dim: dim as usize, charts })
}

/// Symbolic determinant by first-column Laplace expansion; fine for the
/// tiny matrices gauge charts produce.
fn det_poly(mat: &[Vec<Polynomial>], nvars: usize) -> Polynomial {
    let n = mat.len();
    if n == 0 {
        return Polynomial::constant(nvars, BigInt::one());
    }
    if n == 1 {
        return mat[0][0].clone();
    }
    let mut det = Polynomial::zero(nvars);
    for i in 0..n {
        if mat[i][0].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Polynomial>> = (0..n)
            .filter(|&r| r != i)
            .map(|r| mat[r][1..].to_vec())
            .collect();
        let sub = mat[i][0].mul(&det_poly(&minor, nvars));
        det = if i % 2 == 0 { det.add(&sub) } else { det.sub(&sub) };
    }
    det
}

fn point_label(m: &Model, pt: &[u128]) -> String {
    m.flat_vars()
        .iter()
        .zip(pt)
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// All mod-p points of an affine model, by exhaustive scan.
fn residue_points(m: &Model, p: u64) -> Vec<Vec<u128>> {
    let nvars = m.nvars();
    let mut out = Vec::new();
    let mut pt = vec![0u128; nvars];
    loop {
        if m.equations.iter().all(|eq| eq.eval_mod(&pt, p as u128) == 0) {
            out.push(pt.clone());
        }
        let mut pos = 0;
        while pos < nvars {
            pt[pos] += 1;
            if pt[pos] < p as u128 {
                break;
            }
            pt[pos] = 0;
            pos += 1;
        }
        if pos == nvars {
            return out;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiskCertificate {
    /// Mod-p coordinates of the disk.
    pub center: Vec<u64>,
    pub chart: String,
    /// Valuations of the chart minor and numerator at the center (both
    /// must be 0 for the disk to be accepted).
    pub minor_val: u32,
    pub numerator_val: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeIntegral {
    pub p: u64,
    pub dim: u32,
    pub value: BigRational,
    pub disks: Vec<DiskCertificate>,
}

/// Exact volume of the model's `Z_p` points against its gauge charts: each
/// mod-p point is a residue disk of measure `p^{-dim}` once some chart has
/// unit minor and unit numerator there. When several charts apply to one
/// disk their densities are compared at the center, so incompatible chart
/// data cannot slip through.
pub fn integrate_gauge(m: &Model, p: u64) -> Result<GaugeIntegral, PadicError> {
    if !ffield::is_prime(p) {
        return Err(PadicError::NotPrime(p));
    }
    let setup = prepare_gauge(m)?;
    let mut disks = Vec::new();
    for pt in residue_points(m, p) {
        let mut chosen: Option<DiskCertificate> = None;
        let mut usable = false;
        for chart in &setup.charts {
            let minor_res = chart.minor.eval_mod(&pt, p as u128);
            if minor_res == 0 {
                continue;
            }
            usable = true;
            let num_res = chart.numerator.eval_mod(&pt, p as u128);
            if num_res == 0 {
                return Err(PadicError::NonUnitNumerator {
                    chart: chart.id.clone(),
                    point: point_label(m, &pt),
                });
            }
            // Applicable chart with unit density; all applicable charts
            // yield density 1 here, so the first one is as good as any.
            if chosen.is_none() {
                chosen = Some(DiskCertificate {
                    center: pt.iter().map(|&c| c as u64).collect(),
                    chart: chart.id.clone(),
                    minor_val: 0,
                    numerator_val: 0,
                });
            }
        }
        if !usable {
            return Err(PadicError::NoUsableChart { point: point_label(m, &pt) });
        }
        disks.push(chosen.expect("usable implies chosen"));
    }
    let value = BigRational::from_integer(BigInt::from(disks.len() as u64))
        * power_of_p(p, -(setup.dim as i64));
    Ok(GaugeIntegral { p, dim: setup.dim as u32, value, disks })
}

// ---------------------------------------------------------------------------
// Interval integration over the model's Z_p points (Hensel cells).
// ---------------------------------------------------------------------------

/// Brackets `int_{X(Z_p)} |f|_p` against the gauge measure. Cells are
/// points of `X(Z/p^level)` grown by Hensel lifting inside each disk's
/// chart, each of measure `p^{-dim * level}`; the valuation logic is the
/// same as for [`integrate_abs`].
pub fn integrate_abs_on_model(
    m: &Model,
    f: &Polynomial,
    p: u64,
    opts: &PadicOpts,
) -> Result<IntegralBound, PadicError> {
    if !ffield::is_prime(p) {
        return Err(PadicError::NotPrime(p));
    }
    let setup = prepare_gauge(m)?;
    check_precision(p, opts.precision)?;
    if f.nvars() != setup.nvars {
        return Err(PadicError::WrongArity { got: f.nvars(), expected: setup.nvars });
    }
    let mut acc = CellAcc::new(p, opts.precision, opts.max_cells);
    for pt in residue_points(m, p) {
        let mut chart_idx = None;
        for (i, chart) in setup.charts.iter().enumerate() {
            if chart.minor.eval_mod(&pt, p as u128) == 0 {
                continue;
            }
            if chart.numerator.eval_mod(&pt, p as u128) == 0 {
                return Err(PadicError::NonUnitNumerator {
                    chart: chart.id.clone(),
                    point: point_label(m, &pt),
                });
            }
            chart_idx = Some(i);
            break;
        }
        let Some(ci) = chart_idx else {
            return Err(PadicError::NoUsableChart { point: point_label(m, &pt) });
        };
        let chart = &setup.charts[ci];
        let m_inv = minor_matrix_inverse(m, chart, &pt, p);
        model_cell(&mut acc, m, chart, &m_inv, f, &pt, 1, setup.dim)?;
    }
    Ok(IntegralBound { lo: acc.lo, hi: acc.hi })
}

/// Inverse mod p of the chart's Jacobian minor matrix at the disk center;
/// constant across the disk, so computed once.
fn minor_matrix_inverse(m: &Model, chart: &PreparedChart, pt: &[u128], p: u64) -> Vec<Vec<u64>> {
    let c = chart.solved.len();
    let mut a: Vec<Vec<u64>> = m
        .equations
        .iter()
        .map(|eq| {
            chart
                .solved
                .iter()
                .map(|&v| eq.partial(v).eval_mod(pt, p as u128) as u64)
                .collect()
        })
        .collect();
    let mut inv: Vec<Vec<u64>> =
        (0..c).map(|i| (0..c).map(|j| u64::from(i == j)).collect()).collect();
    let pm = p as u128;
    let inv_mod_p = |x: u64| -> u64 {
        let mut acc = 1u128;
        let mut base = x as u128 % pm;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % pm;
            }
            base = base * base % pm;
            e >>= 1;
        }
        acc as u64
    };
    for col in 0..c {
        let pivot = (col..c).find(|&r| a[r][col] % p != 0).expect("unit minor is invertible");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = inv_mod_p(a[col][col]);
        for j in 0..c {
            a[col][j] = (a[col][j] as u128 * scale as u128 % pm) as u64;
            inv[col][j] = (inv[col][j] as u128 * scale as u128 % pm) as u64;
        }
        for r in 0..c {
            if r == col || a[r][col] % p == 0 {
                continue;
            }
            let factor = a[r][col] % p;
            for j in 0..c {
                let s = factor as u128 * a[col][j] as u128 % pm;
                a[r][j] = ((a[r][j] as u128 + pm - s) % pm) as u64;
                let s = factor as u128 * inv[col][j] as u128 % pm;
                inv[r][j] = ((inv[r][j] as u128 + pm - s) % pm) as u64;
            }
        }
    }
    inv
}

#[allow(clippy::too_many_arguments)]
fn model_cell(
    acc: &mut CellAcc,
    model: &Model,
    chart: &PreparedChart,
    m_inv: &[Vec<u64>],
    f: &Polynomial,
    center: &[u128],
    level: u32,
    dim: usize,
) -> Result<(), PadicError> {
    acc.charge()?;
    let p = acc.p;
    let measure = cell_measure(p, dim, level);
    let modulus = (p as u128).pow(level);
    let f_val = val_of_residue(f.eval_mod(center, modulus), p, level);

    match f_val {
        Some(v) => {
            let contrib = measure * power_of_p(p, -(v as i64));
            acc.lo += &contrib;
            acc.hi += contrib;
            Ok(())
        }
        None if level >= acc.n => {
            acc.hi += measure * power_of_p(p, -(acc.n as i64));
            Ok(())
        }
        None => {
            // Split into the p^dim Hensel children at the next level.
            let step = modulus;
            let next_mod = step * p as u128;
            let nfree = chart.free.len();
            let mut digits = vec![0u64; nfree];
            loop {
                let mut child = center.to_vec();
                for (d, &v) in digits.iter().zip(&chart.free) {
                    child[v] += step * *d as u128;
                }
                // One linear Newton step fixes the solved coordinates mod
                // the next level.
                let r: Vec<u64> = model
                    .equations
                    .iter()
                    .map(|eq| {
                        let val = eq.eval_mod(&child, next_mod);
                        debug_assert_eq!(val % step, 0, "parent cell lies on X");
                        (val / step % p as u128) as u64
                    })
                    .collect();
                for (j, &sv) in chart.solved.iter().enumerate() {
                    let mut u = 0u128;
                    for (i, &ri) in r.iter().enumerate() {
                        u = (u + m_inv[j][i] as u128 * (p as u128 - ri as u128)) % p as u128;
                    }
                    child[sv] = (child[sv] + step * u) % next_mod;
                }
                debug_assert!(model
                    .equations
                    .iter()
                    .all(|eq| eq.eval_mod(&child, next_mod) == 0));
                model_cell(acc, model, chart, m_inv, f, &child, level + 1, dim)?;

                let mut pos = 0;
                while pos < nfree {
                    digits[pos] += 1;
                    if digits[pos] < p {
                        break;
                    }
                    digits[pos] = 0;
                    pos += 1;
                }
                if pos == nfree {
                    return Ok(());
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Change of variables.
// ---------------------------------------------------------------------------

/// Jacobian determinant of the polynomial map `x -> phi(x)`, symbolically.
pub fn jacobian_det(phi: &[Polynomial]) -> Polynomial {
    let nvars = phi.first().map_or(0, |f| f.nvars());
    let jac: Vec<Vec<Polynomial>> = phi
        .iter()
        .map(|f| (0..nvars).map(|v| f.partial(v)).collect())
        .collect();
    det_poly(&jac, nvars)
}

/// One chart of a substitution: the map and the source region it covers.
#[derive(Debug, Clone)]
pub struct PullbackChart {
    pub phi: Vec<Polynomial>,
    pub region: Vec<ValConstraint>,
}

#[derive(Debug, Clone)]
pub struct ChangeOfVarsReport {
    pub lhs: IntegralBound,
    pub rhs: IntegralBound,
    /// Whether the two brackets can describe the same number.
    pub consistent: bool,
}

/// Brackets both sides of a substitution: `int |f|` directly, against the
/// sum over charts of `int |(f o phi) det Dphi|` on their regions. The
/// multiplicativity of the absolute value folds density and pullback into
/// a single polynomial per chart.
pub fn change_of_vars_check(
    p: u64,
    opts: &PadicOpts,
    f: &Polynomial,
    charts: &[PullbackChart],
) -> Result<ChangeOfVarsReport, PadicError> {
    let lhs = integrate_abs(p, opts, f)?;
    let mut rhs = IntegralBound::zero();
    for chart in charts {
        if chart.phi.len() != f.nvars() {
            return Err(PadicError::WrongArity {
                got: chart.phi.len(),
                expected: f.nvars(),
            });
        }
        let integrand = f.compose(&chart.phi).mul(&jacobian_det(&chart.phi));
        let part = integrate_abs_region(p, opts, &integrand, &chart.region)?;
        rhs.add_assign(&part);
    }
    let consistent = lhs.intersects(&rhs);
    Ok(ChangeOfVarsReport { lhs, rhs, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomdsl::parse_model;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn x_var(nv: usize, i: usize) -> Polynomial {
        Polynomial::variable(nv, i)
    }

    const GM: &str = "ambient A^2;\nvars x y;\ndim 1;\neq x*y - 1;\ngauge c0 (x) 1;\n";
    const A1: &str = "ambient A^1;\nvars x;\ndim 1;\ngauge c0 (x) 1;\n";
    const A2: &str = "ambient A^2;\nvars x y;\ndim 2;\ngauge c0 (x, y) 1;\n";
    const PARABOLA: &str = "ambient A^2;\nvars x y;\ndim 1;\neq y - x^2;\ngauge c0 (x) 1;\n";
    const ELL: &str = "ambient A^2;\nvars x y;\ndim 1;\neq y^2 - x^3 + x;\n\
gauge c0 (x) 1;\ngauge c1 (y) 1;\n";

    #[test]
    fn exact_absolute_values() {
        assert_eq!(padic_abs(2, &rat(12, 1)), rat(1, 4));
        assert_eq!(padic_abs(3, &rat(1, 6)), rat(3, 1));
        assert_eq!(padic_abs(3, &rat(5, 7)), rat(1, 1));
        assert_eq!(padic_abs(5, &BigRational::zero()), BigRational::zero());
        assert_eq!(padic_val(3, &rat(18, 5)), Some(2));
        assert_eq!(padic_val(3, &BigRational::zero()), None);
    }

    #[test]
    fn scalar_arithmetic_and_precision_loss() {
        let a = PAdicScalar::from_bigint(3, 4, &BigInt::from(3)).unwrap();
        assert_eq!(a.valuation(), Valuation::Exact(1));
        assert_eq!(a.abs(), PAdicAbs::Exact(rat(1, 3)));

        // 81 = 3^4 vanishes at precision 4: only an upper bound remains.
        let b = PAdicScalar::from_bigint(3, 4, &BigInt::from(81)).unwrap();
        assert_eq!(b.valuation(), Valuation::AtLeast(4));
        assert_eq!(b.abs(), PAdicAbs::UpperBound(rat(1, 81)));

        let one = PAdicScalar::from_bigint(3, 4, &BigInt::from(1)).unwrap();
        let c = a.mul(&a).add(&one).sub(&a); // 9 + 1 - 3 = 7
        assert_eq!(c.residue(), 7);

        // 1/2 embeds as the inverse of 2 mod 81.
        let half = PAdicScalar::from_rational(3, 4, &rat(1, 2)).unwrap();
        let two = PAdicScalar::from_bigint(3, 4, &BigInt::from(2)).unwrap();
        assert_eq!(half.mul(&two).residue(), 1);
        assert_eq!(
            PAdicScalar::from_rational(3, 4, &rat(1, 6)),
            Err(PadicError::NonUnitDenominator(3))
        );
    }

    #[test]
    fn interval_for_abs_x() {
        // int |x| = p/(p+1); at precision N the bracket has width p^{-2N}.
        for p in [2u64, 3, 5] {
            let f = x_var(1, 0);
            let opts = PadicOpts::default();
            let b = integrate_abs(p, &opts, &f).unwrap();
            let exact = rat(p as i64, p as i64 + 1);
            assert!(b.contains(&exact), "{p}: {b:?}");
            assert_eq!(b.width(), power_of_p(p, -8));
        }
    }

    #[test]
    fn interval_shrinks_and_nests_with_precision() {
        let f = x_var(1, 0); // |x|
        let g = x_var(2, 0).mul(&x_var(2, 0)).sub(&x_var(2, 1)); // |x^2 - y|
        for (p, poly) in [(3u64, &f), (3, &g), (5, &g)] {
            let mut prev: Option<IntegralBound> = None;
            for n in 1..=4 {
                let b = integrate_abs(p, &PadicOpts { precision: n, ..Default::default() }, poly)
                    .unwrap();
                assert!(b.lo <= b.hi);
                assert!(b.width() <= power_of_p(p, -(n as i64)));
                if let Some(prev) = &prev {
                    assert!(b.within(prev), "N={n} bound not nested");
                }
                prev = Some(b);
            }
        }
    }

    #[test]
    fn interval_closed_forms() {
        let opts = PadicOpts::default();
        let p = 3u64;
        // int |x^2| = p^2/(p^2 + p + 1)
        let b = integrate_abs(p, &opts, &x_var(1, 0).pow(2)).unwrap();
        assert!(b.contains(&rat(9, 13)));
        // int |x y| over two variables = (p/(p+1))^2
        let b = integrate_abs(p, &opts, &x_var(2, 0).mul(&x_var(2, 1))).unwrap();
        assert!(b.contains(&rat(9, 16)));
        // x + y is uniform, so int |x + y| = p/(p+1)
        let b = integrate_abs(p, &opts, &x_var(2, 0).add(&x_var(2, 1))).unwrap();
        assert!(b.contains(&rat(3, 4)));
    }

    #[test]
    fn region_restriction() {
        let opts = PadicOpts::default();
        // int_{v(x) >= 1} |x| = 1/(p(p+1))
        let b = integrate_abs_region(3, &opts, &x_var(1, 0), &[(0, 1)]).unwrap();
        assert!(b.contains(&rat(1, 12)));
        // Region of everything: same as unrestricted.
        let all = integrate_abs_region(3, &opts, &x_var(1, 0), &[(0, 0)]).unwrap();
        let plain = integrate_abs(3, &opts, &x_var(1, 0)).unwrap();
        assert_eq!(all, plain);
    }

    #[test]
    fn degenerate_integrands() {
        let opts = PadicOpts::default();
        let zero = Polynomial::zero(1);
        assert_eq!(integrate_abs(3, &opts, &zero).unwrap(), IntegralBound::zero());
        // Content 3^4 at N = 4: indistinguishable from zero.
        let f = Polynomial::constant(1, BigInt::from(81)).mul(&x_var(1, 0));
        let b = integrate_abs(3, &opts, &f).unwrap();
        assert_eq!(b.lo, BigRational::zero());
        assert_eq!(b.hi, rat(1, 81));
        // A constant integrand is exact.
        let c = Polynomial::constant(2, BigInt::from(6));
        let b = integrate_abs(3, &opts, &c).unwrap();
        assert!(b.is_exact());
        assert_eq!(b.lo, rat(1, 3));
    }

    #[test]
    fn gauge_volumes_on_reference_models() {
        for p in [3u64, 5, 7, 11, 13] {
            let pr = p as i64;
            let g = integrate_gauge(&parse_model(A1).unwrap(), p).unwrap();
            assert_eq!(g.value, rat(1, 1));
            let g = integrate_gauge(&parse_model(A2).unwrap(), p).unwrap();
            assert_eq!(g.value, rat(1, 1));
            let g = integrate_gauge(&parse_model(GM).unwrap(), p).unwrap();
            assert_eq!(g.value, rat(pr - 1, pr));
            let g = integrate_gauge(&parse_model(PARABOLA).unwrap(), p).unwrap();
            assert_eq!(g.value, rat(1, 1));
        }
        let g = integrate_gauge(&parse_model(ELL).unwrap(), 5).unwrap();
        assert_eq!(g.value, rat(7, 5));
        assert_eq!(g.disks.len(), 7);
        // Disks where y = 0 must fall back to the y-coordinate chart.
        assert!(g
            .disks
            .iter()
            .any(|d| d.center[1] == 0 && d.chart == "c1"));
    }

    #[test]
    fn gauge_matches_counts() {
        // The volume times p^dim equals the mod-p point count, computed by
        // a different module entirely.
        let opts = crate::counter::CountOpts::default();
        for text in [A1, A2, GM, PARABOLA, ELL] {
            let m = parse_model(text).unwrap();
            for p in [3u64, 5, 7, 11, 13] {
                let g = integrate_gauge(&m, p).unwrap();
                let count = crate::counter::count_points(&m, p, 1, &opts).unwrap();
                let scaled = g.value * power_of_p(p, g.dim as i64);
                assert_eq!(scaled, BigRational::from_integer(BigInt::from(count)));
            }
        }
    }

    #[test]
    fn gauge_error_paths() {
        let no_gauge = parse_model("ambient A^1;\nvars x;\ndim 1;\n").unwrap();
        assert_eq!(integrate_gauge(&no_gauge, 3), Err(PadicError::MissingGauge));

        let no_dim = parse_model("ambient A^1;\nvars x;\ngauge c0 (x) 1;\n").unwrap();
        assert_eq!(integrate_gauge(&no_dim, 3), Err(PadicError::MissingDim));

        // Numerator x - 1 dies on the disk at x = 1.
        let bad_num =
            parse_model("ambient A^2;\nvars x y;\ndim 1;\neq x*y - 1;\ngauge c0 (x) x - 1;\n")
                .unwrap();
        match integrate_gauge(&bad_num, 5) {
            Err(PadicError::NonUnitNumerator { chart, point }) => {
                assert_eq!(chart, "c0");
                assert!(point.contains("x=1"));
            }
            other => panic!("expected numerator error, got {other:?}"),
        }

        // Only the x-chart: the disks with y = 0 have no unit minor.
        let half_ell =
            parse_model("ambient A^2;\nvars x y;\ndim 1;\neq y^2 - x^3 + x;\ngauge c0 (x) 1;\n")
                .unwrap();
        match integrate_gauge(&half_ell, 5) {
            Err(PadicError::NoUsableChart { point }) => assert!(point.contains("y=0")),
            other => panic!("expected chart error, got {other:?}"),
        }

        let proj = parse_model("ambient P^1;\nvars s t;\n").unwrap();
        assert_eq!(integrate_gauge(&proj, 3), Err(PadicError::NotAffine));
    }

    #[test]
    fn model_intervals() {
        let opts = PadicOpts::default();
        // On the A^1 model the Hensel cells are the plain cells.
        let m = parse_model(A1).unwrap();
        let f = x_var(1, 0);
        let on_model = integrate_abs_on_model(&m, &f, 3, &opts).unwrap();
        let plain = integrate_abs(3, &opts, &f).unwrap();
        assert_eq!(on_model, plain);

        // int_{Gm} |x - 1| = (p-2)/p + 1/(p(p+1)) = 5/12 at p = 3.
        let m = parse_model(GM).unwrap();
        let f = x_var(2, 0).sub(&Polynomial::constant(2, BigInt::one()));
        let b = integrate_abs_on_model(&m, &f, 3, &opts).unwrap();
        assert!(b.contains(&rat(5, 12)), "{b:?}");
        assert!(b.width() <= power_of_p(3, -4));

        // A unit integrand integrates exactly to the gauge volume.
        let m = parse_model(ELL).unwrap();
        let one = Polynomial::constant(2, BigInt::one());
        let b = integrate_abs_on_model(&m, &one, 5, &opts).unwrap();
        assert!(b.is_exact());
        assert_eq!(b.lo, rat(7, 5));
    }

    #[test]
    fn jacobian_determinants() {
        // phi(x, t) = (x, x t) has det = x.
        let phi = vec![x_var(2, 0), x_var(2, 0).mul(&x_var(2, 1))];
        assert_eq!(jacobian_det(&phi), x_var(2, 0));
        // phi(s, y) = (s y, y) has det = y.
        let phi = vec![x_var(2, 0).mul(&x_var(2, 1)), x_var(2, 1)];
        assert_eq!(jacobian_det(&phi), x_var(2, 1));
    }

    #[test]
    fn blowup_change_of_vars_brackets_three_quarters() {
        // int_{Z_3^2} |x| = 3/4 against the two standard charts of the
        // origin blow-up; the second chart is restricted to v(s) >= 1 so
        // the images partition the plane.
        let opts = PadicOpts::default();
        let f = x_var(2, 0);
        let charts = vec![
            PullbackChart {
                phi: vec![x_var(2, 0), x_var(2, 0).mul(&x_var(2, 1))],
                region: vec![],
            },
            PullbackChart {
                phi: vec![x_var(2, 0).mul(&x_var(2, 1)), x_var(2, 1)],
                region: vec![(0, 1)],
            },
        ];
        let report = change_of_vars_check(3, &opts, &f, &charts).unwrap();
        assert!(report.consistent);
        let target = rat(3, 4);
        assert!(report.lhs.contains(&target), "lhs {:?}", report.lhs);
        assert!(report.rhs.contains(&target), "rhs {:?}", report.rhs);
    }

    #[test]
    fn identity_and_unit_scaling_are_exact() {
        let opts = PadicOpts::default();
        let f = x_var(1, 0);
        let identity = vec![x_var(1, 0)];
        let report = change_of_vars_check(3, &opts, &f, &[PullbackChart {
            phi: identity,
            region: vec![],
        }])
        .unwrap();
        assert!(report.consistent);
        assert_eq!(report.lhs, report.rhs);

        // x -> 2x permutes Z_3, so the bracket is unchanged.
        let double = vec![x_var(1, 0).scale(&BigInt::from(2))];
        let report = change_of_vars_check(3, &opts, &f, &[PullbackChart {
            phi: double,
            region: vec![],
        }])
        .unwrap();
        assert_eq!(report.lhs, report.rhs);
    }

    #[test]
    fn cell_budget_is_enforced() {
        let tight = PadicOpts { precision: 4, max_cells: 10 };
        let f = x_var(2, 0).mul(&x_var(2, 1));
        assert_eq!(
            integrate_abs(5, &tight, &f),
            Err(PadicError::CellBudget(10))
        );
    }

    #[test]
    fn seeded_interval_properties() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xadb);
        for _ in 0..30 {
            let nv = rng.gen_range(1..=2usize);
            let mut f = Polynomial::zero(nv);
            for _ in 0..rng.gen_range(1..4) {
                let exps: Vec<u16> = (0..nv).map(|_| rng.gen_range(0..3)).collect();
                f = f.add(&Polynomial::from_terms(
                    nv,
                    [(exps, BigInt::from(rng.gen_range(-9i32..=9)))],
                ));
            }
            if f.is_zero() {
                continue;
            }
            let p = [2u64, 3, 5][rng.gen_range(0..3)];
            let mut prev: Option<IntegralBound> = None;
            for n in [1u32, 2, 3] {
                let b =
                    integrate_abs(p, &PadicOpts { precision: n, max_cells: 1 << 22 }, &f).unwrap();
                assert!(b.lo >= BigRational::zero());
                assert!(b.lo <= b.hi);
                assert!(b.hi <= BigRational::one());
                assert!(b.width() <= power_of_p(p, -(n as i64)));
                if let Some(prev) = &prev {
                    assert!(b.within(prev));
                }
                prev = Some(b);
            }
        }
    }
}
