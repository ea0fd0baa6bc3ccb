//! From point counts to zeta data: the generating series, reconstruction of
//! its rational form, classification of reciprocal roots by absolute value,
//! and the integer invariants read off from a classified zeta.

mod qpoly;
mod roots;

pub use qpoly::{gcd_monic, squarefree_decompose, QPoly};
pub use roots::Complex;

use crate::counter::CountTable;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

/// Relative tolerance when matching a root modulus against `q^{i/2}`.
pub const DEFAULT_WEIGHT_TOL: f64 = 1e-6;
/// Minimum number of series coefficients beyond the fitted window that a
/// reconstruction must also reproduce.
pub const MIN_GUARD: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum ZetaError {
    #[error("need at least {need} series coefficients, have {have}")]
    InsufficientData { need: usize, have: usize },
    #[error("series disagrees with every rational form of shape ({num_deg},{den_deg}) on the guard window")]
    GuardFailed { num_deg: usize, den_deg: usize },
    #[error("reconstruction of shape ({num_deg},{den_deg}) is degenerate")]
    Degenerate { num_deg: usize, den_deg: usize },
    #[error("reconstructed rational form has non-integer coefficients")]
    NonIntegral,
    #[error("root classification found purity violations; integer invariants are undefined")]
    NotPure,
    #[error("numerator degree {0} is odd, which no smooth proper curve produces")]
    OddNumerator(usize),
    #[error("count tables cover different fields: ({0}, {1}) vs ({2}, {3})")]
    FieldMismatch(u64, u32, u64, u32),
}

/// Truncation of the count generating series `exp(sum_r N_r t^r / r)`;
/// `coeffs[0] = 1` and `coeffs` has one entry per counted level plus one.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaSeries {
    pub q: u128,
    pub coeffs: Vec<BigRational>,
}

pub fn zeta_from_counts(table: &CountTable) -> ZetaSeries {
    let r_max = table.counts.len();
    let mut coeffs = Vec::with_capacity(r_max + 1);
    coeffs.push(BigRational::one());
    // n c_n = sum_{j=1..n} N_j c_{n-j}, from Z' = (log Z)' Z.
    for n in 1..=r_max {
        let mut s = BigRational::zero();
        for j in 1..=n {
            let nj = BigRational::from_integer(BigInt::from(table.counts[j - 1]));
            s += nj * &coeffs[n - j];
        }
        coeffs.push(s / BigRational::from_integer(BigInt::from(n)));
    }
    ZetaSeries { q: table.q(), coeffs }
}

/// Inverts [`zeta_from_counts`]: recovers `N_r` from the series exactly.
pub fn counts_from_series(series: &ZetaSeries) -> Vec<BigInt> {
    let r_max = series.coeffs.len().saturating_sub(1);
    let mut counts: Vec<BigRational> = Vec::with_capacity(r_max);
    for n in 1..=r_max {
        let mut s = BigRational::from_integer(BigInt::from(n as u64)) * &series.coeffs[n];
        for j in 1..n {
            s -= &counts[j - 1] * &series.coeffs[n - j];
        }
        counts.push(s);
    }
    counts
        .into_iter()
        .map(|c| {
            assert!(c.is_integer(), "series did not come from integer counts");
            c.to_integer()
        })
        .collect()
}

/// A zeta function in lowest terms: integer-coefficient numerator and
/// denominator in `t`, both with constant term 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalZeta {
    pub q: u128,
    pub num: QPoly,
    pub den: QPoly,
}

impl RationalZeta {
    pub fn display(&self) -> String {
        format!("({}) / ({})", poly_in_t(&self.num), poly_in_t(&self.den))
    }
}

pub fn poly_in_t(p: &QPoly) -> String {
    use num_traits::Signed;
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, c) in p.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let a = c.abs();
        let show_coeff = !a.is_one() || i == 0;
        if show_coeff {
            out.push_str(&a.to_string());
        }
        match i {
            0 => {}
            1 => {
                if show_coeff {
                    out.push('*');
                }
                out.push('t');
            }
            _ => {
                if show_coeff {
                    out.push('*');
                }
                out.push_str(&format!("t^{i}"));
            }
        }
    }
    out
}

/// Convolution of a series prefix with a polynomial, up to `len` terms.
fn conv(series: &[BigRational], poly: &QPoly, len: usize) -> Vec<BigRational> {
    (0..len)
        .map(|n| {
            let mut s = BigRational::zero();
            for (j, c) in poly.coeffs().iter().enumerate() {
                if j > n {
                    break;
                }
                s += c * &series[n - j];
            }
            s
        })
        .collect()
}

/// Reconstructs `num/den` with `deg num <= num_deg`, `deg den <= den_deg`
/// from the series, then demands the result reproduce every available
/// coefficient, including at least `guard` terms beyond the fitted window.
/// The result is reduced, normalized to constant terms 1, and must have
/// integer coefficients.
pub fn rational_reconstruct(
    series: &ZetaSeries,
    num_deg: usize,
    den_deg: usize,
    guard: usize,
) -> Result<RationalZeta, ZetaError> {
    let guard = guard.max(MIN_GUARD);
    let order = num_deg + den_deg + 1;
    let have = series.coeffs.len();
    if have < order + guard {
        return Err(ZetaError::InsufficientData { need: order + guard, have });
    }
    let shape_err = |e: fn(usize, usize) -> ZetaError| e(num_deg, den_deg);

    // Extended Euclid on (t^order, S): maintains r = u t^order + v S, so
    // stopping once deg r <= num_deg yields S v = r (mod t^order) with
    // deg v <= den_deg.
    let mut r0 = QPoly::monomial(order);
    let mut v0 = QPoly::zero();
    let mut r1 = QPoly::from_rationals(series.coeffs[..order].to_vec());
    let mut v1 = QPoly::one();
    while r1.deg().is_some_and(|d| d > num_deg) {
        let (q, r2) = r0.div_rem(&r1);
        let v2 = v0.sub(&q.mul(&v1));
        r0 = std::mem::replace(&mut r1, r2);
        v0 = std::mem::replace(&mut v1, v2);
    }
    let (mut num, mut den) = (r1, v1);
    let d0 = den.coeff(0);
    if d0.is_zero() {
        return Err(shape_err(|m, n| ZetaError::Degenerate { num_deg: m, den_deg: n }));
    }
    num = num.scale(&(BigRational::one() / &d0.clone()));
    den = den.scale(&(BigRational::one() / d0));

    let g = gcd_monic(&num, &den);
    if g.deg().unwrap_or(0) >= 1 {
        num = num.div_exact(&g);
        den = den.div_exact(&g);
        let d0 = den.coeff(0);
        num = num.scale(&(BigRational::one() / &d0.clone()));
        den = den.scale(&(BigRational::one() / d0));
    }

    // Verify against the entire series, not just the fitted window.
    let check = conv(&series.coeffs, &den, have);
    for (n, got) in check.iter().enumerate() {
        if *got != num.coeff(n) {
            return Err(shape_err(|m, n| ZetaError::GuardFailed { num_deg: m, den_deg: n }));
        }
    }
    if !num.is_integral() || !den.is_integral() {
        return Err(ZetaError::NonIntegral);
    }
    Ok(RationalZeta { q: series.q, num, den })
}

/// Tries square shapes `(d, d)` of increasing size and returns the first
/// reconstruction that survives full verification; the reduced form of any
/// success is the same, so the smallest workable shape suffices.
pub fn rational_reconstruct_auto(
    series: &ZetaSeries,
    guard: usize,
) -> Result<RationalZeta, ZetaError> {
    let guard = guard.max(MIN_GUARD);
    let have = series.coeffs.len();
    let mut last_err = ZetaError::InsufficientData { need: 3 + guard, have };
    let mut d = 1usize;
    while 2 * d + 1 + guard <= have {
        match rational_reconstruct(series, d, d, guard) {
            Ok(z) => return Ok(z),
            Err(e) => last_err = e,
        }
        d += 1;
    }
    Err(last_err)
}

/// Reconstruction specialized to smooth proper curves, whose denominator is
/// forced to `(1 - t)(1 - qt)`. Only needs the tower up to depth `2g`, so
/// an elliptic curve is pinned down by two counts. The numerator is read
/// off as the truncation of `Z(t) (1 - t)(1 - qt)`; callers must supply a
/// tower at least as deep as twice the genus for the answer to be complete.
pub fn curve_reconstruct(table: &CountTable) -> Result<RationalZeta, ZetaError> {
    let series = zeta_from_counts(table);
    let have = series.coeffs.len();
    if have < 3 {
        return Err(ZetaError::InsufficientData { need: 3, have });
    }
    let q_big = BigInt::from(table.q());
    let den = QPoly::from_bigints(vec![
        BigInt::from(1),
        -(&q_big + BigInt::from(1)),
        q_big,
    ]);
    let num = QPoly::from_rationals(conv(&series.coeffs, &den, have));
    if !num.is_integral() {
        return Err(ZetaError::NonIntegral);
    }
    if num.deg().unwrap_or(0) % 2 != 0 {
        return Err(ZetaError::OddNumerator(num.deg().unwrap()));
    }
    Ok(RationalZeta { q: series.q, num, den })
}

/// Genus read from a curve zeta: half the numerator degree.
pub fn genus_from_zeta(z: &RationalZeta) -> Result<u32, ZetaError> {
    let d = z.num.deg().unwrap_or(0);
    if d % 2 != 0 {
        return Err(ZetaError::OddNumerator(d));
    }
    Ok((d / 2) as u32)
}

/// Exact functional equation check for a curve numerator of degree `2g`:
/// `a_m q^g = a_{2g-m} q^m` for every `m`.
pub fn functional_equation_holds(z: &RationalZeta) -> Result<bool, ZetaError> {
    let coeffs = z.num.bigint_coeffs().ok_or(ZetaError::NonIntegral)?;
    let g = genus_from_zeta(z)?;
    let two_g = 2 * g as usize;
    let q = BigInt::from(z.q);
    let a = |m: usize| coeffs.get(m).cloned().unwrap_or_else(BigInt::zero);
    for m in 0..=two_g {
        if a(m) * q.pow(g) != a(two_g - m) * q.pow(m as u32) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootSide {
    Numerator,
    Denominator,
}

#[derive(Debug, Clone)]
pub struct ZetaEigenvalue {
    pub side: RootSide,
    /// Root of the polynomial in `t`.
    pub t_re: f64,
    pub t_im: f64,
    /// Modulus of the reciprocal root `1/t`.
    pub abs: f64,
    /// Weight `i` with `|1/t| = q^{i/2}`, when one fits the tolerance.
    pub weight: Option<u32>,
    pub multiplicity: u32,
    /// Whether a weight fits at all.
    pub pure: bool,
    /// Whether the weight parity matches the side (odd for numerator
    /// roots, even for denominator roots).
    pub parity_ok: bool,
}

#[derive(Debug, Clone)]
pub struct WeilClassification {
    pub q: u128,
    pub tol: f64,
    pub purity_ok: bool,
    pub eigenvalues: Vec<ZetaEigenvalue>,
    pub violations: Vec<String>,
}

/// Classifies every reciprocal root of the zeta by its modulus. Purity
/// violations (no weight fits, or a weight on the wrong side) are reported
/// as data, not errors; consumers that need integer invariants check
/// `purity_ok` first.
pub fn weil_classify(z: &RationalZeta, tol: f64) -> WeilClassification {
    let ln_q = (z.q as f64).ln();
    let mut eigenvalues = Vec::new();
    let mut violations = Vec::new();
    for (side, poly) in
        [(RootSide::Numerator, &z.num), (RootSide::Denominator, &z.den)]
    {
        let side_name = match side {
            RootSide::Numerator => "numerator",
            RootSide::Denominator => "denominator",
        };
        for (factor, mult) in squarefree_decompose(poly) {
            for root in roots::all_roots(&qpoly::to_f64_coeffs(&factor)) {
                let abs = 1.0 / root.abs();
                let w_est = 2.0 * abs.ln() / ln_q;
                let w = w_est.round();
                let pure = w >= 0.0 && {
                    let target = (z.q as f64).powf(w / 2.0);
                    ((abs - target) / target).abs() <= tol
                };
                let weight = if pure { Some(w as u32) } else { None };
                let parity_ok = match weight {
                    Some(w) => (w % 2 == 1) == (side == RootSide::Numerator),
                    None => false,
                };
                if !pure {
                    violations.push(format!(
                        "{side_name} root with |1/t| = {abs:.9} matches no weight for q = {}",
                        z.q
                    ));
                } else if !parity_ok {
                    violations.push(format!(
                        "{side_name} root of even-odd mismatched weight {} (|1/t| = {abs:.9})",
                        weight.unwrap()
                    ));
                }
                eigenvalues.push(ZetaEigenvalue {
                    side,
                    t_re: root.re,
                    t_im: root.im,
                    abs,
                    weight,
                    multiplicity: mult,
                    pure,
                    parity_ok,
                });
            }
        }
    }
    eigenvalues.sort_by(|a, b| {
        (a.side == RootSide::Denominator)
            .cmp(&(b.side == RootSide::Denominator))
            .then(a.abs.total_cmp(&b.abs))
            .then(a.t_re.total_cmp(&b.t_re))
            .then(a.t_im.total_cmp(&b.t_im))
    });
    let purity_ok = eigenvalues.iter().all(|e| e.pure && e.parity_ok);
    WeilClassification { q: z.q, tol, purity_ok, eigenvalues, violations }
}

/// Betti numbers as weight multiplicities; only meaningful when the
/// classification is pure, hence the error otherwise.
pub fn betti_numbers(c: &WeilClassification) -> Result<Vec<u64>, ZetaError> {
    if !c.purity_ok {
        return Err(ZetaError::NotPure);
    }
    let max_w = c
        .eigenvalues
        .iter()
        .filter_map(|e| e.weight)
        .max()
        .unwrap_or(0) as usize;
    let mut betti = vec![0u64; max_w + 1];
    for e in &c.eigenvalues {
        betti[e.weight.unwrap() as usize] += e.multiplicity as u64;
    }
    Ok(betti)
}

/// Hodge numbers of a smooth projective curve of genus `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveHodge {
    pub genus: u32,
    pub h00: u32,
    pub h10: u32,
    pub h01: u32,
    pub h11: u32,
}

pub fn curve_hodge(genus: u32) -> CurveHodge {
    CurveHodge { genus, h00: 1, h10: genus, h01: genus, h11: 1 }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZetaComparison {
    pub p: u64,
    pub k: u32,
    /// Tower depth actually compared.
    pub depth: u32,
    pub equal: bool,
    /// `(r, left count, right count)` of the first disagreement.
    pub first_mismatch: Option<(u32, u128, u128)>,
}

/// Compares two count tables over the same field level by level. Equal
/// tables have equal zeta series to the compared depth; a mismatch pins
/// down the first level where the zeta functions differ.
pub fn compare_zeta(a: &CountTable, b: &CountTable) -> Result<ZetaComparison, ZetaError> {
    if (a.p, a.k) != (b.p, b.k) {
        return Err(ZetaError::FieldMismatch(a.p, a.k, b.p, b.k));
    }
    let depth = a.counts.len().min(b.counts.len());
    let mut first_mismatch = None;
    for r in 0..depth {
        if a.counts[r] != b.counts[r] {
            first_mismatch = Some(((r + 1) as u32, a.counts[r], b.counts[r]));
            break;
        }
    }
    Ok(ZetaComparison {
        p: a.p,
        k: a.k,
        depth: depth as u32,
        equal: first_mismatch.is_none(),
        first_mismatch,
    })
}
