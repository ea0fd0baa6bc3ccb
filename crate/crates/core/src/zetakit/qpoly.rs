//! Dense univariate polynomials over the rationals, exact throughout.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Coefficients in ascending degree order, trailing zeros trimmed; an empty
/// vector is the zero polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QPoly {
    coeffs: Vec<BigRational>,
}

impl QPoly {
    pub fn zero() -> QPoly {
        QPoly { coeffs: Vec::new() }
    }

    pub fn one() -> QPoly {
        QPoly::from_rationals(vec![BigRational::one()])
    }

    pub fn monomial(deg: usize) -> QPoly {
        let mut coeffs = vec![BigRational::zero(); deg + 1];
        coeffs[deg] = BigRational::one();
        QPoly { coeffs }
    }

    pub fn from_rationals(mut coeffs: Vec<BigRational>) -> QPoly {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn from_bigints(coeffs: Vec<BigInt>) -> QPoly {
        QPoly::from_rationals(coeffs.into_iter().map(BigRational::from_integer).collect())
    }

    pub fn from_ints(coeffs: &[i64]) -> QPoly {
        QPoly::from_bigints(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn deg(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn lead(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn add(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        QPoly::from_rationals(coeffs)
    }

    pub fn sub(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) - other.coeff(i)).collect();
        QPoly::from_rationals(coeffs)
    }

    pub fn neg(&self) -> QPoly {
        QPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn mul(&self, other: &QPoly) -> QPoly {
        if self.is_zero() || other.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        QPoly::from_rationals(coeffs)
    }

    pub fn scale(&self, s: &BigRational) -> QPoly {
        QPoly::from_rationals(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, e: u32) -> QPoly {
        let mut acc = QPoly::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Quotient and remainder with `deg r < deg d`; panics on zero divisor.
    pub fn div_rem(&self, d: &QPoly) -> (QPoly, QPoly) {
        let lead_inv =
            BigRational::one() / d.lead().expect("division by zero polynomial").clone();
        let mut r = self.coeffs.clone();
        let mut q = vec![
            BigRational::zero();
            self.coeffs.len().saturating_sub(d.coeffs.len()) + 1
        ];
        while r.len() >= d.coeffs.len() && !r.is_empty() {
            let lead = r.last().unwrap().clone();
            if lead.is_zero() {
                r.pop();
                continue;
            }
            let shift = r.len() - d.coeffs.len();
            let factor = lead * &lead_inv;
            for (j, c) in d.coeffs.iter().enumerate() {
                let v = c * &factor;
                r[shift + j] -= v;
            }
            q[shift] = factor;
            debug_assert!(r.last().unwrap().is_zero());
            r.pop();
        }
        (QPoly::from_rationals(q), QPoly::from_rationals(r))
    }

    /// Division known to be exact; panics if a remainder appears.
    pub fn div_exact(&self, d: &QPoly) -> QPoly {
        let (q, r) = self.div_rem(d);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    pub fn monic(&self) -> QPoly {
        match self.lead() {
            None => QPoly::zero(),
            Some(l) => self.scale(&(BigRational::one() / l.clone())),
        }
    }

    pub fn derivative(&self) -> QPoly {
        if self.coeffs.len() <= 1 {
            return QPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
            .collect();
        QPoly::from_rationals(coeffs)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    /// Integer coefficient vector, when all coefficients are integers.
    pub fn bigint_coeffs(&self) -> Option<Vec<BigInt>> {
        self.coeffs
            .iter()
            .map(|c| c.is_integer().then(|| c.to_integer()))
            .collect()
    }
}

/// Monic greatest common divisor by the Euclidean algorithm.
pub fn gcd_monic(a: &QPoly, b: &QPoly) -> QPoly {
    let mut a = a.clone();
    let mut b = b.clone();
    while !b.is_zero() {
        let (_, r) = a.div_rem(&b);
        a = b;
        b = r;
    }
    a.monic()
}

/// Yun's square-free decomposition: returns monic pairwise-coprime
/// square-free `(f_i, i)` with `f = lead * prod f_i^i`.
pub fn squarefree_decompose(f: &QPoly) -> Vec<(QPoly, u32)> {
    let Some(d) = f.deg() else { return Vec::new() };
    if d == 0 {
        return Vec::new();
    }
    let f = f.monic();
    let df = f.derivative();
    let g = gcd_monic(&f, &df);
    if g.deg() == Some(0) {
        return vec![(f, 1)];
    }
    let mut out = Vec::new();
    let mut w = f.div_exact(&g);
    let mut y = df.div_exact(&g);
    let mut z = y.sub(&w.derivative());
    let mut i = 1u32;
    while w.deg() != Some(0) {
        let a = gcd_monic(&w, &z);
        if a.deg().unwrap_or(0) >= 1 {
            out.push((a.clone(), i));
        }
        w = w.div_exact(&a);
        y = z.div_exact(&a);
        z = y.sub(&w.derivative());
        i += 1;
    }
    out
}

pub fn to_f64_coeffs(p: &QPoly) -> Vec<f64> {
    use num_traits::ToPrimitive;
    p.coeffs()
        .iter()
        .map(|c| c.to_f64().expect("coefficient fits in f64"))
        .collect()
}
