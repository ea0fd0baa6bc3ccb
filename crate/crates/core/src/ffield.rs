//! Exact arithmetic in finite fields `F_{p^k}`.
//!
//! Elements are dense coefficient vectors over the prime field, reduced
//! modulo a canonical irreducible polynomial. The modulus for `F_{p^k}`
//! is the lexicographically smallest monic irreducible of degree `k`
//! (comparing the coefficient tuple `(c_{k-1}, ..., c_1, c_0)`), so two
//! runs always agree on the representation.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be >= 1, got {0}")]
    BadDegree(u32),
    #[error("field size p^k = {p}^{k} exceeds the supported range")]
    FieldTooLarge { p: u64, k: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("element has {got} coefficients, field expects {expected}")]
    WrongElementShape { got: usize, expected: usize },
}

/// Description of `F_{p^k}` with a fixed monic irreducible modulus.
///
/// The modulus is stored little-endian (`modulus[j]` is the coefficient of
/// `x^j`, `modulus[k] == 1`) and is present exactly when `k > 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldDesc {
    p: u64,
    k: u32,
    modulus: Option<Vec<u64>>,
}

/// An element of `F_{p^k}`: `k` residues in `[0, p)`, little-endian in the
/// field generator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldElement {
    pub coeffs: Vec<u64>,
}

// Keep enumeration and table construction sane; counting work beyond this
// is rejected long before by the enumeration budget.
const MAX_FIELD_SIZE: u128 = 1 << 40;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    // Deterministic Miller-Rabin for u64 with the standard 12-base set.
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        e >>= 1;
    }
    acc
}

fn inv_mod_u64(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    pow_mod_u64(a, p - 2, p)
}

// ---------------------------------------------------------------------------
// Dense polynomials over F_p (little-endian coefficient vectors), used for
// modulus search and element arithmetic.
// ---------------------------------------------------------------------------

fn poly_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_deg(v: &[u64]) -> Option<usize> {
    v.iter().rposition(|&c| c != 0)
}

fn poly_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod_u64(ai, bj, p)) % p;
        }
    }
    poly_trim(&mut out);
    out
}

/// Remainder of `a` modulo `m` (leading coefficient of `m` need not be 1).
fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let md = poly_deg(m).expect("rem by zero polynomial");
    let lead_inv = inv_mod_u64(m[md], p);
    let mut r: Vec<u64> = a.to_vec();
    poly_trim(&mut r);
    while let Some(rd) = poly_deg(&r) {
        if rd < md {
            break;
        }
        let factor = mul_mod_u64(r[rd], lead_inv, p);
        let shift = rd - md;
        for j in 0..=md {
            let sub = mul_mod_u64(factor, m[j], p);
            r[shift + j] = (r[shift + j] + p - sub) % p;
        }
        poly_trim(&mut r);
    }
    r
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// `base^e mod m` over `F_p[x]`.
fn poly_powmod(base: &[u64], mut e: u128, m: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut sq = poly_rem(base, m, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_rem(&poly_mul(&acc, &sq, p), m, p);
        }
        sq = poly_rem(&poly_mul(&sq, &sq, p), m, p);
        e >>= 1;
    }
    acc
}

/// Irreducibility over `F_p` via the gcd criterion: `f` of degree `k` is
/// irreducible iff `x^{p^k} = x (mod f)` and `gcd(x^{p^{k/t}} - x, f) = 1`
/// for every prime `t | k`.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let k = match poly_deg(f) {
        Some(d) if d >= 1 => d,
        _ => return false,
    };
    let x = vec![0u64, 1];
    let xq = poly_powmod(&x, (p as u128).pow(k as u32), f, p);
    // x^{p^k} - x must be 0 mod f.
    let mut diff = xq;
    if diff.len() < 2 {
        diff.resize(2, 0);
    }
    diff[1] = (diff[1] + p - 1) % p;
    poly_trim(&mut diff);
    if !diff.is_empty() {
        return false;
    }
    let mut rest = k;
    let mut t = 2usize;
    let mut prime_divisors = Vec::new();
    while t * t <= rest {
        if rest % t == 0 {
            prime_divisors.push(t);
            while rest % t == 0 {
                rest /= t;
            }
        }
        t += 1;
    }
    if rest > 1 {
        prime_divisors.push(rest);
    }
    for t in prime_divisors {
        let d = k / t;
        let mut g = poly_powmod(&x, (p as u128).pow(d as u32), f, p);
        if g.len() < 2 {
            g.resize(2, 0);
        }
        g[1] = (g[1] + p - 1) % p;
        poly_trim(&mut g);
        let gcd = poly_gcd(&g, f, p);
        if poly_deg(&gcd) != Some(0) {
            return false;
        }
    }
    true
}

/// Builds `F_{p^k}`. For `k > 1` the modulus is found by exhaustive search
/// in ascending order of the coefficient tuple `(c_{k-1}, ..., c_0)`, so the
/// result is deterministic across runs.
pub fn make_field(p: u64, k: u32) -> Result<FieldDesc, FieldError> {
    if !is_prime(p) {
        return Err(FieldError::NotPrime(p));
    }
    if k < 1 {
        return Err(FieldError::BadDegree(k));
    }
    let q = (p as u128).checked_pow(k).filter(|&q| q <= MAX_FIELD_SIZE);
    if q.is_none() {
        return Err(FieldError::FieldTooLarge { p, k });
    }
    if k == 1 {
        return Ok(FieldDesc { p, k, modulus: None });
    }
    let span = (p as u128).pow(k - 1);
    for m in 0..(p as u128).pow(k) {
        // Digit j of m (most significant first) is c_{k-1-j}.
        let mut coeffs = vec![0u64; k as usize + 1];
        coeffs[k as usize] = 1;
        let mut rem = m;
        let mut place = span;
        for j in (0..k as usize).rev() {
            coeffs[j] = (rem / place) as u64;
            rem %= place;
            place /= p as u128;
            if place == 0 {
                break;
            }
        }
        // Redo digit extraction defensively: little-endian digits of m.
        let mut rem = m;
        for c in coeffs.iter_mut().take(k as usize) {
            *c = (rem % p as u128) as u64;
            rem /= p as u128;
        }
        if is_irreducible(&coeffs, p) {
            return Ok(FieldDesc { p, k, modulus: Some(coeffs) });
        }
    }
    unreachable!("irreducible polynomials of every degree exist over F_p")
}

impl FieldDesc {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Field size `p^k`.
    pub fn size(&self) -> u128 {
        (self.p as u128).pow(self.k)
    }

    /// Modulus coefficients (little-endian, length `k + 1`); `None` for prime fields.
    pub fn modulus(&self) -> Option<&[u64]> {
        self.modulus.as_deref()
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { coeffs: vec![0; self.k as usize] }
    }

    pub fn one(&self) -> FieldElement {
        self.from_u64(1)
    }

    pub fn from_u64(&self, c: u64) -> FieldElement {
        let mut coeffs = vec![0; self.k as usize];
        coeffs[0] = c % self.p;
        FieldElement { coeffs }
    }

    /// Reduces an arbitrary signed integer into the prime subfield.
    pub fn from_i64(&self, c: i64) -> FieldElement {
        let r = c.rem_euclid(self.p as i64) as u64;
        self.from_u64(r)
    }

    pub fn is_zero(&self, a: &FieldElement) -> bool {
        a.coeffs.iter().all(|&c| c == 0)
    }

    fn check(&self, a: &FieldElement) -> Result<(), FieldError> {
        if a.coeffs.len() != self.k as usize {
            return Err(FieldError::WrongElementShape {
                got: a.coeffs.len(),
                expected: self.k as usize,
            });
        }
        Ok(())
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| {
                let s = x + y;
                if s >= self.p { s - self.p } else { s }
            })
            .collect();
        FieldElement { coeffs }
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| if x >= y { x - y } else { x + self.p - y })
            .collect();
        FieldElement { coeffs }
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        self.sub(&self.zero(), a)
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        if self.k == 1 {
            return FieldElement { coeffs: vec![mul_mod_u64(a.coeffs[0], b.coeffs[0], self.p)] };
        }
        let m = self.modulus.as_ref().unwrap();
        let prod = poly_mul(&a.coeffs, &b.coeffs, self.p);
        let mut red = poly_rem(&prod, m, self.p);
        red.resize(self.k as usize, 0);
        FieldElement { coeffs: red }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        if self.is_zero(a) {
            return Err(FieldError::DivisionByZero);
        }
        if self.k == 1 {
            return Ok(FieldElement { coeffs: vec![inv_mod_u64(a.coeffs[0], self.p)] });
        }
        let m = self.modulus.as_ref().unwrap();
        // Invariants: r0 = s0*a (mod m), r1 = s1*a (mod m).
        let mut r0: Vec<u64> = m.clone();
        let mut r1: Vec<u64> = a.coeffs.clone();
        poly_trim(&mut r1);
        let mut s0: Vec<u64> = Vec::new();
        let mut s1: Vec<u64> = vec![1];
        while !r1.is_empty() {
            let (q, r) = poly_divmod(&r0, &r1, self.p);
            let qs1 = poly_mul(&q, &s1, self.p);
            let s_new = poly_sub(&s0, &qs1, self.p);
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s_new);
        }
        // r0 is a nonzero constant gcd since m is irreducible and a != 0.
        let d = poly_deg(&r0).expect("gcd of nonzero inputs");
        debug_assert_eq!(d, 0, "modulus must be irreducible");
        let scale = inv_mod_u64(r0[0], self.p);
        let mut out = poly_rem(&poly_mul(&s0, &[scale], self.p), m, self.p);
        out.resize(self.k as usize, 0);
        Ok(FieldElement { coeffs: out })
    }

    pub fn div(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement, FieldError> {
        let binv = self.inv(b)?;
        Ok(self.mul(a, &binv))
    }

    pub fn pow(&self, a: &FieldElement, mut e: u128) -> FieldElement {
        let mut acc = self.one();
        let mut sq = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &sq);
            }
            sq = self.mul(&sq, &sq);
            e >>= 1;
        }
        acc
    }

    /// The p-power (arithmetic) Frobenius `a -> a^p`. Its k-th iterate is the
    /// geometric q-power map that fixes exactly `F_{p^k}`-rational data.
    pub fn frobenius(&self, a: &FieldElement) -> FieldElement {
        self.pow(a, self.p as u128)
    }

    /// Canonical index of an element: its coefficient vector read as a base-p
    /// number, least-significant digit first.
    pub fn index_of(&self, a: &FieldElement) -> u128 {
        let mut idx = 0u128;
        for &c in a.coeffs.iter().rev() {
            idx = idx * self.p as u128 + c as u128;
        }
        idx
    }

    pub fn element_from_index(&self, mut idx: u128) -> FieldElement {
        let mut coeffs = vec![0u64; self.k as usize];
        for c in coeffs.iter_mut() {
            *c = (idx % self.p as u128) as u64;
            idx /= self.p as u128;
        }
        FieldElement { coeffs }
    }

    /// All `p^k` elements in the fixed coefficient order: index 0 is the zero
    /// element, index 1 is the multiplicative identity.
    pub fn enumerate_elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.size()).map(move |i| self.element_from_index(i))
    }

    pub fn format_element(&self, a: &FieldElement) -> String {
        if self.k == 1 {
            return a.coeffs[0].to_string();
        }
        let mut parts = Vec::new();
        for (j, &c) in a.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let part = match (j, c) {
                (0, c) => c.to_string(),
                (1, 1) => "g".to_string(),
                (1, c) => format!("{c}*g"),
                (j, 1) => format!("g^{j}"),
                (j, c) => format!("{c}*g^{j}"),
            };
            parts.push(part);
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join("+")
        }
    }
}

fn poly_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len().max(b.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *o = (x + p - y) % p;
    }
    poly_trim(&mut out);
    out
}

fn poly_divmod(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let bd = poly_deg(b).expect("division by zero polynomial");
    let lead_inv = inv_mod_u64(b[bd], p);
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut q = vec![0u64; r.len().saturating_sub(bd) + 1];
    while let Some(rd) = poly_deg(&r) {
        if rd < bd {
            break;
        }
        let factor = mul_mod_u64(r[rd], lead_inv, p);
        let shift = rd - bd;
        q[shift] = factor;
        for j in 0..=bd {
            let sub = mul_mod_u64(factor, b[j], p);
            r[shift + j] = (r[shift + j] + p - sub) % p;
        }
        poly_trim(&mut r);
    }
    poly_trim(&mut q);
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle for degree <= 3: a cubic or quadratic over F_p is
    /// irreducible iff it has no root in F_p.
    fn irreducible_low_degree_oracle(f: &[u64], p: u64) -> bool {
        let d = poly_deg(f).unwrap();
        assert!((2..=3).contains(&d));
        for x in 0..p {
            let mut v = 0u64;
            for &c in f.iter().rev() {
                v = (mul_mod_u64(v, x, p) + c) % p;
            }
            if v == 0 {
                return false;
            }
        }
        true
    }

    #[test]
    fn prime_field_has_no_modulus() {
        let f = make_field(5, 1).unwrap();
        assert_eq!(f.p(), 5);
        assert_eq!(f.k(), 1);
        assert!(f.modulus().is_none());
    }

    #[test]
    fn f8_modulus_is_lex_smallest() {
        // Oracle: walk the 8 monic cubics over F_2 in tuple order and take
        // the first root-free one.
        let mut expected = None;
        for m in 0u64..8 {
            let f = vec![m & 1, (m >> 1) & 1, (m >> 2) & 1, 1];
            if irreducible_low_degree_oracle(&f, 2) {
                expected = Some(f);
                break;
            }
        }
        assert_eq!(expected.as_deref(), Some(&[1, 1, 0, 1][..])); // x^3 + x + 1
        let f8 = make_field(2, 3).unwrap();
        assert_eq!(f8.modulus(), expected.as_deref());
    }

    #[test]
    fn non_prime_p_rejected() {
        assert_eq!(make_field(4, 1).unwrap_err(), FieldError::NotPrime(4));
        assert_eq!(make_field(1, 1).unwrap_err(), FieldError::NotPrime(1));
        assert_eq!(make_field(7, 0).unwrap_err(), FieldError::BadDegree(0));
    }

    #[test]
    fn arith_prime_field() {
        let f7 = make_field(7, 1).unwrap();
        let three = f7.from_u64(3);
        let five = f7.from_u64(5);
        assert_eq!(f7.mul(&three, &five), f7.from_u64(1));
    }

    #[test]
    fn arith_f8_reduction() {
        // F_8 with x^3 + x + 1: x * x^2 = x^3 = x + 1.
        let f8 = make_field(2, 3).unwrap();
        let x = f8.element_from_index(2);
        let x2 = f8.mul(&x, &x);
        let x3 = f8.mul(&x, &x2);
        assert_eq!(x3.coeffs, vec![1, 1, 0]);
    }

    #[test]
    fn division_by_zero_errors() {
        let f5 = make_field(5, 1).unwrap();
        let a = f5.from_u64(2);
        assert_eq!(f5.div(&a, &f5.zero()).unwrap_err(), FieldError::DivisionByZero);
    }

    #[test]
    fn enumeration_is_canonical() {
        let f2 = make_field(2, 1).unwrap();
        let els: Vec<_> = f2.enumerate_elements().collect();
        assert_eq!(els.len(), 2);
        assert_eq!(els[0], f2.zero());
        assert_eq!(els[1], f2.one());

        let f4 = make_field(2, 2).unwrap();
        let els: Vec<_> = f4.enumerate_elements().collect();
        assert_eq!(els.len(), 4);
        for i in 0..els.len() {
            for j in i + 1..els.len() {
                assert_ne!(els[i], els[j]);
            }
        }
    }

    #[test]
    fn f9_element_sum_is_zero() {
        let f9 = make_field(3, 2).unwrap();
        let sum = f9
            .enumerate_elements()
            .fold(f9.zero(), |acc, e| f9.add(&acc, &e));
        assert!(f9.is_zero(&sum));
    }

    #[test]
    fn frobenius_on_f4() {
        // F_4 = F_2[x]/(x^2+x+1): frob(x) = x^2 = x + 1.
        let f4 = make_field(2, 2).unwrap();
        assert_eq!(f4.modulus(), Some(&[1, 1, 1][..]));
        let x = f4.element_from_index(2);
        assert_eq!(f4.frobenius(&x).coeffs, vec![1, 1]);
    }

    #[test]
    fn frobenius_iterates_to_identity_and_fixes_prime_subfield() {
        let f = make_field(3, 3).unwrap();
        let mut fixed = 0u32;
        for a in f.enumerate_elements() {
            let mut b = a.clone();
            for _ in 0..f.k() {
                b = f.frobenius(&b);
            }
            assert_eq!(b, a);
            if f.frobenius(&a) == a {
                fixed += 1;
            }
        }
        assert_eq!(fixed as u64, f.p());
    }

    #[test]
    fn make_field_is_deterministic() {
        for (p, k) in [(2u64, 4u32), (3, 3), (5, 2), (7, 2)] {
            let a = make_field(p, k).unwrap();
            let b = make_field(p, k).unwrap();
            assert_eq!(a.modulus(), b.modulus());
        }
    }

    #[test]
    fn index_roundtrip() {
        let f = make_field(3, 2).unwrap();
        for i in 0..f.size() {
            let e = f.element_from_index(i);
            assert_eq!(f.index_of(&e), i);
        }
    }

    #[test]
    fn seeded_field_axioms() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0f1e1d);
        for (p, k) in [(2u64, 3u32), (3, 2), (5, 1), (7, 2), (11, 1)] {
            let f = make_field(p, k).unwrap();
            let q = f.size();
            for _ in 0..64 {
                let a = f.element_from_index(rng.gen_range(0..q));
                let b = f.element_from_index(rng.gen_range(0..q));
                let c = f.element_from_index(rng.gen_range(0..q));
                assert_eq!(f.add(&a, &b), f.add(&b, &a));
                assert_eq!(f.mul(&a, &b), f.mul(&b, &a));
                assert_eq!(f.mul(&f.mul(&a, &b), &c), f.mul(&a, &f.mul(&b, &c)));
                assert_eq!(f.add(&f.add(&a, &b), &c), f.add(&a, &f.add(&b, &c)));
                let lhs = f.mul(&a, &f.add(&b, &c));
                let rhs = f.add(&f.mul(&a, &b), &f.mul(&a, &c));
                assert_eq!(lhs, rhs);
                // Frobenius is a ring homomorphism.
                assert_eq!(
                    f.frobenius(&f.add(&a, &b)),
                    f.add(&f.frobenius(&a), &f.frobenius(&b))
                );
                assert_eq!(
                    f.frobenius(&f.mul(&a, &b)),
                    f.mul(&f.frobenius(&a), &f.frobenius(&b))
                );
                if !f.is_zero(&a) {
                    let ainv = f.inv(&a).unwrap();
                    assert_eq!(f.mul(&a, &ainv), f.one());
                }
                // a^{p^k} = a.
                assert_eq!(f.pow(&a, q), a);
            }
        }
    }
}
