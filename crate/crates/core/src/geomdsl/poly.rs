//! Sparse multivariate polynomials with exact integer coefficients.
//!
//! A polynomial is a map from exponent vectors to nonzero `BigInt`
//! coefficients. Every exponent vector has length `nvars`, the number of
//! variables of the enclosing model, so term-by-term operations never have
//! to reconcile shapes.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u16>, BigInt>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Polynomial {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: BigInt) -> Polynomial {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0u16; nvars], c);
        }
        Polynomial { nvars, terms }
    }

    pub fn variable(nvars: usize, i: usize) -> Polynomial {
        assert!(i < nvars);
        let mut exps = vec![0u16; nvars];
        exps[i] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(exps, BigInt::one());
        Polynomial { nvars, terms }
    }

    pub fn from_terms<I>(nvars: usize, iter: I) -> Polynomial
    where
        I: IntoIterator<Item = (Vec<u16>, BigInt)>,
    {
        let mut out = Polynomial::zero(nvars);
        for (exps, c) in iter {
            assert_eq!(exps.len(), nvars);
            out.add_term(exps, c);
        }
        out
    }

    fn add_term(&mut self, exps: Vec<u16>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn iter_terms(&self) -> impl Iterator<Item = (&[u16], &BigInt)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    /// The constant coefficient (zero if absent).
    pub fn constant_term(&self) -> BigInt {
        self.terms
            .get(&vec![0u16; self.nvars])
            .cloned()
            .unwrap_or_else(BigInt::zero)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect();
        Polynomial { nvars: self.nvars, terms }
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u16> = ea
                    .iter()
                    .zip(eb)
                    .map(|(&x, &y)| {
                        x.checked_add(y).expect("monomial degree exceeds supported range")
                    })
                    .collect();
                out.add_term(exps, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u16) -> Polynomial {
        let mut acc = Polynomial::constant(self.nvars, BigInt::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn scale(&self, c: &BigInt) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        let terms = self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect();
        Polynomial { nvars: self.nvars, terms }
    }

    /// Formal partial derivative in variable `i`.
    pub fn partial(&self, i: usize) -> Polynomial {
        assert!(i < self.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut exps = e.clone();
            exps[i] -= 1;
            out.add_term(exps, c * BigInt::from(e[i]));
        }
        out
    }

    /// Substitutes `images[i]` for variable `i`. All images must agree on
    /// their own variable count, which becomes the result's.
    pub fn compose(&self, images: &[Polynomial]) -> Polynomial {
        assert_eq!(images.len(), self.nvars);
        let out_nvars = images.first().map_or(0, |q| q.nvars);
        for q in images {
            assert_eq!(q.nvars, out_nvars);
        }
        let mut acc = Polynomial::zero(out_nvars);
        for (exps, coeff) in &self.terms {
            let mut term = Polynomial::constant(out_nvars, coeff.clone());
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    term = term.mul(&images[i].pow(e));
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as u32).sum())
            .max()
    }

    pub fn degree_in(&self, i: usize) -> Option<u16> {
        self.terms.keys().map(|e| e[i]).max()
    }

    /// Which variables actually occur.
    pub fn support(&self) -> Vec<bool> {
        let mut s = vec![false; self.nvars];
        for e in self.terms.keys() {
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    s[i] = true;
                }
            }
        }
        s
    }

    /// True when every term has the same total degree in the masked
    /// variables. The zero polynomial counts as homogeneous.
    pub fn is_homogeneous_in(&self, mask: &[bool]) -> bool {
        assert_eq!(mask.len(), self.nvars);
        let mut expected: Option<u32> = None;
        for e in self.terms.keys() {
            let d: u32 = e
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(&x, _)| x as u32)
                .sum();
            match expected {
                None => expected = Some(d),
                Some(x) if x != d => return false,
                _ => {}
            }
        }
        true
    }

    pub fn eval_bigint(&self, vals: &[BigInt]) -> BigInt {
        assert_eq!(vals.len(), self.nvars);
        let mut acc = BigInt::zero();
        for (exps, coeff) in &self.terms {
            let mut t = coeff.clone();
            for (i, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    t *= &vals[i];
                }
            }
            acc += t;
        }
        acc
    }

    /// Evaluation over `Z/m` with residue inputs. `m` must fit squares in
    /// `u128`, which holds for every modulus `p^N` this crate touches.
    pub fn eval_mod(&self, vals: &[u128], m: u128) -> u128 {
        assert_eq!(vals.len(), self.nvars);
        assert!(m >= 2 && m <= (1u128 << 63));
        let big_m = BigInt::from(m);
        let mut acc = 0u128;
        for (exps, coeff) in &self.terms {
            let c = ((coeff % &big_m) + &big_m) % &big_m;
            let mut t: u128 = c.try_into().expect("reduced residue fits u128");
            for (i, &e) in exps.iter().enumerate() {
                t = (t * pow_mod_u128(vals[i] % m, e as u64, m)) % m;
            }
            acc = (acc + t) % m;
        }
        acc
    }
}

fn pow_mod_u128(mut base: u128, mut e: u64, m: u128) -> u128 {
    let mut acc = 1u128 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    acc
}

/// Canonical text form: terms in graded lexicographic order, highest total
/// degree first, ties broken by the exponent vector descending.
pub fn poly_to_string(p: &Polynomial, names: &[String]) -> String {
    assert_eq!(names.len(), p.nvars);
    if p.terms.is_empty() {
        return "0".to_string();
    }
    let mut terms: Vec<(&Vec<u16>, &BigInt)> = p.terms.iter().collect();
    terms.sort_by(|a, b| {
        let da: u32 = a.0.iter().map(|&e| e as u32).sum();
        let db: u32 = b.0.iter().map(|&e| e as u32).sum();
        db.cmp(&da).then_with(|| b.0.cmp(a.0))
    });
    let mut out = String::new();
    for (i, (exps, coeff)) in terms.iter().enumerate() {
        let neg = coeff.is_negative();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let abs = coeff.abs();
        let is_const = exps.iter().all(|&e| e == 0);
        let mut parts: Vec<String> = Vec::new();
        if !abs.is_one() || is_const {
            parts.push(abs.to_string());
        }
        for (j, &e) in exps.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(names[j].clone()),
                e => parts.push(format!("{}^{}", names[j], e)),
            }
        }
        out.push_str(&parts.join("*"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Polynomial {
        Polynomial::variable(2, 0)
    }

    fn y() -> Polynomial {
        Polynomial::variable(2, 1)
    }

    #[test]
    fn cancellation_drops_terms() {
        let p = x().add(&y()).sub(&y());
        assert_eq!(p, x());
        assert_eq!(x().sub(&x()), Polynomial::zero(2));
        assert!(x().sub(&x()).is_zero());
    }

    #[test]
    fn partial_derivative() {
        // d/dx (x^3 - x*y + 2) = 3x^2 - y
        let p = x()
            .pow(3)
            .sub(&x().mul(&y()))
            .add(&Polynomial::constant(2, BigInt::from(2)));
        let expect = Polynomial::variable(2, 0)
            .pow(2)
            .scale(&BigInt::from(3))
            .sub(&y());
        assert_eq!(p.partial(0), expect);
    }

    #[test]
    fn print_order_is_graded_lex() {
        let p = y().sub(&x().pow(2));
        let names = vec!["x".to_string(), "y".to_string()];
        assert_eq!(poly_to_string(&p, &names), "-x^2 + y");
        let q = x().mul(&y().pow(2)).add(&x().pow(2).mul(&y()));
        assert_eq!(poly_to_string(&q, &names), "x^2*y + x*y^2");
    }

    #[test]
    fn eval_mod_matches_bigint() {
        let p = x()
            .pow(3)
            .sub(&y().pow(2).scale(&BigInt::from(5)))
            .add(&Polynomial::constant(2, BigInt::from(-7)));
        let m = 3u128.pow(4);
        for (a, b) in [(0u128, 0u128), (2, 5), (80, 17), (13, 26)] {
            let exact = p.eval_bigint(&[BigInt::from(a), BigInt::from(b)]);
            let red = ((exact % BigInt::from(m)) + BigInt::from(m)) % BigInt::from(m);
            assert_eq!(BigInt::from(p.eval_mod(&[a, b], m)), red);
        }
    }

    #[test]
    fn compose_substitutes() {
        // f(x, y) = x*y - 1 composed with x -> u^2, y -> u + v gives
        // u^3 + u^2*v - 1.
        let f = x().mul(&y()).sub(&Polynomial::constant(2, BigInt::one()));
        let u = Polynomial::variable(2, 0);
        let v = Polynomial::variable(2, 1);
        let g = f.compose(&[u.pow(2), u.add(&v)]);
        let expect = u.pow(3).add(&u.pow(2).mul(&v)).sub(&Polynomial::constant(2, BigInt::one()));
        assert_eq!(g, expect);
    }

    #[test]
    fn homogeneity_mask() {
        // x*t - y*s is bihomogeneous for groups {x, y} and {s, t}.
        let xv = |i| Polynomial::variable(4, i);
        let f = xv(0).mul(&xv(3)).sub(&xv(1).mul(&xv(2)));
        assert!(f.is_homogeneous_in(&[true, true, false, false]));
        assert!(f.is_homogeneous_in(&[false, false, true, true]));
        let g = f.add(&xv(0));
        assert!(!g.is_homogeneous_in(&[false, false, true, true]));
    }

    #[test]
    fn seeded_ring_axioms() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e0d);
        let random_poly = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut p = Polynomial::zero(3);
            for _ in 0..rng.gen_range(0..6) {
                let exps = vec![
                    rng.gen_range(0..4u16),
                    rng.gen_range(0..4u16),
                    rng.gen_range(0..3u16),
                ];
                p = p.add(&Polynomial::from_terms(
                    3,
                    [(exps, BigInt::from(rng.gen_range(-9i32..=9)))],
                ));
            }
            p
        };
        for _ in 0..60 {
            let a = random_poly(&mut rng);
            let b = random_poly(&mut rng);
            let c = random_poly(&mut rng);
            assert_eq!(a.mul(&b), b.mul(&a));
            assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            // Leibniz rule for the formal derivative.
            let lhs = a.mul(&b).partial(0);
            let rhs = a.partial(0).mul(&b).add(&a.mul(&b.partial(0)));
            assert_eq!(lhs, rhs);
        }
    }
}
