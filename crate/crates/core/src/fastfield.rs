//! Table-backed finite field arithmetic for the point-counting hot path.
//!
//! Elements are `u32` indices in the same canonical order as
//! [`crate::ffield::FieldDesc::index_of`]: the coefficient vector of an
//! element read as a base-p number, least significant digit first. Index 0
//! is zero, index 1 is one, and for prime fields index `i` is the residue
//! `i`. Multiplication and inversion go through discrete-log tables over a
//! fixed generator; addition is digitwise (a plain XOR when `p = 2`).
//!
//! Every table is derived from the exact [`crate::ffield`] arithmetic, so
//! the two implementations agree by construction; the tests re-check that
//! on random samples.

use crate::ffield::{make_field, FieldDesc, FieldError};

pub struct FastField {
    p: u32,
    k: u32,
    q: u32,
    /// exp[i] = index of g^i for 0 <= i < 2(q-1), doubled to skip a reduction.
    exp: Vec<u32>,
    /// log[x] = discrete log of x base g; log[0] is a sentinel.
    log: Vec<u32>,
    neg: Vec<u32>,
}

const LOG_ZERO: u32 = u32::MAX;

// Tables are q-sized; counting jobs that would need more hit the budget
// check long before the allocation would hurt.
const MAX_TABLE_FIELD: u128 = 1 << 22;

impl FastField {
    pub fn new(p: u64, k: u32) -> Result<FastField, FieldError> {
        let desc = make_field(p, k)?;
        if desc.size() > MAX_TABLE_FIELD {
            return Err(FieldError::FieldTooLarge { p, k });
        }
        Ok(Self::from_desc(&desc))
    }

    pub fn from_desc(desc: &FieldDesc) -> FastField {
        let p = desc.p() as u32;
        let k = desc.k();
        let q = desc.size() as u32;
        let g_idx = find_generator(desc);
        let g = desc.element_from_index(g_idx as u128);

        let mut exp = vec![0u32; 2 * (q as usize - 1)];
        let mut log = vec![LOG_ZERO; q as usize];
        let mut acc = desc.one();
        for (i, e) in exp.iter_mut().take(q as usize - 1).enumerate() {
            let idx = desc.index_of(&acc) as u32;
            *e = idx;
            log[idx as usize] = i as u32;
            acc = desc.mul(&acc, &g);
        }
        for i in 0..(q as usize - 1) {
            exp[q as usize - 1 + i] = exp[i];
        }

        let mut neg = vec![0u32; q as usize];
        for (i, n) in neg.iter_mut().enumerate() {
            let e = desc.element_from_index(i as u128);
            *n = desc.index_of(&desc.neg(&e)) as u32;
        }

        FastField { p, k, q, exp, log, neg }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.k == 1 {
            let s = a + b;
            return if s >= self.q { s - self.q } else { s };
        }
        if self.p == 2 {
            // Base-2 digits add without carry.
            return a ^ b;
        }
        let mut out = 0u32;
        let mut place = 1u32;
        let (mut a, mut b) = (a, b);
        for _ in 0..self.k {
            let da = a % self.p;
            let db = b % self.p;
            let mut s = da + db;
            if s >= self.p {
                s -= self.p;
            }
            out += s * place;
            place *= self.p;
            a /= self.p;
            b /= self.p;
        }
        out
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg[b as usize])
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let la = self.log[a as usize];
        let lb = self.log[b as usize];
        self.exp[(la + lb) as usize]
    }

    /// Inverse of a nonzero element; panics on zero (the counter never
    /// divides by a value it has not already branched on).
    #[inline]
    pub fn inv(&self, a: u32) -> u32 {
        debug_assert_ne!(a, 0);
        let la = self.log[a as usize];
        if la == 0 {
            return a; // a = 1
        }
        self.exp[(self.q - 1 - la) as usize]
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if a == 0 {
            return if e == 0 { 1 } else { 0 };
        }
        let la = self.log[a as usize] as u64;
        let r = ((la as u128 * e as u128) % (self.q as u128 - 1)) as usize;
        self.exp[r]
    }

    /// Embeds an integer scalar through the prime subfield.
    pub fn scalar(&self, c: i64) -> u32 {
        c.rem_euclid(self.p as i64) as u32
    }

    pub fn elements(&self) -> std::ops::Range<u32> {
        0..self.q
    }
}

fn find_generator(desc: &FieldDesc) -> u32 {
    let q = desc.size();
    let order = q - 1;
    let mut factors = Vec::new();
    let mut rest = order;
    let mut d = 2u128;
    while d * d <= rest {
        if rest % d == 0 {
            factors.push(d);
            while rest % d == 0 {
                rest /= d;
            }
        }
        d += 1;
    }
    if rest > 1 {
        factors.push(rest);
    }
    for idx in 1..q {
        let e = desc.element_from_index(idx);
        if factors
            .iter()
            .all(|&f| desc.pow(&e, order / f) != desc.one())
        {
            return idx as u32;
        }
    }
    unreachable!("F_q^* is cyclic, a generator exists")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn prime_field_indices_are_residues() {
        let f = FastField::new(7, 1).unwrap();
        assert_eq!(f.mul(3, 5), 1);
        assert_eq!(f.add(4, 5), 2);
        assert_eq!(f.inv(3), 5);
        assert_eq!(f.pow(3, 6), 1);
    }

    #[test]
    fn matches_exact_field_on_random_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xfa57);
        for (p, k) in [(2u64, 1u32), (2, 4), (3, 2), (5, 2), (7, 1), (11, 2), (13, 1)] {
            let exact = make_field(p, k).unwrap();
            let fast = FastField::from_desc(&exact);
            let q = fast.q() as u128;
            for _ in 0..200 {
                let i = rng.gen_range(0..q);
                let j = rng.gen_range(0..q);
                let a = exact.element_from_index(i);
                let b = exact.element_from_index(j);
                assert_eq!(
                    fast.add(i as u32, j as u32) as u128,
                    exact.index_of(&exact.add(&a, &b))
                );
                assert_eq!(
                    fast.mul(i as u32, j as u32) as u128,
                    exact.index_of(&exact.mul(&a, &b))
                );
                assert_eq!(fast.neg(i as u32) as u128, exact.index_of(&exact.neg(&a)));
                if i != 0 {
                    assert_eq!(
                        fast.inv(i as u32) as u128,
                        exact.index_of(&exact.inv(&a).unwrap())
                    );
                }
                let e = rng.gen_range(0..1000u64);
                assert_eq!(
                    fast.pow(i as u32, e) as u128,
                    exact.index_of(&exact.pow(&a, e as u128))
                );
            }
        }
    }

    #[test]
    fn every_nonzero_element_has_a_log() {
        let f = FastField::new(3, 3).unwrap();
        let mut seen = vec![false; f.q() as usize];
        seen[0] = true;
        for i in 0..(f.q() - 1) {
            let idx = f.exp[i as usize] as usize;
            assert!(!seen[idx], "generator order too small");
            seen[idx] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn field_too_large_rejected() {
        assert!(matches!(
            FastField::new(2, 30),
            Err(FieldError::FieldTooLarge { .. })
        ));
    }
}
