//! Numeric root finding for the small square-free polynomials that come out
//! of zeta denominators and numerators.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Complex {
        Complex { re, im }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }

    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }

    fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    fn div(self, o: Complex) -> Complex {
        let d = o.re * o.re + o.im * o.im;
        Complex::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }
}

fn horner(coeffs: &[f64], z: Complex) -> Complex {
    let mut acc = Complex::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc.mul(z).add(Complex::new(c, 0.0));
    }
    acc
}

/// All complex roots of a polynomial given by ascending real coefficients,
/// by Durand-Kerner iteration. Intended for square-free inputs of small
/// degree; simple roots converge to near machine precision.
pub fn all_roots(coeffs: &[f64]) -> Vec<Complex> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        // c0 + c1 t = 0
        return vec![Complex::new(-coeffs[0] / coeffs[1], 0.0)];
    }
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();

    // Distinct starting points on a slowly spiraling circle.
    let seed = Complex::new(0.4, 0.9);
    let mut roots = Vec::with_capacity(deg);
    let mut z = Complex::new(1.0, 0.0);
    for _ in 0..deg {
        z = z.mul(seed);
        roots.push(z);
    }

    for _ in 0..1000 {
        let mut max_step = 0.0f64;
        for j in 0..deg {
            let fz = horner(&monic, roots[j]);
            let mut denom = Complex::new(1.0, 0.0);
            for k in 0..deg {
                if k != j {
                    denom = denom.mul(roots[j].sub(roots[k]));
                }
            }
            let step = fz.div(denom);
            roots[j] = roots[j].sub(step);
            max_step = max_step.max(step.abs());
        }
        if max_step < 1e-14 {
            break;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: Complex, re: f64, im: f64) {
        assert!((a.re - re).abs() < 1e-9 && (a.im - im).abs() < 1e-9, "{a:?} != {re}+{im}i");
    }

    #[test]
    fn linear_and_quadratic() {
        let r = all_roots(&[1.0, -3.0]); // 1 - 3t
        assert_eq!(r.len(), 1);
        assert_close(r[0], 1.0 / 3.0, 0.0);

        // 1 - 4t + 3t^2 = (1 - t)(1 - 3t)
        let mut r = all_roots(&[1.0, -4.0, 3.0]);
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_close(r[0], 1.0 / 3.0, 0.0);
        assert_close(r[1], 1.0, 0.0);
    }

    #[test]
    fn complex_conjugate_pair() {
        // 1 + 2t + 5t^2 has roots (-1 +- 2i)/5, each of modulus 1/sqrt(5).
        let r = all_roots(&[1.0, 2.0, 5.0]);
        assert_eq!(r.len(), 2);
        for root in &r {
            assert!((root.abs() - 1.0 / 5.0f64.sqrt()).abs() < 1e-12);
            assert!((root.re - (-0.2)).abs() < 1e-12);
            assert!((root.im.abs() - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_with_known_roots() {
        // (1 - t)(1 - 2t)(1 - 3t)(1 - 5t)
        let coeffs = [1.0, -11.0, 41.0, -61.0, 30.0];
        let mut r = all_roots(&coeffs);
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        let expect = [0.2, 1.0 / 3.0, 0.5, 1.0];
        for (root, e) in r.iter().zip(expect) {
            assert!((root.re - e).abs() < 1e-9 && root.im.abs() < 1e-9);
        }
    }
}
