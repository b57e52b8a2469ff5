//! Double-double complex arithmetic for residual evaluation during
//! iterative refinement. Only the handful of operations the refinement
//! loop needs are provided.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub fn from_c64(z: Complex64) -> Cdd {
        Cdd {
            re: Dd::new(z.re),
            im: Dd::new(z.im),
        }
    }

    pub fn add(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    pub fn sub(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.sub(o.re),
            im: self.im.sub(o.im),
        }
    }

    pub fn add_c64(self, z: Complex64) -> Cdd {
        self.add(Cdd::from_c64(z))
    }

    /// `y · self` with `y` in plain double precision.
    pub fn scale(self, y: Complex64) -> Cdd {
        Cdd {
            re: self.re.mul_f64(y.re).sub(self.im.mul_f64(y.im)),
            im: self.re.mul_f64(y.im).add(self.im.mul_f64(y.re)),
        }
    }

    pub fn head(self) -> Complex64 {
        Complex64::new(self.re.hi, self.im.hi)
    }

    pub fn tail(self) -> Complex64 {
        Complex64::new(self.re.lo, self.im.lo)
    }

    /// Rounded to the nearest double.
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.hi + self.re.lo, self.im.hi + self.im.lo)
    }

    pub fn norm(self) -> f64 {
        self.to_c64().norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_lost_bits() {
        let big = Dd::new(1e16);
        let s = big.add(Dd::new(1.0)).sub(big);
        assert_eq!(s.hi + s.lo, 1.0);

        let x = Dd::new(0.1).mul_f64(3.0);
        // 3 × fl(0.1) is not representable; the tail keeps the remainder
        assert!(x.lo != 0.0);
        assert_eq!(x.hi, 0.30000000000000004);
    }

    #[test]
    fn complex_scale() {
        let z = Cdd::from_c64(Complex64::new(1.0, 2.0));
        let p = z.scale(Complex64::new(3.0, -1.0)).to_c64();
        assert_eq!(p, Complex64::new(5.0, 5.0));
    }
}
