//! Minimal double-double arithmetic (about 106 significant bits), used to
//! evaluate loss values for the finite-difference oracle.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

const LN_2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn renorm(hi: f64, lo: f64) -> Dd {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub(crate) fn hi(self) -> f64 {
        self.hi
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact sum of two doubles.
    pub(crate) fn sum(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_sum(a, b);
        Dd { hi, lo }
    }

    /// Exact product of two doubles.
    pub(crate) fn prod(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    fn scale_pow2(self, k: i32) -> Dd {
        let f = 2f64.powi(k);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    pub(crate) fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = 1.0 / self.hi.sqrt();
        let y = self.hi * x;
        let y2 = Dd::prod(y, y);
        let corr = (self - y2).hi * (x * 0.5);
        Dd::sum(y, corr)
    }

    pub(crate) fn exp(self) -> Dd {
        let k = (self.hi / std::f64::consts::LN_2).round();
        // |r| <= ln2/2, then scaled down by 2^9 so the series converges fast.
        let r = (self - LN_2 * k).scale_pow2(-9);
        let mut term = r;
        let mut s = r;
        for n in 2..=12 {
            term = term * r / n as f64;
            s += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        // expm1(2x) = 2 expm1(x) + expm1(x)^2
        for _ in 0..9 {
            s = s * 2.0 + s * s;
        }
        (s + 1.0).scale_pow2(k as i32)
    }

    /// `ln(1 + self)` for `self > -1`.
    pub(crate) fn ln_1p(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        let one_plus = self + 1.0;
        let mut y = Dd { hi: self.hi.ln_1p(), lo: 0.0 };
        for _ in 0..2 {
            y = y + (one_plus * (-y).exp() - 1.0);
        }
        y
    }
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Dd {
        Dd { hi, lo: 0.0 }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::renorm(s1, s2 + t2)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl Add<f64> for Dd {
    type Output = Dd;
    fn add(self, b: f64) -> Dd {
        let (s1, s2) = two_sum(self.hi, b);
        Dd::renorm(s1, s2 + self.lo)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Sub<f64> for Dd {
    type Output = Dd;
    fn sub(self, b: f64) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        Dd::renorm(p1, p2 + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        Dd::renorm(p1, p2 + self.lo * b)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        Dd::renorm(q1, q2) + q3
    }
}

impl Div<f64> for Dd {
    type Output = Dd;
    fn div(self, b: f64) -> Dd {
        self / Dd::from(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_products_and_sums() {
        let p = Dd::prod(1.0 + 2f64.powi(-30), 1.0 + 2f64.powi(-30));
        assert_eq!(p.hi, 1.0 + 2f64.powi(-29));
        assert_eq!(p.lo, 2f64.powi(-60));
        let s = Dd::sum(1.0, 1e-20);
        assert_eq!((s.hi, s.lo), (1.0, 1e-20));
    }

    #[test]
    fn division_and_sqrt_round_trip() {
        let third = Dd::from(1.0) / 3.0;
        let back = third * 3.0 - 1.0;
        assert!(back.to_f64().abs() < 1e-31);
        let r = Dd::from(2.0).sqrt();
        assert!((r * r - 2.0).to_f64().abs() < 1e-31);
    }

    #[test]
    fn exp_and_log() {
        // e to 32 digits: 2.7182818284590452353602874713527
        let e = Dd::from(1.0).exp();
        let want = Dd::sum(std::f64::consts::E, 1.445_646_891_729_250_2e-16);
        assert!((e - want).to_f64().abs() < 1e-30);
        for x in [-37.5, -3.2, -1e-9, 0.4, 1.0, 12.75] {
            let y = Dd::from(x).exp();
            assert!((y.to_f64() - x.exp()).abs() <= 4.0 * f64::EPSILON * x.exp());
            if x > -5.0 {
                assert!(((y - 1.0).ln_1p() - x).to_f64().abs() < 1e-29);
            }
        }
        for a in [1e-12, 3.5e-6, 0.25, 7.0, 400.0] {
            let l = Dd::from(a).ln_1p();
            let back = l.exp() - 1.0 - a;
            assert!(back.to_f64().abs() < 1e-30 * (1.0 + a));
        }
    }
}
