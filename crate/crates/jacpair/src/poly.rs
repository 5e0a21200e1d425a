//! Dense univariate polynomials over Q, used for edge polynomials and for the
//! `f`, `g` of a normalized pair.

use num_traits::{One, Zero};

use crate::rat::{eval_poly, int, rational_roots, Exp, Rat};
use crate::series::{Series, Space};

/// Coefficients, lowest degree first, without trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UPoly(Vec<Rat>);

impl UPoly {
    pub fn new(mut c: Vec<Rat>) -> UPoly {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        UPoly(c)
    }

    pub fn from_ints(c: &[i64]) -> UPoly {
        UPoly::new(c.iter().map(|&v| int(v)).collect())
    }

    pub fn constant(c: Rat) -> UPoly {
        UPoly::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with -1 for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.0.len() as i64 - 1
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.0.get(i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn lead(&self) -> Rat {
        self.0.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add(&self, o: &UPoly) -> UPoly {
        let n = self.0.len().max(o.0.len());
        UPoly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &UPoly) -> UPoly {
        self.add(&o.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> UPoly {
        UPoly::new(self.0.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &UPoly) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly::default();
        }
        let mut out = vec![Rat::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UPoly::new(out)
    }

    pub fn deriv(&self) -> UPoly {
        UPoly::new(self.0.iter().enumerate().skip(1).map(|(i, a)| a * int(i as i64)).collect())
    }

    pub fn monic(&self) -> UPoly {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&self.lead().recip())
    }

    pub fn divrem(&self, d: &UPoly) -> (UPoly, UPoly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let mut r = self.0.clone();
        let dn = d.0.len();
        if r.len() < dn {
            return (UPoly::default(), self.clone());
        }
        let mut q = vec![Rat::zero(); r.len() - dn + 1];
        let inv = d.lead().recip();
        for k in (0..q.len()).rev() {
            let c = &r[k + dn - 1] * &inv;
            if !c.is_zero() {
                for (j, dj) in d.0.iter().enumerate() {
                    r[k + j] -= &c * dj;
                }
            }
            q[k] = c;
        }
        (UPoly::new(q), UPoly::new(r))
    }

    /// Exact quotient, or `None` when `d` does not divide.
    pub fn div_exact(&self, d: &UPoly) -> Option<UPoly> {
        let (q, r) = self.divrem(d);
        r.is_zero().then_some(q)
    }

    pub fn gcd(&self, o: &UPoly) -> UPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval(&self, t: &Rat) -> Rat {
        eval_poly(&self.0, t)
    }

    /// `p(t + a)`.
    pub fn shift(&self, a: &Rat) -> UPoly {
        let lin = UPoly::new(vec![a.clone(), Rat::one()]);
        self.0.iter().rev().fold(UPoly::default(), |acc, c| acc.mul(&lin).add(&UPoly::constant(c.clone())))
    }

    /// Yun's algorithm: monic square-free `a_1, a_2, ...` with
    /// `monic(self) = a_1 a_2^2 a_3^3 ...`.
    pub fn squarefree(&self) -> Vec<UPoly> {
        let f = self.monic();
        if f.degree() <= 0 {
            return vec![];
        }
        let mut out = vec![];
        let fp = f.deriv();
        let mut a = f.gcd(&fp);
        let mut b = f.div_exact(&a).expect("gcd divides");
        let mut c = fp.div_exact(&a).expect("gcd divides");
        let mut d = c.sub(&b.deriv());
        while b.degree() > 0 {
            a = b.gcd(&d);
            out.push(a.clone());
            b = b.div_exact(&a).expect("gcd divides");
            c = d.div_exact(&a).expect("gcd divides");
            d = c.sub(&b.deriv());
        }
        while out.last().is_some_and(|p| p.degree() == 0) {
            out.pop();
        }
        out
    }

    pub fn is_squarefree(&self) -> bool {
        self.gcd(&self.deriv()).degree() <= 0
    }

    pub fn rational_roots(&self) -> Vec<Rat> {
        rational_roots(&self.0)
    }

    /// Multiplicity of `t` as a root.
    pub fn multiplicity(&self, t: &Rat) -> usize {
        let lin = UPoly::new(vec![-t.clone(), Rat::one()]);
        let mut p = self.clone();
        let mut k = 0;
        while !p.is_zero() {
            match p.div_exact(&lin) {
                Some(q) => {
                    p = q;
                    k += 1;
                }
                None => break,
            }
        }
        k
    }

    /// The polynomial as a series in y with constant x-coefficients.
    pub fn to_series(&self, space: Space) -> Series {
        Series::from_terms(space, self.0.iter().enumerate().map(|(i, c)| ((Exp::zero(), i as i64), c.clone())))
            .expect("polynomial fits every space with y")
    }

    /// Reads `sum c_j y^j` off the x^0 slice; `None` if other x-powers occur
    /// or y-powers are negative.
    pub fn from_series(s: &Series) -> Option<UPoly> {
        let mut c = vec![];
        for (&(a, b), v) in s.terms() {
            if !a.is_zero() || b < 0 {
                return None;
            }
            let b = b as usize;
            if c.len() <= b {
                c.resize(b + 1, Rat::zero());
            }
            c[b] = v.clone();
        }
        Some(UPoly::new(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn division_and_gcd() {
        let a = UPoly::from_ints(&[-1, 0, 1]);
        let b = UPoly::from_ints(&[1, 1]);
        assert_eq!(a.div_exact(&b), Some(UPoly::from_ints(&[-1, 1])));
        assert_eq!(a.gcd(&UPoly::from_ints(&[1, 2, 1])), b);
    }

    #[test]
    fn yun_decomposition() {
        // t (t - 1)^2 (t + 2)^3
        let p = UPoly::from_ints(&[0, 1])
            .mul(&UPoly::from_ints(&[-1, 1]).mul(&UPoly::from_ints(&[-1, 1])))
            .mul(&UPoly::from_ints(&[2, 1]).mul(&UPoly::from_ints(&[2, 1])).mul(&UPoly::from_ints(&[2, 1])));
        let sf = p.squarefree();
        assert_eq!(sf, vec![UPoly::from_ints(&[0, 1]), UPoly::from_ints(&[-1, 1]), UPoly::from_ints(&[2, 1])]);
        assert_eq!(p.multiplicity(&int(-2)), 3);
        assert!(!p.is_squarefree());
    }

    #[test]
    fn shift_matches_eval() {
        let p = UPoly::from_ints(&[3, -1, 0, 2]);
        let q = p.shift(&rat(1, 2));
        for t in [int(0), int(2), rat(-3, 7)] {
            assert_eq!(q.eval(&t), p.eval(&(t.clone() + rat(1, 2))));
        }
    }
}
