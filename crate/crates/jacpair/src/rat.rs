//! Scalars and exponents.
//!
//! Coefficients are arbitrary-precision rationals; x-exponents are small
//! rationals whose denominators divide the series' `N`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;
pub type Exp = Ratio<i64>;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn exp(n: i64, d: i64) -> Exp {
    Exp::new(n, d)
}

pub fn exp_to_rat(e: Exp) -> Rat {
    rat(*e.numer(), *e.denom())
}

/// Converts back to a machine exponent; fails when the parts do not fit.
pub fn rat_to_exp(r: &Rat) -> Result<Exp> {
    let n = r.numer().to_i64();
    let d = r.denom().to_i64();
    match (n, d) {
        (Some(n), Some(d)) => Ok(Exp::new(n, d)),
        _ => Err(Error::BadExponent(fmt_rat(r))),
    }
}

pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn fmt_exp(e: Exp) -> String {
    if e.is_integer() {
        e.numer().to_string()
    } else {
        format!("{}/{}", e.numer(), e.denom())
    }
}

fn split(s: &str) -> Result<(&str, &str)> {
    let s = s.trim();
    Ok(match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    })
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let (a, b) = split(s)?;
    let n: BigInt = a.parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    let d: BigInt = b.parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    if !d.is_positive() {
        return Err(Error::Parse(format!("denominator must be positive in {s:?}")));
    }
    Ok(Rat::new(n, d))
}

pub fn parse_exp(s: &str) -> Result<Exp> {
    let (a, b) = split(s)?;
    let n: i64 = a.parse().map_err(|_| Error::Parse(format!("bad exponent {s:?}")))?;
    let d: i64 = b.parse().map_err(|_| Error::Parse(format!("bad exponent {s:?}")))?;
    if d <= 0 {
        return Err(Error::Parse(format!("denominator must be positive in {s:?}")));
    }
    Ok(Exp::new(n, d))
}

/// Generalized binomial coefficient C(a, k) for rational a.
pub fn binom(a: &Rat, k: u64) -> Rat {
    let mut acc = Rat::one();
    for i in 0..k {
        acc = acc * (a - int(i as i64)) / int(i as i64 + 1);
    }
    acc
}

/// Same as [`binom`] but for a machine exponent.
pub fn binom_exp(a: Exp, k: u64) -> Rat {
    binom(&exp_to_rat(a), k)
}

pub fn pow_i(r: &Rat, k: i64) -> Rat {
    if k >= 0 {
        num_traits::pow(r.clone(), k as usize)
    } else {
        num_traits::pow(r.recip(), (-k) as usize)
    }
}

fn int_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        if k % 2 == 0 {
            return None;
        }
        return int_root(&-n, k).map(|r| -r);
    }
    let r = n.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
}

/// c^(a/b) when it is rational, with the positive root for even b.
pub fn rat_power(c: &Rat, s: Exp) -> Option<Rat> {
    if c.is_zero() {
        return (*s.numer() > 0).then(Rat::zero);
    }
    let a = *s.numer();
    let b = *s.denom();
    let ca = pow_i(c, a);
    let b = u32::try_from(b).ok()?;
    let n = int_root(ca.numer(), b)?;
    let d = int_root(ca.denom(), b)?;
    Some(Rat::new(n, d))
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

pub fn floor_exp(e: Exp) -> i64 {
    e.floor().to_integer()
}

/// Rational roots of a polynomial given by coefficients (lowest degree first).
pub fn rational_roots(coeffs: &[Rat]) -> Vec<Rat> {
    let mut c: Vec<Rat> = coeffs.to_vec();
    while c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    if c.len() <= 1 {
        return vec![];
    }
    let mut roots = vec![];
    let mut low = 0;
    while c[low].is_zero() {
        low += 1;
    }
    if low > 0 {
        roots.push(Rat::zero());
    }
    let c = &c[low..];
    if c.len() <= 1 {
        return roots;
    }
    let den = c.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = c.iter().map(|x| (x * Rat::from_integer(den.clone())).to_integer()).collect();
    let a0 = ints[0].abs();
    let an = ints[ints.len() - 1].abs();
    let ps = divisors(&a0);
    let qs = divisors(&an);
    let mut seen = std::collections::BTreeSet::new();
    for p in &ps {
        for q in &qs {
            for sign in [1, -1] {
                let r = Rat::new(p * BigInt::from(sign), q.clone());
                if seen.insert(r.clone()) && eval_poly(c, &r).is_zero() {
                    roots.push(r);
                }
            }
        }
    }
    roots.sort();
    roots
}

pub fn eval_poly(c: &[Rat], t: &Rat) -> Rat {
    c.iter().rev().fold(Rat::zero(), |acc, a| acc * t + a)
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut out = vec![];
    let n = n.abs();
    if n.is_zero() {
        return out;
    }
    let mut i = BigInt::one();
    while &i * &i <= n {
        if (&n % &i).is_zero() {
            out.push(i.clone());
            let j = &n / &i;
            if j != i {
                out.push(j);
            }
        }
        i += 1;
    }
    out
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod rat_str {
    use super::{fmt_rat, parse_rat, Rat};
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(D::Error::custom)
    }
}

/// Serde adapter writing exponents as `"p/q"` strings.
pub mod exp_str {
    use super::{fmt_exp, parse_exp, Exp};
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(e: &Exp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_exp(*e))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Exp, D::Error> {
        let s = String::deserialize(d)?;
        parse_exp(&s).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_half() {
        assert_eq!(binom(&rat(1, 2), 2), rat(-1, 8));
        assert_eq!(binom(&rat(1, 2), 3), rat(1, 16));
        assert_eq!(binom(&int(5), 2), int(10));
    }

    #[test]
    fn rational_power_roots() {
        assert_eq!(rat_power(&rat(4, 9), exp(1, 2)), Some(rat(2, 3)));
        assert_eq!(rat_power(&int(2), exp(1, 2)), None);
        assert_eq!(rat_power(&int(-8), exp(1, 3)), Some(int(-2)));
        assert_eq!(rat_power(&int(-4), exp(1, 2)), None);
        assert_eq!(rat_power(&int(8), exp(-2, 3)), Some(rat(1, 4)));
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rat("6/4").unwrap(), rat(3, 2));
        assert_eq!(fmt_rat(&rat(-10, 5)), "-2");
        assert!(parse_rat("1/0").is_err());
        assert_eq!(fmt_exp(exp(-5, 8)), "-5/8");
    }

    #[test]
    fn roots_of_cubic() {
        // (t - 1/2)(t + 3)(t - 1) = t^3 + 3/2 t^2 - 4 t + 3/2
        let c = vec![rat(3, 2), int(-4), rat(3, 2), int(1)];
        assert_eq!(rational_roots(&c), vec![int(-3), rat(1, 2), int(1)]);
        assert_eq!(rational_roots(&[int(-2), int(0), int(1)]), vec![]);
    }
}
