//! Truncated two-variable Puiseux-Laurent series with exact coefficients.
//!
//! A [`Series`] stores finitely many terms `c x^a y^b` together with two
//! floors. Everything with `a < x_floor` or `b < y_floor` is unknown, not
//! zero; a floor of `None` means the series is exact in that direction.
//! Every operation returns the weakest floors it can prove.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rat::{binom_exp, exp, exp_to_rat, fmt_exp, fmt_rat, parse_exp, parse_rat, rat_power, Exp, Rat};

/// Largest admissible common denominator of x-exponents.
pub const DEFAULT_N_CAP: u64 = 1 << 20;

/// The ambient space a series lives in. It decides which monomial leads and
/// therefore in which direction inverses and roots are expanded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Space {
    /// Series in x alone, descending in x.
    A,
    /// Descending in y with x-series coefficients.
    B,
    /// Polynomials in y with coefficients descending in x.
    P,
}

impl Space {
    pub fn tag(self) -> &'static str {
        match self {
            Space::A => "A",
            Space::B => "B",
            Space::P => "P",
        }
    }

    pub fn from_tag(s: &str) -> Result<Space> {
        match s {
            "A" => Ok(Space::A),
            "B" => Ok(Space::B),
            "P" => Ok(Space::P),
            _ => Err(Error::Parse(format!("unknown space {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

/// `(x-exponent, y-exponent)`.
pub type Mono = (Exp, i64);

/// Max of two lower bounds where `None` is minus infinity.
pub fn floor_max<T: Ord + Copy>(a: Option<T>, b: Option<T>) -> Option<T> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (Some(a), None) | (None, Some(a)) => Some(a),
        (None, None) => None,
    }
}

fn floor_add<T: Add<Output = T>>(a: Option<T>, b: Option<T>) -> Option<T> {
    Some(a? + b?)
}

/// Equality ignores `N`: it is the ambient denominator, which only grows.
#[derive(Clone, Debug)]
pub struct Series {
    space: Space,
    n: u64,
    terms: BTreeMap<Mono, Rat>,
    x_floor: Option<Exp>,
    y_floor: Option<i64>,
}

impl PartialEq for Series {
    fn eq(&self, other: &Series) -> bool {
        self.space == other.space && self.x_floor == other.x_floor && self.y_floor == other.y_floor && self.terms == other.terms
    }
}

impl Eq for Series {}

impl Series {
    pub fn zero(space: Space) -> Series {
        Series { space, n: 1, terms: BTreeMap::new(), x_floor: None, y_floor: None }
    }

    pub fn one(space: Space) -> Series {
        Series::constant(space, Rat::one())
    }

    pub fn constant(space: Space, c: Rat) -> Series {
        Series::monomial(space, c, Exp::zero(), 0)
    }

    /// `c x^a y^b`. Panics when the monomial does not belong to `space`.
    pub fn monomial(space: Space, c: Rat, a: Exp, b: i64) -> Series {
        Series::from_terms(space, [((a, b), c)]).expect("monomial outside its space")
    }

    pub fn x(space: Space) -> Series {
        Series::monomial(space, Rat::one(), Exp::one(), 0)
    }

    pub fn y(space: Space) -> Series {
        Series::monomial(space, Rat::one(), Exp::zero(), 1)
    }

    /// Builds an exact series, summing repeated monomials.
    pub fn from_terms<I>(space: Space, terms: I) -> Result<Series>
    where
        I: IntoIterator<Item = (Mono, Rat)>,
    {
        let mut s = Series::zero(space);
        for (m, c) in terms {
            s.check_mono(m)?;
            s.add_term(m, c);
        }
        s.renormalize()?;
        Ok(s)
    }

    /// Shorthand used all over the tests: integer coefficients and exponents
    /// given as `(c, (xn, xd), y)`.
    pub fn from_ints(space: Space, terms: &[(i64, i64, i64, i64)]) -> Series {
        Series::from_terms(
            space,
            terms.iter().map(|&(c, xn, xd, y)| ((exp(xn, xd), y), Rat::from_integer(c.into()))),
        )
        .expect("bad literal")
    }

    fn check_mono(&self, (_, b): Mono) -> Result<()> {
        match self.space {
            Space::A if b != 0 => Err(Error::NotPolynomial(format!("y^{b} in an x-only series"))),
            Space::P if b < 0 => Err(Error::NotPolynomial(format!("y^{b} in a y-polynomial"))),
            _ => Ok(()),
        }
    }

    fn add_term(&mut self, m: Mono, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Recomputes `N` as the lcm of the current `N` and every denominator.
    fn renormalize(&mut self) -> Result<()> {
        let mut n = self.n;
        for (a, _) in self.terms.keys() {
            n = n.lcm(&(*a.denom() as u64));
        }
        if let Some(f) = self.x_floor {
            n = n.lcm(&(*f.denom() as u64));
        }
        if n > DEFAULT_N_CAP {
            return Err(Error::NOverflow(n, DEFAULT_N_CAP));
        }
        self.n = n;
        Ok(())
    }

    pub fn space(&self) -> Space {
        self.space
    }

    #[allow(non_snake_case)]
    pub fn N(&self) -> u64 {
        self.n
    }

    pub fn x_floor(&self) -> Option<Exp> {
        self.x_floor
    }

    pub fn y_floor(&self) -> Option<i64> {
        self.y_floor
    }

    pub fn is_exact(&self) -> bool {
        self.x_floor.is_none() && self.y_floor.is_none()
    }

    /// No stored terms. With floors this only says "zero above the floor".
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in serialization order: x descending, then y descending.
    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Rat)> {
        self.terms.iter().rev()
    }

    pub fn coeff(&self, a: Exp, b: i64) -> Rat {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_known(&self, a: Exp, b: i64) -> bool {
        self.x_floor.is_none_or(|f| a >= f) && self.y_floor.is_none_or(|f| b >= f)
    }

    /// Like [`Series::coeff`] but refuses to answer below the floors.
    pub fn coeff_checked(&self, a: Exp, b: i64) -> Result<Rat> {
        if !self.is_known(a, b) {
            return Err(Error::BelowFloor { x: fmt_exp(a), y: b.to_string() });
        }
        Ok(self.coeff(a, b))
    }

    pub fn deg_x(&self) -> Option<Exp> {
        self.terms.keys().map(|m| m.0).max()
    }

    pub fn min_x(&self) -> Option<Exp> {
        self.terms.keys().map(|m| m.0).min()
    }

    pub fn deg_y(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.1).max()
    }

    pub fn min_y(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.1).min()
    }

    /// Largest x-exponent that may carry a nonzero term.
    pub fn top_x(&self) -> Option<Exp> {
        floor_max(self.deg_x(), self.x_floor)
    }

    pub fn top_y(&self) -> Option<i64> {
        floor_max(self.deg_y(), self.y_floor)
    }

    /// Coefficient of `y^b` as an x-only series.
    pub fn row(&self, b: i64) -> Result<Series> {
        if self.y_floor.is_some_and(|f| b < f) {
            return Err(Error::BelowFloor { x: "*".into(), y: b.to_string() });
        }
        let mut out = Series::zero(Space::A);
        out.n = self.n;
        for (&(a, bb), c) in &self.terms {
            if bb == b {
                out.terms.insert((a, 0), c.clone());
            }
        }
        out.x_floor = self.x_floor;
        Ok(out)
    }

    /// Coefficient of `x^a` as a polynomial (or descending series) in y,
    /// returned in the same space with x-exponent 0.
    pub fn x_slice(&self, a: Exp) -> Series {
        let mut out = Series::zero(self.space);
        for (&(aa, b), c) in &self.terms {
            if aa == a {
                out.terms.insert((Exp::zero(), b), c.clone());
            }
        }
        out.y_floor = self.y_floor;
        out
    }

    /// Distinct x-exponents, descending.
    pub fn x_exponents(&self) -> Vec<Exp> {
        let mut v: Vec<Exp> = self.terms.keys().map(|m| m.0).collect();
        v.dedup();
        v.reverse();
        v
    }

    /// Distinct y-exponents, descending.
    pub fn y_exponents(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.terms.keys().map(|m| m.1).collect();
        v.sort_unstable();
        v.dedup();
        v.reverse();
        v
    }

    /// Keeps the terms satisfying `keep`; floors are left alone.
    pub fn filter(&self, keep: impl Fn(Mono) -> bool) -> Series {
        let mut out = self.clone();
        out.terms.retain(|m, _| keep(*m));
        out
    }

    /// Declares everything below the given floors unknown.
    pub fn truncate(&self, xf: Option<Exp>, yf: Option<i64>) -> Series {
        let mut out = self.clone();
        out.x_floor = floor_max(self.x_floor, xf);
        out.y_floor = floor_max(self.y_floor, yf);
        let (xf, yf) = (out.x_floor, out.y_floor);
        out.terms.retain(|&(a, b), _| xf.is_none_or(|f| a >= f) && yf.is_none_or(|f| b >= f));
        if let Some(f) = xf {
            out.n = out.n.lcm(&(*f.denom() as u64));
        }
        out
    }

    /// Forgets the floors. Only sound when the caller knows the series is
    /// exact, e.g. after an exact verification.
    pub fn assume_exact(&self) -> Series {
        let mut out = self.clone();
        out.x_floor = None;
        out.y_floor = None;
        out
    }

    /// Moves the series to another space when its support allows it.
    pub fn in_space(&self, space: Space) -> Result<Series> {
        let mut out = self.clone();
        out.space = space;
        for m in self.terms.keys() {
            out.check_mono(*m)?;
        }
        if space != Space::B {
            out.y_floor = None;
            if self.y_floor.is_some() {
                return Err(Error::PreconditionFailed("y-floor only makes sense in B".into()));
            }
        }
        Ok(out)
    }

    fn same_space(&self, other: &Series) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(self.space.tag().into(), other.space.tag().into()));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Series) -> Result<Series> {
        self.same_space(other)?;
        let mut out = self.clone();
        out.n = self.n.lcm(&other.n);
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        out.renormalize()?;
        Ok(out.truncate(other.x_floor, other.y_floor))
    }

    pub fn checked_sub(&self, other: &Series) -> Result<Series> {
        self.checked_add(&other.neg_ref())
    }

    pub fn checked_mul(&self, other: &Series) -> Result<Series> {
        self.same_space(other)?;
        if (self.is_zero() && self.is_exact()) || (other.is_zero() && other.is_exact()) {
            let mut z = Series::zero(self.space);
            z.n = self.n.lcm(&other.n);
            return Ok(z);
        }
        let xf = floor_max(
            floor_add(self.x_floor, other.top_x()),
            floor_add(other.x_floor, self.top_x()),
        );
        let yf = floor_max(
            floor_add(self.y_floor, other.top_y()),
            floor_add(other.y_floor, self.top_y()),
        );
        let mut acc: BTreeMap<Mono, Rat> = BTreeMap::new();
        let rhs: Vec<(&Mono, &Rat)> = other.terms.iter().rev().collect();
        for (&(a1, b1), c1) in self.terms.iter().rev() {
            for &(&(a2, b2), c2) in &rhs {
                let a = a1 + a2;
                if xf.is_some_and(|f| a < f) {
                    break;
                }
                let b = b1 + b2;
                if yf.is_some_and(|f| b < f) {
                    continue;
                }
                let e = acc.entry((a, b)).or_insert_with(Rat::zero);
                *e += c1 * c2;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        let mut out = Series { space: self.space, n: self.n.lcm(&other.n), terms: acc, x_floor: xf, y_floor: yf };
        out.renormalize()?;
        Ok(out)
    }

    fn neg_ref(&self) -> Series {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Series {
        if c.is_zero() {
            let mut z = self.clone();
            z.terms.clear();
            return z;
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    /// Multiplies by `c x^a y^b`, shifting floors with it.
    pub fn mul_monomial(&self, c: &Rat, a: Exp, b: i64) -> Result<Series> {
        let mut out = Series::zero(self.space);
        out.n = self.n;
        if !c.is_zero() {
            for (&(aa, bb), v) in &self.terms {
                out.check_mono((aa + a, bb + b))?;
                out.terms.insert((aa + a, bb + b), v * c);
            }
        }
        out.x_floor = self.x_floor.map(|f| f + a);
        out.y_floor = self.y_floor.map(|f| f + b);
        out.renormalize()?;
        Ok(out)
    }

    pub fn partial(&self, var: Var) -> Series {
        let mut out = Series::zero(self.space);
        out.n = self.n;
        for (&(a, b), c) in &self.terms {
            match var {
                Var::X if !a.is_zero() => {
                    out.terms.insert((a - 1, b), c * exp_to_rat(a));
                }
                Var::Y if b != 0 => {
                    out.terms.insert((a, b - 1), c * Rat::from_integer(b.into()));
                }
                _ => {}
            }
        }
        match var {
            Var::X => {
                out.x_floor = self.x_floor.map(|f| f - 1);
                out.y_floor = self.y_floor;
            }
            Var::Y => {
                out.x_floor = self.x_floor;
                out.y_floor = self.y_floor.map(|f| f - 1);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Result<Series> {
        let mut acc = Series::one(self.space);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.checked_mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.checked_mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// The monomial that leads in this space: max x for A and P; max y and
    /// then max x for B.
    pub fn leading(&self) -> Result<(Mono, Rat)> {
        let pick = match self.space {
            Space::A | Space::P => {
                let a = self.deg_x().ok_or(Error::NotInvertible)?;
                let row: Vec<_> = self.terms.iter().filter(|(m, _)| m.0 == a).collect();
                if row.len() != 1 {
                    return Err(Error::BadLeading("top x-coefficient is not a monomial".into()));
                }
                (*row[0].0, row[0].1.clone())
            }
            Space::B => {
                let b = self.deg_y().ok_or(Error::NotInvertible)?;
                let (m, c) = self.terms.iter().rev().find(|(m, _)| m.1 == b).expect("row exists");
                (*m, c.clone())
            }
        };
        if self.x_floor.is_some_and(|f| f > pick.0 .0) || self.y_floor.is_some_and(|f| f > pick.0 .1) {
            return Err(Error::BadLeading("leading term lies below the floor".into()));
        }
        Ok(pick)
    }

    /// Floors reached by `depth` terms of the binomial expansion of `self^s`.
    pub fn depth_floors(&self, s: Exp, depth: u32) -> Result<(Option<Exp>, Option<i64>)> {
        let ((lx, ly), _) = self.leading()?;
        let sx = s * lx;
        let sy = s * Exp::from(ly);
        let n = self.n.lcm(&(*sx.denom() as u64)) as i64;
        let d = depth as i64;
        let rel = |a: Exp, b: i64| (a - lx, b - ly);
        match self.space {
            Space::A | Space::P => {
                let top = self.terms.keys().filter(|m| m.0 != lx).map(|m| rel(m.0, m.1).0).max();
                Ok((top.map(|t| sx + t * d + exp(1, n)), None))
            }
            Space::B => {
                let neg = self.terms.keys().map(|m| rel(m.0, m.1)).filter(|r| r.1 < 0).map(|r| r.1).max();
                let row0 = self.terms.keys().map(|m| rel(m.0, m.1)).filter(|r| r.1 == 0 && r.0 < Exp::zero()).map(|r| r.0).max();
                let yf = match neg {
                    Some(t) if sy.is_integer() => Some(sy.to_integer() + t * d + 1),
                    Some(_) => return Err(Error::BadLeading("y-exponent of the power is not an integer".into())),
                    None => None,
                };
                Ok((row0.map(|t| sx + t * d + exp(1, n)), yf))
            }
        }
    }

    /// `self^(a/b)` expanded to `depth` binomial terms.
    pub fn fractional_power(&self, a: i64, b: i64, depth: u32) -> Result<Series> {
        if b == 0 {
            return Err(Error::BadExponent("zero denominator".into()));
        }
        let s = Exp::new(a, b);
        let (xf, yf) = self.depth_floors(s, depth)?;
        self.power_to(s, xf, yf)
    }

    pub fn invert(&self, depth: u32) -> Result<Series> {
        self.fractional_power(-1, 1, depth)
    }

    /// `self^s` correct on the region `x >= xf, y >= yf` (or better).
    ///
    /// Writes `self = L (1 + U)` with `L` the leading monomial and sums
    /// `C(s, k) U^k`, discarding at every stage the terms of `U^k` that can
    /// no longer reach the target region.
    pub fn power_to(&self, s: Exp, xf: Option<Exp>, yf: Option<i64>) -> Result<Series> {
        if s.is_one() {
            return Ok(self.clone());
        }
        if s.is_zero() {
            return Ok(Series::one(self.space));
        }
        let ((lx, ly), c) = self.leading().map_err(|e| match e {
            Error::NotInvertible => Error::BadLeading("zero has no powers".into()),
            e => e,
        })?;
        let cs = rat_power(&c, s).ok_or_else(|| Error::BadLeading(format!("({})^({}) is not rational", fmt_rat(&c), fmt_exp(s))))?;
        let sx = s * lx;
        let sy = s * Exp::from(ly);
        if !sy.is_integer() {
            return Err(Error::BadLeading(format!("y^{} is not a monomial of the space", fmt_exp(sy))));
        }
        let sy = sy.to_integer();
        if self.space == Space::P && self.min_y().unwrap_or(0) < ly {
            return Err(Error::BadLeading("leading y-power does not divide the series".into()));
        }
        let mut work = self.clone();
        work.space = Space::B;
        let u = work.mul_monomial(&c.recip(), -lx, -ly)?.checked_sub(&Series::one(Space::B))?;
        let rxf = xf.map(|f| f - sx);
        let ryf = yf.map(|f| f - sy);
        let exact_u = u.is_exact();
        if u.is_zero() && exact_u {
            return Series::monomial(Space::B, cs, sx, sy).in_space(self.space);
        }

        // A term t of U^k can only feed the target if phi(t) >= rxf, where
        // phi(t) = x + slope * (y - ryf) never increases under multiplication
        // by a known term of U.
        let slope = u
            .terms
            .keys()
            .filter(|m| m.1 < 0)
            .map(|m| m.0 / Exp::from(-m.1))
            .fold(Exp::zero(), |acc, r| acc.max(r));
        let has_row0 = u.terms.keys().any(|m| m.1 == 0);
        let has_neg = u.terms.keys().any(|m| m.1 < 0);
        if self.space == Space::B {
            if has_neg && ryf.is_none() && u.y_floor.is_none() {
                return Err(Error::PreconditionFailed("a y-floor target is needed".into()));
            }
            if has_row0 && rxf.is_none() && u.x_floor.is_none() {
                return Err(Error::PreconditionFailed("an x-floor target is needed".into()));
            }
            if has_row0 && !exact_u {
                return Err(Error::BadLeading("leading row is not a monomial and the series is truncated".into()));
            }
        } else if rxf.is_none() && u.x_floor.is_none() {
            return Err(Error::PreconditionFailed("an x-floor target is needed".into()));
        }
        let keep = |(a, b): Mono| -> bool {
            if ryf.is_some_and(|f| b < f) {
                return false;
            }
            match rxf {
                None => true,
                Some(f) if exact_u && self.space == Space::B => {
                    let shift = ryf.map_or(Exp::zero(), |g| slope * Exp::from(b - g));
                    a + shift >= f
                }
                Some(f) => a >= f,
            }
        };
        let cut = |p: Series| -> Series {
            if exact_u && self.space == Space::B {
                p.filter(keep)
            } else {
                p.truncate(rxf, ryf)
            }
        };

        let mut total = Series::one(Space::B);
        let mut pk = cut(u.clone());
        let mut k = 1u64;
        loop {
            if pk.is_zero() {
                total = total.checked_add(&pk)?;
                break;
            }
            total = total.checked_add(&pk.scale(&binom_exp(s, k)))?;
            pk = cut(pk.checked_mul(&u)?);
            k += 1;
        }
        let total = total.truncate(rxf, ryf);
        total.mul_monomial(&cs, sx, sy)?.in_space(self.space)
    }

    /// `H1` with `H1^k = self` exactly, if one exists.
    pub fn poly_power_root(&self, k: u32) -> Option<Series> {
        if k == 0 || !self.is_exact() || self.min_y().is_some_and(|b| b < 0) {
            return None;
        }
        if k == 1 || self.is_zero() {
            return Some(self.clone());
        }
        let xf = self.min_x()? / Exp::from(k as i64);
        let mut b = self.clone();
        b.space = Space::B;
        let root = b.power_to(Exp::new(1, k as i64), Some(xf), Some(0)).ok()?;
        let root = root.filter(|m| m.1 >= 0 && m.0 >= xf).assume_exact();
        if !root.pow(k).ok()?.agrees_with(&b) {
            return None;
        }
        let mut r = root;
        r.space = self.space;
        Some(r)
    }

    /// Same terms above the common floors.
    pub fn agrees_with(&self, other: &Series) -> bool {
        match self.checked_sub(other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    /// Substitutes `y := K` into every term: `sum c x^a K^b`. Negative
    /// y-powers use the inverse of `K` expanded to the floors of `target`.
    pub fn compose_y(&self, k: &Series) -> Result<Series> {
        let mut out = Series::zero(k.space());
        let mut cache: BTreeMap<i64, Series> = BTreeMap::new();
        for (&(a, b), c) in &self.terms {
            if b < 0 {
                return Err(Error::NotPolynomial("negative y-power in compose_y".into()));
            }
            if let std::collections::btree_map::Entry::Vacant(v) = cache.entry(b) {
                v.insert(k.pow(b as u32)?);
            }
            let kb = &cache[&b];
            out = out.checked_add(&kb.mul_monomial(c, a, 0)?)?;
        }
        if self.x_floor.is_some() || self.y_floor.is_some() {
            return Err(Error::PreconditionFailed("compose_y needs an exact outer polynomial".into()));
        }
        Ok(out)
    }

    pub fn render(&self) -> String {
        serde_json::to_string(self).expect("series always serializes")
    }

    pub fn parse(s: &str) -> Result<Series> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    c: String,
    x: String,
    y: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesJson {
    space: String,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "xFloor")]
    x_floor: Option<String>,
    #[serde(rename = "yFloor")]
    y_floor: Option<i64>,
    terms: Vec<TermJson>,
}

impl Serialize for Series {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson {
            space: self.space.tag().into(),
            n: self.n,
            x_floor: self.x_floor.map(fmt_exp),
            y_floor: self.y_floor,
            terms: self.terms().map(|(m, c)| TermJson { c: fmt_rat(c), x: fmt_exp(m.0), y: m.1 }).collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Series {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Series, D::Error> {
        use serde::de::Error as _;
        let raw = SeriesJson::deserialize(de)?;
        from_json(raw).map_err(|e| D::Error::custom(e.to_string()))
    }
}

fn from_json(raw: SeriesJson) -> Result<Series> {
    let space = Space::from_tag(&raw.space)?;
    if raw.n == 0 {
        return Err(Error::Parse("N must be positive".into()));
    }
    let mut s = Series::zero(space);
    s.n = raw.n;
    s.x_floor = raw.x_floor.as_deref().map(parse_exp).transpose()?;
    s.y_floor = raw.y_floor;
    for t in raw.terms {
        let c = parse_rat(&t.c)?;
        if c.is_zero() {
            return Err(Error::Parse("stored zero coefficient".into()));
        }
        let a = parse_exp(&t.x)?;
        if raw.n % (*a.denom() as u64) != 0 {
            return Err(Error::Parse(format!("exponent {} not over N = {}", t.x, raw.n)));
        }
        if !s.is_known(a, t.y) {
            return Err(Error::Parse("term below the floor".into()));
        }
        s.check_mono((a, t.y))?;
        if s.terms.insert((a, t.y), c).is_some() {
            return Err(Error::Parse("repeated monomial".into()));
        }
    }
    if s.n > DEFAULT_N_CAP {
        return Err(Error::NOverflow(s.n, DEFAULT_N_CAP));
    }
    Ok(s)
}

fn fmt_mono(f: &mut fmt::Formatter<'_>, a: Exp, b: i64) -> fmt::Result {
    let mut first = true;
    if !a.is_zero() {
        if a.is_one() {
            write!(f, "x")?;
        } else if a.is_integer() && a.is_positive() {
            write!(f, "x^{}", a)?;
        } else {
            write!(f, "x^({})", fmt_exp(a))?;
        }
        first = false;
    }
    if b != 0 {
        if !first {
            write!(f, "*")?;
        }
        match b {
            1 => write!(f, "y")?,
            b if b > 0 => write!(f, "y^{b}")?,
            b => write!(f, "y^({b})")?,
        }
    }
    Ok(())
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (&(a, b), c) in self.terms() {
            let unit = a.is_zero() && b == 0;
            let (sign, mag) = if c.is_negative() { ("-", -c.clone()) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            if unit {
                write!(f, "{}", fmt_rat(&mag))?;
                continue;
            }
            if !mag.is_one() {
                write!(f, "{}*", fmt_rat(&mag))?;
            }
            fmt_mono(f, a, b)?;
        }
        if first {
            write!(f, "0")?;
        }
        if let Some(xf) = self.x_floor {
            write!(f, " + O(x^({}))", fmt_exp(xf))?;
        }
        if let Some(yf) = self.y_floor {
            write!(f, " + O(y^({yf}))")?;
        }
        Ok(())
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        self.checked_add(rhs).expect("series addition")
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        self.checked_sub(rhs).expect("series subtraction")
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        self.checked_mul(rhs).expect("series multiplication")
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.neg_ref()
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, rhs: Series) -> Series {
        &self + &rhs
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, rhs: Series) -> Series {
        &self - &rhs
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, rhs: Series) -> Series {
        &self * &rhs
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.neg_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    fn b(terms: &[(i64, i64, i64, i64)]) -> Series {
        Series::from_ints(Space::B, terms)
    }

    #[test]
    fn add_uses_lcm_of_denominators() {
        let s = Series::from_ints(Space::A, &[(1, 1, 2, 0)]) + Series::from_ints(Space::A, &[(1, 1, 3, 0)]);
        assert_eq!(s.N(), 6);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn cancellation_removes_terms() {
        let s = b(&[(1, 0, 1, 2), (1, 1, 1, 0)]) + b(&[(-1, 1, 1, 0)]);
        assert_eq!(s, b(&[(1, 0, 1, 2)]));
    }

    #[test]
    fn product_from_the_text() {
        let f = b(&[(1, 0, 1, 1), (1, 2, 1, 0)]);
        let g = b(&[(1, 0, 1, 1), (1, 3, 1, 0)]);
        let want = b(&[(1, 0, 1, 2), (1, 2, 1, 1), (1, 3, 1, 1), (1, 5, 1, 0)]);
        assert_eq!(&f * &g, want);
    }

    #[test]
    fn x_times_inverse() {
        let x = Series::x(Space::A);
        assert_eq!(&x * &x.invert(3).unwrap(), Series::one(Space::A));
    }

    #[test]
    fn invert_descending_y() {
        // y - x
        let f = b(&[(1, 0, 1, 1), (-1, 1, 1, 0)]);
        let g = f.invert(3).unwrap();
        let want = b(&[(1, 0, 1, -1), (1, 1, 1, -2), (1, 2, 1, -3)]);
        assert!(g.filter(|_| true).truncate(None, Some(-3)).agrees_with(&want));
        assert_eq!(g.y_floor(), Some(-3));
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn invert_residue_example() {
        // xy + (xy)^2
        let f = b(&[(1, 1, 1, 1), (1, 2, 1, 2)]);
        let g = f.invert(4).unwrap();
        let want = b(&[(1, -2, 1, -2), (-1, -3, 1, -3), (1, -4, 1, -4), (-1, -5, 1, -5)]);
        assert_eq!(g.len(), 4);
        assert!(g.agrees_with(&want));
        assert!((&f * &g).agrees_with(&Series::one(Space::B)));
    }

    #[test]
    fn square_root_binomial() {
        let f = b(&[(1, 0, 1, 2), (1, 1, 1, 0)]);
        let r = f.fractional_power(1, 2, 4).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r.coeff(exp(0, 1), 1), int(1));
        assert_eq!(r.coeff(exp(1, 1), -1), rat(1, 2));
        assert_eq!(r.coeff(exp(2, 1), -3), rat(-1, 8));
        assert_eq!(r.coeff(exp(3, 1), -5), rat(1, 16));
        assert!((&r * &r).agrees_with(&f));
    }

    #[test]
    fn cube_root_of_example_cube() {
        let f = b(&[(1, 4, 1, 6), (3, 3, 1, 4), (3, 2, 1, 2), (1, 1, 1, 0)]);
        let r = f.fractional_power(1, 3, 10).unwrap();
        let want = Series::from_terms(Space::B, [((exp(4, 3), 2), int(1)), ((exp(1, 3), 0), int(1))]).unwrap();
        assert!(r.agrees_with(&want));
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn power_one_is_identity() {
        let f = b(&[(2, 1, 1, 3), (1, 0, 1, 1)]);
        assert_eq!(f.fractional_power(1, 1, 5).unwrap(), f);
    }

    #[test]
    fn irrational_leading_coefficient() {
        let f = b(&[(2, 0, 1, 2), (1, 1, 1, 0)]);
        assert_eq!(f.fractional_power(1, 2, 3).unwrap_err().code(), "BAD_LEADING");
    }

    #[test]
    fn partials() {
        let f = b(&[(1, 2, 1, 4)]);
        assert_eq!(f.partial(Var::Y), b(&[(4, 2, 1, 3)]));
        let g = Series::from_ints(Space::A, &[(1, 5, 8, 0)]);
        assert_eq!(g.partial(Var::X), Series::from_terms(Space::A, [((exp(-3, 8), 0), rat(5, 8))]).unwrap());
        assert!(Series::constant(Space::A, int(7)).partial(Var::X).is_zero());
    }

    #[test]
    fn roots_of_polynomials() {
        let h = b(&[(1, 0, 1, 2), (1, 1, 1, 0)]);
        let sq = h.pow(2).unwrap();
        assert_eq!(sq.poly_power_root(2), Some(h.clone()));
        assert_eq!(h.poly_power_root(2), None);
        let m = b(&[(1, 3, 1, 3)]);
        assert_eq!(m.poly_power_root(3), Some(b(&[(1, 1, 1, 1)])));
    }

    #[test]
    fn root_with_nonmonomial_leading_row() {
        // ((x+1) y + 1)^2
        let h = b(&[(1, 1, 1, 1), (1, 0, 1, 1), (1, 0, 1, 0)]);
        let sq = h.pow(2).unwrap();
        assert_eq!(sq.poly_power_root(2), Some(h));
    }

    #[test]
    fn json_round_trip() {
        let f = Series::from_terms(Space::P, [((exp(-5, 8), 2), rat(3, 8)), ((exp(1, 1), 0), int(-2))])
            .unwrap()
            .truncate(Some(exp(-5, 1)), None);
        let text = f.render();
        assert_eq!(
            text,
            r#"{"space":"P","N":8,"xFloor":"-5","yFloor":null,"terms":[{"c":"-2","x":"1","y":0},{"c":"3/8","x":"-5/8","y":2}]}"#
        );
        assert_eq!(Series::parse(&text).unwrap(), f);
    }

    #[test]
    fn mul_floor_rule() {
        // (x + O(x^-2)) * (x^2 + 1) is known down to x^0.
        let f = Series::x(Space::A).truncate(Some(exp(-2, 1)), None);
        let g = Series::from_ints(Space::A, &[(1, 2, 1, 0), (1, 0, 1, 0)]);
        let p = &f * &g;
        assert_eq!(p.x_floor(), Some(exp(0, 1)));
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn below_floor_is_refused() {
        let f = Series::x(Space::A).truncate(Some(exp(-2, 1)), None);
        assert!(f.coeff_checked(exp(-3, 1), 0).is_err());
        assert_eq!(f.coeff_checked(exp(-1, 1), 0).unwrap(), int(0));
    }
}
