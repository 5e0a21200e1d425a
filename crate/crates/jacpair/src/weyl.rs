//! The first Weyl algebra completed to `C[u^{±1/N}]((v^{-1}))`, stored in the
//! standard form (u before v), and its `w = uv` picture.
//!
//! Floors have the same meaning as for [`Series`]: terms with u-exponent
//! below `u_floor` or v-exponent (w-exponent in w-form) below `v_floor` are
//! unknown.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rat::{binom, exp, exp_to_rat, fmt_exp, fmt_rat, int, parse_exp, parse_rat, Exp, Rat};
use crate::series::{floor_max, Series, Space, DEFAULT_N_CAP};
use crate::verdict::Verdict;

/// Largest number of terms a single infinite normal-ordering sum may produce.
const SUM_CAP: i64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rep {
    /// Keys are `(u-exponent, v-exponent)`.
    Uv,
    /// Keys are `(u-exponent, w-exponent)` for `u^a g(w)`.
    W,
}

impl Rep {
    pub fn tag(self) -> &'static str {
        match self {
            Rep::Uv => "Weyl-UV",
            Rep::W => "Weyl-W",
        }
    }
}

pub type WMono = (Exp, i64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylSeries {
    rep: Rep,
    n: u64,
    terms: BTreeMap<WMono, Rat>,
    u_floor: Option<Exp>,
    v_floor: Option<i64>,
}

fn floor_add<T: std::ops::Add<Output = T>>(a: Option<T>, b: Option<T>) -> Option<T> {
    Some(a? + b?)
}

fn ceil_exp(e: Exp) -> i64 {
    -((-e).floor().to_integer())
}

/// `a (a-1) ... (a-k+1)`.
pub fn falling(a: &Rat, k: u64) -> Rat {
    let mut acc = Rat::one();
    for i in 0..k {
        acc *= a - int(i as i64);
    }
    acc
}

impl WeylSeries {
    pub fn zero(rep: Rep) -> WeylSeries {
        WeylSeries { rep, n: 1, terms: BTreeMap::new(), u_floor: None, v_floor: None }
    }

    /// Zero known only above the given floors.
    pub fn unknown_below(rep: Rep, uf: Option<Exp>, vf: Option<i64>) -> WeylSeries {
        let mut z = WeylSeries::zero(rep);
        z.u_floor = uf;
        z.v_floor = vf;
        z.renormalize().expect("floor denominators within cap");
        z
    }

    pub fn one(rep: Rep) -> WeylSeries {
        WeylSeries::monomial(rep, Rat::one(), Exp::zero(), 0)
    }

    pub fn monomial(rep: Rep, c: Rat, a: Exp, b: i64) -> WeylSeries {
        WeylSeries::from_terms(rep, [((a, b), c)]).expect("monomial within cap")
    }

    pub fn u() -> WeylSeries {
        WeylSeries::monomial(Rep::Uv, Rat::one(), Exp::one(), 0)
    }

    pub fn v() -> WeylSeries {
        WeylSeries::monomial(Rep::Uv, Rat::one(), Exp::zero(), 1)
    }

    pub fn from_terms<I>(rep: Rep, terms: I) -> Result<WeylSeries>
    where
        I: IntoIterator<Item = (WMono, Rat)>,
    {
        let mut s = WeylSeries::zero(rep);
        for (m, c) in terms {
            s.add_term(m, c);
        }
        s.check_rep()?;
        s.renormalize()?;
        Ok(s)
    }

    /// `(c, un, ud, v)` meaning `c u^(un/ud) v^v`.
    pub fn from_ints(rep: Rep, terms: &[(i64, i64, i64, i64)]) -> WeylSeries {
        WeylSeries::from_terms(rep, terms.iter().map(|&(c, un, ud, v)| ((exp(un, ud), v), int(c)))).expect("bad literal")
    }

    fn check_rep(&self) -> Result<()> {
        if self.rep == Rep::W && (self.terms.keys().any(|m| !m.0.is_integer()) || self.u_floor.is_some()) {
            return Err(Error::FractionalUInWForm);
        }
        Ok(())
    }

    fn add_term(&mut self, m: WMono, c: Rat) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    fn renormalize(&mut self) -> Result<()> {
        let mut n = self.n;
        for (a, _) in self.terms.keys() {
            n = n.lcm(&(*a.denom() as u64));
        }
        if let Some(f) = self.u_floor {
            n = n.lcm(&(*f.denom() as u64));
        }
        if n > DEFAULT_N_CAP {
            return Err(Error::NOverflow(n, DEFAULT_N_CAP));
        }
        self.n = n;
        Ok(())
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    #[allow(non_snake_case)]
    pub fn N(&self) -> u64 {
        self.n
    }

    pub fn u_floor(&self) -> Option<Exp> {
        self.u_floor
    }

    /// The v-floor, or the w-floor in w-form.
    pub fn v_floor(&self) -> Option<i64> {
        self.v_floor
    }

    pub fn is_exact(&self) -> bool {
        self.u_floor.is_none() && self.v_floor.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&WMono, &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, a: Exp, b: i64) -> Rat {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_known(&self, a: Exp, b: i64) -> bool {
        self.u_floor.is_none_or(|f| a >= f) && self.v_floor.is_none_or(|f| b >= f)
    }

    pub fn coeff_checked(&self, a: Exp, b: i64) -> Result<Rat> {
        if !self.is_known(a, b) {
            return Err(Error::BelowFloor { x: fmt_exp(a), y: b.to_string() });
        }
        Ok(self.coeff(a, b))
    }

    pub fn deg_u(&self) -> Option<Exp> {
        self.terms.keys().map(|m| m.0).max()
    }

    pub fn deg_v(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.1).max()
    }

    fn top_u(&self) -> Option<Exp> {
        floor_max(self.deg_u(), self.u_floor)
    }

    fn top_v(&self) -> Option<i64> {
        floor_max(self.deg_v(), self.v_floor)
    }

    pub fn truncate(&self, uf: Option<Exp>, vf: Option<i64>) -> WeylSeries {
        let mut out = self.clone();
        if out.rep == Rep::Uv {
            out.u_floor = floor_max(self.u_floor, uf);
        }
        out.v_floor = floor_max(self.v_floor, vf);
        let (uf, vf) = (out.u_floor, out.v_floor);
        out.terms.retain(|&(a, b), _| uf.is_none_or(|f| a >= f) && vf.is_none_or(|f| b >= f));
        if let Some(f) = uf {
            out.n = out.n.lcm(&(*f.denom() as u64));
        }
        out
    }

    fn same_rep(&self, other: &WeylSeries) -> Result<()> {
        if self.rep != other.rep {
            return Err(Error::RepresentationMismatch);
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &WeylSeries) -> Result<WeylSeries> {
        self.same_rep(other)?;
        let mut out = self.clone();
        out.n = self.n.lcm(&other.n);
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        out.renormalize()?;
        Ok(out.truncate(other.u_floor, other.v_floor))
    }

    pub fn checked_sub(&self, other: &WeylSeries) -> Result<WeylSeries> {
        self.checked_add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> WeylSeries {
        let mut out = self.clone();
        if c.is_zero() {
            out.terms.clear();
        }
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    /// Same terms above the common floors.
    pub fn agrees_with(&self, other: &WeylSeries) -> bool {
        self.checked_sub(other).is_ok_and(|d| d.is_zero())
    }

    /// Row of u-exponent `a` as an x-only series with x standing for v.
    fn row_v(&self, a: Exp) -> Series {
        let terms = self.terms.iter().filter(|(m, _)| m.0 == a).map(|(m, c)| ((Exp::from(m.1), 0), c.clone()));
        let s = Series::from_terms(Space::A, terms).expect("integer v-exponents");
        s.truncate(self.v_floor.map(Exp::from), None)
    }

    /// `u^a` times an x-only series read as a v-series.
    fn from_row(a: Exp, s: &Series) -> Result<WeylSeries> {
        let mut out = WeylSeries::zero(Rep::Uv);
        for ((x, _), c) in s.terms() {
            if !x.is_integer() {
                return Err(Error::BadExponent(format!("v^{} is not integral", fmt_exp(*x))));
            }
            out.add_term((a, x.to_integer()), c.clone());
        }
        out.v_floor = s.x_floor().map(ceil_exp);
        out.renormalize()?;
        Ok(out)
    }
}

/// `v^b u^c` in standard form: `sum_s C(b,s) c(c-1)..(c-s+1) u^{c-s} v^{b-s}`,
/// stopped where the floors make further terms irrelevant.
fn vu_terms(b: i64, c: Exp, umin: Option<Exp>, vmin: Option<i64>) -> Result<Vec<(i64, Rat)>> {
    let (br, cr) = (int(b), exp_to_rat(c));
    let mut k = Rat::one();
    let mut out = Vec::new();
    let mut s: i64 = 0;
    loop {
        if k.is_zero() {
            return Ok(out);
        }
        if umin.is_some_and(|f| c - s < f) || vmin.is_some_and(|f| b - s < f) {
            return Ok(out);
        }
        if s > SUM_CAP {
            return Err(Error::PreconditionFailed("normal-ordering sum needs a floor".into()));
        }
        out.push((s, k.clone()));
        k = k * (&br - int(s)) * (&cr - int(s)) / int(s + 1);
        s += 1;
    }
}

/// Product in standard form, correct above the provable floors and the
/// optional targets `uf`, `vf`.
pub fn normal_product_to(f: &WeylSeries, g: &WeylSeries, uf: Option<Exp>, vf: Option<i64>) -> Result<WeylSeries> {
    f.same_rep(g)?;
    if f.rep == Rep::W {
        return w_product_to(f, g, vf);
    }
    let puf = floor_max(floor_add(f.u_floor, g.top_u()), floor_add(g.u_floor, f.top_u()));
    let pvf = floor_max(floor_add(f.v_floor, g.top_v()), floor_add(g.v_floor, f.top_v()));
    let (uf, vf) = (floor_max(puf, uf), floor_max(pvf, vf));
    let mut acc = WeylSeries::zero(Rep::Uv);
    acc.n = f.n.lcm(&g.n);
    for (&(a, b), c1) in &f.terms {
        for (&(c, d), c2) in &g.terms {
            let umin = uf.map(|t| t - a);
            let vmin = vf.map(|t| t - d);
            for (s, k) in vu_terms(b, c, umin, vmin)? {
                acc.add_term((a + c - s, b + d - s), k * c1 * c2);
            }
        }
    }
    acc.u_floor = uf;
    acc.v_floor = vf;
    acc.renormalize()?;
    Ok(acc.truncate(None, None))
}

/// Normal-ordered product with the floors the operands allow.
pub fn normal_product(f: &WeylSeries, g: &WeylSeries) -> Result<WeylSeries> {
    normal_product_to(f, g, None, None)
}

pub fn commutator_to(f: &WeylSeries, g: &WeylSeries, uf: Option<Exp>, vf: Option<i64>) -> Result<WeylSeries> {
    normal_product_to(f, g, uf, vf)?.checked_sub(&normal_product_to(g, f, uf, vf)?)
}

pub fn weyl_pow_to(f: &WeylSeries, k: u32, uf: Option<Exp>, vf: Option<i64>) -> Result<WeylSeries> {
    let mut acc = WeylSeries::one(f.rep);
    let (tu, tv) = (f.top_u().unwrap_or_default(), f.top_v().unwrap_or_default());
    for j in 1..=k as i64 {
        let rest = k as i64 - j;
        let ufj = uf.map(|t| t - tu * rest);
        let vfj = vf.map(|t| t - tv * rest);
        acc = normal_product_to(&acc, f, ufj, vfj)?;
    }
    Ok(acc)
}

struct Lead {
    alpha: Exp,
    f0: Series,
    d0: i64,
    spread: i64,
}

fn lead(f: &WeylSeries) -> Result<Lead> {
    if f.rep != Rep::Uv {
        return Err(Error::RepresentationMismatch);
    }
    let alpha = f.deg_u().ok_or(Error::NotInvertible)?;
    if f.u_floor.is_some_and(|t| t > alpha) {
        return Err(Error::NotInvertible);
    }
    let f0 = f.row_v(alpha);
    let d0 = f0.deg_x().ok_or(Error::NotInvertible)?.to_integer();
    if f.v_floor.is_some_and(|t| t > d0) {
        return Err(Error::NotInvertible);
    }
    let spread = (f.top_v().unwrap_or(d0) - d0).max(0);
    Ok(Lead { alpha, f0, d0, spread })
}

/// Default targets for `depth` levels: u-levels `top - k/N`, and v down to
/// `depth - 1` below the leading v-degree.
fn depth_targets(top_u: Exp, top_v: i64, n: u64, depth: u32) -> (Exp, i64) {
    let d = depth.max(1) as i64 - 1;
    (top_u - Exp::new(d, n as i64), top_v - d)
}

/// `F^{-1}`: `depth` u-levels below `u^{-alpha}`.
pub fn weyl_inverse(f: &WeylSeries, depth: u32) -> Result<WeylSeries> {
    let l = lead(f)?;
    let (uf, vf) = depth_targets(-l.alpha, -l.d0, f.n, depth);
    weyl_inverse_to(f, uf, vf)
}

/// `F^{-1}` correct for `u >= uf`, `v >= vf`, or on the weaker floors it can
/// prove.
pub fn weyl_inverse_to(f: &WeylSeries, uf: Exp, vf: i64) -> Result<WeylSeries> {
    let l = lead(f)?;
    let step = Exp::new(1, f.n as i64);
    let levels = ((-l.alpha - uf) / step).floor().to_integer().max(0) + 1;
    let vf_int = vf - levels * (l.spread + 1) - 1;
    let inv0 = l.f0.power_to(-Exp::one(), Some(Exp::from(vf_int - l.spread - l.d0 - 2)), None)?;
    let mut h = WeylSeries::unknown_below(Rep::Uv, Some(uf), Some(vf_int));
    let one = WeylSeries::one(Rep::Uv);
    for k in 0..levels {
        let e = -l.alpha - step * k;
        let r = normal_product_to(f, &h, Some(l.alpha + e), None)?.checked_sub(&one)?;
        let c = r.row_v(l.alpha + e).checked_mul(&inv0)?.scale(&-Rat::one());
        h = h.checked_add(&WeylSeries::from_row(e, &c)?)?;
    }
    Ok(h.truncate(None, Some(vf)))
}

/// `E = F^{a/b}`: the solution of `E^b = F^a` with leading row
/// `u^{a alpha/b} f0^{a/b}`, to `depth` u-levels.
pub fn weyl_fractional_power(f: &WeylSeries, a: i64, b: i64, depth: u32) -> Result<WeylSeries> {
    if b <= 0 {
        return Err(Error::BadExponent(format!("denominator {b} must be positive")));
    }
    let l = lead(f)?;
    if (a * l.d0) % b != 0 {
        return Err(Error::BadExponent(format!("{b} does not divide {a}*{}", l.d0)));
    }
    let s = Exp::new(a, b);
    let gamma = s * l.alpha;
    let (uf, vf) = depth_targets(gamma, a * l.d0 / b, f.n, depth);
    weyl_power_to(f, a, b, uf, vf)
}

pub fn weyl_power_to(f: &WeylSeries, a: i64, b: i64, uf: Exp, vf: i64) -> Result<WeylSeries> {
    let l = lead(f)?;
    if b <= 0 || (a * l.d0) % b != 0 {
        return Err(Error::BadExponent(format!("a/b = {a}/{b} with leading v-degree {}", l.d0)));
    }
    if a == 0 {
        return Ok(WeylSeries::one(Rep::Uv));
    }
    let s = Exp::new(a, b);
    let gamma = s * l.alpha;
    let n = f.n.lcm(&(*gamma.denom() as u64)) as i64;
    let step = Exp::new(1, n);
    let levels = ((gamma - uf) / step).floor().to_integer().max(0) + 1;
    let e0d = a * l.d0 / b;
    let bu = b as u32;
    let margin = levels * (l.spread + 1) * (b + a.abs()) + 2;
    let vf_int = vf - margin;
    let vf_t = vf_int + (b - 1) * e0d.min(0) - e0d.abs() * b - 1;
    let uf_t = gamma * b - step * (levels - 1);
    let target = if a > 0 {
        weyl_pow_to(f, a as u32, Some(uf_t), Some(vf_t))?
    } else {
        let inv_uf = -l.alpha - step * (levels - 1);
        let h = weyl_inverse_to(f, inv_uf, vf_t - margin)?;
        weyl_pow_to(&h, (-a) as u32, Some(uf_t), Some(vf_t))?
    };
    let sx = Some(Exp::from(vf_int - margin));
    let e0 = l.f0.power_to(s, sx, None)?;
    let den = e0.power_to(Exp::from(b - 1), sx, None)?.scale(&int(b)).power_to(-Exp::one(), sx, None)?;
    let mut e = WeylSeries::from_row(gamma, &e0)?;
    e.u_floor = Some(uf);
    e.v_floor = floor_max(e.v_floor, Some(vf_int));
    e.renormalize()?;
    for k in 1..levels {
        let lvl = gamma * b - step * k;
        let r = weyl_pow_to(&e, bu, Some(lvl), Some(vf_t))?.checked_sub(&target)?;
        let c = r.row_v(lvl).checked_mul(&den)?.scale(&-Rat::one());
        e = e.checked_add(&WeylSeries::from_row(gamma - step * k, &c)?)?;
    }
    Ok(e.truncate(None, Some(vf)))
}

/// Descending Laurent polynomials in w, `floor` as for series.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WPoly {
    pub terms: BTreeMap<i64, Rat>,
    pub floor: Option<i64>,
}

impl WPoly {
    pub fn from_coeffs(terms: impl IntoIterator<Item = (i64, Rat)>) -> WPoly {
        let mut p = WPoly::default();
        for (k, c) in terms {
            p.add(k, c);
        }
        p
    }

    fn add(&mut self, k: i64, c: Rat) {
        if self.floor.is_some_and(|f| k < f) || c.is_zero() {
            return;
        }
        let e = self.terms.entry(k).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn coeff(&self, k: i64) -> Rat {
        self.terms.get(&k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn deg(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    fn top(&self) -> Option<i64> {
        floor_max(self.deg(), self.floor)
    }

    pub fn mul(&self, o: &WPoly, floor: Option<i64>) -> WPoly {
        let f = floor_max(floor_max(floor_add(self.floor, o.top()), floor_add(o.floor, self.top())), floor);
        let mut out = WPoly { terms: BTreeMap::new(), floor: f };
        for (i, a) in &self.terms {
            for (j, b) in &o.terms {
                out.add(i + j, a * b);
            }
        }
        out
    }

    pub fn sub(&self, o: &WPoly) -> WPoly {
        let mut out = self.clone();
        out.floor = floor_max(self.floor, o.floor);
        let f = out.floor;
        out.terms.retain(|k, _| f.is_none_or(|t| *k >= t));
        for (k, c) in &o.terms {
            out.add(*k, -c.clone());
        }
        out
    }

    /// `p(w + t)`.
    pub fn shift(&self, t: &Rat, floor: Option<i64>) -> WPoly {
        let mut out = WPoly { terms: BTreeMap::new(), floor: floor_max(self.floor, floor) };
        let lo = out.floor;
        for (&k, c) in &self.terms {
            let kr = int(k);
            let mut j = 0u64;
            loop {
                let e = k - j as i64;
                if (k >= 0 && e < 0) || lo.is_some_and(|f| e < f) {
                    break;
                }
                if lo.is_none() && k < 0 && j as i64 > SUM_CAP {
                    break;
                }
                out.add(e, binom(&kr, j) * num_traits::pow(t.clone(), j as usize) * c);
                j += 1;
            }
        }
        out
    }

    pub fn derivative(&self) -> WPoly {
        let mut out = WPoly { terms: BTreeMap::new(), floor: self.floor.map(|f| f - 1) };
        for (&k, c) in &self.terms {
            out.add(k - 1, c * int(k));
        }
        out
    }

    /// `self / d` as a descending series down to `floor`.
    pub fn div(&self, d: &WPoly, floor: i64) -> Result<WPoly> {
        let dd = d.deg().ok_or(Error::NotInvertible)?;
        if d.floor.is_some() {
            return Err(Error::PreconditionFailed("divisor must be exact".into()));
        }
        let lc = d.coeff(dd);
        let mut rem = self.clone();
        let mut q = WPoly { terms: BTreeMap::new(), floor: Some(floor) };
        while let Some(top) = rem.deg() {
            let k = top - dd;
            if k < floor {
                break;
            }
            let c = rem.coeff(top) / &lc;
            for (j, dc) in &d.terms {
                rem.add(j + k, -(dc * &c));
            }
            q.add(k, c);
        }
        if let Some(f) = self.floor {
            q = q.truncate(f - dd);
        }
        Ok(q)
    }

    fn truncate(&self, floor: i64) -> WPoly {
        let f = floor_max(self.floor, Some(floor));
        let mut out = self.clone();
        out.floor = f;
        out.terms.retain(|k, _| f.is_none_or(|t| *k >= t));
        out
    }

    /// `w (w-1) ... (w-j+1)`.
    pub fn falling(j: u64) -> WPoly {
        let mut p = WPoly::from_coeffs([(0, Rat::one())]);
        for t in 0..j {
            p = p.mul(&WPoly::from_coeffs([(1, Rat::one()), (0, -int(t as i64))]), None);
        }
        p
    }

    /// `1 / ((w+1)(w+2)...(w+k))` down to `floor`.
    pub fn recip_rising(k: u64, floor: i64) -> WPoly {
        let mut den = WPoly::from_coeffs([(0, Rat::one())]);
        for t in 1..=k {
            den = den.mul(&WPoly::from_coeffs([(1, Rat::one()), (0, int(t as i64))]), None);
        }
        WPoly::from_coeffs([(0, Rat::one())]).div(&den, floor).expect("monic divisor")
    }

    /// The w-image of `v^j` after pulling out `u^{-j}`.
    fn of_vpower(j: i64, floor: Option<i64>) -> Result<WPoly> {
        if j >= 0 {
            return Ok(WPoly::falling(j as u64));
        }
        let f = floor.ok_or_else(|| Error::PreconditionFailed("negative v-power needs a floor for w-form".into()))?;
        Ok(WPoly::recip_rising((-j) as u64, f))
    }
}

/// `(u^a g(w)) (u^b h(w)) = u^{a+b} g(w+b) h(w)`.
fn w_product_to(f: &WeylSeries, g: &WeylSeries, wf: Option<i64>) -> Result<WeylSeries> {
    let pf = floor_max(floor_max(floor_add(f.v_floor, g.top_v()), floor_add(g.v_floor, f.top_v())), wf);
    let mut acc = WeylSeries::zero(Rep::W);
    for (ra, gp) in w_rows(f) {
        for (rb, hp) in w_rows(g) {
            let sh = gp.shift(&exp_to_rat(rb), pf.map(|t| t - hp.top().unwrap_or(0)));
            let prod = sh.mul(&hp, pf);
            for (k, c) in prod.terms {
                acc.add_term((ra + rb, k), c);
            }
        }
    }
    acc.v_floor = pf;
    acc.renormalize()?;
    Ok(acc.truncate(None, None))
}

fn w_rows(f: &WeylSeries) -> BTreeMap<Exp, WPoly> {
    let mut rows: BTreeMap<Exp, WPoly> = BTreeMap::new();
    for (&(a, k), c) in &f.terms {
        rows.entry(a).or_insert_with(|| WPoly { terms: BTreeMap::new(), floor: f.v_floor }).add(k, c.clone());
    }
    rows
}

/// Rewrites `u^i v^j` as `u^{i-j}` times a w-series.
pub fn to_w_form(f: &WeylSeries) -> Result<WeylSeries> {
    if f.rep == Rep::W {
        return Ok(f.clone());
    }
    if f.terms.keys().any(|m| !m.0.is_integer()) || f.u_floor.is_some_and(|t| !t.is_integer()) {
        return Err(Error::FractionalUInWForm);
    }
    if f.u_floor.is_some() {
        return Err(Error::PreconditionFailed("w-form needs an exact u-range".into()));
    }
    let mut out = WeylSeries::zero(Rep::W);
    let mut cache: BTreeMap<i64, WPoly> = BTreeMap::new();
    for (&(i, j), c) in &f.terms {
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(j) {
            e.insert(WPoly::of_vpower(j, f.v_floor)?);
        }
        for (k, d) in &cache[&j].terms {
            out.add_term((i - j, *k), d * c);
        }
    }
    out.v_floor = f.v_floor;
    Ok(out.truncate(None, None))
}

/// Inverse of [`to_w_form`] by triangular subtraction of top w-terms.
pub fn from_w_form(f: &WeylSeries) -> Result<WeylSeries> {
    if f.rep == Rep::Uv {
        return Ok(f.clone());
    }
    let mut rem = f.clone();
    let mut out = WeylSeries::zero(Rep::Uv);
    let mut cache: BTreeMap<i64, WPoly> = BTreeMap::new();
    while let Some((&(a, k), c)) = rem.terms.iter().max_by_key(|(m, _)| (m.1, m.0)) {
        let c = c.clone();
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(k) {
            e.insert(WPoly::of_vpower(k, f.v_floor)?);
        }
        for (j, d) in &cache[&k].terms {
            rem.add_term((a, *j), -(d * &c));
        }
        out.add_term((a + k, k), c);
    }
    out.v_floor = f.v_floor;
    out.renormalize()?;
    Ok(out)
}

/// `tr(F) = Coeff(F, u^{-1} v^{-1}) = Coeff(F, u^0 w^{-1})`.
pub fn weyl_trace(f: &WeylSeries) -> Result<Rat> {
    match f.rep {
        Rep::Uv => f.coeff_checked(-Exp::one(), -1),
        Rep::W => f.coeff_checked(Exp::zero(), -1),
    }
}

/// Applies `u^a v^b -> sum_{i>=1} (-1)^{i-1} t^{(i)}/i u^{a-i} v^{b-i}` with
/// `t = pick(a, b)`, `t^{(i)}` the falling factorial.
fn falling_derivation(f: &WeylSeries, pick: fn(Exp, i64) -> Rat, uf: Option<Exp>, vf: Option<i64>) -> Result<WeylSeries> {
    if f.rep != Rep::Uv {
        return Err(Error::RepresentationMismatch);
    }
    let uf = floor_max(f.u_floor.map(|t| t - 1), uf);
    let vf = floor_max(f.v_floor.map(|t| t - 1), vf);
    let mut out = WeylSeries::zero(Rep::Uv);
    out.n = f.n;
    for (&(a, b), c) in &f.terms {
        let t = pick(a, b);
        let mut fall = Rat::one();
        let mut i: i64 = 1;
        loop {
            fall *= &t - int(i - 1);
            if fall.is_zero() || uf.is_some_and(|x| a - i < x) || vf.is_some_and(|x| b - i < x) {
                break;
            }
            if i > SUM_CAP {
                return Err(Error::PreconditionFailed("derivation sum needs a floor".into()));
            }
            let sign = if i % 2 == 1 { Rat::one() } else { -Rat::one() };
            out.add_term((a - i, b - i), sign * &fall / int(i) * c);
            i += 1;
        }
    }
    out.u_floor = uf;
    out.v_floor = vf;
    out.renormalize()?;
    Ok(out)
}

/// `∂_w` with `∂_w(u) = 0`, `∂_w(v) = u^{-1}`.
pub fn partial_w_to(f: &WeylSeries, uf: Option<Exp>, vf: Option<i64>) -> Result<WeylSeries> {
    if f.rep == Rep::W {
        let mut out = WeylSeries::zero(Rep::W);
        for (&(a, k), c) in &f.terms {
            out.add_term((a, k - 1), c * int(k));
        }
        out.v_floor = floor_max(f.v_floor.map(|t| t - 1), vf);
        return Ok(out.truncate(None, None));
    }
    falling_derivation(f, |_, b| int(b), uf, vf)
}

pub fn partial_w(f: &WeylSeries) -> Result<WeylSeries> {
    partial_w_to(f, None, None)
}

/// `∂^v_w` with `∂^v_w(u) = v^{-1}`, `∂^v_w(v) = 0`.
pub fn partial_w_v_to(f: &WeylSeries, uf: Option<Exp>, vf: Option<i64>) -> Result<WeylSeries> {
    falling_derivation(f, |a, _| exp_to_rat(a), uf, vf)
}

pub fn partial_w_v(f: &WeylSeries) -> Result<WeylSeries> {
    partial_w_v_to(f, None, None)
}

/// The linear map `u -> -x`, `v -> y` into the Poisson side.
pub fn bar(f: &WeylSeries) -> Result<Series> {
    if f.rep != Rep::Uv {
        return Err(Error::RepresentationMismatch);
    }
    let mut terms = Vec::new();
    for (&(a, b), c) in &f.terms {
        if !a.is_integer() {
            return Err(Error::BadExponent(format!("(-x)^{} is not rational", fmt_exp(a))));
        }
        let sign = if a.to_integer().is_odd() { -Rat::one() } else { Rat::one() };
        terms.push(((a, b), sign * c));
    }
    let s = Series::from_terms(Space::B, terms)?;
    Ok(s.truncate(f.u_floor, f.v_floor))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VertexSolution {
    pub m0: i64,
    pub m: i64,
    #[serde(with = "crate::rat::rat_str")]
    pub alpha: Rat,
    #[serde(with = "crate::rat::rat_str")]
    pub beta: Rat,
}

/// Solves `0 = (2m0-1)C(m,2) - m beta - (m-1) alpha` and
/// `0 = (2m-1)C(m0,2) - m0 beta - (m0-1) alpha` by Cramer's rule.
pub fn dixmier_vertex_solve(m0: i64, m: i64) -> Result<VertexSolution> {
    if !(m0 > m && m > 0) {
        return Err(Error::VertexInvalid(format!("need m0 > m > 0, got ({m0}, {m})")));
    }
    let c2 = |t: i64| int(t * (t - 1) / 2);
    let (a1, b1, r1) = (int(m - 1), int(m), int(2 * m0 - 1) * c2(m));
    let (a2, b2, r2) = (int(m0 - 1), int(m0), int(2 * m - 1) * c2(m0));
    let det = &a1 * &b2 - &a2 * &b1;
    if det.is_zero() {
        return Err(Error::SingularSystem);
    }
    let alpha = (&r1 * &b2 - &r2 * &b1) / &det;
    let beta = (&a1 * &r2 - &a2 * &r1) / &det;
    Ok(VertexSolution { m0, m, alpha, beta })
}

/// `(m0 m / 2, (1-m0)(1-m)/2)`.
pub fn vertex_closed_form(m0: i64, m: i64) -> (Rat, Rat) {
    (Rat::new((m0 * m).into(), 2.into()), Rat::new(((1 - m0) * (1 - m)).into(), 2.into()))
}

/// The 0-th components at a Dixmier vertex built from `alpha`:
/// `F = u^{m0} v^m + alpha u^{m0-1} v^{m-1}` and `R = r(w) u^{m-m0}` with
/// `f r = (w + (m0-m+1)/2)/(m-m0)`, both in standard form, R down to
/// w-floor `1 - m - depth`.
pub fn vertex_components(m0: i64, m: i64, alpha: &Rat, depth: u32) -> Result<(WeylSeries, WeylSeries, WPoly, WPoly)> {
    if !(m0 > m && m > 0) {
        return Err(Error::VertexInvalid(format!("need m0 > m > 0, got ({m0}, {m})")));
    }
    let wf = 1 - m - depth as i64;
    let mut f = WPoly::falling(m as u64);
    for (k, c) in WPoly::falling((m - 1) as u64).terms {
        f.add(k, c * alpha);
    }
    let g = WPoly::from_coeffs([(1, Rat::one()), (0, Rat::new((m0 - m + 1).into(), 2.into()))]);
    let g = WPoly::from_coeffs(g.terms.into_iter().map(|(k, c)| (k, c / int(m - m0))));
    let r = g.div(&f, wf)?;
    let f0 = WeylSeries::from_terms(
        Rep::Uv,
        [((Exp::from(m0), m), Rat::one()), ((Exp::from(m0 - 1), m - 1), alpha.clone())],
    )?;
    let shifted = r.shift(&int(m - m0), Some(wf));
    let mut rw = WeylSeries::zero(Rep::W);
    for (k, c) in &shifted.terms {
        rw.add_term((Exp::from(m - m0), *k), c.clone());
    }
    rw.v_floor = Some(wf);
    let r0 = from_w_form(&rw)?;
    Ok((f0, r0, f, r))
}

/// Checks the bracket and the two trace conditions at a Dixmier vertex.
pub fn vertex_bracket_check(m0: i64, m: i64, depth: u32) -> Result<Verdict> {
    let (alpha, _) = vertex_closed_form(m0, m);
    vertex_bracket_check_with(m0, m, &alpha, depth)
}

pub fn vertex_bracket_check_with(m0: i64, m: i64, alpha: &Rat, depth: u32) -> Result<Verdict> {
    let (f0, r0, f, r) = vertex_components(m0, m, alpha, depth)?;
    let mut v = Verdict::new();
    let fr = f.mul(&r, None);
    let fr_exact = fr.terms.keys().all(|&k| k == 0 || k == 1);
    v.check("f*r closed form", fr_exact, format!("{} terms above w^{}", fr.terms.len(), fr.floor.unwrap_or(0)));
    let a = m0 - m;
    let mut tele = WPoly { terms: BTreeMap::new(), floor: fr.floor };
    for k in 1..=a {
        let lo = fr.shift(&int(-k), fr.floor);
        let hi = fr.shift(&int(1 - k), fr.floor);
        tele = tele.sub(&hi.sub(&lo));
    }
    let tele_ok = tele.terms.len() == 1 && tele.coeff(0).is_one();
    v.check("telescoped bracket", tele_ok, format!("{:?}", tele.terms.iter().map(|(k, c)| format!("{}w^{k}", fmt_rat(c))).collect::<Vec<_>>()));
    let br = commutator_to(&f0, &r0, None, None)?;
    let br_ok = br.agrees_with(&WeylSeries::one(Rep::Uv)) && br.is_known(Exp::zero(), 0);
    v.check("[F0, R0] = 1", br_ok, format!("v-floor {:?}", br.v_floor()));
    let t1 = weyl_trace(&normal_product(&r0, &partial_w(&f0)?)?)?;
    v.check("tr(R0 d_w F0) = 0", t1.is_zero(), fmt_rat(&t1));
    let t2 = weyl_trace(&normal_product(&f0, &partial_w_v(&r0)?)?)?;
    v.check("tr(F0 d^v_w R0) = 0", t2.is_zero(), fmt_rat(&t2));
    Ok(v)
}

#[derive(Serialize, Deserialize)]
struct WTermJson {
    c: String,
    u: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    v: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    w: Option<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeylJson {
    space: String,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "uFloor", default)]
    u_floor: Option<String>,
    #[serde(rename = "vFloor", skip_serializing_if = "Option::is_none", default)]
    v_floor: Option<i64>,
    #[serde(rename = "wFloor", skip_serializing_if = "Option::is_none", default)]
    w_floor: Option<i64>,
    terms: Vec<WTermJson>,
}

impl Serialize for WeylSeries {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let w = self.rep == Rep::W;
        WeylJson {
            space: self.rep.tag().into(),
            n: self.n,
            u_floor: self.u_floor.map(fmt_exp),
            v_floor: if w { None } else { self.v_floor },
            w_floor: if w { self.v_floor } else { None },
            terms: self
                .terms
                .iter()
                .map(|(&(a, b), c)| WTermJson {
                    c: fmt_rat(c),
                    u: fmt_exp(a),
                    v: (!w).then_some(b),
                    w: w.then_some(b),
                })
                .collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for WeylSeries {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<WeylSeries, D::Error> {
        use serde::de::Error as _;
        let raw = WeylJson::deserialize(de)?;
        weyl_from_json(raw).map_err(|e| D::Error::custom(e.to_string()))
    }
}

fn weyl_from_json(raw: WeylJson) -> Result<WeylSeries> {
    let rep = match raw.space.as_str() {
        "Weyl-UV" => Rep::Uv,
        "Weyl-W" => Rep::W,
        s => return Err(Error::Parse(format!("unknown Weyl space {s:?}"))),
    };
    if raw.n == 0 {
        return Err(Error::Parse("N must be positive".into()));
    }
    let mut s = WeylSeries::zero(rep);
    s.n = raw.n;
    s.u_floor = raw.u_floor.as_deref().map(parse_exp).transpose()?;
    s.v_floor = if rep == Rep::W { raw.w_floor } else { raw.v_floor };
    for t in raw.terms {
        let c = parse_rat(&t.c)?;
        let a = parse_exp(&t.u)?;
        let b = match rep {
            Rep::Uv => t.v,
            Rep::W => t.w,
        }
        .ok_or_else(|| Error::Parse("term lacks its second exponent".into()))?;
        if c.is_zero() || !s.is_known(a, b) || s.terms.insert((a, b), c).is_some() {
            return Err(Error::Parse("zero, repeated or below-floor term".into()));
        }
        if raw.n % (*a.denom() as u64) != 0 {
            return Err(Error::Parse(format!("exponent {} not over N = {}", t.u, raw.n)));
        }
    }
    s.check_rep()?;
    s.renormalize()?;
    Ok(s)
}

impl WeylSeries {
    pub fn render(&self) -> String {
        serde_json::to_string(self).expect("always serializes")
    }

    pub fn parse(s: &str) -> Result<WeylSeries> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl fmt::Display for WeylSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let second = if self.rep == Rep::W { "w" } else { "v" };
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, ((a, b), c)) in self.terms.iter().rev().enumerate() {
            let sign = if c.is_negative() { " - " } else if i > 0 { " + " } else { "" };
            let mag = c.abs();
            write!(f, "{sign}{}", fmt_rat(&mag))?;
            if !a.is_zero() {
                write!(f, "*u^({})", fmt_exp(*a))?;
            }
            if *b != 0 {
                write!(f, "*{second}^({b})")?;
            }
        }
        if self.u_floor.is_some() || self.v_floor.is_some() {
            write!(f, " + O(u^{:?}, {second}^{:?})", self.u_floor.map(fmt_exp), self.v_floor)?;
        }
        Ok(())
    }
}
