//! Expansions `G = sum b_i F^{(n-i)/m}` and `y = sum b̄_i F^{(1-i)/m}`,
//! the leading quasi-homogeneous part `R0`, and the edge equation.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::newton::{component, prime_degree};
use crate::poisson::bracket;
use crate::rat::{exp_to_rat, fmt_exp, int, rat_str, Exp, Rat};
use crate::series::{Series, Space, Var};
use crate::verdict::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExpansionKind {
    #[serde(rename = "G_IN_F")]
    GInF,
    #[serde(rename = "Y_IN_F")]
    YInF,
}

/// `coeffs[i]` is the x-only series multiplying `F^{(n-i)/m}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExpansionCoeffs {
    pub kind: ExpansionKind,
    pub m: i64,
    pub n: i64,
    pub coeffs: Vec<Series>,
}

impl ExpansionCoeffs {
    pub fn depth(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// `sum b_i F^{(n-i)/m}` down to `y >= n - depth`.
    pub fn reexpand(&self, f: &Series) -> Result<Series> {
        let (fb, _, _) = monic_head(f)?;
        let yf = self.n - self.depth() as i64;
        let mut out = Series::zero(Space::B).truncate(None, Some(yf));
        for (i, b) in self.coeffs.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            let pw = fb.power_to(Exp::new(self.n - i as i64, self.m), None, Some(yf))?;
            out = out.checked_add(&b.in_space(Space::B)?.checked_mul(&pw)?)?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("coefficients serialize")
    }
}

/// `F` in B together with its first term `x^{m0} y^m`, which must be a
/// monic monomial row.
pub fn monic_head(f: &Series) -> Result<(Series, Exp, i64)> {
    let fb = f.in_space(Space::B)?;
    let m = fb.deg_y().ok_or_else(|| Error::PreconditionFailed("F = 0".into()))?;
    if m < 1 {
        return Err(Error::PreconditionFailed("deg_y F must be positive".into()));
    }
    let row = fb.row(m)?;
    if row.len() != 1 || !row.is_exact() {
        return Err(Error::Nonmonic);
    }
    let (&(m0, _), c) = row.terms().next().expect("one term");
    if !c.is_one() {
        return Err(Error::Nonmonic);
    }
    Ok((fb, m0, m))
}

/// Leading-term subtraction of `g` (top y-degree `n`) in powers
/// `F^{(n-i)/m}`, for `i = 0..=depth`.
fn expand(f: &Series, g: &Series, depth: u32, kind: ExpansionKind) -> Result<ExpansionCoeffs> {
    let (fb, m0, m) = monic_head(f)?;
    let g = g.in_space(Space::B)?;
    let n = g.deg_y().ok_or_else(|| Error::PreconditionFailed("G = 0".into()))?;
    let yf = n - depth as i64;
    let mut rest = g.truncate(None, Some(yf));
    let mut coeffs = Vec::with_capacity(depth as usize + 1);
    for i in 0..=depth as i64 {
        let s = Exp::new(n - i, m);
        let row = rest.row(n - i)?;
        let b = row.mul_monomial(&Rat::one(), -(m0 * s), 0)?;
        if !b.is_zero() {
            let pw = fb.power_to(s, None, Some(yf))?;
            rest = rest.checked_sub(&b.in_space(Space::B)?.checked_mul(&pw)?)?;
        }
        coeffs.push(b.assume_exact());
    }
    Ok(ExpansionCoeffs { kind, m, n, coeffs })
}

pub fn expand_g_in_f(f: &Series, g: &Series, depth: u32) -> Result<ExpansionCoeffs> {
    expand(f, g, depth, ExpansionKind::GInF)
}

/// The `b̄_i` with `y = sum b̄_i F^{(1-i)/m}`.
pub fn expand_y_in_f(f: &Series, depth: u32) -> Result<ExpansionCoeffs> {
    expand(f, &Series::y(Space::B), depth, ExpansionKind::YInF)
}

/// `Coeff(F^s, y^b)` as an x-only series.
pub fn power_row(f: &Series, s: Exp, b: i64) -> Result<Series> {
    let (fb, _, _) = monic_head(f)?;
    fb.power_to(s, None, Some(b))?.row(b)
}

/// `c_{l,i}` in `y^l F^{k/m} = sum c_{l,i} F^{(k+l-i)/m}`, both by
/// subtraction and, where one is known, by closed formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerCoeff {
    pub subtraction: Series,
    pub closed: Option<Series>,
}

impl PowerCoeff {
    pub fn consistent(&self) -> bool {
        self.closed.as_ref().is_none_or(|c| c == &self.subtraction)
    }
}

pub fn coeff_of_f_power(f: &Series, l: i64, k: i64, i: i64, depth: u32) -> Result<PowerCoeff> {
    let (fb, _, m) = monic_head(f)?;
    if m == -k {
        return Err(Error::Degenerate);
    }
    if i < 0 || i > depth as i64 {
        return Err(Error::PreconditionFailed(format!("index {i} outside 0..={depth}")));
    }
    let top = l + k;
    let yf = top - depth as i64;
    let g = fb.power_to(Exp::new(k, m), None, Some(yf - l))?.mul_monomial(&Rat::one(), Exp::zero(), l)?;
    let sub = expand(&fb, &g, depth, ExpansionKind::GInF)?.coeffs[i as usize].clone();
    let closed = if i == m + k + l {
        let row = power_row(&fb, Exp::new(m + k, m), -l)?;
        Some(row.scale(&-Rat::new(l.into(), (m + k).into())))
    } else if k == 0 && i != l {
        let row = power_row(&fb, Exp::new(i - l, m), -l)?;
        Some(row.scale(&-Rat::new(l.into(), (i - l).into())))
    } else if k == 0 && l == 0 {
        Some(Series::one(Space::A))
    } else if k == 0 && l > 0 {
        // -(1/m) sum_s s Coeff(F, y^{m-s}) Coeff(F^{-1}, y^{-m-l+s})
        let inv = fb.power_to(-Exp::one(), None, Some(-m - l))?;
        let mut acc = Series::zero(Space::A);
        for s in 1..=(m + l) {
            let fs = fb.row(m - s)?;
            if fs.is_zero() {
                continue;
            }
            acc = acc.checked_add(&fs.checked_mul(&inv.row(-m - l + s)?)?.scale(&int(s)))?;
        }
        Some(acc.scale(&-Rat::new(1.into(), m.into())))
    } else {
        None
    };
    Ok(PowerCoeff { subtraction: sub, closed })
}

/// The nonzero constant `[F, G]`.
pub fn jacobian_constant(f: &Series, g: &Series) -> Result<Rat> {
    let br = bracket(f, g)?;
    let j = br.coeff(Exp::zero(), 0);
    if j.is_zero() || !br.agrees_with(&Series::constant(br.space(), j.clone())) {
        return Err(Error::NotQjPair);
    }
    Ok(j)
}

fn is_constant(s: &Series) -> bool {
    s.terms().all(|(t, _)| t.0.is_zero())
}

/// `b_i` constant for `i < m+n-1` and `∂_x b_{i+m+n-1} = -((1-i)J/m) b̄_i`.
pub fn check_b_derivative_law(f: &Series, g: &Series, depth: u32) -> Result<Verdict> {
    let fb = f.in_space(Space::B)?;
    let gb = g.in_space(Space::B)?;
    let j = jacobian_constant(&fb, &gb)?;
    let b = expand_g_in_f(&fb, &gb, depth)?;
    let bbar = expand_y_in_f(&fb, depth)?;
    let (m, n) = (b.m, b.n);
    let s = m + n - 1;
    let mut v = Verdict::new();
    v.check("m + n >= 1", s >= 0, format!("m = {m}, n = {n}"));
    for i in 0..(s.max(0) as usize).min(depth as usize + 1) {
        v.check(format!("b_{i} constant"), is_constant(&b.coeffs[i]), b.coeffs[i].to_string());
    }
    let factor = |i: i64| -(int(1 - i) * &j) / int(m);
    for i in 0..=depth as i64 {
        let k = i + s;
        if k < 0 || k > depth as i64 {
            continue;
        }
        let lhs = b.coeffs[k as usize].partial(Var::X);
        let rhs = bbar.coeffs[i as usize].scale(&factor(i));
        v.check(format!("d/dx b_{k} = -((1-{i})J/m) bbar_{i}"), lhs == rhs, format!("{lhs} vs {rhs}"));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct R0Report {
    #[serde(rename = "R0")]
    pub r0: Series,
    #[serde(with = "crate::rat::exp_str")]
    pub p: Exp,
    #[serde(with = "rat_str")]
    pub mu: Rat,
    #[serde(rename = "J", with = "rat_str")]
    pub j: Rat,
    /// Set when some `1 + sigma_i = 0` and the limit value `b'_mu` was used.
    #[serde(rename = "limitConvention")]
    pub limit_convention: bool,
    /// `[F<0>, R0] = J` above the floor.
    #[serde(rename = "bracketOk")]
    pub bracket_ok: bool,
    #[serde(rename = "degYOk")]
    pub deg_y_ok: bool,
}

/// `R0 = b̃_mu (F<0>)^{(n-mu)/m} - (J/m) sum_i (1-i)/(1+sigma_i) b̄_{i,0} x^{1+sigma_i} (F<0>)^{(1-i-m)/m}`
/// with `sigma_i = i (p + m0/m) - m0/m`.
pub fn compute_r0(f: &Series, g: &Series, depth: u32) -> Result<R0Report> {
    let (fb, m0, m) = monic_head(f)?;
    let gb = g.in_space(Space::B)?;
    let n = gb.deg_y().ok_or_else(|| Error::PreconditionFailed("G = 0".into()))?;
    let j = jacobian_constant(&fb, &gb)?;
    let p = prime_degree(&fb)?.value().ok_or_else(|| Error::PreconditionFailed("prime degree is not finite".into()))?;
    let slope = p + m0 / Exp::from(m);
    if slope.is_zero() {
        return Err(Error::MuDegenerate);
    }
    let mu = Exp::from(m + n) - (Exp::one() + p) / slope;
    let sigma = |i: i64| Exp::from(i) * slope - m0 / Exp::from(m);
    let f0 = component(&fb, p, Exp::zero())?;
    let yf = (1 - m - depth as i64).min(n - depth as i64);
    let mu_int = mu.is_integer().then(|| mu.to_integer());
    let need = mu_int.map_or(0, |k| k.max(0) as u32).max(depth);
    let b = expand_g_in_f(&fb, &gb, need)?;
    let bbar = expand_y_in_f(&fb, depth)?;

    let mut r0 = Series::zero(Space::B).truncate(None, Some(yf));
    if let Some(k) = mu_int {
        if k >= 0 && k < m + n - 1 {
            let bt = b.coeffs[k as usize].in_space(Space::B)?;
            let pw = f0.power_to(Exp::new(n - k, m), None, Some(yf))?;
            r0 = r0.checked_add(&bt.checked_mul(&pw)?)?;
        }
    }
    let mut limit_convention = false;
    for i in 0..=depth as i64 {
        let sg = sigma(i);
        let one_plus = Exp::one() + sg;
        let coef = if one_plus.is_zero() {
            limit_convention = true;
            let k = (m + n - 1 + i) as usize;
            let bk = if k < b.coeffs.len() { b.coeffs[k].coeff(Exp::zero(), 0) } else { expand_g_in_f(&fb, &gb, k as u32)?.coeffs[k].coeff(Exp::zero(), 0) };
            bk
        } else {
            let b0 = bbar.coeffs[i as usize].coeff(sg, 0);
            -(&j / int(m)) * int(1 - i) / exp_to_rat(one_plus) * b0
        };
        if coef.is_zero() {
            continue;
        }
        let pw = f0.power_to(Exp::new(1 - i - m, m), None, Some(yf))?;
        r0 = r0.checked_add(&pw.mul_monomial(&coef, one_plus, 0)?)?;
    }
    let br = bracket(&f0, &r0)?;
    let bracket_ok = br.agrees_with(&Series::constant(Space::B, j.clone()));
    let deg = r0.deg_y();
    let alt = (Exp::one() + p) / slope - Exp::from(m);
    let deg_y_ok = deg.is_some_and(|d| Exp::from(d) == alt || d == 1 - m);
    Ok(R0Report { r0, p, mu: exp_to_rat(mu), j, limit_convention, bracket_ok, deg_y_ok })
}

/// Parameters of the edge equation
/// `α1 P ∂_y pri + α2 pri ∂_y P = α3 pri^{a+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeOde {
    pub a: i64,
    pub p_prime: i64,
    pub q: i64,
    pub m: i64,
    pub m0: Exp,
    pub m_prime: i64,
    pub j: Rat,
}

impl EdgeOde {
    pub fn alpha2(&self) -> Rat {
        int(self.p_prime * self.m) + exp_to_rat(self.m0) * int(self.q)
    }

    pub fn alpha1(&self) -> Rat {
        -int(self.a) * self.alpha2() - int(self.m_prime * (self.p_prime + self.q))
    }

    /// `α3 = q J x^{1-m0}`.
    pub fn alpha3(&self, space: Space) -> Series {
        Series::monomial(space, int(self.q) * &self.j, Exp::one() - self.m0, 0)
    }
}

/// Checks the edge equation exactly; the verdict carries the residual.
pub fn check_edge_ode(pri: &Series, p: &Series, ode: &EdgeOde) -> Result<Verdict> {
    let pri = pri.in_space(Space::B)?;
    let p = p.in_space(Space::B)?;
    let lhs = p
        .checked_mul(&pri.partial(Var::Y))?
        .scale(&ode.alpha1())
        .checked_add(&pri.checked_mul(&p.partial(Var::Y))?.scale(&ode.alpha2()))?;
    let a3 = ode.alpha3(Space::B);
    let k = ode.a + 1;
    let (lhs, rhs) = if k >= 0 {
        (lhs, a3.checked_mul(&pri.pow(k as u32)?)?)
    } else {
        (lhs.checked_mul(&pri.pow((-k) as u32)?)?, a3.clone())
    };
    let residual = lhs.checked_sub(&rhs)?;
    let mut v = Verdict::new();
    v.check(
        "edge equation",
        residual.is_zero(),
        format!(
            "alpha1 = {}, alpha2 = {}, alpha3 = {}, a = {}, residual = {}",
            crate::rat::fmt_rat(&ode.alpha1()),
            crate::rat::fmt_rat(&ode.alpha2()),
            a3,
            ode.a,
            residual
        ),
    );
    v.check("alpha3 != 0 or P != 0", !(p.is_zero() && ode.j.is_zero()), format!("q = {}, m0 = {}", ode.q, fmt_exp(ode.m0)));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{exp, rat};

    fn b(terms: &[(i64, i64, i64, i64)]) -> Series {
        Series::from_ints(Space::B, terms)
    }

    fn ax(c: Rat, a: Exp) -> Series {
        Series::monomial(Space::A, c, a, 0)
    }

    fn pair_2ex1() -> (Series, Series) {
        let f = b(&[(1, 1, 1, 2), (2, 5, 8, 1)]);
        let g = b(&[(1, 3, 2, 3), (3, 9, 8, 2)])
            + Series::monomial(Space::B, rat(3, 2), exp(3, 4), 1)
            + Series::monomial(Space::B, rat(-1, 2), exp(3, 8), 0);
        (f, g)
    }

    #[test]
    fn g_equal_f() {
        let f = b(&[(1, 1, 1, 2), (3, 0, 1, 1), (1, -1, 1, 0)]);
        let e = expand_g_in_f(&f, &f, 6).unwrap();
        assert_eq!(e.coeffs[0], Series::one(Space::A));
        assert!(e.coeffs[1..].iter().all(Series::is_zero));
    }

    #[test]
    fn y_in_y2_plus_x() {
        let f = b(&[(1, 0, 1, 2), (1, 1, 1, 0)]);
        let e = expand_y_in_f(&f, 4).unwrap();
        assert_eq!(e.coeffs[0], Series::one(Space::A));
        assert!(e.coeffs[1].is_zero());
        assert_eq!(e.coeffs[2], ax(rat(-1, 2), exp(1, 1)));
        assert!(e.coeffs[3].is_zero());
        assert_eq!(e.coeffs[4], ax(rat(-1, 8), exp(2, 1)));
        assert!(e.reexpand(&f).unwrap().agrees_with(&Series::y(Space::B)));

        let g = b(&[(1, 0, 1, 3)]);
        let e = expand_g_in_f(&f, &g, 4).unwrap();
        assert_eq!(e.coeffs[0], Series::one(Space::A));
        assert!(e.reexpand(&f).unwrap().agrees_with(&g));
    }

    #[test]
    fn nonmonic_is_rejected() {
        let f = b(&[(2, 0, 1, 2), (1, 1, 1, 0)]);
        assert!(matches!(expand_y_in_f(&f, 3), Err(Error::Nonmonic)));
        let f = b(&[(1, 0, 1, 2), (1, 1, 1, 2)]);
        assert!(matches!(expand_y_in_f(&f, 3), Err(Error::Nonmonic)));
    }

    #[test]
    fn closed_coefficients() {
        let f = b(&[(1, 0, 1, 2), (1, 1, 1, 0)]);
        let c = coeff_of_f_power(&f, 1, 0, 2, 6).unwrap();
        assert_eq!(c.subtraction, ax(rat(-1, 2), exp(1, 1)));
        assert!(c.consistent());
        let c = coeff_of_f_power(&f, 1, 0, 4, 6).unwrap();
        assert_eq!(c.closed.clone().unwrap(), ax(rat(-1, 8), exp(2, 1)));
        assert!(c.consistent());
        let c = coeff_of_f_power(&f, 1, 0, 3, 6).unwrap();
        assert!(c.subtraction.is_zero() && c.consistent());
        for (l, k, i) in [(2, 0, 2), (3, 0, 3), (2, 1, 5), (1, -1, 2), (0, 0, 0)] {
            let c = coeff_of_f_power(&f, l, k, i, 7).unwrap();
            assert!(c.closed.is_some(), "{l} {k} {i}");
            assert!(c.consistent(), "{l} {k} {i}: {:?}", c);
        }
        assert!(matches!(coeff_of_f_power(&f, 1, -2, 1, 4), Err(Error::Degenerate)));
    }

    #[test]
    fn derivative_law() {
        let f = b(&[(1, 2, 5, 2), (1, 2, 5, 0)]);
        let g = b(&[(1, 3, 5, 3)]) + Series::monomial(Space::B, rat(3, 2), exp(3, 5), 1);
        assert_eq!(jacobian_constant(&f, &g).unwrap(), rat(3, 5));
        let v = check_b_derivative_law(&f, &g, 8).unwrap();
        assert!(v.pass(), "{:?}", v.failures().collect::<Vec<_>>());

        let f1 = b(&[(1, 2, 1, 4), (1, 1, 1, 2), (2, 1, 1, 1), (1, 0, 1, -2)]);
        let g1 = b(&[(1, 1, 1, 2), (1, 0, 1, -1)]);
        let v = check_b_derivative_law(&f1, &g1, 8).unwrap();
        assert!(v.pass(), "{:?}", v.failures().collect::<Vec<_>>());

        let sq = f.pow(2).unwrap();
        assert!(matches!(check_b_derivative_law(&f, &sq, 4), Err(Error::NotQjPair)));
    }

    #[test]
    fn r0_examples() {
        let (f, g) = pair_2ex1();
        let r = compute_r0(&f, &g, 10).unwrap();
        assert_eq!(r.mu, int(0));
        assert_eq!(r.p, exp(-3, 8));
        assert!(r.r0.agrees_with(&g), "{}", r.r0);
        assert!(r.bracket_ok && r.deg_y_ok);

        let f = b(&[(1, 2, 1, 10), (2, 1, 1, 4)]);
        let g = b(&[(1, 3, 1, 15), (3, 2, 1, 9)])
            + Series::monomial(Space::B, rat(3, 2), exp(1, 1), 3)
            + Series::monomial(Space::B, rat(-1, 2), Exp::zero(), -3);
        let r = compute_r0(&f, &g, 24).unwrap();
        assert_eq!(r.p, exp(-1, 6));
        assert!(r.r0.agrees_with(&g), "{}", r.r0);
        assert!(r.bracket_ok && r.deg_y_ok);

        // As printed, with 1/2 x y^3, the bracket is not constant.
        let printed = g - Series::monomial(Space::B, int(1), exp(1, 1), 3);
        assert!(matches!(compute_r0(&f, &printed, 8), Err(Error::NotQjPair)));
    }

    #[test]
    fn edge_equation() {
        let (_, g) = pair_2ex1();
        let pri = b(&[(1, 0, 1, 2), (2, -3, 8, 1)]);
        let ode = EdgeOde { a: 0, p_prime: -3, q: 8, m: 2, m0: exp(1, 1), m_prime: 1, j: rat(3, 8) };
        let p = g.checked_mul(&pri).unwrap();
        assert!(check_edge_ode(&pri, &p, &ode).unwrap().pass());
        assert!(!check_edge_ode(&pri, &pri, &ode).unwrap().pass());
        assert!(!check_edge_ode(&pri, &Series::zero(Space::B), &ode).unwrap().pass());
    }
}
