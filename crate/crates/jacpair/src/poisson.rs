//! Poisson bracket, trace, and the automorphisms used to move pairs around.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion;
use crate::rat::{self, binom, exp_str, exp_to_rat, fmt_exp, fmt_rat, int, pow_i, rat_str, rat_to_exp, Exp, Rat};
use crate::series::{Series, Space, Var};
use crate::verdict::Verdict;

/// Hard stop for `ad`-iterations that fail to die out.
pub const AD_ITERATION_CAP: usize = 4096;

/// `[F, G] = F_x G_y - F_y G_x`.
pub fn bracket(f: &Series, g: &Series) -> Result<Series> {
    let a = f.partial(Var::X).checked_mul(&g.partial(Var::Y))?;
    let b = f.partial(Var::Y).checked_mul(&g.partial(Var::X))?;
    a.checked_sub(&b)
}

/// Coefficient of `(xy)^{-1}`.
pub fn trace(f: &Series) -> Result<Rat> {
    f.coeff_checked(-Exp::one(), -1)
}

/// Splits an admissible generator `H = a1 x + H~` with `deg_x H~ < 1`.
/// Returns `a1` and `1 - deg_x H~` (`None` when `H~ = 0`).
fn generator_shape(h: &Series) -> Result<(Rat, Option<Exp>)> {
    let one = Exp::one();
    let mut a1 = Rat::zero();
    let mut top_rest: Option<Exp> = None;
    for (&(a, b), c) in h.terms() {
        if a > one {
            return Err(Error::BadGenerator(format!("term x^{}y^{} has x-degree above 1", fmt_exp(a), b)));
        }
        if a == one {
            match b {
                0 => a1 = c.clone(),
                1 => {
                    return Err(Error::BadGenerator(format!(
                        "a0 = {} != 0: e^(a0 (b-a)) is irrational",
                        fmt_rat(c)
                    )))
                }
                _ => return Err(Error::BadGenerator(format!("degree-1 part contains y^{b}"))),
            }
        } else {
            top_rest = Some(top_rest.map_or(a, |t: Exp| t.max(a)));
        }
    }
    if h.x_floor().is_some_and(|f| f >= one) {
        return Err(Error::BadGenerator("x-floor of H is not below 1".into()));
    }
    Ok((a1, top_rest.map(|t| one - t)))
}

/// `e^{ad_H}(P)` correct down to `x >= top_x(P) - depth * delta`, where
/// `delta` is the x-degree drop of one application of `ad` of the part of
/// `H` below `x^1`.
pub fn exp_ad(h: &Series, p: &Series, depth: u32) -> Result<Series> {
    let (_, delta) = generator_shape(h)?;
    let xf = match (delta, p.top_x()) {
        (Some(d), Some(t)) => Some(t - d * Exp::from(depth as i64)),
        _ => None,
    };
    exp_ad_to(h, p, xf)
}

/// `e^{ad_H}(P)` correct for `x >= xf` (exact when `xf` is `None` and the
/// series terminates).
pub fn exp_ad_to(h: &Series, p: &Series, xf: Option<Exp>) -> Result<Series> {
    let (_, delta) = generator_shape(h)?;
    if delta.is_some() && xf.is_none() && !p.is_zero() {
        return Err(Error::PreconditionFailed("exp_ad with a nonlinear generator needs an x-floor".into()));
    }
    let cut = |s: Series| match xf {
        Some(f) => s.truncate(Some(f), None),
        None => s,
    };
    let mut term = cut(p.clone());
    let mut sum = term.clone();
    for i in 1..=AD_ITERATION_CAP {
        term = cut(bracket(h, &term)?.scale(&int(i as i64).recip()));
        sum = sum.checked_add(&term)?;
        if term.is_empty() {
            return Ok(sum);
        }
    }
    Err(Error::StepLimit(AD_ITERATION_CAP))
}

/// `F(x, y + lambda x^e)`.
pub fn substitute_y(f: &Series, lambda: &Rat, e: Exp) -> Result<Series> {
    if lambda.is_zero() {
        return Ok(f.clone());
    }
    if e > Exp::zero() && !f.is_exact() {
        return Err(Error::PreconditionFailed("y -> y + c x^e with e > 0 needs an exact input".into()));
    }
    let yf = f.y_floor();
    let mut terms = Vec::new();
    for (&(a, b), c) in f.terms() {
        let mut k = 0i64;
        loop {
            if b >= 0 && k > b {
                break;
            }
            if b < 0 {
                match yf {
                    Some(g) if b - k >= g => {}
                    Some(_) => break,
                    None => return Err(Error::PreconditionFailed("negative y-power needs a y-floor".into())),
                }
            }
            let coef = c * binom(&int(b), k as u64) * pow_i(lambda, k);
            terms.push(((a + e * Exp::from(k), b - k), coef));
            k += 1;
        }
    }
    let out = Series::from_terms(f.space(), terms)?;
    Ok(out.truncate(f.x_floor(), f.y_floor()))
}

/// `(x, y) -> (x^{q/(q-p)}, x^{-p/(q-p)} y)`, i.e. `x^i y^j -> x^{(qi - pj)/(q-p)} y^j`.
pub fn monomial_change(f: &Series, p: i64, q: i64) -> Result<Series> {
    if !(q > 0 && p < q) {
        return Err(Error::PreconditionFailed(format!("monomial change needs 0 < q and p < q, got p={p}, q={q}")));
    }
    let (pe, qe, d) = (Exp::from(p), Exp::from(q), Exp::from(q - p));
    let map = |a: Exp, b: i64| (qe * a - pe * Exp::from(b)) / d;
    let xf = match f.x_floor() {
        None => None,
        Some(_) if p == 0 => f.x_floor(),
        Some(_) if p < 0 => {
            return Err(Error::PreconditionFailed("monomial change with p < 0 needs an exact input".into()))
        }
        Some(g) => {
            let low = match (f.space(), f.y_floor()) {
                (Space::B, None) => {
                    return Err(Error::PreconditionFailed("monomial change of a truncated series needs a y-floor".into()))
                }
                (Space::B, Some(yf)) => yf.min(0),
                _ => 0,
            };
            Some(map(g, low))
        }
    };
    let out = Series::from_terms(f.space(), f.terms().map(|(&(a, b), c)| ((map(a, b), b), c.clone())))?;
    Ok(out.truncate(xf, f.y_floor()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum AutoStep {
    #[serde(rename = "expAd")]
    ExpAd {
        #[serde(rename = "H")]
        h: Series,
    },
    /// `y -> y - c/x`.
    #[serde(rename = "zc")]
    Zc {
        #[serde(with = "rat_str")]
        c: Rat,
    },
    #[serde(rename = "monomial")]
    Monomial { p: i64, q: i64 },
    /// `y -> y + lambda x^e`.
    #[serde(rename = "shiftY")]
    ShiftY {
        #[serde(with = "rat_str")]
        lambda: Rat,
        #[serde(with = "exp_str")]
        e: Exp,
    },
}

impl AutoStep {
    /// Applies the step; `depth` is forwarded to `exp_ad`.
    pub fn apply(&self, f: &Series, depth: u32) -> Result<Series> {
        match self {
            AutoStep::ExpAd { h } => exp_ad(&h.in_space(f.space())?, f, depth),
            AutoStep::Zc { c } => substitute_y(f, &-c.clone(), -Exp::one()),
            AutoStep::Monomial { p, q } => monomial_change(f, *p, *q),
            AutoStep::ShiftY { lambda, e } => substitute_y(f, lambda, *e),
        }
    }

    pub fn inverse(&self) -> AutoStep {
        match self {
            AutoStep::ExpAd { h } => AutoStep::ExpAd { h: -h },
            AutoStep::Zc { c } => AutoStep::Zc { c: -c.clone() },
            AutoStep::Monomial { p, q } => AutoStep::Monomial { p: -p, q: q - p },
            AutoStep::ShiftY { lambda, e } => AutoStep::ShiftY { lambda: -lambda.clone(), e: *e },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AutoLog {
    pub steps: Vec<AutoStep>,
}

impl AutoLog {
    pub fn new() -> AutoLog {
        AutoLog::default()
    }

    pub fn push(&mut self, step: AutoStep) {
        self.steps.push(step);
    }

    /// Steps undoing this log, last step first.
    pub fn inverse(&self) -> AutoLog {
        AutoLog { steps: self.steps.iter().rev().map(AutoStep::inverse).collect() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("log serializes")
    }

    pub fn from_json(s: &str) -> Result<AutoLog> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Replays `log` on `f`, one step after the other.
pub fn apply_auto(log: &AutoLog, f: &Series, depth: u32) -> Result<Series> {
    log.steps.iter().try_fold(f.clone(), |acc, step| step.apply(&acc, depth))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum Candidate {
    #[serde(rename = "PASS")]
    Pass {
        checked: usize,
        /// Grid points where `(F - c)^a` leaves the y-lattice (its trace is
        /// zero for free) or has an irrational leading coefficient.
        skipped: usize,
    },
    #[serde(rename = "FAIL")]
    Fail {
        #[serde(with = "rat_str")]
        a: Rat,
        #[serde(with = "rat_str")]
        c: Rat,
        #[serde(with = "rat_str")]
        trace: Rat,
    },
}

impl Candidate {
    pub fn is_pass(&self) -> bool {
        matches!(self, Candidate::Pass { .. })
    }
}

/// `a in {±1, ±1/m, (1-m-i)/m : i <= 3}`, `c in {0} ∪ rational roots of f0`.
pub fn default_grid(f: &Series) -> (Vec<Rat>, Vec<Rat>) {
    let m = f.deg_y().unwrap_or(0).max(1);
    let mut a = vec![int(1), int(-1), rat::rat(1, m), rat::rat(-1, m)];
    for i in 0..=3 {
        a.push(rat::rat(1 - m - i, m));
    }
    a.sort();
    a.dedup();
    let mut c = vec![Rat::zero()];
    if let Some(top) = f.deg_y() {
        if let Ok(row) = f.row(top) {
            let exps: Vec<Exp> = row.x_exponents();
            if exps.iter().all(|e| e.is_integer()) && !exps.is_empty() {
                let lo = exps.iter().min().expect("nonempty").to_integer();
                let hi = exps.iter().max().expect("nonempty").to_integer();
                let coeffs: Vec<Rat> = (lo..=hi).map(|k| row.coeff(Exp::from(k), 0)).collect();
                c.extend(rat::rational_roots(&coeffs));
            }
        }
    }
    c.sort();
    c.dedup();
    (a, c)
}

/// Checks `tr((F - c)^a) = 0` over the sample grid.
pub fn is_jacobian_candidate(f: &Series, a_samples: &[Rat], c_samples: &[Rat]) -> Result<Candidate> {
    let fb = f.in_space(Space::B)?;
    if fb.deg_y().unwrap_or(0) == 0 && fb.deg_x().is_none_or(|d| d.is_zero()) {
        return Err(Error::PreconditionFailed("F is constant".into()));
    }
    let (_, lead) = fb.leading()?;
    let fnorm = fb.scale(&lead.recip());
    let (mut checked, mut skipped) = (0, 0);
    for a in a_samples {
        for c in c_samples {
            let g = fnorm.checked_sub(&Series::constant(Space::B, c / &lead))?;
            if g.is_zero() {
                skipped += 1;
                continue;
            }
            let m = g.deg_y().expect("nonzero");
            let am = a * int(m);
            if !am.is_integer() {
                skipped += 1;
                continue;
            }
            let s = rat_to_exp(a)?;
            let pw = match g.power_to(s, Some(-Exp::one()), Some(-1)) {
                Ok(pw) => pw,
                Err(Error::BadLeading(_)) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            checked += 1;
            let t = trace(&pw)?;
            if !t.is_zero() {
                return Ok(Candidate::Fail { a: a.clone(), c: c.clone(), trace: t });
            }
        }
    }
    Ok(Candidate::Pass { checked, skipped })
}

/// `∫ s dx` for an x-only series, or the offending exponent `-1`.
fn integrate_x(s: &Series) -> Option<Series> {
    if !s.coeff(-Exp::one(), 0).is_zero() {
        return None;
    }
    let terms = s.terms().map(|(&(a, b), c)| ((a + 1, b), c / exp_to_rat(a + 1))).collect::<Vec<_>>();
    Some(Series::from_terms(s.space(), terms).expect("same space").truncate(s.x_floor().map(|f| f + 1), None))
}

/// A partner `G` with `[F, G] = 1`, built as `sum b_i F^{(1-m-i)/m}` with
/// `∂_x b_i = -((1-i)/m) b̄_i`, where `y = sum b̄_i F^{(1-i)/m}`.
pub fn construct_partner(f: &Series, depth: u32) -> Result<Series> {
    let fb = f.in_space(Space::B)?;
    let m = fb.deg_y().unwrap_or(0);
    if m < 1 {
        return Err(Error::PreconditionFailed("partner construction needs deg_y F >= 1".into()));
    }
    let ybar = expansion::expand_y_in_f(&fb, depth)?;
    let yf = 1 - m - depth as i64;
    let mut g = Series::zero(Space::B).truncate(None, Some(yf));
    for (i, bbar) in ybar.coeffs.iter().enumerate() {
        let k = 1 - i as i64;
        if k == 0 || bbar.is_zero() {
            continue;
        }
        let prim = integrate_x(bbar).ok_or(Error::Obstruction(i))?;
        let bi = prim.scale(&rat::rat(-k, m)).in_space(Space::B)?;
        let pw = fb.power_to(Exp::new(1 - m - i as i64, m), None, Some(yf))?;
        g = g.checked_add(&bi.checked_mul(&pw)?)?;
    }
    let br = bracket(&fb, &g)?;
    if !br.agrees_with(&Series::one(Space::B)) {
        return Err(Error::PreconditionFailed("partner check [F, G] = 1 failed".into()));
    }
    Ok(g)
}

/// Both sides of `res_t(F dG/dt) = J res_t(u dv/dt)` after `x = u(t), y = v(t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pullback {
    pub j: Rat,
    pub lhs: Rat,
    pub rhs: Rat,
}

impl Pullback {
    pub fn verdict(&self) -> Verdict {
        let mut v = Verdict::new();
        v.check(
            "residue pullback",
            self.lhs == self.rhs,
            format!("lhs = {}, rhs = {} (J = {})", fmt_rat(&self.lhs), fmt_rat(&self.rhs), fmt_rat(&self.j)),
        );
        v
    }
}

/// `F(u, v)` correct for `t >= target`; `u`, `v` are x-only series in `t`.
fn pull_back(f: &Series, u: &Series, v: &Series, target: Exp) -> Result<Series> {
    let du = u.deg_x().ok_or(Error::NotInvertible)?;
    let dv = v.deg_x().ok_or(Error::NotInvertible)?;
    let power = |s: &Series, e: Exp, other: Exp| -> Result<Series> {
        if e.is_integer() && !e.is_negative() && s.is_exact() {
            s.pow(e.to_integer() as u32)
        } else {
            s.power_to(e, Some(target - other), None)
        }
    };
    let mut out = Series::zero(Space::A);
    for (&(a, b), c) in f.terms() {
        let ua = power(u, a, dv * Exp::from(b))?;
        let vb = power(v, Exp::from(b), du * a)?;
        out = out.checked_add(&ua.checked_mul(&vb)?.scale(c))?;
    }
    Ok(if out.is_exact() { out } else { out.truncate(Some(target), None) })
}

pub fn residue_pullback_check(f: &Series, g: &Series, u: &Series, v: &Series) -> Result<Pullback> {
    let f = f.in_space(Space::B)?;
    let g = g.in_space(Space::B)?;
    let (u, v) = (u.in_space(Space::A)?, v.in_space(Space::A)?);
    let jser = bracket(&f, &g)?;
    if !f.is_exact() || !g.is_exact() {
        return Err(Error::PreconditionFailed("F and G must be exact".into()));
    }
    let j = jser.coeff(Exp::zero(), 0);
    if !jser.agrees_with(&Series::constant(Space::B, j.clone())) {
        return Err(Error::PreconditionFailed("[F, G] is not a constant".into()));
    }
    let res_x = f.checked_mul(&g.partial(Var::X))?.x_slice(-Exp::one());
    if !res_x.is_zero() {
        return Err(Error::PreconditionFailed("res_x(F dG/dx) != 0".into()));
    }
    let minus_one = -Exp::one();
    let rhs = j.clone() * u.checked_mul(&v.partial(Var::X))?.coeff_checked(minus_one, 0)?;
    let (mut tf, mut tg) = (Exp::from(-2), Exp::from(-2));
    for _ in 0..12 {
        let fu = pull_back(&f, &u, &v, tf)?;
        let gu = pull_back(&g, &u, &v, tg)?.partial(Var::X);
        let prod = fu.checked_mul(&gu)?;
        if let Ok(lhs) = prod.coeff_checked(minus_one, 0) {
            return Ok(Pullback { j, lhs, rhs });
        }
        let top_f = fu.top_x().unwrap_or(Exp::zero());
        let top_g = gu.top_x().unwrap_or(Exp::zero());
        tf = tf.min(Exp::from(-2) - top_g) - 1;
        tg = tg.min(Exp::from(-1) - top_f) - 1;
    }
    Err(Error::DepthInsufficient("residue pullback did not reach t^-1".into()))
}
