//! Step 2: peel the tails of a normalized pair with `e^{ad Q_i}` and `z_c`,
//! read off `H = σ(x)`, `K = σ(y)`, split them into α-type components and
//! solve for `Q_ν`.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::poisson::{bracket, exp_ad_to, AutoLog, AutoStep};
use crate::poly::UPoly;
use crate::rat::{fmt_exp, fmt_rat, int, Exp, Rat};
use crate::reduction::{support_polygon, NormalizedPair};
use crate::series::{Series, Space, Var};
use crate::verdict::Verdict;

/// What one peel step removed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeelRecord {
    pub i: u64,
    /// Generator of `e^{ad Q_i}`; zero when the level was already clean.
    pub q: Series,
    /// `c` of `z_c: y -> y - c/x`, only at `i = N`.
    pub zc: Option<Rat>,
    pub h_bar: UPoly,
    pub k_bar: UPoly,
}

impl PeelRecord {
    pub fn steps(&self) -> Vec<AutoStep> {
        let mut out = Vec::new();
        if !self.q.is_zero() {
            out.push(AutoStep::ExpAd { h: self.q.clone() });
        }
        if let Some(c) = self.zc.as_ref().filter(|c| !c.is_zero()) {
            out.push(AutoStep::Zc { c: c.clone() });
        }
        out
    }
}

fn xfloors(pair: &NormalizedPair, depth: u64) -> (Exp, Exp) {
    let d = Exp::new(depth as i64, pair.N as i64);
    (pair.a_f() - d, pair.a_g() - d)
}

fn poly_series(p: &UPoly, a: Exp) -> Series {
    let terms = p.coeffs().iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(j, c)| ((a, j as i64), c.clone()));
    Series::from_terms(Space::P, terms).expect("polynomial terms fit P")
}

fn integrate(p: &UPoly) -> UPoly {
    let mut c = vec![Rat::zero()];
    c.extend(p.coeffs().iter().enumerate().map(|(j, v)| v / int(j as i64 + 1)));
    UPoly::new(c)
}

/// Removes the level-`i` tail (`x^{-i/N}` relative to the leading parts) of
/// the pair, which must be clean below `i`. Series are kept to `depth`
/// levels.
pub fn peel_step(pair: &NormalizedPair, i: u64, depth: u64) -> Result<(PeelRecord, NormalizedPair)> {
    for j in 1..i {
        if !pair.f_level(j)?.is_zero() || !pair.g_level(j)?.is_zero() {
            return Err(Error::LevelNotClean(j as usize));
        }
    }
    let (m, n, big_n) = (pair.m, pair.n, pair.N);
    let (f, g, jj) = (&pair.f, &pair.g, &pair.j);
    let fi = pair.f_level(i)?;
    let gi = pair.g_level(i)?;
    let mn = int(m + n);
    let (q, zc, h_bar, k_bar) = if i != big_n {
        let h_bar = fi.mul(&g.deriv()).sub(&f.deriv().mul(&gi)).scale(&jj.recip());
        let k_bar = f.mul(&gi).scale(&int(m)).sub(&fi.mul(g).scale(&int(n))).scale(&(&mn * jj).recip());
        let ident = h_bar.scale(&(Rat::one() - Rat::new(int(i as i64).to_integer(), int(big_n as i64).to_integer()))).add(&k_bar.deriv());
        if !ident.is_zero() {
            return Err(Error::PreconditionFailed(format!("(1 - i/N) h_bar + k_bar' != 0 at level {i}")));
        }
        let coef = int(-(big_n as i64)) / int(big_n as i64 - i as i64);
        let q = poly_series(&k_bar.scale(&coef), Exp::one() - Exp::new(i as i64, big_n as i64));
        (q, None, h_bar, k_bar)
    } else {
        let lhs = f.mul(&gi).scale(&int(m)).sub(&fi.mul(g).scale(&int(n)));
        if lhs.degree() > 0 {
            return Err(Error::PreconditionFailed(format!("m f g_N - n f_N g is not constant at level {i}")));
        }
        let c = lhs.coeff(0) / (&mn * jj);
        let r = gi.sub(&g.deriv().scale(&c));
        let k_tilde = r
            .div_exact(g)
            .ok_or_else(|| Error::PreconditionFailed("g does not divide g_N - c g'; f and g would share a factor".into()))?
            .scale(&(&mn / int(n)));
        let check = fi.sub(&f.deriv().scale(&c)).sub(&f.mul(&k_tilde).scale(&(int(m) / &mn)));
        if !check.is_zero() {
            return Err(Error::PreconditionFailed("f_N - c f' != (m/(m+n)) f k~".into()));
        }
        let q = poly_series(&integrate(&k_tilde), Exp::zero());
        (q, Some(c), UPoly::constant(Rat::zero()), k_tilde)
    };
    let rec = PeelRecord { i, q, zc, h_bar, k_bar };
    let (xf, xg) = xfloors(pair, depth);
    let mut big_f = pair.F.truncate(Some(xf), None);
    let mut big_g = pair.G.truncate(Some(xg), None);
    for step in rec.steps() {
        (big_f, big_g) = match &step {
            AutoStep::ExpAd { h } => (exp_ad_to(h, &big_f, Some(xf))?, exp_ad_to(h, &big_g, Some(xg))?),
            other => (other.apply(&big_f, 0)?.truncate(Some(xf), None), other.apply(&big_g, 0)?.truncate(Some(xg), None)),
        };
    }
    let next = NormalizedPair { F: big_f, G: big_g, ..pair.clone() };
    if !next.f_level(i)?.is_zero() || !next.g_level(i)?.is_zero() {
        return Err(Error::LevelNotClean(i as usize));
    }
    Ok((rec, next))
}

#[allow(non_snake_case)]
#[derive(Clone, Debug)]
pub struct HKResult {
    pub H: Series,
    pub K: Series,
    pub log: AutoLog,
    pub depth: u64,
    pub N: u64,
    pub records: Vec<PeelRecord>,
    /// `γ` of the degree bounds on `Q_i, f_i, g_i`, known when the input
    /// tails are finite and `depth >= N + M1 + M2`.
    pub gamma_bound: Option<Exp>,
    /// Leading degree of `F`: the edge above the vertical one has slope
    /// `-1/α̇`.
    pub alpha_dot: Option<Exp>,
    pub verdict: Verdict,
}

impl HKResult {
    /// A result built from given `H`, `K` with no peel history.
    #[allow(non_snake_case)]
    pub fn planted(H: Series, K: Series, N: u64, depth: u64) -> HKResult {
        HKResult {
            H,
            K,
            log: AutoLog::new(),
            depth,
            N,
            records: vec![],
            gamma_bound: None,
            alpha_dot: None,
            verdict: Verdict::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "H": serde_json::to_value(&self.H).expect("series serializes"),
            "K": serde_json::to_value(&self.K).expect("series serializes"),
            "autoLog": serde_json::to_value(&self.log).expect("log serializes"),
            "depth": self.depth,
            "gammaBound": self.gamma_bound.map(fmt_exp),
            "alphaDot": self.alpha_dot.map(fmt_exp),
            "verdict": serde_json::to_value(&self.verdict).expect("verdict serializes"),
        })
    }
}

/// Applies the inverse of `log` to `p`, last step first, keeping `x >= xf`.
pub fn replay_inverse(log: &AutoLog, p: &Series, xf: Exp) -> Result<Series> {
    let mut acc = p.truncate(Some(xf), None);
    for step in log.steps.iter().rev() {
        acc = match step.inverse() {
            AutoStep::ExpAd { h } => exp_ad_to(&h, &acc, Some(xf))?,
            other => other.apply(&acc, 0)?.truncate(Some(xf), None),
        };
    }
    Ok(acc)
}

/// `H^{a} f(K)` kept to `x >= xf`.
#[allow(non_snake_case)]
pub fn hk_image(H: &Series, K: &Series, a: Exp, f: &UPoly, xf: Exp) -> Result<Series> {
    let ha = H.power_to(a, Some(xf), None)?;
    let fk = f.to_series(Space::P).compose_y(K)?;
    Ok(ha.checked_mul(&fk)?.truncate(Some(xf), None))
}

fn level_degree(s: &Series, a: Exp, i: u64, n: u64) -> Option<i64> {
    s.x_slice(a - Exp::new(i as i64, n as i64)).deg_y()
}

/// Minimal `γ` with `deg Q_i <= 1 + iγ`, `deg f_i <= m + iγ`,
/// `deg g_i <= n + iγ` over the given levels.
fn gamma_over(pair: &NormalizedPair, records: &[PeelRecord], upto: u64) -> Option<Exp> {
    let mut best: Option<Exp> = None;
    let mut see = |d: Option<i64>, base: i64, i: u64| {
        if let Some(d) = d {
            let r = Exp::new(d - base, i as i64);
            best = Some(best.map_or(r, |b: Exp| b.max(r)));
        }
    };
    for i in 1..=upto {
        see(level_degree(&pair.F, pair.a_f(), i, pair.N), pair.m, i);
        see(level_degree(&pair.G, pair.a_g(), i, pair.N), pair.n, i);
        if let Some(r) = records.get(i as usize - 1) {
            see(r.q.deg_y(), 1, i);
        }
    }
    best
}

/// Leading degree `α̇` of `F`: the edge of `Supp F` leaving the top of the
/// vertical edge upward has slope `-1/α̇`.
pub fn leading_degree(pair: &NormalizedPair) -> Option<Exp> {
    let poly = support_polygon(&pair.F).ok()?;
    let z = (pair.a_f(), pair.m);
    let e = poly.edges.iter().find(|e| e.from == z && e.to.1 > z.1)?;
    let (dx, dy) = (e.to.0 - z.0, Exp::from(e.to.1 - z.1));
    (dx < Exp::zero()).then(|| -dx / dy)
}

/// Peels levels `1..=depth` and returns `H = σ(x)`, `K = σ(y)` with the
/// checks `[H, K] = 1`, `F = H^{m/(m+n)} f(K)`, `G = H^{n/(m+n)} g(K)`.
pub fn normalize_to_hk(pair: &NormalizedPair, depth: u64) -> Result<HKResult> {
    let (xf, xg) = xfloors(pair, depth);
    let nn = pair.N;
    let dn = Exp::new(depth as i64, nn as i64);
    let mut cur = NormalizedPair { F: pair.F.truncate(Some(xf), None), G: pair.G.truncate(Some(xg), None), ..pair.clone() };
    let mut records = Vec::new();
    let mut log = AutoLog::new();
    let mut verdict = Verdict::new();
    let mut stage_degrees: Vec<(Vec<Option<i64>>, Vec<Option<i64>>)> = Vec::new();
    let jconst = Series::constant(Space::P, pair.j.clone());
    for i in 1..=depth {
        let (rec, next) = peel_step(&cur, i, depth)?;
        log.steps.extend(rec.steps());
        records.push(rec);
        cur = next;
        let br = bracket(&cur.F, &cur.G)?;
        verdict.check(format!("[F,G] = J after step {i}"), br.agrees_with(&jconst), format!("{} residual terms", br.checked_sub(&jconst)?.len()));
        stage_degrees.push((
            (0..=depth).map(|j| level_degree(&cur.F, pair.a_f(), j, nn)).collect(),
            (0..=depth).map(|j| level_degree(&cur.G, pair.a_g(), j, nn)).collect(),
        ));
    }
    let x = Series::x(Space::P);
    let y = Series::y(Space::P);
    let h = replay_inverse(&log, &x, Exp::one() - dn)?;
    let k = replay_inverse(&log, &y, -dn)?;
    let one = Series::one(Space::P);
    let hk = bracket(&h, &k)?;
    verdict.check("[H,K] = 1", hk.agrees_with(&one), format!("{} residual terms", hk.checked_sub(&one)?.len()));
    let fimg = hk_image(&h, &k, pair.a_f(), &pair.f, xf)?;
    let gimg = hk_image(&h, &k, pair.a_g(), &pair.g, xg)?;
    let fres = fimg.checked_sub(&pair.F.truncate(Some(xf), None))?;
    let gres = gimg.checked_sub(&pair.G.truncate(Some(xg), None))?;
    verdict.check("F = H^{m/(m+n)} f(K)", fres.is_zero(), format!("{} residual terms", fres.len()));
    verdict.check("G = H^{n/(m+n)} g(K)", gres.is_zero(), format!("{} residual terms", gres.len()));
    let m_tail = pair.tail_depth();
    let gamma_bound = (pair.F.is_exact() && pair.G.is_exact() && depth >= nn + 2 * m_tail)
        .then(|| gamma_over(pair, &records, nn + 2 * m_tail))
        .flatten();
    if let Some(gm) = gamma_bound {
        let ok = stage_degrees.iter().all(|(fd, gd)| {
            (1..=depth as usize).all(|j| {
                let lim = |base: i64| Exp::from(base) + Exp::from(j as i64) * gm;
                fd[j].is_none_or(|d| Exp::from(d) <= lim(pair.m)) && gd[j].is_none_or(|d| Exp::from(d) <= lim(pair.n))
            })
        }) && records.iter().all(|r| r.q.deg_y().is_none_or(|d| Exp::from(d) <= Exp::one() + Exp::from(r.i as i64) * gm));
        verdict.check("degree bounds deg f_j <= m + jγ, deg g_j <= n + jγ, deg Q_i <= 1 + iγ", ok, format!("γ = {}", fmt_exp(gm)));
    }
    Ok(HKResult { H: h, K: k, log, depth, N: nn, records, gamma_bound, alpha_dot: leading_degree(pair), verdict })
}

#[derive(Clone, Debug)]
pub struct AlphaDecomposition {
    pub alpha: Exp,
    pub beta: u64,
    pub gamma: Exp,
    pub components_h: BTreeMap<Exp, Series>,
    pub components_k: BTreeMap<Exp, Series>,
    pub alpha_dot: Option<Exp>,
    pub verdict: Verdict,
}

impl AlphaDecomposition {
    /// `ν0 = 1 + 1/α`.
    pub fn nu0(&self) -> Exp {
        Exp::one() + self.alpha.recip()
    }

    fn get(map: &BTreeMap<Exp, Series>, i: Exp, like: &Series) -> Series {
        map.get(&i).cloned().unwrap_or_else(|| Series::zero(Space::P).truncate(like.x_floor(), None))
    }

    pub fn h(&self, i: Exp) -> Series {
        Self::get(&self.components_h, i, &self.components_h[&Exp::zero()])
    }

    pub fn k(&self, i: Exp) -> Series {
        Self::get(&self.components_k, i, &self.components_k[&Exp::zero()])
    }

    /// Smallest positive index with a nonzero component.
    pub fn first_index(&self) -> Option<Exp> {
        self.components_h.keys().chain(self.components_k.keys()).copied().filter(|i| *i > Exp::zero()).min()
    }

    pub fn to_json(&self) -> Value {
        let comp = |m: &BTreeMap<Exp, Series>| {
            m.iter().map(|(k, v)| (fmt_exp(*k), serde_json::to_value(v).expect("series serializes"))).collect::<serde_json::Map<_, _>>()
        };
        json!({
            "alpha": fmt_exp(self.alpha),
            "beta": self.beta,
            "gamma": fmt_exp(self.gamma),
            "nu0": fmt_exp(self.nu0()),
            "alphaDot": self.alpha_dot.map(fmt_exp),
            "componentsH": comp(&self.components_h),
            "componentsK": comp(&self.components_k),
            "verdict": serde_json::to_value(&self.verdict).expect("verdict serializes"),
        })
    }
}

/// Finds the leading degree `α` of `H`, `K` and splits both into α-type
/// components `H<i> = x y^{-i} Σ h_ij x^{-jα} y^j`, `K<i> = y^{1-i} Σ k_ij x^{-jα} y^j`.
pub fn alpha_decompose(hk: &HKResult) -> Result<AlphaDecomposition> {
    let nn = Exp::from(hk.N as i64);
    let mut observed: Option<Exp> = None;
    let mut see = |r: Exp| observed = Some(observed.map_or(r, |o: Exp| o.max(r)));
    for (&(a, b), _) in hk.H.terms() {
        let i = (Exp::one() - a) * nn;
        if i > Exp::zero() {
            see(Exp::from(b) / i);
        }
    }
    for (&(a, b), _) in hk.K.terms() {
        let i = -a * nn;
        if i > Exp::zero() {
            see(Exp::from(b - 1) / i);
        }
    }
    let observed = observed.ok_or(Error::NoTail)?;
    let gamma = match hk.gamma_bound {
        Some(g) if observed == g => g,
        Some(g) if observed < g => {
            return Err(Error::DepthInsufficient(format!("γ in [{}, {}]", fmt_exp(observed), fmt_exp(g))));
        }
        Some(g) => return Err(Error::PreconditionFailed(format!("observed γ {} exceeds the bound {}", fmt_exp(observed), fmt_exp(g)))),
        None if hk.H.is_exact() && hk.K.is_exact() => observed,
        None => return Err(Error::DepthInsufficient(format!("γ in [{}, ∞)", fmt_exp(observed)))),
    };
    if gamma <= Exp::zero() {
        return Err(Error::PreconditionFailed(format!("γ = {} is not positive", fmt_exp(gamma))));
    }
    let alpha = (gamma * nn).recip();
    let mut components_h: BTreeMap<Exp, Series> = BTreeMap::new();
    let mut components_k: BTreeMap<Exp, Series> = BTreeMap::new();
    let mut beta = 1u64;
    let mut index = |a: Exp, b: i64, is_h: bool| -> Result<Exp> {
        let (j, i) = if is_h {
            let j = (Exp::one() - a) / alpha;
            (j, j - Exp::from(b))
        } else {
            let j = -a / alpha;
            (j, Exp::one() + j - Exp::from(b))
        };
        if i < Exp::zero() || j < Exp::zero() {
            return Err(Error::PreconditionFailed(format!("term x^{} y^{b} lies outside the component shape", fmt_exp(a))));
        }
        beta = beta.lcm(&(*i.denom() as u64));
        Ok(i)
    };
    for (src, dst, is_h) in [(&hk.H, &mut components_h, true), (&hk.K, &mut components_k, false)] {
        let mut keys = std::collections::BTreeSet::new();
        for (&(a, b), _) in src.terms() {
            keys.insert(index(a, b, is_h)?);
        }
        keys.insert(Exp::zero());
        for i in keys {
            let part = src.filter(|(a, b)| {
                let j = if is_h { (Exp::one() - a) / alpha } else { -a / alpha };
                let ii = if is_h { j - Exp::from(b) } else { Exp::one() + j - Exp::from(b) };
                ii == i
            });
            dst.insert(i, part);
        }
    }
    let mut verdict = Verdict::new();
    verdict.check("k_10 = 0", hk.K.coeff(Exp::zero(), 0).is_zero(), "constant term of K");
    let h0 = &components_h[&Exp::zero()];
    let k0 = &components_k[&Exp::zero()];
    let lead_tail = h0.terms().any(|(t, _)| t.1 >= 1) || k0.terms().any(|(t, _)| t.1 >= 2);
    verdict.check("some h_0j or k_0j with j >= 1 is nonzero", lead_tail, "");
    if let Some(ad) = hk.alpha_dot {
        verdict.check("α <= α̇", alpha <= ad, format!("α = {}, α̇ = {}", fmt_exp(alpha), fmt_exp(ad)));
    }
    Ok(AlphaDecomposition { alpha, beta, gamma, components_h, components_k, alpha_dot: hk.alpha_dot, verdict })
}

#[derive(Clone, Debug)]
pub struct QNu {
    pub q: Series,
    /// `λ_ν` of `K<ν> - [Q, K<0>] = λ_ν H<0>^{(1-ν)α}` before absorption.
    pub lambda: Rat,
    pub absorbed: bool,
    pub verdict: Verdict,
}

fn x_times(s: &Series) -> Result<Series> {
    s.mul_monomial(&Rat::one(), Exp::one(), 0)
}

/// Solves `H<ν> = [Q_ν, H<0>]`, `K<ν> = [Q_ν, K<0>]` with `Q_ν` of the shape
/// `Σ q_νj x^{1-jα} y^{1+j-ν}`.
pub fn solve_q_nu(d: &AlphaDecomposition, nu: Exp) -> Result<QNu> {
    if nu <= Exp::zero() {
        return Err(Error::PreconditionFailed("ν must be positive".into()));
    }
    if d.first_index().is_some_and(|f| f < nu) {
        return Err(Error::PreconditionFailed(format!("a nonzero component precedes ν = {}", fmt_exp(nu))));
    }
    let (h0, k0, hn, kn) = (d.h(Exp::zero()), d.k(Exp::zero()), d.h(nu), d.k(nu));
    let xf = [hn.x_floor(), kn.x_floor(), h0.x_floor()].into_iter().flatten().max();
    let zero = Series::zero(Space::P).truncate(xf, None);
    let mut verdict = Verdict::new();
    if hn.is_zero() && kn.is_zero() {
        verdict.check("zero components", true, "");
        return Ok(QNu { q: zero, lambda: Rat::zero(), absorbed: false, verdict });
    }
    let mut q = zero.clone();
    for _ in 0..crate::poisson::AD_ITERATION_CAP {
        let r = hn.checked_sub(&bracket(&q, &h0)?)?.truncate(xf, None);
        let Some(top) = r.deg_x() else { break };
        let mut add = Vec::new();
        for (&(a, b), c) in r.terms().filter(|(t, _)| t.0 == top) {
            add.push(((a, b + 1), -c / int(b + 1)));
        }
        q = q.checked_add(&Series::from_terms(Space::P, add)?.truncate(xf, None))?;
    }
    let kbar = kn.checked_sub(&bracket(&q, &k0)?)?;
    let a_nu = (Exp::one() - nu) * d.alpha;
    let lambda = kbar.coeff(a_nu, 0);
    let s = Exp::one() + a_nu;
    let mut absorbed = false;
    if !lambda.is_zero() {
        if nu == d.nu0() {
            return Err(Error::NormalizationAmbiguous(format!("Coeff(K, x^-1) = {}; shift y -> y - ({}) x^-1 first", fmt_rat(&lambda), fmt_rat(&lambda))));
        }
        if nu == Exp::one() {
            return Err(Error::PreconditionFailed("K<1> - [Q, K<0>] is a nonzero constant; K has a constant term".into()));
        }
        let corr = h0.power_to(s, xf, None)?.scale(&(&lambda / crate::rat::exp_to_rat(s)));
        let expect = h0.power_to(a_nu, xf.map(|f| f - Exp::one()), None)?.scale(&lambda);
        verdict.check("K-bar = λ H<0>^{(1-ν)α}", kbar.agrees_with(&expect), "");
        q = q.checked_add(&corr)?;
        absorbed = true;
    } else {
        verdict.check("K-bar = 0", kbar.is_zero(), format!("{} residual terms", kbar.len()));
    }
    let rh = bracket(&q, &h0)?.checked_sub(&hn)?;
    let rk = bracket(&q, &k0)?.checked_sub(&kn)?;
    verdict.check("H<ν> = [Q_ν, H<0>]", rh.is_zero(), format!("{} residual terms", rh.len()));
    verdict.check("K<ν> = [Q_ν, K<0>]", rk.is_zero(), format!("{} residual terms", rk.len()));
    let lhs = q.partial(Var::Y).mul_monomial(&crate::rat::exp_to_rat(d.alpha), Exp::zero(), 1)?;
    let rhs = q.scale(&crate::rat::exp_to_rat(s)).checked_sub(&x_times(&q.partial(Var::X))?)?;
    verdict.check("α y ∂_y Q = (1 + α(1-ν)) Q - x ∂_x Q", lhs.agrees_with(&rhs), "");
    verdict.check("deg_x Q_ν < 1", q.deg_x().is_none_or(|a| a < Exp::one()), "");
    Ok(QNu { q, lambda, absorbed, verdict })
}

/// `(1-ν) H<0> K<ν> + H<ν> K<0>`.
pub fn r1(d: &AlphaDecomposition, nu: Exp) -> Result<Series> {
    let a = d.h(Exp::zero()).checked_mul(&d.k(nu))?.scale(&crate::rat::exp_to_rat(Exp::one() - nu));
    a.checked_add(&d.h(nu).checked_mul(&d.k(Exp::zero()))?)
}

/// `H ∂_x K = (m F ∂_x G - n G ∂_x F)/((m+n)J)` and the same with `∂_y`,
/// both to the floors of depth `depth`, with no negative y-powers on the
/// right.
#[allow(non_snake_case)]
pub fn check_polynomiality(pair: &NormalizedPair, H: &Series, K: &Series, depth: u64) -> Result<Verdict> {
    let (xf, xg) = xfloors(pair, depth);
    let F = pair.F.truncate(Some(xf), None);
    let G = pair.G.truncate(Some(xg), None);
    let scale = (int(pair.m + pair.n) * &pair.j).recip();
    let mut v = Verdict::new();
    for (name, var) in [("x", Var::X), ("y", Var::Y)] {
        let lhs = H.checked_mul(&K.partial(var))?;
        let rhs = F
            .checked_mul(&G.partial(var))?
            .scale(&int(pair.m))
            .checked_sub(&G.checked_mul(&F.partial(var))?.scale(&int(pair.n)))?
            .scale(&scale);
        let res = lhs.checked_sub(&rhs)?;
        v.check(format!("H ∂_{name}K = (mF ∂_{name}G - nG ∂_{name}F)/((m+n)J)"), res.is_zero(), format!("residual {} terms", res.len()));
        v.check(format!("RHS for ∂_{name} has no negative y-powers"), rhs.min_y().is_none_or(|b| b >= 0), "");
    }
    Ok(v)
}

/// Checks `H<0>^{m/(m+n)} K<0>^m = F<0>` (α-type 0-th component) when
/// `α = α̇`; otherwise the scalar convention of the 0-th components is not
/// pinned.
pub fn check_zero_components(pair: &NormalizedPair, d: &AlphaDecomposition) -> Result<Verdict> {
    match d.alpha_dot {
        Some(ad) if ad == d.alpha => {}
        other => {
            return Err(Error::UnnormalizedScalar(format!(
                "α = {}, α̇ = {}",
                fmt_exp(d.alpha),
                other.map_or("none".into(), fmt_exp)
            )))
        }
    }
    let h0 = d.h(Exp::zero());
    let k0 = d.k(Exp::zero());
    let xf = h0.x_floor().map(|f| f - Exp::one() + pair.a_f());
    let lhs = h0.power_to(pair.a_f(), xf, None)?.checked_mul(&k0.pow(pair.m as u32)?)?;
    let f0 = pair.F.filter(|(a, b)| (pair.a_f() - a) / d.alpha == Exp::from(b - pair.m)).truncate(xf, None);
    let mut v = Verdict::new();
    let res = lhs.checked_sub(&f0)?;
    v.check("H<0>^{m/(m+n)} K<0>^m = F<0>", res.is_zero(), format!("{} residual terms", res.len()));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{exp, rat};

    fn base() -> NormalizedPair {
        let f = Series::from_ints(Space::P, &[(1, 2, 5, 2), (1, 2, 5, 0)]);
        let g = Series::from_terms(Space::P, [((exp(3, 5), 3), int(1)), ((exp(3, 5), 1), rat(3, 2))]).unwrap();
        NormalizedPair::from_pair(&f, &g).unwrap()
    }

    fn perturbed(gen: &Series, depth: u64) -> NormalizedPair {
        let b = base();
        let (xf, xg) = xfloors(&b, depth);
        let f = exp_ad_to(gen, &b.F, Some(xf)).unwrap();
        let g = exp_ad_to(gen, &b.G, Some(xg)).unwrap();
        NormalizedPair::from_pair(&f, &g).unwrap()
    }

    #[test]
    fn tail_free_peel_is_trivial() {
        let b = base();
        let (rec, next) = peel_step(&b, 1, 6).unwrap();
        assert!(rec.q.is_zero());
        assert!(rec.zc.is_none());
        assert!(next.F.agrees_with(&b.F));
        let hk = normalize_to_hk(&b, 6).unwrap();
        assert!(hk.verdict.pass());
        assert_eq!(hk.H, Series::x(Space::P).truncate(Some(exp(-1, 5)), None));
        assert_eq!(hk.K, Series::y(Space::P).truncate(Some(exp(-6, 5)), None));
        assert!(hk.log.steps.is_empty());
    }

    #[test]
    fn peel_recovers_level_one_generator() {
        let gen = Series::monomial(Space::P, int(1), exp(4, 5), 1);
        let pair = perturbed(&gen, 8);
        assert!(!pair.f_level(1).unwrap().is_zero());
        let (rec, next) = peel_step(&pair, 1, 8).unwrap();
        assert!(next.f_level(1).unwrap().is_zero());
        assert!(next.g_level(1).unwrap().is_zero());
        assert_eq!(rec.q, Series::monomial(Space::P, int(-1), exp(4, 5), 1));
    }

    #[test]
    fn planted_zc_is_recovered() {
        let b = base();
        let plant = AutoStep::Zc { c: rat(-1, 2) };
        let pair = NormalizedPair::from_pair(&plant.apply(&b.F, 0).unwrap(), &plant.apply(&b.G, 0).unwrap()).unwrap();
        let hk = normalize_to_hk(&pair, 10).unwrap();
        assert!(hk.verdict.pass(), "{:?}", hk.verdict.failures().collect::<Vec<_>>());
        let rec = &hk.records[4];
        assert_eq!(rec.zc, Some(rat(1, 2)));
        assert!(rec.q.is_zero());
        assert_eq!(hk.K.coeff(-Exp::one(), 0), rat(1, 2));
        let expected_k = Series::from_terms(Space::P, [((Exp::zero(), 1), int(1)), ((-Exp::one(), 0), rat(1, 2))]).unwrap();
        assert!(hk.K.agrees_with(&expected_k));
    }

    #[test]
    fn perturbed_pair_round_trip() {
        let gen = Series::from_terms(
            Space::P,
            [((exp(4, 5), 2), int(1)), ((exp(3, 5), 1), rat(-1, 2)), ((exp(2, 5), 0), int(2)), ((Exp::zero(), 1), int(1))],
        )
        .unwrap();
        let pair = perturbed(&gen, 10);
        let hk = normalize_to_hk(&pair, 10).unwrap();
        assert!(hk.verdict.pass(), "{:?}", hk.verdict.failures().collect::<Vec<_>>());
        let v = check_polynomiality(&pair, &hk.H, &hk.K, 10).unwrap();
        assert!(v.pass(), "{:?}", v.failures().collect::<Vec<_>>());
        let bad_k = hk.K.checked_add(&Series::monomial(Space::P, int(1), exp(-1, 5), 2)).unwrap();
        assert!(!check_polynomiality(&pair, &hk.H, &bad_k, 10).unwrap().pass());
    }

    #[test]
    fn polynomiality_of_base_pair() {
        let b = base();
        let v = check_polynomiality(&b, &Series::x(Space::P), &Series::y(Space::P), 6).unwrap();
        assert!(v.pass());
    }

    #[test]
    fn level_not_clean() {
        let gen = Series::monomial(Space::P, int(1), exp(4, 5), 1);
        let pair = perturbed(&gen, 8);
        assert_eq!(peel_step(&pair, 2, 8).unwrap_err().code(), "LEVEL_NOT_CLEAN");
    }

    #[test]
    fn degenerate_decomposition() {
        let hk = HKResult::planted(Series::x(Space::P), Series::y(Space::P), 2, 4);
        assert_eq!(alpha_decompose(&hk).unwrap_err().code(), "NO_TAIL");
    }

    #[test]
    fn planted_alpha() {
        // H = x (1 + x^{-1/2} y), K = y
        let h = Series::from_terms(Space::P, [((Exp::one(), 0), int(1)), ((exp(1, 2), 1), int(1))]).unwrap();
        let hk = HKResult::planted(h.clone(), Series::y(Space::P), 2, 4);
        let d = alpha_decompose(&hk).unwrap();
        assert_eq!(d.alpha, exp(1, 2));
        assert_eq!(d.nu0(), Exp::from(3));
        let sum_h = d.components_h.values().fold(Series::zero(Space::P), |a, s| &a + s);
        let sum_k = d.components_k.values().fold(Series::zero(Space::P), |a, s| &a + s);
        assert_eq!(sum_h, h);
        assert_eq!(sum_k, Series::y(Space::P));
        assert_eq!(d.components_h.len(), 1);
    }

    /// `H<0>`, `K<0>` from `e^{ad P}` with `P = x^{1/2} y^2` (α = 1/2, N = 2).
    fn zero_components(xf: Exp) -> (Series, Series) {
        let p = Series::monomial(Space::P, int(1), exp(1, 2), 2);
        let h0 = exp_ad_to(&p, &Series::x(Space::P), Some(xf)).unwrap();
        let k0 = exp_ad_to(&p, &Series::y(Space::P), Some(xf - Exp::one())).unwrap();
        (h0, k0)
    }

    fn decomposition_with(q: &Series, nu: Exp, xf: Exp) -> AlphaDecomposition {
        let (h0, k0) = zero_components(xf);
        let hn = bracket(q, &h0).unwrap().truncate(Some(xf), None);
        let kn = bracket(q, &k0).unwrap().truncate(Some(xf - Exp::one()), None);
        AlphaDecomposition {
            alpha: exp(1, 2),
            beta: 1,
            gamma: Exp::one(),
            components_h: [(Exp::zero(), h0), (nu, hn)].into_iter().collect(),
            components_k: [(Exp::zero(), k0), (nu, kn)].into_iter().collect(),
            alpha_dot: None,
            verdict: Verdict::new(),
        }
    }

    #[test]
    fn planted_q_nu_recovered() {
        let nu = Exp::from(2);
        let xf = Exp::from(-3);
        let q = Series::monomial(Space::P, int(1), Exp::zero(), 1);
        let d = decomposition_with(&q, nu, xf);
        let sol = solve_q_nu(&d, nu).unwrap();
        assert!(sol.verdict.pass(), "{:?}", sol.verdict.failures().collect::<Vec<_>>());
        assert!(!sol.absorbed);
        assert!(sol.q.agrees_with(&q));
    }

    #[test]
    fn absorbed_correction_term() {
        let nu = Exp::from(2);
        let xf = Exp::from(-3);
        let (h0, _) = zero_components(xf);
        let corr = h0.power_to(exp(1, 2), Some(xf), None).unwrap().scale(&int(3));
        let q = Series::monomial(Space::P, int(1), Exp::zero(), 1).checked_add(&corr).unwrap();
        let d = decomposition_with(&q, nu, xf);
        let sol = solve_q_nu(&d, nu).unwrap();
        assert!(sol.verdict.pass(), "{:?}", sol.verdict.failures().collect::<Vec<_>>());
        assert!(sol.absorbed);
        assert_eq!(sol.lambda, rat(3, 2));
        assert!(sol.q.agrees_with(&q));
    }

    #[test]
    fn zero_components_give_zero_q() {
        let xf = Exp::from(-3);
        let (h0, k0) = zero_components(xf);
        let d = AlphaDecomposition {
            alpha: exp(1, 2),
            beta: 1,
            gamma: Exp::one(),
            components_h: [(Exp::zero(), h0)].into_iter().collect(),
            components_k: [(Exp::zero(), k0)].into_iter().collect(),
            alpha_dot: None,
            verdict: Verdict::new(),
        };
        assert!(solve_q_nu(&d, Exp::one()).unwrap().q.is_zero());
        assert_eq!(check_zero_components(&base(), &d).unwrap_err().code(), "UNNORMALIZED_SCALAR");
    }
}
