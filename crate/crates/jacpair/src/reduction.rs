//! Step 1: edge relations, vertex descent, straightening, and arrival at
//! the normalized pair `F = x^{m/(m+n)}(f + ...)`, `G = x^{n/(m+n)}(g + ...)`.

use num_integer::Integer;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expansion::jacobian_constant;
use crate::newton::{hull, support, Edge, NewtonPolygon, Pt};
use crate::poisson::{bracket, AutoLog, AutoStep};
use crate::poly::UPoly;
use crate::rat::{fmt_exp, fmt_rat, int, Exp, Rat};
use crate::series::{Series, Space};

pub const DEFAULT_MAX_STEPS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeRelation {
    /// `G_L^b = scale * F_L^a` with `exponent = a/b = n/m`.
    Power { exponent: Exp, scale: Rat },
    /// `[F_L, G_L] = j`.
    Qj { j: Rat },
}

impl EdgeRelation {
    pub fn to_json(&self) -> Value {
        match self {
            EdgeRelation::Power { exponent, scale } => {
                json!({"case": "POWER_RELATION", "exponent": fmt_exp(*exponent), "scale": fmt_rat(scale)})
            }
            EdgeRelation::Qj { j } => json!({"case": "QJ_RELATION", "J": fmt_rat(j)}),
        }
    }
}

/// Convex hull of `Supp F` alone; the descent edges are edges of this hull.
pub fn support_polygon(f: &Series) -> Result<NewtonPolygon> {
    if !f.is_exact() {
        return Err(Error::InfiniteSupport);
    }
    if f.is_zero() {
        return Err(Error::PreconditionFailed("zero series".into()));
    }
    Ok(hull(support(f)))
}

fn edge_terms(f: &Series, e: &Edge) -> Series {
    f.filter(|m| e.contains(m))
}

fn pt_json(p: Pt) -> Value {
    json!([fmt_exp(p.0), p.1])
}

/// x-step of the edge below `v`: row `m - j` of the edge sits at
/// `x^{m0 + p j}`.
fn edge_step(v: Pt, e: &Edge) -> Exp {
    let low = e.ends_by_height().0;
    (low.0 - v.0) / Exp::from(v.1 - low.1)
}

/// Decides whether the parts of `F` and `G` on corresponding edges are
/// related by a power or form a quasi-Jacobi pair. `edge` is an edge of the
/// polygon of `F`; the partner edge of `G` has the same slope and an upper
/// vertex on the same ray.
pub fn test_edge_relation(f: &Series, g: &Series, edge: &Edge) -> Result<EdgeRelation> {
    let fl = edge_terms(f, edge);
    let top = edge.ends_by_height().1;
    let up = edge.to.1 > edge.from.1;
    let gpoly = support_polygon(g)?;
    let ge = gpoly
        .edges
        .iter()
        .find(|e| {
            let t = e.ends_by_height().1;
            e.slope == edge.slope && (e.to.1 > e.from.1) == up && t.1 > 0 && t.0 * Exp::from(top.1) == top.0 * Exp::from(t.1)
        })
        .ok_or_else(|| Error::NoRelation(format!("G has no edge of slope {} on the ray through the top vertex", edge.slope)))?;
    let gtop = ge.ends_by_height().1;
    let gl = edge_terms(g, ge);
    let exponent = Exp::new(gtop.1, top.1);
    let (a, b) = (*exponent.numer(), *exponent.denom());
    let lhs = gl.pow(b as u32)?;
    let rhs = fl.pow(a as u32)?;
    let lc_r = rhs.coeff(top.0 * Exp::from(a), top.1 * a);
    let scale = lhs.coeff(gtop.0 * Exp::from(b), gtop.1 * b) / &lc_r;
    let power_residual = lhs.checked_sub(&rhs.scale(&scale))?;
    if power_residual.is_zero() {
        return Ok(EdgeRelation::Power { exponent, scale });
    }
    let br = bracket(&fl, &gl)?;
    let j = br.coeff(Exp::zero(), 0);
    if !j.is_zero() && br.len() == 1 {
        return Ok(EdgeRelation::Qj { j });
    }
    Err(Error::NoRelation(format!("power residual has {} terms, bracket = {}", power_residual.len(), br)))
}

/// The shift a descent step would make, computed from `F` alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescentPlan {
    pub vertex: Pt,
    pub edge: Edge,
    /// Row `m - j` of the edge part sits at `x^{m0 + p j}`; `p = -ṗ/q̇`.
    pub p: Exp,
    /// Monic edge polynomial in `t = x^{-p} y`.
    pub phi: UPoly,
    /// `y -> y + alpha0 x^p`, absent when the lower vertex already has the
    /// maximal multiplicity.
    pub alpha0: Option<Rat>,
    pub single_factor: bool,
    pub multiplicity: i64,
    pub new_vertex: Pt,
}

impl DescentPlan {
    pub fn step(&self) -> Option<AutoStep> {
        self.alpha0.as_ref().map(|a| AutoStep::ShiftY { lambda: a.clone(), e: self.p })
    }
}

fn linear_power(alpha: &Rat, m: i64) -> UPoly {
    let lin = UPoly::new(vec![-alpha.clone(), Rat::one()]);
    (0..m).fold(UPoly::constant(Rat::one()), |acc, _| acc.mul(&lin))
}

/// Ordering of tied roots: `(numerator, denominator)` lexicographically.
fn root_key(r: &Rat) -> (num_bigint::BigInt, num_bigint::BigInt) {
    (r.numer().clone(), r.denom().clone())
}

/// Factors the edge polynomial below `vertex` and picks the shift.
pub fn plan_descent(f: &Series, vertex: Pt) -> Result<DescentPlan> {
    let poly = support_polygon(f)?;
    if !poly.vertices.contains(&vertex) {
        return Err(Error::VertexInvalid(format!("({}, {}) is not a vertex", fmt_exp(vertex.0), vertex.1)));
    }
    let (m0, m) = vertex;
    if !(m0 > Exp::zero() && m0 < Exp::from(m) && m >= 2) {
        return Err(Error::VertexInvalid(format!("need 0 < m0 < m and m >= 2, got ({}, {m})", fmt_exp(m0))));
    }
    let edge = poly.edge_below(vertex).ok_or_else(|| Error::VertexInvalid("no edge below the vertex".into()))?;
    let p = edge_step(vertex, &edge);
    if p > Exp::zero() {
        return Err(Error::VertexInvalid(format!("edge below leans right (p = {})", fmt_exp(p))));
    }
    let mut c = vec![Rat::zero(); m as usize + 1];
    for j in 0..=m {
        c[(m - j) as usize] = f.coeff(m0 + p * Exp::from(j), m - j);
    }
    let lead = c[m as usize].clone();
    let phi = UPoly::new(c).scale(&lead.recip());
    let z = (0..=m as usize).find(|&k| !phi.coeff(k).is_zero()).expect("lead is nonzero") as i64;
    if z == m {
        return Err(Error::VertexInvalid("edge part is a single monomial; no descent needed".into()));
    }
    let at_height = |h: i64| (m0 + p * Exp::from(m - h), h);
    if z == 0 {
        let alpha = -phi.coeff(m as usize - 1) / int(m);
        if phi == linear_power(&alpha, m) {
            return Ok(DescentPlan {
                vertex,
                edge,
                p,
                phi,
                alpha0: Some(alpha),
                single_factor: true,
                multiplicity: m,
                new_vertex: vertex,
            });
        }
    }
    let psi = UPoly::new(phi.coeffs()[z as usize..].to_vec());
    let sf = psi.squarefree();
    let top = (0..sf.len()).rev().find(|&k| sf[k].degree() > 0).map_or(0, |k| k as i64 + 1);
    let (alpha0, mult) = if z >= top {
        (None, z)
    } else {
        let mut roots = sf[top as usize - 1].rational_roots();
        if roots.is_empty() {
            return Err(Error::IrrationalRoot(format!("factor of multiplicity {top} of the edge polynomial has no rational root")));
        }
        roots.sort_by_key(root_key);
        (Some(roots[0].clone()), top)
    };
    Ok(DescentPlan { vertex, edge, p, phi, alpha0, single_factor: false, multiplicity: mult, new_vertex: at_height(mult) })
}

/// The vertex of `G` on the ray through `v` whose lower edge has step `p`.
pub fn partner_vertex(g: &Series, v: Pt, p: Exp) -> Result<Pt> {
    let poly = support_polygon(g)?;
    poly.vertices
        .iter()
        .copied()
        .find(|&w| {
            w.1 > 0
                && w.0 * Exp::from(v.1) == v.0 * Exp::from(w.1)
                && poly.edge_below(w).is_some_and(|e| edge_step(w, &e) == p)
        })
        .ok_or_else(|| Error::VertexInvalid(format!("G has no vertex matching ({}, {}) with edge step {}", fmt_exp(v.0), v.1, fmt_exp(p))))
}

/// `-(m0 + n0 - 1)/(m + n - 1)`; the edge step must exceed it strictly for a
/// descent and equals it at the end.
pub fn step_bound(v: Pt, w: Pt) -> Exp {
    -(v.0 + w.0 - Exp::one()) / Exp::from(v.1 + w.1 - 1)
}

/// `m0/m - (m - m0)/(m(m + n - 1))`.
pub fn termination_slope(m0: Exp, m: i64, n: i64) -> Exp {
    let mm = Exp::from(m);
    m0 / mm - (mm - m0) / (mm * Exp::from(m + n - 1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DescentKind {
    SingleFactorShift { alpha0: Rat },
    NewVertex { vertex: Pt, alpha0: Option<Rat> },
}

#[derive(Clone, Debug)]
pub struct Descent {
    pub kind: DescentKind,
    pub plan: DescentPlan,
    pub f: Series,
    pub g: Series,
    pub log: AutoLog,
}

/// One descent step at `vertex` of `F`.
pub fn descend_vertex(f: &Series, g: &Series, vertex: Pt) -> Result<Descent> {
    let plan = plan_descent(f, vertex)?;
    let w = partner_vertex(g, vertex, plan.p)?;
    let bound = step_bound(vertex, w);
    if plan.p <= bound {
        return Err(Error::VertexInvalid(format!("edge step {} is not above {}", fmt_exp(plan.p), fmt_exp(bound))));
    }
    let mut log = AutoLog::new();
    let (mut f2, mut g2) = (f.clone(), g.clone());
    if let Some(step) = plan.step() {
        f2 = step.apply(f, 0)?;
        g2 = step.apply(g, 0)?;
        log.push(step);
    }
    let kind = if plan.single_factor {
        DescentKind::SingleFactorShift { alpha0: plan.alpha0.clone().expect("single factor always shifts") }
    } else {
        let (m0, m) = plan.new_vertex;
        if !(m0 > Exp::zero() && m0 < Exp::from(m) && m < vertex.1) {
            return Err(Error::VertexInvalid(format!("new vertex ({}, {m}) breaks 0 < m0 < m < {}", fmt_exp(m0), vertex.1)));
        }
        if !support_polygon(&f2)?.vertices.contains(&plan.new_vertex) {
            return Err(Error::VertexInvalid(format!("({}, {m}) is not a vertex after the shift", fmt_exp(m0))));
        }
        DescentKind::NewVertex { vertex: plan.new_vertex, alpha0: plan.alpha0.clone() }
    };
    Ok(Descent { kind, plan, f: f2, g: g2, log })
}

/// `(x, y) -> (x^{q/(q-p)}, x^{-p/(q-p)} y)`: edges of slope `q/p` become
/// vertical.
pub fn straighten(f: &Series, g: &Series, p_hat: i64, q_hat: i64) -> Result<(Series, Series, AutoLog)> {
    if !(q_hat > p_hat && p_hat >= 0) {
        return Err(Error::PreconditionFailed(format!("straighten needs q > p >= 0, got p={p_hat}, q={q_hat}")));
    }
    let mut log = AutoLog::new();
    if p_hat == 0 {
        return Ok((f.clone(), g.clone(), log));
    }
    let step = AutoStep::Monomial { p: p_hat, q: q_hat };
    let f2 = step.apply(f, 0)?;
    let g2 = step.apply(g, 0)?;
    log.push(step);
    Ok((f2, g2, log))
}

/// Image of a point under the straightening map.
pub fn straighten_point(p_hat: i64, q_hat: i64, (a, b): Pt) -> Pt {
    ((Exp::from(q_hat) * a - Exp::from(p_hat * b)) / Exp::from(q_hat - p_hat), b)
}

/// `F = x^{m/(m+n)}(f + sum x^{-i/N} f_i)`, `G = x^{n/(m+n)}(g + ...)`.
#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedPair {
    pub F: Series,
    pub G: Series,
    pub m: i64,
    pub n: i64,
    pub f: UPoly,
    pub g: UPoly,
    pub j: Rat,
    pub N: u64,
}

fn slice_poly(s: &Series, a: Exp) -> Result<UPoly> {
    if s.x_floor().is_some_and(|fl| a < fl) {
        return Err(Error::BelowFloor { x: fmt_exp(a), y: "*".into() });
    }
    UPoly::from_series(&s.x_slice(a)).ok_or_else(|| Error::NotPolynomial(format!("x^{} slice", fmt_exp(a))))
}

/// `(m/(m+n)) f g' - (n/(m+n)) f' g`.
pub fn wronskian(m: i64, n: i64, f: &UPoly, g: &UPoly) -> UPoly {
    let s = int(m + n);
    f.mul(&g.deriv()).scale(&(int(m) / &s)).sub(&f.deriv().mul(g).scale(&(int(n) / &s)))
}

#[allow(non_snake_case)]
impl NormalizedPair {
    /// Validates the normalized shape and reads off `m, n, f, g, J`.
    pub fn from_pair(F: &Series, G: &Series) -> Result<NormalizedPair> {
        let F = F.in_space(Space::P)?;
        let G = G.in_space(Space::P)?;
        let af = F.deg_x().ok_or_else(|| Error::PreconditionFailed("F is zero".into()))?;
        let ag = G.deg_x().ok_or_else(|| Error::PreconditionFailed("G is zero".into()))?;
        let f = slice_poly(&F, af)?;
        let g = slice_poly(&G, ag)?;
        if !f.lead().is_one() || !g.lead().is_one() {
            return Err(Error::Nonmonic);
        }
        let (m, n) = (f.degree(), g.degree());
        if !(2 <= m && m < n && n % m != 0) {
            return Err(Error::PreconditionFailed(format!("need 2 <= m < n with m not dividing n, got m={m}, n={n}")));
        }
        if !f.coeff(m as usize - 1).is_zero() {
            return Err(Error::PreconditionFailed("c1 != 0".into()));
        }
        if af != Exp::new(m, m + n) || ag != Exp::new(n, m + n) {
            return Err(Error::PreconditionFailed(format!("leading x-degrees {}, {} do not match m={m}, n={n}", fmt_exp(af), fmt_exp(ag))));
        }
        let w = wronskian(m, n, &f, &g);
        if w.degree() != 0 || w.is_zero() {
            return Err(Error::NotQjPair);
        }
        if f.gcd(&g).degree() != 0 || !f.is_squarefree() || !g.is_squarefree() {
            return Err(Error::PreconditionFailed("f and g share a factor or are not square-free".into()));
        }
        let N = [F.N(), G.N(), (m + n) as u64].into_iter().fold(1u64, |a, b| a.lcm(&b));
        Ok(NormalizedPair { j: w.lead(), F, G, m, n, f, g, N })
    }

    pub fn a_f(&self) -> Exp {
        Exp::new(self.m, self.m + self.n)
    }

    pub fn a_g(&self) -> Exp {
        Exp::new(self.n, self.m + self.n)
    }

    /// `f_i`, the coefficient of `x^{m/(m+n) - i/N}` in `F`.
    pub fn f_level(&self, i: u64) -> Result<UPoly> {
        slice_poly(&self.F, self.a_f() - Exp::new(i as i64, self.N as i64))
    }

    pub fn g_level(&self, i: u64) -> Result<UPoly> {
        slice_poly(&self.G, self.a_g() - Exp::new(i as i64, self.N as i64))
    }

    /// Largest level carrying a stored nonzero tail term.
    pub fn tail_depth(&self) -> u64 {
        let n = Exp::from(self.N as i64);
        let lvl = |s: &Series, a: Exp| s.terms().map(|(t, _)| ((a - t.0) * n).to_integer()).max().unwrap_or(0);
        lvl(&self.F, self.a_f()).max(lvl(&self.G, self.a_g())).max(0) as u64
    }

    pub fn to_json(&self) -> Value {
        json!({
            "F": serde_json::to_value(&self.F).expect("series serializes"),
            "G": serde_json::to_value(&self.G).expect("series serializes"),
            "m": self.m,
            "n": self.n,
            "f": self.f.coeffs().iter().map(fmt_rat).collect::<Vec<_>>(),
            "g": self.g.coeffs().iter().map(fmt_rat).collect::<Vec<_>>(),
            "J": fmt_rat(&self.j),
            "N": self.N,
            "tailDepth": self.tail_depth(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct TrailEntry {
    pub action: String,
    pub vertex: Pt,
    pub polygon: NewtonPolygon,
}

/// Output of the Step-1 pipeline. `pair.F = scale_f * log(F_in)` (with `F_in`
/// and `G_in` exchanged first when `swapped`).
#[derive(Clone, Debug)]
pub struct Reduction {
    pub pair: NormalizedPair,
    pub log: AutoLog,
    pub scale_f: Rat,
    pub scale_g: Rat,
    pub swapped: bool,
    pub trail: Vec<TrailEntry>,
    pub diagnostics: Vec<String>,
}

impl Reduction {
    pub fn to_json(&self) -> Value {
        json!({
            "normalizedPair": self.pair.to_json(),
            "autoLog": serde_json::to_value(&self.log).expect("log serializes"),
            "scaleF": fmt_rat(&self.scale_f),
            "scaleG": fmt_rat(&self.scale_g),
            "swapped": self.swapped,
            "trail": self.trail.iter().map(|t| json!({
                "action": t.action,
                "vertex": pt_json(t.vertex),
                "polygon": t.polygon.to_json(),
            })).collect::<Vec<_>>(),
            "diagnostics": self.diagnostics,
        })
    }

    /// Replays the log on the inputs and compares with the output pair.
    pub fn replays(&self, f_in: &Series, g_in: &Series) -> Result<bool> {
        let (a, b) = if self.swapped { (g_in, f_in) } else { (f_in, g_in) };
        let fa = crate::poisson::apply_auto(&self.log, &a.in_space(Space::P)?, 0)?.scale(&self.scale_f);
        let gb = crate::poisson::apply_auto(&self.log, &b.in_space(Space::P)?, 0)?.scale(&self.scale_g);
        Ok(fa.agrees_with(&self.pair.F) && gb.agrees_with(&self.pair.G))
    }
}

/// Descends from the top vertex of `F` until the edge below the current
/// vertex has the terminal step, straightens that edge, and normalizes.
pub fn reduce_to_normal_form(f_in: &Series, g_in: &Series, max_steps: usize) -> Result<Reduction> {
    let mut f = f_in.in_space(Space::P)?;
    let mut g = g_in.in_space(Space::P)?;
    jacobian_constant(&f, &g)?;
    let mut log = AutoLog::new();
    let mut trail = Vec::new();
    let mut diagnostics = Vec::new();
    let mut v = support_polygon(&f)?.top_vertex();
    if !(v.0 > Exp::zero() && v.0 < Exp::from(v.1)) {
        return Err(Error::VertexInvalid(format!("top vertex ({}, {}) breaks 0 < m0 < m", fmt_exp(v.0), v.1)));
    }
    let mut reshifts = 0u64;
    let mut steps = 0usize;
    let p_end = loop {
        steps += 1;
        if steps > max_steps {
            return Err(Error::StepLimit(max_steps));
        }
        let poly = support_polygon(&f)?;
        let edge = poly.edge_below(v).ok_or_else(|| Error::VertexInvalid("no edge below the vertex".into()))?;
        let p = edge_step(v, &edge);
        let w = partner_vertex(&g, v, p)?;
        let bound = step_bound(v, w);
        trail.push(TrailEntry { action: format!("inspect step {}", fmt_exp(p)), vertex: v, polygon: poly });
        if p == bound {
            if v.1 < 2 {
                return Err(Error::VertexInvalid("terminal vertex has height 1, which would force m | n".into()));
            }
            debug_assert_eq!(-p, termination_slope(v.0, v.1, w.1));
            break p;
        }
        let d = descend_vertex(&f, &g, v)?;
        match &d.kind {
            DescentKind::SingleFactorShift { alpha0 } => {
                reshifts += 1;
                let cap = f.N() * v.1 as u64;
                if reshifts > cap {
                    return Err(Error::StepLimit(cap as usize));
                }
                diagnostics.push(format!("single-factor shift y -> y + ({}) x^{}", fmt_rat(alpha0), fmt_exp(d.plan.p)));
            }
            DescentKind::NewVertex { vertex, alpha0 } => {
                reshifts = 0;
                let how = alpha0.as_ref().map_or("no shift".to_string(), |a| format!("y -> y + ({}) x^{}", fmt_rat(a), fmt_exp(d.plan.p)));
                diagnostics.push(format!("descend to ({}, {}) via {how}", fmt_exp(vertex.0), vertex.1));
                v = *vertex;
            }
        }
        f = d.f;
        g = d.g;
        log.steps.extend(d.log.steps);
    };
    let s = -p_end;
    let (p_hat, q_hat) = (*s.numer(), *s.denom());
    let (mut f, mut g, l) = straighten(&f, &g, p_hat, q_hat)?;
    log.steps.extend(l.steps);
    let lead = |s: &Series| -> Result<Rat> {
        let a = s.deg_x().ok_or_else(|| Error::PreconditionFailed("zero series".into()))?;
        Ok(slice_poly(s, a)?.lead())
    };
    let mut scale_f = lead(&f)?.recip();
    let mut scale_g = lead(&g)?.recip();
    f = f.scale(&scale_f);
    g = g.scale(&scale_g);
    let deg = |s: &Series| slice_poly(s, s.deg_x().expect("nonzero")).map(|p| p.degree());
    let swapped = deg(&f)? > deg(&g)?;
    if swapped {
        std::mem::swap(&mut f, &mut g);
        std::mem::swap(&mut scale_f, &mut scale_g);
        diagnostics.push("exchanged F and G so that m < n".into());
    }
    let fp = slice_poly(&f, f.deg_x().expect("nonzero"))?;
    let m = fp.degree();
    let c1 = fp.coeff(m as usize - 1);
    if !c1.is_zero() {
        let step = AutoStep::ShiftY { lambda: -c1 / int(m), e: Exp::zero() };
        f = step.apply(&f, 0)?;
        g = step.apply(&g, 0)?;
        log.push(step);
    }
    let pair = NormalizedPair::from_pair(&f, &g)?;
    Ok(Reduction { pair, log, scale_f, scale_g, swapped, trail, diagnostics })
}

/// Checks that the straightened image of `edge` is a vertical edge of the
/// output polygon and that every input edge steeper than `q/p` (or leaning
/// left) maps to a negative slope.
pub fn check_straightened(before: &NewtonPolygon, after: &NewtonPolygon, edge: &Edge, p_hat: i64, q_hat: i64) -> bool {
    let (a, b) = (straighten_point(p_hat, q_hat, edge.from), straighten_point(p_hat, q_hat, edge.to));
    if a.0 != b.0 {
        return false;
    }
    let vertical = after.edges.iter().any(|e| e.from.0 == a.0 && e.to.0 == a.0 && e.from.1 != e.to.1);
    let lean = before.edges.iter().filter(|e| e.to.1 > e.from.1).all(|e| {
        let dx = e.to.0 - e.from.0;
        let steeper = dx <= Exp::zero() || Exp::from(e.to.1 - e.from.1) / dx > Exp::new(q_hat, p_hat.max(1));
        if !steeper || p_hat == 0 {
            return true;
        }
        let (s, t) = (straighten_point(p_hat, q_hat, e.from), straighten_point(p_hat, q_hat, e.to));
        t.0 < s.0
    });
    vertical && lean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{exp, rat};

    fn p(terms: &[(i64, i64, i64, i64)]) -> Series {
        Series::from_ints(Space::P, terms)
    }

    fn base() -> (Series, Series) {
        (p(&[(1, 2, 5, 2), (1, 2, 5, 0)]), Series::from_terms(Space::P, [((exp(3, 5), 3), int(1)), ((exp(3, 5), 1), rat(3, 2))]).unwrap())
    }

    #[test]
    fn self_pair_is_power_one() {
        let f = p(&[(1, 2, 1, 3), (1, 1, 1, 1), (1, 1, 2, 0)]);
        let poly = support_polygon(&f).unwrap();
        let e = poly.edge_below(poly.top_vertex()).unwrap();
        assert_eq!(test_edge_relation(&f, &f, &e).unwrap(), EdgeRelation::Power { exponent: Exp::one(), scale: int(1) });
    }

    #[test]
    fn base_pair_vertical_edges_are_qj() {
        let (f, g) = base();
        let poly = support_polygon(&f).unwrap();
        let e = poly.edge_below(poly.top_vertex()).unwrap();
        assert_eq!(e.slope, crate::newton::Slope::Vertical);
        assert_eq!(test_edge_relation(&f, &g, &e).unwrap(), EdgeRelation::Qj { j: rat(3, 5) });
    }

    #[test]
    fn leading_edges_of_square_example() {
        let f = Series::from_ints(Space::B, &[(1, 2, 1, 4), (1, 1, 1, 2), (2, 1, 1, 1), (1, 0, 1, -2)]);
        let g = Series::from_ints(Space::B, &[(1, 1, 1, 2), (1, 0, 1, -1)]);
        let poly = support_polygon(&f).unwrap();
        let e = poly.edge_below(poly.top_vertex()).unwrap();
        let rel = test_edge_relation(&f, &g, &e).unwrap();
        assert_eq!(rel, EdgeRelation::Power { exponent: exp(1, 2), scale: int(1) });
        let fl = edge_terms(&f, &e);
        assert_eq!(fl, g.pow(2).unwrap());
    }

    #[test]
    fn unrelated_edges() {
        let f = p(&[(1, 1, 2, 2), (1, 1, 2, 0)]);
        let g = p(&[(1, 3, 4, 3), (5, 3, 4, 0)]);
        let poly = support_polygon(&f).unwrap();
        let e = poly.edge_below(poly.top_vertex()).unwrap();
        assert_eq!(test_edge_relation(&f, &g, &e).unwrap_err().code(), "NO_RELATION");
    }

    // x^2 (y - x^{-1/2})^3
    fn cube() -> Series {
        let lin = Series::from_terms(Space::P, [((exp(0, 1), 1), int(1)), ((exp(-1, 2), 0), int(-1))]).unwrap();
        lin.pow(3).unwrap().mul_monomial(&int(1), Exp::from(2), 0).unwrap()
    }

    #[test]
    fn single_factor_shift() {
        let f = cube();
        let v = (Exp::from(2), 3);
        let d = descend_vertex(&f, &f, v).unwrap();
        assert_eq!(d.kind, DescentKind::SingleFactorShift { alpha0: int(1) });
        assert_eq!(d.log.steps, vec![AutoStep::ShiftY { lambda: int(1), e: exp(-1, 2) }]);
        assert_eq!(d.f, p(&[(1, 2, 1, 3)]));
    }

    #[test]
    fn maximal_multiplicity_factor() {
        // x^2 y (y - x^{-1})^2
        let lin = p(&[(1, 0, 1, 1), (-1, -1, 1, 0)]);
        let f = lin.pow(2).unwrap().mul_monomial(&int(1), Exp::from(2), 1).unwrap();
        let v = (Exp::from(2), 3);
        let plan = plan_descent(&f, v).unwrap();
        assert!(!plan.single_factor);
        assert_eq!(plan.alpha0, Some(int(1)));
        assert_eq!(plan.multiplicity, 2);
        assert_eq!(plan.new_vertex, (Exp::from(1), 2));
        let shifted = plan.step().unwrap().apply(&f, 0).unwrap();
        assert!(support_polygon(&shifted).unwrap().vertices.contains(&(Exp::from(1), 2)));
        // The edge step -1 sits below every admissible bound.
        assert_eq!(descend_vertex(&f, &f, v).unwrap_err().code(), "VERTEX_INVALID");
    }

    #[test]
    fn monomial_edge_is_invalid() {
        let f = p(&[(1, 2, 1, 3)]);
        assert_eq!(plan_descent(&f, (Exp::from(2), 3)).unwrap_err().code(), "VERTEX_INVALID");
    }

    #[test]
    fn irrational_root() {
        // x^3 y (y^2 + x^{-1})^2
        let q = p(&[(1, 0, 1, 2), (1, -1, 1, 0)]);
        let f = q.pow(2).unwrap().mul_monomial(&int(1), Exp::from(3), 1).unwrap();
        assert_eq!(plan_descent(&f, (Exp::from(3), 5)).unwrap_err().code(), "IRRATIONAL_ROOT");
    }

    #[test]
    fn tie_break_prefers_smaller_numerator() {
        // t (t - 1)^2 (t + 2)^2 over the vertex (3, 5) with step -1/2
        let phi = UPoly::from_ints(&[0, 1])
            .mul(&UPoly::from_ints(&[-1, 1]).mul(&UPoly::from_ints(&[-1, 1])))
            .mul(&UPoly::from_ints(&[2, 1]).mul(&UPoly::from_ints(&[2, 1])));
        let terms = (0..=5).filter(|&k| !phi.coeff(k).is_zero()).map(|k| ((Exp::from(3) - exp(5 - k as i64, 2), k as i64), phi.coeff(k)));
        let f = Series::from_terms(Space::P, terms).unwrap();
        let plan = plan_descent(&f, (Exp::from(3), 5)).unwrap();
        assert_eq!(plan.alpha0, Some(int(-2)));
        assert_eq!(plan.multiplicity, 2);
    }

    #[test]
    fn straighten_transports_monomials() {
        let f = p(&[(1, 2, 1, 2), (1, 1, 1, 0)]);
        let (f2, _, log) = straighten(&f, &f, 1, 2).unwrap();
        assert_eq!(log.steps.len(), 1);
        assert_eq!(f2, p(&[(1, 2, 1, 2), (1, 2, 1, 0)]));
        assert_eq!(straighten_point(1, 2, (Exp::from(2), 2)), (Exp::from(2), 2));
        let before = support_polygon(&f).unwrap();
        let after = support_polygon(&f2).unwrap();
        let e = before.edge_below(before.top_vertex()).unwrap();
        assert!(check_straightened(&before, &after, &e, 1, 2));
        let (f3, _, log) = straighten(&f, &f, 0, 3).unwrap();
        assert!(log.steps.is_empty());
        assert_eq!(f3, f);
        assert!(straighten(&f, &f, 2, 2).is_err());
    }

    #[test]
    fn termination_slope_formula() {
        assert_eq!(termination_slope(exp(14, 15), 2, 3), exp(1, 3));
        assert_eq!(termination_slope(exp(2, 5), 2, 3), Exp::zero());
        assert_eq!(step_bound((exp(14, 15), 2), (exp(7, 5), 3)), exp(-1, 3));
    }

    #[test]
    fn normalized_pair_reads_base() {
        let (f, g) = base();
        let np = NormalizedPair::from_pair(&f, &g).unwrap();
        assert_eq!((np.m, np.n, np.N), (2, 3, 5));
        assert_eq!(np.j, rat(3, 5));
        assert_eq!(np.tail_depth(), 0);
        assert!(np.f_level(1).unwrap().is_zero());
    }

    #[test]
    fn already_normalized_is_identity() {
        let (f, g) = base();
        let r = reduce_to_normal_form(&f, &g, DEFAULT_MAX_STEPS).unwrap();
        assert!(r.log.steps.is_empty());
        assert_eq!(r.pair.F, f);
        assert!(r.replays(&f, &g).unwrap());
    }

    #[test]
    fn construct_then_invert() {
        let (f, g) = base();
        let mut planted = AutoLog::new();
        planted.push(AutoStep::Monomial { p: 1, q: 3 }.inverse());
        planted.push(AutoStep::ShiftY { lambda: int(1), e: exp(-1, 5) });
        planted.push(AutoStep::ShiftY { lambda: int(1), e: Exp::zero() });
        let fi = crate::poisson::apply_auto(&planted, &f, 0).unwrap().scale(&int(3));
        let gi = crate::poisson::apply_auto(&planted, &g, 0).unwrap();
        let r = reduce_to_normal_form(&fi, &gi, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!((r.pair.m, r.pair.n), (2, 3));
        assert_eq!(r.pair.j, rat(3, 5));
        assert_eq!(r.pair.F, f);
        assert_eq!(r.pair.G, g);
        assert_eq!(r.scale_f, rat(1, 3));
        assert_eq!(r.log.steps.len(), 3);
        assert!(r.replays(&fi, &gi).unwrap());
    }

    #[test]
    fn bad_vertex() {
        let f = p(&[(1, 3, 1, 2), (1, 0, 1, 0)]);
        let g = p(&[(1, 1, 1, 0)]);
        assert_eq!(reduce_to_normal_form(&f, &g, 8).unwrap_err().code(), "NOT_QJ_PAIR");
        let f = p(&[(1, 2, 1, 1)]);
        let g = p(&[(-1, -1, 1, 0)]);
        assert_eq!(reduce_to_normal_form(&f, &g, 8).unwrap_err().code(), "VERTEX_INVALID");
    }
}
