//! Supports, Newton polygons, prime degrees and p-type components.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rat::{fmt_exp, Exp, Rat};
use crate::series::{Series, Space};

/// A lattice point `(x-exponent, y-exponent)` of a support.
pub type Pt = (Exp, i64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slope {
    Finite(Exp),
    Vertical,
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slope::Finite(s) => write!(f, "{}", fmt_exp(*s)),
            Slope::Vertical => write!(f, "VERTICAL"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: Pt,
    pub to: Pt,
    pub slope: Slope,
}

impl Edge {
    pub fn new(from: Pt, to: Pt) -> Edge {
        let dx = to.0 - from.0;
        let dy = Exp::from(to.1 - from.1);
        let slope = if dx.is_zero() { Slope::Vertical } else { Slope::Finite(dy / dx) };
        Edge { from, to, slope }
    }

    /// Whether `p` lies on the closed segment.
    pub fn contains(&self, p: Pt) -> bool {
        cross(self.from, self.to, p).is_zero() && between(self.from.0, self.to.0, p.0) && between_i(self.from.1, self.to.1, p.1)
    }

    /// Lower and upper endpoint by y (then x).
    pub fn ends_by_height(&self) -> (Pt, Pt) {
        let (a, b) = (self.from, self.to);
        if (a.1, a.0) <= (b.1, b.0) {
            (a, b)
        } else {
            (b, a)
        }
    }
}

fn between(a: Exp, b: Exp, t: Exp) -> bool {
    a.min(b) <= t && t <= a.max(b)
}

fn between_i(a: i64, b: i64, t: i64) -> bool {
    a.min(b) <= t && t <= a.max(b)
}

fn cross(o: Pt, a: Pt, b: Pt) -> Exp {
    (a.0 - o.0) * Exp::from(b.1 - o.1) - Exp::from(a.1 - o.1) * (b.0 - o.0)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygon {
    /// Extreme points, counterclockwise from the lexicographically smallest.
    pub vertices: Vec<Pt>,
    pub edges: Vec<Edge>,
}

impl NewtonPolygon {
    /// Vertex with the largest y, ties broken by the largest x.
    pub fn top_vertex(&self) -> Pt {
        *self.vertices.iter().max_by_key(|p| (p.1, p.0)).expect("polygon has the origin")
    }

    /// The edge of the right-hand chain whose upper endpoint is `v`, i.e. the
    /// one reached when walking counterclockwise into `v` from below.
    pub fn edge_below(&self, v: Pt) -> Option<Edge> {
        self.edges.iter().copied().find(|e| e.to == v && e.from.1 < v.1)
    }

    pub fn contains_point(&self, p: Pt) -> bool {
        match self.vertices.len() {
            1 => self.vertices[0] == p,
            2 => Edge::new(self.vertices[0], self.vertices[1]).contains(p),
            _ => self.edges.iter().all(|e| cross(e.from, e.to, p) >= Exp::zero()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct E {
            from: [String; 2],
            to: [String; 2],
            slope: String,
        }
        let pt = |p: Pt| [fmt_exp(p.0), p.1.to_string()];
        serde_json::json!({
            "vertices": self.vertices.iter().map(|p| pt(*p)).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|e| E { from: pt(e.from), to: pt(e.to), slope: e.slope.to_string() }).collect::<Vec<_>>(),
        })
    }
}

pub fn support(f: &Series) -> Vec<Pt> {
    f.terms().map(|(m, _)| *m).collect()
}

/// Convex hull of `Supp F` and the origin (monotone chain, collinear points
/// dropped).
pub fn newton_polygon(f: &Series) -> Result<NewtonPolygon> {
    if !f.is_exact() {
        return Err(Error::InfiniteSupport);
    }
    let mut pts = support(f);
    pts.push((Exp::zero(), 0));
    Ok(hull(pts))
}

pub fn hull(mut pts: Vec<Pt>) -> NewtonPolygon {
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        let edges = if pts.len() == 2 { vec![Edge::new(pts[0], pts[1])] } else { vec![] };
        return NewtonPolygon { vertices: pts, edges };
    }
    let mut lower: Vec<Pt> = vec![];
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= Exp::zero() {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Pt> = vec![];
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= Exp::zero() {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let vertices = lower;
    if vertices.len() == 2 {
        return NewtonPolygon { edges: vec![Edge::new(vertices[0], vertices[1])], vertices };
    }
    let edges = (0..vertices.len()).map(|i| Edge::new(vertices[i], vertices[(i + 1) % vertices.len()])).collect();
    NewtonPolygon { vertices, edges }
}

/// The terms of `F` on the closed segment `edge`, which must be an edge of
/// the polygon of `F` (a vertex given twice selects that monomial).
pub fn edge_part(f: &Series, edge: &Edge) -> Result<Series> {
    let poly = newton_polygon(f)?;
    let known = poly.edges.iter().any(|e| (e.from == edge.from && e.to == edge.to) || (e.from == edge.to && e.to == edge.from))
        || (edge.from == edge.to && poly.vertices.contains(&edge.from));
    if !known {
        return Err(Error::EdgeNotFound);
    }
    if edge.from == edge.to {
        return Ok(f.filter(|m| m == edge.from));
    }
    Ok(f.filter(|m| edge.contains(m)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PrimeDegree {
    NegInf,
    Value(Exp),
    /// Reserved for supports that are genuinely infinite; never produced
    /// from stored terms.
    PosInf,
}

impl fmt::Display for PrimeDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimeDegree::NegInf => write!(f, "NEG_INF"),
            PrimeDegree::Value(p) => write!(f, "{}", fmt_exp(*p)),
            PrimeDegree::PosInf => write!(f, "POS_INF"),
        }
    }
}

impl PrimeDegree {
    pub fn value(self) -> Option<Exp> {
        match self {
            PrimeDegree::Value(p) => Some(p),
            _ => None,
        }
    }
}

/// `(m0, m)`: the first term `x^{m0} y^m`.
pub fn first_term(f: &Series) -> Result<Pt> {
    let m = f.deg_y().ok_or_else(|| Error::PreconditionFailed("zero series".into()))?;
    let m0 = f.terms().filter(|(t, _)| t.1 == m).map(|(t, _)| t.0).max().expect("row is nonempty");
    Ok((m0, m))
}

/// Smallest `p` with `deg_x f_i <= m0 + p i` for all `i >= 1`, attained at
/// some row.
pub fn prime_degree(f: &Series) -> Result<PrimeDegree> {
    let (m0, m) = first_term(f)?;
    let mut best: Option<Exp> = None;
    for b in f.y_exponents() {
        if b == m {
            continue;
        }
        let i = m - b;
        let dx = f.terms().filter(|(t, _)| t.1 == b).map(|(t, _)| t.0).max().expect("row is nonempty");
        let r = (dx - m0) / Exp::from(i);
        best = Some(best.map_or(r, |v: Exp| v.max(r)));
    }
    Ok(best.map_or(PrimeDegree::NegInf, PrimeDegree::Value))
}

/// Index `r` of the line through `(a, b)` parallel to the prime line.
pub fn component_index(m0: Exp, m: i64, p: Exp, (a, b): Pt) -> Exp {
    a - m0 - p * Exp::from(m - b)
}

fn check_p(f: &Series, p: Exp) -> Result<()> {
    if let PrimeDegree::Value(q) = prime_degree(f)? {
        if q > p {
            return Err(Error::PrimeDegreeExceeded { found: fmt_exp(q), requested: fmt_exp(p) });
        }
    }
    Ok(())
}

/// The p-type r-th component.
pub fn component(f: &Series, p: Exp, r: Exp) -> Result<Series> {
    check_p(f, p)?;
    let (m0, m) = first_term(f)?;
    Ok(f.filter(|t| component_index(m0, m, p, t) == r))
}

/// All nonzero components keyed by their index.
pub fn components(f: &Series, p: Exp) -> Result<BTreeMap<Exp, Series>> {
    check_p(f, p)?;
    let (m0, m) = first_term(f)?;
    let mut out = BTreeMap::new();
    for r in f.terms().map(|(t, _)| component_index(m0, m, p, *t)).collect::<std::collections::BTreeSet<_>>() {
        out.insert(r, f.filter(|t| component_index(m0, m, p, t) == r));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimaryPolynomial {
    /// Monic power-free polynomial in y.
    pub pri: Series,
    pub m_prime: u32,
    pub d: i64,
    /// Coefficient of the first term; `F<0> = scale x^{m0} pri^{m'}`.
    pub scale: Rat,
}

/// `F<0> = x^{m0} pri^{m'}` with `m'` maximal.
pub fn primary_polynomial(f: &Series, p: Exp) -> Result<PrimaryPolynomial> {
    let f0 = component(f, p, Exp::zero())?;
    if f0.min_y().is_some_and(|b| b < 0) {
        return Err(Error::NotPolynomial("F<0> has negative y-powers".into()));
    }
    let (m0, m) = first_term(f)?;
    let scale = f0.coeff(m0, m);
    let mut h = f0.mul_monomial(&scale.recip(), -m0, 0)?;
    if h.space() == Space::A {
        h = h.in_space(Space::B)?;
    }
    for k in (1..=m.max(1)).rev() {
        if m % k != 0 {
            continue;
        }
        if let Some(root) = h.poly_power_root(k as u32) {
            let lead = root.coeff(Exp::zero(), m / k);
            if lead.is_one() {
                return Ok(PrimaryPolynomial { pri: root, m_prime: k as u32, d: m / k, scale });
            }
        }
    }
    unreachable!("k = 1 always has a root")
}
