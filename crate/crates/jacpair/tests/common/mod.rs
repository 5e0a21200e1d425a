#![allow(dead_code)]

use jacpair::normalform::HKResult;
use jacpair::poisson::{exp_ad_to, AutoStep};
use jacpair::rat::{exp, int, rat};
use jacpair::reduction::NormalizedPair;
use jacpair::weyl::{Rep, WeylSeries};
use jacpair::{Exp, Rat, Series, Space};
use num_traits::Zero;
use rand::Rng;

pub fn small_rat<R: Rng>(rng: &mut R) -> Rat {
    let n = rng.gen_range(1..=5) * if rng.gen_bool(0.5) { 1 } else { -1 };
    rat(n, rng.gen_range(1..=3))
}

/// Exact series with `terms` random monomials, x-exponents in `xs / den`,
/// y-exponents in `ys`.
pub fn random_series<R: Rng>(rng: &mut R, space: Space, xs: (i64, i64), den: i64, ys: (i64, i64), terms: usize) -> Series {
    let t: Vec<_> = (0..terms)
        .map(|_| ((exp(rng.gen_range(xs.0..=xs.1), den), rng.gen_range(ys.0..=ys.1)), small_rat(rng)))
        .collect();
    let mut s = Series::zero(space);
    for ((a, b), c) in t {
        s = s.checked_add(&Series::monomial(space, c, a, b)).unwrap();
    }
    s
}

pub fn random_weyl<R: Rng>(rng: &mut R, terms: usize, v_lo: i64) -> WeylSeries {
    let t: Vec<_> = (0..terms)
        .map(|_| ((Exp::from(rng.gen_range(-3..=3)), rng.gen_range(v_lo..=3)), small_rat(rng)))
        .collect();
    WeylSeries::from_terms(Rep::Uv, t).unwrap()
}

/// `F = y^m + sum_{b<m} c_b(x) y^b`, `c_b` a polynomial of degree <= 2 in x.
pub fn random_monic_poly<R: Rng>(rng: &mut R, m: i64) -> Series {
    let mut s = Series::monomial(Space::B, int(1), Exp::zero(), m);
    for b in 0..m {
        for a in 0..=2 {
            if rng.gen_bool(0.3) {
                s = s.checked_add(&Series::monomial(Space::B, small_rat(rng), Exp::from(a), b)).unwrap();
            }
        }
    }
    s
}

pub fn base_pair() -> (Series, Series) {
    let f = Series::from_ints(Space::P, &[(1, 2, 5, 2), (1, 2, 5, 0)]);
    let g = Series::from_terms(Space::P, [((exp(3, 5), 3), int(1)), ((exp(3, 5), 1), rat(3, 2))]).unwrap();
    (f, g)
}

/// A generator `Q` with `deg_x Q < 1`: terms `x^{k/5} y^b`, `0 <= k <= 4`.
pub fn random_generator<R: Rng>(rng: &mut R) -> Series {
    let mut q = Series::zero(Space::P);
    while q.is_zero() {
        let n = rng.gen_range(1..=4);
        q = random_series(rng, Space::P, (0, 4), 5, (0, 2), n);
    }
    q
}

/// `e^{ad Q}` and optionally `z_c` applied to the base pair, kept to
/// `depth` levels.
pub fn perturbed_base<R: Rng>(rng: &mut R, depth: u64) -> NormalizedPair {
    let (f, g) = base_pair();
    let d = Exp::new(depth as i64, 5);
    let (xf, xg) = (exp(2, 5) - d, exp(3, 5) - d);
    let q = random_generator(rng);
    let mut pf = exp_ad_to(&q, &f, Some(xf)).unwrap();
    let mut pg = exp_ad_to(&q, &g, Some(xg)).unwrap();
    if rng.gen_bool(0.5) {
        let z = AutoStep::Zc { c: small_rat(rng) };
        pf = z.apply(&pf, 0).unwrap().truncate(Some(xf), None);
        pg = z.apply(&pg, 0).unwrap().truncate(Some(xg), None);
    }
    NormalizedPair::from_pair(&pf, &pg).unwrap()
}

/// A planted `(H, K)` with exact tails, for decomposition tests.
pub fn planted_hk(h: Series, k: Series, n: u64) -> HKResult {
    HKResult::planted(h, k, n, 8)
}
