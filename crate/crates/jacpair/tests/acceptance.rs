//! Acceptance criteria 1-8, one PASS/FAIL line each.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use jacpair::expansion::{coeff_of_f_power, compute_r0, expand_g_in_f, expand_y_in_f, jacobian_constant};
use jacpair::newton::{component, prime_degree, PrimeDegree};
use jacpair::normalform::{check_polynomiality, normalize_to_hk};
use jacpair::poisson::{bracket, default_grid, is_jacobian_candidate, trace, Candidate};
use jacpair::rat::{exp, int, rat};
use jacpair::weyl::{
    dixmier_vertex_solve, from_w_form, normal_product_to, to_w_form, vertex_bracket_check, vertex_bracket_check_with, vertex_closed_form,
    weyl_trace,
};
use jacpair::{verifier, Exp, Rat, Series, Space};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn b(terms: &[(i64, i64, i64, i64)]) -> Series {
    Series::from_ints(Space::B, terms)
}

fn timed(limit: Duration, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (ok, detail) = f();
    let el = t.elapsed();
    let in_time = el < limit;
    Outcome { pass: ok && in_time, detail: format!("{detail}; {:.2?} (limit {:?})", el, limit) }
}

/// Terms `c x^a y^b u^k` with `u = y^2 + x^{-1}`.
type Xyu = BTreeMap<(Exp, i64, i64), Rat>;

fn xyu_mul(p: &Xyu, q: &Xyu) -> Xyu {
    let mut out = Xyu::new();
    for ((a, b, k), c) in p {
        for ((a2, b2, k2), c2) in q {
            *out.entry((*a + *a2, b + b2, k + k2)).or_insert_with(Rat::zero) += c * c2;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn xyu_add(p: &Xyu, q: &Xyu, sign: i64) -> Xyu {
    let mut out = p.clone();
    for (m, c) in q {
        *out.entry(*m).or_insert_with(Rat::zero) += c * int(sign);
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn t(c: Rat, a: i64, b: i64, k: i64) -> Xyu {
    [((Exp::from(a), b, k), c)].into_iter().collect()
}

/// Replaces nonnegative powers of `u` by `(y^2 + x^{-1})^k`; negative
/// powers must have cancelled.
fn xyu_expand(p: &Xyu) -> Option<Series> {
    let mut s = Series::zero(Space::B);
    for ((a, b, k), c) in p {
        if *k < 0 {
            return None;
        }
        let u = Series::from_ints(Space::B, &[(1, 0, 1, 2), (1, -1, 1, 0)]).pow(*k as u32).ok()?;
        s = s.checked_add(&u.mul_monomial(c, *a, *b).ok()?).ok()?;
    }
    Some(s)
}

/// `[x^4 u^3, x^{-2} u^{-2} y]` by the chain rule in `u`, with `u_x = -x^{-2}`, `u_y = 2y`.
fn chain_rule_oracle() -> Option<Series> {
    let fx = xyu_add(&t(int(4), 3, 0, 3), &t(int(-3), 2, 0, 2), 1);
    let fy = t(int(6), 4, 1, 2);
    let gx = xyu_add(&t(int(-2), -3, 1, -2), &t(int(2), -4, 1, -3), 1);
    let gy = xyu_add(&t(int(1), -2, 0, -2), &t(int(-4), -2, 2, -3), 1);
    xyu_expand(&xyu_add(&xyu_mul(&fx, &gy), &xyu_mul(&fy, &gx), -1))
}

type Sparse = BTreeMap<(Exp, i64), Rat>;

fn sparse(s: &Series) -> Sparse {
    s.terms().map(|(m, c)| (*m, c.clone())).collect()
}

/// `F_x G_y - F_y G_x` on finite term maps, by hand.
fn oracle_bracket(f: &Sparse, g: &Sparse) -> Sparse {
    let mut out = Sparse::new();
    for ((a, b), c) in f {
        for ((a2, b2), c2) in g {
            let e = (*a + *a2 - Exp::one(), b + b2 - 1);
            let k = c * c2 * (jacpair::rat::exp_to_rat(*a) * int(*b2) - int(*b) * jacpair::rat::exp_to_rat(*a2));
            *out.entry(e).or_insert_with(Rat::zero) += k;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn pair_2ex1() -> (Series, Series) {
    let f = b(&[(1, 1, 1, 2), (2, 5, 8, 1)]);
    let g = Series::from_terms(
        Space::B,
        [((exp(3, 2), 3), int(1)), ((exp(9, 8), 2), int(3)), ((exp(3, 4), 1), rat(3, 2)), ((exp(3, 8), 0), rat(-1, 2))],
    )
    .unwrap();
    (f, g)
}

fn criterion_1() -> Outcome {
    let a = timed(Duration::from_secs(1), || {
        let (f, g) = pair_2ex1();
        let j = jacobian_constant(&f, &g).unwrap();
        let oracle = oracle_bracket(&sparse(&f), &sparse(&g));
        let want: Sparse = [((Exp::zero(), 0), rat(3, 8))].into_iter().collect();
        (j == rat(3, 8) && oracle == want, format!("[F,G] = {j}, oracle {:?}", oracle.values().map(|c| c.to_string()).collect::<Vec<_>>()))
    });
    let c = timed(Duration::from_secs(1), || {
        let u = b(&[(1, 0, 1, 2), (1, -1, 1, 0)]);
        let f1 = u.pow(3).unwrap().mul_monomial(&int(1), Exp::from(4), 0).unwrap();
        let g1 = u.fractional_power(-2, 1, 12).unwrap().mul_monomial(&int(1), Exp::from(-2), 1).unwrap();
        let br = bracket(&f1, &g1).unwrap();
        let oracle = chain_rule_oracle();
        let one = Series::one(Space::B);
        let ok = br.agrees_with(&one) && br.is_known(Exp::zero(), 0) && oracle.as_ref() == Some(&one);
        (ok, format!("[F1,G1] = 1 and chain-rule oracle = 1, bracket known down to y >= {:?}", br.y_floor()))
    });
    Outcome { pass: a.pass && c.pass, detail: format!("{} | {}", a.detail, c.detail) }
}

fn criterion_2() -> Outcome {
    timed(Duration::from_secs(1), || {
        let cases: Vec<(&str, Series, Exp)> = vec![
            ("(x^3y^2 + x^2y)", b(&[(1, 3, 1, 2), (1, 2, 1, 1)]), Exp::from(-1)),
            ("F1", b(&[(1, 4, 1, 6), (3, 3, 1, 4), (3, 2, 1, 2), (1, 1, 1, 0)]), exp(-1, 2)),
            ("x^2y^4+xy^2+2xy+y^-2", b(&[(1, 2, 1, 4), (1, 1, 1, 2), (2, 1, 1, 1), (1, 0, 1, -2)]), exp(-1, 3)),
            ("x^2y^4+2x^{3/2}y^2+x+x^{1/2}y", b(&[(1, 2, 1, 4), (2, 3, 2, 2), (1, 1, 1, 0), (1, 1, 2, 1)]), exp(-1, 4)),
            ("xy^2+2x^{5/8}y", b(&[(1, 1, 1, 2), (2, 5, 8, 1)]), exp(-3, 8)),
            ("x^2y^10+2xy^4", b(&[(1, 2, 1, 10), (2, 1, 1, 4)]), exp(-1, 6)),
        ];
        let mut bad = Vec::new();
        for (name, f, p) in &cases {
            let got = prime_degree(f).unwrap();
            if got != PrimeDegree::Value(*p) {
                bad.push(format!("{name}: {got}"));
            }
        }
        let f = &cases[2].1;
        let c0 = component(f, exp(-1, 3), Exp::zero()).unwrap();
        let want = b(&[(1, 1, 1, 2), (1, 0, 1, -1)]).pow(2).unwrap();
        if c0 != want {
            bad.push(format!("F<0> = {c0}"));
        }
        (bad.is_empty(), if bad.is_empty() { "6 prime degrees and F<0> exact".into() } else { bad.join(", ") })
    })
}

fn criterion_3() -> Outcome {
    let (f, g) = pair_2ex1();
    let r1 = compute_r0(&f, &g, 12).unwrap();
    let first = r1.r0.agrees_with(&g);
    let f2 = b(&[(1, 2, 1, 10), (2, 1, 1, 4)]);
    let printed = Series::from_terms(
        Space::B,
        [((Exp::from(3), 15), int(1)), ((Exp::from(2), 9), int(3)), ((Exp::one(), 3), rat(1, 2)), ((Exp::zero(), -3), rat(-1, 2))],
    )
    .unwrap();
    let consistent = printed.checked_add(&Series::monomial(Space::B, int(1), Exp::one(), 3)).unwrap();
    let printed_status = compute_r0(&f2, &printed, 12).map(|r| r.r0).map_err(|e| e.code());
    let r2 = compute_r0(&f2, &consistent, 24).unwrap();
    let diff = r2.r0.checked_sub(&printed).unwrap();
    let second = diff.is_zero();
    Outcome {
        pass: first && second,
        detail: format!(
            "first pair R0 = G: {first}; second pair as printed: {:?}; computed R0 - printed G = {diff} \
             (the x y^3 coefficient is 3/2 from F^{{3/2}}, printed 1/2)",
            printed_status.err()
        ),
    }
}

fn criterion_4() -> Outcome {
    timed(Duration::from_secs(5), || {
        let vs = [verifier::verify_f1_vanishes(), verifier::verify_r_coefficients(), verifier::verify_tilde_r()];
        let n: usize = vs.iter().map(|v| v.checks.len()).sum();
        let fails: Vec<String> = vs.iter().flat_map(|v| v.failures().map(|c| c.name.clone())).collect();
        (fails.is_empty() && n >= 9, format!("{n} program outputs checked, failures {fails:?}"))
    })
}

fn criterion_5() -> Outcome {
    timed(Duration::from_secs(10), || {
        let mut grid = 0;
        let mut bad = Vec::new();
        for m0 in 2..=10 {
            for m in 1..m0 {
                let s = dixmier_vertex_solve(m0, m).unwrap();
                grid += 1;
                if (s.alpha.clone(), s.beta.clone()) != vertex_closed_form(m0, m) {
                    bad.push(format!("({m0},{m})"));
                }
            }
        }
        for (m0, m) in [(2, 1), (3, 2), (5, 2)] {
            let v = vertex_bracket_check(m0, m, 8).unwrap();
            let named = |p: &str| v.checks.iter().any(|c| c.name.starts_with(p) && c.pass);
            if !(v.pass() && named("telescoped") && named("tr(R0") && named("tr(F0")) {
                bad.push(format!("vertex ({m0},{m}): {:?}", v.failures().collect::<Vec<_>>()));
            }
        }
        (bad.is_empty(), format!("{grid} grid points, 3 vertex checks, failures {bad:?}"))
    })
}

fn criterion_6() -> Outcome {
    timed(Duration::from_secs(60), || {
        let results: Vec<(bool, String)> = (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let pair = common::perturbed_base(&mut rng, 12);
                match normalize_to_hk(&pair, 12) {
                    Ok(hk) => {
                        let poly = check_polynomiality(&pair, &hk.H, &hk.K, 12).map(|v| v.pass()).unwrap_or(false);
                        (hk.verdict.pass() && poly, format!("seed {seed}: {:?}", hk.verdict.failures().map(|c| &c.name).collect::<Vec<_>>()))
                    }
                    Err(e) => (false, format!("seed {seed}: {e}")),
                }
            })
            .collect();
        let fails: Vec<&String> = results.iter().filter(|r| !r.0).map(|r| &r.1).collect();
        (fails.is_empty(), format!("20 perturbations at depth 12, failures {fails:?}"))
    })
}

fn binomial_recurrences(rng: &mut ChaCha8Rng) -> bool {
    let depth = 10;
    for beta in [rat(1, 2), rat(-1, 3), rat(5, 2)] {
        let z: Vec<Rat> = std::iter::once(Rat::one()).chain((0..4).map(|_| common::small_rat(rng))).collect();
        let base = Series::from_terms(Space::A, z.iter().enumerate().map(|(i, c)| ((Exp::from(-(i as i64)), 0), c.clone()))).unwrap();
        let e = jacpair::rat::rat_to_exp(&beta).unwrap();
        let h = base.power_to(e, Some(Exp::from(-depth)), None).unwrap();
        let h1 = base.power_to(e + Exp::one(), Some(Exp::from(-depth)), None).unwrap();
        let hc = |s: &Series, j: i64| if j < 0 { Rat::zero() } else { s.coeff(Exp::from(-j), 0) };
        for r in 0..=depth {
            let mut rec = Rat::zero();
            let mut conv = Rat::zero();
            for (s, zs) in z.iter().enumerate() {
                let s = s as i64;
                rec += (int(s) * (&beta + int(1)) - int(r)) * zs * hc(&h, r - s);
                conv += zs * hc(&h, r - s);
            }
            if !rec.is_zero() || conv != hc(&h1, r) {
                return false;
            }
        }
    }
    true
}

fn criterion_7() -> Outcome {
    timed(Duration::from_secs(120), || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut failed: Vec<&str> = Vec::new();
        let mut suite = |name: &'static str, ok: bool| {
            if !ok {
                failed.push(name);
            }
        };
        let rs = |rng: &mut ChaCha8Rng| common::random_series(rng, Space::P, (-4, 8), 2, (0, 3), 4);
        suite(
            "Leibniz",
            (0..50).all(|_| {
                let (f, g, h) = (rs(&mut rng), rs(&mut rng), rs(&mut rng));
                let lhs = bracket(&f, &g.checked_mul(&h).unwrap()).unwrap();
                let rhs = bracket(&f, &g).unwrap().checked_mul(&h).unwrap().checked_add(&g.checked_mul(&bracket(&f, &h).unwrap()).unwrap()).unwrap();
                lhs == rhs
            }),
        );
        suite(
            "Jacobi",
            (0..50).all(|_| {
                let (f, g, h) = (rs(&mut rng), rs(&mut rng), rs(&mut rng));
                let br = |a: &Series, b: &Series| bracket(a, b).unwrap();
                let s = br(&f, &br(&g, &h)).checked_add(&br(&g, &br(&h, &f))).unwrap().checked_add(&br(&h, &br(&f, &g))).unwrap();
                s.is_zero()
            }),
        );
        let rb = |rng: &mut ChaCha8Rng| common::random_series(rng, Space::B, (-3, 3), 1, (-3, 3), 5);
        suite("tr([H,K]) = 0", (0..50).all(|_| trace(&bracket(&rb(&mut rng), &rb(&mut rng)).unwrap()).unwrap().is_zero()));
        suite(
            "tr([H,F]G) = tr H",
            (0..50).all(|_| {
                let h = rb(&mut rng);
                let (x, y) = (Series::x(Space::B), Series::y(Space::B));
                trace(&bracket(&h, &x).unwrap().checked_mul(&y).unwrap()).unwrap() == trace(&h).unwrap()
            }),
        );
        suite("binomial recurrences", (0..20).all(|_| binomial_recurrences(&mut rng)));
        suite(
            "b_{im+n} = 0",
            (0..50).all(|_| {
                let m = rng.gen_range(1..=3);
                let n = rng.gen_range(1..=4);
                let (f, g) = (common::random_monic_poly(&mut rng, m), common::random_monic_poly(&mut rng, n));
                let e = expand_g_in_f(&f, &g, 10).unwrap();
                (1..).map(|i| (i * m + n) as usize).take_while(|k| *k < e.coeffs.len()).all(|k| e.coeffs[k].is_zero())
            }),
        );
        suite(
            "closed coefficient formulas",
            (0..20).all(|_| {
                let m = rng.gen_range(1..=3);
                let f = common::random_monic_poly(&mut rng, m);
                let l = rng.gen_range(0..=2);
                (0..=6).all(|i| coeff_of_f_power(&f, l, 0, i, 6).map(|c| c.consistent()).unwrap_or(false))
                    && expand_y_in_f(&f, 6).is_ok()
            }),
        );
        suite(
            "Weyl trace cyclicity",
            (0..100).all(|_| {
                let (h, k) = (common::random_weyl(&mut rng, 4, -3), common::random_weyl(&mut rng, 4, -3));
                let hk = normal_product_to(&h, &k, Some(-Exp::one()), Some(-1)).unwrap();
                let kh = normal_product_to(&k, &h, Some(-Exp::one()), Some(-1)).unwrap();
                weyl_trace(&hk).unwrap() == weyl_trace(&kh).unwrap()
            }),
        );
        suite(
            "w-form round trip",
            (0..100).all(|_| {
                let h = common::random_weyl(&mut rng, 5, 0);
                from_w_form(&to_w_form(&h).unwrap()).unwrap() == h
            }),
        );
        (failed.is_empty(), format!("9 suites, failures {failed:?}"))
    })
}

fn criterion_8() -> Outcome {
    let xy = Series::from_ints(Space::P, &[(1, 1, 1, 1)]);
    let (a, c) = default_grid(&xy);
    let cand = is_jacobian_candidate(&xy, &a, &c).unwrap();
    let (first, witness) = match &cand {
        Candidate::Fail { a, c, trace } => (*a == int(-1) && c.is_zero(), format!("({a}, {c}) with trace {trace}")),
        Candidate::Pass { .. } => (false, "none".into()),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pair = common::perturbed_base(&mut rng, 8);
    let hk = normalize_to_hk(&pair, 8).unwrap();
    let bad_k = hk.K.checked_add(&Series::monomial(Space::P, int(1), exp(-1, 5), 2)).unwrap();
    let v = check_polynomiality(&pair, &hk.H, &bad_k, 8).unwrap();
    let second = !v.pass() && v.failures().any(|c| c.detail.starts_with("residual") && !c.detail.starts_with("residual 0"));

    let (alpha, _) = vertex_closed_form(3, 2);
    let w = vertex_bracket_check_with(3, 2, &(alpha + int(1)), 8).unwrap();
    let third = w.failures().any(|c| c.name.starts_with("tr") && c.detail != "0");
    Outcome {
        pass: first && second && third,
        detail: format!("xy fails with witness {witness}; corrupted K flagged: {second}; wrong alpha trace flagged: {third}"),
    }
}

#[test]
fn acceptance() {
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
    ];
    for (i, r) in results.iter().enumerate() {
        // Straight to the stream so the lines show without --nocapture.
        let line = format!("criterion {}: {} - {}\n", i + 1, if r.pass { "PASS" } else { "FAIL" }, r.detail);
        std::io::stdout().write_all(line.as_bytes()).unwrap();
    }
    // The printed second R0 example carries a coefficient that makes the
    // bracket non-constant; criterion 3 cannot reproduce it and stays FAIL.
    assert!(!results[2].pass, "criterion 3 unexpectedly reproduces the printed coefficient");
    assert!(results[2].detail.starts_with("first pair R0 = G: true"), "{}", results[2].detail);
    for (i, r) in results.iter().enumerate() {
        if i != 2 {
            assert!(r.pass, "criterion {} failed: {}", i + 1, r.detail);
        }
    }
}
