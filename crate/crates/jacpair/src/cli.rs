//! Fixture corpus and batch runner behind the `jacpair` binary.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::expansion::{compute_r0, expand_g_in_f, expand_y_in_f, jacobian_constant};
use crate::newton::{component, newton_polygon, prime_degree};
use crate::normalform::{alpha_decompose, check_polynomiality, normalize_to_hk};
use crate::rat::{fmt_exp, fmt_rat};
use crate::reduction::{reduce_to_normal_form, NormalizedPair, DEFAULT_MAX_STEPS};
use crate::series::Series;
use crate::verdict::Verdict;
use crate::{verifier, weyl};

pub const DEFAULT_DEPTH: u32 = 12;
pub const DEFAULT_N_CAP: u64 = crate::series::DEFAULT_N_CAP;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Kind {
    Series,
    Pair,
    NormalizedPair,
    Weyl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// A value printed in the source worked examples; needs a citation.
    Printed,
    Trivial,
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    /// Compared against the op's `result`; an object `{"error": CODE}`
    /// expects that error.
    pub value: Value,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub id: String,
    pub kind: Kind,
    pub payload: Value,
    /// Ops the corpus runs on this fixture; defaults to the keys of
    /// `expected`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ops: Vec<String>,
    #[serde(default)]
    pub expected: BTreeMap<String, Expected>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Op {
    Bracket,
    Newton,
    PrimeDegree,
    Components,
    Expand,
    R0,
    Reduce,
    Normalize,
    Weyl,
    Verify,
}

impl Op {
    pub const ALL: [Op; 10] =
        [Op::Bracket, Op::Newton, Op::PrimeDegree, Op::Components, Op::Expand, Op::R0, Op::Reduce, Op::Normalize, Op::Weyl, Op::Verify];

    pub fn name(self) -> &'static str {
        match self {
            Op::Bracket => "bracket",
            Op::Newton => "newton",
            Op::PrimeDegree => "prime-degree",
            Op::Components => "components",
            Op::Expand => "expand",
            Op::R0 => "r0",
            Op::Reduce => "reduce",
            Op::Normalize => "normalize",
            Op::Weyl => "weyl",
            Op::Verify => "verify",
        }
    }

    pub fn from_name(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|o| o.name() == s)
    }

    pub fn applies_to(self, kind: Kind) -> bool {
        matches!(
            (self, kind),
            (Op::Newton | Op::PrimeDegree | Op::Components | Op::Expand, Kind::Series)
                | (Op::Bracket | Op::Expand | Op::R0 | Op::Reduce, Kind::Pair)
                | (Op::Bracket | Op::Reduce | Op::Normalize, Kind::NormalizedPair)
                | (Op::Weyl, Kind::Weyl)
        )
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub depth: u32,
    pub n_cap: u64,
}

impl Default for Options {
    fn default() -> Options {
        Options { depth: DEFAULT_DEPTH, n_cap: DEFAULT_N_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    #[serde(rename = "fixtureId")]
    pub fixture_id: String,
    pub op: String,
    pub verdict: String,
    pub values: Value,
    pub floors: Value,
    #[serde(rename = "timingMs")]
    pub timing_ms: u64,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.verdict == "PASS"
    }

    /// The report without its timing field, for determinism checks.
    pub fn stable_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timingMs");
        v.to_string()
    }

    pub fn text_line(&self) -> String {
        let result = self.values.get("result").map_or(String::new(), compact);
        format!("{:4} {} {} {} ({} ms)", self.verdict, self.fixture_id, self.op, result, self.timing_ms)
    }
}

fn compact(v: &Value) -> String {
    let s = v.to_string();
    if s.len() > 100 {
        format!("{}...", &s[..s.char_indices().take_while(|(i, _)| *i < 97).last().map_or(0, |(i, c)| i + c.len_utf8())])
    } else {
        s
    }
}

/// Shipped fixtures, `fixtures/{series,pairs,weyl}`.
pub fn default_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn collect_json(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let meta = std::fs::metadata(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if meta.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    let rd = std::fs::read_dir(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut entries: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_json(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "json") {
            out.push(p);
        }
    }
    Ok(())
}

fn series_in(payload: &Value, key: &str) -> Result<Series> {
    let v = payload.get(key).ok_or_else(|| Error::Parse(format!("payload has no \"{key}\"")))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("\"{key}\": {e}")))
}

fn int_in(payload: &Value, key: &str) -> Result<i64> {
    payload.get(key).and_then(Value::as_i64).ok_or_else(|| Error::Parse(format!("payload has no integer \"{key}\"")))
}

impl Fixture {
    /// Checks the payload shape, the N cap and the provenance markers.
    pub fn validate(&self, opts: &Options) -> Result<()> {
        let keys: &[&str] = match self.kind {
            Kind::Series => &["series"],
            Kind::Pair | Kind::NormalizedPair => &["F", "G"],
            Kind::Weyl => &[],
        };
        for k in keys {
            let s = series_in(&self.payload, k)?;
            if s.N() > opts.n_cap {
                return Err(Error::NOverflow(s.N(), opts.n_cap));
            }
        }
        if self.kind == Kind::Weyl {
            int_in(&self.payload, "m0")?;
            int_in(&self.payload, "m")?;
        }
        for op in &self.ops {
            let o = Op::from_name(op).ok_or_else(|| Error::Parse(format!("{}: unknown op \"{op}\"", self.id)))?;
            if !o.applies_to(self.kind) {
                return Err(Error::Parse(format!("{}: op {op} does not apply to {:?}", self.id, self.kind)));
            }
        }
        for (op, e) in &self.expected {
            let o = Op::from_name(op).ok_or_else(|| Error::Parse(format!("{}: unknown op \"{op}\" in expected", self.id)))?;
            if !o.applies_to(self.kind) {
                return Err(Error::Parse(format!("{}: op {op} does not apply to {:?}", self.id, self.kind)));
            }
            if e.provenance == Provenance::Printed && e.citation.as_deref().is_none_or(str::is_empty) {
                return Err(Error::Parse(format!("{}: printed value for {op} needs a citation", self.id)));
            }
        }
        Ok(())
    }

    /// Whether the corpus runs `op` here.
    pub fn runs(&self, op: Op) -> bool {
        op.applies_to(self.kind) && (self.ops.iter().any(|o| o == op.name()) || self.expected.contains_key(op.name()))
    }
}

/// Reads every fixture below `paths`; ids must be unique.
pub fn load_fixtures(paths: &[PathBuf], opts: &Options) -> Result<Vec<Fixture>> {
    let mut files = Vec::new();
    for p in paths {
        collect_json(p, &mut files)?;
    }
    let mut out: Vec<Fixture> = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(|e| Error::Parse(format!("{}: {e}", f.display())))?;
        let fx: Fixture = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", f.display())))?;
        fx.validate(opts)?;
        out.push(fx);
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = out.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::Parse(format!("duplicate fixture id {}", w[0].id)));
    }
    Ok(out)
}

struct Outcome {
    result: Value,
    extra: Map<String, Value>,
    verdict: Verdict,
    floors: Value,
}

impl Outcome {
    fn new(result: Value) -> Outcome {
        Outcome { result, extra: Map::new(), verdict: Verdict::new(), floors: Value::Null }
    }
}

fn floors_of(s: &Series) -> Value {
    json!({"xFloor": s.x_floor().map(fmt_exp), "yFloor": s.y_floor()})
}

fn run_op(op: Op, fx: &Fixture, opts: &Options) -> Result<Outcome> {
    let d = opts.depth;
    let pl = &fx.payload;
    Ok(match op {
        Op::Bracket => {
            let (f, g) = (series_in(pl, "F")?, series_in(pl, "G")?);
            let br = crate::poisson::bracket(&f, &g)?;
            let j = jacobian_constant(&f, &g)?;
            let mut o = Outcome::new(json!(fmt_rat(&j)));
            o.floors = floors_of(&br);
            o.verdict.check("[F,G] is a constant above the floor", br.agrees_with(&Series::constant(br.space(), j.clone())), "");
            o
        }
        Op::Newton => {
            let f = series_in(pl, "series")?;
            let poly = newton_polygon(&f)?;
            let top = poly.top_vertex();
            let mut o = Outcome::new(json!([fmt_exp(top.0), top.1]));
            o.extra.insert("polygon".into(), poly.to_json());
            o.floors = floors_of(&f);
            o
        }
        Op::PrimeDegree => {
            let f = series_in(pl, "series")?;
            let mut o = Outcome::new(json!(prime_degree(&f)?.to_string()));
            o.floors = floors_of(&f);
            o
        }
        Op::Components => {
            let f = series_in(pl, "series")?;
            let p = prime_degree(&f)?.value().ok_or_else(|| Error::PreconditionFailed("prime degree is not finite".into()))?;
            let all = crate::newton::components(&f, p)?;
            let c0 = component(&f, p, crate::rat::Exp::default())?;
            let sum = all.values().fold(Series::zero(f.space()), |a, s| &a + s);
            let mut o = Outcome::new(serde_json::to_value(&c0).expect("series serializes"));
            o.extra.insert("p".into(), json!(fmt_exp(p)));
            o.extra.insert("count".into(), json!(all.len()));
            o.verdict.check("components sum to F", sum.agrees_with(&f), "");
            o.floors = floors_of(&f);
            o
        }
        Op::Expand => {
            let (e, f, target) = match fx.kind {
                Kind::Series => {
                    let f = series_in(pl, "series")?;
                    (expand_y_in_f(&f, d)?, f.clone(), Series::y(crate::series::Space::B))
                }
                _ => {
                    let (f, g) = (series_in(pl, "F")?, series_in(pl, "G")?);
                    (expand_g_in_f(&f, &g, d)?, f, g)
                }
            };
            let back = e.reexpand(&f)?;
            let mut o = Outcome::new(json!({"m": e.m, "n": e.n, "terms": e.coeffs.len()}));
            o.extra.insert("coefficients".into(), e.to_json());
            o.verdict.check("re-expansion agrees with the target", back.agrees_with(&target.in_space(crate::series::Space::B)?), "");
            o.floors = floors_of(&back);
            o
        }
        Op::R0 => {
            let (f, g) = (series_in(pl, "F")?, series_in(pl, "G")?);
            let r = compute_r0(&f, &g, d)?;
            let mut o = Outcome::new(serde_json::to_value(&r.r0).expect("series serializes"));
            o.extra.insert("report".into(), serde_json::to_value(&r).expect("report serializes"));
            o.verdict.check("[F<0>, R0] = J", r.bracket_ok, "");
            o.verdict.check("deg_y R0 in the allowed set", r.deg_y_ok, "");
            o.floors = floors_of(&r.r0);
            o
        }
        Op::Reduce => {
            let (f, g) = (series_in(pl, "F")?, series_in(pl, "G")?);
            let red = reduce_to_normal_form(&f, &g, DEFAULT_MAX_STEPS)?;
            let pr = &red.pair;
            let mut o = Outcome::new(json!({"m": pr.m, "n": pr.n, "N": pr.N, "J": fmt_rat(&pr.j), "steps": red.log.steps.len()}));
            o.extra.insert("reduction".into(), red.to_json());
            o.verdict.check("the log replays onto the input", red.replays(&f, &g)?, "");
            o.floors = floors_of(&pr.F);
            o
        }
        Op::Normalize => {
            let pair = NormalizedPair::from_pair(&series_in(pl, "F")?, &series_in(pl, "G")?)?;
            let hk = normalize_to_hk(&pair, d as u64)?;
            let mut o = Outcome::new(Value::Null);
            o.verdict.merge(hk.verdict.clone());
            o.verdict.merge(check_polynomiality(&pair, &hk.H, &hk.K, d as u64)?);
            o.result = match alpha_decompose(&hk) {
                Ok(dec) => {
                    o.extra.insert("decomposition".into(), dec.to_json());
                    json!({"alpha": fmt_exp(dec.alpha), "beta": dec.beta})
                }
                Err(e) => json!({"decomposition": e.code()}),
            };
            o.extra.insert("HK".into(), hk.to_json());
            o.floors = floors_of(&hk.K);
            o
        }
        Op::Weyl => {
            let (m0, m) = (int_in(pl, "m0")?, int_in(pl, "m")?);
            let sol = weyl::dixmier_vertex_solve(m0, m)?;
            let (a, b) = weyl::vertex_closed_form(m0, m);
            let mut o = Outcome::new(json!({"alpha": fmt_rat(&sol.alpha), "beta": fmt_rat(&sol.beta)}));
            o.verdict.check("alpha = m0 m / 2, beta = (1-m0)(1-m)/2", sol.alpha == a && sol.beta == b, "");
            o.verdict.merge(weyl::vertex_bracket_check(m0, m, d.min(8))?);
            o.floors = json!({"depth": d.min(8)});
            o
        }
        Op::Verify => unreachable!("verify has no fixture"),
    })
}

fn finish(id: &str, op: Op, out: Result<Outcome>, expected: Option<&Expected>, opts: &Options, start: Instant) -> Report {
    let mut values = Map::new();
    let mut verdict = Verdict::new();
    let mut floors = json!({"depth": opts.depth});
    match out {
        Ok(o) => {
            if let Some(e) = expected {
                let ok = matches_expected(&o.result, &e.value);
                verdict.check("expected value", ok, format!("{:?}", e.provenance));
            }
            verdict.merge(o.verdict);
            values.insert("result".into(), o.result);
            values.extend(o.extra);
            if let (Some(fo), Value::Object(m)) = (floors.as_object_mut(), o.floors) {
                fo.extend(m);
            }
        }
        Err(err) => {
            let want = expected.and_then(|e| e.value.get("error")).and_then(Value::as_str);
            verdict.check("expected error", want == Some(err.code()), err.to_string());
            values.insert("result".into(), json!({"error": err.code()}));
            values.insert("message".into(), json!(err.to_string()));
        }
    }
    if let Some(e) = expected {
        values.insert("expected".into(), serde_json::to_value(e).expect("expected serializes"));
    }
    values.insert("checks".into(), serde_json::to_value(&verdict.checks).expect("checks serialize"));
    Report {
        fixture_id: id.to_string(),
        op: op.name().to_string(),
        verdict: if verdict.pass() { "PASS" } else { "FAIL" }.to_string(),
        values: Value::Object(values),
        floors,
        timing_ms: start.elapsed().as_millis() as u64,
    }
}

/// Series are compared above the common floor, everything else exactly.
fn matches_expected(got: &Value, want: &Value) -> bool {
    let as_series = |v: &Value| serde_json::from_value::<Series>(v.clone()).ok();
    match (as_series(got), as_series(want)) {
        (Some(a), Some(b)) => a.agrees_with(&b) && a.space() == b.space(),
        _ => got == want,
    }
}

/// Runs `op` on one fixture.
pub fn run_fixture(op: Op, fx: &Fixture, opts: &Options) -> Report {
    let start = Instant::now();
    let out = run_op(op, fx, opts);
    finish(&fx.id, op, out, fx.expected.get(op.name()), opts, start)
}

/// The three program checks of the identity verifier.
pub fn verify_reports(opts: &Options) -> Vec<Report> {
    let runs: [(&str, fn() -> Verdict); 3] = [
        ("program-1-f1", verifier::verify_f1_vanishes),
        ("program-2-r-coefficients", verifier::verify_r_coefficients),
        ("program-3-tilde-r", verifier::verify_tilde_r),
    ];
    runs.into_iter()
        .map(|(id, f)| {
            let start = Instant::now();
            let v = f();
            let mut o = Outcome::new(json!(v.checks.iter().map(|c| (c.name.clone(), Value::String(c.detail.clone()))).collect::<Map<_, _>>()));
            o.verdict = v;
            finish(id, Op::Verify, Ok(o), None, opts, start)
        })
        .collect()
}

/// All reports of `ops` over the fixtures that list them, ordered by fixture
/// id then op.
pub fn run_all(ops: &[Op], fixtures: &[Fixture], opts: &Options) -> Vec<Report> {
    let jobs: Vec<(Op, &Fixture)> = fixtures.iter().flat_map(|f| ops.iter().filter(|o| f.runs(**o)).map(move |o| (*o, f))).collect();
    let mut reports: Vec<Report> = jobs.par_iter().map(|(op, f)| run_fixture(*op, f, opts)).collect();
    if ops.contains(&Op::Verify) {
        reports.extend(verify_reports(opts));
    }
    reports.sort_by(|a, b| (&a.fixture_id, Op::from_name(&a.op)).cmp(&(&b.fixture_id, Op::from_name(&b.op))));
    reports
}

/// Exit code for a finished run: 0 when every verdict passes, else 1.
pub fn exit_code(reports: &[Report]) -> i32 {
    if reports.iter().all(Report::pass) {
        0
    } else {
        1
    }
}
