//! Library side of the `kanto` command: each `cmd_*` loads its inputs,
//! calls into `kantorovich`, and returns a deterministic [`RunReport`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use kantorovich::behaviour::{
    certify, kleene_bounded, kleene_gfp, parse_state_str, reachable, trace_lower_bound, BehError, Certificate,
    CoalgebraModel, Kleene, TState,
};
use kantorovich::distlaw::{case_study_laws, determinize, law_suite as distlaw_suite, GVariant, LawOptions};
use kantorovich::monadlift::{hausdorff_directed, kantorovich_lp, MValue, MonadKind};
use kantorovich::polyfunctor::{counterexample, law_suite as poly_suite, Combination};
use kantorovich::quantale::{self, rat, QValue, Quantale, Rat};
use kantorovich::report::LawReport;
use kantorovich::vgraph::{Carrier, VGraph};
use kantorovich::galois;
use serde::Serialize;
use num_bigint::BigInt;
use num_traits::{One, Pow};
use serde_json::Value;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_REJECTED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;

/// Reachable determinized states beyond which `kleene` falls back to the
/// depth-bounded iteration.
pub const KLEENE_STATE_BUDGET: usize = 400;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("budget refusal: {0}")]
    Budget(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Budget(_) => EXIT_BUDGET,
            _ => EXIT_USAGE,
        }
    }
}

impl From<BehError> for CliError {
    fn from(e: BehError) -> Self {
        if e.is_budget() {
            CliError::Budget(e.to_string())
        } else {
            CliError::Failed(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Clone, Debug, Serialize)]
pub struct Options {
    pub grid: u32,
    pub max_words: usize,
    pub max_iters: usize,
    pub depth: usize,
    pub seed: u64,
    /// Run the distlaw suite with the non-prioritizing `g`.
    pub mutant: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { grid: 2, max_words: 10, max_iters: 1000, depth: 8, seed: 7, mutant: false }
    }
}

/// How a reported number relates to the exact quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Soundness {
    Exact,
    LowerBound,
    UpperBound,
}

impl fmt::Display for Soundness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Soundness::Exact => "exact",
            Soundness::LowerBound => "lower bound",
            Soundness::UpperBound => "upper bound",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub name: String,
    pub value: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ok: Option<bool>,
}

impl Row {
    fn new(name: impl Into<String>, value: impl fmt::Display) -> Self {
        Row { name: name.into(), value: value.to_string(), tag: None, expected: None, ok: None }
    }

    fn tag(mut self, t: impl fmt::Display) -> Self {
        self.tag = Some(t.to_string());
        self
    }

    fn expect(mut self, expected: impl Into<String>, ok: bool) -> Self {
        self.expected = Some(expected.into());
        self.ok = Some(ok);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: BTreeMap<String, Value>,
    pub results: Vec<Row>,
    pub notes: Vec<String>,
    pub verdict: String,
    pub exit_code: u8,
}

impl RunReport {
    fn new(command: impl Into<String>) -> Self {
        RunReport {
            command: command.into(),
            config: BTreeMap::new(),
            results: Vec::new(),
            notes: Vec::new(),
            verdict: String::new(),
            exit_code: EXIT_OK,
        }
    }

    fn config(mut self, k: &str, v: impl Serialize) -> Self {
        self.config.insert(k.into(), serde_json::to_value(v).expect("serializable"));
        self
    }

    fn finish_by_rows(mut self, what: &str) -> Self {
        let bad = self.results.iter().filter(|r| r.ok == Some(false)).count();
        if bad == 0 {
            self.verdict = format!("{}: all match", what);
            self.exit_code = EXIT_OK;
        } else {
            self.verdict = format!("{}: {} mismatch(es)", what, bad);
            self.exit_code = EXIT_REJECTED;
        }
        self
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("serializable")
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            serde_json::to_string_pretty(&self.to_json()).expect("serializable")
        } else {
            self.to_string()
        }
    }

    pub fn row(&self, name: &str) -> Option<&Row> {
        self.results.iter().find(|r| r.name == name)
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "command: {}", self.command)?;
        if !self.config.is_empty() {
            let cfg: Vec<String> = self.config.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
            writeln!(f, "config: {}", cfg.join(" "))?;
        }
        for r in &self.results {
            write!(f, "  {:<40} {}", r.name, r.value)?;
            if let Some(t) = &r.tag {
                write!(f, "  [{}]", t)?;
            }
            if let Some(e) = &r.expected {
                write!(f, "  expected {}", e)?;
            }
            match r.ok {
                Some(true) => write!(f, "  ok")?,
                Some(false) => write!(f, "  MISMATCH")?,
                None => {}
            }
            writeln!(f)?;
        }
        for n in &self.notes {
            writeln!(f, "  {}", n)?;
        }
        write!(f, "verdict: {}", self.verdict)
    }
}

// ---------------------------------------------------------------------------
// Inputs

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Parse { path: path.display().to_string(), msg: e.to_string() })
}

fn parse_json(path: &str, text: &str) -> CliResult<Value> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.into(),
        msg: format!("line {} column {}: {}", e.line(), e.column(), e),
    })
}

/// A finite V-graph with a pair of states, for the `lp` and `hausdorff`
/// methods: `{"quantale", "points", "distance": [[...]], "pair": {"lhs", "rhs"}}`.
#[derive(Clone, Debug)]
pub struct MetricInstance {
    pub graph: VGraph,
    pub pair: Option<(Value, Value)>,
}

impl MetricInstance {
    pub fn from_json(v: &Value) -> Result<Self, String> {
        let q: Quantale = serde_json::from_value(v.get("quantale").cloned().ok_or("missing quantale")?)
            .map_err(|e| e.to_string())?;
        let points: Vec<String> =
            serde_json::from_value(v.get("points").cloned().ok_or("missing points")?).map_err(|e| e.to_string())?;
        let rows: Vec<Vec<QValue>> =
            serde_json::from_value(v.get("distance").cloned().ok_or("missing distance")?).map_err(|e| e.to_string())?;
        let carrier = Carrier::new(points).map_err(|e| e.to_string())?;
        let graph = VGraph::new(q, carrier, rows).map_err(|e| e.to_string())?;
        let pair = v.get("pair").map(|p| (p.get("lhs").cloned().unwrap_or(Value::Null), p.get("rhs").cloned().unwrap_or(Value::Null)));
        Ok(MetricInstance { graph, pair })
    }
}

enum Loaded {
    Model(CoalgebraModel),
    Metric(MetricInstance),
}

fn load(path: &Path) -> CliResult<Loaded> {
    let p = path.display().to_string();
    let text = read(path)?;
    load_str(&p, &text)
}

fn load_str(p: &str, text: &str) -> CliResult<Loaded> {
    let v = parse_json(p, text)?;
    if v.get("distance").is_some() {
        MetricInstance::from_json(&v).map(Loaded::Metric).map_err(|msg| CliError::Parse { path: p.into(), msg })
    } else {
        CoalgebraModel::from_json(&v).map(Loaded::Model).map_err(|e| CliError::Parse { path: p.into(), msg: e.to_string() })
    }
}

fn split_pair(pair: &str) -> CliResult<(&str, &str)> {
    pair.split_once('|').ok_or_else(|| CliError::Usage(format!("--pair expects \"lhs|rhs\", got {:?}", pair)))
}

fn model_pair(m: &CoalgebraModel, pair: Option<&str>) -> CliResult<(TState, TState)> {
    let pair = pair.ok_or_else(|| CliError::Usage("--pair is required for this model".into()))?;
    let (l, r) = split_pair(pair)?;
    let parse = |s: &str| m.state_from_str(s).map_err(|e| CliError::Usage(format!("state {:?}: {}", s, e)));
    Ok((parse(l)?, parse(r)?))
}

fn metric_pair(inst: &MetricInstance, kind: MonadKind, pair: Option<&str>) -> CliResult<(TState, TState)> {
    let parse_s = |s: &str| parse_state_str(kind, s).map_err(|e| CliError::Usage(format!("state {:?}: {}", s, e)));
    let parse_v = |v: &Value| match v {
        Value::String(s) => parse_s(s),
        other => kantorovich::behaviour::parse_state(kind, other).map_err(|e| CliError::Usage(e.to_string())),
    };
    let (l, r) = match (pair, &inst.pair) {
        (Some(p), _) => {
            let (l, r) = split_pair(p)?;
            (parse_s(l)?, parse_s(r)?)
        }
        (None, Some((l, r))) => (parse_v(l)?, parse_v(r)?),
        (None, None) => return Err(CliError::Usage("--pair is required (the instance has no default pair)".into())),
    };
    for s in [&l, &r] {
        for x in s.support() {
            inst.graph.carrier().require(x).map_err(|e| CliError::Usage(e.to_string()))?;
        }
    }
    Ok((l, r))
}

// ---------------------------------------------------------------------------
// Commands

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Kleene,
    Trace,
    Lp,
    Hausdorff,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kleene" => Ok(Method::Kleene),
            "trace" => Ok(Method::Trace),
            "lp" => Ok(Method::Lp),
            "hausdorff" => Ok(Method::Hausdorff),
            _ => Err(format!("unknown method {:?} (kleene, trace, lp, hausdorff)", s)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Kleene => "kleene",
            Method::Trace => "trace",
            Method::Lp => "lp",
            Method::Hausdorff => "hausdorff",
        })
    }
}

pub fn cmd_distance(model: &Path, pair: Option<&str>, method: Method, opts: &Options) -> CliResult<RunReport> {
    let loaded = load(model)?;
    distance(loaded, &model.display().to_string(), pair, method, opts)
}

fn distance(loaded: Loaded, name: &str, pair: Option<&str>, method: Method, opts: &Options) -> CliResult<RunReport> {
    let mut rep = RunReport::new(format!("distance {} --method {}", name, method));
    match (method, loaded) {
        (Method::Lp, Loaded::Metric(inst)) => {
            let (p, q) = metric_pair(&inst, MonadKind::Subdist, pair)?;
            let (MValue::Dist(dp), MValue::Dist(dq)) = (&p, &q) else { unreachable!("subdist states") };
            let r = kantorovich_lp(&inst.graph, dp, dq).map_err(|e| CliError::Failed(e.to_string()))?;
            rep.results.push(Row::new(format!("K({}, {})", p, q), &r.value).tag(Soundness::Exact));
            if let Some(f) = &r.pricing {
                let names = inst.graph.carrier().elements();
                let pricing: Vec<String> = names.iter().zip(f).map(|(x, v)| format!("f({})={}", x, v)).collect();
                rep.notes.push(format!("optimal predicate: {}", pricing.join(" ")));
            }
        }
        (Method::Hausdorff, Loaded::Metric(inst)) => {
            let (p, q) = metric_pair(&inst, MonadKind::Powerset, pair)?;
            let (MValue::Set(sp), MValue::Set(sq)) = (&p, &q) else { unreachable!("powerset states") };
            let v = hausdorff_directed(&inst.graph, sp, sq).map_err(|e| CliError::Failed(e.to_string()))?;
            rep.results.push(Row::new(format!("H({}, {})", p, q), v).tag(Soundness::Exact));
        }
        (Method::Lp | Method::Hausdorff, Loaded::Model(_)) => {
            return Err(CliError::Usage(format!("method {} needs a metric instance (with a \"distance\" matrix)", method)))
        }
        (Method::Kleene | Method::Trace, Loaded::Metric(_)) => {
            return Err(CliError::Usage(format!("method {} needs a coalgebra model", method)))
        }
        (Method::Kleene, Loaded::Model(m)) => {
            rep = rep.config("max_iters", opts.max_iters).config("depth", opts.depth);
            let (p, q) = model_pair(&m, pair)?;
            let (k, tag) = kleene(&m, &p, &q, opts)?;
            rep.results.push(Row::new(format!("ν beh({}, {})", p, q), k.at(&p, &q)?).tag(tag));
            rep.notes.push(format!("{} states, {} iterations", k.graph.len(), k.iterations));
        }
        (Method::Trace, Loaded::Model(m)) => {
            rep = rep.config("max_words", opts.max_words);
            let (p, q) = model_pair(&m, pair)?;
            let t = trace_lower_bound(&m, &p, &q, opts.max_words)?;
            rep.results.push(Row::new(format!("ν beh({}, {})", p, q), &t.value).tag(Soundness::LowerBound));
            rep.notes.push(format!("{} words of length < {}; best word {:?}", t.words, opts.max_words, t.word.join("")));
        }
    }
    rep.verdict = "computed".into();
    Ok(rep)
}

/// Exact iteration when the reachable carrier is small; otherwise the
/// depth-bounded iteration, whose result is a lower bound.
fn kleene(m: &CoalgebraModel, p: &TState, q: &TState, opts: &Options) -> CliResult<(Kleene, Soundness)> {
    let seeds = [p.clone(), q.clone()];
    match reachable(m, &seeds, KLEENE_STATE_BUDGET) {
        Ok(det) => {
            let carrier: Vec<TState> = det.states().cloned().collect();
            let k = kleene_gfp(m, &det, &carrier, opts.max_iters)?;
            let tag = if k.converged { Soundness::Exact } else { Soundness::LowerBound };
            Ok((k, tag))
        }
        Err(e) if e.is_budget() => {
            let law = m.law()?;
            let det = determinize(&law, &m.transitions, &seeds, opts.depth, KLEENE_STATE_BUDGET)
                .map_err(|e| CliError::from(BehError::from(e)))?;
            Ok((kleene_bounded(m, &det, opts.max_iters)?, Soundness::LowerBound))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_certify(model: &Path, cert: &Path) -> CliResult<RunReport> {
    let Loaded::Model(m) = load(model)? else {
        return Err(CliError::Usage("certify needs a coalgebra model".into()));
    };
    let text = read(cert)?;
    let c = Certificate::parse(&m, &text).map_err(|e| CliError::Parse { path: cert.display().to_string(), msg: e.to_string() })?;
    certify_report(&m, &c, format!("certify {} {}", model.display(), cert.display()))
}

fn certify_report(m: &CoalgebraModel, c: &Certificate, command: String) -> CliResult<RunReport> {
    let v = certify(m, c)?;
    let mut rep = RunReport::new(command);
    for ch in &v.checks {
        rep.results.push(
            Row::new(format!("d({}, {})", ch.lhs, ch.rhs), &ch.candidate)
                .tag(format!("beh(u(d)) ≤ {}", ch.bound))
                .expect(format!("≥ {}", ch.bound), ch.ok),
        );
    }
    match &v.rejection {
        None => {
            rep.verdict = "accepted: the candidate bounds ν beh from above".into();
            rep.exit_code = EXIT_OK;
        }
        Some((p, q, why)) => {
            rep.verdict = format!("rejected at ({}, {}): {}", p, q, why);
            rep.exit_code = EXIT_REJECTED;
        }
    }
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Quantale,
    Galois,
    Polyfunctor,
    Distlaw,
}

impl std::str::FromStr for Scope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "quantale" => Ok(Scope::Quantale),
            "galois" => Ok(Scope::Galois),
            "polyfunctor" => Ok(Scope::Polyfunctor),
            "distlaw" => Ok(Scope::Distlaw),
            _ => Err(format!("unknown scope {:?} (quantale, galois, polyfunctor, distlaw)", s)),
        }
    }
}

pub fn cmd_laws(scope: Scope, opts: &Options) -> CliResult<RunReport> {
    let mut reports: Vec<LawReport> = Vec::new();
    let mut rep = RunReport::new(format!("laws {:?}", scope).to_lowercase());
    match scope {
        Scope::Quantale => reports.extend(Quantale::ALL.iter().map(|&q| quantale::law_suite(q))),
        Scope::Galois => reports.push(galois::law_suite(3)),
        Scope::Polyfunctor => reports.push(poly_suite(2)),
        Scope::Distlaw => {
            rep = rep.config("grid", opts.grid).config("seed", opts.seed).config("mutant", opts.mutant);
            let lo = LawOptions { grid: opts.grid, seed: opts.seed, ..LawOptions::default() };
            for (_, law) in case_study_laws() {
                let law = if opts.mutant { law.with_g(GVariant::AlwaysLeft) } else { law };
                reports.push(distlaw_suite(&law, &lo));
            }
        }
    }
    for r in &reports {
        for c in &r.checks {
            let name = format!("{}: {}", r.suite, c.name);
            let row = match &c.skipped {
                Some(why) => Row::new(name, format!("skipped ({})", why)),
                None => Row::new(name, format!("{} cases", c.cases)).expect("0 failures", c.passed()),
            };
            rep.results.push(row);
            if let Some(ce) = &c.counterexample {
                rep.notes.push(format!("{}: {}: counterexample {}", r.suite, c.name, ce));
            }
        }
    }
    Ok(rep.finish_by_rows("law suites"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Example {
    Transport,
    Counter(Combination),
    Probchain,
    Exceptions,
}

impl std::str::FromStr for Example {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "transport" => Ok(Example::Transport),
            "probchain" => Ok(Example::Probchain),
            "exceptions" => Ok(Example::Exceptions),
            other => other
                .parse::<Combination>()
                .map(Example::Counter)
                .map_err(|_| format!("unknown example {:?} (transport, pp, pd, dp, dd, probchain, exceptions)", s)),
        }
    }
}

pub const TRANSPORT: &str = include_str!("../../../fixtures/transport.json");
pub const PROBCHAIN: &str = include_str!("../../../fixtures/probchain.json");
pub const PROBCHAIN_CERT: &str = include_str!("../../../fixtures/probchain.cert.json");
pub const PROBCHAIN_REV_CERT: &str = include_str!("../../../fixtures/probchain-rev.cert.json");
pub const EXCEPTIONS: &str = include_str!("../../../fixtures/exceptions.json");
pub const EXCEPTIONS_CERT: &str = include_str!("../../../fixtures/exceptions.cert.json");

fn q(s: &str) -> QValue {
    s.parse().expect("literal")
}

fn cmp_row(name: &str, got: &QValue, rel: &str, want: &str) -> Row {
    let w = q(want);
    let ok = match rel {
        "=" => *got == w,
        "≥" => got.numeric() >= w.numeric(),
        "≤" => got.numeric() <= w.numeric(),
        _ => unreachable!("relation"),
    };
    Row::new(name, got).expect(format!("{} {}", rel, want), ok)
}

pub fn cmd_repro(example: Example, opts: &Options) -> CliResult<RunReport> {
    let mut rep = RunReport::new(format!(
        "repro {}",
        match example {
            Example::Transport => "transport".to_string(),
            Example::Counter(c) => c.to_string(),
            Example::Probchain => "probchain".into(),
            Example::Exceptions => "exceptions".into(),
        }
    ));
    match example {
        Example::Transport => {
            let Loaded::Metric(inst) = load_str("transport.json", TRANSPORT)? else { unreachable!("metric fixture") };
            let (p, qq) = metric_pair(&inst, MonadKind::Subdist, None)?;
            let (MValue::Dist(dp), MValue::Dist(dq)) = (&p, &qq) else { unreachable!("subdist states") };
            let r = kantorovich_lp(&inst.graph, dp, dq).map_err(|e| CliError::Failed(e.to_string()))?;
            rep.results.push(cmp_row("transport distance", &r.value, "=", "21/10"));
            let f = vec![rat(0, 1), rat(3, 1), rat(5, 1)];
            let feasible = r.problem.violation(&f).is_none();
            rep.results.push(Row::new("f(A)=0 f(B)=3 f(C)=5 feasible", feasible).expect("true", feasible));
            let obj = QValue::num(r.problem.objective_value(&f));
            rep.results.push(cmp_row("objective at f", &obj, "=", "21/10"));
        }
        Example::Counter(c) => {
            let ce = counterexample(c).map_err(|e| CliError::Failed(e.to_string()))?;
            let (lrel, lwant, rrel, rwant) = match c {
                Combination::PP => ("=", "1", "=", "0"),
                Combination::PD => ("≥", "1/2", "=", "0"),
                Combination::DP => ("=", "1", "≤", "1/2"),
                Combination::DD => ("≥", "1/2", "=", "0"),
            };
            rep.notes.push(format!("terms: {}  vs  {}", ce.lhs_term, ce.rhs_term));
            rep.notes.push(format!(
                "methods: inner {:?}, outer {:?}, composite {:?}",
                ce.methods.0, ce.methods.1, ce.methods.2
            ));
            rep.results.push(cmp_row("K_outer(K_inner(d)) (lhs)", &ce.lhs, lrel, lwant));
            rep.results.push(cmp_row("K_composite(d) (rhs)", &ce.rhs, rrel, rwant));
            rep.results.push(cmp_row("witness predicate bound", &ce.witness, "≥", lwant));
            rep.results.push(Row::new("witness non-expansive", ce.witness_non_expansive).expect("true", ce.witness_non_expansive));
        }
        Example::Probchain => {
            let Loaded::Model(m) = load_str("probchain.json", PROBCHAIN)? else { unreachable!("model fixture") };
            let x = m.state_from_str("x")?;
            let y = m.state_from_str("y")?;
            for (label, doc) in [("certificate (x, y)", PROBCHAIN_CERT), ("certificate (y, x)", PROBCHAIN_REV_CERT)] {
                let c = Certificate::parse(&m, doc)?;
                let v = certify(&m, &c)?;
                rep.results.push(Row::new(label, if v.accepted { "accepted" } else { "rejected" }).expect("accepted", v.accepted));
            }
            let fwd = trace_lower_bound(&m, &x, &y, opts.max_words)?;
            let rev = trace_lower_bound(&m, &y, &x, opts.max_words)?;
            rep = rep.config("max_words", opts.max_words);
            rep.results.push(cmp_row("trace bound (x, y)", &fwd.value, "=", "0"));
            let pow = Rat::from_integer(BigInt::from(2u8).pow(opts.max_words as u32));
            let expected = QValue::num((&pow - Rat::one()) / &pow - rat(1, 2));
            let ok = rev.value == expected;
            rep.results.push(Row::new("trace bound (y, x)", &rev.value).expect(format!("= {}", expected), ok));
            rep.notes.push("ν beh(δx, δy) = 0 and ν beh(δy, δx) ∈ [trace bound, 1/2]".into());
        }
        Example::Exceptions => {
            let Loaded::Model(m) = load_str("exceptions.json", EXCEPTIONS)? else { unreachable!("model fixture") };
            let p = m.state_from_str("{x0,y0}")?;
            let z = m.state_from_str("{z0}")?;
            let (k, tag) = kleene(&m, &p, &z, opts)?;
            rep.results.push(cmp_row("kleene ν beh({x0,y0}, {z0})", &k.at(&p, &z)?, "=", "1/4").tag(tag));
            let c = Certificate::parse(&m, EXCEPTIONS_CERT)?;
            let v = certify(&m, &c)?;
            rep.results.push(Row::new("certificate", if v.accepted { "accepted" } else { "rejected" }).expect("accepted", v.accepted));
            let t = trace_lower_bound(&m, &p, &z, 5)?;
            rep.results.push(cmp_row("trace bound, words of length < 5", &t.value, "=", "1/4").tag(Soundness::LowerBound));
        }
    }
    Ok(rep.finish_by_rows("reproduction"))
}
