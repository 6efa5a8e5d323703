//! Behavioural distances of coalgebras `c : X → FTX`: the behaviour map
//! `beh = c#* ∘ F̄` on the determinized system, its greatest fixpoint by
//! Kleene iteration, trace-based lower bounds, and certificates that prove
//! upper bounds by a post-fixpoint up to the monad's up-to function.
//!
//! Numerically (⊑ is reversed numeric order) Kleene iterates and trace
//! bounds approach `ν beh` from below, and accepted certificates bound it
//! from above.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::One;
use serde_json::{json, Value};
use thiserror::Error;

use crate::distlaw::{determinize, DetCoalgebra, DistLaw};
use crate::monadlift::{ev_monad, expectation, hausdorff_closed, MValue, MonadError, MonadKind, SubDist};
use crate::polyfunctor::{lift_terms, Atom, ConstDomain, FTerm, FunctorExpr, PolyError};
use crate::quantale::{parse_rat, QValue, Quantale, QuantaleError, Rat};
use crate::vgraph::{Carrier, VGraph, VGraphError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehError {
    #[error("model: {0}")]
    Model(String),
    #[error("certificate: {0}")]
    Certificate(String),
    #[error("state {0} is not determinized")]
    Unexplored(String),
    #[error("carrier is not closed under successors: {0} is missing")]
    NotClosed(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Monad(#[from] MonadError),
    #[error(transparent)]
    Quantale(#[from] QuantaleError),
    #[error(transparent)]
    Graph(#[from] VGraphError),
}

impl BehError {
    /// True for refusals caused by a size budget.
    pub fn is_budget(&self) -> bool {
        matches!(self, BehError::Budget(_) | BehError::Poly(PolyError::Budget(_)))
    }
}

pub type BResult<T> = Result<T, BehError>;

/// A state of the determinized system: an element of `TX`.
pub type TState = MValue<String>;

/// Default bound on determinized states and enumerated witnesses.
pub const STATE_BUDGET: usize = 100_000;

/// The recognized shapes that admit a trace characterization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `V × Id^A`
    Machine(Vec<String>),
    /// `V + Id^A`
    Exception(Vec<String>),
    Other,
}

/// A coalgebra `c : X → FTX`.
#[derive(Clone, Debug)]
pub struct CoalgebraModel {
    pub quantale: Quantale,
    pub functor: FunctorExpr,
    pub monad: MonadKind,
    pub states: Carrier,
    pub transitions: BTreeMap<String, FTerm<TState>>,
}

impl CoalgebraModel {
    pub fn new(
        quantale: Quantale,
        functor: FunctorExpr,
        monad: MonadKind,
        states: Carrier,
        transitions: BTreeMap<String, FTerm<TState>>,
    ) -> BResult<Self> {
        let m = CoalgebraModel { quantale, functor, monad, states, transitions };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> BResult<()> {
        self.functor.validate()?;
        self.functor.check_quantale(self.quantale)?;
        self.law()?;
        for x in self.states.elements() {
            let t = self.transitions.get(x).ok_or_else(|| BehError::Model(format!("state {} has no transition", x)))?;
            t.check(&self.functor)?;
            for s in t.payloads() {
                if s.kind() != self.monad {
                    return Err(BehError::Model(format!("state {}: successor {} is not a {} value", x, s, self.monad)));
                }
                for y in s.support() {
                    self.states.require(y)?;
                }
            }
            check_constants(t, self.quantale)?;
        }
        if let Some(x) = self.transitions.keys().find(|x| !self.states.contains(x)) {
            return Err(BehError::Model(format!("transition for unknown state {}", x)));
        }
        Ok(())
    }

    pub fn law(&self) -> BResult<DistLaw> {
        Ok(DistLaw::new(self.functor.clone(), self.monad, self.quantale)?)
    }

    pub fn shape(&self) -> Shape {
        let labels_of = |f: &FunctorExpr| match f {
            FunctorExpr::Pow { labels, body } if **body == FunctorExpr::Id => Some(labels.clone()),
            _ => None,
        };
        let is_values = |f: &FunctorExpr| matches!(f, FunctorExpr::Const { domain: ConstDomain::Values, .. });
        match &self.functor {
            FunctorExpr::Prod(fs) if fs.len() == 2 && is_values(&fs[0]) => {
                labels_of(&fs[1]).map(Shape::Machine).unwrap_or(Shape::Other)
            }
            FunctorExpr::Coprod(l, r) if is_values(l) => labels_of(r).map(Shape::Exception).unwrap_or(Shape::Other),
            _ => Shape::Other,
        }
    }

    /// Parses a model document (see the crate README for the format).
    pub fn from_json(v: &Value) -> BResult<Self> {
        let field = |k: &str| v.get(k).ok_or_else(|| BehError::Model(format!("missing field {:?}", k)));
        let quantale: Quantale =
            serde_json::from_value(field("quantale")?.clone()).map_err(|e| BehError::Model(e.to_string()))?;
        let functor = FunctorExpr::from_json(field("functor")?)?;
        let monad: MonadKind = serde_json::from_value(field("monad")?.clone()).map_err(|e| BehError::Model(e.to_string()))?;
        let names: Vec<String> =
            serde_json::from_value(field("states")?.clone()).map_err(|e| BehError::Model(e.to_string()))?;
        let states = Carrier::new(names)?;
        if let Some(labels) = v.get("labels") {
            let labels: Vec<String> = serde_json::from_value(labels.clone()).map_err(|e| BehError::Model(e.to_string()))?;
            let declared = functor_labels(&functor);
            if !declared.is_empty() && labels != declared {
                return Err(BehError::Model(format!("labels {:?} differ from the functor's {:?}", labels, declared)));
            }
        }
        let outputs = v.get("outputs").and_then(|o| o.as_object());
        let trans = field("transitions")?.as_object().ok_or_else(|| BehError::Model("transitions must be an object".into()))?;
        let mut transitions = BTreeMap::new();
        for (x, t) in trans {
            let doc = match outputs.and_then(|o| o.get(x)) {
                Some(out) => json!([out, t]),
                None => t.clone(),
            };
            let mut parse = |p: &Value| -> Result<TState, PolyError> {
                parse_state(monad, p).map_err(|e| PolyError::Json(e.to_string()))
            };
            let term = FTerm::from_json(&functor, &doc, &mut parse)
                .map_err(|e| BehError::Model(format!("transition of {}: {}", x, e)))?;
            transitions.insert(x.clone(), term);
        }
        CoalgebraModel::new(quantale, functor, monad, states, transitions)
    }

    pub fn parse(s: &str) -> BResult<Self> {
        let v: Value = serde_json::from_str(s)
            .map_err(|e| BehError::Model(format!("line {} column {}: {}", e.line(), e.column(), e)))?;
        CoalgebraModel::from_json(&v)
    }

    /// Parses and validates a `TX` state.
    pub fn state(&self, v: &Value) -> BResult<TState> {
        let s = parse_state(self.monad, v)?;
        self.check_state(&s)?;
        Ok(s)
    }

    /// Parses a state written as `{x0,y0}` (powerset) or `1/2·x + 1/2·x'`
    /// (subdistributions; a bare name is its Dirac distribution).
    pub fn state_from_str(&self, s: &str) -> BResult<TState> {
        let st = parse_state_str(self.monad, s)?;
        self.check_state(&st)?;
        Ok(st)
    }

    fn check_state(&self, s: &TState) -> BResult<()> {
        for x in s.support() {
            self.states.require(x)?;
        }
        Ok(())
    }

    pub fn state_json(&self, s: &TState) -> Value {
        state_to_json(s)
    }
}

fn check_constants(t: &FTerm<TState>, q: Quantale) -> BResult<()> {
    match t {
        FTerm::Const(Atom::Value(v)) => Ok(q.check(v)?),
        FTerm::Const(_) | FTerm::Id(_) => Ok(()),
        FTerm::Tuple(ts) => ts.iter().try_for_each(|t| check_constants(t, q)),
        FTerm::Inl(t) | FTerm::Inr(t) => check_constants(t, q),
        FTerm::M(m) => m.support().into_iter().try_for_each(|t| check_constants(t, q)),
    }
}

fn functor_labels(f: &FunctorExpr) -> Vec<String> {
    match f {
        FunctorExpr::Pow { labels, .. } => labels.clone(),
        FunctorExpr::Prod(fs) => fs.iter().flat_map(functor_labels).collect(),
        FunctorExpr::Coprod(l, r) => {
            let mut v = functor_labels(l);
            v.extend(functor_labels(r));
            v
        }
        FunctorExpr::Monad(_, b) => functor_labels(b),
        _ => Vec::new(),
    }
}

/// Powerset states are arrays of names; subdistributions are objects
/// `{name: "p/q"}`; a bare name denotes the unit.
pub fn parse_state(kind: MonadKind, v: &Value) -> BResult<TState> {
    let bad = || BehError::Model(format!("cannot read a {} state from {}", kind, v));
    match (kind, v) {
        (_, Value::String(x)) => Ok(MValue::unit(kind, x.clone())),
        (MonadKind::Powerset, Value::Array(a)) => Ok(MValue::Set(
            a.iter().map(|x| x.as_str().map(String::from).ok_or_else(bad)).collect::<BResult<_>>()?,
        )),
        (MonadKind::Powerset, Value::Object(o)) if o.contains_key("members") => parse_state(kind, &o["members"]),
        (MonadKind::Subdist, Value::Object(o)) => {
            let weights = o.get("weights").and_then(|w| w.as_object()).unwrap_or(o);
            let pairs = weights
                .iter()
                .map(|(x, w)| {
                    let w = w.as_str().map(|s| s.to_string()).unwrap_or_else(|| w.to_string());
                    Ok((x.clone(), parse_rat(&w)?))
                })
                .collect::<BResult<Vec<_>>>()?;
            Ok(MValue::Dist(SubDist::new(pairs)?))
        }
        _ => Err(bad()),
    }
}

pub fn parse_state_str(kind: MonadKind, s: &str) -> BResult<TState> {
    let s = s.trim();
    match kind {
        MonadKind::Powerset => {
            let inner = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')).unwrap_or(s);
            Ok(MValue::Set(
                inner.split(',').map(|x| x.trim()).filter(|x| !x.is_empty()).map(String::from).collect(),
            ))
        }
        MonadKind::Subdist => {
            let inner = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')).unwrap_or(s);
            let mut pairs = Vec::new();
            for part in inner.split('+').map(|p| p.trim()).filter(|p| !p.is_empty()) {
                let (w, x) = match part.find(['·', '*']) {
                    Some(i) => {
                        let sep = part[i..].chars().next().expect("found").len_utf8();
                        (parse_rat(part[..i].trim())?, part[i + sep..].trim().to_string())
                    }
                    None => match part.split_once(char::is_whitespace) {
                        Some((w, x)) if parse_rat(w).is_ok() => (parse_rat(w)?, x.trim().to_string()),
                        _ => (Rat::one(), part.to_string()),
                    },
                };
                pairs.push((x, w));
            }
            Ok(MValue::Dist(SubDist::new(pairs)?))
        }
    }
}

pub fn state_to_json(s: &TState) -> Value {
    match s {
        MValue::Set(m) => json!(m),
        MValue::Dist(d) => {
            let o: serde_json::Map<String, Value> = d.iter().map(|(x, w)| (x.clone(), json!(w.to_string()))).collect();
            Value::Object(o)
        }
    }
}

// ---------------------------------------------------------------------------
// beh and its fixpoint

/// `beh(d)(p, q)`: the closed-form lifting of `F` at `(c#(p), c#(q))`, with
/// `d` at the identity positions.
pub fn beh_apply(
    model: &CoalgebraModel,
    det: &DetCoalgebra,
    d: &mut dyn FnMut(&TState, &TState) -> BResult<QValue>,
    p: &TState,
    q: &TState,
) -> BResult<QValue> {
    let sp = det.get(p).ok_or_else(|| BehError::Unexplored(p.to_string()))?;
    let sq = det.get(q).ok_or_else(|| BehError::Unexplored(q.to_string()))?;
    let mut err = None;
    let v = lift_terms(&model.functor, model.quantale, sp, sq, &mut |a: &TState, b: &TState| {
        d(a, b).map_err(|e| {
            let msg = e.to_string();
            err = Some(e);
            PolyError::Unsupported(msg)
        })
    });
    match (v, err) {
        (_, Some(e)) => Err(e),
        (v, None) => Ok(v?),
    }
}

/// Result of a Kleene iteration.
#[derive(Clone, Debug)]
pub struct Kleene {
    pub graph: VGraph,
    pub iterations: usize,
    /// Exact stabilization. Otherwise the last iterate is only a numeric
    /// lower bound on `ν beh`.
    pub converged: bool,
}

impl Kleene {
    pub fn at(&self, p: &TState, q: &TState) -> BResult<QValue> {
        Ok(self.graph.at(&p.to_string(), &q.to_string())?.clone())
    }
}

/// Determinizes from `seeds` until no new states appear.
pub fn reachable(model: &CoalgebraModel, seeds: &[TState], budget: usize) -> BResult<DetCoalgebra> {
    let det = determinize(&model.law()?, &model.transitions, seeds, usize::MAX, budget).map_err(|e| match e {
        PolyError::Budget(m) => BehError::Budget(m),
        other => BehError::Poly(other),
    })?;
    Ok(det)
}

/// `d_0 = ⊤`, `d_{n+1} = beh(d_n)` on a successor-closed carrier.
pub fn kleene_gfp(model: &CoalgebraModel, det: &DetCoalgebra, carrier: &[TState], max_iters: usize) -> BResult<Kleene> {
    let set: BTreeSet<&TState> = carrier.iter().collect();
    for s in carrier {
        let succ = det.get(s).ok_or_else(|| BehError::Unexplored(s.to_string()))?;
        if let Some(m) = succ.payloads().into_iter().find(|m| !set.contains(m)) {
            return Err(BehError::NotClosed(m.to_string()));
        }
    }
    iterate(model, det, carrier, &BTreeSet::new(), max_iters)
}

/// Kleene iteration on everything explored in `det`, holding pairs that
/// involve unexpanded frontier states at ⊤. Every iterate (and the limit)
/// is a numeric lower bound on `ν beh`.
pub fn kleene_bounded(model: &CoalgebraModel, det: &DetCoalgebra, max_iters: usize) -> BResult<Kleene> {
    let mut carrier: Vec<TState> = det.states().cloned().collect();
    carrier.extend(det.frontier.iter().cloned());
    iterate(model, det, &carrier, &det.frontier, max_iters)
}

fn iterate(
    model: &CoalgebraModel,
    det: &DetCoalgebra,
    carrier: &[TState],
    frozen: &BTreeSet<TState>,
    max_iters: usize,
) -> BResult<Kleene> {
    let q = model.quantale;
    let names = Carrier::new(carrier.iter().map(|s| s.to_string()))?;
    let index: HashMap<&TState, usize> = carrier.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let n = carrier.len();
    let mut d = vec![vec![q.top(); n]; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let mut next = d.clone();
        for i in 0..n {
            if frozen.contains(&carrier[i]) {
                continue;
            }
            for j in 0..n {
                if frozen.contains(&carrier[j]) {
                    continue;
                }
                let cur = &d;
                next[i][j] = beh_apply(
                    model,
                    det,
                    &mut |a: &TState, b: &TState| {
                        let (ia, ib) = (index.get(a), index.get(b));
                        match (ia, ib) {
                            (Some(&ia), Some(&ib)) => Ok(cur[ia][ib].clone()),
                            _ => Err(BehError::NotClosed(format!("{} / {}", a, b))),
                        }
                    },
                    &carrier[i],
                    &carrier[j],
                )?;
            }
        }
        iterations += 1;
        if next == d {
            converged = true;
            break;
        }
        d = next;
    }
    Ok(Kleene { graph: VGraph::new(q, names, d)?, iterations, converged })
}

// ---------------------------------------------------------------------------
// Trace lower bounds

/// The best per-word distance among words of length `< max_len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceBound {
    pub value: QValue,
    pub word: Vec<String>,
    pub words: usize,
}

fn words(labels: &[String], max_len: usize, budget: usize) -> BResult<Vec<Vec<String>>> {
    let mut all = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 1..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for a in labels {
                let mut v: Vec<String> = w.clone();
                v.push(a.clone());
                next.push(v);
            }
        }
        all.extend(next.iter().cloned());
        if all.len() > budget {
            return Err(BehError::Budget(format!("more than {} words", budget)));
        }
        layer = next;
    }
    Ok(all)
}

/// `sup_w d_w(p, q)` over words of length `< max_len`: the per-word trace
/// difference for machine-type models, and the exception-count distance
/// `d^E_w` for exception-type powerset models. A numeric lower bound on
/// `ν beh` that is non-decreasing in `max_len`.
pub fn trace_lower_bound(model: &CoalgebraModel, p: &TState, q: &TState, max_len: usize) -> BResult<TraceBound> {
    model.check_state(p)?;
    model.check_state(q)?;
    let quant = model.quantale;
    let ws = words(&labels_for_trace(model)?, max_len.max(1), STATE_BUDGET)?;
    let mut best = TraceBound { value: quant.top(), word: Vec::new(), words: ws.len() };
    let mut per_word: Box<dyn FnMut(&[String]) -> BResult<QValue>> = match model.shape() {
        Shape::Machine(labels) => {
            let mut memo: HashMap<(String, Vec<String>), QValue> = HashMap::new();
            let m = model.clone();
            Box::new(move |w: &[String]| {
                let tp = lift_trace(&m, &labels, &mut memo, p, w)?;
                let tq = lift_trace(&m, &labels, &mut memo, q, w)?;
                Ok(quant.residuation(&tp, &tq)?)
            })
        }
        Shape::Exception(labels) if model.monad == MonadKind::Powerset => {
            let m = model.clone();
            Box::new(move |w: &[String]| exception_distance(&m, &labels, p, q, w))
        }
        _ => {
            return Err(BehError::Unsupported(format!(
                "no trace characterization for {} with {}",
                model.functor, model.monad
            )))
        }
    };
    for w in &ws {
        let v = per_word(w)?;
        if quant.leq(&v, &best.value)? && v != best.value {
            best.value = v;
            best.word = w.clone();
        }
    }
    Ok(best)
}

fn labels_for_trace(model: &CoalgebraModel) -> BResult<Vec<String>> {
    match model.shape() {
        Shape::Machine(l) | Shape::Exception(l) => Ok(l),
        Shape::Other => Err(BehError::Unsupported(format!("no trace characterization for {}", model.functor))),
    }
}

/// `tr_x(w)` for a single state of a machine-type model.
fn state_trace(
    model: &CoalgebraModel,
    labels: &[String],
    memo: &mut HashMap<(String, Vec<String>), QValue>,
    x: &str,
    w: &[String],
) -> BResult<QValue> {
    let key = (x.to_string(), w.to_vec());
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    let t = &model.transitions[x];
    let (out, succ) = match t {
        FTerm::Tuple(parts) => match (&parts[0], &parts[1]) {
            (FTerm::Const(Atom::Value(v)), FTerm::Tuple(s)) => (v.clone(), s),
            _ => return Err(BehError::Model(format!("state {} is not machine-shaped", x))),
        },
        _ => return Err(BehError::Model(format!("state {} is not machine-shaped", x))),
    };
    let v = match w.split_first() {
        None => out,
        Some((a, rest)) => {
            let i = labels.iter().position(|l| l == a).expect("word over labels");
            let next = match &succ[i] {
                FTerm::Id(s) => s,
                _ => return Err(BehError::Model(format!("state {} is not machine-shaped", x))),
            };
            lift_trace(model, labels, memo, next, rest)?
        }
    };
    memo.insert(key, v.clone());
    Ok(v)
}

/// `tr_s(w) = ev_T(T tr_(·)(w)(s))`.
fn lift_trace(
    model: &CoalgebraModel,
    labels: &[String],
    memo: &mut HashMap<(String, Vec<String>), QValue>,
    s: &TState,
    w: &[String],
) -> BResult<QValue> {
    let vals = s.try_map(|x| state_trace(model, labels, memo, x, w))?;
    Ok(ev_monad(model.quantale, &vals)?)
}

/// `(ec(X, w), sup E(X, w))`, or `None` when no prefix of `w` raises.
fn exception_count(model: &CoalgebraModel, labels: &[String], start: &TState, w: &[String]) -> BResult<Option<(usize, QValue)>> {
    let MValue::Set(mut cur) = start.clone() else {
        return Err(BehError::Unsupported("exception traces need powerset states".into()));
    };
    let q = model.quantale;
    for k in 0..=w.len() {
        let mut raised = Vec::new();
        let mut next = BTreeSet::new();
        for x in &cur {
            match &model.transitions[x] {
                FTerm::Inl(v) => match &**v {
                    FTerm::Const(Atom::Value(v)) => raised.push(v.clone()),
                    _ => return Err(BehError::Model(format!("state {} is not exception-shaped", x))),
                },
                FTerm::Inr(s) if k < w.len() => {
                    let i = labels.iter().position(|l| *l == w[k]).expect("word over labels");
                    match &**s {
                        FTerm::Tuple(ts) => match &ts[i] {
                            FTerm::Id(MValue::Set(ys)) => next.extend(ys.iter().cloned()),
                            _ => return Err(BehError::Model(format!("state {} is not exception-shaped", x))),
                        },
                        _ => return Err(BehError::Model(format!("state {} is not exception-shaped", x))),
                    }
                }
                FTerm::Inr(_) => {}
                _ => return Err(BehError::Model(format!("state {} is not exception-shaped", x))),
            }
        }
        if !raised.is_empty() {
            return Ok(Some((k, q.meet(raised.iter())?)));
        }
        cur = next;
    }
    Ok(None)
}

/// `d^E_w(X1, X2)`.
fn exception_distance(model: &CoalgebraModel, labels: &[String], x1: &TState, x2: &TState, w: &[String]) -> BResult<QValue> {
    let q = model.quantale;
    let e1 = exception_count(model, labels, x1, w)?;
    let e2 = exception_count(model, labels, x2, w)?;
    Ok(match (e1, e2) {
        (_, None) => q.top(),
        (None, Some(_)) => q.bottom(),
        (Some((k1, s1)), Some((k2, s2))) => {
            if k1 == k2 {
                q.residuation(&s1, &s2)?
            } else if k1 > k2 {
                q.bottom()
            } else {
                q.top()
            }
        }
    })
}

// ---------------------------------------------------------------------------
// Certificates

/// An element of `T(TX × TX)` decomposing a pair of states.
pub type Witness = MValue<(TState, TState)>;

/// A sparse candidate distance on `TX` (default ⊥ off the support) with
/// decomposition witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub entries: BTreeMap<(TState, TState), QValue>,
    pub default: QValue,
    pub witnesses: BTreeMap<(TState, TState), Vec<Witness>>,
}

impl Certificate {
    pub fn new(quantale: Quantale) -> Self {
        Certificate { entries: BTreeMap::new(), default: quantale.bottom(), witnesses: BTreeMap::new() }
    }

    /// `d(p, q)`.
    pub fn value(&self, p: &TState, q: &TState) -> QValue {
        self.entries.get(&(p.clone(), q.clone())).cloned().unwrap_or_else(|| self.default.clone())
    }

    pub fn from_json(model: &CoalgebraModel, v: &Value) -> BResult<Self> {
        let bad = |m: String| BehError::Certificate(m);
        let mut cert = Certificate::new(model.quantale);
        if let Some(d) = v.get("default") {
            cert.default = serde_json::from_value(d.clone()).map_err(|e| bad(e.to_string()))?;
            model.quantale.check(&cert.default)?;
        }
        let side = |e: &Value, k: &str| -> BResult<TState> {
            model.state(e.get(k).ok_or_else(|| bad(format!("entry without {:?}", k)))?)
        };
        for e in v.get("entries").and_then(|x| x.as_array()).ok_or_else(|| bad("missing entries".into()))? {
            let value: QValue = serde_json::from_value(e.get("value").cloned().unwrap_or(Value::Null))
                .map_err(|err| bad(format!("entry value: {}", err)))?;
            model.quantale.check(&value)?;
            let key = (side(e, "lhs")?, side(e, "rhs")?);
            if cert.entries.insert(key.clone(), value).is_some() {
                return Err(bad(format!("duplicate entry ({}, {})", key.0, key.1)));
            }
        }
        for w in v.get("witnesses").and_then(|x| x.as_array()).into_iter().flatten() {
            let key = (side(w, "lhs")?, side(w, "rhs")?);
            let parts = w.get("parts").and_then(|p| p.as_array()).ok_or_else(|| bad("witness without parts".into()))?;
            let witness = match model.monad {
                MonadKind::Powerset => MValue::Set(
                    parts.iter().map(|p| Ok((side(p, "lhs")?, side(p, "rhs")?))).collect::<BResult<_>>()?,
                ),
                MonadKind::Subdist => {
                    let pairs = parts
                        .iter()
                        .map(|p| {
                            let w = p.get("weight").and_then(|w| w.as_str()).ok_or_else(|| bad("part without weight".into()))?;
                            Ok(((side(p, "lhs")?, side(p, "rhs")?), parse_rat(w)?))
                        })
                        .collect::<BResult<Vec<_>>>()?;
                    MValue::Dist(SubDist::new(pairs)?)
                }
            };
            cert.witnesses.entry(key).or_default().push(witness);
        }
        Ok(cert)
    }

    pub fn parse(model: &CoalgebraModel, s: &str) -> BResult<Self> {
        let v: Value = serde_json::from_str(s)
            .map_err(|e| BehError::Certificate(format!("line {} column {}: {}", e.line(), e.column(), e)))?;
        Certificate::from_json(model, &v)
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|((p, q), v)| json!({"lhs": state_to_json(p), "rhs": state_to_json(q), "value": v}))
            .collect();
        let mut witnesses = Vec::new();
        for ((p, q), ws) in &self.witnesses {
            for w in ws {
                let parts: Vec<Value> = match w {
                    MValue::Set(s) => {
                        s.iter().map(|(a, b)| json!({"lhs": state_to_json(a), "rhs": state_to_json(b)})).collect()
                    }
                    MValue::Dist(d) => d
                        .iter()
                        .map(|((a, b), r)| json!({"weight": r.to_string(), "lhs": state_to_json(a), "rhs": state_to_json(b)}))
                        .collect(),
                };
                witnesses.push(json!({"lhs": state_to_json(p), "rhs": state_to_json(q), "parts": parts}));
            }
        }
        json!({"default": self.default, "entries": entries, "witnesses": witnesses})
    }
}

/// `μ(Tπ_1 t)` and `μ(Tπ_2 t)`.
pub fn marginals(w: &Witness) -> BResult<(TState, TState)> {
    let left = w.map(|(a, _)| a.clone()).flatten()?;
    let right = w.map(|(_, b)| b.clone()).flatten()?;
    Ok((left, right))
}

/// `ev_T(Td(t))` for one witness.
pub fn witness_value(quantale: Quantale, cert: &Certificate, w: &Witness) -> BResult<QValue> {
    Ok(match w {
        MValue::Set(s) => quantale.meet(s.iter().map(|(a, b)| cert.value(a, b)).collect::<Vec<_>>().iter())?,
        MValue::Dist(d) => expectation(quantale, &d.map(|(a, b)| cert.value(a, b)))?,
    })
}

/// A numeric upper bound on `u(d)(p, q)`: the smallest of `d(p, q)` and
/// the witness values for the pair.
pub fn witness_bound(model: &CoalgebraModel, cert: &Certificate, p: &TState, q: &TState) -> BResult<QValue> {
    let quant = model.quantale;
    let mut best = cert.value(p, q);
    for w in cert.witnesses.get(&(p.clone(), q.clone())).into_iter().flatten() {
        let (l, r) = marginals(w)?;
        if &l != p || &r != q {
            let side = if &l != p { format!("first marginal {} ≠ {}", l, p) } else { format!("second marginal {} ≠ {}", r, q) };
            return Err(BehError::Certificate(format!("witness for ({}, {}): {}", p, q, side)));
        }
        best = quant.join2(&best, &witness_value(quant, cert, w)?)?;
    }
    Ok(best)
}

/// The check performed at one support pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCheck {
    pub lhs: TState,
    pub rhs: TState,
    pub candidate: QValue,
    /// Numeric upper bound on `beh(u(d))` at the pair.
    pub bound: QValue,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    pub checks: Vec<PairCheck>,
    /// The first failing pair and why.
    pub rejection: Option<(TState, TState, String)>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} d({}, {}) = {}  beh(u(d)) ≤ {}",
                if c.ok { "ok  " } else { "FAIL" },
                c.lhs,
                c.rhs,
                c.candidate,
                c.bound
            )?;
        }
        match &self.rejection {
            None => write!(f, "accepted"),
            Some((p, q, why)) => write!(f, "rejected at ({}, {}): {}", p, q, why),
        }
    }
}

/// Checks `d ⊑ beh(u(d))` at every support pair, bounding `u(d)` by
/// [`witness_bound`] at the successor pairs. Acceptance proves that the
/// candidate is a numeric upper bound on `ν beh` everywhere.
pub fn certify(model: &CoalgebraModel, cert: &Certificate) -> BResult<Verdict> {
    let law = model.law()?;
    let quant = model.quantale;
    let mut checks = Vec::new();
    let mut rejection = None;
    let mut succ: BTreeMap<TState, FTerm<TState>> = BTreeMap::new();
    for (p, q) in cert.entries.keys() {
        for s in [p, q] {
            if !succ.contains_key(s) {
                succ.insert(s.clone(), law.successor(&model.transitions, s)?);
            }
        }
    }
    for ((p, q), v) in &cert.entries {
        let mut witness_err = None;
        let bound = lift_terms(&model.functor, quant, &succ[p], &succ[q], &mut |a: &TState, b: &TState| {
            witness_bound(model, cert, a, b).map_err(|e| {
                let m = e.to_string();
                witness_err = Some(e);
                PolyError::Unsupported(m)
            })
        });
        let bound = match (bound, witness_err) {
            (_, Some(e)) => {
                if rejection.is_none() {
                    rejection = Some((p.clone(), q.clone(), e.to_string()));
                }
                checks.push(PairCheck { lhs: p.clone(), rhs: q.clone(), candidate: v.clone(), bound: quant.bottom(), ok: false });
                continue;
            }
            (b, None) => b?,
        };
        let ok = quant.leq(v, &bound)?;
        if !ok && rejection.is_none() {
            rejection = Some((
                p.clone(),
                q.clone(),
                format!("candidate {} is numerically below the bound {}", v, bound),
            ));
        }
        checks.push(PairCheck { lhs: p.clone(), rhs: q.clone(), candidate: v.clone(), bound, ok });
    }
    Ok(Verdict { accepted: rejection.is_none(), checks, rejection })
}

/// `u(d)(p, q)` by definition: the join over all `t1, t2 ∈ T(TX)` with
/// `μ t1 = p`, `μ t2 = q` of the lifted distance `T̄(d)(t1, t2)`. Powerset
/// models over at most three states only (the witness space is finite).
pub fn u_exact(model: &CoalgebraModel, cert: &Certificate, p: &TState, q: &TState, budget: usize) -> BResult<QValue> {
    if model.monad != MonadKind::Powerset {
        return Err(BehError::Unsupported("u_exact enumerates powerset witnesses only".into()));
    }
    if model.states.len() > 3 {
        return Err(BehError::Budget(format!("{} states (at most 3)", model.states.len())));
    }
    let quant = model.quantale;
    // Y = P(X), with d as a V-graph on Y.
    let xs = model.states.elements().to_vec();
    let ys: Vec<TState> = (0u32..(1 << xs.len()))
        .map(|m| MValue::Set(xs.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, x)| x.clone()).collect()))
        .collect();
    let yc = Carrier::new(ys.iter().map(|y| y.to_string()))?;
    let d = VGraph::from_fn(quant, yc, |i, j| cert.value(&ys[i], &ys[j]))?;
    let dc = d.metric_closure();
    let union = |mask: u32| -> BTreeSet<String> {
        let mut u = BTreeSet::new();
        for (i, y) in ys.iter().enumerate() {
            if mask >> i & 1 == 1 {
                if let MValue::Set(s) = y {
                    u.extend(s.iter().cloned());
                }
            }
        }
        u
    };
    let members = |mask: u32| -> BTreeSet<String> {
        ys.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, y)| y.to_string()).collect()
    };
    let (MValue::Set(ps), MValue::Set(qs)) = (p, q) else {
        return Err(BehError::Unsupported("powerset states expected".into()));
    };
    let all = 1u32 << ys.len();
    let left: Vec<u32> = (0..all).filter(|&m| &union(m) == ps).collect();
    let right: Vec<u32> = (0..all).filter(|&m| &union(m) == qs).collect();
    if left.len().saturating_mul(right.len()) > budget {
        return Err(BehError::Budget(format!("{} witness pairs", left.len() * right.len())));
    }
    let mut acc = quant.bottom();
    for &a in &left {
        let ma = members(a);
        for &b in &right {
            acc = quant.join2(&acc, &hausdorff_closed(&dc, &ma, &members(b))?)?;
        }
    }
    Ok(acc)
}
