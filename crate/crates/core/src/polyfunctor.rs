//! Finite-coproduct polynomial functors (optionally with powerset and
//! subdistribution nodes), their terms, generated evaluation-map sets, and
//! the liftings of V-graphs along them.
//!
//! Evaluation maps follow the recursive construction: constants carry
//! user-chosen maps, the identity carries `id`, products carry
//! `ev ∘ π_i`, and a binary coproduct carries `[ev1, ⊤]`, `[⊥, ev2]` and
//! `[⊥, ⊤]`. For such functors the Kantorovich lifting has a closed form
//! ([`lift_closed`]); every other combination is computed from the
//! definition, either by enumerating γ(d) (Boolean) or by exact linear
//! programming over the piecewise-linear evaluation maps (unit interval).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::galois::{gamma_enum, non_expansive_violation, GaloisError, Grid, PredSet, DEFAULT_BUDGET};
use crate::monadlift::{ev_monad, hausdorff_closed, kantorovich_lp, MValue, MonadError, MonadKind, SubDist};
use crate::quantale::{parse_rat, Ext, QValue, Quantale, QuantaleError, Rat};
use crate::report::{CheckLog, LawReport};
use crate::simplex::{LpError, LpProblem, Relation};
use crate::vgraph::{Carrier, VGraph, VGraphError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("ill-formed functor: {0}")]
    Functor(String),
    #[error("term does not match functor: {0}")]
    Shape(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("predicate {pred} is not non-expansive at ({x}, {y})")]
    NotNonExpansive { pred: usize, x: String, y: String },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("LP solver failed ({error}) on\n{dump}")]
    Solver { error: LpError, dump: String },
    #[error("JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Monad(#[from] MonadError),
    #[error(transparent)]
    Graph(#[from] VGraphError),
    #[error(transparent)]
    Quantale(#[from] QuantaleError),
    #[error(transparent)]
    Galois(#[from] GaloisError),
}

pub type PResult<T> = Result<T, PolyError>;

/// Default cap on enumerated terms and linear pieces.
pub const TERM_BUDGET: usize = 200_000;

// ---------------------------------------------------------------------------
// Syntax

/// The atoms of a constant functor: quantale values or named symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstDomain {
    Values,
    Atoms(Vec<String>),
}

/// An evaluation map `B → V` attached to a constant functor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstEval {
    /// Only on the `Values` domain.
    Identity,
    Table(BTreeMap<String, QValue>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunctorExpr {
    Const { domain: ConstDomain, evals: Vec<ConstEval> },
    Id,
    Prod(Vec<FunctorExpr>),
    Coprod(Box<FunctorExpr>, Box<FunctorExpr>),
    /// `body^labels`: a product indexed by labels.
    Pow { labels: Vec<String>, body: Box<FunctorExpr> },
    Monad(MonadKind, Box<FunctorExpr>),
}

impl FunctorExpr {
    /// The constant functor on quantale values with the identity map.
    pub fn values() -> Self {
        FunctorExpr::Const { domain: ConstDomain::Values, evals: vec![ConstEval::Identity] }
    }

    pub fn pow(labels: &[&str], body: FunctorExpr) -> Self {
        FunctorExpr::Pow { labels: labels.iter().map(|s| s.to_string()).collect(), body: Box::new(body) }
    }

    /// `V × Id^A`.
    pub fn machine(labels: &[&str]) -> Self {
        FunctorExpr::Prod(vec![FunctorExpr::values(), FunctorExpr::pow(labels, FunctorExpr::Id)])
    }

    /// `V + Id^A`.
    pub fn exception(labels: &[&str]) -> Self {
        FunctorExpr::Coprod(Box::new(FunctorExpr::values()), Box::new(FunctorExpr::pow(labels, FunctorExpr::Id)))
    }

    pub fn monad(kind: MonadKind, body: FunctorExpr) -> Self {
        FunctorExpr::Monad(kind, Box::new(body))
    }

    pub fn is_polynomial(&self) -> bool {
        match self {
            FunctorExpr::Const { .. } | FunctorExpr::Id => true,
            FunctorExpr::Prod(fs) => fs.iter().all(|f| f.is_polynomial()),
            FunctorExpr::Coprod(l, r) => l.is_polynomial() && r.is_polynomial(),
            FunctorExpr::Pow { body, .. } => body.is_polynomial(),
            FunctorExpr::Monad(..) => false,
        }
    }

    pub fn has_coproduct(&self) -> bool {
        match self {
            FunctorExpr::Const { .. } | FunctorExpr::Id => false,
            FunctorExpr::Prod(fs) => fs.iter().any(|f| f.has_coproduct()),
            FunctorExpr::Coprod(..) => true,
            FunctorExpr::Pow { body, .. } | FunctorExpr::Monad(_, body) => body.has_coproduct(),
        }
    }

    /// `F ∘ G`: substitutes `g` for every identity node.
    pub fn compose(&self, g: &FunctorExpr) -> FunctorExpr {
        match self {
            FunctorExpr::Id => g.clone(),
            FunctorExpr::Const { .. } => self.clone(),
            FunctorExpr::Prod(fs) => FunctorExpr::Prod(fs.iter().map(|f| f.compose(g)).collect()),
            FunctorExpr::Coprod(l, r) => FunctorExpr::Coprod(Box::new(l.compose(g)), Box::new(r.compose(g))),
            FunctorExpr::Pow { labels, body } => {
                FunctorExpr::Pow { labels: labels.clone(), body: Box::new(body.compose(g)) }
            }
            FunctorExpr::Monad(k, body) => FunctorExpr::Monad(*k, Box::new(body.compose(g))),
        }
    }

    pub fn validate(&self) -> PResult<()> {
        match self {
            FunctorExpr::Const { domain, evals } => {
                for ev in evals {
                    match (domain, ev) {
                        (ConstDomain::Values, ConstEval::Identity) => {}
                        (ConstDomain::Atoms(_), ConstEval::Identity) => {
                            return Err(PolyError::Functor("identity eval on named atoms".into()))
                        }
                        (ConstDomain::Values, ConstEval::Table(_)) => {
                            return Err(PolyError::Functor("table eval on the value domain".into()))
                        }
                        (ConstDomain::Atoms(atoms), ConstEval::Table(t)) => {
                            if let Some(a) = atoms.iter().find(|a| !t.contains_key(*a)) {
                                return Err(PolyError::Functor(format!("eval table misses atom {}", a)));
                            }
                        }
                    }
                }
                if let ConstDomain::Atoms(atoms) = domain {
                    distinct(atoms, "atoms")?;
                }
                Ok(())
            }
            FunctorExpr::Id => Ok(()),
            FunctorExpr::Prod(fs) => {
                if fs.is_empty() {
                    return Err(PolyError::Functor("empty product".into()));
                }
                fs.iter().try_for_each(|f| f.validate())
            }
            FunctorExpr::Coprod(l, r) => {
                l.validate()?;
                r.validate()
            }
            FunctorExpr::Pow { labels, body } => {
                if labels.is_empty() {
                    return Err(PolyError::Functor("empty label set".into()));
                }
                distinct(labels, "labels")?;
                body.validate()
            }
            FunctorExpr::Monad(_, body) => body.validate(),
        }
    }

    /// Checks every constant evaluation against `q`.
    pub fn check_quantale(&self, q: Quantale) -> PResult<()> {
        match self {
            FunctorExpr::Const { evals, .. } => {
                for ev in evals {
                    if let ConstEval::Table(t) = ev {
                        t.values().try_for_each(|v| q.check(v))?;
                    }
                }
                Ok(())
            }
            FunctorExpr::Id => Ok(()),
            FunctorExpr::Prod(fs) => fs.iter().try_for_each(|f| f.check_quantale(q)),
            FunctorExpr::Coprod(l, r) => {
                l.check_quantale(q)?;
                r.check_quantale(q)
            }
            FunctorExpr::Pow { body, .. } | FunctorExpr::Monad(_, body) => body.check_quantale(q),
        }
    }

    pub fn from_json(v: &Value) -> PResult<Self> {
        let bad = |what: &str| PolyError::Json(format!("functor: {} in {}", what, v));
        if v.as_str() == Some("id") {
            return Ok(FunctorExpr::Id);
        }
        let obj = v.as_object().ok_or_else(|| bad("expected \"id\" or an object"))?;
        if obj.len() != 1 {
            return Err(bad("expected exactly one key"));
        }
        let (key, body) = obj.iter().next().expect("one key");
        let f = match key.as_str() {
            "const" => {
                let domain = match body.get("atoms") {
                    None => ConstDomain::Values,
                    Some(Value::String(s)) if s == "values" => ConstDomain::Values,
                    Some(Value::Array(a)) => ConstDomain::Atoms(
                        a.iter()
                            .map(|x| x.as_str().map(String::from).ok_or_else(|| bad("atom names must be strings")))
                            .collect::<PResult<_>>()?,
                    ),
                    Some(_) => return Err(bad("atoms must be \"values\" or a list")),
                };
                let evals = match body.get("evals") {
                    None if domain == ConstDomain::Values => vec![ConstEval::Identity],
                    None => Vec::new(),
                    Some(Value::Array(a)) => a
                        .iter()
                        .map(|e| match e {
                            Value::String(s) if s == "id" => Ok(ConstEval::Identity),
                            Value::Object(m) => m
                                .iter()
                                .map(|(k, x)| {
                                    serde_json::from_value::<QValue>(x.clone())
                                        .map(|q| (k.clone(), q))
                                        .map_err(|e| PolyError::Json(e.to_string()))
                                })
                                .collect::<PResult<BTreeMap<_, _>>>()
                                .map(ConstEval::Table),
                            _ => Err(bad("eval must be \"id\" or an atom table")),
                        })
                        .collect::<PResult<_>>()?,
                    Some(_) => return Err(bad("evals must be a list")),
                };
                FunctorExpr::Const { domain, evals }
            }
            "prod" => FunctorExpr::Prod(
                body.as_array()
                    .ok_or_else(|| bad("prod expects a list"))?
                    .iter()
                    .map(FunctorExpr::from_json)
                    .collect::<PResult<_>>()?,
            ),
            "coprod" => match body.as_array().map(|a| a.as_slice()) {
                Some([l, r]) => {
                    FunctorExpr::Coprod(Box::new(FunctorExpr::from_json(l)?), Box::new(FunctorExpr::from_json(r)?))
                }
                _ => return Err(bad("coprod expects two components")),
            },
            "pow" => {
                let labels = body
                    .get("labels")
                    .and_then(|l| l.as_array())
                    .ok_or_else(|| bad("pow expects labels"))?
                    .iter()
                    .map(|x| x.as_str().map(String::from).ok_or_else(|| bad("labels must be strings")))
                    .collect::<PResult<_>>()?;
                let inner = body.get("body").ok_or_else(|| bad("pow expects a body"))?;
                FunctorExpr::Pow { labels, body: Box::new(FunctorExpr::from_json(inner)?) }
            }
            "powerset" => FunctorExpr::monad(MonadKind::Powerset, FunctorExpr::from_json(body)?),
            "subdist" => FunctorExpr::monad(MonadKind::Subdist, FunctorExpr::from_json(body)?),
            other => return Err(bad(&format!("unknown node {:?}", other))),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> Value {
        match self {
            FunctorExpr::Id => json!("id"),
            FunctorExpr::Const { domain, evals } => {
                let atoms = match domain {
                    ConstDomain::Values => json!("values"),
                    ConstDomain::Atoms(a) => json!(a),
                };
                let evals: Vec<Value> = evals
                    .iter()
                    .map(|e| match e {
                        ConstEval::Identity => json!("id"),
                        ConstEval::Table(t) => serde_json::to_value(t).expect("serializable"),
                    })
                    .collect();
                json!({"const": {"atoms": atoms, "evals": evals}})
            }
            FunctorExpr::Prod(fs) => json!({"prod": fs.iter().map(|f| f.to_json()).collect::<Vec<_>>()}),
            FunctorExpr::Coprod(l, r) => json!({"coprod": [l.to_json(), r.to_json()]}),
            FunctorExpr::Pow { labels, body } => json!({"pow": {"labels": labels, "body": body.to_json()}}),
            FunctorExpr::Monad(k, body) => json!({ k.to_string(): body.to_json() }),
        }
    }
}

fn distinct(xs: &[String], what: &str) -> PResult<()> {
    let set: BTreeSet<&String> = xs.iter().collect();
    if set.len() != xs.len() {
        return Err(PolyError::Functor(format!("duplicate {}", what)));
    }
    Ok(())
}

impl fmt::Display for FunctorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctorExpr::Id => f.write_str("Id"),
            FunctorExpr::Const { domain: ConstDomain::Values, .. } => f.write_str("V"),
            FunctorExpr::Const { domain: ConstDomain::Atoms(a), .. } => write!(f, "{{{}}}", a.join(",")),
            FunctorExpr::Prod(fs) => {
                let parts: Vec<String> = fs.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(" × "))
            }
            FunctorExpr::Coprod(l, r) => write!(f, "({} + {})", l, r),
            FunctorExpr::Pow { labels, body } => write!(f, "{}^{{{}}}", body, labels.join(",")),
            FunctorExpr::Monad(MonadKind::Powerset, body) => write!(f, "P({})", body),
            FunctorExpr::Monad(MonadKind::Subdist, body) => write!(f, "D({})", body),
        }
    }
}

// ---------------------------------------------------------------------------
// Terms

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Value(QValue),
    Name(String),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Value(v) => write!(f, "{}", v),
            Atom::Name(n) => f.write_str(n),
        }
    }
}

/// An element of `FX`, with payloads of type `P` at identity positions.
/// Products indexed by labels are tuples in label order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FTerm<P: Ord> {
    Const(Atom),
    Id(P),
    Tuple(Vec<FTerm<P>>),
    Inl(Box<FTerm<P>>),
    Inr(Box<FTerm<P>>),
    M(MValue<FTerm<P>>),
}

impl<P: Ord + Clone> FTerm<P> {
    pub fn value(v: QValue) -> Self {
        FTerm::Const(Atom::Value(v))
    }

    pub fn inl(t: FTerm<P>) -> Self {
        FTerm::Inl(Box::new(t))
    }

    pub fn inr(t: FTerm<P>) -> Self {
        FTerm::Inr(Box::new(t))
    }

    pub fn set(ts: impl IntoIterator<Item = FTerm<P>>) -> Self {
        FTerm::M(MValue::Set(ts.into_iter().collect()))
    }

    pub fn dist(ts: impl IntoIterator<Item = (FTerm<P>, Rat)>) -> PResult<Self> {
        Ok(FTerm::M(MValue::Dist(SubDist::new(ts)?)))
    }

    /// Checks that the term is shaped for `f`.
    pub fn check(&self, f: &FunctorExpr) -> PResult<()> {
        let bad = || PolyError::Shape(format!("term shape does not match {}", f));
        match (f, self) {
            (FunctorExpr::Const { domain, .. }, FTerm::Const(a)) => match (domain, a) {
                (ConstDomain::Values, Atom::Value(_)) => Ok(()),
                (ConstDomain::Atoms(atoms), Atom::Name(n)) if atoms.contains(n) => Ok(()),
                _ => Err(PolyError::Shape(format!("atom {} not in the domain of {}", a, f))),
            },
            (FunctorExpr::Id, FTerm::Id(_)) => Ok(()),
            (FunctorExpr::Prod(fs), FTerm::Tuple(ts)) if fs.len() == ts.len() => {
                fs.iter().zip(ts).try_for_each(|(f, t)| t.check(f))
            }
            (FunctorExpr::Pow { labels, body }, FTerm::Tuple(ts)) if labels.len() == ts.len() => {
                ts.iter().try_for_each(|t| t.check(body))
            }
            (FunctorExpr::Coprod(l, _), FTerm::Inl(t)) => t.check(l),
            (FunctorExpr::Coprod(_, r), FTerm::Inr(t)) => t.check(r),
            (FunctorExpr::Monad(k, body), FTerm::M(m)) if m.kind() == *k => {
                m.support().into_iter().try_for_each(|t| t.check(body))
            }
            _ => Err(bad()),
        }
    }

    /// Structural action on payloads (the functor's action on maps).
    pub fn map<Q: Ord + Clone>(&self, f: &mut dyn FnMut(&P) -> Q) -> FTerm<Q> {
        match self {
            FTerm::Const(a) => FTerm::Const(a.clone()),
            FTerm::Id(p) => FTerm::Id(f(p)),
            FTerm::Tuple(ts) => FTerm::Tuple(ts.iter().map(|t| t.map(&mut *f)).collect()),
            FTerm::Inl(t) => FTerm::Inl(Box::new(t.map(f))),
            FTerm::Inr(t) => FTerm::Inr(Box::new(t.map(f))),
            FTerm::M(m) => FTerm::M(m.map(|t| t.map(&mut *f))),
        }
    }

    pub fn try_map<Q: Ord + Clone, E>(&self, f: &mut dyn FnMut(&P) -> Result<Q, E>) -> Result<FTerm<Q>, E> {
        Ok(match self {
            FTerm::Const(a) => FTerm::Const(a.clone()),
            FTerm::Id(p) => FTerm::Id(f(p)?),
            FTerm::Tuple(ts) => FTerm::Tuple(ts.iter().map(|t| t.try_map(&mut *f)).collect::<Result<_, _>>()?),
            FTerm::Inl(t) => FTerm::Inl(Box::new(t.try_map(f)?)),
            FTerm::Inr(t) => FTerm::Inr(Box::new(t.try_map(f)?)),
            FTerm::M(m) => FTerm::M(m.try_map(|t| t.try_map(&mut *f))?),
        })
    }

    /// Payloads in term order (with repetitions).
    pub fn payloads(&self) -> Vec<&P> {
        let mut out = Vec::new();
        self.collect_payloads(&mut out);
        out
    }

    fn collect_payloads<'a>(&'a self, out: &mut Vec<&'a P>) {
        match self {
            FTerm::Const(_) => {}
            FTerm::Id(p) => out.push(p),
            FTerm::Tuple(ts) => ts.iter().for_each(|t| t.collect_payloads(out)),
            FTerm::Inl(t) | FTerm::Inr(t) => t.collect_payloads(out),
            FTerm::M(m) => m.support().into_iter().for_each(|t| t.collect_payloads(out)),
        }
    }

    /// Reads an `(F∘G)`-term as an `F`-term whose payloads are `G`-terms.
    pub fn split(&self, f: &FunctorExpr) -> PResult<FTerm<FTerm<P>>> {
        let bad = || PolyError::Shape(format!("cannot split term at {}", f));
        Ok(match (f, self) {
            (FunctorExpr::Id, t) => FTerm::Id(t.clone()),
            (FunctorExpr::Const { .. }, FTerm::Const(a)) => FTerm::Const(a.clone()),
            (FunctorExpr::Prod(fs), FTerm::Tuple(ts)) if fs.len() == ts.len() => {
                FTerm::Tuple(fs.iter().zip(ts).map(|(f, t)| t.split(f)).collect::<PResult<_>>()?)
            }
            (FunctorExpr::Pow { labels, body }, FTerm::Tuple(ts)) if labels.len() == ts.len() => {
                FTerm::Tuple(ts.iter().map(|t| t.split(body)).collect::<PResult<_>>()?)
            }
            (FunctorExpr::Coprod(l, _), FTerm::Inl(t)) => FTerm::Inl(Box::new(t.split(l)?)),
            (FunctorExpr::Coprod(_, r), FTerm::Inr(t)) => FTerm::Inr(Box::new(t.split(r)?)),
            (FunctorExpr::Monad(k, body), FTerm::M(m)) if m.kind() == *k => {
                FTerm::M(m.try_map(|t| t.split(body))?)
            }
            _ => return Err(bad()),
        })
    }

    /// Parses a term against `f`; `payload` reads identity positions.
    ///
    /// Constants are value strings (or atom names), products are arrays,
    /// label-indexed products are objects keyed by label, coproducts are
    /// `{"inl": …}` / `{"inr": …}`, powerset values are arrays and
    /// subdistributions are arrays of `[weight, term]` pairs.
    pub fn from_json(f: &FunctorExpr, v: &Value, payload: &mut dyn FnMut(&Value) -> PResult<P>) -> PResult<Self> {
        let bad = |what: &str| PolyError::Json(format!("{} for {} in {}", what, f, v));
        Ok(match f {
            FunctorExpr::Id => FTerm::Id(payload(v)?),
            FunctorExpr::Const { domain: ConstDomain::Values, .. } => {
                let q: QValue = serde_json::from_value(v.clone()).map_err(|e| bad(&e.to_string()))?;
                FTerm::value(q)
            }
            FunctorExpr::Const { domain: ConstDomain::Atoms(atoms), .. } => {
                let name = v.as_str().ok_or_else(|| bad("expected an atom name"))?;
                if !atoms.iter().any(|a| a == name) {
                    return Err(bad("unknown atom"));
                }
                FTerm::Const(Atom::Name(name.to_string()))
            }
            FunctorExpr::Prod(fs) => {
                let a = v.as_array().filter(|a| a.len() == fs.len()).ok_or_else(|| bad("expected a tuple"))?;
                FTerm::Tuple(fs.iter().zip(a).map(|(f, x)| FTerm::from_json(f, x, payload)).collect::<PResult<_>>()?)
            }
            FunctorExpr::Pow { labels, body } => match v {
                Value::Object(m) => {
                    if m.len() != labels.len() {
                        return Err(bad("expected one entry per label"));
                    }
                    FTerm::Tuple(
                        labels
                            .iter()
                            .map(|l| {
                                let x = m.get(l).ok_or_else(|| bad(&format!("missing label {}", l)))?;
                                FTerm::from_json(body, x, payload)
                            })
                            .collect::<PResult<_>>()?,
                    )
                }
                Value::Array(a) if a.len() == labels.len() => {
                    FTerm::Tuple(a.iter().map(|x| FTerm::from_json(body, x, payload)).collect::<PResult<_>>()?)
                }
                _ => return Err(bad("expected an object keyed by label")),
            },
            FunctorExpr::Coprod(l, r) => {
                let m = v.as_object().filter(|m| m.len() == 1).ok_or_else(|| bad("expected inl/inr"))?;
                if let Some(x) = m.get("inl") {
                    FTerm::inl(FTerm::from_json(l, x, payload)?)
                } else if let Some(x) = m.get("inr") {
                    FTerm::inr(FTerm::from_json(r, x, payload)?)
                } else {
                    return Err(bad("expected inl/inr"));
                }
            }
            FunctorExpr::Monad(MonadKind::Powerset, body) => {
                let a = v.as_array().ok_or_else(|| bad("expected a set"))?;
                FTerm::set(a.iter().map(|x| FTerm::from_json(body, x, payload)).collect::<PResult<Vec<_>>>()?)
            }
            FunctorExpr::Monad(MonadKind::Subdist, body) => {
                let a = v.as_array().ok_or_else(|| bad("expected [weight, term] pairs"))?;
                let mut pairs = Vec::new();
                for e in a {
                    match e.as_array().map(|p| p.as_slice()) {
                        Some([w, x]) => {
                            let w = w.as_str().ok_or_else(|| bad("weights are strings"))?;
                            pairs.push((FTerm::from_json(body, x, payload)?, parse_rat(w)?));
                        }
                        _ => return Err(bad("expected [weight, term] pairs")),
                    }
                }
                FTerm::dist(pairs)?
            }
        })
    }

    pub fn to_json(&self, f: &FunctorExpr, payload: &mut dyn FnMut(&P) -> Value) -> PResult<Value> {
        let bad = || PolyError::Shape(format!("term shape does not match {}", f));
        Ok(match (f, self) {
            (FunctorExpr::Id, FTerm::Id(p)) => payload(p),
            (FunctorExpr::Const { .. }, FTerm::Const(Atom::Value(v))) => serde_json::to_value(v).expect("value"),
            (FunctorExpr::Const { .. }, FTerm::Const(Atom::Name(n))) => json!(n),
            (FunctorExpr::Prod(fs), FTerm::Tuple(ts)) if fs.len() == ts.len() => {
                Value::Array(fs.iter().zip(ts).map(|(f, t)| t.to_json(f, payload)).collect::<PResult<_>>()?)
            }
            (FunctorExpr::Pow { labels, body }, FTerm::Tuple(ts)) if labels.len() == ts.len() => {
                let mut m = Map::new();
                for (l, t) in labels.iter().zip(ts) {
                    m.insert(l.clone(), t.to_json(body, payload)?);
                }
                Value::Object(m)
            }
            (FunctorExpr::Coprod(l, _), FTerm::Inl(t)) => json!({"inl": t.to_json(l, payload)?}),
            (FunctorExpr::Coprod(_, r), FTerm::Inr(t)) => json!({"inr": t.to_json(r, payload)?}),
            (FunctorExpr::Monad(_, body), FTerm::M(MValue::Set(s))) => {
                Value::Array(s.iter().map(|t| t.to_json(body, payload)).collect::<PResult<_>>()?)
            }
            (FunctorExpr::Monad(_, body), FTerm::M(MValue::Dist(d))) => Value::Array(
                d.iter()
                    .map(|(t, w)| Ok(json!([w.to_string(), t.to_json(body, payload)?])))
                    .collect::<PResult<_>>()?,
            ),
            _ => return Err(bad()),
        })
    }
}

impl<P: Ord + fmt::Display> fmt::Display for FTerm<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FTerm::Const(a) => write!(f, "{}", a),
            FTerm::Id(p) => write!(f, "{}", p),
            FTerm::Tuple(ts) => {
                let parts: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                write!(f, "({})", parts.join(", "))
            }
            FTerm::Inl(t) => write!(f, "inl({})", t),
            FTerm::Inr(t) => write!(f, "inr({})", t),
            FTerm::M(MValue::Set(s)) => {
                let parts: Vec<String> = s.iter().map(|t| t.to_string()).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
            FTerm::M(MValue::Dist(d)) => write!(f, "[{}]", d),
        }
    }
}

/// Applies `g` at every payload of a term shaped for `f`.
pub fn fmap<P: Ord + Clone, Q: Ord + Clone>(
    f: &FunctorExpr,
    g: &mut dyn FnMut(&P) -> Q,
    t: &FTerm<P>,
) -> PResult<FTerm<Q>> {
    t.check(f)?;
    Ok(t.map(g))
}

/// Options for [`enumerate_terms`].
#[derive(Clone, Debug)]
pub struct TermEnum {
    /// Atoms for value-domain constants.
    pub consts: Vec<QValue>,
    /// Subdistribution weights are multiples of `1/denominator`.
    pub denominator: u32,
    /// Only enumerate subdistributions of total mass 1.
    pub full_mass: bool,
    pub budget: usize,
}

impl TermEnum {
    pub fn new(consts: Vec<QValue>) -> Self {
        TermEnum { consts, denominator: 2, full_mass: true, budget: TERM_BUDGET }
    }
}

/// All terms of `f` over `payloads` (finite by construction of the options).
pub fn enumerate_terms<P: Ord + Clone>(f: &FunctorExpr, payloads: &[P], opts: &TermEnum) -> PResult<Vec<FTerm<P>>> {
    let over = |n: usize| {
        if n > opts.budget {
            Err(PolyError::Budget(format!("{} terms of {} exceed {}", n, f, opts.budget)))
        } else {
            Ok(())
        }
    };
    let product = |lists: Vec<Vec<FTerm<P>>>| -> PResult<Vec<Vec<FTerm<P>>>> {
        let mut acc: Vec<Vec<FTerm<P>>> = vec![Vec::new()];
        for list in lists {
            over(acc.len().saturating_mul(list.len()))?;
            acc = acc
                .into_iter()
                .flat_map(|prefix| {
                    list.iter().map(move |t| {
                        let mut p = prefix.clone();
                        p.push(t.clone());
                        p
                    })
                })
                .collect();
        }
        Ok(acc)
    };
    let out = match f {
        FunctorExpr::Const { domain: ConstDomain::Values, .. } => opts.consts.iter().cloned().map(FTerm::value).collect(),
        FunctorExpr::Const { domain: ConstDomain::Atoms(atoms), .. } => {
            atoms.iter().map(|a| FTerm::Const(Atom::Name(a.clone()))).collect()
        }
        FunctorExpr::Id => payloads.iter().cloned().map(FTerm::Id).collect(),
        FunctorExpr::Prod(fs) => {
            let lists = fs.iter().map(|g| enumerate_terms(g, payloads, opts)).collect::<PResult<Vec<_>>>()?;
            product(lists)?.into_iter().map(FTerm::Tuple).collect()
        }
        FunctorExpr::Pow { labels, body } => {
            let inner = enumerate_terms(body, payloads, opts)?;
            product(vec![inner; labels.len()])?.into_iter().map(FTerm::Tuple).collect()
        }
        FunctorExpr::Coprod(l, r) => {
            let mut out: Vec<FTerm<P>> = enumerate_terms(l, payloads, opts)?.into_iter().map(FTerm::inl).collect();
            out.extend(enumerate_terms(r, payloads, opts)?.into_iter().map(FTerm::inr));
            over(out.len())?;
            out
        }
        FunctorExpr::Monad(MonadKind::Powerset, body) => {
            let inner = enumerate_terms(body, payloads, opts)?;
            if inner.len() >= 64 {
                return Err(PolyError::Budget(format!("2^{} subsets", inner.len())));
            }
            over(1usize << inner.len())?;
            (0u64..(1u64 << inner.len()))
                .map(|mask| FTerm::set(inner.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, t)| t.clone())))
                .collect()
        }
        FunctorExpr::Monad(MonadKind::Subdist, body) => {
            let inner = enumerate_terms(body, payloads, opts)?;
            let k = opts.denominator.max(1) as usize;
            let mut out = Vec::new();
            let mut counts = vec![0usize; inner.len()];
            // All weight vectors with entries in {0..k}/k and total ≤ 1.
            fn rec<P: Ord + Clone>(
                pos: usize,
                left: usize,
                k: usize,
                full: bool,
                inner: &[FTerm<P>],
                counts: &mut Vec<usize>,
                out: &mut Vec<FTerm<P>>,
                budget: usize,
            ) -> PResult<()> {
                if pos == inner.len() {
                    if !full || left == 0 {
                        let pairs = inner
                            .iter()
                            .zip(counts.iter())
                            .filter(|(_, &c)| c > 0)
                            .map(|(t, &c)| (t.clone(), Rat::new((c as i64).into(), (k as i64).into())));
                        out.push(FTerm::dist(pairs)?);
                        if out.len() > budget {
                            return Err(PolyError::Budget(format!("more than {} subdistributions", budget)));
                        }
                    }
                    return Ok(());
                }
                for c in 0..=left {
                    counts[pos] = c;
                    rec(pos + 1, left - c, k, full, inner, counts, out, budget)?;
                }
                counts[pos] = 0;
                Ok(())
            }
            rec(0, k, k, opts.full_mass, &inner, &mut counts, &mut out, opts.budget)?;
            out
        }
    };
    over(out.len())?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Evaluation maps

/// A structurally represented evaluation map `FV → V`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvalMap {
    /// The i-th evaluation of a constant node.
    Const(usize),
    Id,
    /// `ev ∘ π_i` on products (label index for label-indexed products).
    Proj(usize, Box<EvalMap>),
    /// `[ev, ⊤]`
    Left(Box<EvalMap>),
    /// `[⊥, ev]`
    Right(Box<EvalMap>),
    /// `[⊥, ⊤]`
    BotTop,
    /// `ev_T ∘ T ev`
    Monad(MonadKind, Box<EvalMap>),
}

impl fmt::Display for EvalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalMap::Const(i) => write!(f, "c{}", i),
            EvalMap::Id => f.write_str("id"),
            EvalMap::Proj(i, e) => write!(f, "{}∘π{}", e, i),
            EvalMap::Left(e) => write!(f, "[{},⊤]", e),
            EvalMap::Right(e) => write!(f, "[⊥,{}]", e),
            EvalMap::BotTop => f.write_str("[⊥,⊤]"),
            EvalMap::Monad(MonadKind::Powerset, e) => write!(f, "sup*{}", e),
            EvalMap::Monad(MonadKind::Subdist, e) => write!(f, "E*{}", e),
        }
    }
}

/// The generated set Λ^F.
pub fn build_lambda(f: &FunctorExpr) -> Vec<EvalMap> {
    match f {
        FunctorExpr::Const { evals, .. } => (0..evals.len()).map(EvalMap::Const).collect(),
        FunctorExpr::Id => vec![EvalMap::Id],
        FunctorExpr::Prod(fs) => fs
            .iter()
            .enumerate()
            .flat_map(|(i, g)| build_lambda(g).into_iter().map(move |e| EvalMap::Proj(i, Box::new(e))))
            .collect(),
        FunctorExpr::Pow { labels, body } => {
            let inner = build_lambda(body);
            (0..labels.len())
                .flat_map(|i| inner.iter().map(move |e| EvalMap::Proj(i, Box::new(e.clone()))))
                .collect()
        }
        FunctorExpr::Coprod(l, r) => {
            let mut out: Vec<EvalMap> = build_lambda(l).into_iter().map(|e| EvalMap::Left(Box::new(e))).collect();
            out.extend(build_lambda(r).into_iter().map(|e| EvalMap::Right(Box::new(e))));
            out.push(EvalMap::BotTop);
            out
        }
        FunctorExpr::Monad(k, body) => build_lambda(body).into_iter().map(|e| EvalMap::Monad(*k, Box::new(e))).collect(),
    }
}

impl EvalMap {
    /// `self * g = self ∘ F g`: substitutes `g` at the identity position.
    pub fn then(&self, g: &EvalMap) -> EvalMap {
        match self {
            EvalMap::Id => g.clone(),
            EvalMap::Const(i) => EvalMap::Const(*i),
            EvalMap::Proj(i, e) => EvalMap::Proj(*i, Box::new(e.then(g))),
            EvalMap::Left(e) => EvalMap::Left(Box::new(e.then(g))),
            EvalMap::Right(e) => EvalMap::Right(Box::new(e.then(g))),
            EvalMap::BotTop => EvalMap::BotTop,
            EvalMap::Monad(k, e) => EvalMap::Monad(*k, Box::new(e.then(g))),
        }
    }
}

/// `ΛF * ΛG`, without duplicates, in lexicographic order of the pairs.
pub fn star(lf: &[EvalMap], lg: &[EvalMap]) -> Vec<EvalMap> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in lf {
        for b in lg {
            let c = a.then(b);
            if seen.insert(c.clone()) {
                out.push(c);
            }
        }
    }
    out
}

fn const_eval(domain: &ConstDomain, evals: &[ConstEval], i: usize, atom: &Atom, q: Quantale) -> PResult<QValue> {
    let ev = evals.get(i).ok_or_else(|| PolyError::Shape(format!("no constant evaluation #{}", i)))?;
    let v = match (domain, ev, atom) {
        (ConstDomain::Values, ConstEval::Identity, Atom::Value(v)) => v.clone(),
        (ConstDomain::Atoms(_), ConstEval::Table(t), Atom::Name(n)) => {
            t.get(n).cloned().ok_or_else(|| PolyError::Shape(format!("atom {} has no value", n)))?
        }
        _ => return Err(PolyError::Shape(format!("constant {} does not fit its evaluation", atom))),
    };
    q.check(&v)?;
    Ok(v)
}

/// `ev(t)` for a term over quantale values.
pub fn eval(f: &FunctorExpr, ev: &EvalMap, q: Quantale, t: &FTerm<QValue>) -> PResult<QValue> {
    let bad = || PolyError::Shape(format!("evaluation map {} does not fit {} at {}", ev, f, t));
    match (f, ev, t) {
        (FunctorExpr::Const { domain, evals }, EvalMap::Const(i), FTerm::Const(a)) => const_eval(domain, evals, *i, a, q),
        (FunctorExpr::Id, EvalMap::Id, FTerm::Id(v)) => {
            q.check(v)?;
            Ok(v.clone())
        }
        (FunctorExpr::Prod(fs), EvalMap::Proj(i, e), FTerm::Tuple(ts)) if *i < fs.len() && ts.len() == fs.len() => {
            eval(&fs[*i], e, q, &ts[*i])
        }
        (FunctorExpr::Pow { labels, body }, EvalMap::Proj(i, e), FTerm::Tuple(ts))
            if *i < labels.len() && ts.len() == labels.len() =>
        {
            eval(body, e, q, &ts[*i])
        }
        (FunctorExpr::Coprod(l, _), EvalMap::Left(e), FTerm::Inl(s)) => eval(l, e, q, s),
        (FunctorExpr::Coprod(..), EvalMap::Left(_), FTerm::Inr(_)) => Ok(q.top()),
        (FunctorExpr::Coprod(..), EvalMap::Right(_), FTerm::Inl(_)) => Ok(q.bottom()),
        (FunctorExpr::Coprod(_, r), EvalMap::Right(e), FTerm::Inr(s)) => eval(r, e, q, s),
        (FunctorExpr::Coprod(..), EvalMap::BotTop, FTerm::Inl(_)) => Ok(q.bottom()),
        (FunctorExpr::Coprod(..), EvalMap::BotTop, FTerm::Inr(_)) => Ok(q.top()),
        (FunctorExpr::Monad(k, body), EvalMap::Monad(k2, e), FTerm::M(m)) if k == k2 && m.kind() == *k => {
            let inner = m.try_map(|s| eval(body, e, q, s))?;
            Ok(ev_monad(q, &inner)?)
        }
        _ => Err(bad()),
    }
}

// ---------------------------------------------------------------------------
// Liftings

/// The closed-form lifting of a polynomial functor with generated Λ^F,
/// with `leaf` giving the distance between payloads.
pub fn lift_terms<P: Ord + Clone>(
    f: &FunctorExpr,
    q: Quantale,
    s: &FTerm<P>,
    t: &FTerm<P>,
    leaf: &mut dyn FnMut(&P, &P) -> PResult<QValue>,
) -> PResult<QValue> {
    match (f, s, t) {
        (FunctorExpr::Const { domain, evals }, FTerm::Const(a), FTerm::Const(b)) => {
            let mut acc = q.top();
            for i in 0..evals.len() {
                let r = q.residuation(&const_eval(domain, evals, i, a, q)?, &const_eval(domain, evals, i, b, q)?)?;
                acc = q.meet2(&acc, &r)?;
            }
            Ok(acc)
        }
        (FunctorExpr::Id, FTerm::Id(x), FTerm::Id(y)) => leaf(x, y),
        (FunctorExpr::Prod(fs), FTerm::Tuple(xs), FTerm::Tuple(ys)) if xs.len() == fs.len() && ys.len() == fs.len() => {
            let mut acc = q.top();
            for ((g, a), b) in fs.iter().zip(xs).zip(ys) {
                acc = q.meet2(&acc, &lift_terms(g, q, a, b, leaf)?)?;
            }
            Ok(acc)
        }
        (FunctorExpr::Pow { labels, body }, FTerm::Tuple(xs), FTerm::Tuple(ys))
            if xs.len() == labels.len() && ys.len() == labels.len() =>
        {
            let mut acc = q.top();
            for (a, b) in xs.iter().zip(ys) {
                acc = q.meet2(&acc, &lift_terms(body, q, a, b, leaf)?)?;
            }
            Ok(acc)
        }
        (FunctorExpr::Coprod(l, _), FTerm::Inl(a), FTerm::Inl(b)) => lift_terms(l, q, a, b, leaf),
        (FunctorExpr::Coprod(_, r), FTerm::Inr(a), FTerm::Inr(b)) => lift_terms(r, q, a, b, leaf),
        (FunctorExpr::Coprod(..), FTerm::Inl(_), FTerm::Inr(_)) => Ok(q.top()),
        (FunctorExpr::Coprod(..), FTerm::Inr(_), FTerm::Inl(_)) => Ok(q.bottom()),
        (FunctorExpr::Monad(..), _, _) => {
            Err(PolyError::Unsupported(format!("no closed form for the monad node in {}", f)))
        }
        _ => Err(PolyError::Shape(format!("terms {:?} / {:?} do not match {}", s.payloads().len(), t.payloads().len(), f))),
    }
}

fn term_carrier<P: Ord + fmt::Display>(terms: &[FTerm<P>]) -> PResult<Carrier> {
    Ok(Carrier::new(terms.iter().map(|t| t.to_string()))?)
}

fn index_terms(d: &VGraph, terms: &[FTerm<String>]) -> PResult<Vec<FTerm<usize>>> {
    terms
        .iter()
        .map(|t| t.try_map(&mut |x: &String| d.carrier().require(x).map_err(PolyError::from)))
        .collect()
}

/// `K_{Λ^F}(d)` on the given terms, by the closed form (polynomial `F`).
pub fn lift_closed(f: &FunctorExpr, d: &VGraph, terms: &[FTerm<String>]) -> PResult<VGraph> {
    let q = d.quantale();
    let dc = d.metric_closure();
    let carrier = term_carrier(terms)?;
    let idx = index_terms(d, terms)?;
    for t in terms {
        t.check(f)?;
    }
    let n = terms.len();
    let mut rows = Vec::with_capacity(n);
    for s in &idx {
        let mut row = Vec::with_capacity(n);
        for t in &idx {
            row.push(lift_terms(f, q, s, t, &mut |x: &usize, y: &usize| Ok(dc.get(*x, *y).clone()))?);
        }
        rows.push(row);
    }
    Ok(VGraph::new(q, carrier, rows)?)
}

/// `K(d)(s,t) = ⊓_{ev∈Λ} ⊓_{f∈S} d_V(ev(Ff s), ev(Ff t))`, with γ(d)
/// replaced by the explicit predicate set `s`.
pub fn kantorovich_generic(
    f: &FunctorExpr,
    lambda: &[EvalMap],
    d: &VGraph,
    s: &PredSet,
    terms: &[FTerm<String>],
) -> PResult<VGraph> {
    let q = d.quantale();
    if s.quantale != q || &s.carrier != d.carrier() {
        return Err(PolyError::Shape("predicate set does not live on the graph's carrier".into()));
    }
    for (k, p) in s.preds.iter().enumerate() {
        if let Some((i, j)) = non_expansive_violation(d, p) {
            return Err(PolyError::NotNonExpansive {
                pred: k,
                x: d.carrier().name(i).to_string(),
                y: d.carrier().name(j).to_string(),
            });
        }
    }
    for t in terms {
        t.check(f)?;
    }
    let carrier = term_carrier(terms)?;
    let idx = index_terms(d, terms)?;
    let n = terms.len();
    let mut rows = vec![vec![q.top(); n]; n];
    for ev in lambda {
        for p in &s.preds {
            let vals = idx
                .iter()
                .map(|t| eval(f, ev, q, &t.map(&mut |x: &usize| p[*x].clone())))
                .collect::<PResult<Vec<_>>>()?;
            for i in 0..n {
                for j in 0..n {
                    let r = q.residuation(&vals[i], &vals[j])?;
                    rows[i][j] = q.meet2(&rows[i][j], &r)?;
                }
            }
        }
    }
    Ok(VGraph::new(q, carrier, rows)?)
}

/// An affine function `c + Σ a_x f(x)` of a predicate `f`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Affine {
    constant: Rat,
    coeffs: BTreeMap<usize, Rat>,
}

impl Affine {
    fn constant(c: Rat) -> Self {
        Affine { constant: c, coeffs: BTreeMap::new() }
    }

    fn var(x: usize) -> Self {
        Affine { constant: Rat::zero(), coeffs: BTreeMap::from([(x, Rat::one())]) }
    }

    fn add_scaled(&mut self, other: &Affine, p: &Rat) {
        self.constant += &other.constant * p;
        for (x, a) in &other.coeffs {
            let e = self.coeffs.entry(*x).or_insert_with(Rat::zero);
            *e += a * p;
        }
        self.coeffs.retain(|_, a| !a.is_zero());
    }

    fn minus(&self, other: &Affine) -> Affine {
        let mut out = self.clone();
        out.add_scaled(other, &-Rat::one());
        out
    }
}

fn numeric_finite(v: &QValue) -> PResult<Rat> {
    match v.numeric() {
        Ext::Fin(r) => Ok(r),
        Ext::Inf => Err(PolyError::Unsupported("infinite constant in a piecewise-linear evaluation".into())),
    }
}

/// `ev(Ff t)` as a maximum of affine functions of `f`, over unit-oplus.
fn pieces(f: &FunctorExpr, ev: &EvalMap, t: &FTerm<usize>, q: Quantale, budget: usize) -> PResult<Vec<Affine>> {
    let bad = || PolyError::Shape(format!("evaluation map {} does not fit {}", ev, f));
    let top = || Affine::constant(Rat::zero());
    let bot = || Affine::constant(Rat::one());
    let out = match (f, ev, t) {
        (FunctorExpr::Const { domain, evals }, EvalMap::Const(i), FTerm::Const(a)) => {
            vec![Affine::constant(numeric_finite(&const_eval(domain, evals, *i, a, q)?)?)]
        }
        (FunctorExpr::Id, EvalMap::Id, FTerm::Id(x)) => vec![Affine::var(*x)],
        (FunctorExpr::Prod(fs), EvalMap::Proj(i, e), FTerm::Tuple(ts)) if *i < fs.len() && ts.len() == fs.len() => {
            pieces(&fs[*i], e, &ts[*i], q, budget)?
        }
        (FunctorExpr::Pow { labels, body }, EvalMap::Proj(i, e), FTerm::Tuple(ts))
            if *i < labels.len() && ts.len() == labels.len() =>
        {
            pieces(body, e, &ts[*i], q, budget)?
        }
        (FunctorExpr::Coprod(l, _), EvalMap::Left(e), FTerm::Inl(s)) => pieces(l, e, s, q, budget)?,
        (FunctorExpr::Coprod(..), EvalMap::Left(_), FTerm::Inr(_)) => vec![top()],
        (FunctorExpr::Coprod(..), EvalMap::Right(_), FTerm::Inl(_)) => vec![bot()],
        (FunctorExpr::Coprod(_, r), EvalMap::Right(e), FTerm::Inr(s)) => pieces(r, e, s, q, budget)?,
        (FunctorExpr::Coprod(..), EvalMap::BotTop, FTerm::Inl(_)) => vec![bot()],
        (FunctorExpr::Coprod(..), EvalMap::BotTop, FTerm::Inr(_)) => vec![top()],
        (FunctorExpr::Monad(MonadKind::Powerset, body), EvalMap::Monad(MonadKind::Powerset, e), FTerm::M(MValue::Set(s))) => {
            // Numeric sup of the members; sup ∅ = 0.
            let mut all = vec![top()];
            for m in s {
                all.extend(pieces(body, e, m, q, budget)?);
            }
            all
        }
        (FunctorExpr::Monad(MonadKind::Subdist, body), EvalMap::Monad(MonadKind::Subdist, e), FTerm::M(MValue::Dist(d))) => {
            // Σ p_i · max_j a_ij = max over choice functions of Σ p_i a_{i c(i)}.
            let mut acc = vec![Affine::constant(Rat::zero())];
            for (m, p) in d.iter() {
                let inner = pieces(body, e, m, q, budget)?;
                if acc.len() * inner.len() > budget {
                    return Err(PolyError::Budget(format!("more than {} linear pieces", budget)));
                }
                let mut next = BTreeSet::new();
                for a in &acc {
                    for b in &inner {
                        let mut c = a.clone();
                        c.add_scaled(b, p);
                        next.insert(c);
                    }
                }
                acc = next.into_iter().collect();
            }
            acc
        }
        _ => return Err(bad()),
    };
    let dedup: BTreeSet<Affine> = out.into_iter().collect();
    if dedup.len() > budget {
        return Err(PolyError::Budget(format!("more than {} linear pieces", budget)));
    }
    Ok(dedup.into_iter().collect())
}

/// `sup_{f∈γ(dc)} (max_i L_i(f) ⊖ max_j M_j(f))`, by one LP per `(i, j)`
/// restricted to the region where `M_j` attains the maximum.
fn sup_piecewise(dc: &VGraph, ms: &[Affine], ls: &[Affine]) -> PResult<Rat> {
    let n = dc.len();
    let mut best = Rat::zero();
    for (j, mj) in ms.iter().enumerate() {
        for li in ls {
            let mut lp = LpProblem::new();
            let vars: Vec<usize> = (0..n)
                .map(|x| lp.add_var(format!("f({})", dc.carrier().name(x)), Some(Rat::zero()), Some(Rat::one())))
                .collect();
            for x in 0..n {
                for y in 0..n {
                    if x != y {
                        if let QValue::Num(Ext::Fin(c)) = dc.get(x, y) {
                            if c < &Rat::one() {
                                lp.add_constraint(vec![(vars[y], Rat::one()), (vars[x], -Rat::one())], Relation::Le, c.clone());
                            }
                        }
                    }
                }
            }
            for (k, mk) in ms.iter().enumerate() {
                if k != j {
                    // M_j − M_k ≥ 0
                    let diff = mj.minus(mk);
                    let coeffs: Vec<(usize, Rat)> = diff.coeffs.iter().map(|(x, a)| (vars[*x], a.clone())).collect();
                    lp.add_constraint(coeffs, Relation::Ge, -diff.constant.clone());
                }
            }
            let obj = li.minus(mj);
            for (x, a) in &obj.coeffs {
                lp.set_objective(vars[*x], a.clone());
            }
            match lp.solve() {
                Ok(sol) => {
                    let v = sol.optimum + &obj.constant;
                    if v > best {
                        best = v;
                    }
                }
                Err(LpError::Infeasible) => {}
                Err(error) => return Err(PolyError::Solver { error, dump: lp.to_string() }),
            }
        }
    }
    Ok(best)
}

/// The exact Kantorovich lifting over unit-oplus, for any functor built
/// from the supported nodes, by linear programming over γ(d).
pub fn kantorovich_piecewise(
    f: &FunctorExpr,
    lambda: &[EvalMap],
    d: &VGraph,
    terms: &[FTerm<String>],
) -> PResult<VGraph> {
    let q = d.quantale();
    if q != Quantale::UnitOplus {
        return Err(PolyError::Unsupported(format!("piecewise-linear lifting over {}", q)));
    }
    for t in terms {
        t.check(f)?;
    }
    let dc = d.metric_closure();
    let carrier = term_carrier(terms)?;
    let idx = index_terms(d, terms)?;
    let n = terms.len();
    let table = lambda
        .iter()
        .map(|ev| idx.iter().map(|t| pieces(f, ev, t, q, TERM_BUDGET)).collect::<PResult<Vec<_>>>())
        .collect::<PResult<Vec<_>>>()?;
    let mut rows = vec![vec![q.top(); n]; n];
    for per_term in &table {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = QValue::num(sup_piecewise(&dc, &per_term[i], &per_term[j])?);
                rows[i][j] = q.meet2(&rows[i][j], &v)?;
            }
        }
    }
    Ok(VGraph::new(q, carrier, rows)?)
}

/// How a lifting was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftMethod {
    ClosedForm,
    Hausdorff,
    TransportLp,
    BooleanEnumeration,
    PiecewiseLp,
}

impl fmt::Display for LiftMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LiftMethod::ClosedForm => "closed form",
            LiftMethod::Hausdorff => "Hausdorff",
            LiftMethod::TransportLp => "transport LP",
            LiftMethod::BooleanEnumeration => "exhaustive γ(d)",
            LiftMethod::PiecewiseLp => "piecewise LP",
        })
    }
}

/// Whether to prefer closed forms or to compute from the definition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Best,
    Definition,
}

fn monad_leaf_set(t: &FTerm<String>) -> PResult<BTreeSet<String>> {
    match t {
        FTerm::M(MValue::Set(s)) => s
            .iter()
            .map(|m| match m {
                FTerm::Id(x) => Ok(x.clone()),
                _ => Err(PolyError::Shape("expected a set of points".into())),
            })
            .collect(),
        _ => Err(PolyError::Shape("expected a set".into())),
    }
}

fn monad_leaf_dist(t: &FTerm<String>) -> PResult<SubDist<String>> {
    match t {
        FTerm::M(MValue::Dist(d)) => Ok(d.try_map(|m| match m {
            FTerm::Id(x) => Ok(x.clone()),
            _ => Err(PolyError::Shape("expected a distribution over points".into())),
        })?),
        _ => Err(PolyError::Shape("expected a distribution".into())),
    }
}

/// `K_Λ(d)` on `terms`, by the cheapest exact method available.
pub fn lift(
    f: &FunctorExpr,
    lambda: &[EvalMap],
    d: &VGraph,
    terms: &[FTerm<String>],
    strategy: Strategy,
) -> PResult<(VGraph, LiftMethod)> {
    let q = d.quantale();
    for t in terms {
        t.check(f)?;
    }
    if strategy == Strategy::Best {
        if f.is_polynomial() && lambda == build_lambda(f).as_slice() {
            return Ok((lift_closed(f, d, terms)?, LiftMethod::ClosedForm));
        }
        if let FunctorExpr::Monad(k, body) = f {
            if **body == FunctorExpr::Id && lambda == [EvalMap::Monad(*k, Box::new(EvalMap::Id))] {
                let dc = d.metric_closure();
                let carrier = term_carrier(terms)?;
                let n = terms.len();
                let mut rows = vec![vec![q.top(); n]; n];
                match k {
                    MonadKind::Powerset => {
                        let sets = terms.iter().map(monad_leaf_set).collect::<PResult<Vec<_>>>()?;
                        for i in 0..n {
                            for j in 0..n {
                                rows[i][j] = hausdorff_closed(&dc, &sets[i], &sets[j])?;
                            }
                        }
                        return Ok((VGraph::new(q, carrier, rows)?, LiftMethod::Hausdorff));
                    }
                    MonadKind::Subdist if q != Quantale::Boolean => {
                        let ds = terms.iter().map(monad_leaf_dist).collect::<PResult<Vec<_>>>()?;
                        for i in 0..n {
                            for j in 0..n {
                                if i != j {
                                    rows[i][j] = kantorovich_lp(&dc, &ds[i], &ds[j])?.value;
                                }
                            }
                        }
                        return Ok((VGraph::new(q, carrier, rows)?, LiftMethod::TransportLp));
                    }
                    MonadKind::Subdist => {}
                }
            }
        }
    }
    match q {
        Quantale::Boolean => {
            let s = gamma_enum(d, Grid::new(1), DEFAULT_BUDGET)?;
            Ok((kantorovich_generic(f, lambda, d, &s, terms)?, LiftMethod::BooleanEnumeration))
        }
        Quantale::UnitOplus => Ok((kantorovich_piecewise(f, lambda, d, terms)?, LiftMethod::PiecewiseLp)),
        Quantale::ExtPlus => Err(PolyError::Unsupported(format!(
            "no exact method for {} with these evaluation maps over ext-plus",
            f
        ))),
    }
}

/// Both sides of the compositionality law on a finite term carrier.
#[derive(Clone, Debug)]
pub struct Compositionality {
    /// `K_{ΛF}(K_{ΛG}(d))`
    pub lhs: VGraph,
    /// `K_{ΛF*ΛG}(d)`
    pub rhs: VGraph,
    /// `K_{ΛG}(d)` on the `G`-terms occurring inside the given terms.
    pub inner: VGraph,
    pub inner_method: LiftMethod,
    pub outer_method: LiftMethod,
    pub rhs_method: LiftMethod,
    pub equal: bool,
    /// `lhs ⊑ rhs`, which holds for all functors and evaluation maps.
    pub lhs_below_rhs: bool,
}

pub fn check_compositionality(
    f: &FunctorExpr,
    lf: &[EvalMap],
    g: &FunctorExpr,
    lg: &[EvalMap],
    d: &VGraph,
    terms: &[FTerm<String>],
    strategy: Strategy,
) -> PResult<Compositionality> {
    let fg = f.compose(g);
    let (rhs, rhs_method) = lift(&fg, &star(lf, lg), d, terms, strategy)?;
    let split = terms.iter().map(|t| t.split(f)).collect::<PResult<Vec<_>>>()?;
    let inner_terms: Vec<FTerm<String>> =
        split.iter().flat_map(|t| t.payloads().into_iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    let (inner, inner_method) = lift(g, lg, d, &inner_terms, strategy)?;
    let outer_terms: Vec<FTerm<String>> = split.iter().map(|t| t.map(&mut |x: &FTerm<String>| x.to_string())).collect();
    let (lhs, outer_method) = lift(f, lf, &inner, &outer_terms, strategy)?;
    let equal = lhs.rows() == rhs.rows();
    let q = d.quantale();
    let mut lhs_below_rhs = true;
    for (r1, r2) in lhs.rows().iter().zip(rhs.rows()) {
        for (a, b) in r1.iter().zip(r2) {
            lhs_below_rhs &= q.leq(a, b)?;
        }
    }
    Ok(Compositionality { lhs, rhs, inner, inner_method, outer_method, rhs_method, equal, lhs_below_rhs })
}

// ---------------------------------------------------------------------------
// The four monad-composition counterexamples

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Combination {
    PP,
    PD,
    DP,
    DD,
}

impl Combination {
    pub const ALL: [Combination; 4] = [Combination::PP, Combination::PD, Combination::DP, Combination::DD];

    pub fn outer(&self) -> MonadKind {
        match self {
            Combination::PP | Combination::PD => MonadKind::Powerset,
            Combination::DP | Combination::DD => MonadKind::Subdist,
        }
    }

    pub fn inner(&self) -> MonadKind {
        match self {
            Combination::PP | Combination::DP => MonadKind::Powerset,
            Combination::PD | Combination::DD => MonadKind::Subdist,
        }
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Combination::PP => "pp",
            Combination::PD => "pd",
            Combination::DP => "dp",
            Combination::DD => "dd",
        })
    }
}

impl std::str::FromStr for Combination {
    type Err = PolyError;
    fn from_str(s: &str) -> PResult<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pp" => Ok(Combination::PP),
            "pd" => Ok(Combination::PD),
            "dp" => Ok(Combination::DP),
            "dd" => Ok(Combination::DD),
            _ => Err(PolyError::Unsupported(format!("unknown combination {:?}", s))),
        }
    }
}

/// One reproduced counterexample on the discrete two-point space.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub combination: Combination,
    pub lhs_term: FTerm<String>,
    pub rhs_term: FTerm<String>,
    /// Exact `K_{ΛT}(K_{ΛS}(d))` at the pair.
    pub lhs: QValue,
    /// Exact `K_{ΛT*ΛS}(d)` at the pair.
    pub rhs: QValue,
    /// The lower bound on `lhs` obtained from the explicit witness predicate.
    pub witness: QValue,
    /// Whether the witness predicate is non-expansive for the inner lifting.
    pub witness_non_expansive: bool,
    pub methods: (LiftMethod, LiftMethod, LiftMethod),
}

fn point(x: &str) -> FTerm<String> {
    FTerm::Id(x.to_string())
}

fn dirac(x: &str) -> FTerm<String> {
    FTerm::dist([(point(x), Rat::one())]).expect("dirac")
}

fn half(a: FTerm<String>, b: FTerm<String>) -> FTerm<String> {
    let h = Rat::new(1.into(), 2.into());
    FTerm::dist([(a, h.clone()), (b, h)]).expect("halves")
}

/// The witness predicates `f_P` (1 exactly at `{x,y}`) and `f_D`
/// (`p·x + (1−p)·y ↦ min(p, 1−p)`), on inner terms over `{x, y}`.
fn witness_predicate(kind: MonadKind, t: &FTerm<String>) -> PResult<QValue> {
    match kind {
        MonadKind::Powerset => {
            let s = monad_leaf_set(t)?;
            Ok(QValue::ratio(if s.len() == 2 { 1 } else { 0 }, 1))
        }
        MonadKind::Subdist => {
            let d = monad_leaf_dist(t)?;
            let p = d.weight(&"x".to_string());
            let r = Rat::one() - &p;
            Ok(QValue::num(if p < r { p } else { r }))
        }
    }
}

pub fn counterexample(c: Combination) -> PResult<Counterexample> {
    let q = Quantale::UnitOplus;
    let d = VGraph::discrete(q, Carrier::new(["x", "y"])?);
    let (s, t) = match c {
        Combination::PP => (
            FTerm::set([FTerm::set([point("x")]), FTerm::set([point("y")])]),
            FTerm::set([FTerm::set([point("x")]), FTerm::set([point("y")]), FTerm::set([point("x"), point("y")])]),
        ),
        Combination::PD => (
            FTerm::set([dirac("x"), dirac("y")]),
            FTerm::set([dirac("x"), half(point("x"), point("y")), dirac("y")]),
        ),
        Combination::DP => (
            half(FTerm::set([point("x")]), FTerm::set([point("y")])),
            FTerm::dist([(FTerm::set([point("x"), point("y")]), Rat::one())])?,
        ),
        Combination::DD => (
            half(dirac("x"), dirac("y")),
            FTerm::dist([(half(point("x"), point("y")), Rat::one())])?,
        ),
    };
    let outer = FunctorExpr::monad(c.outer(), FunctorExpr::Id);
    let inner = FunctorExpr::monad(c.inner(), FunctorExpr::Id);
    let lo = build_lambda(&outer);
    let li = build_lambda(&inner);
    let terms = vec![s.clone(), t.clone()];
    let r = check_compositionality(&outer, &lo, &inner, &li, &d, &terms, Strategy::Best)?;
    if !r.lhs_below_rhs {
        return Err(PolyError::Unsupported(format!("{}: composed lifting not below the single lifting", c)));
    }

    // Witness lower bound: ev_outer(f ∘ s) vs ev_outer(f ∘ t), with f
    // checked non-expansive on the inner lifting.
    let inner_names = r.inner.carrier().elements().to_vec();
    let inner_terms = terms
        .iter()
        .flat_map(|x| x.split(&outer).map(|sp| sp.payloads().into_iter().cloned().collect::<Vec<_>>()))
        .flatten()
        .collect::<BTreeSet<_>>();
    let mut pred = vec![q.top(); inner_names.len()];
    for it in &inner_terms {
        let i = r.inner.carrier().require(&it.to_string())?;
        pred[i] = witness_predicate(c.inner(), it)?;
    }
    let witness_non_expansive = non_expansive_violation(&r.inner, &pred).is_none();
    let ev = EvalMap::Monad(c.outer(), Box::new(EvalMap::Id));
    let value_of = |term: &FTerm<String>| -> PResult<QValue> {
        let sp = term.split(&outer)?;
        let lifted = sp.try_map(&mut |x: &FTerm<String>| -> PResult<QValue> {
            Ok(pred[r.inner.carrier().require(&x.to_string())?].clone())
        })?;
        eval(&outer, &ev, q, &lifted)
    };
    let witness = q.residuation(&value_of(&s)?, &value_of(&t)?)?;
    Ok(Counterexample {
        combination: c,
        lhs_term: s,
        rhs_term: t,
        lhs: r.lhs.get(0, 1).clone(),
        rhs: r.rhs.get(0, 1).clone(),
        witness,
        witness_non_expansive,
        methods: (r.inner_method, r.outer_method, r.rhs_method),
    })
}

// ---------------------------------------------------------------------------
// Law suite

fn bool_values() -> Vec<QValue> {
    vec![QValue::Bool(false), QValue::Bool(true)]
}

/// Shapes exercised by the suite: machine and exception functors.
pub fn case_study_shapes() -> Vec<(String, FunctorExpr)> {
    vec![
        ("machine{a}".into(), FunctorExpr::machine(&["a"])),
        ("machine{a,b}".into(), FunctorExpr::machine(&["a", "b"])),
        ("exception{a}".into(), FunctorExpr::exception(&["a"])),
        ("exception{a,b}".into(), FunctorExpr::exception(&["a", "b"])),
    ]
}

fn carriers(max_size: usize) -> Vec<Carrier> {
    let names = ["x", "y", "z"];
    (1..=max_size.min(3)).map(|n| Carrier::new(names[..n].iter().copied()).expect("distinct")).collect()
}

fn graph_leq(q: Quantale, a: &VGraph, b: &VGraph) -> bool {
    a.rows().iter().zip(b.rows()).all(|(r1, r2)| r1.iter().zip(r2).all(|(x, y)| q.leq(x, y).unwrap_or(false)))
}

/// Boolean-exhaustive and small-grid checks of the polynomial-functor
/// results. `max_size` bounds the carrier size (2 is the standard run).
pub fn law_suite(max_size: usize) -> LawReport {
    let mut report = LawReport::new("polyfunctor");
    let bq = Quantale::Boolean;
    let shapes = case_study_shapes();
    let small_shapes: Vec<_> = shapes.iter().filter(|(n, _)| !n.contains("a,b")).cloned().collect();

    // Λ^F(γ(α(S))) ⊆ γ_F(α_F(Λ^F(S))) for non-empty S.
    let mut incl = CheckLog::new("generated Λ^F: Λ^F(γα(S)) ⊆ γ_F α_F(Λ^F(S)) (Boolean, exhaustive)");
    for c in carriers(max_size) {
        let all_preds = enumerate_predicates(bq, &c);
        for (name, f) in &small_shapes {
            let lambda = build_lambda(f);
            let terms = enumerate_terms(f, c.elements(), &TermEnum::new(bool_values())).expect("small");
            let idx: Vec<FTerm<usize>> =
                terms.iter().map(|t| t.map(&mut |x: &String| c.index_of(x).expect("member"))).collect();
            let tc = term_carrier(&terms).expect("distinct terms");
            let lift_preds = |preds: &[Vec<QValue>]| -> Vec<Vec<QValue>> {
                let mut out = BTreeSet::new();
                for ev in &lambda {
                    for p in preds {
                        let v: Vec<QValue> = idx
                            .iter()
                            .map(|t| eval(f, ev, bq, &t.map(&mut |x: &usize| p[*x].clone())).expect("eval"))
                            .collect();
                        out.insert(v);
                    }
                }
                out.into_iter().collect()
            };
            for mask in 1u64..(1u64 << all_preds.len()) {
                let s: Vec<Vec<QValue>> =
                    all_preds.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p.clone()).collect();
                let ps = PredSet::new(bq, c.clone(), s.clone()).expect("valid");
                let gas = gamma_enum(&crate::galois::alpha(&ps), Grid::new(1), DEFAULT_BUDGET).expect("small");
                let left = lift_preds(&gas.preds);
                let lifted = PredSet::new(bq, tc.clone(), lift_preds(&s)).expect("valid");
                let right = gamma_enum(&crate::galois::alpha(&lifted), Grid::new(1), DEFAULT_BUDGET).expect("small");
                let ok = left.iter().all(|p| right.contains(p));
                incl.record(ok, || format!("{} on {:?}, S = {:?}", name, c.elements(), s));
            }
        }
    }
    report.push(incl);

    // Closed form agrees with the definition (Boolean, exhaustive).
    let mut closed = CheckLog::new("closed form = Kantorovich lifting over γ(d) (Boolean, exhaustive)");
    let mut id_closure = CheckLog::new("K_{id}(d) = metric closure (Boolean, exhaustive)");
    for c in carriers(max_size.min(2)) {
        for d in VGraph::enumerate(bq, &c, &bool_values()) {
            let s = gamma_enum(&d, Grid::new(1), DEFAULT_BUDGET).expect("small");
            let id_terms: Vec<FTerm<String>> = c.elements().iter().cloned().map(FTerm::Id).collect();
            let k = kantorovich_generic(&FunctorExpr::Id, &[EvalMap::Id], &d, &s, &id_terms).expect("id");
            id_closure.record(k.rows() == d.metric_closure().rows(), || format!("d =\n{}", d));
            for (name, f) in &shapes {
                let terms = enumerate_terms(f, c.elements(), &TermEnum::new(bool_values())).expect("small");
                let a = lift_closed(f, &d, &terms).expect("closed");
                let b = kantorovich_generic(f, &build_lambda(f), &d, &s, &terms).expect("generic");
                closed.record(a.rows() == b.rows(), || format!("{} with d =\n{}", name, d));
            }
        }
    }
    report.push(closed);
    report.push(id_closure);

    // Compositionality for polynomial F (Boolean, exhaustive on 2 points).
    let mut comp = CheckLog::new("K_{Λ^F} ∘ K_{Λ^G} = K_{Λ^F * Λ^G} for polynomial F (Boolean, exhaustive)");
    let mut below = CheckLog::new("K_{ΛF} ∘ K_{ΛG} ⊑ K_{ΛF * ΛG}");
    let inners: Vec<(String, FunctorExpr)> = vec![
        ("Id".into(), FunctorExpr::Id),
        ("P".into(), FunctorExpr::monad(MonadKind::Powerset, FunctorExpr::Id)),
        ("machine{a}".into(), FunctorExpr::machine(&["a"])),
        ("exception{a}".into(), FunctorExpr::exception(&["a"])),
    ];
    for c in carriers(max_size.min(2)) {
        for d in VGraph::enumerate(bq, &c, &bool_values()) {
            for (fname, f) in &shapes {
                for (gname, g) in &inners {
                    let fg = f.compose(g);
                    let terms = match enumerate_terms(&fg, c.elements(), &TermEnum::new(bool_values())) {
                        Ok(t) => t,
                        Err(_) => continue,
                    };
                    let (lf, lg) = (build_lambda(f), build_lambda(g));
                    let describe = || format!("F = {}, G = {}, d =\n{}", fname, gname, d);
                    match (
                        check_compositionality(f, &lf, g, &lg, &d, &terms, Strategy::Best),
                        check_compositionality(f, &lf, g, &lg, &d, &terms, Strategy::Definition),
                    ) {
                        (Ok(best), Ok(def)) => {
                            comp.record(best.equal && def.equal && best.lhs.rows() == def.lhs.rows(), describe);
                            below.record(best.lhs_below_rhs && def.lhs_below_rhs, describe);
                        }
                        (Err(e), _) | (_, Err(e)) => comp.fail(format!("{}: {}", describe(), e)),
                    }
                }
            }
        }
    }
    report.push(comp);

    // The inequality on the monad counterexamples (unit interval).
    for c in Combination::ALL {
        match counterexample(c) {
            Ok(r) => {
                let ok = q_leq_num(&r.lhs, &r.rhs);
                below.record(ok, || format!("{}: lhs {} rhs {}", c, r.lhs, r.rhs));
            }
            Err(e) => below.fail(format!("{}: {}", c, e)),
        }
    }
    report.push(below);

    // Coproduct construction is associative up to the canonical iso.
    let mut assoc = CheckLog::new("3-way coproduct lifting is associative up to isomorphism");
    let f1 = FunctorExpr::values();
    let f2 = FunctorExpr::Id;
    let f3 = FunctorExpr::pow(&["a"], FunctorExpr::Id);
    let left_assoc = FunctorExpr::Coprod(
        Box::new(FunctorExpr::Coprod(Box::new(f1.clone()), Box::new(f2.clone()))),
        Box::new(f3.clone()),
    );
    let right_assoc =
        FunctorExpr::Coprod(Box::new(f1), Box::new(FunctorExpr::Coprod(Box::new(f2), Box::new(f3))));
    let reassoc = |t: &FTerm<String>| -> FTerm<String> {
        match t {
            FTerm::Inl(b) => match &**b {
                FTerm::Inl(a) => FTerm::inl((**a).clone()),
                FTerm::Inr(a) => FTerm::inr(FTerm::inl((**a).clone())),
                _ => unreachable!("shaped"),
            },
            FTerm::Inr(a) => FTerm::inr(FTerm::inr((**a).clone())),
            _ => unreachable!("shaped"),
        }
    };
    for (q, values) in [
        (bq, bool_values()),
        (Quantale::UnitOplus, vec![QValue::ratio(0, 1), QValue::ratio(1, 2), QValue::ratio(1, 1)]),
    ] {
        for c in carriers(max_size.min(2)) {
            let terms = enumerate_terms(&left_assoc, c.elements(), &TermEnum::new(values.clone())).expect("small");
            let mapped: Vec<FTerm<String>> = terms.iter().map(reassoc).collect();
            for d in VGraph::enumerate(q, &c, &values) {
                let a = lift_closed(&left_assoc, &d, &terms).expect("closed");
                let b = lift_closed(&right_assoc, &d, &mapped).expect("closed");
                assoc.record(a.rows() == b.rows(), || format!("{} d =\n{}", q, d));
            }
        }
    }
    report.push(assoc);

    // Monotonicity and preservation of V-categories.
    let mut mono = CheckLog::new("lift_closed is monotone in d");
    let mut vcat = CheckLog::new("lift_closed maps V-categories to V-categories");
    for (q, values) in [
        (bq, bool_values()),
        (Quantale::UnitOplus, vec![QValue::ratio(0, 1), QValue::ratio(1, 2), QValue::ratio(1, 1)]),
    ] {
        for c in carriers(max_size.min(2)) {
            let graphs = VGraph::enumerate(q, &c, &values);
            for (_, f) in &small_shapes {
                let terms = enumerate_terms(f, c.elements(), &TermEnum::new(values.clone())).expect("small");
                let lifted: Vec<VGraph> = graphs.iter().map(|d| lift_closed(f, d, &terms).expect("closed")).collect();
                for (i, d) in graphs.iter().enumerate() {
                    if d.is_vcat() {
                        vcat.record(lifted[i].is_vcat(), || format!("{} d =\n{}", f, d));
                    }
                    for (j, e) in graphs.iter().enumerate().step_by(7) {
                        if graph_leq(q, d, e) {
                            mono.record(graph_leq(q, &lifted[i], &lifted[j]), || format!("{}: {} ⊑ {}", f, d, e));
                        }
                    }
                }
            }
        }
    }
    report.push(mono);
    report.push(vcat);
    report
}

fn q_leq_num(a: &QValue, b: &QValue) -> bool {
    a.numeric() >= b.numeric()
}

/// Every function from the carrier into the quantale's Boolean values.
fn enumerate_predicates(q: Quantale, c: &Carrier) -> Vec<Vec<QValue>> {
    let values = crate::galois::Grid::new(1).values(q);
    let mut out = vec![Vec::new()];
    for _ in 0..c.len() {
        out = out
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut p = p.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}
