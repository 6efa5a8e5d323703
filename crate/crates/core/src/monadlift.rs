//! The finite powerset and subdistribution monads, their evaluation maps
//! (sup and expectation), and the closed-form liftings they induce: the
//! directed Hausdorff distance and the Kantorovich transport LP.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantale::{parse_rat, Ext, QValue, Quantale, QuantaleError, Rat};
use crate::simplex::{LpError, LpProblem, Relation};
use crate::vgraph::{VGraph, VGraphError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonadError {
    #[error("invalid subdistribution: {0}")]
    Weights(String),
    #[error("expected a {expected} value, found a {found} value")]
    Kind { expected: MonadKind, found: MonadKind },
    #[error("expectation is not defined over the {0} quantale")]
    NoExpectation(Quantale),
    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(Rat, Rat),
    #[error("LP solver failed ({error}) on\n{dump}")]
    Solver { error: LpError, dump: String },
    #[error(transparent)]
    Graph(#[from] VGraphError),
    #[error(transparent)]
    Quantale(#[from] QuantaleError),
}

type MResult<T> = Result<T, MonadError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonadKind {
    Powerset,
    Subdist,
}

impl fmt::Display for MonadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MonadKind::Powerset => "powerset",
            MonadKind::Subdist => "subdist",
        })
    }
}

/// A finitely supported subdistribution: positive weights summing to ≤ 1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubDist<T: Ord> {
    weights: BTreeMap<T, Rat>,
}

impl<T: Ord + Clone> SubDist<T> {
    /// Merges repeated points and drops zero weights.
    pub fn new(pairs: impl IntoIterator<Item = (T, Rat)>) -> MResult<Self> {
        let mut weights: BTreeMap<T, Rat> = BTreeMap::new();
        for (x, w) in pairs {
            if w.is_negative() {
                return Err(MonadError::Weights(format!("negative weight {}", w)));
            }
            *weights.entry(x).or_insert_with(Rat::zero) += w;
        }
        weights.retain(|_, w| !w.is_zero());
        let d = SubDist { weights };
        if d.mass() > Rat::one() {
            return Err(MonadError::Weights(format!("total mass {} exceeds 1", d.mass())));
        }
        Ok(d)
    }

    pub fn empty() -> Self {
        SubDist { weights: BTreeMap::new() }
    }

    pub fn dirac(x: T) -> Self {
        SubDist { weights: BTreeMap::from([(x, Rat::one())]) }
    }

    pub fn mass(&self) -> Rat {
        self.weights.values().sum()
    }

    pub fn weight(&self, x: &T) -> Rat {
        self.weights.get(x).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.weights.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Rat)> {
        self.weights.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Pushforward along `f`.
    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> SubDist<U> {
        let mut weights: BTreeMap<U, Rat> = BTreeMap::new();
        for (x, w) in &self.weights {
            *weights.entry(f(x)).or_insert_with(Rat::zero) += w;
        }
        SubDist { weights }
    }

    pub fn try_map<U: Ord + Clone, E>(&self, mut f: impl FnMut(&T) -> Result<U, E>) -> Result<SubDist<U>, E> {
        let mut weights: BTreeMap<U, Rat> = BTreeMap::new();
        for (x, w) in &self.weights {
            *weights.entry(f(x)?).or_insert_with(Rat::zero) += w;
        }
        Ok(SubDist { weights })
    }

    /// Restriction to the points satisfying `keep` (no renormalization).
    pub fn restrict(&self, mut keep: impl FnMut(&T) -> bool) -> Self {
        let weights = self.weights.iter().filter(|(x, _)| keep(x)).map(|(x, w)| (x.clone(), w.clone())).collect();
        SubDist { weights }
    }

    pub fn scale(&self, p: &Rat) -> Self {
        let weights = self
            .weights
            .iter()
            .filter(|_| !p.is_zero())
            .map(|(x, w)| (x.clone(), w * p))
            .collect();
        SubDist { weights }
    }
}

impl<T: Ord + Clone> SubDist<SubDist<T>> {
    /// Flattening: `x ↦ Σ_ν p(ν)·ν(x)`.
    pub fn flatten(&self) -> SubDist<T> {
        let mut weights: BTreeMap<T, Rat> = BTreeMap::new();
        for (inner, p) in &self.weights {
            for (x, w) in &inner.weights {
                *weights.entry(x.clone()).or_insert_with(Rat::zero) += p * w;
            }
        }
        weights.retain(|_, w| !w.is_zero());
        SubDist { weights }
    }
}

impl<T: Ord + fmt::Display> fmt::Display for SubDist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weights.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.weights.iter().map(|(x, w)| format!("{}·{}", w, x)).collect();
        f.write_str(&parts.join(" + "))
    }
}

impl Serialize for SubDist<String> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let weights: BTreeMap<&String, String> = self.weights.iter().map(|(x, w)| (x, w.to_string())).collect();
        #[derive(Serialize)]
        struct Raw<'a> {
            weights: BTreeMap<&'a String, String>,
        }
        Raw { weights }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SubDist<String> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            weights: BTreeMap<String, String>,
        }
        let raw = Raw::deserialize(d)?;
        let pairs = raw
            .weights
            .into_iter()
            .map(|(x, w)| parse_rat(&w).map(|w| (x, w)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        SubDist::new(pairs).map_err(serde::de::Error::custom)
    }
}

/// An element of `TX` for either monad.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MValue<T: Ord> {
    Set(BTreeSet<T>),
    Dist(SubDist<T>),
}

impl<T: Ord + Clone> MValue<T> {
    pub fn kind(&self) -> MonadKind {
        match self {
            MValue::Set(_) => MonadKind::Powerset,
            MValue::Dist(_) => MonadKind::Subdist,
        }
    }

    pub fn unit(kind: MonadKind, x: T) -> Self {
        match kind {
            MonadKind::Powerset => MValue::Set(BTreeSet::from([x])),
            MonadKind::Subdist => MValue::Dist(SubDist::dirac(x)),
        }
    }

    pub fn empty(kind: MonadKind) -> Self {
        match kind {
            MonadKind::Powerset => MValue::Set(BTreeSet::new()),
            MonadKind::Subdist => MValue::Dist(SubDist::empty()),
        }
    }

    pub fn support(&self) -> Vec<&T> {
        match self {
            MValue::Set(s) => s.iter().collect(),
            MValue::Dist(d) => d.support().collect(),
        }
    }

    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> MValue<U> {
        match self {
            MValue::Set(s) => MValue::Set(s.iter().map(f).collect()),
            MValue::Dist(d) => MValue::Dist(d.map(&mut f)),
        }
    }

    pub fn try_map<U: Ord + Clone, E>(&self, mut f: impl FnMut(&T) -> Result<U, E>) -> Result<MValue<U>, E> {
        Ok(match self {
            MValue::Set(s) => MValue::Set(s.iter().map(&mut f).collect::<Result<_, _>>()?),
            MValue::Dist(d) => MValue::Dist(d.try_map(f)?),
        })
    }

    pub fn restrict(&self, mut keep: impl FnMut(&T) -> bool) -> Self {
        match self {
            MValue::Set(s) => MValue::Set(s.iter().filter(|x| keep(x)).cloned().collect()),
            MValue::Dist(d) => MValue::Dist(d.restrict(keep)),
        }
    }
}

impl<T: Ord + Clone> MValue<MValue<T>> {
    /// The monad multiplication μ. Mixed-kind inputs are rejected.
    pub fn flatten(&self) -> MResult<MValue<T>> {
        match self {
            MValue::Set(s) => {
                let mut out = BTreeSet::new();
                for inner in s {
                    match inner {
                        MValue::Set(i) => out.extend(i.iter().cloned()),
                        other => {
                            return Err(MonadError::Kind { expected: MonadKind::Powerset, found: other.kind() })
                        }
                    }
                }
                Ok(MValue::Set(out))
            }
            MValue::Dist(d) => {
                let inner = d.try_map(|m| match m {
                    MValue::Dist(i) => Ok(i.clone()),
                    other => Err(MonadError::Kind { expected: MonadKind::Subdist, found: other.kind() }),
                })?;
                Ok(MValue::Dist(inner.flatten()))
            }
        }
    }
}

impl<T: Ord + fmt::Display> fmt::Display for MValue<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MValue::Set(s) => {
                let parts: Vec<String> = s.iter().map(|x| x.to_string()).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
            MValue::Dist(d) => write!(f, "{}", d),
        }
    }
}

/// Expected value `Σ p(v)·v` with `0·∞ = 0`.
pub fn expectation(q: Quantale, d: &SubDist<QValue>) -> MResult<QValue> {
    if q == Quantale::Boolean {
        return Err(MonadError::NoExpectation(q));
    }
    let mut acc = Ext::zero();
    for (v, p) in d.iter() {
        q.check(v)?;
        acc = acc.add(&v.as_ext().expect("checked").scale(p));
    }
    Ok(QValue::Num(acc))
}

/// The monad's evaluation map: numeric sup (the quantale meet, with
/// `sup ∅ = ⊤`) for powerset, expectation for subdistributions.
pub fn ev_monad(q: Quantale, t: &MValue<QValue>) -> MResult<QValue> {
    match t {
        MValue::Set(s) => Ok(q.meet(s.iter())?),
        MValue::Dist(d) => expectation(q, d),
    }
}

/// `⊓_{v∈V} ⊔_{u∈U} dc(u,v)`, i.e. numerically `sup_v inf_u dc(u,v)`, over
/// the metric closure `dc` of `d`.
pub fn hausdorff_directed(d: &VGraph, u: &BTreeSet<String>, v: &BTreeSet<String>) -> MResult<QValue> {
    let dc = d.metric_closure();
    hausdorff_closed(&dc, u, v)
}

/// As [`hausdorff_directed`], for a graph that is already a V-category.
pub fn hausdorff_closed(dc: &VGraph, u: &BTreeSet<String>, v: &BTreeSet<String>) -> MResult<QValue> {
    let q = dc.quantale();
    let ui = u.iter().map(|x| dc.carrier().require(x)).collect::<Result<Vec<_>, _>>()?;
    let vi = v.iter().map(|x| dc.carrier().require(x)).collect::<Result<Vec<_>, _>>()?;
    let mut acc = q.top();
    for &b in &vi {
        let inner = q.join(ui.iter().map(|&a| dc.get(a, b)))?;
        acc = q.meet2(&acc, &inner)?;
    }
    Ok(acc)
}

/// Result of the transport LP: the distance and an optimal pricing function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpDistance {
    pub value: QValue,
    /// `None` when the optimum is unbounded (value ∞).
    pub pricing: Option<Vec<Rat>>,
    pub problem: LpProblem,
}

/// Directed Kantorovich distance: the maximum of `Σ f(x)(q(x) − p(x))` over
/// pricing functions with `f(y) − f(x) ≤ dc(x,y)`, `f ≥ 0`, and `f ≤ 1` on
/// unit-oplus. On ext-plus an unbounded optimum means distance ∞.
pub fn kantorovich_lp(d: &VGraph, p: &SubDist<String>, q: &SubDist<String>) -> MResult<LpDistance> {
    kantorovich_lp_with(d, p, q, true)
}

/// As [`kantorovich_lp`], choosing whether the constraints use the closure
/// of `d` or `d` itself (the optima coincide).
pub fn kantorovich_lp_with(
    d: &VGraph,
    p: &SubDist<String>,
    q: &SubDist<String>,
    use_closure: bool,
) -> MResult<LpDistance> {
    let quant = d.quantale();
    if quant == Quantale::Boolean {
        return Err(MonadError::NoExpectation(quant));
    }
    if p.mass() != q.mass() {
        return Err(MonadError::MassMismatch(p.mass(), q.mass()));
    }
    for x in p.support().chain(q.support()) {
        d.carrier().require(x)?;
    }
    let dc = if use_closure { d.metric_closure() } else { d.clone() };
    let n = dc.len();
    let cap = match quant {
        Quantale::UnitOplus => Some(Rat::one()),
        _ => None,
    };
    let mut lp = LpProblem::new();
    let vars: Vec<usize> = (0..n)
        .map(|i| lp.add_var(format!("f({})", dc.carrier().name(i)), Some(Rat::zero()), cap.clone()))
        .collect();
    for (i, &v) in vars.iter().enumerate() {
        let x = dc.carrier().name(i).to_string();
        lp.set_objective(v, q.weight(&x) - p.weight(&x));
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if let QValue::Num(Ext::Fin(c)) = dc.get(i, j) {
                lp.add_constraint(
                    vec![(vars[j], Rat::one()), (vars[i], -Rat::one())],
                    Relation::Le,
                    c.clone(),
                );
            }
        }
    }
    match lp.solve() {
        Ok(sol) => Ok(LpDistance { value: QValue::num(sol.optimum), pricing: Some(sol.assignment), problem: lp }),
        Err(LpError::Unbounded) if quant == Quantale::ExtPlus => {
            Ok(LpDistance { value: QValue::inf(), pricing: None, problem: lp })
        }
        Err(error) => Err(MonadError::Solver { error, dump: lp.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantale::rat;
    use crate::vgraph::Carrier;

    fn v(s: &str) -> QValue {
        s.parse().unwrap()
    }

    fn dist(pairs: &[(&str, &str)]) -> SubDist<String> {
        SubDist::new(pairs.iter().map(|(x, w)| (x.to_string(), parse_rat(w).unwrap()))).unwrap()
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn geographic() -> VGraph {
        let c = Carrier::new(["A", "B", "C"]).unwrap();
        let m = [["0", "3", "5"], ["3", "0", "4"], ["5", "4", "0"]];
        VGraph::from_fn(Quantale::ExtPlus, c, |i, j| v(m[i][j])).unwrap()
    }

    #[test]
    fn transport_example() {
        let p = dist(&[("A", "7/10"), ("B", "1/10"), ("C", "2/10")]);
        let q = dist(&[("A", "2/10"), ("B", "3/10"), ("C", "5/10")]);
        let r = kantorovich_lp(&geographic(), &p, &q).unwrap();
        assert_eq!(r.value, v("21/10"));
        let f = vec![rat(0, 1), rat(3, 1), rat(5, 1)];
        assert!(r.problem.violation(&f).is_none());
        assert_eq!(r.problem.objective_value(&f), rat(21, 10));
    }

    #[test]
    fn equal_distributions_are_at_distance_zero() {
        let p = dist(&[("A", "1/2"), ("C", "1/2")]);
        assert_eq!(kantorovich_lp(&geographic(), &p, &p).unwrap().value, v("0"));
    }

    #[test]
    fn two_point_discrete_metric() {
        let c = Carrier::new(["x", "y"]).unwrap();
        let d = VGraph::discrete(Quantale::UnitOplus, c);
        let p = dist(&[("x", "1/3"), ("y", "2/3")]);
        let q = dist(&[("x", "3/4"), ("y", "1/4")]);
        let a = kantorovich_lp(&d, &p, &q).unwrap().value;
        let b = kantorovich_lp(&d, &q, &p).unwrap().value;
        assert_eq!(a, v("5/12"));
        assert_eq!(b, v("5/12"));
    }

    #[test]
    fn infinite_distances_and_mass_mismatch() {
        let c = Carrier::new(["x", "y"]).unwrap();
        let d = VGraph::discrete(Quantale::ExtPlus, c);
        let r = kantorovich_lp(&d, &dist(&[("x", "1")]), &dist(&[("y", "1")])).unwrap();
        assert_eq!(r.value, QValue::inf());
        assert!(matches!(
            kantorovich_lp(&d, &dist(&[("x", "1")]), &dist(&[("y", "1/2")])),
            Err(MonadError::MassMismatch(..))
        ));
    }

    #[test]
    fn hausdorff_examples() {
        let c = Carrier::new(["x", "y"]).unwrap();
        let d = VGraph::discrete(Quantale::UnitOplus, c);
        assert_eq!(hausdorff_directed(&d, &set(&["x"]), &set(&["y"])).unwrap(), v("1"));
        assert_eq!(hausdorff_directed(&d, &set(&["x", "y"]), &set(&["x"])).unwrap(), v("0"));
        assert_eq!(hausdorff_directed(&d, &set(&["x"]), &set(&[])).unwrap(), v("0"));
        assert_eq!(hausdorff_directed(&d, &set(&[]), &set(&["x"])).unwrap(), v("1"));
        assert_eq!(
            hausdorff_directed(&geographic(), &set(&[]), &set(&["A"])).unwrap(),
            QValue::inf()
        );
    }

    #[test]
    fn evaluation_maps() {
        let q = Quantale::UnitOplus;
        let s = MValue::Set([v("0"), v("1/2")].into_iter().collect());
        assert_eq!(ev_monad(q, &s).unwrap(), v("1/2"));
        assert_eq!(ev_monad(q, &MValue::Set(BTreeSet::new())).unwrap(), v("0"));
        assert_eq!(ev_monad(q, &MValue::Dist(SubDist::dirac(v("1/3")))).unwrap(), v("1/3"));
        let e = SubDist::new([(v("inf"), rat(1, 2)), (v("0"), rat(1, 2))]).unwrap();
        assert_eq!(ev_monad(Quantale::ExtPlus, &MValue::Dist(e)).unwrap(), QValue::inf());
        assert!(ev_monad(Quantale::Boolean, &MValue::Dist(SubDist::dirac(v("true")))).is_err());
    }

    #[test]
    fn multiplication() {
        let a: MValue<&str> = MValue::Set(["x"].into_iter().collect());
        let b: MValue<&str> = MValue::Set(["x", "y"].into_iter().collect());
        let s = MValue::Set([a, b].into_iter().collect());
        assert_eq!(s.flatten().unwrap(), MValue::Set(["x", "y"].into_iter().collect()));
        let dx = MValue::Dist(SubDist::dirac("x"));
        let dy = MValue::Dist(SubDist::dirac("y"));
        let m = MValue::Dist(SubDist::new([(dx, rat(1, 2)), (dy, rat(1, 2))]).unwrap());
        let flat = m.flatten().unwrap();
        assert_eq!(flat, MValue::Dist(SubDist::new([("x", rat(1, 2)), ("y", rat(1, 2))]).unwrap()));
    }

    #[test]
    fn subdist_validation_and_json() {
        assert!(SubDist::new([("x", rat(3, 4)), ("y", rat(1, 2))]).is_err());
        assert!(SubDist::new([("x", rat(-1, 4))]).is_err());
        let d: SubDist<String> = serde_json::from_str(r#"{"weights":{"x":"7/10","y":"0.3"}}"#).unwrap();
        assert_eq!(d.weight(&"y".to_string()), rat(3, 10));
        assert_eq!(serde_json::to_string(&d).unwrap(), r#"{"weights":{"x":"7/10","y":"3/10"}}"#);
    }
}
