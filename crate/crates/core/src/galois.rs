//! The α ⊣ γ Galois connection between V-graphs and sets of predicates,
//! grid enumeration of γ, and the quantalic McShane–Whitney extensions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantale::{QValue, Quantale, QuantaleError};
use crate::report::{CheckLog, LawReport};
use crate::vgraph::{Carrier, FiniteMap, VGraph, VGraphError};

/// Default cap on the number of candidate functions `gamma_enum` may visit.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaloisError {
    #[error("enumeration needs {candidates} candidates, budget is {budget}")]
    Budget { candidates: String, budget: u64 },
    #[error("predicate is not non-expansive at ({0}, {1})")]
    NotNonExpansive(String, String),
    #[error("predicate shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Graph(#[from] VGraphError),
    #[error(transparent)]
    Quantale(#[from] QuantaleError),
}

type GResult<T> = Result<T, GaloisError>;

/// A finite set of predicates `X → V`, each stored as a vector indexed by
/// the carrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredSet {
    pub quantale: Quantale,
    pub carrier: Carrier,
    pub preds: Vec<Vec<QValue>>,
}

impl PredSet {
    pub fn new(quantale: Quantale, carrier: Carrier, preds: Vec<Vec<QValue>>) -> GResult<Self> {
        for p in &preds {
            if p.len() != carrier.len() {
                return Err(GaloisError::Shape("predicate is not total".into()));
            }
            for v in p {
                quantale.check(v)?;
            }
        }
        Ok(PredSet { quantale, carrier, preds })
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn contains(&self, p: &[QValue]) -> bool {
        self.preds.iter().any(|q| q.as_slice() == p)
    }

    /// `f•(S) = { p ∘ f | p ∈ S }`, for `f : X → carrier`.
    pub fn reindex(&self, f: &FiniteMap) -> GResult<PredSet> {
        if f.codomain != self.carrier {
            return Err(GaloisError::Shape("reindex: codomain ≠ carrier".into()));
        }
        let mut preds: Vec<Vec<QValue>> = Vec::new();
        for p in &self.preds {
            let q: Vec<QValue> = f.assignment().iter().map(|&j| p[j].clone()).collect();
            if !preds.contains(&q) {
                preds.push(q);
            }
        }
        Ok(PredSet { quantale: self.quantale, carrier: f.domain.clone(), preds })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let maps: Vec<serde_json::Map<String, serde_json::Value>> = self
            .preds
            .iter()
            .map(|p| {
                self.carrier
                    .elements()
                    .iter()
                    .zip(p)
                    .map(|(e, v)| (e.clone(), serde_json::to_value(v).expect("serializable")))
                    .collect()
            })
            .collect();
        serde_json::to_value(maps).expect("serializable")
    }
}

/// Resolution of the finite value grid used by enumeration oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub resolution: u32,
    /// Largest finite value for ext-plus grids.
    pub cap: u32,
}

impl Grid {
    pub fn new(resolution: u32) -> Self {
        Grid { resolution: resolution.max(1), cap: 4 }
    }

    pub fn with_cap(resolution: u32, cap: u32) -> Self {
        Grid { resolution: resolution.max(1), cap }
    }

    pub fn values(&self, q: Quantale) -> Vec<QValue> {
        let k = self.resolution as i64;
        match q {
            Quantale::Boolean => vec![QValue::Bool(false), QValue::Bool(true)],
            Quantale::UnitOplus => (0..=k).map(|i| QValue::ratio(i, k)).collect(),
            Quantale::ExtPlus => {
                let mut v: Vec<QValue> =
                    (0..=k * self.cap as i64).map(|i| QValue::ratio(i, k)).collect();
                v.push(QValue::inf());
                v
            }
        }
    }
}

/// `α(S)(x1,x2) = ⊓_{f∈S} d_V(f(x1), f(x2))`; `α(∅)` is all-⊤.
pub fn alpha(s: &PredSet) -> VGraph {
    let q = s.quantale;
    VGraph::from_fn(q, s.carrier.clone(), |i, j| {
        let mut acc = q.top();
        for p in &s.preds {
            let r = q.residuation(&p[i], &p[j]).expect("validated predicate");
            acc = q.meet2(&acc, &r).expect("validated");
        }
        acc
    })
    .expect("residuations are valid")
}

/// The first pair at which `f` fails `d(x,y) ⊑ d_V(f x, f y)`, if any.
pub fn non_expansive_violation(d: &VGraph, f: &[QValue]) -> Option<(usize, usize)> {
    let q = d.quantale();
    for i in 0..d.len() {
        for j in 0..d.len() {
            let r = match q.residuation(&f[i], &f[j]) {
                Ok(r) => r,
                Err(_) => return Some((i, j)),
            };
            if !q.leq(d.get(i, j), &r).unwrap_or(false) {
                return Some((i, j));
            }
        }
    }
    None
}

pub fn is_non_expansive(d: &VGraph, f: &[QValue]) -> bool {
    f.len() == d.len() && non_expansive_violation(d, f).is_none()
}

/// All grid-valued non-expansive predicates, in lexicographic order of
/// grid indices. Exact γ for the Boolean quantale.
pub fn gamma_enum(d: &VGraph, grid: Grid, budget: u64) -> GResult<PredSet> {
    let q = d.quantale();
    let values = grid.values(q);
    let n = d.len();
    let candidates = (values.len() as f64).powi(n as i32);
    if candidates > budget as f64 {
        return Err(GaloisError::Budget {
            candidates: format!("{}^{}", values.len(), n),
            budget,
        });
    }
    // Backtracking; each new position is checked against the assigned ones.
    let ok = |i: usize, j: usize, a: &QValue, b: &QValue| {
        q.leq(d.get(i, j), &q.residuation(a, b).expect("grid")).expect("grid")
    };
    let mut preds = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(n);
    fn rec(
        n: usize,
        values: &[QValue],
        current: &mut Vec<usize>,
        preds: &mut Vec<Vec<QValue>>,
        ok: &dyn Fn(usize, usize, &QValue, &QValue) -> bool,
    ) {
        let pos = current.len();
        if pos == n {
            preds.push(current.iter().map(|&i| values[i].clone()).collect());
            return;
        }
        for (vi, v) in values.iter().enumerate() {
            let consistent = ok(pos, pos, v, v)
                && (0..pos).all(|j| {
                    let w = &values[current[j]];
                    ok(pos, j, v, w) && ok(j, pos, w, v)
                });
            if consistent {
                current.push(vi);
                rec(n, values, current, preds, ok);
                current.pop();
            }
        }
    }
    rec(n, &values, &mut current, &mut preds, &ok);
    Ok(PredSet { quantale: q, carrier: d.carrier().clone(), preds })
}

/// Result of a McShane–Whitney extension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    pub values: Vec<QValue>,
    /// Present when the input graph was not a V-category and was closed first.
    pub warning: Option<String>,
}

fn extension_inputs(
    d: &VGraph,
    sub: &[String],
    f: &[QValue],
) -> GResult<(VGraph, Vec<usize>, Option<String>)> {
    if sub.len() != f.len() {
        return Err(GaloisError::Shape("sub and f differ in length".into()));
    }
    let idx = sub.iter().map(|s| d.carrier().require(s)).collect::<Result<Vec<_>, _>>()?;
    for v in f {
        d.quantale().check(v)?;
    }
    let (dc, warning) = if d.is_vcat() {
        (d.clone(), None)
    } else {
        (d.metric_closure(), Some("input is not a V-category; extended over its metric closure".into()))
    };
    let q = d.quantale();
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            if !q.leq(dc.get(i, j), &q.residuation(&f[a], &f[b])?)? {
                return Err(GaloisError::NotNonExpansive(sub[a].clone(), sub[b].clone()));
            }
        }
    }
    Ok((dc, idx, warning))
}

/// The ⊑-largest non-expansive extension `f̄(x) = ⊓_y d_V(d(x,y), f(y))`.
pub fn extension_largest(d: &VGraph, sub: &[String], f: &[QValue]) -> GResult<Extension> {
    let (dc, idx, warning) = extension_inputs(d, sub, f)?;
    let q = d.quantale();
    let values = (0..dc.len())
        .map(|x| {
            let parts = idx
                .iter()
                .zip(f)
                .map(|(&y, fy)| q.residuation(dc.get(x, y), fy))
                .collect::<Result<Vec<_>, _>>()?;
            q.meet(parts.iter())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Extension { values, warning })
}

/// The ⊑-smallest non-expansive extension `g(x) = ⊔_y f(y) ⊗ d(y,x)`.
pub fn extension_smallest(d: &VGraph, sub: &[String], f: &[QValue]) -> GResult<Extension> {
    let (dc, idx, warning) = extension_inputs(d, sub, f)?;
    let q = d.quantale();
    let values = (0..dc.len())
        .map(|x| {
            let parts = idx
                .iter()
                .zip(f)
                .map(|(&y, fy)| q.tensor(fy, dc.get(y, x)))
                .collect::<Result<Vec<_>, _>>()?;
            q.join(parts.iter())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Extension { values, warning })
}

fn carrier_of(n: usize) -> Carrier {
    Carrier::new((0..n).map(|i| format!("p{}", i))).expect("distinct")
}

/// Galois connection, co-closure, naturality and extension properties.
/// Boolean checks are exhaustive on carriers of size ≤ `max_size`.
pub fn law_suite(max_size: usize) -> LawReport {
    let mut report = LawReport::new("galois");
    let b = Quantale::Boolean;
    let bools = Grid::new(1).values(b);
    let mut galois = CheckLog::new("d ⊑ α(S) ⟺ S ⊆ γ(d) (boolean, exhaustive)");
    let mut coclosure = CheckLog::new("α(γ(d)) = closure(d) (boolean, exhaustive)");
    let mut alpha_vcat = CheckLog::new("α(S) is a V-category (boolean, exhaustive)");
    let mut nat_alpha = CheckLog::new("α(f•T) = f*(α(T)) (boolean, exhaustive)");
    let mut lax_gamma = CheckLog::new("f•γ(d) ⊆ γ(f*d), equality on V-categories (boolean, exhaustive)");

    for n in 0..=max_size {
        let c = carrier_of(n);
        let preds: Vec<Vec<QValue>> = enumerate_functions(n, &bools);
        let subsets = 1usize << preds.len();
        let alphas: Vec<VGraph> = (0..subsets)
            .map(|mask| alpha(&subset(b, &c, &preds, mask)))
            .collect();
        for a in &alphas {
            alpha_vcat.record(a.is_vcat(), || format!("{}", a));
        }
        for d in VGraph::enumerate(b, &c, &bools) {
            let gamma = gamma_enum(&d, Grid::new(1), DEFAULT_BUDGET).expect("small");
            let gmask = mask_of(&preds, &gamma.preds);
            for (mask, a) in alphas.iter().enumerate() {
                let lhs = d.leq(a).expect("same carrier");
                let rhs = mask & !gmask == 0;
                galois.record(lhs == rhs, || format!("d={} S-mask={}", d, mask));
            }
            coclosure.record(alpha(&gamma) == d.metric_closure(), || format!("{}", d));
        }
        for m in 0..=max_size {
            let x = carrier_of(m);
            for f in FiniteMap::all(&x, &c) {
                for (mask, a) in alphas.iter().enumerate() {
                    let t = subset(b, &c, &preds, mask);
                    let lhs = alpha(&t.reindex(&f).expect("shape"));
                    let rhs = a.reindex(&f).expect("shape");
                    nat_alpha.record(lhs == rhs, || format!("f={:?} mask={}", f.assignment(), mask));
                }
                for dy in VGraph::enumerate(b, &c, &bools) {
                    let g = gamma_enum(&dy, Grid::new(1), DEFAULT_BUDGET).expect("small");
                    let lhs = g.reindex(&f).expect("shape");
                    let rhs = gamma_enum(&dy.reindex(&f).expect("shape"), Grid::new(1), DEFAULT_BUDGET)
                        .expect("small");
                    let included = lhs.preds.iter().all(|p| rhs.contains(p));
                    let equal = included && rhs.preds.iter().all(|p| lhs.contains(p));
                    lax_gamma.record(included && (!dy.is_vcat() || equal), || {
                        format!("f={:?} d={}", f.assignment(), dy)
                    });
                }
            }
        }
    }
    report.push(galois);
    report.push(coclosure);
    report.push(alpha_vcat);
    report.push(nat_alpha);
    report.push(lax_gamma);
    report.push(grid_coclosure());
    for c in mcshane_whitney_checks() {
        report.push(c);
    }
    report
}

fn enumerate_functions(n: usize, values: &[QValue]) -> Vec<Vec<QValue>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect();
    }
    out
}

fn subset(q: Quantale, c: &Carrier, preds: &[Vec<QValue>], mask: usize) -> PredSet {
    let chosen = preds
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, p)| p.clone())
        .collect();
    PredSet { quantale: q, carrier: c.clone(), preds: chosen }
}

fn mask_of(all: &[Vec<QValue>], chosen: &[Vec<QValue>]) -> usize {
    all.iter()
        .enumerate()
        .filter(|(_, p)| chosen.contains(p))
        .fold(0, |m, (i, _)| m | 1 << i)
}

/// On unit-oplus, `α(γ_k(d))` descends towards the closure as `k` refines
/// and meets it once the entries of `d` lie on the grid.
fn grid_coclosure() -> CheckLog {
    let q = Quantale::UnitOplus;
    let mut log = CheckLog::new("α(γ_k(d)) ⊒ closure(d), descending in k, equal on grid-valued d (unit-oplus)");
    let halves = Grid::new(2).values(q);
    for n in 2..=3 {
        let c = carrier_of(n);
        for d in VGraph::enumerate(q, &c, &halves).into_iter().step_by(if n == 3 { 97 } else { 1 }) {
            let closure = d.metric_closure();
            let mut prev: Option<VGraph> = None;
            for k in [2u32, 4, 8] {
                let a = alpha(&gamma_enum(&d, Grid::new(k), DEFAULT_BUDGET).expect("small"));
                let above = closure.leq(&a).expect("shape");
                let descending = prev.as_ref().is_none_or(|p| a.leq(p).expect("shape"));
                log.record(above && descending && a == closure, || format!("k={} d={}", k, d));
                prev = Some(a);
            }
        }
    }
    log
}

fn mcshane_whitney_checks() -> Vec<CheckLog> {
    let mut agree = CheckLog::new("McShane–Whitney: extensions agree with f on the subset");
    let mut nonexp = CheckLog::new("McShane–Whitney: extensions are non-expansive");
    let mut extremal = CheckLog::new("McShane–Whitney: f̄ largest and g smallest among grid extensions");
    let instances: Vec<(VGraph, Vec<QValue>)> = {
        let mut v = Vec::new();
        let c = carrier_of(3);
        for (q, entries, fvals) in [
            (Quantale::UnitOplus, Grid::new(2).values(Quantale::UnitOplus), Grid::new(2).values(Quantale::UnitOplus)),
            (
                Quantale::ExtPlus,
                vec![QValue::ratio(0, 1), QValue::ratio(1, 1), QValue::inf()],
                vec![QValue::ratio(0, 1), QValue::ratio(1, 1), QValue::ratio(2, 1)],
            ),
        ] {
            for d in VGraph::enumerate(q, &c, &entries).into_iter().step_by(29) {
                let d = d.metric_closure();
                for a in &fvals {
                    for b in &fvals {
                        v.push((d.clone(), vec![a.clone(), b.clone()]));
                    }
                }
            }
        }
        v
    };
    let sub = vec!["p0".to_string(), "p1".to_string()];
    for (d, f) in instances {
        let q = d.quantale();
        let sub_graph = VGraph::from_fn(q, Carrier::new(sub.clone()).unwrap(), |i, j| d.get(i, j).clone())
            .expect("valid");
        if !is_non_expansive(&sub_graph, &f) {
            continue;
        }
        let hi = extension_largest(&d, &sub, &f).expect("valid instance");
        let lo = extension_smallest(&d, &sub, &f).expect("valid instance");
        agree.record(hi.values[..2] == f[..] && lo.values[..2] == f[..], || format!("d={} f={:?}", d, f));
        nonexp.record(is_non_expansive(&d, &hi.values) && is_non_expansive(&d, &lo.values), || {
            format!("d={} f={:?}", d, f)
        });
        let grid = match q {
            Quantale::ExtPlus => Grid::with_cap(1, 6).values(q),
            _ => Grid::new(4).values(q),
        };
        let mut ok = true;
        for h in &grid {
            let cand = vec![f[0].clone(), f[1].clone(), h.clone()];
            if is_non_expansive(&d, &cand) {
                ok &= q.leq(h, &hi.values[2]).unwrap() && q.leq(&lo.values[2], h).unwrap();
            }
        }
        // both extremal extensions are themselves grid-valued here
        ok &= grid.contains(&hi.values[2]) && grid.contains(&lo.values[2]);
        extremal.record(ok, || format!("d={} f={:?}", d, f));
    }
    vec![agree, nonexp, extremal]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> QValue {
        s.parse().unwrap()
    }

    fn xy() -> Carrier {
        Carrier::new(["x", "y"]).unwrap()
    }

    #[test]
    fn alpha_of_characteristic_predicate() {
        let s = PredSet::new(Quantale::Boolean, xy(), vec![vec![v("true"), v("false")]]).unwrap();
        let a = alpha(&s);
        assert_eq!(a.at("x", "y").unwrap(), &v("false"));
        assert_eq!(a.at("y", "x").unwrap(), &v("true"));
        assert_eq!(a.at("x", "x").unwrap(), &v("true"));
    }

    #[test]
    fn alpha_of_empty_set_is_top() {
        let s = PredSet::new(Quantale::UnitOplus, xy(), vec![]).unwrap();
        assert_eq!(alpha(&s), VGraph::top(Quantale::UnitOplus, xy()));
    }

    #[test]
    fn alpha_single_real_predicate() {
        let s = PredSet::new(Quantale::UnitOplus, xy(), vec![vec![v("0"), v("0.4")]]).unwrap();
        let a = alpha(&s);
        assert_eq!(a.at("x", "y").unwrap(), &v("2/5"));
        assert_eq!(a.at("y", "x").unwrap(), &v("0"));
    }

    #[test]
    fn gamma_examples() {
        let disc = VGraph::discrete(Quantale::Boolean, xy());
        assert_eq!(gamma_enum(&disc, Grid::new(1), DEFAULT_BUDGET).unwrap().len(), 4);
        // x ⊑ y: d(x,y) = ⊤ forces f(x) → f(y)
        let mut ord = disc.clone();
        ord.set(0, 1, v("true")).unwrap();
        let g = gamma_enum(&ord, Grid::new(1), DEFAULT_BUDGET).unwrap();
        assert_eq!(g.len(), 3);
        assert!(!g.contains(&[v("true"), v("false")]));
        let udisc = VGraph::discrete(Quantale::UnitOplus, xy());
        assert_eq!(gamma_enum(&udisc, Grid::new(2), DEFAULT_BUDGET).unwrap().len(), 9);
    }

    #[test]
    fn gamma_budget_refusal() {
        let c = Carrier::new((0..8).map(|i| i.to_string())).unwrap();
        let d = VGraph::discrete(Quantale::UnitOplus, c);
        assert!(matches!(gamma_enum(&d, Grid::new(8), 1000), Err(GaloisError::Budget { .. })));
    }

    #[test]
    fn geographic_extensions() {
        let c = Carrier::new(["A", "B", "C"]).unwrap();
        let m = [["0", "3", "5"], ["3", "0", "4"], ["5", "4", "0"]];
        let d = VGraph::from_fn(Quantale::ExtPlus, c, |i, j| v(m[i][j])).unwrap();
        let sub = vec!["A".to_string(), "B".to_string()];
        let f = vec![v("0"), v("3")];
        let hi = extension_largest(&d, &sub, &f).unwrap();
        let lo = extension_smallest(&d, &sub, &f).unwrap();
        assert_eq!(hi.values, vec![v("0"), v("3"), v("0")]);
        assert_eq!(lo.values, vec![v("0"), v("3"), v("5")]);
        // exhaustive search over integers 0..=10: valid values of f(C) form [0,5]
        let valid: Vec<i64> = (0..=10)
            .filter(|&h| is_non_expansive(&d, &[v("0"), v("3"), QValue::ratio(h, 1)]))
            .collect();
        assert_eq!(valid, (0..=5).collect::<Vec<_>>());
    }

    #[test]
    fn extension_of_total_predicate_is_itself() {
        let c = Carrier::new(["A", "B"]).unwrap();
        let d = VGraph::discrete(Quantale::UnitOplus, c);
        let sub = vec!["A".to_string(), "B".to_string()];
        let f = vec![v("1/3"), v("1")];
        assert_eq!(extension_largest(&d, &sub, &f).unwrap().values, f);
        assert_eq!(extension_smallest(&d, &sub, &f).unwrap().values, f);
    }

    #[test]
    fn extension_rejects_expanding_input_and_warns_on_graphs() {
        let c = Carrier::new(["A", "B", "C"]).unwrap();
        let m = [["0", "1/4", "1"], ["1/4", "0", "1/4"], ["1", "1", "0"]];
        let d = VGraph::from_fn(Quantale::UnitOplus, c, |i, j| v(m[i][j])).unwrap();
        let sub = vec!["A".to_string(), "B".to_string()];
        let err = extension_largest(&d, &sub, &[v("0"), v("1")]).unwrap_err();
        assert_eq!(err, GaloisError::NotNonExpansive("A".into(), "B".into()));
        let ok = extension_largest(&d, &sub, &[v("0"), v("1/4")]).unwrap();
        assert!(ok.warning.is_some());
    }

    #[test]
    fn small_law_suite_passes() {
        let r = law_suite(2);
        assert!(r.passed(), "{}", r);
    }
}
