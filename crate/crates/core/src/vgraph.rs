//! Finite V-graphs (`d : X × X → V`) and V-categories, with the pointwise
//! lattice structure, reindexing `f*`, direct images `Σ_f`, and metric
//! closure.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantale::{QValue, Quantale, QuantaleError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VGraphError {
    #[error("duplicate carrier element `{0}`")]
    Duplicate(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("distance matrix must be {expected}×{expected}")]
    Dimension { expected: usize },
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    #[error("quantale mismatch: {0} vs {1}")]
    QuantaleMismatch(Quantale, Quantale),
    #[error(transparent)]
    Quantale(#[from] QuantaleError),
}

type VResult<T> = Result<T, VGraphError>;

/// An ordered list of distinct element names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Carrier {
    elems: Vec<String>,
    index: HashMap<String, usize>,
}

impl Carrier {
    pub fn new<S: Into<String>>(elems: impl IntoIterator<Item = S>) -> VResult<Self> {
        let elems: Vec<String> = elems.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(elems.len());
        for (i, e) in elems.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(VGraphError::Duplicate(e.clone()));
            }
        }
        Ok(Carrier { elems, index })
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elems
    }

    pub fn name(&self, i: usize) -> &str {
        &self.elems[i]
    }

    pub fn index_of(&self, e: &str) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn require(&self, e: &str) -> VResult<usize> {
        self.index_of(e).ok_or_else(|| VGraphError::UnknownElement(e.to_string()))
    }

    pub fn contains(&self, e: &str) -> bool {
        self.index.contains_key(e)
    }
}

/// A total map between carriers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMap {
    pub domain: Carrier,
    pub codomain: Carrier,
    assignment: Vec<usize>,
}

impl FiniteMap {
    pub fn from_indices(domain: Carrier, codomain: Carrier, assignment: Vec<usize>) -> VResult<Self> {
        if assignment.len() != domain.len() {
            return Err(VGraphError::CarrierMismatch("map is not total".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&j| j >= codomain.len()) {
            return Err(VGraphError::CarrierMismatch(format!("image index {} out of range", bad)));
        }
        Ok(FiniteMap { domain, codomain, assignment })
    }

    pub fn from_pairs(domain: Carrier, codomain: Carrier, pairs: &[(&str, &str)]) -> VResult<Self> {
        let mut assignment = vec![usize::MAX; domain.len()];
        for (x, y) in pairs {
            assignment[domain.require(x)?] = codomain.require(y)?;
        }
        if let Some(i) = assignment.iter().position(|&j| j == usize::MAX) {
            return Err(VGraphError::CarrierMismatch(format!(
                "map undefined at `{}`",
                domain.name(i)
            )));
        }
        Ok(FiniteMap { domain, codomain, assignment })
    }

    pub fn identity(c: &Carrier) -> Self {
        FiniteMap { domain: c.clone(), codomain: c.clone(), assignment: (0..c.len()).collect() }
    }

    pub fn apply(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// `g ∘ self`.
    pub fn then(&self, g: &FiniteMap) -> VResult<FiniteMap> {
        if self.codomain != g.domain {
            return Err(VGraphError::CarrierMismatch("composition".into()));
        }
        let assignment = self.assignment.iter().map(|&j| g.assignment[j]).collect();
        Ok(FiniteMap { domain: self.domain.clone(), codomain: g.codomain.clone(), assignment })
    }

    /// Every total map from `domain` to `codomain`.
    pub fn all(domain: &Carrier, codomain: &Carrier) -> Vec<FiniteMap> {
        let (n, m) = (domain.len(), codomain.len());
        if m == 0 {
            return if n == 0 { vec![FiniteMap::identity(domain)] } else { Vec::new() };
        }
        let mut out = Vec::new();
        let mut a = vec![0usize; n];
        loop {
            out.push(FiniteMap {
                domain: domain.clone(),
                codomain: codomain.clone(),
                assignment: a.clone(),
            });
            let mut i = 0;
            while i < n && a[i] + 1 == m {
                a[i] = 0;
                i += 1;
            }
            if i == n {
                return out;
            }
            a[i] += 1;
        }
    }
}

/// A V-valued distance matrix on a finite carrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VGraph {
    quantale: Quantale,
    carrier: Carrier,
    dist: Vec<Vec<QValue>>,
}

impl VGraph {
    pub fn new(quantale: Quantale, carrier: Carrier, dist: Vec<Vec<QValue>>) -> VResult<Self> {
        let n = carrier.len();
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(VGraphError::Dimension { expected: n });
        }
        for v in dist.iter().flatten() {
            quantale.check(v)?;
        }
        Ok(VGraph { quantale, carrier, dist })
    }

    pub fn from_fn(
        quantale: Quantale,
        carrier: Carrier,
        mut f: impl FnMut(usize, usize) -> QValue,
    ) -> VResult<Self> {
        let n = carrier.len();
        let dist = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        VGraph::new(quantale, carrier, dist)
    }

    pub fn constant(quantale: Quantale, carrier: Carrier, v: QValue) -> VResult<Self> {
        VGraph::from_fn(quantale, carrier, |_, _| v.clone())
    }

    pub fn top(quantale: Quantale, carrier: Carrier) -> Self {
        VGraph::constant(quantale, carrier, quantale.top()).expect("⊤ is valid")
    }

    /// ⊤ on the diagonal, ⊥ elsewhere.
    pub fn discrete(quantale: Quantale, carrier: Carrier) -> Self {
        VGraph::from_fn(quantale, carrier, |i, j| {
            if i == j {
                quantale.top()
            } else {
                quantale.bottom()
            }
        })
        .expect("⊤/⊥ are valid")
    }

    pub fn quantale(&self) -> Quantale {
        self.quantale
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn len(&self) -> usize {
        self.carrier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carrier.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> &QValue {
        &self.dist[i][j]
    }

    pub fn at(&self, x: &str, y: &str) -> VResult<&QValue> {
        Ok(&self.dist[self.carrier.require(x)?][self.carrier.require(y)?])
    }

    pub fn set(&mut self, i: usize, j: usize, v: QValue) -> VResult<()> {
        self.quantale.check(&v)?;
        self.dist[i][j] = v;
        Ok(())
    }

    pub fn rows(&self) -> &[Vec<QValue>] {
        &self.dist
    }

    fn same_shape(&self, other: &VGraph) -> VResult<()> {
        if self.quantale != other.quantale {
            return Err(VGraphError::QuantaleMismatch(self.quantale, other.quantale));
        }
        if self.carrier != other.carrier {
            return Err(VGraphError::CarrierMismatch("graphs over different carriers".into()));
        }
        Ok(())
    }

    /// Pointwise ⊑.
    pub fn leq(&self, other: &VGraph) -> VResult<bool> {
        self.same_shape(other)?;
        for (r1, r2) in self.dist.iter().zip(&other.dist) {
            for (a, b) in r1.iter().zip(r2) {
                if !self.quantale.leq(a, b)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn join(&self, other: &VGraph) -> VResult<VGraph> {
        self.same_shape(other)?;
        self.zip_with(other, |q, a, b| q.join2(a, b))
    }

    pub fn meet(&self, other: &VGraph) -> VResult<VGraph> {
        self.same_shape(other)?;
        self.zip_with(other, |q, a, b| q.meet2(a, b))
    }

    fn zip_with(
        &self,
        other: &VGraph,
        f: impl Fn(Quantale, &QValue, &QValue) -> Result<QValue, QuantaleError>,
    ) -> VResult<VGraph> {
        let mut dist = Vec::with_capacity(self.len());
        for (r1, r2) in self.dist.iter().zip(&other.dist) {
            let row = r1.iter().zip(r2).map(|(a, b)| f(self.quantale, a, b));
            dist.push(row.collect::<Result<Vec<_>, _>>()?);
        }
        Ok(VGraph { quantale: self.quantale, carrier: self.carrier.clone(), dist })
    }

    /// `f*(d) = d ∘ (f × f)` on the domain of `f`.
    pub fn reindex(&self, f: &FiniteMap) -> VResult<VGraph> {
        if f.codomain != self.carrier {
            return Err(VGraphError::CarrierMismatch("reindex: codomain ≠ carrier".into()));
        }
        let a = f.assignment();
        let dist = a.iter().map(|&i| a.iter().map(|&j| self.dist[i][j].clone()).collect()).collect();
        Ok(VGraph { quantale: self.quantale, carrier: f.domain.clone(), dist })
    }

    /// `Σ_f(d)(y1,y2) = ⊔_{f(x_i)=y_i} d(x1,x2)`; empty preimages give ⊥.
    pub fn direct_image(&self, f: &FiniteMap) -> VResult<VGraph> {
        if f.domain != self.carrier {
            return Err(VGraphError::CarrierMismatch("direct image: domain ≠ carrier".into()));
        }
        let q = self.quantale;
        let m = f.codomain.len();
        let mut dist = vec![vec![q.bottom(); m]; m];
        for i in 0..self.len() {
            for j in 0..self.len() {
                let (a, b) = (f.apply(i), f.apply(j));
                dist[a][b] = q.join2(&dist[a][b], &self.dist[i][j])?;
            }
        }
        Ok(VGraph { quantale: q, carrier: f.codomain.clone(), dist })
    }

    /// `k ⊑ d(x,x)` and `d(x,y) ⊗ d(y,z) ⊑ d(x,z)`.
    pub fn is_vcat(&self) -> bool {
        let q = self.quantale;
        let n = self.len();
        let leq = |a: &QValue, b: &QValue| q.leq(a, b).expect("validated entries");
        for x in 0..n {
            if !leq(&q.unit(), &self.dist[x][x]) {
                return false;
            }
            for y in 0..n {
                for z in 0..n {
                    let t = q.tensor(&self.dist[x][y], &self.dist[y][z]).expect("validated");
                    if !leq(&t, &self.dist[x][z]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// The ⊑-least V-category above `self`.
    ///
    /// All three quantales are integral (k = ⊤), so one Floyd–Warshall pass
    /// over the (⊔, ⊗) semiring reaches the transitive closure.
    pub fn metric_closure(&self) -> VGraph {
        let q = self.quantale;
        let n = self.len();
        let mut d = self.dist.clone();
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = q.join2(&row[i], &q.unit()).expect("validated");
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = q.tensor(&d[i][k], &d[k][j]).expect("validated");
                    d[i][j] = q.join2(&d[i][j], &via).expect("validated");
                }
            }
        }
        VGraph { quantale: q, carrier: self.carrier.clone(), dist: d }
    }

    /// Reads a Boolean graph as a {0,1}-valued unit-oplus graph (⊤ ↦ 0, ⊥ ↦ 1).
    pub fn embed_boolean(&self) -> VResult<VGraph> {
        if self.quantale != Quantale::Boolean {
            return Err(VGraphError::QuantaleMismatch(self.quantale, Quantale::Boolean));
        }
        let dist = self
            .dist
            .iter()
            .map(|r| r.iter().map(|v| QValue::Num(v.numeric())).collect())
            .collect();
        VGraph::new(Quantale::UnitOplus, self.carrier.clone(), dist)
    }

    /// Every graph on `carrier` with entries drawn from `values`.
    pub fn enumerate(quantale: Quantale, carrier: &Carrier, values: &[QValue]) -> Vec<VGraph> {
        let n = carrier.len();
        let cells = n * n;
        let mut out = Vec::new();
        let mut idx = vec![0usize; cells];
        if values.is_empty() {
            return out;
        }
        loop {
            let dist = (0..n)
                .map(|i| (0..n).map(|j| values[idx[i * n + j]].clone()).collect())
                .collect();
            out.push(VGraph { quantale, carrier: carrier.clone(), dist });
            let mut p = 0;
            while p < cells && idx[p] + 1 == values.len() {
                idx[p] = 0;
                p += 1;
            }
            if p == cells {
                return out;
            }
            idx[p] += 1;
        }
    }
}

impl fmt::Display for VGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.dist.iter().enumerate() {
            write!(f, "{}:", self.carrier.name(i))?;
            for v in row {
                write!(f, " {}", v)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    quantale: Quantale,
    elements: Vec<String>,
    dist: Vec<Vec<QValue>>,
}

impl Serialize for VGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawGraph {
            quantale: self.quantale,
            elements: self.carrier.elements().to_vec(),
            dist: self.dist.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawGraph::deserialize(d)?;
        let carrier = Carrier::new(raw.elements).map_err(serde::de::Error::custom)?;
        VGraph::new(raw.quantale, carrier, raw.dist).map_err(serde::de::Error::custom)
    }
}
