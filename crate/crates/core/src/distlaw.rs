//! EM-laws `ζ : TF ⇒ FT` for polynomial `F` and the powerset or
//! subdistribution monad, built by structural recursion:
//!
//! - constants use the monad's algebra on values (sup, resp. expectation);
//! - the identity uses the identity;
//! - products use `⟨ζ_i ∘ Tπ_i⟩`;
//! - coproducts use `(ζ_1 + ζ_2) ∘ g`, where `g : T(X1+X2) → TX1 + TX2`
//!   prefers the left summand whenever the value touches it.
//!
//! Determinization `c# = Fμ ∘ ζ ∘ Tc` turns a coalgebra `X → FTX` into
//! one on `TX`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::galois::Grid;
use crate::monadlift::{ev_monad, MValue, MonadKind, SubDist};
use crate::polyfunctor::{
    build_lambda, enumerate_terms, eval, lift, star, Atom, ConstDomain, FTerm, FunctorExpr, PResult, PolyError,
    Strategy, TermEnum,
};
use crate::quantale::{QValue, Quantale, Rat};
use crate::report::{CheckLog, LawReport};
use crate::vgraph::{Carrier, VGraph};

/// The coproduct component `g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GVariant {
    /// Left part if non-empty (powerset) / if the support meets the left
    /// summand (subdistributions), otherwise the right part.
    Prioritized,
    /// Always the left part. Breaks compatibility with the unit.
    AlwaysLeft,
}

/// A value of `TX1 + TX2`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tagged<X: Ord> {
    Left(MValue<X>),
    Right(MValue<X>),
}

/// `g` on a T-value whose members are `Inl`/`Inr` terms.
pub fn apply_g<P: Ord + Clone>(variant: GVariant, t: &MValue<FTerm<P>>) -> PResult<Tagged<FTerm<P>>> {
    for m in t.support() {
        if !matches!(m, FTerm::Inl(_) | FTerm::Inr(_)) {
            return Err(PolyError::Shape("g expects coproduct members".to_string()));
        }
    }
    let left = t.restrict(|m| matches!(m, FTerm::Inl(_))).map(strip);
    let right = t.restrict(|m| matches!(m, FTerm::Inr(_))).map(strip);
    let touches_left = !left.support().is_empty();
    Ok(match variant {
        GVariant::Prioritized if touches_left => Tagged::Left(left),
        GVariant::Prioritized => Tagged::Right(right),
        GVariant::AlwaysLeft => Tagged::Left(left),
    })
}

fn strip<P: Ord + Clone>(m: &FTerm<P>) -> FTerm<P> {
    match m {
        FTerm::Inl(x) | FTerm::Inr(x) => (**x).clone(),
        other => other.clone(),
    }
}

/// An EM-law of a monad over a polynomial functor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistLaw {
    pub functor: FunctorExpr,
    pub monad: MonadKind,
    /// Values at constant nodes live in this quantale; constants are
    /// combined by the monad's algebra (sup or expectation).
    pub quantale: Quantale,
    pub g: GVariant,
}

impl DistLaw {
    pub fn new(functor: FunctorExpr, monad: MonadKind, quantale: Quantale) -> PResult<Self> {
        functor.validate()?;
        if !functor.is_polynomial() {
            return Err(PolyError::Unsupported(format!("EM-laws need a polynomial functor, got {}", functor)));
        }
        if has_named_atoms(&functor) {
            return Err(PolyError::Unsupported("constant nodes over named atoms have no algebra".into()));
        }
        if monad == MonadKind::Subdist && quantale == Quantale::Boolean {
            return Err(PolyError::Unsupported("expectation over the boolean quantale".into()));
        }
        Ok(DistLaw { functor, monad, quantale, g: GVariant::Prioritized })
    }

    pub fn with_g(mut self, g: GVariant) -> Self {
        self.g = g;
        self
    }

    /// `ζ_X(t)`.
    pub fn apply_zeta<P: Ord + Clone>(&self, t: &MValue<FTerm<P>>) -> PResult<FTerm<MValue<P>>> {
        if t.kind() != self.monad {
            return Err(PolyError::Shape(format!("expected a {} value", self.monad)));
        }
        self.zeta_at(&self.functor, t)
    }

    fn zeta_at<P: Ord + Clone>(&self, f: &FunctorExpr, t: &MValue<FTerm<P>>) -> PResult<FTerm<MValue<P>>> {
        let bad = || PolyError::Shape(format!("ζ at {}: member does not match", f));
        match f {
            FunctorExpr::Id => Ok(FTerm::Id(t.try_map(|m| match m {
                FTerm::Id(p) => Ok(p.clone()),
                _ => Err(bad()),
            })?)),
            FunctorExpr::Const { domain: ConstDomain::Values, .. } => {
                let vals = t.try_map(|m| match m {
                    FTerm::Const(Atom::Value(v)) => Ok(v.clone()),
                    _ => Err(bad()),
                })?;
                Ok(FTerm::value(ev_monad(self.quantale, &vals)?))
            }
            FunctorExpr::Prod(fs) => {
                let parts = fs
                    .iter()
                    .enumerate()
                    .map(|(i, g)| {
                        let proj = t.try_map(|m| match m {
                            FTerm::Tuple(ts) if ts.len() == fs.len() => Ok(ts[i].clone()),
                            _ => Err(bad()),
                        })?;
                        self.zeta_at(g, &proj)
                    })
                    .collect::<PResult<_>>()?;
                Ok(FTerm::Tuple(parts))
            }
            FunctorExpr::Pow { labels, body } => {
                let parts = (0..labels.len())
                    .map(|i| {
                        let proj = t.try_map(|m| match m {
                            FTerm::Tuple(ts) if ts.len() == labels.len() => Ok(ts[i].clone()),
                            _ => Err(bad()),
                        })?;
                        self.zeta_at(body, &proj)
                    })
                    .collect::<PResult<_>>()?;
                Ok(FTerm::Tuple(parts))
            }
            FunctorExpr::Coprod(l, r) => match apply_g(self.g, t)? {
                Tagged::Left(m) => Ok(FTerm::inl(self.zeta_at(l, &m)?)),
                Tagged::Right(m) => Ok(FTerm::inr(self.zeta_at(r, &m)?)),
            },
            FunctorExpr::Const { .. } | FunctorExpr::Monad(..) => {
                Err(PolyError::Unsupported(format!("no EM-law component for {}", f)))
            }
        }
    }

    /// `c#(s) = Fμ(ζ_{TX}(Tc(s)))`.
    pub fn successor(
        &self,
        transitions: &BTreeMap<String, FTerm<MValue<String>>>,
        s: &MValue<String>,
    ) -> PResult<FTerm<MValue<String>>> {
        let tc = s.try_map(|x| {
            transitions.get(x).cloned().ok_or_else(|| PolyError::Shape(format!("state {} has no transition", x)))
        })?;
        let z = self.zeta_at(&self.functor, &tc)?;
        z.try_map(&mut |m: &MValue<MValue<String>>| m.flatten().map_err(PolyError::from))
    }
}

fn has_named_atoms(f: &FunctorExpr) -> bool {
    match f {
        FunctorExpr::Const { domain, .. } => matches!(domain, ConstDomain::Atoms(_)),
        FunctorExpr::Id => false,
        FunctorExpr::Prod(fs) => fs.iter().any(has_named_atoms),
        FunctorExpr::Coprod(l, r) => has_named_atoms(l) || has_named_atoms(r),
        FunctorExpr::Pow { body, .. } | FunctorExpr::Monad(_, body) => has_named_atoms(body),
    }
}

/// The determinized coalgebra on the part of `TX` explored so far.
#[derive(Clone, Debug, Default)]
pub struct DetCoalgebra {
    pub memo: BTreeMap<MValue<String>, FTerm<MValue<String>>>,
    /// Successor states that were reached but not expanded.
    pub frontier: BTreeSet<MValue<String>>,
}

impl DetCoalgebra {
    pub fn get(&self, s: &MValue<String>) -> Option<&FTerm<MValue<String>>> {
        self.memo.get(s)
    }

    pub fn states(&self) -> impl Iterator<Item = &MValue<String>> {
        self.memo.keys()
    }

    pub fn is_closed(&self) -> bool {
        self.frontier.is_empty()
    }
}

/// Explores `c#` breadth-first from `seeds` for `depth` steps.
pub fn determinize(
    law: &DistLaw,
    transitions: &BTreeMap<String, FTerm<MValue<String>>>,
    seeds: &[MValue<String>],
    depth: usize,
    budget: usize,
) -> PResult<DetCoalgebra> {
    let mut det = DetCoalgebra::default();
    let mut queue: VecDeque<(MValue<String>, usize)> = seeds.iter().cloned().map(|s| (s, 0)).collect();
    let mut seen: BTreeSet<MValue<String>> = seeds.iter().cloned().collect();
    while let Some((s, level)) = queue.pop_front() {
        let succ = law.successor(transitions, &s)?;
        for n in succ.payloads() {
            if seen.insert(n.clone()) {
                if level < depth {
                    queue.push_back((n.clone(), level + 1));
                } else {
                    det.frontier.insert(n.clone());
                }
            }
        }
        det.memo.insert(s, succ);
        if det.memo.len() > budget {
            return Err(PolyError::Budget(format!("more than {} determinized states", budget)));
        }
    }
    Ok(det)
}

// ---------------------------------------------------------------------------
// Law suite

#[derive(Clone, Debug)]
pub struct LawOptions {
    /// Number of sampled subdistribution inputs per check.
    pub samples: usize,
    pub seed: u64,
    /// Resolution of the value grid.
    pub grid: u32,
}

impl Default for LawOptions {
    fn default() -> Self {
        LawOptions { samples: 120, seed: 7, grid: 2 }
    }
}

/// The laws of the two case studies.
pub fn case_study_laws() -> Vec<(String, DistLaw)> {
    vec![
        (
            "machine{a} / subdist / unit-oplus".into(),
            DistLaw::new(FunctorExpr::machine(&["a"]), MonadKind::Subdist, Quantale::UnitOplus).expect("valid"),
        ),
        (
            "exception{a,b} / powerset / unit-oplus".into(),
            DistLaw::new(FunctorExpr::exception(&["a", "b"]), MonadKind::Powerset, Quantale::UnitOplus).expect("valid"),
        ),
    ]
}

/// All subsets with at most `max` members.
fn small_subsets<T: Ord + Clone>(items: &[T], max: usize) -> Vec<BTreeSet<T>> {
    let mut out = vec![BTreeSet::new()];
    let mut frontier = vec![(BTreeSet::new(), 0usize)];
    for _ in 0..max {
        let mut next = Vec::new();
        for (s, start) in &frontier {
            for (i, x) in items.iter().enumerate().skip(*start) {
                let mut t: BTreeSet<T> = s.clone();
                t.insert(x.clone());
                out.push(t.clone());
                next.push((t, i + 1));
            }
        }
        frontier = next;
    }
    out
}

/// A random subdistribution over `items` with weights in quarters.
fn sample_dist<T: Ord + Clone>(rng: &mut ChaCha8Rng, items: &[T], max_support: usize) -> SubDist<T> {
    let k = rng.gen_range(1..=4i64);
    let mass = rng.gen_range(1..=k);
    let support = rng.gen_range(1..=max_support.min(items.len()).max(1));
    let mut left = mass;
    let mut pairs = Vec::new();
    for i in 0..support {
        let w = if i + 1 == support { left } else { rng.gen_range(0..=left) };
        left -= w;
        let x = items[rng.gen_range(0..items.len())].clone();
        pairs.push((x, Rat::new(w.into(), k.into())));
    }
    SubDist::new(pairs).expect("mass ≤ 1")
}

/// T-values over `items`: exhaustive (≤ `max_members`) for powerset,
/// `samples` seeded draws for subdistributions.
fn t_values<T: Ord + Clone>(
    kind: MonadKind,
    items: &[T],
    max_members: usize,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<MValue<T>> {
    match kind {
        MonadKind::Powerset => small_subsets(items, max_members).into_iter().map(MValue::Set).collect(),
        MonadKind::Subdist => {
            let mut out: BTreeSet<MValue<T>> = BTreeSet::new();
            out.insert(MValue::Dist(SubDist::empty()));
            // Distinct draws, up to a fixed number of attempts.
            for _ in 0..samples.saturating_mul(20) {
                if out.len() > samples {
                    break;
                }
                out.insert(MValue::Dist(sample_dist(rng, items, max_members.max(1))));
            }
            out.into_iter().collect()
        }
    }
}

fn grid_values(q: Quantale, grid: u32) -> Vec<QValue> {
    match q {
        Quantale::ExtPlus => Grid::with_cap(grid, 1).values(q),
        _ => Grid::new(grid).values(q),
    }
}

/// Checks the three well-behavedness squares of `g` against the monad's
/// evaluation map over `q`, for `X1 = {l1,l2}`, `X2 = {r1,r2}`.
pub fn well_behaved(kind: MonadKind, variant: GVariant, q: Quantale, opts: &LawOptions) -> CheckLog {
    let mut log = CheckLog::new(format!("g well-behaved wrt ev_{} over {}", kind, q));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points: Vec<FTerm<String>> = vec![
        FTerm::inl(FTerm::Id("l1".into())),
        FTerm::inl(FTerm::Id("l2".into())),
        FTerm::inr(FTerm::Id("r1".into())),
        FTerm::inr(FTerm::Id("r2".into())),
    ];
    let values = grid_values(q, opts.grid);
    let inputs = match kind {
        MonadKind::Powerset => t_values(kind, &points, 4, 0, &mut rng),
        MonadKind::Subdist => all_quarter_dists(&points),
    };
    let name_of = |t: &FTerm<String>| -> String {
        match t {
            FTerm::Id(x) => x.clone(),
            _ => unreachable!("points are tagged identities"),
        }
    };
    for f1a in &values {
        for f1b in &values {
            for f2a in &values {
                for f2b in &values {
                    let f = |x: &str| match x {
                        "l1" => f1a.clone(),
                        "l2" => f1b.clone(),
                        "r1" => f2a.clone(),
                        _ => f2b.clone(),
                    };
                    for t in &inputs {
                        let g = match apply_g(variant, t) {
                            Ok(g) => g,
                            Err(e) => {
                                log.fail(e.to_string());
                                continue;
                            }
                        };
                        let side = |m: &FTerm<String>| matches!(m, FTerm::Inl(_));
                        let ev = |m: &MValue<QValue>| ev_monad(q, m).expect("grid values");
                        // [f1, ⊤], [⊥, f2], [⊥, ⊤]
                        let squares: [(&dyn Fn(&FTerm<String>) -> QValue, QValue); 3] = [
                            (
                                &|m| if side(m) { f(&name_of(&strip(m))) } else { q.top() },
                                match &g {
                                    Tagged::Left(l) => ev(&l.map(|m| f(&name_of(m)))),
                                    Tagged::Right(_) => q.top(),
                                },
                            ),
                            (
                                &|m| if side(m) { q.bottom() } else { f(&name_of(&strip(m))) },
                                match &g {
                                    Tagged::Left(_) => q.bottom(),
                                    Tagged::Right(r) => ev(&r.map(|m| f(&name_of(m)))),
                                },
                            ),
                            (
                                &|m| if side(m) { q.bottom() } else { q.top() },
                                match &g {
                                    Tagged::Left(_) => q.bottom(),
                                    Tagged::Right(_) => q.top(),
                                },
                            ),
                        ];
                        for (i, (pred, via_g)) in squares.iter().enumerate() {
                            let direct = ev(&t.map(|m| pred(m)));
                            log.record(&direct == via_g, || {
                                format!(
                                    "square {} at t = {}, f = ({}, {}, {}, {}): {} vs {}",
                                    i + 1,
                                    show_mvalue(t),
                                    f1a,
                                    f1b,
                                    f2a,
                                    f2b,
                                    direct,
                                    via_g
                                )
                            });
                        }
                    }
                }
            }
        }
    }
    log
}

/// Every subdistribution on `items` with weights in quarters.
fn all_quarter_dists<T: Ord + Clone>(items: &[T]) -> Vec<MValue<T>> {
    let mut out = Vec::new();
    let mut counts = vec![0i64; items.len()];
    fn rec<T: Ord + Clone>(pos: usize, left: i64, items: &[T], counts: &mut Vec<i64>, out: &mut Vec<MValue<T>>) {
        if pos == items.len() {
            let pairs = items.iter().zip(counts.iter()).map(|(x, &c)| (x.clone(), Rat::new(c.into(), 4.into())));
            out.push(MValue::Dist(SubDist::new(pairs).expect("mass ≤ 1")));
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(pos + 1, left - c, items, counts, out);
        }
        counts[pos] = 0;
    }
    rec(0, 4, items, &mut counts, &mut out);
    out
}

fn show_mvalue<T: Ord + std::fmt::Display>(t: &MValue<FTerm<T>>) -> String {
    match t {
        MValue::Set(s) => format!("{{{}}}", s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
        MValue::Dist(d) => format!("[{}]", d),
    }
}

fn points(n: usize) -> Vec<String> {
    ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()
}

/// (a) EM triangle and pentagon, (b) g-compatibility with η and μ,
/// (c) well-behavedness (only when the functor has a coproduct),
/// (d) evaluation-map exchange, (e) non-expansiveness of ζ.
pub fn law_suite(law: &DistLaw, opts: &LawOptions) -> LawReport {
    let mut report = LawReport::new(format!("distlaw {} / {}", law.functor, law.monad));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let q = law.quantale;
    let kind = law.monad;
    let xs = points(2);
    let consts = grid_values(q, 1).into_iter().filter(|v| v.numeric().finite().is_some()).collect::<Vec<_>>();
    let fx = enumerate_terms(&law.functor, &xs, &TermEnum::new(consts.clone())).expect("small functor");

    // (a) triangle: ζ ∘ η_F = Fη.
    let mut tri = CheckLog::new("EM triangle ζ∘η = Fη");
    for t in &fx {
        let lhs = law.apply_zeta(&MValue::unit(kind, t.clone()));
        let rhs = t.map(&mut |x: &String| MValue::unit(kind, x.clone()));
        tri.record(lhs.as_ref() == Ok(&rhs), || format!("t = {}: {:?}", t, lhs));
    }
    report.push(tri);

    // (a) pentagon: ζ ∘ μ_F = Fμ ∘ ζ_T ∘ Tζ.
    let mut pent = CheckLog::new("EM pentagon ζ∘μ = Fμ∘ζ∘Tζ");
    let tfx = t_values(kind, &fx, 2, opts.samples, &mut rng);
    let ttfx: Vec<MValue<MValue<FTerm<String>>>> = match kind {
        MonadKind::Powerset => small_subsets(&tfx, 2).into_iter().map(MValue::Set).collect(),
        MonadKind::Subdist => t_values(kind, &tfx, 3, opts.samples, &mut rng),
    };
    for tt in &ttfx {
        let lhs = tt.flatten().map_err(PolyError::from).and_then(|m| law.apply_zeta(&m));
        let rhs = tt
            .try_map(|t| law.apply_zeta(t))
            .and_then(|m| law.apply_zeta(&m))
            .and_then(|z| z.try_map(&mut |m: &MValue<MValue<String>>| m.flatten().map_err(PolyError::from)));
        pent.record(lhs.is_ok() && lhs == rhs, || format!("{:?} vs {:?}", lhs, rhs));
    }
    report.push(pent);

    // (b) g with η and μ over Y1 + Y2.
    let ys: Vec<FTerm<String>> = vec![
        FTerm::inl(FTerm::Id("l1".into())),
        FTerm::inl(FTerm::Id("l2".into())),
        FTerm::inr(FTerm::Id("r1".into())),
        FTerm::inr(FTerm::Id("r2".into())),
    ];
    let mut g_unit = CheckLog::new("g compatible with η");
    for y in &ys {
        let got = apply_g(law.g, &MValue::unit(kind, y.clone()));
        let want = match y {
            FTerm::Inl(p) => Tagged::Left(MValue::unit(kind, (**p).clone())),
            FTerm::Inr(p) => Tagged::Right(MValue::unit(kind, (**p).clone())),
            _ => unreachable!("tagged"),
        };
        g_unit.record(got.as_ref() == Ok(&want), || format!("y = {}: {:?}", y, got));
    }
    report.push(g_unit);

    let mut g_mult = CheckLog::new("g compatible with μ");
    let ty = t_values(kind, &ys, 4, opts.samples, &mut rng);
    let tty: Vec<MValue<MValue<FTerm<String>>>> = match kind {
        MonadKind::Powerset => small_subsets(&ty, 2).into_iter().map(MValue::Set).collect(),
        MonadKind::Subdist => t_values(kind, &ty, 3, opts.samples, &mut rng),
    };
    for tt in &tty {
        let lhs = tt.flatten().map_err(PolyError::from).and_then(|m| apply_g(law.g, &m));
        let rhs = (|| -> PResult<Tagged<FTerm<String>>> {
            // T g, read as a T-value over TY1 + TY2.
            let tg = tt.try_map(|t| {
                Ok::<_, PolyError>(match apply_g(law.g, t)? {
                    Tagged::Left(m) => FTerm::inl(FTerm::M(m)),
                    Tagged::Right(m) => FTerm::inr(FTerm::M(m)),
                })
            })?;
            Ok(match apply_g(law.g, &tg)? {
                Tagged::Left(m) => Tagged::Left(flatten_terms(&m)?),
                Tagged::Right(m) => Tagged::Right(flatten_terms(&m)?),
            })
        })();
        g_mult.record(lhs.is_ok() && lhs == rhs, || format!("{:?} vs {:?}", lhs, rhs));
    }
    report.push(g_mult);

    // (c) well-behavedness.
    if law.functor.has_coproduct() {
        report.push(well_behaved(kind, law.g, q, opts));
    } else {
        report.push(CheckLog::skipped("g well-behaved", "n/a: functor has no coproduct"));
    }

    // (d) evaluation-map exchange on grid-valued T-of-F-terms.
    let mut exch = CheckLog::new("evaluation exchange (Λ^F * Λ^T) ∘ ζ_V = Λ^T * Λ^F");
    let vs = grid_values(q, opts.grid).into_iter().filter(|v| v.numeric().finite().is_some()).collect::<Vec<_>>();
    let fv = enumerate_terms(&law.functor, &vs, &TermEnum::new(vs.clone())).expect("small functor");
    let tfv = t_values(kind, &fv, 2, opts.samples, &mut rng);
    let lambda = build_lambda(&law.functor);
    let mf = FunctorExpr::monad(kind, law.functor.clone());
    for t in &tfv {
        for ev in &lambda {
            let lhs = law
                .apply_zeta(t)
                .and_then(|z| z.try_map(&mut |m: &MValue<QValue>| ev_monad(q, m).map_err(PolyError::from)))
                .and_then(|v| eval(&law.functor, ev, q, &v));
            let tev = crate::polyfunctor::EvalMap::Monad(kind, Box::new(ev.clone()));
            let rhs = eval(&mf, &tev, q, &FTerm::M(t.map(|s| s.map(&mut |v: &QValue| v.clone()))));
            exch.record(lhs.is_ok() && lhs == rhs, || format!("ev = {}, t = {}: {:?} vs {:?}", ev, show_mvalue(t), lhs, rhs));
        }
    }
    report.push(exch);

    // (e) ζ is non-expansive from K_{ΛT*ΛF}(d) to K_{ΛF*ΛT}(d).
    report.push(zeta_non_expansive(law, opts, &mut rng));
    report
}

/// `μ` on a T-value of `M`-wrapped T-values.
fn flatten_terms(m: &MValue<FTerm<String>>) -> PResult<MValue<FTerm<String>>> {
    let inner = m.try_map(|t| match t {
        FTerm::M(v) => Ok(v.clone()),
        _ => Err(PolyError::Shape("expected a T-value".into())),
    })?;
    Ok(inner.flatten()?)
}

fn zeta_non_expansive(law: &DistLaw, opts: &LawOptions, rng: &mut ChaCha8Rng) -> CheckLog {
    let kind = law.monad;
    // Powerset: exact over the Boolean quantale. Subdistributions: exact
    // piecewise-linear LP over the unit interval.
    let name = "ζ non-expansive K_(ΛT*ΛF)(d) → K_(ΛF*ΛT)(d)";
    let (lq, values) = match (kind, law.quantale) {
        (MonadKind::Powerset, _) => (Quantale::Boolean, vec![QValue::Bool(false), QValue::Bool(true)]),
        (MonadKind::Subdist, Quantale::UnitOplus) => {
            (Quantale::UnitOplus, vec![QValue::ratio(0, 1), QValue::ratio(1, 2), QValue::ratio(1, 1)])
        }
        (MonadKind::Subdist, q) => {
            return CheckLog::skipped(name, format!("no exact subdistribution lifting over {}", q));
        }
    };
    let mut log = CheckLog::new(format!("{} over {}", name, lq));
    let lifted_law = match DistLaw::new(law.functor.clone(), kind, if lq == Quantale::Boolean { lq } else { law.quantale }) {
        Ok(l) => l.with_g(law.g),
        Err(e) => {
            log.fail(e.to_string());
            return log;
        }
    };
    let xs = points(2);
    let c = Carrier::new(xs.clone()).expect("distinct");
    let consts = match lq {
        Quantale::Boolean => values.clone(),
        _ => vec![QValue::ratio(0, 1), QValue::ratio(1, 1)],
    };
    let fx = enumerate_terms(&law.functor, &xs, &TermEnum::new(consts)).expect("small");
    let tfx: Vec<MValue<FTerm<String>>> = match kind {
        MonadKind::Powerset => small_subsets(&fx, 2).into_iter().map(MValue::Set).collect(),
        MonadKind::Subdist => t_values(kind, &fx, 2, (opts.samples / 20).max(4), rng),
    };
    let tf = FunctorExpr::monad(kind, law.functor.clone());
    let ft = law.functor.compose(&FunctorExpr::monad(kind, FunctorExpr::Id));
    let lt = build_lambda(&FunctorExpr::monad(kind, FunctorExpr::Id));
    let lf = build_lambda(&law.functor);
    let tf_terms: Vec<FTerm<String>> = tfx.iter().map(|t| FTerm::M(t.clone())).collect();
    let images = match tfx
        .iter()
        .map(|t| {
            lifted_law
                .apply_zeta(t)
                .map(|z| z.map(&mut |m: &MValue<String>| FTerm::M(m.map(|x| FTerm::Id(x.clone())))))
                .map(|z| collapse(&z))
        })
        .collect::<PResult<Vec<FTerm<String>>>>()
    {
        Ok(v) => v,
        Err(e) => {
            log.fail(e.to_string());
            return log;
        }
    };
    let distinct_images: Vec<FTerm<String>> = images.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let graphs = VGraph::enumerate(lq, &c, &values);
    let step = if kind == MonadKind::Subdist { 9 } else { 1 };
    for d in graphs.iter().step_by(step) {
        let a = lift(&tf, &star(&lt, &lf), d, &tf_terms, Strategy::Definition);
        let b = lift(&ft, &star(&lf, &lt), d, &distinct_images, Strategy::Definition);
        let (a, b) = match (a, b) {
            (Ok((a, _)), Ok((b, _))) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                log.fail(e.to_string());
                continue;
            }
        };
        for i in 0..tf_terms.len() {
            for j in 0..tf_terms.len() {
                let bi = b.carrier().require(&images[i].to_string()).expect("image");
                let bj = b.carrier().require(&images[j].to_string()).expect("image");
                let ok = lq.leq(a.get(i, j), b.get(bi, bj)).unwrap_or(false);
                log.record(ok, || {
                    format!("d =\n{}at ({}, {}): {} vs {}", d, tf_terms[i], tf_terms[j], a.get(i, j), b.get(bi, bj))
                });
            }
        }
    }
    log
}

/// Turns `FTerm<FTerm<String>>` (an F-term whose payloads are monad
/// terms) into the corresponding `(F∘T)`-term.
fn collapse(t: &FTerm<FTerm<String>>) -> FTerm<String> {
    match t {
        FTerm::Const(a) => FTerm::Const(a.clone()),
        FTerm::Id(inner) => inner.clone(),
        FTerm::Tuple(ts) => FTerm::Tuple(ts.iter().map(collapse).collect()),
        FTerm::Inl(x) => FTerm::inl(collapse(x)),
        FTerm::Inr(x) => FTerm::inr(collapse(x)),
        FTerm::M(m) => FTerm::M(m.map(collapse)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantale::rat;
    use num_traits::One;

    fn v(s: &str) -> QValue {
        s.parse().unwrap()
    }

    fn id(x: &str) -> FTerm<String> {
        FTerm::Id(x.to_string())
    }

    #[test]
    fn g_examples() {
        let t = MValue::Set([FTerm::inl(id("x1")), FTerm::inr(id("y2"))].into_iter().collect());
        assert_eq!(apply_g(GVariant::Prioritized, &t).unwrap(), Tagged::Left(MValue::Set([id("x1")].into())));
        let e: MValue<FTerm<String>> = MValue::Set(BTreeSet::new());
        assert_eq!(apply_g(GVariant::Prioritized, &e).unwrap(), Tagged::Right(MValue::Set(BTreeSet::new())));
        let p = MValue::Dist(SubDist::new([(FTerm::inl(id("x1")), rat(1, 2)), (FTerm::inr(id("y2")), rat(1, 2))]).unwrap());
        assert_eq!(
            apply_g(GVariant::Prioritized, &p).unwrap(),
            Tagged::Left(MValue::Dist(SubDist::new([(id("x1"), rat(1, 2))]).unwrap()))
        );
    }

    #[test]
    fn machine_subdist_zeta() {
        let law = DistLaw::new(FunctorExpr::machine(&["a"]), MonadKind::Subdist, Quantale::UnitOplus).unwrap();
        let s1 = FTerm::Tuple(vec![FTerm::value(v("1/2")), FTerm::Tuple(vec![id("x")])]);
        let s2 = FTerm::Tuple(vec![FTerm::value(v("1")), FTerm::Tuple(vec![id("y")])]);
        let mu = MValue::Dist(SubDist::new([(s1, rat(1, 2)), (s2, rat(1, 2))]).unwrap());
        let z = law.apply_zeta(&mu).unwrap();
        let want = FTerm::Tuple(vec![
            FTerm::value(v("3/4")),
            FTerm::Tuple(vec![FTerm::Id(MValue::Dist(
                SubDist::new([("x".to_string(), rat(1, 2)), ("y".to_string(), rat(1, 2))]).unwrap(),
            ))]),
        ]);
        assert_eq!(z, want);
    }

    #[test]
    fn exception_powerset_zeta() {
        let law = DistLaw::new(FunctorExpr::exception(&["a"]), MonadKind::Powerset, Quantale::UnitOplus).unwrap();
        let t = MValue::Set(
            [
                FTerm::inl(FTerm::value(v("1/4"))),
                FTerm::inl(FTerm::value(v("1/3"))),
                FTerm::inr(FTerm::Tuple(vec![id("x")])),
            ]
            .into_iter()
            .collect(),
        );
        assert_eq!(law.apply_zeta(&t).unwrap(), FTerm::inl(FTerm::value(v("1/3"))));
    }

    #[test]
    fn running_example_determinization() {
        let law = DistLaw::new(FunctorExpr::machine(&["a"]), MonadKind::Subdist, Quantale::UnitOplus).unwrap();
        let h = rat(1, 2);
        let dist = |pairs: &[(&str, Rat)]| {
            MValue::Dist(SubDist::new(pairs.iter().map(|(x, w)| (x.to_string(), w.clone()))).unwrap())
        };
        let mut tr = BTreeMap::new();
        tr.insert(
            "x".to_string(),
            FTerm::Tuple(vec![FTerm::value(v("1/2")), FTerm::Tuple(vec![FTerm::Id(dist(&[("x", h.clone()), ("x'", h.clone())]))])]),
        );
        tr.insert(
            "x'".to_string(),
            FTerm::Tuple(vec![FTerm::value(v("1")), FTerm::Tuple(vec![FTerm::Id(dist(&[("x'", Rat::one())]))])]),
        );
        let det = determinize(&law, &tr, &[dist(&[("x", Rat::one())])], 2, 100).unwrap();
        let s1 = dist(&[("x", h.clone()), ("x'", h.clone())]);
        let succ = det.get(&s1).unwrap();
        let want = FTerm::Tuple(vec![
            FTerm::value(v("3/4")),
            FTerm::Tuple(vec![FTerm::Id(dist(&[("x", rat(1, 4)), ("x'", rat(3, 4))]))]),
        ]);
        assert_eq!(succ, &want);
        assert_eq!(det.memo.len(), 3);
        assert_eq!(det.frontier.len(), 1);
        let shallow = determinize(&law, &tr, &[dist(&[("x", Rat::one())])], 0, 100).unwrap();
        assert_eq!(shallow.memo.len(), 1);
    }

    #[test]
    fn case_study_laws_pass() {
        for (name, law) in case_study_laws() {
            let r = law_suite(&law, &LawOptions::default());
            assert!(r.passed(), "{}\n{}", name, r);
        }
    }

    #[test]
    fn ext_plus_exception_law() {
        let law = DistLaw::new(FunctorExpr::exception(&["a"]), MonadKind::Subdist, Quantale::ExtPlus).unwrap();
        let r = law_suite(&law, &LawOptions::default());
        assert!(r.passed(), "{}", r);
        assert!(r.find("ζ non-expansive").unwrap().skipped.is_some());
        assert!(r.find("g well-behaved").unwrap().cases > 0);
    }

    #[test]
    fn mutant_breaks_unit_compatibility() {
        let law = DistLaw::new(FunctorExpr::exception(&["a"]), MonadKind::Powerset, Quantale::UnitOplus)
            .unwrap()
            .with_g(GVariant::AlwaysLeft);
        let r = law_suite(&law, &LawOptions::default());
        assert!(!r.find("g compatible with η").unwrap().passed());
    }

    #[test]
    fn subdist_g_is_not_well_behaved_over_the_unit_interval() {
        let opts = LawOptions::default();
        assert!(well_behaved(MonadKind::Subdist, GVariant::Prioritized, Quantale::ExtPlus, &opts).passed());
        assert!(well_behaved(MonadKind::Powerset, GVariant::Prioritized, Quantale::UnitOplus, &opts).passed());
        assert!(!well_behaved(MonadKind::Subdist, GVariant::Prioritized, Quantale::UnitOplus, &opts).passed());
    }
}
