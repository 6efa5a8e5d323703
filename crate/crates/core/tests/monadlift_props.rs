use std::collections::BTreeSet;

use kantorovich::monadlift::{hausdorff_directed, kantorovich_lp, kantorovich_lp_with, MValue, MonadKind, SubDist};
use kantorovich::quantale::{rat, QValue, Quantale};
use kantorovich::vgraph::{Carrier, VGraph};
use proptest::prelude::*;

const NAMES: [&str; 3] = ["x", "y", "z"];

fn graph(q: Quantale) -> impl Strategy<Value = VGraph> {
    proptest::collection::vec(0i64..=4, 9).prop_map(move |ws| {
        let c = Carrier::new(NAMES).unwrap();
        VGraph::from_fn(q, c, |i, j| if i == j { QValue::ratio(0, 1) } else { QValue::ratio(ws[i * 3 + j], 4) }).unwrap()
    })
}

fn dist() -> impl Strategy<Value = SubDist<String>> {
    // Probability distributions with weights in twelfths.
    (0i64..=12, 0i64..=12).prop_map(|(a, b)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        SubDist::new([
            ("x".to_string(), rat(lo, 12)),
            ("y".to_string(), rat(hi - lo, 12)),
            ("z".to_string(), rat(12 - hi, 12)),
        ])
        .unwrap()
    })
}

fn subset() -> impl Strategy<Value = BTreeSet<String>> {
    (0u8..8).prop_map(|m| NAMES.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, x)| x.to_string()).collect())
}

proptest! {
    #[test]
    fn lp_on_diracs_is_the_closure(d in graph(Quantale::UnitOplus), i in 0usize..3, j in 0usize..3) {
        let p = SubDist::dirac(NAMES[i].to_string());
        let q = SubDist::dirac(NAMES[j].to_string());
        let closure = d.metric_closure();
        prop_assert_eq!(&kantorovich_lp(&d, &p, &q).unwrap().value, closure.get(i, j));
    }

    #[test]
    fn lp_is_a_vcat(d in graph(Quantale::UnitOplus), p in dist(), q in dist(), r in dist()) {
        let k = |a: &SubDist<String>, b: &SubDist<String>| kantorovich_lp(&d, a, b).unwrap().value.numeric();
        prop_assert_eq!(k(&p, &p).finite().cloned(), Some(rat(0, 1)));
        prop_assert!(k(&p, &r) <= k(&p, &q).add(&k(&q, &r)));
    }

    #[test]
    fn lp_value_is_attained_by_the_pricing(d in graph(Quantale::ExtPlus), p in dist(), q in dist()) {
        let r = kantorovich_lp(&d, &p, &q).unwrap();
        if let Some(f) = &r.pricing {
            prop_assert!(r.problem.violation(f).is_none());
            prop_assert_eq!(QValue::num(r.problem.objective_value(f)), r.value);
        }
    }

    #[test]
    fn closure_is_irrelevant_on_vcats(d in graph(Quantale::UnitOplus), p in dist(), q in dist()) {
        let dc = d.metric_closure();
        prop_assert_eq!(
            kantorovich_lp_with(&dc, &p, &q, false).unwrap().value,
            kantorovich_lp_with(&d, &p, &q, true).unwrap().value
        );
    }

    #[test]
    fn hausdorff_grows_with_the_target_and_shrinks_with_the_source(d in graph(Quantale::UnitOplus), u in subset(), v in subset(), w in subset()) {
        let vw: BTreeSet<String> = v.union(&w).cloned().collect();
        let uw: BTreeSet<String> = u.union(&w).cloned().collect();
        let h = |a: &BTreeSet<String>, b: &BTreeSet<String>| hausdorff_directed(&d, a, b).unwrap().numeric();
        // max over the target of min over the source.
        prop_assert!(h(&u, &vw) >= h(&u, &v));
        prop_assert!(h(&uw, &v) <= h(&u, &v));
    }

    #[test]
    fn subdist_monad_laws(p in dist(), q in dist(), w in 0i64..=6) {
        let unit_then_flatten = SubDist::dirac(p.clone()).flatten();
        prop_assert_eq!(&unit_then_flatten, &p);
        prop_assert_eq!(&p.map(|x| SubDist::dirac(x.clone())).flatten(), &p);
        // μ ∘ μ = μ ∘ Tμ on a two-level mixture.
        let mix = SubDist::new([(SubDist::dirac(p.clone()), rat(w, 6)), (SubDist::dirac(q.clone()), rat(6 - w, 6))]).unwrap();
        prop_assert_eq!(mix.flatten().flatten(), mix.map(|m| m.flatten()).flatten());
    }

    #[test]
    fn powerset_monad_laws(u in subset(), v in subset()) {
        let s = MValue::Set(u.clone());
        prop_assert_eq!(MValue::unit(MonadKind::Powerset, s.clone()).flatten().unwrap(), s.clone());
        prop_assert_eq!(s.map(|x| MValue::unit(MonadKind::Powerset, x.clone())).flatten().unwrap(), s);
        let both = MValue::Set([MValue::Set(u.clone()), MValue::Set(v.clone())].into_iter().collect());
        let expected: BTreeSet<String> = u.union(&v).cloned().collect();
        prop_assert_eq!(both.flatten().unwrap(), MValue::Set(expected));
    }
}

/// Brute-force oracle: the transport LP on two points is
/// max over f(y) - f(x) ≤ d(x,y), f(x) - f(y) ≤ d(y,x) of Σ f (q − p).
#[test]
fn two_point_lp_matches_closed_form() {
    let c = Carrier::new(["x", "y"]).unwrap();
    for (dxy, dyx) in [(1, 1), (1, 3), (2, 4), (4, 0), (0, 4)] {
        let d = VGraph::from_fn(Quantale::UnitOplus, c.clone(), |i, j| match (i, j) {
            (0, 1) => QValue::ratio(dxy, 4),
            (1, 0) => QValue::ratio(dyx, 4),
            _ => QValue::ratio(0, 1),
        })
        .unwrap();
        for a in 0..=4 {
            for b in 0..=4 {
                let p = SubDist::new([("x".to_string(), rat(a, 4)), ("y".to_string(), rat(4 - a, 4))]).unwrap();
                let q = SubDist::new([("x".to_string(), rat(b, 4)), ("y".to_string(), rat(4 - b, 4))]).unwrap();
                // Σ f (q − p) = (f(y) − f(x)) · (a − b)/4; optimum pushes f(y) − f(x)
                // to d(x,y) when mass moves from x to y, and to −d(y,x) otherwise.
                let shift = rat(a - b, 4);
                let expected = if a >= b { shift * rat(dxy, 4) } else { -shift * rat(dyx, 4) };
                assert_eq!(kantorovich_lp(&d, &p, &q).unwrap().value, QValue::num(expected), "a={} b={}", a, b);
            }
        }
    }
}
