use std::collections::BTreeSet;

use kantorovich::behaviour::{
    certify, kleene_bounded, kleene_gfp, reachable, trace_lower_bound, u_exact, Certificate, CoalgebraModel, TState,
    STATE_BUDGET,
};
use kantorovich::distlaw::determinize;
use kantorovich::monadlift::MValue;
use kantorovich::quantale::QValue;
use proptest::prelude::*;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/{}", env!("CARGO_MANIFEST_DIR"), name)).unwrap()
}

fn exceptions() -> CoalgebraModel {
    CoalgebraModel::parse(&fixture("exceptions.json")).unwrap()
}

fn probchain() -> CoalgebraModel {
    CoalgebraModel::parse(&fixture("probchain.json")).unwrap()
}

fn toy(quantale: &str, outputs: [&str; 3]) -> CoalgebraModel {
    CoalgebraModel::parse(&format!(
        r#"{{"quantale": "{}", "monad": "powerset", "states": ["x", "y", "z"],
            "functor": {{"prod": [{{"const": {{"atoms": "values"}}}}, {{"pow": {{"labels": ["a", "b"], "body": "id"}}}}]}},
            "outputs": {{"x": {}, "y": {}, "z": {}}},
            "transitions": {{"x": {{"a": ["x", "y"], "b": ["z"]}}, "y": {{"a": ["z"], "b": []}}, "z": {{"a": ["z"], "b": ["x"]}}}}}}"#,
        quantale, outputs[0], outputs[1], outputs[2]
    ))
    .unwrap()
}

fn v(s: &str) -> QValue {
    s.parse().unwrap()
}

/// On a finite reachable carrier, Kleene's fixpoint and the trace
/// characterization are two independent computations of ν beh.
#[test]
fn kleene_agrees_with_traces_on_finite_systems() {
    let models = [
        (exceptions(), vec!["{x0,y0}", "{z0}", "{x1}", "{y2}", "{z1}"]),
        (toy("unit-oplus", ["\"1/2\"", "\"1\"", "\"0\""]), vec!["{x}", "{y}", "{z}", "{x,z}"]),
        (toy("ext-plus", ["\"3\"", "\"1/2\"", "\"inf\""]), vec!["{x}", "{y}", "{z}", "{}"]),
    ];
    for (m, seeds) in models {
        let seeds: Vec<TState> = seeds.iter().map(|s| m.state_from_str(s).unwrap()).collect();
        let det = reachable(&m, &seeds, STATE_BUDGET).unwrap();
        let carrier: Vec<TState> = det.states().cloned().collect();
        let k = kleene_gfp(&m, &det, &carrier, 1000).unwrap();
        assert!(k.converged);
        // The n-th iterate is the sup over words of length < n, so words
        // shorter than the stabilization index suffice.
        let len = k.iterations;
        for p in &seeds {
            for q in &seeds {
                let t = trace_lower_bound(&m, p, q, len).unwrap();
                assert_eq!(k.at(p, q).unwrap(), t.value, "{} vs {}", p, q);
            }
        }
    }
}

#[test]
fn bounded_kleene_approaches_from_below() {
    let m = probchain();
    let x = m.state_from_str("x").unwrap();
    let y = m.state_from_str("y").unwrap();
    let law = m.law().unwrap();
    let mut last = v("0").numeric();
    for depth in 1..8 {
        let det = determinize(&law, &m.transitions, &[y.clone(), x.clone()], depth, 1000).unwrap();
        let k = kleene_bounded(&m, &det, 1000).unwrap();
        let now = k.at(&y, &x).unwrap().numeric();
        assert!(now >= last, "depth {}", depth);
        assert!(now <= v("1/2").numeric());
        last = now;
    }
    assert!(last > v("0").numeric());
}

#[test]
fn trace_bounds_are_monotone_in_length() {
    let m = exceptions();
    let p = m.state_from_str("{x0,y0}").unwrap();
    let q = m.state_from_str("{z0}").unwrap();
    let vals: Vec<QValue> = (1..7).map(|l| trace_lower_bound(&m, &p, &q, l).unwrap().value).collect();
    assert!(vals.windows(2).all(|w| w[0].numeric() <= w[1].numeric()));
    assert_eq!(vals[3], v("1/4"));
}

#[test]
fn certificate_round_trips_through_json() {
    let m = exceptions();
    let c = Certificate::parse(&m, &fixture("exceptions.cert.json")).unwrap();
    let back = Certificate::from_json(&m, &c.to_json()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn malformed_inputs_are_reported() {
    let m = exceptions();
    assert!(Certificate::parse(&m, r#"{"entries": [{"lhs": ["q9"], "rhs": ["z0"], "value": "1/4"}]}"#).is_err());
    assert!(Certificate::parse(&m, r#"{"entries": [{"lhs": ["x0"], "rhs": ["z0"], "value": "5/4"}]}"#).is_err());
    let err = CoalgebraModel::parse("{\"quantale\": \"unit-oplus\",\n  \"functor\": }").unwrap_err();
    assert!(err.to_string().contains("line 2"), "{}", err);
}

fn entry_keys(c: &Certificate) -> Vec<(TState, TState)> {
    c.entries.keys().cloned().collect()
}

proptest! {
    /// Raising an entry (numerically) never breaks that entry's own check.
    #[test]
    fn raising_an_entry_keeps_its_check(which in 0usize..7, num in 0i64..=6) {
        let m = exceptions();
        let mut c = Certificate::parse(&m, &fixture("exceptions.cert.json")).unwrap();
        let key = entry_keys(&c)[which].clone();
        let old = c.entries[&key].numeric();
        let new = QValue::ratio(num, 6);
        prop_assume!(new.numeric() >= old);
        c.entries.insert(key.clone(), new);
        let verdict = certify(&m, &c).unwrap();
        let own = verdict.checks.iter().find(|ch| (ch.lhs.clone(), ch.rhs.clone()) == key).unwrap();
        prop_assert!(own.ok);
    }

    /// Lowering an entry never breaks the checks of the other pairs.
    #[test]
    fn lowering_an_entry_keeps_other_checks(which in 0usize..7, num in 0i64..=6) {
        let m = exceptions();
        let mut c = Certificate::parse(&m, &fixture("exceptions.cert.json")).unwrap();
        let key = entry_keys(&c)[which].clone();
        let new = QValue::ratio(num, 24);
        prop_assume!(new.numeric() <= c.entries[&key].numeric());
        c.entries.insert(key.clone(), new);
        let verdict = certify(&m, &c).unwrap();
        for ch in verdict.checks.iter().filter(|ch| (ch.lhs.clone(), ch.rhs.clone()) != key) {
            prop_assert!(ch.ok, "({}, {})", ch.lhs, ch.rhs);
        }
    }

    /// An accepted certificate bounds every computed lower bound.
    #[test]
    fn accepted_certificates_dominate_kleene(which in 0usize..7) {
        let m = exceptions();
        let c = Certificate::parse(&m, &fixture("exceptions.cert.json")).unwrap();
        let (p, q) = entry_keys(&c)[which].clone();
        let det = reachable(&m, &[p.clone(), q.clone()], STATE_BUDGET).unwrap();
        let carrier: Vec<TState> = det.states().cloned().collect();
        let k = kleene_gfp(&m, &det, &carrier, 1000).unwrap();
        prop_assert!(k.at(&p, &q).unwrap().numeric() <= c.value(&p, &q).numeric());
    }

    /// Boolean two-state system: u_exact against a brute-force oracle with
    /// its own closure and Hausdorff computation.
    #[test]
    fn u_exact_matches_brute_force_on_boolean(bits in proptest::collection::vec(any::<bool>(), 16), i in 0usize..4, j in 0usize..4) {
        let m = CoalgebraModel::parse(r#"{"quantale": "boolean", "monad": "powerset", "states": ["x", "y"],
            "functor": {"prod": [{"const": {"atoms": "values"}}, {"pow": {"labels": ["a"], "body": "id"}}]},
            "outputs": {"x": true, "y": false}, "transitions": {"x": {"a": ["y"]}, "y": {"a": []}}}"#).unwrap();
        let ys: Vec<BTreeSet<String>> = vec![
            BTreeSet::new(),
            ["x".to_string()].into(),
            ["y".to_string()].into(),
            ["x".to_string(), "y".to_string()].into(),
        ];
        let mut c = Certificate::new(m.quantale);
        for a in 0..4 {
            for b in 0..4 {
                c.entries.insert((MValue::Set(ys[a].clone()), MValue::Set(ys[b].clone())), QValue::Bool(bits[a * 4 + b]));
            }
        }
        // Reflexive-transitive closure of the "distance ⊤" relation.
        let mut reach = [[false; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                reach[a][b] = a == b || bits[a * 4 + b];
            }
        }
        for k in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    reach[a][b] |= reach[a][k] && reach[k][b];
                }
            }
        }
        let union = |mask: u32| -> BTreeSet<String> {
            (0..4).filter(|k| mask >> k & 1 == 1).flat_map(|k| ys[k].iter().cloned()).collect()
        };
        let mut expected = false;
        for t1 in 0u32..16 {
            for t2 in 0u32..16 {
                if union(t1) != ys[i] || union(t2) != ys[j] {
                    continue;
                }
                // Directed Hausdorff: every member of t2 is reached from some member of t1.
                let h = (0..4).filter(|b| t2 >> b & 1 == 1).all(|b| (0..4).any(|a| t1 >> a & 1 == 1 && reach[a][b]));
                expected |= h;
            }
        }
        let got = u_exact(&m, &c, &MValue::Set(ys[i].clone()), &MValue::Set(ys[j].clone()), 1 << 16).unwrap();
        prop_assert_eq!(got, QValue::Bool(expected));
    }
}
