use kantorovich::quantale::{Ext, QValue, Quantale};
use proptest::prelude::*;

fn unit_value() -> impl Strategy<Value = QValue> {
    (0i64..=60, 1i64..=12).prop_map(|(n, d)| QValue::ratio(n.min(d * 5) % (d + 1), d))
}

fn ext_value() -> impl Strategy<Value = QValue> {
    prop_oneof![
        9 => (0i64..=40, 1i64..=6).prop_map(|(n, d)| QValue::ratio(n, d)),
        1 => Just(QValue::inf()),
    ]
}

fn value(q: Quantale) -> BoxedStrategy<QValue> {
    match q {
        Quantale::Boolean => any::<bool>().prop_map(QValue::Bool).boxed(),
        Quantale::UnitOplus => unit_value().boxed(),
        Quantale::ExtPlus => ext_value().boxed(),
    }
}

fn triple() -> impl Strategy<Value = (Quantale, QValue, QValue, QValue)> {
    prop_oneof![Just(Quantale::Boolean), Just(Quantale::UnitOplus), Just(Quantale::ExtPlus)]
        .prop_flat_map(|q| (Just(q), value(q), value(q), value(q)))
}

proptest! {
    #[test]
    fn residuation_is_right_adjoint((q, a, b, c) in triple()) {
        let lhs = q.leq(&q.tensor(&a, &b).unwrap(), &c).unwrap();
        let rhs = q.leq(&b, &q.residuation(&a, &c).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn residuation_triangle((q, u, v, w) in triple()) {
        let uv = q.residuation(&u, &v).unwrap();
        let vw = q.residuation(&v, &w).unwrap();
        prop_assert!(q.leq(&q.tensor(&uv, &vw).unwrap(), &q.residuation(&u, &w).unwrap()).unwrap());
    }

    #[test]
    fn order_is_reversed_numeric((q, a, b, _c) in triple()) {
        // ⊑ is the reverse of the numeric order on every instance.
        prop_assert_eq!(q.leq(&a, &b).unwrap(), a.numeric() >= b.numeric());
    }

    #[test]
    fn joins_and_meets_are_bounds((q, a, b, _c) in triple()) {
        let j = q.join2(&a, &b).unwrap();
        let m = q.meet2(&a, &b).unwrap();
        prop_assert!(q.leq(&a, &j).unwrap() && q.leq(&b, &j).unwrap());
        prop_assert!(q.leq(&m, &a).unwrap() && q.leq(&m, &b).unwrap());
    }

    #[test]
    fn truncated_subtraction((a, b) in (unit_value(), unit_value())) {
        // d_V(a, b) = b ⊖ a on unit-oplus.
        let r = Quantale::UnitOplus.residuation(&a, &b).unwrap();
        prop_assert_eq!(r.numeric(), b.numeric().monus(&a.numeric()));
    }

    #[test]
    fn serde_round_trip((q, a, _b, _c) in triple()) {
        let s = serde_json::to_string(&a).unwrap();
        let back: QValue = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(&back, &a);
        prop_assert!(q.check(&back).is_ok());
    }
}

#[test]
fn infinity_absorbs_in_ext_plus() {
    let q = Quantale::ExtPlus;
    let three = QValue::ratio(3, 1);
    assert_eq!(q.tensor(&QValue::inf(), &three).unwrap(), QValue::inf());
    assert_eq!(q.residuation(&QValue::inf(), &QValue::inf()).unwrap().numeric(), Ext::zero());
    assert_eq!(q.residuation(&three, &QValue::inf()).unwrap(), QValue::inf());
}
