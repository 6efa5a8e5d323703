//! The three quantales used for distances: the Boolean quantale, the unit
//! interval with truncated addition, and the extended non-negative reals
//! with addition.
//!
//! For the two real quantales the lattice order ⊑ is the *reversed* numeric
//! order: numeric 0 is ⊤ (and the tensor unit), numeric 1 resp. ∞ is ⊥.
//! Everything is exact: values are arbitrary-precision rationals plus an
//! explicit infinity marker.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::report::{CheckLog, LawReport};

pub type Rat = BigRational;

/// Builds the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.7"`.
pub fn parse_rat(s: &str) -> Result<Rat, QuantaleError> {
    let s = s.trim();
    let bad = || QuantaleError::Parse(s.to_string());
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let whole: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let f: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = whole.abs() * &scale + f;
        let num = if neg { -mag } else { mag };
        return Ok(BigRational::new(num, scale));
    }
    BigRational::from_str(s).map_err(|_| bad())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantaleError {
    #[error("value {value} is not an element of the {quantale} quantale")]
    Mismatch { quantale: Quantale, value: QValue },
    #[error("cannot parse quantale value `{0}`")]
    Parse(String),
    #[error("unknown quantale `{0}`")]
    UnknownQuantale(String),
}

/// Non-negative extended rational: a finite rational or ∞.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ext {
    Fin(Rat),
    Inf,
}

impl Ext {
    pub fn zero() -> Ext {
        Ext::Fin(Rat::zero())
    }

    pub fn one() -> Ext {
        Ext::Fin(Rat::one())
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, Ext::Inf)
    }

    pub fn finite(&self) -> Option<&Rat> {
        match self {
            Ext::Fin(r) => Some(r),
            Ext::Inf => None,
        }
    }

    pub fn add(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            _ => Ext::Inf,
        }
    }

    /// Scalar multiplication with `p·∞ = ∞` for `p > 0` and `0·∞ = 0`.
    pub fn scale(&self, p: &Rat) -> Ext {
        match self {
            Ext::Fin(a) => Ext::Fin(a * p),
            Ext::Inf if p.is_zero() => Ext::zero(),
            Ext::Inf => Ext::Inf,
        }
    }

    /// Truncated subtraction `self ⊖ other`, with `∞ ⊖ ∞ = 0`.
    pub fn monus(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => {
                if a > b {
                    Ext::Fin(a - b)
                } else {
                    Ext::zero()
                }
            }
            (Ext::Inf, Ext::Fin(_)) => Ext::Inf,
            (_, Ext::Inf) => Ext::zero(),
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => a.cmp(b),
            (Ext::Fin(_), Ext::Inf) => Ordering::Less,
            (Ext::Inf, Ext::Fin(_)) => Ordering::Greater,
            (Ext::Inf, Ext::Inf) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(r) => write!(f, "{}", r),
            Ext::Inf => write!(f, "inf"),
        }
    }
}

/// A quantale element. Real values carry no quantale tag; validity is
/// checked against a [`Quantale`] at every operation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QValue {
    Bool(bool),
    Num(Ext),
}

impl QValue {
    pub fn num(r: Rat) -> QValue {
        QValue::Num(Ext::Fin(r))
    }

    pub fn ratio(n: i64, d: i64) -> QValue {
        QValue::num(rat(n, d))
    }

    pub fn inf() -> QValue {
        QValue::Num(Ext::Inf)
    }

    pub fn as_ext(&self) -> Option<&Ext> {
        match self {
            QValue::Num(e) => Some(e),
            QValue::Bool(_) => None,
        }
    }

    /// The numeric reading used in reports: Booleans embed as ⊤ ↦ 0, ⊥ ↦ 1.
    pub fn numeric(&self) -> Ext {
        match self {
            QValue::Bool(true) => Ext::zero(),
            QValue::Bool(false) => Ext::one(),
            QValue::Num(e) => e.clone(),
        }
    }
}

impl FromStr for QValue {
    type Err = QuantaleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "true" | "⊤" => Ok(QValue::Bool(true)),
            "false" | "⊥" => Ok(QValue::Bool(false)),
            "inf" | "∞" => Ok(QValue::inf()),
            t => parse_rat(t).map(QValue::num),
        }
    }
}

impl fmt::Display for QValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QValue::Bool(b) => write!(f, "{}", b),
            QValue::Num(e) => write!(f, "{}", e),
        }
    }
}

impl Serialize for QValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            QValue::Bool(b) => s.serialize_bool(*b),
            QValue::Num(e) => s.serialize_str(&e.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for QValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = QValue;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a boolean, a rational string \"p/q\", an integer, or \"inf\"")
            }
            fn visit_bool<E: de::Error>(self, b: bool) -> Result<QValue, E> {
                Ok(QValue::Bool(b))
            }
            fn visit_u64<E: de::Error>(self, n: u64) -> Result<QValue, E> {
                Ok(QValue::num(Rat::from_integer(BigInt::from(n))))
            }
            fn visit_i64<E: de::Error>(self, n: i64) -> Result<QValue, E> {
                Ok(QValue::num(Rat::from_integer(BigInt::from(n))))
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<QValue, E> {
                s.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantale {
    Boolean,
    UnitOplus,
    ExtPlus,
}

impl fmt::Display for Quantale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantale::Boolean => "boolean",
            Quantale::UnitOplus => "unit-oplus",
            Quantale::ExtPlus => "ext-plus",
        })
    }
}

impl FromStr for Quantale {
    type Err = QuantaleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "boolean" => Ok(Quantale::Boolean),
            "unit-oplus" => Ok(Quantale::UnitOplus),
            "ext-plus" => Ok(Quantale::ExtPlus),
            other => Err(QuantaleError::UnknownQuantale(other.to_string())),
        }
    }
}

type QResult<T> = Result<T, QuantaleError>;

impl Quantale {
    pub const ALL: [Quantale; 3] = [Quantale::Boolean, Quantale::UnitOplus, Quantale::ExtPlus];

    pub fn contains(&self, v: &QValue) -> bool {
        match (self, v) {
            (Quantale::Boolean, QValue::Bool(_)) => true,
            (Quantale::UnitOplus, QValue::Num(Ext::Fin(r))) => {
                !r.is_negative() && *r <= Rat::one()
            }
            (Quantale::ExtPlus, QValue::Num(Ext::Fin(r))) => !r.is_negative(),
            (Quantale::ExtPlus, QValue::Num(Ext::Inf)) => true,
            _ => false,
        }
    }

    pub fn check(&self, v: &QValue) -> QResult<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(QuantaleError::Mismatch { quantale: *self, value: v.clone() })
        }
    }

    pub fn top(&self) -> QValue {
        match self {
            Quantale::Boolean => QValue::Bool(true),
            _ => QValue::Num(Ext::zero()),
        }
    }

    pub fn bottom(&self) -> QValue {
        match self {
            Quantale::Boolean => QValue::Bool(false),
            Quantale::UnitOplus => QValue::Num(Ext::one()),
            Quantale::ExtPlus => QValue::inf(),
        }
    }

    /// The tensor unit k (⊤ in all three instances).
    pub fn unit(&self) -> QValue {
        self.top()
    }

    pub fn is_top(&self, v: &QValue) -> bool {
        *v == self.top()
    }

    pub fn is_bottom(&self, v: &QValue) -> bool {
        *v == self.bottom()
    }

    fn ext_pair<'a>(&self, a: &'a QValue, b: &'a QValue) -> QResult<(&'a Ext, &'a Ext)> {
        self.check(a)?;
        self.check(b)?;
        Ok((a.as_ext().expect("checked"), b.as_ext().expect("checked")))
    }

    /// a ⊑ b.
    pub fn leq(&self, a: &QValue, b: &QValue) -> QResult<bool> {
        if let Quantale::Boolean = self {
            self.check(a)?;
            self.check(b)?;
            return Ok(matches!((a, b), (QValue::Bool(false), _) | (_, QValue::Bool(true))));
        }
        let (x, y) = self.ext_pair(a, b)?;
        Ok(x >= y)
    }

    pub fn tensor(&self, a: &QValue, b: &QValue) -> QResult<QValue> {
        if let (Quantale::Boolean, QValue::Bool(x), QValue::Bool(y)) = (self, a, b) {
            return Ok(QValue::Bool(*x && *y));
        }
        let (x, y) = self.ext_pair(a, b)?;
        let s = x.add(y);
        Ok(QValue::Num(match self {
            Quantale::UnitOplus => s.min(Ext::one()),
            _ => s,
        }))
    }

    /// The residuation d_V(a, b): the ⊑-largest u with u ⊗ a ⊑ b.
    pub fn residuation(&self, a: &QValue, b: &QValue) -> QResult<QValue> {
        if let (Quantale::Boolean, QValue::Bool(x), QValue::Bool(y)) = (self, a, b) {
            return Ok(QValue::Bool(!*x || *y));
        }
        let (x, y) = self.ext_pair(a, b)?;
        Ok(QValue::Num(y.monus(x)))
    }

    pub fn join2(&self, a: &QValue, b: &QValue) -> QResult<QValue> {
        Ok(if self.leq(a, b)? { b.clone() } else { a.clone() })
    }

    pub fn meet2(&self, a: &QValue, b: &QValue) -> QResult<QValue> {
        Ok(if self.leq(a, b)? { a.clone() } else { b.clone() })
    }

    /// ⊔S, with ⊔∅ = ⊥.
    pub fn join<'a, I: IntoIterator<Item = &'a QValue>>(&self, s: I) -> QResult<QValue> {
        s.into_iter().try_fold(self.bottom(), |acc, v| self.join2(&acc, v))
    }

    /// ⊓S, with ⊓∅ = ⊤.
    pub fn meet<'a, I: IntoIterator<Item = &'a QValue>>(&self, s: I) -> QResult<QValue> {
        s.into_iter().try_fold(self.top(), |acc, v| self.meet2(&acc, v))
    }

    /// The finite test grid: the whole Boolean quantale, `{0, 1/24, …, 1}`
    /// for unit-oplus (containing the eighths), and `{0, 1/8, …, 4, ∞}` for
    /// ext-plus (containing the quarters). Both give over 10^4 triples.
    pub fn test_grid(&self) -> Vec<QValue> {
        match self {
            Quantale::Boolean => vec![QValue::Bool(false), QValue::Bool(true)],
            Quantale::UnitOplus => (0..=24).map(|i| QValue::ratio(i, 24)).collect(),
            Quantale::ExtPlus => {
                let mut g: Vec<QValue> = (0..=32).map(|i| QValue::ratio(i, 8)).collect();
                g.push(QValue::inf());
                g
            }
        }
    }
}

/// Checks the residuation lemma (items 1–10), the adjunction law, and
/// distributivity of ⊗ over finite joins on the test grid of `q`.
pub fn law_suite(q: Quantale) -> LawReport {
    let grid = q.test_grid();
    let mut report = LawReport::new(format!("quantale/{}", q));
    let r = |a: &QValue, b: &QValue| q.residuation(a, b).expect("grid value");
    let t = |a: &QValue, b: &QValue| q.tensor(a, b).expect("grid value");
    let le = |a: &QValue, b: &QValue| q.leq(a, b).expect("grid value");
    let (top, bot, k) = (q.top(), q.bottom(), q.unit());

    let mut adj = CheckLog::new("adjunction a⊗b ⊑ c ⟺ b ⊑ d(a,c)");
    let mut i1 = CheckLog::new("1: d(v,w) = ⊔{u | u⊗v ⊑ w}");
    let mut i2 = CheckLog::new("2: k ⊑ d(v,v)");
    let mut i3 = CheckLog::new("3: d(u,v)⊗d(v,w) ⊑ d(u,w)");
    let mut i4 = CheckLog::new("4: d(k,w) = w");
    let mut i5 = CheckLog::new("5: d(⊥,w) = ⊤");
    let mut i6 = CheckLog::new("6: d(v,⊤) = ⊤");
    let mut i7 = CheckLog::new("7: d(⊤,⊥) = ⊥");
    let mut i8 = CheckLog::new("8: d(a,c) ⊑ d(d(b,a), d(b,c))");
    let mut i9 = CheckLog::new("9: d(a,c) ⊑ d(d(c,b), d(a,b))");
    let mut i10 = CheckLog::new("10: ⊓ d(a_i,b_i) ⊑ d(⊓a_i, ⊓b_i)");
    let mut dist = CheckLog::new("⊗ distributes over binary and empty joins");
    let mut comm = CheckLog::new("⊗ commutative, associative, unital");

    i7.record(r(&top, &bot) == bot, String::new);
    for v in &grid {
        i2.record(le(&k, &r(v, v)), || format!("v={}", v));
        i4.record(r(&k, v) == *v, || format!("w={}", v));
        i5.record(r(&bot, v) == top, || format!("w={}", v));
        i6.record(r(v, &top) == top, || format!("v={}", v));
        dist.record(t(v, &bot) == bot, || format!("{} ⊗ ⊥", v));
        comm.record(t(v, &k) == *v, || format!("{} ⊗ k", v));
        for w in &grid {
            let below: Vec<QValue> =
                grid.iter().filter(|u| le(&t(u, v), w)).cloned().collect();
            let j = q.join(below.iter()).expect("grid");
            i1.record(j == r(v, w), || format!("v={} w={}", v, w));
            comm.record(t(v, w) == t(w, v), || format!("{} ⊗ {}", v, w));
            for u in &grid {
                let (a, b, c) = (v, w, u);
                adj.record(le(&t(a, b), c) == le(b, &r(a, c)), || {
                    format!("a={} b={} c={}", a, b, c)
                });
                i3.record(le(&t(&r(a, b), &r(b, c)), &r(a, c)), || {
                    format!("u={} v={} w={}", a, b, c)
                });
                i8.record(le(&r(a, c), &r(&r(b, a), &r(b, c))), || {
                    format!("a={} b={} c={}", a, b, c)
                });
                i9.record(le(&r(a, c), &r(&r(c, b), &r(a, b))), || {
                    format!("a={} b={} c={}", a, b, c)
                });
                let lhs = t(a, &q.join2(b, c).unwrap());
                let rhs = q.join2(&t(a, b), &t(a, c)).unwrap();
                dist.record(lhs == rhs, || format!("a={} b={} c={}", a, b, c));
                comm.record(t(&t(a, b), c) == t(a, &t(b, c)), || {
                    format!("a={} b={} c={}", a, b, c)
                });
            }
        }
    }
    for a1 in &grid {
        for b1 in &grid {
            for a2 in &grid {
                for b2 in &grid {
                    let lhs = q.meet2(&r(a1, b1), &r(a2, b2)).unwrap();
                    let rhs = r(&q.meet2(a1, a2).unwrap(), &q.meet2(b1, b2).unwrap());
                    i10.record(le(&lhs, &rhs), || {
                        format!("a=({},{}) b=({},{})", a1, a2, b1, b2)
                    });
                }
            }
        }
    }
    for c in [adj, i1, i2, i3, i4, i5, i6, i7, i8, i9, i10, dist, comm] {
        report.push(c);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> QValue {
        s.parse().unwrap()
    }

    #[test]
    fn tensor_examples() {
        assert_eq!(Quantale::UnitOplus.tensor(&v("0.7"), &v("0.6")).unwrap(), v("1"));
        assert_eq!(Quantale::ExtPlus.tensor(&v("2"), &v("inf")).unwrap(), v("inf"));
        assert_eq!(Quantale::Boolean.tensor(&v("true"), &v("false")).unwrap(), v("false"));
    }

    #[test]
    fn residuation_examples() {
        assert_eq!(Quantale::Boolean.residuation(&v("true"), &v("false")).unwrap(), v("false"));
        assert_eq!(Quantale::UnitOplus.residuation(&v("0.3"), &v("0.8")).unwrap(), v("1/2"));
        assert_eq!(Quantale::UnitOplus.residuation(&v("0.8"), &v("0.3")).unwrap(), v("0"));
        assert_eq!(Quantale::ExtPlus.residuation(&v("3"), &v("inf")).unwrap(), v("inf"));
        assert_eq!(Quantale::ExtPlus.residuation(&v("inf"), &v("inf")).unwrap(), v("0"));
    }

    #[test]
    fn lattice_examples() {
        let q = Quantale::UnitOplus;
        assert_eq!(q.meet([v("0.2"), v("0.7")].iter()).unwrap(), v("0.7"));
        assert_eq!(q.join([].iter()).unwrap(), v("1"));
        assert_eq!(q.meet([].iter()).unwrap(), v("0"));
        assert_eq!(Quantale::Boolean.join([v("false"), v("true")].iter()).unwrap(), v("true"));
    }

    #[test]
    fn mixed_operands_are_rejected() {
        assert!(Quantale::UnitOplus.tensor(&v("true"), &v("0")).is_err());
        assert!(Quantale::UnitOplus.residuation(&v("2"), &v("0")).is_err());
        assert!(Quantale::Boolean.leq(&v("0"), &v("true")).is_err());
        assert!(Quantale::ExtPlus.check(&v("-1")).is_err());
    }

    #[test]
    fn parse_and_print_round_trip() {
        assert_eq!(v("0.7"), QValue::ratio(7, 10));
        assert_eq!(v("14/20").to_string(), "7/10");
        assert_eq!(v("inf").to_string(), "inf");
        let json = serde_json::to_string(&vec![v("1/4"), v("inf"), v("true")]).unwrap();
        assert_eq!(json, r#"["1/4","inf",true]"#);
        let back: Vec<QValue> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![v("1/4"), v("inf"), v("true")]);
        assert!(parse_rat("1.").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn scalar_times_infinity() {
        assert_eq!(Ext::Inf.scale(&rat(1, 2)), Ext::Inf);
        assert_eq!(Ext::Inf.scale(&rat(0, 1)), Ext::zero());
    }
}
