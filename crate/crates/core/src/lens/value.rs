//! Direction spaces and the values that inhabit them.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fincore::{deserialize_set, same_set, FinSet, Set};
use crate::json::{Entries, OrderedMap};

/// Exact payoff scalar.
pub type Scalar = BigRational;

/// Parses `"p/q"`, `"p"` or a plain integer literal.
pub fn parse_scalar(text: &str) -> Result<Scalar, String> {
    let text = text.trim();
    let parse_int = |s: &str| {
        let s = s.trim();
        let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad rational literal {text:?}"));
        }
        s.parse::<BigInt>()
            .map_err(|_| format!("bad rational literal {text:?}"))
    };
    match text.split_once('/') {
        None => Ok(Scalar::from_integer(parse_int(text)?)),
        Some((p, q)) => {
            let q = parse_int(q)?;
            if q.is_zero() {
                return Err(format!("zero denominator in {text:?}"));
            }
            Ok(Scalar::new(parse_int(p)?, q))
        }
    }
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn format_scalar(x: &Scalar) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// A payoff vector in `Qᴺ`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Payoff(Arc<[Scalar]>);

impl Payoff {
    pub fn new(coords: Vec<Scalar>) -> Payoff {
        Payoff(coords.into())
    }

    pub fn from_ints(coords: &[i64]) -> Payoff {
        Payoff::new(coords.iter().map(|&c| Scalar::from_integer(c.into())).collect())
    }

    pub fn zero(dim: usize) -> Payoff {
        Payoff::new(vec![Scalar::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.0
    }

    pub fn coord(&self, i: usize) -> Result<&Scalar> {
        self.0.get(i).ok_or_else(|| {
            Error::Dimension(format!("coordinate {i} of a {}-dimensional payoff", self.dim()))
        })
    }

    pub fn checked_sub(&self, other: &Payoff) -> Result<Payoff> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "cannot subtract a {}-vector from a {}-vector",
                other.dim(),
                self.dim()
            )));
        }
        Ok(Payoff::new(
            self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn checked_add(&self, other: &Payoff) -> Result<Payoff> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "cannot add a {}-vector to a {}-vector",
                other.dim(),
                self.dim()
            )));
        }
        Ok(Payoff::new(
            self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
}

impl fmt::Debug for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(&format_scalar(x))?;
        }
        f.write_str(")")
    }
}

/// One rational in JSON: an integer, or a string `"p/q"` / `"p"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarLit(pub Scalar);

impl Serialize for ScalarLit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.denom().is_one() {
            if let Ok(v) = i64::try_from(self.0.numer()) {
                return s.serialize_i64(v);
            }
        }
        s.serialize_str(&format_scalar(&self.0))
    }
}

impl<'de> Deserialize<'de> for ScalarLit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => parse_scalar(&s).map(ScalarLit).map_err(D::Error::custom),
            serde_json::Value::Number(n) => {
                if n.is_f64() {
                    return Err(D::Error::custom(format!(
                        "float {n} is not an exact rational; write it as \"p/q\""
                    )));
                }
                parse_scalar(&n.to_string()).map(ScalarLit).map_err(D::Error::custom)
            }
            other => Err(D::Error::custom(format!("expected a rational, found {other}"))),
        }
    }
}

impl Serialize for Payoff {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|x| ScalarLit(x.clone())))
    }
}

impl<'de> Deserialize<'de> for Payoff {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let lits = Vec::<ScalarLit>::deserialize(d)?;
        Ok(Payoff::new(lits.into_iter().map(|l| l.0).collect()))
    }
}

/// A tabulated payoff function `dom → Qᴺ`.
#[derive(Clone, PartialEq, Eq)]
pub struct PayFn {
    dom: Set,
    values: Arc<[Payoff]>,
}

impl PayFn {
    /// Builds a payoff function; all vectors must share one dimension.
    pub fn new(dom: &Set, values: Vec<Payoff>) -> Result<PayFn> {
        if values.len() != dom.len() {
            return Err(Error::Value {
                space: format!("P^{}", dom.name()),
                detail: format!("{} values for {} elements", values.len(), dom.len()),
            });
        }
        if let Some(first) = values.first() {
            if let Some(bad) = values.iter().position(|v| v.dim() != first.dim()) {
                return Err(Error::Dimension(format!(
                    "payoff at {:?} has length {} but {:?} has length {}",
                    dom.label(bad),
                    values[bad].dim(),
                    dom.label(0),
                    first.dim()
                )));
            }
        }
        Ok(PayFn {
            dom: dom.clone(),
            values: values.into(),
        })
    }

    pub fn from_fn(dom: &Set, f: impl Fn(usize) -> Payoff) -> Result<PayFn> {
        PayFn::new(dom, (0..dom.len()).map(f).collect())
    }

    pub fn constant(dom: &Set, value: &Payoff) -> PayFn {
        PayFn {
            dom: dom.clone(),
            values: vec![value.clone(); dom.len()].into(),
        }
    }

    pub fn dom(&self) -> &Set {
        &self.dom
    }

    /// Common vector length, if the domain is inhabited.
    pub fn dim(&self) -> Option<usize> {
        self.values.first().map(Payoff::dim)
    }

    pub fn at(&self, i: usize) -> &Payoff {
        &self.values[i]
    }

    pub fn at_label(&self, label: &str) -> Result<&Payoff> {
        Ok(&self.values[self.dom.require(label)?])
    }

    pub fn values(&self) -> &[Payoff] {
        &self.values
    }
}

impl fmt::Debug for PayFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}↦{:?}", self.dom.label(i), v)?;
        }
        f.write_str("}")
    }
}

impl Serialize for PayFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            dom: &'a FinSet,
            values: OrderedMap<&'a str, &'a Payoff>,
        }
        Repr {
            dom: &self.dom,
            values: OrderedMap(
                self.values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (self.dom.label(i), v))
                    .collect(),
            ),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PayFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Repr {
            #[serde(deserialize_with = "deserialize_set")]
            dom: Set,
            values: Entries<Payoff>,
        }
        let r = Repr::deserialize(d)?;
        payfn_from_entries(&r.dom, r.values.0).map_err(D::Error::custom)
    }
}

/// Assembles a total payoff function from labelled entries.
pub fn payfn_from_entries(dom: &Set, entries: Vec<(String, Payoff)>) -> Result<PayFn> {
    let mut slots: Vec<Option<Payoff>> = vec![None; dom.len()];
    for (k, v) in entries {
        let i = dom.require(&k)?;
        if slots[i].replace(v).is_some() {
            return Err(Error::Structure(format!("duplicate entry for {k:?}")));
        }
    }
    let values = slots
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| Error::Structure(format!("missing entry for {:?}", dom.label(i))))
        })
        .collect::<Result<Vec<_>>>()?;
    PayFn::new(dom, values)
}

/// A subset of a finite set, stored as sorted element indices.
#[derive(Clone, PartialEq, Eq)]
pub struct Subset {
    of: Set,
    members: Vec<usize>,
}

impl Subset {
    pub fn new(of: &Set, mut members: Vec<usize>) -> Result<Subset> {
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&m| m >= of.len()) {
            return Err(Error::Element {
                elem: format!("#{bad}"),
                set: of.name().to_string(),
            });
        }
        Ok(Subset {
            of: of.clone(),
            members,
        })
    }

    pub fn from_labels<S: AsRef<str>>(of: &Set, labels: impl IntoIterator<Item = S>) -> Result<Subset> {
        let members = labels
            .into_iter()
            .map(|l| of.require(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Subset::new(of, members)
    }

    pub fn full(of: &Set) -> Subset {
        Subset {
            of: of.clone(),
            members: (0..of.len()).collect(),
        }
    }

    pub fn of(&self) -> &Set {
        &self.of
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.members.iter().map(|&i| self.of.label(i)).collect()
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.labels().join(","))
    }
}

/// An element of a named finite set.
#[derive(Clone, PartialEq, Eq)]
pub struct Elem {
    of: Set,
    index: usize,
}

impl Elem {
    pub fn new(of: &Set, index: usize) -> Result<Elem> {
        if index >= of.len() {
            return Err(Error::Element {
                elem: format!("#{index}"),
                set: of.name().to_string(),
            });
        }
        Ok(Elem {
            of: of.clone(),
            index,
        })
    }

    pub fn from_label(of: &Set, label: &str) -> Result<Elem> {
        Ok(Elem {
            of: of.clone(),
            index: of.require(label)?,
        })
    }

    pub fn of(&self) -> &Set {
        &self.of
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn label(&self) -> &str {
        self.of.label(self.index)
    }
}

impl fmt::Debug for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A semantic direction space. Only positions are enumerated; `Pay` and the
/// payoff-function spaces are infinite and handled symbolically.
#[derive(Clone, PartialEq, Eq)]
pub enum ValueSpace {
    Unit,
    Pay,
    PayFnOver(Set),
    SubsetsOf(Set),
    FinOf(Set),
    Pair(Arc<ValueSpace>, Arc<ValueSpace>),
}

impl ValueSpace {
    pub fn pair(a: ValueSpace, b: ValueSpace) -> ValueSpace {
        ValueSpace::Pair(Arc::new(a), Arc::new(b))
    }

    /// Right-nested pair of a nonempty list of spaces; a single space is returned as is.
    pub fn pair_n(spaces: Vec<ValueSpace>) -> Result<ValueSpace> {
        let mut it = spaces.into_iter().rev();
        let last = it
            .next()
            .ok_or_else(|| Error::Structure("pair of an empty list of spaces".into()))?;
        Ok(it.fold(last, |acc, s| ValueSpace::pair(s, acc)))
    }

    pub fn components(&self) -> Option<(&ValueSpace, &ValueSpace)> {
        match self {
            ValueSpace::Pair(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Membership check.
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (ValueSpace::Unit, Value::Unit) => true,
            (ValueSpace::Pay, Value::Pay(p)) => p.dim() > 0,
            (ValueSpace::PayFnOver(x), Value::PayFn(u)) => same_set(x, u.dom()),
            (ValueSpace::SubsetsOf(x), Value::Subset(s)) => same_set(x, s.of()),
            (ValueSpace::FinOf(x), Value::Elem(e)) => same_set(x, e.of()),
            (ValueSpace::Pair(a, b), Value::Pair(x, y)) => a.contains(x) && b.contains(y),
            _ => false,
        }
    }

    pub fn require(&self, v: &Value) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::Value {
                space: self.to_string(),
                detail: format!("{v:?}"),
            })
        }
    }

    /// Whether the space has finitely many values that can be enumerated.
    pub fn is_finite(&self) -> bool {
        match self {
            ValueSpace::Unit | ValueSpace::SubsetsOf(_) | ValueSpace::FinOf(_) => true,
            ValueSpace::Pay | ValueSpace::PayFnOver(_) => false,
            ValueSpace::Pair(a, b) => a.is_finite() && b.is_finite(),
        }
    }
}

impl fmt::Display for ValueSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueSpace::Unit => f.write_str("1"),
            ValueSpace::Pay => f.write_str("P"),
            ValueSpace::PayFnOver(x) => write!(f, "P^{}", x.name()),
            ValueSpace::SubsetsOf(x) => write!(f, "𝒫{}", x.name()),
            ValueSpace::FinOf(x) => f.write_str(x.name()),
            ValueSpace::Pair(a, b) => write!(f, "({a} × {b})"),
        }
    }
}

impl fmt::Debug for ValueSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A value of some [`ValueSpace`].
#[derive(Clone, PartialEq, Eq)]
pub enum Value {
    Unit,
    Pay(Payoff),
    PayFn(PayFn),
    Subset(Subset),
    Elem(Elem),
    Pair(Box<Value>, Box<Value>),
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn elem(of: &Set, index: usize) -> Value {
        Value::Elem(Elem {
            of: of.clone(),
            index,
        })
    }

    pub fn as_payfn(&self) -> Result<&PayFn> {
        match self {
            Value::PayFn(u) => Ok(u),
            other => Err(mismatch("payoff function", other)),
        }
    }

    pub fn as_subset(&self) -> Result<&Subset> {
        match self {
            Value::Subset(s) => Ok(s),
            other => Err(mismatch("subset", other)),
        }
    }

    pub fn as_elem(&self) -> Result<&Elem> {
        match self {
            Value::Elem(e) => Ok(e),
            other => Err(mismatch("element", other)),
        }
    }

    pub fn as_pair(&self) -> Result<(&Value, &Value)> {
        match self {
            Value::Pair(a, b) => Ok((a, b)),
            other => Err(mismatch("pair", other)),
        }
    }

    pub fn into_pair(self) -> Result<(Value, Value)> {
        match self {
            Value::Pair(a, b) => Ok((*a, *b)),
            other => Err(mismatch("pair", &other)),
        }
    }
}

fn mismatch(expected: &str, found: &Value) -> Error {
    Error::Value {
        space: expected.to_string(),
        detail: format!("{found:?}"),
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("•"),
            Value::Pay(p) => write!(f, "{p:?}"),
            Value::PayFn(u) => write!(f, "{u:?}"),
            Value::Subset(s) => write!(f, "{s:?}"),
            Value::Elem(e) => write!(f, "{e:?}"),
            Value::Pair(a, b) => write!(f, "⟨{a:?}, {b:?}⟩"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SpaceRepr {
    Unit,
    Pay,
    Payfn {
        #[serde(deserialize_with = "deserialize_set")]
        over: Set,
    },
    Subsets {
        #[serde(deserialize_with = "deserialize_set")]
        of: Set,
    },
    Fin {
        #[serde(deserialize_with = "deserialize_set")]
        of: Set,
    },
    Pair {
        left: Box<SpaceRepr>,
        right: Box<SpaceRepr>,
    },
}

impl From<&ValueSpace> for SpaceRepr {
    fn from(s: &ValueSpace) -> Self {
        match s {
            ValueSpace::Unit => SpaceRepr::Unit,
            ValueSpace::Pay => SpaceRepr::Pay,
            ValueSpace::PayFnOver(x) => SpaceRepr::Payfn { over: x.clone() },
            ValueSpace::SubsetsOf(x) => SpaceRepr::Subsets { of: x.clone() },
            ValueSpace::FinOf(x) => SpaceRepr::Fin { of: x.clone() },
            ValueSpace::Pair(a, b) => SpaceRepr::Pair {
                left: Box::new((&**a).into()),
                right: Box::new((&**b).into()),
            },
        }
    }
}

impl From<SpaceRepr> for ValueSpace {
    fn from(s: SpaceRepr) -> Self {
        match s {
            SpaceRepr::Unit => ValueSpace::Unit,
            SpaceRepr::Pay => ValueSpace::Pay,
            SpaceRepr::Payfn { over } => ValueSpace::PayFnOver(over),
            SpaceRepr::Subsets { of } => ValueSpace::SubsetsOf(of),
            SpaceRepr::Fin { of } => ValueSpace::FinOf(of),
            SpaceRepr::Pair { left, right } => ValueSpace::pair((*left).into(), (*right).into()),
        }
    }
}

impl Serialize for ValueSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SpaceRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ValueSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        SpaceRepr::deserialize(d).map(Into::into)
    }
}

/// Constant data a kernel may emit: a payoff vector or a payoff function.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PayConst {
    Pay(Payoff),
    PayFn(PayFn),
}

impl PayConst {
    pub fn space(&self) -> ValueSpace {
        match self {
            PayConst::Pay(_) => ValueSpace::Pay,
            PayConst::PayFn(u) => ValueSpace::PayFnOver(u.dom().clone()),
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            PayConst::Pay(p) => Value::Pay(p.clone()),
            PayConst::PayFn(u) => Value::PayFn(u.clone()),
        }
    }
}

impl fmt::Debug for PayConst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayConst::Pay(p) => write!(f, "{p:?}"),
            PayConst::PayFn(u) => write!(f, "{u:?}"),
        }
    }
}

impl From<Payoff> for PayConst {
    fn from(p: Payoff) -> Self {
        PayConst::Pay(p)
    }
}

impl From<PayFn> for PayConst {
    fn from(u: PayFn) -> Self {
        PayConst::PayFn(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn scalar_from_int(i: i64) -> Scalar {
        Scalar::from_integer(i.into())
    }

    #[test]
    fn scalar_literals() {
        assert_eq!(parse_scalar("3").unwrap(), scalar_from_int(3));
        assert_eq!(parse_scalar("-6/4").unwrap(), Scalar::new((-3).into(), 2.into()));
        assert_eq!(format_scalar(&parse_scalar("-6/4").unwrap()), "-3/2");
        assert!(parse_scalar("1.5").is_err());
        assert!(parse_scalar("1/0").is_err());
        assert!(parse_scalar("").is_err());
        assert!(parse_scalar("1e3").is_err());
        assert!(parse_scalar("-1/7").unwrap().is_negative());
    }

    #[test]
    fn scalar_json_rejects_floats() {
        assert!(serde_json::from_str::<ScalarLit>("2.5").is_err());
        assert_eq!(serde_json::from_str::<ScalarLit>("-4").unwrap().0, scalar_from_int(-4));
        let half: ScalarLit = serde_json::from_str("\"1/2\"").unwrap();
        assert_eq!(serde_json::to_string(&half).unwrap(), "\"1/2\"");
        assert_eq!(serde_json::to_string(&ScalarLit(scalar_from_int(7))).unwrap(), "7");
    }

    #[test]
    fn payfn_requires_uniform_dimension() {
        let x = FinSet::new("X", ["a", "b"]).unwrap();
        let err = PayFn::new(&x, vec![Payoff::from_ints(&[1]), Payoff::from_ints(&[1, 2])]);
        assert!(matches!(err, Err(Error::Dimension(_))));
        assert!(PayFn::new(&x, vec![Payoff::from_ints(&[1])]).is_err());
    }

    #[test]
    fn payfn_entries_must_be_total() {
        let x = FinSet::new("X", ["a", "b"]).unwrap();
        let err = payfn_from_entries(&x, vec![("a".into(), Payoff::from_ints(&[1]))]).unwrap_err();
        assert!(err.to_string().contains("\"b\""));
    }

    #[test]
    fn subsets_are_canonically_sorted() {
        let x = FinSet::new("X", ["a", "b", "c"]).unwrap();
        let s = Subset::from_labels(&x, ["c", "a", "c"]).unwrap();
        assert_eq!(s.members(), [0, 2]);
        assert!(Subset::new(&x, vec![3]).is_err());
    }

    #[test]
    fn space_membership() {
        let x = FinSet::new("X", ["a", "b"]).unwrap();
        let sp = ValueSpace::pair(ValueSpace::FinOf(x.clone()), ValueSpace::PayFnOver(x.clone()));
        let v = Value::pair(
            Value::elem(&x, 1),
            Value::PayFn(PayFn::constant(&x, &Payoff::from_ints(&[0]))),
        );
        assert!(sp.contains(&v));
        assert!(!sp.contains(&Value::Unit));
        assert!(!ValueSpace::Pay.contains(&Value::Pay(Payoff::new(vec![]))));
    }
}
