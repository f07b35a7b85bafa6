//! Finite enumerated sets and total function tables between them.
//!
//! Every position space in the engine is a [`FinSet`]: an ordered list of
//! distinct string labels. Products are enumerated lexicographically and
//! remember their factors, so elements of a product can be split back into
//! components and tables over a product can be partially evaluated.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{Entries, OrderedMap};

/// Shared handle to a finite set.
pub type Set = Arc<FinSet>;

/// Label of the single element of the unit set.
pub const UNIT_LABEL: &str = "*";

static UNIT: LazyLock<Set> = LazyLock::new(|| {
    Arc::new(FinSet::build("1".to_string(), vec![UNIT_LABEL.to_string()], None))
});

/// A finite set with a fixed, total element order.
#[derive(Clone)]
pub struct FinSet {
    name: String,
    elems: Vec<String>,
    index: HashMap<String, usize>,
    factors: Option<(Set, Set)>,
}

impl FinSet {
    fn build(name: String, elems: Vec<String>, factors: Option<(Set, Set)>) -> Self {
        let index = elems
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        FinSet {
            name,
            elems,
            index,
            factors,
        }
    }

    /// Creates a set from distinct labels. Empty sets are allowed here.
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        elems: impl IntoIterator<Item = S>,
    ) -> Result<Set> {
        let name = name.into();
        let elems: Vec<String> = elems.into_iter().map(Into::into).collect();
        let set = FinSet::build(name, elems, None);
        if set.index.len() != set.elems.len() {
            let dup = set
                .elems
                .iter()
                .enumerate()
                .find(|(i, e)| set.index[*e] != *i)
                .map(|(_, e)| e.clone())
                .unwrap_or_default();
            return Err(Error::Structure(format!(
                "duplicate element {dup:?} in set {}",
                set.name
            )));
        }
        Ok(Arc::new(set))
    }

    /// The canonical one-element set.
    pub fn unit() -> Set {
        UNIT.clone()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elems(&self) -> &[String] {
        &self.elems
    }

    pub fn label(&self, i: usize) -> &str {
        &self.elems[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Like [`FinSet::index_of`], failing with an element error.
    pub fn require(&self, label: &str) -> Result<usize> {
        self.index_of(label).ok_or_else(|| Error::Element {
            elem: label.to_string(),
            set: self.name.clone(),
        })
    }

    pub fn factors(&self) -> Option<(&Set, &Set)> {
        self.factors.as_ref().map(|(a, b)| (a, b))
    }

    /// Factors of a registered product, or a structure error.
    pub fn require_factors(&self) -> Result<(&Set, &Set)> {
        self.factors()
            .ok_or_else(|| Error::Structure(format!("set {} is not a product", self.name)))
    }

    /// Index of the pair `(i, j)` in a product.
    pub fn pair_index(&self, i: usize, j: usize) -> Result<usize> {
        let (_, b) = self.require_factors()?;
        Ok(i * b.len() + j)
    }

    /// Splits the index of a product element into its component indices.
    pub fn split_index(&self, p: usize) -> Result<(usize, usize)> {
        let (_, b) = self.require_factors()?;
        Ok((p / b.len(), p % b.len()))
    }

    /// Component indices of an element of a right-nested `n`-fold product.
    pub fn components(&self, n: usize, p: usize) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(n);
        let mut set = self;
        let mut p = p;
        for _ in 1..n {
            let (_, b) = set.require_factors()?;
            out.push(p / b.len());
            p %= b.len();
            set = b;
        }
        out.push(p);
        Ok(out)
    }

    /// Inverse of [`FinSet::components`].
    pub fn encode(&self, comps: &[usize]) -> Result<usize> {
        match comps {
            [] => Err(Error::Structure("empty profile".into())),
            [last] => Ok(*last),
            [first, rest @ ..] => {
                let (_, b) = self.require_factors()?;
                Ok(first * b.len() + b.encode(rest)?)
            }
        }
    }

    /// The factor sets of a right-nested `n`-fold product.
    pub fn flatten(self: &Set, n: usize) -> Result<Vec<Set>> {
        let mut out = Vec::with_capacity(n);
        let mut set = self.clone();
        for _ in 1..n {
            let (a, b) = {
                let (a, b) = set.require_factors()?;
                (a.clone(), b.clone())
            };
            out.push(a);
            set = b;
        }
        out.push(set);
        Ok(out)
    }

    fn display_name(&self) -> String {
        if self.factors.is_some() {
            format!("({})", self.name)
        } else {
            self.name.clone()
        }
    }
}

impl PartialEq for FinSet {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
            || (self.name == other.name
                && self.elems == other.elems
                && match (&self.factors, &other.factors) {
                    (None, None) => true,
                    (Some((a, b)), Some((c, d))) => a == c && b == d,
                    _ => false,
                })
    }
}

impl Eq for FinSet {}

impl fmt::Debug for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{{}}}", self.name, self.elems.join(","))
    }
}

impl fmt::Display for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Pointer-or-structural equality on set handles.
pub fn same_set(a: &Set, b: &Set) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn escape_component(label: &str, out: &mut String) {
    for c in label.chars() {
        if matches!(c, '\\' | '(' | ')' | ',') {
            out.push('\\');
        }
        out.push(c);
    }
}

/// Label of the pair `(a, b)` in a product set.
pub fn pair_label(a: &str, b: &str) -> String {
    let mut out = String::with_capacity(a.len() + b.len() + 3);
    out.push('(');
    escape_component(a, &mut out);
    out.push(',');
    escape_component(b, &mut out);
    out.push(')');
    out
}

/// Inverse of [`pair_label`].
pub fn split_pair_label(label: &str) -> Option<(String, String)> {
    let inner = label.strip_prefix('(')?.strip_suffix(')')?;
    let mut left = String::new();
    let mut right = String::new();
    let mut in_right = false;
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        let target = if in_right { &mut right } else { &mut left };
        match c {
            '\\' => target.push(chars.next()?),
            ',' if !in_right => in_right = true,
            '(' | ')' | ',' => return None,
            c => target.push(c),
        }
    }
    in_right.then_some((left, right))
}

/// Cartesian product, enumerated lexicographically by `(a-order, b-order)`.
pub fn product(a: &Set, b: &Set) -> Set {
    let mut elems = Vec::with_capacity(a.len() * b.len());
    for x in a.elems() {
        for y in b.elems() {
            elems.push(pair_label(x, y));
        }
    }
    let name = format!("{}×{}", a.display_name(), b.display_name());
    Arc::new(FinSet::build(name, elems, Some((a.clone(), b.clone()))))
}

/// Right-nested product `s₁ × (s₂ × (… × sₙ))`. A single set is returned as is.
pub fn product_n(sets: &[Set]) -> Result<Set> {
    match sets {
        [] => Err(Error::Structure("product of an empty list of sets".into())),
        [only] => Ok(only.clone()),
        [first, rest @ ..] => Ok(product(first, &product_n(rest)?)),
    }
}

/// Number of elements of a right-nested product, without building it.
pub fn product_size(sets: &[Set]) -> u128 {
    sets.iter().map(|s| s.len() as u128).product()
}

/// A total function between finite sets.
#[derive(Clone)]
pub struct Table {
    name: String,
    dom: Set,
    cod: Set,
    map: Arc<[usize]>,
}

impl Table {
    /// Tabulates `f` over `dom`, checking every image lies in `cod`.
    pub fn from_fn(
        name: impl Into<String>,
        dom: &Set,
        cod: &Set,
        f: impl Fn(usize) -> usize,
    ) -> Result<Table> {
        let name = name.into();
        let map: Vec<usize> = (0..dom.len()).map(f).collect();
        if let Some(&bad) = map.iter().find(|&&j| j >= cod.len()) {
            return Err(Error::Structure(format!(
                "table {name}: image index {bad} outside {}",
                cod.name()
            )));
        }
        Ok(Table {
            name,
            dom: dom.clone(),
            cod: cod.clone(),
            map: map.into(),
        })
    }

    /// Builds a table from label pairs; every element of `dom` must appear once.
    pub fn from_labels<A: AsRef<str>, B: AsRef<str>>(
        name: impl Into<String>,
        dom: &Set,
        cod: &Set,
        pairs: impl IntoIterator<Item = (A, B)>,
    ) -> Result<Table> {
        let name = name.into();
        let mut map = vec![usize::MAX; dom.len()];
        for (x, y) in pairs {
            let i = dom.require(x.as_ref())?;
            let j = cod.require(y.as_ref())?;
            if map[i] != usize::MAX {
                return Err(Error::Structure(format!(
                    "table {name}: element {:?} assigned twice",
                    x.as_ref()
                )));
            }
            map[i] = j;
        }
        if let Some(i) = map.iter().position(|&j| j == usize::MAX) {
            return Err(Error::Structure(format!(
                "table {name}: no image for {:?}",
                dom.label(i)
            )));
        }
        Ok(Table {
            name,
            dom: dom.clone(),
            cod: cod.clone(),
            map: map.into(),
        })
    }

    pub fn identity(set: &Set) -> Table {
        Table {
            name: format!("id[{}]", set.name()),
            dom: set.clone(),
            cod: set.clone(),
            map: (0..set.len()).collect::<Vec<_>>().into(),
        }
    }

    pub fn constant(dom: &Set, cod: &Set, j: usize) -> Result<Table> {
        Table::from_fn(format!("const[{}]", cod.label(j)), dom, cod, |_| j)
    }

    /// Projection `A × B → A`.
    pub fn proj1(prod: &Set) -> Result<Table> {
        let (a, b) = prod.require_factors()?;
        let n = b.len();
        Table::from_fn(format!("π₁[{}]", prod.name()), prod, &a.clone(), |p| p / n)
    }

    /// Projection `A × B → B`.
    pub fn proj2(prod: &Set) -> Result<Table> {
        let (_, b) = prod.require_factors()?;
        let n = b.len();
        Table::from_fn(format!("π₂[{}]", prod.name()), prod, &b.clone(), |p| p % n)
    }

    /// The diagonal `A → A × A`.
    pub fn diagonal(set: &Set) -> Table {
        let prod = product(set, set);
        let n = set.len();
        Table {
            name: format!("Δ[{}]", set.name()),
            dom: set.clone(),
            map: (0..n).map(|i| i * n + i).collect::<Vec<_>>().into(),
            cod: prod,
        }
    }

    /// `f × g : A × C → B × D`.
    pub fn product_map(f: &Table, g: &Table) -> Table {
        let dom = product(&f.dom, &g.dom);
        let cod = product(&f.cod, &g.cod);
        let (n, m) = (g.dom.len(), g.cod.len());
        let map: Vec<usize> = (0..dom.len())
            .map(|p| f.map[p / n] * m + g.map[p % n])
            .collect();
        Table {
            name: format!("{}×{}", f.name, g.name),
            dom,
            cod,
            map: map.into(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Table {
        self.name = name.into();
        self
    }

    pub fn dom(&self) -> &Set {
        &self.dom
    }

    pub fn cod(&self) -> &Set {
        &self.cod
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn apply_label(&self, label: &str) -> Result<&str> {
        Ok(self.cod.label(self.map[self.dom.require(label)?]))
    }

    pub fn images(&self) -> &[usize] {
        &self.map
    }

    /// `b ↦ f(a, b)` for a table over a registered product `A × B`.
    pub fn fix_left(&self, a: &str) -> Result<Table> {
        let (fa, fb) = self.dom.require_factors()?;
        let i = fa.require(a)?;
        let n = fb.len();
        let fb = fb.clone();
        Table::from_fn(format!("{}({a},-)", self.name), &fb, &self.cod, |j| {
            self.map[i * n + j]
        })
    }

    /// `a ↦ f(a, b)` for a table over a registered product `A × B`.
    pub fn fix_right(&self, b: &str) -> Result<Table> {
        let (fa, fb) = self.dom.require_factors()?;
        let j = fb.require(b)?;
        let n = fb.len();
        let fa = fa.clone();
        Table::from_fn(format!("{}(-,{b})", self.name), &fa, &self.cod, |i| {
            self.map[i * n + j]
        })
    }
}

impl PartialEq for Table {
    /// Extensional: same boundaries and same images. Names are ignored.
    fn eq(&self, other: &Self) -> bool {
        same_set(&self.dom, &other.dom) && same_set(&self.cod, &other.cod) && self.map == other.map
    }
}

impl Eq for Table {}

impl fmt::Debug for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} → {} [", self.name, self.dom.name(), self.cod.name())?;
        for (i, &j) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}↦{}", self.dom.label(i), self.cod.label(j))?;
        }
        f.write_str("]")
    }
}

/// `(f ; g)(x) = g(f(x))`.
pub fn table_compose(f: &Table, g: &Table) -> Result<Table> {
    if !same_set(&f.cod, &g.dom) {
        return Err(Error::Composition {
            left: f.name.clone(),
            right: g.name.clone(),
            detail: format!(
                "codomain {} of {} differs from domain {} of {}",
                f.cod.name(),
                f.name,
                g.dom.name(),
                g.name
            ),
        });
    }
    let map: Vec<usize> = f.map.iter().map(|&j| g.map[j]).collect();
    Ok(Table {
        name: format!("{};{}", f.name, g.name),
        dom: f.dom.clone(),
        cod: g.cod.clone(),
        map: map.into(),
    })
}

pub fn fix_left(f: &Table, a: &str) -> Result<Table> {
    f.fix_left(a)
}

pub fn fix_right(f: &Table, b: &str) -> Result<Table> {
    f.fix_right(b)
}

#[derive(Serialize, Deserialize)]
struct SetRepr {
    name: String,
    elems: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factors: Option<Box<(SetRepr, SetRepr)>>,
}

impl SetRepr {
    fn of(set: &FinSet) -> SetRepr {
        SetRepr {
            name: set.name.clone(),
            elems: set.elems.clone(),
            factors: set
                .factors
                .as_ref()
                .map(|(a, b)| Box::new((SetRepr::of(a), SetRepr::of(b)))),
        }
    }

    fn into_set(self) -> Result<Set> {
        match self.factors {
            None if self.name == "1" && self.elems == [UNIT_LABEL] => Ok(FinSet::unit()),
            None => FinSet::new(self.name, self.elems),
            Some(pair) => {
                let (a, b) = *pair;
                let p = product(&a.into_set()?, &b.into_set()?);
                if p.elems != self.elems {
                    return Err(Error::Structure(format!(
                        "product set {} does not enumerate its factors",
                        self.name
                    )));
                }
                Ok(p)
            }
        }
    }
}

impl Serialize for FinSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SetRepr::of(self).serialize(serializer)
    }
}

/// Deserializes a set handle, rebuilding product structure.
pub fn deserialize_set<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Set, D::Error> {
    SetRepr::deserialize(d)?
        .into_set()
        .map_err(serde::de::Error::custom)
}

impl<'de> Deserialize<'de> for FinSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        deserialize_set(d).map(|s| (*s).clone())
    }
}

impl Serialize for Table {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            name: &'a str,
            dom: &'a FinSet,
            cod: &'a FinSet,
            map: OrderedMap<&'a str, &'a str>,
        }
        Repr {
            name: &self.name,
            dom: &self.dom,
            cod: &self.cod,
            map: OrderedMap(
                self.map
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| (self.dom.label(i), self.cod.label(j)))
                    .collect(),
            ),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Table {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            #[serde(default)]
            name: String,
            #[serde(deserialize_with = "deserialize_set")]
            dom: Set,
            #[serde(deserialize_with = "deserialize_set")]
            cod: Set,
            map: Entries<String>,
        }
        let r = Repr::deserialize(d)?;
        Table::from_labels(r.name, &r.dom, &r.cod, r.map.0).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(name: &str, elems: &[&str]) -> Set {
        FinSet::new(name, elems.iter().copied()).unwrap()
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(matches!(
            FinSet::new("X", ["a", "b", "a"]),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn empty_set_is_constructible() {
        let e = FinSet::new("E", Vec::<String>::new()).unwrap();
        assert!(e.is_empty());
        assert!(product(&e, &set("X", &["a"])).is_empty());
    }

    #[test]
    fn product_with_singleton_keeps_left_order() {
        let p = product(&set("A", &["a", "b"]), &set("C", &["c"]));
        assert_eq!(p.elems(), ["(a,c)", "(b,c)"]);
    }

    #[test]
    fn product_is_lexicographic() {
        let p = product(&set("A", &["a", "b"]), &set("B", &["c", "d"]));
        assert_eq!(p.elems(), ["(a,c)", "(a,d)", "(b,c)", "(b,d)"]);
    }

    #[test]
    fn unit_product_is_relabeled_copy() {
        let x = set("X", &["p", "q", "r"]);
        let p = product(&FinSet::unit(), &x);
        assert_eq!(p.len(), 3);
        for (i, e) in p.elems().iter().enumerate() {
            let (u, y) = split_pair_label(e).unwrap();
            assert_eq!(u, UNIT_LABEL);
            assert_eq!(y, x.label(i));
        }
    }

    #[test]
    fn nested_pair_labels_round_trip() {
        let a = set("A", &["x,y", "(z)", "w\\"]);
        let b = product(&a, &a);
        let c = product(&b, &a);
        for e in c.elems() {
            let (l, r) = split_pair_label(e).unwrap();
            let (ll, lr) = split_pair_label(&l).unwrap();
            assert!(a.index_of(&ll).is_some());
            assert!(a.index_of(&lr).is_some());
            assert!(a.index_of(&r).is_some());
            assert_eq!(pair_label(&pair_label(&ll, &lr), &r), *e);
        }
        assert_eq!(split_pair_label("(a,b,c)"), None);
        assert_eq!(split_pair_label("a,b"), None);
    }

    #[test]
    fn identity_and_singleton_chase() {
        let ab = set("AB", &["a", "b"]);
        let g = Table::from_labels("g", &ab, &set("Y", &["y"]), [("a", "y"), ("b", "y")]).unwrap();
        assert_eq!(table_compose(&Table::identity(&ab), &g).unwrap(), g);

        let f = Table::from_labels("f", &set("A", &["a"]), &set("C", &["c"]), [("a", "c")]).unwrap();
        let h = Table::from_labels("h", &set("C", &["c"]), &set("D", &["d"]), [("c", "d")]).unwrap();
        assert_eq!(table_compose(&f, &h).unwrap().apply_label("a").unwrap(), "d");
    }

    #[test]
    fn compose_mismatch_names_both_tables() {
        let f = Table::identity(&set("A", &["a"]));
        let g = Table::identity(&set("B", &["b"]));
        let err = table_compose(&f, &g).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("id[A]") && msg.contains("id[B]"), "{msg}");
    }

    #[test]
    fn from_labels_requires_totality() {
        let x = set("X", &["a", "b"]);
        let err = Table::from_labels("f", &x, &x, [("a", "a")]).unwrap_err();
        assert!(err.to_string().contains("no image for \"b\""));
        assert!(Table::from_labels("f", &x, &x, [("a", "a"), ("b", "c")]).is_err());
    }

    #[test]
    fn fix_left_of_constant_and_projection() {
        let a = set("A", &["a1", "a2"]);
        let b = set("B", &["b1", "b2", "b3"]);
        let ab = product(&a, &b);
        let k = Table::constant(&ab, &b, 1).unwrap();
        let fixed = k.fix_left("a2").unwrap();
        assert!(fixed.images().iter().all(|&j| j == 1));
        let pi = Table::proj2(&ab).unwrap();
        assert_eq!(pi.fix_left("a1").unwrap(), Table::identity(&b));
    }

    #[test]
    fn fix_left_direct_lookup() {
        let a = set("A", &["a1", "a2"]);
        let b = set("B", &["b1", "b2"]);
        let out = set("O", &["x", "y", "z"]);
        let ab = product(&a, &b);
        let f = Table::from_labels(
            "f",
            &ab,
            &out,
            [("(a1,b1)", "x"), ("(a1,b2)", "y"), ("(a2,b1)", "z"), ("(a2,b2)", "z")],
        )
        .unwrap();
        let g = f.fix_left("a1").unwrap();
        assert_eq!(g.apply_label("b1").unwrap(), "x");
        assert_eq!(g.apply_label("b2").unwrap(), "y");
        let h = f.fix_right("b1").unwrap();
        assert_eq!(h.apply_label("a2").unwrap(), "z");
    }

    #[test]
    fn fix_errors() {
        let a = set("A", &["a1"]);
        let f = Table::identity(&a);
        assert!(matches!(f.fix_left("a1"), Err(Error::Structure(_))));
        let ab = product(&a, &a);
        let g = Table::identity(&ab);
        assert!(matches!(g.fix_left("zz"), Err(Error::Element { .. })));
    }

    #[test]
    fn components_and_encode_invert() {
        let s = [set("A", &["0", "1"]), set("B", &["0", "1", "2"]), set("C", &["0", "1"])];
        let p = product_n(&s).unwrap();
        assert_eq!(p.len(), 12);
        for i in 0..p.len() {
            let c = p.components(3, i).unwrap();
            assert_eq!(p.encode(&c).unwrap(), i);
        }
        assert_eq!(p.components(3, 7).unwrap(), vec![1, 0, 1]);
        assert_eq!(p.flatten(3).unwrap(), s.to_vec());
    }

    #[test]
    fn serialization_round_trips_products() {
        let a = set("A", &["a", "b"]);
        let p = product(&a, &product(&a, &FinSet::unit()));
        let json = serde_json::to_string(&*p).unwrap();
        let back: FinSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, *p);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);

        let t = Table::proj1(&p).unwrap();
        let tj = serde_json::to_string(&t).unwrap();
        let t2: Table = serde_json::from_str(&tj).unwrap();
        assert_eq!(t2, t);
        assert_eq!(serde_json::to_string(&t2).unwrap(), tj);
    }
}
