//! Backward maps as typed composition trees.
//!
//! Direction spaces such as `Qᴺ` are infinite, so backward parts of lenses
//! cannot be tabulated. A [`Kernel`] is instead a tree of primitive maps with
//! checked boundaries; it is evaluated on demand, printed for inspection and
//! serialized with one tag per node.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::value::{Elem, PayConst, PayFn, Payoff, Subset, Value, ValueSpace};
use crate::error::{Error, Result};
use crate::fincore::{deserialize_set, FinSet, Set, Table};

#[derive(Clone)]
enum Node {
    Id,
    Compose(Kernel, Kernel),
    Pair(Kernel, Kernel),
    Proj1,
    Proj2,
    ConstPay(PayConst),
    Precompose(Table),
    PartialLeft(Set),
    PartialRight(Set),
    SubtractAt(Set),
    ConstIdFn(PayFn),
    Argmax(usize),
    SubsetProduct(Set),
    Discard,
    Apply(Table),
}

/// A boundary-typed backward map.
#[derive(Clone)]
pub struct Kernel {
    node: Arc<Node>,
    dom: ValueSpace,
    cod: ValueSpace,
}

fn product_factors(prod: &Set) -> Result<(Set, Set)> {
    let (a, b) = prod.require_factors()?;
    Ok((a.clone(), b.clone()))
}

impl Kernel {
    fn leaf(node: Node, dom: ValueSpace, cod: ValueSpace) -> Kernel {
        Kernel {
            node: Arc::new(node),
            dom,
            cod,
        }
    }

    pub fn dom(&self) -> &ValueSpace {
        &self.dom
    }

    pub fn cod(&self) -> &ValueSpace {
        &self.cod
    }

    pub fn id(space: ValueSpace) -> Kernel {
        Kernel::leaf(Node::Id, space.clone(), space)
    }

    /// `first ; second`. Identities are absorbed.
    pub fn compose(first: &Kernel, second: &Kernel) -> Result<Kernel> {
        if first.cod != second.dom {
            return Err(Error::Composition {
                left: first.tag().to_string(),
                right: second.tag().to_string(),
                detail: format!(
                    "kernel codomain {} differs from kernel domain {}",
                    first.cod, second.dom
                ),
            });
        }
        if matches!(*first.node, Node::Id) {
            return Ok(second.clone());
        }
        if matches!(*second.node, Node::Id) {
            return Ok(first.clone());
        }
        Ok(Kernel::leaf(
            Node::Compose(first.clone(), second.clone()),
            first.dom.clone(),
            second.cod.clone(),
        ))
    }

    /// Method form of [`Kernel::compose`].
    pub fn then(&self, next: &Kernel) -> Result<Kernel> {
        Kernel::compose(self, next)
    }

    /// `v ↦ ⟨left(v), right(v)⟩`.
    pub fn pair(left: &Kernel, right: &Kernel) -> Result<Kernel> {
        if left.dom != right.dom {
            return Err(Error::Boundary {
                expected: left.dom.to_string(),
                found: right.dom.to_string(),
            });
        }
        Ok(Kernel::leaf(
            Node::Pair(left.clone(), right.clone()),
            left.dom.clone(),
            ValueSpace::pair(left.cod.clone(), right.cod.clone()),
        ))
    }

    fn proj_cods(dom: &ValueSpace) -> Result<(ValueSpace, ValueSpace)> {
        match dom {
            ValueSpace::Pair(a, b) => Ok(((**a).clone(), (**b).clone())),
            ValueSpace::FinOf(prod) => {
                let (a, b) = product_factors(prod)?;
                Ok((ValueSpace::FinOf(a), ValueSpace::FinOf(b)))
            }
            other => Err(Error::Structure(format!("cannot project out of {other}"))),
        }
    }

    /// First projection, out of a pair space or the elements of a product set.
    pub fn proj1(dom: &ValueSpace) -> Result<Kernel> {
        let (a, _) = Kernel::proj_cods(dom)?;
        Ok(Kernel::leaf(Node::Proj1, dom.clone(), a))
    }

    pub fn proj2(dom: &ValueSpace) -> Result<Kernel> {
        let (_, b) = Kernel::proj_cods(dom)?;
        Ok(Kernel::leaf(Node::Proj2, dom.clone(), b))
    }

    /// Constant map emitting a payoff vector or a payoff function.
    pub fn const_pay(dom: ValueSpace, value: impl Into<PayConst>) -> Kernel {
        let value = value.into();
        let cod = value.space();
        Kernel::leaf(Node::ConstPay(value), dom, cod)
    }

    /// `u ↦ u ∘ f` for `f: X → Y`, from `P^Y` to `P^X`.
    pub fn precompose(f: &Table) -> Kernel {
        Kernel::leaf(
            Node::Precompose(f.clone()),
            ValueSpace::PayFnOver(f.cod().clone()),
            ValueSpace::PayFnOver(f.dom().clone()),
        )
    }

    /// `(u, a) ↦ u(a, -)` for `u` over `A × B`.
    pub fn partial_left(prod: &Set) -> Result<Kernel> {
        let (a, b) = product_factors(prod)?;
        Ok(Kernel::leaf(
            Node::PartialLeft(prod.clone()),
            ValueSpace::pair(ValueSpace::PayFnOver(prod.clone()), ValueSpace::FinOf(a)),
            ValueSpace::PayFnOver(b),
        ))
    }

    /// `(u, b) ↦ u(-, b)` for `u` over `A × B`.
    pub fn partial_right(prod: &Set) -> Result<Kernel> {
        let (a, b) = product_factors(prod)?;
        Ok(Kernel::leaf(
            Node::PartialRight(prod.clone()),
            ValueSpace::pair(ValueSpace::PayFnOver(prod.clone()), ValueSpace::FinOf(b)),
            ValueSpace::PayFnOver(a),
        ))
    }

    /// `(u, z̄) ↦ λz. u(z) − u(z̄)`.
    pub fn subtract_at(over: &Set) -> Kernel {
        Kernel::leaf(
            Node::SubtractAt(over.clone()),
            ValueSpace::pair(ValueSpace::PayFnOver(over.clone()), ValueSpace::FinOf(over.clone())),
            ValueSpace::PayFnOver(over.clone()),
        )
    }

    /// The constant identity of `P`, post-composed with `u`: emits `id ∘ u`.
    /// The endomorphism space `P^P` is never materialized.
    pub fn const_idfn(dom: ValueSpace, u: &PayFn) -> Kernel {
        Kernel::leaf(
            Node::ConstIdFn(u.clone()),
            dom,
            ValueSpace::PayFnOver(u.dom().clone()),
        )
    }

    /// Maximizers of coordinate `coord`, from `P^X` to `𝒫X`.
    pub fn argmax(over: &Set, coord: usize) -> Kernel {
        Kernel::leaf(
            Node::Argmax(coord),
            ValueSpace::PayFnOver(over.clone()),
            ValueSpace::SubsetsOf(over.clone()),
        )
    }

    /// `(S, T) ↦ S × T`, from `𝒫A × 𝒫B` to `𝒫(A × B)`.
    pub fn subset_product(prod: &Set) -> Result<Kernel> {
        let (a, b) = product_factors(prod)?;
        Ok(Kernel::leaf(
            Node::SubsetProduct(prod.clone()),
            ValueSpace::pair(ValueSpace::SubsetsOf(a), ValueSpace::SubsetsOf(b)),
            ValueSpace::SubsetsOf(prod.clone()),
        ))
    }

    pub fn discard(dom: ValueSpace) -> Kernel {
        Kernel::leaf(Node::Discard, dom, ValueSpace::Unit)
    }

    /// Applies a forward table to an element.
    pub fn apply_table(f: &Table) -> Kernel {
        Kernel::leaf(
            Node::Apply(f.clone()),
            ValueSpace::FinOf(f.dom().clone()),
            ValueSpace::FinOf(f.cod().clone()),
        )
    }

    /// `first ; second ; …` over a nonempty chain.
    pub fn chain(kernels: &[Kernel]) -> Result<Kernel> {
        let (first, rest) = kernels
            .split_first()
            .ok_or_else(|| Error::Structure("empty kernel chain".into()))?;
        rest.iter().try_fold(first.clone(), |acc, k| acc.then(k))
    }

    /// Evaluates on an input, checking it inhabits the domain.
    pub fn run(&self, input: &Value) -> Result<Value> {
        self.dom.require(input)?;
        self.eval(input)
    }

    fn eval(&self, v: &Value) -> Result<Value> {
        match &*self.node {
            Node::Id => Ok(v.clone()),
            Node::Compose(f, g) => g.eval(&f.eval(v)?),
            Node::Pair(f, g) => Ok(Value::pair(f.eval(v)?, g.eval(v)?)),
            Node::Proj1 | Node::Proj2 => {
                let first = matches!(*self.node, Node::Proj1);
                match v {
                    Value::Pair(a, b) => Ok(if first { (**a).clone() } else { (**b).clone() }),
                    Value::Elem(e) => {
                        let (i, j) = e.of().split_index(e.index())?;
                        let (fa, fb) = e.of().require_factors()?;
                        Ok(if first {
                            Value::Elem(Elem::new(fa, i)?)
                        } else {
                            Value::Elem(Elem::new(fb, j)?)
                        })
                    }
                    other => Err(Error::Value {
                        space: self.dom.to_string(),
                        detail: format!("{other:?}"),
                    }),
                }
            }
            Node::ConstPay(c) => Ok(c.to_value()),
            Node::Precompose(f) => {
                let u = v.as_payfn()?;
                let out = PayFn::from_fn(f.dom(), |x| u.at(f.apply(x)).clone())?;
                Ok(Value::PayFn(out))
            }
            Node::PartialLeft(prod) | Node::PartialRight(prod) => {
                let left = matches!(*self.node, Node::PartialLeft(_));
                let (u, at) = v.as_pair()?;
                let u = u.as_payfn()?;
                let at = at.as_elem()?.index();
                let (fa, fb) = prod.require_factors()?;
                let n = fb.len();
                let out = if left {
                    PayFn::from_fn(fb, |j| u.at(at * n + j).clone())?
                } else {
                    PayFn::from_fn(fa, |i| u.at(i * n + at).clone())?
                };
                Ok(Value::PayFn(out))
            }
            Node::SubtractAt(over) => {
                let (u, at) = v.as_pair()?;
                let u = u.as_payfn()?;
                let base = u.at(at.as_elem()?.index());
                let values = u
                    .values()
                    .iter()
                    .map(|p| p.checked_sub(base))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Value::PayFn(PayFn::new(over, values)?))
            }
            Node::ConstIdFn(u) => {
                let values: Vec<Payoff> = u.values().iter().map(identity_endo).collect();
                Ok(Value::PayFn(PayFn::new(u.dom(), values)?))
            }
            Node::Argmax(coord) => Ok(Value::Subset(argmax_coord(v.as_payfn()?, *coord)?)),
            Node::SubsetProduct(prod) => {
                let (s, t) = v.as_pair()?;
                let (s, t) = (s.as_subset()?, t.as_subset()?);
                let n = t.of().len();
                let members = s
                    .members()
                    .iter()
                    .flat_map(|&i| t.members().iter().map(move |&j| i * n + j))
                    .collect();
                Ok(Value::Subset(Subset::new(prod, members)?))
            }
            Node::Discard => Ok(Value::Unit),
            Node::Apply(f) => {
                let e = v.as_elem()?;
                Ok(Value::Elem(Elem::new(f.cod(), f.apply(e.index()))?))
            }
        }
    }

    /// Serialization tag of the root node.
    pub fn tag(&self) -> &'static str {
        match &*self.node {
            Node::Id => "id",
            Node::Compose(..) => "compose",
            Node::Pair(..) => "pair",
            Node::Proj1 => "proj1",
            Node::Proj2 => "proj2",
            Node::ConstPay(_) => "const_pay",
            Node::Precompose(_) => "precompose",
            Node::PartialLeft(_) => "partial_left",
            Node::PartialRight(_) => "partial_right",
            Node::SubtractAt(_) => "subtract_at",
            Node::ConstIdFn(_) => "const_idfn",
            Node::Argmax(_) => "argmax",
            Node::SubsetProduct(_) => "subset_product",
            Node::Discard => "discard",
            Node::Apply(_) => "apply",
        }
    }

    fn children(&self) -> Vec<&Kernel> {
        match &*self.node {
            Node::Compose(a, b) | Node::Pair(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    /// Number of occurrences of each tag in the tree.
    pub fn tag_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut counts = BTreeMap::new();
        let mut stack = vec![self];
        while let Some(k) = stack.pop() {
            *counts.entry(k.tag()).or_insert(0) += 1;
            stack.extend(k.children());
        }
        counts
    }

    pub fn contains_tag(&self, tag: &str) -> bool {
        self.tag_counts().contains_key(tag)
    }

    fn detail(&self) -> String {
        match &*self.node {
            Node::ConstPay(c) => format!(" {c:?}"),
            Node::Precompose(f) | Node::Apply(f) => format!(" {}", f.name()),
            Node::PartialLeft(p) | Node::PartialRight(p) | Node::SubsetProduct(p) => {
                format!(" over {}", p.name())
            }
            Node::SubtractAt(z) => format!(" over {}", z.name()),
            Node::ConstIdFn(u) => format!(" {u:?}"),
            Node::Argmax(i) => format!(" coordinate {i}"),
            _ => String::new(),
        }
    }

    fn write_tree(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        writeln!(
            f,
            "{:indent$}{}{} : {} → {}",
            "",
            self.tag(),
            self.detail(),
            self.dom,
            self.cod,
            indent = depth * 2
        )?;
        for c in self.children() {
            c.write_tree(f, depth + 1)?;
        }
        Ok(())
    }
}

fn identity_endo(p: &Payoff) -> Payoff {
    p.clone()
}

/// Elements of the domain maximizing coordinate `coord` of `u`. Ties are all kept.
pub fn argmax_coord(u: &PayFn, coord: usize) -> Result<Subset> {
    let mut best: Option<&num_rational::BigRational> = None;
    let mut members = Vec::new();
    for (i, p) in u.values().iter().enumerate() {
        let x = p.coord(coord)?;
        match best {
            Some(b) if x < b => {}
            Some(b) if x == b => members.push(i),
            _ => {
                best = Some(x);
                members.clear();
                members.push(i);
            }
        }
    }
    Subset::new(u.dom(), members)
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_tree(f, 0)
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel<{}: {} → {}>", self.tag(), self.dom, self.cod)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
enum Repr {
    Id {
        space: ValueSpace,
    },
    Compose {
        first: Box<Repr>,
        second: Box<Repr>,
    },
    Pair {
        left: Box<Repr>,
        right: Box<Repr>,
    },
    Proj1 {
        dom: ValueSpace,
    },
    Proj2 {
        dom: ValueSpace,
    },
    ConstPay {
        dom: ValueSpace,
        value: PayConst,
    },
    Precompose {
        table: Table,
    },
    PartialLeft {
        #[serde(serialize_with = "ser_set", deserialize_with = "deserialize_set")]
        product: Set,
    },
    PartialRight {
        #[serde(serialize_with = "ser_set", deserialize_with = "deserialize_set")]
        product: Set,
    },
    SubtractAt {
        #[serde(serialize_with = "ser_set", deserialize_with = "deserialize_set")]
        over: Set,
    },
    #[serde(rename = "const_idfn")]
    ConstIdFn {
        dom: ValueSpace,
        payoff: PayFn,
    },
    Argmax {
        #[serde(serialize_with = "ser_set", deserialize_with = "deserialize_set")]
        over: Set,
        coordinate: usize,
    },
    SubsetProduct {
        #[serde(serialize_with = "ser_set", deserialize_with = "deserialize_set")]
        product: Set,
    },
    Discard {
        dom: ValueSpace,
    },
    Apply {
        table: Table,
    },
}

fn ser_set<S: serde::Serializer>(set: &Set, s: S) -> Result<S::Ok, S::Error> {
    FinSet::serialize(set, s)
}

impl From<&Kernel> for Repr {
    fn from(k: &Kernel) -> Repr {
        match &*k.node {
            Node::Id => Repr::Id {
                space: k.dom.clone(),
            },
            Node::Compose(a, b) => Repr::Compose {
                first: Box::new(a.into()),
                second: Box::new(b.into()),
            },
            Node::Pair(a, b) => Repr::Pair {
                left: Box::new(a.into()),
                right: Box::new(b.into()),
            },
            Node::Proj1 => Repr::Proj1 { dom: k.dom.clone() },
            Node::Proj2 => Repr::Proj2 { dom: k.dom.clone() },
            Node::ConstPay(c) => Repr::ConstPay {
                dom: k.dom.clone(),
                value: c.clone(),
            },
            Node::Precompose(t) => Repr::Precompose { table: t.clone() },
            Node::PartialLeft(p) => Repr::PartialLeft { product: p.clone() },
            Node::PartialRight(p) => Repr::PartialRight { product: p.clone() },
            Node::SubtractAt(z) => Repr::SubtractAt { over: z.clone() },
            Node::ConstIdFn(u) => Repr::ConstIdFn {
                dom: k.dom.clone(),
                payoff: u.clone(),
            },
            Node::Argmax(i) => {
                let over = match &k.dom {
                    ValueSpace::PayFnOver(x) => x.clone(),
                    _ => unreachable!("argmax domain is a payoff-function space"),
                };
                Repr::Argmax {
                    over,
                    coordinate: *i,
                }
            }
            Node::SubsetProduct(p) => Repr::SubsetProduct { product: p.clone() },
            Node::Discard => Repr::Discard { dom: k.dom.clone() },
            Node::Apply(t) => Repr::Apply { table: t.clone() },
        }
    }
}

impl TryFrom<Repr> for Kernel {
    type Error = Error;

    fn try_from(r: Repr) -> Result<Kernel> {
        Ok(match r {
            Repr::Id { space } => Kernel::id(space),
            Repr::Compose { first, second } => {
                Kernel::compose(&Kernel::try_from(*first)?, &Kernel::try_from(*second)?)?
            }
            Repr::Pair { left, right } => {
                Kernel::pair(&Kernel::try_from(*left)?, &Kernel::try_from(*right)?)?
            }
            Repr::Proj1 { dom } => Kernel::proj1(&dom)?,
            Repr::Proj2 { dom } => Kernel::proj2(&dom)?,
            Repr::ConstPay { dom, value } => Kernel::const_pay(dom, value),
            Repr::Precompose { table } => Kernel::precompose(&table),
            Repr::PartialLeft { product } => Kernel::partial_left(&product)?,
            Repr::PartialRight { product } => Kernel::partial_right(&product)?,
            Repr::SubtractAt { over } => Kernel::subtract_at(&over),
            Repr::ConstIdFn { dom, payoff } => Kernel::const_idfn(dom, &payoff),
            Repr::Argmax { over, coordinate } => Kernel::argmax(&over, coordinate),
            Repr::SubsetProduct { product } => Kernel::subset_product(&product)?,
            Repr::Discard { dom } => Kernel::discard(dom),
            Repr::Apply { table } => Kernel::apply_table(&table),
        })
    }
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Repr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = Repr::deserialize(d)?;
        Kernel::try_from(repr).map_err(serde::de::Error::custom)
    }
}
