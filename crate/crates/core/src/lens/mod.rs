//! Simple lenses over finite positions.
//!
//! A [`Lens`] pairs a forward [`Table`] on positions with a backward
//! [`Kernel`] from `position × codomain-direction` to domain-direction.
//! Composition and tensor build new kernel trees out of the operands' trees,
//! so every composite remains printable and serializable.

mod kernel;
mod sample;
mod value;

use std::fmt;

use serde::Serialize;

pub use kernel::{argmax_coord, Kernel};
pub use sample::{lens_extensional_eq, DirectionSampler, ExtReport, Witness};
pub use value::{
    format_scalar, parse_scalar, payfn_from_entries, Elem, PayConst, PayFn, Payoff, Scalar,
    ScalarLit, Subset, Value, ValueSpace,
};

use crate::error::{Error, Result};
use crate::fincore::{product, same_set, table_compose, FinSet, Set, Table};

/// A lens boundary: a finite set of positions and a direction space.
#[derive(Clone, Serialize)]
pub struct LensObj {
    pub pos: Set,
    pub dir: ValueSpace,
}

impl LensObj {
    pub fn new(pos: &Set, dir: ValueSpace) -> LensObj {
        LensObj {
            pos: pos.clone(),
            dir,
        }
    }

    /// `(1, 1)`.
    pub fn unit() -> LensObj {
        LensObj::new(&FinSet::unit(), ValueSpace::Unit)
    }

    /// `(X, P^X)`.
    pub fn payoffs(x: &Set) -> LensObj {
        LensObj::new(x, ValueSpace::PayFnOver(x.clone()))
    }

    /// `(X, 𝒫X)`.
    pub fn subsets(x: &Set) -> LensObj {
        LensObj::new(x, ValueSpace::SubsetsOf(x.clone()))
    }

    /// Monoidal product: positions multiply, directions pair.
    pub fn tensor(&self, other: &LensObj) -> LensObj {
        LensObj {
            pos: product(&self.pos, &other.pos),
            dir: ValueSpace::pair(self.dir.clone(), other.dir.clone()),
        }
    }
}

impl PartialEq for LensObj {
    fn eq(&self, other: &Self) -> bool {
        same_set(&self.pos, &other.pos) && self.dir == other.dir
    }
}

impl Eq for LensObj {}

impl fmt::Debug for LensObj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.pos.name(), self.dir)
    }
}

impl fmt::Display for LensObj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A simple lens `dom ⇄ cod`.
#[derive(Clone)]
pub struct Lens {
    name: String,
    dom: LensObj,
    cod: LensObj,
    fwd: Table,
    bwd: Kernel,
}

impl Lens {
    /// Assembles a lens, checking every boundary.
    pub fn new(
        name: impl Into<String>,
        dom: LensObj,
        cod: LensObj,
        fwd: Table,
        bwd: Kernel,
    ) -> Result<Lens> {
        let name = name.into();
        let check = |ok: bool, what: &str, expected: String, found: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::Boundary {
                    expected: format!("{what} of lens {name}: {expected}"),
                    found,
                })
            }
        };
        check(
            same_set(fwd.dom(), &dom.pos),
            "forward domain",
            dom.pos.name().to_string(),
            fwd.dom().name().to_string(),
        )?;
        check(
            same_set(fwd.cod(), &cod.pos),
            "forward codomain",
            cod.pos.name().to_string(),
            fwd.cod().name().to_string(),
        )?;
        let bwd_dom = ValueSpace::pair(ValueSpace::FinOf(dom.pos.clone()), cod.dir.clone());
        check(
            *bwd.dom() == bwd_dom,
            "backward domain",
            bwd_dom.to_string(),
            bwd.dom().to_string(),
        )?;
        check(
            *bwd.cod() == dom.dir,
            "backward codomain",
            dom.dir.to_string(),
            bwd.cod().to_string(),
        )?;
        Ok(Lens {
            name,
            dom,
            cod,
            fwd,
            bwd,
        })
    }

    /// A lens whose backward part ignores the position and only reshapes the
    /// direction with `dir_back: cod.dir → dom.dir`.
    pub fn reshaping(
        name: impl Into<String>,
        dom: LensObj,
        cod: LensObj,
        fwd: Table,
        dir_back: &Kernel,
    ) -> Result<Lens> {
        let input = ValueSpace::pair(ValueSpace::FinOf(dom.pos.clone()), cod.dir.clone());
        let bwd = Kernel::proj2(&input)?.then(dir_back)?;
        Lens::new(name, dom, cod, fwd, bwd)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Lens {
        self.name = name.into();
        self
    }

    pub fn dom(&self) -> &LensObj {
        &self.dom
    }

    pub fn cod(&self) -> &LensObj {
        &self.cod
    }

    pub fn fwd(&self) -> &Table {
        &self.fwd
    }

    pub fn bwd(&self) -> &Kernel {
        &self.bwd
    }

    pub fn forward(&self, x: usize) -> usize {
        self.fwd.apply(x)
    }

    /// Runs the backward part at position index `x`.
    pub fn backward(&self, x: usize, dir: &Value) -> Result<Value> {
        if x >= self.dom.pos.len() {
            return Err(Error::Element {
                elem: format!("#{x}"),
                set: self.dom.pos.name().to_string(),
            });
        }
        self.bwd
            .run(&Value::pair(Value::elem(&self.dom.pos, x), dir.clone()))
    }

    pub fn backward_at(&self, x: &str, dir: &Value) -> Result<Value> {
        self.backward(self.dom.pos.require(x)?, dir)
    }
}

impl fmt::Debug for Lens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lens {}: {} ⇄ {}", self.name, self.dom, self.cod)
    }
}

impl Serialize for Lens {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            name: &'a str,
            dom: &'a LensObj,
            cod: &'a LensObj,
            fwd: &'a Table,
            bwd: &'a Kernel,
        }
        Repr {
            name: &self.name,
            dom: &self.dom,
            cod: &self.cod,
            fwd: &self.fwd,
            bwd: &self.bwd,
        }
        .serialize(s)
    }
}

/// Composite of projections selecting a component of a nested pair space;
/// `path` reads left to right, `'1'` for the first component and `'2'` for the second.
pub fn select(space: &ValueSpace, path: &str) -> Result<Kernel> {
    let mut k = Kernel::id(space.clone());
    for step in path.chars() {
        let p = match step {
            '1' => Kernel::proj1(k.cod())?,
            '2' => Kernel::proj2(k.cod())?,
            other => return Err(Error::Structure(format!("bad projection step {other:?}"))),
        };
        k = k.then(&p)?;
    }
    Ok(k)
}

/// `(1_X, π₂)`.
pub fn identity_lens(obj: &LensObj) -> Lens {
    let input = ValueSpace::pair(ValueSpace::FinOf(obj.pos.clone()), obj.dir.clone());
    Lens {
        name: format!("id[{}]", obj.pos.name()),
        dom: obj.clone(),
        cod: obj.clone(),
        fwd: Table::identity(&obj.pos),
        bwd: Kernel::proj2(&input).expect("pair space"),
    }
}

/// `l ; m`: forward `fwd_l ; fwd_m`, backward `(x, r) ↦ bwd_l(x, bwd_m(fwd_l(x), r))`.
pub fn lens_compose(l: &Lens, m: &Lens) -> Result<Lens> {
    if l.cod != m.dom {
        return Err(Error::Composition {
            left: l.name.clone(),
            right: m.name.clone(),
            detail: format!("codomain {} differs from domain {}", l.cod, m.dom),
        });
    }
    let fwd = table_compose(&l.fwd, &m.fwd)?;
    let input = ValueSpace::pair(ValueSpace::FinOf(l.dom.pos.clone()), m.cod.dir.clone());
    let x = Kernel::proj1(&input)?;
    let r = Kernel::proj2(&input)?;
    let y = x.then(&Kernel::apply_table(&l.fwd))?;
    let inner = Kernel::pair(&y, &r)?.then(&m.bwd)?;
    let bwd = Kernel::pair(&x, &inner)?.then(&l.bwd)?;
    Lens::new(
        format!("{} ; {}", l.name, m.name),
        l.dom.clone(),
        m.cod.clone(),
        fwd,
        bwd,
    )
}

/// Composite of a nonempty chain of lenses.
pub fn lens_chain(lenses: &[&Lens]) -> Result<Lens> {
    let (first, rest) = lenses
        .split_first()
        .ok_or_else(|| Error::Structure("empty lens chain".into()))?;
    rest.iter()
        .try_fold((*first).clone(), |acc, m| lens_compose(&acc, m))
}

/// `l ⊗ m`, acting componentwise.
pub fn lens_tensor(l: &Lens, m: &Lens) -> Result<Lens> {
    let fwd = Table::product_map(&l.fwd, &m.fwd);
    let dom = LensObj {
        pos: fwd.dom().clone(),
        dir: ValueSpace::pair(l.dom.dir.clone(), m.dom.dir.clone()),
    };
    let cod = LensObj {
        pos: fwd.cod().clone(),
        dir: ValueSpace::pair(l.cod.dir.clone(), m.cod.dir.clone()),
    };
    let input = ValueSpace::pair(ValueSpace::FinOf(dom.pos.clone()), cod.dir.clone());
    let x = select(&input, "11")?;
    let y = select(&input, "12")?;
    let r = select(&input, "21")?;
    let s = select(&input, "22")?;
    let left = Kernel::pair(&x, &r)?.then(&l.bwd)?;
    let right = Kernel::pair(&y, &s)?.then(&m.bwd)?;
    let bwd = Kernel::pair(&left, &right)?;
    Lens::new(format!("({} ⊗ {})", l.name, m.name), dom, cod, fwd, bwd)
}

fn relabel(name: &str, dom: &Set, cod: &Set, f: impl Fn(usize) -> usize) -> Result<Table> {
    Table::from_fn(name, dom, cod, f)
}

/// `(a ⊗ b) ⊗ c ⇄ a ⊗ (b ⊗ c)`.
pub fn assoc_right(a: &LensObj, b: &LensObj, c: &LensObj) -> Result<Lens> {
    let dom = a.tensor(b).tensor(c);
    let cod = a.tensor(&b.tensor(c));
    // Lexicographic enumeration makes both nestings share element indices.
    let fwd = relabel("assoc", &dom.pos, &cod.pos, |p| p)?;
    let d = &cod.dir;
    let back = Kernel::pair(
        &Kernel::pair(&select(d, "1")?, &select(d, "21")?)?,
        &select(d, "22")?,
    )?;
    Lens::reshaping("assoc", dom, cod, fwd, &back)
}

/// `a ⊗ (b ⊗ c) ⇄ (a ⊗ b) ⊗ c`.
pub fn assoc_left(a: &LensObj, b: &LensObj, c: &LensObj) -> Result<Lens> {
    let dom = a.tensor(&b.tensor(c));
    let cod = a.tensor(b).tensor(c);
    let fwd = relabel("assoc⁻¹", &dom.pos, &cod.pos, |p| p)?;
    let d = &cod.dir;
    let back = Kernel::pair(
        &select(d, "11")?,
        &Kernel::pair(&select(d, "12")?, &select(d, "2")?)?,
    )?;
    Lens::reshaping("assoc⁻¹", dom, cod, fwd, &back)
}

/// `a ⇄ 1 ⊗ a`.
pub fn unit_left_intro(a: &LensObj) -> Result<Lens> {
    let cod = LensObj::unit().tensor(a);
    let fwd = relabel("λ⁻¹", &a.pos, &cod.pos, |p| p)?;
    let back = Kernel::proj2(&cod.dir)?;
    Lens::reshaping("λ⁻¹", a.clone(), cod, fwd, &back)
}

/// `1 ⊗ a ⇄ a`.
pub fn unit_left_elim(a: &LensObj) -> Result<Lens> {
    let dom = LensObj::unit().tensor(a);
    let fwd = relabel("λ", &dom.pos, &a.pos, |p| p)?;
    let back = Kernel::pair(&Kernel::discard(a.dir.clone()), &Kernel::id(a.dir.clone()))?;
    Lens::reshaping("λ", dom, a.clone(), fwd, &back)
}

/// `a ⇄ a ⊗ 1`.
pub fn unit_right_intro(a: &LensObj) -> Result<Lens> {
    let cod = a.tensor(&LensObj::unit());
    let fwd = relabel("ρ⁻¹", &a.pos, &cod.pos, |p| p)?;
    let back = Kernel::proj1(&cod.dir)?;
    Lens::reshaping("ρ⁻¹", a.clone(), cod, fwd, &back)
}

/// `a ⊗ 1 ⇄ a`.
pub fn unit_right_elim(a: &LensObj) -> Result<Lens> {
    let dom = a.tensor(&LensObj::unit());
    let fwd = relabel("ρ", &dom.pos, &a.pos, |p| p)?;
    let back = Kernel::pair(&Kernel::id(a.dir.clone()), &Kernel::discard(a.dir.clone()))?;
    Lens::reshaping("ρ", dom, a.clone(), fwd, &back)
}

/// `a ⊗ b ⇄ b ⊗ a`.
pub fn swap(a: &LensObj, b: &LensObj) -> Result<Lens> {
    let dom = a.tensor(b);
    let cod = b.tensor(a);
    let (na, nb) = (a.pos.len(), b.pos.len());
    let fwd = relabel("σ", &dom.pos, &cod.pos, |p| (p % nb) * na + p / nb)?;
    let d = &cod.dir;
    let back = Kernel::pair(&select(d, "2")?, &select(d, "1")?)?;
    Lens::reshaping("σ", dom, cod, fwd, &back)
}

/// `(a ⊗ b) ⊗ (c ⊗ d) ⇄ (a ⊗ c) ⊗ (b ⊗ d)`.
pub fn interchange(a: &LensObj, b: &LensObj, c: &LensObj, d: &LensObj) -> Result<Lens> {
    let dom = a.tensor(b).tensor(&c.tensor(d));
    let cod = a.tensor(c).tensor(&b.tensor(d));
    let (nb, nc, nd) = (b.pos.len(), c.pos.len(), d.pos.len());
    let fwd = relabel("interchange", &dom.pos, &cod.pos, |p| {
        let (ab, cd) = (p / (nc * nd), p % (nc * nd));
        let (i, j) = (ab / nb, ab % nb);
        let (k, l) = (cd / nd, cd % nd);
        (i * nc + k) * (nb * nd) + (j * nd + l)
    })?;
    let dd = &cod.dir;
    let back = Kernel::pair(
        &Kernel::pair(&select(dd, "11")?, &select(dd, "21")?)?,
        &Kernel::pair(&select(dd, "12")?, &select(dd, "22")?)?,
    )?;
    Lens::reshaping("interchange", dom, cod, fwd, &back)
}
