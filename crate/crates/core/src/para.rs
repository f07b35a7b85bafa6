//! Parametric lenses.
//!
//! A [`ParaLens`] is a lens `param ⊗ dom ⇄ cod`. The parameter boundary is
//! where players sit: composites multiply parameters, [`reparameterise`]
//! rewires the parameter along another lens, and [`close`] plugs in a state
//! and a costate so that only the parameter map remains.
//!
//! Composite parameters put the later stage first, so `g ; h` with parameters
//! `Ω` and `Ξ` has parameter `Ξ ⊗ Ω`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lens::{
    assoc_right, identity_lens, interchange, lens_compose, lens_extensional_eq, lens_tensor,
    unit_left_elim, DirectionSampler, ExtReport, Lens, LensObj, Value,
};

/// A lens `param ⊗ dom ⇄ cod`.
#[derive(Clone, Debug, Serialize)]
pub struct ParaLens {
    name: String,
    param: LensObj,
    dom: LensObj,
    cod: LensObj,
    body: Lens,
}

impl ParaLens {
    pub fn new(name: impl Into<String>, param: LensObj, dom: LensObj, body: Lens) -> Result<ParaLens> {
        let name = name.into();
        let expected = param.tensor(&dom);
        if *body.dom() != expected {
            return Err(Error::Boundary {
                expected: format!("body of {name} from {expected}"),
                found: body.dom().to_string(),
            });
        }
        let cod = body.cod().clone();
        Ok(ParaLens {
            name,
            param,
            dom,
            cod,
            body,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> ParaLens {
        self.name = name.into();
        self
    }

    pub fn param(&self) -> &LensObj {
        &self.param
    }

    pub fn dom(&self) -> &LensObj {
        &self.dom
    }

    pub fn cod(&self) -> &LensObj {
        &self.cod
    }

    pub fn body(&self) -> &Lens {
        &self.body
    }

    /// Index of the body position `(ω, x)`.
    pub fn position(&self, omega: usize, x: usize) -> Result<usize> {
        self.body.dom().pos.pair_index(omega, x)
    }

    pub fn forward(&self, omega: usize, x: usize) -> Result<usize> {
        Ok(self.body.forward(self.position(omega, x)?))
    }

    /// Backward pass at `(ω, x)`, returning `(parameter direction, dom direction)`.
    pub fn backward(&self, omega: usize, x: usize, dir: &Value) -> Result<(Value, Value)> {
        self.body.backward(self.position(omega, x)?, dir)?.into_pair()
    }
}

/// The identity on `obj` with the unit parameter.
pub fn para_identity(obj: &LensObj) -> Result<ParaLens> {
    let body = unit_left_elim(obj)?;
    ParaLens::new(format!("id[{}]", obj.pos.name()), LensObj::unit(), obj.clone(), body)
}

/// Lifts a plain lens to a parametric one with the unit parameter.
pub fn para_from_lens(l: &Lens) -> Result<ParaLens> {
    let body = lens_compose(&unit_left_elim(l.dom())?, l)?;
    ParaLens::new(l.name(), LensObj::unit(), l.dom().clone(), body)
}

/// `g ; h` with parameter `param(h) ⊗ param(g)`.
pub fn para_compose(g: &ParaLens, h: &ParaLens) -> Result<ParaLens> {
    if g.cod != h.dom {
        return Err(Error::Composition {
            left: g.name.clone(),
            right: h.name.clone(),
            detail: format!("codomain {} differs from domain {}", g.cod, h.dom),
        });
    }
    let assoc = assoc_right(&h.param, &g.param, &g.dom)?;
    let inner = lens_tensor(&identity_lens(&h.param), &g.body)?;
    let body = lens_compose(&lens_compose(&assoc, &inner)?, &h.body)?;
    ParaLens::new(
        format!("{} ; {}", g.name, h.name),
        h.param.tensor(&g.param),
        g.dom.clone(),
        body,
    )
}

/// `g ⊗ h`: parameters, domains and codomains multiply componentwise.
pub fn para_tensor(g: &ParaLens, h: &ParaLens) -> Result<ParaLens> {
    let shuffle = interchange(&g.param, &h.param, &g.dom, &h.dom)?;
    let body = lens_compose(&shuffle, &lens_tensor(&g.body, &h.body)?)?;
    ParaLens::new(
        format!("({} ⊗ {})", g.name, h.name),
        g.param.tensor(&h.param),
        g.dom.tensor(&h.dom),
        body,
    )
}

/// Rewires the parameter of `g` along `r: new ⇄ param(g)`.
pub fn reparameterise(g: &ParaLens, r: &Lens) -> Result<ParaLens> {
    if *r.cod() != g.param {
        return Err(Error::Boundary {
            expected: format!("reparameterisation into {}", g.param),
            found: format!("{} into {}", r.name(), r.cod()),
        });
    }
    let body = lens_compose(&lens_tensor(r, &identity_lens(&g.dom))?, &g.body)?;
    ParaLens::new(
        format!("{}[{}]", g.name, r.name()),
        r.dom().clone(),
        g.dom.clone(),
        body,
    )
}

/// Parameter map of a closed parametric lens.
///
/// Entries are computed on demand by [`ResidualMap::at`]; [`ResidualMap::tabulate`]
/// evaluates every parameter position.
#[derive(Clone, Debug)]
pub struct ResidualMap {
    param: LensObj,
    closed: Lens,
}

impl ResidualMap {
    pub fn param(&self) -> &LensObj {
        &self.param
    }

    /// The closed lens `param ⊗ 1 ⇄ 1` whose backward pass is evaluated.
    pub fn lens(&self) -> &Lens {
        &self.closed
    }

    /// Residual for parameter position `omega`.
    pub fn at(&self, omega: usize) -> Result<Value> {
        if omega >= self.param.pos.len() {
            return Err(Error::Element {
                elem: format!("#{omega}"),
                set: self.param.pos.name().to_string(),
            });
        }
        // Positions of `param ⊗ 1` share indices with `param`.
        let (residual, _) = self.closed.backward(omega, &Value::Unit)?.into_pair()?;
        Ok(residual)
    }

    pub fn at_label(&self, label: &str) -> Result<Value> {
        self.at(self.param.pos.require(label)?)
    }

    /// All residuals in parameter order.
    pub fn tabulate(&self) -> Result<Vec<Value>> {
        (0..self.param.pos.len())
            .into_par_iter()
            .map(|omega| self.at(omega))
            .collect()
    }
}

/// Closes `g` with `state: 1 ⇄ dom(g)` and `costate: cod(g) ⇄ 1`.
pub fn close(g: &ParaLens, state: &Lens, costate: &Lens) -> Result<ResidualMap> {
    let unit = LensObj::unit();
    let require = |ok: bool, expected: String, found: String| {
        if ok {
            Ok(())
        } else {
            Err(Error::Boundary { expected, found })
        }
    };
    require(
        *state.dom() == unit,
        "state from the unit object".into(),
        format!("{} from {}", state.name(), state.dom()),
    )?;
    require(
        *costate.cod() == unit,
        "costate into the unit object".into(),
        format!("{} into {}", costate.name(), costate.cod()),
    )?;
    require(
        *state.cod() == g.dom,
        format!("state into {}", g.dom),
        format!("{} into {}", state.name(), state.cod()),
    )?;
    require(
        *costate.dom() == g.cod,
        format!("costate from {}", g.cod),
        format!("{} from {}", costate.name(), costate.dom()),
    )?;
    let fed = lens_tensor(&identity_lens(&g.param), state)?;
    let closed = lens_compose(&lens_compose(&fed, &g.body)?, costate)?;
    Ok(ResidualMap {
        param: g.param.clone(),
        closed,
    })
}

/// Extensional equality of two parametric lenses with equal boundaries.
pub fn para_extensional_eq(
    g: &ParaLens,
    h: &ParaLens,
    sampler: &DirectionSampler,
) -> Result<ExtReport> {
    if g.param != h.param || g.dom != h.dom || g.cod != h.cod {
        return Err(Error::Boundary {
            expected: format!("{} : {} ⇄ {}", g.param, g.dom, g.cod),
            found: format!("{} : {} ⇄ {}", h.param, h.dom, h.cod),
        });
    }
    lens_extensional_eq(&g.body, &h.body, sampler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincore::{product, FinSet, Set, Table};
    use crate::lens::{assoc_left, argmax_coord, Kernel, PayFn, Payoff, ValueSpace};

    fn set(name: &str, elems: &[&str]) -> Set {
        FinSet::new(name, elems.iter().copied()).unwrap()
    }

    // Lift of `play: Ω × X → Y`, written out by hand so these tests do not
    // depend on the game constructors.
    fn lift(play: &Table) -> ParaLens {
        let (omega, x) = play.dom().require_factors().unwrap();
        let (omega, x) = (omega.clone(), x.clone());
        let param = LensObj::payoffs(&omega);
        let dom = LensObj::payoffs(&x);
        let body_dom = param.tensor(&dom);
        let input = ValueSpace::pair(
            ValueSpace::FinOf(body_dom.pos.clone()),
            ValueSpace::PayFnOver(play.cod().clone()),
        );
        let pos = Kernel::proj1(&input).unwrap();
        let u = Kernel::proj2(&input).unwrap().then(&Kernel::precompose(play)).unwrap();
        let w = pos.then(&Kernel::proj1(pos.cod()).unwrap()).unwrap();
        let xb = pos.then(&Kernel::proj2(pos.cod()).unwrap()).unwrap();
        let du_omega = Kernel::pair(&u, &xb).unwrap().then(&Kernel::partial_right(play.dom()).unwrap()).unwrap();
        let du_x = Kernel::pair(&u, &w).unwrap().then(&Kernel::partial_left(play.dom()).unwrap()).unwrap();
        let bwd = Kernel::pair(&du_omega, &du_x).unwrap();
        let body = Lens::new(play.name(), body_dom, LensObj::payoffs(play.cod()), play.clone(), bwd).unwrap();
        ParaLens::new(play.name(), param, dom, body).unwrap()
    }

    fn seeded_play(seed: u64, omega: &Set, x: &Set, y: &Set) -> Table {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dom = product(omega, x);
        let map: Vec<usize> = (0..dom.len()).map(|_| rng.gen_range(0..y.len())).collect();
        Table::from_fn(format!("play{seed}"), &dom, y, |i| map[i]).unwrap()
    }

    fn const_state(x: &Set, at: usize) -> Lens {
        let unit = LensObj::unit();
        let cod = LensObj::payoffs(x);
        let fwd = Table::constant(&unit.pos, x, at).unwrap();
        let input = ValueSpace::pair(ValueSpace::FinOf(unit.pos.clone()), cod.dir.clone());
        Lens::new("state", unit, cod, fwd, Kernel::discard(input)).unwrap()
    }

    fn const_costate(u: &PayFn) -> Lens {
        let dom = LensObj::payoffs(u.dom());
        let unit = LensObj::unit();
        let fwd = Table::constant(&dom.pos, &unit.pos, 0).unwrap();
        let input = ValueSpace::pair(ValueSpace::FinOf(dom.pos.clone()), ValueSpace::Unit);
        Lens::new("const", dom, unit, fwd, Kernel::const_pay(input, u.clone())).unwrap()
    }

    fn sampler() -> DirectionSampler {
        DirectionSampler::new(5, 20, 1)
    }

    #[test]
    fn body_boundary_is_checked() {
        let x = set("X", &["a", "b"]);
        let l = identity_lens(&LensObj::payoffs(&x));
        assert!(matches!(
            ParaLens::new("bad", LensObj::payoffs(&x), LensObj::payoffs(&x), l),
            Err(Error::Boundary { .. })
        ));
    }

    #[test]
    fn identity_is_unital_up_to_unit_relabeling() {
        let (w, x) = (set("W", &["s", "t"]), set("X", &["a", "b"]));
        let g = lift(&seeded_play(1, &w, &x, &x));
        let right = para_compose(&g, &para_identity(g.cod()).unwrap()).unwrap();
        let left = para_compose(&para_identity(g.dom()).unwrap(), &g).unwrap();
        // right has parameter 1 ⊗ W, left has W ⊗ 1.
        let right = reparameterise(&right, &crate::lens::unit_left_intro(g.param()).unwrap()).unwrap();
        let left = reparameterise(&left, &crate::lens::unit_right_intro(g.param()).unwrap()).unwrap();
        assert!(para_extensional_eq(&g, &right, &sampler()).unwrap().equal);
        assert!(para_extensional_eq(&g, &left, &sampler()).unwrap().equal);
    }

    #[test]
    fn composite_of_two_stages_matches_direct_tables() {
        let (w, xi) = (set("Ω", &["w1", "w2"]), set("Ξ", &["k1", "k2"]));
        let x = set("X", &["x"]);
        let y = set("Y", &["y1", "y2"]);
        let z = set("Z", &["z1", "z2", "z3"]);
        let pg = seeded_play(2, &w, &x, &y);
        let ph = seeded_play(3, &xi, &y, &z);
        let gh = para_compose(&lift(&pg), &lift(&ph)).unwrap();
        assert_eq!(gh.param().pos.len(), 4);
        let u = PayFn::from_fn(&z, |i| Payoff::from_ints(&[i as i64 * 2 - 1])).unwrap();
        for k in 0..2 {
            for o in 0..2 {
                let p = gh.param().pos.pair_index(k, o).unwrap();
                let (dp, _) = gh.backward(p, 0, &Value::PayFn(u.clone())).unwrap();
                let (d_xi, d_w) = dp.into_pair().unwrap();
                let yg = pg.apply(o * x.len());
                let e_xi = PayFn::from_fn(&xi, |k2| u.at(ph.apply(k2 * y.len() + yg)).clone()).unwrap();
                let e_w = PayFn::from_fn(&w, |o2| {
                    u.at(ph.apply(k * y.len() + pg.apply(o2 * x.len()))).clone()
                })
                .unwrap();
                assert_eq!(d_xi, Value::PayFn(e_xi));
                assert_eq!(d_w, Value::PayFn(e_w));
            }
        }
    }

    #[test]
    fn composition_is_associative_up_to_reassociation() {
        let s = set("S", &["a", "b"]);
        let (p1, p2, p3) = (set("P", &["p", "q"]), set("Q", &["r", "t"]), set("R", &["m", "n"]));
        let g = lift(&seeded_play(4, &p1, &s, &s));
        let h = lift(&seeded_play(5, &p2, &s, &s));
        let k = lift(&seeded_play(6, &p3, &s, &s));
        let gh_k = para_compose(&para_compose(&g, &h).unwrap(), &k).unwrap();
        let g_hk = para_compose(&g, &para_compose(&h, &k).unwrap()).unwrap();
        // gh_k: R ⊗ (Q ⊗ P); g_hk: (R ⊗ Q) ⊗ P.
        let r = assoc_left(k.param(), h.param(), g.param()).unwrap();
        let g_hk = reparameterise(&g_hk, &r).unwrap();
        assert!(para_extensional_eq(&gh_k, &g_hk, &sampler()).unwrap().equal);
    }

    #[test]
    fn reparameterising_along_identity_changes_nothing() {
        let (w, x) = (set("W", &["s", "t", "u"]), set("X", &["a", "b"]));
        let g = lift(&seeded_play(7, &w, &x, &x));
        let same = reparameterise(&g, &identity_lens(g.param())).unwrap();
        assert!(para_extensional_eq(&g, &same, &sampler()).unwrap().equal);
        let bad = identity_lens(&LensObj::payoffs(&x));
        assert!(reparameterise(&g, &bad).is_err());
    }

    #[test]
    fn reparameterisation_is_functorial() {
        let (w, x) = (set("W", &["s", "t"]), set("X", &["a", "b"]));
        let v = set("V", &["v1", "v2", "v3"]);
        let g = lift(&seeded_play(8, &w, &x, &x));
        let p_star = |f: &Table| {
            Lens::reshaping(
                f.name(),
                LensObj::payoffs(f.dom()),
                LensObj::payoffs(f.cod()),
                f.clone(),
                &Kernel::precompose(f),
            )
            .unwrap()
        };
        let r = p_star(&Table::from_labels("r", &w, &w, [("s", "t"), ("t", "t")]).unwrap());
        let s = p_star(&Table::from_labels("s", &v, &w, [("v1", "s"), ("v2", "t"), ("v3", "s")]).unwrap());
        let once = reparameterise(&g, &lens_compose(&s, &r).unwrap()).unwrap();
        let twice = reparameterise(&reparameterise(&g, &r).unwrap(), &s).unwrap();
        assert!(para_extensional_eq(&once, &twice, &sampler()).unwrap().equal);
    }

    #[test]
    fn copy_reparameterisation_restricts_to_the_diagonal() {
        let w = set("W", &["s", "t"]);
        let x = set("X", &["x"]);
        let ww = product(&w, &w);
        let y = set("Y", &["y1", "y2", "y3"]);
        let play = seeded_play(9, &ww, &x, &y);
        let g = lift(&play);
        let delta = Table::diagonal(&w);
        let copy = Lens::reshaping(
            "copy",
            LensObj::payoffs(&w),
            LensObj::payoffs(&ww),
            delta.clone(),
            &Kernel::precompose(&delta),
        )
        .unwrap();
        let c = reparameterise(&g, &copy).unwrap();
        let s = sampler();
        let mut rng = s.rng();
        for _ in 0..10 {
            let u = s.payfn(&y, &mut rng);
            for o in 0..w.len() {
                let (dw, _) = c.backward(o, 0, &Value::PayFn(u.clone())).unwrap();
                let diag = PayFn::from_fn(&w, |o2| u.at(play.apply(delta.apply(o2))).clone()).unwrap();
                assert_eq!(dw, Value::PayFn(diag));
            }
        }
    }

    #[test]
    fn tensor_of_selections_acts_independently() {
        let (a, b) = (set("A", &["a1", "a2"]), set("B", &["b1", "b2", "b3"]));
        let sel = |x: &Set| {
            let body = Lens::reshaping(
                "sel",
                LensObj::subsets(x),
                LensObj::payoffs(x),
                Table::identity(x),
                &Kernel::argmax(x, 0),
            )
            .unwrap();
            para_from_lens(&body).unwrap()
        };
        let t = para_tensor(&sel(&a), &sel(&b)).unwrap();
        let s = sampler();
        let mut rng = s.rng();
        for _ in 0..10 {
            let (u, v) = (s.payfn(&a, &mut rng), s.payfn(&b, &mut rng));
            let dir = Value::pair(Value::PayFn(u.clone()), Value::PayFn(v.clone()));
            for x in 0..t.dom().pos.len() {
                let (_, d) = t.backward(0, x, &dir).unwrap();
                let expected = Value::pair(
                    Value::Subset(argmax_coord(&u, 0).unwrap()),
                    Value::Subset(argmax_coord(&v, 0).unwrap()),
                );
                assert_eq!(d, expected);
            }
        }
    }

    #[test]
    fn tensor_with_unit_identity_is_relabeling() {
        let (w, x) = (set("W", &["s", "t"]), set("X", &["a", "b"]));
        let g = lift(&seeded_play(10, &w, &x, &x));
        let t = para_tensor(&g, &para_identity(&LensObj::unit()).unwrap()).unwrap();
        assert_eq!(t.param().pos.len(), w.len());
        assert_eq!(t.dom().pos.len(), x.len());
        let s = sampler();
        let mut rng = s.rng();
        for _ in 0..5 {
            let u = s.payfn(&x, &mut rng);
            for o in 0..w.len() {
                for i in 0..x.len() {
                    let (dp, dx) = g.backward(o, i, &Value::PayFn(u.clone())).unwrap();
                    let (tp, tx) = t
                        .backward(o, i, &Value::pair(Value::PayFn(u.clone()), Value::Unit))
                        .unwrap();
                    assert_eq!(tp, Value::pair(dp, Value::Unit));
                    assert_eq!(tx, Value::pair(dx, Value::Unit));
                }
            }
        }
    }

    #[test]
    fn tensor_interchanges_with_composition() {
        let s = set("S", &["a", "b"]);
        let (p, q) = (set("P", &["p1", "p2"]), set("Q", &["q1", "q2"]));
        let (g1, g2) = (lift(&seeded_play(11, &p, &s, &s)), lift(&seeded_play(12, &q, &s, &s)));
        let (h1, h2) = (lift(&seeded_play(13, &q, &s, &s)), lift(&seeded_play(14, &p, &s, &s)));
        let lhs = para_compose(&para_tensor(&g1, &g2).unwrap(), &para_tensor(&h1, &h2).unwrap()).unwrap();
        let rhs = para_tensor(&para_compose(&g1, &h1).unwrap(), &para_compose(&g2, &h2).unwrap()).unwrap();
        // lhs has parameter (h1 ⊗ h2) ⊗ (g1 ⊗ g2), rhs has (h1 ⊗ g1) ⊗ (h2 ⊗ g2).
        let r = interchange(h1.param(), g1.param(), h2.param(), g2.param()).unwrap();
        let lhs = reparameterise(&lhs, &r).unwrap();
        assert!(para_extensional_eq(&lhs, &rhs, &DirectionSampler::new(3, 10, 1)).unwrap().equal);
    }

    #[test]
    fn constant_costate_propagates_constants() {
        let (w, x) = (set("W", &["s", "t"]), set("X", &["a", "b"]));
        let g = lift(&seeded_play(15, &w, &x, &x));
        let k = Payoff::from_ints(&[4, -1]);
        let res = close(&g, &const_state(&x, 1), &const_costate(&PayFn::constant(&x, &k))).unwrap();
        for v in res.tabulate().unwrap() {
            assert_eq!(v, Value::PayFn(PayFn::constant(&w, &k)));
        }
    }

    #[test]
    fn close_agrees_with_body_evaluation() {
        let w = set("W", &["s", "t", "u", "v"]);
        let x = set("X", &["a", "b"]);
        let y = set("Y", &["y1", "y2", "y3"]);
        let play = seeded_play(16, &w, &x, &y);
        let g = lift(&play);
        let u = PayFn::from_fn(&y, |i| Payoff::from_ints(&[i as i64, 3 - i as i64])).unwrap();
        let res = close(&g, &const_state(&x, 1), &const_costate(&u)).unwrap();
        for o in 0..w.len() {
            let (dw, _) = g.backward(o, 1, &Value::PayFn(u.clone())).unwrap();
            assert_eq!(res.at(o).unwrap(), dw);
        }
        assert!(res.at(w.len()).is_err());
        assert_eq!(res.at_label("t").unwrap(), res.at(1).unwrap());
    }

    #[test]
    fn close_checks_boundaries() {
        let (w, x) = (set("W", &["s"]), set("X", &["a", "b"]));
        let other = set("O", &["o"]);
        let g = lift(&seeded_play(17, &w, &x, &x));
        let u = PayFn::constant(&x, &Payoff::from_ints(&[0]));
        assert!(close(&g, &const_state(&other, 0), &const_costate(&u)).is_err());
        let u2 = PayFn::constant(&other, &Payoff::from_ints(&[0]));
        assert!(close(&g, &const_state(&x, 0), &const_costate(&u2)).is_err());
    }
}
