//! Game constructors: lifting play functions to arenas, Nashators, costates,
//! selection lenses and the assembled player system.
//!
//! Payoffs live in `Qᴺ`. Backward passes carry whole payoff functions, so a
//! player receiving `u_Ω: Ω → Qᴺ` can evaluate every deviation of their own
//! strategy with everyone else's held fixed.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fincore::{product, product_n, same_set, FinSet, Set, Table};
use crate::lens::{
    identity_lens, lens_chain, lens_compose, lens_tensor, Kernel, Lens, LensObj, PayFn, ValueSpace,
};
use crate::para::{reparameterise, ParaLens};

/// `P*f = (f, u ↦ u ∘ f)`.
pub fn p_star(f: &Table) -> Result<Lens> {
    Lens::reshaping(
        format!("P*({})", f.name()),
        LensObj::payoffs(f.dom()),
        LensObj::payoffs(f.cod()),
        f.clone(),
        &Kernel::precompose(f),
    )
}

/// `(1, 1) ⇄ (1, P)`, discarding the payoff vector.
pub fn unitor() -> Result<Lens> {
    let unit = FinSet::unit();
    Lens::reshaping(
        "η",
        LensObj::unit(),
        LensObj::new(&unit, ValueSpace::Pay),
        Table::identity(&unit),
        &Kernel::discard(ValueSpace::Pay),
    )
}

/// Binary Nashator `(X × Y, P^X × P^Y) ⇄ (X × Y, P^(X × Y))`, sending
/// `((x̄, ȳ), u)` to `(u(-, ȳ), u(x̄, -))`.
pub fn nashator(x: &Set, y: &Set) -> Result<Lens> {
    let dom = LensObj::payoffs(x).tensor(&LensObj::payoffs(y));
    let cod = LensObj::payoffs(&dom.pos);
    let input = ValueSpace::pair(ValueSpace::FinOf(dom.pos.clone()), cod.dir.clone());
    let pos = Kernel::proj1(&input)?;
    let u = Kernel::proj2(&input)?;
    let x_bar = pos.then(&Kernel::proj1(pos.cod())?)?;
    let y_bar = pos.then(&Kernel::proj2(pos.cod())?)?;
    let u_x = Kernel::pair(&u, &y_bar)?.then(&Kernel::partial_right(&dom.pos)?)?;
    let u_y = Kernel::pair(&u, &x_bar)?.then(&Kernel::partial_left(&dom.pos)?)?;
    let fwd = Table::identity(&dom.pos);
    Lens::new(
        format!("n[{},{}]", x.name(), y.name()),
        dom,
        cod,
        fwd,
        Kernel::pair(&u_x, &u_y)?,
    )
}

/// N-ary Nashator over `Ω₁ × (Ω₂ × …)`, folded from the right:
/// `n(Ω₁, rest) = (id ⊗ n(rest)) ; n(Ω₁, ∏rest)`.
pub fn nashator_n(sets: &[Set]) -> Result<Lens> {
    match sets {
        [] => Err(Error::Structure("Nashator of an empty list of sets".into())),
        [only] => Ok(identity_lens(&LensObj::payoffs(only))),
        [first, rest @ ..] => {
            let inner = nashator_n(rest)?;
            let split = lens_tensor(&identity_lens(&LensObj::payoffs(first)), &inner)?;
            let top = nashator(first, &product_n(rest)?)?;
            Ok(lens_compose(&split, &top)?.with_name(format!("n[{}]", names(sets))))
        }
    }
}

fn names(sets: &[Set]) -> String {
    sets.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")
}

/// `P*(Δ_Ω)`, used to clone a strategy into several parameter slots.
pub fn copy(omega: &Set) -> Result<Lens> {
    p_star(&Table::diagonal(omega))
}

/// Lifts `play: Ω × X → Y` to the parametric lens
/// `(Ω, P^Ω) : (X, P^X) ⇄ (Y, P^Y)` with backward pass
/// `(ω̄, x̄, u) ↦ (λω. u(play(ω, x̄)), λx. u(play(ω̄, x)))`.
pub fn para_lift(play: &Table, omega: &Set, x: &Set) -> Result<ParaLens> {
    if omega.is_empty() {
        return Err(Error::Empty(omega.name().to_string()));
    }
    let param = LensObj::payoffs(omega);
    let dom = LensObj::payoffs(x);
    let body_dom = param.tensor(&dom);
    if !same_set(play.dom(), &body_dom.pos) {
        return Err(Error::Boundary {
            expected: format!("play function on {}", body_dom.pos.name()),
            found: format!("{} on {}", play.name(), play.dom().name()),
        });
    }
    let cod = LensObj::payoffs(play.cod());
    let input = ValueSpace::pair(ValueSpace::FinOf(body_dom.pos.clone()), cod.dir.clone());
    let pos = Kernel::proj1(&input)?;
    let u_play = Kernel::proj2(&input)?.then(&Kernel::precompose(play))?;
    let omega_bar = pos.then(&Kernel::proj1(pos.cod())?)?;
    let x_bar = pos.then(&Kernel::proj2(pos.cod())?)?;
    let u_omega = Kernel::pair(&u_play, &x_bar)?.then(&Kernel::partial_right(&body_dom.pos)?)?;
    let u_x = Kernel::pair(&u_play, &omega_bar)?.then(&Kernel::partial_left(&body_dom.pos)?)?;
    let body = Lens::new(
        format!("lift({})", play.name()),
        body_dom,
        cod,
        play.clone(),
        Kernel::pair(&u_omega, &u_x)?,
    )?;
    ParaLens::new(body.name().to_string(), param, dom, body)
}

/// Joint play of two stages, `(ξ, ω), x ↦ h(ξ, g(ω, x))` over `(Ξ × Ω) × X`.
pub fn compose_plays(g: &Table, h: &Table) -> Result<Table> {
    let (omega, x) = g.dom().require_factors()?;
    let (xi, y) = h.dom().require_factors()?;
    if !same_set(g.cod(), y) {
        return Err(Error::Composition {
            left: g.name().to_string(),
            right: h.name().to_string(),
            detail: format!("{} produces {} but {} reads {}", g.name(), g.cod().name(), h.name(), y.name()),
        });
    }
    let joint = product(xi, omega);
    let dom = product(&joint, x);
    let (nw, nx, ny) = (omega.len(), x.len(), y.len());
    Table::from_fn(format!("{};{}", g.name(), h.name()), &dom, h.cod(), |p| {
        let (j, i) = (p / nx, p % nx);
        let (k, o) = (j / nw, j % nw);
        h.apply(k * ny + g.apply(o * nx + i))
    })
}

/// One stage `play: Ω_k × X_k → Y_k` with a named parameter factor.
#[derive(Clone, Debug)]
pub struct Stage {
    pub factor: String,
    pub play: Table,
}

impl Stage {
    pub fn new(factor: impl Into<String>, play: Table) -> Result<Stage> {
        play.dom().require_factors()?;
        Ok(Stage {
            factor: factor.into(),
            play,
        })
    }

    pub fn params(&self) -> &Set {
        self.play.dom().factors().expect("checked").0
    }

    pub fn input(&self) -> &Set {
        self.play.dom().factors().expect("checked").1
    }

    pub fn output(&self) -> &Set {
        self.play.cod()
    }
}

/// A staged play function with a wiring of parameter factors.
///
/// Each wiring class lists factors that receive the same strategy; the class
/// order is the order of the resulting parameter. An empty wiring puts every
/// factor in its own class, later stages first.
#[derive(Clone, Debug)]
pub struct ArenaSpec {
    stages: Vec<Stage>,
    wiring: Vec<Vec<String>>,
}

impl ArenaSpec {
    pub fn new(stages: Vec<Stage>, wiring: Vec<Vec<String>>) -> Result<ArenaSpec> {
        if stages.is_empty() {
            return Err(Error::Structure("arena without stages".into()));
        }
        for pair in stages.windows(2) {
            if !same_set(pair[0].output(), pair[1].input()) {
                return Err(Error::Composition {
                    left: pair[0].factor.clone(),
                    right: pair[1].factor.clone(),
                    detail: format!(
                        "stage outputs {} but the next stage reads {}",
                        pair[0].output().name(),
                        pair[1].input().name()
                    ),
                });
            }
        }
        let mut stage_of = HashMap::new();
        for (k, s) in stages.iter().enumerate() {
            if stage_of.insert(s.factor.clone(), k).is_some() {
                return Err(Error::Structure(format!("parameter factor {:?} declared twice", s.factor)));
            }
        }
        let wiring = if wiring.is_empty() {
            stages.iter().rev().map(|s| vec![s.factor.clone()]).collect()
        } else {
            wiring
        };
        let mut seen = HashMap::new();
        for (c, class) in wiring.iter().enumerate() {
            let first = class
                .first()
                .ok_or_else(|| Error::Structure(format!("wiring class {c} is empty")))?;
            for f in class {
                let k = *stage_of
                    .get(f)
                    .ok_or_else(|| Error::Structure(format!("wiring names unknown factor {f:?}")))?;
                if seen.insert(f.clone(), c).is_some() {
                    return Err(Error::Structure(format!("factor {f:?} appears in two wiring classes")));
                }
                let lead = stages[stage_of[first]].params();
                if !same_set(stages[k].params(), lead) {
                    return Err(Error::Structure(format!(
                        "wiring class {c} mixes strategy sets {} and {}",
                        lead.name(),
                        stages[k].params().name()
                    )));
                }
            }
        }
        if let Some(s) = stages.iter().find(|s| !seen.contains_key(&s.factor)) {
            return Err(Error::Structure(format!("factor {:?} is missing from the wiring", s.factor)));
        }
        Ok(ArenaSpec { stages, wiring })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn wiring(&self) -> &[Vec<String>] {
        &self.wiring
    }

    pub fn initial_states(&self) -> &Set {
        self.stages[0].input()
    }

    pub fn outcomes(&self) -> &Set {
        self.stages[self.stages.len() - 1].output()
    }

    fn stage_index(&self, factor: &str) -> usize {
        self.stages.iter().position(|s| s.factor == factor).expect("validated")
    }

    /// Strategy set of each wiring class, in class order.
    pub fn class_sets(&self) -> Vec<Set> {
        self.wiring
            .iter()
            .map(|class| self.stages[self.stage_index(&class[0])].params().clone())
            .collect()
    }
}

/// Builds the arena: one monolithic lift of the staged play function, with
/// factors ordered later stages first, reparameterised along `P*(δ)` where
/// `δ` sends one strategy per wiring class to every factor of that class.
/// The result has parameter `(∏ classes, P^(∏ classes))`.
pub fn lift_arena(spec: &ArenaSpec) -> Result<ParaLens> {
    let stages = spec.stages();
    let k = stages.len();
    let factor_sets: Vec<Set> = stages.iter().rev().map(|s| s.params().clone()).collect();
    let factors = product_n(&factor_sets)?;
    let x = spec.initial_states();
    let dom = product(&factors, x);
    let nx = x.len();
    let play = Table::from_fn("play", &dom, spec.outcomes(), |p| {
        let comps = factors.components(k, p / nx).expect("product of stage factors");
        stages.iter().enumerate().fold(p % nx, |state, (s, stage)| {
            let at = stage.play.dom().pair_index(comps[k - 1 - s], state);
            stage.play.apply(at.expect("stage domains are products"))
        })
    })?;
    let mono = para_lift(&play, &factors, x)?;

    let classes = product_n(&spec.class_sets())?;
    let class_of: Vec<usize> = stages
        .iter()
        .rev()
        .map(|s| spec.wiring().iter().position(|c| c.contains(&s.factor)).expect("validated"))
        .collect();
    let n = spec.wiring().len();
    let delta = Table::from_fn("δ", &classes, &factors, |c| {
        let chosen = classes.components(n, c).expect("product of classes");
        let picked: Vec<usize> = class_of.iter().map(|&j| chosen[j]).collect();
        factors.encode(&picked).expect("product of stage factors")
    })?;
    let arena = if n == k && class_of.iter().enumerate().all(|(i, &j)| i == j) {
        mono
    } else {
        reparameterise(&mono, &p_star(&delta)?)?
    };
    Ok(arena.with_name("arena"))
}

/// Costate `(Z, P^Z) ⇄ (1, 1)` returning `u` whatever the outcome.
pub fn costate_const(u: &PayFn) -> Result<Lens> {
    let dom = LensObj::payoffs(u.dom());
    let unit = LensObj::unit();
    let fwd = Table::constant(&dom.pos, &unit.pos, 0)?;
    let input = ValueSpace::pair(ValueSpace::FinOf(dom.pos.clone()), ValueSpace::Unit);
    Lens::new("const u", dom, unit, fwd, Kernel::const_idfn(input, u))
}

/// Regret costate: at outcome `z̄` returns `λz. u(z) − u(z̄)`.
pub fn costate_regret(u: &PayFn) -> Result<Lens> {
    let z = u.dom();
    let dom = LensObj::payoffs(z);
    let unit = LensObj::unit();
    let fwd = Table::constant(&dom.pos, &unit.pos, 0)?;
    let input = ValueSpace::pair(ValueSpace::FinOf(dom.pos.clone()), ValueSpace::Unit);
    let bwd = Kernel::pair(
        &Kernel::const_pay(input.clone(), u.clone()),
        &Kernel::proj1(&input)?,
    )?
    .then(&Kernel::subtract_at(z))?;
    Lens::new("Δu", dom, unit, fwd, bwd)
}

/// Initial state `(1, 1) ⇄ (X, P^X)` at `x_bar`.
pub fn state(x_bar: &str, x: &Set) -> Result<Lens> {
    let at = x.require(x_bar)?;
    let unit = LensObj::unit();
    let cod = LensObj::payoffs(x);
    let fwd = Table::constant(&unit.pos, x, at)?;
    let input = ValueSpace::pair(ValueSpace::FinOf(unit.pos.clone()), cod.dir.clone());
    Lens::new(format!("state[{x_bar}]"), unit, cod, fwd, Kernel::discard(input))
}

/// A player: a strategy set and the payoff coordinate they maximize.
#[derive(Clone, Debug, Serialize)]
pub struct PlayerSpec {
    pub name: String,
    pub strategies: Set,
    pub payoff_coordinate: usize,
}

impl PlayerSpec {
    pub fn new(name: impl Into<String>, strategies: &Set, payoff_coordinate: usize) -> PlayerSpec {
        PlayerSpec {
            name: name.into(),
            strategies: strategies.clone(),
            payoff_coordinate,
        }
    }
}

/// How a player turns a payoff function into a set of acceptable strategies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SelectionRule {
    /// Maximizers of the player's own payoff coordinate.
    #[default]
    Argmax,
}

/// Selection lens `(Ω_i, 𝒫Ω_i) ⇄ (Ω_i, P^Ω_i)` for a rule. The current strategy
/// is ignored.
pub fn selection(p: &PlayerSpec, rule: SelectionRule) -> Result<Lens> {
    if p.strategies.is_empty() {
        return Err(Error::Empty(p.strategies.name().to_string()));
    }
    let dir_back = match rule {
        SelectionRule::Argmax => Kernel::argmax(&p.strategies, p.payoff_coordinate),
    };
    Lens::reshaping(
        format!("sel[{}]", p.name),
        LensObj::subsets(&p.strategies),
        LensObj::payoffs(&p.strategies),
        Table::identity(&p.strategies),
        &dir_back,
    )
}

pub fn selection_argmax(p: &PlayerSpec) -> Result<Lens> {
    selection(p, SelectionRule::Argmax)
}

/// `(Ω, 𝒫Ω) ⇄ (Ω, 𝒫Ω₁ × (𝒫Ω₂ × …))`, sending `(S₁, …, S_N)` to `S₁ × ⋯ × S_N`.
pub fn subsets_product(sets: &[Set]) -> Result<Lens> {
    let omega = product_n(sets)?;
    let dirs = sets.iter().map(|s| ValueSpace::SubsetsOf(s.clone())).collect();
    let cod = LensObj::new(&omega, ValueSpace::pair_n(dirs)?);
    Lens::reshaping(
        format!("∏[{}]", names(sets)),
        LensObj::subsets(&omega),
        cod,
        Table::identity(&omega),
        &nested_subset_product(sets)?,
    )
}

fn nested_subset_product(sets: &[Set]) -> Result<Kernel> {
    match sets {
        [] => Err(Error::Structure("product of an empty list of sets".into())),
        [only] => Ok(Kernel::id(ValueSpace::SubsetsOf(only.clone()))),
        [first, rest @ ..] => {
            let inner = nested_subset_product(rest)?;
            let dom = ValueSpace::pair(ValueSpace::SubsetsOf(first.clone()), inner.dom().clone());
            let head = Kernel::proj1(&dom)?;
            let tail = Kernel::proj2(&dom)?.then(&inner)?;
            let prod = product(first, &product_n(rest)?);
            Kernel::pair(&head, &tail)?.then(&Kernel::subset_product(&prod)?)
        }
    }
}

/// The player system `∏ ; (⊗ sel_i) ; n_{Ω₁,…,Ω_N}`, a lens
/// `(Ω, 𝒫Ω) ⇄ (Ω, P^Ω)` whose backward pass maps a joint payoff function to
/// the product of each player's best unilateral deviations.
pub fn assemble_players(players: &[PlayerSpec], payoff_dim: usize) -> Result<Lens> {
    if players.is_empty() {
        return Err(Error::Structure("a game needs at least one player".into()));
    }
    let mut owner: HashMap<usize, &str> = HashMap::new();
    for p in players {
        if p.payoff_coordinate >= payoff_dim {
            return Err(Error::Dimension(format!(
                "player {} reads coordinate {} of {}-dimensional payoffs",
                p.name, p.payoff_coordinate, payoff_dim
            )));
        }
        if let Some(other) = owner.insert(p.payoff_coordinate, &p.name) {
            return Err(Error::Semantic(format!(
                "players {other} and {} both read payoff coordinate {}",
                p.name, p.payoff_coordinate
            )));
        }
    }
    let sets: Vec<Set> = players.iter().map(|p| p.strategies.clone()).collect();
    let sels = players.iter().map(selection_argmax).collect::<Result<Vec<_>>>()?;
    let parallel = sels
        .iter()
        .rev()
        .skip(1)
        .try_fold(sels[sels.len() - 1].clone(), |acc, s| lens_tensor(s, &acc))?;
    let prod = subsets_product(&sets)?;
    let nash = nashator_n(&sets)?;
    Ok(lens_chain(&[&prod, &parallel, &nash])?.with_name("players"))
}
