//! Closed games and their equilibria.
//!
//! Closing a game with an initial state and a payoff costate leaves a
//! set-valued map `G: Ω → 𝒫Ω`. A profile is a Nash equilibrium exactly when
//! `ω ∈ G(ω)`, which [`nash_fixpoints`] enumerates. [`oracle_nash`] checks the
//! same thing the classical way, by scanning unilateral deviations.

use rayon::prelude::*;
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diegetic::{
    assemble_players, costate_const, costate_regret, lift_arena, para_lift, state, ArenaSpec,
    PlayerSpec,
};
use crate::error::{Error, Result};
use crate::fincore::{product, product_n, product_size, same_set, FinSet, Set, Table, UNIT_LABEL};
use crate::lens::{Lens, PayFn, Payoff, Subset};
use crate::para::{close, reparameterise, ParaLens, ResidualMap};

/// Largest profile product analyzed by default.
pub const DEFAULT_MAX_PROFILES: u128 = 1_000_000;

/// Which payoff costate closes the outcome boundary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostateKind {
    #[default]
    Const,
    Regret,
}

impl CostateKind {
    pub fn build(self, u: &PayFn) -> Result<Lens> {
        match self {
            CostateKind::Const => costate_const(u),
            CostateKind::Regret => costate_regret(u),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CostateKind::Const => "const",
            CostateKind::Regret => "regret",
        }
    }
}

impl std::str::FromStr for CostateKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "const" => Ok(CostateKind::Const),
            "regret" => Ok(CostateKind::Regret),
            other => Err(format!("unknown costate {other:?}, expected const or regret")),
        }
    }
}

/// The set-valued self-map of a closed game, tabulated over all profiles.
#[derive(Clone, Debug)]
pub struct ClosedGame {
    profiles: Set,
    step: Vec<Subset>,
}

impl ClosedGame {
    pub fn new(profiles: &Set, step: Vec<Subset>) -> Result<ClosedGame> {
        if step.len() != profiles.len() {
            return Err(Error::Structure(format!(
                "step table has {} entries for {} profiles",
                step.len(),
                profiles.len()
            )));
        }
        if let Some(bad) = step.iter().find(|s| !same_set(s.of(), profiles)) {
            return Err(Error::Boundary {
                expected: format!("subsets of {}", profiles.name()),
                found: format!("subset of {}", bad.of().name()),
            });
        }
        Ok(ClosedGame {
            profiles: profiles.clone(),
            step,
        })
    }

    pub fn profiles(&self) -> &Set {
        &self.profiles
    }

    pub fn step(&self, omega: usize) -> &Subset {
        &self.step[omega]
    }

    pub fn steps(&self) -> &[Subset] {
        &self.step
    }
}

fn check_cap(count: u128, cap: u128) -> Result<()> {
    if count > cap {
        Err(Error::CapExceeded { count, cap })
    } else {
        Ok(())
    }
}

/// Attaches `players` to `arena` and closes it with `state(x̄)` and `costate`,
/// leaving the map from profiles to their step sets.
pub fn close_system(arena: &ParaLens, players: &Lens, x_bar: &str, costate: &Lens) -> Result<ResidualMap> {
    let game = reparameterise(arena, players)?;
    close(&game, &state(x_bar, &arena.dom().pos)?, costate)
}

/// [`close_system`], tabulated on every profile.
pub fn close_game(
    arena: &ParaLens,
    players: &Lens,
    x_bar: &str,
    costate: &Lens,
    cap: u128,
) -> Result<ClosedGame> {
    let profiles = players.dom().pos.clone();
    if profiles.is_empty() {
        return Err(Error::Empty(profiles.name().to_string()));
    }
    check_cap(profiles.len() as u128, cap)?;
    let residual = close_system(arena, players, x_bar, costate)?;
    let step = residual
        .tabulate()?
        .into_iter()
        .map(|v| Ok(v.as_subset()?.clone()))
        .collect::<Result<Vec<_>>>()?;
    ClosedGame::new(&profiles, step)
}

/// The arena with no dynamics: `X = 1`, `Y = Ω` and play the projection onto `Ω`.
pub fn trivial_arena(profiles: &Set) -> Result<ParaLens> {
    let unit = FinSet::unit();
    let play = Table::proj1(&product(profiles, &unit))?.with_name("π_Ω");
    para_lift(&play, profiles, &unit)
}

/// A strategic game `(N, Ω, u)`.
#[derive(Clone, Debug)]
pub struct NormalFormGame {
    players: Vec<PlayerSpec>,
    profiles: Set,
    payoff: PayFn,
}

impl NormalFormGame {
    /// Checks that `payoff` is defined on the product of the players'
    /// strategy sets and that its vectors cover every player's coordinate.
    pub fn new(players: Vec<PlayerSpec>, payoff: PayFn) -> Result<NormalFormGame> {
        if players.is_empty() {
            return Err(Error::Structure("a game needs at least one player".into()));
        }
        let sets: Vec<Set> = players.iter().map(|p| p.strategies.clone()).collect();
        let profiles = product_n(&sets)?;
        if !same_set(payoff.dom(), &profiles) {
            return Err(Error::Boundary {
                expected: format!("payoff on {}", profiles.name()),
                found: format!("payoff on {}", payoff.dom().name()),
            });
        }
        if let Some(dim) = payoff.dim() {
            if let Some(p) = players.iter().find(|p| p.payoff_coordinate >= dim) {
                return Err(Error::Dimension(format!(
                    "player {} reads coordinate {} of {dim}-dimensional payoffs",
                    p.name, p.payoff_coordinate
                )));
            }
        }
        Ok(NormalFormGame {
            players,
            profiles,
            payoff,
        })
    }

    pub fn players(&self) -> &[PlayerSpec] {
        &self.players
    }

    pub fn profiles(&self) -> &Set {
        &self.profiles
    }

    pub fn payoff(&self) -> &PayFn {
        &self.payoff
    }

    pub fn payoff_dim(&self) -> usize {
        self.payoff.dim().unwrap_or(self.players.len())
    }
}

/// The closed system of a normal-form game over the trivial arena.
pub fn normal_form_system(game: &NormalFormGame, costate: CostateKind) -> Result<ResidualMap> {
    let arena = trivial_arena(&game.profiles)?;
    let players = assemble_players(&game.players, game.payoff_dim())?;
    close_system(&arena, &players, UNIT_LABEL, &costate.build(&game.payoff)?)
}

/// Closes a normal-form game over the trivial arena.
pub fn close_normal_form(game: &NormalFormGame, costate: CostateKind, cap: u128) -> Result<ClosedGame> {
    let sizes: Vec<Set> = game.players.iter().map(|p| p.strategies.clone()).collect();
    check_cap(product_size(&sizes), cap)?;
    let arena = trivial_arena(&game.profiles)?;
    let players = assemble_players(&game.players, game.payoff_dim())?;
    let costate = costate.build(&game.payoff)?;
    close_game(&arena, &players, UNIT_LABEL, &costate, cap)
}

/// A random game with player `i` reading payoff coordinate `i`. Players are
/// named `p0, p1, …` and strategies `s0, s1, …`.
pub fn random_normal_form<R: Rng>(
    rng: &mut R,
    players: RangeInclusive<usize>,
    strategies: RangeInclusive<usize>,
    payoffs: RangeInclusive<i64>,
) -> NormalFormGame {
    let n = rng.gen_range(players);
    let specs: Vec<PlayerSpec> = (0..n)
        .map(|i| {
            let k = rng.gen_range(strategies.clone());
            let set = FinSet::new(format!("p{i}"), (0..k).map(|j| format!("s{j}"))).expect("distinct labels");
            PlayerSpec::new(format!("p{i}"), &set, i)
        })
        .collect();
    let sets: Vec<Set> = specs.iter().map(|p| p.strategies.clone()).collect();
    let omega = product_n(&sets).expect("at least one player");
    let values = (0..omega.len())
        .map(|_| Payoff::from_ints(&(0..n).map(|_| rng.gen_range(payoffs.clone())).collect::<Vec<_>>()))
        .collect();
    let u = PayFn::new(&omega, values).expect("uniform dimension");
    NormalFormGame::new(specs, u).expect("well-formed game")
}

/// A staged game: an arena, its players (one per wiring class) and a payoff
/// on outcomes.
#[derive(Clone, Debug)]
pub struct ArenaGame {
    pub spec: ArenaSpec,
    pub players: Vec<PlayerSpec>,
    pub initial_state: String,
    pub outcome_payoff: PayFn,
}

impl ArenaGame {
    pub fn new(
        spec: ArenaSpec,
        players: Vec<PlayerSpec>,
        initial_state: impl Into<String>,
        outcome_payoff: PayFn,
    ) -> Result<ArenaGame> {
        let initial_state = initial_state.into();
        spec.initial_states().require(&initial_state)?;
        if !same_set(outcome_payoff.dom(), spec.outcomes()) {
            return Err(Error::Boundary {
                expected: format!("payoff on outcomes {}", spec.outcomes().name()),
                found: format!("payoff on {}", outcome_payoff.dom().name()),
            });
        }
        let classes = spec.class_sets();
        if classes.len() != players.len() {
            return Err(Error::Semantic(format!(
                "{} wiring classes for {} players",
                classes.len(),
                players.len()
            )));
        }
        for (p, c) in players.iter().zip(&classes) {
            if !same_set(&p.strategies, c) {
                return Err(Error::Boundary {
                    expected: format!("strategies {} for player {}", c.name(), p.name),
                    found: p.strategies.name().to_string(),
                });
            }
        }
        Ok(ArenaGame {
            spec,
            players,
            initial_state,
            outcome_payoff,
        })
    }

    pub fn payoff_dim(&self) -> usize {
        self.outcome_payoff.dim().unwrap_or(self.players.len())
    }

    pub fn arena(&self) -> Result<ParaLens> {
        lift_arena(&self.spec)
    }

    pub fn player_system(&self) -> Result<Lens> {
        assemble_players(&self.players, self.payoff_dim())
    }

    pub fn system(&self, costate: CostateKind) -> Result<ResidualMap> {
        close_system(
            &self.arena()?,
            &self.player_system()?,
            &self.initial_state,
            &costate.build(&self.outcome_payoff)?,
        )
    }

    pub fn close(&self, costate: CostateKind, cap: u128) -> Result<ClosedGame> {
        let sets: Vec<Set> = self.players.iter().map(|p| p.strategies.clone()).collect();
        check_cap(product_size(&sets), cap)?;
        let arena = self.arena()?;
        let players = self.player_system()?;
        close_game(&arena, &players, &self.initial_state, &costate.build(&self.outcome_payoff)?, cap)
    }

    /// The strategic game induced by following each profile's play from the
    /// initial state and scoring the outcome.
    pub fn normal_form(&self) -> Result<NormalFormGame> {
        let arena = self.arena()?;
        let x = arena.dom().pos.require(&self.initial_state)?;
        let omega = arena.param().pos.clone();
        let values = (0..omega.len())
            .map(|w| Ok(self.outcome_payoff.at(arena.forward(w, x)?).clone()))
            .collect::<Result<Vec<_>>>()?;
        NormalFormGame::new(self.players.clone(), PayFn::new(&omega, values)?)
    }
}

/// Profiles `ω` with `ω ∈ G(ω)`, in profile order.
pub fn nash_fixpoints(g: &ClosedGame) -> Subset {
    let members = (0..g.profiles.len())
        .into_par_iter()
        .filter(|&w| g.step[w].contains(w))
        .collect();
    Subset::new(&g.profiles, members).expect("profile indices")
}

/// Classical brute force: profiles where no player gains by deviating alone.
pub fn oracle_nash(game: &NormalFormGame) -> Subset {
    let radices: Vec<usize> = game.players.iter().map(|p| p.strategies.len()).collect();
    let decode = |mut w: usize| {
        let mut digits = vec![0; radices.len()];
        for k in (0..radices.len()).rev() {
            digits[k] = w % radices[k];
            w /= radices[k];
        }
        digits
    };
    let encode = |digits: &[usize]| digits.iter().zip(&radices).fold(0, |acc, (&d, &r)| acc * r + d);
    let u = &game.payoff;
    let members = (0..game.profiles.len())
        .into_par_iter()
        .filter(|&w| {
            let digits = decode(w);
            game.players.iter().enumerate().all(|(i, p)| {
                let c = p.payoff_coordinate;
                let here = &u.at(w).coords()[c];
                (0..radices[i]).all(|alt| {
                    let mut d = digits.clone();
                    d[i] = alt;
                    u.at(encode(&d)).coords()[c] <= *here
                })
            })
        })
        .collect();
    Subset::new(&game.profiles, members).expect("profile indices")
}

/// Deterministic choice of one profile from a step set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// First in profile order.
    #[default]
    First,
    /// Last in profile order.
    Last,
}

impl TieBreak {
    pub fn choose(self, s: &Subset) -> Option<usize> {
        match self {
            TieBreak::First => s.members().first().copied(),
            TieBreak::Last => s.members().last().copied(),
        }
    }
}

/// Why a trajectory stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terminal {
    /// The last profile is a member of its own step set.
    Fixpoint,
    /// The last profile repeats the one at index `start`; the cycle has `period` profiles.
    Cycle { start: usize, period: usize },
    /// The step budget ran out.
    MaxSteps,
    /// The step set was empty.
    DeadEnd,
}

impl Terminal {
    pub fn label(&self) -> &'static str {
        match self {
            Terminal::Fixpoint => "fixpoint",
            Terminal::Cycle { .. } => "cycle",
            Terminal::MaxSteps => "max_steps",
            Terminal::DeadEnd => "dead_end",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    /// Visited profiles, starting with the initial one. A cycle ends with the
    /// repeated profile.
    pub profiles: Vec<usize>,
    pub terminal: Terminal,
}

/// Iterates `ω ↦ choose(G(ω))` from `start` for at most `max_steps` steps.
pub fn best_response_iterate(
    g: &ClosedGame,
    start: usize,
    max_steps: usize,
    chooser: TieBreak,
) -> Result<Trajectory> {
    if start >= g.profiles.len() {
        return Err(Error::Element {
            elem: format!("#{start}"),
            set: g.profiles.name().to_string(),
        });
    }
    let mut seen = vec![None; g.profiles.len()];
    let mut profiles = vec![start];
    seen[start] = Some(0);
    let mut current = start;
    loop {
        if g.step[current].contains(current) {
            return Ok(Trajectory {
                profiles,
                terminal: Terminal::Fixpoint,
            });
        }
        if profiles.len() > max_steps {
            return Ok(Trajectory {
                profiles,
                terminal: Terminal::MaxSteps,
            });
        }
        let Some(next) = chooser.choose(&g.step[current]) else {
            return Ok(Trajectory {
                profiles,
                terminal: Terminal::DeadEnd,
            });
        };
        profiles.push(next);
        if let Some(k) = seen[next] {
            let period = profiles.len() - 1 - k;
            return Ok(Trajectory {
                profiles,
                terminal: Terminal::Cycle { start: k, period },
            });
        }
        seen[next] = Some(profiles.len() - 1);
        current = next;
    }
}
