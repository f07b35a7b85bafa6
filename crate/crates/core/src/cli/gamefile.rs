//! Game files.
//!
//! A game file is a JSON document describing players and either a strategic
//! payoff table or a staged arena. Profile keys join one strategy label per
//! player with a delimiter (default `|`); a literal delimiter or backslash
//! inside a label is written with a backslash in front.
//!
//! [`GameFile::to_canonical_json`] writes maps in enumeration order, so a
//! canonical file parses and serializes back to the same bytes.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    close_normal_form, normal_form_system, ArenaGame, ClosedGame, CostateKind, NormalFormGame,
};
use crate::diegetic::{assemble_players, ArenaSpec, PlayerSpec, Stage};
use crate::error::{Error, Result};
use crate::fincore::{product, product_n, FinSet, Set, Table};
use crate::json::{Entries, OrderedMap};
use crate::lens::{PayFn, Payoff};
use crate::para::ResidualMap;

pub const SUPPORTED_VERSION: u32 = 1;
pub const DEFAULT_DELIMITER: char = '|';

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    version: u32,
    payoff_dim: usize,
    #[serde(default)]
    delimiter: Option<String>,
    players: Vec<RawPlayer>,
    game: RawGame,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlayer {
    name: String,
    strategies: Vec<String>,
    coordinate: usize,
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum Kind {
    NormalForm,
    Arena,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    kind: Kind,
    #[serde(default)]
    costate: Option<CostateKind>,
    #[serde(default)]
    payoffs: Option<Entries<Payoff>>,
    #[serde(default)]
    stages: Option<Vec<RawStage>>,
    #[serde(default)]
    wiring: Option<Vec<Vec<String>>>,
    #[serde(default)]
    initial_state: Option<String>,
    #[serde(default)]
    outcome_payoff: Option<Entries<Payoff>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage {
    param_factor: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    play: Entries<String>,
}

/// The game described by a file.
#[derive(Clone, Debug)]
pub enum Game {
    NormalForm(NormalFormGame),
    Arena(ArenaGame),
}

/// A validated game file with every reference resolved.
#[derive(Clone, Debug)]
pub struct GameFile {
    pub version: u32,
    pub payoff_dim: usize,
    pub delimiter: char,
    /// Costate named in the file, if any.
    pub costate: Option<CostateKind>,
    pub players: Vec<PlayerSpec>,
    pub game: Game,
    profiles: Set,
}

/// Reads and validates a game file from disk.
pub fn load_game(path: &Path) -> Result<GameFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_game(&bytes)
}

/// Parses and validates a game file.
pub fn parse_game(bytes: &[u8]) -> Result<GameFile> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let raw: RawFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let path = if path == "." || path == "?" { "$".to_string() } else { path };
        Error::schema(path, inner.to_string())
    })?;
    de.end().map_err(|e| Error::schema("$", e.to_string()))?;
    build(raw)
}

/// Splits a profile key into labels.
pub fn split_key(key: &str, delimiter: char) -> Result<Vec<String>, String> {
    let mut parts = vec![String::new()];
    let mut chars = key.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some(next) => parts.last_mut().expect("nonempty").push(next),
                None => return Err(format!("key {key:?} ends with a lone backslash")),
            }
        } else if c == delimiter {
            parts.push(String::new());
        } else {
            parts.last_mut().expect("nonempty").push(c);
        }
    }
    Ok(parts)
}

/// Joins labels into a profile key, escaping the delimiter and backslashes.
pub fn join_key<S: AsRef<str>>(labels: &[S], delimiter: char) -> String {
    let mut out = String::new();
    for (i, label) in labels.iter().enumerate() {
        if i > 0 {
            out.push(delimiter);
        }
        for c in label.as_ref().chars() {
            if c == '\\' || c == delimiter {
                out.push('\\');
            }
            out.push(c);
        }
    }
    out
}

fn require<T>(value: Option<T>, path: &str, kind: &str) -> Result<T> {
    value.ok_or_else(|| Error::schema(path, format!("required when kind is {kind}")))
}

fn forbid<T>(value: &Option<T>, path: &str, kind: &str) -> Result<()> {
    match value {
        Some(_) => Err(Error::schema(path, format!("not allowed when kind is {kind}"))),
        None => Ok(()),
    }
}

/// Resolves keys of a table over `∏ sets` into a total assignment. With no
/// delimiter, keys are bare labels of a single set.
fn resolve_table<V>(
    path: &str,
    entries: Entries<V>,
    sets: &[Set],
    delimiter: Option<char>,
    check: impl Fn(&str, &V) -> Result<()>,
) -> Result<Vec<V>> {
    let radices: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let total: usize = radices.iter().product();
    let mut slots: Vec<Option<V>> = (0..total).map(|_| None).collect();
    for (key, value) in entries.0 {
        let at = format!("{path}.{key}");
        let labels = match delimiter {
            None => vec![key.clone()],
            Some(d) => split_key(&key, d).map_err(|e| Error::schema(&at, e))?,
        };
        if labels.len() != sets.len() {
            return Err(Error::schema(
                &at,
                format!("key has {} labels, expected {}", labels.len(), sets.len()),
            ));
        }
        let mut index = 0;
        for (label, set) in labels.iter().zip(sets) {
            let i = set.index_of(label).ok_or_else(|| {
                Error::schema(&at, format!("{label:?} is not one of {:?}", set.elems()))
            })?;
            index = index * set.len() + i;
        }
        check(&at, &value)?;
        if slots[index].replace(value).is_some() {
            return Err(Error::schema(&at, "duplicate entry"));
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| {
                let mut rest = i;
                let mut labels = vec![String::new(); sets.len()];
                for k in (0..sets.len()).rev() {
                    labels[k] = sets[k].label(rest % radices[k]).to_string();
                    rest /= radices[k];
                }
                let key = match delimiter {
                    None => labels.remove(0),
                    Some(d) => join_key(&labels, d),
                };
                Error::schema(path, format!("missing entry for {key:?}"))
            })
        })
        .collect()
}

fn labelled_set(path: &str, name: &str, labels: Vec<String>) -> Result<Set> {
    if labels.is_empty() {
        return Err(Error::schema(path, "must list at least one label"));
    }
    FinSet::new(name, labels).map_err(|e| Error::schema(path, e.to_string()))
}

fn build(raw: RawFile) -> Result<GameFile> {
    if raw.version != SUPPORTED_VERSION {
        return Err(Error::schema(
            "version",
            format!("unsupported version {}, expected {SUPPORTED_VERSION}", raw.version),
        ));
    }
    if raw.payoff_dim == 0 {
        return Err(Error::schema("payoff_dim", "must be at least 1"));
    }
    let delimiter = match raw.delimiter.as_deref() {
        None => DEFAULT_DELIMITER,
        Some(d) => {
            let mut chars = d.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c != '\\' => c,
                _ => return Err(Error::schema("delimiter", "must be a single character other than a backslash")),
            }
        }
    };
    if raw.players.is_empty() {
        return Err(Error::schema("players", "must list at least one player"));
    }
    let mut names = HashSet::new();
    let mut players = Vec::with_capacity(raw.players.len());
    for (i, p) in raw.players.into_iter().enumerate() {
        if !names.insert(p.name.clone()) {
            return Err(Error::schema(format!("players[{i}].name"), format!("duplicate player {:?}", p.name)));
        }
        let set = labelled_set(&format!("players[{i}].strategies"), &p.name, p.strategies)?;
        players.push(PlayerSpec::new(p.name, &set, p.coordinate));
    }
    // Coordinates are checked here so a bad file fails before any analysis.
    assemble_players(&players, raw.payoff_dim)?;
    let sets: Vec<Set> = players.iter().map(|p| p.strategies.clone()).collect();
    let profiles = product_n(&sets)?;
    let dim = raw.payoff_dim;
    let check_dim = |at: &str, v: &Payoff| {
        if v.dim() == dim {
            Ok(())
        } else {
            Err(Error::schema(at, format!("payoff has {} entries, expected {dim}", v.dim())))
        }
    };

    let g = raw.game;
    let (game, costate) = match g.kind {
        Kind::NormalForm => {
            let kind = "normal_form";
            for (v, p) in [
                (g.stages.is_some(), "game.stages"),
                (g.wiring.is_some(), "game.wiring"),
                (g.initial_state.is_some(), "game.initial_state"),
                (g.outcome_payoff.is_some(), "game.outcome_payoff"),
            ] {
                forbid(&v.then_some(()), p, kind)?;
            }
            let payoffs = require(g.payoffs, "game.payoffs", kind)?;
            let values = resolve_table("game.payoffs", payoffs, &sets, Some(delimiter), check_dim)?;
            let u = PayFn::new(&profiles, values)?;
            (Game::NormalForm(NormalFormGame::new(players.clone(), u)?), g.costate)
        }
        Kind::Arena => {
            let kind = "arena";
            forbid(&g.payoffs, "game.payoffs", kind)?;
            let stages = require(g.stages, "game.stages", kind)?;
            let wiring = require(g.wiring, "game.wiring", kind)?;
            let initial_state = require(g.initial_state, "game.initial_state", kind)?;
            let outcome_payoff = require(g.outcome_payoff, "game.outcome_payoff", kind)?;
            if stages.is_empty() {
                return Err(Error::schema("game.stages", "must list at least one stage"));
            }
            if wiring.len() != players.len() {
                return Err(Error::schema(
                    "game.wiring",
                    format!("{} classes for {} players; class i belongs to player i", wiring.len(), players.len()),
                ));
            }
            let declared: HashSet<&str> = stages.iter().map(|s| s.param_factor.as_str()).collect();
            let mut owner: HashMap<String, usize> = HashMap::new();
            for (c, class) in wiring.iter().enumerate() {
                for (j, f) in class.iter().enumerate() {
                    if !declared.contains(f.as_str()) {
                        return Err(Error::schema(format!("game.wiring[{c}][{j}]"), format!("unknown factor {f:?}")));
                    }
                    owner.entry(f.clone()).or_insert(c);
                }
            }
            let mut built = Vec::with_capacity(stages.len());
            for (k, s) in stages.into_iter().enumerate() {
                let at = format!("game.stages[{k}]");
                let class = *owner.get(&s.param_factor).ok_or_else(|| {
                    Error::Semantic(format!("factor {:?} is missing from the wiring", s.param_factor))
                })?;
                let omega = &sets[class];
                let inputs = labelled_set(&format!("{at}.inputs"), &format!("X{k}"), s.inputs)?;
                let outputs = labelled_set(&format!("{at}.outputs"), &format!("X{}", k + 1), s.outputs)?;
                let check_out = |p: &str, y: &String| match outputs.index_of(y) {
                    Some(_) => Ok(()),
                    None => Err(Error::schema(p, format!("{y:?} is not one of {:?}", outputs.elems()))),
                };
                let map = resolve_table(&format!("{at}.play"), s.play, &[omega.clone(), inputs.clone()], Some(delimiter), check_out)?;
                let dom = product(omega, &inputs);
                let play = Table::from_fn(format!("play{k}"), &dom, &outputs, |i| {
                    outputs.index_of(&map[i]).expect("checked")
                })?;
                built.push(Stage::new(s.param_factor, play)?);
            }
            let x0 = built[0].input().clone();
            if x0.index_of(&initial_state).is_none() {
                return Err(Error::schema(
                    "game.initial_state",
                    format!("{initial_state:?} is not one of {:?}", x0.elems()),
                ));
            }
            let z = built[built.len() - 1].output().clone();
            let values = resolve_table("game.outcome_payoff", outcome_payoff, std::slice::from_ref(&z), None, check_dim)?;
            let u = PayFn::new(&z, values)?;
            let spec = ArenaSpec::new(built, wiring)?;
            (Game::Arena(ArenaGame::new(spec, players.clone(), initial_state, u)?), g.costate)
        }
    };
    Ok(GameFile {
        version: raw.version,
        payoff_dim: dim,
        delimiter,
        costate,
        players,
        game,
        profiles,
    })
}

#[derive(Serialize)]
struct CanonPlayer<'a> {
    name: &'a str,
    strategies: &'a [String],
    coordinate: usize,
}

#[derive(Serialize)]
struct CanonStage<'a> {
    param_factor: &'a str,
    inputs: &'a [String],
    outputs: &'a [String],
    play: OrderedMap<String, &'a str>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum CanonGame<'a> {
    NormalForm {
        #[serde(skip_serializing_if = "Option::is_none")]
        costate: Option<CostateKind>,
        payoffs: OrderedMap<String, &'a Payoff>,
    },
    Arena {
        #[serde(skip_serializing_if = "Option::is_none")]
        costate: Option<CostateKind>,
        stages: Vec<CanonStage<'a>>,
        wiring: &'a [Vec<String>],
        initial_state: &'a str,
        outcome_payoff: OrderedMap<&'a str, &'a Payoff>,
    },
}

#[derive(Serialize)]
struct CanonFile<'a> {
    version: u32,
    payoff_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    delimiter: Option<String>,
    players: Vec<CanonPlayer<'a>>,
    game: CanonGame<'a>,
}

impl GameFile {
    /// The product of all strategy sets, in player order.
    pub fn profiles(&self) -> &Set {
        &self.profiles
    }

    pub fn kind(&self) -> &'static str {
        match self.game {
            Game::NormalForm(_) => "normal_form",
            Game::Arena(_) => "arena",
        }
    }

    /// The costate named in the file, or the constant costate.
    pub fn costate(&self) -> CostateKind {
        self.costate.unwrap_or_default()
    }

    /// One strategy label per player.
    pub fn profile_labels(&self, omega: usize) -> Vec<String> {
        let comps = self
            .profiles
            .components(self.players.len(), omega)
            .expect("profile product");
        comps
            .iter()
            .zip(&self.players)
            .map(|(&i, p)| p.strategies.label(i).to_string())
            .collect()
    }

    pub fn profile_key(&self, omega: usize) -> String {
        join_key(&self.profile_labels(omega), self.delimiter)
    }

    /// Index of the profile written as a delimiter-joined key.
    pub fn parse_profile(&self, key: &str) -> Result<usize> {
        let bad = |detail: String| Error::schema("profile", format!("{key:?}: {detail}"));
        let labels = split_key(key, self.delimiter).map_err(bad)?;
        if labels.len() != self.players.len() {
            return Err(bad(format!("expected {} labels", self.players.len())));
        }
        let comps = labels
            .iter()
            .zip(&self.players)
            .map(|(l, p)| {
                p.strategies
                    .index_of(l)
                    .ok_or_else(|| bad(format!("{l:?} is not a strategy of {}", p.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        self.profiles.encode(&comps)
    }

    /// Closes the game and tabulates its step map.
    pub fn close(&self, costate: CostateKind, cap: u128) -> Result<ClosedGame> {
        match &self.game {
            Game::NormalForm(g) => close_normal_form(g, costate, cap),
            Game::Arena(g) => g.close(costate, cap),
        }
    }

    /// The closed system before tabulation.
    pub fn system(&self, costate: CostateKind) -> Result<ResidualMap> {
        match &self.game {
            Game::NormalForm(g) => normal_form_system(g, costate),
            Game::Arena(g) => g.system(costate),
        }
    }

    /// The strategic game, induced from the arena when the file has one.
    pub fn normal_form(&self) -> Result<NormalFormGame> {
        match &self.game {
            Game::NormalForm(g) => Ok(g.clone()),
            Game::Arena(g) => g.normal_form(),
        }
    }

    /// Canonical JSON text, ending with a newline.
    pub fn to_canonical_json(&self) -> String {
        let players = self
            .players
            .iter()
            .map(|p| CanonPlayer {
                name: &p.name,
                strategies: p.strategies.elems(),
                coordinate: p.payoff_coordinate,
            })
            .collect();
        let game = match &self.game {
            Game::NormalForm(g) => CanonGame::NormalForm {
                costate: self.costate,
                payoffs: OrderedMap(
                    (0..self.profiles.len())
                        .map(|w| (self.profile_key(w), g.payoff().at(w)))
                        .collect(),
                ),
            },
            Game::Arena(g) => {
                let stages = g
                    .spec
                    .stages()
                    .iter()
                    .map(|s| CanonStage {
                        param_factor: &s.factor,
                        inputs: s.input().elems(),
                        outputs: s.output().elems(),
                        play: OrderedMap(
                            (0..s.play.dom().len())
                                .map(|i| {
                                    let (w, x) = s.play.dom().split_index(i).expect("product");
                                    let key = join_key(&[s.params().label(w), s.input().label(x)], self.delimiter);
                                    (key, s.output().label(s.play.apply(i)))
                                })
                                .collect(),
                        ),
                    })
                    .collect();
                let z = g.outcome_payoff.dom();
                CanonGame::Arena {
                    costate: self.costate,
                    stages,
                    wiring: g.spec.wiring(),
                    initial_state: &g.initial_state,
                    outcome_payoff: OrderedMap(
                        (0..z.len()).map(|i| (z.label(i), g.outcome_payoff.at(i))).collect(),
                    ),
                }
            }
        };
        let file = CanonFile {
            version: self.version,
            payoff_dim: self.payoff_dim,
            delimiter: (self.delimiter != DEFAULT_DELIMITER).then(|| self.delimiter.to_string()),
            players,
            game,
        };
        let mut out = serde_json::to_string_pretty(&file).expect("serializable");
        out.push('\n');
        out
    }
}
