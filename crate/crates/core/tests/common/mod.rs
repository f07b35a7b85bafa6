#![allow(dead_code)]

use diegetic::analysis::{random_normal_form, NormalFormGame};
use diegetic::lens::Subset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

/// The seeded family of random normal-form games used across the suites:
/// 2 to 3 players, 2 to 4 strategies each, integer payoffs in [-9, 9].
pub fn game_family(seed: u64, count: usize) -> Vec<NormalFormGame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_normal_form(&mut rng, 2..=3, 2..=4, -9..=9))
        .collect()
}

pub fn components(game: &NormalFormGame, omega: usize) -> Vec<usize> {
    game.profiles().components(game.players().len(), omega).unwrap()
}

/// Brute force straight from the payoff table: a profile is an equilibrium
/// when no player gains by changing only their own strategy.
pub fn brute_force_nash(game: &NormalFormGame) -> Vec<usize> {
    let n = game.players().len();
    let omega = game.profiles();
    let mut out = Vec::new();
    'profiles: for w in 0..omega.len() {
        let comps = components(game, w);
        for (i, p) in game.players().iter().enumerate() {
            let mine = game.payoff().at(w).coord(p.payoff_coordinate).unwrap().clone();
            for s in 0..p.strategies.len() {
                let mut dev = comps.clone();
                dev[i] = s;
                let v = omega.encode(&dev).unwrap();
                if game.payoff().at(v).coord(p.payoff_coordinate).unwrap() > &mine {
                    continue 'profiles;
                }
            }
        }
        debug_assert_eq!(comps.len(), n);
        out.push(w);
    }
    out
}

pub fn members(s: &Subset) -> Vec<usize> {
    s.members().to_vec()
}

/// Game file text for a normal-form game, with profile keys built from labels.
pub fn game_json(game: &NormalFormGame) -> String {
    let players: Vec<Value> = game
        .players()
        .iter()
        .map(|p| {
            json!({
                "name": p.name,
                "strategies": p.strategies.elems(),
                "coordinate": p.payoff_coordinate,
            })
        })
        .collect();
    let mut payoffs = Map::new();
    for w in 0..game.profiles().len() {
        let key: Vec<&str> = components(game, w)
            .iter()
            .zip(game.players())
            .map(|(&c, p)| p.strategies.label(c))
            .collect();
        let vals: Vec<Value> = game
            .payoff()
            .at(w)
            .coords()
            .iter()
            .map(|c| Value::String(c.to_string()))
            .collect();
        payoffs.insert(key.join("|"), Value::Array(vals));
    }
    serde_json::to_string_pretty(&json!({
        "version": 1,
        "payoff_dim": game.payoff_dim(),
        "players": players,
        "game": {"kind": "normal_form", "payoffs": payoffs},
    }))
    .unwrap()
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}
