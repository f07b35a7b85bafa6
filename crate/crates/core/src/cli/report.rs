//! Analysis reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::gamefile::GameFile;
use crate::analysis::{
    best_response_iterate, nash_fixpoints, oracle_nash, CostateKind, Terminal, TieBreak,
    DEFAULT_MAX_PROFILES,
};
use crate::error::Result;
use crate::lens::Subset;

/// What `analyze` should compute besides the fixpoints.
#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    pub oracle: bool,
    /// Step budget for best-response dynamics; `None` skips them.
    pub dynamics: Option<usize>,
    /// Start profiles as keys; the first profile when empty.
    pub starts: Vec<String>,
    /// Overrides the costate named in the file.
    pub costate: Option<CostateKind>,
    pub explain: bool,
    pub max_profiles: u128,
    pub tie_break: TieBreak,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            oracle: false,
            dynamics: None,
            starts: Vec::new(),
            costate: None,
            explain: false,
            max_profiles: DEFAULT_MAX_PROFILES,
            tie_break: TieBreak::First,
        }
    }
}

type Profile = Vec<String>;

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TrajectoryReport {
    pub start: Profile,
    pub profiles: Vec<Profile>,
    pub terminal: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_start: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct KernelReport {
    /// Node counts by tag.
    pub tags: BTreeMap<&'static str, usize>,
    /// Indented rendering of the backward kernel of the closed system.
    pub tree: String,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Report {
    pub kind: &'static str,
    pub players: Vec<String>,
    pub costate: CostateKind,
    pub profiles: usize,
    pub fixpoints: Vec<Profile>,
    pub oracle: Option<Vec<Profile>>,
    pub agreement: Option<bool>,
    pub trajectories: Vec<TrajectoryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelReport>,
}

fn profiles_of(file: &GameFile, s: &Subset) -> Vec<Profile> {
    s.members().iter().map(|&w| file.profile_labels(w)).collect()
}

/// Closes the game, enumerates its equilibria and runs the requested extras.
pub fn analyze(file: &GameFile, opts: &AnalyzeOptions) -> Result<Report> {
    let costate = opts.costate.unwrap_or_else(|| file.costate());
    let closed = file.close(costate, opts.max_profiles)?;
    let fixpoints = nash_fixpoints(&closed);
    let (oracle, agreement) = if opts.oracle {
        let expected = oracle_nash(&file.normal_form()?);
        let agree = expected == fixpoints;
        (Some(profiles_of(file, &expected)), Some(agree))
    } else {
        (None, None)
    };
    let mut trajectories = Vec::new();
    if let Some(max_steps) = opts.dynamics {
        let starts = if opts.starts.is_empty() {
            vec![0]
        } else {
            opts.starts
                .iter()
                .map(|k| file.parse_profile(k))
                .collect::<Result<Vec<_>>>()?
        };
        for start in starts {
            let t = best_response_iterate(&closed, start, max_steps, opts.tie_break)?;
            let (cycle_start, period) = match t.terminal {
                Terminal::Cycle { start, period } => (Some(start), Some(period)),
                _ => (None, None),
            };
            trajectories.push(TrajectoryReport {
                start: file.profile_labels(start),
                profiles: t.profiles.iter().map(|&w| file.profile_labels(w)).collect(),
                terminal: t.terminal.label(),
                cycle_start,
                period,
            });
        }
    }
    let kernel = if opts.explain {
        let system = file.system(costate)?;
        let bwd = system.lens().bwd();
        Some(KernelReport {
            tags: bwd.tag_counts(),
            tree: bwd.to_string(),
        })
    } else {
        None
    };
    Ok(Report {
        kind: file.kind(),
        players: file.players.iter().map(|p| p.name.clone()).collect(),
        costate,
        profiles: closed.profiles().len(),
        fixpoints: profiles_of(file, &fixpoints),
        oracle,
        agreement,
        trajectories,
        kernel,
    })
}

fn key(file: &GameFile, p: &[String]) -> String {
    super::gamefile::join_key(p, file.delimiter)
}

/// Human-readable rendering.
pub fn render_text(file: &GameFile, r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} game, {} players, {} profiles, costate {}",
        r.kind,
        r.players.len(),
        r.profiles,
        r.costate.as_str()
    );
    let _ = writeln!(out, "equilibria: {}", r.fixpoints.len());
    for p in &r.fixpoints {
        let _ = writeln!(out, "  {}", key(file, p));
    }
    if let (Some(o), Some(a)) = (&r.oracle, r.agreement) {
        let _ = writeln!(out, "oracle: {} equilibria, agreement {a}", o.len());
    }
    for t in &r.trajectories {
        let path: Vec<String> = t.profiles.iter().map(|p| key(file, p)).collect();
        let _ = write!(out, "dynamics from {}: {} ({}", key(file, &t.start), path.join(" -> "), t.terminal);
        if let (Some(s), Some(n)) = (t.cycle_start, t.period) {
            let _ = write!(out, " from step {s}, period {n}");
        }
        let _ = writeln!(out, ")");
    }
    if let Some(k) = &r.kernel {
        let _ = writeln!(out, "kernel:");
        for line in k.tree.lines() {
            let _ = writeln!(out, "  {line}");
        }
    }
    out
}
