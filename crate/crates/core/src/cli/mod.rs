//! Command-line front end.
//!
//! Exit codes: 0 on success (an empty equilibrium set is a success), 2 for
//! unreadable or malformed input, 3 for games that parse but cannot be
//! assembled, 4 when the profile product exceeds the cap. Failures print one
//! line `error[<class>]: <message>` on standard error.

mod gamefile;
mod report;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use gamefile::{
    join_key, load_game, parse_game, split_key, Game, GameFile, DEFAULT_DELIMITER,
    SUPPORTED_VERSION,
};
pub use report::{analyze, render_text, AnalyzeOptions, KernelReport, Report, TrajectoryReport};

use crate::analysis::{
    close_normal_form, nash_fixpoints, oracle_nash, random_normal_form, CostateKind, TieBreak,
    DEFAULT_MAX_PROFILES,
};
use crate::error::{Error, Result};

/// Environment variable mirroring `--max-profiles`.
pub const MAX_PROFILES_ENV: &str = "DIEGETIC_MAX_PROFILES";

#[derive(Parser, Debug)]
#[command(name = "diegetic", version, about = "Nash equilibria of games built from lenses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate the equilibria of a game file.
    Analyze {
        file: PathBuf,
        /// Also run the brute-force oracle and report agreement.
        #[arg(long)]
        oracle: bool,
        /// Run best-response dynamics for at most N steps.
        #[arg(long, value_name = "N")]
        dynamics: Option<usize>,
        /// Start profile for dynamics, as a delimiter-joined key. Repeatable.
        #[arg(long, value_name = "PROFILE")]
        start: Vec<String>,
        /// Override the costate named in the file.
        #[arg(long, value_parser = ["const", "regret"])]
        costate: Option<String>,
        /// Choose the last best response instead of the first.
        #[arg(long)]
        last: bool,
        /// Print the backward kernel of the closed system.
        #[arg(long)]
        explain: bool,
        /// Write the JSON report to OUT (`-` for standard output).
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
        /// Refuse games with more profiles than K.
        #[arg(long, value_name = "K", env = MAX_PROFILES_ENV, default_value_t = DEFAULT_MAX_PROFILES)]
        max_profiles: u128,
    },
    /// Print a game file in canonical form.
    Fmt { file: PathBuf },
    /// Compare fixpoints with the oracle on seeded random games.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        games: usize,
    },
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("bad arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.class());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Analyze {
            file,
            oracle,
            dynamics,
            start,
            costate,
            last,
            explain,
            json,
            max_profiles,
        } => {
            let game = load_game(&file)?;
            let opts = AnalyzeOptions {
                oracle,
                dynamics,
                starts: start,
                costate: costate.map(|c| c.parse::<CostateKind>().map_err(Error::Semantic)).transpose()?,
                explain,
                max_profiles,
                tie_break: if last { TieBreak::Last } else { TieBreak::First },
            };
            let report = analyze(&game, &opts)?;
            let mut text = serde_json::to_string_pretty(&report).expect("serializable");
            text.push('\n');
            match json.as_deref() {
                Some(p) if p == Path::new("-") => print(&text),
                Some(p) => {
                    write_atomically(p, &text)?;
                    print(&render_text(&game, &report))
                }
                None => print(&render_text(&game, &report)),
            }
        }
        Command::Fmt { file } => print(&load_game(&file)?.to_canonical_json()),
        Command::Check { seed, games } => print(&check(seed, games)?),
    }
}

fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::Io(format!("stdout: {e}")))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial report.
fn write_atomically(path: &Path, text: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Seeded agreement check between fixpoints, the oracle and both costates.
pub fn check(seed: u64, games: usize) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..games {
        let game = random_normal_form(&mut rng, 2..=3, 2..=4, -9..=9);
        let fixed = nash_fixpoints(&close_normal_form(&game, CostateKind::Const, DEFAULT_MAX_PROFILES)?);
        if fixed != oracle_nash(&game) {
            return Err(Error::Semantic(format!("game {i} (seed {seed}): fixpoints differ from the oracle")));
        }
        let regret = nash_fixpoints(&close_normal_form(&game, CostateKind::Regret, DEFAULT_MAX_PROFILES)?);
        if regret != fixed {
            return Err(Error::Semantic(format!("game {i} (seed {seed}): regret costate changes the fixpoints")));
        }
    }
    Ok(format!("checked {games} games with seed {seed}: fixpoints match the oracle under both costates\n"))
}
