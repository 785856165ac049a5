//! Flag values: game names, algorithm names and the failure classes that
//! map to exit codes.

use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use zerosum::driver::{Averaging, Setup};
use zerosum::efg::{build_goofspiel3, build_kuhn_poker, parse_tree, GameTree};
use zerosum::game::{counterexample_game, matching_pennies, random_matrix_game, NormalFormGame};
use zerosum::learner::LearnerSpec;
use zerosum::matchers::{DcfrParams, Flavor};

/// Why a command stopped, each with its stable exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
    Violation(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Io(_) => 2,
            Failure::Violation(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "invalid configuration: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
            Failure::Violation(m) => write!(f, "property violation: {m}"),
        }
    }
}

impl From<zerosum::error::Error> for Failure {
    fn from(e: zerosum::error::Error) -> Self {
        match e {
            zerosum::error::Error::Config(m) => Failure::Config(m),
            other => Failure::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    #[value(name = "rm")]
    Rm,
    #[value(name = "rm+")]
    RmPlus,
    #[value(name = "prm+")]
    PrmPlus,
    #[value(name = "dcfr")]
    Dcfr,
    #[value(name = "adogd")]
    Adogd,
    #[value(name = "ir-prm")]
    IrPrm,
    #[value(name = "ir-prm+")]
    IrPrmPlus,
}

impl Algo {
    pub fn spec(self) -> LearnerSpec {
        match self {
            Algo::Rm => LearnerSpec::matcher(Flavor::Rm),
            Algo::RmPlus => LearnerSpec::matcher(Flavor::RmPlus),
            Algo::PrmPlus => LearnerSpec::matcher(Flavor::PrmPlus),
            Algo::Dcfr => LearnerSpec::matcher(Flavor::Dcfr(DcfrParams::default())),
            Algo::Adogd => LearnerSpec::adogd(),
            Algo::IrPrm => LearnerSpec::matcher(Flavor::IrPrm),
            Algo::IrPrmPlus => LearnerSpec::matcher(Flavor::IrPrmPlus),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algo::Rm => "rm",
            Algo::RmPlus => "rm+",
            Algo::PrmPlus => "prm+",
            Algo::Dcfr => "dcfr",
            Algo::Adogd => "adogd",
            Algo::IrPrm => "ir-prm",
            Algo::IrPrmPlus => "ir-prm+",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SetupArg {
    Sim,
    Alt,
    Eg,
}

impl SetupArg {
    pub fn setup(self) -> Setup {
        match self {
            SetupArg::Sim => Setup::Simultaneous,
            SetupArg::Alt => Setup::Alternating,
            SetupArg::Eg => Setup::Extragradient,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SetupArg::Sim => "sim",
            SetupArg::Alt => "alt",
            SetupArg::Eg => "eg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AveragingArg {
    Uniform,
    Lasthalf,
    Both,
}

impl AveragingArg {
    pub fn averaging(self) -> Averaging {
        match self {
            AveragingArg::Uniform => Averaging::Uniform,
            AveragingArg::Lasthalf => Averaging::LastHalf,
            AveragingArg::Both => Averaging::Both,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AveragingArg::Uniform => "uniform",
            AveragingArg::Lasthalf => "lasthalf",
            AveragingArg::Both => "both",
        }
    }
}

pub enum Game {
    Matrix(NormalFormGame),
    Tree(GameTree),
}

/// Resolves a game name: `counterexample`, `pennies`, `random:MxN:SEED`,
/// `kuhn`, `goofspiel3` or `tree:PATH` for a tree in the text format.
pub fn load_game(name: &str) -> Result<Game, Failure> {
    match name {
        "counterexample" => Ok(Game::Matrix(counterexample_game())),
        "pennies" => Ok(Game::Matrix(matching_pennies())),
        "kuhn" => Ok(Game::Tree(build_kuhn_poker())),
        "goofspiel3" => Ok(Game::Tree(build_goofspiel3())),
        _ => {
            if let Some(rest) = name.strip_prefix("random:") {
                let (m, n, seed) = parse_random(rest)
                    .ok_or_else(|| Failure::Config(format!("expected random:MxN:SEED, got '{name}'")))?;
                Ok(Game::Matrix(random_matrix_game(m, n, seed)?))
            } else if let Some(path) = name.strip_prefix("tree:") {
                let text = std::fs::read_to_string(Path::new(path))
                    .map_err(|e| Failure::Io(format!("{path}: {e}")))?;
                Ok(Game::Tree(parse_tree(&text)?))
            } else {
                Err(Failure::Config(format!(
                    "unknown game '{name}' (expected counterexample, pennies, random:MxN:SEED, kuhn, goofspiel3 or tree:PATH)"
                )))
            }
        }
    }
}

fn parse_random(s: &str) -> Option<(usize, usize, u64)> {
    let (dims, seed) = s.split_once(':')?;
    let (m, n) = dims.split_once('x')?;
    Some((m.parse().ok()?, n.parse().ok()?, seed.parse().ok()?))
}

/// A file-name-safe rendering of a game, algorithm or setup name.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '+' => 'p',
            c if c.is_ascii_alphanumeric() || c == '-' => c,
            _ => '-',
        })
        .collect()
}
