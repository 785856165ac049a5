//! `zerosum`: run self-play experiments, sweeps, property suites and the
//! γ benchmark from the command line.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 I/O failure,
//! 3 property violation.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use zerosum::driver::{loglog_slope, monitor_suite, run, Environment, RunConfig, Trace};
use zerosum::gamma::{gamma_select_counted, gamma_sorted_counted, random_instance, GammaProblem};
use zerosum::verify::{run_suite, Suite};

use config::{load_game, slug, Algo, AveragingArg, Failure, Game, SetupArg};

#[derive(Parser)]
#[command(name = "zerosum", version, about = "Zero-sum game solving with regret matching and optimistic gradient learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one self-play experiment and write its trace as CSV.
    Run {
        /// counterexample, pennies, random:MxN:SEED, kuhn, goofspiel3 or tree:PATH
        #[arg(long)]
        game: String,
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long, value_enum, default_value = "sim")]
        setup: SetupArg,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "both")]
        averaging: AveragingArg,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with code 3 if a runtime monitor fails.
        #[arg(long)]
        check: bool,
    },
    /// Run every game × algorithm × setup combination in parallel, one CSV
    /// per run.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        games: Vec<String>,
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        algos: Vec<Algo>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "sim,alt,eg")]
        setups: Vec<SetupArg>,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "both")]
        averaging: AveragingArg,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run randomized property suites.
    Verify {
        /// gamma, matchers, gradient, rvu, lemmaC, scale or all
        #[arg(default_value = "all")]
        suite: String,
    },
    /// Time and count comparisons of the sorted and selection γ solvers.
    GammaBench {
        #[arg(long, default_value_t = 1 << 16)]
        nmax: usize,
        #[arg(long, default_value_t = 8)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run {
            game,
            algo,
            setup,
            iters,
            seed,
            averaging,
            out,
            check,
        } => cmd_run(&RunArgs { game, algo, setup, iters, seed, averaging }, out.as_deref(), check),
        Command::Sweep {
            games,
            algos,
            setups,
            iters,
            seed,
            averaging,
            out_dir,
            jobs,
        } => cmd_sweep(&games, &algos, &setups, iters, seed, averaging, &out_dir, jobs),
        Command::Verify { suite } => cmd_verify(&suite),
        Command::GammaBench { nmax, reps, seed } => cmd_gamma_bench(nmax, reps, seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("zerosum: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

#[derive(Clone)]
struct RunArgs {
    game: String,
    algo: Algo,
    setup: SetupArg,
    iters: usize,
    seed: u64,
    averaging: AveragingArg,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::new(self.algo.spec(), self.setup.setup(), self.iters);
        cfg.seed = self.seed;
        cfg.averaging = self.averaging.averaging();
        cfg.validate()?;
        Ok(cfg)
    }

    fn comments(&self, tree: bool) -> Vec<String> {
        let mut c = vec![format!(
            "game={} algo={} setup={} iters={} seed={} averaging={}",
            self.game,
            self.algo.name(),
            self.setup.name(),
            self.iters,
            self.seed,
            self.averaging.name()
        )];
        if tree {
            c.push(
                "gap columns: Nash gap of the behavioral profiles; rnorm columns: root-mean-square of per-infoset regret norms"
                    .into(),
            );
        }
        c
    }
}

fn execute<E: Environment>(env: &E, cfg: &RunConfig) -> Result<Trace, Failure> {
    Ok(run(env, cfg)?)
}

/// Runs and returns the trace with its CSV comment lines.
fn run_one(args: &RunArgs) -> Result<(Trace, Vec<String>), Failure> {
    let cfg = args.config()?;
    let game = load_game(&args.game)?;
    let (trace, tree) = match &game {
        Game::Matrix(g) => (execute(g, &cfg)?, false),
        Game::Tree(t) => (execute(t, &cfg)?, true),
    };
    Ok((trace, args.comments(tree)))
}

fn write_trace(trace: &Trace, comments: &[String], out: Option<&Path>) -> Result<(), Failure> {
    let io = |e: std::io::Error, what: &str| Failure::Io(format!("{what}: {e}"));
    match out {
        Some(path) => {
            let shown = path.display().to_string();
            let file = File::create(path).map_err(|e| io(e, &shown))?;
            let mut w = BufWriter::new(file);
            trace.write_csv(&mut w, comments).map_err(|e| io(e, &shown))?;
            w.flush().map_err(|e| io(e, &shown))
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            trace.write_csv(&mut w, comments).map_err(|e| io(e, "stdout"))?;
            w.flush().map_err(|e| io(e, "stdout"))
        }
    }
}

fn cmd_run(args: &RunArgs, out: Option<&Path>, check: bool) -> Result<(), Failure> {
    let (trace, comments) = run_one(args)?;
    write_trace(&trace, &comments, out)?;
    let report = monitor_suite(&trace);
    let failures: Vec<_> = report.failures().collect();
    if failures.is_empty() {
        eprintln!("monitors: {} checks passed", report.entries.len());
        return Ok(());
    }
    for f in &failures {
        eprintln!("monitor {} failed at t = {} (slack {:.3e})", f.check.name, f.iter, f.check.slack);
    }
    if check {
        return Err(Failure::Violation(format!("{} monitor checks failed", failures.len())));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    games: &[String],
    algos: &[Algo],
    setups: &[SetupArg],
    iters: usize,
    seed: u64,
    averaging: AveragingArg,
    out_dir: &Path,
    jobs: Option<usize>,
) -> Result<(), Failure> {
    for g in games {
        load_game(g)?;
    }
    let mut runs = Vec::new();
    for game in games {
        for &algo in algos {
            for &setup in setups {
                let args = RunArgs {
                    game: game.clone(),
                    algo,
                    setup,
                    iters,
                    seed,
                    averaging,
                };
                match args.config() {
                    Ok(_) => runs.push(args),
                    // Combinations such as DCFR with extragradient are not run.
                    Err(e) => eprintln!("skipping {} {} {}: {e}", game, algo.name(), setup.name()),
                }
            }
        }
    }
    if runs.is_empty() {
        return Err(Failure::Config("no valid game/algorithm/setup combination".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Failure::Io(format!("{}: {e}", out_dir.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let results: Vec<Result<(PathBuf, Trace), Failure>> = pool.install(|| {
        runs.par_iter()
            .map(|args| {
                let (trace, comments) = run_one(args)?;
                let name = format!("{}_{}_{}.csv", slug(&args.game), slug(args.algo.name()), args.setup.name());
                let path = out_dir.join(name);
                write_trace(&trace, &comments, Some(&path))?;
                Ok((path, trace))
            })
            .collect()
    });
    println!("file,iters,gap_last,gap_avg_uniform,gap_avg_lasthalf");
    let mut first_err = None;
    for r in results {
        match r {
            Ok((path, trace)) => {
                let last = trace.last();
                println!(
                    "{},{},{:.16e},{:.16e},{:.16e}",
                    path.display(),
                    last.iter,
                    last.gap_last,
                    last.gap_avg_uniform,
                    last.gap_avg_lasthalf
                );
            }
            Err(e) => {
                eprintln!("zerosum: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn cmd_verify(suite: &str) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let props = run_suite(suite);
    let mut failed = 0;
    for p in &props {
        let verdict = if p.passed() { "PASS" } else { "FAIL" };
        println!(
            "{}/{}: {verdict} checked {} worst slack {:.3e}",
            p.suite, p.name, p.checked, p.worst_slack
        );
        if let Some(r) = &p.reproducer {
            println!("  reproducer: {r}");
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(Failure::Violation(format!("{failed} of {} properties failed", props.len())));
    }
    Ok(())
}

fn cmd_gamma_bench(nmax: usize, reps: u64, seed: u64) -> Result<(), Failure> {
    if nmax < 1 << 8 {
        return Err(Failure::Config(format!("--nmax must be at least 256, got {nmax}")));
    }
    if reps == 0 {
        return Err(Failure::Config("--reps must be positive".into()));
    }
    type Solver = fn(&GammaProblem) -> zerosum::error::Result<(f64, u64)>;
    let solvers: [(&str, Solver); 2] = [("sorted", gamma_sorted_counted), ("select", gamma_select_counted)];
    let sizes: Vec<usize> = (8..usize::BITS).map(|e| 1usize << e).take_while(|&n| n <= nmax).collect();
    println!("algo,n,mean_time_ns,mean_comparisons");
    for (name, solve) in solvers {
        let mut pts = Vec::new();
        for &n in &sizes {
            let instances: Vec<GammaProblem> = (0..reps).map(|k| random_instance(n, seed + k)).collect();
            let start = Instant::now();
            let mut comparisons = 0u64;
            for p in &instances {
                comparisons += solve(p)?.1;
            }
            let ns = start.elapsed().as_nanos() as f64 / reps as f64;
            let mean = comparisons as f64 / reps as f64;
            println!("{name},{n},{ns:.0},{mean:.1}");
            pts.push((n as f64, mean));
        }
        if let Some(s) = loglog_slope(&pts) {
            println!("# {name} comparison-count slope {s:.3}");
        }
    }
    Ok(())
}
