use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kantorovich_cli::{cmd_certify, cmd_distance, cmd_laws, cmd_repro, Example, Method, Options, Scope};

#[derive(Parser)]
#[command(name = "kanto", version, about = "Quantale-valued behavioural distances via Kantorovich liftings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print a machine-readable JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Value-grid resolution for the distributive-law suite.
    #[arg(long, global = true, default_value_t = 2)]
    grid: u32,
    /// Trace bounds enumerate words of length < L.
    #[arg(long = "max-words", global = true, default_value_t = 10)]
    max_words: usize,
    #[arg(long = "max-iters", global = true, default_value_t = 1000)]
    max_iters: usize,
    /// Determinization depth for bounded Kleene iteration.
    #[arg(long, global = true, default_value_t = 8)]
    depth: usize,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a distance between two states.
    Distance {
        #[arg(long)]
        model: PathBuf,
        /// "lhs|rhs", e.g. "{x0,y0}|{z0}" or "1/2·x + 1/2·x'|y".
        #[arg(long)]
        pair: Option<String>,
        /// kleene, trace, lp or hausdorff.
        #[arg(long, default_value = "kleene")]
        method: Method,
    },
    /// Check an up-to certificate.
    Certify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Run a property suite: quantale, galois, polyfunctor or distlaw.
    Laws {
        scope: Scope,
        /// Use the non-prioritizing g (distlaw only); expected to fail.
        #[arg(long)]
        mutant: bool,
    },
    /// Recompute a bundled example: transport, pp, pd, dp, dd, probchain or exceptions.
    Repro { example: Example },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut opts = Options {
        grid: cli.grid,
        max_words: cli.max_words,
        max_iters: cli.max_iters,
        depth: cli.depth,
        seed: cli.seed,
        mutant: false,
    };
    let result = match &cli.command {
        Command::Distance { model, pair, method } => cmd_distance(model, pair.as_deref(), *method, &opts),
        Command::Certify { model, cert } => cmd_certify(model, cert),
        Command::Laws { scope, mutant } => {
            opts.mutant = *mutant;
            cmd_laws(*scope, &opts)
        }
        Command::Repro { example } => cmd_repro(*example, &opts),
    };
    match result {
        Ok(report) => {
            println!("{}", report.render(cli.json));
            ExitCode::from(report.exit_code)
        }
        Err(e) => {
            eprintln!("kanto: {}", e);
            ExitCode::from(e.exit_code())
        }
    }
}
