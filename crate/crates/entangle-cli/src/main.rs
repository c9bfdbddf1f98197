use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entangle::driver::{self, Command, RunConfig};
use entangle::Error;

#[derive(Parser)]
#[command(name = "entangle", version, about = "Bath-mediated entanglement of two oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Option<Cmd>,
    /// Configuration file (key = value lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bundled figure recipe, e.g. fig6
    #[arg(long, global = true)]
    recipe: Option<String>,
    /// Output CSV; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for scans
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Use n_grid = 10000 and s_max = 10 omega_c
    #[arg(long, global = true)]
    paper_scale: bool,
    /// List the bundled recipes and exit
    #[arg(long)]
    list_recipes: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// E_N(t) for every configured point
    Evolve,
    /// Stationary E_N for every configured point
    Asymptotic,
    /// Separability distance for every configured point
    Rmax,
    /// E_N(t) of the effective Markov model
    Markov,
    /// One observable per scan point with the configured solver
    Scan,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Evolve => Command::Evolve,
            Cmd::Asymptotic => Command::Asymptotic,
            Cmd::Rmax => Command::Rmax,
            Cmd::Markov => Command::Markov,
            Cmd::Scan => Command::Scan,
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let (cmd, mut cfg) = match (&cli.config, &cli.recipe) {
        (Some(_), Some(_)) => return Err(Error::Config("give either --config or --recipe, not both".into())),
        (Some(path), None) => {
            let cmd = cli
                .command
                .ok_or_else(|| Error::Config("a subcommand is required with --config".into()))?;
            (Command::from(cmd), driver::load_config(path)?)
        }
        (None, Some(name)) => {
            let (default_cmd, text) =
                driver::recipe(name).ok_or_else(|| Error::Config(format!("unknown recipe '{name}'")))?;
            let cmd = cli.command.map(Command::from).unwrap_or(default_cmd);
            (cmd, RunConfig::parse_str(text)?)
        }
        (None, None) => return Err(Error::Config("--config or --recipe is required".into())),
    };
    if cli.paper_scale {
        cfg.apply_paper_scale();
    }
    let table = driver::run(cmd, &cfg, cli.jobs)?;
    match &cli.out {
        Some(path) => driver::write_csv(&table, path),
        None => std::io::stdout()
            .write_all(driver::to_csv_string(&table).as_bytes())
            .map_err(|e| Error::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_recipes {
        for (name, cmd, _) in driver::RECIPES {
            println!("{name}\t{cmd}");
        }
        return ExitCode::SUCCESS;
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("entangle: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
