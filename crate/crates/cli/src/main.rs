use std::io::IsTerminal;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relworld_cli::config::ResourceArgs;
use relworld_cli::{repl, server, table_cmd};

/// Talk about your family; the system keeps track of who is related to whom.
#[derive(Parser)]
#[command(name = "relworld", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive dialog on stdin/stdout.
    Repl {
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// HTTP session service.
    Serve {
        #[command(flatten)]
        resources: ResourceArgs,
        #[arg(long, env = "RELWORLD_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "RELWORLD_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Rebuild the composition table from sampled genealogies.
    DeriveTable {
        /// Maximum number of genealogies to sample.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a table file against the axioms.
    CheckTable { path: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Repl { resources } => {
            let res = resources.load()?;
            let stdin = std::io::stdin();
            let interactive = stdin.is_terminal();
            repl::run_repl(&res, stdin.lock(), &mut std::io::stdout(), interactive)?;
        }
        Command::Serve { resources, port, host } => {
            let res = resources.load()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(server::serve(res, SocketAddr::new(host, port)))?;
        }
        Command::DeriveTable { budget, seed, out } => {
            table_cmd::derive_table_cmd(
                budget,
                seed,
                out.as_deref(),
                &mut std::io::stdout(),
                &mut std::io::stderr(),
            )?;
        }
        Command::CheckTable { path } => {
            if !table_cmd::check_table_cmd(&path, &mut std::io::stdout())? {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
