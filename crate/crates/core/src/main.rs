use clap::{Parser, Subcommand, ValueEnum};
use pshlab::par::Exec;
use pshlab::report::{run, run_verify, Corpus, ExperimentConfig};
use pshlab::{expr::is_real_valued, Error, PotentialField};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pshlab", version, about = "Plurisubharmonic potentials lab")]
struct Cli {
    /// Run every work item on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusChoice {
    Builtin,
    Empty,
    Planted,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite over the built-in corpus.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "pshlab-verify")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "builtin")]
        corpus: CorpusChoice,
    },
    /// Parse an expression and report its normal form and realness.
    ParseCheck {
        expr: String,
        #[arg(long)]
        dim: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    match cli.command {
        Command::Run { config, out } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match run(&cfg, out.as_deref(), exec) {
                Ok(r) => {
                    print!("{}", r.render());
                    ExitCode::from(r.exit_code() as u8)
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { seed, out, corpus } => {
            let corpus = match corpus {
                CorpusChoice::Builtin => Corpus::builtin(),
                CorpusChoice::Empty => Ok(Corpus::empty()),
                CorpusChoice::Planted => Corpus::with_planted_harmonic(),
            };
            match corpus.and_then(|c| run_verify(&c, seed, &out, exec)) {
                Ok(r) => {
                    print!("{}", r.render());
                    ExitCode::from(r.exit_code() as u8)
                }
                Err(e) => fail(e),
            }
        }
        Command::ParseCheck { expr, dim } => {
            let f = match PotentialField::parse(&expr, dim) {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            println!("normal form: {}", f.expr().expect("parsed field"));
            match is_real_valued(&f, 64, 0) {
                Ok(cert) if cert.pass => {
                    println!("real-valued: yes (max |Im| {:e})", cert.max_imag);
                    ExitCode::SUCCESS
                }
                Ok(cert) => {
                    println!("real-valued: no (max |Im| {:e})", cert.max_imag);
                    ExitCode::from(1)
                }
                Err(e) => fail(e),
            }
        }
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}
