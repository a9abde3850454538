use clap::{Args, Parser, Subcommand};
use rmclt::harness::{
    rate_fit, report_envelope, run_bound, simulate_statistic, write_csv, ExperimentSpec,
};
use rmclt::{verify, Error, Result};
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "rmclt", version, about = "Normal-approximation bounds for linear eigenvalue statistics of random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// wigner | corr-gauss | toeplitz | wishart | double-wishart
    #[arg(long)]
    ensemble: String,
    /// matrix dimension n
    #[arg(long)]
    n: usize,
    /// data columns N (wishart, double-wishart)
    #[arg(long = "N")]
    big_n: Option<usize>,
    /// denominator columns M (double-wishart)
    #[arg(long = "M")]
    big_m: Option<usize>,
    /// gaussian | uniform | sym-uniform:<scale>
    #[arg(long, default_value = "gaussian")]
    law: String,
    /// polynomial in z, e.g. "z^2" or "z^3 - 2z"
    #[arg(long)]
    f: String,
    /// Monte Carlo samples for the moment estimates
    #[arg(long, default_value_t = 2000)]
    mc_kappa: usize,
    /// Monte Carlo samples of the statistic itself
    #[arg(long, default_value_t = 100_000)]
    mc_sigma: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl ModelArgs {
    fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            ensemble: self.ensemble.clone(),
            n: self.n,
            big_n: self.big_n,
            big_m: self.big_m,
            law: self.law.clone(),
            f: self.f.clone(),
            mc_kappa: self.mc_kappa,
            mc_sigma: self.mc_sigma,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the ensemble-specialized total-variation bound
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        /// write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the statistic and compare it to its matched normal
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// also write the raw samples as CSV (header `index,W`)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fit the log-log decay rate of the bound over a dimension grid
    Rate {
        #[command(flatten)]
        model: ModelArgs,
        /// comma-separated grid, e.g. 32,64,128,256,512
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in self-check suite
    Verify {
        /// linalg | afunc | stein | gamma
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn emit_json(value: &serde_json::Value, out: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            let mut file = File::create(path)?;
            writeln!(file, "{text}")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bound { model, out } => {
            let spec = model.spec();
            let report = run_bound(&spec)?;
            emit_json(&report_envelope(&spec, &report)?, out.as_ref())
        }
        Command::Simulate { model, out, csv } => {
            let spec = model.spec();
            let sim = simulate_statistic(&spec)?;
            if let Some(path) = csv {
                let mut file = File::create(path)?;
                write_csv(&mut file, &sim.samples)?;
            }
            emit_json(&report_envelope(&spec, &sim)?, out.as_ref())
        }
        Command::Rate { model, ns, out } => {
            let spec = model.spec();
            let fit = rate_fit(&spec, &ns)?;
            emit_json(&report_envelope(&spec, &fit)?, out.as_ref())
        }
        Command::Verify { suite, seed } => {
            let lines = match suite.as_str() {
                "linalg" => verify::verify_linalg(1000, seed)?,
                "afunc" => verify::verify_afunc(20, seed)?,
                "stein" => verify::verify_stein()?,
                "gamma" => verify::verify_gamma(seed)?,
                other => {
                    return Err(Error::Argument(format!(
                        "unknown suite '{other}' (expected linalg|afunc|stein|gamma)"
                    )))
                }
            };
            for line in lines {
                println!("ok {line}");
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
