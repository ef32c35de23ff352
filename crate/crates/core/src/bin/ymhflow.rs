use std::collections::BTreeMap;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ymh_flow::analysis::ClassifyTolerances;
use ymh_flow::cli::{self, ClassifyRequest};
use ymh_flow::group::GroupName;
use ymh_flow::scenario::ScenarioName;
use ymh_flow::verify::VerifyOptions;

#[derive(Parser)]
#[command(name = "ymhflow", version, about = "Yang-Mills-Higgs gradient flow on the flat torus")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow described by a TOML config.
    Run { config: PathBuf },
    /// Run the built-in invariant suites.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        negate_gradient: bool,
    },
    /// Compare a checkpointed pair with a scenario's expected limit.
    Classify {
        checkpoint: PathBuf,
        #[arg(long)]
        scenario: ScenarioName,
        #[arg(long)]
        group: Option<GroupName>,
        /// Scenario parameter override, `key=value`; repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[arg(long, default_value_t = 1e-5)]
        tol_grad: f64,
    },
    /// Run every point of a config's [sweep] grid.
    Sweep { config: PathBuf },
    /// List the built-in scenarios.
    Catalog {
        #[arg(long)]
        json: bool,
    },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { cli::EXIT_USAGE } else { cli::EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match args.command {
        Command::Run { config } => cli::cmd_run(&config, &mut out, &mut err),
        Command::Verify { seed, negate_gradient } => {
            let opts = VerifyOptions {
                seed,
                negate_gradient,
                ..VerifyOptions::default()
            };
            cli::cmd_verify(&opts, &mut out, &mut err)
        }
        Command::Classify {
            checkpoint,
            scenario,
            group,
            params,
            tol_grad,
        } => {
            let req = ClassifyRequest {
                checkpoint,
                scenario,
                group,
                params: params.into_iter().collect::<BTreeMap<_, _>>(),
                tolerances: ClassifyTolerances {
                    tol_grad,
                    ..ClassifyTolerances::default()
                },
            };
            cli::cmd_classify(&req, &mut out, &mut err)
        }
        Command::Sweep { config } => cli::cmd_sweep(&config, &mut out, &mut err),
        Command::Catalog { json } => cli::cmd_catalog(json, &mut out),
    };
    ExitCode::from(code as u8)
}
