use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robform_cli::{cmd_certify, cmd_check, cmd_plot, cmd_simulate, CertifyOpts, Outcome, SimulateOpts};

/// Connectedness certificates and safe formation control for uncertain multi-agent systems.
#[derive(Parser)]
#[command(name = "rf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the formation and geometry assumptions of a scenario.
    Check { scenario: PathBuf },
    /// Certify that the initial graph stays connected over the parameter set.
    Certify {
        scenario: PathBuf,
        /// Half-degree of the Lyapunov-like matrix polynomial.
        #[arg(long = "dP")]
        d_p: Option<u32>,
        #[arg(long)]
        tol: Option<f64>,
        /// Parameter samples for the eigenvalue cross-check.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Run the closed loop and write a run directory.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Final time.
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Skip the certificate requirement and honour barrier overrides.
        #[arg(long = "unsafe")]
        unsafe_mode: bool,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Render SVG plots from a run directory.
    Plot { run_dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let Outcome { code, report } = match cli.command {
        Command::Check { scenario } => cmd_check(&scenario),
        Command::Certify {
            scenario,
            d_p,
            tol,
            samples,
            seed,
            out,
        } => cmd_certify(&scenario, &CertifyOpts { d_p, tol, samples, seed, out }),
        Command::Simulate {
            scenario,
            seed,
            t_end,
            dt,
            unsafe_mode,
            out,
        } => cmd_simulate(
            &scenario,
            &SimulateOpts {
                seed,
                t_end,
                dt,
                unsafe_mode,
                out,
            },
        ),
        Command::Plot { run_dir } => cmd_plot(&run_dir),
    };
    if code == 0 {
        print!("{report}");
    } else {
        eprint!("{report}");
    }
    ExitCode::from(code as u8)
}
