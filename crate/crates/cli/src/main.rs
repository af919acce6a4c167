use std::path::PathBuf;
use std::process::ExitCode;

use basisopt::basis::Units;
use basisopt_cli::{run_gradcheck, run_hf, run_integrals, run_optimize, CliError, RunConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "basisopt", version, about = "Gradient-based Gaussian basis optimization for RHF")]
struct Cli {
    /// Run configuration (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for integral evaluation (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Units of the geometry, overriding the config
    #[arg(long, global = true, value_enum)]
    units: Option<UnitsArg>,
    /// Output directory, overriding the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitsArg {
    Bohr,
    Angstrom,
}

#[derive(Subcommand)]
enum Command {
    /// Single-point RHF energy
    Hf,
    /// Optimize the free basis parameters
    Optimize,
    /// Compare analytic and finite-difference gradients
    Gradcheck {
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
    },
    /// Dump overlap, core and two-electron tensors
    Integrals,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let path = cli.config.ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let (cfg, base) = RunConfig::from_file(&path)?;
    let units = cli.units.map(|u| match u {
        UnitsArg::Bohr => Units::Bohr,
        UnitsArg::Angstrom => Units::Angstrom,
    });
    let out = cli.out.unwrap_or_else(|| base.join(&cfg.output));
    let loaded = cfg.load(&base, units)?;
    log::info!(
        "{} functions, {} primitives, {} free parameters",
        loaded.problem.basis.w(),
        loaded.problem.basis.n_gto(),
        loaded.problem.free_indices().len()
    );
    match cli.command {
        Command::Hf => println!("{}", run_hf(&loaded, &out)?),
        Command::Optimize => {
            let (r, _) = run_optimize(&loaded, &out)?;
            println!("status     {}", r.status);
            println!("steps      {}", r.steps);
            println!("E_elec     {:.9}", r.e_elec);
            println!("E_total    {:.9}", r.e_total);
            println!("grad_inf   {:e}", r.grad_inf);
        }
        Command::Gradcheck { step } => {
            let rows = run_gradcheck(&loaded, step, &out);
            if let Ok(rows) = &rows {
                println!("{:<16} {:>20} {:>20} {:>12}", "theta", "analytic", "finite-diff", "rel err");
                for r in rows {
                    println!("{:<16} {:>20.12e} {:>20.12e} {:>12.3e}", r.theta, r.analytic, r.finite_difference, r.rel_err);
                }
            }
            rows?;
        }
        Command::Integrals => {
            for p in run_integrals(&loaded, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // usage errors share the validation exit code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
