use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gmsfem_core::adaptive::History;
use gmsfem_core::experiment::{
    adaptive_vs_uniform, convergence_study, energy_relative_error, run_strategy, snapshot_solution, solve_fine,
    RunConfig,
};
use gmsfem_core::{Error, Result};

#[derive(Parser)]
#[command(name = "gmsfem", version, about = "Adaptive multiscale solver for curl(a curl u) + b u = f")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Output directory (overrides the `output` key).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Also write matrices and bases as triplet files.
    #[arg(long, global = true)]
    dump: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the fine-scale problem.
    SolveFine,
    /// Relative energy error of the snapshot solution.
    SnapshotError,
    /// Indicator-driven offline enrichment.
    OfflineAdaptive,
    /// One more eigenfunction per neighborhood per level.
    Uniform,
    /// Online enrichment from the initial offline space.
    Online,
    /// Offline enrichment followed by online enrichment.
    OfflineOnline,
    /// Snapshot errors over `coarse_list` x `power_list`.
    ConvergenceStudy,
    /// Offline adaptive and uniform runs compared at a matched DOF.
    AdaptiveVsUniform,
    /// Print the effective configuration.
    PrintConfig,
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for s in &common.sets {
        cfg.apply_assignment(s)?;
    }
    if let Some(out) = &common.output {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_history(dir: &Path, name: &str, h: &History) -> Result<()> {
    let mut w = create(dir, &format!("{name}_history.csv"))?;
    h.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn summarize(h: &History) {
    let last = h.last();
    println!(
        "{}: {} iterations, dof {}, e1 {:.4e}, e2 {:.4e}",
        h.strategy,
        h.records.len() - 1,
        last.dof,
        last.e1,
        last.e2
    );
    if let Some(s) = h.switch_iteration {
        println!("online stage starts after iteration {s}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    let out = cfg.output.clone();
    let dump = cli.common.dump;
    match cli.command {
        Command::PrintConfig => {
            cfg.validate()?;
            print!("{}", cfg.render());
        }
        Command::SolveFine => {
            cfg.validate()?;
            let grid = cfg.fine_grid()?;
            let kappa = cfg.kappa(&grid)?;
            let sys = cfg.system_with_power(&kappa, cfg.power)?;
            let u = solve_fine(&sys, cfg.solver()?.as_ref())?;
            fs::create_dir_all(&out)?;
            kappa.write_raster(out.join("kappa.txt"))?;
            sys.a.write_raster(out.join("a.txt"))?;
            let mut w = create(&out, "fine_solution.txt")?;
            for (e, v) in sys.dofs.extend(&u).iter().enumerate() {
                writeln!(w, "{e} {v:?}")?;
            }
            w.flush()?;
            if dump {
                let mut w = create(&out, "matrix.txt")?;
                sys.matrix.write_triplets(&mut w)?;
                w.flush()?;
            }
            println!(
                "fine solution: {} dofs, energy norm {:.6e}",
                sys.num_dofs(),
                sys.energy_sq(&u).sqrt()
            );
        }
        Command::SnapshotError => {
            cfg.validate()?;
            let sys = cfg.system()?;
            let solver = cfg.solver()?;
            let u_h = solve_fine(&sys, solver.as_ref())?;
            let u_snap = snapshot_solution(&sys, cfg.coarse, solver.as_ref())?;
            let err = energy_relative_error(&sys, &u_h, &u_snap)?;
            let mut w = create(&out, "snapshot_error.csv")?;
            writeln!(w, "H,e1_snapshot")?;
            writeln!(w, "{:e},{err:e}", 1.0 / cfg.coarse as f64)?;
            w.flush()?;
            if dump {
                let problem = cfg.problem()?;
                let mut w = create(&out, "snapshot_basis.txt")?;
                problem.snapshots.basis.write_triplets(&mut w)?;
                w.flush()?;
                let mut w = create(&out, "eigenvalues.csv")?;
                problem.write_eigenvalues(&mut w)?;
                w.flush()?;
            }
            println!("snapshot error {err:.6e}");
        }
        Command::OfflineAdaptive | Command::Uniform | Command::Online | Command::OfflineOnline => {
            let name = match cli.command {
                Command::OfflineAdaptive => "offline-adaptive",
                Command::Uniform => "uniform",
                Command::Online => "online",
                _ => "offline-online",
            };
            let problem = cfg.problem()?;
            let h = run_strategy(&problem, &cfg, name)?;
            write_history(&out, name, &h)?;
            let mut w = create(&out, "eigenvalues.csv")?;
            problem.write_eigenvalues(&mut w)?;
            w.flush()?;
            if dump {
                let mut w = create(&out, &format!("{name}_basis.txt"))?;
                problem.basis(&h.final_space).write_triplets(&mut w)?;
                w.flush()?;
            }
            summarize(&h);
        }
        Command::ConvergenceStudy => {
            let table = convergence_study(&cfg, &cfg.coarse_list, &cfg.power_list)?;
            let mut w = create(&out, "convergence.csv")?;
            table.write_csv(&mut w)?;
            w.flush()?;
            table.write_csv(std::io::stdout().lock())?;
        }
        Command::AdaptiveVsUniform => {
            let problem = cfg.problem()?;
            let c = adaptive_vs_uniform(&problem, &cfg)?;
            write_history(&out, "offline-adaptive", &c.adaptive)?;
            write_history(&out, "uniform", &c.uniform)?;
            let mut w = create(&out, "comparison.csv")?;
            writeln!(w, "dof,adaptive_e1,uniform_e1")?;
            writeln!(w, "{},{:e},{:e}", c.compare_dof, c.adaptive_e1, c.uniform_e1)?;
            w.flush()?;
            println!(
                "at {} dof: adaptive e1 {:.4e}, uniform e1 {:.4e}",
                c.compare_dof, c.adaptive_e1, c.uniform_e1
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    u8::try_from(e.exit_code()).unwrap_or(1)
}
