//! `solve`: command line driver for convergence studies, scattering sweeps,
//! dispersion scans and mesh statistics.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nhdfem::driver::{
    configure_threads, exit_code, mesh_info, run_convergence_study, run_dispersion, run_scattering,
    write_dispersion_csv, write_output, ProblemKind, RunConfig,
};
use nhdfem::Error;

#[derive(Debug, Parser)]
#[command(name = "solve", version, about = "Maxwell / hydrodynamic Drude finite element solver")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run on a single thread.
    #[arg(long, global = true)]
    serial: bool,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Manufactured solution on refined cube meshes; writes convergence.csv.
    Convergence,
    /// Extinction spectrum of a metal particle; writes spectrum.csv and VTK snapshots.
    Scatter,
    /// Nonlocal permittivity on an (omega, k) grid; writes dispersion.csv.
    Dispersion,
    /// Mesh statistics and DOF counts.
    MeshInfo,
}

fn require_kind(cfg: &RunConfig, kind: ProblemKind) -> Result<(), Error> {
    if cfg.problem.kind != kind {
        return Err(Error::Config(format!(
            "this subcommand needs problem.kind = {kind:?}, the config has {:?}",
            cfg.problem.kind
        )));
    }
    Ok(())
}

/// Residuals above ten times the solver tolerance count as a failed solve.
fn check_residual(what: &str, rel: f64, tol: f64) -> Result<(), Error> {
    if rel > 10.0 * tol {
        return Err(Error::SingularMatrix(format!(
            "{what}: block residual {rel:e} exceeds 10 x tolerance {tol:e}"
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        e => e,
    })?;
    let threads = configure_threads(cli.serial)?;
    let out: PathBuf = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let tol = cfg.solver.method().tolerance();
    eprintln!("threads: {threads}");
    match cli.command {
        Command::Convergence => {
            require_kind(&cfg, ProblemKind::Manufactured)?;
            let mut failure = None;
            let report = run_convergence_study(&cfg, |l| {
                eprintln!(
                    "level {} n={} h={:.4e} dofs E={} J={} err_E={:.6e} err_J={:.6e} residual={:.2e}",
                    l.level, l.n, l.h, l.ndofs_e, l.ndofs_j, l.error_e.combined, l.error_j.combined, l.relative_residual
                );
                if failure.is_none() {
                    failure = check_residual(&format!("level {}", l.level), l.residuals.max_relative(), tol).err();
                }
            })?;
            let csv = report.table.to_csv_string();
            print!("{csv}");
            let p = write_output(&out, "convergence.csv", csv.as_bytes())?;
            eprintln!("wrote {}", p.display());
            failure.map_or(Ok(()), Err)
        }
        Command::Scatter => {
            require_kind(&cfg, ProblemKind::Scattering)?;
            std::fs::create_dir_all(&out)?;
            let mut failure = None;
            let report = run_scattering(&cfg, Some(&out), |p| {
                eprintln!(
                    "omega/omega_p={:.4} sigma_ext={:.6e} residual={:.2e}",
                    p.omega_over_omega_p, p.sigma_ext, p.relative_residual
                );
                if failure.is_none() {
                    failure = check_residual(
                        &format!("omega/omega_p = {}", p.omega_over_omega_p),
                        p.residuals.max_relative(),
                        tol,
                    )
                    .err();
                }
            })?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
            let p = write_output(&out, "spectrum.csv", &buf)?;
            eprintln!("wrote {} (E DOFs {}, J DOFs {})", p.display(), report.ndofs_e, report.ndofs_j);
            failure.map_or(Ok(()), Err)
        }
        Command::Dispersion => {
            require_kind(&cfg, ProblemKind::Dispersion)?;
            let rows = run_dispersion(&cfg)?;
            let mut buf = Vec::new();
            write_dispersion_csv(&rows, &mut buf)?;
            let p = write_output(&out, "dispersion.csv", &buf)?;
            let poles = rows.iter().filter(|r| r.eps.is_none()).count();
            eprintln!("wrote {} ({} rows, {poles} poles)", p.display(), rows.len());
            Ok(())
        }
        Command::MeshInfo => {
            print!("{}", mesh_info(&cfg)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
