use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mlplast_cli::config::{parse_config, Case, Overrides};
use mlplast_cli::run::{run_case, sweep, write_sweep_csv, RunError, SweepSpec};

/// Meshless elasto-plastic plane-strain solver.
///
/// Exit status: 0 on success, 1 for configuration errors, 2 when the solver fails.
#[derive(Debug, Parser)]
#[command(name = "mlplast", version)]
struct Cli {
    /// Benchmark preset: elastic, perfect-plastic, linear-hardening, irregular or custom.
    #[arg(long)]
    case: Option<Case>,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Nominal node spacing [mm].
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of equal load increments.
    #[arg(long = "n-load")]
    n_load: Option<usize>,
    /// Inner-wall pressure [GPa].
    #[arg(long)]
    pressure: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Repeat the run along one axis, e.g. `h=4,2,1`, `seed=1..10`, `n-load=5,10,25`.
    #[arg(long)]
    sweep: Option<String>,
    /// Also write the stiffness matrix in Matrix Market format.
    #[arg(long = "export-matrix")]
    export_matrix: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let overrides = Overrides {
        case: cli.case,
        spacing: cli.h,
        seed: cli.seed,
        load_steps: cli.n_load,
        pressure: cli.pressure,
        out_dir: cli.out,
        export_matrix: cli.export_matrix,
    };
    let spec = cli.sweep.as_deref().map(str::parse::<SweepSpec>).transpose()?;
    let cfg = parse_config(cli.config.as_deref(), &overrides)?;

    if let Some(spec) = spec {
        let rows = sweep(&cfg, &spec);
        std::fs::create_dir_all(&cfg.out_dir).map_err(|e| RunError::Output {
            path: cfg.out_dir.clone(),
            source: e.into(),
        })?;
        let path = cfg.out_dir.join("sweep.csv");
        write_sweep_csv(&path, spec.axis, &rows)?;
        let failed = rows.iter().filter(|r| r.result.is_err()).count();
        println!("sweep={}", path.display());
        println!("runs={}", rows.len());
        println!("failed_runs={failed}");
        return Ok(());
    }

    let outcome = run_case(&cfg)?;
    print!("{}", outcome.summary.to_text());
    println!("out_dir={}", cfg.out_dir.display());
    Ok(())
}
