use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use genrec::config::{FluxName, Model, Overrides, RawConfig};
use genrec::run_experiment;

#[derive(Debug, Parser)]
#[command(name = "genrec", version, about = "Finite-volume solver for the two-species kinetic generation-recombination system")]
struct Cli {
    /// TOML configuration file; keys left out fall back to the test preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reference experiment supplying the defaults.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    test: Option<u8>,
    #[arg(long, value_enum)]
    flux: Option<FluxName>,
    #[arg(long, value_parser = parse_model)]
    model: Option<Model>,
    /// Number of spatial cells N (odd).
    #[arg(long)]
    nx: Option<usize>,
    /// Half the number of velocity cells, L.
    #[arg(long)]
    nv: Option<usize>,
    #[arg(long)]
    vstar: Option<f64>,
    /// Time step (initial step for the nonlinear model).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    #[arg(long)]
    tfinal: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
    #[arg(long)]
    emit_plot_script: bool,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn parse_model(s: &str) -> Result<Model, String> {
    match s {
        "linear" => Ok(Model::Linear),
        "nonlinear" => Ok(Model::Nonlinear),
        _ => Err(format!("expected linear or nonlinear, got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let raw = match &cli.config {
        Some(path) => RawConfig::from_path(path),
        None => Ok(RawConfig::default()),
    };
    let overrides = Overrides {
        test: cli.test,
        flux: cli.flux,
        model: cli.model,
        nx: cli.nx,
        half_nv: cli.nv,
        v_star: cli.vstar,
        dt: cli.dt,
        dt_max: cli.dt_max,
        t_final: cli.tfinal,
        seed: cli.seed,
        output_dir: cli.out,
        snapshots: cli.snapshots,
        emit_plot_script: cli.emit_plot_script,
    };
    let cfg = match raw.and_then(|r| r.resolve(&overrides)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    match run_experiment(&cfg) {
        Ok(summary) => {
            println!("wrote {}", cfg.output_dir);
            print!("{}", summary.to_text());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
