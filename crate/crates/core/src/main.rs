use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hemoflow::hemodynamics::{compare_models, read_stats_csv, write_comparison_csv};
use hemoflow::pipeline::{Pipeline, RunConfig};
use hemoflow::rheology::newtonian_equivalent;
use hemoflow::Error;

#[derive(Parser)]
#[command(
    name = "hemoflow",
    version,
    about = "Blood rheology, synthetic 4D flow MRI and hemodynamic biomarkers"
)]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the power law at a hematocrit and print its Newtonian equivalents.
    FitRheology {
        /// Hematocrit in percent; defaults to the configured value.
        #[arg(long)]
        hct: Option<f64>,
    },
    /// Generate the flow phantom and noisy k-space for every cardiac phase.
    SynthMri,
    /// Reconstruct images from stored k-space.
    Reconstruct,
    /// Decode velocities and evaluate WSS, OSI and energy loss per model.
    Estimate,
    /// Drive the outlet Windkessel with the ground-truth flow.
    Windkessel,
    /// Compare model statistics against the power-law reference.
    Compare {
        /// Statistics CSV of the reference model.
        #[arg(long, requires = "other")]
        reference: Option<PathBuf>,
        /// Statistics CSV of the compared model.
        #[arg(long, requires = "reference")]
        other: Option<PathBuf>,
        /// Output CSV; defaults to `compare/<other file name>` in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render tables and charts from the stored statistics.
    Report,
    /// Run every stage in order and write the manifest.
    Run,
}

fn load_config(cli: &Cli) -> hemoflow::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    Ok(config)
}

fn execute(cli: Cli) -> hemoflow::Result<()> {
    let mut config = load_config(&cli)?;
    if let Command::FitRheology { hct: Some(hct) } = cli.command {
        config.rheology.hct = hct;
    }
    let out = config.output.clone();
    let pipeline = Pipeline::new(config, out);
    match cli.command {
        Command::FitRheology { .. } => {
            let fit = pipeline.fit_rheology()?;
            let pl = fit.power_law;
            let wide = newtonian_equivalent(&pl, 0.0, 2800.0)?;
            println!("hct = {}", pl.hct);
            println!("m = {:.6e} Pa·s^n", pl.m);
            println!("n = {:.6}", pl.n);
            println!(
                "newtonian fit 1 [{}, {}] 1/s: {:.4} mPa·s",
                fit.range[0],
                fit.range[1],
                fit.newtonian_fit * 1e3
            );
            println!("newtonian fit 2 [0, 2800] 1/s: {:.4} mPa·s", wide.mu * 1e3);
        }
        Command::SynthMri => pipeline.synth_mri()?,
        Command::Reconstruct => pipeline.reconstruct()?,
        Command::Estimate => pipeline.estimate()?,
        Command::Windkessel => {
            if !pipeline.out.join("mesh.vtk").is_file() {
                pipeline.prepare_flow()?;
            }
            pipeline.windkessel()?
        }
        Command::Compare {
            reference: Some(reference),
            other: Some(other),
            output,
        } => {
            let cmp = compare_models(&read_stats_csv(&reference)?, &read_stats_csv(&other)?)?;
            let output = match output {
                Some(p) => p,
                None => {
                    let dir = pipeline.out.join("compare");
                    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                    dir.join(other.file_name().unwrap_or_default())
                }
            };
            write_comparison_csv(&output, &cmp)?;
            println!("{}", output.display());
        }
        Command::Compare { .. } => pipeline.compare()?,
        Command::Report => pipeline.report()?,
        Command::Run => {
            let manifest = pipeline.run()?;
            println!("{} files written to {}", manifest.files.len(), pipeline.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
