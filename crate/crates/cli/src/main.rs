use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use hetmfgp_cli::{Pipeline, PipelineConfig, Stage};

#[derive(Parser)]
#[command(
    name = "hetmfgp",
    version,
    about = "Heterogeneous multi-fidelity melt-pool surrogates"
)]
struct Cli {
    /// Pipeline configuration (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Recompute this command's artifacts even when cached.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the effective configuration as JSON.
    ShowConfig,
    /// Simulate the HF/LF training sets and the shared test set.
    GenData,
    /// Fit the LF beam parameters to the HF factorial.
    CalibrateLf,
    /// Fit the HF-to-LF input maps.
    FitMap,
    /// Train the HF-only GPs and the multi-fidelity models.
    Train,
    /// Predict both outputs at the HF inputs listed in a CSV file.
    Predict {
        /// CSV whose leading columns are P,v,mdot,gsh,H.
        #[arg(long)]
        input: PathBuf,
        /// Destination CSV; `<out>/predictions.csv` by default.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Which seed repeat's models to use.
        #[arg(long, default_value_t = 0)]
        repeat: usize,
    },
    /// Score both models on the test set, averaged over repeats.
    Evaluate,
    /// Sobol indices of the trained surrogates.
    Sobol,
    /// Semi-ellipse melt-pool boundary with ±2σ bands.
    Ellipse,
    /// Averaged metrics over a grid of data sizes and λ values.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        n_hf: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        n_lf: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
    },
}

impl Command {
    fn stage(&self) -> Option<Stage> {
        Some(match self {
            Command::ShowConfig => return None,
            Command::GenData => Stage::GenData,
            Command::CalibrateLf => Stage::CalibrateLf,
            Command::FitMap => Stage::FitMap,
            Command::Train => Stage::Train,
            Command::Predict { .. } => Stage::Predict,
            Command::Evaluate => Stage::Evaluate,
            Command::Sobol => Stage::Sobol,
            Command::Ellipse => Stage::Ellipse,
            Command::Sweep { .. } => Stage::Sweep,
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Command::ShowConfig = cli.command {
        println!("{}", config.to_json());
        return Ok(());
    }
    let force = if cli.force { cli.command.stage() } else { None };
    let pipeline = Pipeline::new(config, cli.out, force)?;
    let out = pipeline.out_dir().to_path_buf();
    match cli.command {
        Command::ShowConfig => unreachable!(),
        Command::GenData => pipeline.gen_data()?,
        Command::CalibrateLf => {
            let cal = pipeline.calibrate_lf()?.value;
            println!(
                "phi = {:.6}  alpha = {:.6}  R2(depth) = {:.4}  R2(width) = {:.4}{}",
                cal.sigma_factor,
                cal.absorptivity,
                cal.r_squared_depth,
                cal.r_squared_width,
                if cal.clamped {
                    "  (clamped to bounds)"
                } else {
                    ""
                }
            );
        }
        Command::FitMap => {
            let maps = pipeline.fit_maps()?;
            for m in &maps {
                let r = &m.value;
                println!(
                    "{}: loss {:.4e} -> {:.4e} after {} iterations",
                    r.map.output,
                    r.initial_loss,
                    r.final_loss,
                    r.iterations()
                );
            }
        }
        Command::Train => pipeline.train()?,
        Command::Predict {
            input,
            output,
            repeat,
        } => {
            let dest = output.unwrap_or_else(|| out.join("predictions.csv"));
            pipeline.predict(&input, &dest, repeat)?;
            println!("{}", dest.display());
        }
        Command::Evaluate => {
            let report = pipeline.evaluate()?;
            for m in &report.outputs {
                print!(
                    "{:<6} GP        L2 {:.4e}  sigma {:.4e}",
                    m.output, m.gp.relative_l2, m.gp.sigma_avg
                );
                match &m.het_mfgp {
                    Some(h) => println!(
                        "  | Het-MFGP  L2 {:.4e}  sigma {:.4e}",
                        h.relative_l2, h.sigma_avg
                    ),
                    None => println!(),
                }
            }
        }
        Command::Sobol => {
            for s in pipeline.sobol()? {
                println!("{} (n = {})", s.names.join(" "), s.n);
                println!("  S1 {:?}", s.first_order);
                println!("  ST {:?}", s.total_order);
            }
        }
        Command::Ellipse => {
            pipeline.ellipse()?;
            println!("{}", out.join("ellipse.csv").display());
        }
        Command::Sweep { n_hf, n_lf, lambda } => {
            let s = pipeline.config().sweep.clone();
            let rows = pipeline.sweep(
                &n_hf.unwrap_or(s.n_hf),
                &n_lf.unwrap_or(s.n_lf),
                &lambda.unwrap_or(s.lambda),
            )?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!(
                "{} rows written to {}",
                rows.len(),
                out.join("sweep.csv").display()
            );
            if failed > 0 {
                eprintln!("{failed} rows failed; see the error column");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
