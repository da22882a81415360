use clap::{Args, Parser, Subcommand};
use dect_cli::commands;
use dect_cli::config::{ExperimentConfig, ModelKind, TargetKind};
use dect_cli::error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dect",
    version,
    about = "Dual-energy CT algorithm extraction workbench",
    long_about = "Generates synthetic dual-energy studies with a hidden vendor \
                  oracle, fits pixel-wise models against the oracle's outputs, \
                  and reports how faithfully the hidden algorithms were recovered."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate phantom slices, vendor targets and optional DICOM studies
    Generate(PipelineArgs),
    /// Fit the configured model against the training slice
    Fit(PipelineArgs),
    /// Evaluate fitted models on the evaluation slices
    Evaluate(PipelineArgs),
    /// One-shot pipeline: generate, fit, evaluate, report
    Attack(PipelineArgs),
    /// List (and optionally dump) private payloads in a DICOM file
    Extract {
        /// DICOM file to inspect
        file: PathBuf,
        /// Minimum payload size to report, in bytes
        #[arg(long, default_value_t = 65536)]
        min_bytes: usize,
        /// Also decode the payloads into grid files in this directory
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Export a truth/prediction scatter CSV from two grid files
    Scatter {
        truth: PathBuf,
        prediction: PathBuf,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4096)]
        max_points: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// Experiment config (TOML); defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for all artifacts
    #[arg(long, default_value = "out")]
    out: PathBuf,

    #[arg(long)]
    seed: Option<u64>,

    /// Target kind: monoenergetic or iodine
    #[arg(long)]
    target: Option<String>,

    /// Comma-separated virtual energies, e.g. "40,60,80"
    #[arg(long)]
    kev: Option<String>,

    /// Model kind: ols, blend or reptree
    #[arg(long)]
    model: Option<String>,

    #[arg(long)]
    threshold_r: Option<f64>,

    #[arg(long)]
    threshold_ssim: Option<f64>,

    /// Registration coefficients "a,b,tx,c,d,ty" (output-to-export)
    #[arg(long)]
    registration: Option<String>,

    /// Phantom noise sigma in HU
    #[arg(long)]
    noise: Option<f64>,

    /// Route slices through DICOM export and re-extraction
    #[arg(long)]
    dicom_roundtrip: Option<bool>,
}

impl PipelineArgs {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(target) = &self.target {
            cfg.target.kind = match target.to_ascii_lowercase().as_str() {
                "monoenergetic" | "mono" => TargetKind::Monoenergetic,
                "iodine" => TargetKind::Iodine,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown target {other:?} (expected monoenergetic or iodine)"
                    )))
                }
            };
        }
        if let Some(kev) = &self.kev {
            cfg.target.kev = kev
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::Usage(format!("bad keV {part:?}: {e}")))
                })
                .collect::<Result<Vec<f64>, CliError>>()?;
        }
        if let Some(model) = &self.model {
            cfg.model.kind = model.parse::<ModelKind>().map_err(CliError::Usage)?;
        }
        if let Some(r) = self.threshold_r {
            cfg.thresholds.r = Some(r);
        }
        if let Some(s) = self.threshold_ssim {
            cfg.thresholds.ssim = Some(s);
        }
        if let Some(text) = &self.registration {
            let parts: Vec<f64> = text
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::Usage(format!("bad coefficient {part:?}: {e}")))
                })
                .collect::<Result<Vec<f64>, CliError>>()?;
            let coefficients: [f64; 6] = parts.try_into().map_err(|_| {
                CliError::Usage("registration needs exactly six coefficients a,b,tx,c,d,ty".into())
            })?;
            cfg.registration.coefficients = Some(coefficients);
        }
        if let Some(noise) = self.noise {
            cfg.phantom.noise_sigma_hu = noise;
        }
        if let Some(roundtrip) = self.dicom_roundtrip {
            cfg.dicom.roundtrip = roundtrip;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => {
            let cfg = args.config()?;
            let manifest = commands::cmd_generate(&cfg, &args.out)?;
            println!(
                "generated {} artifacts under {}",
                manifest.artifacts.len(),
                args.out.display()
            );
            Ok(())
        }
        Command::Fit(args) => {
            let cfg = args.config()?;
            let summaries = commands::cmd_fit(&cfg, &args.out)?;
            for summary in &summaries {
                println!("fitted {} -> {}", summary.label, summary.model_path.display());
                for line in summary.log.lines() {
                    println!("  {line}");
                }
            }
            Ok(())
        }
        Command::Evaluate(args) => {
            let cfg = args.config()?;
            let (table, failing) = commands::cmd_evaluate(&cfg, &args.out)?;
            print!("{}", table.to_text());
            if failing.is_empty() {
                Ok(())
            } else {
                Err(CliError::Thresholds { failing })
            }
        }
        Command::Attack(args) => {
            let cfg = args.config()?;
            match commands::cmd_attack(&cfg, &args.out) {
                Ok(table) => {
                    print!("{}", table.to_text());
                    println!(
                        "all {} rows pass (r >= {}, ssim >= {})",
                        table.len(),
                        cfg.threshold_r(),
                        cfg.threshold_ssim()
                    );
                    Ok(())
                }
                Err(err) => {
                    // The table was still written; point the operator at it.
                    if matches!(err, CliError::Thresholds { .. }) {
                        eprintln!("see {}/results/table.txt", args.out.display());
                    }
                    Err(err)
                }
            }
        }
        Command::Extract {
            file,
            min_bytes,
            dump,
        } => {
            let text = commands::cmd_extract(&file, min_bytes, dump.as_deref())?;
            print!("{text}");
            Ok(())
        }
        Command::Scatter {
            truth,
            prediction,
            out,
            max_points,
            seed,
        } => {
            let n = commands::cmd_scatter(&truth, &prediction, max_points, seed, &out)?;
            println!("wrote {n} pairs to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version print to stdout and exit 0; real usage errors
            // exit 2.
            let code = if err.use_stderr() { 2u8 } else { 0u8 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
