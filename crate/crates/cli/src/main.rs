//! `chanprobe`: characterize transceivers, generate link fixtures, simulate
//! readings and run extended channel probing from the command line.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chanprobe::catalog::{default_catalog, default_curves, fit_b2b, CurveSet, PltConfig, DEFAULT_FEC_THRESHOLD_BER};
use chanprobe::engine::{
    run_probing, run_sweep, Averaging, Baseline, CapOptions, FileSource, MeasurementSource, ProbingOptions,
    RegimeOptions, SimulatedSource,
};
use chanprobe::io::{
    load_catalog, load_curves, load_link, read_b2b_csv, write_json, write_margins_csv, write_measurements_csv,
    write_regime_csv,
};
use chanprobe::link::{fixtures, legacy_psd, LinkSpec, NoiseModel, PowerMode};
use chanprobe::regime::DEFAULT_TOLERANCE_DB;
use chanprobe::Error;

#[derive(Parser)]
#[command(name = "chanprobe", version, about = "Extended channel probing for optical lightpaths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a back-to-back curve from `osnr_db,q_db` samples.
    Characterize(CharacterizeArgs),
    /// Write the built-in test links as JSON files.
    Fixtures {
        /// Output directory (created if missing).
        dir: PathBuf,
    },
    /// Write the built-in configuration catalog and its curves.
    Catalog {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the default back-to-back curves here.
        #[arg(long)]
        curves_out: Option<PathBuf>,
    },
    /// Simulate a probing sweep and write the BER readings as CSV.
    Simulate(SimulateArgs),
    /// Run the probing pipeline against a simulated link or field readings.
    Probe(ProbeArgs),
}

#[derive(Args)]
struct CharacterizeArgs {
    /// CSV with header `osnr_db,q_db`.
    input: PathBuf,
    #[arg(long)]
    config_id: String,
    #[arg(long, default_value_t = DEFAULT_FEC_THRESHOLD_BER)]
    fec_threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Psd,
    Power,
}

#[derive(Args)]
struct StimulusArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Psd)]
    mode: ModeArg,
    /// mW/GHz; defaults to the link's design PSD, else 0 dBm over 50 GHz.
    #[arg(long, allow_negative_numbers = true)]
    psd: Option<f64>,
    /// dBm, used with `--mode power`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    power: f64,
}

#[derive(Args)]
struct InventoryArgs {
    /// JSON catalog; defaults to the built-in one.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// JSON curve set; defaults to synthetic curves for the catalog.
    #[arg(long)]
    curves: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long, default_value_t = 1)]
    repeats: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Std of the Gaussian Q perturbation per reading, dB.
    #[arg(long, default_value_t = 0.0)]
    sigma_db: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    link: PathBuf,
    #[command(flatten)]
    stimulus: StimulusArgs,
    #[command(flatten)]
    inventory: InventoryArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    /// Link JSON to simulate.
    #[arg(long, conflicts_with = "measurements", required_unless_present = "measurements")]
    link: Option<PathBuf>,
    /// Field readings, CSV `config_id,mode,ber`.
    #[arg(long)]
    measurements: Option<PathBuf>,
    #[command(flatten)]
    stimulus: StimulusArgs,
    #[command(flatten)]
    inventory: InventoryArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Penalty threshold for the symbol-rate cap, dB.
    #[arg(long, default_value_t = 2.0)]
    threshold_db: f64,
    /// Compare each rate group with the lowest-rate group instead of the running mean.
    #[arg(long)]
    lowest_group_baseline: bool,
    /// Extra system margin subtracted from every implementation margin, dB.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    margin_db: f64,
    /// Average accepted estimates with the median instead of the mean.
    #[arg(long)]
    median: bool,
    #[arg(long)]
    no_verify: bool,
    /// Also classify the operation regime.
    #[arg(long)]
    regime: bool,
    /// Regime reference power, dBm; defaults to the equalization probe's launch power.
    #[arg(long, allow_negative_numbers = true)]
    reference_power: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE_DB)]
    regime_tolerance_db: f64,
    /// Report JSON; margins and regime CSVs are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::PowerBudget { .. } => 4,
            Error::Characterization { .. }
            | Error::Extrapolation { .. }
            | Error::Inversion { .. }
            | Error::Engine(_)
            | Error::Regime(_) => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn context(prefix: impl std::fmt::Display) -> impl FnOnce(Failure) -> Failure {
    move |f| Failure { code: f.code, message: format!("{prefix}: {}", f.message) }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn inventory(args: &InventoryArgs) -> Result<(Vec<PltConfig>, CurveSet), Failure> {
    let catalog = match &args.catalog {
        Some(p) => load_catalog(p).map_err(Failure::from).map_err(context(p.display()))?,
        None => default_catalog(),
    };
    let curves = match &args.curves {
        Some(p) => load_curves(p).map_err(Failure::from).map_err(context(p.display()))?,
        None => default_curves(&catalog)?,
    };
    curves.ensure_covers(&catalog)?;
    Ok((catalog, curves))
}

fn power_mode(args: &StimulusArgs, link: Option<&LinkSpec>) -> Result<PowerMode, Failure> {
    match args.mode {
        ModeArg::Psd => {
            let psd = match (args.psd, link.and_then(|l| l.design_psd)) {
                (Some(p), _) | (None, Some(p)) => p,
                (None, None) => legacy_psd(0.0, 50.0)?,
            };
            if !(psd > 0.0 && psd.is_finite()) {
                return Err(usage(format!("--psd must be positive, got {psd}")));
            }
            Ok(PowerMode::ConstantPsd { psd })
        }
        ModeArg::Power => {
            if !args.power.is_finite() {
                return Err(usage("--power must be finite"));
            }
            Ok(PowerMode::ConstantPower { power: args.power })
        }
    }
}

fn noise_model(args: &NoiseArgs) -> Result<NoiseModel, Failure> {
    if args.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    if !(args.sigma_db >= 0.0 && args.sigma_db.is_finite()) {
        return Err(usage(format!("--sigma-db must be non-negative, got {}", args.sigma_db)));
    }
    Ok(NoiseModel::new(args.sigma_db, args.seed))
}

fn characterize(args: CharacterizeArgs) -> Result<(), Failure> {
    let samples =
        read_b2b_csv(File::open(&args.input)?).map_err(Failure::from).map_err(context(args.input.display()))?;
    let curve = fit_b2b(&args.config_id, &samples, args.fec_threshold)
        .map_err(Failure::from)
        .map_err(context(format!("config `{}`", args.config_id)))?;
    write_json(output(args.out.as_deref())?, &curve)?;
    Ok(())
}

fn write_fixtures(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    for link in fixtures() {
        let path = dir.join(format!("{}.json", link.name));
        write_json(BufWriter::new(File::create(&path)?), &link)?;
    }
    Ok(())
}

fn catalog(out: Option<PathBuf>, curves_out: Option<PathBuf>) -> Result<(), Failure> {
    let catalog = default_catalog();
    write_json(output(out.as_deref())?, &catalog)?;
    if let Some(path) = curves_out {
        write_json(BufWriter::new(File::create(path)?), &default_curves(&catalog)?)?;
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let link = load_link(&args.link).map_err(Failure::from).map_err(context(args.link.display()))?;
    let (catalog, curves) = inventory(&args.inventory)?;
    let mode = power_mode(&args.stimulus, Some(&link))?;
    let noise = noise_model(&args.noise)?;
    let source = SimulatedSource::new(link, curves.clone(), noise);
    let readings = run_sweep(&source, &catalog, &curves, mode, args.noise.repeats)?;
    write_measurements_csv(output(args.out.as_deref())?, &readings)?;
    Ok(())
}

fn probe(args: ProbeArgs) -> Result<(), Failure> {
    let (catalog, curves) = inventory(&args.inventory)?;
    let noise = noise_model(&args.noise)?;
    let link = match &args.link {
        Some(path) => Some(load_link(path).map_err(Failure::from).map_err(context(path.display()))?),
        None => None,
    };
    let source: Box<dyn MeasurementSource> = match (&link, &args.measurements) {
        (Some(link), _) => Box::new(SimulatedSource::new(link.clone(), curves.clone(), noise)),
        (None, Some(path)) => {
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("field").to_string();
            let file = FileSource::from_reader(name, File::open(path)?)
                .map_err(Failure::from)
                .map_err(context(path.display()))?;
            Box::new(file)
        }
        (None, None) => return Err(usage("either --link or --measurements is required")),
    };
    let mode = power_mode(&args.stimulus, link.as_ref())?;
    if !(args.threshold_db >= 0.0 && args.threshold_db.is_finite()) {
        return Err(usage("--threshold-db must be non-negative"));
    }
    if !args.margin_db.is_finite() {
        return Err(usage("--margin-db must be finite"));
    }
    if args.regime_tolerance_db.is_nan() || args.regime_tolerance_db < 0.0 {
        return Err(usage("--regime-tolerance-db must be non-negative"));
    }

    let options = ProbingOptions {
        mode,
        repeats: args.noise.repeats,
        cap: CapOptions {
            threshold_db: args.threshold_db,
            baseline: if args.lowest_group_baseline { Baseline::LowestGroup } else { Baseline::RunningMean },
        },
        averaging: if args.median { Averaging::Median } else { Averaging::Mean },
        extra_system_margin_db: args.margin_db,
        verify: !args.no_verify,
        regime: args
            .regime
            .then_some(RegimeOptions { reference_power: args.reference_power, tolerance_db: args.regime_tolerance_db }),
    };
    let report = run_probing(source.as_ref(), &catalog, &curves, &options)?;

    write_json(output(args.out.as_deref())?, &report)?;
    if let Some(out) = &args.out {
        write_margins_csv(BufWriter::new(File::create(sibling(out, "margins.csv"))?), &report.margins)?;
        if let Some(regime) = &report.regime {
            write_regime_csv(BufWriter::new(File::create(sibling(out, "regime.csv"))?), &regime.input)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Characterize(args) => characterize(args),
        Command::Fixtures { dir } => write_fixtures(&dir),
        Command::Catalog { out, curves_out } => catalog(out, curves_out),
        Command::Simulate(args) => simulate(args),
        Command::Probe(args) => probe(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
