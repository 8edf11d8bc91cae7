//! `noonring`: runs the phase sweep, wavelength map, incoherent control and
//! rate calibration from a config file and writes CSV results.
//!
//! Exit codes: 0 success, 2 usage or config error, 3 simulation error,
//! 4 calibration did not converge.

mod config;

use std::f64::consts::{PI, TAU};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use noonring_core::detector::{
    estimate_accidentals, generate_timetags, histogram, integrate_peak, read_timetags,
    write_timetags,
};
use noonring_core::experiment::{
    channel_rates, phase_grid, run_incoherent_control, run_phase_sweep, run_wavelength_map,
    wavelength_grid,
};
use noonring_core::pairgen::{calibrate_rate_model, PairgenError};
use noonring_core::{derive_seed, AnalysisSettings};
use thiserror::Error;

use config::{ConfigError, FileConfig};

const SEED_ENV: &str = "NOONRING_SEED";
const STREAM_TAGS: u64 = 100;

#[derive(Parser)]
#[command(name = "noonring", version, about = "Ring-resonator N00N-state experiment simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical and two-photon fringes over a phase sweep.
    PhaseSweep(SweepArgs),
    /// Peak coincidences over a grid of pump wavelengths.
    WavelengthMap(MapArgs),
    /// Phase sweep with pump 2 detuned by one FSR.
    Control(SweepArgs),
    /// Fit the pair and noise rate constants to the CAR and dead-time targets.
    Calibrate(CommonArgs),
    /// Simulate one phase point and write its time tags and delay histogram.
    Tags(TagsArgs),
    /// Histogram a time-tag file.
    Histogram(HistogramArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides NOONRING_SEED and the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 25)]
    points: usize,
    #[arg(long, default_value_t = TAU, allow_negative_numbers = true)]
    theta_max: f64,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scan width around each pump, nm.
    #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
    span: f64,
    /// Grid step, nm.
    #[arg(long, default_value_t = 0.02, allow_negative_numbers = true)]
    step: f64,
    /// Interferometer phase, rad.
    #[arg(long, default_value_t = PI, allow_negative_numbers = true)]
    theta: f64,
}

#[derive(Args)]
struct TagsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = PI, allow_negative_numbers = true)]
    theta: f64,
    /// Acquisition time, s.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
}

#[derive(Args)]
struct HistogramArgs {
    /// Time-tag file (`A<TAB>ps` / `B<TAB>ps` lines).
    #[arg(long)]
    tags: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Optional config for the analysis settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("{0}")]
    Calibration(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Simulation(_) => 3,
            CliError::Calibration(_) => 4,
        }
    }
}

fn sim<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Simulation(e.to_string())
}

/// Provenance recorded at the top of every output file.
struct RunManifest {
    command: &'static str,
    config_path: String,
    out_dir: PathBuf,
    seed: u64,
    seed_source: &'static str,
    timestamp: u64,
    config_digest: String,
}

impl RunManifest {
    fn header(&self) -> String {
        format!(
            "# noonring {}\n# config={}\n# out={}\n# seed={} ({})\n# timestamp_unix={}\n# config_digest=sha256:{}\n",
            self.command,
            self.config_path,
            self.out_dir.display(),
            self.seed,
            self.seed_source,
            self.timestamp,
            self.config_digest
        )
    }

    fn write(&self, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        let mut bytes = self.header().into_bytes();
        bytes.extend_from_slice(body);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Simulation(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Loads the config, resolves the seed and prepares the output directory.
fn prepare(command: &'static str, args: &CommonArgs) -> Result<(FileConfig, RunManifest), CliError> {
    let mut cfg = FileConfig::load(&args.config)?;
    let (seed, seed_source) = match (args.seed, std::env::var(SEED_ENV)) {
        (Some(s), _) => (s, "--seed"),
        (None, Ok(v)) => (
            v.trim()
                .parse()
                .map_err(|e| CliError::Usage(format!("{SEED_ENV}=`{v}` is not an integer: {e}")))?,
            SEED_ENV,
        ),
        (None, Err(_)) => (cfg.circuit.base_seed, "run.base_seed"),
    };
    cfg.circuit.base_seed = seed;
    let manifest = manifest(command, args.config.display().to_string(), &args.out, seed, seed_source, cfg.digest())?;
    Ok((cfg, manifest))
}

fn manifest(
    command: &'static str,
    config_path: String,
    out: &Path,
    seed: u64,
    seed_source: &'static str,
    config_digest: String,
) -> Result<RunManifest, CliError> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", out.display())))?;
    Ok(RunManifest {
        command,
        config_path,
        out_dir: out.to_path_buf(),
        seed,
        seed_source,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config_digest,
    })
}

fn sweep_phases(args: &SweepArgs) -> Result<Vec<f64>, CliError> {
    if args.points < 5 {
        return Err(CliError::Usage(format!(
            "insufficient points: --points must be at least 5, got {}",
            args.points
        )));
    }
    if !(args.theta_max.is_finite() && args.theta_max > 0.0) {
        return Err(CliError::Usage(format!("--theta-max must be > 0, got {}", args.theta_max)));
    }
    Ok(phase_grid(args.points, args.theta_max))
}

fn print_footer(body: &[u8]) {
    for line in String::from_utf8_lossy(body).lines() {
        if let Some(kv) = line.strip_prefix('#') {
            println!("{kv}");
        }
    }
}

fn cmd_phase_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let phases = sweep_phases(args)?;
    let (cfg, manifest) = prepare("phase-sweep", &args.common)?;
    let result = run_phase_sweep(&cfg.circuit, &phases).map_err(sim)?;
    let mut body = Vec::new();
    result.write_csv(&mut body).map_err(sim)?;
    let path = manifest.write("phase_sweep.csv", &body)?;
    print_footer(&body);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_wavelength_map(args: &MapArgs) -> Result<(), CliError> {
    let (cfg, manifest) = prepare("wavelength-map", &args.common)?;
    let grid = |centre| wavelength_grid(centre, args.span, args.step).map_err(|e| CliError::Usage(e.to_string()));
    let g1 = grid(cfg.circuit.pumps.lambda1)?;
    let g2 = grid(cfg.circuit.pumps.lambda2)?;
    let map = run_wavelength_map(&cfg.circuit, &g1, &g2, args.theta).map_err(sim)?;
    let mut body = Vec::new();
    map.write_csv(&mut body).map_err(sim)?;
    let path = manifest.write("wavelength_map.csv", &body)?;
    print_footer(&body);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_control(args: &SweepArgs) -> Result<(), CliError> {
    let phases = sweep_phases(args)?;
    let (cfg, manifest) = prepare("control", &args.common)?;
    let result = run_incoherent_control(&cfg.circuit, &phases).map_err(sim)?;
    let mut body = Vec::new();
    result.write_csv(&mut body).map_err(sim)?;
    let path = manifest.write("control.csv", &body)?;
    print_footer(&body);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_calibrate(args: &CommonArgs) -> Result<(), CliError> {
    let (cfg, manifest) = prepare("calibrate", args)?;
    let c = &cfg.circuit;
    let outcome = calibrate_rate_model(&c.rates, &c.pumps, &c.ring, &c.detection(), &cfg.calibration);
    let print_trace = |trace: &[noonring_core::pairgen::CalibrationStep]| {
        for s in trace {
            println!(
                "round={} gamma_pair={} gamma_self={} car={} dead_time_loss_a={}",
                s.round, s.gamma_pair, s.gamma_self, s.car, s.loss_a
            );
        }
    };
    match outcome {
        Ok(cal) => {
            print_trace(&cal.trace);
            let mut fitted = cfg.clone();
            fitted.circuit.rates = cal.model.clone();
            let in_band = (cal.car - cfg.calibration.car).abs() <= 0.2 * cfg.calibration.car;
            let mut body = fitted.to_text();
            body.push_str(&format!(
                "#fitted_gamma_pair={}\n#fitted_gamma_self={}\n#fitted_car={}\n#fitted_dead_time_loss_a={}\n#car_in_band={}\n#rounds={}\n",
                cal.model.gamma_pair, cal.model.gamma_self, cal.car, cal.loss_a, in_band, cal.trace.len()
            ));
            let path = manifest.write("calibrated.conf", body.as_bytes())?;
            print_footer(body.as_bytes());
            println!("wrote {}", path.display());
            Ok(())
        }
        Err(PairgenError::NonConvergence { reason, car, target_car, loss, target_loss, trace }) => {
            print_trace(&trace);
            Err(CliError::Calibration(format!(
                "calibration did not converge: {reason}\n  car residual: {} (CAR {car}, target {target_car})\n  dead-time loss residual: {} (loss {loss}, target {target_loss})",
                car - target_car,
                loss - target_loss
            )))
        }
        Err(e @ PairgenError::InvalidParameter(..)) => Err(CliError::Usage(e.to_string())),
    }
}

fn cmd_tags(args: &TagsArgs) -> Result<(), CliError> {
    if !(args.theta.is_finite()) {
        return Err(CliError::Usage(format!("--theta must be finite, got {}", args.theta)));
    }
    if !(args.duration.is_finite() && args.duration > 0.0) {
        return Err(CliError::Usage(format!("--duration must be > 0, got {}", args.duration)));
    }
    let (cfg, manifest) = prepare("tags", &args.common)?;
    let c = &cfg.circuit;
    let rates = channel_rates(args.theta, c).map_err(sim)?;
    let (da, db) = c.channel_detectors();
    let seed = derive_seed(c.base_seed, STREAM_TAGS, 0);
    let (a, b) = generate_timetags(rates.split_pairs, rates.singles, args.duration, &da, &db, seed).map_err(sim)?;
    let mut tags = Vec::new();
    write_timetags(&mut tags, &a, &b).map_err(sim)?;
    let tags_path = manifest.write("timetags.txt", &tags)?;
    let body = histogram_body(&a, &b, &c.analysis)?;
    let hist_path = manifest.write("histogram.csv", &body)?;
    print_footer(&body);
    println!("wrote {}\nwrote {}", tags_path.display(), hist_path.display());
    Ok(())
}

fn histogram_body(
    a: &noonring_core::detector::TimeTagStream,
    b: &noonring_core::detector::TimeTagStream,
    an: &AnalysisSettings,
) -> Result<Vec<u8>, CliError> {
    let hist = histogram(a, b, an.bin_width, an.delay_range).map_err(sim)?;
    let peak = integrate_peak(&hist, an.window).map_err(sim)?;
    let acc = estimate_accidentals(&hist, an.accidental_offset, an.accidental_span, an.window).map_err(sim)?;
    let mut body = Vec::new();
    hist.write_csv(&mut body).map_err(sim)?;
    body.extend_from_slice(
        format!(
            "#tags_a={}\n#tags_b={}\n#peak_counts={peak}\n#accidental_mean={}\n#accidental_std={}\n",
            a.len(),
            b.len(),
            acc.mean,
            acc.std
        )
        .as_bytes(),
    );
    Ok(body)
}

fn cmd_histogram(args: &HistogramArgs) -> Result<(), CliError> {
    let (cfg, config_path) = match &args.config {
        Some(p) => (FileConfig::load(p)?, p.display().to_string()),
        None => (FileConfig::default(), "(defaults)".to_string()),
    };
    let file = fs::File::open(&args.tags)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", args.tags.display())))?;
    let (a, b) = read_timetags(BufReader::new(file)).map_err(|e| CliError::Usage(e.to_string()))?;
    let seed = cfg.circuit.base_seed;
    let manifest = manifest("histogram", config_path, &args.out, seed, "run.base_seed", cfg.digest())?;
    let body = histogram_body(&a, &b, &cfg.circuit.analysis)?;
    let path = manifest.write("histogram.csv", &body)?;
    print_footer(&body);
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::PhaseSweep(a) => cmd_phase_sweep(a),
        Command::WavelengthMap(a) => cmd_wavelength_map(a),
        Command::Control(a) => cmd_control(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Tags(a) => cmd_tags(a),
        Command::Histogram(a) => cmd_histogram(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
