//! `risim`: run surface and index-modulation experiments from JSON configs.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use risim_core::harness::{self, ExperimentConfig};
use risim_core::im_schemes::Scheme;
use risim_core::Error;

/// Environment variable that overrides the output directory of a config.
const OUT_DIR_ENV: &str = "RISIM_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "risim", version, about = "Surface coding and index-modulation link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment or scheme description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; beats the RISIM_OUT_DIR variable and the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bit error rate sweep over SNR.
    Ber(Common),
    /// Ergodic capacity sweep.
    Capacity(Common),
    /// Far-field pattern of a steered aperture.
    Pattern(Common),
    /// Time-coding spectra and harmonic patterns.
    Harmonics(Common),
    /// Dump every codeword of a scheme as CSV.
    Codebook(Common),
    /// Print the throughput of a scheme.
    Rate(Common),
}

fn out_dir(common: &Common, from_config: Option<&Path>) -> PathBuf {
    if let Some(o) = &common.out {
        return o.clone();
    }
    if let Some(env) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    from_config.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out"))
}

fn set_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?;
    }
    Ok(())
}

fn run_experiment(kind: &str, common: &Common) -> Result<(), Error> {
    set_threads(common.threads)?;
    let mut cfg = harness::parse_config(&common.config)?;
    if cfg.kind() != kind {
        return Err(Error::Config(format!(
            "{} describes a {} experiment, not {kind}",
            common.config.display(),
            cfg.kind()
        )));
    }
    if let Some(seed) = common.seed {
        if matches!(cfg, ExperimentConfig::Pattern(_)) {
            eprintln!("note: pattern experiments are deterministic; --seed is ignored");
        }
        cfg.set_seed(seed);
    }
    let dir = out_dir(common, cfg.output());
    let report = harness::execute(&cfg, &dir)?;
    for line in &report.lines {
        println!("{line}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn run_codebook(common: &Common) -> Result<(), Error> {
    let scheme = Scheme::new(harness::parse_scheme(&common.config)?)?;
    let explicit = common.out.is_some() || std::env::var_os(OUT_DIR_ENV).is_some_and(|v| !v.is_empty());
    if explicit {
        let dir = out_dir(common, None);
        std::fs::create_dir_all(&dir)?;
        let path = dir.join("codebook.csv");
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
        scheme.write_codebook_csv(&mut w)?;
        std::io::Write::flush(&mut w)?;
        println!("wrote {}", path.display());
    } else {
        scheme.write_codebook_csv(std::io::stdout().lock())?;
    }
    Ok(())
}

fn run_rate(common: &Common) -> Result<(), Error> {
    let cfg = harness::parse_scheme(&common.config)?;
    let rate = cfg.rate()?;
    println!("scheme {}", cfg.name());
    match cfg.bits_per_codeword() {
        Ok(bits) => println!("bits per codeword {bits}"),
        Err(_) => println!("bits per codeword n/a"),
    }
    println!("rate {rate}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ber(c) => run_experiment("ber", c),
        Command::Capacity(c) => run_experiment("capacity", c),
        Command::Pattern(c) => run_experiment("pattern", c),
        Command::Harmonics(c) => run_experiment("harmonics", c),
        Command::Codebook(c) => run_codebook(c),
        Command::Rate(c) => run_rate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
