use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use lucid_core::audio::{load_wav, resample, save_wav};
use lucid_core::eval::{
    emit_report, keyword_score, median, report_metadata, run_grid_dir, AppConfig, ReportFormat,
};
use lucid_core::noise::mix_at_snr;
use lucid_core::siib::siib_gauss_with;
use lucid_core::ssdrc::ssdrc;

/// Speech intelligibility modification and evaluation.
#[derive(Parser, Debug)]
#[command(name = "lucid", version)]
struct Cli {
    /// TOML configuration with [ssdrc], [drc], [noise], [siib] and [grid] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for noise generation and cropping.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply spectral shaping and compression to one file.
    Enhance {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add noise to speech at a given SNR (active speech level).
    Mix {
        speech: PathBuf,
        noise: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        snr: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a degraded file against its clean reference, in bits/s.
    Score { clean: PathBuf, degraded: PathBuf },
    /// Run the system × masker × SNR grid over a corpus directory.
    Grid {
        #[arg(long)]
        corpus: PathBuf,
        /// Competing-speaker recording; overrides noise.csn_path.
        #[arg(long)]
        noise_csn: Option<PathBuf>,
        /// Report path; stdout when absent. Run metadata goes next to it as
        /// `<out>.meta.toml`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// System the relative gains are computed against; defaults to grid.baseline.
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
    },
    /// Keyword correction score of a listener transcript.
    Keywords {
        reference: Option<String>,
        transcript: Option<String>,
        /// File of `reference<TAB>transcript` lines to score in one go.
        #[arg(long, conflicts_with_all = ["reference", "transcript"])]
        batch: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<AppConfig> {
    match path {
        Some(p) => AppConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(AppConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Enhance { input, out } => {
            let x = load_wav(&input)?;
            let y = ssdrc(&x, &config.ssdrc_config())?;
            save_wav(&y, &out)?;
            println!("{} -> {} ({:.3} s)", input.display(), out.display(), y.duration_seconds());
        }
        Command::Mix {
            speech,
            noise,
            snr,
            out,
        } => {
            let s = load_wav(&speech)?;
            let n = resample(&load_wav(&noise)?, s.sample_rate())?;
            let m = mix_at_snr(&s, &n, snr, cli.seed)?;
            save_wav(&m.mixture, &out)?;
            println!(
                "snr_db={:.4} noise_scale={:.6} noise_offset={}",
                m.achieved_snr_db, m.noise_scale, m.noise_offset
            );
        }
        Command::Score { clean, degraded } => {
            let s = siib_gauss_with(&load_wav(&clean)?, &load_wav(&degraded)?, &config.siib)?;
            println!("bits_per_sec={:.4} channels={}", s.bits_per_second, s.channel_count);
        }
        Command::Grid {
            corpus,
            noise_csn,
            out,
            baseline,
            format,
        } => {
            let report = run_grid_dir(&corpus, noise_csn.as_deref(), &config, cli.seed)?;
            let baseline = baseline.unwrap_or_else(|| config.grid.baseline.clone());
            let text = emit_report(&report, format, Some(&baseline))?;
            match out {
                Some(path) => {
                    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                    let mut meta = path.clone().into_os_string();
                    meta.push(".meta.toml");
                    std::fs::write(&meta, report_metadata(&report))
                        .with_context(|| format!("writing {}", PathBuf::from(&meta).display()))?;
                }
                None => print!("{text}"),
            }
        }
        Command::Keywords {
            reference,
            transcript,
            batch,
        } => match (batch, reference) {
            (Some(path), _) => keywords_batch(&path)?,
            (None, Some(r)) => {
                let s = keyword_score(&r, transcript.as_deref().unwrap_or(""))?;
                println!("{}/{} {:.4}", s.correct, s.total, s.rate());
            }
            (None, None) => bail!("give a reference and transcript, or --batch <file>"),
        },
    }
    Ok(())
}

fn keywords_batch(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rates = Vec::new();
    let (mut correct, mut total) = (0, 0);
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (r, t) = line.split_once('\t').unwrap_or((line, ""));
        let s = keyword_score(r, t).with_context(|| format!("line {}", i + 1))?;
        println!("{}/{} {:.4}", s.correct, s.total, s.rate());
        rates.push(s.rate());
        correct += s.correct;
        total += s.total;
    }
    if rates.is_empty() {
        bail!("{} has no lines to score", path.display());
    }
    println!(
        "total {correct}/{total} mean_rate={:.4} median_rate={:.4}",
        rates.iter().sum::<f64>() / rates.len() as f64,
        median(&rates)
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
