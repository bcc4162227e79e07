use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::AppConfig;
use super::{EvalError, Result};
use crate::audio::{load_wav, resample, AudioBuffer, CANONICAL_RATE};
use crate::noise::{csn_from_buffer, mix_at_snr, ssn_generate, NoiseCondition, NoiseType};
use crate::siib::SiibReference;
use crate::ssdrc::ssdrc;

pub const UNPROCESSED: &str = "unprocessed";
pub const SSDRC: &str = "ssdrc";

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub name: String,
    pub audio: AudioBuffer,
}

/// Clean utterances at the canonical rate, sorted by name.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    utterances: Vec<Utterance>,
}

impl Corpus {
    pub fn new(mut utterances: Vec<Utterance>) -> Result<Self> {
        if utterances.is_empty() {
            return Err(EvalError::EmptyCorpus(PathBuf::new()));
        }
        utterances.sort_by(|a, b| a.name.cmp(&b.name));
        if let Some(w) = utterances.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(EvalError::Config(format!("duplicate utterance name '{}'", w[0].name)));
        }
        for u in utterances.iter_mut() {
            u.audio = resample(&u.audio, CANONICAL_RATE)?;
        }
        Ok(Self { utterances })
    }

    /// Every `*.wav` file directly inside `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let names = wav_names(dir)?;
        if names.is_empty() {
            return Err(EvalError::EmptyCorpus(dir.to_path_buf()));
        }
        let utterances = names
            .into_iter()
            .map(|name| {
                let audio = load_wav(dir.join(&name))?;
                Ok(Utterance { name, audio })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(utterances)
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn names(&self) -> Vec<String> {
        self.utterances.iter().map(|u| u.name.clone()).collect()
    }

    pub fn buffers(&self) -> Vec<AudioBuffer> {
        self.utterances.iter().map(|u| u.audio.clone()).collect()
    }

    fn longest_seconds(&self) -> f64 {
        self.utterances.iter().map(|u| u.audio.duration_seconds()).fold(0.0, f64::max)
    }
}

fn wav_names(dir: &Path) -> Result<Vec<String>> {
    let io = |source| EvalError::Io { path: dir.to_path_buf(), source };
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

/// Where the maskers come from. SSN is shaped after `ssn_reference`, or
/// after the corpus itself when that is empty.
#[derive(Debug, Clone, Default)]
pub struct NoiseSpec {
    pub ssn_reference: Vec<AudioBuffer>,
    /// A single-talker recording, at any rate.
    pub csn_recording: Option<AudioBuffer>,
}

impl NoiseSpec {
    /// Loads whatever the config points at. A CSN path given on the command
    /// line takes precedence over the config.
    pub fn from_config(config: &AppConfig, csn_override: Option<&Path>) -> Result<Self> {
        let ssn_reference = match &config.noise.ssn_reference {
            Some(dir) => Corpus::load_dir(dir)?.buffers(),
            None => Vec::new(),
        };
        let csn_path = csn_override.map(Path::to_path_buf).or_else(|| config.noise.csn_path.clone());
        let csn_recording = csn_path.map(load_wav).transpose()?;
        Ok(Self {
            ssn_reference,
            csn_recording,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub system: String,
    pub condition: NoiseCondition,
    /// One score per utterance, in corpus order.
    pub scores: Vec<f64>,
    pub mean: f64,
    pub median: f64,
}

impl Cell {
    fn new(system: String, condition: NoiseCondition, scores: Vec<f64>) -> Self {
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        Self {
            system,
            condition,
            mean,
            median: median(&scores),
            scores,
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Scores for every (system, condition) pair over one utterance set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    pub systems: Vec<String>,
    pub conditions: Vec<NoiseCondition>,
    /// Corpus manifest, in the order scores are stored.
    pub utterances: Vec<String>,
    /// System-major: all conditions of the first system, then the next.
    pub cells: Vec<Cell>,
    pub seed: u64,
    /// The configuration the report was produced with, as TOML.
    pub config: String,
}

impl ConditionReport {
    pub fn cell(&self, system: &str, condition: &NoiseCondition) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.system == system && c.condition == *condition)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

// SplitMix64 finaliser; spreads structured inputs over the seed space.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a, so the value does not depend on the std hasher.
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed for the noise crop of one utterance under one condition. It ignores
/// the system so every system is masked by the same noise segment.
fn mix_seed(seed: u64, utterance: &str, condition: usize) -> u64 {
    mix64(seed ^ mix64(name_hash(utterance) ^ mix64(condition as u64)))
}

struct Maskers {
    ssn: Option<AudioBuffer>,
    csn: Option<AudioBuffer>,
}

fn build_maskers(corpus: &Corpus, noise: &NoiseSpec, config: &AppConfig, seed: u64) -> Result<Maskers> {
    if config.uses(NoiseType::Csn) && noise.csn_recording.is_none() {
        return Err(EvalError::MissingCsn);
    }
    let ssn = if config.uses(NoiseType::Ssn) {
        let reference = if noise.ssn_reference.is_empty() {
            corpus.buffers()
        } else {
            noise.ssn_reference.clone()
        };
        let duration = config.noise.ssn_duration_s.max(corpus.longest_seconds() + 1.0);
        Some(ssn_generate(&reference, duration, mix64(seed ^ 0x55_53_4e))?)
    } else {
        None
    };
    let csn = if config.uses(NoiseType::Csn) {
        let recording = noise.csn_recording.as_ref().ok_or(EvalError::MissingCsn)?;
        let offset = config.noise.csn_offset_s;
        let duration = recording.duration_seconds() - offset;
        Some(csn_from_buffer(recording, duration, offset)?)
    } else {
        None
    };
    Ok(Maskers { ssn, csn })
}

enum System<'a> {
    Unprocessed,
    Ssdrc,
    External(&'a Path),
}

fn resolve_systems<'a>(systems: &[String], config: &'a AppConfig) -> Result<Vec<System<'a>>> {
    systems
        .iter()
        .map(|s| match s.as_str() {
            UNPROCESSED => Ok(System::Unprocessed),
            SSDRC => Ok(System::Ssdrc),
            other => config
                .grid
                .external
                .get(other)
                .map(|dir| System::External(dir.as_path()))
                .ok_or_else(|| EvalError::UnknownSystem(other.to_string())),
        })
        .collect()
}

fn process(system: &System, utterance: &Utterance, config: &AppConfig) -> Result<AudioBuffer> {
    match system {
        System::Unprocessed => Ok(utterance.audio.clone()),
        System::Ssdrc => Ok(ssdrc(&utterance.audio, &config.ssdrc_config())?),
        System::External(dir) => {
            let path = dir.join(&utterance.name);
            if !path.is_file() {
                return Err(EvalError::MissingExternal(path));
            }
            let audio = resample(&load_wav(&path)?, CANONICAL_RATE)?;
            Ok(fit_length(audio, utterance.audio.len()))
        }
    }
}

/// Truncates or zero-pads to `len` samples.
fn fit_length(buffer: AudioBuffer, len: usize) -> AudioBuffer {
    let rate = buffer.sample_rate();
    let mut s = buffer.into_samples();
    s.resize(len, 0.0);
    AudioBuffer::from_trusted(s, rate)
}

/// Runs every system over every utterance and condition.
///
/// Utterances are processed in parallel; scores are gathered in corpus order
/// and reduced sequentially, so the report depends only on the inputs.
pub fn run_grid(
    corpus: &Corpus,
    noise: &NoiseSpec,
    systems: &[String],
    config: &AppConfig,
    seed: u64,
) -> Result<ConditionReport> {
    config.validate()?;
    let resolved = resolve_systems(systems, config)?;
    let maskers = build_maskers(corpus, noise, config, seed)?;
    let conditions = &config.grid.conditions;

    // per_utterance[u][s][c]
    let per_utterance: Vec<Vec<Vec<f64>>> = corpus
        .utterances()
        .par_iter()
        .map(|u| {
            let reference = SiibReference::new(&u.audio, &config.siib)?;
            resolved
                .iter()
                .map(|system| {
                    let processed = process(system, u, config)?;
                    conditions
                        .iter()
                        .enumerate()
                        .map(|(ci, cond)| {
                            let masker = match cond.noise_type {
                                NoiseType::Ssn => maskers.ssn.as_ref(),
                                NoiseType::Csn => maskers.csn.as_ref(),
                            }
                            .expect("masker built for every condition in the config");
                            let mix = mix_at_snr(&processed, masker, cond.snr_db, mix_seed(seed, &u.name, ci))?;
                            Ok(reference.score(&mix.mixture)?.bits_per_second)
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(systems.len() * conditions.len());
    for (si, system) in systems.iter().enumerate() {
        for (ci, cond) in conditions.iter().enumerate() {
            let scores = per_utterance.iter().map(|u| u[si][ci]).collect();
            cells.push(Cell::new(system.clone(), *cond, scores));
        }
    }
    Ok(ConditionReport {
        systems: systems.to_vec(),
        conditions: conditions.clone(),
        utterances: corpus.names(),
        cells,
        seed,
        config: config.to_toml(),
    })
}

/// Loads the corpus and maskers named in `config` and runs the configured
/// systems.
pub fn run_grid_dir(
    corpus_dir: impl AsRef<Path>,
    csn_override: Option<&Path>,
    config: &AppConfig,
    seed: u64,
) -> Result<ConditionReport> {
    let corpus = Corpus::load_dir(corpus_dir)?;
    let noise = NoiseSpec::from_config(config, csn_override)?;
    run_grid(&corpus, &noise, &config.grid.systems, config, seed)
}
