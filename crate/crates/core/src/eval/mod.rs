//! Corpus-level evaluation: the (system × masker × SNR) grid, its reports, and
//! keyword scoring of listener transcripts.

mod config;
mod grid;
mod keywords;
mod report;

pub use config::{AppConfig, GridSettings, NoiseSettings};
pub use grid::{
    median, run_grid, run_grid_dir, Cell, ConditionReport, Corpus, NoiseSpec, Utterance, SSDRC, UNPROCESSED,
};
pub use keywords::{keyword_score, keywords, tokenize, KeywordScore, EXCLUDED_WORDS};
pub use report::{emit_report, report_metadata, write_report, ReportFormat, CSV_HEADER};

use std::path::PathBuf;

use thiserror::Error;

use crate::audio::AudioError;
use crate::noise::NoiseError;
use crate::siib::SiibError;
use crate::ssdrc::SsdrcError;

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Error, Debug)]
pub enum EvalError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Siib(#[from] SiibError),
    #[error(transparent)]
    Ssdrc(#[from] SsdrcError),
    #[error("cannot read {}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}", path.display())]
    Unwritable { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no WAV files in corpus {}", .0.display())]
    EmptyCorpus(PathBuf),
    #[error("unknown system '{0}'")]
    UnknownSystem(String),
    #[error("system '{0}' listed twice")]
    DuplicateSystem(String),
    #[error("CSN conditions requested but no competing-speaker recording was given")]
    MissingCsn,
    #[error("missing processed file {}", .0.display())]
    MissingExternal(PathBuf),
    #[error("reference '{0}' has no keywords")]
    EmptyReference(String),
}
