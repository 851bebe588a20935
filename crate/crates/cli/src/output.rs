use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use noiseband::pipeline::StageError;
use noiseband::ErrorCategory;

use crate::{Cli, Format};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_EMPTY_GROUP: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Stage(StageError),
    Io { path: PathBuf, source: std::io::Error },
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Stage(e) => match e.category() {
                ErrorCategory::Input => EXIT_INPUT,
                ErrorCategory::Numerical => EXIT_NUMERICAL,
                ErrorCategory::EmptyGroup => EXIT_EMPTY_GROUP,
            },
            Self::Io { .. } | Self::Usage(_) => EXIT_INPUT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Stage(e) => write!(f, "{e}"),
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Usage(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<StageError> for CliError {
    fn from(e: StageError) -> Self {
        Self::Stage(e)
    }
}

/// Result of a subcommand: the stdout rendering in both formats, the files
/// for `--out-dir`, and an error raised after partial results were produced.
#[derive(Default)]
pub struct Output {
    pub json: Option<String>,
    pub csv: Option<String>,
    pub files: Vec<(&'static str, Vec<u8>)>,
    pub failure: Option<CliError>,
}

impl Output {
    pub fn file(&mut self, name: &'static str, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    pub fn emit(self, cli: &Cli) -> Result<(), CliError> {
        if let Some(dir) = &cli.out_dir {
            fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
            for (name, bytes) in &self.files {
                let path = dir.join(name);
                fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
            }
        }
        if let Some(e) = self.failure {
            return Err(e);
        }
        let text = match cli.format {
            Format::Json => self.json,
            Format::Csv => self.csv.or(self.json),
        };
        if let Some(text) = text {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
        }
        Ok(())
    }
}
