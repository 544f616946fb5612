use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::filtermodel::ForestParams;

pub const CONFIG_ENV: &str = "COMORBID_CONFIG";
pub const PORT_ENV: &str = "COMORBID_PORT";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_PORT: u16 = 8080;

/// Pipeline settings, usually read from a TOML file. Relative paths are
/// resolved against the directory of the file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub lexicon: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub triggers: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    /// CSV `patient_id,index_date` enabling the cohort filter.
    pub index_dates: Option<PathBuf>,
    pub study_end: Option<NaiveDate>,
    pub index: Option<PathBuf>,
    pub mentions: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    /// Output path prefix for evaluation reports (`.csv`, `.txt`, `.json`).
    pub report: Option<PathBuf>,
    pub k: usize,
    pub seed: u64,
    pub include_irrelevant: bool,
    pub port: u16,
    pub forest: ForestParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lexicon: None,
            mapping: None,
            triggers: None,
            abbreviations: None,
            corpus: None,
            index_dates: None,
            study_end: None,
            index: None,
            mentions: None,
            annotations: None,
            gold: None,
            model_dir: None,
            report: None,
            k: 10,
            seed: DEFAULT_SEED,
            include_irrelevant: false,
            port: DEFAULT_PORT,
            forest: ForestParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: PipelineConfig = toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        config.resolve(base_dir);
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Loads `explicit`, else the file named by `COMORBID_CONFIG`, else the
    /// defaults. `COMORBID_PORT` overrides the port in every case.
    pub fn from_env(explicit: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let mut config = match explicit.map(Path::to_path_buf).or(from_env) {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Ok(port) = std::env::var(PORT_ENV) {
            config.port = port
                .parse()
                .map_err(|_| Error::Validation(format!("{PORT_ENV}={port:?} is not a port number")))?;
        }
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.lexicon,
            &mut self.mapping,
            &mut self.triggers,
            &mut self.abbreviations,
            &mut self.corpus,
            &mut self.index_dates,
            &mut self.index,
            &mut self.mentions,
            &mut self.annotations,
            &mut self.gold,
            &mut self.model_dir,
            &mut self.report,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Checks the input files that are configured exist and the settings
    /// are usable.
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("lexicon", &self.lexicon),
            ("mapping", &self.mapping),
            ("triggers", &self.triggers),
            ("abbreviations", &self.abbreviations),
            ("index_dates", &self.index_dates),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::io(
                        p,
                        std::io::Error::new(std::io::ErrorKind::NotFound, format!("{name} file not found")),
                    ));
                }
            }
        }
        if self.k < 2 {
            return Err(Error::Validation(format!("k must be at least 2, got {}", self.k)));
        }
        if self.index_dates.is_some() && self.study_end.is_none() {
            return Err(Error::Validation("index_dates requires study_end".into()));
        }
        Ok(())
    }
}
