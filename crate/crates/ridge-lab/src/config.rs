//! Flat sectioned key-value experiment configs.
//!
//! Three sections: `[problem]` (d, spectrum, r, rho, sigma), `[experiment]`
//! (n, lambdas, trials, seed), `[output]` (out). `#` starts a comment, blank
//! lines are skipped, and every diagnostic carries its 1-based line number.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{default_lambda_grid, ExperimentConfig};
use crate::synth::{make_bounded_design, poly_spectrum, Problem};

/// Sample size used when the config does not pin one.
pub const DEFAULT_N: usize = 50;

/// Trial count used when neither the config nor a flag pins one.
pub const DEFAULT_TRIALS: usize = 2000;

/// Base seed of last resort, below `RIDGE_LAB_SEED`.
pub const DEFAULT_SEED: u64 = 1729;

/// Spectrum selector for the synthetic design.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSpec {
    Identity,
    /// Polynomial decay: eigenvalue j of d is j^{-b}.
    Poly(f64),
    /// Eigenvalues given verbatim.
    Explicit(Vec<f64>),
}

/// A parsed config file. Every field is optional so the CLI can layer
/// defaults and flag overrides on top without re-reading the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub d: Option<usize>,
    pub spectrum: Option<SpectrumSpec>,
    pub r: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
    pub n: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Flag-level overrides that outrank the file contents.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub se_multiplier: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Problem,
    Experiment,
    Output,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn strip_comment(raw: &str) -> &str {
    match raw.find('#') {
        Some(i) => &raw[..i],
        None => raw,
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize, key: &str, kind: &str) -> Result<T> {
    value.parse().map_err(|_| err(line, format!("`{key}` expects {kind}, got `{value}`")))
}

fn parse_f64_list(value: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|piece| parse_num(piece.trim(), line, key, "a comma-separated list of numbers"))
        .collect()
}

fn parse_spectrum(value: &str, line: usize) -> Result<SpectrumSpec> {
    if value == "identity" {
        return Ok(SpectrumSpec::Identity);
    }
    if let Some(b) = value.strip_prefix("poly:") {
        let b: f64 = parse_num(b.trim(), line, "spectrum", "poly:<decay exponent>")?;
        if !b.is_finite() || b <= 0.0 {
            return Err(err(line, format!("poly decay exponent must be positive, got {b}")));
        }
        return Ok(SpectrumSpec::Poly(b));
    }
    if value.contains(',') || value.parse::<f64>().is_ok() {
        return Ok(SpectrumSpec::Explicit(parse_f64_list(value, line, "spectrum")?));
    }
    Err(err(line, format!("`spectrum` expects identity, poly:b, or an eigenvalue list, got `{value}`")))
}

fn set_once<T>(slot: &mut Option<T>, value: T, key: &str, line: usize) -> Result<()> {
    if slot.is_some() {
        return Err(err(line, format!("duplicate key `{key}`")));
    }
    *slot = Some(value);
    Ok(())
}

/// Parses config text, rejecting unknown sections and keys with the line
/// that introduced them.
pub fn parse_config(text: &str) -> Result<FileConfig> {
    let mut cfg = FileConfig::default();
    let mut section: Option<Section> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "unterminated section header"))?
                .trim();
            section = Some(match name {
                "problem" => Section::Problem,
                "experiment" => Section::Experiment,
                "output" => Section::Output,
                other => return Err(err(line_no, format!("unknown section [{other}]"))),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(err(line_no, format!("empty value for `{key}`")));
        }
        let section =
            section.ok_or_else(|| err(line_no, "key appears before any [section] header"))?;
        match (section, key) {
            (Section::Problem, "d") => {
                set_once(&mut cfg.d, parse_num(value, line_no, key, "a positive integer")?, key, line_no)?
            }
            (Section::Problem, "spectrum") => {
                set_once(&mut cfg.spectrum, parse_spectrum(value, line_no)?, key, line_no)?
            }
            (Section::Problem, "r") => {
                set_once(&mut cfg.r, parse_num(value, line_no, key, "a number")?, key, line_no)?
            }
            (Section::Problem, "rho") => {
                set_once(&mut cfg.rho, parse_num(value, line_no, key, "a number")?, key, line_no)?
            }
            (Section::Problem, "sigma") => {
                set_once(&mut cfg.sigma, parse_num(value, line_no, key, "a number")?, key, line_no)?
            }
            (Section::Experiment, "n") => {
                set_once(&mut cfg.n, parse_num(value, line_no, key, "a positive integer")?, key, line_no)?
            }
            (Section::Experiment, "lambdas") => {
                set_once(&mut cfg.lambdas, parse_f64_list(value, line_no, key)?, key, line_no)?
            }
            (Section::Experiment, "trials") => {
                set_once(&mut cfg.trials, parse_num(value, line_no, key, "a positive integer")?, key, line_no)?
            }
            (Section::Experiment, "seed") => {
                set_once(&mut cfg.seed, parse_num(value, line_no, key, "an unsigned integer")?, key, line_no)?
            }
            (Section::Output, "out") => {
                set_once(&mut cfg.out, PathBuf::from(value), key, line_no)?
            }
            (_, other) => {
                return Err(err(line_no, format!("unknown key `{other}` in this section")))
            }
        }
    }
    Ok(cfg)
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<FileConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Config text with comments, blank lines, and surrounding whitespace
/// removed: the form that gets hashed into the run manifest, so cosmetic
/// edits do not change the recorded identity.
pub fn canonicalize(text: &str) -> String {
    text.lines()
        .map(|raw| strip_comment(raw).trim())
        .filter(|line| !line.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

impl FileConfig {
    /// Builds the synthetic problem this config describes. The source pair
    /// (r, rho) must be given together or not at all; without it the target
    /// is zero and the experiment probes pure noise.
    pub fn build_problem(&self) -> Result<Problem> {
        let spectrum_spec = self.spectrum.clone().unwrap_or(SpectrumSpec::Identity);
        let eigenvalues = match &spectrum_spec {
            SpectrumSpec::Explicit(list) => {
                if let Some(d) = self.d {
                    if d != list.len() {
                        return Err(Error::InvalidInput(format!(
                            "d = {d} but the explicit spectrum lists {} eigenvalues",
                            list.len()
                        )));
                    }
                }
                list.clone()
            }
            SpectrumSpec::Identity => {
                let d = self.d.ok_or_else(|| {
                    Error::InvalidInput("`d` is required unless the spectrum is explicit".into())
                })?;
                vec![1.0; d]
            }
            SpectrumSpec::Poly(b) => {
                let d = self.d.ok_or_else(|| {
                    Error::InvalidInput("`d` is required unless the spectrum is explicit".into())
                })?;
                poly_spectrum(d, *b)?
            }
        };
        let design = make_bounded_design(&eigenvalues)?;
        let sigma = self.sigma.unwrap_or(0.0);
        let problem = match (self.r, self.rho) {
            (Some(r), Some(rho)) => Problem::with_source(design, r, rho, sigma)?,
            (None, None) => {
                let d = design.dim();
                Problem::new(design, vec![0.0; d], sigma)?
            }
            _ => {
                return Err(Error::InvalidInput(
                    "source parameters `r` and `rho` must be given together".into(),
                ))
            }
        };
        match spectrum_spec {
            SpectrumSpec::Poly(b) => problem.with_spectrum_budget(b),
            _ => Ok(problem),
        }
    }

    /// Assembles the experiment, applying flag overrides, then the file,
    /// then the environment seed, then built-in defaults.
    pub fn resolve(&self, overrides: &Overrides, env_seed: Option<u64>) -> Result<ExperimentConfig> {
        let problem = self.build_problem()?;
        let n = self.n.unwrap_or(DEFAULT_N);
        let lambda_grid = match &self.lambdas {
            Some(list) => list.clone(),
            None => default_lambda_grid(problem.radius(), n),
        };
        let trials = overrides.trials.or(self.trials).unwrap_or(DEFAULT_TRIALS);
        let seed = overrides.seed.or(self.seed).or(env_seed).unwrap_or(DEFAULT_SEED);
        let cfg = ExperimentConfig::new(problem, n, lambda_grid, trials, seed)?;
        match overrides.se_multiplier {
            Some(k) => cfg.with_se_multiplier(k),
            None => Ok(cfg),
        }
    }
}
