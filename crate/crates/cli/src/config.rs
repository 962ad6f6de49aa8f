//! Experiment configuration: a flat TOML document whose keys match the CLI
//! override flags (`snr_s_db` ↔ `--snr-s-db`). CLI values win over file values.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cas_core::dual::DualOptions;
use cas_core::separated::SeparatedOptions;
use cas_core::SystemConfig;
use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Separated,
    Dual,
    Both,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Separated => "separated",
            Scheme::Dual => "dual",
            Scheme::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualInit {
    Sensing,
    Communication,
    /// Run both initializations and keep the lower distortion.
    Best,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Seeds given as a list (`0,1,5`), a half-open range (`0..20`), or a mix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

impl FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((a, b)) = part.split_once("..") {
                let a: u64 = a.trim().parse().map_err(|e| format!("bad seed range start {a:?}: {e}"))?;
                let b: u64 = b.trim().parse().map_err(|e| format!("bad seed range end {b:?}: {e}"))?;
                if b <= a {
                    return Err(format!("empty seed range {part:?}"));
                }
                out.extend(a..b);
            } else {
                out.push(part.parse().map_err(|e| format!("bad seed {part:?}: {e}"))?);
            }
        }
        Ok(SeedList(out))
    }
}

impl<'de> Deserialize<'de> for SeedList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            List(Vec<u64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::List(v) => Ok(SeedList(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Comma-separated list of decibel values.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct DbList(pub Vec<f64>);

impl FromStr for DbList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<f64>().map_err(|e| format!("bad dB value {p:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(DbList)
    }
}

/// Every configurable key, all optional. Used both for the config file and
/// for the CLI override flags.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Transmit antennas N.
    #[arg(long)]
    pub n_tx: Option<usize>,
    /// Sensing receive antennas M_s.
    #[arg(long)]
    pub m_s: Option<usize>,
    /// User receive antennas M_c.
    #[arg(long)]
    pub m_c: Option<usize>,
    /// Block length T.
    #[arg(long)]
    pub n_symbols: Option<usize>,
    /// Prior variance of each target response entry.
    #[arg(long)]
    pub var_eta: Option<f64>,
    /// Total transmit power in watts.
    #[arg(long)]
    pub p_total: Option<f64>,
    /// Sensing SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_s_db: Option<f64>,
    /// Communication SNRs in dB, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_c_db_list: Option<DbList>,
    /// Channel seeds: `0..20`, `1,2,3`, or a mix.
    #[arg(long)]
    pub seeds: Option<SeedList>,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    #[arg(long, value_enum)]
    pub dual_init: Option<DualInit>,
    /// Sub-intervals per refinement round of the separated search.
    #[arg(long)]
    pub grid_l: Option<usize>,
    /// Final search interval width for the separated scheme, in watts.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Objective-change stopping threshold for the dual scheme.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Iteration cap for the dual scheme.
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long = "output", alias = "output-path")]
    pub output_path: Option<PathBuf>,
    #[arg(long = "format", alias = "output-format", value_enum)]
    pub output_format: Option<OutputFormat>,
    /// Dump the separated D_sc(P_s) curve on this many sub-intervals (0 = off).
    #[arg(long)]
    pub curve_points: Option<usize>,
    /// Destination of the curve dump.
    #[arg(long)]
    pub curve_output: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl FileConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Values present in `top` replace those in `self`.
    pub fn overlay(mut self, top: FileConfig) -> Self {
        overlay!(self, top; n_tx, m_s, m_c, n_symbols, var_eta, p_total, snr_s_db, snr_c_db_list,
            seeds, scheme, dual_init, grid_l, tol, eps, max_iters, output_path, output_format,
            curve_points, curve_output);
        self
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Antenna counts, block length, prior variance and budget. The noise
    /// variances are filled in per point from the SNRs.
    pub system: SystemConfig,
    pub snr_s_db: f64,
    pub snr_c_db_list: Vec<f64>,
    /// Seeds after applying the seed offset.
    pub seeds: Vec<u64>,
    pub scheme: Scheme,
    pub dual_init: DualInit,
    pub grid_l: usize,
    pub tol: f64,
    pub eps: f64,
    pub max_iters: usize,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub curve_points: usize,
    pub curve_output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::resolve(FileConfig::default(), 0).expect("defaults are valid")
    }
}

impl ExperimentConfig {
    /// Fills defaults, applies `seed_offset` and validates.
    pub fn resolve(file: FileConfig, seed_offset: i64) -> Result<Self> {
        let base = SystemConfig::default();
        let mut system = SystemConfig {
            n_tx: file.n_tx.unwrap_or(base.n_tx),
            m_s: file.m_s.unwrap_or(base.m_s),
            m_c: file.m_c.unwrap_or(base.m_c),
            n_symbols: file.n_symbols.unwrap_or(base.n_symbols),
            var_eta: file.var_eta.unwrap_or(base.var_eta),
            p_total: file.p_total.unwrap_or(base.p_total),
            ..base
        };
        let snr_s_db = file.snr_s_db.unwrap_or(20.0);
        system = system.with_snrs(snr_s_db, 0.0);
        system.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let seeds = file.seeds.map(|s| s.0).unwrap_or_else(|| (0..20).collect());
        let seeds = seeds
            .into_iter()
            .map(|s| {
                s.checked_add_signed(seed_offset)
                    .ok_or_else(|| CliError::Config(format!("seed {s} with offset {seed_offset} is out of range")))
            })
            .collect::<Result<Vec<_>>>()?;

        let cfg = Self {
            snr_s_db,
            snr_c_db_list: file.snr_c_db_list.map(|l| l.0).unwrap_or_else(|| vec![0.0, 5.0, 10.0, 15.0, 20.0]),
            seeds,
            scheme: file.scheme.unwrap_or(Scheme::Both),
            dual_init: file.dual_init.unwrap_or(DualInit::Best),
            grid_l: file.grid_l.unwrap_or(21),
            tol: file.tol.unwrap_or(1e-4 * system.p_total),
            eps: file.eps.unwrap_or(1e-8 * system.prior_distortion()),
            max_iters: file.max_iters.unwrap_or(200),
            output_path: file.output_path,
            output_format: file.output_format.unwrap_or(OutputFormat::Csv),
            curve_points: file.curve_points.unwrap_or(0),
            curve_output: file.curve_output,
            system,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        if self.snr_c_db_list.is_empty() {
            return bad("snr_c_db_list is empty".into());
        }
        if let Some(v) = self.snr_c_db_list.iter().chain([&self.snr_s_db]).find(|v| !v.is_finite()) {
            return bad(format!("SNR values must be finite, got {v}"));
        }
        if self.grid_l < 3 {
            return bad(format!("grid_l must be at least 3, got {}", self.grid_l));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.curve_points > 0 && self.curve_output.is_none() {
            return bad("curve_points needs curve_output".into());
        }
        Ok(())
    }

    /// System parameters with both noise variances set for this point.
    pub fn system_at(&self, snr_c_db: f64) -> SystemConfig {
        self.system.with_snrs(self.snr_s_db, snr_c_db)
    }

    pub fn separated_options(&self) -> SeparatedOptions {
        SeparatedOptions { grid_l: self.grid_l, tol: self.tol }
    }

    pub fn dual_options(&self) -> DualOptions {
        DualOptions { eps: self.eps, beta0: None, max_iters: self.max_iters }
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        match self.scheme {
            Scheme::Both => vec![Scheme::Separated, Scheme::Dual],
            s => vec![s],
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_scenario() {
        let c = ExperimentConfig::default();
        assert_eq!((c.system.n_tx, c.system.m_s, c.system.m_c, c.system.n_symbols), (10, 5, 5, 100));
        assert_eq!(c.system.var_eta, 0.1);
        assert_eq!(c.system.p_total, 1.0);
        assert_eq!(c.snr_s_db, 20.0);
        assert_eq!(c.snr_c_db_list, vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        assert_eq!(c.seeds, (0..20).collect::<Vec<_>>());
        assert_eq!(c.grid_l, 21);
        assert!((c.tol - 1e-4).abs() < 1e-18);
        assert!((c.eps - 5e-8).abs() < 1e-20);
        assert_eq!(c.scheme, Scheme::Both);
        assert!((c.system_at(10.0).var_c - 10.0).abs() < 1e-12);
        assert!((c.system_at(10.0).var_s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seed_lists() {
        assert_eq!("0..3".parse::<SeedList>().unwrap().0, vec![0, 1, 2]);
        assert_eq!("4, 7,0..2".parse::<SeedList>().unwrap().0, vec![4, 7, 0, 1]);
        assert!("3..3".parse::<SeedList>().is_err());
        assert!("x".parse::<SeedList>().is_err());
    }

    #[test]
    fn toml_file_and_overlay() {
        let file = FileConfig::from_toml(
            "n_tx = 4\nm_s = 2\nsnr_c_db_list = [-5.0, 0.0]\nseeds = \"0..3\"\nscheme = \"dual\"\noutput_format = \"json\"\n",
        )
        .unwrap();
        let cli = FileConfig { m_s: Some(3), seeds: Some(SeedList(vec![9])), ..Default::default() };
        let c = ExperimentConfig::resolve(file.overlay(cli), 100).unwrap();
        assert_eq!(c.system.n_tx, 4);
        assert_eq!(c.system.m_s, 3);
        assert_eq!(c.seeds, vec![109]);
        assert_eq!(c.snr_c_db_list, vec![-5.0, 0.0]);
        assert_eq!(c.scheme, Scheme::Dual);
        assert_eq!(c.output_format, OutputFormat::Json);
        assert_eq!(c.schemes(), vec![Scheme::Dual]);
    }

    #[test]
    fn config_errors() {
        assert!(FileConfig::from_toml("bogus_key = 1").is_err());
        assert!(FileConfig::from_toml("n_tx = \"ten\"").is_err());
        let f = |file: FileConfig| ExperimentConfig::resolve(file, 0);
        assert!(f(FileConfig { n_symbols: Some(3), ..Default::default() }).is_err());
        assert!(f(FileConfig { grid_l: Some(2), ..Default::default() }).is_err());
        assert!(f(FileConfig { tol: Some(0.0), ..Default::default() }).is_err());
        assert!(f(FileConfig { snr_c_db_list: Some(DbList(vec![])), ..Default::default() }).is_err());
        assert!(
            ExperimentConfig::resolve(FileConfig { seeds: Some(SeedList(vec![0])), ..Default::default() }, -1).is_err()
        );
        assert!(matches!(f(FileConfig { var_eta: Some(-1.0), ..Default::default() }), Err(CliError::Config(_))));
    }
}
