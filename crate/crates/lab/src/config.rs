//! Declarative run configuration (TOML, `schema_version = 1`).
//!
//! A file holds a master seed and a list of `[[experiment]]` tables. Every
//! field is documented in the README; unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rmt_core::ensemble::{EnsembleSpec, EntryLaw, Symmetry};
use rmt_core::profile::{band_profile_with_shape, mean_field_profile, mixture_profile, ProfileShape, VarianceProfile};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::profile_io;

pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable that replaces the master seed of a config file.
pub const SEED_ENV: &str = "RMT_LAB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LocalLaw,
    Counting,
    Rigidity,
    Extremes,
    FluctAvg,
    Universality,
    Domination,
    Lde,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::LocalLaw,
        ExperimentKind::Counting,
        ExperimentKind::Rigidity,
        ExperimentKind::Extremes,
        ExperimentKind::FluctAvg,
        ExperimentKind::Universality,
        ExperimentKind::Domination,
        ExperimentKind::Lde,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExperimentKind::LocalLaw => "local_law",
            ExperimentKind::Counting => "counting",
            ExperimentKind::Rigidity => "rigidity",
            ExperimentKind::Extremes => "extremes",
            ExperimentKind::FluctAvg => "fluct_avg",
            ExperimentKind::Universality => "universality",
            ExperimentKind::Domination => "domination",
            ExperimentKind::Lde => "lde",
        }
    }

    fn needs_grid(self, statistic: Option<Statistic>) -> bool {
        match self {
            ExperimentKind::LocalLaw | ExperimentKind::FluctAvg => true,
            ExperimentKind::Domination => statistic != Some(Statistic::Entry),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub n_values: Vec<usize>,
    pub samples: usize,
    #[serde(default = "default_gamma_exponent")]
    pub gamma_exponent: f64,
    /// Added to the master seed.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub z_grid: Option<GridConfig>,
    #[serde(default)]
    pub options: Options,
}

fn default_gamma_exponent() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    #[default]
    MeanField,
    Band,
    Mixture,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShapeConfig {
    #[default]
    Box,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LawConfig {
    #[default]
    Gaussian,
    Rademacher,
    UniformPmSqrt3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryConfig {
    #[default]
    RealSymmetric,
    ComplexHermitian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default)]
    pub profile: ProfileKind,
    /// Lattice dimension of band profiles; `N = l^d`.
    #[serde(default)]
    pub d: Option<u32>,
    #[serde(default)]
    pub w: Option<usize>,
    /// Band width as a fraction of the side length `l`.
    #[serde(default)]
    pub w_fraction: Option<f64>,
    #[serde(default)]
    pub shape: ShapeConfig,
    #[serde(default)]
    pub nu: Option<f64>,
    /// Profile file, relative to the config file's directory.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub entry_law: LawConfig,
    #[serde(default)]
    pub symmetry: SymmetryConfig,
    #[serde(default)]
    pub complex_second_moment: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EtaUnits {
    #[default]
    Absolute,
    /// Values are exponents `a` meaning `η = N^a`.
    NPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub energies: Option<Vec<f64>>,
    #[serde(default)]
    pub e_range: Option<[f64; 2]>,
    #[serde(default)]
    pub e_count: Option<usize>,
    #[serde(default)]
    pub etas: Option<Vec<f64>>,
    #[serde(default)]
    pub eta_range: Option<[f64; 2]>,
    #[serde(default)]
    pub eta_count: Option<usize>,
    #[serde(default)]
    pub eta_scale: Scale,
    #[serde(default)]
    pub eta_units: EtaUnits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `Θ` against `1/(Mη)`.
    Theta,
    /// `Λ` against `Π`.
    Lambda,
    /// `|h_ij|` against `√s_ij`.
    Entry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weights {
    Uniform,
    Profile,
    #[default]
    Both,
}

/// Kind-specific knobs; each kind reads only the fields listed in the README.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// `local_law`: compute the full `Λ` on every `k`-th `η` of each energy.
    #[serde(default = "default_one")]
    pub lambda_stride: usize,
    /// `rigidity` (`N^ε` in the edge bound) and `domination`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// `domination`: target decay exponent reported next to `d_eff`.
    #[serde(default = "default_one_f")]
    pub d: f64,
    #[serde(default)]
    pub statistic: Option<Statistic>,
    #[serde(default)]
    pub weights: Weights,
    /// `fluct_avg`: resamples per index for `Q_k G_kk` (0 disables it).
    #[serde(default)]
    pub resamples: usize,
    /// `universality`: also run the independent-diagonal control.
    #[serde(default)]
    pub poisson_control: bool,
    /// `universality`: unfolded distance range of the 2-point histogram.
    #[serde(default = "default_pair_range")]
    pub pair_range: f64,
    #[serde(default = "default_pair_bins")]
    pub pair_bins: usize,
}

fn default_slack() -> f64 {
    10.0
}
fn default_one() -> usize {
    1
}
fn default_one_f() -> f64 {
    1.0
}
fn default_pair_range() -> f64 {
    3.0
}
fn default_pair_bins() -> usize {
    30
}

impl Default for Options {
    fn default() -> Self {
        Self {
            slack: default_slack(),
            lambda_stride: 1,
            epsilon: None,
            d: 1.0,
            statistic: None,
            weights: Weights::default(),
            resamples: 0,
            poisson_control: false,
            pair_range: default_pair_range(),
            pair_bins: default_pair_bins(),
        }
    }
}

/// Where the master seed came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Config,
    Environment,
}

/// A parsed and validated config with the seed override applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: ConfigFile,
    pub master_seed: u64,
    pub seed_source: SeedSource,
    /// Directory that relative profile paths resolve against.
    pub base_dir: PathBuf,
    pub sha256: String,
}

impl RunConfig {
    pub fn experiment_seed(&self, index: usize) -> u64 {
        self.master_seed.wrapping_add(self.file.experiments[index].seed)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let seed_override = match std::env::var(SEED_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|_| LabError::config(SEED_ENV, format!("`{v}` is not an unsigned 64-bit integer")))?,
        ),
        Err(_) => None,
    };
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(&text, base_dir, seed_override)
}

pub fn parse(text: &str, base_dir: PathBuf, seed_override: Option<u64>) -> Result<RunConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| LabError::ConfigParse(e.to_string()))?;
    validate(&file, &base_dir)?;
    let (master_seed, seed_source) = match seed_override {
        Some(s) => (s, SeedSource::Environment),
        None => (file.seed, SeedSource::Config),
    };
    Ok(RunConfig {
        file,
        master_seed,
        seed_source,
        base_dir,
        sha256: sha256_hex(text.as_bytes()),
    })
}

fn finite_in(field: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v.is_finite() && v >= lo && v <= hi {
        Ok(())
    } else {
        Err(LabError::config(field, format!("{v} outside [{lo}, {hi}]")))
    }
}

pub fn validate(file: &ConfigFile, base_dir: &Path) -> Result<()> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(LabError::config(
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", file.schema_version),
        ));
    }
    if file.experiments.is_empty() {
        return Err(LabError::config("experiment", "at least one [[experiment]] is required"));
    }
    let mut names = std::collections::BTreeSet::new();
    for (k, exp) in file.experiments.iter().enumerate() {
        let at = |f: &str| format!("experiment[{k}].{f}");
        if exp.name.is_empty()
            || !exp
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(LabError::config(at("name"), "must be nonempty and use only [A-Za-z0-9_-]"));
        }
        if !names.insert(exp.name.clone()) {
            return Err(LabError::config(at("name"), format!("duplicate name `{}`", exp.name)));
        }
        if exp.samples == 0 {
            return Err(LabError::config(at("samples"), "must be at least 1"));
        }
        if exp.n_values.is_empty() {
            return Err(LabError::config(at("n_values"), "must be nonempty"));
        }
        if let Some(n) = exp.n_values.iter().find(|&&n| n == 0 || n > 8192) {
            return Err(LabError::config(at("n_values"), format!("{n} outside [1, 8192]")));
        }
        if !(exp.gamma_exponent > 0.0 && exp.gamma_exponent < 0.5) {
            return Err(LabError::config(at("gamma_exponent"), "must lie in (0, 1/2)"));
        }
        validate_ensemble(&exp.ensemble, &exp.n_values, base_dir, &at("ensemble"))?;
        match (&exp.z_grid, exp.kind.needs_grid(exp.options.statistic)) {
            (None, true) => {
                return Err(LabError::config(at("z_grid"), format!("required for kind `{}`", exp.kind.tag())));
            }
            (Some(g), _) => {
                for &n in &exp.n_values {
                    let (es, etas) = g.resolve(n, &at("z_grid"))?;
                    if es.is_empty() || etas.is_empty() {
                        return Err(LabError::config(at("z_grid"), "grid is empty"));
                    }
                }
            }
            (None, false) => {}
        }
        let o = &exp.options;
        finite_in(&at("options.slack"), o.slack, f64::MIN_POSITIVE, 1e6)?;
        if o.lambda_stride == 0 {
            return Err(LabError::config(at("options.lambda_stride"), "must be at least 1"));
        }
        if let Some(eps) = o.epsilon {
            finite_in(&at("options.epsilon"), eps, 0.0, 10.0)?;
        }
        finite_in(&at("options.d"), o.d, 0.0, 100.0)?;
        if o.pair_bins == 0 {
            return Err(LabError::config(at("options.pair_bins"), "must be at least 1"));
        }
        finite_in(&at("options.pair_range"), o.pair_range, f64::MIN_POSITIVE, 1e3)?;
        match exp.kind {
            ExperimentKind::Domination => {
                if o.statistic.is_none() {
                    return Err(LabError::config(at("options.statistic"), "required: theta | lambda | entry"));
                }
                if o.epsilon.is_none() {
                    return Err(LabError::config(at("options.epsilon"), "required for domination"));
                }
            }
            ExperimentKind::Universality => {
                if let Some(n) = exp.n_values.iter().find(|&&n| n < 64) {
                    return Err(LabError::config(
                        at("n_values"),
                        format!("universality needs N >= 64 for enough bulk gaps, got {n}"),
                    ));
                }
            }
            ExperimentKind::Extremes | ExperimentKind::Rigidity | ExperimentKind::Counting => {
                if let Some(n) = exp.n_values.iter().find(|&&n| n < 2) {
                    return Err(LabError::config(at("n_values"), format!("needs N >= 2, got {n}")));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn validate_ensemble(e: &EnsembleConfig, n_values: &[usize], base_dir: &Path, at: &str) -> Result<()> {
    let field = |f: &str| format!("{at}.{f}");
    finite_in(&field("complex_second_moment"), e.complex_second_moment, 0.0, 1.0)?;
    match e.profile {
        ProfileKind::MeanField => {}
        ProfileKind::Band | ProfileKind::Mixture => {
            let d = e.d.unwrap_or(1);
            if !(1..=3).contains(&d) {
                return Err(LabError::config(field("d"), "must be 1, 2 or 3"));
            }
            match (e.w, e.w_fraction) {
                (Some(_), Some(_)) => return Err(LabError::config(field("w"), "give either w or w_fraction")),
                (None, None) => return Err(LabError::config(field("w"), "band profiles need w or w_fraction")),
                (None, Some(f)) => finite_in(&field("w_fraction"), f, f64::MIN_POSITIVE, 1.0)?,
                (Some(_), None) => {}
            }
            for &n in n_values {
                let l = side_length(n, d).ok_or_else(|| {
                    LabError::config(at.to_string(), format!("N = {n} is not a perfect power l^{d}"))
                })?;
                let w = band_width(e, l);
                if w == 0 || w > l {
                    return Err(LabError::config(field("w"), format!("band width {w} must lie in [1, l = {l}]")));
                }
            }
            if e.profile == ProfileKind::Mixture {
                let nu = e.nu.ok_or_else(|| LabError::config(field("nu"), "mixture profiles need nu"))?;
                finite_in(&field("nu"), nu, 0.0, 1.0)?;
            }
        }
        ProfileKind::File => {
            let path = e
                .path
                .as_ref()
                .ok_or_else(|| LabError::config(field("path"), "file profiles need a path"))?;
            let full = base_dir.join(path);
            if !full.is_file() {
                return Err(LabError::config(field("path"), format!("{} does not exist", full.display())));
            }
        }
    }
    Ok(())
}

/// `l` with `l^d = n`, if any.
pub fn side_length(n: usize, d: u32) -> Option<usize> {
    let guess = (n as f64).powf(1.0 / d as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|&l| l > 0 && l.checked_pow(d) == Some(n))
}

fn band_width(e: &EnsembleConfig, l: usize) -> usize {
    match (e.w, e.w_fraction) {
        (Some(w), _) => w,
        (None, Some(f)) => ((f * l as f64).round() as usize).max(1),
        (None, None) => 0,
    }
}

impl GridConfig {
    /// Energies and `η` values (ascending) for dimension `n`.
    pub fn resolve(&self, n: usize, at: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let field = |f: &str| format!("{at}.{f}");
        let es = match (&self.energies, self.e_range) {
            (Some(_), Some(_)) => return Err(LabError::config(field("energies"), "give either energies or e_range")),
            (Some(v), None) => v.clone(),
            (None, Some([a, b])) => {
                let k = self
                    .e_count
                    .ok_or_else(|| LabError::config(field("e_count"), "required with e_range"))?;
                linspace(a, b, k)
            }
            (None, None) => return Err(LabError::config(field("energies"), "give energies or e_range")),
        };
        for &e in &es {
            finite_in(&field("energies"), e, -10.0, 10.0)?;
        }
        let raw = match (&self.etas, self.eta_range) {
            (Some(_), Some(_)) => return Err(LabError::config(field("etas"), "give either etas or eta_range")),
            (Some(v), None) => v.clone(),
            (None, Some([a, b])) => {
                let k = self
                    .eta_count
                    .ok_or_else(|| LabError::config(field("eta_count"), "required with eta_range"))?;
                match (self.eta_scale, self.eta_units) {
                    // Exponents of N are already logarithmic.
                    (_, EtaUnits::NPower) | (Scale::Linear, _) => linspace(a, b, k),
                    (Scale::Log, EtaUnits::Absolute) => {
                        if !(a > 0.0 && b > 0.0) {
                            return Err(LabError::config(field("eta_range"), "log scale needs positive bounds"));
                        }
                        linspace(a.ln(), b.ln(), k).into_iter().map(f64::exp).collect()
                    }
                }
            }
            (None, None) => return Err(LabError::config(field("etas"), "give etas or eta_range")),
        };
        let mut etas: Vec<f64> = match self.eta_units {
            EtaUnits::Absolute => raw,
            EtaUnits::NPower => raw.iter().map(|a| (n as f64).powf(*a)).collect(),
        };
        for &eta in &etas {
            if !(eta.is_finite() && eta > 0.0 && eta <= 10.0) {
                return Err(LabError::config(field("etas"), format!("eta = {eta} outside (0, 10] at N = {n}")));
            }
        }
        etas.sort_by(f64::total_cmp);
        Ok((es, etas))
    }
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
    }
}

impl EnsembleConfig {
    pub fn build_profile(&self, n: usize, base_dir: &Path) -> Result<VarianceProfile> {
        let shape = match self.shape {
            ShapeConfig::Box => ProfileShape::Box,
            ShapeConfig::Gaussian => ProfileShape::Gaussian,
        };
        let band = |d: u32| -> Result<VarianceProfile> {
            let l = side_length(n, d).ok_or_else(|| LabError::config("ensemble", format!("N = {n} is not l^{d}")))?;
            Ok(band_profile_with_shape(d, l, band_width(self, l), shape)?)
        };
        Ok(match self.profile {
            ProfileKind::MeanField => mean_field_profile(n)?,
            ProfileKind::Band => band(self.d.unwrap_or(1))?,
            ProfileKind::Mixture => mixture_profile(
                &band(self.d.unwrap_or(1))?,
                &mean_field_profile(n)?,
                self.nu.unwrap_or(0.0),
            )?,
            ProfileKind::File => {
                let path = base_dir.join(self.path.as_deref().unwrap_or(Path::new("")));
                let loaded = profile_io::read_profile(&path)?;
                if loaded.profile.n() != n {
                    return Err(LabError::config(
                        "ensemble.path",
                        format!("profile file has N = {} but n_values lists {n}", loaded.profile.n()),
                    ));
                }
                loaded.profile
            }
        })
    }

    pub fn entry_law(&self) -> EntryLaw {
        match self.entry_law {
            LawConfig::Gaussian => EntryLaw::Gaussian,
            LawConfig::Rademacher => EntryLaw::Rademacher,
            LawConfig::UniformPmSqrt3 => EntryLaw::UniformPmSqrt3,
        }
    }

    pub fn symmetry(&self) -> Symmetry {
        match self.symmetry {
            SymmetryConfig::RealSymmetric => Symmetry::RealSymmetric,
            SymmetryConfig::ComplexHermitian => Symmetry::ComplexHermitian,
        }
    }

    pub fn build_spec(&self, profile: Arc<VarianceProfile>, seed: u64) -> Result<EnsembleSpec> {
        Ok(EnsembleSpec::new(
            profile,
            self.entry_law(),
            self.symmetry(),
            self.complex_second_moment,
            seed,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
seed = 7

[[experiment]]
name = "goe"
kind = "local_law"
n_values = [64]
samples = 2

[experiment.z_grid]
energies = [0.0]
eta_range = [-0.5, 0.0]
eta_count = 3
eta_units = "n_power"
"#;

    #[test]
    fn minimal_config_parses() {
        let c = parse(MINIMAL, PathBuf::new(), None).unwrap();
        assert_eq!(c.master_seed, 7);
        assert_eq!(c.seed_source, SeedSource::Config);
        let (es, etas) = c.file.experiments[0].z_grid.as_ref().unwrap().resolve(64, "g").unwrap();
        assert_eq!(es, vec![0.0]);
        assert!((etas[0] - 0.125).abs() < 1e-12 && (etas[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn override_replaces_seed() {
        let c = parse(MINIMAL, PathBuf::new(), Some(99)).unwrap();
        assert_eq!(c.master_seed, 99);
        assert_eq!(c.seed_source, SeedSource::Environment);
        assert_eq!(c.experiment_seed(0), 99);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("samples = 2", "samples = 0");
        let err = parse(&bad, PathBuf::new(), None).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("experiment[0].samples"), "{err}");

        let bad = MINIMAL.replace("samples = 2", "samples = 2\nbogus = 1");
        let err = parse(&bad, PathBuf::new(), None).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        assert!(err.to_string().contains("line"), "{err}");

        let bad = MINIMAL.replace("[experiment.z_grid]", "[experiment.unused]");
        assert!(parse(&bad, PathBuf::new(), None).is_err());
    }

    #[test]
    fn band_side_lengths() {
        assert_eq!(side_length(1024, 1), Some(1024));
        assert_eq!(side_length(1024, 2), Some(32));
        assert_eq!(side_length(1000, 3), Some(10));
        assert_eq!(side_length(1000, 2), None);
    }
}
