//! TOML experiment configs.
//!
//! One file describes one experiment. `run` reads `[problem]`, `[solver]`,
//! `[oracle]` and `[diagnostics]`; `compare` additionally reads the
//! `[[variant]]` array; `mvi` reads `[candidate]` and `[mvi]`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Output directory, relative to the output root unless absolute.
    pub output: Option<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub record_every: usize,
    /// Write `z_i` columns; defaults to on for `d <= 8`.
    pub write_z: Option<bool>,
    pub problem: ProblemConfig,
    pub solver: Option<SolverSpec>,
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default, rename = "variant")]
    pub variants: Vec<toml::Table>,
    pub candidate: Option<CandidateSpec>,
    pub mvi: Option<MviSpec>,
    /// Directory the config was read from; relative data paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ProblemConfig {
    #[serde(flatten)]
    pub kind: ProblemKind,
    /// Start point as `x` then `y`; zeros when absent.
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub project_start: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemKind {
    ToyF1,
    ToyF2,
    ToyF3,
    Bilinear {
        #[serde(default = "one")]
        k: usize,
        #[serde(default)]
        orthant: bool,
    },
    AbsDiff,
    Rls {
        #[serde(default = "rls_rows")]
        rows: usize,
        #[serde(default = "rls_cols")]
        cols: usize,
        #[serde(default = "rls_rho")]
        rho: f64,
        #[serde(default)]
        data_seed: u64,
        /// CSV dump with columns `a_0..a_{cols-1},y0`.
        data: Option<String>,
    },
    Poisoning {
        #[serde(default)]
        data_seed: u64,
        data: Option<String>,
        zeta: Option<f64>,
        samples: Option<usize>,
        features: Option<usize>,
        corruption: Option<f64>,
        lambda: Option<f64>,
    },
    LaneMerging {
        control_points: Option<usize>,
        dt: Option<f64>,
    },
}

fn rls_rows() -> usize {
    150
}

fn rls_cols() -> usize {
    250
}

fn rls_rho() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Zoeg,
    VrZoeg,
    ModifiedVrZoeg,
    FirstOrderEg,
    Gda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    #[default]
    Metric,
    Euclidean,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub variant: VariantName,
    /// Shorthand for `h1 = h2 = h`.
    pub h: Option<f64>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub iterations: usize,
    #[serde(default)]
    pub projection: Projection,
}

impl SolverSpec {
    pub fn steps(&self) -> Result<(f64, f64)> {
        match (self.h, self.h1, self.h2) {
            (Some(h), None, None) => Ok((h, h)),
            (None, Some(h1), Some(h2)) => Ok((h1, h2)),
            (None, Some(h1), None) => Ok((h1, h1)),
            _ => bail!("solver: give either `h` or `h1` (and optionally `h2`)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Forward,
    Backward,
    Central,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Samples {
    Count(usize),
    Named(String),
}

impl Default for Samples {
    fn default() -> Self {
        Samples::Count(1)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    #[default]
    Identity,
    Scaled {
        lambda: f64,
    },
    /// Separate scalars on the `x` and `y` blocks.
    Blocks {
        x: f64,
        y: f64,
    },
    Diagonal {
        x: Vec<f64>,
        y: Vec<f64>,
    },
    /// Uniform random diagonal rescaled so its extremes are `min` and
    /// `min * kappa`.
    RandomDiagonal {
        #[serde(default)]
        seed: u64,
        kappa: f64,
        #[serde(default = "random_min")]
        min: f64,
    },
    /// Half of the joint coordinates get `high`, the rest `low`; placement
    /// is shuffled when `seed` is set, otherwise `high` comes first.
    Half {
        high: f64,
        low: f64,
        seed: Option<u64>,
    },
}

fn random_min() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub mu: Option<f64>,
    /// `mu_k = mu_scale / (k + 1)`.
    pub mu_scale: Option<f64>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub noise_variance: f64,
    pub cache: Option<bool>,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagMode {
    #[default]
    Auto,
    Operator,
    Mapping,
    MonteCarlo,
    Distance,
    Off,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    #[serde(default)]
    pub mode: DiagMode,
    /// Directions for `monte_carlo`.
    pub samples: Option<usize>,
    /// Target point for `distance`; the problem's known solution otherwise.
    pub target: Option<Vec<f64>>,
    pub goldstein: Option<GoldsteinSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldsteinSpec {
    pub delta: f64,
    pub epsilon: f64,
    /// Falls back to the problem's recorded `L0`.
    pub l0: Option<f64>,
    #[serde(default = "goldstein_samples")]
    pub samples: usize,
}

fn goldstein_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    /// Explicit point, `x` then `y`.
    pub point: Option<Vec<f64>>,
    /// Trace CSV; the last row's `z_i` columns are used.
    pub trace: Option<String>,
    /// Run `[solver]` with `[oracle]` from the problem start and use the
    /// final iterate.
    #[serde(default)]
    pub run: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientKind {
    #[default]
    Analytic,
    CentralDifference,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MviSpec {
    pub count: usize,
    pub h: f64,
    #[serde(default)]
    pub rho: f64,
    /// Per-coordinate variances.
    pub variances: Option<Vec<f64>>,
    /// Same variance on every coordinate.
    pub variance: Option<f64>,
    /// Lane merging only: variance on acceleration and steering inputs.
    pub accel_variance: Option<f64>,
    pub steer_variance: Option<f64>,
    #[serde(default)]
    pub gradient: GradientKind,
    #[serde(default = "fd_step")]
    pub fd_step: f64,
    #[serde(default = "bins")]
    pub bins: usize,
    #[serde(default = "tolerance")]
    pub tolerance: f64,
}

fn fd_step() -> f64 {
    1e-6
}

fn bins() -> usize {
    50
}

fn tolerance() -> f64 {
    1e-12
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_table(table: toml::Table, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::Value::Table(table).try_into()?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).with_context(|| format!("invalid config {}", path.display()))
    }

    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("`seeds` must list at least one seed");
        }
        if self.record_every == 0 {
            bail!("`record_every` must be at least 1");
        }
        for path in self.data_files() {
            if !path.is_file() {
                bail!("referenced file {} does not exist", path.display());
            }
        }
        if let Some(m) = &self.mvi {
            if m.count == 0 {
                bail!("mvi: `count` must be at least 1");
            }
        }
        Ok(())
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Every input file the config refers to.
    pub fn data_files(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        match &self.problem.kind {
            ProblemKind::Rls { data: Some(d), .. } | ProblemKind::Poisoning { data: Some(d), .. } => {
                out.push(self.resolve(d))
            }
            _ => {}
        }
        if let Some(CandidateSpec { trace: Some(t), .. }) = &self.candidate {
            out.push(self.resolve(t));
        }
        out
    }

    pub fn solver(&self) -> Result<&SolverSpec> {
        self.solver.as_ref().context("config has no [solver] section")
    }

    pub fn oracle(&self) -> Result<&OracleSpec> {
        self.oracle.as_ref().context("config has no [oracle] section")
    }

    /// Output directory under `root`.
    pub fn output_dir(&self, root: &Path) -> PathBuf {
        let rel = self.output.clone().unwrap_or_else(|| self.name.clone());
        let p = Path::new(&rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            root.join(p)
        }
    }
}

/// Recursively overlays `over` onto `base`.
pub fn merge_tables(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
[problem]
kind = "toy_f1"
start = [5.0, -7.0]
[solver]
variant = "zoeg"
h1 = 2e-3
h2 = 1e-3
iterations = 10
[oracle]
mu = 1e-6
"#;

    #[test]
    fn parses_minimal() {
        let c = ExperimentConfig::parse(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(c.seeds, vec![0]);
        assert_eq!(c.problem.kind, ProblemKind::ToyF1);
        assert_eq!(c.solver().unwrap().steps().unwrap(), (2e-3, 1e-3));
        assert_eq!(c.oracle().unwrap().metric, MetricSpec::Identity);
    }

    #[test]
    fn empty_seed_list_is_rejected() {
        let text = MINIMAL.replace("name = \"t\"", "name = \"t\"\nseeds = []");
        let err = ExperimentConfig::parse(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("seeds"));
    }

    #[test]
    fn ambiguous_steps_are_rejected() {
        let text = MINIMAL.replace("h1 = 2e-3", "h = 1.0\nh1 = 2e-3");
        let c = ExperimentConfig::parse(&text, Path::new(".")).unwrap();
        assert!(c.solver().unwrap().steps().is_err());
    }

    #[test]
    fn merge_overrides_nested_keys() {
        let mut base: toml::Table = toml::from_str("[oracle]\nmu = 1.0\nscheme = \"forward\"").unwrap();
        let over: toml::Table = toml::from_str("[oracle]\nscheme = \"central\"").unwrap();
        merge_tables(&mut base, &over);
        assert_eq!(base["oracle"]["mu"].as_float(), Some(1.0));
        assert_eq!(base["oracle"]["scheme"].as_str(), Some("central"));
    }
}
