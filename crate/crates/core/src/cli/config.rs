//! TOML experiment configuration.
//!
//! ```toml
//! [instance]
//! young_modulus = 2e11     # required
//! volume_budget = 0.1      # required
//! x_min = 1e-8             # required
//! cols = 6
//! rows = 3
//! spacing = 1.0
//! level = 2
//! supports = "left_edge"   # or { dofs = [0, 1, 12, 13] }
//! load_nodes = [11]
//! load_pattern = "single_node"   # or "distributed"
//! ellipse_axes = [2e5, 2.78e5]
//! axis_convention = "full"       # or "semi"
//!
//! [sapg]
//! mu0 = 1.0
//! l = 1e5
//!
//! [spg]
//! l = 1e6
//! spg_mu_exponent = -0.5
//!
//! [subgrad]
//! subgrad_step_c = 1e-6
//!
//! [run]
//! iters = 4000
//! stride = 1
//! out_dir = "out"
//! seed = 42
//! ```
//!
//! Every key except the three instance scalars has a default.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::solvers::{Algorithm, SolverConfig};
use crate::truss::{AxisConvention, GridSpec, InstanceConfig, LoadPattern, Supports};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSection,
    #[serde(default)]
    pub sapg: SolverSection,
    #[serde(default)]
    pub spg: SolverSection,
    #[serde(default)]
    pub subgrad: SolverSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    pub young_modulus: f64,
    pub volume_budget: f64,
    pub x_min: f64,
    #[serde(default = "defaults::cols")]
    pub cols: usize,
    #[serde(default = "defaults::rows")]
    pub rows: usize,
    #[serde(default = "defaults::spacing")]
    pub spacing: f64,
    #[serde(default = "defaults::level")]
    pub level: usize,
    #[serde(default)]
    pub supports: Supports,
    /// Defaults to the middle node of the right edge.
    #[serde(default)]
    pub load_nodes: Option<Vec<usize>>,
    #[serde(default)]
    pub load_pattern: LoadPattern,
    #[serde(default = "defaults::ellipse_axes")]
    pub ellipse_axes: [f64; 2],
    #[serde(default)]
    pub axis_convention: AxisConvention,
    /// Starting design; defaults to the uniform design.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

/// Overrides of the experiment defaults for one algorithm.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub mu0: Option<f64>,
    pub l: Option<f64>,
    pub l_prime: Option<f64>,
    pub subgrad_step_c: Option<f64>,
    pub spg_mu_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "defaults::iters")]
    pub iters: usize,
    #[serde(default = "defaults::stride")]
    pub stride: usize,
    #[serde(default = "defaults::out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default)]
    pub reference_optimum: Option<f64>,
    /// Length of the long S-APG run behind the reference optimum; 0 disables it.
    #[serde(default = "defaults::surrogate_iters")]
    pub surrogate_iters: usize,
    #[serde(default = "defaults::polish_steps")]
    pub polish_steps: usize,
    #[serde(default = "defaults::polish_mu")]
    pub polish_mu: f64,
    /// Fill the `time_s` column (makes traces nondeterministic).
    #[serde(default)]
    pub record_time: bool,
    /// Add `e_k`, `etilde_k`, `bound_rhs` columns to S-APG traces from `solve`.
    #[serde(default)]
    pub lyapunov: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            iters: defaults::iters(),
            stride: defaults::stride(),
            out_dir: defaults::out_dir(),
            seed: defaults::seed(),
            reference_optimum: None,
            surrogate_iters: defaults::surrogate_iters(),
            polish_steps: defaults::polish_steps(),
            polish_mu: defaults::polish_mu(),
            record_time: false,
            lyapunov: false,
        }
    }
}

mod defaults {
    use std::path::PathBuf;

    pub fn cols() -> usize {
        6
    }
    pub fn rows() -> usize {
        3
    }
    pub fn spacing() -> f64 {
        1.0
    }
    pub fn level() -> usize {
        2
    }
    pub fn ellipse_axes() -> [f64; 2] {
        [2e5, 2.78e5]
    }
    pub fn iters() -> usize {
        4000
    }
    pub fn stride() -> usize {
        1
    }
    pub fn out_dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn seed() -> u64 {
        42
    }
    pub fn surrogate_iters() -> usize {
        40_000
    }
    pub fn polish_steps() -> usize {
        200
    }
    pub fn polish_mu() -> f64 {
        1e-8
    }
}

impl Default for ExperimentConfig {
    /// The experiment configuration with every default filled in.
    fn default() -> Self {
        let inst = InstanceConfig::default();
        Self {
            instance: InstanceSection {
                young_modulus: inst.young_modulus,
                volume_budget: inst.volume_budget,
                x_min: inst.x_min,
                cols: defaults::cols(),
                rows: defaults::rows(),
                spacing: defaults::spacing(),
                level: defaults::level(),
                supports: Supports::LeftEdge,
                load_nodes: None,
                load_pattern: LoadPattern::SingleNode,
                ellipse_axes: defaults::ellipse_axes(),
                axis_convention: AxisConvention::Full,
                x0: None,
            },
            sapg: SolverSection::default(),
            spg: SolverSection::default(),
            subgrad: SolverSection::default(),
            run: RunSection::default(),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError(format!("`{key}` must be a positive finite number, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    /// Scalar checks that name the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let i = &self.instance;
        positive("instance.young_modulus", i.young_modulus)?;
        positive("instance.volume_budget", i.volume_budget)?;
        positive("instance.x_min", i.x_min)?;
        positive("instance.spacing", i.spacing)?;
        for (k, v) in i.ellipse_axes.iter().enumerate() {
            positive(&format!("instance.ellipse_axes[{k}]"), *v)?;
        }
        for alg in Algorithm::ALL {
            self.solver(alg)
                .validate()
                .map_err(|e| ConfigError(format!("[{alg}]: {e}")))?;
        }
        if self.run.stride == 0 {
            return Err(ConfigError("`run.stride` must be at least 1".into()));
        }
        positive("run.polish_mu", self.run.polish_mu)?;
        Ok(())
    }

    pub fn instance_config(&self) -> InstanceConfig {
        let i = &self.instance;
        let grid = GridSpec {
            cols: i.cols,
            rows: i.rows,
            spacing: i.spacing,
            level: i.level,
            supports: i.supports.clone(),
        };
        let middle_right = grid.node(i.cols.saturating_sub(1), i.rows / 2);
        let sapg = self.solver(Algorithm::Sapg);
        InstanceConfig {
            load_nodes: i.load_nodes.clone().unwrap_or_else(|| vec![middle_right]),
            grid,
            young_modulus: i.young_modulus,
            volume_budget: i.volume_budget,
            x_min: i.x_min,
            load_pattern: i.load_pattern.clone(),
            ellipse_axes: i.ellipse_axes,
            axis_convention: i.axis_convention,
            l: sapg.l,
            l_prime: sapg.l_prime,
        }
    }

    fn section(&self, alg: Algorithm) -> &SolverSection {
        match alg {
            Algorithm::Sapg => &self.sapg,
            Algorithm::Spg => &self.spg,
            Algorithm::Subgrad => &self.subgrad,
        }
    }

    /// Solver settings for `alg`: experiment defaults, overridden by the
    /// algorithm's section and the run section.
    pub fn solver(&self, alg: Algorithm) -> SolverConfig {
        let s = self.section(alg);
        let base = SolverConfig::paper_default(alg);
        SolverConfig {
            mu0: s.mu0.unwrap_or(base.mu0),
            l: s.l.unwrap_or(base.l),
            l_prime: s.l_prime.unwrap_or(base.l_prime),
            subgrad_step_c: s.subgrad_step_c.unwrap_or(base.subgrad_step_c),
            spg_mu_exponent: s.spg_mu_exponent.unwrap_or(base.spg_mu_exponent),
            max_iters: self.run.iters,
            trace_every: self.run.stride,
            reference_optimum: self.run.reference_optimum,
            record_time: self.run.record_time,
            ..base
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[instance]\nyoung_modulus = 2e11\nvolume_budget = 0.1\nx_min = 1e-8\n";

    #[test]
    fn minimal_config_matches_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.instance_config(), InstanceConfig::default());
        assert_eq!(cfg.solver(Algorithm::Spg), SolverConfig::paper_default(Algorithm::Spg));
    }

    #[test]
    fn missing_budget_names_key() {
        let err = ExperimentConfig::parse("[instance]\nyoung_modulus = 2e11\nx_min = 1e-8\n").unwrap_err();
        assert!(err.0.contains("volume_budget"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = ExperimentConfig::parse(&format!("{MINIMAL}\n[run]\niterz = 5\n")).unwrap_err();
        assert!(err.0.contains("iterz"), "{err}");
        assert!(err.0.contains("line 7"), "{err}");
    }

    #[test]
    fn invalid_scalar_names_key() {
        let err = ExperimentConfig::parse(&MINIMAL.replace("0.1", "-1")).unwrap_err();
        assert!(err.0.contains("instance.volume_budget"), "{err}");
        let err = ExperimentConfig::parse(&format!("{MINIMAL}[sapg]\nmu0 = 0\n")).unwrap_err();
        assert!(err.0.contains("[sapg]"), "{err}");
    }

    #[test]
    fn overrides_apply() {
        let text = format!(
            "{MINIMAL}supports = {{ dofs = [0, 1] }}\nload_pattern = \"distributed\"\n\
             [spg]\nl = 5e5\n[run]\niters = 10\nstride = 5\n"
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.instance.supports, Supports::Dofs(vec![0, 1]));
        assert_eq!(cfg.instance.load_pattern, LoadPattern::Distributed);
        let spg = cfg.solver(Algorithm::Spg);
        assert_eq!((spg.l, spg.max_iters, spg.trace_every), (5e5, 10, 5));
        assert_eq!(cfg.solver(Algorithm::Sapg).l, 1e5);
    }
}
