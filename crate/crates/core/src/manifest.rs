//! TOML run manifests: one manifest describes one experiment.
//!
//! ```toml
//! experiment = "bj-scan"
//!
//! [model]
//! n = 100
//! omega_f = 0.0
//!
//! [grid]
//! phi_min = -0.06
//! phi_max = 0.06
//! phi_points = 41
//! ```
//!
//! Unknown keys are rejected everywhere. `[model]` is a Bose-Josephson or
//! Ising protocol configuration depending on `system`, which is implied by
//! the `bj-*` and `ising-*` experiment kinds and required otherwise.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::EvolutionSettings;
use crate::protocol::{BjProtocolConfig, IsingProtocolConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    BjScan,
    BjScaling,
    IsingScan,
    IsingScaling,
    Roundtrip,
    OptimizeRecombination,
    SplittingState,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::BjScan,
        ExperimentKind::BjScaling,
        ExperimentKind::IsingScan,
        ExperimentKind::IsingScaling,
        ExperimentKind::Roundtrip,
        ExperimentKind::OptimizeRecombination,
        ExperimentKind::SplittingState,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::BjScan => "bj-scan",
            ExperimentKind::BjScaling => "bj-scaling",
            ExperimentKind::IsingScan => "ising-scan",
            ExperimentKind::IsingScaling => "ising-scaling",
            ExperimentKind::Roundtrip => "roundtrip",
            ExperimentKind::OptimizeRecombination => "optimize-recombination",
            ExperimentKind::SplittingState => "splitting-state",
        }
    }

    /// The model a kind is tied to, if any.
    pub fn implied_system(self) -> Option<System> {
        match self {
            ExperimentKind::BjScan | ExperimentKind::BjScaling => Some(System::Bj),
            ExperimentKind::IsingScan | ExperimentKind::IsingScaling => Some(System::Ising),
            _ => None,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Manifest(format!("unknown experiment kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Bj,
    Ising,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    Bj(BjProtocolConfig),
    Ising(IsingProtocolConfig),
}

impl ModelConfig {
    pub fn system(&self) -> System {
        match self {
            ModelConfig::Bj(_) => System::Bj,
            ModelConfig::Ising(_) => System::Ising,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ModelConfig::Bj(c) => c.n,
            ModelConfig::Ising(c) => c.n,
        }
    }
}

impl Serialize for ModelConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ModelConfig::Bj(c) => c.serialize(s),
            ModelConfig::Ising(c) => c.serialize(s),
        }
    }
}

fn default_endpoint_points() -> usize {
    201
}
fn default_endpoint_tolerance() -> f64 {
    1e-6
}
fn default_true() -> bool {
    true
}

/// Grids and search settings; each experiment reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_points: Option<usize>,
    /// Explicit phase values; exclusive with the min/max/points form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    /// `[lo, hi]` for `Ω_end` (BJ) or `τ′` (Ising).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_bracket: Option<[f64; 2]>,
    #[serde(default = "default_endpoint_points")]
    pub endpoint_points: usize,
    #[serde(default = "default_endpoint_tolerance")]
    pub endpoint_tolerance: f64,
    /// Optimize the recombination endpoint where the model leaves it open.
    #[serde(default = "default_true")]
    pub optimize_endpoint: bool,
    /// Phase points of the per-`N` fringe fit in scaling runs; 0 skips it.
    #[serde(default)]
    pub fit_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_phi: Option<f64>,
    /// BJ splitting-state only: sample the even ground-state population.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adiabaticity_samples: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            phi_min: None,
            phi_max: None,
            phi_points: None,
            phi_values: None,
            n_values: None,
            endpoint_bracket: None,
            endpoint_points: default_endpoint_points(),
            endpoint_tolerance: default_endpoint_tolerance(),
            optimize_endpoint: true,
            fit_points: 0,
            delta_phi: None,
            adiabaticity_samples: None,
        }
    }
}

impl GridSpec {
    /// The phase grid; defaults to 41 points on `[-2π/N, 2π/N]`.
    pub fn phi_grid(&self, n: usize) -> Vec<f64> {
        if let Some(v) = &self.phi_values {
            return v.clone();
        }
        let w = 2.0 * std::f64::consts::PI / n as f64;
        crate::analysis::linear_grid(
            self.phi_min.unwrap_or(-w),
            self.phi_max.unwrap_or(w),
            self.phi_points.unwrap_or(41),
        )
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub experiment: ExperimentKind,
    pub system: System,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// `|χ|/N` in Hz; annotates durations in seconds, nothing else.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_over_n_hz: Option<f64>,
    pub model: ModelConfig,
    pub grid: GridSpec,
    pub evolution: EvolutionSettings,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    experiment: ExperimentKind,
    #[serde(default)]
    system: Option<System>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default, alias = "chi_over_N_hz")]
    chi_over_n_hz: Option<f64>,
    model: toml::Table,
    #[serde(default)]
    grid: GridSpec,
    #[serde(default)]
    evolution: Option<EvolutionSettings>,
}

fn manifest_err(e: impl fmt::Display) -> Error {
    Error::Manifest(e.to_string())
}

/// Default `dt`: `1e-3` for BJ and `1e-3 / max(B₀, |J₀|)` for Ising.
pub fn default_settings(model: &ModelConfig) -> EvolutionSettings {
    match model {
        ModelConfig::Bj(_) => EvolutionSettings::default(),
        ModelConfig::Ising(c) => EvolutionSettings::with_dt(1e-3 / c.b0.max(c.j0.abs())),
    }
}

impl RunManifest {
    pub fn parse_str(text: &str) -> Result<Self> {
        let raw: RawManifest = toml::from_str(text).map_err(manifest_err)?;
        let system = match (raw.experiment.implied_system(), raw.system) {
            (Some(implied), Some(given)) if implied != given => {
                return Err(Error::Manifest(format!(
                    "system = {given:?} contradicts experiment '{}'",
                    raw.experiment
                )))
            }
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) => {
                return Err(Error::Manifest(format!(
                    "experiment '{}' needs system = \"bj\" or \"ising\"",
                    raw.experiment
                )))
            }
        };
        let model_value = toml::Value::Table(raw.model);
        let model = match system {
            System::Bj => ModelConfig::Bj(model_value.try_into().map_err(|e| manifest_err(format!("[model]: {e}")))?),
            System::Ising => {
                ModelConfig::Ising(model_value.try_into().map_err(|e| manifest_err(format!("[model]: {e}")))?)
            }
        };
        let evolution = raw.evolution.unwrap_or_else(|| default_settings(&model));
        let m = Self {
            experiment: raw.experiment,
            system,
            output: raw.output,
            workers: raw.workers,
            chi_over_n_hz: raw.chi_over_n_hz,
            model,
            grid: raw.grid,
            evolution,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot read {}: {e}", path.display()))))?;
        Self::parse_str(&text)
    }

    /// The resolved manifest as TOML; parsing it yields `self` again.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(manifest_err)
    }

    /// Checks every referenced field before anything runs.
    pub fn validate(&self) -> Result<()> {
        let field = |e: Error| match e {
            Error::InvalidParameter(m) => Error::Manifest(format!("[model] {m}")),
            other => other,
        };
        match &self.model {
            ModelConfig::Bj(c) => c.validate().map_err(field)?,
            ModelConfig::Ising(c) => c.validate().map_err(field)?,
        }
        self.evolution
            .validate()
            .map_err(|e| Error::Manifest(format!("[evolution] {e}")))?;
        if self.workers == Some(0) {
            return Err(Error::Manifest("workers: must be at least 1".into()));
        }
        if self.chi_over_n_hz.is_some_and(|v| !(v > 0.0)) {
            return Err(Error::Manifest("chi_over_n_hz: must be positive".into()));
        }
        let g = &self.grid;
        if g.phi_values.is_some() && (g.phi_min.is_some() || g.phi_max.is_some() || g.phi_points.is_some()) {
            return Err(Error::Manifest(
                "grid: phi_values excludes phi_min/phi_max/phi_points".into(),
            ));
        }
        if g.endpoint_points < 2 {
            return Err(Error::Manifest("grid.endpoint_points: must be at least 2".into()));
        }
        if !(g.endpoint_tolerance > 0.0) {
            return Err(Error::Manifest("grid.endpoint_tolerance: must be positive".into()));
        }
        if g.delta_phi.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::Manifest("grid.delta_phi: must be positive".into()));
        }
        if let Some([lo, hi]) = g.endpoint_bracket {
            let (min, max) = match &self.model {
                ModelConfig::Bj(c) => (c.omega_c(), c.omega_0),
                ModelConfig::Ising(c) => (0.5 * c.tau, c.tau),
            };
            if !(lo >= min && hi <= max && lo < hi) {
                return Err(Error::Manifest(format!(
                    "grid.endpoint_bracket: [{lo}, {hi}] must be an increasing pair within [{min}, {max}]"
                )));
            }
        }
        match self.experiment {
            ExperimentKind::BjScan | ExperimentKind::IsingScan => {
                let grid = g.phi_grid(self.model.n());
                if grid.is_empty() || grid.iter().any(|p| !p.is_finite()) {
                    return Err(Error::Manifest("grid: phase grid must be non-empty and finite".into()));
                }
                if grid.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::Manifest("grid: phase grid must be sorted".into()));
                }
            }
            ExperimentKind::BjScaling | ExperimentKind::IsingScaling => {
                let ns = g
                    .n_values
                    .as_ref()
                    .ok_or_else(|| Error::Manifest("grid.n_values: required for scaling runs".into()))?;
                if ns.len() < 3 {
                    return Err(Error::Manifest("grid.n_values: need at least 3 particle numbers".into()));
                }
                for &n in ns {
                    let check = match &self.model {
                        ModelConfig::Bj(c) => BjProtocolConfig { n, ..c.clone() }.validate(),
                        ModelConfig::Ising(c) => IsingProtocolConfig { n, ..c.clone() }.validate(),
                    };
                    check.map_err(|e| Error::Manifest(format!("grid.n_values: {e}")))?;
                }
            }
            ExperimentKind::Roundtrip => match &self.model {
                ModelConfig::Bj(c) if c.phi != 0.0 || c.omega_end.is_some_and(|w| w != c.omega_0) => {
                    return Err(Error::Manifest(
                        "roundtrip: requires phi = 0 and omega_end unset or equal to omega_0".into(),
                    ))
                }
                ModelConfig::Ising(c) if c.phi != 0.0 || c.tau_prime.is_some_and(|t| t != c.tau) => {
                    return Err(Error::Manifest("roundtrip: requires phi = 0 and tau_prime unset or equal to tau".into()))
                }
                _ => {}
            },
            ExperimentKind::OptimizeRecombination | ExperimentKind::SplittingState => {}
        }
        if g.adiabaticity_samples.is_some() && self.system != System::Bj {
            return Err(Error::Manifest("grid.adiabaticity_samples: only supported for system = \"bj\"".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_bj_scan_resolves_defaults() {
        let m = RunManifest::parse_str("experiment = \"bj-scan\"\n[model]\nn = 100\nomega_f = 0.0\n").unwrap();
        let ModelConfig::Bj(c) = &m.model else { panic!() };
        assert_eq!((c.omega_0, c.chi, c.beta_1, c.beta_2), (11.0, -1.0, 0.1, 0.005));
        assert_eq!(m.system, System::Bj);
        assert_eq!(m.evolution.dt, 1e-3);
        assert_eq!(m.grid.phi_grid(100).len(), 41);
    }

    #[test]
    fn ordering_violation_names_constraint() {
        let e = RunManifest::parse_str("experiment = \"bj-scan\"\n[model]\nn = 10\nomega_f = 1.5\n").unwrap_err();
        assert!(e.is_validation());
        assert!(e.to_string().contains("Ω_f < Ω_c"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "experiment = \"bj-scan\"\nbogus = 1\n[model]\nn = 4\n",
            "experiment = \"bj-scan\"\n[model]\nn = 4\nbogus = 1\n",
            "experiment = \"bj-scan\"\n[model]\nn = 4\n[grid]\nbogus = 1\n",
            "experiment = \"bj-scan\"\n[model]\nn = 4\n[evolution]\ndt = 0.01\nbogus = 1\n",
        ] {
            assert!(matches!(RunManifest::parse_str(text), Err(Error::Manifest(_))), "{text}");
        }
    }

    #[test]
    fn generic_kinds_need_a_system() {
        assert!(RunManifest::parse_str("experiment = \"roundtrip\"\n[model]\nn = 4\n").is_err());
        let m = RunManifest::parse_str("experiment = \"roundtrip\"\nsystem = \"ising\"\n[model]\nn = 4\ntau = 20.0\n")
            .unwrap();
        assert_eq!(m.system, System::Ising);
        assert_eq!(m.evolution.dt, 1e-3);
        assert!(RunManifest::parse_str("experiment = \"bj-scan\"\nsystem = \"ising\"\n[model]\nn = 4\ntau = 2.0\n").is_err());
    }

    #[test]
    fn emit_parse_round_trip() {
        let text = "experiment = \"ising-scaling\"\nworkers = 2\nchi_over_N_hz = 0.5\n[model]\nn = 4\ntau = 20.0\n\
                    coupling_range = 2\n[grid]\nn_values = [4, 5, 6]\nendpoint_bracket = [12.0, 20.0]\n";
        let m = RunManifest::parse_str(text).unwrap();
        let again = RunManifest::parse_str(&m.to_toml().unwrap()).unwrap();
        assert_eq!(m, again);
        let m = RunManifest::parse_str("experiment = \"bj-scan\"\n[model]\nn = 6\nomega_f = 0.5\nomega_end = 3.0\n")
            .unwrap();
        assert_eq!(RunManifest::parse_str(&m.to_toml().unwrap()).unwrap(), m);
    }

    #[test]
    fn scaling_needs_three_sizes() {
        let text = "experiment = \"bj-scaling\"\n[model]\nn = 4\n[grid]\nn_values = [4, 8]\n";
        assert!(RunManifest::parse_str(text).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.as_str().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("bj".parse::<ExperimentKind>().is_err());
    }
}
