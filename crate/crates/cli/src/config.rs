//! Experiment configuration: a TOML document with dotted section keys.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use conelab::cone::{rotation_generators, Kappa, ProfileMode, Rotation3};
use conelab::diagnostics::dyadic_radii;
use conelab::energy::{BoundarySpec, EnergyConfig, InnerCondition, Symmetry};
use conelab::grid::PolarGrid;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kappa: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    pub boundary: BoundaryConfig,
    pub minimizer: MinimizerConfig,
    pub diagnostics: DiagnosticsConfig,
    pub spectral: SpectralConfig,
    pub blowup: BlowupConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_radii_per_decade: usize,
    pub n_theta: usize,
    pub r_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Equator,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundaryConfig {
    pub kind: BoundaryKind,
    /// Angles about e₁, e₂, e₃; the rotation is `M₁(a)·M₂(b)·M₃(c)`.
    pub rotation: [f64; 3],
    pub perturbation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerKind {
    Natural,
    HomogeneousCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    None,
    Antipodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizerConfig {
    pub eps_schedule: Vec<f64>,
    pub step_tol: f64,
    pub grad_tol: f64,
    pub max_iterations: usize,
    pub inner: InnerKind,
    pub symmetry: SymmetryKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPreset {
    Lifted,
    Projective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Explicit sample radii; empty selects dyadic radii in `[r_lo, 1]`.
    pub radii: Vec<f64>,
    pub r_lo: f64,
    pub alpha: AlphaPreset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    pub n_theta: usize,
    pub n_modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupConfig {
    pub window: [f64; 2],
    /// Radius at which the tangent model (amplitude and rotation) is fitted.
    pub model_radius: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kappa: 4.0,
            seed: 0,
            output_dir: PathBuf::from("lab_output"),
            grid: GridConfig::default(),
            boundary: BoundaryConfig::default(),
            minimizer: MinimizerConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            spectral: SpectralConfig::default(),
            blowup: BlowupConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_radii_per_decade: 32, n_theta: 256, r_min: 1e-4 }
    }
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig { kind: BoundaryKind::Perturbed, rotation: [0.6, -0.4, 0.9], perturbation: 0.05 }
    }
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        let base = EnergyConfig::new(Kappa::new(4.0).expect("valid"));
        MinimizerConfig {
            eps_schedule: base.eps_schedule,
            step_tol: base.step_tol,
            grad_tol: base.grad_tol,
            max_iterations: base.max_iterations,
            inner: InnerKind::HomogeneousCap,
            symmetry: SymmetryKind::Antipodal,
        }
    }
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig { radii: Vec::new(), r_lo: 4e-4, alpha: AlphaPreset::Lifted }
    }
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { n_theta: 256, n_modes: 40 }
    }
}

impl Default for BlowupConfig {
    fn default() -> Self {
        BlowupConfig { window: [4e-4, 0.1], model_radius: 4e-4 }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let kappa = self.kappa()?;
        let g = &self.grid;
        if !(g.r_min > 0.0 && g.r_min <= 1e-2) {
            return Err(invalid(format!("grid.r_min must lie in (0, 1e-2], got {}", g.r_min)));
        }
        if !(4..=256).contains(&g.n_radii_per_decade) {
            return Err(invalid("grid.n_radii_per_decade must lie in [4, 256]"));
        }
        if g.n_theta < 16 || g.n_theta > 4096 || !g.n_theta.is_multiple_of(2) {
            return Err(invalid("grid.n_theta must be even and in [16, 4096]"));
        }
        let b = &self.boundary;
        if b.rotation.iter().any(|a| !a.is_finite()) {
            return Err(invalid("boundary.rotation must be finite"));
        }
        if !(0.0..=0.5).contains(&b.perturbation) {
            return Err(invalid("boundary.perturbation must lie in [0, 0.5]"));
        }
        self.energy_config(kappa).validate().map_err(|e| invalid(e.to_string()))?;
        let d = &self.diagnostics;
        if d.radii.iter().any(|&r| !(r >= g.r_min && r <= 1.0)) {
            return Err(invalid("diagnostics.radii must lie in [grid.r_min, 1]"));
        }
        if d.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("diagnostics.radii must be strictly increasing"));
        }
        if !(d.r_lo >= g.r_min && d.r_lo < 0.5) {
            return Err(invalid("diagnostics.r_lo must lie in [grid.r_min, 0.5)"));
        }
        let s = &self.spectral;
        if s.n_theta < 16 || s.n_theta > 1024 || !s.n_theta.is_multiple_of(2) {
            return Err(invalid("spectral.n_theta must be even and in [16, 1024]"));
        }
        if s.n_modes == 0 || s.n_modes > 3 * s.n_theta {
            return Err(invalid("spectral.n_modes must lie in [1, 3·spectral.n_theta]"));
        }
        let w = self.blowup.window;
        if !(w[0] >= g.r_min && w[0] < w[1] && w[1] <= 1.0) {
            return Err(invalid("blowup.window must satisfy grid.r_min <= lo < hi <= 1"));
        }
        let m = self.blowup.model_radius;
        if !(m >= g.r_min && m <= 1.0) {
            return Err(invalid("blowup.model_radius must lie in [grid.r_min, 1]"));
        }
        Ok(())
    }

    pub fn kappa(&self) -> Result<Kappa, CliError> {
        Kappa::new(self.kappa).map_err(|e| invalid(e.to_string()))
    }

    pub fn polar_grid(&self) -> Result<Arc<PolarGrid>, CliError> {
        let g = &self.grid;
        PolarGrid::per_decade(g.r_min, g.n_radii_per_decade, g.n_theta)
            .map(Arc::new)
            .map_err(|e| invalid(e.to_string()))
    }

    pub fn rotation(&self) -> Rotation3 {
        let [a, b, c] = self.boundary.rotation;
        rotation_generators(a, 1).compose(&rotation_generators(b, 2)).compose(&rotation_generators(c, 3))
    }

    pub fn boundary_spec(&self) -> Result<BoundarySpec, CliError> {
        match self.boundary.kind {
            BoundaryKind::Equator => Ok(BoundarySpec::equator(self.rotation())),
            BoundaryKind::Perturbed => {
                BoundarySpec::perturbed(self.rotation(), self.grid.n_theta, self.boundary.perturbation)
                    .map_err(|e| invalid(e.to_string()))
            }
        }
    }

    pub fn energy_config(&self, kappa: Kappa) -> EnergyConfig {
        let m = &self.minimizer;
        EnergyConfig {
            kappa,
            eps_schedule: m.eps_schedule.clone(),
            step_tol: m.step_tol,
            grad_tol: m.grad_tol,
            max_iterations: m.max_iterations,
            inner: match m.inner {
                InnerKind::Natural => InnerCondition::Natural,
                InnerKind::HomogeneousCap => InnerCondition::HomogeneousCap,
            },
            symmetry: match m.symmetry {
                SymmetryKind::None => Symmetry::None,
                SymmetryKind::Antipodal => Symmetry::Antipodal,
            },
        }
    }

    pub fn profile_mode(&self) -> ProfileMode {
        match self.diagnostics.alpha {
            AlphaPreset::Lifted => ProfileMode::Lifted,
            AlphaPreset::Projective => ProfileMode::Projective,
        }
    }

    pub fn sample_radii(&self) -> Vec<f64> {
        if self.diagnostics.radii.is_empty() {
            dyadic_radii(self.diagnostics.r_lo, 1.0)
        } else {
            self.diagnostics.radii.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the resolved configuration, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.polar_grid().unwrap().n_radii(), 128);
    }

    #[test]
    fn dotted_keys_and_unknown_keys() {
        let cfg = ExperimentConfig::parse("kappa = 9.0\ngrid.n_theta = 64\nblowup.window = [1e-3, 0.2]\n").unwrap();
        assert_eq!(cfg.kappa, 9.0);
        assert_eq!(cfg.grid.n_theta, 64);
        assert_eq!(cfg.grid.r_min, 1e-4);
        assert!(ExperimentConfig::parse("grid.n_thetas = 64\n").is_err());
        assert!(ExperimentConfig::parse("colour = 1\n").is_err());
    }

    #[test]
    fn ranges_are_checked() {
        for text in [
            "kappa = 1.0",
            "grid.n_theta = 63",
            "grid.r_min = 0.5",
            "boundary.perturbation = 2.0",
            "minimizer.eps_schedule = [1e-2, 1e-3]",
            "blowup.window = [0.2, 0.1]",
            "diagnostics.radii = [0.5, 0.25]",
            "spectral.n_modes = 0",
        ] {
            assert!(matches!(ExperimentConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
