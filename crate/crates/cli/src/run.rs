//! The `minimize`, `diagnose`, `spectrum` and `blowup` subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use conelab::blowup::{decay_fit, fit_tangent, BlowupFit, TangentFit};
use conelab::cone::TangentMapModel;
use conelab::diagnostics::{
    calibrated_slack, frequency_n, height_a, ring_deviation, weiss_identity_check, weiss_w, AuditReport,
    DiagnosticSeries, Direction, SeriesKind,
};
use conelab::energy::BoundarySpec;
use conelab::grid::{PolarGrid, VectorField};
use conelab::minimize::{minimize, Init, Minimized};
use conelab::spectral::{assemble_lprime, eigendecompose, gamma_gap, smallest_positive_eigenvalue, SpectralDecomposition};

use crate::config::ExperimentConfig;
use crate::svg::{line_plot, Curve};
use crate::CliError;

/// Destination directory plus console verbosity.
pub struct Output {
    pub dir: PathBuf,
    pub quiet: bool,
    pub config_hash: String,
}

impl Output {
    pub fn new(dir: &Path, quiet: bool, cfg: &ExperimentConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let out = Output { dir: dir.to_path_buf(), quiet, config_hash: cfg.hash() };
        out.write("resolved_config.toml", &cfg.to_toml())?;
        Ok(out)
    }

    pub fn write(&self, name: &str, content: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

/// Where `diagnose` takes its field from.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Minimize,
    ExactProfile,
    File(PathBuf),
}

pub fn energy_log_csv(run: &Minimized) -> String {
    let mut s = String::from("stage,eps,iteration,energy,residual\n");
    for e in &run.log {
        writeln!(s, "{},{:.16e},{},{:.16e},{:.16e}", e.stage, e.eps, e.iteration, e.energy, e.residual).unwrap();
    }
    s
}

pub fn minimize_with(cfg: &ExperimentConfig, boundary: &BoundarySpec, grid: Arc<PolarGrid>) -> Result<Minimized, CliError> {
    let kappa = cfg.kappa()?;
    Ok(minimize(boundary, grid, Init::HomogeneousSeed, &cfg.energy_config(kappa))?)
}

pub fn minimize_configured(cfg: &ExperimentConfig) -> Result<Minimized, CliError> {
    minimize_with(cfg, &cfg.boundary_spec()?, cfg.polar_grid()?)
}

/// Minimizer for the unperturbed rotated equator on the same grid.
pub fn reference_minimizer(cfg: &ExperimentConfig, grid: Arc<PolarGrid>) -> Result<Minimized, CliError> {
    minimize_with(cfg, &BoundarySpec::equator(cfg.rotation()), grid)
}

/// `r^α Θ(cos θ, sin θ, 0)` on the configured grid.
pub fn exact_profile(cfg: &ExperimentConfig, grid: Arc<PolarGrid>) -> Result<VectorField, CliError> {
    let alpha = cfg.kappa()?.alpha(cfg.profile_mode());
    let rot = cfg.rotation();
    let mode = cfg.profile_mode();
    Ok(VectorField::from_fn(grid, move |r, t| {
        (rot.apply(&conelab::cone::reference_profile(mode, t)) * r.powf(alpha)).into()
    }))
}

pub fn cmd_minimize(cfg: &ExperimentConfig, out: &Output) -> Result<Minimized, CliError> {
    let run = minimize_configured(cfg)?;
    out.write("field.csv", &run.field.to_csv())?;
    out.write("energy_log.csv", &energy_log_csv(&run))?;
    out.say(format!("energy = {:.12e}", run.energy));
    out.say(format!("residual = {:.3e}", run.residual));
    out.say(format!("iterations = {}", run.iterations));
    Ok(run)
}

/// Series and audit verdicts for one field.
pub struct DiagnosticsBundle {
    pub height: DiagnosticSeries,
    pub frequency: DiagnosticSeries,
    pub weiss: DiagnosticSeries,
    pub ring: conelab::diagnostics::RingDeviation,
    pub audits: Vec<(SeriesKind, AuditReport)>,
    pub ring_excess: f64,
    pub weiss_identity: f64,
}

impl DiagnosticsBundle {
    pub fn all_pass(&self) -> bool {
        self.audits.iter().all(|(_, a)| a.monotone) && self.ring_excess <= 1e-6
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        for (kind, a) in &self.audits {
            let verdict = if a.monotone { "PASS" } else { "FAIL" };
            writeln!(
                s,
                "{} increasing: {verdict} worst_violation = {:.6e} tolerance = {:.6e}",
                kind.name(),
                a.worst_violation,
                a.tolerance
            )
            .unwrap();
        }
        let verdict = if self.ring_excess <= 1e-6 { "PASS" } else { "FAIL" };
        writeln!(s, "ring_deviation bound: {verdict} worst_excess = {:.6e} tolerance = 1e-6", self.ring_excess).unwrap();
        writeln!(s, "weiss_identity residual = {:.6e}", self.weiss_identity).unwrap();
        s
    }
}

/// A, N, W and ring deviation of `field` at `radii`, audited with slack
/// calibrated on `reference`.
pub fn diagnostics_bundle(
    cfg: &ExperimentConfig,
    field: &VectorField,
    reference: &VectorField,
    radii: &[f64],
) -> Result<DiagnosticsBundle, CliError> {
    let kappa = cfg.kappa()?;
    let alpha = kappa.alpha(cfg.profile_mode());
    let u = field.lift(kappa);
    let uref = reference.lift(kappa);
    let height = height_a(&u, radii, alpha)?;
    let frequency = frequency_n(&u, radii)?;
    let weiss = weiss_w(&u, radii, alpha)?;
    let ring = ring_deviation(&u, radii, alpha)?;
    let mut audits = Vec::new();
    for (kind, series) in [(SeriesKind::HeightA, &height), (SeriesKind::FrequencyN, &frequency), (SeriesKind::WeissW, &weiss)] {
        let slack = calibrated_slack(&uref, kind, radii, alpha)?;
        audits.push((kind, series.audit(Direction::Increasing, slack)));
    }
    let ring_excess = ring.worst_excess();
    let grid = field.grid();
    let n = grid.n_radii();
    let weiss_identity = weiss_identity_check(&u, grid.radii()[1], grid.radii()[n - 2], alpha)?.raw;
    Ok(DiagnosticsBundle { height, frequency, weiss, ring, audits, ring_excess, weiss_identity })
}

pub fn write_diagnostics(out: &Output, b: &DiagnosticsBundle) -> Result<(), CliError> {
    for series in [&b.height, &b.frequency, &b.weiss, &b.ring.series] {
        let name = series.kind.name();
        out.write(&format!("{name}.csv"), &series.to_csv())?;
        let curve = Curve { label: name, xs: &series.radii, ys: &series.values };
        out.write(&format!("{name}.svg"), &line_plot(name, name, &[curve], false, &out.config_hash))?;
    }
    out.write("audit.txt", &b.report())?;
    Ok(())
}

pub fn cmd_diagnose(cfg: &ExperimentConfig, out: &Output, source: &FieldSource) -> Result<DiagnosticsBundle, CliError> {
    let (field, reference) = match source {
        FieldSource::ExactProfile => {
            let f = exact_profile(cfg, cfg.polar_grid()?)?;
            (f.clone(), f)
        }
        FieldSource::Minimize => {
            let run = minimize_configured(cfg)?;
            let reference = reference_minimizer(cfg, run.field.grid_arc().clone())?;
            (run.field, reference.field)
        }
        FieldSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let f = VectorField::from_csv(&text)?;
            let reference = reference_minimizer(cfg, f.grid_arc().clone())?;
            (f, reference.field)
        }
    };
    let bundle = diagnostics_bundle(cfg, &field, &reference, &cfg.sample_radii())?;
    write_diagnostics(out, &bundle)?;
    out.say(bundle.report().trim_end());
    Ok(bundle)
}

pub fn decomposition(cfg: &ExperimentConfig) -> Result<SpectralDecomposition, CliError> {
    let kappa = cfg.kappa()?;
    let n = cfg.spectral.n_theta;
    Ok(eigendecompose(&assemble_lprime(n, kappa)?, n, kappa)?)
}

pub fn kernel_report(d: &SpectralDecomposition) -> String {
    let kappa = d.kappa;
    let mut s = String::new();
    writeln!(s, "kappa = {:.16e}", kappa.value()).unwrap();
    writeln!(s, "n_theta = {}", d.n_theta).unwrap();
    writeln!(s, "dim={}", d.kernel_indices().len()).unwrap();
    writeln!(s, "zero_tolerance = {:.6e}", d.zero_tolerance).unwrap();
    writeln!(s, "kernel_angle = {:.6e}", d.kernel_angle()).unwrap();
    writeln!(s, "symmetry_defect = {:.6e}", d.symmetry_defect).unwrap();
    writeln!(s, "smallest_positive_eigenvalue = {:.16e}", smallest_positive_eigenvalue(kappa)).unwrap();
    writeln!(s, "gamma = {:.16e}", gamma_gap(kappa)).unwrap();
    s
}

pub fn cmd_spectrum(cfg: &ExperimentConfig, out: &Output) -> Result<SpectralDecomposition, CliError> {
    let d = decomposition(cfg)?;
    out.write("spectrum.csv", &d.to_csv(cfg.spectral.n_modes))?;
    let report = kernel_report(&d);
    out.write("kernel.txt", &report)?;
    out.say(report.trim_end());
    Ok(d)
}

/// Tangent fit at the model radius followed by the decay regression.
pub struct BlowupOutcome {
    pub tangent: TangentFit,
    pub rotation_error: f64,
    pub fit: BlowupFit,
}

impl BlowupOutcome {
    pub fn report(&self) -> String {
        let mut s = String::new();
        writeln!(s, "tangent_a0 = {:.16e}", self.tangent.a0).unwrap();
        writeln!(s, "tangent_residual = {:.6e}", self.tangent.residual).unwrap();
        writeln!(s, "rotation_error = {:.6e}", self.rotation_error).unwrap();
        s.push_str(&self.fit.report());
        s
    }
}

pub fn blowup_analysis(cfg: &ExperimentConfig, field: &VectorField) -> Result<BlowupOutcome, CliError> {
    let kappa = cfg.kappa()?;
    let mode = cfg.profile_mode();
    let tangent = fit_tangent(field, cfg.blowup.model_radius, kappa, mode)?;
    let rotation_error = tangent.theta.angle_to(&cfg.rotation());
    let model = TangentMapModel::new(tangent.a0, tangent.theta, mode, kappa)?;
    let fit = decay_fit(field, &model, cfg.blowup.window)?;
    Ok(BlowupOutcome { tangent, rotation_error, fit })
}

pub fn write_blowup(out: &Output, b: &BlowupOutcome) -> Result<(), CliError> {
    out.write("blowup_report.txt", &b.report())?;
    out.write("residuals.csv", &b.fit.residual_csv())?;
    let s = &b.fit.residual_series;
    let curves = [
        Curve { label: "e_c0", xs: &s.radii, ys: &s.values },
        Curve { label: "e_c1", xs: &s.radii, ys: &b.fit.e_c1 },
        Curve { label: "e_c2", xs: &s.radii, ys: &b.fit.e_c2 },
    ];
    out.write("residuals.svg", &line_plot("tangent residual", "e", &curves, true, &out.config_hash))?;
    Ok(())
}

pub fn cmd_blowup(cfg: &ExperimentConfig, out: &Output) -> Result<BlowupOutcome, CliError> {
    let run = minimize_configured(cfg)?;
    let b = blowup_analysis(cfg, &run.field)?;
    write_blowup(out, &b)?;
    out.say(b.report().trim_end());
    Ok(b)
}
