//! The acceptance suite behind `conelab verify`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use conelab::blowup::{decay_fit, fit_tangent, synthetic_mode_field};
use conelab::cone::{rotation_generators, Kappa, ProfileMode, TangentMapModel};
use conelab::diagnostics::{calibrated_slack, dyadic_radii, frequency_n, height_a, ring_deviation, weiss_identity_check, Direction, SeriesKind};
use conelab::energy::el_residual;
use conelab::geodesic::{integrability_check, KernelField};
use conelab::grid::{PolarGrid, VectorField};
use conelab::minimize::Minimized;
use conelab::oracles::{annulus_l2_distance, fd_jacobi_solve};
use conelab::spectral::{
    assemble_lprime, eigendecompose, expand_and_reconstruct, gamma_gap, oracle_spectrum, radial_exponent,
    radial_ode_residual, FrameField, RadialExponent, SpectralDecomposition,
};

use crate::config::ExperimentConfig;
use crate::run::{blowup_analysis, energy_log_csv, exact_profile, minimize_configured, reference_minimizer, Output};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("criterion {} {verdict} {} ({:.2} s): {}", self.id, self.name, self.elapsed.as_secs_f64(), self.detail)
    }
}

struct MinimizerRuns {
    run: Minimized,
    reference: Minimized,
    seconds: f64,
}

/// Shared state of one suite run; the minimizer pair is computed once.
pub struct Suite {
    cfg: ExperimentConfig,
    kappa: Kappa,
    minimizers: OnceLock<Result<MinimizerRuns, String>>,
    spectra: OnceLock<BTreeMap<u32, Result<SpectralDecomposition, String>>>,
    files: BTreeMap<String, String>,
}

const SPECTRUM_N: usize = 256;
const KAPPAS: [f64; 3] = [2.0, 4.0, 9.0];

type Check = Result<(bool, String), CliError>;

impl Suite {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        Ok(Suite {
            kappa: cfg.kappa()?,
            cfg: cfg.clone(),
            minimizers: OnceLock::new(),
            spectra: OnceLock::new(),
            files: BTreeMap::new(),
        })
    }

    /// CSV artifacts produced so far, keyed by file name.
    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    fn spectrum(&self, kappa: f64) -> Result<&SpectralDecomposition, CliError> {
        let map = self.spectra.get_or_init(|| {
            KAPPAS
                .iter()
                .map(|&k| {
                    let kap = Kappa::new(k).expect("valid kappa");
                    let d = assemble_lprime(SPECTRUM_N, kap).and_then(|m| eigendecompose(&m, SPECTRUM_N, kap));
                    ((k * 1000.0) as u32, d.map_err(|e| e.to_string()))
                })
                .collect()
        });
        map[&((kappa * 1000.0) as u32)].as_ref().map_err(|e| CliError::Config(e.clone()))
    }

    fn minimizers(&self) -> Result<&MinimizerRuns, CliError> {
        self.minimizers
            .get_or_init(|| {
                let start = Instant::now();
                let run = minimize_configured(&self.cfg).map_err(|e| e.to_string())?;
                let reference = reference_minimizer(&self.cfg, run.field.grid_arc().clone()).map_err(|e| e.to_string())?;
                Ok(MinimizerRuns { run, reference, seconds: start.elapsed().as_secs_f64() })
            })
            .as_ref()
            .map_err(|e| CliError::Config(format!("minimization failed: {e}")))
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        r.set_stream(stream);
        r
    }

    fn kernel_classification(&mut self) -> Check {
        let mut ok = true;
        let mut detail = String::new();
        for k in KAPPAS {
            let d = self.spectrum(k)?;
            let dim = d.kernel_indices().len();
            let angle = d.kernel_angle();
            ok &= dim == 3 && angle < 1e-6;
            write!(detail, "kappa={k}: dim={dim} angle={angle:.2e}; ").unwrap();
            let csv = d.to_csv(self.cfg.spectral.n_modes);
            self.files.insert(format!("spectrum_kappa{k}.csv"), csv);
        }
        Ok((ok, detail.trim_end_matches("; ").to_string()))
    }

    fn oracle_equivalence(&mut self) -> Check {
        let mut worst: f64 = 0.0;
        for k in [2.0, 4.0] {
            let d = self.spectrum(k)?;
            let oracle = oracle_spectrum(SPECTRUM_N, Kappa::new(k)?);
            for (a, b) in d.eigenvalues.iter().zip(&oracle).take(40) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok((worst < 1e-8, format!("max |lambda - oracle| over 40 lowest = {worst:.2e}")))
    }

    fn exponent_law(&mut self) -> Check {
        let kappa = Kappa::new(4.0)?;
        let d = self.spectrum(4.0)?;
        let mut rng = self.rng(3);
        let pool: Vec<usize> = (0..self.cfg.spectral.n_modes.min(d.len()))
            .filter(|&j| d.exponents[j].retained().is_some())
            .collect();
        let mut picks: Vec<usize> = Vec::new();
        while picks.len() < 10.min(pool.len()) {
            let j = pool[rng.gen_range(0..pool.len())];
            if !picks.contains(&j) {
                picks.push(j);
            }
        }
        picks.sort_unstable();
        let radii: Vec<f64> = (0..10).map(|i| 10f64.powf(-3.0 + i as f64 / 3.0)).collect();
        let mut ode: f64 = 0.0;
        for &j in &picks {
            let gamma = d.exponents[j].retained().expect("filtered");
            for &r in &radii {
                ode = ode.max(radial_ode_residual(gamma, d.eigenvalues[j], kappa, r).abs());
            }
        }
        let log_dropped = matches!(radial_exponent(-0.25, kappa, 1e-8), RadialExponent::Logarithmic { .. })
            && radial_exponent(-0.25, kappa, 1e-8).retained().is_none();
        let osc = radial_exponent(-1.0, kappa, 1e-8);
        let j3_dropped = matches!(osc, RadialExponent::Oscillatory { .. }) && osc.retained().is_none();

        // Outer data exciting a J3 mode (constant h) next to growth modes.
        let outer = FrameField::from_fn(SPECTRUM_N, kappa, |t| [0.2 * (2.0 * t).cos(), 0.3 * t.sin(), 0.5 + (3.0 * t).sin()])?;
        let prof = expand_and_reconstruct(d, &outer, &outer, 0.1, true)?;
        let selection = prof.modes.iter().all(|m| match m.exponent {
            RadialExponent::Oscillatory { .. } | RadialExponent::Logarithmic { .. } => m.a == 0.0 && m.b == 0.0,
            _ => m.b == 0.0,
        }) && prof.energy_finite();

        let n = 32;
        let small = eigendecompose(&assemble_lprime(n, kappa)?, n, kappa)?;
        let outer = FrameField::from_fn(n, kappa, |t| [0.3 * (2.0 * t).cos(), 0.5 + 0.1 * t.sin(), (3.0 * t).sin()])?;
        let inner = FrameField::from_fn(n, kappa, |t| [0.1 * t.cos(), 0.5, 0.2 * t.cos()])?;
        let r0: f64 = 0.2;
        let rec = expand_and_reconstruct(&small, &outer, &inner, r0, false)?;
        let n_t = 800;
        let fd = fd_jacobi_solve(kappa, r0, n_t, &inner, &outer)?;
        let h = -r0.ln() / n_t as f64;
        let sampled: Vec<FrameField> = (0..=n_t).map(|i| rec.eval((r0.ln() + i as f64 * h).exp())).collect();
        let l2 = annulus_l2_distance(r0, &fd, &sampled);

        let ok = ode < 1e-10 && log_dropped && j3_dropped && selection && l2 < 1e-4;
        Ok((
            ok,
            format!(
                "ode residual {ode:.2e} over modes {picks:?}; log dropped {log_dropped}; J3 dropped {j3_dropped}; bounded selection {selection}; FD L2 {l2:.2e}"
            ),
        ))
    }

    fn exact_profile_consistency(&mut self) -> Check {
        let kappa = self.kappa;
        let alpha = kappa.alpha_lifted();
        let mut res = Vec::new();
        for n in [33, 65, 129] {
            let g = Arc::new(PolarGrid::new(1e-2, n, 64)?);
            let f = VectorField::from_fn(g, move |r, t| {
                let s = r.powf(alpha);
                [s * t.cos(), s * t.sin(), 0.0]
            });
            res.push(el_residual(&f, kappa)?.res_full);
        }
        let orders = [(res[0] / res[1]).log2(), (res[1] / res[2]).log2()];

        let grid = self.cfg.polar_grid()?;
        let mut cfg = self.cfg.clone();
        cfg.diagnostics.alpha = crate::config::AlphaPreset::Lifted;
        let profile = exact_profile(&cfg, grid.clone())?;
        let u = profile.lift(kappa);
        let n_series = frequency_n(&u, grid.radii())?;
        let n_err = n_series.values.iter().map(|v| (v - alpha).abs()).fold(0.0, f64::max);
        let rhos = dyadic_radii(grid.r_inner(), 1.0);
        let a = height_a(&u, &rhos, alpha)?;
        let a_spread = a.values.iter().map(|v| (v / a.values[0] - 1.0).abs()).fold(0.0, f64::max);
        let n = grid.n_radii();
        let weiss = weiss_identity_check(&u, grid.radii()[1], grid.radii()[n - 2], alpha)?.raw;
        self.files.insert("profile_frequency_N.csv".into(), n_series.to_csv());
        self.files.insert("profile_height_A.csv".into(), a.to_csv());

        let ok = orders.iter().all(|&o| o >= 1.8) && n_err <= 0.01 && a_spread <= 1e-4 && weiss <= 1e-6;
        Ok((
            ok,
            format!(
                "el orders {:.3}, {:.3}; max |N - alpha| {n_err:.2e}; A spread {a_spread:.2e}; Weiss residual {weiss:.2e}",
                orders[0], orders[1]
            ),
        ))
    }

    fn minimizer_diagnostics(&mut self) -> Check {
        let kappa = self.kappa;
        let alpha = kappa.alpha_lifted();
        let radii = self.cfg.sample_radii();
        let m = self.minimizers()?;
        let u = m.run.field.lift(kappa);
        let uref = m.reference.field.lift(kappa);
        let a = height_a(&u, &radii, alpha)?;
        let n = frequency_n(&u, &radii)?;
        let sa = calibrated_slack(&uref, SeriesKind::HeightA, &radii, alpha)?;
        let sn = calibrated_slack(&uref, SeriesKind::FrequencyN, &radii, alpha)?;
        let audit_a = a.audit(Direction::Increasing, sa);
        let audit_n = n.audit(Direction::Increasing, sn);
        let ring = ring_deviation(&u, &radii, alpha)?;
        let excess = ring.worst_excess();
        let seconds = m.seconds;
        let (field_csv, log_csv) = (m.run.field.to_csv(), energy_log_csv(&m.run));
        self.files.insert("field.csv".into(), field_csv);
        self.files.insert("energy_log.csv".into(), log_csv);
        self.files.insert("height_A.csv".into(), a.to_csv());
        self.files.insert("frequency_N.csv".into(), n.to_csv());
        self.files.insert("ring_deviation.csv".into(), ring.series.to_csv());
        let ok = audit_a.monotone && audit_n.monotone && excess <= 1e-6 && seconds < 300.0;
        Ok((
            ok,
            format!(
                "A worst {:.3e} (slack {sa:.3e}); N worst {:.3e} (slack {sn:.3e}); ring excess {excess:.3e}; minimization {seconds:.1} s",
                audit_a.worst_violation, audit_n.worst_violation
            ),
        ))
    }

    fn decay(&mut self) -> Check {
        let kappa = self.kappa;
        let field = self.minimizers()?.run.field.clone();
        let mut cfg = self.cfg.clone();
        cfg.diagnostics.alpha = crate::config::AlphaPreset::Lifted;
        let outcome = blowup_analysis(&cfg, &field)?;
        self.files.insert("residuals.csv".into(), outcome.fit.residual_csv());
        let fit = &outcome.fit;

        let gamma = gamma_gap(kappa);
        let n = 64;
        let d = eigendecompose(&assemble_lprime(n, kappa)?, n, kappa)?;
        let j = (0..d.len())
            .find(|&j| d.eigenvalues[j] > d.zero_tolerance)
            .ok_or_else(|| CliError::Config("no positive eigenvalue".into()))?;
        let truth = TangentMapModel::new(2.0, rotation_generators(0.7, 1), ProfileMode::Lifted, kappa)?;
        let g = Arc::new(PolarGrid::new(1e-4, 129, n)?);
        let synthetic = synthetic_mode_field(&truth, g, &d.eigenfield(j), gamma, 2e-3)?;
        let syn = decay_fit(&synthetic, &truth, [4e-4, 0.1])?;
        let rel = (syn.mu_est - gamma).abs() / gamma;
        let ok = fit.mu_est > 0.0 && fit.r_squared >= 0.9 && rel < 0.02;
        Ok((
            ok,
            format!(
                "minimizer mu {:.4} R2 {:.4}; synthetic mu {:.5} vs Gamma {gamma:.5} ({:.2}%)",
                fit.mu_est,
                fit.r_squared,
                syn.mu_est,
                100.0 * rel
            ),
        ))
    }

    fn rotation_fit(&mut self) -> Check {
        let kappa = self.kappa;
        let m = self.minimizers()?;
        let fit = fit_tangent(&m.run.field, self.cfg.blowup.model_radius, kappa, ProfileMode::Lifted)?;
        let angle = fit.theta.angle_to(&self.cfg.rotation());
        let mut rng = self.rng(7);
        let rot = rotation_generators(rng.gen_range(-3.0..3.0), 1)
            .compose(&rotation_generators(rng.gen_range(-1.5..1.5), 2))
            .compose(&rotation_generators(rng.gen_range(-3.0..3.0), 3));
        let a0 = rng.gen_range(0.5..3.0);
        let truth = TangentMapModel::new(a0, rot, ProfileMode::Lifted, kappa)?;
        let g = self.cfg.polar_grid()?;
        let f = VectorField::from_fn(g, move |r, t| truth.eval_y(r, t).into());
        let exact = fit_tangent(&f, 0.05, kappa, ProfileMode::Lifted)?;
        let a_err = (exact.a0 - a0).abs() / a0;
        let r_err = exact.theta.angle_to(&rot);
        let ok = angle < 1e-2 && a_err < 1e-8 && r_err < 1e-8;
        Ok((ok, format!("minimizer angle {angle:.2e} rad; synthetic a0 rel err {a_err:.2e}, angle {r_err:.2e}")))
    }

    fn geodesic(&mut self) -> Check {
        let mut rng = self.rng(8);
        let ts = [1e-1, 1e-2, 1e-3];
        let mut csv = String::from("sample,a,b,c,t,unit_defect,geodesic_residual,taylor_ratio\n");
        let (mut unit, mut geo, mut c_max, mut growth) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for s in 0..20 {
            let (a, b, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let k = KernelField::new(a, b, c);
            let reps: Vec<_> = ts.iter().map(|&t| integrability_check(&k, t, 64)).collect();
            for (t, r) in ts.iter().zip(&reps) {
                writeln!(
                    csv,
                    "{s},{a:.16e},{b:.16e},{c:.16e},{t:.16e},{:.16e},{:.16e},{:.16e}",
                    r.unit_defect, r.geodesic_residual, r.taylor_ratio
                )
                .unwrap();
                unit = unit.max(r.unit_defect);
                geo = geo.max(r.geodesic_residual);
                c_max = c_max.max(r.taylor_ratio);
            }
            let first = reps[0].taylor_ratio.max(1e-300);
            growth = growth.max(reps.iter().map(|r| r.taylor_ratio / first).fold(0.0, f64::max));
        }
        self.files.insert("geodesic.csv".into(), csv);
        let ok = unit <= 1e-12 && geo <= 1e-12 && growth <= 2.0 && c_max.is_finite();
        Ok((
            ok,
            format!("max unit defect {unit:.2e}; max geodesic residual {geo:.2e}; C = {c_max:.4}; ratio growth over t {growth:.3}"),
        ))
    }

    /// Criteria 1 to 8, in order.
    pub fn run_criteria(&mut self) -> Vec<CriterionResult> {
        type Step = fn(&mut Suite) -> Check;
        let steps: [(&'static str, f64, Step); 8] = [
            ("kernel classification", 10.0, Suite::kernel_classification),
            ("spectrum-oracle equivalence", 30.0, Suite::oracle_equivalence),
            ("exponent law", f64::INFINITY, Suite::exponent_law),
            ("exact-profile consistency", 60.0, Suite::exact_profile_consistency),
            ("minimizer diagnostics", 300.0, Suite::minimizer_diagnostics),
            ("decay fit", 60.0, Suite::decay),
            ("rotation-fit equivariance", f64::INFINITY, Suite::rotation_fit),
            ("geodesic integrability", f64::INFINITY, Suite::geodesic),
        ];
        let mut out = Vec::new();
        for (i, (name, budget, step)) in steps.into_iter().enumerate() {
            let start = Instant::now();
            let (pass, mut detail) = match step(self) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            let elapsed = start.elapsed();
            let in_budget = elapsed.as_secs_f64() < budget;
            if !in_budget {
                write!(detail, "; over the {budget} s budget").unwrap();
            }
            out.push(CriterionResult { id: i + 1, name, pass: pass && in_budget, detail, elapsed });
        }
        out
    }
}

/// Byte comparison of two artifact sets; returns the names that differ.
pub fn artifact_mismatches(a: &BTreeMap<String, String>, b: &BTreeMap<String, String>) -> Vec<String> {
    let mut names: Vec<String> = a.keys().chain(b.keys()).cloned().collect();
    names.sort();
    names.dedup();
    names.into_iter().filter(|n| a.get(n) != b.get(n)).collect()
}

/// Run criteria 1 to 8, write their CSVs, then repeat the suite from scratch
/// and compare every CSV byte for byte (criterion 9).
pub fn cmd_verify(cfg: &ExperimentConfig, out: &Output) -> Result<Vec<CriterionResult>, CliError> {
    let mut suite = Suite::new(cfg)?;
    let mut results = suite.run_criteria();
    for r in &results {
        println!("{}", r.line());
    }
    for (name, content) in suite.files() {
        out.write(name, content)?;
    }

    let start = Instant::now();
    let mut again = Suite::new(cfg)?;
    again.run_criteria();
    let mut mismatched = artifact_mismatches(suite.files(), again.files());
    for (name, content) in suite.files() {
        let on_disk = std::fs::read_to_string(out.dir.join(name)).map_err(|e| CliError::Io(e.to_string()))?;
        if &on_disk != content && !mismatched.contains(name) {
            mismatched.push(name.clone());
        }
    }
    let det = CriterionResult {
        id: 9,
        name: "determinism",
        pass: mismatched.is_empty(),
        detail: if mismatched.is_empty() {
            format!("{} CSV files byte-identical across two runs", suite.files().len())
        } else {
            format!("differing files: {}", mismatched.join(", "))
        },
        elapsed: start.elapsed(),
    };
    println!("{}", det.line());
    results.push(det);

    let mut summary = String::new();
    for r in &results {
        writeln!(summary, "{} {}", r.id, if r.pass { "PASS" } else { "FAIL" }).unwrap();
    }
    out.write("verify_summary.txt", &summary)?;
    let failed = results.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::Acceptance { failed });
    }
    Ok(results)
}
