//! Rescalings at the defect, tangent-map fitting and decay rates.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use crate::circle::Fourier;
use crate::cone::{reference_profile, Kappa, ProfileMode, Rotation3, TangentMapModel};
use crate::diagnostics::{height_a, DiagnosticSeries, SeriesKind};
use crate::error::{LabError, Result};
use crate::grid::{AmbientField, GridField, PolarGrid, VectorField};
use crate::norms::{weighted_norm, RadiusWindow};
use crate::spectral::FrameField;

/// `x ↦ ρ^{−α} u(ρx)` sampled on `target`.
pub fn rescale<const D: usize>(
    field: &GridField<D>,
    rho: f64,
    alpha: f64,
    target: Arc<PolarGrid>,
) -> Result<GridField<D>> {
    if target.n_theta() != field.grid().n_theta() {
        return Err(LabError::Invalid("rescale target must share the angular resolution".into()));
    }
    if !(rho > 0.0) {
        return Err(LabError::Invalid(format!("rho must be positive, got {rho}")));
    }
    let mut values = Vec::with_capacity(target.n_nodes());
    for &r in target.radii() {
        let row = field.restrict_normalized(rho * r, alpha)?;
        let c = r.powf(alpha);
        values.extend(row.into_iter().map(|v| v.map(|x| c * x)));
    }
    GridField::new(target, values)
}

/// `rescale` divided by `A(ρ)`, so that the exact model has unit `L²(B₁)` mass.
pub fn rescale_normalized<const D: usize>(
    field: &GridField<D>,
    rho: f64,
    alpha: f64,
    target: Arc<PolarGrid>,
) -> Result<GridField<D>> {
    let a = height_a(field, &[rho], alpha)?.values[0];
    if a < 1e-300 {
        return Err(LabError::Degenerate(format!("field vanishes on B_{rho}")));
    }
    Ok(rescale(field, rho, alpha, target)?.scaled(1.0 / a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentFit {
    pub a0: f64,
    pub theta: Rotation3,
    /// `max_θ |y − A₀ c_κ r^α Θ g|` on the fitting circle.
    pub residual: f64,
    pub singular_values: [f64; 3],
}

/// Least-squares rotation and amplitude matching `y` on `∂B_{r_fit}` to the
/// reference profile.
pub fn fit_tangent(field: &VectorField, r_fit: f64, kappa: Kappa, mode: ProfileMode) -> Result<TangentFit> {
    let grid = field.grid();
    let alpha = kappa.alpha(mode);
    let ra = r_fit.powf(alpha);
    let ys: Vec<[f64; 3]> = field.restrict_normalized(r_fit, alpha)?.into_iter().map(|v| v.map(|x| ra * x)).collect();
    let nt = grid.n_theta();
    let dth = grid.dtheta();
    let gs: Vec<Vector3<f64>> = (0..nt).map(|j| reference_profile(mode, grid.theta(j))).collect();
    let mass: f64 = ys.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>()).sum();
    if mass <= 0.0 {
        return Err(LabError::Degenerate(format!("field vanishes on the circle r = {r_fit}")));
    }
    let mut m = Matrix3::zeros();
    for (y, g) in ys.iter().zip(&gs) {
        m += Vector3::from(*y) * g.transpose() * (dth / std::f64::consts::PI);
    }
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = idx.map(|k| svd.singular_values[k]);
    if sv[0].abs() < 1e-10 || sv[1].abs() < 1e-10 {
        return Err(LabError::DegenerateFit(sv));
    }
    let d = (u * vt).determinant().signum();
    let mut corr = Matrix3::identity();
    corr[(idx[2], idx[2])] = d;
    let theta = Rotation3::from_matrix_unchecked(u * corr * vt);
    let scale = kappa.c_kappa() * r_fit.powf(alpha);
    let proj: f64 = ys.iter().zip(&gs).map(|(y, g)| Vector3::from(*y).dot(&theta.apply(g))).sum::<f64>() * dth;
    let g2: f64 = gs.iter().map(|g| g.norm_squared()).sum::<f64>() * dth;
    let a0 = proj / (scale * g2);
    let residual = ys
        .iter()
        .zip(&gs)
        .map(|(y, g)| (Vector3::from(*y) - theta.apply(g) * (a0 * scale)).norm())
        .fold(0.0, f64::max);
    Ok(TangentFit { a0, theta, residual, singular_values: sv })
}

/// The model sampled on `grid` and lifted to the cone.
pub fn model_field(model: &TangentMapModel, grid: Arc<PolarGrid>) -> AmbientField {
    let m = *model;
    VectorField::from_fn(grid, move |r, t| m.eval_y(r, t).into()).lift(model.kappa)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub norm: f64,
}

/// Whether `‖u − A₀ r^α h‖_{1, λ³} ≤ ε` for the lifted field.
pub fn q_membership(field: &VectorField, model: &TangentMapModel, epsilon: f64, lambda: f64) -> Result<Membership> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(LabError::Invalid(format!("lambda must lie in (0, 1/2), got {lambda}")));
    }
    let grid = field.grid_arc().clone();
    let diff = field.lift(model.kappa).sub(&model_field(model, grid));
    let window = match model.mode {
        ProfileMode::Projective => RadiusWindow::Standard,
        ProfileMode::Lifted => RadiusWindow::Lifted,
    };
    let norm = weighted_norm(&diff, 1.0, lambda.powi(3), model.alpha(), window)?;
    Ok(Membership { member: norm <= epsilon, norm })
}

/// The rate `μ = log 2 / log(1/λ)`.
pub fn mu_from_lambda(lambda: f64) -> f64 {
    std::f64::consts::LN_2 / (1.0 / lambda).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupFit {
    pub a0_est: f64,
    /// `A(ρ)/‖profile‖` at the smallest window radius.
    pub a0_height: f64,
    pub theta_est: Rotation3,
    pub residual_series: DiagnosticSeries,
    pub e_c1: Vec<f64>,
    pub e_c2: Vec<f64>,
    /// `+∞` when the residual is below the floor everywhere.
    pub mu_est: f64,
    pub c0_est: f64,
    pub r0_est: f64,
    pub window: [f64; 2],
    pub r_squared: f64,
    pub poor_fit: bool,
    /// `e(r) ≤ c₀ r^{α+μ} (1 + 0.05)` at every sample.
    pub bound_holds: bool,
}

impl BlowupFit {
    pub fn residual_csv(&self) -> String {
        let mut s = String::from("r,e_c0,e_c1,e_c2\n");
        for (k, r) in self.residual_series.radii.iter().enumerate() {
            writeln!(s, "{r:.16e},{:.16e},{:.16e},{:.16e}", self.residual_series.values[k], self.e_c1[k], self.e_c2[k])
                .unwrap();
        }
        s
    }

    pub fn report(&self) -> String {
        let q = self.theta_est.matrix();
        let mut s = String::new();
        writeln!(s, "a0_est = {:.16e}", self.a0_est).unwrap();
        writeln!(s, "a0_height = {:.16e}", self.a0_height).unwrap();
        writeln!(s, "theta_est = [{}]", q.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(", ")).unwrap();
        writeln!(s, "mu_est = {:.16e}", self.mu_est).unwrap();
        writeln!(s, "c0_est = {:.16e}", self.c0_est).unwrap();
        writeln!(s, "r0_est = {:.16e}", self.r0_est).unwrap();
        writeln!(s, "window = [{:.16e}, {:.16e}]", self.window[0], self.window[1]).unwrap();
        writeln!(s, "r_squared = {:.16e}", self.r_squared).unwrap();
        writeln!(s, "poor_fit = {}", self.poor_fit).unwrap();
        writeln!(s, "bound_holds = {}", self.bound_holds).unwrap();
        s
    }
}

const RESIDUAL_FLOOR: f64 = 1e-14;

/// Regress `log e(r)` on `log r` over the grid radii in `window`, where
/// `e(r) = max_θ |u − A₀ r^α h|` for the lifted field.
pub fn decay_fit(field: &VectorField, model: &TangentMapModel, window: [f64; 2]) -> Result<BlowupFit> {
    let [lo, hi] = window;
    let grid = field.grid_arc().clone();
    let rows: Vec<usize> = (0..grid.n_radii())
        .filter(|&i| {
            let r = grid.radii()[i];
            r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)
        })
        .collect();
    if lo < grid.r_inner() * (1.0 - 1e-12) || hi > grid.r_max() * (1.0 + 1e-12) {
        return Err(LabError::Range { lo, hi, min: grid.r_inner(), max: grid.r_max() });
    }
    if rows.len() < 8 {
        return Err(LabError::Invalid(format!("decay fit needs at least 8 sample radii, window has {}", rows.len())));
    }
    let diff = field.lift(model.kappa).sub(&model_field(model, grid.clone()));
    let nt = grid.n_theta();
    let four = Fourier::new(nt);
    let (mut radii, mut e0, mut e1, mut e2) = (vec![], vec![], vec![], vec![]);
    for &i in &rows {
        let row = diff.row(i);
        let sup = |vals: &[Vec<f64>]| (0..nt).map(|j| vals.iter().map(|v| v[j] * v[j]).sum::<f64>().sqrt()).fold(0.0, f64::max);
        let comps: Vec<Vec<f64>> = (0..4).map(|c| row.iter().map(|v| v[c]).collect()).collect();
        let d1: Vec<Vec<f64>> = comps.iter().map(|c| four.derivative(c, 1)).collect();
        let d2: Vec<Vec<f64>> = comps.iter().map(|c| four.derivative(c, 2)).collect();
        radii.push(grid.radii()[i]);
        e0.push(sup(&comps));
        e1.push(sup(&d1));
        e2.push(sup(&d2));
    }
    let alpha = model.alpha();
    let a0_height = height_a(&field.lift(model.kappa), &[lo], alpha)?.values[0] / model.unit_l2_norm();
    let series = DiagnosticSeries { radii: radii.clone(), values: e0.clone(), kind: SeriesKind::TangentResidual, alpha: Some(alpha) };
    let base = BlowupFit {
        a0_est: model.a0,
        a0_height,
        theta_est: model.theta,
        residual_series: series,
        e_c1: e1,
        e_c2: e2,
        mu_est: f64::INFINITY,
        c0_est: 0.0,
        r0_est: hi,
        window,
        r_squared: 1.0,
        poor_fit: false,
        bound_holds: true,
    };
    if e0.iter().all(|&e| e < RESIDUAL_FLOOR) {
        return Ok(base);
    }
    if e0.iter().any(|&e| e < RESIDUAL_FLOOR) {
        return Err(LabError::Degenerate("residual vanishes at some but not all sample radii".into()));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = e0.iter().map(|e| e.ln()).collect();
    let (slope, intercept, r2) = linear_regression(&xs, &ys);
    let c0 = intercept.exp();
    let bound_holds = radii.iter().zip(&e0).all(|(r, e)| *e <= c0 * r.powf(slope) * 1.05);
    Ok(BlowupFit { mu_est: slope - alpha, c0_est: c0, r_squared: r2, poor_fit: r2 < 0.9, bound_holds, ..base })
}

/// `truth + δ r^{α+rate} Θ(f n + g n⊥ + h e₃)` for one angular profile `ψ`.
pub fn synthetic_mode_field(
    truth: &TangentMapModel,
    grid: Arc<PolarGrid>,
    psi: &FrameField,
    rate: f64,
    delta: f64,
) -> Result<VectorField> {
    let n = grid.n_theta();
    if psi.n_theta() != n {
        return Err(LabError::Invalid(format!("profile has {} samples, grid has {n}", psi.n_theta())));
    }
    let alpha = truth.alpha();
    let rows: Vec<Vector3<f64>> = (0..n)
        .map(|k| {
            let th = grid.theta(k);
            let nn = Vector3::new(th.cos(), th.sin(), 0.0);
            let np = Vector3::new(-th.sin(), th.cos(), 0.0);
            truth.theta.apply(&(nn * psi.f[k] + np * psi.g[k] + Vector3::z() * psi.h[k]))
        })
        .collect();
    let t = *truth;
    let g = grid.clone();
    let values = (0..grid.n_nodes())
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let r = g.radii()[i];
            (t.eval_y(r, g.theta(j)) + rows[j] * (delta * r.powf(alpha + rate))).into()
        })
        .collect();
    VectorField::new(grid, values)
}

/// Ordinary least squares `y ≈ slope·x + intercept` with the coefficient of determination.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::rotation_generators;
    use crate::spectral::{assemble_lprime, eigendecompose, gamma_gap};

    fn kap() -> Kappa {
        Kappa::new(4.0).unwrap()
    }

    fn grid() -> Arc<PolarGrid> {
        Arc::new(PolarGrid::new(1e-4, 129, 64).unwrap())
    }

    fn model(a0: f64, rot: Rotation3) -> TangentMapModel {
        TangentMapModel::new(a0, rot, ProfileMode::Lifted, kap()).unwrap()
    }

    fn sampled(m: &TangentMapModel, g: Arc<PolarGrid>) -> VectorField {
        let m = *m;
        VectorField::from_fn(g, move |r, t| m.eval_y(r, t).into())
    }

    #[test]
    fn rescale_homogeneous_and_group_law() {
        let g = grid();
        let m = model(1.3, rotation_generators(0.4, 1));
        let f = sampled(&m, g.clone());
        let target = Arc::new(PolarGrid::new(1e-2, 33, 64).unwrap());
        for rho in [0.37, 0.05, 0.011] {
            let out = rescale(&f, rho, m.alpha(), target.clone()).unwrap();
            let want = sampled(&m, target.clone());
            let err = out.sub(&want).values().iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(err < 1e-8, "rho {rho}: {err}");
        }
        let two = VectorField::from_fn(g.clone(), |r, t| [r.powf(0.5) * t.cos(), r * r, r.powf(1.5) * t.sin()]);
        let q = g.ratio();
        let ta = Arc::new(PolarGrid::new(1e-4 * q.powi(16), 113, 64).unwrap());
        let tb = Arc::new(PolarGrid::new(1e-4 * q.powi(40), 89, 64).unwrap());
        let a = rescale(&two, q.powi(-16), 0.5, ta).unwrap();
        let twice = rescale(&a, q.powi(-24), 0.5, tb.clone()).unwrap();
        let once = rescale(&two, q.powi(-40), 0.5, tb).unwrap();
        let err = twice.sub(&once).values().iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(err < 1e-8, "{err}");
        let full = g.clone();
        assert!(rescale(&two, 1e-3, 0.5, full).is_err());
    }

    #[test]
    fn normalized_rescale_has_unit_mass() {
        let g = Arc::new(PolarGrid::new(1e-4, 161, 64).unwrap().with_core_disk());
        let m = model(2.0, Rotation3::identity());
        let f = sampled(&m, g.clone()).lift(kap());
        let out = rescale_normalized(&f, 0.3, m.alpha(), g.clone()).unwrap();
        let ints = crate::diagnostics::FieldIntegrals::new(&out).unwrap();
        assert!((ints.mass(1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn exact_inversion_and_equivariance() {
        let g = grid();
        let truth = model(2.0, rotation_generators(0.7, 1));
        let f = sampled(&truth, g.clone());
        let fit = fit_tangent(&f, 0.05, kap(), ProfileMode::Lifted).unwrap();
        assert!((fit.a0 - 2.0).abs() < 1e-8, "{fit:?}");
        assert!((fit.theta.matrix() - truth.theta.matrix()).norm() < 1e-8);
        let r = rotation_generators(-0.3, 2).compose(&rotation_generators(1.1, 3));
        let fr = fit_tangent(&f.rotated(r.matrix()), 0.05, kap(), ProfileMode::Lifted).unwrap();
        assert!((fr.theta.matrix() - r.compose(&fit.theta).matrix()).norm() < 1e-8);
        let zero = VectorField::from_fn(g, |r, _| [r, 0.0, 0.0]);
        assert!(matches!(fit_tangent(&zero, 0.05, kap(), ProfileMode::Lifted), Err(LabError::DegenerateFit(_))));
    }

    fn single_mode(truth: &TangentMapModel, g: Arc<PolarGrid>, rate: f64, delta: f64) -> VectorField {
        let n = g.n_theta();
        let d = eigendecompose(&assemble_lprime(n, kap()).unwrap(), n, kap()).unwrap();
        let j = (0..d.len()).find(|&j| d.eigenvalues[j] > 1e-6).unwrap();
        synthetic_mode_field(truth, g, &d.eigenfield(j), rate, delta).unwrap()
    }

    #[test]
    fn perturbed_fit_and_decay() {
        let g = grid();
        let truth = model(2.0, rotation_generators(0.7, 1));
        let gamma = gamma_gap(kap());
        let f = single_mode(&truth, g.clone(), gamma, 2e-3);
        let fit = fit_tangent(&f, 0.05, kap(), ProfileMode::Lifted).unwrap();
        assert!(fit.theta.angle_to(&truth.theta) < 2e-3);
        let res = decay_fit(&f, &truth, [4e-4, 0.1]).unwrap();
        assert!((res.mu_est - gamma).abs() < 0.02 * gamma, "{} vs {gamma}", res.mu_est);
        assert!(res.r_squared > 0.999 && res.bound_holds);
        let scaled_truth = TangentMapModel { a0: 6.0, ..truth };
        let scaled = decay_fit(&f.scaled(3.0), &scaled_truth, [4e-4, 0.1]).unwrap();
        assert!((scaled.mu_est - res.mu_est).abs() < 1e-10);
        let mu = mu_from_lambda(0.25);
        assert!((mu - 0.5).abs() < 1e-15);
        let h = single_mode(&truth, g.clone(), mu, 1e-3);
        assert!((decay_fit(&h, &truth, [4e-4, 0.1]).unwrap().mu_est - 0.5).abs() < 0.01);
        let exact = decay_fit(&sampled(&truth, g), &truth, [4e-4, 0.1]).unwrap();
        assert!(exact.mu_est.is_infinite());
        assert!(res.residual_csv().starts_with("r,e_c0,e_c1,e_c2\n"));
    }

    #[test]
    fn membership() {
        let g = Arc::new(PolarGrid::new(1e-4, 129, 64).unwrap());
        let truth = model(1.0, Rotation3::identity());
        let exact = q_membership(&sampled(&truth, g.clone()), &truth, 1e-9, 0.25).unwrap();
        assert!(exact.member && exact.norm < 1e-12);
        let gamma = gamma_gap(kap());
        let f = single_mode(&truth, g.clone(), gamma, 1e-3);
        let n1 = q_membership(&f, &truth, 1.0, 0.25).unwrap().norm;
        let eps = 2.0 * n1;
        assert!(q_membership(&f, &truth, eps, 0.25).unwrap().member);
        let f3 = single_mode(&truth, g, gamma, 3e-3);
        assert!(!q_membership(&f3, &truth, eps, 0.25).unwrap().member);
        for e in [eps, 2.0 * eps, 10.0 * eps] {
            assert!(q_membership(&f, &truth, e, 0.25).unwrap().member);
        }
    }
}
