//! The discrete cone-harmonic energy in the director coordinate `y`.
//!
//! With `u = (√(κ−1)|y|, y)` the Dirichlet integrand is
//! `|∇y|² + (κ−1)|∇|y||²`. The `|y|` inside the gradient is regularized to
//! `√(|y|² + ε²)`. The discrete energy is a weighted sum of squared stencil
//! outputs, and its gradient is obtained by transposing those stencils, so it
//! is the exact derivative of the discrete functional.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::circle::CircleFunction;
use crate::cone::{Kappa, Rotation3};
use crate::error::{LabError, Result};
use crate::grid::{
    angular_derivative, angular_second_derivative, log_derivative, log_second_derivative, GridField, PolarGrid,
    VectorField,
};
use crate::par;

/// Continuation and stopping parameters for [`crate::minimize::minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    pub kappa: Kappa,
    pub eps_schedule: Vec<f64>,
    pub step_tol: f64,
    pub grad_tol: f64,
    pub max_iterations: usize,
    pub inner: InnerCondition,
    pub symmetry: Symmetry,
}

impl EnergyConfig {
    pub fn new(kappa: Kappa) -> Self {
        EnergyConfig {
            kappa,
            eps_schedule: vec![1e-2, 1e-4, 1e-6, 1e-8],
            step_tol: 1e-14,
            grad_tol: 1e-9,
            max_iterations: 4000,
            inner: InnerCondition::HomogeneousCap,
            symmetry: Symmetry::Antipodal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_schedule.is_empty() {
            return Err(LabError::Invalid("eps_schedule is empty".into()));
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) || self.eps_schedule.iter().any(|&e| e <= 0.0) {
            return Err(LabError::Invalid("eps_schedule must be positive and strictly decreasing".into()));
        }
        if *self.eps_schedule.last().unwrap() > 1e-8 {
            return Err(LabError::Invalid("last eps must be <= 1e-8".into()));
        }
        if !(self.step_tol > 0.0 && self.grad_tol > 0.0) {
            return Err(LabError::Invalid("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(LabError::Invalid("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Treatment of the inner ring during minimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerCondition {
    /// Free inner ring; the disk inside it carries no energy.
    Natural,
    /// Free inner ring, plus the energy of the degree-`m/√κ` homogeneous
    /// extension of the inner ring into the excluded disk.
    HomogeneousCap,
}

/// Constraint on the admissible fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    None,
    /// `y(r, θ + π) = −y(r, θ)`: lifts of line fields through the squaring map.
    Antipodal,
}

/// Shape of the Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    EquatorRotated,
    PerturbedEquator,
}

/// Dirichlet data `a_b·Θ(n_m(θ) + p(θ))` with `n_m = (cos mθ, sin mθ, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub mode: BoundaryMode,
    pub rotation: Rotation3,
    pub winding: u32,
    pub perturbation: Option<CircleFunction>,
    pub amplitude: f64,
}

impl BoundarySpec {
    pub fn equator(rotation: Rotation3) -> Self {
        BoundarySpec { mode: BoundaryMode::EquatorRotated, rotation, winding: 1, perturbation: None, amplitude: 1.0 }
    }

    /// Rotated equator plus `size·(cos 2θ·n(θ) + ½ sin 3θ·e₃)`.
    pub fn perturbed(rotation: Rotation3, n_theta: usize, size: f64) -> Result<Self> {
        let p = CircleFunction::from_fn(n_theta, |t| {
            let c = size * (2.0 * t).cos();
            Vector3::new(c * t.cos(), c * t.sin(), 0.5 * size * (3.0 * t).sin())
        })?;
        Ok(BoundarySpec {
            mode: BoundaryMode::PerturbedEquator,
            rotation,
            winding: 1,
            perturbation: Some(p),
            amplitude: 1.0,
        })
    }

    pub fn validate(&self, n_theta: usize) -> Result<()> {
        if self.winding == 0 {
            return Err(LabError::Invalid("winding must be >= 1".into()));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(LabError::Invalid("boundary amplitude must be positive".into()));
        }
        if self.mode == BoundaryMode::PerturbedEquator {
            match &self.perturbation {
                Some(p) if p.n_theta() == n_theta => {}
                Some(p) => {
                    return Err(LabError::Invalid(format!(
                        "perturbation has {} samples, grid has {n_theta}",
                        p.n_theta()
                    )))
                }
                None => return Err(LabError::Invalid("perturbed mode needs a perturbation profile".into())),
            }
        }
        Ok(())
    }

    /// Boundary values on `n_theta` uniform angles.
    pub fn values(&self, n_theta: usize) -> Result<CircleFunction> {
        self.validate(n_theta)?;
        let m = self.winding as f64;
        let pert = match self.mode {
            BoundaryMode::PerturbedEquator => self.perturbation.as_ref(),
            BoundaryMode::EquatorRotated => None,
        };
        CircleFunction::from_fn(n_theta, |t| {
            let j = (t / (2.0 * PI) * n_theta as f64).round() as usize % n_theta;
            let mut v = Vector3::new((m * t).cos(), (m * t).sin(), 0.0);
            if let Some(p) = pert {
                v += Vector3::from(p.samples()[j]);
            }
            self.amplitude * self.rotation.apply(&v)
        })
    }

    /// Degree of the homogeneous extension, `m/√κ`.
    pub fn degree(&self, kappa: Kappa) -> f64 {
        self.winding as f64 / kappa.sqrt_kappa()
    }

    /// `r^{m/√κ}·(boundary data)` on the grid.
    pub fn homogeneous_seed(&self, grid: Arc<PolarGrid>, kappa: Kappa) -> Result<VectorField> {
        let b = self.values(grid.n_theta())?;
        let beta = self.degree(kappa);
        let nt = grid.n_theta();
        let values = (0..grid.n_nodes())
            .map(|k| {
                let s = grid.radii()[k / nt].powf(beta);
                b.samples()[k % nt].map(|x| s * x)
            })
            .collect();
        GridField::new(grid, values)
    }
}

/// The discrete functional: annulus energy, regularization, and optional inner cap.
///
/// In `t = log r` the Dirichlet integral is conformal, `∫|∇v|² dx = ∫ (v_t² + v_θ²) dt dθ`.
/// Radial differences live on the edges between adjacent rings (midpoint rule);
/// the angular part uses the fourth-order positive form
/// `(4/3)|δ₁v|² − (1/3)|δ₂v|²` of nearest and next-nearest differences, trapezoidal in `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functional {
    pub kappa: Kappa,
    pub eps: f64,
    /// Degree of the homogeneous cap on the inner ring, if any.
    pub cap_degree: Option<f64>,
}

/// Symbol of the angular form for Fourier mode `k` on `n` points, times `dθ²`.
pub(crate) fn angular_symbol(k: usize, n: usize) -> f64 {
    let x = 2.0 * PI * k as f64 / n as f64;
    (4.0 / 3.0) * (2.0 - 2.0 * x.cos()) - (1.0 / 12.0) * (2.0 - 2.0 * (2.0 * x).cos())
}

/// Trapezoid weights in `t` for the rings.
pub(crate) fn ring_trapezoid(grid: &PolarGrid) -> Vec<f64> {
    let n = grid.n_radii();
    let h = grid.log_step();
    (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect()
}

/// `Σ_j [(4/3)(v_{j+1}−v_j)² − (1/3)((v_{j+1}−v_{j−1})/2)²]` per channel.
fn angular_form<const D: usize>(ring: &[[f64; D]]) -> [f64; D] {
    let n = ring.len();
    let mut out = [0.0; D];
    for (d, o) in out.iter_mut().enumerate() {
        *o = par::pairwise_sum_by(n, |j| {
            let a = ring[(j + 1) % n][d] - ring[j][d];
            let b = 0.5 * (ring[(j + 1) % n][d] - ring[(j + n - 1) % n][d]);
            (4.0 / 3.0) * a * a - (1.0 / 3.0) * b * b
        });
    }
    out
}

/// Half the gradient of [`angular_form`].
fn angular_operator<const D: usize>(ring: &[[f64; D]]) -> Vec<[f64; D]> {
    let n = ring.len();
    (0..n)
        .map(|j| {
            let (p1, m1) = (&ring[(j + 1) % n], &ring[(j + n - 1) % n]);
            let (p2, m2) = (&ring[(j + 2) % n], &ring[(j + n - 2) % n]);
            let c = &ring[j];
            std::array::from_fn(|d| {
                (4.0 / 3.0) * (2.0 * c[d] - p1[d] - m1[d]) - (1.0 / 12.0) * (2.0 * c[d] - p2[d] - m2[d])
            })
        })
        .collect()
}

impl Functional {
    pub fn annulus(kappa: Kappa, eps: f64) -> Self {
        Functional { kappa, eps, cap_degree: None }
    }

    fn stacked(&self, field: &VectorField) -> GridField<4> {
        let eps2 = self.eps * self.eps;
        let values = field
            .values()
            .iter()
            .map(|y| [y[0], y[1], y[2], (y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + eps2).sqrt()])
            .collect();
        GridField::new(field.grid_arc().clone(), values).expect("same grid")
    }

    fn channel_weights(&self) -> [f64; 4] {
        [1.0, 1.0, 1.0, self.kappa.value() - 1.0]
    }

    pub fn value(&self, field: &VectorField) -> f64 {
        let grid = field.grid();
        let (n, nt) = (grid.n_radii(), grid.n_theta());
        let (h, dth) = (grid.log_step(), grid.dtheta());
        let cw = self.channel_weights();
        let s = self.stacked(field);
        let tw = ring_trapezoid(grid);
        let radial = par::map_indices(n - 1, |i| {
            let (a, b) = (s.row(i), s.row(i + 1));
            let sum = par::pairwise_sum_by(nt, |j| (0..4).map(|d| cw[d] * (b[j][d] - a[j][d]).powi(2)).sum());
            sum * dth / h
        });
        let angular = par::map_indices(n, |i| {
            let f = angular_form(s.row(i));
            tw[i] / dth * (0..4).map(|d| cw[d] * f[d]).sum::<f64>()
        });
        par::pairwise_sum(&radial) + par::pairwise_sum(&angular) + self.cap_value(&s)
    }

    fn cap_value(&self, s: &GridField<4>) -> f64 {
        let Some(beta) = self.cap_degree else { return 0.0 };
        let row = s.row(0);
        let dth = s.grid().dtheta();
        let kappa = self.kappa.value();
        let cw = self.channel_weights();
        let mass = par::pairwise_sum_by(row.len(), |j| row[j][0] * row[j][0] + row[j][1] * row[j][1] + row[j][2] * row[j][2]);
        let f = angular_form(row);
        let ang: f64 = (0..4).map(|d| cw[d] * f[d]).sum();
        (beta * beta * kappa * mass * dth + ang / dth) / (2.0 * beta)
    }

    /// Exact gradient of [`Functional::value`] with respect to the free nodes;
    /// the outer (Dirichlet) row is zero.
    pub fn gradient(&self, field: &VectorField) -> Vec<[f64; 3]> {
        let grid = field.grid();
        let (n, nt) = (grid.n_radii(), grid.n_theta());
        let (h, dth) = (grid.log_step(), grid.dtheta());
        let k1 = self.kappa.value() - 1.0;
        let kappa = self.kappa.value();
        let s = self.stacked(field);
        let tw = ring_trapezoid(grid);
        let cap = self.cap_degree;
        let mut out = vec![[0.0; 3]; grid.n_nodes()];
        par::for_each_chunk(&mut out, nt, |i, row| {
            if i == n - 1 {
                return;
            }
            let ang = angular_operator(s.row(i));
            let c = s.row(i);
            for (j, o) in row.iter_mut().enumerate() {
                // Half-gradient of the quadratic form, for the three y channels and a.
                let mut q: [f64; 4] = std::array::from_fn(|d| tw[i] / dth * ang[j][d]);
                for d in 0..4 {
                    if i > 0 {
                        q[d] += (c[j][d] - s.row(i - 1)[j][d]) * dth / h;
                    }
                    q[d] += (c[j][d] - s.row(i + 1)[j][d]) * dth / h;
                }
                if let (0, Some(beta)) = (i, cap) {
                    for d in 0..4 {
                        q[d] += ang[j][d] / (2.0 * beta * dth);
                    }
                    for d in 0..3 {
                        q[d] += 0.5 * beta * kappa * dth * c[j][d];
                    }
                }
                let ratio = 2.0 * k1 * q[3] / c[j][3];
                for d in 0..3 {
                    o[d] = 2.0 * q[d] + ratio * c[j][d];
                }
            }
        });
        out
    }
}

/// Annulus energy `∫ |∇y|² + (κ−1)|∇|y|_ε|²` over the grid's radial range.
pub fn energy(field: &VectorField, kappa: Kappa, eps: f64) -> f64 {
    Functional::annulus(kappa, eps).value(field)
}

/// Exact gradient of [`energy`]; zero on the outer row.
pub fn energy_gradient(field: &VectorField, kappa: Kappa, eps: f64) -> Vec<[f64; 3]> {
    Functional::annulus(kappa, eps).gradient(field)
}

/// L² norms of the strong Euler–Lagrange residuals over `[2r_min, r_{n−3}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElResidual {
    /// `κΔs − s|∇n|²`.
    pub res_s: f64,
    /// `s²Δn + 2s∇s·∇n + s²|∇n|²n`.
    pub res_n: f64,
    /// `Δu + N_κ(u,∇u)u`.
    pub res_full: f64,
}

pub fn el_residual(field: &VectorField, kappa: Kappa) -> Result<ElResidual> {
    let grid = field.grid();
    let (n, nt) = (grid.n_radii(), grid.n_theta());
    let lo_row = grid.radii().iter().position(|&r| r >= 2.0 * grid.r_inner() * (1.0 - 1e-12)).unwrap_or(n);
    if n < 4 || lo_row + 1 > n - 3 {
        return Err(LabError::Invalid("grid too small for the residual window".into()));
    }
    let hi_row = n - 3;
    for k in lo_row * nt..(hi_row + 1) * nt {
        let m = Vector3::from(field.values()[k]).norm();
        if m < 1e-13 {
            return Err(LabError::Vertex { magnitude: m });
        }
    }
    let kv = kappa.value();
    let sqrt_k1 = kappa.slope();
    let sn: Vec<[f64; 4]> = field
        .values()
        .iter()
        .map(|y| {
            let s = Vector3::from(*y).norm().max(1e-300);
            [s, y[0] / s, y[1] / s, y[2] / s]
        })
        .collect();
    let sn = GridField::new(field.grid_arc().clone(), sn).expect("same grid");
    let ut = log_derivative(&sn);
    let uth = angular_derivative(&sn);
    let lap: Vec<[f64; 4]> = log_second_derivative(&sn)
        .iter()
        .zip(angular_second_derivative(&sn))
        .map(|(a, b)| std::array::from_fn(|d| a[d] + b[d]))
        .collect();
    let mut rs = vec![0.0; grid.n_nodes()];
    let mut rn = vec![0.0; grid.n_nodes()];
    let mut rf = vec![0.0; grid.n_nodes()];
    for k in lo_row * nt..(hi_row + 1) * nt {
        let r2 = grid.radii()[k / nt].powi(2);
        let v = &sn.values()[k];
        let s = v[0];
        let nn = Vector3::new(v[1], v[2], v[3]);
        let (a, b) = (&ut[k], &uth[k]);
        let grad_n2 = (a[1] * a[1] + a[2] * a[2] + a[3] * a[3] + b[1] * b[1] + b[2] * b[2] + b[3] * b[3]) / r2;
        let lap_s = lap[k][0] / r2;
        let lap_n = Vector3::new(lap[k][1], lap[k][2], lap[k][3]) / r2;
        let ds_dn = (Vector3::new(a[1], a[2], a[3]) * a[0] + Vector3::new(b[1], b[2], b[3]) * b[0]) / r2;
        let e_s = kv * lap_s - s * grad_n2;
        let e_n = s * s * lap_n + 2.0 * s * ds_dn + s * s * grad_n2 * nn;
        rs[k] = e_s * e_s;
        rn[k] = e_n.norm_squared();
        // u = s(√(κ−1), n): Δu = (√(κ−1)Δs, Δ(s n)); |∇(u/|u|)|² = |∇n|²/κ.
        let lap_sn = lap_s * nn + 2.0 * ds_dn + s * lap_n;
        let nk = grad_n2 / kv;
        let f0 = sqrt_k1 * lap_s - nk * sqrt_k1 * s;
        let f1 = lap_sn + nk * (kv - 1.0) * s * nn;
        rf[k] = f0 * f0 + f1.norm_squared();
    }
    let (lo, hi) = (grid.radii()[lo_row], grid.radii()[hi_row]);
    Ok(ElResidual {
        res_s: grid.disk_integral(&rs, lo, hi)?.sqrt(),
        res_n: grid.disk_integral(&rn, lo, hi)?.sqrt(),
        res_full: grid.disk_integral(&rf, lo, hi)?.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::rotation_generators;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k4() -> Kappa {
        Kappa::new(4.0).unwrap()
    }

    fn lifted_profile(g: &Arc<PolarGrid>, kappa: Kappa) -> VectorField {
        let a = kappa.alpha_lifted();
        VectorField::from_fn(g.clone(), move |r, t| {
            let s = r.powf(a);
            [s * t.cos(), s * t.sin(), 0.0]
        })
    }

    #[test]
    fn constant_field_has_zero_energy() {
        let g = Arc::new(PolarGrid::new(1e-2, 33, 16).unwrap());
        let f = VectorField::from_fn(g, |_, _| [0.3, -1.0, 2.0]);
        assert!(energy(&f, k4(), 1e-8).abs() < 1e-20);
    }

    #[test]
    fn homogeneous_energy_closed_form() {
        let r0: f64 = 1e-2;
        let g = Arc::new(PolarGrid::new(r0, 257, 64).unwrap());
        let e = energy(&lifted_profile(&g, k4()), k4(), 0.0);
        let exact = 2.0 * PI * 2.0 * (1.0 - r0);
        assert!((e / exact - 1.0).abs() < 1e-4, "{e} {exact}");
    }

    #[test]
    fn quadratic_scaling() {
        let g = Arc::new(PolarGrid::new(1e-2, 33, 16).unwrap());
        let f = lifted_profile(&g, k4());
        let e = energy(&f, k4(), 0.0);
        for c in [0.5, -2.0, 3.0] {
            let ec = energy(&f.scaled(c), k4(), 0.0);
            assert!((ec - c * c * e).abs() < 1e-12 * ec);
        }
    }

    fn directional_check(func: Functional, seed: u64) {
        let g = Arc::new(PolarGrid::new(1e-2, 25, 16).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = lifted_profile(&g, func.kappa);
        let noisy = base.values().iter().map(|v| v.map(|x| x + 0.1 * rng.gen_range(-1.0..1.0))).collect();
        let y = VectorField::new(g.clone(), noisy).unwrap();
        let grad = func.gradient(&y);
        let nt = g.n_theta();
        let scale = grad.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        for _ in 0..20 {
            let d: Vec<[f64; 3]> = (0..g.n_nodes())
                .map(|k| {
                    if k / nt == g.n_radii() - 1 {
                        [0.0; 3]
                    } else {
                        std::array::from_fn(|c| grad[k][c] / scale + rng.gen_range(-0.5..0.5))
                    }
                })
                .collect();
            let t = 1e-5;
            let shift = |s: f64| {
                let v = y.values().iter().zip(&d).map(|(a, b)| std::array::from_fn(|c| a[c] + s * b[c])).collect();
                VectorField::new(g.clone(), v).unwrap()
            };
            let fd = (func.value(&shift(t)) - func.value(&shift(-t))) / (2.0 * t);
            let an: f64 = grad.iter().zip(&d).map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).sum();
            assert!((fd - an).abs() <= 1e-6 * an.abs(), "fd {fd} analytic {an}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        directional_check(Functional::annulus(k4(), 1e-2), 1);
        directional_check(Functional { kappa: Kappa::new(2.5).unwrap(), eps: 1e-3, cap_degree: Some(0.6) }, 2);
    }

    #[test]
    fn outer_row_gradient_is_zero() {
        let g = Arc::new(PolarGrid::new(1e-2, 17, 16).unwrap());
        let grad = energy_gradient(&lifted_profile(&g, k4()).scaled(1.3), k4(), 1e-4);
        assert!(grad[16 * 16..].iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn boundary_specs() {
        let rot = rotation_generators(0.7, 1);
        let b = BoundarySpec::equator(rot).values(32).unwrap();
        for (j, v) in b.samples().iter().enumerate() {
            let t = 2.0 * PI * j as f64 / 32.0;
            let e = rot.apply(&Vector3::new(t.cos(), t.sin(), 0.0));
            assert!((Vector3::from(*v) - e).norm() < 1e-15);
        }
        let p = BoundarySpec::perturbed(Rotation3::identity(), 32, 0.05).unwrap();
        assert!(p.values(32).is_ok());
        assert!(p.values(64).is_err());
        let mut w = BoundarySpec::equator(rot);
        w.winding = 0;
        assert!(w.values(32).is_err());
    }

    #[test]
    fn seed_is_homogeneous_extension() {
        let g = Arc::new(PolarGrid::new(1e-2, 17, 16).unwrap());
        let spec = BoundarySpec::equator(Rotation3::identity());
        let seed = spec.homogeneous_seed(g.clone(), k4()).unwrap();
        assert_eq!(seed.values(), lifted_profile(&g, k4()).values());
    }

    #[test]
    fn unit_director_has_no_residual() {
        let g = Arc::new(PolarGrid::new(1e-2, 33, 16).unwrap());
        let f = VectorField::from_fn(g, |_, _| [0.0, 0.6, 0.8]);
        let res = el_residual(&f, k4()).unwrap();
        assert!(res.res_s < 1e-12 && res.res_n < 1e-12 && res.res_full < 1e-12);
        let z = VectorField::from_fn(Arc::new(PolarGrid::new(1e-2, 33, 16).unwrap()), |_, _| [0.0; 3]);
        assert!(matches!(el_residual(&z, k4()), Err(LabError::Vertex { .. })));
    }

    #[test]
    fn lifted_profile_residual_is_second_order() {
        let res = |n: usize| {
            let g = Arc::new(PolarGrid::new(1e-2, n, 64).unwrap());
            el_residual(&lifted_profile(&g, k4()), k4()).unwrap().res_full
        };
        let (a, b, c) = (res(33), res(65), res(129));
        assert!((a / b).log2() >= 1.8 && (b / c).log2() >= 1.8, "{a} {b} {c}");
    }
}
