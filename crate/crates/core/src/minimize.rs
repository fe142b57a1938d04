//! Preconditioned nonlinear conjugate gradients with ε-continuation.

use std::sync::Arc;

use crate::energy::{BoundarySpec, EnergyConfig, Functional, InnerCondition, Symmetry};
use crate::error::{LabError, Result};
use crate::grid::{PolarGrid, VectorField};
use crate::par;
use crate::precond::Preconditioner;

const RESTART: usize = 50;
const ARMIJO: f64 = 1e-4;
const NOISE: f64 = 1e-13;

/// Starting point for [`minimize`].
#[derive(Debug, Clone)]
pub enum Init {
    HomogeneousSeed,
    Field(VectorField),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLogEntry {
    pub stage: usize,
    pub eps: f64,
    pub iteration: usize,
    pub energy: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Minimized {
    pub field: VectorField,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub log: Vec<EnergyLogEntry>,
}

fn dot(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    par::pairwise_sum_by(a.len(), |k| a[k][0] * b[k][0] + a[k][1] * b[k][1] + a[k][2] * b[k][2])
}

fn axpy(x: &[[f64; 3]], t: f64, d: &[[f64; 3]]) -> Vec<[f64; 3]> {
    x.iter().zip(d).map(|(a, b)| [a[0] + t * b[0], a[1] + t * b[1], a[2] + t * b[2]]).collect()
}

struct Point {
    x: Vec<[f64; 3]>,
    energy: f64,
    grad: Vec<[f64; 3]>,
}

/// Replace each ring by its odd part under `θ ↦ θ + π`.
fn antipodal_projection(v: &mut [[f64; 3]], nt: usize) {
    let half = nt / 2;
    for ring in v.chunks_mut(nt) {
        for j in 0..half {
            let a = ring[j];
            let b = ring[j + half];
            let odd = [0.5 * (a[0] - b[0]), 0.5 * (a[1] - b[1]), 0.5 * (a[2] - b[2])];
            ring[j] = odd;
            ring[j + half] = odd.map(|x| -x);
        }
    }
}

struct Stage<'a> {
    func: Functional,
    grid: &'a Arc<PolarGrid>,
    pre: &'a Preconditioner,
    symmetry: Symmetry,
}

impl Stage<'_> {
    fn eval(&self, x: Vec<[f64; 3]>) -> Point {
        let f = VectorField::new(self.grid.clone(), x).expect("grid-sized");
        let energy = self.func.value(&f);
        let mut grad = self.func.gradient(&f);
        self.project(&mut grad);
        Point { x: f.into_values(), energy, grad }
    }

    fn project(&self, v: &mut [[f64; 3]]) {
        if self.symmetry == Symmetry::Antipodal {
            antipodal_projection(v, self.grid.n_theta());
        }
    }

    fn precondition(&self, g: &[[f64; 3]]) -> Vec<[f64; 3]> {
        let mut z = self.pre.apply(g);
        self.project(&mut z);
        z
    }

    /// Secant line search with Armijo backtracking. A trial whose energy change
    /// is below round-off is accepted when the slope along `d` has dropped.
    fn line_search(&self, p: &Point, d: &[[f64; 3]]) -> Option<Point> {
        let slope0 = dot(&p.grad, d);
        if !(slope0 < 0.0) {
            return None;
        }
        let noise = NOISE * p.energy.abs().max(1e-300);
        let acceptable = |q: &Point, t: f64| {
            if q.energy <= p.energy + ARMIJO * t * slope0 {
                return true;
            }
            (q.energy - p.energy).abs() <= noise && dot(&q.grad, d).abs() <= 0.5 * slope0.abs()
        };
        let mut t = 1.0;
        for _ in 0..40 {
            let q1 = self.eval(axpy(&p.x, t, d));
            let slope1 = dot(&q1.grad, d);
            let curvature = slope1 - slope0;
            let t2 = Some(-t * slope0 / curvature).filter(|s| curvature > 0.0 && s.is_finite() && *s > 0.0);
            let q2 = t2.filter(|s| (s / t - 1.0).abs() > 1e-3).map(|s| (s, self.eval(axpy(&p.x, s, d))));
            let mut best: Option<Point> = None;
            if acceptable(&q1, t) {
                best = Some(q1);
            }
            if let Some((s, q)) = q2 {
                if acceptable(&q, s) && best.as_ref().is_none_or(|b| q.energy < b.energy) {
                    best = Some(q);
                }
            }
            if best.is_some() {
                return best;
            }
            t = match t2 {
                Some(s) if s < t => s.max(t * 1e-3),
                _ => t * 0.25,
            };
        }
        None
    }

    fn run(&self, start: Point, tol: f64, max_iter: usize, step_tol: f64, log: &mut Vec<EnergyLogEntry>, stage: usize) -> Result<(Point, f64, usize)> {
        let mut p = start;
        let mut z = self.precondition(&p.grad);
        let mut gz = dot(&p.grad, &z);
        let mut d: Vec<[f64; 3]> = z.iter().map(|v| v.map(|x| -x)).collect();
        let mut since_restart = 0;
        for it in 0..max_iter {
            let res = gz.max(0.0).sqrt();
            log.push(EnergyLogEntry { stage, eps: self.func.eps, iteration: it, energy: p.energy, residual: res });
            if res <= tol {
                return Ok((p, res, it));
            }
            let q = match self.line_search(&p, &d) {
                Some(q) => q,
                None if since_restart > 0 => {
                    d = z.iter().map(|v| v.map(|x| -x)).collect();
                    since_restart = 0;
                    match self.line_search(&p, &d) {
                        Some(q) => q,
                        None => return Err(LabError::NonConvergence { iterations: it, residual: res }),
                    }
                }
                None => return Err(LabError::NonConvergence { iterations: it, residual: res }),
            };
            let step = q.x.iter().zip(&p.x).flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs())).fold(0.0, f64::max);
            let z_new = self.precondition(&q.grad);
            let gz_new = dot(&q.grad, &z_new);
            since_restart += 1;
            let beta = if since_restart >= RESTART {
                since_restart = 0;
                0.0
            } else {
                let diff: Vec<[f64; 3]> = z_new.iter().zip(&z).map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]]).collect();
                (dot(&q.grad, &diff) / gz).max(0.0)
            };
            d = z_new.iter().zip(&d).map(|(a, b)| [-a[0] + beta * b[0], -a[1] + beta * b[1], -a[2] + beta * b[2]]).collect();
            if dot(&q.grad, &d) >= 0.0 {
                d = z_new.iter().map(|v| v.map(|x| -x)).collect();
                since_restart = 0;
            }
            p = q;
            z = z_new;
            gz = gz_new;
            if step < step_tol && gz.max(0.0).sqrt() > tol {
                return Err(LabError::NonConvergence { iterations: it + 1, residual: gz.max(0.0).sqrt() });
            }
        }
        let res = gz.max(0.0).sqrt();
        if res <= tol {
            return Ok((p, res, max_iter));
        }
        Err(LabError::NonConvergence { iterations: max_iter, residual: res })
    }
}

/// Minimize the discrete energy with Dirichlet data on the outer ring.
///
/// Stages run over `config.eps_schedule` in order, each warm-started from the
/// previous one; intermediate stages stop at `1e3·grad_tol`.
pub fn minimize(boundary: &BoundarySpec, grid: Arc<PolarGrid>, init: Init, config: &EnergyConfig) -> Result<Minimized> {
    config.validate()?;
    let bvals = boundary.values(grid.n_theta())?;
    let nt = grid.n_theta();
    let outer = grid.n_radii() - 1;
    let start = match init {
        Init::HomogeneousSeed => boundary.homogeneous_seed(grid.clone(), config.kappa)?,
        Init::Field(f) => {
            if f.grid() != &*grid {
                return Err(LabError::Invalid("initial field lives on a different grid".into()));
            }
            if f.row(outer) != bvals.samples() {
                return Err(LabError::Invalid("initial field does not match the boundary data".into()));
            }
            f
        }
    };
    let cap_degree = match config.inner {
        InnerCondition::Natural => None,
        InnerCondition::HomogeneousCap => Some(boundary.degree(config.kappa)),
    };
    if config.symmetry == Symmetry::Antipodal {
        let half = nt / 2;
        let s = bvals.samples();
        let defect = (0..half).flat_map(|j| (0..3).map(move |c| (s[j][c] + s[j + half][c]).abs())).fold(0.0, f64::max);
        if !nt.is_multiple_of(2) || defect > 1e-12 {
            return Err(LabError::Invalid(format!("antipodal symmetry needs odd boundary data, defect {defect:e}")));
        }
    }
    let pre = Preconditioner::new(&grid, config.kappa, cap_degree);
    let mut x = start.into_values();
    if config.symmetry == Symmetry::Antipodal {
        antipodal_projection(&mut x[..outer * nt], nt);
    }
    debug_assert_eq!(x.len(), (outer + 1) * nt);
    let mut log = Vec::new();
    let mut total = 0;
    let mut last = (0.0, 0.0);
    let n_stages = config.eps_schedule.len();
    for (stage, &eps) in config.eps_schedule.iter().enumerate() {
        let st = Stage { func: Functional { kappa: config.kappa, eps, cap_degree }, grid: &grid, pre: &pre, symmetry: config.symmetry };
        let tol = if stage + 1 == n_stages { config.grad_tol } else { config.grad_tol * 1e3 };
        let p0 = st.eval(x);
        let (p, res, it) = st
            .run(p0, tol, config.max_iterations, config.step_tol, &mut log, stage)
            .map_err(|e| match e {
                LabError::NonConvergence { iterations, residual } => {
                    LabError::NonConvergence { iterations: total + iterations, residual }
                }
                other => other,
            })?;
        total += it;
        last = (p.energy, res);
        x = p.x;
    }
    Ok(Minimized { field: VectorField::new(grid, x)?, energy: last.0, residual: last.1, iterations: total, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{rotation_generators, Kappa, Rotation3};
    use crate::energy::energy;

    fn setup() -> (Arc<PolarGrid>, EnergyConfig) {
        let grid = Arc::new(PolarGrid::new(1e-2, 33, 32).unwrap());
        (grid, EnergyConfig::new(Kappa::new(4.0).unwrap()))
    }

    #[test]
    fn perturbed_minimization_descends_and_beats_competitor() {
        let (grid, cfg) = setup();
        let spec = BoundarySpec::perturbed(Rotation3::identity(), 32, 0.05).unwrap();
        let out = minimize(&spec, grid.clone(), Init::HomogeneousSeed, &cfg).unwrap();
        assert!(out.residual <= cfg.grad_tol);
        for stage in 0..cfg.eps_schedule.len() {
            let e: Vec<f64> = out.log.iter().filter(|l| l.stage == stage).map(|l| l.energy).collect();
            for w in e.windows(2) {
                assert!(w[1] <= w[0] + NOISE * w[0].abs(), "stage {stage}: {} -> {}", w[0], w[1]);
            }
        }
        let seed = spec.homogeneous_seed(grid.clone(), cfg.kappa).unwrap();
        let cap = Functional { kappa: cfg.kappa, eps: 1e-8, cap_degree: Some(0.5) };
        assert!(out.energy <= cap.value(&seed));
        assert_eq!(out.field.row(32), spec.values(32).unwrap().samples());
        assert!(energy(&out.field, cfg.kappa, 1e-8) > 0.0);
    }

    #[test]
    fn rotation_equivariance() {
        let (grid, cfg) = setup();
        let base = BoundarySpec::perturbed(Rotation3::identity(), 32, 0.05).unwrap();
        let rot = rotation_generators(0.7, 1);
        let mut turned = base.clone();
        turned.rotation = rot;
        let a = minimize(&base, grid.clone(), Init::HomogeneousSeed, &cfg).unwrap();
        let b = minimize(&turned, grid.clone(), Init::HomogeneousSeed, &cfg).unwrap();
        let ra = a.field.rotated(rot.matrix());
        let diff = ra.values().iter().zip(b.field.values()).flat_map(|(x, y)| (0..3).map(move |c| (x[c] - y[c]).abs())).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn rejects_mismatched_init() {
        let (grid, cfg) = setup();
        let spec = BoundarySpec::equator(Rotation3::identity());
        let bad = VectorField::zeros(grid.clone());
        assert!(matches!(minimize(&spec, grid, Init::Field(bad), &cfg), Err(LabError::Invalid(_))));
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let (grid, mut cfg) = setup();
        cfg.max_iterations = 1;
        let spec = BoundarySpec::perturbed(Rotation3::identity(), 32, 0.2).unwrap();
        assert!(matches!(
            minimize(&spec, grid, Init::HomogeneousSeed, &cfg),
            Err(LabError::NonConvergence { .. })
        ));
    }

    #[test]
    fn antipodal_constraint() {
        let (grid, cfg) = setup();
        let spec = BoundarySpec::perturbed(rotation_generators(0.3, 2), 32, 0.1).unwrap();
        let out = minimize(&spec, grid.clone(), Init::HomogeneousSeed, &cfg).unwrap();
        let v = out.field.values();
        for k in 0..v.len() {
            let (i, j) = (k / 32, k % 32);
            let w = v[i * 32 + (j + 16) % 32];
            assert!((0..3).all(|c| (v[k][c] + w[c]).abs() < 1e-14));
        }
        let mut even = BoundarySpec::equator(Rotation3::identity());
        even.winding = 2;
        assert!(matches!(minimize(&even, grid.clone(), Init::HomogeneousSeed, &cfg), Err(LabError::Invalid(_))));
        let free = EnergyConfig { symmetry: Symmetry::None, ..cfg };
        assert!(minimize(&even, grid, Init::HomogeneousSeed, &free).is_ok());
    }
}
