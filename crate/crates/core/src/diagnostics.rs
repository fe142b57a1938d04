//! Monotone quantities of harmonic maps: the height `A(ρ)`, the Almgren
//! frequency `N(r)`, the Weiss energy `W(r)` and the ring deviation.
//!
//! Disk integrals cover the whole disk: the part inside the first interior
//! ring is the homogeneous extension of that ring. Radial integration interpolates ring sums as powers of
//! `r`, which is exact for homogeneous fields.

use std::fmt::Write as _;

use crate::error::{LabError, Result};
use crate::grid::{log_derivative, GridField, PolarGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    HeightA,
    FrequencyN,
    WeissW,
    RingDeviation,
    TangentResidual,
}

impl SeriesKind {
    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::HeightA => "height_A",
            SeriesKind::FrequencyN => "frequency_N",
            SeriesKind::WeissW => "weiss_W",
            SeriesKind::RingDeviation => "ring_deviation",
            SeriesKind::TangentResidual => "tangent_residual",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: SeriesKind,
    /// Homogeneity degree the quantity was computed with; `None` for `N`.
    pub alpha: Option<f64>,
}

impl DiagnosticSeries {
    /// CSV rows `r,value,kind,alpha`, without header.
    pub fn csv_rows(&self, out: &mut String) {
        for (r, v) in self.radii.iter().zip(&self.values) {
            let a = self.alpha.map(|a| format!("{a:.16e}")).unwrap_or_default();
            writeln!(out, "{r:.16e},{v:.16e},{},{a}", self.kind.name()).unwrap();
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value,kind,alpha\n");
        self.csv_rows(&mut s);
        s
    }

    /// Monotonicity verdict against `tolerance`.
    pub fn audit(&self, direction: Direction, tolerance: f64) -> AuditReport {
        let sign = match direction {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        };
        let worst = self
            .values
            .windows(2)
            .map(|w| sign * (w[0] - w[1]))
            .fold(f64::NEG_INFINITY, f64::max);
        let worst = if worst.is_finite() { worst } else { 0.0 };
        AuditReport { monotone: worst <= tolerance, worst_violation: worst, tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub monotone: bool,
    /// Largest step against the expected direction (negative when strictly monotone).
    pub worst_violation: f64,
    pub tolerance: f64,
}

/// Ring sums and the inner-disk extension of one field.
///
/// The disk inside the first interior ring `r₁` is filled with the homogeneous
/// extension of that ring. Its degree comes from the mass ratio of rings 1 and
/// 2, which keeps the inner ring's one-sided stencil out of every integral.
/// The gradient sum on the outer ring is extrapolated as a power of `r` from
/// the two rings inside it for the same reason.
pub struct FieldIntegrals<'a, const D: usize> {
    field: &'a GridField<D>,
    mass: Vec<f64>,
    grad: Vec<f64>,
    core_degree: f64,
}

impl<'a, const D: usize> FieldIntegrals<'a, D> {
    pub fn new(field: &'a GridField<D>) -> Result<Self> {
        let grid = field.grid();
        let mass = grid.ring_sums(&field.norm_squared_density());
        let mut grad = grid.ring_sums(&field.gradient_norm_squared());
        let n = grad.len();
        if n >= 4 && grad[n - 2] > 0.0 && grad[n - 3] > 0.0 {
            grad[n - 1] = grad[n - 2] * grad[n - 2] / grad[n - 3];
        }
        if !(mass[1] > 0.0 && mass[2] > 0.0) {
            return Err(LabError::Degenerate("field vanishes on the inner rings".into()));
        }
        let beta = (mass[2] / mass[1]).ln() / (2.0 * grid.log_step());
        if !(beta > 0.0) {
            return Err(LabError::Degenerate(format!("inner extension degree {beta} is not positive")));
        }
        Ok(FieldIntegrals { field, mass, grad, core_degree: beta })
    }

    pub fn grid(&self) -> &PolarGrid {
        self.field.grid()
    }

    /// Degree of the inner-disk extension.
    pub fn core_degree(&self) -> f64 {
        self.core_degree
    }

    fn r1(&self) -> f64 {
        self.grid().radii()[1]
    }

    /// `∫_{B_r} |∇u|²`.
    pub fn dirichlet(&self, r: f64) -> Result<f64> {
        let (r1, b) = (self.r1(), self.core_degree);
        let core = |rho: f64| self.grad[1] * r1 * r1 * (rho / r1).powf(2.0 * b) / (2.0 * b);
        if r <= r1 {
            self.grid().power_integral(&self.grad, r, r)?;
            return Ok(core(r));
        }
        Ok(core(r1) + self.grid().power_integral(&self.grad, r1, r)?)
    }

    /// `∫_{B_r} |u|²`.
    pub fn mass(&self, r: f64) -> Result<f64> {
        let (r1, b) = (self.r1(), self.core_degree);
        let core = |rho: f64| self.mass[1] * r1 * r1 * (rho / r1).powf(2.0 * b + 2.0) / (2.0 * b + 2.0);
        if r <= r1 {
            self.grid().power_integral(&self.mass, r, r)?;
            return Ok(core(r));
        }
        Ok(core(r1) + self.grid().power_integral(&self.mass, r1, r)?)
    }

    /// `∫_{∂B_r} |u|² dS`.
    pub fn boundary_mass(&self, r: f64) -> Result<f64> {
        self.grid().circle_integral(&self.field.norm_squared_density(), r)
    }
}

fn check_radii(grid: &PolarGrid, radii: &[f64]) -> Result<()> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Invalid("radii must be strictly increasing".into()));
    }
    for &r in radii {
        if r < grid.r_inner() * (1.0 - 1e-12) || r > grid.r_max() * (1.0 + 1e-12) {
            return Err(LabError::Range { lo: r, hi: r, min: grid.r_inner(), max: grid.r_max() });
        }
    }
    Ok(())
}

/// `A(ρ) = (ρ^{−(2+2α)} ∫_{B_ρ}|u|²)^{1/2}`.
pub fn height_a<const D: usize>(field: &GridField<D>, rhos: &[f64], alpha: f64) -> Result<DiagnosticSeries> {
    check_radii(field.grid(), rhos)?;
    let ints = FieldIntegrals::new(field)?;
    let values = rhos
        .iter()
        .map(|&r| Ok((ints.mass(r)? * r.powf(-(2.0 + 2.0 * alpha))).sqrt()))
        .collect::<Result<_>>()?;
    Ok(DiagnosticSeries { radii: rhos.to_vec(), values, kind: SeriesKind::HeightA, alpha: Some(alpha) })
}

/// `N(r) = r ∫_{B_r}|∇u|² / ∫_{∂B_r}|u|²`.
pub fn frequency_n<const D: usize>(field: &GridField<D>, radii: &[f64]) -> Result<DiagnosticSeries> {
    check_radii(field.grid(), radii)?;
    let ints = FieldIntegrals::new(field)?;
    let values = radii
        .iter()
        .map(|&r| {
            let m = ints.boundary_mass(r)?;
            if m < 1e-30 {
                return Err(LabError::Degenerate(format!("field vanishes on the circle r = {r}")));
            }
            Ok(r * ints.dirichlet(r)? / m)
        })
        .collect::<Result<_>>()?;
    Ok(DiagnosticSeries { radii: radii.to_vec(), values, kind: SeriesKind::FrequencyN, alpha: None })
}

/// `W(r) = r^{−2α}∫_{B_r}|∇u|² − α r^{−1−2α}∫_{∂B_r}|u|²`.
pub fn weiss_w<const D: usize>(field: &GridField<D>, radii: &[f64], alpha: f64) -> Result<DiagnosticSeries> {
    check_radii(field.grid(), radii)?;
    let ints = FieldIntegrals::new(field)?;
    let values = radii
        .iter()
        .map(|&r| weiss_at(&ints, r, alpha))
        .collect::<Result<_>>()?;
    Ok(DiagnosticSeries { radii: radii.to_vec(), values, kind: SeriesKind::WeissW, alpha: Some(alpha) })
}

fn weiss_at<const D: usize>(ints: &FieldIntegrals<'_, D>, r: f64, alpha: f64) -> Result<f64> {
    Ok(r.powf(-2.0 * alpha) * ints.dirichlet(r)? - alpha * r.powf(-1.0 - 2.0 * alpha) * ints.boundary_mass(r)?)
}

/// Ring sums of `|∂_r(u/r^α)|²`, differentiating `r^{−α}u` in `log r`.
fn radial_homogeneity_sums<const D: usize>(field: &GridField<D>, alpha: f64) -> Vec<f64> {
    let scaled = field.map(|r, _, v| v.map(|x| x * r.powf(-alpha)));
    let dt = log_derivative(&scaled);
    let grid = field.grid();
    let nt = grid.n_theta();
    let density: Vec<f64> = dt
        .iter()
        .enumerate()
        .map(|(k, v)| v.iter().map(|x| x * x).sum::<f64>() / grid.radii()[k / nt].powi(2))
        .collect();
    grid.ring_sums(&density)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeissResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub raw: f64,
    pub relative: f64,
}

/// `|W(r₂) − W(r₁) − 2∫_{r₁<|x|<r₂} |∂_r(u/r^α)|² r^{−0}|`, raw and relative to
/// the larger side.
pub fn weiss_identity_check<const D: usize>(field: &GridField<D>, r1: f64, r2: f64, alpha: f64) -> Result<WeissResidual> {
    check_radii(field.grid(), &[r1, r2])?;
    let ints = FieldIntegrals::new(field)?;
    let lhs = weiss_at(&ints, r2, alpha)? - weiss_at(&ints, r1, alpha)?;
    let sums = radial_homogeneity_sums(field, alpha);
    let rhs = 2.0 * field.grid().power_integral(&sums, r1, r2)?;
    let raw = (lhs - rhs).abs();
    let scale = lhs.abs().max(rhs.abs());
    Ok(WeissResidual { lhs, rhs, raw, relative: if scale > 0.0 { raw / scale } else { 0.0 } })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingDeviation {
    pub series: DiagnosticSeries,
    /// `|log τ|^{1/2} (2∫_{B₁}|∂_r(u/r^α)|²)^{1/2}` per `τ`.
    pub bounds: Vec<f64>,
}

impl RingDeviation {
    /// Largest `deviation − bound`; nonpositive when every bound holds.
    pub fn worst_excess(&self) -> f64 {
        self.series.values.iter().zip(&self.bounds).map(|(d, b)| d - b).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `‖τ^{−α}u(τ,·) − u(1,·)‖_{L²(S¹)}` and its Cauchy–Schwarz bound.
pub fn ring_deviation<const D: usize>(field: &GridField<D>, taus: &[f64], alpha: f64) -> Result<RingDeviation> {
    let grid = field.grid();
    check_radii(grid, taus)?;
    let outer = field.restrict(1.0)?;
    let sums = radial_homogeneity_sums(field, alpha);
    let energy = grid.power_integral(&sums, grid.r_inner(), 1.0)?;
    let mut values = Vec::with_capacity(taus.len());
    let mut bounds = Vec::with_capacity(taus.len());
    for &tau in taus {
        let ring = field.restrict_normalized(tau, alpha)?;
        let d2: f64 = ring
            .iter()
            .zip(&outer)
            .map(|(a, b)| (0..D).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>())
            .sum::<f64>()
            * grid.dtheta();
        values.push(d2.sqrt());
        bounds.push(tau.ln().abs().sqrt() * (2.0 * energy).sqrt());
    }
    Ok(RingDeviation {
        series: DiagnosticSeries { radii: taus.to_vec(), values, kind: SeriesKind::RingDeviation, alpha: Some(alpha) },
        bounds,
    })
}

/// Dyadic radii `2^{−k}` inside `[lo, hi]`, ascending.
pub fn dyadic_radii(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = 1.0;
    while r >= lo {
        if r <= hi {
            out.push(r);
        }
        r *= 0.5;
    }
    out.reverse();
    out
}

/// Monotonicity slack `1e−6 + C_grid·h²`, where `C_grid·h²` is the largest
/// step of the same series on `reference`: the discrete minimizer of the
/// unperturbed homogeneous problem on the same grid, whose exact series is constant.
pub fn calibrated_slack<const D: usize>(reference: &GridField<D>, kind: SeriesKind, radii: &[f64], alpha: f64) -> Result<f64> {
    let series = match kind {
        SeriesKind::HeightA => height_a(reference, radii, alpha)?,
        SeriesKind::FrequencyN => frequency_n(reference, radii)?,
        SeriesKind::WeissW => weiss_w(reference, radii, alpha)?,
        SeriesKind::RingDeviation | SeriesKind::TangentResidual => return Ok(1e-6),
    };
    let worst = series.values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    Ok(1e-6 + worst)
}
